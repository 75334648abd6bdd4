//! Dense complex linear algebra over any [`Real`] backend.
//!
//! The triangular factor of a tall matrix is accumulated block by block
//! (stack the previous `R` on top of the next block of rows and re-factor with
//! Householder reflections), so the full matrix is never held in memory.

use crate::error::{Error, Result};
use crate::precision::{Cx, Real};

/// Row-major dense matrix of generic complex entries.
pub type Mat<R> = Vec<Vec<Cx<R>>>;

/// Householder-reduce `m` (rows × k) in place; on return the leading
/// `min(rows, k)` rows hold the upper-triangular factor.
fn householder_in_place<R: Real>(m: &mut [Vec<Cx<R>>], k: usize, bits: u32) {
    let rows = m.len();
    let zero = R::from_f64(0.0, bits);
    let two = R::from_f64(2.0, bits);
    for j in 0..k.min(rows) {
        let mut norm2 = zero.clone();
        for row in m.iter().skip(j) {
            norm2 = norm2.add(&row[j].norm_sqr());
        }
        if norm2.is_zero() {
            continue;
        }
        let norm = norm2.sqrt();
        let x0 = m[j][j].clone();
        let x0_abs = x0.abs();
        let phase = if x0_abs.is_zero() {
            Cx::from_real(R::from_f64(1.0, bits), bits)
        } else {
            Cx::new(x0.re.div(&x0_abs), x0.im.div(&x0_abs))
        };
        let alpha = phase.scale(&norm).neg();
        // v = x - alpha e1, |v|^2 = 2 |x| (|x| + |x0|)
        let v0 = x0.sub(&alpha);
        let vnorm2 = two.mul(&norm).mul(&norm.add(&x0_abs));
        if vnorm2.is_zero() {
            continue;
        }
        for c in (j + 1)..m[0].len() {
            let mut s = v0.conj_mul(&m[j][c]);
            for row in m.iter().skip(j + 1) {
                s = s.add(&row[j].conj_mul(&row[c]));
            }
            let f = s.scale(&two.div(&vnorm2));
            m[j][c] = m[j][c].sub(&v0.mul(&f));
            for row in m.iter_mut().skip(j + 1) {
                let upd = row[j].mul(&f);
                row[c] = row[c].sub(&upd);
            }
        }
        m[j][j] = alpha;
        for row in m.iter_mut().skip(j + 1) {
            row[j] = Cx::zero(bits);
        }
    }
}

/// Accumulates the upper-triangular factor of a tall matrix fed row by row.
pub struct TriangularAccumulator<R: Real> {
    cols: usize,
    bits: u32,
    block: usize,
    buf: Mat<R>,
    col_norm2: Vec<R>,
    rows_seen: usize,
}

impl<R: Real> TriangularAccumulator<R> {
    pub fn new(cols: usize, bits: u32) -> Self {
        TriangularAccumulator {
            cols,
            bits,
            block: (4 * cols).max(256),
            buf: Vec::new(),
            col_norm2: vec![R::from_f64(0.0, bits); cols],
            rows_seen: 0,
        }
    }

    pub fn push_row(&mut self, row: Vec<Cx<R>>) {
        debug_assert_eq!(row.len(), self.cols);
        for (acc, x) in self.col_norm2.iter_mut().zip(&row) {
            *acc = acc.add(&x.norm_sqr());
        }
        self.buf.push(row);
        self.rows_seen += 1;
        if self.buf.len() >= self.cols + self.block {
            self.compress();
        }
    }

    fn compress(&mut self) {
        householder_in_place(&mut self.buf, self.cols, self.bits);
        self.buf.truncate(self.cols.min(self.buf.len()));
    }

    pub fn rows_seen(&self) -> usize {
        self.rows_seen
    }

    /// Finishes the factorization. Returns the k×k upper-triangular factor
    /// (zero-padded if fewer than k rows were pushed) and the squared column
    /// norms of the original matrix.
    pub fn finish(mut self) -> (Mat<R>, Vec<R>) {
        self.compress();
        let bits = self.bits;
        while self.buf.len() < self.cols {
            self.buf.push(vec![Cx::zero(bits); self.cols]);
        }
        (self.buf, self.col_norm2)
    }
}

/// Multiplies row `j` of `r` by the conjugate phase of `r[j][j]` so the
/// diagonal becomes real and nonnegative.
pub fn normalize_diagonal<R: Real>(r: &mut Mat<R>, bits: u32) {
    for j in 0..r.len() {
        let d = r[j][j].clone();
        let a = d.abs();
        if a.is_zero() {
            continue;
        }
        let phase_conj = Cx::new(d.re.div(&a), d.im.div(&a).neg());
        for x in r[j].iter_mut().skip(j) {
            *x = phase_conj.mul(x);
        }
        r[j][j] = Cx::from_real(a, bits);
    }
}

/// Inverse of an upper-triangular matrix with nonzero diagonal.
pub fn upper_inverse<R: Real>(r: &Mat<R>, bits: u32) -> Mat<R> {
    let k = r.len();
    let one = Cx::from_real(R::from_f64(1.0, bits), bits);
    let mut c: Mat<R> = vec![vec![Cx::zero(bits); k]; k];
    for col in 0..k {
        c[col][col] = one.div(&r[col][col]);
        for i in (0..col).rev() {
            let mut s = Cx::zero(bits);
            for l in (i + 1)..=col {
                s = s.add(&r[i][l].mul(&c[l][col]));
            }
            c[i][col] = s.neg().div(&r[i][i]);
        }
    }
    c
}

/// Solves `g x = b` for Hermitian positive definite `g` by Cholesky.
pub fn cholesky_solve<R: Real>(g: &Mat<R>, b: &[Cx<R>], bits: u32) -> Result<Vec<Cx<R>>> {
    let k = g.len();
    if b.len() != k {
        return Err(Error::LengthMismatch {
            expected: k,
            got: b.len(),
        });
    }
    let mut l: Mat<R> = vec![vec![Cx::zero(bits); k]; k];
    for j in 0..k {
        let mut d = g[j][j].re.clone();
        for p in 0..j {
            d = d.sub(&l[j][p].norm_sqr());
        }
        if !R::from_f64(0.0, bits).lt(&d) {
            return Err(Error::Domain(format!(
                "Gram matrix not positive definite at pivot {j}"
            )));
        }
        let djj = d.sqrt();
        l[j][j] = Cx::from_real(djj.clone(), bits);
        for i in (j + 1)..k {
            let mut s = g[i][j].clone();
            for p in 0..j {
                s = s.sub(&l[i][p].mul(&l[j][p].conj()));
            }
            l[i][j] = Cx::new(s.re.div(&djj), s.im.div(&djj));
        }
    }
    // forward: L y = b
    let mut y: Vec<Cx<R>> = Vec::with_capacity(k);
    for i in 0..k {
        let mut s = b[i].clone();
        for p in 0..i {
            s = s.sub(&l[i][p].mul(&y[p]));
        }
        y.push(s.div(&l[i][i]));
    }
    // backward: L^* x = y
    let mut x = vec![Cx::zero(bits); k];
    for i in (0..k).rev() {
        let mut s = y[i].clone();
        for p in (i + 1)..k {
            s = s.sub(&l[p][i].conj().mul(&x[p]));
        }
        x[i] = s.div(&l[i][i]);
    }
    Ok(x)
}

/// Least squares `min |A c - b|` in double precision via the triangular factor
/// of the augmented matrix `[A | b]`. Returns the solution and residual norm.
pub fn least_squares_f64(
    rows: impl Iterator<Item = (Vec<num_complex::Complex64>, num_complex::Complex64)>,
    k: usize,
) -> Result<(Vec<num_complex::Complex64>, f64)> {
    let mut acc = TriangularAccumulator::<f64>::new(k + 1, 53);
    for (a, b) in rows {
        let mut row: Vec<Cx<f64>> = a.iter().map(|z| Cx::new(z.re, z.im)).collect();
        row.push(Cx::new(b.re, b.im));
        acc.push_row(row);
    }
    let (r, _) = acc.finish();
    let mut c = vec![Cx::<f64>::zero(53); k];
    for i in (0..k).rev() {
        let mut s = r[i][k].clone();
        for p in (i + 1)..k {
            s = s.sub(&r[i][p].mul(&c[p]));
        }
        if r[i][i].is_zero() {
            return Err(Error::Domain(format!("least squares rank deficient at column {i}")));
        }
        c[i] = s.div(&r[i][i]);
    }
    let resid = r[k][k].abs();
    Ok((c.iter().map(|z| z.to_c64()).collect(), resid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::Dd;
    use num_complex::Complex64;

    fn to_mat(a: &[Vec<Complex64>]) -> Mat<f64> {
        a.iter()
            .map(|r| r.iter().map(|z| Cx::new(z.re, z.im)).collect())
            .collect()
    }

    fn gram(a: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
        let k = a[0].len();
        let mut g = vec![vec![Complex64::new(0.0, 0.0); k]; k];
        for row in a {
            for i in 0..k {
                for j in 0..k {
                    g[i][j] += row[i].conj() * row[j];
                }
            }
        }
        g
    }

    #[test]
    fn triangular_factor_reproduces_gram() {
        // R^* R == A^* A for a tall matrix spanning several blocks
        let rows = 700;
        let k = 5;
        let a: Vec<Vec<Complex64>> = (0..rows)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        let t = (i * 7 + j * 13) as f64;
                        Complex64::new((t * 0.37).sin(), (t * 0.11).cos())
                    })
                    .collect()
            })
            .collect();
        let mut acc = TriangularAccumulator::<f64>::new(k, 53);
        for row in to_mat(&a) {
            acc.push_row(row);
        }
        let (mut r, _) = acc.finish();
        normalize_diagonal(&mut r, 53);
        let g = gram(&a);
        for i in 0..k {
            assert!(r[i][i].im == 0.0 && r[i][i].re > 0.0);
            for j in 0..k {
                let mut s = Complex64::new(0.0, 0.0);
                for p in 0..k {
                    s += r[p][i].to_c64().conj() * r[p][j].to_c64();
                }
                assert!((s - g[i][j]).norm() < 1e-9 * g[i][i].norm().max(1.0));
            }
        }
    }

    #[test]
    fn upper_inverse_is_inverse() {
        let r: Mat<Dd> = vec![
            vec![Cx::from_c64(Complex64::new(2.0, 0.0), 0), Cx::from_c64(Complex64::new(1.0, 1.0), 0)],
            vec![Cx::zero(0), Cx::from_c64(Complex64::new(0.5, 0.0), 0)],
        ];
        let c = upper_inverse(&r, 0);
        let prod = r[0][0].mul(&c[0][1]).add(&r[0][1].mul(&c[1][1]));
        assert!(prod.to_c64().norm() < 1e-30);
        assert!((c[1][1].to_c64() - Complex64::new(2.0, 0.0)).norm() < 1e-30);
    }

    #[test]
    fn cholesky_solves_hermitian_system() {
        let g: Mat<f64> = vec![
            vec![Cx::new(4.0, 0.0), Cx::new(1.0, -1.0)],
            vec![Cx::new(1.0, 1.0), Cx::new(3.0, 0.0)],
        ];
        let x_true = [Cx::new(1.0, 2.0), Cx::new(-0.5, 0.25)];
        let b: Vec<Cx<f64>> = (0..2)
            .map(|i| g[i][0].mul(&x_true[0]).add(&g[i][1].mul(&x_true[1])))
            .collect();
        let x = cholesky_solve(&g, &b, 53).unwrap();
        for i in 0..2 {
            assert!(x[i].sub(&x_true[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn least_squares_fits_line() {
        let pts: Vec<(Vec<Complex64>, Complex64)> = (0..50)
            .map(|i| {
                let x = i as f64 / 10.0;
                (
                    vec![Complex64::new(1.0, 0.0), Complex64::new(x, 0.0)],
                    Complex64::new(3.0 - 2.0 * x, 0.5),
                )
            })
            .collect();
        let (c, res) = least_squares_f64(pts.into_iter(), 2).unwrap();
        assert!((c[0] - Complex64::new(3.0, 0.5)).norm() < 1e-12);
        assert!((c[1] - Complex64::new(-2.0, 0.0)).norm() < 1e-12);
        assert!(res < 1e-10);
    }
}
