//! Orthonormal polynomial bases in `L^2(e^{-2nQ} τ)`.
//!
//! The basis is obtained from the triangular factor `R` of the weighted
//! node-monomial matrix `A` (rows `sqrt(τ_i) e^{-nQ(x_i)} x_i^β`): the columns
//! of `A R^{-1}` are orthonormal, so `C = R^{-1}` maps monomials to the
//! orthonormal polynomials. The factorization runs at the requested
//! precision; the finished coefficients are kept in double-double.

use std::collections::HashMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DiscreteMeasure, MultiIndex, MultiIndexOrder, WeightedSet};
use crate::linalg::{normalize_diagonal, upper_inverse, TriangularAccumulator};
use crate::precision::{Big, Cx, Dd, DdComplex, Precision, Real};

pub const DEFAULT_PRECISION_BITS: u32 = 256;

/// Where a basis came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub set: String,
    pub weight_expr: String,
    pub measure_nodes: usize,
    pub measure_exactness: u32,
    pub precision_bits: u32,
}

/// `p_{n,α} = Σ_{β ⪯ α} C[β,α] z^β` with `C[α,α] = a_{n,α} > 0`.
#[derive(Clone, Debug)]
pub struct OrthonormalBasis {
    n: u32,
    order: MultiIndexOrder,
    precision_bits: u32,
    /// `columns[α][β]` for `β <= α` in the order.
    columns: Vec<Vec<DdComplex>>,
    /// Decimal strings at the working precision, kept when it exceeds
    /// double-double.
    extended: Option<Vec<Vec<[String; 2]>>>,
    provenance: Provenance,
}

/// Weighted node-monomial matrix in the working precision.
pub fn weighted_rows<R: Real>(
    measure: &DiscreteMeasure,
    set: &WeightedSet,
    order: &MultiIndexOrder,
    n: u32,
    bits: u32,
) -> Result<Vec<Vec<Cx<R>>>> {
    let mut rows = Vec::with_capacity(measure.len());
    for_each_weighted_row::<R, _>(measure, set, order, n, bits, |r| rows.push(r))?;
    Ok(rows)
}

fn for_each_weighted_row<R: Real, F: FnMut(Vec<Cx<R>>)>(
    measure: &DiscreteMeasure,
    set: &WeightedSet,
    order: &MultiIndexOrder,
    n: u32,
    bits: u32,
    mut sink: F,
) -> Result<()> {
    let d = order.dim();
    let deg = order.degree() as usize;
    for (x, tw) in measure.iter() {
        let q = set.q(x)?;
        let scale = tw.sqrt() * (-(n as f64) * q).exp();
        let scale = R::from_f64(scale, bits);
        // powers[j][e] = x_j^e in the working precision
        let powers: Vec<Vec<Cx<R>>> = (0..d)
            .map(|j| {
                let z = Cx::<R>::from_c64(x[j], bits);
                let mut p = Vec::with_capacity(deg + 1);
                p.push(Cx::from_real(R::from_f64(1.0, bits), bits));
                for e in 1..=deg {
                    let next = p[e - 1].mul(&z);
                    p.push(next);
                }
                p
            })
            .collect();
        let row = order
            .indices()
            .iter()
            .map(|a| {
                let mut v = Cx::from_real(scale.clone(), bits);
                for (j, &e) in a.exps().iter().enumerate() {
                    if e > 0 {
                        v = v.mul(&powers[j][e as usize]);
                    }
                }
                v
            })
            .collect();
        sink(row);
    }
    Ok(())
}

struct Factored {
    columns: Vec<Vec<DdComplex>>,
    extended: Option<Vec<Vec<[String; 2]>>>,
}

fn factor<R: Real>(
    measure: &DiscreteMeasure,
    set: &WeightedSet,
    order: &MultiIndexOrder,
    n: u32,
    bits: u32,
    keep_text: bool,
) -> Result<Factored> {
    let k = order.len();
    let mut acc = TriangularAccumulator::<R>::new(k, bits);
    for_each_weighted_row::<R, _>(measure, set, order, n, bits, |r| acc.push_row(r))?;
    let (mut r, col_norm2) = acc.finish();
    normalize_diagonal(&mut r, bits);
    // a pivot that lost more than half the working digits is not trusted
    let tol = 2f64.powi(-(bits as i32) / 2);
    for j in 0..k {
        let cn = col_norm2[j].sqrt();
        let ratio = if cn.is_zero() {
            0.0
        } else {
            r[j][j].re.div(&cn).to_f64()
        };
        if !(ratio > tol) {
            return Err(Error::PrecisionInsufficient {
                column: j,
                index: order.get(j).exps().to_vec(),
                ratio,
                bits,
            });
        }
    }
    let c = upper_inverse(&r, bits);
    let columns = (0..k)
        .map(|a| {
            (0..=a)
                .map(|b| DdComplex {
                    re: c[b][a].re.to_dd(),
                    im: c[b][a].im.to_dd(),
                })
                .collect()
        })
        .collect();
    let extended = keep_text.then(|| {
        (0..k)
            .map(|a| {
                (0..=a)
                    .map(|b| [c[b][a].re.to_decimal(bits), c[b][a].im.to_decimal(bits)])
                    .collect()
            })
            .collect()
    });
    Ok(Factored { columns, extended })
}

/// Torus-invariant measure with a radial weight: distinct monomials are
/// exactly orthogonal, so `C` is diagonal with `C[α,α] = 1/‖z^α‖`.
///
/// `‖z^α‖²` depends on a node only through its weight and moduli, so nodes
/// sharing a modulus tuple (to 2^-40) are merged first; the weights are
/// summed in double-double, where each squared `f64` weight is exact.
fn factor_diagonal<R: Real>(
    measure: &DiscreteMeasure,
    set: &WeightedSet,
    order: &MultiIndexOrder,
    n: u32,
    bits: u32,
    keep_text: bool,
) -> Result<Factored> {
    let k = order.len();
    let d = order.dim();
    let deg = order.degree() as usize;
    let mut groups: Vec<(Vec<Complex64>, Dd)> = Vec::new();
    let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
    for (x, tw) in measure.iter() {
        let q = set.q(x)?;
        let scale = tw.sqrt() * (-(n as f64) * q).exp();
        let w = Dd::new(scale).mul_f64(scale);
        let key: Vec<i64> = x.iter().map(|z| (z.norm() * 2f64.powi(40)).round() as i64).collect();
        match index.get(&key) {
            Some(&g) => groups[g].1 = groups[g].1.add_dd(w),
            None => {
                index.insert(key, groups.len());
                groups.push((x.to_vec(), w));
            }
        }
    }
    let mut norms = vec![R::from_f64(0.0, bits); k];
    for (x, w) in &groups {
        let w = R::from_f64(w.hi, bits).add(&R::from_f64(w.lo, bits));
        // powers[j][e] = |x_j|^{2e} in the working precision
        let powers: Vec<Vec<R>> = (0..d)
            .map(|j| {
                let r2 = Cx::<R>::from_c64(x[j], bits).norm_sqr();
                let mut p = vec![R::from_f64(1.0, bits)];
                for e in 1..=deg {
                    let next = p[e - 1].mul(&r2);
                    p.push(next);
                }
                p
            })
            .collect();
        for (acc, a) in norms.iter_mut().zip(order.indices()) {
            let mut v = w.clone();
            for (j, &e) in a.exps().iter().enumerate() {
                if e > 0 {
                    v = v.mul(&powers[j][e as usize]);
                }
            }
            *acc = acc.add(&v);
        }
    }
    let one = R::from_f64(1.0, bits);
    let mut columns = Vec::with_capacity(k);
    let mut text = Vec::with_capacity(k);
    for (j, nrm) in norms.iter().enumerate() {
        if nrm.is_zero() {
            return Err(Error::PrecisionInsufficient {
                column: j,
                index: order.get(j).exps().to_vec(),
                ratio: 0.0,
                bits,
            });
        }
        let a = one.div(&nrm.sqrt());
        let mut col = vec![DdComplex::ZERO; j + 1];
        col[j] = DdComplex {
            re: a.to_dd(),
            im: Dd::ZERO,
        };
        columns.push(col);
        if keep_text {
            let mut t = vec![["0".to_string(), "0".to_string()]; j + 1];
            t[j][0] = a.to_decimal(bits);
            text.push(t);
        }
    }
    Ok(Factored {
        columns,
        extended: keep_text.then_some(text),
    })
}

/// Per-point evaluation result: `values[α] = p_{n,α}(z) / ρ^n` with
/// `ρ = max(1, max_j |z_j|)`, plus `log ρ`.
#[derive(Clone, Debug)]
pub struct ScaledValues {
    pub scaled: Vec<Complex64>,
    pub log_rho: f64,
    pub n: u32,
}

impl ScaledValues {
    /// `(1/n) log |p_{n,α}(z)|` (−∞ for exact zeros).
    pub fn log_abs_over_n(&self, i: usize) -> f64 {
        let n = self.n.max(1) as f64;
        self.scaled[i].norm().ln() / n + self.log_rho
    }

    /// `log Σ |p_{n,α}(z)|^2` computed without overflow.
    pub fn log_sum_sq(&self) -> f64 {
        let m = self.scaled.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if m == 0.0 {
            return f64::NEG_INFINITY;
        }
        let s: f64 = self.scaled.iter().map(|v| (v.norm() / m).powi(2)).sum();
        2.0 * m.ln() + s.ln() + 2.0 * self.n as f64 * self.log_rho
    }
}

impl OrthonormalBasis {
    /// Builds the basis of `P_n` orthonormal in `L^2(e^{-2nQ} τ)`.
    ///
    /// Torus-invariant measures with radial weights take the exact diagonal
    /// shortcut; everything else goes through the QR factorization.
    pub fn build(measure: &DiscreteMeasure, set: &WeightedSet, n: u32, precision_bits: u32) -> Result<Self> {
        let diagonal = measure.torus_invariant && set.weight_expr.is_radial();
        Self::build_impl(measure, set, n, precision_bits, diagonal)
    }

    /// Always factors the full weighted monomial matrix.
    pub fn build_dense(measure: &DiscreteMeasure, set: &WeightedSet, n: u32, precision_bits: u32) -> Result<Self> {
        Self::build_impl(measure, set, n, precision_bits, false)
    }

    fn build_impl(
        measure: &DiscreteMeasure,
        set: &WeightedSet,
        n: u32,
        precision_bits: u32,
        diagonal: bool,
    ) -> Result<Self> {
        set.validate()?;
        if measure.dim != set.dim() {
            return Err(Error::Argument(format!(
                "measure lives in C^{} but the set in C^{}",
                measure.dim,
                set.dim()
            )));
        }
        if measure.exactness < 2 * n {
            return Err(Error::Argument(format!(
                "measure exactness {} below 2n = {}",
                measure.exactness,
                2 * n
            )));
        }
        let order = MultiIndexOrder::new(set.dim(), n)?;
        let precision = Precision::from_bits(precision_bits)?;
        let bits = precision.effective_bits();
        let f = match (precision, diagonal) {
            (Precision::Double, false) => factor::<f64>(measure, set, &order, n, bits, false)?,
            (Precision::DoubleDouble, false) => factor::<Dd>(measure, set, &order, n, bits, false)?,
            (Precision::Multi(b), false) => factor::<Big>(measure, set, &order, n, b, true)?,
            (Precision::Double, true) => factor_diagonal::<f64>(measure, set, &order, n, bits, false)?,
            (Precision::DoubleDouble, true) => factor_diagonal::<Dd>(measure, set, &order, n, bits, false)?,
            (Precision::Multi(b), true) => factor_diagonal::<Big>(measure, set, &order, n, b, true)?,
        };
        Ok(OrthonormalBasis {
            n,
            order,
            precision_bits,
            columns: f.columns,
            extended: f.extended,
            provenance: Provenance {
                set: set.label(),
                weight_expr: serde_json::to_string(&set.weight_expr)?,
                measure_nodes: measure.len(),
                measure_exactness: measure.exactness,
                precision_bits,
            },
        })
    }

    /// Basis built on the set's own reference measure with exactness `2n`.
    pub fn for_set(set: &WeightedSet, n: u32, precision_bits: u32) -> Result<Self> {
        let m = crate::geometry::quadrature_measure(set, 2 * n)?;
        Self::build(&m, set, n, precision_bits)
    }

    pub fn degree(&self) -> u32 {
        self.n
    }

    pub fn order(&self) -> &MultiIndexOrder {
        &self.order
    }

    pub fn dim(&self) -> usize {
        self.order.dim()
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// `C[β, α]` (zero when `β` comes after `α`).
    pub fn coefficient(&self, beta: usize, alpha: usize) -> Complex64 {
        if beta > alpha {
            Complex64::new(0.0, 0.0)
        } else {
            self.columns[alpha][beta].to_c64()
        }
    }

    pub fn coefficient_dd(&self, beta: usize, alpha: usize) -> DdComplex {
        if beta > alpha {
            DdComplex::ZERO
        } else {
            self.columns[alpha][beta]
        }
    }

    /// Monomial coefficients of `p_{n,α}` in the order.
    pub fn column(&self, alpha: usize) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = self.columns[alpha].iter().map(|c| c.to_c64()).collect();
        out.resize(self.len(), Complex64::new(0.0, 0.0));
        out
    }

    /// `a_{n,α}`, positive reals.
    pub fn leading_coefficients(&self) -> Vec<f64> {
        self.columns.iter().enumerate().map(|(a, col)| col[a].re.value()).collect()
    }

    pub fn leading_coefficient(&self, alpha: &MultiIndex) -> Option<f64> {
        self.order
            .position(alpha)
            .map(|i| self.columns[i][i].re.value())
    }

    /// Monomials `z^β / ρ^n` at a point, in double-double.
    pub(crate) fn scaled_monomials(&self, point: &[Complex64]) -> (Vec<DdComplex>, f64) {
        let rho = point.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let n = self.n as usize;
        let inv = 1.0 / rho;
        let powers: Vec<Vec<DdComplex>> = point
            .iter()
            .map(|z| {
                let zs = DdComplex::from_c64(*z).mul(DdComplex::from_c64(Complex64::new(inv, 0.0)));
                let mut p = Vec::with_capacity(n + 1);
                p.push(DdComplex::from_c64(Complex64::new(1.0, 0.0)));
                for e in 1..=n {
                    let next = p[e - 1].mul(zs);
                    p.push(next);
                }
                p
            })
            .collect();
        // ρ^{|β| - n} ≤ 1 completes the scaling
        let rpow: Vec<f64> = (0..=n).map(|k| inv.powi((n - k) as i32)).collect();
        let mono = self
            .order
            .indices()
            .iter()
            .map(|a| {
                let mut v = DdComplex::from_c64(Complex64::new(rpow[a.degree() as usize], 0.0));
                for (j, &e) in a.exps().iter().enumerate() {
                    if e > 0 {
                        v = v.mul(powers[j][e as usize]);
                    }
                }
                v
            })
            .collect();
        (mono, rho.ln())
    }

    /// Basis values scaled by `ρ^{-n}`; see [`ScaledValues`].
    pub fn evaluate_scaled(&self, point: &[Complex64]) -> ScaledValues {
        assert_eq!(point.len(), self.dim(), "point dimension");
        let (mono, log_rho) = self.scaled_monomials(point);
        let scaled = self
            .columns
            .iter()
            .map(|col| {
                col.iter()
                    .zip(&mono)
                    .fold(DdComplex::ZERO, |acc, (c, m)| acc.add(c.mul(*m)))
                    .to_c64()
            })
            .collect();
        ScaledValues {
            scaled,
            log_rho,
            n: self.n,
        }
    }

    /// `(p_{n,α}(z))_α`. The flag is set when some value overflowed to ±∞.
    pub fn evaluate_checked(&self, point: &[Complex64]) -> (Vec<Complex64>, bool) {
        let sv = self.evaluate_scaled(point);
        let factor = (self.n as f64 * sv.log_rho).exp();
        let vals: Vec<Complex64> = sv
            .scaled
            .iter()
            .map(|v| {
                if *v == Complex64::new(0.0, 0.0) {
                    *v
                } else {
                    let r = v * factor;
                    if r.re.is_finite() && r.im.is_finite() {
                        r
                    } else {
                        Complex64::new(
                            if v.re == 0.0 { 0.0 } else { f64::INFINITY.copysign(v.re) },
                            if v.im == 0.0 { 0.0 } else { f64::INFINITY.copysign(v.im) },
                        )
                    }
                }
            })
            .collect();
        let overflow = vals.iter().any(|v| !v.re.is_finite() || !v.im.is_finite());
        (vals, overflow)
    }

    pub fn evaluate(&self, point: &[Complex64]) -> Vec<Complex64> {
        self.evaluate_checked(point).0
    }

    /// Gram matrix of the basis against the weighted measure, in double-double;
    /// returns `max |G - I|`.
    pub fn orthonormality_residual(&self, measure: &DiscreteMeasure, set: &WeightedSet) -> Result<f64> {
        let k = self.len();
        let mut g = vec![vec![DdComplex::ZERO; k]; k];
        for (x, tw) in measure.iter() {
            let q = set.q(x)?;
            let (mono, log_rho) = self.scaled_monomials(x);
            let s = tw.sqrt() * (self.n as f64 * (log_rho - q)).exp();
            let vals: Vec<DdComplex> = self
                .columns
                .iter()
                .map(|col| {
                    let v = col
                        .iter()
                        .zip(&mono)
                        .fold(DdComplex::ZERO, |acc, (c, m)| acc.add(c.mul(*m)));
                    v.mul(DdComplex::from_c64(Complex64::new(s, 0.0)))
                })
                .collect();
            for i in 0..k {
                let ci = DdComplex {
                    re: vals[i].re,
                    im: Dd::new(0.0).sub_dd(vals[i].im),
                };
                for j in 0..k {
                    g[i][j] = g[i][j].add(ci.mul(vals[j]));
                }
            }
        }
        let mut worst: f64 = 0.0;
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v.to_c64() - target).norm());
            }
        }
        Ok(worst)
    }

    /// Optimal constant `M_n = sqrt(max_z w(z)^{2n} B_n(z))` over the given
    /// sample of `K`.
    pub fn bernstein_markov_constant(&self, set: &WeightedSet, nodes: &[Vec<Complex64>]) -> Result<f64> {
        if nodes.is_empty() {
            return Err(Error::Argument("empty node set".into()));
        }
        let mut best = f64::NEG_INFINITY;
        for p in nodes {
            let q = set.q(p)?;
            let lb = self.evaluate_scaled(p).log_sum_sq();
            best = best.max(lb - 2.0 * self.n as f64 * q);
        }
        Ok((0.5 * best).exp())
    }

    pub fn to_file_format(&self) -> BasisFile {
        let k = self.len();
        let mut c = Vec::with_capacity(k * k);
        for b in 0..k {
            for a in 0..k {
                let pair = if b > a {
                    ["0".to_string(), "0".to_string()]
                } else if let Some(ext) = &self.extended {
                    ext[a][b].clone()
                } else {
                    let v = self.columns[a][b];
                    [v.re.to_decimal(106), v.im.to_decimal(106)]
                };
                c.push(pair);
            }
        }
        BasisFile {
            order: self.order.indices().iter().map(|a| a.exps().to_vec()).collect(),
            n: self.n,
            precision_bits: self.precision_bits,
            c,
            provenance: Some(self.provenance.clone()),
        }
    }

    pub fn from_file_format(f: &BasisFile) -> Result<Self> {
        let dim = f.order.first().map(|a| a.len()).unwrap_or(1);
        let order = MultiIndexOrder::new(dim, f.n)?;
        let k = order.len();
        let listed: Vec<Vec<u32>> = order.indices().iter().map(|a| a.exps().to_vec()).collect();
        if listed != f.order {
            return Err(Error::Parse("basis order does not match graded lexicographic order".into()));
        }
        if f.c.len() != k * k {
            return Err(Error::LengthMismatch {
                expected: k * k,
                got: f.c.len(),
            });
        }
        let precision = Precision::from_bits(f.precision_bits)?;
        let mut columns = vec![Vec::new(); k];
        let mut extended = matches!(precision, Precision::Multi(_)).then(|| vec![Vec::new(); k]);
        for (a, col) in columns.iter_mut().enumerate() {
            for b in 0..k {
                let [re, im] = &f.c[b * k + a];
                if b > a {
                    let zr = Dd::parse_decimal(re, 106)?;
                    let zi = Dd::parse_decimal(im, 106)?;
                    if zr.hi != 0.0 || zi.hi != 0.0 {
                        return Err(Error::Parse(format!("C[{b},{a}] below the diagonal is nonzero")));
                    }
                    continue;
                }
                col.push(DdComplex {
                    re: Dd::parse_decimal(re, 106)?,
                    im: Dd::parse_decimal(im, 106)?,
                });
                if let Some(ext) = extended.as_mut() {
                    ext[a].push([re.clone(), im.clone()]);
                }
            }
            if !(col[a].re.hi > 0.0) || col[a].im.hi != 0.0 {
                return Err(Error::Parse(format!("diagonal entry {a} is not positive real")));
            }
        }
        Ok(OrthonormalBasis {
            n: f.n,
            order,
            precision_bits: f.precision_bits,
            columns,
            extended,
            provenance: f.provenance.clone().unwrap_or(Provenance {
                set: "imported".into(),
                weight_expr: String::new(),
                measure_nodes: 0,
                measure_exactness: 0,
                precision_bits: f.precision_bits,
            }),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.to_file_format())?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f: BasisFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        Self::from_file_format(&f)
    }
}

/// On-disk basis: `C` row-major as `[re, im]` decimal string pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BasisFile {
    pub order: Vec<Vec<u32>>,
    pub n: u32,
    pub precision_bits: u32,
    #[serde(rename = "C")]
    pub c: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{quadrature_measure, SetKind, Support, WeightExpr};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Chebyshev T_j coefficients by the three-term recurrence.
    fn chebyshev_t(j: usize) -> Vec<f64> {
        let mut t0 = vec![1.0];
        if j == 0 {
            return t0;
        }
        let mut t1 = vec![0.0, 1.0];
        for _ in 1..j {
            let mut t2 = vec![0.0; t1.len() + 1];
            for (i, v) in t1.iter().enumerate() {
                t2[i + 1] += 2.0 * v;
            }
            for (i, v) in t0.iter().enumerate() {
                t2[i] -= v;
            }
            t0 = t1;
            t1 = t2;
        }
        t1
    }

    #[test]
    fn circle_basis_is_monomials() {
        for n in [0, 1, 5, 17] {
            let b = OrthonormalBasis::for_set(&WeightedSet::unit_circle(), n, 64).unwrap();
            for a in 0..b.len() {
                for bb in 0..b.len() {
                    let want = if a == bb { 1.0 } else { 0.0 };
                    assert!((b.coefficient(bb, a) - want).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn interval_basis_is_scaled_chebyshev() {
        let n = 12;
        let b = OrthonormalBasis::for_set(&WeightedSet::unit_interval(), n, 128).unwrap();
        let a = b.leading_coefficients();
        assert!((a[0] - 1.0).abs() < 1e-14);
        for j in 1..=n as usize {
            let t = chebyshev_t(j);
            for (k, tk) in t.iter().enumerate() {
                let want = 2f64.sqrt() * tk;
                assert!((b.coefficient(k, j).re - want).abs() < 1e-10 * want.abs().max(1.0));
            }
            assert!((a[j] - 2f64.sqrt() * 2f64.powi(j as i32 - 1)).abs() < 1e-10 * a[j]);
        }
        assert!((a[5] - 22.627416997969522).abs() < 1e-10);
    }

    #[test]
    fn evaluation_examples() {
        let b = OrthonormalBasis::for_set(&WeightedSet::unit_circle(), 3, 64).unwrap();
        let v = b.evaluate(&[c(0.0)]);
        for (j, z) in v.iter().enumerate() {
            assert!((z - c(if j == 0 { 1.0 } else { 0.0 })).norm() < 1e-14);
        }
        let v = b.evaluate(&[c(2.0)]);
        for (j, z) in v.iter().enumerate() {
            assert!((z - c(2f64.powi(j as i32))).norm() < 1e-12);
        }
        let b = OrthonormalBasis::for_set(&WeightedSet::unit_interval(), 8, 128).unwrap();
        let v = b.evaluate(&[c(1.0)]);
        assert!((v[0].re - 1.0).abs() < 1e-12);
        for z in &v[1..] {
            assert!((z.re - 2f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn overflow_sets_flag() {
        let b = OrthonormalBasis::for_set(&WeightedSet::unit_circle(), 300, 53).unwrap();
        let (v, flag) = b.evaluate_checked(&[c(1e3)]);
        assert!(flag);
        assert!(v[300].re.is_infinite() && v[300].re > 0.0);
        let (_, flag) = b.evaluate_checked(&[c(0.5)]);
        assert!(!flag);
    }

    #[test]
    fn constant_shift_in_q_scales_everything() {
        let cst = 0.3;
        let n = 6;
        let base = WeightedSet::ginibre_disk();
        let mut shifted = base.clone();
        shifted.weight_expr = WeightExpr::Sum {
            terms: vec![base.weight_expr.clone(), WeightExpr::Const { value: cst }],
        };
        let b0 = OrthonormalBasis::for_set(&base, n, 64).unwrap();
        let b1 = OrthonormalBasis::for_set(&shifted, n, 64).unwrap();
        let f = (n as f64 * cst).exp();
        for (x, y) in b0.leading_coefficients().iter().zip(b1.leading_coefficients()) {
            assert!((x * f - y).abs() < 1e-12 * y);
        }
        let z = [Complex64::new(0.3, -0.7)];
        for (x, y) in b0.evaluate(&z).iter().zip(b1.evaluate(&z)) {
            assert!((x * f - y).norm() < 1e-12 * y.norm().max(1e-300));
        }
        let nodes = base.sup_nodes(200);
        let m0 = b0.bernstein_markov_constant(&base, &nodes).unwrap();
        let m1 = b1.bernstein_markov_constant(&shifted, &nodes).unwrap();
        assert!((m0 - m1).abs() < 1e-10 * m0);
    }

    #[test]
    fn orthonormality_on_shipped_geometries() {
        let cases: Vec<(WeightedSet, u32, u32)> = vec![
            (WeightedSet::unit_circle(), 40, 64),
            (WeightedSet::unit_interval(), 40, 256),
            (WeightedSet::ginibre_disk(), 40, 64),
            (
                WeightedSet::new(SetKind::Interval { a: -1.0, b: 1.0 }, WeightExpr::Scale {
                    factor: 0.5,
                    expr: Box::new(WeightExpr::Re { coord: 0 }),
                }),
                25,
                128,
            ),
            (
                WeightedSet::new(SetKind::Polydisk { radius: 1.0 }, WeightExpr::zero())
                    .with_support(Support::Boundary),
                12,
                53,
            ),
            (WeightedSet::new(SetKind::Ball { radius: 1.0 }, WeightExpr::zero()), 6, 53),
        ];
        for (set, n, bits) in cases {
            let m = quadrature_measure(&set, 2 * n).unwrap();
            let b = OrthonormalBasis::build(&m, &set, n, bits).unwrap();
            let res = b.orthonormality_residual(&m, &set).unwrap();
            assert!(res <= 1e-8, "{} n={n}: residual {res}", set.label());
            // triangular by construction, positive real diagonal
            for (i, a) in b.leading_coefficients().iter().enumerate() {
                assert!(*a > 0.0);
                assert_eq!(b.coefficient_dd(i, i).im.hi, 0.0);
                if i + 1 < b.len() {
                    assert_eq!(b.coefficient(i + 1, i), Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn diagonal_shortcut_agrees_with_dense_factorization() {
        for (set, n) in [
            (WeightedSet::unit_circle(), 12),
            (WeightedSet::ginibre_disk(), 10),
            (WeightedSet::new(SetKind::Ellipsoid { r: 0.5, a: 2.0 }, WeightExpr::zero()), 4),
        ] {
            let m = quadrature_measure(&set, 2 * n).unwrap();
            let fast = OrthonormalBasis::build(&m, &set, n, 106).unwrap();
            let dense = OrthonormalBasis::build_dense(&m, &set, n, 106).unwrap();
            for a in 0..fast.len() {
                let scale = fast.leading_coefficients()[a];
                for b in 0..=a {
                    let d = (fast.coefficient(b, a) - dense.coefficient(b, a)).norm();
                    assert!(d <= 1e-12 * scale, "{} ({b},{a}): {d}", set.label());
                }
            }
        }
    }

    #[test]
    fn double_precision_fails_on_high_degree_interval() {
        let err = OrthonormalBasis::for_set(&WeightedSet::unit_interval(), 40, 53).unwrap_err();
        match err {
            Error::PrecisionInsufficient { column, .. } => assert!(column > 10),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let set = WeightedSet::unit_circle();
        let m = quadrature_measure(&set, 4).unwrap();
        assert!(OrthonormalBasis::build(&m, &set, 3, 64).is_err());
        assert!(OrthonormalBasis::build(&m, &set, 2, 32).is_err());
    }

    #[test]
    fn bernstein_markov_examples() {
        let set = WeightedSet::unit_circle();
        let b = OrthonormalBasis::for_set(&set, 10, 64).unwrap();
        let nodes = set.sup_nodes(500);
        let m = b.bernstein_markov_constant(&set, &nodes).unwrap();
        assert!((m - 11f64.sqrt()).abs() < 1e-10);
        let b = OrthonormalBasis::for_set(&set, 40, 64).unwrap();
        let m = b.bernstein_markov_constant(&set, &set.sup_nodes(2000)).unwrap();
        assert!(m.powf(1.0 / 40.0) <= 1.07);
        assert!(b.bernstein_markov_constant(&set, &[]).is_err());
    }

    #[test]
    fn interval_leading_coefficient_asymptotics() {
        let b = OrthonormalBasis::for_set(&WeightedSet::unit_interval(), 30, 256).unwrap();
        let a = b.leading_coefficients()[30];
        assert!((a.powf(1.0 / 30.0) - 2.0).abs() < 0.1);
    }

    #[test]
    fn file_round_trip_keeps_extended_digits() {
        let b = OrthonormalBasis::for_set(&WeightedSet::unit_interval(), 10, 256).unwrap();
        let f = b.to_file_format();
        assert_eq!(f.c.len(), 11 * 11);
        // 256-bit strings carry ~79 significant digits
        assert!(f.c[10 * 11 + 10][0].len() > 60);
        let back = OrthonormalBasis::from_file_format(&f).unwrap();
        for a in 0..b.len() {
            for bb in 0..=a {
                assert_eq!(back.coefficient_dd(bb, a), b.coefficient_dd(bb, a));
            }
        }
        let text = serde_json::to_string(&back.to_file_format()).unwrap();
        assert_eq!(text, serde_json::to_string(&f).unwrap());
    }
}
