//! Roots of univariate polynomials, empirical zero measures and
//! concentration statistics.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{Coefficients, RandomPolynomial};
use crate::error::{Error, Result};
use crate::extremal::{GridSpec, ScalarField, CLAMP_FLOOR};

const STEP_TOL: f64 = 1e-12;
/// Natural log of the smallest relative coefficient kept by [`roots_scaled`].
const FLUSH_LOG: f64 = -700.0;
const RESIDUAL_TOL: f64 = 1e-8;
const MAX_ITER: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootMethod {
    Aberth,
    Companion,
}

/// Roots with diagnostics.
#[derive(Clone, Debug)]
pub struct RootReport {
    pub roots: Vec<Complex64>,
    pub method: RootMethod,
    pub iterations: usize,
    /// `max |p(z)| / Σ |c_k| |z|^k` over the roots.
    pub max_residual: f64,
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// `a / b` with `b` scaled to unit size first; the plain formula squares
/// `|b|` and underflows for the tiny values of badly scaled polynomials.
fn cdiv(a: Complex64, b: Complex64) -> Complex64 {
    let s = b.re.abs().max(b.im.abs());
    if s == 0.0 || !s.is_finite() {
        return a / b;
    }
    a.unscale(s) / b.unscale(s)
}

/// `p(z)` and `Σ|c_k||z|^k` for `|z| <= 1`, or both divided by `z^m` (and
/// `|z|^m`) for `|z| > 1`, so nothing overflows.
fn eval_relative(c: &[Complex64], z: Complex64) -> f64 {
    let r = z.norm();
    let (mut p, mut s) = (zero(), 0.0);
    if r <= 1.0 {
        for ck in c.iter().rev() {
            p = p * z + ck;
            s = s * r + ck.norm();
        }
    } else {
        let y = 1.0 / z;
        let ry = 1.0 / r;
        for ck in c.iter() {
            p = p * y + ck;
            s = s * ry + ck.norm();
        }
    }
    if s == 0.0 {
        0.0
    } else {
        p.norm() / s
    }
}

/// Newton correction `p(z)/p'(z)`, evaluated on the reversed polynomial
/// outside the unit disk.
fn newton_ratio(c: &[Complex64], z: Complex64) -> Complex64 {
    let m = c.len() - 1;
    if z.norm() <= 1.0 {
        let (mut p, mut dp) = (zero(), zero());
        for ck in c.iter().rev() {
            dp = dp * z + p;
            p = p * z + ck;
        }
        cdiv(p, dp)
    } else {
        // p(z) = z^m q(y), y = 1/z, q(y) = Σ c_{m-k} y^k
        let y = 1.0 / z;
        let (mut q, mut dq) = (zero(), zero());
        for ck in c.iter() {
            dq = dq * y + q;
            q = q * y + ck;
        }
        cdiv(z, m as f64 - y * cdiv(dq, q))
    }
}

/// Starting points on one circle per edge of the upper convex hull of
/// `(k, ln|c_k|)`: an edge from `i` to `j` carries `j - i` roots of modulus
/// about `(|c_i| / |c_j|)^{1/(j-i)}`. Needs `c_0 != 0` and `c_m != 0`.
fn newton_polygon_start(c: &[Complex64]) -> Vec<Complex64> {
    let m = c.len() - 1;
    let pts: Vec<(f64, f64)> = c
        .iter()
        .enumerate()
        .filter(|(_, ck)| ck.norm() > 0.0)
        .map(|(k, ck)| (k as f64, ck.norm().ln()))
        .collect();
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b unless it lies strictly above the chord a-p
            if (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut out = Vec::with_capacity(m);
    for w in hull.windows(2) {
        let count = (w[1].0 - w[0].0) as usize;
        let log_r = ((w[0].1 - w[1].1) / count as f64).clamp(-700.0, 700.0);
        let phase = 2.0 * PI * w[0].0 / m as f64 + 0.4;
        for t in 0..count {
            out.push(Complex64::from_polar(log_r.exp(), 2.0 * PI * t as f64 / count as f64 + phase));
        }
    }
    out
}

fn aberth(c: &[Complex64], init: Vec<Complex64>) -> (Vec<Complex64>, usize, bool) {
    let m = init.len();
    let mut z = init;
    for it in 1..=MAX_ITER {
        let mut done = true;
        for k in 0..m {
            let n = newton_ratio(c, z[k]);
            if !(n.re.is_finite() && n.im.is_finite()) {
                done = false;
                continue;
            }
            let mut s = zero();
            for j in 0..m {
                if j != k {
                    s += cdiv(Complex64::new(1.0, 0.0), z[k] - z[j]);
                }
            }
            let w = cdiv(n, 1.0 - n * s);
            let w = if w.re.is_finite() && w.im.is_finite() { w } else { n };
            z[k] -= w;
            // relative: Newton polygon starts can sit far from the unit circle
            if w.norm() > STEP_TOL * z[k].norm() {
                done = false;
            }
        }
        if done {
            return (z, it, true);
        }
    }
    (z, MAX_ITER, false)
}

fn companion(c: &[Complex64]) -> Option<Vec<Complex64>> {
    let m = c.len() - 1;
    let lead = c[m];
    let mut a = DMatrix::<Complex64>::zeros(m, m);
    for j in 0..m {
        a[(0, j)] = -c[m - 1 - j] / lead;
    }
    for i in 1..m {
        a[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    let schur = Schur::try_new(a, f64::EPSILON, 100 * m.max(10))?;
    schur.eigenvalues().map(|v| v.iter().copied().collect())
}

fn max_residual(c: &[Complex64], roots: &[Complex64]) -> f64 {
    roots.iter().map(|z| eval_relative(c, *z)).fold(0.0, f64::max)
}

/// Roots of `Σ c_k z^k`, multiplicities included. Exact zero coefficients at
/// the top lower the degree; at the bottom they become roots at the origin.
pub fn roots_with_report(coeffs: &[Complex64]) -> Result<RootReport> {
    let top = coeffs
        .iter()
        .rposition(|c| *c != zero())
        .ok_or_else(|| Error::DegeneratePolynomial("all coefficients are zero".into()))?;
    let low = coeffs.iter().position(|c| *c != zero()).unwrap_or(0);
    let mut out = vec![zero(); low];
    let c = &coeffs[low..=top];
    let m = c.len() - 1;
    if m == 0 {
        return Ok(RootReport {
            roots: out,
            method: RootMethod::Aberth,
            iterations: 0,
            max_residual: 0.0,
        });
    }
    if m == 1 {
        out.push(-c[0] / c[1]);
        return Ok(RootReport {
            roots: out,
            method: RootMethod::Aberth,
            iterations: 0,
            max_residual: 0.0,
        });
    }
    let (z, iterations, _) = aberth(c, newton_polygon_start(c));
    let res = max_residual(c, &z);
    // steps can keep jittering at rounding level once every residual is small
    if res <= RESIDUAL_TOL {
        out.extend(z);
        return Ok(RootReport {
            roots: out,
            method: RootMethod::Aberth,
            iterations,
            max_residual: res,
        });
    }
    // eigenvalues of the companion matrix, then polished
    let eig = companion(c).ok_or(Error::RootsNotConverged { max_residual: res })?;
    let (polished, it2, _) = aberth(c, eig.clone());
    let (best, best_res) = {
        let rp = max_residual(c, &polished);
        let re = max_residual(c, &eig);
        if rp <= re {
            (polished, rp)
        } else {
            (eig, re)
        }
    };
    if !(best_res <= RESIDUAL_TOL) {
        return Err(Error::RootsNotConverged { max_residual: best_res });
    }
    out.extend(best);
    Ok(RootReport {
        roots: out,
        method: RootMethod::Companion,
        iterations: iterations + it2,
        max_residual: best_res,
    })
}

pub fn roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    Ok(roots_with_report(coeffs)?.roots)
}

/// Roots of `Σ e^{s_k} v_k z^k`. The variable is rescaled so the end
/// coefficients balance; coefficients that still fall below the `f64` range
/// relative to the largest are flushed, so roots that are numerically at
/// `0` or `∞` relative to the rest collapse to `0` or drop out.
pub fn roots_scaled(c: &Coefficients) -> Result<RootReport> {
    let logs: Vec<f64> = (0..c.len()).map(|k| c.log_abs(k)).collect();
    let live: Vec<usize> = (0..c.len()).filter(|&k| logs[k].is_finite()).collect();
    let (&lo, &hi) = match (live.first(), live.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::DegeneratePolynomial("all coefficients are zero".into())),
    };
    let log_lambda = if hi > lo {
        (logs[lo] - logs[hi]) / (hi - lo) as f64
    } else {
        0.0
    };
    let shifted: Vec<f64> = logs.iter().enumerate().map(|(k, l)| l + k as f64 * log_lambda).collect();
    let top = live.iter().map(|&k| shifted[k]).fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<Complex64> = (0..c.len())
        .map(|k| {
            // subnormal values carry too few bits to be worth keeping
            if !logs[k].is_finite() || shifted[k] - top < FLUSH_LOG {
                return zero();
            }
            let v = c.values[k];
            Complex64::from_polar((shifted[k] - top).exp(), v.arg())
        })
        .collect();
    let mut rep = roots_with_report(&scaled)?;
    let lambda = log_lambda.exp();
    for z in rep.roots.iter_mut() {
        *z *= lambda;
    }
    Ok(rep)
}

/// Zeros of a random polynomial, through its monomial form.
pub fn polynomial_roots(poly: &RandomPolynomial) -> Result<RootReport> {
    roots_scaled(&poly.univariate_coefficients()?)
}

/// `(1/#zeros) Σ δ_{z_i}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalZeroMeasure {
    pub zeros: Vec<Complex64>,
    #[serde(default)]
    pub provenance: String,
}

impl EmpiricalZeroMeasure {
    pub fn new(zeros: Vec<Complex64>) -> Self {
        EmpiricalZeroMeasure {
            zeros,
            provenance: String::new(),
        }
    }

    pub fn with_provenance(mut self, p: impl Into<String>) -> Self {
        self.provenance = p.into();
        self
    }

    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    /// Total mass: 1 when nonempty.
    pub fn mass(&self) -> f64 {
        if self.zeros.is_empty() {
            0.0
        } else {
            1.0
        }
    }

    fn fraction(&self, keep: impl Fn(&Complex64) -> bool) -> f64 {
        if self.zeros.is_empty() {
            return 0.0;
        }
        self.zeros.iter().filter(|z| keep(z)).count() as f64 / self.zeros.len() as f64
    }

    /// Mass of `r0 <= |z| <= r1`.
    pub fn annulus_fraction(&self, r0: f64, r1: f64) -> f64 {
        self.fraction(|z| (r0..=r1).contains(&z.norm()))
    }

    /// Mass of `|z| <= r`.
    pub fn radial_cdf(&self, r: f64) -> f64 {
        self.fraction(|z| z.norm() <= r)
    }
}

/// Zero counts by radius and argument.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroHistogram {
    /// Radial bin `i` is `[edges[i], edges[i+1])`; the first bin also takes
    /// smaller radii and the last one larger radii.
    pub radial_edges: Vec<f64>,
    /// Angular bin `j` covers `[2πj/m, 2π(j+1)/m)`.
    pub angular_bins: usize,
    pub counts: Vec<Vec<u64>>,
}

impl ZeroHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn angular_totals(&self) -> Vec<u64> {
        (0..self.angular_bins)
            .map(|j| self.counts.iter().map(|row| row[j]).sum())
            .collect()
    }

    pub fn radial_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|row| row.iter().sum()).collect()
    }

    pub fn add(&mut self, other: &ZeroHistogram) -> Result<()> {
        if self.radial_edges != other.radial_edges || self.angular_bins != other.angular_bins {
            return Err(Error::GridMismatch("histogram bins differ".into()));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let edges: Vec<String> = self.radial_edges.iter().map(|e| e.to_string()).collect();
        let mut s = format!(
            "# radial_edges: {}\n# angular_bins: {} (width 2pi/{} starting at arg 0)\nradial_bin,angular_bin,count\n",
            edges.join(" "),
            self.angular_bins,
            self.angular_bins
        );
        for (i, row) in self.counts.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                s.push_str(&format!("{i},{j},{c}\n"));
            }
        }
        s
    }
}

pub fn radial_sector_histogram(
    measure: &EmpiricalZeroMeasure,
    radial_edges: &[f64],
    angular_bins: usize,
) -> Result<ZeroHistogram> {
    if radial_edges.len() < 2 || angular_bins == 0 {
        return Err(Error::Argument("need at least one radial and one angular bin".into()));
    }
    if radial_edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Argument("radial edges must increase".into()));
    }
    let nr = radial_edges.len() - 1;
    let mut counts = vec![vec![0u64; angular_bins]; nr];
    for z in &measure.zeros {
        let r = z.norm();
        let i = radial_edges[1..nr].iter().take_while(|e| r >= **e).count();
        let t = z.arg().rem_euclid(2.0 * PI);
        let j = ((t / (2.0 * PI) * angular_bins as f64) as usize).min(angular_bins - 1);
        counts[i][j] += 1;
    }
    Ok(ZeroHistogram {
        radial_edges: radial_edges.to_vec(),
        angular_bins,
        counts,
    })
}

/// Zero dump rows `(trial, re, im)`.
pub fn zeros_csv<'a>(trials: impl IntoIterator<Item = (u64, &'a EmpiricalZeroMeasure)>) -> String {
    let mut s = String::from("trial,re,im\n");
    for (t, m) in trials {
        for z in &m.zeros {
            s.push_str(&format!("{t},{},{}\n", z.re, z.im));
        }
    }
    s
}

/// Grid points this close to a root take the clamp floor.
pub const ROOT_PROXIMITY: f64 = 1e-9;

/// `(1/n) log |G_n|` on the grid, clamped.
pub fn potential_field(poly: &RandomPolynomial, grid: &GridSpec, roots: Option<&[Complex64]>) -> Result<ScalarField> {
    if grid.dim() != poly.basis().dim() {
        return Err(Error::GridMismatch(format!(
            "grid points are in C^{}, polynomial in C^{}",
            grid.dim(),
            poly.basis().dim()
        )));
    }
    let roots = roots.unwrap_or(&[]);
    Ok(ScalarField::from_fn(grid, CLAMP_FLOOR, |p| {
        if grid.dim() == 1 && roots.iter().any(|r| (r - p[0]).norm() < ROOT_PROXIMITY) {
            CLAMP_FLOOR
        } else {
            poly.log_abs_over_n(p)
        }
    })?
    .with_provenance(format!("(1/n) log|G_n|, n = {}", poly.degree())))
}

/// Sampling of a disk for [`cartan_fraction`]: rings of equal area, uniform
/// angles at cell midpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiskSampling {
    pub rings: usize,
    pub angles: usize,
}

impl Default for DiskSampling {
    fn default() -> Self {
        DiskSampling { rings: 400, angles: 128 }
    }
}

fn horner(c: &[Complex64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(zero(), |acc, ck| acc * z + ck)
}

/// Fraction of the disk `|z - center| < radius` where
/// `|p| < ε^{deg p} ‖p‖_disk`.
pub fn cartan_fraction(
    coeffs: &[Complex64],
    center: Complex64,
    radius: f64,
    eps: f64,
    sampling: DiskSampling,
) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Argument(format!("ε must lie in (0, 1), got {eps}")));
    }
    if !(radius > 0.0) || sampling.rings == 0 || sampling.angles == 0 {
        return Err(Error::Argument("empty disk sampling".into()));
    }
    let deg = coeffs
        .iter()
        .rposition(|c| *c != zero())
        .ok_or_else(|| Error::DegeneratePolynomial("all coefficients are zero".into()))?;
    let c = &coeffs[..=deg];
    let mut values = Vec::with_capacity(sampling.rings * sampling.angles);
    for i in 0..sampling.rings {
        let r = radius * ((i as f64 + 0.5) / sampling.rings as f64).sqrt();
        for j in 0..sampling.angles {
            let t = 2.0 * PI * (j as f64 + 0.5) / sampling.angles as f64;
            values.push(horner(c, center + Complex64::from_polar(r, t)).norm());
        }
    }
    // the sup sits on the boundary circle
    let nb = 64 * (deg + 1);
    let sup = (0..nb)
        .map(|j| horner(c, center + Complex64::from_polar(radius, 2.0 * PI * j as f64 / nb as f64)).norm())
        .chain(values.iter().copied())
        .fold(0.0, f64::max);
    if sup == 0.0 {
        return Err(Error::DegeneratePolynomial("vanishes on the sampling grid".into()));
    }
    let level = eps.powi(deg as i32) * sup;
    Ok(values.iter().filter(|v| **v < level).count() as f64 / values.len() as f64)
}
