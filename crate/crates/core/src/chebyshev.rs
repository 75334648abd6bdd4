//! Homogenization to `C^{d+1}`, L² and sup Chebyshev constants, and
//! directional scans.
//!
//! A polynomial `G` of degree `≤ n` on `C^d` lifts to the homogeneous
//! `P(t, z) = t^n G(z/t)`. Over the circle bundle `{|t| = w(λ)}` the lift
//! carries the weighted norms of `G` unchanged, so weighted problems on `K`
//! become unweighted homogeneous ones on the lifted set.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dimension_of_polys, DiscreteMeasure, MultiIndex, MultiIndexOrder, SetKind, WeightedSet};
use crate::linalg::{cholesky_solve, least_squares_f64, Mat};
use crate::orthopoly::{weighted_rows, OrthonormalBasis};
use crate::precision::{Big, Cx, Dd, Precision, Real};

/// Homogeneous polynomial of degree `n` in `(t, z_1, .., z_d)`.
///
/// Coefficient `i` belongs to `t^{n-|β|} z^β` with `β` the `i`-th index of the
/// graded order on `C^d`; this is the order on `C^{d+1}` restricted to degree
/// `n` with `t` ahead of every `z` variable.
#[derive(Clone, Debug)]
pub struct HomogeneousPolynomial {
    order: MultiIndexOrder,
    coeffs: Vec<Complex64>,
}

/// Lifts `p` (coefficients in the graded order on `C^d`) to degree `n`.
pub fn homogenize(dim: usize, coeffs: &[Complex64], n: u32) -> Result<HomogeneousPolynomial> {
    let order = MultiIndexOrder::new(dim, n)?;
    let zero = Complex64::new(0.0, 0.0);
    if let Some(last) = coeffs.iter().rposition(|c| *c != zero) {
        if last >= order.len() {
            let mut deg = n;
            while dimension_of_polys(dim, deg) <= last {
                deg += 1;
            }
            return Err(Error::DegreeExceeded {
                degree: deg as usize,
                n: n as usize,
            });
        }
    }
    let mut c = vec![zero; order.len()];
    let k = coeffs.len().min(order.len());
    c[..k].copy_from_slice(&coeffs[..k]);
    Ok(HomogeneousPolynomial { order, coeffs: c })
}

impl HomogeneousPolynomial {
    /// Lift of the orthonormal polynomial `p_{n,α}` at position `alpha`.
    pub fn from_basis_column(basis: &OrthonormalBasis, alpha: usize) -> Result<Self> {
        homogenize(basis.dim(), &basis.column(alpha), basis.degree())
    }

    /// Ambient dimension `d + 1`.
    pub fn dim(&self) -> usize {
        self.order.dim() + 1
    }

    pub fn degree(&self) -> u32 {
        self.order.degree()
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `(exponent in C^{d+1}, coefficient)` pairs in the extended order.
    pub fn terms(&self) -> impl Iterator<Item = (MultiIndex, Complex64)> + '_ {
        let n = self.degree();
        self.order.indices().iter().zip(&self.coeffs).map(move |(b, c)| {
            let mut e = vec![n - b.degree()];
            e.extend_from_slice(b.exps());
            (MultiIndex::new(&e), *c)
        })
    }

    /// `P(1, z)`, the original polynomial.
    pub fn dehomogenize(&self) -> Vec<Complex64> {
        self.coeffs.clone()
    }

    /// `P(t, z)`.
    pub fn evaluate(&self, t: Complex64, z: &[Complex64]) -> Complex64 {
        assert_eq!(z.len(), self.order.dim(), "point dimension");
        let n = self.degree() as usize;
        let pw = |x: Complex64| -> Vec<Complex64> {
            let mut p = Vec::with_capacity(n + 1);
            p.push(Complex64::new(1.0, 0.0));
            for e in 1..=n {
                p.push(p[e - 1] * x);
            }
            p
        };
        let tp = pw(t);
        let zp: Vec<Vec<Complex64>> = z.iter().map(|&x| pw(x)).collect();
        self.order
            .indices()
            .iter()
            .zip(&self.coeffs)
            .map(|(b, c)| {
                let mut v = *c * tp[n - b.degree() as usize];
                for (j, &e) in b.exps().iter().enumerate() {
                    v *= zp[j][e as usize];
                }
                v
            })
            .sum()
    }
}

/// Circle-bundle measure `ν` over a base measure `τ`: each base node `λ`
/// spreads into `M` nodes `(t, tλ)` with `|t| = w(λ)`.
#[derive(Clone, Debug)]
pub struct BundleMeasure {
    pub measure: DiscreteMeasure,
    pub angular: usize,
    pub base: DiscreteMeasure,
}

/// Fiber count used when none is given: `2n + 3`.
pub fn default_angular(n: u32) -> usize {
    2 * n as usize + 3
}

/// Builds `ν` with `m` nodes per fiber, checked exact for degree `n` pairings.
pub fn bundle_measure(set: &WeightedSet, base: &DiscreteMeasure, m: usize, n: u32) -> Result<BundleMeasure> {
    let needed = 2 * n as usize + 1;
    if m < needed {
        return Err(Error::Exactness {
            m,
            n: n as usize,
            needed,
        });
    }
    if base.dim != set.dim() {
        return Err(Error::Argument(format!(
            "base measure lives in C^{} but the set in C^{}",
            base.dim,
            set.dim()
        )));
    }
    let d = base.dim;
    let phases: Vec<Complex64> = (0..m)
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64))
        .collect();
    let mut nodes = Vec::with_capacity(base.len() * m * (d + 1));
    let mut weights = Vec::with_capacity(base.len() * m);
    for (lam, tw) in base.iter() {
        let w = (-set.q(lam)?).exp();
        for e in &phases {
            let t = e * w;
            nodes.push(t);
            nodes.extend(lam.iter().map(|z| t * z));
            weights.push(tw / m as f64);
        }
    }
    let exactness = base.exactness.min(m as u32 - 1);
    let measure = DiscreteMeasure::new(d + 1, nodes, weights, exactness, base.mass)?;
    Ok(BundleMeasure {
        measure,
        angular: m,
        base: base.clone(),
    })
}

impl BundleMeasure {
    /// `ν` with the default fiber count for degree `n`.
    pub fn for_degree(set: &WeightedSet, base: &DiscreteMeasure, n: u32) -> Result<Self> {
        bundle_measure(set, base, default_angular(n), n)
    }

    pub fn mass(&self) -> f64 {
        self.measure.weights.iter().sum()
    }

    /// `‖P‖_{L²(ν)}`.
    pub fn l2_norm(&self, p: &HomogeneousPolynomial) -> f64 {
        self.measure
            .iter()
            .map(|(x, w)| w * p.evaluate(x[0], &x[1..]).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `max |P|` over the bundle nodes.
    pub fn sup_norm(&self, p: &HomogeneousPolynomial) -> f64 {
        self.measure
            .iter()
            .map(|(x, _)| p.evaluate(x[0], &x[1..]).norm())
            .fold(0.0, f64::max)
    }

    /// Gram matrix of the given lifts in `L²(ν)`; returns `max |G - I|`.
    pub fn orthonormality_residual(&self, polys: &[HomogeneousPolynomial]) -> f64 {
        let k = polys.len();
        let mut g = vec![vec![Complex64::new(0.0, 0.0); k]; k];
        for (x, w) in self.measure.iter() {
            let v: Vec<Complex64> = polys.iter().map(|p| p.evaluate(x[0], &x[1..])).collect();
            for i in 0..k {
                for j in 0..k {
                    g[i][j] += w * v[i].conj() * v[j];
                }
            }
        }
        let mut worst: f64 = 0.0;
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).norm());
            }
        }
        worst
    }
}

/// `T(n, α) = 1 / a_{n,α}`.
pub fn l2_chebyshev(basis: &OrthonormalBasis, alpha: &MultiIndex) -> Result<f64> {
    let a = basis
        .leading_coefficient(alpha)
        .ok_or_else(|| Error::Argument(format!("multi-index {alpha} not in P_{}", basis.degree())))?;
    Ok(1.0 / a)
}

/// `T(n, α)` for every `α`, from the normal equations of the constrained
/// least-squares problem `min ‖w^n (z^α + Σ_{β≺α} c_β z^β)‖`.
pub fn l2_chebyshev_normal_equations(
    measure: &DiscreteMeasure,
    set: &WeightedSet,
    n: u32,
    precision_bits: u32,
) -> Result<Vec<f64>> {
    let order = MultiIndexOrder::new(set.dim(), n)?;
    let precision = Precision::from_bits(precision_bits)?;
    match precision {
        Precision::Double => normal_equations::<f64>(measure, set, &order, n, 53),
        Precision::DoubleDouble => normal_equations::<Dd>(measure, set, &order, n, 106),
        Precision::Multi(b) => normal_equations::<Big>(measure, set, &order, n, b),
    }
}

fn normal_equations<R: Real>(
    measure: &DiscreteMeasure,
    set: &WeightedSet,
    order: &MultiIndexOrder,
    n: u32,
    bits: u32,
) -> Result<Vec<f64>> {
    let rows = weighted_rows::<R>(measure, set, order, n, bits)?;
    let k = order.len();
    let mut g: Mat<R> = vec![vec![Cx::zero(bits); k]; k];
    for row in &rows {
        for i in 0..k {
            for j in i..k {
                g[i][j] = g[i][j].add(&row[i].conj_mul(&row[j]));
            }
        }
    }
    for i in 0..k {
        for j in 0..i {
            g[i][j] = g[j][i].conj();
        }
    }
    let mut out = Vec::with_capacity(k);
    for a in 0..k {
        let mut t2 = g[a][a].re.clone();
        if a > 0 {
            let block: Mat<R> = g[..a].iter().map(|r| r[..a].to_vec()).collect();
            let rhs: Vec<Cx<R>> = (0..a).map(|i| g[i][a].clone()).collect();
            let c = cholesky_solve(&block, &rhs, bits)?;
            // residual^2 = g_aa - g_{<a,a}^* c
            for (gi, ci) in rhs.iter().zip(&c) {
                t2 = t2.sub(&gi.conj_mul(ci).re);
            }
        }
        out.push(t2.to_f64().max(0.0).sqrt());
    }
    Ok(out)
}

/// Result of a discrete minimax problem.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SupChebyshev {
    pub alpha: Vec<u32>,
    /// Best sup over the nodes found for a monic competitor.
    pub minimax: f64,
    /// Lawson dual bound; the true node minimax lies in `[lower, minimax]`.
    pub lower: f64,
    /// `minimax^{1/|α|}`.
    pub tau: f64,
    pub iterations: usize,
    pub certified: bool,
    /// Competitor coefficients `c_β`, `β ≺ α`.
    pub coefficients: Vec<(Vec<u32>, [f64; 2])>,
}

/// Lawson iteration controls.
#[derive(Clone, Copy, Debug)]
pub struct LawsonOptions {
    pub max_iterations: usize,
    /// Stop when sup and dual bound both move by at most this relative amount.
    pub stall: f64,
    /// Certified when `(minimax - lower) <= gap * minimax`.
    pub gap: f64,
}

impl Default for LawsonOptions {
    fn default() -> Self {
        LawsonOptions {
            max_iterations: 20_000,
            stall: 1e-8,
            gap: 1e-4,
        }
    }
}

fn monomial(x: &[Complex64], e: &[u32]) -> Complex64 {
    x.iter().zip(e).map(|(z, &k)| z.powu(k)).product()
}

/// Competitors `β ≺ α`; all of them, or only those with `|β| = |α|`.
pub fn competitors(alpha: &MultiIndex, homogeneous: bool) -> Result<Vec<MultiIndex>> {
    let order = MultiIndexOrder::new(alpha.dim(), alpha.degree())?;
    let pos = order.position(alpha).expect("index lies in its own order");
    Ok(order.indices()[..pos]
        .iter()
        .filter(|b| !homogeneous || b.degree() == alpha.degree())
        .copied()
        .collect())
}

/// Minimizes `max_i |p(x_i)|` over monic `p ∈ P(α)` by Lawson's iteratively
/// reweighted least squares.
pub fn sup_chebyshev(nodes: &[Vec<Complex64>], alpha: &MultiIndex, homogeneous: bool) -> Result<SupChebyshev> {
    sup_chebyshev_with(nodes, alpha, homogeneous, LawsonOptions::default())
}

pub fn sup_chebyshev_with(
    nodes: &[Vec<Complex64>],
    alpha: &MultiIndex,
    homogeneous: bool,
    opts: LawsonOptions,
) -> Result<SupChebyshev> {
    if alpha.degree() == 0 {
        return Err(Error::Argument("α must have positive degree".into()));
    }
    if nodes.is_empty() || nodes.iter().any(|x| x.len() != alpha.dim()) {
        return Err(Error::Argument(format!(
            "need a nonempty node set in C^{}",
            alpha.dim()
        )));
    }
    let comp = competitors(alpha, homogeneous)?;
    let f: Vec<Complex64> = nodes.iter().map(|x| monomial(x, alpha.exps())).collect();
    let phi: Vec<Vec<Complex64>> = nodes
        .iter()
        .map(|x| comp.iter().map(|b| monomial(x, b.exps())).collect())
        .collect();
    let k = comp.len();
    let npts = nodes.len();
    let finish = |minimax: f64, lower: f64, it: usize, certified: bool, c: &[Complex64]| SupChebyshev {
        alpha: alpha.exps().to_vec(),
        minimax,
        lower,
        tau: minimax.powf(1.0 / alpha.degree() as f64),
        iterations: it,
        certified,
        coefficients: comp.iter().zip(c).map(|(b, z)| (b.exps().to_vec(), [z.re, z.im])).collect(),
    };
    if k == 0 {
        let m = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
        return Ok(finish(m, m, 0, true, &[]));
    }

    let mut u = vec![1.0 / npts as f64; npts];
    let mut best = (f64::INFINITY, vec![Complex64::new(0.0, 0.0); k]);
    let mut lower_best: f64 = 0.0;
    let (mut prev_sup, mut prev_low) = (f64::INFINITY, 0.0);
    for it in 1..=opts.max_iterations {
        let rows = (0..npts).filter(|&i| u[i] > 0.0).map(|i| {
            let s = u[i].sqrt();
            (phi[i].iter().map(|v| v * s).collect::<Vec<_>>(), -f[i] * s)
        });
        let (c, _) = least_squares_f64(rows, k)?;
        let r: Vec<f64> = (0..npts)
            .map(|i| (f[i] + phi[i].iter().zip(&c).map(|(a, b)| a * b).sum::<Complex64>()).norm())
            .collect();
        let sup = r.iter().copied().fold(0.0, f64::max);
        let low = u.iter().zip(&r).map(|(w, v)| w * v * v).sum::<f64>().sqrt();
        if sup < best.0 {
            best = (sup, c);
        }
        lower_best = lower_best.max(low);
        if best.0 - lower_best <= opts.gap * best.0 {
            return Ok(finish(best.0, lower_best, it, true, &best.1));
        }
        let stalled = (sup - prev_sup).abs() <= opts.stall * sup && (low - prev_low).abs() <= opts.stall * sup;
        if stalled {
            return Ok(finish(best.0, lower_best, it, false, &best.1));
        }
        prev_sup = sup;
        prev_low = low;
        let norm: f64 = u.iter().zip(&r).map(|(w, v)| w * v).sum();
        if norm == 0.0 {
            return Ok(finish(best.0, lower_best, it, true, &best.1));
        }
        for (w, v) in u.iter_mut().zip(&r) {
            *w *= v / norm;
        }
    }
    Ok(finish(best.0, lower_best, opts.max_iterations, false, &best.1))
}

/// Boundary nodes of an unweighted circled set in `C^2` for homogeneous
/// minimax problems of degree `deg`.
///
/// For homogeneous `p`, `|p(e^{iθ} x)| = |p(x)|`, so one phase is fixed at 0.
/// The polar grid has `4q + 1` points on `[0, π/2]` (it contains `π/4`); the
/// relative phase gets `8q` points. `refine` multiplies `q`.
pub fn circled_nodes(set: &WeightedSet, deg: u32, refine: usize) -> Result<Vec<Vec<Complex64>>> {
    if !set.weight_expr.is_constant() {
        return Err(Error::Argument("circled node sets need an unweighted set".into()));
    }
    let need = 40 * deg.max(1) as usize;
    let refine = refine.max(1);
    let ring = |r1: f64, r2: f64, m: usize| -> Vec<Vec<Complex64>> {
        (0..m)
            .map(|k| {
                vec![
                    Complex64::new(r1, 0.0),
                    Complex64::from_polar(r2, 2.0 * PI * k as f64 / m as f64),
                ]
            })
            .collect()
    };
    match set.kind {
        SetKind::Polydisk { radius } => Ok(ring(radius, radius, need.max(64) * refine)),
        SetKind::Ball { radius } => Ok(sphere(radius, radius, need, refine)),
        SetKind::Ellipsoid { r, a } => Ok(sphere(r, a, need, refine)),
        _ => Err(Error::Argument(format!(
            "circled node sets are for sets in C^2, got {}",
            set.label()
        ))),
    }
}

fn sphere(r1: f64, r2: f64, need: usize, refine: usize) -> Vec<Vec<Complex64>> {
    let mut q = 4;
    while (4 * q + 1) * 8 * q < need {
        q += 1;
    }
    let q = (q + 2) * refine;
    let np = 4 * q;
    let m = 8 * q;
    let mut out = Vec::with_capacity((np + 1) * m);
    for i in 0..=np {
        let phi = 0.5 * PI * i as f64 / np as f64;
        let (z, w) = (r1 * phi.cos(), r2 * phi.sin());
        if w == 0.0 || z == 0.0 {
            out.push(vec![Complex64::new(z, 0.0), Complex64::new(w, 0.0)]);
            continue;
        }
        for k in 0..m {
            out.push(vec![
                Complex64::new(z, 0.0),
                Complex64::from_polar(w, 2.0 * PI * k as f64 / m as f64),
            ]);
        }
    }
    out
}

/// `T(n,α)/√mass ≤ node minimax ≤ sup over nodes of the L² minimizer`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sandwich {
    pub l2_lower: f64,
    pub minimax: f64,
    pub l2_upper: f64,
}

impl Sandwich {
    pub fn holds(&self, rel: f64) -> bool {
        self.l2_lower <= self.minimax * (1.0 + rel) && self.minimax <= self.l2_upper * (1.0 + rel)
    }
}

/// Evaluates both sides of the sandwich for `α` on an unweighted set, using
/// the set's reference measure at degree `|α|`. The measure nodes are added
/// to the sup nodes so the lower bound applies to the node problem.
pub fn sandwich(set: &WeightedSet, alpha: &MultiIndex, nodes: &[Vec<Complex64>], bits: u32) -> Result<Sandwich> {
    let n = alpha.degree();
    let measure = crate::geometry::quadrature_measure(set, 2 * n)?;
    let basis = OrthonormalBasis::build(&measure, set, n, bits)?;
    let t = l2_chebyshev(&basis, alpha)?;
    let pos = basis.order().position(alpha).expect("α in order");
    let mut all: Vec<Vec<Complex64>> = nodes.to_vec();
    all.extend((0..measure.len()).map(|i| measure.node(i).to_vec()));
    let homogeneous = set.is_circled() && measure.torus_invariant;
    let sup = sup_chebyshev(&all, alpha, homogeneous)?;
    let a = basis.leading_coefficients()[pos];
    let col = basis.column(pos);
    let upper = all
        .iter()
        .map(|x| {
            basis
                .order()
                .indices()
                .iter()
                .zip(&col)
                .map(|(b, c)| c * monomial(x, b.exps()))
                .sum::<Complex64>()
                .norm()
                / a
        })
        .fold(0.0, f64::max);
    Ok(Sandwich {
        l2_lower: t / measure.mass.sqrt(),
        minimax: sup.minimax,
        l2_upper: upper,
    })
}

/// Which constant a scan tabulates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanRoute {
    /// `T(n, α)^{1/n}` from the orthonormal basis on the base set.
    L2,
    /// `τ_α` from homogeneous sup minimax on the set's boundary.
    Sup,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub n: u32,
    pub alpha: Vec<u32>,
    pub value: f64,
    /// Change from the previous row on the same offset track.
    pub diff: Option<f64>,
    pub track: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DirectionScan {
    /// Target direction in simplex coordinates.
    pub theta: Vec<f64>,
    pub route: ScanRoute,
    pub rows: Vec<ScanRow>,
}

/// Offsets `k ∈ {0, 1, 2, ⌊√n⌋}` for boundary directions.
pub fn boundary_offsets(n: u32) -> Vec<u32> {
    let mut k = vec![0, 1, 2, (n as f64).sqrt().floor() as u32];
    k.retain(|&x| x <= n);
    k.sort_unstable();
    k.dedup();
    k
}

fn check_simplex(theta: &[f64]) -> Result<()> {
    let s: f64 = theta.iter().sum();
    if theta.iter().any(|x| !(*x >= 0.0)) || (s - 1.0).abs() > 1e-9 {
        return Err(Error::Argument(format!("direction {theta:?} is not on the simplex")));
    }
    Ok(())
}

/// Integer point near `n θ` with coordinates summing to `n`.
fn round_to_simplex(theta: &[f64], n: u32) -> Vec<u32> {
    let mut e: Vec<u32> = theta.iter().map(|x| (x * n as f64).floor() as u32).collect();
    let mut rest = n - e.iter().sum::<u32>();
    let mut frac: Vec<(usize, f64)> = theta
        .iter()
        .enumerate()
        .map(|(i, x)| (i, x * n as f64 - e[i] as f64))
        .collect();
    frac.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for (i, _) in frac {
        if rest == 0 {
            break;
        }
        e[i] += 1;
        rest -= 1;
    }
    e
}

/// The `(n, α)` schedule for a target direction.
///
/// L²: `θ ∈ Σ_{d+1}` in `(t, z)` coordinates and `α` is the `z` part of the
/// rounded point. Sup: `θ ∈ Σ_2` and `|α| = n`; on a boundary direction each
/// `n` gets the offsets of [`boundary_offsets`] moved onto the other axis.
pub fn schedule(theta: &[f64], ns: &[u32], route: ScanRoute) -> Result<Vec<(u32, MultiIndex, u32)>> {
    check_simplex(theta)?;
    let mut out = Vec::new();
    for &n in ns {
        let e = round_to_simplex(theta, n);
        match route {
            ScanRoute::L2 => out.push((n, MultiIndex::new(&e[1..]), 0)),
            ScanRoute::Sup => {
                let zeros: Vec<usize> = (0..theta.len()).filter(|&i| theta[i] == 0.0).collect();
                if theta.len() == 2 && zeros.len() == 1 {
                    let (hole, full) = (zeros[0], 1 - zeros[0]);
                    for k in boundary_offsets(n) {
                        let mut a = vec![0; 2];
                        a[full] = n - k;
                        a[hole] = k;
                        out.push((n, MultiIndex::new(&a), k));
                    }
                } else {
                    out.push((n, MultiIndex::new(&e), 0));
                }
            }
        }
    }
    Ok(out)
}

/// Tabulates the directional constants along a schedule of degrees.
pub fn direction_scan(set: &WeightedSet, theta: &[f64], ns: &[u32], route: ScanRoute, bits: u32) -> Result<DirectionScan> {
    if ns.windows(2).any(|w| w[0] >= w[1]) || ns.is_empty() {
        return Err(Error::Argument("degree schedule must be nonempty and increasing".into()));
    }
    match route {
        ScanRoute::L2 if theta.len() != set.dim() + 1 => {
            return Err(Error::Argument(format!(
                "L2 scans take directions in Σ_{} for a set in C^{}",
                set.dim() + 1,
                set.dim()
            )))
        }
        ScanRoute::Sup if !(set.dim() == 2 && theta.len() == 2) => {
            return Err(Error::Argument("sup scans run on sets in C^2 with θ ∈ Σ_2".into()))
        }
        _ => {}
    }
    let entries = schedule(theta, ns, route)?;
    let values: Vec<Result<f64>> = entries
        .par_iter()
        .map(|(n, alpha, _)| match route {
            ScanRoute::L2 => {
                let basis = OrthonormalBasis::for_set(set, *n, bits)?;
                Ok(l2_chebyshev(&basis, alpha)?.powf(1.0 / *n as f64))
            }
            ScanRoute::Sup => {
                let nodes = circled_nodes(set, *n, 1)?;
                Ok(sup_chebyshev(&nodes, alpha, true)?.tau)
            }
        })
        .collect();
    let mut rows: Vec<ScanRow> = Vec::with_capacity(entries.len());
    for ((n, alpha, track), v) in entries.into_iter().zip(values) {
        let value = v?;
        let diff = rows.iter().rev().find(|r| r.track == track).map(|r| value - r.value);
        rows.push(ScanRow {
            n,
            alpha: alpha.exps().to_vec(),
            value,
            diff,
            track,
        });
    }
    Ok(DirectionScan {
        theta: theta.to_vec(),
        route,
        rows,
    })
}

impl DirectionScan {
    /// `n,alpha,value,diff`; `alpha` entries joined by `;`, empty diff on the
    /// first row of a track.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,alpha,value,diff\n");
        for r in &self.rows {
            let a: Vec<String> = r.alpha.iter().map(|e| e.to_string()).collect();
            let d = r.diff.map(|x| format!("{x:.12e}")).unwrap_or_default();
            s.push_str(&format!("{},{},{:.12e},{}\n", r.n, a.join(";"), r.value, d));
        }
        s
    }

    /// Every track's last difference is at most `tol` in absolute value.
    pub fn stabilized(&self, tol: f64) -> bool {
        let mut tracks: Vec<u32> = self.rows.iter().map(|r| r.track).collect();
        tracks.sort_unstable();
        tracks.dedup();
        tracks.iter().all(|t| {
            self.rows
                .iter()
                .rev()
                .find(|r| r.track == *t)
                .and_then(|r| r.diff)
                .is_some_and(|d| d.abs() <= tol)
        })
    }
}

/// `(1/n) log(a_{n,α(i)} / a_{n,α(k)})` for positions `i`, `k` in the order.
pub fn coeff_ratio_probe(basis: &OrthonormalBasis, i: usize, k: usize) -> Result<f64> {
    let a = basis.leading_coefficients();
    if i >= a.len() || k >= a.len() {
        return Err(Error::Argument(format!(
            "indices ({i}, {k}) out of range for {} basis elements",
            a.len()
        )));
    }
    Ok((a[i].ln() - a[k].ln()) / basis.degree().max(1) as f64)
}
