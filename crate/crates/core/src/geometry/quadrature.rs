//! Discrete measures whose low-degree moments match the continuous ones.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::set::{SetKind, Support, WeightedSet};
use crate::error::{Error, Result};

/// Finite positive measure on `C^d`.
///
/// `exactness = D` means `∫ p q̄ dτ` is exact for `deg p + deg q <= D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub dim: usize,
    /// Flat node coordinates, `dim` entries per node.
    pub nodes: Vec<Complex64>,
    pub weights: Vec<f64>,
    pub exactness: u32,
    pub mass: f64,
    /// Angular nodes form uniform grids of at least `exactness + 1` points
    /// in every coordinate, so distinct monomials are orthogonal under any
    /// weight depending only on `|z_j|`.
    #[serde(default)]
    pub torus_invariant: bool,
}

impl DiscreteMeasure {
    pub fn new(dim: usize, nodes: Vec<Complex64>, weights: Vec<f64>, exactness: u32, mass: f64) -> Result<Self> {
        if dim == 0 || nodes.len() != dim * weights.len() {
            return Err(Error::LengthMismatch {
                expected: dim * weights.len(),
                got: nodes.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::Argument(format!("measure weights must be positive, found {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - mass).abs() > 1e-12 * mass.abs().max(1.0) {
            return Err(Error::Argument(format!(
                "weights sum to {total}, declared mass {mass}"
            )));
        }
        Ok(DiscreteMeasure {
            dim,
            nodes,
            weights,
            exactness,
            mass,
            torus_invariant: false,
        })
    }

    /// Marks the measure as torus invariant; see the field docs.
    pub fn with_torus_invariance(mut self, yes: bool) -> Self {
        self.torus_invariant = yes;
        self
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[Complex64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[Complex64], f64)> + '_ {
        self.nodes.chunks(self.dim).zip(self.weights.iter().copied())
    }

    pub fn integrate<F: Fn(&[Complex64]) -> Complex64>(&self, f: F) -> Complex64 {
        self.iter().map(|(p, w)| f(p) * w).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("measure serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: DiscreteMeasure = serde_json::from_str(text)?;
        Ok(DiscreteMeasure::new(m.dim, m.nodes, m.weights, m.exactness, m.mass)?
            .with_torus_invariance(m.torus_invariant))
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]` (weights sum to 1).
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut x = ((4 * i + 3) as f64 * PI / (4 * n + 2) as f64).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = x;
        ws[i] = w;
        xs[n - 1 - i] = -x;
        ws[n - 1 - i] = w;
    }
    let nodes = xs.iter().rev().map(|x| 0.5 * (x + 1.0)).collect();
    let weights = ws.iter().rev().map(|w| 0.5 * w).collect();
    (nodes, weights)
}

fn angles(m: usize) -> Vec<Complex64> {
    (0..m)
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64))
        .collect()
}

/// Radial rule on `[0, 1]` for `∫ f(ρ) c ρ^{p} dρ` (normalized), exact for
/// polynomial `f` of degree `<= deg`.
fn radial_rule(deg: u32, power: u32) -> (Vec<f64>, Vec<f64>) {
    let n = ((deg + power) as usize + 2) / 2;
    let (x, w) = gauss_legendre_unit(n.max(1));
    let norm = (power + 1) as f64;
    let weights = x
        .iter()
        .zip(&w)
        .map(|(x, w)| w * norm * x.powi(power as i32))
        .collect();
    (x, weights)
}

struct Builder {
    dim: usize,
    nodes: Vec<Complex64>,
    weights: Vec<f64>,
}

impl Builder {
    fn new(dim: usize) -> Self {
        Builder {
            dim,
            nodes: Vec::new(),
            weights: Vec::new(),
        }
    }
    fn push(&mut self, p: &[Complex64], w: f64) {
        debug_assert_eq!(p.len(), self.dim);
        self.nodes.extend_from_slice(p);
        self.weights.push(w);
    }
    fn finish(self, exactness: u32) -> Result<DiscreteMeasure> {
        let mass = self.weights.iter().sum::<f64>();
        DiscreteMeasure::new(self.dim, self.nodes, self.weights, exactness, mass)
    }
}

/// Disk rule in one variable: `(point, weight)` pairs for normalized area.
fn disk_rule(radius: f64, d: u32) -> Vec<(Complex64, f64)> {
    let (rho, wr) = radial_rule(d, 1);
    let ang = angles(d as usize + 1);
    let wa = 1.0 / ang.len() as f64;
    let mut out = Vec::with_capacity(rho.len() * ang.len());
    for (r, w) in rho.iter().zip(&wr) {
        for e in &ang {
            out.push((e * (radius * r), w * wa));
        }
    }
    out
}

fn circle_rule(radius: f64, d: u32) -> Vec<(Complex64, f64)> {
    let ang = angles(d as usize + 1);
    let w = 1.0 / ang.len() as f64;
    ang.into_iter().map(|e| (e * radius, w)).collect()
}

/// Normalized volume (or sphere) measure on `{|z|^2/r1^2 + |w|^2/r2^2 <= 1}`.
fn ball_rule(b: &mut Builder, r1: f64, r2: f64, d: u32, solid: bool) {
    let (rho, wr) = if solid { radial_rule(d, 3) } else { (vec![1.0], vec![1.0]) };
    // s = cos^2(phi) is uniform on [0, 1]; moments are polynomials of degree <= d/2 in s
    let (s, ws) = gauss_legendre_unit((d / 2) as usize / 2 + 1);
    let ang = angles(d as usize + 1);
    let wa = 1.0 / (ang.len() * ang.len()) as f64;
    for (r, w_r) in rho.iter().zip(&wr) {
        for (s, w_s) in s.iter().zip(&ws) {
            let (c, sn) = (s.sqrt(), (1.0 - s).sqrt());
            for e1 in &ang {
                for e2 in &ang {
                    b.push(&[e1 * (r1 * r * c), e2 * (r2 * r * sn)], w_r * w_s * wa);
                }
            }
        }
    }
}

/// Probability measure on `K` exact for monomial pairs of total degree `<= d`.
pub fn quadrature_measure(set: &WeightedSet, d: u32) -> Result<DiscreteMeasure> {
    set.validate()?;
    let boundary = set.support == Support::Boundary;
    let mut b = Builder::new(set.dim());
    match set.kind {
        SetKind::Circle { radius } => {
            for (z, w) in circle_rule(radius, d) {
                b.push(&[z], w);
            }
        }
        SetKind::Interval { a, b: hi } => {
            // Gauss-Chebyshev (first kind) for the arcsine density, exact to 2N-1
            let n = d as usize / 2 + 1;
            let (mid, half) = (0.5 * (a + hi), 0.5 * (hi - a));
            for k in 0..n {
                let x = ((2 * k + 1) as f64 * PI / (2 * n) as f64).cos();
                b.push(&[Complex64::new(mid + half * x, 0.0)], 1.0 / n as f64);
            }
        }
        SetKind::Disk { radius } => {
            let rule = if boundary { circle_rule(radius, d) } else { disk_rule(radius, d) };
            for (z, w) in rule {
                b.push(&[z], w);
            }
        }
        SetKind::Polydisk { radius } => {
            let rule = if boundary { circle_rule(radius, d) } else { disk_rule(radius, d) };
            for (z, wz) in &rule {
                for (w, ww) in &rule {
                    b.push(&[*z, *w], wz * ww);
                }
            }
        }
        SetKind::Ball { radius } => ball_rule(&mut b, radius, radius, d, !boundary),
        SetKind::Ellipsoid { r, a } => ball_rule(&mut b, r, a, d, !boundary),
    }
    let invariant = !matches!(set.kind, SetKind::Interval { .. });
    Ok(b.finish(d)?.with_torus_invariance(invariant))
}
