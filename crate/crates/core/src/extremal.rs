//! Bergman functions, extremal-function estimates and closed-form references.

use std::f64::consts::LN_2;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{MultiIndex, SetKind, WeightExpr, WeightedSet};
use crate::orthopoly::{OrthonormalBasis, ScaledValues};

/// Floor applied to log-fields.
pub const CLAMP_FLOOR: f64 = -50.0;

/// For `d = 2`: the grid box parametrizes coordinate `free`, the other
/// coordinate is held at `fixed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub free: usize,
    pub fixed: Complex64,
}

/// Rectangular lattice over `[x_min, x_max] × [y_min, y_max]`, endpoints
/// included, stored row by row (`y` outer).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice: Option<Slice>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::square(2.0, 201)
    }
}

impl GridSpec {
    /// `[-h, h]^2` with `count` nodes per side.
    pub fn square(h: f64, count: usize) -> Self {
        GridSpec {
            x_min: -h,
            x_max: h,
            y_min: -h,
            y_max: h,
            nx: count,
            ny: count,
            slice: None,
        }
    }

    pub fn with_slice(mut self, free: usize, fixed: Complex64) -> Self {
        self.slice = Some(Slice { free, fixed });
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.nx >= 2
            && self.ny >= 2
            && self.x_min.is_finite()
            && self.y_min.is_finite()
            && self.x_max > self.x_min
            && self.y_max > self.y_min;
        if !ok {
            return Err(Error::Argument(format!("degenerate grid {self:?}")));
        }
        if let Some(s) = &self.slice {
            if s.free > 1 {
                return Err(Error::Argument(format!("slice coordinate {} out of range", s.free)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> (f64, f64) {
        (
            (self.x_max - self.x_min) / (self.nx - 1) as f64,
            (self.y_max - self.y_min) / (self.ny - 1) as f64,
        )
    }

    pub fn planar(&self, i: usize, j: usize) -> Complex64 {
        let (dx, dy) = self.spacing();
        Complex64::new(self.x_min + i as f64 * dx, self.y_min + j as f64 * dy)
    }

    /// Dimension of the points produced by [`GridSpec::point`].
    pub fn dim(&self) -> usize {
        if self.slice.is_some() {
            2
        } else {
            1
        }
    }

    pub fn point(&self, i: usize, j: usize) -> Vec<Complex64> {
        let z = self.planar(i, j);
        match &self.slice {
            None => vec![z],
            Some(s) => {
                let mut p = vec![s.fixed; 2];
                p[s.free] = z;
                p
            }
        }
    }

    /// Trapezoid weights, normalized to sum to one.
    fn cell_weights(&self) -> (Vec<f64>, Vec<f64>) {
        let w = |m: usize| -> Vec<f64> {
            let mut v = vec![1.0; m];
            v[0] = 0.5;
            v[m - 1] = 0.5;
            let s: f64 = v.iter().sum();
            v.iter().map(|x| x / s).collect()
        };
        (w(self.nx), w(self.ny))
    }

    fn same_as(&self, other: &GridSpec) -> bool {
        self == other
    }
}

/// Real values on a [`GridSpec`], bounded below by `clamp`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub clamp: f64,
    #[serde(default)]
    pub provenance: String,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    #[serde(rename = "box")]
    bounds: [f64; 4],
    spacing: [f64; 2],
    nx: usize,
    ny: usize,
    clamp: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slice: Option<Slice>,
    provenance: String,
}

impl ScalarField {
    pub fn new(grid: GridSpec, mut values: Vec<f64>, clamp: f64) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        for v in values.iter_mut() {
            if v.is_nan() || *v < clamp {
                *v = clamp;
            }
        }
        Ok(ScalarField {
            grid,
            values,
            clamp,
            provenance: String::new(),
        })
    }

    /// Evaluates `f` at every grid point, one rayon task per row.
    pub fn from_fn<F>(grid: &GridSpec, clamp: f64, f: F) -> Result<Self>
    where
        F: Fn(&[Complex64]) -> f64 + Sync,
    {
        grid.validate()?;
        let values: Vec<f64> = (0..grid.ny)
            .into_par_iter()
            .flat_map_iter(|j| {
                let f = &f;
                (0..grid.nx).map(move |i| f(&grid.point(i, j)))
            })
            .collect();
        ScalarField::new(grid.clone(), values, clamp)
    }

    pub fn with_provenance(mut self, p: impl Into<String>) -> Self {
        self.provenance = p.into();
        self
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.grid.nx + i]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,value\n");
        for j in 0..self.grid.ny {
            for i in 0..self.grid.nx {
                let z = self.grid.planar(i, j);
                s.push_str(&format!("{},{},{}\n", z.re, z.im, self.get(i, j)));
            }
        }
        s
    }

    /// Writes `<stem>.csv` and `<stem>.json`; returns the CSV path.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let csv = dir.join(format!("{stem}.csv"));
        std::fs::File::create(&csv)?.write_all(self.to_csv().as_bytes())?;
        let (dx, dy) = self.grid.spacing();
        let g = &self.grid;
        let side = Sidecar {
            bounds: [g.x_min, g.x_max, g.y_min, g.y_max],
            spacing: [dx, dy],
            nx: g.nx,
            ny: g.ny,
            clamp: self.clamp,
            slice: g.slice.clone(),
            provenance: self.provenance.clone(),
        };
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&side)?)?;
        Ok(csv)
    }

    pub fn load(csv: &Path) -> Result<Self> {
        let side: Sidecar = serde_json::from_str(&std::fs::read_to_string(csv.with_extension("json"))?)?;
        let grid = GridSpec {
            x_min: side.bounds[0],
            x_max: side.bounds[1],
            y_min: side.bounds[2],
            y_max: side.bounds[3],
            nx: side.nx,
            ny: side.ny,
            slice: side.slice,
        };
        let text = std::fs::read_to_string(csv)?;
        let mut values = Vec::with_capacity(grid.len());
        for (k, line) in text.lines().enumerate().skip(1) {
            let v = line
                .rsplit(',')
                .next()
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| Error::Parse(format!("{}:{}: bad row", csv.display(), k + 1)))?;
            values.push(v);
        }
        Ok(ScalarField::new(grid, values, side.clamp)?.with_provenance(side.provenance))
    }
}

/// `log B_n(z)`, overflow safe.
pub fn log_bergman(basis: &OrthonormalBasis, point: &[Complex64]) -> f64 {
    basis.evaluate_scaled(point).log_sum_sq()
}

/// `B_n(z) = Σ_α |p_{n,α}(z)|^2`; `+∞` when it overflows.
pub fn bergman_fn(basis: &OrthonormalBasis, point: &[Complex64]) -> f64 {
    log_bergman(basis, point).exp()
}

/// `(1/2n) log B_n` on the grid.
pub fn extremal_estimate(basis: &OrthonormalBasis, grid: &GridSpec) -> Result<ScalarField> {
    if grid.dim() != basis.dim() {
        return Err(Error::GridMismatch(format!(
            "grid points are in C^{}, basis in C^{}",
            grid.dim(),
            basis.dim()
        )));
    }
    let n2 = 2.0 * basis.degree().max(1) as f64;
    Ok(
        ScalarField::from_fn(grid, CLAMP_FLOOR, |p| log_bergman(basis, p) / n2)?
            .with_provenance(format!("(1/2n) log B_n, n = {}", basis.degree())),
    )
}

/// Closed-form `V_{K,Q}` for solved cases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "kebab-case")]
pub enum ReferenceExtremal {
    CircleUnweighted {
        radius: f64,
    },
    IntervalUnweighted {
        a: f64,
        b: f64,
    },
    /// Unit disk with `Q = |z|^2`.
    GinibreDisk,
    /// `max_j log⁺(|z_j| / R)`
    PolydiskUnweighted {
        radius: f64,
    },
    /// `log⁺(‖z‖ / R)`
    BallUnweighted {
        radius: f64,
    },
}

fn log_plus(x: f64) -> f64 {
    x.ln().max(0.0)
}

impl ReferenceExtremal {
    /// Recognizes configurations with a known closed form. A constant weight
    /// `Q ≡ c` is handled by the caller through [`ReferenceExtremal::offset`].
    pub fn for_set(set: &WeightedSet) -> Option<Self> {
        let unweighted = set.weight_expr.is_constant();
        match set.kind {
            SetKind::Circle { radius } | SetKind::Disk { radius } if unweighted => {
                Some(ReferenceExtremal::CircleUnweighted { radius })
            }
            SetKind::Interval { a, b } if unweighted => Some(ReferenceExtremal::IntervalUnweighted { a, b }),
            SetKind::Disk { radius } if radius == 1.0 && is_abs_sq(&set.weight_expr) => {
                Some(ReferenceExtremal::GinibreDisk)
            }
            SetKind::Polydisk { radius } if unweighted => Some(ReferenceExtremal::PolydiskUnweighted { radius }),
            SetKind::Ball { radius } if unweighted => Some(ReferenceExtremal::BallUnweighted { radius }),
            _ => None,
        }
    }

    /// The constant `c` when `Q ≡ c` (then `V_{K,Q} = V_K + c`).
    pub fn offset(set: &WeightedSet) -> f64 {
        if set.weight_expr.is_constant() {
            set.weight_expr.eval(&[Complex64::new(0.0, 0.0); 2]).unwrap_or(0.0)
        } else {
            0.0
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ReferenceExtremal::PolydiskUnweighted { .. } | ReferenceExtremal::BallUnweighted { .. } => 2,
            _ => 1,
        }
    }

    pub fn eval(&self, point: &[Complex64]) -> Result<f64> {
        if point.len() != self.dim() {
            return Err(Error::Argument(format!(
                "reference lives in C^{}, point has {} coordinates",
                self.dim(),
                point.len()
            )));
        }
        let z = point[0];
        Ok(match *self {
            ReferenceExtremal::CircleUnweighted { radius } => log_plus(z.norm() / radius),
            ReferenceExtremal::IntervalUnweighted { a, b } => {
                let u = (2.0 * z - (a + b)) / (b - a);
                let s = (u * u - 1.0).sqrt();
                (u + s).norm().max((u - s).norm()).ln().max(0.0)
            }
            ReferenceExtremal::GinibreDisk => {
                let r = z.norm();
                if r * r <= 0.5 {
                    r * r
                } else {
                    r.ln() + 0.5 * (1.0 + LN_2)
                }
            }
            ReferenceExtremal::PolydiskUnweighted { radius } => {
                log_plus(point[0].norm().max(point[1].norm()) / radius)
            }
            ReferenceExtremal::BallUnweighted { radius } => {
                log_plus((point[0].norm_sqr() + point[1].norm_sqr()).sqrt() / radius)
            }
        })
    }

    pub fn field(&self, grid: &GridSpec) -> Result<ScalarField> {
        if grid.dim() != self.dim() {
            return Err(Error::GridMismatch("reference and grid dimensions differ".into()));
        }
        Ok(ScalarField::from_fn(grid, CLAMP_FLOOR, |p| self.eval(p).unwrap_or(f64::NAN))?
            .with_provenance(format!("{self:?}")))
    }
}

fn is_abs_sq(q: &WeightExpr) -> bool {
    *q == WeightExpr::norm_sq(1, 1.0) || *q == WeightExpr::AbsSq { coord: 0 }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    L1,
    Sup,
}

/// Trapezoid-weighted mean (L1) or max (sup) of `|a - b|`.
pub fn field_distance(a: &ScalarField, b: &ScalarField, mode: DistanceMode) -> Result<f64> {
    if !a.grid.same_as(&b.grid) {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", a.grid, b.grid)));
    }
    let g = &a.grid;
    match mode {
        DistanceMode::Sup => Ok(a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)),
        DistanceMode::L1 => {
            let (wx, wy) = g.cell_weights();
            let mut s = 0.0;
            for j in 0..g.ny {
                for i in 0..g.nx {
                    s += wx[i] * wy[j] * (a.get(i, j) - b.get(i, j)).abs();
                }
            }
            Ok(s)
        }
    }
}

/// `#{α : (1/n) log |values_α| ≥ threshold}`.
pub fn threshold_count(values: &[Complex64], n: u32, threshold: f64) -> usize {
    let n = n.max(1) as f64;
    values
        .iter()
        .filter(|v| v.norm().ln() / n >= threshold)
        .count()
}

/// Same count on overflow-safe scaled values.
pub fn threshold_count_scaled(values: &ScaledValues, threshold: f64) -> usize {
    (0..values.scaled.len())
        .filter(|&i| values.log_abs_over_n(i) >= threshold)
        .count()
}

/// `J_n(z, ε)` with `v = V_{K,Q}(z)`.
pub fn j_count(basis: &OrthonormalBasis, point: &[Complex64], v: f64, eps: f64) -> usize {
    threshold_count_scaled(&basis.evaluate_scaled(point), v - eps)
}

/// `K_n(M)` at a point.
pub fn k_count(basis: &OrthonormalBasis, point: &[Complex64], m: f64) -> usize {
    threshold_count_scaled(&basis.evaluate_scaled(point), m)
}

/// `(1/n) log |p_{n,α_n}(z)|` along a schedule of `n`, with `α_n = alpha(n)`.
pub fn low_degree_flatness<F>(
    set: &WeightedSet,
    schedule: &[u32],
    point: &[Complex64],
    alpha: F,
    precision_bits: u32,
) -> Result<Vec<(u32, f64)>>
where
    F: Fn(u32) -> MultiIndex,
{
    schedule
        .iter()
        .map(|&n| {
            let a = alpha(n);
            if a.degree() > n {
                return Err(Error::DegreeExceeded {
                    degree: a.degree() as usize,
                    n: n as usize,
                });
            }
            let b = OrthonormalBasis::for_set(set, n, precision_bits)?;
            let i = b
                .order()
                .position(&a)
                .ok_or_else(|| Error::Argument(format!("{a} not in the order")))?;
            Ok((n, b.evaluate_scaled(point).log_abs_over_n(i)))
        })
        .collect()
}
