use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::weight::WeightExpr;
use crate::error::{Error, Result};

pub const GEOM_SCHEMA: &str = "geom-v1";

/// Supported compact sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum SetKind {
    Circle {
        radius: f64,
    },
    Interval {
        a: f64,
        b: f64,
    },
    Disk {
        radius: f64,
    },
    Ball {
        #[serde(default = "one")]
        radius: f64,
    },
    Polydisk {
        #[serde(default = "one")]
        radius: f64,
    },
    /// `|z|^2/r^2 + |w|^2/A^2 <= 1`
    Ellipsoid {
        r: f64,
        #[serde(rename = "A")]
        a: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// Which part of a solid set carries the reference measure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    /// Normalized volume (area) measure.
    #[default]
    Volume,
    /// Normalized measure on the Shilov boundary: circle, sphere, torus.
    Boundary,
}

fn default_schema() -> String {
    GEOM_SCHEMA.to_string()
}

/// A compact set `K` with a weight `Q` on it; `w = exp(-Q)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedSet {
    #[serde(default = "default_schema")]
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub kind: SetKind,
    #[serde(default)]
    pub weight_expr: WeightExpr,
    #[serde(default)]
    pub support: Support,
}

impl WeightedSet {
    pub fn new(kind: SetKind, weight_expr: WeightExpr) -> Self {
        WeightedSet {
            schema: default_schema(),
            name: None,
            kind,
            weight_expr,
            support: Support::Volume,
        }
    }

    pub fn with_support(mut self, support: Support) -> Self {
        self.support = support;
        self
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    /// Unit circle, `Q = 0`.
    pub fn unit_circle() -> Self {
        WeightedSet::new(SetKind::Circle { radius: 1.0 }, WeightExpr::zero()).named("circle")
    }

    /// `[-1, 1]`, `Q = 0`.
    pub fn unit_interval() -> Self {
        WeightedSet::new(SetKind::Interval { a: -1.0, b: 1.0 }, WeightExpr::zero())
            .named("interval")
    }

    /// Unit disk with `Q = |z|^2`.
    pub fn ginibre_disk() -> Self {
        WeightedSet::new(SetKind::Disk { radius: 1.0 }, WeightExpr::norm_sq(1, 1.0))
            .named("ginibre-disk")
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            SetKind::Circle { .. } | SetKind::Interval { .. } | SetKind::Disk { .. } => 1,
            SetKind::Ball { .. } | SetKind::Polydisk { .. } | SetKind::Ellipsoid { .. } => 2,
        }
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            match &self.kind {
                SetKind::Circle { .. } => "circle",
                SetKind::Interval { .. } => "interval",
                SetKind::Disk { .. } => "disk",
                SetKind::Ball { .. } => "ball",
                SetKind::Polydisk { .. } => "polydisk",
                SetKind::Ellipsoid { .. } => "ellipsoid",
            }
            .to_string()
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != GEOM_SCHEMA {
            return Err(Error::Parse(format!(
                "unknown geometry schema {:?}, expected {GEOM_SCHEMA:?}",
                self.schema
            )));
        }
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Argument(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match self.kind {
            SetKind::Circle { radius }
            | SetKind::Disk { radius }
            | SetKind::Ball { radius }
            | SetKind::Polydisk { radius } => positive("radius", radius)?,
            SetKind::Interval { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(Error::Argument(format!("interval needs a < b, got [{a}, {b}]")));
                }
            }
            SetKind::Ellipsoid { r, a } => {
                positive("r", r)?;
                positive("A", a)?;
            }
        }
        if let Some(c) = self.weight_expr.max_coord() {
            if c >= self.dim() {
                return Err(Error::Argument(format!(
                    "weight references coordinate {c} but the set lives in C^{}",
                    self.dim()
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: WeightedSet = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("geometry serializes")
    }

    pub fn q(&self, point: &[Complex64]) -> Result<f64> {
        self.weight_expr.eval(point)
    }

    /// Whether the set is circled: `e^{i t} K = K`.
    pub fn is_circled(&self) -> bool {
        !matches!(self.kind, SetKind::Interval { .. })
    }

    /// Points sampling `K` densely enough to estimate weighted sup norms.
    /// `count` is the number of samples along each angular / linear direction.
    ///
    /// Without a weight the maximum principle lets us sample the Shilov
    /// boundary only; with a weight the whole set is sampled.
    pub fn sup_nodes(&self, count: usize) -> Vec<Vec<Complex64>> {
        let count = count.max(8);
        let weighted = !self.weight_expr.is_constant();
        let circle = |r: f64, m: usize| -> Vec<Complex64> {
            (0..m)
                .map(|k| Complex64::from_polar(r, 2.0 * PI * k as f64 / m as f64))
                .collect()
        };
        let radii = |r: f64| -> Vec<f64> {
            let nr = count / 4 + 2;
            (0..=nr).map(|i| r * i as f64 / nr as f64).collect()
        };
        match self.kind {
            SetKind::Circle { radius } => circle(radius, count).into_iter().map(|z| vec![z]).collect(),
            SetKind::Interval { a, b } => (0..count)
                .map(|i| {
                    let t = i as f64 / (count - 1) as f64;
                    vec![Complex64::new(a + (b - a) * t, 0.0)]
                })
                .collect(),
            SetKind::Disk { radius } => {
                if weighted {
                    let mut out = vec![vec![Complex64::new(0.0, 0.0)]];
                    for r in radii(radius).into_iter().skip(1) {
                        out.extend(circle(r, count).into_iter().map(|z| vec![z]));
                    }
                    out
                } else {
                    circle(radius, count).into_iter().map(|z| vec![z]).collect()
                }
            }
            SetKind::Polydisk { radius } => {
                let rs = if weighted { radii(radius) } else { vec![radius] };
                let m = (count as f64).sqrt().ceil() as usize * 2;
                let mut out = Vec::new();
                for &r1 in &rs {
                    for &r2 in &rs {
                        for z in circle(r1, m) {
                            for w in circle(r2, m) {
                                out.push(vec![z, w]);
                            }
                        }
                    }
                }
                out
            }
            SetKind::Ball { radius } => sphere_points(count, weighted, radius, radius),
            SetKind::Ellipsoid { r, a } => sphere_points(count, weighted, r, a),
        }
    }
}

/// Points on (or, with `solid`, inside) `{|z|^2/r1^2 + |w|^2/r2^2 = 1}`.
fn sphere_points(count: usize, solid: bool, r1: f64, r2: f64) -> Vec<Vec<Complex64>> {
    let m = (count as f64).sqrt().ceil() as usize * 2;
    let nphi = m / 2 + 1;
    let shells: Vec<f64> = if solid {
        let ns = count / 8 + 2;
        (1..=ns).map(|i| i as f64 / ns as f64).collect()
    } else {
        vec![1.0]
    };
    let mut out = Vec::new();
    if solid {
        out.push(vec![Complex64::new(0.0, 0.0); 2]);
    }
    for rho in shells {
        for i in 0..nphi {
            let phi = 0.5 * PI * i as f64 / (nphi - 1) as f64;
            for k1 in 0..m {
                for k2 in 0..m {
                    let t1 = 2.0 * PI * k1 as f64 / m as f64;
                    let t2 = 2.0 * PI * k2 as f64 / m as f64;
                    out.push(vec![
                        Complex64::from_polar(rho * r1 * phi.cos(), t1),
                        Complex64::from_polar(rho * r2 * phi.sin(), t2),
                    ]);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_and_shape() {
        let g = WeightedSet::ginibre_disk();
        let text = g.to_json();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["schema"], "geom-v1");
        assert_eq!(v["kind"], "disk");
        assert_eq!(v["params"]["radius"], 1.0);
        assert!(v["weight_expr"].is_object());
        assert_eq!(WeightedSet::from_json(&text).unwrap(), g);
    }

    #[test]
    fn parse_ellipsoid_and_defaults() {
        let s = WeightedSet::from_json(r#"{"kind":"ellipsoid","params":{"r":0.5,"A":2.0}}"#).unwrap();
        assert_eq!(s.kind, SetKind::Ellipsoid { r: 0.5, a: 2.0 });
        assert_eq!(s.weight_expr, WeightExpr::zero());
        assert_eq!(s.dim(), 2);
        let s = WeightedSet::from_json(r#"{"kind":"ball","params":{}}"#).unwrap();
        assert_eq!(s.kind, SetKind::Ball { radius: 1.0 });
    }

    #[test]
    fn rejects_bad_descriptors() {
        assert!(WeightedSet::from_json(r#"{"kind":"torus","params":{}}"#).is_err());
        assert!(WeightedSet::from_json(r#"{"kind":"interval","params":{"a":1,"b":0}}"#).is_err());
        assert!(WeightedSet::from_json(
            r#"{"kind":"circle","params":{"radius":1},"weight_expr":{"op":"abs","coord":1}}"#
        )
        .is_err());
        assert!(WeightedSet::from_json(r#"{"schema":"geom-v0","kind":"circle","params":{"radius":1}}"#).is_err());
    }

    #[test]
    fn sup_nodes_lie_in_set() {
        for s in [
            WeightedSet::unit_circle(),
            WeightedSet::ginibre_disk(),
            WeightedSet::new(SetKind::Ellipsoid { r: 0.5, a: 2.0 }, WeightExpr::zero()),
            WeightedSet::new(SetKind::Ball { radius: 1.0 }, WeightExpr::norm_sq(2, 1.0)),
        ] {
            let nodes = s.sup_nodes(64);
            assert!(nodes.len() >= 64);
            for p in nodes {
                let inside = match s.kind {
                    SetKind::Circle { radius } | SetKind::Disk { radius } => p[0].norm() <= radius + 1e-12,
                    SetKind::Ellipsoid { r, a } => p[0].norm_sqr() / (r * r) + p[1].norm_sqr() / (a * a) <= 1.0 + 1e-12,
                    SetKind::Ball { radius } => p[0].norm_sqr() + p[1].norm_sqr() <= radius * radius + 1e-12,
                    _ => true,
                };
                assert!(inside);
            }
        }
    }
}
