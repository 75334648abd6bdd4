use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed-form weight `Q`, built from a small fixed vocabulary so it
/// evaluates identically everywhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum WeightExpr {
    Const { value: f64 },
    /// `|z_j|`
    Abs { coord: usize },
    /// `|z_j|^2`
    AbsSq { coord: usize },
    /// `Re z_j`
    Re { coord: usize },
    /// `log(1 + |z|^2)` with `|z|` the Euclidean norm
    LogOnePlusNormSq,
    Sum { terms: Vec<WeightExpr> },
    Scale { factor: f64, expr: Box<WeightExpr> },
}

impl Default for WeightExpr {
    fn default() -> Self {
        WeightExpr::zero()
    }
}

impl WeightExpr {
    pub fn zero() -> Self {
        WeightExpr::Const { value: 0.0 }
    }

    /// `|z_1|^2 + ... + |z_d|^2` scaled by `factor`.
    pub fn norm_sq(dim: usize, factor: f64) -> Self {
        let terms = (0..dim).map(|coord| WeightExpr::AbsSq { coord }).collect();
        WeightExpr::Scale {
            factor,
            expr: Box::new(WeightExpr::Sum { terms }),
        }
    }

    /// True when the expression is a constant (any nesting).
    pub fn is_constant(&self) -> bool {
        match self {
            WeightExpr::Const { .. } => true,
            WeightExpr::Abs { .. }
            | WeightExpr::AbsSq { .. }
            | WeightExpr::Re { .. }
            | WeightExpr::LogOnePlusNormSq => false,
            WeightExpr::Sum { terms } => terms.iter().all(|t| t.is_constant()),
            WeightExpr::Scale { factor, expr } => *factor == 0.0 || expr.is_constant(),
        }
    }

    /// True when the value depends on the point only through `|z_j|`.
    pub fn is_radial(&self) -> bool {
        match self {
            WeightExpr::Re { .. } => false,
            WeightExpr::Const { .. }
            | WeightExpr::Abs { .. }
            | WeightExpr::AbsSq { .. }
            | WeightExpr::LogOnePlusNormSq => true,
            WeightExpr::Sum { terms } => terms.iter().all(|t| t.is_radial()),
            WeightExpr::Scale { factor, expr } => *factor == 0.0 || expr.is_radial(),
        }
    }

    /// Highest coordinate referenced, if any.
    pub fn max_coord(&self) -> Option<usize> {
        match self {
            WeightExpr::Const { .. } | WeightExpr::LogOnePlusNormSq => None,
            WeightExpr::Abs { coord } | WeightExpr::AbsSq { coord } | WeightExpr::Re { coord } => {
                Some(*coord)
            }
            WeightExpr::Sum { terms } => terms.iter().filter_map(|t| t.max_coord()).max(),
            WeightExpr::Scale { expr, .. } => expr.max_coord(),
        }
    }

    fn eval_raw(&self, p: &[Complex64]) -> f64 {
        match self {
            WeightExpr::Const { value } => *value,
            WeightExpr::Abs { coord } => p[*coord].norm(),
            WeightExpr::AbsSq { coord } => p[*coord].norm_sqr(),
            WeightExpr::Re { coord } => p[*coord].re,
            WeightExpr::LogOnePlusNormSq => p.iter().map(|z| z.norm_sqr()).sum::<f64>().ln_1p(),
            WeightExpr::Sum { terms } => terms.iter().map(|t| t.eval_raw(p)).sum(),
            WeightExpr::Scale { factor, expr } => factor * expr.eval_raw(p),
        }
    }

    /// `Q(point)`.
    pub fn eval(&self, point: &[Complex64]) -> Result<f64> {
        if let Some(c) = self.max_coord() {
            if c >= point.len() {
                return Err(Error::Domain(format!(
                    "weight references coordinate {c} of a {}-dimensional point",
                    point.len()
                )));
            }
        }
        let q = self.eval_raw(point);
        if !q.is_finite() {
            return Err(Error::Domain(format!("Q is not finite at {point:?}")));
        }
        Ok(q)
    }
}

/// `(Q(point), w(point))` with `w = exp(-Q)`.
pub fn weight_eval(q: &WeightExpr, point: &[Complex64]) -> Result<(f64, f64)> {
    let qv = q.eval(point)?;
    let w = (-qv).exp();
    if w <= 0.0 {
        return Err(Error::Domain(format!(
            "weight underflows to zero at {point:?} (Q = {qv})"
        )));
    }
    Ok((qv, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn examples() {
        let zero = WeightExpr::zero();
        assert_eq!(weight_eval(&zero, &[c(3.0)]).unwrap(), (0.0, 1.0));
        let q = WeightExpr::norm_sq(1, 1.0);
        let (qv, w) = weight_eval(&q, &[c(1.0)]).unwrap();
        assert_eq!(qv, 1.0);
        assert_eq!(w, (-1.0f64).exp());
        let (qv, w) = weight_eval(&q, &[c(0.5f64.sqrt())]).unwrap();
        assert!((qv - 0.5).abs() < 1e-15);
        assert!((w - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        let q = WeightExpr::AbsSq { coord: 1 };
        assert!(matches!(q.eval(&[c(1.0)]), Err(Error::Domain(_))));
        let q = WeightExpr::Const { value: f64::INFINITY };
        assert!(q.eval(&[c(1.0)]).is_err());
    }

    #[test]
    fn json_shape() {
        let q = WeightExpr::Sum {
            terms: vec![
                WeightExpr::Re { coord: 0 },
                WeightExpr::Scale {
                    factor: 0.5,
                    expr: Box::new(WeightExpr::LogOnePlusNormSq),
                },
            ],
        };
        let s = serde_json::to_string(&q).unwrap();
        assert!(s.contains("\"op\":\"sum\""));
        let back: WeightExpr = serde_json::from_str(&s).unwrap();
        assert_eq!(back, q);
        let p = [Complex64::new(0.3, 0.4)];
        assert!((q.eval(&p).unwrap() - (0.3 + 0.5 * (1.25f64).ln())).abs() < 1e-15);
    }
}
