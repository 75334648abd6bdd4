//! Coefficient laws, seeded streams and random polynomials `G_n = Σ ξ_α p_{n,α}`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extremal::CLAMP_FLOOR;
use crate::orthopoly::OrthonormalBasis;
use crate::precision::DdComplex;

/// Law of the i.i.d. coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "kebab-case")]
pub enum CoefficientLaw {
    /// `E|ξ|^2 = σ^2`, real and imaginary parts independent.
    ComplexGaussian { sigma: f64 },
    /// `±1` with probability 1/2 each.
    Rademacher {},
    /// Uniform on the disk of radius `radius`.
    UniformDisk { radius: f64 },
    /// `P(log(1+|ξ|) > t) = min(1, t^{-γ})`, uniform phase.
    LogPareto { gamma: f64 },
}

/// Tail of `log(1+|ξ|)` against `o(t^{-d})`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailClass {
    Satisfies,
    BoundaryFails,
    Fails,
}

impl CoefficientLaw {
    pub fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            CoefficientLaw::ComplexGaussian { sigma } => ("sigma", sigma),
            CoefficientLaw::Rademacher {} => return Ok(()),
            CoefficientLaw::UniformDisk { radius } => ("radius", radius),
            CoefficientLaw::LogPareto { gamma } => ("gamma", gamma),
        };
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::Argument(format!("{name} must be positive and finite, got {v}")))
        }
    }

    pub fn label(&self) -> String {
        match self {
            CoefficientLaw::ComplexGaussian { sigma } => format!("complex-gaussian(σ={sigma})"),
            CoefficientLaw::Rademacher {} => "rademacher".into(),
            CoefficientLaw::UniformDisk { radius } => format!("uniform-disk(R={radius})"),
            CoefficientLaw::LogPareto { gamma } => format!("log-pareto(γ={gamma})"),
        }
    }

    /// `P(log(1+|ξ|) > t)` for the log-pareto law.
    pub fn log_tail(&self, t: f64) -> Option<f64> {
        match *self {
            CoefficientLaw::LogPareto { gamma } => Some(if t <= 1.0 { 1.0 } else { t.powf(-gamma) }),
            _ => None,
        }
    }
}

pub fn classify_tail(law: &CoefficientLaw, d: usize) -> TailClass {
    match *law {
        CoefficientLaw::LogPareto { gamma } => {
            let d = d as f64;
            if gamma > d {
                TailClass::Satisfies
            } else if gamma == d {
                TailClass::BoundaryFails
            } else {
                TailClass::Fails
            }
        }
        _ => TailClass::Satisfies,
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Purpose labels for [`SeedStream`].
pub mod purpose {
    pub const COEFFICIENTS: u64 = 1;
    pub const POINTS: u64 = 2;
    pub const ROOT_INIT: u64 = 3;

    /// Distinguishes the same purpose at different degrees.
    pub fn at_degree(label: u64, n: u32) -> u64 {
        (label << 32) | n as u64
    }
}

/// A ChaCha stream keyed by `(master, trial, purpose)`. Streams for
/// different keys are independent and need no shared state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedStream {
    pub master: u64,
    pub trial: u64,
    pub purpose: u64,
}

impl SeedStream {
    pub fn new(master: u64, trial: u64, purpose: u64) -> Self {
        SeedStream { master, trial, purpose }
    }

    pub fn stream_id(&self) -> u64 {
        splitmix64(splitmix64(self.trial) ^ self.purpose.rotate_left(29))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.master);
        r.set_stream(self.stream_id());
        r
    }
}

/// `ξ_α = e^{scales[α]} · values[α]`. Heavy-tailed draws overflow `f64`,
/// so their log-modulus is kept apart from a unit phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub scales: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl Coefficients {
    pub fn plain(values: Vec<Complex64>) -> Self {
        Coefficients {
            scales: vec![0.0; values.len()],
            values,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The common scale, when every entry shares one.
    pub fn common_scale(&self) -> Option<f64> {
        let s = *self.scales.first()?;
        self.scales.iter().all(|t| *t == s).then_some(s)
    }

    /// `log |ξ_i|`.
    pub fn log_abs(&self, i: usize) -> f64 {
        self.scales[i] + self.values[i].norm().ln()
    }

    /// `log(1 + |ξ_i|)`.
    pub fn log1p_abs(&self, i: usize) -> f64 {
        let l = self.log_abs(i);
        if l > 30.0 {
            l + (-l).exp().ln_1p()
        } else {
            l.exp().ln_1p()
        }
    }

    /// The draws as ordinary numbers, if they fit.
    pub fn to_plain(&self) -> Option<Vec<Complex64>> {
        let v: Vec<Complex64> = self
            .values
            .iter()
            .zip(&self.scales)
            .map(|(z, s)| if *s == 0.0 { *z } else { z * s.exp() })
            .collect();
        v.iter().all(|z| z.re.is_finite() && z.im.is_finite()).then_some(v)
    }

    /// Coefficient dump as CSV; a `log_scale` column appears only when some
    /// entry needs it.
    pub fn to_csv(&self) -> String {
        let scaled = self.scales.iter().any(|s| *s != 0.0);
        let mut s = String::from(if scaled { "re,im,log_scale\n" } else { "re,im\n" });
        for (z, l) in self.values.iter().zip(&self.scales) {
            if scaled {
                s.push_str(&format!("{},{},{}\n", z.re, z.im, l));
            } else {
                s.push_str(&format!("{},{}\n", z.re, z.im));
            }
        }
        s
    }
}

/// `count` i.i.d. draws from `law`, determined by `stream`.
pub fn sample_coefficients(law: &CoefficientLaw, count: usize, stream: &SeedStream) -> Result<Coefficients> {
    law.validate()?;
    if count == 0 {
        return Err(Error::Argument("coefficient count must be at least 1".into()));
    }
    let mut rng = stream.rng();
    Ok(draw(law, count, &mut rng))
}

fn draw<R: Rng>(law: &CoefficientLaw, count: usize, rng: &mut R) -> Coefficients {
    match *law {
        CoefficientLaw::ComplexGaussian { sigma } => {
            let s = sigma / 2f64.sqrt();
            Coefficients::plain(
                (0..count)
                    .map(|_| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        Complex64::new(s * re, s * im)
                    })
                    .collect(),
            )
        }
        CoefficientLaw::Rademacher {} => Coefficients::plain(
            (0..count)
                .map(|_| Complex64::new(if rng.gen::<bool>() { 1.0 } else { -1.0 }, 0.0))
                .collect(),
        ),
        CoefficientLaw::UniformDisk { radius } => Coefficients::plain(
            (0..count)
                .map(|_| {
                    let r = radius * rng.gen::<f64>().sqrt();
                    Complex64::from_polar(r, 2.0 * PI * rng.gen::<f64>())
                })
                .collect(),
        ),
        CoefficientLaw::LogPareto { gamma } => {
            // |ξ| = exp(U^{-1/γ}) - 1, carried as log|ξ|
            let mut c = Coefficients {
                scales: Vec::with_capacity(count),
                values: Vec::with_capacity(count),
            };
            for _ in 0..count {
                let u = 1.0 - rng.gen::<f64>();
                let t = u.powf(-1.0 / gamma);
                let log_mod = if t > 30.0 { t + (-(-t).exp()).ln_1p() } else { t.exp_m1().ln() };
                c.scales.push(log_mod);
                c.values.push(Complex64::from_polar(1.0, 2.0 * PI * rng.gen::<f64>()));
            }
            c
        }
    }
}

fn is_zero(m: &DdComplex) -> bool {
    m.re.hi == 0.0 && m.im.hi == 0.0
}

/// Sum of `e^{l_i} u_i` returned as `(log |sum|, sum / |sum|)`-free pair
/// `(shift, partial)` with `sum = e^{shift} partial`.
fn log_sum(terms: impl Iterator<Item = (f64, Complex64)> + Clone) -> (f64, Complex64) {
    let top = terms.clone().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return (0.0, Complex64::new(0.0, 0.0));
    }
    let s = terms.map(|(l, u)| u * (l - top).exp()).sum();
    (top, s)
}

/// `G_n = Σ_α ξ_α p_{n,α}`, held both in the basis and in monomial form.
#[derive(Clone, Debug)]
pub struct RandomPolynomial {
    basis: Arc<OrthonormalBasis>,
    coeffs: Coefficients,
    /// Monomial coefficient `β` is `e^{mono_scales[β]} · monomial[β]`.
    monomial: Vec<DdComplex>,
    mono_scales: Vec<f64>,
    common_scale: Option<f64>,
    effective_degree: Option<u32>,
    seed: Option<SeedStream>,
}

impl RandomPolynomial {
    pub fn assemble(basis: Arc<OrthonormalBasis>, coeffs: Coefficients) -> Result<Self> {
        let k = basis.len();
        if coeffs.len() != k || coeffs.scales.len() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                got: coeffs.len(),
            });
        }
        let xi: Vec<DdComplex> = coeffs.values.iter().map(|z| DdComplex::from_c64(*z)).collect();
        let mut monomial = vec![DdComplex::ZERO; k];
        let mut mono_scales = vec![0.0; k];
        let common_scale = coeffs.common_scale();
        if let Some(s) = common_scale {
            for (a, x) in xi.iter().enumerate() {
                if is_zero(x) {
                    continue;
                }
                for (b, m) in monomial.iter_mut().enumerate().take(a + 1) {
                    *m = m.add(basis.coefficient_dd(b, a).mul(*x));
                }
            }
            mono_scales.fill(s);
        } else {
            // each monomial coefficient relative to its own largest term
            for b in 0..k {
                let top = (b..k)
                    .filter(|&a| !is_zero(&xi[a]) && !is_zero(&basis.coefficient_dd(b, a)))
                    .map(|a| basis.coefficient(b, a).norm().ln() + coeffs.log_abs(a))
                    .fold(f64::NEG_INFINITY, f64::max);
                if top == f64::NEG_INFINITY {
                    continue;
                }
                let mut acc = DdComplex::ZERO;
                for a in b..k {
                    let cba = basis.coefficient_dd(b, a);
                    if is_zero(&xi[a]) || is_zero(&cba) {
                        continue;
                    }
                    let f = DdComplex::from_c64(Complex64::new((coeffs.scales[a] - top).exp(), 0.0));
                    acc = acc.add(cba.mul(xi[a]).mul(f));
                }
                monomial[b] = acc;
                mono_scales[b] = top;
            }
        }
        let order = basis.order();
        let effective_degree = monomial
            .iter()
            .enumerate()
            .filter(|(_, m)| !is_zero(m))
            .map(|(i, _)| order.get(i).degree())
            .max();
        Ok(RandomPolynomial {
            basis,
            coeffs,
            monomial,
            mono_scales,
            common_scale,
            effective_degree,
            seed: None,
        })
    }

    /// Draws the coefficients from `law` and assembles.
    pub fn sample(basis: Arc<OrthonormalBasis>, law: &CoefficientLaw, stream: SeedStream) -> Result<Self> {
        let c = sample_coefficients(law, basis.len(), &stream)?;
        let mut p = Self::assemble(basis, c)?;
        p.seed = Some(stream);
        Ok(p)
    }

    pub fn basis(&self) -> &OrthonormalBasis {
        &self.basis
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coeffs
    }

    pub fn seed(&self) -> Option<SeedStream> {
        self.seed
    }

    pub fn degree(&self) -> u32 {
        self.basis.degree()
    }

    /// Largest `|β|` with a nonzero monomial coefficient; `None` for `G ≡ 0`.
    pub fn effective_degree(&self) -> Option<u32> {
        self.effective_degree
    }

    /// Monomial coefficients in the basis order, as scale/value pairs.
    pub fn monomial_form(&self) -> Coefficients {
        Coefficients {
            scales: self.mono_scales.clone(),
            values: self.monomial.iter().map(|m| m.to_c64()).collect(),
        }
    }

    /// Monomial coefficients as plain numbers, if they fit.
    pub fn monomial_coefficients(&self) -> Option<Vec<Complex64>> {
        self.monomial_form().to_plain()
    }

    /// For `d = 1`: scale/value pairs for `1, z, ..., z^n`.
    pub fn univariate_coefficients(&self) -> Result<Coefficients> {
        if self.basis.dim() != 1 {
            return Err(Error::Argument("univariate coefficients need d = 1".into()));
        }
        Ok(self.monomial_form())
    }

    /// `G(z) = e^{shift} · value`.
    fn evaluate_split(&self, point: &[Complex64]) -> (f64, Complex64) {
        if let Some(s) = self.common_scale {
            if point.len() == 1 {
                return self.horner_split(s, point[0]);
            }
            let (mono, log_rho) = self.basis.scaled_monomials(point);
            let v = self
                .monomial
                .iter()
                .zip(&mono)
                .fold(DdComplex::ZERO, |acc, (c, m)| acc.add(c.mul(*m)))
                .to_c64();
            return (s + self.degree() as f64 * log_rho, v);
        }
        // log-polar evaluation: each term as (log-modulus, unit phase)
        if point.len() == 1 {
            let z = point[0];
            let (lz, uz) = if z.norm() == 0.0 {
                (f64::NEG_INFINITY, Complex64::new(1.0, 0.0))
            } else {
                (z.norm().ln(), z / z.norm())
            };
            let mut terms = Vec::with_capacity(self.monomial.len());
            let mut u = Complex64::new(1.0, 0.0);
            for (j, m) in self.monomial.iter().enumerate() {
                if j > 0 {
                    u *= uz;
                }
                if is_zero(m) || (j > 0 && lz == f64::NEG_INFINITY) {
                    continue;
                }
                let m = m.to_c64();
                let jl = if j == 0 { 0.0 } else { j as f64 * lz };
                terms.push((self.mono_scales[j] + m.norm().ln() + jl, u * m / m.norm()));
            }
            return log_sum(terms.into_iter());
        }
        let logs: Vec<f64> = point.iter().map(|z| z.norm().ln()).collect();
        let units: Vec<Complex64> = point
            .iter()
            .map(|z| if z.norm() == 0.0 { Complex64::new(1.0, 0.0) } else { z / z.norm() })
            .collect();
        let order = self.basis.order();
        let terms = self.monomial.iter().enumerate().filter(|(_, m)| !is_zero(m)).map(|(b, m)| {
            let m = m.to_c64();
            let beta = order.get(b);
            let mut l = self.mono_scales[b] + m.norm().ln();
            let mut u = m / m.norm();
            for (j, &e) in beta.exps().iter().enumerate() {
                if e > 0 {
                    l += e as f64 * logs[j];
                    u *= units[j].powu(e);
                }
            }
            (l, u)
        });
        log_sum(terms)
    }

    /// Univariate compensated Horner; outside the unit disk the reversed
    /// polynomial is evaluated at `1/z` so nothing overflows.
    fn horner_split(&self, s: f64, z: Complex64) -> (f64, Complex64) {
        let r = z.norm();
        let n = self.degree() as f64;
        if r <= 1.0 {
            let zz = DdComplex::from_c64(z);
            let v = self.monomial.iter().rev().fold(DdComplex::ZERO, |acc, c| acc.mul(zz).add(*c));
            (s, v.to_c64())
        } else {
            let w = DdComplex::from_c64(1.0 / z);
            let v = self.monomial.iter().fold(DdComplex::ZERO, |acc, c| acc.mul(w).add(*c));
            // G(z) = z^n rev(1/z); the phase of z^n goes into the value
            let phase = (z / r).powu(self.degree());
            (s + n * r.ln(), v.to_c64() * phase)
        }
    }

    pub fn evaluate(&self, point: &[Complex64]) -> Complex64 {
        let (shift, v) = self.evaluate_split(point);
        v * shift.exp()
    }

    /// `Σ ξ_α p_{n,α}(z)` through the basis values.
    pub fn evaluate_via_basis(&self, point: &[Complex64]) -> Complex64 {
        let sv = self.basis.evaluate_scaled(point);
        let nlr = self.degree() as f64 * sv.log_rho;
        let terms = sv
            .scaled
            .iter()
            .zip(&self.coeffs.values)
            .zip(&self.coeffs.scales)
            .filter(|((p, x), _)| p.norm() > 0.0 && x.norm() > 0.0)
            .map(|((p, x), s)| {
                let t = p * x;
                (s + t.norm().ln() + nlr, t / t.norm())
            });
        let (shift, v) = log_sum(terms);
        v * shift.exp()
    }

    /// `(1/n) log |G_n(z)|` without clamping.
    pub fn log_abs_over_n_raw(&self, point: &[Complex64]) -> f64 {
        let (shift, v) = self.evaluate_split(point);
        (shift + v.norm().ln()) / self.degree().max(1) as f64
    }

    /// `(1/n) log |G_n(z)|`, clamped below at the field floor.
    pub fn log_abs_over_n(&self, point: &[Complex64]) -> f64 {
        let v = self.log_abs_over_n_raw(point);
        if v.is_nan() || v < CLAMP_FLOOR {
            CLAMP_FLOOR
        } else {
            v
        }
    }
}
