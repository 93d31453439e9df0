//! Momentum map, pulled-back Gram matrices, ν, projective distances and the
//! closed-form sandwich bounds used by the tracker.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hull::Hull;
use crate::linalg::{quad_form, symmetric_pseudo_inverse};
use crate::supports::{FewnomialSystem, ToricPoint};

/// Relative eigenvalue cutoff for the Gram pseudo-inverse.
pub const PINV_TOL: f64 = 1e-12;

/// Which norm on the tangent space is active.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricMode {
    /// Sum metric, `sqrt(w* G w)` with `G = Σ G_i`.
    #[default]
    Hermitian,
    /// Max metric, `max_i sqrt(w* G_i w)`.
    Finsler,
}

impl FromStr for MetricMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hermitian" => Ok(MetricMode::Hermitian),
            "finsler" => Ok(MetricMode::Finsler),
            other => Err(Error::InvalidArgument(format!("unknown metric mode '{other}'"))),
        }
    }
}

impl fmt::Display for MetricMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricMode::Hermitian => "hermitian",
            MetricMode::Finsler => "finsler",
        })
    }
}

/// Per-equation geometry at a point.
#[derive(Clone, Debug)]
pub struct EquationMetric {
    /// Shared scale `c_i` of the basis values.
    pub log_scale: f64,
    /// `log ‖V_i(x)‖`.
    pub log_kernel: f64,
    pub momentum: Vec<f64>,
    pub gram: DMatrix<f64>,
    /// `a - m_i` for each exponent.
    pub offsets: Vec<Vec<f64>>,
    /// Scaled basis values `ρ_a e^{a·x - c_i}`.
    pub terms: Vec<Complex64>,
    /// Euclidean norm of `terms`.
    pub terms_norm: f64,
}

#[derive(Clone, Debug)]
pub struct MetricData {
    pub equations: Vec<EquationMetric>,
    pub total_gram: DMatrix<f64>,
}

#[derive(Serialize)]
struct EquationDump {
    log_kernel: f64,
    momentum: Vec<f64>,
    gram: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct MetricDump {
    equations: Vec<EquationDump>,
    total_gram: Vec<Vec<f64>>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

impl MetricData {
    pub fn n(&self) -> usize {
        self.total_gram.nrows()
    }

    pub fn to_json(&self) -> String {
        let dump = MetricDump {
            equations: self
                .equations
                .iter()
                .map(|e| EquationDump {
                    log_kernel: e.log_kernel,
                    momentum: e.momentum.clone(),
                    gram: rows(&e.gram),
                })
                .collect(),
            total_gram: rows(&self.total_gram),
        };
        serde_json::to_string_pretty(&dump).expect("metric serializes")
    }

    /// `‖w‖_{i,x}`.
    pub fn equation_norm(&self, i: usize, w: &[Complex64]) -> f64 {
        quad_form(&self.equations[i].gram, w).sqrt()
    }
}

pub fn metric_data(f: &FewnomialSystem, x: &ToricPoint) -> MetricData {
    let n = f.n();
    let mut total_gram = DMatrix::zeros(n, n);
    let equations = f
        .equations()
        .iter()
        .map(|eq| {
            let (terms, c) = eq.scaled_terms(x.coords());
            let s: Vec<f64> = terms.iter().map(|e| e.norm_sqr()).collect();
            let k: f64 = s.iter().sum();
            let exps = eq.support().exponents();
            let mut momentum = vec![0.0; n];
            for (a, sa) in exps.iter().zip(&s) {
                for (mj, aj) in momentum.iter_mut().zip(a) {
                    *mj += sa * aj / k;
                }
            }
            let offsets: Vec<Vec<f64>> = exps
                .iter()
                .map(|a| a.iter().zip(&momentum).map(|(aj, mj)| aj - mj).collect())
                .collect();
            let mut gram = DMatrix::zeros(n, n);
            for (d, sa) in offsets.iter().zip(&s) {
                for p in 0..n {
                    for q in 0..n {
                        gram[(p, q)] += sa * d[p] * d[q] / k;
                    }
                }
            }
            total_gram += &gram;
            EquationMetric {
                log_scale: c,
                log_kernel: c + 0.5 * k.ln(),
                momentum,
                gram,
                offsets,
                terms,
                terms_norm: k.sqrt(),
            }
        })
        .collect();
    MetricData { equations, total_gram }
}

pub fn local_norm(md: &MetricData, w: &[Complex64], mode: MetricMode) -> f64 {
    match mode {
        MetricMode::Hermitian => quad_form(&md.total_gram, w).sqrt(),
        MetricMode::Finsler => (0..md.equations.len())
            .map(|i| md.equation_norm(i, w))
            .fold(0.0, f64::max),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NuValue {
    pub nu: f64,
    pub per_equation: Vec<f64>,
}

/// Circumscribed radius of `conv(A_i - m_i)` in the dual of `‖·‖_{i,x}`.
pub fn nu(md: &MetricData) -> NuValue {
    let per_equation: Vec<f64> = md
        .equations
        .iter()
        .map(|e| {
            let pinv = symmetric_pseudo_inverse(&e.gram, PINV_TOL);
            e.offsets
                .iter()
                .map(|d| {
                    let mut acc = 0.0;
                    for p in 0..d.len() {
                        for q in 0..d.len() {
                            acc += d[p] * pinv[(p, q)] * d[q];
                        }
                    }
                    acc.max(0.0).sqrt()
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let nu = per_equation.iter().cloned().fold(0.0, f64::max);
    NuValue { nu, per_equation }
}

/// `sin` of the angle between two coefficient vectors, 0 if either vanishes.
pub fn sine_distance(f: &[Complex64], g: &[Complex64]) -> f64 {
    let ff: f64 = f.iter().map(|c| c.norm_sqr()).sum();
    let gg: f64 = g.iter().map(|c| c.norm_sqr()).sum();
    if ff == 0.0 || gg == 0.0 {
        return 0.0;
    }
    // Residual of projecting f onto span(g); avoids cancellation in 1 - cos².
    let lambda: Complex64 = g.iter().zip(f).map(|(b, a)| b.conj() * a).sum::<Complex64>() / gg;
    let perp: f64 = f.iter().zip(g).map(|(a, b)| (a - lambda * b).norm_sqr()).sum();
    (perp / ff).sqrt().min(1.0)
}

pub fn multiproj_distance(f: &FewnomialSystem, g: &FewnomialSystem, mode: MetricMode) -> Result<f64> {
    if !f.same_shape(g) {
        return Err(Error::SupportMismatch("systems differ in supports or weights".into()));
    }
    let sines = f
        .equations()
        .iter()
        .zip(g.equations())
        .map(|(a, b)| sine_distance(a.coefficients(), b.coefficients()));
    Ok(match mode {
        MetricMode::Hermitian => sines.map(|s| s * s).sum::<f64>().sqrt(),
        MetricMode::Finsler => sines.fold(0.0, f64::max),
    })
}

/// `(2 - e^s, e^s)`: how far `‖·‖_y` can drift from `‖·‖_x`.
pub fn distortion_bounds(s: f64) -> (f64, f64) {
    (2.0 - s.exp(), s.exp())
}

/// `(e^{2s} - 1) e^{e^{2s} - 1 - 2s}`.
pub fn momentum_drift_bound(s: f64) -> f64 {
    let q = (2.0 * s).exp() - 1.0;
    q * (q - 2.0 * s).exp()
}

/// Lower and upper bounds for `ν(y)` given `ν(x)` and `s`. The upper bound
/// is infinite once `s ≥ log 2`.
pub fn nu_drift_bounds(nu: f64, s: f64) -> (f64, f64) {
    let b = momentum_drift_bound(s);
    let lo = (nu - b) * (-s).exp();
    let denom = 2.0 - s.exp();
    let hi = if denom > 0.0 { (nu + b) / denom } else { f64::INFINITY };
    (lo, hi)
}

/// `(1 - 5θ, 1/(1 - 5θ))` for `θ ∈ [0, 1/5)`.
pub fn munu_drift_factor(theta: f64) -> Result<(f64, f64)> {
    if !(0.0..0.2).contains(&theta) {
        return Err(Error::InvalidArgument(format!("theta = {theta} outside [0, 1/5)")));
    }
    let lo = 1.0 - 5.0 * theta;
    Ok((lo, 1.0 / lo))
}

/// Half of `min_i dist(m_i(x), ∂conv A_i) / diam(conv A_i)`.
pub fn infinity_margin(f: &FewnomialSystem, x: &ToricPoint) -> Result<f64> {
    let md = metric_data(f, x);
    let mut delta = f64::INFINITY;
    for (eq, em) in f.equations().iter().zip(&md.equations) {
        let hull = Hull::new(eq.support().exponents())?;
        let ratio = if hull.diameter() > 0.0 {
            hull.depth(&em.momentum).max(0.0) / hull.diameter()
        } else {
            0.0
        };
        delta = delta.min(ratio);
    }
    Ok(delta / 2.0)
}
