//! Coefficient paths `t ↦ f_t` with exact derivatives.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::supports::{build_equation, ExponentialSum, FewnomialSystem, SupportSet, ToricPoint, WeightVector};

/// A homotopy with exact coefficient derivatives. Tracking works over any
/// implementor, so callers can supply paths that are not polynomial in `t`.
pub trait Homotopy: Sync {
    fn t_start(&self) -> f64;
    fn t_end(&self) -> f64;
    /// `(f_t, ḟ_t)`, the derivative given per equation in the coefficient basis.
    fn eval(&self, t: f64) -> Result<(FewnomialSystem, Vec<Vec<Complex64>>)>;
}

/// One monomial `value · t^pow` of a coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathTerm {
    pub pow: f64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl PathTerm {
    pub fn new(pow: f64, value: Complex64) -> Self {
        Self { pow, re: value.re, im: value.im }
    }

    fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

fn power(t: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else if p.fract() == 0.0 && p.abs() < i32::MAX as f64 {
        t.powi(p as i32)
    } else {
        t.powf(p)
    }
}

/// Path whose coefficients are finite sums of real powers of `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientPath {
    shape: Vec<(SupportSet, WeightVector)>,
    terms: Vec<Vec<Vec<PathTerm>>>,
    t_start: f64,
    t_end: f64,
}

impl CoefficientPath {
    pub fn new(
        shape: Vec<(SupportSet, WeightVector)>,
        terms: Vec<Vec<Vec<PathTerm>>>,
        t_start: f64,
        t_end: f64,
    ) -> Result<Self> {
        if shape.len() != terms.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} equations but {} coefficient lists",
                shape.len(),
                terms.len()
            )));
        }
        for (i, ((support, _), coeffs)) in shape.iter().zip(&terms).enumerate() {
            if support.len() != coeffs.len() {
                return Err(Error::DimensionMismatch(format!(
                    "equation {i}: {} exponents but {} coefficients",
                    support.len(),
                    coeffs.len()
                )));
            }
        }
        if !t_start.is_finite() || !t_end.is_finite() {
            return Err(Error::InvalidArgument("path endpoints must be finite".into()));
        }
        Ok(Self { shape, terms, t_start, t_end })
    }

    /// `f_t = (1 - t) f⁰ + t f¹` on `[0, 1]`.
    pub fn segment(f0: &FewnomialSystem, f1: &FewnomialSystem) -> Result<Self> {
        if !f0.same_shape(f1) {
            return Err(Error::SupportMismatch("segment endpoints differ in shape".into()));
        }
        let terms = f0
            .equations()
            .iter()
            .zip(f1.equations())
            .map(|(a, b)| {
                a.coefficients()
                    .iter()
                    .zip(b.coefficients())
                    .map(|(&ca, &cb)| vec![PathTerm::new(0.0, ca), PathTerm::new(1.0, cb - ca)])
                    .collect()
            })
            .collect();
        Self::new(Self::shape_of(f0), terms, 0.0, 1.0)
    }

    /// The constant path at `f` over `[t_start, t_end]`.
    pub fn constant(f: &FewnomialSystem, t_start: f64, t_end: f64) -> Result<Self> {
        let terms = f
            .equations()
            .iter()
            .map(|eq| eq.coefficients().iter().map(|&c| vec![PathTerm::new(0.0, c)]).collect())
            .collect();
        Self::new(Self::shape_of(f), terms, t_start, t_end)
    }

    fn shape_of(f: &FewnomialSystem) -> Vec<(SupportSet, WeightVector)> {
        f.equations().iter().map(|eq| (eq.support().clone(), eq.weights().clone())).collect()
    }

    pub fn terms(&self) -> &[Vec<Vec<PathTerm>>] {
        &self.terms
    }

    /// Same coefficients over a new interval.
    pub fn with_domain(&self, t_start: f64, t_end: f64) -> Result<Self> {
        Self::new(self.shape.clone(), self.terms.clone(), t_start, t_end)
    }

    /// Same path traversed in the opposite direction.
    pub fn reversed(&self) -> Self {
        Self { t_start: self.t_end, t_end: self.t_start, ..self.clone() }
    }
}

impl Homotopy for CoefficientPath {
    fn t_start(&self) -> f64 {
        self.t_start
    }

    fn t_end(&self) -> f64 {
        self.t_end
    }

    fn eval(&self, t: f64) -> Result<(FewnomialSystem, Vec<Vec<Complex64>>)> {
        path_eval(self, t)
    }
}

/// Coefficients and their exact `t`-derivatives.
pub fn path_eval(path: &CoefficientPath, t: f64) -> Result<(FewnomialSystem, Vec<Vec<Complex64>>)> {
    let (lo, hi) = (path.t_start.min(path.t_end), path.t_start.max(path.t_end));
    let slack = 1e-12 * (hi - lo).max(hi.abs()).max(1e-300);
    if !(t >= lo - slack && t <= hi + slack) {
        return Err(Error::OutOfDomain { t, lo, hi });
    }
    let mut equations = Vec::with_capacity(path.shape.len());
    let mut derivatives = Vec::with_capacity(path.shape.len());
    for ((support, weights), coeffs) in path.shape.iter().zip(&path.terms) {
        let mut values = Vec::with_capacity(coeffs.len());
        let mut dots = Vec::with_capacity(coeffs.len());
        for terms in coeffs {
            let mut v = Complex64::new(0.0, 0.0);
            let mut d = Complex64::new(0.0, 0.0);
            for term in terms {
                v += term.value() * power(t, term.pow);
                if term.pow != 0.0 {
                    d += term.value() * (term.pow * power(t, term.pow - 1.0));
                }
            }
            values.push(v);
            dots.push(d);
        }
        equations.push(ExponentialSum::new(support.clone(), weights.clone(), values)?);
        derivatives.push(dots);
    }
    Ok((FewnomialSystem::new(equations)?, derivatives))
}

#[derive(Serialize, Deserialize)]
struct HomotopyDoc {
    n: usize,
    equations: Vec<PathEquationDoc>,
    t_start: f64,
    t_end: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    start_points: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
struct PathEquationDoc {
    support: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
    coefficients: Vec<Vec<PathTerm>>,
}

/// Parse a homotopy document; returns the path and any start points it lists.
pub fn parse_homotopy(text: &str) -> Result<(CoefficientPath, Vec<ToricPoint>)> {
    let doc: HomotopyDoc = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    if doc.equations.len() != doc.n {
        return Err(Error::DimensionMismatch(format!(
            "n = {} but {} equations given",
            doc.n,
            doc.equations.len()
        )));
    }
    let mut shape = Vec::new();
    let mut terms = Vec::new();
    for (i, eq) in doc.equations.into_iter().enumerate() {
        shape.push(build_equation(i, doc.n, eq.support, eq.weights)?);
        terms.push(eq.coefficients);
    }
    let path = CoefficientPath::new(shape, terms, doc.t_start, doc.t_end)?;
    let starts = doc
        .start_points
        .iter()
        .map(|p| {
            if p.len() != doc.n {
                return Err(Error::DimensionMismatch(format!("start point of length {} for n = {}", p.len(), doc.n)));
            }
            ToricPoint::new(p.iter().map(|c| Complex64::new(c[0], c[1])).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((path, starts))
}

pub fn homotopy_to_json(path: &CoefficientPath, start_points: &[ToricPoint]) -> String {
    let doc = HomotopyDoc {
        n: path.shape.len(),
        equations: path
            .shape
            .iter()
            .zip(&path.terms)
            .map(|((s, w), c)| PathEquationDoc {
                support: s.exponents().to_vec(),
                weights: Some(w.as_slice().to_vec()),
                coefficients: c.clone(),
            })
            .collect(),
        t_start: path.t_start,
        t_end: path.t_end,
        start_points: start_points
            .iter()
            .map(|p| p.coords().iter().map(|c| [c.re, c.im]).collect())
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("homotopy serializes")
}
