//! Exponential-sum systems: supports, weights, coefficients and the support
//! shift action.
//!
//! An equation is `f(x) = Σ_a f_a ρ_a e^{a·x}` over a finite support `A ⊂ ℝⁿ`,
//! where the `f_a` are coordinates in the basis `(ρ_a e^{a·x})`, which is
//! declared orthonormal. Points live in logarithmic coordinates `x ∈ ℂⁿ`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Finite set of exponent vectors sharing one ambient dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportSet {
    dim: usize,
    exponents: Vec<Vec<f64>>,
}

impl SupportSet {
    pub fn new(dim: usize, exponents: Vec<Vec<f64>>) -> Result<Self> {
        Self::validated(dim, exponents, 0)
    }

    fn validated(dim: usize, exponents: Vec<Vec<f64>>, equation: usize) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::Malformed(format!("equation {equation}: empty support")));
        }
        for a in &exponents {
            if a.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "equation {equation}: exponent {a:?} has length {} but n = {dim}",
                    a.len()
                )));
            }
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::Malformed(format!("equation {equation}: non-finite exponent {a:?}")));
            }
        }
        for (k, a) in exponents.iter().enumerate() {
            if exponents[..k].iter().any(|b| b == a) {
                return Err(Error::DuplicateExponent { equation, exponent: a.clone() });
            }
        }
        Ok(Self { dim, exponents })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[Vec<f64>] {
        &self.exponents
    }

    /// `A - g`.
    pub fn shifted(&self, g: &[f64]) -> SupportSet {
        let exponents = self
            .exponents
            .iter()
            .map(|a| a.iter().zip(g).map(|(ai, gi)| ai - gi).collect())
            .collect();
        SupportSet { dim: self.dim, exponents }
    }

    /// True when every exponent is an integer vector.
    pub fn is_integral(&self) -> bool {
        self.exponents.iter().flatten().all(|v| v.fract() == 0.0)
    }
}

/// Positive weights `ρ_a`, one per exponent.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Self::validated(weights, 0)
    }

    pub fn ones(len: usize) -> Self {
        WeightVector(vec![1.0; len])
    }

    fn validated(weights: Vec<f64>, equation: usize) -> Result<Self> {
        if let Some(&w) = weights.iter().find(|w| **w <= 0.0 || !w.is_finite()) {
            return Err(Error::NonPositiveWeight { equation, weight: w });
        }
        Ok(WeightVector(weights))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// One equation `Σ_a f_a ρ_a e^{a·x}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentialSum {
    support: SupportSet,
    weights: WeightVector,
    coefficients: Vec<Complex64>,
}

impl ExponentialSum {
    pub fn new(support: SupportSet, weights: WeightVector, coefficients: Vec<Complex64>) -> Result<Self> {
        if weights.0.len() != support.len() || coefficients.len() != support.len() {
            return Err(Error::DimensionMismatch(format!(
                "support has {} exponents, {} weights, {} coefficients",
                support.len(),
                weights.0.len(),
                coefficients.len()
            )));
        }
        Ok(Self { support, weights, coefficients })
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    /// Same support and weights, new coefficients.
    pub fn with_coefficients(&self, coefficients: Vec<Complex64>) -> Result<Self> {
        Self::new(self.support.clone(), self.weights.clone(), coefficients)
    }

    /// Norm of the coefficient vector in the ρ-orthonormal basis.
    pub fn coefficient_norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Scaled basis values `ρ_a e^{a·x - c}` and the scale `c = max_a (a·Re x + log ρ_a)`.
    pub fn scaled_terms(&self, x: &[Complex64]) -> (Vec<Complex64>, f64) {
        let exps: Vec<(f64, f64)> = self
            .support
            .exponents
            .iter()
            .zip(&self.weights.0)
            .map(|(a, rho)| {
                let re = a.iter().zip(x).map(|(ai, xi)| ai * xi.re).sum::<f64>() + rho.ln();
                let im = a.iter().zip(x).map(|(ai, xi)| ai * xi.im).sum::<f64>();
                (re, im)
            })
            .collect();
        let c = exps.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max);
        let terms = exps
            .iter()
            .map(|&(re, im)| Complex64::from_polar((re - c).exp(), im))
            .collect();
        (terms, c)
    }

    fn shifted(&self, g: &[f64]) -> Self {
        Self {
            support: self.support.shifted(g),
            weights: self.weights.clone(),
            coefficients: self.coefficients.clone(),
        }
    }
}

/// Square system of `n` exponential sums in `n` variables.
#[derive(Clone, Debug, PartialEq)]
pub struct FewnomialSystem {
    n: usize,
    equations: Vec<ExponentialSum>,
}

impl FewnomialSystem {
    pub fn new(equations: Vec<ExponentialSum>) -> Result<Self> {
        let n = equations.len();
        if n == 0 {
            return Err(Error::Malformed("system has no equations".into()));
        }
        for (i, eq) in equations.iter().enumerate() {
            if eq.support.dim != n {
                return Err(Error::DimensionMismatch(format!(
                    "equation {i} has dimension {} in a system of {n} equations",
                    eq.support.dim
                )));
            }
        }
        Ok(Self { n, equations })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn equations(&self) -> &[ExponentialSum] {
        &self.equations
    }

    /// Per-equation coefficient norms `‖f_i‖`.
    pub fn coefficient_norms(&self) -> Vec<f64> {
        self.equations.iter().map(ExponentialSum::coefficient_norm).collect()
    }

    /// True if `other` has identical supports and weights.
    pub fn same_shape(&self, other: &FewnomialSystem) -> bool {
        self.n == other.n
            && self
                .equations
                .iter()
                .zip(&other.equations)
                .all(|(a, b)| a.support == b.support && a.weights == b.weights)
    }

    /// Replace all coefficients, keeping supports and weights.
    pub fn with_coefficients(&self, coefficients: Vec<Vec<Complex64>>) -> Result<Self> {
        if coefficients.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficient vectors for {} equations",
                coefficients.len(),
                self.n
            )));
        }
        let equations = self
            .equations
            .iter()
            .zip(coefficients)
            .map(|(eq, c)| eq.with_coefficients(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n: self.n, equations })
    }
}

/// Point of the chart in logarithmic coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ToricPoint(Vec<Complex64>);

impl ToricPoint {
    pub fn new(coords: Vec<Complex64>) -> Result<Self> {
        if coords.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite point {coords:?}")));
        }
        Ok(ToricPoint(coords))
    }

    pub fn from_re(re: &[f64]) -> Self {
        ToricPoint(re.iter().map(|&r| Complex64::new(r, 0.0)).collect())
    }

    pub fn origin(n: usize) -> Self {
        ToricPoint(vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    /// `self + w`, rejecting non-finite results.
    pub fn translated(&self, w: &[Complex64]) -> Result<Self> {
        ToricPoint::new(self.0.iter().zip(w).map(|(a, b)| a + b).collect())
    }

    /// `self - other` as a tangent vector.
    pub fn difference(&self, other: &ToricPoint) -> Vec<Complex64> {
        self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()
    }
}

/// Raw values `mantissa_i · e^{log_scale_i}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaledValue {
    pub mantissa: Vec<Complex64>,
    pub log_scale: Vec<f64>,
}

impl ScaledValue {
    /// Unscaled values; may overflow to infinity.
    pub fn values(&self) -> Vec<Complex64> {
        self.mantissa.iter().zip(&self.log_scale).map(|(m, c)| m * c.exp()).collect()
    }
}

/// `Σ_a f_{i,a} ρ_a e^{a·x}` for each equation, in overflow-safe form.
pub fn evaluate(f: &FewnomialSystem, x: &ToricPoint) -> ScaledValue {
    let (mantissa, log_scale) = f
        .equations
        .iter()
        .map(|eq| {
            let (terms, c) = eq.scaled_terms(x.coords());
            let v: Complex64 = eq.coefficients.iter().zip(&terms).map(|(f, e)| f * e).sum();
            (v, c)
        })
        .unzip();
    ScaledValue { mantissa, log_scale }
}

/// Replace each support `A_i` by `A_i - g_i`.
pub fn shift_action(system: &FewnomialSystem, shifts: &[Vec<f64>]) -> Result<FewnomialSystem> {
    if shifts.len() != system.n || shifts.iter().any(|g| g.len() != system.n) {
        return Err(Error::DimensionMismatch(format!(
            "need {} shift vectors of length {}",
            system.n, system.n
        )));
    }
    Ok(FewnomialSystem {
        n: system.n,
        equations: system.equations.iter().zip(shifts).map(|(eq, g)| eq.shifted(g)).collect(),
    })
}

#[derive(Serialize, Deserialize)]
struct SystemDoc {
    n: usize,
    equations: Vec<EquationDoc>,
}

#[derive(Serialize, Deserialize)]
struct EquationDoc {
    support: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
    coefficients: Vec<[f64; 2]>,
}

/// Build one equation from raw parts, validating against dimension `n`.
pub(crate) fn build_equation(
    equation: usize,
    n: usize,
    support: Vec<Vec<f64>>,
    weights: Option<Vec<f64>>,
) -> Result<(SupportSet, WeightVector)> {
    let support = SupportSet::validated(n, support, equation)?;
    let weights = match weights {
        Some(w) => {
            if w.len() != support.len() {
                return Err(Error::DimensionMismatch(format!(
                    "equation {equation}: {} weights for {} exponents",
                    w.len(),
                    support.len()
                )));
            }
            WeightVector::validated(w, equation)?
        }
        None => WeightVector::ones(support.len()),
    };
    Ok((support, weights))
}

/// Parse a system document (see README for the schema).
pub fn parse_system(text: &str) -> Result<FewnomialSystem> {
    let doc: SystemDoc = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    if doc.equations.len() != doc.n {
        return Err(Error::DimensionMismatch(format!(
            "n = {} but {} equations given",
            doc.n,
            doc.equations.len()
        )));
    }
    let equations = doc
        .equations
        .into_iter()
        .enumerate()
        .map(|(i, eq)| {
            let (support, weights) = build_equation(i, doc.n, eq.support, eq.weights)?;
            let coefficients = eq.coefficients.iter().map(|c| Complex64::new(c[0], c[1])).collect();
            ExponentialSum::new(support, weights, coefficients)
        })
        .collect::<Result<Vec<_>>>()?;
    FewnomialSystem::new(equations)
}

/// Serialize a system to the document format read by [`parse_system`].
pub fn system_to_json(system: &FewnomialSystem) -> String {
    let doc = SystemDoc {
        n: system.n,
        equations: system
            .equations
            .iter()
            .map(|eq| EquationDoc {
                support: eq.support.exponents.clone(),
                weights: Some(eq.weights.0.clone()),
                coefficients: eq.coefficients.iter().map(|c| [c.re, c.im]).collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("system serializes")
}

/// Parse a point given as `[[re, im], ...]`.
pub fn parse_point(text: &str) -> Result<ToricPoint> {
    let raw: Vec<[f64; 2]> = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    ToricPoint::new(raw.iter().map(|c| Complex64::new(c[0], c[1])).collect())
}

pub fn point_to_json(x: &ToricPoint) -> String {
    let raw: Vec<[f64; 2]> = x.0.iter().map(|c| [c.re, c.im]).collect();
    serde_json::to_string(&raw).expect("point serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example::running_example_system;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    const RUNNING_T1: &str = r#"{"n": 2, "equations": [
        {"support": [[1,0],[1,1],[0,2],[0,3]], "coefficients": [[1,0],[-1,0],[1,0],[-1,0]]},
        {"support": [[1,0],[1,1],[0,2],[0,3]], "coefficients": [[1,0],[1,0],[-1,0],[-1,0]]}
    ]}"#;

    #[test]
    fn parses_running_example() {
        let f = parse_system(RUNNING_T1).unwrap();
        assert_eq!(f.n(), 2);
        assert_eq!(f.equations()[0].support().len(), 4);
        assert_eq!(f.equations()[1].support().len(), 4);
        assert_eq!(f.equations()[0].weights().as_slice(), &[1.0; 4]);
        assert_eq!(f, running_example_system(1.0));
    }

    #[test]
    fn constant_system_is_accepted() {
        let f = parse_system(r#"{"n":1,"equations":[{"support":[[0]],"coefficients":[[1,0]]}]}"#).unwrap();
        let v = evaluate(&f, &ToricPoint::new(vec![c(0.3, -2.0)]).unwrap());
        assert!((v.values()[0] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn rejects_bad_documents() {
        let neg = r#"{"n":1,"equations":[{"support":[[0],[1]],"weights":[1,-1],"coefficients":[[1,0],[1,0]]}]}"#;
        match parse_system(neg) {
            Err(e @ Error::NonPositiveWeight { .. }) => assert!(e.to_string().contains("non-positive weight")),
            other => panic!("expected weight error, got {other:?}"),
        }
        let dup = r#"{"n":1,"equations":[{"support":[[1],[1]],"coefficients":[[1,0],[1,0]]}]}"#;
        assert!(matches!(parse_system(dup), Err(Error::DuplicateExponent { .. })));
        let dim = r#"{"n":2,"equations":[{"support":[[1]],"coefficients":[[1,0]]},{"support":[[1,0]],"coefficients":[[1,0]]}]}"#;
        assert!(matches!(parse_system(dim), Err(Error::DimensionMismatch(_))));
        assert!(matches!(parse_system("{not json"), Err(Error::Malformed(_))));
    }

    #[test]
    fn evaluate_at_running_example_roots() {
        let f = running_example_system(1.0);
        for x in [vec![c(0.0, 0.0), c(0.0, 0.0)], vec![c(0.0, PI), c(0.0, PI)]] {
            let v = evaluate(&f, &ToricPoint::new(x).unwrap()).values();
            assert!(v.iter().all(|z| z.norm() < 1e-14), "{v:?}");
        }
    }

    #[test]
    fn zero_shift_is_identity_and_shifts_compose() {
        let f = running_example_system(0.5);
        assert_eq!(shift_action(&f, &[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap(), f);
        let g = [vec![0.5, 1.5], vec![-1.0, 0.25]];
        let h = [vec![0.125, -2.0], vec![3.0, 1.0]];
        let gh: Vec<Vec<f64>> = g.iter().zip(&h).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect();
        let twice = shift_action(&shift_action(&f, &g).unwrap(), &h).unwrap();
        let once = shift_action(&f, &gh).unwrap();
        for (a, b) in twice.equations().iter().zip(once.equations()) {
            for (u, v) in a.support().exponents().iter().zip(b.support().exponents()) {
                for (p, q) in u.iter().zip(v) {
                    assert!((p - q).abs() < 1e-15);
                }
            }
        }
        assert!(matches!(shift_action(&f, &[vec![0.0]]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn evaluation_does_not_overflow() {
        let f = running_example_system(1e-3);
        let x = ToricPoint::new(vec![c(900.0, 0.0), c(450.0, 0.1)]).unwrap();
        let v = evaluate(&f, &x);
        assert!(v.mantissa.iter().all(|m| m.re.is_finite() && m.im.is_finite()));
        assert!(v.log_scale[0] > 700.0);
    }

    #[test]
    fn point_round_trip() {
        let x = ToricPoint::new(vec![c(1.5, -0.25), c(0.0, PI)]).unwrap();
        assert_eq!(parse_point(&point_to_json(&x)).unwrap(), x);
    }
}
