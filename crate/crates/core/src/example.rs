//! The two-variable demonstration system
//! `t·X - t·XY + Y² - t²Y³ = 0`, `X + XY - Y² - Y³ = 0`
//! in logarithmic coordinates `X = e^{x₁}`, `Y = e^{x₂}`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::path::{CoefficientPath, PathTerm};
use crate::supports::{ExponentialSum, FewnomialSystem, SupportSet, ToricPoint, WeightVector};

/// Shared support of both equations.
pub fn support() -> Vec<Vec<f64>> {
    vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 2.0], vec![0.0, 3.0]]
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn shape() -> (SupportSet, WeightVector) {
    (SupportSet::new(2, support()).expect("valid support"), WeightVector::ones(4))
}

pub fn running_example_system(t: f64) -> FewnomialSystem {
    let (s, w) = shape();
    let first = ExponentialSum::new(s.clone(), w.clone(), vec![c(t), c(-t), c(1.0), c(-t * t)]).expect("valid equation");
    let second = ExponentialSum::new(s, w, vec![c(1.0), c(1.0), c(-1.0), c(-1.0)]).expect("valid equation");
    FewnomialSystem::new(vec![first, second]).expect("square system")
}

pub fn running_example_path(t_start: f64, t_end: f64) -> CoefficientPath {
    let term = |p: f64, v: f64| vec![PathTerm::new(p, c(v))];
    let terms = vec![
        vec![term(1.0, 1.0), term(1.0, -1.0), term(0.0, 1.0), term(2.0, -1.0)],
        vec![term(0.0, 1.0), term(0.0, 1.0), term(0.0, -1.0), term(0.0, -1.0)],
    ];
    CoefficientPath::new(vec![shape(), shape()], terms, t_start, t_end).expect("valid path")
}

/// Both finite roots for `t > 0`: `(t⁻², t⁻¹)` and `(-(1+t²)/(2t), -1)`.
pub fn roots(t: f64) -> [ToricPoint; 2] {
    let l = t.ln();
    let first = ToricPoint::from_re(&[-2.0 * l, -l]);
    let second = ToricPoint::new(vec![
        Complex64::new(((1.0 + t * t) / (2.0 * t)).ln(), PI),
        Complex64::new(0.0, PI),
    ])
    .expect("finite root");
    [first, second]
}

/// Exact tangents `ż_t` of the two root curves.
pub fn root_velocities(t: f64) -> [Vec<Complex64>; 2] {
    let first = vec![c(-2.0 / t), c(-1.0 / t)];
    // d/dt log((1 + t²)/(2t)) = 2t/(1 + t²) - 1/t
    let second = vec![c(2.0 * t / (1.0 + t * t) - 1.0 / t), c(0.0)];
    [first, second]
}

/// Both root curves in homogeneous coordinates `[1 : X : Y]` with exact tangents.
pub fn projective_curves(t: f64) -> [(Vec<Complex64>, Vec<Complex64>); 2] {
    let first = (vec![c(1.0), c(t.powi(-2)), c(1.0 / t)], vec![c(0.0), c(-2.0 * t.powi(-3)), c(-t.powi(-2))]);
    let second = (
        vec![c(1.0), c(-(1.0 + t * t) / (2.0 * t)), c(-1.0)],
        vec![c(0.0), c(0.5 / (t * t) - 0.5), c(0.0)],
    );
    [first, second]
}
