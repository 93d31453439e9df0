//! Normalized local section, the Newton operator on the chart, condition
//! numbers and α-certification.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::constants::{r0, r1, ConstantsTable};
use crate::error::{Error, Result};
use crate::geometry::{local_norm, metric_data, nu, MetricData, MetricMode};
use crate::linalg::{cvector, hermitian_max_eigenvalue, inverse, solve, to_real_complex, CMatrix};
use crate::supports::{FewnomialSystem, ToricPoint};

/// Phases per free coordinate in the Finsler μ grid search.
pub const FINSLER_PHASES: usize = 64;

/// Residual `S_i = f_i·V_i(x)/‖V_i(x)‖` from precomputed metric data.
pub fn residual_from(f: &FewnomialSystem, md: &MetricData) -> Vec<Complex64> {
    f.equations()
        .iter()
        .zip(&md.equations)
        .map(|(eq, em)| {
            let v: Complex64 = eq.coefficients().iter().zip(&em.terms).map(|(c, e)| c * e).sum();
            v / em.terms_norm
        })
        .collect()
}

/// Applies the normalized evaluation to arbitrary coefficient vectors,
/// e.g. the path derivative `ḟ`.
pub fn section_of(coefficients: &[Vec<Complex64>], md: &MetricData) -> Vec<Complex64> {
    coefficients
        .iter()
        .zip(&md.equations)
        .map(|(c, em)| c.iter().zip(&em.terms).map(|(a, e)| a * e).sum::<Complex64>() / em.terms_norm)
        .collect()
}

pub fn jacobian_from(f: &FewnomialSystem, md: &MetricData) -> CMatrix {
    let n = f.n();
    let mut b = CMatrix::zeros(n, n);
    for (i, (eq, em)) in f.equations().iter().zip(&md.equations).enumerate() {
        for ((c, e), d) in eq.coefficients().iter().zip(&em.terms).zip(&em.offsets) {
            let w = c * e / em.terms_norm;
            for j in 0..n {
                b[(i, j)] += w * d[j];
            }
        }
    }
    b
}

pub fn local_residual(f: &FewnomialSystem, x: &ToricPoint) -> Vec<Complex64> {
    residual_from(f, &metric_data(f, x))
}

pub fn local_jacobian(f: &FewnomialSystem, x: &ToricPoint) -> CMatrix {
    jacobian_from(f, &metric_data(f, x))
}

fn step_from(f: &FewnomialSystem, md: &MetricData, b: &CMatrix) -> Result<Vec<Complex64>> {
    let s = residual_from(f, md);
    let delta = solve(b, &cvector(&s))?;
    Ok(delta.iter().map(|v| -v).collect())
}

/// `x - DS⁻¹ S`.
pub fn newton_step(f: &FewnomialSystem, x: &ToricPoint) -> Result<ToricPoint> {
    let md = metric_data(f, x);
    let step = step_from(f, &md, &jacobian_from(f, &md))?;
    x.translated(&step)
}

/// `C = B⁻¹ diag(‖f_i‖)`.
fn scaled_inverse(f: &FewnomialSystem, b: &CMatrix) -> Result<CMatrix> {
    let mut c = inverse(b)?;
    for (j, norm) in f.coefficient_norms().into_iter().enumerate() {
        for i in 0..c.nrows() {
            c[(i, j)] *= norm;
        }
    }
    Ok(c)
}

fn mu_hermitian(c: &CMatrix, g: &DMatrix<f64>) -> f64 {
    let h = c.adjoint() * to_real_complex(g) * c;
    hermitian_max_eigenvalue(h).max(0.0).sqrt()
}

fn torus_quad(h: &CMatrix, v: &[Complex64]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..v.len() {
        for j in 0..v.len() {
            acc += v[i].conj() * h[(i, j)] * v[j];
        }
    }
    acc.re
}

/// Max of `v* H v` over the torus `|v_k| = 1` with `v_0 = 1`.
fn torus_max(h: &CMatrix) -> f64 {
    let n = h.nrows();
    if n == 1 {
        return h[(0, 0)].re;
    }
    let free = n - 1;
    let total = FINSLER_PHASES.pow(free as u32);
    let phase = |k: usize| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / FINSLER_PHASES as f64);
    let mut best = f64::NEG_INFINITY;
    let mut best_v = vec![Complex64::new(1.0, 0.0); n];
    let mut v = vec![Complex64::new(1.0, 0.0); n];
    for idx in 0..total {
        let mut rem = idx;
        for slot in v.iter_mut().skip(1) {
            *slot = phase(rem % FINSLER_PHASES);
            rem /= FINSLER_PHASES;
        }
        let val = torus_quad(h, &v);
        if val > best {
            best = val;
            best_v.copy_from_slice(&v);
        }
    }
    // Coordinate ascent: each phase has a closed-form optimum.
    let mut v = best_v;
    for _ in 0..200 {
        let before = best;
        for k in 1..n {
            let pull: Complex64 = (0..n).filter(|&j| j != k).map(|j| h[(k, j)] * v[j]).sum();
            if pull.norm() > 0.0 {
                v[k] = pull / pull.norm();
            }
        }
        best = best.max(torus_quad(h, &v));
        if best - before <= 1e-15 * best.abs() {
            break;
        }
    }
    best
}

fn mu_finsler(c: &CMatrix, md: &MetricData) -> f64 {
    md.equations
        .iter()
        .map(|em| {
            let h = c.adjoint() * to_real_complex(&em.gram) * c;
            torus_max(&h).max(0.0).sqrt()
        })
        .fold(0.0, f64::max)
}

fn mu_from(f: &FewnomialSystem, md: &MetricData, b: &CMatrix, mode: MetricMode) -> Result<f64> {
    let c = scaled_inverse(f, b)?;
    let hermitian = mu_hermitian(&c, &md.total_gram);
    Ok(match mode {
        MetricMode::Hermitian => hermitian,
        MetricMode::Finsler => {
            let finsler = mu_finsler(&c, md);
            let root_n = (f.n() as f64).sqrt();
            debug_assert!(
                finsler <= root_n * hermitian * (1.0 + 1e-9) && finsler >= hermitian / root_n * (1.0 - 1e-9),
                "Finsler mu {finsler} outside the sandwich around {hermitian}"
            );
            finsler
        }
    })
}

/// Toric condition number.
pub fn mu(f: &FewnomialSystem, x: &ToricPoint, mode: MetricMode) -> Result<f64> {
    let md = metric_data(f, x);
    mu_from(f, &md, &jacobian_from(f, &md), mode)
}

/// `½ μ ν`, an upper bound for γ.
pub fn gamma_bound(f: &FewnomialSystem, x: &ToricPoint, mode: MetricMode) -> Result<f64> {
    let md = metric_data(f, x);
    Ok(0.5 * mu_from(f, &md, &jacobian_from(f, &md), mode)? * nu(&md).nu)
}

/// Length of the Newton step in the local norm at `x`.
pub fn beta(f: &FewnomialSystem, x: &ToricPoint, mode: MetricMode) -> Result<f64> {
    let md = metric_data(f, x);
    let step = step_from(f, &md, &jacobian_from(f, &md))?;
    Ok(local_norm(&md, &step, mode))
}

#[derive(Clone, Debug, Serialize)]
pub struct NewtonReport {
    pub step: Vec<Complex64>,
    pub beta: f64,
    pub mu: f64,
    pub nu: f64,
    pub alpha_half: f64,
    pub jacobian_condition_ok: bool,
}

/// All Newton invariants at once, sharing one metric evaluation.
pub fn newton_report(f: &FewnomialSystem, x: &ToricPoint, mode: MetricMode) -> Result<NewtonReport> {
    let md = metric_data(f, x);
    let b = jacobian_from(f, &md);
    let step = step_from(f, &md, &b)?;
    let beta = local_norm(&md, &step, mode);
    let mu = mu_from(f, &md, &b, mode)?;
    let nu = nu(&md).nu;
    Ok(NewtonReport { step, beta, mu, nu, alpha_half: 0.5 * beta * mu * nu, jacobian_condition_ok: true })
}

#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub certified: bool,
    pub alpha_half: f64,
    pub radius0: f64,
    pub radius1: f64,
    pub beta: f64,
    pub mu: f64,
    pub nu: f64,
    pub mode: MetricMode,
    pub jacobian_condition_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
    pub constants: ConstantsTable,
}

/// Certified iff `½βμν ≤ α₁`. Never fails: a singular Jacobian yields an
/// uncertified result with `jacobian_condition_ok = false`.
pub fn alpha_certificate(f: &FewnomialSystem, x: &ToricPoint, mode: MetricMode, constants: &ConstantsTable) -> Certificate {
    match newton_report(f, x, mode) {
        Ok(r) => {
            let certified = r.alpha_half <= constants.alpha1;
            let (radius0, radius1) = if r.alpha_half < 3.0 - 2.0 * 2f64.sqrt() {
                (r0(r.alpha_half) * r.beta, r1(r.alpha_half) * r.beta)
            } else {
                (f64::NAN, f64::NAN)
            };
            Certificate {
                certified,
                alpha_half: r.alpha_half,
                radius0,
                radius1,
                beta: r.beta,
                mu: r.mu,
                nu: r.nu,
                mode,
                jacobian_condition_ok: true,
                diagnostic: (!certified).then(|| format!("alpha/2 = {:.6e} exceeds alpha1 = {:.6e}", r.alpha_half, constants.alpha1)),
                constants: constants.clone(),
            }
        }
        Err(e) => Certificate {
            certified: false,
            alpha_half: f64::INFINITY,
            radius0: f64::NAN,
            radius1: f64::NAN,
            beta: f64::NAN,
            mu: f64::INFINITY,
            nu: f64::NAN,
            mode,
            jacobian_condition_ok: !matches!(e, Error::SingularJacobian { .. }),
            diagnostic: Some(e.to_string()),
            constants: constants.clone(),
        },
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RefineReport {
    pub points: Vec<ToricPoint>,
    /// `deltas[i]` is the local norm at `points[i]` of `points[i+1] - points[i]`.
    pub deltas: Vec<f64>,
}

/// Iterate Newton until the step reaches round-off level or `max_iters`.
pub fn refine(f: &FewnomialSystem, x: &ToricPoint, max_iters: usize, mode: MetricMode) -> Result<RefineReport> {
    let mut points = vec![x.clone()];
    let mut deltas = Vec::new();
    let mut growth = 0;
    for iteration in 0..max_iters {
        let cur = points.last().expect("non-empty").clone();
        let md = metric_data(f, &cur);
        let step = step_from(f, &md, &jacobian_from(f, &md))?;
        let delta = local_norm(&md, &step, mode);
        let next = cur.translated(&step)?;
        let scale = 1.0 + cur.coords().iter().map(|c| c.norm()).fold(0.0, f64::max);
        points.push(next);
        deltas.push(delta);
        if delta <= 64.0 * f64::EPSILON * scale {
            break;
        }
        if let [.., prev, last] = deltas[..] {
            if last > prev {
                growth += 1;
                if growth >= 2 {
                    return Err(Error::Divergence { iterations: iteration + 1 });
                }
            } else {
                growth = 0;
            }
        }
    }
    Ok(RefineReport { points, deltas })
}
