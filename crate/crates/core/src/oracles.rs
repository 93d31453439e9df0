//! Independent validators: finite differences, brute-force operator norms,
//! closed-form roots, convergence-rate checks and a truncated γ series.
//! These ship in the library so the CLI can run them as a self-check.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::example;
use crate::geometry::{metric_data, MetricMode};
use crate::linalg::{cmatrix_from_rows, to_real_complex, CMatrix, CVector};
use crate::newton::{gamma_bound, jacobian_from, local_jacobian, mu};
use crate::supports::{evaluate, ExponentialSum, FewnomialSystem, SupportSet, ToricPoint, WeightVector};

/// Central-difference gradient.
pub fn fd_gradient(field: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Result<Vec<f64>> {
    if h <= 0.0 || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("step h = {h} must be positive")));
    }
    let mut y = x.to_vec();
    Ok((0..x.len())
        .map(|k| {
            y[k] = x[k] + h;
            let up = field(&y);
            y[k] = x[k] - h;
            let down = field(&y);
            y[k] = x[k];
            (up - down) / (2.0 * h)
        })
        .collect())
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    let v = CVector::from_fn(n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let norm = v.norm();
    v / Complex64::new(norm, 0.0)
}

/// `sup_v sqrt((Bv)* T (Bv)) / sqrt(v* S v)` by power iteration on the
/// whitened operator plus `samples` random directions. `S` must be
/// positive definite.
pub fn brute_opnorm(b: &CMatrix, source_gram: &CMatrix, target_gram: &CMatrix, samples: usize, seed: u64) -> Result<f64> {
    let n = b.ncols();
    let chol = source_gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("source Gram matrix is not positive definite".into()))?;
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("source Gram factor is singular".into()))?;
    let whitened = &l_inv.adjoint();
    let m = whitened.adjoint() * b.adjoint() * target_gram * b * whitened;
    let rayleigh = |v: &CVector| (v.adjoint() * &m * v)[(0, 0)].re / v.norm_squared();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    let mut v = random_unit(&mut rng, n);
    for _ in 0..1000 {
        let w = &m * &v;
        let norm = w.norm();
        if norm == 0.0 {
            break;
        }
        v = w / Complex64::new(norm, 0.0);
    }
    best = best.max(rayleigh(&v));
    for _ in 0..samples {
        best = best.max(rayleigh(&random_unit(&mut rng, n)));
    }
    Ok(best.max(0.0).sqrt())
}

/// Closed-form roots of the demonstration system.
pub fn analytic_roots(t: f64) -> Result<[ToricPoint; 2]> {
    if t <= 0.0 || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("analytic roots need t > 0, got {t}")));
    }
    Ok(example::roots(t))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Quadratic,
    Linear,
    Diverging,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    /// `‖Δ_{i+1}‖ / ‖Δ_i‖²` for pairs above the noise floor.
    pub ratios: Vec<f64>,
    pub bound: f64,
    pub verdict: Verdict,
}

/// Step lengths at or below this are round-off and excluded from the test.
pub const NOISE_FLOOR: f64 = 1e-13;

/// Classifies a sequence of Newton step lengths `‖Δ_i‖` with `C = 2·gamma_bound`.
pub fn quadratic_decay_check(deltas: &[f64], gamma_bound: f64) -> Result<DecayReport> {
    if deltas.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 step lengths, got {}", deltas.len())));
    }
    let bound = 2.0 * gamma_bound;
    let mut ratios = Vec::new();
    let mut growing = false;
    for w in deltas.windows(2) {
        if w[1] <= NOISE_FLOOR {
            break;
        }
        growing |= w[1] > w[0];
        ratios.push(w[1] / (w[0] * w[0]));
    }
    let verdict = if growing {
        Verdict::Diverging
    } else if ratios.iter().all(|&r| r <= bound) {
        Verdict::Quadratic
    } else {
        Verdict::Linear
    };
    Ok(DecayReport { ratios, bound, verdict })
}

#[derive(Clone, Debug, Serialize)]
pub struct TruncatedGamma {
    /// `γ_k` for `k = 2..=6`.
    pub per_order: Vec<f64>,
    pub gamma: f64,
}

/// Highest order in the truncated series.
pub const MAX_ORDER: u32 = 6;

/// `max_{2≤k≤6} ‖DS⁻¹ D^kS / k!‖^{1/(k-1)}` in the local norm, for one variable.
pub fn truncated_gamma(f: &FewnomialSystem, x: &ToricPoint) -> Result<TruncatedGamma> {
    if f.n() != 1 {
        return Err(Error::Unsupported("truncated gamma oracle is univariate".into()));
    }
    let md = metric_data(f, x);
    let em = &md.equations[0];
    let coeffs = f.equations()[0].coefficients();
    let b = jacobian_from(f, &md)[(0, 0)].norm();
    if b == 0.0 {
        return Err(Error::SingularJacobian { ratio: 0.0 });
    }
    let g = em.gram[(0, 0)];
    let mut factorial = 1.0;
    let per_order: Vec<f64> = (2..=MAX_ORDER)
        .map(|k| {
            factorial *= k as f64;
            let dk: Complex64 = coeffs
                .iter()
                .zip(&em.terms)
                .zip(&em.offsets)
                .map(|((c, e), d)| c * e * d[0].powi(k as i32))
                .sum::<Complex64>()
                / em.terms_norm;
            (dk.norm() / (factorial * b)).powf(1.0 / (k as f64 - 1.0)) / g.sqrt()
        })
        .collect();
    let gamma = per_order.iter().cloned().fold(0.0, f64::max);
    Ok(TruncatedGamma { per_order, gamma })
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check { name: name.into(), passed, detail }
}

fn log_kernel(f: &FewnomialSystem, i: usize, y: &[f64]) -> f64 {
    metric_data(f, &ToricPoint::from_re(y)).equations[i].log_kernel
}

/// Runs each oracle against the library on fixed inputs.
pub fn self_check(seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let f = example::running_example_system(1.0);
    let origin = ToricPoint::origin(2);

    let c = {
        let b = local_jacobian(&f, &origin);
        let mut c = crate::linalg::inverse(&b)?;
        for (j, norm) in f.coefficient_norms().into_iter().enumerate() {
            for i in 0..2 {
                c[(i, j)] *= norm;
            }
        }
        c
    };
    let identity = cmatrix_from_rows(&[
        vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
    ]);
    let target = to_real_complex(&metric_data(&f, &origin).total_gram);
    let brute = brute_opnorm(&c, &identity, &target, 256, seed)?;
    let lib = mu(&f, &origin, MetricMode::Hermitian)?;
    out.push(check("mu_vs_brute_opnorm", (brute - lib).abs() < 1e-6, format!("library {lib:.12}, brute {brute:.12}")));

    let y = [0.3, -0.7];
    let md = metric_data(&f, &ToricPoint::from_re(&y));
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        let grad = fd_gradient(|z| log_kernel(&f, i, z), &y, 1e-5)?;
        for (g, m) in grad.iter().zip(&md.equations[i].momentum) {
            worst = worst.max((g - m).abs());
        }
    }
    out.push(check("momentum_vs_fd_gradient", worst < 1e-6, format!("max deviation {worst:.3e}")));

    let mut residual: f64 = 0.0;
    for t in [1.0, 0.5, 0.1, 0.01] {
        let ft = example::running_example_system(t);
        for z in analytic_roots(t)? {
            let v = evaluate(&ft, &z);
            let rel = v.mantissa.iter().map(|m| m.norm()).fold(0.0, f64::max);
            residual = residual.max(rel);
        }
    }
    out.push(check("analytic_roots_residual", residual < 1e-12, format!("max scaled residual {residual:.3e}")));

    let s = SupportSet::new(1, vec![vec![0.0], vec![1.0], vec![2.5]])?;
    let coeffs = vec![Complex64::new(-1.0, 0.2), Complex64::new(0.7, 0.0), Complex64::new(0.4, -0.3)];
    let g = FewnomialSystem::new(vec![ExponentialSum::new(s, WeightVector::new(vec![1.0, 2.0, 0.5])?, coeffs)?])?;
    let x = ToricPoint::new(vec![Complex64::new(0.2, 0.1)])?;
    let tg = truncated_gamma(&g, &x)?;
    let bound = gamma_bound(&g, &x, MetricMode::Hermitian)?;
    out.push(check("truncated_gamma_below_bound", tg.gamma <= bound, format!("truncated {:.6}, bound {bound:.6}", tg.gamma)));
    Ok(out)
}

/// Random square matrix helper for tests and the self-check.
pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(rows: &[[f64; 2]]) -> CMatrix {
        cmatrix_from_rows(&rows.iter().map(|r| r.iter().map(|&v| Complex64::new(v, 0.0)).collect()).collect::<Vec<_>>())
    }

    #[test]
    fn gradients() {
        let g = fd_gradient(|x| 0.5 * x.iter().map(|v| v * v).sum::<f64>(), &[0.3, -2.0], 1e-4).unwrap();
        assert!((g[0] - 0.3).abs() < 1e-10 && (g[1] + 2.0).abs() < 1e-10);
        let g = fd_gradient(|_| 4.0, &[1.0], 1e-3).unwrap();
        assert_eq!(g, vec![0.0]);
        let f = example::running_example_system(1.0);
        let g = fd_gradient(|z| 2.0 * log_kernel(&f, 0, z), &[0.0, 0.0], 1e-5).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-6 && (g[1] - 3.0).abs() < 1e-6);
        assert!(fd_gradient(|_| 0.0, &[0.0], 0.0).is_err());
    }

    #[test]
    fn operator_norms() {
        let id = real(&[[1.0, 0.0], [0.0, 1.0]]);
        assert!((brute_opnorm(&id, &id, &id, 64, 1).unwrap() - 1.0).abs() < 1e-12);
        let d = real(&[[3.0, 0.0], [0.0, 1.0]]);
        assert!((brute_opnorm(&d, &id, &id, 64, 1).unwrap() - 3.0).abs() < 1e-9);
    }

    #[test]
    fn roots_in_closed_form() {
        let [a, b] = analytic_roots(1.0).unwrap();
        assert_eq!(a, ToricPoint::origin(2));
        assert!((b.coords()[0] - Complex64::new(0.0, std::f64::consts::PI)).norm() < 1e-15);
        let [a, _] = analytic_roots(0.1).unwrap();
        assert!((a.coords()[0].re - 2.0 * std::f64::consts::LN_10).abs() < 1e-14);
        assert!((a.coords()[1].re - std::f64::consts::LN_10).abs() < 1e-14);
        assert!(analytic_roots(0.0).is_err());
    }

    #[test]
    fn decay_verdicts() {
        let q = quadratic_decay_check(&[1e-1, 1e-2, 1e-4, 1e-8], 1.0).unwrap();
        assert_eq!(q.verdict, Verdict::Quadratic);
        let halving: Vec<f64> = (0..8).map(|k| 0.5f64.powi(k)).collect();
        assert_eq!(quadratic_decay_check(&halving, 1.0).unwrap().verdict, Verdict::Linear);
        assert_eq!(quadratic_decay_check(&[1e-2, 1e-1, 1.0], 1.0).unwrap().verdict, Verdict::Diverging);
        assert!(quadratic_decay_check(&[1.0, 0.1], 1.0).is_err());
    }

    #[test]
    fn field_self_check() {
        for c in self_check(7).unwrap() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
