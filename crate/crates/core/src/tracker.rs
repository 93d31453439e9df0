//! Path tracking by pure Newton steps with an α-monitored step size.

use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::constants::ConstantsTable;
use crate::error::{Error, Result};
use crate::geometry::{local_norm, metric_data, nu, MetricMode};
use crate::linalg::{cvector, solve};
use crate::newton::{alpha_certificate, jacobian_from, newton_report, newton_step, refine, section_of, Certificate, RefineReport};
use crate::path::Homotopy;
use crate::supports::ToricPoint;

/// Iterations allowed in the final refinement.
pub const FINAL_REFINE_ITERS: usize = 50;

#[derive(Clone, Debug, Serialize)]
pub struct Speeds {
    /// Projective speed of the coefficients.
    pub fdot: f64,
    /// Local norm of the root velocity.
    pub zdot: f64,
    pub velocity: Vec<Complex64>,
}

/// `‖P_{f⊥} ḟ_i‖ / ‖f_i‖` per equation.
pub fn coefficient_speeds(f: &[Vec<Complex64>], fdot: &[Vec<Complex64>]) -> Vec<f64> {
    f.iter()
        .zip(fdot)
        .map(|(c, d)| {
            let cc: f64 = c.iter().map(|v| v.norm_sqr()).sum();
            if cc == 0.0 {
                return f64::INFINITY;
            }
            let proj: Complex64 = c.iter().zip(d).map(|(a, b)| a.conj() * b).sum::<Complex64>() / cc;
            let perp: f64 = c.iter().zip(d).map(|(a, b)| (b - proj * a).norm_sqr()).sum();
            perp.sqrt() / cc.sqrt()
        })
        .collect()
}

fn combine(values: &[f64], mode: MetricMode) -> f64 {
    match mode {
        MetricMode::Hermitian => values.iter().map(|v| v * v).sum::<f64>().sqrt(),
        MetricMode::Finsler => values.iter().cloned().fold(0.0, f64::max),
    }
}

/// Coefficient speed and root speed at `(t, x)`, with `x` on the solution curve.
pub fn path_speed<H: Homotopy + ?Sized>(path: &H, t: f64, x: &ToricPoint, mode: MetricMode) -> Result<Speeds> {
    let (f, fdot) = path.eval(t)?;
    let coeffs: Vec<Vec<Complex64>> = f.equations().iter().map(|eq| eq.coefficients().to_vec()).collect();
    let fspeed = combine(&coefficient_speeds(&coeffs, &fdot), mode);
    let md = metric_data(&f, x);
    let rhs = section_of(&fdot, &md);
    let velocity: Vec<Complex64> = solve(&jacobian_from(&f, &md), &cvector(&rhs))?.iter().map(|v| -v).collect();
    Ok(Speeds { fdot: fspeed, zdot: local_norm(&md, &velocity, mode), velocity })
}

/// The condition-length integrands `μν·sqrt(‖ḟ‖² + ‖ż‖²)` and `μν·(‖ḟ‖ + ‖ż‖)`.
pub fn integrands<H: Homotopy + ?Sized>(path: &H, t: f64, x: &ToricPoint, mode: MetricMode) -> Result<[f64; 2]> {
    let (f, _) = path.eval(t)?;
    let report = newton_report(&f, x, mode)?;
    let s = path_speed(path, t, x, mode)?;
    let munu = report.mu * report.nu;
    Ok([munu * s.fdot.hypot(s.zdot), munu * (s.fdot + s.zdot)])
}

/// `½ μ ν β` of `f_t` at fixed `x`; infinite where the Jacobian is singular.
pub fn monitor<H: Homotopy + ?Sized>(path: &H, t: f64, x: &ToricPoint, mode: MetricMode) -> Result<f64> {
    let (f, _) = path.eval(t)?;
    match newton_report(&f, x, mode) {
        Ok(r) if r.alpha_half.is_finite() => Ok(r.alpha_half),
        Ok(_) | Err(Error::SingularJacobian { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// Step-control parameters.
#[derive(Clone, Copy, Debug)]
pub struct StepOptions {
    /// Relative bisection tolerance in `t`.
    pub tol_t: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self { tol_t: 1e-10 }
    }
}

/// First `t` past `t_i` where the monitor at fixed `x` reaches `α₁`, or
/// `t_end` if there is none. `previous` is the last accepted step length.
pub fn step_size<H: Homotopy + ?Sized>(
    path: &H,
    t_i: f64,
    x: &ToricPoint,
    constants: &ConstantsTable,
    mode: MetricMode,
    previous: Option<f64>,
    options: StepOptions,
) -> Result<f64> {
    let t_end = path.t_end();
    let span = (t_end - path.t_start()).abs();
    let dir = (t_end - t_i).signum();
    let threshold = constants.alpha1;
    let start = monitor(path, t_i, x, mode)?;
    if start >= threshold {
        return Err(Error::MonitorAboveThreshold { value: start, threshold });
    }
    if t_i == t_end {
        return Ok(t_end);
    }
    let remaining = (t_end - t_i).abs();
    let mut probe = previous.map_or(span / 100.0, |p| 0.1 * p).max(1e-12 * span);
    let mut lo = t_i;
    let hi = loop {
        let candidate = if probe >= remaining { t_end } else { t_i + dir * probe };
        if monitor(path, candidate, x, mode)? >= threshold {
            break candidate;
        }
        if candidate == t_end {
            return Ok(t_end);
        }
        lo = candidate;
        probe *= 2.0;
    };
    let mut hi = hi;
    while (hi - lo).abs() > options.tol_t * lo.abs().max(hi.abs()) {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if monitor(path, mid, x, mode)? >= threshold {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lo)
}

#[derive(Clone, Debug, Serialize)]
pub struct StepRecord {
    pub t: f64,
    pub x: ToricPoint,
    pub beta: f64,
    pub mu: f64,
    pub nu: f64,
    pub alpha_half: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Totals {
    pub steps: usize,
    /// Trapezoidal estimate of the condition length over the mesh.
    pub condition_length_estimate: f64,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrackLog {
    pub mode: MetricMode,
    pub t_start: f64,
    pub t_end: f64,
    pub steps: Vec<StepRecord>,
    pub final_refine: RefineReport,
    pub final_point: ToricPoint,
    pub certificate: Certificate,
    pub totals: Totals,
}

/// Consecutive tiny steps tolerated before giving up.
const STALL_STEPS: usize = 3;

/// Track the root of `f_{t_start}` near `x0` to `t_end`.
pub fn track<H: Homotopy + ?Sized>(
    path: &H,
    x0: &ToricPoint,
    constants: &ConstantsTable,
    mode: MetricMode,
    options: StepOptions,
) -> Result<TrackLog> {
    let clock = Instant::now();
    let (t_start, t_end) = (path.t_start(), path.t_end());
    let span = (t_end - t_start).abs();
    let (f0, _) = path.eval(t_start)?;
    let start = alpha_certificate(&f0, x0, mode, constants);
    if !start.jacobian_condition_ok {
        return Err(Error::SingularJacobian { ratio: 0.0 });
    }
    if !start.certified {
        return Err(Error::CertificationLost { t: t_start, alpha_half: start.alpha_half });
    }

    let mut steps = Vec::new();
    let mut t = t_start;
    let mut x = x0.clone();
    let mut previous = None;
    let mut stalled = 0;
    let mut mesh_integrand = Vec::new();
    if span > 0.0 {
        mesh_integrand.push((t, integrands(path, t, &x, mode).map(|v| v[0]).unwrap_or(f64::NAN)));
    }
    while t != t_end {
        let (f, _) = path.eval(t)?;
        let next = newton_step(&f, &x)?;
        let t_next = match step_size(path, t, &next, constants, mode, previous, options) {
            Err(Error::MonitorAboveThreshold { value, .. }) => {
                return Err(Error::CertificationLost { t, alpha_half: value })
            }
            other => other?,
        };
        let length = (t_next - t).abs();
        stalled = if length < 1e-14 * span { stalled + 1 } else { 0 };
        if stalled >= STALL_STEPS {
            return Err(Error::StepStall { t });
        }
        let (f_next, _) = path.eval(t_next)?;
        let r = newton_report(&f_next, &next, mode)?;
        steps.push(StepRecord {
            t: t_next,
            x: next.clone(),
            beta: r.beta,
            mu: r.mu,
            nu: r.nu,
            alpha_half: r.alpha_half,
            accepted: r.alpha_half <= constants.alpha1,
        });
        if let Ok(v) = integrands(path, t_next, &next, mode) {
            mesh_integrand.push((t_next, v[0]));
        }
        previous = Some(length);
        t = t_next;
        x = next;
    }

    let (f_end, _) = path.eval(t_end)?;
    let final_refine = refine(&f_end, &x, FINAL_REFINE_ITERS, mode)?;
    let final_point = final_refine.points.last().expect("refine keeps the start").clone();
    let certificate = alpha_certificate(&f_end, &final_point, mode, constants);
    let condition_length_estimate = mesh_integrand
        .windows(2)
        .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0).abs())
        .sum();
    Ok(TrackLog {
        mode,
        t_start,
        t_end,
        totals: Totals { steps: steps.len(), condition_length_estimate, wall_time_s: clock.elapsed().as_secs_f64() },
        steps,
        final_refine,
        final_point,
        certificate,
    })
}

impl TrackLog {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("track log serializes")
    }

    /// One row per step: `t, re_x.., im_x.., beta, mu, nu, alpha_half`.
    pub fn to_csv(&self) -> String {
        let n = self.final_point.dim();
        let mut out = String::from("t");
        for k in 1..=n {
            out.push_str(&format!(",re_x{k}"));
        }
        for k in 1..=n {
            out.push_str(&format!(",im_x{k}"));
        }
        out.push_str(",beta,mu,nu,alpha_half\n");
        for s in &self.steps {
            let mut row = vec![format!("{:e}", s.t)];
            row.extend(s.x.coords().iter().map(|c| format!("{:e}", c.re)));
            row.extend(s.x.coords().iter().map(|c| format!("{:e}", c.im)));
            row.extend([s.beta, s.mu, s.nu, s.alpha_half].iter().map(|v| format!("{v:e}")));
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// ν at a point, convenience for reporting.
pub fn nu_at<H: Homotopy + ?Sized>(path: &H, t: f64, x: &ToricPoint) -> Result<f64> {
    let (f, _) = path.eval(t)?;
    Ok(nu(&metric_data(&f, x)).nu)
}
