//! Random system generation and the 1000-draw property suite shared by the
//! acceptance and property test targets.

#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use toric_homotopy::geometry::{
    distortion_bounds, local_norm, metric_data, momentum_drift_bound, multiproj_distance, munu_drift_factor, nu, MetricMode,
};
use toric_homotopy::hull::Hull;
use toric_homotopy::newton::{beta, mu, newton_step};
use toric_homotopy::oracles::fd_gradient;
use toric_homotopy::supports::{shift_action, ExponentialSum, FewnomialSystem, SupportSet, ToricPoint, WeightVector};

pub const SEED: u64 = 20_240_611;
pub const DRAWS: usize = 1000;

/// Draws with μ above this are redrawn: invariance checks at 1e-10 need a
/// well-posed system, since round-off grows with the condition number.
pub const WELL_POSED_MU: f64 = 1e4;

pub fn rng(stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    r.set_stream(stream);
    r
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u: f64 = rng.random::<f64>().max(1e-300);
    let v: f64 = rng.random();
    (-2.0 * u.ln()).sqrt() * (2.0 * PI * v).cos()
}

pub fn cgauss(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(gaussian(rng), gaussian(rng)) / 2f64.sqrt()
}

pub fn cvec(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| cgauss(rng)).collect()
}

/// Simplex `{0, e_1, .., e_n}` plus up to three distinct integer points in `[0, 3]^n`.
pub fn random_support(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = vec![vec![0.0; n]];
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        pts.push(e);
    }
    let extras = rng.random_range(1..=3);
    while pts.len() < n + 1 + extras {
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(0..=3) as f64).collect();
        if !pts.contains(&p) {
            pts.push(p);
        }
    }
    pts
}

pub fn random_system(rng: &mut ChaCha8Rng, n: usize) -> FewnomialSystem {
    let equations = (0..n)
        .map(|_| {
            let pts = random_support(rng, n);
            let m = pts.len();
            let weights: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..2.0)).collect();
            ExponentialSum::new(SupportSet::new(n, pts).unwrap(), WeightVector::new(weights).unwrap(), cvec(rng, m)).unwrap()
        })
        .collect();
    FewnomialSystem::new(equations).unwrap()
}

pub fn random_point(rng: &mut ChaCha8Rng, n: usize) -> ToricPoint {
    ToricPoint::new((0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-PI..PI))).collect()).unwrap()
}

/// A random system and point with `μ ≤ WELL_POSED_MU`. Every fifth draw has `n = 3`.
pub fn draw(rng: &mut ChaCha8Rng, index: usize) -> (FewnomialSystem, ToricPoint) {
    let n = if index % 5 == 4 { 3 } else { 2 };
    loop {
        let f = random_system(rng, n);
        let x = random_point(rng, n);
        if matches!(mu(&f, &x, MetricMode::Hermitian), Ok(m) if m <= WELL_POSED_MU) {
            return (f, x);
        }
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

pub fn point_rel(a: &ToricPoint, b: &ToricPoint) -> f64 {
    let scale = 1.0 + a.coords().iter().map(|c| c.norm()).fold(0.0, f64::max);
    a.coords().iter().zip(b.coords()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max) / scale
}

/// Scale `w` so that `‖w‖_x = target`.
pub fn with_local_norm(f: &FewnomialSystem, x: &ToricPoint, w: Vec<Complex64>, target: f64) -> Vec<Complex64> {
    let md = metric_data(f, x);
    let len = local_norm(&md, &w, MetricMode::Hermitian);
    w.into_iter().map(|v| v * (target / len)).collect()
}

pub type Property = fn(&mut ChaCha8Rng, &FewnomialSystem, &ToricPoint) -> Result<(), String>;

pub fn momentum_gradient(_: &mut ChaCha8Rng, f: &FewnomialSystem, x: &ToricPoint) -> Result<(), String> {
    let re: Vec<f64> = x.coords().iter().map(|c| c.re).collect();
    let md = metric_data(f, x);
    for (i, em) in md.equations.iter().enumerate() {
        let grad = fd_gradient(|y| metric_data(f, &ToricPoint::from_re(y)).equations[i].log_kernel, &re, 1e-5).unwrap();
        for (g, m) in grad.iter().zip(&em.momentum) {
            if (g - m).abs() > 1e-6 {
                return Err(format!("equation {i}: gradient {g} vs momentum {m}"));
            }
        }
    }
    Ok(())
}

pub fn gram_is_half_momentum_jacobian(_: &mut ChaCha8Rng, f: &FewnomialSystem, x: &ToricPoint) -> Result<(), String> {
    let re: Vec<f64> = x.coords().iter().map(|c| c.re).collect();
    let md = metric_data(f, x);
    let n = f.n();
    for (i, em) in md.equations.iter().enumerate() {
        let scale = em.gram.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
        for q in 0..n {
            let column = fd_gradient(|y| metric_data(f, &ToricPoint::from_re(y)).equations[i].momentum[q], &re, 1e-5).unwrap();
            for (p, &got) in column.iter().enumerate() {
                let expected = 2.0 * em.gram[(q, p)];
                if (got - expected).abs() > 1e-5 * scale.max(1.0) {
                    return Err(format!("equation {i}: dm[{q}]/dx[{p}] = {got} vs 2G = {expected}"));
                }
            }
        }
    }
    Ok(())
}

pub fn momentum_in_hull(_: &mut ChaCha8Rng, f: &FewnomialSystem, x: &ToricPoint) -> Result<(), String> {
    let md = metric_data(f, x);
    for (eq, em) in f.equations().iter().zip(&md.equations) {
        let hull = Hull::new(eq.support().exponents()).map_err(|e| e.to_string())?;
        if !hull.contains(&em.momentum, 1e-9) {
            return Err(format!("momentum {:?} outside hull (depth {})", em.momentum, hull.depth(&em.momentum)));
        }
    }
    Ok(())
}

pub fn mu_nu_at_least_one(_: &mut ChaCha8Rng, f: &FewnomialSystem, x: &ToricPoint) -> Result<(), String> {
    let m = mu(f, x, MetricMode::Hermitian).map_err(|e| e.to_string())?;
    let v = nu(&metric_data(f, x)).nu;
    if m < 1.0 - 1e-12 || v < 1.0 - 1e-12 {
        return Err(format!("mu = {m}, nu = {v}"));
    }
    Ok(())
}

struct Invariants {
    step: ToricPoint,
    beta: f64,
    mu: f64,
    nu: f64,
}

fn invariants(f: &FewnomialSystem, x: &ToricPoint) -> Result<Invariants, String> {
    let e = |e: toric_homotopy::Error| e.to_string();
    Ok(Invariants {
        step: newton_step(f, x).map_err(e)?,
        beta: beta(f, x, MetricMode::Hermitian).map_err(e)?,
        mu: mu(f, x, MetricMode::Hermitian).map_err(e)?,
        nu: nu(&metric_data(f, x)).nu,
    })
}

fn compare(label: &str, a: &Invariants, b: &Invariants, tol: f64) -> Result<(), String> {
    let checks = [
        ("newton_step", point_rel(&a.step, &b.step)),
        ("beta", rel(a.beta, b.beta)),
        ("mu", rel(a.mu, b.mu)),
        ("nu", rel(a.nu, b.nu)),
    ];
    for (name, err) in checks {
        if err > tol {
            return Err(format!("{label}: {name} changed by {err:.3e}"));
        }
    }
    Ok(())
}

pub fn shift_invariance(rng: &mut ChaCha8Rng, f: &FewnomialSystem, x: &ToricPoint) -> Result<(), String> {
    let n = f.n();
    let shifts: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let g = shift_action(f, &shifts).map_err(|e| e.to_string())?;
    compare("shift", &invariants(f, x)?, &invariants(&g, x)?, 1e-10)?;
    let (m0, m1) = (metric_data(f, x), metric_data(&g, x));
    for ((a, b), s) in m0.equations.iter().zip(&m1.equations).zip(&shifts) {
        for ((p, q), d) in a.momentum.iter().zip(&b.momentum).zip(s) {
            // Exponents move by -g, and the momentum with them.
            if (q - p + d).abs() > 1e-10 * (1.0 + p.abs()) {
                return Err(format!("momentum moved by {} instead of {}", q - p, -d));
            }
        }
    }
    Ok(())
}

pub fn scaling_invariance(rng: &mut ChaCha8Rng, f: &FewnomialSystem, x: &ToricPoint) -> Result<(), String> {
    let coefficients: Vec<Vec<Complex64>> = f
        .equations()
        .iter()
        .map(|eq| {
            let mut lambda = cgauss(rng);
            while lambda.norm() < 1e-3 {
                lambda = cgauss(rng);
            }
            eq.coefficients().iter().map(|c| c * lambda).collect()
        })
        .collect();
    let g = f.with_coefficients(coefficients).map_err(|e| e.to_string())?;
    compare("scaling", &invariants(f, x)?, &invariants(&g, x)?, 1e-10)
}

pub fn toric_action_invariance(rng: &mut ChaCha8Rng, f: &FewnomialSystem, x: &ToricPoint) -> Result<(), String> {
    let turns: Vec<Complex64> = (0..f.n()).map(|_| Complex64::new(0.0, 2.0 * PI * rng.random_range(-3..=3) as f64)).collect();
    let y = x.translated(&turns).map_err(|e| e.to_string())?;
    let (a, b) = (invariants(f, x)?, invariants(f, &y)?);
    // The step is compared modulo the same lattice translation.
    let moved = a.step.translated(&turns).map_err(|e| e.to_string())?;
    let a = Invariants { step: moved, ..a };
    compare("toric action", &a, &b, 1e-10)
}

fn random_offset(rng: &mut ChaCha8Rng, f: &FewnomialSystem, x: &ToricPoint, s_max: f64) -> (ToricPoint, f64) {
    let v = nu(&metric_data(f, x)).nu;
    let s = rng.random_range(0.0..s_max);
    let w = with_local_norm(f, x, cvec(rng, f.n()), s / v);
    (x.translated(&w).unwrap(), s)
}

pub fn distortion_sandwich(rng: &mut ChaCha8Rng, f: &FewnomialSystem, x: &ToricPoint) -> Result<(), String> {
    let (y, s) = random_offset(rng, f, x, 0.3);
    let (lo, hi) = distortion_bounds(s);
    let (mx, my) = (metric_data(f, x), metric_data(f, &y));
    for _ in 0..4 {
        let u = cvec(rng, f.n());
        let (ux, uy) = (local_norm(&mx, &u, MetricMode::Hermitian), local_norm(&my, &u, MetricMode::Hermitian));
        if uy < lo * ux * (1.0 - 1e-12) || uy > hi * ux * (1.0 + 1e-12) {
            return Err(format!("s = {s}: |u|_y / |u|_x = {} outside [{lo}, {hi}]", uy / ux));
        }
    }
    Ok(())
}

pub fn momentum_drift(rng: &mut ChaCha8Rng, f: &FewnomialSystem, x: &ToricPoint) -> Result<(), String> {
    let (y, s) = random_offset(rng, f, x, 0.5);
    let bound = momentum_drift_bound(s);
    let (mx, my) = (metric_data(f, x), metric_data(f, &y));
    for i in 0..f.n() {
        for _ in 0..4 {
            let w: Vec<f64> = (0..f.n()).map(|_| gaussian(rng)).collect();
            let wc: Vec<Complex64> = w.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            let drift: f64 = mx.equations[i].momentum.iter().zip(&my.equations[i].momentum).zip(&w).map(|((a, b), c)| (b - a) * c).sum();
            let allowed = mx.equation_norm(i, &wc) * bound;
            if drift.abs() > allowed * (1.0 + 1e-9) + 1e-14 {
                return Err(format!("s = {s}, equation {i}: drift {drift} exceeds {allowed}"));
            }
        }
    }
    Ok(())
}

/// Perturbs both the system and the point so that `θ` lands in `[0, 0.19)`,
/// then checks the two-sided bound on `μν`.
pub fn munu_sandwich(rng: &mut ChaCha8Rng, f: &FewnomialSystem, x: &ToricPoint) -> Result<(), String> {
    let e = |e: toric_homotopy::Error| e.to_string();
    let munu = mu(f, x, MetricMode::Hermitian).map_err(e)? * nu(&metric_data(f, x)).nu;
    let theta_target = rng.random_range(0.0..0.19);
    let split: f64 = rng.random();
    let dist = split * theta_target / munu;
    let step = (1.0 - split) * theta_target / munu;
    // Rotate each equation away from itself by angle asin(dist / √n).
    let sine = dist / (f.n() as f64).sqrt();
    let coefficients: Vec<Vec<Complex64>> = f
        .equations()
        .iter()
        .map(|eq| {
            let c = eq.coefficients();
            let norm = eq.coefficient_norm();
            let mut u = cvec(rng, c.len());
            let proj: Complex64 = c.iter().zip(&u).map(|(a, b)| a.conj() * b).sum::<Complex64>() / (norm * norm);
            for (ui, ci) in u.iter_mut().zip(c) {
                *ui -= proj * ci;
            }
            let un = u.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let cos = (1.0 - sine * sine).sqrt();
            c.iter().zip(&u).map(|(ci, ui)| ci * cos + ui * (sine * norm / un)).collect()
        })
        .collect();
    let g = f.with_coefficients(coefficients).map_err(e)?;
    let w = with_local_norm(f, x, cvec(rng, f.n()), step);
    let y = x.translated(&w).map_err(e)?;
    let theta = (step + multiproj_distance(f, &g, MetricMode::Hermitian).map_err(e)?) * munu;
    let (lo, hi) = munu_drift_factor(theta).map_err(e)?;
    let measured = mu(&g, &y, MetricMode::Hermitian).map_err(e)? * nu(&metric_data(&g, &y)).nu;
    let ratio = measured / munu;
    if ratio < lo * (1.0 - 1e-9) || ratio > hi * (1.0 + 1e-9) {
        return Err(format!("theta = {theta}: mu nu ratio {ratio} outside [{lo}, {hi}]"));
    }
    Ok(())
}

pub fn finsler_equivalence(rng: &mut ChaCha8Rng, f: &FewnomialSystem, x: &ToricPoint) -> Result<(), String> {
    let md = metric_data(f, x);
    let root_n = (f.n() as f64).sqrt();
    for _ in 0..4 {
        let w = cvec(rng, f.n());
        let (h, fin) = (local_norm(&md, &w, MetricMode::Hermitian), local_norm(&md, &w, MetricMode::Finsler));
        if fin > h * (1.0 + 1e-12) || h > root_n * fin * (1.0 + 1e-12) {
            return Err(format!("Finsler {fin} vs Hermitian {h}"));
        }
    }
    let e = |e: toric_homotopy::Error| e.to_string();
    let (mh, mf) = (mu(f, x, MetricMode::Hermitian).map_err(e)?, mu(f, x, MetricMode::Finsler).map_err(e)?);
    if mf < mh / root_n * (1.0 - 1e-9) || mf > mh * root_n * (1.0 + 1e-9) {
        return Err(format!("Finsler mu {mf} vs Hermitian mu {mh}"));
    }
    Ok(())
}

pub const PROPERTIES: &[(&str, Property)] = &[
    ("momentum_gradient", momentum_gradient),
    ("gram_is_half_momentum_jacobian", gram_is_half_momentum_jacobian),
    ("momentum_in_hull", momentum_in_hull),
    ("mu_nu_at_least_one", mu_nu_at_least_one),
    ("shift_invariance", shift_invariance),
    ("scaling_invariance", scaling_invariance),
    ("toric_action_invariance", toric_action_invariance),
    ("distortion_sandwich", distortion_sandwich),
    ("momentum_drift", momentum_drift),
    ("munu_sandwich", munu_sandwich),
    ("finsler_equivalence", finsler_equivalence),
];

/// Runs one property over `DRAWS` draws on its own RNG stream. Returns the
/// failures as `(draw, message)`.
pub fn run_property(index: usize, property: Property) -> Vec<(usize, String)> {
    let mut r = rng(index as u64 + 1);
    let mut failures = Vec::new();
    for k in 0..DRAWS {
        let (f, x) = draw(&mut r, k);
        if let Err(msg) = property(&mut r, &f, &x) {
            failures.push((k, msg));
        }
    }
    failures
}
