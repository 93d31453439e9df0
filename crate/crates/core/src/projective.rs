//! Dense homogeneous baseline: Weyl norm, projective Newton, the classical
//! condition number and its condition length.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inverse, norm2, solve, CMatrix, CVector};
use crate::path::Homotopy;
use crate::quadrature::{adaptive_simpson, QuadratureOptions};
use crate::supports::FewnomialSystem;

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Exponents of total degree `d` in `n + 1` variables, lexicographically
/// descending (so `x₀^d` comes first).
pub fn monomials(n: usize, d: usize) -> Vec<Vec<usize>> {
    fn rec(vars: usize, d: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if vars == 1 {
            cur.push(d);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for first in (0..=d).rev() {
            cur.push(first);
            rec(vars - 1, d - first, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n + 1, d, &mut Vec::new(), &mut out);
    out
}

/// `n` homogeneous polynomials in `n + 1` variables with dense coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousSystem {
    n: usize,
    degrees: Vec<usize>,
    coefficients: Vec<Vec<Complex64>>,
    exponents: Vec<Vec<Vec<usize>>>,
}

impl HomogeneousSystem {
    pub fn new(n: usize, degrees: Vec<usize>, coefficients: Vec<Vec<Complex64>>) -> Result<Self> {
        if degrees.len() != n || coefficients.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} degrees and {} coefficient arrays for n = {n}",
                degrees.len(),
                coefficients.len()
            )));
        }
        for (i, (&d, c)) in degrees.iter().zip(&coefficients).enumerate() {
            if d == 0 {
                return Err(Error::InvalidArgument(format!("equation {i} has degree 0")));
            }
            let expected = binomial(d + n, n);
            if c.len() != expected {
                return Err(Error::DimensionMismatch(format!(
                    "equation {i} of degree {d} needs {expected} coefficients, got {}",
                    c.len()
                )));
            }
        }
        let exponents = degrees.iter().map(|&d| monomials(n, d)).collect();
        Ok(Self { n, degrees, coefficients, exponents })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn coefficients(&self) -> &[Vec<Complex64>] {
        &self.coefficients
    }

    fn monomial(alpha: &[usize], x: &[Complex64]) -> Complex64 {
        alpha.iter().zip(x).map(|(&k, v)| v.powu(k as u32)).product()
    }

    /// `∂^{e} x^α` evaluated at `x`, where `e` is a multi-index of small order.
    fn derivative(alpha: &[usize], x: &[Complex64], e: &[usize]) -> Complex64 {
        let mut value = Complex64::new(1.0, 0.0);
        for ((&k, &j), v) in alpha.iter().zip(e).zip(x) {
            if j > k {
                return Complex64::new(0.0, 0.0);
            }
            let falling: f64 = (0..j).map(|r| (k - r) as f64).product();
            value *= v.powu((k - j) as u32) * falling;
        }
        value
    }

    pub fn eval(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.coefficients
            .iter()
            .zip(&self.exponents)
            .map(|(c, ex)| c.iter().zip(ex).map(|(ci, a)| ci * Self::monomial(a, x)).sum())
            .collect()
    }

    /// `n × (n+1)` Jacobian.
    pub fn jacobian(&self, x: &[Complex64]) -> CMatrix {
        let m = self.n + 1;
        let mut j = CMatrix::zeros(self.n, m);
        for (i, (c, ex)) in self.coefficients.iter().zip(&self.exponents).enumerate() {
            for (ci, a) in c.iter().zip(ex) {
                for k in 0..m {
                    let mut e = vec![0; m];
                    e[k] = 1;
                    j[(i, k)] += ci * Self::derivative(a, x, &e);
                }
            }
        }
        j
    }

    /// Hessian of each equation, `(n+1) × (n+1)`.
    pub fn hessians(&self, x: &[Complex64]) -> Vec<CMatrix> {
        let m = self.n + 1;
        self.coefficients
            .iter()
            .zip(&self.exponents)
            .map(|(c, ex)| {
                let mut h = CMatrix::zeros(m, m);
                for (ci, a) in c.iter().zip(ex) {
                    for p in 0..m {
                        for q in 0..m {
                            let mut e = vec![0; m];
                            e[p] += 1;
                            e[q] += 1;
                            h[(p, q)] += ci * Self::derivative(a, x, &e);
                        }
                    }
                }
                h
            })
            .collect()
    }
}

/// Inverse multinomial weights `α! (d - ...)! / d!` of one degree.
fn weyl_weights(n: usize, d: usize) -> Vec<f64> {
    monomials(n, d)
        .iter()
        .map(|a| a.iter().map(|&k| factorial(k)).product::<f64>() / factorial(d))
        .collect()
}

fn weyl_inner(weights: &[f64], a: &[Complex64], b: &[Complex64]) -> Complex64 {
    weights.iter().zip(a).zip(b).map(|((w, x), y)| x.conj() * y * w).sum()
}

/// Per-equation Weyl norms.
pub fn weyl_norm(h: &HomogeneousSystem) -> Vec<f64> {
    h.coefficients
        .iter()
        .zip(&h.degrees)
        .map(|(c, &d)| weyl_inner(&weyl_weights(h.n, d), c, c).re.sqrt())
        .collect()
}

/// Norm of the whole tuple.
pub fn weyl_tuple_norm(h: &HomogeneousSystem) -> f64 {
    weyl_norm(h).iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Orthonormal basis of `x⊥` as the columns of an `(n+1) × n` matrix.
pub fn orthogonal_complement(x: &[Complex64]) -> CMatrix {
    let m = x.len();
    let nx = norm2(x);
    let mut basis: Vec<Vec<Complex64>> = vec![x.iter().map(|v| v / nx).collect()];
    for k in 0..m {
        let mut v = vec![Complex64::new(0.0, 0.0); m];
        v[k] = Complex64::new(1.0, 0.0);
        for b in &basis {
            let c: Complex64 = b.iter().zip(&v).map(|(bi, vi)| bi.conj() * vi).sum();
            v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= c * bi);
        }
        let nv = norm2(&v);
        if nv > 1e-8 && basis.len() < m {
            basis.push(v.into_iter().map(|c| c / nv).collect());
        }
    }
    CMatrix::from_fn(m, m - 1, |i, j| basis[j + 1][i])
}

/// Projective Newton step via the bordered system `[Dh(X); X*] δ = [h(X); 0]`,
/// returned normalized to unit length.
pub fn proj_newton_step(h: &HomogeneousSystem, x: &[Complex64]) -> Result<Vec<Complex64>> {
    let delta = bordered_step(h, x)?;
    let next: Vec<Complex64> = x.iter().zip(delta.iter()).map(|(a, d)| a - d).collect();
    let nn = norm2(&next);
    Ok(next.into_iter().map(|v| v / nn).collect())
}

fn bordered_step(h: &HomogeneousSystem, x: &[Complex64]) -> Result<CVector> {
    let m = h.n + 1;
    let j = h.jacobian(x);
    let mut b = CMatrix::zeros(m, m);
    for i in 0..h.n {
        for k in 0..m {
            b[(i, k)] = j[(i, k)];
        }
    }
    for k in 0..m {
        b[(h.n, k)] = x[k].conj();
    }
    let mut rhs = h.eval(x);
    rhs.push(Complex64::new(0.0, 0.0));
    solve(&b, &CVector::from_vec(rhs))
}

fn restricted_inverse(h: &HomogeneousSystem, x: &[Complex64]) -> Result<CMatrix> {
    let u = orthogonal_complement(x);
    inverse(&(h.jacobian(x) * u))
}

fn opnorm(m: &CMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

/// `‖h‖ · ‖(Dh(X)|_{X⊥})⁻¹ diag(‖X‖^{d_i-1} √d_i)‖`.
pub fn proj_mu(h: &HomogeneousSystem, x: &[Complex64]) -> Result<f64> {
    let mut a = restricted_inverse(h, x)?;
    let nx = norm2(x);
    for (i, &d) in h.degrees.iter().enumerate() {
        let s = nx.powi(d as i32 - 1) * (d as f64).sqrt();
        for r in 0..a.nrows() {
            a[(r, i)] *= s;
        }
    }
    Ok(weyl_tuple_norm(h) * opnorm(&a))
}

/// `sin` of the angle between two projective points.
pub fn proj_sine_distance(x: &[Complex64], y: &[Complex64]) -> f64 {
    crate::geometry::sine_distance(x, y)
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectiveAlpha {
    pub alpha: f64,
    pub beta: f64,
    /// Upper bound for γ from the Hessian norms.
    pub gamma: f64,
    pub certified: bool,
}

/// Smale's α-test with `γ` bounded via `‖A⁻¹‖·sqrt(Σ‖H_i‖²)/2`. Exact for the
/// quadratic part, so only meaningful for degree ≤ 2 systems.
pub fn proj_alpha(h: &HomogeneousSystem, x: &[Complex64]) -> Result<ProjectiveAlpha> {
    if h.degrees.iter().any(|&d| d > 2) {
        return Err(Error::Unsupported("projective alpha test implemented for degree <= 2".into()));
    }
    let nx = norm2(x);
    let unit: Vec<Complex64> = x.iter().map(|v| v / nx).collect();
    let beta = norm2(bordered_step(h, &unit)?.as_slice());
    let a_inv = opnorm(&restricted_inverse(h, &unit)?);
    let hess: f64 = h.hessians(&unit).iter().map(|m| opnorm(m).powi(2)).sum::<f64>().sqrt();
    let gamma = a_inv * hess / 2.0;
    let alpha = beta * gamma;
    Ok(ProjectiveAlpha { alpha, beta, gamma, certified: alpha < crate::constants::alpha0() })
}

/// Dense homogeneous system from a sparse one with `n = 2`, nonnegative
/// integer exponents and degree at most 4. Coefficients absorb the weights.
pub fn homogenize(f: &FewnomialSystem) -> Result<HomogeneousSystem> {
    let coefficients: Vec<Vec<Complex64>> = f.equations().iter().map(|eq| eq.coefficients().to_vec()).collect();
    homogenize_coefficients(f, &coefficients)
}

/// Same as [`homogenize`] but with replacement coefficients on `f`'s supports.
pub fn homogenize_coefficients(f: &FewnomialSystem, coefficients: &[Vec<Complex64>]) -> Result<HomogeneousSystem> {
    let n = f.n();
    if n != 2 {
        return Err(Error::Unsupported(format!("dense conversion requires n = 2, got {n}")));
    }
    let mut degrees = Vec::new();
    let mut dense = Vec::new();
    for (i, (eq, coeffs)) in f.equations().iter().zip(coefficients).enumerate() {
        let exps = eq.support().exponents();
        let mut ints = Vec::with_capacity(exps.len());
        for a in exps {
            if a.iter().any(|&v| v < 0.0 || v.fract() != 0.0) {
                return Err(Error::Unsupported(format!("equation {i}: exponent {a:?} is not a nonnegative integer vector")));
            }
            ints.push(a.iter().map(|&v| v as usize).collect::<Vec<_>>());
        }
        let d = ints.iter().map(|a| a.iter().sum::<usize>()).max().unwrap_or(0);
        if d == 0 || d > 4 {
            return Err(Error::Unsupported(format!("equation {i}: degree {d} outside 1..=4")));
        }
        let index: HashMap<Vec<usize>, usize> = monomials(n, d).into_iter().enumerate().map(|(k, a)| (a, k)).collect();
        let mut c = vec![Complex64::new(0.0, 0.0); index.len()];
        for ((a, &rho), &v) in ints.iter().zip(eq.weights().as_slice()).zip(coeffs) {
            let mut alpha = vec![d - a.iter().sum::<usize>()];
            alpha.extend(a);
            c[index[&alpha]] += v * rho;
        }
        degrees.push(d);
        dense.push(c);
    }
    HomogeneousSystem::new(n, degrees, dense)
}

/// Homogenized view of a sparse homotopy.
pub struct HomogeneousPath<'a, H: ?Sized> {
    inner: &'a H,
}

impl<'a, H: Homotopy + ?Sized> HomogeneousPath<'a, H> {
    pub fn new(inner: &'a H) -> Self {
        Self { inner }
    }

    /// `(h_t, ḣ_t)`, the derivative given as dense coefficient arrays.
    pub fn eval(&self, t: f64) -> Result<(HomogeneousSystem, Vec<Vec<Complex64>>)> {
        let (f, fdot) = self.inner.eval(t)?;
        let h = homogenize(&f)?;
        let hdot = homogenize_coefficients(&f, &fdot)?;
        Ok((h, hdot.coefficients))
    }
}

/// Projective speed of the coefficient tuple in the Weyl metric and of the
/// point in the Fubini–Study metric.
pub fn proj_speeds(h: &HomogeneousSystem, hdot: &[Vec<Complex64>], x: &[Complex64], xdot: &[Complex64]) -> (f64, f64) {
    let weights: Vec<Vec<f64>> = h.degrees.iter().map(|&d| weyl_weights(h.n, d)).collect();
    let mut ff = 0.0;
    let mut fd = Complex64::new(0.0, 0.0);
    let mut dd = 0.0;
    for ((w, c), d) in weights.iter().zip(&h.coefficients).zip(hdot) {
        ff += weyl_inner(w, c, c).re;
        fd += weyl_inner(w, c, d);
        dd += weyl_inner(w, d, d).re;
    }
    let fspeed = (dd - fd.norm_sqr() / ff).max(0.0).sqrt() / ff.sqrt();
    let xx: f64 = x.iter().map(|v| v.norm_sqr()).sum();
    let xd: Complex64 = x.iter().zip(xdot).map(|(a, b)| a.conj() * b).sum();
    let dd: f64 = xdot.iter().map(|v| v.norm_sqr()).sum();
    let xspeed = (dd - xd.norm_sqr() / xx).max(0.0).sqrt() / xx.sqrt();
    (fspeed, xspeed)
}

/// `∫ μ(h_t, X_t) sqrt(‖ḣ‖² + ‖Ẋ‖²) dt` along a curve given with its tangent.
pub fn proj_condition_length<H, C>(
    path: &HomogeneousPath<'_, H>,
    mut curve: C,
    t0: f64,
    t1: f64,
    quadrature: QuadratureOptions,
) -> Result<f64>
where
    H: Homotopy + ?Sized,
    C: FnMut(f64) -> Result<(Vec<Complex64>, Vec<Complex64>)>,
{
    let (v, _) = adaptive_simpson(
        |t| {
            let (h, hdot) = path.eval(t)?;
            let (x, xdot) = curve(t)?;
            let mu = proj_mu(&h, &x)?;
            let (fs, xs) = proj_speeds(&h, &hdot, &x, &xdot);
            Ok([mu * fs.hypot(xs)])
        },
        t0,
        t1,
        quadrature,
    )?;
    Ok(v[0].abs())
}

#[derive(Serialize, Deserialize)]
struct DenseDoc {
    n: usize,
    degrees: Vec<usize>,
    coefficients: Vec<Vec<[f64; 2]>>,
}

/// Parse a dense system document (see README).
pub fn parse_dense(text: &str) -> Result<HomogeneousSystem> {
    let doc: DenseDoc = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    let coefficients = doc
        .coefficients
        .iter()
        .map(|c| c.iter().map(|v| Complex64::new(v[0], v[1])).collect())
        .collect();
    HomogeneousSystem::new(doc.n, doc.degrees, coefficients)
}

pub fn dense_to_json(h: &HomogeneousSystem) -> String {
    let doc = DenseDoc {
        n: h.n,
        degrees: h.degrees.clone(),
        coefficients: h.coefficients.iter().map(|c| c.iter().map(|v| [v.re, v.im]).collect()).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("dense system serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example::{projective_curves, running_example_path, running_example_system};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// `√d x₀^{d-1} x_i`, the best-conditioned system.
    fn diagonal(n: usize, d: usize) -> HomogeneousSystem {
        let mons = monomials(n, d);
        let coeffs = (1..=n)
            .map(|i| {
                mons.iter()
                    .map(|a| {
                        let hit = a[0] == d - 1 && a[i] == 1;
                        c(if hit { (d as f64).sqrt() } else { 0.0 })
                    })
                    .collect()
            })
            .collect();
        HomogeneousSystem::new(n, vec![d; n], coeffs).unwrap()
    }

    #[test]
    fn monomial_order() {
        let m = monomials(2, 2);
        assert_eq!(m[0], vec![2, 0, 0]);
        assert_eq!(m.last().unwrap(), &vec![0, 0, 2]);
        assert_eq!(m.len(), 6);
    }

    #[test]
    fn weyl_norms() {
        let h = diagonal(2, 3);
        for v in weyl_norm(&h) {
            assert!((v - 1.0).abs() < 1e-15);
        }
        let x0 = HomogeneousSystem::new(1, vec![3], vec![vec![c(1.0), c(0.0), c(0.0), c(0.0)]]).unwrap();
        assert!((weyl_norm(&x0)[0] - 1.0).abs() < 1e-15);
        let f = homogenize(&running_example_system(1.0)).unwrap();
        assert!((weyl_tuple_norm(&f).powi(2) - 11.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn optimal_condition() {
        for d in 1..=3 {
            let h = diagonal(2, d);
            let x = [c(1.0), c(0.0), c(0.0)];
            assert!((proj_mu(&h, &x).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn newton_fixes_and_converges() {
        let h = homogenize(&running_example_system(1.0)).unwrap();
        let root = [c(1.0), c(1.0), c(1.0)];
        let out = proj_newton_step(&h, &root).unwrap();
        assert!(proj_sine_distance(&out, &root) < 1e-15);
        let mut x = vec![c(1.0), c(1.05), c(0.97)];
        let mut dist = Vec::new();
        for _ in 0..6 {
            x = proj_newton_step(&h, &x).unwrap();
            dist.push(proj_sine_distance(&x, &root));
        }
        assert!(dist[5] < 1e-14);
        assert!(dist[2] < dist[1] * dist[1] * 50.0);
        let scaled: Vec<Complex64> = x.iter().map(|v| v * Complex64::new(2.0, -3.0)).collect();
        let a = proj_newton_step(&h, &x).unwrap();
        let b = proj_newton_step(&h, &scaled).unwrap();
        assert!(proj_sine_distance(&a, &b) < 1e-12);
    }

    #[test]
    fn curve_tangents_match_homotopy() {
        let path = running_example_path(1.0, 0.01);
        let hp = HomogeneousPath::new(&path);
        let t = 0.3;
        for (x, xdot) in projective_curves(t) {
            let (h, hdot) = hp.eval(t).unwrap();
            assert!(norm2(&h.eval(&x)) < 1e-12);
            // d/dt h_t(X_t) = ḣ(X) + Dh(X) Ẋ = 0
            let hd = HomogeneousSystem::new(2, h.degrees().to_vec(), hdot).unwrap();
            let total: Vec<Complex64> =
                hd.eval(&x).iter().zip((h.jacobian(&x) * CVector::from_vec(xdot)).iter()).map(|(a, b)| a + b).collect();
            assert!(norm2(&total) < 1e-12);
        }
    }

    #[test]
    fn dense_round_trip_and_validation() {
        let h = homogenize(&running_example_system(0.5)).unwrap();
        assert_eq!(parse_dense(&dense_to_json(&h)).unwrap(), h);
        assert!(HomogeneousSystem::new(2, vec![2, 2], vec![vec![c(1.0); 5], vec![c(1.0); 6]]).is_err());
        let zero_len = proj_condition_length(&HomogeneousPath::new(&running_example_path(1.0, 0.5)), |_| Ok((vec![], vec![])), 0.7, 0.7, QuadratureOptions::default()).unwrap();
        assert_eq!(zero_len, 0.0);
    }
}
