//! Scalar helper functions and the numerically derived certification constants.

use serde::Serialize;

use crate::error::{Error, Result};

/// `1 - 4u + 2u²`.
pub fn psi(u: f64) -> f64 {
    1.0 - 4.0 * u + 2.0 * u * u
}

fn disc(alpha: f64) -> f64 {
    (1.0 - 6.0 * alpha + alpha * alpha).sqrt()
}

/// Radius factor of the ball containing the limit zero: `(1 + α - √(1 - 6α + α²)) / (4α)`.
pub fn r0(alpha: f64) -> f64 {
    if alpha == 0.0 {
        return 1.0;
    }
    (1.0 + alpha - disc(alpha)) / (4.0 * alpha)
}

/// Radius factor of the uniqueness ball: `(1 - 3α - √(1 - 6α + α²)) / (4α)`.
pub fn r1(alpha: f64) -> f64 {
    if alpha == 0.0 {
        return 0.0;
    }
    (1.0 - 3.0 * alpha - disc(alpha)) / (4.0 * alpha)
}

/// `(1 - √(1 - 20δ)) / 10`.
pub fn big_r(delta: f64) -> f64 {
    (1.0 - (1.0 - 20.0 * delta).sqrt()) / 10.0
}

/// Largest α for which the classical α-test applies, `(13 - 3√17)/4`.
pub fn alpha0() -> f64 {
    (13.0 - 3.0 * 17f64.sqrt()) / 4.0
}

/// Left side minus right side of each defining equation.
pub fn u0_equation(u: f64) -> f64 {
    let q = (4.0 * u).exp() - 1.0;
    u + 2.0 * u * q * (q - 4.0 * u).exp() - (3.0 - 7f64.sqrt()) / 2.0
}

pub fn alpha1_equation(alpha: f64, u0: f64) -> f64 {
    alpha * r1(alpha) / (1.0 - 10.0 * alpha * r0(alpha)) - u0
}

pub fn u1_equation(u: f64, alpha1: f64) -> f64 {
    u * (2.0 * u).exp() * (1.0 - u) / (psi(u) * (1.0 - 10.0 * u)) - alpha1
}

pub fn delta_equation(delta: f64, u: f64) -> f64 {
    let r = big_r(delta);
    r.exp() / (1.0 - 5.0 * delta) * (u / 2.0 + r / 2.0) - u
}

/// Bisection on `[lo, hi]` to absolute width `tol`. Requires a sign change.
pub fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64, name: &str) -> Result<f64> {
    let (mut glo, ghi) = (g(lo), g(hi));
    if !(glo.is_finite() && ghi.is_finite()) || glo.signum() == ghi.signum() {
        return Err(Error::BracketFailure(format!(
            "{name}: no sign change on [{lo}, {hi}] (values {glo:.3e}, {ghi:.3e})"
        )));
    }
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm == 0.0 {
            return Ok(mid);
        }
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    // Return the endpoint with the smaller residual.
    Ok(if g(lo).abs() <= g(hi).abs() { lo } else { hi })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantsTable {
    pub u0: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub u1: f64,
    pub delta_a: f64,
    pub delta_b: f64,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Residuals {
    pub u0: f64,
    pub alpha1: f64,
    pub u1: f64,
    pub delta_a: f64,
    pub delta_b: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        [self.u0, self.alpha1, self.u1, self.delta_a, self.delta_b]
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }
}

const TOL: f64 = 1e-14;

pub fn derive_constants() -> Result<ConstantsTable> {
    let u0 = bisect(u0_equation, 0.0, 0.17, TOL, "u0")?;
    // The α equation has a pole near 0.088; the bracket stays left of it so
    // the smallest positive root is found.
    let alpha1 = bisect(|a| alpha1_equation(a, u0), 1e-6, 0.085, TOL, "alpha1")?;
    let u1 = bisect(|u| u1_equation(u, alpha1), 1e-9, 0.09, TOL, "u1")?;
    let delta_a = bisect(|d| delta_equation(d, u0), 1e-9, 0.05, TOL, "delta_a")?;
    let delta_b = bisect(|d| delta_equation(d, u1), 1e-9, 0.05, TOL, "delta_b")?;
    Ok(ConstantsTable {
        u0,
        alpha0: alpha0(),
        alpha1,
        u1,
        delta_a,
        delta_b,
        notes: vec![
            "u0: root of u + 2u(e^{4u}-1)e^{e^{4u}-1-4u} = (3-sqrt(7))/2".into(),
            "alpha1: smallest positive root of alpha*r1/(1-10*alpha*r0) = u0".into(),
            "u1: smallest root of u*e^{2u}(1-u)/(psi(u)(1-10u)) = alpha1".into(),
            "delta_a, delta_b: root of e^{R}/(1-5d)(u/2+R/2) = u with u = u0, u1".into(),
        ],
    })
}

impl ConstantsTable {
    pub fn residuals(&self) -> Residuals {
        Residuals {
            u0: u0_equation(self.u0),
            alpha1: alpha1_equation(self.alpha1, self.u0),
            u1: u1_equation(self.u1, self.alpha1),
            delta_a: delta_equation(self.delta_a, self.u0),
            delta_b: delta_equation(self.delta_b, self.u1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_functions() {
        assert_eq!(psi(0.0), 1.0);
        assert!((r0(1e-9) - 1.0).abs() < 1e-6);
        assert!(r1(1e-9).abs() < 1e-6);
        assert!((big_r(1e-6) / 1e-6 - 1.0).abs() < 1e-4);
        assert!((alpha0() - 0.157670780786754).abs() < 1e-14);
    }

    #[test]
    fn derived_values() {
        let k = derive_constants().unwrap();
        assert!((k.u0 - 0.0909946097266957).abs() < 1e-13);
        assert!((k.alpha1 - 0.0812394839529441).abs() < 1e-13);
        assert!((k.u1 - 0.0397451858078012).abs() < 1e-13);
        assert!((k.delta_a - 0.03739182968939726).abs() < 1e-13);
        assert!((k.delta_b - 0.0242103424031151).abs() < 1e-13);
        assert!((r1(k.alpha1) - 0.110020136719653).abs() < 1e-12);
        assert!(k.residuals().max() < 1e-12);
        assert_eq!(derive_constants().unwrap(), k);
    }

    #[test]
    fn closed_form_annotation_is_not_the_root() {
        let annotated = (3.0 - 7f64.sqrt()) / 2.0;
        assert!(u0_equation(annotated).abs() > 0.1);
    }

    #[test]
    fn bracket_without_sign_change() {
        assert!(matches!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12, "test"), Err(Error::BracketFailure(_))));
    }
}
