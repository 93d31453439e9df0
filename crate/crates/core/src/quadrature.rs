//! Adaptive Simpson quadrature for small vector-valued integrands.

use crate::error::Result;

const MAX_DEPTH: usize = 40;

#[derive(Clone, Copy, Debug)]
pub struct QuadratureOptions {
    /// Relative tolerance on each component.
    pub rel_tol: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-4 }
    }
}

struct Simpson<'a, const K: usize> {
    f: &'a mut dyn FnMut(f64) -> Result<[f64; K]>,
    evaluations: usize,
}

impl<const K: usize> Simpson<'_, K> {
    fn eval(&mut self, t: f64) -> Result<[f64; K]> {
        self.evaluations += 1;
        (self.f)(t)
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        &mut self,
        a: f64,
        b: f64,
        fa: [f64; K],
        fm: [f64; K],
        fb: [f64; K],
        whole: [f64; K],
        tol: [f64; K],
        depth: usize,
    ) -> Result<[f64; K]> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let h = (b - a) / 12.0;
        let mut left = [0.0; K];
        let mut right = [0.0; K];
        let mut converged = true;
        for k in 0..K {
            left[k] = h * (fa[k] + 4.0 * flm[k] + fm[k]);
            right[k] = h * (fm[k] + 4.0 * frm[k] + fb[k]);
            if (left[k] + right[k] - whole[k]).abs() > 15.0 * tol[k] {
                converged = false;
            }
        }
        let mut out = [0.0; K];
        let resolvable = (b - a).abs() > 1e3 * f64::EPSILON * a.abs().max(b.abs());
        if converged || depth >= MAX_DEPTH || !resolvable {
            for k in 0..K {
                out[k] = left[k] + right[k] + (left[k] + right[k] - whole[k]) / 15.0;
            }
            return Ok(out);
        }
        let half = tol.map(|v| 0.5 * v);
        let l = self.recurse(a, m, fa, flm, fm, left, half, depth + 1)?;
        let r = self.recurse(m, b, fm, frm, fb, right, half, depth + 1)?;
        for k in 0..K {
            out[k] = l[k] + r[k];
        }
        Ok(out)
    }

    fn run(&mut self, a: f64, b: f64, tol: [f64; K]) -> Result<[f64; K]> {
        let fa = self.eval(a)?;
        let fm = self.eval(0.5 * (a + b))?;
        let fb = self.eval(b)?;
        let h = (b - a) / 6.0;
        let mut whole = [0.0; K];
        for k in 0..K {
            whole[k] = h * (fa[k] + 4.0 * fm[k] + fb[k]);
        }
        self.recurse(a, b, fa, fm, fb, whole, tol, 0)
    }
}

/// `∫_a^b f` componentwise. The integral is signed, so `a > b` is allowed.
/// Returns the values and the number of integrand evaluations.
///
/// The absolute tolerance is set from a first pass and tightened once if
/// the final value turns out smaller than that pass suggested.
pub fn adaptive_simpson<const K: usize>(
    mut f: impl FnMut(f64) -> Result<[f64; K]>,
    a: f64,
    b: f64,
    options: QuadratureOptions,
) -> Result<([f64; K], usize)> {
    if a == b {
        return Ok(([0.0; K], 0));
    }
    let mut s = Simpson { f: &mut f, evaluations: 0 };
    // Rough scale from a 16-panel composite rule.
    let panels = 16;
    let mut rough = [0.0; K];
    let h = (b - a) / panels as f64;
    for p in 0..=panels {
        let w = if p == 0 || p == panels { 0.5 } else { 1.0 };
        let v = s.eval(a + h * p as f64)?;
        for k in 0..K {
            rough[k] += w * h.abs() * v[k].abs();
        }
    }
    let mut tol = rough.map(|v| options.rel_tol * v.max(f64::MIN_POSITIVE));
    let mut value = s.run(a, b, tol)?;
    for _ in 0..3 {
        let needed: Vec<bool> = (0..K).map(|k| options.rel_tol * value[k].abs() < 0.5 * tol[k]).collect();
        if !needed.iter().any(|&x| x) {
            break;
        }
        for k in 0..K {
            tol[k] = tol[k].min(options.rel_tol * value[k].abs().max(f64::MIN_POSITIVE));
        }
        value = s.run(a, b, tol)?;
    }
    Ok((value, s.evaluations))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reciprocal_over_decades() {
        let (v, _) = adaptive_simpson(|t| Ok([1.0 / t, 2.0 / t]), 1e-4, 1.0, QuadratureOptions::default()).unwrap();
        let exact = (1e4f64).ln();
        assert!((v[0] / exact - 1.0).abs() < 1e-4);
        assert!((v[1] / (2.0 * exact) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn reversed_and_empty() {
        let (v, n) = adaptive_simpson(|t| Ok([t * t]), 1.0, 0.0, QuadratureOptions::default()).unwrap();
        assert!(n < 100);
        assert!((v[0] + 1.0 / 3.0).abs() < 1e-12);
        let (v, n) = adaptive_simpson(|_| Ok([1.0]), 0.5, 0.5, QuadratureOptions::default()).unwrap();
        assert_eq!((v[0], n), (0.0, 0));
    }
}
