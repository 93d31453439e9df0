//! Brute-force convex hull queries for small dimensions.
//!
//! Facets are found by enumerating affinely independent subsets and keeping
//! the hyperplanes that support the whole point set. Work happens inside the
//! affine span of the points so lower-dimensional hulls are handled too.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 4;

/// Convex hull of a finite point set, expressed in its own affine span.
#[derive(Clone, Debug)]
pub struct Hull {
    origin: Vec<f64>,
    basis: Vec<Vec<f64>>,
    /// Facets as `(unit normal, offset)` with `normal · p ≤ offset` inside.
    facets: Vec<(Vec<f64>, f64)>,
    diameter: f64,
    /// Interval bounds when the span is one-dimensional.
    interval: Option<(f64, f64)>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

impl Hull {
    pub fn new(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if dim > MAX_DIM {
            return Err(Error::Unsupported(format!(
                "convex hull geometry is limited to n <= {MAX_DIM}, got n = {dim}"
            )));
        }
        let origin = points.first().cloned().unwrap_or_default();
        let scale = points
            .iter()
            .map(|p| sub(p, &origin).iter().map(|v| v.abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
            .max(1.0);

        let mut basis: Vec<Vec<f64>> = Vec::new();
        for p in points {
            let mut v = sub(p, &origin);
            for b in &basis {
                let c = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(vi, bi)| *vi -= c * bi);
            }
            let norm = dot(&v, &v).sqrt();
            if norm > 1e-10 * scale {
                basis.push(v.into_iter().map(|x| x / norm).collect());
            }
        }

        let local: Vec<Vec<f64>> = points.iter().map(|p| Self::project(&origin, &basis, p)).collect();
        let mut diameter: f64 = 0.0;
        for (i, p) in local.iter().enumerate() {
            for q in &local[..i] {
                diameter = diameter.max(dot(&sub(p, q), &sub(p, q)).sqrt());
            }
        }

        let k = basis.len();
        let mut facets = Vec::new();
        let mut interval = None;
        if k == 1 {
            let lo = local.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            let hi = local.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
            interval = Some((lo, hi));
        } else if k >= 2 {
            let tol = 1e-10 * scale;
            for subset in subsets(local.len(), k) {
                let base = &local[subset[0]];
                let rows: Vec<f64> = subset[1..].iter().flat_map(|&j| sub(&local[j], base)).collect();
                let m = DMatrix::from_row_slice(k - 1, k, &rows);
                let svd = m.clone().svd(false, true);
                let v_t = match svd.v_t {
                    Some(v) => v,
                    None => continue,
                };
                let mut sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
                sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
                if sv.len() < k - 1 || sv[k - 2] <= tol {
                    continue;
                }
                // Null vector of the (k-1)×k difference matrix.
                let mut normal = vec![0.0; k];
                for idx in 0..k {
                    let mut v = vec![0.0; k];
                    v[idx] = 1.0;
                    for r in 0..v_t.nrows().min(k - 1) {
                        let row: Vec<f64> = v_t.row(r).iter().cloned().collect();
                        let c = dot(&v, &row);
                        v.iter_mut().zip(&row).for_each(|(vi, ri)| *vi -= c * ri);
                    }
                    if dot(&v, &v) > dot(&normal, &normal) {
                        normal = v;
                    }
                }
                let nn = dot(&normal, &normal).sqrt();
                if nn < 1e-8 {
                    continue;
                }
                normal.iter_mut().for_each(|v| *v /= nn);
                let offset = dot(&normal, base);
                let (mut above, mut below) = (false, false);
                for p in &local {
                    let d = dot(&normal, p) - offset;
                    above |= d > tol;
                    below |= d < -tol;
                }
                match (above, below) {
                    (true, true) => {}
                    (false, _) => facets.push((normal, offset)),
                    (true, false) => facets.push((normal.iter().map(|v| -v).collect(), -offset)),
                }
            }
        }
        Ok(Self { origin, basis, facets, diameter, interval })
    }

    fn project(origin: &[f64], basis: &[Vec<f64>], p: &[f64]) -> Vec<f64> {
        let d = sub(p, origin);
        basis.iter().map(|b| dot(&d, b)).collect()
    }

    /// Dimension of the affine span.
    pub fn span_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Signed distance from `p` (projected to the span) to the boundary;
    /// positive inside.
    pub fn depth(&self, p: &[f64]) -> f64 {
        let q = Self::project(&self.origin, &self.basis, p);
        match self.basis.len() {
            0 => 0.0,
            1 => {
                let (lo, hi) = self.interval.expect("interval for 1-d hull");
                (q[0] - lo).min(hi - q[0])
            }
            _ => self
                .facets
                .iter()
                .map(|(normal, offset)| offset - dot(normal, &q))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Membership test with absolute tolerance `tol`.
    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        self.depth(p) >= -tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrilateral_depth() {
        let h = Hull::new(&[vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 2.0], vec![0.0, 3.0]]).unwrap();
        assert_eq!(h.span_dim(), 2);
        assert_eq!(h.facets.len(), 4);
        assert!((h.depth(&[0.5, 1.5]) - 0.5 / 5f64.sqrt()).abs() < 1e-14);
        assert!((h.diameter() - 10f64.sqrt()).abs() < 1e-14);
        assert!(!h.contains(&[2.0, 0.0], 1e-12));
    }

    #[test]
    fn segment_in_plane() {
        let h = Hull::new(&[vec![0.0, 0.0], vec![2.0, 2.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(h.span_dim(), 1);
        assert!((h.depth(&[0.5, 0.5]) - 0.5 * 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn tetrahedron_in_three_space() {
        let h = Hull::new(&[vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(h.facets.len(), 4);
        assert!((h.depth(&[0.1, 0.1, 0.1]) - 0.1).abs() < 1e-14);
        assert!((h.depth(&[0.25, 0.25, 0.25]) - 0.25 / 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn refuses_high_dimension() {
        assert!(Hull::new(&[vec![0.0; 5]]).is_err());
    }
}
