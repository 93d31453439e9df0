//! Condition length of a solution path by adaptive quadrature, with the root
//! re-solved at every quadrature node.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::constants::ConstantsTable;
use crate::error::{Error, Result};
use crate::geometry::MetricMode;
use crate::newton::{alpha_certificate, refine};
use crate::path::Homotopy;
use crate::quadrature::{adaptive_simpson, QuadratureOptions};
use crate::supports::{FewnomialSystem, ToricPoint};
use crate::tracker::{integrands, path_speed, track, StepOptions};

#[derive(Clone, Copy, Debug, PartialEq)]
struct TKey(f64);

impl Eq for TKey {}

impl PartialOrd for TKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// A homotopy restricted to a subinterval of its domain.
pub struct Restricted<'a, H: ?Sized> {
    inner: &'a H,
    t_start: f64,
    t_end: f64,
}

impl<'a, H: Homotopy + ?Sized> Restricted<'a, H> {
    pub fn new(inner: &'a H, t_start: f64, t_end: f64) -> Self {
        Self { inner, t_start, t_end }
    }
}

impl<H: Homotopy + ?Sized> Homotopy for Restricted<'_, H> {
    fn t_start(&self) -> f64 {
        self.t_start
    }

    fn t_end(&self) -> f64 {
        self.t_end
    }

    fn eval(&self, t: f64) -> Result<(FewnomialSystem, Vec<Vec<Complex64>>)> {
        self.inner.eval(t)
    }
}

struct Node {
    root: ToricPoint,
    velocity: Vec<Complex64>,
}

/// Roots along one solution curve, keyed by `t`.
struct RootCache<'a, H: ?Sized> {
    path: &'a H,
    nodes: BTreeMap<TKey, Node>,
    mode: MetricMode,
    constants: &'a ConstantsTable,
}

const REFINE_ITERS: usize = 30;

impl<'a, H: Homotopy + ?Sized> RootCache<'a, H> {
    fn certify_and_store(&mut self, t: f64, x: &ToricPoint) -> Result<Option<ToricPoint>> {
        let (f, _) = self.path.eval(t)?;
        if !alpha_certificate(&f, x, self.mode, self.constants).certified {
            return Ok(None);
        }
        let refined = refine(&f, x, REFINE_ITERS, self.mode)?;
        let root = refined.points.last().expect("refine keeps the start").clone();
        let cert = alpha_certificate(&f, &root, self.mode, self.constants);
        if !cert.certified {
            return Err(Error::CertificationLost { t, alpha_half: cert.alpha_half });
        }
        let velocity = path_speed(self.path, t, &root, self.mode)?.velocity;
        self.nodes.insert(TKey(t), Node { root: root.clone(), velocity });
        Ok(Some(root))
    }

    fn nearest(&self, t: f64) -> (f64, &Node) {
        let below = self.nodes.range(..TKey(t)).next_back();
        let above = self.nodes.range(TKey(t)..).next();
        let pick = match (below, above) {
            (Some(b), Some(a)) => {
                if (t - b.0 .0).abs() <= (a.0 .0 - t).abs() {
                    b
                } else {
                    a
                }
            }
            (Some(b), None) => b,
            (None, Some(a)) => a,
            (None, None) => unreachable!("cache is seeded before use"),
        };
        (pick.0 .0, pick.1)
    }

    fn root_at(&mut self, t: f64) -> Result<ToricPoint> {
        if let Some(node) = self.nodes.get(&TKey(t)) {
            return Ok(node.root.clone());
        }
        let (tn, node) = self.nearest(t);
        let dt = Complex64::new(t - tn, 0.0);
        let predicted = ToricPoint::new(node.root.coords().iter().zip(&node.velocity).map(|(z, v)| z + dt * v).collect())?;
        let start = node.root.clone();
        if let Some(root) = self.certify_and_store(t, &predicted)? {
            return Ok(root);
        }
        // Predictor left the certified region: transport by tracking.
        let sub = Restricted::new(self.path, tn, t);
        let log = track(&sub, &start, self.constants, self.mode, StepOptions::default())?;
        match self.certify_and_store(t, &log.final_point)? {
            Some(root) => Ok(root),
            None => Err(Error::CertificationLost { t, alpha_half: log.certificate.alpha_half }),
        }
    }
}

/// A solution curve of a homotopy, re-solved on demand at any `t`.
pub struct RootCurve<'a, H: ?Sized> {
    cache: RootCache<'a, H>,
}

impl<'a, H: Homotopy + ?Sized> RootCurve<'a, H> {
    /// Seeds the curve with an approximate root of `f_{t0}`, which must certify.
    pub fn new(path: &'a H, seed_root: &ToricPoint, t0: f64, mode: MetricMode, constants: &'a ConstantsTable) -> Result<Self> {
        let mut cache = RootCache { path, nodes: BTreeMap::new(), mode, constants };
        if cache.certify_and_store(t0, seed_root)?.is_none() {
            let (f, _) = path.eval(t0)?;
            let cert = alpha_certificate(&f, seed_root, mode, constants);
            return Err(Error::CertificationLost { t: t0, alpha_half: cert.alpha_half });
        }
        Ok(Self { cache })
    }

    /// Root and root velocity at `t`.
    pub fn at(&mut self, t: f64) -> Result<(ToricPoint, Vec<Complex64>)> {
        let root = self.cache.root_at(t)?;
        let velocity = self.cache.nodes[&TKey(t)].velocity.clone();
        Ok((root, velocity))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionLength {
    /// `∫ μν sqrt(‖ḟ‖² + ‖ż‖²) dt`.
    pub length: f64,
    /// `∫ μν (‖ḟ‖ + ‖ż‖) dt`, between `length` and `√2·length`.
    pub length1: f64,
    pub evaluations: usize,
    pub nodes: usize,
}

/// Condition length of the curve through `seed_root` at `t0`, over `[t0, t1]`.
pub fn condition_length<H: Homotopy + ?Sized>(
    path: &H,
    seed_root: &ToricPoint,
    t0: f64,
    t1: f64,
    mode: MetricMode,
    quadrature: QuadratureOptions,
    constants: &ConstantsTable,
) -> Result<ConditionLength> {
    if t0 == t1 {
        return Ok(ConditionLength { length: 0.0, length1: 0.0, evaluations: 0, nodes: 0 });
    }
    let mut curve = RootCurve::new(path, seed_root, t0, mode, constants)?;
    let (values, evaluations) = adaptive_simpson(
        |t| {
            let root = curve.cache.root_at(t)?;
            integrands(path, t, &root, mode)
        },
        t0,
        t1,
        quadrature,
    )?;
    Ok(ConditionLength {
        length: values[0].abs(),
        length1: values[1].abs(),
        evaluations,
        nodes: curve.cache.nodes.len(),
    })
}
