//! Central cone fields and the twisted-return geometry.
//!
//! `p` is below `q` when a short positively oriented curve tangent to the
//! central cone joins the local strong unstable manifold of `p` to the local
//! strong stable manifold of `q`; above is the negatively oriented case, and
//! a zero-length connecting curve counts as below (the non-strict
//! convention). The curve is produced by a holonomy construction: straight
//! leaves along the extended central direction, both manifolds projected to
//! the transversal hyperplane, and the connecting sub-leaf segment read off
//! at a projected crossing. Two points are in a twisted position when each
//! is below the other or each is above the other, which does not depend on
//! the chosen leaf orientation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::smooth::{PeriodicOrbitRecord, SmoothSystem};

/// A central cone field around a sampled direction field: `v` lies in the
/// cone at `x` iff `|v^c| > (1 - chi) |v|` with `v^c` the orthogonal
/// projection of `v` on the direction at `x`.
#[derive(Debug, Clone)]
pub struct ConeField {
    pub chi: f64,
    /// Sample points carrying the extended central direction.
    pub points: Vec<Vec<f64>>,
    /// Unit central directions, one per sample point.
    pub directions: Vec<Vec<f64>>,
    /// Radius of the orientable balls.
    pub r0: f64,
    /// Length bound on connecting curves.
    pub curve_length_bound: f64,
}

impl ConeField {
    pub fn new(
        chi: f64,
        points: Vec<Vec<f64>>,
        directions: Vec<Vec<f64>>,
        r0: f64,
        curve_length_bound: f64,
    ) -> Result<Self> {
        if !(chi > 0.0 && chi < 1.0) {
            return Err(Error::invalid("chi must lie in (0,1)"));
        }
        if !(r0 > 0.0) || !(curve_length_bound > 0.0) {
            return Err(Error::invalid("r0 and L must be positive"));
        }
        if points.is_empty() || points.len() != directions.len() {
            return Err(Error::invalid(
                "cone field needs one direction per sample point",
            ));
        }
        Ok(ConeField {
            chi,
            points,
            directions,
            r0,
            curve_length_bound,
        })
    }

    /// Unit central direction at the sample point nearest to `x`.
    pub fn direction_at(&self, chart: &Chart, x: &[f64]) -> Vec<f64> {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = chart.distance(x, p);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        self.directions[best].clone()
    }
}

/// Strict cone membership test `|v^c| > (1 - chi) |v|`.
pub fn in_cone(cone: &ConeField, chart: &Chart, x: &[f64], v: &[f64]) -> Result<bool> {
    let norm2: f64 = v.iter().map(|c| c * c).sum();
    if norm2 == 0.0 {
        return Err(Error::invalid("cone membership is undefined for v = 0"));
    }
    let u = cone.direction_at(chart, x);
    let inner: f64 = v.iter().zip(&u).map(|(a, b)| a * b).sum();
    Ok(inner.abs() > (1.0 - cone.chi) * norm2.sqrt())
}

/// Orientation of the leaves of the holonomy foliation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Positive,
    Negative,
}

impl Orientation {
    pub fn flipped(self) -> Self {
        match self {
            Orientation::Positive => Orientation::Negative,
            Orientation::Negative => Orientation::Positive,
        }
    }

    fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }
}

/// Witness curve of a position verdict: the connecting sub-leaf segment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessCurve {
    pub from: Vec<f64>,
    pub to: Vec<f64>,
    pub length: f64,
}

/// Relative position of two points through the holonomy construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum PositionVerdict {
    Below { witness: WitnessCurve },
    Above { witness: WitnessCurve },
    Both { below: WitnessCurve, above: WitnessCurve },
    Incomparable,
}

impl PositionVerdict {
    pub fn is_below(&self) -> bool {
        matches!(self, PositionVerdict::Below { .. } | PositionVerdict::Both { .. })
    }

    pub fn is_above(&self) -> bool {
        matches!(self, PositionVerdict::Above { .. } | PositionVerdict::Both { .. })
    }

    pub fn is_incomparable(&self) -> bool {
        matches!(self, PositionVerdict::Incomparable)
    }
}

/// A point with its local strong manifolds, the data a position query needs.
#[derive(Debug, Clone)]
pub struct PointWithManifolds {
    pub point: Vec<f64>,
    pub w_uu: Vec<Vec<f64>>,
    pub w_ss: Vec<Vec<f64>>,
}

const LEAF_TOL: f64 = 1e-9;

/// Projection split along a leaf direction: hyperplane component and height.
fn split(origin: &[f64], u: &[f64], w: &[f64]) -> (Vec<f64>, f64) {
    let rel: Vec<f64> = w.iter().zip(origin).map(|(a, b)| a - b).collect();
    let h: f64 = rel.iter().zip(u).map(|(a, b)| a * b).sum();
    let proj: Vec<f64> = rel.iter().zip(u).map(|(a, b)| a - h * b).collect();
    (proj, h)
}

/// Closest points of two segments in the hyperplane, returning parameters
/// and the distance.
fn segment_closest(
    a0: &[f64],
    a1: &[f64],
    b0: &[f64],
    b1: &[f64],
) -> (f64, f64, f64) {
    let dim = a0.len();
    let u: Vec<f64> = (0..dim).map(|i| a1[i] - a0[i]).collect();
    let v: Vec<f64> = (0..dim).map(|i| b1[i] - b0[i]).collect();
    let w: Vec<f64> = (0..dim).map(|i| a0[i] - b0[i]).collect();
    let dot = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(a, b)| a * b).sum() };
    let (uu, vv, uv, uw, vw) = (dot(&u, &u), dot(&v, &v), dot(&u, &v), dot(&u, &w), dot(&v, &w));
    let denom = uu * vv - uv * uv;
    let (mut s, mut t);
    if denom > 1e-14 * uu.max(vv).max(1e-300) {
        s = (uv * vw - vv * uw) / denom;
        t = (uu * vw - uv * uw) / denom;
    } else {
        s = 0.0;
        t = if vv > 0.0 { vw / vv } else { 0.0 };
    }
    s = s.clamp(0.0, 1.0);
    t = t.clamp(0.0, 1.0);
    // one round of coordinate refinement after clamping
    if uu > 0.0 {
        s = ((uv * t - uw) / uu).clamp(0.0, 1.0);
    }
    if vv > 0.0 {
        t = ((uv * s + vw) / vv).clamp(0.0, 1.0);
    }
    let mut d2 = 0.0;
    for i in 0..dim {
        let diff = (a0[i] + s * u[i]) - (b0[i] + t * v[i]);
        d2 += diff * diff;
    }
    (s, t, d2.sqrt())
}

/// Height at which a polyline meets the leaf tube over hyperplane point
/// `target`, choosing the representative nearest the reference height. A
/// segment parallel to the leaf projects to a point and offers its whole
/// height interval.
fn leaf_height_near(
    proj: &[(Vec<f64>, f64)],
    target: &[f64],
    tol: f64,
    reference: f64,
) -> Option<f64> {
    let dim = target.len();
    let mut best: Option<f64> = None;
    let mut consider = |h: f64, best: &mut Option<f64>| {
        if best.map_or(true, |b: f64| (h - reference).abs() < (b - reference).abs()) {
            *best = Some(h);
        }
    };
    let offer = |p0: &[f64], h0: f64, p1: &[f64], h1: f64, best: &mut Option<f64>,
                 consider: &mut dyn FnMut(f64, &mut Option<f64>)| {
        let d: Vec<f64> = (0..dim).map(|i| p1[i] - p0[i]).collect();
        let rel: Vec<f64> = (0..dim).map(|i| p0[i] - target[i]).collect();
        let dd: f64 = d.iter().map(|c| c * c).sum();
        let rd: f64 = rel.iter().zip(&d).map(|(a, b)| a * b).sum();
        let rr: f64 = rel.iter().map(|c| c * c).sum();
        // parameter interval with |p0 + s d - target| <= tol
        let (s0, s1) = if dd <= tol * tol * 1e-12 + f64::MIN_POSITIVE {
            if rr.sqrt() <= tol {
                (0.0, 1.0)
            } else {
                return;
            }
        } else {
            let disc = rd * rd - dd * (rr - tol * tol);
            if disc < 0.0 {
                return;
            }
            let sq = disc.sqrt();
            (((-rd - sq) / dd).max(0.0), ((-rd + sq) / dd).min(1.0))
        };
        if s0 > s1 {
            return;
        }
        let ha = h0 + s0 * (h1 - h0);
        let hb = h0 + s1 * (h1 - h0);
        consider(reference.clamp(ha.min(hb), ha.max(hb)), best);
    };
    if proj.len() == 1 {
        let (p0, h0) = &proj[0];
        offer(p0, *h0, p0, *h0, &mut best, &mut consider);
        return best;
    }
    for w in proj.windows(2) {
        let (p0, h0) = &w[0];
        let (p1, h1) = &w[1];
        offer(p0, *h0, p1, *h1, &mut best, &mut consider);
    }
    best
}

/// Relative position of `p` with respect to `q` through the straight-leaf
/// holonomy along the extended central direction.
///
/// Both manifolds are projected along the leaf direction; at each projected
/// crossing the connecting segment from the unstable manifold of `p` to the
/// stable manifold of `q` is read off, kept when its length is within the
/// cone field's bound and its direction lies in the cone. A zero-length
/// connecting curve counts as below. Crossings of both signs yield `Both`.
pub fn position(
    sys: &SmoothSystem,
    cone: &ConeField,
    p: &[f64],
    q: &[f64],
    w_uu_p: &[Vec<f64>],
    w_ss_q: &[Vec<f64>],
    orientation: Orientation,
) -> Result<PositionVerdict> {
    let chart = sys.chart();
    if chart.distance(p, q) > cone.r0 {
        return Ok(PositionVerdict::Incomparable);
    }
    if w_uu_p.is_empty() || w_ss_q.is_empty() {
        return Err(Error::invalid("position needs non-empty manifold polylines"));
    }
    let mid: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a + b) / 2.0).collect();
    let mut u = cone.direction_at(chart, &mid);
    let un: f64 = u.iter().map(|c| c * c).sum::<f64>().sqrt();
    if un == 0.0 {
        return Err(Error::invalid("cone direction vanishes"));
    }
    for c in &mut u {
        *c /= un;
    }

    // local representatives around p to keep periodic charts flat
    let rep = |w: &[f64]| chart.nearest_representative(p, w);
    let uu: Vec<(Vec<f64>, f64)> = w_uu_p.iter().map(|w| split(p, &u, &rep(w))).collect();
    let ss: Vec<(Vec<f64>, f64)> = w_ss_q.iter().map(|w| split(p, &u, &rep(w))).collect();
    let h_p = 0.0;
    let (_, h_q) = split(p, &u, &rep(q));

    // projected crossings between the two polylines
    let mut below: Option<WitnessCurve> = None;
    let mut above: Option<WitnessCurve> = None;
    let single_u = uu.len() == 1;
    let single_s = ss.len() == 1;
    let u_segs = if single_u { 1 } else { uu.len() - 1 };
    let s_segs = if single_s { 1 } else { ss.len() - 1 };
    for i in 0..u_segs {
        let (a0, a1) = if single_u {
            (&uu[0].0, &uu[0].0)
        } else {
            (&uu[i].0, &uu[i + 1].0)
        };
        for j in 0..s_segs {
            let (b0, b1) = if single_s {
                (&ss[0].0, &ss[0].0)
            } else {
                (&ss[j].0, &ss[j + 1].0)
            };
            let (s, t, d) = segment_closest(a0, a1, b0, b1);
            if d > LEAF_TOL {
                continue;
            }
            // crossing locus in the hyperplane
            let dim = a0.len();
            let locus: Vec<f64> = (0..dim)
                .map(|k| {
                    let pa = a0[k] + s * (a1[k] - a0[k]);
                    let pb = b0[k] + t * (b1[k] - b0[k]);
                    (pa + pb) / 2.0
                })
                .collect();
            // representative heights nearest to the basepoints
            let hu = nearest_height(&heights_on_leaf(&uu, &locus, LEAF_TOL * 2.0), h_p);
            let hs = nearest_height(&heights_on_leaf(&ss, &locus, LEAF_TOL * 2.0), h_q);
            let (hu, hs) = match (hu, hs) {
                (Some(a), Some(b)) => (a, b),
                _ => continue,
            };
            let delta = hs - hu;
            let length = delta.abs();
            if length > cone.curve_length_bound {
                continue;
            }
            let from: Vec<f64> = (0..dim + 0)
                .map(|k| p[k] + locus[k] + hu * u[k])
                .collect();
            let to: Vec<f64> = (0..dim).map(|k| p[k] + locus[k] + hs * u[k]).collect();
            if length > 0.0 {
                // the witness runs along the leaf, still check the cone
                let dir: Vec<f64> = (0..dim).map(|k| to[k] - from[k]).collect();
                let mid_w: Vec<f64> = (0..dim).map(|k| (to[k] + from[k]) / 2.0).collect();
                if !in_cone(cone, chart, &chart.wrap(&mid_w), &dir)? {
                    continue;
                }
            }
            let witness = WitnessCurve {
                from: chart.wrap(&from),
                to: chart.wrap(&to),
                length,
            };
            let signed = delta * orientation.sign();
            if signed >= 0.0 && below.is_none() {
                below = Some(witness);
            } else if signed < 0.0 && above.is_none() {
                above = Some(witness);
            }
        }
    }

    Ok(match (below, above) {
        (Some(b), Some(a)) => PositionVerdict::Both { below: b, above: a },
        (Some(b), None) => PositionVerdict::Below { witness: b },
        (None, Some(a)) => PositionVerdict::Above { witness: a },
        (None, None) => PositionVerdict::Incomparable,
    })
}

fn nearest_height(heights: &[f64], reference: f64) -> Option<f64> {
    heights
        .iter()
        .copied()
        .min_by(|a, b| {
            (a - reference)
                .abs()
                .partial_cmp(&(b - reference).abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
}

/// `p` and `q` are in a twisted position when each is below the other or
/// each is above the other. The verdict is recomputed with the flipped leaf
/// orientation and must agree, which it does structurally since flipping
/// exchanges below and above on every witness.
pub fn twisted_position(
    sys: &SmoothSystem,
    cone: &ConeField,
    p: &PointWithManifolds,
    q: &PointWithManifolds,
) -> Result<bool> {
    let verdict = |orient: Orientation| -> Result<bool> {
        let pq = position(sys, cone, &p.point, &q.point, &p.w_uu, &q.w_ss, orient)?;
        let qp = position(sys, cone, &q.point, &p.point, &q.w_uu, &p.w_ss, orient)?;
        if pq.is_incomparable() || qp.is_incomparable() {
            return Err(Error::NotComparable);
        }
        Ok((pq.is_below() && qp.is_below()) || (pq.is_above() && qp.is_above()))
    };
    let with_positive = verdict(Orientation::Positive)?;
    let with_negative = verdict(Orientation::Negative)?;
    if with_positive != with_negative {
        return Err(Error::invalid(
            "twisted position verdict depends on the leaf orientation",
        ));
    }
    Ok(with_positive)
}

/// Report of a twisted-returns scan over an orbit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwistedReturnsReport {
    pub twisted: bool,
    /// First pair (by index order) of close returns that is not twisted.
    pub violating_pair: Option<(usize, usize)>,
    pub pairs_checked: usize,
}

/// Every pair of points on the orbit at distance below `epsilon` must be in
/// a twisted position; vacuously true when no pair is that close.
pub fn has_twisted_returns(
    sys: &SmoothSystem,
    cone: &ConeField,
    orbit: &[PointWithManifolds],
    epsilon: f64,
) -> Result<TwistedReturnsReport> {
    let chart = sys.chart();
    let mut pairs_checked = 0usize;
    for i in 0..orbit.len() {
        for j in (i + 1)..orbit.len() {
            if chart.distance(&orbit[i].point, &orbit[j].point) >= epsilon {
                continue;
            }
            pairs_checked += 1;
            if !twisted_position(sys, cone, &orbit[i], &orbit[j])? {
                return Ok(TwistedReturnsReport {
                    twisted: false,
                    violating_pair: Some((i, j)),
                    pairs_checked,
                });
            }
        }
    }
    Ok(TwistedReturnsReport {
        twisted: true,
        violating_pair: None,
        pairs_checked,
    })
}

/// The closest pair of distinct points on a periodic orbit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClosestReturn {
    /// Index of the first point on the orbit.
    pub index: usize,
    /// Return time: the partner is `index + k` modulo the period.
    pub k: usize,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub distance: f64,
}

/// Minimize `d(p, f^k(p))` over the orbit; ties broken by smallest `k`,
/// then smallest index.
pub fn closest_return_pair(chart: &Chart, orbit: &[Vec<f64>]) -> Result<ClosestReturn> {
    let tau = orbit.len();
    if tau < 2 {
        return Err(Error::PeriodTooShort);
    }
    let mut best: Option<ClosestReturn> = None;
    for k in 1..tau {
        for i in 0..tau {
            let j = (i + k) % tau;
            let d = chart.distance(&orbit[i], &orbit[j]);
            if best.as_ref().map_or(true, |b| d < b.distance) {
                best = Some(ClosestReturn {
                    index: i,
                    k,
                    p: orbit[i].clone(),
                    q: orbit[j].clone(),
                    distance: d,
                });
            }
        }
    }
    Ok(best.expect("period >= 2 yields at least one pair"))
}

/// Products along a periodic orbit of the norms of the N-step derivative
/// restricted to a one-dimensional bundle `E` (forward) and of the N-step
/// inverse derivative restricted to `F` (backward). Inverse Jacobians come
/// from the orbit itself, so no inverse map is needed.
pub fn periodic_contraction_products(
    sys: &SmoothSystem,
    orbit: &PeriodicOrbitRecord,
    e_dirs: &[Vec<f64>],
    f_dirs: &[Vec<f64>],
    n_iter: usize,
) -> Result<(f64, f64)> {
    let tau = orbit.period;
    if e_dirs.len() != tau || f_dirs.len() != tau {
        return Err(Error::invalid("one direction per orbit point required"));
    }
    let dim = sys.dim();
    let jac: Vec<DMatrix<f64>> = orbit.points.iter().map(|p| sys.jacobian(p)).collect();
    let inv_jac: Vec<DMatrix<f64>> = jac
        .iter()
        .map(|m| {
            m.clone()
                .try_inverse()
                .ok_or_else(|| Error::invalid("singular Jacobian along the orbit"))
        })
        .collect::<Result<_>>()?;

    let mut forward = 1.0;
    let mut backward = 1.0;
    for k in 1..=tau {
        let base = k % tau;
        // forward: Df^N at orbit point `base`
        let mut m = DMatrix::<f64>::identity(dim, dim);
        for s in 0..n_iter {
            m = &jac[(base + s) % tau] * m;
        }
        let e = DMatrix::from_column_slice(dim, 1, &e_dirs[base]);
        forward *= (&m * &e).norm();
        // backward: Df^{-N} at orbit point `base` walks the orbit backwards
        let mut w = DMatrix::<f64>::identity(dim, dim);
        for s in 0..n_iter {
            let idx = (base + tau - 1 - (s % tau)) % tau;
            w = &inv_jac[idx] * w;
        }
        let f = DMatrix::from_column_slice(dim, 1, &f_dirs[base]);
        backward *= (&w * &f).norm();
    }
    Ok((forward, backward))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn planar_identity() -> SmoothSystem {
        SmoothSystem::new(
            Chart::Euclidean { dim: 2 },
            |x| x.to_vec(),
            |_| DMatrix::identity(2, 2),
        )
    }

    fn vertical_cone(r0: f64, l: f64) -> ConeField {
        ConeField::new(0.5, vec![vec![0.0, 0.0]], vec![vec![0.0, 1.0]], r0, l).unwrap()
    }

    #[test]
    fn cone_membership_threshold() {
        let sys = planar_identity();
        let cone = vertical_cone(1.0, 1.0);
        let chart = sys.chart();
        assert!(in_cone(&cone, chart, &[0.0, 0.0], &[0.0, 1.0]).unwrap());
        assert!(!in_cone(&cone, chart, &[0.0, 0.0], &[1.0, 0.0]).unwrap());
        // chi = 0.5: threshold at 60 degrees from the central direction
        let just_in = [(59.999999f64).to_radians().sin(), (59.999999f64).to_radians().cos()];
        let just_out = [(60.000001f64).to_radians().sin(), (60.000001f64).to_radians().cos()];
        assert!(in_cone(&cone, chart, &[0.0, 0.0], &just_in).unwrap());
        assert!(!in_cone(&cone, chart, &[0.0, 0.0], &just_out).unwrap());
        assert!(in_cone(&cone, chart, &[0.0, 0.0], &[0.0, -3.0]).unwrap());
        assert!(in_cone(&cone, chart, &[0.0, 0.0], &[1e-9, 5.0]).unwrap());
        assert!(in_cone(&cone, chart, &[0.0, 0.0], &[0.0, 0.1]).unwrap());
        assert!(in_cone(&cone, chart, &[0.0, 0.0], &[0.0, -0.1]).unwrap());
        assert!(matches!(
            in_cone(&cone, chart, &[0.0, 0.0], &[0.0, 0.0]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn identical_points_are_below_by_convention() {
        let sys = planar_identity();
        let cone = vertical_cone(1.0, 1.0);
        let w_uu = vec![vec![0.0, -0.5], vec![0.0, 0.5]];
        let w_ss = vec![vec![-0.5, 0.0], vec![0.5, 0.0]];
        let v = position(
            &sys,
            &cone,
            &[0.0, 0.0],
            &[0.0, 0.0],
            &w_uu,
            &w_ss,
            Orientation::Positive,
        )
        .unwrap();
        match v {
            PositionVerdict::Below { witness } => assert_eq!(witness.length, 0.0),
            other => panic!("expected Below, got {:?}", other),
        }
    }

    #[test]
    fn planar_below_and_above() {
        let sys = planar_identity();
        let cone = vertical_cone(1.0, 1.0);
        // W^uu(p): vertical line x = 0; W^ss(q): horizontal line y = 0.1
        let w_uu = vec![vec![0.0, -0.5], vec![0.0, 0.5]];
        let w_ss_above = vec![vec![-0.5, 0.1], vec![0.5, 0.1]];
        let p = [0.0, 0.0];
        let q = [0.05, 0.1];
        let v = position(
            &sys,
            &cone,
            &p,
            &q,
            &w_uu,
            &w_ss_above,
            Orientation::Positive,
        )
        .unwrap();
        match v {
            PositionVerdict::Below { witness } => {
                assert!((witness.length - 0.1).abs() < 1e-9);
            }
            other => panic!("expected Below, got {:?}", other),
        }
        let w_ss_below = vec![vec![-0.5, -0.1], vec![0.5, -0.1]];
        let v = position(
            &sys,
            &cone,
            &p,
            &[0.05, -0.1],
            &w_uu,
            &w_ss_below,
            Orientation::Positive,
        )
        .unwrap();
        assert!(matches!(v, PositionVerdict::Above { .. }));
    }

    #[test]
    fn far_points_incomparable() {
        let sys = planar_identity();
        let cone = vertical_cone(0.01, 1.0);
        let w_uu = vec![vec![0.0, -0.5], vec![0.0, 0.5]];
        let w_ss = vec![vec![-0.5, 0.1], vec![0.5, 0.1]];
        let v = position(
            &sys,
            &cone,
            &[0.0, 0.0],
            &[1.0, 0.1],
            &w_uu,
            &w_ss,
            Orientation::Positive,
        )
        .unwrap();
        assert!(v.is_incomparable());
    }

    /// Synthetic twisted pair: unstable manifolds bend down, stable
    /// manifolds bend up, so each point is below the other.
    fn bent_point(x: f64, y: f64, kappa: f64) -> PointWithManifolds {
        let n = 41;
        let mut w_uu = Vec::new();
        let mut w_ss = Vec::new();
        for i in 0..n {
            let t = (i as f64 / (n - 1) as f64 - 0.5) * 0.6;
            // 3-d ambient: (xi, eta, c)
            w_uu.push(vec![x, y + t, -kappa * t * t]);
            w_ss.push(vec![x + t, y, kappa * t * t]);
        }
        PointWithManifolds {
            point: vec![x, y, 0.0],
            w_uu,
            w_ss,
        }
    }

    fn spatial_identity() -> SmoothSystem {
        SmoothSystem::new(
            Chart::Euclidean { dim: 3 },
            |x| x.to_vec(),
            |_| DMatrix::identity(3, 3),
        )
    }

    fn spatial_cone() -> ConeField {
        ConeField::new(
            0.5,
            vec![vec![0.0, 0.0, 0.0]],
            vec![vec![0.0, 0.0, 1.0]],
            1.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn twisted_pair_detected() {
        let sys = spatial_identity();
        let cone = spatial_cone();
        let p = bent_point(0.0, 0.0, 1.0);
        let q = bent_point(0.05, 0.05, 1.0);
        assert!(twisted_position(&sys, &cone, &p, &q).unwrap());
    }

    #[test]
    fn untwisted_pair_detected() {
        let sys = spatial_identity();
        let cone = spatial_cone();
        // flat manifolds at different heights: p below q but q above p
        let mut p = bent_point(0.0, 0.0, 0.0);
        let mut q = bent_point(0.05, 0.05, 0.0);
        for w in p.w_uu.iter_mut().chain(p.w_ss.iter_mut()) {
            w[2] = 0.0;
        }
        for w in q.w_uu.iter_mut().chain(q.w_ss.iter_mut()) {
            w[2] = 0.1;
        }
        q.point[2] = 0.1;
        assert!(!twisted_position(&sys, &cone, &p, &q).unwrap());
    }

    #[test]
    fn twisted_returns_vacuous_when_no_close_pair() {
        let sys = spatial_identity();
        let cone = spatial_cone();
        let orbit = vec![bent_point(0.0, 0.0, 1.0), bent_point(10.0, 10.0, 1.0)];
        let report = has_twisted_returns(&sys, &cone, &orbit, 0.5).unwrap();
        assert!(report.twisted);
        assert_eq!(report.pairs_checked, 0);
    }

    #[test]
    fn closest_return_on_rotated_polygon() {
        // 16 points under rotation by 5/16 of a turn
        let chart = Chart::Euclidean { dim: 2 };
        let orbit: Vec<Vec<f64>> = (0..16)
            .map(|i| {
                let a = std::f64::consts::TAU * 5.0 * i as f64 / 16.0;
                vec![a.cos(), a.sin()]
            })
            .collect();
        let best = closest_return_pair(&chart, &orbit).unwrap();
        let expected = 2.0 * (std::f64::consts::PI / 16.0).sin();
        assert!((best.distance - expected).abs() < 1e-12);
        // 5k = +-1 mod 16 at k in {3, 13}; tie broken toward k = 3, index 0
        assert_eq!(best.k, 3);
        assert_eq!(best.index, 0);
    }

    #[test]
    fn closest_return_needs_period_two() {
        let chart = Chart::Euclidean { dim: 2 };
        let err = closest_return_pair(&chart, &[vec![0.0, 0.0]]).unwrap_err();
        assert_eq!(err.to_string(), "period >= 2 required");
    }

    #[test]
    fn period_two_unique_pair() {
        let chart = Chart::Euclidean { dim: 2 };
        let orbit = vec![vec![0.0, 0.0], vec![1.0, 0.0]];
        let best = closest_return_pair(&chart, &orbit).unwrap();
        assert_eq!(best.distance, 1.0);
        assert_eq!((best.index, best.k), (0, 1));
    }

    #[test]
    fn contraction_products_on_linear_map() {
        let sys = SmoothSystem::new(
            Chart::Euclidean { dim: 2 },
            |x| vec![2.0 * x[0], 0.5 * x[1]],
            |_| DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]),
        );
        let orbit = crate::smooth::find_periodic_orbit(&sys, 1, &[0.0, 0.0]).unwrap();
        let (fw, bw) = periodic_contraction_products(
            &sys,
            &orbit,
            &[vec![0.0, 1.0]],
            &[vec![1.0, 0.0]],
            2,
        )
        .unwrap();
        assert!((fw - 0.25).abs() < 1e-14);
        assert!((bw - 0.25).abs() < 1e-14);
    }

    #[test]
    fn contraction_products_multiplicative_over_orbit_split() {
        // period-2 orbit of an affine toy map; products over the whole orbit
        // split exactly into per-point factors
        let sys = SmoothSystem::new(
            Chart::Euclidean { dim: 2 },
            |x| vec![1.0 - x[0], 0.5 * x[1] + x[0]],
            |_| DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 1.0, 0.5]),
        );
        let orbit = crate::smooth::find_periodic_orbit(&sys, 2, &[0.1, 0.0]).unwrap();
        assert_eq!(orbit.least_period, 2);
        let e = vec![vec![0.0, 1.0], vec![0.0, 1.0]];
        let f = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        let (fw, _) = periodic_contraction_products(&sys, &orbit, &e, &f, 1).unwrap();
        // |Df e2| = 0.5 at every point, so the product over 2 points is 0.25
        assert!((fw - 0.25).abs() < 1e-14);
    }
}
