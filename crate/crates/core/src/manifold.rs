//! One-dimensional invariant manifolds as polylines, and the homoclinic
//! machinery built on them.
//!
//! A saddle's stable or unstable manifold is grown by iterating a
//! fundamental domain on the eigendirection: seeds on the segment
//! `[d0, |lambda| d0]` along the eigenvector are pushed forward level by
//! level (by the inverse map for the stable side; by the squared return map
//! when the multiplier is negative), refining seed parameters until
//! consecutive gaps stay under the mesh. Discontinuities of piecewise maps
//! show up as gaps no refinement can close; such segments are marked torn
//! and excluded from arclength and crossing detection.
//!
//! Transverse crossings between a stable and an unstable polyline are found
//! with a bucketed segment sweep; the Smale order `p >= q` holds when a
//! transverse crossing between the unstable manifold of `p` and the stable
//! manifold of `q` is found within the arclength budget, a `false` only
//! meaning "not found at this budget".

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::smooth::{PeriodicOrbitRecord, SmoothSystem, MULTIPLIER_BAND};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ManifoldSide {
    Stable,
    Unstable,
}

/// Tunables of manifold growth.
#[derive(Debug, Clone, Copy)]
pub struct GrowthParams {
    /// Upper bound on consecutive polyline gaps.
    pub mesh: f64,
    /// Offset of the first seed from the anchor along the eigendirection.
    pub initial_offset: f64,
    /// Coordinates beyond this radius stop the branch and flag the boundary.
    pub escape_radius: f64,
    /// Cap on fundamental-domain iterations per branch.
    pub max_levels: usize,
    /// Cap on bisections per gap; a gap still above mesh after this many is torn.
    pub max_refine_depth: usize,
}

impl Default for GrowthParams {
    fn default() -> Self {
        GrowthParams {
            mesh: 1e-3,
            initial_offset: 1e-7,
            escape_radius: 1e6,
            max_levels: 400,
            max_refine_depth: 48,
        }
    }
}

/// An ordered polyline approximation of a one-dimensional invariant manifold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifoldPolyline {
    pub anchor: Vec<f64>,
    pub side: ManifoldSide,
    pub points: Vec<Vec<f64>>,
    /// Per-segment flags; a torn segment spans a discontinuity of the map
    /// and is not part of the manifold.
    pub torn: Vec<bool>,
    /// Total length of the untorn segments.
    pub arclength: f64,
    pub boundary_hit: bool,
}

impl ManifoldPolyline {
    pub fn segment_count(&self) -> usize {
        self.torn.len()
    }

    /// CSV export, one "x,y[,z]" row per point.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            let row: Vec<String> = p.iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn max_untorn_gap(&self, chart: &Chart) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.torn.len() {
            if !self.torn[i] {
                worst = worst.max(chart.distance(&self.points[i], &self.points[i + 1]));
            }
        }
        worst
    }
}

/// Right singular vector of `m - lambda I` for its smallest singular value:
/// a unit eigenvector for a simple real eigenvalue.
fn eigenvector_for(m: &DMatrix<f64>, lambda: f64) -> Result<Vec<f64>> {
    let n = m.nrows();
    let shifted = m - DMatrix::<f64>::identity(n, n) * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::invalid("eigenvector extraction failed"))?;
    let row = v_t.row(n - 1);
    Ok(row.iter().copied().collect())
}

/// Pick the strong one-dimensional direction on the requested side: the
/// largest-modulus real multiplier above 1 for the unstable side, the
/// smallest below 1 for the stable side.
fn strong_direction(
    sys: &SmoothSystem,
    orbit: &PeriodicOrbitRecord,
    side: ManifoldSide,
) -> Result<(f64, Vec<f64>)> {
    let mut lambda: Option<f64> = None;
    for m in &orbit.multipliers {
        if m.im.abs() > 1e-9 * (1.0 + m.re.abs()) {
            continue;
        }
        let r = m.re;
        match side {
            ManifoldSide::Unstable if r.abs() > 1.0 + MULTIPLIER_BAND => {
                if lambda.map_or(true, |l| r.abs() > l.abs()) {
                    lambda = Some(r);
                }
            }
            ManifoldSide::Stable if r.abs() < 1.0 - MULTIPLIER_BAND && r.abs() > 0.0 => {
                if lambda.map_or(true, |l| r.abs() < l.abs()) {
                    lambda = Some(r);
                }
            }
            _ => {}
        }
    }
    let lambda = lambda.ok_or_else(|| {
        Error::invalid("orbit has no one-dimensional real direction on the requested side")
    })?;
    let product = orbit.jacobian_product(sys, 0, orbit.period);
    let v = eigenvector_for(&product, lambda)?;
    Ok((lambda, v))
}

/// One growth step: the return map along the manifold.
fn branch_step(
    sys: &SmoothSystem,
    side: ManifoldSide,
    period: usize,
    x: &[f64],
) -> Result<Vec<f64>> {
    match side {
        ManifoldSide::Unstable => Ok(sys.iterate(x, period)),
        ManifoldSide::Stable => sys.iterate_inverse(x, period),
    }
}

/// Grow one branch (fixed sign of the eigendirection). Returns points after
/// the anchor in manifold order together with per-gap torn flags (the first
/// flag belongs to the anchor-to-first-point segment).
#[allow(clippy::too_many_arguments)]
fn grow_branch(
    sys: &SmoothSystem,
    anchor: &[f64],
    dir: &[f64],
    side: ManifoldSide,
    period: usize,
    steps_per_level: usize,
    lambda_eff: f64,
    target_arclength: f64,
    params: &GrowthParams,
) -> Result<(Vec<Vec<f64>>, Vec<bool>, f64, bool)> {
    let chart = sys.chart().clone();
    let d0 = params.initial_offset;
    let seed = |t: f64| -> Vec<f64> {
        chart.wrap(
            &anchor
                .iter()
                .zip(dir)
                .map(|(a, v)| a + t * v)
                .collect::<Vec<f64>>(),
        )
    };
    let advance = |x: &[f64]| -> Result<Vec<f64>> {
        let mut y = x.to_vec();
        for _ in 0..steps_per_level {
            y = branch_step(sys, side, period, &y)?;
        }
        Ok(y)
    };
    // point at level k for seed parameter t
    let lift = |t: f64, k: usize| -> Result<Vec<f64>> {
        let mut y = seed(t);
        for _ in 0..k {
            y = advance(&y)?;
        }
        Ok(y)
    };

    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut torn: Vec<bool> = Vec::new();
    let mut arclength = 0.0;
    let mut boundary_hit = false;

    // initial fundamental domain, geometrically spaced
    let k0 = 16usize;
    let mut level: Vec<(f64, Vec<f64>)> = (0..=k0)
        .map(|i| {
            let t = d0 * lambda_eff.powf(i as f64 / k0 as f64);
            (t, seed(t))
        })
        .collect();
    let mut last_point = anchor.to_vec();

    'levels: for k in 0..params.max_levels {
        // refine this level until gaps are under mesh or torn
        let mut i = 0usize;
        let mut depth_at: Vec<usize> = vec![0; level.len()];
        while i + 1 < level.len() {
            let gap = chart.distance(&level[i].1, &level[i + 1].1);
            let depth = depth_at[i].max(depth_at[i + 1]);
            if gap > params.mesh && depth < params.max_refine_depth {
                let tm = (level[i].0 * level[i + 1].0).sqrt();
                let pm = lift(tm, k)?;
                level.insert(i + 1, (tm, pm));
                depth_at.insert(i + 1, depth + 1);
            } else {
                i += 1;
            }
        }
        // append the level to the polyline
        for (idx, (_, p)) in level.iter().enumerate() {
            let gap = chart.distance(&last_point, p);
            let is_torn = gap > params.mesh * (1.0 + 1e-9)
                && !(idx == 0 && gap <= params.mesh * (1.0 + 1e-9));
            points.push(p.clone());
            torn.push(is_torn);
            if !is_torn {
                arclength += gap;
            }
            last_point = p.clone();
            if p.iter().any(|c| c.abs() > params.escape_radius) {
                boundary_hit = true;
                break 'levels;
            }
            if arclength >= target_arclength {
                break 'levels;
            }
        }
        // push the level forward
        let mut next = Vec::with_capacity(level.len());
        for (t, p) in &level {
            next.push((*t, advance(p)?));
        }
        level = next;
    }
    Ok((points, torn, arclength, boundary_hit))
}

/// Grow the stable or unstable manifold polyline of a saddle orbit at its
/// anchor point. Both half-branches are grown to `target_arclength` each and
/// joined through the anchor; the stable side needs the inverse map.
pub fn grow_manifold(
    sys: &SmoothSystem,
    orbit: &PeriodicOrbitRecord,
    side: ManifoldSide,
    target_arclength: f64,
    params: &GrowthParams,
) -> Result<ManifoldPolyline> {
    if side == ManifoldSide::Stable && !sys.has_inverse() {
        return Err(Error::MissingInverse);
    }
    let (lambda, v) = strong_direction(sys, orbit, side)?;
    // growth-map multiplier: the inverse map inverts the modulus
    let growth = match side {
        ManifoldSide::Unstable => lambda,
        ManifoldSide::Stable => 1.0 / lambda,
    };
    // orientation-reversing direction: iterate the doubled return map so
    // each branch is invariant
    let (steps_per_level, lambda_eff) = if growth > 0.0 {
        (1usize, growth)
    } else {
        (2usize, growth * growth)
    };
    let anchor = &orbit.points[0];

    let minus_dir: Vec<f64> = v.iter().map(|c| -c).collect();
    let (plus_pts, plus_torn, plus_len, plus_hit) = grow_branch(
        sys,
        anchor,
        &v,
        side,
        orbit.period,
        steps_per_level,
        lambda_eff,
        target_arclength,
        params,
    )?;
    let (minus_pts, minus_torn, minus_len, minus_hit) = grow_branch(
        sys,
        anchor,
        &minus_dir,
        side,
        orbit.period,
        steps_per_level,
        lambda_eff,
        target_arclength,
        params,
    )?;

    // minus branch reversed, then anchor, then plus branch
    let mut points: Vec<Vec<f64>> = minus_pts.iter().rev().cloned().collect();
    let mut torn: Vec<bool> = minus_torn.iter().rev().copied().collect();
    points.push(anchor.clone());
    points.extend(plus_pts);
    torn.extend(plus_torn);
    Ok(ManifoldPolyline {
        anchor: anchor.clone(),
        side,
        points,
        torn,
        arclength: plus_len + minus_len,
        boundary_hit: plus_hit || minus_hit,
    })
}

/// A crossing between a stable and an unstable polyline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossingRecord {
    pub point: Vec<f64>,
    /// Acute angle between the two polyline segments at the crossing.
    pub angle: f64,
    pub transverse: bool,
    pub unstable_segment: usize,
    pub stable_segment: usize,
}

/// Tunables of crossing detection.
#[derive(Debug, Clone, Copy)]
pub struct CrossingParams {
    /// Crossings at angles below this are reported tangential.
    pub angle_tol: f64,
    /// Crossings this close to an excluded point (the periodic orbits) are dropped.
    pub exclude_radius: f64,
    /// Crossings this close to an already reported one are merged.
    pub dedup_radius: f64,
}

impl Default for CrossingParams {
    fn default() -> Self {
        CrossingParams {
            angle_tol: 1e-3,
            exclude_radius: 1e-7,
            dedup_radius: 1e-7,
        }
    }
}

/// Unwrapped 2-d segment of a polyline.
struct Seg {
    index: usize,
    a: [f64; 2],
    b: [f64; 2],
}

fn polyline_segments(chart: &Chart, poly: &ManifoldPolyline) -> Vec<Seg> {
    let mut out = Vec::new();
    for i in 0..poly.segment_count() {
        if poly.torn[i] {
            continue;
        }
        let a = &poly.points[i];
        let b = chart.nearest_representative(a, &poly.points[i + 1]);
        out.push(Seg {
            index: i,
            a: [a[0], a[1]],
            b: [b[0], b[1]],
        });
    }
    out
}

fn seg_intersection(p: &Seg, q: &Seg) -> Option<([f64; 2], f64)> {
    let u = [p.b[0] - p.a[0], p.b[1] - p.a[1]];
    let w = [q.b[0] - q.a[0], q.b[1] - q.a[1]];
    let denom = u[0] * w[1] - u[1] * w[0];
    let lens = (u[0] * u[0] + u[1] * u[1]).sqrt() * (w[0] * w[0] + w[1] * w[1]).sqrt();
    if lens == 0.0 || denom.abs() < 1e-14 * lens {
        return None;
    }
    let d = [q.a[0] - p.a[0], q.a[1] - p.a[1]];
    let s = (d[0] * w[1] - d[1] * w[0]) / denom;
    let t = (d[0] * u[1] - d[1] * u[0]) / denom;
    if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&t) {
        return None;
    }
    let point = [p.a[0] + s * u[0], p.a[1] + s * u[1]];
    let dot = u[0] * w[0] + u[1] * w[1];
    let angle = denom.abs().atan2(dot.abs());
    Some((point, angle))
}

/// All crossings between an unstable and a stable polyline on a 2-d chart,
/// bucketed segment sweep, results sorted lexicographically by position.
pub fn transverse_crossings(
    chart: &Chart,
    unstable: &ManifoldPolyline,
    stable: &ManifoldPolyline,
    exclude: &[Vec<f64>],
    params: &CrossingParams,
) -> Result<Vec<CrossingRecord>> {
    if chart.dim() != 2 {
        return Err(Error::invalid("crossing search requires a 2-d chart"));
    }
    let useg = polyline_segments(chart, unstable);
    let sseg = polyline_segments(chart, stable);
    if useg.is_empty() || sseg.is_empty() {
        return Ok(Vec::new());
    }

    // bucket unstable segments by bounding box on a uniform grid
    let mut cell = 1e-12f64;
    for s in useg.iter().chain(sseg.iter()) {
        let len = ((s.b[0] - s.a[0]).powi(2) + (s.b[1] - s.a[1]).powi(2)).sqrt();
        cell = cell.max(len);
    }
    use std::collections::HashMap;
    let key = |x: f64, y: f64| -> (i64, i64) {
        ((x / cell).floor() as i64, (y / cell).floor() as i64)
    };
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, s) in useg.iter().enumerate() {
        let (x0, x1) = (s.a[0].min(s.b[0]), s.a[0].max(s.b[0]));
        let (y0, y1) = (s.a[1].min(s.b[1]), s.a[1].max(s.b[1]));
        let (kx0, ky0) = key(x0, y0);
        let (kx1, ky1) = key(x1, y1);
        for kx in kx0..=kx1 {
            for ky in ky0..=ky1 {
                buckets.entry((kx, ky)).or_default().push(i);
            }
        }
    }

    let wrapped = matches!(chart, Chart::Periodic { .. });
    let mut found: Vec<CrossingRecord> = Vec::new();
    let mut candidates: Vec<usize> = Vec::new();
    for q in &sseg {
        // on periodic charts translate the stable segment near each unstable
        // candidate; collect candidates from the bucket neighborhood
        candidates.clear();
        let (x0, x1) = (q.a[0].min(q.b[0]), q.a[0].max(q.b[0]));
        let (y0, y1) = (q.a[1].min(q.b[1]), q.a[1].max(q.b[1]));
        let (kx0, ky0) = key(x0 - cell, y0 - cell);
        let (kx1, ky1) = key(x1 + cell, y1 + cell);
        for kx in kx0..=kx1 {
            for ky in ky0..=ky1 {
                if let Some(b) = buckets.get(&(kx, ky)) {
                    candidates.extend_from_slice(b);
                }
            }
        }
        candidates.sort_unstable();
        candidates.dedup();
        for &ui in &candidates {
            let p = &useg[ui];
            let q_local;
            let q_ref = if wrapped {
                let mid_p = [(p.a[0] + p.b[0]) / 2.0, (p.a[1] + p.b[1]) / 2.0];
                let mid_q = [(q.a[0] + q.b[0]) / 2.0, (q.a[1] + q.b[1]) / 2.0];
                let rep = chart.nearest_representative(&mid_p, &mid_q);
                let shift = [rep[0] - mid_q[0], rep[1] - mid_q[1]];
                q_local = Seg {
                    index: q.index,
                    a: [q.a[0] + shift[0], q.a[1] + shift[1]],
                    b: [q.b[0] + shift[0], q.b[1] + shift[1]],
                };
                &q_local
            } else {
                q
            };
            if let Some((point, angle)) = seg_intersection(p, q_ref) {
                let pt = chart.wrap(&[point[0], point[1]]);
                if exclude
                    .iter()
                    .any(|e| chart.distance(&pt, e) < params.exclude_radius)
                {
                    continue;
                }
                found.push(CrossingRecord {
                    point: pt,
                    angle,
                    transverse: angle > params.angle_tol,
                    unstable_segment: p.index,
                    stable_segment: q.index,
                });
            }
        }
    }

    // deterministic order, then merge duplicates from shared segment endpoints
    found.sort_by(|a, b| {
        a.point
            .partial_cmp(&b.point)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut merged: Vec<CrossingRecord> = Vec::new();
    for c in found {
        if merged
            .iter()
            .all(|m| chart.distance(&m.point, &c.point) > params.dedup_radius)
        {
            merged.push(c);
        }
    }
    Ok(merged)
}

/// Grow both manifolds of a saddle orbit and report their crossings, the
/// periodic points themselves excluded.
pub fn find_transverse_homoclinic(
    sys: &SmoothSystem,
    orbit: &PeriodicOrbitRecord,
    arclength_budget: f64,
    growth: &GrowthParams,
    crossing: &CrossingParams,
) -> Result<Vec<CrossingRecord>> {
    let unstable = grow_manifold(sys, orbit, ManifoldSide::Unstable, arclength_budget, growth)?;
    let stable = grow_manifold(sys, orbit, ManifoldSide::Stable, arclength_budget, growth)?;
    transverse_crossings(sys.chart(), &unstable, &stable, &orbit.points, crossing)
}

/// Smale's order: `p >= q` iff the unstable manifold of `p` transversally
/// meets the stable manifold of `q` within the budget.
pub fn smale_leq(
    sys: &SmoothSystem,
    p: &PeriodicOrbitRecord,
    q: &PeriodicOrbitRecord,
    arclength_budget: f64,
    growth: &GrowthParams,
    crossing: &CrossingParams,
) -> Result<bool> {
    let unstable = grow_manifold(sys, p, ManifoldSide::Unstable, arclength_budget, growth)?;
    let stable = grow_manifold(sys, q, ManifoldSide::Stable, arclength_budget, growth)?;
    let mut exclude = p.points.clone();
    exclude.extend(q.points.iter().cloned());
    let crossings = transverse_crossings(sys.chart(), &unstable, &stable, &exclude, crossing)?;
    Ok(crossings.iter().any(|c| c.transverse))
}

/// Two saddles are homoclinically related when each one's unstable manifold
/// transversally meets the other's stable manifold.
pub fn homoclinically_related(
    sys: &SmoothSystem,
    p: &PeriodicOrbitRecord,
    q: &PeriodicOrbitRecord,
    arclength_budget: f64,
    growth: &GrowthParams,
    crossing: &CrossingParams,
) -> Result<bool> {
    Ok(smale_leq(sys, p, q, arclength_budget, growth, crossing)?
        && smale_leq(sys, q, p, arclength_budget, growth, crossing)?)
}

/// A window restricting orbits of homoclinic points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Window {
    Box { min: Vec<f64>, max: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl Window {
    pub fn contains(&self, chart: &Chart, p: &[f64]) -> bool {
        match self {
            Window::Box { min, max } => p
                .iter()
                .zip(min.iter().zip(max))
                .all(|(x, (lo, hi))| x >= lo && x <= hi),
            Window::Ball { center, radius } => chart.distance(p, center) <= *radius,
        }
    }
}

/// Finite approximation of the (relative) homoclinic class of a saddle:
/// the transverse crossing points found within the budget, optionally kept
/// only when `window_iters` forward and backward iterates stay inside the
/// window.
pub fn homoclinic_class_points(
    sys: &SmoothSystem,
    orbit: &PeriodicOrbitRecord,
    arclength_budget: f64,
    window: Option<&Window>,
    window_iters: usize,
    growth: &GrowthParams,
    crossing: &CrossingParams,
) -> Result<Vec<Vec<f64>>> {
    let crossings = find_transverse_homoclinic(sys, orbit, arclength_budget, growth, crossing)?;
    let mut out = Vec::new();
    'next: for c in crossings.into_iter().filter(|c| c.transverse) {
        if let Some(w) = window {
            let mut fwd = c.point.clone();
            let mut bwd = c.point.clone();
            if !w.contains(sys.chart(), &c.point) {
                continue;
            }
            for _ in 0..window_iters {
                fwd = sys.evaluate(&fwd);
                bwd = sys.inverse(&bwd)?;
                if !w.contains(sys.chart(), &fwd) || !w.contains(sys.chart(), &bwd) {
                    continue 'next;
                }
            }
        }
        out.push(c.point);
    }
    Ok(out)
}

pub fn crossings_to_json(crossings: &[CrossingRecord]) -> Result<String> {
    Ok(serde_json::to_string_pretty(crossings)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smooth::find_periodic_orbit;

    fn linear_saddle() -> SmoothSystem {
        SmoothSystem::new(
            Chart::Euclidean { dim: 2 },
            |x| vec![2.0 * x[0], 0.5 * x[1]],
            |_| DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]),
        )
        .with_inverse(|x| vec![0.5 * x[0], 2.0 * x[1]])
    }

    #[test]
    fn linear_saddle_unstable_manifold_is_axis() {
        let sys = linear_saddle();
        let orbit = find_periodic_orbit(&sys, 1, &[0.0, 0.0]).unwrap();
        let poly = grow_manifold(
            &sys,
            &orbit,
            ManifoldSide::Unstable,
            5.0,
            &GrowthParams::default(),
        )
        .unwrap();
        assert!(poly.arclength >= 5.0);
        for p in &poly.points {
            assert!(p[1].abs() < 1e-12);
        }
        assert!(poly.max_untorn_gap(sys.chart()) <= 1e-3 * (1.0 + 1e-9));
    }

    #[test]
    fn linear_saddle_stable_needs_inverse() {
        let sys = SmoothSystem::new(
            Chart::Euclidean { dim: 2 },
            |x| vec![2.0 * x[0], 0.5 * x[1]],
            |_| DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]),
        );
        let orbit = find_periodic_orbit(&sys, 1, &[0.0, 0.0]).unwrap();
        let err = grow_manifold(
            &sys,
            &orbit,
            ManifoldSide::Stable,
            1.0,
            &GrowthParams::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::MissingInverse));
    }

    #[test]
    fn linear_saddle_has_no_homoclinic_points() {
        let sys = linear_saddle();
        let orbit = find_periodic_orbit(&sys, 1, &[0.0, 0.0]).unwrap();
        let crossings = find_transverse_homoclinic(
            &sys,
            &orbit,
            8.0,
            &GrowthParams::default(),
            &CrossingParams::default(),
        )
        .unwrap();
        assert!(crossings.is_empty());
        assert!(!smale_leq(
            &sys,
            &orbit,
            &orbit,
            8.0,
            &GrowthParams::default(),
            &CrossingParams::default()
        )
        .unwrap());
    }

    #[test]
    fn cat_map_unstable_direction_matches_eigenvector() {
        let sys = SmoothSystem::new(
            Chart::unit_torus(2),
            |x| vec![2.0 * x[0] + x[1], x[0] + x[1]],
            |_| DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]),
        )
        .with_inverse(|x| vec![x[0] - x[1], -x[0] + 2.0 * x[1]]);
        let orbit = find_periodic_orbit(&sys, 1, &[0.0, 0.0]).unwrap();
        let poly = grow_manifold(
            &sys,
            &orbit,
            ManifoldSide::Unstable,
            2.0,
            &GrowthParams::default(),
        )
        .unwrap();
        let lu = (3.0 + 5.0f64.sqrt()) / 2.0;
        let ev = {
            let v = [1.0, lu - 2.0];
            let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
            [v[0] / n, v[1] / n]
        };
        let chart = sys.chart();
        for i in 0..poly.segment_count() {
            if poly.torn[i] {
                continue;
            }
            let b = chart.nearest_representative(&poly.points[i], &poly.points[i + 1]);
            let d = [b[0] - poly.points[i][0], b[1] - poly.points[i][1]];
            let n = (d[0] * d[0] + d[1] * d[1]).sqrt();
            if n == 0.0 {
                continue;
            }
            let cross = (d[0] * ev[1] - d[1] * ev[0]).abs() / n;
            assert!(cross < 1e-8, "direction deviates by {}", cross);
        }
    }

    #[test]
    fn crossing_of_synthetic_polylines() {
        // a vertical and a horizontal polyline crossing at (0.5, 0.5)
        let chart = Chart::Euclidean { dim: 2 };
        let vertical = ManifoldPolyline {
            anchor: vec![0.5, 0.0],
            side: ManifoldSide::Unstable,
            points: vec![vec![0.5, 0.0], vec![0.5, 1.0]],
            torn: vec![false],
            arclength: 1.0,
            boundary_hit: false,
        };
        let horizontal = ManifoldPolyline {
            anchor: vec![0.0, 0.5],
            side: ManifoldSide::Stable,
            points: vec![vec![0.0, 0.5], vec![1.0, 0.5]],
            torn: vec![false],
            arclength: 1.0,
            boundary_hit: false,
        };
        let found = transverse_crossings(
            &chart,
            &vertical,
            &horizontal,
            &[],
            &CrossingParams::default(),
        )
        .unwrap();
        assert_eq!(found.len(), 1);
        assert!((found[0].point[0] - 0.5).abs() < 1e-12);
        assert!((found[0].point[1] - 0.5).abs() < 1e-12);
        assert!((found[0].angle - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!(found[0].transverse);
    }

    #[test]
    fn torn_segments_are_ignored() {
        let chart = Chart::Euclidean { dim: 2 };
        let vertical = ManifoldPolyline {
            anchor: vec![0.5, 0.0],
            side: ManifoldSide::Unstable,
            points: vec![vec![0.5, 0.0], vec![0.5, 1.0]],
            torn: vec![true],
            arclength: 0.0,
            boundary_hit: false,
        };
        let horizontal = ManifoldPolyline {
            anchor: vec![0.0, 0.5],
            side: ManifoldSide::Stable,
            points: vec![vec![0.0, 0.5], vec![1.0, 0.5]],
            torn: vec![false],
            arclength: 1.0,
            boundary_hit: false,
        };
        let found = transverse_crossings(
            &chart,
            &vertical,
            &horizontal,
            &[],
            &CrossingParams::default(),
        )
        .unwrap();
        assert!(found.is_empty());
    }

    #[test]
    fn excluded_points_remove_crossings() {
        let chart = Chart::Euclidean { dim: 2 };
        let vertical = ManifoldPolyline {
            anchor: vec![0.5, 0.0],
            side: ManifoldSide::Unstable,
            points: vec![vec![0.5, 0.0], vec![0.5, 1.0]],
            torn: vec![false],
            arclength: 1.0,
            boundary_hit: false,
        };
        let horizontal = ManifoldPolyline {
            anchor: vec![0.0, 0.5],
            side: ManifoldSide::Stable,
            points: vec![vec![0.0, 0.5], vec![1.0, 0.5]],
            torn: vec![false],
            arclength: 1.0,
            boundary_hit: false,
        };
        let params = CrossingParams {
            exclude_radius: 1e-3,
            ..CrossingParams::default()
        };
        let found =
            transverse_crossings(&chart, &vertical, &horizontal, &[vec![0.5, 0.5]], &params)
                .unwrap();
        assert!(found.is_empty());
    }

    #[test]
    fn window_filters() {
        let chart = Chart::Euclidean { dim: 2 };
        let b = Window::Box {
            min: vec![0.0, 0.0],
            max: vec![1.0, 1.0],
        };
        assert!(b.contains(&chart, &[0.5, 0.5]));
        assert!(!b.contains(&chart, &[1.5, 0.5]));
        let ball = Window::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
        };
        assert!(ball.contains(&chart, &[0.5, 0.5]));
        assert!(!ball.contains(&chart, &[1.0, 1.0]));
    }
}
