//! Abstract central models and the trapping-strip dichotomy.
//!
//! A central model is a skew product over a sampled compact base: a
//! node-to-node base map together with a monotone nondecreasing fiber map
//! `[0,1] -> [0,+inf)` per base node, fixing the zero section. The product
//! space carries the max metric `d((x,s),(y,t)) = max(d_base(x,y), |t-s|)`,
//! so an epsilon-pseudo-orbit may use slack epsilon in the base and in the
//! fiber independently.
//!
//! The chain-unstable set of the zero section is computed by segment
//! propagation: starting from the zero section, repeatedly push each node's
//! fiber interval through its fiber map, pad by epsilon, and merge by max.
//! Because intervals through 0 stay intervals through 0, the result is a
//! strip by construction, and it is the least fixed point of the same
//! monotone update a breadth-first search over the (node x fiber-grid)
//! product transition graph computes cell by cell. The chain-stable set is
//! the same propagation run on the inverse model: base edges reversed and
//! fiber inverses in place of fiber maps.
//!
//! `dichotomy` decides between a chain-recurrent central segment and a
//! trapping strip on one of the two sides, scanning a decreasing epsilon
//! schedule down to its floor.

use serde::{Deserialize, Serialize};

use crate::chain::{strongly_connected_components, EpsilonSchedule, SampledSpace};
use crate::error::{Error, Result};

/// Skew product over a sampled base with monotone fiber maps on a uniform
/// grid of `cells + 1` points of `[0,1]`.
#[derive(Debug, Clone)]
pub struct CentralModel {
    base: SampledSpace,
    base_map: Vec<usize>,
    /// `fiber[x][j]` is the image of grid value `j/cells` under the fiber map at `x`.
    fiber: Vec<Vec<f64>>,
    /// Monotone inverse samples: `fiber_inv[x][l] = sup { t : F_x(t) <= l/cells }`.
    fiber_inv: Vec<Vec<f64>>,
    cells: usize,
}

impl CentralModel {
    /// Build and validate a model. Fiber rows must have `cells + 1` samples,
    /// start at exactly 0, be nondecreasing, and be strictly positive at the
    /// first grid cell so the map stays a local homeomorphism near the zero
    /// section.
    pub fn new(base: SampledSpace, base_map: Vec<usize>, fiber: Vec<Vec<f64>>) -> Result<Self> {
        let n = base.len();
        if base_map.len() != n || fiber.len() != n {
            return Err(Error::invalid(
                "base_map and fiber tables must have one entry per base node",
            ));
        }
        if base_map.iter().any(|&y| y >= n) {
            return Err(Error::invalid("base_map target out of range"));
        }
        let cells = match fiber.first() {
            Some(row) if row.len() >= 2 => row.len() - 1,
            _ => return Err(Error::invalid("fiber rows need at least two samples")),
        };
        for (x, row) in fiber.iter().enumerate() {
            if row.len() != cells + 1 {
                return Err(Error::invalid("fiber rows must share one grid"));
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::invalid("fiber samples must be finite and nonnegative"));
            }
            if row[0] != 0.0 {
                return Err(Error::invalid("fiber maps must fix the zero section"));
            }
            if row.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::invalid("fiber maps must be nondecreasing"));
            }
            if row[1] <= 0.0 {
                return Err(Error::invalid(format!(
                    "fiber map at node {} is degenerate at the zero section",
                    x
                )));
            }
        }
        let fiber_inv = fiber.iter().map(|row| invert_samples(row, cells)).collect();
        let model = CentralModel {
            base,
            base_map,
            fiber,
            fiber_inv,
            cells,
        };
        model.check_inverse_round_trip()?;
        Ok(model)
    }

    /// `fiber_inv(F(t)) = t` to within one grid cell, on cells where the
    /// fiber map is locally strictly increasing and the value is within
    /// reach of the inverse (images above 1 have no inverse sample).
    fn check_inverse_round_trip(&self) -> Result<()> {
        let h = 1.0 / self.cells as f64;
        for x in 0..self.node_count() {
            let row = &self.fiber[x];
            for j in 0..self.cells {
                if row[j + 1] > row[j] && row[j] <= 1.0 {
                    let t = grid_value(j, self.cells);
                    let back = self.fiber_inverse_value(x, row[j]);
                    if (back - t).abs() > h + 1e-12 {
                        return Err(Error::invalid(format!(
                            "fiber inverse at node {} misses the round trip at cell {}",
                            x, j
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn base(&self) -> &SampledSpace {
        &self.base
    }

    pub fn base_map(&self) -> &[usize] {
        &self.base_map
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn node_count(&self) -> usize {
        self.base.len()
    }

    pub fn fiber_samples(&self) -> &[Vec<f64>] {
        &self.fiber
    }

    pub fn fiber_inverse_samples(&self) -> &[Vec<f64>] {
        &self.fiber_inv
    }

    /// Fiber map at `x` evaluated at `t in [0,1]` by linear interpolation.
    pub fn fiber_value(&self, x: usize, t: f64) -> f64 {
        interpolate(&self.fiber[x], self.cells, t)
    }

    /// Inverse fiber map at `x` evaluated at `t in [0,1]`.
    pub fn fiber_inverse_value(&self, x: usize, t: f64) -> f64 {
        interpolate(&self.fiber_inv[x], self.cells, t)
    }

    /// Base-level epsilon graph: edge `x -> y` iff `d(base_map(x), y) < eps`.
    pub fn base_epsilon_adjacency(&self, epsilon: f64) -> Vec<Vec<usize>> {
        let n = self.node_count();
        let mut adj = vec![Vec::new(); n];
        for x in 0..n {
            let fx = self.base_map[x];
            for y in 0..n {
                if self.base.dist(fx, y) < epsilon {
                    adj[x].push(y);
                }
            }
        }
        adj
    }

    /// Is the base chain-transitive at slack epsilon (strongly connected
    /// epsilon graph with a cycle)?
    pub fn base_chain_transitive(&self, epsilon: f64) -> bool {
        let adj = self.base_epsilon_adjacency(epsilon);
        let comps = strongly_connected_components(&adj);
        if comps.len() != 1 {
            return false;
        }
        if self.node_count() == 1 {
            return adj[0].contains(&0);
        }
        true
    }

    /// Pointwise product transition graph on cells `(x, j)`, indexed
    /// `x * (cells + 1) + j`: edge iff the base edge exists and the fiber
    /// image is within epsilon of the target grid value (two-sided).
    pub fn pointwise_product_adjacency(&self, epsilon: f64) -> Vec<Vec<usize>> {
        let m = self.cells;
        let n = self.node_count();
        let base_adj = self.base_epsilon_adjacency(epsilon);
        let mut adj = vec![Vec::new(); n * (m + 1)];
        for x in 0..n {
            for j in 0..=m {
                let v = self.fiber[x][j];
                let node = x * (m + 1) + j;
                for &y in &base_adj[x] {
                    for l in 0..=m {
                        if (grid_value(l, m) - v).abs() < epsilon {
                            adj[node].push(y * (m + 1) + l);
                        }
                    }
                }
            }
        }
        adj
    }

    pub fn to_json(&self) -> Result<String> {
        let data = CentralModelData {
            dist_matrix: self.base.full_distance_matrix(),
            base_map: self.base_map.clone(),
            fiber: self.fiber.clone(),
        };
        Ok(serde_json::to_string_pretty(&data)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let data: CentralModelData = serde_json::from_str(json)?;
        let base = SampledSpace::from_matrix(data.dist_matrix)?;
        CentralModel::new(base, data.base_map, data.fiber)
    }
}

/// Serialized form of a central model: base distance matrix, base map and
/// fiber sample matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CentralModelData {
    pub dist_matrix: Vec<Vec<f64>>,
    pub base_map: Vec<usize>,
    pub fiber: Vec<Vec<f64>>,
}

fn grid_value(l: usize, cells: usize) -> f64 {
    l as f64 / cells as f64
}

fn interpolate(samples: &[f64], cells: usize, t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    let pos = t * cells as f64;
    let j = (pos.floor() as usize).min(cells.saturating_sub(1));
    let frac = pos - j as f64;
    samples[j] + frac * (samples[j + 1] - samples[j])
}

/// Monotone sup-inverse of a nondecreasing sample row, sampled on the grid:
/// `out[l] = sup { t in [0,1] : F(t) <= l/cells }`, capped at 1.
fn invert_samples(row: &[f64], cells: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(cells + 1);
    for l in 0..=cells {
        let s = grid_value(l, cells);
        if row[cells] <= s {
            out.push(1.0);
            continue;
        }
        // largest j with row[j] <= s; row[0] = 0 <= s always
        let mut j = 0;
        for k in (0..=cells).rev() {
            if row[k] <= s {
                j = k;
                break;
            }
        }
        let t = if row[j + 1] > row[j] {
            grid_value(j, cells) + (s - row[j]) / (row[j + 1] - row[j]) / cells as f64
        } else {
            grid_value(j, cells)
        };
        out.push(t.min(1.0));
    }
    out
}

/// Max metric on the product space.
pub fn product_distance(
    base: &SampledSpace,
    p: (usize, f64),
    q: (usize, f64),
) -> f64 {
    base.dist(p.0, q.0).max((p.1 - q.1).abs())
}

/// Interval fibers over the base: the fiber over node `x` is the segment
/// from 0 up to `top[x]` at grid resolution, `top[x] = 0` meaning the zero
/// section only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    pub top: Vec<f64>,
}

impl Strip {
    pub fn zero(nodes: usize) -> Self {
        Strip {
            top: vec![0.0; nodes],
        }
    }

    pub fn constant(nodes: usize, value: f64) -> Self {
        Strip {
            top: vec![value; nodes],
        }
    }

    pub fn max_top(&self) -> f64 {
        self.top.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_top(&self) -> f64 {
        self.top.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `self` contained in `other` fiberwise.
    pub fn contained_in(&self, other: &Strip) -> bool {
        self.top
            .iter()
            .zip(&other.top)
            .all(|(a, b)| a <= b)
    }

    /// CSV export, one "node_index,top" row per node.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node_index,top\n");
        for (i, t) in self.top.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i, t));
        }
        out
    }
}

/// Which chain set of the zero section to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FiberSide {
    Stable,
    Unstable,
}

/// Largest grid index `l` with `l/cells < v`; `v > 0` is required so the
/// index exists. Both the propagation and the test oracles use this exact
/// strict predicate on grid values.
fn highest_cell_below(v: f64, cells: usize) -> usize {
    debug_assert!(v > 0.0);
    let mut lo = 0usize;
    let mut hi = cells;
    if grid_value(cells, cells) < v {
        return cells;
    }
    // invariant: grid(lo) < v <= grid(hi)
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if grid_value(mid, cells) < v {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn propagate(
    model: &CentralModel,
    epsilon: f64,
    side: FiberSide,
) -> Result<Vec<usize>> {
    let n = model.node_count();
    let m = model.cells();
    let base_adj = model.base_epsilon_adjacency(epsilon);
    let mut tops = vec![0usize; n];
    let max_rounds = n * (m + 1) + 2;
    for _ in 0..max_rounds {
        let mut changed = false;
        for x in 0..n {
            for &y in &base_adj[x] {
                // forward: (x, t) -> (y, F_x(t) + slack)
                // inverse: (y, t) -> (x, G_x(t) + slack) along the reversed edge
                let (dst, image) = match side {
                    FiberSide::Unstable => (y, model.fiber[x][tops[x]]),
                    FiberSide::Stable => (x, model.fiber_inv[x][tops[y]]),
                };
                let cand = highest_cell_below(image + epsilon, m);
                if cand > tops[dst] {
                    tops[dst] = cand;
                    changed = true;
                }
            }
        }
        if !changed {
            return Ok(tops);
        }
    }
    Err(Error::PropagationDiverged)
}

fn tops_to_strip(tops: &[usize], cells: usize) -> Strip {
    Strip {
        top: tops.iter().map(|&l| grid_value(l, cells)).collect(),
    }
}

/// Chain-unstable set of the zero section at slack epsilon: the least fixed
/// point of the segment-propagation operator, equal cell-for-cell to the
/// forward reachable set of the zero section in the product transition graph.
pub fn pseudo_unstable_set(model: &CentralModel, epsilon: f64) -> Result<Strip> {
    if !(epsilon > 0.0) {
        return Err(Error::NonPositiveEpsilon(epsilon));
    }
    Ok(tops_to_strip(
        &propagate(model, epsilon, FiberSide::Unstable)?,
        model.cells(),
    ))
}

/// Chain-stable set of the zero section: the same propagation on the inverse
/// model (base edges reversed, fiber inverses in place of fiber maps).
pub fn pseudo_stable_set(model: &CentralModel, epsilon: f64) -> Result<Strip> {
    if !(epsilon > 0.0) {
        return Err(Error::NonPositiveEpsilon(epsilon));
    }
    Ok(tops_to_strip(
        &propagate(model, epsilon, FiberSide::Stable)?,
        model.cells(),
    ))
}

/// Pointwise intersection over the schedule, realizing the nested
/// intersection over epsilon. Monotonicity across the schedule is verified,
/// not assumed.
pub fn limit_strip(
    model: &CentralModel,
    schedule: &EpsilonSchedule,
    side: FiberSide,
) -> Result<Strip> {
    let mut result: Option<Strip> = None;
    for &eps in schedule.values() {
        let strip = match side {
            FiberSide::Unstable => pseudo_unstable_set(model, eps)?,
            FiberSide::Stable => pseudo_stable_set(model, eps)?,
        };
        result = Some(match result {
            None => strip,
            Some(prev) => {
                if !strip.contained_in(&prev) {
                    return Err(Error::invalid(
                        "strip grew as epsilon shrank; fiber data is inconsistent",
                    ));
                }
                Strip {
                    top: prev
                        .top
                        .iter()
                        .zip(&strip.top)
                        .map(|(a, b)| a.min(*b))
                        .collect(),
                }
            }
        });
    }
    result.ok_or(Error::BadSchedule)
}

/// Does the one-step image of the closed strip land strictly inside it?
/// Closure and interior are realized at grid resolution: the closed fiber
/// value `top(x)` must map strictly below `top(base_map(x))`.
pub fn is_trapping_strip(model: &CentralModel, strip: &Strip) -> bool {
    (0..model.node_count()).all(|x| {
        let y = model.base_map()[x];
        model.fiber_value(x, strip.top[x]) < strip.top[y]
    })
}

/// Trapping test for the inverse dynamics: the backward image of the closed
/// strip must land strictly inside it.
pub fn is_backward_trapping_strip(model: &CentralModel, strip: &Strip) -> bool {
    (0..model.node_count()).all(|x| {
        let y = model.base_map()[x];
        model.fiber_inverse_value(x, strip.top[y]) < strip.top[x]
    })
}

/// A fiber segment `{node} x [0, length]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralSegment {
    pub node: usize,
    pub length: f64,
}

/// Outcome of the strip dichotomy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum DichotomyOutcome {
    ForwardTrappingStrip { strip: Strip, epsilon: f64 },
    BackwardTrappingStrip { strip: Strip, epsilon: f64 },
    ChainRecurrentSegment(CentralSegment),
}

/// Tunables of the dichotomy.
///
/// A side counts as collapsed to the zero section at slack epsilon when its
/// strip top stays within `collapse_factor * epsilon` everywhere; the factor
/// 2 is the slack equilibrium of a fiber contraction by 1/2. A trapping
/// strip is only certified while its top stays below `neighborhood_bound`,
/// keeping it a small neighborhood of the zero section.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DichotomyParams {
    pub neighborhood_bound: f64,
    pub collapse_factor: f64,
}

impl Default for DichotomyParams {
    fn default() -> Self {
        DichotomyParams {
            neighborhood_bound: 0.25,
            collapse_factor: 2.0,
        }
    }
}

/// Look for a chain-recurrent central segment.
///
/// If the chain-stable or chain-unstable strip collapses to the slack
/// equilibrium at some epsilon of the schedule, no segment survives the
/// limit and `None` is returned. Otherwise the chain class of the zero
/// section in the pointwise product graph at the floor epsilon is extracted;
/// the longest fiber prefix contained in that class is the segment. Classes
/// only shrink as epsilon decreases, so a segment certified at the floor
/// lies in one chain class at every epsilon of the schedule.
pub fn detect_chain_recurrent_segment(
    model: &CentralModel,
    schedule: &EpsilonSchedule,
    params: &DichotomyParams,
) -> Result<Option<CentralSegment>> {
    let floor = schedule.floor();
    if !model.base_chain_transitive(floor) {
        return Err(Error::ChainTransitiveBaseRequired);
    }
    for &eps in schedule.values() {
        let unstable = pseudo_unstable_set(model, eps)?;
        let stable = pseudo_stable_set(model, eps)?;
        let collapse = params.collapse_factor * eps;
        if unstable.max_top() <= collapse || stable.max_top() <= collapse {
            return Ok(None);
        }
    }

    let m = model.cells();
    let adj = model.pointwise_product_adjacency(floor);
    let comps = strongly_connected_components(&adj);
    let total = model.node_count() * (m + 1);
    let mut comp_of = vec![usize::MAX; total];
    for (ci, comp) in comps.iter().enumerate() {
        for &v in comp {
            comp_of[v] = ci;
        }
    }
    let zero_class = comp_of[0];
    let mut best_node = 0usize;
    let mut best_len = 0usize;
    for x in 0..model.node_count() {
        if comp_of[x * (m + 1)] != zero_class {
            // chain-transitive base keeps all zero cells in one class
            return Err(Error::ChainTransitiveBaseRequired);
        }
        let mut a = 0usize;
        while a < m && comp_of[x * (m + 1) + a + 1] == zero_class {
            a += 1;
        }
        if a > best_len {
            best_len = a;
            best_node = x;
        }
    }
    if best_len == 0 {
        return Ok(None);
    }
    Ok(Some(CentralSegment {
        node: best_node,
        length: grid_value(best_len, m),
    }))
}

/// The trapping-strip dichotomy over a chain-transitive base: either a
/// chain-recurrent central segment exists, or one of the chain sets of the
/// zero section collapses and yields an arbitrarily small trapping strip for
/// the forward or backward dynamics.
pub fn dichotomy(
    model: &CentralModel,
    schedule: &EpsilonSchedule,
    params: &DichotomyParams,
) -> Result<DichotomyOutcome> {
    if let Some(segment) = detect_chain_recurrent_segment(model, schedule, params)? {
        return Ok(DichotomyOutcome::ChainRecurrentSegment(segment));
    }
    // smallest epsilon first
    for &eps in schedule.values().iter().rev() {
        let strip = pseudo_unstable_set(model, eps)?;
        if strip.max_top() <= params.neighborhood_bound && is_trapping_strip(model, &strip) {
            return Ok(DichotomyOutcome::ForwardTrappingStrip {
                strip,
                epsilon: eps,
            });
        }
    }
    for &eps in schedule.values().iter().rev() {
        let strip = pseudo_stable_set(model, eps)?;
        if strip.max_top() <= params.neighborhood_bound
            && is_backward_trapping_strip(model, &strip)
        {
            return Ok(DichotomyOutcome::BackwardTrappingStrip {
                strip,
                epsilon: eps,
            });
        }
    }
    let floor = schedule.floor();
    Err(Error::ResolutionInsufficient {
        unstable: Box::new(pseudo_unstable_set(model, floor)?),
        stable: Box::new(pseudo_stable_set(model, floor)?),
    })
}
