//! Finite-resolution chain recurrence.
//!
//! A compact metric space is replaced by a finite net of sample points. For a
//! map `f` and a slack `epsilon` the directed graph with an edge `a -> b`
//! whenever `d(f(a), b) < epsilon` has as its paths exactly the
//! epsilon-pseudo-orbits of net points, so reachability questions, the
//! chain-recurrent set and its classes all become graph computations:
//! classes are the strongly connected components that carry a cycle
//! (self-loops count).
//!
//! An epsilon-pseudo-orbit on a net of resolution `delta` certifies an
//! `(epsilon + 2*delta)`-pseudo-orbit of the underlying map, which is the
//! usual set-oriented bound; the limit `epsilon -> 0` is explored through a
//! decreasing [`EpsilonSchedule`] whose floor stays above the net resolution.

use serde::{Deserialize, Serialize};

use crate::chart::Chart;
use crate::error::{Error, Result};

/// Hausdorff distance between two non-empty finite sets:
/// `max(sup_{x in A} d(x, B), sup_{y in B} d(y, A))`.
pub fn hausdorff_distance<P>(a: &[P], b: &[P], dist: impl Fn(&P, &P) -> f64) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let sup = |from: &[P], to: &[P]| {
        from.iter()
            .map(|x| {
                to.iter()
                    .map(|y| dist(x, y))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    Ok(sup(a, b).max(sup(b, a)))
}

/// Metric backing a [`SampledSpace`]: either distances computed in a chart
/// from stored coordinates, or an explicit symmetric distance matrix
/// (used when a model is reloaded from its serialized form).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum SpaceMetric {
    Chart(Chart),
    Matrix(Vec<Vec<f64>>),
}

/// A finite net of sample points of a compact metric space.
///
/// Handles are indices into `points`. `image(h)` is the ambient coordinate of
/// the handle and `project(x)` maps an ambient point to the nearest handle,
/// ties broken by lowest index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampledSpace {
    points: Vec<Vec<f64>>,
    metric: SpaceMetric,
}

impl SampledSpace {
    pub fn new(points: Vec<Vec<f64>>, chart: Chart) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("a sampled space needs at least one point"));
        }
        let dim = chart.dim();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::invalid("point dimension does not match chart"));
        }
        Ok(SampledSpace {
            points,
            metric: SpaceMetric::Chart(chart),
        })
    }

    /// Space defined by an explicit distance matrix; ambient coordinates are
    /// synthesized as 1-d indices and only handle distances are meaningful.
    pub fn from_matrix(matrix: Vec<Vec<f64>>) -> Result<Self> {
        let n = matrix.len();
        if n == 0 || matrix.iter().any(|row| row.len() != n) {
            return Err(Error::invalid("distance matrix must be square and non-empty"));
        }
        let points = (0..n).map(|i| vec![i as f64]).collect();
        Ok(SampledSpace {
            points,
            metric: SpaceMetric::Matrix(matrix),
        })
    }

    /// Uniform net of `n` points on the circle of circumference `period`.
    pub fn circle_net(n: usize, period: f64) -> Result<Self> {
        if n == 0 || period <= 0.0 {
            return Err(Error::invalid("circle net needs n > 0 and period > 0"));
        }
        let pts = (0..n).map(|i| vec![i as f64 * period / n as f64]).collect();
        SampledSpace::new(
            pts,
            Chart::Periodic {
                periods: vec![period],
            },
        )
    }

    /// Uniform `per_axis` x `per_axis` net on the unit torus.
    pub fn torus_net(per_axis: usize) -> Result<Self> {
        if per_axis == 0 {
            return Err(Error::invalid("torus net needs per_axis > 0"));
        }
        let h = 1.0 / per_axis as f64;
        let mut pts = Vec::with_capacity(per_axis * per_axis);
        for i in 0..per_axis {
            for j in 0..per_axis {
                pts.push(vec![i as f64 * h, j as f64 * h]);
            }
        }
        SampledSpace::new(pts, Chart::unit_torus(2))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn image(&self, handle: usize) -> &[f64] {
        &self.points[handle]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn chart(&self) -> Option<&Chart> {
        match &self.metric {
            SpaceMetric::Chart(c) => Some(c),
            SpaceMetric::Matrix(_) => None,
        }
    }

    /// Distance between two handles.
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        match &self.metric {
            SpaceMetric::Chart(c) => c.distance(&self.points[a], &self.points[b]),
            SpaceMetric::Matrix(m) => m[a][b],
        }
    }

    /// Distance from an ambient point to a handle's image.
    pub fn ambient_dist(&self, x: &[f64], handle: usize) -> Result<f64> {
        match &self.metric {
            SpaceMetric::Chart(c) => Ok(c.distance(x, &self.points[handle])),
            SpaceMetric::Matrix(_) => Err(Error::invalid(
                "matrix-backed space has no ambient metric",
            )),
        }
    }

    /// Nearest handle to an ambient point, ties broken by lowest index.
    pub fn project(&self, x: &[f64]) -> Result<usize> {
        let chart = self
            .chart()
            .ok_or_else(|| Error::invalid("matrix-backed space has no ambient metric"))?;
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = chart.distance(x, p);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        Ok(best)
    }

    /// Minimal distance between distinct handles (the net resolution).
    pub fn min_spacing(&self) -> f64 {
        let n = self.len();
        let mut best = f64::INFINITY;
        for a in 0..n {
            for b in (a + 1)..n {
                best = best.min(self.dist(a, b));
            }
        }
        best
    }

    pub fn full_distance_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        (0..n)
            .map(|a| (0..n).map(|b| self.dist(a, b)).collect())
            .collect()
    }
}

/// Strictly decreasing positive slack schedule realizing the limit
/// `epsilon -> 0` down to a floor tied to the net resolution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    values: Vec<f64>,
}

impl EpsilonSchedule {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty()
            || values.iter().any(|&e| !(e > 0.0))
            || values.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(Error::BadSchedule);
        }
        Ok(EpsilonSchedule { values })
    }

    /// Geometric schedule ending at `floor`: `floor * factor^-(steps-1), ..., floor`.
    pub fn geometric(floor: f64, factor: f64, steps: usize) -> Result<Self> {
        if !(floor > 0.0) || !(factor > 0.0 && factor < 1.0) || steps == 0 {
            return Err(Error::BadSchedule);
        }
        let values = (0..steps)
            .map(|k| floor / factor.powi((steps - 1 - k) as i32))
            .collect();
        EpsilonSchedule::new(values)
    }

    /// Default schedule for a net: geometric, factor 1/2, 8 steps, floor at
    /// twice the net spacing. Below the spacing the transition graph
    /// degenerates, so the floor stays above it.
    pub fn default_for_spacing(spacing: f64) -> Result<Self> {
        EpsilonSchedule::geometric(2.0 * spacing, 0.5, 8)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn floor(&self) -> f64 {
        *self.values.last().expect("schedule is non-empty")
    }
}

/// Directed graph of single pseudo-orbit steps on a net.
#[derive(Debug, Clone)]
pub struct TransitionGraph {
    epsilon: f64,
    successors: Vec<Vec<usize>>,
}

impl TransitionGraph {
    pub fn from_adjacency(successors: Vec<Vec<usize>>, epsilon: f64) -> Self {
        TransitionGraph {
            epsilon,
            successors,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn node_count(&self) -> usize {
        self.successors.len()
    }

    pub fn successors(&self, node: usize) -> &[usize] {
        &self.successors[node]
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.successors
    }

    pub fn edge_count(&self) -> usize {
        self.successors.iter().map(|s| s.len()).sum()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.successors[a].binary_search(&b).is_ok()
    }

    /// Edge list in the text format "src dst", one edge per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (src, succ) in self.successors.iter().enumerate() {
            for dst in succ {
                out.push_str(&format!("{} {}\n", src, dst));
            }
        }
        out
    }
}

/// Build the epsilon-transition graph of `f` on the net: edge `a -> b` iff
/// `d(f(image(a)), image(b)) < epsilon`, strict to match "less than epsilon".
pub fn build_transition_graph(
    space: &SampledSpace,
    f: impl Fn(&[f64]) -> Vec<f64>,
    epsilon: f64,
) -> Result<TransitionGraph> {
    if !(epsilon > 0.0) {
        return Err(Error::NonPositiveEpsilon(epsilon));
    }
    let chart = space
        .chart()
        .ok_or_else(|| Error::invalid("transition graph needs a chart-backed space"))?;
    let n = space.len();
    let mut successors = Vec::with_capacity(n);
    for a in 0..n {
        let fa = f(space.image(a));
        let mut row = Vec::new();
        for b in 0..n {
            if chart.distance(&fa, space.image(b)) < epsilon {
                row.push(b);
            }
        }
        successors.push(row);
    }
    Ok(TransitionGraph {
        epsilon,
        successors,
    })
}

/// `a` chains to `b` iff a directed path of length >= 1 joins them.
pub fn chain_reaches(graph: &TransitionGraph, a: usize, b: usize) -> bool {
    let mut seen = vec![false; graph.node_count()];
    let mut stack: Vec<usize> = graph.successors(a).to_vec();
    for &s in &stack {
        seen[s] = true;
    }
    while let Some(v) = stack.pop() {
        if v == b {
            return true;
        }
        for &w in graph.successors(v) {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    false
}

/// Strongly connected components of a directed graph, iterative Tarjan.
/// Components are returned sorted by their minimal node, nodes ascending.
pub fn strongly_connected_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut comps: Vec<Vec<usize>> = Vec::new();

    // Explicit DFS frames: (node, next child position).
    let mut frames: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        frames.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut child)) = frames.last_mut() {
            if *child < adj[v].len() {
                let w = adj[v][*child];
                *child += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(&(parent, _)) = frames.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps.sort_by_key(|c| c[0]);
    comps
}

/// Partition of the chain-recurrent nodes into chain-recurrence classes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainDecomposition {
    pub epsilon: f64,
    /// Classes sorted by minimal node, each sorted ascending.
    pub classes: Vec<Vec<usize>>,
    /// Union of all classes, sorted.
    pub recurrent_nodes: Vec<usize>,
    /// Class index per node, `None` for non-recurrent nodes.
    pub class_of_node: Vec<Option<usize>>,
}

impl ChainDecomposition {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Chain-recurrence classes at slack epsilon: the strongly connected
/// components of the transition graph that contain a cycle.
pub fn chain_decomposition(graph: &TransitionGraph) -> ChainDecomposition {
    let comps = strongly_connected_components(graph.adjacency());
    let n = graph.node_count();
    let mut classes = Vec::new();
    let mut class_of_node = vec![None; n];
    for comp in comps {
        let cyclic = comp.len() > 1 || graph.has_edge(comp[0], comp[0]);
        if cyclic {
            let idx = classes.len();
            for &v in &comp {
                class_of_node[v] = Some(idx);
            }
            classes.push(comp);
        }
    }
    let mut recurrent_nodes: Vec<usize> = classes.iter().flatten().copied().collect();
    recurrent_nodes.sort_unstable();
    ChainDecomposition {
        epsilon: graph.epsilon(),
        classes,
        recurrent_nodes,
        class_of_node,
    }
}

/// Is the subset chain-transitive at slack epsilon? Pseudo-orbits are
/// constrained to the subset, so this asks whether the induced subgraph is
/// strongly connected and carries a cycle.
pub fn is_chain_transitive(
    space: &SampledSpace,
    f: impl Fn(&[f64]) -> Vec<f64>,
    subset: &[usize],
    epsilon: f64,
) -> Result<bool> {
    if subset.is_empty() {
        return Err(Error::invalid("chain transitivity needs a non-empty subset"));
    }
    if !(epsilon > 0.0) {
        return Err(Error::NonPositiveEpsilon(epsilon));
    }
    let chart = space
        .chart()
        .ok_or_else(|| Error::invalid("chain transitivity needs a chart-backed space"))?;
    let k = subset.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut any_edge = false;
    for (i, &a) in subset.iter().enumerate() {
        let fa = f(space.image(a));
        for (j, &b) in subset.iter().enumerate() {
            if chart.distance(&fa, space.image(b)) < epsilon {
                adj[i].push(j);
                any_edge = true;
            }
        }
    }
    if !any_edge {
        return Ok(false);
    }
    let comps = strongly_connected_components(&adj);
    if comps.len() != 1 {
        return Ok(false);
    }
    if k == 1 {
        return Ok(adj[0].contains(&0));
    }
    Ok(true)
}
