//! Candidate extraction from the decayed value map: relative thresholding,
//! density-based clustering, and the discrete belief over candidate points.

use serde::{Deserialize, Serialize};

use crate::grid::{cell_center, Cell, Grid, Point};

/// Thresholding and clustering parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DbscanParams {
    /// Neighborhood radius in meters.
    pub eps: f64,
    /// Minimum neighborhood size (including the point itself) of a core point.
    pub min_pts: usize,
    /// Keep cells with value at least this fraction of the raster maximum.
    pub value_threshold: f64,
}

impl Default for DbscanParams {
    fn default() -> Self {
        DbscanParams {
            eps: 0.5,
            min_pts: 4,
            value_threshold: 0.6,
        }
    }
}

/// Candidate goal points extracted at one planning step.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CandidateSet {
    /// One representative per cluster, ordered by cluster id.
    pub points: Vec<Point>,
    /// Cells backing each candidate point.
    pub cells: Vec<Cell>,
    pub source_step: usize,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Discrete probability distribution over candidate points.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct BeliefState {
    pub support: CandidateSet,
    pub probs: Vec<f64>,
}

impl BeliefState {
    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }
}

/// Cells whose value reaches `value_threshold * max`, row-major order.
/// Empty when the raster is identically zero.
pub fn threshold_cells(v_decayed: &Grid<f64>, params: &DbscanParams) -> Vec<Cell> {
    let max = v_decayed.values().cloned().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let cut = params.value_threshold * max;
    v_decayed
        .iter_cells()
        .filter(|&c| *v_decayed.get(c) >= cut)
        .collect()
}

/// Density-based clustering with canonical deterministic labeling.
///
/// A point is a core point when at least `min_pts` points (itself included)
/// lie within `eps`. Clusters are the connected components of core points
/// under the eps-neighborhood relation, plus border points, each attached to
/// the cluster of the lowest-indexed core point within eps. Noise points are
/// discarded. Clusters are ordered by their smallest member index and each
/// cluster lists member indices in ascending order.
pub fn dbscan(points: &[Point], eps: f64, min_pts: usize) -> Vec<Vec<usize>> {
    assert!(eps > 0.0, "eps must be positive");
    let n = points.len();
    if n == 0 {
        return Vec::new();
    }

    // Bucketed neighbor search; the inputs are raster cells so a uniform
    // grid of eps-sized buckets keeps this near linear.
    let neighbors = eps_neighbors(points, eps);
    let is_core: Vec<bool> = neighbors.iter().map(|ns| ns.len() >= min_pts).collect();

    // Union core points into connected components.
    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut next_cluster = 0usize;
    for i in 0..n {
        if !is_core[i] || label[i].is_some() {
            continue;
        }
        let cluster = next_cluster;
        next_cluster += 1;
        label[i] = Some(cluster);
        let mut stack = vec![i];
        while let Some(p) = stack.pop() {
            for &q in &neighbors[p] {
                if is_core[q] && label[q].is_none() {
                    label[q] = Some(cluster);
                    stack.push(q);
                }
            }
        }
    }

    // Border points join the cluster of the lowest-indexed core neighbor.
    for i in 0..n {
        if is_core[i] || label[i].is_some() {
            continue;
        }
        if let Some(&core) = neighbors[i].iter().find(|&&q| is_core[q]) {
            label[i] = label[core];
        }
    }

    let mut clusters: Vec<Vec<usize>> = vec![Vec::new(); next_cluster];
    for i in 0..n {
        if let Some(c) = label[i] {
            clusters[c].push(i);
        }
    }
    // Seeds are scanned in index order, so clusters are already ordered by
    // their smallest core index; member lists are ascending by construction.
    clusters
}

/// The neighborhood predicate, shared verbatim by any reference oracle so
/// boundary ties cannot diverge on floating-point rounding.
#[inline]
pub fn within_eps2(p: Point, q: Point, eps2: f64) -> bool {
    (p.x - q.x).powi(2) + (p.y - q.y).powi(2) <= eps2
}

fn eps_neighbors(points: &[Point], eps: f64) -> Vec<Vec<usize>> {
    use std::collections::HashMap;
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let key = |p: Point| -> (i64, i64) {
        ((p.x / eps).floor() as i64, (p.y / eps).floor() as i64)
    };
    for (i, &p) in points.iter().enumerate() {
        buckets.entry(key(p)).or_default().push(i);
    }
    let eps2 = eps * eps;
    points
        .iter()
        .map(|&p| {
            let (bx, by) = key(p);
            let mut ns = Vec::new();
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if let Some(ids) = buckets.get(&(bx + dx, by + dy)) {
                        for &j in ids {
                            if within_eps2(p, points[j], eps2) {
                                ns.push(j);
                            }
                        }
                    }
                }
            }
            ns.sort_unstable();
            ns
        })
        .collect()
}

/// One representative per cluster: the member cell with the highest decayed
/// value, ties broken row-major; converted to the cell-center point.
pub fn candidate_points(
    clusters: &[Vec<usize>],
    cells: &[Cell],
    v_decayed: &Grid<f64>,
    resolution: f64,
    source_step: usize,
) -> CandidateSet {
    let mut points = Vec::with_capacity(clusters.len());
    let mut rep_cells = Vec::with_capacity(clusters.len());
    for cluster in clusters {
        let mut best = cells[cluster[0]];
        let mut best_v = *v_decayed.get(best);
        for &idx in cluster {
            let cell = cells[idx];
            let v = *v_decayed.get(cell);
            if v > best_v + 1e-15 || ((v - best_v).abs() <= 1e-15 && cell.row_major() < best.row_major())
            {
                best = cell;
                best_v = v;
            }
        }
        rep_cells.push(best);
        points.push(cell_center(best, resolution));
    }
    CandidateSet {
        points,
        cells: rep_cells,
        source_step,
    }
}

/// Belief over candidates: `p_i = v'(c_i) / sum_j v'(c_j)`.
///
/// An empty candidate set gives an empty belief; all-zero values fall back
/// to the uniform distribution.
pub fn build_belief(cands: &CandidateSet, v_decayed: &Grid<f64>) -> BeliefState {
    if cands.is_empty() {
        return BeliefState::default();
    }
    let values: Vec<f64> = cands.cells.iter().map(|&c| *v_decayed.get(c)).collect();
    let total: f64 = values.iter().sum();
    let probs = if total > 0.0 {
        values.iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / values.len() as f64; values.len()]
    };
    BeliefState {
        support: cands.clone(),
        probs,
    }
}

/// Full extraction pipeline from a decayed value raster.
pub fn extract_candidates(
    v_decayed: &Grid<f64>,
    params: &DbscanParams,
    resolution: f64,
    source_step: usize,
) -> CandidateSet {
    let cells = threshold_cells(v_decayed, params);
    let points: Vec<Point> = cells.iter().map(|&c| cell_center(c, resolution)).collect();
    let clusters = dbscan(&points, params.eps, params.min_pts);
    candidate_points(&clusters, &cells, v_decayed, resolution, source_step)
}
