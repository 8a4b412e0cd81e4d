//! Per-target semantic value layers.
//!
//! Each target category owns a value raster, a confidence raster, and an
//! update-count raster. New observations paint the oracle score over the
//! visible cells with a cone-shaped confidence weight and are fused by
//! confidence-weighted averaging. A logistic decay over the update count
//! attenuates cells that have been looked at many times, and the per-target
//! layers aggregate into one shared value map for planning.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{angle_diff, cell_center, Cell, Grid};
use crate::world::{RobotPose, SensorSpec, VisibleSet};

/// Value, confidence, and update-count rasters for one target category.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValueLayer {
    pub target: String,
    pub resolution: f64,
    pub value: Grid<f64>,
    pub confidence: Grid<f64>,
    pub update_count: Grid<u32>,
}

impl ValueLayer {
    pub fn new(target: impl Into<String>, width: usize, height: usize, resolution: f64) -> Self {
        ValueLayer {
            target: target.into(),
            resolution,
            value: Grid::filled(width, height, 0.0),
            confidence: Grid::filled(width, height, 0.0),
            update_count: Grid::filled(width, height, 0),
        }
    }

    pub fn width(&self) -> usize {
        self.value.width()
    }

    pub fn height(&self) -> usize {
        self.value.height()
    }

    /// Row-major text matrix with 4-decimal fixed-point values.
    pub fn dump_values(&self) -> String {
        dump_raster(&self.value)
    }
}

/// Logistic decay constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayParams {
    /// Update count at which the decay factor reaches one half.
    pub tau: f64,
    /// Softness of the transition; must be positive.
    pub kappa: f64,
}

impl Default for DecayParams {
    fn default() -> Self {
        DecayParams {
            tau: 15.0,
            kappa: 3.0,
        }
    }
}

impl DecayParams {
    /// `1 / (1 + exp((u - tau) / kappa))`, monotonically non-increasing in `u`.
    pub fn factor(&self, update_count: u32) -> f64 {
        1.0 / (1.0 + ((update_count as f64 - self.tau) / self.kappa).exp())
    }
}

/// How per-target layers combine into the shared value map.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMode {
    /// Cell-wise sum rescaled by the global maximum (default).
    SumNorm,
    /// Cell-wise product.
    Product,
}

/// Shared value representation over the targets still being searched.
#[derive(Clone, Debug)]
pub struct AggregateValueMap {
    pub resolution: f64,
    pub value: Grid<f64>,
    pub contributing_targets: Vec<String>,
}

#[derive(Debug, Error)]
pub enum ValueMapError {
    #[error("no layers to aggregate")]
    NoLayers,
    #[error("layer `{0}` dimensions differ from the first layer")]
    DimensionMismatch(String),
}

/// Cone-shaped confidence of a visible cell: `cos^2((theta / (fov/2)) * (pi/2))`
/// where `theta` is the angle between the cell bearing and the optical axis.
///
/// Cells outside the field of view get confidence 0; the robot's own cell is
/// on-axis by convention.
pub fn cone_confidence(pose: &RobotPose, sensor: &SensorSpec, cell: Cell, resolution: f64) -> f64 {
    let center = cell_center(cell, resolution);
    let dx = center.x - pose.x;
    let dy = center.y - pose.y;
    if dx == 0.0 && dy == 0.0 {
        return 1.0;
    }
    let theta = angle_diff(dy.atan2(dx), pose.phi).abs();
    let half_fov = sensor.fov / 2.0;
    if theta > half_fov {
        return 0.0;
    }
    let arg = theta / half_fov * std::f64::consts::FRAC_PI_2;
    let c = arg.cos();
    c * c
}

/// Confidence-weighted fusion of one cell.
///
/// `v_new = (c_curr*v_curr + c_prev*v_prev) / (c_curr + c_prev)` and
/// `c_new = (c_curr^2 + c_prev^2) / (c_curr + c_prev)`, which biases the
/// result toward the higher-confidence input. With both confidences zero the
/// previous state is returned unchanged.
pub fn fuse_cell(v_curr: f64, c_curr: f64, v_prev: f64, c_prev: f64) -> (f64, f64) {
    let denom = c_curr + c_prev;
    if denom <= 0.0 {
        return (v_prev, c_prev);
    }
    let v_new = (c_curr * v_curr + c_prev * v_prev) / denom;
    let c_new = (c_curr * c_curr + c_prev * c_prev) / denom;
    (v_new, c_new)
}

/// Fold one observation score into a layer over the visible cells.
///
/// Every visible cell gets its update count incremented; value and
/// confidence fuse the score with the cell's cone confidence. Non-visible
/// cells are untouched.
pub fn ingest_observation(
    layer: &mut ValueLayer,
    pose: &RobotPose,
    sensor: &SensorSpec,
    score: f64,
    visible: &VisibleSet,
) {
    debug_assert!((0.0..=1.0).contains(&score));
    for &cell in visible.cells() {
        let c_curr = cone_confidence(pose, sensor, cell, layer.resolution);
        let (v_new, c_new) = fuse_cell(
            score,
            c_curr,
            *layer.value.get(cell),
            *layer.confidence.get(cell),
        );
        layer.value.set(cell, v_new);
        layer.confidence.set(cell, c_new);
        *layer.update_count.get_mut(cell) += 1;
    }
}

/// Apply the logistic update-count decay: `v'(x, y) = v(x, y) * factor(u(x, y))`.
pub fn decay_layer(layer: &ValueLayer, params: &DecayParams) -> Grid<f64> {
    let mut out = layer.value.clone();
    for cell in layer.value.iter_cells() {
        let f = params.factor(*layer.update_count.get(cell));
        out.set(cell, *layer.value.get(cell) * f);
    }
    out
}

/// Aggregate raw per-target layers. Found targets' layers must be excluded
/// by the caller.
pub fn aggregate_layers(
    layers: &[&ValueLayer],
    mode: AggregationMode,
) -> Result<AggregateValueMap, ValueMapError> {
    let first = layers.first().ok_or(ValueMapError::NoLayers)?;
    for layer in layers {
        if !layer.value.same_shape(&first.value) {
            return Err(ValueMapError::DimensionMismatch(layer.target.clone()));
        }
    }
    let rasters: Vec<&Grid<f64>> = layers.iter().map(|l| &l.value).collect();
    let value = aggregate_rasters(&rasters, mode)?;
    Ok(AggregateValueMap {
        resolution: first.resolution,
        value,
        contributing_targets: layers.iter().map(|l| l.target.clone()).collect(),
    })
}

/// Aggregate arbitrary value rasters (used for both raw and decayed layers).
pub fn aggregate_rasters(
    rasters: &[&Grid<f64>],
    mode: AggregationMode,
) -> Result<Grid<f64>, ValueMapError> {
    let first = rasters.first().ok_or(ValueMapError::NoLayers)?;
    for r in rasters {
        if !r.same_shape(first) {
            return Err(ValueMapError::DimensionMismatch("<raster>".into()));
        }
    }
    let mut out = Grid::filled(first.width(), first.height(), 0.0);
    match mode {
        AggregationMode::SumNorm => {
            for cell in first.iter_cells() {
                let sum: f64 = rasters.iter().map(|r| *r.get(cell)).sum();
                out.set(cell, sum);
            }
            let max = out.values().cloned().fold(0.0f64, f64::max);
            if max > 0.0 {
                for v in out.values_mut() {
                    *v /= max;
                }
            }
        }
        AggregationMode::Product => {
            for cell in first.iter_cells() {
                let prod: f64 = rasters.iter().map(|r| *r.get(cell)).product();
                out.set(cell, prod);
            }
        }
    }
    Ok(out)
}

/// Row-major text matrix, 4-decimal fixed point, one row per line.
pub fn dump_raster(raster: &Grid<f64>) -> String {
    let mut out = String::new();
    for y in 0..raster.height() {
        for x in 0..raster.width() {
            if x > 0 {
                out.push(' ');
            }
            out.push_str(&format!("{:.4}", raster.get(Cell::new(x, y))));
        }
        out.push('\n');
    }
    out
}

/// JSON sidecar accompanying a layer dump.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LayerDumpMeta {
    pub target: String,
    pub tau: f64,
    pub kappa: f64,
    pub step: usize,
}
