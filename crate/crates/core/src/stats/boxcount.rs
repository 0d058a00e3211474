use std::fmt::Write as _;

use serde::Serialize;

use super::regression::linear_fit;
use crate::error::{Error, Result};
use crate::lattice::{mix64, replica_seed, LatticePoint, WeightField, Window};
use crate::lpp::geodesic;
use crate::parallel::try_map_indexed;
use crate::scaling::{rescale_path, RescaledPath, ScalingParams};

/// Box counts over dyadic scales and the fitted dimension.
///
/// `counts` are the numbers entering the fit; for [`box_dimension`] they
/// equal `occupied`, for [`graph_box_dimension`] the per-column floor is
/// removed first.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxCountResult {
    /// Increasing.
    pub scales: Vec<f64>,
    pub counts: Vec<u64>,
    pub occupied: Vec<u64>,
    pub fitted_dimension: f64,
    pub fit_stderr: f64,
    pub scale_range_used: (f64, f64),
}

impl BoxCountResult {
    /// Export with header `scale,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scale,count\n");
        for (s, c) in self.scales.iter().zip(&self.counts) {
            let _ = writeln!(out, "{s:e},{c}");
        }
        out
    }
}

pub const MIN_POINTS: usize = 1000;
/// The two finest and the coarsest scale are dropped, and at least two must remain.
pub const MIN_SCALES: usize = 5;

fn check_scales(scales: &[f64]) -> Result<Vec<f64>> {
    if scales.len() < MIN_SCALES {
        return Err(Error::InsufficientData { needed: MIN_SCALES, got: scales.len() });
    }
    if let Some(s) = scales.iter().find(|s| !(**s > 0.0) || s.log2().fract() != 0.0) {
        return Err(Error::Precondition(format!("scale {s} is not a positive power of two")));
    }
    let mut sorted = scales.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if sorted.len() != scales.len() {
        return Err(Error::Precondition("scales must be distinct".into()));
    }
    Ok(sorted)
}

/// Occupied boxes and occupied columns of the grid of side `eps` anchored at 0.
fn occupancy(points: &[(f64, f64)], eps: f64) -> (u64, u64) {
    let mut cells: Vec<(i64, i64)> =
        points.iter().map(|&(t, x)| ((t / eps).floor() as i64, (x / eps).floor() as i64)).collect();
    cells.sort_unstable();
    cells.dedup();
    let mut columns = cells.iter().map(|c| c.0).collect::<Vec<_>>();
    columns.dedup();
    (cells.len() as u64, columns.len() as u64)
}

fn fit(scales: Vec<f64>, counts: Vec<u64>, occupied: Vec<u64>) -> Result<BoxCountResult> {
    let kept = 2..scales.len() - 1;
    let xs: Vec<f64> = scales[kept.clone()].iter().map(|s| -s.ln()).collect();
    if let Some(c) = counts[kept.clone()].iter().find(|c| **c == 0) {
        return Err(Error::Estimator(format!("zero box count {c} within the fitted range")));
    }
    let ys: Vec<f64> = counts[kept.clone()].iter().map(|&c| (c as f64).ln()).collect();
    let f = linear_fit(&xs, &ys)?;
    Ok(BoxCountResult {
        scale_range_used: (scales[kept.start], scales[kept.end - 1]),
        scales,
        counts,
        occupied,
        fitted_dimension: f.slope,
        fit_stderr: f.slope_stderr,
    })
}

fn check_points(points: &[(f64, f64)]) -> Result<()> {
    if points.len() < MIN_POINTS {
        return Err(Error::InsufficientData { needed: MIN_POINTS, got: points.len() });
    }
    if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::Estimator("non-finite point".into()));
    }
    if points.iter().all(|p| *p == points[0]) {
        return Err(Error::Estimator("degenerate point set: all points equal".into()));
    }
    Ok(())
}

/// Box-counting dimension of a planar point set.
///
/// Counts occupied `eps`-boxes of a fixed grid for each scale and fits
/// `log N` against `log 1/eps`, leaving out the two finest scales
/// (resolution floor) and the coarsest (window floor).
pub fn box_dimension(points: &[(f64, f64)], scales: &[f64]) -> Result<BoxCountResult> {
    check_points(points)?;
    let scales = check_scales(scales)?;
    let occupied: Vec<u64> = scales.iter().map(|&e| occupancy(points, e).0).collect();
    fit(scales, occupied.clone(), occupied)
}

/// Box-counting dimension of the graph `{(t, x(t))}` of a path.
///
/// A graph meets every column of its time range, which adds one box per
/// column to the count and drags the log-log slope toward 1 at any finite
/// range of scales. The fit therefore uses `N(eps) - columns(eps)`, the
/// number of boxes beyond the first in each column, which scales with the
/// same exponent as `N` but without that floor.
pub fn graph_box_dimension(path: &RescaledPath, scales: &[f64]) -> Result<BoxCountResult> {
    let points: Vec<(f64, f64)> = path.samples().collect();
    check_points(&points)?;
    let scales = check_scales(scales)?;
    let (counts, occupied) = scales
        .iter()
        .map(|&e| {
            let (n, cols) = occupancy(&points, e);
            (n - cols, n)
        })
        .unzip();
    fit(scales, counts, occupied)
}

/// `count` dyadic scales ending at the resolution of the path: the finest is
/// the largest power of two below the mean sample spacing (the coarser of
/// the time and space spacings).
pub fn graph_scales(path: &RescaledPath, count: usize) -> Result<Vec<f64>> {
    if path.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: path.len() });
    }
    let samples: Vec<(f64, f64)> = path.samples().collect();
    let steps = (samples.len() - 1) as f64;
    let dx = samples.windows(2).map(|w| (w[1].1 - w[0].1).abs()).sum::<f64>() / steps;
    let dt = (samples[samples.len() - 1].0 - samples[0].0) / steps;
    let delta = dx.max(dt);
    let finest = (1.0 / delta).log2().floor() as i32 + 1;
    Ok((0..count as i32).map(|k| 2f64.powi(-(finest - k))).collect())
}

/// Rescaled geodesic from the origin to `n v`, over rescaled times `[0, 1]`.
pub fn unit_geodesic(seed: u64, n: i64) -> Result<RescaledPath> {
    let params = ScalingParams::new(n)?;
    let end = LatticePoint::ORIGIN.along_v(n);
    let x = WeightField::new(seed, Window::new(LatticePoint::ORIGIN, end, 0)?);
    rescale_path(&geodesic(&x, LatticePoint::ORIGIN, end)?, params)
}

/// Graph box dimension of `unit_geodesic(replica_seed(seed, r), n)` for each
/// replica, over `scales` scales from [`graph_scales`].
pub fn geodesic_box_dimensions(seed: u64, n: i64, scales: usize, replicas: usize) -> Result<Vec<BoxCountResult>> {
    try_map_indexed(replicas, |r| {
        let path = unit_geodesic(replica_seed(seed, r as u64), n)?;
        graph_box_dimension(&path, &graph_scales(&path, scales)?)
    })
}

/// Graph of a simple random walk with `steps` steps in diffusive scaling:
/// `(k / steps, S_k / sqrt(steps))`.
pub fn random_walk_graph(seed: u64, steps: usize) -> Result<RescaledPath> {
    if steps == 0 {
        return Err(Error::Precondition("a random walk needs at least one step".into()));
    }
    let key = mix64(seed ^ 0x2545_F491_4F6C_DD1D);
    let n = steps as f64;
    let scale = n.sqrt().recip();
    let mut s: i64 = 0;
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push((0.0, 0.0));
    let mut word = 0u64;
    for k in 0..steps {
        if k % 64 == 0 {
            word = mix64(key.wrapping_add(k as u64 / 64));
        }
        s += if word >> (k % 64) & 1 == 1 { 1 } else { -1 };
        samples.push(((k + 1) as f64 / n, s as f64 * scale));
    }
    RescaledPath::new(samples)
}
