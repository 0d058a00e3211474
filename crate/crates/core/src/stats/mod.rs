//! Estimators and tests for the scaling claims.

mod boxcount;
mod busemann;
mod exponents;
mod geometry;
mod ks;
mod occupation;
mod portrait;
mod regression;
mod symmetry;

pub use boxcount::{
    box_dimension, geodesic_box_dimensions, graph_box_dimension, graph_scales, random_walk_graph, unit_geodesic,
    BoxCountResult,
};
pub use busemann::{
    antidiagonal_increments, busemann_increment_test, certified_dual_weights, certified_increments, dual_weight_law,
    increment_summary, CertifiedSample, DualWeightLaw, IncrementSummary, INCREMENT_SCALE,
};
pub use exponents::{
    default_holder_gaps, fluctuation_exponent, holder_exponent, max_increment, midpoint_displacements, rms_exponent,
    size_replica_seed, ExponentFit,
};
pub use geometry::{
    frame_coverage, grid_geodesics, highway_census, EndpointGrid, FrameCoverage, HighwayCensus, RescaledWindow,
};
pub use ks::{exp_cdf, ks_statistic, ks_two_sample, ks_two_sample_critical, laplace_cdf};
pub use occupation::{occupation_exceedance, occupation_time, origin_root_paths, OccupationResult};
pub use portrait::{
    landscape_sweep, nu_set_points, portrait_one_endedness, portrait_sweep, top_sources, NuSet, OneEndedness,
    PortraitSweep,
};
pub use regression::{linear_fit, log_log_fit, LinearFit};
pub use symmetry::{flip_symmetry_test, kpz_scaling_test, landscape_values, ScalingTest, TwoSampleTest};

use serde::Serialize;

/// Mean and (population) variance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
}

pub fn moments(samples: &[f64]) -> Moments {
    let n = samples.len();
    if n == 0 {
        return Moments { count: 0, mean: f64::NAN, variance: f64::NAN };
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let variance = samples.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / n as f64;
    Moments { count: n, mean, variance }
}

/// Pearson correlation of paired samples.
pub fn correlation(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for &(a, b) in pairs {
        sab += (a - ma) * (b - mb);
        saa += (a - ma) * (a - ma);
        sbb += (b - mb) * (b - mb);
    }
    sab / (saa * sbb).sqrt()
}
