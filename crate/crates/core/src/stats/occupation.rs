use std::fmt::Write as _;

use serde::Serialize;

use super::exponents::size_replica_seed;
use crate::error::{Error, Result};
use crate::lattice::{LatticePoint, WeightField, Window};
use crate::lpp::geodesic;
use crate::parallel::try_map_indexed;
use crate::scaling::{rescale_path, RescaledPath, ScalingParams};

pub const MIN_PATHS: usize = 100;

/// Lebesgue measure of `{t in j : x(t) in i}` for the piecewise linear path.
pub fn occupation_time(path: &RescaledPath, i: (f64, f64), j: (f64, f64)) -> f64 {
    let samples: Vec<(f64, f64)> = path.samples().collect();
    let mut total = 0.0;
    for w in samples.windows(2) {
        let ((t0, x0), (t1, x1)) = (w[0], w[1]);
        let (a, b) = (t0.max(j.0), t1.min(j.1));
        if a >= b {
            continue;
        }
        let slope = (x1 - x0) / (t1 - t0);
        if slope == 0.0 {
            if x0 >= i.0 && x0 <= i.1 {
                total += b - a;
            }
            continue;
        }
        // times where the segment is at the two ends of i
        let (u, v) = ((i.0 - x0) / slope + t0, (i.1 - x0) / slope + t0);
        let (lo, hi) = (u.min(v).max(a), u.max(v).min(b));
        if hi > lo {
            total += hi - lo;
        }
    }
    total
}

/// Frequency of `Leb{t in J : x(t) in I} > M Leb(I) Leb(J)^{1/3}` per `M`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OccupationResult {
    pub interval: (f64, f64),
    pub time_window: (f64, f64),
    pub paths: usize,
    pub m_values: Vec<f64>,
    pub frequencies: Vec<f64>,
}

impl OccupationResult {
    /// Export with header `m,frequency`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,frequency\n");
        for (m, f) in self.m_values.iter().zip(&self.frequencies) {
            let _ = writeln!(out, "{m},{f}");
        }
        out
    }

    pub fn is_nonincreasing(&self) -> bool {
        let mut order: Vec<usize> = (0..self.m_values.len()).collect();
        order.sort_by(|&a, &b| self.m_values[a].total_cmp(&self.m_values[b]));
        order.windows(2).all(|w| self.frequencies[w[0]] >= self.frequencies[w[1]])
    }
}

pub fn occupation_exceedance(
    paths: &[RescaledPath],
    i: (f64, f64),
    j: (f64, f64),
    m_values: &[f64],
) -> Result<OccupationResult> {
    if !(i.0 < i.1) || !(j.0 < j.1) {
        return Err(Error::Precondition(format!("empty interval {i:?} or time window {j:?}")));
    }
    if paths.len() < MIN_PATHS {
        return Err(Error::InsufficientData { needed: MIN_PATHS, got: paths.len() });
    }
    if let Some(p) = paths.iter().find(|p| p.domain().0 > j.0 || p.domain().1 < j.1) {
        return Err(Error::Precondition(format!("time window {j:?} is not inside the path domain {:?}", p.domain())));
    }
    let scale = (i.1 - i.0) * (j.1 - j.0).cbrt();
    let times: Vec<f64> = paths.iter().map(|p| occupation_time(p, i, j)).collect();
    let frequencies = m_values
        .iter()
        .map(|&m| times.iter().filter(|&&o| o > m * scale).count() as f64 / times.len() as f64)
        .collect();
    Ok(OccupationResult { interval: i, time_window: j, paths: paths.len(), m_values: m_values.to_vec(), frequencies })
}

/// Rescaled geodesics from the root `-root_depth * n v` into the origin,
/// restricted to rescaled times `[-1, 0]`: finite stand-ins for the
/// downward semi-infinite geodesic from the origin, one per replica.
pub fn origin_root_paths(seed: u64, n: i64, root_depth: i64, count: usize) -> Result<Vec<RescaledPath>> {
    if root_depth < 1 {
        return Err(Error::Precondition(format!("root depth {root_depth} must be at least 1")));
    }
    let params = ScalingParams::new(n)?;
    let root = LatticePoint::ORIGIN.along_v(-root_depth * n);
    let window = Window::new(root, LatticePoint::ORIGIN, 0)?;
    try_map_indexed(count, |r| {
        let x = WeightField::new(size_replica_seed(seed, n, r), window);
        let g = geodesic(&x, root, LatticePoint::ORIGIN)?;
        rescale_path(&g, params)?.restrict(-1.0, 0.0)
    })
}
