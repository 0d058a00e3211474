use std::fmt::Write as _;

use serde::Serialize;

use super::regression::log_log_fit;
use crate::error::{Error, Result};
use crate::lattice::{replica_seed, LatticePoint, WeightField, Window};
use crate::lpp::split_at_layer;
use crate::parallel::try_map_indexed;
use crate::scaling::RescaledPath;

/// A power law `statistic ~ size^exponent` fitted on log-log axes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentFit {
    pub sizes: Vec<f64>,
    pub statistics: Vec<f64>,
    pub fitted_exponent: f64,
    pub stderr: f64,
}

impl ExponentFit {
    fn new(sizes: Vec<f64>, statistics: Vec<f64>) -> Result<Self> {
        let f = log_log_fit(&sizes, &statistics)?;
        Ok(ExponentFit { sizes, statistics, fitted_exponent: f.slope, stderr: f.slope_stderr })
    }

    /// Export with the given two-column header, e.g. `size,rms`.
    pub fn to_csv(&self, header: &str) -> String {
        let mut out = format!("{header}\n");
        for (s, v) in self.sizes.iter().zip(&self.statistics) {
            let _ = writeln!(out, "{s},{v:e}");
        }
        out
    }
}

pub const MIN_SIZES: usize = 4;
pub const MIN_REPLICAS: usize = 32;

/// Seed of replica `r` at lattice size `size`.
pub fn size_replica_seed(seed: u64, size: i64, r: usize) -> u64 {
    replica_seed(replica_seed(seed, size as u64), r as u64)
}

/// Transversal displacement (rotated `x`) at depth `size / 2` of the
/// geodesic from the origin down to the root `-size v`, one per replica.
pub fn midpoint_displacements(seed: u64, size: i64, replicas: usize) -> Result<Vec<f64>> {
    if size < 2 || size % 2 != 0 {
        return Err(Error::Precondition(format!("size {size} must be even and at least 2")));
    }
    let root = LatticePoint::new(-size, -size);
    let window = Window::new(root, LatticePoint::ORIGIN, 0)?;
    try_map_indexed(replicas, |r| {
        let x = WeightField::new(size_replica_seed(seed, size, r), window);
        let split = split_at_layer(&x, root, LatticePoint::ORIGIN, -size)?;
        let q = split.argmax[0];
        Ok((q.i - q.j) as f64 / 2.0)
    })
}

/// Root-mean-square midpoint displacement against lattice size.
pub fn fluctuation_exponent(seed: u64, sizes: &[i64], replicas: usize) -> Result<ExponentFit> {
    check_sizes(sizes, replicas)?;
    let displacements = sizes.iter().map(|&s| midpoint_displacements(seed, s, replicas)).collect::<Result<Vec<_>>>()?;
    rms_exponent(sizes, &displacements)
}

fn check_sizes(sizes: &[i64], replicas: usize) -> Result<()> {
    if replicas < MIN_REPLICAS {
        return Err(Error::InsufficientData { needed: MIN_REPLICAS, got: replicas });
    }
    let (lo, hi) = (sizes.iter().min().copied().unwrap_or(0), sizes.iter().max().copied().unwrap_or(0));
    if sizes.len() < MIN_SIZES || hi < 4 * lo {
        return Err(Error::Precondition(format!(
            "need at least {MIN_SIZES} sizes spanning two octaves, got {sizes:?}"
        )));
    }
    Ok(())
}

/// Fit of RMS displacement against size, from one displacement sample per size.
pub fn rms_exponent(sizes: &[i64], displacements: &[Vec<f64>]) -> Result<ExponentFit> {
    if sizes.len() != displacements.len() {
        return Err(Error::Precondition(format!("{} sizes but {} samples", sizes.len(), displacements.len())));
    }
    check_sizes(sizes, displacements.iter().map(Vec::len).min().unwrap_or(0))?;
    let rms = displacements.iter().map(|d| (d.iter().map(|x| x * x).sum::<f64>() / d.len() as f64).sqrt()).collect();
    ExponentFit::new(sizes.iter().map(|&s| s as f64).collect(), rms)
}

/// Largest increment `|x(t + h) - x(t)|` over sample times `t`.
pub fn max_increment(path: &RescaledPath, h: f64) -> Result<f64> {
    let (lo, hi) = path.domain();
    if !(h > 0.0) || h > hi - lo {
        return Err(Error::Precondition(format!("gap {h} does not fit the domain [{lo}, {hi}]")));
    }
    let mut best: f64 = 0.0;
    for (t, x) in path.samples() {
        if t + h > hi {
            break;
        }
        let y = path.eval(t + h).expect("inside the domain");
        best = best.max((y - x).abs());
    }
    Ok(best)
}

/// Dyadic gaps from `2^-4` down to the one spanning 16 lattice steps at `n`.
pub fn default_holder_gaps(n: i64) -> Vec<f64> {
    let finest = (n.max(1) as f64).log2().floor() as i32 - 3;
    (4..=finest.max(5)).map(|k| 2f64.powi(-k)).collect()
}

/// Modulus of continuity over dyadic gaps, fitted as `~ h^alpha`.
pub fn holder_exponent(path: &RescaledPath, gaps: &[f64]) -> Result<ExponentFit> {
    if gaps.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: gaps.len() });
    }
    if let Some(h) = gaps.iter().find(|h| !(**h > 0.0) || h.log2().fract() != 0.0) {
        return Err(Error::Precondition(format!("gap {h} is not a positive power of two")));
    }
    let (lo, hi) = path.domain();
    let smallest = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    if hi - lo < 64.0 * smallest {
        return Err(Error::Precondition(format!(
            "domain length {} is below 2^6 times the smallest gap {smallest}",
            hi - lo
        )));
    }
    let mut sorted = gaps.to_vec();
    sorted.sort_by(f64::total_cmp);
    let stats = sorted.iter().map(|&h| max_increment(path, h)).collect::<Result<Vec<_>>>()?;
    ExponentFit::new(sorted, stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dyadic(from: i32, to: i32) -> Vec<f64> {
        (from..=to).map(|k| 2f64.powi(-k)).collect()
    }

    #[test]
    fn linear_path_is_lipschitz() {
        let p = RescaledPath::new((0..=1024).map(|k| (k as f64 / 1024.0, 0.7 * k as f64 / 1024.0)).collect()).unwrap();
        let f = holder_exponent(&p, &dyadic(2, 6)).unwrap();
        assert!((f.fitted_exponent - 1.0).abs() < 0.05, "{f:?}");
    }

    #[test]
    fn brownian_path_follows_the_levy_modulus() {
        // max increment over gaps h ~ sqrt(2 h ln(1/h)), so the raw fit sits well below 1/2
        let w = super::super::random_walk_graph(5, 1 << 18).unwrap();
        let f = holder_exponent(&w, &dyadic(3, 10)).unwrap();
        assert!(f.fitted_exponent > 0.3 && f.fitted_exponent < 0.5, "{f:?}");
        for (h, m) in f.sizes.iter().zip(&f.statistics).filter(|(h, _)| **h <= 1.0 / 32.0) {
            let levy = (2.0 * h * (1.0 / h).ln()).sqrt();
            assert!(m / levy > 0.7 && m / levy < 1.3, "{h} {m} {levy}");
        }
    }

    #[test]
    fn default_gaps_stop_at_sixteen_steps() {
        let g = default_holder_gaps(1 << 14);
        assert_eq!((g.len(), g[0], g[g.len() - 1]), (8, 1.0 / 16.0, 1.0 / 2048.0));
    }

    #[test]
    fn holder_preconditions() {
        let p = RescaledPath::new((0..=100).map(|k| (k as f64 / 100.0, (k % 3) as f64)).collect()).unwrap();
        assert!(holder_exponent(&p, &[2.0, 0.5]).is_err());
        assert!(holder_exponent(&p, &[0.5, 1.0 / 64.0]).is_ok());
        assert!(holder_exponent(&p, &[0.5, 1.0 / 32.0]).is_err());
        assert!(holder_exponent(&p, &[0.5, 0.3]).is_err());
    }

    #[test]
    fn fluctuation_preconditions() {
        assert!(matches!(fluctuation_exponent(1, &[8, 16, 32, 64], 4), Err(Error::InsufficientData { .. })));
        assert!(fluctuation_exponent(1, &[8, 16], 32).is_err());
        assert!(fluctuation_exponent(1, &[8, 10, 12, 14], 32).is_err());
        assert!(midpoint_displacements(1, 7, 1).is_err());
    }

    #[test]
    fn small_sizes_wander_superdiffusively() {
        let f = fluctuation_exponent(3, &[16, 32, 64, 128], 64).unwrap();
        assert!(f.fitted_exponent > 0.55 && f.fitted_exponent < 0.8, "{f:?}");
        assert!(f.statistics.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn displacements_are_reproducible_and_bounded() {
        let a = midpoint_displacements(9, 32, 40).unwrap();
        assert_eq!(a, midpoint_displacements(9, 32, 40).unwrap());
        assert!(a.iter().all(|x| x.abs() <= 16.0 && (2.0 * x).fract() == 0.0));
    }
}
