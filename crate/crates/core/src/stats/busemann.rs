use std::fmt::Write as _;

use serde::Serialize;

use super::{exp_cdf, ks_statistic, laplace_cdf, moments};
use crate::duality::dual_weights;
use crate::error::{Error, Result};
use crate::lattice::{replica_seed, LatticePoint, Rect, WeightField, Window};
use crate::parallel::try_map_indexed;
use crate::trees::{busemann_field, certify_stabilization, BusemannField, Direction, StabilizationCertificate};

pub const MIN_INCREMENTS: usize = 1000;
/// Scale of the difference of two independent exp(1/2) variables.
pub const INCREMENT_SCALE: f64 = 2.0;

/// Successive increments `B(i+1, j-1) - B(i, j)` along the anti-diagonal
/// `i + j = level`, for consecutive pairs inside `region`.
pub fn antidiagonal_increments(b: &BusemannField, level: i64, region: Rect) -> Vec<f64> {
    let r = region.intersect(&b.rect());
    if r.is_empty() {
        return Vec::new();
    }
    let i_lo = r.lo.i.max(level - r.hi.j);
    let i_hi = r.hi.i.min(level - r.lo.j);
    (i_lo..i_hi)
        .map(|i| {
            let (p, q) = (LatticePoint::new(i, level - i), LatticePoint::new(i + 1, level - i - 1));
            b.value(q).expect("inside the field") - b.value(p).expect("inside the field")
        })
        .collect()
}

/// Moments, KS distance to the Laplace law of scale 2, and lag-1 correlation
/// within each anti-diagonal.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IncrementSummary {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub ks_distance: f64,
    pub lag1: f64,
}

/// Summary of increments grouped by anti-diagonal (lag-1 pairs never cross groups).
pub fn increment_summary(groups: &[Vec<f64>]) -> Result<IncrementSummary> {
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    if all.len() < MIN_INCREMENTS {
        return Err(Error::InsufficientData { needed: MIN_INCREMENTS, got: all.len() });
    }
    let m = moments(&all);
    let pairs: Vec<(f64, f64)> = groups.iter().flat_map(|g| g.windows(2).map(|w| (w[0], w[1]))).collect();
    Ok(IncrementSummary {
        count: m.count,
        mean: m.mean,
        variance: m.variance,
        ks_distance: ks_statistic(&all, laplace_cdf(INCREMENT_SCALE))?,
        lag1: super::correlation(&pairs),
    })
}

/// Tests up to `count` increments along one anti-diagonal of `b` within `region`.
pub fn busemann_increment_test(b: &BusemannField, level: i64, region: Rect, count: usize) -> Result<IncrementSummary> {
    let mut z = antidiagonal_increments(b, level, region);
    z.truncate(count);
    increment_summary(&[z])
}

/// Moments, KS distance to exp(1), lag-1 correlation along rows and minimum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualWeightLaw {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub ks_distance: f64,
    pub lag1: f64,
    pub min: f64,
}

pub fn dual_weight_law(groups: &[Vec<f64>]) -> Result<DualWeightLaw> {
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    if all.len() < MIN_INCREMENTS {
        return Err(Error::InsufficientData { needed: MIN_INCREMENTS, got: all.len() });
    }
    let m = moments(&all);
    let pairs: Vec<(f64, f64)> = groups.iter().flat_map(|g| g.windows(2).map(|w| (w[0], w[1]))).collect();
    Ok(DualWeightLaw {
        count: m.count,
        mean: m.mean,
        variance: m.variance,
        ks_distance: ks_statistic(&all, exp_cdf(1.0))?,
        lag1: super::correlation(&pairs),
        min: all.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

/// Values pooled over replicas from the certified part of each window.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertifiedSample {
    /// Values grouped by (replica, line); lag-1 pairs never cross groups.
    pub groups: Vec<Vec<f64>>,
    pub certificates: Vec<StabilizationCertificate>,
}

impl CertifiedSample {
    pub fn len(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Single-column export with the given header.
    pub fn to_csv(&self, header: &str) -> String {
        let mut out = format!("{header}\n");
        for z in self.groups.iter().flatten() {
            let _ = writeln!(out, "{z:?}");
        }
        out
    }
}

/// Runs `extract` on the down Busemann field of replica after replica
/// (seeds `replica_seed(seed, r)`) over its certified rectangle, until
/// `count` values are collected. Replicas are processed in fixed batches, so
/// the result does not depend on the worker count. Gives up after
/// `max_replicas`.
fn collect_certified<F>(
    seed: u64,
    side: i64,
    k: i64,
    count: usize,
    max_replicas: usize,
    extract: F,
) -> Result<CertifiedSample>
where
    F: Fn(&BusemannField, Rect) -> Result<Vec<Vec<f64>>> + Sync,
{
    let window = Window::centered(side, 2 * k + side)?;
    let per_replica = |r: usize| -> Result<(Vec<Vec<f64>>, StabilizationCertificate)> {
        let x = WeightField::new(replica_seed(seed, r as u64), window);
        let cert = certify_stabilization(&x, &window, k, Direction::Down)?;
        if cert.is_empty() {
            return Ok((Vec::new(), cert));
        }
        let b = busemann_field(&x, &window, k, Direction::Down)?;
        Ok((extract(&b, cert.certified)?, cert))
    };
    let batch = 16;
    let mut sample = CertifiedSample { groups: Vec::new(), certificates: Vec::new() };
    let mut next = 0;
    while sample.len() < count {
        if next >= max_replicas {
            return Err(Error::InsufficientCertification {
                message: format!("{} certified values from {next} replicas, {count} requested", sample.len()),
                certificates: sample.certificates,
            });
        }
        let n = batch.min(max_replicas - next);
        for (groups, cert) in try_map_indexed(n, |r| per_replica(next + r))? {
            if sample.len() < count {
                sample.groups.extend(groups.into_iter().filter(|g| !g.is_empty()));
                sample.certificates.push(cert);
            }
        }
        next += n;
    }
    Ok(sample)
}

/// Down Busemann increments along every anti-diagonal of the certified square.
pub fn certified_increments(
    seed: u64,
    side: i64,
    k: i64,
    count: usize,
    max_replicas: usize,
) -> Result<CertifiedSample> {
    collect_certified(seed, side, k, count, max_replicas, |b, c| {
        Ok((c.lo.level()..=c.hi.level()).map(|l| antidiagonal_increments(b, l, c)).collect())
    })
}

/// Dual weights `min(B(p + e1), B(p + e2)) - B(p)` on the certified square,
/// row by row.
pub fn certified_dual_weights(
    seed: u64,
    side: i64,
    k: i64,
    count: usize,
    max_replicas: usize,
) -> Result<CertifiedSample> {
    collect_certified(seed, side, k, count, max_replicas, |b, c| {
        let rect = Rect::new(c.lo, c.hi.offset(-1, -1));
        if rect.is_empty() {
            return Ok(Vec::new());
        }
        let dual = dual_weights(b, rect)?;
        Ok(dual.grid().values().chunks(rect.width() as usize).map(<[f64]>::to_vec).collect())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn increments_telescope_along_the_antidiagonal() {
        let window = Window::centered(16, 64).unwrap();
        let x = WeightField::new(3, window);
        let b = busemann_field(&x, &window, 32, Direction::Down).unwrap();
        let z = antidiagonal_increments(&b, 0, window.rect());
        assert_eq!(z.len(), 14);
        let total: f64 = z.iter().sum();
        let (p, q) = (LatticePoint::new(-7, 7), LatticePoint::new(7, -7));
        assert_eq!(total, b.value(q).unwrap() - b.value(p).unwrap());
        assert!(antidiagonal_increments(&b, 100, window.rect()).is_empty());
    }

    #[test]
    fn too_few_increments_is_an_error() {
        let window = Window::centered(16, 64).unwrap();
        let x = WeightField::new(3, window);
        let b = busemann_field(&x, &window, 32, Direction::Down).unwrap();
        assert!(matches!(busemann_increment_test(&b, 0, window.rect(), 5000), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn pooled_increments_follow_the_laplace_law() {
        let s = certified_increments(1, 64, 256, 4000, 400).unwrap();
        assert!(s.len() >= 4000);
        let m = increment_summary(&s.groups).unwrap();
        assert!(m.mean.abs() < 0.3, "{m:?}");
        assert!((m.variance - 8.0).abs() < 1.2, "{m:?}");
        assert!(m.ks_distance < 0.05, "{m:?}");
        assert_eq!(s, certified_increments(1, 64, 256, 4000, 400).unwrap());
    }

    #[test]
    fn pooled_dual_weights_are_exponential() {
        let s = certified_dual_weights(2, 64, 256, 4000, 400).unwrap();
        let law = dual_weight_law(&s.groups).unwrap();
        assert!(law.min > 0.0);
        assert!((law.mean - 1.0).abs() < 0.1 && (law.variance - 1.0).abs() < 0.2, "{law:?}");
        assert!(law.ks_distance < 0.05 && law.lag1.abs() < 0.1, "{law:?}");
    }

    #[test]
    fn exhausting_replicas_reports_certificates() {
        assert!(matches!(certified_increments(1, 16, 16, 1_000_000, 2), Err(Error::InsufficientCertification { .. })));
    }
}
