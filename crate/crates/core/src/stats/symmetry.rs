use serde::Serialize;

use super::exponents::size_replica_seed;
use super::ks::{ks_two_sample, ks_two_sample_critical};
use crate::error::{Error, Result};
use crate::lattice::{LatticePoint, WeightField, Window};
use crate::lpp::passage_time;
use crate::parallel::try_map_indexed;
use crate::scaling::{rescale_value, ScalingParams};

/// Two-sample KS distance against its critical value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwoSampleTest {
    pub sizes: (usize, usize),
    pub statistic: f64,
    pub critical: f64,
    pub alpha: f64,
}

impl TwoSampleTest {
    fn new(a: &[f64], b: &[f64], alpha: f64) -> Result<Self> {
        Ok(TwoSampleTest {
            sizes: (a.len(), b.len()),
            statistic: ks_two_sample(a, b)?,
            critical: ks_two_sample_critical(a.len(), b.len(), alpha),
            alpha,
        })
    }

    pub fn passes(&self) -> bool {
        self.statistic < self.critical
    }
}

/// KS distance between a sample and its mirror image.
pub fn flip_symmetry_test(samples: &[f64], alpha: f64) -> Result<TwoSampleTest> {
    let flipped: Vec<f64> = samples.iter().map(|z| -z).collect();
    TwoSampleTest::new(samples, &flipped, alpha)
}

/// Rescaled point-to-point values from the origin to `horizon * n * v`, one
/// per replica; `horizon * n` must be a positive integer.
pub fn landscape_values(seed: u64, n: i64, horizon: f64, replicas: usize) -> Result<Vec<f64>> {
    let params = ScalingParams::new(n)?;
    let m = horizon * n as f64;
    if !(m >= 1.0) || m.fract() != 0.0 {
        return Err(Error::Precondition(format!(
            "horizon {horizon} at n = {n} is not a whole number of lattice steps"
        )));
    }
    let q = LatticePoint::ORIGIN.along_v(m as i64);
    let window = Window::new(LatticePoint::ORIGIN, q, 0)?;
    try_map_indexed(replicas, |r| {
        let x = WeightField::new(size_replica_seed(seed, m as i64, r), window);
        let t = passage_time(&x, LatticePoint::ORIGIN, q)?.expect("origin precedes q");
        rescale_value(t, 0.0, horizon, params)
    })
}

/// Values at horizon `q^3 t` against `q` times values at horizon `t`, same `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingTest {
    pub n: i64,
    pub horizon: f64,
    pub q: f64,
    pub long: Vec<f64>,
    pub scaled_short: Vec<f64>,
    pub test: TwoSampleTest,
}

pub fn kpz_scaling_test(seed: u64, n: i64, horizon: f64, q: f64, replicas: usize, alpha: f64) -> Result<ScalingTest> {
    if !(q > 1.0) {
        return Err(Error::Precondition(format!("scale factor {q} must exceed 1")));
    }
    let long = landscape_values(seed, n, q.powi(3) * horizon, replicas)?;
    let scaled_short: Vec<f64> = landscape_values(seed, n, horizon, replicas)?.into_iter().map(|v| q * v).collect();
    let test = TwoSampleTest::new(&long, &scaled_short, alpha)?;
    Ok(ScalingTest { n, horizon, q, long, scaled_short, test })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::midpoint_displacements;

    #[test]
    fn symmetric_and_skewed_samples() {
        let sym: Vec<f64> = (-500..=500).map(|k| k as f64).collect();
        assert_eq!(flip_symmetry_test(&sym, 0.05).unwrap().statistic, 0.0);
        let skew: Vec<f64> = (0..1000).map(|k| k as f64).collect();
        assert!(!flip_symmetry_test(&skew, 0.05).unwrap().passes());
    }

    #[test]
    fn displacements_are_flip_symmetric() {
        let d = midpoint_displacements(4, 64, 400).unwrap();
        let t = flip_symmetry_test(&d, 0.01).unwrap();
        assert!(t.passes(), "{t:?}");
    }

    #[test]
    fn horizon_must_be_whole() {
        assert!(landscape_values(1, 10, 0.25, 4).is_err());
        assert!(landscape_values(1, 8, 0.25, 4).unwrap().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn values_obey_one_two_three_scaling() {
        let s = kpz_scaling_test(2, 32, 1.0, 2.0, 200, 0.01).unwrap();
        assert!(s.test.passes(), "{:?}", s.test);
        // without the factor q the two ensembles are far apart
        let unscaled: Vec<f64> = s.scaled_short.iter().map(|v| v / 2.0).collect();
        assert!(ks_two_sample(&s.long, &unscaled).unwrap() > s.test.critical);
    }
}
