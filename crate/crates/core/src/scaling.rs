//! Maps between lattice quantities and directed-landscape coordinates.
//!
//! Lattice time runs along `v = (1,1)` and space along `w = (1,-1)`; a
//! lattice point `m v + x w` sits at rescaled time `m / n` and position
//! `2^{-2/3} n^{-2/3} x`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lattice::{box_of, LatticePoint, Weights};
use crate::lpp::{geodesic, LatticePath};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScalingParams {
    pub n: i64,
}

impl ScalingParams {
    pub fn new(n: i64) -> Result<Self> {
        if n <= 0 {
            return Err(Error::Config(format!("scale parameter must be positive, got {n}")));
        }
        Ok(ScalingParams { n })
    }

    /// `2^{-4/3} n^{-1/3}`
    pub fn value_prefactor(&self) -> f64 {
        2f64.powf(-4.0 / 3.0) * (self.n as f64).powf(-1.0 / 3.0)
    }

    /// `2^{2/3} n^{2/3}`, lattice units per unit of rescaled space.
    pub fn spatial_prefactor(&self) -> f64 {
        2f64.powf(2.0 / 3.0) * (self.n as f64).powf(2.0 / 3.0)
    }

    /// `2^{-2/3} n^{-2/3}`, rescaled space per lattice unit.
    pub fn path_prefactor(&self) -> f64 {
        2f64.powf(-2.0 / 3.0) * (self.n as f64).powf(-2.0 / 3.0)
    }
}

/// `2^{-4/3} n^{-1/3} (T - 4 (t - s) n)`.
pub fn rescale_value(value: f64, s: f64, t: f64, params: ScalingParams) -> Result<f64> {
    if !(s < t) {
        return Err(Error::Ordering(format!("need s < t, got s = {s}, t = {t}")));
    }
    Ok(params.value_prefactor() * (value - 4.0 * (t - s) * params.n as f64))
}

/// The lattice point whose tile contains `t n v + 2^{2/3} x n^{2/3} w`.
pub fn landscape_point_to_lattice(x: f64, t: f64, params: ScalingParams) -> LatticePoint {
    let m = t * params.n as f64;
    let d = x * params.spatial_prefactor();
    box_of((m + d, m - d))
}

/// Piecewise linear function of rescaled time, sampled at strictly
/// increasing times. A skew is kept separately so that skewing and
/// unskewing is an exact round trip.
#[derive(Clone, Debug, PartialEq)]
pub struct RescaledPath {
    times: Vec<f64>,
    base: Vec<f64>,
    skew: f64,
}

impl RescaledPath {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Precondition("a rescaled path needs at least one sample".into()));
        }
        if samples.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::Ordering("sample times must be strictly increasing".into()));
        }
        let (times, base) = samples.into_iter().unzip();
        Ok(RescaledPath { times, base, skew: 0.0 })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.times[0], self.times[self.times.len() - 1])
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn sample(&self, k: usize) -> (f64, f64) {
        let t = self.times[k];
        (t, self.base[k] + self.skew * t)
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.len()).map(|k| self.sample(k))
    }

    /// Linear interpolation; `None` outside the domain.
    pub fn eval(&self, t: f64) -> Option<f64> {
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return None;
        }
        let k = self.times.partition_point(|&s| s <= t);
        if k == self.len() {
            return Some(self.sample(k - 1).1);
        }
        let (t0, x0) = self.sample(k - 1);
        let (t1, x1) = self.sample(k);
        Some(x0 + (x1 - x0) * (t - t0) / (t1 - t0))
    }

    /// The samples with times in `[lo, hi]`, with the skew applied.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<RescaledPath> {
        RescaledPath::new(self.samples().filter(|(t, _)| *t >= lo && *t <= hi).collect())
    }

    /// Export with header `t,x`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x\n");
        for (t, x) in self.samples() {
            let _ = writeln!(out, "{t:e},{x:e}");
        }
        out
    }
}

/// Rescales a lattice path (primal or dual) sample by sample: each vertex at
/// rotated `(m, x)` becomes `(m / n, 2^{-2/3} n^{-2/3} x)`.
pub fn rescale_path(path: &LatticePath, params: ScalingParams) -> Result<RescaledPath> {
    let n = params.n as f64;
    let c = params.path_prefactor();
    let samples = path.rotated().into_iter().map(|r| (r.m() / n, c * r.x())).collect();
    RescaledPath::new(samples)
}

/// `x(t) -> x(t) + theta t` on the same domain.
pub fn skew_transform(path: &RescaledPath, theta: f64) -> RescaledPath {
    RescaledPath { skew: path.skew + theta, ..path.clone() }
}

/// Rescaled passage value and geodesic between two landscape points.
pub fn landscape_geodesic<W: Weights + ?Sized>(
    x: &W,
    from: (f64, f64),
    to: (f64, f64),
    params: ScalingParams,
) -> Result<(f64, RescaledPath)> {
    let (x1, s) = from;
    let (x2, t) = to;
    if !(s < t) {
        return Err(Error::Ordering(format!("need s < t, got s = {s}, t = {t}")));
    }
    let p = landscape_point_to_lattice(x1, s, params);
    let q = landscape_point_to_lattice(x2, t, params);
    let path = geodesic(x, p, q)?;
    let value = rescale_value(path.weight(x), s, t, params)?;
    Ok((value, rescale_path(&path, params)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{in_box, Step, Sublattice, WeightField, Window};
    use crate::lpp::passage_time;
    use proptest::prelude::*;

    fn p(n: i64) -> ScalingParams {
        ScalingParams::new(n).unwrap()
    }

    #[test]
    fn value_examples() {
        assert_eq!(rescale_value(4.0 * 3.0 * 5.0, 1.0, 4.0, p(5)).unwrap(), 0.0);
        assert_eq!(rescale_value(4.0, 0.0, 1.0, p(1)).unwrap(), 0.0);
        let v = rescale_value(36.0, 0.0, 1.0, p(8)).unwrap();
        assert!((v - 2f64.powf(2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert!((v - 0.7937).abs() < 1e-4);
        assert!(matches!(rescale_value(1.0, 1.0, 1.0, p(1)), Err(Error::Ordering(_))));
        assert!(ScalingParams::new(0).is_err());
    }

    #[test]
    fn landscape_point_examples() {
        for n in [1, 7, 64] {
            assert_eq!(landscape_point_to_lattice(0.0, 0.0, p(n)), LatticePoint::new(0, 0));
        }
        assert_eq!(landscape_point_to_lattice(0.0, 1.0, p(1)), LatticePoint::new(1, 1));
        // resolve the tile of 2^{2/3} w by enumeration
        let a = 2f64.powf(2.0 / 3.0);
        let q = (a, -a);
        let mut hits = Vec::new();
        for i in -4..=4 {
            for j in -4..=4 {
                if in_box(LatticePoint::new(i, j), q) {
                    hits.push(LatticePoint::new(i, j));
                }
            }
        }
        assert_eq!(hits, vec![LatticePoint::new(2, -2)]);
        assert_eq!(landscape_point_to_lattice(1.0, 0.0, p(1)), hits[0]);
    }

    #[test]
    fn single_step_slope() {
        for n in [1, 8, 1000] {
            let path = LatticePath::new(Sublattice::Primal, LatticePoint::new(0, 0), vec![Step::Right]);
            let r = rescale_path(&path, p(n)).unwrap();
            let (t0, x0) = r.sample(0);
            let (t1, x1) = r.sample(1);
            let slope = (x1 - x0) / (t1 - t0);
            let expect = 2f64.powf(-2.0 / 3.0) * (n as f64).powf(1.0 / 3.0);
            assert!((slope - expect).abs() < 1e-9 * expect, "n = {n}");
        }
    }

    #[test]
    fn constant_path_rescales_to_zero() {
        // alternating steps keep x in {0, 1/2}; the straight diagonal in the
        // rotated view is x = 0 at integer m
        let steps = vec![Step::Right, Step::Up, Step::Right, Step::Up];
        let path = LatticePath::new(Sublattice::Primal, LatticePoint::new(0, 0), steps);
        let r = rescale_path(&path, p(16)).unwrap();
        for k in (0..r.len()).step_by(2) {
            assert_eq!(r.sample(k).1, 0.0);
        }
    }

    #[test]
    fn interpolation_is_linear() {
        let r = RescaledPath::new(vec![(0.0, 0.0), (1.0, 2.0), (3.0, 0.0)]).unwrap();
        assert_eq!(r.eval(0.5), Some(1.0));
        assert_eq!(r.eval(2.0), Some(1.0));
        assert_eq!(r.eval(3.0), Some(0.0));
        assert_eq!(r.eval(3.5), None);
        assert!(RescaledPath::new(vec![(0.0, 0.0), (0.0, 1.0)]).is_err());
        let csv = r.to_csv();
        assert!(csv.starts_with("t,x\n"));
        assert_eq!(csv.lines().count(), 4);
    }

    #[test]
    fn dual_paths_sample_at_their_own_times() {
        let path = LatticePath::new(Sublattice::Dual, LatticePoint::new(0, 0), vec![Step::Up]);
        let r = rescale_path(&path, p(2)).unwrap();
        assert_eq!(r.sample(0).0, 0.25);
        assert_eq!(r.sample(1).0, 0.5);
    }

    #[test]
    fn skew_examples() {
        let r = RescaledPath::new(vec![(0.0, 0.1), (0.5, -0.3), (1.25, 0.7)]).unwrap();
        assert_eq!(skew_transform(&r, 0.0), r);
        let s = skew_transform(&r, 0.37);
        assert_eq!(s.domain(), r.domain());
        assert!((s.sample(2).1 - (0.7 + 0.37 * 1.25)).abs() < 1e-15);
        assert_eq!(skew_transform(&s, -0.37), r);
    }

    #[test]
    fn value_along_a_geodesic_matches_the_passage_time() {
        let x = WeightField::new(5, Window::centered(64, 0).unwrap());
        let params = p(16);
        let (value, path) = landscape_geodesic(&x, (-0.2, -1.0), (0.3, 1.0), params).unwrap();
        let a = landscape_point_to_lattice(-0.2, -1.0, params);
        let b = landscape_point_to_lattice(0.3, 1.0, params);
        let t = passage_time(&x, a, b).unwrap().unwrap();
        assert_eq!(value, rescale_value(t, -1.0, 1.0, params).unwrap());
        let (t0, t1) = path.domain();
        assert!((t0 + 1.0).abs() <= 0.5 / 16.0 && (t1 - 1.0).abs() <= 0.5 / 16.0);
    }

    proptest! {
        #[test]
        fn skew_round_trip_is_exact(theta in -10.0f64..10.0, xs in proptest::collection::vec(-5.0f64..5.0, 1..20)) {
            let samples = xs.iter().enumerate().map(|(k, &x)| (k as f64 * 0.5, x)).collect();
            let r = RescaledPath::new(samples).unwrap();
            prop_assert_eq!(skew_transform(&skew_transform(&r, theta), -theta), r);
        }

        #[test]
        fn lattice_round_trip_within_a_tile(i in -500i64..500, j in -500i64..500, n in 1i64..4096) {
            let params = p(n);
            let q = LatticePoint::new(i, j);
            let path = LatticePath::new(Sublattice::Primal, q, vec![]);
            let (t, x) = rescale_path(&path, params).unwrap().sample(0);
            let back = landscape_point_to_lattice(x, t, params);
            prop_assert!((back.i - q.i).abs() <= 1 && (back.j - q.j).abs() <= 1);
        }
    }
}
