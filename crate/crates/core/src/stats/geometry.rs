use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{LatticePoint, Step, Weights, Window};
use crate::lpp::{geodesics_from, LatticePath};
use crate::parallel::try_map_indexed;
use crate::scaling::{landscape_point_to_lattice, ScalingParams};

/// Endpoints at rescaled positions `xs` on the two time lines `s < t`;
/// every (bottom, top) pair is joined by a geodesic.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EndpointGrid {
    pub s: f64,
    pub t: f64,
    pub xs: Vec<f64>,
}

impl EndpointGrid {
    /// `count` equally spaced positions covering `[x_lo, x_hi]`.
    pub fn uniform(s: f64, t: f64, x_lo: f64, x_hi: f64, count: usize) -> Self {
        let xs = match count {
            0 => Vec::new(),
            1 => vec![(x_lo + x_hi) / 2.0],
            _ => (0..count).map(|k| x_lo + (x_hi - x_lo) * k as f64 / (count - 1) as f64).collect(),
        };
        EndpointGrid { s, t, xs }
    }

    /// Same range with twice as many positions per line.
    pub fn refined(&self) -> Self {
        let (lo, hi) = self.xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        EndpointGrid::uniform(self.s, self.t, lo, hi, 2 * self.xs.len())
    }

    /// Distinct lattice endpoints on the bottom and top lines.
    pub fn lattice_endpoints(&self, params: ScalingParams) -> (Vec<LatticePoint>, Vec<LatticePoint>) {
        let line = |t: f64| {
            let mut v: Vec<LatticePoint> = self.xs.iter().map(|&x| landscape_point_to_lattice(x, t, params)).collect();
            v.dedup();
            v
        };
        (line(self.s), line(self.t))
    }

    /// A window holding every endpoint, with room for paths between them.
    pub fn window(&self, params: ScalingParams) -> Result<Window> {
        let (bottom, top) = self.lattice_endpoints(params);
        let all = || bottom.iter().chain(&top);
        let Some(first) = all().next() else {
            return Err(Error::Precondition("empty endpoint grid".into()));
        };
        let lo = all().fold(*first, |a, p| LatticePoint::new(a.i.min(p.i), a.j.min(p.j)));
        let hi = all().fold(*first, |a, p| LatticePoint::new(a.i.max(p.i), a.j.max(p.j)));
        Window::new(lo, hi, 0)
    }
}

/// Geodesics for all ordered (bottom, top) pairs, bottom-major.
pub fn grid_geodesics<W: Weights + ?Sized>(
    x: &W,
    params: ScalingParams,
    grid: &EndpointGrid,
) -> Result<Vec<LatticePath>> {
    if !(grid.s < grid.t) {
        return Err(Error::Ordering(format!("endpoint lines {} and {} are not ordered", grid.s, grid.t)));
    }
    let (bottom, top) = grid.lattice_endpoints(params);
    let per_source = try_map_indexed(bottom.len(), |k| {
        let p = bottom[k];
        let targets: Vec<LatticePoint> = top.iter().copied().filter(|q| p.leq(*q)).collect();
        geodesics_from(x, p, &targets)
    })?;
    Ok(per_source.into_iter().flatten().collect())
}

/// Lattice levels `i + j` whose rescaled time lies in `[a, b]`.
fn level_range(params: ScalingParams, (a, b): (f64, f64)) -> (i64, i64) {
    let n2 = 2.0 * params.n as f64;
    ((a * n2).ceil() as i64, (b * n2).floor() as i64)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HighwayCensus {
    pub pairs: usize,
    pub distinct: usize,
}

/// Number of distinct restrictions of the grid geodesics to the time strip.
pub fn highway_census<W: Weights + ?Sized>(
    x: &W,
    params: ScalingParams,
    strip: (f64, f64),
    grid: &EndpointGrid,
) -> Result<HighwayCensus> {
    if !(grid.s < strip.0 && strip.0 < strip.1 && strip.1 < grid.t) {
        return Err(Error::Precondition(format!("strip {strip:?} is not strictly between {} and {}", grid.s, grid.t)));
    }
    let (lo, hi) = level_range(params, strip);
    let paths = grid_geodesics(x, params, grid)?;
    let mut seen: HashSet<(LatticePoint, Vec<Step>)> = HashSet::new();
    for g in &paths {
        if g.start.level() > lo || g.end().level() < hi {
            return Err(Error::Precondition(format!(
                "strip {strip:?} is not covered by the geodesic from {}",
                g.start
            )));
        }
        let skip = (lo - g.start.level()).max(0) as usize;
        let take = (hi - lo) as usize;
        let start = g.points()[skip];
        seen.insert((start, g.steps[skip..skip + take].to_vec()));
    }
    Ok(HighwayCensus { pairs: paths.len(), distinct: seen.len() })
}

/// Rescaled rectangle `t in [t0, t1]`, `x in [x0, x1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RescaledWindow {
    pub t: (f64, f64),
    pub x: (f64, f64),
}

impl RescaledWindow {
    /// Lattice vertices whose rescaled position lies in the window.
    pub fn lattice_points(&self, params: ScalingParams) -> Vec<LatticePoint> {
        let (l0, l1) = level_range(params, self.t);
        let c = params.spatial_prefactor();
        let mut out = Vec::new();
        for level in l0..=l1 {
            // x = (i - j) / 2 with i - j of the same parity as the level
            let d_lo = (2.0 * self.x.0 * c).ceil() as i64;
            let d_hi = (2.0 * self.x.1 * c).floor() as i64;
            for d in d_lo..=d_hi {
                if (d - level).rem_euclid(2) == 0 {
                    out.push(LatticePoint::new((level + d) / 2, (level - d) / 2));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameCoverage {
    pub covered: usize,
    pub total: usize,
    pub fraction: f64,
}

/// Fraction of the window's vertices lying in the interior of at least one
/// grid geodesic.
pub fn frame_coverage<W: Weights + ?Sized>(
    x: &W,
    params: ScalingParams,
    window: RescaledWindow,
    grid: &EndpointGrid,
) -> Result<FrameCoverage> {
    let points = window.lattice_points(params);
    let total = points.len();
    if grid.xs.is_empty() || total == 0 {
        return Ok(FrameCoverage { covered: 0, total, fraction: 0.0 });
    }
    let inside: HashSet<LatticePoint> = points.into_iter().collect();
    let mut covered: HashSet<LatticePoint> = HashSet::new();
    for g in grid_geodesics(x, params, grid)? {
        let pts = g.points();
        if pts.len() > 2 {
            covered.extend(pts[1..pts.len() - 1].iter().filter(|p| inside.contains(p)));
        }
    }
    Ok(FrameCoverage { covered: covered.len(), total, fraction: covered.len() as f64 / total as f64 })
}
