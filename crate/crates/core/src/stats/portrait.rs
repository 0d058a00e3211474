use std::collections::HashSet;

use serde::Serialize;

use crate::duality::{interface_portrait, trace_interface, InterfaceForest};
use crate::error::{Error, Result};
use crate::lattice::{replica_seed, LatticePoint, WeightField, Window};
use crate::scaling::ScalingParams;
use crate::trees::{build_tree, first_meeting, meeting_census, Direction, StepField, TrifurcationCensus};

/// Stored dual sources on the level-0 anti-diagonal, `spacing` apart in
/// rotated `x` and centred on the origin.
pub fn top_sources(k: usize, spacing: i64) -> Vec<LatticePoint> {
    let span = spacing * (k as i64 - 1).max(0);
    (0..k as i64).map(|s| spacing * s - span / 2).map(|a| LatticePoint::new(a, -a)).collect()
}

/// Lattice source spacing and heights (in rotated time) for sources
/// `spacing` apart in rescaled space and heights `multiples * spacing` in
/// rescaled time, at scale `n`.
pub fn landscape_sweep(n: i64, spacing: f64, multiples: &[f64]) -> Result<(i64, Vec<i64>)> {
    let params = ScalingParams::new(n)?;
    let lattice_spacing = (spacing * params.spatial_prefactor()).round() as i64;
    let heights: Vec<i64> = multiples.iter().map(|m| (m * spacing * n as f64).round() as i64).collect();
    if lattice_spacing < 1 || heights.iter().any(|&h| h < 1) {
        return Err(Error::Precondition(format!(
            "spacing {spacing} with height multiples {multiples:?} is below one lattice step at n = {n}"
        )));
    }
    Ok((lattice_spacing, heights))
}

/// Sweep result for one seed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PortraitSweep {
    pub seed: u64,
    pub heights: Vec<i64>,
    /// Fraction of neighbouring source pairs whose traces meet within each height.
    pub fractions: Vec<f64>,
    /// Trifurcation count of the traces cut at each height.
    pub trifurcations: Vec<usize>,
    /// Whether the traces down to each height agree at root distances K and 2K.
    pub certified: Vec<bool>,
}

/// Traces `k` interfaces of the down portrait (interlacing an up tree) from
/// sources on the top line and records, for each height `h` (in rotated
/// time), which neighbouring pairs have met by depth `h`.
///
/// One window holds the deepest height; a trace descending `h` moves at most
/// `h` sideways, so no trace leaves the window before that depth.
pub fn portrait_sweep(seed: u64, heights: &[i64], k: usize, spacing: i64) -> Result<PortraitSweep> {
    if k < 1 || spacing < 1 || heights.iter().any(|&h| h < 1) {
        return Err(Error::Precondition(format!(
            "need k >= 1, spacing >= 1 and positive heights (k {k}, spacing {spacing})"
        )));
    }
    let deepest = heights.iter().copied().max().unwrap_or(1);
    let sources = top_sources(k, spacing);
    let half_width = spacing * (k as i64 - 1) / 2 + spacing + deepest;
    let lo = LatticePoint::new(-deepest - half_width, -deepest - half_width);
    let hi = LatticePoint::new(half_width, half_width);
    let root_distance = 4 * (hi.i - lo.i + 1);
    let window = Window::new(lo, hi, 2 * root_distance + (hi.i - lo.i + 1))?;
    let x = WeightField::new(seed, window);
    let near = interface_portrait(&build_tree(&x, &window, Direction::Up, root_distance)?);
    let far = interface_portrait(&build_tree(&x, &window, Direction::Up, 2 * root_distance)?);
    let census = meeting_census(&near, &sources);
    let meetings: Vec<Option<i64>> =
        sources.windows(2).map(|w| first_meeting(&near, w[0], w[1]).map(|c| c.level())).collect();
    let mut fractions = Vec::with_capacity(heights.len());
    let mut trifurcations = Vec::with_capacity(heights.len());
    let mut certified = Vec::with_capacity(heights.len());
    for &h in heights {
        let floor = -2 * h;
        let met = meetings.iter().filter(|m| m.is_some_and(|l| l >= floor)).count();
        fractions.push(if meetings.is_empty() { 1.0 } else { met as f64 / meetings.len() as f64 });
        trifurcations.push(census.points.iter().filter(|c| c.level() >= floor).count());
        certified.push(sources.iter().all(|&s| same_trace(&near, &far, s, floor)));
    }
    Ok(PortraitSweep { seed, heights: heights.to_vec(), fractions, trifurcations, certified })
}

fn same_trace(a: &InterfaceForest, b: &InterfaceForest, s: LatticePoint, floor: i64) -> bool {
    let mut c = s;
    while c.level() > floor {
        match (a.step_at(c), b.step_at(c)) {
            (Some(u), Some(v)) if u == v => c = c.step(u),
            _ => return false,
        }
    }
    true
}

/// Mean coalescence fraction per height over seeds `replica_seed(seed, r)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OneEndedness {
    pub heights: Vec<i64>,
    pub fractions: Vec<f64>,
    pub sweeps: Vec<PortraitSweep>,
}

impl OneEndedness {
    pub fn is_nondecreasing(&self) -> bool {
        self.fractions.windows(2).all(|w| w[0] <= w[1])
    }
}

pub fn portrait_one_endedness(
    seed: u64,
    heights: &[i64],
    k: usize,
    spacing: i64,
    seeds: usize,
) -> Result<OneEndedness> {
    if seeds == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut sorted = heights.to_vec();
    sorted.sort_unstable();
    let sweeps =
        crate::parallel::try_map_indexed(seeds, |r| portrait_sweep(replica_seed(seed, r as u64), &sorted, k, spacing))?;
    let fractions =
        (0..sorted.len()).map(|h| sweeps.iter().map(|s| s.fractions[h]).sum::<f64>() / seeds as f64).collect();
    Ok(OneEndedness { heights: sorted, fractions, sweeps })
}

/// Rescaled interface traces from `sources`, as a point set, with the
/// trifurcation points where traces first meet.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NuSet {
    pub points: Vec<(f64, f64)>,
    pub trifurcations: TrifurcationCensus,
}

pub fn nu_set_points(portrait: &InterfaceForest, sources: &[LatticePoint], params: ScalingParams) -> Result<NuSet> {
    let mut seen: HashSet<LatticePoint> = HashSet::new();
    let mut points = Vec::new();
    let (n, c) = (params.n as f64, params.path_prefactor());
    for &s in sources {
        let trace = trace_interface(portrait, s)?;
        let mut q = s;
        for step in std::iter::once(None).chain(trace.steps.iter().map(Some)) {
            if let Some(st) = step {
                q = q.step(*st);
            }
            if portrait.rect().contains(q) && seen.insert(q) {
                let (pi, pj) = portrait.position(q);
                points.push(((pi + pj) / 2.0 / n, c * (pi - pj) / 2.0));
            }
        }
    }
    Ok(NuSet { points, trifurcations: meeting_census(portrait, sources) })
}
