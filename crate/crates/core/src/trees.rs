//! Finite-volume geodesic trees toward a far root, Busemann fields and
//! their stabilization certificates, and coalescence censuses.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{check_domain, Grid, LatticePoint, Rect, Step, Sublattice, Weights, Window};
use crate::lpp::{from_source_over, sweep_from_source, sweep_to_sink, to_sink_over, LatticePath};

const NEG_INF: f64 = f64::NEG_INFINITY;

/// Asymptotic direction of a tree: `Up` is `+v = (1,1)`, `Down` is `-v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn opposite(self) -> Self {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }

    /// The far root for a window centred at `center` at distance `k` along `±v`.
    pub fn root(self, center: LatticePoint, k: i64) -> LatticePoint {
        match self {
            Direction::Up => center.along_v(k),
            Direction::Down => center.along_v(-k),
        }
    }
}

/// A field with at most one outgoing unit step per vertex. Paths follow the
/// steps until a vertex without one.
pub trait StepField {
    fn step_at(&self, p: LatticePoint) -> Option<Step>;

    /// Whether paths move down-left (level decreases) rather than up-right.
    fn descending(&self) -> bool;

    fn next(&self, p: LatticePoint) -> Option<LatticePoint> {
        self.step_at(p).map(|s| p.step(s))
    }
}

/// Vertices visited from `p`, starting with `p` itself.
pub fn follow<F: StepField + ?Sized>(field: &F, p: LatticePoint) -> impl Iterator<Item = LatticePoint> + '_ {
    std::iter::successors(Some(p), move |&c| field.next(c))
}

/// First common vertex of the paths from `p` and `q`, if they meet.
///
/// Both paths change level by one per step, so they can only meet at equal
/// levels: the path that is behind is advanced first, then both in lockstep.
pub fn first_meeting<F: StepField + ?Sized>(field: &F, p: LatticePoint, q: LatticePoint) -> Option<LatticePoint> {
    let ahead = |a: LatticePoint, b: LatticePoint| {
        if field.descending() {
            a.level() > b.level()
        } else {
            a.level() < b.level()
        }
    };
    let (mut a, mut b) = (p, q);
    while ahead(a, b) {
        a = field.next(a)?;
    }
    while ahead(b, a) {
        b = field.next(b)?;
    }
    while a != b {
        a = field.next(a)?;
        b = field.next(b)?;
    }
    Some(a)
}

/// Vertices at which the path from some source first runs into a path
/// from an earlier source.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrifurcationCensus {
    pub points: Vec<LatticePoint>,
    pub count: usize,
}

/// Confluence points of the paths from `sources` in any step field.
pub fn meeting_census<F: StepField + ?Sized>(field: &F, sources: &[LatticePoint]) -> TrifurcationCensus {
    let mut visited: HashSet<LatticePoint> = HashSet::new();
    let mut points: Vec<LatticePoint> = Vec::new();
    for &s in sources {
        for c in follow(field, s) {
            if !visited.insert(c) {
                if !points.contains(&c) {
                    points.push(c);
                }
                break;
            }
        }
    }
    let count = points.len();
    TrifurcationCensus { points, count }
}

/// Steps of the tree toward a far root, one per vertex of a rectangle.
#[derive(Clone, Debug)]
pub struct GeodesicTree {
    pub direction: Direction,
    pub lattice: Sublattice,
    pub window: Window,
    pub root: LatticePoint,
    pub k: i64,
    /// Exact ties resolved while choosing steps (toward the vertical step).
    pub tie_count: u64,
    steps: Grid<Option<Step>>,
}

impl StepField for GeodesicTree {
    fn step_at(&self, p: LatticePoint) -> Option<Step> {
        self.steps.get(p).copied().flatten()
    }

    fn descending(&self) -> bool {
        self.direction == Direction::Down
    }
}

impl GeodesicTree {
    /// Rectangle on which steps are stored (the cone between the window and the root).
    pub fn region(&self) -> Rect {
        self.steps.rect()
    }

    pub fn steps(&self) -> &Grid<Option<Step>> {
        &self.steps
    }

    /// The path from `p` to the root.
    pub fn root_path(&self, p: LatticePoint) -> Result<LatticePath> {
        if !self.region().contains(p) {
            return Err(Error::Precondition(format!("{p} outside the tree region")));
        }
        let mut steps = Vec::new();
        let mut c = p;
        while let Some(s) = self.step_at(c) {
            steps.push(s);
            c = c.step(s);
        }
        if c != self.root {
            return Err(Error::Consistency(format!("path from {p} stops at {c} before the root")));
        }
        Ok(LatticePath::new(self.lattice, p, steps))
    }

    /// Export of the window's steps with header `i,j,step`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,step\n");
        for p in self.window.rect().points() {
            if let Some(s) = self.step_at(p) {
                let _ = writeln!(out, "{},{},{}", p.i, p.j, s.letter());
            }
        }
        out
    }
}

/// Steps toward `root` on `keep`; vertices outside the root's cone get `None`.
fn tree_steps<W: Weights + ?Sized>(
    x: &W,
    root: LatticePoint,
    direction: Direction,
    keep: Rect,
) -> (Grid<Option<Step>>, u64) {
    let mut steps = Grid::filled(keep, None);
    let mut ties = 0;
    let mut prev_values: Vec<f64> = Vec::new();
    let mut prev_weights: Vec<f64> = Vec::new();
    match direction {
        Direction::Down => {
            if !root.leq(keep.hi) {
                return (steps, 0);
            }
            // step(p) points to the predecessor with the larger T(root, .)
            sweep_from_source(x, root, keep.hi, None, |j, i0, row, _| {
                if j >= keep.lo.j {
                    let dst = steps.row_mut(j);
                    for i in i0.max(keep.lo.i)..=keep.hi.i {
                        if i == root.i && j == root.j {
                            continue;
                        }
                        let k = (i - i0) as usize;
                        let left = if k > 0 { row[k - 1] } else { NEG_INF };
                        let below = if j > root.j { prev_values[k] } else { NEG_INF };
                        let s = if below >= left {
                            if below == left {
                                ties += 1;
                            }
                            Step::Down
                        } else {
                            Step::Left
                        };
                        dst[(i - keep.lo.i) as usize] = Some(s);
                    }
                }
                prev_values.clear();
                prev_values.extend_from_slice(row);
            });
        }
        Direction::Up => {
            if !keep.lo.leq(root) {
                return (steps, 0);
            }
            // step(p) points to the successor u maximising X_u + T(u, root)
            sweep_to_sink(x, root, keep.lo, None, |j, i0, row, weights| {
                if j <= keep.hi.j {
                    let dst = steps.row_mut(j);
                    for i in i0..=keep.hi.i.min(root.i) {
                        if i == root.i && j == root.j {
                            continue;
                        }
                        let k = (i - i0) as usize;
                        let right = if k + 1 < row.len() { row[k + 1] + weights[k + 1] } else { NEG_INF };
                        let up = if j < root.j { prev_values[k] + prev_weights[k] } else { NEG_INF };
                        let s = if up >= right {
                            if up == right {
                                ties += 1;
                            }
                            Step::Up
                        } else {
                            Step::Right
                        };
                        dst[(i - keep.lo.i) as usize] = Some(s);
                    }
                }
                prev_values.clear();
                prev_values.extend_from_slice(row);
                prev_weights.clear();
                prev_weights.extend_from_slice(weights);
            });
        }
    }
    (steps, ties)
}

fn cone(window: &Window, root: LatticePoint, direction: Direction) -> Rect {
    match direction {
        Direction::Down => Rect::new(root, window.hi),
        Direction::Up => Rect::new(window.lo, root),
    }
}

/// The tree of geodesics from every vertex of the window (and of the cone
/// between the window and the root) to the root at `window.center() ± k v`.
pub fn build_tree<W: Weights + ?Sized>(x: &W, window: &Window, direction: Direction, k: i64) -> Result<GeodesicTree> {
    build_tree_on(x, window, direction, k, Sublattice::Primal)
}

pub(crate) fn build_tree_on<W: Weights + ?Sized>(
    x: &W,
    window: &Window,
    direction: Direction,
    k: i64,
    lattice: Sublattice,
) -> Result<GeodesicTree> {
    if k < window.side() {
        return Err(Error::Precondition(format!("root distance {k} is below the window side {}", window.side())));
    }
    let root = direction.root(window.center(), k);
    if !window.enlarged().contains(root) {
        return Err(Error::Config(format!("root {root} lies outside the enlarged window (margin {})", window.margin)));
    }
    let region = cone(window, root, direction);
    check_domain(x, &region, "geodesic tree")?;
    let (steps, tie_count) = tree_steps(x, root, direction, region);
    Ok(GeodesicTree { direction, lattice, window: *window, root, k, tie_count, steps })
}

/// First common vertex of the root-paths of `p` and `q`.
pub fn coalescence_point(tree: &GeodesicTree, p: LatticePoint, q: LatticePoint) -> Result<LatticePoint> {
    for c in [p, q] {
        if !tree.region().contains(c) {
            return Err(Error::Precondition(format!("{c} outside the tree region")));
        }
    }
    first_meeting(tree, p, q).ok_or_else(|| Error::Consistency(format!("root-paths of {p} and {q} never meet")))
}

/// Confluence points of the root-paths from `sources`; at most
/// `sources.len() - 1` of them.
pub fn trifurcation_census(tree: &GeodesicTree, sources: &[LatticePoint]) -> Result<TrifurcationCensus> {
    if let Some(s) = sources.iter().find(|s| !tree.region().contains(**s)) {
        return Err(Error::Precondition(format!("source {s} outside the tree region")));
    }
    Ok(meeting_census(tree, sources))
}

/// `B(p) = T(S, p) - T(S, origin)` for a far source `S` (down fields), or
/// `T(p, R) - T(origin, R)` for a far sink `R` (up fields).
#[derive(Clone, Debug)]
pub struct BusemannField {
    pub direction: Direction,
    pub window: Window,
    pub source_distance: i64,
    /// The far source or sink.
    pub anchor: LatticePoint,
    values: Grid<f64>,
}

impl BusemannField {
    pub fn value(&self, p: LatticePoint) -> Option<f64> {
        self.values.get(p).copied()
    }

    pub fn grid(&self) -> &Grid<f64> {
        &self.values
    }

    pub fn rect(&self) -> Rect {
        self.values.rect()
    }

    /// Export with header `i,j,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,value\n");
        for (p, v) in self.values.iter() {
            let _ = writeln!(out, "{},{},{:?}", p.i, p.j, v);
        }
        out
    }
}

/// Busemann field on the window, normalised to zero at the origin.
pub fn busemann_field<W: Weights + ?Sized>(
    x: &W,
    window: &Window,
    k: i64,
    direction: Direction,
) -> Result<BusemannField> {
    busemann_field_over(x, window, k, direction, window.rect())
}

/// Busemann field with the far anchor placed relative to `window` but
/// evaluated on an arbitrary rectangle `rect` (which must contain the origin).
pub fn busemann_field_over<W: Weights + ?Sized>(
    x: &W,
    window: &Window,
    k: i64,
    direction: Direction,
    rect: Rect,
) -> Result<BusemannField> {
    if !rect.contains(LatticePoint::ORIGIN) {
        return Err(Error::Config(format!("origin not in Busemann region {:?}..{:?}", rect.lo, rect.hi)));
    }
    let anchor = direction.root(window.center(), k);
    let in_cone = match direction {
        Direction::Down => anchor.leq(rect.lo),
        Direction::Up => rect.hi.leq(anchor),
    };
    if !in_cone {
        return Err(Error::Precondition(format!("Busemann region is not inside the cone of {anchor}")));
    }
    let mut values = match direction {
        Direction::Down => from_source_over(x, anchor, rect)?,
        Direction::Up => to_sink_over(x, anchor, rect)?,
    };
    let base = values[LatticePoint::ORIGIN];
    for (p, _) in values.clone().iter() {
        if let Some(v) = values.get_mut(p) {
            *v -= base;
        }
    }
    Ok(BusemannField { direction, window: *window, source_distance: k, anchor, values })
}

/// Agreement of trees and Busemann differences under a change of root distance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizationCertificate {
    pub requested: Window,
    pub direction: Direction,
    /// Largest centred sub-rectangle of the window where both agree (possibly empty).
    pub certified: Rect,
    /// The two root distances compared.
    pub compared: (i64, i64),
}

impl StabilizationCertificate {
    pub fn is_empty(&self) -> bool {
        self.certified.is_empty()
    }

    pub fn k(&self) -> i64 {
        self.compared.0
    }
}

/// Compares tree steps and Busemann differences at root distances `k` and `2k`.
pub fn certify_stabilization<W: Weights + ?Sized>(
    x: &W,
    window: &Window,
    k: i64,
    direction: Direction,
) -> Result<StabilizationCertificate> {
    compare_root_distances(x, window, direction, k, 2 * k)
}

/// Certified region for an arbitrary pair of root distances.
pub fn compare_root_distances<W: Weights + ?Sized>(
    x: &W,
    window: &Window,
    direction: Direction,
    k_a: i64,
    k_b: i64,
) -> Result<StabilizationCertificate> {
    compare_fields(window, direction, (x, k_a), (x, k_b))
}

/// Like [`compare_root_distances`], but each root distance comes with its own
/// weight field (the fields only need to cover their own cones).
pub(crate) fn compare_fields<A: Weights + ?Sized, B: Weights + ?Sized>(
    window: &Window,
    direction: Direction,
    (x_a, k_a): (&A, i64),
    (x_b, k_b): (&B, i64),
) -> Result<StabilizationCertificate> {
    let rect = window.rect();
    let center = window.center();
    let (steps_a, values_a) = steps_and_values(x_a, window, direction, k_a)?;
    let (steps_b, values_b) = steps_and_values(x_b, window, direction, k_b)?;
    let offset = values_a[center] - values_b[center];
    let mut bad: Vec<LatticePoint> = Vec::new();
    for p in rect.points() {
        let (va, vb) = (values_a[p], values_b[p]);
        let steps_agree = steps_a[p].is_some() && steps_a[p] == steps_b[p];
        if !steps_agree || !va.is_finite() || !vb.is_finite() || va - vb != offset {
            bad.push(p);
        }
    }
    let certified = match bad.iter().map(|&p| rect.depth_of(p) + 1).max() {
        None => rect,
        Some(r) => rect.shrink(r),
    };
    let certified = if certified.is_empty() { Rect::new(center, center.offset(-1, -1)) } else { certified };
    Ok(StabilizationCertificate { requested: *window, direction, certified, compared: (k_a, k_b) })
}

fn steps_and_values<W: Weights + ?Sized>(
    x: &W,
    window: &Window,
    direction: Direction,
    k: i64,
) -> Result<(Grid<Option<Step>>, Grid<f64>)> {
    let rect = window.rect();
    let root = direction.root(window.center(), k);
    check_domain(x, &cone(window, root, direction), "stabilization")?;
    let (steps, _) = tree_steps(x, root, direction, rect);
    let values = match direction {
        Direction::Down => from_source_over(x, root, rect)?,
        Direction::Up => to_sink_over(x, root, rect)?,
    };
    Ok((steps, values))
}
