//! Dual weights built from Busemann increments, interface portraits, and
//! the exact tree/portrait duality check.
//!
//! Dual vertices are stored by their lower-left primal neighbour: stored
//! index `(i, j)` stands for `(i + 1/2, j + 1/2)`. Objects built on the dual
//! lattice reuse the same machinery, so every tree and portrait carries the
//! doubled offset between its stored indices and physical position
//! (0 for the primal lattice, 1 for the dual, 2 for the dual of the dual).

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Grid, LatticePoint, Rect, Step, Sublattice, WeightField, Weights, Window};
use crate::lpp::{half, LatticePath};
use crate::stats::{correlation, exp_cdf, ks_statistic, moments};
use crate::trees::{
    build_tree, build_tree_on, busemann_field_over, certify_stabilization, compare_fields, BusemannField, Direction,
    GeodesicTree, StabilizationCertificate, StepField,
};

/// Dual weights `X~(i+1/2, j+1/2) = min(B(i, j+1), B(i+1, j)) - B(i, j)`,
/// indexed by the stored (lower-left) index.
#[derive(Clone, Debug)]
pub struct DualWeightField {
    values: Grid<f64>,
}

impl DualWeightField {
    pub fn rect(&self) -> Rect {
        self.values.rect()
    }

    pub fn grid(&self) -> &Grid<f64> {
        &self.values
    }

    /// The same field restricted to a sub-rectangle.
    pub fn restrict(&self, rect: Rect) -> Result<DualWeightField> {
        if !self.rect().contains_rect(&rect) {
            return Err(Error::Precondition("restriction leaves the dual field".into()));
        }
        Ok(DualWeightField { values: Grid::from_fn(rect, |p| self.values[p]) })
    }
}

impl Weights for DualWeightField {
    #[inline]
    fn weight(&self, p: LatticePoint) -> f64 {
        self.values[p]
    }

    fn domain(&self) -> Option<Rect> {
        Some(self.values.rect())
    }
}

fn offset2(lattice: Sublattice) -> i64 {
    match lattice {
        Sublattice::Primal => 0,
        Sublattice::Dual => 1,
    }
}

/// Dual weights on `rect` (stored indices) from a down Busemann field.
/// Aborts on a nonpositive value, which would mean `b` is inconsistent.
pub fn dual_weights(b: &BusemannField, rect: Rect) -> Result<DualWeightField> {
    fill_dual(b, rect, |_| true)
}

/// Dual weights on a box whose top-right cell is the root of the dual tree.
///
/// Interior cells use the usual formula. On the top row and right column
/// only the neighbour inside the box enters the minimum, so every interface
/// path of the down tree of `b` ends at `rect.hi`, and the dual up tree
/// rooted there is exactly that interface forest.
pub fn dual_weights_to_corner(b: &BusemannField, rect: Rect) -> Result<DualWeightField> {
    fill_dual(b, rect, |q| rect.contains(q) || q == rect.hi.offset(1, 0) || q == rect.hi.offset(0, 1))
}

fn fill_dual(b: &BusemannField, rect: Rect, admissible: impl Fn(LatticePoint) -> bool) -> Result<DualWeightField> {
    if b.direction != Direction::Down {
        return Err(Error::Precondition("dual weights need a down Busemann field".into()));
    }
    let needed = Rect::new(rect.lo, rect.hi.offset(1, 1));
    if !b.rect().contains_rect(&needed) {
        return Err(Error::Precondition(format!(
            "Busemann field {:?}..{:?} does not cover {:?}..{:?}",
            b.rect().lo,
            b.rect().hi,
            needed.lo,
            needed.hi
        )));
    }
    let g = b.grid();
    let mut values = Grid::filled(rect, 0.0);
    for p in rect.points() {
        let v = [p.offset(0, 1), p.offset(1, 0)]
            .into_iter()
            .filter(|&q| admissible(q))
            .map(|q| g[q])
            .fold(f64::INFINITY, f64::min)
            - g[p];
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Consistency(format!("dual weight {v} at {p} is not positive")));
        }
        values.set(p, v);
    }
    Ok(DualWeightField { values })
}

/// The interface portrait interlacing a geodesic tree: one dual step per
/// dual vertex, the one whose crossed primal edge is not a tree edge.
#[derive(Clone, Debug)]
pub struct InterfaceForest {
    pub direction: Direction,
    /// Doubled offset from stored index to physical position.
    pub offset2: i64,
    steps: Grid<Option<Step>>,
}

impl StepField for InterfaceForest {
    fn step_at(&self, p: LatticePoint) -> Option<Step> {
        self.steps.get(p).copied().flatten()
    }

    fn descending(&self) -> bool {
        self.direction == Direction::Down
    }

    fn next(&self, p: LatticePoint) -> Option<LatticePoint> {
        self.step_at(p).map(|s| p.step(s)).filter(|q| self.steps.rect().contains(*q))
    }
}

impl InterfaceForest {
    pub fn rect(&self) -> Rect {
        self.steps.rect()
    }

    pub fn lattice(&self) -> Sublattice {
        if self.offset2 % 2 == 0 {
            Sublattice::Primal
        } else {
            Sublattice::Dual
        }
    }

    /// Index of a stored vertex on its own sublattice.
    pub fn lattice_index(&self, p: LatticePoint) -> LatticePoint {
        let shift = self.offset2 / 2;
        p.offset(shift, shift)
    }

    /// Physical coordinates of a stored vertex.
    pub fn position(&self, p: LatticePoint) -> (f64, f64) {
        let o = self.offset2 as f64 / 2.0;
        (p.i as f64 + o, p.j as f64 + o)
    }
}

/// Portrait from a tree: a down portrait from an up tree, an up portrait
/// from a down tree.
///
/// For the dual vertex stored at `q` (tree coordinates `q + (1/2,1/2)`),
/// a Left step crosses the tree edge `q -- q+e2`, Down crosses `q -- q+e1`,
/// Right crosses `q+e1 -- q+e1+e2` and Up crosses `q+e2 -- q+e1+e2`.
pub fn interface_portrait(tree: &GeodesicTree) -> InterfaceForest {
    let window = tree.window.rect();
    let (direction, rect) = match tree.direction {
        Direction::Up => (Direction::Down, window),
        Direction::Down => (Direction::Up, Rect::new(window.lo.offset(-1, -1), window.hi.offset(-1, -1))),
    };
    let steps = Grid::from_fn(rect, |q| match tree.direction {
        Direction::Up => tree.step_at(q).map(|s| match s {
            Step::Up => Step::Down,
            _ => Step::Left,
        }),
        Direction::Down => tree.step_at(q.offset(1, 1)).map(|s| match s {
            Step::Down => Step::Up,
            _ => Step::Right,
        }),
    });
    InterfaceForest { direction, offset2: offset2(tree.lattice) + 1, steps }
}

/// Follows the portrait from `p` (stored index) until it leaves the portrait.
pub fn trace_interface(portrait: &InterfaceForest, p: LatticePoint) -> Result<LatticePath> {
    if !portrait.rect().contains(p) {
        return Err(Error::Precondition(format!("{p} outside the portrait")));
    }
    let mut steps = Vec::new();
    let mut c = p;
    while let Some(s) = portrait.step_at(c) {
        steps.push(s);
        c = c.step(s);
        if !portrait.rect().contains(c) {
            break;
        }
    }
    Ok(LatticePath::new(portrait.lattice(), portrait.lattice_index(p), steps))
}

/// Doubled physical midpoint of the unit edge leaving stored `p` by `s`.
fn edge_midpoint2(p: LatticePoint, s: Step, offset2: i64) -> (i64, i64) {
    let (dx, dy) = s.delta();
    (2 * p.i + offset2 + dx, 2 * p.j + offset2 + dy)
}

/// Number of portrait edges crossing a tree edge. A primal and a dual unit
/// edge cross exactly when their midpoints coincide.
pub fn crossing_count(tree: &GeodesicTree, portrait: &InterfaceForest) -> usize {
    let t_off = offset2(tree.lattice);
    let scan = portrait.rect().expand(2).intersect(&tree.region());
    let mut tree_mids = HashSet::new();
    for p in scan.points() {
        if let Some(s) = tree.step_at(p) {
            tree_mids.insert(edge_midpoint2(p, s, t_off));
        }
    }
    portrait
        .steps
        .iter()
        .filter_map(|(q, s)| s.map(|s| edge_midpoint2(q, s, portrait.offset2)))
        .filter(|m| tree_mids.contains(m))
        .count()
}

fn edge_rows(out: &mut String, kind: &str, offset2: i64, steps: impl Iterator<Item = (LatticePoint, Step)>) {
    for (p, s) in steps {
        let (dx, dy) = s.delta();
        let (x1, y1) = (2 * p.i + offset2, 2 * p.j + offset2);
        let _ = writeln!(out, "{},{},{},{},{kind}", half(x1), half(y1), half(x1 + 2 * dx), half(y1 + 2 * dy));
    }
}

/// Edge export with header `x1,y1,x2,y2,kind` for a tree (restricted to its
/// window) and any number of portraits.
pub fn edges_csv(trees: &[&GeodesicTree], portraits: &[&InterfaceForest]) -> String {
    let mut out = String::from("x1,y1,x2,y2,kind\n");
    for t in trees {
        let kind = match t.direction {
            Direction::Up => "tree_up",
            Direction::Down => "tree_down",
        };
        let rect = t.window.rect();
        let steps = rect.points().filter_map(|p| t.step_at(p).map(|s| (p, s)));
        edge_rows(&mut out, kind, offset2(t.lattice), steps);
    }
    for f in portraits {
        let kind = match f.direction {
            Direction::Up => "portrait_up",
            Direction::Down => "portrait_down",
        };
        let steps = f.steps.iter().filter_map(|(p, s)| s.map(|s| (p, s)));
        edge_rows(&mut out, kind, f.offset2, steps);
    }
    out
}

/// Summary statistics of dual weights.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DualWeightSummary {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub ks_distance: f64,
    pub min: f64,
    /// Lag-1 correlation between horizontal neighbours.
    pub lag1_e1: f64,
    /// Lag-1 correlation between vertical neighbours.
    pub lag1_e2: f64,
}

/// Moments, KS distance to exp(1) and lag-1 correlations, pooled over fields.
pub fn dual_weight_distribution(fields: &[DualWeightField]) -> Result<DualWeightSummary> {
    let samples: Vec<f64> = fields.iter().flat_map(|f| f.values.values().iter().copied()).collect();
    if samples.len() < 1000 {
        return Err(Error::InsufficientData { needed: 1000, got: samples.len() });
    }
    let m = moments(&samples);
    let ks_distance = ks_statistic(&samples, exp_cdf(1.0))?;
    let mut horizontal = Vec::new();
    let mut vertical = Vec::new();
    for f in fields {
        for (p, &v) in f.values.iter() {
            if let Some(&r) = f.values.get(p.offset(1, 0)) {
                horizontal.push((v, r));
            }
            if let Some(&u) = f.values.get(p.offset(0, 1)) {
                vertical.push((v, u));
            }
        }
    }
    Ok(DualWeightSummary {
        count: m.count,
        mean: m.mean,
        variance: m.variance,
        ks_distance,
        min: samples.iter().copied().fold(f64::INFINITY, f64::min),
        lag1_e1: correlation(&horizontal),
        lag1_e2: correlation(&vertical),
    })
}

/// Margin a primal window needs for [`verify_duality`] at root distance `k`.
pub fn duality_margin(window: &Window, k: i64) -> i64 {
    2 * k + window.side() + 2
}

/// All objects of one duality run.
#[derive(Clone, Debug)]
pub struct DualityParts {
    pub primal_certificate: StabilizationCertificate,
    pub dual_certificate: StabilizationCertificate,
    pub down_tree: GeodesicTree,
    pub up_portrait: InterfaceForest,
    pub dual_weights: DualWeightField,
    pub dual_up_tree: GeodesicTree,
    pub dual_down_portrait: InterfaceForest,
    /// Primal indices on which the comparison is made.
    pub compared: Rect,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualityReport {
    pub seed: u64,
    pub n: i64,
    pub window: Rect,
    #[serde(rename = "K")]
    pub k: i64,
    pub certified: Rect,
    pub compared_cells: usize,
    pub match_down: f64,
    pub match_up: f64,
    pub dual_mean: f64,
    pub dual_ks: f64,
    pub ties: u64,
}

/// Runs the duality pipeline for the primal field of `seed`:
/// down Busemann field and tree of `X`, dual weights `X~`, up tree of `X~`
/// with its own root and certificate, the portraits of both trees, and the
/// edge-by-edge comparison on the certified intersection (minus a one-cell rim).
///
/// The dual weights live on the box between the dual window and the dual
/// root (see [`dual_weights_to_corner`]); the certificate compares the trees
/// of the boxes at root distances `k` and `2k`.
pub fn verify_duality(seed: u64, window: &Window, k: i64) -> Result<(DualityReport, DualityParts)> {
    let rect = window.rect();
    let window = window.with_margin(duality_margin(window, k));
    let x = WeightField::new(seed, window);
    let primal_certificate = certify_stabilization(&x, &window, k, Direction::Down)?;
    let down_tree = build_tree(&x, &window, Direction::Down, k)?;

    // dual window: the stored indices whose primal partner (+1,+1) is in the window
    let dual_rect = Rect::new(rect.lo.offset(-1, -1), rect.hi.offset(-1, -1));
    let dual_window = Window::new(dual_rect.lo, dual_rect.hi, window.margin)?;
    let near = Direction::Up.root(dual_window.center(), k);
    let far = Direction::Up.root(dual_window.center(), 2 * k);
    let busemann = busemann_field_over(&x, &window, k, Direction::Down, Rect::new(dual_rect.lo, far.offset(1, 1)))?;
    let dual = dual_weights_to_corner(&busemann, Rect::new(dual_rect.lo, near))?;
    let dual_far = dual_weights_to_corner(&busemann, Rect::new(dual_rect.lo, far))?;
    drop(busemann);
    let dual_certificate = compare_fields(&dual_window, Direction::Up, (&dual, k), (&dual_far, 2 * k))?;
    drop(dual_far);
    let dual_up_tree = build_tree_on(&dual, &dual_window, Direction::Up, k, Sublattice::Dual)?;

    let up_portrait = interface_portrait(&down_tree);
    let dual_down_portrait = interface_portrait(&dual_up_tree);

    let c2 = dual_certificate.certified;
    let compared = primal_certificate.certified.intersect(&Rect::new(c2.lo.offset(1, 1), c2.hi.offset(1, 1))).shrink(1);
    if compared.is_empty() {
        return Err(Error::InsufficientCertification {
            message: "empty certified intersection".into(),
            certificates: vec![primal_certificate, dual_certificate],
        });
    }
    let mut down_agree = 0;
    let mut up_agree = 0;
    for p in compared.points() {
        let d = p.offset(-1, -1);
        // tree_down(X) vs portrait_down(X~): the portrait's stored index d sits at primal p
        if down_tree.step_at(p).is_some() && down_tree.step_at(p) == dual_down_portrait.step_at(d) {
            down_agree += 1;
        }
        // portrait_up(X) vs tree_up(X~), both at dual stored index d
        if up_portrait.step_at(d).is_some() && up_portrait.step_at(d) == dual_up_tree.step_at(d) {
            up_agree += 1;
        }
    }
    let cells = compared.len();
    let certified_dual = dual.restrict(Rect::new(compared.lo.offset(-1, -1), compared.hi.offset(-1, -1)))?;
    let (dual_mean, dual_ks) = {
        let samples = certified_dual.values.values();
        let m = moments(samples);
        let ks = if samples.len() >= 2 { ks_statistic(samples, exp_cdf(1.0))? } else { f64::NAN };
        (m.mean, ks)
    };
    let report = DualityReport {
        seed,
        n: window.side(),
        window: rect,
        k,
        certified: compared,
        compared_cells: cells,
        match_down: down_agree as f64 / cells as f64,
        match_up: up_agree as f64 / cells as f64,
        dual_mean,
        dual_ks,
        ties: down_tree.tie_count + dual_up_tree.tie_count,
    };
    let parts = DualityParts {
        primal_certificate,
        dual_certificate,
        down_tree,
        up_portrait,
        dual_weights: certified_dual,
        dual_up_tree,
        dual_down_portrait,
        compared,
    };
    Ok((report, parts))
}
