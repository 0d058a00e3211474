//! Lattice geometry and the weight field.
//!
//! Points of `Z^2` are addressed by integer `(i, j)`. The dual lattice
//! `Z^2 + (1/2, 1/2)` reuses the same integer type: a dual site is stored by
//! its lower-left primal neighbour. Rotated coordinates use the basis
//! `v = (1, 1)`, `w = (1, -1)` and are kept in doubled integer form so that
//! half-integers stay exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A vertex of `Z^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticePoint {
    pub i: i64,
    pub j: i64,
}

impl LatticePoint {
    pub const ORIGIN: LatticePoint = LatticePoint { i: 0, j: 0 };

    pub const fn new(i: i64, j: i64) -> Self {
        LatticePoint { i, j }
    }

    /// Coordinatewise partial order: `self <= other`.
    pub fn leq(self, other: LatticePoint) -> bool {
        self.i <= other.i && self.j <= other.j
    }

    pub fn offset(self, di: i64, dj: i64) -> Self {
        LatticePoint::new(self.i + di, self.j + dj)
    }

    pub fn step(self, s: Step) -> Self {
        let (di, dj) = s.delta();
        self.offset(di, dj)
    }

    /// `self + k * v`.
    pub fn along_v(self, k: i64) -> Self {
        self.offset(k, k)
    }

    /// Anti-diagonal level `i + j`.
    pub fn level(self) -> i64 {
        self.i + self.j
    }
}

impl std::fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.i, self.j)
    }
}

/// Which of the two interleaved lattices a stored index refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sublattice {
    Primal,
    /// Stored index `(i, j)` denotes the point `(i + 1/2, j + 1/2)`.
    Dual,
}

impl Sublattice {
    pub fn other(self) -> Self {
        match self {
            Sublattice::Primal => Sublattice::Dual,
            Sublattice::Dual => Sublattice::Primal,
        }
    }

    /// Offset of the stored index in doubled coordinates.
    pub fn half_offset(self) -> i64 {
        match self {
            Sublattice::Primal => 0,
            Sublattice::Dual => 1,
        }
    }

    /// Doubled real coordinates `(2x, 2y)` of a stored index.
    pub fn doubled(self, p: LatticePoint) -> (i64, i64) {
        let o = self.half_offset();
        (2 * p.i + o, 2 * p.j + o)
    }
}

/// A site of the dual lattice, stored by its lower-left primal neighbour.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DualPoint {
    pub base: LatticePoint,
}

impl DualPoint {
    pub const fn new(i: i64, j: i64) -> Self {
        DualPoint { base: LatticePoint::new(i, j) }
    }

    pub fn position(self) -> (f64, f64) {
        (self.base.i as f64 + 0.5, self.base.j as f64 + 0.5)
    }
}

/// A unit lattice step. Up-right paths use `Right`/`Up`, down-left paths
/// use `Left`/`Down`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Step {
    Right,
    Up,
    Left,
    Down,
}

impl Step {
    pub fn delta(self) -> (i64, i64) {
        match self {
            Step::Right => (1, 0),
            Step::Up => (0, 1),
            Step::Left => (-1, 0),
            Step::Down => (0, -1),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Step::Right => 'R',
            Step::Up => 'U',
            Step::Left => 'L',
            Step::Down => 'D',
        }
    }

    pub fn from_letter(c: char) -> Option<Step> {
        match c {
            'R' => Some(Step::Right),
            'U' => Some(Step::Up),
            'L' => Some(Step::Left),
            'D' => Some(Step::Down),
            _ => None,
        }
    }

    /// Change of the rotated transversal coordinate, doubled.
    pub fn dx2(self) -> i64 {
        match self {
            Step::Right | Step::Down => 1,
            Step::Up | Step::Left => -1,
        }
    }
}

/// Rotated coordinates in doubled form: the point is `(m2/2) v + (x2/2) w`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RotatedCoord {
    pub m2: i64,
    pub x2: i64,
}

impl RotatedCoord {
    pub fn m(self) -> f64 {
        self.m2 as f64 / 2.0
    }

    pub fn x(self) -> f64 {
        self.x2 as f64 / 2.0
    }
}

/// Rotated coordinates of a stored index on the given sublattice.
pub fn to_rotated(lattice: Sublattice, p: LatticePoint) -> RotatedCoord {
    let (dx, dy) = lattice.doubled(p);
    // doubled point = m2 * v + x2 * w in half units
    RotatedCoord { m2: (dx + dy) / 2, x2: (dx - dy) / 2 }
}

/// Inverse of [`to_rotated`]. Returns `None` if the coordinate is not a site
/// of the requested sublattice.
pub fn from_rotated(lattice: Sublattice, r: RotatedCoord) -> Option<LatticePoint> {
    let dx = r.m2 + r.x2;
    let dy = r.m2 - r.x2;
    let o = lattice.half_offset();
    if (dx - o).rem_euclid(2) != 0 || (dy - o).rem_euclid(2) != 0 {
        return None;
    }
    Some(LatticePoint::new((dx - o) / 2, (dy - o) / 2))
}

/// Inclusive axis-aligned rectangle of lattice indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub lo: LatticePoint,
    pub hi: LatticePoint,
}

impl Rect {
    pub fn new(lo: LatticePoint, hi: LatticePoint) -> Self {
        Rect { lo, hi }
    }

    pub fn is_empty(&self) -> bool {
        self.lo.i > self.hi.i || self.lo.j > self.hi.j
    }

    pub fn width(&self) -> i64 {
        (self.hi.i - self.lo.i + 1).max(0)
    }

    pub fn height(&self) -> i64 {
        (self.hi.j - self.lo.j + 1).max(0)
    }

    pub fn len(&self) -> usize {
        (self.width() * self.height()) as usize
    }

    pub fn contains(&self, p: LatticePoint) -> bool {
        self.lo.leq(p) && p.leq(self.hi)
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.is_empty() || (self.contains(other.lo) && self.contains(other.hi))
    }

    pub fn expand(&self, r: i64) -> Rect {
        Rect::new(self.lo.offset(-r, -r), self.hi.offset(r, r))
    }

    pub fn shrink(&self, r: i64) -> Rect {
        self.expand(-r)
    }

    pub fn intersect(&self, other: &Rect) -> Rect {
        Rect::new(
            LatticePoint::new(self.lo.i.max(other.lo.i), self.lo.j.max(other.lo.j)),
            LatticePoint::new(self.hi.i.min(other.hi.i), self.hi.j.min(other.hi.j)),
        )
    }

    pub fn center(&self) -> LatticePoint {
        LatticePoint::new((self.lo.i + self.hi.i).div_euclid(2), (self.lo.j + self.hi.j).div_euclid(2))
    }

    /// Distance from `p` to the nearest edge of the rectangle (0 on the rim).
    pub fn depth_of(&self, p: LatticePoint) -> i64 {
        (p.i - self.lo.i).min(self.hi.i - p.i).min(p.j - self.lo.j).min(self.hi.j - p.j)
    }

    /// Row-major iteration (`j` outer, `i` inner).
    pub fn points(&self) -> impl Iterator<Item = LatticePoint> + '_ {
        let (lo, hi) = (self.lo, self.hi);
        (lo.j..=hi.j).flat_map(move |j| (lo.i..=hi.i).map(move |i| LatticePoint::new(i, j)))
    }
}

/// A requested region plus the margin available for far roots and sources.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub lo: LatticePoint,
    pub hi: LatticePoint,
    pub margin: i64,
}

impl Window {
    pub fn new(lo: LatticePoint, hi: LatticePoint, margin: i64) -> Result<Self> {
        if !lo.leq(hi) {
            return Err(Error::Precondition(format!("window lo {lo} is not <= hi {hi}")));
        }
        if margin < 0 {
            return Err(Error::Precondition(format!("negative margin {margin}")));
        }
        Ok(Window { lo, hi, margin })
    }

    /// Square window of the given side centred on the origin
    /// (`lo = -(side/2)`).
    pub fn centered(side: i64, margin: i64) -> Result<Self> {
        if side < 1 {
            return Err(Error::Precondition(format!("window side {side} < 1")));
        }
        let lo = -(side / 2);
        Window::new(LatticePoint::new(lo, lo), LatticePoint::new(lo + side - 1, lo + side - 1), margin)
    }

    pub fn rect(&self) -> Rect {
        Rect::new(self.lo, self.hi)
    }

    pub fn enlarged(&self) -> Rect {
        self.rect().expand(self.margin)
    }

    pub fn center(&self) -> LatticePoint {
        self.rect().center()
    }

    pub fn side(&self) -> i64 {
        self.rect().width().max(self.rect().height())
    }

    pub fn with_margin(self, margin: i64) -> Self {
        Window { margin, ..self }
    }
}

/// Dense storage over a rectangle, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    rect: Rect,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(rect: Rect, value: T) -> Self {
        Grid { rect, data: vec![value; rect.len()] }
    }
}

impl<T> Grid<T> {
    pub fn from_fn(rect: Rect, mut f: impl FnMut(LatticePoint) -> T) -> Self {
        let data = rect.points().map(&mut f).collect();
        Grid { rect, data }
    }

    pub fn rect(&self) -> Rect {
        self.rect
    }

    #[inline]
    fn index(&self, p: LatticePoint) -> Option<usize> {
        if self.rect.contains(p) {
            let w = self.rect.width();
            Some(((p.j - self.rect.lo.j) * w + (p.i - self.rect.lo.i)) as usize)
        } else {
            None
        }
    }

    #[inline]
    pub fn get(&self, p: LatticePoint) -> Option<&T> {
        self.index(p).map(|k| &self.data[k])
    }

    #[inline]
    pub fn get_mut(&mut self, p: LatticePoint) -> Option<&mut T> {
        self.index(p).map(move |k| &mut self.data[k])
    }

    pub fn set(&mut self, p: LatticePoint, value: T) {
        let k = self.index(p).unwrap_or_else(|| panic!("{p} outside grid {:?}", self.rect));
        self.data[k] = value;
    }

    /// Mutable slice of row `j` restricted to the grid columns.
    pub(crate) fn row_mut(&mut self, j: i64) -> &mut [T] {
        let w = self.rect.width() as usize;
        let start = (j - self.rect.lo.j) as usize * w;
        &mut self.data[start..start + w]
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn iter(&self) -> impl Iterator<Item = (LatticePoint, &T)> + '_ {
        self.rect.points().zip(self.data.iter())
    }
}

impl<T> std::ops::Index<LatticePoint> for Grid<T> {
    type Output = T;

    fn index(&self, p: LatticePoint) -> &T {
        match Grid::index(self, p) {
            Some(k) => &self.data[k],
            None => panic!("{p} outside grid {:?}", self.rect),
        }
    }
}

/// Resolution of stored weights. Every weight is an integer multiple of
/// this quantum, so passage-time sums and differences are exact in `f64`
/// as long as magnitudes stay below `2^19`.
pub const WEIGHT_QUANTUM: f64 = 1.0 / (1u64 << 34) as f64;
const QUANTA_PER_UNIT: f64 = (1u64 << 34) as f64;

/// Largest rectangle side accepted by the dynamic programs (keeps passage
/// times far below the exactness bound).
pub const MAX_SIDE: i64 = 1 << 16;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finaliser.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replica `index` derived from a master seed.
pub fn replica_seed(seed: u64, index: u64) -> u64 {
    mix64(mix64(seed ^ 0x5851_F42D_4C95_7F2D) ^ mix64(index.wrapping_add(GOLDEN)))
}

#[inline]
fn seed_key(seed: u64) -> u64 {
    mix64(seed.wrapping_add(GOLDEN))
}

#[inline]
fn weight_from_key(key: u64, p: LatticePoint) -> f64 {
    let a = mix64(key ^ (p.i as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
    let h = mix64(a ^ (p.j as u64).wrapping_mul(0x8CB9_2BA7_2F3D_8DD7));
    // 53-bit uniform on (0, 1); the zero word maps to the smallest positive value
    let k = (h >> 11).max(1);
    let u = k as f64 * (1.0 / (1u64 << 53) as f64);
    let quanta = (-u.ln() * QUANTA_PER_UNIT).round().max(1.0);
    quanta * WEIGHT_QUANTUM
}

/// The exp(1) weight at `p` for the given seed.
///
/// Counter-based: the value depends only on `(seed, i, j)`. It is `-ln U`
/// for a 53-bit uniform `U`, rounded to [`WEIGHT_QUANTUM`] (never below one
/// quantum).
pub fn derive_weight(seed: u64, p: LatticePoint) -> f64 {
    weight_from_key(seed_key(seed), p)
}

/// Anything that assigns a positive weight to lattice indices.
pub trait Weights: Sync {
    fn weight(&self, p: LatticePoint) -> f64;

    /// Region on which weights are defined, if bounded.
    fn domain(&self) -> Option<Rect> {
        None
    }
}

/// The i.i.d. exp(1) primal field for a seed. Values are generated on
/// demand; `window.enlarged()` is the region callers are allowed to use.
#[derive(Clone, Copy, Debug)]
pub struct WeightField {
    pub seed: u64,
    pub window: Window,
    key: u64,
}

impl WeightField {
    pub fn new(seed: u64, window: Window) -> Self {
        WeightField { seed, window, key: seed_key(seed) }
    }

    pub fn materialize(&self) -> Grid<f64> {
        Grid::from_fn(self.window.enlarged(), |p| self.weight(p))
    }
}

impl Weights for WeightField {
    #[inline]
    fn weight(&self, p: LatticePoint) -> f64 {
        weight_from_key(self.key, p)
    }

    fn domain(&self) -> Option<Rect> {
        Some(self.window.enlarged())
    }
}

impl Weights for Grid<f64> {
    #[inline]
    fn weight(&self, p: LatticePoint) -> f64 {
        self[p]
    }

    fn domain(&self) -> Option<Rect> {
        Some(self.rect())
    }
}

/// Check that `rect` lies in the domain of `x` and is small enough for
/// exact arithmetic.
pub(crate) fn check_domain<W: Weights + ?Sized>(x: &W, rect: &Rect, what: &str) -> Result<()> {
    if rect.width() > MAX_SIDE || rect.height() > MAX_SIDE {
        return Err(Error::Precondition(format!(
            "{what}: region {}x{} exceeds the maximum side {MAX_SIDE}",
            rect.width(),
            rect.height()
        )));
    }
    if let Some(d) = x.domain() {
        if !d.contains_rect(rect) {
            return Err(Error::Config(format!(
                "{what}: region {:?}..{:?} lies outside the generated field {:?}..{:?}",
                rect.lo, rect.hi, d.lo, d.hi
            )));
        }
    }
    Ok(())
}

/// The tile `Box(p) = p + {s v + x w : s in (-1/4, 1/4], x in (-1/2, 1/2]}`
/// containing `q`.
pub fn box_of(q: (f64, f64)) -> LatticePoint {
    let mq = 0.5 * (q.0 + q.1);
    let xq = 0.5 * (q.0 - q.1);
    // m_p in [m_q - 1/4, m_q + 1/4), a half-integer
    let m2 = (2.0 * mq - 0.5).ceil();
    let mp = m2 / 2.0;
    // x_p in [x_q - 1/2, x_q + 1/2), congruent to m_p mod 1
    let xp = mp + (xq - 0.5 - mp).ceil();
    LatticePoint::new((mp + xp).round() as i64, (mp - xp).round() as i64)
}

/// Direct membership test for `Box(p)`.
pub fn in_box(p: LatticePoint, q: (f64, f64)) -> bool {
    let (dx, dy) = (q.0 - p.i as f64, q.1 - p.j as f64);
    let s = 0.5 * (dx + dy);
    let x = 0.5 * (dx - dy);
    s > -0.25 && s <= 0.25 && x > -0.5 && x <= 0.5
}

/// Parse a seed given as decimal or `0x`-prefixed hexadecimal.
pub fn parse_seed(s: &str) -> Result<u64> {
    let t = s.trim();
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse::<u64>(),
    };
    parsed.map_err(|e| Error::Config(format!("invalid seed {s:?}: {e}")))
}
