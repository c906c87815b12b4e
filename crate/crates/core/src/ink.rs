//! Ink strokes, stroke sets and the bounding-box geometry shared by every
//! scorer. Coordinates use the screen convention: y grows downward, so the
//! top of a box is its minimum y.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point::new(x, y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stroke {
    pub id: usize,
    pub points: Vec<Point>,
}

impl Stroke {
    pub fn new(id: usize, points: Vec<Point>) -> Self {
        Stroke { id, points }
    }

    pub fn bbox(&self) -> BBox {
        BBox::of_points(self.points.iter().copied()).expect("stroke has at least one point")
    }

    pub fn arclength(&self) -> f64 {
        self.points.windows(2).map(|w| w[0].dist(w[1])).sum()
    }
}

/// A set of strokes indexed `0..n`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Observable {
    strokes: Vec<Stroke>,
}

impl Observable {
    /// Builds an observable from raw point lists, assigning ids in order.
    /// Empty strokes and non-finite coordinates are rejected.
    pub fn from_points(strokes: Vec<Vec<Point>>) -> Result<Self> {
        if strokes.len() > StrokeSet::CAPACITY {
            return Err(Error::TooManyStrokes(strokes.len()));
        }
        let mut out = Vec::with_capacity(strokes.len());
        for (id, points) in strokes.into_iter().enumerate() {
            if points.is_empty() {
                return Err(Error::InkParse {
                    line: 0,
                    column: 0,
                    message: format!("stroke {id} has no points"),
                });
            }
            if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
                return Err(Error::InkParse {
                    line: 0,
                    column: 0,
                    message: format!("stroke {id} has a non-finite coordinate"),
                });
            }
            out.push(Stroke::new(id, points));
        }
        Ok(Observable { strokes: out })
    }

    pub fn empty() -> Self {
        Observable::default()
    }

    pub fn len(&self) -> usize {
        self.strokes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strokes.is_empty()
    }

    pub fn strokes(&self) -> &[Stroke] {
        &self.strokes
    }

    pub fn stroke(&self, id: usize) -> &Stroke {
        &self.strokes[id]
    }

    pub fn all(&self) -> StrokeSet {
        StrokeSet::full(self.len())
    }

    pub fn bbox(&self, set: StrokeSet) -> Result<BBox> {
        if set.is_empty() {
            return Err(Error::EmptySubset);
        }
        let boxes = set.iter().map(|i| self.strokes[i].bbox());
        Ok(boxes.reduce(|a, b| a.union(&b)).unwrap())
    }

    /// Diagonal of the bounding box of the whole input (0 for an empty input).
    pub fn diagonal(&self) -> f64 {
        self.bbox(self.all()).map(|b| b.diagonal()).unwrap_or(0.0)
    }

    /// Padding applied to degenerate boxes before area computations:
    /// 5% of the input diagonal.
    pub fn degenerate_eps(&self) -> f64 {
        (0.05 * self.diagonal()).max(1e-9)
    }

    /// Bounding-box overlap of two stroke sets, see [`BBox::overlap`].
    pub fn overlap(&self, a: StrokeSet, b: StrokeSet) -> Result<f64> {
        let eps = self.degenerate_eps();
        Ok(self.bbox(a)?.overlap(&self.bbox(b)?, eps))
    }

    /// Restricts the observable to `set`, renumbering the kept strokes.
    pub fn subset(&self, set: StrokeSet) -> Observable {
        let strokes = set
            .iter()
            .enumerate()
            .map(|(new_id, old)| Stroke::new(new_id, self.strokes[old].points.clone()))
            .collect();
        Observable { strokes }
    }
}

/// A bitset of stroke ids within one [`Observable`].
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StrokeSet(u64);

impl StrokeSet {
    pub const CAPACITY: usize = 64;

    pub const fn empty() -> Self {
        StrokeSet(0)
    }

    pub fn single(id: usize) -> Self {
        debug_assert!(id < Self::CAPACITY);
        StrokeSet(1 << id)
    }

    pub fn full(n: usize) -> Self {
        debug_assert!(n <= Self::CAPACITY);
        if n == Self::CAPACITY {
            StrokeSet(u64::MAX)
        } else {
            StrokeSet((1u64 << n) - 1)
        }
    }

    pub const fn from_bits(bits: u64) -> Self {
        StrokeSet(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, id: usize) -> bool {
        id < Self::CAPACITY && self.0 & (1 << id) != 0
    }

    pub fn insert(&mut self, id: usize) {
        self.0 |= 1 << id;
    }

    pub fn union(self, other: StrokeSet) -> StrokeSet {
        StrokeSet(self.0 | other.0)
    }

    pub fn intersection(self, other: StrokeSet) -> StrokeSet {
        StrokeSet(self.0 & other.0)
    }

    pub fn difference(self, other: StrokeSet) -> StrokeSet {
        StrokeSet(self.0 & !other.0)
    }

    pub fn is_disjoint(self, other: StrokeSet) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_subset_of(self, other: StrokeSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }
}

impl FromIterator<usize> for StrokeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = StrokeSet::empty();
        for i in iter {
            s.insert(i);
        }
        s
    }
}

impl fmt::Debug for StrokeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for StrokeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, id) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{id}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub left: f64,
    pub right: f64,
    pub top: f64,
    pub bottom: f64,
}

impl BBox {
    pub fn new(left: f64, right: f64, top: f64, bottom: f64) -> Self {
        BBox {
            left,
            right,
            top,
            bottom,
        }
    }

    pub fn of_points(points: impl IntoIterator<Item = Point>) -> Option<BBox> {
        let mut it = points.into_iter();
        let p = it.next()?;
        let mut b = BBox::new(p.x, p.x, p.y, p.y);
        for p in it {
            b.left = b.left.min(p.x);
            b.right = b.right.max(p.x);
            b.top = b.top.min(p.y);
            b.bottom = b.bottom.max(p.y);
        }
        Some(b)
    }

    pub fn union(&self, o: &BBox) -> BBox {
        BBox::new(
            self.left.min(o.left),
            self.right.max(o.right),
            self.top.min(o.top),
            self.bottom.max(o.bottom),
        )
    }

    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    pub fn height(&self) -> f64 {
        self.bottom - self.top
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Point {
        Point::new(
            0.5 * (self.left + self.right),
            0.5 * (self.top + self.bottom),
        )
    }

    /// Widens any side shorter than `eps` by `eps` on both ends.
    pub fn padded(&self, eps: f64) -> BBox {
        let mut b = *self;
        if b.width() < eps {
            b.left -= eps;
            b.right += eps;
        }
        if b.height() < eps {
            b.top -= eps;
            b.bottom += eps;
        }
        b
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Intersection area divided by the area of the smaller box, after
    /// padding degenerate boxes by `eps`. Always in `[0, 1]`.
    pub fn overlap(&self, other: &BBox, eps: f64) -> f64 {
        let a = self.padded(eps);
        let b = other.padded(eps);
        let w = a.right.min(b.right) - a.left.max(b.left);
        let h = a.bottom.min(b.bottom) - a.top.max(b.top);
        if w <= 0.0 || h <= 0.0 {
            return 0.0;
        }
        let smaller = a.area().min(b.area());
        (w * h / smaller).clamp(0.0, 1.0)
    }
}

fn point_segment_dist(p: Point, a: Point, b: Point) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(Point::new(a.x + t * ab.x, a.y + t * ab.y))
}

fn segments_cross(p0: Point, p1: Point, q0: Point, q1: Point) -> bool {
    let d1 = p1.sub(p0).cross(q0.sub(p0));
    let d2 = p1.sub(p0).cross(q1.sub(p0));
    let d3 = q1.sub(q0).cross(p0.sub(q0));
    let d4 = q1.sub(q0).cross(p1.sub(q0));
    (d1 > 0.0 && d2 < 0.0 || d1 < 0.0 && d2 > 0.0) && (d3 > 0.0 && d4 < 0.0 || d3 < 0.0 && d4 > 0.0)
}

fn key(p: Point, q: Point) -> (f64, f64, f64, f64) {
    (p.x, p.y, q.x, q.y)
}

/// Exact distance between two segments; symmetric bit-for-bit because the
/// pair is put in a canonical order first.
fn segment_dist(mut p: (Point, Point), mut q: (Point, Point)) -> f64 {
    if key(q.0, q.1).partial_cmp(&key(p.0, p.1)) == Some(std::cmp::Ordering::Less) {
        std::mem::swap(&mut p, &mut q);
    }
    if segments_cross(p.0, p.1, q.0, q.1) {
        return 0.0;
    }
    point_segment_dist(p.0, q.0, q.1)
        .min(point_segment_dist(p.1, q.0, q.1))
        .min(point_segment_dist(q.0, p.0, p.1))
        .min(point_segment_dist(q.1, p.0, p.1))
}

fn segments(s: &Stroke) -> impl Iterator<Item = (Point, Point)> + '_ {
    let single = (s.points.len() == 1).then(|| (s.points[0], s.points[0]));
    single
        .into_iter()
        .chain(s.points.windows(2).map(|w| (w[0], w[1])))
}

/// Minimum Euclidean distance between the polylines traced by two strokes.
pub fn min_stroke_distance(a: &Stroke, b: &Stroke) -> f64 {
    let mut best = f64::INFINITY;
    for sa in segments(a) {
        for sb in segments(b) {
            best = best.min(segment_dist(sa, sb));
            if best == 0.0 {
                return 0.0;
            }
        }
    }
    best
}
