//! Finite unions of closed intervals and boxes in the fiber.

use num_traits::{One, Zero};

use crate::exact::{to_f64, Q};

use super::pl::PLMap;

/// A closed interval `[lo, hi]`, possibly degenerate.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: Q,
    pub hi: Q,
}

impl Interval {
    pub fn new(lo: Q, hi: Q) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        Self { lo, hi }
    }

    pub fn unit() -> Self {
        Self {
            lo: Q::zero(),
            hi: Q::one(),
        }
    }

    pub fn point(x: Q) -> Self {
        Self {
            lo: x.clone(),
            hi: x,
        }
    }

    pub fn len(&self) -> Q {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &Q) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn meets(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// Image under a nondecreasing map: `[f(lo), f(hi)]`.
    pub fn image(&self, f: &PLMap) -> Interval {
        Interval {
            lo: f.eval(&self.lo),
            hi: f.eval(&self.hi),
        }
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
        }
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (to_f64(&self.lo), to_f64(&self.hi))
    }
}

/// Sorted union of pairwise disjoint closed intervals. Touching or
/// overlapping pieces are merged, so consecutive components are separated
/// by a gap of positive length.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct IntervalUnion {
    components: Vec<Interval>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn unit() -> Self {
        Self {
            components: vec![Interval::unit()],
        }
    }

    pub fn from_intervals(mut pieces: Vec<Interval>) -> Self {
        pieces.sort_by(|a, b| a.lo.cmp(&b.lo));
        let mut components: Vec<Interval> = Vec::with_capacity(pieces.len());
        for piece in pieces {
            match components.last_mut() {
                Some(last) if piece.lo <= last.hi => {
                    if piece.hi > last.hi {
                        last.hi = piece.hi;
                    }
                }
                _ => components.push(piece),
            }
        }
        Self { components }
    }

    pub fn components(&self) -> &[Interval] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn union(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut all = self.components.clone();
        all.extend(other.components.iter().cloned());
        Self::from_intervals(all)
    }

    pub fn image(&self, f: &PLMap) -> IntervalUnion {
        Self::from_intervals(self.components.iter().map(|c| c.image(f)).collect())
    }

    /// `hi_last − lo_first`, zero when empty.
    pub fn diameter(&self) -> Q {
        match (self.components.first(), self.components.last()) {
            (Some(a), Some(b)) => &b.hi - &a.lo,
            _ => Q::zero(),
        }
    }

    /// Lebesgue measure.
    pub fn measure(&self) -> Q {
        self.components.iter().map(Interval::len).sum()
    }

    pub fn hull(&self) -> Option<Interval> {
        Some(Interval::new(
            self.components.first()?.lo.clone(),
            self.components.last()?.hi.clone(),
        ))
    }

    pub fn contains(&self, x: &Q) -> bool {
        let i = self.components.partition_point(|c| &c.hi < x);
        self.components
            .get(i)
            .map(|c| c.contains(x))
            .unwrap_or(false)
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        let i = self.components.partition_point(|c| c.hi < other.lo);
        self.components
            .get(i)
            .map(|c| c.contains_interval(other))
            .unwrap_or(false)
    }

    pub fn is_subset_of(&self, other: &IntervalUnion) -> bool {
        self.components.iter().all(|c| other.contains_interval(c))
    }

    /// Distance from `x` to the union (`None` when empty).
    pub fn distance_to(&self, x: &Q) -> Option<Q> {
        let i = self.components.partition_point(|c| &c.hi < x);
        let right = self
            .components
            .get(i)
            .map(|c| if &c.lo <= x { Q::zero() } else { &c.lo - x });
        let left = i.checked_sub(1).map(|j| x - &self.components[j].hi);
        match (left, right) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    /// `sup_{a ∈ self} dist(a, other)`, exact.
    pub fn directed_hausdorff(&self, other: &IntervalUnion) -> Option<Q> {
        if self.is_empty() {
            return Some(Q::zero());
        }
        if other.is_empty() {
            return None;
        }
        let two = Q::from_integer(2.into());
        let b = &other.components;
        let mut best = Q::zero();
        for c in &self.components {
            // the distance to `other` is piecewise linear on c, maximal at its
            // endpoints or at midpoints of the gaps of `other` lying in c
            let mut candidates = vec![c.lo.clone(), c.hi.clone()];
            let first = b.partition_point(|x| x.hi < c.lo);
            let last = b.partition_point(|x| x.lo <= c.hi);
            for j in first.saturating_sub(1)..last.min(b.len().saturating_sub(1)) {
                let mid = (&b[j].hi + &b[j + 1].lo) / &two;
                if c.contains(&mid) {
                    candidates.push(mid);
                }
            }
            for x in candidates {
                let d = other.distance_to(&x).expect("nonempty");
                if d > best {
                    best = d;
                }
            }
        }
        Some(best)
    }

    /// Hausdorff distance; `None` if exactly one side is empty.
    pub fn hausdorff(&self, other: &IntervalUnion) -> Option<Q> {
        if self.is_empty() && other.is_empty() {
            return Some(Q::zero());
        }
        let a = self.directed_hausdorff(other)?;
        let b = other.directed_hausdorff(self)?;
        Some(a.max(b))
    }

    /// Closed neighbourhood of radius `r`, clipped to `[0,1]`.
    pub fn thickened(&self, r: &Q) -> IntervalUnion {
        Self::from_intervals(
            self.components
                .iter()
                .map(|c| {
                    let lo = (&c.lo - r).max(Q::zero());
                    let hi = (&c.hi + r).min(Q::one());
                    Interval::new(lo, hi)
                })
                .collect(),
        )
    }

    pub fn to_f64(&self) -> Vec<(f64, f64)> {
        self.components.iter().map(Interval::to_f64).collect()
    }
}

/// An axis-parallel closed box in `[0,1]^m`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cuboid {
    pub sides: Vec<Interval>,
}

impl Cuboid {
    pub fn unit(dim: usize) -> Self {
        Self {
            sides: vec![Interval::unit(); dim],
        }
    }

    pub fn point(x: &[Q]) -> Self {
        Self {
            sides: x.iter().cloned().map(Interval::point).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn meets(&self, other: &Cuboid) -> bool {
        self.sides.iter().zip(&other.sides).all(|(a, b)| a.meets(b))
    }

    /// Within `slack` of each other in every coordinate.
    pub fn near(&self, other: &Cuboid, slack: &Q) -> bool {
        self.sides
            .iter()
            .zip(&other.sides)
            .all(|(a, b)| a.lo <= &b.hi + slack && b.lo <= &a.hi + slack)
    }

    pub fn contains_box(&self, other: &Cuboid) -> bool {
        self.sides
            .iter()
            .zip(&other.sides)
            .all(|(a, b)| a.contains_interval(b))
    }

    pub fn contains(&self, x: &[Q]) -> bool {
        self.sides.iter().zip(x).all(|(s, v)| s.contains(v))
    }

    pub fn hull(&self, other: &Cuboid) -> Cuboid {
        Cuboid {
            sides: self
                .sides
                .iter()
                .zip(&other.sides)
                .map(|(a, b)| a.hull(b))
                .collect(),
        }
    }

    /// Sum-metric diameter `Σ_s len(side_s)`.
    pub fn diameter(&self) -> Q {
        self.sides.iter().map(Interval::len).sum()
    }

    pub fn center(&self) -> Vec<Q> {
        let two = Q::from_integer(2.into());
        self.sides.iter().map(|s| (&s.lo + &s.hi) / &two).collect()
    }

    /// Upper bound on `sup_{x ∈ other} dist_1(x, self)`.
    fn excess_of(&self, other: &Cuboid) -> Q {
        self.sides
            .iter()
            .zip(&other.sides)
            .map(|(a, b)| {
                let below = (&a.lo - &b.lo).max(Q::zero());
                let above = (&b.hi - &a.hi).max(Q::zero());
                below.max(above)
            })
            .sum()
    }
}

/// Union of boxes, with intersecting boxes replaced by their hull. For
/// `m ≥ 2` this is an outer approximation of the true union.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BoxUnion {
    boxes: Vec<Cuboid>,
}

impl BoxUnion {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn unit(dim: usize) -> Self {
        Self {
            boxes: vec![Cuboid::unit(dim)],
        }
    }

    pub fn from_boxes(pieces: Vec<Cuboid>) -> Self {
        Self::merge(pieces, &Q::zero())
    }

    /// Like [`from_boxes`](Self::from_boxes), also merging boxes within
    /// `slack` of each other.
    pub fn merged_within(&self, slack: &Q) -> Self {
        Self::merge(self.boxes.clone(), slack)
    }

    fn merge(pieces: Vec<Cuboid>, slack: &Q) -> Self {
        let mut boxes: Vec<Cuboid> = Vec::with_capacity(pieces.len());
        for piece in pieces {
            let mut current = piece;
            // absorb every box the current hull meets, repeating as it grows
            loop {
                let before = boxes.len();
                boxes.retain(|b| {
                    if b.near(&current, slack) {
                        current = current.hull(b);
                        false
                    } else {
                        true
                    }
                });
                if boxes.len() == before {
                    break;
                }
            }
            boxes.push(current);
        }
        boxes.sort_by(|a, b| {
            a.sides
                .iter()
                .map(|s| &s.lo)
                .cmp(b.sides.iter().map(|s| &s.lo))
        });
        Self { boxes }
    }

    pub fn boxes(&self) -> &[Cuboid] {
        &self.boxes
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn union(&self, other: &BoxUnion) -> BoxUnion {
        let mut all = self.boxes.clone();
        all.extend(other.boxes.iter().cloned());
        Self::from_boxes(all)
    }

    pub fn hull(&self) -> Option<Cuboid> {
        let mut it = self.boxes.iter();
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, b| acc.hull(b)))
    }

    /// Sum-metric diameter of the bounding box.
    pub fn diameter(&self) -> Q {
        self.hull().map(|h| h.diameter()).unwrap_or_else(Q::zero)
    }

    pub fn is_subset_of(&self, other: &BoxUnion) -> bool {
        self.boxes
            .iter()
            .all(|b| other.boxes.iter().any(|o| o.contains_box(b)))
    }

    pub fn contains(&self, x: &[Q]) -> bool {
        self.boxes.iter().any(|b| b.contains(x))
    }

    /// Upper bound on the Hausdorff distance in `d1`: each box of one side
    /// is charged its excess over the best single box of the other side.
    pub fn hausdorff_bound(&self, other: &BoxUnion) -> Option<Q> {
        if self.is_empty() && other.is_empty() {
            return Some(Q::zero());
        }
        if self.is_empty() || other.is_empty() {
            return None;
        }
        let directed = |a: &BoxUnion, b: &BoxUnion| -> Q {
            a.boxes
                .iter()
                .map(|x| {
                    b.boxes
                        .iter()
                        .map(|y| y.excess_of(x))
                        .min()
                        .expect("nonempty")
                })
                .max()
                .expect("nonempty")
        };
        Some(directed(self, other).max(directed(other, self)))
    }

    pub fn thickened(&self, r: &Q) -> BoxUnion {
        Self::from_boxes(
            self.boxes
                .iter()
                .map(|b| Cuboid {
                    sides: b
                        .sides
                        .iter()
                        .map(|s| {
                            Interval::new((&s.lo - r).max(Q::zero()), (&s.hi + r).min(Q::one()))
                        })
                        .collect(),
                })
                .collect(),
        )
    }
}

/// A compact subset of the fiber in one of the two representations.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FiberSet {
    Intervals(IntervalUnion),
    Boxes(BoxUnion),
}

impl FiberSet {
    pub fn dim(&self) -> Option<usize> {
        match self {
            FiberSet::Intervals(_) => Some(1),
            FiberSet::Boxes(b) => b.boxes.first().map(Cuboid::dim),
        }
    }

    pub fn component_count(&self) -> usize {
        match self {
            FiberSet::Intervals(u) => u.len(),
            FiberSet::Boxes(b) => b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.component_count() == 0
    }

    pub fn diameter(&self) -> Q {
        match self {
            FiberSet::Intervals(u) => u.diameter(),
            FiberSet::Boxes(b) => b.diameter(),
        }
    }

    /// Union of two sets of the same kind.
    pub fn union(&self, other: &FiberSet) -> FiberSet {
        match (self, other) {
            (FiberSet::Intervals(a), FiberSet::Intervals(b)) => FiberSet::Intervals(a.union(b)),
            (FiberSet::Boxes(a), FiberSet::Boxes(b)) => FiberSet::Boxes(a.union(b)),
            _ => panic!("union of fiber sets of different kinds"),
        }
    }

    pub fn is_subset_of(&self, other: &FiberSet) -> bool {
        match (self, other) {
            (FiberSet::Intervals(a), FiberSet::Intervals(b)) => a.is_subset_of(b),
            (FiberSet::Boxes(a), FiberSet::Boxes(b)) => a.is_subset_of(b),
            _ => false,
        }
    }

    /// Hausdorff distance in `d1`: exact for intervals, an upper bound for
    /// boxes. `None` if exactly one side is empty.
    pub fn hausdorff(&self, other: &FiberSet) -> Option<Q> {
        match (self, other) {
            (FiberSet::Intervals(a), FiberSet::Intervals(b)) => a.hausdorff(b),
            (FiberSet::Boxes(a), FiberSet::Boxes(b)) => a.hausdorff_bound(b),
            _ => None,
        }
    }

    pub fn thickened(&self, r: &Q) -> FiberSet {
        match self {
            FiberSet::Intervals(u) => FiberSet::Intervals(u.thickened(r)),
            FiberSet::Boxes(b) => FiberSet::Boxes(b.thickened(r)),
        }
    }

    pub fn contains(&self, x: &[Q]) -> bool {
        match self {
            FiberSet::Intervals(u) => x.len() == 1 && u.contains(&x[0]),
            FiberSet::Boxes(b) => b.contains(x),
        }
    }

    /// Component boxes as `f64` `(lo, hi)` per coordinate.
    pub fn to_f64(&self) -> Vec<Vec<(f64, f64)>> {
        match self {
            FiberSet::Intervals(u) => u.components.iter().map(|c| vec![c.to_f64()]).collect(),
            FiberSet::Boxes(b) => b
                .boxes
                .iter()
                .map(|c| c.sides.iter().map(Interval::to_f64).collect())
                .collect(),
        }
    }

    pub fn as_intervals(&self) -> Option<&IntervalUnion> {
        match self {
            FiberSet::Intervals(u) => Some(u),
            FiberSet::Boxes(_) => None,
        }
    }
}
