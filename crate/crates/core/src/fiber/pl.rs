//! Continuous nondecreasing piecewise-linear self-maps of `[0,1]` with exact
//! rational breakpoints.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exact::{self, in_unit, Q};

/// A PL map given by breakpoints `0 = x_0 < … < x_n = 1` and values
/// `y_0 ≤ … ≤ y_n` in `[0,1]`, linear in between.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PLMap {
    xs: Vec<Q>,
    ys: Vec<Q>,
}

impl PLMap {
    pub fn new(xs: Vec<Q>, ys: Vec<Q>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(Error::InvalidMap(format!(
                "need at least two breakpoints and as many values (got {} and {})",
                xs.len(),
                ys.len()
            )));
        }
        if !xs[0].is_zero() || !xs[xs.len() - 1].is_one() {
            return Err(Error::InvalidMap(
                "breakpoints must start at 0 and end at 1".into(),
            ));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidMap(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if let Some(y) = ys.iter().find(|y| !in_unit(y)) {
            return Err(Error::InvalidMap(format!("value {y} outside [0, 1]")));
        }
        if let Some(i) = ys.windows(2).position(|w| w[0] > w[1]) {
            return Err(Error::NotMonotone(i, i + 1));
        }
        Ok(Self { xs, ys })
    }

    /// Parses two parallel arrays of decimal or `p/q` literals.
    pub fn parse(xs: &[&str], ys: &[&str]) -> Result<Self> {
        let xs = xs
            .iter()
            .map(|s| exact::parse_q(s))
            .collect::<Result<Vec<_>>>()?;
        let ys = ys
            .iter()
            .map(|s| exact::parse_q(s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(xs, ys)
    }

    pub fn identity() -> Self {
        Self {
            xs: vec![Q::zero(), Q::one()],
            ys: vec![Q::zero(), Q::one()],
        }
    }

    /// `x ↦ slope·x + intercept`.
    pub fn affine(slope: Q, intercept: Q) -> Result<Self> {
        let at_one = &slope + &intercept;
        Self::new(vec![Q::zero(), Q::one()], vec![intercept, at_one])
    }

    pub fn breakpoints(&self) -> &[Q] {
        &self.xs
    }

    pub fn values(&self) -> &[Q] {
        &self.ys
    }

    pub fn piece_count(&self) -> usize {
        self.xs.len() - 1
    }

    fn slope(&self, piece: usize) -> Q {
        (&self.ys[piece + 1] - &self.ys[piece]) / (&self.xs[piece + 1] - &self.xs[piece])
    }

    pub fn slopes(&self) -> Vec<Q> {
        (0..self.piece_count()).map(|i| self.slope(i)).collect()
    }

    /// Index of a piece whose closed domain contains `x`.
    fn piece_of(&self, x: &Q) -> usize {
        match self.xs.binary_search(x) {
            Ok(i) => i.min(self.piece_count() - 1),
            Err(i) => (i.max(1) - 1).min(self.piece_count() - 1),
        }
    }

    /// Evaluation without the domain check.
    pub fn eval(&self, x: &Q) -> Q {
        let i = self.piece_of(x);
        if x == &self.xs[i] {
            return self.ys[i].clone();
        }
        if x == &self.xs[i + 1] {
            return self.ys[i + 1].clone();
        }
        &self.ys[i]
            + (&self.ys[i + 1] - &self.ys[i]) * (x - &self.xs[i]) / (&self.xs[i + 1] - &self.xs[i])
    }

    pub fn apply(&self, x: &Q) -> Result<Q> {
        if !in_unit(x) {
            return Err(Error::OutOfDomain(x.to_string()));
        }
        Ok(self.eval(x))
    }

    /// Maximum slope over all pieces.
    pub fn lipschitz_bound(&self) -> Q {
        self.slopes().into_iter().max().unwrap_or_else(Q::zero)
    }

    /// Maximum slope over the pieces meeting `[a, b]`.
    pub fn lipschitz_on(&self, a: &Q, b: &Q) -> Q {
        (0..self.piece_count())
            .filter(|&i| {
                &self.xs[i] < b && &self.xs[i + 1] > a
                    || (a == b && &self.xs[i] <= a && a <= &self.xs[i + 1])
            })
            .map(|i| self.slope(i))
            .max()
            .unwrap_or_else(Q::zero)
    }

    /// Strictly increasing values.
    pub fn is_injective(&self) -> bool {
        self.ys.windows(2).all(|w| w[0] < w[1])
    }

    /// `self ∘ inner`, exact, with collinear pieces merged.
    pub fn compose_after(&self, inner: &PLMap) -> PLMap {
        let mut xs: Vec<Q> = inner.xs.clone();
        for b in &self.xs[1..self.xs.len() - 1] {
            for i in 0..inner.piece_count() {
                let (y0, y1) = (&inner.ys[i], &inner.ys[i + 1]);
                if y0 < b && b < y1 {
                    let x = &inner.xs[i] + (b - y0) * (&inner.xs[i + 1] - &inner.xs[i]) / (y1 - y0);
                    xs.push(x);
                }
            }
        }
        xs.sort();
        xs.dedup();
        let ys: Vec<Q> = xs.iter().map(|x| self.eval(&inner.eval(x))).collect();
        PLMap { xs, ys }.simplified()
    }

    /// Drops breakpoints where adjacent pieces are collinear.
    pub fn simplified(mut self) -> PLMap {
        let mut i = 1;
        while i + 1 < self.xs.len() {
            let left = (&self.ys[i] - &self.ys[i - 1]) / (&self.xs[i] - &self.xs[i - 1]);
            let right = (&self.ys[i + 1] - &self.ys[i]) / (&self.xs[i + 1] - &self.xs[i]);
            if left == right {
                self.xs.remove(i);
                self.ys.remove(i);
            } else {
                i += 1;
            }
        }
        self
    }

    /// Solutions of `f(x) = x` that are isolated, with the slopes of the
    /// pieces to the left and right of each. Pieces lying on the diagonal
    /// contribute their endpoints.
    pub fn fixed_points(&self) -> Vec<FixedPoint> {
        let mut out: Vec<FixedPoint> = Vec::new();
        for i in 0..self.piece_count() {
            let s = self.slope(i);
            let (x0, x1) = (&self.xs[i], &self.xs[i + 1]);
            let candidates: Vec<Q> = if s.is_one() {
                if self.ys[i] == *x0 {
                    vec![x0.clone(), x1.clone()]
                } else {
                    vec![]
                }
            } else {
                // y0 + s(x − x0) = x
                let x = (&self.ys[i] - &s * x0) / (Q::one() - &s);
                if &x >= x0 && &x <= x1 {
                    vec![x]
                } else {
                    vec![]
                }
            };
            for x in candidates {
                if out.last().map(|p| p.x == x).unwrap_or(false) {
                    continue;
                }
                let (left, right) = self.one_sided_slopes(&x);
                out.push(FixedPoint {
                    x,
                    left_slope: left,
                    right_slope: right,
                });
            }
        }
        out
    }

    /// Slopes of the pieces just left and just right of `x` (a single piece
    /// gives both at interior points; boundary points repeat the one side).
    pub fn one_sided_slopes(&self, x: &Q) -> (Q, Q) {
        let n = self.piece_count();
        let right_piece = self.xs[..n].iter().rposition(|b| b <= x).unwrap_or(0);
        let left_piece = self.xs[1..].iter().position(|b| b >= x).unwrap_or(n - 1);
        (self.slope(left_piece), self.slope(right_piece))
    }

    /// The map `t ↦ (f(a + (b−a)t) − a)/(b−a)` on `[0,1]`, i.e. `f|[a,b]`
    /// in the affine chart of `[a,b]`. Requires `f([a,b]) ⊆ [a,b]`.
    pub fn conjugate_to_unit(&self, a: &Q, b: &Q) -> Result<PLMap> {
        if a >= b {
            return Err(Error::InvalidMap("empty restriction interval".into()));
        }
        let (fa, fb) = (self.eval(a), self.eval(b));
        if &fa < a || &fb > b {
            return Err(Error::InvalidMap(
                "restriction interval is not invariant".into(),
            ));
        }
        let len = b - a;
        let mut ts = vec![Q::zero()];
        ts.extend(
            self.xs
                .iter()
                .filter(|x| *x > a && *x < b)
                .map(|x| (x - a) / &len),
        );
        ts.push(Q::one());
        let ys = ts
            .iter()
            .map(|t| (self.eval(&(a + t * &len)) - a) / &len)
            .collect();
        Ok(PLMap { xs: ts, ys }.simplified())
    }

    /// Breakpoints of this unit map transported to `[a,b]`, as `(x, y)`
    /// pairs with `x = a + (b−a)t`, `y = a + (b−a)g(t)`.
    pub fn transported(&self, a: &Q, b: &Q) -> Vec<(Q, Q)> {
        let len = b - a;
        self.xs
            .iter()
            .zip(&self.ys)
            .map(|(t, y)| (a + t * &len, a + y * &len))
            .collect()
    }

    /// Builds a map from `(x, y)` nodes, sorting by `x`.
    pub fn from_nodes(mut nodes: Vec<(Q, Q)>) -> Result<PLMap> {
        nodes.sort_by(|p, q| p.0.cmp(&q.0));
        nodes.dedup_by(|p, q| p.0 == q.0 && p.1 == q.1);
        let (xs, ys) = nodes.into_iter().unzip();
        Ok(PLMap::new(xs, ys)?.simplified())
    }

    /// Applies per-node value offsets, clamping into `[0,1]` and restoring
    /// monotonicity by a running maximum.
    pub fn perturbed(&self, offsets: &[Q]) -> PLMap {
        let mut ys: Vec<Q> = self
            .ys
            .iter()
            .zip(offsets)
            .map(|(y, d)| {
                let v = y + d;
                if v.is_negative() {
                    Q::zero()
                } else if v > Q::one() {
                    Q::one()
                } else {
                    v
                }
            })
            .collect();
        for i in 1..ys.len() {
            if ys[i] < ys[i - 1] {
                ys[i] = ys[i - 1].clone();
            }
        }
        PLMap {
            xs: self.xs.clone(),
            ys,
        }
    }
}

/// Double-precision copy of a [`PLMap`] for long forward orbits, where
/// exact denominators would grow without bound.
#[derive(Clone, Debug, PartialEq)]
pub struct FloatPL {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl FloatPL {
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len() - 1;
        let i = self.xs[1..n].partition_point(|b| *b <= x).min(n - 1);
        let (x0, x1, y0, y1) = (self.xs[i], self.xs[i + 1], self.ys[i], self.ys[i + 1]);
        (y0 + (y1 - y0) * (x - x0) / (x1 - x0)).clamp(0.0, 1.0)
    }
}

impl From<&PLMap> for FloatPL {
    fn from(map: &PLMap) -> Self {
        Self {
            xs: map.xs.iter().map(exact::to_f64).collect(),
            ys: map.ys.iter().map(exact::to_f64).collect(),
        }
    }
}

/// A fixed point of a PL map with the slopes on either side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedPoint {
    pub x: Q,
    pub left_slope: Q,
    pub right_slope: Q,
}

impl FixedPoint {
    pub fn is_repelling(&self) -> bool {
        self.left_slope > Q::one() && self.right_slope > Q::one()
    }

    pub fn is_attracting(&self) -> bool {
        self.left_slope < Q::one() && self.right_slope < Q::one()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{q, qi};

    fn half() -> PLMap {
        PLMap::affine(q(1, 2), qi(0)).unwrap()
    }

    #[test]
    fn apply_examples() {
        assert_eq!(half().apply(&qi(1)).unwrap(), q(1, 2));
        let id = PLMap::identity();
        for x in [q(0, 1), q(1, 7), q(5, 9), qi(1)] {
            assert_eq!(id.apply(&x).unwrap(), x);
        }
        assert!(matches!(half().apply(&q(3, 2)), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn tent_rejected_at_construction() {
        let tent = PLMap::new(vec![qi(0), q(1, 2), qi(1)], vec![qi(0), qi(1), qi(0)]);
        assert_eq!(tent.unwrap_err(), Error::NotMonotone(1, 2));
    }

    #[test]
    fn invalid_breakpoints() {
        assert!(PLMap::new(vec![qi(0), qi(1)], vec![qi(0)]).is_err());
        assert!(PLMap::new(vec![q(1, 4), qi(1)], vec![qi(0), qi(1)]).is_err());
        assert!(PLMap::new(vec![qi(0), qi(1)], vec![qi(0), qi(2)]).is_err());
        assert!(PLMap::new(vec![qi(0), q(1, 2), q(1, 2), qi(1)], vec![qi(0); 4]).is_err());
    }

    #[test]
    fn compose_binary_pair() {
        let f1 = half();
        let f2 = PLMap::affine(q(1, 2), q(1, 2)).unwrap();
        // f2 ∘ f1 = x/4 + 1/2
        let g = f2.compose_after(&f1);
        assert_eq!(g, PLMap::affine(q(1, 4), q(1, 2)).unwrap());
        assert_eq!(f1.compose_after(&PLMap::identity()), f1);
        assert_eq!(PLMap::identity().compose_after(&f1), f1);
    }

    #[test]
    fn lipschitz_examples() {
        assert_eq!(half().lipschitz_bound(), q(1, 2));
        assert_eq!(PLMap::identity().lipschitz_bound(), qi(1));
        let two_piece =
            PLMap::new(vec![qi(0), q(1, 2), qi(1)], vec![qi(0), q(3, 20), qi(1)]).unwrap();
        assert_eq!(two_piece.slopes(), vec![q(3, 10), q(17, 10)]);
        assert_eq!(two_piece.lipschitz_bound(), q(17, 10));
        let slopes_03_20 = PLMap::new(
            vec![qi(0), q(1, 2), q(3, 4), qi(1)],
            vec![qi(0), q(3, 20), q(13, 20), q(13, 20)],
        )
        .unwrap();
        assert_eq!(slopes_03_20.lipschitz_bound(), qi(2));
    }

    #[test]
    fn fixed_points_and_slopes() {
        let f = PLMap::new(
            vec![qi(0), q(1, 2), q(7, 10), qi(1)],
            vec![qi(0), q(1, 5), q(3, 5), q(4, 5)],
        )
        .unwrap();
        let fps = f.fixed_points();
        assert_eq!(fps.len(), 1);
        assert_eq!(fps[0].x, qi(0));
        assert!(fps[0].is_attracting());
        assert!(PLMap::identity().fixed_points().len() >= 2);
    }

    #[test]
    fn conjugation_roundtrip() {
        let f = PLMap::new(
            vec![qi(0), q(1, 4), q(1, 2), qi(1)],
            vec![qi(0), q(1, 8), q(3, 8), q(1, 2)],
        )
        .unwrap();
        let g = f.conjugate_to_unit(&qi(0), &q(1, 2)).unwrap();
        assert_eq!(g.breakpoints(), &[qi(0), q(1, 2), qi(1)]);
        assert_eq!(g.values(), &[qi(0), q(1, 4), q(3, 4)]);
        let nodes = g.transported(&qi(0), &q(1, 2));
        assert_eq!(nodes[1], (q(1, 4), q(1, 8)));
    }

    #[test]
    fn float_copy_agrees() {
        let f = PLMap::new(
            vec![qi(0), q(1, 3), qi(1)],
            vec![q(1, 10), q(1, 2), q(9, 10)],
        )
        .unwrap();
        let g = FloatPL::from(&f);
        for k in 0..=30 {
            let x = q(k, 30);
            assert!((g.eval(exact::to_f64(&x)) - exact::to_f64(&f.eval(&x))).abs() < 1e-15);
        }
    }

    #[test]
    fn perturbed_stays_monotone() {
        let f = PLMap::new(vec![qi(0), q(1, 2), qi(1)], vec![qi(0), q(1, 2), q(1, 2)]).unwrap();
        let g = f.perturbed(&[q(-1, 10), q(1, 100), q(-1, 100)]);
        assert!(PLMap::new(g.breakpoints().to_vec(), g.values().to_vec()).is_ok());
        assert_eq!(g.values()[0], qi(0));
    }
}
