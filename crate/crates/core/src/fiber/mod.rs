//! Fiber maps and the skew product over a Markov shift.

mod pl;
mod sets;

pub use pl::{FixedPoint, FloatPL, PLMap};
pub use sets::{BoxUnion, Cuboid, FiberSet, Interval, IntervalUnion};

use crate::error::{Error, Result};
use crate::exact::{in_unit, Point, Q};
use crate::symbolic::{MarkovSpec, Symbol, SymbolWindow};

/// Coordinatewise product of PL maps on `[0,1]^m`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProductMap {
    factors: Vec<PLMap>,
}

impl ProductMap {
    pub fn new(factors: Vec<PLMap>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidMap("product of zero factors".into()));
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[PLMap] {
        &self.factors
    }
}

/// A monotone fiber map, either a single PL map on `[0,1]` or a product.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FiberMap {
    Pl(PLMap),
    Product(ProductMap),
}

impl From<PLMap> for FiberMap {
    fn from(map: PLMap) -> Self {
        FiberMap::Pl(map)
    }
}

impl From<ProductMap> for FiberMap {
    fn from(map: ProductMap) -> Self {
        FiberMap::Product(map)
    }
}

impl FiberMap {
    pub fn factors(&self) -> &[PLMap] {
        match self {
            FiberMap::Pl(f) => std::slice::from_ref(f),
            FiberMap::Product(p) => &p.factors,
        }
    }

    pub fn dim(&self) -> usize {
        self.factors().len()
    }

    /// Identity of the same kind and dimension.
    pub fn identity_like(&self) -> FiberMap {
        match self {
            FiberMap::Pl(_) => FiberMap::Pl(PLMap::identity()),
            FiberMap::Product(p) => FiberMap::Product(ProductMap {
                factors: vec![PLMap::identity(); p.factors.len()],
            }),
        }
    }

    pub fn eval(&self, x: &[Q]) -> Point {
        self.factors()
            .iter()
            .zip(x)
            .map(|(f, v)| f.eval(v))
            .collect()
    }

    pub fn apply(&self, x: &[Q]) -> Result<Point> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if let Some(v) = x.iter().find(|v| !in_unit(v)) {
            return Err(Error::OutOfDomain(v.to_string()));
        }
        Ok(self.eval(x))
    }

    /// `self ∘ inner`.
    pub fn compose_after(&self, inner: &FiberMap) -> FiberMap {
        let factors: Vec<PLMap> = self
            .factors()
            .iter()
            .zip(inner.factors())
            .map(|(f, g)| f.compose_after(g))
            .collect();
        match self {
            FiberMap::Pl(_) => FiberMap::Pl(factors.into_iter().next().expect("one factor")),
            FiberMap::Product(_) => FiberMap::Product(ProductMap { factors }),
        }
    }

    /// Lipschitz constant for `d1`: the largest slope over all factors.
    pub fn lipschitz_bound(&self) -> Q {
        self.factors()
            .iter()
            .map(PLMap::lipschitz_bound)
            .max()
            .expect("nonempty")
    }

    /// Lipschitz constant for `d1` on a box.
    pub fn lipschitz_on(&self, region: &Cuboid) -> Q {
        self.factors()
            .iter()
            .zip(&region.sides)
            .map(|(f, s)| f.lipschitz_on(&s.lo, &s.hi))
            .max()
            .expect("nonempty")
    }

    pub fn is_injective(&self) -> bool {
        self.factors().iter().all(PLMap::is_injective)
    }

    pub fn image_box(&self, b: &Cuboid) -> Cuboid {
        Cuboid {
            sides: self
                .factors()
                .iter()
                .zip(&b.sides)
                .map(|(f, s)| s.image(f))
                .collect(),
        }
    }

    /// Image of a fiber set. Panics on a dimension mismatch.
    pub fn image(&self, set: &FiberSet) -> FiberSet {
        match set {
            FiberSet::Intervals(u) => {
                assert_eq!(self.dim(), 1, "interval set under a multi-dimensional map");
                FiberSet::Intervals(u.image(&self.factors()[0]))
            }
            FiberSet::Boxes(b) => FiberSet::Boxes(BoxUnion::from_boxes(
                b.boxes().iter().map(|c| self.image_box(c)).collect(),
            )),
        }
    }
}

/// A Markov shift with one fiber map per symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewSystem {
    spec: MarkovSpec,
    maps: Vec<FiberMap>,
}

impl SkewSystem {
    pub fn new(spec: MarkovSpec, maps: Vec<FiberMap>) -> Result<Self> {
        if maps.len() != spec.alphabet_size() {
            return Err(Error::AlphabetMismatch(spec.alphabet_size(), maps.len()));
        }
        let dim = maps[0].dim();
        for m in &maps {
            if m.dim() != dim || std::mem::discriminant(m) != std::mem::discriminant(&maps[0]) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: m.dim(),
                });
            }
        }
        Ok(Self { spec, maps })
    }

    pub fn spec(&self) -> &MarkovSpec {
        &self.spec
    }

    pub fn maps(&self) -> &[FiberMap] {
        &self.maps
    }

    pub fn alphabet_size(&self) -> usize {
        self.maps.len()
    }

    pub fn dim(&self) -> usize {
        self.maps[0].dim()
    }

    pub fn map(&self, symbol: Symbol) -> &FiberMap {
        &self.maps[symbol as usize - 1]
    }

    /// The whole fiber `M` in the representation matching the maps.
    pub fn full_set(&self) -> FiberSet {
        match &self.maps[0] {
            FiberMap::Pl(_) => FiberSet::Intervals(IntervalUnion::unit()),
            FiberMap::Product(p) => FiberSet::Boxes(BoxUnion::unit(p.factors.len())),
        }
    }

    /// A single point as a fiber set.
    pub fn point_set(&self, x: &[Q]) -> FiberSet {
        match &self.maps[0] {
            FiberMap::Pl(_) => {
                FiberSet::Intervals(IntervalUnion::from_intervals(vec![Interval::point(
                    x[0].clone(),
                )]))
            }
            FiberMap::Product(_) => FiberSet::Boxes(BoxUnion::from_boxes(vec![Cuboid::point(x)])),
        }
    }

    /// A box as a fiber set.
    pub fn box_set(&self, b: Cuboid) -> FiberSet {
        match &self.maps[0] {
            FiberMap::Pl(_) => FiberSet::Intervals(IntervalUnion::from_intervals(b.sides)),
            FiberMap::Product(_) => FiberSet::Boxes(BoxUnion::from_boxes(vec![b])),
        }
    }

    fn check_symbols(&self, word: &[Symbol]) -> Result<()> {
        let k = self.alphabet_size();
        match word.iter().find(|&&s| s == 0 || s as usize > k) {
            Some(&s) => Err(Error::InvalidSymbol {
                symbol: s,
                alphabet_size: k,
            }),
            None => Ok(()),
        }
    }

    /// `f_{w_{n−1}} ∘ … ∘ f_{w_0}`; the first symbol acts first.
    pub fn compose(&self, word: &[Symbol]) -> Result<FiberMap> {
        self.check_symbols(word)?;
        let mut acc = self.maps[0].identity_like();
        for &s in word {
            acc = self.map(s).compose_after(&acc);
        }
        Ok(acc)
    }

    /// Applies `f_{w_{n−1}} ∘ … ∘ f_{w_0}` to a point without building the
    /// composition.
    pub fn apply_word(&self, word: &[Symbol], x: &[Q]) -> Result<Point> {
        self.check_symbols(word)?;
        // validates dimension and domain
        self.maps[0].apply(x)?;
        let mut p = x.to_vec();
        for &s in word {
            p = self.map(s).eval(&p);
        }
        Ok(p)
    }

    /// Like [`compose`](Self::compose) but rejects words the Markov chain
    /// cannot produce.
    pub fn compose_admissible(&self, word: &[Symbol]) -> Result<FiberMap> {
        if !self.spec.is_admissible(word) {
            return Err(Error::InadmissibleWord(word.to_vec()));
        }
        self.compose(word)
    }

    /// One step of the skew product: `(σθ, f_{θ_0}(x))`.
    pub fn step(&self, theta: &SymbolWindow, x: &[Q]) -> Result<(SymbolWindow, Point)> {
        if theta.alphabet_size() != self.alphabet_size() {
            return Err(Error::AlphabetMismatch(
                self.alphabet_size(),
                theta.alphabet_size(),
            ));
        }
        let y = self.map(theta.symbol_at(0)).apply(x)?;
        Ok((theta.shift(1), y))
    }

    /// Image of a set under the map of one symbol.
    pub fn image(&self, symbol: Symbol, set: &FiberSet) -> FiberSet {
        self.map(symbol).image(set)
    }
}
