//! Concrete systems: contracting references, the splitting family, K-pairs,
//! the disconnected-spine family and an orientation-preserving porcupine.
//!
//! Every builder uses fixed rational parameters, so results are
//! reproducible bit for bit.

use num_traits::{One, Zero};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::{q, qi, Q};
use crate::fiber::{FiberMap, Interval, IntervalUnion, PLMap, ProductMap, SkewSystem};
use crate::rng;
use crate::symbolic::{MarkovSpec, Symbol};

/// Extra data a builder records next to its system.
#[derive(Clone, Debug, PartialEq)]
pub enum ZooMeta {
    None,
    /// `[0,1]` is covered by the images of the binary pair.
    ContractionCover {
        covered: Interval,
    },
    Splitting {
        depth: usize,
        word_a: Vec<Symbol>,
        word_b: Vec<Symbol>,
        fixed_point: Q,
    },
    DisconnectedSpines {
        intervals: Vec<Interval>,
        gap: Q,
        length: Q,
    },
    /// The decreasing map of the classical porcupine is replaced by an
    /// increasing one.
    Porcupine {
        orientation_preserving: bool,
    },
}

#[derive(Clone, Debug)]
pub struct ZooSystem {
    pub name: &'static str,
    pub system: SkewSystem,
    pub meta: ZooMeta,
}

fn affine(slope: Q, intercept: Q) -> FiberMap {
    PLMap::affine(slope, intercept)
        .expect("affine map into [0,1]")
        .into()
}

/// `f1 = x/2`, `f2 = x/2 + 1/2` over Bernoulli(1/2): `ρ` is the binary
/// expansion with digits `θ_{-i} − 1`.
pub fn build_binary_ifs() -> ZooSystem {
    let system = SkewSystem::new(
        MarkovSpec::uniform(2).expect("k = 2"),
        vec![affine(q(1, 2), qi(0)), affine(q(1, 2), q(1, 2))],
    )
    .expect("consistent system");
    ZooSystem {
        name: "binary_ifs",
        system,
        meta: ZooMeta::None,
    }
}

/// `x/3` and `x/3 + 2/3` over Bernoulli(1/2).
pub fn build_middle_third() -> ZooSystem {
    let system = SkewSystem::new(
        MarkovSpec::uniform(2).expect("k = 2"),
        vec![affine(q(1, 3), qi(0)), affine(q(1, 3), q(2, 3))],
    )
    .expect("consistent system");
    ZooSystem {
        name: "middle_third",
        system,
        meta: ZooMeta::None,
    }
}

/// `k` copies of `x ↦ c·x` over the uniform Bernoulli measure.
pub fn build_uniform_contraction(c: Q, k: usize) -> Result<ZooSystem> {
    if c <= Q::zero() || c > Q::one() {
        return Err(Error::InvalidParameter(format!(
            "contraction factor {c} outside (0, 1]"
        )));
    }
    let maps = vec![affine(c, qi(0)); k];
    let system = SkewSystem::new(MarkovSpec::uniform(k)?, maps)?;
    Ok(ZooSystem {
        name: "uniform_contraction",
        system,
        meta: ZooMeta::None,
    })
}

/// `k` identity maps over the uniform Bernoulli measure, in dimension `m`.
pub fn build_identity(k: usize, m: usize) -> Result<ZooSystem> {
    let map: FiberMap = if m == 1 {
        PLMap::identity().into()
    } else {
        ProductMap::new(vec![PLMap::identity(); m])?.into()
    };
    let system = SkewSystem::new(MarkovSpec::uniform(k)?, vec![map; k])?;
    Ok(ZooSystem {
        name: "identity",
        system,
        meta: ZooMeta::None,
    })
}

/// The binary pair followed by `extra_maps`, over the uniform Bernoulli
/// measure on `2 + extra_maps.len()` symbols.
pub fn build_contraction_cover(extra_maps: Vec<PLMap>) -> Result<ZooSystem> {
    let mut maps = vec![affine(q(1, 2), qi(0)), affine(q(1, 2), q(1, 2))];
    maps.extend(extra_maps.into_iter().map(FiberMap::from));
    let system = SkewSystem::new(MarkovSpec::uniform(maps.len())?, maps)?;
    Ok(ZooSystem {
        name: "contraction_cover",
        system,
        meta: ZooMeta::ContractionCover {
            covered: Interval::unit(),
        },
    })
}

/// Per coordinate `f1` is PL through `(0,0), (1/2,1/8), (1,1)`, fixing `0`
/// and `1` with `f1(x) < x` in between; `f2(x) = x/4 + 3/8` has fixed point
/// `1/2`. The base has transition matrix
/// `[[p11, 1−p11], [p21, 1−p21]]`.
///
/// The recorded splitting words are `(2,1,2,…,2)` and `(2,…,2)` of length
/// `depth + 2`, with `depth ≥ 1` the least value for which `f1(f2^depth(M))`
/// and `f2(f2^depth(M))` have disjoint projections.
pub fn build_msplits(m: usize, p11: f64, p21: f64) -> Result<ZooSystem> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "fiber dimension m must be at least 1".into(),
        ));
    }
    if !(0.0..=1.0).contains(&p11) {
        return Err(Error::InvalidParameter(format!(
            "p11 = {p11} outside [0, 1]"
        )));
    }
    if !(p21 > 0.0 && p21 < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "p21 = {p21} outside (0, 1)"
        )));
    }
    let spec = MarkovSpec::new(vec![vec![p11, 1.0 - p11], vec![p21, 1.0 - p21]])?;
    let f1 = PLMap::new(vec![qi(0), q(1, 2), qi(1)], vec![qi(0), q(1, 8), qi(1)])?;
    let f2 = PLMap::affine(q(1, 4), q(3, 8))?;
    let fixed_point = q(1, 2);
    let (m1, m2): (FiberMap, FiberMap) = if m == 1 {
        (f1.clone().into(), f2.clone().into())
    } else {
        (
            ProductMap::new(vec![f1.clone(); m])?.into(),
            ProductMap::new(vec![f2.clone(); m])?.into(),
        )
    };
    let system = SkewSystem::new(spec, vec![m1, m2])?;

    let mut depth = 1;
    loop {
        let mut img = Interval::unit();
        for _ in 0..depth {
            img = img.image(&f2);
        }
        let (a, b) = (img.image(&f1), img.image(&f2));
        if !a.meets(&b) {
            break;
        }
        depth += 1;
    }
    let mut word_a = vec![2, 1];
    word_a.extend(std::iter::repeat(2).take(depth));
    let word_b = vec![2; depth + 2];
    Ok(ZooSystem {
        name: "msplits",
        system,
        meta: ZooMeta::Splitting {
            depth,
            word_a,
            word_b,
            fixed_point,
        },
    })
}

/// A pair of PL maps forming a K-pair for `J`.
#[derive(Clone, Debug, PartialEq)]
pub struct KPairSpec {
    pub interval: Interval,
    pub f1: PLMap,
    pub f2: PLMap,
    /// Words `h_i` (first symbol acts first) whose compositions contract
    /// `J` and whose images cover `J`.
    pub contracting_words: Vec<Vec<Symbol>>,
    /// Word whose composition has a repelling fixed point inside `J`.
    pub repelling_word: Vec<Symbol>,
    pub repelling_point: Q,
}

impl KPairSpec {
    fn compose(&self, word: &[Symbol]) -> PLMap {
        word.iter().fold(PLMap::identity(), |acc, &s| {
            let f = if s == 1 { &self.f1 } else { &self.f2 };
            f.compose_after(&acc)
        })
    }

    /// Checks every K-pair condition exactly.
    pub fn validate(&self) -> Result<()> {
        let (a, b) = (&self.interval.lo, &self.interval.hi);
        let fail = |msg: &str| Err(Error::KPair(msg.to_string()));
        if !(self.interval.image(&self.f1).lo >= *a && self.interval.image(&self.f1).hi <= *b) {
            return fail("f1 does not map J into itself");
        }
        if !(self.interval.image(&self.f2).lo >= *a && self.interval.image(&self.f2).hi <= *b) {
            return fail("f2 does not map J into itself");
        }
        if self.f1.eval(a) != *a || self.f1.one_sided_slopes(a).1 >= Q::one() {
            return fail("left endpoint is not an attracting fixed point of f1");
        }
        if self.f2.eval(b) != *b || self.f2.one_sided_slopes(b).0 >= Q::one() {
            return fail("right endpoint is not an attracting fixed point of f2");
        }
        let r = self.compose(&self.repelling_word);
        let p = &self.repelling_point;
        let (left, right) = r.one_sided_slopes(p);
        if r.eval(p) != *p || p <= a || p >= b || left <= Q::one() || right <= Q::one() {
            return fail("repelling word has no repelling fixed point inside J");
        }
        let mut pieces = Vec::new();
        for w in &self.contracting_words {
            let h = self.compose(w);
            if h.lipschitz_on(a, b) >= Q::one() {
                return fail("covering word is not a contraction on J");
            }
            pieces.push(self.interval.image(&h));
        }
        if IntervalUnion::from_intervals(pieces)
            != IntervalUnion::from_intervals(vec![self.interval.clone()])
        {
            return fail("contracting images do not cover J");
        }
        Ok(())
    }

    /// Transports the pair to `[lo, hi]`, returning PL nodes for each map.
    pub fn nodes_on(&self, lo: &Q, hi: &Q) -> (Vec<(Q, Q)>, Vec<(Q, Q)>) {
        (self.f1.transported(lo, hi), self.f2.transported(lo, hi))
    }
}

/// Breakpoints of the reference pair: `g1` through `(0,0), (1/2,1/5),
/// (7/10,3/5), (1,4/5)` and `g2(x) = 1 − g1(1 − x)`.
fn reference_pair() -> (PLMap, PLMap) {
    let g1 = PLMap::new(
        vec![qi(0), q(1, 2), q(7, 10), qi(1)],
        vec![qi(0), q(1, 5), q(3, 5), q(4, 5)],
    )
    .expect("valid map");
    let g2 = PLMap::new(
        vec![qi(0), q(3, 10), q(1, 2), qi(1)],
        vec![q(1, 5), q(2, 5), q(4, 5), qi(1)],
    )
    .expect("valid map");
    (g1, g2)
}

/// Greedy exact cover of `J` by images of contracting compositions of
/// length at most `max_len`.
pub fn find_contracting_cover(
    f1: &PLMap,
    f2: &PLMap,
    interval: &Interval,
    max_len: usize,
) -> Option<Vec<Vec<Symbol>>> {
    let (a, b) = (&interval.lo, &interval.hi);
    let mut candidates: Vec<(Interval, Vec<Symbol>)> = Vec::new();
    let mut level: Vec<(Vec<Symbol>, PLMap)> = vec![(vec![], PLMap::identity())];
    for _ in 0..max_len {
        let next: Vec<(Vec<Symbol>, PLMap)> = level
            .par_iter()
            .flat_map_iter(|(w, h)| {
                [(1 as Symbol, f1), (2, f2)].into_iter().map(move |(s, f)| {
                    let mut word = w.clone();
                    word.push(s);
                    (word, f.compose_after(h))
                })
            })
            .collect();
        for (w, h) in &next {
            if h.lipschitz_on(a, b) < Q::one() {
                candidates.push((interval.image(h), w.clone()));
            }
        }
        level = next;
    }
    // interval cover by the classical greedy sweep
    candidates.sort_by(|x, y| x.0.lo.cmp(&y.0.lo).then(y.0.hi.cmp(&x.0.hi)));
    let mut chosen = Vec::new();
    let mut reach = a.clone();
    let mut first = true;
    let mut i = 0;
    while first || &reach < b {
        let mut best: Option<&(Interval, Vec<Symbol>)> = None;
        while i < candidates.len() && (candidates[i].0.lo <= reach) {
            if best.map_or(true, |c| candidates[i].0.hi > c.0.hi) {
                best = Some(&candidates[i]);
            }
            i += 1;
        }
        let c = best?;
        if !first && c.0.hi <= reach {
            return None;
        }
        if first && c.0.lo != *a {
            return None;
        }
        first = false;
        reach = c.0.hi.clone();
        chosen.push(c.1.clone());
    }
    Some(chosen)
}

/// The reference K-pair on `J = [0,1]`, validated at construction.
pub fn build_kpair() -> Result<KPairSpec> {
    let (f1, f2) = reference_pair();
    let interval = Interval::unit();
    let contracting_words = find_contracting_cover(&f1, &f2, &interval, 10)
        .ok_or_else(|| Error::KPair("no contracting cover of length ≤ 10".into()))?;
    // f1 ∘ f2 has a repelling fixed point at 2/5
    let repelling_word = vec![2, 1];
    let h = f1.compose_after(&f2);
    let repelling_point = h
        .fixed_points()
        .into_iter()
        .find(|p| p.is_repelling())
        .map(|p| p.x)
        .ok_or_else(|| Error::KPair("f1 ∘ f2 has no repelling fixed point".into()))?;
    let spec = KPairSpec {
        interval,
        f1,
        f2,
        contracting_words,
        repelling_word,
        repelling_point,
    };
    spec.validate()?;
    Ok(spec)
}

/// Gap between consecutive intervals of the disconnected-spine family.
pub fn theorem2_gap() -> Q {
    q(1, 20)
}

/// The intervals `I_1, …, I_m` of equal length separated by
/// [`theorem2_gap`], with `a_1 = 0` and `b_m = 1`.
pub fn theorem2_intervals(m: usize) -> Result<Vec<Interval>> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    let gap = theorem2_gap();
    let length = (Q::one() - qi(m as i64 - 1) * &gap) / qi(m as i64);
    if length <= gap {
        return Err(Error::InvalidParameter(format!(
            "{m} intervals with gaps {gap} do not fit in [0, 1]"
        )));
    }
    Ok((0..m)
        .map(|i| {
            let lo = qi(i as i64) * (&length + &gap);
            let hi = &lo + &length;
            Interval::new(lo, hi)
        })
        .collect())
}

/// Four maps on `[0,1]` over Bernoulli(1/4, …, 1/4):
/// `f1, f2` restrict to affine copies of the reference K-pair on every
/// `I_i`; on each gap they have slope `1/2` next to the fixed endpoints
/// `b_i` (for `f2`) and `a_{i+1}` (for `f1`) and are linear elsewhere; `f3(x) = a_1 + L/20 + 9L·x/10` contracts
/// `[0,1]` into `I_1`; `f4` has slope `1/4` on each `I_i`, sending `I_i`
/// onto `[a_{i+1} + L/8, a_{i+1} + 3L/8]` for `i < m` and `I_m` onto
/// `[a_m + 5L/8, a_m + 7L/8]`.
pub fn build_theorem2_family(m: usize) -> Result<ZooSystem> {
    build_theorem2_family_with(m, MarkovSpec::uniform(4)?)
}

/// [`build_theorem2_family`] over an arbitrary Markov measure on 4 symbols.
pub fn build_theorem2_family_with(m: usize, spec: MarkovSpec) -> Result<ZooSystem> {
    if spec.alphabet_size() != 4 {
        return Err(Error::AlphabetMismatch(4, spec.alphabet_size()));
    }
    let intervals = theorem2_intervals(m)?;
    let length = intervals[0].len();
    let (g1, g2) = reference_pair();
    let mut n1 = Vec::new();
    let mut n2 = Vec::new();
    let gap = theorem2_gap();
    let (quarter, eighth) = (&gap / qi(4), &gap / qi(8));
    for (i, iv) in intervals.iter().enumerate() {
        if i > 0 {
            n1.push((&iv.lo - &quarter, &iv.lo - &eighth));
        }
        n1.extend(g1.transported(&iv.lo, &iv.hi));
        n2.extend(g2.transported(&iv.lo, &iv.hi));
        if i + 1 < m {
            n2.push((&iv.hi + &quarter, &iv.hi + &eighth));
        }
    }
    let f1 = PLMap::from_nodes(n1)?;
    let f2 = PLMap::from_nodes(n2)?;
    let a1 = &intervals[0].lo;
    let f3 = PLMap::affine(q(9, 10) * &length, a1 + &length / qi(20))?;
    let mut n4 = Vec::new();
    for (i, iv) in intervals.iter().enumerate() {
        let (target, lo_frac, hi_frac) = if i + 1 < m {
            (&intervals[i + 1], q(1, 8), q(3, 8))
        } else {
            (&intervals[m - 1], q(5, 8), q(7, 8))
        };
        n4.push((iv.lo.clone(), &target.lo + lo_frac * &length));
        n4.push((iv.hi.clone(), &target.lo + hi_frac * &length));
    }
    let f4 = PLMap::from_nodes(n4)?;
    let system = SkewSystem::new(spec, vec![f1.into(), f2.into(), f3.into(), f4.into()])?;
    let out = ZooSystem {
        name: "theorem2",
        system,
        meta: ZooMeta::DisconnectedSpines {
            intervals,
            gap: theorem2_gap(),
            length,
        },
    };
    check_theorem2_conditions(&out)?;
    Ok(out)
}

/// Verifies, exactly: `f1(I_i) ⊆ I_i`, `f2(I_i) ⊆ I_i` with the restricted
/// pair a K-pair, `f3` a contraction with `f3([0,1]) ⊆ I_1`,
/// `f4(I_i) ⊆ int I_{i+1}` for `i < m` and `f4(I_m) ⊆ int I_m`.
pub fn check_theorem2_conditions(z: &ZooSystem) -> Result<()> {
    let ZooMeta::DisconnectedSpines { intervals, .. } = &z.meta else {
        return Err(Error::InvalidParameter(
            "not a disconnected-spine system".into(),
        ));
    };
    let maps: Vec<&PLMap> = z.system.maps().iter().map(|f| &f.factors()[0]).collect();
    let fail = |msg: String| Err(Error::InvalidParameter(msg));
    let m = intervals.len();
    let reference = build_kpair()?;
    for (i, iv) in intervals.iter().enumerate() {
        for s in 0..2 {
            if !iv.contains_interval(&iv.image(maps[s])) {
                return fail(format!("f{} does not map I_{} into itself", s + 1, i + 1));
            }
        }
        let pair = KPairSpec {
            interval: Interval::unit(),
            f1: maps[0].conjugate_to_unit(&iv.lo, &iv.hi)?,
            f2: maps[1].conjugate_to_unit(&iv.lo, &iv.hi)?,
            ..reference.clone()
        };
        pair.validate()?;
        let target = &intervals[(i + 1).min(m - 1)];
        let img = iv.image(maps[3]);
        if !(img.lo > target.lo && img.hi < target.hi) {
            return fail(format!(
                "f4(I_{}) is not inside the interior of its target",
                i + 1
            ));
        }
    }
    if maps[2].lipschitz_bound() >= Q::one()
        || !intervals[0].contains_interval(&Interval::unit().image(maps[2]))
    {
        return fail("f3 is not a contraction into I_1".into());
    }
    Ok(())
}

/// Orientation-preserving porcupine: the reference K-pair on `[0,1]` over
/// Bernoulli(1/2), so that `Ā_F = [0,1]` while some spines are
/// nontrivial intervals.
pub fn build_porcupine() -> ZooSystem {
    let (g1, g2) = reference_pair();
    let system = SkewSystem::new(
        MarkovSpec::uniform(2).expect("k = 2"),
        vec![g1.into(), g2.into()],
    )
    .expect("consistent system");
    ZooSystem {
        name: "porcupine",
        system,
        meta: ZooMeta::Porcupine {
            orientation_preserving: true,
        },
    }
}

/// Jitters every breakpoint value of every fiber map by a rational offset
/// in `[−delta, delta]` (clamped into `[0,1]`, monotonicity restored).
/// Offsets are multiples of `delta/1000` drawn from stream `0` of `seed`.
pub fn perturb_system(sys: &SkewSystem, delta: &Q, seed: u64) -> Result<SkewSystem> {
    let mut r = rng::stream(seed, 0);
    let mut jitter = |f: &PLMap| {
        let offsets: Vec<Q> = (0..f.values().len())
            .map(|_| delta * q(r.gen_range(-1000..=1000), 1000))
            .collect();
        f.perturbed(&offsets)
    };
    let maps = sys
        .maps()
        .iter()
        .map(|f| -> Result<FiberMap> {
            Ok(match f {
                FiberMap::Pl(p) => jitter(p).into(),
                FiberMap::Product(p) => {
                    ProductMap::new(p.factors().iter().map(&mut jitter).collect())?.into()
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SkewSystem::new(sys.spec().clone(), maps)
}

/// Names accepted by [`preset`].
pub const PRESETS: &[(&str, &str)] = &[
    ("binary_ifs", "x/2 and x/2 + 1/2 over Bernoulli(1/2)"),
    ("middle_third", "x/3 and x/3 + 2/3 over Bernoulli(1/2)"),
    ("contraction_cover", "binary pair plus extra monotone maps"),
    ("uniform_contraction", "k copies of c·x"),
    ("identity", "k identity maps on [0,1]^m"),
    (
        "msplits",
        "splitting pair on [0,1]^m over a two-state Markov chain",
    ),
    ("theorem2", "four maps with m disconnected spine components"),
    (
        "porcupine",
        "orientation-preserving porcupine on the reference K-pair",
    ),
];
