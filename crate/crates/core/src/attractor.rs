//! Barnsley–Hutchinson iteration, the target set, the coding map `ρ`,
//! spines and samples of the invariant graph.

use std::collections::HashMap;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::exact::{self, d1, midpoint, to_f64, Point, Q};
use crate::fiber::{Cuboid, FiberMap, FiberSet, FloatPL, IntervalUnion, SkewSystem};
use crate::rng;
use crate::symbolic::{all_words, disjunctive_prefix, Symbol, SymbolWindow};

pub const DEFAULT_SINGLETON_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_DEPTH: usize = 10_000;

/// Largest number of components either target-set iteration may carry.
const COMPONENT_CAP: usize = 1 << 15;

/// Coarsest gap the orbit hull of [`target_set`] fills.
pub const TARGET_RESOLUTION: f64 = 1e-4;

/// `B_F(A) = ⋃_i f_i(A)`.
pub fn bh_step(sys: &SkewSystem, set: &FiberSet) -> FiberSet {
    let mut images = sys.maps().iter().map(|f| f.image(set));
    let first = images.next().expect("at least one map");
    images.fold(first, |acc, img| acc.union(&img))
}

/// `B_F^n(base)`.
pub fn bh_iterate(sys: &SkewSystem, base: &FiberSet, n: usize) -> FiberSet {
    (0..n).fold(base.clone(), |acc, _| bh_step(sys, &acc))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMethod {
    /// `B_F^n(M)`.
    Iterate,
    /// Orbit closure of a fixed point of a contracting composition.
    Hull,
}

/// Approximation of `Ā_F` with its convergence record.
#[derive(Clone, Debug)]
pub struct TargetSet {
    pub set: FiberSet,
    pub method: TargetMethod,
    pub iterations: usize,
    /// Hausdorff distance between the last two iterates.
    pub last_step: f64,
    pub converged: bool,
    /// Gaps up to twice this width were filled (zero for `Iterate`).
    pub resolution: f64,
    /// Word whose composition is the contraction seeding the hull.
    pub seed_word: Option<Vec<Symbol>>,
}

struct Run {
    set: FiberSet,
    iterations: usize,
    last_step: Q,
    converged: bool,
}

/// Iterates `A ↦ B_F(A)`, or `A ↦ close(A ∪ B_F(A), slack)` when a slack
/// is given, until successive sets are within `tol`.
fn grow(sys: &SkewSystem, start: FiberSet, max_iter: usize, tol: &Q, slack: Option<&Q>) -> Run {
    let mut set = start;
    let mut last_step = Q::one();
    for i in 1..=max_iter {
        let image = bh_step(sys, &set);
        let next = match slack {
            Some(w) => close_gaps(&set.union(&image), w),
            None => image,
        };
        last_step = next.hausdorff(&set).unwrap_or_else(Q::one);
        set = next;
        if &last_step <= tol {
            return Run {
                set,
                iterations: i,
                last_step,
                converged: true,
            };
        }
        if set.component_count() > COMPONENT_CAP {
            return Run {
                set,
                iterations: i,
                last_step,
                converged: false,
            };
        }
    }
    Run {
        set,
        iterations: max_iter,
        last_step,
        converged: false,
    }
}

/// Shortest word (length ≤ 3) whose composition is a `d1`-contraction,
/// with its unique fixed point.
pub fn contracting_seed(sys: &SkewSystem) -> Option<(Vec<Symbol>, Point)> {
    for len in 1..=3 {
        let best = all_words(sys.alphabet_size(), len)
            .into_iter()
            .filter_map(|w| {
                let g = sys.compose(&w).ok()?;
                let lip = g.lipschitz_bound();
                (lip < Q::one()).then_some((lip, w, g))
            })
            .min_by(|a, b| a.0.cmp(&b.0));
        if let Some((_, word, g)) = best {
            let point = g
                .factors()
                .iter()
                .map(|f| f.fixed_points()[0].x.clone())
                .collect();
            return Some((word, point));
        }
    }
    None
}

/// Approximates `Ā_F`.
///
/// `B_F^n(M)` always contains `Ā_F` but can stay strictly larger (for
/// instance when `B_F(M) = M`). `Ā_F` is also the smallest nonempty closed
/// forward-invariant set, hence the orbit closure of any of its points,
/// such as the fixed point of a contracting composition. That orbit is
/// grown with gaps narrower than `2r` filled, `r = max(tol, TARGET_RESOLUTION)`.
/// The orbit hull is returned when it converges and lies farther than `r`
/// from `B_F^n(M)`; otherwise `B_F^n(M)` is returned.
pub fn target_set(sys: &SkewSystem, max_iter: usize, tol: f64) -> TargetSet {
    let tol_q = exact::q_from_f64(tol).unwrap_or_else(|_| Q::zero());
    let outer = grow(sys, sys.full_set(), max_iter, &tol_q, None);
    let outer_result = |seed_word| TargetSet {
        set: outer.set.clone(),
        method: TargetMethod::Iterate,
        iterations: outer.iterations,
        last_step: to_f64(&outer.last_step),
        converged: outer.converged,
        resolution: 0.0,
        seed_word,
    };
    let Some((word, p)) = contracting_seed(sys) else {
        return outer_result(None);
    };
    let r = tol.max(TARGET_RESOLUTION);
    let r_q = exact::q_from_f64(r).expect("finite resolution");
    let hull = grow(
        sys,
        sys.point_set(&p),
        max_iter,
        &tol_q,
        Some(&(&r_q + &r_q)),
    );
    if !hull.converged {
        return outer_result(None);
    }
    let near = hull.set.hausdorff(&outer.set).map_or(false, |d| d <= r_q);
    if outer.converged && near {
        return outer_result(Some(word));
    }
    TargetSet {
        set: hull.set,
        method: TargetMethod::Hull,
        iterations: hull.iterations,
        last_step: to_f64(&hull.last_step),
        converged: true,
        resolution: r,
        seed_word: Some(word),
    }
}

/// Fills gaps of width at most `width`: consecutive intervals closer than
/// that merge, and boxes closer than that in every coordinate merge into
/// their hull.
pub fn close_gaps(set: &FiberSet, width: &Q) -> FiberSet {
    match set {
        FiberSet::Intervals(u) => {
            let mut merged: Vec<crate::fiber::Interval> = Vec::with_capacity(u.len());
            for c in u.components() {
                match merged.last_mut() {
                    Some(last) if &(&c.lo - &last.hi) <= width => last.hi = c.hi.clone(),
                    _ => merged.push(c.clone()),
                }
            }
            FiberSet::Intervals(IntervalUnion::from_intervals(merged))
        }
        FiberSet::Boxes(b) => FiberSet::Boxes(b.merged_within(width)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CodingStatus {
    Converged,
    NotConvergedAtDepth,
}

/// Outcome of coding one base point.
#[derive(Clone, Debug)]
pub struct CodingResult {
    pub status: CodingStatus,
    /// Midpoint of the final enclosure, present when converged.
    pub point: Option<Point>,
    pub depth_used: usize,
    pub final_diameter: f64,
    /// `f_{θ_{-1}} ∘ … ∘ f_{θ_{-n}}(base)` at `n = depth_used`.
    pub enclosure: Cuboid,
}

impl CodingResult {
    pub fn is_converged(&self) -> bool {
        self.status == CodingStatus::Converged
    }

    pub fn point_f64(&self) -> Option<Vec<f64>> {
        self.point.as_deref().map(exact::point_to_f64)
    }
}

/// `f_{w_0} ∘ f_{w_1} ∘ … ∘ f_{w_{n−1}}(b)` for a backward word
/// `w = (θ_{-1}, …, θ_{-n})`: the deepest symbol acts first.
pub fn backward_image(sys: &SkewSystem, past: &[Symbol], b: &Cuboid) -> Cuboid {
    past.iter()
        .rev()
        .fold(b.clone(), |acc, &s| sys.map(s).image_box(&acc))
}

/// Computes `ρ(θ)` from the nested enclosures `f_{θ_{-1}}∘⋯∘f_{θ_{-n}}(M)`.
/// Depths are probed by doubling, then the first depth with diameter at
/// most `singleton_tol` is located by bisection (the enclosures are nested).
pub fn code(
    theta: &SymbolWindow,
    sys: &SkewSystem,
    max_depth: usize,
    singleton_tol: f64,
) -> CodingResult {
    code_from(
        theta,
        sys,
        &Cuboid::unit(sys.dim()),
        max_depth,
        singleton_tol,
    )
}

/// [`code`] with an arbitrary depth-0 box in place of `M`.
pub fn code_from(
    theta: &SymbolWindow,
    sys: &SkewSystem,
    base: &Cuboid,
    max_depth: usize,
    singleton_tol: f64,
) -> CodingResult {
    let max_depth = max_depth.max(1);
    let tol = exact::q_from_f64(singleton_tol).unwrap_or_else(|_| Q::zero());
    let past = theta.past(max_depth);
    let at = |n: usize| backward_image(sys, &past[..n], base);
    let done = |b: &Cuboid| b.diameter() <= tol;

    let mut lo = 0;
    let mut hi = 1;
    let mut enclosure = at(hi);
    while !done(&enclosure) {
        if hi == max_depth {
            return CodingResult {
                status: CodingStatus::NotConvergedAtDepth,
                point: None,
                depth_used: max_depth,
                final_diameter: to_f64(&enclosure.diameter()),
                enclosure,
            };
        }
        lo = hi;
        hi = (hi * 2).min(max_depth);
        enclosure = at(hi);
    }
    // first converged depth lies in (lo, hi]
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        let b = at(mid);
        if done(&b) {
            hi = mid;
            enclosure = b;
        } else {
            lo = mid;
        }
    }
    CodingResult {
        status: CodingStatus::Converged,
        point: Some(enclosure.center()),
        depth_used: hi,
        final_diameter: to_f64(&enclosure.diameter()),
        enclosure,
    }
}

/// `f_{θ_{-1}} ∘ … ∘ f_{θ_{-depth}}(base)`, a superset of the spine that
/// decreases to it as `depth` grows.
pub fn spine(theta: &SymbolWindow, sys: &SkewSystem, base: &FiberSet, depth: usize) -> FiberSet {
    theta
        .past(depth)
        .iter()
        .rev()
        .fold(base.clone(), |acc, &s| sys.image(s, &acc))
}

/// The `θ`-fiber of the maximal attractor, i.e. the spine over `M`.
pub fn maximal_attractor_fiber(theta: &SymbolWindow, sys: &SkewSystem, depth: usize) -> FiberSet {
    spine(theta, sys, &sys.full_set(), depth)
}

/// A coded base point with its equivariance residual
/// `d1(f_{θ_0}(ρ(θ)), ρ(σθ))`.
#[derive(Clone, Debug)]
pub struct GraphPoint {
    pub window: SymbolWindow,
    pub point: Point,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct GraphSample {
    pub pairs: Vec<GraphPoint>,
    pub not_converged: usize,
    pub n_points: usize,
}

impl GraphSample {
    pub fn convergence_fraction(&self) -> f64 {
        if self.n_points == 0 {
            return 1.0;
        }
        self.pairs.len() as f64 / self.n_points as f64
    }

    pub fn max_residual(&self) -> f64 {
        self.pairs.iter().map(|p| p.residual).fold(0.0, f64::max)
    }
}

/// Codes `n_points` Markov windows whose pasts have `word_length` symbols.
/// Draw `i` uses stream `i` of `seed`; non-converged draws are counted and
/// dropped.
pub fn graph_sample(
    sys: &SkewSystem,
    n_points: usize,
    word_length: usize,
    seed: u64,
    tol: f64,
) -> GraphSample {
    let results: Vec<Option<GraphPoint>> = (0..n_points)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            let window = sys.spec().sample_window(word_length, &mut r);
            coded_pair(sys, window, word_length, tol)
        })
        .collect();
    let not_converged = results.iter().filter(|r| r.is_none()).count();
    GraphSample {
        pairs: results.into_iter().flatten().collect(),
        not_converged,
        n_points,
    }
}

fn coded_pair(
    sys: &SkewSystem,
    window: SymbolWindow,
    depth: usize,
    tol: f64,
) -> Option<GraphPoint> {
    let here = code(&window, sys, depth, tol);
    let point = here.point?;
    let next = code(&window.shift(1), sys, depth + 1, tol);
    let residual = match &next.point {
        Some(q) => to_f64(&d1(&sys.map(window.symbol_at(0)).eval(&point), q)),
        None => f64::INFINITY,
    };
    Some(GraphPoint {
        window,
        point,
        residual,
    })
}

/// Forward orbit of `(θ, x)` under the skew product, evaluated in double
/// precision. Entry `j` of `points` is the fiber coordinate above
/// `σ^{burn_in + j} θ`.
#[derive(Clone, Debug)]
pub struct OrbitCloud {
    pub base: SymbolWindow,
    pub burn_in: usize,
    pub points: Vec<Vec<f64>>,
}

impl OrbitCloud {
    pub fn window(&self, j: usize) -> SymbolWindow {
        self.base.shift((self.burn_in + j) as i64)
    }

    /// Symbols `θ_{t−r} … θ_{t+r}` at time `t = burn_in + j`.
    fn key(&self, j: usize, radius: usize) -> Vec<Symbol> {
        let t = (self.burn_in + j) as i64 - radius as i64;
        self.base.word(t, 2 * radius + 1)
    }

    /// Groups orbit indices by the cylinder `{|i| < depth}` of their base.
    pub fn cylinder_index(&self, depth: usize) -> CylinderIndex {
        let radius = depth.max(1) - 1;
        let mut buckets: HashMap<Vec<Symbol>, Vec<usize>> = HashMap::new();
        for j in 0..self.points.len() {
            buckets.entry(self.key(j, radius)).or_default().push(j);
        }
        CylinderIndex { radius, buckets }
    }
}

/// Orbit indices bucketed by a central cylinder of their base points.
#[derive(Clone, Debug)]
pub struct CylinderIndex {
    radius: usize,
    buckets: HashMap<Vec<Symbol>, Vec<usize>>,
}

impl CylinderIndex {
    /// Smallest `d1` from `x` to an orbit point whose base shares the
    /// central cylinder of `window`; `None` if the cylinder was never hit.
    pub fn nearest(&self, cloud: &OrbitCloud, window: &SymbolWindow, x: &[f64]) -> Option<f64> {
        let key = window.word(-(self.radius as i64), 2 * self.radius + 1);
        let hits = self.buckets.get(&key)?;
        hits.iter()
            .map(|&j| {
                cloud.points[j]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>()
            })
            .min_by(f64::total_cmp)
    }

    pub fn hits(&self, window: &SymbolWindow) -> usize {
        let key = window.word(-(self.radius as i64), 2 * self.radius + 1);
        self.buckets.get(&key).map_or(0, Vec::len)
    }
}

/// A forward-disjunctive base: indices `0, 1, …` carry the concatenation of
/// all words of length `1, 2, …` over `k` symbols (in odometer order), long
/// enough to cover `length` indices and at least every word of length
/// `word_length`. The right tail repeats the block of words up to
/// `word_length`; the past is constant `1`.
pub fn disjunctive_base(k: usize, word_length: usize, length: usize) -> Result<SymbolWindow> {
    let mut l = word_length.max(1);
    let mut core = disjunctive_prefix(k, l);
    while core.len() < length {
        l += 1;
        core = disjunctive_prefix(k, l);
    }
    SymbolWindow::new(
        k,
        core,
        0,
        vec![1],
        disjunctive_prefix(k, word_length.max(1)),
    )
}

/// Iterates `F` from `z = (θ, x)` for `burn_in + n_iter` steps and keeps the
/// last `n_iter` fiber points.
pub fn omega_limit_sample(
    theta: &SymbolWindow,
    x: &[f64],
    sys: &SkewSystem,
    burn_in: usize,
    n_iter: usize,
) -> OrbitCloud {
    let maps: Vec<Vec<FloatPL>> = sys.maps().iter().map(float_factors).collect();
    let mut p = x.to_vec();
    let mut points = Vec::with_capacity(n_iter);
    for t in 0..burn_in + n_iter {
        if t >= burn_in {
            points.push(p.clone());
        }
        let f = &maps[theta.symbol_at(t as i64) as usize - 1];
        for (v, g) in p.iter_mut().zip(f) {
            *v = g.eval(*v);
        }
    }
    OrbitCloud {
        base: theta.clone(),
        burn_in,
        points,
    }
}

pub(crate) fn float_factors(f: &FiberMap) -> Vec<FloatPL> {
    f.factors().iter().map(FloatPL::from).collect()
}

/// Midpoint of an interval's endpoints, used for reporting.
pub fn interval_midpoints(set: &FiberSet) -> Vec<Point> {
    match set {
        FiberSet::Intervals(u) => u
            .components()
            .iter()
            .map(|c| vec![midpoint(&c.lo, &c.hi)])
            .collect(),
        FiberSet::Boxes(b) => b.boxes().iter().map(Cuboid::center).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{q, qi};
    use crate::fiber::{Interval, PLMap};
    use crate::symbolic::MarkovSpec;

    fn affine_system(maps: &[(Q, Q)]) -> SkewSystem {
        let maps = maps
            .iter()
            .map(|(a, b)| PLMap::affine(a.clone(), b.clone()).unwrap().into())
            .collect();
        SkewSystem::new(MarkovSpec::uniform(2).unwrap(), maps).unwrap()
    }

    fn binary() -> SkewSystem {
        affine_system(&[(q(1, 2), qi(0)), (q(1, 2), q(1, 2))])
    }

    fn cantor() -> SkewSystem {
        affine_system(&[(q(1, 3), qi(0)), (q(1, 3), q(2, 3))])
    }

    #[test]
    fn bh_step_examples() {
        let m = binary().full_set();
        assert_eq!(bh_step(&binary(), &m), m);
        let c = bh_step(&cantor(), &m);
        let expected = IntervalUnion::from_intervals(vec![
            Interval::new(qi(0), q(1, 3)),
            Interval::new(q(2, 3), qi(1)),
        ]);
        assert_eq!(c, FiberSet::Intervals(expected));
        let single = SkewSystem::new(
            MarkovSpec::uniform(2).unwrap(),
            vec![
                PLMap::affine(q(1, 2), qi(0)).unwrap().into(),
                PLMap::affine(q(1, 2), qi(0)).unwrap().into(),
            ],
        )
        .unwrap();
        assert_eq!(bh_step(&single, &m).diameter(), q(1, 2));
    }

    #[test]
    fn cantor_iterates() {
        let sys = cantor();
        for n in 0..=6 {
            let set = bh_iterate(&sys, &sys.full_set(), n);
            let u = set.as_intervals().unwrap();
            assert_eq!(u.len(), 1 << n);
            let len = Q::one() / Q::from_integer(3.into()).pow(n as i32);
            assert!(u.components().iter().all(|c| c.len() == len));
        }
    }

    #[test]
    fn binary_target_is_unit_interval() {
        let t = target_set(&binary(), 50, 1e-9);
        assert!(t.converged);
        assert_eq!(t.set, binary().full_set());
    }

    #[test]
    fn coding_examples() {
        let sys = binary();
        let all2 = SymbolWindow::constant(2, 2).unwrap();
        let r = code(&all2, &sys, 200, 1e-9);
        assert!(r.is_converged());
        assert!((to_f64(&r.point.unwrap()[0]) - 1.0).abs() <= 1e-9);
        let all1 = SymbolWindow::constant(2, 1).unwrap();
        assert!(to_f64(&code(&all1, &sys, 200, 1e-9).point.unwrap()[0]).abs() <= 1e-9);
        // θ_{-1} = 1, θ_{-2} = 2, …: fixed point of f1∘f2
        let alt = SymbolWindow::from_past(2, &[], &[1, 2], &[], &[1]).unwrap();
        let x = to_f64(&code(&alt, &sys, 200, 1e-9).point.unwrap()[0]);
        assert!((x - 1.0 / 3.0).abs() <= 1e-9);
    }

    #[test]
    fn coding_reports_first_converged_depth() {
        let sys = binary();
        let all2 = SymbolWindow::constant(2, 2).unwrap();
        // diameter 2^-n ≤ 2^-10 first at n = 10
        let r = code(&all2, &sys, 64, 0.5f64.powi(10));
        assert_eq!(r.depth_used, 10);
        let identity = SkewSystem::new(
            MarkovSpec::uniform(2).unwrap(),
            vec![PLMap::identity().into(), PLMap::identity().into()],
        )
        .unwrap();
        let r = code(&all2, &identity, 37, 1e-9);
        assert_eq!(r.status, CodingStatus::NotConvergedAtDepth);
        assert_eq!(r.depth_used, 37);
        assert_eq!(r.final_diameter, 1.0);
    }

    #[test]
    fn spine_contracts() {
        let sys = binary();
        let theta = SymbolWindow::from_past(2, &[1, 2, 2], &[1], &[], &[2]).unwrap();
        let s = spine(&theta, &sys, &sys.full_set(), 12);
        assert_eq!(s.diameter(), Q::one() / Q::from_integer(4096.into()));
    }

    #[test]
    fn graph_sample_residuals() {
        let g = graph_sample(&binary(), 20, 40, 5, 1e-9);
        assert_eq!(g.pairs.len(), 20);
        assert!(g.max_residual() <= 2e-9);
    }

    #[test]
    fn orbit_cloud_tracks_coding() {
        let sys = binary();
        let theta = SymbolWindow::new(
            2,
            crate::symbolic::disjunctive_prefix(2, 6),
            0,
            vec![1],
            vec![2, 1],
        )
        .unwrap();
        let cloud = omega_limit_sample(&theta, &[0.3], &sys, 40, 200);
        for j in [0, 17, 150] {
            let r = code(&cloud.window(j), &sys, 200, 1e-12);
            let x = r.point_f64().unwrap()[0];
            assert!((x - cloud.points[j][0]).abs() < 1e-9);
        }
        let index = cloud.cylinder_index(2);
        let w = cloud.window(5);
        assert_eq!(index.nearest(&cloud, &w, &cloud.points[5]), Some(0.0));
    }
}
