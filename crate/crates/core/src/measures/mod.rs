//! Measures on `Σ_k × M` with Markov marginal: empirical samples, their
//! pushforwards, samples of the attracting graph measure and the
//! Wasserstein distance for `d2 = d0 + d1`.

mod transport;

pub use transport::{solve as solve_transport, Solution};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::attractor::code;
use crate::error::{Error, Result};
use crate::exact::{in_unit, parse_q, point_to_f64, to_f64, Point, Q};
use crate::fiber::{Cuboid, SkewSystem};
use crate::rng;
use crate::symbolic::{Cylinder, SymbolWindow};

/// Largest combined atom count [`wasserstein_d2`] accepts.
pub const ATOM_BUDGET: usize = 4000;

/// Largest fraction of undecided codings an attracting sample tolerates.
pub const DISCARD_LIMIT: f64 = 0.1;

/// Law of the fiber coordinate of sampled atoms.
#[derive(Clone, Debug, PartialEq)]
pub enum FiberLaw {
    /// Independent uniform coordinates on a `2^{-53}` grid.
    Uniform,
    DiracAt(Point),
    /// Atom `i` sits at the cell midpoints `(2d + 1) / 2g`, with `d` running
    /// through the base-`g` digits of `i`, one per coordinate.
    GridOf(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub window: SymbolWindow,
    pub point: Point,
    pub weight: Q,
}

/// A finitely supported probability measure on `Σ_k × [0,1]^m`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    atoms: Vec<Atom>,
}

impl EmpiricalMeasure {
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        let first = atoms
            .first()
            .ok_or_else(|| Error::InvalidParameter("measure without atoms".into()))?;
        let (k, m) = (first.window.alphabet_size(), first.point.len());
        let mut total = Q::zero();
        for a in &atoms {
            if a.window.alphabet_size() != k {
                return Err(Error::AlphabetMismatch(k, a.window.alphabet_size()));
            }
            if a.point.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: a.point.len(),
                });
            }
            if let Some(v) = a.point.iter().find(|v| !in_unit(v)) {
                return Err(Error::OutOfDomain(v.to_string()));
            }
            if !a.weight.is_positive() {
                return Err(Error::InvalidParameter(format!(
                    "nonpositive weight {}",
                    a.weight
                )));
            }
            total += &a.weight;
        }
        if !total.is_one() {
            return Err(Error::InvalidParameter(format!(
                "weights sum to {total}, not 1"
            )));
        }
        Ok(Self { atoms })
    }

    /// Equal weights `1/n`.
    pub fn uniform(support: Vec<(SymbolWindow, Point)>) -> Result<Self> {
        let w = Q::new(BigInt::one(), BigInt::from(support.len().max(1)));
        Self::new(
            support
                .into_iter()
                .map(|(window, point)| Atom {
                    window,
                    point,
                    weight: w.clone(),
                })
                .collect(),
        )
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].point.len()
    }

    pub fn alphabet_size(&self) -> usize {
        self.atoms[0].window.alphabet_size()
    }

    pub fn fiber_points_f64(&self) -> Vec<Vec<f64>> {
        self.atoms.iter().map(|a| point_to_f64(&a.point)).collect()
    }

    /// One line per atom, `window<TAB>x_1 … x_m<TAB>weight`, after a header.
    /// Coordinates and weights are exact rationals.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# alphabet={} dim={} atoms={}\n",
            self.alphabet_size(),
            self.dim(),
            self.len()
        );
        for a in &self.atoms {
            let coords: Vec<String> = a.point.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                a.window,
                coords.join(" "),
                a.weight
            ));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |what: &str| Error::InvalidParameter(format!("measure text: {what}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("empty"))?;
        let alphabet: usize = header
            .split_whitespace()
            .find_map(|t| t.strip_prefix("alphabet="))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad("missing alphabet in header"))?;
        let mut atoms = Vec::new();
        for line in lines {
            let mut parts = line.split('\t');
            let (w, x, p) = match (parts.next(), parts.next(), parts.next()) {
                (Some(w), Some(x), Some(p)) => (w, x, p),
                _ => return Err(bad(line)),
            };
            atoms.push(Atom {
                window: SymbolWindow::parse(alphabet, w)?,
                point: x.split_whitespace().map(parse_q).collect::<Result<_>>()?,
                weight: parse_q(p)?,
            });
        }
        Self::new(atoms)
    }
}

fn check_point(sys: &SkewSystem, x: &[Q]) -> Result<()> {
    if x.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: x.len(),
        });
    }
    match x.iter().find(|v| !in_unit(v)) {
        Some(v) => Err(Error::OutOfDomain(v.to_string())),
        None => Ok(()),
    }
}

fn uniform_coordinate(rng: &mut impl Rng) -> Q {
    let k: u64 = rng.gen::<u64>() >> 11;
    Q::new(BigInt::from(k), BigInt::one() << 53usize)
}

/// Atoms with Markov windows of half width `word_length` and fiber
/// coordinates drawn from `law`, all with weight `1/n_atoms`. Atom `i` uses
/// stream `i` of `seed`, window first.
pub fn sample_with_marginal(
    sys: &SkewSystem,
    n_atoms: usize,
    law: &FiberLaw,
    word_length: usize,
    seed: u64,
) -> Result<EmpiricalMeasure> {
    if n_atoms == 0 {
        return Err(Error::InvalidParameter("n_atoms must be positive".into()));
    }
    match law {
        FiberLaw::DiracAt(x) => check_point(sys, x)?,
        FiberLaw::GridOf(0) => return Err(Error::InvalidParameter("grid of zero cells".into())),
        _ => {}
    }
    let m = sys.dim();
    let support: Vec<(SymbolWindow, Point)> = (0..n_atoms)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, i as u64);
            let window = sys.spec().sample_window(word_length, &mut rng);
            let point = match law {
                FiberLaw::Uniform => (0..m).map(|_| uniform_coordinate(&mut rng)).collect(),
                FiberLaw::DiracAt(x) => x.clone(),
                FiberLaw::GridOf(g) => {
                    let mut rest = i;
                    (0..m)
                        .map(|_| {
                            let d = rest % g;
                            rest /= g;
                            Q::new(BigInt::from(2 * d + 1), BigInt::from(2 * g))
                        })
                        .collect()
                }
            };
            (window, point)
        })
        .collect();
    EmpiricalMeasure::uniform(support)
}

/// `F^n(θ, x) = (σ^n θ, f_{θ_{n-1}} ∘ ⋯ ∘ f_{θ_0}(x))`.
pub fn push_atom(
    sys: &SkewSystem,
    window: &SymbolWindow,
    x: &[Q],
    n: usize,
) -> (SymbolWindow, Point) {
    let mut p = x.to_vec();
    for s in window.word(0, n) {
        p = sys.map(s).eval(&p);
    }
    (window.shift(n as i64), p)
}

/// `F^n_* μ`, atom by atom.
pub fn pushforward(mu: &EmpiricalMeasure, sys: &SkewSystem, n: usize) -> EmpiricalMeasure {
    let atoms = mu
        .atoms
        .par_iter()
        .map(|a| {
            let (window, point) = push_atom(sys, &a.window, &a.point, n);
            Atom {
                window,
                point,
                weight: a.weight.clone(),
            }
        })
        .collect();
    EmpiricalMeasure { atoms }
}

/// Two constructions of the fiber sample of `F^n_* μ` over a cylinder.
#[derive(Clone, Debug)]
pub struct DisintegrationCheck {
    /// Fibers of `F^n_* μ` atoms whose base lies in the cylinder.
    pub pushed: Vec<Point>,
    /// `f_{θ_{-1}} ∘ ⋯ ∘ f_{θ_{-n}}` applied to fibers of `μ` atoms over the
    /// shifted-back cylinder, with `θ` the shifted base.
    pub backward: Vec<Point>,
}

impl DisintegrationCheck {
    /// Equality as multisets.
    pub fn agrees(&self) -> bool {
        self.pushed == self.backward
    }
}

/// Compares the fibers of `F^n_* μ` over `cylinder` with the backward images
/// of the fibers of `μ` over `σ^{-n}(cylinder)`. Both lists are sorted.
pub fn disintegration_pushforward_check(
    mu: &EmpiricalMeasure,
    sys: &SkewSystem,
    n: usize,
    cylinder: &Cylinder,
) -> Result<DisintegrationCheck> {
    let mut pushed: Vec<Point> = pushforward(mu, sys, n)
        .atoms
        .into_iter()
        .filter(|a| cylinder.contains(&a.window))
        .map(|a| a.point)
        .collect();
    let back = Cylinder::new(cylinder.start + n as i64, cylinder.word.clone())?;
    let mut backward = Vec::new();
    for a in mu.atoms.iter().filter(|a| back.contains(&a.window)) {
        let theta = a.window.shift(n as i64);
        // θ_{-1}, …, θ_{-n} applied innermost-last
        let mut word = theta.past(n);
        word.reverse();
        backward.push(sys.compose(&word)?.eval(&a.point));
    }
    if pushed.is_empty() || backward.is_empty() {
        return Err(Error::EmptyCylinder);
    }
    pushed.sort();
    backward.sort();
    Ok(DisintegrationCheck { pushed, backward })
}

/// Atoms `(θ, ρ(θ))` of `ρ̂_* P` with the coding enclosures behind them.
#[derive(Clone, Debug)]
pub struct AttractingSample {
    pub measure: EmpiricalMeasure,
    /// Enclosure of `ρ(θ)` for each kept atom, in atom order.
    pub enclosures: Vec<Cuboid>,
    /// Indices of the kept windows among the candidates.
    pub kept: Vec<usize>,
    pub discarded_fraction: f64,
    pub max_final_diameter: f64,
}

/// Codes every window at depth at most `max_depth`, keeps the converged ones
/// with equal weights and fails if more than [`DISCARD_LIMIT`] are dropped.
pub fn attracting_measure_on(
    sys: &SkewSystem,
    windows: &[SymbolWindow],
    max_depth: usize,
    tol: f64,
) -> Result<AttractingSample> {
    if windows.is_empty() {
        return Err(Error::InvalidParameter("no windows to code".into()));
    }
    let coded: Vec<_> = windows
        .par_iter()
        .map(|w| code(w, sys, max_depth, tol))
        .collect();
    let mut support = Vec::new();
    let mut enclosures = Vec::new();
    let mut kept = Vec::new();
    let mut max_final_diameter = 0.0f64;
    for (i, (w, c)) in windows.iter().zip(coded).enumerate() {
        if let Some(p) = c.point {
            max_final_diameter = max_final_diameter.max(c.final_diameter);
            support.push((w.clone(), p));
            enclosures.push(c.enclosure);
            kept.push(i);
        }
    }
    let discarded_fraction = 1.0 - kept.len() as f64 / windows.len() as f64;
    if discarded_fraction > DISCARD_LIMIT || support.is_empty() {
        return Err(Error::DiscardFractionTooHigh {
            fraction: discarded_fraction,
            limit: DISCARD_LIMIT,
        });
    }
    Ok(AttractingSample {
        measure: EmpiricalMeasure::uniform(support)?,
        enclosures,
        kept,
        discarded_fraction,
        max_final_diameter,
    })
}

/// Sample of `ρ̂_* P` over the windows [`sample_with_marginal`] draws for the
/// same `seed`, coded to depth at most `word_length`.
pub fn attracting_measure_sample(
    sys: &SkewSystem,
    n_atoms: usize,
    word_length: usize,
    tol: f64,
    seed: u64,
) -> Result<AttractingSample> {
    let windows: Vec<SymbolWindow> = (0..n_atoms)
        .into_par_iter()
        .map(|i| {
            sys.spec()
                .sample_window(word_length, &mut rng::stream(seed, i as u64))
        })
        .collect();
    attracting_measure_on(sys, &windows, word_length, tol)
}

/// Optimal coupling with masses as fractions of the total.
#[derive(Clone, Debug)]
pub struct TransportPlan {
    pub coupling: Vec<(usize, usize, f64)>,
    pub cost: f64,
}

#[derive(Clone, Debug)]
pub struct Wasserstein {
    /// Optimal cost under `d0` truncated at the base depth.
    pub distance: f64,
    /// Truncation can understate the distance by at most this much.
    pub truncation_bound: f64,
    pub plan: TransportPlan,
}

/// Integer masses proportional to the weights of both measures.
fn integer_masses(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<(Vec<i64>, Vec<i64>)> {
    let lcm = mu
        .atoms
        .iter()
        .chain(&nu.atoms)
        .fold(BigInt::one(), |acc, a| acc.lcm(a.weight.denom()));
    let scale = |a: &Atom| -> Result<i64> {
        (a.weight.numer() * (&lcm / a.weight.denom()))
            .to_i64()
            .filter(|_| lcm.bits() < 62)
            .ok_or_else(|| {
                Error::InvalidParameter("atom weights too fine for the exact solver".into())
            })
    };
    Ok((
        mu.atoms.iter().map(scale).collect::<Result<_>>()?,
        nu.atoms.iter().map(scale).collect::<Result<_>>()?,
    ))
}

/// `d2((θ, x), (ξ, y)) = d0(θ, ξ) + d1(x, y)` with `d0` read on `|i| ≤ depth`.
pub fn d2_truncated(a: &Atom, b: &Atom, depth: usize) -> f64 {
    cost_entry(
        a,
        &point_to_f64(&a.point),
        b,
        &point_to_f64(&b.point),
        depth,
    )
}

/// The fiber part is exact whenever the truncated `d0` vanishes; otherwise
/// `d0 ≥ 2^{-depth}` dominates and the float copies suffice.
fn cost_entry(a: &Atom, fa: &[f64], b: &Atom, fb: &[f64], depth: usize) -> f64 {
    let d0 = a.window.truncated_distance(&b.window, depth);
    if d0 == 0.0 {
        return to_f64(&crate::exact::d1(&a.point, &b.point));
    }
    d0 + fa.iter().zip(fb).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Wasserstein-1 distance between two empirical measures under `d2`, solved
/// exactly as a transportation problem.
pub fn wasserstein_d2(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    base_depth: usize,
) -> Result<Wasserstein> {
    let atoms = mu.len() + nu.len();
    if atoms > ATOM_BUDGET {
        return Err(Error::BudgetExceeded {
            atoms,
            budget: ATOM_BUDGET,
        });
    }
    if mu.alphabet_size() != nu.alphabet_size() {
        return Err(Error::AlphabetMismatch(
            mu.alphabet_size(),
            nu.alphabet_size(),
        ));
    }
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            got: nu.dim(),
        });
    }
    let (supply, demand) = integer_masses(mu, nu)?;
    let fa: Vec<Vec<f64>> = mu.fiber_points_f64();
    let fb: Vec<Vec<f64>> = nu.fiber_points_f64();
    let cost: Vec<f64> = (0..mu.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let (a, fa) = (&mu.atoms[i], &fa[i]);
            nu.atoms
                .iter()
                .zip(&fb)
                .map(move |(b, fb)| cost_entry(a, fa, b, fb, base_depth))
        })
        .collect();
    let sol = solve_transport(&supply, &demand, &cost)?;
    let total = supply.iter().sum::<i64>() as f64;
    let coupling = sol
        .flows
        .iter()
        .map(|&(i, j, f)| (i, j, f as f64 / total))
        .collect();
    Ok(Wasserstein {
        distance: sol.cost,
        truncation_bound: 0.5f64.powi(base_depth as i32 + 1),
        plan: TransportPlan {
            coupling,
            cost: sol.cost,
        },
    })
}

/// How [`convergence_curve`] samples `ρ̂_* P` at depth `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// `F^n_*` of one coded sample over the windows of `μ0`.
    SharedBase,
    /// An independent sample for every depth.
    Fresh,
}

#[derive(Clone, Debug)]
pub struct CurveConfig {
    pub depths: Vec<usize>,
    /// Half width of sampled windows and coding depth limit.
    pub word_length: usize,
    pub base_depth: usize,
    pub tol: f64,
    pub seed: u64,
    pub reference: Reference,
}

#[derive(Clone, Debug, Serialize)]
pub struct CurvePoint {
    pub n: usize,
    pub distance: f64,
    /// Truncation, reference-enclosure and Monte-Carlo error combined.
    pub error_bound: f64,
    pub reference_atoms: usize,
}

fn stderr(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
}

/// `d_W(F^n_* μ0, ρ̂_* P)` for each requested depth.
///
/// With [`Reference::SharedBase`] the graph sample sits over the windows of
/// `μ0` and is pushed forward with it, so the base coordinates cancel and the
/// error bound adds the pushed coding enclosures and the standard error of
/// the per-atom fiber distances. With [`Reference::Fresh`] the bound covers
/// truncation and coding only.
pub fn convergence_curve(
    sys: &SkewSystem,
    mu0: &EmpiricalMeasure,
    cfg: &CurveConfig,
) -> Result<Vec<CurvePoint>> {
    if cfg.depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "depths must be strictly increasing".into(),
        ));
    }
    let trunc = 0.5f64.powi(cfg.base_depth as i32 + 1);
    match cfg.reference {
        Reference::SharedBase => {
            let windows: Vec<SymbolWindow> = mu0.atoms.iter().map(|a| a.window.clone()).collect();
            let graph = attracting_measure_on(sys, &windows, cfg.word_length, cfg.tol)?;
            cfg.depths
                .par_iter()
                .map(|&n| {
                    let pushed = pushforward(mu0, sys, n);
                    let reference = pushforward(&graph.measure, sys, n);
                    let w = wasserstein_d2(&pushed, &reference, cfg.base_depth)?;
                    let mut enclosure = 0.0f64;
                    let mut gaps = Vec::with_capacity(graph.kept.len());
                    for (slot, &i) in graph.kept.iter().enumerate() {
                        let word = mu0.atoms[i].window.word(0, n);
                        let b = word.iter().fold(graph.enclosures[slot].clone(), |b, &s| {
                            sys.map(s).image_box(&b)
                        });
                        enclosure = enclosure.max(to_f64(&b.diameter()));
                        gaps.push(to_f64(&crate::exact::d1(
                            &pushed.atoms[i].point,
                            &reference.atoms[slot].point,
                        )));
                    }
                    Ok(CurvePoint {
                        n,
                        distance: w.distance,
                        error_bound: trunc + enclosure + stderr(&gaps),
                        reference_atoms: reference.len(),
                    })
                })
                .collect()
        }
        Reference::Fresh => cfg
            .depths
            .par_iter()
            .map(|&n| {
                let pushed = pushforward(mu0, sys, n);
                let fresh = attracting_measure_sample(
                    sys,
                    mu0.len(),
                    cfg.word_length,
                    cfg.tol,
                    rng::child_seed(cfg.seed, n as u64),
                )?;
                let w = wasserstein_d2(&pushed, &fresh.measure, cfg.base_depth)?;
                Ok(CurvePoint {
                    n,
                    distance: w.distance,
                    error_bound: trunc + fresh.max_final_diameter,
                    reference_atoms: fresh.measure.len(),
                })
            })
            .collect(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SyncPoint {
    pub n: usize,
    /// `d1(f^n_θ(x), ρ(σ^n θ))`, absent when `σ^n θ` was not codable.
    pub distance: Option<f64>,
    pub coding_depth: usize,
}

/// Distance from `F^n(θ, x)` to the graph point over `σ^n θ`. The base
/// coordinates coincide, so only the fiber distance remains.
pub fn pointwise_sync_curve(
    sys: &SkewSystem,
    theta: &SymbolWindow,
    x: &[Q],
    depths: &[usize],
    max_depth: usize,
    tol: f64,
) -> Result<Vec<SyncPoint>> {
    check_point(sys, x)?;
    if theta.alphabet_size() != sys.alphabet_size() {
        return Err(Error::AlphabetMismatch(
            sys.alphabet_size(),
            theta.alphabet_size(),
        ));
    }
    Ok(depths
        .par_iter()
        .map(|&n| {
            let (shifted, y) = push_atom(sys, theta, x, n);
            let c = code(&shifted, sys, max_depth, tol);
            SyncPoint {
                n,
                distance: c.point.as_ref().map(|p| to_f64(&crate::exact::d1(&y, p))),
                coding_depth: c.depth_used,
            }
        })
        .collect())
}

/// How far one step of `F_*` moves a graph sample, next to the distance
/// between two independent graph samples.
#[derive(Clone, Debug, Serialize)]
pub struct FixedPointReport {
    /// `d_W(F_* A, B)`.
    pub moved: f64,
    /// `d_W(C, B)`.
    pub sampling_error: f64,
    pub truncation_bound: f64,
}

/// Samples `A`, `B`, `C` of `ρ̂_* P` on independent child seeds of `seed`.
pub fn fixed_point_check(
    sys: &SkewSystem,
    n_atoms: usize,
    word_length: usize,
    base_depth: usize,
    tol: f64,
    seed: u64,
) -> Result<FixedPointReport> {
    let sample =
        |tag| attracting_measure_sample(sys, n_atoms, word_length, tol, rng::child_seed(seed, tag));
    let (a, b, c) = (sample(1)?, sample(2)?, sample(3)?);
    let moved = wasserstein_d2(&pushforward(&a.measure, sys, 1), &b.measure, base_depth)?;
    let floor = wasserstein_d2(&c.measure, &b.measure, base_depth)?;
    Ok(FixedPointReport {
        moved: moved.distance,
        sampling_error: floor.distance,
        truncation_bound: moved.truncation_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{q, qi};
    use crate::zoo::{build_binary_ifs, build_msplits, build_uniform_contraction};

    fn dirac(window: SymbolWindow, x: Q) -> EmpiricalMeasure {
        EmpiricalMeasure::uniform(vec![(window, vec![x])]).unwrap()
    }

    #[test]
    fn dirac_law_and_weights() {
        let z = build_binary_ifs();
        let mu =
            sample_with_marginal(&z.system, 7, &FiberLaw::DiracAt(vec![q(1, 2)]), 5, 0).unwrap();
        assert!(mu
            .atoms()
            .iter()
            .all(|a| a.point == vec![q(1, 2)] && a.weight == q(1, 7)));
        assert!(sample_with_marginal(&z.system, 3, &FiberLaw::DiracAt(vec![qi(2)]), 5, 0).is_err());
    }

    #[test]
    fn grid_law_covers_cells() {
        let z = build_msplits(2, 0.5, 0.5).unwrap();
        let mu = sample_with_marginal(&z.system, 9, &FiberLaw::GridOf(3), 4, 0).unwrap();
        assert_eq!(mu.atoms()[5].point, vec![q(5, 6), q(3, 6)]);
    }

    #[test]
    fn pushforward_one_step() {
        let z = build_binary_ifs();
        let theta = SymbolWindow::new(2, vec![2, 1], 0, vec![1], vec![2]).unwrap();
        let mu = dirac(theta.clone(), q(1, 3));
        assert_eq!(pushforward(&mu, &z.system, 0), mu);
        let one = pushforward(&mu, &z.system, 1);
        assert_eq!(one.atoms()[0].window, theta.shift(1));
        assert_eq!(one.atoms()[0].point, vec![q(2, 3)]);
    }

    #[test]
    fn text_roundtrip() {
        let z = build_msplits(1, 0.5, 0.5).unwrap();
        let mu = sample_with_marginal(&z.system, 5, &FiberLaw::Uniform, 3, 9).unwrap();
        let back = EmpiricalMeasure::from_text(&mu.to_text()).unwrap();
        assert_eq!(back, mu);
    }

    #[test]
    fn measure_validation() {
        let w = SymbolWindow::constant(2, 1).unwrap();
        let atom = |x: Q, p: Q| Atom {
            window: w.clone(),
            point: vec![x],
            weight: p,
        };
        assert!(EmpiricalMeasure::new(vec![atom(qi(0), q(1, 2))]).is_err());
        assert!(EmpiricalMeasure::new(vec![atom(q(3, 2), qi(1))]).is_err());
        assert!(EmpiricalMeasure::new(vec![atom(qi(0), q(1, 2)), atom(qi(1), q(1, 2))]).is_ok());
    }

    #[test]
    fn wasserstein_of_diracs_is_fiber_distance() {
        let w = SymbolWindow::constant(2, 1).unwrap();
        let a = dirac(w.clone(), q(1, 5));
        let b = dirac(w, q(7, 10));
        let d = wasserstein_d2(&a, &b, 10).unwrap();
        assert_eq!(d.distance, 0.5);
        assert_eq!(wasserstein_d2(&a, &a, 10).unwrap().distance, 0.0);
    }

    #[test]
    fn wasserstein_budget() {
        let z = build_binary_ifs();
        let mu = sample_with_marginal(&z.system, 2001, &FiberLaw::Uniform, 2, 0).unwrap();
        assert!(matches!(
            wasserstein_d2(&mu, &mu, 4),
            Err(Error::BudgetExceeded { atoms: 4002, .. })
        ));
    }

    #[test]
    fn disintegration_examples() {
        let z = build_msplits(1, 0.5, 0.5).unwrap();
        let mu = sample_with_marginal(&z.system, 200, &FiberLaw::Uniform, 8, 1).unwrap();
        let full = Cylinder::new(0, vec![1]).unwrap();
        for n in [0, 1, 3] {
            let c = disintegration_pushforward_check(&mu, &z.system, n, &full).unwrap();
            assert!(c.agrees());
        }
        let deep = Cylinder::new(-2, vec![1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1]).unwrap();
        assert!(matches!(
            disintegration_pushforward_check(&mu, &z.system, 1, &deep),
            Err(Error::EmptyCylinder)
        ));
    }

    #[test]
    fn attracting_sample_of_binary_is_expansion() {
        let z = build_binary_ifs();
        let s = attracting_measure_sample(&z.system, 50, 40, 1e-9, 3).unwrap();
        assert_eq!(s.discarded_fraction, 0.0);
        for a in s.measure.atoms() {
            let expansion: f64 = a
                .window
                .past(40)
                .iter()
                .enumerate()
                .map(|(i, &t)| (t - 1) as f64 * 0.5f64.powi(i as i32 + 1))
                .sum();
            assert!((to_f64(&a.point[0]) - expansion).abs() <= 1e-9);
        }
        // windows too short to reach the tolerance
        assert!(matches!(
            attracting_measure_sample(&z.system, 20, 5, 1e-9, 3),
            Err(Error::DiscardFractionTooHigh { .. })
        ));
    }

    #[test]
    fn contracting_curve_is_bounded_by_contraction() {
        let z = build_uniform_contraction(q(1, 2), 2).unwrap();
        let mu = sample_with_marginal(&z.system, 40, &FiberLaw::Uniform, 30, 5).unwrap();
        let cfg = CurveConfig {
            depths: vec![0, 2, 4, 8],
            word_length: 30,
            base_depth: 8,
            tol: 1e-9,
            seed: 5,
            reference: Reference::SharedBase,
        };
        for p in convergence_curve(&z.system, &mu, &cfg).unwrap() {
            assert!(
                p.distance <= 0.5f64.powi(p.n as i32) + p.error_bound,
                "{p:?}"
            );
        }
    }

    #[test]
    fn sync_curve_from_graph_point() {
        let z = build_msplits(1, 0.5, 0.5).unwrap();
        let theta = z.system.spec().sample_window(60, &mut rng::stream(2, 0));
        let start = code(&theta, &z.system, 60, 1e-9).point.unwrap();
        let curve =
            pointwise_sync_curve(&z.system, &theta, &start, &[0, 1, 5, 10], 60, 1e-9).unwrap();
        for p in curve {
            assert!(p.distance.unwrap() <= 2e-9, "{p:?}");
        }
    }
}
