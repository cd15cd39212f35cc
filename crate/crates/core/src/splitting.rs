//! Splitting certificates and Monte-Carlo estimates of backward-image
//! contraction.

use num_traits::{Signed, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::attractor::backward_image;
use crate::error::{Error, Result};
use crate::exact::{to_f64, Q};
use crate::fiber::{BoxUnion, Cuboid, SkewSystem};
use crate::rng;
use crate::symbolic::Symbol;

/// Evidence that a pair of admissible words splits the system.
#[derive(Clone, Debug)]
pub struct SplitCertificate {
    pub word_a: Vec<Symbol>,
    pub word_b: Vec<Symbol>,
    /// `M_1` and `M_2`.
    pub images: (BoxUnion, BoxUnion),
    /// Per-coordinate distance between the projections of `M_1` and `M_2`.
    pub gaps: Vec<Q>,
    /// True when every fiber map is coordinatewise strictly increasing, so the
    /// separation persists under all later compositions.
    pub monotone: bool,
}

impl SplitCertificate {
    pub fn gaps_f64(&self) -> Vec<f64> {
        self.gaps.iter().map(to_f64).collect()
    }

    fn boxes(&self) -> (&Cuboid, &Cuboid) {
        (&self.images.0.boxes()[0], &self.images.1.boxes()[0])
    }
}

/// Signed distance between two intervals: positive when disjoint, minus the
/// overlap width otherwise.
fn projection_gap(a: &crate::fiber::Interval, b: &crate::fiber::Interval) -> Q {
    let left = &b.lo - &a.hi;
    let right = &a.lo - &b.hi;
    if left > right {
        left
    } else {
        right
    }
}

/// Checks the splitting condition for the candidate words `word_a`, `word_b`.
pub fn check_split(
    sys: &SkewSystem,
    word_a: &[Symbol],
    word_b: &[Symbol],
) -> Result<SplitCertificate> {
    if word_a.is_empty() || word_b.is_empty() {
        return Err(Error::EmptyWord);
    }
    let fa = sys.compose_admissible(word_a)?;
    let fb = sys.compose_admissible(word_b)?;
    let (la, lb) = (word_a[word_a.len() - 1], word_b[word_b.len() - 1]);
    if la != lb {
        return Err(Error::LastSymbolMismatch(la, lb));
    }
    let unit = Cuboid::unit(sys.dim());
    let (m1, m2) = (fa.image_box(&unit), fb.image_box(&unit));
    let mut gaps = Vec::with_capacity(sys.dim());
    for (s, (a, b)) in m1.sides.iter().zip(&m2.sides).enumerate() {
        let gap = projection_gap(a, b);
        if !gap.is_positive() {
            return Err(Error::ProjectionsOverlap {
                coordinate: s,
                overlap: to_f64(&-gap),
            });
        }
        gaps.push(gap);
    }
    Ok(SplitCertificate {
        word_a: word_a.to_vec(),
        word_b: word_b.to_vec(),
        images: (
            BoxUnion::from_boxes(vec![m1]),
            BoxUnion::from_boxes(vec![m2]),
        ),
        gaps,
        monotone: sys.maps().iter().all(|f| f.is_injective()),
    })
}

/// Outcome of pushing a certificate's images through random continuations.
#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub words_checked: usize,
    pub overlaps: usize,
    /// Smallest per-coordinate gap seen over all words.
    pub min_gap: f64,
}

/// Applies `n_words` random admissible continuations of length `1..=max_len`
/// to both images and counts coordinates where the projections meet.
pub fn separation_sweep(
    sys: &SkewSystem,
    cert: &SplitCertificate,
    n_words: usize,
    max_len: usize,
    seed: u64,
) -> SweepReport {
    let (m1, m2) = cert.boxes();
    let last = *cert.word_a.last().expect("nonempty word");
    let gaps: Vec<Q> = (0..n_words)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, i as u64);
            let len = rng.gen_range(1..=max_len.max(1));
            let word = sys.spec().continue_chain(last, len, &mut rng);
            let f = sys.compose(&word).expect("chain symbols are valid");
            let (a, b) = (f.image_box(m1), f.image_box(m2));
            a.sides
                .iter()
                .zip(&b.sides)
                .map(|(x, y)| projection_gap(x, y))
                .min()
                .expect("dim ≥ 1")
        })
        .collect();
    let mut overlaps = 0;
    let mut min_gap: Option<Q> = None;
    for g in gaps {
        if !g.is_positive() {
            overlaps += 1;
        }
        if min_gap.as_ref().map_or(true, |m| g < *m) {
            min_gap = Some(g);
        }
    }
    SweepReport {
        words_checked: n_words,
        overlaps,
        min_gap: min_gap.map_or(f64::INFINITY, |g| to_f64(&g)),
    }
}

/// Past `θ_{-1}, …, θ_{-n}` of sample `index`: a stationary forward chain
/// read backwards, so that `θ_{-n}, …, θ_{-1}` is Markov in forward time.
fn sample_past(sys: &SkewSystem, seed: u64, index: usize, n: usize) -> Vec<Symbol> {
    let mut rng = rng::stream(seed, index as u64);
    let mut w = sys.spec().sample_with(n, &mut rng);
    w.reverse();
    w
}

/// `diam f_{θ_{-1}} ∘ ⋯ ∘ f_{θ_{-n}}(M)` for `past = θ_{-1}, …, θ_{-n}`.
pub fn backward_diameter(sys: &SkewSystem, past: &[Symbol]) -> Q {
    backward_image(sys, past, &Cuboid::unit(sys.dim())).diameter()
}

/// Monte-Carlo means of backward-image diameters with a log-linear fit.
#[derive(Clone, Debug, Serialize)]
pub struct DecayEstimate {
    pub depths: Vec<usize>,
    pub mean_diams: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub fitted_lambda: f64,
    /// Zero when the fit is degenerate.
    pub fit_r2: f64,
    /// The fitted means were constant or contained a zero.
    pub degenerate: bool,
    pub n_samples: usize,
    pub seed: u64,
}

/// Least squares `y = a + b x`, returning `(b, r²)`, or `None` when `y` has
/// no variance.
fn fit_line(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if syy == 0.0 || sxx == 0.0 {
        return None;
    }
    let b = sxy / sxx;
    let a = my - b * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - a - b * x).powi(2))
        .sum();
    Some((b, 1.0 - ss_res / syy))
}

/// Fits `log mean = a + n log λ` over the tail half of the depths.
pub fn fit_decay(depths: &[usize], means: &[f64]) -> (f64, f64, bool) {
    let start = depths.len() / 2;
    let tail = if depths.len() - start >= 2 { start } else { 0 };
    let xs: Vec<f64> = depths[tail..].iter().map(|&d| d as f64).collect();
    if means[tail..].iter().any(|&m| m <= 0.0) {
        return (0.0, 0.0, true);
    }
    let ys: Vec<f64> = means[tail..].iter().map(|m| m.ln()).collect();
    match fit_line(&xs, &ys) {
        Some((slope, r2)) => (slope.exp(), r2, false),
        None => (1.0, 0.0, true),
    }
}

fn stderr(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

fn check_depths(depths: &[usize]) -> Result<()> {
    if depths.is_empty() || depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "depths must be nonempty and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Means of `diam f_{θ_{-1}} ∘ ⋯ ∘ f_{θ_{-n}}(M)` over Markov pasts for each
/// depth `n`. Every depth uses the same pasts, truncated.
pub fn decay_estimate(
    sys: &SkewSystem,
    depths: &[usize],
    n_samples: usize,
    seed: u64,
) -> Result<DecayEstimate> {
    check_depths(depths)?;
    if n_samples < 100 {
        return Err(Error::InvalidParameter(format!(
            "n_samples = {n_samples} below 100"
        )));
    }
    let max_depth = *depths.last().expect("nonempty");
    let rows: Vec<Vec<Q>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let past = sample_past(sys, seed, i, max_depth);
            depths
                .iter()
                .map(|&n| backward_diameter(sys, &past[..n]))
                .collect()
        })
        .collect();
    let mut mean_diams = Vec::with_capacity(depths.len());
    let mut stderrs = Vec::with_capacity(depths.len());
    for j in 0..depths.len() {
        // the mean is summed exactly and rounded once
        let sum = rows.iter().fold(Q::zero(), |acc, r| acc + &r[j]);
        let mean = to_f64(&(sum / Q::from_integer(n_samples.into())));
        let column: Vec<f64> = rows.iter().map(|r| to_f64(&r[j])).collect();
        mean_diams.push(mean);
        stderrs.push(stderr(&column, mean));
    }
    let (fitted_lambda, fit_r2, degenerate) = fit_decay(depths, &mean_diams);
    Ok(DecayEstimate {
        depths: depths.to_vec(),
        mean_diams,
        stderrs,
        fitted_lambda,
        fit_r2,
        degenerate,
        n_samples,
        seed,
    })
}

/// Fraction of forward images `f_{θ_{n-1}} ∘ ⋯ ∘ f_{θ_0}(M)` whose `coordinate`
/// projection contains `x[coordinate]`, one value per depth.
pub fn coverage_curve(
    sys: &SkewSystem,
    x: &[Q],
    coordinate: usize,
    depths: &[usize],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_depths(depths)?;
    if x.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: x.len(),
        });
    }
    if coordinate >= sys.dim() {
        return Err(Error::InvalidParameter(format!(
            "coordinate {coordinate} ≥ dimension {}",
            sys.dim()
        )));
    }
    if let Some(v) = x.iter().find(|v| !crate::exact::in_unit(v)) {
        return Err(Error::OutOfDomain(v.to_string()));
    }
    let max_depth = *depths.last().expect("nonempty");
    let hits: Vec<Vec<bool>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, i as u64);
            let word = sys.spec().sample_with(max_depth, &mut rng);
            let mut side = Cuboid::unit(sys.dim()).sides.swap_remove(coordinate);
            let mut done = 0;
            depths
                .iter()
                .map(|&n| {
                    for &s in &word[done..n] {
                        side = side.image(&sys.map(s).factors()[coordinate]);
                    }
                    done = n;
                    side.contains(&x[coordinate])
                })
                .collect()
        })
        .collect();
    Ok((0..depths.len())
        .map(|j| hits.iter().filter(|h| h[j]).count() as f64 / n_samples.max(1) as f64)
        .collect())
}

/// Probability that the `coordinate` projection of the depth-`depth` forward
/// image of `M` contains `x`.
pub fn coverage_probability(
    sys: &SkewSystem,
    x: &[Q],
    coordinate: usize,
    depth: usize,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    if depth == 0 {
        return Ok(1.0);
    }
    Ok(coverage_curve(sys, x, coordinate, &[depth], n_samples, seed)?[0])
}

/// Whether `diam f_{θ_{-1}} ∘ ⋯ ∘ f_{θ_{-n}}(M) ≤ tol`. Backward images are
/// nested in `n`, so shallower depths are tried first and a hit there is final.
pub fn backward_diameter_at_most(sys: &SkewSystem, past: &[Symbol], tol: &Q) -> bool {
    let mut n = past.len().min(16);
    loop {
        if backward_diameter(sys, &past[..n]) <= *tol {
            return true;
        }
        if n == past.len() {
            return false;
        }
        n = (2 * n).min(past.len());
    }
}

/// Fraction of sampled pasts whose depth-`depth` backward image has diameter
/// at most `tol`.
pub fn weak_hyperbolicity_fraction(
    sys: &SkewSystem,
    depth: usize,
    tol: f64,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be positive".into()));
    }
    let tol = crate::exact::q_from_f64(tol)?;
    if tol.is_negative() {
        return Err(Error::InvalidParameter("negative tolerance".into()));
    }
    let hits: Vec<bool> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let past = sample_past(sys, seed, i, depth);
            if depth == 0 {
                return Cuboid::unit(sys.dim()).diameter() <= tol;
            }
            backward_diameter_at_most(sys, &past, &tol)
        })
        .collect();
    Ok(hits.iter().filter(|&&h| h).count() as f64 / n_samples as f64)
}
