//! Two-sided symbol sequences, cylinders, the canonical metric `d0`, the
//! shift, and Markov measures on the full shift over `{1, …, k}`.
//!
//! Infinite sequences are represented by [`SymbolWindow`]: a finite core
//! anchored at an index of ℤ with periodic tails on both sides. The class is
//! closed under the shift and equality is decidable, which is all the metric
//! and dynamics code needs.

use std::fmt;

use num_integer::Integer;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub type Symbol = u8;

/// An eventually periodic two-sided sequence `θ = (θ_i)_{i ∈ ℤ}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymbolWindow {
    alphabet_size: usize,
    core: Vec<Symbol>,
    core_offset: i64,
    left_tail: Vec<Symbol>,
    right_tail: Vec<Symbol>,
}

fn check_symbols(word: &[Symbol], alphabet_size: usize) -> Result<()> {
    match word.iter().find(|&&s| s == 0 || s as usize > alphabet_size) {
        Some(&symbol) => Err(Error::InvalidSymbol {
            symbol,
            alphabet_size,
        }),
        None => Ok(()),
    }
}

impl SymbolWindow {
    /// `core[j]` sits at index `core_offset + j`. The left tail repeats toward
    /// −∞ with its last entry at `core_offset − 1`; the right tail repeats
    /// toward +∞ with its first entry right after the core.
    pub fn new(
        alphabet_size: usize,
        core: Vec<Symbol>,
        core_offset: i64,
        left_tail: Vec<Symbol>,
        right_tail: Vec<Symbol>,
    ) -> Result<Self> {
        if alphabet_size < 2 {
            return Err(Error::AlphabetTooSmall(alphabet_size));
        }
        if left_tail.is_empty() || right_tail.is_empty() {
            return Err(Error::EmptyTail);
        }
        check_symbols(&core, alphabet_size)?;
        check_symbols(&left_tail, alphabet_size)?;
        check_symbols(&right_tail, alphabet_size)?;
        Ok(Self {
            alphabet_size,
            core,
            core_offset,
            left_tail,
            right_tail,
        })
    }

    /// The constant sequence `…sss…`.
    pub fn constant(alphabet_size: usize, symbol: Symbol) -> Result<Self> {
        Self::new(alphabet_size, vec![], 0, vec![symbol], vec![symbol])
    }

    /// Sequence whose past `θ_{-1}, θ_{-2}, …` is `past` (read outward from
    /// index −1) followed by the periodic `past_tail`, also read outward.
    /// Indices `i ≥ 0` carry `future` and then the periodic `future_tail`.
    ///
    /// `from_past(2, &[1], &[2], &[1], &[1])` is `…2 2 1 . 1 1…` with the
    /// dot between indices −1 and 0.
    pub fn from_past(
        alphabet_size: usize,
        past: &[Symbol],
        past_tail: &[Symbol],
        future: &[Symbol],
        future_tail: &[Symbol],
    ) -> Result<Self> {
        let mut core: Vec<Symbol> = past.iter().rev().copied().collect();
        core.extend_from_slice(future);
        let left_tail: Vec<Symbol> = past_tail.iter().rev().copied().collect();
        Self::new(
            alphabet_size,
            core,
            -(past.len() as i64),
            left_tail,
            future_tail.to_vec(),
        )
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn core(&self) -> &[Symbol] {
        &self.core
    }

    pub fn core_offset(&self) -> i64 {
        self.core_offset
    }

    pub fn left_tail(&self) -> &[Symbol] {
        &self.left_tail
    }

    pub fn right_tail(&self) -> &[Symbol] {
        &self.right_tail
    }

    fn core_end(&self) -> i64 {
        self.core_offset + self.core.len() as i64
    }

    /// `θ_i`, resolving tails periodically.
    pub fn symbol_at(&self, i: i64) -> Symbol {
        if i < self.core_offset {
            let back = (self.core_offset - i - 1) as usize;
            let n = self.left_tail.len();
            self.left_tail[n - 1 - back % n]
        } else if i >= self.core_end() {
            let ahead = (i - self.core_end()) as usize;
            self.right_tail[ahead % self.right_tail.len()]
        } else {
            self.core[(i - self.core_offset) as usize]
        }
    }

    /// Symbols at indices `from..from + len`.
    pub fn word(&self, from: i64, len: usize) -> Vec<Symbol> {
        (0..len as i64).map(|j| self.symbol_at(from + j)).collect()
    }

    /// The backward word `(θ_{-1}, θ_{-2}, …, θ_{-n})`.
    pub fn past(&self, n: usize) -> Vec<Symbol> {
        (1..=n as i64).map(|j| self.symbol_at(-j)).collect()
    }

    /// `σ^n θ`, with `(σ^n θ)_i = θ_{i+n}`.
    pub fn shift(&self, n: i64) -> Self {
        let mut out = self.clone();
        out.core_offset -= n;
        out
    }

    /// Radius beyond which two windows agree everywhere iff they agree on the
    /// radius: covers both cores plus one common period of each tail pair.
    fn decision_radius(&self, other: &Self) -> i64 {
        let lo = self.core_offset.min(other.core_offset);
        let hi = self.core_end().max(other.core_end());
        let left_period = (self.left_tail.len() as i64).lcm(&(other.left_tail.len() as i64));
        let right_period = (self.right_tail.len() as i64).lcm(&(other.right_tail.len() as i64));
        (lo.abs() + left_period).max(hi.abs() + right_period) + 1
    }

    /// Smallest `|i|` with `θ_i ≠ ξ_i`, scanning `|i| ≤ radius`.
    fn first_disagreement(&self, other: &Self, radius: i64) -> Option<i64> {
        if self.symbol_at(0) != other.symbol_at(0) {
            return Some(0);
        }
        (1..=radius).find(|&n| {
            self.symbol_at(n) != other.symbol_at(n) || self.symbol_at(-n) != other.symbol_at(-n)
        })
    }

    /// Canonical metric `d0(θ, ξ) = 2^{-n}`, `n = min{|i| : θ_i ≠ ξ_i}`;
    /// 0 when the sequences agree at every index (decided exactly).
    pub fn canonical_distance(&self, other: &Self) -> Result<f64> {
        if self.alphabet_size != other.alphabet_size {
            return Err(Error::AlphabetMismatch(
                self.alphabet_size,
                other.alphabet_size,
            ));
        }
        let radius = self.decision_radius(other);
        Ok(match self.first_disagreement(other, radius) {
            Some(n) => 0.5f64.powi(n as i32),
            None => 0.0,
        })
    }

    /// `d0` evaluated on `|i| ≤ depth` only: sequences agreeing there are
    /// reported at distance 0, while their true distance is at most
    /// `2^{-(depth+1)}`.
    pub fn truncated_distance(&self, other: &Self, depth: usize) -> f64 {
        match self.first_disagreement(other, depth as i64) {
            Some(n) => 0.5f64.powi(n as i32),
            None => 0.0,
        }
    }

    /// Inverse of the `Display` form `(lt)core(rt)@offset`.
    pub fn parse(alphabet_size: usize, text: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("malformed window {text:?}"));
        let (body, offset) = text.trim().rsplit_once('@').ok_or_else(bad)?;
        let offset: i64 = offset.parse().map_err(|_| bad())?;
        let rest = body.strip_prefix('(').ok_or_else(bad)?;
        let (left, rest) = rest.split_once(')').ok_or_else(bad)?;
        let (core, rest) = rest.split_once('(').ok_or_else(bad)?;
        let right = rest.strip_suffix(')').ok_or_else(bad)?;
        let symbols = |w: &str| -> Result<Vec<Symbol>> {
            if alphabet_size > 9 {
                w.split(',')
                    .filter(|t| !t.is_empty())
                    .map(|t| t.parse().map_err(|_| bad()))
                    .collect()
            } else {
                w.chars()
                    .map(|c| c.to_digit(10).map(|d| d as Symbol).ok_or_else(bad))
                    .collect()
            }
        };
        Self::new(
            alphabet_size,
            symbols(core)?,
            offset,
            symbols(left)?,
            symbols(right)?,
        )
    }

    /// True when `θ_i = ξ_i` for every `i` in `lo..=hi`.
    pub fn agrees_on(&self, other: &Self, lo: i64, hi: i64) -> bool {
        (lo..=hi).all(|i| self.symbol_at(i) == other.symbol_at(i))
    }
}

impl PartialEq for SymbolWindow {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet_size == other.alphabet_size
            && self
                .first_disagreement(other, self.decision_radius(other))
                .is_none()
    }
}

impl Eq for SymbolWindow {}

impl fmt::Display for SymbolWindow {
    /// `(lt)core(rt)@offset`, e.g. `(12)1122(2)@-2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |w: &[Symbol]| {
            let sep = if self.alphabet_size > 9 { "," } else { "" };
            w.iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(sep)
        };
        write!(
            f,
            "({}){}({})@{}",
            join(&self.left_tail),
            join(&self.core),
            join(&self.right_tail),
            self.core_offset
        )
    }
}

/// The cylinder `[m; a_1 … a_ℓ] = {θ : θ_m = a_1, …, θ_{m+ℓ-1} = a_ℓ}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cylinder {
    pub start: i64,
    pub word: Vec<Symbol>,
}

impl Cylinder {
    pub fn new(start: i64, word: Vec<Symbol>) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::EmptyWord);
        }
        Ok(Self { start, word })
    }

    pub fn contains(&self, theta: &SymbolWindow) -> bool {
        self.word
            .iter()
            .enumerate()
            .all(|(j, &s)| theta.symbol_at(self.start + j as i64) == s)
    }

    /// Markov measure `p̄_{a_1} Π p_{a_i a_{i+1}}` (shift invariance makes the
    /// start index irrelevant).
    pub fn measure(&self, markov: &MarkovSpec) -> f64 {
        let first = markov.stationary[self.word[0] as usize - 1];
        self.word
            .windows(2)
            .fold(first, |acc, w| acc * markov.p(w[0], w[1]))
    }
}

const ROW_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-10;

/// A transition matrix `P` with a stationary vector `p̄`, `p̄P = p̄`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovSpec {
    transition: Vec<Vec<f64>>,
    stationary: Vec<f64>,
}

fn validate_transition(p: &[Vec<f64>]) -> Result<()> {
    let k = p.len();
    if k < 2 {
        return Err(Error::AlphabetTooSmall(k));
    }
    for (row, entries) in p.iter().enumerate() {
        if entries.len() != k {
            return Err(Error::NotSquare {
                row,
                len: entries.len(),
                expected: k,
            });
        }
        for (col, &value) in entries.iter().enumerate() {
            if !(value >= 0.0) {
                return Err(Error::NegativeEntry { row, col, value });
            }
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > ROW_TOL {
            return Err(Error::RowSum { row, sum });
        }
    }
    Ok(())
}

fn is_irreducible(p: &[Vec<f64>]) -> bool {
    let k = p.len();
    let reach = |forward: bool| {
        let mut seen = vec![false; k];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..k {
                let w = if forward { p[i][j] } else { p[j][i] };
                if w > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

/// Stationary probability vector of an irreducible stochastic matrix, from
/// the linear system `(Pᵀ − I) p = 0` with one row replaced by `Σ p_i = 1`.
pub fn stationary_vector(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    validate_transition(p)?;
    if !is_irreducible(p) {
        return Err(Error::Reducible);
    }
    let k = p.len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for (i, row) in a.iter_mut().enumerate().take(k - 1) {
        for j in 0..k {
            row[j] = p[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..k {
        a[k - 1][j] = 1.0;
    }
    a[k - 1][k] = 1.0;
    // Gaussian elimination with partial pivoting
    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap_or(col);
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::Reducible);
        }
        a.swap(col, pivot);
        for r in 0..k {
            if r != col {
                let factor = a[r][col] / a[col][col];
                if factor != 0.0 {
                    for c in col..=k {
                        a[r][c] -= factor * a[col][c];
                    }
                }
            }
        }
    }
    let mut pbar: Vec<f64> = (0..k).map(|i| (a[i][k] / a[i][i]).max(0.0)).collect();
    let total: f64 = pbar.iter().sum();
    pbar.iter_mut().for_each(|x| *x /= total);
    Ok(pbar)
}

/// True iff every consecutive transition of `word` has positive probability.
pub fn is_admissible(word: &[Symbol], p: &[Vec<f64>]) -> bool {
    word.windows(2)
        .all(|w| p[w[0] as usize - 1][w[1] as usize - 1] > 0.0)
}

impl MarkovSpec {
    /// Builds the spec, computing the stationary vector.
    pub fn new(transition: Vec<Vec<f64>>) -> Result<Self> {
        let stationary = stationary_vector(&transition)?;
        Ok(Self {
            transition,
            stationary,
        })
    }

    /// Uses a supplied stationary vector after checking `p̄P = p̄`. Reducible
    /// matrices are accepted here since `p̄` is given.
    pub fn with_stationary(transition: Vec<Vec<f64>>, stationary: Vec<f64>) -> Result<Self> {
        validate_transition(&transition)?;
        let k = transition.len();
        if stationary.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: stationary.len(),
            });
        }
        if stationary.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::InvalidStationary("negative entry".into()));
        }
        let sum: f64 = stationary.iter().sum();
        if (sum - 1.0).abs() > STATIONARY_TOL {
            return Err(Error::InvalidStationary(format!("entries sum to {sum}")));
        }
        for j in 0..k {
            let v: f64 = (0..k).map(|i| stationary[i] * transition[i][j]).sum();
            if (v - stationary[j]).abs() > STATIONARY_TOL {
                return Err(Error::InvalidStationary(format!(
                    "p̄P differs from p̄ at {j}"
                )));
            }
        }
        Ok(Self {
            transition,
            stationary,
        })
    }

    /// I.i.d. symbols with the given weights.
    pub fn bernoulli(weights: &[f64]) -> Result<Self> {
        let rows = vec![weights.to_vec(); weights.len()];
        Self::with_stationary(rows, weights.to_vec())
    }

    /// Uniform Bernoulli measure on `k` symbols.
    pub fn uniform(k: usize) -> Result<Self> {
        Self::bernoulli(&vec![1.0 / k as f64; k])
    }

    pub fn alphabet_size(&self) -> usize {
        self.transition.len()
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn p(&self, from: Symbol, to: Symbol) -> f64 {
        self.transition[from as usize - 1][to as usize - 1]
    }

    pub fn is_admissible(&self, word: &[Symbol]) -> bool {
        is_admissible(word, &self.transition)
    }

    /// A row with all entries positive, if any (`∃u: p_{uj} > 0 ∀j`).
    pub fn full_row(&self) -> Option<Symbol> {
        self.transition
            .iter()
            .position(|row| row.iter().all(|&x| x > 0.0))
            .map(|u| u as Symbol + 1)
    }

    fn draw(weights: &[f64], rng: &mut impl Rng) -> Symbol {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, &w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return i as Symbol + 1;
            }
        }
        // rounding: last symbol with positive weight
        weights.iter().rposition(|&w| w > 0.0).unwrap_or(0) as Symbol + 1
    }

    /// Continues a chain from `state` for `length` steps.
    pub fn continue_chain(&self, state: Symbol, length: usize, rng: &mut impl Rng) -> Vec<Symbol> {
        let mut out = Vec::with_capacity(length);
        let mut current = state;
        for _ in 0..length {
            current = Self::draw(&self.transition[current as usize - 1], rng);
            out.push(current);
        }
        out
    }

    /// A stationary chain segment of `length` symbols drawn from `rng`.
    pub fn sample_with(&self, length: usize, rng: &mut impl Rng) -> Vec<Symbol> {
        if length == 0 {
            return vec![];
        }
        let first = Self::draw(&self.stationary, rng);
        let mut out = vec![first];
        out.extend(self.continue_chain(first, length - 1, rng));
        out
    }

    /// A random two-sided window: the chain is run through a left tail block,
    /// the core `[-half_width, half_width)` and a right tail block, each tail
    /// block of length `half_width` and repeated periodically outward.
    pub fn sample_window(&self, half_width: usize, rng: &mut impl Rng) -> SymbolWindow {
        let w = half_width.max(1);
        let run = self.sample_with(4 * w, rng);
        let left_tail = run[..w].to_vec();
        let core = run[w..3 * w].to_vec();
        let right_tail = run[3 * w..].to_vec();
        SymbolWindow {
            alphabet_size: self.alphabet_size(),
            core,
            core_offset: -(w as i64),
            left_tail,
            right_tail,
        }
    }
}

/// Word of `length` symbols drawn with initial law `p̄` and transitions `P`;
/// deterministic in `seed`.
pub fn sample_markov(spec: &MarkovSpec, length: usize, seed: u64) -> Vec<Symbol> {
    let mut rng = rng::stream(seed, 0);
    spec.sample_with(length, &mut rng)
}

/// Concatenation of all words over `{1,…,k}` of lengths `1..=max_word_length`,
/// each length in lexicographic order.
pub fn disjunctive_prefix(k: usize, max_word_length: usize) -> Vec<Symbol> {
    let mut out = Vec::new();
    for len in 1..=max_word_length {
        let mut word = vec![1 as Symbol; len];
        'words: loop {
            out.extend_from_slice(&word);
            // odometer increment, rightmost symbol fastest
            let mut pos = len;
            loop {
                if pos == 0 {
                    break 'words;
                }
                pos -= 1;
                if (word[pos] as usize) < k {
                    word[pos] += 1;
                    break;
                }
                word[pos] = 1;
            }
        }
    }
    out
}

/// All words of exactly `len` symbols over `{1,…,k}`.
pub fn all_words(k: usize, len: usize) -> Vec<Vec<Symbol>> {
    let mut words: Vec<Vec<Symbol>> = vec![vec![]];
    for _ in 0..len {
        words = words
            .into_iter()
            .flat_map(|w| {
                (1..=k as Symbol).map(move |s| {
                    let mut next = w.clone();
                    next.push(s);
                    next
                })
            })
            .collect();
    }
    words
}
