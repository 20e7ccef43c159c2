//! Cooperative games over feature sets: coalitions, characteristic
//! functions, and exact Shapley values for small player counts.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

/// Player-count ceiling for the exhaustive routines in this module.
pub const DEFAULT_EXACT_CEILING: usize = 16;

const WORD_BITS: usize = 64;

/// A subset of the players `0..capacity`, stored as a fixed-width bit pattern.
///
/// Two coalitions with the same capacity and members compare and hash equal
/// regardless of insertion order.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Coalition {
    capacity: usize,
    words: Vec<u64>,
}

impl Coalition {
    pub fn empty(capacity: usize) -> Self {
        Coalition {
            capacity,
            words: vec![0; capacity.div_ceil(WORD_BITS)],
        }
    }

    pub fn full(capacity: usize) -> Self {
        let mut c = Coalition::empty(capacity);
        for i in 0..capacity {
            c.set(i);
        }
        c
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(capacity: usize, indices: I) -> Result<Self> {
        let mut c = Coalition::empty(capacity);
        for i in indices {
            c.insert(i)?;
        }
        Ok(c)
    }

    /// Coalition whose members are the set bits of `mask` (player `j` is bit `j`).
    pub fn from_mask(capacity: usize, mask: u64) -> Self {
        debug_assert!(capacity >= 64 || mask >> capacity == 0);
        let mut c = Coalition::empty(capacity);
        if !c.words.is_empty() {
            c.words[0] = mask;
        }
        c
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn cardinality(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.capacity && self.words[i / WORD_BITS] & (1 << (i % WORD_BITS)) != 0
    }

    /// Adds `i`; adding an existing member is a no-op.
    pub fn insert(&mut self, i: usize) -> Result<()> {
        if i >= self.capacity {
            return Err(Error::FeatureOutOfRange {
                feature: i,
                n_players: self.capacity,
            });
        }
        self.set(i);
        Ok(())
    }

    pub fn remove(&mut self, i: usize) {
        if i < self.capacity {
            self.words[i / WORD_BITS] &= !(1 << (i % WORD_BITS));
        }
    }

    fn set(&mut self, i: usize) {
        self.words[i / WORD_BITS] |= 1 << (i % WORD_BITS);
    }

    /// Copy of `self` with `i` added.
    pub fn with(&self, i: usize) -> Result<Self> {
        let mut c = self.clone();
        c.insert(i)?;
        Ok(c)
    }

    pub fn union(&self, other: &Coalition) -> Coalition {
        self.zip_words(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &Coalition) -> Coalition {
        self.zip_words(other, |a, b| a & b)
    }

    pub fn is_disjoint(&self, other: &Coalition) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    fn zip_words(&self, other: &Coalition, op: impl Fn(u64, u64) -> u64) -> Coalition {
        assert_eq!(self.capacity, other.capacity, "coalition capacity mismatch");
        Coalition {
            capacity: self.capacity,
            words: self.words.iter().zip(&other.words).map(|(&a, &b)| op(a, b)).collect(),
        }
    }

    /// Members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let b = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(w * WORD_BITS + b)
                }
            })
        })
    }

    pub fn members(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A characteristic function over `n_players` players.
///
/// Implementations must be deterministic and return `0.0` for the empty
/// coalition.
pub trait Game {
    fn n_players(&self) -> usize;
    fn value(&self, coalition: &Coalition) -> Result<f64>;
}

impl<G: Game + ?Sized> Game for &G {
    fn n_players(&self) -> usize {
        (**self).n_players()
    }
    fn value(&self, coalition: &Coalition) -> Result<f64> {
        (**self).value(coalition)
    }
}

/// Wraps a game and counts every call to `value`, cached or not.
pub struct CountingGame<G> {
    inner: G,
    calls: AtomicU64,
}

impl<G: Game> CountingGame<G> {
    pub fn new(inner: G) -> Self {
        CountingGame {
            inner,
            calls: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn into_inner(self) -> G {
        self.inner
    }
}

impl<G: Game> Game for CountingGame<G> {
    fn n_players(&self) -> usize {
        self.inner.n_players()
    }
    fn value(&self, coalition: &Coalition) -> Result<f64> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.value(coalition)
    }
}

/// `ν(T ∪ {i}) − ν(T)`.
pub fn marginal_contribution<G: Game + ?Sized>(game: &G, coalition: &Coalition, i: usize) -> Result<f64> {
    let n = game.n_players();
    if i >= n {
        return Err(Error::FeatureOutOfRange { feature: i, n_players: n });
    }
    if coalition.contains(i) {
        return Err(Error::FeatureInCoalition { feature: i });
    }
    let with_i = game.value(&coalition.with(i)?)?;
    let without = game.value(coalition)?;
    Ok(with_i - without)
}

fn check_ceiling(n: usize, ceiling: usize) -> Result<()> {
    if n > ceiling || n >= 63 {
        return Err(Error::TooManyPlayers { n_players: n, ceiling });
    }
    Ok(())
}

/// Values of every coalition, indexed by bit mask.
fn value_table<G: Game + ?Sized>(game: &G) -> Result<Vec<f64>> {
    let n = game.n_players();
    (0..1u64 << n)
        .map(|mask| game.value(&Coalition::from_mask(n, mask)))
        .collect()
}

/// Binomial coefficient as a float; exact for the sizes handled here.
pub(crate) fn binomial_f64(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Exact Shapley values by enumerating every coalition.
///
/// Player `i` receives `Σ_{T ∌ i} |T|!(n−|T|−1)!/n! · (ν(T∪{i}) − ν(T))`.
pub fn exact_shapley<G: Game + ?Sized>(game: &G, ceiling: usize) -> Result<Vec<f64>> {
    let n = game.n_players();
    check_ceiling(n, ceiling)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let table = value_table(game)?;
    // |T|!(n−|T|−1)!/n! = 1 / (n · C(n−1, |T|))
    let weights: Vec<f64> = (0..n).map(|s| 1.0 / (n as f64 * binomial_f64(n - 1, s))).collect();
    let mut phi = vec![0.0; n];
    for (i, phi_i) in phi.iter_mut().enumerate() {
        let bit = 1u64 << i;
        for mask in (0..1u64 << n).filter(|m| m & bit == 0) {
            let size = mask.count_ones() as usize;
            *phi_i += weights[size] * (table[(mask | bit) as usize] - table[mask as usize]);
        }
    }
    Ok(phi)
}

/// Per-feature, per-coalition-size mean marginal contributions `E(X_i^t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumMeans {
    n_players: usize,
    max_size: usize,
    values: Vec<Option<f64>>,
}

impl StratumMeans {
    /// Empty table for `t` in `0..max_size`.
    pub fn new(n_players: usize, max_size: usize) -> Self {
        StratumMeans {
            n_players,
            max_size,
            values: vec![None; n_players * max_size],
        }
    }

    pub fn n_players(&self) -> usize {
        self.n_players
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn set(&mut self, feature: usize, size: usize, mean: f64) {
        assert!(feature < self.n_players && size < self.max_size);
        self.values[feature * self.max_size + size] = Some(mean);
    }

    pub fn get(&self, feature: usize, size: usize) -> Option<f64> {
        if feature < self.n_players && size < self.max_size {
            self.values[feature * self.max_size + size]
        } else {
            None
        }
    }
}

/// Exhaustive `E(X_i^t)` for every feature and every size `t < n`.
pub fn exact_stratum_means<G: Game + ?Sized>(game: &G, ceiling: usize) -> Result<StratumMeans> {
    let n = game.n_players();
    check_ceiling(n, ceiling)?;
    let table = value_table(game)?;
    let mut means = StratumMeans::new(n, n);
    for i in 0..n {
        let bit = 1u64 << i;
        let mut sums = vec![0.0; n];
        for mask in (0..1u64 << n).filter(|m| m & bit == 0) {
            sums[mask.count_ones() as usize] += table[(mask | bit) as usize] - table[mask as usize];
        }
        for (t, s) in sums.into_iter().enumerate() {
            means.set(i, t, s / binomial_f64(n - 1, t));
        }
    }
    Ok(means)
}

/// Averages the stratum means over sizes `0..max_size`:
/// `φ̂_i = (1/max_size) Σ_t mean(i, t)`.
pub fn truncated_shapley(means: &StratumMeans, max_size: usize) -> Result<Vec<f64>> {
    if max_size == 0 {
        return Err(Error::InvalidArgument("max coalition size must be at least 1".into()));
    }
    (0..means.n_players())
        .map(|i| {
            let mut total = 0.0;
            for t in 0..max_size {
                total += means
                    .get(i, t)
                    .ok_or(Error::MissingStratum { feature: i, size: t })?;
            }
            Ok(total / max_size as f64)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GameProperty {
    /// `ν(S∪T) + ν(S∩T) ≥ ν(S) + ν(T)` for all `S, T`.
    Convex,
    /// `ν(S∪T) ≥ ν(S) + ν(T)` for disjoint `S, T`.
    Superadditive,
}

/// Exhaustively checks a game property. Convexity visits `4^n` pairs and
/// super-additivity `3^n`, so keep `n` small.
pub fn verify_game_property<G: Game + ?Sized>(game: &G, property: GameProperty, ceiling: usize) -> Result<bool> {
    const TOL: f64 = 1e-12;
    let n = game.n_players();
    check_ceiling(n, ceiling)?;
    let table = value_table(game)?;
    let all = 1u64 << n;
    match property {
        GameProperty::Convex => {
            for s in 0..all {
                for t in s..all {
                    let lhs = table[(s | t) as usize] + table[(s & t) as usize];
                    if lhs + TOL < table[s as usize] + table[t as usize] {
                        return Ok(false);
                    }
                }
            }
        }
        GameProperty::Superadditive => {
            for s in 0..all {
                // iterate subsets t of the complement of s
                let rest = (all - 1) & !s;
                let mut t = rest;
                loop {
                    if table[(s | t) as usize] + TOL < table[s as usize] + table[t as usize] {
                        return Ok(false);
                    }
                    if t == 0 {
                        break;
                    }
                    t = (t - 1) & rest;
                }
            }
        }
    }
    Ok(true)
}
