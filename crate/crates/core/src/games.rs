//! Closed-form games used for testing estimators without a classifier.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{Coalition, Game};

fn check_capacity(c: &Coalition, n: usize) -> Result<()> {
    if c.capacity() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: c.capacity(),
        });
    }
    Ok(())
}

/// `ν(T) = Σ_{j∈T} w_j`.
#[derive(Debug, Clone)]
pub struct AdditiveGame {
    weights: Vec<f64>,
}

impl AdditiveGame {
    pub fn new(weights: Vec<f64>) -> Self {
        AdditiveGame { weights }
    }
}

impl Game for AdditiveGame {
    fn n_players(&self) -> usize {
        self.weights.len()
    }
    fn value(&self, c: &Coalition) -> Result<f64> {
        check_capacity(c, self.weights.len())?;
        Ok(c.iter().map(|j| self.weights[j]).sum())
    }
}

/// `ν(T) = 1` iff `|T| ≥ quota`.
#[derive(Debug, Clone)]
pub struct MajorityGame {
    n: usize,
    quota: usize,
}

impl MajorityGame {
    pub fn new(n: usize, quota: usize) -> Self {
        assert!(quota >= 1, "quota 0 would give the empty coalition value 1");
        MajorityGame { n, quota }
    }
}

impl Game for MajorityGame {
    fn n_players(&self) -> usize {
        self.n
    }
    fn value(&self, c: &Coalition) -> Result<f64> {
        check_capacity(c, self.n)?;
        Ok(if c.cardinality() >= self.quota { 1.0 } else { 0.0 })
    }
}

/// `ν(T) = min(#left ∈ T, #right ∈ T)`.
#[derive(Debug, Clone)]
pub struct GloveGame {
    n: usize,
    left: Vec<usize>,
    right: Vec<usize>,
}

impl GloveGame {
    pub fn new(n: usize, left: Vec<usize>, right: Vec<usize>) -> Self {
        GloveGame { n, left, right }
    }
}

impl Game for GloveGame {
    fn n_players(&self) -> usize {
        self.n
    }
    fn value(&self, c: &Coalition) -> Result<f64> {
        check_capacity(c, self.n)?;
        let l = self.left.iter().filter(|&&j| c.contains(j)).count();
        let r = self.right.iter().filter(|&&j| c.contains(j)).count();
        Ok(l.min(r) as f64)
    }
}

/// A game given by an explicit value for every coalition, indexed by bit mask.
#[derive(Debug, Clone)]
pub struct TableGame {
    n: usize,
    values: Vec<f64>,
}

impl TableGame {
    /// Panics if `values.len() != 2^n`. `values[0]` is forced to zero.
    pub fn new(n: usize, mut values: Vec<f64>) -> Self {
        assert!(n < 26 && values.len() == 1 << n, "table must have 2^n entries");
        values[0] = 0.0;
        TableGame { n, values }
    }

    pub fn from_fn(n: usize, f: impl Fn(&Coalition) -> f64) -> Self {
        let values = (0..1u64 << n).map(|m| f(&Coalition::from_mask(n, m))).collect();
        TableGame::new(n, values)
    }

    /// Uniform random values in `[0, 1]` for every non-empty coalition.
    pub fn random(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..1usize << n).map(|_| rng.random::<f64>()).collect();
        TableGame::new(n, values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pointwise sum of two games on the same players.
    pub fn sum(&self, other: &TableGame) -> TableGame {
        assert_eq!(self.n, other.n);
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        TableGame::new(self.n, values)
    }
}

impl Game for TableGame {
    fn n_players(&self) -> usize {
        self.n
    }
    fn value(&self, c: &Coalition) -> Result<f64> {
        check_capacity(c, self.n)?;
        let mask = c.iter().fold(0usize, |m, j| m | 1 << j);
        Ok(self.values[mask])
    }
}

/// Additive weights plus non-negative pairwise synergies, scaled so the
/// grand coalition is worth 1. Monotone, values in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct SynergyGame {
    weights: Vec<f64>,
    synergy: Vec<Vec<f64>>,
    scale: f64,
}

impl SynergyGame {
    pub fn new(weights: Vec<f64>, synergy: Vec<Vec<f64>>) -> Self {
        let n = weights.len();
        assert!(synergy.len() == n && synergy.iter().all(|r| r.len() == n));
        let mut g = SynergyGame {
            weights,
            synergy,
            scale: 1.0,
        };
        let total = g.raw(&Coalition::full(n));
        g.scale = if total > 0.0 { 1.0 / total } else { 1.0 };
        g
    }

    /// Weights uniform on `[0, 1]`, symmetric synergies uniform on
    /// `[0, max_synergy]`.
    pub fn random(n: usize, max_synergy: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..n).map(|_| rng.random::<f64>()).collect();
        let mut synergy = vec![vec![0.0; n]; n];
        for a in 0..n {
            for b in a + 1..n {
                let s = rng.random::<f64>() * max_synergy;
                synergy[a][b] = s;
                synergy[b][a] = s;
            }
        }
        SynergyGame::new(weights, synergy)
    }

    fn raw(&self, c: &Coalition) -> f64 {
        let members = c.members();
        let mut v: f64 = members.iter().map(|&j| self.weights[j]).sum();
        for (k, &a) in members.iter().enumerate() {
            for &b in &members[k + 1..] {
                v += self.synergy[a][b];
            }
        }
        v
    }

    /// Closed-form Shapley values: `w_i + ½ Σ_k s_ik`, scaled.
    pub fn shapley(&self) -> Vec<f64> {
        (0..self.weights.len())
            .map(|i| self.scale * (self.weights[i] + 0.5 * self.synergy[i].iter().sum::<f64>()))
            .collect()
    }
}

impl Game for SynergyGame {
    fn n_players(&self) -> usize {
        self.weights.len()
    }
    fn value(&self, c: &Coalition) -> Result<f64> {
        check_capacity(c, self.weights.len())?;
        Ok(self.scale * self.raw(c))
    }
}

/// `ν(T) = 1` iff every player in `required` belongs to `T`.
#[derive(Debug, Clone)]
pub struct UnanimityGame {
    n: usize,
    required: Vec<usize>,
}

impl UnanimityGame {
    pub fn new(n: usize, required: Vec<usize>) -> Self {
        assert!(!required.is_empty());
        UnanimityGame { n, required }
    }
}

impl Game for UnanimityGame {
    fn n_players(&self) -> usize {
        self.n
    }
    fn value(&self, c: &Coalition) -> Result<f64> {
        check_capacity(c, self.n)?;
        Ok(if self.required.iter().all(|&j| c.contains(j)) { 1.0 } else { 0.0 })
    }
}
