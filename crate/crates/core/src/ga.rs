//! Genetic-algorithm sampler of coalitions with high marginal contribution
//! for one focal feature and one coalition size.
//!
//! A chromosome is a bit vector of length `n − 1` with exactly `t` ones.
//! Bit `j` stands for feature `j` when `j < focal` and for feature `j + 1`
//! otherwise, so the focal feature can never be encoded.
//!
//! Each generation draws two parents by roulette, recombines them, mutates
//! both offspring, evaluates them, and then evicts the two least fit members
//! of the population. Every evaluated chromosome, including the initial
//! population and offspring that are later evicted, is kept as a sample.

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::game::{marginal_contribution, Coalition, Game};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chromosome {
    bits: Vec<bool>,
    focal: usize,
    ones: usize,
}

impl Chromosome {
    /// `bits` must have length `n_players − 1`.
    pub fn from_bits(focal: usize, bits: Vec<bool>) -> Result<Self> {
        let n_players = bits.len() + 1;
        if focal >= n_players {
            return Err(Error::FeatureOutOfRange {
                feature: focal,
                n_players,
            });
        }
        let ones = bits.iter().filter(|&&b| b).count();
        Ok(Chromosome { bits, focal, ones })
    }

    /// Parses a string of `0`/`1` characters.
    pub fn parse(focal: usize, s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|ch| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::InvalidArgument(format!("bad chromosome character {ch:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Chromosome::from_bits(focal, bits)
    }

    /// Uniformly random chromosome with exactly `ones` set bits.
    pub fn random<R: Rng + ?Sized>(n_players: usize, focal: usize, ones: usize, rng: &mut R) -> Result<Self> {
        let len = n_players.saturating_sub(1);
        if focal >= n_players {
            return Err(Error::FeatureOutOfRange {
                feature: focal,
                n_players,
            });
        }
        if ones > len {
            return Err(Error::InvalidArgument(format!(
                "cannot place {ones} ones in a chromosome of length {len}"
            )));
        }
        let mut bits = vec![false; len];
        for j in index::sample(rng, len, ones) {
            bits[j] = true;
        }
        Ok(Chromosome { bits, focal, ones })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn focal(&self) -> usize {
        self.focal
    }

    /// Target cardinality `t`.
    pub fn ones(&self) -> usize {
        self.ones
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn to_coalition(&self) -> Coalition {
        let n = self.bits.len() + 1;
        let mut c = Coalition::empty(n);
        for (j, _) in self.bits.iter().enumerate().filter(|(_, &b)| b) {
            let feature = if j < self.focal { j } else { j + 1 };
            c.insert(feature).expect("index within capacity");
        }
        c
    }
}

impl std::fmt::Display for Chromosome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Marginal contribution of the focal feature to the encoded coalition.
pub fn fitness<G: Game + ?Sized>(game: &G, chr: &Chromosome) -> Result<f64> {
    marginal_contribution(game, &chr.to_coalition(), chr.focal)
}

fn roulette_draw<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut r = rng.random::<f64>() * total;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            if r < w {
                return k;
            }
            r -= w;
        }
    }
    // rounding left r just past the last positive weight
    weights.iter().rposition(|&w| w > 0.0).expect("at least one positive weight")
}

/// Draws two distinct indices, each with probability proportional to
/// `f_k − min(f) + floor` among the indices not yet drawn.
pub fn roulette_select<R: Rng + ?Sized>(fitnesses: &[f64], floor: f64, rng: &mut R) -> Result<(usize, usize)> {
    if fitnesses.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: fitnesses.len(),
        });
    }
    if !(floor > 0.0) {
        return Err(Error::InvalidArgument("fitness floor must be positive".into()));
    }
    let min = fitnesses.iter().copied().fold(f64::INFINITY, f64::min);
    let mut weights: Vec<f64> = fitnesses.iter().map(|f| f - min + floor).collect();
    let first = roulette_draw(&weights, rng);
    weights[first] = 0.0;
    let second = roulette_draw(&weights, rng);
    Ok((first, second))
}

/// Recombines two parents with the same focal feature and cardinality.
///
/// Candidate segments are aligned windows `[start, start + len)` with
/// `2 ≤ len < L` in which both parents carry the same number of ones. One
/// candidate is chosen uniformly and exchanged. When there is none, each
/// parent independently has a random window (length `2..=L`) reversed in
/// place.
pub fn crossover<R: Rng + ?Sized>(p1: &Chromosome, p2: &Chromosome, rng: &mut R) -> Result<(Chromosome, Chromosome)> {
    if p1.focal != p2.focal || p1.ones != p2.ones || p1.len() != p2.len() {
        return Err(Error::ChromosomeMismatch);
    }
    let len = p1.len();
    let prefix = |c: &Chromosome| {
        let mut acc = vec![0usize; len + 1];
        for (j, &b) in c.bits.iter().enumerate() {
            acc[j + 1] = acc[j] + b as usize;
        }
        acc
    };
    let (s1, s2) = (prefix(p1), prefix(p2));
    let mut segments = Vec::new();
    for width in 2..len {
        for start in 0..=len - width {
            let end = start + width;
            if s1[end] - s1[start] == s2[end] - s2[start] {
                segments.push((start, end));
            }
        }
    }

    let mut c1 = p1.clone();
    let mut c2 = p2.clone();
    if segments.is_empty() {
        reverse_random_window(&mut c1, rng);
        reverse_random_window(&mut c2, rng);
    } else {
        let (start, end) = segments[rng.random_range(0..segments.len())];
        c1.bits[start..end].swap_with_slice(&mut c2.bits[start..end]);
    }
    Ok((c1, c2))
}

fn reverse_random_window<R: Rng + ?Sized>(c: &mut Chromosome, rng: &mut R) {
    let len = c.len();
    if len < 2 {
        return;
    }
    let width = rng.random_range(2..=len);
    let start = rng.random_range(0..=len - width);
    c.bits[start..start + width].reverse();
}

/// Flips one random 1 to 0 and one random 0 to 1. Identity when the
/// chromosome is all zeros or all ones.
pub fn mutate<R: Rng + ?Sized>(chr: &Chromosome, rng: &mut R) -> Chromosome {
    let mut out = chr.clone();
    let ones: Vec<usize> = (0..chr.len()).filter(|&j| chr.bits[j]).collect();
    if ones.is_empty() || ones.len() == chr.len() {
        return out;
    }
    let zeros: Vec<usize> = (0..chr.len()).filter(|&j| !chr.bits[j]).collect();
    let off = ones[rng.random_range(0..ones.len())];
    let on = zeros[rng.random_range(0..zeros.len())];
    out.bits[off] = false;
    out.bits[on] = true;
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaConfig {
    /// Population size `n_p`.
    pub population_size: usize,
    /// Samples collected per (feature, size) stratum, `n_G`.
    pub samples_per_size: usize,
    /// Coalition sizes `0..max_coalition_size` are sampled.
    pub max_coalition_size: usize,
    pub seed: u64,
    /// Added to shifted fitnesses so every roulette weight is positive.
    pub fitness_floor: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 20,
            samples_per_size: 100,
            max_coalition_size: 20,
            seed: 0,
            fitness_floor: 1e-6,
        }
    }
}

impl GaConfig {
    pub fn validate(&self, n_players: usize) -> Result<()> {
        if self.population_size < 4 {
            return Err(Error::InvalidArgument("population_size must be at least 4".into()));
        }
        if self.samples_per_size < self.population_size {
            return Err(Error::InvalidArgument(
                "samples_per_size must be at least population_size".into(),
            ));
        }
        if self.max_coalition_size < 1 || self.max_coalition_size > n_players {
            return Err(Error::InvalidArgument(format!(
                "max_coalition_size must lie in 1..={n_players}, got {}",
                self.max_coalition_size
            )));
        }
        if !(self.fitness_floor > 0.0) {
            return Err(Error::InvalidArgument("fitness_floor must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub coalition: Coalition,
    pub marginal: f64,
}

/// Samples of the focal feature's marginal contribution over coalitions of
/// one size.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub feature: usize,
    pub size: usize,
    pub n_players: usize,
    pub samples: Vec<Sample>,
}

impl SampleSet {
    pub fn marginals(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.marginal).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Runs the genetic algorithm for `feature` at coalition size `size` and
/// returns `cfg.samples_per_size` samples.
///
/// Sizes `0` and `n − 1` admit a single coalition; it is evaluated once and
/// returned as the only sample. Every other stratum costs exactly two game
/// evaluations per sample.
pub fn collect_samples<G: Game + ?Sized>(game: &G, feature: usize, size: usize, cfg: &GaConfig) -> Result<SampleSet> {
    let n = game.n_players();
    cfg.validate(n)?;
    if feature >= n {
        return Err(Error::FeatureOutOfRange {
            feature,
            n_players: n,
        });
    }
    if size + 1 > n {
        return Err(Error::InvalidArgument(format!(
            "coalition size {size} leaves no room for the focal feature among {n} players"
        )));
    }
    let mut set = SampleSet {
        feature,
        size,
        n_players: n,
        samples: Vec::with_capacity(cfg.samples_per_size),
    };
    let mut rng = seed::rng_for(cfg.seed, &[feature as u64, size as u64]);

    if size == 0 || size == n - 1 {
        let chr = Chromosome::random(n, feature, size, &mut rng)?;
        let marginal = fitness(game, &chr)?;
        set.samples.push(Sample {
            coalition: chr.to_coalition(),
            marginal,
        });
        return Ok(set);
    }

    let mut population: Vec<(Chromosome, f64)> = Vec::with_capacity(cfg.population_size + 2);
    for _ in 0..cfg.population_size {
        let chr = Chromosome::random(n, feature, size, &mut rng)?;
        let f = fitness(game, &chr)?;
        set.samples.push(Sample {
            coalition: chr.to_coalition(),
            marginal: f,
        });
        population.push((chr, f));
    }

    let mut fits: Vec<f64> = Vec::with_capacity(cfg.population_size);
    while set.samples.len() < cfg.samples_per_size {
        fits.clear();
        fits.extend(population.iter().map(|(_, f)| *f));
        let (a, b) = roulette_select(&fits, cfg.fitness_floor, &mut rng)?;
        let (c1, c2) = crossover(&population[a].0, &population[b].0, &mut rng)?;
        let offspring = [mutate(&c1, &mut rng), mutate(&c2, &mut rng)];
        for child in offspring {
            if set.samples.len() == cfg.samples_per_size {
                break;
            }
            let f = fitness(game, &child)?;
            set.samples.push(Sample {
                coalition: child.to_coalition(),
                marginal: f,
            });
            population.push((child, f));
        }
        while population.len() > cfg.population_size {
            let worst = population
                .iter()
                .enumerate()
                .fold(0, |w, (k, (_, f))| if *f < population[w].1 { k } else { w });
            population.remove(worst);
        }
    }
    Ok(set)
}
