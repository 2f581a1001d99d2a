use crate::error::{Error, Result};
use crate::model::SystemSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Default cap on stochastic generators for exact enumeration (2^22 states).
pub const DEFAULT_MAX_EXACT_GENERATORS: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateMode {
    Exact,
    Sampled,
}

/// One outage state: availability of every generator and its probability weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageState<'a> {
    pub up: &'a [bool],
    pub weight: f64,
}

/// A weighted collection of outage states, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSet {
    generators: usize,
    up: Vec<bool>,
    weights: Vec<f64>,
    mode: StateMode,
    seed: Option<u64>,
}

impl StateSet {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn generators(&self) -> usize {
        self.generators
    }

    pub fn mode(&self) -> StateMode {
        self.mode
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn up(&self, state: usize) -> &[bool] {
        let n = self.generators;
        &self.up[state * n..(state + 1) * n]
    }

    pub fn state(&self, state: usize) -> OutageState<'_> {
        OutageState {
            up: self.up(state),
            weight: self.weights[state],
        }
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = OutageState<'_>> + '_ {
        (0..self.len()).map(move |s| self.state(s))
    }

    /// Availability rows of all states, for parallel iteration.
    pub(crate) fn rows(&self) -> &[bool] {
        &self.up
    }

    /// Builds a state set from explicit rows; weights must be positive.
    pub fn from_states(generators: usize, states: Vec<(Vec<bool>, f64)>, mode: StateMode) -> Result<Self> {
        let mut up = Vec::with_capacity(generators * states.len());
        let mut weights = Vec::with_capacity(states.len());
        for (row, w) in states {
            if row.len() != generators {
                return Err(Error::Instance("state width differs from generator count".into()));
            }
            if !(w > 0.0 && w <= 1.0) {
                return Err(Error::Instance(format!("state weight {w} outside (0, 1]")));
            }
            up.extend(row);
            weights.push(w);
        }
        Ok(StateSet {
            generators,
            up,
            weights,
            mode,
            seed: None,
        })
    }
}

/// Exhaustive product-Bernoulli states. Units with outage probability 0 or 1
/// are deterministic and do not multiply the state count.
pub fn enumerate_states(spec: &SystemSpec) -> Result<StateSet> {
    enumerate_states_capped(spec, DEFAULT_MAX_EXACT_GENERATORS)
}

pub fn enumerate_states_capped(spec: &SystemSpec, max_stochastic: usize) -> Result<StateSet> {
    let gens = spec.generators();
    let stochastic: Vec<usize> = gens
        .iter()
        .enumerate()
        .filter(|(_, g)| g.outage_prob > 0.0 && g.outage_prob < 1.0)
        .map(|(j, _)| j)
        .collect();
    let k = stochastic.len();
    if k > max_stochastic {
        return Err(Error::UseMonteCarlo {
            states: 1u128 << k.min(127),
            cap: max_stochastic,
        });
    }
    let base: Vec<bool> = gens.iter().map(|g| g.outage_prob < 1.0).collect();
    let count = 1usize << k;
    let mut up = Vec::with_capacity(count * gens.len());
    let mut weights = Vec::with_capacity(count);
    // State index bits, most significant first, mark the stochastic units that are down.
    for idx in 0..count {
        let mut row = base.clone();
        let mut w = 1.0;
        for (i, &j) in stochastic.iter().enumerate() {
            let down = (idx >> (k - 1 - i)) & 1 == 1;
            let p = gens[j].outage_prob;
            row[j] = !down;
            w *= if down { p } else { 1.0 - p };
        }
        up.extend(row);
        weights.push(w);
    }
    Ok(StateSet {
        generators: gens.len(),
        up,
        weights,
        mode: StateMode::Exact,
        seed: None,
    })
}

/// Seeded stream of i.i.d. outage states.
pub struct StateSampler {
    rng: ChaCha8Rng,
    outage: Vec<f64>,
}

impl StateSampler {
    pub fn new(spec: &SystemSpec, seed: u64) -> Self {
        StateSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            outage: spec.generators().iter().map(|g| g.outage_prob).collect(),
        }
    }

    /// Appends `n` sampled rows to `out`.
    pub fn fill(&mut self, n: usize, out: &mut Vec<bool>) {
        out.reserve(n * self.outage.len());
        for _ in 0..n {
            for &p in &self.outage {
                let u: f64 = self.rng.random();
                out.push(u >= p);
            }
        }
    }
}

/// `n` Monte Carlo states with uniform weight `1/n`, reproducible from `seed`.
pub fn sample_states(spec: &SystemSpec, n: usize, seed: u64) -> Result<StateSet> {
    if n == 0 {
        return Err(Error::Instance("sample size must be at least 1".into()));
    }
    let mut up = Vec::new();
    StateSampler::new(spec, seed).fill(n, &mut up);
    Ok(StateSet {
        generators: spec.generators().len(),
        up,
        weights: vec![1.0 / n as f64; n],
        mode: StateMode::Sampled,
        seed: Some(seed),
    })
}
