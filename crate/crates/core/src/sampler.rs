//! Finite-shot measurement records drawn from an [`OutcomeModel`].
//!
//! Each record is reproducible from `(seed, stream)`: the generator is a
//! ChaCha stream cipher keyed by the seed, and independent repetitions use
//! distinct stream numbers rather than reseeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::OutcomeModel;
use crate::scalar::Real;

/// Largest tolerated deviation of `sum p_k` from one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Counts of syndrome classes and string outcomes over `m` shots.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentData {
    /// Class labels, aligned with the count vectors.
    pub k: Vec<usize>,
    pub counts_k: Vec<u64>,
    pub counts_plus: Vec<u64>,
    pub counts_minus: Vec<u64>,
    pub m: u64,
    pub seed: u64,
    pub stream: u64,
}

impl ExperimentData {
    /// Checks the count identities.
    pub fn is_consistent(&self) -> bool {
        let len = self.k.len();
        self.counts_k.len() == len
            && self.counts_plus.len() == len
            && self.counts_minus.len() == len
            && self.counts_k.iter().sum::<u64>() == self.m
            && (0..len).all(|i| self.counts_plus[i] + self.counts_minus[i] == self.counts_k[i])
    }
}

/// Seeded generator for repetition `stream`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `m` shots of the protocol on stream 0 of `seed`.
pub fn sample_experiment<T: Real>(model: &OutcomeModel<T>, m: u64, seed: u64) -> Result<ExperimentData> {
    sample_experiment_stream(model, m, seed, 0)
}

/// `m` shots: the class by inverse-CDF sampling of `p`, then the string
/// outcome with probability `q_plus[k]`.
pub fn sample_experiment_stream<T: Real>(model: &OutcomeModel<T>, m: u64, seed: u64, stream: u64) -> Result<ExperimentData> {
    if m == 0 {
        return Err(Error::InvalidConfig("at least one shot is required".into()));
    }
    model.validate(T::lit(NORMALIZATION_TOLERANCE))?;
    let p: Vec<f64> = model.p.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
    let q: Vec<f64> = model.q_plus.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
    let mut cdf = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    for &x in &p {
        acc += x;
        cdf.push(acc);
    }
    // rounding can leave the last cumulative value just below a draw
    let last = p.iter().rposition(|&x| x > 0.0).unwrap_or(0);

    let len = p.len();
    let mut data = ExperimentData {
        k: model.k.clone(),
        counts_k: vec![0; len],
        counts_plus: vec![0; len],
        counts_minus: vec![0; len],
        m,
        seed,
        stream,
    };
    let mut rng = stream_rng(seed, stream);
    for _ in 0..m {
        let u: f64 = rng.random();
        let i = cdf.iter().position(|&c| u < c).unwrap_or(last).min(last);
        data.counts_k[i] += 1;
        if rng.random::<f64>() < q[i] {
            data.counts_plus[i] += 1;
        } else {
            data.counts_minus[i] += 1;
        }
    }
    Ok(data)
}
