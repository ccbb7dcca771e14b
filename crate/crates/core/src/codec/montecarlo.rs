//! Sampled false rejection and false acceptance rates for blocklengths past
//! the exact guard.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::codebook::{Codebook, EncodeStatus};
use super::exact::{exact_analysis, sequence, sequence_index, ExactAnalysis};
use crate::error::{Error, Result};

/// Trials per independent random stream.
pub const MC_BLOCK: u64 = 4096;

/// Normal quantile of a two-sided 95% interval.
const Z95: f64 = 1.959963984540054;

/// Resampling budget of the likelihood adversary.
const RESAMPLES: usize = 32;

/// A binomial proportion with its 95% Wilson interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub successes: u64,
    pub trials: u64,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    /// Half-width of the interval.
    pub radius: f64,
}

pub fn wilson(successes: u64, trials: u64) -> Estimate {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let radius = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Estimate {
        successes,
        trials,
        value: p,
        lower: (center - radius).max(0.0),
        upper: (center + radius).min(1.0),
        radius,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adversary {
    /// The exact MAP strategy table; its acceptance rate estimates `mfap`.
    ExactMap,
    /// Most likely codeword given `z^n`, then a sampled `y^n` that decodes
    /// to its key. Gives a lower bound on `mfap`.
    CodewordLikelihood,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McMetrics {
    pub trials: u64,
    pub frp: Estimate,
    /// Acceptance rate of the adversary below, a lower bound on `mfap`.
    pub fap: Estimate,
    pub adversary: Adversary,
    pub fallback_rate: f64,
    /// Not estimated from samples.
    pub src_leak: Option<f64>,
    pub key_leak: Option<f64>,
}

#[derive(Default, Clone, Copy)]
struct Counts {
    rejects: u64,
    accepts: u64,
    fallbacks: u64,
}

struct Sampler<'a> {
    cb: &'a Codebook,
    x: WeightedIndex<f64>,
    y_given_x: Vec<WeightedIndex<f64>>,
    z_given_x: Vec<WeightedIndex<f64>>,
    y_given_uv: Vec<WeightedIndex<f64>>,
    exact: Option<ExactAnalysis>,
}

fn rows(flat: &[f64], width: usize) -> Vec<WeightedIndex<f64>> {
    flat.chunks(width)
        .map(|r| WeightedIndex::new(r).expect("rows are normalized"))
        .collect()
}

impl Sampler<'_> {
    fn letters<R: Rng>(&self, table: &[WeightedIndex<f64>], x: &[usize], rng: &mut R) -> Vec<usize> {
        x.iter().map(|&a| table[a].sample(rng)).collect()
    }

    fn attack<R: Rng>(&self, m1: usize, m2: usize, z: &[usize], rng: &mut R) -> Option<usize> {
        let cb = self.cb;
        let model = &cb.model;
        if let Some(exact) = &self.exact {
            let m = m1 * cb.sizes.m2 + m2;
            let zi = sequence_index(z, model.nz);
            let yi = exact.strategy.get(&m)?[zi]?;
            return cb.authenticate(m1, m2, &sequence(yi, model.ny, cb.n));
        }
        let mut best: Option<((usize, usize), f64)> = None;
        for (j, k) in cb.codewords_in(m1, m2) {
            let (u, v) = (&cb.u_seqs[j], &cb.v_seqs[j][k]);
            let ll: f64 = (0..cb.n)
                .map(|i| model.z_given_uv[(u[i] * model.nv + v[i]) * model.nz + z[i]].log2())
                .sum();
            if best.is_none_or(|(_, b)| ll > b) {
                best = Some(((j, k), ll));
            }
        }
        let ((j, k), _) = best?;
        let target = cb.v_labels[j][k].s;
        let uv: Vec<usize> = (0..cb.n)
            .map(|i| cb.u_seqs[j][i] * model.nv + cb.v_seqs[j][k][i])
            .collect();
        let mut guess = None;
        for _ in 0..RESAMPLES {
            let y = self.letters(&self.y_given_uv, &uv, rng);
            guess = cb.authenticate(m1, m2, &y);
            if guess == Some(target) {
                break;
            }
        }
        guess
    }

    fn run_block(&self, seed: u64, block: u64, trials: u64) -> Result<Counts> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(block);
        let mut c = Counts::default();
        let n = self.cb.n;
        for _ in 0..trials {
            let x: Vec<usize> = (0..n).map(|_| self.x.sample(&mut rng)).collect();
            let t = self.cb.enroll(&x, &mut rng)?;
            if t.status == EncodeStatus::Fallback {
                c.fallbacks += 1;
            }
            let y = self.letters(&self.y_given_x, &x, &mut rng);
            if self.cb.authenticate(t.m1, t.m2, &y) != Some(t.s) {
                c.rejects += 1;
            }
            let z = self.letters(&self.z_given_x, &x, &mut rng);
            if self.attack(t.m1, t.m2, &z, &mut rng) == Some(t.s) {
                c.accepts += 1;
            }
        }
        Ok(c)
    }
}

/// Simulates `trials` enrollments with one genuine and one adversarial
/// authentication each. Blocks of [`MC_BLOCK`] trials use stream `b` of a
/// generator seeded from the codebook seed, so results do not depend on
/// thread count.
pub fn monte_carlo_metrics(cb: &Codebook, trials: u64) -> Result<McMetrics> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let model = &cb.model;
    let exact = match exact_analysis(cb) {
        Ok(a) => Some(a),
        Err(Error::TooLarge { .. }) => None,
        Err(e) => return Err(e),
    };
    let sampler = Sampler {
        cb,
        x: WeightedIndex::new(&model.p_x).expect("source marginal is normalized"),
        y_given_x: rows(&model.y_given_x, model.ny),
        z_given_x: rows(&model.z_given_x, model.nz),
        y_given_uv: rows(&model.y_given_uv, model.ny),
        exact,
    };
    let blocks = trials.div_ceil(MC_BLOCK);
    let counts = (0..blocks)
        .into_par_iter()
        .map(|b| sampler.run_block(cb.seed, b, MC_BLOCK.min(trials - b * MC_BLOCK)))
        .collect::<Result<Vec<_>>>()?;
    let total = counts.iter().fold(Counts::default(), |a, c| Counts {
        rejects: a.rejects + c.rejects,
        accepts: a.accepts + c.accepts,
        fallbacks: a.fallbacks + c.fallbacks,
    });
    Ok(McMetrics {
        trials,
        frp: wilson(total.rejects, trials),
        fap: wilson(total.accepts, trials),
        adversary: if sampler.exact.is_some() {
            Adversary::ExactMap
        } else {
            Adversary::CodewordLikelihood
        },
        fallback_rate: total.fallbacks as f64 / trials as f64,
        src_leak: None,
        key_leak: None,
    })
}
