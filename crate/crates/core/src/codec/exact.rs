//! Exact finite-n metrics by enumeration of every source block, every
//! authentication block and every adversary observation.

use std::collections::{BTreeMap, BTreeSet};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::codebook::{generate_codebook, CodeParams, CodeSizes, Codebook, EncodeStatus};
use crate::error::{Error, Result};
use crate::info::entropy_of;
use crate::probability::JointPmf;
use crate::region::AuxPair;

/// Largest enumeration [`exact_metrics`] will attempt.
pub const EXACT_GUARD: f64 = 1e7;

/// Exact performance of one codebook. Rates are in bits per symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub frp: f64,
    pub src_leak: f64,
    pub key_leak: f64,
    pub key_rate: f64,
    pub mfap: f64,
    /// `None` when no key is reachable by any adversary (`mfap = 0`).
    pub mfap_exponent: Option<f64>,
    pub pr_c0: f64,
    /// Probability that enrollment found no typical codeword pair.
    pub fallback_rate: f64,
}

/// Everything the exact pass computes, kept for adversary replay.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactAnalysis {
    pub metrics: Metrics,
    /// Message index `m1 * |M2| + m2` of every message with positive
    /// probability.
    pub messages: Vec<usize>,
    /// Per message, the decoder output for every `y^n` (lexicographic index).
    pub decode: BTreeMap<usize, Vec<Option<usize>>>,
    /// Per message, the keys some `y^n` decodes to.
    pub reachable: BTreeMap<usize, BTreeSet<usize>>,
    /// `P(M=m, S=s, Z^n=z^n)` as a vector over `z^n`.
    pub joint: BTreeMap<(usize, usize), Vec<f64>>,
    /// Per message, the MAP adversary's `y^n` index for every `z^n`, or
    /// `None` when no key is reachable.
    pub strategy: BTreeMap<usize, Vec<Option<usize>>>,
}

/// Letters of sequence number `index` over an alphabet of size `q`, first
/// letter most significant.
pub(crate) fn sequence(index: usize, q: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    let mut rest = index;
    for slot in out.iter_mut().rev() {
        *slot = rest % q;
        rest /= q;
    }
    out
}

pub(crate) fn sequence_index(seq: &[usize], q: usize) -> usize {
    seq.iter().fold(0, |acc, &a| acc * q + a)
}

/// `prod_i rows[x_i]` laid out like [`sequence`].
fn product_law(rows: &[f64], width: usize, x: &[usize]) -> Vec<f64> {
    let mut out = vec![1.0];
    for &xi in x {
        let row = &rows[xi * width..(xi + 1) * width];
        out = out.iter().flat_map(|&a| row.iter().map(move |&b| a * b)).collect();
    }
    out
}

/// Elementary evaluations the exact pass needs for this codebook.
pub fn exact_work(cb: &Codebook) -> f64 {
    let m = &cb.model;
    let n = cb.n as i32;
    let xs = (m.nx as f64).powi(n);
    let ys = (m.ny as f64).powi(n);
    let zs = (m.nz as f64).powi(n);
    let jk = cb.sizes.j as f64 * cb.sizes.k as f64;
    let msgs = (cb.sizes.m1 as f64 * cb.sizes.m2 as f64).min(jk);
    xs * jk + xs * (ys + zs) + msgs * ys
}

struct Enrolled {
    px: f64,
    status: EncodeStatus,
    /// `(m, s)` per candidate codeword, each drawn with equal probability.
    labels: Vec<(usize, usize)>,
}

pub fn exact_metrics(cb: &Codebook) -> Result<Metrics> {
    Ok(exact_analysis(cb)?.metrics)
}

pub fn exact_analysis(cb: &Codebook) -> Result<ExactAnalysis> {
    let work = exact_work(cb);
    if work > EXACT_GUARD {
        return Err(Error::TooLarge {
            work,
            guard: EXACT_GUARD,
        });
    }
    let model = &cb.model;
    let n = cb.n;
    let CodeSizes { m2: size_m2, .. } = cb.sizes;
    let x_count = model.nx.pow(n as u32);
    let y_count = model.ny.pow(n as u32);
    let z_count = model.nz.pow(n as u32);

    let enrolled: Vec<Enrolled> = (0..x_count)
        .into_par_iter()
        .map(|xi| {
            let x = sequence(xi, model.nx, n);
            let choice = cb.enroll_distribution(&x)?;
            let labels = choice
                .candidates
                .iter()
                .map(|&(j, k)| {
                    let t = cb.transcript(j, k, choice.status);
                    (t.m1 * size_m2 + t.m2, t.s)
                })
                .collect();
            Ok(Enrolled {
                px: x.iter().map(|&a| model.p_x[a]).product(),
                status: choice.status,
                labels,
            })
        })
        .collect::<Result<_>>()?;

    let messages: Vec<usize> = enrolled
        .iter()
        .filter(|e| e.px > 0.0)
        .flat_map(|e| e.labels.iter().map(|&(m, _)| m))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let tables: Vec<Vec<Option<usize>>> = messages
        .par_iter()
        .map(|&m| {
            (0..y_count)
                .map(|yi| cb.authenticate(m / size_m2, m % size_m2, &sequence(yi, model.ny, n)))
                .collect()
        })
        .collect();
    let decode: BTreeMap<usize, Vec<Option<usize>>> = messages.iter().copied().zip(tables).collect();
    let reachable: BTreeMap<usize, BTreeSet<usize>> = decode
        .iter()
        .map(|(&m, t)| (m, t.iter().flatten().copied().collect()))
        .collect();

    let mut frp = 0.0;
    let mut pr_c0 = 0.0;
    let mut fallback_rate = 0.0;
    let mut cond_entropy = 0.0;
    let mut joint: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for (xi, e) in enrolled.iter().enumerate() {
        if e.px == 0.0 {
            continue;
        }
        let x = sequence(xi, model.nx, n);
        let py = product_law(&model.y_given_x, model.ny, &x);
        let pz = product_law(&model.z_given_x, model.nz, &x);
        let share = 1.0 / e.labels.len() as f64;
        let w = e.px * share;
        if e.status == EncodeStatus::Fallback {
            fallback_rate += e.px;
        }
        let mut m_law: BTreeMap<usize, f64> = BTreeMap::new();
        for &(m, s) in &e.labels {
            let table = &decode[&m];
            let acc: f64 = py
                .iter()
                .zip(table)
                .filter(|(_, d)| **d == Some(s))
                .map(|(p, _)| p)
                .sum();
            let term = w * (1.0 - acc).max(0.0);
            frp += term;
            if !reachable[&m].contains(&s) {
                pr_c0 += term;
            }
            *m_law.entry(m).or_insert(0.0) += share;
            let row = joint.entry((m, s)).or_insert_with(|| vec![0.0; z_count]);
            for (slot, p) in row.iter_mut().zip(&pz) {
                *slot += w * p;
            }
        }
        let m_law: Vec<f64> = m_law.into_values().collect();
        cond_entropy += e.px * (entropy_of(&m_law) + entropy_of(&pz));
    }

    let mut p_mz: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut p_s: BTreeMap<usize, f64> = BTreeMap::new();
    for (&(m, s), row) in &joint {
        let acc = p_mz.entry(m).or_insert_with(|| vec![0.0; z_count]);
        for (a, p) in acc.iter_mut().zip(row) {
            *a += p;
        }
        *p_s.entry(s).or_insert(0.0) += row.iter().sum::<f64>();
    }
    let h_mz = entropy_of(&p_mz.values().flatten().copied().collect::<Vec<_>>());
    let h_smz = entropy_of(&joint.values().flatten().copied().collect::<Vec<_>>());
    let h_s = entropy_of(&p_s.values().copied().collect::<Vec<_>>());
    let nf = n as f64;

    let mut mfap = 0.0;
    let mut strategy = BTreeMap::new();
    for &m in &messages {
        let keys = &reachable[&m];
        let mut row = Vec::with_capacity(z_count);
        for zi in 0..z_count {
            let mut best: Option<(usize, f64)> = None;
            for &s in keys {
                let p = joint.get(&(m, s)).map_or(0.0, |r| r[zi]);
                if best.is_none_or(|(_, b)| p > b) {
                    best = Some((s, p));
                }
            }
            row.push(best.map(|(s, p)| {
                mfap += p;
                decode[&m].iter().position(|d| *d == Some(s)).expect("key is reachable")
            }));
        }
        strategy.insert(m, row);
    }

    let metrics = Metrics {
        frp: frp.min(1.0),
        src_leak: ((h_mz - cond_entropy) / nf).max(0.0),
        key_leak: ((h_s + h_mz - h_smz) / nf).max(0.0),
        key_rate: h_s / nf,
        mfap: mfap.min(1.0),
        mfap_exponent: (mfap > 0.0).then(|| (-mfap.min(1.0).log2() / nf).max(0.0)),
        pr_c0: pr_c0.min(1.0),
        fallback_rate: fallback_rate.min(1.0),
    };
    Ok(ExactAnalysis {
        metrics,
        messages,
        decode,
        reachable,
        joint,
        strategy,
    })
}

/// One row of [`exponent_sweep`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub seed: u64,
    pub sizes: CodeSizes,
    pub degenerate_rates: bool,
    pub metrics: Metrics,
}

/// Exact metrics of a fresh codebook for every blocklength in `ns`. The
/// codebook seed for blocklength `n` is the first word of stream `n` of a
/// generator seeded with `seed`.
pub fn exponent_sweep(
    source: &JointPmf,
    aux: &AuxPair,
    ns: &[usize],
    delta: f64,
    eps: f64,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    ns.iter()
        .map(|&n| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(n as u64);
            let params = CodeParams {
                n,
                delta,
                eps,
                aux: aux.clone(),
                source: source.clone(),
                seed: rng.next_u64(),
            };
            let cb = generate_codebook(&params)?;
            let metrics = exact_metrics(&cb)?;
            Ok(SweepRow {
                n,
                seed: params.seed,
                sizes: cb.sizes,
                degenerate_rates: cb.degenerate_rates,
                metrics,
            })
        })
        .collect()
}
