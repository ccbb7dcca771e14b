//! Random layered binning codebook, enrollment and authentication.

use std::collections::BTreeMap;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{is_typical, SchemeModel};
use crate::error::{Error, Result};
use crate::probability::JointPmf;
use crate::region::AuxPair;

/// Bumped whenever the serialized codebook layout changes.
pub const CODEBOOK_VERSION: u32 = 1;

/// Largest number of `v` codewords a generated codebook may hold.
pub const MAX_CODEWORDS: f64 = 4_194_304.0;

/// Two log-likelihoods closer than this are a tie at enrollment.
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeParams {
    pub n: usize,
    pub delta: f64,
    pub eps: f64,
    pub aux: AuxPair,
    pub source: JointPmf,
    pub seed: u64,
}

/// `(J, |M1|, K, |M2|, |S|, |S'|)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSizes {
    pub j: usize,
    pub m1: usize,
    pub k: usize,
    pub m2: usize,
    pub s: usize,
    pub s_prime: usize,
}

/// Labels `(m2, s, s')` of one `v` codeword.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VLabel {
    pub m2: usize,
    pub s: usize,
    pub s_prime: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodeStatus {
    Typical,
    Fallback,
}

/// What enrollment produced for one source block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub j: usize,
    pub k: usize,
    pub m1: usize,
    pub m2: usize,
    pub s: usize,
    pub status: EncodeStatus,
}

/// Codewords the encoder picks from uniformly for one source block.
#[derive(Clone, Debug, PartialEq)]
pub struct EnrollChoice {
    pub candidates: Vec<(usize, usize)>,
    pub status: EncodeStatus,
}

/// `ceil(2^(n * rate))`, at least one. The small offset keeps exact powers
/// of two from rounding up.
fn size_from_rate(n: usize, rate: f64) -> Result<usize> {
    let exponent = n as f64 * rate;
    if exponent > 40.0 {
        return Err(Error::TooLarge {
            work: exponent.exp2(),
            guard: MAX_CODEWORDS,
        });
    }
    Ok(((exponent.exp2() - 1e-9).ceil() as usize).max(1))
}

impl CodeSizes {
    /// Sizes for blocklength `n` and slack `delta`; the flag reports a key
    /// rate that is negative before clipping.
    pub fn from_model(model: &SchemeModel, n: usize, delta: f64) -> Result<(CodeSizes, bool)> {
        let r = &model.rates;
        let key_rate = r.i_vy_given_u - r.i_vz_given_u - delta;
        let sizes = CodeSizes {
            j: size_from_rate(n, r.i_xu + delta)?,
            m1: size_from_rate(n, r.i_xu_given_y + 2.0 * delta)?,
            k: size_from_rate(n, r.i_xv_given_u + delta)?,
            m2: size_from_rate(n, r.i_xv_given_uy + 3.0 * delta)?,
            s: size_from_rate(n, key_rate)?,
            s_prime: size_from_rate(n, r.i_vz_given_u - delta)?,
        };
        Ok((sizes, key_rate < 0.0))
    }

    pub fn messages(&self) -> usize {
        self.m1 * self.m2
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
struct BinIndex {
    u_bins: Vec<Vec<usize>>,
    v_bins: Vec<BTreeMap<usize, Vec<usize>>>,
}

/// A realized random code. Immutable once built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCodebook")]
pub struct Codebook {
    pub version: u32,
    pub n: usize,
    pub eps: f64,
    pub seed: u64,
    pub sizes: CodeSizes,
    /// The key rate was negative before clipping `|S|` to one.
    pub degenerate_rates: bool,
    pub model: SchemeModel,
    pub u_seqs: Vec<Vec<usize>>,
    pub u_bins: Vec<usize>,
    pub v_seqs: Vec<Vec<Vec<usize>>>,
    pub v_labels: Vec<Vec<VLabel>>,
    #[serde(skip)]
    index: BinIndex,
}

#[derive(Deserialize)]
struct RawCodebook {
    version: u32,
    n: usize,
    eps: f64,
    seed: u64,
    sizes: CodeSizes,
    degenerate_rates: bool,
    model: SchemeModel,
    u_seqs: Vec<Vec<usize>>,
    u_bins: Vec<usize>,
    v_seqs: Vec<Vec<Vec<usize>>>,
    v_labels: Vec<Vec<VLabel>>,
}

impl TryFrom<RawCodebook> for Codebook {
    type Error = Error;

    fn try_from(r: RawCodebook) -> Result<Self> {
        if r.version != CODEBOOK_VERSION {
            return Err(Error::InvalidArgument(format!(
                "codebook version {} is not supported",
                r.version
            )));
        }
        let mut cb = Codebook::from_parts(r.model, r.n, r.eps, r.sizes, r.u_seqs, r.u_bins, r.v_seqs, r.v_labels)?;
        cb.seed = r.seed;
        cb.degenerate_rates = r.degenerate_rates;
        Ok(cb)
    }
}

fn sample_letters<R: Rng + ?Sized>(pmf: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    let dist = WeightedIndex::new(pmf).expect("rows are normalized");
    (0..n).map(|_| dist.sample(rng)).collect()
}

/// Draws the codebook: `u^n(j)` i.i.d. from `P(u)`, `v^n(j,k)` letterwise
/// from `P(v|u_i(j))`, and independent uniform bin, subbin and sub-subbin
/// labels.
pub fn generate_codebook(params: &CodeParams) -> Result<Codebook> {
    if params.n == 0 {
        return Err(Error::InvalidArgument("blocklength must be at least 1".into()));
    }
    if params.delta.is_nan() || params.delta < 0.0 || params.eps.is_nan() || params.eps <= 0.0 {
        return Err(Error::InvalidArgument("need delta >= 0 and eps > 0".into()));
    }
    let model = SchemeModel::new(&params.source, &params.aux)?;
    let (sizes, degenerate) = CodeSizes::from_model(&model, params.n, params.delta)?;
    let total = sizes.j as f64 * sizes.k as f64;
    if total > MAX_CODEWORDS {
        return Err(Error::TooLarge {
            work: total,
            guard: MAX_CODEWORDS,
        });
    }
    let n = params.n;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let v_rows: Vec<WeightedIndex<f64>> = model
        .v_given_u
        .chunks(model.nv)
        .map(|row| WeightedIndex::new(row).expect("rows are normalized"))
        .collect();
    let u_seqs: Vec<Vec<usize>> = (0..sizes.j).map(|_| sample_letters(&model.p_u, n, &mut rng)).collect();
    let u_bins: Vec<usize> = (0..sizes.j).map(|_| rng.random_range(0..sizes.m1)).collect();
    let mut v_seqs = Vec::with_capacity(sizes.j);
    let mut v_labels = Vec::with_capacity(sizes.j);
    for u in &u_seqs {
        let mut seqs = Vec::with_capacity(sizes.k);
        let mut labels = Vec::with_capacity(sizes.k);
        for _ in 0..sizes.k {
            seqs.push(u.iter().map(|&ui| v_rows[ui].sample(&mut rng)).collect());
            labels.push(VLabel {
                m2: rng.random_range(0..sizes.m2),
                s: rng.random_range(0..sizes.s),
                s_prime: rng.random_range(0..sizes.s_prime),
            });
        }
        v_seqs.push(seqs);
        v_labels.push(labels);
    }
    let mut cb = Codebook::from_parts(model, n, params.eps, sizes, u_seqs, u_bins, v_seqs, v_labels)?;
    cb.seed = params.seed;
    cb.degenerate_rates = degenerate;
    Ok(cb)
}

impl Codebook {
    /// Assembles a codebook from explicit parts, checking every shape and
    /// label range.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        model: SchemeModel,
        n: usize,
        eps: f64,
        sizes: CodeSizes,
        u_seqs: Vec<Vec<usize>>,
        u_bins: Vec<usize>,
        v_seqs: Vec<Vec<Vec<usize>>>,
        v_labels: Vec<Vec<VLabel>>,
    ) -> Result<Self> {
        let bad = |msg: &str| Err(Error::ShapeMismatch(msg.to_string()));
        if n == 0 || eps.is_nan() || eps <= 0.0 {
            return Err(Error::InvalidArgument("need n >= 1 and eps > 0".into()));
        }
        if [sizes.j, sizes.m1, sizes.k, sizes.m2, sizes.s, sizes.s_prime].contains(&0) {
            return bad("every size must be at least 1");
        }
        if u_seqs.len() != sizes.j || u_bins.len() != sizes.j || v_seqs.len() != sizes.j || v_labels.len() != sizes.j {
            return bad("expected J entries for every per-j table");
        }
        for j in 0..sizes.j {
            if u_seqs[j].len() != n {
                return bad("u sequence of wrong length");
            }
            model.check_sequence(&u_seqs[j], model.nu, "u")?;
            if u_bins[j] >= sizes.m1 {
                return bad("u bin label out of range");
            }
            if v_seqs[j].len() != sizes.k || v_labels[j].len() != sizes.k {
                return bad("expected K v codewords per j");
            }
            for (seq, label) in v_seqs[j].iter().zip(&v_labels[j]) {
                if seq.len() != n {
                    return bad("v sequence of wrong length");
                }
                model.check_sequence(seq, model.nv, "v")?;
                if label.m2 >= sizes.m2 || label.s >= sizes.s || label.s_prime >= sizes.s_prime {
                    return bad("v label out of range");
                }
            }
        }
        let mut index = BinIndex {
            u_bins: vec![Vec::new(); sizes.m1],
            v_bins: vec![BTreeMap::new(); sizes.j],
        };
        for (j, &m1) in u_bins.iter().enumerate() {
            index.u_bins[m1].push(j);
            for (k, label) in v_labels[j].iter().enumerate() {
                index.v_bins[j].entry(label.m2).or_default().push(k);
            }
        }
        Ok(Codebook {
            version: CODEBOOK_VERSION,
            n,
            eps,
            seed: 0,
            sizes,
            degenerate_rates: false,
            model,
            u_seqs,
            u_bins,
            v_seqs,
            v_labels,
            index,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("codebook serializes")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    fn enroll_typical(&self, x: &[usize], j: usize, k: usize) -> bool {
        let m = &self.model;
        let (u, v) = (&self.u_seqs[j], &self.v_seqs[j][k]);
        is_typical(
            &m.p_xuv,
            self.eps,
            self.n,
            (0..self.n).map(|i| (x[i] * m.nu + u[i]) * m.nv + v[i]),
        )
    }

    fn log_likelihood(&self, x: &[usize], j: usize, k: usize) -> f64 {
        let m = &self.model;
        let (u, v) = (&self.u_seqs[j], &self.v_seqs[j][k]);
        let w = m.nu * m.nv;
        (0..self.n)
            .map(|i| m.uv_given_x[x[i] * w + u[i] * m.nv + v[i]].log2())
            .sum()
    }

    /// The set the encoder draws from uniformly: all jointly typical
    /// codeword pairs, or when there are none, the pairs of maximal
    /// likelihood `prod P(u_i, v_i | x_i)`.
    pub fn enroll_distribution(&self, x: &[usize]) -> Result<EnrollChoice> {
        if x.len() != self.n {
            return Err(Error::InvalidArgument("source block has the wrong length".into()));
        }
        self.model.check_sequence(x, self.model.nx, "x")?;
        let mut candidates = Vec::new();
        for j in 0..self.sizes.j {
            for k in 0..self.sizes.k {
                if self.enroll_typical(x, j, k) {
                    candidates.push((j, k));
                }
            }
        }
        if !candidates.is_empty() {
            return Ok(EnrollChoice {
                candidates,
                status: EncodeStatus::Typical,
            });
        }
        let mut best = f64::NEG_INFINITY;
        for j in 0..self.sizes.j {
            for k in 0..self.sizes.k {
                let ll = self.log_likelihood(x, j, k);
                let tie = ll == best || (ll - best).abs() <= TIE_TOL;
                if candidates.is_empty() || (ll > best && !tie) {
                    best = ll;
                    candidates.clear();
                    candidates.push((j, k));
                } else if tie {
                    candidates.push((j, k));
                }
            }
        }
        Ok(EnrollChoice {
            candidates,
            status: EncodeStatus::Fallback,
        })
    }

    pub fn transcript(&self, j: usize, k: usize, status: EncodeStatus) -> Transcript {
        let label = self.v_labels[j][k];
        Transcript {
            j,
            k,
            m1: self.u_bins[j],
            m2: label.m2,
            s: label.s,
            status,
        }
    }

    /// Enrolls `x`, breaking ties among candidates uniformly with `rng`.
    pub fn enroll<R: Rng + ?Sized>(&self, x: &[usize], rng: &mut R) -> Result<Transcript> {
        let choice = self.enroll_distribution(x)?;
        let (j, k) = choice.candidates[rng.random_range(0..choice.candidates.len())];
        Ok(self.transcript(j, k, choice.status))
    }

    /// Key estimate from the public labels and an authentication block, or
    /// `None` (reject) when either decoding stage finds zero or several
    /// typical candidates. Out-of-range labels are rejected.
    pub fn authenticate(&self, m1: usize, m2: usize, y: &[usize]) -> Option<usize> {
        if m1 >= self.sizes.m1 || m2 >= self.sizes.m2 || y.len() != self.n {
            return None;
        }
        if y.iter().any(|&a| a >= self.model.ny) {
            return None;
        }
        let m = &self.model;
        let mut found_j = None;
        for &j in &self.index.u_bins[m1] {
            let u = &self.u_seqs[j];
            if is_typical(&m.p_uy, self.eps, self.n, (0..self.n).map(|i| u[i] * m.ny + y[i])) {
                if found_j.is_some() {
                    return None;
                }
                found_j = Some(j);
            }
        }
        let j = found_j?;
        let u = &self.u_seqs[j];
        let mut found_k = None;
        for &k in self.index.v_bins[j].get(&m2)? {
            let v = &self.v_seqs[j][k];
            let letters = (0..self.n).map(|i| (u[i] * m.nv + v[i]) * m.ny + y[i]);
            if is_typical(&m.p_uvy, self.eps, self.n, letters) {
                if found_k.is_some() {
                    return None;
                }
                found_k = Some(k);
            }
        }
        found_k.map(|k| self.v_labels[j][k].s)
    }

    /// Codewords carrying public labels `(m1, m2)`.
    pub fn codewords_in(&self, m1: usize, m2: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        if m1 >= self.sizes.m1 {
            return out;
        }
        for &j in &self.index.u_bins[m1] {
            if let Some(ks) = self.index.v_bins[j].get(&m2) {
                out.extend(ks.iter().map(|&k| (j, k)));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binary::{bsc_test_channel, build_source};
    use crate::probability::{Alphabet, Channel};

    fn noiseless_source() -> JointPmf {
        JointPmf::new(
            vec![Alphabet::new("x", 2), Alphabet::new("y", 2), Alphabet::new("z", 1)],
            vec![0.5, 0.0, 0.0, 0.5],
        )
        .unwrap()
    }

    fn params(n: usize, delta: f64, seed: u64) -> CodeParams {
        CodeParams {
            n,
            delta,
            eps: 0.5,
            aux: AuxPair::with_constant_u(bsc_test_channel(0.2).unwrap()),
            source: build_source(0.3, 0.5).unwrap(),
            seed,
        }
    }

    #[test]
    fn sizes_are_positive_and_labels_cover_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let aux = AuxPair::random(2, 2, 2, &mut rng);
        let p = CodeParams {
            aux,
            ..params(1, 1.0, 1)
        };
        let cb = generate_codebook(&p).unwrap();
        let s = cb.sizes;
        assert!([s.j, s.m1, s.k, s.m2, s.s, s.s_prime].iter().all(|&v| v >= 1));
        assert!(cb.v_labels.iter().all(|l| l.len() == s.k));
    }

    #[test]
    fn degenerate_key_rate_is_flagged() {
        // BSC(0.2) on the cascade: key rate 0.097 < delta = 0.15
        let cb = generate_codebook(&params(4, 0.15, 9)).unwrap();
        assert!(cb.degenerate_rates);
        assert_eq!(cb.sizes.s, 1);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_codebook(&params(4, 0.1, 42)).unwrap();
        let b = generate_codebook(&params(4, 0.1, 42)).unwrap();
        assert_eq!(a, b);
        let c = generate_codebook(&params(4, 0.1, 43)).unwrap();
        assert_ne!(a.v_seqs, c.v_seqs);
    }

    #[test]
    fn json_roundtrip_rebuilds_index() {
        let a = generate_codebook(&params(3, 0.2, 5)).unwrap();
        let b = Codebook::from_json(&a.to_json()).unwrap();
        assert_eq!(a, b);
    }

    fn identity_codebook(words: Vec<Vec<usize>>, labels: Vec<VLabel>, eps: f64) -> Codebook {
        let aux = AuxPair::identity(2);
        let model = SchemeModel::new(&noiseless_source(), &aux).unwrap();
        let n = words[0].len();
        let k = words.len();
        let sizes = CodeSizes {
            j: 1,
            m1: 1,
            k,
            m2: labels.iter().map(|l| l.m2).max().unwrap() + 1,
            s: labels.iter().map(|l| l.s).max().unwrap() + 1,
            s_prime: 1,
        };
        Codebook::from_parts(model, n, eps, sizes, vec![vec![0; n]], vec![0], vec![words], vec![labels]).unwrap()
    }

    #[test]
    fn exact_match_is_enrolled_and_decoded() {
        let words = vec![vec![0, 1, 1, 0], vec![1, 1, 1, 1], vec![1, 0, 0, 1]];
        let labels = vec![
            VLabel { m2: 0, s: 0, s_prime: 0 },
            VLabel { m2: 1, s: 1, s_prime: 0 },
            VLabel { m2: 2, s: 1, s_prime: 0 },
        ];
        let cb = identity_codebook(words, labels, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = cb.enroll(&[1, 0, 0, 1], &mut rng).unwrap();
        assert_eq!((t.j, t.k, t.status), (0, 2, EncodeStatus::Typical));
        // Y = X
        assert_eq!(cb.authenticate(t.m1, t.m2, &[1, 0, 0, 1]), Some(1));
        // empty bin
        assert_eq!(cb.authenticate(0, 1, &[1, 0, 0, 1]), None);
    }

    #[test]
    fn ties_are_split_uniformly() {
        let words = vec![vec![0, 1, 1, 0], vec![0, 1, 1, 0]];
        let labels = vec![
            VLabel { m2: 0, s: 0, s_prime: 0 },
            VLabel { m2: 1, s: 1, s_prime: 0 },
        ];
        let cb = identity_codebook(words, labels, 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let trials = 10_000;
        let hits = (0..trials)
            .filter(|_| cb.enroll(&[0, 1, 1, 0], &mut rng).unwrap().k == 0)
            .count();
        let sigma = (0.25 / trials as f64).sqrt();
        assert!((hits as f64 / trials as f64 - 0.5).abs() <= 3.0 * sigma, "{}", hits);
    }

    #[test]
    fn noiseless_round_trip() {
        for n in [2, 3, 4] {
            let cb = generate_codebook(&CodeParams {
                n,
                delta: 1.5,
                eps: 1.0,
                aux: AuxPair::identity(2),
                source: noiseless_source(),
                seed: n as u64,
            })
            .unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            for xi in 0..1usize << n {
                let x: Vec<usize> = (0..n).map(|i| (xi >> i) & 1).collect();
                let t = cb.enroll(&x, &mut rng).unwrap();
                // U is constant, so decoding needs j alone in its bin
                if t.status == EncodeStatus::Typical && cb.index.u_bins[t.m1].len() == 1 {
                    assert_eq!(cb.authenticate(t.m1, t.m2, &x), Some(t.s));
                }
            }
        }
    }

    #[test]
    fn no_typical_pair_falls_back() {
        let words = vec![vec![1, 1, 1, 1]];
        let labels = vec![VLabel { m2: 0, s: 0, s_prime: 0 }];
        let cb = identity_codebook(words, labels, 0.1);
        let choice = cb.enroll_distribution(&[0, 0, 1, 1]).unwrap();
        assert_eq!(choice.status, EncodeStatus::Fallback);
        assert_eq!(choice.candidates, vec![(0, 0)]);
    }

    #[test]
    fn two_typical_u_candidates_reject() {
        // U = X so the first stage checks (u, y) typicality
        let aux = AuxPair::new(
            Channel::identity(Alphabet::new("x", 2), "v"),
            Channel::identity(Alphabet::new("v", 2), "u"),
        )
        .unwrap();
        let model = SchemeModel::new(&noiseless_source(), &aux).unwrap();
        let u = vec![0, 1];
        let sizes = CodeSizes { j: 2, m1: 1, k: 1, m2: 1, s: 1, s_prime: 1 };
        let label = VLabel { m2: 0, s: 0, s_prime: 0 };
        let cb = Codebook::from_parts(
            model,
            2,
            0.5,
            sizes,
            vec![u.clone(), u.clone()],
            vec![0, 0],
            vec![vec![u.clone()], vec![u.clone()]],
            vec![vec![label], vec![label]],
        )
        .unwrap();
        assert_eq!(cb.authenticate(0, 0, &u), None);
    }

    #[test]
    fn from_parts_rejects_bad_labels() {
        let aux = AuxPair::identity(2);
        let model = SchemeModel::new(&noiseless_source(), &aux).unwrap();
        let sizes = CodeSizes { j: 1, m1: 1, k: 1, m2: 1, s: 1, s_prime: 1 };
        let r = Codebook::from_parts(
            model,
            2,
            0.5,
            sizes,
            vec![vec![0, 0]],
            vec![0],
            vec![vec![vec![0, 1]]],
            vec![vec![VLabel { m2: 3, s: 0, s_prime: 0 }]],
        );
        assert!(matches!(r, Err(Error::ShapeMismatch(_))));
    }
}
