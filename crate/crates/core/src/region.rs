//! Single-letter rate regions and their boundary search.
//!
//! For a source `P(x,y,z)` and an auxiliary pair `(P(v|x), P(u|v))` the
//! achievable triples are bounded by
//!
//! ```text
//! R >= I(X;V|Y)
//! L >= I(X;V,Y) - I(X;Y|U) + I(X;Z|U)
//! E <= I(V;Y|U) - I(V;Z|U)
//! ```
//!
//! where the third coordinate is either the exponent of the maximum false
//! acceptance probability or the secret key rate; both regions share the
//! same expressions. The boundary is traced with a multi-start local search
//! over channel rows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::{cond_mutual_info, entropy_of, mutual_info, Bits};
use crate::probability::{compose, Alphabet, Channel, JointPmf};

/// Slack allowed on rate and leakage caps.
pub const CAP_TOL: f64 = 1e-9;

/// Tolerance on `I(X;Z|Y)` for a source to count as degraded.
pub const DEGRADED_TOL: f64 = 1e-9;

/// Largest `|U|` that can be required for an `|X|`-ary source.
pub fn u_bound(x_size: usize) -> usize {
    x_size + 3
}

/// Largest `|V|` that can be required for an `|X|`-ary source.
pub fn v_bound(x_size: usize) -> usize {
    (x_size + 3) * (x_size + 2)
}

/// Test channels `P(v|x)` and `P(u|v)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxPair {
    pub vx: Channel,
    pub uv: Channel,
}

impl AuxPair {
    pub fn new(vx: Channel, uv: Channel) -> Result<Self> {
        if vx.output().size != uv.input().size {
            return Err(Error::ShapeMismatch(format!(
                "vx outputs {} letters, uv expects {}",
                vx.output().size,
                uv.input().size
            )));
        }
        Ok(AuxPair {
            vx: vx.renamed("x", "v"),
            uv: uv.renamed("v", "u"),
        })
    }

    /// `V` and `U` both constant.
    pub fn constant(x_size: usize) -> Self {
        AuxPair {
            vx: Channel::constant(Alphabet::new("x", x_size), "v"),
            uv: Channel::constant(Alphabet::new("v", 1), "u"),
        }
    }

    /// The given `P(v|x)` with `U` constant.
    pub fn with_constant_u(vx: Channel) -> Self {
        let v = vx.output().size;
        AuxPair {
            vx: vx.renamed("x", "v"),
            uv: Channel::constant(Alphabet::new("v", v), "u"),
        }
    }

    /// `V = X`, `U` constant.
    pub fn identity(x_size: usize) -> Self {
        AuxPair::with_constant_u(Channel::identity(Alphabet::new("x", x_size), "v"))
    }

    /// Dirichlet(1) rows for both channels.
    pub fn random<R: Rng + ?Sized>(x_size: usize, v_size: usize, u_size: usize, rng: &mut R) -> Self {
        let vx = Channel::random(Alphabet::new("x", x_size), Alphabet::new("v", v_size), rng);
        let uv = Channel::random(Alphabet::new("v", v_size), Alphabet::new("u", u_size), rng);
        AuxPair { vx, uv }
    }

    pub fn x_size(&self) -> usize {
        self.vx.input().size
    }

    pub fn v_size(&self) -> usize {
        self.vx.output().size
    }

    pub fn u_size(&self) -> usize {
        self.uv.output().size
    }

    /// Rejects alphabets larger than the cardinality bounds.
    pub fn check_cardinality(&self) -> Result<()> {
        let x = self.x_size();
        if self.u_size() > u_bound(x) {
            return Err(Error::CardinalityExceeded {
                axis: "u".into(),
                size: self.u_size(),
                bound: u_bound(x),
            });
        }
        if self.v_size() > v_bound(x) {
            return Err(Error::CardinalityExceeded {
                axis: "v".into(),
                size: self.v_size(),
                bound: v_bound(x),
            });
        }
        Ok(())
    }

    /// The composed joint over `[u, v, x, y, z]`.
    pub fn compose(&self, source: &JointPmf) -> Result<JointPmf> {
        compose(source, &self.vx, &self.uv)
    }
}

/// One evaluated point `(R, L, third)` with the auxiliary pair behind it.
///
/// `third` is the exponent for the authentication region and the key rate
/// for the key generation region. It is kept raw and may be negative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint {
    pub rate: Bits,
    pub leakage: Bits,
    pub third: Bits,
    pub aux: AuxPair,
    /// Restart that produced the point, when it came out of a search.
    pub restart_id: Option<usize>,
}

impl RegionPoint {
    pub fn triple(&self) -> (Bits, Bits, Bits) {
        (self.rate, self.leakage, self.third)
    }
}

fn check_source(source: &JointPmf) -> Result<()> {
    for name in ["x", "y", "z"] {
        source.axis(name)?;
    }
    Ok(())
}

fn evaluate_triple(source: &JointPmf, aux: &AuxPair) -> Result<RegionPoint> {
    check_source(source)?;
    let j = aux.compose(source)?;
    let rate = cond_mutual_info(&j, &["x"], &["v"], &["y"])?;
    let leakage = mutual_info(&j, &["x"], &["v", "y"])?
        - cond_mutual_info(&j, &["x"], &["y"], &["u"])?
        + cond_mutual_info(&j, &["x"], &["z"], &["u"])?;
    let third = cond_mutual_info(&j, &["v"], &["y"], &["u"])?
        - cond_mutual_info(&j, &["v"], &["z"], &["u"])?;
    Ok(RegionPoint {
        rate,
        leakage,
        third,
        aux: aux.clone(),
        restart_id: None,
    })
}

/// Compression, leakage and false-acceptance exponent of one auxiliary pair.
pub fn eval_theorem1(source: &JointPmf, aux: &AuxPair) -> Result<RegionPoint> {
    evaluate_triple(source, aux)
}

/// Compression, leakage and secret key rate of one auxiliary pair. The
/// expressions coincide with [`eval_theorem1`].
pub fn eval_theorem2(source: &JointPmf, aux: &AuxPair) -> Result<RegionPoint> {
    evaluate_triple(source, aux)
}

/// Region for an adversary whose side information is degraded (`X - Y - Z`):
/// `R = I(X;V|Y)`, `L = I(X;Z) + I(X;V|Y)`, `E = I(V;Y|Z)`.
pub fn eval_degraded(source: &JointPmf, vx: &Channel) -> Result<RegionPoint> {
    check_source(source)?;
    let cmi = cond_mutual_info(source, &["x"], &["z"], &["y"])?;
    if cmi > DEGRADED_TOL {
        return Err(Error::NotDegraded { cmi });
    }
    let aux = AuxPair::with_constant_u(vx.clone());
    let j = aux.compose(source)?;
    let rate = cond_mutual_info(&j, &["x"], &["v"], &["y"])?;
    let leakage = mutual_info(&j, &["x"], &["z"])? + rate;
    let third = cond_mutual_info(&j, &["v"], &["y"], &["z"])?;
    Ok(RegionPoint {
        rate,
        leakage,
        third,
        aux,
        restart_id: None,
    })
}

/// Region when the adversary holds no side information: `Z` is a constant
/// and `U` is constant. With `R` at `H(X)` this is the classical
/// privacy-leakage/exponent tradeoff without adversary observations.
pub fn eval_no_side_info(source: &JointPmf, vx: &Channel) -> Result<RegionPoint> {
    let xy = source.marginalize(&["x", "y"])?;
    let xyz = xy.with_constant_axis("z")?;
    eval_theorem1(&xyz, &AuxPair::with_constant_u(vx.clone()))
}

/// Fast evaluation of the region triple for the search loop.
///
/// Uses the Markov chain `U - V - X - (Y, Z)` to reduce every term to five
/// small entropies:
///
/// ```text
/// R = H(V,Y) - H(V|X) - H(Y)
/// L = H(X) + H(V,Y) - H(V|X) - H(Y,U) + H(Z,U) - H(X,Z)
/// E = H(Y,U) - H(V,Y) - H(Z,U) + H(V,Z)
/// ```
#[derive(Clone, Debug)]
pub struct TripleEvaluator {
    nx: usize,
    ny: usize,
    nz: usize,
    p_x: Vec<f64>,
    p_xy: Vec<f64>,
    p_xz: Vec<f64>,
    h_x: f64,
    h_y: f64,
    h_xz: f64,
    scratch: Vec<f64>,
}

impl TripleEvaluator {
    pub fn new(source: &JointPmf) -> Result<Self> {
        check_source(source)?;
        let xy = source.marginalize(&["x", "y"])?;
        let xz = source.marginalize(&["x", "z"])?;
        let px = source.marginalize(&["x"])?;
        let py = source.marginalize(&["y"])?;
        Ok(TripleEvaluator {
            nx: px.mass().len(),
            ny: py.mass().len(),
            nz: xz.mass().len() / px.mass().len(),
            h_x: entropy_of(px.mass()),
            h_y: entropy_of(py.mass()),
            h_xz: entropy_of(xz.mass()),
            p_x: px.mass().to_vec(),
            p_xy: xy.mass().to_vec(),
            p_xz: xz.mass().to_vec(),
            scratch: Vec::new(),
        })
    }

    pub fn x_size(&self) -> usize {
        self.nx
    }

    /// `(R, L, E)` for row-major tables `vx` (`|X| x nv`) and `uv`
    /// (`nv x nu`).
    pub fn eval(&mut self, vx: &[f64], uv: &[f64], nv: usize, nu: usize) -> (f64, f64, f64) {
        let (nx, ny, nz) = (self.nx, self.ny, self.nz);
        debug_assert_eq!(vx.len(), nx * nv);
        debug_assert_eq!(uv.len(), nv * nu);
        let need = nv * ny + nv * nz + nx * nu + ny * nu + nz * nu;
        self.scratch.clear();
        self.scratch.resize(need, 0.0);
        let (p_vy, rest) = self.scratch.split_at_mut(nv * ny);
        let (p_vz, rest) = rest.split_at_mut(nv * nz);
        let (w, rest) = rest.split_at_mut(nx * nu);
        let (p_yu, p_zu) = rest.split_at_mut(ny * nu);

        let mut h_v_given_x = 0.0;
        for x in 0..nx {
            let row = &vx[x * nv..(x + 1) * nv];
            h_v_given_x += self.p_x[x] * entropy_of(row);
            for (v, &pv) in row.iter().enumerate() {
                if pv == 0.0 {
                    continue;
                }
                for y in 0..ny {
                    p_vy[v * ny + y] += self.p_xy[x * ny + y] * pv;
                }
                for z in 0..nz {
                    p_vz[v * nz + z] += self.p_xz[x * nz + z] * pv;
                }
                let urow = &uv[v * nu..(v + 1) * nu];
                for u in 0..nu {
                    w[x * nu + u] += pv * urow[u];
                }
            }
        }
        for x in 0..nx {
            for u in 0..nu {
                let wxu = w[x * nu + u];
                if wxu == 0.0 {
                    continue;
                }
                for y in 0..ny {
                    p_yu[y * nu + u] += self.p_xy[x * ny + y] * wxu;
                }
                for z in 0..nz {
                    p_zu[z * nu + u] += self.p_xz[x * nz + z] * wxu;
                }
            }
        }
        let h_vy = entropy_of(p_vy);
        let h_vz = entropy_of(p_vz);
        let h_yu = entropy_of(p_yu);
        let h_zu = entropy_of(p_zu);

        let rate = h_vy - h_v_given_x - self.h_y;
        let leakage = self.h_x + h_vy - h_v_given_x - h_yu + h_zu - self.h_xz;
        let exponent = h_yu - h_vy - h_zu + h_vz;
        (rate, leakage, exponent)
    }
}

/// Settings for the boundary search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub restarts: usize,
    /// Maximum sweeps over all rows at each step size.
    pub local_steps: usize,
    /// Mass-transfer step sizes, visited in order.
    pub step_schedule: Vec<f64>,
    pub seed: u64,
    pub u_size: Option<usize>,
    pub v_size: Option<usize>,
    /// Slack on the third coordinate when deciding membership.
    pub exponent_tol: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            restarts: 32,
            local_steps: 50,
            step_schedule: vec![
                0.25, 0.1, 0.05, 0.02, 0.01, 5e-3, 2e-3, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8,
            ],
            seed: 0,
            u_size: None,
            v_size: None,
            exponent_tol: 1e-6,
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidArgument("restarts must be at least 1".into()));
        }
        if self.step_schedule.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::InvalidArgument("step sizes must be positive".into()));
        }
        Ok(())
    }

    /// Alphabet sizes to search over, defaulting to the cardinality bounds.
    pub fn sizes(&self, x_size: usize) -> Result<(usize, usize)> {
        let v = self.v_size.unwrap_or(v_bound(x_size));
        let u = self.u_size.unwrap_or(u_bound(x_size));
        if v == 0 || u == 0 {
            return Err(Error::InvalidArgument("alphabet sizes must be positive".into()));
        }
        if v > v_bound(x_size) {
            return Err(Error::CardinalityExceeded {
                axis: "v".into(),
                size: v,
                bound: v_bound(x_size),
            });
        }
        if u > u_bound(x_size) {
            return Err(Error::CardinalityExceeded {
                axis: "u".into(),
                size: u,
                bound: u_bound(x_size),
            });
        }
        Ok((v, u))
    }
}

/// Result of [`maximize_exponent`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    /// Best feasible third coordinate, clipped at zero.
    pub exponent: Bits,
    /// The point that attains it, evaluated on the full composed joint.
    pub point: RegionPoint,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Score {
    violation: f64,
    exponent: f64,
}

impl Score {
    fn new((rate, leakage, exponent): (f64, f64, f64), r_cap: f64, l_cap: f64) -> Self {
        let violation =
            (rate - r_cap - CAP_TOL).max(0.0) + (leakage - l_cap - CAP_TOL).max(0.0);
        Score {
            violation,
            exponent,
        }
    }

    fn feasible(&self) -> bool {
        self.violation == 0.0
    }

    fn improves_on(&self, other: &Score) -> bool {
        if other.feasible() {
            self.feasible() && self.exponent > other.exponent + 1e-15
        } else {
            self.violation < other.violation - 1e-15
        }
    }
}

struct LocalSearch<'a> {
    eval: TripleEvaluator,
    r_cap: f64,
    l_cap: f64,
    nv: usize,
    nu: usize,
    cfg: &'a SearchConfig,
}

impl LocalSearch<'_> {
    fn score(&mut self, vx: &[f64], uv: &[f64]) -> Score {
        let t = self.eval.eval(vx, uv, self.nv, self.nu);
        Score::new(t, self.r_cap, self.l_cap)
    }

    /// Moves mass between pairs of entries in every row, keeping a move
    /// only if it improves the score.
    fn sweep_rows(
        &mut self,
        which: usize,
        vx: &mut [f64],
        uv: &mut [f64],
        width: usize,
        step: f64,
        best: &mut Score,
    ) -> bool {
        let rows = if which == 0 { vx.len() } else { uv.len() } / width;
        let mut improved = false;
        for r in 0..rows {
            for from in 0..width {
                for to in 0..width {
                    if from == to {
                        continue;
                    }
                    let table = if which == 0 { &mut *vx } else { &mut *uv };
                    let a = r * width + from;
                    let b = r * width + to;
                    let (old_a, old_b) = (table[a], table[b]);
                    let t = step.min(old_a);
                    if t <= 0.0 {
                        continue;
                    }
                    table[a] = old_a - t;
                    table[b] = old_b + t;
                    let s = self.score(vx, uv);
                    if s.improves_on(best) {
                        *best = s;
                        improved = true;
                    } else {
                        let table = if which == 0 { &mut *vx } else { &mut *uv };
                        table[a] = old_a;
                        table[b] = old_b;
                    }
                }
            }
        }
        improved
    }

    fn run(&mut self, vx: &mut [f64], uv: &mut [f64]) -> Score {
        let mut best = self.score(vx, uv);
        let steps = self.cfg.step_schedule.clone();
        for step in steps {
            for _ in 0..self.cfg.local_steps.max(1) {
                let a = self.sweep_rows(0, vx, uv, self.nv, step, &mut best);
                let b = self.nu > 1 && self.sweep_rows(1, vx, uv, self.nu, step, &mut best);
                if !(a || b) {
                    break;
                }
            }
        }
        best
    }
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

/// Starting tables for restart `r`: restart 0 is the all-constant pair,
/// every fourth restart pairs a random `P(v|x)` with a constant `U`, the
/// rest are fully random.
fn initial_tables(nx: usize, nv: usize, nu: usize, r: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = restart_rng(seed, r);
    let constant = |rows: usize, width: usize| {
        let mut t = vec![0.0; rows * width];
        for i in 0..rows {
            t[i * width] = 1.0;
        }
        t
    };
    if r == 0 {
        return (constant(nx, nv), constant(nv, nu));
    }
    let aux = AuxPair::random(nx, nv, nu, &mut rng);
    let uv = if r % 4 == 1 {
        constant(nv, nu)
    } else {
        aux.uv.flat().to_vec()
    };
    (aux.vx.flat().to_vec(), uv)
}

fn tables_to_aux(nx: usize, nv: usize, nu: usize, vx: Vec<f64>, uv: Vec<f64>) -> Result<AuxPair> {
    let vx = Channel::from_flat(Alphabet::new("x", nx), Alphabet::new("v", nv), vx)?;
    let uv = Channel::from_flat(Alphabet::new("v", nv), Alphabet::new("u", nu), uv)?;
    AuxPair::new(vx, uv)
}

/// Largest exponent over auxiliary pairs with `R <= r_cap` and
/// `L <= l_cap` (each up to [`CAP_TOL`]). Restarts run in parallel on
/// independent random streams; the result does not depend on the number of
/// worker threads.
pub fn maximize_exponent(
    source: &JointPmf,
    r_cap: Bits,
    l_cap: Bits,
    cfg: &SearchConfig,
) -> Result<SearchResult> {
    cfg.validate()?;
    if r_cap.is_nan() || l_cap.is_nan() || r_cap < 0.0 || l_cap < 0.0 {
        return Err(Error::InvalidArgument("caps must be nonnegative".into()));
    }
    let evaluator = TripleEvaluator::new(source)?;
    let nx = evaluator.x_size();
    let (nv, nu) = cfg.sizes(nx)?;

    let outcomes: Vec<(Score, Vec<f64>, Vec<f64>)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let (mut vx, mut uv) = initial_tables(nx, nv, nu, r, cfg.seed);
            let mut search = LocalSearch {
                eval: evaluator.clone(),
                r_cap,
                l_cap,
                nv,
                nu,
                cfg,
            };
            let score = search.run(&mut vx, &mut uv);
            (score, vx, uv)
        })
        .collect();

    let mut best: Option<usize> = None;
    for (i, (score, _, _)) in outcomes.iter().enumerate() {
        if !score.feasible() {
            continue;
        }
        match best {
            Some(b) if outcomes[b].0.exponent >= score.exponent => {}
            _ => best = Some(i),
        }
    }
    let Some(b) = best else {
        let floor = mutual_info(source, &["x"], &["z"])?;
        return Err(Error::InfeasibleCaps { l_cap, floor });
    };
    let (_, vx, uv) = outcomes.into_iter().nth(b).expect("index in range");
    let aux = tables_to_aux(nx, nv, nu, vx, uv)?;
    let mut point = eval_theorem1(source, &aux)?;
    point.restart_id = Some(b);
    Ok(SearchResult {
        exponent: point.third.max(0.0),
        point,
    })
}

/// Which cap a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CapKind {
    Rate,
    Leakage,
}

/// A list of values for one cap with the other held fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub kind: CapKind,
    pub values: Vec<Bits>,
    pub fixed_cap: Bits,
}

impl Sweep {
    fn caps(&self, value: Bits) -> (Bits, Bits) {
        match self.kind {
            CapKind::Rate => (value, self.fixed_cap),
            CapKind::Leakage => (self.fixed_cap, value),
        }
    }
}

/// One search per sweep value, returned in input order. The exponent is
/// made non-decreasing in the swept cap: a point found for a smaller cap is
/// also feasible for any larger one and replaces a worse result there.
pub fn trace_boundary(source: &JointPmf, sweep: &Sweep, cfg: &SearchConfig) -> Result<Vec<RegionPoint>> {
    if sweep.values.is_empty() {
        return Err(Error::InvalidArgument("sweep is empty".into()));
    }
    let mut results = Vec::with_capacity(sweep.values.len());
    for &v in &sweep.values {
        let (r_cap, l_cap) = sweep.caps(v);
        results.push(maximize_exponent(source, r_cap, l_cap, cfg)?);
    }
    Ok(enforce_monotone(&sweep.values, results))
}

fn enforce_monotone(values: &[Bits], results: Vec<SearchResult>) -> Vec<RegionPoint> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut out: Vec<Option<RegionPoint>> = vec![None; values.len()];
    let mut carried: Option<&SearchResult> = None;
    for &i in &order {
        let current = &results[i];
        let pick = match carried {
            Some(prev) if prev.exponent > current.exponent => prev,
            _ => current,
        };
        carried = Some(pick);
        out[i] = Some(pick.point.clone());
    }
    out.into_iter().map(|p| p.expect("every slot filled")).collect()
}

/// Outcome of a membership query. `false` means no certificate was found,
/// not that the point lies outside the region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub member: bool,
    pub certificate: Option<RegionPoint>,
}

fn certifies(p: &RegionPoint, rate: Bits, leakage: Bits, third: Bits, tol: f64) -> bool {
    p.rate <= rate + CAP_TOL && p.leakage <= leakage + CAP_TOL && p.third.max(0.0) >= third - tol
}

/// Searches for an auxiliary pair certifying that `(rate, leakage, third)`
/// is achievable. The all-constant pair is tried first, then any `hints`,
/// then the boundary search with caps `(rate, leakage)`.
pub fn membership(
    source: &JointPmf,
    (rate, leakage, third): (Bits, Bits, Bits),
    hints: &[AuxPair],
    cfg: &SearchConfig,
) -> Result<Membership> {
    if !(rate >= 0.0 && leakage >= 0.0 && third >= 0.0) {
        return Err(Error::InvalidArgument("region coordinates must be nonnegative".into()));
    }
    let x_size = source.axis("x")?.size;
    let trivial = eval_theorem1(source, &AuxPair::constant(x_size))?;
    let candidates = std::iter::once(Ok(trivial))
        .chain(hints.iter().map(|aux| eval_theorem1(source, aux)));
    for candidate in candidates {
        let candidate = candidate?;
        if certifies(&candidate, rate, leakage, third, cfg.exponent_tol) {
            return Ok(Membership {
                member: true,
                certificate: Some(candidate),
            });
        }
    }
    match maximize_exponent(source, rate, leakage, cfg) {
        Ok(found) if certifies(&found.point, rate, leakage, third, cfg.exponent_tol) => Ok(Membership {
            member: true,
            certificate: Some(found.point),
        }),
        Ok(_) | Err(Error::InfeasibleCaps { .. }) => Ok(Membership {
            member: false,
            certificate: None,
        }),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bsc(alpha: f64) -> Channel {
        Channel::new(
            Alphabet::new("x", 2),
            Alphabet::new("v", 2),
            vec![vec![1.0 - alpha, alpha], vec![alpha, 1.0 - alpha]],
        )
        .unwrap()
    }

    /// X uniform, Y = X, Z constant.
    fn noiseless() -> JointPmf {
        JointPmf::new(
            vec![Alphabet::new("x", 2), Alphabet::new("y", 2), Alphabet::new("z", 1)],
            vec![0.5, 0.0, 0.0, 0.5],
        )
        .unwrap()
    }

    #[test]
    fn constant_aux_gives_trivial_point() {
        let src = noiseless();
        let p = eval_theorem1(&src, &AuxPair::constant(2)).unwrap();
        assert_eq!(p.triple(), (0.0, 0.0, 0.0));
    }

    #[test]
    fn identity_aux_on_noiseless_source() {
        let p = eval_theorem1(&noiseless(), &AuxPair::identity(2)).unwrap();
        assert!(p.rate.abs() < 1e-12);
        // I(X;V,Y) - I(X;Y) = 1 - 1
        assert!(p.leakage.abs() < 1e-12);
        assert!((p.third - 1.0).abs() < 1e-12);
    }

    #[test]
    fn key_rate_vanishes_when_u_equals_x() {
        let src = noiseless();
        let aux = AuxPair::new(
            Channel::identity(Alphabet::new("x", 2), "v"),
            Channel::identity(Alphabet::new("v", 2), "u"),
        )
        .unwrap();
        assert!(eval_theorem2(&src, &aux).unwrap().third.abs() < 1e-12);
    }

    #[test]
    fn degraded_guard() {
        // Z = X, Y constant: I(X;Z|Y) = 1
        let src = JointPmf::new(
            vec![Alphabet::new("x", 2), Alphabet::new("y", 1), Alphabet::new("z", 2)],
            vec![0.5, 0.0, 0.0, 0.5],
        )
        .unwrap();
        assert!(matches!(eval_degraded(&src, &bsc(0.1)), Err(Error::NotDegraded { .. })));
    }

    #[test]
    fn no_side_info_examples() {
        let xy = JointPmf::new(
            vec![Alphabet::new("x", 2), Alphabet::new("y", 2)],
            vec![0.45, 0.05, 0.05, 0.45],
        )
        .unwrap();
        let p = eval_no_side_info(&xy, &Channel::identity(Alphabet::new("x", 2), "v")).unwrap();
        assert!((p.third - 0.531_004_406_410_718_8).abs() < 1e-12);
        let c = eval_no_side_info(&xy, &Channel::constant(Alphabet::new("x", 2), "v")).unwrap();
        assert_eq!(c.triple(), (0.0, 0.0, 0.0));
        let copy = JointPmf::new(
            vec![Alphabet::new("x", 2), Alphabet::new("y", 2)],
            vec![0.5, 0.0, 0.0, 0.5],
        )
        .unwrap();
        let p = eval_no_side_info(&copy, &Channel::identity(Alphabet::new("x", 2), "v")).unwrap();
        assert!((p.third - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cardinality_bounds() {
        assert_eq!((u_bound(2), v_bound(2)), (5, 20));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(AuxPair::random(2, 21, 2, &mut rng).check_cardinality().is_err());
        assert!(AuxPair::random(2, 20, 5, &mut rng).check_cardinality().is_ok());
        let cfg = SearchConfig {
            u_size: Some(6),
            ..SearchConfig::default()
        };
        assert!(cfg.sizes(2).is_err());
    }

    #[test]
    fn monotone_post_processing() {
        let aux = AuxPair::constant(2);
        let mk = |e: f64| SearchResult {
            exponent: e,
            point: RegionPoint {
                rate: 0.0,
                leakage: 0.0,
                third: e,
                aux: aux.clone(),
                restart_id: None,
            },
        };
        let out = enforce_monotone(&[0.3, 0.1, 0.2], vec![mk(0.1), mk(0.05), mk(0.2)]);
        let thirds: Vec<f64> = out.iter().map(|p| p.third).collect();
        assert_eq!(thirds, vec![0.2, 0.05, 0.2]);
    }

    #[test]
    fn zero_restarts_rejected() {
        let cfg = SearchConfig {
            restarts: 0,
            ..SearchConfig::default()
        };
        assert!(maximize_exponent(&noiseless(), 1.0, 1.0, &cfg).is_err());
    }
}
