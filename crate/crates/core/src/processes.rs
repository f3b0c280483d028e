//! Seeded simulators for mixing processes with known stationary laws, and
//! mixing-time utilities.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng::{self, StreamRng};
use crate::seqcore::TokenSequence;

const ROW_TOL: f64 = 1e-12;
const STATIONARY_TOL: f64 = 1e-10;
const DIRECT_SOLVE_MAX: usize = 2000;
const MIXING_CAP: usize = 1_000_000;
/// Below this level TV values computed from matrix powers are dominated by
/// rounding, so the mixing proxy switches to a submultiplicative bound.
const TV_FLOOR: f64 = 1e-9;

/// Inverse-CDF sampler over `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct Categorical {
    cdf: Vec<f64>,
    last: usize,
}

impl Categorical {
    pub fn new(probs: &[f64]) -> Result<Self> {
        check_distribution(probs, "distribution")?;
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        Ok(Self { cdf, last })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.cdf.partition_point(|&c| c <= u).min(self.last)
    }
}

fn check_distribution(p: &[f64], what: &'static str) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidModel(format!("{what} is empty")));
    }
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::InvalidModel(format!("{what} has a negative or non-finite entry")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > ROW_TOL {
        return Err(Error::InvalidModel(format!("{what} sums to {total}, not 1")));
    }
    Ok(())
}

fn check_square_stochastic(p: &[Vec<f64>]) -> Result<()> {
    let m = p.len();
    if m == 0 {
        return Err(Error::InvalidModel("transition matrix is empty".into()));
    }
    if p.iter().any(|row| row.len() != m) {
        return Err(Error::InvalidModel("transition matrix is not square".into()));
    }
    if p.iter().flatten().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::NotErgodic { check: "nonnegativity" });
    }
    if p.iter().any(|row| (row.iter().sum::<f64>() - 1.0).abs() > ROW_TOL) {
        return Err(Error::NotErgodic { check: "row-stochastic" });
    }
    Ok(())
}

/// Some power of the support pattern is strictly positive. Squares a
/// bitset adjacency matrix until `2^k` exceeds the Wielandt exponent.
fn is_primitive(p: &[Vec<f64>]) -> bool {
    let m = p.len();
    let words = m.div_ceil(64);
    let mut a: Vec<Vec<u64>> = p
        .iter()
        .map(|row| {
            let mut bits = vec![0u64; words];
            for (j, &x) in row.iter().enumerate() {
                if x > 0.0 {
                    bits[j / 64] |= 1 << (j % 64);
                }
            }
            bits
        })
        .collect();
    let full = |rows: &[Vec<u64>]| {
        rows.iter().all(|r| {
            (0..m).all(|j| r[j / 64] >> (j % 64) & 1 == 1)
        })
    };
    let wielandt = (m - 1) * (m - 1) + 1;
    let mut power = 1usize;
    loop {
        if full(&a) {
            return true;
        }
        if power >= wielandt {
            return false;
        }
        let mut next = vec![vec![0u64; words]; m];
        for (i, row) in a.iter().enumerate() {
            for k in 0..m {
                if row[k / 64] >> (k % 64) & 1 == 1 {
                    for (dst, src) in next[i].iter_mut().zip(&a[k]) {
                        *dst |= src;
                    }
                }
            }
        }
        a = next;
        power = power.saturating_mul(2);
    }
}

fn stationary_residual(p: &[Vec<f64>], pi: &[f64]) -> f64 {
    let m = p.len();
    (0..m)
        .map(|j| ((0..m).map(|i| pi[i] * p[i][j]).sum::<f64>() - pi[j]).abs())
        .fold(0.0, f64::max)
}

/// Stationary distribution of an ergodic (irreducible, aperiodic) chain.
pub fn stationary_distribution(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    check_square_stochastic(p)?;
    if !is_primitive(p) {
        return Err(Error::NotErgodic {
            check: "primitivity (irreducible and aperiodic)",
        });
    }
    let m = p.len();
    let mut pi = if m <= DIRECT_SOLVE_MAX {
        // (Pᵀ − I) π = 0 with the last equation replaced by Σπ = 1.
        let mut a = DMatrix::<f64>::from_fn(m, m, |i, j| p[j][i] - if i == j { 1.0 } else { 0.0 });
        for j in 0..m {
            a[(m - 1, j)] = 1.0;
        }
        let mut b = DVector::<f64>::zeros(m);
        b[m - 1] = 1.0;
        let sol = a
            .lu()
            .solve(&b)
            .ok_or(Error::NotErgodic { check: "nonsingular stationary system" })?;
        sol.iter().map(|&x| x.max(0.0)).collect::<Vec<_>>()
    } else {
        power_iteration(p)
    };
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= total);
    if stationary_residual(p, &pi) > STATIONARY_TOL {
        pi = power_iteration(p);
    }
    Ok(pi)
}

fn power_iteration(p: &[Vec<f64>]) -> Vec<f64> {
    let m = p.len();
    let mut pi = vec![1.0 / m as f64; m];
    for _ in 0..MIXING_CAP {
        let mut next = vec![0.0; m];
        for (i, row) in p.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                next[j] += pi[i] * x;
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        let change: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if change < 1e-15 {
            break;
        }
    }
    pi
}

/// Row-stochastic transition matrix with its stationary law.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovModel {
    transition: Vec<Vec<f64>>,
    pi: Vec<f64>,
    rows: Vec<Categorical>,
}

impl MarkovModel {
    pub fn new(transition: Vec<Vec<f64>>) -> Result<Self> {
        let pi = stationary_distribution(&transition)?;
        Self::build(transition, pi)
    }

    /// Uses a supplied stationary law after checking `πP = π`.
    pub fn with_stationary(transition: Vec<Vec<f64>>, pi: Vec<f64>) -> Result<Self> {
        check_square_stochastic(&transition)?;
        if !is_primitive(&transition) {
            return Err(Error::NotErgodic {
                check: "primitivity (irreducible and aperiodic)",
            });
        }
        if pi.len() != transition.len() {
            return Err(Error::InvalidModel("pi length differs from P".into()));
        }
        check_distribution(&pi, "pi")?;
        if stationary_residual(&transition, &pi) > STATIONARY_TOL {
            return Err(Error::InvalidModel("supplied pi is not stationary for P".into()));
        }
        Self::build(transition, pi)
    }

    fn build(transition: Vec<Vec<f64>>, pi: Vec<f64>) -> Result<Self> {
        let rows = transition
            .iter()
            .map(|r| Categorical::new(r))
            .collect::<Result<_>>()?;
        Ok(Self { transition, pi, rows })
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    pub fn states(&self) -> usize {
        self.pi.len()
    }
}

/// Observations emitted from a latent Markov chain.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    latent: MarkovModel,
    emission: Vec<Vec<f64>>,
    emitters: Vec<Categorical>,
    observed: Vec<f64>,
}

impl HmmModel {
    pub fn new(latent: MarkovModel, emission: Vec<Vec<f64>>) -> Result<Self> {
        if emission.len() != latent.states() {
            return Err(Error::InvalidModel("emission needs one row per latent state".into()));
        }
        let symbols = emission.first().map_or(0, Vec::len);
        if emission.iter().any(|r| r.len() != symbols) {
            return Err(Error::InvalidModel("emission rows differ in length".into()));
        }
        let emitters = emission
            .iter()
            .map(|r| Categorical::new(r))
            .collect::<Result<Vec<_>>>()?;
        let observed = (0..symbols)
            .map(|x| latent.pi.iter().zip(&emission).map(|(p, row)| p * row[x]).sum())
            .collect();
        Ok(Self {
            latent,
            emission,
            emitters,
            observed,
        })
    }

    pub fn latent(&self) -> &MarkovModel {
        &self.latent
    }

    pub fn emission(&self) -> &[Vec<f64>] {
        &self.emission
    }

    /// `πᵀ · emission`.
    pub fn observed_law(&self) -> &[f64] {
        &self.observed
    }
}

/// IID draws from `base`, each emitted `k` times with probability `alpha` and once otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct DuplicationModel {
    base: Vec<f64>,
    sampler: Categorical,
    k: usize,
    alpha: f64,
}

impl DuplicationModel {
    pub fn new(base: Vec<f64>, k: usize, alpha: f64) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidModel("duplication length k must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidModel("duplication probability alpha must lie in [0, 1]".into()));
        }
        let sampler = Categorical::new(&base)?;
        Ok(Self { base, sampler, k, alpha })
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Exponential mixing parameters: `α(τ) ≤ μ ρ^τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingRate {
    pub mu: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProcessKind {
    Iid { pi: Vec<f64>, sampler: Categorical },
    Markov(MarkovModel),
    Hmm(HmmModel),
    Duplication(DuplicationModel),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessModel {
    kind: ProcessKind,
    rate: Option<MixingRate>,
}

impl ProcessModel {
    pub fn iid(pi: Vec<f64>) -> Result<Self> {
        let sampler = Categorical::new(&pi)?;
        Ok(Self::from_kind(ProcessKind::Iid { pi, sampler }))
    }

    pub fn markov(model: MarkovModel) -> Self {
        Self::from_kind(ProcessKind::Markov(model))
    }

    pub fn hmm(model: HmmModel) -> Self {
        Self::from_kind(ProcessKind::Hmm(model))
    }

    pub fn duplication(model: DuplicationModel) -> Self {
        Self::from_kind(ProcessKind::Duplication(model))
    }

    fn from_kind(kind: ProcessKind) -> Self {
        Self { kind, rate: None }
    }

    pub fn with_rate(mut self, rate: MixingRate) -> Result<Self> {
        check_rate(rate.mu, rate.rho)?;
        self.rate = Some(rate);
        Ok(self)
    }

    pub fn kind(&self) -> &ProcessKind {
        &self.kind
    }

    pub fn rate(&self) -> Option<MixingRate> {
        self.rate
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ProcessKind::Iid { .. } => "iid",
            ProcessKind::Markov(_) => "markov",
            ProcessKind::Hmm(_) => "hmm",
            ProcessKind::Duplication(_) => "duplication",
        }
    }

    /// Stationary law of the observed symbols.
    pub fn stationary_law(&self) -> &[f64] {
        match &self.kind {
            ProcessKind::Iid { pi, .. } => pi,
            ProcessKind::Markov(m) => m.stationary(),
            ProcessKind::Hmm(h) => h.observed_law(),
            ProcessKind::Duplication(d) => d.base(),
        }
    }

    pub fn alphabet_size(&self) -> usize {
        self.stationary_law().len()
    }

    /// Mixing-time oracle at level `eps`.
    ///
    /// IID processes report 1 and duplication processes report `k`. Markov
    /// and hidden Markov processes use [`mixing_time_from_rate`] when a rate
    /// was supplied, otherwise [`markov_mixing_proxy`] on the (latent) chain.
    pub fn mixing_time(&self, eps: f64) -> Result<usize> {
        check_eps(eps)?;
        match &self.kind {
            ProcessKind::Iid { .. } => Ok(1),
            ProcessKind::Duplication(d) => Ok(d.k),
            ProcessKind::Markov(m) => self.rate_or_proxy(m, eps),
            ProcessKind::Hmm(h) => self.rate_or_proxy(&h.latent, eps),
        }
    }

    fn rate_or_proxy(&self, chain: &MarkovModel, eps: f64) -> Result<usize> {
        match self.rate {
            Some(r) => mixing_time_from_rate(r.mu, r.rho, eps),
            None => markov_mixing_proxy(chain, eps),
        }
    }

    pub fn from_spec(spec: ModelSpec) -> Result<Self> {
        let forbid = |present: bool, field: &str| {
            if present {
                Err(Error::InvalidModel(format!(
                    "field {field:?} does not apply to kind {:?}",
                    spec.kind
                )))
            } else {
                Ok(())
            }
        };
        let model = match spec.kind.as_str() {
            "iid" => {
                forbid(spec.transition.is_some(), "P")?;
                forbid(spec.emission.is_some(), "emission")?;
                forbid(spec.k.is_some(), "k")?;
                forbid(spec.alpha.is_some(), "alpha")?;
                let pi = spec.pi.clone().ok_or_else(|| missing("pi"))?;
                Self::iid(pi)?
            }
            "markov" => {
                forbid(spec.emission.is_some(), "emission")?;
                forbid(spec.k.is_some(), "k")?;
                forbid(spec.alpha.is_some(), "alpha")?;
                Self::markov(markov_from(&spec)?)
            }
            "hmm" => {
                forbid(spec.k.is_some(), "k")?;
                forbid(spec.alpha.is_some(), "alpha")?;
                let emission = spec.emission.clone().ok_or_else(|| missing("emission"))?;
                Self::hmm(HmmModel::new(markov_from(&spec)?, emission)?)
            }
            "duplication" => {
                forbid(spec.transition.is_some(), "P")?;
                forbid(spec.emission.is_some(), "emission")?;
                let pi = spec.pi.clone().ok_or_else(|| missing("pi"))?;
                let k = spec.k.ok_or_else(|| missing("k"))?;
                let alpha = spec.alpha.ok_or_else(|| missing("alpha"))?;
                Self::duplication(DuplicationModel::new(pi, k, alpha)?)
            }
            other => return Err(Error::InvalidModel(format!("unknown kind {other:?}"))),
        };
        match (spec.mu, spec.rho) {
            (Some(mu), Some(rho)) => model.with_rate(MixingRate { mu, rho }),
            (None, None) => Ok(model),
            _ => Err(Error::InvalidModel("mu and rho must be given together".into())),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ModelSpec =
            serde_json::from_str(text).map_err(|e| Error::InvalidModel(e.to_string()))?;
        Self::from_spec(spec)
    }
}

fn missing(field: &str) -> Error {
    Error::InvalidModel(format!("missing field {field:?}"))
}

fn markov_from(spec: &ModelSpec) -> Result<MarkovModel> {
    let p = spec.transition.clone().ok_or_else(|| missing("P"))?;
    match &spec.pi {
        Some(pi) => MarkovModel::with_stationary(p, pi.clone()),
        None => MarkovModel::new(p),
    }
}

/// JSON model file. For `hmm`, `P` and `pi` describe the latent chain; for
/// `duplication`, `pi` is the base IID law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<f64>>,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emission: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

fn check_rate(mu: f64, rho: f64) -> Result<()> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(domain("mu", mu, "mu > 0"));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(domain("rho", rho, "0 < rho < 1"));
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(domain("eps", eps, "0 < eps <= 1"));
    }
    Ok(())
}

/// `max(1, ⌈log(μ/ε) / log(1/ρ)⌉)`.
pub fn mixing_time_from_rate(mu: f64, rho: f64, eps: f64) -> Result<usize> {
    check_rate(mu, rho)?;
    check_eps(eps)?;
    let bound = (mu / eps).ln() / (1.0 / rho).ln();
    Ok((bound.ceil().max(1.0)) as usize)
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = b.len();
    a.iter()
        .map(|row| {
            let mut out = vec![0.0; m];
            for (k, &x) in row.iter().enumerate() {
                if x != 0.0 {
                    for (o, &y) in out.iter_mut().zip(&b[k]) {
                        *o += x * y;
                    }
                }
            }
            out
        })
        .collect()
}

fn tv(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn max_tv_to(power: &[Vec<f64>], pi: &[f64]) -> f64 {
    power.iter().map(|row| tv(row, pi)).fold(0.0, f64::max)
}

fn max_pairwise_tv(power: &[Vec<f64>]) -> f64 {
    let mut d = 0.0f64;
    for (i, a) in power.iter().enumerate() {
        for b in &power[i + 1..] {
            d = d.max(tv(a, b));
        }
    }
    d
}

/// Smallest `τ` with `max_x d_TV(P^τ(x,·), π) ≤ ε`.
///
/// This is a proxy for the α-mixing time. For `ε` below `1e-9` the distance
/// can no longer be resolved in floating point; the result is then the upper
/// bound `min_t t·⌈log ε / log d̄(t)⌉`, where `d̄(t)` is the largest TV
/// between two rows of `P^t`, using `d(kt) ≤ d̄(t)^k`.
pub fn markov_mixing_proxy(model: &MarkovModel, eps: f64) -> Result<usize> {
    check_eps(eps)?;
    let p = model.transition();
    let pi = model.stationary();
    let mut power = p.to_vec();
    if eps >= TV_FLOOR {
        for tau in 1..=MIXING_CAP {
            if max_tv_to(&power, pi) <= eps {
                return Ok(tau);
            }
            power = mat_mul(&power, p);
        }
        return Err(Error::SlowMixing { cap: MIXING_CAP, eps });
    }
    let mut best: Option<usize> = None;
    for tau in 1..=MIXING_CAP {
        if best.is_some_and(|b| tau >= b) {
            break;
        }
        let dbar = max_pairwise_tv(&power);
        if dbar == 0.0 {
            best = Some(best.map_or(tau, |b| b.min(tau)));
            break;
        }
        if dbar < 1.0 {
            let reps = (eps.ln() / dbar.ln()).ceil().max(1.0);
            let cand = (tau as f64 * reps).min(usize::MAX as f64) as usize;
            best = Some(best.map_or(cand, |b| b.min(cand)));
        }
        if dbar < TV_FLOOR {
            break;
        }
        power = mat_mul(&power, p);
    }
    match best {
        Some(b) if b <= MIXING_CAP => Ok(b),
        _ => Err(Error::SlowMixing { cap: MIXING_CAP, eps }),
    }
}

/// Window size `t_mix(n⁻⁵)` from the model's oracle, clamped to `[1, n]`.
pub fn default_window(model: &ProcessModel, n: usize) -> Result<usize> {
    if n < 1 {
        return Err(domain("n", n, ">= 1"));
    }
    let eps = (n as f64).powi(-5).max(f64::MIN_POSITIVE);
    Ok(model.mixing_time(eps)?.clamp(1, n))
}

/// Raw state IDs of a length-`n` trajectory started at stationarity.
pub fn sample_raw(model: &ProcessModel, n: usize, rng: &mut StreamRng) -> Vec<usize> {
    let mut out = Vec::with_capacity(n);
    match &model.kind {
        ProcessKind::Iid { sampler, .. } => {
            out.extend((0..n).map(|_| sampler.sample(rng)));
        }
        ProcessKind::Markov(m) => {
            if n > 0 {
                let mut state = Categorical::new(m.stationary())
                    .expect("validated stationary law")
                    .sample(rng);
                out.push(state);
                for _ in 1..n {
                    state = m.rows[state].sample(rng);
                    out.push(state);
                }
            }
        }
        ProcessKind::Hmm(h) => {
            if n > 0 {
                let mut state = Categorical::new(h.latent.stationary())
                    .expect("validated stationary law")
                    .sample(rng);
                for t in 0..n {
                    if t > 0 {
                        state = h.latent.rows[state].sample(rng);
                    }
                    out.push(h.emitters[state].sample(rng));
                }
            }
        }
        ProcessKind::Duplication(d) => {
            while out.len() < n {
                let x = d.sampler.sample(rng);
                let copies = if rng.gen::<f64>() < d.alpha { d.k } else { 1 };
                let take = copies.min(n - out.len());
                out.extend(std::iter::repeat_n(x, take));
            }
        }
    }
    out
}

/// Length-`n` trajectory from stream `(seed, 0)`.
pub fn sample_trajectory(model: &ProcessModel, n: usize, seed: u64) -> Result<TokenSequence> {
    sample_trajectory_stream(model, n, seed, 0)
}

/// Length-`n` trajectory from stream `(seed, stream_id)`.
pub fn sample_trajectory_stream(
    model: &ProcessModel,
    n: usize,
    seed: u64,
    stream_id: u64,
) -> Result<TokenSequence> {
    if n < 1 {
        return Err(domain("n", n, ">= 1"));
    }
    let mut rng = rng::stream(seed, stream_id);
    Ok(TokenSequence::from_raw_ids(&sample_raw(model, n, &mut rng)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(p: &[&[f64]]) -> MarkovModel {
        MarkovModel::new(p.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn stationary_examples() {
        let pi = stationary_distribution(&[vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        assert!((pi[0] - 0.5).abs() < 1e-12 && (pi[1] - 0.5).abs() < 1e-12);

        let pi = stationary_distribution(&[vec![0.5, 0.5], vec![0.25, 0.75]]).unwrap();
        assert!((pi[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((pi[1] - 2.0 / 3.0).abs() < 1e-12);

        assert!(matches!(
            stationary_distribution(&[vec![1.0, 0.0], vec![0.0, 1.0]]),
            Err(Error::NotErgodic { check }) if check.starts_with("primitivity")
        ));
        // periodic
        assert!(stationary_distribution(&[vec![0.0, 1.0], vec![1.0, 0.0]]).is_err());
        assert!(matches!(
            stationary_distribution(&[vec![0.5, 0.4], vec![0.5, 0.5]]),
            Err(Error::NotErgodic { check: "row-stochastic" })
        ));
    }

    #[test]
    fn stationary_of_larger_chain_satisfies_balance() {
        let m = 40;
        let p: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let mut row = vec![0.0; m];
                row[i] = 0.5;
                row[(i + 1) % m] = 0.3;
                row[(i + 7) % m] = 0.2;
                row
            })
            .collect();
        let pi = stationary_distribution(&p).unwrap();
        assert!(stationary_residual(&p, &pi) < 1e-12);
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((power_iteration(&p)[3] - pi[3]).abs() < 1e-10);
    }

    #[test]
    fn supplied_pi_is_checked() {
        let p = vec![vec![0.5, 0.5], vec![0.25, 0.75]];
        assert!(MarkovModel::with_stationary(p.clone(), vec![1.0 / 3.0, 2.0 / 3.0]).is_ok());
        assert!(MarkovModel::with_stationary(p, vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn rate_mixing_time_examples() {
        assert_eq!(mixing_time_from_rate(1.0, 0.5, 0.25).unwrap(), 2);
        assert_eq!(mixing_time_from_rate(1.0, 0.5, 1.0).unwrap(), 1);
        assert!(mixing_time_from_rate(1.0, 1.0, 0.5).is_err());
        assert!(mixing_time_from_rate(1.0, 0.0, 0.5).is_err());
        assert!(mixing_time_from_rate(1.0, 0.5, 0.0).is_err());
        let iid = ProcessModel::iid(vec![0.5, 0.5]).unwrap();
        for eps in [1.0, 1e-3, 1e-30] {
            assert_eq!(iid.mixing_time(eps).unwrap(), 1);
        }
    }

    #[test]
    fn proxy_examples() {
        let uniform = chain(&[&[0.25, 0.75], &[0.25, 0.75]]);
        for eps in [0.5, 1e-3, 1e-20] {
            assert_eq!(markov_mixing_proxy(&uniform, eps).unwrap(), 1);
        }
        let sym = chain(&[&[0.9, 0.1], &[0.1, 0.9]]);
        assert_eq!(markov_mixing_proxy(&sym, 0.01).unwrap(), 18);

        let dup = ProcessModel::duplication(DuplicationModel::new(vec![0.5, 0.5], 3, 0.4).unwrap());
        for eps in [0.9, 1e-2, 1e-25] {
            assert_eq!(dup.mixing_time(eps).unwrap(), 3);
        }
    }

    #[test]
    fn proxy_below_float_floor_is_a_valid_upper_bound() {
        // d(τ) = 0.5·0.8^τ, so the exact level-ε time is ⌈log(2ε)/log 0.8⌉.
        let sym = chain(&[&[0.9, 0.1], &[0.1, 0.9]]);
        for eps in [1e-10f64, 1e-15, 1e-25] {
            let exact = ((2.0 * eps).ln() / 0.8f64.ln()).ceil() as usize;
            let got = markov_mixing_proxy(&sym, eps).unwrap();
            assert!(got >= exact, "eps {eps}: {got} < {exact}");
            assert!(got as f64 <= 1.15 * exact as f64, "eps {eps}: {got} vs {exact}");
        }
    }

    #[test]
    fn proxy_nonincreasing_in_eps() {
        let m = chain(&[&[0.7, 0.2, 0.1], &[0.1, 0.8, 0.1], &[0.3, 0.3, 0.4]]);
        let mut prev = 0;
        for k in 0..60 {
            let eps = 10f64.powf(-0.5 * k as f64);
            let t = markov_mixing_proxy(&m, eps).unwrap();
            assert!(t >= prev, "tmix shrank from {prev} to {t} at eps {eps:e}");
            prev = t;
        }
    }

    #[test]
    fn default_window_examples() {
        for n in [1, 10, 100_000] {
            assert_eq!(default_window(&ProcessModel::iid(vec![0.3, 0.7]).unwrap(), n).unwrap(), 1);
        }
        let rated = ProcessModel::markov(chain(&[&[0.9, 0.1], &[0.1, 0.9]]))
            .with_rate(MixingRate { mu: 1.0, rho: 0.5 })
            .unwrap();
        assert_eq!(rated.mixing_time(1e-5).unwrap(), 17);
        assert_eq!(default_window(&rated, 10).unwrap(), 10);
        let dup = ProcessModel::duplication(DuplicationModel::new(vec![1.0], 4, 0.5).unwrap());
        assert_eq!(default_window(&dup, 1000).unwrap(), 4);
        let sym = ProcessModel::markov(chain(&[&[0.9, 0.1], &[0.1, 0.9]]));
        assert!(default_window(&sym, 1000).unwrap() > 18);
    }

    #[test]
    fn degenerate_iid_and_duplication_blocks() {
        let m = ProcessModel::iid(vec![1.0, 0.0]).unwrap();
        let s = sample_trajectory(&m, 50, 3).unwrap();
        assert!(s.symbols().iter().all(|&x| x == 0));

        let d = ProcessModel::duplication(DuplicationModel::new(vec![0.25; 4], 3, 1.0).unwrap());
        let mut rng = rng::stream(11, 0);
        let raw = sample_raw(&d, 20, &mut rng);
        assert_eq!(raw.len(), 20);
        for block in raw.chunks(3) {
            assert!(block.iter().all(|&x| x == block[0]));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = ProcessModel::markov(chain(&[&[0.6, 0.4], &[0.2, 0.8]]));
        let a = sample_trajectory(&m, 500, 99).unwrap();
        let b = sample_trajectory(&m, 500, 99).unwrap();
        let c = sample_trajectory(&m, 500, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn categorical_skips_zero_weights() {
        let c = Categorical::new(&[0.0, 0.5, 0.0, 0.5, 0.0]).unwrap();
        let mut rng = rng::stream(1, 0);
        for _ in 0..2000 {
            let x = c.sample(&mut rng);
            assert!(x == 1 || x == 3);
        }
    }

    #[test]
    fn spec_parsing() {
        let m = ProcessModel::from_json(r#"{"kind":"markov","P":[[0.5,0.5],[0.25,0.75]]}"#).unwrap();
        assert!((m.stationary_law()[1] - 2.0 / 3.0).abs() < 1e-12);

        let h = ProcessModel::from_json(
            r#"{"kind":"hmm","P":[[0.9,0.1],[0.2,0.8]],"emission":[[0.5,0.5,0.0],[0.0,0.1,0.9]]}"#,
        )
        .unwrap();
        let law = h.stationary_law();
        assert!((law.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((law[0] - 2.0 / 3.0 * 0.5).abs() < 1e-12);

        let d = ProcessModel::from_json(r#"{"kind":"duplication","pi":[0.5,0.5],"k":3,"alpha":0.2}"#).unwrap();
        assert_eq!(d.mixing_time(0.1).unwrap(), 3);

        let r = ProcessModel::from_json(r#"{"kind":"iid","pi":[1.0],"mu":2.0,"rho":0.5}"#).unwrap();
        assert_eq!(r.rate(), Some(MixingRate { mu: 2.0, rho: 0.5 }));

        for bad in [
            r#"{"kind":"iid","pi":[1.0],"extra":1}"#,
            r#"{"kind":"iid"}"#,
            r#"{"kind":"iid","pi":[0.5,0.4]}"#,
            r#"{"kind":"iid","pi":[1.0],"k":2}"#,
            r#"{"kind":"markov","P":[[1.0,0.0],[0.0,1.0]]}"#,
            r#"{"kind":"duplication","pi":[1.0],"k":0,"alpha":0.5}"#,
            r#"{"kind":"duplication","pi":[1.0],"k":2,"alpha":1.5}"#,
            r#"{"kind":"iid","pi":[1.0],"mu":1.0}"#,
            r#"{"kind":"poisson","pi":[1.0]}"#,
        ] {
            assert!(ProcessModel::from_json(bad).is_err(), "{bad}");
        }
    }
}
