//! Estimators of the count-probability vector.
//!
//! All three vector estimators are built from integer tallies over `n`, so
//! identities such as "the full WingIt vector sums to one" can be checked
//! exactly on the tallies; the `f64` vectors are the tallies divided by `n`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::seqcore::{
    compensated_sum, frequency_profile, occurrence_counts, CountMassVector, FrequencyProfile,
    TokenSequence,
};

/// Sorted positions of every symbol, used to count occurrences inside a window
/// by binary search.
#[derive(Debug, Clone)]
pub struct WindowIndex<'a> {
    seq: &'a TokenSequence,
    positions: Vec<Vec<usize>>,
}

impl<'a> WindowIndex<'a> {
    pub fn new(seq: &'a TokenSequence) -> Self {
        let mut positions = vec![Vec::new(); seq.support_size()];
        for (k, &s) in seq.symbols().iter().enumerate() {
            positions[s].push(k);
        }
        Self { seq, positions }
    }

    /// `N_{X_i}(X_{I_i})` for a zero-based index `i`: occurrences of `X_i` at
    /// indices `k` with `|k − i| ≥ τ`.
    pub fn outside_window(&self, i: usize, tau: usize) -> usize {
        let pos = &self.positions[self.seq.symbols()[i]];
        let lo = i.saturating_sub(tau - 1);
        let hi = i + tau - 1;
        let start = pos.partition_point(|&k| k < lo);
        let end = pos.partition_point(|&k| k <= hi);
        pos.len() - (end - start)
    }
}

fn check_tau(tau: usize, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    if tau < 1 || tau > n {
        return Err(domain("tau", tau, "1 <= tau <= n"));
    }
    Ok(())
}

/// Count of `X_i` outside the window of radius `τ` around the one-based index `i`.
pub fn leave_window_count(seq: &TokenSequence, i: usize, tau: usize) -> Result<usize> {
    let n = seq.len();
    if i < 1 || i > n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    if tau < 1 {
        return Err(domain("tau", tau, ">= 1"));
    }
    let x = seq.symbols()[i - 1];
    let lo = i.saturating_sub(tau - 1).max(1);
    let hi = (i + tau - 1).min(n);
    let total = seq.symbols().iter().filter(|&&s| s == x).count();
    let inside = seq.symbols()[lo - 1..hi].iter().filter(|&&s| s == x).count();
    Ok(total - inside)
}

/// Integer tallies behind the WingIt vector: entry `ζ` is the number of
/// indices whose leave-window count equals `ζ`. Sums to `n`.
pub fn wingit_tallies(seq: &TokenSequence, tau: usize) -> Result<Vec<usize>> {
    let n = seq.len();
    check_tau(tau, n)?;
    let idx = WindowIndex::new(seq);
    let mut tallies = vec![0usize; n + 1];
    for i in 0..n {
        tallies[idx.outside_window(i, tau)] += 1;
    }
    Ok(tallies)
}

/// Unnormalized WingIt vector, truncated to zero above `zeta_max`.
pub fn wingit_vector(seq: &TokenSequence, tau: usize, zeta_max: usize) -> Result<CountMassVector> {
    let n = seq.len();
    let tallies = wingit_tallies(seq, tau)?;
    if zeta_max > n {
        return Err(domain("zeta_max", zeta_max, "<= n"));
    }
    let nf = n as f64;
    let mass = tallies
        .iter()
        .enumerate()
        .map(|(z, &c)| if z <= zeta_max { c as f64 / nf } else { 0.0 })
        .collect();
    Ok(CountMassVector::from_parts(mass, false))
}

/// Skipped WingIt estimate at count `ζ`, probing only indices `2τj − ℓ` for
/// `j = 1..=n/(2τ)`. Requires `2τ` to divide `n`.
pub fn wingit_skipped(seq: &TokenSequence, tau: usize, offset: usize, zeta: usize) -> Result<f64> {
    let (hits, n0) = wingit_skipped_tally(seq, tau, offset, zeta)?;
    Ok(hits as f64 / n0 as f64)
}

/// Numerator and denominator of [`wingit_skipped`].
pub fn wingit_skipped_tally(
    seq: &TokenSequence,
    tau: usize,
    offset: usize,
    zeta: usize,
) -> Result<(usize, usize)> {
    let n = seq.len();
    check_tau(tau, n)?;
    let stride = 2 * tau;
    if !n.is_multiple_of(stride) {
        return Err(domain("n", n, "a multiple of 2*tau"));
    }
    if offset >= stride {
        return Err(domain("offset", offset, "0 <= offset < 2*tau"));
    }
    let n0 = n / stride;
    let idx = WindowIndex::new(seq);
    let mut hits = 0;
    for j in 1..=n0 {
        let probe = stride * j - offset;
        if probe < 1 || probe > n {
            return Err(Error::IndexOutOfRange { index: probe, n });
        }
        if idx.outside_window(probe - 1, tau) == zeta {
            hits += 1;
        }
    }
    Ok((hits, n0))
}

/// Integer tallies behind the plug-in vector: entry `ζ` is `ζ·φ_ζ`. Sums to `n`.
pub fn plugin_tallies(seq: &TokenSequence) -> Result<Vec<usize>> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    let prof = frequency_profile(&occurrence_counts(seq), None)?;
    Ok(prof.phi().iter().enumerate().map(|(z, &f)| z * f).collect())
}

pub fn plugin_vector(seq: &TokenSequence) -> Result<CountMassVector> {
    let tallies = plugin_tallies(seq)?;
    let nf = seq.len() as f64;
    Ok(CountMassVector::from_parts(
        tallies.iter().map(|&c| c as f64 / nf).collect(),
        false,
    ))
}

/// Window size and transition point of the hybrid estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HybridConfig {
    pub tau: usize,
    pub zeta_bar: usize,
}

impl HybridConfig {
    pub fn new(tau: usize, zeta_bar: usize, n: usize) -> Result<Self> {
        let cfg = Self { tau, zeta_bar };
        cfg.validate(n)?;
        Ok(cfg)
    }

    /// Default transition point `⌊n^{1/3}⌋ − 1` with the given window.
    pub fn with_default_transition(tau: usize, n: usize) -> Result<Self> {
        Self::new(tau, default_transition_point(n)?, n)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        check_tau(self.tau, n)?;
        if self.zeta_bar > n {
            return Err(domain("zeta_bar", self.zeta_bar, "0 <= zeta_bar <= n"));
        }
        Ok(())
    }
}

/// Output of [`hybrid_estimate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HybridEstimate {
    pub n: usize,
    pub tau: usize,
    pub zeta_bar: usize,
    /// Total mass of the unnormalized vector.
    pub nu: f64,
    /// Normalized estimate on the simplex.
    pub mass: CountMassVector,
    /// Set when `ν = 0` and the plug-in vector was returned instead.
    pub fallback: bool,
    #[serde(skip)]
    pub unnormalized: CountMassVector,
}

/// Splices WingIt tallies (at or below `zeta_bar`) with plug-in tallies
/// (above it) and normalizes. Both tally vectors are over `n`.
pub fn combine_tallies(
    wingit: &[usize],
    plugin: &[usize],
    n: usize,
    zeta_bar: usize,
) -> (CountMassVector, CountMassVector, f64, bool) {
    let spliced: Vec<usize> = wingit
        .iter()
        .zip(plugin)
        .enumerate()
        .map(|(z, (&w, &p))| if z <= zeta_bar { w } else { p })
        .collect();
    let total: usize = spliced.iter().sum();
    let nf = n as f64;
    if total == 0 {
        let plug = CountMassVector::from_parts(plugin.iter().map(|&c| c as f64 / nf).collect(), false);
        let normalized = CountMassVector::from_parts(plug.as_slice().to_vec(), true);
        return (normalized, plug, 0.0, true);
    }
    let unnormalized =
        CountMassVector::from_parts(spliced.iter().map(|&c| c as f64 / nf).collect(), false);
    let tf = total as f64;
    let normalized = CountMassVector::from_parts(spliced.iter().map(|&c| c as f64 / tf).collect(), true);
    (normalized, unnormalized, tf / nf, false)
}

/// WingIt for `ζ ≤ ζ̄`, plug-in for `ζ > ζ̄`, renormalized by `ν`.
pub fn hybrid_estimate(seq: &TokenSequence, cfg: &HybridConfig) -> Result<HybridEstimate> {
    let n = seq.len();
    cfg.validate(n)?;
    let wingit = wingit_tallies(seq, cfg.tau)?;
    let plugin = plugin_tallies(seq)?;
    let (mass, unnormalized, nu, fallback) = combine_tallies(&wingit, &plugin, n, cfg.zeta_bar);
    Ok(HybridEstimate {
        n,
        tau: cfg.tau,
        zeta_bar: cfg.zeta_bar,
        nu,
        mass,
        fallback,
        unnormalized,
    })
}

/// Which count-mass estimator to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Hybrid,
    Wingit,
    Plugin,
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Hybrid => "hybrid",
            EstimatorKind::Wingit => "wingit",
            EstimatorKind::Plugin => "plugin",
        }
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hybrid" => Ok(Self::Hybrid),
            "wingit" => Ok(Self::Wingit),
            "plugin" => Ok(Self::Plugin),
            other => Err(domain("estimator", other, "hybrid, wingit or plugin")),
        }
    }
}

/// Runs any of the three estimators under a common output type.
///
/// `Wingit` returns the full WingIt vector and `Plugin` the plug-in vector;
/// both already sum to one, so `nu` is reported as 1 and `cfg.zeta_bar` is
/// only echoed back.
pub fn estimate(seq: &TokenSequence, kind: EstimatorKind, cfg: &HybridConfig) -> Result<HybridEstimate> {
    let n = seq.len();
    cfg.validate(n)?;
    let tallies = match kind {
        EstimatorKind::Hybrid => return hybrid_estimate(seq, cfg),
        EstimatorKind::Wingit => wingit_tallies(seq, cfg.tau)?,
        EstimatorKind::Plugin => plugin_tallies(seq)?,
    };
    let nf = n as f64;
    let mass: Vec<f64> = tallies.iter().map(|&c| c as f64 / nf).collect();
    Ok(HybridEstimate {
        n,
        tau: cfg.tau,
        zeta_bar: cfg.zeta_bar,
        nu: 1.0,
        mass: CountMassVector::from_parts(mass.clone(), true),
        fallback: false,
        unnormalized: CountMassVector::from_parts(mass, false),
    })
}

/// Largest `k` with `k³ ≤ n`.
pub fn integer_cube_root(n: u64) -> u64 {
    let mut k = (n as f64).cbrt() as u64;
    while k.checked_pow(3).is_none_or(|c| c > n) {
        k -= 1;
    }
    while (k + 1).checked_pow(3).is_some_and(|c| c <= n) {
        k += 1;
    }
    k
}

/// `max(0, ⌊n^{1/3}⌋ − 1)`.
pub fn default_transition_point(n: usize) -> Result<usize> {
    if n < 1 {
        return Err(domain("n", n, ">= 1"));
    }
    Ok((integer_cube_root(n as u64) as usize).saturating_sub(1))
}

/// Mass assigned to the symbols that were never observed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum UnseenMass {
    /// Alphabet size known: `symbols` unseen symbols, each carrying `each`.
    Split { symbols: usize, each: f64 },
    /// Alphabet size unknown: the aggregate unseen mass.
    Lump(f64),
}

impl UnseenMass {
    pub fn total(&self) -> f64 {
        match *self {
            UnseenMass::Split { symbols, each } => symbols as f64 * each,
            UnseenMass::Lump(m) => m,
        }
    }
}

/// A distribution estimate that gives equal mass to symbols with equal counts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NaturalDistribution {
    /// Mass of each observed symbol, by dense ID.
    pub observed: Vec<f64>,
    pub unseen: UnseenMass,
    /// Count classes that received mass but contain no symbol, as `(ζ, mass)`.
    pub orphan: Vec<(usize, f64)>,
}

impl NaturalDistribution {
    pub fn total(&self) -> f64 {
        compensated_sum(
            self.observed
                .iter()
                .copied()
                .chain(std::iter::once(self.unseen.total()))
                .chain(self.orphan.iter().map(|&(_, m)| m)),
        )
    }

    pub fn mass_of(&self, id: usize) -> f64 {
        self.observed.get(id).copied().unwrap_or(0.0)
    }

    /// Total variation to another natural distribution on the same sequence.
    pub fn tv_distance(&self, other: &Self) -> Result<f64> {
        if self.observed.len() != other.observed.len() {
            return Err(Error::LengthMismatch {
                left: self.observed.len(),
                right: other.observed.len(),
            });
        }
        let unseen = match (self.unseen, other.unseen) {
            (UnseenMass::Split { symbols: a, each: x }, UnseenMass::Split { symbols: b, each: y })
                if a == b =>
            {
                a as f64 * (x - y).abs()
            }
            (UnseenMass::Lump(x), UnseenMass::Lump(y)) => (x - y).abs(),
            _ => return Err(domain("unseen mass", "mixed", "same alphabet convention")),
        };
        let mut orphan: BTreeMap<usize, f64> = BTreeMap::new();
        for &(z, m) in &self.orphan {
            *orphan.entry(z).or_default() += m;
        }
        for &(z, m) in &other.orphan {
            *orphan.entry(z).or_default() -= m;
        }
        let parts = self
            .observed
            .iter()
            .zip(&other.observed)
            .map(|(a, b)| (a - b).abs())
            .chain(std::iter::once(unseen))
            .chain(orphan.values().map(|d| d.abs()));
        Ok(0.5 * compensated_sum(parts))
    }
}

/// Splits each `M̂_ζ` equally among the symbols observed `ζ` times.
///
/// Unseen symbols share `M̂_0` when the alphabet size is known; otherwise
/// `M̂_0` is kept as a lump. Mass on a count class with no members is kept in
/// [`NaturalDistribution::orphan`].
pub fn natural_from_count_mass(
    mhat: &CountMassVector,
    seq: &TokenSequence,
    alphabet_size: Option<usize>,
) -> Result<NaturalDistribution> {
    let n = seq.len();
    if mhat.len() != n + 1 {
        return Err(Error::LengthMismatch {
            left: mhat.len(),
            right: n + 1,
        });
    }
    if !mhat.is_normalized() {
        return Err(domain("count-mass vector", "unnormalized", "normalized"));
    }
    let table = occurrence_counts(seq);
    let prof = frequency_profile(&table, alphabet_size)?;
    Ok(split_by_profile(mhat.as_slice(), table.counts(), &prof))
}

pub(crate) fn split_by_profile(
    mass: &[f64],
    counts: &[usize],
    prof: &FrequencyProfile,
) -> NaturalDistribution {
    let observed = counts
        .iter()
        .map(|&c| mass[c] / prof.get(c) as f64)
        .collect();
    let mut orphan: Vec<(usize, f64)> = mass
        .iter()
        .enumerate()
        .skip(1)
        .filter(|&(z, &m)| m > 0.0 && prof.get(z) == 0)
        .map(|(z, &m)| (z, m))
        .collect();
    let unseen = match prof.phi0() {
        Some(0) => {
            if mass[0] > 0.0 {
                orphan.insert(0, (0, mass[0]));
            }
            UnseenMass::Split { symbols: 0, each: 0.0 }
        }
        Some(k) => UnseenMass::Split {
            symbols: k,
            each: mass[0] / k as f64,
        },
        None => UnseenMass::Lump(mass[0]),
    };
    NaturalDistribution {
        observed,
        unseen,
        orphan,
    }
}
