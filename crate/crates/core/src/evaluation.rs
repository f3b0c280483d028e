//! Ground truth, oracle natural estimators and Monte Carlo risk.
//!
//! Reference curves and bounds fix every unspecified universal constant to
//! 1 ("constant-free shape"): only their dependence on `n`, `τ`, `ζ` and
//! `δ` is meaningful, not their absolute level.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::estimators::{
    default_transition_point, estimate, split_by_profile, EstimatorKind, HybridConfig,
    HybridEstimate, NaturalDistribution, UnseenMass,
};
use crate::processes::{default_window, sample_trajectory_stream, ProcessModel};
use crate::seqcore::{
    compensated_sum, frequency_profile, l1_distance, occurrence_counts, tv_distance,
    CountMassVector, TokenSequence,
};

/// Label attached to every report that uses `C = 1`.
pub const CONSTANT_FREE: &str = "constant-free shape";

/// Slack for the per-replication inequality checks.
pub const INEQUALITY_SLACK: f64 = 1e-12;

/// Stationary law over the full alphabet, with one label per symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pi: Vec<f64>,
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl GroundTruth {
    /// Labels default to the decimal symbol index, matching the tokens of
    /// simulated trajectories.
    pub fn new(pi: Vec<f64>) -> Result<Self> {
        let labels = (0..pi.len()).map(|i| i.to_string()).collect();
        Self::with_labels(pi, labels)
    }

    pub fn with_labels(pi: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if pi.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: pi.len(),
                right: labels.len(),
            });
        }
        if pi.iter().any(|&p| !(p >= 0.0)) || (compensated_sum(pi.iter().copied()) - 1.0).abs() > 1e-12 {
            return Err(domain("pi", "vector", "a distribution on the simplex"));
        }
        let index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        Ok(Self { pi, labels, index })
    }

    pub fn from_model(model: &ProcessModel) -> Result<Self> {
        Self::new(model.stationary_law().to_vec())
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn alphabet_size(&self) -> usize {
        self.pi.len()
    }

    /// Ground-truth index of each dense symbol ID of `seq`.
    fn symbol_map(&self, seq: &TokenSequence) -> Result<Vec<usize>> {
        seq.vocab()
            .tokens()
            .iter()
            .map(|t| {
                self.index
                    .get(t)
                    .copied()
                    .ok_or_else(|| Error::UnknownSymbol(t.clone()))
            })
            .collect()
    }
}

/// `M^π_ζ = Σ_x π_x·1{N_x = ζ}`, with `M^π_0` the mass of unobserved symbols.
pub fn true_count_mass(gt: &GroundTruth, seq: &TokenSequence) -> Result<CountMassVector> {
    let map = gt.symbol_map(seq)?;
    let counts = occurrence_counts(seq);
    let mut seen = vec![false; gt.alphabet_size()];
    let mut mass = vec![0.0; seq.len() + 1];
    for (id, &g) in map.iter().enumerate() {
        seen[g] = true;
        mass[counts.get(id)] += gt.pi[g];
    }
    mass[0] = compensated_sum(gt.pi.iter().zip(&seen).filter(|(_, &s)| !s).map(|(&p, _)| p));
    Ok(CountMassVector::from_parts(mass, true))
}

/// Natural estimator that splits each true `M^π_ζ` equally within its count class.
pub fn oracle_natural(gt: &GroundTruth, seq: &TokenSequence) -> Result<NaturalDistribution> {
    let truth = true_count_mass(gt, seq)?;
    natural_on_truth_alphabet(&truth, gt, seq)
}

/// Natural estimator for `mhat` using the ground-truth alphabet size.
pub fn natural_on_truth_alphabet(
    mhat: &CountMassVector,
    gt: &GroundTruth,
    seq: &TokenSequence,
) -> Result<NaturalDistribution> {
    if mhat.len() != seq.len() + 1 {
        return Err(Error::LengthMismatch {
            left: mhat.len(),
            right: seq.len() + 1,
        });
    }
    let counts = occurrence_counts(seq);
    let prof = frequency_profile(&counts, Some(gt.alphabet_size()))?;
    Ok(split_by_profile(mhat.as_slice(), counts.counts(), &prof))
}

/// `d_TV(π, q)` for a natural distribution built on `seq`; orphaned mass
/// counts as mass outside the alphabet. A lump is compared against the
/// aggregate unseen mass of `π`.
pub fn tv_to_truth(gt: &GroundTruth, seq: &TokenSequence, q: &NaturalDistribution) -> Result<f64> {
    let map = gt.symbol_map(seq)?;
    if q.observed.len() != map.len() {
        return Err(Error::LengthMismatch {
            left: q.observed.len(),
            right: map.len(),
        });
    }
    let mut seen = vec![false; gt.alphabet_size()];
    let mut parts: Vec<f64> = Vec::with_capacity(gt.alphabet_size() + q.orphan.len() + 1);
    for (id, &g) in map.iter().enumerate() {
        seen[g] = true;
        parts.push((gt.pi[g] - q.observed[id]).abs());
    }
    let unseen_pi = gt.pi.iter().zip(&seen).filter(|(_, &s)| !s).map(|(&p, _)| p);
    match q.unseen {
        UnseenMass::Split { symbols, each } => {
            let unseen = gt.alphabet_size() - map.len();
            if symbols != unseen {
                return Err(Error::InconsistentAlphabet {
                    given: symbols + map.len(),
                    observed: gt.alphabet_size(),
                });
            }
            parts.extend(unseen_pi.map(|p| (p - each).abs()));
        }
        UnseenMass::Lump(m) => parts.push((compensated_sum(unseen_pi) - m).abs()),
    }
    parts.extend(q.orphan.iter().map(|&(_, m)| m));
    Ok(0.5 * compensated_sum(parts))
}

/// Estimator choice with optional overrides; `None` resolves to the default
/// window `t_mix(n⁻⁵)` and transition point `⌊n^{1/3}⌋ − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    pub tau: Option<usize>,
    pub zeta_bar: Option<usize>,
}

impl EstimatorSpec {
    pub fn auto(kind: EstimatorKind) -> Self {
        Self {
            kind,
            tau: None,
            zeta_bar: None,
        }
    }

    pub fn resolve(&self, model: &ProcessModel, n: usize) -> Result<HybridConfig> {
        let tau = match self.tau {
            Some(t) => t,
            None => default_window(model, n)?,
        };
        let zeta_bar = match self.zeta_bar {
            Some(z) => z,
            None => default_transition_point(n)?,
        };
        HybridConfig::new(tau, zeta_bar, n)
    }
}

/// Settings for [`tv_risk_monte_carlo`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RiskConfig {
    pub estimator: EstimatorSpec,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    /// Report the per-ζ breakdown over the full range instead of `ζ ≤ 3ζ̄`.
    pub full_breakdown: bool,
}

/// Monte Carlo summary of the TV risk of one estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskReport {
    pub estimator: &'static str,
    pub n: usize,
    pub tau: usize,
    pub zeta_bar: usize,
    pub reps: usize,
    pub tv_mean: f64,
    pub tv_se: f64,
    pub l1_mean: f64,
    pub theory_rate: f64,
    pub constants: &'static str,
    /// Mean `|M̂_ζ − M^π_ζ|`, indexed by `ζ`.
    pub per_zeta_mae: Vec<f64>,
    /// Mean of `M^π_ζ` over replications, for `ζ ≤ max(3ζ̄, ζ̄ + 4τ − 2)`.
    pub expected_mass: Vec<f64>,
    /// Standard error of each entry of `expected_mass`.
    pub expected_mass_se: Vec<f64>,
    /// Replications where `d_TV(π, q̂) ≤ 2·d_TV(π, q^π) + d_TV(M̂, M^π)` failed.
    pub oracle_inequality_violations: usize,
    /// Replications where `d_TV(M̂, M^π) ≤ ‖M̂ᵘ − M^π‖₁` failed.
    pub normalization_violations: usize,
}

/// Column order of [`RiskReport::csv_row`].
pub const CSV_HEADER: &str = "n,tau,zeta_bar,reps,tv_mean,tv_se,l1_mean,theory_rate";

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl RiskReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.n,
            self.tau,
            self.zeta_bar,
            self.reps,
            format_f64(self.tv_mean),
            format_f64(self.tv_se),
            format_f64(self.l1_mean),
            format_f64(self.theory_rate)
        )
    }
}

/// Per-replication quantities comparing an estimate with the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationCheck {
    pub tv: f64,
    pub l1: f64,
    /// `d_TV(π, q̂)`.
    pub tv_pi_natural: f64,
    /// `d_TV(π, q^π)`.
    pub tv_pi_oracle: f64,
    /// `‖M̂ᵘ − M^π‖₁`.
    pub l1_unnormalized: f64,
    pub truth: CountMassVector,
}

impl ReplicationCheck {
    pub fn oracle_inequality_holds(&self) -> bool {
        self.tv_pi_natural <= 2.0 * self.tv_pi_oracle + self.tv + INEQUALITY_SLACK
    }

    pub fn normalization_inequality_holds(&self) -> bool {
        self.tv <= self.l1_unnormalized + INEQUALITY_SLACK
    }
}

pub fn check_replication(
    gt: &GroundTruth,
    seq: &TokenSequence,
    est: &HybridEstimate,
) -> Result<ReplicationCheck> {
    let truth = true_count_mass(gt, seq)?;
    let tv = tv_distance(est.mass.as_slice(), truth.as_slice())?;
    let l1 = l1_distance(est.mass.as_slice(), truth.as_slice())?;
    let l1_unnormalized = l1_distance(est.unnormalized.as_slice(), truth.as_slice())?;
    let qhat = natural_on_truth_alphabet(&est.mass, gt, seq)?;
    let qpi = natural_on_truth_alphabet(&truth, gt, seq)?;
    Ok(ReplicationCheck {
        tv,
        l1,
        tv_pi_natural: tv_to_truth(gt, seq, &qhat)?,
        tv_pi_oracle: tv_to_truth(gt, seq, &qpi)?,
        l1_unnormalized,
        truth,
    })
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = compensated_sum(values.iter().map(|v| (v - mean).powi(2))) / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Samples `reps` trajectories on streams `(seed, r)` and averages the TV
/// distance between the estimate and the true count-mass vector.
pub fn tv_risk_monte_carlo(model: &ProcessModel, cfg: &RiskConfig) -> Result<RiskReport> {
    if cfg.reps < 1 {
        return Err(domain("reps", cfg.reps, ">= 1"));
    }
    let hcfg = cfg.estimator.resolve(model, cfg.n)?;
    let gt = GroundTruth::from_model(model)?;
    let mae_len = if cfg.full_breakdown {
        cfg.n + 1
    } else {
        (3 * hcfg.zeta_bar).min(cfg.n) + 1
    };
    let em_len = (3 * hcfg.zeta_bar).max(hcfg.zeta_bar + 4 * hcfg.tau - 2).min(cfg.n) + 1;

    let checks: Vec<(ReplicationCheck, Vec<f64>)> = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|r| {
            let seq = sample_trajectory_stream(model, cfg.n, cfg.seed, r)?;
            let est = estimate(&seq, cfg.estimator.kind, &hcfg)?;
            let check = check_replication(&gt, &seq, &est)?;
            let mae = (0..mae_len)
                .map(|z| (est.mass.get(z) - check.truth.get(z)).abs())
                .collect();
            Ok((check, mae))
        })
        .collect::<Result<_>>()?;

    let tvs: Vec<f64> = checks.iter().map(|(c, _)| c.tv).collect();
    let l1s: Vec<f64> = checks.iter().map(|(c, _)| c.l1).collect();
    let (tv_mean, tv_se) = mean_se(&tvs);
    let (l1_mean, _) = mean_se(&l1s);
    let reps = cfg.reps as f64;
    let per_zeta_mae = (0..mae_len)
        .map(|z| compensated_sum(checks.iter().map(|(_, m)| m[z])) / reps)
        .collect();
    let (expected_mass, expected_mass_se) = (0..em_len)
        .map(|z| {
            let vals: Vec<f64> = checks.iter().map(|(c, _)| c.truth.get(z)).collect();
            mean_se(&vals)
        })
        .unzip();

    Ok(RiskReport {
        estimator: cfg.estimator.kind.name(),
        n: cfg.n,
        tau: hcfg.tau,
        zeta_bar: hcfg.zeta_bar,
        reps: cfg.reps,
        tv_mean,
        tv_se,
        l1_mean,
        theory_rate: theorem1_rate(cfg.n, hcfg.tau),
        constants: CONSTANT_FREE,
        per_zeta_mae,
        expected_mass,
        expected_mass_se,
        oracle_inequality_violations: checks.iter().filter(|(c, _)| !c.oracle_inequality_holds()).count(),
        normalization_violations: checks
            .iter()
            .filter(|(c, _)| !c.normalization_inequality_holds())
            .count(),
    })
}

/// `√(τ log n) / n^{1/6}`, the hybrid estimator's rate with `C = 1`.
pub fn theorem1_rate(n: usize, tau: usize) -> f64 {
    let n = n as f64;
    (tau as f64 * n.ln()).sqrt() / n.powf(1.0 / 6.0)
}

/// `√(ζ τ₀) · φ_ζ · √(log(n/δ)) / n` with `τ₀ = t_mix(ε/n²)`: the plug-in
/// error radius at count `ζ`, valid with probability `1 − δ − 3ε` once
/// `n ≥ 24τ₀` and `ζ` clears [`plugin_zeta_threshold`].
pub fn plugin_error_bound(zeta: usize, tau0: usize, n: usize, phi_zeta: usize, delta: f64) -> Result<f64> {
    if zeta < 1 {
        return Err(domain("zeta", zeta, ">= 1"));
    }
    if tau0 < 1 {
        return Err(domain("tau0", tau0, ">= 1"));
    }
    if n < 1 {
        return Err(domain("n", n, ">= 1"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(domain("delta", delta, "0 < delta < 1"));
    }
    let nf = n as f64;
    Ok(((zeta * tau0) as f64).sqrt() * phi_zeta as f64 * (nf / delta).ln().sqrt() / nf)
}

/// Smallest count at which the plug-in radius applies:
/// `max{36τ₀ log(22n/δ), 1 + √(4 + 8τ₀ log(11n/δ)) + 4τ₀ log(11n/δ)/3}`.
pub fn plugin_zeta_threshold(tau0: usize, n: usize, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(domain("delta", delta, "0 < delta < 1"));
    }
    let t = tau0 as f64;
    let nf = n as f64;
    let l11 = (11.0 * nf / delta).ln();
    let first = 36.0 * t * (22.0 * nf / delta).ln();
    let second = 1.0 + (4.0 + 8.0 * t * l11).sqrt() + 4.0 * t * l11 / 3.0;
    Ok(first.max(second))
}

/// Expected WingIt error at count `ζ` with `C = 1`:
///
/// `√(τ/n)·(√EM₀ + √(ζ log(2τ) EM₀) + √(Σ_{u=1}^{4τ−2} (ζ+u)/u · EM_u)) + (ζ+1)τ/n`
///
/// where `EM[u] = E[M^π_{ζ+u}]`; entries past the end of `em` count as zero.
pub fn wingit_error_bound(zeta: usize, tau: usize, n: usize, em: &[f64]) -> Result<f64> {
    if tau < 1 {
        return Err(domain("tau", tau, ">= 1"));
    }
    if n < 1 {
        return Err(domain("n", n, ">= 1"));
    }
    if em.is_empty() {
        return Err(domain("EM", "empty", "at least E[M_zeta]"));
    }
    if let Some(bad) = em.iter().find(|&&e| !(0.0..=1.0).contains(&e)) {
        return Err(domain("EM entry", bad, "in [0, 1]"));
    }
    let z = zeta as f64;
    let t = tau as f64;
    let nf = n as f64;
    let tail = compensated_sum(
        (1..=4 * tau - 2).map(|u| (z + u as f64) / u as f64 * em.get(u).copied().unwrap_or(0.0)),
    );
    let inner = em[0].sqrt() + (z * (2.0 * t).ln() * em[0]).sqrt() + tail.sqrt();
    Ok((t / nf).sqrt() * inner + (z + 1.0) * t / nf)
}
