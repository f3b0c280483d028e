//! Deviation radii for sample means of bounded statistics of a mixing
//! sequence, the odd/even block decomposition, and a Monte Carlo harness
//! that checks the nominal failure probabilities.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::processes::{sample_raw, ProcessModel};
use crate::rng;

/// Sums over consecutive length-`τ` blocks, split by block parity.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDecomposition {
    pub tau: usize,
    /// Blocks 1, 3, 5, ... (one-based numbering).
    pub odd_block_sums: Vec<f64>,
    /// Blocks 2, 4, 6, ...
    pub even_block_sums: Vec<f64>,
    /// Trailing entries dropped because they do not fill a block.
    pub remainder: usize,
}

impl BlockDecomposition {
    pub fn blocks(&self) -> usize {
        self.odd_block_sums.len() + self.even_block_sums.len()
    }

    /// All block sums in sequence order.
    pub fn block_sums(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.blocks());
        for k in 0..self.blocks() {
            out.push(if k % 2 == 0 {
                self.odd_block_sums[k / 2]
            } else {
                self.even_block_sums[k / 2]
            });
        }
        out
    }
}

pub fn block_decompose(values: &[f64], tau: usize) -> Result<BlockDecomposition> {
    if tau < 1 {
        return Err(domain("tau", tau, ">= 1"));
    }
    if values.len() < tau {
        return Err(domain("n", values.len(), ">= tau"));
    }
    let mut odd = Vec::new();
    let mut even = Vec::new();
    for (k, block) in values.chunks_exact(tau).enumerate() {
        let s: f64 = block.iter().sum();
        if k % 2 == 0 {
            odd.push(s);
        } else {
            even.push(s);
        }
    }
    Ok(BlockDecomposition {
        tau,
        odd_block_sums: odd,
        even_block_sums: even,
        remainder: values.len() % tau,
    })
}

/// Inputs of the Bernstein-type radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernsteinInputs {
    pub n: usize,
    pub tau: usize,
    /// Normalized block variance `var(Σ_{j≤τ} U_j) / τ²`.
    pub v2: f64,
    /// Almost-sure bound `B` on each `U_j`.
    pub bound: f64,
    pub delta: f64,
    pub eps: f64,
}

fn check_common(n: usize, bound: f64, delta: f64, eps: f64) -> Result<()> {
    if n < 1 {
        return Err(domain("n", n, ">= 1"));
    }
    if !(bound > 0.0) || !bound.is_finite() {
        return Err(domain("B", bound, "B > 0"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(domain("delta", delta, "0 < delta < 1"));
    }
    if !(eps >= 0.0) {
        return Err(domain("eps", eps, "eps >= 0"));
    }
    Ok(())
}

/// `√(4τv² log(1/δ)/n) + 4Bτ log(1/δ)/(3n)`, holding with probability at
/// least `1 − 4δ − ε` when `τ ≥ t_mix(ε/n)`.
pub fn mixing_bernstein_radius(inp: &BernsteinInputs) -> Result<f64> {
    check_common(inp.n, inp.bound, inp.delta, inp.eps)?;
    if inp.tau < 1 {
        return Err(domain("tau", inp.tau, ">= 1"));
    }
    if !(inp.v2 >= 0.0) {
        return Err(domain("v2", inp.v2, "v2 >= 0"));
    }
    let n = inp.n as f64;
    let tau = inp.tau as f64;
    let log = (1.0 / inp.delta).ln();
    Ok((4.0 * tau * inp.v2 * log / n).sqrt() + 4.0 * inp.bound * tau * log / (3.0 * n))
}

/// Inputs of the self-normalized radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfNormInputs {
    pub n: usize,
    pub bound: f64,
    pub delta: f64,
    /// Mixing time `t_mix(ε/n)`.
    pub tmix: usize,
    /// Realized `Σ_j U_j`.
    pub sum_u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SelfNormOutcome {
    Radius(f64),
    /// At least one of the two gates failed; the radius carries no guarantee.
    PreconditionFailed {
        /// `36·B·log(2/δ)·t_mix`, the smallest admissible `Σ U_j`.
        required_sum: f64,
        /// `24·t_mix`, the smallest admissible `n`.
        required_n: usize,
    },
}

impl SelfNormOutcome {
    pub fn radius(&self) -> Option<f64> {
        match *self {
            SelfNormOutcome::Radius(r) => Some(r),
            SelfNormOutcome::PreconditionFailed { .. } => None,
        }
    }
}

/// `82·√(B log(2/δ)·ΣU·t_mix)/n`, valid with probability at least
/// `1 − 10δ − 2ε` once `ΣU ≥ 36·B·log(2/δ)·t_mix` and `n ≥ 24·t_mix`.
pub fn self_normalized_radius(inp: &SelfNormInputs) -> Result<SelfNormOutcome> {
    check_common(inp.n, inp.bound, inp.delta, 0.0)?;
    if inp.tmix < 1 {
        return Err(domain("tmix", inp.tmix, ">= 1"));
    }
    if !(inp.sum_u >= 0.0) {
        return Err(domain("sumU", inp.sum_u, "sumU >= 0"));
    }
    let log = (2.0 / inp.delta).ln();
    let tmix = inp.tmix as f64;
    let required_sum = 36.0 * inp.bound * log * tmix;
    let required_n = 24 * inp.tmix;
    if inp.sum_u < required_sum || inp.n < required_n {
        return Ok(SelfNormOutcome::PreconditionFailed {
            required_sum,
            required_n,
        });
    }
    Ok(SelfNormOutcome::Radius(
        82.0 * (inp.bound * log * inp.sum_u * tmix).sqrt() / inp.n as f64,
    ))
}

/// Which deviation inequality the harness checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Inequality {
    /// Bernstein-type radius; `v2 = None` estimates the block variance from
    /// the replications themselves.
    Bernstein { v2: Option<f64> },
    /// Self-normalized radius with `τ` used as `t_mix(ε/n)`.
    SelfNormalized,
}

impl Inequality {
    pub fn label(&self) -> &'static str {
        match self {
            Inequality::Bernstein { .. } => "2a",
            Inequality::SelfNormalized => "2b",
        }
    }

    pub fn nominal(&self, delta: f64, eps: f64) -> f64 {
        match self {
            Inequality::Bernstein { .. } => 4.0 * delta + eps,
            Inequality::SelfNormalized => 10.0 * delta + 2.0 * eps,
        }
    }
}

/// Settings for [`empirical_coverage`]. The statistic is
/// `U_j = 1{X_j = target}` with `B = 1`, `target` being a model state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageConfig {
    pub inequality: Inequality,
    pub n: usize,
    pub tau: usize,
    pub delta: f64,
    pub eps: f64,
    pub reps: usize,
    pub seed: u64,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub lemma: &'static str,
    pub nominal: f64,
    pub observed: f64,
    pub reps: usize,
    pub gate_failures: usize,
}

struct Replication {
    deviation: f64,
    sum_u: f64,
    block_sum: f64,
    block_sq: f64,
    blocks: usize,
}

/// Simulates `reps` trajectories and reports the fraction whose sample-mean
/// deviation exceeds the selected radius.
///
/// For the self-normalized inequality a replication only counts as a
/// failure when both gates hold; gate misses are tallied separately.
pub fn empirical_coverage(model: &ProcessModel, cfg: &CoverageConfig) -> Result<CoverageReport> {
    if cfg.reps < 1 {
        return Err(domain("reps", cfg.reps, ">= 1"));
    }
    if cfg.tau < 1 || cfg.tau > cfg.n {
        return Err(domain("tau", cfg.tau, "1 <= tau <= n"));
    }
    let law = model.stationary_law();
    let mean = *law.get(cfg.target).ok_or_else(|| domain("target", cfg.target, "a model state"))?;
    check_common(cfg.n, 1.0, cfg.delta, cfg.eps)?;

    let reps: Vec<Replication> = (0..cfg.reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream(cfg.seed, r);
            let raw = sample_raw(model, cfg.n, &mut rng);
            let u: Vec<f64> = raw.iter().map(|&x| f64::from(u8::from(x == cfg.target))).collect();
            let sum_u: f64 = u.iter().sum();
            let (mut block_sum, mut block_sq) = (0.0, 0.0);
            let blocks = cfg.n / cfg.tau;
            for b in u.chunks_exact(cfg.tau) {
                let s: f64 = b.iter().sum();
                block_sum += s;
                block_sq += s * s;
            }
            Replication {
                deviation: (mean - sum_u / cfg.n as f64).abs(),
                sum_u,
                block_sum,
                block_sq,
                blocks,
            }
        })
        .collect();

    let mut failures = 0usize;
    let mut gate_failures = 0usize;
    match cfg.inequality {
        Inequality::Bernstein { v2 } => {
            let v2 = match v2 {
                Some(v) => v,
                None => pooled_block_variance(&reps, cfg.tau)?,
            };
            let radius = mixing_bernstein_radius(&BernsteinInputs {
                n: cfg.n,
                tau: cfg.tau,
                v2,
                bound: 1.0,
                delta: cfg.delta,
                eps: cfg.eps,
            })?;
            failures = reps.iter().filter(|r| r.deviation > radius).count();
        }
        Inequality::SelfNormalized => {
            for r in &reps {
                let out = self_normalized_radius(&SelfNormInputs {
                    n: cfg.n,
                    bound: 1.0,
                    delta: cfg.delta,
                    tmix: cfg.tau,
                    sum_u: r.sum_u,
                })?;
                match out.radius() {
                    Some(radius) if r.deviation > radius => failures += 1,
                    Some(_) => {}
                    None => gate_failures += 1,
                }
            }
        }
    }
    Ok(CoverageReport {
        lemma: cfg.inequality.label(),
        nominal: cfg.inequality.nominal(cfg.delta, cfg.eps),
        observed: failures as f64 / cfg.reps as f64,
        reps: cfg.reps,
        gate_failures,
    })
}

/// Sample variance of all length-`τ` block sums pooled over replications, divided by `τ²`.
fn pooled_block_variance(reps: &[Replication], tau: usize) -> Result<f64> {
    let count: usize = reps.iter().map(|r| r.blocks).sum();
    if count < 2 {
        return Err(Error::Domain {
            name: "blocks",
            value: count.to_string(),
            expected: ">= 2 to estimate v2",
        });
    }
    let sum: f64 = reps.iter().map(|r| r.block_sum).sum();
    let sq: f64 = reps.iter().map(|r| r.block_sq).sum();
    let c = count as f64;
    let var = ((sq - sum * sum / c) / (c - 1.0)).max(0.0);
    Ok(var / (tau * tau) as f64)
}
