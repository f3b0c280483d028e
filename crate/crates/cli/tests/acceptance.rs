//! Acceptance suite: each criterion prints one PASS/FAIL line, and the run
//! fails if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::Rng;

use countmass::concentration::{empirical_coverage, CoverageConfig, Inequality};
use countmass::estimators::{
    hybrid_estimate, natural_from_count_mass, plugin_tallies, plugin_vector, wingit_tallies, wingit_vector,
    EstimatorKind, HybridConfig,
};
use countmass::evaluation::{
    natural_on_truth_alphabet, oracle_natural, true_count_mass, tv_risk_monte_carlo, EstimatorSpec, GroundTruth,
    RiskConfig,
};
use countmass::processes::{MarkovModel, ProcessModel};
use countmass::rng::{stream, StreamRng};
use countmass::seqcore::{frequency_profile, l1_distance, occurrence_counts, tv_distance, TokenSequence};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn model(name: &str) -> ProcessModel {
    let text = std::fs::read_to_string(workspace().join("models").join(name)).unwrap();
    ProcessModel::from_json(&text).unwrap()
}

fn random_sequence(rng: &mut StreamRng, max_len: usize, max_alphabet: usize) -> TokenSequence {
    let n = rng.gen_range(1..=max_len);
    let m = rng.gen_range(1..=max_alphabet);
    let raw: Vec<usize> = (0..n).map(|_| rng.gen_range(0..m)).collect();
    TokenSequence::from_raw_ids(&raw)
}

/// Entry `ζ` of the leave-a-window-out vector by direct scan of every pair.
fn naive_wingit(xs: &[usize], tau: usize) -> Vec<f64> {
    let n = xs.len();
    let mut tally = vec![0usize; n + 1];
    for i in 0..n {
        let c = (0..n).filter(|&k| k.abs_diff(i) >= tau && xs[k] == xs[i]).count();
        tally[c] += 1;
    }
    tally.iter().map(|&c| c as f64 / n as f64).collect()
}

fn c1_brute_force() -> Outcome {
    let mut checked = 0usize;
    for n in 1..=8usize {
        for code in 0..3usize.pow(n as u32) {
            let xs: Vec<usize> = (0..n).map(|k| code / 3usize.pow(k as u32) % 3).collect();
            let seq = TokenSequence::from_raw_ids(&xs);
            for tau in 1..=3usize.min(n) {
                let fast = wingit_vector(&seq, tau, n).map_err(|e| e.to_string())?;
                if fast.as_slice() != naive_wingit(&xs, tau).as_slice() {
                    return Err(format!("mismatch on {xs:?} tau={tau}"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} (sequence, tau) pairs equal"))
}

fn c2_good_turing() -> Outcome {
    let mut rng = stream(2, 0);
    for case in 0..10_000 {
        let seq = random_sequence(&mut rng, 200, 40);
        let n = seq.len();
        let w = wingit_vector(&seq, 1, n).map_err(|e| e.to_string())?;
        let prof = frequency_profile(&occurrence_counts(&seq), None).map_err(|e| e.to_string())?;
        for z in 0..=n {
            let next = if z < n { (z + 1) * prof.get(z + 1) } else { 0 };
            let gt = next as f64 / n as f64;
            if w.get(z) != gt {
                return Err(format!("case {case} zeta {z}: {} vs {gt}", w.get(z)));
            }
        }
    }
    Ok("10000 sequences, every entry bitwise equal".into())
}

fn c3_simplex() -> Outcome {
    let mut rng = stream(3, 0);
    let mut worst = 0.0f64;
    for case in 0..10_000 {
        let seq = random_sequence(&mut rng, 300, 50);
        let n = seq.len();
        let pt: usize = plugin_tallies(&seq).map_err(|e| e.to_string())?.iter().sum();
        let wt: usize = wingit_tallies(&seq, rng.gen_range(1..=n)).map_err(|e| e.to_string())?.iter().sum();
        if pt != n || wt != n {
            return Err(format!("case {case}: tallies sum to {pt} and {wt}, not {n}"));
        }
        let plug = plugin_vector(&seq).map_err(|e| e.to_string())?;
        let cfg = HybridConfig::new(rng.gen_range(1..=n), rng.gen_range(0..=n), n).map_err(|e| e.to_string())?;
        let h = hybrid_estimate(&seq, &cfg).map_err(|e| e.to_string())?;
        if h.mass.as_slice().iter().any(|&m| m < 0.0) {
            return Err(format!("case {case}: negative hybrid entry"));
        }
        worst = worst.max((h.mass.total() - 1.0).abs()).max((plug.total() - 1.0).abs());
    }
    if worst > 1e-12 {
        return Err(format!("float total off by {worst:e}"));
    }
    Ok(format!("10000 cases, integer tallies sum to n, max float deviation {worst:e}"))
}

fn random_simplex(rng: &mut StreamRng, m: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..m).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

fn c4_natural_identities() -> Outcome {
    let mut rng = stream(4, 0);
    let mut worst = 0.0f64;
    for case in 0..10_000 {
        let seq = random_sequence(&mut rng, 60, 12);
        let n = seq.len();
        let extra = rng.gen_range(0..4);
        let m = seq.support_size() + extra;
        let mut labels: Vec<String> = seq.vocab().tokens().to_vec();
        labels.extend((0..extra).map(|k| format!("unseen{k}")));
        let gt = GroundTruth::with_labels(random_simplex(&mut rng, m), labels).map_err(|e| e.to_string())?;
        let truth = true_count_mass(&gt, &seq).map_err(|e| e.to_string())?;
        let qpi = oracle_natural(&gt, &seq).map_err(|e| e.to_string())?;

        let cfg = HybridConfig::new(rng.gen_range(1..=n), rng.gen_range(0..=n), n).map_err(|e| e.to_string())?;
        let h = hybrid_estimate(&seq, &cfg).map_err(|e| e.to_string())?;
        let dtv = tv_distance(h.mass.as_slice(), truth.as_slice()).map_err(|e| e.to_string())?;
        let l1u = l1_distance(h.unnormalized.as_slice(), truth.as_slice()).map_err(|e| e.to_string())?;
        if dtv > l1u + 1e-12 {
            return Err(format!("case {case}: normalization inequality {dtv} > {l1u}"));
        }
        let mhat_arbitrary = countmass::seqcore::CountMassVector::new(random_simplex(&mut rng, n + 1), true)
            .map_err(|e| e.to_string())?;
        for mhat in [&h.mass, &mhat_arbitrary] {
            let q = natural_on_truth_alphabet(mhat, &gt, &seq).map_err(|e| e.to_string())?;
            let lhs = q.tv_distance(&qpi).map_err(|e| e.to_string())?;
            let rhs = tv_distance(mhat.as_slice(), truth.as_slice()).map_err(|e| e.to_string())?;
            worst = worst.max((lhs - rhs).abs());
            let lump = natural_from_count_mass(mhat, &seq, None).map_err(|e| e.to_string())?;
            let qpi_lump = natural_from_count_mass(&truth, &seq, None).map_err(|e| e.to_string())?;
            let lhs = lump.tv_distance(&qpi_lump).map_err(|e| e.to_string())?;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    if worst > 1e-12 {
        return Err(format!("natural TV identity off by {worst:e}"));
    }
    Ok(format!("10000 instances, identity within {worst:e}, normalization inequality holds"))
}

const SUITE: [&str; 7] = [
    "iid_uniform100.json",
    "iid_bernoulli.json",
    "markov_sticky2.json",
    "markov_cycle3.json",
    "markov_rated.json",
    "hmm_two_regime.json",
    "duplication_k3.json",
];

fn c5_oracle_inequality() -> Outcome {
    let mut replications = 0;
    for name in SUITE {
        let m = model(name);
        for n in [64, 500, 2000] {
            for kind in [EstimatorKind::Hybrid, EstimatorKind::Wingit, EstimatorKind::Plugin] {
                let r = tv_risk_monte_carlo(
                    &m,
                    &RiskConfig {
                        estimator: EstimatorSpec::auto(kind),
                        n,
                        reps: 100,
                        seed: 5,
                        full_breakdown: false,
                    },
                )
                .map_err(|e| format!("{name}: {e}"))?;
                if r.oracle_inequality_violations > 0 || r.normalization_violations > 0 {
                    return Err(format!(
                        "{name} n={n} {kind:?}: {} oracle and {} normalization violations",
                        r.oracle_inequality_violations, r.normalization_violations
                    ));
                }
                replications += r.reps;
            }
        }
    }
    Ok(format!("{replications} replications without a violation"))
}

fn binomial_slack(p: f64, reps: usize) -> f64 {
    3.0 * (p * (1.0 - p) / reps as f64).sqrt()
}

fn c6_bernstein_coverage() -> Outcome {
    let m = ProcessModel::iid(vec![0.5, 0.5]).unwrap();
    let cfg = CoverageConfig {
        inequality: Inequality::Bernstein { v2: Some(0.25) },
        n: 200,
        tau: 1,
        delta: 0.05,
        eps: 1e-6,
        reps: 1000,
        seed: 6,
        target: 1,
    };
    let r = empirical_coverage(&m, &cfg).map_err(|e| e.to_string())?;
    let limit = r.nominal + binomial_slack(r.nominal.min(1.0), r.reps);
    let line = format!("failure fraction {} vs limit {limit:.4}", r.observed);
    if r.observed <= limit {
        Ok(line)
    } else {
        Err(line)
    }
}

fn c7_self_normalized_coverage() -> Outcome {
    let chain = ProcessModel::markov(MarkovModel::new(vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap());
    let n = 40_000;
    let eps = 1.0 / n as f64;
    let tmix = chain.mixing_time(eps / n as f64).map_err(|e| e.to_string())?;
    let delta = 0.05f64;
    if n < 24 * tmix || 0.5 * n as f64 <= 36.0 * (2.0 / delta).ln() * tmix as f64 {
        return Err(format!("parameters miss the gates (tmix {tmix})"));
    }
    let cfg = CoverageConfig {
        inequality: Inequality::SelfNormalized,
        n,
        tau: tmix,
        delta,
        eps,
        reps: 1000,
        seed: 7,
        target: 0,
    };
    let r = empirical_coverage(&chain, &cfg).map_err(|e| e.to_string())?;
    let limit = r.nominal + binomial_slack(r.nominal.min(1.0), r.reps);
    let line = format!(
        "tmix {tmix}, failure fraction {} vs limit {limit:.4}, {} gate misses",
        r.observed, r.gate_failures
    );
    if r.observed <= limit {
        Ok(line)
    } else {
        Err(line)
    }
}

fn c8_rate_shape() -> Outcome {
    let m = model("iid_uniform100.json");
    let grid = [1_000usize, 10_000, 100_000];
    let mut risks = Vec::new();
    for &n in &grid {
        let r = tv_risk_monte_carlo(
            &m,
            &RiskConfig {
                estimator: EstimatorSpec::auto(EstimatorKind::Hybrid),
                n,
                reps: 200,
                seed: 8,
                full_breakdown: false,
            },
        )
        .map_err(|e| e.to_string())?;
        risks.push(r.tv_mean);
    }
    let xs: Vec<f64> = grid.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = risks.iter().map(|r| r.ln()).collect();
    let xm = xs.iter().sum::<f64>() / 3.0;
    let ym = ys.iter().sum::<f64>() / 3.0;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum::<f64>()
        / xs.iter().map(|x| (x - xm).powi(2)).sum::<f64>();
    let decreasing = risks.windows(2).all(|w| w[1] < w[0]);
    let line = format!("risks {risks:.5?}, log-log slope {slope:.4}");
    if decreasing && slope <= -1.0 / 6.0 + 0.05 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn c9_exhaustive_oracle() -> Outcome {
    let pi = [0.3, 0.7];
    let m = ProcessModel::iid(pi.to_vec()).unwrap();
    let gt = GroundTruth::from_model(&m).unwrap();
    let mut exact = 0.0;
    for code in 0..8usize {
        let xs: Vec<usize> = (0..3).map(|k| code >> k & 1).collect();
        let p: f64 = xs.iter().map(|&x| pi[x]).product();
        let seq = TokenSequence::from_raw_ids(&xs);
        let est = plugin_vector(&seq).map_err(|e| e.to_string())?;
        let truth = true_count_mass(&gt, &seq).map_err(|e| e.to_string())?;
        exact += p * tv_distance(est.as_slice(), truth.as_slice()).map_err(|e| e.to_string())?;
    }
    let r = tv_risk_monte_carlo(
        &m,
        &RiskConfig {
            estimator: EstimatorSpec::auto(EstimatorKind::Plugin),
            n: 3,
            reps: 100_000,
            seed: 9,
            full_breakdown: false,
        },
    )
    .map_err(|e| e.to_string())?;
    let line = format!("MC {} vs exact {exact} (se {:.2e})", r.tv_mean, r.tv_se);
    if (r.tv_mean - exact).abs() <= 3.0 * r.tv_se {
        Ok(line)
    } else {
        Err(line)
    }
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_countmass"))
        .args(args)
        .current_dir(workspace())
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

/// Commands pinned by golden files in `tests/golden`.
const GOLDEN: [(&str, &[&str]); 6] = [
    ("estimate_tokens.json", &["estimate", "--tokens", "crates/cli/tests/data/abac.txt", "--tau", "1", "--zeta-bar", "0"]),
    ("estimate_iid.json", &["estimate", "--model", "models/iid_uniform100.json", "--n", "200", "--seed", "17"]),
    ("simulate_markov.txt", &["simulate", "--model", "models/markov_cycle3.json", "--n", "40", "--seed", "3"]),
    ("evaluate_hmm.json", &["evaluate", "--model", "models/hmm_two_regime.json", "--n", "300", "--reps", "20", "--seed", "4"]),
    ("sweep_duplication.csv", &["sweep", "--model", "models/duplication_k3.json", "--n-grid", "100,400", "--reps", "20", "--seed", "5", "--estimator", "hybrid,plugin"]),
    ("bounds_rated.csv", &["bounds", "--model", "models/markov_rated.json", "--n-grid", "100,1000,10000"]),
];

fn c10_determinism() -> Outcome {
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for (file, args) in GOLDEN {
        let first = run_cli(args)?;
        let second = run_cli(args)?;
        if first != second {
            return Err(format!("{file}: reruns differ"));
        }
        let pinned = std::fs::read(golden.join(file)).map_err(|e| format!("{file}: {e}"))?;
        if first != pinned {
            return Err(format!("{file}: output differs from the golden file"));
        }
    }
    Ok(format!("{} commands byte-identical across reruns and golden files", GOLDEN.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("brute-force WingIt equivalence", c1_brute_force),
        ("Good-Turing reduction", c2_good_turing),
        ("simplex identities", c3_simplex),
        ("natural TV identity and normalization inequality", c4_natural_identities),
        ("oracle inequality on the model suite", c5_oracle_inequality),
        ("Bernstein-type coverage", c6_bernstein_coverage),
        ("self-normalized coverage", c7_self_normalized_coverage),
        ("rate shape", c8_rate_shape),
        ("exhaustive-oracle risk", c9_exhaustive_oracle),
        ("CLI determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {:>2} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {:>2} {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
