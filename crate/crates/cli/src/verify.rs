//! Self-contained verification suites.

use mts_core::bandit::{estimate_loss, ExplorationSchedule};
use mts_core::benchmarks::{
    brute_force_oracle, dyn_, dyn_limited, dyn_rho, dyn_tilde_kserver, kserver_dyn, kserver_opt, offline_opt,
    BruteVariant,
};
use mts_core::instances::{
    gen_kserver_line_lb, kserver_config_mts, mixed_predictors, mts_to_lgt, random_lazy_line_kserver, random_mts, KServerInstance,
    MetricKind, RandomMtsParams,
};
use mts_core::{CostVector, MetricSpace, MtsInstance, PredictorTrace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Dynamic programs against exhaustive enumeration.
    DpOracle,
    /// Shortest layered-graph path against DYN.
    Lgt,
    /// Mean of the bandit loss estimate.
    Unbiased,
    /// Line lower bound: some optimum serves with a suggested server.
    Theorem1,
    /// The relaxed k-server benchmark never exceeds DYN.
    DynTilde,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::DpOracle => "dp-oracle",
            Suite::Lgt => "lgt",
            Suite::Unbiased => "unbiased",
            Suite::Theorem1 => "theorem1",
            Suite::DynTilde => "dyn-tilde",
            Suite::All => "all",
        }
    }

    pub fn members(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![Suite::DpOracle, Suite::Lgt, Suite::Unbiased, Suite::Theorem1, Suite::DynTilde],
            s => vec![s],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    pub checked: usize,
    pub failures: Vec<String>,
    pub summary: String,
}

impl SuiteReport {
    fn new(suite: Suite, checked: usize, failures: Vec<String>, summary: String) -> Self {
        Self {
            suite: suite.name().into(),
            passed: failures.is_empty(),
            checked,
            failures,
            summary,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {} ({} checks, {} failures)",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.summary,
            self.checked,
            self.failures.len()
        )
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Vec<SuiteReport> {
    suite
        .members()
        .into_iter()
        .map(|s| match s {
            Suite::DpOracle => dp_oracle(1000, seed),
            Suite::Lgt => lgt(100, seed),
            Suite::Unbiased => unbiased(&[0.05, 0.2], 100_000, seed),
            Suite::Theorem1 => theorem1(&[2, 3], 6),
            Suite::DynTilde => dyn_tilde(100, seed),
            Suite::All => unreachable!("expanded above"),
        })
        .collect()
}

const TOL: f64 = 1e-9;

/// Random line instance with `n <= max_n` points, `T <= max_t` steps and
/// `l <= max_ell` arbitrary predictor traces.
pub fn small_instance<R: Rng>(rng: &mut R, max_n: usize, max_t: usize, max_ell: usize) -> (MtsInstance, Vec<PredictorTrace>) {
    let n = rng.random_range(2..=max_n);
    let t_len = rng.random_range(1..=max_t);
    let ell = rng.random_range(1..=max_ell);
    let mut pos: Vec<f64> = (0..n).map(|i| i as f64 + rng.random::<f64>() * 0.9).collect();
    pos.sort_by(f64::total_cmp);
    let metric = MetricSpace::line(&pos).expect("distinct points");
    let costs = (0..t_len)
        .map(|_| CostVector::new((0..n).map(|_| rng.random::<f64>() * 3.0).collect()).expect("finite costs"))
        .collect();
    let inst = MtsInstance::new(metric, rng.random_range(0..n), costs).expect("valid instance");
    let traces = (0..ell)
        .map(|_| PredictorTrace::new((0..t_len).map(|_| rng.random_range(0..n)).collect()))
        .collect();
    (inst, traces)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL
}

pub fn dp_oracle(count: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    let mut checked = 0;
    for k in 0..count {
        let (inst, traces) = small_instance(&mut rng, 4, 6, 3);
        let mut check = |what: String, dp: mts_core::Result<f64>, variant: BruteVariant| {
            checked += 1;
            let brute = brute_force_oracle(&inst, &traces, variant);
            match (dp, brute) {
                (Ok(a), Ok(b)) if close(a, b) => {}
                (a, b) => failures.push(format!("instance {k} {what}: dp {a:?} vs enumeration {b:?}")),
            }
        };
        check("dyn".into(), dyn_(&inst, &traces).map(|x| x.0), BruteVariant::Dyn);
        for m in 0..=inst.horizon() {
            check(
                format!("dyn_m({m})"),
                dyn_limited(&inst, &traces, m).map(|x| x.0),
                BruteVariant::DynLimited(m),
            );
        }
        for rho in [0.0, 1.0, 5.0] {
            check(
                format!("dyn_rho({rho})"),
                dyn_rho(&inst, &traces, rho).map(|x| x.0),
                BruteVariant::DynRho {
                    rho,
                    full_charge: false,
                },
            );
        }
        check("opt".into(), offline_opt(&inst).map(|x| x.0), BruteVariant::Opt);
    }
    SuiteReport::new(
        Suite::DpOracle,
        checked,
        failures,
        format!("{count} random instances, n <= 4, T <= 6, l <= 3"),
    )
}

pub fn lgt(count: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x16);
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for k in 0..count {
        let metric = [MetricKind::Uniform, MetricKind::Line, MetricKind::Euclidean][k % 3];
        let params = RandomMtsParams {
            n: rng.random_range(2..=8),
            horizon: rng.random_range(1..=60),
            metric,
            max_cost: 2.0,
        };
        let outcome = random_mts(&params, &mut rng).and_then(|inst| {
            let ell = rng.random_range(1..=5);
            let traces = mixed_predictors(&inst, ell, &mut rng)?;
            let path = mts_to_lgt(&inst, &traces)?.shortest_path();
            Ok((path, dyn_(&inst, &traces)?.0))
        });
        match outcome {
            Ok((path, d)) => {
                worst = worst.max((path - d).abs());
                if !close(path, d) {
                    failures.push(format!("instance {k}: path {path} vs dyn {d}"));
                }
            }
            Err(e) => failures.push(format!("instance {k}: {e}")),
        }
    }
    SuiteReport::new(Suite::Lgt, count, failures, format!("max |path - dyn| = {worst:.3e}"))
}

/// Per-coordinate empirical mean, standard error and target of the loss
/// estimate for one exploration rate.
#[derive(Debug, Clone, PartialEq)]
pub struct UnbiasedStats {
    pub gamma: f64,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub expected: Vec<f64>,
}

impl UnbiasedStats {
    pub fn within(&self, sigmas: f64) -> bool {
        self.mean
            .iter()
            .zip(&self.stderr)
            .zip(&self.expected)
            .all(|((m, s), e)| (m - e).abs() <= sigmas * s)
    }
}

/// Draws `draws` single-step exploration decisions for fixed costs
/// `f = (1, 2)` with `D = 1`, `l = 2`.
pub fn unbiased_stats(gamma: f64, draws: usize, seed: u64) -> UnbiasedStats {
    let f = [1.0, 2.0];
    let (d, ell) = (1.0, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = vec![0.0; ell];
    let mut sq = vec![0.0; ell];
    for _ in 0..draws {
        if let Some(i) = ExplorationSchedule::sample(1, ell, gamma, &mut rng).picks[0] {
            let est = estimate_loss(i, f[i], d, ell).expect("costs within [0, 2D]");
            for j in 0..ell {
                sum[j] += est[j];
                sq[j] += est[j] * est[j];
            }
        }
    }
    let n = draws as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let stderr = mean
        .iter()
        .zip(&sq)
        .map(|(m, q)| ((q / n - m * m).max(0.0) / n).sqrt())
        .collect();
    let expected = f.iter().map(|x| gamma / (2.0 * d * ell as f64) * x).collect();
    UnbiasedStats {
        gamma,
        mean,
        stderr,
        expected,
    }
}

pub fn unbiased(gammas: &[f64], draws: usize, seed: u64) -> SuiteReport {
    let mut failures = Vec::new();
    let mut parts = Vec::new();
    for (k, &g) in gammas.iter().enumerate() {
        let s = unbiased_stats(g, draws, seed.wrapping_add(k as u64));
        parts.push(format!("gamma={g}: mean {:?} target {:?}", round(&s.mean), round(&s.expected)));
        if !s.within(3.0) {
            failures.push(format!("gamma={g}: mean {:?} outside 3 se of {:?}", s.mean, s.expected));
        }
    }
    SuiteReport::new(Suite::Unbiased, gammas.len(), failures, parts.join("; "))
}

fn round(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 1e5).round() / 1e5).collect()
}

/// Every request sequence of length `1..=max_len` over `k + 1` line points.
fn sequences(points: usize, max_len: usize) -> impl Iterator<Item = Vec<usize>> {
    (1..=max_len).flat_map(move |len| {
        (0..points.pow(len as u32)).map(move |mut code| {
            (0..len)
                .map(|_| {
                    let x = code % points;
                    code /= points;
                    x
                })
                .collect()
        })
    })
}

/// For each request sequence on the line lower-bound instance, the optimum
/// restricted to suggested servers equals the unrestricted optimum, and both
/// agree with the hole encoding.
pub fn theorem1(ks: &[usize], max_len: usize) -> SuiteReport {
    let mut failures = Vec::new();
    let mut checked = 0;
    for &k in ks {
        for requests in sequences(k + 1, max_len) {
            checked += 1;
            let outcome = gen_kserver_line_lb(k, &requests).and_then(|lb| {
                let opt = kserver_opt(&lb.kserver)?;
                let restricted = dyn_tilde_kserver(&lb.kserver, &lb.suggestions)?;
                let hole = offline_opt(&lb.mts)?.0;
                Ok((opt, restricted, hole))
            });
            match outcome {
                Ok((opt, restricted, hole)) => {
                    if !close(opt, restricted) || !close(opt, hole) {
                        failures.push(format!(
                            "k={k} requests {requests:?}: opt {opt}, suggested-only {restricted}, hole {hole}"
                        ));
                    }
                }
                Err(e) => failures.push(format!("k={k} requests {requests:?}: {e}")),
            }
        }
    }
    SuiteReport::new(
        Suite::Theorem1,
        checked,
        failures,
        format!("k in {ks:?}, all request sequences of length <= {max_len}"),
    )
}

/// The introductory example: servers at 0 and 100, requests at 10 then 90,
/// one predictor always naming the left server and one the right.
pub fn intro_example() -> (KServerInstance, Vec<Vec<usize>>) {
    let m = MetricSpace::line(&[0.0, 10.0, 90.0, 100.0]).expect("distinct points");
    let kinst = KServerInstance::new(m, vec![0, 3], vec![1, 2]).expect("valid instance");
    (kinst, vec![vec![0, 0], vec![1, 1]])
}

pub fn dyn_tilde(count: usize, seed: u64) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD7);
    let mut failures = Vec::new();
    for k in 0..count {
        let n = rng.random_range(3..=6);
        let servers = rng.random_range(1..n.min(4));
        let horizon = rng.random_range(1..=10);
        let ell = rng.random_range(1..=3);
        let outcome = random_lazy_line_kserver(n, servers, horizon, ell, &mut rng).and_then(|(kinst, named)| {
            Ok((dyn_tilde_kserver(&kinst, &named)?, kserver_dyn(&kinst, &named)?))
        });
        match outcome {
            Ok((tilde, d)) if tilde <= d + TOL => {}
            Ok((tilde, d)) => failures.push(format!("instance {k}: dyn_tilde {tilde} > dyn {d}")),
            Err(e) => failures.push(format!("instance {k}: {e}")),
        }
    }
    let (kinst, named) = intro_example();
    let values = dyn_tilde_kserver(&kinst, &named).and_then(|tilde| {
        let (mts, traces) = kserver_config_mts(&kinst, &named)?;
        Ok((tilde, dyn_(&mts, &traces)?.0, dyn_limited(&mts, &traces, 0)?.0))
    });
    let summary = match values {
        Ok((tilde, d, d0)) => {
            if !(close(tilde, 20.0) && close(d, 30.0) && close(d0, 90.0) && tilde < d) {
                failures.push(format!("intro example: dyn_tilde {tilde}, dyn {d}, dyn_m(0) {d0}"));
            }
            format!("intro example dyn_tilde = {tilde}, dyn = {d}, dyn_m(0) = {d0}")
        }
        Err(e) => {
            failures.push(format!("intro example: {e}"));
            "intro example failed".into()
        }
    };
    SuiteReport::new(Suite::DynTilde, count + 1, failures, summary)
}
