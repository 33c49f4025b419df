//! Trial execution shared by `run` and `sweep`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use mts_core::bandit::{bandit_combine_prime_run, bandit_combine_run, BanditConfig, TraceOracle};
use mts_core::benchmarks::{count_switches, dyn_, dyn_limited, dyn_rho, offline_opt};
use mts_core::combine::{combine_run, switch_budget, CombineConfig, Wiring};
use mts_core::io::load_instance;
use mts_core::unfair::{unfair_rate_for_epsilon, Subroutine};
use mts_core::{normalize_costs, MtsInstance, PredictorTrace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::records::{ratio, sort_records, TrialRecord};
use crate::seed::derive_trial_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Algo {
    /// Full access to every predictor.
    Combine,
    /// One predictor query per step.
    Bandit,
    /// Bandit variant with a second query on exploration steps.
    BanditPrime,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Combine => "combine",
            Algo::Bandit => "bandit",
            Algo::BanditPrime => "bandit-prime",
        }
    }
}

/// A fully resolved `run` request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub instances: Vec<PathBuf>,
    pub algo: Algo,
    pub subroutine: Subroutine,
    pub epsilon: f64,
    /// Bandit exploration rate; `min(1, epsilon) / 6` when absent.
    pub gamma: Option<f64>,
    pub wiring: Option<Wiring>,
    /// Unfairness override.
    pub r: Option<f64>,
    /// Switch limit for the limited benchmark; derived when absent.
    pub m: Option<usize>,
    /// Switch price for the priced benchmark; derived when absent.
    pub rho: Option<f64>,
    pub trials: u64,
    pub seed: u64,
}

impl RunSpec {
    pub fn validate(&self) -> CliResult<()> {
        if self.instances.is_empty() {
            return Err(CliError::Config("no instance given".into()));
        }
        if self.trials == 0 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(CliError::Config(format!("epsilon = {} must be positive", self.epsilon)));
        }
        if self.algo != Algo::Combine {
            if self.subroutine != Subroutine::Share {
                return Err(CliError::Config("bandit algorithms only run with share".into()));
            }
            if self.wiring.is_some() {
                return Err(CliError::Config("wiring applies to combine only".into()));
            }
            if let Some(g) = self.gamma {
                BanditConfig::with_gamma(self.epsilon, g)?;
            }
        }
        if self.r.is_some_and(|r| !(r > 0.0)) {
            return Err(CliError::Config("r must be positive".into()));
        }
        if self.rho.is_some_and(|r| !(r >= 0.0)) {
            return Err(CliError::Config("rho must be non-negative".into()));
        }
        instance_ids(&self.instances)?;
        Ok(())
    }

    fn params(&self, r: f64) -> String {
        let mut p = vec![format!("epsilon={}", self.epsilon), format!("r={}", crate::records::fmt_num(r))];
        match self.algo {
            Algo::Combine => {
                let cfg = self.combine_config();
                p.insert(0, format!("subroutine={}", self.subroutine));
                p.push(format!("wiring={}", wiring_name(cfg.wiring())));
            }
            Algo::Bandit | Algo::BanditPrime => {
                p.push(format!("gamma={}", crate::records::fmt_num(self.bandit_config().gamma)));
            }
        }
        p.join(";")
    }

    fn combine_config(&self) -> CombineConfig {
        let mut cfg = CombineConfig::new(self.epsilon, self.subroutine);
        cfg.wiring = self.wiring;
        cfg.r = self.r;
        cfg
    }

    fn bandit_config(&self) -> BanditConfig {
        BanditConfig {
            gamma: self.gamma.unwrap_or(self.epsilon.min(1.0) / 6.0),
            epsilon: self.epsilon,
            r: self.r,
        }
    }
}

pub fn wiring_name(w: Wiring) -> &'static str {
    match w {
        Wiring::Lookahead => "lookahead",
        Wiring::Online => "online",
    }
}

pub fn parse_wiring(s: &str) -> Result<Wiring, String> {
    match s {
        "lookahead" => Ok(Wiring::Lookahead),
        "online" => Ok(Wiring::Online),
        _ => Err(format!("unknown wiring {s:?} (expected lookahead or online)")),
    }
}

/// Instance ids are file stems and must be unique.
pub fn instance_ids(paths: &[PathBuf]) -> CliResult<Vec<String>> {
    let ids: Vec<String> = paths
        .iter()
        .map(|p| {
            p.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .ok_or_else(|| CliError::Config(format!("{} has no file name", p.display())))
        })
        .collect::<CliResult<_>>()?;
    let unique: BTreeSet<&String> = ids.iter().collect();
    if unique.len() != ids.len() {
        return Err(CliError::Config("instance file names must be unique".into()));
    }
    Ok(ids)
}

/// Benchmarks of one instance under the parameters of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Benchmarks {
    pub dyn_value: f64,
    pub dyn_m: f64,
    pub m: usize,
    pub dyn_rho: f64,
    pub rho: f64,
    pub opt: f64,
}

/// The switch price and budget under which the algorithm's guarantee holds:
/// `2 D r` and the combiner budget for Combine, `3 D l r / gamma` and
/// `floor(epsilon * dyn / rho)` for the bandit algorithms.
pub fn default_m_rho(spec: &RunSpec, d: f64, ell: usize, dyn_value: f64, r: f64) -> (usize, f64) {
    match spec.algo {
        Algo::Combine => (switch_budget(spec.epsilon, d, ell, dyn_value), 2.0 * d * r),
        Algo::Bandit | Algo::BanditPrime => {
            let rho = 3.0 * d * ell as f64 * r / spec.bandit_config().gamma;
            ((spec.epsilon * dyn_value / rho + 1e-9).floor() as usize, rho)
        }
    }
}

fn unfairness(spec: &RunSpec, ell: usize) -> f64 {
    spec.r.unwrap_or_else(|| match spec.algo {
        Algo::Combine => unfair_rate_for_epsilon(spec.epsilon, ell.max(2), spec.subroutine),
        Algo::Bandit | Algo::BanditPrime => unfair_rate_for_epsilon(spec.epsilon, ell.max(2), Subroutine::Share),
    })
}

pub fn compute_benchmarks(spec: &RunSpec, inst: &MtsInstance, traces: &[PredictorTrace]) -> CliResult<Benchmarks> {
    let (dyn_value, _) = dyn_(inst, traces)?;
    let r = unfairness(spec, traces.len());
    let (m_default, rho_default) = default_m_rho(spec, inst.diameter(), traces.len(), dyn_value, r);
    let m = spec.m.unwrap_or(m_default).min(inst.horizon());
    let rho = spec.rho.unwrap_or(rho_default);
    let (dyn_m, _) = dyn_limited(inst, traces, m)?;
    let (dyn_rho_value, _) = dyn_rho(inst, traces, rho)?;
    let (opt, _) = offline_opt(inst)?;
    Ok(Benchmarks {
        dyn_value,
        dyn_m,
        m,
        dyn_rho: dyn_rho_value,
        rho,
        opt,
    })
}

/// Cost and switch count of one trial.
pub fn run_trial(spec: &RunSpec, inst: &MtsInstance, traces: &[PredictorTrace], seed: u64) -> CliResult<(f64, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match spec.algo {
        Algo::Combine => {
            let run = combine_run(inst, traces, &spec.combine_config(), &mut rng)?;
            Ok((run.trajectory.total, run.switches))
        }
        Algo::Bandit | Algo::BanditPrime => {
            // Normalizing shifts every trajectory by the same constant, which
            // is added back so costs stay comparable with the benchmarks.
            let (norm, offsets) = normalize_costs(inst);
            let shift: f64 = offsets.iter().sum();
            let limit = if spec.algo == Algo::Bandit { 1 } else { 2 };
            let mut oracle = TraceOracle::new(&norm, traces, limit)?;
            let cfg = spec.bandit_config();
            let run = if spec.algo == Algo::Bandit {
                bandit_combine_run(&norm, &mut oracle, &cfg, &mut rng)?
            } else {
                bandit_combine_prime_run(&norm, &mut oracle, &cfg, &mut rng)?
            };
            Ok((run.trajectory.total + shift, count_switches(&run.anchors)))
        }
    }
}

fn load(path: &Path) -> CliResult<(MtsInstance, Vec<PredictorTrace>)> {
    let (inst, traces) =
        load_instance(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if traces.is_empty() {
        return Err(CliError::Config(format!("{} has no predictors", path.display())));
    }
    Ok((inst, traces))
}

/// Runs every trial of `spec`; rows come back sorted by `(instance_id, trial)`.
pub fn execute(spec: &RunSpec) -> CliResult<Vec<TrialRecord>> {
    spec.validate()?;
    let ids = instance_ids(&spec.instances)?;
    let mut records = Vec::new();
    for (id, path) in ids.iter().zip(&spec.instances) {
        let (inst, traces) = load(path)?;
        let bench = compute_benchmarks(spec, &inst, &traces)?;
        let params = spec.params(unfairness(spec, traces.len()));
        let rows: Vec<TrialRecord> = (0..spec.trials)
            .into_par_iter()
            .map(|trial| {
                let seed = derive_trial_seed(spec.seed, id, trial);
                let (cost, switches) = run_trial(spec, &inst, &traces, seed)?;
                Ok(TrialRecord {
                    instance_id: id.clone(),
                    algo: spec.algo.name().into(),
                    params: params.clone(),
                    trial,
                    seed,
                    cost,
                    switches,
                    dyn_value: bench.dyn_value,
                    dyn_m: bench.dyn_m,
                    m: bench.m,
                    dyn_rho: bench.dyn_rho,
                    rho: bench.rho,
                    opt: bench.opt,
                    ratio_dyn: ratio(cost, bench.dyn_value),
                    ratio_dyn_m: ratio(cost, bench.dyn_m),
                })
            })
            .collect::<CliResult<_>>()?;
        records.extend(rows);
    }
    sort_records(&mut records);
    Ok(records)
}

/// A grid of runs over algorithms, subroutines and accuracies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub instances: Vec<PathBuf>,
    pub algos: Vec<Algo>,
    #[serde(default = "default_subroutines")]
    pub subroutines: Vec<Subroutine>,
    pub epsilons: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_subroutines() -> Vec<Subroutine> {
    vec![Subroutine::OddExponent, Subroutine::Share]
}

fn default_trials() -> u64 {
    1
}

impl SweepSpec {
    /// Bandit algorithms only pair with Share.
    pub fn expand(&self) -> Vec<RunSpec> {
        let mut out = Vec::new();
        for &algo in &self.algos {
            for &sub in &self.subroutines {
                if algo != Algo::Combine && sub != Subroutine::Share {
                    continue;
                }
                for &epsilon in &self.epsilons {
                    out.push(RunSpec {
                        instances: self.instances.clone(),
                        algo,
                        subroutine: sub,
                        epsilon,
                        gamma: None,
                        wiring: None,
                        r: None,
                        m: None,
                        rho: None,
                        trials: self.trials,
                        seed: self.seed,
                    });
                }
            }
        }
        out
    }
}

pub fn execute_sweep(spec: &SweepSpec) -> CliResult<Vec<TrialRecord>> {
    let runs = spec.expand();
    if runs.is_empty() {
        return Err(CliError::Config("sweep expands to no runs".into()));
    }
    let mut records = Vec::new();
    for run in &runs {
        records.extend(execute(run)?);
    }
    sort_records(&mut records);
    Ok(records)
}
