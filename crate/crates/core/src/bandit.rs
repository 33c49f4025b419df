//! Combining predictors when only one of them can be observed per step.
//!
//! Every step is either an exploitation step, which follows the predictor
//! picked by Share, or (with probability `gamma`) an exploration step, which
//! queries a uniformly random predictor to feed Share an unbiased loss
//! estimate and serves the task by a greedy round trip.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    cap_predictor_costs, is_normalized, CostVector, MetricSpace, MtsInstance, PredictorTrace, Trajectory,
};
use crate::unfair::{sample_coupled_state, unfair_rate_for_epsilon, Distribution, Share, Subroutine, UnfairAlgorithm};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BanditConfig {
    /// Exploration rate.
    pub gamma: f64,
    pub epsilon: f64,
    /// Unfairness handed to Share; derived from `epsilon` when absent.
    pub r: Option<f64>,
}

impl BanditConfig {
    /// `gamma = min(1, epsilon) / 6`.
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::structural(format!("epsilon = {epsilon} must be positive")));
        }
        Self::with_gamma(epsilon, epsilon.min(1.0) / 6.0)
    }

    /// Rejects rates outside `(0, 1/4)`.
    ///
    /// The runners themselves accept any rate in `[0, 1]`, so the degenerate
    /// extremes stay reachable by building the struct directly.
    pub fn with_gamma(epsilon: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 0.25) {
            return Err(Error::structural(format!("gamma = {gamma} outside (0, 1/4)")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::structural(format!("epsilon = {epsilon} must be positive")));
        }
        Ok(Self {
            gamma,
            epsilon,
            r: None,
        })
    }

    pub fn with_r(mut self, r: f64) -> Self {
        self.r = Some(r);
        self
    }

    pub fn r_for(&self, ell: usize) -> f64 {
        self.r
            .unwrap_or_else(|| unfair_rate_for_epsilon(self.epsilon, ell, Subroutine::Share))
    }
}

/// Cheapest place to serve `c` starting from `b`: `argmin_x d(b, x) + c(x)`,
/// ties to the lowest index.
pub fn greedy_state(metric: &MetricSpace, c: &CostVector, b: usize) -> usize {
    (0..metric.len())
        .fold((f64::INFINITY, b), |(best, arg), x| {
            let v = metric.d(b, x) + c.get(x);
            if v < best {
                (v, x)
            } else {
                (best, arg)
            }
        })
        .1
}

/// Importance-free loss estimate: `f / (2D)` on the queried predictor and
/// zero elsewhere.
pub fn estimate_loss(queried: usize, observed: f64, diameter: f64, ell: usize) -> Result<Vec<f64>> {
    if queried >= ell {
        return Err(Error::structural(format!("predictor {queried} out of range")));
    }
    if !(diameter > 0.0) {
        return Err(Error::structural("loss estimates need a positive diameter"));
    }
    if !(0.0..=2.0 * diameter).contains(&observed) {
        return Err(Error::contract(format!(
            "observed cost {observed} outside [0, 2D]; costs must be capped before the bandit loop"
        )));
    }
    let mut f = vec![0.0; ell];
    f[queried] = (observed / (2.0 * diameter)).min(1.0);
    Ok(f)
}

/// Exploration steps and the predictor each of them queries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationSchedule {
    /// `picks[t]` is `Some(i)` when step `t` explores predictor `i`.
    pub picks: Vec<Option<usize>>,
}

impl ExplorationSchedule {
    /// Each step explores independently with probability `gamma`; explored
    /// steps pick a predictor uniformly.
    pub fn sample<R: Rng + ?Sized>(horizon: usize, ell: usize, gamma: f64, rng: &mut R) -> Self {
        let picks = (0..horizon)
            .map(|_| rng.random_bool(gamma).then(|| rng.random_range(0..ell)))
            .collect();
        Self { picks }
    }

    pub fn is_exploration(&self, t: usize) -> bool {
        self.picks[t].is_some()
    }

    pub fn num_explorations(&self) -> usize {
        self.picks.iter().flatten().count()
    }
}

/// Answers `(state, capped cost)` for predictor `i` at step `t`.
pub trait PredictorOracle {
    fn num_predictors(&self) -> usize;

    fn query(&mut self, t: usize, i: usize) -> Result<(usize, f64)>;
}

/// Oracle over recorded traces that enforces a per-step query budget and
/// forbids going back in time.
#[derive(Debug, Clone)]
pub struct TraceOracle {
    states: Vec<Vec<usize>>,
    costs: Vec<Vec<f64>>,
    limit: usize,
    step: Option<usize>,
    used: usize,
}

impl TraceOracle {
    /// Costs are capped at `2D` up front.
    pub fn new(inst: &MtsInstance, traces: &[PredictorTrace], per_step_limit: usize) -> Result<Self> {
        let capped = cap_predictor_costs(inst, traces)?;
        Ok(Self {
            states: traces.iter().map(|tr| tr.states.clone()).collect(),
            costs: capped.table,
            limit: per_step_limit,
            step: None,
            used: 0,
        })
    }

    pub fn with_limit(mut self, per_step_limit: usize) -> Self {
        self.limit = per_step_limit;
        self
    }
}

impl PredictorOracle for TraceOracle {
    fn num_predictors(&self) -> usize {
        self.states.len()
    }

    fn query(&mut self, t: usize, i: usize) -> Result<(usize, f64)> {
        if i >= self.states.len() || t >= self.costs.len() {
            return Err(Error::structural(format!("query ({i}, {t}) out of range")));
        }
        match self.step {
            Some(s) if t < s => {
                return Err(Error::contract(format!("query for step {t} after step {s}")));
            }
            Some(s) if t == s => {}
            _ => {
                self.step = Some(t);
                self.used = 0;
            }
        }
        if self.used >= self.limit {
            return Err(Error::contract(format!(
                "more than {} queries at step {t}",
                self.limit
            )));
        }
        self.used += 1;
        Ok((self.states[i][t], self.costs[t][i]))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    Exploration,
    Exploitation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub t: usize,
    pub queried: Vec<usize>,
    pub states: Vec<usize>,
    pub costs: Vec<f64>,
    pub step: StepKind,
}

/// Every oracle answer of a run, one record per step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryLog {
    pub records: Vec<QueryRecord>,
}

impl QueryLog {
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let line = serde_json::to_string(r).expect("records serialize");
            writeln!(out, "{line}").expect("writing to a string");
        }
        out
    }

    pub fn from_json_lines(s: &str) -> Result<Self> {
        let records = s
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| Error::Parse(e.to_string())))
            .collect::<Result<_>>()?;
        Ok(Self { records })
    }

    pub fn total_queries(&self) -> usize {
        self.records.iter().map(|r| r.queried.len()).sum()
    }
}

/// Outcome of a bandit run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditRun {
    pub trajectory: Trajectory,
    pub log: QueryLog,
    pub schedule: ExplorationSchedule,
    /// Predictor Share pointed at in each step, explored or not.
    pub anchors: Vec<usize>,
    /// Where the run stood at the end of each step.
    pub anchor_states: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Variant {
    Greedy,
    DoubleQuery,
}

/// Runs the bandit combiner: exploration steps serve at the greedy state
/// and walk back to the previous anchor.
pub fn bandit_combine_run<R: Rng + ?Sized>(
    inst: &MtsInstance,
    oracle: &mut dyn PredictorOracle,
    cfg: &BanditConfig,
    rng: &mut R,
) -> Result<BanditRun> {
    run(inst, oracle, cfg, rng, Variant::Greedy)
}

/// Variant that queries Share's predictor on exploration steps as well and
/// moves to its state instead of making the greedy detour.
///
/// With the same seed it draws the same exploration schedule and anchor
/// chain as [`bandit_combine_run`], which makes the two directly comparable.
pub fn bandit_combine_prime_run<R: Rng + ?Sized>(
    inst: &MtsInstance,
    oracle: &mut dyn PredictorOracle,
    cfg: &BanditConfig,
    rng: &mut R,
) -> Result<BanditRun> {
    run(inst, oracle, cfg, rng, Variant::DoubleQuery)
}

fn run<R: Rng + ?Sized>(
    inst: &MtsInstance,
    oracle: &mut dyn PredictorOracle,
    cfg: &BanditConfig,
    rng: &mut R,
    variant: Variant,
) -> Result<BanditRun> {
    let ell = oracle.num_predictors();
    if ell == 0 {
        return Err(Error::structural("need at least one predictor"));
    }
    if !(0.0..=1.0).contains(&cfg.gamma) {
        return Err(Error::structural(format!("gamma = {} outside [0, 1]", cfg.gamma)));
    }
    if !is_normalized(inst) {
        return Err(Error::contract("bandit runs need normalized costs (some state free every step)"));
    }
    let t_len = inst.horizon();
    let diameter = inst.diameter();
    let schedule = ExplorationSchedule::sample(t_len, ell, cfg.gamma, rng);

    let mut share = Share::for_unfairness(ell, cfg.r_for(ell));
    let mut prev_dist = share.distribution()?;
    let mut anchor = prev_dist.sample(rng);
    let mut b = inst.initial_state();

    let mut trajectory = Trajectory::with_capacity(t_len);
    let mut log = QueryLog::default();
    let mut anchors = Vec::with_capacity(t_len);
    let mut anchor_states = Vec::with_capacity(t_len);

    for t in 0..t_len {
        // Share looks only at earlier estimates, so the anchor for step `t`
        // is drawn before this step's estimate is fed.
        let dist: Distribution = share.distribution()?;
        anchor = sample_coupled_state(&prev_dist, &dist, anchor, rng)?;
        prev_dist = dist;
        anchors.push(anchor);

        match schedule.picks[t] {
            Some(i) => {
                let (state_i, f) = oracle.query(t, i)?;
                share.advance(&estimate_loss(i, f, diameter, ell)?)?;
                let mut record = QueryRecord {
                    t,
                    queried: vec![i],
                    states: vec![state_i],
                    costs: vec![f],
                    step: StepKind::Exploration,
                };
                match variant {
                    Variant::Greedy => {
                        let g = greedy_state(inst.metric(), &inst.costs()[t], b);
                        trajectory.push_detour(inst, t, b, g, b)?;
                    }
                    Variant::DoubleQuery => {
                        let (state_a, fa) = oracle.query(t, anchor)?;
                        record.queried.push(anchor);
                        record.states.push(state_a);
                        record.costs.push(fa);
                        trajectory.push_detour(inst, t, b, state_a, state_a)?;
                        b = state_a;
                    }
                }
                log.records.push(record);
            }
            None => {
                share.advance(&vec![0.0; ell])?;
                let (state_a, fa) = oracle.query(t, anchor)?;
                trajectory.push_detour(inst, t, b, state_a, state_a)?;
                b = state_a;
                log.records.push(QueryRecord {
                    t,
                    queried: vec![anchor],
                    states: vec![state_a],
                    costs: vec![fa],
                    step: StepKind::Exploitation,
                });
            }
        }
        anchor_states.push(b);
    }
    Ok(BanditRun {
        trajectory,
        log,
        schedule,
        anchors,
        anchor_states,
    })
}
