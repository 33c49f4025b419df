//! Full-access combination of predictors.
//!
//! Following predictor `i` is a state of an auxiliary uniform-metric task
//! system whose task at step `t` charges `f_t(P_i) / D` to state `i`. An
//! unfair-MTS player runs on that system and its distribution is realized by
//! coupled sampling; the algorithm always stands where the sampled predictor
//! stands.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{predictor_cost_table, MtsInstance, PredictorTrace, StepCost, Trajectory, TOL};
use crate::unfair::{sample_coupled_state, unfair_rate_for_epsilon, Distribution, Subroutine};

/// When the player sees the task of step `t` relative to choosing `i_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Wiring {
    /// Feed `c_t` first, then sample `i_t` from the updated distribution.
    Lookahead,
    /// Sample `i_t` from the distribution built on `c_1..c_{t-1}`, then feed.
    Online,
}

impl Wiring {
    pub fn default_for(sub: Subroutine) -> Self {
        match sub {
            Subroutine::OddExponent => Wiring::Lookahead,
            Subroutine::Share => Wiring::Online,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombineConfig {
    pub epsilon: f64,
    pub subroutine: Subroutine,
    #[serde(default)]
    pub wiring: Option<Wiring>,
    /// Overrides the unfairness derived from `epsilon`.
    #[serde(default)]
    pub r: Option<f64>,
}

impl CombineConfig {
    pub fn new(epsilon: f64, subroutine: Subroutine) -> Self {
        Self {
            epsilon,
            subroutine,
            wiring: None,
            r: None,
        }
    }

    pub fn with_r(mut self, r: f64) -> Self {
        self.r = Some(r);
        self
    }

    pub fn with_wiring(mut self, wiring: Wiring) -> Self {
        self.wiring = Some(wiring);
        self
    }

    pub fn wiring(&self) -> Wiring {
        self.wiring.unwrap_or_else(|| Wiring::default_for(self.subroutine))
    }

    /// Unfairness used with `ell` predictors.
    pub fn r_for(&self, ell: usize) -> f64 {
        self.r
            .unwrap_or_else(|| unfair_rate_for_epsilon(self.epsilon, ell.max(2), self.subroutine))
    }
}

/// `c^U_t(i) = f_t(P_i) / D`, indexed `[t][i]`.
pub fn build_uniform_costs(inst: &MtsInstance, traces: &[PredictorTrace]) -> Result<Vec<Vec<f64>>> {
    let d = inst.diameter();
    if d <= 0.0 {
        return Err(Error::structural("combining predictors needs a positive diameter"));
    }
    let mut f = predictor_cost_table(inst, traces)?;
    f.iter_mut().flatten().for_each(|x| *x /= d);
    Ok(f)
}

/// Serializable summary of a run, used for golden comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombineRecord {
    pub follow: Vec<usize>,
    pub steps: Vec<StepCost>,
    pub switches: usize,
    pub total: f64,
    /// FNV-1a digest of the distribution used at each step.
    pub digests: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CombineRun {
    pub trajectory: Trajectory,
    /// Index of the followed predictor at each step.
    pub follow: Vec<usize>,
    pub switches: usize,
    /// Distribution over predictors at each step.
    pub distributions: Vec<Distribution>,
}

impl CombineRun {
    pub fn record(&self) -> CombineRecord {
        CombineRecord {
            follow: self.follow.clone(),
            steps: self.trajectory.steps.clone(),
            switches: self.switches,
            total: self.trajectory.total,
            digests: self.distributions.iter().map(distribution_digest).collect(),
        }
    }
}

pub fn distribution_digest(d: &Distribution) -> u64 {
    let bytes: Vec<u8> = d.p().iter().flat_map(|x| x.to_bits().to_le_bytes()).collect();
    crate::fnv1a64(&bytes)
}

/// The distributions the player holds over the uniform costs, one per step,
/// together with the distribution before the first step.
pub fn combine_distributions(costs: &[Vec<f64>], ell: usize, cfg: &CombineConfig) -> Result<(Distribution, Vec<Distribution>)> {
    let mut alg = cfg.subroutine.build(ell, cfg.r_for(ell), None);
    let initial = alg.distribution()?;
    let wiring = cfg.wiring();
    let mut out = Vec::with_capacity(costs.len());
    for c in costs {
        match wiring {
            Wiring::Lookahead => {
                alg.advance(c)?;
                out.push(alg.distribution()?);
            }
            Wiring::Online => {
                out.push(alg.distribution()?);
                alg.advance(c)?;
            }
        }
    }
    Ok((initial, out))
}

/// Runs the combiner once.
///
/// Online contract: the player has seen `c^U_1..c^U_t` (lookahead wiring) or
/// `c^U_1..c^U_{t-1}` (online wiring) when `i_t` is drawn, and nothing later.
pub fn combine_run<R: Rng + ?Sized>(
    inst: &MtsInstance,
    traces: &[PredictorTrace],
    cfg: &CombineConfig,
    rng: &mut R,
) -> Result<CombineRun> {
    let ell = traces.len();
    let costs = build_uniform_costs(inst, traces)?;
    let t_len = inst.horizon();
    let mut follow = Vec::with_capacity(t_len);
    let mut distributions = Vec::with_capacity(t_len);
    if ell == 1 {
        follow = vec![0; t_len];
        distributions = vec![Distribution::point(1, 0); t_len];
    } else {
        let mut alg = cfg.subroutine.build(ell, cfg.r_for(ell), None);
        let wiring = cfg.wiring();
        let mut prev = alg.distribution()?;
        let mut cur = prev.sample(rng);
        for c in &costs {
            let next = match wiring {
                Wiring::Lookahead => {
                    alg.advance(c)?;
                    alg.distribution()?
                }
                Wiring::Online => {
                    let p = alg.distribution()?;
                    alg.advance(c)?;
                    p
                }
            };
            cur = sample_coupled_state(&prev, &next, cur, rng)?;
            follow.push(cur);
            distributions.push(next.clone());
            prev = next;
        }
    }
    let trajectory = follow_trajectory(inst, traces, &follow)?;
    check_step_decomposition(inst, traces, &follow, &trajectory)?;
    let switches = crate::benchmarks::count_switches(&follow);
    Ok(CombineRun {
        trajectory,
        follow,
        switches,
        distributions,
    })
}

fn follow_trajectory(inst: &MtsInstance, traces: &[PredictorTrace], follow: &[usize]) -> Result<Trajectory> {
    let mut traj = Trajectory::with_capacity(follow.len());
    let mut pos = inst.initial_state();
    for (t, &i) in follow.iter().enumerate() {
        let s = traces[i].at(t);
        traj.push_detour(inst, t, pos, s, s)?;
        pos = s;
    }
    Ok(traj)
}

/// A step that keeps the followed predictor costs exactly `f_t(P_i)`; a step
/// that changes it costs at most `D + f_t(P_i)`.
pub fn check_step_decomposition(
    inst: &MtsInstance,
    traces: &[PredictorTrace],
    follow: &[usize],
    traj: &Trajectory,
) -> Result<()> {
    let d = inst.diameter();
    for (t, &i) in follow.iter().enumerate() {
        let f = crate::model::raw_predictor_step_cost(inst, &traces[i], t);
        let step = traj.steps[t].total();
        let kept = t == 0 || follow[t - 1] == i;
        let ok = if kept {
            (step - f).abs() <= TOL * (1.0 + f)
        } else {
            step <= d + f + TOL * (1.0 + f)
        };
        if !ok {
            return Err(Error::contract(format!(
                "step {t} following predictor {i} cost {step}, predictor paid {f}"
            )));
        }
    }
    Ok(())
}

/// Exact expected cost of [`combine_run`] over its internal randomness.
///
/// Under the coupled sampler the pair `(i_{t-1}, i_t)` has the
/// total-variation coupling of consecutive distributions as its law.
pub fn combine_expected_cost(inst: &MtsInstance, traces: &[PredictorTrace], cfg: &CombineConfig) -> Result<f64> {
    let ell = traces.len();
    if ell == 1 {
        return Ok(crate::model::trace_cost(inst, &traces[0]));
    }
    let costs = build_uniform_costs(inst, traces)?;
    let (initial, dists) = combine_distributions(&costs, ell, cfg)?;
    let m = inst.metric();
    let mut prev = initial;
    let mut total = 0.0;
    for (t, q) in dists.iter().enumerate() {
        let p = prev.p();
        let qv = q.p();
        let surplus: Vec<f64> = p.iter().zip(qv).map(|(a, b)| (b - a).max(0.0)).collect();
        let mass: f64 = surplus.iter().sum();
        for i in 0..ell {
            let from = traces[i].before(inst, t);
            let stay = p[i].min(qv[i]);
            let leave = (p[i] - qv[i]).max(0.0);
            for j in 0..ell {
                let w = if i == j { stay } else { 0.0 }
                    + if mass > 0.0 { leave * surplus[j] / mass } else { 0.0 };
                if w > 0.0 {
                    let to = traces[j].at(t);
                    total += w * (m.d(from, to) + inst.cost(t, to));
                }
            }
        }
        prev = q.clone();
    }
    Ok(total)
}

/// `floor(eps^2 * dyn / (4 D e ln l))`: the switch count up to which the
/// combiner stays within `(1 + eps)^2` of the limited benchmark.
pub fn switch_budget(eps: f64, d: f64, ell: usize, dyn_value: f64) -> usize {
    let denom = 4.0 * d * std::f64::consts::E * (ell as f64).ln();
    let x = eps * eps * dyn_value / denom;
    (x + 1e-9).floor().max(0.0) as usize
}

/// Combines two complete state sequences with two-predictor Combine.
pub fn robustify<R: Rng + ?Sized>(
    inst: &MtsInstance,
    trace_a: &PredictorTrace,
    trace_b: &PredictorTrace,
    cfg: &CombineConfig,
    rng: &mut R,
) -> Result<CombineRun> {
    combine_run(inst, &[trace_a.clone(), trace_b.clone()], cfg, rng)
}
