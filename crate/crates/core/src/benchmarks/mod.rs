//! Exact offline benchmarks computed by dynamic programming.
//!
//! A schedule names the predictor followed at every step; following `P_j` at
//! step `t` means standing on `phi_{j,t}`. All predictors start at the
//! instance's initial state, so the first choice is never a switch.

mod brute;
mod coupon;
mod kserver;
mod report;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_traces, MtsInstance, PredictorTrace};

pub use brute::{brute_force_oracle, BruteVariant, BRUTE_FORCE_LIMIT};
pub use coupon::{coupon_offline_strategy, CouponStrategyOutcome};
pub use kserver::{dyn_tilde_kserver, kserver_dyn, kserver_opt, KSERVER_STATE_LIMIT};
pub use report::{BenchmarkReport, BenchmarkRow, ParamValue, BENCHMARK_CSV_HEADER};

/// A predictor-index sequence with its switch count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub sigma: Vec<usize>,
    pub switches: usize,
}

impl Schedule {
    pub fn new(sigma: Vec<usize>) -> Self {
        let switches = count_switches(&sigma);
        Self { sigma, switches }
    }

    /// The states visited when following this schedule.
    pub fn states(&self, traces: &[PredictorTrace]) -> Vec<usize> {
        self.sigma
            .iter()
            .enumerate()
            .map(|(t, &j)| traces[j].at(t))
            .collect()
    }
}

pub fn count_switches(sigma: &[usize]) -> usize {
    sigma.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Cost of moving to predictor `j`'s state at step `t` from predictor `i`'s
/// state at step `t - 1`, plus the service there.
#[inline]
fn follow_cost(inst: &MtsInstance, traces: &[PredictorTrace], t: usize, i: usize, j: usize) -> f64 {
    let to = traces[j].at(t);
    let from = if t == 0 {
        inst.initial_state()
    } else {
        traces[i].at(t - 1)
    };
    inst.metric().d(from, to) + inst.cost(t, to)
}

/// `f_t(P_j)` without the infeasibility check.
#[inline]
fn own_cost(inst: &MtsInstance, traces: &[PredictorTrace], t: usize, j: usize) -> f64 {
    follow_cost(inst, traces, t, j, j)
}

fn check_feasible(v: &[f64], t: usize) -> Result<()> {
    if v.iter().all(|x| !x.is_finite()) {
        Err(Error::InfeasibleBenchmark { t })
    } else {
        Ok(())
    }
}

fn lowest_argmin(v: &[f64]) -> (f64, usize) {
    v.iter()
        .enumerate()
        .fold((f64::INFINITY, 0), |(b, bi), (i, &x)| if x < b { (x, i) } else { (b, bi) })
}

fn backtrack(parent: &[Vec<usize>], last: usize) -> Vec<usize> {
    let mut sigma = vec![0; parent.len()];
    let mut cur = last;
    for t in (0..parent.len()).rev() {
        sigma[t] = cur;
        cur = parent[t][cur];
    }
    sigma
}

/// Cheapest schedule that stands on some predictor's state at every step.
pub fn dyn_(inst: &MtsInstance, traces: &[PredictorTrace]) -> Result<(f64, Schedule)> {
    validate_traces(inst, traces)?;
    let ell = traces.len();
    let mut v = vec![0.0; ell];
    let mut parent = Vec::with_capacity(inst.horizon());
    for t in 0..inst.horizon() {
        let mut next = vec![f64::INFINITY; ell];
        let mut par = vec![0; ell];
        for j in 0..ell {
            if t == 0 {
                next[j] = follow_cost(inst, traces, 0, j, j);
                par[j] = j;
                continue;
            }
            for i in 0..ell {
                let cand = v[i] + follow_cost(inst, traces, t, i, j);
                if cand < next[j] {
                    next[j] = cand;
                    par[j] = i;
                }
            }
        }
        check_feasible(&next, t)?;
        v = next;
        parent.push(par);
    }
    let (value, last) = lowest_argmin(&v);
    Ok((value, Schedule::new(backtrack(&parent, last))))
}

/// Like [`dyn_`] but with at most `m` index changes.
pub fn dyn_limited(inst: &MtsInstance, traces: &[PredictorTrace], m: usize) -> Result<(f64, Schedule)> {
    validate_traces(inst, traces)?;
    let ell = traces.len();
    let t_len = inst.horizon();
    let m = m.min(t_len.saturating_sub(1));
    let layers = m + 1;
    let idx = |j: usize, s: usize| j * layers + s;
    let mut v = vec![f64::INFINITY; ell * layers];
    // parent[t][(j, s)] = predecessor predictor; its switch count follows.
    let mut parent: Vec<Vec<usize>> = Vec::with_capacity(t_len);
    for t in 0..t_len {
        let mut next = vec![f64::INFINITY; ell * layers];
        let mut par = vec![0; ell * layers];
        for j in 0..ell {
            if t == 0 {
                next[idx(j, 0)] = follow_cost(inst, traces, 0, j, j);
                par[idx(j, 0)] = j;
                continue;
            }
            for s in 0..layers {
                let mut best = v[idx(j, s)] + follow_cost(inst, traces, t, j, j);
                let mut arg = j;
                if s > 0 {
                    for i in (0..ell).filter(|&i| i != j) {
                        let cand = v[idx(i, s - 1)] + follow_cost(inst, traces, t, i, j);
                        if cand < best || (cand == best && i < arg) {
                            best = cand;
                            arg = i;
                        }
                    }
                }
                next[idx(j, s)] = best;
                par[idx(j, s)] = arg;
            }
        }
        check_feasible(&next, t)?;
        v = next;
        parent.push(par);
    }
    let (value, cell) = lowest_argmin(&v);
    let (mut j, mut s) = (cell / layers, cell % layers);
    let mut sigma = vec![0; t_len];
    for t in (0..t_len).rev() {
        sigma[t] = j;
        let i = parent[t][idx(j, s)];
        if i != j {
            s -= 1;
        }
        j = i;
    }
    Ok((value, Schedule::new(sigma)))
}

/// Flat-fee switching benchmark.
///
/// A step that keeps following `P_j` costs `f_t(P_j)`. A step that switches
/// to `P_j` costs `rho` plus the service at `phi_{j,t}`, or `rho + f_t(P_j)`
/// with `full_charge`.
pub fn dyn_rho_with(
    inst: &MtsInstance,
    traces: &[PredictorTrace],
    rho: f64,
    full_charge: bool,
) -> Result<(f64, Schedule)> {
    validate_traces(inst, traces)?;
    let ell = traces.len();
    let mut v = vec![0.0; ell];
    let mut parent = Vec::with_capacity(inst.horizon());
    for t in 0..inst.horizon() {
        let mut next = vec![f64::INFINITY; ell];
        let mut par = vec![0; ell];
        let (best, arg) = lowest_argmin(&v);
        for j in 0..ell {
            let own = own_cost(inst, traces, t, j);
            par[j] = j;
            if t == 0 {
                next[j] = own;
                continue;
            }
            next[j] = v[j] + own;
            let switch_step = if full_charge {
                rho + own
            } else {
                rho + inst.cost(t, traces[j].at(t))
            };
            // Best predecessor other than `j` itself.
            let (other, oarg) = if arg != j {
                (best, arg)
            } else {
                v.iter()
                    .enumerate()
                    .filter(|&(i, _)| i != j)
                    .fold((f64::INFINITY, j), |(b, bi), (i, &x)| if x < b { (x, i) } else { (b, bi) })
            };
            let cand = other + switch_step;
            if cand < next[j] {
                next[j] = cand;
                par[j] = oarg;
            }
        }
        check_feasible(&next, t)?;
        v = next;
        parent.push(par);
    }
    let (value, last) = lowest_argmin(&v);
    Ok((value, Schedule::new(backtrack(&parent, last))))
}

pub fn dyn_rho(inst: &MtsInstance, traces: &[PredictorTrace], rho: f64) -> Result<(f64, Schedule)> {
    dyn_rho_with(inst, traces, rho, false)
}

/// The unrestricted offline optimum and one optimal state sequence.
pub fn offline_opt(inst: &MtsInstance) -> Result<(f64, Vec<usize>)> {
    let n = inst.num_states();
    let m = inst.metric();
    let s0 = inst.initial_state();
    let mut v: Vec<f64> = (0..n).map(|x| if x == s0 { 0.0 } else { f64::INFINITY }).collect();
    let mut parent = Vec::with_capacity(inst.horizon());
    for t in 0..inst.horizon() {
        let mut next = vec![f64::INFINITY; n];
        let mut par = vec![0; n];
        for x in 0..n {
            let c = inst.cost(t, x);
            if !c.is_finite() {
                continue;
            }
            for y in 0..n {
                let cand = v[y] + m.d(y, x);
                if cand < next[x] {
                    next[x] = cand;
                    par[x] = y;
                }
            }
            next[x] += c;
        }
        check_feasible(&next, t)?;
        v = next;
        parent.push(par);
    }
    let (value, last) = lowest_argmin(&v);
    Ok((value, backtrack(&parent, last)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{trajectory_cost, CostVector, MetricSpace, INFEASIBLE};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn two_point() -> (MtsInstance, Vec<PredictorTrace>) {
        let inst = MtsInstance::new(
            MetricSpace::uniform(2),
            0,
            vec![
                CostVector::new(vec![3.0, 0.0]).unwrap(),
                CostVector::new(vec![0.0, 3.0]).unwrap(),
            ],
        )
        .unwrap();
        let traces = vec![PredictorTrace::constant(0, 2), PredictorTrace::constant(1, 2)];
        (inst, traces)
    }

    #[test]
    fn dyn_examples() {
        let (inst, traces) = two_point();
        let (v, s) = dyn_(&inst, &traces).unwrap();
        assert_eq!(v, 2.0);
        assert_eq!(s.sigma, vec![1, 0]);
        assert_eq!(s.switches, 1);
        assert_eq!(trajectory_cost(&inst, &s.states(&traces)).unwrap().total, v);

        let (v, _) = dyn_(&inst, &traces[..1]).unwrap();
        assert_eq!(v, crate::model::trace_cost(&inst, &traces[0]));
    }

    #[test]
    fn dyn_limited_examples() {
        let (inst, traces) = two_point();
        assert_eq!(dyn_limited(&inst, &traces, 0).unwrap().0, 3.0);
        let (v, s) = dyn_limited(&inst, &traces, 1).unwrap();
        assert_eq!(v, 2.0);
        assert_eq!(s.sigma, vec![1, 0]);
        assert_eq!(dyn_limited(&inst, &traces, 7).unwrap().0, 2.0);
    }

    #[test]
    fn dyn_rho_examples() {
        let (inst, traces) = two_point();
        let (v, s) = dyn_rho(&inst, &traces, 5.0).unwrap();
        assert_eq!(v, 3.0);
        assert_eq!(s.switches, 0);
        // Switching: 1 to adopt P2 at step 1, then 5 + 0 to switch to P1.
        assert_eq!(dyn_rho(&inst, &traces, 1.5).unwrap().0, 2.5);
        assert!(dyn_rho(&inst, &traces, 0.0).unwrap().0 <= dyn_(&inst, &traces).unwrap().0);
        // Static predictors have no movement to add on the switch step.
        assert_eq!(dyn_rho_with(&inst, &traces, 1.5, true).unwrap().0, 2.5);
    }

    #[test]
    fn opt_examples() {
        let (inst, _) = two_point();
        let (v, seq) = offline_opt(&inst).unwrap();
        assert_eq!(v, 2.0);
        assert_eq!(seq, vec![1, 0]);
        let zero = MtsInstance::new(MetricSpace::uniform(3), 2, vec![CostVector::zeros(3); 3]).unwrap();
        assert_eq!(offline_opt(&zero).unwrap().0, 0.0);
    }

    #[test]
    fn infeasible_column_is_reported() {
        let inst = MtsInstance::new(
            MetricSpace::uniform(2),
            0,
            vec![CostVector::zeros(2), CostVector::new(vec![INFEASIBLE, 0.0]).unwrap()],
        )
        .unwrap();
        let traces = vec![PredictorTrace::constant(0, 2)];
        assert!(matches!(dyn_(&inst, &traces), Err(Error::InfeasibleBenchmark { t: 1 })));
        assert!(matches!(dyn_limited(&inst, &traces, 1), Err(Error::InfeasibleBenchmark { t: 1 })));
        assert!(matches!(dyn_rho(&inst, &traces, 1.0), Err(Error::InfeasibleBenchmark { t: 1 })));
        // A predictor on an infeasible state is never selected.
        let traces = vec![PredictorTrace::constant(0, 2), PredictorTrace::constant(1, 2)];
        let (v, s) = dyn_(&inst, &traces).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(s.sigma[1], 1);
    }

    fn random_case(rng: &mut ChaCha8Rng) -> (MtsInstance, Vec<PredictorTrace>) {
        let n = rng.random_range(2..=4);
        let t_len = rng.random_range(1..=6);
        let ell = rng.random_range(1..=3);
        let coords: Vec<(f64, f64)> = (0..n).map(|_| (rng.random(), rng.random())).collect();
        let metric = MetricSpace::euclidean(&coords).unwrap();
        let costs = (0..t_len)
            .map(|_| CostVector::new((0..n).map(|_| rng.random::<f64>() * 2.0).collect()).unwrap())
            .collect();
        let inst = MtsInstance::new(metric, rng.random_range(0..n), costs).unwrap();
        let traces = (0..ell)
            .map(|_| PredictorTrace::new((0..t_len).map(|_| rng.random_range(0..n)).collect()))
            .collect();
        (inst, traces)
    }

    #[test]
    fn dps_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..300 {
            let (inst, traces) = random_case(&mut rng);
            let t_len = inst.horizon();
            let (d, s) = dyn_(&inst, &traces).unwrap();
            assert!((d - brute_force_oracle(&inst, &traces, BruteVariant::Dyn).unwrap()).abs() < 1e-9);
            assert!((trajectory_cost(&inst, &s.states(&traces)).unwrap().total - d).abs() < 1e-9);
            let mut prev = f64::INFINITY;
            for m in 0..=t_len {
                let (v, s) = dyn_limited(&inst, &traces, m).unwrap();
                let b = brute_force_oracle(&inst, &traces, BruteVariant::DynLimited(m)).unwrap();
                assert!((v - b).abs() < 1e-9, "m={m}: {v} vs {b}");
                assert!(s.switches <= m);
                assert!(v <= prev + 1e-12);
                prev = v;
            }
            assert!((prev - d).abs() < 1e-9);
            for rho in [0.0, 1.0, 5.0] {
                for full in [false, true] {
                    let (v, _) = dyn_rho_with(&inst, &traces, rho, full).unwrap();
                    let b = brute_force_oracle(&inst, &traces, BruteVariant::DynRho { rho, full_charge: full })
                        .unwrap();
                    assert!((v - b).abs() < 1e-9);
                }
            }
            let (o, seq) = offline_opt(&inst).unwrap();
            assert!((o - brute_force_oracle(&inst, &traces, BruteVariant::Opt).unwrap()).abs() < 1e-9);
            assert!((trajectory_cost(&inst, &seq).unwrap().total - o).abs() < 1e-9);
            assert!(o <= d + 1e-9);
        }
    }
}
