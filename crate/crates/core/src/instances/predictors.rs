//! Synthetic predictors and random instances for benchmark corpora.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kserver::KServerInstance;
use crate::bandit::greedy_state;
use crate::benchmarks::offline_opt;
use crate::error::{Error, Result};
use crate::model::{CostVector, MetricSpace, MtsInstance, PredictorTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictorKind {
    /// One predictor parked on each listed point.
    FixedState { points: Vec<usize> },
    /// The offline optimum with each state resampled with probability `p_noise`.
    NoisyOpt { p_noise: f64 },
    /// Moves to `argmin_x d(prev, x) + c_t(x)` every step.
    Greedy,
    /// Stays put until the current state costs more than `threshold`, then
    /// jumps to a uniformly random feasible state.
    LazyRandom { threshold: f64 },
}

fn feasible_states(inst: &MtsInstance, t: usize) -> Vec<usize> {
    (0..inst.num_states()).filter(|&x| inst.cost(t, x).is_finite()).collect()
}

/// Builds the traces of one predictor family; `FixedState` yields one trace
/// per point, the others a single trace.
pub fn gen_predictors<R: Rng + ?Sized>(inst: &MtsInstance, kind: &PredictorKind, rng: &mut R) -> Result<Vec<PredictorTrace>> {
    let t_len = inst.horizon();
    match kind {
        PredictorKind::FixedState { points } => {
            if let Some(&p) = points.iter().find(|&&p| p >= inst.num_states()) {
                return Err(Error::structural(format!("fixed point {p} out of range")));
            }
            Ok(points.iter().map(|&p| PredictorTrace::constant(p, t_len)).collect())
        }
        PredictorKind::NoisyOpt { p_noise } => {
            if !(0.0..=1.0).contains(p_noise) {
                return Err(Error::structural("p_noise outside [0, 1]"));
            }
            let (_, states) = offline_opt(inst)?;
            let noisy = states
                .iter()
                .enumerate()
                .map(|(t, &s)| {
                    if rng.random::<f64>() < *p_noise {
                        *feasible_states(inst, t).choose(rng).expect("every task has a feasible state")
                    } else {
                        s
                    }
                })
                .collect();
            Ok(vec![PredictorTrace::new(noisy)])
        }
        PredictorKind::Greedy => {
            let mut cur = inst.initial_state();
            let states = inst
                .costs()
                .iter()
                .map(|c| {
                    cur = greedy_state(inst.metric(), c, cur);
                    cur
                })
                .collect();
            Ok(vec![PredictorTrace::new(states)])
        }
        PredictorKind::LazyRandom { threshold } => {
            let mut cur = inst.initial_state();
            let states = (0..t_len)
                .map(|t| {
                    if !(inst.cost(t, cur) <= *threshold) {
                        cur = *feasible_states(inst, t).choose(rng).expect("every task has a feasible state");
                    }
                    cur
                })
                .collect();
            Ok(vec![PredictorTrace::new(states)])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Uniform,
    /// Random points in `[0, 1]`, rescaled to diameter 1.
    Line,
    /// Random points in the unit square, rescaled to diameter 1.
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomMtsParams {
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub metric: MetricKind,
    /// Costs are drawn from `U[0, max_cost]`.
    pub max_cost: f64,
}

pub fn random_metric<R: Rng + ?Sized>(n: usize, kind: MetricKind, rng: &mut R) -> Result<MetricSpace> {
    let m = match kind {
        MetricKind::Uniform => return Ok(MetricSpace::uniform(n)),
        MetricKind::Line => {
            let mut pos: Vec<f64> = (0..n).map(|_| rng.random()).collect();
            pos.sort_by(f64::total_cmp);
            MetricSpace::line(&pos)?
        }
        MetricKind::Euclidean => {
            let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random(), rng.random())).collect();
            MetricSpace::euclidean(&pts)?
        }
    };
    Ok(m.scaled(1.0 / m.diameter()))
}

pub fn random_mts<R: Rng + ?Sized>(p: &RandomMtsParams, rng: &mut R) -> Result<MtsInstance> {
    if p.n < 2 {
        return Err(Error::structural("random instances need at least two points"));
    }
    let metric = random_metric(p.n, p.metric, rng)?;
    let costs = (0..p.horizon)
        .map(|_| CostVector::new((0..p.n).map(|_| rng.random::<f64>() * p.max_cost).collect()))
        .collect::<Result<Vec<_>>>()?;
    MtsInstance::new(metric, rng.random_range(0..p.n), costs)
}

/// A mixed family of `ell` predictors: noisy optima with increasing noise,
/// then greedy, then lazy random walkers.
pub fn mixed_predictors<R: Rng + ?Sized>(inst: &MtsInstance, ell: usize, rng: &mut R) -> Result<Vec<PredictorTrace>> {
    let mut out = Vec::with_capacity(ell);
    for i in 0..ell {
        let kind = match i % 4 {
            0 => PredictorKind::NoisyOpt { p_noise: 0.05 + 0.1 * (i / 4) as f64 },
            1 => PredictorKind::Greedy,
            2 => PredictorKind::LazyRandom { threshold: 0.5 },
            _ => PredictorKind::NoisyOpt { p_noise: 0.3 },
        };
        out.extend(gen_predictors(inst, &kind, rng)?);
    }
    Ok(out)
}

/// Random k-server instance on a line with `ell` lazy, order-preserving
/// predictors.
///
/// Points are sorted left to right and servers start on `k` distinct points.
/// On an uncovered request each predictor sends, at random, its nearest
/// server on the left or on the right; on a covered request it names the
/// covering server. Servers therefore never cross.
pub fn random_lazy_line_kserver<R: Rng + ?Sized>(
    n: usize,
    k: usize,
    horizon: usize,
    ell: usize,
    rng: &mut R,
) -> Result<(KServerInstance, Vec<Vec<usize>>)> {
    if !(1..n).contains(&k) {
        return Err(Error::structural("need 1 <= k < n"));
    }
    let metric = random_metric(n, MetricKind::Line, rng)?;
    let mut points: Vec<usize> = (0..n).collect();
    let (chosen, _) = points.partial_shuffle(rng, k);
    let mut initial = chosen.to_vec();
    initial.sort_unstable();
    let requests: Vec<usize> = (0..horizon).map(|_| rng.random_range(0..n)).collect();
    let kinst = KServerInstance::new(metric, initial, requests)?;
    let named = (0..ell)
        .map(|_| {
            let mut conf = kinst.initial.clone();
            kinst
                .requests
                .iter()
                .map(|&r| {
                    if let Some(s) = conf.iter().position(|&p| p == r) {
                        return s;
                    }
                    // Positions are sorted with the point index on a line.
                    let left = conf.iter().rposition(|&p| p < r);
                    let right = conf.iter().position(|&p| p > r);
                    let s = match (left, right) {
                        (Some(a), Some(b)) => {
                            if rng.random::<bool>() {
                                a
                            } else {
                                b
                            }
                        }
                        (Some(a), None) => a,
                        (None, Some(b)) => b,
                        (None, None) => unreachable!("k >= 1 servers"),
                    };
                    conf[s] = r;
                    s
                })
                .collect()
        })
        .collect();
    Ok((kinst, named))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::simulate_lazy;
    use crate::model::trace_cost;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn inst(rng: &mut ChaCha8Rng) -> MtsInstance {
        random_mts(
            &RandomMtsParams {
                n: 5,
                horizon: 40,
                metric: MetricKind::Euclidean,
                max_cost: 1.0,
            },
            rng,
        )
        .unwrap()
    }

    #[test]
    fn noiseless_opt_predictor_costs_opt() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inst = inst(&mut rng);
        let tr = gen_predictors(&inst, &PredictorKind::NoisyOpt { p_noise: 0.0 }, &mut rng).unwrap();
        let (opt, states) = offline_opt(&inst).unwrap();
        assert_eq!(tr[0].states, states);
        assert!((trace_cost(&inst, &tr[0]) - opt).abs() < 1e-9);
    }

    #[test]
    fn fixed_state_predictors_do_not_move() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let inst = inst(&mut rng);
        let trs = gen_predictors(&inst, &PredictorKind::FixedState { points: vec![0, 3] }, &mut rng).unwrap();
        for tr in &trs {
            assert!(tr.states.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn greedy_step_cost_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let inst = inst(&mut rng);
            let tr = &gen_predictors(&inst, &PredictorKind::Greedy, &mut rng).unwrap()[0];
            for t in 0..inst.horizon() {
                let f = crate::model::predictor_step_cost(&inst, tr, t).unwrap();
                assert!(f <= inst.diameter() + inst.costs()[t].min_finite() + 1e-12);
            }
        }
    }

    #[test]
    fn lazy_random_stays_on_cheap_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let inst = inst(&mut rng);
        let tr = &gen_predictors(&inst, &PredictorKind::LazyRandom { threshold: 0.5 }, &mut rng).unwrap()[0];
        let mut prev = inst.initial_state();
        for t in 0..inst.horizon() {
            if tr.at(t) != prev {
                assert!(inst.cost(t, prev) > 0.5);
            }
            prev = tr.at(t);
        }
    }

    #[test]
    fn random_metrics_have_unit_diameter() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for kind in [MetricKind::Uniform, MetricKind::Line, MetricKind::Euclidean] {
            let m = random_metric(6, kind, &mut rng).unwrap();
            assert!((m.diameter() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lazy_line_predictors_keep_server_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..30 {
            let (kinst, named) = random_lazy_line_kserver(6, 3, 8, 3, &mut rng).unwrap();
            for names in &named {
                let run = simulate_lazy(&kinst, names).unwrap();
                assert_eq!(&run.names, names);
                for c in &run.configs {
                    assert!(c.windows(2).all(|w| w[0] < w[1]), "{c:?}");
                }
            }
        }
    }
}
