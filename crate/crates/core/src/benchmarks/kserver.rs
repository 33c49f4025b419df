use std::collections::BTreeMap;

use super::dyn_;
use crate::error::{Error, Result};
use crate::instances::{kserver_config_mts, KServerInstance};

/// Largest number of named configurations the ~DYN search may track.
pub const KSERVER_STATE_LIMIT: u128 = 1_000_000;

/// The relaxed benchmark for lazy k-server predictors.
///
/// Each request must be served by a server whose name some predictor uses at
/// that step, i.e. one of `named[i][t]`. Only that server moves. The search
/// runs over named configurations.
pub fn dyn_tilde_kserver(kinst: &KServerInstance, named: &[Vec<usize>]) -> Result<f64> {
    if named.is_empty() {
        return Err(Error::structural("no predictors"));
    }
    if named.iter().any(|n| n.len() != kinst.horizon()) {
        return Err(Error::structural("predictor length differs from the request count"));
    }
    let allowed: Vec<Vec<usize>> = (0..kinst.horizon())
        .map(|t| {
            let mut a: Vec<usize> = named.iter().map(|n| n[t]).collect();
            a.sort_unstable();
            a.dedup();
            a
        })
        .collect();
    if allowed.iter().flatten().any(|&s| s >= kinst.k()) {
        return Err(Error::structural("server name out of range"));
    }
    configuration_search(kinst, &allowed)
}

/// The k-server optimum: any server may serve any request.
pub fn kserver_opt(kinst: &KServerInstance) -> Result<f64> {
    let all: Vec<usize> = (0..kinst.k()).collect();
    configuration_search(kinst, &vec![all; kinst.horizon()])
}

fn configuration_search(kinst: &KServerInstance, allowed: &[Vec<usize>]) -> Result<f64> {
    let n = kinst.metric.len() as u128;
    let needed = n.saturating_pow(kinst.k() as u32);
    if needed > KSERVER_STATE_LIMIT {
        return Err(Error::SizeGuard {
            what: "k-server configurations",
            needed,
            limit: KSERVER_STATE_LIMIT,
        });
    }
    let m = &kinst.metric;
    let mut frontier: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    frontier.insert(kinst.initial.clone(), 0.0);
    for (t, &r) in kinst.requests.iter().enumerate() {
        let mut next: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (conf, &v) in &frontier {
            for &s in &allowed[t] {
                let mut c = conf.clone();
                let cost = v + m.d(c[s], r);
                c[s] = r;
                let e = next.entry(c).or_insert(f64::INFINITY);
                if cost < *e {
                    *e = cost;
                }
            }
        }
        if next.is_empty() {
            return Err(Error::InfeasibleBenchmark { t });
        }
        frontier = next;
    }
    Ok(frontier.values().copied().fold(f64::INFINITY, f64::min))
}

/// DYN for lazy k-server predictors: follow predictor configurations, paying
/// min-cost matchings between them.
pub fn kserver_dyn(kinst: &KServerInstance, named: &[Vec<usize>]) -> Result<f64> {
    let (mts, traces) = kserver_config_mts(kinst, named)?;
    dyn_(&mts, &traces).map(|(v, _)| v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{dyn_limited, offline_opt};
    use crate::instances::{kserver_hole_encode, simulate_lazy};
    use crate::model::MetricSpace;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn intro_example() -> (KServerInstance, Vec<Vec<usize>>) {
        let m = MetricSpace::line(&[0.0, 10.0, 90.0, 100.0]).unwrap();
        let kinst = KServerInstance::new(m, vec![0, 3], vec![1, 2]).unwrap();
        (kinst, vec![vec![0, 0], vec![1, 1]])
    }

    #[test]
    fn intro_example_values() {
        let (kinst, named) = intro_example();
        assert_eq!(dyn_tilde_kserver(&kinst, &named).unwrap(), 20.0);
        // Following the first predictor to {10, 100} and then jumping to the
        // second predictor's {0, 90} costs 10 + 20.
        assert_eq!(kserver_dyn(&kinst, &named).unwrap(), 30.0);
        let (mts, traces) = kserver_config_mts(&kinst, &named).unwrap();
        assert_eq!(dyn_limited(&mts, &traces, 0).unwrap().0, 90.0);
    }

    #[test]
    fn single_lazy_predictor_costs_its_own_run() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.random_range(3..=5);
            let pos: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 10.0).collect();
            let m = MetricSpace::line(&pos).unwrap();
            let k = rng.random_range(1..n);
            let initial: Vec<usize> = (0..k).collect();
            let reqs: Vec<usize> = (0..6).map(|_| rng.random_range(0..n)).collect();
            let kinst = KServerInstance::new(m, initial, reqs).unwrap();
            let names: Vec<usize> = (0..6).map(|_| rng.random_range(0..k)).collect();
            let run = simulate_lazy(&kinst, &names).unwrap();
            let v = dyn_tilde_kserver(&kinst, &[run.names.clone()]).unwrap();
            assert!((v - run.cost).abs() < 1e-9);
            assert!((kserver_dyn(&kinst, &[names]).unwrap() - run.cost).abs() < 1e-9);
        }
    }

    #[test]
    fn opt_of_hole_encoding_matches_configuration_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let k = rng.random_range(2..=3);
            let pts: Vec<(f64, f64)> = (0..=k).map(|_| (rng.random(), rng.random())).collect();
            let m = MetricSpace::euclidean(&pts).unwrap();
            let hole = rng.random_range(0..=k);
            let initial: Vec<usize> = (0..=k).filter(|&p| p != hole).collect();
            let reqs: Vec<usize> = (0..rng.random_range(1..=6)).map(|_| rng.random_range(0..=k)).collect();
            let kinst = KServerInstance::new(m.clone(), initial, reqs.clone()).unwrap();
            let mts = kserver_hole_encode(k, &m, hole, &reqs).unwrap();
            let a = offline_opt(&mts).unwrap().0;
            let b = kserver_opt(&kinst).unwrap();
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn size_guard() {
        let m = MetricSpace::uniform(40);
        let kinst = KServerInstance::new(m, (0..5).collect(), vec![7]).unwrap();
        assert!(matches!(kserver_opt(&kinst), Err(Error::SizeGuard { .. })));
    }
}
