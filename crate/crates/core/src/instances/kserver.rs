//! k-server instances, lazy predictors and the hole encoding.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CostVector, MetricSpace, MtsInstance, PredictorTrace, INFEASIBLE};

/// Largest `k` for which configuration distances are computed by trying all
/// server permutations.
pub const MAX_MATCHING_K: usize = 8;

/// Servers are named `0..k` and start at `initial[name]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KServerInstance {
    pub metric: MetricSpace,
    pub initial: Vec<usize>,
    pub requests: Vec<usize>,
}

impl KServerInstance {
    pub fn new(metric: MetricSpace, initial: Vec<usize>, requests: Vec<usize>) -> Result<Self> {
        if initial.is_empty() {
            return Err(Error::structural("k-server instance without servers"));
        }
        let n = metric.len();
        if initial.iter().chain(&requests).any(|&p| p >= n) {
            return Err(Error::structural("server or request point out of range"));
        }
        Ok(Self {
            metric,
            initial,
            requests,
        })
    }

    pub fn k(&self) -> usize {
        self.initial.len()
    }

    pub fn horizon(&self) -> usize {
        self.requests.len()
    }
}

/// Named configurations of a lazy algorithm, one per request.
///
/// A lazy algorithm never moves when the request is already covered;
/// otherwise the server `names[t]` walks to the request. The returned names
/// are the effective ones: the covering server replaces the given name on
/// covered requests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LazyRun {
    pub configs: Vec<Vec<usize>>,
    pub names: Vec<usize>,
    pub cost: f64,
}

pub fn simulate_lazy(kinst: &KServerInstance, names: &[usize]) -> Result<LazyRun> {
    if names.len() != kinst.horizon() {
        return Err(Error::structural("lazy predictor length differs from the request count"));
    }
    let mut conf = kinst.initial.clone();
    let mut configs = Vec::with_capacity(names.len());
    let mut effective = Vec::with_capacity(names.len());
    let mut cost = 0.0;
    for (&r, &name) in kinst.requests.iter().zip(names) {
        if name >= kinst.k() {
            return Err(Error::structural(format!("server name {name} out of range")));
        }
        match conf.iter().position(|&p| p == r) {
            Some(covering) => effective.push(covering),
            None => {
                cost += kinst.metric.d(conf[name], r);
                conf[name] = r;
                effective.push(name);
            }
        }
        configs.push(conf.clone());
    }
    Ok(LazyRun {
        configs,
        names: effective,
        cost,
    })
}

/// Cheapest way to move the servers from one point multiset to another.
pub fn matching_distance(metric: &MetricSpace, a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    assert!(a.len() <= MAX_MATCHING_K, "configuration too large for exhaustive matching");
    let mut perm: Vec<usize> = (0..b.len()).collect();
    let mut best = f64::INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let c: f64 = a.iter().zip(p).map(|(&x, &j)| metric.d(x, b[j])).sum();
        best = best.min(c);
    });
    best
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

fn canonical(conf: &[usize]) -> Vec<usize> {
    let mut c = conf.to_vec();
    c.sort_unstable();
    c
}

/// The k-server instance as an MTS over the configurations the lazy
/// predictors visit.
///
/// States are the sorted point multisets of the initial configuration and
/// every predictor configuration; distances are min-cost matchings. A task
/// costs 0 on configurations covering the request and is infeasible
/// elsewhere. The returned traces follow the predictors, so `dyn` on the
/// result is the k-server DYN benchmark.
pub fn kserver_config_mts(kinst: &KServerInstance, named: &[Vec<usize>]) -> Result<(MtsInstance, Vec<PredictorTrace>)> {
    if kinst.horizon() == 0 {
        return Err(Error::structural("k-server instance without requests"));
    }
    let runs = named
        .iter()
        .map(|n| simulate_lazy(kinst, n))
        .collect::<Result<Vec<_>>>()?;
    let mut set = BTreeSet::new();
    set.insert(canonical(&kinst.initial));
    for run in &runs {
        for c in &run.configs {
            set.insert(canonical(c));
        }
    }
    let configs: Vec<Vec<usize>> = set.into_iter().collect();
    let index = |c: &[usize]| configs.binary_search(&canonical(c)).expect("config was registered");
    let dist = configs
        .iter()
        .map(|a| configs.iter().map(|b| matching_distance(&kinst.metric, a, b)).collect())
        .collect();
    let names = configs
        .iter()
        .map(|c| format!("{c:?}"))
        .collect();
    let metric = MetricSpace::new(names, dist)?;
    let costs = kinst
        .requests
        .iter()
        .map(|r| {
            CostVector::new(
                configs
                    .iter()
                    .map(|c| if c.contains(r) { 0.0 } else { INFEASIBLE })
                    .collect(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let inst = MtsInstance::new(metric, index(&kinst.initial), costs)?;
    let traces = runs
        .iter()
        .map(|run| PredictorTrace::new(run.configs.iter().map(|c| index(c)).collect()))
        .collect();
    Ok((inst, traces))
}

/// k-server on `k + 1` points as an MTS whose state is the uncovered point.
///
/// Moving the hole from `p` to `q` moves the server at `q` to `p`, so it costs
/// `d(p, q)`. A request makes its own point infeasible for the hole.
pub fn kserver_hole_encode(k: usize, metric: &MetricSpace, initial_hole: usize, requests: &[usize]) -> Result<MtsInstance> {
    let n = metric.len();
    if n != k + 1 {
        return Err(Error::structural(format!(
            "hole encoding needs k + 1 = {} points, metric has {n}",
            k + 1
        )));
    }
    let costs = requests
        .iter()
        .map(|&r| {
            if r >= n {
                return Err(Error::structural(format!("request {r} out of range")));
            }
            let mut c = vec![0.0; n];
            c[r] = INFEASIBLE;
            CostVector::new(c)
        })
        .collect::<Result<Vec<_>>>()?;
    MtsInstance::new(metric.clone(), initial_hole, costs)
}

/// The uncovered point of a configuration on `k + 1` points, if unique.
pub fn hole_of(conf: &[usize], n: usize) -> Option<usize> {
    let holes: Vec<usize> = (0..n).filter(|p| !conf.contains(p)).collect();
    (holes.len() == 1).then(|| holes[0])
}

/// The line lower-bound family with two lazy predictors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KServerLineLb {
    pub kserver: KServerInstance,
    /// Hole-encoded MTS.
    pub mts: MtsInstance,
    /// Hole positions of the two predictors.
    pub traces: Vec<PredictorTrace>,
    /// Suggested server names per predictor and request.
    pub suggestions: Vec<Vec<usize>>,
}

/// Servers `s_i` start on `p_i` (0-based `0..k`) and the hole on `p_k`.
///
/// On a request at `p_i` the first predictor suggests `s_{i-1}` and the
/// second `s_i`; at the two ends both suggest the border server.
pub fn line_lb_suggestions(k: usize, request: usize) -> Result<(usize, usize)> {
    if request > k {
        return Err(Error::structural(format!("request p{request} outside 0..={k}")));
    }
    let left = request.saturating_sub(1).min(k - 1);
    let right = request.min(k - 1);
    Ok((left, right))
}

pub fn gen_kserver_line_lb(k: usize, requests: &[usize]) -> Result<KServerLineLb> {
    if k < 1 {
        return Err(Error::structural("need at least one server"));
    }
    let positions: Vec<f64> = (0..=k).map(|p| p as f64).collect();
    let metric = MetricSpace::line(&positions)?;
    let mut suggestions = vec![Vec::with_capacity(requests.len()), Vec::with_capacity(requests.len())];
    for &r in requests {
        let (a, b) = line_lb_suggestions(k, r)?;
        suggestions[0].push(a);
        suggestions[1].push(b);
    }
    let kserver = KServerInstance::new(metric.clone(), (0..k).collect(), requests.to_vec())?;
    let mut traces = Vec::with_capacity(2);
    for names in &suggestions {
        let run = simulate_lazy(&kserver, names)?;
        let holes = run
            .configs
            .iter()
            .map(|c| hole_of(c, k + 1).ok_or_else(|| Error::contract("lazy predictor stacked two servers")))
            .collect::<Result<Vec<_>>>()?;
        traces.push(PredictorTrace::new(holes));
    }
    let mts = kserver_hole_encode(k, &metric, k, requests)?;
    Ok(KServerLineLb {
        kserver,
        mts,
        traces,
        suggestions,
    })
}
