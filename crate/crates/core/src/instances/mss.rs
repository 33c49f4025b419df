//! Metrical service systems and their encoding as k-server with predictors.

use serde::{Deserialize, Serialize};

use super::kserver::{kserver_hole_encode, KServerInstance};
use crate::error::{Error, Result};
use crate::model::{MetricSpace, MtsInstance, PredictorTrace};

/// Each round names a set of points; the server must stand in it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MssInstance {
    pub metric: MetricSpace,
    pub start: usize,
    pub requests: Vec<Vec<usize>>,
}

impl MssInstance {
    pub fn new(metric: MetricSpace, start: usize, requests: Vec<Vec<usize>>) -> Result<Self> {
        let n = metric.len();
        if start >= n {
            return Err(Error::structural("start point out of range"));
        }
        for (t, w) in requests.iter().enumerate() {
            if w.is_empty() {
                return Err(Error::structural(format!("round {t} has an empty request set")));
            }
            if w.iter().any(|&p| p >= n) {
                return Err(Error::structural(format!("round {t} names a point out of range")));
            }
        }
        Ok(Self {
            metric,
            start,
            requests,
        })
    }

    pub fn width(&self) -> usize {
        self.requests.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Cost of visiting `positions[t]` in round `t`, or `None` if some
    /// position lies outside its request set.
    pub fn solution_cost(&self, positions: &[usize]) -> Option<f64> {
        if positions.len() != self.requests.len() {
            return None;
        }
        let mut prev = self.start;
        let mut cost = 0.0;
        for (w, &x) in self.requests.iter().zip(positions) {
            if !w.contains(&x) {
                return None;
            }
            cost += self.metric.d(prev, x);
            prev = x;
        }
        Some(cost)
    }

    /// Offline optimum by dynamic programming over points.
    pub fn opt(&self) -> f64 {
        let n = self.metric.len();
        let mut v: Vec<f64> = (0..n).map(|x| if x == self.start { 0.0 } else { f64::INFINITY }).collect();
        for w in &self.requests {
            let next: Vec<f64> = (0..n)
                .map(|x| {
                    if !w.contains(&x) {
                        return f64::INFINITY;
                    }
                    (0..n).map(|y| v[y] + self.metric.d(y, x)).fold(f64::INFINITY, f64::min)
                })
                .collect();
            v = next;
        }
        v.into_iter().fold(f64::INFINITY, f64::min)
    }
}

/// The k-server instance produced from an MSS instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MssKServer {
    pub kserver: KServerInstance,
    /// Hole-encoded MTS over the same requests.
    pub mts: MtsInstance,
    /// One hole trace per predictor.
    pub traces: Vec<PredictorTrace>,
    /// For each MSS round, the index one past its last request.
    pub round_ends: Vec<usize>,
}

/// `2 * ceil(D * (k + 1))` sweeps per round.
pub fn default_reps(metric: &MetricSpace) -> usize {
    2 * (metric.diameter() * metric.len() as f64).ceil() as usize
}

/// Encodes an MSS instance as k-server on the same `n` points (`k = n - 1`).
///
/// Every round issues `reps` sweeps of requests over the points outside the
/// round's set, in index order. Meanwhile predictor `j` keeps its hole on the
/// `j`-th point of the set (the last one when the set is smaller than `ell`).
pub fn mss_to_kserver(mss: &MssInstance, reps: usize, ell: usize) -> Result<MssKServer> {
    let n = mss.metric.len();
    if ell == 0 {
        return Err(Error::structural("need at least one predictor"));
    }
    if mss.width() > ell {
        return Err(Error::structural(format!(
            "request sets of size {} exceed {ell} predictors",
            mss.width()
        )));
    }
    let mut requests = Vec::new();
    let mut holes: Vec<Vec<usize>> = vec![Vec::new(); ell];
    let mut round_ends = Vec::with_capacity(mss.requests.len());
    for w in &mss.requests {
        let outside: Vec<usize> = (0..n).filter(|p| !w.contains(p)).collect();
        for _ in 0..reps {
            for &p in &outside {
                requests.push(p);
                for (j, h) in holes.iter_mut().enumerate() {
                    h.push(w[j.min(w.len() - 1)]);
                }
            }
        }
        round_ends.push(requests.len());
    }
    if requests.is_empty() {
        return Err(Error::structural("no requests emitted; every round covers all points"));
    }
    let k = n - 1;
    let initial: Vec<usize> = (0..n).filter(|&p| p != mss.start).collect();
    let kserver = KServerInstance::new(mss.metric.clone(), initial, requests.clone())?;
    let mts = kserver_hole_encode(k, &mss.metric, mss.start, &requests)?;
    let traces = holes.into_iter().map(PredictorTrace::new).collect();
    Ok(MssKServer {
        kserver,
        mts,
        traces,
        round_ends,
    })
}
