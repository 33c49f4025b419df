use serde::{Deserialize, Serialize};

use super::Schedule;
use crate::error::{Error, Result};
use crate::model::{trajectory_cost, MtsInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouponStrategyOutcome {
    pub cost: f64,
    pub schedule: Schedule,
    /// Steps at which the strategy was hit and switched away.
    pub switch_times: Vec<usize>,
}

impl CouponStrategyOutcome {
    /// Gaps between consecutive forced switches.
    pub fn gaps(&self) -> Vec<usize> {
        self.switch_times.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Furthest-next-hit strategy for the coupon instance.
///
/// Starts on the predictor hit last for the first time. Whenever the followed
/// predictor is hit it switches, in that same step, to the predictor whose
/// next hit is furthest away (never again counts as infinitely far), unless
/// `m` switches have been spent. Ties go to the lowest index.
pub fn coupon_offline_strategy(inst: &MtsInstance, sigma: &[usize], m: usize) -> Result<CouponStrategyOutcome> {
    let ell = inst.num_states();
    let t_len = inst.horizon();
    if sigma.len() != t_len {
        return Err(Error::structural("hit sequence and instance lengths differ"));
    }
    for (t, &s) in sigma.iter().enumerate() {
        let c = inst.costs()[t].as_slice();
        if s >= ell || c.iter().any(|&x| x > c[s]) {
            return Err(Error::structural(format!("step {t} is not hit at sigma_t = {s}")));
        }
    }
    // hits[i] lists the steps where `i` is hit; ptr[i] indexes the next one.
    let mut hits = vec![Vec::new(); ell];
    for (t, &s) in sigma.iter().enumerate() {
        hits[s].push(t);
    }
    let mut ptr = vec![0usize; ell];
    let next_hit = |hits: &[Vec<usize>], ptr: &[usize], i: usize| hits[i].get(ptr[i]).copied().unwrap_or(usize::MAX);
    let furthest = |hits: &[Vec<usize>], ptr: &[usize], skip: Option<usize>| {
        (0..ell)
            .filter(|&i| Some(i) != skip)
            .fold((0usize, None::<usize>), |(best_t, best), i| {
                let nh = next_hit(hits, ptr, i);
                match best {
                    Some(_) if nh <= best_t => (best_t, best),
                    _ => (nh, Some(i)),
                }
            })
            .1
            .expect("at least two predictors")
    };
    let mut cur = furthest(&hits, &ptr, None);
    let mut sigma_out = Vec::with_capacity(t_len);
    let mut switch_times = Vec::new();
    for (t, &s) in sigma.iter().enumerate() {
        ptr[s] += 1;
        if s == cur && switch_times.len() < m {
            cur = furthest(&hits, &ptr, Some(cur));
            switch_times.push(t);
        }
        sigma_out.push(cur);
    }
    let cost = trajectory_cost(inst, &sigma_out)?.total;
    Ok(CouponStrategyOutcome {
        cost,
        schedule: Schedule::new(sigma_out),
        switch_times,
    })
}
