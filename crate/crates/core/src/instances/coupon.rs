use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CostVector, MetricSpace, MtsInstance, PredictorTrace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouponParams {
    pub ell: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub alpha: f64,
    pub seed: u64,
}

/// The coupon-collector instance with its hidden hit sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouponInstance {
    pub inst: MtsInstance,
    pub traces: Vec<PredictorTrace>,
    pub sigma: Vec<usize>,
    pub alpha: f64,
}

/// Uniform metric on `l` points with predictor `i` parked on point `i`.
///
/// Step `t` costs 1 on the hit point `sigma_t` and `alpha / l` everywhere
/// else, with `sigma_t` drawn uniformly and independently from `seed`. The
/// initial state is point 0.
pub fn gen_coupon_lb(p: CouponParams) -> Result<CouponInstance> {
    if p.ell < 2 {
        return Err(Error::structural("coupon instances need at least two points"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let sigma: Vec<usize> = (0..p.horizon).map(|_| rng.random_range(0..p.ell)).collect();
    coupon_instance(p.ell, p.alpha, sigma, 0)
}

/// The coupon instance for a given hit sequence and initial point.
pub fn coupon_instance(ell: usize, alpha: f64, sigma: Vec<usize>, initial_state: usize) -> Result<CouponInstance> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::structural(format!("alpha = {alpha} outside (0, 1]")));
    }
    if ell < 2 {
        return Err(Error::structural("coupon instances need at least two points"));
    }
    if sigma.iter().any(|&s| s >= ell) {
        return Err(Error::structural("hit index out of range"));
    }
    let low = alpha / ell as f64;
    let costs = sigma
        .iter()
        .map(|&s| {
            let mut c = vec![low; ell];
            c[s] = 1.0;
            CostVector::new(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let horizon = sigma.len();
    let inst = MtsInstance::new(MetricSpace::uniform(ell), initial_state, costs)?;
    let traces = (0..ell).map(|i| PredictorTrace::constant(i, horizon)).collect();
    Ok(CouponInstance {
        inst,
        traces,
        sigma,
        alpha,
    })
}

/// `l * H_{l-1}`: the expected time until the `l - 1` other points have all
/// been hit.
pub fn coupon_expected_gap(ell: usize) -> f64 {
    let h: f64 = (1..ell).map(|i| 1.0 / i as f64).sum();
    ell as f64 * h
}
