//! Instance generators and reductions.

mod coupon;
mod kserver;
mod lgt;
mod mss;
mod predictors;

use serde::{Deserialize, Serialize};

pub use coupon::{coupon_expected_gap, coupon_instance, gen_coupon_lb, CouponInstance, CouponParams};
pub use kserver::{
    gen_kserver_line_lb, hole_of, kserver_config_mts, kserver_hole_encode, line_lb_suggestions,
    matching_distance, simulate_lazy, KServerInstance, KServerLineLb, LazyRun, MAX_MATCHING_K,
};
pub use lgt::{mts_to_lgt, LayeredGraph};
pub use mss::{default_reps, mss_to_kserver, MssInstance, MssKServer};
pub use predictors::{
    gen_predictors, mixed_predictors, random_lazy_line_kserver, random_metric, random_mts,
    MetricKind, PredictorKind, RandomMtsParams,
};

/// Generator metadata written next to an instance file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub generator: String,
    pub params: serde_json::Value,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_seq: Option<Vec<usize>>,
}
