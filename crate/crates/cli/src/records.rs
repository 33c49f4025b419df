//! Per-trial result rows and their CSV encoding.

use serde::{Deserialize, Serialize};

/// First line of every trial CSV; bump the version when columns change.
pub const CSV_VERSION_LINE: &str = "# mts-trials v1";

pub const CSV_COLUMNS: &str =
    "instance_id,algo,params,trial,seed,cost,switches,dyn,dyn_m,m,dyn_rho,rho,opt,ratio_dyn,ratio_dyn_m";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub instance_id: String,
    pub algo: String,
    /// `key=value` pairs joined by `;`.
    pub params: String,
    pub trial: u64,
    pub seed: u64,
    pub cost: f64,
    pub switches: usize,
    #[serde(rename = "dyn")]
    pub dyn_value: f64,
    pub dyn_m: f64,
    pub m: usize,
    pub dyn_rho: f64,
    pub rho: f64,
    pub opt: f64,
    /// `cost / dyn`, absent when `dyn` is zero.
    pub ratio_dyn: Option<f64>,
    /// `cost / dyn_m`, absent when `dyn_m` is zero.
    pub ratio_dyn_m: Option<f64>,
}

pub fn ratio(num: f64, den: f64) -> Option<f64> {
    (den != 0.0).then(|| num / den)
}

/// Shortest decimal rendering with 12 significant digits.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..15).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

impl TrialRecord {
    pub fn csv_line(&self) -> String {
        let opt = |x: Option<f64>| x.map(fmt_num).unwrap_or_default();
        [
            self.instance_id.clone(),
            self.algo.clone(),
            self.params.clone(),
            self.trial.to_string(),
            self.seed.to_string(),
            fmt_num(self.cost),
            self.switches.to_string(),
            fmt_num(self.dyn_value),
            fmt_num(self.dyn_m),
            self.m.to_string(),
            fmt_num(self.dyn_rho),
            fmt_num(self.rho),
            fmt_num(self.opt),
            opt(self.ratio_dyn),
            opt(self.ratio_dyn_m),
        ]
        .join(",")
    }
}

/// Sorts by `(instance_id, trial)`; the sort is stable, so rows of one
/// trial keep their configuration order.
pub fn sort_records(records: &mut [TrialRecord]) {
    records.sort_by(|a, b| (&a.instance_id, a.trial).cmp(&(&b.instance_id, b.trial)));
}

pub fn csv_header() -> String {
    format!("{CSV_VERSION_LINE}\n{CSV_COLUMNS}\n")
}

pub fn csv_body(records: &[TrialRecord]) -> String {
    records.iter().map(|r| r.csv_line() + "\n").collect()
}
