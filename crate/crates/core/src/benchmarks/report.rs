use serde::{Deserialize, Serialize};

use super::{dyn_, dyn_limited, dyn_rho, offline_opt, Schedule};
use crate::error::Result;
use crate::model::{MtsInstance, PredictorTrace, TOL};

/// A benchmark value for one parameter, with its optimal schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamValue {
    pub param: f64,
    pub value: f64,
    pub schedule: Schedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub instance_id: String,
    #[serde(rename = "dyn")]
    pub dyn_value: f64,
    pub dyn_schedule: Schedule,
    pub dyn_m: Vec<ParamValue>,
    pub dyn_rho: Vec<ParamValue>,
    pub opt: f64,
    pub opt_states: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dyn_tilde: Option<f64>,
}

/// One line of the long-format CSV export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub instance_id: String,
    pub benchmark: String,
    pub param: Option<f64>,
    pub value: f64,
    pub argmin_switches: Option<usize>,
}

pub const BENCHMARK_CSV_HEADER: &str = "instance_id,benchmark,param,value,argmin_switches";

impl BenchmarkReport {
    pub fn compute(
        instance_id: impl Into<String>,
        inst: &MtsInstance,
        traces: &[PredictorTrace],
        ms: &[usize],
        rhos: &[f64],
    ) -> Result<Self> {
        let (dyn_value, dyn_schedule) = dyn_(inst, traces)?;
        let dyn_m = ms
            .iter()
            .map(|&m| {
                dyn_limited(inst, traces, m).map(|(value, schedule)| ParamValue {
                    param: m as f64,
                    value,
                    schedule,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let dyn_rho = rhos
            .iter()
            .map(|&rho| {
                dyn_rho(inst, traces, rho).map(|(value, schedule)| ParamValue {
                    param: rho,
                    value,
                    schedule,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let (opt, opt_states) = offline_opt(inst)?;
        Ok(Self {
            instance_id: instance_id.into(),
            dyn_value,
            dyn_schedule,
            dyn_m,
            dyn_rho,
            opt,
            opt_states,
            dyn_tilde: None,
        })
    }

    /// Ordering violations among OPT, DYN and the limited benchmarks.
    pub fn ordering_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.opt > self.dyn_value + TOL {
            out.push(format!("opt {} > dyn {}", self.opt, self.dyn_value));
        }
        for a in &self.dyn_m {
            if self.dyn_value > a.value + TOL {
                out.push(format!("dyn {} > dyn_m({}) {}", self.dyn_value, a.param, a.value));
            }
            for b in &self.dyn_m {
                if a.param <= b.param && b.value > a.value + TOL {
                    out.push(format!("dyn_m({}) {} > dyn_m({}) {}", b.param, b.value, a.param, a.value));
                }
            }
        }
        out
    }

    pub fn rows(&self) -> Vec<BenchmarkRow> {
        let row = |benchmark: &str, param: Option<f64>, value: f64, sw: Option<usize>| BenchmarkRow {
            instance_id: self.instance_id.clone(),
            benchmark: benchmark.to_string(),
            param,
            value,
            argmin_switches: sw,
        };
        let mut rows = vec![row("dyn", None, self.dyn_value, Some(self.dyn_schedule.switches))];
        rows.extend(
            self.dyn_m
                .iter()
                .map(|p| row("dyn_m", Some(p.param), p.value, Some(p.schedule.switches))),
        );
        rows.extend(
            self.dyn_rho
                .iter()
                .map(|p| row("dyn_rho", Some(p.param), p.value, Some(p.schedule.switches))),
        );
        rows.push(row("opt", None, self.opt, None));
        if let Some(v) = self.dyn_tilde {
            rows.push(row("dyn_tilde", None, v, None));
        }
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(BENCHMARK_CSV_HEADER);
        s.push('\n');
        for r in self.rows() {
            let opt = |x: Option<String>| x.unwrap_or_default();
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.instance_id,
                r.benchmark,
                opt(r.param.map(|p| p.to_string())),
                r.value,
                opt(r.argmin_switches.map(|n| n.to_string()))
            ));
        }
        s
    }
}
