//! The JSON instance file format.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_traces, CostVector, MetricSpace, MtsInstance, PredictorTrace};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub version: u32,
    pub metric: MetricSpace,
    pub initial_state: usize,
    pub costs: Vec<CostVector>,
    #[serde(default)]
    pub predictors: Vec<Vec<usize>>,
}

impl InstanceFile {
    pub fn new(inst: &MtsInstance, traces: &[PredictorTrace]) -> Self {
        Self {
            version: FORMAT_VERSION,
            metric: inst.metric().clone(),
            initial_state: inst.initial_state(),
            costs: inst.costs().to_vec(),
            predictors: traces.iter().map(|t| t.states.clone()).collect(),
        }
    }

    /// Validates the file and splits it into an instance and its traces.
    pub fn into_parts(self) -> Result<(MtsInstance, Vec<PredictorTrace>)> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Parse(format!("unsupported instance version {}", self.version)));
        }
        let inst = MtsInstance::new(self.metric, self.initial_state, self.costs)?;
        let traces: Vec<PredictorTrace> = self.predictors.into_iter().map(PredictorTrace::new).collect();
        if !traces.is_empty() {
            validate_traces(&inst, &traces)?;
        }
        Ok((inst, traces))
    }
}

pub fn parse_instance(json: &str) -> Result<(MtsInstance, Vec<PredictorTrace>)> {
    let file: InstanceFile = serde_json::from_str(json)?;
    file.into_parts()
}

pub fn load_instance(path: &Path) -> Result<(MtsInstance, Vec<PredictorTrace>)> {
    parse_instance(&fs::read_to_string(path)?)
}

pub fn instance_to_json(inst: &MtsInstance, traces: &[PredictorTrace]) -> Result<String> {
    Ok(serde_json::to_string(&InstanceFile::new(inst, traces))?)
}

pub fn save_instance(path: &Path, inst: &MtsInstance, traces: &[PredictorTrace]) -> Result<()> {
    fs::write(path, instance_to_json(inst, traces)?)?;
    Ok(())
}
