//! Finite metric spaces, MTS instances, predictor traces and exact cost
//! accounting.
//!
//! Time steps are 0-based throughout the crate: `costs[t]` is the task served
//! at step `t`, and the state "before step 0" is the instance's initial state.
//! Every predictor is taken to sit at the initial state before step 0.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Absolute tolerance used for every floating-point equality in the crate.
pub const TOL: f64 = 1e-9;

/// Sentinel cost of a state that cannot serve a task.
///
/// IEEE infinity already has the required algebra: `INFEASIBLE + x` stays
/// infeasible and `min(INFEASIBLE, x) = x`.
pub const INFEASIBLE: f64 = f64::INFINITY;

/// One violated metric axiom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MetricViolation {
    NonFinite { i: usize, j: usize },
    Negative { i: usize, j: usize },
    NonZeroDiagonal { i: usize },
    Asymmetric { i: usize, j: usize },
    /// `dist[i][k] > dist[i][j] + dist[j][k]`.
    Triangle { i: usize, j: usize, k: usize },
}

impl fmt::Display for MetricViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonFinite { i, j } => write!(f, "d({i},{j}) is not finite"),
            Self::Negative { i, j } => write!(f, "d({i},{j}) is negative"),
            Self::NonZeroDiagonal { i } => write!(f, "d({i},{i}) != 0"),
            Self::Asymmetric { i, j } => write!(f, "d({i},{j}) != d({j},{i})"),
            Self::Triangle { i, j, k } => write!(f, "d({i},{k}) > d({i},{j}) + d({j},{k})"),
        }
    }
}

/// Checks the metric axioms of a distance matrix.
///
/// Returns the list of violations (empty for a valid metric). Unordered pairs
/// and triples are reported once, with the endpoints in increasing order. A
/// non-square matrix or one whose size differs from `num_points` is a
/// structural error.
pub fn validate_metric(num_points: usize, dist: &[Vec<f64>]) -> Result<Vec<MetricViolation>> {
    if dist.len() != num_points {
        return Err(Error::structural(format!(
            "distance matrix has {} rows for {num_points} points",
            dist.len()
        )));
    }
    if let Some((row, r)) = dist.iter().enumerate().find(|(_, r)| r.len() != num_points) {
        return Err(Error::structural(format!(
            "distance row {row} has {} entries, expected {num_points}",
            r.len()
        )));
    }
    let n = num_points;
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = dist[i][j];
            if !v.is_finite() {
                out.push(MetricViolation::NonFinite { i, j });
            } else if v < 0.0 {
                out.push(MetricViolation::Negative { i, j });
            }
        }
    }
    if !out.is_empty() {
        return Ok(out);
    }
    for i in 0..n {
        if dist[i][i].abs() > TOL {
            out.push(MetricViolation::NonZeroDiagonal { i });
        }
        for j in i + 1..n {
            if (dist[i][j] - dist[j][i]).abs() > TOL {
                out.push(MetricViolation::Asymmetric { i, j });
            }
        }
    }
    for i in 0..n {
        for k in i + 1..n {
            for j in (0..n).filter(|&j| j != i && j != k) {
                if dist[i][k] > dist[i][j] + dist[j][k] + TOL {
                    out.push(MetricViolation::Triangle { i, j, k });
                }
            }
        }
    }
    Ok(out)
}

/// A finite metric space given by its distance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMetric")]
pub struct MetricSpace {
    points: Vec<String>,
    dist: Vec<Vec<f64>>,
    #[serde(skip_serializing)]
    diameter: f64,
}

#[derive(Deserialize)]
struct RawMetric {
    points: Vec<String>,
    dist: Vec<Vec<f64>>,
}

impl TryFrom<RawMetric> for MetricSpace {
    type Error = Error;

    fn try_from(raw: RawMetric) -> Result<Self> {
        MetricSpace::new(raw.points, raw.dist)
    }
}

impl MetricSpace {
    pub fn new(points: Vec<String>, dist: Vec<Vec<f64>>) -> Result<Self> {
        let violations = validate_metric(points.len(), &dist)?;
        if !violations.is_empty() {
            return Err(Error::InvalidMetric(violations));
        }
        if points.is_empty() {
            return Err(Error::structural("metric space has no points"));
        }
        let diameter = dist
            .iter()
            .flat_map(|r| r.iter().copied())
            .fold(0.0_f64, f64::max);
        if points.len() >= 2 && diameter <= 0.0 {
            return Err(Error::structural("metric with >= 2 points has zero diameter"));
        }
        Ok(Self {
            points,
            dist,
            diameter,
        })
    }

    /// The `n`-point uniform metric (all distances 1).
    pub fn uniform(n: usize) -> Self {
        let dist = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        Self::new(default_names(n), dist).expect("uniform metric is valid")
    }

    /// Points on the real line at the given coordinates.
    pub fn line(positions: &[f64]) -> Result<Self> {
        let dist = positions
            .iter()
            .map(|a| positions.iter().map(|b| (a - b).abs()).collect())
            .collect();
        Self::new(default_names(positions.len()), dist)
    }

    /// Points in the plane under the Euclidean distance.
    pub fn euclidean(coords: &[(f64, f64)]) -> Result<Self> {
        let dist = coords
            .iter()
            .map(|a| coords.iter().map(|b| (a.0 - b.0).hypot(a.1 - b.1)).collect())
            .collect();
        Self::new(default_names(coords.len()), dist)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.dist
    }

    #[inline]
    pub fn d(&self, a: usize, b: usize) -> f64 {
        self.dist[a][b]
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Multiplies every distance by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        let dist = self
            .dist
            .iter()
            .map(|r| r.iter().map(|v| v * factor).collect())
            .collect();
        Self {
            points: self.points.clone(),
            dist,
            diameter: self.diameter * factor,
        }
    }
}

fn default_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("p{i}")).collect()
}

/// Task cost over the states of a metric; entries are non-negative reals or
/// [`INFEASIBLE`], with at least one finite entry.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVector(Vec<f64>);

impl CostVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::structural(format!(
                "cost entry {i} is {} (must be >= 0 or infeasible)",
                values[i]
            )));
        }
        if let Some(i) = values.iter().position(|v| v.is_infinite() && *v < 0.0) {
            return Err(Error::structural(format!("cost entry {i} is -inf")));
        }
        if !values.iter().any(|v| v.is_finite()) {
            return Err(Error::structural("cost vector has no feasible state"));
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    pub fn is_feasible(&self, i: usize) -> bool {
        self.0[i].is_finite()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Minimum over the finite entries.
    pub fn min_finite(&self) -> f64 {
        self.0
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(f64::INFINITY, f64::min)
    }
}

impl Serialize for CostVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for v in &self.0 {
            seq.serialize_element(&CostEntry(*v))?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for CostVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<CostEntry>::deserialize(d)?;
        CostVector::new(entries.into_iter().map(|e| e.0).collect())
            .map_err(serde::de::Error::custom)
    }
}

/// A cost number as it appears in instance files: a JSON number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostEntry(pub f64);

impl Serialize for CostEntry {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for CostEntry {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(CostEntry(v)),
            Raw::Str(s) if s == "inf" => Ok(CostEntry(INFEASIBLE)),
            Raw::Str(s) => Err(serde::de::Error::custom(format!(
                "cost entry must be a number or \"inf\", got {s:?}"
            ))),
        }
    }
}

/// A metrical task system instance: metric, initial state and `T >= 1` tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance")]
pub struct MtsInstance {
    metric: MetricSpace,
    initial_state: usize,
    costs: Vec<CostVector>,
}

#[derive(Deserialize)]
struct RawInstance {
    metric: MetricSpace,
    initial_state: usize,
    costs: Vec<CostVector>,
}

impl TryFrom<RawInstance> for MtsInstance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        MtsInstance::new(raw.metric, raw.initial_state, raw.costs)
    }
}

impl MtsInstance {
    pub fn new(metric: MetricSpace, initial_state: usize, costs: Vec<CostVector>) -> Result<Self> {
        if costs.is_empty() {
            return Err(Error::structural("instance has no tasks (T = 0)"));
        }
        if initial_state >= metric.len() {
            return Err(Error::structural(format!(
                "initial state {initial_state} out of range for {} points",
                metric.len()
            )));
        }
        if let Some(t) = costs.iter().position(|c| c.len() != metric.len()) {
            return Err(Error::structural(format!(
                "cost vector {t} has {} entries for {} points",
                costs[t].len(),
                metric.len()
            )));
        }
        Ok(Self {
            metric,
            initial_state,
            costs,
        })
    }

    pub fn metric(&self) -> &MetricSpace {
        &self.metric
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn costs(&self) -> &[CostVector] {
        &self.costs
    }

    #[inline]
    pub fn cost(&self, t: usize, state: usize) -> f64 {
        self.costs[t].get(state)
    }

    /// Number of tasks `T`.
    pub fn horizon(&self) -> usize {
        self.costs.len()
    }

    pub fn num_states(&self) -> usize {
        self.metric.len()
    }

    pub fn diameter(&self) -> f64 {
        self.metric.diameter()
    }

    /// The instance restricted to its first `t` tasks.
    pub fn prefix(&self, t: usize) -> Result<Self> {
        Self::new(
            self.metric.clone(),
            self.initial_state,
            self.costs[..t.min(self.costs.len())].to_vec(),
        )
    }

    /// The state occupied before step `t` by someone playing `states`.
    #[inline]
    pub fn previous(&self, states: &[usize], t: usize) -> usize {
        if t == 0 {
            self.initial_state
        } else {
            states[t - 1]
        }
    }
}

/// The states suggested by one predictor at steps `0..T`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictorTrace {
    pub states: Vec<usize>,
}

impl PredictorTrace {
    pub fn new(states: Vec<usize>) -> Self {
        Self { states }
    }

    pub fn constant(state: usize, horizon: usize) -> Self {
        Self {
            states: vec![state; horizon],
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    #[inline]
    pub fn at(&self, t: usize) -> usize {
        self.states[t]
    }

    /// Position before step `t` (the initial state for `t = 0`).
    #[inline]
    pub fn before(&self, inst: &MtsInstance, t: usize) -> usize {
        inst.previous(&self.states, t)
    }

    pub fn validate_for(&self, inst: &MtsInstance) -> Result<()> {
        if self.states.len() != inst.horizon() {
            return Err(Error::structural(format!(
                "trace has {} steps, instance has {}",
                self.states.len(),
                inst.horizon()
            )));
        }
        if let Some(t) = self.states.iter().position(|&s| s >= inst.num_states()) {
            return Err(Error::structural(format!(
                "trace state {} at step {t} out of range",
                self.states[t]
            )));
        }
        Ok(())
    }
}

pub fn validate_traces(inst: &MtsInstance, traces: &[PredictorTrace]) -> Result<()> {
    if traces.is_empty() {
        return Err(Error::structural("no predictor traces"));
    }
    traces.iter().try_for_each(|tr| tr.validate_for(inst))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepCost {
    pub movement: f64,
    pub service: f64,
}

impl StepCost {
    pub fn total(&self) -> f64 {
        self.movement + self.service
    }
}

/// A realized algorithm run with exact per-step accounting.
///
/// `states[t]` is where task `t` was served and `positions[t]` where the
/// algorithm stands at the end of step `t`. They differ only for algorithms
/// that serve a task away from their position and walk back (the bandit
/// exploration detour); `movement[t]` then covers both legs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<usize>,
    pub positions: Vec<usize>,
    pub steps: Vec<StepCost>,
    pub total: f64,
}

impl Trajectory {
    pub(crate) fn with_capacity(n: usize) -> Self {
        Self {
            states: Vec::with_capacity(n),
            positions: Vec::with_capacity(n),
            steps: Vec::with_capacity(n),
            total: 0.0,
        }
    }

    /// Appends a step served at `serve` that ends at `end`, coming from `from`.
    pub(crate) fn push_detour(
        &mut self,
        inst: &MtsInstance,
        t: usize,
        from: usize,
        serve: usize,
        end: usize,
    ) -> Result<()> {
        let service = inst.cost(t, serve);
        if !service.is_finite() {
            return Err(Error::InfeasibleTrajectory { t });
        }
        let m = inst.metric();
        let step = StepCost {
            movement: m.d(from, serve) + m.d(serve, end),
            service,
        };
        self.states.push(serve);
        self.positions.push(end);
        self.total += step.total();
        self.steps.push(step);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn movement(&self) -> f64 {
        self.steps.iter().map(|s| s.movement).sum()
    }

    pub fn service(&self) -> f64 {
        self.steps.iter().map(|s| s.service).sum()
    }

    /// Total cost of the first `t` steps.
    pub fn prefix_total(&self, t: usize) -> f64 {
        self.steps[..t].iter().map(StepCost::total).sum()
    }
}

/// Exact cost of playing `states` on `inst`.
///
/// Fails with [`Error::InfeasibleTrajectory`] at the first step whose state is
/// infeasible.
pub fn trajectory_cost(inst: &MtsInstance, states: &[usize]) -> Result<Trajectory> {
    if states.len() != inst.horizon() {
        return Err(Error::structural(format!(
            "state sequence has {} steps, instance has {}",
            states.len(),
            inst.horizon()
        )));
    }
    if let Some(t) = states.iter().position(|&s| s >= inst.num_states()) {
        return Err(Error::structural(format!("state at step {t} out of range")));
    }
    let mut traj = Trajectory::with_capacity(states.len());
    for (t, &s) in states.iter().enumerate() {
        let prev = inst.previous(states, t);
        traj.push_detour(inst, t, prev, s, s)?;
    }
    Ok(traj)
}

/// `f_t(P_i)`: the movement plus service cost the predictor pays at step `t`.
pub fn predictor_step_cost(inst: &MtsInstance, trace: &PredictorTrace, t: usize) -> Result<f64> {
    let f = raw_predictor_step_cost(inst, trace, t);
    if f.is_finite() {
        Ok(f)
    } else {
        Err(Error::InfeasiblePredictor { predictor: 0, t })
    }
}

/// Like [`predictor_step_cost`] but returns [`INFEASIBLE`] instead of failing.
#[inline]
pub fn raw_predictor_step_cost(inst: &MtsInstance, trace: &PredictorTrace, t: usize) -> f64 {
    let s = trace.at(t);
    inst.metric().d(trace.before(inst, t), s) + inst.cost(t, s)
}

/// Table `f[t][i]` of predictor step costs; infeasible entries are an error.
pub fn predictor_cost_table(inst: &MtsInstance, traces: &[PredictorTrace]) -> Result<Vec<Vec<f64>>> {
    validate_traces(inst, traces)?;
    (0..inst.horizon())
        .map(|t| {
            traces
                .iter()
                .enumerate()
                .map(|(i, tr)| {
                    let f = raw_predictor_step_cost(inst, tr, t);
                    if f.is_finite() {
                        Ok(f)
                    } else {
                        Err(Error::InfeasiblePredictor { predictor: i, t })
                    }
                })
                .collect()
        })
        .collect()
}

/// Total cost of a predictor's trace (infeasible traces give [`INFEASIBLE`]).
pub fn trace_cost(inst: &MtsInstance, trace: &PredictorTrace) -> f64 {
    (0..inst.horizon())
        .map(|t| raw_predictor_step_cost(inst, trace, t))
        .sum()
}

/// Shifts every task so its cheapest feasible state costs 0.
///
/// Returns the shifted instance and the per-step offsets; every state
/// sequence becomes cheaper by exactly the sum of the offsets.
pub fn normalize_costs(inst: &MtsInstance) -> (MtsInstance, Vec<f64>) {
    let mut offsets = Vec::with_capacity(inst.horizon());
    let costs = inst
        .costs()
        .iter()
        .map(|c| {
            let m = c.min_finite();
            offsets.push(m);
            CostVector(c.as_slice().iter().map(|v| v - m).collect())
        })
        .collect();
    let out = MtsInstance {
        metric: inst.metric.clone(),
        initial_state: inst.initial_state,
        costs,
    };
    (out, offsets)
}

/// True when every task has a zero-cost state (within [`TOL`]).
pub fn is_normalized(inst: &MtsInstance) -> bool {
    inst.costs().iter().all(|c| c.min_finite().abs() <= TOL)
}

/// Predictor costs truncated at a cap, with a flag wherever the cap fired.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CappedCosts {
    /// `table[t][i]`.
    pub table: Vec<Vec<f64>>,
    pub capped: Vec<Vec<bool>>,
    pub cap: f64,
}

impl CappedCosts {
    pub fn num_capped(&self) -> usize {
        self.capped.iter().flatten().filter(|&&c| c).count()
    }
}

pub fn cap_cost_table(raw: &[Vec<f64>], cap: f64) -> CappedCosts {
    let mut capped = Vec::with_capacity(raw.len());
    let table = raw
        .iter()
        .map(|row| {
            let mut flags = Vec::with_capacity(row.len());
            let r = row
                .iter()
                .map(|&f| {
                    flags.push(f > cap);
                    f.min(cap)
                })
                .collect();
            capped.push(flags);
            r
        })
        .collect();
    CappedCosts { table, capped, cap }
}

/// `min(f_t(i), 2D)` for every predictor and step.
///
/// On a normalized instance a predictor can always serve at a zero-cost state
/// and walk back, so `2D` bounds what following it needs to cost. Infeasible
/// predictor steps are capped too.
pub fn cap_predictor_costs(inst: &MtsInstance, traces: &[PredictorTrace]) -> Result<CappedCosts> {
    validate_traces(inst, traces)?;
    let raw: Vec<Vec<f64>> = (0..inst.horizon())
        .map(|t| {
            traces
                .iter()
                .map(|tr| raw_predictor_step_cost(inst, tr, t))
                .collect()
        })
        .collect();
    Ok(cap_cost_table(&raw, 2.0 * inst.diameter()))
}

/// Replaces infeasible costs by the finite penalty `10 * T * D`.
///
/// Weight-based subroutines need finite costs; benchmarks keep the sentinel.
pub fn penalize_infeasible(inst: &MtsInstance) -> (MtsInstance, f64) {
    let penalty = 10.0 * inst.horizon() as f64 * inst.diameter().max(1.0);
    let costs = inst
        .costs()
        .iter()
        .map(|c| CostVector(c.as_slice().iter().map(|&v| if v.is_finite() { v } else { penalty }).collect()))
        .collect();
    (
        MtsInstance {
            metric: inst.metric.clone(),
            initial_state: inst.initial_state,
            costs,
        },
        penalty,
    )
}
