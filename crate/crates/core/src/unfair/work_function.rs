use serde::{Deserialize, Serialize};

/// Work function of an unfair MTS on the uniform metric.
///
/// `v[x]` is the cheapest cost of serving the tasks so far and ending in
/// state `x`, where moving between states costs `r`. `w[i] = min_x v[x] +
/// [i != x]` adds an unscaled trailing move to `i`. Both vectors are stored
/// relative to `base`; absolute values are `v[x] + base` and `w[i] + base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkFunctionState {
    pub w: Vec<f64>,
    pub v: Vec<f64>,
    pub r: f64,
    #[serde(default)]
    pub base: f64,
}

impl WorkFunctionState {
    /// Work function of an algorithm that starts in `start`.
    pub fn starting_at(ell: usize, r: f64, start: usize) -> Self {
        let v = (0..ell).map(|x| if x == start { 0.0 } else { r }).collect();
        Self::from_trajectory_costs(v, r)
    }

    /// Work function when every state is free to start in.
    pub fn free_start(ell: usize, r: f64) -> Self {
        Self::from_trajectory_costs(vec![0.0; ell], r)
    }

    pub fn from_trajectory_costs(v: Vec<f64>, r: f64) -> Self {
        let w = trailing(&v);
        Self { w, v, r, base: 0.0 }
    }

    pub fn ell(&self) -> usize {
        self.v.len()
    }

    /// Absolute work function value of state `i`.
    pub fn value(&self, i: usize) -> f64 {
        self.w[i] + self.base
    }

    /// Shifts the stored values so that `min v = 0`; absolute values are kept.
    pub fn rebase(&mut self) {
        let m = self.v.iter().copied().fold(f64::INFINITY, f64::min);
        if m != 0.0 && m.is_finite() {
            self.v.iter_mut().for_each(|x| *x -= m);
            self.w.iter_mut().for_each(|x| *x -= m);
            self.base += m;
        }
    }

    /// The state after a task that charges `amount` to `state` only.
    pub(crate) fn after_elementary(&self, state: usize, amount: f64) -> Self {
        let min_v = self.v.iter().copied().fold(f64::INFINITY, f64::min);
        let v: Vec<f64> = self
            .v
            .iter()
            .enumerate()
            .map(|(x, &vx)| {
                let c = if x == state { amount } else { 0.0 };
                c + vx.min(min_v + self.r)
            })
            .collect();
        let w = trailing(&v);
        Self {
            w,
            v,
            r: self.r,
            base: self.base,
        }
    }
}

fn trailing(v: &[f64]) -> Vec<f64> {
    let min_v = v.iter().copied().fold(f64::INFINITY, f64::min);
    v.iter().map(|&vx| vx.min(min_v + 1.0)).collect()
}

/// One step of the unfair work function recursion:
/// `v'(x) = c(x) + min_y (v(y) + r [y != x])`, `w'(i) = min_x (v'(x) + [i != x])`.
pub fn work_function_update(s: &WorkFunctionState, c: &[f64]) -> WorkFunctionState {
    assert_eq!(c.len(), s.ell(), "cost vector length must match the state count");
    let min_v = s.v.iter().copied().fold(f64::INFINITY, f64::min);
    let v: Vec<f64> = s
        .v
        .iter()
        .zip(c)
        .map(|(&vx, &cx)| cx + vx.min(min_v + s.r))
        .collect();
    let w = trailing(&v);
    WorkFunctionState {
        w,
        v,
        r: s.r,
        base: s.base,
    }
}
