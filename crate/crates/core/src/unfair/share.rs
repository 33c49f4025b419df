//! Weight sharing for tracking the best expert, used as an unfair-MTS
//! algorithm on the uniform metric.

use serde::{Deserialize, Serialize};

use super::{Charge, Distribution, UnfairAlgorithm};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShareState {
    pub weights: Vec<f64>,
    /// Sharing parameter in `[0, 1/2]`.
    pub alpha: f64,
    /// Per-unit-cost weight multiplier in `[0, 1]`.
    pub beta: f64,
}

impl ShareState {
    pub fn new(ell: usize, alpha: f64, beta: f64) -> Self {
        Self {
            weights: vec![1.0; ell],
            alpha,
            beta,
        }
    }

    pub fn ell(&self) -> usize {
        self.weights.len()
    }

    pub fn distribution(&self) -> Distribution {
        let sum: f64 = self.weights.iter().sum();
        Distribution::from_vec_unchecked(self.weights.iter().map(|w| w / sum).collect())
    }
}

/// `w'(i) = w(i) beta^c(i) + alpha Delta / l` with
/// `Delta = sum_i (w(i) - w(i) beta^c(i))`.
///
/// Costs must lie in `[0, 1]`; larger tasks have to be sliced by the caller.
pub fn share_update(state: &ShareState, c: &[f64]) -> Result<ShareState> {
    if c.len() != state.ell() {
        return Err(Error::structural("share cost vector has the wrong length"));
    }
    if let Some(i) = c.iter().position(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::contract(format!(
            "share cost entry {i} = {} outside [0, 1]",
            c[i]
        )));
    }
    let ell = state.ell() as f64;
    let decayed: Vec<f64> = state
        .weights
        .iter()
        .zip(c)
        .map(|(&w, &x)| w * state.beta.powf(x))
        .collect();
    let delta: f64 = state.weights.iter().zip(&decayed).map(|(w, d)| w - d).sum();
    let shared = state.alpha * delta / ell;
    Ok(ShareState {
        weights: decayed.into_iter().map(|d| d + shared).collect(),
        alpha: state.alpha,
        beta: state.beta,
    })
}

/// Parameters that give an `r`-unfair guarantee on `l` states:
/// `alpha = 1/(2r+1)`, `gamma = ln(l/alpha)/r`, `beta = max(1/2, 1 - gamma)`.
pub fn share_params(r: f64, ell: usize) -> (f64, f64) {
    let alpha = 1.0 / (2.0 * r + 1.0);
    let gamma = (ell as f64 / alpha).ln() / r;
    let beta = f64::max(0.5, 1.0 - gamma);
    (alpha, beta)
}

/// Splits a task into `ceil(max)` equal slices so every slice is bounded by 1.
pub fn slice_unit_bounded(c: &[f64]) -> Vec<Vec<f64>> {
    let max = c.iter().copied().fold(0.0_f64, f64::max);
    if max <= 1.0 {
        return vec![c.to_vec()];
    }
    let k = max.ceil();
    let slice: Vec<f64> = c.iter().map(|x| (x / k).min(1.0)).collect();
    vec![slice; k as usize]
}

/// Share as an online player: its distribution for a step depends only on
/// earlier tasks.
#[derive(Debug, Clone)]
pub struct Share {
    state: ShareState,
}

impl Share {
    pub fn new(ell: usize, alpha: f64, beta: f64) -> Self {
        Self {
            state: ShareState::new(ell, alpha, beta),
        }
    }

    pub fn for_unfairness(ell: usize, r: f64) -> Self {
        let (alpha, beta) = share_params(r, ell);
        Self::new(ell, alpha, beta)
    }

    pub fn state(&self) -> &ShareState {
        &self.state
    }

    fn step(&mut self, c: &[f64]) -> Result<()> {
        let mut next = share_update(&self.state, c)?;
        // The update is homogeneous, so rescaling keeps the distribution and
        // avoids underflow on long runs.
        let sum: f64 = next.weights.iter().sum();
        next.weights.iter_mut().for_each(|w| *w /= sum);
        self.state = next;
        Ok(())
    }
}

impl UnfairAlgorithm for Share {
    fn ell(&self) -> usize {
        self.state.ell()
    }

    fn uses_lookahead(&self) -> bool {
        false
    }

    fn distribution(&self) -> Result<Distribution> {
        Ok(self.state.distribution())
    }

    fn feed(&mut self, cost: &[f64]) -> Result<Charge> {
        let mut charge = Charge::default();
        for slice in slice_unit_bounded(cost) {
            let p = self.state.distribution();
            charge.service += p.dot(&slice);
            self.step(&slice)?;
            charge.movement += p.earth_mover(&self.state.distribution());
        }
        Ok(charge)
    }

    fn advance(&mut self, cost: &[f64]) -> Result<()> {
        slice_unit_bounded(cost).iter().try_for_each(|s| self.step(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn update_examples() {
        let s = ShareState {
            weights: vec![1.0, 1.0],
            alpha: 0.0,
            beta: 0.5,
        };
        let s1 = share_update(&s, &[1.0, 0.0]).unwrap();
        assert_eq!(s1.weights, vec![0.5, 1.0]);
        let p = s1.distribution();
        assert!((p.p()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((p.p()[1] - 2.0 / 3.0).abs() < 1e-15);

        assert_eq!(share_update(&s, &[0.0, 0.0]).unwrap().weights, s.weights);

        let s = ShareState {
            alpha: 0.5,
            ..s
        };
        // Delta = 0.5 + 0.5 = 1; each weight 0.5 + 0.5 * 1 / 2.
        let s1 = share_update(&s, &[1.0, 1.0]).unwrap();
        assert_eq!(s1.weights, vec![0.75, 0.75]);
        assert_eq!(s1.distribution().p(), &[0.5, 0.5]);
    }

    #[test]
    fn costs_above_one_violate_the_contract() {
        let s = ShareState::new(2, 0.1, 0.5);
        assert!(matches!(share_update(&s, &[1.5, 0.0]), Err(Error::Contract(_))));
        assert!(matches!(share_update(&s, &[-0.1, 0.0]), Err(Error::Contract(_))));
    }

    #[test]
    fn params_examples() {
        let (alpha, beta) = share_params(1.0, 2);
        assert!((alpha - 1.0 / 3.0).abs() < 1e-15);
        assert!(6f64.ln() > 1.79 && 6f64.ln() < 1.7918 + 1e-4);
        assert_eq!(beta, 0.5);

        let (alpha, beta) = share_params(8.0, 2);
        assert!((alpha - 1.0 / 17.0).abs() < 1e-15);
        let gamma = 34f64.ln() / 8.0;
        assert!((gamma - 0.4408).abs() < 1e-3);
        assert!((beta - (1.0 - gamma)).abs() < 1e-15);
        assert!((beta - 0.5591).abs() < 1e-3);

        let (alpha, beta) = share_params(1e9, 4);
        assert!(alpha > 0.0 && alpha < 1e-8);
        assert!(beta < 1.0 && beta > 1.0 - 1e-6);
    }

    #[test]
    fn slicing_bounds_each_piece_by_one() {
        let slices = slice_unit_bounded(&[2.5, 0.5]);
        assert_eq!(slices.len(), 3);
        for s in &slices {
            assert!(s.iter().all(|&x| x <= 1.0));
        }
        let total: f64 = slices.iter().map(|s| s[0]).sum();
        assert!((total - 2.5).abs() < 1e-12);
        assert_eq!(slice_unit_bounded(&[0.3, 1.0]), vec![vec![0.3, 1.0]]);
    }
}
