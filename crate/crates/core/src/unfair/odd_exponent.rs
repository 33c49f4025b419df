//! Work-function algorithm with odd-power probabilities for unfair MTS on the
//! uniform metric.
//!
//! The probability of state `j` is `1/l + (1/l) sum_i (w(i) - w(j))^a` for an
//! odd exponent `a`. Odd powers are antisymmetric, so the probabilities always
//! sum to one; they stay non-negative only if every task charges a single
//! state and stops as soon as that state's probability reaches zero. Arbitrary
//! cost vectors are therefore split into such elementary tasks first.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::work_function::WorkFunctionState;
use super::{Charge, Distribution, UnfairAlgorithm};
use crate::error::{Error, Result};
use crate::model::TOL;

/// Probabilities at or below this are treated as zero mass.
const SATURATION_EPS: f64 = 1e-12;
/// Bracket width at which the truncation bisection stops.
const BISECTION_TOL: f64 = 1e-12;

/// The nearest odd integer to `ln l`, at least 1.
pub fn odd_exponent_for(ell: usize) -> u32 {
    let ln = (ell.max(1) as f64).ln();
    let k = ((ln - 1.0) / 2.0).round().max(0.0);
    2 * k as u32 + 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddExponentState {
    pub wf: WorkFunctionState,
    pub a: u32,
    /// States currently holding no probability mass.
    pub saturated: BTreeSet<usize>,
}

impl OddExponentState {
    pub fn new(wf: WorkFunctionState, a: u32) -> Self {
        assert!(a % 2 == 1, "exponent must be odd");
        let mut s = Self {
            wf,
            a,
            saturated: BTreeSet::new(),
        };
        s.refresh_saturation();
        s
    }

    /// Starts in `start`, or anywhere for free when `start` is `None`.
    pub fn for_uniform(ell: usize, r: f64, start: Option<usize>) -> Self {
        let wf = match start {
            Some(s) => WorkFunctionState::starting_at(ell, r, s),
            None => WorkFunctionState::free_start(ell, r),
        };
        Self::new(wf, odd_exponent_for(ell))
    }

    pub fn ell(&self) -> usize {
        self.wf.ell()
    }

    /// The unclamped probability formula for state `j`.
    pub fn raw_probability(&self, j: usize) -> f64 {
        let ell = self.ell() as f64;
        let wj = self.wf.w[j];
        let a = self.a as i32;
        let s: f64 = self.wf.w.iter().map(|&wi| (wi - wj).powi(a)).sum();
        (1.0 + s) / ell
    }

    fn with_wf(&self, wf: WorkFunctionState) -> Self {
        Self {
            wf,
            a: self.a,
            saturated: self.saturated.clone(),
        }
    }

    /// Recomputes the zero-mass set from the formula.
    fn refresh_saturation(&mut self) {
        self.saturated = (0..self.ell())
            .filter(|&j| self.raw_probability(j) <= SATURATION_EPS)
            .collect();
    }
}

/// The distribution over states defined by the current work function.
///
/// Saturated states get exactly zero and the rest is renormalized. Saturated
/// states can sit at the work-function cap; when the minimum rises they rise
/// with it, so their formula value may drift below zero. A non-saturated state
/// with probability below `-1e-9` means the elementary-task precondition was
/// broken.
pub fn odd_exponent_distribution(state: &OddExponentState) -> Result<Distribution> {
    let ell = state.ell();
    let mut p = Vec::with_capacity(ell);
    for j in 0..ell {
        if state.saturated.contains(&j) {
            p.push(0.0);
            continue;
        }
        let pj = state.raw_probability(j);
        if pj < -TOL {
            return Err(Error::contract(format!(
                "odd-exponent probability of state {j} is {pj}; cost was not split"
            )));
        }
        p.push(pj.max(0.0));
    }
    let sum: f64 = p.iter().sum();
    if sum <= 0.0 || !sum.is_finite() {
        return Err(Error::contract(format!("odd-exponent probabilities sum to {sum}")));
    }
    p.iter_mut().for_each(|x| *x /= sum);
    Ok(Distribution::from_vec_unchecked(p))
}

/// A task charging `amount` to `state` and nothing elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementaryCost {
    pub state: usize,
    pub amount: f64,
}

impl ElementaryCost {
    pub fn to_vector(&self, ell: usize) -> Vec<f64> {
        let mut v = vec![0.0; ell];
        v[self.state] = self.amount;
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitOutcome {
    pub pieces: Vec<ElementaryCost>,
    /// Cost removed because it would have pushed a probability below zero.
    pub truncated: f64,
    /// Cost that arrived on a state already holding no mass.
    pub dropped_on_saturated: f64,
    /// Number of coordinates whose cost hit an already saturated state.
    pub saturated_hits: usize,
    pub state: OddExponentState,
}

/// Splits `c` into elementary tasks, coordinates in increasing order.
///
/// Cost on a saturated state is dropped. If charging a coordinate in full
/// would make its probability negative, only the smallest amount that brings
/// it to zero is emitted (found by bisection) and the state saturates.
pub fn split_elementary(state: &OddExponentState, c: &[f64]) -> SplitOutcome {
    assert_eq!(c.len(), state.ell(), "cost vector length must match the state count");
    let mut cur = state.clone();
    let mut pieces = Vec::new();
    let mut truncated = 0.0;
    let mut dropped = 0.0;
    let mut hits = 0;
    for (i, &amount) in c.iter().enumerate() {
        if amount <= 0.0 {
            continue;
        }
        if cur.saturated.contains(&i) {
            dropped += amount;
            hits += 1;
            continue;
        }
        let full = cur.with_wf(cur.wf.after_elementary(i, amount));
        let (emit, mut next) = if full.raw_probability(i) > SATURATION_EPS {
            (amount, full)
        } else {
            let p_at = |x: f64| cur.wf.after_elementary(i, x);
            let (mut lo, mut hi) = (0.0_f64, amount);
            for _ in 0..200 {
                if hi - lo <= BISECTION_TOL {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if cur.with_wf(p_at(mid)).raw_probability(i) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            truncated += amount - hi;
            let mut s = cur.with_wf(p_at(hi));
            s.saturated.insert(i);
            (hi, s)
        };
        next.refresh_saturation();
        let piece = ElementaryCost {
            state: i,
            amount: emit,
        };
        pieces.push(piece);
        cur = next;
    }
    SplitOutcome {
        pieces,
        truncated,
        dropped_on_saturated: dropped,
        saturated_hits: hits,
        state: cur,
    }
}

/// Running totals of what the splitting did to the input.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    pub pieces: usize,
    pub truncated: f64,
    pub dropped_on_saturated: f64,
    /// Number of input coordinates that hit an already saturated state.
    pub saturated_hits: usize,
}

/// The odd-exponent algorithm as an online unfair-MTS player.
#[derive(Debug, Clone)]
pub struct OddExponent {
    state: OddExponentState,
    stats: SplitStats,
}

impl OddExponent {
    pub fn new(state: OddExponentState) -> Self {
        Self {
            state,
            stats: SplitStats::default(),
        }
    }

    pub fn state(&self) -> &OddExponentState {
        &self.state
    }

    pub fn stats(&self) -> SplitStats {
        self.stats
    }

    fn absorb(&mut self, out: SplitOutcome) {
        self.stats.pieces += out.pieces.len();
        self.stats.truncated += out.truncated;
        self.stats.dropped_on_saturated += out.dropped_on_saturated;
        self.stats.saturated_hits += out.saturated_hits;
        self.state = out.state;
        self.state.wf.rebase();
    }
}

impl UnfairAlgorithm for OddExponent {
    fn ell(&self) -> usize {
        self.state.ell()
    }

    fn uses_lookahead(&self) -> bool {
        true
    }

    fn distribution(&self) -> Result<Distribution> {
        odd_exponent_distribution(&self.state)
    }

    /// Pays `<p_after, c>` plus the earth-mover distance from the
    /// distribution before the step to the one after it. The elementary
    /// pieces only drive the work function; the player moves once per step.
    fn feed(&mut self, cost: &[f64]) -> Result<Charge> {
        let before = odd_exponent_distribution(&self.state)?;
        let out = split_elementary(&self.state, cost);
        self.absorb(out);
        let after = odd_exponent_distribution(&self.state)?;
        Ok(Charge {
            service: after.p().iter().zip(cost).map(|(p, c)| p * c).sum(),
            movement: before.earth_mover(&after),
        })
    }

    fn advance(&mut self, cost: &[f64]) -> Result<()> {
        let out = split_elementary(&self.state, cost);
        self.absorb(out);
        odd_exponent_distribution(&self.state).map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state_with_w(w: Vec<f64>, a: u32) -> OddExponentState {
        // With v = w (all gaps <= 1), the trailing minimum reproduces w.
        OddExponentState::new(WorkFunctionState::from_trajectory_costs(w, 1.0), a)
    }

    #[test]
    fn exponent_is_nearest_odd_to_log() {
        assert_eq!(odd_exponent_for(2), 1);
        assert_eq!(odd_exponent_for(4), 1);
        assert_eq!(odd_exponent_for(8), 3);
        assert_eq!(odd_exponent_for(16), 3);
        assert_eq!(odd_exponent_for(1), 1);
        assert_eq!(odd_exponent_for(1000), 7);
    }

    #[test]
    fn distribution_examples() {
        // (1/2)(1 + (0 - 0) + (1 - 0)) = 1 and (1/2)(1 + (0 - 1)) = 0.
        let p = odd_exponent_distribution(&state_with_w(vec![0.0, 1.0], 1)).unwrap();
        assert_eq!(p.p(), &[1.0, 0.0]);

        let p = odd_exponent_distribution(&state_with_w(vec![0.4; 5], 3)).unwrap();
        for &x in p.p() {
            assert!((x - 0.2).abs() < 1e-15);
        }

        let p = odd_exponent_distribution(&state_with_w(vec![0.0, 0.0, 0.3], 1)).unwrap();
        let expect = [13.0 / 30.0, 13.0 / 30.0, 4.0 / 30.0];
        for (x, e) in p.p().iter().zip(expect) {
            assert!((x - e).abs() < 1e-12);
        }
        assert!((p.p().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn negative_probability_is_a_contract_violation() {
        // l = 3, a = 1: w = (0, 0, 1) gives p_3 = (1 - 2)/3 < 0.
        let mut s = state_with_w(vec![0.0, 0.0, 1.0], 1);
        s.saturated.clear();
        assert!(matches!(odd_exponent_distribution(&s), Err(Error::Contract(_))));
    }

    #[test]
    fn split_without_saturation_risk() {
        let s = OddExponentState::for_uniform(2, 4.0, None);
        let out = split_elementary(&s, &[0.4, 0.3]);
        assert_eq!(
            out.pieces,
            vec![
                ElementaryCost { state: 0, amount: 0.4 },
                ElementaryCost { state: 1, amount: 0.3 }
            ]
        );
        assert_eq!(out.pieces[0].to_vector(2), vec![0.4, 0.0]);
        assert_eq!(out.truncated, 0.0);
        assert!(split_elementary(&s, &[0.0, 0.0]).pieces.is_empty());
    }

    #[test]
    fn split_truncates_at_zero_mass() {
        // w = (0, 0.6) with a = 1: p_2 = (1 - 0.6)/2 = 0.2 and reaches 0 once the
        // gap is 1, i.e. after 0.4 of the requested 1.0.
        let s = state_with_w(vec![0.0, 0.6], 1);
        let out = split_elementary(&s, &[0.0, 1.0]);
        assert_eq!(out.pieces.len(), 1);
        let emitted = out.pieces[0].amount;
        assert!((emitted - 0.4).abs() < 1e-9, "emitted {emitted}");
        assert!((out.truncated - 0.6).abs() < 1e-9);
        assert!(out.state.saturated.contains(&1));
        // Sign change oracle: just below the emitted value the mass is positive.
        let below = s.with_wf(s.wf.after_elementary(1, emitted - 1e-6));
        assert!(below.raw_probability(1) > 0.0);
        let p = odd_exponent_distribution(&out.state).unwrap();
        assert_eq!(p.p(), &[1.0, 0.0]);
    }

    #[test]
    fn cost_on_saturated_state_is_dropped_and_mass_can_return() {
        let s = state_with_w(vec![0.0, 1.0], 1);
        assert!(s.saturated.contains(&1));
        let out = split_elementary(&s, &[0.0, 0.7]);
        assert!(out.pieces.is_empty());
        assert_eq!(out.dropped_on_saturated, 0.7);
        // Charging the other state lowers the gap and returns mass to state 2.
        let out = split_elementary(&s, &[0.5, 0.0]);
        assert!(!out.state.saturated.contains(&1));
        let p = odd_exponent_distribution(&out.state).unwrap();
        assert!((p.p()[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn hand_run_of_two_point_combine_input() {
        // Free start, l = 2, a = 1, large r. Task (3, 1): state 1 saturates
        // after 1 unit (2 truncated); then state 2 absorbs 1 and the gap closes.
        let s = OddExponentState::for_uniform(2, 50.0, None);
        let out = split_elementary(&s, &[3.0, 1.0]);
        assert_eq!(out.pieces.len(), 2);
        assert!((out.pieces[0].amount - 1.0).abs() < 1e-9);
        assert!((out.pieces[1].amount - 1.0).abs() < 1e-12);
        let p = odd_exponent_distribution(&out.state).unwrap();
        assert!((p.p()[0] - 0.5).abs() < 1e-9);
        // Task (0, 3): state 2 saturates after 1 unit.
        let out = split_elementary(&out.state, &[0.0, 3.0]);
        let p = odd_exponent_distribution(&out.state).unwrap();
        assert!((p.p()[0] - 1.0).abs() < 1e-9);
    }
}
