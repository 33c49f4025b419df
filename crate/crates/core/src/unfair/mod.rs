//! Unfair metrical task systems on the uniform metric.
//!
//! The online player pays 1 per state change while the offline optimum pays
//! `r`. Two players are provided: [`OddExponent`] (work functions with odd
//! powers, needs one step of lookahead) and [`Share`] (fixed-share weights,
//! no lookahead).

mod coupling;
mod odd_exponent;
mod opt;
mod share;
mod work_function;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TOL;

pub use coupling::sample_coupled_state;
pub use odd_exponent::{
    odd_exponent_distribution, odd_exponent_for, split_elementary, ElementaryCost, OddExponent,
    OddExponentState, SplitOutcome, SplitStats,
};
pub use opt::unfair_opt;
pub use share::{share_params, share_update, slice_unit_bounded, Share, ShareState};
pub use work_function::{work_function_update, WorkFunctionState};

/// A probability vector over the states of a uniform metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    p: Vec<f64>,
}

impl Distribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::structural("empty distribution"));
        }
        if let Some(i) = p.iter().position(|x| !(-TOL..=1.0 + TOL).contains(x)) {
            return Err(Error::contract(format!("probability {i} is {}", p[i])));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > TOL {
            return Err(Error::contract(format!("probabilities sum to {sum}")));
        }
        Ok(Self { p })
    }

    pub(crate) fn from_vec_unchecked(p: Vec<f64>) -> Self {
        Self { p }
    }

    pub fn uniform(ell: usize) -> Self {
        Self {
            p: vec![1.0 / ell as f64; ell],
        }
    }

    pub fn point(ell: usize, state: usize) -> Self {
        let mut p = vec![0.0; ell];
        p[state] = 1.0;
        Self { p }
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn dot(&self, c: &[f64]) -> f64 {
        self.p.iter().zip(c).map(|(p, c)| p * c).sum()
    }

    /// Earth mover's distance on the uniform metric, `sum_i (p(i) - q(i))+`.
    pub fn earth_mover(&self, other: &Distribution) -> f64 {
        self.p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| (a - b).max(0.0))
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let mut x: f64 = rng.random();
        for (i, &pi) in self.p.iter().enumerate() {
            if x < pi {
                return i;
            }
            x -= pi;
        }
        self.p.iter().rposition(|&pi| pi > 0.0).unwrap_or(0)
    }
}

/// Expected cost an unfair-MTS player pays for one task.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Charge {
    pub service: f64,
    pub movement: f64,
}

impl Charge {
    pub fn total(&self) -> f64 {
        self.service + self.movement
    }
}

/// An online player for unfair MTS on `l` uniformly spaced states.
pub trait UnfairAlgorithm {
    fn ell(&self) -> usize;

    /// Whether the distribution for a task is computed after seeing it.
    fn uses_lookahead(&self) -> bool;

    /// The distribution the player currently holds.
    fn distribution(&self) -> Result<Distribution>;

    /// Processes a task and returns the expected service and movement paid
    /// for it.
    fn feed(&mut self, cost: &[f64]) -> Result<Charge>;

    /// Processes a task without cost accounting.
    fn advance(&mut self, cost: &[f64]) -> Result<()> {
        self.feed(cost).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subroutine {
    OddExponent,
    Share,
}

impl Subroutine {
    pub fn name(self) -> &'static str {
        match self {
            Subroutine::OddExponent => "oddexponent",
            Subroutine::Share => "share",
        }
    }

    /// A fresh player; `start = None` lets every state be a free start.
    pub fn build(self, ell: usize, r: f64, start: Option<usize>) -> Box<dyn UnfairAlgorithm + Send> {
        match self {
            Subroutine::OddExponent => {
                Box::new(OddExponent::new(OddExponentState::for_uniform(ell, r, start)))
            }
            Subroutine::Share => Box::new(Share::for_unfairness(ell, r)),
        }
    }

    /// Proven unfair competitive ratio for `l` states and unfairness `r`.
    pub fn ratio_bound(self, ell: usize, r: f64) -> f64 {
        let ln = (ell as f64).ln();
        match self {
            Subroutine::OddExponent => 1.0 + 2.0 * std::f64::consts::E * ln / r,
            Subroutine::Share => 1.0 + 8.0 / r * (ln + (2.0 * r + 1.0).ln()),
        }
    }
}

impl fmt::Display for Subroutine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subroutine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "oddexponent" | "odd_exponent" | "odd-exponent" => Ok(Subroutine::OddExponent),
            "share" => Ok(Subroutine::Share),
            _ => Err(Error::Parse(format!("unknown subroutine {s:?}"))),
        }
    }
}

/// The unfairness `r` at which the subroutine's ratio drops to `1 + eps`.
///
/// Closed form for OddExponent. For Share the excess `(8/r)(ln l +
/// ln(2r+1))` is decreasing in `r`, so the smallest admissible `r` is found by
/// bisection.
pub fn unfair_rate_for_epsilon(eps: f64, ell: usize, alg: Subroutine) -> f64 {
    assert!(eps > 0.0, "epsilon must be positive");
    let ln = (ell.max(2) as f64).ln();
    match alg {
        Subroutine::OddExponent => 2.0 * std::f64::consts::E * ln / eps,
        Subroutine::Share => {
            let excess = |r: f64| 8.0 / r * (ln + (2.0 * r + 1.0).ln());
            let mut hi = 1.0;
            while excess(hi) > eps {
                hi *= 2.0;
            }
            let mut lo = hi / 2.0;
            while excess(lo) <= eps && lo > 1e-12 {
                lo /= 2.0;
            }
            while (hi - lo) > 1e-9 * hi {
                let mid = 0.5 * (lo + hi);
                if excess(mid) <= eps {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        }
    }
}

/// An unfair MTS input on `l` uniformly spaced states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnfairUniformInstance {
    pub ell: usize,
    pub r: f64,
    pub costs: Vec<Vec<f64>>,
    pub initial_state: usize,
}

impl UnfairUniformInstance {
    pub fn new(ell: usize, r: f64, costs: Vec<Vec<f64>>, initial_state: usize) -> Result<Self> {
        if ell < 2 {
            return Err(Error::structural("unfair instances need at least two states"));
        }
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::structural(format!("unfairness {r} must be finite and non-negative")));
        }
        if initial_state >= ell {
            return Err(Error::structural("initial state out of range"));
        }
        for (t, c) in costs.iter().enumerate() {
            if c.len() != ell {
                return Err(Error::structural(format!("task {t} has {} entries", c.len())));
            }
            if c.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::structural(format!("task {t} has a negative or infinite entry")));
            }
        }
        Ok(Self {
            ell,
            r,
            costs,
            initial_state,
        })
    }

    pub fn horizon(&self) -> usize {
        self.costs.len()
    }

    pub fn prefix(&self, t: usize) -> Self {
        Self {
            costs: self.costs[..t].to_vec(),
            ..self.clone()
        }
    }
}

/// Expected per-task costs of one player over a whole input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnfairRun {
    /// Movement from the initial state to the player's first distribution.
    pub initial_move: f64,
    pub charges: Vec<Charge>,
}

impl UnfairRun {
    pub fn total(&self) -> f64 {
        self.initial_move + self.charges.iter().map(Charge::total).sum::<f64>()
    }

    pub fn prefix_total(&self, t: usize) -> f64 {
        self.initial_move + self.charges[..t].iter().map(Charge::total).sum::<f64>()
    }
}

/// Runs `alg` on `inst` and records its expected cost per task.
pub fn run_expected(alg: &mut dyn UnfairAlgorithm, inst: &UnfairUniformInstance) -> Result<UnfairRun> {
    if alg.ell() != inst.ell {
        return Err(Error::structural("player and instance disagree on the state count"));
    }
    let start = Distribution::point(inst.ell, inst.initial_state);
    let initial_move = start.earth_mover(&alg.distribution()?);
    let charges = inst
        .costs
        .iter()
        .map(|c| alg.feed(c))
        .collect::<Result<Vec<_>>>()?;
    Ok(UnfairRun {
        initial_move,
        charges,
    })
}

/// Expected cost of the named subroutine started at the instance's initial
/// state.
pub fn expected_unfair_cost(sub: Subroutine, inst: &UnfairUniformInstance) -> Result<UnfairRun> {
    let mut alg = sub.build(inst.ell, inst.r, Some(inst.initial_state));
    run_expected(alg.as_mut(), inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn distribution_validation() {
        assert!(Distribution::new(vec![0.5, 0.5]).is_ok());
        assert!(Distribution::new(vec![0.6, 0.5]).is_err());
        assert!(Distribution::new(vec![1.2, -0.2]).is_err());
        let u = Distribution::uniform(4);
        assert!((u.p().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((Distribution::point(4, 0).earth_mover(&u) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn sampling_follows_the_distribution() {
        let d = Distribution::new(vec![0.1, 0.0, 0.9]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 50_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[d.sample(&mut rng)] += 1;
        }
        assert_eq!(counts[1], 0);
        let f = counts[0] as f64 / n as f64;
        assert!((f - 0.1).abs() < 3.0 * (0.09 / n as f64).sqrt());
    }

    #[test]
    fn rate_examples() {
        let r = unfair_rate_for_epsilon(1.0, 8, Subroutine::OddExponent);
        assert!((r - 11.305).abs() < 1e-3);
        let eps = 2.0 * std::f64::consts::E * 5f64.ln();
        assert!((unfair_rate_for_epsilon(eps, 5, Subroutine::OddExponent) - 1.0).abs() < 1e-12);

        let r = unfair_rate_for_epsilon(4.0, 2, Subroutine::Share);
        let residual = 8.0 / r * (2f64.ln() + (2.0 * r + 1.0).ln()) - 4.0;
        assert!(residual.abs() < 1e-6, "residual {residual}");
        assert!((r - 6.68).abs() < 0.05, "r = {r}");
    }

    #[test]
    fn share_rate_matches_its_bound() {
        for &ell in &[2usize, 4, 16] {
            for &eps in &[0.1, 0.5, 1.0, 3.0] {
                let r = unfair_rate_for_epsilon(eps, ell, Subroutine::Share);
                let bound = Subroutine::Share.ratio_bound(ell, r);
                assert!((bound - 1.0 - eps).abs() < 1e-6 * (1.0 + eps));
            }
        }
    }

    #[test]
    fn subroutine_names_round_trip() {
        for s in [Subroutine::OddExponent, Subroutine::Share] {
            assert_eq!(s.name().parse::<Subroutine>().unwrap(), s);
            let json = serde_json::to_string(&s).unwrap();
            assert_eq!(json, format!("\"{}\"", s.name()));
        }
        assert!("exp3".parse::<Subroutine>().is_err());
    }

    #[test]
    fn instance_validation() {
        assert!(UnfairUniformInstance::new(1, 1.0, vec![], 0).is_err());
        assert!(UnfairUniformInstance::new(2, 1.0, vec![vec![1.0, f64::INFINITY]], 0).is_err());
        assert!(UnfairUniformInstance::new(2, 1.0, vec![vec![1.0, 0.0]], 2).is_err());
        assert!(UnfairUniformInstance::new(2, 1.0, vec![vec![1.0, 0.0]], 1).is_ok());
    }

    #[test]
    fn players_start_at_the_initial_state_or_pay_to_leave_it() {
        let inst = UnfairUniformInstance::new(4, 3.0, vec![vec![0.0; 4]], 2).unwrap();
        let odd = expected_unfair_cost(Subroutine::OddExponent, &inst).unwrap();
        assert_eq!(odd.initial_move, 0.0);
        assert!(odd.total().abs() < 1e-12);
        let share = expected_unfair_cost(Subroutine::Share, &inst).unwrap();
        assert!((share.initial_move - 0.75).abs() < 1e-12);
    }
}
