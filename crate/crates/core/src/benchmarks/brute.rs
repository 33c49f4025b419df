use super::count_switches;
use crate::error::{Error, Result};
use crate::model::{validate_traces, MtsInstance, PredictorTrace};

/// Largest number of candidate sequences the oracle enumerates.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BruteVariant {
    Dyn,
    DynLimited(usize),
    DynRho { rho: f64, full_charge: bool },
    /// Enumerates raw state sequences; the traces are ignored.
    Opt,
}

/// Exhaustive enumeration of the benchmark named by `variant`.
///
/// Evaluates every schedule (or state sequence for [`BruteVariant::Opt`])
/// directly from the cost model, sharing no code with the DPs.
pub fn brute_force_oracle(inst: &MtsInstance, traces: &[PredictorTrace], variant: BruteVariant) -> Result<f64> {
    let t_len = inst.horizon();
    let base = match variant {
        BruteVariant::Opt => inst.num_states(),
        _ => {
            validate_traces(inst, traces)?;
            traces.len()
        }
    };
    let needed = (base as u128)
        .checked_pow(t_len as u32)
        .filter(|&n| n <= BRUTE_FORCE_LIMIT)
        .ok_or(Error::SizeGuard {
            what: "brute-force sequences",
            needed: (base as u128).saturating_pow(t_len as u32),
            limit: BRUTE_FORCE_LIMIT,
        })?;
    let metric = inst.metric();
    let mut seq = vec![0usize; t_len];
    let mut best = f64::INFINITY;
    for code in 0..needed {
        let mut c = code;
        for x in seq.iter_mut() {
            *x = (c % base as u128) as usize;
            c /= base as u128;
        }
        let cost = match variant {
            BruteVariant::Opt => {
                let mut prev = inst.initial_state();
                let mut total = 0.0;
                for (t, &x) in seq.iter().enumerate() {
                    total += metric.d(prev, x) + inst.cost(t, x);
                    prev = x;
                }
                total
            }
            BruteVariant::Dyn | BruteVariant::DynLimited(_) => {
                if let BruteVariant::DynLimited(m) = variant {
                    if count_switches(&seq) > m {
                        continue;
                    }
                }
                let mut prev = inst.initial_state();
                let mut total = 0.0;
                for (t, &j) in seq.iter().enumerate() {
                    let x = traces[j].at(t);
                    total += metric.d(prev, x) + inst.cost(t, x);
                    prev = x;
                }
                total
            }
            BruteVariant::DynRho { rho, full_charge } => {
                let mut total = 0.0;
                for (t, &j) in seq.iter().enumerate() {
                    let x = traces[j].at(t);
                    let own = metric.d(traces[j].before(inst, t), x) + inst.cost(t, x);
                    total += if t > 0 && seq[t - 1] != j {
                        if full_charge {
                            rho + own
                        } else {
                            rho + inst.cost(t, x)
                        }
                    } else {
                        own
                    };
                }
                total
            }
        };
        best = best.min(cost);
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::InfeasibleBenchmark { t: 0 })
    }
}
