use rand::Rng;

use super::Distribution;
use crate::error::{Error, Result};

/// Moves a sample of `prev` to a sample of `next` with the least possible
/// probability of changing state.
///
/// Stays with probability `min(prev(cur), next(cur)) / prev(cur)`; otherwise
/// draws from the normalized surplus `(next - prev)+`. On the uniform metric
/// the switch probability equals the earth mover's distance between the two
/// distributions.
pub fn sample_coupled_state<R: Rng + ?Sized>(
    prev: &Distribution,
    next: &Distribution,
    current: usize,
    rng: &mut R,
) -> Result<usize> {
    let p = prev.p();
    let q = next.p();
    if p.len() != q.len() || current >= p.len() {
        return Err(Error::structural("coupled sampling over mismatched supports"));
    }
    if p[current] <= 0.0 {
        return Err(Error::contract(format!(
            "current state {current} has no mass under the previous distribution"
        )));
    }
    let stay = (q[current].min(p[current]) / p[current]).min(1.0);
    let u: f64 = rng.random();
    if u < stay {
        return Ok(current);
    }
    let surplus: Vec<f64> = p.iter().zip(q).map(|(a, b)| (b - a).max(0.0)).collect();
    let total: f64 = surplus.iter().sum();
    if total <= 0.0 {
        return Ok(current);
    }
    let mut x = rng.random::<f64>() * total;
    for (j, s) in surplus.iter().enumerate() {
        if *s > 0.0 {
            if x < *s {
                return Ok(j);
            }
            x -= s;
        }
    }
    Ok(surplus.iter().rposition(|s| *s > 0.0).unwrap_or(current))
}
