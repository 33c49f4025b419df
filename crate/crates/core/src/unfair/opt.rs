use super::UnfairUniformInstance;

/// Offline optimum of an unfair instance: movement costs `r` per change.
///
/// Returns the value and one optimal state sequence; ties prefer the lowest
/// state index, both for the final state and for each predecessor.
pub fn unfair_opt(inst: &UnfairUniformInstance) -> (f64, Vec<usize>) {
    let ell = inst.ell;
    let t_len = inst.horizon();
    let mut v: Vec<f64> = (0..ell)
        .map(|x| if x == inst.initial_state { 0.0 } else { f64::INFINITY })
        .collect();
    let mut parent = vec![vec![0usize; ell]; t_len];
    for (t, c) in inst.costs.iter().enumerate() {
        let (best, arg) = argmin(&v);
        let mut next = vec![0.0; ell];
        for y in 0..ell {
            let via_move = best + inst.r;
            // Staying wins ties against moving; moving picks the lowest index.
            let (val, from) = if v[y] <= via_move { (v[y], y) } else { (via_move, arg) };
            next[y] = c[y] + val;
            parent[t][y] = from;
        }
        v = next;
    }
    let (value, mut cur) = argmin(&v);
    if t_len == 0 {
        return (0.0, Vec::new());
    }
    let mut seq = vec![0usize; t_len];
    for t in (0..t_len).rev() {
        seq[t] = cur;
        cur = parent[t][cur];
    }
    (value, seq)
}

fn argmin(v: &[f64]) -> (f64, usize) {
    v.iter()
        .enumerate()
        .fold((f64::INFINITY, 0), |(b, bi), (i, &x)| if x < b { (x, i) } else { (b, bi) })
}
