//! Layered graph traversal view of following predictors.

use petgraph::algo::dijkstra;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_traces, MtsInstance, PredictorTrace};

/// Layer 0 holds the source; layer `t` holds one vertex per predictor, placed
/// on its suggested state. Every final vertex reaches the target for free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayeredGraph {
    /// `layers[t][v]` is the metric point vertex `v` of layer `t` stands for.
    pub layers: Vec<Vec<usize>>,
    /// `edges[t][u][v]` weighs the edge from vertex `u` of layer `t` to vertex
    /// `v` of layer `t + 1`.
    pub edges: Vec<Vec<Vec<f64>>>,
}

impl LayeredGraph {
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    /// Weight of the cheapest source-to-target path.
    pub fn shortest_path(&self) -> f64 {
        let mut g: DiGraph<(), f64> = DiGraph::new();
        let nodes: Vec<Vec<NodeIndex>> = self
            .layers
            .iter()
            .map(|l| l.iter().map(|_| g.add_node(())).collect())
            .collect();
        let target = g.add_node(());
        for (t, gap) in self.edges.iter().enumerate() {
            for (u, row) in gap.iter().enumerate() {
                for (v, &w) in row.iter().enumerate() {
                    if w.is_finite() {
                        g.add_edge(nodes[t][u], nodes[t + 1][v], w);
                    }
                }
            }
        }
        for &v in nodes.last().expect("graph has layers") {
            g.add_edge(v, target, 0.0);
        }
        let dist = dijkstra(&g, nodes[0][0], Some(target), |e| *e.weight());
        dist.get(&target).copied().unwrap_or(f64::INFINITY)
    }
}

/// Edge `(v_{i,t-1}, v_{j,t})` weighs `d(phi_{i,t-1}, phi_{j,t}) + c_t(phi_{j,t})`.
pub fn mts_to_lgt(inst: &MtsInstance, traces: &[PredictorTrace]) -> Result<LayeredGraph> {
    validate_traces(inst, traces)?;
    let m = inst.metric();
    let mut layers = vec![vec![inst.initial_state()]];
    let mut edges = Vec::with_capacity(inst.horizon());
    for t in 0..inst.horizon() {
        let next: Vec<usize> = traces.iter().map(|tr| tr.at(t)).collect();
        for (j, &x) in next.iter().enumerate() {
            if !inst.cost(t, x).is_finite() {
                return Err(Error::InfeasiblePredictor { predictor: j, t });
            }
        }
        let prev = layers.last().expect("source layer");
        let gap = prev
            .iter()
            .map(|&a| next.iter().map(|&b| m.d(a, b) + inst.cost(t, b)).collect())
            .collect();
        edges.push(gap);
        layers.push(next);
    }
    Ok(LayeredGraph { layers, edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::dyn_;
    use crate::model::{CostVector, MetricSpace, INFEASIBLE};

    #[test]
    fn edge_weight_is_distance_plus_service() {
        let m = MetricSpace::line(&[0.0, 3.0]).unwrap();
        let inst = MtsInstance::new(m, 0, vec![CostVector::new(vec![0.0, 2.0]).unwrap()]).unwrap();
        let g = mts_to_lgt(&inst, &[PredictorTrace::new(vec![1])]).unwrap();
        assert_eq!(g.edges[0][0][0], 5.0);
        assert_eq!(g.shortest_path(), 5.0);
    }

    #[test]
    fn static_predictors_on_free_tasks() {
        let m = MetricSpace::line(&[0.0, 1.0, 4.0]).unwrap();
        let inst = MtsInstance::new(m, 0, vec![CostVector::zeros(3); 3]).unwrap();
        let traces = vec![PredictorTrace::constant(0, 3), PredictorTrace::constant(2, 3)];
        let g = mts_to_lgt(&inst, &traces).unwrap();
        assert_eq!(g.depth(), 3);
        for gap in &g.edges[1..] {
            assert_eq!(gap, &vec![vec![0.0, 4.0], vec![4.0, 0.0]]);
        }
        assert_eq!(g.shortest_path(), dyn_(&inst, &traces).unwrap().0);
    }

    #[test]
    fn infeasible_predictor_is_rejected() {
        let inst = MtsInstance::new(
            MetricSpace::uniform(2),
            0,
            vec![CostVector::new(vec![0.0, INFEASIBLE]).unwrap()],
        )
        .unwrap();
        assert!(matches!(
            mts_to_lgt(&inst, &[PredictorTrace::new(vec![1])]),
            Err(Error::InfeasiblePredictor { predictor: 0, t: 0 })
        ));
    }
}
