//! Randomized structural checks. Networks are generated as a random
//! spanning tree plus a few extra arcs, so they are always connected, with
//! integer supplies that balance exactly.

use proptest::prelude::*;
use proptest::sample::Index;

use cvxflow_core::{
    enumerate_tree_solutions, kkt_residual, solve, tree_solve_flows, Arc, CostFn, Network,
    OracleError, SolverParams, Termination, TreeBasis,
};

#[derive(Debug, Clone)]
struct RawNet {
    nodes: usize,
    parents: Vec<Index>,
    flips: Vec<bool>,
    extra: Vec<(Index, Index)>,
    supplies: Vec<i32>,
    params: Vec<u32>,
}

fn raw_net(max_extra: usize) -> impl Strategy<Value = RawNet> {
    (2usize..=7).prop_flat_map(move |nodes| {
        (
            prop::collection::vec(any::<Index>(), nodes - 1),
            prop::collection::vec(any::<bool>(), nodes - 1),
            prop::collection::vec((any::<Index>(), any::<Index>()), 0..=max_extra),
            prop::collection::vec(-10i32..=10, nodes - 1),
            prop::collection::vec(1u32..=20, nodes + max_extra),
        )
            .prop_map(move |(parents, flips, extra, supplies, params)| RawNet {
                nodes,
                parents,
                flips,
                extra,
                supplies,
                params,
            })
    })
}

impl RawNet {
    fn arc_ends(&self) -> Vec<(usize, usize)> {
        let mut ends = Vec::new();
        for i in 1..self.nodes {
            let p = self.parents[i - 1].index(i);
            ends.push(if self.flips[i - 1] { (i, p) } else { (p, i) });
        }
        for (a, b) in &self.extra {
            let t = a.index(self.nodes);
            let h = b.index(self.nodes);
            if t != h {
                ends.push((t, h));
            }
        }
        ends
    }

    fn balanced_supplies(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.supplies.iter().map(|&v| f64::from(v)).collect();
        let total: f64 = s.iter().sum();
        s.push(-total);
        s
    }

    fn linear_network(&self) -> Network {
        let arcs = self
            .arc_ends()
            .into_iter()
            .enumerate()
            .map(|(i, (t, h))| {
                Arc::new(t, h, CostFn::linear(f64::from(self.params[i % self.params.len()])))
            })
            .collect();
        Network::new(self.nodes, self.balanced_supplies(), arcs, 0).unwrap()
    }

    /// The first `nodes - 1` arcs always form a spanning tree.
    fn tree_ids(&self) -> Vec<usize> {
        (0..self.nodes - 1).collect()
    }
}

proptest! {
    #[test]
    fn incidence_columns_have_one_source_and_one_sink(raw in raw_net(5)) {
        let net = raw.linear_network();
        for a in 0..net.arc_count() {
            let col = net.incidence_column(a).unwrap();
            let arc = &net.arcs()[a];
            prop_assert_eq!(col.tail_row, arc.tail);
            prop_assert_eq!(col.head_row, arc.head);
            prop_assert_ne!(col.tail_row, col.head_row);
            prop_assert!(col.tail_row < net.node_count());
            prop_assert!(col.head_row < net.node_count());
        }
    }

    /// Pushing one unit around any fundamental loop must leave every node's
    /// balance untouched; that is what makes it a loop.
    #[test]
    fn fundamental_loops_conserve_flow(raw in raw_net(5)) {
        let net = raw.linear_network();
        let tree = TreeBasis::new(&net, &raw.tree_ids()).unwrap();
        for entering in raw.nodes - 1..net.arc_count() {
            let lp = tree.fundamental_loop(&net, entering).unwrap();
            let mut balance = vec![0.0f64; net.node_count()];
            let e = &net.arcs()[entering];
            balance[e.tail] += 1.0;
            balance[e.head] -= 1.0;
            for &(a, d) in &lp.members {
                let arc = &net.arcs()[a];
                balance[arc.tail] += f64::from(d);
                balance[arc.head] -= f64::from(d);
            }
            prop_assert!(balance.iter().all(|&b| b == 0.0), "loop leaks: {:?}", balance);
            // Members are distinct tree arcs, sorted by id.
            prop_assert!(lp.members.windows(2).all(|w| w[0].0 < w[1].0));
            prop_assert!(lp.members.iter().all(|&(a, _)| tree.in_tree(a)));
        }
    }

    /// Reversing the entering arc reverses the walk, so every member
    /// direction flips.
    #[test]
    fn reversed_entering_arc_negates_loop_directions(raw in raw_net(5)) {
        let net = raw.linear_network();
        let nontree: Vec<usize> = (raw.nodes - 1..net.arc_count()).collect();
        prop_assume!(!nontree.is_empty());
        let mut flipped_arcs = net.arcs().to_vec();
        for &a in &nontree {
            let arc = flipped_arcs[a].clone();
            flipped_arcs[a] = Arc::new(arc.head, arc.tail, arc.cost);
        }
        let flipped =
            Network::new(net.node_count(), net.supplies().to_vec(), flipped_arcs, 0).unwrap();
        let tree = TreeBasis::new(&net, &raw.tree_ids()).unwrap();
        let tree_f = TreeBasis::new(&flipped, &raw.tree_ids()).unwrap();
        for &a in &nontree {
            let lp = tree.fundamental_loop(&net, a).unwrap();
            let lp_f = tree_f.fundamental_loop(&flipped, a).unwrap();
            prop_assert_eq!(lp.members.len(), lp_f.members.len());
            for (&(x, dx), &(y, dy)) in lp.members.iter().zip(&lp_f.members) {
                prop_assert_eq!(x, y);
                prop_assert_eq!(dx, -dy);
            }
        }
    }

    #[test]
    fn tree_solutions_conserve_flow(
        raw in raw_net(5),
        nb_flows in prop::collection::vec(0.0f64..10.0, 5),
    ) {
        let net = raw.linear_network();
        let tree = TreeBasis::new(&net, &raw.tree_ids()).unwrap();
        let nonbasic: Vec<(usize, f64)> = (raw.nodes - 1..net.arc_count())
            .zip(nb_flows)
            .collect();
        let flows = tree_solve_flows(&net, &tree, net.supplies(), &nonbasic).unwrap();
        let mut balance: Vec<f64> = net.supplies().iter().map(|b| -b).collect();
        for (a, arc) in net.arcs().iter().enumerate() {
            balance[arc.tail] += flows[a];
            balance[arc.head] -= flows[a];
        }
        balance[net.root()] += flows[net.artificial_arc()];
        for b in balance {
            prop_assert!(b.abs() <= 1e-12, "imbalance {b}");
        }
        for &(a, f) in &nonbasic {
            prop_assert_eq!(flows[a], f);
        }
    }

    /// Every cost family must report the derivative its cost curve
    /// actually has, and that derivative must never decrease.
    #[test]
    fn derivatives_match_finite_differences(
        kind in 0usize..4,
        p1 in 0.1f64..10.0,
        p2 in 0.1f64..2.0,
        x in 0.1f64..20.0,
    ) {
        let cost = match kind {
            0 => CostFn::linear(p1),
            1 => CostFn::quadratic(p1, p2),
            2 => CostFn::power(p1, 1.0 + p2),
            _ => CostFn::exponential(p1, p2 * 0.25),
        };
        let h = 1e-6 * x.max(1.0);
        let numeric = (cost.cost(x + h).unwrap() - cost.cost(x - h).unwrap()) / (2.0 * h);
        let exact = cost.deriv(x).unwrap();
        let scale = exact.abs().max(1e-6);
        prop_assert!(
            (numeric - exact).abs() / scale <= 1e-5,
            "kind {kind}: numeric {numeric} vs exact {exact}"
        );
        let ahead = cost.deriv(x + 0.5).unwrap();
        prop_assert!(ahead >= exact - 1e-12, "derivative decreased");
    }

    /// On purely linear instances the pivoting solver must agree with
    /// exhaustive tree enumeration, and infeasibility must coincide.
    #[test]
    fn solver_matches_tree_enumeration_on_linear_instances(raw in raw_net(5)) {
        let net = raw.linear_network();
        let params = SolverParams { record_trace: true, ..SolverParams::default() };
        let result = solve(&net, &params);
        match enumerate_tree_solutions(&net) {
            Ok(oracle) => {
                prop_assert_eq!(result.termination, Termination::Optimal);
                let gap = (result.objective - oracle.objective).abs();
                prop_assert!(
                    gap <= 1e-9 * oracle.objective.abs().max(1.0),
                    "objective {} vs oracle {}",
                    result.objective,
                    oracle.objective
                );
                prop_assert!(kkt_residual(&net, result.flows.flows()) <= 1e-6);
                let mass: f64 = net.supplies().iter().map(|b| b.abs()).sum();
                let mut last = f64::INFINITY;
                for rec in result.trace.as_ref().unwrap() {
                    prop_assert!(rec.conservation_residual <= 1e-9 * mass.max(1.0));
                    prop_assert!(rec.min_flow >= 0.0);
                    prop_assert!(rec.objective <= last + 1e-12);
                    prop_assert!(rec.max_basic_gradient <= 1e-10);
                    last = rec.objective;
                }
            }
            Err(OracleError::NoFeasibleTree) => {
                prop_assert_eq!(result.termination, Termination::Infeasible);
            }
            Err(e) => prop_assert!(false, "unexpected oracle failure: {e}"),
        }
    }
}
