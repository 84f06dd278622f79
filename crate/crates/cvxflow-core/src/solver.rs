//! Convex simplex pivoting on a spanning-tree basis.
//!
//! Each pivot prices the nonbasic arcs with reduced gradients, picks either
//! a gradient-driven increase or a score-driven decrease, pushes flow
//! around the entering arc's fundamental loop up to the blocking bound, and
//! lets a golden section line search decide how much of that step to keep.
//! A full step swaps the blocking arc out of the basis; a partial step
//! leaves the basis alone and the entering arc keeps its positive flow as
//! a nonbasic arc.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::cost::CostFn;
use crate::network::{tree_solve_flows, Arc, Network, NetworkError, OrientedLoop, TreeBasis};

/// Flows this far below zero are treated as rounding noise and clamped.
const NEGATIVE_TOL: f64 = 1e-12;
/// 1/phi, the golden section step ratio.
const INV_PHI: f64 = 0.618_033_988_749_894_9;
/// Pricing tolerance for the linear feasibility phase.
const PHASE1_PRICE_EPS: f64 = 1e-9;

/// Tunable tolerances and limits. All values must be positive
/// (`max_iters` may be zero, `delta_cap` if given must be positive).
#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    /// Optimality tolerance on reduced gradients and scores.
    pub eps_opt: f64,
    /// Line search results within this distance of an endpoint snap to it.
    pub eps_lambda: f64,
    /// Golden section interval width at which the search stops.
    pub ls_tol: f64,
    /// Pivot budget before giving up.
    pub max_iters: usize,
    /// Step bound when a loop has no blocking arc. `None` derives a bound
    /// from the instance: twice the positive supply mass plus the largest
    /// current flow.
    pub delta_cap: Option<f64>,
    /// Record one [`TraceRecord`] per pivot.
    pub record_trace: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            eps_opt: 1e-7,
            eps_lambda: 1e-9,
            ls_tol: 1e-10,
            max_iters: 10_000,
            delta_cap: None,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// All optimality conditions hold within `eps_opt`.
    Optimal,
    /// A pivot stayed put (step fraction ~1) without improving: the run
    /// returns the best iterate seen.
    HeuristicLambdaOne,
    /// Pivot budget exhausted or the basis stalled in degenerate swaps.
    MaxIterations,
    /// No feasible flow exists.
    Infeasible,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Termination::Optimal => "Optimal",
            Termination::HeuristicLambdaOne => "HeuristicLambdaOne",
            Termination::MaxIterations => "MaxIterations",
            Termination::Infeasible => "Infeasible",
        };
        f.write_str(name)
    }
}

/// Direction of a pivot: raise a zero-or-low gradient arc or drain a
/// positive-score arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotKind {
    Increase,
    Decrease,
}

impl fmt::Display for PivotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PivotKind::Increase => "increase",
            PivotKind::Decrease => "decrease",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    Infeasible,
    /// A computed flow fell below zero beyond rounding tolerance.
    NegativeFlowResult { arc: usize, flow: f64 },
    /// The blocking arc handed to a basis update is not a basic tree arc.
    BlockingNotInLoop { arc: usize },
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::Infeasible => write!(f, "no feasible flow exists"),
            SolverError::NegativeFlowResult { arc, flow } => {
                write!(f, "flow on arc {arc} became negative ({flow})")
            }
            SolverError::BlockingNotInLoop { arc } => {
                write!(f, "blocking arc {arc} is not basic")
            }
        }
    }
}

impl core::error::Error for SolverError {}

/// A feasible-by-sign flow vector (length `arc_count + 1`, artificial arc
/// last) with its objective value. Construction clamps rounding noise just
/// below zero and rejects anything more negative.
#[derive(Debug, Clone)]
pub struct FlowState {
    flows: Vec<f64>,
    objective: f64,
}

impl FlowState {
    pub fn new(net: &Network, mut flows: Vec<f64>) -> Result<Self, SolverError> {
        assert_eq!(flows.len(), net.arc_count() + 1, "flow vector length");
        for (arc, f) in flows.iter_mut().enumerate() {
            if *f < 0.0 {
                if *f >= -NEGATIVE_TOL {
                    *f = 0.0;
                } else {
                    return Err(SolverError::NegativeFlowResult { arc, flow: *f });
                }
            }
        }
        let objective = total_cost(net, &flows);
        Ok(FlowState { flows, objective })
    }

    /// The all-zero flow.
    pub fn zero(net: &Network) -> Self {
        FlowState { flows: vec![0.0; net.arc_count() + 1], objective: 0.0 }
    }

    pub fn flows(&self) -> &[f64] {
        &self.flows
    }

    pub fn flow(&self, arc: usize) -> f64 {
        self.flows[arc]
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    /// Largest absolute conservation violation over all nodes.
    pub fn conservation_residual(&self, net: &Network) -> f64 {
        let mut imbalance: Vec<f64> = net.supplies().iter().map(|b| -b).collect();
        for (a, arc) in net.arcs().iter().enumerate() {
            imbalance[arc.tail] += self.flows[a];
            imbalance[arc.head] -= self.flows[a];
        }
        imbalance[net.root()] += self.flows[net.artificial_arc()];
        imbalance.iter().fold(0.0, |acc, r| acc.max(r.abs()))
    }

    pub fn min_flow(&self) -> f64 {
        self.flows.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Total cost over the real arcs; flows must already be nonnegative.
fn total_cost(net: &Network, flows: &[f64]) -> f64 {
    net.arcs()
        .iter()
        .zip(flows)
        .map(|(arc, &x)| arc.cost.cost(x).expect("flow is nonnegative"))
        .sum()
}

/// Node potentials determined by a basis: zero at the root, then spread so
/// every tree arc's derivative equals its tail-head potential difference.
#[derive(Debug, Clone, PartialEq)]
pub struct NodePotentials {
    values: Vec<f64>,
}

impl NodePotentials {
    pub fn value(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn compute_potentials(net: &Network, tree: &TreeBasis, flow: &FlowState) -> NodePotentials {
    let mut values = vec![0.0; net.node_count()];
    for &u in tree.order().iter().skip(1) {
        let p = tree.parent_node(u).expect("non-root node has a parent");
        let a = tree.parent_arc(u).expect("non-root node has a parent arc");
        let arc = &net.arcs()[a];
        let d = arc.cost.deriv(flow.flow(a)).expect("flow is nonnegative");
        values[u] = if arc.tail == p { values[p] - d } else { values[p] + d };
    }
    NodePotentials { values }
}

/// Reduced gradient of an arc: marginal cost of pushing one more unit from
/// tail to head, minus what the potentials already pay for that move.
pub fn reduced_gradient(
    net: &Network,
    arc: usize,
    flow: &FlowState,
    potentials: &NodePotentials,
) -> f64 {
    let a = &net.arcs()[arc];
    let d = a.cost.deriv(flow.flow(arc)).expect("flow is nonnegative");
    d - (potentials.value(a.tail) - potentials.value(a.head))
}

/// Best entering candidates among nonbasic arcs: the most negative reduced
/// gradient and the largest flow-weighted gradient score. Ties go to the
/// smallest arc id. Both are `None` only when every real arc is basic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidatePair {
    pub min_gradient: Option<(usize, f64)>,
    pub max_score: Option<(usize, f64)>,
}

pub fn select_candidates(
    net: &Network,
    tree: &TreeBasis,
    flow: &FlowState,
    potentials: &NodePotentials,
) -> CandidatePair {
    let mut min_gradient: Option<(usize, f64)> = None;
    let mut max_score: Option<(usize, f64)> = None;
    for a in 0..net.arc_count() {
        if tree.is_basic(a) {
            continue;
        }
        let g = reduced_gradient(net, a, flow, potentials);
        let s = flow.flow(a) * g;
        if min_gradient.is_none_or(|(_, best)| g < best) {
            min_gradient = Some((a, g));
        }
        if max_score.is_none_or(|(_, best)| s > best) {
            max_score = Some((a, s));
        }
    }
    CandidatePair { min_gradient, max_score }
}

/// A point is optimal when no nonbasic arc wants more flow (all reduced
/// gradients at least `-eps`) and none is carrying flow it wants to shed
/// (all scores at most `eps`).
pub fn check_optimality(pair: &CandidatePair, eps: f64) -> bool {
    let gradients_ok = pair.min_gradient.is_none_or(|(_, g)| g >= -eps);
    let scores_ok = pair.max_score.is_none_or(|(_, s)| s <= eps);
    gradients_ok && scores_ok
}

/// Largest step the loop admits before some flow hits zero, with the arc
/// that blocks it. Increasing the entering arc drains the loop members
/// traversed against the walk; decreasing it drains the entering arc itself
/// and the members traversed with the walk. An increase with no blocking
/// arc returns `(cap, None)`. Ties go to the smallest arc id.
pub fn compute_delta(
    lp: &OrientedLoop,
    flow: &FlowState,
    kind: PivotKind,
    cap: f64,
) -> (f64, Option<usize>) {
    match kind {
        PivotKind::Increase => {
            let mut best: Option<(f64, usize)> = None;
            for &(a, d) in &lp.members {
                if d == -1 {
                    let x = flow.flow(a);
                    if best.is_none_or(|(bx, _)| x < bx) {
                        best = Some((x, a));
                    }
                }
            }
            match best {
                Some((x, a)) => (x, Some(a)),
                None => (cap, None),
            }
        }
        PivotKind::Decrease => {
            let mut best = (flow.flow(lp.entering_arc), lp.entering_arc);
            for &(a, d) in &lp.members {
                if d == 1 {
                    let x = flow.flow(a);
                    if x < best.0 || (x == best.0 && a < best.1) {
                        best = (x, a);
                    }
                }
            }
            (best.0, Some(best.1))
        }
    }
}

/// Pushes `delta` around the loop (sign set by `kind`) and revalidates.
/// The arithmetic keeps the blocking arc at exactly zero.
pub fn adjust_flows(
    net: &Network,
    flow: &FlowState,
    lp: &OrientedLoop,
    delta: f64,
    kind: PivotKind,
) -> Result<FlowState, SolverError> {
    let sign = match kind {
        PivotKind::Increase => 1.0,
        PivotKind::Decrease => -1.0,
    };
    let mut flows = flow.flows().to_vec();
    flows[lp.entering_arc] += sign * delta;
    for &(a, d) in &lp.members {
        flows[a] += sign * f64::from(d) * delta;
    }
    FlowState::new(net, flows)
}

/// Golden section search over the segment from `to` back to `from`
/// (step fraction 1 stays at `from`, 0 lands on `to`). Returns the chosen
/// point and fraction; exact endpoints win unless the interior is strictly
/// better, so linear segments produce clean full or null steps.
pub fn line_search(net: &Network, from: &FlowState, to: &FlowState, ls_tol: f64) -> (FlowState, f64) {
    let mut moved = Vec::new();
    for a in 0..net.arc_count() {
        if from.flow(a) != to.flow(a) {
            moved.push(a);
        }
    }
    if moved.is_empty() {
        return (from.clone(), 1.0);
    }
    let still: f64 = net
        .arcs()
        .iter()
        .enumerate()
        .filter(|(a, _)| !moved.contains(a))
        .map(|(a, arc)| arc.cost.cost(from.flow(a)).expect("flow is nonnegative"))
        .sum();
    let eval = |lambda: f64| -> f64 {
        let mut total = still;
        for &a in &moved {
            let x = lambda * from.flow(a) + (1.0 - lambda) * to.flow(a);
            total += net.arcs()[a].cost.cost(x.max(0.0)).expect("flow is nonnegative");
        }
        total
    };

    let f0 = eval(0.0);
    let f1 = eval(1.0);
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut p1 = hi - (hi - lo) * INV_PHI;
    let mut p2 = lo + (hi - lo) * INV_PHI;
    let mut fp1 = eval(p1);
    let mut fp2 = eval(p2);
    while hi - lo > ls_tol {
        if fp1 <= fp2 {
            hi = p2;
            p2 = p1;
            fp2 = fp1;
            p1 = hi - (hi - lo) * INV_PHI;
            fp1 = eval(p1);
        } else {
            lo = p1;
            p1 = p2;
            fp1 = fp2;
            p2 = lo + (hi - lo) * INV_PHI;
            fp2 = eval(p2);
        }
    }

    // Near the bottom of a convex curve the value differences the golden
    // section compares flatten out below float resolution and the bracket
    // can drift off the minimizer. The derivative keeps its sign at its
    // own floating scale, so bisect on it to pin the bracket down; fall
    // back to the whole interval when the golden bracket slid past the
    // sign change.
    let slope = |lambda: f64| -> f64 {
        let mut total = 0.0;
        for &a in &moved {
            let x = lambda * from.flow(a) + (1.0 - lambda) * to.flow(a);
            let w = from.flow(a) - to.flow(a);
            total += w * net.arcs()[a].cost.deriv(x.max(0.0)).expect("flow is nonnegative");
        }
        total
    };
    let (mut blo, mut bhi) = if slope(lo) < 0.0 && slope(hi) > 0.0 {
        (lo, hi)
    } else {
        (0.0, 1.0)
    };
    if slope(blo) < 0.0 && slope(bhi) > 0.0 {
        for _ in 0..100 {
            let mid = 0.5 * (blo + bhi);
            if mid <= blo || mid >= bhi {
                break;
            }
            if slope(mid) > 0.0 {
                bhi = mid;
            } else {
                blo = mid;
            }
        }
        lo = blo;
        hi = bhi;
    }

    let mid = 0.5 * (lo + hi);
    let fmid = eval(mid);

    let lambda = if fmid < f0 && fmid < f1 {
        mid
    } else if f0 < f1 {
        0.0
    } else {
        1.0
    };
    let state = if lambda == 1.0 {
        from.clone()
    } else if lambda == 0.0 {
        to.clone()
    } else {
        let mut flows = to.flows().to_vec();
        for &a in &moved {
            flows[a] = lambda * from.flow(a) + (1.0 - lambda) * to.flow(a);
        }
        FlowState::new(net, flows).expect("segment between feasible points is feasible")
    };
    (state, lambda)
}

/// Basis after a pivot. Only a full step (`lambda <= eps_lambda`) that was
/// stopped by a basic arc changes the tree; partial steps, capped steps,
/// and steps blocked by the entering arc itself leave it as is.
pub fn update_basis(
    net: &Network,
    basis: &TreeBasis,
    entering: usize,
    blocking: Option<usize>,
    lambda: f64,
    eps_lambda: f64,
) -> Result<TreeBasis, SolverError> {
    if lambda > eps_lambda {
        return Ok(basis.clone());
    }
    match blocking {
        None => Ok(basis.clone()),
        Some(b) if b == entering => Ok(basis.clone()),
        Some(b) => {
            if !basis.in_tree(b) {
                return Err(SolverError::BlockingNotInLoop { arc: b });
            }
            basis
                .replace(net, entering, b)
                .map_err(|_| SolverError::BlockingNotInLoop { arc: b })
        }
    }
}

/// Feasibility phase: a linear pivot run on a copy of the network where
/// real arcs are free and one helper arc per node carries its imbalance to
/// or from the root at unit cost. Ends with a spanning tree of real arcs
/// and a feasible flow, or [`SolverError::Infeasible`] if helper flow
/// cannot be driven to zero.
pub fn phase1_initial_solution(net: &Network) -> Result<(FlowState, TreeBasis), SolverError> {
    let m = net.node_count();
    let n = net.arc_count();
    let root = net.root();

    let mut ext_arcs: Vec<Arc> = net
        .arcs()
        .iter()
        .map(|a| Arc::new(a.tail, a.head, CostFn::linear(0.0)))
        .collect();
    for i in 0..m {
        if i == root {
            continue;
        }
        let (tail, head) = if net.supply(i) >= 0.0 { (i, root) } else { (root, i) };
        ext_arcs.push(Arc::new(tail, head, CostFn::linear(1.0)));
    }
    let ext = Network::new(m, net.supplies().to_vec(), ext_arcs, root)
        .expect("extended network is structurally valid");
    let helpers: Vec<usize> = (n..ext.arc_count()).collect();
    let mut tree = TreeBasis::new(&ext, &helpers).expect("helper star spans all nodes");

    let mut flows = vec![0.0; ext.arc_count() + 1];
    let mut h = n;
    for i in 0..m {
        if i == root {
            continue;
        }
        flows[h] = net.supply(i).abs();
        h += 1;
    }
    let mut state = FlowState::new(&ext, flows).expect("helper flows are nonnegative");

    // Plain linear pivots: most negative gradient enters, full step, the
    // blocking arc leaves. After m^2 consecutive degenerate swaps switch to
    // first-eligible pricing, which cannot cycle.
    let mut degenerate_run = 0usize;
    let mut bland = false;
    loop {
        let pots = compute_potentials(&ext, &tree, &state);
        let mut entering: Option<(usize, f64)> = None;
        for a in 0..ext.arc_count() {
            if tree.is_basic(a) {
                continue;
            }
            let g = reduced_gradient(&ext, a, &state, &pots);
            if g < -PHASE1_PRICE_EPS {
                if bland {
                    entering = Some((a, g));
                    break;
                }
                if entering.is_none_or(|(_, best)| g < best) {
                    entering = Some((a, g));
                }
            }
        }
        let Some((e, _)) = entering else { break };
        let lp = tree.fundamental_loop(&ext, e).expect("nonbasic arc closes a loop");
        let (delta, blocking) = compute_delta(&lp, &state, PivotKind::Increase, f64::INFINITY);
        let b = blocking.expect("bounded helper objective always blocks the loop");
        if delta <= 0.0 {
            degenerate_run += 1;
            if degenerate_run >= m * m {
                bland = true;
            }
        } else {
            degenerate_run = 0;
            bland = false;
        }
        state = adjust_flows(&ext, &state, &lp, delta, PivotKind::Increase)?;
        tree = tree.replace(&ext, e, b).expect("blocking arc is basic");
    }

    let mass: f64 = net.supplies().iter().map(|b| b.abs()).sum();
    let helper_flow: f64 = helpers.iter().map(|&a| state.flow(a)).sum();
    if helper_flow > 1e-9 * mass.max(1.0) {
        return Err(SolverError::Infeasible);
    }

    // Swap any leftover zero-flow helpers for real arcs across the cut the
    // helper bridges. The original network is connected, so a crossing real
    // arc always exists; the swap is degenerate and moves no flow.
    while let Some(hh) = tree.tree_arcs().iter().copied().find(|&a| a >= n) {
        let mut reach = vec![false; m];
        reach[root] = true;
        let mut changed = true;
        while changed {
            changed = false;
            for &t in tree.tree_arcs() {
                if t == hh {
                    continue;
                }
                let arc = &ext.arcs()[t];
                if reach[arc.tail] != reach[arc.head] {
                    reach[arc.tail] = true;
                    reach[arc.head] = true;
                    changed = true;
                }
            }
        }
        let crossing = (0..n)
            .find(|&a| {
                !tree.in_tree(a) && {
                    let arc = &ext.arcs()[a];
                    reach[arc.tail] != reach[arc.head]
                }
            })
            .expect("connected network has a real arc across every cut");
        tree = tree.replace(&ext, crossing, hh).expect("helper is basic");
    }

    let mut real_flows: Vec<f64> = state.flows()[..n].to_vec();
    real_flows.push(0.0);
    let flow = FlowState::new(net, real_flows)?;
    let basis =
        TreeBasis::new(net, tree.tree_arcs()).expect("remaining tree arcs are real and span");
    Ok((flow, basis))
}

/// One pivot, as recorded in a solve trace. `iter` counts pivots from 1.
/// `leaving` is set only when the pivot actually swapped the basis.
/// `flows` snapshots the state after the pivot.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub iter: usize,
    pub kind: PivotKind,
    pub entering: usize,
    pub leaving: Option<usize>,
    pub delta: f64,
    pub lambda: f64,
    pub objective: f64,
    pub delta_capped: bool,
    pub flows: Vec<f64>,
    pub max_basic_gradient: f64,
    pub conservation_residual: f64,
    pub min_flow: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub flows: FlowState,
    /// Objective at `flows`; NaN when infeasible.
    pub objective: f64,
    /// Worst violation of the optimality conditions at `flows`: negative
    /// reduced gradient, nonzero flow-gradient product, or negative flow.
    /// NaN when infeasible.
    pub kkt_residual: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub trace: Option<Vec<TraceRecord>>,
}

fn dynamic_cap(net: &Network, flow: &FlowState) -> f64 {
    let positive: f64 = net.supplies().iter().filter(|b| **b > 0.0).sum();
    let max_flow = flow.flows().iter().copied().fold(0.0, f64::max);
    2.0 * positive + max_flow
}

fn basis_kkt_residual(net: &Network, tree: &TreeBasis, flow: &FlowState) -> f64 {
    let pots = compute_potentials(net, tree, flow);
    let mut worst = 0.0f64;
    for a in 0..net.arc_count() {
        let g = reduced_gradient(net, a, flow, &pots);
        let x = flow.flow(a);
        worst = worst.max(-g).max(x * g).max(-x);
    }
    worst
}

/// Runs the feasibility phase and then convex simplex pivots until the
/// optimality conditions hold, a stalled pivot triggers the best-iterate
/// heuristic, or the budget runs out.
pub fn solve(net: &Network, params: &SolverParams) -> SolveResult {
    assert!(params.eps_opt > 0.0, "eps_opt must be positive");
    assert!(params.eps_lambda > 0.0 && params.eps_lambda < 0.5, "eps_lambda must be in (0, 0.5)");
    assert!(params.ls_tol > 0.0, "ls_tol must be positive");
    if let Some(cap) = params.delta_cap {
        assert!(cap > 0.0, "delta_cap must be positive");
    }

    let mut trace: Option<Vec<TraceRecord>> = params.record_trace.then(Vec::new);
    let (mut flow, mut tree) = match phase1_initial_solution(net) {
        Ok(start) => start,
        Err(SolverError::Infeasible) => {
            return SolveResult {
                flows: FlowState::zero(net),
                objective: f64::NAN,
                kkt_residual: f64::NAN,
                iterations: 0,
                termination: Termination::Infeasible,
                trace,
            };
        }
        Err(e) => panic!("feasibility phase failed: {e}"),
    };

    let degen_cap = net.node_count() * net.node_count();
    let mut degenerate_run = 0usize;
    let mut best = flow.clone();
    let mut iterations = 0usize;
    let termination;

    loop {
        let pots = compute_potentials(net, &tree, &flow);
        let pair = select_candidates(net, &tree, &flow, &pots);
        if check_optimality(&pair, params.eps_opt) {
            termination = Termination::Optimal;
            break;
        }
        if iterations >= params.max_iters {
            termination = Termination::MaxIterations;
            break;
        }

        let max_basic_gradient = tree
            .tree_arcs()
            .iter()
            .map(|&a| reduced_gradient(net, a, &flow, &pots).abs())
            .fold(0.0, f64::max);

        let (gradient_arc, gradient) =
            pair.min_gradient.expect("nonbasic arcs exist when not optimal");
        let (score_arc, score) = pair.max_score.expect("nonbasic arcs exist when not optimal");
        let (kind, entering) = if gradient.abs() >= score {
            (PivotKind::Increase, gradient_arc)
        } else {
            (PivotKind::Decrease, score_arc)
        };
        let lp = tree.fundamental_loop(net, entering).expect("entering arc is nonbasic");
        let cap = params.delta_cap.unwrap_or_else(|| dynamic_cap(net, &flow));
        let (delta, blocking) = compute_delta(&lp, &flow, kind, cap);

        if delta <= 0.0 {
            // Nothing can move. Swap the basis if the zero-flow blocker is
            // a tree arc, otherwise the pivot is truly stuck.
            degenerate_run += 1;
            if degenerate_run >= degen_cap {
                termination = Termination::MaxIterations;
                break;
            }
            let swap = match blocking {
                Some(b) if b != entering && tree.in_tree(b) => b,
                _ => {
                    termination = Termination::HeuristicLambdaOne;
                    break;
                }
            };
            tree = tree.replace(net, entering, swap).expect("blocking arc is basic");
            iterations += 1;
            if let Some(t) = trace.as_mut() {
                t.push(TraceRecord {
                    iter: iterations,
                    kind,
                    entering,
                    leaving: Some(swap),
                    delta: 0.0,
                    lambda: 0.0,
                    objective: flow.objective(),
                    delta_capped: false,
                    flows: flow.flows().to_vec(),
                    max_basic_gradient,
                    conservation_residual: flow.conservation_residual(net),
                    min_flow: flow.min_flow(),
                });
            }
            continue;
        }
        degenerate_run = 0;

        let target = adjust_flows(net, &flow, &lp, delta, kind)
            .expect("loop step keeps flows nonnegative");
        let (stepped, raw_lambda) = line_search(net, &flow, &target, params.ls_tol);
        let (next, lambda) = if raw_lambda <= params.eps_lambda {
            (target, 0.0)
        } else if raw_lambda >= 1.0 - params.eps_lambda {
            (flow.clone(), 1.0)
        } else {
            (stepped, raw_lambda)
        };
        let improvement = flow.objective() - next.objective();
        tree = update_basis(net, &tree, entering, blocking, lambda, params.eps_lambda)
            .expect("blocking arc is basic on a full step");
        let leaving = if lambda == 0.0 {
            match blocking {
                Some(b) if b != entering => Some(b),
                _ => None,
            }
        } else {
            None
        };
        flow = next;
        iterations += 1;
        if flow.objective() < best.objective() {
            best = flow.clone();
        }
        if let Some(t) = trace.as_mut() {
            t.push(TraceRecord {
                iter: iterations,
                kind,
                entering,
                leaving,
                delta,
                lambda,
                objective: flow.objective(),
                delta_capped: blocking.is_none() && lambda == 0.0,
                flows: flow.flows().to_vec(),
                max_basic_gradient,
                conservation_residual: flow.conservation_residual(net),
                min_flow: flow.min_flow(),
            });
        }
        if lambda >= 1.0 - params.eps_lambda && improvement < params.eps_opt {
            termination = Termination::HeuristicLambdaOne;
            break;
        }
    }

    let final_flow = match termination {
        Termination::Optimal => flow,
        _ => best,
    };
    let kkt = basis_kkt_residual(net, &tree, &final_flow);
    SolveResult {
        objective: final_flow.objective(),
        flows: final_flow,
        kkt_residual: kkt,
        iterations,
        termination,
        trace,
    }
}

/// Convenience wrapper building the state for a spanning tree with zero
/// nonbasic flow, used by tests and callers that want a warm start.
pub fn tree_flow_state(
    net: &Network,
    tree: &TreeBasis,
) -> Result<FlowState, NetworkError> {
    let flows = tree_solve_flows(net, tree, net.supplies(), &[])?;
    FlowState::new(net, flows).map_err(|_| NetworkError::InvalidTree {
        reason: "tree solution is infeasible",
    })
}
