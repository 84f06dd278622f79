//! Brute-force reference solvers and a basis-free optimality check.
//!
//! Nothing here shares state with the pivoting solver: trees are
//! enumerated outright, the cycle space is swept with a refining grid, and
//! the optimality residual fits potentials by least squares instead of
//! reading them off a basis. These paths are slow on purpose; they exist
//! to cross-check the fast path on small instances.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::network::{tree_solve_flows, Network, TreeBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    TreeEnumeration,
    CycleGrid,
}

/// Reference solution: flows on the real arcs and their objective.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub flows: Vec<f64>,
    pub objective: f64,
    pub method: OracleMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleError {
    /// Tree enumeration only prices linear costs.
    NonlinearCost,
    /// Instance too large to enumerate.
    TooLarge,
    /// No spanning tree yields nonnegative flows.
    NoFeasibleTree,
    /// Grid search over more than four cycles is unreasonable.
    TooManyCycles { cycles: usize },
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::NonlinearCost => {
                write!(f, "tree enumeration requires linear costs")
            }
            OracleError::TooLarge => write!(f, "instance too large to enumerate"),
            OracleError::NoFeasibleTree => {
                write!(f, "no spanning tree solution is feasible")
            }
            OracleError::TooManyCycles { cycles } => {
                write!(f, "{cycles} independent cycles exceed the grid search limit of 4")
            }
        }
    }
}

impl core::error::Error for OracleError {}

fn clamped_objective(net: &Network, flows: &[f64]) -> f64 {
    net.arcs()
        .iter()
        .zip(flows)
        .map(|(arc, &x)| arc.cost.cost(x.max(0.0)).expect("flow clamped to nonnegative"))
        .sum()
}

/// Exact optimum of a linear instance by trying every spanning tree.
///
/// For linear costs some spanning tree solution attains the optimum, so
/// enumerating all `arc_count choose (node_count - 1)` candidate trees and
/// keeping the cheapest feasible one is a complete (if tiny) solver.
/// Limited to 10 nodes and 24 arcs; ties keep the lexicographically first
/// tree.
pub fn enumerate_tree_solutions(net: &Network) -> Result<OracleResult, OracleError> {
    if net.arcs().iter().any(|a| !a.cost.is_linear()) {
        return Err(OracleError::NonlinearCost);
    }
    let m = net.node_count();
    let n = net.arc_count();
    if m > 10 || n > 24 {
        return Err(OracleError::TooLarge);
    }

    let k = m - 1;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut combo: Vec<usize> = (0..k).collect();
    if k <= n {
        loop {
            if let Ok(tree) = TreeBasis::new(net, &combo) {
                let flows = tree_solve_flows(net, &tree, net.supplies(), &[])
                    .expect("supplies match the network");
                let feasible = flows[..n].iter().all(|&x| x >= -1e-9);
                if feasible {
                    let objective = clamped_objective(net, &flows[..n]);
                    if best.as_ref().is_none_or(|(b, _)| objective < *b) {
                        let cleaned: Vec<f64> =
                            flows[..n].iter().map(|x| x.max(0.0)).collect();
                        best = Some((objective, cleaned));
                    }
                }
            }
            // Advance to the next k-combination of 0..n in lexicographic order.
            let mut i = k;
            let mut advanced = false;
            while i > 0 {
                i -= 1;
                if combo[i] != i + n - k {
                    combo[i] += 1;
                    for j in i + 1..k {
                        combo[j] = combo[j - 1] + 1;
                    }
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                break;
            }
        }
    }

    match best {
        Some((objective, flows)) => Ok(OracleResult {
            flows,
            objective,
            method: OracleMethod::TreeEnumeration,
        }),
        None => Err(OracleError::NoFeasibleTree),
    }
}

/// Refining grid search over the cycle space around a feasible base flow.
///
/// Any rebalancing of a feasible flow is a combination of flows around the
/// fundamental cycles of a spanning tree. With at most 4 independent
/// cycles, sweeping a 101-point grid per cycle and shrinking the box
/// around the best point `grid_levels` times brackets the optimum of a
/// convex objective to roughly `box_width / 100^levels`.
pub fn cycle_space_bruteforce(
    net: &Network,
    base_flows: &[f64],
    grid_levels: usize,
) -> Result<OracleResult, OracleError> {
    let m = net.node_count();
    let n = net.arc_count();
    assert!(
        base_flows.len() == n || base_flows.len() == n + 1,
        "base flow vector length"
    );
    let base = &base_flows[..n];
    let cycles = n - (m - 1);
    if cycles > 4 {
        return Err(OracleError::TooManyCycles { cycles });
    }
    if cycles == 0 {
        let flows: Vec<f64> = base.iter().map(|x| x.max(0.0)).collect();
        let objective = clamped_objective(net, &flows);
        return Ok(OracleResult { flows, objective, method: OracleMethod::CycleGrid });
    }

    // Deterministic spanning tree: greedily keep the lowest-id arcs that
    // join new components.
    let mut comp: Vec<usize> = (0..m).collect();
    fn find(comp: &mut [usize], mut u: usize) -> usize {
        while comp[u] != u {
            comp[u] = comp[comp[u]];
            u = comp[u];
        }
        u
    }
    let mut tree_arcs = Vec::with_capacity(m - 1);
    for (a, arc) in net.arcs().iter().enumerate() {
        let (ru, rv) = (find(&mut comp, arc.tail), find(&mut comp, arc.head));
        if ru != rv {
            comp[ru] = rv;
            tree_arcs.push(a);
        }
    }
    let tree = TreeBasis::new(net, &tree_arcs).expect("network is connected");

    // Signed membership of each arc in each fundamental cycle.
    let mut loops = Vec::with_capacity(cycles);
    for a in 0..n {
        if !tree.in_tree(a) {
            let lp = tree.fundamental_loop(net, a).expect("nontree arc closes a loop");
            let mut signs: Vec<(usize, f64)> = vec![(a, 1.0)];
            signs.extend(lp.members.iter().map(|&(t, d)| (t, f64::from(d))));
            loops.push(signs);
        }
    }

    let mass: f64 = net.supplies().iter().map(|b| b.abs()).sum();
    let max_base = base.iter().copied().fold(0.0, f64::max);
    let slack = mass + max_base + 1.0;
    let mut lo = Vec::with_capacity(cycles);
    let mut hi = Vec::with_capacity(cycles);
    for signs in &loops {
        let mut up_room = f64::INFINITY;
        let mut down_room = f64::INFINITY;
        for &(a, s) in signs {
            if s > 0.0 {
                down_room = down_room.min(base[a]);
            } else {
                up_room = up_room.min(base[a]);
            }
        }
        if !up_room.is_finite() {
            up_room = 0.0;
        }
        lo.push(-down_room - slack);
        hi.push(up_room + slack);
    }

    let apply = |t: &[f64]| -> Vec<f64> {
        let mut x = base.to_vec();
        for (signs, &tc) in loops.iter().zip(t) {
            for &(a, s) in signs {
                x[a] += tc * s;
            }
        }
        x
    };

    let mut best_t = vec![0.0; cycles];
    let mut best_obj = clamped_objective(net, base);
    let levels = grid_levels.max(1);
    for _ in 0..levels {
        let steps: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| (h - l) / 100.0).collect();
        let mut idx = vec![0usize; cycles];
        let mut t = vec![0.0; cycles];
        'sweep: loop {
            for c in 0..cycles {
                t[c] = lo[c] + steps[c] * idx[c] as f64;
            }
            let x = apply(&t);
            if x.iter().all(|&v| v >= -1e-9) {
                let obj = clamped_objective(net, &x);
                if obj < best_obj {
                    best_obj = obj;
                    best_t.copy_from_slice(&t);
                }
            }
            let mut c = 0;
            loop {
                idx[c] += 1;
                if idx[c] <= 100 {
                    break;
                }
                idx[c] = 0;
                c += 1;
                if c == cycles {
                    break 'sweep;
                }
            }
        }
        for c in 0..cycles {
            lo[c] = best_t[c] - steps[c];
            hi[c] = best_t[c] + steps[c];
        }
    }

    let flows: Vec<f64> = apply(&best_t).iter().map(|x| x.max(0.0)).collect();
    let objective = clamped_objective(net, &flows);
    Ok(OracleResult { flows, objective, method: OracleMethod::CycleGrid })
}

/// Worst violation of the optimality conditions at a flow, using the best
/// potentials for that flow rather than any solver basis.
///
/// Potentials are fitted in three steps: least squares over the loaded
/// arcs (flow above 1e-9) inside each connected component of the loaded
/// subgraph, then one shift per component chosen so the zero arcs between
/// components keep nonnegative gradients where possible (a shortest-path
/// pass over the difference constraints), falling back to zero shifts when
/// those constraints are contradictory. The result is the largest of
/// `-gradient`, `flow * gradient`, and `-flow` over all arcs, floored at
/// zero, so a true optimum scores (near) zero and any violated condition
/// shows up no matter how potentials are chosen.
pub fn kkt_residual(net: &Network, flows: &[f64]) -> f64 {
    let m = net.node_count();
    let n = net.arc_count();
    assert!(flows.len() == n || flows.len() == n + 1, "flow vector length");
    let x = &flows[..n];
    const LOADED: f64 = 1e-9;

    let derivs: Vec<f64> = net
        .arcs()
        .iter()
        .zip(x)
        .map(|(arc, &v)| arc.cost.deriv(v.max(0.0)).expect("flow clamped to nonnegative"))
        .collect();

    // Components of the subgraph of loaded arcs.
    let mut comp: Vec<usize> = (0..m).collect();
    fn find(comp: &mut [usize], mut u: usize) -> usize {
        while comp[u] != u {
            comp[u] = comp[comp[u]];
            u = comp[u];
        }
        u
    }
    for (a, arc) in net.arcs().iter().enumerate() {
        if x[a] > LOADED {
            let (ru, rv) = (find(&mut comp, arc.tail), find(&mut comp, arc.head));
            if ru != rv {
                comp[ru] = rv;
            }
        }
    }
    let comp_of: Vec<usize> = (0..m).map(|u| find(&mut comp, u)).collect();

    // Ground the smallest node of each component, solve least squares for
    // the rest via the normal equations (a grounded graph Laplacian).
    let mut grounded = vec![false; m];
    let mut seen_comp = vec![false; m];
    for u in 0..m {
        if !seen_comp[comp_of[u]] {
            seen_comp[comp_of[u]] = true;
            grounded[u] = true;
        }
    }
    let mut unknown = vec![usize::MAX; m];
    let mut count = 0;
    for u in 0..m {
        if !grounded[u] {
            unknown[u] = count;
            count += 1;
        }
    }
    let mut matrix = vec![vec![0.0f64; count]; count];
    let mut rhs = vec![0.0f64; count];
    for (a, arc) in net.arcs().iter().enumerate() {
        if x[a] <= LOADED {
            continue;
        }
        let d = derivs[a];
        let (t, h) = (arc.tail, arc.head);
        if !grounded[t] {
            let i = unknown[t];
            matrix[i][i] += 1.0;
            rhs[i] += d;
            if !grounded[h] {
                matrix[i][unknown[h]] -= 1.0;
            }
        }
        if !grounded[h] {
            let i = unknown[h];
            matrix[i][i] += 1.0;
            rhs[i] -= d;
            if !grounded[t] {
                matrix[i][unknown[t]] -= 1.0;
            }
        }
    }
    let solution = solve_dense(&mut matrix, &mut rhs);
    let mut mu = vec![0.0f64; m];
    for u in 0..m {
        if !grounded[u] {
            mu[u] = solution[unknown[u]];
        }
    }

    // Difference constraints between components from the zero arcs:
    // shift(comp of tail) - shift(comp of head) <= gradient slack. Solved
    // as shortest paths from an implicit all-zero source; a negative cycle
    // means no shifts can help and they stay zero.
    let mut edges = Vec::new();
    for (a, arc) in net.arcs().iter().enumerate() {
        if x[a] > LOADED {
            continue;
        }
        let (ct, ch) = (comp_of[arc.tail], comp_of[arc.head]);
        if ct == ch {
            continue;
        }
        let w = derivs[a] - mu[arc.tail] + mu[arc.head];
        edges.push((ch, ct, w));
    }
    let mut shift = vec![0.0f64; m];
    if !edges.is_empty() {
        let mut feasible = true;
        for round in 0..=m {
            let mut changed = false;
            for &(from, to, w) in &edges {
                if shift[from] + w < shift[to] - 1e-15 {
                    shift[to] = shift[from] + w;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
            if round == m {
                feasible = false;
            }
        }
        if !feasible {
            shift = vec![0.0; m];
        }
    }

    let mut worst = 0.0f64;
    for (a, arc) in net.arcs().iter().enumerate() {
        let g = derivs[a] - (mu[arc.tail] + shift[comp_of[arc.tail]])
            + (mu[arc.head] + shift[comp_of[arc.head]]);
        worst = worst.max(-g).max(x[a] * g).max(-x[a]);
    }
    worst
}

/// Gaussian elimination with partial pivoting, in place. Near-zero pivots
/// zero out their variable, which keeps degenerate systems harmless.
fn solve_dense(matrix: &mut [Vec<f64>], rhs: &mut [f64]) -> Vec<f64> {
    let k = rhs.len();
    for col in 0..k {
        let pivot_row = (col..k)
            .max_by(|&a, &b| {
                matrix[a][col]
                    .abs()
                    .partial_cmp(&matrix[b][col].abs())
                    .expect("matrix entries are finite")
            })
            .expect("column index in range");
        matrix.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        let pivot = matrix[col][col];
        let (pivot_rows, below) = matrix.split_at_mut(col + 1);
        let pivot_row = &mut pivot_rows[col];
        if pivot.abs() < 1e-12 {
            pivot_row[col] = 1.0;
            rhs[col] = 0.0;
            for row in below.iter_mut() {
                row[col] = 0.0;
            }
            continue;
        }
        let (rhs_head, rhs_below) = rhs.split_at_mut(col + 1);
        for (row, r) in below.iter_mut().zip(rhs_below.iter_mut()) {
            let factor = row[col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for (dst, src) in row[col..].iter_mut().zip(pivot_row[col..].iter()) {
                *dst -= factor * *src;
            }
            *r -= factor * rhs_head[col];
        }
    }
    let mut sol = vec![0.0f64; k];
    for col in (0..k).rev() {
        let mut v = rhs[col];
        for c in col + 1..k {
            v -= matrix[col][c] * sol[c];
        }
        sol[col] = v / matrix[col][col];
    }
    sol
}
