//! Network data model and spanning-tree plumbing.
//!
//! Nodes are `0..node_count` with the root being one of them. Arc ids are
//! positions in the arc list. One artificial arc with id `arc_count()` is
//! implied at the root; together with a spanning tree it completes a basis
//! of the node-arc incidence system, so flow vectors carry `arc_count() + 1`
//! entries.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::cost::{CostError, CostFn};

/// Directed arc from `tail` to `head` with its own convex cost curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub tail: usize,
    pub head: usize,
    pub cost: CostFn,
}

impl Arc {
    pub fn new(tail: usize, head: usize, cost: CostFn) -> Self {
        Arc { tail, head, cost }
    }
}

/// The two nonzero rows of an arc's incidence column: +1 at the tail,
/// -1 at the head.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IncidenceColumn {
    pub tail_row: usize,
    pub head_row: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NetworkError {
    TooFewNodes { nodes: usize },
    NoArcs,
    SupplyLengthMismatch { expected: usize, got: usize },
    BadSupply { node: usize },
    RootOutOfRange { root: usize, nodes: usize },
    NodeOutOfRange { arc: usize, node: usize },
    SelfLoop { arc: usize },
    UnbalancedSupplies { imbalance: f64 },
    Disconnected { node: usize },
    BadCostParams { arc: usize, source: CostError },
    UnknownArc { arc: usize },
    ArcAlreadyBasic { arc: usize },
    InvalidTree { reason: &'static str },
}

impl fmt::Display for NetworkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetworkError::TooFewNodes { nodes } => {
                write!(f, "need at least 2 nodes, got {nodes}")
            }
            NetworkError::NoArcs => write!(f, "network has no arcs"),
            NetworkError::SupplyLengthMismatch { expected, got } => {
                write!(f, "expected {expected} supplies, got {got}")
            }
            NetworkError::BadSupply { node } => {
                write!(f, "supply of node {node} is not finite")
            }
            NetworkError::RootOutOfRange { root, nodes } => {
                write!(f, "root {root} out of range for {nodes} nodes")
            }
            NetworkError::NodeOutOfRange { arc, node } => {
                write!(f, "arc {arc} references node {node} out of range")
            }
            NetworkError::SelfLoop { arc } => write!(f, "arc {arc} is a self loop"),
            NetworkError::UnbalancedSupplies { imbalance } => {
                write!(f, "supplies sum to {imbalance}, not zero")
            }
            NetworkError::Disconnected { node } => {
                write!(f, "node {node} is not connected to the rest of the network")
            }
            NetworkError::BadCostParams { arc, source } => {
                write!(f, "arc {arc}: {source}")
            }
            NetworkError::UnknownArc { arc } => write!(f, "unknown arc id {arc}"),
            NetworkError::ArcAlreadyBasic { arc } => {
                write!(f, "arc {arc} is already part of the basis")
            }
            NetworkError::InvalidTree { reason } => write!(f, "invalid tree: {reason}"),
        }
    }
}

impl core::error::Error for NetworkError {}

/// Validated problem instance: nodes with balanced supplies, directed arcs
/// with convex costs, and a root node for the artificial arc.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    node_count: usize,
    supplies: Vec<f64>,
    arcs: Vec<Arc>,
    root: usize,
}

impl Network {
    /// Builds and validates an instance. Supplies must balance to zero
    /// within `1e-9` of their total absolute mass, every arc must join two
    /// distinct in-range nodes with valid cost parameters, and the network
    /// must be connected when arc directions are ignored.
    pub fn new(
        node_count: usize,
        supplies: Vec<f64>,
        arcs: Vec<Arc>,
        root: usize,
    ) -> Result<Self, NetworkError> {
        if node_count < 2 {
            return Err(NetworkError::TooFewNodes { nodes: node_count });
        }
        if arcs.is_empty() {
            return Err(NetworkError::NoArcs);
        }
        if supplies.len() != node_count {
            return Err(NetworkError::SupplyLengthMismatch {
                expected: node_count,
                got: supplies.len(),
            });
        }
        if root >= node_count {
            return Err(NetworkError::RootOutOfRange { root, nodes: node_count });
        }
        for (node, b) in supplies.iter().enumerate() {
            if !b.is_finite() {
                return Err(NetworkError::BadSupply { node });
            }
        }
        let total: f64 = supplies.iter().sum();
        let mass: f64 = supplies.iter().map(|b| b.abs()).sum();
        if total.abs() > 1e-9 * mass {
            return Err(NetworkError::UnbalancedSupplies { imbalance: total });
        }
        for (id, arc) in arcs.iter().enumerate() {
            if arc.tail >= node_count {
                return Err(NetworkError::NodeOutOfRange { arc: id, node: arc.tail });
            }
            if arc.head >= node_count {
                return Err(NetworkError::NodeOutOfRange { arc: id, node: arc.head });
            }
            if arc.tail == arc.head {
                return Err(NetworkError::SelfLoop { arc: id });
            }
            arc.cost
                .validate()
                .map_err(|source| NetworkError::BadCostParams { arc: id, source })?;
        }

        // Connectivity over the undirected skeleton.
        let mut adjacency = vec![Vec::new(); node_count];
        for arc in &arcs {
            adjacency[arc.tail].push(arc.head);
            adjacency[arc.head].push(arc.tail);
        }
        let mut seen = vec![false; node_count];
        let mut stack = vec![root];
        seen[root] = true;
        while let Some(u) = stack.pop() {
            for &v in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        if let Some(node) = seen.iter().position(|s| !s) {
            return Err(NetworkError::Disconnected { node });
        }

        Ok(Network { node_count, supplies, arcs, root })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn supply(&self, node: usize) -> f64 {
        self.supplies[node]
    }

    pub fn supplies(&self) -> &[f64] {
        &self.supplies
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arc(&self, arc: usize) -> Option<&Arc> {
        self.arcs.get(arc)
    }

    /// Id of the artificial root arc, one past the real arcs.
    pub fn artificial_arc(&self) -> usize {
        self.arcs.len()
    }

    pub fn incidence_column(&self, arc: usize) -> Result<IncidenceColumn, NetworkError> {
        self.arcs
            .get(arc)
            .map(|a| IncidenceColumn { tail_row: a.tail, head_row: a.head })
            .ok_or(NetworkError::UnknownArc { arc })
    }
}

/// Fundamental loop closed by a nonbasic arc: walking from the entering
/// arc's head back to its tail along the tree, each tree arc is traversed
/// either with its direction (`+1`) or against it (`-1`). Members are
/// sorted by arc id.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedLoop {
    pub entering_arc: usize,
    pub members: Vec<(usize, i8)>,
}

/// Spanning tree rooted at the network root, the basis of the solver.
///
/// Stores parent pointers and depths so loops and potentials follow from
/// simple climbs. The artificial arc is always part of the basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeBasis {
    tree_arcs: Vec<usize>,
    in_tree: Vec<bool>,
    artificial_arc: usize,
    parent_node: Vec<Option<usize>>,
    parent_arc: Vec<Option<usize>>,
    depth: Vec<u32>,
    // Nodes in breadth-first order from the root; parents precede children.
    order: Vec<usize>,
}

impl TreeBasis {
    /// Validates that `tree_arcs` (exactly `node_count - 1` distinct real
    /// arcs) span every node and builds the rooted representation.
    pub fn new(net: &Network, tree_arcs: &[usize]) -> Result<Self, NetworkError> {
        let m = net.node_count();
        if tree_arcs.len() != m - 1 {
            return Err(NetworkError::InvalidTree { reason: "need node_count - 1 arcs" });
        }
        let mut in_tree = vec![false; net.arc_count()];
        for &a in tree_arcs {
            if a >= net.arc_count() {
                return Err(NetworkError::UnknownArc { arc: a });
            }
            if in_tree[a] {
                return Err(NetworkError::InvalidTree { reason: "duplicate arc" });
            }
            in_tree[a] = true;
        }

        let mut adjacency = vec![Vec::new(); m];
        for &a in tree_arcs {
            let arc = &net.arcs()[a];
            adjacency[arc.tail].push((a, arc.head));
            adjacency[arc.head].push((a, arc.tail));
        }

        let root = net.root();
        let mut parent_node = vec![None; m];
        let mut parent_arc = vec![None; m];
        let mut depth = vec![0u32; m];
        let mut order = Vec::with_capacity(m);
        let mut seen = vec![false; m];
        seen[root] = true;
        order.push(root);
        let mut cursor = 0;
        while cursor < order.len() {
            let u = order[cursor];
            cursor += 1;
            for &(a, v) in &adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent_node[v] = Some(u);
                    parent_arc[v] = Some(a);
                    depth[v] = depth[u] + 1;
                    order.push(v);
                }
            }
        }
        if order.len() != m {
            return Err(NetworkError::InvalidTree { reason: "arcs do not span all nodes" });
        }

        Ok(TreeBasis {
            tree_arcs: tree_arcs.to_vec(),
            in_tree,
            artificial_arc: net.artificial_arc(),
            parent_node,
            parent_arc,
            depth,
            order,
        })
    }

    pub fn tree_arcs(&self) -> &[usize] {
        &self.tree_arcs
    }

    pub fn artificial_arc(&self) -> usize {
        self.artificial_arc
    }

    /// True for tree arcs and the artificial arc.
    pub fn is_basic(&self, arc: usize) -> bool {
        arc == self.artificial_arc || self.in_tree.get(arc).copied().unwrap_or(false)
    }

    pub fn in_tree(&self, arc: usize) -> bool {
        self.in_tree.get(arc).copied().unwrap_or(false)
    }

    pub fn parent_node(&self, node: usize) -> Option<usize> {
        self.parent_node[node]
    }

    pub fn parent_arc(&self, node: usize) -> Option<usize> {
        self.parent_arc[node]
    }

    /// Nodes in root-first traversal order.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// The loop closed by a nonbasic arc. Directions are relative to the
    /// walk that follows the entering arc tail to head and returns along
    /// the tree path from its head to its tail.
    pub fn fundamental_loop(
        &self,
        net: &Network,
        entering: usize,
    ) -> Result<OrientedLoop, NetworkError> {
        let arc = net.arc(entering).ok_or(NetworkError::UnknownArc { arc: entering })?;
        if self.is_basic(entering) {
            return Err(NetworkError::ArcAlreadyBasic { arc: entering });
        }

        let mut members = Vec::new();
        // Climb from the head along the walk direction and from the tail
        // against it until the two meet at the loop's apex.
        let mut u = arc.head;
        let mut v = arc.tail;
        while self.depth[u] > self.depth[v] {
            let t = self.parent_arc[u].expect("non-root node has a parent arc");
            let d = if net.arcs()[t].tail == u { 1 } else { -1 };
            members.push((t, d));
            u = self.parent_node[u].expect("non-root node has a parent");
        }
        while self.depth[v] > self.depth[u] {
            let t = self.parent_arc[v].expect("non-root node has a parent arc");
            let d = if net.arcs()[t].tail == v { -1 } else { 1 };
            members.push((t, d));
            v = self.parent_node[v].expect("non-root node has a parent");
        }
        while u != v {
            let tu = self.parent_arc[u].expect("non-root node has a parent arc");
            members.push((tu, if net.arcs()[tu].tail == u { 1 } else { -1 }));
            u = self.parent_node[u].expect("non-root node has a parent");
            let tv = self.parent_arc[v].expect("non-root node has a parent arc");
            members.push((tv, if net.arcs()[tv].tail == v { -1 } else { 1 }));
            v = self.parent_node[v].expect("non-root node has a parent");
        }
        members.sort_unstable_by_key(|&(a, _)| a);

        Ok(OrientedLoop { entering_arc: entering, members })
    }

    /// New basis with `leaving` replaced by `entering`, order preserved.
    pub fn replace(
        &self,
        net: &Network,
        entering: usize,
        leaving: usize,
    ) -> Result<Self, NetworkError> {
        if !self.in_tree(leaving) {
            return Err(NetworkError::InvalidTree { reason: "leaving arc not in tree" });
        }
        let arcs: Vec<usize> = self
            .tree_arcs
            .iter()
            .map(|&a| if a == leaving { entering } else { a })
            .collect();
        TreeBasis::new(net, &arcs)
    }
}

/// Flows on the basic arcs that satisfy conservation given fixed flows on
/// the listed nonbasic arcs (everything else off the tree carries zero).
///
/// Returns a vector of `arc_count + 1` flows; the last entry is the
/// artificial arc, which absorbs whatever imbalance remains at the root
/// (zero when `supplies` balance). Basic flows are the unique solution of
/// the tree system and may be negative; callers decide what that means.
pub fn tree_solve_flows(
    net: &Network,
    tree: &TreeBasis,
    supplies: &[f64],
    nonbasic: &[(usize, f64)],
) -> Result<Vec<f64>, NetworkError> {
    let m = net.node_count();
    if supplies.len() != m {
        return Err(NetworkError::SupplyLengthMismatch { expected: m, got: supplies.len() });
    }
    let mut flows = vec![0.0; net.arc_count() + 1];
    let mut residual = supplies.to_vec();
    for &(a, f) in nonbasic {
        if a >= net.arc_count() {
            return Err(NetworkError::UnknownArc { arc: a });
        }
        if tree.in_tree(a) {
            return Err(NetworkError::ArcAlreadyBasic { arc: a });
        }
        flows[a] = f;
        let arc = &net.arcs()[a];
        residual[arc.tail] -= f;
        residual[arc.head] += f;
    }

    // Peel nodes leaves-first: in reverse traversal order every non-root
    // node's parent arc is the only unresolved incident tree arc, so its
    // flow is forced by what the subtree still has to ship.
    for &u in tree.order().iter().skip(1).rev() {
        let a = tree.parent_arc(u).expect("non-root node has a parent arc");
        let p = tree.parent_node(u).expect("non-root node has a parent");
        let arc = &net.arcs()[a];
        flows[a] = if arc.tail == u { residual[u] } else { -residual[u] };
        residual[p] += residual[u];
        residual[u] = 0.0;
    }
    flows[net.artificial_arc()] = residual[net.root()];
    Ok(flows)
}
