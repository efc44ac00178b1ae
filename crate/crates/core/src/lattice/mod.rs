//! Weighted acyclic word lattices: validation, best-path and n-best search,
//! and exact n-gram rescoring via history expansion.
//!
//! Lattices are immutable once validated; rescoring and expansion build new
//! lattices, so readers can share them freely across threads.

mod format;
mod rescore;
mod search;

pub use format::{read_lattices, write_lattices, LatticeFormatError};
pub use rescore::{expand_order, rescore};
pub use search::{best_path, nbest};

use std::collections::BTreeSet;

use thiserror::Error;

/// Lattice node identifier, dense from 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One lattice arc: a word hypothesis with acoustic and language-model
/// scores, both log10.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeArc {
    pub from: NodeId,
    pub to: NodeId,
    pub word: String,
    pub am_score: f64,
    pub lm_score: f64,
}

/// Scales applied when combining acoustic and language-model scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreConfig {
    pub am_scale: f64,
    pub lm_scale: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            am_scale: 1.0,
            lm_scale: 1.0,
        }
    }
}

impl ScoreConfig {
    pub fn new(am_scale: f64, lm_scale: f64) -> Result<ScoreConfig, LatticeError> {
        let cfg = ScoreConfig { am_scale, lm_scale };
        cfg.check()?;
        Ok(cfg)
    }

    pub(crate) fn check(&self) -> Result<(), LatticeError> {
        if self.am_scale < 0.0
            || self.lm_scale < 0.0
            || (self.am_scale == 0.0 && self.lm_scale == 0.0)
            || !self.am_scale.is_finite()
            || !self.lm_scale.is_finite()
        {
            return Err(LatticeError::InvalidScales {
                am: self.am_scale,
                lm: self.lm_scale,
            });
        }
        Ok(())
    }

    pub(crate) fn arc_score(&self, arc: &LatticeArc) -> f64 {
        self.am_scale * arc.am_score + self.lm_scale * arc.lm_score
    }
}

/// A complete start-to-final path.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePath {
    /// Arc ids in traversal order.
    pub arcs: Vec<usize>,
    pub words: Vec<String>,
    pub total_acoustic: f64,
    pub total_lm: f64,
    /// am_scale * total_acoustic + lm_scale * total_lm for the scales used
    /// to extract the path.
    pub combined: f64,
}

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("lattice {utt}: has no nodes")]
    NoNodes { utt: String },
    #[error("lattice {utt}: node {node} out of range (num_nodes = {num_nodes})")]
    NodeOutOfRange {
        utt: String,
        node: NodeId,
        num_nodes: usize,
    },
    #[error("lattice {utt}: no final nodes")]
    NoFinal { utt: String },
    #[error("lattice {utt}: cycle through arc {arc} ({from} -> {to})")]
    Cycle {
        utt: String,
        arc: usize,
        from: NodeId,
        to: NodeId,
    },
    #[error("lattice {utt}: no complete path from start to a final node")]
    NoCompletePath { utt: String },
    #[error("lattice {utt}: non-finite score on arc {arc}")]
    NonFiniteScore { utt: String, arc: usize },
    #[error("lattice {utt}: arc {arc} carries an invalid word token")]
    InvalidWord { utt: String, arc: usize },
    #[error("lattice {utt}: start node is final; sentence-end cannot be folded into any arc")]
    StartIsFinal { utt: String },
    #[error("n-gram order must be at least 1 (got {0})")]
    InvalidOrder(usize),
    #[error("am_scale {am} / lm_scale {lm}: scales must be non-negative and not both zero")]
    InvalidScales { am: f64, lm: f64 },
}

/// Validation outcome: dead nodes plus the topological order used by the
/// search routines.
#[derive(Debug, Clone)]
pub struct LatticeCheck {
    /// Nodes unreachable from the start or unable to reach a final node.
    pub dead_nodes: Vec<NodeId>,
    pub(crate) topo_order: Vec<NodeId>,
    pub(crate) alive: Vec<bool>,
}

/// Directed acyclic word graph with one start node and at least one final.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    utt_id: String,
    num_nodes: usize,
    start: NodeId,
    finals: BTreeSet<NodeId>,
    arcs: Vec<LatticeArc>,
}

impl Lattice {
    pub fn new(utt_id: impl Into<String>, num_nodes: usize, start: NodeId) -> Lattice {
        Lattice {
            utt_id: utt_id.into(),
            num_nodes,
            start,
            finals: BTreeSet::new(),
            arcs: Vec::new(),
        }
    }

    pub fn add_arc(
        &mut self,
        from: NodeId,
        to: NodeId,
        word: impl Into<String>,
        am_score: f64,
        lm_score: f64,
    ) -> usize {
        self.arcs.push(LatticeArc {
            from,
            to,
            word: word.into(),
            am_score,
            lm_score,
        });
        self.arcs.len() - 1
    }

    pub fn set_final(&mut self, node: NodeId) {
        self.finals.insert(node);
    }

    pub fn utt_id(&self) -> &str {
        &self.utt_id
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn start(&self) -> NodeId {
        self.start
    }

    pub fn is_final(&self, node: NodeId) -> bool {
        self.finals.contains(&node)
    }

    pub fn finals(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.finals.iter().copied()
    }

    pub fn arcs(&self) -> &[LatticeArc] {
        &self.arcs
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    /// Outgoing arc ids per node, ascending.
    pub(crate) fn arcs_from(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_nodes];
        for (i, arc) in self.arcs.iter().enumerate() {
            adj[arc.from.index()].push(i);
        }
        adj
    }

    /// Check structure: node ranges, finite scores, acyclicity (reporting an
    /// offending arc), and the existence of a complete path. Also reports
    /// dead nodes, which `normalized` removes.
    pub fn validate(&self) -> Result<LatticeCheck, LatticeError> {
        let utt = || self.utt_id.clone();
        if self.num_nodes == 0 {
            return Err(LatticeError::NoNodes { utt: utt() });
        }
        let in_range = |n: NodeId| n.index() < self.num_nodes;
        if !in_range(self.start) {
            return Err(LatticeError::NodeOutOfRange {
                utt: utt(),
                node: self.start,
                num_nodes: self.num_nodes,
            });
        }
        if self.finals.is_empty() {
            return Err(LatticeError::NoFinal { utt: utt() });
        }
        for &f in &self.finals {
            if !in_range(f) {
                return Err(LatticeError::NodeOutOfRange {
                    utt: utt(),
                    node: f,
                    num_nodes: self.num_nodes,
                });
            }
        }
        for (i, arc) in self.arcs.iter().enumerate() {
            if !in_range(arc.from) || !in_range(arc.to) {
                let node = if in_range(arc.from) { arc.to } else { arc.from };
                return Err(LatticeError::NodeOutOfRange {
                    utt: utt(),
                    node,
                    num_nodes: self.num_nodes,
                });
            }
            if !arc.am_score.is_finite() || !arc.lm_score.is_finite() {
                return Err(LatticeError::NonFiniteScore { utt: utt(), arc: i });
            }
            if arc.word.is_empty() || arc.word.chars().any(char::is_whitespace) {
                return Err(LatticeError::InvalidWord { utt: utt(), arc: i });
            }
        }

        // Kahn's algorithm; leftover in-degree means a cycle.
        let mut indeg = vec![0usize; self.num_nodes];
        for arc in &self.arcs {
            indeg[arc.to.index()] += 1;
        }
        let adj = self.arcs_from();
        let mut queue: std::collections::VecDeque<usize> =
            (0..self.num_nodes).filter(|&n| indeg[n] == 0).collect();
        let mut topo_order = Vec::with_capacity(self.num_nodes);
        while let Some(n) = queue.pop_front() {
            topo_order.push(NodeId(n as u32));
            for &a in &adj[n] {
                let t = self.arcs[a].to.index();
                indeg[t] -= 1;
                if indeg[t] == 0 {
                    queue.push_back(t);
                }
            }
        }
        if topo_order.len() != self.num_nodes {
            let arc = self
                .find_back_edge(&adj)
                .expect("leftover in-degree implies a back edge");
            return Err(LatticeError::Cycle {
                utt: utt(),
                arc,
                from: self.arcs[arc].from,
                to: self.arcs[arc].to,
            });
        }

        // Forward reachability and reverse co-reachability.
        let mut reachable = vec![false; self.num_nodes];
        let mut stack = vec![self.start.index()];
        reachable[self.start.index()] = true;
        while let Some(n) = stack.pop() {
            for &a in &adj[n] {
                let t = self.arcs[a].to.index();
                if !reachable[t] {
                    reachable[t] = true;
                    stack.push(t);
                }
            }
        }
        let mut radj = vec![Vec::new(); self.num_nodes];
        for (i, arc) in self.arcs.iter().enumerate() {
            radj[arc.to.index()].push(i);
        }
        let mut coreachable = vec![false; self.num_nodes];
        let mut stack: Vec<usize> = self.finals.iter().map(|f| f.index()).collect();
        for &f in &self.finals {
            coreachable[f.index()] = true;
        }
        while let Some(n) = stack.pop() {
            for &a in &radj[n] {
                let s = self.arcs[a].from.index();
                if !coreachable[s] {
                    coreachable[s] = true;
                    stack.push(s);
                }
            }
        }
        if !coreachable[self.start.index()] {
            return Err(LatticeError::NoCompletePath { utt: utt() });
        }

        let alive: Vec<bool> = (0..self.num_nodes)
            .map(|n| reachable[n] && coreachable[n])
            .collect();
        let dead_nodes = (0..self.num_nodes)
            .filter(|&n| !alive[n])
            .map(|n| NodeId(n as u32))
            .collect();
        Ok(LatticeCheck {
            dead_nodes,
            topo_order,
            alive,
        })
    }

    /// First arc that closes a cycle under a DFS in node/arc-id order.
    fn find_back_edge(&self, adj: &[Vec<usize>]) -> Option<usize> {
        #[derive(Clone, Copy, PartialEq)]
        enum Color {
            White,
            Gray,
            Black,
        }
        let mut color = vec![Color::White; self.num_nodes];
        // Stack frames: (node, next outgoing-arc position).
        for root in 0..self.num_nodes {
            if color[root] != Color::White {
                continue;
            }
            let mut stack = vec![(root, 0usize)];
            color[root] = Color::Gray;
            while let Some(&mut (node, ref mut next)) = stack.last_mut() {
                if *next < adj[node].len() {
                    let a = adj[node][*next];
                    *next += 1;
                    let t = self.arcs[a].to.index();
                    match color[t] {
                        Color::Gray => return Some(a),
                        Color::White => {
                            color[t] = Color::Gray;
                            stack.push((t, 0));
                        }
                        Color::Black => {}
                    }
                } else {
                    color[node] = Color::Black;
                    stack.pop();
                }
            }
        }
        None
    }

    /// Copy with dead nodes (and their arcs) removed, node ids renumbered
    /// densely in their original order.
    pub fn normalized(&self) -> Result<Lattice, LatticeError> {
        let check = self.validate()?;
        let mut remap = vec![usize::MAX; self.num_nodes];
        let mut next = 0usize;
        for (n, &alive) in check.alive.iter().enumerate() {
            if alive {
                remap[n] = next;
                next += 1;
            }
        }
        let mut out = Lattice::new(
            self.utt_id.clone(),
            next,
            NodeId(remap[self.start.index()] as u32),
        );
        for arc in &self.arcs {
            if check.alive[arc.from.index()] && check.alive[arc.to.index()] {
                out.add_arc(
                    NodeId(remap[arc.from.index()] as u32),
                    NodeId(remap[arc.to.index()] as u32),
                    arc.word.clone(),
                    arc.am_score,
                    arc.lm_score,
                );
            }
        }
        for &f in &self.finals {
            if check.alive[f.index()] {
                out.set_final(NodeId(remap[f.index()] as u32));
            }
        }
        Ok(out)
    }

    /// Build a complete path from arc ids, computing totals with the given
    /// scales.
    pub(crate) fn path_from_arcs(&self, arc_ids: Vec<usize>, cfg: &ScoreConfig) -> LatticePath {
        let mut words = Vec::with_capacity(arc_ids.len());
        let mut total_acoustic = 0.0;
        let mut total_lm = 0.0;
        for &a in &arc_ids {
            let arc = &self.arcs[a];
            words.push(arc.word.clone());
            total_acoustic += arc.am_score;
            total_lm += arc.lm_score;
        }
        let combined = cfg.am_scale * total_acoustic + cfg.lm_scale * total_lm;
        LatticePath {
            arcs: arc_ids,
            words,
            total_acoustic,
            total_lm,
            combined,
        }
    }
}
