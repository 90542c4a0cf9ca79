//! The Hoeffding tree: routing, the training loop, split application with a
//! bounded pool of leaf elements, prediction and snapshots.
//!
//! Nodes live in an arena addressed by [`NodeId`]. Every active leaf owns one
//! [`LeafElement`] from an [`ElementPool`] of `max_leaves` slots; splitting a
//! leaf returns its element and takes two fresh ones. When a split cannot be
//! honoured (too few free elements, leaf limit reached, or depth limit) the
//! leaf is *frozen*: it gives its element back, keeps only a class-count
//! vector for prediction, and never splits again.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::config::TreeConfig;
use crate::error::{Error, Result};
use crate::leaf::{argmax, ElementData, ElementLayout, LeafElement, SplitPoint};
use crate::schema::{DatasetSchema, Sample};
use crate::split::{evaluate_split_trial, DecisionReason, SplitDecision, TrialParams};

pub type NodeId = usize;
pub type ElementId = usize;

const SNAPSHOT_FORMAT: &str = "qtree-snapshot";
const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafSlot {
    Active(ElementId),
    /// Class counts kept after the element was released.
    Frozen(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Internal {
        attribute: usize,
        test: SplitPoint,
        left: NodeId,
        right: NodeId,
        depth: u32,
    },
    Leaf {
        slot: LeafSlot,
        cached_majority: usize,
        depth: u32,
    },
}

impl Node {
    pub fn depth(&self) -> u32 {
        match self {
            Node::Internal { depth, .. } | Node::Leaf { depth, .. } => *depth,
        }
    }
}

/// Fixed-capacity pool of leaf elements with a node-element table.
#[derive(Debug, Clone)]
pub struct ElementPool {
    capacity: usize,
    elements: Vec<LeafElement>,
    free: Vec<ElementId>,
    owner: Vec<Option<NodeId>>,
}

impl ElementPool {
    fn new(capacity: usize) -> Self {
        ElementPool {
            capacity,
            elements: Vec::new(),
            // Popped from the back, so ids come out in ascending order.
            free: (0..capacity).rev().collect(),
            owner: vec![None; capacity],
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn free_count(&self) -> usize {
        self.free.len()
    }

    pub fn allocated_count(&self) -> usize {
        self.capacity - self.free.len()
    }

    pub fn get(&self, id: ElementId) -> &LeafElement {
        &self.elements[id]
    }

    pub fn owner(&self, id: ElementId) -> Option<NodeId> {
        self.owner[id]
    }

    fn allocate(&mut self, layout: &Arc<ElementLayout>, node: NodeId, inherited: usize) -> Option<ElementId> {
        let id = self.free.pop()?;
        if id == self.elements.len() {
            self.elements.push(LeafElement::new(Arc::clone(layout)));
        }
        self.elements[id].reset(inherited);
        self.owner[id] = Some(node);
        Some(id)
    }

    fn release(&mut self, id: ElementId) {
        debug_assert!(self.owner[id].is_some());
        self.owner[id] = None;
        self.free.push(id);
    }
}

/// Why a taken split did not change the tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FreezeCause {
    PoolExhausted,
    LeafLimit,
    DepthLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitOutcome {
    Split { left: NodeId, right: NodeId },
    Frozen(FreezeCause),
}

/// Record of a split decision that was acted on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitEvent {
    pub leaf: NodeId,
    pub attribute: usize,
    pub split_point: SplitPoint,
    pub depth: u32,
    pub gain: f64,
    pub epsilon: f64,
    pub reason: DecisionReason,
    pub outcome: SplitOutcome,
}

/// Running totals kept by the tree.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeCounters {
    pub samples_trained: u64,
    pub trials: u64,
    pub splits: u64,
    pub frozen_leaves: u64,
    pub saturations: u64,
}

/// An online decision tree over a fixed schema.
#[derive(Debug, Clone)]
pub struct HoeffdingTree {
    schema: DatasetSchema,
    config: TreeConfig,
    layout: Arc<ElementLayout>,
    nodes: Vec<Node>,
    pool: ElementPool,
    leaf_count: usize,
    max_depth_seen: u32,
    counters: TreeCounters,
}

impl HoeffdingTree {
    pub fn new(schema: &DatasetSchema, config: TreeConfig) -> Result<Self> {
        schema.validate()?;
        config.validate()?;
        let layout = Arc::new(ElementLayout::new(schema, &config));
        let mut pool = ElementPool::new(config.max_leaves);
        let root = pool
            .allocate(&layout, 0, 0)
            .expect("a fresh pool has free elements");
        Ok(HoeffdingTree {
            schema: schema.clone(),
            config,
            layout,
            nodes: vec![Node::Leaf {
                slot: LeafSlot::Active(root),
                cached_majority: 0,
                depth: 0,
            }],
            pool,
            leaf_count: 1,
            max_depth_seen: 0,
            counters: TreeCounters::default(),
        })
    }

    pub fn schema(&self) -> &DatasetSchema {
        &self.schema
    }

    pub fn config(&self) -> &TreeConfig {
        &self.config
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn pool(&self) -> &ElementPool {
        &self.pool
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    /// Depth of the deepest node.
    pub fn depth(&self) -> u32 {
        self.max_depth_seen
    }

    pub fn counters(&self) -> TreeCounters {
        let mut c = self.counters;
        c.saturations += self
            .pool
            .owner
            .iter()
            .enumerate()
            .filter(|(_, o)| o.is_some())
            .map(|(id, _)| self.pool.elements[id].saturations())
            .sum::<u64>();
        c
    }

    /// Element statistics of an active leaf.
    pub fn element(&self, leaf: NodeId) -> Option<&LeafElement> {
        match &self.nodes[leaf] {
            Node::Leaf { slot: LeafSlot::Active(e), .. } => Some(self.pool.get(*e)),
            _ => None,
        }
    }

    /// Follows the routing tests from the root to the leaf for `s`.
    pub fn sort_to_leaf(&self, s: &Sample) -> NodeId {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { .. } => return id,
                Node::Internal {
                    attribute,
                    test,
                    left,
                    right,
                    ..
                } => {
                    let v = s.values[*attribute];
                    let goes_left = match *test {
                        SplitPoint::Threshold(t) => v <= t,
                        SplitPoint::Category(c) => v as usize == c,
                    };
                    id = if goes_left { *left } else { *right };
                }
            }
        }
    }

    /// Predicted class for `s`.
    pub fn predict(&self, s: &Sample) -> usize {
        match &self.nodes[self.sort_to_leaf(s)] {
            Node::Leaf { slot, cached_majority, .. } => match slot {
                LeafSlot::Active(e) => self.pool.get(*e).majority_class(),
                LeafSlot::Frozen(counts) => {
                    if counts.iter().all(|&c| c == 0) {
                        *cached_majority
                    } else {
                        argmax(counts)
                    }
                }
            },
            Node::Internal { .. } => unreachable!("sort_to_leaf returns leaves"),
        }
    }

    /// Learns from one sample. Returns the split event when a split trial at
    /// the reached leaf decided to split.
    pub fn train_one(&mut self, s: &Sample) -> Option<SplitEvent> {
        debug_assert_eq!(s.values.len(), self.schema.attribute_count());
        self.counters.samples_trained += 1;
        let leaf = self.sort_to_leaf(s);
        let element = match &mut self.nodes[leaf] {
            Node::Leaf { slot: LeafSlot::Frozen(counts), .. } => {
                counts[s.label] += 1;
                return None;
            }
            Node::Leaf { slot: LeafSlot::Active(e), .. } => *e,
            Node::Internal { .. } => unreachable!(),
        };
        let el = &mut self.pool.elements[element];
        el.observe(s);
        if el.n_f() % self.config.n_min != 0 {
            return None;
        }
        self.counters.trials += 1;
        let decision = evaluate_split_trial(el, &TrialParams::from(&self.config));
        if decision.taken {
            Some(self.apply_split(leaf, &decision))
        } else {
            None
        }
    }

    /// Acts on a taken split decision for an active leaf: either splits it
    /// into two fresh leaves or, at a resource cap, freezes it.
    pub fn apply_split(&mut self, leaf: NodeId, decision: &SplitDecision) -> SplitEvent {
        let best = decision.best.expect("a taken decision has a best candidate");
        let (element, depth) = match &self.nodes[leaf] {
            Node::Leaf { slot: LeafSlot::Active(e), depth, .. } => (*e, *depth),
            _ => panic!("apply_split needs an active leaf"),
        };
        let majority = self.pool.get(element).majority_class();
        let mut event = SplitEvent {
            leaf,
            attribute: best.attribute,
            split_point: best.split_point,
            depth,
            gain: best.full_gain,
            epsilon: decision.epsilon,
            reason: decision.reason,
            outcome: SplitOutcome::Split { left: 0, right: 0 },
        };

        let cause = if depth + 1 > self.config.max_depth {
            Some(FreezeCause::DepthLimit)
        } else if self.leaf_count >= self.config.max_leaves {
            Some(FreezeCause::LeafLimit)
        } else if self.pool.free_count() < 2 {
            Some(FreezeCause::PoolExhausted)
        } else {
            None
        };
        if let Some(cause) = cause {
            let counts = self.pool.get(element).class_counts().to_vec();
            self.counters.saturations += self.pool.get(element).saturations();
            self.pool.release(element);
            self.nodes[leaf] = Node::Leaf {
                slot: LeafSlot::Frozen(counts),
                cached_majority: majority,
                depth,
            };
            self.counters.frozen_leaves += 1;
            event.outcome = SplitOutcome::Frozen(cause);
            return event;
        }

        self.counters.saturations += self.pool.get(element).saturations();
        self.pool.release(element);
        let left = self.nodes.len();
        let right = left + 1;
        for id in [left, right] {
            let e = self
                .pool
                .allocate(&self.layout, id, majority)
                .expect("free elements were checked");
            self.nodes.push(Node::Leaf {
                slot: LeafSlot::Active(e),
                cached_majority: majority,
                depth: depth + 1,
            });
        }
        self.nodes[leaf] = Node::Internal {
            attribute: best.attribute,
            test: best.split_point,
            left,
            right,
            depth,
        };
        self.leaf_count += 1;
        self.max_depth_seen = self.max_depth_seen.max(depth + 1);
        self.counters.splits += 1;
        event.outcome = SplitOutcome::Split { left, right };
        event
    }

    /// Verifies the structural and pool invariants, describing the first
    /// violation found.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let mut leaves = 0;
        let mut active = 0;
        let mut seen = vec![false; self.pool.capacity];
        let mut stack = vec![(0usize, 0u32)];
        let mut reached = vec![false; self.nodes.len()];
        while let Some((id, depth)) = stack.pop() {
            if reached[id] {
                return Err(format!("node {id} is reachable twice"));
            }
            reached[id] = true;
            let node = &self.nodes[id];
            if node.depth() != depth {
                return Err(format!("node {id} records depth {} at depth {depth}", node.depth()));
            }
            if depth > self.config.max_depth {
                return Err(format!("node {id} exceeds the depth limit"));
            }
            match node {
                Node::Internal { left, right, .. } => {
                    stack.push((*left, depth + 1));
                    stack.push((*right, depth + 1));
                }
                Node::Leaf { slot, .. } => {
                    leaves += 1;
                    if let LeafSlot::Active(e) = slot {
                        active += 1;
                        if std::mem::replace(&mut seen[*e], true) {
                            return Err(format!("element {e} is used by two leaves"));
                        }
                        if self.pool.owner[*e] != Some(id) {
                            return Err(format!("element {e} is not owned by leaf {id}"));
                        }
                        self.pool.get(*e).check().map_err(|m| format!("element {e}: {m}"))?;
                    }
                }
            }
        }
        if reached.iter().any(|r| !r) {
            return Err("unreachable nodes in the arena".into());
        }
        if leaves != self.leaf_count {
            return Err(format!("{leaves} leaves but leaf_count is {}", self.leaf_count));
        }
        if leaves > self.config.max_leaves {
            return Err(format!("{leaves} leaves exceed the limit"));
        }
        if self.pool.allocated_count() + self.pool.free_count() != self.pool.capacity {
            return Err("pool does not conserve elements".into());
        }
        if self.pool.allocated_count() != active {
            return Err(format!(
                "{} elements allocated for {active} active leaves",
                self.pool.allocated_count()
            ));
        }
        let mut free_sorted = self.pool.free.clone();
        free_sorted.sort_unstable();
        free_sorted.dedup();
        if free_sorted.len() != self.pool.free.len() || self.pool.free.iter().any(|&e| seen[e]) {
            return Err("free list overlaps allocated elements".into());
        }
        Ok(())
    }

    /// Serializes the whole model, statistics included.
    pub fn snapshot(&self) -> Vec<u8> {
        let elements = self.pool.elements.iter().map(|e| e.data().clone()).collect();
        let snap = Snapshot {
            format: SNAPSHOT_FORMAT.to_string(),
            version: SNAPSHOT_VERSION,
            schema: self.schema.clone(),
            config: self.config.clone(),
            nodes: self.nodes.clone(),
            elements,
            free: self.pool.free.clone(),
            owner: self.pool.owner.clone(),
            leaf_count: self.leaf_count,
            max_depth_seen: self.max_depth_seen,
            counters: self.counters,
        };
        serde_json::to_vec(&snap).expect("snapshot types always serialize")
    }

    /// Rebuilds a tree from [`HoeffdingTree::snapshot`] output.
    pub fn restore(bytes: &[u8]) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            format: String,
            version: u32,
        }
        let header: Header =
            serde_json::from_slice(bytes).map_err(|e| Error::Snapshot(format!("corrupt payload: {e}")))?;
        if header.format != SNAPSHOT_FORMAT {
            return Err(Error::Snapshot(format!("unknown format {:?}", header.format)));
        }
        if header.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!(
                "version {} is not supported (expected {SNAPSHOT_VERSION})",
                header.version
            )));
        }
        let snap: Snapshot =
            serde_json::from_slice(bytes).map_err(|e| Error::Snapshot(format!("corrupt payload: {e}")))?;
        snap.schema.validate()?;
        snap.config.validate()?;
        let layout = Arc::new(ElementLayout::new(&snap.schema, &snap.config));
        let capacity = snap.config.max_leaves;
        if snap.owner.len() != capacity || snap.elements.len() > capacity {
            return Err(Error::Snapshot("pool size does not match max_leaves".into()));
        }
        let elements = snap
            .elements
            .into_iter()
            .map(|d| LeafElement::from_data(Arc::clone(&layout), d))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(Error::Snapshot)?;
        let in_range = |id: usize| id < elements.len();
        for node in &snap.nodes {
            let ok = match node {
                Node::Internal { left, right, .. } => *left < snap.nodes.len() && *right < snap.nodes.len(),
                Node::Leaf { slot: LeafSlot::Active(e), .. } => in_range(*e),
                Node::Leaf { slot: LeafSlot::Frozen(c), .. } => c.len() == snap.schema.class_count,
            };
            if !ok {
                return Err(Error::Snapshot("node references out of range".into()));
            }
        }
        if snap.nodes.is_empty() || snap.free.iter().any(|&f| f >= capacity) {
            return Err(Error::Snapshot("inconsistent tree structure".into()));
        }
        let tree = HoeffdingTree {
            schema: snap.schema,
            config: snap.config,
            layout,
            nodes: snap.nodes,
            pool: ElementPool {
                capacity,
                elements,
                free: snap.free,
                owner: snap.owner,
            },
            leaf_count: snap.leaf_count,
            max_depth_seen: snap.max_depth_seen,
            counters: snap.counters,
        };
        tree.check_invariants().map_err(Error::Snapshot)?;
        Ok(tree)
    }
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    format: String,
    version: u32,
    schema: DatasetSchema,
    config: TreeConfig,
    nodes: Vec<Node>,
    elements: Vec<ElementData>,
    free: Vec<ElementId>,
    owner: Vec<Option<NodeId>>,
    leaf_count: usize,
    max_depth_seen: u32,
    counters: TreeCounters,
}
