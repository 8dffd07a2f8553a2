//! Synthetic styling and layout traversals.
//!
//! Styling is a single parallel top-down pass: a node's style value is a
//! function of its parent's. Layout is a top-down width pass followed by a
//! bottom-up height pass in which a parent is finalized by whichever worker
//! completes its last child.
//!
//! Tasks are whole subtrees. A task processes its node, pushes all children
//! but the first as new tasks and continues with the first child itself.

use std::sync::atomic::{AtomicU32, AtomicU64, AtomicUsize, Ordering};
use std::time::Instant;

use super::pool::{self, PoolStats};
use super::{PassKind, TrialResult};
use crate::dom::{DomTree, NodeId};

const ROOT_SEED: u64 = 0x5eed_cafe_f00d_d00d;
const NODE_MIX: u64 = 0x9e37_79b9_7f4a_7c15;

/// Fixed-iteration integer mixer standing in for per-node styling/layout
/// cost. Heavier-attributed nodes run proportionally more rounds.
#[inline]
pub fn work_kernel(seed: u64, work_units: u32, attribute_count: u32) -> u64 {
    let rounds = work_units as u64 * (1 + attribute_count as u64);
    let mut x = seed;
    for _ in 0..rounds {
        x ^= x >> 33;
        x = x.wrapping_mul(0xff51_afd7_ed55_8ccd);
        x ^= x >> 29;
        x = x.wrapping_add(NODE_MIX);
    }
    std::hint::black_box(x)
}

#[inline]
fn node_seed(inherited: u64, id: NodeId) -> u64 {
    inherited ^ (id as u64).wrapping_mul(NODE_MIX)
}

/// Intrinsic height added to the sum of the children's heights:
/// `base + kernel(width) % spread`, or just `base` when `spread` is 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeightRule {
    pub base: u64,
    pub spread: u64,
}

impl Default for HeightRule {
    fn default() -> Self {
        HeightRule { base: 1, spread: 16 }
    }
}

impl HeightRule {
    /// Leaves are 1 tall and a parent is its children plus one.
    pub const UNIT: HeightRule = HeightRule { base: 1, spread: 0 };

    fn intrinsic(&self, mixed: u64) -> u64 {
        if self.spread == 0 {
            self.base
        } else {
            self.base + mixed % self.spread
        }
    }
}

/// Per-node visit stamps for ordering checks. Each phase of a pass gets its
/// own stamp column; stamps come from one global counter, so `a < b` means
/// node `a` was processed before node `b` started its visit.
pub struct VisitLog {
    phases: Vec<Vec<AtomicU64>>,
    clock: AtomicU64,
    repeats: AtomicUsize,
}

impl VisitLog {
    pub fn new(node_count: usize, phases: usize) -> Self {
        VisitLog {
            phases: (0..phases)
                .map(|_| (0..node_count).map(|_| AtomicU64::new(0)).collect())
                .collect(),
            clock: AtomicU64::new(0),
            repeats: AtomicUsize::new(0),
        }
    }

    fn record(&self, phase: usize, id: NodeId) {
        let stamp = self.clock.fetch_add(1, Ordering::SeqCst) + 1;
        if self.phases[phase][id].swap(stamp, Ordering::SeqCst) != 0 {
            self.repeats.fetch_add(1, Ordering::SeqCst);
        }
    }

    fn stamp(&self, phase: usize, id: NodeId) -> u64 {
        self.phases[phase][id].load(Ordering::SeqCst)
    }

    pub fn visit_count(&self, phase: usize) -> usize {
        self.phases[phase]
            .iter()
            .filter(|s| s.load(Ordering::SeqCst) != 0)
            .count()
    }

    /// Number of visits to a node that had already been visited in the same phase.
    pub fn repeated_visits(&self) -> usize {
        self.repeats.load(Ordering::SeqCst)
    }

    /// Every node was stamped after its parent.
    pub fn check_top_down(&self, tree: &DomTree, phase: usize) -> Result<(), String> {
        for (id, node) in tree.nodes().iter().enumerate() {
            let s = self.stamp(phase, id);
            if s == 0 {
                return Err(format!("node {id} never visited"));
            }
            if let Some(p) = node.parent {
                if self.stamp(phase, p) >= s {
                    return Err(format!("node {id} visited before its parent {p}"));
                }
            }
        }
        Ok(())
    }

    /// Every node was stamped after all of its children.
    pub fn check_bottom_up(&self, tree: &DomTree, phase: usize) -> Result<(), String> {
        for (id, node) in tree.nodes().iter().enumerate() {
            let s = self.stamp(phase, id);
            if s == 0 {
                return Err(format!("node {id} never visited"));
            }
            if let Some(&c) = node.children.iter().find(|&&c| self.stamp(phase, c) >= s) {
                return Err(format!("node {id} finalized before its child {c}"));
            }
        }
        Ok(())
    }
}

#[derive(Default)]
struct Local {
    sum: u64,
    visits: u64,
}

fn busy_ms(stats: &PoolStats) -> Vec<f64> {
    stats.busy.iter().map(|d| d.as_secs_f64() * 1e3).collect()
}

fn merge_busy(into: &mut [f64], more: &[f64]) {
    for (a, b) in into.iter_mut().zip(more) {
        *a += b;
    }
}

/// Top-down pass: each task carries `(node, parent value)`.
fn top_down(
    tree: &DomTree,
    threads: usize,
    work_units: u32,
    slots: &[AtomicU64],
    log: Option<(&VisitLog, usize)>,
) -> (Local, PoolStats) {
    let nodes = tree.nodes();
    let (locals, stats) = pool::run(
        threads,
        vec![(DomTree::ROOT, ROOT_SEED)],
        |_| Local::default(),
        |(mut id, mut inherited), local, sp| loop {
            let node = &nodes[id];
            let value = work_kernel(node_seed(inherited, id), work_units, node.attribute_count);
            slots[id].store(value, Ordering::Relaxed);
            if let Some((log, phase)) = log {
                log.record(phase, id);
            }
            local.sum = local.sum.wrapping_add(value);
            local.visits += 1;
            match node.children.split_first() {
                None => break,
                Some((&first, rest)) => {
                    for &c in rest.iter().rev() {
                        sp.spawn((c, value));
                    }
                    id = first;
                    inherited = value;
                }
            }
        },
    );
    let total = locals.into_iter().fold(Local::default(), |acc, l| Local {
        sum: acc.sum.wrapping_add(l.sum),
        visits: acc.visits + l.visits,
    });
    (total, stats)
}

fn run_styling(
    tree: &DomTree,
    threads: usize,
    work_units: u32,
    log: Option<&VisitLog>,
) -> TrialResult {
    let slots: Vec<AtomicU64> = (0..tree.node_count()).map(|_| AtomicU64::new(0)).collect();
    let start = Instant::now();
    let (total, stats) = top_down(tree, threads, work_units, &slots, log.map(|l| (l, 0)));
    let elapsed = start.elapsed();
    TrialResult {
        page_id: String::new(),
        pass_kind: PassKind::Styling,
        threads,
        trial: 0,
        elapsed_ms: elapsed.as_secs_f64() * 1e3,
        checksum: total.sum,
        per_worker_busy_ms: busy_ms(&stats),
        visits: total.visits,
    }
}

fn run_layout(
    tree: &DomTree,
    threads: usize,
    work_units: u32,
    rule: HeightRule,
    log: Option<&VisitLog>,
) -> TrialResult {
    let nodes = tree.nodes();
    let n = tree.node_count();
    let widths: Vec<AtomicU64> = (0..n).map(|_| AtomicU64::new(0)).collect();
    let heights: Vec<AtomicU64> = (0..n).map(|_| AtomicU64::new(0)).collect();
    let remaining: Vec<AtomicU32> = nodes
        .iter()
        .map(|node| AtomicU32::new(node.children.len() as u32))
        .collect();

    let start = Instant::now();

    let (_, down_stats) = top_down(tree, threads, work_units, &widths, log.map(|l| (l, 0)));

    let finalize = |id: NodeId| -> u64 {
        let node = &nodes[id];
        let width = widths[id].load(Ordering::Relaxed);
        let mixed = work_kernel(width, work_units, node.attribute_count);
        let children: u64 = node
            .children
            .iter()
            .fold(0u64, |acc, &c| acc.wrapping_add(heights[c].load(Ordering::Relaxed)));
        let h = children.wrapping_add(rule.intrinsic(mixed));
        heights[id].store(h, Ordering::Relaxed);
        if let Some(log) = log {
            log.record(1, id);
        }
        h
    };

    // Bottom-up: descend to the leaves, then climb while this worker is the
    // last to finish a parent's children.
    let (locals, up_stats) = pool::run(
        threads,
        vec![DomTree::ROOT],
        |_| 0u64,
        |mut id: NodeId, finalized, sp| loop {
            match nodes[id].children.split_first() {
                Some((&first, rest)) => {
                    for &c in rest.iter().rev() {
                        sp.spawn(c);
                    }
                    id = first;
                }
                None => {
                    let mut cur = id;
                    loop {
                        finalize(cur);
                        *finalized += 1;
                        let Some(parent) = nodes[cur].parent else { break };
                        // AcqRel: the last child observes every sibling's height.
                        if remaining[parent].fetch_sub(1, Ordering::AcqRel) != 1 {
                            break;
                        }
                        cur = parent;
                    }
                    break;
                }
            }
        },
    );

    let elapsed = start.elapsed();
    let mut busy = busy_ms(&down_stats);
    merge_busy(&mut busy, &busy_ms(&up_stats));

    TrialResult {
        page_id: String::new(),
        pass_kind: PassKind::Layout,
        threads,
        trial: 0,
        elapsed_ms: elapsed.as_secs_f64() * 1e3,
        checksum: heights[DomTree::ROOT].load(Ordering::Acquire),
        per_worker_busy_ms: busy,
        visits: locals.iter().sum(),
    }
}

/// Parallel top-down styling traversal on `threads` workers.
pub fn styling_pass(tree: &DomTree, threads: usize, work_units: u32) -> TrialResult {
    run_styling(tree, threads, work_units, None)
}

/// Styling with every visit stamped into `log` (phase 0).
pub fn styling_pass_traced(
    tree: &DomTree,
    threads: usize,
    work_units: u32,
    log: &VisitLog,
) -> TrialResult {
    run_styling(tree, threads, work_units, Some(log))
}

/// Top-down width pass then bottom-up height pass; the checksum is the root's height.
pub fn layout_pass(tree: &DomTree, threads: usize, work_units: u32) -> TrialResult {
    run_layout(tree, threads, work_units, HeightRule::default(), None)
}

pub fn layout_pass_with(
    tree: &DomTree,
    threads: usize,
    work_units: u32,
    rule: HeightRule,
) -> TrialResult {
    run_layout(tree, threads, work_units, rule, None)
}

/// Layout with top-down visits stamped as phase 0 and bottom-up visits as phase 1.
pub fn layout_pass_traced(
    tree: &DomTree,
    threads: usize,
    work_units: u32,
    rule: HeightRule,
    log: &VisitLog,
) -> TrialResult {
    run_layout(tree, threads, work_units, rule, Some(log))
}

/// Sequential reference for the styling checksum; a plain forward scan
/// (parents precede children in the arena).
pub fn styling_checksum_sequential(tree: &DomTree, work_units: u32) -> u64 {
    let nodes = tree.nodes();
    let mut values = vec![0u64; nodes.len()];
    let mut sum = 0u64;
    for (id, node) in nodes.iter().enumerate() {
        let inherited = node.parent.map_or(ROOT_SEED, |p| values[p]);
        values[id] = work_kernel(node_seed(inherited, id), work_units, node.attribute_count);
        sum = sum.wrapping_add(values[id]);
    }
    sum
}
