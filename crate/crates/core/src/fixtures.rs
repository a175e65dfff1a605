//! The four-agent example problem used throughout the protocol tests, its
//! pseudo-tree, the hand-picked heuristic table and the expected per-cycle
//! variable dump of the optimal run with those heuristics.
//!
//! Agent `i` here is agent `a_{i+1}` in the usual write-up of this example.

use crate::context::{Context, ContextEntry};
use crate::cost::Cost;
use crate::heuristics::HeuristicTable;
use crate::model::{Constraint, Problem};
use crate::pseudotree::PseudoTree;

/// Four agents with domain {0, 1}; constraints a1-a2, a1-a3, a2-a3, a2-a4.
pub fn example_problem() -> Problem {
    let constraints = vec![
        Constraint::from_table(0, 1, &[&[5u32, 8], &[20, 3]]),
        Constraint::from_table(0, 2, &[&[5u32, 10], &[20, 3]]),
        Constraint::from_table(1, 2, &[&[5u32, 4], &[3, 3]]),
        Constraint::from_table(1, 3, &[&[3u32, 8], &[10, 3]]),
    ];
    Problem::with_domain_sizes(&[2, 2, 2, 2], constraints).expect("example problem is well formed")
}

/// a1 is the root, a2 its child, a3 and a4 children of a2; a1-a3 is a backedge.
pub fn example_tree(problem: &Problem) -> PseudoTree {
    PseudoTree::from_parents(problem, &example_parents()).expect("example tree is valid")
}

pub fn example_parents() -> [Option<usize>; 4] {
    [None, Some(0), Some(1), Some(1)]
}

/// h(a1,a2,·) = (3, 6), h(a2,a3,·) = (2, 2), h(a2,a4,·) = (2, 2).
pub fn example_heuristics(problem: &Problem, tree: &PseudoTree) -> HeuristicTable {
    let mut h = HeuristicTable::zero(problem, tree);
    h.set(0, 1, vec![Cost::from(3), Cost::from(6)]).expect("a2 is a child of a1");
    h.set(1, 2, vec![Cost::from(2), Cost::from(2)]).expect("a3 is a child of a2");
    h.set(1, 3, vec![Cost::from(2), Cost::from(2)]).expect("a4 is a child of a2");
    h
}

/// One agent's variables at the end of one cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectedRow {
    pub context: Context,
    pub value: usize,
    pub id: u64,
    pub threshold: Cost,
    pub lb_d: Vec<Cost>,
    pub lb: Cost,
    pub ub_d: Vec<Cost>,
    pub ub: Cost,
    /// Per tree child (in child order), per own value.
    pub child_lb: Vec<Vec<Cost>>,
    pub child_ub: Vec<Vec<Cost>>,
}

const INF: u32 = u32::MAX;

fn c(v: u32) -> Cost {
    if v == INF {
        Cost::INFINITY
    } else {
        Cost::from(v)
    }
}

fn col(rows: &[[u32; 9]], cycle: usize) -> Vec<Cost> {
    rows.iter().map(|r| c(r[cycle])).collect()
}

struct AgentRows<'a> {
    context: &'a [&'a [(usize, usize, u64); 9]],
    value: [usize; 9],
    id: [u64; 9],
    threshold: [u32; 9],
    lb_d: [[u32; 9]; 2],
    lb: [u32; 9],
    ub_d: [[u32; 9]; 2],
    ub: [u32; 9],
    child_lb: &'a [[[u32; 9]; 2]],
    child_ub: &'a [[[u32; 9]; 2]],
}

impl AgentRows<'_> {
    fn row(&self, cycle: usize) -> ExpectedRow {
        ExpectedRow {
            context: self.context.iter().map(|per| {
                let (a, d, id) = per[cycle];
                ContextEntry::new(a, d, id)
            }).collect(),
            value: self.value[cycle],
            id: self.id[cycle],
            threshold: c(self.threshold[cycle]),
            lb_d: col(&self.lb_d, cycle),
            lb: c(self.lb[cycle]),
            ub_d: col(&self.ub_d, cycle),
            ub: c(self.ub[cycle]),
            child_lb: self.child_lb.iter().map(|rows| col(rows, cycle)).collect(),
            child_ub: self.child_ub.iter().map(|rows| col(rows, cycle)).collect(),
        }
    }
}

/// Expected dump for cycles 1..=9, indexed `[cycle - 1][agent]`.
#[rustfmt::skip]
pub fn expected_example_trace() -> Vec<Vec<ExpectedRow>> {
    let a1 = AgentRows {
        context: &[],
        value: [0, 0, 0, 0, 1, 1, 1, 1, 1],
        id: [1, 1, 1, 1, 2, 2, 2, 2, 2],
        threshold: [INF; 9],
        lb_d: [[3, 9, 12, 12, 18, 18, 18, 18, 18], [6, 6, 6, 6, 6, 6, 8, 8, 12]],
        lb: [3, 6, 6, 6, 6, 6, 8, 8, 12],
        ub_d: [[INF, INF, 18, 18, 18, 18, 18, 18, 18], [INF, INF, INF, INF, INF, INF, INF, 30, 12]],
        ub: [INF, INF, 18, 18, 18, 18, 18, 18, 12],
        child_lb: &[[[3, 9, 12, 12, 18, 18, 18, 18, 18], [6, 6, 6, 6, 6, 6, 8, 8, 12]]],
        child_ub: &[[[INF, INF, 18, 18, 18, 18, 18, 18, 18], [INF, INF, INF, INF, INF, INF, INF, 30, 12]]],
    };
    let a2_ctx: [(usize, usize, u64); 9] =
        [(0, 0, 0), (0, 0, 1), (0, 0, 1), (0, 0, 1), (0, 0, 1), (0, 1, 2), (0, 1, 2), (0, 1, 2), (0, 1, 2)];
    let a2 = AgentRows {
        context: &[&a2_ctx],
        value: [0, 1, 1, 0, 0, 1, 1, 1, 1],
        id: [1, 2, 2, 3, 3, 4, 4, 4, 4],
        threshold: [INF, INF, INF, 18, 18, 18, 18, 18, 18],
        lb_d: [[9, 18, 18, 18, 18, 25, 30, 30, 30], [12, 12, 12, 19, 19, 8, 8, 12, 12]],
        lb: [9, 12, 12, 18, 18, 8, 8, 12, 12],
        ub_d: [[INF, 18, 18, 18, 18, INF, 30, 30, 30], [INF, INF, INF, 19, 19, INF, INF, 12, 12]],
        ub: [INF, 18, 18, 18, 18, INF, 30, 12, 12],
        child_lb: &[
            [[2, 10, 10, 10, 10, 2, 7, 7, 7], [2, 2, 2, 8, 8, 2, 2, 6, 6]],
            [[2, 3, 3, 3, 3, 3, 3, 3, 3], [2, 2, 2, 3, 3, 3, 3, 3, 3]],
        ],
        child_ub: &[
            [[INF, 10, 10, 10, 10, INF, 7, 7, 7], [INF, INF, INF, 8, 8, INF, INF, 6, 6]],
            [[INF, 3, 3, 3, 3, 3, 3, 3, 3], [INF, INF, INF, 3, 3, 3, 3, 3, 3]],
        ],
    };
    let a3_ctx_a2: [(usize, usize, u64); 9] =
        [(1, 0, 0), (1, 0, 1), (1, 1, 2), (1, 1, 2), (1, 0, 3), (1, 0, 3), (1, 1, 4), (1, 1, 4), (1, 1, 4)];
    let a3 = AgentRows {
        context: &[&a2_ctx, &a3_ctx_a2],
        value: [0, 0, 0, 0, 0, 1, 1, 1, 1],
        id: [1, 1, 2, 2, 3, 4, 5, 5, 5],
        threshold: [INF, INF, 8, 8, 10, 10, 12, 12, 6],
        lb_d: [[10, 10, 8, 8, 10, 25, 23, 23, 23], [14, 14, 13, 13, 14, 7, 6, 6, 6]],
        lb: [10, 10, 8, 8, 10, 7, 6, 6, 6],
        ub_d: [[10, 10, 8, 8, 10, 25, 23, 23, 23], [14, 14, 13, 13, 14, 7, 6, 6, 6]],
        ub: [10, 10, 8, 8, 10, 7, 6, 6, 6],
        child_lb: &[],
        child_ub: &[],
    };
    let a4 = AgentRows {
        context: &[&a3_ctx_a2],
        value: [0, 0, 1, 1, 0, 0, 1, 1, 1],
        id: [1, 1, 2, 2, 3, 3, 4, 4, 4],
        threshold: [INF, INF, 8, 8, 3, 3, 13, 13, 3],
        lb_d: [[3, 3, 10, 10, 3, 3, 10, 10, 10], [8, 8, 3, 3, 8, 8, 3, 3, 3]],
        lb: [3; 9],
        ub_d: [[3, 3, 10, 10, 3, 3, 10, 10, 10], [8, 8, 3, 3, 8, 8, 3, 3, 3]],
        ub: [3; 9],
        child_lb: &[],
        child_ub: &[],
    };
    (0..9).map(|cycle| vec![a1.row(cycle), a2.row(cycle), a3.row(cycle), a4.row(cycle)]).collect()
}
