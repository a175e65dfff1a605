//! Random problem generators: graph coloring, sensor networks on a grid and
//! hierarchical meeting scheduling. Every generator is a pure function of its
//! parameters and seed.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cost::Cost;
use crate::error::{Error, Result};
use crate::model::{Constraint, Problem, INFEASIBLE};

/// Time slots for sensor and meeting problems; index `SLOTS` is "not tracked"
/// or "not scheduled".
pub const SLOTS: usize = 8;
pub const UNASSIGNED_COST: u32 = 100;
pub const OTHER_COST_MAX: u32 = 100;
pub const COLORS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GenSpec {
    GraphColoring { n: usize, density: f64, cost_max: u32 },
    SensorNetwork { targets: usize },
    MeetingScheduling { units: usize },
}

pub fn generate(spec: GenSpec, seed: u64) -> Result<Problem> {
    match spec {
        GenSpec::GraphColoring { n, density, cost_max } => graph_coloring(n, density, cost_max, seed),
        GenSpec::SensorNetwork { targets } => sensor_network(targets, seed),
        GenSpec::MeetingScheduling { units } => meeting_scheduling(units, seed),
    }
}

/// `density · n` edges over `n` agents with three colors each. A random
/// spanning tree comes first so the graph is connected; the remaining edges
/// are drawn uniformly from the unused pairs. Every cell is uniform in
/// `0..=cost_max`.
pub fn graph_coloring(n: usize, density: f64, cost_max: u32, seed: u64) -> Result<Problem> {
    let target = density * n as f64;
    let m = target.round();
    if !density.is_finite() || density < 0.0 || (target - m).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!("density {density} times {n} agents is not a whole number of edges")));
    }
    let m = m as usize;
    let max_edges = n * n.saturating_sub(1) / 2;
    if n == 0 || m > max_edges || m + 1 < n {
        return Err(Error::InvalidParameter(format!(
            "{m} edges cannot form a connected simple graph on {n} agents (need {}..={max_edges})",
            n.saturating_sub(1)
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut edges = BTreeSet::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        edges.insert(ordered(order[i], order[j]));
    }
    let mut free: Vec<(usize, usize)> =
        (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).filter(|e| !edges.contains(e)).collect();
    free.shuffle(&mut rng);
    edges.extend(free.into_iter().take(m - edges.len()));
    let constraints = edges
        .into_iter()
        .map(|(a, b)| {
            let costs = (0..COLORS)
                .map(|_| (0..COLORS).map(|_| Cost::from(rng.gen_range(0..=cost_max))).collect())
                .collect();
            Constraint::new(a, b, costs)
        })
        .collect();
    Problem::with_domain_sizes(&vec![COLORS; n], constraints)
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Targets on a grid with ⌈√k⌉ columns, filled row by row; grid neighbors
/// (4-neighborhood) are constrained.
pub fn sensor_network(targets: usize, seed: u64) -> Result<Problem> {
    if targets == 0 {
        return Err(Error::InvalidParameter("need at least one target".into()));
    }
    let edges = grid_edges(targets);
    slot_problem(targets, &edges, seed)
}

pub fn grid_edges(k: usize) -> Vec<(usize, usize)> {
    let cols = (1..).find(|c| c * c >= k).expect("some square is large enough");
    let mut edges = Vec::new();
    for i in 0..k {
        if (i + 1) % cols != 0 && i + 1 < k {
            edges.push((i, i + 1));
        }
        if i + cols < k {
            edges.push((i, i + cols));
        }
    }
    edges
}

/// Participants of every meeting, five per unit. Person 1 supervises 2, 3, 4;
/// each later unit is headed by the next subordinate in breadth-first order
/// and gets three fresh subordinates.
pub fn meeting_participants(units: usize) -> Vec<Vec<usize>> {
    let mut meetings = Vec::with_capacity(5 * units);
    let mut supervisors = std::collections::VecDeque::from([1usize]);
    let mut next_person = 2;
    for _ in 0..units {
        let s = supervisors.pop_front().expect("a subordinate is always queued");
        let (x, y, z) = (next_person, next_person + 1, next_person + 2);
        next_person += 3;
        supervisors.extend([x, y, z]);
        meetings.extend([vec![s, x, y, z], vec![s, x], vec![s, z], vec![x, y], vec![y, z]]);
    }
    meetings
}

/// Five meetings per unit; meetings sharing a participant are constrained.
pub fn meeting_scheduling(units: usize, seed: u64) -> Result<Problem> {
    if units == 0 {
        return Err(Error::InvalidParameter("need at least one unit".into()));
    }
    let meetings = meeting_participants(units);
    let mut edges = Vec::new();
    for i in 0..meetings.len() {
        for j in i + 1..meetings.len() {
            if meetings[i].iter().any(|p| meetings[j].contains(p)) {
                edges.push((i, j));
            }
        }
    }
    slot_problem(meetings.len(), &edges, seed)
}

/// Shared shape of the sensor and meeting problems: 8 slots plus one
/// unassigned value, 1,000,000 for equal slots, 100 for being unassigned,
/// everything else uniform in 0..=100.
fn slot_problem(n: usize, edges: &[(usize, usize)], seed: u64) -> Result<Problem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dom = SLOTS + 1;
    let binary: Vec<Constraint> = edges
        .iter()
        .map(|&(a, b)| {
            let costs = (0..dom)
                .map(|x| {
                    (0..dom)
                        .map(|y| {
                            let c = rng.gen_range(0..=OTHER_COST_MAX);
                            Cost::from(if x == y && x < SLOTS { INFEASIBLE } else { c })
                        })
                        .collect()
                })
                .collect();
            Constraint::new(a, b, costs)
        })
        .collect();
    let mut unary = vec![vec![Cost::ZERO; dom]; n];
    for u in &mut unary {
        u[SLOTS] = Cost::from(UNASSIGNED_COST);
    }
    let constraints = fold_unary(binary, &unary);
    Problem::with_domain_sizes(&vec![dom; n], constraints)
}

/// Moves each agent's unary costs into one of its constraints: the one to
/// its lowest-index neighbor. The cost of every complete assignment grows by
/// exactly the agent's unary cost. Agents without constraints lose theirs.
pub fn fold_unary(mut constraints: Vec<Constraint>, unary: &[Vec<Cost>]) -> Vec<Constraint> {
    for (agent, costs) in unary.iter().enumerate() {
        let Some(k) = constraints
            .iter()
            .enumerate()
            .filter(|(_, c)| c.a == agent || c.b == agent)
            .min_by_key(|(_, c)| c.other(agent))
            .map(|(k, _)| k)
        else {
            continue;
        };
        let c = &mut constraints[k];
        for (x, row) in c.costs.iter_mut().enumerate() {
            for (y, cell) in row.iter_mut().enumerate() {
                *cell += if c.a == agent { costs[x] } else { costs[y] };
            }
        }
    }
    constraints
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Assignment;
    use crate::pseudotree::PseudoTree;

    #[test]
    fn coloring_edge_count_follows_density() {
        let p = graph_coloring(10, 2.0, 10000, 7).unwrap();
        assert_eq!(p.constraints().len(), 20);
        assert!((0..10).all(|a| p.domain_size(a) == 3));
        assert!(PseudoTree::build(&p).is_ok());
    }

    #[test]
    fn coloring_is_deterministic_per_seed() {
        let a = graph_coloring(5, 2.0, 10000, 3).unwrap();
        let b = graph_coloring(5, 2.0, 10000, 3).unwrap();
        let c = graph_coloring(5, 2.0, 10000, 4).unwrap();
        assert_eq!(a.constraints(), b.constraints());
        assert_ne!(a.constraints(), c.constraints());
    }

    #[test]
    fn coloring_rejects_infeasible_densities() {
        assert!(graph_coloring(4, 2.0, 10, 0).is_err()); // 8 > 6 pairs
        assert!(graph_coloring(5, 0.5, 10, 0).is_err()); // 2.5 edges
        assert!(graph_coloring(6, 0.5, 10, 0).is_err()); // 3 edges cannot connect 6
    }

    #[test]
    fn four_targets_make_a_square() {
        assert_eq!(grid_edges(4), vec![(0, 1), (0, 2), (1, 3), (2, 3)]);
        let p = sensor_network(4, 1).unwrap();
        assert_eq!(p.num_agents(), 4);
        assert_eq!(p.constraints().len(), 4);
        assert_eq!(p.domain_size(0), 9);
    }

    #[test]
    fn grid_for_five_targets_has_a_ragged_last_row() {
        // 3 columns: 0 1 2 / 3 4
        assert_eq!(grid_edges(5), vec![(0, 1), (0, 3), (1, 2), (1, 4), (3, 4)]);
    }

    #[test]
    fn equal_slots_on_adjacent_targets_cost_the_sentinel() {
        let p = sensor_network(4, 9).unwrap();
        let mut checks = 0;
        // unary lifts only touch the unassigned row and column
        let c = p.constraint_cost(0, 1, 5, 5, &mut checks).unwrap();
        assert_eq!(c, Cost::from(INFEASIBLE));
    }

    #[test]
    fn unit_two_matches_the_hierarchy() {
        let m = meeting_participants(4);
        assert_eq!(m.len(), 20);
        assert_eq!(&m[5..10], &[vec![2, 5, 6, 7], vec![2, 5], vec![2, 7], vec![5, 6], vec![6, 7]]);
        assert_eq!(meeting_scheduling(1, 1).unwrap().num_agents(), 5);
        assert!(PseudoTree::build(&meeting_scheduling(4, 1).unwrap()).is_ok());
    }

    #[test]
    fn folding_adds_exactly_the_unary_cost() {
        let c = vec![
            Constraint::from_table(0, 1, &[&[1u32, 2], &[3, 4]]),
            Constraint::from_table(1, 2, &[&[5u32, 6], &[7, 8]]),
        ];
        let raw = Problem::with_domain_sizes(&[2, 2, 2], c.clone()).unwrap();
        let unary = vec![
            vec![Cost::ZERO, Cost::from(100)],
            vec![Cost::from(10), Cost::ZERO],
            vec![Cost::from(1), Cost::from(2)],
        ];
        let folded = Problem::with_domain_sizes(&[2, 2, 2], fold_unary(c, &unary)).unwrap();
        for x in 0..8usize {
            let asg = Assignment(vec![x >> 2 & 1, x >> 1 & 1, x & 1]);
            let extra: Cost = asg.values().iter().enumerate().map(|(a, &d)| unary[a][d]).sum();
            assert_eq!(folded.solution_cost(&asg).unwrap(), raw.solution_cost(&asg).unwrap() + extra);
        }
    }

    #[test]
    fn untracked_target_adds_one_hundred() {
        let p = sensor_network(2, 5).unwrap();
        let mut checks = 0;
        // lift sits on the only constraint; compare untracked vs a tracked
        // value whose raw cell we can read back by subtracting
        let c = &p.constraints()[0];
        let both_free = c.costs[SLOTS][SLOTS].value();
        assert!((200.0..=300.0).contains(&both_free));
        let one_free = p.constraint_cost(0, 1, SLOTS, 0, &mut checks).unwrap().value();
        assert!((100.0..=200.0).contains(&one_free));
    }
}
