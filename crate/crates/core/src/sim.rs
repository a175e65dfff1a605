//! Deterministic cycle-based executor for a population of agents.
//!
//! Cycle 1 runs `start` for every agent. In each later cycle every running
//! agent with deliverable messages drains them (VALUE first, then COST, then
//! TERMINATE, each in arrival order) and backtracks. A message sent in cycle
//! `k` is deliverable from cycle `k + 1 + delay`; the synchronous transport
//! uses delay 0.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agent::{AgentEnv, AgentState, Message, Variant};
use crate::context::Context;
use crate::cost::Cost;
use crate::error::{Error, Result};
use crate::heuristics::HeuristicTable;
use crate::model::{Assignment, Problem};
use crate::pseudotree::PseudoTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transport {
    Synchronous,
    /// Extra delay drawn uniformly from `0..=max_delay` cycles per message.
    RandomDelay { max_delay: u64, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransportConfig {
    pub mode: Transport,
    /// NCCC charge per message.
    pub nccc_t: u64,
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig { mode: Transport::Synchronous, nccc_t: 0 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BacktrackMode {
    /// One backtrack after the whole inbox is drained.
    #[default]
    PerCycle,
    /// One backtrack after every message.
    PerMessage,
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub variant: Variant,
    pub transport: TransportConfig,
    pub backtrack: BacktrackMode,
    pub cycle_cap: u64,
    pub capture_trace: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            variant: Variant::Optimal,
            transport: TransportConfig::default(),
            backtrack: BacktrackMode::PerCycle,
            cycle_cap: 1_000_000,
            capture_trace: false,
        }
    }
}

impl SimConfig {
    pub fn new(variant: Variant) -> Self {
        SimConfig { variant, ..SimConfig::default() }
    }
}

/// Metrics at the point a run was abandoned.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialMetrics {
    pub cycles: u64,
    pub nccc: u64,
    pub messages: u64,
    pub root_lb: Cost,
    pub root_ub: Cost,
}

/// One agent's variables at the end of one cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub cycle: u64,
    pub agent: usize,
    pub context: Context,
    pub value: usize,
    pub id: u64,
    pub threshold: Cost,
    pub lb_d: Vec<Cost>,
    pub ub_d: Vec<Cost>,
    pub lb: Cost,
    pub ub: Cost,
    pub child_lb: Vec<Vec<Cost>>,
    pub child_ub: Vec<Vec<Cost>>,
}

impl TraceRow {
    fn capture(cycle: u64, state: &AgentState) -> Self {
        TraceRow {
            cycle,
            agent: state.agent(),
            context: state.context().clone(),
            value: state.value(),
            id: state.id(),
            threshold: state.threshold(),
            lb_d: state.lb_d().to_vec(),
            ub_d: state.ub_d().to_vec(),
            lb: state.lb(),
            ub: state.ub(),
            child_lb: state.child_lb().to_vec(),
            child_ub: state.child_ub().to_vec(),
        }
    }

    pub const HEADER: &'static str = "cycle\tagent\tcontext\tvalue\tid\tth\tLBd\tUBd\tLB\tUB\tlb\tub";
}

fn join(costs: &[Cost]) -> String {
    costs.iter().map(Cost::to_string).collect::<Vec<_>>().join(",")
}

fn join_children(rows: &[Vec<Cost>]) -> String {
    if rows.is_empty() {
        return "-".into();
    }
    rows.iter().map(|r| join(r)).collect::<Vec<_>>().join(";")
}

impl fmt::Display for TraceRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.cycle,
            self.agent,
            self.context,
            self.value,
            self.id,
            self.threshold,
            join(&self.lb_d),
            join(&self.ub_d),
            self.lb,
            self.ub,
            join_children(&self.child_lb),
            join_children(&self.child_ub),
        )
    }
}

/// Renders a trace as TSV with a header line.
pub fn trace_tsv(rows: &[TraceRow]) -> String {
    let mut out = String::from(TraceRow::HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{r}");
    }
    out
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    /// Root UB at termination.
    pub final_cost: Cost,
    pub root_lb: Cost,
    /// Cheaper of the root's witness and the best snapshot; ties keep the
    /// witness.
    pub best_assignment: Assignment,
    pub best_cost: Cost,
    /// Assignment reported by the root's COST witnesses; its cost is the
    /// root UB.
    pub root_witness: Option<Assignment>,
    /// Cheapest joint assignment of current values seen at any cycle
    /// boundary.
    pub best_snapshot: Assignment,
    pub best_snapshot_cost: Cost,
    /// Cycle in which the root terminated.
    pub cycles: u64,
    /// Cycle in which the last agent terminated.
    pub halt_cycle: u64,
    pub nccc: u64,
    pub messages: u64,
    pub trace: Vec<TraceRow>,
}

struct InFlight {
    arrival: u64,
    seq: u64,
    from: usize,
    sender_nccc: u64,
    message: Message,
}

struct Transit {
    config: TransportConfig,
    rng: Option<ChaCha8Rng>,
    inboxes: Vec<Vec<InFlight>>,
    last_arrival: HashMap<(usize, usize), u64>,
    seq: u64,
}

impl Transit {
    fn new(config: TransportConfig, n: usize) -> Self {
        let rng = match config.mode {
            Transport::Synchronous => None,
            Transport::RandomDelay { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
        };
        Transit { config, rng, inboxes: (0..n).map(|_| Vec::new()).collect(), last_arrival: HashMap::new(), seq: 0 }
    }

    fn send(&mut self, cycle: u64, from: usize, to: usize, sender_nccc: u64, message: Message) {
        let delay = match (self.config.mode, self.rng.as_mut()) {
            (Transport::RandomDelay { max_delay, .. }, Some(rng)) => rng.gen_range(0..=max_delay),
            _ => 0,
        };
        let last = self.last_arrival.entry((from, to)).or_insert(0);
        let arrival = (cycle + 1 + delay).max(*last);
        *last = arrival;
        self.inboxes[to].push(InFlight { arrival, seq: self.seq, from, sender_nccc, message });
        self.seq += 1;
    }

    /// Messages deliverable to `agent` in `cycle`, in processing order.
    fn take(&mut self, agent: usize, cycle: u64) -> Vec<InFlight> {
        let inbox = &mut self.inboxes[agent];
        let (mut ready, rest): (Vec<_>, Vec<_>) = inbox.drain(..).partition(|m| m.arrival <= cycle);
        *inbox = rest;
        ready.sort_by_key(|m| (m.message.kind_rank(), m.arrival, m.seq));
        ready
    }

    fn is_empty(&self) -> bool {
        self.inboxes.iter().all(Vec::is_empty)
    }
}

/// Runs to termination.
pub fn run(problem: &Problem, tree: &PseudoTree, heuristics: &HeuristicTable, config: &SimConfig) -> Result<RunOutcome> {
    run_observed(problem, tree, heuristics, config, |_, _| {})
}

/// Like [`run`], calling `observer(cycle, state)` after every backtrack
/// (including the one inside `start`).
pub fn run_observed(
    problem: &Problem,
    tree: &PseudoTree,
    heuristics: &HeuristicTable,
    config: &SimConfig,
    mut observer: impl FnMut(u64, &AgentState),
) -> Result<RunOutcome> {
    config.variant.validate()?;
    if config.cycle_cap == 0 {
        return Err(Error::InvalidParameter("cycle cap must be positive".into()));
    }
    let env = AgentEnv::new(problem, tree, heuristics);
    let n = problem.num_agents();
    let root = tree.root();
    let mut agents: Vec<AgentState> = (0..n).map(|a| AgentState::new(a, config.variant, &env)).collect();
    let mut transit = Transit::new(config.transport, n);
    let mut messages = 0u64;
    let mut trace = Vec::new();
    let mut best: Option<(Cost, Assignment)> = None;
    let mut root_cycle = None;

    let snapshot = |agents: &[AgentState], best: &mut Option<(Cost, Assignment)>| -> Result<()> {
        let asg = Assignment(agents.iter().map(AgentState::value).collect());
        let cost = problem.solution_cost(&asg)?;
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            *best = Some((cost, asg));
        }
        Ok(())
    };

    let mut cycle = 1u64;
    for a in 0..n {
        let out = agents[a].start(&env)?;
        observer(cycle, &agents[a]);
        for o in out {
            messages += 1;
            transit.send(cycle, a, o.to, agents[a].nccc(), o.message);
        }
    }
    loop {
        if config.capture_trace {
            trace.extend(agents.iter().map(|s| TraceRow::capture(cycle, s)));
        }
        snapshot(&agents, &mut best)?;
        if root_cycle.is_none() && agents[root].is_terminated() {
            root_cycle = Some(cycle);
        }
        if agents.iter().all(AgentState::is_terminated) {
            break;
        }
        if transit.is_empty() {
            let waiting = agents.iter().filter(|s| !s.is_terminated()).map(AgentState::agent).collect();
            return Err(Error::Stalled { cycle, waiting });
        }
        if cycle >= config.cycle_cap {
            return Err(Error::Timeout {
                cap: config.cycle_cap,
                partial: PartialMetrics {
                    cycles: cycle,
                    nccc: agents.iter().map(AgentState::nccc).max().unwrap_or(0),
                    messages,
                    root_lb: agents[root].lb(),
                    root_ub: agents[root].ub(),
                },
            });
        }
        cycle += 1;
        for a in 0..n {
            let inbox = transit.take(a, cycle);
            if agents[a].is_terminated() || inbox.is_empty() {
                continue;
            }
            let state = &mut agents[a];
            let mut out = Vec::new();
            for m in inbox {
                state.observe_receipt(m.sender_nccc, config.transport.nccc_t);
                debug_assert!(matches!(m.message, Message::Terminate) || m.from != a);
                state.receive(&env, &m.message)?;
                if config.backtrack == BacktrackMode::PerMessage && !state.is_terminated() {
                    out.extend(state.backtrack(&env));
                    observer(cycle, state);
                }
            }
            if config.backtrack == BacktrackMode::PerCycle {
                out = state.backtrack(&env);
                observer(cycle, state);
            }
            let nccc = state.nccc();
            for o in out {
                messages += 1;
                transit.send(cycle, a, o.to, nccc, o.message);
            }
        }
    }

    let (best_snapshot_cost, best_snapshot) = best.expect("at least one snapshot");
    let root_witness = agents[root]
        .solution()
        .filter(|w| w.len() == n)
        .map(|w| Assignment(w.into_iter().map(|(_, d)| d).collect()));
    let (best_cost, best_assignment) = match &root_witness {
        Some(w) => {
            let c = problem.solution_cost(w)?;
            if c <= best_snapshot_cost {
                (c, w.clone())
            } else {
                (best_snapshot_cost, best_snapshot.clone())
            }
        }
        None => (best_snapshot_cost, best_snapshot.clone()),
    };
    Ok(RunOutcome {
        final_cost: agents[root].ub(),
        root_lb: agents[root].lb(),
        best_assignment,
        best_cost,
        root_witness,
        best_snapshot,
        best_snapshot_cost,
        cycles: root_cycle.expect("root terminated"),
        halt_cycle: cycle,
        nccc: agents.iter().map(AgentState::nccc).max().unwrap_or(0),
        messages,
        trace,
    })
}

pub const CSV_HEADER: &str = "problem,algorithm,variant_param,seed,cost,cycles,nccc,messages";

/// One metrics row.
pub fn csv_row(problem: &str, variant: Variant, seed: &str, outcome: &RunOutcome) -> String {
    format!(
        "{problem},{},{},{seed},{},{},{},{}",
        variant.name(),
        variant.param().map(|p| p.to_string()).unwrap_or_default(),
        outcome.final_cost,
        outcome.cycles,
        outcome.nccc,
        outcome.messages
    )
}

/// Row of column means over several runs, with `seed` set to `mean`.
pub fn csv_mean_row(problem: &str, variant: Variant, outcomes: &[RunOutcome]) -> String {
    let k = outcomes.len().max(1) as f64;
    let mean = |f: &dyn Fn(&RunOutcome) -> f64| outcomes.iter().map(f).sum::<f64>() / k;
    format!(
        "{problem},{},{},mean,{},{},{},{}",
        variant.name(),
        variant.param().map(|p| p.to_string()).unwrap_or_default(),
        mean(&|o| o.final_cost.value()),
        mean(&|o| o.cycles as f64),
        mean(&|o| o.nccc as f64),
        mean(&|o| o.messages as f64)
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn example(heuristic: bool, config: &SimConfig) -> RunOutcome {
        let p = fixtures::example_problem();
        let t = fixtures::example_tree(&p);
        let h = if heuristic { fixtures::example_heuristics(&p, &t) } else { HeuristicTable::zero(&p, &t) };
        run(&p, &t, &h, config).unwrap()
    }

    #[test]
    fn example_run_terminates_at_cycle_nine_with_cost_twelve() {
        let out = example(true, &SimConfig::default());
        assert_eq!((out.final_cost, out.cycles), (Cost::from(12), 9));
        assert_eq!(out.best_snapshot_cost, Cost::from(12));
        assert_eq!(out.best_assignment, Assignment(vec![1, 1, 1, 1]));
        assert_eq!(out.root_witness, Some(Assignment(vec![1, 1, 1, 1])));
        // TERMINATE needs two more hops to reach the leaves
        assert_eq!(out.halt_cycle, 11);
    }

    #[test]
    fn trace_matches_expected_dump() {
        let out = example(true, &SimConfig { capture_trace: true, ..SimConfig::default() });
        let expected = fixtures::expected_example_trace();
        for (k, rows) in expected.iter().enumerate() {
            for (a, want) in rows.iter().enumerate() {
                let got = &out.trace[k * 4 + a];
                assert_eq!((got.cycle, got.agent), (k as u64 + 1, a));
                let got = fixtures::ExpectedRow {
                    context: got.context.clone(),
                    value: got.value,
                    id: got.id,
                    threshold: got.threshold,
                    lb_d: got.lb_d.clone(),
                    lb: got.lb,
                    ub_d: got.ub_d.clone(),
                    ub: got.ub,
                    child_lb: got.child_lb.clone(),
                    child_ub: got.child_ub.clone(),
                };
                assert_eq!(&got, want, "cycle {} agent {a}", k + 1);
            }
        }
    }

    #[test]
    fn trace_is_empty_unless_requested() {
        assert!(example(true, &SimConfig::default()).trace.is_empty());
    }

    #[test]
    fn nccc_t_changes_only_nccc() {
        let a = example(true, &SimConfig::default());
        let mut cfg = SimConfig::default();
        cfg.transport.nccc_t = 1000;
        let b = example(true, &cfg);
        assert_eq!((a.final_cost, a.cycles, a.messages), (b.final_cost, b.cycles, b.messages));
        assert!(b.nccc > a.nccc);
    }

    #[test]
    fn cycle_cap_reports_partial_metrics() {
        let p = fixtures::example_problem();
        let t = fixtures::example_tree(&p);
        let h = fixtures::example_heuristics(&p, &t);
        let cfg = SimConfig { cycle_cap: 4, ..SimConfig::default() };
        match run(&p, &t, &h, &cfg) {
            Err(Error::Timeout { cap: 4, partial }) => assert_eq!(partial.cycles, 4),
            other => panic!("expected timeout, got {other:?}"),
        }
    }

    #[test]
    fn csv_row_layout() {
        let out = example(true, &SimConfig::default());
        let row = csv_row("fig1", Variant::Optimal, "0", &out);
        assert!(row.starts_with("fig1,bnb-adopt,,0,12,9,"), "{row}");
        let row = csv_row("fig1", Variant::Weighted(3.0), "0", &out);
        assert!(row.starts_with("fig1,bnb-adopt-whm,3,0,"), "{row}");
    }

    #[test]
    fn per_message_mode_is_still_optimal() {
        let out = example(false, &SimConfig { backtrack: BacktrackMode::PerMessage, ..SimConfig::default() });
        assert_eq!(out.final_cost, Cost::from(12));
    }
}
