//! The per-agent BnB-ADOPT state machine.
//!
//! Each agent keeps bounds for exactly one context at a time: its current
//! view of the values of SCP(a). Handlers are deterministic transitions over
//! [`AgentState`]; every inter-agent effect is an [`Outgoing`] message that
//! the executor delivers. The executor drives the agent as
//!
//! ```text
//! start()                       // once
//! loop { on_value / on_cost / on_terminate for each queued message; backtrack() }
//! ```
//!
//! Bounds (per own value `d`, per tree child `c`):
//!
//! ```text
//! LB(d) = δ(d) + Σ_c lb(c,d)        LB = min_d LB(d)
//! UB(d) = δ(d) + Σ_c ub(c,d)        UB = min_d UB(d)
//! ```
//!
//! `lb(c,d)` starts at `w·h(a,c,d)` and `ub(c,d)` at infinity; COST messages
//! from `c` tighten them while the child's context agrees with ours.

use std::fmt;

use crate::context::{compatible, Context, ContextEntry};
use crate::cost::Cost;
use crate::error::{Error, Result};
use crate::heuristics::HeuristicTable;
use crate::model::{delta_cost, Problem};
use crate::pseudotree::PseudoTree;

/// Termination rule of the root agent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Variant {
    /// Terminate once UB ≤ LB.
    Optimal,
    /// Terminate once UB ≤ b + LB (absolute error bound `b ≥ 0`).
    Absolute(f64),
    /// Terminate once UB ≤ p · LB (relative error bound `p ≥ 1`).
    Relative(f64),
    /// Initialize child lower bounds to w · h and terminate once UB ≤ LB (`w ≥ 1`).
    Weighted(f64),
}

impl Variant {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Variant::Optimal => Ok(()),
            Variant::Absolute(b) if b.is_finite() && b >= 0.0 => Ok(()),
            Variant::Relative(p) if p.is_finite() && p >= 1.0 => Ok(()),
            Variant::Weighted(w) if w.is_finite() && w >= 1.0 => Ok(()),
            Variant::Absolute(b) => Err(Error::InvalidParameter(format!("absolute error bound b = {b} must be >= 0"))),
            Variant::Relative(p) => Err(Error::InvalidParameter(format!("relative error bound p = {p} must be >= 1"))),
            Variant::Weighted(w) => Err(Error::InvalidParameter(format!("heuristic weight w = {w} must be >= 1"))),
        }
    }

    /// Heuristic weight applied at bound initialization.
    pub fn weight(&self) -> f64 {
        match *self {
            Variant::Weighted(w) => w,
            _ => 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Optimal => "bnb-adopt",
            Variant::Absolute(_) => "bnb-adopt-aem",
            Variant::Relative(_) => "bnb-adopt-rem",
            Variant::Weighted(_) => "bnb-adopt-whm",
        }
    }

    pub fn param(&self) -> Option<f64> {
        match *self {
            Variant::Optimal => None,
            Variant::Absolute(x) | Variant::Relative(x) | Variant::Weighted(x) => Some(x),
        }
    }

    /// Worst-case cost the variant may return given the optimum.
    pub fn cost_bound(&self, optimum: Cost) -> Cost {
        match *self {
            Variant::Optimal => optimum,
            Variant::Absolute(b) => optimum + Cost::new(b),
            Variant::Relative(p) => optimum.scale(p),
            Variant::Weighted(w) => optimum.scale(w),
        }
    }
}

/// The root's termination limit for the given lower bound.
pub fn compute_limit(variant: Variant, lb: Cost) -> Cost {
    match variant {
        Variant::Optimal | Variant::Weighted(_) => lb,
        Variant::Absolute(b) => lb + Cost::new(b),
        Variant::Relative(p) => lb.scale(p),
    }
}

/// `(agent, value)` pairs for a whole subtree, sorted by agent.
pub type Witness = Vec<(usize, usize)>;

#[derive(Clone, Debug, PartialEq)]
pub enum Message {
    Value { sender: usize, value: usize, id: u64, threshold: Cost },
    /// `witness` is a subtree assignment whose cost is `ub` (empty while `ub`
    /// is infinite). It never influences the search; the canonical text form
    /// leaves it out.
    Cost { sender: usize, context: Context, lb: Cost, ub: Cost, witness: Witness },
    Terminate,
}

impl Message {
    pub fn kind_rank(&self) -> u8 {
        match self {
            Message::Value { .. } => 0,
            Message::Cost { .. } => 1,
            Message::Terminate => 2,
        }
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Message::Value { sender, value, id, threshold } => write!(f, "VALUE({sender},{value},{id},{threshold})"),
            Message::Cost { sender, context, lb, ub, .. } => write!(f, "COST({sender},{context},{lb},{ub})"),
            Message::Terminate => f.write_str("TERMINATE"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outgoing {
    pub to: usize,
    pub message: Message,
}

/// Read-only problem data every handler needs.
#[derive(Clone, Copy)]
pub struct AgentEnv<'a> {
    pub problem: &'a Problem,
    pub tree: &'a PseudoTree,
    pub heuristics: &'a HeuristicTable,
}

impl<'a> AgentEnv<'a> {
    pub fn new(problem: &'a Problem, tree: &'a PseudoTree, heuristics: &'a HeuristicTable) -> Self {
        AgentEnv { problem, tree, heuristics }
    }
}

#[derive(Clone, Debug)]
pub struct AgentState {
    agent: usize,
    variant: Variant,
    context: Context,
    id: u64,
    value: usize,
    threshold: Cost,
    /// `[child index][own value]`, children in `tree.children(agent)` order
    child_lb: Vec<Vec<Cost>>,
    child_ub: Vec<Vec<Cost>>,
    /// assignment of the child's subtree that achieves `child_ub`
    child_witness: Vec<Vec<Witness>>,
    lb_d: Vec<Cost>,
    ub_d: Vec<Cost>,
    lb: Cost,
    ub: Cost,
    /// δ(d) for the current context
    delta: Vec<Cost>,
    limit: Cost,
    terminate_received: bool,
    terminated: bool,
    nccc: u64,
    checks: u64,
    /// Bumped every time the context changes to an incompatible one.
    epoch: u64,
    epoch_start_value: usize,
}

impl AgentState {
    pub fn new(agent: usize, variant: Variant, env: &AgentEnv<'_>) -> Self {
        let dom = env.problem.domain_size(agent);
        let nc = env.tree.children(agent).len();
        AgentState {
            agent,
            variant,
            context: Context::new(),
            id: 0,
            value: env.problem.val_init(agent),
            threshold: Cost::INFINITY,
            child_lb: vec![vec![Cost::ZERO; dom]; nc],
            child_ub: vec![vec![Cost::INFINITY; dom]; nc],
            child_witness: vec![vec![Vec::new(); dom]; nc],
            lb_d: vec![Cost::ZERO; dom],
            ub_d: vec![Cost::INFINITY; dom],
            lb: Cost::ZERO,
            ub: Cost::INFINITY,
            delta: vec![Cost::ZERO; dom],
            limit: Cost::ZERO,
            terminate_received: false,
            terminated: false,
            nccc: 0,
            checks: 0,
            epoch: 0,
            epoch_start_value: env.problem.val_init(agent),
        }
    }

    pub fn agent(&self) -> usize {
        self.agent
    }
    pub fn variant(&self) -> Variant {
        self.variant
    }
    pub fn context(&self) -> &Context {
        &self.context
    }
    pub fn id(&self) -> u64 {
        self.id
    }
    pub fn value(&self) -> usize {
        self.value
    }
    pub fn threshold(&self) -> Cost {
        self.threshold
    }
    pub fn lb_d(&self) -> &[Cost] {
        &self.lb_d
    }
    pub fn ub_d(&self) -> &[Cost] {
        &self.ub_d
    }
    pub fn lb(&self) -> Cost {
        self.lb
    }
    pub fn ub(&self) -> Cost {
        self.ub
    }
    /// `[child index][value]`
    pub fn child_lb(&self) -> &[Vec<Cost>] {
        &self.child_lb
    }
    pub fn child_ub(&self) -> &[Vec<Cost>] {
        &self.child_ub
    }
    pub fn delta(&self) -> &[Cost] {
        &self.delta
    }
    pub fn limit(&self) -> Cost {
        self.limit
    }
    pub fn is_terminated(&self) -> bool {
        self.terminated
    }
    pub fn terminate_received(&self) -> bool {
        self.terminate_received
    }
    /// Causal NCCC counter.
    pub fn nccc(&self) -> u64 {
        self.nccc
    }
    /// Total constraint checks performed by this agent.
    pub fn checks(&self) -> u64 {
        self.checks
    }
    pub fn epoch(&self) -> u64 {
        self.epoch
    }
    /// Value chosen by the most recent InitSelf.
    pub fn epoch_start_value(&self) -> usize {
        self.epoch_start_value
    }

    /// Applies the NCCC receive rule for a message whose sender had counter
    /// `sender_nccc` when sending.
    pub fn observe_receipt(&mut self, sender_nccc: u64, transmission_cost: u64) {
        self.nccc = nccc_on_receive(self.nccc, sender_nccc, transmission_cost);
    }

    fn child_index(&self, env: &AgentEnv<'_>, c: usize) -> Option<usize> {
        env.tree.children(self.agent).iter().position(|&x| x == c)
    }

    fn refresh_delta(&mut self, env: &AgentEnv<'_>) -> Result<()> {
        let before = self.checks;
        for d in 0..self.delta.len() {
            self.delta[d] = delta_cost(env.problem, env.tree, self.agent, &self.context, d, &mut self.checks)?;
        }
        self.nccc += self.checks - before;
        Ok(())
    }

    /// Initial context, bounds and value, followed by the first Backtrack.
    pub fn start(&mut self, env: &AgentEnv<'_>) -> Result<Vec<Outgoing>> {
        self.context = env
            .tree
            .scp(self.agent)
            .iter()
            .map(|&p| ContextEntry::new(p, env.problem.val_init(p), 0))
            .collect();
        self.id = 0;
        for ci in 0..self.child_lb.len() {
            for d in 0..self.delta.len() {
                self.init_child(env, ci, d);
            }
        }
        self.refresh_delta(env)?;
        self.init_self();
        Ok(self.backtrack(env))
    }

    /// lb(c,d) := w·h(a,c,d); ub(c,d) := ∞.
    pub fn init_child(&mut self, env: &AgentEnv<'_>, child_index: usize, d: usize) {
        let c = env.tree.children(self.agent)[child_index];
        self.child_lb[child_index][d] = env.heuristics.get(self.agent, c, d).scale(self.variant.weight());
        self.child_ub[child_index][d] = Cost::INFINITY;
        self.child_witness[child_index][d].clear();
    }

    /// Takes the value minimizing δ(d) + Σ lb(c,d) (lowest index on ties),
    /// bumps the ID and resets the threshold.
    pub fn init_self(&mut self) {
        let best = (0..self.delta.len())
            .min_by_key(|&d| (self.delta[d] + self.child_lb.iter().map(|row| row[d]).sum::<Cost>(), d))
            .expect("non-empty domain");
        self.value = best;
        self.epoch_start_value = best;
        self.id += 1;
        self.threshold = Cost::INFINITY;
    }

    fn recompute_bounds(&mut self) {
        for d in 0..self.delta.len() {
            self.lb_d[d] = self.delta[d] + self.child_lb.iter().map(|row| row[d]).sum::<Cost>();
            self.ub_d[d] = self.delta[d] + self.child_ub.iter().map(|row| row[d]).sum::<Cost>();
        }
        self.lb = self.lb_d.iter().copied().min().expect("non-empty domain");
        self.ub = self.ub_d.iter().copied().min().expect("non-empty domain");
    }

    /// Recomputes the bounds, switches value when the current one reaches the
    /// pruning quantity min{TH, UB}, then either terminates (TERMINATE to
    /// every child) or emits VALUE messages down and a COST message up.
    pub fn backtrack(&mut self, env: &AgentEnv<'_>) -> Vec<Outgoing> {
        self.recompute_bounds();
        let pruning = self.threshold.min(self.ub);
        if self.lb_d[self.value] >= pruning {
            let best = self.lb_d.iter().copied().min().expect("non-empty domain");
            if self.lb_d[self.value] != best {
                self.value = self.lb_d.iter().position(|&x| x == best).expect("min exists");
                self.id += 1;
            }
        }
        let children = env.tree.children(self.agent);
        let is_root = env.tree.is_root(self.agent);
        if is_root {
            self.limit = compute_limit(self.variant, self.lb);
        }
        if (is_root && self.ub <= self.limit) || self.terminate_received {
            self.terminated = true;
            return children.iter().map(|&c| Outgoing { to: c, message: Message::Terminate }).collect();
        }
        let d = self.value;
        let mut out = Vec::with_capacity(env.tree.cd(self.agent).len() + 1);
        let base = pruning - self.delta[d];
        for (ci, &c) in children.iter().enumerate() {
            let others: Cost = self
                .child_lb
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != ci)
                .map(|(_, row)| row[d])
                .sum();
            out.push(Outgoing {
                to: c,
                message: Message::Value { sender: self.agent, value: d, id: self.id, threshold: base - others },
            });
        }
        for &pc in env.tree.pseudo_children(self.agent) {
            out.push(Outgoing {
                to: pc,
                message: Message::Value { sender: self.agent, value: d, id: self.id, threshold: Cost::INFINITY },
            });
        }
        if let Some(parent) = env.tree.parent(self.agent) {
            out.push(Outgoing {
                to: parent,
                message: Message::Cost {
                    sender: self.agent,
                    context: self.context.clone(),
                    lb: self.lb,
                    ub: self.ub,
                    witness: self.solution().unwrap_or_default(),
                },
            });
        }
        out
    }

    /// InitSelf after an incompatible context change. δ is only recomputed
    /// when a constrained ancestor's value moved.
    fn after_context_change(&mut self, env: &AgentEnv<'_>, prev: &Context) -> Result<()> {
        if !compatible(&prev.restricted_to(env.tree.cp(self.agent)), &self.context) {
            self.refresh_delta(env)?;
        }
        self.epoch += 1;
        self.init_self();
        Ok(())
    }

    fn reinit_children_where(&mut self, env: &AgentEnv<'_>, mut stale: impl FnMut(usize) -> bool) {
        for (ci, &c) in env.tree.children(self.agent).iter().enumerate() {
            if stale(c) {
                for d in 0..self.delta.len() {
                    self.init_child(env, ci, d);
                }
            }
        }
    }

    pub fn on_value(&mut self, env: &AgentEnv<'_>, sender: usize, value: usize, id: u64, threshold: Cost) -> Result<()> {
        if !env.tree.scp(self.agent).contains(&sender) {
            return Err(Error::Protocol {
                agent: self.agent,
                reason: format!("VALUE from agent {sender}, which is not in SCP"),
            });
        }
        let prev = self.context.clone();
        self.context.merge_entry(ContextEntry::new(sender, value, id));
        if !compatible(&prev, &self.context) {
            self.reinit_children_where(env, |c| env.tree.scp(c).contains(&sender));
            self.after_context_change(env, &prev)?;
        }
        if env.tree.parent(self.agent) == Some(sender) {
            self.threshold = threshold;
        }
        Ok(())
    }

    pub fn on_cost(
        &mut self,
        env: &AgentEnv<'_>,
        sender: usize,
        context: &Context,
        lb: Cost,
        ub: Cost,
        witness: &[(usize, usize)],
    ) -> Result<()> {
        let ci = self.child_index(env, sender).ok_or_else(|| Error::Protocol {
            agent: self.agent,
            reason: format!("COST from agent {sender}, which is not a child"),
        })?;
        let d = context.value_of(self.agent).ok_or_else(|| Error::Protocol {
            agent: self.agent,
            reason: format!("COST from agent {sender} has no entry for the receiver"),
        })?;
        if d >= self.delta.len() {
            return Err(Error::OutOfDomain { agent: self.agent, value: d, size: self.delta.len() });
        }
        let prev = self.context.clone();
        self.context.merge_from(context);
        let changed = !compatible(&prev, &self.context);
        if changed {
            let now = self.context.clone();
            self.reinit_children_where(env, |c| !compatible(&prev.restricted_to(env.tree.scp(c)), &now));
        }
        if compatible(context, &self.context) {
            self.child_lb[ci][d] = self.child_lb[ci][d].max(lb);
            if ub < self.child_ub[ci][d] {
                self.child_ub[ci][d] = ub;
                self.child_witness[ci][d] = witness.to_vec();
            }
        }
        if changed {
            self.after_context_change(env, &prev)?;
        }
        Ok(())
    }

    /// Assignment of this agent's subtree with cost UB under the current
    /// context, using the lowest value that attains UB. None while UB is
    /// infinite.
    pub fn solution(&self) -> Option<Witness> {
        if self.ub.is_infinite() {
            return None;
        }
        let d = self.ub_d.iter().position(|&x| x == self.ub)?;
        let mut w: Witness = vec![(self.agent, d)];
        for row in &self.child_witness {
            w.extend_from_slice(&row[d]);
        }
        w.sort_unstable();
        Some(w)
    }

    pub fn on_terminate(&mut self) {
        self.terminate_received = true;
    }

    /// Dispatches one received message.
    pub fn receive(&mut self, env: &AgentEnv<'_>, message: &Message) -> Result<()> {
        match message {
            Message::Value { sender, value, id, threshold } => self.on_value(env, *sender, *value, *id, *threshold),
            Message::Cost { sender, context, lb, ub, witness } => self.on_cost(env, *sender, context, *lb, *ub, witness),
            Message::Terminate => {
                self.on_terminate();
                Ok(())
            }
        }
    }
}

/// max(receiver, sender + t)
pub fn nccc_on_receive(receiver: u64, sender_at_send: u64, transmission_cost: u64) -> u64 {
    receiver.max(sender_at_send.saturating_add(transmission_cost))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    struct Fx {
        p: Problem,
        t: PseudoTree,
        h: HeuristicTable,
    }

    impl Fx {
        fn new() -> Self {
            let p = fixtures::example_problem();
            let t = fixtures::example_tree(&p);
            let h = fixtures::example_heuristics(&p, &t);
            Fx { p, t, h }
        }
        fn env(&self) -> AgentEnv<'_> {
            AgentEnv::new(&self.p, &self.t, &self.h)
        }
    }

    fn ctx(entries: &[(usize, usize, u64)]) -> Context {
        entries.iter().map(|&(a, d, id)| ContextEntry::new(a, d, id)).collect()
    }

    fn n(v: u32) -> Cost {
        Cost::from(v)
    }

    #[test]
    fn start_leaf_reports_its_delta() {
        let fx = Fx::new();
        let env = fx.env();
        let mut a4 = AgentState::new(3, Variant::Optimal, &env);
        let out = a4.start(&env).unwrap();
        assert_eq!(a4.context(), &ctx(&[(1, 0, 0)]));
        assert_eq!((a4.value(), a4.id(), a4.threshold()), (0, 1, Cost::INFINITY));
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].to, 1);
        assert_eq!(out[0].message.to_string(), "COST(3,{(1,0,0)},3,3)");
    }

    #[test]
    fn start_root_uses_heuristics_and_messages_pseudo_child() {
        let fx = Fx::new();
        let env = fx.env();
        let mut a1 = AgentState::new(0, Variant::Optimal, &env);
        let out = a1.start(&env).unwrap();
        assert_eq!(a1.lb_d(), &[n(3), n(6)]);
        assert_eq!(a1.value(), 0);
        let shown: Vec<_> = out.iter().map(|o| (o.to, o.message.to_string())).collect();
        assert_eq!(shown, vec![(1, "VALUE(0,0,1,inf)".to_string()), (2, "VALUE(0,0,1,inf)".to_string())]);
    }

    #[test]
    fn isolated_agent_terminates_on_first_backtrack() {
        let p = Problem::with_domain_sizes(&[3], vec![]).unwrap();
        let t = PseudoTree::build(&p).unwrap();
        let h = HeuristicTable::zero(&p, &t);
        let env = AgentEnv::new(&p, &t, &h);
        let mut a = AgentState::new(0, Variant::Optimal, &env);
        assert!(a.start(&env).unwrap().is_empty());
        assert!(a.is_terminated());
        assert_eq!((a.lb(), a.ub()), (Cost::ZERO, Cost::ZERO));
    }

    #[test]
    fn init_child_applies_weight() {
        let fx = Fx::new();
        let env = fx.env();
        let mut a2 = AgentState::new(1, Variant::Weighted(3.0), &env);
        a2.init_child(&env, 0, 0);
        assert_eq!(a2.child_lb()[0][0], n(6));
        assert_eq!(a2.child_ub()[0][0], Cost::INFINITY);
        let mut opt = AgentState::new(0, Variant::Optimal, &env);
        opt.init_child(&env, 0, 0);
        assert_eq!(opt.child_lb()[0][0], n(3));
    }

    #[test]
    fn init_self_breaks_ties_low_and_bumps_id() {
        let p = Problem::with_domain_sizes(&[2], vec![]).unwrap();
        let t = PseudoTree::build(&p).unwrap();
        let h = HeuristicTable::zero(&p, &t);
        let env = AgentEnv::new(&p, &t, &h);
        let mut a = AgentState::new(0, Variant::Optimal, &env);
        a.init_self();
        assert_eq!((a.value(), a.id()), (0, 1));
        assert_eq!(a.threshold(), Cost::INFINITY);
    }

    /// Drives a2 through cycles 1 and 2 of the example run.
    #[test]
    fn a2_cycle_two_switches_value_and_splits_threshold() {
        let fx = Fx::new();
        let env = fx.env();
        let mut a2 = AgentState::new(1, Variant::Optimal, &env);
        let out = a2.start(&env).unwrap();
        assert_eq!(out.iter().map(|o| o.message.to_string()).collect::<Vec<_>>(), [
            "VALUE(1,0,1,inf)",
            "VALUE(1,0,1,inf)",
            "COST(1,{(0,0,0)},9,inf)"
        ]);
        a2.on_value(&env, 0, 0, 1, Cost::INFINITY).unwrap();
        assert_eq!(a2.context(), &ctx(&[(0, 0, 1)]));
        assert_eq!(a2.epoch(), 0);
        a2.on_cost(&env, 2, &ctx(&[(0, 0, 0), (1, 0, 0)]), n(10), n(10), &[]).unwrap();
        assert_eq!((a2.child_lb()[0][0], a2.child_ub()[0][0]), (n(10), n(10)));
        a2.on_cost(&env, 3, &ctx(&[(1, 0, 0)]), n(3), n(3), &[]).unwrap();
        let out = a2.backtrack(&env);
        assert_eq!((a2.value(), a2.id(), a2.lb(), a2.ub()), (1, 2, n(12), n(18)));
        assert_eq!(out.iter().map(|o| o.message.to_string()).collect::<Vec<_>>(), [
            "VALUE(1,1,2,8)",
            "VALUE(1,1,2,8)",
            "COST(1,{(0,0,1)},12,18)"
        ]);
    }

    #[test]
    fn root_keeps_value_below_pruning_quantity() {
        let fx = Fx::new();
        let env = fx.env();
        let mut a1 = AgentState::new(0, Variant::Optimal, &env);
        a1.start(&env).unwrap();
        a1.on_cost(&env, 1, &ctx(&[(0, 0, 0)]), n(9), Cost::INFINITY, &[]).unwrap();
        assert_eq!(a1.lb_d()[0], n(3));
        a1.backtrack(&env);
        assert_eq!((a1.value(), a1.id()), (0, 1));
        assert_eq!(a1.lb_d(), &[n(9), n(6)]);
    }

    #[test]
    fn incompatible_value_reinitializes_bounds_and_takes_parent_threshold() {
        let fx = Fx::new();
        let env = fx.env();
        let mut a3 = AgentState::new(2, Variant::Optimal, &env);
        a3.start(&env).unwrap();
        a3.on_value(&env, 0, 0, 1, Cost::INFINITY).unwrap();
        a3.on_value(&env, 1, 0, 1, Cost::INFINITY).unwrap();
        a3.backtrack(&env);
        assert_eq!(a3.epoch(), 0);
        a3.on_value(&env, 1, 1, 2, n(8)).unwrap();
        assert_eq!(a3.context(), &ctx(&[(0, 0, 1), (1, 1, 2)]));
        assert_eq!(a3.epoch(), 1);
        assert_eq!((a3.id(), a3.threshold()), (2, n(8)));
        a3.backtrack(&env);
        assert_eq!(a3.lb_d(), &[n(8), n(13)]);
    }

    #[test]
    fn stale_value_only_updates_threshold() {
        let fx = Fx::new();
        let env = fx.env();
        let mut a3 = AgentState::new(2, Variant::Optimal, &env);
        a3.start(&env).unwrap();
        a3.on_value(&env, 1, 1, 5, n(4)).unwrap();
        let before = a3.context().clone();
        let id = a3.id();
        a3.on_value(&env, 1, 0, 3, n(7)).unwrap();
        assert_eq!(a3.context(), &before);
        assert_eq!(a3.id(), id);
        assert_eq!(a3.threshold(), n(7));
    }

    #[test]
    fn incompatible_cost_leaves_bounds_alone() {
        let fx = Fx::new();
        let env = fx.env();
        let mut a2 = AgentState::new(1, Variant::Optimal, &env);
        a2.start(&env).unwrap();
        a2.on_value(&env, 0, 1, 4, Cost::INFINITY).unwrap();
        let lb = a2.child_lb().to_vec();
        // child still reports a1 = 0 with an older ID
        a2.on_cost(&env, 2, &ctx(&[(0, 0, 1), (1, 0, 1)]), n(50), n(50), &[]).unwrap();
        assert_eq!(a2.child_lb(), lb.as_slice());
        assert_eq!(a2.context(), &ctx(&[(0, 1, 4)]));
    }

    #[test]
    fn cost_without_receiver_entry_is_a_protocol_error() {
        let fx = Fx::new();
        let env = fx.env();
        let mut a2 = AgentState::new(1, Variant::Optimal, &env);
        a2.start(&env).unwrap();
        let err = a2.on_cost(&env, 2, &ctx(&[(0, 0, 0)]), n(1), n(1), &[]).unwrap_err();
        assert!(matches!(err, Error::Protocol { agent: 1, .. }));
        assert!(a2.on_cost(&env, 0, &ctx(&[(1, 0, 0)]), n(1), n(1), &[]).is_err());
    }

    #[test]
    fn terminate_is_forwarded_once_and_idempotent() {
        let fx = Fx::new();
        let env = fx.env();
        let mut a2 = AgentState::new(1, Variant::Optimal, &env);
        a2.start(&env).unwrap();
        a2.on_terminate();
        a2.on_terminate();
        let out = a2.backtrack(&env);
        assert!(a2.is_terminated());
        assert_eq!(out, vec![Outgoing { to: 2, message: Message::Terminate }, Outgoing {
            to: 3,
            message: Message::Terminate
        }]);
        let mut a4 = AgentState::new(3, Variant::Optimal, &env);
        a4.start(&env).unwrap();
        a4.on_terminate();
        assert!(a4.backtrack(&env).is_empty());
        assert!(a4.is_terminated());
    }

    #[test]
    fn limits_per_variant() {
        assert_eq!(compute_limit(Variant::Optimal, n(12)), n(12));
        assert_eq!(compute_limit(Variant::Weighted(3.0), n(12)), n(12));
        assert_eq!(compute_limit(Variant::Absolute(24.0), n(6)), n(30));
        assert_eq!(compute_limit(Variant::Relative(3.0), n(6)), n(18));
        assert_eq!(compute_limit(Variant::Absolute(5.0), Cost::INFINITY), Cost::INFINITY);
        assert!(Variant::Absolute(-1.0).validate().is_err());
        assert!(Variant::Relative(0.5).validate().is_err());
        assert!(Variant::Weighted(0.9).validate().is_err());
        assert!(Variant::Relative(1.0).validate().is_ok());
    }

    #[test]
    fn nccc_receive_rule() {
        assert_eq!(nccc_on_receive(5, 3, 1000), 1003);
        assert_eq!(nccc_on_receive(5, 3, 0), 5);
    }

    #[test]
    fn message_text() {
        let m = Message::Cost { sender: 3, context: ctx(&[(1, 0, 0)]), lb: n(3), ub: Cost::INFINITY, witness: vec![] };
        assert_eq!(m.to_string(), "COST(3,{(1,0,0)},3,inf)");
        assert_eq!(Message::Terminate.to_string(), "TERMINATE");
    }
}
