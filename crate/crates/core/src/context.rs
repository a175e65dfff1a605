//! Contexts: an agent's view of its relevant ancestors' values, each tagged
//! with the recency counter of the agent that owns the value.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ContextEntry {
    pub agent: usize,
    pub value: usize,
    pub id: u64,
}

impl ContextEntry {
    pub fn new(agent: usize, value: usize, id: u64) -> Self {
        ContextEntry { agent, value, id }
    }
}

impl fmt::Display for ContextEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.agent, self.value, self.id)
    }
}

/// At most one entry per agent, iterated in agent order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Context {
    entries: BTreeMap<usize, (usize, u64)>,
}

impl Context {
    pub fn new() -> Self {
        Context::default()
    }

    pub fn from_entries<I: IntoIterator<Item = ContextEntry>>(entries: I) -> Self {
        let mut ctx = Context::new();
        for e in entries {
            ctx.insert(e);
        }
        ctx
    }

    /// Inserts or overwrites the entry for `entry.agent`.
    pub fn insert(&mut self, entry: ContextEntry) {
        self.entries.insert(entry.agent, (entry.value, entry.id));
    }

    pub fn remove(&mut self, agent: usize) -> Option<ContextEntry> {
        self.entries.remove(&agent).map(|(value, id)| ContextEntry { agent, value, id })
    }

    pub fn get(&self, agent: usize) -> Option<ContextEntry> {
        self.entries.get(&agent).map(|&(value, id)| ContextEntry { agent, value, id })
    }

    pub fn value_of(&self, agent: usize) -> Option<usize> {
        self.entries.get(&agent).map(|&(v, _)| v)
    }

    pub fn contains(&self, agent: usize) -> bool {
        self.entries.contains_key(&agent)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ContextEntry> + '_ {
        self.entries.iter().map(|(&agent, &(value, id))| ContextEntry { agent, value, id })
    }

    pub fn agents(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    /// True iff no agent appears in both contexts with different values. IDs are ignored.
    pub fn is_compatible_with(&self, other: &Context) -> bool {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small
            .entries
            .iter()
            .all(|(agent, &(value, _))| large.entries.get(agent).map_or(true, |&(v, _)| v == value))
    }

    /// Restriction to the given agents (absent agents are skipped).
    pub fn restricted_to(&self, agents: &[usize]) -> Context {
        let mut out = Context::new();
        for &a in agents {
            if let Some(e) = self.get(a) {
                out.insert(e);
            }
        }
        out
    }

    /// Replaces entries of `self` with entries of `source` that carry a strictly
    /// larger ID. Agents absent from `self` are never added. Returns whether
    /// any entry changed.
    pub fn merge_from(&mut self, source: &Context) -> bool {
        let mut changed = false;
        for e in source.iter() {
            changed |= self.merge_entry(e);
        }
        changed
    }

    /// Single-entry form of [`Context::merge_from`].
    pub fn merge_entry(&mut self, entry: ContextEntry) -> bool {
        match self.entries.get_mut(&entry.agent) {
            Some(slot) if entry.id > slot.1 => {
                *slot = (entry.value, entry.id);
                true
            }
            _ => false,
        }
    }
}

/// Compatible(X, X'): no agent takes two different values in the two contexts.
pub fn compatible(x: &Context, y: &Context) -> bool {
    x.is_compatible_with(y)
}

/// PriorityMerge(X, X') as a pure function: returns the updated copy of `target`.
pub fn priority_merge(source: &Context, target: &Context) -> Context {
    let mut out = target.clone();
    out.merge_from(source);
    out
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, e) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str("}")
    }
}

impl FromIterator<ContextEntry> for Context {
    fn from_iter<I: IntoIterator<Item = ContextEntry>>(iter: I) -> Self {
        Context::from_entries(iter)
    }
}
