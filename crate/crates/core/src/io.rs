//! JSON problem files.
//!
//! ```json
//! {"agents": 2, "domains": [[0,1],[0,1]], "val_init": [0,0],
//!  "constraints": [{"a": 0, "b": 1, "costs": [[5,8],[20,3]]}],
//!  "pseudo_tree": {"root": 0, "parent": [null, 0]},
//!  "heuristics": [{"a": 0, "c": 1, "values": [3,6]}]}
//! ```
//!
//! `val_init`, `pseudo_tree` and `heuristics` are optional. Costs must be
//! numbers; infeasibility is written as 1000000.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cost::Cost;
use crate::error::{Error, Result};
use crate::heuristics::HeuristicTable;
use crate::model::{Constraint, Problem};
use crate::pseudotree::PseudoTree;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    agents: usize,
    domains: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    val_init: Option<Vec<usize>>,
    constraints: Vec<ConstraintFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pseudo_tree: Option<TreeFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    heuristics: Option<Vec<HeuristicFile>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintFile {
    a: usize,
    b: usize,
    costs: Vec<Vec<Value>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeFile {
    root: usize,
    parent: Vec<Option<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeuristicFile {
    a: usize,
    c: usize,
    values: Vec<Value>,
}

/// A parsed problem file. `tree` and `heuristics` are present only when the
/// file supplies them.
#[derive(Clone, Debug)]
pub struct LoadedProblem {
    pub problem: Problem,
    pub tree: Option<PseudoTree>,
    pub heuristics: Option<HeuristicTable>,
}

impl LoadedProblem {
    /// The file's tree, or the max-degree DFS tree.
    pub fn tree_or_build(&self) -> Result<PseudoTree> {
        match &self.tree {
            Some(t) => Ok(t.clone()),
            None => PseudoTree::build(&self.problem),
        }
    }
}

fn cost_of(v: &Value, what: &str) -> Result<Cost> {
    match v.as_f64() {
        Some(x) if x.is_finite() && x >= 0.0 => Ok(Cost::new(x)),
        _ => Err(Error::Format(format!(
            "{what}: {v} is not a non-negative number (write infeasible costs as 1000000)"
        ))),
    }
}

fn value_of(c: Cost) -> Value {
    let x = c.value();
    if x.fract() == 0.0 && x.abs() < 9.0e15 {
        Value::from(x as i64)
    } else {
        Value::from(x)
    }
}

pub fn parse_problem(text: &str) -> Result<LoadedProblem> {
    let file: ProblemFile = serde_json::from_str(text)?;
    if file.domains.len() != file.agents {
        return Err(Error::Format(format!("agents is {} but {} domains are given", file.agents, file.domains.len())));
    }
    let constraints = file
        .constraints
        .iter()
        .map(|c| {
            let what = format!("constraint ({},{})", c.a, c.b);
            let costs = c
                .costs
                .iter()
                .map(|row| row.iter().map(|v| cost_of(v, &what)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            Ok(Constraint::new(c.a, c.b, costs))
        })
        .collect::<Result<Vec<_>>>()?;
    let problem = Problem::new(file.domains, file.val_init, constraints)?;
    let tree = match &file.pseudo_tree {
        Some(t) => {
            let tree = PseudoTree::from_parents(&problem, &t.parent)?;
            if tree.root() != t.root {
                return Err(Error::Format(format!("pseudo_tree.root is {} but the parent array roots at {}", t.root, tree.root())));
            }
            Some(tree)
        }
        None => None,
    };
    let heuristics = match &file.heuristics {
        Some(entries) => {
            let t = match &tree {
                Some(t) => t.clone(),
                None => PseudoTree::build(&problem)?,
            };
            let mut h = HeuristicTable::zero(&problem, &t);
            for e in entries {
                let what = format!("heuristic ({},{})", e.a, e.c);
                let row = e.values.iter().map(|v| cost_of(v, &what)).collect::<Result<Vec<_>>>()?;
                h.set(e.a, e.c, row)?;
            }
            Some(h)
        }
        None => None,
    };
    Ok(LoadedProblem { problem, tree, heuristics })
}

pub fn read_problem(path: impl AsRef<Path>) -> Result<LoadedProblem> {
    parse_problem(&std::fs::read_to_string(path)?)
}

/// Pretty JSON for a problem, optionally with its tree and heuristic table.
pub fn problem_to_json(problem: &Problem, tree: Option<&PseudoTree>, heuristics: Option<&HeuristicTable>) -> String {
    let file = ProblemFile {
        agents: problem.num_agents(),
        domains: problem.domains().to_vec(),
        val_init: Some(problem.val_inits().to_vec()),
        constraints: problem
            .constraints()
            .iter()
            .map(|c| ConstraintFile {
                a: c.a,
                b: c.b,
                costs: c.costs.iter().map(|row| row.iter().copied().map(value_of).collect()).collect(),
            })
            .collect(),
        pseudo_tree: tree.map(|t| TreeFile { root: t.root(), parent: t.parents().to_vec() }),
        heuristics: heuristics.map(|h| {
            h.iter()
                .map(|(a, c, row)| HeuristicFile { a, c, values: row.iter().copied().map(value_of).collect() })
                .collect()
        }),
    };
    serde_json::to_string_pretty(&file).expect("problem files always serialize")
}

pub fn write_problem(
    path: impl AsRef<Path>,
    problem: &Problem,
    tree: Option<&PseudoTree>,
    heuristics: Option<&HeuristicTable>,
) -> Result<()> {
    let mut text = problem_to_json(problem, tree, heuristics);
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
