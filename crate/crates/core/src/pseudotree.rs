//! Pseudo-trees over the constraint graph and the relation sets derived
//! from them.
//!
//! Notation used by the accessors:
//!
//! * `children(a)`: tree children C(a)
//! * `pseudo_children(a)`: descendants linked to `a` by a backedge
//! * `cd(a)`: children and pseudo-children CD(a)
//! * `ancestors(a)`: P(a)
//! * `cp(a)`: ancestors constrained with `a` (parent and pseudo-parents), CP(a)
//! * `scp(a)`: ancestors constrained with `a` or with any descendant of `a`, SCP(a)
//!
//! Every set is stored as a sorted `Vec<usize>`.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::Problem;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PseudoTree {
    root: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    pseudo_children: Vec<Vec<usize>>,
    cd: Vec<Vec<usize>>,
    ancestors: Vec<Vec<usize>>,
    cp: Vec<Vec<usize>>,
    scp: Vec<Vec<usize>>,
    depth: Vec<usize>,
}

impl PseudoTree {
    /// Centralized DFS construction. The root is the agent of maximum degree
    /// and neighbors are visited in decreasing degree order; ties go to the
    /// lowest index in both cases.
    pub fn build(problem: &Problem) -> Result<Self> {
        let n = problem.num_agents();
        if n == 0 {
            return Err(Error::InvalidTree(vec!["problem has no agents".into()]));
        }
        let components = connected_components(problem);
        if components.len() > 1 {
            return Err(Error::Disconnected { components });
        }

        let by_degree = |list: &[usize]| {
            let mut v = list.to_vec();
            v.sort_by_key(|&x| (std::cmp::Reverse(problem.degree(x)), x));
            v
        };
        let all: Vec<usize> = (0..n).collect();
        let root = by_degree(&all)[0];

        let mut parent = vec![None; n];
        let mut visited = vec![false; n];
        visited[root] = true;
        // explicit stack of (agent, ordered neighbors, next index)
        let mut stack = vec![(root, by_degree(problem.neighbors(root)), 0usize)];
        while let Some((agent, order, next)) = stack.last_mut() {
            if *next == order.len() {
                stack.pop();
                continue;
            }
            let nb = order[*next];
            *next += 1;
            if !visited[nb] {
                visited[nb] = true;
                parent[nb] = Some(*agent);
                let nb_order = by_degree(problem.neighbors(nb));
                stack.push((nb, nb_order, 0));
            }
        }
        let tree = PseudoTree::from_parents_unchecked(problem, &parent)?;
        debug_assert!(tree.validate(problem).is_empty());
        Ok(tree)
    }

    /// Builds a tree from a parent array and checks it against the problem.
    pub fn from_parents(problem: &Problem, parent: &[Option<usize>]) -> Result<Self> {
        let tree = PseudoTree::from_parents_unchecked(problem, parent)?;
        let violations = tree.validate(problem);
        if violations.is_empty() {
            Ok(tree)
        } else {
            Err(Error::InvalidTree(violations))
        }
    }

    /// Builds a tree from a parent array, deriving all relation sets, but only
    /// checks that the array describes a single rooted tree. Use
    /// [`PseudoTree::validate`] to check the pseudo-tree property.
    pub fn from_parents_unchecked(problem: &Problem, parent: &[Option<usize>]) -> Result<Self> {
        let n = problem.num_agents();
        if parent.len() != n {
            return Err(Error::InvalidTree(vec![format!("parent array has {} entries, expected {n}", parent.len())]));
        }
        let roots: Vec<usize> = (0..n).filter(|&a| parent[a].is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::InvalidTree(vec![format!("expected exactly one root, found {roots:?}")]));
        }
        let root = roots[0];
        for (a, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                if p >= n || p == a {
                    return Err(Error::InvalidTree(vec![format!("agent {a} has invalid parent {p}")]));
                }
            }
        }

        let mut children = vec![Vec::new(); n];
        for a in 0..n {
            if let Some(p) = parent[a] {
                children[p].push(a);
            }
        }

        // ancestors by walking up; detects cycles
        let mut ancestors = vec![Vec::new(); n];
        let mut depth = vec![0; n];
        for a in 0..n {
            let mut cur = parent[a];
            let mut chain = Vec::new();
            while let Some(p) = cur {
                if chain.len() > n {
                    return Err(Error::InvalidTree(vec![format!("parent pointers of agent {a} form a cycle")]));
                }
                chain.push(p);
                cur = parent[p];
            }
            depth[a] = chain.len();
            chain.sort_unstable();
            ancestors[a] = chain;
        }

        let mut cp = vec![Vec::new(); n];
        let mut pseudo_children = vec![Vec::new(); n];
        for a in 0..n {
            for &nb in problem.neighbors(a) {
                if ancestors[a].binary_search(&nb).is_ok() {
                    cp[a].push(nb);
                    if parent[a] != Some(nb) {
                        pseudo_children[nb].push(a);
                    }
                }
            }
        }
        for list in &mut pseudo_children {
            list.sort_unstable();
        }

        // SCP(a) = CP(a) ∪ ⋃_{c ∈ C(a)} (SCP(c) \ {a}), computed deepest first
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&a| std::cmp::Reverse(depth[a]));
        let mut scp: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &a in &order {
            let mut set: BTreeSet<usize> = cp[a].iter().copied().collect();
            for &c in &children[a] {
                set.extend(scp[c].iter().copied().filter(|&x| x != a));
            }
            scp[a] = set.into_iter().collect();
        }

        let cd = (0..n)
            .map(|a| {
                let mut v: Vec<usize> = children[a].iter().chain(&pseudo_children[a]).copied().collect();
                v.sort_unstable();
                v
            })
            .collect();

        Ok(PseudoTree { root, parent: parent.to_vec(), children, pseudo_children, cd, ancestors, cp, scp, depth })
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn num_agents(&self) -> usize {
        self.parent.len()
    }

    pub fn parent(&self, agent: usize) -> Option<usize> {
        self.parent[agent]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn is_root(&self, agent: usize) -> bool {
        agent == self.root
    }

    pub fn children(&self, agent: usize) -> &[usize] {
        &self.children[agent]
    }

    pub fn pseudo_children(&self, agent: usize) -> &[usize] {
        &self.pseudo_children[agent]
    }

    pub fn cd(&self, agent: usize) -> &[usize] {
        &self.cd[agent]
    }

    pub fn ancestors(&self, agent: usize) -> &[usize] {
        &self.ancestors[agent]
    }

    pub fn cp(&self, agent: usize) -> &[usize] {
        &self.cp[agent]
    }

    pub fn scp(&self, agent: usize) -> &[usize] {
        &self.scp[agent]
    }

    pub fn depth(&self, agent: usize) -> usize {
        self.depth[agent]
    }

    pub fn is_ancestor(&self, ancestor: usize, agent: usize) -> bool {
        self.ancestors[agent].binary_search(&ancestor).is_ok()
    }

    pub fn is_leaf(&self, agent: usize) -> bool {
        self.children[agent].is_empty()
    }

    /// `agent` and all of its descendants, in pre-order.
    pub fn subtree(&self, agent: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![agent];
        while let Some(a) = stack.pop() {
            out.push(a);
            stack.extend(self.children[a].iter().rev());
        }
        out
    }

    /// Agents ordered parents-before-children (breadth first from the root).
    pub fn top_down_order(&self) -> Vec<usize> {
        let mut out = vec![self.root];
        let mut i = 0;
        while i < out.len() {
            out.extend(self.children[out[i]].iter().copied());
            i += 1;
        }
        out
    }

    /// Lists every violated property; an empty list means the tree is a
    /// valid pseudo-tree for `problem` whose derived sets match their
    /// definitions.
    pub fn validate(&self, problem: &Problem) -> Vec<String> {
        let n = problem.num_agents();
        let mut out = Vec::new();
        if self.num_agents() != n {
            out.push(format!("tree covers {} agents, problem has {n}", self.num_agents()));
            return out;
        }
        let reachable = self.top_down_order();
        if reachable.len() != n {
            out.push(format!("only {} of {n} agents reachable from the root", reachable.len()));
        }
        for c in problem.constraints() {
            let (a, b) = (c.a, c.b);
            if !(self.is_ancestor(a, b) || self.is_ancestor(b, a)) {
                out.push(format!("constraint ({a},{b}) does not join an ancestor-descendant pair"));
            }
        }
        for a in 0..n {
            if let Some(p) = self.parent[a] {
                if self.depth[a] != self.depth[p] + 1 {
                    out.push(format!("depth of agent {a} inconsistent with parent {p}"));
                }
                if !self.scp[a].contains(&p) {
                    out.push(format!("parent {p} of agent {a} is not in SCP({a}); no constraint links it to the subtree"));
                }
            }
            if !self.cp[a].iter().all(|x| self.scp[a].contains(x)) {
                out.push(format!("CP({a}) is not a subset of SCP({a})"));
            }
            if !self.scp[a].iter().all(|x| self.is_ancestor(*x, a)) {
                out.push(format!("SCP({a}) contains a non-ancestor"));
            }
            if !self.children[a].iter().all(|x| self.cd[a].contains(x)) {
                out.push(format!("C({a}) is not a subset of CD({a})"));
            }
            let expected_cp: Vec<usize> =
                problem.neighbors(a).iter().copied().filter(|&x| self.is_ancestor(x, a)).collect();
            if expected_cp != self.cp[a] {
                out.push(format!("CP({a}) = {:?}, expected {:?}", self.cp[a], expected_cp));
            }
        }
        out
    }

    pub fn is_valid(&self, problem: &Problem) -> bool {
        self.validate(problem).is_empty()
    }
}

/// Connected components of the constraint graph, each sorted, ordered by
/// their smallest agent.
pub fn connected_components(problem: &Problem) -> Vec<Vec<usize>> {
    let n = problem.num_agents();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut i = 0;
        while i < comp.len() {
            for &nb in problem.neighbors(comp[i]) {
                if !seen[nb] {
                    seen[nb] = true;
                    comp.push(nb);
                }
            }
            i += 1;
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::Constraint;

    fn unit(a: usize, b: usize) -> Constraint {
        Constraint::from_table(a, b, &[&[1u32, 0], &[0, 1]])
    }

    #[test]
    fn fixture_tree_sets() {
        let p = fixtures::example_problem();
        let t = fixtures::example_tree(&p);
        assert!(t.is_valid(&p));
        assert_eq!(t.root(), 0);
        assert_eq!(t.children(0), &[1]);
        assert_eq!(t.pseudo_children(0), &[2]);
        assert_eq!(t.cd(0), &[1, 2]);
        assert_eq!(t.children(1), &[2, 3]);
        assert_eq!(t.scp(1), &[0]);
        assert_eq!(t.scp(2), &[0, 1]);
        assert_eq!(t.cp(2), &[0, 1]);
        // reduced context of a4 holds only a2
        assert_eq!(t.scp(3), &[1]);
        assert_eq!(t.ancestors(3), &[0, 1]);
        assert!(t.scp(0).is_empty());
    }

    #[test]
    fn single_agent_is_its_own_root() {
        let p = Problem::with_domain_sizes(&[3], vec![]).unwrap();
        let t = PseudoTree::build(&p).unwrap();
        assert_eq!(t.root(), 0);
        assert!(t.children(0).is_empty() && t.cd(0).is_empty() && t.scp(0).is_empty());
    }

    #[test]
    fn chain_roots_at_the_middle() {
        let p = Problem::with_domain_sizes(&[2, 2, 2], vec![unit(0, 1), unit(1, 2)]).unwrap();
        let t = PseudoTree::build(&p).unwrap();
        assert_eq!(t.root(), 1);
        assert_eq!(t.children(1), &[0, 2]);
        assert!(t.pseudo_children(1).is_empty());
        assert!(t.is_valid(&p));
    }

    #[test]
    fn build_on_fig1_graph_is_valid() {
        let p = fixtures::example_problem();
        let t = PseudoTree::build(&p).unwrap();
        // a2 has the largest degree
        assert_eq!(t.root(), 1);
        assert!(t.is_valid(&p));
    }

    #[test]
    fn sibling_backedge_is_rejected() {
        let p = fixtures::example_problem();
        // make a3 a child of a1 directly: a2 and a3 become siblings but share a constraint
        let parents = [None, Some(0), Some(0), Some(1)];
        let t = PseudoTree::from_parents_unchecked(&p, &parents).unwrap();
        let violations = t.validate(&p);
        assert!(!violations.is_empty());
        assert!(violations.iter().any(|v| v.contains("(1,2)")));
        assert!(PseudoTree::from_parents(&p, &parents).is_err());
    }

    #[test]
    fn disconnected_graph_is_refused() {
        let p = Problem::with_domain_sizes(&[2, 2, 2, 2], vec![unit(0, 1), unit(2, 3)]).unwrap();
        match PseudoTree::build(&p) {
            Err(Error::Disconnected { components }) => assert_eq!(components, vec![vec![0, 1], vec![2, 3]]),
            other => panic!("expected disconnected error, got {other:?}"),
        }
    }

    #[test]
    fn bad_parent_arrays() {
        let p = fixtures::example_problem();
        assert!(PseudoTree::from_parents_unchecked(&p, &[None, None, Some(1), Some(1)]).is_err());
        assert!(PseudoTree::from_parents_unchecked(&p, &[Some(1), Some(0), None, Some(2)]).is_err());
    }
}
