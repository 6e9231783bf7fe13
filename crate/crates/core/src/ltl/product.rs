use std::collections::{BTreeMap, VecDeque};

use super::buchi::BuchiAutomaton;
use super::lasso::{Lasso, Letter};
use crate::abstraction::TransitionSystem;

/// Finite labeled graph with one initial state; the transition system seen
/// as a Kripke structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledGraph {
    pub initial: usize,
    pub labels: Vec<Letter>,
    /// sorted successor indices per state
    pub edges: Vec<Vec<usize>>,
}

impl From<&TransitionSystem> for LabeledGraph {
    fn from(ts: &TransitionSystem) -> Self {
        Self {
            initial: ts.initial,
            labels: (0..ts.states.len()).map(|i| ts.label(i)).collect(),
            edges: ts.edges.clone(),
        }
    }
}

/// Reachable part of graph × automaton. A product state `(s, b)` means the
/// automaton is in `b` after reading the labels up to and including `s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Product {
    pub states: Vec<(usize, usize)>,
    pub initial: Vec<usize>,
    /// successors per state, sorted by (graph state, automaton state)
    pub edges: Vec<Vec<usize>>,
    pub accepting: Vec<bool>,
}

pub fn product(graph: &LabeledGraph, ba: &BuchiAutomaton) -> Product {
    let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut states = Vec::new();
    let mut queue = VecDeque::new();
    let mut intern = |key: (usize, usize), states: &mut Vec<(usize, usize)>, queue: &mut VecDeque<usize>| {
        *index.entry(key).or_insert_with(|| {
            states.push(key);
            queue.push_back(states.len() - 1);
            states.len() - 1
        })
    };

    let s0 = graph.initial;
    let mut first: Vec<(usize, usize)> =
        ba.initial.iter().flat_map(|&b| ba.step(b, &graph.labels[s0]).map(move |b2| (s0, b2))).collect();
    first.sort_unstable();
    first.dedup();
    let initial = first.into_iter().map(|k| intern(k, &mut states, &mut queue)).collect();

    let mut edges: Vec<Vec<usize>> = Vec::new();
    while let Some(v) = queue.pop_front() {
        let (s, b) = states[v];
        let mut succ: Vec<(usize, usize)> =
            graph.edges[s].iter().flat_map(|&t| ba.step(b, &graph.labels[t]).map(move |b2| (t, b2))).collect();
        succ.sort_unstable();
        succ.dedup();
        let ids: Vec<usize> = succ.into_iter().map(|k| intern(k, &mut states, &mut queue)).collect();
        // the queue yields states in id order
        debug_assert_eq!(edges.len(), v);
        edges.push(ids);
    }
    let accepting = states.iter().map(|&(_, b)| ba.accepting[b]).collect();
    Product { states, initial, edges, accepting }
}

/// Accepting lasso of the product, or `None` when the language is empty.
/// A nested depth-first search decides emptiness; the witness is then
/// shortened to the accepting state with the least prefix plus cycle length.
/// Successors are explored in their sorted order and ties go to the lower
/// index, so the result is deterministic. Returns product state indices: the
/// path from an initial state up to (excluding) the accepting seed, and the
/// cycle starting at it.
pub fn find_accepting_lasso(p: &Product) -> Option<Lasso<usize>> {
    let found = nested_dfs(p)?;
    Some(shortest_lasso(p).unwrap_or(found))
}

fn nested_dfs(p: &Product) -> Option<Lasso<usize>> {
    let n = p.states.len();
    let mut outer = vec![false; n];
    let mut inner = vec![false; n];
    for &root in &p.initial {
        if outer[root] {
            continue;
        }
        outer[root] = true;
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if let Some(&t) = p.edges[v].get(*next) {
                *next += 1;
                if !outer[t] {
                    outer[t] = true;
                    stack.push((t, 0));
                }
                continue;
            }
            stack.pop();
            if p.accepting[v] {
                if let Some(cycle) = cycle_through(p, v, &mut inner) {
                    let prefix = stack.iter().map(|&(u, _)| u).collect();
                    return Some(Lasso { prefix, cycle });
                }
            }
        }
    }
    None
}

fn cycle_through(p: &Product, seed: usize, inner: &mut [bool]) -> Option<Vec<usize>> {
    inner[seed] = true;
    let mut stack: Vec<(usize, usize)> = vec![(seed, 0)];
    while let Some(&mut (v, ref mut next)) = stack.last_mut() {
        let Some(&t) = p.edges[v].get(*next) else {
            stack.pop();
            continue;
        };
        *next += 1;
        if t == seed {
            return Some(stack.iter().map(|&(u, _)| u).collect());
        }
        if !inner[t] {
            inner[t] = true;
            stack.push((t, 0));
        }
    }
    None
}

/// Breadth-first paths from `sources`; `parent[v]` is `Some(v)` for a source.
fn bfs(p: &Product, sources: &[usize]) -> Vec<Option<usize>> {
    let mut parent = vec![None; p.states.len()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if parent[s].is_none() {
            parent[s] = Some(s);
            queue.push_back(s);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &t in &p.edges[v] {
            if parent[t].is_none() {
                parent[t] = Some(v);
                queue.push_back(t);
            }
        }
    }
    parent
}

fn path_to(parent: &[Option<usize>], v: usize) -> Vec<usize> {
    let mut path = vec![v];
    let mut u = v;
    while let Some(w) = parent[u].filter(|&w| w != u) {
        path.push(w);
        u = w;
    }
    path.reverse();
    path
}

fn shortest_lasso(p: &Product) -> Option<Lasso<usize>> {
    let reach = bfs(p, &p.initial);
    let mut best: Option<Lasso<usize>> = None;
    for a in (0..p.states.len()).filter(|&a| p.accepting[a] && reach[a].is_some()) {
        let mut prefix = path_to(&reach, a);
        prefix.pop();
        if best.as_ref().is_some_and(|b| b.len() <= prefix.len() + 1) {
            continue;
        }
        let cycle = if p.edges[a].contains(&a) {
            vec![a]
        } else {
            // shortest way back to `a`, searching from its successors
            let back = bfs(p, &p.edges[a]);
            let Some(last) = (0..p.states.len())
                .filter(|&v| back[v].is_some() && p.edges[v].contains(&a))
                .min_by_key(|&v| (path_to(&back, v).len(), v))
            else {
                continue;
            };
            let mut cycle = vec![a];
            cycle.extend(path_to(&back, last));
            cycle
        };
        if best.as_ref().is_none_or(|b| prefix.len() + cycle.len() < b.len()) {
            best = Some(Lasso { prefix, cycle });
        }
    }
    best
}

/// Accepting lasso projected onto graph states.
pub fn find_graph_lasso(graph: &LabeledGraph, ba: &BuchiAutomaton) -> Option<Lasso<usize>> {
    let p = product(graph, ba);
    find_accepting_lasso(&p).map(|l| l.map(|&v| p.states[v].0))
}
