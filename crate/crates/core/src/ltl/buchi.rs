use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::formula::Formula;
use super::lasso::Letter;

/// Negation normal form used by the tableau.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Nnf {
    True,
    False,
    Lit(String, bool),
    And(Box<Nnf>, Box<Nnf>),
    Or(Box<Nnf>, Box<Nnf>),
    Next(Box<Nnf>),
    Until(Box<Nnf>, Box<Nnf>),
    Release(Box<Nnf>, Box<Nnf>),
}

fn nnf(f: &Formula, positive: bool) -> Nnf {
    let b = |f: &Formula, p: bool| Box::new(nnf(f, p));
    match (f, positive) {
        (Formula::True, true) => Nnf::True,
        (Formula::True, false) => Nnf::False,
        (Formula::Atom(a), p) => Nnf::Lit(a.clone(), p),
        (Formula::Not(x), p) => nnf(x, !p),
        (Formula::And(x, y), true) | (Formula::Or(x, y), false) => Nnf::And(b(x, positive), b(y, positive)),
        (Formula::Or(x, y), true) | (Formula::And(x, y), false) => Nnf::Or(b(x, positive), b(y, positive)),
        (Formula::Implies(x, y), true) => Nnf::Or(b(x, false), b(y, true)),
        (Formula::Implies(x, y), false) => Nnf::And(b(x, true), b(y, false)),
        (Formula::Next(x), p) => Nnf::Next(b(x, p)),
        (Formula::Until(x, y), true) => Nnf::Until(b(x, true), b(y, true)),
        (Formula::Until(x, y), false) => Nnf::Release(b(x, false), b(y, false)),
        (Formula::Eventually(x), true) | (Formula::Always(x), false) => Nnf::Until(Box::new(Nnf::True), b(x, positive)),
        (Formula::Always(x), true) | (Formula::Eventually(x), false) => {
            Nnf::Release(Box::new(Nnf::False), b(x, positive))
        }
    }
}

fn untils(f: &Nnf, out: &mut BTreeSet<Nnf>) {
    match f {
        Nnf::True | Nnf::False | Nnf::Lit(..) => {}
        Nnf::Next(x) => untils(x, out),
        Nnf::And(x, y) | Nnf::Or(x, y) | Nnf::Release(x, y) => {
            untils(x, out);
            untils(y, out);
        }
        Nnf::Until(x, y) => {
            out.insert(f.clone());
            untils(x, out);
            untils(y, out);
        }
    }
}

/// Conjunction of literals a letter must satisfy.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Guard {
    pub positive: BTreeSet<String>,
    pub negative: BTreeSet<String>,
}

impl Guard {
    pub fn enables(&self, letter: &Letter) -> bool {
        self.positive.iter().all(|p| letter.contains(p)) && !self.negative.iter().any(|p| letter.contains(p))
    }
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lits: Vec<String> =
            self.positive.iter().cloned().chain(self.negative.iter().map(|p| format!("!{p}"))).collect();
        if lits.is_empty() {
            write!(f, "true")
        } else {
            write!(f, "{}", lits.join(" && "))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub to: usize,
    pub guard: Guard,
}

/// Nondeterministic Büchi automaton over letters `2^Ψ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuchiAutomaton {
    pub initial: Vec<usize>,
    pub accepting: Vec<bool>,
    /// outgoing transitions per state, sorted by target then guard
    pub transitions: Vec<Vec<Transition>>,
}

struct Node {
    incoming: BTreeSet<usize>,
    old: BTreeSet<Nnf>,
    next: BTreeSet<Nnf>,
}

struct Pending {
    incoming: BTreeSet<usize>,
    new: BTreeSet<Nnf>,
    old: BTreeSet<Nnf>,
    next: BTreeSet<Nnf>,
}

const INIT: usize = usize::MAX;

/// Tableau expansion. Nodes with equal `old` and `next` sets are merged.
fn expand(f: Nnf) -> Vec<Node> {
    let mut nodes: Vec<Node> = Vec::new();
    let mut stack = vec![Pending {
        incoming: BTreeSet::from([INIT]),
        new: BTreeSet::from([f]),
        old: BTreeSet::new(),
        next: BTreeSet::new(),
    }];
    while let Some(mut p) = stack.pop() {
        let Some(eta) = p.new.pop_first() else {
            if let Some(n) = nodes.iter_mut().find(|n| n.old == p.old && n.next == p.next) {
                n.incoming.extend(p.incoming);
                continue;
            }
            let id = nodes.len();
            stack.push(Pending {
                incoming: BTreeSet::from([id]),
                new: p.next.clone(),
                old: BTreeSet::new(),
                next: BTreeSet::new(),
            });
            nodes.push(Node { incoming: p.incoming, old: p.old, next: p.next });
            continue;
        };
        if p.old.contains(&eta) {
            stack.push(p);
            continue;
        }
        let fresh = |p: &Pending, fs: Vec<Nnf>| fs.into_iter().filter(|x| !p.old.contains(x)).collect::<Vec<_>>();
        match &eta {
            Nnf::False => {}
            Nnf::True => {
                p.old.insert(eta);
                stack.push(p);
            }
            Nnf::Lit(a, pos) => {
                if !p.old.contains(&Nnf::Lit(a.clone(), !pos)) {
                    p.old.insert(eta);
                    stack.push(p);
                }
            }
            Nnf::And(x, y) => {
                let add = fresh(&p, vec![(**x).clone(), (**y).clone()]);
                p.new.extend(add);
                p.old.insert(eta);
                stack.push(p);
            }
            Nnf::Next(x) => {
                p.next.insert((**x).clone());
                p.old.insert(eta);
                stack.push(p);
            }
            Nnf::Or(x, y) | Nnf::Until(x, y) | Nnf::Release(x, y) => {
                let (new1, next1, new2) = match &eta {
                    Nnf::Or(..) => (vec![(**x).clone()], None, vec![(**y).clone()]),
                    Nnf::Until(..) => (vec![(**x).clone()], Some(eta.clone()), vec![(**y).clone()]),
                    _ => (vec![(**y).clone()], Some(eta.clone()), vec![(**x).clone(), (**y).clone()]),
                };
                let mut second = Pending {
                    incoming: p.incoming.clone(),
                    new: p.new.clone(),
                    old: p.old.clone(),
                    next: p.next.clone(),
                };
                second.new.extend(fresh(&p, new2));
                second.old.insert(eta.clone());
                p.new.extend(fresh(&p, new1));
                p.old.insert(eta);
                p.next.extend(next1);
                stack.push(second);
                stack.push(p);
            }
        }
    }
    nodes
}

fn guard_of(old: &BTreeSet<Nnf>) -> Guard {
    let mut g = Guard::default();
    for x in old {
        if let Nnf::Lit(a, pos) = x {
            if *pos {
                g.positive.insert(a.clone());
            } else {
                g.negative.insert(a.clone());
            }
        }
    }
    g
}

impl BuchiAutomaton {
    pub fn state_count(&self) -> usize {
        self.accepting.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.iter().map(Vec::len).sum()
    }

    /// Successor states after reading `letter` from `state`.
    pub fn step<'a>(&'a self, state: usize, letter: &'a Letter) -> impl Iterator<Item = usize> + 'a {
        self.transitions[state].iter().filter(move |t| t.guard.enables(letter)).map(|t| t.to)
    }

    /// Whether the automaton accepts `prefix · cycle^ω`: some reachable
    /// (state, position) pair with an accepting state lies on a cycle.
    pub fn accepts_lasso(&self, prefix: &[Letter], cycle: &[Letter]) -> bool {
        if cycle.is_empty() {
            return false;
        }
        let word: Vec<&Letter> = prefix.iter().chain(cycle).collect();
        let n = word.len();
        let succ_pos = |i: usize| if i + 1 < n { i + 1 } else { prefix.len() };
        let id = |b: usize, i: usize| b * n + i;
        let total = self.state_count() * n;
        let succ = |v: usize| {
            let (b, i) = (v / n, v % n);
            self.step(b, word[i]).map(move |b2| id(b2, succ_pos(i))).collect::<Vec<_>>()
        };
        let mut reach = vec![false; total];
        let mut stack: Vec<usize> = self.initial.iter().map(|&b| id(b, 0)).collect();
        while let Some(v) = stack.pop() {
            if !std::mem::replace(&mut reach[v], true) {
                stack.extend(succ(v));
            }
        }
        (0..total).filter(|&v| reach[v] && self.accepting[v / n]).any(|v| {
            let mut seen = vec![false; total];
            let mut stack = succ(v);
            while let Some(u) = stack.pop() {
                if u == v {
                    return true;
                }
                if !std::mem::replace(&mut seen[u], true) {
                    stack.extend(succ(u));
                }
            }
            false
        })
    }

    /// Quotient by the coarsest forward bisimulation that respects acceptance.
    fn reduce(self) -> Self {
        let n = self.state_count();
        let mut block: Vec<usize> = self.accepting.iter().map(|&a| a as usize).collect();
        loop {
            let sigs: Vec<(usize, BTreeSet<(Guard, usize)>)> = (0..n)
                .map(|s| (block[s], self.transitions[s].iter().map(|t| (t.guard.clone(), block[t.to])).collect()))
                .collect();
            let ids: BTreeMap<_, usize> = {
                let mut order: Vec<_> = sigs.clone();
                order.sort();
                order.dedup();
                order.into_iter().enumerate().map(|(i, s)| (s, i)).collect()
            };
            let next: Vec<usize> = sigs.iter().map(|s| ids[s]).collect();
            let stable = ids.len() == block.iter().collect::<BTreeSet<_>>().len();
            block = next;
            if stable {
                break;
            }
        }
        // renumber blocks by first occurrence for stable, readable ids
        let mut rename = BTreeMap::new();
        for &b in &block {
            let k = rename.len();
            rename.entry(b).or_insert(k);
        }
        let m = rename.len();
        let mut accepting = vec![false; m];
        let mut transitions: Vec<BTreeSet<(usize, Guard)>> = vec![BTreeSet::new(); m];
        for s in 0..n {
            let b = rename[&block[s]];
            accepting[b] = self.accepting[s];
            for t in &self.transitions[s] {
                transitions[b].insert((rename[&block[t.to]], t.guard.clone()));
            }
        }
        let mut initial: Vec<usize> = self.initial.iter().map(|s| rename[&block[*s]]).collect();
        initial.sort_unstable();
        initial.dedup();
        Self {
            initial,
            accepting,
            transitions: transitions
                .into_iter()
                .map(|ts| ts.into_iter().map(|(to, guard)| Transition { to, guard }).collect())
                .collect(),
        }
    }
}

/// Translates a formula into a Büchi automaton with the on-the-fly tableau
/// construction; generalized acceptance is removed with a counter.
///
/// State 0 is the single initial state. It is never re-entered by the raw
/// construction, so its acceptance flag is free and set to true.
pub fn to_buchi(formula: &Formula) -> BuchiAutomaton {
    let f = nnf(formula, true);
    let mut goals = BTreeSet::new();
    untils(&f, &mut goals);
    let goals: Vec<Nnf> = goals.into_iter().collect();
    let nodes = expand(f);
    let fulfils = |n: &Node, g: &Nnf| match g {
        Nnf::Until(_, rhs) => !n.old.contains(g) || n.old.contains(rhs),
        _ => unreachable!(),
    };
    let k = goals.len().max(1);
    let accepts = |n: &Node, c: usize| goals.is_empty() || fulfils(n, &goals[c]);

    // state 0 is the initial state, node/counter pair (i, c) is 1 + i * k + c
    let id = |i: usize, c: usize| 1 + i * k + c;
    let count = 1 + nodes.len() * k;
    let mut accepting = vec![false; count];
    accepting[0] = true;
    let mut transitions: Vec<Vec<Transition>> = vec![Vec::new(); count];
    for (j, target) in nodes.iter().enumerate() {
        let guard = guard_of(&target.old);
        for &src in &target.incoming {
            if src == INIT {
                transitions[0].push(Transition { to: id(j, 0), guard: guard.clone() });
                continue;
            }
            for c in 0..k {
                let c2 = if accepts(&nodes[src], c) { (c + 1) % k } else { c };
                transitions[id(src, c)].push(Transition { to: id(j, c2), guard: guard.clone() });
            }
        }
    }
    for (i, n) in nodes.iter().enumerate() {
        accepting[id(i, 0)] = accepts(n, 0);
    }
    for ts in &mut transitions {
        ts.sort_by(|a, b| (a.to, &a.guard).cmp(&(b.to, &b.guard)));
    }
    BuchiAutomaton { initial: vec![0], accepting, transitions }.prune().reduce()
}

impl BuchiAutomaton {
    /// Drops states unreachable from the initial states.
    fn prune(self) -> Self {
        let n = self.state_count();
        let mut seen = vec![false; n];
        let mut stack = self.initial.clone();
        while let Some(s) = stack.pop() {
            if !std::mem::replace(&mut seen[s], true) {
                stack.extend(self.transitions[s].iter().map(|t| t.to));
            }
        }
        let map: Vec<Option<usize>> = {
            let mut k = 0;
            seen.iter()
                .map(|&r| {
                    r.then(|| {
                        k += 1;
                        k - 1
                    })
                })
                .collect()
        };
        let keep = |s: usize| map[s].expect("reachable");
        Self {
            initial: self.initial.iter().map(|&s| keep(s)).collect(),
            accepting: (0..n).filter(|&s| seen[s]).map(|s| self.accepting[s]).collect(),
            transitions: (0..n)
                .filter(|&s| seen[s])
                .map(|s| {
                    self.transitions[s].iter().map(|t| Transition { to: keep(t.to), guard: t.guard.clone() }).collect()
                })
                .collect(),
        }
    }
}
