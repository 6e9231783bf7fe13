//! Finite abstraction of the coupled system: which region every agent and
//! object occupies and which object (if any) every agent holds.
//!
//! Indices are 0-based in memory. Text output is 1-based, with grasp value 0
//! meaning "holds nothing".

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::navfield::{ActionAssignment, AgentAction};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SystemState {
    pub agent_regions: Vec<usize>,
    pub object_regions: Vec<usize>,
    /// object held by each agent
    pub grasps: Vec<Option<usize>>,
}

fn all_distinct(v: &[usize]) -> bool {
    v.iter().enumerate().all(|(i, a)| !v[..i].contains(a))
}

impl SystemState {
    pub fn new(agent_regions: Vec<usize>, object_regions: Vec<usize>, grasps: Vec<Option<usize>>) -> Self {
        Self { agent_regions, object_regions, grasps }
    }

    pub fn agents(&self) -> usize {
        self.agent_regions.len()
    }

    pub fn objects(&self) -> usize {
        self.object_regions.len()
    }

    /// One agent and one object per region at most, grasped objects co-located with their agent.
    pub fn check(&self, regions: usize) -> Result<()> {
        if self.grasps.len() != self.agent_regions.len() {
            return Err(Error::InvalidState("one grasp value per agent is required".into()));
        }
        if self.agent_regions.iter().chain(&self.object_regions).any(|&k| k >= regions) {
            return Err(Error::InvalidState(format!("{self} refers to a region beyond {regions}")));
        }
        if !all_distinct(&self.agent_regions) {
            return Err(Error::InvalidState(format!("{self}: two agents share a region")));
        }
        if !all_distinct(&self.object_regions) {
            return Err(Error::InvalidState(format!("{self}: two objects share a region")));
        }
        for (i, g) in self.grasps.iter().enumerate() {
            if let Some(j) = *g {
                if j >= self.objects() {
                    return Err(Error::InvalidState(format!("{self}: unknown object {}", j + 1)));
                }
                if self.object_regions[j] != self.agent_regions[i] {
                    return Err(Error::InvalidState(format!(
                        "{self}: agent {} holds object {} in another region",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_valid(&self, regions: usize) -> bool {
        self.check(regions).is_ok()
    }

    /// Agent holding object `j`, if any.
    pub fn holder(&self, j: usize) -> Option<usize> {
        self.grasps.iter().position(|g| *g == Some(j))
    }
}

impl fmt::Display for SystemState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: Vec<String>| v.join(",");
        write!(
            f,
            "({} | {} | {})",
            join(self.agent_regions.iter().map(|k| format!("p{}", k + 1)).collect()),
            join(self.object_regions.iter().map(|k| format!("p{}", k + 1)).collect()),
            join(self.grasps.iter().map(|g| g.map_or(0, |j| j + 1).to_string()).collect()),
        )
    }
}

/// Services offered per region, per agent and per object.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Labeling {
    /// `agents[i][k]`: propositions of agent i in region k
    pub agents: Vec<Vec<BTreeSet<String>>>,
    pub objects: Vec<Vec<BTreeSet<String>>>,
}

impl Labeling {
    pub fn empty(regions: usize, agents: usize, objects: usize) -> Self {
        Self {
            agents: vec![vec![BTreeSet::new(); regions]; agents],
            objects: vec![vec![BTreeSet::new(); regions]; objects],
        }
    }

    /// Rejects propositions shared between two entities.
    pub fn validate(&self) -> Result<()> {
        let mut owner: BTreeMap<&str, String> = BTreeMap::new();
        let entities = self
            .agents
            .iter()
            .enumerate()
            .map(|(i, l)| (format!("agent {}", i + 1), l))
            .chain(self.objects.iter().enumerate().map(|(j, l)| (format!("object {}", j + 1), l)));
        for (name, per_region) in entities {
            for props in per_region {
                for p in props {
                    match owner.get(p.as_str()) {
                        Some(o) if *o != name => {
                            return Err(Error::InvalidInput(format!("proposition {p} is used by both {o} and {name}")))
                        }
                        _ => {
                            owner.insert(p, name.clone());
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn agent_label(&self, agent: usize, region: usize) -> BTreeSet<String> {
        self.agents.get(agent).and_then(|l| l.get(region)).cloned().unwrap_or_default()
    }

    pub fn object_label(&self, object: usize, region: usize) -> BTreeSet<String> {
        self.objects.get(object).and_then(|l| l.get(region)).cloned().unwrap_or_default()
    }

    pub fn label(&self, s: &SystemState) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for (i, &k) in s.agent_regions.iter().enumerate() {
            out.extend(self.agent_label(i, k));
        }
        for (j, &k) in s.object_regions.iter().enumerate() {
            out.extend(self.object_label(j, k));
        }
        out
    }

    pub fn propositions(&self) -> BTreeSet<String> {
        self.agents.iter().chain(&self.objects).flatten().flatten().cloned().collect()
    }
}

/// Sizes of the state space before and after each filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateCounts {
    /// `K^(N+M) (M+1)^N`
    pub raw: usize,
    /// tuples with one agent and one object per region at most
    pub distinct: usize,
    /// additionally every held object shares its agent's region
    pub valid: usize,
}

/// All valid states in lexicographic order, with the counts of each filtering stage.
pub fn enumerate_states(regions: usize, agents: usize, objects: usize) -> Result<(Vec<SystemState>, StateCounts)> {
    if regions < agents || regions < objects {
        return Err(Error::Infeasible(format!(
            "{regions} regions cannot host {agents} agents and {objects} objects one per region"
        )));
    }
    let raw = regions.pow((agents + objects) as u32) * (objects + 1).pow(agents as u32);
    let mut counts = StateCounts { raw, distinct: 0, valid: 0 };
    let mut out = Vec::new();
    let slots = agents + objects;
    let mut places = vec![0usize; slots];
    loop {
        if all_distinct(&places[..agents]) && all_distinct(&places[agents..]) {
            let mut grasp = vec![0usize; agents];
            loop {
                counts.distinct += 1;
                let s = SystemState::new(
                    places[..agents].to_vec(),
                    places[agents..].to_vec(),
                    grasp.iter().map(|&g| g.checked_sub(1)).collect(),
                );
                if s.is_valid(regions) {
                    out.push(s);
                }
                if !odometer(&mut grasp, objects + 1) {
                    break;
                }
            }
        }
        if !odometer(&mut places, regions) {
            break;
        }
    }
    counts.valid = out.len();
    out.sort();
    Ok((out, counts))
}

/// Advances a little-endian counter; false once it wraps around.
fn odometer(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// Options of a single agent in `s`.
fn agent_options(s: &SystemState, i: usize, regions: usize) -> Vec<AgentAction> {
    let k = s.agent_regions[i];
    let mut out = vec![AgentAction::Idle];
    match s.grasps[i] {
        None => {
            for to in (0..regions).filter(|&to| to != k) {
                out.push(AgentAction::Transit { from: k, to });
            }
            for j in 0..s.objects() {
                if s.object_regions[j] == k && s.holder(j).is_none() {
                    out.push(AgentAction::Grasp { object: j });
                }
            }
        }
        Some(j) => {
            out.push(AgentAction::Release { object: j });
            for to in (0..regions).filter(|&to| to != k) {
                out.push(AgentAction::Transport { object: j, from: k, to });
            }
        }
    }
    out
}

/// Applies an assignment without checking the result.
pub fn apply(s: &SystemState, a: &ActionAssignment) -> SystemState {
    let mut next = s.clone();
    for (i, act) in a.actions.iter().enumerate() {
        match *act {
            AgentAction::Idle => {}
            AgentAction::Transit { to, .. } => next.agent_regions[i] = to,
            AgentAction::Transport { object, to, .. } => {
                next.agent_regions[i] = to;
                next.object_regions[object] = to;
            }
            AgentAction::Grasp { object } => next.grasps[i] = Some(object),
            AgentAction::Release { .. } => next.grasps[i] = None,
        }
    }
    next
}

/// Every state reachable in one synchronized step, including the all-idle self-loop.
///
/// `max_concurrent` caps how many agents act at once.
pub fn successors(
    s: &SystemState,
    regions: usize,
    max_concurrent: Option<usize>,
) -> Vec<(SystemState, ActionAssignment)> {
    let n = s.agents();
    let options: Vec<Vec<AgentAction>> = (0..n).map(|i| agent_options(s, i, regions)).collect();
    let cap = max_concurrent.unwrap_or(n);
    let mut out = Vec::new();
    let mut choice = vec![0usize; n];
    loop {
        let actions: Vec<AgentAction> = choice.iter().enumerate().map(|(i, &c)| options[i][c]).collect();
        let acting = actions.iter().filter(|a| **a != AgentAction::Idle).count();
        let assignment = ActionAssignment { actions };
        if acting <= cap && assignment.validate(s.objects()).is_ok() {
            let next = apply(s, &assignment);
            if next.is_valid(regions) {
                out.push((next, assignment));
            }
        }
        // mixed-radix counter over the per-agent options
        let mut i = n;
        loop {
            if i == 0 {
                out.sort();
                return out;
            }
            i -= 1;
            choice[i] += 1;
            if choice[i] < options[i].len() {
                break;
            }
            choice[i] = 0;
        }
    }
}

/// Decomposes a step into per-agent actions.
pub fn derive_assignment(from: &SystemState, to: &SystemState) -> Result<ActionAssignment> {
    let bad = |why: String| Error::PlanInconsistency(format!("{from} -> {to}: {why}"));
    if from.agents() != to.agents() || from.objects() != to.objects() || to.grasps.len() != to.agents() {
        return Err(bad("states have different shapes".into()));
    }
    let mut actions = Vec::with_capacity(from.agents());
    for i in 0..from.agents() {
        let (k, k2) = (from.agent_regions[i], to.agent_regions[i]);
        let act = match (from.grasps[i], to.grasps[i]) {
            (None, None) if k == k2 => AgentAction::Idle,
            (None, None) => AgentAction::Transit { from: k, to: k2 },
            (Some(j), Some(j2)) if j == j2 && k == k2 => AgentAction::Idle,
            (Some(j), Some(j2)) if j == j2 => AgentAction::Transport { object: j, from: k, to: k2 },
            (None, Some(j)) if k == k2 => AgentAction::Grasp { object: j },
            (Some(j), None) if k == k2 => AgentAction::Release { object: j },
            _ => return Err(bad(format!("agent {} changes region and grasp together", i + 1))),
        };
        actions.push(act);
    }
    let assignment = ActionAssignment { actions };
    assignment.validate(from.objects()).map_err(|e| bad(e.to_string()))?;
    let expected = apply(from, &assignment);
    if expected != *to {
        return Err(bad("object positions do not follow the agents".into()));
    }
    Ok(assignment)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSystem {
    pub regions: usize,
    pub states: Vec<SystemState>,
    pub initial: usize,
    /// sorted successor indices per state
    pub edges: Vec<Vec<usize>>,
    pub labeling: Labeling,
    index: BTreeMap<SystemState, usize>,
}

impl TransitionSystem {
    /// Builds the abstraction over all valid states.
    pub fn build(
        regions: usize,
        labeling: Labeling,
        initial: &SystemState,
        max_concurrent: Option<usize>,
    ) -> Result<Self> {
        labeling.validate()?;
        initial.check(regions)?;
        let (states, _) = enumerate_states(regions, initial.agents(), initial.objects())?;
        let index: BTreeMap<SystemState, usize> = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let edges = states
            .iter()
            .map(|s| {
                let mut e: Vec<usize> =
                    successors(s, regions, max_concurrent).into_iter().map(|(t, _)| index[&t]).collect();
                e.sort_unstable();
                e.dedup();
                e
            })
            .collect();
        let initial = index[initial];
        Ok(Self { regions, states, initial, edges, labeling, index })
    }

    pub fn index_of(&self, s: &SystemState) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn label(&self, state: usize) -> BTreeSet<String> {
        self.labeling.label(&self.states[state])
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges[from].binary_search(&to).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    /// One line per edge: `source -> target : actions`.
    pub fn export_edges(&self) -> String {
        let mut out = String::new();
        for (i, succ) in self.edges.iter().enumerate() {
            for &j in succ {
                let a = derive_assignment(&self.states[i], &self.states[j])
                    .map(|a| describe_assignment(&a))
                    .unwrap_or_default();
                out.push_str(&format!("{} -> {} : {}\n", self.states[i], self.states[j], a));
            }
        }
        out
    }
}

/// Human-readable summary such as `a1 transport o1 p1->p2, a2 transit p2->p1`.
pub fn describe_assignment(a: &ActionAssignment) -> String {
    let parts: Vec<String> = a
        .actions
        .iter()
        .enumerate()
        .filter(|(_, x)| **x != AgentAction::Idle)
        .map(|(i, x)| match *x {
            AgentAction::Transit { from, to } => format!("a{} transit p{}->p{}", i + 1, from + 1, to + 1),
            AgentAction::Transport { object, from, to } => {
                format!("a{} transport o{} p{}->p{}", i + 1, object + 1, from + 1, to + 1)
            }
            AgentAction::Grasp { object } => format!("a{} grasp o{}", i + 1, object + 1),
            AgentAction::Release { object } => format!("a{} release o{}", i + 1, object + 1),
            AgentAction::Idle => unreachable!(),
        })
        .collect();
    if parts.is_empty() {
        "idle".into()
    } else {
        parts.join(", ")
    }
}
