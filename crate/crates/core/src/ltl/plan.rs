use super::buchi::to_buchi;
use super::formula::Formula;
use super::lasso::{eval_on_lasso, Lasso, Letter};
use super::product::{find_graph_lasso, LabeledGraph};
use crate::abstraction::{derive_assignment, Labeling, SystemState, TransitionSystem};
use crate::error::{Error, Result};
use crate::navfield::{ActionAssignment, AgentAction};

/// Discrete plan `prefix · cycle^ω` with the action assignment of every step.
/// `steps.prefix[i]` leads from `states.prefix[i]` to the next state; the
/// last cycle step leads back to the first cycle state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub states: Lasso<SystemState>,
    pub steps: Lasso<ActionAssignment>,
}

impl Plan {
    pub fn from_states(states: Lasso<SystemState>) -> Result<Self> {
        if states.cycle.is_empty() {
            return Err(Error::PlanInconsistency("plan cycle is empty".into()));
        }
        let all: Vec<&SystemState> = states.prefix.iter().chain(&states.cycle).collect();
        let k = states.prefix.len();
        let next = |i: usize| if i + 1 < all.len() { i + 1 } else { k };
        let steps: Vec<ActionAssignment> =
            (0..all.len()).map(|i| derive_assignment(all[i], all[next(i)])).collect::<Result<_>>()?;
        let cycle = steps[k..].to_vec();
        let mut prefix = steps;
        prefix.truncate(k);
        Ok(Self { states, steps: Lasso { prefix, cycle } })
    }

    pub fn initial(&self) -> &SystemState {
        self.states.at(0)
    }

    /// Number of steps for the prefix followed by `repetitions` cycles.
    pub fn step_count(&self, repetitions: usize) -> usize {
        self.states.prefix.len() + repetitions * self.states.cycle.len()
    }

    /// Assignment of step `i` in the unrolled plan.
    pub fn step(&self, i: usize) -> &ActionAssignment {
        self.steps.at(i)
    }

    /// States visited by the prefix and `repetitions` cycles, the start state
    /// included.
    pub fn unrolled_states(&self, repetitions: usize) -> Vec<SystemState> {
        (0..=self.step_count(repetitions)).map(|i| self.states.at(i).clone()).collect()
    }

    /// Checks every step against the transition relation.
    pub fn check(&self, ts: &TransitionSystem) -> Result<()> {
        let idx = |s: &SystemState| {
            ts.index_of(s).ok_or_else(|| Error::PlanInconsistency(format!("state {s} is not in the system")))
        };
        if idx(self.initial())? != ts.initial {
            return Err(Error::PlanInconsistency("plan does not start at the initial state".into()));
        }
        let n = self.states.len();
        for i in 0..n {
            let (a, b) = (self.states.at(i), if i + 1 < n { self.states.at(i + 1) } else { &self.states.cycle[0] });
            if !ts.has_edge(idx(a)?, idx(b)?) {
                return Err(Error::PlanInconsistency(format!("no transition {a} -> {b}")));
            }
        }
        Ok(())
    }

    pub fn word(&self, labeling: &Labeling) -> Lasso<Letter> {
        self.states.map(|s| labeling.label(s))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentTrack {
    pub regions: Lasso<usize>,
    pub grasps: Lasso<Option<usize>>,
    pub actions: Lasso<AgentAction>,
    /// services provided at each position
    pub labels: Lasso<Letter>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectTrack {
    pub regions: Lasso<usize>,
    pub labels: Lasso<Letter>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Projection {
    pub agents: Vec<AgentTrack>,
    pub objects: Vec<ObjectTrack>,
}

/// Per-entity region, grasp, action and service sequences of a plan.
pub fn project_plan(plan: &Plan, labeling: &Labeling) -> Projection {
    let s0 = plan.initial();
    let agents = (0..s0.agents())
        .map(|i| AgentTrack {
            regions: plan.states.map(|s| s.agent_regions[i]),
            grasps: plan.states.map(|s| s.grasps[i]),
            actions: plan.steps.map(|a| a.actions[i]),
            labels: plan.states.map(|s| labeling.agent_label(i, s.agent_regions[i])),
        })
        .collect();
    let objects = (0..s0.objects())
        .map(|j| ObjectTrack {
            regions: plan.states.map(|s| s.object_regions[j]),
            labels: plan.states.map(|s| labeling.object_label(j, s.object_regions[j])),
        })
        .collect();
    Projection { agents, objects }
}

/// Searches the product of the system and the formula's automaton. `None`
/// means no run of the system satisfies the formula.
pub fn synthesize(ts: &TransitionSystem, formula: &Formula) -> Result<Option<Plan>> {
    let known = ts.labeling.propositions();
    if let Some(a) = formula.atoms().into_iter().find(|a| !known.contains(a)) {
        return Err(Error::InvalidInput(format!("proposition '{a}' is not provided by any region")));
    }
    let graph = LabeledGraph::from(ts);
    let Some(lasso) = find_graph_lasso(&graph, &to_buchi(formula)) else {
        return Ok(None);
    };
    let plan = Plan::from_states(lasso.map(|&i| ts.states[i].clone()))?;
    let word = plan.word(&ts.labeling);
    if !eval_on_lasso(formula, &word.prefix, &word.cycle)? {
        return Err(Error::PlanInconsistency("synthesized run violates the formula".into()));
    }
    Ok(Some(plan))
}
