//! Plan files: the prefix and cycle of a plan as TOML, with 1-based region,
//! object and agent numbers and per-entity projections for reading.

use serde::{Deserialize, Serialize};

use crate::abstraction::{describe_assignment, Labeling, SystemState};
use crate::error::{Error, Result};
use crate::ltl::{eval_on_lasso, parse, project_plan, Lasso, Letter, Plan};
use crate::navfield::AgentAction;
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateEntry {
    /// region of each agent
    pub agents: Vec<usize>,
    /// region of each object
    pub objects: Vec<usize>,
    /// object held by each agent, 0 for none
    pub grasps: Vec<usize>,
    /// propositions true in this state
    #[serde(default)]
    pub labels: Vec<String>,
    /// actions leading to the next state
    #[serde(default)]
    pub next: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityTrack {
    pub name: String,
    pub prefix: Vec<String>,
    pub cycle: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanFile {
    #[serde(default)]
    pub scenario: String,
    /// conjunction of all entity formulas
    pub formula: String,
    #[serde(default)]
    pub prefix: Vec<StateEntry>,
    pub cycle: Vec<StateEntry>,
    #[serde(default)]
    pub agents: Vec<EntityTrack>,
    #[serde(default)]
    pub objects: Vec<EntityTrack>,
}

fn entry(s: &SystemState, labeling: &Labeling, next: String) -> StateEntry {
    StateEntry {
        agents: s.agent_regions.iter().map(|k| k + 1).collect(),
        objects: s.object_regions.iter().map(|k| k + 1).collect(),
        grasps: s.grasps.iter().map(|g| g.map_or(0, |j| j + 1)).collect(),
        labels: labeling.label(s).into_iter().collect(),
        next,
    }
}

fn state(e: &StateEntry) -> Result<SystemState> {
    let zero_based = |v: &[usize], what: &str| {
        v.iter()
            .map(|&k| k.checked_sub(1).ok_or_else(|| Error::Format(format!("{what} numbers start at 1"))))
            .collect::<Result<Vec<_>>>()
    };
    Ok(SystemState::new(
        zero_based(&e.agents, "region")?,
        zero_based(&e.objects, "region")?,
        e.grasps.iter().map(|&g| g.checked_sub(1)).collect(),
    ))
}

fn action_text(a: &AgentAction) -> String {
    match *a {
        AgentAction::Idle => "idle".into(),
        AgentAction::Transit { to, .. } => format!("transit p{}", to + 1),
        AgentAction::Transport { object, to, .. } => format!("transport o{} p{}", object + 1, to + 1),
        AgentAction::Grasp { object } => format!("grasp o{}", object + 1),
        AgentAction::Release { object } => format!("release o{}", object + 1),
    }
}

fn letter_text(l: &Letter) -> String {
    let v: Vec<&str> = l.iter().map(String::as_str).collect();
    format!("{{{}}}", v.join(","))
}

fn track(name: &str, regions: &Lasso<usize>, extra: Lasso<String>, labels: &Lasso<Letter>) -> EntityTrack {
    let text = |i: usize| format!("p{} {} {}", regions.at(i) + 1, extra.at(i), letter_text(labels.at(i)));
    let k = regions.prefix.len();
    EntityTrack { name: name.into(), prefix: (0..k).map(text).collect(), cycle: (k..regions.len()).map(text).collect() }
}

impl PlanFile {
    pub fn from_plan(plan: &Plan, scenario: &Scenario) -> Self {
        let labeling = &scenario.env.labeling;
        let k = plan.states.prefix.len();
        let entries: Vec<StateEntry> = (0..plan.states.len())
            .map(|i| entry(plan.states.at(i), labeling, describe_assignment(plan.step(i))))
            .collect();
        let (prefix, cycle) = (entries[..k].to_vec(), entries[k..].to_vec());
        let proj = project_plan(plan, labeling);
        let agents = proj
            .agents
            .iter()
            .zip(scenario.agent_names())
            .map(|(t, name)| track(&name, &t.regions, t.actions.map(action_text), &t.labels))
            .collect();
        let objects = proj
            .objects
            .iter()
            .zip(scenario.object_names())
            .map(|(t, name)| track(&name, &t.regions, t.regions.map(|_| "-".to_string()), &t.labels))
            .collect();
        Self {
            scenario: scenario.file.name.clone(),
            formula: scenario.global_formula().to_string(),
            prefix,
            cycle,
            agents,
            objects,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    /// The plan described by the state listing; the descriptive fields are
    /// not consulted.
    pub fn plan(&self) -> Result<Plan> {
        let prefix = self.prefix.iter().map(state).collect::<Result<_>>()?;
        let cycle = self.cycle.iter().map(state).collect::<Result<_>>()?;
        Plan::from_states(Lasso::new(prefix, cycle)?)
    }

    /// Rebuilds the plan and checks it against the scenario: every step is a
    /// transition of its system, the plan starts in the scenario's initial
    /// state and its label word satisfies the scenario's formula.
    pub fn load(&self, scenario: &Scenario) -> Result<Plan> {
        let plan = self.plan()?;
        let ts = scenario.transition_system()?;
        plan.check(&ts)?;
        let global = scenario.global_formula();
        if parse(&self.formula)? != global {
            return Err(Error::PlanInconsistency(format!(
                "plan was made for '{}', the scenario asks for '{global}'",
                self.formula
            )));
        }
        let word = plan.word(&scenario.env.labeling);
        if !eval_on_lasso(&global, &word.prefix, &word.cycle)? {
            return Err(Error::PlanInconsistency("plan does not satisfy the scenario formula".into()));
        }
        Ok(plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entry_numbers_are_one_based() {
        let s = SystemState::new(vec![0, 1], vec![0], vec![Some(0), None]);
        let e = entry(&s, &Labeling { agents: vec![vec![]; 2], objects: vec![vec![]] }, String::new());
        assert_eq!((e.agents.clone(), e.objects.clone(), e.grasps.clone()), (vec![1, 2], vec![1], vec![1, 0]));
        assert_eq!(state(&e).unwrap(), s);
    }

    #[test]
    fn region_zero_is_rejected() {
        let e = StateEntry { agents: vec![0], objects: vec![], grasps: vec![0], labels: vec![], next: String::new() };
        assert!(matches!(state(&e), Err(Error::Format(_))));
    }
}
