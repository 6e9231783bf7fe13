//! Scenario files: workspace, regions, agents, objects, labels, formulas and
//! solver settings in TOML. See `scenarios/README.md` for the schema.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::abstraction::{Labeling, SystemState, TransitionSystem};
use crate::dynamics::{
    AgentModel, AgentParams, GraspCoupling, JointVec, ObjectModel, World, WorldState, STANDARD_GRAVITY,
};
use crate::error::{Error, Result};
use crate::executor::{rest_state, Environment, ExecConfig};
use crate::geometry::{bounding_radius, Pose, Region, Vec3, Workspace, DEFAULT_BOUNDARY_FACTOR};
use crate::ltl::{parse, Formula};
use crate::navfield::NavConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkspaceSpec {
    pub center: [f64; 3],
    pub radius: f64,
    #[serde(default = "default_boundary_factor")]
    pub boundary_factor: f64,
}

fn default_boundary_factor() -> f64 {
    DEFAULT_BOUNDARY_FACTOR
}

fn default_gravity() -> f64 {
    STANDARD_GRAVITY
}

fn default_formula() -> String {
    "true".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub name: String,
    pub center: [f64; 3],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub name: String,
    /// base x (m), base y (m), arm angle (rad)
    pub q: [f64; 3],
    #[serde(default)]
    pub params: AgentParams,
    /// propositions provided per region name
    #[serde(default)]
    pub labels: BTreeMap<String, Vec<String>>,
    #[serde(default = "default_formula")]
    pub formula: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub name: String,
    /// kg
    pub mass: f64,
    /// cube edge (m)
    pub edge: f64,
    /// x, y, z (m), yaw, pitch, roll (rad)
    pub pose: [f64; 6],
    /// agent holding the object at the start
    #[serde(default)]
    pub held_by: Option<String>,
    #[serde(default)]
    pub labels: BTreeMap<String, Vec<String>>,
    #[serde(default = "default_formula")]
    pub formula: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: String,
    /// m/s^2, applied to agents and objects
    #[serde(default = "default_gravity")]
    pub gravity: f64,
    pub workspace: WorkspaceSpec,
    pub regions: Vec<RegionSpec>,
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
    #[serde(default)]
    pub navigation: NavConfig,
    #[serde(default)]
    pub execution: ExecConfig,
}

/// One problem found by validation, with where it was found.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// A validated scenario ready for planning and simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub env: Environment,
    pub initial: WorldState,
    pub initial_discrete: SystemState,
    pub agent_formulas: Vec<Formula>,
    pub object_formulas: Vec<Formula>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    fn region_index(&self, name: &str) -> Option<usize> {
        self.regions.iter().position(|r| r.name == name)
    }

    fn labeling(&self) -> Labeling {
        let table = |labels: &BTreeMap<String, Vec<String>>| {
            self.regions
                .iter()
                .map(|r| labels.get(&r.name).map(|v| v.iter().cloned().collect()).unwrap_or_default())
                .collect::<Vec<BTreeSet<String>>>()
        };
        Labeling {
            agents: self.agents.iter().map(|a| table(&a.labels)).collect(),
            objects: self.objects.iter().map(|o| table(&o.labels)).collect(),
        }
    }

    fn workspace(&self) -> Workspace {
        let regions = self
            .regions
            .iter()
            .enumerate()
            .map(|(id, r)| Region { id, name: r.name.clone(), center: Vec3::from(r.center), radius: r.radius })
            .collect();
        Workspace {
            center: Vec3::from(self.workspace.center),
            radius: self.workspace.radius,
            regions,
            boundary_factor: self.workspace.boundary_factor,
        }
    }

    /// Every problem with the file; empty when the scenario is usable.
    pub fn check(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |location: &str, message: String| out.push(Violation { location: location.into(), message });

        if !(self.gravity >= 0.0 && self.gravity.is_finite()) {
            push("gravity", "must be finite and non-negative".into());
        }
        if !(self.workspace.radius > 0.0) {
            push("workspace", "radius must be positive".into());
        }
        if !(self.workspace.boundary_factor >= 1.0) {
            push("workspace", "boundary_factor must be at least 1".into());
        }
        if self.regions.is_empty() {
            push("regions", "at least one region is required".into());
        }
        if self.agents.is_empty() {
            push("agents", "at least one agent is required".into());
        }
        let mut names = BTreeSet::new();
        for n in self
            .regions
            .iter()
            .map(|r| &r.name)
            .chain(self.agents.iter().map(|a| &a.name))
            .chain(self.objects.iter().map(|o| &o.name))
        {
            if !names.insert(n.clone()) {
                push(n, "name is used more than once".into());
            }
        }
        for v in self.workspace().violations() {
            push("regions", v.to_string());
        }
        if let Err(e) = self.navigation.validate() {
            push("navigation", e.to_string());
        }
        if let Err(e) = self.execution.validate() {
            push("execution", e.to_string());
        }

        let mut models = Vec::new();
        for a in &self.agents {
            let params = AgentParams { gravity: self.gravity, ..a.params.clone() };
            match AgentModel::new(params) {
                Ok(m) => models.push(Some(m)),
                Err(e) => {
                    push(&a.name, e.to_string());
                    models.push(None);
                }
            }
        }
        let mut objects = Vec::new();
        for o in &self.objects {
            match ObjectModel::cube(o.mass, o.edge, self.gravity) {
                Ok(m) => objects.push(Some(m)),
                Err(e) => {
                    push(&o.name, e.to_string());
                    objects.push(None);
                }
            }
        }

        // labels, formulas and their propositions
        let props = self.labeling().propositions();
        let entities = self
            .agents
            .iter()
            .map(|a| (&a.name, &a.labels, &a.formula))
            .chain(self.objects.iter().map(|o| (&o.name, &o.labels, &o.formula)));
        for (name, labels, formula) in entities {
            for region in labels.keys() {
                if self.region_index(region).is_none() {
                    push(name, format!("labels refer to unknown region '{region}'"));
                }
            }
            match parse(formula) {
                Ok(f) => {
                    for a in f.atoms().difference(&props) {
                        push(name, format!("formula uses '{a}', which no region provides"));
                    }
                }
                Err(e) => push(name, format!("formula: {e}")),
            }
        }
        if let Err(e) = self.labeling().validate() {
            push("labels", e.to_string());
        }

        // room for an agent and an object in every region
        let eps = self.navigation.goal_tolerance;
        let agent_r =
            models.iter().flatten().map(|m| bounding_radius(&m.spheres(&JointVec::zeros()))).fold(0.0, f64::max);
        let object_r = objects
            .iter()
            .flatten()
            .map(|m| bounding_radius(&m.spheres(&Pose::from_position(Vec3::zeros()))))
            .fold(0.0, f64::max);
        for r in &self.regions {
            if r.radius < agent_r + object_r + eps {
                push(
                    &r.name,
                    format!(
                        "radius {:.3} m cannot hold an agent ({agent_r:.3} m) and an object ({object_r:.3} m)",
                        r.radius
                    ),
                );
            }
        }

        for o in &self.objects {
            if let Some(h) = &o.held_by {
                if !self.agents.iter().any(|a| &a.name == h) {
                    push(&o.name, format!("held_by names unknown agent '{h}'"));
                }
            }
        }
        let holders: Vec<&String> = self.objects.iter().filter_map(|o| o.held_by.as_ref()).collect();
        for (i, h) in holders.iter().enumerate() {
            if holders[..i].contains(h) {
                push(h, "holds more than one object".into());
            }
        }

        // initial conditions need every model
        if out.is_empty() {
            if let Err(e) = self.build().and_then(|(env, state)| env.check_initial(&state).map(|_| ())) {
                let message = match e {
                    Error::InvalidState(m) => m,
                    other => other.to_string(),
                };
                out.push(Violation { location: "initial state".into(), message });
            }
        }
        out
    }

    /// Runtime objects without validation.
    fn build(&self) -> Result<(Environment, WorldState)> {
        let agents = self
            .agents
            .iter()
            .map(|a| AgentModel::new(AgentParams { gravity: self.gravity, ..a.params.clone() }))
            .collect::<Result<Vec<_>>>()?;
        let objects =
            self.objects.iter().map(|o| ObjectModel::cube(o.mass, o.edge, self.gravity)).collect::<Result<Vec<_>>>()?;
        let world = World { agents, objects };
        let qs: Vec<JointVec> = self.agents.iter().map(|a| JointVec::from(a.q)).collect();
        let poses: Vec<Pose> = self.objects.iter().map(|o| Pose::from_slice(&o.pose)).collect::<Result<_>>()?;
        let mut state = rest_state(&qs, &poses);
        for (j, o) in self.objects.iter().enumerate() {
            let Some(h) = &o.held_by else { continue };
            let i = self
                .agents
                .iter()
                .position(|a| &a.name == h)
                .ok_or_else(|| Error::InvalidInput(format!("unknown agent '{h}'")))?;
            let model = &world.agents[i];
            let reach = (model.end_effector(&qs[i]) - poses[j].position).norm();
            if reach > self.execution.grasp_reach {
                return Err(Error::InvalidState(format!(
                    "{} is {reach:.3} m from the end-effector of {h}, beyond the grasp reach",
                    o.name
                )));
            }
            state.grasps.push(GraspCoupling::snap(i, j, model, &qs[i], &poses[j]));
        }
        world.sync_grasped(&mut state);
        let env = Environment {
            world,
            workspace: self.workspace(),
            labeling: self.labeling(),
            nav: self.navigation.clone(),
            exec: self.execution.clone(),
        };
        Ok((env, state))
    }
}

impl Scenario {
    pub fn from_file(file: ScenarioFile) -> Result<Self> {
        let violations = file.check();
        if !violations.is_empty() {
            let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(Error::InvalidInput(list.join("; ")));
        }
        let (env, initial) = file.build()?;
        let initial_discrete = env.check_initial(&initial)?;
        let agent_formulas = file.agents.iter().map(|a| parse(&a.formula)).collect::<Result<_>>()?;
        let object_formulas = file.objects.iter().map(|o| parse(&o.formula)).collect::<Result<_>>()?;
        Ok(Self { file, env, initial, initial_discrete, agent_formulas, object_formulas })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_file(ScenarioFile::parse(text)?)
    }

    /// Conjunction of every agent's and object's formula.
    pub fn global_formula(&self) -> Formula {
        Formula::conjunction(self.agent_formulas.iter().chain(&self.object_formulas).cloned())
    }

    pub fn transition_system(&self) -> Result<TransitionSystem> {
        TransitionSystem::build(
            self.env.workspace.regions.len(),
            self.env.labeling.clone(),
            &self.initial_discrete,
            None,
        )
    }

    pub fn agent_names(&self) -> Vec<String> {
        self.file.agents.iter().map(|a| a.name.clone()).collect()
    }

    pub fn object_names(&self) -> Vec<String> {
        self.file.objects.iter().map(|o| o.name.clone()).collect()
    }

    pub fn region_names(&self) -> Vec<String> {
        self.file.regions.iter().map(|r| r.name.clone()).collect()
    }
}
