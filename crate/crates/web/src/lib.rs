//! Browser bindings for the demo page. Every operation takes the scenario as
//! TOML text; results are JSON or TOML strings.

use cotransport::commands::plan_scenario;
use cotransport::executor::{run_round, BehaviorLog, Execution, Trajectory};
use cotransport::navfield::{ActionAssignment, AgentAction, NavField};
use cotransport::planfile::PlanFile;
use cotransport::report::round_summary;
use cotransport::scenario::Scenario;
use cotransport::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct RegionView {
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub r: f64,
}

#[derive(Debug, Serialize)]
pub struct SceneView {
    pub x: f64,
    pub y: f64,
    pub r: f64,
    pub regions: Vec<RegionView>,
    pub agents: Vec<String>,
    /// initial base position of each agent
    pub starts: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize)]
pub struct Heatmap {
    pub n: usize,
    /// square sampled, `[x_min, y_min, side]`
    pub extent: [f64; 3],
    /// row-major, first row at the largest y; contact and outside count as 1
    pub phi: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct PathView {
    pub entity: String,
    pub kind: String,
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize)]
pub struct RunView {
    pub success: bool,
    pub summary: String,
    pub paths: Vec<PathView>,
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string(v).map_err(|e| Error::Format(e.to_string()))
}

pub fn scene(scenario: &str) -> Result<SceneView> {
    let s = Scenario::parse(scenario)?;
    let ws = &s.env.workspace;
    Ok(SceneView {
        x: ws.center.x,
        y: ws.center.y,
        r: ws.radius,
        regions: ws
            .regions
            .iter()
            .map(|r| RegionView { name: r.name.clone(), x: r.center.x, y: r.center.y, r: r.radius })
            .collect(),
        agents: s.agent_names(),
        starts: s.initial.agents.iter().map(|a| [a.q[0], a.q[1]]).collect(),
    })
}

/// Navigation function seen by `agent` when sent to region `target` while
/// every other body stays where it starts, sampled over base positions with
/// the arm angle held at its initial value.
pub fn heatmap(scenario: &str, agent: usize, target: usize, n: usize) -> Result<Heatmap> {
    let s = Scenario::parse(scenario)?;
    if agent >= s.initial.agents.len() || target >= s.env.workspace.regions.len() || n < 2 {
        return Err(Error::InvalidInput("agent, region or resolution out of range".into()));
    }
    let from = s.initial_discrete.agent_regions[agent];
    let mut assignment = ActionAssignment::idle(s.initial.agents.len());
    assignment.actions[agent] = match s.initial_discrete.grasps[agent] {
        Some(object) => AgentAction::Transport { object, from, to: target },
        None => AgentAction::Transit { from, to: target },
    };
    let field = NavField::for_assignment(&s.env.world, &s.env.workspace, &s.initial, &assignment, &s.env.nav)?;
    let ws = &s.env.workspace;
    let side = 2.0 * ws.radius;
    let (x0, y0) = (ws.center.x - ws.radius, ws.center.y - ws.radius);
    let mut q = s.initial.agents[agent].q;
    let mut phi = Vec::with_capacity(n * n);
    for row in 0..n {
        let y = y0 + side * (n - 1 - row) as f64 / (n - 1) as f64;
        for col in 0..n {
            q[0] = x0 + side * col as f64 / (n - 1) as f64;
            q[1] = y;
            phi.push(field.evaluate(&[q]).map_or(1.0, |e| e.phi.clamp(0.0, 1.0)));
        }
    }
    Ok(Heatmap { n, extent: [x0, y0, side], phi })
}

/// Plan file text for the scenario's formulas.
pub fn plan(scenario: &str) -> Result<String> {
    let s = Scenario::parse(scenario)?;
    let plan = plan_scenario(&s)?.ok_or_else(|| Error::Infeasible("no run satisfies the formulas".into()))?;
    PlanFile::from_plan(&plan, &s).to_toml()
}

/// Synthesizes a plan and simulates its first `steps` rounds.
pub fn simulate(scenario: &str, steps: usize) -> Result<RunView> {
    let s = Scenario::parse(scenario)?;
    let plan = plan_scenario(&s)?.ok_or_else(|| Error::Infeasible("no run satisfies the formulas".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(s.env.exec.seed);
    let mut trace = Trajectory::default();
    let mut state = s.initial.clone();
    let mut log = BehaviorLog::default();
    let mut failure = None;
    for k in 0..steps.max(1) {
        let r = run_round(&s.env, plan.step(k), &state, k + 1, &mut rng, Some(&mut trace))?;
        state = r.final_state.clone();
        if let Some(reason) = r.failure.clone() {
            failure = Some(Error::RoundFailure { round: k + 1, reason });
        }
        log.rounds.push(r);
        if failure.is_some() {
            break;
        }
    }
    let success = failure.is_none();
    let execution = Execution { log, final_state: state, failure };
    let mut paths: Vec<PathView> = Vec::new();
    for row in &trace.rows {
        let p = [row.x[0], row.x[1]];
        match paths.iter_mut().find(|v| v.entity == row.entity) {
            Some(v) => v.points.push(p),
            None => paths.push(PathView { entity: row.entity.clone(), kind: row.kind.into(), points: vec![p] }),
        }
    }
    Ok(RunView { success, summary: round_summary(&plan, &execution), paths })
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = scene)]
pub fn scene_js(scenario: &str) -> std::result::Result<String, JsError> {
    js(scene(scenario).and_then(|v| to_json(&v)))
}

#[wasm_bindgen(js_name = heatmap)]
pub fn heatmap_js(scenario: &str, agent: usize, target: usize, n: usize) -> std::result::Result<String, JsError> {
    js(heatmap(scenario, agent, target, n).and_then(|v| to_json(&v)))
}

#[wasm_bindgen(js_name = plan)]
pub fn plan_js(scenario: &str) -> std::result::Result<String, JsError> {
    js(plan(scenario))
}

#[wasm_bindgen(js_name = simulate)]
pub fn simulate_js(scenario: &str, steps: usize) -> std::result::Result<String, JsError> {
    js(simulate(scenario, steps).and_then(|v| to_json(&v)))
}
