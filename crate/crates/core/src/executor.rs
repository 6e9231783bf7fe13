//! Plan execution: one round per plan step, with the navigation field driving
//! movers, timed grasp and release events, and safety bookkeeping.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::abstraction::{Labeling, SystemState};
use crate::dynamics::{AgentState, GraspCoupling, JointVec, ObjectState, World, WorldState};
use crate::error::{Error, Result};
use crate::geometry::{in_region, min_clearance, Pose, Sphere, Workspace};
use crate::ltl::{Letter, Plan};
use crate::navfield::{
    control_transition, control_transport, standoff_point, ActionAssignment, AgentAction, GoalPoint, Mover, NavConfig,
    NavField,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecConfig {
    /// s
    pub dt: f64,
    /// simulated seconds allowed per round
    pub timeout: f64,
    /// s
    pub grasp_dwell: f64,
    /// end-effector to object distance required before a grasp (m)
    pub grasp_reach: f64,
    /// trajectory sampling interval in steps
    pub record_every: usize,
    pub seed: u64,
    /// largest per-step increase of V not counted as a violation
    pub lyapunov_tolerance: f64,
}

impl Default for ExecConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            timeout: 120.0,
            grasp_dwell: 1.0,
            grasp_reach: 0.3,
            record_every: 50,
            seed: 0,
            lyapunov_tolerance: 1e-6,
        }
    }
}

impl ExecConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.dt > 0.0
            && self.dt.is_finite()
            && self.timeout > 0.0
            && self.grasp_dwell >= 0.0
            && self.grasp_reach > 0.0
            && self.record_every > 0
            && self.lyapunov_tolerance >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput("executor settings out of range".into()))
        }
    }
}

/// Everything a round needs besides the state.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub world: World,
    pub workspace: Workspace,
    pub labeling: Labeling,
    pub nav: NavConfig,
    pub exec: ExecConfig,
}

impl Environment {
    pub fn agent_spheres(&self, state: &WorldState, i: usize) -> Vec<Sphere> {
        self.world.agents[i].spheres(&state.agents[i].q)
    }

    pub fn object_spheres(&self, state: &WorldState, j: usize) -> Vec<Sphere> {
        self.world.objects[j].spheres(&state.objects[j].pose)
    }

    /// Discrete state of a continuous one: each entity must lie inside a region.
    pub fn recover(&self, state: &WorldState) -> Result<SystemState> {
        let eps = self.nav.goal_tolerance;
        let locate = |spheres: &[Sphere], what: String| {
            self.workspace
                .regions
                .iter()
                .position(|r| in_region(spheres, r, eps))
                .ok_or_else(|| Error::InvalidState(format!("{what} is not inside any region")))
        };
        let agents = (0..self.world.agents.len())
            .map(|i| locate(&self.agent_spheres(state, i), format!("agent {}", i + 1)))
            .collect::<Result<Vec<_>>>()?;
        let objects = (0..self.world.objects.len())
            .map(|j| locate(&self.object_spheres(state, j), format!("object {}", j + 1)))
            .collect::<Result<Vec<_>>>()?;
        let grasps = (0..agents.len()).map(|i| state.grasp_of_agent(i).map(|c| c.object)).collect();
        let s = SystemState::new(agents, objects, grasps);
        s.check(self.workspace.regions.len())?;
        Ok(s)
    }

    /// Smallest gap between distinct bodies; a carrier and its load count as one.
    pub fn min_clearance(&self, state: &WorldState) -> f64 {
        let n = self.world.agents.len();
        let mut bodies: Vec<(Vec<Sphere>, Option<usize>)> =
            (0..n).map(|i| (self.agent_spheres(state, i), Some(i))).collect();
        for j in 0..self.world.objects.len() {
            bodies.push((self.object_spheres(state, j), state.grasp_of_object(j).map(|c| c.agent)));
        }
        let mut best = f64::INFINITY;
        for a in 0..bodies.len() {
            for b in a + 1..bodies.len() {
                if b >= n && a < n && bodies[b].1 == Some(a) {
                    continue;
                }
                if let Ok(c) = min_clearance(&bodies[a].0, &bodies[b].0) {
                    best = best.min(c);
                }
            }
        }
        best
    }

    /// Initial conditions of a run: agents at rest, disjoint bodies, every
    /// entity inside a region with at most one agent and one object per region.
    pub fn check_initial(&self, state: &WorldState) -> Result<SystemState> {
        self.world.validate(state)?;
        if state.agents.iter().any(|a| a.qd.norm() != 0.0) {
            return Err(Error::InvalidState("agents must start at rest".into()));
        }
        if state.objects.iter().any(|o| o.twist.norm() != 0.0) {
            return Err(Error::InvalidState("objects must start at rest".into()));
        }
        if !(self.min_clearance(state) > 0.0) {
            return Err(Error::InvalidState("bodies overlap in the initial state".into()));
        }
        self.recover(state)
    }
}

/// One sampled row of the trajectory log.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub round: usize,
    pub entity: String,
    pub kind: &'static str,
    /// agents: q then q_dot; objects: position then yaw, pitch, roll
    pub x: [f64; 6],
    pub phi: f64,
    pub lyapunov: f64,
    pub min_clearance: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub rows: Vec<TraceRow>,
}

impl Trajectory {
    fn sample(&mut self, state: &WorldState, round: usize, phi: f64, lyapunov: f64, clearance: f64) {
        for (i, a) in state.agents.iter().enumerate() {
            let x = [a.q[0], a.q[1], a.q[2], a.qd[0], a.qd[1], a.qd[2]];
            self.rows.push(TraceRow {
                t: state.time,
                round,
                entity: format!("a{}", i + 1),
                kind: "agent",
                x,
                phi,
                lyapunov,
                min_clearance: clearance,
            });
        }
        for (j, o) in state.objects.iter().enumerate() {
            self.rows.push(TraceRow {
                t: state.time,
                round,
                entity: format!("o{}", j + 1),
                kind: "object",
                x: o.pose.to_array(),
                phi,
                lyapunov,
                min_clearance: clearance,
            });
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundDiagnostics {
    pub steps: usize,
    pub min_clearance: f64,
    pub max_phi: f64,
    /// steps where V rose by more than the tolerance
    pub lyapunov_violations: usize,
    pub max_lyapunov_increase: f64,
    pub forbidden_entries: usize,
    pub kappa: f64,
    pub kicks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundResult {
    pub step: usize,
    pub success: bool,
    /// synchronized end of the round, the latest completion time
    pub completion_time: f64,
    /// per agent, when its action completed; `None` for idle agents
    pub agent_completion: Vec<Option<f64>>,
    pub final_state: WorldState,
    pub diagnostics: RoundDiagnostics,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Approach,
    Dwell { since: f64 },
    Done,
}

struct Handler {
    agent: usize,
    object: usize,
    grasp: bool,
    phase: Phase,
    approach: Option<NavField>,
}

/// Checks that `assignment` can start from `s`.
fn check_preconditions(s: &SystemState, assignment: &ActionAssignment) -> Result<()> {
    let fail = |i: usize, what: &str| Err(Error::PlanInconsistency(format!("agent {}: {what}", i + 1)));
    for (i, a) in assignment.actions.iter().enumerate() {
        match *a {
            AgentAction::Idle => {}
            AgentAction::Transit { from, .. } => {
                if s.agent_regions[i] != from || s.grasps[i].is_some() {
                    return fail(i, "transit must start empty-handed in its source region");
                }
            }
            AgentAction::Transport { object, from, .. } => {
                if s.agent_regions[i] != from || s.grasps[i] != Some(object) {
                    return fail(i, "transport must start holding the object in its source region");
                }
            }
            AgentAction::Grasp { object } => {
                if s.grasps[i].is_some() || s.holder(object).is_some() || s.object_regions[object] != s.agent_regions[i]
                {
                    return fail(i, "grasp needs a free agent and a free object in the same region");
                }
            }
            AgentAction::Release { object } => {
                if s.grasps[i] != Some(object) {
                    return fail(i, "release needs the object in hand");
                }
            }
        }
    }
    Ok(())
}

struct Sample {
    phi: f64,
    grad_norm: f64,
    lyapunov: f64,
}

fn sample_field(env: &Environment, field: Option<&NavField>, state: &WorldState) -> Result<Sample> {
    let Some(field) = field else {
        return Ok(Sample { phi: 0.0, grad_norm: 0.0, lyapunov: 0.0 });
    };
    let e = field.evaluate(&field.configuration(state))?;
    let ke: f64 =
        field.movers.iter().map(|m| state.agents[m.agent].kinetic_energy(&env.world.terms(state, m.agent).b)).sum();
    Ok(Sample { phi: e.phi, grad_norm: e.grad_norm(), lyapunov: env.nav.potential_gain * e.phi + ke })
}

fn mover_spheres(m: &Mover, q: &JointVec) -> Vec<Sphere> {
    m.spheres(q).into_iter().map(|(s, _)| s).collect()
}

fn mover_done(env: &Environment, m: &Mover, state: &WorldState, target: usize) -> bool {
    let a = &state.agents[m.agent];
    let region = &env.workspace.regions[target];
    a.qd.norm() < env.nav.rate_tolerance && in_region(&mover_spheres(m, &a.q), region, env.nav.goal_tolerance)
}

/// Integrates one plan step until every action has completed.
///
/// Transit and transport agents follow the navigation field; grasping agents
/// first approach the object under their own field, then hold still for the
/// dwell time before the grasp is attached. Releasing agents hold still for
/// the dwell time. All other agents compensate gravity and damp their motion.
pub fn run_round(
    env: &Environment,
    assignment: &ActionAssignment,
    start: &WorldState,
    step: usize,
    rng: &mut impl Rng,
    mut trace: Option<&mut Trajectory>,
) -> Result<RoundResult> {
    env.exec.validate()?;
    env.world.validate(start)?;
    let discrete = env.recover(start)?;
    check_preconditions(&discrete, assignment)?;

    let n = env.world.agents.len();
    let has_movers = assignment.actions.iter().any(|a| a.is_motion());
    let mut field = if has_movers {
        Some(NavField::for_assignment(&env.world, &env.workspace, start, assignment, &env.nav)?)
    } else {
        None
    };
    let targets: Vec<usize> = assignment
        .actions
        .iter()
        .filter_map(|a| match *a {
            AgentAction::Transit { to, .. } | AgentAction::Transport { to, .. } => Some(to),
            _ => None,
        })
        .collect();

    let mut handlers = Vec::new();
    for (i, a) in assignment.actions.iter().enumerate() {
        let (object, grasp) = match *a {
            AgentAction::Grasp { object } => (object, true),
            AgentAction::Release { object } => (object, false),
            _ => continue,
        };
        let approach = if grasp {
            let model = env.world.agents[i].clone();
            let q = start.agents[i].q;
            let p = start.objects[object].pose.position;
            let target = standoff_point(&p, &model.base_center(&q), env.nav.standoff);
            let region = discrete.agent_regions[i];
            let forbidden =
                env.workspace.regions.iter().enumerate().filter(|(k, _)| *k != region).map(|(_, r)| r.ball()).collect();
            let mover = Mover {
                agent: i,
                model,
                carried: None,
                goal_point: GoalPoint::EndEffector,
                target,
                forbidden,
                departure: None,
            };
            let statics = env.object_spheres(start, object);
            Some(NavField::new(vec![mover], statics, &env.workspace, &env.nav)?)
        } else {
            None
        };
        let phase = if grasp { Phase::Approach } else { Phase::Dwell { since: start.time } };
        handlers.push(Handler { agent: i, object, grasp, phase, approach });
    }

    let dt = env.exec.dt;
    let gain = env.nav.damping_gain;
    let c = env.nav.potential_gain;
    let t0 = start.time;
    let mut state = start.clone();
    let mut completion: Vec<Option<f64>> = vec![None; n];
    let mut diag = RoundDiagnostics {
        steps: 0,
        min_clearance: env.min_clearance(&state),
        max_phi: 0.0,
        lyapunov_violations: 0,
        max_lyapunov_increase: f64::NEG_INFINITY,
        forbidden_entries: 0,
        kappa: field.as_ref().map_or(env.nav.kappa, |f| f.kappa),
        kicks: 0,
    };
    let mut sample = sample_field(env, field.as_ref(), &state)?;
    diag.max_phi = sample.phi;
    let mut stalled_since: Option<f64> = None;
    if let Some(tr) = trace.as_deref_mut() {
        tr.sample(&state, step, sample.phi, sample.lyapunov, diag.min_clearance);
    }

    let finish = |state: WorldState, diag: RoundDiagnostics, completion: Vec<Option<f64>>, failure: Option<String>| {
        let t_bar = completion.iter().flatten().fold(t0, |a, &b| a.max(b));
        RoundResult {
            step,
            success: failure.is_none(),
            completion_time: if failure.is_none() { t_bar } else { state.time },
            agent_completion: completion,
            final_state: state,
            diagnostics: diag,
            failure,
        }
    };

    loop {
        // completion bookkeeping
        let mut all_done = true;
        if let Some(f) = &field {
            for (m, &target) in f.movers.iter().zip(&targets) {
                if mover_done(env, m, &state, target) {
                    completion[m.agent].get_or_insert(state.time);
                } else {
                    completion[m.agent] = None;
                    all_done = false;
                }
            }
        }
        for h in &handlers {
            if h.phase == Phase::Done {
                completion[h.agent].get_or_insert(state.time);
            } else {
                all_done = false;
            }
        }
        if all_done {
            if let Some(tr) = trace.as_deref_mut() {
                if !diag.steps.is_multiple_of(env.exec.record_every) {
                    tr.sample(&state, step, sample.phi, sample.lyapunov, diag.min_clearance);
                }
            }
            return Ok(finish(state, diag, completion, None));
        }
        if state.time - t0 >= env.exec.timeout - 0.5 * dt {
            let reason = format!("timed out after {:.1} s", state.time - t0);
            return Ok(finish(state, diag, completion, Some(reason)));
        }

        // saddle escape: a stalled configuration away from the goal
        if let Some(f) = field.as_mut() {
            let slow = f.movers.iter().all(|m| state.agents[m.agent].qd.norm() < env.nav.rate_tolerance);
            let pending = f.movers.iter().zip(&targets).any(|(m, &k)| !mover_done(env, m, &state, k));
            if slow && pending && sample.grad_norm < env.nav.saddle_gradient {
                let since = *stalled_since.get_or_insert(state.time);
                if state.time - since >= env.nav.saddle_dwell {
                    f.kappa = (f.kappa + env.nav.kappa_increment).min(env.nav.kappa_cap);
                    diag.kappa = f.kappa;
                    for m in &f.movers {
                        let mut v = JointVec::from_fn(|_, _| rng.random_range(-1.0..1.0));
                        if v.norm() == 0.0 {
                            v = JointVec::x();
                        }
                        state.agents[m.agent].qd += env.nav.saddle_kick * v.normalize();
                    }
                    env.world.sync_grasped(&mut state);
                    diag.kicks += 1;
                    stalled_since = None;
                    // the kick adds energy; V is compared from here on
                    sample = sample_field(env, field.as_ref(), &state)?;
                }
            } else {
                stalled_since = None;
            }
        }

        let handler_phase: Vec<Option<(Phase, Option<&NavField>)>> =
            (0..n).map(|i| handlers.iter().find(|h| h.agent == i).map(|h| (h.phase, h.approach.as_ref()))).collect();
        let control = |s: &WorldState| -> Result<Vec<JointVec>> {
            let mut tau: Vec<JointVec> = (0..n).map(|i| env.world.terms(s, i).g - gain * s.agents[i].qd).collect();
            if let Some(f) = &field {
                let e = f.evaluate(&f.configuration(s))?;
                for (m, g) in f.movers.iter().zip(&e.grad) {
                    let a = &s.agents[m.agent];
                    tau[m.agent] = match &m.carried {
                        Some(cb) => control_transport(
                            &m.model,
                            a,
                            &env.world.objects[cb.coupling.object],
                            s.grasp_of_agent(m.agent),
                            g,
                            gain,
                            c,
                        )?,
                        None => control_transition(&m.model, a, g, gain, c),
                    };
                }
            }
            for (i, hp) in handler_phase.iter().enumerate() {
                if let Some((Phase::Approach, Some(af))) = hp {
                    let e = af.evaluate(&af.configuration(s))?;
                    tau[i] = control_transition(&env.world.agents[i], &s.agents[i], &e.grad[0], gain, c);
                }
            }
            Ok(tau)
        };
        let next = match env.world.step_closed_loop(&state, dt, control) {
            Ok(s) => s,
            Err(Error::SingularField(msg)) => {
                let reason = format!("contact during integration: {msg}");
                return Ok(finish(state, diag, completion, Some(reason)));
            }
            Err(e) => return Err(e),
        };
        state = next;
        diag.steps += 1;

        // discrete grasp and release events
        for h in &mut handlers {
            let a = &state.agents[h.agent];
            match h.phase {
                Phase::Approach => {
                    let model = &env.world.agents[h.agent];
                    let reach = (model.end_effector(&a.q) - state.objects[h.object].pose.position).norm();
                    if reach <= env.exec.grasp_reach && a.qd.norm() < env.nav.rate_tolerance {
                        h.phase = Phase::Dwell { since: state.time };
                    }
                }
                Phase::Dwell { since } if state.time - since >= env.exec.grasp_dwell - 0.5 * dt => {
                    if h.grasp {
                        let model = &env.world.agents[h.agent];
                        let pose = state.objects[h.object].pose;
                        state.grasps.push(GraspCoupling::snap(h.agent, h.object, model, &a.q, &pose));
                        state.objects[h.object].twist = Default::default();
                    } else {
                        state.grasps.retain(|g| g.agent != h.agent);
                        let pose = state.objects[h.object].pose;
                        state.objects[h.object] = ObjectState::at_rest(pose);
                    }
                    h.phase = Phase::Done;
                }
                _ => {}
            }
        }

        if let Some(f) = field.as_mut() {
            let qs = f.configuration(&state);
            f.update_departures(&qs);
        }

        // safety and Lyapunov bookkeeping
        let prev_v = sample.lyapunov;
        sample = match sample_field(env, field.as_ref(), &state) {
            Ok(s) => s,
            Err(Error::SingularField(msg)) => {
                return Ok(finish(state, diag, completion, Some(format!("contact: {msg}"))));
            }
            Err(e) => return Err(e),
        };
        let clearance = env.min_clearance(&state);
        diag.min_clearance = diag.min_clearance.min(clearance);
        diag.max_phi = diag.max_phi.max(sample.phi);
        let increase = sample.lyapunov - prev_v;
        diag.max_lyapunov_increase = diag.max_lyapunov_increase.max(increase);
        if increase > env.exec.lyapunov_tolerance {
            diag.lyapunov_violations += 1;
        }
        if let Some(f) = &field {
            for m in &f.movers {
                let sp = mover_spheres(m, &state.agents[m.agent].q);
                if m.forbidden.iter().any(|b| sp.iter().any(|s| s.clearance(b) <= 0.0)) {
                    diag.forbidden_entries += 1;
                }
            }
        }
        if let Some(tr) = trace.as_deref_mut() {
            if diag.steps.is_multiple_of(env.exec.record_every) {
                tr.sample(&state, step, sample.phi, sample.lyapunov, clearance);
            }
        }
        let failure = if !(clearance > 0.0) {
            Some(format!("bodies touched (clearance {clearance:.3e} m)"))
        } else if field.is_some() && !(sample.phi < 1.0) {
            Some("navigation value reached 1".to_string())
        } else if diag.forbidden_entries > 0 {
            Some("a mover entered a forbidden region".to_string())
        } else {
            None
        };
        if failure.is_some() {
            return Ok(finish(state, diag, completion, failure));
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorEntry<T> {
    pub t: f64,
    pub config: T,
    /// services provided in the occupied region
    pub services: Letter,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BehaviorLog {
    pub agents: Vec<Vec<BehaviorEntry<JointVec>>>,
    pub objects: Vec<Vec<BehaviorEntry<Pose>>>,
    pub rounds: Vec<RoundResult>,
    /// discrete state recovered at each round boundary, the start included
    pub boundaries: Vec<SystemState>,
}

impl BehaviorLog {
    fn record(&mut self, env: &Environment, state: &WorldState, s: &SystemState) {
        self.agents.resize(state.agents.len(), Vec::new());
        self.objects.resize(state.objects.len(), Vec::new());
        for (i, a) in state.agents.iter().enumerate() {
            let e =
                BehaviorEntry { t: state.time, config: a.q, services: env.labeling.agent_label(i, s.agent_regions[i]) };
            push_entry(&mut self.agents[i], e);
        }
        for (j, o) in state.objects.iter().enumerate() {
            let e = BehaviorEntry {
                t: state.time,
                config: o.pose,
                services: env.labeling.object_label(j, s.object_regions[j]),
            };
            push_entry(&mut self.objects[j], e);
        }
        self.boundaries.push(s.clone());
    }

    /// Service word of an agent at round boundaries.
    pub fn agent_word(&self, i: usize) -> Vec<Letter> {
        self.agents[i].iter().map(|e| e.services.clone()).collect()
    }

    pub fn object_word(&self, j: usize) -> Vec<Letter> {
        self.objects[j].iter().map(|e| e.services.clone()).collect()
    }
}

/// Keeps timestamps strictly increasing: a round that took no time replaces
/// the previous entry.
fn push_entry<T>(log: &mut Vec<BehaviorEntry<T>>, e: BehaviorEntry<T>) {
    match log.last_mut() {
        Some(last) if last.t >= e.t => *last = e,
        _ => log.push(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub log: BehaviorLog,
    pub final_state: WorldState,
    /// why execution stopped early, if it did
    pub failure: Option<Error>,
}

/// Runs the prefix and then `repetitions` cycles of `plan`, checking the
/// recovered discrete state against the plan after every round.
pub fn execute(
    env: &Environment,
    plan: &Plan,
    initial: &WorldState,
    repetitions: usize,
    mut trace: Option<&mut Trajectory>,
) -> Result<Execution> {
    let s0 = env.check_initial(initial)?;
    if &s0 != plan.initial() {
        return Err(Error::PlanInconsistency(format!(
            "initial state {s0} does not match the plan's {}",
            plan.initial()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(env.exec.seed);
    let mut log = BehaviorLog::default();
    log.record(env, initial, &s0);
    let mut state = initial.clone();
    for k in 0..plan.step_count(repetitions) {
        let round = run_round(env, plan.step(k), &state, k + 1, &mut rng, trace.as_deref_mut());
        let round = match round {
            Ok(r) => r,
            Err(e) => return Ok(Execution { log, final_state: state, failure: Some(e) }),
        };
        let failure = round.failure.clone();
        state = round.final_state.clone();
        log.rounds.push(round);
        if let Some(reason) = failure {
            return Ok(Execution {
                log,
                final_state: state,
                failure: Some(Error::RoundFailure { round: k + 1, reason }),
            });
        }
        let expected = plan.states.at(k + 1);
        match env.recover(&state) {
            Ok(s) if &s == expected => log.record(env, &state, &s),
            Ok(s) => {
                let e = Error::PlanInconsistency(format!(
                    "after round {} the system is in {s}, expected {expected}",
                    k + 1
                ));
                return Ok(Execution { log, final_state: state, failure: Some(e) });
            }
            Err(e) => return Ok(Execution { log, final_state: state, failure: Some(e) }),
        }
    }
    Ok(Execution { log, final_state: state, failure: None })
}

/// All agents at rest at the given joint positions.
pub fn rest_state(qs: &[JointVec], objects: &[Pose]) -> WorldState {
    WorldState {
        time: 0.0,
        agents: qs.iter().map(|q| AgentState::at_rest(*q)).collect(),
        objects: objects.iter().map(|p| ObjectState::at_rest(*p)).collect(),
        grasps: Vec::new(),
    }
}
