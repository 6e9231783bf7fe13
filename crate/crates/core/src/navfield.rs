//! Multi-agent navigation function, its joint-space gradient and the
//! feedback laws for transition and transportation actions.
//!
//! The field is built for one action assignment. Agents that transit or
//! transport are *movers*; every other body is a static obstacle. The obstacle
//! term is a product of saturating bump functions of sphere-pair distances,
//! multiplied by the workspace boundary term of each mover sphere.

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    agent_terms, coupled_terms, AgentModel, AgentState, GraspCoupling, JointVec, Link, ObjectModel, PointJacobian,
    World, WorldState,
};
use crate::error::{Error, Result};
use crate::geometry::{BodyGeometry, Region, Sphere, Vec3, Workspace, DEFAULT_EPSILON};

/// A sphere in the base frame of an agent that its end-effector must avoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingularSphere {
    /// offset from the base centre (m)
    pub offset: [f64; 3],
    /// m
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NavConfig {
    pub kappa: f64,
    /// default dissipation gain K_i
    pub damping_gain: f64,
    /// pair distance beyond which an obstacle term saturates to 1 (m)
    pub activation_radius: f64,
    pub kappa_increment: f64,
    pub kappa_cap: f64,
    /// containment margin for declaring a region reached (m)
    pub goal_tolerance: f64,
    /// joint-rate norm below which an agent counts as settled
    pub rate_tolerance: f64,
    /// scale applied to the navigation potential in the control law
    pub potential_gain: f64,
    /// length that normalizes the squared goal distance (m)
    pub goal_scale: f64,
    pub saddle_gradient: f64,
    /// s
    pub saddle_dwell: f64,
    /// magnitude of the joint-rate perturbation applied on saddle escape
    pub saddle_kick: f64,
    /// horizontal gap kept between an end-effector goal and a resting object (m)
    pub standoff: f64,
    pub singular_spheres: Vec<SingularSphere>,
}

impl Default for NavConfig {
    fn default() -> Self {
        Self {
            kappa: 7.0,
            damping_gain: 30.0,
            activation_radius: 2.0,
            kappa_increment: 1.0,
            kappa_cap: 20.0,
            goal_tolerance: DEFAULT_EPSILON,
            rate_tolerance: 1e-3,
            potential_gain: 1.0,
            goal_scale: 1.0,
            saddle_gradient: 1e-6,
            saddle_dwell: 0.5,
            saddle_kick: 1e-3,
            standoff: 0.2,
            singular_spheres: Vec::new(),
        }
    }
}

impl NavConfig {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("kappa", self.kappa >= 1.0),
            ("damping_gain", self.damping_gain > 0.0),
            ("activation_radius", self.activation_radius > 0.0),
            ("kappa_increment", self.kappa_increment >= 0.0),
            ("kappa_cap", self.kappa_cap >= self.kappa),
            ("goal_tolerance", self.goal_tolerance > 0.0),
            ("rate_tolerance", self.rate_tolerance > 0.0),
            ("potential_gain", self.potential_gain > 0.0),
            ("goal_scale", self.goal_scale > 0.0),
            ("saddle_gradient", self.saddle_gradient >= 0.0),
            ("saddle_dwell", self.saddle_dwell > 0.0),
            ("saddle_kick", self.saddle_kick >= 0.0),
            ("standoff", self.standoff >= 0.0),
        ];
        for (name, ok) in checks {
            if !ok {
                return Err(Error::InvalidInput(format!("navigation setting {name} is out of range")));
            }
        }
        if self.singular_spheres.iter().any(|s| !(s.radius > 0.0)) {
            return Err(Error::InvalidInput("singular sphere radius must be positive".into()));
        }
        Ok(())
    }
}

/// What one agent does during a round. Region and object indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentAction {
    Idle,
    Transit { from: usize, to: usize },
    Transport { object: usize, from: usize, to: usize },
    Grasp { object: usize },
    Release { object: usize },
}

impl AgentAction {
    pub fn tag(&self) -> &'static str {
        match self {
            AgentAction::Idle => "idle",
            AgentAction::Transit { .. } => "transit",
            AgentAction::Transport { .. } => "transport",
            AgentAction::Grasp { .. } => "grasp",
            AgentAction::Release { .. } => "release",
        }
    }

    pub fn object(&self) -> Option<usize> {
        match *self {
            AgentAction::Transport { object, .. } | AgentAction::Grasp { object } | AgentAction::Release { object } => {
                Some(object)
            }
            _ => None,
        }
    }

    pub fn is_motion(&self) -> bool {
        matches!(self, AgentAction::Transit { .. } | AgentAction::Transport { .. })
    }
}

/// Simultaneous actions of all agents, one entry per agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionAssignment {
    pub actions: Vec<AgentAction>,
}

impl ActionAssignment {
    pub fn idle(agents: usize) -> Self {
        Self { actions: vec![AgentAction::Idle; agents] }
    }

    pub fn is_idle(&self) -> bool {
        self.actions.iter().all(|a| *a == AgentAction::Idle)
    }

    fn agents_where(&self, f: impl Fn(&AgentAction) -> bool) -> Vec<usize> {
        self.actions.iter().enumerate().filter(|(_, a)| f(a)).map(|(i, _)| i).collect()
    }

    pub fn transit(&self) -> Vec<usize> {
        self.agents_where(|a| matches!(a, AgentAction::Transit { .. }))
    }

    pub fn transport(&self) -> Vec<usize> {
        self.agents_where(|a| matches!(a, AgentAction::Transport { .. }))
    }

    pub fn grasping(&self) -> Vec<usize> {
        self.agents_where(|a| matches!(a, AgentAction::Grasp { .. }))
    }

    pub fn releasing(&self) -> Vec<usize> {
        self.agents_where(|a| matches!(a, AgentAction::Release { .. }))
    }

    pub fn idle_agents(&self) -> Vec<usize> {
        self.agents_where(|a| *a == AgentAction::Idle)
    }

    /// Checks that every object is handled by at most one agent and that
    /// object-handling actions do not outnumber the objects.
    pub fn validate(&self, objects: usize) -> Result<()> {
        let mut seen = vec![false; objects];
        let mut handling = 0;
        for a in &self.actions {
            if let Some(j) = a.object() {
                if j >= objects {
                    return Err(Error::InvalidInput(format!("action refers to unknown object {}", j + 1)));
                }
                if seen[j] {
                    return Err(Error::InvalidInput(format!("object {} handled by two agents", j + 1)));
                }
                seen[j] = true;
                handling += 1;
            }
        }
        if handling > objects {
            return Err(Error::InvalidInput("more object actions than objects".into()));
        }
        Ok(())
    }
}

/// Saturating obstacle term: 0 on contact, `s(2 - s)` with `s = d / radius`
/// inside the activation radius, 1 beyond it. Continuously differentiable.
pub fn bump(d: f64, radius: f64) -> f64 {
    if d <= 0.0 {
        0.0
    } else if d >= radius {
        1.0
    } else {
        let s = d / radius;
        s * (2.0 - s)
    }
}

pub fn bump_derivative(d: f64, radius: f64) -> f64 {
    if d <= 0.0 || d >= radius {
        0.0
    } else {
        2.0 * (1.0 - d / radius) / radius
    }
}

/// `gamma / (gamma^kappa + obstacle)^(1/kappa)`, with the limits made explicit.
pub fn nav_value(gamma: f64, obstacle: f64, kappa: f64) -> f64 {
    if gamma <= 0.0 {
        return 0.0;
    }
    if obstacle <= 0.0 {
        return 1.0;
    }
    (gamma / (gamma.powf(kappa) + obstacle).powf(1.0 / kappa)).min(1.0)
}

/// Squared distance of the end-effector to the region centre.
pub fn gamma_transition(model: &AgentModel, q: &JointVec, target: &Region) -> f64 {
    (model.end_effector(q) - target.center).norm_squared()
}

/// Squared distance of the carried object's centre of mass to the region centre.
pub fn gamma_transport(
    model: &AgentModel,
    q: &JointVec,
    coupling: Option<&GraspCoupling>,
    target: &Region,
) -> Result<f64> {
    let c = coupling.ok_or_else(|| Error::InvalidState("transport requires an active grasp".into()))?;
    Ok((c.object_position(model, q) - target.center).norm_squared())
}

/// Product over the agent spheres of `(r_0 - rho)^2 - |c - p_0|^2`, clamped at 0.
pub fn delta_workspace(model: &AgentModel, q: &JointVec, workspace: &Workspace) -> f64 {
    model
        .spheres(q)
        .iter()
        .map(|s| ((workspace.radius - s.radius).powi(2) - (s.center - workspace.center).norm_squared()).max(0.0))
        .product()
}

/// Point whose position the goal term pulls towards a target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GoalPoint {
    EndEffector,
    CarriedObject,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CarriedBody {
    pub coupling: GraspCoupling,
    pub geometry: BodyGeometry,
}

/// One agent driven by the field.
#[derive(Debug, Clone, PartialEq)]
pub struct Mover {
    pub agent: usize,
    pub model: AgentModel,
    pub carried: Option<CarriedBody>,
    pub goal_point: GoalPoint,
    pub target: Vec3,
    /// inflated region balls the mover may not touch
    pub forbidden: Vec<Sphere>,
    /// region left at the start of the action, added to `forbidden` once cleared
    pub departure: Option<Sphere>,
}

impl Mover {
    fn goal_position(&self, q: &JointVec) -> (Vec3, PointJacobian) {
        let p = match (&self.goal_point, &self.carried) {
            (GoalPoint::CarriedObject, Some(c)) => c.coupling.object_position(&self.model, q),
            _ => self.model.end_effector(q),
        };
        (p, self.model.point_jacobian(q, Link::Arm, &p))
    }

    /// Collision spheres of the agent and its load, with centre Jacobians.
    pub fn spheres(&self, q: &JointVec) -> Vec<(Sphere, PointJacobian)> {
        let mut out = self.model.spheres_with_jacobians(q);
        if let Some(c) = &self.carried {
            let origin = c.coupling.object_position(&self.model, q);
            let rot = c.coupling.object_rotation(&self.model, q);
            for s in c.geometry.transformed(&origin, &rot) {
                let j = self.model.point_jacobian(q, Link::Arm, &s.center);
                out.push((s, j));
            }
        }
        out
    }
}

/// Value and gradient of the field at one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldEval {
    pub phi: f64,
    /// normalized goal term
    pub gamma: f64,
    /// obstacle product including the boundary terms
    pub obstacle: f64,
    /// gradient with respect to each mover's joints, in mover order
    pub grad: Vec<JointVec>,
}

impl FieldEval {
    pub fn grad_norm(&self) -> f64 {
        self.grad.iter().map(|g| g.norm_squared()).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavField {
    pub movers: Vec<Mover>,
    pub statics: Vec<Sphere>,
    pub workspace_center: Vec3,
    pub workspace_radius: f64,
    pub kappa: f64,
    pub activation_radius: f64,
    pub goal_scale: f64,
    pub singular_spheres: Vec<SingularSphere>,
}

/// One factor of the obstacle product, with the pair-distance gradient for up to two movers.
struct Factor {
    value: f64,
    slope: f64,
    grads: [(usize, JointVec); 2],
    count: usize,
}

impl NavField {
    pub fn new(movers: Vec<Mover>, statics: Vec<Sphere>, workspace: &Workspace, config: &NavConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            movers,
            statics,
            workspace_center: workspace.center,
            workspace_radius: workspace.radius,
            kappa: config.kappa,
            activation_radius: config.activation_radius,
            goal_scale: config.goal_scale,
            singular_spheres: config.singular_spheres.clone(),
        })
    }

    /// Builds the field of all transit and transport agents in `assignment`.
    ///
    /// Idle agents and resting objects become static obstacles. Agents that
    /// grasp or release stay inside their own regions, which are forbidden to
    /// every mover, so neither they nor their objects enter the product.
    pub fn for_assignment(
        world: &World,
        workspace: &Workspace,
        state: &WorldState,
        assignment: &ActionAssignment,
        config: &NavConfig,
    ) -> Result<Self> {
        if assignment.actions.len() != world.agents.len() {
            return Err(Error::InvalidInput("one action per agent is required".into()));
        }
        assignment.validate(world.objects.len())?;
        let mut statics = Vec::new();
        for (i, a) in assignment.actions.iter().enumerate() {
            if *a == AgentAction::Idle {
                statics.extend(world.agents[i].spheres(&state.agents[i].q));
            }
        }
        let handled: Vec<usize> = assignment.actions.iter().filter_map(|a| a.object()).collect();
        let resting: Vec<usize> =
            (0..world.objects.len()).filter(|j| !handled.contains(j) && state.grasp_of_object(*j).is_none()).collect();
        for &j in &resting {
            statics.extend(world.objects[j].spheres(&state.objects[j].pose));
        }

        let mut movers = Vec::new();
        for (i, a) in assignment.actions.iter().enumerate() {
            let (from, to, carried) = match *a {
                AgentAction::Transit { from, to } => (from, to, None),
                AgentAction::Transport { object, from, to } => {
                    let coupling = *state.grasp_of_agent(i).filter(|c| c.object == object).ok_or_else(|| {
                        Error::InvalidState(format!("agent {} does not hold object {}", i + 1, object + 1))
                    })?;
                    let geometry = world.objects[object].geometry.clone();
                    (from, to, Some(CarriedBody { coupling, geometry }))
                }
                _ => continue,
            };
            let model = world.agents[i].clone();
            let region = workspace.region(to)?;
            let (goal_point, target) = if carried.is_some() {
                (GoalPoint::CarriedObject, region.center)
            } else {
                let occupant = resting
                    .iter()
                    .map(|&j| state.objects[j].pose.position)
                    .find(|p| (p - region.center).norm() < region.radius);
                let target = match occupant {
                    Some(p) => standoff_point(&p, &model.base_center(&state.agents[i].q), config.standoff),
                    None => region.center,
                };
                (GoalPoint::EndEffector, target)
            };
            let forbidden = workspace
                .regions
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != from && *k != to)
                .map(|(_, r)| r.ball())
                .collect();
            let departure = if from != to { Some(workspace.region(from)?.ball()) } else { None };
            movers.push(Mover { agent: i, model, carried, goal_point, target, forbidden, departure });
        }
        Self::new(movers, statics, workspace, config)
    }

    pub fn configuration(&self, state: &WorldState) -> Vec<JointVec> {
        self.movers.iter().map(|m| state.agents[m.agent].q).collect()
    }

    /// Moves each departure region into the forbidden set once all of the
    /// mover's spheres are beyond the activation radius, where the new factor
    /// equals 1 and the field value is unchanged. Returns whether anything changed.
    pub fn update_departures(&mut self, qs: &[JointVec]) -> bool {
        let mut changed = false;
        for (m, q) in self.movers.iter_mut().zip(qs) {
            if let Some(ball) = m.departure {
                let clear = m.spheres(q).iter().all(|(s, _)| s.clearance(&ball) >= self.activation_radius);
                if clear {
                    m.forbidden.push(ball);
                    m.departure = None;
                    changed = true;
                }
            }
        }
        changed
    }

    fn factors(&self, qs: &[JointVec]) -> Vec<Factor> {
        let r_act = self.activation_radius;
        let spheres: Vec<Vec<(Sphere, PointJacobian)>> =
            self.movers.iter().zip(qs).map(|(m, q)| m.spheres(q)).collect();
        let mut out = Vec::new();
        let mut push_pair = |d: f64, grads: [(usize, JointVec); 2], count: usize| {
            if d < r_act {
                out.push(Factor { value: bump(d, r_act), slope: bump_derivative(d, r_act), grads, count });
            }
        };
        let zero = (0, JointVec::zeros());
        for (mi, (m, list)) in self.movers.iter().zip(&spheres).enumerate() {
            for (s, j) in list {
                // workspace boundary
                let off = s.center - self.workspace_center;
                let dist = off.norm();
                let d = self.workspace_radius - s.radius - dist;
                let g = if dist > 0.0 { -(j.transpose() * off) / dist } else { JointVec::zeros() };
                push_pair(d, [(mi, g), zero], 1);
                for o in self.statics.iter().chain(&m.forbidden) {
                    let diff = s.center - o.center;
                    let n = diff.norm();
                    let d = n - s.radius - o.radius;
                    let g = if n > 0.0 { j.transpose() * diff / n } else { JointVec::zeros() };
                    push_pair(d, [(mi, g), zero], 1);
                }
            }
            if !self.singular_spheres.is_empty() {
                let q = &qs[mi];
                let ee = m.model.end_effector(q);
                let jee = m.model.point_jacobian(q, Link::Arm, &ee);
                let jbase = m.model.point_jacobian(q, Link::Base, &ee);
                for ss in &self.singular_spheres {
                    let c = m.model.base_center(q) + Vec3::from(ss.offset);
                    let diff = ee - c;
                    let n = diff.norm();
                    let g = if n > 0.0 { (jee - jbase).transpose() * diff / n } else { JointVec::zeros() };
                    push_pair(n - ss.radius, [(mi, g), zero], 1);
                }
            }
            for (mj, other) in spheres.iter().enumerate().skip(mi + 1) {
                for (sa, ja) in list {
                    for (sb, jb) in other {
                        let diff = sa.center - sb.center;
                        let n = diff.norm();
                        let d = n - sa.radius - sb.radius;
                        let (ga, gb) = if n > 0.0 {
                            (ja.transpose() * diff / n, -(jb.transpose() * diff) / n)
                        } else {
                            (JointVec::zeros(), JointVec::zeros())
                        };
                        push_pair(d, [(mi, ga), (mj, gb)], 2);
                    }
                }
            }
        }
        out
    }

    /// Normalized goal term and its gradient.
    fn goal(&self, qs: &[JointVec]) -> (f64, Vec<JointVec>) {
        let scale = self.goal_scale * self.goal_scale;
        let mut gamma = 0.0;
        let mut grad = Vec::with_capacity(self.movers.len());
        for (m, q) in self.movers.iter().zip(qs) {
            let (p, j) = m.goal_position(q);
            let e = p - m.target;
            gamma += e.norm_squared() / scale;
            grad.push(2.0 * j.transpose() * e / scale);
        }
        (gamma, grad)
    }

    fn check_dims(&self, qs: &[JointVec]) -> Result<()> {
        if qs.len() != self.movers.len() {
            return Err(Error::InvalidInput(format!(
                "configuration has {} agents, field has {} movers",
                qs.len(),
                self.movers.len()
            )));
        }
        Ok(())
    }

    /// Obstacle product without the boundary terms of the workspace.
    pub fn beta(&self, qs: &[JointVec]) -> Result<f64> {
        self.check_dims(qs)?;
        let mut no_boundary = self.clone();
        no_boundary.workspace_radius = f64::INFINITY;
        Ok(no_boundary.factors(qs).iter().map(|f| f.value).product())
    }

    pub fn phi(&self, qs: &[JointVec]) -> Result<f64> {
        self.check_dims(qs)?;
        let (gamma, _) = self.goal(qs);
        let obstacle: f64 = self.factors(qs).iter().map(|f| f.value).product();
        Ok(nav_value(gamma, obstacle, self.kappa))
    }

    /// Value and analytic gradient; fails where an obstacle factor vanishes.
    pub fn evaluate(&self, qs: &[JointVec]) -> Result<FieldEval> {
        self.check_dims(qs)?;
        let (gamma, grad_gamma) = self.goal(qs);
        let factors = self.factors(qs);
        let mut obstacle = 1.0;
        let mut grad_log = vec![JointVec::zeros(); self.movers.len()];
        for f in &factors {
            if f.value <= 0.0 {
                return Err(Error::SingularField(format!("a body is in contact (goal term {gamma:.6e})")));
            }
            obstacle *= f.value;
            let w = f.slope / f.value;
            for (m, g) in &f.grads[..f.count] {
                grad_log[*m] += w * g;
            }
        }
        let k = self.kappa;
        let psi = gamma.powf(k) + obstacle;
        let a = psi.powf(-1.0 / k);
        let b = gamma / k * psi.powf(-1.0 / k - 1.0);
        let gk = k * gamma.powf(k - 1.0);
        let grad = grad_gamma.iter().zip(&grad_log).map(|(gg, gl)| a * gg - b * (gk * gg + obstacle * gl)).collect();
        Ok(FieldEval { phi: nav_value(gamma, obstacle, k), gamma, obstacle, grad })
    }
}

/// End-effector goal beside a resting object, on the side facing `base`.
pub fn standoff_point(object: &Vec3, base: &Vec3, standoff: f64) -> Vec3 {
    let mut dir = Vec3::new(base.x - object.x, base.y - object.y, 0.0);
    if dir.norm() < 1e-9 {
        dir = Vec3::x();
    }
    object + standoff * dir.normalize()
}

/// `tau = g - c grad_phi - K q_dot` for an agent moving on its own.
pub fn control_transition(
    model: &AgentModel,
    state: &AgentState,
    grad: &JointVec,
    gain: f64,
    potential_gain: f64,
) -> JointVec {
    agent_terms(model, state).g - potential_gain * grad - gain * state.qd
}

/// Same law with the gravity vector of the agent-object system.
pub fn control_transport(
    model: &AgentModel,
    state: &AgentState,
    object: &ObjectModel,
    coupling: Option<&GraspCoupling>,
    grad: &JointVec,
    gain: f64,
    potential_gain: f64,
) -> Result<JointVec> {
    let c = coupling.ok_or_else(|| Error::InvalidState("transport requires an active grasp".into()))?;
    Ok(coupled_terms(model, state, object, c).g - potential_gain * grad - gain * state.qd)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nav_value_reference() {
        assert!((nav_value(4.0, 1.0, 2.0) - 4.0 / 17f64.sqrt()).abs() < 1e-15);
        assert!((nav_value(4.0, 1.0, 2.0) - 0.9701).abs() < 1e-4);
        assert_eq!(nav_value(0.0, 1.0, 7.0), 0.0);
        assert_eq!(nav_value(0.3, 0.0, 7.0), 1.0);
    }

    #[test]
    fn bump_shape() {
        assert_eq!(bump(0.0, 2.0), 0.0);
        assert_eq!(bump(-1.0, 2.0), 0.0);
        assert_eq!(bump(2.0, 2.0), 1.0);
        assert_eq!(bump(5.0, 2.0), 1.0);
        assert!((bump(0.5, 2.0) - 0.4375).abs() < 1e-15);
        let h = 1e-7;
        for d in [0.1, 0.7, 1.3, 1.9] {
            let fd = (bump(d + h, 2.0) - bump(d - h, 2.0)) / (2.0 * h);
            assert!((fd - bump_derivative(d, 2.0)).abs() < 1e-7);
        }
        assert_eq!(bump_derivative(2.0, 2.0), 0.0);
    }

    #[test]
    fn assignment_rejects_shared_object() {
        let a =
            ActionAssignment { actions: vec![AgentAction::Grasp { object: 0 }, AgentAction::Release { object: 0 }] };
        assert!(a.validate(1).is_err());
        let b = ActionAssignment { actions: vec![AgentAction::Grasp { object: 0 }, AgentAction::Idle] };
        assert!(b.validate(1).is_ok());
        assert_eq!(b.grasping(), vec![0]);
        assert_eq!(b.idle_agents(), vec![1]);
    }

    #[test]
    fn standoff_faces_base() {
        let p = standoff_point(&Vec3::new(1.0, 1.0, 0.2), &Vec3::new(1.0, -3.0, 0.0), 0.2);
        assert!((p - Vec3::new(1.0, 0.8, 0.2)).norm() < 1e-15);
    }
}
