//! Joint-space dynamics of the mobile manipulators, free-body dynamics of the
//! objects, the agent-object coupling under a rigid grasp and an RK4
//! integrator over the whole world.
//!
//! The agent is a planar mobile manipulator with generalized coordinates
//! `q = [x_c, y_c, theta]`: a cubic base translating in the plane, a fixed
//! vertical column and one revolute arm rotating in the vertical x-z plane.
//! `theta = 0` points the arm along +x, positive `theta` lifts it.

use nalgebra::{Matrix3, Matrix6, Rotation3, SMatrix, SVector, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BodyGeometry, LocalSphere, Pose, Sphere, SphereBody, Vec3};

pub const DOF: usize = 3;

pub type JointVec = SVector<f64, DOF>;
pub type JointMat = SMatrix<f64, DOF, DOF>;
pub type Jacobian = SMatrix<f64, 6, DOF>;
/// Jacobian of a point position with respect to `q`.
pub type PointJacobian = SMatrix<f64, 3, DOF>;
pub type Vec6 = Vector6<f64>;
pub type Mat6 = Matrix6<f64>;

pub const STANDARD_GRAVITY: f64 = 9.81;

/// Axis of the arm joint in the world frame.
fn arm_axis() -> Vec3 {
    Vec3::new(0.0, -1.0, 0.0)
}

/// Cross-product matrix: `skew(a) * b == a.cross(&b)`.
pub fn skew(a: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentParams {
    /// kg
    pub base_mass: f64,
    /// edge of the cubic base (m)
    pub base_edge: f64,
    /// height of the base centre above the plane (m)
    pub base_height: f64,
    pub column_mass: f64,
    pub column_length: f64,
    pub arm_mass: f64,
    pub arm_length: f64,
    /// square cross-section of both links (m)
    pub link_width: f64,
    /// m/s^2
    pub gravity: f64,
}

impl Default for AgentParams {
    fn default() -> Self {
        Self {
            base_mass: 10.0,
            base_edge: 0.3,
            base_height: 0.0,
            column_mass: 1.0,
            column_length: 0.3,
            arm_mass: 1.0,
            arm_length: 0.3,
            link_width: 0.05,
            gravity: STANDARD_GRAVITY,
        }
    }
}

/// Which rigid body a collision sphere belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Base,
    Column,
    Arm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentModel {
    pub params: AgentParams,
    /// Spheres of the base and column, offsets relative to the base centre.
    pub fixed_geometry: BodyGeometry,
    /// Spheres of the arm, offsets in the arm frame whose x axis runs along the arm.
    pub arm_geometry: BodyGeometry,
    arm_inertia_body: Matrix3<f64>,
}

impl AgentModel {
    pub fn new(params: AgentParams) -> Result<Self> {
        let positive = [
            ("base_mass", params.base_mass),
            ("base_edge", params.base_edge),
            ("column_mass", params.column_mass),
            ("column_length", params.column_length),
            ("arm_mass", params.arm_mass),
            ("arm_length", params.arm_length),
            ("link_width", params.link_width),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("agent {name} must be positive, got {v}")));
            }
        }
        if !(params.gravity >= 0.0 && params.gravity.is_finite()) {
            return Err(Error::InvalidInput("gravity must be finite and non-negative".into()));
        }

        let e = params.base_edge;
        let w = params.link_width;
        // base split into an upper and a lower half-box
        let half_box = Vec3::new(e, e, 0.5 * e).norm() * 0.5;
        let link_sphere = |len: f64| Vec3::new(0.5 * len, w, w).norm() * 0.5;
        let l1 = params.column_length;
        let l2 = params.arm_length;
        let top = 0.5 * e;
        let fixed_geometry = BodyGeometry::new(vec![
            LocalSphere::new(Vec3::new(0.0, 0.0, 0.25 * e), half_box),
            LocalSphere::new(Vec3::new(0.0, 0.0, -0.25 * e), half_box),
            LocalSphere::new(Vec3::new(0.0, 0.0, top + 0.25 * l1), link_sphere(l1)),
            LocalSphere::new(Vec3::new(0.0, 0.0, top + 0.75 * l1), link_sphere(l1)),
        ])?;
        let arm_geometry = BodyGeometry::new(vec![
            LocalSphere::new(Vec3::new(0.25 * l2, 0.0, 0.0), link_sphere(l2)),
            LocalSphere::new(Vec3::new(0.75 * l2, 0.0, 0.0), link_sphere(l2)),
        ])?;
        let m = params.arm_mass;
        let transverse = m * (l2 * l2 + w * w) / 12.0;
        let arm_inertia_body = Matrix3::from_diagonal(&Vec3::new(m * w * w / 6.0, transverse, transverse));
        Ok(Self { params, fixed_geometry, arm_geometry, arm_inertia_body })
    }

    pub fn total_mass(&self) -> f64 {
        self.params.base_mass + self.params.column_mass + self.params.arm_mass
    }

    pub fn base_center(&self, q: &JointVec) -> Vec3 {
        Vec3::new(q[0], q[1], self.params.base_height)
    }

    pub fn joint_position(&self, q: &JointVec) -> Vec3 {
        self.base_center(q) + Vec3::new(0.0, 0.0, 0.5 * self.params.base_edge + self.params.column_length)
    }

    pub fn arm_rotation(&self, q: &JointVec) -> Rotation3<f64> {
        Rotation3::from_axis_angle(&Vector3::y_axis(), -q[2])
    }

    pub fn arm_direction(&self, q: &JointVec) -> Vec3 {
        Vec3::new(q[2].cos(), 0.0, q[2].sin())
    }

    pub fn end_effector(&self, q: &JointVec) -> Vec3 {
        self.joint_position(q) + self.params.arm_length * self.arm_direction(q)
    }

    /// All collision spheres, base and column first, then the arm.
    pub fn spheres(&self, q: &JointVec) -> Vec<Sphere> {
        let mut out = self.fixed_geometry.transformed(&self.base_center(q), &Rotation3::identity());
        out.extend(self.arm_geometry.transformed(&self.joint_position(q), &self.arm_rotation(q)));
        out
    }

    pub fn sphere_links(&self) -> Vec<Link> {
        let mut out = vec![Link::Base, Link::Base, Link::Column, Link::Column];
        out.truncate(self.fixed_geometry.spheres.len());
        out.extend(std::iter::repeat_n(Link::Arm, self.arm_geometry.spheres.len()));
        out
    }

    /// Position Jacobian of a point rigidly attached to the given link.
    pub fn point_jacobian(&self, q: &JointVec, link: Link, point: &Vec3) -> PointJacobian {
        let mut j = PointJacobian::zeros();
        j[(0, 0)] = 1.0;
        j[(1, 1)] = 1.0;
        if link == Link::Arm {
            let c = arm_axis().cross(&(point - self.joint_position(q)));
            j.set_column(2, &c);
        }
        j
    }

    /// Spheres together with the Jacobians of their centres.
    pub fn spheres_with_jacobians(&self, q: &JointVec) -> Vec<(Sphere, PointJacobian)> {
        self.spheres(q)
            .into_iter()
            .zip(self.sphere_links())
            .map(|(s, link)| {
                let j = self.point_jacobian(q, link, &s.center);
                (s, j)
            })
            .collect()
    }

    /// End-effector Jacobian mapping `q_dot` to `[p_dot; omega]`.
    pub fn jacobian(&self, q: &JointVec) -> Jacobian {
        let jp = self.point_jacobian(q, Link::Arm, &self.end_effector(q));
        let mut j = Jacobian::zeros();
        j.fixed_view_mut::<3, 3>(0, 0).copy_from(&jp);
        j.fixed_view_mut::<3, 1>(3, 2).copy_from(&arm_axis());
        j
    }

    /// `det(J_p^T J_p)` for the positional rows; zero where the arm is vertical.
    pub fn position_manipulability(&self, q: &JointVec) -> f64 {
        let jp = self.jacobian(q).fixed_view::<3, 3>(0, 0).into_owned();
        (jp.transpose() * jp).determinant()
    }

    fn parts(&self, q: &JointVec) -> [Part; 3] {
        let p = &self.params;
        let arm_com = self.joint_position(q) + 0.5 * p.arm_length * self.arm_direction(q);
        let r = self.arm_rotation(q);
        let inertia = r * self.arm_inertia_body * r.transpose();
        [
            Part::translating(p.base_mass),
            Part::translating(p.column_mass),
            Part::on_arm(self, q, p.arm_mass, &arm_com, inertia),
        ]
    }

    /// Potential energy of the agent alone (J).
    pub fn potential_energy(&self, q: &JointVec) -> f64 {
        let p = &self.params;
        let arm_com = self.joint_position(q) + 0.5 * p.arm_length * self.arm_direction(q);
        let column_z = p.base_height + 0.5 * p.base_edge + 0.5 * p.column_length;
        p.gravity * (p.base_mass * p.base_height + p.column_mass * column_z + p.arm_mass * arm_com.z)
    }
}

impl SphereBody for AgentModel {
    fn config_dim(&self) -> usize {
        DOF
    }

    fn spheres_at(&self, config: &[f64]) -> Result<Vec<Sphere>> {
        Ok(self.spheres(&JointVec::from_column_slice(config)))
    }
}

/// One rigid body contributing to the joint-space inertia.
struct Part {
    mass: f64,
    inertia: Matrix3<f64>,
    jv: PointJacobian,
    jw: PointJacobian,
    /// derivative of `jv` with respect to theta
    djv: PointJacobian,
    /// derivative of the world inertia with respect to theta
    dinertia: Matrix3<f64>,
}

impl Part {
    fn translating(mass: f64) -> Self {
        let mut jv = PointJacobian::zeros();
        jv[(0, 0)] = 1.0;
        jv[(1, 1)] = 1.0;
        Self {
            mass,
            inertia: Matrix3::zeros(),
            jv,
            jw: PointJacobian::zeros(),
            djv: PointJacobian::zeros(),
            dinertia: Matrix3::zeros(),
        }
    }

    fn on_arm(model: &AgentModel, q: &JointVec, mass: f64, com: &Vec3, inertia: Matrix3<f64>) -> Self {
        let a = arm_axis();
        let rel = com - model.joint_position(q);
        let jv = model.point_jacobian(q, Link::Arm, com);
        let mut jw = PointJacobian::zeros();
        jw.set_column(2, &a);
        let mut djv = PointJacobian::zeros();
        djv.set_column(2, &a.cross(&a.cross(&rel)));
        let s = skew(&a);
        let dinertia = s * inertia - inertia * s;
        Self { mass, inertia, jv, jw, djv, dinertia }
    }

    fn inertia_matrix(&self) -> JointMat {
        self.mass * self.jv.transpose() * self.jv + self.jw.transpose() * self.inertia * self.jw
    }

    fn inertia_derivative(&self) -> JointMat {
        self.mass * (self.djv.transpose() * self.jv + self.jv.transpose() * self.djv)
            + self.jw.transpose() * self.dinertia * self.jw
    }

    fn gravity(&self, g0: f64) -> JointVec {
        self.mass * g0 * self.jv.row(2).transpose()
    }
}

/// Inertia matrix, Coriolis/centrifugal matrix and gravity vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicTerms {
    pub b: JointMat,
    pub n: JointMat,
    pub g: JointVec,
}

/// Christoffel-symbol Coriolis matrix from the partial derivatives of `B`.
fn christoffel(db: &[JointMat; DOF], qd: &JointVec) -> JointMat {
    let mut n = JointMat::zeros();
    for k in 0..DOF {
        for j in 0..DOF {
            let mut acc = 0.0;
            for i in 0..DOF {
                acc += 0.5 * (db[i][(k, j)] + db[j][(k, i)] - db[k][(i, j)]) * qd[i];
            }
            n[(k, j)] = acc;
        }
    }
    n
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub q: JointVec,
    pub qd: JointVec,
}

impl AgentState {
    pub fn at_rest(q: JointVec) -> Self {
        Self { q, qd: JointVec::zeros() }
    }

    pub fn kinetic_energy(&self, b: &JointMat) -> f64 {
        0.5 * self.qd.dot(&(b * self.qd))
    }
}

pub fn agent_terms(model: &AgentModel, state: &AgentState) -> DynamicTerms {
    let parts = model.parts(&state.q);
    let mut b = JointMat::zeros();
    let mut db_theta = JointMat::zeros();
    let mut g = JointVec::zeros();
    for p in &parts {
        b += p.inertia_matrix();
        db_theta += p.inertia_derivative();
        g += p.gravity(model.params.gravity);
    }
    // translation of the base leaves every term unchanged
    let db = [JointMat::zeros(), JointMat::zeros(), db_theta];
    let n = christoffel(&db, &state.qd);
    DynamicTerms { b, n, g }
}

pub fn jacobian(model: &AgentModel, q: &JointVec) -> Jacobian {
    model.jacobian(q)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectModel {
    pub mass: f64,
    /// body-frame inertia about the centre of mass
    pub inertia: Matrix3<f64>,
    pub geometry: BodyGeometry,
    pub gravity: f64,
}

impl ObjectModel {
    pub fn new(mass: f64, inertia: Matrix3<f64>, geometry: BodyGeometry, gravity: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidInput(format!("object mass must be positive, got {mass}")));
        }
        if (inertia - inertia.transpose()).abs().max() > 1e-12 * inertia.abs().max().max(1.0) {
            return Err(Error::InvalidInput("object inertia must be symmetric".into()));
        }
        if inertia.symmetric_eigenvalues().min() <= 0.0 {
            return Err(Error::InvalidInput("object inertia must be positive definite".into()));
        }
        if geometry.spheres.is_empty() {
            return Err(Error::InvalidInput("object needs at least one sphere".into()));
        }
        Ok(Self { mass, inertia, geometry, gravity })
    }

    /// Solid cube of the given edge, enclosed by one sphere at its centre.
    pub fn cube(mass: f64, edge: f64, gravity: f64) -> Result<Self> {
        if !(edge > 0.0) {
            return Err(Error::InvalidInput("cube edge must be positive".into()));
        }
        let i = mass * edge * edge / 6.0;
        Self::new(mass, Matrix3::from_diagonal_element(i), BodyGeometry::enclosing_box(Vec3::repeat(edge)), gravity)
    }

    pub fn spheres(&self, pose: &Pose) -> Vec<Sphere> {
        self.geometry.transformed(&pose.position, &pose.rotation())
    }

    pub fn world_inertia(&self, rotation: &Rotation3<f64>) -> Matrix3<f64> {
        rotation * self.inertia * rotation.transpose()
    }

    pub fn mass_matrix(&self, rotation: &Rotation3<f64>) -> Mat6 {
        let mut m = Mat6::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).fill_diagonal(self.mass);
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.world_inertia(rotation));
        m
    }

    pub fn coriolis_matrix(&self, rotation: &Rotation3<f64>, omega: &Vec3) -> Mat6 {
        let mut c = Mat6::zeros();
        c.fixed_view_mut::<3, 3>(3, 3).copy_from(&(skew(omega) * self.world_inertia(rotation)));
        c
    }

    pub fn gravity_wrench(&self) -> Vec6 {
        Vec6::new(0.0, 0.0, self.mass * self.gravity, 0.0, 0.0, 0.0)
    }
}

impl SphereBody for ObjectModel {
    fn config_dim(&self) -> usize {
        6
    }

    fn spheres_at(&self, config: &[f64]) -> Result<Vec<Sphere>> {
        Ok(self.spheres(&Pose::from_slice(config)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectState {
    pub pose: Pose,
    /// `[p_dot; omega]` in the world frame
    pub twist: Vec6,
}

impl ObjectState {
    pub fn at_rest(pose: Pose) -> Self {
        Self { pose, twist: Vec6::zeros() }
    }
}

/// Rigid attachment of an object to an agent's arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraspCoupling {
    pub agent: usize,
    pub object: usize,
    /// end-effector to object centre of mass, in the arm frame
    pub offset: Vec3,
    /// object orientation relative to the arm frame
    pub rotation: Rotation3<f64>,
}

impl GraspCoupling {
    /// Freezes the current relative pose between the end-effector and the object.
    pub fn snap(agent: usize, object: usize, model: &AgentModel, q: &JointVec, pose: &Pose) -> Self {
        let r_arm = model.arm_rotation(q);
        let offset = r_arm.inverse() * (pose.position - model.end_effector(q));
        let rotation = r_arm.inverse() * pose.rotation();
        Self { agent, object, offset, rotation }
    }

    pub fn object_position(&self, model: &AgentModel, q: &JointVec) -> Vec3 {
        model.end_effector(q) + model.arm_rotation(q) * self.offset
    }

    pub fn object_rotation(&self, model: &AgentModel, q: &JointVec) -> Rotation3<f64> {
        model.arm_rotation(q) * self.rotation
    }

    pub fn object_pose(&self, model: &AgentModel, q: &JointVec) -> Pose {
        Pose::from_rotation(self.object_position(model, q), &self.object_rotation(model, q))
    }

    /// Jacobian from `q_dot` to the object twist.
    pub fn object_jacobian(&self, model: &AgentModel, q: &JointVec) -> Jacobian {
        let p = self.object_position(model, q);
        let mut j = model.jacobian(q);
        j.fixed_view_mut::<3, 3>(0, 0).copy_from(&model.point_jacobian(q, Link::Arm, &p));
        j
    }
}

/// Maps an object wrench to the equivalent end-effector wrench; its transpose
/// maps the end-effector twist to the object twist.
pub fn grasp_matrix(coupling: &GraspCoupling, model: &AgentModel, q: &JointVec) -> Mat6 {
    let r = coupling.object_position(model, q) - model.end_effector(q);
    let mut g = Mat6::identity();
    g.fixed_view_mut::<3, 3>(3, 0).copy_from(&skew(&r));
    g
}

/// Dynamics of an agent carrying an object through a rigid grasp.
pub fn coupled_terms(
    model: &AgentModel,
    state: &AgentState,
    object: &ObjectModel,
    coupling: &GraspCoupling,
) -> DynamicTerms {
    let base = agent_terms(model, state);
    let q = &state.q;
    let r_o = coupling.object_rotation(model, q);
    let gbar = coupling.object_jacobian(model, q);
    let p_o = coupling.object_position(model, q);
    let a = arm_axis();
    let mut dgbar = Jacobian::zeros();
    let rel = p_o - model.joint_position(q);
    dgbar.fixed_view_mut::<3, 1>(0, 2).copy_from(&a.cross(&a.cross(&rel)));
    let gbar_dot = dgbar * state.qd[2];
    let m_o = object.mass_matrix(&r_o);
    let twist = gbar * state.qd;
    let omega = Vec3::new(twist[3], twist[4], twist[5]);
    let c_o = object.coriolis_matrix(&r_o, &omega);
    let gt = gbar.transpose();
    DynamicTerms {
        b: base.b + gt * m_o * gbar,
        n: base.n + gt * m_o * gbar_dot + gt * c_o * gbar,
        g: base.g + gt * object.gravity_wrench(),
    }
}

/// Matrix mapping Z-Y-X Euler angle rates `[yaw, pitch, roll]` to the world angular velocity.
pub fn euler_rate_matrix(orientation: &Vec3) -> Matrix3<f64> {
    let (sy, cy) = orientation.x.sin_cos();
    let (sp, cp) = orientation.y.sin_cos();
    Matrix3::new(0.0, -sy, cy * cp, 0.0, cy, sy * cp, 1.0, 0.0, -sp)
}

/// Models of everything being simulated.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub agents: Vec<AgentModel>,
    pub objects: Vec<ObjectModel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub time: f64,
    pub agents: Vec<AgentState>,
    pub objects: Vec<ObjectState>,
    pub grasps: Vec<GraspCoupling>,
}

impl WorldState {
    pub fn grasp_of_agent(&self, agent: usize) -> Option<&GraspCoupling> {
        self.grasps.iter().find(|g| g.agent == agent)
    }

    pub fn grasp_of_object(&self, object: usize) -> Option<&GraspCoupling> {
        self.grasps.iter().find(|g| g.object == object)
    }
}

const AGENT_STRIDE: usize = 2 * DOF;
const OBJECT_STRIDE: usize = 12;

impl World {
    pub fn validate(&self, state: &WorldState) -> Result<()> {
        if state.agents.len() != self.agents.len() || state.objects.len() != self.objects.len() {
            return Err(Error::InvalidInput(format!(
                "state holds {} agents and {} objects, world has {} and {}",
                state.agents.len(),
                state.objects.len(),
                self.agents.len(),
                self.objects.len()
            )));
        }
        for (idx, g) in state.grasps.iter().enumerate() {
            if g.agent >= self.agents.len() || g.object >= self.objects.len() {
                return Err(Error::InvalidInput("grasp refers to an unknown entity".into()));
            }
            if state.grasps[..idx].iter().any(|h| h.agent == g.agent || h.object == g.object) {
                return Err(Error::InvalidInput("an agent or object appears in more than one grasp".into()));
            }
        }
        Ok(())
    }

    /// Dynamic terms of an agent including any carried object.
    pub fn terms(&self, state: &WorldState, agent: usize) -> DynamicTerms {
        let model = &self.agents[agent];
        let s = &state.agents[agent];
        match state.grasp_of_agent(agent) {
            Some(c) => coupled_terms(model, s, &self.objects[c.object], c),
            None => agent_terms(model, s),
        }
    }

    /// Re-derives grasped object poses and twists from the carrying agents.
    pub fn sync_grasped(&self, state: &mut WorldState) {
        for c in &state.grasps {
            let model = &self.agents[c.agent];
            let a = &state.agents[c.agent];
            let pose = c.object_pose(model, &a.q);
            let twist = c.object_jacobian(model, &a.q) * a.qd;
            state.objects[c.object] = ObjectState { pose, twist };
        }
    }

    /// Total kinetic energy of agents and carried objects.
    pub fn kinetic_energy(&self, state: &WorldState) -> f64 {
        (0..self.agents.len()).map(|i| state.agents[i].kinetic_energy(&self.terms(state, i).b)).sum()
    }

    fn pack(&self, state: &WorldState) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.agents.len() * AGENT_STRIDE + self.objects.len() * OBJECT_STRIDE);
        for a in &state.agents {
            x.extend(a.q.iter());
            x.extend(a.qd.iter());
        }
        for o in &state.objects {
            x.extend(o.pose.position.iter());
            x.extend(o.pose.orientation.iter());
            x.extend(o.twist.iter());
        }
        x
    }

    fn unpack(&self, template: &WorldState, x: &[f64], time: f64) -> WorldState {
        let mut s = template.clone();
        s.time = time;
        for (i, a) in s.agents.iter_mut().enumerate() {
            let o = i * AGENT_STRIDE;
            a.q = JointVec::from_column_slice(&x[o..o + DOF]);
            a.qd = JointVec::from_column_slice(&x[o + DOF..o + 2 * DOF]);
        }
        let base = self.agents.len() * AGENT_STRIDE;
        for (j, ob) in s.objects.iter_mut().enumerate() {
            let o = base + j * OBJECT_STRIDE;
            // angles stay unwrapped inside a step
            ob.pose = Pose {
                position: Vec3::from_column_slice(&x[o..o + 3]),
                orientation: Vec3::from_column_slice(&x[o + 3..o + 6]),
            };
            ob.twist = Vec6::from_column_slice(&x[o + 6..o + 12]);
        }
        self.sync_grasped(&mut s);
        s
    }

    fn derivative(&self, state: &WorldState, torques: &[JointVec]) -> Result<Vec<f64>> {
        let mut dx = vec![0.0; self.agents.len() * AGENT_STRIDE + self.objects.len() * OBJECT_STRIDE];
        for (i, a) in state.agents.iter().enumerate() {
            let t = self.terms(state, i);
            let rhs = torques[i] - t.n * a.qd - t.g;
            let qdd = t.b.cholesky().map(|c| c.solve(&rhs)).ok_or_else(|| Error::NumericalBlowup {
                time: state.time,
                detail: format!("inertia matrix of agent {} lost positive definiteness", i + 1),
            })?;
            let o = i * AGENT_STRIDE;
            dx[o..o + DOF].copy_from_slice(a.qd.as_slice());
            dx[o + DOF..o + 2 * DOF].copy_from_slice(qdd.as_slice());
        }
        let base = self.agents.len() * AGENT_STRIDE;
        for (j, ob) in state.objects.iter().enumerate() {
            if state.grasp_of_object(j).is_some() {
                continue;
            }
            let model = &self.objects[j];
            let o = base + j * OBJECT_STRIDE;
            let v = Vec3::new(ob.twist[0], ob.twist[1], ob.twist[2]);
            let w = Vec3::new(ob.twist[3], ob.twist[4], ob.twist[5]);
            let e = euler_rate_matrix(&ob.pose.orientation);
            let eta_dot = e.try_inverse().ok_or_else(|| Error::NumericalBlowup {
                time: state.time,
                detail: format!("object {} reached the Euler angle singularity", j + 1),
            })? * w;
            let r = ob.pose.rotation();
            let inertia = model.world_inertia(&r);
            // the support cancels gravity on a resting object, so only the gyroscopic term remains
            let w_dot = inertia.cholesky().map(|c| c.solve(&(-w.cross(&(inertia * w))))).unwrap_or_else(Vec3::zeros);
            dx[o..o + 3].copy_from_slice(v.as_slice());
            dx[o + 3..o + 6].copy_from_slice(eta_dot.as_slice());
            dx[o + 9..o + 12].copy_from_slice(w_dot.as_slice());
        }
        Ok(dx)
    }

    /// One RK4 step with torques held constant over the step.
    pub fn step(&self, state: &WorldState, torques: &[JointVec], dt: f64) -> Result<WorldState> {
        if torques.iter().any(|t| t.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidInput("torques must be finite".into()));
        }
        let fixed = torques.to_vec();
        self.step_closed_loop(state, dt, |_| Ok(fixed.clone()))
    }

    /// One RK4 step with the torques re-evaluated from `control` at every stage.
    pub fn step_closed_loop<F>(&self, state: &WorldState, dt: f64, mut control: F) -> Result<WorldState>
    where
        F: FnMut(&WorldState) -> Result<Vec<JointVec>>,
    {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")));
        }
        let x0 = self.pack(state);
        let stage = |x: &[f64], t: f64, control: &mut F| -> Result<Vec<f64>> {
            let s = self.unpack(state, x, t);
            let tau = control(&s)?;
            if tau.len() != self.agents.len() {
                return Err(Error::InvalidInput("one torque vector per agent is required".into()));
            }
            self.derivative(&s, &tau)
        };
        let axpy = |h: f64, k: &[f64]| -> Vec<f64> { x0.iter().zip(k).map(|(x, k)| x + h * k).collect() };
        let t = state.time;
        let k1 = stage(&x0, t, &mut control)?;
        let k2 = stage(&axpy(0.5 * dt, &k1), t + 0.5 * dt, &mut control)?;
        let k3 = stage(&axpy(0.5 * dt, &k2), t + 0.5 * dt, &mut control)?;
        let k4 = stage(&axpy(dt, &k3), t + dt, &mut control)?;
        let x1: Vec<f64> =
            (0..x0.len()).map(|i| x0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
        if let Some(i) = x1.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericalBlowup {
                time: t + dt,
                detail: format!("state component {i} became non-finite"),
            });
        }
        let mut next = self.unpack(state, &x1, t + dt);
        for o in &mut next.objects {
            o.pose = Pose::new(o.pose.position, o.pose.orientation);
        }
        self.sync_grasped(&mut next);
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn model() -> AgentModel {
        AgentModel::new(AgentParams::default()).unwrap()
    }

    #[test]
    fn closed_form_inertia() {
        // B for a translating base carrying a rod rotating about a horizontal axis
        let m = model();
        let p = &m.params;
        let th = 0.7;
        let s = AgentState { q: JointVec::new(1.0, -2.0, th), qd: JointVec::zeros() };
        let t = agent_terms(&m, &s);
        let total = m.total_mass();
        let h = 0.5 * p.arm_length;
        let i_rod = p.arm_mass * (p.arm_length.powi(2) + p.link_width.powi(2)) / 12.0;
        let expected = JointMat::new(
            total,
            0.0,
            -p.arm_mass * h * th.sin(),
            0.0,
            total,
            0.0,
            -p.arm_mass * h * th.sin(),
            0.0,
            p.arm_mass * h * h + i_rod,
        );
        assert!((t.b - expected).norm() < 1e-12);
        assert!((t.g[2] - p.arm_mass * p.gravity * h * th.cos()).abs() < 1e-12);
        assert_eq!(t.g[0], 0.0);
    }

    #[test]
    fn coriolis_vanishes_at_rest() {
        let m = model();
        let t = agent_terms(&m, &AgentState::at_rest(JointVec::new(0.3, 0.1, -1.0)));
        assert_eq!(t.n * JointVec::zeros(), JointVec::zeros());
        assert_eq!(t.n, JointMat::zeros());
    }

    #[test]
    fn six_spheres_at_home() {
        let m = model();
        let s = m.spheres(&JointVec::zeros());
        assert_eq!(s.len(), 6);
        let z: Vec<f64> = s.iter().map(|s| s.center.z).collect();
        let expect = [0.075, -0.075, 0.225, 0.375, 0.45, 0.45];
        for (a, b) in z.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((s[4].center.x - 0.075).abs() < 1e-12);
        assert!((s[5].center.x - 0.225).abs() < 1e-12);
        assert!((m.end_effector(&JointVec::zeros()) - Vec3::new(0.3, 0.0, 0.45)).norm() < 1e-12);
    }

    #[test]
    fn vertical_arm_is_positionally_singular() {
        let m = model();
        assert!(m.position_manipulability(&JointVec::new(0.0, 0.0, FRAC_PI_2)).abs() < 1e-20);
        assert!(m.position_manipulability(&JointVec::new(0.0, 0.0, 0.3)) > 1e-3);
    }

    #[test]
    fn grasp_matrix_identity_for_zero_offset() {
        let m = model();
        let q = JointVec::new(0.0, 0.0, 0.4);
        let pose = Pose::from_rotation(m.end_effector(&q), &m.arm_rotation(&q));
        let c = GraspCoupling::snap(0, 0, &m, &q, &pose);
        assert!((grasp_matrix(&c, &m, &q) - Mat6::identity()).norm() < 1e-12);
    }

    #[test]
    fn grasp_matrix_lever_arm() {
        let m = model();
        let q = JointVec::new(0.0, 0.0, 0.0);
        let pose = Pose::from_position(m.end_effector(&q) + Vec3::new(0.1, 0.0, 0.0));
        let c = GraspCoupling::snap(0, 0, &m, &q, &pose);
        let g = grasp_matrix(&c, &m, &q);
        let ee_twist = Vec6::new(0.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        let obj = g.transpose() * ee_twist;
        // omega z crossed with r along x gives +y
        assert!((obj - Vec6::new(0.0, 0.1, 0.0, 0.0, 0.0, 1.0)).norm() < 1e-12);
        assert!(g.determinant().abs() > 0.5);
    }

    #[test]
    fn massless_object_leaves_terms_unchanged() {
        let m = model();
        let obj = ObjectModel {
            mass: 0.0,
            inertia: Matrix3::zeros(),
            geometry: BodyGeometry::enclosing_box(Vec3::repeat(0.1)),
            gravity: STANDARD_GRAVITY,
        };
        let s = AgentState { q: JointVec::new(0.1, 0.2, 0.3), qd: JointVec::new(0.5, -0.2, 0.9) };
        let pose = Pose::from_position(m.end_effector(&s.q) + Vec3::new(0.05, 0.0, -0.02));
        let c = GraspCoupling::snap(0, 0, &m, &s.q, &pose);
        let a = agent_terms(&m, &s);
        let b = coupled_terms(&m, &s, &obj, &c);
        assert!((a.b - b.b).norm() < 1e-15);
        assert!((a.n - b.n).norm() < 1e-15);
        assert!((a.g - b.g).norm() < 1e-15);
    }

    #[test]
    fn object_model_rejects_bad_inertia() {
        let geo = BodyGeometry::enclosing_box(Vec3::repeat(0.1));
        assert!(ObjectModel::new(1.0, Matrix3::from_diagonal_element(-1.0), geo.clone(), 0.0).is_err());
        assert!(ObjectModel::new(0.0, Matrix3::identity(), geo, 0.0).is_err());
    }

    #[test]
    fn cube_sphere_radius() {
        let o = ObjectModel::cube(0.5, 0.1, STANDARD_GRAVITY).unwrap();
        assert_eq!(o.geometry.spheres.len(), 1);
        assert!((o.geometry.spheres[0].radius - 0.05 * 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn euler_rates_match_rotation_derivative() {
        let eta = Vec3::new(0.4, -0.3, 1.2);
        let eta_dot = Vec3::new(0.2, 0.7, -0.5);
        let h = 1e-6;
        let r = |e: Vec3| Pose::new(Vec3::zeros(), e).rotation().into_inner();
        let rdot = (r(eta + h * eta_dot) - r(eta - h * eta_dot)) / (2.0 * h);
        let w_hat = rdot * r(eta).transpose();
        let w = Vec3::new(w_hat[(2, 1)], w_hat[(0, 2)], w_hat[(1, 0)]);
        assert!((w - euler_rate_matrix(&eta) * eta_dot).norm() < 1e-8);
    }

    #[test]
    fn rejects_nonpositive_dt() {
        let m = model();
        let world = World { agents: vec![m], objects: vec![] };
        let s = WorldState {
            time: 0.0,
            agents: vec![AgentState::at_rest(JointVec::zeros())],
            objects: vec![],
            grasps: vec![],
        };
        assert!(world.step(&s, &[JointVec::zeros()], 0.0).is_err());
        assert!(world.step(&s, &[JointVec::new(f64::NAN, 0.0, 0.0)], 0.1).is_err());
    }
}
