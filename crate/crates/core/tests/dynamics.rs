use cotransport::dynamics::*;
use cotransport::geometry::{world_spheres, Pose, Vec3};
use nalgebra::Matrix3;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod common;
use common::{random_agent_state as random_state, random_coupling, skew_residual};

fn model() -> AgentModel {
    AgentModel::new(AgentParams::default()).unwrap()
}

fn cube() -> ObjectModel {
    ObjectModel::cube(0.5, 0.1, STANDARD_GRAVITY).unwrap()
}

#[test]
fn skew_symmetry_agent_and_coupled() {
    let m = model();
    let obj = cube();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2000 {
        let s = random_state(&mut rng);
        let t = agent_terms(&m, &s);
        let r = skew_residual(|q| agent_terms(&m, &AgentState { q: *q, qd: s.qd }).b, &t.n, &s);
        assert!(r.abs() < 1e-8, "agent residual {r}");
        let c = random_coupling(&mut rng, &m, &s.q);
        let tc = coupled_terms(&m, &s, &obj, &c);
        let rc = skew_residual(|q| coupled_terms(&m, &AgentState { q: *q, qd: s.qd }, &obj, &c).b, &tc.n, &s);
        assert!(rc.abs() < 1e-8, "coupled residual {rc}");
    }
}

#[test]
fn coupled_coriolis_matches_christoffel_of_coupled_inertia() {
    // N q_dot is unique even though N is not; compare against Christoffel symbols of B_bar
    let m = model();
    let obj = cube();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let s = random_state(&mut rng);
        let c = random_coupling(&mut rng, &m, &s.q);
        let b = |q: JointVec| coupled_terms(&m, &AgentState { q, qd: s.qd }, &obj, &c).b;
        let h = 1e-6;
        let db: Vec<JointMat> = (0..3)
            .map(|k| {
                let mut e = JointVec::zeros();
                e[k] = h;
                (b(s.q + e) - b(s.q - e)) / (2.0 * h)
            })
            .collect();
        let mut expect = JointVec::zeros();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    expect[k] += 0.5 * (db[i][(k, j)] + db[j][(k, i)] - db[k][(i, j)]) * s.qd[i] * s.qd[j];
                }
            }
        }
        let got = coupled_terms(&m, &s, &obj, &c).n * s.qd;
        assert!((got - expect).norm() < 1e-6 * (1.0 + expect.norm()), "{got} vs {expect}");
    }
}

#[test]
fn gravity_is_potential_gradient() {
    let m = model();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let s = random_state(&mut rng);
        let g = agent_terms(&m, &s).g;
        let h = 1e-6;
        for k in 0..3 {
            let mut e = JointVec::zeros();
            e[k] = h;
            let fd = (m.potential_energy(&(s.q + e)) - m.potential_energy(&(s.q - e))) / (2.0 * h);
            assert!((fd - g[k]).abs() <= 1e-6 * g[k].abs().max(1.0), "k={k}: {fd} vs {}", g[k]);
        }
    }
}

#[test]
fn coupled_gravity_includes_object_weight() {
    let m = model();
    let obj = cube();
    let q = JointVec::new(0.0, 0.0, 0.3);
    let pose = Pose::from_position(m.end_effector(&q) + Vec3::new(0.0, 0.0, -0.05));
    let c = GraspCoupling::snap(0, 0, &m, &q, &pose);
    let s = AgentState::at_rest(q);
    let h = 1e-6;
    let u = |th: f64| {
        let qq = JointVec::new(0.0, 0.0, th);
        m.potential_energy(&qq) + obj.mass * obj.gravity * c.object_position(&m, &qq).z
    };
    let fd = (u(0.3 + h) - u(0.3 - h)) / (2.0 * h);
    let g = coupled_terms(&m, &s, &obj, &c).g;
    assert!((fd - g[2]).abs() < 1e-6 * fd.abs());
}

#[test]
fn jacobian_matches_forward_kinematics() {
    let m = model();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let s = random_state(&mut rng);
        let h = 1e-6;
        let fd = (m.end_effector(&(s.q + h * s.qd)) - m.end_effector(&(s.q - h * s.qd))) / (2.0 * h);
        let v = m.jacobian(&s.q) * s.qd;
        let lin = Vec3::new(v[0], v[1], v[2]);
        assert!((lin - fd).norm() <= 1e-6 * fd.norm().max(1e-3));
    }
    // prismatic base columns are constant unit directions
    let j = m.jacobian(&JointVec::new(1.0, 2.0, 0.7));
    assert_eq!(j.column(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    assert_eq!(j.column(1).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
}

#[test]
fn object_twist_matches_pose_derivative() {
    let m = model();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let s = random_state(&mut rng);
        let c = random_coupling(&mut rng, &m, &s.q);
        let twist = grasp_matrix(&c, &m, &s.q).transpose() * m.jacobian(&s.q) * s.qd;
        let h = 1e-6;
        let pos = |q: JointVec| c.object_position(&m, &q);
        let fd = (pos(s.q + h * s.qd) - pos(s.q - h * s.qd)) / (2.0 * h);
        let lin = Vec3::new(twist[0], twist[1], twist[2]);
        assert!((lin - fd).norm() <= 1e-5 * fd.norm().max(1e-3));
        let rot = |q: JointVec| c.object_rotation(&m, &q).into_inner();
        let rdot = (rot(s.q + h * s.qd) - rot(s.q - h * s.qd)) / (2.0 * h);
        let w_hat = rdot * rot(s.q).transpose();
        let w = Vec3::new(w_hat[(2, 1)], w_hat[(0, 2)], w_hat[(1, 0)]);
        assert!((w - Vec3::new(twist[3], twist[4], twist[5])).norm() < 1e-5 * w.norm().max(1e-3));
    }
}

#[test]
fn gravity_compensation_holds_still() {
    let m = model();
    let world = World { agents: vec![m.clone()], objects: vec![] };
    let q = JointVec::new(1.0, -1.0, 0.6);
    let mut s = WorldState { time: 0.0, agents: vec![AgentState::at_rest(q)], objects: vec![], grasps: vec![] };
    for _ in 0..1000 {
        let g = agent_terms(&m, &s.agents[0]).g;
        s = world.step(&s, &[g], 1e-3).unwrap();
    }
    assert!((s.agents[0].q - q).norm() < 1e-12);
    assert!(s.agents[0].qd.norm() < 1e-12);
}

#[test]
fn free_object_conserves_linear_momentum() {
    let obj = ObjectModel::new(
        2.0,
        Matrix3::from_diagonal(&Vec3::new(0.01, 0.02, 0.03)),
        cotransport::geometry::BodyGeometry::enclosing_box(Vec3::repeat(0.1)),
        0.0,
    )
    .unwrap();
    let world = World { agents: vec![], objects: vec![obj.clone()] };
    let v0 = Vec6::new(0.3, -0.2, 0.1, 0.4, -0.3, 0.2);
    let mut s = WorldState {
        time: 0.0,
        agents: vec![],
        objects: vec![ObjectState { pose: Pose::new(Vec3::zeros(), Vec3::new(0.1, 0.2, 0.3)), twist: v0 }],
        grasps: vec![],
    };
    let l0 = obj.world_inertia(&s.objects[0].pose.rotation()) * Vec3::new(v0[3], v0[4], v0[5]);
    for _ in 0..1000 {
        s = world.step(&s, &[], 1e-3).unwrap();
    }
    let v = s.objects[0].twist;
    let p_err = (obj.mass * (Vec3::new(v[0], v[1], v[2]) - Vec3::new(v0[0], v0[1], v0[2]))).norm();
    assert!(p_err < 1e-10);
    assert!((s.objects[0].pose.position - Vec3::new(0.3, -0.2, 0.1)).norm() < 1e-10);
    // angular momentum is conserved too, up to integration error
    let l = obj.world_inertia(&s.objects[0].pose.rotation()) * Vec3::new(v[3], v[4], v[5]);
    assert!((l - l0).norm() < 1e-6);
}

#[test]
fn resting_object_stays_put_under_gravity() {
    let world = World { agents: vec![], objects: vec![cube()] };
    let pose = Pose::from_position(Vec3::new(1.0, 2.0, 0.2));
    let mut s = WorldState { time: 0.0, agents: vec![], objects: vec![ObjectState::at_rest(pose)], grasps: vec![] };
    for _ in 0..100 {
        s = world.step(&s, &[], 1e-2).unwrap();
    }
    assert_eq!(s.objects[0].pose, pose);
}

fn swing(dt: f64, t_end: f64) -> AgentState {
    let m = model();
    let world = World { agents: vec![m], objects: vec![] };
    let mut s = WorldState {
        time: 0.0,
        agents: vec![AgentState { q: JointVec::new(0.0, 0.0, 0.8), qd: JointVec::new(0.2, -0.1, 0.0) }],
        objects: vec![],
        grasps: vec![],
    };
    let steps = (t_end / dt).round() as usize;
    for _ in 0..steps {
        s = world.step(&s, &[JointVec::new(0.5, 0.0, 0.1)], dt).unwrap();
    }
    s.agents[0]
}

#[test]
fn rk4_converges_at_fourth_order() {
    let a = swing(0.01, 0.5);
    let b = swing(0.005, 0.5);
    let c = swing(0.0025, 0.5);
    let d1 = (a.q - b.q).norm() + (a.qd - b.qd).norm();
    let d2 = (b.q - c.q).norm() + (b.qd - c.qd).norm();
    let ratio = d1 / d2;
    assert!((ratio - 16.0).abs() < 2.0, "ratio {ratio} {d1} {d2}");
}

#[test]
fn grasp_transform_is_constant_while_carried() {
    let m = model();
    let world = World { agents: vec![m.clone()], objects: vec![cube()] };
    let q = JointVec::new(0.0, 0.0, 0.2);
    let pose = Pose::new(m.end_effector(&q) + Vec3::new(0.05, 0.0, 0.0), Vec3::new(0.1, 0.0, 0.0));
    let c = GraspCoupling::snap(0, 0, &m, &q, &pose);
    let mut s = WorldState {
        time: 0.0,
        agents: vec![AgentState { q, qd: JointVec::new(0.1, 0.0, 0.5) }],
        objects: vec![ObjectState::at_rest(pose)],
        grasps: vec![c],
    };
    for _ in 0..500 {
        s = world.step(&s, &[JointVec::new(0.0, 1.0, 0.0)], 1e-3).unwrap();
        let again = GraspCoupling::snap(0, 0, &m, &s.agents[0].q, &s.objects[0].pose);
        assert!((again.offset - c.offset).norm() < 1e-12);
        assert!((again.rotation.into_inner() - c.rotation.into_inner()).norm() < 1e-12);
    }
}

#[test]
fn world_spheres_checks_dimension() {
    let m = model();
    assert!(world_spheres(&m, &[0.0, 0.0]).is_err());
    assert_eq!(world_spheres(&m, &[0.0, 0.0, 0.0]).unwrap().len(), 6);
    assert_eq!(world_spheres(&cube(), &[0.0; 6]).unwrap().len(), 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn inertia_is_spd(x in -9.0..9.0f64, y in -9.0..9.0f64, th in -3.15..3.15f64,
                      ox in -0.2..0.2f64, oz in -0.2..0.2f64) {
        let m = model();
        let s = AgentState::at_rest(JointVec::new(x, y, th));
        let b = agent_terms(&m, &s).b;
        prop_assert!(b.cholesky().is_some());
        let pose = Pose::from_position(m.end_effector(&s.q) + Vec3::new(ox, 0.0, oz));
        let c = GraspCoupling::snap(0, 0, &m, &s.q, &pose);
        let bb = coupled_terms(&m, &s, &cube(), &c).b;
        prop_assert!(bb.cholesky().is_some());
        prop_assert!((bb - b).symmetric_eigenvalues().min() > -1e-12);
    }

    #[test]
    fn base_translation_moves_spheres_rigidly(x in -5.0..5.0f64, y in -5.0..5.0f64, th in -3.0..3.0f64,
                                              dx in -3.0..3.0f64, dy in -3.0..3.0f64) {
        let m = model();
        let a = m.spheres(&JointVec::new(x, y, th));
        let b = m.spheres(&JointVec::new(x + dx, y + dy, th));
        for (sa, sb) in a.iter().zip(&b) {
            prop_assert!((sb.center - sa.center - Vec3::new(dx, dy, 0.0)).norm() < 1e-12);
        }
    }
}
