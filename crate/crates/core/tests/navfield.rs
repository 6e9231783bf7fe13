use cotransport::dynamics::*;
use cotransport::geometry::{Pose, Vec3, Workspace};
use cotransport::navfield::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod common;
use common::{nav_config as config, random_free, scenario1_workspace as workspace, three_movers};

fn model() -> AgentModel {
    AgentModel::new(AgentParams::default()).unwrap()
}

#[test]
fn gradient_matches_central_differences() {
    let (field, _) = three_movers();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let h = 1e-6;
    for _ in 0..100 {
        let qs = random_free(&mut rng, &field);
        let eval = field.evaluate(&qs).unwrap();
        let mut fd = Vec::new();
        for m in 0..qs.len() {
            let mut g = JointVec::zeros();
            for k in 0..3 {
                let mut plus = qs.clone();
                let mut minus = qs.clone();
                plus[m][k] += h;
                minus[m][k] -= h;
                g[k] = (field.phi(&plus).unwrap() - field.phi(&minus).unwrap()) / (2.0 * h);
            }
            fd.push(g);
        }
        let num: f64 = fd.iter().zip(&eval.grad).map(|(a, b)| (a - b).norm_squared()).sum::<f64>().sqrt();
        let den: f64 = fd.iter().map(|a| a.norm_squared()).sum::<f64>().sqrt();
        assert!(num / den < 1e-5, "relative error {} at {:?}", num / den, qs);
    }
}

#[test]
fn gradient_vanishes_at_goal_in_free_space() {
    let ws = workspace();
    let m = model();
    // ee at the region centre: arm pointing down to z = 0.2
    let th = -(0.25f64 / 0.3).asin();
    let q = JointVec::new(-4.0 - 0.3 * th.cos(), -4.5, th);
    assert!((m.end_effector(&q) - ws.regions[0].center).norm() < 1e-12);
    let mover = Mover {
        agent: 0,
        model: m,
        carried: None,
        goal_point: GoalPoint::EndEffector,
        target: ws.regions[0].center,
        forbidden: vec![],
        departure: None,
    };
    let field = NavField::new(vec![mover], vec![], &ws, &config()).unwrap();
    let e = field.evaluate(&[q]).unwrap();
    assert!(e.phi < 1e-28);
    assert!(e.grad[0].norm() < 1e-14);
}

#[test]
fn gradient_symmetric_under_obstacle_relabeling() {
    let (mut field, _) = three_movers();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let qs = random_free(&mut rng, &field);
    let a = field.evaluate(&qs).unwrap();
    field.statics.reverse();
    let b = field.evaluate(&qs).unwrap();
    for (x, y) in a.grad.iter().zip(&b.grad) {
        assert!((x - y).norm() <= 1e-14 * x.norm().max(1.0));
    }
}

#[test]
fn contact_is_singular_and_phi_saturates() {
    let (field, _) = three_movers();
    let qs = vec![JointVec::new(0.0, 0.0, 0.0), JointVec::new(0.1, 0.0, 0.0), JointVec::new(5.0, 5.0, 0.0)];
    assert!(matches!(field.evaluate(&qs), Err(cotransport::Error::SingularField(_))));
    assert_eq!(field.phi(&qs).unwrap(), 1.0);
    assert_eq!(field.beta(&qs).unwrap(), 0.0);
}

fn two_agent_field(gap: f64) -> (NavField, Vec<JointVec>) {
    let ws = workspace();
    let m = model();
    let mk = |agent, target| Mover {
        agent,
        model: m.clone(),
        carried: None,
        goal_point: GoalPoint::EndEffector,
        target,
        forbidden: vec![],
        departure: None,
    };
    let field =
        NavField::new(vec![mk(0, Vec3::new(1.0, 0.0, 0.2)), mk(1, Vec3::new(-1.0, 0.0, 0.2))], vec![], &ws, &config())
            .unwrap();
    // agents side by side along y, arms along +x, base spheres are the closest pair
    let qs = vec![JointVec::new(0.0, 0.0, 0.0), JointVec::new(0.0, 0.45 + gap, 0.0)];
    (field, qs)
}

#[test]
fn beta_matches_exhaustive_pairs() {
    let (field, qs) = two_agent_field(0.5);
    let m = model();
    let a = m.spheres(&qs[0]);
    let b = m.spheres(&qs[1]);
    let mut expect = 1.0;
    for sa in &a {
        for sb in &b {
            expect *= bump(sa.clearance(sb), 2.0);
        }
    }
    let got = field.beta(&qs).unwrap();
    assert!((got - expect).abs() <= 1e-15 * expect.max(1e-300));
    // the nearest pair alone is at d = 0.5 and contributes bump(0.5)
    let nearest = a.iter().flat_map(|sa| b.iter().map(move |sb| sa.clearance(sb))).fold(f64::INFINITY, f64::min);
    assert!((nearest - 0.5).abs() < 1e-12);
    assert!(got <= bump(0.5, 2.0));
}

#[test]
fn beta_saturates_far_away() {
    let (field, _) = two_agent_field(0.0);
    let qs = vec![JointVec::new(-4.0, 0.0, 0.0), JointVec::new(4.0, 0.0, 0.0)];
    assert_eq!(field.beta(&qs).unwrap(), 1.0);
}

#[test]
fn departure_latches_only_when_clear() {
    let (mut field, _) = three_movers();
    let start = vec![JointVec::new(-4.3, -4.5, 0.0), JointVec::new(4.3, 4.5, 0.0), JointVec::new(6.0, -4.0, 0.0)];
    assert!(!field.update_departures(&start));
    let away = vec![JointVec::new(0.0, -1.0, 0.0), JointVec::new(4.3, 4.5, 0.0), JointVec::new(6.0, -4.0, 0.0)];
    let before = field.phi(&away).unwrap();
    assert!(field.update_departures(&away));
    assert!(field.movers[0].departure.is_none());
    assert_eq!(field.movers[0].forbidden.len(), 3);
    assert_eq!(field.phi(&away).unwrap(), before);
}

#[test]
fn gamma_examples() {
    let ws = workspace();
    let m = model();
    let th = -(0.25f64 / 0.3).asin();
    let at = |c: Vec3| JointVec::new(c.x - 0.3 * th.cos(), c.y, th);
    let q = at(ws.regions[1].center);
    assert!(gamma_transition(&m, &q, &ws.regions[1]) < 1e-24);
    assert!((gamma_transition(&m, &q, &ws.regions[0]) - 145.0).abs() < 1e-9);
    let q2 = JointVec::new(q[0] + 2.0, q[1], q[2]);
    assert!((gamma_transition(&m, &q2, &ws.regions[1]) - 4.0).abs() < 1e-12);

    assert!(matches!(gamma_transport(&m, &q, None, &ws.regions[0]), Err(cotransport::Error::InvalidState(_))));
    let at_ee = Pose::from_position(m.end_effector(&q));
    let c = GraspCoupling::snap(0, 0, &m, &q, &at_ee);
    let gt = gamma_transport(&m, &q, Some(&c), &ws.regions[0]).unwrap();
    assert!((gt - gamma_transition(&m, &q, &ws.regions[0])).abs() < 1e-12);
    let one_off = Pose::from_position(ws.regions[0].center + Vec3::new(0.0, 1.0, 0.0));
    let q3 = at(ws.regions[0].center + Vec3::new(0.0, 1.0, 0.0) - Vec3::new(0.0, 0.0, 0.0));
    let c3 = GraspCoupling::snap(0, 0, &m, &q3, &one_off);
    assert!((gamma_transport(&m, &q3, Some(&c3), &ws.regions[0]).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn delta_workspace_examples() {
    let ws = Workspace::new(Vec3::zeros(), 10.0, vec![]).unwrap();
    let m = model();
    let q = JointVec::zeros();
    let hand: f64 = m.spheres(&q).iter().map(|s| (10.0 - s.radius).powi(2) - s.center.norm_squared()).product();
    assert!((delta_workspace(&m, &q, &ws) - hand).abs() <= 1e-12 * hand);
    // base sphere pushed to the boundary
    let edge = JointVec::new(10.0 - 0.225 * (1.0 - 1e-12), 0.0, 0.0);
    let spheres = m.spheres(&edge);
    assert!(spheres[0].center.norm() + spheres[0].radius > 9.99);
    let far = JointVec::new(12.0, 0.0, 0.0);
    assert_eq!(delta_workspace(&m, &far, &ws), 0.0);
}

#[test]
fn phi_limits() {
    let (field, _) = three_movers();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let qs = random_free(&mut rng, &field);
        let p = field.phi(&qs).unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
}

#[test]
fn control_laws() {
    let m = model();
    let obj = ObjectModel::cube(0.5, 0.1, STANDARD_GRAVITY).unwrap();
    let s = AgentState::at_rest(JointVec::new(1.0, 2.0, -0.5));
    let g = agent_terms(&m, &s).g;
    assert_eq!(control_transition(&m, &s, &JointVec::zeros(), 30.0, 1.0), g);
    let moving = AgentState { q: s.q, qd: JointVec::new(0.1, 0.2, 0.3) };
    let grad = JointVec::new(0.5, -0.5, 0.25);
    assert_eq!(control_transition(&m, &moving, &grad, 0.0, 1.0), g - grad);
    let pose = Pose::from_position(m.end_effector(&s.q));
    let c = GraspCoupling::snap(0, 0, &m, &s.q, &pose);
    let gbar = coupled_terms(&m, &s, &obj, &c).g;
    assert_eq!(control_transport(&m, &s, &obj, Some(&c), &JointVec::zeros(), 30.0, 1.0).unwrap(), gbar);
    assert!(control_transport(&m, &s, &obj, None, &grad, 30.0, 1.0).is_err());
}

proptest! {
    #[test]
    fn phi_in_unit_interval(gamma in 0.0..10.0f64, obstacle in 0.0..2.0f64, kappa in 1.0..12.0f64) {
        let p = nav_value(gamma, obstacle, kappa);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert_eq!(p == 0.0, gamma == 0.0);
    }

    #[test]
    fn bump_in_unit_interval(d in -1.0..5.0f64, r in 0.1..4.0f64) {
        let b = bump(d, r);
        prop_assert!((0.0..=1.0).contains(&b));
    }
}
