#![allow(dead_code)]

use std::collections::BTreeSet;

use cotransport::abstraction::{Labeling, SystemState};
use cotransport::dynamics::*;
use cotransport::geometry::{Pose, Region, Sphere, Vec3, Workspace};
use cotransport::ltl::{eval_on_lasso, Formula, LabeledGraph, Letter};
use cotransport::navfield::*;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// States of the two-agent, one-object, two-region system, numbered as in the
/// reference figure: (agent regions | object region | held object, 0 = none).
pub fn figure_states() -> Vec<SystemState> {
    let s = |a1: usize, a2: usize, o: usize, w1: usize, w2: usize| {
        SystemState::new(vec![a1 - 1, a2 - 1], vec![o - 1], vec![w1.checked_sub(1), w2.checked_sub(1)])
    };
    vec![
        s(1, 2, 1, 0, 0),
        s(1, 2, 1, 1, 0),
        s(1, 2, 2, 0, 1),
        s(1, 2, 2, 0, 0),
        s(2, 1, 1, 0, 0),
        s(2, 1, 1, 0, 1),
        s(2, 1, 2, 1, 0),
        s(2, 1, 2, 0, 0),
    ]
}

/// Undirected edges of the reference figure, 1-based.
pub const FIGURE_EDGES: [(usize, usize); 8] = [(1, 2), (1, 5), (5, 6), (2, 7), (7, 8), (3, 4), (4, 8), (3, 6)];

pub fn figure_labeling() -> Labeling {
    let set = |x: &str| BTreeSet::from([x.to_string()]);
    Labeling {
        agents: vec![vec![set("red"), set("blue")], vec![set("green"), set("yellow")]],
        objects: vec![vec![set("Goal1"), set("Goal2")]],
    }
}

pub const SERVICE_FORMULAS: [&str; 3] = ["[]<>(red && <>blue)", "[]<>(green && <>yellow)", "[]<>(Goal1 && <>Goal2)"];

pub fn oracle_corpus() -> Vec<&'static str> {
    let mut v = SERVICE_FORMULAS.to_vec();
    v.extend([
        "<>a",
        "[]a",
        "a U b",
        "X a",
        "<>[]a",
        "[](a -> X b)",
        "!(a U b) || X X a",
        "[]<>a -> []<>b",
        "(a U X b) && <>[]!a",
    ]);
    v
}

pub fn random_letter(rng: &mut impl Rng, atoms: &[String]) -> Letter {
    atoms.iter().filter(|_| rng.random_bool(0.5)).cloned().collect()
}

pub fn random_word(
    rng: &mut impl Rng,
    atoms: &[String],
    max_prefix: usize,
    max_cycle: usize,
) -> (Vec<Letter>, Vec<Letter>) {
    let p = rng.random_range(0..=max_prefix);
    let c = rng.random_range(1..=max_cycle);
    let prefix = (0..p).map(|_| random_letter(rng, atoms)).collect();
    let cycle = (0..c).map(|_| random_letter(rng, atoms)).collect();
    (prefix, cycle)
}

/// Random formula over `atoms` with operator depth at most `depth`.
pub fn random_formula(rng: &mut impl Rng, atoms: &[&str], depth: usize) -> Formula {
    if depth == 0 || rng.random_bool(0.2) {
        return match rng.random_range(0..8) {
            0 => Formula::True,
            1 => Formula::falsum(),
            _ => Formula::atom(atoms.choose(rng).unwrap()),
        };
    }
    let op = rng.random_range(0..10);
    let x = random_formula(rng, atoms, depth - 1);
    let mut y = || random_formula(rng, atoms, depth - 1);
    match op {
        0 => Formula::negate(x),
        1 => Formula::and(x, y()),
        2 => Formula::or(x, y()),
        3 => Formula::next(x),
        4 | 5 => Formula::until(x, y()),
        6 => Formula::eventually(x),
        7 => Formula::always(x),
        _ => Formula::implies(x, y()),
    }
}

/// Direct recursive semantics on the unrolled word; scans at most
/// |prefix| + |cycle| positions ahead, after which positions repeat.
pub fn naive_holds(f: &Formula, prefix: &[Letter], cycle: &[Letter], i: usize) -> bool {
    let (p, c) = (prefix.len(), cycle.len());
    let letter = |i: usize| if i < p { &prefix[i] } else { &cycle[(i - p) % c] };
    let horizon = i..i + p + c;
    let h = |g: &Formula, j: usize| naive_holds(g, prefix, cycle, j);
    match f {
        Formula::True => true,
        Formula::Atom(a) => letter(i).contains(a),
        Formula::Not(x) => !h(x, i),
        Formula::And(a, b) => h(a, i) && h(b, i),
        Formula::Or(a, b) => h(a, i) || h(b, i),
        Formula::Implies(a, b) => !h(a, i) || h(b, i),
        Formula::Next(x) => h(x, i + 1),
        Formula::Until(a, b) => {
            for j in horizon {
                if h(b, j) {
                    return true;
                }
                if !h(a, j) {
                    return false;
                }
            }
            false
        }
        Formula::Eventually(x) => horizon.into_iter().any(|j| h(x, j)),
        Formula::Always(x) => horizon.into_iter().all(|j| h(x, j)),
    }
}

pub fn random_graph(rng: &mut impl Rng, max_states: usize, atoms: &[String]) -> LabeledGraph {
    let n = rng.random_range(1..=max_states);
    let edges = (0..n)
        .map(|_| {
            let mut e: Vec<usize> = (0..rng.random_range(1..=2)).map(|_| rng.random_range(0..n)).collect();
            e.sort_unstable();
            e.dedup();
            e
        })
        .collect();
    let labels = (0..n).map(|_| random_letter(rng, atoms)).collect();
    LabeledGraph { initial: 0, labels, edges }
}

/// Exhaustive search over runs `s_0 … s_{p-1} (s_p … s_{p+c-1})^ω` from the
/// initial state with `p <= max_prefix` and `1 <= c <= max_cycle`.
pub fn brute_force_lasso(
    g: &LabeledGraph,
    f: &Formula,
    max_prefix: usize,
    max_cycle: usize,
) -> Option<(Vec<usize>, Vec<usize>)> {
    fn walk(
        g: &LabeledGraph,
        f: &Formula,
        path: &mut Vec<usize>,
        max_prefix: usize,
        max_cycle: usize,
    ) -> Option<(Vec<usize>, Vec<usize>)> {
        let last = *path.last().unwrap();
        let len = path.len();
        for p in len.saturating_sub(max_cycle)..len.min(max_prefix + 1) {
            if g.edges[last].contains(&path[p]) {
                let word: Vec<Letter> = path.iter().map(|&s| g.labels[s].clone()).collect();
                if eval_on_lasso(f, &word[..p], &word[p..]).unwrap() {
                    return Some((path[..p].to_vec(), path[p..].to_vec()));
                }
            }
        }
        if len < max_prefix + max_cycle {
            for &t in &g.edges[last] {
                path.push(t);
                if let Some(found) = walk(g, f, path, max_prefix, max_cycle) {
                    return Some(found);
                }
                path.pop();
            }
        }
        None
    }
    walk(g, f, &mut vec![g.initial], max_prefix, max_cycle)
}

pub fn agent_model() -> AgentModel {
    AgentModel::new(AgentParams::default()).unwrap()
}

pub fn region(id: usize, x: f64, y: f64) -> Region {
    Region { id, name: format!("p{}", id + 1), center: Vec3::new(x, y, 0.2), radius: 1.0 }
}

pub fn scenario1_workspace() -> Workspace {
    Workspace::with_boundary_factor(
        Vec3::zeros(),
        10.0,
        vec![region(0, -4.0, -4.5), region(1, 4.0, 4.5), region(2, 6.0, -4.0), region(3, -6.0, 4.0)],
        2.0,
    )
    .unwrap()
}

pub fn nav_config() -> NavConfig {
    NavConfig { goal_scale: 20.0, ..NavConfig::default() }
}

/// Three agents: one carrying a cube, two transiting, plus resting obstacles.
pub fn three_movers() -> (NavField, ObjectModel) {
    let ws = scenario1_workspace();
    let m = agent_model();
    let obj = ObjectModel::cube(0.5, 0.1, STANDARD_GRAVITY).unwrap();
    let q0 = JointVec::new(-4.3, -4.5, 0.0);
    let pose = Pose::from_position(m.end_effector(&q0) + Vec3::new(0.12, 0.0, 0.0));
    let coupling = GraspCoupling::snap(0, 0, &m, &q0, &pose);
    let movers = vec![
        Mover {
            agent: 0,
            model: m.clone(),
            carried: Some(CarriedBody { coupling, geometry: obj.geometry.clone() }),
            goal_point: GoalPoint::CarriedObject,
            target: ws.regions[1].center,
            forbidden: vec![ws.regions[2].ball(), ws.regions[3].ball()],
            departure: Some(ws.regions[0].ball()),
        },
        Mover {
            agent: 1,
            model: m.clone(),
            carried: None,
            goal_point: GoalPoint::EndEffector,
            target: ws.regions[0].center,
            forbidden: vec![ws.regions[2].ball(), ws.regions[3].ball()],
            departure: Some(ws.regions[1].ball()),
        },
        Mover {
            agent: 2,
            model: m.clone(),
            carried: None,
            goal_point: GoalPoint::EndEffector,
            target: ws.regions[3].center,
            forbidden: vec![ws.regions[0].ball(), ws.regions[1].ball()],
            departure: Some(ws.regions[2].ball()),
        },
    ];
    let statics = vec![Sphere::new(Vec3::new(0.0, 3.0, 0.3), 0.3), Sphere::new(Vec3::new(2.0, -1.0, 0.1), 0.2)];
    (NavField::new(movers, statics, &ws, &nav_config()).unwrap(), obj)
}

pub fn random_free(rng: &mut ChaCha8Rng, field: &NavField) -> Vec<JointVec> {
    loop {
        let qs: Vec<JointVec> = (0..field.movers.len())
            .map(|_| {
                JointVec::new(rng.random_range(-7.0..7.0), rng.random_range(-7.0..7.0), rng.random_range(-1.4..1.4))
            })
            .collect();
        // keep configurations where some obstacle factor is active but none vanishes
        if let Ok(e) = field.evaluate(&qs) {
            if e.obstacle > 1e-6 && e.obstacle < 1.0 {
                return qs;
            }
        }
    }
}

pub fn random_agent_state(rng: &mut ChaCha8Rng) -> AgentState {
    AgentState {
        q: JointVec::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-3.2..3.2)),
        qd: JointVec::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-3.0..3.0)),
    }
}

pub fn random_coupling(rng: &mut ChaCha8Rng, m: &AgentModel, q: &JointVec) -> GraspCoupling {
    let off = Vec3::new(rng.random_range(-0.15..0.15), rng.random_range(-0.15..0.15), rng.random_range(-0.15..0.15));
    let eta = Vec3::new(rng.random_range(-3.0..3.0), rng.random_range(-1.4..1.4), rng.random_range(-3.0..3.0));
    let pose = Pose::new(m.end_effector(q) + off, eta);
    GraspCoupling::snap(0, 0, m, q, &pose)
}

/// q_dot^T (B_dot - 2N) q_dot with B_dot from central differences along q_dot.
pub fn skew_residual(b: impl Fn(&JointVec) -> JointMat, n: &JointMat, s: &AgentState) -> f64 {
    let h = 1e-6;
    let bdot = (b(&(s.q + h * s.qd)) - b(&(s.q - h * s.qd))) / (2.0 * h);
    s.qd.dot(&((bdot - 2.0 * n) * s.qd))
}
