use std::path::PathBuf;

use cotransport::commands::{
    cmd_plan, cmd_validate, load_scenario, plan_scenario, Overrides, EXIT_INVALID, EXIT_OK, EXIT_UNSATISFIABLE,
};
use cotransport::ltl::{eval_on_lasso, project_plan};
use cotransport::planfile::PlanFile;
use cotransport::scenario::{Scenario, ScenarioFile};
use cotransport::Error;

fn path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn file(name: &str) -> ScenarioFile {
    ScenarioFile::parse(&std::fs::read_to_string(path(name)).unwrap()).unwrap()
}

fn messages(f: &ScenarioFile) -> Vec<String> {
    f.check().iter().map(|v| v.to_string()).collect()
}

#[test]
fn bundled_scenarios_validate() {
    for name in ["scenario1.toml", "scenario2.toml"] {
        assert!(messages(&file(name)).is_empty(), "{name}: {:?}", messages(&file(name)));
        assert_eq!(cmd_validate(&path(name)).code, EXIT_OK);
    }
    let s = Scenario::from_file(file("scenario1.toml")).unwrap();
    assert_eq!(s.initial_discrete.to_string(), "(p1,p2,p3 | p1 | 1,0,0)");
}

#[test]
fn region_outside_margin_is_named() {
    let mut f = file("scenario1.toml");
    f.regions[2].center = [8.5, -4.0, 0.2];
    let m = messages(&f);
    assert!(m.iter().any(|m| m.contains("p3")), "{m:?}");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("margin.toml");
    std::fs::write(&out, f.to_toml().unwrap()).unwrap();
    let o = cmd_validate(&out);
    assert_eq!(o.code, EXIT_INVALID);
    assert!(o.message.contains("p3"), "{}", o.message);
}

#[test]
fn two_agents_in_one_region_are_named() {
    let mut f = file("scenario2.toml");
    f.objects.clear();
    f.agents[0].formula = "true".into();
    f.agents[1].formula = "true".into();
    f.agents[0].q = [-2.45, -3.35, 0.0];
    f.agents[1].q = [-2.45, -2.65, 0.0];
    let m = messages(&f);
    assert_eq!(m.len(), 1, "{m:?}");
    assert!(m[0].starts_with("initial state") && m[0].contains("p1"), "{m:?}");
}

#[test]
fn unknown_proposition_and_bad_formula_are_reported() {
    let mut f = file("scenario2.toml");
    f.agents[0].formula = "[]<>purple".into();
    f.agents[1].formula = "[]<>(green &&".into();
    let m = messages(&f);
    assert!(m.iter().any(|m| m.starts_with("a1") && m.contains("purple")), "{m:?}");
    assert!(m.iter().any(|m| m.starts_with("a2") && m.contains("syntax")), "{m:?}");
}

#[test]
fn undersized_region_fails_packing() {
    let mut f = file("scenario2.toml");
    f.regions[1].radius = 0.3;
    assert!(messages(&f).iter().any(|m| m.starts_with("p2") && m.contains("cannot hold")));
}

#[test]
fn scenario_toml_roundtrip() {
    let f = file("scenario1.toml");
    assert_eq!(ScenarioFile::parse(&f.to_toml().unwrap()).unwrap(), f);
    assert!(matches!(ScenarioFile::parse("name = 3"), Err(Error::Format(_))));
}

#[test]
fn overrides_apply_and_are_validated() {
    let s = load_scenario(&path("scenario2.toml"), Overrides { dt: Some(2e-3), seed: Some(9) }).unwrap();
    assert_eq!((s.env.exec.dt, s.env.exec.seed), (2e-3, 9));
    let bad = load_scenario(&path("scenario2.toml"), Overrides { dt: Some(-1.0), seed: None }).unwrap_err();
    assert_eq!(bad.code, EXIT_INVALID);
    assert!(bad.message.contains("\n  execution"), "{}", bad.message);
}

#[test]
fn plan_file_roundtrip_and_reverification() {
    let s = Scenario::from_file(file("scenario2.toml")).unwrap();
    let plan = plan_scenario(&s).unwrap().unwrap();
    let pf = PlanFile::from_plan(&plan, &s);
    let text = pf.to_toml().unwrap();
    let back = PlanFile::parse(&text).unwrap();
    assert_eq!(back, pf);
    assert_eq!(back.load(&s).unwrap(), plan);

    // every entity formula holds on its own projected word
    let proj = project_plan(&plan, &s.env.labeling);
    for (t, f) in proj.agents.iter().zip(&s.agent_formulas) {
        assert!(eval_on_lasso(f, &t.labels.prefix, &t.labels.cycle).unwrap());
    }
    for (t, f) in proj.objects.iter().zip(&s.object_formulas) {
        assert!(eval_on_lasso(f, &t.labels.prefix, &t.labels.cycle).unwrap());
    }

    // a state that is not a successor breaks the plan
    let mut broken = back.clone();
    let last = broken.cycle.len() - 1;
    broken.cycle[last].objects = vec![2];
    assert!(matches!(broken.load(&s), Err(Error::PlanInconsistency(_))));

    // a valid run of the system that misses the goal is rejected
    let mut idle = back.clone();
    idle.cycle.truncate(1);
    assert!(matches!(idle.load(&s), Err(Error::PlanInconsistency(_))));

    // a plan made for another formula is rejected
    let mut other = back;
    other.formula = "true".into();
    assert!(matches!(other.load(&s), Err(Error::PlanInconsistency(_))));
}

#[test]
fn unsatisfiable_formula_has_its_own_exit_code() {
    let mut f = file("scenario2.toml");
    f.agents[0].formula = "false".into();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("false.toml");
    std::fs::write(&out, f.to_toml().unwrap()).unwrap();
    let o = cmd_plan(&out, None);
    assert_eq!(o.code, EXIT_UNSATISFIABLE, "{}", o.message);

    f.agents[0].formula = "[]red && []blue".into();
    std::fs::write(&out, f.to_toml().unwrap()).unwrap();
    assert_eq!(cmd_plan(&out, None).code, EXIT_UNSATISFIABLE);
}
