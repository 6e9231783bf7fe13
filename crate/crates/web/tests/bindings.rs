use cotransport_web::{heatmap, plan, scene, simulate};

fn page_scenario() -> String {
    let page = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/www/index.html")).unwrap();
    let start = page.find(r#"id="default-scenario">"#).unwrap() + r#"id="default-scenario">"#.len();
    let end = start + page[start..].find("</script>").unwrap();
    page[start..end].to_string()
}

#[test]
fn page_scenario_loads() {
    let v = scene(&page_scenario()).unwrap();
    assert_eq!(v.agents, ["a1", "a2"]);
    assert_eq!(v.regions.len(), 2);
    assert_eq!(v.starts[1], [2.3, 3.0]);
}

#[test]
fn heatmap_is_bounded_and_low_at_goal() {
    let text = page_scenario();
    let n = 41;
    let h = heatmap(&text, 0, 1, n).unwrap();
    assert_eq!(h.phi.len(), n * n);
    assert!(h.phi.iter().all(|p| (0.0..=1.0).contains(p)));
    // corner samples lie outside the workspace
    assert_eq!(h.phi[0], 1.0);
    let [x0, y0, side] = h.extent;
    let cell = |x: f64, y: f64| {
        let col = ((x - x0) / side * (n - 1) as f64).round() as usize;
        let row = ((y0 + side - y) / side * (n - 1) as f64).round() as usize;
        h.phi[row * n + col]
    };
    // a2 sits in p2, so probe the approach side
    assert!(cell(1.0, 2.0) < 0.1);
    assert!(cell(1.0, 2.0) < cell(0.0, -5.0));
    assert!(heatmap(&text, 5, 0, n).is_err());
    assert!(heatmap(&text, 0, 0, 1).is_err());
}

#[test]
fn plan_text_names_the_formula() {
    let text = plan(&page_scenario()).unwrap();
    assert!(text.contains("formula"), "{text}");
    assert!(text.contains("[[cycle]]"), "{text}");
    assert!(plan("not toml").is_err());
}

#[test]
fn simulated_paths_cover_every_entity() {
    let run = simulate(&page_scenario(), 1).unwrap();
    assert!(run.success, "{}", run.summary);
    let mut names: Vec<_> = run.paths.iter().map(|p| (p.entity.as_str(), p.kind.as_str())).collect();
    names.sort();
    assert_eq!(names, [("a1", "agent"), ("a2", "agent"), ("o1", "object")]);
    assert!(run.paths.iter().all(|p| p.points.len() > 1));
    assert!(run.summary.contains("round 1"), "{}", run.summary);
}
