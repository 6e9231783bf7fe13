//! Trajectory CSV, SVG rendering and the round summary.
//!
//! CSV columns: `t,round,entity,kind,x0..x5,phi,lyapunov,min_clearance`.
//! Agents store `q` then `q_dot` in `x0..x5`; objects store position then
//! yaw, pitch, roll. Floats are written with 17 significant digits so a file
//! read back reproduces the values bit for bit.

use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::abstraction::describe_assignment;
use crate::error::{Error, Result};
use crate::executor::{Execution, TraceRow, Trajectory};
use crate::geometry::Workspace;
use crate::ltl::Plan;

pub const CSV_HEADER: [&str; 13] =
    ["t", "round", "entity", "kind", "x0", "x1", "x2", "x3", "x4", "x5", "phi", "lyapunov", "min_clearance"];

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(format!("trajectory csv: {e}"))
}

pub fn write_csv(trajectory: &Trajectory, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for r in &trajectory.rows {
        let mut rec = vec![float(r.t), r.round.to_string(), r.entity.clone(), r.kind.to_string()];
        rec.extend(r.x.iter().map(|&v| float(v)));
        rec.extend([float(r.phi), float(r.lyapunov), float(r.min_clearance)]);
        w.write_record(&rec).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

pub fn read_csv(input: impl Read) -> Result<Trajectory> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_error)?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Format(format!(
            "unexpected trajectory header: {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let line = n + 2;
        let num = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|_| Error::Format(format!("line {line}: column {} is not a number", CSV_HEADER[i])))
        };
        let kind = match &rec[3] {
            "agent" => "agent",
            "object" => "object",
            other => return Err(Error::Format(format!("line {line}: unknown kind '{other}'"))),
        };
        let round = rec[1].parse().map_err(|_| Error::Format(format!("line {line}: bad round number")))?;
        let mut x = [0.0; 6];
        for (k, v) in x.iter_mut().enumerate() {
            *v = num(4 + k)?;
        }
        rows.push(TraceRow {
            t: num(0)?,
            round,
            entity: rec[2].to_string(),
            kind,
            x,
            phi: num(10)?,
            lyapunov: num(11)?,
            min_clearance: num(12)?,
        });
    }
    Ok(Trajectory { rows })
}

type Path = (String, &'static str, Vec<(f64, f64)>);

/// Entity ids in order of first appearance with their planar paths.
fn paths(trajectory: &Trajectory) -> Vec<Path> {
    let mut out: Vec<Path> = Vec::new();
    for r in &trajectory.rows {
        let p = (r.x[0], r.x[1]);
        match out.iter_mut().find(|(id, _, _)| *id == r.entity) {
            Some((_, _, pts)) => pts.push(p),
            None => out.push((r.entity.clone(), r.kind, vec![p])),
        }
    }
    out
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Top view: workspace disk, regions, one polyline per entity with start
/// (circle) and end (square) markers.
pub fn render_svg(trajectory: &Trajectory, workspace: &Workspace) -> String {
    let (cx, cy, r0) = (workspace.center.x, workspace.center.y, workspace.radius);
    let size = 800.0;
    let scale = size / (2.2 * r0);
    let px = |x: f64, y: f64| (size / 2.0 + (x - cx) * scale, size / 2.0 - (y - cy) * scale);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
    );
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let (wx, wy) = px(cx, cy);
    let _ = writeln!(
        s,
        r##"<circle class="workspace" cx="{wx:.2}" cy="{wy:.2}" r="{:.2}" fill="#f4f4f4" stroke="#333" stroke-width="2"/>"##,
        r0 * scale
    );
    for reg in &workspace.regions {
        let (x, y) = px(reg.center.x, reg.center.y);
        let _ = writeln!(
            s,
            r##"<circle class="region" cx="{x:.2}" cy="{y:.2}" r="{:.2}" fill="#fff3c4" stroke="#b08800"/>"##,
            reg.radius * scale
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{y:.2}" font-size="14" text-anchor="middle">{}</text>"#,
            escape(&reg.name)
        );
    }
    for (n, (id, kind, pts)) in paths(trajectory).iter().enumerate() {
        let color = PALETTE[n % PALETTE.len()];
        let dash = if *kind == "object" { r#" stroke-dasharray="6 3""# } else { "" };
        let points: Vec<String> = pts
            .iter()
            .map(|&(x, y)| {
                let (u, v) = px(x, y);
                format!("{u:.2},{v:.2}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="trajectory" data-entity="{}" points="{}" fill="none" stroke="{color}" stroke-width="2"{dash}/>"#,
            escape(id),
            points.join(" ")
        );
        let (sx, sy) = px(pts[0].0, pts[0].1);
        let (ex, ey) = px(pts[pts.len() - 1].0, pts[pts.len() - 1].1);
        let _ = writeln!(s, r#"<circle class="start" cx="{sx:.2}" cy="{sy:.2}" r="5" fill="{color}"/>"#);
        let _ = writeln!(
            s,
            r#"<rect class="end" x="{:.2}" y="{:.2}" width="10" height="10" fill="{color}"/>"#,
            ex - 5.0,
            ey - 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" fill="{color}">{}</text>"#,
            sx + 7.0,
            sy - 7.0,
            escape(id)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Plain-text account of an execution, one block per round.
pub fn round_summary(plan: &Plan, execution: &Execution) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "plan: prefix {} steps, cycle {} steps", plan.states.prefix.len(), plan.states.cycle.len());
    for r in &execution.log.rounds {
        let d = &r.diagnostics;
        let _ = writeln!(s, "round {}: {}", r.step, describe_assignment(plan.step(r.step - 1)));
        let _ = writeln!(s, "  status: {}", if r.success { "ok" } else { "failed" });
        let _ = writeln!(s, "  completed at t = {:.3} s", r.completion_time);
        let _ = writeln!(s, "  min clearance: {:.4} m", d.min_clearance);
        let _ = writeln!(s, "  max phi: {:.6}", d.max_phi);
        let _ = writeln!(s, "  V increases above tolerance: {}", d.lyapunov_violations);
        if d.kicks > 0 {
            let _ = writeln!(s, "  saddle escapes: {} (kappa {})", d.kicks, d.kappa);
        }
        if let Some(reason) = &r.failure {
            let _ = writeln!(s, "  reason: {reason}");
        }
    }
    for (i, s_k) in execution.log.boundaries.iter().enumerate() {
        let _ = writeln!(s, "boundary {i}: {s_k}");
    }
    match &execution.failure {
        None => {
            let _ = writeln!(s, "result: all {} rounds succeeded", execution.log.rounds.len());
        }
        Some(e) => {
            let _ = writeln!(s, "result: stopped, {e}");
        }
    }
    s
}
