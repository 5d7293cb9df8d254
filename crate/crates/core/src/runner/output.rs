//! Run artifacts: reward log, policy, and SVG views of the disc and paths.

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::{RunReport, Snapshot, TrainingRecord};
use crate::envs::LabyrinthConfig;
use crate::error::{Error, Result};
use crate::swarm::write_trajectory_csv;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// `rewards.csv` contents. Floats use the shortest round-trip form, so equal
/// runs give equal bytes.
pub fn rewards_csv(records: &[TrainingRecord]) -> String {
    let mut s = String::from("generation,best,mean,player\n");
    for r in records {
        let _ = writeln!(s, "{},{},{},{}", r.generation, r.best, r.mean, r.player.as_deref().unwrap_or(""));
    }
    s
}

/// File name of the snapshot at time `t`.
pub fn snapshot_name(t: f64) -> String {
    format!("points_T{t}.svg")
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes every artifact of `report` into `dir`, creating it if needed, and
/// returns the written paths.
pub fn write_outputs(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = vec![
        write(dir, "rewards.csv", &rewards_csv(&report.records))?,
        write(
            dir,
            "policy.json",
            &(serde_json::to_string_pretty(&report.policy).expect("policy serializes") + "\n"),
        )?,
        write(dir, "rewards.svg", &rewards_svg(&report.records))?,
    ];
    for s in &report.snapshots {
        written.push(write(dir, &snapshot_name(s.t), &disc_svg(s))?);
    }
    if let Some((env, path)) = &report.path {
        written.push(write(dir, "path.svg", &labyrinth_svg(env, path))?);
    }
    if let Some(traj) = &report.trajectory {
        let path = dir.join("trajectory.csv");
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        write_trajectory_csv(traj, BufWriter::new(file)).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

fn svg_open(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    )
}

/// Disc points at one time, one colour per group.
pub fn disc_svg(s: &Snapshot) -> String {
    let size = 400.0;
    let c = size / 2.0;
    let r = 180.0;
    let mut out = svg_open(size, size);
    let _ = writeln!(out, "<circle cx=\"{c}\" cy=\"{c}\" r=\"{r}\" fill=\"none\" stroke=\"black\"/>");
    let _ = writeln!(out, "<text x=\"8\" y=\"18\" font-size=\"14\">t = {:.3}</text>", s.t);
    for (g, (name, pts)) in s.groups.iter().enumerate() {
        let colour = PALETTE[g % PALETTE.len()];
        let _ = writeln!(
            out,
            "<text x=\"8\" y=\"{}\" font-size=\"12\" fill=\"{colour}\">{name}</text>",
            36 + 16 * g
        );
        for z in pts {
            let _ = writeln!(
                out,
                "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"4\" fill=\"{colour}\"/>",
                c + r * z.re,
                c - r * z.im
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Best and mean score per generation, one pair of lines per player.
pub fn rewards_svg(records: &[TrainingRecord]) -> String {
    let (w, h, pad) = (600.0, 360.0, 40.0);
    let mut out = svg_open(w, h);
    let finite = records.iter().flat_map(|r| [r.best, r.mean]).filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let last = records.iter().map(|r| r.generation).max().unwrap_or(0).max(1) as f64;
    if lo.is_finite() {
        let span = if hi > lo { hi - lo } else { 1.0 };
        let px = |g: usize| pad + (w - 2.0 * pad) * g as f64 / last;
        let py = |v: f64| h - pad - (h - 2.0 * pad) * (v - lo) / span;
        let mut players: Vec<Option<&str>> = Vec::new();
        for r in records {
            if !players.contains(&r.player.as_deref()) {
                players.push(r.player.as_deref());
            }
        }
        for (i, player) in players.iter().enumerate() {
            let colour = PALETTE[i % PALETTE.len()];
            let rows: Vec<&TrainingRecord> = records.iter().filter(|r| r.player.as_deref() == *player).collect();
            for (pick, dash) in [(0, ""), (1, " stroke-dasharray=\"4 3\"")] {
                let pts: Vec<String> = rows
                    .iter()
                    .map(|r| (r.generation, if pick == 0 { r.best } else { r.mean }))
                    .filter(|(_, v)| v.is_finite())
                    .map(|(g, v)| format!("{:.2},{:.2}", px(g), py(v)))
                    .collect();
                let _ = writeln!(
                    out,
                    "<polyline fill=\"none\" stroke=\"{colour}\"{dash} points=\"{}\"/>",
                    pts.join(" ")
                );
            }
            let label = player.map_or("best (solid), mean (dashed)".to_string(), |p| format!("player {p}"));
            let _ = writeln!(
                out,
                "<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{colour}\">{label}</text>",
                pad + 8.0,
                pad - 22.0 + 14.0 * i as f64
            );
        }
        let _ = writeln!(out, "<text x=\"4\" y=\"{}\" font-size=\"11\">{lo:.3}</text>", h - pad);
        let _ = writeln!(out, "<text x=\"4\" y=\"{}\" font-size=\"11\">{hi:.3}</text>", pad);
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"11\">generation {}</text>",
            w - pad - 90.0,
            h - 10.0,
            last
        );
    }
    let _ = writeln!(
        out,
        "<rect x=\"{pad}\" y=\"{pad}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    out.push_str("</svg>\n");
    out
}

fn arc_path(cx: f64, cy: f64, r: f64, start_deg: f64, end_deg: f64) -> String {
    let (a0, a1) = (start_deg.to_radians(), end_deg.to_radians());
    let large = if end_deg - start_deg > 180.0 { 1 } else { 0 };
    format!(
        "M {:.3} {:.3} A {r:.3} {r:.3} 0 {large} 0 {:.3} {:.3}",
        cx + r * a0.cos(),
        cy - r * a0.sin(),
        cx + r * a1.cos(),
        cy - r * a1.sin()
    )
}

/// Circles of the labyrinth with barriers in red and the walk on top.
pub fn labyrinth_svg(env: &LabyrinthConfig, path: &[[f64; 2]]) -> String {
    let size = 500.0;
    let c = size / 2.0;
    let outer = env.radii.iter().copied().fold(0.0, f64::max).max(1.0);
    let reach = path.iter().map(|p| p[0].hypot(p[1])).fold(outer, f64::max);
    let scale = (c - 20.0) / reach;
    let mut out = svg_open(size, size);
    for (i, &radius) in env.radii.iter().enumerate() {
        for arc in &env.arcs[i] {
            let barrier = env.is_barrier(arc);
            let (colour, width) = if barrier { ("#d62728", 4) } else { ("#999999", 2) };
            let _ = writeln!(
                out,
                "<path d=\"{}\" fill=\"none\" stroke=\"{colour}\" stroke-width=\"{width}\"/>",
                arc_path(c, c, scale * radius, arc.start, arc.end)
            );
            if !barrier {
                let mid = (0.5 * (arc.start + arc.end)).to_radians();
                let _ = writeln!(
                    out,
                    "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" fill=\"#555555\">{}</text>",
                    c + scale * radius * mid.cos() + 3.0,
                    c - scale * radius * mid.sin() - 3.0,
                    arc.reward
                );
            }
        }
    }
    let pts: Vec<String> = path
        .iter()
        .map(|p| format!("{:.3},{:.3}", c + scale * p[0], c - scale * p[1]))
        .collect();
    let _ = writeln!(
        out,
        "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>",
        PALETTE[0],
        pts.join(" ")
    );
    for p in path {
        let _ = writeln!(
            out,
            "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"3\" fill=\"{}\"/>",
            c + scale * p[0],
            c - scale * p[1],
            PALETTE[0]
        );
    }
    out.push_str("</svg>\n");
    out
}
