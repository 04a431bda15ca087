//! Files written by the commands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use levelcross::epfind::EpReport;
use levelcross::model::{Scenario, SweepGrid};
use levelcross::sweep::{CrossingReport, Trajectory};

use crate::svg::{Plot, Series};

/// Every number is written with 17 significant digits so it reads back exactly.
fn number(x: f64) -> String {
    format!("{x:.16e}")
}

/// Columns: `a`, `E_1..E_N`, `Gamma_half_1..Gamma_half_N`, `A_1..A_N`.
pub fn trajectories_csv(t: &[Trajectory]) -> String {
    let n = t.len();
    let mut out = String::from("a");
    for prefix in ["E", "Gamma_half", "A"] {
        for i in 1..=n {
            let _ = write!(out, ",{prefix}_{i}");
        }
    }
    out.push('\n');
    for k in 0..t.first().map_or(0, Trajectory::len) {
        out.push_str(&number(t[0].points[k].a));
        for b in t {
            out.push(',');
            out.push_str(&number(b.points[k].energy()));
        }
        for b in t {
            out.push(',');
            out.push_str(&number(b.points[k].half_width()));
        }
        for b in t {
            out.push(',');
            out.push_str(&number(b.points[k].pair.norm_a));
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct CrossingEntry {
    kind: &'static str,
    a_cr: f64,
    branches: [usize; 2],
    max_width_split: f64,
    exchange_detected: bool,
}

/// Crossing reports with 1-based branch labels.
pub fn crossings_json(reports: &[CrossingReport]) -> String {
    let entries: Vec<CrossingEntry> = reports
        .iter()
        .map(|r| CrossingEntry {
            kind: r.kind.name(),
            a_cr: r.a_cr,
            branches: [r.branches.0 + 1, r.branches.1 + 1],
            max_width_split: r.max_width_split,
            exchange_detected: r.exchange_detected,
        })
        .collect();
    pretty(&entries)
}

#[derive(Serialize)]
struct EpEntry {
    tunable: String,
    a: f64,
    value: f64,
    gap: f64,
    pair: [usize; 2],
    /// `null` when a probe stayed defective.
    norm_blowup: Option<f64>,
    converged: bool,
    iterations: usize,
}

pub fn ep_json(r: &EpReport) -> String {
    pretty(&EpEntry {
        tunable: r.tunable.to_string(),
        a: r.location.0,
        value: r.location.1,
        gap: r.gap,
        pair: [r.pair.0 + 1, r.pair.1 + 1],
        norm_blowup: r.norm_blowup.is_finite().then_some(r.norm_blowup),
        converged: r.converged,
        iterations: r.iterations,
    })
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Tolerances {
    pub root: f64,
    pub defect: f64,
    pub energy: f64,
    pub match_tie: f64,
}

impl Tolerances {
    pub fn current() -> Self {
        Self {
            root: levelcross::eig::ROOT_TOLERANCE,
            defect: levelcross::eig::DEFECT_THRESHOLD,
            energy: levelcross::sweep::ENERGY_TOLERANCE,
            match_tie: levelcross::sweep::MATCH_TIE_TOLERANCE,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GridEntry {
    pub a_min: f64,
    pub a_max: f64,
    pub steps: usize,
}

impl From<SweepGrid> for GridEntry {
    fn from(g: SweepGrid) -> Self {
        Self {
            a_min: g.a_min,
            a_max: g.a_max,
            steps: g.steps,
        }
    }
}

/// Record of one run. The embedded scenario is the one actually swept, after
/// any grid or profile override.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub label: String,
    pub grid: GridEntry,
    pub tolerances: Tolerances,
    pub version: String,
    pub threads: Option<usize>,
    pub outputs: Vec<String>,
    pub duration_seconds: f64,
    pub scenario: serde_json::Value,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read manifest {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid manifest {}", path.display()))
    }

    pub fn scenario(&self) -> Result<Scenario> {
        Scenario::from_json(&self.scenario.to_string()).map_err(|e| anyhow::anyhow!("{e}"))
    }
}

pub fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

/// `(energies, widths)` panels with dashed unperturbed levels.
pub fn plots(s: &Scenario, t: &[Trajectory]) -> (String, String) {
    let x: Vec<f64> = t[0].points.iter().map(|p| p.a).collect();
    let panel = |title: &str, y_label: &str, branch: &dyn Fn(&Trajectory) -> Vec<f64>, level: &dyn Fn(&Trajectory) -> Vec<f64>| {
        let mut series: Vec<Series> = t
            .iter()
            .enumerate()
            .map(|(i, b)| Series { values: level(b), dashed: true, color: i })
            .collect();
        series.extend(t.iter().enumerate().map(|(i, b)| Series { values: branch(b), dashed: false, color: i }));
        Plot {
            title,
            x_label: "a",
            y_label,
            x: &x,
            series,
        }
        .render()
    };
    let title_e = format!("{}: energies E_i", s.label());
    let title_w = format!("{}: widths Gamma_i/2", s.label());
    let energies = panel(
        &title_e,
        "E",
        &|b| b.energies(),
        &|b| b.unperturbed.iter().map(|u| u.re).collect(),
    );
    let widths = panel(
        &title_w,
        "Gamma/2",
        &|b| b.half_widths(),
        &|b| b.unperturbed.iter().map(|u| -u.im).collect(),
    );
    (energies, widths)
}
