//! Report layout shared by every subcommand.

use std::io::Write;

use beurling::battery::{CriterionReport, SuiteConfig};
use beurling::defects::DefectPackage;
use beurling::dilation::DilationDefects;
use beurling::hardy::{AhernClark, StructuralReport};
use beurling::numerics::{Check, Tolerances};
use beurling::tuples::Classification;
use serde::Serialize;

/// Resolved configuration echoed into every report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub tolerances: Tolerances,
    pub truncation_degree: Option<usize>,
    pub grid_per_axis: usize,
    pub seed: u64,
    pub window_margin: usize,
    pub window: bool,
    pub output_path: Option<String>,
}

impl RunConfig {
    pub fn suite(&self) -> SuiteConfig {
        SuiteConfig {
            seed: self.seed,
            tol: self.tolerances,
            grid_per_axis: self.grid_per_axis,
            window_margin: self.window_margin,
            degree: self.truncation_degree,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DefectSummary {
    pub szego_min_eig: f64,
    pub first_kind_rank: Option<usize>,
    pub joint_rank: Option<usize>,
    pub joint_min_eig: f64,
    pub joint_anti_hermitian_residual: f64,
    pub commutator_min_eig: f64,
}

impl DefectSummary {
    pub fn from_package(pkg: &DefectPackage) -> Self {
        Self {
            szego_min_eig: pkg.szego_min_eig,
            first_kind_rank: pkg.first_kind.as_ref().map(|d| d.space.dim()),
            joint_rank: pkg.joint.rank(),
            joint_min_eig: pkg.joint.min_eig,
            joint_anti_hermitian_residual: pkg.joint.anti_hermitian_residual,
            commutator_min_eig: pkg.commutator.min_eig,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PointValue {
    pub point: Vec<[f64; 2]>,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CharFnSummary {
    pub input_dim: usize,
    pub output_dim: usize,
    pub windowed: bool,
    pub grid_per_axis: usize,
    pub inner_residual: f64,
    pub max_sampled_norm: f64,
    pub values: Vec<PointValue>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HardySummary {
    pub n: usize,
    pub degree: usize,
    pub window_degree: Option<usize>,
    pub symbol_inner_residual: f64,
    pub structural: StructuralReport,
    pub growth: AhernClark,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoincidenceSummary {
    pub unitary_source: String,
    pub sample_points: usize,
    pub residual: f64,
    pub unitarity_defect: f64,
    pub tau: Vec<Vec<[f64; 2]>>,
    pub tau_star: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteSummary {
    pub all_pass: bool,
    pub criteria: Vec<CriterionReport>,
}

/// Wall-clock data; the only field that differs between identical runs.
#[derive(Debug, Clone, Serialize)]
pub struct Timestamp {
    pub started_utc: String,
    pub wall_seconds: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub criterion_seconds: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub command: String,
    pub config: RunConfig,
    pub crate_version: String,
    pub timestamp: Timestamp,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<Classification>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub defect_summary: Option<DefectSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dilation_defects: Option<DilationDefects>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub charfn_summary: Option<CharFnSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hardy: Option<HardySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coincidence: Option<CoincidenceSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<SuiteSummary>,
    pub checks: Vec<Check>,
    pub all_pass: bool,
    pub provenance: Provenance,
}

impl Report {
    pub fn new(provenance: Provenance) -> Self {
        Self {
            classification: None,
            defect_summary: None,
            dilation_defects: None,
            charfn_summary: None,
            hardy: None,
            coincidence: None,
            suite: None,
            checks: Vec::new(),
            all_pass: true,
            provenance,
        }
    }

    pub fn finish(&mut self) {
        self.all_pass = self.checks.iter().all(|c| c.pass);
    }
}

pub fn write_json<W: Write>(report: &Report, mut out: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut out, report)?;
    writeln!(out)
}

pub fn write_csv<W: Write>(report: &Report, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["check", "value", "threshold", "pass"])?;
    for c in &report.checks {
        w.write_record([
            c.name.clone(),
            format!("{:e}", c.value),
            format!("{:e}", c.threshold),
            c.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
