//! End-to-end experiments emitting tidy CSV tables.
//!
//! Spiral point sets stand in for extremal systems. Operators that need a
//! positive quadrature rule run on oversampled spirals with
//! `⌈oversample·(μ+1)²⌉` nodes, because spirals with exactly `(μ+1)²` nodes
//! are numerically singular at degree `μ`.

use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{bail, ensure, Context, Result};
use sphapprox_core::analysis::{lebesgue_constant, sup_error, ErrorMask, OperatorSpec};
use sphapprox_core::approximation::{build_orthonormal_basis, ray, vp_mean_fit};
use sphapprox_core::functions::{cone_center, f2, fcone_circle, SingularCircle, CONE_RADIUS};
use sphapprox_core::geometry::{generate_spiral, mesh_report};
use sphapprox_core::harmonics::dim;
use sphapprox_core::quadrature::solve_weights;
use sphapprox_core::PointSet;

use crate::io::{fmt_float, load_points};

/// Width of the band around the cone rim left out of masked errors.
pub const GIBBS_MASK_RADIUS: f64 = 0.1;
/// Oversampling factor for spiral sets that must carry a positive rule.
pub const DEFAULT_OVERSAMPLE: f64 = 1.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentId {
    /// Lebesgue constants of least squares and hyperinterpolation.
    Lebesgue,
    /// Lebesgue constants of the filtered operators for several θ.
    Vp,
    /// Sup errors of the mean for `f2` near the cone rim.
    Gibbs,
    /// Separation, mesh norm and mesh ratio of spiral sets.
    Mesh,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 4] = [Self::Lebesgue, Self::Vp, Self::Gibbs, Self::Mesh];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Lebesgue => "fig-lebesgue",
            Self::Vp => "fig-vp",
            Self::Gibbs => "fig-gibbs",
            Self::Mesh => "fig-mesh",
        }
    }

    pub fn default_degrees(&self) -> Vec<usize> {
        match self {
            Self::Lebesgue => vec![5, 10, 15, 20, 25],
            Self::Vp => vec![5, 10, 15, 20],
            Self::Gibbs => vec![20],
            Self::Mesh => vec![10, 20, 30, 40, 50],
        }
    }

    pub fn default_thetas(&self) -> Vec<f64> {
        match self {
            Self::Vp => vec![0.3, 0.5, 1.0],
            Self::Gibbs => vec![0.0, 0.1, 0.2],
            Self::Lebesgue | Self::Mesh => vec![0.0],
        }
    }

    /// Evaluation grid size as a multiple of the node count.
    pub fn default_eval_factor(&self) -> usize {
        match self {
            Self::Mesh => 16,
            _ => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PointSource {
    Spiral,
    File(PathBuf),
}

impl PointSource {
    pub fn parse(s: &str) -> Self {
        if s == "spiral" {
            Self::Spiral
        } else {
            Self::File(PathBuf::from(s))
        }
    }

    fn describe(&self) -> String {
        match self {
            Self::Spiral => "spiral".into(),
            Self::File(p) => p.display().to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub id: ExperimentId,
    pub degrees: Vec<usize>,
    pub thetas: Vec<f64>,
    pub source: PointSource,
    pub eval_factor: usize,
    pub oversample: f64,
    /// Recorded in the metadata; the current experiments are deterministic
    /// without it.
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(id: ExperimentId) -> Self {
        Self {
            id,
            degrees: id.default_degrees(),
            thetas: id.default_thetas(),
            source: PointSource::Spiral,
            eval_factor: id.default_eval_factor(),
            oversample: DEFAULT_OVERSAMPLE,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.degrees.is_empty(), "the degree list is empty");
        ensure!(!self.thetas.is_empty(), "the theta list is empty");
        for &t in &self.thetas {
            ensure!((0.0..=1.0).contains(&t), "theta {t} is outside [0, 1]");
        }
        ensure!(self.eval_factor >= 1, "eval factor must be at least 1");
        ensure!(self.oversample >= 1.0, "oversampling factor must be at least 1");
        Ok(())
    }

    /// The node set for an operator of exactness `mu`; `rule` asks for the
    /// oversampled spiral that carries a positive rule.
    fn nodes(&self, mu: usize, rule: bool) -> Result<PointSet> {
        match &self.source {
            PointSource::File(path) => load_points(path),
            PointSource::Spiral => {
                let base = dim(mu) as f64;
                let count = if rule { (self.oversample * base).ceil() } else { base };
                Ok(generate_spiral(count as usize)?)
            }
        }
    }

    fn grid(&self, nodes: &PointSet) -> Result<PointSet> {
        Ok(generate_spiral(self.eval_factor * nodes.len())?)
    }
}

/// A CSV table with `#` metadata lines.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Report {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    pub fn write_csv(&self, w: &mut dyn Write) -> io::Result<()> {
        for (k, v) in &self.metadata {
            writeln!(w, "# {k}: {v}")?;
        }
        let mut csv = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        csv.write_record(&self.columns)?;
        for row in &self.rows {
            csv.write_record(row)?;
        }
        csv.flush()
    }
}

fn metadata(cfg: &ExperimentConfig, columns: &str) -> Vec<(String, String)> {
    let list = |v: Vec<String>| v.join(",");
    vec![
        ("experiment".into(), cfg.id.name().into()),
        ("source".into(), cfg.source.describe()),
        ("degrees".into(), list(cfg.degrees.iter().map(usize::to_string).collect())),
        ("thetas".into(), list(cfg.thetas.iter().map(|t| format!("{t:?}")).collect())),
        ("eval_factor".into(), cfg.eval_factor.to_string()),
        ("oversample".into(), format!("{:?}", cfg.oversample)),
        ("seed".into(), cfg.seed.to_string()),
        ("columns".into(), columns.into()),
    ]
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    match cfg.id {
        ExperimentId::Lebesgue => lebesgue(cfg),
        ExperimentId::Vp => vp(cfg),
        ExperimentId::Gibbs => gibbs(cfg),
        ExperimentId::Mesh => mesh(cfg),
    }
}

const LEBESGUE_COLUMNS: [&str; 8] = [
    "experiment", "operator", "n", "theta", "m", "points", "eval_count", "lebesgue_constant",
];

fn lebesgue_row(cfg: &ExperimentConfig, op: &OperatorSpec<'_>, grid: &PointSet) -> Result<Vec<String>> {
    let report = lebesgue_constant(op, grid)?;
    log::info!("{} n={} theta={} -> {}", report.tag, report.n, report.theta, report.lebesgue_constant);
    Ok(vec![
        cfg.id.name().into(),
        report.tag.to_string(),
        report.n.to_string(),
        format!("{:?}", report.theta),
        ray(report.n, report.theta)?.to_string(),
        op.points().len().to_string(),
        report.eval_count.to_string(),
        fmt_float(report.lebesgue_constant),
    ])
}

/// LS and hyperinterpolation on one node set per degree, carrying a rule of
/// exactness `2n`.
fn lebesgue(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rows = Vec::new();
    for &n in &cfg.degrees {
        let nodes = cfg.nodes(2 * n, true)?;
        let grid = cfg.grid(&nodes)?;
        let basis = build_orthonormal_basis(&nodes, n).with_context(|| format!("least squares at n={n}"))?;
        rows.push(lebesgue_row(cfg, &OperatorSpec::Ls { basis: &basis }, &grid)?);
        let rule = solve_weights(&nodes, 2 * n).with_context(|| format!("quadrature of exactness {}", 2 * n))?;
        rows.push(lebesgue_row(cfg, &OperatorSpec::Hyper { rule: &rule, n }, &grid)?);
    }
    Ok(Report {
        metadata: metadata(cfg, "lebesgue_constant is the maximum of the Lebesgue function over eval_count spiral points"),
        columns: LEBESGUE_COLUMNS.to_vec(),
        rows,
    })
}

/// LS, the least-squares mean and filtered hyperinterpolation on node sets
/// carrying a rule of exactness `4n`.
fn vp(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rows = Vec::new();
    for &n in &cfg.degrees {
        let nodes = cfg.nodes(4 * n, true)?;
        let grid = cfg.grid(&nodes)?;
        let rule = solve_weights(&nodes, 4 * n).with_context(|| format!("quadrature of exactness {}", 4 * n))?;
        let max_m = cfg.thetas.iter().map(|&t| ray(n, t)).collect::<Result<Vec<_>, _>>()?;
        let basis = build_orthonormal_basis(&nodes, n + max_m.into_iter().max().unwrap_or(0))?;
        let ls_basis = build_orthonormal_basis(&nodes, n)?;
        rows.push(lebesgue_row(cfg, &OperatorSpec::Ls { basis: &ls_basis }, &grid)?);
        for &theta in &cfg.thetas {
            rows.push(lebesgue_row(cfg, &OperatorSpec::VpLs { basis: &basis, n, theta }, &grid)?);
            rows.push(lebesgue_row(cfg, &OperatorSpec::FHyper { rule: &rule, n, theta }, &grid)?);
        }
    }
    Ok(Report {
        metadata: metadata(cfg, "lebesgue_constant is the maximum of the Lebesgue function over eval_count spiral points"),
        columns: LEBESGUE_COLUMNS.to_vec(),
        rows,
    })
}

/// Mask for the error away from the whole cone: everything within
/// `r + GIBBS_MASK_RADIUS` of the apex is dropped.
pub fn exterior_mask() -> ErrorMask {
    ErrorMask {
        circle: SingularCircle {
            center: cone_center(),
            radius: 0.0,
        },
        radius: CONE_RADIUS + GIBBS_MASK_RADIUS,
    }
}

pub fn rim_mask() -> ErrorMask {
    ErrorMask {
        circle: fcone_circle(),
        radius: GIBBS_MASK_RADIUS,
    }
}

/// Errors of the least-squares mean for `f2` on `(4n+1)²` nodes.
fn gibbs(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rows = Vec::new();
    for &n in &cfg.degrees {
        let nodes = cfg.nodes(4 * n, false)?;
        let grid = cfg.grid(&nodes)?;
        let samples: Vec<f64> = nodes.iter().map(f2).collect();
        let max_m = cfg.thetas.iter().map(|&t| ray(n, t)).collect::<Result<Vec<_>, _>>()?;
        let basis = build_orthonormal_basis(&nodes, n + max_m.into_iter().max().unwrap_or(0))?;
        for &theta in &cfg.thetas {
            let fit = vp_mean_fit(&basis, &samples, n, theta)?;
            let rim = sup_error(&fit, &f2, &grid, Some(&rim_mask()));
            let exterior = sup_error(&fit, &f2, &grid, Some(&exterior_mask()));
            log::info!("f2 n={n} theta={theta}: rim-masked {} exterior {}", rim.masked_sup_error, exterior.masked_sup_error);
            rows.push(vec![
                cfg.id.name().into(),
                fit.tag.to_string(),
                "f2".into(),
                n.to_string(),
                format!("{theta:?}"),
                fit.m.to_string(),
                nodes.len().to_string(),
                grid.len().to_string(),
                fmt_float(rim.sup_error),
                fmt_float(rim.masked_sup_error),
                fmt_float(exterior.masked_sup_error),
            ]);
        }
    }
    Ok(Report {
        metadata: metadata(
            cfg,
            "masked_sup_error drops points within 0.1 of the cone rim; exterior_sup_error drops the whole cone plus 0.1",
        ),
        columns: vec![
            "experiment", "operator", "function", "n", "theta", "m", "points", "eval_count",
            "sup_error", "masked_sup_error", "exterior_sup_error",
        ],
        rows,
    })
}

/// Mesh statistics of `(n+1)²`-point sets.
fn mesh(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rows = Vec::new();
    for &n in &cfg.degrees {
        let nodes = cfg.nodes(n, false)?;
        if nodes.len() < 2 {
            bail!("mesh statistics need at least two points");
        }
        let grid = cfg.grid(&nodes)?;
        let r = mesh_report(&nodes, &grid)?;
        rows.push(vec![
            cfg.id.name().into(),
            n.to_string(),
            nodes.len().to_string(),
            r.eval_count.to_string(),
            fmt_float(r.separation),
            fmt_float(r.mesh_norm_estimate),
            fmt_float(r.mesh_ratio),
        ]);
    }
    Ok(Report {
        metadata: metadata(cfg, "mesh_norm is a lower-bound estimate over eval_count spiral points"),
        columns: vec!["experiment", "n", "points", "eval_count", "separation", "mesh_norm", "mesh_ratio"],
        rows,
    })
}
