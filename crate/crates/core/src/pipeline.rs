//! Batch runs: load or synthesize clouds, corrupt them, apply a defense
//! and score the result against the clean reference.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::corruption::CorruptionSpec;
use crate::error::{Error, Result};
use crate::field::{AnalyticField, Fixture, MlpField, OccupancyField};
use crate::geometry::{normalize_unit_sphere, PointCloud};
use crate::io::{output_path, read_cloud, write_cloud, CloudFormat};
use crate::metrics::{evaluate, MetricsReport};
use crate::outlier::{sor_filter, SorConfig};
use crate::remesh::{remesh_defense, sample_iso_surface, GridSpec};
use crate::restoration::{restore, RestorationConfig};

/// Grid used to draw reference samples from analytic fixtures.
pub const REFERENCE_GRID_RESOLUTION: usize = 96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DefenseVariant {
    None,
    Sor,
    SorOpt,
    SorMesh,
    Opt,
    Mesh,
}

impl DefenseVariant {
    pub const ALL: [DefenseVariant; 6] = [
        DefenseVariant::None,
        DefenseVariant::Sor,
        DefenseVariant::SorOpt,
        DefenseVariant::SorMesh,
        DefenseVariant::Opt,
        DefenseVariant::Mesh,
    ];

    pub fn label(self) -> &'static str {
        match self {
            DefenseVariant::None => "none",
            DefenseVariant::Sor => "sor",
            DefenseVariant::SorOpt => "sor+opt",
            DefenseVariant::SorMesh => "sor+mesh",
            DefenseVariant::Opt => "opt",
            DefenseVariant::Mesh => "mesh",
        }
    }

    fn uses_sor(self) -> bool {
        matches!(
            self,
            DefenseVariant::Sor | DefenseVariant::SorOpt | DefenseVariant::SorMesh
        )
    }
}

impl fmt::Display for DefenseVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for DefenseVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.label() == s.trim())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown defense variant \"{s}\"")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    Fixture(Fixture),
    File(PathBuf),
}

impl InputSource {
    pub fn label(&self) -> String {
        match self {
            InputSource::Fixture(f) => f.name().to_string(),
            InputSource::File(p) => p.display().to_string(),
        }
    }

    fn stem(&self) -> String {
        match self {
            InputSource::Fixture(f) => f.name().to_string(),
            InputSource::File(p) => p
                .file_stem()
                .map_or_else(|| "cloud".into(), |s| s.to_string_lossy().into_owned()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldSource {
    Fixture(Fixture),
    /// `.json` files hold analytic specs, anything else MLP weights.
    File(PathBuf),
}

pub fn load_field(source: &FieldSource) -> Result<Box<dyn OccupancyField>> {
    Ok(match source {
        FieldSource::Fixture(f) => Box::new(f.field()),
        FieldSource::File(path) => {
            let is_json = path
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("json"));
            if is_json {
                Box::new(AnalyticField::from_json_str(&std::fs::read_to_string(
                    path,
                )?)?)
            } else {
                Box::new(MlpField::load(path)?)
            }
        }
    })
}

/// Clean cloud for a fixture: `n` samples on its `level` iso-surface.
pub fn fixture_reference(fixture: Fixture, level: f64, n: usize, seed: u64) -> Result<PointCloud> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_iso_surface(
        &fixture.field(),
        level,
        n,
        &GridSpec::with_resolution(REFERENCE_GRID_RESOLUTION),
        &mut rng,
    )
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub inputs: Vec<InputSource>,
    /// Falls back to the input's own fixture field when absent.
    pub field: Option<FieldSource>,
    pub corruption: CorruptionSpec,
    pub variants: Vec<DefenseVariant>,
    pub restoration: RestorationConfig,
    pub sor: SorConfig,
    pub grid: GridSpec,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub format: CloudFormat,
    /// Overrides the variant column, e.g. to tag sweep rows.
    pub label: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            inputs: vec![InputSource::Fixture(Fixture::Sphere)],
            field: None,
            corruption: CorruptionSpec::default(),
            variants: vec![DefenseVariant::SorOpt],
            restoration: RestorationConfig::default(),
            sor: SorConfig::default(),
            grid: GridSpec::default(),
            seed: 0,
            out_dir: None,
            format: CloudFormat::Xyz,
            label: None,
        }
    }
}

/// One CSV line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub file: String,
    pub variant: String,
    pub seed: u64,
    #[serde(rename = "N_in")]
    pub n_in: usize,
    #[serde(rename = "N_out")]
    pub n_out: usize,
    pub chamfer_x1e3: Option<f64>,
    pub hausdorff: Option<f64>,
    pub uniformity_cv: Option<f64>,
    pub seconds: Option<f64>,
    pub error: String,
}

impl ReportRow {
    pub fn is_error(&self) -> bool {
        !self.error.is_empty()
    }
}

/// Outcome of one defense run on one input.
#[derive(Debug, Clone)]
pub struct DefenseOutcome {
    pub clean: PointCloud,
    pub corrupted: PointCloud,
    pub defended: PointCloud,
    pub metrics: MetricsReport,
}

/// Applies a defense variant to an already-corrupted cloud.
pub fn defend<F: OccupancyField + ?Sized>(
    corrupted: &PointCloud,
    field: &F,
    variant: DefenseVariant,
    restoration: &RestorationConfig,
    sor: &SorConfig,
    grid: &GridSpec,
    rng: &mut ChaCha8Rng,
) -> Result<PointCloud> {
    let staged = if variant.uses_sor() {
        sor_filter(corrupted, sor)?.cloud
    } else {
        corrupted.clone()
    };
    match variant {
        DefenseVariant::None | DefenseVariant::Sor => Ok(staged),
        DefenseVariant::SorOpt | DefenseVariant::Opt => {
            Ok(restore(&staged, field, restoration, rng)?.cloud)
        }
        DefenseVariant::SorMesh | DefenseVariant::Mesh => {
            remesh_defense(field, grid, restoration, rng)
        }
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn load_clean(input: &InputSource, cfg: &PipelineConfig) -> Result<PointCloud> {
    match input {
        InputSource::Fixture(f) => fixture_reference(
            *f,
            cfg.restoration.tau,
            cfg.restoration.target_count,
            cfg.seed,
        ),
        InputSource::File(path) => Ok(normalize_unit_sphere(&read_cloud(path)?)?.0),
    }
}

fn field_for(input: &InputSource, cfg: &PipelineConfig) -> Result<Box<dyn OccupancyField>> {
    match (&cfg.field, input) {
        (Some(src), _) => load_field(src),
        (None, InputSource::Fixture(f)) => Ok(Box::new(f.field())),
        (None, InputSource::File(p)) => Err(Error::InvalidParameter(format!(
            "no field given for input {}",
            p.display()
        ))),
    }
}

/// Runs every variant on one input. Corruption is drawn once per input so
/// that all variants see the same corrupted cloud.
pub fn run_input(
    input_index: usize,
    input: &InputSource,
    cfg: &PipelineConfig,
) -> Result<Vec<(DefenseVariant, Result<DefenseOutcome>, f64)>> {
    let field = field_for(input, cfg)?;
    let clean = load_clean(input, cfg)?;
    let mut corrupt_rng = stream_rng(cfg.seed, 2 * input_index as u64);
    let corrupted = cfg.corruption.apply(
        &clean,
        field.as_ref(),
        cfg.restoration.tau,
        &mut corrupt_rng,
    )?;
    let mut out = Vec::with_capacity(cfg.variants.len());
    for &variant in &cfg.variants {
        let start = Instant::now();
        let mut rng = stream_rng(cfg.seed, 2 * input_index as u64 + 1);
        let result = defend(
            &corrupted,
            field.as_ref(),
            variant,
            &cfg.restoration,
            &cfg.sor,
            &cfg.grid,
            &mut rng,
        )
        .and_then(|defended| {
            let metrics = evaluate(&defended, &clean, cfg.restoration.k_rep)?;
            Ok(DefenseOutcome {
                clean: clean.clone(),
                corrupted: corrupted.clone(),
                defended,
                metrics,
            })
        });
        out.push((variant, result, start.elapsed().as_secs_f64()));
    }
    Ok(out)
}

/// Runs the whole batch. Inputs are processed in parallel; rows come back in
/// input order, then variant order. Failures become rows with an error.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Vec<ReportRow>> {
    cfg.restoration.validate()?;
    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let per_input: Vec<Vec<ReportRow>> = cfg
        .inputs
        .par_iter()
        .enumerate()
        .map(|(i, input)| rows_for_input(i, input, cfg))
        .collect();
    Ok(per_input.into_iter().flatten().collect())
}

fn rows_for_input(i: usize, input: &InputSource, cfg: &PipelineConfig) -> Vec<ReportRow> {
    let label = |v: DefenseVariant| cfg.label.clone().unwrap_or_else(|| v.label().to_string());
    let blank = |v: DefenseVariant, err: String| ReportRow {
        file: input.label(),
        variant: label(v),
        seed: cfg.seed,
        n_in: 0,
        n_out: 0,
        chamfer_x1e3: None,
        hausdorff: None,
        uniformity_cv: None,
        seconds: None,
        error: err,
    };
    let results = match run_input(i, input, cfg) {
        Ok(r) => r,
        Err(e) => {
            return cfg
                .variants
                .iter()
                .map(|&v| blank(v, e.to_string()))
                .collect()
        }
    };
    results
        .into_iter()
        .map(|(variant, result, seconds)| {
            let outcome = match result {
                Ok(o) => o,
                Err(e) => return blank(variant, e.to_string()),
            };
            let mut row = ReportRow {
                file: input.label(),
                variant: label(variant),
                seed: cfg.seed,
                n_in: outcome.corrupted.len(),
                n_out: outcome.defended.len(),
                chamfer_x1e3: Some(outcome.metrics.chamfer * 1e3),
                hausdorff: Some(outcome.metrics.hausdorff),
                uniformity_cv: Some(outcome.metrics.uniformity_cv),
                seconds: Some(seconds),
                error: String::new(),
            };
            if let Some(dir) = &cfg.out_dir {
                let tag = row.variant.replace(['+', '@', '='], "_");
                let path = output_path(dir, &format!("{}_{tag}", input.stem()), cfg.format);
                if let Err(e) = write_cloud(&path, &outcome.defended, cfg.format) {
                    row.error = e.to_string();
                }
            }
            row
        })
        .collect()
}

/// Runs the pipeline once per `lambda`, tagging rows `variant@lambda=value`.
pub fn sweep_lambda(cfg: &PipelineConfig, lambdas: &[f64]) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for &lambda in lambdas {
        let mut c = cfg.clone();
        c.restoration.lambda = lambda;
        let base = cfg
            .variants
            .first()
            .copied()
            .unwrap_or(DefenseVariant::SorOpt);
        c.variants = vec![base];
        c.label = Some(format!("{}@lambda={lambda}", base.label()));
        rows.extend(run_pipeline(&c)?);
    }
    Ok(rows)
}

/// Writes the CSV report. With `include_timing` false the seconds column is
/// left empty so repeated runs compare byte for byte.
pub fn write_report(path: &Path, rows: &[ReportRow], include_timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        let mut row = row.clone();
        if !include_timing {
            row.seconds = None;
        }
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn report_to_string(rows: &[ReportRow], include_timing: bool) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        let mut row = row.clone();
        if !include_timing {
            row.seconds = None;
        }
        w.serialize(row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidParameter(format!("csv: {other:?}")),
    }
}
