use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ifdefense::corruption::CorruptionSpec;
use ifdefense::field::Fixture;
use ifdefense::io::{read_cloud, write_cloud, write_obj, CloudFormat};
use ifdefense::metrics::evaluate;
use ifdefense::pipeline::{
    defend, fixture_reference, load_field, report_to_string, run_pipeline, sweep_lambda,
    write_report, DefenseVariant, FieldSource, InputSource, PipelineConfig, ReportRow,
};
use ifdefense::remesh::marching_cubes;
use ifdefense::{Error, GridSpec, RestorationConfig, Result, SorConfig};

#[derive(Parser)]
#[command(
    name = "ifdefense",
    version,
    about = "Implicit-field point cloud restoration"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply synthetic corruptions to a cloud.
    Corrupt(CorruptArgs),
    /// Restore a cloud with SOR, coordinate optimization or re-meshing.
    Defend(DefendArgs),
    /// Extract the iso-surface mesh of a field as OBJ.
    Mesh(MeshArgs),
    /// Compare a cloud against a reference.
    Eval(EvalArgs),
    /// Corrupt, defend and score a batch of inputs into a CSV report.
    Pipeline(PipelineArgs),
    /// Run the pipeline over several repulsion weights.
    SweepLambda(SweepArgs),
}

#[derive(Args, Clone)]
struct FieldArgs {
    /// Field spec: `.json` analytic CSG or binary MLP weights.
    #[arg(long)]
    field: Option<PathBuf>,
    /// Built-in fixture: sphere, torus, two-spheres, box-minus-sphere.
    #[arg(long)]
    fixture: Option<String>,
}

impl FieldArgs {
    fn fixture(&self) -> Result<Option<Fixture>> {
        self.fixture
            .as_deref()
            .map(|name| {
                Fixture::parse(name)
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown fixture \"{name}\"")))
            })
            .transpose()
    }

    fn source(&self) -> Result<FieldSource> {
        if let Some(path) = &self.field {
            return Ok(FieldSource::File(path.clone()));
        }
        self.fixture()?
            .map(FieldSource::Fixture)
            .ok_or_else(|| Error::InvalidParameter("pass --field or --fixture".into()))
    }
}

#[derive(Args, Clone)]
struct TuningArgs {
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long = "k-rep")]
    k_rep: Option<usize>,
    /// Output point count.
    #[arg(long = "points")]
    target_count: Option<usize>,
    #[arg(long = "knn-refresh")]
    knn_refresh: Option<usize>,
    #[arg(long = "sor-k")]
    sor_k: Option<usize>,
    #[arg(long = "sor-alpha")]
    sor_alpha: Option<f64>,
    #[arg(long = "grid-res")]
    grid_res: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl TuningArgs {
    fn restoration(&self) -> RestorationConfig {
        let mut c = RestorationConfig::default();
        if let Some(v) = self.tau {
            c.tau = v;
        }
        if let Some(v) = self.lambda {
            c.lambda = v;
        }
        if let Some(v) = self.iters {
            c.iterations = v;
        }
        if let Some(v) = self.lr {
            c.learning_rate = v;
        }
        if let Some(v) = self.h {
            c.h = v;
        }
        if let Some(v) = self.k_rep {
            c.k_rep = v;
        }
        if let Some(v) = self.target_count {
            c.target_count = v;
        }
        if let Some(v) = self.knn_refresh {
            c.knn_refresh = v;
        }
        c
    }

    fn sor(&self) -> SorConfig {
        let mut c = SorConfig::default();
        if let Some(v) = self.sor_k {
            c.k = v;
        }
        if let Some(v) = self.sor_alpha {
            c.alpha = v;
        }
        c
    }

    fn grid(&self) -> GridSpec {
        let mut g = GridSpec::default();
        if let Some(v) = self.grid_res {
            g.resolution = v;
        }
        g
    }
}

#[derive(Args)]
struct CorruptArgs {
    /// Input cloud; omit to sample the fixture's surface.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    field: FieldArgs,
    /// e.g. `outliers(0.1,0.3)+jitter(0.02)`.
    #[arg(long)]
    corruption: String,
    #[command(flatten)]
    tuning: TuningArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "xyz")]
    format: String,
}

#[derive(Args)]
struct DefendArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long, default_value = "sor+opt")]
    variant: String,
    #[command(flatten)]
    tuning: TuningArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "xyz")]
    format: String,
}

#[derive(Args)]
struct MeshArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[command(flatten)]
    tuning: TuningArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    reference: PathBuf,
    #[arg(long = "k-rep", default_value_t = 5)]
    k: usize,
}

#[derive(Args)]
struct PipelineArgs {
    /// Input clouds (normalized on load).
    #[arg(long)]
    input: Vec<PathBuf>,
    /// Built-in fixtures used as inputs.
    #[arg(long = "fixture")]
    fixtures: Vec<String>,
    #[arg(long)]
    field: Option<PathBuf>,
    #[arg(long, default_value = "none")]
    corruption: String,
    /// Comma-separated: none, sor, sor+opt, sor+mesh, opt, mesh.
    #[arg(long, default_value = "sor+opt")]
    variant: String,
    #[command(flatten)]
    tuning: TuningArgs,
    /// Directory for restored clouds.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "xyz")]
    format: String,
    /// CSV report path; printed to stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Leave the seconds column empty.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, value_delimiter = ',', default_value = "0,100,500,1000")]
    lambdas: Vec<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Corrupt(a) => {
            let field = load_field(&a.field.source()?)?;
            let restoration = a.tuning.restoration();
            let clean = match (&a.input, a.field.fixture()?) {
                (Some(p), _) => read_cloud(p)?,
                (None, Some(f)) => {
                    fixture_reference(f, restoration.tau, restoration.target_count, a.tuning.seed)?
                }
                (None, None) => {
                    return Err(Error::InvalidParameter("pass --input or --fixture".into()))
                }
            };
            let spec: CorruptionSpec = a.corruption.parse()?;
            let mut rng = ChaCha8Rng::seed_from_u64(a.tuning.seed);
            let out = spec.apply(&clean, field.as_ref(), restoration.tau, &mut rng)?;
            write_cloud(&a.out, &out, a.format.parse()?)?;
            Ok(true)
        }
        Command::Defend(a) => {
            let field = load_field(&a.field.source()?)?;
            let input = read_cloud(&a.input)?;
            let variant: DefenseVariant = a.variant.parse()?;
            let mut rng = ChaCha8Rng::seed_from_u64(a.tuning.seed);
            let out = defend(
                &input,
                field.as_ref(),
                variant,
                &a.tuning.restoration(),
                &a.tuning.sor(),
                &a.tuning.grid(),
                &mut rng,
            )?;
            write_cloud(&a.out, &out, a.format.parse()?)?;
            Ok(true)
        }
        Command::Mesh(a) => {
            let field = load_field(&a.field.source()?)?;
            let mesh =
                marching_cubes(field.as_ref(), &a.tuning.grid(), a.tuning.restoration().tau)?;
            write_obj(&a.out, &mesh)?;
            println!(
                "{} vertices, {} triangles, area {:.6}",
                mesh.vertices().len(),
                mesh.triangles().len(),
                mesh.total_area()
            );
            Ok(true)
        }
        Command::Eval(a) => {
            let input = read_cloud(&a.input)?;
            let reference = read_cloud(&a.reference)?;
            let m = evaluate(&input, &reference, a.k)?;
            println!("chamfer_x1e3,hausdorff,uniformity_cv,N_in,N_ref");
            println!(
                "{},{},{},{},{}",
                m.chamfer * 1e3,
                m.hausdorff,
                m.uniformity_cv,
                m.count_a,
                m.count_b
            );
            Ok(true)
        }
        Command::Pipeline(a) => {
            let cfg = pipeline_config(&a)?;
            let rows = run_pipeline(&cfg)?;
            emit(&a, &rows)
        }
        Command::SweepLambda(s) => {
            let cfg = pipeline_config(&s.pipeline)?;
            let rows = sweep_lambda(&cfg, &s.lambdas)?;
            emit(&s.pipeline, &rows)
        }
    }
}

fn pipeline_config(a: &PipelineArgs) -> Result<PipelineConfig> {
    let mut inputs: Vec<InputSource> = a.input.iter().cloned().map(InputSource::File).collect();
    for name in &a.fixtures {
        let f = Fixture::parse(name)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown fixture \"{name}\"")))?;
        inputs.push(InputSource::Fixture(f));
    }
    if inputs.is_empty() {
        return Err(Error::InvalidParameter("pass --input or --fixture".into()));
    }
    let variants = a
        .variant
        .split(',')
        .map(str::parse)
        .collect::<Result<Vec<DefenseVariant>>>()?;
    Ok(PipelineConfig {
        inputs,
        field: a.field.clone().map(FieldSource::File),
        corruption: a.corruption.parse()?,
        variants,
        restoration: a.tuning.restoration(),
        sor: a.tuning.sor(),
        grid: a.tuning.grid(),
        seed: a.tuning.seed,
        out_dir: a.out.clone(),
        format: a.format.parse::<CloudFormat>()?,
        label: None,
    })
}

fn emit(a: &PipelineArgs, rows: &[ReportRow]) -> Result<bool> {
    match &a.report {
        Some(path) => write_report(path, rows, !a.no_timing)?,
        None => print!("{}", report_to_string(rows, !a.no_timing)?),
    }
    for row in rows.iter().filter(|r| r.is_error()) {
        eprintln!("{} [{}]: {}", row.file, row.variant, row.error);
    }
    Ok(rows.iter().all(|r| !r.is_error()))
}
