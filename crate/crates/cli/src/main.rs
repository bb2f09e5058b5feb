use clap::{Parser, Subcommand, ValueEnum};
use needlet_choice::bench::{risk_plot_svg, run_experiment, CoefficientSpec, DesignSpec, ExperimentConfig};
use needlet_choice::design_est::{default_trim, fit_design};
use needlet_choice::estimator::{ideal_estimate, plugin_estimate, EstimatorConfig, Mode};
use needlet_choice::hemispherical::EigenvalueTable;
use needlet_choice::io;
use needlet_choice::quadrature::{level_rule, rule_family_constants};
use needlet_choice::{build_rule, make_window, Error, NeedletFrame, SpherePoint};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const THREADS_ENV: &str = "NEEDLET_CHOICE_THREADS";

/// Exit codes; clap uses 2 for usage errors.
mod code {
    pub const CONFIG: u8 = 3;
    pub const IO: u8 = 4;
    pub const PARAMETER: u8 = 5;
    pub const NUMERIC: u8 = 6;
}

#[derive(Debug)]
struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn new(code: u8, msg: impl Into<String>) -> Self {
        Self { code, msg: msg.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_) => code::IO,
            Error::Parse { .. } => code::CONFIG,
            Error::InvalidParameter(_)
            | Error::DimensionMismatch { .. }
            | Error::UnsupportedDimension(_)
            | Error::DegreeCap { .. }
            | Error::OutOfRange(_)
            | Error::SampleTooSmall { .. }
            | Error::ShapeMismatch(_) => code::PARAMETER,
            Error::NonFinite(_) | Error::EvenContent { .. } => code::NUMERIC,
            Error::Replication { source, .. } => Failure::from((**source).clone()).code,
        };
        Self::new(code, e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

#[derive(Parser)]
#[command(name = "needlet-choice", version, about = "Needlet estimation of random-coefficient densities in binary choice models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a sample (x, y) and write it as CSV.
    Simulate(SimulateArgs),
    /// Estimate f_beta from a sample file and write the coefficient report.
    Estimate(EstimateArgs),
    /// Run a Monte Carlo risk study from a TOML config.
    Bench(BenchArgs),
    /// Print eigenvalues, frame constants and quadrature exactness.
    Inspect(InspectArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DesignKind {
    Uniform,
    BoundaryVanishing,
}

#[derive(Clone, Copy, ValueEnum)]
enum CoefficientKind {
    Bump,
    BandLimited,
}

#[derive(clap::Args)]
struct DesignArgs {
    #[arg(long, value_enum, default_value = "uniform")]
    design: DesignKind,
    /// Exponent of the boundary-vanishing design x_1^alpha.
    #[arg(long, default_value_t = 1)]
    alpha: u32,
}

impl DesignArgs {
    fn spec(&self) -> DesignSpec {
        match self.design {
            DesignKind::Uniform => DesignSpec::UniformHemisphere,
            DesignKind::BoundaryVanishing => DesignSpec::BoundaryVanishing { alpha: self.alpha },
        }
    }
}

#[derive(clap::Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long, value_enum, default_value = "bump")]
    coefficient: CoefficientKind,
    /// Concentration of the bump, or cubic weight of the band-limited density.
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    /// Mean direction, comma separated; defaults to e_1.
    #[arg(long, value_delimiter = ',')]
    mean: Option<Vec<f64>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Ideal,
    Plugin,
}

#[derive(clap::Args)]
struct EstimateArgs {
    #[arg(long)]
    sample: PathBuf,
    #[command(flatten)]
    design: DesignArgs,
    #[arg(long, value_enum, default_value = "ideal")]
    mode: ModeArg,
    /// Sample whose regressors fit the design density in plug-in mode (labels are ignored).
    #[arg(long)]
    first_stage: Option<PathBuf>,
    #[arg(long, default_value_t = needlet_choice::estimator::DEFAULT_GAMMA)]
    gamma: f64,
    #[arg(long)]
    j_max: Option<u32>,
    /// Trim level; plug-in default (log n / n)^{1/4}.
    #[arg(long)]
    trim: Option<f64>,
    #[arg(long, default_value_t = needlet_choice::needlet::DEFAULT_SHARPNESS)]
    sharpness: f64,
    #[arg(long)]
    out: PathBuf,
    /// Also write f_beta_hat on a grid of this resolution.
    #[arg(long)]
    grid_out: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    grid: usize,
}

#[derive(clap::Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(clap::Args)]
struct InspectArgs {
    #[arg(long, default_value_t = 2)]
    d: usize,
    #[arg(long, default_value_t = 9)]
    kmax: usize,
    /// Top level for frame constants and exactness rows.
    #[arg(long, default_value_t = 3)]
    j_max: u32,
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::new(code::IO, format!("cannot create {}: {e}", path.display())))
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::new(code::IO, format!("cannot open {}: {e}", path.display())))
}

fn flush(mut w: BufWriter<File>) -> CliResult<()> {
    w.flush().map_err(|e| Failure::new(code::IO, e.to_string()))
}

fn simulate(args: SimulateArgs) -> CliResult<()> {
    let d = args.d;
    let mean = args.mean.unwrap_or_else(|| SpherePoint::north(d).coords().to_vec());
    let coefficient = match args.coefficient {
        CoefficientKind::Bump => CoefficientSpec::HemisphereBump { mean, kappa: args.kappa },
        CoefficientKind::BandLimited => CoefficientSpec::BandLimitedPositive { mean, alpha: args.kappa },
    };
    let design = args.design.spec().build(d)?;
    let coeff = coefficient.build(d)?;
    let sample = needlet_choice::model::generate(&design, &coeff, args.n, args.seed)?;
    let mut out = create(&args.out)?;
    io::write_sample(&mut out, &sample)?;
    flush(out)
}

fn estimate(args: EstimateArgs) -> CliResult<()> {
    let sample = io::read_sample(open(&args.sample)?)?;
    let d = sample.dim().ok_or_else(|| Failure::new(code::PARAMETER, "sample is empty"))?;
    let window = make_window(args.sharpness)?;
    let config = EstimatorConfig {
        gamma: args.gamma,
        j_max: args.j_max,
        window: window.clone(),
        trim: args.trim.unwrap_or(0.0),
        ..Default::default()
    };
    let report = match args.mode {
        ModeArg::Ideal => {
            let design = args.design.spec().build(d)?;
            ideal_estimate(&sample, &design, &config)?
        }
        ModeArg::Plugin => {
            let path = args
                .first_stage
                .as_ref()
                .ok_or_else(|| Failure::new(code::PARAMETER, "plug-in mode needs --first-stage"))?;
            let first = io::read_sample(open(path)?)?;
            let t = args.trim.unwrap_or_else(|| default_trim(first.len()));
            let fitted = fit_design(&first.x, None, &window)?.trim(t)?;
            plugin_estimate(&sample, &fitted, t, &EstimatorConfig { mode: Mode::Plugin, ..config })?
        }
    };
    let mut out = create(&args.out)?;
    io::write_report(&mut out, &report)?;
    flush(out)?;
    if let Some(path) = &args.grid_out {
        let grid: Vec<SpherePoint> = build_rule(d, args.grid)?.nodes().to_vec();
        let mut out = create(path)?;
        io::write_density_grid(&mut out, &report, &grid)?;
        flush(out)?;
    }
    Ok(())
}

fn bench(args: BenchArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Failure::new(code::IO, format!("cannot read {}: {e}", args.config.display())))?;
    let config: ExperimentConfig = toml::from_str(&text)
        .map_err(|e| Failure::new(code::CONFIG, format!("malformed config {}: {e}", args.config.display())))?;
    config.validate()?;
    let table = run_experiment(&config)?;
    let mut out = create(&args.out)?;
    io::write_risk_table(&mut out, &table)?;
    flush(out)?;
    if let Some(path) = &args.plot {
        std::fs::write(path, risk_plot_svg(&table))
            .map_err(|e| Failure::new(code::IO, format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn inspect(args: InspectArgs) -> CliResult<()> {
    let d = args.d;
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    let mut emit = |s: String| writeln!(w, "{s}").map_err(|e| Failure::new(code::IO, e.to_string()));
    emit(format!("# eigenvalues d={d}"))?;
    emit("k\tlambda".into())?;
    let table = EigenvalueTable::new(d, args.kmax)?;
    for (k, v) in table.values().iter().enumerate() {
        emit(format!("{k}\t{v}"))?;
    }
    let frame = NeedletFrame::new(d, args.j_max, make_window(needlet_choice::needlet::DEFAULT_SHARPNESS)?)?;
    let family = rule_family_constants(d, args.j_max)?;
    let (lo, hi) = frame.norm_range()?;
    emit(format!("# frame d={d} J={} c_b={:.6}", args.j_max, frame.window().c_b()))?;
    emit(format!("# rule family: cardinality constant {:.6}, weight constant {:.6}", family.cardinality, family.weight))?;
    emit(format!("# needlet L2 norms in [{lo:.6}, {hi:.6}]"))?;
    emit("j\tnodes\texact_degree\tmin_weight\tmax_weight".into())?;
    for j in 0..=args.j_max {
        let rule = frame.rule(j as usize);
        let (wmin, wmax) = rule.weights().iter().fold((f64::INFINITY, 0.0f64), |(a, b), w| (a.min(*w), b.max(*w)));
        emit(format!("{j}\t{}\t{}\t{wmin:.6e}\t{wmax:.6e}", rule.len(), rule.exact_degree()))?;
    }
    emit("# quadrature exactness (Gram residuals within each rule's exact range)".into())?;
    emit("j\tk1\tk2\tresidual".into())?;
    for j in 0..=args.j_max {
        let rule = level_rule(d, j)?;
        let top = rule.exact_degree();
        for row in rule.exactness_report(top / 2)? {
            if row.k1 + row.k2 <= top {
                emit(format!("{j}\t{}\t{}\t{:.3e}", row.k1, row.k2, row.residual))?;
            }
        }
    }
    Ok(())
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|t| *t > 0)
        .ok_or_else(|| Failure::new(code::CONFIG, format!("{THREADS_ENV} must be a positive integer, got {value:?}")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::new(code::CONFIG, e.to_string()))?;
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Bench(a) => bench(a),
        Command::Inspect(a) => inspect(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
