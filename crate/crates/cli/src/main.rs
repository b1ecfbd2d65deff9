use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spca_core::experiment::Report;
use spca_core::io::load_vocabulary;
use spca_core::{
    antipodal_reduce, appendix_example, build_sphere_net_with, compare, covering_check, load_covariance_csv,
    load_dense_csv, load_uci_bow, run, Algorithm, Dataset, NetConstruction, RunSpec, SketchMethod, SketchSpec,
    SpcaError,
};

#[derive(Parser)]
#[command(name = "spca", version, about = "Disjoint-support sparse principal components")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm and write its report.
    Solve {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = AlgorithmArg::Joint)]
        algorithm: AlgorithmArg,
        /// Also write the cumulative-variance table here.
        #[arg(long)]
        cumulative: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run several algorithms on the same dataset and tabulate them.
    Compare {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = vec![AlgorithmArg::Joint, AlgorithmArg::DeflateTpower, AlgorithmArg::DeflateExact])]
        algorithms: Vec<AlgorithmArg>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Exhaustive optimum over all disjoint support tuples (small inputs only).
    Oracle {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Net cardinality and a sampled covering check.
    Netinfo {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        no_antipodal: bool,
        /// Use a seeded greedy cover instead of the angular grid.
        #[arg(long)]
        greedy: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run an algorithm on a vocabulary dataset and list the words per component.
    Topics {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = AlgorithmArg::Joint)]
        algorithm: AlgorithmArg,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args)]
struct InputArgs {
    #[arg(long, conflicts_with = "appendix")]
    input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = InputFormatArg::Csv)]
    input_format: InputFormatArg,
    /// Vocabulary file, one word per line.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Built-in 4x4 counterexample matrix, given as `EPS,DELTA`.
    #[arg(long, value_name = "EPS,DELTA")]
    appendix: Option<String>,
    /// Dataset name in reports (defaults to the file name).
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    s: usize,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value_t = 4)]
    rank: usize,
    #[arg(long, value_enum, default_value_t = SketchArg::Svd)]
    sketch: SketchArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    time_budget_ms: Option<u64>,
    /// Polish the winning supports (on by default).
    #[arg(long, overrides_with = "no_polish")]
    polish: bool,
    #[arg(long)]
    no_polish: bool,
    #[arg(long)]
    no_antipodal: bool,
    #[arg(long, env = "SPCA_WORKERS", default_value_t = 1)]
    workers: usize,
    #[arg(long, overrides_with = "no_center")]
    center: bool,
    #[arg(long)]
    no_center: bool,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum SketchArg {
    Svd,
    Gauss,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormatArg {
    Csv,
    CsvHeader,
    Covariance,
    UciBow,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgorithmArg {
    Joint,
    DeflateTpower,
    DeflateExact,
    Oracle,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Joint => Algorithm::Joint,
            AlgorithmArg::DeflateTpower => Algorithm::DeflateTpower,
            AlgorithmArg::DeflateExact => Algorithm::DeflateExact,
            AlgorithmArg::Oracle => Algorithm::Oracle,
        }
    }
}

/// An error tagged with the stage that produced it.
struct Failure {
    stage: &'static str,
    err: SpcaError,
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, Failure>;
}

impl<T> Stage<T> for spca_core::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, Failure> {
        self.map_err(|err| Failure { stage, err })
    }
}

fn exit_code(err: &SpcaError) -> u8 {
    match err {
        SpcaError::CapacityExceeded { .. } => 3,
        SpcaError::InternalInvariantViolation(_) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("spca: {} failed: {}", f.stage, f.err);
            ExitCode::from(exit_code(&f.err))
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Solve {
            input,
            run: args,
            algorithm,
            cumulative,
            out,
        } => {
            let ds = load(&input)?;
            let report = run(&ds, &run_spec(&ds, &args, algorithm)).stage("solve")?;
            if let Some(path) = cumulative {
                write_file(&path, &report.cumulative_csv())?;
            }
            emit(&out, &report_text(&report, out.format))
        }
        Command::Oracle { input, run: args, out } => {
            let ds = load(&input)?;
            let report = run(&ds, &run_spec(&ds, &args, AlgorithmArg::Oracle)).stage("oracle")?;
            emit(&out, &report_text(&report, out.format))
        }
        Command::Compare {
            input,
            run: args,
            algorithms,
            out,
        } => {
            let ds = load(&input)?;
            let specs: Vec<RunSpec> = algorithms.iter().map(|&a| run_spec(&ds, &args, a)).collect();
            let table = compare(&ds, &specs).stage("compare")?;
            let text = match out.format {
                Format::Json => table.to_json() + "\n",
                Format::Csv => table.to_csv(),
            };
            emit(&out, &text)
        }
        Command::Topics {
            input,
            run: args,
            algorithm,
            out,
        } => {
            let ds = load(&input)?;
            if ds.vocabulary.is_none() {
                return Err(SpcaError::InvalidInput(
                    "topics need a vocabulary (--vocab or a CSV header)".into(),
                ))
                .stage("load");
            }
            let report = run(&ds, &run_spec(&ds, &args, algorithm)).stage("solve")?;
            let text = match out.format {
                Format::Json => serde_json::to_string_pretty(&report.topics).expect("topics serialize") + "\n",
                Format::Csv => topics_csv(&report),
            };
            emit(&out, &text)
        }
        Command::Netinfo {
            r,
            eps,
            trials,
            seed,
            no_antipodal,
            greedy,
            out,
        } => {
            let construction = if greedy {
                NetConstruction::GreedyCover { seed }
            } else {
                NetConstruction::AngularGrid
            };
            let mut net = build_sphere_net_with(r, eps, construction).stage("net")?;
            let full = net.len();
            if !no_antipodal {
                net = antipodal_reduce(&net);
            }
            let rep = covering_check(&net, eps, trials, seed);
            let text = match out.format {
                Format::Json => {
                    serde_json::to_string_pretty(&serde_json::json!({
                        "r": r,
                        "eps": eps,
                        "construction": construction,
                        "points_before_reduction": full,
                        "points": net.len(),
                        "antipodal_reduced": net.is_antipodal_reduced(),
                        "volume_bound": (1.0 + 4.0 / eps).powi(r as i32),
                        "construction_constant": net.construction_constant(),
                        "trials": rep.trials,
                        "violations": rep.violations,
                        "max_gap": rep.max_gap,
                        "radius": eps / 2.0,
                    }))
                    .expect("netinfo serializes")
                        + "\n"
                }
                Format::Csv => format!(
                    "r,eps,points,antipodal_reduced,trials,violations,max_gap\n{},{:?},{},{},{},{},{:?}\n",
                    r,
                    eps,
                    net.len(),
                    net.is_antipodal_reduced(),
                    rep.trials,
                    rep.violations,
                    rep.max_gap
                ),
            };
            emit(&out, &text)
        }
    }
}

fn load(input: &InputArgs) -> Result<Dataset, Failure> {
    if let Some(spec) = &input.appendix {
        let parts: Vec<&str> = spec.split(',').collect();
        let parsed: Vec<f64> = parts.iter().filter_map(|p| p.trim().parse().ok()).collect();
        if parsed.len() != 2 || parts.len() != 2 {
            return Err(SpcaError::InvalidInput(format!(
                "--appendix expects EPS,DELTA, got {spec:?}"
            )))
            .stage("load");
        }
        let a = appendix_example(parsed[0], parsed[1]).stage("load")?;
        let name = input
            .name
            .clone()
            .unwrap_or_else(|| format!("appendix({},{})", parsed[0], parsed[1]));
        return Ok(Dataset::from_covariance(name, a));
    }
    let Some(path) = &input.input else {
        return Err(SpcaError::InvalidInput(
            "one of --input or --appendix is required".into(),
        ))
        .stage("load");
    };
    let mut ds = match input.input_format {
        InputFormatArg::Csv => load_dense_csv(path, false),
        InputFormatArg::CsvHeader => load_dense_csv(path, true),
        InputFormatArg::Covariance => load_covariance_csv(path),
        InputFormatArg::UciBow => load_uci_bow(path, input.vocab.as_deref()),
    }
    .stage("load")?;
    if input.vocab.is_some() && !matches!(input.input_format, InputFormatArg::UciBow) {
        let words = load_vocabulary(input.vocab.as_deref().unwrap()).stage("load")?;
        ds = ds.with_vocabulary(Some(words)).stage("load")?;
    }
    if let Some(name) = &input.name {
        ds.name = name.clone();
    }
    Ok(ds)
}

fn run_spec(ds: &Dataset, args: &RunArgs, algorithm: AlgorithmArg) -> RunSpec {
    let mut spec = RunSpec::new(ds.name.clone(), algorithm.into(), args.k, args.s, args.eps);
    spec.sketch = match args.sketch {
        SketchArg::Svd => Some(SketchSpec {
            method: SketchMethod::TruncatedSvd,
            target_rank: args.rank,
            seed: args.seed,
        }),
        SketchArg::Gauss => Some(SketchSpec {
            method: SketchMethod::GaussianJl,
            target_rank: args.rank,
            seed: args.seed,
        }),
        SketchArg::None => None,
    };
    spec.time_budget_ms = args.time_budget_ms;
    spec.seed = args.seed;
    spec.polish = !args.no_polish || args.polish;
    spec.antipodal_reduce = !args.no_antipodal;
    spec.workers = args.workers;
    spec.center = if args.center {
        Some(true)
    } else if args.no_center {
        Some(false)
    } else {
        None
    };
    spec
}

fn report_text(report: &Report, format: Format) -> String {
    match format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => report.cumulative_csv(),
    }
}

fn topics_csv(report: &Report) -> String {
    let mut out = String::from("component,rank,word,index,value\n");
    for (j, topic) in report.topics.iter().flatten().enumerate() {
        for (pos, w) in topic.iter().enumerate() {
            out.push_str(&format!("{},{},{},{},{:?}\n", j + 1, pos + 1, w.word, w.index, w.value));
        }
    }
    out
}

fn emit(out: &OutputArgs, text: &str) -> Result<(), Failure> {
    match &out.output {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(SpcaError::from).stage("write")
}
