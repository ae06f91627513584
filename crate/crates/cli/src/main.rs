use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use osrkit_core::analysis::{analyze, parse_summaries, GroupField};
use osrkit_core::metrics::{evaluate, MetricsError};
use osrkit_core::runio::{
    parse_attribute_matrix, parse_hierarchy_table, parse_run, parse_semantic_tree, write_report, write_run,
    write_split, EvaluationRun, HierarchyScheme, SplitSpec,
};
use osrkit_core::scoring::{score, write_scores, ScoreRule, ScoringError};
use osrkit_core::splits::{hierarchy_splits, search_attribute_splits, tree_splits};
use osrkit_core::synth::{generate, SynthConfig};

/// Open-set recognition evaluation toolkit.
#[derive(Debug, Parser)]
#[command(name = "osrkit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score every sample of a run and write `sample_id,label,score,prediction`.
    Score {
        /// Run CSV file.
        run: PathBuf,
        /// Scoring rule: msp, mls or norm.
        #[arg(long)]
        rule: ScoreRule,
        #[command(flatten)]
        out: OutArg,
    },
    /// Compute accuracy, AUROC, OSCR, AP and openness; JSON report on stdout.
    Eval {
        run: PathBuf,
        #[arg(long)]
        rule: ScoreRule,
        /// Number of unknown classes in the test set, used for openness.
        #[arg(long, default_value_t = 0)]
        num_unknown_classes: usize,
        /// Include ROC and OSCR curve points.
        #[arg(long)]
        curves: bool,
    },
    /// Search random known-class subsets of an attribute matrix for the hardest split.
    SplitsAttr {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        num_known: usize,
        /// Number of random known-class subsets to evaluate.
        #[arg(long)]
        samples: u64,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Bin open-set classes by shared class-name hierarchy levels.
    SplitsHier {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        scheme: Scheme,
        /// File listing known classes, one per line.
        #[arg(long)]
        known: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Bin open-set classes by semantic tree distance to the known classes.
    SplitsTree {
        #[arg(long)]
        tree: PathBuf,
        /// File listing known classes, one per line.
        #[arg(long)]
        known: PathBuf,
        #[arg(long)]
        num_easy: usize,
        #[arg(long)]
        num_hard: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Correlate accuracy with AUROC across run summaries and aggregate metrics.
    Correlate {
        /// Summary CSV: run_id,method,dataset,accuracy,auroc,oscr,ap.
        summaries: PathBuf,
        /// Grouping field: run_id, method or dataset.
        #[arg(long, default_value = "method")]
        group_by: String,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Generate a synthetic run.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct OutArg {
    /// Output file; standard output when omitted.
    #[arg(short = 'o', long = "out")]
    path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Scheme {
    Cars,
    Aircraft,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 6)]
    num_classes: usize,
    #[arg(long, default_value_t = 128)]
    feature_dim: usize,
    #[arg(long, default_value_t = 100)]
    samples_per_class: usize,
    #[arg(long, default_value_t = 400)]
    num_unknown: usize,
    #[arg(long, default_value_t = 8.0)]
    known_norm: f64,
    #[arg(long, default_value_t = 3.0)]
    unknown_norm: f64,
    #[arg(long, default_value_t = 0.2)]
    angular_noise: f64,
    #[arg(long, default_value_t = 0.5)]
    norm_noise: f64,
    #[command(flatten)]
    out: OutArg,
}

/// Failure with its process exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Internal(m) => m,
        }
    }
}

fn data<E: std::fmt::Display>(context: &Path) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure::Data(format!("{}: {e}", context.display()))
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn read_to_string(path: &Path) -> Result<String, Failure> {
    let mut s = String::new();
    open(path)?
        .read_to_string(&mut s)
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
    Ok(s)
}

/// Known-class list: one class per line; blank lines ignored.
fn read_known(path: &Path) -> Result<Vec<String>, Failure> {
    Ok(read_to_string(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect())
}

fn read_run(path: &Path) -> Result<EvaluationRun, Failure> {
    parse_run(open(path)?).map_err(data(path))
}

/// Writes through `f` to the `-o` file, or to standard output.
fn emit<F>(out: &OutArg, f: F) -> Result<(), Failure>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let result = match &out.path {
        Some(path) => File::create(path).and_then(|file| {
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush()
        }),
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w).and_then(|_| w.flush())
        }
    };
    result.map_err(|e| Failure::Internal(format!("write failed: {e}")))
}

fn emit_split(out: &OutArg, spec: &SplitSpec) -> Result<(), Failure> {
    emit(out, |w| write_split(spec, w))
}

fn scoring_failure(e: ScoringError) -> Failure {
    Failure::Data(e.to_string())
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Score { run, rule, out } => {
            let r = read_run(&run)?;
            let scores = score(&r, rule).map_err(scoring_failure)?;
            emit(&out, |w| write_scores(&r, &scores, w))
        }
        Command::Eval {
            run,
            rule,
            num_unknown_classes,
            curves,
        } => {
            let r = read_run(&run)?;
            if r.num_unknown_samples() == 0 {
                eprintln!("warning: run has no unknown samples; auroc, oscr and ap are null");
            }
            let report = evaluate(&r, rule, num_unknown_classes, curves).map_err(|e| match e {
                MetricsError::Scoring(s) => scoring_failure(s),
                other => Failure::Data(other.to_string()),
            })?;
            emit(&OutArg { path: None }, |w| write_report(&report, w))
        }
        Command::SplitsAttr {
            matrix,
            num_known,
            samples,
            seed,
            out,
        } => {
            let m = parse_attribute_matrix(open(&matrix)?).map_err(data(&matrix))?;
            let spec = search_attribute_splits(&m, num_known, samples, seed).map_err(|e| Failure::Data(e.to_string()))?;
            emit_split(&out, &spec)
        }
        Command::SplitsHier {
            table,
            scheme,
            known,
            out,
        } => {
            let scheme = match scheme {
                Scheme::Cars => HierarchyScheme::Cars,
                Scheme::Aircraft => HierarchyScheme::Aircraft,
            };
            let t = parse_hierarchy_table(open(&table)?, scheme).map_err(data(&table))?;
            let known = read_known(&known)?;
            let spec = hierarchy_splits(&t, &known).map_err(|e| Failure::Data(e.to_string()))?;
            emit_split(&out, &spec)
        }
        Command::SplitsTree {
            tree,
            known,
            num_easy,
            num_hard,
            out,
        } => {
            let t = parse_semantic_tree(open(&tree)?).map_err(data(&tree))?;
            let known = read_known(&known)?;
            let spec = tree_splits(&t, &known, num_easy, num_hard).map_err(|e| Failure::Data(e.to_string()))?;
            emit_split(&out, &spec)
        }
        Command::Correlate {
            summaries,
            group_by,
            format,
        } => {
            let group_by: GroupField = group_by.parse().map_err(|e: osrkit_core::analysis::AnalysisError| {
                Failure::Usage(format!("--group-by: {e}"))
            })?;
            let rows = parse_summaries(open(&summaries)?).map_err(data(&summaries))?;
            let report = analyze(&rows, group_by).map_err(data(&summaries))?;
            let text = match format {
                Format::Json => report.to_json(),
                Format::Table => report.to_table(),
            };
            emit(&OutArg { path: None }, |w| w.write_all(text.as_bytes()))
        }
        Command::Synth(args) => {
            let cfg = SynthConfig {
                num_classes: args.num_classes,
                feature_dim: args.feature_dim,
                samples_per_class: args.samples_per_class,
                num_unknown: args.num_unknown,
                known_norm: args.known_norm,
                unknown_norm: args.unknown_norm,
                angular_noise: args.angular_noise,
                norm_noise: args.norm_noise,
                seed: args.seed,
            };
            let generated = generate(&cfg).map_err(|e| Failure::Data(e.to_string()))?;
            if generated.clamped_norms > 0 {
                eprintln!(
                    "note: {} feature norms clamped to the floor {}",
                    generated.clamped_norms,
                    osrkit_core::synth::NORM_FLOOR
                );
            }
            emit(&args.out, |w| write_run(&generated.run, w))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
