use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use rectnet::complexity::{self, comparison_table, table_to_csv};
use rectnet::transform::{self, step_report, DEFAULT_HEAD_CAP};
use rectnet::verify::{self, line_probe, run_property_suite, sample_point, LineProbeReport, SuiteGrid};
use rectnet::{check_pointwise, eval_max_rectifier, random_net, EquivReport, Evaluate, MaxNet, NetKind, PointwiseConfig, ReduceOptions};

/// Rectifier nets: generation, exact depth reduction, equivalence checks and
/// size accounting.
#[derive(Parser)]
#[command(name = "rectnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random net and print its predicted collapsed size.
    Gen {
        /// plain, full_skip or residual
        kind: NetKind,
        input_dim: usize,
        /// Hidden widths, comma separated (e.g. 2,2,2)
        #[arg(value_delimiter = ',', num_args = 1..)]
        widths: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Entries are uniform on [-scale, scale]
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Output file; stdout when omitted
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a net at one or more points.
    Eval {
        net: PathBuf,
        /// A point, comma separated; repeat for more points
        #[arg(long = "x", value_delimiter = ',', num_args = 1.., action = clap::ArgAction::Append, required = true)]
        x: Vec<f64>,
    },
    /// Remove the top hidden layer.
    Reduce {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        opts: TransformArgs,
    },
    /// Reduce until one hidden layer remains.
    Collapse {
        input: PathBuf,
        output: PathBuf,
        #[command(flatten)]
        opts: TransformArgs,
    },
    /// Compare two nets by sampling, or run the property suite for a family.
    Verify {
        a: Option<PathBuf>,
        b: Option<PathBuf>,
        /// Run the property suite for this family instead of comparing files
        #[arg(long, conflicts_with_all = ["a", "b"])]
        suite: Option<NetKind>,
        #[arg(long, default_value_t = verify::DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = verify::DEFAULT_ABS_FLOOR)]
        abs_floor: f64,
        #[arg(long, default_value_t = verify::DEFAULT_BOX.0, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, default_value_t = verify::DEFAULT_BOX.1, allow_hyphen_values = true)]
        hi: f64,
        /// Random lines to probe for slope changes
        #[arg(long, default_value_t = 10)]
        lines: usize,
        /// Suite: largest depth
        #[arg(long, default_value_t = 3)]
        max_depth: usize,
        /// Suite: allowed layer widths
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        widths: Vec<usize>,
        /// Suite: seeds
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
        seeds: Vec<u64>,
        /// Suite: largest collapsed head exponent to materialize
        #[arg(long, default_value_t = 12)]
        head_cap: usize,
    },
    /// Predicted collapsed sizes for a net file or a width vector.
    Counts {
        net: Option<PathBuf>,
        #[arg(long, requires = "widths", conflicts_with = "net")]
        kind: Option<NetKind>,
        #[arg(long, value_delimiter = ',')]
        widths: Option<Vec<usize>>,
    },
    /// Plain versus residual size table at a fixed number of hidden units.
    Compare {
        #[arg(long = "T")]
        total: usize,
        #[arg(long, value_delimiter = ',', default_value = "2,4,6,8")]
        depths: Vec<usize>,
        /// Emit JSON instead of CSV
        #[arg(long)]
        json: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Copy)]
struct TransformArgs {
    /// Largest allowed base-2 logarithm of the head count
    #[arg(long, default_value_t = DEFAULT_HEAD_CAP)]
    head_cap: usize,
    /// Exceed the head cap
    #[arg(long)]
    force: bool,
    /// Leave zero read-out weights out of the subset enumeration
    #[arg(long)]
    prune_zeros: bool,
    /// Drop bit-identical heads from the result
    #[arg(long)]
    dedup: bool,
}

impl TransformArgs {
    fn options(self) -> ReduceOptions {
        if self.force {
            eprintln!("warning: --force ignores the head cap of {}", self.head_cap);
        }
        ReduceOptions {
            prune_zeros: self.prune_zeros,
            dedup: self.dedup,
            head_cap: if self.force { usize::MAX } else { self.head_cap },
        }
    }
}

enum Failure {
    Io(PathBuf, std::io::Error),
    Core(Option<PathBuf>, rectnet::Error),
    Usage(String),
    Verification,
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Io(..) => 1,
            Failure::Core(_, rectnet::Error::CapExceeded { .. }) => 3,
            Failure::Core(..) | Failure::Usage(_) => 2,
            Failure::Verification => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Io(p, e) => write!(f, "{}: {e}", p.display()),
            Failure::Core(Some(p), e) => write!(f, "{}: {e}", p.display()),
            Failure::Core(None, e) => write!(f, "{e}"),
            Failure::Usage(m) => f.write_str(m),
            Failure::Verification => f.write_str("verification failed"),
        }
    }
}

impl From<rectnet::Error> for Failure {
    fn from(e: rectnet::Error) -> Self {
        Failure::Core(None, e)
    }
}

type Outcome = Result<(), Failure>;

fn read_net(path: &Path) -> Result<MaxNet, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(path.into(), e))?;
    MaxNet::from_json(&text).map_err(|e| Failure::Core(Some(path.into()), e))
}

/// Write-temp-then-rename, so readers never see a partial file.
fn write_atomic(path: &Path, contents: &str) -> Outcome {
    let io = |e| Failure::Io(path.into(), e);
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

// A closed pipe (e.g. `| head`) ends the process quietly instead of panicking.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn print_json<T: Serialize>(value: &T) {
    emit(&format!("{}\n", serde_json::to_string_pretty(value).expect("reports serialize")));
}

fn gen(kind: NetKind, input_dim: usize, widths: &[usize], seed: u64, scale: f64, out: Option<&Path>) -> Outcome {
    let net = random_net::<f64>(kind, input_dim, widths, seed, scale)?;
    let (l, n) = transform::predicted_counts(kind, widths);
    match out {
        Some(path) => {
            write_atomic(path, &net.to_json())?;
            emit(&format!("L={l} N={n}\n"));
        }
        None => {
            emit(&net.to_json());
            eprintln!("L={l} N={n}");
        }
    }
    Ok(())
}

fn eval(path: &Path, coords: &[f64]) -> Outcome {
    let net = read_net(path)?;
    let dim = net.stack.input_dim;
    if !coords.len().is_multiple_of(dim) {
        return Err(rectnet::Error::DimensionMismatch { expected: dim, got: coords.len() % dim }.into());
    }
    for x in coords.chunks(dim) {
        emit(&format!("{}\n", eval_max_rectifier(&net, x)?));
    }
    Ok(())
}

fn reduce(input: &Path, output: &Path, opts: TransformArgs) -> Outcome {
    let net = read_net(input)?;
    let before = net.stack.widths.clone();
    let (out, info) = transform::reduce_step(&net, &opts.options())?;
    write_atomic(output, &out.to_json())?;
    print_json(&step_report(net.stack.kind, &before, info));
    Ok(())
}

fn collapse(input: &Path, output: &Path, opts: TransformArgs) -> Outcome {
    let net = read_net(input)?;
    let (out, report) = transform::collapse(&net, &opts.options())?;
    write_atomic(output, &out.to_json())?;
    print_json(&report);
    Ok(())
}

#[derive(Serialize)]
struct FileVerifyReport {
    pointwise: EquivReport,
    lines: Vec<LineProbeReport>,
    passed: bool,
}

struct VerifyArgs {
    samples: usize,
    seed: u64,
    tol: f64,
    abs_floor: f64,
    lo: f64,
    hi: f64,
    lines: usize,
}

fn verify_files(a: &Path, b: &Path, args: &VerifyArgs) -> Outcome {
    let (na, nb) = (read_net(a)?, read_net(b)?);
    let (ea, eb) = (na.evaluator()?, nb.evaluator()?);
    let cfg = PointwiseConfig {
        lo: args.lo,
        hi: args.hi,
        samples: args.samples,
        seed: args.seed,
        tol: args.tol,
        abs_floor: args.abs_floor,
    };
    let pointwise = check_pointwise(&ea, &eb, &cfg)?;
    let dim = ea.input_dim();
    let span = args.hi - args.lo;
    let mut lines = Vec::with_capacity(args.lines);
    for i in 0..args.lines as u64 {
        let anchor: Vec<f64> = sample_point(dim, args.lo, args.hi, args.seed ^ 0x9e37_79b9, 2 * i);
        let direction: Vec<f64> = sample_point(dim, -span, span, args.seed ^ 0x9e37_79b9, 2 * i + 1);
        if direction.iter().all(|&d| d == 0.0) {
            continue;
        }
        lines.push(line_probe(&ea, &eb, &anchor, &direction, 1_000, 1e-6)?);
    }
    let passed = pointwise.passed && lines.iter().all(LineProbeReport::passed);
    print_json(&FileVerifyReport { pointwise, lines, passed });
    if passed {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn verify_suite(family: NetKind, grid: &SuiteGrid, seeds: &[u64], tol: f64) -> Outcome {
    let report = run_property_suite(family, grid, seeds, tol)?;
    print_json(&report);
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

#[derive(Serialize)]
struct CountsReport {
    kind: NetKind,
    widths: Vec<usize>,
    #[serde(rename = "L")]
    width: usize,
    #[serde(rename = "N")]
    exponent: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<complexity::ResidualCounts>,
}

fn counts(net: Option<&Path>, kind: Option<NetKind>, widths: Option<Vec<usize>>) -> Outcome {
    let (kind, widths) = match (net, kind, widths) {
        (Some(path), _, _) => {
            let net = read_net(path)?;
            (net.stack.kind, net.stack.widths)
        }
        (None, Some(k), Some(w)) if !w.is_empty() && !w.contains(&0) => (k, w),
        (None, Some(_), Some(_)) => return Err(rectnet::Error::InvalidWidths("widths must be positive".into()).into()),
        _ => return Err(Failure::Usage("counts needs a net file or --kind with --widths".into())),
    };
    let (width, exponent) = transform::predicted_counts(kind, &widths);
    let residual = (kind == NetKind::Residual).then(|| complexity::counts_residual(&widths));
    emit(&format!("L={width} N={exponent}\n"));
    print_json(&CountsReport { kind, widths, width, exponent, residual });
    Ok(())
}

fn compare(total: usize, depths: &[usize], json: bool, out: Option<&Path>) -> Outcome {
    if depths.contains(&0) {
        return Err(Failure::Usage("depths must be positive".into()));
    }
    let rows = comparison_table(total, depths);
    let text = if json {
        serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n"
    } else {
        table_to_csv(&rows)
    };
    match out {
        Some(path) => write_atomic(path, &text),
        None => {
            emit(&text);
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Gen { kind, input_dim, widths, seed, scale, out } => {
            gen(kind, input_dim, &widths, seed, scale, out.as_deref())
        }
        Command::Eval { net, x } => eval(&net, &x),
        Command::Reduce { input, output, opts } => reduce(&input, &output, opts),
        Command::Collapse { input, output, opts } => collapse(&input, &output, opts),
        Command::Verify {
            a,
            b,
            suite,
            samples,
            seed,
            tol,
            abs_floor,
            lo,
            hi,
            lines,
            max_depth,
            widths,
            seeds,
            head_cap,
        } => {
            if !(tol > 0.0) {
                return Err(Failure::Usage("--tol must be positive".into()));
            }
            if let Some(family) = suite {
                let grid = SuiteGrid { max_depth, layer_widths: widths, samples, head_cap, ..SuiteGrid::default() };
                return verify_suite(family, &grid, &seeds, tol);
            }
            match (a, b) {
                (Some(a), Some(b)) => {
                    verify_files(&a, &b, &VerifyArgs { samples, seed, tol, abs_floor, lo, hi, lines })
                }
                _ => Err(Failure::Usage("verify needs two net files or --suite <family>".into())),
            }
        }
        Command::Counts { net, kind, widths } => counts(net.as_deref(), kind, widths),
        Command::Compare { total, depths, json, out } => compare(total, &depths, json, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
