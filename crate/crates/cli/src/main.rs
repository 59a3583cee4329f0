use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use salemca::analysis::{build_function_table, classify_salem, screen_family};
use salemca::engine::{run_counts, EngineOptions, Evolution, DEFAULT_MEM_CAP};
use salemca::{LatticeKind, Rule};
use salemca_cli::{
    cells_csv, counts_csv, default_precision, fsample_csv, parse_alpha, render_window, reports_json,
    salem_csv, sidecar_path, verify_closed_form, verify_salem_equality, verify_takahashi, write_atomic,
    CliError, SuiteOutcome,
};

#[derive(Parser, Debug)]
#[command(name = "salemca", version, about = "Linear cellular automata from a single seed and Salem's singular function")]
struct Cli {
    /// Upper bound in bytes on simulation memory.
    #[arg(long, global = true, default_value_t = DEFAULT_MEM_CAP)]
    mem_cap: u64,
    /// Spread each simulation step across threads.
    #[arg(long, global = true)]
    parallel: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cells set at a given step, as CSV coordinates.
    Simulate {
        #[arg(long)]
        rule: String,
        #[arg(long)]
        steps: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// num and cum for steps 0..=N as CSV.
    Counts {
        #[arg(long)]
        rule: String,
        #[arg(long)]
        steps: u64,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// f_{T,k} at every k-bit dyadic as CSV.
    Fsample {
        #[arg(long)]
        rule: String,
        #[arg(long)]
        k: u32,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Salem's function at every k-bit dyadic as CSV.
    Salem {
        /// Parameter as p/q.
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        k: u32,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Compare one rule with Salem's function up to precision kmax.
    Classify {
        #[arg(long)]
        rule: String,
        #[arg(long)]
        kmax: u32,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Classify every rule of a lattice family.
    Screen {
        #[arg(long, value_enum)]
        lattice: LatticeArg,
        /// Dimension of the square lattice.
        #[arg(long)]
        dim: Option<u32>,
        #[arg(long)]
        kmax: u32,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// PBM bitmap of the pattern at a step, or one file per step of a range.
    Pattern {
        #[arg(long)]
        rule: String,
        #[arg(long)]
        step: u64,
        /// Last step of a range starting at --step.
        #[arg(long)]
        until: Option<u64>,
        /// The two axes to draw.
        #[arg(long, value_delimiter = ',', default_values_t = [0usize, 1])]
        axes: Vec<usize>,
        /// Coordinates of the remaining axes, in ascending axis order.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        fixed: Vec<i32>,
        /// Staggered-row layout for hexagonal rules.
        #[arg(long)]
        offset_rows: bool,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run check suites; exits 1 if any fails.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        #[arg(long)]
        dim: Option<u32>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long)]
        kmax: Option<u32>,
        #[arg(long)]
        rule: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LatticeArg {
    Sq,
    Tri,
    Hex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    Takahashi,
    Closedform,
    SalemEquality,
    All,
}

fn parse_rule(spec: &str) -> Result<Rule, CliError> {
    spec.parse::<Rule>().map_err(CliError::from)
}

/// Writes `data` to `out` atomically with a sidecar, or to stdout.
fn emit(out: Option<&Path>, data: &str, args: &[String]) -> Result<(), CliError> {
    match out {
        None => {
            std::io::stdout().write_all(data.as_bytes())?;
            Ok(())
        }
        Some(path) => {
            write_atomic(path, data.as_bytes())?;
            let created = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            let meta = json!({
                "tool": "salemca",
                "version": env!("CARGO_PKG_VERSION"),
                "args": args,
                "created_unix": created,
                "bytes": data.len(),
            });
            let mut text = serde_json::to_string_pretty(&meta).expect("json values serialize");
            text.push('\n');
            write_atomic(&sidecar_path(path), text.as_bytes())?;
            Ok(())
        }
    }
}

fn horizon_for(k: u32) -> Result<u64, CliError> {
    if k > 40 {
        return Err(CliError::Usage(format!("k = {k} is too large")));
    }
    Ok((1u64 << k) - 1)
}

fn run(cli: Cli, args: &[String]) -> Result<(), CliError> {
    let opts = EngineOptions {
        mem_cap: cli.mem_cap,
        parallel: cli.parallel,
    };
    match cli.command {
        Command::Simulate { rule, steps, out } => {
            let rule = parse_rule(&rule)?;
            let w = salemca::engine::evolve_to(&rule, steps, &opts)?;
            emit(out.as_deref(), &cells_csv(&w), args)
        }
        Command::Counts { rule, steps, out } => {
            let counts = run_counts(&parse_rule(&rule)?, steps, &opts)?;
            emit(out.as_deref(), &counts_csv(&counts), args)
        }
        Command::Fsample { rule, k, out } => {
            let counts = run_counts(&parse_rule(&rule)?, horizon_for(k)?, &opts)?;
            let table = build_function_table(&counts, k)?;
            emit(out.as_deref(), &fsample_csv(&table), args)
        }
        Command::Salem { alpha, k, out } => {
            if k > 24 {
                return Err(CliError::Usage(format!("k = {k} is too large")));
            }
            let params = parse_alpha(&alpha)?;
            emit(out.as_deref(), &salem_csv(&params, k), args)
        }
        Command::Classify { rule, kmax, out } => {
            let report = classify_salem(&parse_rule(&rule)?, kmax, &opts)?;
            emit(out.as_deref(), &reports_json(&[report]), args)
        }
        Command::Screen {
            lattice,
            dim,
            kmax,
            out,
        } => {
            let lattice = match (lattice, dim) {
                (LatticeArg::Sq, Some(d)) => LatticeKind::square(d)?,
                (LatticeArg::Sq, None) => return Err(CliError::Usage("--dim is required for sq".into())),
                (_, Some(_)) => return Err(CliError::Usage("--dim applies to sq only".into())),
                (LatticeArg::Tri, None) => LatticeKind::Triangular,
                (LatticeArg::Hex, None) => LatticeKind::Hexagonal,
            };
            let reports = screen_family(lattice, kmax, &opts)?;
            emit(out.as_deref(), &reports_json(&reports), args)
        }
        Command::Pattern {
            rule,
            step,
            until,
            axes,
            fixed,
            offset_rows,
            out,
        } => {
            let rule = parse_rule(&rule)?;
            let [ax, ay] = axes[..] else {
                return Err(CliError::Usage("--axes takes exactly two axis indices".into()));
            };
            let last = until.unwrap_or(step);
            if last < step {
                return Err(CliError::Usage("--until must not precede --step".into()));
            }
            if until.is_some() && out.is_none() {
                return Err(CliError::Usage("a step range needs --out".into()));
            }
            let radius = u32::try_from(last).map_err(|_| CliError::Usage("step too large".into()))?;
            let mut evo = Evolution::new(&rule, radius, &opts)?;
            let width = last.to_string().len();
            for t in 0..=last {
                if t > 0 {
                    evo.advance()?;
                }
                if t < step {
                    continue;
                }
                let pbm = render_window(evo.window(), (ax, ay), &fixed, offset_rows)?.to_pbm();
                let target = match (&out, until) {
                    (Some(path), Some(_)) => Some(numbered(path, t, width)),
                    (path, None) => path.clone(),
                    (None, Some(_)) => unreachable!("checked above"),
                };
                emit(target.as_deref(), &pbm, args)?;
            }
            Ok(())
        }
        Command::Verify {
            suite,
            dim,
            steps,
            kmax,
            rule,
        } => {
            let outcomes = run_suites(suite, dim, steps, kmax, rule.as_deref(), &opts)?;
            let mut failed = Vec::new();
            for o in &outcomes {
                println!("{}", o.summary());
                if !o.passed() {
                    failed.push(o.name);
                }
            }
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Verification(failed.join(", ")))
            }
        }
    }
}

/// `out.pbm` with step 7 of a range ending at 15 becomes `out_07.pbm`.
fn numbered(path: &Path, t: u64, width: usize) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{t:0width$}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{t:0width$}"),
    };
    path.with_file_name(name)
}

fn run_suites(
    suite: Suite,
    dim: Option<u32>,
    steps: Option<u64>,
    kmax: Option<u32>,
    rule: Option<&str>,
    opts: &EngineOptions,
) -> Result<Vec<SuiteOutcome>, CliError> {
    let dims: Vec<u32> = match dim {
        Some(d) => vec![d],
        None => vec![1, 2, 3],
    };
    let mut outcomes = Vec::new();
    if matches!(suite, Suite::Takahashi | Suite::All) {
        outcomes.push(verify_takahashi(&dims, steps.unwrap_or(32), opts)?);
    }
    if matches!(suite, Suite::Closedform | Suite::All) {
        let mut merged = SuiteOutcome {
            name: "closedform",
            checked: 0,
            failures: Vec::new(),
        };
        let targets: Vec<(Rule, u64)> = match rule {
            Some(spec) => vec![(parse_rule(spec)?, steps.unwrap_or(255))],
            None => closed_form_targets(dim, steps)?,
        };
        for (r, n) in targets {
            let o = verify_closed_form(&r, n, opts)?;
            merged.checked += o.checked;
            merged.failures.extend(o.failures);
        }
        outcomes.push(merged);
    }
    if matches!(suite, Suite::SalemEquality | Suite::All) {
        let mut targets = Vec::new();
        let sweep: Vec<u32> = dim.map_or_else(|| (1..=5).collect(), |d| vec![d]);
        for d in sweep {
            let k = match kmax.or_else(|| default_precision(d)) {
                Some(k) => k,
                None => return Err(CliError::Usage(format!("--kmax is required for dimension {d}"))),
            };
            targets.push((Rule::f_d(d)?, k));
            targets.push((Rule::g_d(d)?, k));
        }
        if dim.is_none() {
            let k = kmax.unwrap_or(8);
            targets.push((Rule::hexagonal(2)?, k));
            targets.push((Rule::hexagonal(3)?, k));
        }
        outcomes.push(verify_salem_equality(&targets, opts)?);
    }
    Ok(outcomes)
}

fn closed_form_targets(dim: Option<u32>, steps: Option<u64>) -> Result<Vec<(Rule, u64)>, CliError> {
    let sweep: Vec<u32> = dim.map_or_else(|| (1..=5).collect(), |d| vec![d]);
    let mut targets = Vec::new();
    for d in sweep {
        let n = match steps.or_else(|| default_precision(d).map(|k| (1u64 << k) - 1)) {
            Some(n) => n,
            None => return Err(CliError::Usage(format!("--steps is required for dimension {d}"))),
        };
        targets.push((Rule::f_d(d)?, n));
        targets.push((Rule::g_d(d)?, n));
    }
    if dim.is_none() {
        let n = steps.unwrap_or(255);
        targets.push((Rule::hexagonal(2)?, n));
        targets.push((Rule::hexagonal(3)?, n));
    }
    Ok(targets)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    match run(cli, &args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("salemca: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
