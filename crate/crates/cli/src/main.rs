use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use wilfrefine_core::equivalence::{dt_set, specs_label, tally_avoiders, theta_f_to_g, theta_g_to_f};
use wilfrefine_core::pattern::avoiders;
use wilfrefine_core::slide::{phi_trajectory, psi_trajectory, Selection, Trajectory};
use wilfrefine_core::verify::{run_suite, Grid, Suite};
use wilfrefine_core::{f_map, g_map, CountTable, Error, KeyKind, PatternSpec, Permutation};

const THREADS_VAR: &str = "WILFREFINE_THREADS";
const N_MAX_CAP: usize = 8;

#[derive(Parser)]
#[command(
    name = "wilfrefine",
    version,
    about = "Descent-preserving bijections between pattern-avoidance classes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print descent set, maj, inv, blocks and ranks of a permutation.
    Stats { perm: String },
    /// Report whether a permutation contains each pattern, with a witness.
    Contains {
        perm: String,
        /// Pattern spec: "132", "1,3,2", "F4", "G4", "J4", "H:4" or "Q:4".
        #[arg(long = "pattern", required = true)]
        patterns: Vec<String>,
    },
    /// Enumerate avoiders of the given patterns.
    Enumerate {
        #[arg(long)]
        n: usize,
        #[arg(long = "pattern")]
        patterns: Vec<String>,
        #[arg(long, value_enum, default_value_t = CountBy::None)]
        count_by: CountBy,
        /// Period for `--count-by dt`.
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Output file; `-` writes the payload to stdout instead of the summary.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply one of the bijections.
    Map {
        perm: String,
        #[arg(long, value_enum)]
        bijection: Bijection,
        #[arg(long)]
        k: usize,
        /// Print each slide step to stderr.
        #[arg(long)]
        trace: bool,
    },
    /// Run exhaustive verification suites and print a JSON report.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 7)]
        n_max: usize,
        /// Values of k (repeatable); default 3, 4, 5.
        #[arg(long = "k")]
        ks: Vec<usize>,
        /// Values of t for the dt suite (repeatable); default 1, 2, 3.
        #[arg(long = "t")]
        ts: Vec<usize>,
        /// Allow n_max above the cap.
        #[arg(long)]
        force: bool,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CountBy {
    None,
    Descents,
    Maj,
    Dt,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Bijection {
    F,
    G,
    Phi,
    Psi,
    Theta,
    #[value(name = "theta_inv", alias = "theta-inv")]
    ThetaInv,
}

enum Failure {
    Core(Error),
    Io(String, io::Error),
    Cap(String),
    Usage(String),
    Verify,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Core(e) if e.is_parse() => 2,
            Failure::Core(e) if e.is_precondition() => 3,
            Failure::Core(_) | Failure::Verify => 1,
            Failure::Usage(_) => 2,
            Failure::Io(..) => 4,
            Failure::Cap(_) => 5,
        }
    }

    fn message(&self) -> Option<String> {
        match self {
            Failure::Core(e) => Some(e.to_string()),
            Failure::Io(path, e) => Some(format!("{path}: {e}")),
            Failure::Cap(m) | Failure::Usage(m) => Some(m.clone()),
            Failure::Verify => None,
        }
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(f) = configure_threads().and_then(|_| run(cli.command)) {
        if let Some(m) = f.message() {
            eprintln!("error: {m}");
        }
        return ExitCode::from(f.code());
    }
    ExitCode::SUCCESS
}

fn configure_threads() -> CliResult {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Stats { perm } => stats(&perm),
        Command::Contains { perm, patterns } => contains(&perm, &patterns),
        Command::Enumerate {
            n,
            patterns,
            count_by,
            t,
            format,
            out,
        } => enumerate(n, &patterns, count_by, t, format, out),
        Command::Map {
            perm,
            bijection,
            k,
            trace,
        } => map(&perm, bijection, k, trace),
        Command::Verify {
            suite,
            n_max,
            ks,
            ts,
            force,
        } => verify(&suite, n_max, ks, ts, force),
    }
}

fn print_json(v: &Value) {
    println!("{v}");
}

fn stats(text: &str) -> CliResult {
    let p = Permutation::parse(text)?;
    let blocks: Vec<[usize; 2]> = if p.is_empty() {
        Vec::new()
    } else {
        p.blocks()?.blocks().iter().map(|b| [b.start, b.end]).collect()
    };
    print_json(&json!({
        "n": p.len(),
        "descents": p.descent_set(),
        "ascents": p.ascent_set(),
        "maj": p.major_index(),
        "inv": p.inversion_number(),
        "blocks": blocks,
        "ranks": p.ranks(),
    }));
    Ok(())
}

fn parse_specs(patterns: &[String]) -> Result<Vec<PatternSpec>, Failure> {
    Ok(patterns
        .iter()
        .map(|s| s.parse())
        .collect::<Result<Vec<PatternSpec>, Error>>()?)
}

fn contains(text: &str, patterns: &[String]) -> CliResult {
    let p = Permutation::parse(text)?;
    let specs = parse_specs(patterns)?;
    let results: Vec<Value> = specs
        .iter()
        .map(|s| {
            let witness = s.contains(&p);
            json!({
                "pattern": s.label(),
                "contains": witness.is_some(),
                "witness": witness,
            })
        })
        .collect();
    print_json(&json!({ "input": p, "results": results }));
    Ok(())
}

fn open_out(path: &PathBuf) -> Result<Box<dyn Write>, Failure> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(io::stdout().lock()));
    }
    let file = File::create(path).map_err(|e| Failure::Io(path.display().to_string(), e))?;
    Ok(Box::new(BufWriter::new(file)))
}

enum Payload {
    List(Vec<Permutation>),
    Table(CountTable),
}

fn write_payload(payload: &Payload, format: Format, path: &PathBuf) -> CliResult {
    let io_err = |e: io::Error| Failure::Io(path.display().to_string(), e);
    let mut w = open_out(path)?;
    match (payload, format) {
        (Payload::List(perms), Format::Json) => {
            serde_json::to_writer(&mut w, perms).map_err(|e| io_err(e.into()))?;
            writeln!(w).map_err(io_err)?;
        }
        (Payload::List(perms), Format::Csv) => {
            let mut c = csv::Writer::from_writer(&mut w);
            c.write_record(["perm"]).map_err(|e| io_err(e.into()))?;
            for p in perms {
                c.write_record([p.to_string()]).map_err(|e| io_err(e.into()))?;
            }
            c.flush().map_err(io_err)?;
        }
        (Payload::Table(t), Format::Json) => {
            serde_json::to_writer(&mut w, t).map_err(|e| io_err(e.into()))?;
            writeln!(w).map_err(io_err)?;
        }
        (Payload::Table(t), Format::Csv) => t.write_csv(&mut w).map_err(|e| io_err(e.into()))?,
    }
    w.flush().map_err(io_err)
}

fn enumerate(
    n: usize,
    patterns: &[String],
    count_by: CountBy,
    t: Option<usize>,
    format: Format,
    out: Option<PathBuf>,
) -> CliResult {
    let specs = parse_specs(patterns)?;
    if t.is_some() && count_by != CountBy::Dt {
        return Err(Failure::Usage("--t only applies to --count-by dt".into()));
    }
    let label = specs_label(&specs);
    let payload = match count_by {
        CountBy::None => Payload::List(avoiders(n, &specs).collect()),
        CountBy::Descents => Payload::Table(tally_avoiders(n, None, &specs, KeyKind::DescentSet)),
        CountBy::Maj => Payload::Table(tally_avoiders(n, None, &specs, KeyKind::MajorIndex)),
        CountBy::Dt => {
            let t = t.ok_or_else(|| Failure::Usage("--count-by dt needs --t".into()))?;
            let target = dt_set(n, t)?.mask();
            let full = tally_avoiders(n, None, &specs, KeyKind::DescentSet);
            let mut table = CountTable::new(KeyKind::DescentSet, n, None, label.clone());
            table.entries.insert(target, full.get(target));
            Payload::Table(table)
        }
    };
    let total = match &payload {
        Payload::List(v) => v.len() as u64,
        Payload::Table(t) => t.total(),
    };
    let to_stdout = out.as_ref().is_some_and(|p| p.as_os_str() == "-");
    if let Some(path) = &out {
        write_payload(&payload, format, path)?;
    }
    if !to_stdout {
        let count_by = match count_by {
            CountBy::None => "none",
            CountBy::Descents => "descents",
            CountBy::Maj => "maj",
            CountBy::Dt => "dt",
        };
        print_json(&json!({
            "n": n,
            "patterns": specs.iter().map(|s| s.label()).collect::<Vec<_>>(),
            "count_by": count_by,
            "t": t,
            "total": total,
            "out": out.map(|p| p.display().to_string()),
        }));
    }
    Ok(())
}

fn emit_trace<S: Selection>(traj: &Trajectory<S>) {
    let mut err = io::stderr().lock();
    for step in &traj.steps {
        let _ = writeln!(err, "{}", step.trace_line());
    }
}

fn map(text: &str, bijection: Bijection, k: usize, trace: bool) -> CliResult {
    let p = Permutation::parse(text)?;
    let out = match bijection {
        Bijection::F => f_map(&p, k)?,
        Bijection::G => g_map(&p, k)?,
        Bijection::Phi => {
            let traj = phi_trajectory(&p, k)?;
            if trace {
                emit_trace(&traj);
            }
            traj.output().clone()
        }
        Bijection::Psi => {
            let traj = psi_trajectory(&p, k)?;
            if trace {
                emit_trace(&traj);
            }
            traj.output().clone()
        }
        Bijection::Theta if trace => {
            let traj = psi_trajectory(&f_map(&p, k)?, k)?;
            emit_trace(&traj);
            traj.output().clone()
        }
        Bijection::ThetaInv if trace => {
            let traj = phi_trajectory(&p, k)?;
            emit_trace(&traj);
            g_map(traj.output(), k)?
        }
        Bijection::Theta => theta_g_to_f(&p, k)?,
        Bijection::ThetaInv => theta_f_to_g(&p, k)?,
    };
    println!("{out}");
    Ok(())
}

fn verify(suite: &str, n_max: usize, ks: Vec<usize>, ts: Vec<usize>, force: bool) -> CliResult {
    let suite: Suite = suite.parse()?;
    if n_max > N_MAX_CAP && !force {
        return Err(Failure::Cap(format!(
            "n_max {n_max} exceeds the cap of {N_MAX_CAP}; pass --force to run anyway"
        )));
    }
    let defaults = Grid::default();
    let grid = Grid {
        n_max,
        ks: if ks.is_empty() { defaults.ks } else { ks },
        ts: if ts.is_empty() { defaults.ts } else { ts },
        large_k_n_max: defaults.large_k_n_max,
    };
    let report = run_suite(suite, &grid)?;
    print_json(&serde_json::to_value(&report).map_err(|e| Failure::Usage(e.to_string()))?);
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}
