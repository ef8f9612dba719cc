//! Command-line front end.
//!
//! Exit codes: 0 safe, 2 unsafe, 3 unknown, 64 usage error, 65 malformed
//! instance, 66 unreadable input, 74 output error.

pub mod bench;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::covercheck::{Config, Rounding};
use crate::fo::{build_cover_query, emit_smtlib, Atom, Cmp, Formula, Var, VarKind};
use crate::gen::{generate, GenParams};
use crate::instance::{Format, Instance};
use crate::int;
use crate::ratlp::PivotRule;
use report::{decide, Algorithm};

pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_NOINPUT: i32 = 66;
pub const EXIT_IO: i32 = 74;

#[derive(Parser, Debug)]
#[command(name = "petricov", version, about = "Coverability checking for Petri nets")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Decide one instance.
    Check(CheckArgs),
    /// Run algorithms over every instance file of a directory, as CSV.
    Bench(BenchArgs),
    /// Write a seeded random instance.
    Gen(GenArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Mist,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Mist => Format::Mist,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct SearchArgs {
    /// Constant part of the bottleneck size.
    #[arg(long, default_value_t = 10)]
    c: usize,
    /// Proportional part of the bottleneck size: |B|/k more elements.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    /// Round |B|/k up instead of down.
    #[arg(long)]
    ceil: bool,
    /// Keep every surviving basis element in each iteration.
    #[arg(long)]
    no_minbottle: bool,
    /// Per-instance time limit in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Stop after this many backward iterations.
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Report every duration as zero, for reproducible output.
    #[arg(long)]
    no_timings: bool,
    /// Simplex pivoting: Bland's rule, or sparsity-guided with a Bland fallback.
    #[arg(long, value_enum, default_value = "bland")]
    pivot: PivotArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PivotArg {
    Bland,
    Sparse,
}

impl SearchArgs {
    fn config(&self) -> Result<Config, String> {
        let timeout = match self.timeout {
            Some(s) if !(s.is_finite() && s >= 0.0) => return Err(format!("invalid timeout {s}")),
            Some(s) => Some(Duration::from_secs_f64(s)),
            None => None,
        };
        Ok(Config {
            use_minbottle: !self.no_minbottle,
            c: self.c,
            k: self.k as usize,
            rounding: if self.ceil { Rounding::Ceil } else { Rounding::Floor },
            max_iterations: self.max_iterations,
            timeout,
            pivot: match self.pivot {
                PivotArg::Bland => PivotRule::Bland,
                PivotArg::Sparse => PivotRule::Sparse,
            },
        })
    }
}

#[derive(Args, Debug)]
struct CheckArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value = "qcover")]
    algo: Algorithm,
    /// Input format; by default `.json` files are JSON and others MIST.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Write the cover query for the targets as an SMT-LIB script.
    #[arg(long, value_name = "PATH")]
    emit_smt: Option<PathBuf>,
    /// Write the JSON report (`-` for standard output).
    #[arg(long, value_name = "PATH")]
    stats: Option<PathBuf>,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug)]
struct BenchArgs {
    dir: PathBuf,
    /// Algorithms to run, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "backward,qcover")]
    algos: Vec<Algorithm>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// CSV destination; standard output by default.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    places: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    transitions: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    min_weight: u64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    max_weight: u64,
    #[arg(long, default_value_t = 3)]
    max_tokens: u64,
    /// Probability of each input and output arc.
    #[arg(long, default_value_t = 0.3)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "mist")]
    format: FormatArg,
    /// Destination file; standard output by default.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

/// Runs the command line `args` (program name first) and returns the exit
/// code, writing results to `out` and diagnostics to `err`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match cli.cmd {
        Cmd::Check(a) => check(a, out, err),
        Cmd::Bench(a) => run_bench(a, out, err),
        Cmd::Gen(a) => run_gen(a, out, err),
    }
}

/// Entry point used by the binary.
pub fn run(args: impl IntoIterator<Item = OsString>) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

fn load(path: &Path, format: Option<FormatArg>, err: &mut dyn Write) -> Result<Instance, i32> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        let _ = writeln!(err, "petricov: cannot read {}: {e}", path.display());
        EXIT_NOINPUT
    })?;
    let format = format.map(Format::from).unwrap_or_else(|| Format::from_path(path));
    Instance::parse(&text, format).map_err(|e| {
        let _ = writeln!(err, "petricov: {}:{e}", path.display());
        EXIT_DATA
    })
}

fn write_to(path: &Path, text: &str, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), i32> {
    let r = if path.as_os_str() == "-" {
        out.write_all(text.as_bytes())
    } else {
        std::fs::write(path, text)
    };
    r.map_err(|e| {
        let _ = writeln!(err, "petricov: cannot write {}: {e}", path.display());
        EXIT_IO
    })
}

/// The cover query for a disjunction of targets: `Φ(x) ∧ ∨_i x = target_i`.
pub fn smt_for_instance(inst: &Instance) -> String {
    let q = build_cover_query(&inst.net, &inst.initial);
    let pin = |m: &crate::DiscreteMarking| {
        Formula::and(m.0.iter().enumerate().map(|(p, &k)| {
            Formula::atom(Atom::var(Var::new(VarKind::Final, p), Cmp::Eq, int(k as i64)))
        }))
    };
    let f = Formula::and([q.formula, Formula::or(inst.targets.iter().map(pin))]);
    emit_smtlib(&f, &inst.net)
}

fn check(a: CheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cfg = match a.search.config() {
        Ok(c) => c,
        Err(m) => {
            let _ = writeln!(err, "petricov: {m}");
            return EXIT_USAGE;
        }
    };
    let inst = match load(&a.file, a.format, err) {
        Ok(i) => i,
        Err(code) => return code,
    };
    if let Some(path) = &a.emit_smt {
        if let Err(code) = write_to(path, &smt_for_instance(&inst), out, err) {
            return code;
        }
    }
    let mut report = decide(&inst, a.algo, &cfg);
    if a.search.no_timings {
        report.strip_timings();
    }
    if writeln!(out, "{}", report.verdict).is_err() {
        return EXIT_IO;
    }
    if let Some(path) = &a.stats {
        if let Err(code) = write_to(path, &report.to_json(), out, err) {
            return code;
        }
    }
    report.verdict.exit_code()
}

fn run_bench(a: BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cfg = match a.search.config() {
        Ok(c) => c,
        Err(m) => {
            let _ = writeln!(err, "petricov: {m}");
            return EXIT_USAGE;
        }
    };
    let files = match bench::instance_files(&a.dir) {
        Ok(f) => f,
        Err(e) => {
            let _ = writeln!(err, "petricov: cannot list {}: {e}", a.dir.display());
            return EXIT_NOINPUT;
        }
    };
    let mut buf = Vec::new();
    let fmt = a.format.map(Format::from);
    if let Err(e) = bench::bench(&files, &a.algos, &cfg, fmt, !a.search.no_timings, &mut buf) {
        let _ = writeln!(err, "petricov: {e}");
        return EXIT_IO;
    }
    let text = String::from_utf8(buf).expect("csv output is utf-8");
    match &a.out {
        Some(p) => write_to(p, &text, out, err).err().unwrap_or(0),
        None => write_to(Path::new("-"), &text, out, err).err().unwrap_or(0),
    }
}

fn run_gen(a: GenArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let params = GenParams {
        places: a.places as usize,
        transitions: a.transitions as usize,
        min_weight: a.min_weight,
        max_weight: a.max_weight,
        max_tokens: a.max_tokens,
        density: a.density,
        seed: a.seed,
    };
    let inst = match generate(&params) {
        Ok(i) => i,
        Err(e) => {
            let _ = writeln!(err, "petricov: {e}");
            return EXIT_USAGE;
        }
    };
    let text = inst.serialize(a.format.into());
    let dest = a.out.unwrap_or_else(|| PathBuf::from("-"));
    write_to(&dest, &text, out, err).err().unwrap_or(0)
}

