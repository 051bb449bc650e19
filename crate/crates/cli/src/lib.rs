//! Command-line front end: single solves, the benchmark grid, and Jacobian
//! checks, rendered as an aligned table, CSV or JSON.

use std::fmt::Write as _;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use shamanskii::{
    check_jacobian, default_tol, estimate_coc, registry_get, run_suite_problems, solve, Benchmark,
    Problem, ProblemError, SolveStatus, SolverConfig, SuiteCell, SuiteReport, Vector,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

pub const DEFAULT_PROBLEMS: [&str; 5] = ["a", "b", "c", "d", "e"];
pub const DEFAULT_MS: [usize; 4] = [1, 2, 3, 4];

#[derive(Debug, Parser)]
#[command(
    name = "shamanskii",
    version,
    about = "Shamanskii m-method solver and benchmark harness"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one registry problem.
    Run(RunArgs),
    /// Run the (problem, m) grid; with no flags this is the full 5 x 4 table.
    Suite(SuiteArgs),
    /// Compare analytic Jacobians against central differences.
    CheckJacobians(CheckArgs),
    /// List the registry problems.
    ListProblems,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Residual-norm tolerance [default: 10 * machine epsilon]
    #[arg(long, value_parser = positive_float)]
    pub tol: Option<f64>,
    /// Cap on outer iterations (Jacobian factorizations).
    #[arg(long, default_value_t = shamanskii::solver::DEFAULT_MAX_OUTER, value_parser = positive_count)]
    pub max_outer: usize,
    /// Stop an inner sweep as soon as the residual meets the tolerance.
    #[arg(long)]
    pub inner_early_exit: bool,
}

impl SolverArgs {
    pub fn config(&self, m: usize) -> SolverConfig<f64> {
        SolverConfig {
            m,
            tol: self.tol.unwrap_or_else(default_tol),
            max_outer: self.max_outer,
            inner_early_exit: self.inner_early_exit,
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub problem: String,
    /// Inner frozen-Jacobian steps per outer iteration.
    #[arg(long, default_value_t = 1, value_parser = positive_count)]
    pub m: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Print the residual norm of every outer iterate.
    #[arg(long, short)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SuiteArgs {
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_PROBLEMS.map(String::from))]
    pub problems: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_MS, value_parser = positive_count)]
    pub ms: Vec<usize>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_PROBLEMS.map(String::from))]
    pub problems: Vec<String>,
    /// Random points around the starting point, in addition to the start.
    #[arg(long, default_value_t = 10)]
    pub points: usize,
    /// Half-width of the uniform perturbation box.
    #[arg(long, default_value_t = 0.1, value_parser = positive_float)]
    pub radius: f64,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-6, value_parser = positive_float)]
    pub step: f64,
    /// Allowed error relative to 1 + ||J||_inf.
    #[arg(long, default_value_t = 1e-5, value_parser = positive_float)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn positive_float(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(_) => Err("must be a positive finite number".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn positive_count(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

/// What a command printed and how it should exit.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CommandOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CommandOutput {
    fn ok(stdout: String) -> Self {
        Self {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            stdout: String::new(),
            stderr: format!("error: {}\n", message.into()),
        }
    }
}

pub fn execute(cli: &Cli) -> CommandOutput {
    match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Suite(args) => cmd_suite(args),
        Command::CheckJacobians(args) => cmd_check_jacobians(args),
        Command::ListProblems => cmd_list_problems(),
    }
}

/// One output row, shared by every format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub problem: String,
    pub m: usize,
    pub it_inv: usize,
    pub it_tot: usize,
    pub rho: Option<f64>,
    pub status: String,
    pub final_residual: Option<f64>,
}

/// Rho as printed: four decimals.
pub fn round_rho(rho: f64) -> f64 {
    format!("{rho:.4}").parse().expect("formatted float parses")
}

impl From<&SuiteCell<f64>> for Record {
    fn from(cell: &SuiteCell<f64>) -> Self {
        Self {
            problem: cell.problem.clone(),
            m: cell.m,
            it_inv: cell.it_inv,
            it_tot: cell.it_tot,
            rho: cell.rho.map(round_rho),
            status: cell.status.to_string(),
            final_residual: cell
                .final_residual
                .is_finite()
                .then_some(cell.final_residual),
        }
    }
}

fn rho_text(rho: Option<f64>) -> String {
    rho.map_or_else(|| "NA".to_string(), |r| format!("{r:.4}"))
}

fn residual_text(r: Option<f64>) -> String {
    r.map_or_else(|| "NaN".to_string(), |r| format!("{r:e}"))
}

pub fn render_csv(records: &[Record]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record([
        "problem",
        "m",
        "it_inv",
        "it_tot",
        "rho",
        "status",
        "final_residual",
    ])
    .expect("in-memory write");
    for r in records {
        w.write_record([
            r.problem.clone(),
            r.m.to_string(),
            r.it_inv.to_string(),
            r.it_tot.to_string(),
            rho_text(r.rho),
            r.status.clone(),
            residual_text(r.final_residual),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

pub fn render_json(records: &[Record]) -> String {
    let mut s = serde_json::to_string_pretty(records).expect("records serialize");
    s.push('\n');
    s
}

/// Text of one grid cell: `it_inv (it_tot) rho`, followed by the status
/// when the run did not converge.
pub fn cell_text(r: &Record) -> String {
    let mut s = format!("{} ({}) {}", r.it_inv, r.it_tot, rho_text(r.rho));
    if r.status != SolveStatus::Converged.as_str() {
        let _ = write!(s, " [{}]", r.status);
    }
    s
}

/// Grid layout: one row per problem, one column per m.
pub fn render_table(records: &[Record]) -> String {
    let mut problems: Vec<&str> = Vec::new();
    let mut ms: Vec<usize> = Vec::new();
    for r in records {
        if !problems.contains(&r.problem.as_str()) {
            problems.push(&r.problem);
        }
        if !ms.contains(&r.m) {
            ms.push(r.m);
        }
    }
    let mut rows: Vec<Vec<String>> = vec![std::iter::once(String::new())
        .chain(ms.iter().map(|m| format!("m={m}")))
        .collect()];
    for p in &problems {
        let mut row = vec![format!("({p})")];
        for &m in &ms {
            let text = records
                .iter()
                .find(|r| r.problem == *p && r.m == m)
                .map_or_else(|| "-".to_string(), cell_text);
            row.push(text);
        }
        rows.push(row);
    }
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

pub fn render(records: &[Record], format: Format) -> String {
    match format {
        Format::Table => render_table(records),
        Format::Csv => render_csv(records),
        Format::Json => render_json(records),
    }
}

fn exit_for(all_converged: bool) -> i32 {
    if all_converged {
        EXIT_OK
    } else {
        EXIT_NUMERICAL
    }
}

pub fn cmd_run(args: &RunArgs) -> CommandOutput {
    let problem = match registry_get(&args.problem) {
        Ok(p) => p,
        Err(e) => return CommandOutput::usage(e.to_string()),
    };
    run_problem(&problem, args)
}

/// [`cmd_run`] on an arbitrary problem.
pub fn run_problem<P: Problem<f64> + ?Sized>(problem: &P, args: &RunArgs) -> CommandOutput {
    let cfg = args.solver.config(args.m);
    let trace = match solve(problem, &cfg) {
        Ok(t) => t,
        Err(e) => return CommandOutput::usage(e.to_string()),
    };
    let coc = estimate_coc(&trace);
    let record = Record {
        problem: problem.name().to_string(),
        m: args.m,
        it_inv: trace.it_inv,
        it_tot: trace.it_tot,
        rho: coc.rho.map(round_rho),
        status: trace.status.to_string(),
        final_residual: trace
            .final_residual()
            .is_finite()
            .then(|| trace.final_residual()),
    };

    let mut out = String::new();
    match args.format {
        Format::Table => {
            if args.verbose {
                for (k, r) in trace.residual_norms.iter().enumerate() {
                    let _ = writeln!(out, "outer {k:>3}  residual={r:e}");
                }
            }
            let _ = writeln!(
                out,
                "problem={} m={} status={} it_inv={} it_tot={} final_residual={} rho={}",
                record.problem,
                record.m,
                record.status,
                record.it_inv,
                record.it_tot,
                residual_text(record.final_residual),
                rho_text(record.rho),
            );
            if let Some(reason) = coc.na_reason {
                if args.verbose {
                    let _ = writeln!(out, "rho NA: {reason}");
                }
            }
            if let Some(msg) = &trace.message {
                let _ = writeln!(out, "note: {msg}");
            }
        }
        other => out = render(std::slice::from_ref(&record), other),
    }
    CommandOutput {
        code: exit_for(trace.converged()),
        stdout: out,
        stderr: String::new(),
    }
}

pub fn cmd_suite(args: &SuiteArgs) -> CommandOutput {
    let problems = match resolve(&args.problems) {
        Ok(p) => p,
        Err(e) => return CommandOutput::usage(e.to_string()),
    };
    suite_problems(&problems, args)
}

/// [`cmd_suite`] on arbitrary problems.
pub fn suite_problems<P: Problem<f64>>(problems: &[P], args: &SuiteArgs) -> CommandOutput {
    let report: SuiteReport<f64> = run_suite_problems(problems, &args.ms, &args.solver.config(1));
    let records: Vec<Record> = report.cells.iter().map(Record::from).collect();
    CommandOutput {
        code: exit_for(report.all_converged()),
        stdout: render(&records, args.format),
        stderr: String::new(),
    }
}

fn resolve(names: &[String]) -> Result<Vec<Benchmark>, ProblemError> {
    names.iter().map(|n| registry_get(n)).collect()
}

pub fn cmd_check_jacobians(args: &CheckArgs) -> CommandOutput {
    let problems = match resolve(&args.problems) {
        Ok(p) => p,
        Err(e) => return CommandOutput::usage(e.to_string()),
    };
    let refs: Vec<&dyn Problem<f64>> = problems.iter().map(|p| p as &dyn Problem<f64>).collect();
    check_problems(&refs, args)
}

/// [`cmd_check_jacobians`] on arbitrary problems.
pub fn check_problems(problems: &[&dyn Problem<f64>], args: &CheckArgs) -> CommandOutput {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut out = String::new();
    let mut all_ok = true;
    let _ = writeln!(
        out,
        "{:<10} {:>6} {:>7} {:>12} {:>12}  {:<10} status",
        "problem", "points", "skipped", "max_error", "allowed", "worst"
    );
    for p in problems {
        let start = p.start();
        let mut points = vec![start.clone()];
        for _ in 0..args.points {
            let x: Vec<f64> = start
                .iter()
                .map(|&s| s + rng.gen_range(-args.radius..args.radius))
                .collect();
            points.push(Vector::from_vec(x));
        }

        let mut checked = 0;
        let mut skipped = 0;
        let mut worst: Option<(f64, f64, (usize, usize))> = None;
        let mut failed = false;
        for x in &points {
            match check_jacobian(*p, x, args.step, args.rel_tol) {
                Ok(check) => {
                    checked += 1;
                    failed |= !check.passed();
                    let ratio = check.max_error / check.allowed;
                    if worst.is_none_or(|(e, a, _)| ratio > e / a || ratio.is_nan()) {
                        worst = Some((check.max_error, check.allowed, check.worst));
                    }
                }
                Err(ProblemError::Domain(v)) => {
                    skipped += 1;
                    let _ = writeln!(out, "note: skipped point outside domain ({v})");
                }
                Err(e) => {
                    failed = true;
                    let _ = writeln!(out, "note: {e}");
                }
            }
        }
        all_ok &= !failed && checked > 0;
        let (err, allowed, (i, j)) = worst.unwrap_or((f64::NAN, f64::NAN, (0, 0)));
        let _ = writeln!(
            out,
            "{:<10} {:>6} {:>7} {:>12.3e} {:>12.3e}  {:<10} {}",
            p.name(),
            checked,
            skipped,
            err,
            allowed,
            format!("({i}, {j})"),
            if failed { "FAIL" } else { "ok" }
        );
    }
    CommandOutput {
        code: exit_for(all_ok),
        stdout: out,
        stderr: String::new(),
    }
}

pub fn cmd_list_problems() -> CommandOutput {
    let mut out = String::new();
    for b in Benchmark::ALL {
        let start: Vector<f64> = b.start();
        let start = if b.size() > 4 {
            format!("{} x {}", b.size(), start[0])
        } else {
            format!("{:?}", start.as_slice())
        };
        let _ = writeln!(
            out,
            "{}  n={:<3} x0={:<16} F(x)={}",
            b.id(),
            b.size(),
            start,
            b.formula()
        );
    }
    CommandOutput::ok(out)
}
