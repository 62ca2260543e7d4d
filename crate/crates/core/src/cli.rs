//! The `formconv` command line.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::completion::{self, CompletedFormJson};
use crate::convergence::{self, FormSequenceProblem, RunOptions};
use crate::error::{Error, Result};
use crate::experiments::{self, ExperimentKind, ExperimentSpec};
use crate::forms::{self, FormInH, Sector};
use crate::io;
use crate::linalg::{self, CMatrix};
use crate::relation;
use crate::semigroup;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "formconv", version, about = "Quasi-sectorial forms, associated relations and resolvent convergence")]
struct Cli {
    /// Emit JSON.
    #[arg(long, global = true, conflicts_with = "csv")]
    json: bool,
    /// Emit CSV (default for tabular reports).
    #[arg(long, global = true)]
    csv: bool,
    /// Seed for probes and random instances.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress diagnostics on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct SectorArgs {
    /// Sector half-angle (defaults to the file's `theta`, else 0).
    #[arg(long)]
    theta: Option<f64>,
    /// Sector vertex (defaults to the file's `gamma`, else 0).
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// Experiment spec or form-sequence JSON.
    #[arg(long)]
    spec: PathBuf,
    /// Output path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the spec's `lambda`.
    #[arg(long)]
    lambda: Option<f64>,
    /// Number of seeded probe vectors.
    #[arg(long, default_value_t = 5)]
    probes: usize,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Verify that a form is quasi-sectorial.
    Check {
        form: PathBuf,
        #[command(flatten)]
        sector: SectorArgs,
    },
    /// Complete a form and print the quotient data.
    Complete {
        form: PathBuf,
        #[command(flatten)]
        sector: SectorArgs,
    },
    /// Resolvent (λ + A)⁻¹ of the associated relation.
    Resolvent {
        form: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[command(flatten)]
        sector: SectorArgs,
    },
    /// Transfer Céa bound for every member of a sequence.
    Cea {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Resolvent convergence report.
    Converge {
        #[command(flatten)]
        run: RunArgs,
        /// Skip approximation defects and the Céa columns.
        #[arg(long)]
        fast: bool,
    },
    /// Semigroup convergence on a Chebyshev grid in [0, t_max].
    Semigroup {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 1.0)]
        t_max: f64,
        #[arg(long, default_value_t = 33)]
        t_points: usize,
    },
    /// Run a canned experiment.
    Demo(DemoArgs),
}

#[derive(Args, Debug)]
struct DemoArgs {
    /// galerkin-1d | dirichlet-1d | rotating-subspaces | absorption
    kind: String,
    /// Fine dimension.
    #[arg(long)]
    d: Option<usize>,
    /// Number of members.
    #[arg(long)]
    n: Option<usize>,
    /// Largest subdomain index for dirichlet-1d (members k = 2, 4, …, k_max).
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    theta0: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    probes: usize,
    /// Skip approximation defects and the Céa columns.
    #[arg(long)]
    fast: bool,
}

struct Ctx<'a> {
    json: bool,
    seed: Option<u64>,
    quiet: bool,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn note(&mut self, msg: &str) {
        if !self.quiet {
            let _ = writeln!(self.err, "{msg}");
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn cli_main<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    let mut ctx = Ctx {
        json: cli.json,
        seed: cli.seed,
        quiet: cli.quiet,
        out,
        err,
    };
    match dispatch(cli.command, &mut ctx) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(ctx.err, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cmd: Command, ctx: &mut Ctx) -> Result<i32> {
    match cmd {
        Command::Check { form, sector } => check(&form, sector, ctx),
        Command::Complete { form, sector } => complete(&form, sector, ctx),
        Command::Resolvent { form, lambda, sector } => resolvent(&form, lambda, sector, ctx),
        Command::Cea { run } => cea(&run, ctx),
        Command::Converge { run, fast } => {
            let (problem, lambda, seed) = load_run(&run, ctx)?;
            converge(&problem, lambda, seed, run.probes, fast, run.out.as_deref(), ctx)
        }
        Command::Semigroup { run, t_max, t_points } => semigroup_cmd(&run, t_max, t_points, ctx),
        Command::Demo(args) => demo(args, ctx),
    }
}

fn load_form(path: &Path, args: SectorArgs) -> Result<(FormInH, Sector)> {
    let v = io::read_json(path)?;
    let form = io::form_from_value(&v)?;
    let stored = io::sector_from_value(&v)?;
    let theta = args.theta.or(stored.map(|s| s.theta)).unwrap_or(0.0);
    let gamma = args.gamma.or(stored.map(|s| s.gamma)).unwrap_or(0.0);
    Ok((form, Sector::new(theta, gamma)?))
}

fn check(path: &Path, args: SectorArgs, ctx: &mut Ctx) -> Result<i32> {
    let (form, sector) = load_form(path, args)?;
    let rep = forms::sector_verify(&form, sector);
    let witness = rep.witness.as_ref().map(|w| {
        let jw = linalg::vnorm(&linalg::matvec(form.j.as_ref(), w));
        let q = form.quadratic(w) - linalg::cr(sector.gamma * jw * jw);
        (io::flatten(&linalg::as_column_matrix(w)), [q.re, q.im], forms::sector_violation(q, sector.theta))
    });
    if ctx.json {
        let v = json!({
            "passes": rep.passes,
            "margin": rep.margin,
            "theta": sector.theta,
            "gamma": sector.gamma,
            "witness": witness.as_ref().map(|w| &w.0),
            "witness_value": witness.as_ref().map(|w| w.1),
            "violation": witness.as_ref().map(|w| w.2),
        });
        writeln!(ctx.out, "{v}")?;
    } else {
        writeln!(ctx.out, "passes: {}", rep.passes)?;
        writeln!(ctx.out, "margin: {}", io::format_float(rep.margin))?;
        if let Some((w, q, viol)) = &witness {
            let parts: Vec<String> = w
                .iter()
                .map(|[re, im]| format!("({}, {})", io::format_float(*re), io::format_float(*im)))
                .collect();
            writeln!(ctx.out, "witness: [{}]", parts.join(", "))?;
            writeln!(ctx.out, "a(witness) - gamma|j(witness)|^2 = ({}, {})", io::format_float(q[0]), io::format_float(q[1]))?;
            writeln!(ctx.out, "violation: {}", io::format_float(*viol))?;
        }
    }
    if rep.passes {
        Ok(EXIT_OK)
    } else {
        ctx.note(&format!(
            "hypothesis violation: form is not quasi-sectorial for theta = {}, gamma = {}",
            sector.theta, sector.gamma
        ));
        Ok(EXIT_HYPOTHESIS)
    }
}

fn complete(path: &Path, args: SectorArgs, ctx: &mut Ctx) -> Result<i32> {
    let (form, sector) = load_form(path, args)?;
    let c = completion::complete(&form, sector)?;
    if ctx.json {
        writeln!(ctx.out, "{}", serde_json::to_string(&CompletedFormJson::from(&c))?)?;
    } else {
        writeln!(ctx.out, "m: {}", c.m())?;
        writeln!(ctx.out, "r: {}", c.r())?;
        writeln!(ctx.out, "d: {}", c.d())?;
        writeln!(ctx.out, "residual_form: {}", io::format_float(c.residual_form))?;
        writeln!(ctx.out, "residual_j: {}", io::format_float(c.residual_j))?;
        writeln!(ctx.out, "atilde:")?;
        write_matrix(&c.atilde, ctx)?;
        writeln!(ctx.out, "jtilde:")?;
        write_matrix(&c.jtilde, ctx)?;
    }
    Ok(EXIT_OK)
}

fn resolvent(path: &Path, lambda: f64, args: SectorArgs, ctx: &mut Ctx) -> Result<i32> {
    let (form, sector) = load_form(path, args)?;
    let r = relation::resolvent(&form, sector, lambda)?;
    if ctx.json {
        writeln!(ctx.out, "{}", io::matrix_json(&r))?;
    } else {
        write_matrix(&r, ctx)?;
    }
    Ok(EXIT_OK)
}

fn write_matrix(m: &CMatrix, ctx: &mut Ctx) -> Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| {
                let z = m[(i, j)];
                if z.im == 0.0 {
                    format!("{}", z.re)
                } else {
                    format!("{}{:+}i", z.re, z.im)
                }
            })
            .collect();
        writeln!(ctx.out, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Either an experiment spec (has `kind`) or an explicit form sequence.
fn load_run(run: &RunArgs, ctx: &Ctx) -> Result<(FormSequenceProblem, f64, u64)> {
    let v = io::read_json(&run.spec)?;
    let is_spec = v.get("kind").is_some();
    if is_spec {
        let spec = io::experiment_spec_from_value(&v)?;
        let lambda = run.lambda.unwrap_or(spec.lambda);
        let seed = ctx.seed.unwrap_or(spec.seed);
        Ok((spec.build()?, lambda, seed))
    } else {
        let problem = io::problem_from_value(&v)?;
        let lambda = run.lambda.or(v.get("lambda").and_then(Value::as_f64)).unwrap_or(1.0);
        Ok((problem, lambda, ctx.seed.unwrap_or(0)))
    }
}

fn unif_est_violations(problem: &FormSequenceProblem) -> Result<Vec<(usize, f64)>> {
    let mut bad = Vec::new();
    for n in 1..=problem.len() {
        let rep = convergence::check_unif_est(problem, n)?;
        if !rep.passes {
            bad.push((n, rep.margin));
        }
    }
    Ok(bad)
}

fn report_violations(bad: &[(usize, f64)], ctx: &mut Ctx) {
    let list: Vec<String> = bad.iter().map(|(n, m)| format!("n={n} (margin {m:e})")).collect();
    ctx.note(&format!(
        "hypothesis violation: a_n - a is not in the sector for {}; no convergence claim is made",
        list.join(", ")
    ));
}

fn with_output<F>(path: Option<&Path>, ctx: &mut Ctx, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match path {
        Some(p) => {
            let mut file = std::io::BufWriter::new(std::fs::File::create(p)?);
            f(&mut file)?;
            file.flush()?;
            Ok(())
        }
        None => f(ctx.out),
    }
}

fn converge(
    problem: &FormSequenceProblem,
    lambda: f64,
    seed: u64,
    probes: usize,
    fast: bool,
    out: Option<&Path>,
    ctx: &mut Ctx,
) -> Result<i32> {
    let bad = unif_est_violations(problem)?;
    let opts = RunOptions {
        lambda,
        probes: experiments::probes(problem.base.d(), probes, seed),
        defects: !fast,
        cea: !fast,
    };
    let report = convergence::run(problem, &opts)?;
    let json = ctx.json;
    with_output(out, ctx, |w| {
        if json {
            writeln!(w, "{}", io::convergence_json(&report))?;
            Ok(())
        } else {
            io::write_convergence_csv(&report, w)
        }
    })?;
    if bad.is_empty() {
        Ok(EXIT_OK)
    } else {
        report_violations(&bad, ctx);
        Ok(EXIT_HYPOTHESIS)
    }
}

fn cea(run: &RunArgs, ctx: &mut Ctx) -> Result<i32> {
    let (problem, lambda, seed) = load_run(run, ctx)?;
    let bad = unif_est_violations(&problem)?;
    let x = experiments::probes(problem.base.d(), 1, seed).remove(0);
    let base = relation::shifted_problem(&problem.base, problem.sector, lambda)?;
    let eta = linalg::matvec(linalg::adjoint(base.completed.jtilde.as_ref()).as_ref(), &x);
    let mut rows = Vec::with_capacity(problem.len());
    for n in 1..=problem.len() {
        let b = convergence::cea_transfer_bound(&problem, n, lambda, &eta)?;
        rows.push((n, b));
    }
    let json = ctx.json;
    with_output(run.out.as_deref(), ctx, |w| {
        if json {
            let v: Vec<Value> = rows
                .iter()
                .map(|(n, b)| json!({"n": n, "cea_lhs": b.lhs, "cea_rhs": b.rhs, "scale": b.scale}))
                .collect();
            writeln!(w, "{}", Value::Array(v))?;
        } else {
            let mut cw = csv::Writer::from_writer(w);
            cw.write_record(["n", "cea_lhs", "cea_rhs", "scale"])?;
            for (n, b) in &rows {
                cw.write_record([
                    n.to_string(),
                    io::format_float(b.lhs),
                    io::format_float(b.rhs),
                    io::format_float(b.scale),
                ])?;
            }
            cw.flush()?;
        }
        Ok(())
    })?;
    if bad.is_empty() {
        Ok(EXIT_OK)
    } else {
        report_violations(&bad, ctx);
        Ok(EXIT_HYPOTHESIS)
    }
}

fn semigroup_cmd(run: &RunArgs, t_max: f64, t_points: usize, ctx: &mut Ctx) -> Result<i32> {
    if !(t_max.is_finite() && t_max >= 0.0) {
        return Err(Error::Range(format!("t-max must be finite and >= 0, got {t_max}")));
    }
    let (problem, _, seed) = load_run(run, ctx)?;
    let bad = unif_est_violations(&problem)?;
    let probes = experiments::probes(problem.base.d(), run.probes, seed);
    let grid = semigroup::chebyshev_grid(t_max, t_points);
    let conv = semigroup::semigroup_convergence(&problem, &probes, &grid)?;
    let json = ctx.json;
    with_output(run.out.as_deref(), ctx, |w| {
        if json {
            writeln!(w, "{}", serde_json::to_string(&conv.rows)?)?;
            Ok(())
        } else {
            io::write_semigroup_csv(&conv, w)
        }
    })?;
    if bad.is_empty() {
        Ok(EXIT_OK)
    } else {
        report_violations(&bad, ctx);
        Ok(EXIT_HYPOTHESIS)
    }
}

/// Defaults for `demo`; `--k-max` sets the member count of `dirichlet-1d`.
fn demo_spec(args: &DemoArgs, seed: u64) -> Result<ExperimentSpec> {
    let kind: ExperimentKind = args.kind.parse()?;
    let (d, n) = match kind {
        ExperimentKind::Galerkin1d => (args.d.unwrap_or(63), args.n.unwrap_or(5)),
        ExperimentKind::Dirichlet1d => {
            let n = match (args.k_max, args.n) {
                (Some(k), _) => {
                    if k < 2 || k % 2 != 0 {
                        return Err(Error::Schema {
                            field: "k-max".into(),
                            reason: format!("must be an even integer >= 2, got {k}"),
                        });
                    }
                    k / 2
                }
                (None, Some(n)) => n,
                (None, None) => 8,
            };
            (args.d.unwrap_or(127), n)
        }
        ExperimentKind::RotatingSubspaces => (args.d.unwrap_or(16), args.n.unwrap_or(8)),
        ExperimentKind::Absorption => (args.d.unwrap_or(15), args.n.unwrap_or(8)),
    };
    let theta = args.theta.unwrap_or(match kind {
        ExperimentKind::RotatingSubspaces | ExperimentKind::Absorption => 0.5,
        _ => 0.0,
    });
    let theta0 = match kind {
        ExperimentKind::Absorption => Some(args.theta0.unwrap_or(theta)),
        _ => args.theta0,
    };
    let spec = ExperimentSpec {
        kind,
        d,
        n,
        lambda: args.lambda.unwrap_or(1.0),
        theta,
        gamma: args.gamma.unwrap_or(0.0),
        theta0,
        seed,
    };
    spec.validate()?;
    Ok(spec)
}

fn demo(args: DemoArgs, ctx: &mut Ctx) -> Result<i32> {
    let seed = ctx.seed.unwrap_or(0);
    let spec = demo_spec(&args, seed)?;
    let problem = spec.build()?;
    converge(&problem, spec.lambda, seed, args.probes, args.fast, args.out.as_deref(), ctx)
}
