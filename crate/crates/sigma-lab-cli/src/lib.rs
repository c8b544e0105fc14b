//! Command-line surface over the sigma-lab library.
//!
//! Exit codes are the machine contract: 0 when every expected claim holds,
//! 1 when a claim or check fails (or an independence query answers "no"),
//! 2 on usage or document errors.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use sigma_lab::detect::{run_detect, ConvergenceReport, DetectOptions, Mode};
use sigma_lab::fuzzing::{run_fuzz, CheckName, FuzzConfig};
use sigma_lab::gallery;
use sigma_lab::opnorm::Exponent;
use sigma_lab::report::digest;
use sigma_lab::scenario::scenario_from_json;
use sigma_lab::{Error, Partition};

#[derive(Parser)]
#[command(name = "sigma-lab", version, about = "exact convergence laboratory for σ-subfields on finite spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hausdorff-type distances between two σ-subfields
    Metric(MetricArgs),
    /// Operator norm of the difference of two conditional expectations
    Opnorm(OpnormArgs),
    /// Per-stage convergence statistics for a scenario
    Detect(DetectArgs),
    /// Conditional-independence certificate for a partition family
    Indep(IndepArgs),
    /// Built-in worked examples with exact expected claims
    Gallery(GalleryArgs),
    /// Seeded randomized checking of the quantitative inequalities
    Fuzz(FuzzArgs),
}

#[derive(Args)]
struct MetricArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// allow the greedy lower-bound search over the atom budget
    #[arg(long)]
    approx: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OpnormArgs {
    #[arg(long)]
    space: PathBuf,
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// exponent p in [1, inf], e.g. 2, 3/2, inf
    #[arg(long)]
    p: String,
    /// exponent q with q <= p
    #[arg(long)]
    q: String,
    #[arg(long)]
    approx: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// comma-separated subset of WC,SC,HC,ONC,STC,ASC,MC,OC
    #[arg(long, default_value = "WC,SC,HC,ONC,STC,ASC,MC,OC")]
    modes: String,
    #[arg(long, default_value = "2")]
    p: String,
    #[arg(long, default_value = "2")]
    q: String,
    #[arg(long, default_value_t = 12)]
    horizon: usize,
    #[arg(long)]
    approx: bool,
    /// full-event weak supremum instead of the generator-family statistic
    #[arg(long)]
    exhaustive: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct IndepArgs {
    #[arg(long)]
    space: PathBuf,
    /// comma-separated partition documents
    #[arg(long)]
    family: String,
    #[arg(long)]
    given: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GalleryArgs {
    #[command(subcommand)]
    action: GalleryAction,
}

#[derive(Subcommand)]
enum GalleryAction {
    /// list the built-in scenarios
    List,
    /// run one scenario: statistics, verdicts, and its exact expected claims
    Run(GalleryRunArgs),
}

#[derive(Args)]
struct GalleryRunArgs {
    name: String,
    #[arg(long, default_value = "2")]
    p: String,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    approx: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct FuzzArgs {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    trials: u32,
    /// comma-separated check names; defaults to every check
    #[arg(long)]
    checks: Option<String>,
    #[arg(long, default_value_t = 6)]
    max_outcomes: usize,
    #[arg(long, default_value_t = 3)]
    max_atoms: usize,
    #[arg(long)]
    report: Option<PathBuf>,
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // clap handles --help/--version with success exit
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(cli: Cli) -> sigma_lab::Result<i32> {
    match cli.command {
        Command::Metric(args) => cmd_metric(args),
        Command::Opnorm(args) => cmd_opnorm(args),
        Command::Detect(args) => cmd_detect(args),
        Command::Indep(args) => cmd_indep(args),
        Command::Gallery(args) => match args.action {
            GalleryAction::List => cmd_gallery_list(),
            GalleryAction::Run(run) => cmd_gallery_run(run),
        },
        Command::Fuzz(args) => cmd_fuzz(args),
    }
}

fn read(path: &Path) -> sigma_lab::Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn load_space(path: &Path) -> sigma_lab::Result<(std::sync::Arc<sigma_lab::FiniteSpace>, String)> {
    let bytes = read(path)?;
    Ok((sigma_lab::space::space_from_json(&bytes)?, digest(&bytes)))
}

fn load_partition(
    path: &Path,
    space: &std::sync::Arc<sigma_lab::FiniteSpace>,
) -> sigma_lab::Result<(Partition, String)> {
    let bytes = read(path)?;
    Ok((
        sigma_lab::partition::partition_from_json(&bytes, space)?,
        digest(&bytes),
    ))
}

fn emit(out: &Option<PathBuf>, value: &serde_json::Value) -> sigma_lab::Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serialization");
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn wrap_report(command: &str, inputs: Vec<(String, String)>, payload: serde_json::Value) -> serde_json::Value {
    serde_json::json!({
        "command": command,
        "inputs": inputs.into_iter().map(|(p, d)| serde_json::json!({"path": p, "digest": d})).collect::<Vec<_>>(),
        "report": payload,
    })
}

fn cmd_metric(args: MetricArgs) -> sigma_lab::Result<i32> {
    let (space, ds) = load_space(&args.space)?;
    let (a, da) = load_partition(&args.a, &space)?;
    let (b, db) = load_partition(&args.b, &space)?;
    let report = sigma_lab::hausdorff(&a, &b, args.approx)?;
    let payload = serde_json::to_value(&report).expect("metric report");
    emit(
        &args.out,
        &wrap_report(
            "metric",
            vec![
                (args.space.display().to_string(), ds),
                (args.a.display().to_string(), da),
                (args.b.display().to_string(), db),
            ],
            payload,
        ),
    )?;
    Ok(0)
}

fn cmd_opnorm(args: OpnormArgs) -> sigma_lab::Result<i32> {
    let p: Exponent = args.p.parse()?;
    let q: Exponent = args.q.parse()?;
    let (space, ds) = load_space(&args.space)?;
    let (a, da) = load_partition(&args.a, &space)?;
    let (b, db) = load_partition(&args.b, &space)?;
    let result = sigma_lab::op_norm(&space, &a, &b, &p, &q, args.approx)?;
    let mut payload = serde_json::to_value(&result).expect("opnorm report");
    payload["witness"] = serde_json::to_value(
        sigma_lab::conditioning::RandomVariableDoc::from_rv(&result.witness),
    )
    .expect("witness doc");
    emit(
        &args.out,
        &wrap_report(
            "opnorm",
            vec![
                (args.space.display().to_string(), ds),
                (args.a.display().to_string(), da),
                (args.b.display().to_string(), db),
            ],
            payload,
        ),
    )?;
    Ok(0)
}

fn parse_modes(s: &str) -> sigma_lab::Result<Vec<Mode>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse())
        .collect()
}

/// `n,mode,statistic,exact` rows; statistics carry 30 significant digits.
pub fn emit_series(report: &ConvergenceReport) -> String {
    let mut out = String::from("n,mode,statistic,exact\n");
    for series in &report.series {
        for point in &series.stats {
            out.push_str(&format!(
                "{},{},{},{}\n",
                point.n, series.mode, point.decimal, point.is_exact
            ));
        }
    }
    out
}

fn write_csv(path: &Option<PathBuf>, report: &ConvergenceReport) -> sigma_lab::Result<()> {
    if let Some(p) = path {
        fs::write(p, emit_series(report)).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn cmd_detect(args: DetectArgs) -> sigma_lab::Result<i32> {
    let bytes = read(&args.scenario)?;
    let scenario = scenario_from_json(&bytes)?;
    let opts = DetectOptions {
        modes: parse_modes(&args.modes)?,
        p: args.p.parse()?,
        q: args.q.parse()?,
        approx: args.approx,
        exhaustive_weak: args.exhaustive,
        ..DetectOptions::default()
    };
    if !opts.q.le(&opts.p) {
        return Err(Error::ExponentOrder {
            p: opts.p.to_string(),
            q: opts.q.to_string(),
        });
    }
    let report = run_detect(scenario.as_ref(), args.horizon, &opts)?;
    write_csv(&args.csv, &report)?;
    let payload = serde_json::to_value(&report).expect("detect report");
    emit(
        &args.out,
        &wrap_report(
            "detect",
            vec![(args.scenario.display().to_string(), digest(&bytes))],
            payload,
        ),
    )?;
    Ok(0)
}

fn cmd_indep(args: IndepArgs) -> sigma_lab::Result<i32> {
    let (space, ds) = load_space(&args.space)?;
    let mut inputs = vec![(args.space.display().to_string(), ds)];
    let mut family = Vec::new();
    for part in args.family.split(',') {
        let path = PathBuf::from(part.trim());
        let (p, d) = load_partition(&path, &space)?;
        inputs.push((path.display().to_string(), d));
        family.push(p);
    }
    let (given, dg) = load_partition(&args.given, &space)?;
    inputs.push((args.given.display().to_string(), dg));
    let cert = sigma_lab::is_cond_independent(&space, &family, &given)?;
    let holds = cert.holds;
    emit(
        &args.out,
        &wrap_report(
            "indep",
            inputs,
            serde_json::to_value(&cert).expect("certificate"),
        ),
    )?;
    Ok(if holds { 0 } else { 1 })
}

fn cmd_gallery_list() -> sigma_lab::Result<i32> {
    for entry in gallery::entries() {
        println!(
            "{:24} default horizon {:2}  {}",
            entry.name, entry.default_horizon, entry.description
        );
    }
    Ok(0)
}

fn cmd_gallery_run(args: GalleryRunArgs) -> sigma_lab::Result<i32> {
    let p: Exponent = args.p.parse()?;
    let entry = gallery::entries()
        .into_iter()
        .find(|e| e.name == args.name)
        .ok_or_else(|| Error::Parse(format!("unknown gallery entry `{}`", args.name)))?;
    let horizon = args.horizon.unwrap_or(entry.default_horizon);
    let scenario = gallery::by_name(&args.name, &serde_json::Value::Null)?;
    let opts = DetectOptions {
        p: p.clone(),
        q: p.clone(),
        approx: args.approx,
        ..DetectOptions::default()
    };
    let report = run_detect(scenario.as_ref(), horizon, &opts)?;
    write_csv(&args.csv, &report)?;
    let claims = gallery::run_claims(&args.name, &p, horizon)?;
    let all_hold = claims.iter().all(|c| c.passed);
    for claim in &claims {
        println!(
            "{} {}: {}",
            if claim.passed { "PASS" } else { "FAIL" },
            claim.id,
            claim.description
        );
    }
    let payload = serde_json::json!({
        "claims": claims,
        "convergence": report,
    });
    emit(&args.out, &wrap_report("gallery run", vec![], payload))?;
    Ok(if all_hold { 0 } else { 1 })
}

fn cmd_fuzz(args: FuzzArgs) -> sigma_lab::Result<i32> {
    let checks = match &args.checks {
        Some(s) => s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| t.trim().parse())
            .collect::<sigma_lab::Result<Vec<CheckName>>>()?,
        None => CheckName::all(),
    };
    let cfg = FuzzConfig {
        seed: args.seed,
        trials: args.trials,
        min_outcomes: 2,
        max_outcomes: args.max_outcomes,
        max_atoms: args.max_atoms,
        checks,
    };
    let report = run_fuzz(&cfg)?;
    let ok = report.all_passed();
    for r in &report.results {
        println!(
            "{} {}: {} passed, {} discarded",
            if r.failure.is_none() { "PASS" } else { "FAIL" },
            r.check,
            r.passed,
            r.discarded
        );
    }
    if let Some(path) = &args.report {
        fs::write(path, serde_json::to_string_pretty(&report).expect("fuzz report"))
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    }
    Ok(if ok { 0 } else { 1 })
}
