//! Command-line front end: instance generation, pipeline execution,
//! verification, benchmarking, and certificate checking.
//!
//! Exit codes: 0 ok, 1 verification or certificate failure, 2 usage or
//! structural errors. Machine-readable output keeps rationals as "p/q";
//! human summaries add 6-digit decimals.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use coflow::combine::{
    builtin_certificate, certificate_from_json, combined, verify_certificate, AllocatorSpec,
    CombinedOutcome,
};
use coflow::deadlines::{round_deadlines, solve_lp_d, DeadlineProfile, RoundingMode};
use coflow::generate::{generate, GenSpec};
use coflow::model::{
    cost, instance_from_json, instance_to_json, schedule_from_json, schedule_to_json, validate,
    Instance, ModelError, Schedule,
};
use coflow::oracle;
use coflow::rational::{format_rational, rat_u64, to_f64, Rational};

#[derive(Parser)]
#[command(name = "coflow", about = "Coflow scheduling solver and benchmark harness", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a pseudo-random instance file
    Gen(GenArgs),
    /// Run the deadline + allocation pipeline on an instance
    Solve(SolveArgs),
    /// Validate a schedule against an instance and report its cost
    Verify(VerifyArgs),
    /// Run a portfolio over many instances and emit a CSV
    Bench(BenchArgs),
    /// Check an algorithm-combination certificate
    Certify(CertifyArgs),
    /// Exact optimum of a desk-scale instance
    Opt(OptArgs),
    /// Write the half-integral gadget instance and its deadlines
    #[command(name = "fixture-a1")]
    FixtureA1(FixtureArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    left: usize,
    #[arg(long, default_value_t = 3)]
    right: usize,
    #[arg(long, default_value_t = 3)]
    coflows: usize,
    #[arg(long, default_value_t = 2)]
    max_flows: usize,
    #[arg(long, default_value_t = 2)]
    max_mult: u64,
    #[arg(long, default_value_t = 0)]
    release_max: u64,
    /// Hard cap on total edge copies
    #[arg(long)]
    max_copies: Option<u64>,
    /// Output path (stdout when omitted)
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    /// greedy | greedy-r | cbf | cbf-r | ckbf | combined | combined-r
    #[arg(long)]
    algo: String,
    #[arg(long)]
    tau: Option<u64>,
    /// Prefix length for ckbf
    #[arg(long, default_value_t = 1)]
    b: u64,
    /// seed:N or candidates:N
    #[arg(long, default_value = "candidates:64")]
    deadline_mode: String,
    /// Schedule output path
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Write the deadline profile as JSON
    #[arg(long)]
    profile_out: Option<PathBuf>,
    /// Dump the deadline LP in plain-text equation form
    #[arg(long)]
    dump_lp: Option<PathBuf>,
    /// Write per-iteration rounding records as line-delimited JSON
    #[arg(long)]
    audit_log: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    instance: PathBuf,
    schedule: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Instance files
    files: Vec<PathBuf>,
    /// Additionally generate this many instances
    #[arg(long, default_value_t = 0)]
    gen_count: u64,
    #[arg(long, default_value_t = 0)]
    gen_seed: u64,
    #[arg(long, default_value_t = 3)]
    left: usize,
    #[arg(long, default_value_t = 3)]
    right: usize,
    #[arg(long, default_value_t = 3)]
    coflows: usize,
    #[arg(long, default_value_t = 2)]
    max_flows: usize,
    #[arg(long, default_value_t = 2)]
    max_mult: u64,
    #[arg(long, default_value_t = 0)]
    release_max: u64,
    #[arg(long, default_value_t = 8)]
    max_copies: u64,
    /// Comma-separated algorithms, e.g. greedy,cbf:6,combined:6
    #[arg(long, default_value = "greedy,cbf:6,combined:6")]
    algos: String,
    /// Compute the oracle optimum and the cost/opt ratio where feasible
    #[arg(long)]
    with_opt: bool,
    #[arg(long, default_value = "candidates:64")]
    deadline_mode: String,
    /// Worker threads (env COFLOW_JOBS overrides)
    #[arg(long, default_value_t = 4)]
    jobs: usize,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    /// Certificate file (JSON)
    file: Option<PathBuf>,
    /// main | release | intgap | improved
    #[arg(long)]
    builtin: Option<String>,
}

#[derive(Args)]
struct OptArgs {
    instance: PathBuf,
    /// Copy limit guard
    #[arg(long, default_value_t = oracle::DEFAULT_COPY_LIMIT)]
    limit: u64,
    /// Write the optimal schedule
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FixtureArgs {
    /// Instance output path (stdout when omitted)
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long)]
    profile_out: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Failed(String),
}

impl CliError {
    fn code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Failed(_) => ExitCode::from(1),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(s) | CliError::Failed(s) => s,
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Opt(a) => cmd_opt(a),
        Command::FixtureA1(a) => cmd_fixture(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn write_out(path: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, content).map_err(usage),
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn read_instance(path: &Path) -> Result<Instance, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    instance_from_json(&text).map_err(usage)
}

fn human(x: &Rational) -> String {
    format!("{} (~{:.6})", format_rational(x), to_f64(x))
}

fn cmd_gen(a: GenArgs) -> Result<(), CliError> {
    if a.left == 0 || a.right == 0 || a.coflows == 0 || a.max_flows == 0 || a.max_mult == 0 {
        return Err(CliError::Usage("sizes must be positive".into()));
    }
    let spec = GenSpec {
        seed: a.seed,
        left: a.left,
        right: a.right,
        coflows: a.coflows,
        max_flows: a.max_flows,
        max_mult: a.max_mult,
        release_max: a.release_max,
        max_total_copies: a.max_copies,
    };
    write_out(&a.out, &instance_to_json(&generate(&spec)))
}

fn parse_deadline_mode(s: &str) -> Result<RoundingMode, CliError> {
    let (kind, n) = s
        .split_once(':')
        .ok_or_else(|| usage("deadline mode must be seed:N or candidates:N"))?;
    let n: u64 = n.parse().map_err(|_| usage("deadline mode needs an integer parameter"))?;
    match kind {
        "seed" => Ok(RoundingMode::SeededRandom(n)),
        "candidates" => {
            if n == 0 {
                return Err(usage("candidate count must be positive"));
            }
            Ok(RoundingMode::CandidateMin(n as usize))
        }
        _ => Err(usage("deadline mode must be seed:N or candidates:N")),
    }
}

struct AlgoRun {
    schedule: Schedule,
    lambda: Option<u64>,
    members: Vec<(String, Rational)>,
}

/// name[:tau[:b]]
fn parse_algo(s: &str) -> Result<(String, Option<u64>, Option<u64>), CliError> {
    let mut parts = s.split(':');
    let name = parts.next().unwrap_or_default().to_string();
    let tau = parts
        .next()
        .map(|t| t.parse::<u64>().map_err(|_| usage(format!("bad tau in {s:?}"))))
        .transpose()?;
    let b = parts
        .next()
        .map(|t| t.parse::<u64>().map_err(|_| usage(format!("bad b in {s:?}"))))
        .transpose()?;
    Ok((name, tau, b))
}

fn run_algo(
    instance: &Instance,
    profile: &DeadlineProfile,
    name: &str,
    tau: Option<u64>,
    b: u64,
) -> Result<(AlgoRun, Option<u64>), CliError> {
    use coflow::{cbf, greedy};
    let structural = |e: &dyn std::fmt::Display| CliError::Usage(e.to_string());
    let run = match name {
        "greedy" => {
            let out = greedy::greedy(instance, profile).map_err(|e| structural(&e))?;
            (AlgoRun { schedule: out.schedule, lambda: None, members: vec![] }, None)
        }
        "greedy-r" => {
            let out = greedy::greedy_r(instance, profile).map_err(|e| structural(&e))?;
            (AlgoRun { schedule: out.schedule, lambda: None, members: vec![] }, None)
        }
        "cbf" => {
            let tau = tau.unwrap_or(6);
            let out = cbf::cbf(instance, profile, tau).map_err(|e| structural(&e))?;
            (
                AlgoRun { schedule: out.schedule, lambda: Some(out.lambda), members: vec![] },
                Some(tau),
            )
        }
        "cbf-r" => {
            let tau = tau.unwrap_or(4);
            let out = cbf::cbf_r(instance, profile, tau).map_err(|e| structural(&e))?;
            (
                AlgoRun { schedule: out.schedule, lambda: Some(out.lambda), members: vec![] },
                Some(tau),
            )
        }
        "ckbf" => {
            let tau = tau.unwrap_or(6);
            let out = cbf::ckbf(instance, profile, tau, b).map_err(|e| structural(&e))?;
            (
                AlgoRun { schedule: out.schedule, lambda: Some(out.lambda), members: vec![] },
                Some(tau),
            )
        }
        "combined" | "combined-r" => {
            let (portfolio, tau) = if name == "combined" {
                let tau = tau.unwrap_or(6);
                (vec![AllocatorSpec::Greedy, AllocatorSpec::Cbf { tau }], tau)
            } else {
                let tau = tau.unwrap_or(4);
                (vec![AllocatorSpec::GreedyR, AllocatorSpec::CbfR { tau }], tau)
            };
            let out: CombinedOutcome =
                combined(instance, profile, &portfolio).map_err(|e| structural(&e))?;
            let members =
                out.members.iter().map(|m| (m.name.clone(), m.cost.clone())).collect();
            let lambda = out.members[out.winner].lambda;
            (AlgoRun { schedule: out.schedule, lambda, members }, Some(tau))
        }
        other => return Err(usage(format!("unknown algorithm {other:?}"))),
    };
    Ok(run)
}

fn compute_profile(instance: &Instance, mode: RoundingMode) -> Result<DeadlineProfile, CliError> {
    let frac = solve_lp_d(instance).map_err(|e| usage(&e))?;
    round_deadlines(instance, &frac, mode).map_err(|e| usage(&e))
}

fn cmd_solve(a: SolveArgs) -> Result<(), CliError> {
    let instance = read_instance(&a.instance)?;
    let mode = parse_deadline_mode(&a.deadline_mode)?;
    if let Some(path) = &a.dump_lp {
        let (lp, _) = coflow::deadlines::build_lp_d(&instance);
        fs::write(path, lp.dump_text()).map_err(usage)?;
    }
    let profile = compute_profile(&instance, mode)?;
    if let Some(path) = &a.profile_out {
        fs::write(path, profile.to_json()).map_err(usage)?;
    }

    let (name, tau_override, b_override) = parse_algo(&a.algo)?;
    let tau = a.tau.or(tau_override);
    let b = b_override.unwrap_or(a.b);
    let (run, tau_used) = run_algo(&instance, &profile, &name, tau, b)?;

    // the validator is the gate: a failing schedule is a hard error
    let violations = validate(&instance, &run.schedule).map_err(usage)?;
    if !violations.is_empty() {
        eprintln!("schedule failed validation:");
        for v in &violations {
            eprintln!("  {v}");
        }
        return Err(CliError::Failed("invalid schedule".into()));
    }
    let report = cost(&instance, &run.schedule).map_err(usage)?;

    if let Some(path) = &a.out {
        fs::write(path, schedule_to_json(&run.schedule)).map_err(usage)?;
    }
    if let Some(path) = &a.audit_log {
        let text = audit_jsonl(&instance, &profile, &name, tau_used)?;
        fs::write(path, text).map_err(usage)?;
    }

    println!("algo: {}", a.algo);
    if let Some(l) = run.lambda {
        println!("lambda: {l}");
    }
    for (member, c) in &run.members {
        println!("member {member}: cost {}", format_rational(c));
    }
    println!("cost: {}", format_rational(&report.total));
    println!("cost~: {:.6}", to_f64(&report.total));
    for (j, (done, d)) in report.completion.iter().zip(&profile.deadlines).enumerate() {
        let released = instance.coflows[j].release;
        let greedy_bound = rat_u64(2) * d - rat_u64(1) + rat_u64(released);
        println!(
            "coflow {j}: finish {done}, deadline {}, release {released}, greedy bound {}",
            human(d),
            format_rational(&greedy_bound),
        );
    }
    Ok(())
}

/// Per-iteration rounding records across the lambda trials, one JSON
/// object per line.
fn audit_jsonl(
    instance: &Instance,
    profile: &DeadlineProfile,
    name: &str,
    tau: Option<u64>,
) -> Result<String, CliError> {
    use coflow::cbf;
    let tau = tau.unwrap_or(6);
    let audits = match name {
        "cbf" | "combined" | "ckbf" => cbf::cbf(instance, profile, tau)
            .map(|o| o.trials.iter().map(|t| t.lambda).collect::<Vec<_>>().into_iter().zip(o.audits).collect::<Vec<_>>()),
        "cbf-r" | "combined-r" => cbf::cbf_r(instance, profile, tau)
            .map(|o| o.trials.iter().map(|t| t.lambda).collect::<Vec<_>>().into_iter().zip(o.audits).collect::<Vec<_>>()),
        _ => return Ok(String::new()),
    }
    .map_err(|e| usage(&e))?;
    let mut out = String::new();
    for (lambda, audit) in audits {
        for it in &audit.iterations {
            let mut v = serde_json::to_value(it).map_err(usage)?;
            v.as_object_mut()
                .expect("iteration audit serializes to an object")
                .insert("lambda".into(), serde_json::json!(lambda));
            out.push_str(&v.to_string());
            out.push('\n');
        }
    }
    Ok(out)
}

fn cmd_verify(a: VerifyArgs) -> Result<(), CliError> {
    let instance = read_instance(&a.instance)?;
    let text = fs::read_to_string(&a.schedule)
        .map_err(|e| usage(format!("cannot read {}: {e}", a.schedule.display())))?;
    let schedule = schedule_from_json(&text).map_err(usage)?;
    match validate(&instance, &schedule) {
        Ok(violations) if violations.is_empty() => {
            let report = cost(&instance, &schedule).map_err(usage)?;
            println!("valid");
            println!("cost: {}", format_rational(&report.total));
            Ok(())
        }
        Ok(violations) => {
            for v in &violations {
                println!("violation: {v}");
            }
            Err(CliError::Failed(format!("{} violations", violations.len())))
        }
        Err(ModelError::Structural(s)) => Err(CliError::Usage(s)),
        Err(e) => Err(usage(e)),
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cmd_bench(a: BenchArgs) -> Result<(), CliError> {
    let mode = parse_deadline_mode(&a.deadline_mode)?;
    let algo_specs: Vec<String> = a
        .algos
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if algo_specs.is_empty() {
        return Err(CliError::Usage("no algorithms given".into()));
    }

    let mut instances: Vec<(String, Option<u64>, Instance)> = Vec::new();
    for f in &a.files {
        let id = f
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| f.display().to_string());
        instances.push((id, None, read_instance(f)?));
    }
    for i in 0..a.gen_count {
        let seed = a.gen_seed + i;
        let spec = GenSpec {
            seed,
            left: a.left,
            right: a.right,
            coflows: a.coflows,
            max_flows: a.max_flows,
            max_mult: a.max_mult,
            release_max: a.release_max,
            max_total_copies: Some(a.max_copies),
        };
        instances.push((format!("gen-{seed}"), Some(seed), generate(&spec)));
    }

    let jobs = std::env::var("COFLOW_JOBS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(a.jobs)
        .max(1);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(usage)?;

    let rows: Vec<Result<Vec<String>, String>> = pool.install(|| {
        instances
            .par_iter()
            .map(|(id, seed, instance)| {
                let mut rows = Vec::new();
                let profile = compute_profile(instance, mode)
                    .map_err(|e| format!("{id}: {}", e.message()))?;
                let opt = if a.with_opt {
                    oracle::opt(instance, None).ok().map(|o| o.report.total)
                } else {
                    None
                };
                for spec in &algo_specs {
                    let (name, tau, b) =
                        parse_algo(spec).map_err(|e| format!("{id}: {}", e.message()))?;
                    let started = Instant::now();
                    let (run, tau_used) = run_algo(instance, &profile, &name, tau, b.unwrap_or(1))
                        .map_err(|e| format!("{id}/{spec}: {}", e.message()))?;
                    let ms = started.elapsed().as_millis();
                    let report =
                        cost(instance, &run.schedule).map_err(|e| format!("{id}/{spec}: {e}"))?;
                    let (opt_s, ratio_s) = match &opt {
                        Some(o) => {
                            (format_rational(o), format_rational(&(&report.total / o)))
                        }
                        None => (String::new(), String::new()),
                    };
                    rows.push(
                        [
                            csv_escape(id),
                            seed.map(|s| s.to_string()).unwrap_or_default(),
                            csv_escape(spec),
                            tau_used.map(|t| t.to_string()).unwrap_or_default(),
                            run.lambda.map(|l| l.to_string()).unwrap_or_default(),
                            if name == "ckbf" { b.unwrap_or(1).to_string() } else { String::new() },
                            format_rational(&report.total),
                            opt_s,
                            ratio_s,
                            ms.to_string(),
                        ]
                        .join(","),
                    );
                }
                Ok(rows)
            })
            .collect()
    });

    let mut all_rows = Vec::new();
    for r in rows {
        all_rows.extend(r.map_err(CliError::Usage)?);
    }
    all_rows.sort();
    let mut out = String::from("instance,seed,algo,tau,lambda,b,cost,opt,ratio,ms\n");
    for r in &all_rows {
        out.push_str(r);
        out.push('\n');
    }
    write_out(&a.out, out.trim_end())
}

fn cmd_certify(a: CertifyArgs) -> Result<(), CliError> {
    let cert = match (&a.builtin, &a.file) {
        (Some(name), None) => builtin_certificate(name)
            .ok_or_else(|| usage(format!("unknown builtin certificate {name:?}")))?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
            certificate_from_json(&text).map_err(usage)?
        }
        _ => return Err(CliError::Usage("pass a certificate file or --builtin NAME".into())),
    };
    let verdict = verify_certificate(&cert).map_err(usage)?;
    match &cert.target {
        coflow::combine::CertificateTarget::Plain { alpha } => {
            println!("alpha = {}", format_rational(alpha));
        }
        coflow::combine::CertificateTarget::Release { a, b } => {
            println!("a = {}, b = {}", format_rational(a), format_rational(b));
        }
    }
    println!(
        "ratio = {} (~{:.6})",
        format_rational(&verdict.final_ratio),
        to_f64(&verdict.final_ratio)
    );
    if verdict.ok {
        if verdict.tight_everywhere {
            println!("verified; tight for all x");
        } else if verdict.tight_points.is_empty() {
            println!("verified; no tight points");
        } else {
            let pts: Vec<String> = verdict.tight_points.iter().map(format_rational).collect();
            println!("verified; tight at x = {}", pts.join(", "));
        }
        Ok(())
    } else {
        let (x, r) = verdict.witness.expect("failure carries a witness");
        match r {
            Some(r) => {
                println!("violated at x = {}, r = {}", format_rational(&x), format_rational(&r))
            }
            None => println!("violated at x = {}", format_rational(&x)),
        }
        Err(CliError::Failed("certificate violated".into()))
    }
}

fn cmd_opt(a: OptArgs) -> Result<(), CliError> {
    let instance = read_instance(&a.instance)?;
    let result = oracle::opt_with_limit(&instance, None, a.limit).map_err(usage)?;
    println!("opt: {}", format_rational(&result.report.total));
    println!("opt~: {:.6}", to_f64(&result.report.total));
    for (j, t) in result.report.completion.iter().enumerate() {
        println!("coflow {j}: finish {t}");
    }
    if let Some(path) = &a.out {
        fs::write(path, schedule_to_json(&result.schedule)).map_err(usage)?;
    }
    Ok(())
}

fn cmd_fixture(a: FixtureArgs) -> Result<(), CliError> {
    let (instance, profile) = oracle::a1_fixture();
    if let Some(path) = &a.profile_out {
        fs::write(path, profile.to_json()).map_err(usage)?;
    }
    write_out(&a.out, &instance_to_json(&instance))
}
