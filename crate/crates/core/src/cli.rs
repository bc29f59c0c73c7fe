//! The `dexchange` command line. Results go to stdout as JSON, a one-line
//! summary goes to stderr, and the exit code says what went wrong.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::gf::{Elem, FieldSpec, GfError};
use crate::model::{
    example1, generate_instance, CutSetOracle, GenerateSpec, InstanceKind, ModelError,
    ProblemInstance,
};
use crate::netcode::{
    construct_code, decode, random_packets, randomized_alloc, verify_decodable, NetcodeError,
    RandomizedAllocation, RngSpec, DEFAULT_MAX_RETRIES,
};
use crate::ratealloc::{eval_h, min_cost, AllocError, Backend, CapacityVector, CostFunction};
use crate::validate::{property_suite, rlnc_suite, worked_examples, Bounds, Outcome};

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "DEXCHANGE_THREADS";

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Exit {
    Ok = 0,
    Usage = 1,
    Infeasible = 2,
    Construction = 3,
    Decode = 4,
    Property = 5,
}

impl From<Exit> for ExitCode {
    fn from(e: Exit) -> Self {
        ExitCode::from(e as u8)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "dexchange",
    version,
    about = "Rate allocation and linear network codes for cooperative data exchange"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a random or preset instance.
    Gen(GenArgs),
    /// Find an optimal rate vector, at a fixed budget or over all budgets.
    Solve(SolveArgs),
    /// Build a decodable code for a rate vector.
    Code(CodeArgs),
    /// Check which users can decode a schedule.
    Verify(VerifyArgs),
    /// Decode the packets at one user.
    Decode(DecodeArgs),
    /// Run the property, worked-example or random-coding suites.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Three users and six packets; users hold {w1,w2}, {w2,w4,w5,w6}, {w3,w4,w5,w6}.
    Example1,
}

#[derive(Debug, Args)]
pub struct InstanceSource {
    /// Instance file.
    #[arg(required_unless_present = "preset")]
    pub instance: Option<PathBuf>,
    /// Use a built-in instance instead of a file.
    #[arg(long, conflicts_with = "instance")]
    pub preset: Option<Preset>,
    /// Field order for presets.
    #[arg(long, default_value_t = FieldSpec::DEFAULT_ORDER)]
    pub q: u32,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum, default_value = "coded")]
    pub kind: KindArg,
    #[arg(long)]
    pub preset: Option<Preset>,
    /// Number of users.
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    /// Number of packets.
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    #[arg(long, default_value_t = FieldSpec::DEFAULT_ORDER)]
    pub q: u32,
    /// Rows held by each user, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub rows: Option<Vec<usize>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the instance here and report on stdout; otherwise the instance
    /// itself goes to stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Raw,
    Coded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CostKind {
    Linear,
    Fair,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Sfm,
    Subgradient,
    Randomized,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub source: InstanceSource,
    #[arg(long, value_enum, default_value = "linear")]
    pub cost: CostKind,
    /// Per-user weights for the linear cost; all ones by default.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    /// JSON file of per-user derivative tables for the table cost.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Fixed sum-rate; omit to optimize over all budgets.
    #[arg(long)]
    pub beta: Option<i64>,
    /// Per-user transmission caps, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub caps: Option<Vec<i64>>,
    #[arg(long, value_enum, default_value = "sfm")]
    pub backend: BackendArg,
    /// Generator seed for the randomized backend.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Where the randomized backend writes its schedule.
    #[arg(long)]
    pub schedule_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CodeArgs {
    #[command(flatten)]
    pub source: InstanceSource,
    /// Rate vector, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub rates: Vec<i64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_RETRIES)]
    pub max_retries: usize,
    /// Schedule file to write.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub source: InstanceSource,
    /// Schedule file.
    #[arg(long = "schedule", short = 's', required = true)]
    pub schedule: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[command(flatten)]
    pub source: InstanceSource,
    #[arg(long = "schedule", short = 's', required = true)]
    pub schedule: PathBuf,
    /// One-based user who decodes.
    #[arg(long)]
    pub user: usize,
    /// Packet vector to transmit (JSON array); defaults to the truth file or
    /// a random vector.
    #[arg(long)]
    pub packets: Option<PathBuf>,
    /// Expected packet vector (JSON array) to compare against.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Seed for the random packet vector.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Properties,
    #[value(name = "paper-examples")]
    WorkedExamples,
    Rlnc,
    All,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, value_enum, default_value = "properties")]
    pub suite: Suite,
    #[arg(long, default_value_t = 4)]
    pub max_m: usize,
    #[arg(long, default_value_t = 6)]
    pub max_n: usize,
    /// Random instances for the property suite, coding trials for the
    /// random-coding suite.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Field order for the random-coding suite.
    #[arg(long, default_value_t = 19)]
    pub q: u32,
    /// Where counterexamples are written when a property fails.
    #[arg(long, default_value = "counterexamples.json")]
    pub artifact: PathBuf,
}

/// Machine-readable result of one command.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub elapsed_ms: f64,
    pub result: Value,
}

/// A failed command: exit code plus message.
#[derive(Debug)]
pub struct Failure {
    pub exit: Exit,
    pub message: String,
    /// Partial result reported alongside the error.
    pub result: Option<Value>,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            exit: Exit::Usage,
            message: message.into(),
            result: None,
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        let exit = match e {
            ModelError::InfeasibleInstance(_) => Exit::Infeasible,
            _ => Exit::Usage,
        };
        Self {
            exit,
            message: e.to_string(),
            result: None,
        }
    }
}

impl From<AllocError> for Failure {
    fn from(e: AllocError) -> Self {
        match e {
            AllocError::Infeasible { beta, achieved } => Self {
                exit: Exit::Infeasible,
                message: e.to_string(),
                result: Some(json!({ "feasible": false, "beta": beta, "achieved": achieved })),
            },
            _ => Self::usage(e.to_string()),
        }
    }
}

impl From<NetcodeError> for Failure {
    fn from(e: NetcodeError) -> Self {
        match e {
            NetcodeError::Alloc(a) => a.into(),
            NetcodeError::InfeasibleRates(ref r) => Self {
                exit: Exit::Infeasible,
                result: Some(json!({ "feasible": false, "rates": r })),
                message: e.to_string(),
            },
            NetcodeError::ConstructionFailed { attempts } => Self {
                exit: Exit::Construction,
                message: e.to_string(),
                result: Some(json!({ "constructed": false, "attempts": attempts })),
            },
            NetcodeError::NotDecodable {
                user,
                rank,
                packets,
            } => Self {
                exit: Exit::Decode,
                message: e.to_string(),
                result: Some(
                    json!({ "decoded": false, "user": user + 1, "rank": rank, "packets": packets }),
                ),
            },
            other => Self::usage(other.to_string()),
        }
    }
}

impl From<GfError> for Failure {
    fn from(e: GfError) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self::usage(e.to_string())
    }
}

/// What a successful command produced, before timing is attached.
struct Done {
    instance: Option<String>,
    seed: Option<u64>,
    result: Value,
    summary: String,
    /// Printed verbatim instead of a report (instance JSON from `gen`).
    raw: Option<String>,
    exit: Exit,
}

impl Done {
    fn new(result: Value, summary: String) -> Self {
        Self {
            instance: None,
            seed: None,
            result,
            summary,
            raw: None,
            exit: Exit::Ok,
        }
    }
}

/// Entry point for the binary.
pub fn main() -> ExitCode {
    run(std::env::args_os()).into()
}

/// Parses `args` (program name first), runs the command and prints its
/// output.
pub fn run<I, T>(args: I) -> Exit
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                Exit::Usage
            } else {
                Exit::Ok
            };
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return Exit::Usage;
    }
    let command: Vec<String> = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let start = Instant::now();
    let outcome = dispatch(cli.command);
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok(done) => {
            if let Some(raw) = done.raw {
                println!("{raw}");
            } else {
                let report = RunReport {
                    command,
                    instance: done.instance,
                    seed: done.seed,
                    elapsed_ms,
                    result: done.result,
                };
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).expect("report serializes")
                );
            }
            eprintln!("{}", done.summary);
            done.exit
        }
        Err(f) => {
            if let Some(result) = f.result {
                let report = RunReport {
                    command,
                    instance: None,
                    seed: None,
                    elapsed_ms,
                    result: json!({ "error": f.message, "detail": result }),
                };
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report).expect("report serializes")
                );
            }
            eprintln!("error: {}", f.message);
            f.exit
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {value:?}"))?;
    // a second call in one process (tests) finds the pool already built
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

fn dispatch(command: Command) -> Result<Done, Failure> {
    match command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Code(a) => cmd_code(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Validate(a) => cmd_validate(a),
    }
}

fn load_instance(src: &InstanceSource) -> Result<ProblemInstance, Failure> {
    match (&src.instance, src.preset) {
        (_, Some(Preset::Example1)) => Ok(example1(FieldSpec::new(src.q)?)),
        (Some(path), None) => Ok(ProblemInstance::load(path)?),
        (None, None) => Err(Failure::usage("an instance file or --preset is required")),
    }
}

fn one_based(rates: &[i64]) -> Value {
    json!(rates)
}

fn cmd_gen(a: GenArgs) -> Result<Done, Failure> {
    let instance = match a.preset {
        Some(Preset::Example1) => example1(FieldSpec::new(a.q)?),
        None => {
            if a.m == 0 || a.n == 0 {
                return Err(Failure::usage("--m and --n must be positive"));
            }
            let coverage = match a.rows {
                Some(rows) if rows.len() != a.m => {
                    return Err(Failure::usage(format!(
                        "--rows lists {} users, --m is {}",
                        rows.len(),
                        a.m
                    )))
                }
                Some(rows) => rows,
                None => vec![(2 * a.n).div_ceil(a.m).min(a.n); a.m],
            };
            generate_instance(&GenerateSpec {
                kind: match a.kind {
                    KindArg::Raw => InstanceKind::Raw,
                    KindArg::Coded => InstanceKind::Coded,
                },
                packets: a.n,
                field: FieldSpec::new(a.q)?,
                coverage,
                seed: a.seed,
            })?
        }
    };
    let digest = instance.digest();
    let summary = format!(
        "instance: {} users, {} packets over {}, digest {}",
        instance.users(),
        instance.packets(),
        instance.field(),
        &digest[..12]
    );
    let mut done = Done::new(
        json!({ "users": instance.users(), "packets": instance.packets(), "q": instance.field().order() }),
        summary,
    );
    done.instance = Some(digest);
    done.seed = a.preset.is_none().then_some(a.seed);
    match a.out {
        Some(path) => {
            instance.save(&path)?;
            done.result["path"] = json!(path);
        }
        None => done.raw = Some(instance.to_json()),
    }
    Ok(done)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn cmd_solve(a: SolveArgs) -> Result<Done, Failure> {
    let instance = load_instance(&a.source)?;
    let m = instance.users();
    let cost = match a.cost {
        CostKind::Linear => CostFunction::Linear(a.weights.clone().unwrap_or_else(|| vec![1.0; m])),
        CostKind::Fair => CostFunction::Fair,
        CostKind::Table => {
            let path = a
                .table
                .as_ref()
                .ok_or_else(|| Failure::usage("--cost table needs --table FILE"))?;
            CostFunction::Table(read_json(path)?)
        }
    };
    cost.validate(m)?;
    let caps = match &a.caps {
        Some(c) => CapacityVector::new(c.clone())?,
        None => CapacityVector::unbounded(),
    };
    caps.validate(m)?;
    let digest = instance.digest();
    let oracle = CutSetOracle::new(instance);

    let (beta, value, rates, extra) = match a.backend {
        BackendArg::Sfm | BackendArg::Subgradient => {
            let backend = if a.backend == BackendArg::Sfm {
                Backend::Sfm
            } else {
                Backend::Subgradient(None)
            };
            match a.beta {
                Some(beta) => {
                    let (value, rates) = eval_h(&oracle, beta, &cost, &caps, backend)?;
                    (beta, value, rates, json!({}))
                }
                None => {
                    let opt = min_cost(&oracle, &cost, &caps, backend)?;
                    (opt.beta, opt.value, opt.rates, json!({}))
                }
            }
        }
        BackendArg::Randomized => {
            let alloc = solve_randomized(&oracle, a.beta, &cost, &caps, a.seed)?;
            let decodable = verify_decodable(oracle.instance(), &alloc.schedule);
            let mut extra = json!({ "rounds": alloc.rounds, "decodable": decodable });
            if let Some(path) = &a.schedule_out {
                alloc.schedule.save(path)?;
                extra["schedule"] = json!(path);
            }
            let beta = alloc.rates.sum();
            (beta, cost.total(&alloc.rates), alloc.rates, extra)
        }
    };
    let mut result = json!({
        "feasible": true,
        "beta": beta,
        "value": value,
        "rates": one_based(&rates),
        "cost": cost,
        "backend": format!("{:?}", a.backend).to_lowercase(),
    });
    if let (Value::Object(r), Value::Object(e)) = (&mut result, extra) {
        r.extend(e.into_iter().filter(|(_, v)| !v.is_null()));
    }
    let summary = format!("β = {beta}, rates {:?}, cost {value}", &*rates);
    let mut done = Done::new(result, summary);
    done.instance = Some(digest);
    done.seed = (a.backend == BackendArg::Randomized).then_some(a.seed);
    Ok(done)
}

/// Random coding at a fixed budget, or at the cheapest budget. Without a
/// budget, the least budget is the smallest one whose run lets every user
/// decode; costs are then searched as for the polyhedral solvers.
fn solve_randomized(
    oracle: &CutSetOracle,
    beta: Option<i64>,
    cost: &CostFunction,
    caps: &CapacityVector,
    seed: u64,
) -> Result<RandomizedAllocation, Failure> {
    let rng = RngSpec::new(seed);
    if let Some(beta) = beta {
        return Ok(randomized_alloc(oracle, beta, cost, caps, rng)?);
    }
    let hi = (oracle.packets() as i64).min(caps.total());
    let decodes = |beta: i64| {
        randomized_alloc(oracle, beta, cost, caps, rng)
            .ok()
            .filter(|a| verify_decodable(oracle.instance(), &a.schedule).all)
    };
    let lo = (0..=hi)
        .find(|&b| decodes(b).is_some())
        .ok_or(AllocError::Infeasible {
            beta: hi,
            achieved: 0,
        })?;
    let opt = crate::ratealloc::search_convex(lo, hi, |b| {
        decodes(b)
            .map(|a| (cost.total(&a.rates), a.rates))
            .ok_or(AllocError::Infeasible {
                beta: b,
                achieved: 0,
            })
    })?;
    Ok(randomized_alloc(oracle, opt.beta, cost, caps, rng)?)
}

fn cmd_code(a: CodeArgs) -> Result<Done, Failure> {
    let instance = load_instance(&a.source)?;
    let rng = RngSpec::new(a.seed).with_stream(a.stream);
    let code = construct_code(&instance, &a.rates, rng, a.max_retries)?;
    let mut result = json!({
        "constructed": true,
        "attempts": code.attempts,
        "rates": code.schedule.rates(instance.users()),
        "rng": rng,
    });
    match &a.out {
        Some(path) => {
            code.schedule.save(path)?;
            result["schedule"] = json!(path);
        }
        None => result["schedule"] = serde_json::to_value(&code.schedule)?,
    }
    let summary = format!(
        "code for rates {:?} found after {} attempt(s)",
        a.rates, code.attempts
    );
    let mut done = Done::new(result, summary);
    done.instance = Some(instance.digest());
    done.seed = Some(a.seed);
    Ok(done)
}

fn load_schedule(
    instance: &ProblemInstance,
    path: &Path,
) -> Result<crate::netcode::TransmissionSchedule, Failure> {
    let schedule = crate::netcode::TransmissionSchedule::load(path)?;
    schedule.check_against(instance)?;
    Ok(schedule)
}

fn cmd_verify(a: VerifyArgs) -> Result<Done, Failure> {
    let instance = load_instance(&a.source)?;
    let schedule = load_schedule(&instance, &a.schedule)?;
    let d = verify_decodable(&instance, &schedule);
    let users: Vec<Value> = d
        .per_user
        .iter()
        .zip(&d.ranks)
        .enumerate()
        .map(|(i, (&ok, &rank))| json!({ "user": i + 1, "rank": rank, "decodable": ok }))
        .collect();
    let summary = format!(
        "{} of {} users can decode",
        d.per_user.iter().filter(|&&x| x).count(),
        d.per_user.len()
    );
    let mut done = Done::new(json!({ "all": d.all, "users": users }), summary);
    done.instance = Some(instance.digest());
    done.exit = if d.all { Exit::Ok } else { Exit::Decode };
    Ok(done)
}

fn read_packets(path: &Path, field: FieldSpec, packets: usize) -> Result<Vec<Elem>, Failure> {
    let raw: Vec<u64> = read_json(path)?;
    if raw.len() != packets || raw.iter().any(|&x| !field.is_canonical(x)) {
        return Err(Failure::usage(format!(
            "{}: expected {packets} packets below {field}",
            path.display()
        )));
    }
    Ok(raw.into_iter().map(|x| x as Elem).collect())
}

fn cmd_decode(a: DecodeArgs) -> Result<Done, Failure> {
    let instance = load_instance(&a.source)?;
    let schedule = load_schedule(&instance, &a.schedule)?;
    let (field, n) = (instance.field(), instance.packets());
    if a.user == 0 || a.user > instance.users() {
        return Err(Failure::usage(format!(
            "--user must be between 1 and {}",
            instance.users()
        )));
    }
    let user = a.user - 1;
    let truth = a
        .truth
        .as_deref()
        .map(|p| read_packets(p, field, n))
        .transpose()?;
    let w = match (&a.packets, &truth) {
        (Some(p), _) => read_packets(p, field, n)?,
        (None, Some(t)) => t.clone(),
        (None, None) => random_packets(field, n, RngSpec::new(a.seed)),
    };
    let x = instance.observe(user, &w)?;
    let v = schedule.transmit(&w)?;
    let decoded = decode(&instance, user, &schedule, &x, &v)?;
    let matches = truth.as_ref().map(|t| *t == decoded);
    let mut result = json!({ "decoded": true, "user": a.user, "packets": decoded });
    if let Some(ok) = matches {
        result["matches_truth"] = json!(ok);
    }
    let summary = match matches {
        Some(true) => format!(
            "user {} recovered all {n} packets, matching the truth",
            a.user
        ),
        Some(false) => format!(
            "user {} decoded, but the packets differ from the truth",
            a.user
        ),
        None => format!("user {} recovered all {n} packets", a.user),
    };
    let mut done = Done::new(result, summary);
    done.instance = Some(instance.digest());
    done.seed = (a.packets.is_none() && truth.is_none()).then_some(a.seed);
    if matches == Some(false) {
        done.exit = Exit::Decode;
    }
    Ok(done)
}

fn cmd_validate(a: ValidateArgs) -> Result<Done, Failure> {
    let mut outcomes: Vec<Outcome> = Vec::new();
    let wants = |s: Suite| a.suite == s || a.suite == Suite::All;
    if wants(Suite::WorkedExamples) {
        outcomes.extend(worked_examples());
    }
    if wants(Suite::Properties) {
        outcomes.extend(property_suite(&Bounds {
            max_m: a.max_m,
            max_n: a.max_n,
            cases: a.trials.unwrap_or(50),
            seed: a.seed,
        }));
    }
    if wants(Suite::Rlnc) {
        outcomes.push(rlnc_suite(a.q, a.trials.unwrap_or(1000), a.seed)?);
    }
    let failed: Vec<&Outcome> = outcomes.iter().filter(|o| !o.passed).collect();
    for o in &outcomes {
        eprintln!(
            "{} {} ({} checked)",
            if o.passed { "pass" } else { "FAIL" },
            o.property,
            o.checked
        );
    }
    let mut result = json!({ "passed": failed.is_empty(), "properties": outcomes });
    let exit = if failed.is_empty() {
        Exit::Ok
    } else {
        std::fs::write(&a.artifact, serde_json::to_string_pretty(&failed)?)?;
        result["artifact"] = json!(a.artifact);
        Exit::Property
    };
    let summary = format!(
        "{} of {} properties hold",
        outcomes.len() - failed.len(),
        outcomes.len()
    );
    let mut done = Done::new(result, summary);
    done.seed = Some(a.seed);
    done.exit = exit;
    Ok(done)
}
