//! Subcommands.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use psmo_core::encode::{psma_check_detailed, EncodingChoice, Flavor, PsmaOptions, PsmaReport, PsmaVerdict};
use psmo_core::exact::{
    enumerate_values, evaluate_query, find_achieving, pareto_filter, DEFAULT_CAP,
};
use psmo_core::gen::{self, gen_subset_sum, random_mdp, RandomParams, SubsetSumInstance};
use psmo_core::mdp::{Mdp, Point, PureStationaryStrategy, Query};
use psmo_core::memory::{completed_pairs, evaluate_mealy, memory_product, pbma_check, MemoryKind, PbmaVerdict};
use psmo_core::milp::SolverOptions;
use psmo_core::pareto::{approximate_pareto, Epsilon, Halfspace, ParetoApprox, ParetoOptions};
use psmo_core::rational::{parse_rational, to_decimal, ExtRational, Q};

use crate::model::{load_model, parse_list, parse_point, ModelFile};
use crate::strategy::{mealy_json, stationary_json, Strategy, StrategyFile};
use crate::CliError;

pub const EXIT_YES: i32 = 0;
pub const EXIT_NO: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "psmo", version, about = "Multi-objective MDP achievability and Pareto approximation")]
pub struct Cli {
    /// Worker threads for the brute-force oracle.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide whether a point is achievable; exit 0 yes, 1 no, 2 error.
    Check(CheckArgs),
    /// Approximate the pure stationary Pareto front.
    Pareto(ParetoArgs),
    /// Brute-force verdict or exact Pareto set over all pure stationary strategies.
    Oracle(OracleArgs),
    /// Exact value vector of a strategy file.
    Evaluate(EvaluateArgs),
    /// Write a model file.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EncodingArg {
    Auto,
    Base,
    Flow,
}

impl From<EncodingArg> for EncodingChoice {
    fn from(e: EncodingArg) -> Self {
        match e {
            EncodingArg::Auto => EncodingChoice::Auto,
            EncodingArg::Base => EncodingChoice::Base,
            EncodingArg::Flow => EncodingChoice::Flow,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MemoryKindArg {
    Complete,
    Counter,
    Goal,
}

impl From<MemoryKindArg> for MemoryKind {
    fn from(k: MemoryKindArg) -> Self {
        match k {
            MemoryKindArg::Complete => MemoryKind::Complete,
            MemoryKindArg::Counter => MemoryKind::Counter,
            MemoryKindArg::Goal => MemoryKind::Goal,
        }
    }
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Wall-clock limit in seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Branch-and-bound node limit.
    #[arg(long)]
    pub node_limit: Option<u64>,
    #[arg(long, value_enum, default_value_t = EncodingArg::Auto)]
    pub encoding: EncodingArg,
}

impl SolverArgs {
    fn options(&self) -> Result<SolverOptions, CliError> {
        let mut opts = SolverOptions { node_limit: self.node_limit, ..SolverOptions::default() };
        if let Some(secs) = self.time_limit {
            if !(secs.is_finite() && secs >= 0.0) {
                return Err(CliError::Usage(format!("bad time limit {secs}")));
            }
            let deadline = Instant::now() + Duration::from_secs_f64(secs);
            opts.stop = Some(Arc::new(move || Instant::now() >= deadline));
        }
        Ok(opts)
    }
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Model file, or a built-in name (fig1, fig5a, fig5b).
    pub model: String,
    /// Query id.
    pub query: String,
    /// Comma-separated thresholds, e.g. 0.7,7/10.
    pub point: String,
    /// Memory size K; 1 means pure stationary.
    #[arg(long)]
    pub memory: Option<usize>,
    #[arg(long, value_enum)]
    pub memory_kind: Option<MemoryKindArg>,
    /// Write the LP model to this path.
    #[arg(long)]
    pub export_lp: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct ParetoArgs {
    pub model: String,
    pub query: String,
    /// Relative tolerance, or absolute values with --eps-absolute.
    #[arg(long, default_value = "0.01")]
    pub eps: String,
    /// Read --eps as absolute tolerances: one value for all objectives or one per objective.
    #[arg(long)]
    pub eps_absolute: bool,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Output stem: writes STEM.json, STEM.csv and STEM.dat.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    pub model: String,
    pub query: String,
    pub point: Option<String>,
    /// Largest number of strategies to enumerate.
    #[arg(long, default_value_t = DEFAULT_CAP)]
    pub cap: u128,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub model: String,
    /// Strategy JSON file.
    pub strategy: PathBuf,
    pub query: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenerateKind {
    Fig1,
    Fig5a,
    Fig5b,
    SubsetSum,
    Random,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub kind: GenerateKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Subset-sum weights, e.g. 3,5,7.
    #[arg(long)]
    pub weights: Option<String>,
    /// Subset-sum target.
    #[arg(long)]
    pub target: Option<u64>,
    #[arg(long, default_value_t = 5)]
    pub states: usize,
    #[arg(long, default_value_t = 2)]
    pub actions: usize,
    #[arg(long, default_value_t = 2)]
    pub objectives: usize,
    /// Write to this path instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit code, stdout text and an optional diagnostic for stderr.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: Option<String>,
}

impl Outcome {
    fn json(code: i32, v: Value) -> Self {
        Outcome { code, stdout: format!("{:#}\n", v), stderr: None }
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let result = match &cli.command {
        Command::Check(a) => check(a),
        Command::Pareto(a) => pareto(a),
        Command::Oracle(a) => oracle(a, cli.threads.max(1)),
        Command::Evaluate(a) => evaluate(a),
        Command::Generate(a) => generate(a),
    };
    result.unwrap_or_else(|e| {
        let mut o = Outcome::json(EXIT_ERROR, json!({ "status": "error", "error": e.to_string() }));
        o.stderr = Some(format!("psmo: {e}"));
        o
    })
}

fn ext(v: &ExtRational) -> Value {
    Value::String(v.to_string())
}

fn rat(v: &Q) -> Value {
    Value::String(v.to_string())
}

fn rats(v: &[Q]) -> Value {
    Value::Array(v.iter().map(rat).collect())
}

fn point_json(p: &Point) -> Value {
    Value::Array(p.0.iter().map(ext).collect())
}

fn approx_json(p: &Point) -> Value {
    Value::Array(p.0.iter().map(|v| v.finite().map_or(Value::Null, |x| json!(psmo_core::rational::to_f64(x)))).collect())
}

fn halfspace_json(h: &Halfspace) -> Value {
    json!({ "normal": rats(&h.normal), "offset": rat(&h.offset) })
}

fn flavor_json(f: Option<Flavor>) -> Value {
    match f {
        Some(Flavor::Base) => json!("base"),
        Some(Flavor::Flow) => json!("flow"),
        None => Value::Null,
    }
}

fn encoding_stats(r: &PsmaReport) -> Value {
    json!({
        "flavor": flavor_json(r.flavor),
        "variables": r.variables,
        "binaries": r.binaries,
        "constraints": r.constraints,
        "nodes": r.nodes,
    })
}

fn write_file(path: &std::path::Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn check(a: &CheckArgs) -> Result<Outcome, CliError> {
    let model = load_model(&a.model)?;
    let nq = model.query(&a.query)?;
    let m = &model.mdp;
    let q = &nq.query;
    let p = parse_point(&a.point, q.dim())?;
    let opts = PsmaOptions {
        encoding: a.solver.encoding.into(),
        solver: a.solver.options()?,
        export_lp: a.export_lp.is_some(),
    };
    let k = a.memory.unwrap_or(1);
    if k == 0 {
        return Err(CliError::Usage("--memory must be at least 1".into()));
    }
    let stationary = a.memory_kind.is_none() && k == 1;
    let (code, body, lp) = if stationary {
        let r = psma_check_detailed(m, q, &p, &opts)?;
        let (code, verdict, strategy, values) = match &r.verdict {
            PsmaVerdict::Achievable(s) => {
                (EXIT_YES, "achievable", Some(stationary_json(m, s)), Some(evaluate_query(m, s, q)?))
            }
            PsmaVerdict::NotAchievable => (EXIT_NO, "not_achievable", None, None),
            PsmaVerdict::VerificationFailed(s) => {
                (EXIT_ERROR, "verification_failed", Some(stationary_json(m, s)), Some(evaluate_query(m, s, q)?))
            }
        };
        let body = json!({
            "status": "ok",
            "verdict": verdict,
            "point": point_json(&p),
            "memory": Value::Null,
            "strategy": strategy,
            "values": values.as_ref().map(point_json),
            "encoding": encoding_stats(&r),
        });
        (code, body, r.lp)
    } else {
        let kind: MemoryKind = a.memory_kind.unwrap_or(MemoryKindArg::Complete).into();
        if p.0.iter().any(|x| !x.is_finite()) {
            return Err(CliError::Usage("bounded-memory checks need a finite point".into()));
        }
        let r = pbma_check(m, q, k, &p, kind, &opts)?;
        let completed = || -> Result<Vec<(usize, usize)>, CliError> {
            Ok(completed_pairs(m, &memory_product(m, q, k, kind)?))
        };
        let (code, verdict, strategy, values) = match &r.verdict {
            PbmaVerdict::Achievable(s) => {
                (EXIT_YES, "achievable", Some(mealy_json(m, s, &completed()?)), Some(evaluate_mealy(m, s, q)?))
            }
            PbmaVerdict::NotAchievable => (EXIT_NO, "not_achievable", None, None),
            PbmaVerdict::LowerBoundOnly => (EXIT_NO, "lower_bound_only", None, None),
            PbmaVerdict::VerificationFailed(s) => (
                EXIT_ERROR,
                "verification_failed",
                Some(mealy_json(m, s, &completed()?)),
                Some(evaluate_mealy(m, s, q)?),
            ),
        };
        let kind_name = match kind {
            MemoryKind::Complete => "complete",
            MemoryKind::Counter => "counter",
            MemoryKind::Goal => "goal",
        };
        let body = json!({
            "status": "ok",
            "verdict": verdict,
            "point": point_json(&p),
            "memory": { "kind": kind_name, "size": k, "product_states": r.product_states, "product_actions": r.product_actions },
            "strategy": strategy,
            "values": values.as_ref().map(point_json),
            "encoding": encoding_stats(&r.psma),
        });
        (code, body, r.psma.lp)
    };
    if let Some(path) = &a.export_lp {
        match lp {
            Some(text) => write_file(path, &text)?,
            None => return Err(CliError::Usage("preprocessing decided the query; no LP was built".into())),
        }
    }
    Ok(Outcome::json(code, body))
}

fn pareto_json(m: &Mdp, approx: &ParetoApprox) -> Value {
    let points: Vec<Value> = approx
        .found
        .iter()
        .map(|(p, s)| json!({ "values": point_json(p), "approx": approx_json(p), "strategy": stationary_json(m, s) }))
        .collect();
    let unachievable: Vec<Value> = approx
        .unachievable
        .iter()
        .map(|u| {
            json!({
                "region": u.region.iter().map(halfspace_json).collect::<Vec<_>>(),
                "above": u.above.as_ref().map(halfspace_json),
            })
        })
        .collect();
    let candidates: Vec<Value> = approx
        .candidates
        .iter()
        .map(|r| {
            json!({
                "lower": rats(&r.lower),
                "upper": rats(&r.upper),
                "cuts": r.cuts.iter().map(halfspace_json).collect::<Vec<_>>(),
                "vertices": r.vertices.as_ref().map(|vs| vs.iter().map(|v| rats(v)).collect::<Vec<_>>()),
            })
        })
        .collect();
    json!({
        "status": if approx.complete { "complete" } else { "incomplete" },
        "maximizing": approx.maximizing,
        "epsilon": rats(&approx.epsilon),
        "milp_calls": approx.milp_calls,
        "points": points,
        "unachievable": unachievable,
        "candidates": candidates,
    })
}

/// CSV with one column per objective.
pub fn points_csv(dim: usize, points: &[Point]) -> String {
    let mut out = (0..dim).map(|j| format!("objective_{j}")).collect::<Vec<_>>().join(",");
    out.push('\n');
    for p in points {
        out.push_str(&p.0.iter().map(decimal).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

fn decimal(v: &ExtRational) -> String {
    match v.finite() {
        Some(x) => to_decimal(x, 12),
        None => "inf".into(),
    }
}

/// Whitespace-separated points for gnuplot.
pub fn points_dat(dim: usize, points: &[Point]) -> String {
    let mut out = format!("# {}\n", (0..dim).map(|j| format!("objective_{j}")).collect::<Vec<_>>().join(" "));
    for p in points {
        out.push_str(&p.0.iter().map(decimal).collect::<Vec<_>>().join(" "));
        out.push('\n');
    }
    out
}

fn pareto(a: &ParetoArgs) -> Result<Outcome, CliError> {
    let model = load_model(&a.model)?;
    let q = &model.query(&a.query)?.query;
    let epsilon = if a.eps_absolute {
        let mut e = parse_list(&a.eps)?;
        if e.len() == 1 {
            e = vec![e[0].clone(); q.dim()];
        }
        Epsilon::Absolute(e)
    } else {
        Epsilon::Relative(parse_rational(&a.eps).map_err(|_| CliError::Usage(format!("bad epsilon {:?}", a.eps)))?)
    };
    let opts = ParetoOptions {
        epsilon,
        encoding: a.solver.encoding.into(),
        solver: a.solver.options()?,
        max_iterations: a.max_iterations,
    };
    let approx = approximate_pareto(&model.mdp, q, &opts)?;
    let body = pareto_json(&model.mdp, &approx);
    if let Some(stem) = &a.out {
        let points: Vec<Point> = approx.found.iter().map(|(p, _)| p.clone()).collect();
        write_file(&stem.with_extension("json"), &format!("{:#}\n", body))?;
        write_file(&stem.with_extension("csv"), &points_csv(q.dim(), &points))?;
        write_file(&stem.with_extension("dat"), &points_dat(q.dim(), &points))?;
    }
    let mut out = Outcome::json(EXIT_YES, body);
    if !approx.complete {
        out.stderr = Some("psmo: stopped early, the approximation is incomplete".into());
    }
    Ok(out)
}

fn chunks(count: u128, threads: usize) -> Vec<std::ops::Range<u128>> {
    let t = (threads as u128).min(count).max(1);
    (0..t).map(|i| count * i / t..count * (i + 1) / t).collect()
}

/// Brute-force witness with the lowest strategy index.
pub fn parallel_achieving(
    m: &Mdp,
    q: &Query,
    p: &Point,
    cap: u128,
    threads: usize,
) -> Result<Option<PureStationaryStrategy>, CliError> {
    let count = strategy_count(m, cap)?;
    let results: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> =
            chunks(count, threads).into_iter().map(|r| scope.spawn(move || find_achieving(m, q, p, r))).collect();
        handles.into_iter().map(|h| h.join().expect("oracle worker panicked")).collect()
    });
    for r in results {
        if let Some(s) = r? {
            return Ok(Some(s));
        }
    }
    Ok(None)
}

/// Exact pure stationary Pareto set, enumerated in parallel.
pub fn parallel_pareto(
    m: &Mdp,
    q: &Query,
    cap: u128,
    threads: usize,
) -> Result<Vec<(Point, PureStationaryStrategy)>, CliError> {
    let count = strategy_count(m, cap)?;
    let results: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = chunks(count, threads)
            .into_iter()
            .map(|r| scope.spawn(move || enumerate_values(m, q, r).map(|v| pareto_filter(q, v))))
            .collect();
        handles.into_iter().map(|h| h.join().expect("oracle worker panicked")).collect()
    });
    let mut all = Vec::new();
    for r in results {
        all.extend(r?);
    }
    Ok(pareto_filter(q, all))
}

fn strategy_count(m: &Mdp, cap: u128) -> Result<u128, CliError> {
    let count = m.num_strategies();
    if count > cap {
        return Err(psmo_core::exact::ExactError::TooManyStrategies { count, cap }.into());
    }
    Ok(count)
}

fn oracle(a: &OracleArgs, threads: usize) -> Result<Outcome, CliError> {
    let model = load_model(&a.model)?;
    let m = &model.mdp;
    let q = &model.query(&a.query)?.query;
    match &a.point {
        Some(text) => {
            let p = parse_point(text, q.dim())?;
            let w = parallel_achieving(m, q, &p, a.cap, threads)?;
            let code = if w.is_some() { EXIT_YES } else { EXIT_NO };
            let body = json!({
                "status": "ok",
                "verdict": if w.is_some() { "achievable" } else { "not_achievable" },
                "point": point_json(&p),
                "strategy": w.as_ref().map(|s| stationary_json(m, s)),
                "values": w.as_ref().map(|s| evaluate_query(m, s, q).map(|v| point_json(&v))).transpose()?,
            });
            Ok(Outcome::json(code, body))
        }
        None => {
            let front = parallel_pareto(m, q, a.cap, threads)?;
            let points: Vec<Value> = front
                .iter()
                .map(|(p, s)| json!({ "values": point_json(p), "approx": approx_json(p), "strategy": stationary_json(m, s) }))
                .collect();
            Ok(Outcome::json(EXIT_YES, json!({ "status": "ok", "strategies": m.num_strategies().to_string(), "points": points })))
        }
    }
}

fn evaluate(a: &EvaluateArgs) -> Result<Outcome, CliError> {
    let model = load_model(&a.model)?;
    let m = &model.mdp;
    let q = &model.query(&a.query)?.query;
    let text = std::fs::read_to_string(&a.strategy).map_err(|e| CliError::Io(format!("{}: {e}", a.strategy.display())))?;
    let file: StrategyFile = serde_json::from_str(&text)?;
    let values = match file.resolve(m)? {
        Strategy::Stationary(s) => evaluate_query(m, &s, q)?,
        Strategy::Mealy(s) => evaluate_mealy(m, &s, q)?,
    };
    Ok(Outcome::json(EXIT_YES, json!({ "status": "ok", "values": point_json(&values), "approx": approx_json(&values) })))
}

fn generate(a: &GenerateArgs) -> Result<Outcome, CliError> {
    let (m, q, points) = match a.kind {
        GenerateKind::Fig1 | GenerateKind::Fig5a | GenerateKind::Fig5b => {
            let name = match a.kind {
                GenerateKind::Fig1 => "fig1",
                GenerateKind::Fig5a => "fig5a",
                _ => "fig5b",
            };
            let (m, q) = gen::builtin(name)?;
            (m, q, Vec::new())
        }
        GenerateKind::SubsetSum => {
            let weights = a
                .weights
                .as_deref()
                .ok_or_else(|| CliError::Usage("subset-sum needs --weights".into()))?
                .split(',')
                .map(|w| w.trim().parse::<u64>().map_err(|_| CliError::Usage(format!("bad weight {w:?}"))))
                .collect::<Result<_, _>>()?;
            let target = a.target.ok_or_else(|| CliError::Usage("subset-sum needs --target".into()))?;
            let (m, q, p) = gen_subset_sum(&SubsetSumInstance { weights, target })?;
            (m, q, vec![p])
        }
        GenerateKind::Random => {
            if a.states == 0 || a.actions == 0 || a.objectives == 0 {
                return Err(CliError::Usage("random models need positive sizes".into()));
            }
            let params = RandomParams {
                num_states: a.states,
                max_actions: a.actions,
                num_objectives: a.objectives,
                ..RandomParams::default()
            };
            let (m, q) = random_mdp(a.seed, &params);
            (m, q, Vec::new())
        }
    };
    let file = ModelFile::from_model(&m, &[("q0".to_string(), q, points)]);
    let text = format!("{}\n", serde_json::to_string_pretty(&file)?);
    match &a.out {
        Some(path) => {
            write_file(path, &text)?;
            Ok(Outcome::json(EXIT_YES, json!({ "status": "ok", "path": path.display().to_string() })))
        }
        None => Ok(Outcome { code: EXIT_YES, stdout: text, stderr: None }),
    }
}
