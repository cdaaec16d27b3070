//! `efx`: solve, check and generate EFX allocation instances.
//!
//! Exit codes: 0 success, 1 unreadable or invalid input, 2 the instance's
//! skeleton has a triangle, 3 a requested check failed.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use efx_core::bench::{self, Suite};
use efx_core::config::{CheckLevel, SolveConfig, TraceRecord};
use efx_core::cuts::CutOptions;
use efx_core::gen::{self, GenSpec, Topology};
use efx_core::io as efx_io;
use efx_core::oracle;
use efx_core::verify::{self, EnvyGraph};
use efx_core::{EfxError, SolverState, StopAfter};

#[derive(Parser)]
#[command(
    name = "efx",
    version,
    about = "EFX allocations on triangle-free multi-graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and print the allocation JSON.
    Solve(SolveArgs),
    /// Check an allocation against an instance.
    Verify(VerifyArgs),
    /// Print the envy graph of an allocation as DOT.
    EnvyGraph(PairArgs),
    /// Run a benchmark suite and print CSV.
    Bench(BenchArgs),
    /// Generate an instance.
    Gen(GenArgs),
    /// Enumerate all complete EFX allocations of a tiny instance.
    Oracle(OracleArgs),
}

#[derive(Copy, Clone, ValueEnum)]
enum Checks {
    Final,
    Boundaries,
    Every,
}

impl From<Checks> for CheckLevel {
    fn from(c: Checks) -> Self {
        match c {
            Checks::Final => CheckLevel::Final,
            Checks::Boundaries => CheckLevel::Boundaries,
            Checks::Every => CheckLevel::Every,
        }
    }
}

#[derive(Args)]
struct SolverFlags {
    /// Amount of self-checking during the run.
    #[arg(long, value_enum, default_value = "boundaries")]
    checks: Checks,
    /// Value bound that sets the local-search move cap of each cut.
    #[arg(long)]
    v_max: Option<u64>,
    /// Explicit local-search move cap per cut.
    #[arg(long)]
    move_cap: Option<u64>,
}

impl SolverFlags {
    fn config(&self) -> SolveConfig {
        SolveConfig {
            checks: self.checks.into(),
            v_max: self.v_max,
            cut_move_cap: self.move_cap,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    instance: PathBuf,
    /// Write the allocation here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write per-step events as JSON lines.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write every fixed cut configuration as JSON.
    #[arg(long)]
    dump_config: Option<PathBuf>,
    /// Write run metrics as JSON.
    #[arg(long)]
    metrics_out: Option<PathBuf>,
    /// Stop after this phase; phases 1 and 2 give partial orientations.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(1..=3))]
    stop_after: u8,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct VerifyArgs {
    instance: PathBuf,
    allocation: PathBuf,
    /// Phase properties to check, e.g. `1..7` or `1,2,5`. Needs `sigma` in the allocation.
    #[arg(long)]
    properties: Option<String>,
    /// Fail unless every good is allocated.
    #[arg(long)]
    require_complete: bool,
}

#[derive(Args)]
struct PairArgs {
    instance: PathBuf,
    allocation: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    suite: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 12)]
    m: usize,
    /// bipartite, c4_girth, tree, star, path or cycle_even.
    #[arg(long, default_value = "bipartite")]
    topology: Topology,
    /// additive, transformed_additive or monotone_table.
    #[arg(long, default_value = "additive")]
    class: String,
    #[arg(long, default_value_t = 50)]
    v_max: u64,
    #[arg(long, default_value_t = 4)]
    max_parallel: usize,
    #[arg(long)]
    max_degree: Option<usize>,
    /// Goods valued by one agent only, hung off an extra zero-valued agent.
    #[arg(long, default_value_t = 0)]
    pendant_goods: usize,
    /// Generate an instance that contains a triangle instead.
    #[arg(long)]
    with_triangle: bool,
    /// Emit a named handcrafted instance instead; `list` prints the names.
    #[arg(long)]
    adversarial: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    instance: PathBuf,
    /// Stop after this many allocations.
    #[arg(long)]
    limit: Option<usize>,
    /// Refuse to search more than this many assignments.
    #[arg(long, default_value_t = oracle::DEFAULT_GUARD)]
    guard: u128,
    /// Also report whether this allocation is among the enumerated ones.
    #[arg(long)]
    check: Option<PathBuf>,
}

/// A command failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<EfxError> for Failure {
    fn from(e: EfxError) -> Self {
        let code = match e {
            EfxError::NotTriangleFree(_) => 2,
            EfxError::Internal { .. } | EfxError::Precondition(_) => 3,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_fail(path: &Path, e: io::Error) -> Failure {
    Failure {
        code: 1,
        message: format!("{}: {e}", path.display()),
    }
}

type CmdResult = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| io_fail(path, e))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_fail(p, e)),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| io_fail(Path::new("<stdout>"), e))
        }
    }
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn cmd_solve(args: &SolveArgs) -> CmdResult {
    let instance = efx_io::parse_instance(&read(&args.instance)?)?;
    let config = args.solver.config();
    let stop = match args.stop_after {
        1 => StopAfter::Phase1,
        2 => StopAfter::Phase2,
        _ => StopAfter::Phase3,
    };
    let mut lines: Vec<TraceRecord> = Vec::new();
    let result = efx_core::solve_with(&instance, &config, stop, &mut lines);
    if let Some(path) = &args.trace {
        let file = fs::File::create(path).map_err(|e| io_fail(path, e))?;
        let mut w = BufWriter::new(file);
        for rec in &lines {
            serde_json::to_writer(&mut w, rec).map_err(EfxError::from)?;
            w.write_all(b"\n").map_err(|e| io_fail(path, e))?;
        }
        w.flush().map_err(|e| io_fail(path, e))?;
    }
    let result = result?;
    if let Some(path) = &args.dump_config {
        let mut text = efx_io::configurations_to_json(&result.configurations);
        text.push('\n');
        write_out(Some(path), &text)?;
    }
    if let Some(path) = &args.metrics_out {
        write_out(Some(path), &pretty(&result.metrics))?;
    }
    let mut text = efx_io::allocation_to_json(&result.allocation, Some(&result.sigma));
    text.push('\n');
    write_out(args.output.as_deref(), &text)?;
    Ok(0)
}

fn cmd_verify(args: &VerifyArgs) -> CmdResult {
    let instance = efx_io::parse_instance(&read(&args.instance)?)?;
    let (allocation, sigma) = efx_io::parse_allocation(&read(&args.allocation)?, &instance)?;
    let efx = verify::check_efx(&instance, &allocation);
    let complete = allocation.is_complete();
    let mut passed = efx.passed && (complete || !args.require_complete);
    let mut report = json!({
        "efx": efx,
        "complete": complete,
        "orientation": verify::check_orientation(&instance, &allocation),
    });
    if let Some(list) = &args.properties {
        let which = verify::parse_property_list(list).ok_or_else(|| Failure {
            code: 1,
            message: format!("bad property list {list:?}"),
        })?;
        let sigma = sigma.ok_or_else(|| Failure {
            code: 1,
            message: "property checks need a \"sigma\" field in the allocation".into(),
        })?;
        let state =
            SolverState::from_sequence(&instance, &sigma, allocation, CutOptions::default())?;
        let props = verify::check_properties(&state, &which);
        passed &= props.all_passed();
        report["properties"] = serde_json::to_value(&props).map_err(EfxError::from)?;
    }
    report["passed"] = json!(passed);
    write_out(None, &pretty(&report))?;
    Ok(if passed { 0 } else { 3 })
}

fn cmd_envy_graph(args: &PairArgs) -> CmdResult {
    let instance = efx_io::parse_instance(&read(&args.instance)?)?;
    let (allocation, _) = efx_io::parse_allocation(&read(&args.allocation)?, &instance)?;
    let graph = EnvyGraph::compute(&instance, &allocation);
    write_out(args.output.as_deref(), &efx_io::envy_graph_dot(&graph))?;
    Ok(0)
}

fn cmd_bench(args: &BenchArgs) -> CmdResult {
    let base = args.suite.parent().unwrap_or(Path::new("."));
    let suite = Suite::parse(&read(&args.suite)?, base)?;
    let rows = bench::run_suite(&suite, &args.solver.config());
    let mut buf = Vec::new();
    bench::write_csv(&rows, &mut buf)?;
    write_out(args.output.as_deref(), &String::from_utf8_lossy(&buf))?;
    let failed = rows
        .iter()
        .any(|r| !r.error.is_empty() || !r.complete || !r.efx);
    Ok(if failed { 3 } else { 0 })
}

fn cmd_gen(args: &GenArgs) -> CmdResult {
    let instance = if let Some(name) = &args.adversarial {
        let suite = gen::gen_adversarial_suite();
        if name == "list" {
            let names: String = suite.iter().map(|s| format!("{}\n", s.name)).collect();
            write_out(args.output.as_deref(), &names)?;
            return Ok(0);
        }
        suite
            .into_iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Failure {
                code: 1,
                message: format!("no handcrafted instance named {name:?}"),
            })?
            .instance
    } else if args.with_triangle {
        gen::gen_triangle_instance(args.seed, args.n, args.m, args.v_max)?
    } else {
        let class = gen::parse_class(&args.class).ok_or_else(|| Failure {
            code: 1,
            message: format!("unknown valuation class {:?}", args.class),
        })?;
        gen::gen_instance(&GenSpec {
            seed: args.seed,
            n: args.n,
            m: args.m,
            topology: args.topology,
            valuation_class: class,
            v_max: args.v_max,
            max_parallel: args.max_parallel,
            max_degree: args.max_degree,
            pendant_goods: args.pendant_goods,
        })?
    };
    let mut text = efx_io::instance_to_json(&instance);
    text.push('\n');
    write_out(args.output.as_deref(), &text)?;
    Ok(0)
}

fn cmd_oracle(args: &OracleArgs) -> CmdResult {
    let instance = efx_io::parse_instance(&read(&args.instance)?)?;
    let limit = args.limit;
    let found = oracle::enumerate_efx_allocations(&instance, limit, args.guard)?;
    let mut report = json!({
        "count": found.len(),
        "truncated": limit.is_some_and(|l| found.len() >= l),
        "allocations": found
            .iter()
            .map(|a| efx_io::AllocationJson::new(a, None).bundles)
            .collect::<Vec<_>>(),
    });
    let mut code = 0;
    if let Some(path) = &args.check {
        let (allocation, _) = efx_io::parse_allocation(&read(path)?, &instance)?;
        let member = oracle::contains(&found, &allocation);
        report["member"] = json!(member);
        if !member {
            code = 3;
        }
    }
    write_out(None, &pretty(&report))?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Verify(a) => cmd_verify(a),
        Command::EnvyGraph(a) => cmd_envy_graph(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Gen(a) => cmd_gen(a),
        Command::Oracle(a) => cmd_oracle(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("efx: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
