use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use vlcm_core::{
    build_xc_instance, chunk_divide_binary, chunk_divide_csd, enumerate_pattern_sets, export_design_space,
    gen_random_benchmark, parse_nat, rows_to_csv, run_best_of, run_flow, AdderGraph, Backend, BigNat,
    DecomposeError, DecompositionMode, Encoding, FlowConfig, FlowError, FlowResult, InstanceError, McmError,
    NumError, PatternMcm, PatternSearchOptions, ProblemInstance, ReconstructionMode, ResultRow,
};

#[derive(Debug, Parser)]
#[command(name = "vlcm", version, about = "Shift-and-add synthesis for very large constant multiplication")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split the targets into patterns and print the decomposition.
    Decompose(DecomposeArgs),
    /// Build a merged adder graph for the targets.
    Solve(SolveArgs),
    /// Enumerate every pattern decomposition and solve each pattern set.
    Enumerate(EnumerateArgs),
    /// Check that a graph file computes the given targets.
    Verify(VerifyArgs),
    /// Run several flows over many instances and write a results table.
    Bench(BenchArgs),
    /// Write seeded random instance files.
    GenRandom(GenArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EncodingArg {
    Bin,
    Csd,
}

impl From<EncodingArg> for Encoding {
    fn from(e: EncodingArg) -> Self {
        match e {
            EncodingArg::Bin => Encoding::Binary,
            EncodingArg::Csd => Encoding::Csd,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Chunk,
    Sat,
    Enumerate,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReconArg {
    Naive,
    Sat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Dot,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BenchFlow {
    /// Binary chunks, naive reconstruction.
    Chunk,
    /// Binary chunks, exact reconstruction.
    ChunkSat,
    /// CSD chunks, naive reconstruction.
    Csd,
    /// SAT decomposition, exact steps.
    Sat,
    /// Exact-cover enumeration.
    Enumerate,
}

#[derive(Debug, Args)]
struct TargetArgs {
    /// Comma-separated constants (decimal or 0x hex).
    #[arg(long, value_delimiter = ',')]
    targets: Vec<String>,
    /// Instance file: `# name` header, one constant per line.
    instance: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FlowArgs {
    /// Pattern width in digits.
    #[arg(short = 'w', long = "width", default_value_t = 4)]
    width: u32,
    #[arg(long, value_enum, default_value_t = EncodingArg::Bin)]
    encoding: EncodingArg,
    #[arg(long, value_enum, default_value_t = ModeArg::Chunk)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = ReconArg::Naive)]
    reconstruct: ReconArg,
    /// Time limit in seconds for each exact step.
    #[arg(long, default_value_t = 600.0)]
    timeout: f64,
    /// Wall-clock limit in seconds for a whole enumeration.
    #[arg(long)]
    budget: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Solve the pattern MCM with the heuristic instead of the exact search.
    #[arg(long)]
    heuristic_mcm: bool,
    /// Extra total pattern counts tried by the SAT decomposition.
    #[arg(long, default_value_t = 0)]
    tp_slack: usize,
    /// Try each width and keep the cheapest result.
    #[arg(long, value_delimiter = ',')]
    best_of: Vec<u32>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write the artifact here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Debug, Args)]
struct DecomposeArgs {
    #[command(flatten)]
    targets: TargetArgs,
    #[command(flatten)]
    flow: FlowArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    targets: TargetArgs,
    #[command(flatten)]
    flow: FlowArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct EnumerateArgs {
    #[command(flatten)]
    targets: TargetArgs,
    #[command(flatten)]
    flow: FlowArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Only count exact covers; skip the MCM solves.
    #[arg(long)]
    count_only: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Adder graph in JSON.
    graph: PathBuf,
    #[arg(long, value_delimiter = ',')]
    targets: Vec<String>,
    #[arg(long)]
    instance: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Instance files. Ignored with --random.
    instances: Vec<PathBuf>,
    /// Generate the instances from --seed instead of reading files.
    #[arg(long)]
    random: bool,
    #[arg(long, value_delimiter = ',', default_value = "32,64")]
    widths: Vec<u32>,
    #[arg(long, default_value_t = 5)]
    per_width: usize,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "chunk,csd")]
    flows: Vec<BenchFlow>,
    #[command(flatten)]
    flow: FlowArgs,
    /// Results CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "32,64,128,256")]
    widths: Vec<u32>,
    #[arg(long, default_value_t = 25)]
    per_width: usize,
    /// Constants per instance.
    #[arg(long, default_value_t = 10)]
    count: usize,
    /// Directory for the instance files.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Bad input from the user: exit status 1.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct Invalid(String);

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    Invalid(msg.into()).into()
}

fn secs(s: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(s).map_err(|_| invalid(format!("invalid duration {s}")))
}

fn load_instance(path: &Path) -> Result<ProblemInstance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ProblemInstance::parse(&text).with_context(|| format!("{}", path.display()))
}

fn load_targets(targets: &[String], instance: Option<&Path>) -> Result<ProblemInstance> {
    match (targets.is_empty(), instance) {
        (false, None) => {
            let targets = targets.iter().map(|t| parse_nat(t)).collect::<Result<Vec<BigNat>, _>>()?;
            Ok(ProblemInstance { name: "cli".into(), targets })
        }
        (true, Some(p)) => load_instance(p),
        (false, Some(_)) => Err(invalid("give either --targets or an instance file, not both")),
        (true, None) => Err(invalid("no targets: use --targets or an instance file")),
    }
}

impl FlowArgs {
    fn config(&self) -> Result<FlowConfig> {
        Ok(FlowConfig {
            width: self.width,
            encoding: self.encoding.into(),
            decomposition: match self.mode {
                ModeArg::Chunk => DecompositionMode::Chunk,
                ModeArg::Sat => DecompositionMode::Sat,
                ModeArg::Enumerate => DecompositionMode::Enumerate,
            },
            reconstruction: match self.reconstruct {
                ReconArg::Naive => ReconstructionMode::Naive,
                ReconArg::Sat => ReconstructionMode::Sat,
            },
            pattern_mcm: if self.heuristic_mcm { PatternMcm::Heuristic } else { PatternMcm::Optimal },
            sat_timeout: secs(self.timeout)?,
            enumeration_budget: self.budget.map(secs).transpose()?,
            seed: self.seed,
            backend: Backend::from_env(),
            tp_slack: self.tp_slack,
            ..FlowConfig::default()
        })
    }
}

fn emit(output: &OutputArgs, text: &str) -> Result<()> {
    match &output.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn report(r: &FlowResult) -> String {
    let fb = &r.fallbacks;
    let flags: Vec<&str> = [
        (fb.decomposition, "decomposition"),
        (fb.pattern_mcm, "pattern-mcm"),
        (fb.reconstruction, "reconstruction"),
        (fb.enumeration, "enumeration"),
    ]
    .iter()
    .filter(|(on, _)| *on)
    .map(|(_, n)| *n)
    .collect();
    format!(
        "flow: {}\nwidth: {}\n{} total adders ({} pattern + {} reconstruction)\nbit adders: {}\npatterns: {} placed, {} unique\noptimal: pattern mcm {}, reconstruction {}\nfallbacks: {}\n",
        r.flow,
        r.width,
        r.total_adders,
        r.pattern_adders,
        r.reconstruction_adders,
        r.bit_adders,
        r.total_patterns,
        r.unique_patterns,
        r.pattern_optimal,
        r.reconstruction_optimal,
        if flags.is_empty() { "none".to_string() } else { flags.join(", ") },
    )
}

fn artifact(r: &FlowResult, instance: &str, format: FormatArg) -> Result<String> {
    Ok(match format {
        FormatArg::Json => r.graph.to_json(),
        FormatArg::Dot => r.graph.to_dot(),
        FormatArg::Csv => rows_to_csv(&[ResultRow::from_result(instance, r)])?,
    })
}

fn solve_once(targets: &[BigNat], flow: &FlowArgs) -> Result<FlowResult> {
    let cfg = flow.config()?;
    let r = if flow.best_of.is_empty() { run_flow(targets, &cfg)? } else { run_best_of(targets, &cfg, &flow.best_of)? };
    if !r.graph.realizes(targets) {
        bail!("internal error: merged graph does not compute its targets");
    }
    Ok(r)
}

fn cmd_decompose(a: &DecomposeArgs) -> Result<()> {
    let inst = load_targets(&a.targets.targets, a.targets.instance.as_deref())?;
    let cfg = a.flow.config()?;
    let d = match (a.flow.mode, cfg.encoding) {
        (ModeArg::Chunk, Encoding::Binary) => chunk_divide_binary(&inst.targets, cfg.width)?,
        (ModeArg::Chunk, Encoding::Csd) => chunk_divide_csd(&inst.targets, cfg.width)?,
        (ModeArg::Sat, Encoding::Binary) => {
            let opts = PatternSearchOptions { timeout: cfg.sat_timeout, backend: cfg.backend.clone(), tp_slack: 0 };
            let s = vlcm_core::solve_pattern_decomposition(&inst.targets, cfg.width, &opts)?;
            if s.fallback {
                eprintln!("pattern search timed out; showing the chunk division");
            }
            s.decomposition
        }
        (ModeArg::Sat, Encoding::Csd) => return Err(invalid("the SAT decomposition works on binary digits")),
        (ModeArg::Enumerate, _) => return Err(invalid("use the enumerate subcommand")),
    };
    match a.output.format {
        None => {
            let s: Vec<String> = d.unique_patterns().iter().map(ToString::to_string).collect();
            let mut text = format!("{} placed patterns, {} unique: {{{}}}\n", d.total_patterns(), s.len(), s.join(", "));
            for p in &d.placements {
                let sign = if p.negated { "-" } else { "" };
                text += &format!("target {} offset {}: {sign}{}\n", inst.targets[p.target_index], p.offset, p.pattern.value());
            }
            emit(&a.output, &text)
        }
        Some(FormatArg::Json) => emit(&a.output, &format!("{}\n", serde_json::to_string_pretty(&d.to_json())?)),
        Some(f) => Err(invalid(format!("decompose cannot write {f:?}"))),
    }
}

fn cmd_solve(a: &SolveArgs) -> Result<()> {
    let inst = load_targets(&a.targets.targets, a.targets.instance.as_deref())?;
    let r = solve_once(&inst.targets, &a.flow)?;
    match (a.output.format, &a.output.out) {
        (None, None) => print!("{}", report(&r)),
        (f, _) => {
            emit(&a.output, &artifact(&r, &inst.name, f.unwrap_or(FormatArg::Json))?)?;
            if a.output.out.is_some() {
                print!("{}", report(&r));
            }
        }
    }
    Ok(())
}

fn cmd_enumerate(a: &EnumerateArgs) -> Result<()> {
    let inst = load_targets(&a.targets.targets, a.targets.instance.as_deref())?;
    let mut cfg = a.flow.config()?;
    if a.count_only {
        let xc = build_xc_instance(&inst.targets, cfg.width, cfg.encoding)?;
        let mut covers = 0usize;
        let mut sets = std::collections::BTreeSet::new();
        for d in enumerate_pattern_sets(&xc) {
            covers += 1;
            sets.insert(d.unique_patterns());
        }
        println!("{} options", xc.options.len());
        println!("{covers} pattern sets ({} distinct)", sets.len());
        return Ok(());
    }
    cfg.decomposition = DecompositionMode::Enumerate;
    let r = run_flow(&inst.targets, &cfg)?;
    if !r.graph.realizes(&inst.targets) {
        bail!("internal error: merged graph does not compute its targets");
    }
    let stats = r.enumeration.clone().unwrap_or_default();
    let heuristic_cfg = FlowConfig { decomposition: DecompositionMode::Chunk, encoding: Encoding::Csd, ..cfg.clone() };
    let heuristic = run_flow(&inst.targets, &heuristic_cfg)?;
    match a.output.format {
        Some(FormatArg::Csv) => emit(
            &a.output,
            &export_design_space(&stats.histogram, &[("enumerate", r.total_adders), ("csd-heuristic", heuristic.total_adders)]),
        )?,
        Some(FormatArg::Json) | Some(FormatArg::Dot) => {
            emit(&a.output, &artifact(&r, &inst.name, a.output.format.expect("matched"))?)?
        }
        None => {}
    }
    if a.output.format.is_none() || a.output.out.is_some() {
        println!("{} pattern sets ({} distinct)", stats.covers, stats.pattern_sets);
        println!("best total: {} adders", r.total_adders);
        println!("csd heuristic total: {} adders{}", heuristic.total_adders, if heuristic.pattern_optimal { "" } else { " (pattern mcm not proven optimal)" });
        println!("complete: {}, all optimal: {}", !r.fallbacks.enumeration, stats.all_optimal);
        for (total, count) in &stats.histogram {
            println!("  {total} adders: {count}");
        }
    }
    Ok(())
}

fn cmd_verify(a: &VerifyArgs) -> Result<()> {
    let inst = load_targets(&a.targets, a.instance.as_deref())?;
    let text = fs::read_to_string(&a.graph).with_context(|| format!("reading {}", a.graph.display()))?;
    let g = AdderGraph::from_json(&text).map_err(|e| invalid(format!("{}: {e}", a.graph.display())))?;
    if let Err(e) = g.validate() {
        return Err(invalid(format!("invalid graph: {e}")));
    }
    if !g.realizes(&inst.targets) {
        return Err(invalid("graph does not compute the targets"));
    }
    println!("ok: {} adders compute {} targets", g.adder_count(), inst.targets.len());
    Ok(())
}

fn bench_config(flow: BenchFlow, base: &FlowConfig) -> FlowConfig {
    let (decomposition, encoding, reconstruction) = match flow {
        BenchFlow::Chunk => (DecompositionMode::Chunk, Encoding::Binary, ReconstructionMode::Naive),
        BenchFlow::ChunkSat => (DecompositionMode::Chunk, Encoding::Binary, ReconstructionMode::Sat),
        BenchFlow::Csd => (DecompositionMode::Chunk, Encoding::Csd, ReconstructionMode::Naive),
        BenchFlow::Sat => (DecompositionMode::Sat, Encoding::Binary, ReconstructionMode::Sat),
        BenchFlow::Enumerate => (DecompositionMode::Enumerate, base.encoding, ReconstructionMode::Sat),
    };
    FlowConfig { decomposition, encoding, reconstruction, ..base.clone() }
}

fn cmd_bench(a: &BenchArgs) -> Result<()> {
    let base = a.flow.config()?;
    let instances = if a.random {
        gen_random_benchmark(base.seed, &a.widths, a.per_width, a.count)
    } else {
        if a.instances.is_empty() {
            return Err(invalid("no instance files given (or use --random)"));
        }
        a.instances.iter().map(|p| load_instance(p)).collect::<Result<Vec<_>>>()?
    };
    let log = Mutex::new(std::io::stderr());
    let rows: Vec<Vec<ResultRow>> = instances
        .par_iter()
        .map(|inst| {
            let mut rows = Vec::new();
            for &flow in &a.flows {
                let start = Instant::now();
                let r = run_flow(&inst.targets, &bench_config(flow, &base))?;
                if !r.graph.realizes(&inst.targets) {
                    bail!("{}: {} graph does not compute the targets", inst.name, r.flow);
                }
                let _ = writeln!(
                    log.lock().expect("log writer"),
                    "{} {:?}: {} adders in {:.2}s",
                    inst.name,
                    flow,
                    r.total_adders,
                    start.elapsed().as_secs_f64()
                );
                rows.push(ResultRow::from_result(&inst.name, &r));
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let csv = rows_to_csv(&rows.concat())?;
    match &a.out {
        Some(p) => fs::write(p, csv).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    if a.widths.iter().any(|&w| w == 0) || a.per_width == 0 || a.count == 0 {
        return Err(invalid("widths, --per-width and --count must be positive"));
    }
    let all = gen_random_benchmark(a.seed, &a.widths, a.per_width, a.count);
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            for inst in &all {
                let p = dir.join(format!("{}.txt", inst.name));
                fs::write(&p, inst.emit()).with_context(|| format!("writing {}", p.display()))?;
            }
            println!("wrote {} instances to {}", all.len(), dir.display());
        }
        None => {
            for inst in &all {
                println!("{}", inst.emit());
            }
        }
    }
    Ok(())
}

/// 1 for bad or infeasible input, 2 for everything else.
fn exit_code(e: &anyhow::Error) -> u8 {
    fn decompose(d: &DecomposeError) -> u8 {
        if matches!(d, DecomposeError::Backend(_)) {
            2
        } else {
            1
        }
    }
    fn mcm(m: &McmError) -> u8 {
        match m {
            McmError::NoTargets | McmError::Zero | McmError::WordLength { .. } | McmError::Infeasible(_) => 1,
            McmError::Decomposition(d) => decompose(d),
            _ => 2,
        }
    }
    for cause in e.chain() {
        if cause.is::<Invalid>() || cause.is::<InstanceError>() || cause.is::<NumError>() {
            return 1;
        }
        if let Some(d) = cause.downcast_ref::<DecomposeError>() {
            return decompose(d);
        }
        if let Some(m) = cause.downcast_ref::<McmError>() {
            return mcm(m);
        }
        // Transparent variants hide the wrapped error from the source chain.
        match cause.downcast_ref::<FlowError>() {
            Some(FlowError::Config(_)) => return 1,
            Some(FlowError::Decompose(d)) => return decompose(d),
            Some(FlowError::Mcm(m)) => return mcm(m),
            Some(FlowError::Graph(_)) => return 2,
            None => {}
        }
    }
    2
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Decompose(a) => cmd_decompose(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Enumerate(a) => cmd_enumerate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
        Command::GenRandom(a) => cmd_gen(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::anyhow;

    #[test]
    fn infeasible_and_invalid_map_to_one() {
        assert_eq!(exit_code(&invalid("x")), 1);
        assert_eq!(exit_code(&anyhow!(FlowError::Mcm(McmError::Infeasible(2)))), 1);
        assert_eq!(exit_code(&anyhow!(FlowError::Decompose(DecomposeError::ZeroWidth))), 1);
        assert_eq!(exit_code(&anyhow!(NumError::Zero).context("parsing")), 1);
    }

    #[test]
    fn internal_errors_map_to_two() {
        assert_eq!(exit_code(&anyhow!("boom")), 2);
        assert_eq!(exit_code(&anyhow!(FlowError::Decompose(DecomposeError::Backend("x".into())))), 2);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
