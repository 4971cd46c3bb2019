//! `rbc`: rate regions, Fourier-Motzkin tooling and coding simulations for
//! relay broadcast channels.
//!
//! Exit codes: 0 success, 1 internal error, 2 usage or input error.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;

use rbc_regions::channel::{
    build_example2, check_parallel_structure, check_structure, load_channel, parse_prob, Channel,
    GaussianOrthogonalParams, ParallelRbcChannel, StructureReport,
};
use rbc_regions::cloud::{cloud_dominates, minkowski_sum, DominanceMode, RateTriple, RegionCloud};
use rbc_regions::exec::{set_threads, Exec};
use rbc_regions::polytope::{equivalent_under, fme_eliminate, parse_relations, SymbolicIneqSystem};
use rbc_regions::region::{
    blackwell_frontier, gaussian_frontier, parallel_relay_capacity, search_frontier, subchannel_capacities, AuxCards,
    AuxJoint, Factor, FactorShape, OrthogonalAux, SearchConfig, TheoremId, DEFAULT_REFINE,
};
use rbc_regions::sim::{simulate_binning, simulate_orthogonal, SimParams, TypicalityRule, DEFAULT_EPSILON};
use rbc_regions::{RbcError, Result};

#[derive(Parser)]
#[command(name = "rbc", version, about = "Rate regions and coding simulations for relay broadcast channels")]
struct Cli {
    /// Worker threads for parallel loops (0 = automatic).
    #[arg(long, global = true, env = "RBC_THREADS", default_value_t = 0)]
    threads: usize,
    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample auxiliary laws and write the Pareto frontier of a region as CSV.
    Region(RegionArgs),
    /// Frontier of the Blackwell channel with relay link rate r.
    Blackwell(BlackwellArgs),
    /// Frontier of the Gaussian orthogonal channel over the power splits.
    Gaussian(GaussianArgs),
    /// Capacity of a parallel relay broadcast channel with one private message.
    ParallelRelay(ParallelArgs),
    /// Relay capacities of the two subchannels taken on their own.
    SubchannelCaps(ParallelArgs),
    /// Fourier-Motzkin elimination on a symbolic system file.
    Fme(FmeArgs),
    /// Check that one frontier CSV dominates another.
    Compare(CompareArgs),
    /// Minkowski sum of two frontier CSVs.
    Minkowski(MinkowskiArgs),
    /// Monte Carlo simulation of a random-coding scheme.
    Sim(SimArgs),
    /// Report semideterminism and degradedness of a channel.
    CheckStructure(StructureArgs),
}

#[derive(Args)]
struct OutArg {
    /// Output file (written atomically); stdout when omitted.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CardArgs {
    #[arg(long, default_value_t = 2)]
    card_t: usize,
    #[arg(long, default_value_t = 2)]
    card_u1: usize,
    #[arg(long, default_value_t = 2)]
    card_u2: usize,
    #[arg(long, default_value_t = 2)]
    card_u: usize,
    #[arg(long, default_value_t = 2)]
    card_v: usize,
}

impl CardArgs {
    fn cards(&self) -> AuxCards {
        AuxCards { t: self.card_t, u1: self.card_u1, u2: self.card_u2, u: self.card_u, v: self.card_v }
    }
}

#[derive(Args)]
struct RegionArgs {
    /// Region identifier, e.g. r3, outer, semidet, parallel-inner.
    #[arg(long)]
    theorem: String,
    /// Channel file (JSON).
    #[arg(long)]
    channel: PathBuf,
    #[command(flatten)]
    cards: CardArgs,
    /// Number of sampled auxiliary laws.
    #[arg(long, default_value_t = 500)]
    budget: usize,
    #[arg(long)]
    seed: u64,
    /// Share of the budget spent refining the best samples, in [0, 1).
    #[arg(long, default_value_t = DEFAULT_REFINE)]
    refine: f64,
    /// Weight directions `w0,w1,w2` whose support values go into the metadata.
    #[arg(long = "weight", value_parser = parse_weight)]
    weights: Vec<[f64; 3]>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct BlackwellArgs {
    /// Relay link rate in bits, r >= 0.
    #[arg(long, default_value_t = 0.0)]
    r: f64,
    /// Simplex grid resolution over (alpha, beta), at least 2.
    #[arg(long, default_value_t = 100)]
    grid: usize,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct GaussianArgs {
    /// Source power.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// Relay power.
    #[arg(long, default_value_t = 1.0)]
    p1: f64,
    /// Noise variance at destination 1.
    #[arg(long, default_value_t = 1.0)]
    n1: f64,
    /// Noise variance at destination 2.
    #[arg(long, default_value_t = 1.0)]
    n2: f64,
    #[arg(long, default_value_t = 100)]
    grid: usize,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct ParallelArgs {
    /// Parallel channel file; the built-in two-subchannel example when omitted.
    #[arg(long)]
    channel: Option<PathBuf>,
    /// Grid resolution over each subchannel input law, at least 2.
    #[arg(long, default_value_t = 20)]
    grid: usize,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct FmeArgs {
    /// Symbolic system file.
    #[arg(long)]
    system: PathBuf,
    /// Rate variables to eliminate, in order (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    eliminate: Vec<String>,
    /// Compare the projection with this system on random atom values.
    #[arg(long, requires = "seed")]
    check_against: Option<PathBuf>,
    /// Atom relations file used when sampling atom values.
    #[arg(long, requires = "check_against")]
    relations: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Hull,
    Pointwise,
}

#[derive(Args)]
struct CompareArgs {
    /// Frontier expected to be larger.
    #[arg(long)]
    outer: PathBuf,
    /// Frontier expected to be covered.
    #[arg(long)]
    inner: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, value_enum, default_value = "hull")]
    mode: ModeArg,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct MinkowskiArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scheme {
    Orthogonal,
    Binning,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, value_enum)]
    scheme: Scheme,
    /// Channel file: orthogonal kind for `orthogonal`, rbc kind for `binning`.
    #[arg(long)]
    channel: PathBuf,
    /// Input law file; uniform factors when omitted.
    #[arg(long)]
    aux: Option<PathBuf>,
    /// |T| and |U1| = |U2| for the uniform binning law.
    #[arg(long, default_value_t = 2)]
    card_t: usize,
    #[arg(long, default_value_t = 2)]
    card_u: usize,
    /// Symbols per block.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    blocks: usize,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    r0: f64,
    #[arg(long, default_value_t = 0.0)]
    r1: f64,
    #[arg(long, default_value_t = 0.0)]
    r2: f64,
    /// Bin rate R1' (binning only).
    #[arg(long, default_value_t = 0.0)]
    r1_bin: f64,
    /// Bin rate R2' (binning only).
    #[arg(long, default_value_t = 0.0)]
    r2_bin: f64,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// `relative` (|f - p| <= eps p) or `absolute` (|f - p| <= eps).
    #[arg(long, default_value = "relative")]
    typicality: TypicalityRule,
    /// Cap on stored codeword symbols per trial.
    #[arg(long)]
    max_symbols: Option<u64>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct StructureArgs {
    #[arg(long)]
    channel: PathBuf,
    #[command(flatten)]
    out: OutArg,
}

fn parse_weight(s: &str) -> std::result::Result<[f64; 3], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    <[f64; 3]>::try_from(v).map_err(|v| format!("expected three weights, got {}", v.len()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    set_threads(cli.threads);
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    match run(cli.cmd, exec) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let first = e.to_string();
            eprintln!("rbc: {}", first.lines().next().unwrap_or_default());
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}

fn run(cmd: Cmd, exec: Exec) -> Result<()> {
    match cmd {
        Cmd::Region(a) => cmd_region(a, exec),
        Cmd::Blackwell(a) => emit(&a.out, &blackwell_frontier(a.r, a.grid, exec)?.to_csv()),
        Cmd::Gaussian(a) => {
            let g = GaussianOrthogonalParams::new(a.p, a.p1, a.n1, a.n2)?;
            emit(&a.out, &gaussian_frontier(&g, a.grid, exec)?.to_csv())
        }
        Cmd::ParallelRelay(a) => cmd_parallel_relay(a, exec),
        Cmd::SubchannelCaps(a) => cmd_subchannel_caps(a, exec),
        Cmd::Fme(a) => cmd_fme(a, exec),
        Cmd::Compare(a) => cmd_compare(a, exec),
        Cmd::Minkowski(a) => {
            let sum = minkowski_sum(&RegionCloud::load(&a.a)?, &RegionCloud::load(&a.b)?);
            emit(&a.out, &sum.with_meta("region", "minkowski-sum").to_csv())
        }
        Cmd::Sim(a) => cmd_sim(a, exec),
        Cmd::CheckStructure(a) => cmd_check_structure(a),
    }
}

/// Writes to `--out` through a temporary file in the same directory, or to stdout.
fn emit(out: &OutArg, text: &str) -> Result<()> {
    let Some(path) = &out.out else {
        let mut so = std::io::stdout().lock();
        return so
            .write_all(text.as_bytes())
            .and_then(|_| so.flush())
            .map_err(|e| RbcError::io(Path::new("<stdout>"), e));
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| RbcError::io(dir, e))?;
    tmp.write_all(text.as_bytes()).map_err(|e| RbcError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| RbcError::io(path, e.error))?;
    Ok(())
}

fn cmd_region(a: RegionArgs, exec: Exec) -> Result<()> {
    let id: TheoremId = a.theorem.parse()?;
    let ch = load_channel(&a.channel)?;
    let mut cfg = SearchConfig::new(a.budget, a.seed);
    cfg.cards = a.cards.cards();
    cfg.weights = a.weights;
    cfg.refine = a.refine;
    cfg.exec = exec;
    let cloud = search_frontier(id, &ch, &cfg)?;
    emit(&a.out, &cloud.to_csv())
}

fn load_parallel(path: &Option<PathBuf>) -> Result<ParallelRbcChannel> {
    match path {
        None => Ok(build_example2()),
        Some(p) => match load_channel(p)? {
            Channel::Parallel(c) => Ok(c),
            other => Err(RbcError::input(format!("expected a parallel channel, found kind {:?}", other.kind()))),
        },
    }
}

fn fmt_law(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ")
}

fn cmd_parallel_relay(a: ParallelArgs, exec: Exec) -> Result<()> {
    let ch = load_parallel(&a.channel)?;
    let c = parallel_relay_capacity(&ch, a.grid, exec)?;
    let caps = subchannel_capacities(&ch, a.grid, exec).ok();
    let mut s = format!("capacity: {}\ngrid: {}\nlaw_a: {}\nlaw_b: {}\n", c.value, a.grid, fmt_law(&c.law_a), fmt_law(&c.law_b));
    if let Some(caps) = caps {
        s.push_str(&format!("subchannel_sum: {}\ngap: {}\n", caps.sum(), c.value - caps.sum()));
    }
    emit(&a.out, &s)
}

fn cmd_subchannel_caps(a: ParallelArgs, exec: Exec) -> Result<()> {
    let ch = load_parallel(&a.channel)?;
    let c = subchannel_capacities(&ch, a.grid, exec)?;
    emit(&a.out, &format!("sub_a: {}\nsub_b: {}\nsum: {}\ngrid: {}\n", c.ca, c.cb, c.sum(), a.grid))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| RbcError::io(path, e))
}

fn cmd_fme(a: FmeArgs, exec: Exec) -> Result<()> {
    let sys = SymbolicIneqSystem::from_json(&read_text(&a.system)?)?;
    let victims: Vec<&str> = a.eliminate.iter().map(|s| s.trim()).collect();
    let projected = fme_eliminate(&sys, &victims)?;
    emit(&a.out, &projected.to_json())?;
    let Some(target) = &a.check_against else {
        return Ok(());
    };
    let target = SymbolicIneqSystem::from_json(&read_text(target)?)?;
    let relations = match &a.relations {
        Some(p) => parse_relations(projected.atoms(), &read_text(p)?)?,
        None => Vec::new(),
    };
    let seed = a.seed.expect("clap requires --seed with --check-against");
    let rep = equivalent_under(&projected, &target, &relations, a.trials, seed, exec)?;
    let verdict = if rep.equivalent { "pass" } else { "fail" };
    eprintln!("equivalence: {verdict} ({}/{} vertex sets match)", rep.matches, rep.trials);
    if let Some(cx) = rep.counterexample {
        let vals: Vec<String> = cx.iter().map(|(k, v)| format!("{k}={v}")).collect();
        eprintln!("counterexample: {}", vals.join(" "));
    }
    Ok(())
}

fn cmd_compare(a: CompareArgs, exec: Exec) -> Result<()> {
    let outer = RegionCloud::load(&a.outer)?;
    let inner = RegionCloud::load(&a.inner)?;
    let mode = match a.mode {
        ModeArg::Hull => DominanceMode::Hull,
        ModeArg::Pointwise => DominanceMode::Pointwise,
    };
    let d = cloud_dominates(&outer, &inner, a.tol, mode, exec)?;
    let worst = d.worst_index.map_or("none".to_string(), |i| i.to_string());
    emit(&a.out, &format!("dominates: {}\nworst_gap: {}\nworst_index: {worst}\n", d.holds, d.worst_gap))
}

/// Reads an input law file: `{"factors": [[...], ...]}` with one flat
/// row-major table per factor, entries as numbers or `"p/q"` strings.
fn load_factors(path: &Path, shapes: &[FactorShape]) -> Result<Vec<Factor>> {
    let v: Value = serde_json::from_str(&read_text(path)?)
        .map_err(|e| RbcError::input(format!("malformed law file: {e}")))?;
    let tables = v
        .get("factors")
        .and_then(Value::as_array)
        .ok_or_else(|| RbcError::input("law file lacks a `factors` array"))?;
    if tables.len() != shapes.len() {
        return Err(RbcError::input(format!("expected {} factors, found {}", shapes.len(), tables.len())));
    }
    tables
        .iter()
        .zip(shapes)
        .enumerate()
        .map(|(k, (t, s))| {
            let rows = t
                .as_array()
                .ok_or_else(|| RbcError::input(format!("factor {k} is not an array")))?
                .iter()
                .map(|e| parse_prob(e).map_err(|m| RbcError::input(format!("factor {k}: {m}"))))
                .collect::<Result<Vec<f64>>>()?;
            Factor::new(s.parents.clone(), s.width, rows)
        })
        .collect()
}

fn cmd_sim(a: SimArgs, exec: Exec) -> Result<()> {
    let ch = load_channel(&a.channel)?;
    let mut p = SimParams::new(a.n, a.blocks, RateTriple::new(a.r0, a.r1, a.r2)?, a.trials, a.seed);
    p.bin_rates = (a.r1_bin, a.r2_bin);
    p.epsilon = a.epsilon;
    p.rule = a.typicality;
    p.exec = exec;
    if let Some(m) = a.max_symbols {
        p.max_symbols = m;
    }
    let report = match (a.scheme, &ch) {
        (Scheme::Orthogonal, Channel::Orthogonal(c)) => {
            let [xr, xd, x1, _, _] = c.cards();
            let cards = [x1, xr, xd];
            let law = match &a.aux {
                Some(f) => OrthogonalAux::new(cards, load_factors(f, &OrthogonalAux::shapes(cards))?)?,
                None => OrthogonalAux::uniform(cards)?,
            };
            simulate_orthogonal(c, &law, &p)?
        }
        (Scheme::Binning, Channel::Rbc(c)) => {
            let [x, x1, _, _] = c.cards();
            let cards = [x1, a.card_t, a.card_u, a.card_u, x];
            let aux = match &a.aux {
                Some(f) => AuxJoint::new(cards, load_factors(f, &AuxJoint::shapes(cards))?)?,
                None => AuxJoint::uniform(cards)?,
            };
            simulate_binning(c, &aux, &p)?
        }
        (s, other) => {
            let want = if s == Scheme::Orthogonal { "orthogonal" } else { "rbc" };
            return Err(RbcError::input(format!("scheme needs a {want} channel, found kind {:?}", other.kind())));
        }
    };
    emit(&a.out, &report.to_text())
}

fn structure_lines(prefix: &str, r: &StructureReport) -> String {
    format!(
        "{prefix}semideterministic: {}\n{prefix}deterministic: {}\n{prefix}degraded: {}\n{prefix}reverse_degraded: {}\n{prefix}degraded_residual: {:e}\n{prefix}reverse_degraded_residual: {:e}\n",
        r.semideterministic, r.deterministic, r.degraded_forward, r.degraded_reverse, r.residual_forward, r.residual_reverse
    )
}

fn cmd_check_structure(a: StructureArgs) -> Result<()> {
    let text = match load_channel(&a.channel)? {
        Channel::Rbc(c) => format!("kind: rbc\n{}", structure_lines("", &check_structure(&c))),
        Channel::Orthogonal(c) => format!("kind: orthogonal\n{}", structure_lines("", &check_structure(&c.to_rbc()))),
        Channel::Parallel(c) => {
            let r = check_parallel_structure(&c);
            format!("kind: parallel\n{}{}", structure_lines("sub_a.", &r.sub_a), structure_lines("sub_b.", &r.sub_b))
        }
    };
    emit(&a.out, &text)
}
