//! Command-line arguments.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Clone, Debug, Parser, Serialize)]
#[command(name = "clusterstate", version, about = "Cluster-state simulation, protocols and entanglement analysis")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    /// Files whose contents determine the result.
    pub fn input_files(&self) -> Vec<&PathBuf> {
        let (lattice, extra): (Option<&LatticeArgs>, Option<&PathBuf>) = match &self.command {
            Command::Build(a) => (Some(&a.lattice), None),
            Command::SweepPhi(a) => (Some(&a.lattice), None),
            Command::Protocol(p) => match p {
                ProtocolCmd::Bell(a) => (Some(&a.lattice), None),
                ProtocolCmd::Ghz(a) => (Some(&a.lattice), None),
                ProtocolCmd::DisentangleEven(a) => (Some(&a.lattice), None),
                ProtocolCmd::Carve(a) => (Some(&a.lattice), None),
                ProtocolCmd::Reduce(_) => (None, None),
                ProtocolCmd::AlphaBeta(a) => (Some(&a.lattice), None),
                ProtocolCmd::Script(a) => (Some(&a.lattice), Some(&a.script)),
            },
            Command::Analyze(a) => match a {
                AnalyzeCmd::Persistency(a) => (Some(&a.state.lattice), None),
                AnalyzeCmd::Schmidt(a) => (Some(&a.state.lattice), None),
                AnalyzeCmd::Connectedness(a) => (Some(&a.state.lattice), None),
            },
            Command::Bench(_) => (None, None),
        };
        lattice.and_then(|l| l.spec.as_ref()).into_iter().chain(extra).collect()
    }
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct GlobalOpts {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Numerical tolerance override.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true, value_enum, default_value = "dense")]
    pub backend: BackendArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendArg {
    Dense,
    Tableau,
    /// Run both and compare.
    Both,
}

/// Where the lattice comes from: a spec file, a chain or a block.
#[derive(Clone, Debug, Default, Args, Serialize)]
pub struct LatticeArgs {
    /// JSON lattice spec: `{"dim":2,"sites":[[0,0],…]}` or `{"dim":2,"block":[7,7]}`.
    #[arg(long, conflicts_with_all = ["chain", "block"])]
    pub spec: Option<PathBuf>,
    /// Chain of N sites.
    #[arg(long, conflicts_with = "block")]
    pub chain: Option<usize>,
    /// Block with the given side lengths (1 to 3 of them).
    #[arg(long, num_args = 1..=3)]
    pub block: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Subcommand, Serialize)]
pub enum Command {
    /// Summarize the clusters of a lattice.
    Build(BuildArgs),
    /// Sweep the interaction phase and report entanglement along the way.
    SweepPhi(SweepArgs),
    /// Run a measurement protocol.
    #[command(subcommand)]
    Protocol(ProtocolCmd),
    /// Entanglement analyses.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Time tableau construction and measurement.
    Bench(BenchArgs),
}

impl Command {
    pub fn name(&self) -> String {
        match self {
            Command::Build(_) => "build".into(),
            Command::SweepPhi(_) => "sweep-phi".into(),
            Command::Protocol(p) => format!("protocol {}", p.name()),
            Command::Analyze(a) => format!("analyze {}", a.name()),
            Command::Bench(_) => "bench".into(),
        }
    }

    pub fn default_format(&self) -> Format {
        match self {
            Command::SweepPhi(_) | Command::Bench(_) => Format::Csv,
            _ => Format::Json,
        }
    }
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct BuildArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FormArg {
    /// Phase on pairs with the lower site in |0⟩ and the upper in |1⟩.
    Pair,
    /// Symmetric σ_z σ_z coupling.
    Ising,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    /// Number of intervals between φ = 0 and φ = 2π.
    #[arg(long, default_value_t = 16)]
    pub steps: usize,
    #[arg(long, value_enum, default_value = "pair")]
    pub form: FormArg,
}

#[derive(Clone, Debug, Subcommand, Serialize)]
pub enum ProtocolCmd {
    /// Project two qubits onto a Bell pair.
    Bell(BellArgs),
    /// Extract a GHZ state on a set of even-sublattice sites.
    Ghz(GhzArgs),
    /// σ_z on every second qubit of a chain.
    DisentangleEven(PlainArgs),
    /// Cut a chain out of a cluster along a path.
    Carve(CarveArgs),
    /// Shorten a chain by σ_x measurements on its second qubit.
    Reduce(ReduceArgs),
    /// Prepare α|0…0⟩ + β|1…1⟩ on a set of even-sublattice sites.
    AlphaBeta(AlphaBetaArgs),
    /// Run a measurement script from a JSON file.
    Script(ScriptArgs),
}

impl ProtocolCmd {
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolCmd::Bell(_) => "bell",
            ProtocolCmd::Ghz(_) => "ghz",
            ProtocolCmd::DisentangleEven(_) => "disentangle-even",
            ProtocolCmd::Carve(_) => "carve",
            ProtocolCmd::Reduce(_) => "reduce",
            ProtocolCmd::AlphaBeta(_) => "alpha-beta",
            ProtocolCmd::Script(_) => "script",
        }
    }
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct PlainArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct BellArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    /// Two qubit positions, counted from 1 in lexicographic site order.
    #[arg(long, num_args = 2, required = true)]
    pub pair: Vec<usize>,
}

/// Target sites: the even sublattice or an explicit list.
#[derive(Clone, Debug, Args, Serialize)]
pub struct TargetArgs {
    /// `even`: every site with all coordinates even.
    #[arg(long, conflicts_with = "targets")]
    pub sublattice: Option<String>,
    /// Sites as `x,y;x,y;…`.
    #[arg(long)]
    pub targets: Option<String>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct GhzArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[command(flatten)]
    pub targets: TargetArgs,
    /// Branches sampled on the tableau backend.
    #[arg(long, default_value_t = 8)]
    pub samples: usize,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct CarveArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    /// Path sites as `x,y;x,y;…`.
    #[arg(long)]
    pub path: String,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct ReduceArgs {
    #[arg(long)]
    pub chain: usize,
    #[arg(long)]
    pub times: usize,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct AlphaBetaArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[command(flatten)]
    pub targets: TargetArgs,
    /// α as `re` or `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: String,
    /// β as `re` or `re,im`.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Product,
    Bell,
    Ghz,
    Chain,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct ScriptArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long)]
    pub script: PathBuf,
    /// What every branch should end up as (on the unmeasured qubits).
    #[arg(long, value_enum, default_value = "product")]
    pub target: TargetKind,
}

/// A state to analyze: a cluster state or a reference state.
#[derive(Clone, Debug, Args, Serialize)]
pub struct StateArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    /// GHZ state on N qubits.
    #[arg(long, conflicts_with_all = ["w", "spec", "chain", "block"])]
    pub ghz: Option<usize>,
    /// W state on N qubits.
    #[arg(long, conflicts_with_all = ["spec", "chain", "block"])]
    pub w: Option<usize>,
}

#[derive(Clone, Debug, Subcommand, Serialize)]
pub enum AnalyzeCmd {
    /// Persistency bounds from a disentangling strategy and Schmidt ranks.
    Persistency(PersistencyArgs),
    /// Schmidt-measure bounds with tensor-rank evidence.
    Schmidt(SchmidtArgs),
    /// Whether every pair can be projected onto a Bell pair.
    Connectedness(ConnectednessArgs),
}

impl AnalyzeCmd {
    pub fn name(&self) -> &'static str {
        match self {
            AnalyzeCmd::Persistency(_) => "persistency",
            AnalyzeCmd::Schmidt(_) => "schmidt",
            AnalyzeCmd::Connectedness(_) => "connectedness",
        }
    }
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct PersistencyArgs {
    #[command(flatten)]
    pub state: StateArgs,
    /// Also run the adaptive Pauli search up to this depth.
    #[arg(long)]
    pub search: Option<usize>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct SchmidtArgs {
    #[command(flatten)]
    pub state: StateArgs,
    #[arg(long, default_value_t = 64)]
    pub restarts: usize,
    #[arg(long, default_value_t = 3000)]
    pub max_iters: usize,
    /// Also report the ALS residual for every term count up to this one.
    #[arg(long)]
    pub curve: Option<usize>,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct ConnectednessArgs {
    #[command(flatten)]
    pub state: StateArgs,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct BenchArgs {
    /// Chain lengths.
    #[arg(long, value_delimiter = ',', default_values_t = [1_000usize, 10_000, 100_000])]
    pub chains: Vec<usize>,
    /// Square block sides.
    #[arg(long, value_delimiter = ',', default_values_t = [100usize, 300])]
    pub squares: Vec<usize>,
    /// Seeded random σ_x measurements timed per register.
    #[arg(long, default_value_t = 1000)]
    pub measurements: usize,
}
