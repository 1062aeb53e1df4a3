//! `dpleak`: command-line front end for the analysis library.

mod commands;
mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use report::Format;

#[derive(Parser)]
#[command(name = "dpleak", version, about = "Differential privacy vs. min-entropy leakage on adjacency graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, value_enum, default_value = "text", global = true)]
    format: Format,

    /// Vertex cap for generated graphs.
    #[arg(long, env = "DPLEAK_MAX_VERTICES", default_value_t = dpleak_core::graphs::DEFAULT_MAX_VERTICES, global = true)]
    max_vertices: usize,
}

#[derive(Args, Clone)]
#[group(required = true, multiple = false)]
pub struct GraphSource {
    /// Graph family: hamming:U,V | clique:N | cycle:N | path:N | star:K | petersen
    #[arg(long)]
    family: Option<String>,
    /// Graph JSON file `{"n": .., "edges": [[i,j],..], "labels": [..]}`.
    #[arg(long)]
    graph: Option<PathBuf>,
}

#[derive(Args, Clone)]
#[group(required = true, multiple = false)]
pub struct Privacy {
    /// ε as a decimal, or `lnK` for the exact ratio 1/K.
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<String>,
    /// Exact ratio r = e^(-ε) as `p/q` or a decimal in (0, 1].
    #[arg(long)]
    ratio: Option<String>,
}

#[derive(Args, Clone)]
#[group(required = true, multiple = false)]
pub struct MatrixSource {
    /// Matrix CSV or JSON file.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Built-in matrix from the six-city example: m1 or m2.
    #[arg(long)]
    fixture: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a graph: profile, distance-regularity, VT+ certificate.
    Graph {
        #[command(flatten)]
        source: GraphSource,
        /// Search-node budget for the automorphism search.
        #[arg(long, default_value_t = dpleak_core::graphs::DEFAULT_SEARCH_BUDGET)]
        budget: u64,
    },
    /// Audit a channel: ε-DP, entropies, leakage, capacity, utility, bounds.
    Analyze {
        #[command(flatten)]
        matrix: MatrixSource,
        #[command(flatten)]
        source: GraphSource,
        #[command(flatten)]
        privacy: Privacy,
        /// Prior file (`label,value` lines); uniform when omitted.
        #[arg(long)]
        prior: Option<PathBuf>,
        /// Tolerance on the ln-ratio for the ε-DP verdict.
        #[arg(long, default_value_t = dpleak_core::channels::DP_TOLERANCE)]
        tolerance: f64,
    },
    /// Rewrite a DP matrix into diagonal and symmetric canonical form.
    Transform {
        #[command(flatten)]
        matrix: MatrixSource,
        #[command(flatten)]
        source: GraphSource,
        /// Stop after the column merge.
        #[arg(long)]
        diagonal_only: bool,
        /// Write the resulting matrix as CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize the optimal-utility ε-DP mechanism for a graph.
    Synth {
        #[command(flatten)]
        source: GraphSource,
        #[command(flatten)]
        privacy: Privacy,
        /// Write the mechanism bundle JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Query map file (`input,answer` lines); composes the mechanism
        /// with the query over the --inputs graph.
        #[arg(long, requires = "inputs")]
        f_map: Option<PathBuf>,
        /// Input graph family for --f-map.
        #[arg(long)]
        inputs: Option<String>,
    },
    /// Side-by-side utility and leakage of several matrices under priors.
    Compare {
        /// Matrix files or `fixture:m1` / `fixture:m2`; at least two.
        #[arg(long = "matrix", required = true, num_args = 1)]
        matrices: Vec<String>,
        /// Extra prior files; the uniform prior is always included.
        #[arg(long = "prior")]
        priors: Vec<PathBuf>,
        /// Include the six-city non-uniform prior.
        #[arg(long)]
        city_prior: bool,
    },
    /// Brute-force and stochastic checks of the utility bound.
    Oracle {
        #[command(flatten)]
        source: GraphSource,
        #[command(flatten)]
        privacy: Privacy,
        #[arg(long, value_enum, default_value = "hillclimb")]
        method: commands::OracleMethod,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        iters: u64,
        /// Grid step `1/N` for --method grid.
        #[arg(long, default_value = "1/24")]
        step: String,
        /// Matrices drawn for --method random.
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Start hill-climbing from uniform rows instead of the synthesized mechanism.
        #[arg(long)]
        uniform_start: bool,
    },
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let ctx = commands::Context {
        format: cli.format,
        max_vertices: cli.max_vertices,
    };
    let out = match cli.command {
        Command::Graph { source, budget } => commands::graph(&ctx, &source, budget)?,
        Command::Analyze {
            matrix,
            source,
            privacy,
            prior,
            tolerance,
        } => commands::analyze(&ctx, &matrix, &source, &privacy, prior.as_deref(), tolerance)?,
        Command::Transform {
            matrix,
            source,
            diagonal_only,
            out,
        } => commands::transform(&ctx, &matrix, &source, diagonal_only, out.as_deref())?,
        Command::Synth {
            source,
            privacy,
            out,
            f_map,
            inputs,
        } => commands::synth(&ctx, &source, &privacy, out.as_deref(), f_map.as_deref(), inputs.as_deref())?,
        Command::Compare {
            matrices,
            priors,
            city_prior,
        } => commands::compare(&ctx, &matrices, &priors, city_prior)?,
        Command::Oracle {
            source,
            privacy,
            method,
            seed,
            iters,
            step,
            count,
            uniform_start,
        } => commands::oracle(
            &ctx,
            &source,
            &privacy,
            commands::OracleArgs {
                method,
                seed,
                iters,
                step,
                count,
                uniform_start,
            },
        )?,
    };
    print!("{out}");
    Ok(())
}
