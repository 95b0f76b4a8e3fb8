//! `apfree`: build, check and measure progression-free integer sets.
//!
//! Exit codes: 0 success, 1 domain failure (including a progression found
//! by `verify` or a failed `converge` verdict), 2 usage error, 3 I/O error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::output::Format;

#[derive(Parser, Debug)]
#[command(
    name = "apfree",
    version,
    about = "Progression-free integer sets: generate, verify, measure, construct, search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    global: GlobalOpts,
}

#[derive(Args, Debug)]
pub struct GlobalOpts {
    /// Report format; `gen` defaults to text, everything else to json.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Where greedy prefixes are cached between runs.
    #[arg(long, global = true, env = "APFREE_CACHE", default_value = ".apfree-cache")]
    pub cache_dir: PathBuf,

    /// Worker threads for parallel sections.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: u16,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate the greedy sequence S_p.
    Gen {
        #[arg(long, value_parser = parse_p)]
        p: usize,
        /// Number of terms.
        #[arg(long, required_unless_present = "limit", conflicts_with = "limit")]
        count: Option<usize>,
        /// Generate every term up to this value instead.
        #[arg(long)]
        limit: Option<u64>,
        /// Include the reciprocal sum of the generated terms.
        #[arg(long)]
        with_mu: bool,
        /// Neither read nor update the cache.
        #[arg(long)]
        no_cache: bool,
    },
    /// Check a sequence file for p-term progressions.
    Verify {
        /// Defaults to the file's `p=` header.
        #[arg(long, value_parser = parse_p)]
        p: Option<usize>,
        #[arg(long)]
        file: PathBuf,
    },
    /// Reciprocal sum of a sequence file.
    Mu {
        #[arg(long)]
        file: PathBuf,
        /// Only used for the p·ln p reference value; defaults to the header.
        #[arg(long, value_parser = parse_p)]
        p: Option<usize>,
    },
    /// Combine a base set with an amplifier set, scaled past the base.
    Amplify {
        /// Base set A.
        #[arg(long)]
        file: PathBuf,
        /// Amplifier E; searched for among greedy prefixes when omitted.
        #[arg(long)]
        amplifier: Option<PathBuf>,
        #[arg(long, value_parser = parse_p)]
        p: Option<usize>,
        /// Largest element an automatically found amplifier may use.
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
    },
    /// Split a tail set into four block classes and join the heaviest with
    /// a head set; without --file, runs seeded random instances.
    Partition {
        /// Tail set R (every element at least 2M).
        #[arg(long)]
        file: Option<PathBuf>,
        /// Head set A1 (every element at most M) to join with.
        #[arg(long)]
        head: Option<PathBuf>,
        /// The scale M; random per instance when omitted in random mode.
        #[arg(long)]
        m: Option<u64>,
        /// Random per instance when omitted in random mode, otherwise 3.
        #[arg(long, value_parser = parse_p)]
        p: Option<usize>,
        /// Number of random instances.
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Maximize the reciprocal sum over progression-free subsets of [1, N].
    Search {
        #[arg(long)]
        n: u64,
        #[arg(long, value_parser = parse_p)]
        p: usize,
        #[arg(long, value_enum, default_value_t = output::Method::Bnb)]
        method: output::Method,
    },
    /// Check convergence, closedness and continuity for a sequence of sets
    /// listed in a manifest (`limit <file>` and `member <file>` lines).
    Converge {
        #[arg(long)]
        file: PathBuf,
        #[arg(long, value_parser = parse_p)]
        p: Option<usize>,
        /// Prefix length on which convergence and closedness are checked.
        #[arg(long, default_value_t = 30)]
        window: u64,
        /// Tolerance, as a fraction or decimal.
        #[arg(long, default_value = "1/10")]
        epsilon: String,
        /// Treat every set as known only up to this horizon.
        #[arg(long)]
        limit: Option<u64>,
    },
    /// Iterate the amplifier starting from {1} until the budget runs out.
    Bootstrap {
        #[arg(long, value_parser = parse_p)]
        p: usize,
        /// Number of amplification steps to attempt.
        #[arg(long, default_value_t = 2)]
        count: usize,
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
    },
}

fn parse_p(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(p) if p >= 3 => Ok(p),
        Ok(p) => Err(format!("progressions need at least 3 terms, got {p}")),
        Err(e) => Err(e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.global.jobs as usize).build_global() {
        eprintln!("warning: could not configure worker pool: {e}");
    }
    match commands::run(cli.command, &cli.global) {
        Ok(status) => status.into(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
