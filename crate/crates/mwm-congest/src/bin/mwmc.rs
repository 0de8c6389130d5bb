//! Command-line front end: run the reduction pipeline on an instance file,
//! sweep a parameter grid, generate instances, and re-verify saved reports.
//!
//! Exit status is 0 only when every verification in the invocation passed.

use std::fs;
use std::io::Read;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mwm_congest::harness::{
    generate_instance, parse_instance, run_pipeline, sweep, sweep_to_csv, sweep_to_json,
    verify_certificate, write_instance, Mode, RunReport, SweepConfig,
};
use mwm_congest::protocol::UnweightedOracle;
use mwm_congest::rational::Rat;
use mwm_congest::reduce::DEFAULT_RAISE_CAP;

#[derive(Parser)]
#[command(
    name = "mwmc",
    about = "Maximum weighted matching via reduction to cardinality matching",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleArg {
    /// Exact brute-force cardinality oracle.
    Exact,
    /// Distributed greedy maximal matching (half-approximate).
    Greedy,
}

impl From<OracleArg> for UnweightedOracle {
    fn from(o: OracleArg) -> Self {
        match o {
            OracleArg::Exact => UnweightedOracle::ExactCentralized,
            OracleArg::Greedy => UnweightedOracle::GreedyDistributed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Sequential bookkeeping only.
    Seq,
    /// Also execute and cross-check the four-round protocol.
    Dist,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Seq => Mode::Seq,
            ModeArg::Dist => Mode::Dist,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct CommonRunArgs {
    /// Approximation budget as an exact rational, e.g. 1/2.
    #[arg(long)]
    epsilon: Rat,
    /// Cardinality oracle for the unweighted instance.
    #[arg(long, value_enum, default_value = "exact")]
    oracle: OracleArg,
    /// Execution mode.
    #[arg(long, value_enum, default_value = "seq")]
    mode: ModeArg,
    /// Maximum consecutive raises of one class before a forced merge.
    #[arg(long, default_value_t = DEFAULT_RAISE_CAP)]
    raise_cap: usize,
    /// Encoded integers must stay within n^E.
    #[arg(long, default_value_t = 3)]
    poly_bound_exp: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline on one instance file and print the report as JSON.
    Run {
        /// Instance file; `-` reads standard input.
        input: String,
        #[command(flatten)]
        common: CommonRunArgs,
    },
    /// Run a seeded grid of generated instances and print a result table.
    Sweep {
        /// Comma-separated vertex counts, e.g. 4,6,8.
        #[arg(long, value_delimiter = ',')]
        ns: Vec<usize>,
        /// Comma-separated budgets, e.g. 1/2,1/4.
        #[arg(long, value_delimiter = ',')]
        epsilons: Vec<Rat>,
        /// Comma-separated seeds.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        seeds: Vec<u64>,
        /// Edges per instance; default min(2n, n(n-1)/2).
        #[arg(long)]
        edges: Option<usize>,
        /// Largest generated weight value.
        #[arg(long, default_value_t = 8)]
        weight_max: u64,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        #[command(flatten)]
        common: CommonRunArgs2,
    },
    /// Generate a seeded instance file on standard output.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 8)]
        weight_max: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        poly_bound_exp: u32,
    },
    /// Re-verify a saved JSON run report.
    Verify {
        /// Report file; `-` reads standard input.
        report: String,
    },
}

/// Sweep variant of the common flags: epsilon comes from the grid.
#[derive(Args)]
struct CommonRunArgs2 {
    #[arg(long, value_enum, default_value = "exact")]
    oracle: OracleArg,
    #[arg(long, value_enum, default_value = "dist")]
    mode: ModeArg,
    #[arg(long, default_value_t = DEFAULT_RAISE_CAP)]
    raise_cap: usize,
    #[arg(long, default_value_t = 3)]
    poly_bound_exp: u32,
}

fn read_input(path: &str) -> std::io::Result<String> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        Ok(buf)
    } else {
        fs::read_to_string(path)
    }
}

fn run() -> Result<bool, Box<dyn std::error::Error>> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { input, common } => {
            let text = read_input(&input)?;
            let inst = parse_instance(&text, &common.epsilon, common.poly_bound_exp)?;
            let report = run_pipeline(
                &inst,
                common.mode.into(),
                common.oracle.into(),
                common.raise_cap,
                common.poly_bound_exp,
            )?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            let verified = verify_certificate(&report)?;
            Ok(report.certificate_pass && verified)
        }
        Command::Sweep {
            ns,
            epsilons,
            seeds,
            edges,
            weight_max,
            format,
            common,
        } => {
            let cfg = SweepConfig {
                ns,
                epsilons,
                seeds,
                edges,
                weight_max,
                mode: common.mode.into(),
                oracle: common.oracle.into(),
                raise_cap: common.raise_cap,
                poly_bound_exp: common.poly_bound_exp,
            };
            let rows = sweep(&cfg)?;
            match format {
                FormatArg::Csv => print!("{}", sweep_to_csv(&rows)?),
                FormatArg::Json => println!("{}", sweep_to_json(&rows)?),
            }
            Ok(rows.iter().all(|r| r.certificate_pass))
        }
        Command::Gen {
            n,
            m,
            weight_max,
            seed,
            poly_bound_exp,
        } => {
            // Epsilon is a run parameter, not part of the file; any valid
            // value works for generation.
            let eps = Rat::ratio(1, 2);
            let inst = generate_instance(n, m, weight_max, seed, &eps, poly_bound_exp)?;
            print!("{}", write_instance(&inst));
            Ok(true)
        }
        Command::Verify { report } => {
            let text = read_input(&report)?;
            let report: RunReport = serde_json::from_str(&text)?;
            let verified = verify_certificate(&report)?;
            println!(
                "certificate: {}",
                if verified { "pass" } else { "FAIL" }
            );
            Ok(verified && report.certificate_pass)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
