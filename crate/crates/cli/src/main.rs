//! `germlab` — numerical experiments on the metric geometry of set-germs.
//!
//! Every subcommand emits a machine-readable report (JSON verdicts, CSV data
//! series) tagged with a run manifest. Exit codes: 0 pass/complete, 2 fail
//! verdict, 3 inconclusive, 1 error, 64 usage.

mod commands;
mod report;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "germlab", version, about = "metric geometry of set-germs at the origin")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Options shared by every report-producing subcommand.
#[derive(Args)]
struct OutputOpts {
    /// report destination (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// json: verdict report; csv: the command's data series
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct RadiiOpts {
    /// radius window `a:b`, sampled log-uniformly
    #[arg(long, default_value = "1e-3:1e-1", value_parser = parse_window)]
    radii: (f64, f64),
    /// number of radii in the window
    #[arg(long, default_value_t = 12)]
    rungs: usize,
}

impl RadiiOpts {
    fn ladder(&self) -> Vec<f64> {
        germlab_core::seatangle::log_radii(self.radii.0, self.radii.1, self.rungs)
    }
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected `a:b`, got `{s}`"))?;
    let a: f64 = a.trim().parse().map_err(|e| format!("bad lower radius: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("bad upper radius: {e}"))?;
    if !(a > 0.0 && a < b && b <= 1.0) {
        return Err(format!("need 0 < a < b <= 1, got {a}:{b}"));
    }
    Ok((a, b))
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in germ catalog
    Catalog,
    /// Check a germ-spec file: schema, expressions, origin-adherence
    Validate { file: PathBuf },
    /// Inner/outer distance ratio scan (Lipschitz normal embedding test)
    Lne {
        germ: String,
        #[command(flatten)]
        radii: RadiiOpts,
        /// Dijkstra sources per shell
        #[arg(long, default_value_t = 6)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Tangent-cone dimension from the sea-tangle volume law
    DimCone {
        germ: String,
        #[arg(long, default_value_t = 1.25)]
        d: f64,
        #[arg(long = "C", default_value_t = 1.0)]
        c: f64,
        #[command(flatten)]
        radii: RadiiOpts,
        #[arg(long, default_value_t = 20000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Monte Carlo sea-tangle volumes over a radius ladder
    StVolume {
        germ: String,
        #[arg(long, default_value_t = 1.25)]
        d: f64,
        #[arg(long = "C", default_value_t = 1.0)]
        c: f64,
        #[command(flatten)]
        radii: RadiiOpts,
        #[arg(long, default_value_t = 20000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Estimate the tangent cone; writes a cone germ-spec file
    TangentCone {
        germ: String,
        #[arg(long, default_value_t = 1e-1)]
        r_start: f64,
        #[arg(long, default_value_t = 3.0)]
        decades: f64,
        /// Hausdorff tolerance (`auto` = 3x the sampling gap)
        #[arg(long, default_value = "auto")]
        tol: String,
        /// directions per shell
        #[arg(long, default_value_t = 400)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Betti numbers of the link at one radius
    LinkTopology {
        germ: String,
        #[arg(long, default_value_t = 0.1)]
        r: f64,
        #[arg(long, default_value_t = 300)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Compare the link Betti numbers of two germs
    CompareLinks {
        germ_a: String,
        germ_b: String,
        #[arg(long, default_value_t = 0.1)]
        r: f64,
        #[arg(long, default_value_t = 300)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Hölder extension pair (Phi, Psi) from matched samples, with checks
    Extend {
        /// `example1` or a CSV of matched pairs with columns x_1..x_n,y_1..y_m
        #[arg(long)]
        map: String,
        #[arg(long, default_value_t = 0.9)]
        alpha: f64,
        /// checks to run (repeatable)
        #[arg(long, value_enum, default_values_t = vec![Check::Roundtrip, Check::Graph, Check::Constants])]
        check: Vec<Check>,
        /// base samples for the built-in example map
        #[arg(long, default_value_t = 2000)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Fit Hölder exponents of an explicit coordinate map on a germ
    HolderFit {
        germ: String,
        /// coordinate expressions in x1..xn, separated by `;`
        #[arg(long)]
        map: String,
        /// check the bi-α-Hölder bounds at this exponent
        #[arg(long)]
        alpha: Option<f64>,
        #[command(flatten)]
        radii: RadiiOpts,
        #[arg(long, default_value_t = 200)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Lemma-level verdicts and the property suites
    VerifyLemma {
        #[command(subcommand)]
        which: Lemma,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Check {
    Roundtrip,
    Graph,
    Constants,
}

#[derive(Subcommand)]
enum Lemma {
    /// Volume scaling law vol ~ r^(n + (d-1)(n-a)) with integer dimension a
    Vol {
        #[arg(long)]
        germ: String,
        #[arg(long, default_value_t = 1.5)]
        d: f64,
        #[arg(long = "C", default_value_t = 1.0)]
        c: f64,
        #[command(flatten)]
        radii: RadiiOpts,
        #[arg(long, default_value_t = 20000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Sea-tangle image inclusion under the radial power map
    #[command(name = "4")]
    Four {
        #[arg(long, default_value = "line")]
        germ: String,
        #[arg(long, default_value_t = 1.3)]
        d: f64,
        #[arg(long = "C", default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0 / 1.1)]
        alpha: f64,
        #[command(flatten)]
        radii: RadiiOpts,
        #[arg(long, default_value_t = 40)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Volume distortion bound of a Hölder map on a full-dimensional germ
    #[command(name = "3")]
    Three {
        #[arg(long, default_value = "rk_in_rn(2,2)")]
        germ: String,
        #[arg(long, default_value_t = 0.9)]
        alpha: f64,
        #[command(flatten)]
        radii: RadiiOpts,
        #[arg(long, default_value_t = 40000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Shell volume ratio law vol(B_rho) <= K (rho/r)^k vol(B_r)
    ShellRatio {
        #[arg(long)]
        germ: String,
        /// germ dimension k in the ratio law
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.02)]
        r: f64,
        #[arg(long, default_value_t = 0.2)]
        rho: f64,
        #[arg(long, default_value_t = 1200)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Mutual sea-tangle inclusion of two germs
    StEquiv {
        #[arg(long)]
        germ: String,
        #[arg(long)]
        germ_b: String,
        #[command(flatten)]
        radii: RadiiOpts,
        #[arg(long, default_value_t = 400)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Cross-module property suites; 100% pass required
    AllProperties {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::dispatch(cli.command) {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
