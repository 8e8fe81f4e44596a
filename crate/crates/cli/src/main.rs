//! `semicross`: JSON-driven command line front end.

mod commands;
mod report;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "semicross",
    version,
    about = "Ball automorphisms, nest representations and semicrossed products"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Seed for every randomised step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Override the pass/fail tolerance of the command.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Attempts allowed in seeded searches.
    #[arg(long, global = true, default_value_t = 1000)]
    pub max_tries: usize,
    /// Print only the JSON report.
    #[arg(long, global = true)]
    pub json: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Automorphisms of the unit ball.
    #[command(subcommand)]
    Aut(AutCmd),
    /// Nest representations.
    #[command(subcommand)]
    Rep(RepCmd),
    /// Semicrossed products.
    #[command(subcommand)]
    Sc(ScCmd),
    /// The commutative (d-shift) case.
    #[command(subcommand)]
    Ds(DsCmd),
    /// Seeded property suites.
    Verify {
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
        /// Cases per property.
        #[arg(long, default_value_t = 40)]
        cases: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum AutCmd {
    /// Normalised form, type and lift.
    Show { phi: PathBuf },
    /// `a` after `b`.
    Compose { a: PathBuf, b: PathBuf },
    /// Inverse automorphism.
    Inverse { phi: PathBuf },
    /// Fixed points in the closed ball.
    Fix { phi: PathBuf },
    /// Elliptic, parabolic, hyperbolic or identity.
    Classify { phi: PathBuf },
    /// Conjugacy verdict with certificate.
    Conjugate {
        phi1: PathBuf,
        phi2: PathBuf,
        /// Exit 1 unless the verdict is Conjugate.
        #[arg(long)]
        assert: bool,
    },
    /// Seeded random automorphism.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long = "type", value_enum)]
        kind: Option<Kind>,
    },
}

#[derive(Subcommand, Debug)]
pub enum RepCmd {
    /// `{points, word, delta?}`
    Rho { input: PathBuf },
    /// `{points, word, delta?, v}`
    Corner { input: PathBuf },
    /// `{points, word, delta?}`
    Surjective { input: PathBuf },
    /// `{poly, points?, eps?}`
    Separate { input: PathBuf },
}

#[derive(Subcommand, Debug)]
pub enum ScCmd {
    /// Maximal analytic sets of the character space.
    Census { phi: PathBuf },
    /// `{phi, z, b, c}`
    Srep { input: PathBuf },
    /// `{phi, points, candidates?}`
    ZeroUCert { input: PathBuf },
    /// `{element, points?, eps?}`
    Ideal { input: PathBuf },
    /// Isomorphism of the two semicrossed products.
    Decide {
        phi1: PathBuf,
        phi2: PathBuf,
        /// Exit 1 unless the verdict is Isomorphic.
        #[arg(long)]
        assert: bool,
    },
    /// `{phi, z, blocks}`
    Orbit { input: PathBuf },
}

#[derive(Subcommand, Debug)]
pub enum DsCmd {
    /// `{poly, pair}` or `{poly, z}`
    Eval { input: PathBuf },
    /// Basis and weights of a symmetric Fock truncation.
    Symfock {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        level: usize,
    },
    /// Isomorphism in the commutative case.
    Decide {
        phi1: PathBuf,
        phi2: PathBuf,
        /// Exit 1 unless the verdict is Isomorphic.
        #[arg(long)]
        assert: bool,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    All,
    Cball,
    Freepoly,
    Nestrep,
    Semicrossed,
    Dshift,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Identity,
    Elliptic,
    Parabolic,
    Hyperbolic,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = commands::run(&cli);
    print!("{}", outcome.stdout);
    if !cli.global.json && !outcome.prose.is_empty() {
        eprintln!("{}", outcome.prose);
    }
    ExitCode::from(outcome.code)
}
