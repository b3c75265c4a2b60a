use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use wfmgf::MultiIndex;

use crate::list::{Counts, Floats, Orders};

/// Moment-generating-function solution of Wright-Fisher drift, with
/// master-equation and Monte Carlo oracles.
///
/// Every command writes one table. CSV output starts with a single
/// `#`-prefixed JSON metadata line holding the fully resolved
/// configuration; JSON output is `{meta, rows}`. Exit status is 0 when the
/// output was written and every internal check passed, 1 on error, 3 when a
/// check or comparison failed (the report is still written).
#[derive(Parser, Debug)]
#[command(name = "wfmgf", version, args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Moments m_n(t) (two alleles) or m_β(t) (K + 1 alleles).
    Moments(MomentsArgs),
    /// Probability that the first allele is fixed by time t.
    Fixation(SeriesArgs),
    /// Probability that the first allele is lost by time t.
    Extinction(SeriesArgs),
    /// Heterozygosity 2(m_1 − m_2).
    Het(HetArgs),
    /// Mean time to absorption.
    Absorption(AbsorptionArgs),
    /// Finite-population master equation: generator, P(t), distributions, moments.
    Master(MasterArgs),
    /// Compare spectral values with the master equation or Monte Carlo.
    Compare(CompareArgs),
    /// Wright-Fisher Monte Carlo.
    Mc(McArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Moments(_) => "moments",
            Command::Fixation(_) => "fixation",
            Command::Extinction(_) => "extinction",
            Command::Het(_) => "het",
            Command::Absorption(_) => "absorption",
            Command::Master(_) => "master",
            Command::Compare(_) => "compare",
            Command::Mc(_) => "mc",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Moments(a) => &a.common,
            Command::Fixation(a) | Command::Extinction(a) => &a.common,
            Command::Het(a) => &a.common,
            Command::Absorption(a) => &a.common,
            Command::Master(a) => &a.common,
            Command::Compare(a) => &a.common,
            Command::Mc(a) => &a.common,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Scalar type for the spectral series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    /// f64 up to order 20, 2048-bit floating point above.
    Auto,
    F64,
    /// 2048-bit binary floating point.
    Hp,
    /// Exact rationals (exponentials still rounded through f64).
    Exact,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct Common {
    /// JSON file of flag values (keys are long flag names); explicit flags win.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Omit the timestamp from the metadata, making output byte-reproducible.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct MomentsArgs {
    /// Number of alleles, K + 1.
    #[arg(long, default_value_t = 2)]
    pub alleles: usize,
    /// Initial frequencies. Two alleles: one or more values, one table block
    /// each. More alleles: the K frequencies of the first K alleles.
    #[arg(long, default_value = "0.5")]
    pub p: Floats,
    /// Moment orders: `0,1,2` (two alleles) or multi-indices `1:0,0:2`.
    #[arg(long, default_value = "1,2")]
    pub orders: Orders,
    /// Times: a list or `start:stop:step`.
    #[arg(long, default_value = "0,0.5,1,2")]
    pub times: Floats,
    /// Truncation order (nmax / degmax); defaults to the largest order asked for.
    #[arg(long, alias = "degmax")]
    pub nmax: Option<u32>,
    #[arg(long, value_enum, default_value_t = Precision::Auto)]
    pub precision: Precision,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SeriesArgs {
    #[arg(long, default_value = "0.5")]
    pub p: Floats,
    #[arg(long, default_value = "0.5,1,2,5")]
    pub times: Floats,
    /// Number of eigenfunctions kept.
    #[arg(long, default_value_t = 60)]
    pub kmax: usize,
    /// Largest acceptable magnitude of the last series term.
    #[arg(long, default_value_t = 1e-10)]
    pub tail_tol: f64,
    #[arg(long, value_enum, default_value_t = Precision::Auto)]
    pub precision: Precision,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct HetArgs {
    #[arg(long, default_value = "0.5")]
    pub p: Floats,
    #[arg(long, default_value = "0,0.5,1,2")]
    pub times: Floats,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct AbsorptionArgs {
    #[arg(long, default_value = "0.5")]
    pub p: Floats,
    #[arg(long, default_value_t = 400)]
    pub kmax: usize,
    /// Largest acceptable magnitude of the last series term.
    #[arg(long, default_value_t = 1e-4)]
    pub tail_tol: f64,
    #[arg(long, value_enum, default_value_t = Precision::Auto)]
    pub precision: Precision,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum SchemeArg {
    /// Generator fixed by the diffusion moment conditions (diffusion time).
    #[value(name = "a")]
    #[serde(rename = "a")]
    A,
    /// Wright-Fisher binomial kernel minus identity (generation time).
    #[value(name = "b")]
    #[serde(rename = "b")]
    B,
    /// Multi-allele analogue of scheme a.
    #[value(name = "aK")]
    #[serde(rename = "aK")]
    AK,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    /// P(t) for each time.
    Matrix,
    /// The rate matrix B.
    Generator,
    /// Row i0 of P(t).
    Distribution,
    /// Moments of row i0 of P(t).
    Moments,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ArithArg {
    Exact,
    Float,
}

#[derive(Args, Debug, Serialize)]
pub struct MasterArgs {
    #[arg(long, value_enum, default_value_t = SchemeArg::A)]
    pub scheme: SchemeArg,
    /// Population size 2N (even).
    #[arg(long = "twoN", alias = "two-n", default_value_t = 8)]
    #[serde(rename = "twoN")]
    pub two_n: u32,
    /// Number of tracked alleles K for scheme aK.
    #[arg(long = "K", default_value_t = 2)]
    #[serde(rename = "K")]
    pub k: usize,
    /// Initial state: a count, or `a:b` for scheme aK. Defaults to the
    /// midpoint (K = 1) or an equal split.
    #[arg(long)]
    pub i0: Option<MultiIndex>,
    /// Times in the scheme's own unit (diffusion for a/aK, generations for b).
    #[arg(long, default_value = "1")]
    pub times: Floats,
    #[arg(long, value_enum, default_value_t = Emit::Moments)]
    pub emit: Emit,
    /// Largest moment degree for `--emit moments` (default 2N, or 3 for aK).
    #[arg(long = "max-order")]
    #[serde(rename = "max-order")]
    pub max_order: Option<u32>,
    /// Arithmetic for the scheme-a moment-condition solves.
    #[arg(long, value_enum, default_value_t = ArithArg::Exact)]
    pub arith: ArithArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Against {
    /// Scheme given by --scheme.
    Master,
    Mc,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct CompareArgs {
    #[arg(long, value_enum, default_value_t = Against::Master)]
    pub against: Against,
    /// Master-equation scheme (a or b) when comparing against the master equation.
    #[arg(long, value_enum, default_value_t = SchemeArg::A)]
    pub scheme: SchemeArg,
    /// Population sizes 2N (default 16 for a, 64,128 for b, 200 for mc).
    #[arg(long = "twoN", alias = "two-n")]
    #[serde(rename = "twoN")]
    pub two_n: Option<Counts>,
    /// Diffusion times (default 0.1,0.5,1,2; 0.25,0.5,1 for mc).
    #[arg(long)]
    pub times: Option<Floats>,
    /// Initial frequency for mc.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// Monte Carlo replicates.
    #[arg(long, default_value_t = 100_000)]
    pub replicates: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Tolerance for scheme a moment agreement.
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum McEmit {
    Moments,
    Fixation,
    Het,
}

#[derive(Args, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct McArgs {
    #[arg(long = "twoN", alias = "two-n", default_value_t = 200)]
    #[serde(rename = "twoN")]
    pub two_n: u32,
    /// Initial counts: `100`, or `a:b` for more alleles.
    #[arg(long, default_value = "100")]
    pub i0: MultiIndex,
    #[arg(long, default_value_t = 200)]
    pub generations: u32,
    #[arg(long, default_value_t = 10_000)]
    pub replicates: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Generations at which to record; defaults to the horizon.
    #[arg(long)]
    pub sample_times: Option<Counts>,
    #[arg(long, default_value = "1,2")]
    pub orders: Orders,
    #[arg(long, value_enum, default_value_t = McEmit::Moments)]
    pub emit: McEmit,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}
