use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "cfdim", version, about = "Experiments on continued-fraction digits, the Gauss measure and its Markov approximations")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct GlobalArgs {
    /// Master seed; generated from the clock and recorded when absent.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// JSON object of flag values; its entries override the command line.
    /// A "command" entry such as "dim entropy" selects the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Leave the wall-clock time out of the header.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Continued-fraction digits, cylinders and finite evaluation.
    #[command(subcommand)]
    Cf(CfCmd),
    /// The Gauss measure dx / ((1+x) ln 2) on cylinders.
    #[command(subcommand)]
    Measure(MeasureCmd),
    /// Digit processes: the Gauss measure, i.i.d. laws and k-step chains.
    #[command(subcommand)]
    Process(ProcessCmd),
    /// Entropy, Lyapunov exponent and dimension h / gamma.
    #[command(subcommand)]
    Dim(DimCmd),
    /// Frequencies of a digit block along a subsequence and their deviations.
    #[command(subcommand)]
    Dev(DevCmd),
    /// Generic f-expansions x = f(a1 + f(a2 + ...)).
    #[command(subcommand)]
    Fexp(FexpCmd),
    /// Reproduction checks.
    #[command(subcommand)]
    Repro(ReproCmd),
}

#[derive(Subcommand, Debug)]
pub enum CfCmd {
    /// First n partial quotients a_i of x = [0; a1, a2, ...].
    Digits {
        /// "p/q", "sqrt:N" (fractional part of sqrt N) or a decimal.
        #[arg(long)]
        x: String,
        #[arg(long, default_value_t = 10)]
        n: usize,
        /// Precision of "sqrt:N" points.
        #[arg(long, default_value_t = 256)]
        bits: u32,
    },
    /// The cylinder I_w of points whose expansion starts with w; its
    /// length is 1 / (q_n (q_n + q_{n-1})).
    Cylinder {
        #[arg(long)]
        word: String,
    },
    /// The rational [0; a1, ..., an].
    Eval {
        #[arg(long)]
        word: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum MeasureCmd {
    /// Gauss mass of the cylinder I_w.
    Cylinder {
        #[arg(long)]
        word: String,
        /// Evaluate at this many bits instead of double precision.
        #[arg(long)]
        bits: Option<u32>,
    },
    /// mu(I_uv) / (mu(I_u) mu(I_v)), bounded above and below by constants.
    Ratio {
        #[arg(long)]
        u: String,
        #[arg(long)]
        v: String,
    },
    /// |mu(I_bac) - mu(I_ac) mu(I_ba) / mu(I_a)|: nonzero means the digits
    /// are not a Markov chain of order |a|.
    Defect {
        #[arg(long)]
        b: String,
        #[arg(long, default_value = "")]
        a: String,
        #[arg(long)]
        c: u64,
    },
    /// Search for a positive defect with |a| = k over small digits.
    Witness {
        #[arg(long, default_value_t = 0)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        max_digit: u64,
        #[arg(long, default_value_t = 1)]
        max_m: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum ProcessCmd {
    /// Validate a process description and print it in JSON form.
    Build {
        /// "gauss", "gauss-markov:K", "uniform:D", "point:D", a JSON spec or @file.
        #[arg(long, default_value = "gauss")]
        process: String,
    },
    /// Draw a digit path; the same seed gives the same path.
    Sample {
        #[arg(long, default_value = "gauss")]
        process: String,
        #[arg(long, default_value_t = 20)]
        n: usize,
    },
    /// P(A_1 ... A_|w| = w).
    Mass {
        #[arg(long, default_value = "gauss")]
        process: String,
        #[arg(long)]
        word: String,
    },
    /// Checks sum_c p_{cb} p_{cb,d} = p_{bd} for the order-k Gauss chain,
    /// truncated at c <= cap, against a bound on the neglected terms.
    Stationarity {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value = "")]
        b: String,
        #[arg(long)]
        d: u64,
        #[arg(long, default_value_t = 10_000)]
        cap: u64,
    },
    /// P(uv) / (P(u) P(v)) for the process.
    Psiratio {
        #[arg(long, default_value = "gauss")]
        process: String,
        #[arg(long)]
        u: String,
        #[arg(long)]
        v: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EntropyMethod {
    Series,
    Smb,
}

#[derive(Subcommand, Debug)]
pub enum DimCmd {
    /// pi^2 / (6 ln 2), the Lyapunov exponent and entropy of the Gauss map.
    GaussExact,
    /// Entropy rate. "series": exact inner sum over the next digit of the
    /// order-k Gauss chain with a bounded tail, Monte Carlo over states.
    /// "smb": -(1/n) ln P(A_1..A_n) along sampled paths.
    Entropy {
        #[arg(long, value_enum, default_value_t = EntropyMethod::Series)]
        method: EntropyMethod,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 4096)]
        cap: u64,
        #[arg(long, default_value = "gauss")]
        process: String,
        #[arg(long, default_value_t = 1000)]
        n: usize,
    },
    /// -(1/n) ln |I_n(x)| along sampled paths, with a Birkhoff average of
    /// -2 ln T^j x as a second estimate.
    Lyapunov {
        #[arg(long, default_value = "gauss")]
        process: String,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 500)]
        samples: usize,
    },
    /// H(p) / (2 E_p ln Q) for i.i.d. digits with law p.
    Kp {
        /// "uniform:D", "point:D", a JSON law or @file.
        #[arg(long, default_value = "uniform:2")]
        law: String,
        #[arg(long, default_value_t = 20_000)]
        n: usize,
        #[arg(long, default_value_t = 8)]
        samples: usize,
    },
    /// For the order-k Gauss chain: dim >= 1 - 2^(3-k), entropy at least
    /// the Gauss entropy, |gamma_k - gamma_G| <= 2^(3-k).
    Gap {
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 4000)]
        outer_samples: usize,
        #[arg(long, default_value_t = 4096)]
        inner_cap: u64,
        #[arg(long, default_value_t = 1000)]
        path_len: usize,
        #[arg(long, default_value_t = 400)]
        lyapunov_samples: usize,
    },
    /// ln P(I_n(x)) / ln |I_n(x)| averaged over sampled paths.
    Local {
        #[arg(long, default_value = "gauss")]
        process: String,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Plain,
    Tilted,
}

#[derive(Subcommand, Debug)]
pub enum DevCmd {
    /// (1/n) sum_i 1_a(T^{q(i)} x) on one sampled path.
    Frequency {
        #[arg(long, default_value = "gauss")]
        process: String,
        #[arg(long)]
        a: String,
        /// "identity", "arithmetic:C", "explicit:q1,q2,..." or JSON.
        #[arg(long, default_value = "identity")]
        q: String,
        #[arg(long)]
        n: usize,
    },
    /// Gauss probability that the frequency misses mu(I_a) by more than delta.
    Probability {
        #[arg(long)]
        a: String,
        #[arg(long, default_value = "identity")]
        q: String,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = EstimatorArg::Tilted)]
        estimator: EstimatorArg,
    },
    /// Deviation probabilities over increasing n with a log-linear fit.
    Decay {
        #[arg(long, default_value = "1")]
        a: String,
        #[arg(long, default_value = "identity")]
        q: String,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        #[arg(long, value_delimiter = ',', default_value = "10,25,50,100,200")]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = EstimatorArg::Tilted)]
        estimator: EstimatorArg,
    },
    /// Same event as `probability`, under any digit process.
    GammaMass {
        #[arg(long, default_value = "gauss")]
        process: String,
        #[arg(long)]
        a: String,
        #[arg(long, default_value = "identity")]
        q: String,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CdfArg {
    Lebesgue,
    Gauss,
    Ulam,
}

#[derive(Subcommand, Debug)]
pub enum FexpCmd {
    /// Digits a_i = floor(f^{-1}(r_{i-1})).
    Digits {
        /// "cf", "base-M" or a JSON scheme.
        #[arg(long, default_value = "cf")]
        scheme: String,
        #[arg(long)]
        x: String,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 256)]
        bits: u32,
    },
    /// Invariant density of T from the Ulam discretisation of its transfer
    /// operator.
    Ulam {
        #[arg(long, default_value = "cf")]
        scheme: String,
        #[arg(long, default_value_t = 256)]
        bins: usize,
        #[arg(long, default_value_t = 1000)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Grid checks of smoothness, eventual expansion and bounded distortion.
    Conditions {
        #[arg(long, default_value = "cf")]
        scheme: String,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long, default_value_t = 4)]
        ell_max: usize,
    },
    /// Distance of S = F T F^{-1} from affine on F(branch a); Markov digits
    /// would make it affine.
    Obstruction {
        #[arg(long, default_value = "cf")]
        scheme: String,
        #[arg(long, value_enum, default_value_t = CdfArg::Gauss)]
        cdf: CdfArg,
        #[arg(long, default_value_t = 1)]
        a: u64,
        #[arg(long, default_value_t = 3)]
        probes: usize,
        /// Bins for the Ulam distribution function.
        #[arg(long, default_value_t = 512)]
        bins: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum ReproCmd {
    /// Run every reproduction check and print a pass/fail table.
    All,
}
