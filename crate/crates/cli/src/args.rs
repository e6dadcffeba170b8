use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "psidocalc", version, about = "Symbol calculus and numeric checks for ε-parameterized pseudo-differential operators")]
pub struct Cli {
    /// JSON file of option values keyed by long flag name; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every sampled estimate (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Add the wall time to the report (makes reports run-dependent).
    #[arg(long, global = true)]
    pub timing: bool,
    /// Write the JSON report here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sampled membership in S^m_{Λ,ρ,N}.
    CheckClass(CheckClassArgs),
    /// Sampled membership of an amplitude a(x, y, ξ) in its λ-envelope class.
    CheckAmplitude(CheckAmplitudeArgs),
    /// Sampled negligibility of a symbol of order m.
    CheckNegligible(CheckNegligibleArgs),
    /// Sampled rapid decrease (smoothing symbol).
    CheckSmoothing(CheckSmoothingArgs),
    /// Hypoellipticity certificate.
    Certify(CertifyArgs),
    /// Parametrix terms p_0..p_K and the residual order.
    Parametrix(ParametrixArgs),
    /// Asymptotic expansion of the composition b1 ♯ b2.
    Compose(ComposeArgs),
    /// θ-symbol of an amplitude, optionally moved to a second θ.
    Theta(ThetaArgs),
    /// Applies Op(a) to a grid function.
    Apply(ApplyArgs),
    /// Weak equality of two grid-function families.
    WeakEq(WeakEqArgs),
    /// Regularized oscillatory integral ∫ e^{iω} a.
    OscInt(OscIntArgs),
    /// Parametrix regularity experiment on a Gaussian packet family.
    Regularity(RegularityArgs),
    /// Runs a canned experiment suite.
    Reproduce(ReproduceArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassKind {
    /// One ε-exponent N for all derivatives.
    Regular,
    /// ε-exponent reported per derivative order.
    Plain,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SideArg {
    Left,
    Right,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum VariantArg {
    #[value(name = "A")]
    A,
    #[value(name = "Atilde")]
    Atilde,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Examples,
    Counterexamples,
    Regularity,
}

/// Box and ε-grid of the sampled checks.
#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SamplingArgs {
    /// Half-width L of the sample box [−L, L]^d.
    #[arg(long = "box")]
    #[serde(rename = "box")]
    pub box_half_width: Option<f64>,
    /// Number of random sample points.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Smallest j in the ε-grid 2^{−j}.
    #[arg(long)]
    pub eps_j_min: Option<i32>,
    /// Largest j in the ε-grid 2^{−j}.
    #[arg(long)]
    pub eps_j_max: Option<i32>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CheckClassArgs {
    /// Symbol in x1..xn, xi1..xin.
    #[arg(long)]
    pub symbol: Option<String>,
    /// Weight: `japanese`, `qh:M1,...,M2n`, or a JSON weight object.
    #[arg(long)]
    pub weight: Option<String>,
    /// Order m.
    #[arg(long)]
    pub m: Option<f64>,
    /// Type ρ ∈ (0, 1].
    #[arg(long)]
    pub rho: Option<f64>,
    /// ε-exponent N.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n_eps: Option<i64>,
    /// Largest derivative order |α|.
    #[arg(long)]
    pub alpha_max: Option<u32>,
    /// `regular` (uniform N) or `plain` (N per derivative order).
    #[arg(long, value_enum)]
    pub class: Option<ClassKind>,
    #[command(flatten)]
    #[serde(flatten)]
    pub sampling: SamplingArgs,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CheckAmplitudeArgs {
    /// Amplitude in x1..xn, y1..yn, xi1..xin.
    #[arg(long)]
    pub amplitude: Option<String>,
    /// Weight: `japanese`, `qh:M1,...,M2n`, or a JSON weight object.
    #[arg(long)]
    pub weight: Option<String>,
    /// Order m.
    #[arg(long)]
    pub m: Option<f64>,
    /// Growth m′ in ⟨x − y⟩; searched when absent.
    #[arg(long)]
    pub m_prime: Option<f64>,
    /// Type ρ ∈ (0, 1].
    #[arg(long)]
    pub rho: Option<f64>,
    /// ε-exponent N.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n_eps: Option<i64>,
    /// Largest derivative order |α + β + γ|.
    #[arg(long)]
    pub alpha_max: Option<u32>,
    #[command(flatten)]
    #[serde(flatten)]
    pub sampling: SamplingArgs,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CheckNegligibleArgs {
    /// Symbol in x1..xn, xi1..xin.
    #[arg(long)]
    pub symbol: Option<String>,
    /// Weight: `japanese`, `qh:M1,...,M2n`, or a JSON weight object.
    #[arg(long)]
    pub weight: Option<String>,
    /// Order m.
    #[arg(long)]
    pub m: Option<f64>,
    /// Type ρ ∈ (0, 1].
    #[arg(long)]
    pub rho: Option<f64>,
    /// Largest ε-power q tested.
    #[arg(long)]
    pub q_max: Option<u32>,
    /// Largest derivative order |α|.
    #[arg(long)]
    pub alpha_max: Option<u32>,
    #[command(flatten)]
    #[serde(flatten)]
    pub sampling: SamplingArgs,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CheckSmoothingArgs {
    /// Symbol in x1..xn, xi1..xin.
    #[arg(long)]
    pub symbol: Option<String>,
    /// Largest |α| + |β| in z^α ∂^β a.
    #[arg(long)]
    pub order: Option<u32>,
    /// ε-exponent N.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n_eps: Option<i64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub sampling: SamplingArgs,
}

/// The symbol and certificate parameters shared by certify, parametrix and regularity.
#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct HypoArgs {
    /// Symbol in x1..xn, xi1..xin.
    #[arg(long)]
    pub symbol: Option<String>,
    /// Weight: `japanese`, `qh:M1,...,M2n`, or a JSON weight object.
    #[arg(long)]
    pub weight: Option<String>,
    /// Claimed order m (defaults to l).
    #[arg(long)]
    pub m: Option<f64>,
    /// Lower-bound order l.
    #[arg(long)]
    pub l: Option<f64>,
    /// Type ρ ∈ (0, 1].
    #[arg(long)]
    pub rho: Option<f64>,
    /// Claimed ε-exponent N of the symbol class.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub n_eps: Option<i64>,
    /// Radius R outside which the lower bound must hold.
    #[arg(long = "R")]
    #[serde(rename = "R")]
    pub radius: Option<f64>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CertifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub hypo: HypoArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub sampling: SamplingArgs,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ParametrixArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub hypo: HypoArgs,
    /// Truncation order K.
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<u32>,
    /// Left (PA = I + R) or right (AQ = I + R) parametrix.
    #[arg(long, value_enum)]
    pub side: Option<SideArg>,
    /// Also write the terms with their coefficient lists to this JSON file.
    #[arg(long)]
    pub emit_terms: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub sampling: SamplingArgs,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ComposeArgs {
    /// Left symbol.
    #[arg(long)]
    pub b1: Option<String>,
    /// Right symbol.
    #[arg(long)]
    pub b2: Option<String>,
    /// Highest derivative order kept (defaults to the exact finite expansion).
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<u32>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ThetaArgs {
    /// Amplitude in x1..xn, y1..yn, xi1..xin.
    #[arg(long)]
    pub amplitude: Option<String>,
    /// θ per coordinate, comma-separated rationals such as `1/2`.
    #[arg(long)]
    pub theta: Option<String>,
    /// Second θ to move the symbol to.
    #[arg(long)]
    pub to: Option<String>,
    /// Highest derivative order kept.
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<u32>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ApplyArgs {
    /// Symbol in x1..xn, xi1..xin.
    #[arg(long)]
    pub symbol: Option<String>,
    /// Input grid file (binary with a `.json` sidecar).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output grid file.
    #[arg(long = "grid-out")]
    #[serde(rename = "grid-out")]
    pub grid_out: Option<PathBuf>,
    /// Quantization `A` or `Atilde`.
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    /// Mollifier `plateau:inner,outer` (default plateau:1,2).
    #[arg(long)]
    pub mollifier: Option<String>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct WeakEqArgs {
    /// Grid files of the first family, one per ε.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub u: Option<Vec<PathBuf>>,
    /// Grid files of the second family, matched by ε.
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    pub v: Option<Vec<PathBuf>>,
    /// Largest total degree of the Hermite test functions.
    #[arg(long)]
    pub test_degree: Option<u32>,
    /// Mollifier `plateau:inner,outer` (default plateau:1,2).
    #[arg(long)]
    pub mollifier: Option<String>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct OscIntArgs {
    /// Polynomial amplitude in x1..xn, xi1..xin (times the optional Gaussian damping).
    #[arg(long)]
    pub amplitude: Option<String>,
    /// Real homogeneous phase in x1..xn, xi1..xin (default −x·ξ).
    #[arg(long)]
    pub phase: Option<String>,
    /// Multiply the amplitude by exp(−s|x|²) in the x-variables.
    #[arg(long)]
    pub damping: Option<f64>,
    /// Agreement tolerance of the two regularizations.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// ε at which ε-dependent coefficients are evaluated (default 1).
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RegularityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub hypo: HypoArgs,
    /// Largest truncation order K.
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<u32>,
    /// Frequency k of the packet e^{−|x|²/2} e^{ik·x_1}.
    #[arg(long)]
    pub packet_frequency: Option<f64>,
    /// Grid half-width.
    #[arg(long = "grid-L")]
    #[serde(rename = "grid-L")]
    pub grid_half_width: Option<f64>,
    /// Grid points per axis.
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Smallest j of the family ε = 2^{−j}.
    #[arg(long)]
    pub family_j_min: Option<i32>,
    /// Largest j of the family ε = 2^{−j}.
    #[arg(long)]
    pub family_j_max: Option<i32>,
    #[command(flatten)]
    #[serde(flatten)]
    pub sampling: SamplingArgs,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ReproduceArgs {
    /// Suite name.
    #[arg(value_enum)]
    pub suite: Option<Suite>,
}
