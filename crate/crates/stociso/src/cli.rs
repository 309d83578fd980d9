//! Command implementations behind the `stociso` binary.
//!
//! Exit codes are a stable contract: 0 ok, 1 usage/parse error, 2 channel not
//! stochastic, 3 channel not a trace-norm isometry, 4 internal numeric
//! failure.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::Tolerances;
use crate::channel::{ComponentKind, compose, generate_form};
use crate::decompose::decompose;
use crate::error::Error;
use crate::files::{ChannelFile, StateFile, to_canonical_json};
use crate::verify::{VerifyConfig, verify_channel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_STOCHASTIC: i32 = 2;
pub const EXIT_NOT_ISOMETRY: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "stociso",
    about = "Verify, decompose and reverse stochastic isometries on finite-dimensional state spaces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a seeded mixed isometry channel file
    Gen(GenArgs),
    /// Run the verification predicate suite on a channel file
    Verify(VerifyArgs),
    /// Decompose a stochastic isometry into its canonical form
    Decompose(DecomposeArgs),
    /// Build the stochastic reversal map of a mixed isometry form
    Reverse(ReverseArgs),
    /// Apply a channel to a state, printing the output state
    Apply(ApplyArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Input dimension d
    pub dim_in: usize,
    /// Output dimension d̃ (at least components · d)
    pub dim_out: usize,
    /// Comma-separated weights, summing to 1
    #[arg(long, value_delimiter = ',', required = true)]
    pub weights: Vec<f64>,
    /// Comma-separated kinds: unitary|antiunitary (or u|a)
    #[arg(long, value_delimiter = ',', required = true)]
    pub kinds: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path for the channel file
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub input: PathBuf,
    /// Probe pair count (default max(16, 4·d))
    #[arg(long)]
    pub probes: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Override the decision tolerance for all predicate flags
    #[arg(long)]
    pub tol: Option<f64>,
    /// Write the full verification report here
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Override the reconstruction/isometry tolerance
    #[arg(long)]
    pub tol: Option<f64>,
    /// Output path for the recovered mixed isometry form
    #[arg(long)]
    pub out: PathBuf,
    /// Output path for the decomposition report
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReverseArgs {
    /// Channel file carrying a mixed_isometry form
    pub form: PathBuf,
    /// Output path for the reversal superoperator
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ApplyArgs {
    pub channel: PathBuf,
    pub state: PathBuf,
}

fn exit_code_for(err: &Error) -> i32 {
    match err.root() {
        Error::NotStochastic { .. } => EXIT_NOT_STOCHASTIC,
        Error::NotAnIsometry { .. } => EXIT_NOT_ISOMETRY,
        Error::Parse(_)
        | Error::Io(_)
        | Error::Json(_)
        | Error::InvalidState { .. }
        | Error::DimMismatch { .. }
        | Error::DimensionInsufficient { .. }
        | Error::WeightsNotNormalized { .. }
        | Error::NotIsometry { .. }
        | Error::RangesNotOrthogonal { .. }
        | Error::NotHermitian { .. } => EXIT_USAGE,
        _ => EXIT_NUMERIC,
    }
}

fn fail(err: &Error) -> i32 {
    eprintln!("error: {err}");
    if let Error::NotAnIsometry { pair, .. } = err.root() {
        if let Ok(json) = serde_json::to_string(pair) {
            eprintln!("failing probe pair: {json}");
        }
    }
    exit_code_for(err)
}

/// Dispatch a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Decompose(args) => cmd_decompose(&args),
        Command::Reverse(args) => cmd_reverse(&args),
        Command::Apply(args) => cmd_apply(&args),
    };
    match result {
        Ok(code) => code,
        Err(err) => fail(&err),
    }
}

fn tolerances_with(tol: Option<f64>) -> Tolerances {
    let mut t = Tolerances::default();
    if let Some(x) = tol {
        t.trace_preserving = x;
        t.positivity = x;
        t.isometry_defect = x;
        t.complete_positivity = x;
        t.reconstruction = x;
    }
    t
}

pub fn cmd_gen(args: &GenArgs) -> crate::Result<i32> {
    let kinds = args
        .kinds
        .iter()
        .map(|k| ComponentKind::parse(k))
        .collect::<crate::Result<Vec<_>>>()?;
    let form = generate_form(args.dim_in, args.dim_out, &args.weights, &kinds, args.seed)?;
    ChannelFile::from_form(&form).write(&args.out)?;
    println!(
        "wrote {} ({} -> {}, {} components, seed {})",
        args.out.display(),
        args.dim_in,
        args.dim_out,
        args.weights.len(),
        args.seed
    );
    Ok(EXIT_OK)
}

pub fn cmd_verify(args: &VerifyArgs) -> crate::Result<i32> {
    let channel = ChannelFile::read(&args.input)?.to_channel()?;
    let config = VerifyConfig {
        probes: args.probes,
        seed: args.seed,
        tol: tolerances_with(args.tol),
    };
    let report = verify_channel(&channel, &config)?;

    println!(
        "trace preserving     : {} (residual {:.3e})",
        report.trace_preserving, report.trace_residual
    );
    println!(
        "positive on probes   : {} (worst min eigenvalue {:.3e})",
        report.positive_on_probes, report.worst_min_eigenvalue
    );
    println!(
        "isometry on probes   : {} (worst defect {:.3e})",
        report.isometry_on_probes, report.worst_orthogonality_defect
    );
    println!(
        "dual support         : {} (worst residual {:.3e})",
        report.dual_support_ok, report.worst_dual_support_residual
    );
    println!(
        "completely positive  : {} (min Choi eigenvalue {:.3e})",
        report.completely_positive, report.min_choi_eigenvalue
    );
    println!("pure on probes       : {}", report.pure_on_probes);
    if let Some(fp) = &report.fingerprint {
        let pattern: Vec<String> = fp
            .entries
            .iter()
            .map(|e| format!("({:.6}, {})", e.weight, e.multiplicity))
            .collect();
        println!("fingerprint          : [{}]", pattern.join(", "));
    }

    if let Some(path) = &args.report {
        std::fs::write(path, to_canonical_json(&report)?)?;
    }

    if !report.is_stochastic() {
        return Ok(EXIT_NOT_STOCHASTIC);
    }
    if !report.is_isometry() {
        return Ok(EXIT_NOT_ISOMETRY);
    }
    Ok(EXIT_OK)
}

pub fn cmd_decompose(args: &DecomposeArgs) -> crate::Result<i32> {
    let channel = ChannelFile::read(&args.input)?.to_channel()?;
    let tol = tolerances_with(args.tol);
    let (form, report) = decompose(&channel, args.seed, &tol)?;
    ChannelFile::from_form(&form).write(&args.out)?;
    if let Some(path) = &args.report {
        std::fs::write(path, to_canonical_json(&report)?)?;
    }
    println!(
        "decomposed into {} components, reconstruction error {:.3e}",
        form.components().len(),
        report.reconstruction_error
    );
    Ok(EXIT_OK)
}

pub fn cmd_reverse(args: &ReverseArgs) -> crate::Result<i32> {
    let file = ChannelFile::read(&args.form)?;
    let form = file.as_form()?.ok_or_else(|| {
        Error::Parse("reverse needs a mixed_isometry channel file".into())
    })?;
    let reversal = form.reversal();
    ChannelFile::from_channel(&reversal).write(&args.out)?;
    let roundtrip = compose(&reversal, &form.to_channel())?;
    let residual = roundtrip.max_diff(&crate::channel::ChannelMatrix::identity(form.dim_in()));
    println!("reversal residual ||S∘T − id||_max = {residual:.3e}");
    Ok(EXIT_OK)
}

pub fn cmd_apply(args: &ApplyArgs) -> crate::Result<i32> {
    let channel = ChannelFile::read(&args.channel)?.to_channel()?;
    let state = StateFile::read(&args.state)?.to_state()?;
    if state.dim() != channel.dim_in() {
        return Err(Error::DimMismatch {
            expected: channel.dim_in(),
            got: state.dim(),
        });
    }
    let out = channel.apply(&state)?;
    print!("{}", to_canonical_json(&StateFile::from_state(&out))?);
    Ok(EXIT_OK)
}

pub fn exit_code_of_error(err: &Error) -> i32 {
    exit_code_for(err)
}
