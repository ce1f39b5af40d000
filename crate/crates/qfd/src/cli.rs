//! Command-line interface.
//!
//! Subcommands cover the full workflow: `rep` and `dof` expose the group
//! representation and degree-of-freedom counts as CSV, `synth` draws
//! chip ensembles, `stats` accumulates them, `train` fits a model,
//! `score` and `det` evaluate it, and `verify` runs the built-in
//! consistency suite. Text output goes to stdout unless `--output` is
//! given; binary artifacts always require `--output`.
//!
//! Exit codes: 0 on success, 1 on runtime or verification failure, 2 on
//! usage errors.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::chip_io;
use crate::degeneracy::DegeneracyMatrix;
use crate::detect_eval::{det_curve, score_chips};
use crate::ensemble_stats::EnsembleStats;
use crate::error::{QfdError, Result};
use crate::lattice::{LatticeKind, LatticeSpec};
use crate::point_group::GroupRep;
use crate::qfd_train::{self, train};
use crate::synth::{augment_chips, synthesise, SynthSpec};
use crate::verify::run_suite;

#[derive(Parser)]
#[command(
    name = "qfd",
    version,
    about = "Geometrically symmetrised quadratic discriminants on image chips"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the permutation table of a group representation.
    Rep(RepArgs),
    /// Print degree-of-freedom counts for one or more lattice sizes.
    Dof(DofArgs),
    /// Draw a synthetic chip ensemble.
    Synth(SynthArgs),
    /// Accumulate reduced statistics over a chip file.
    Stats(StatsArgs),
    /// Train a discriminant from target and clutter statistics.
    Train(TrainArgs),
    /// Score chips under a trained model.
    Score(ScoreArgs),
    /// Compute a detection error tradeoff curve from scored chip files.
    Det(DetArgs),
    /// Run the built-in consistency suite against one lattice.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum LatticeChoice {
    Square,
    Hexagonal,
}

impl From<LatticeChoice> for LatticeKind {
    fn from(choice: LatticeChoice) -> LatticeKind {
        match choice {
            LatticeChoice::Square => LatticeKind::Square,
            LatticeChoice::Hexagonal => LatticeKind::Hexagonal,
        }
    }
}

#[derive(Args, Clone, Copy)]
struct LatticeArgs {
    /// Lattice family.
    #[arg(long, value_enum)]
    lattice: LatticeChoice,
    /// Size parameter: side length for square, ring count for hexagonal.
    #[arg(long)]
    n: usize,
}

impl LatticeArgs {
    fn spec(self) -> Result<LatticeSpec> {
        LatticeSpec::new(self.lattice.into(), self.n)
    }
}

#[derive(Args)]
struct RepArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Subgroup selector: "full", "trivial" or a comma-separated label list.
    #[arg(long, default_value = "full")]
    selector: String,
    /// Write CSV here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DofArgs {
    /// Lattice family.
    #[arg(long, value_enum)]
    lattice: LatticeChoice,
    /// Sizes as a comma-separated list of values and inclusive ranges,
    /// e.g. "1..10,12,25".
    #[arg(long)]
    n: String,
    /// Subgroup selector: "full", "trivial" or a comma-separated label list.
    #[arg(long, default_value = "full")]
    selector: String,
    /// Write CSV here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Base seed; each chip derives its own stream from it.
    #[arg(long)]
    seed: u64,
    /// Number of chips to draw.
    #[arg(long)]
    count: u32,
    /// Length scale of the texture kernel.
    #[arg(long, default_value_t = 1.0)]
    correlation_length: f64,
    /// Marginal variance of the texture.
    #[arg(long, default_value_t = 1.0)]
    variance: f64,
    /// Peak value of the centre bump; zero yields pure clutter.
    #[arg(long, default_value_t = 0.0)]
    bump_amplitude: f64,
    /// Length scale of the centre bump.
    #[arg(long, default_value_t = 1.0)]
    bump_radius: f64,
    /// Also emit every group-transformed copy of each chip.
    #[arg(long)]
    augment: bool,
    /// Group used for augmentation.
    #[arg(long, default_value = "full")]
    selector: String,
    /// Chip file to write.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    /// Chip file to accumulate.
    #[arg(long)]
    input: PathBuf,
    /// Subgroup selector the reduction is built from.
    #[arg(long, default_value = "full")]
    selector: String,
    /// Statistics file to write.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Target-class statistics file.
    #[arg(long)]
    target: PathBuf,
    /// Clutter-class statistics file.
    #[arg(long)]
    clutter: PathBuf,
    /// Ridge weight added to the covariance diagonal.
    #[arg(long, default_value_t = qfd_train::DEFAULT_LAMBDA)]
    lambda: f64,
    /// Relative spectral truncation threshold.
    #[arg(long, default_value_t = qfd_train::DEFAULT_PINV_TOL)]
    pinv_tol: f64,
    /// Model file to write.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    /// Model file.
    #[arg(long)]
    model: PathBuf,
    /// Chip file to score.
    #[arg(long)]
    input: PathBuf,
    /// Write CSV here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct DetArgs {
    /// Model file.
    #[arg(long)]
    model: PathBuf,
    /// Target-class chip file.
    #[arg(long)]
    target: PathBuf,
    /// Clutter-class chip file.
    #[arg(long)]
    clutter: PathBuf,
    /// Write CSV here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
}

/// Parses a size list like "1..10,12,25" into sorted distinct values.
fn parse_size_list(text: &str) -> Result<Vec<usize>> {
    let invalid = |reason: String| QfdError::InvalidParameter { what: "n", reason };
    let parse_one = |part: &str| -> Result<usize> {
        part.trim()
            .parse::<usize>()
            .map_err(|_| invalid(format!("{part:?} is not a number")))
    };
    let mut sizes = Vec::new();
    for part in text.split(',') {
        if let Some((start, end)) = part.split_once("..") {
            let start = parse_one(start)?;
            let end = parse_one(end)?;
            if start == 0 || end < start {
                return Err(invalid(format!("{part:?} is not an increasing range")));
            }
            sizes.extend(start..=end);
        } else {
            let value = parse_one(part)?;
            if value == 0 {
                return Err(invalid("sizes start at 1".into()));
            }
            sizes.push(value);
        }
    }
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.is_empty() {
        return Err(invalid("no sizes given".into()));
    }
    Ok(sizes)
}

fn emit_text(output: Option<&Path>, content: &str) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, content)?,
        None => std::io::stdout().write_all(content.as_bytes())?,
    }
    Ok(())
}

fn run_rep(args: &RepArgs) -> Result<()> {
    let rep = GroupRep::by_selector(args.lattice.spec()?, &args.selector)?;
    let mut out = String::from("element,destination,source\n");
    let pixels = rep.lattice().pixel_count();
    for op in rep.ops() {
        for dest in 1..=pixels {
            let source = op.source_pixel(rep.lattice().index2(dest)?);
            writeln!(out, "{},{dest},{}", op.label(), source.get()).expect("string write");
        }
    }
    emit_text(args.output.as_deref(), &out)
}

fn run_dof(args: &DofArgs) -> Result<()> {
    let mut out = String::from("n,N,linear,quadratic,total\n");
    for n in parse_size_list(&args.n)? {
        let spec = LatticeSpec::new(args.lattice.into(), n)?;
        let rep = GroupRep::by_selector(spec, &args.selector)?;
        let dof = DegeneracyMatrix::build(&rep).dof();
        writeln!(
            out,
            "{n},{},{},{},{}",
            spec.pixel_count(),
            dof.linear,
            dof.quadratic,
            dof.total()
        )
        .expect("string write");
    }
    emit_text(args.output.as_deref(), &out)
}

fn run_synth(args: &SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        lattice: args.lattice.spec()?,
        seed: args.seed,
        count: args.count,
        correlation_length: args.correlation_length,
        variance: args.variance,
        bump_amplitude: args.bump_amplitude,
        bump_radius: args.bump_radius,
    };
    let mut chips = synthesise(&spec)?;
    if args.augment {
        let rep = GroupRep::by_selector(spec.lattice, &args.selector)?;
        chips = augment_chips(&rep, &chips)?;
    }
    chip_io::save_chips(&args.output, &chips)
}

fn run_stats(args: &StatsArgs) -> Result<()> {
    let chips = chip_io::load_chips(&args.input)?;
    let rep = GroupRep::by_selector(chips.lattice(), &args.selector)?;
    let dm = DegeneracyMatrix::build(&rep);
    let mut stats = EnsembleStats::new(&dm);
    for chip in chips.chips() {
        stats.accumulate(&dm, chip)?;
    }
    chip_io::save_stats(&args.output, &stats)
}

fn run_train(args: &TrainArgs) -> Result<()> {
    let target = chip_io::load_stats(&args.target)?;
    let clutter = chip_io::load_stats(&args.clutter)?;
    let report = train(&target, &clutter, args.lambda, args.pinv_tol)?;
    chip_io::save_model(&args.output, &report.model)?;
    let mut out = String::from("dof,effective_rank,cutoff,objective\n");
    writeln!(
        out,
        "{},{},{},{}",
        report.model.coeffs().len(),
        report.effective_rank,
        report.cutoff,
        report.objective
    )
    .expect("string write");
    std::io::stdout().write_all(out.as_bytes())?;
    Ok(())
}

fn load_model_and_reduction(path: &Path) -> Result<(crate::qfd_train::QfdModel, DegeneracyMatrix)> {
    let model = chip_io::load_model(path)?;
    let (_, dm) = model.rebuild_reduction()?;
    Ok((model, dm))
}

fn run_score(args: &ScoreArgs) -> Result<()> {
    let (model, dm) = load_model_and_reduction(&args.model)?;
    let chips = chip_io::load_chips(&args.input)?;
    let scores = score_chips(&model, &dm, chips.chips())?;
    let mut out = String::from("score\n");
    for score in scores {
        writeln!(out, "{score}").expect("string write");
    }
    emit_text(args.output.as_deref(), &out)
}

fn run_det(args: &DetArgs) -> Result<()> {
    let (model, dm) = load_model_and_reduction(&args.model)?;
    let target = chip_io::load_chips(&args.target)?;
    let clutter = chip_io::load_chips(&args.clutter)?;
    let target_scores = score_chips(&model, &dm, target.chips())?;
    let clutter_scores = score_chips(&model, &dm, clutter.chips())?;
    let curve = det_curve(&target_scores, &clutter_scores)?;
    let mut out = String::from("threshold,p_fa,p_miss,se_fa,se_miss\n");
    for point in curve {
        writeln!(
            out,
            "{},{},{},{},{}",
            point.threshold, point.p_fa, point.p_miss, point.se_fa, point.se_miss
        )
        .expect("string write");
    }
    emit_text(args.output.as_deref(), &out)
}

fn run_verify(args: &VerifyArgs) -> Result<bool> {
    let report = run_suite(args.lattice.spec()?);
    let mut out = String::new();
    for check in &report.checks {
        let status = if check.passed { "PASS" } else { "FAIL" };
        writeln!(out, "{status} {} ({})", check.name, check.detail).expect("string write");
    }
    std::io::stdout().write_all(out.as_bytes())?;
    Ok(report.all_passed())
}

/// Parses arguments from the process environment and runs one command,
/// returning the process exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Rep(args) => run_rep(args),
        Command::Dof(args) => run_dof(args),
        Command::Synth(args) => run_synth(args),
        Command::Stats(args) => run_stats(args),
        Command::Train(args) => run_train(args),
        Command::Score(args) => run_score(args),
        Command::Det(args) => run_det(args),
        Command::Verify(args) => {
            return match run_verify(args) {
                Ok(true) => 0,
                Ok(false) => 1,
                Err(e) => {
                    eprintln!("error: {e}");
                    1
                }
            };
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_lists_accept_ranges_and_values() {
        assert_eq!(parse_size_list("3").unwrap(), vec![3]);
        assert_eq!(parse_size_list("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert!(parse_size_list("1..3,7,5,reverse-dup,").is_err());
        assert_eq!(
            parse_size_list("1..3,7,5").unwrap(),
            vec![1, 2, 3, 5, 7]
        );
        assert_eq!(parse_size_list("2,2,2").unwrap(), vec![2]);
        assert!(parse_size_list("0..3").is_err());
        assert!(parse_size_list("5..2").is_err());
        assert!(parse_size_list("").is_err());
    }
}
