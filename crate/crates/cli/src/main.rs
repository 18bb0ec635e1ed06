//! `mgp` — simulate measurement-induced geometric phases through the
//! three-stage polarization interferometer, locate the topological
//! transition, map the (w0, gamma) phase diagram and fit beam-displacer
//! imperfections to measured curves.

mod config;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use mgp_core::gafit::{evolve, loss};
use mgp_core::io::{
    read_experiment_records, write_alpha_curve, write_diagram, write_fringe, write_history,
    write_preamble, ALPHA_CURVE_HEADER,
};
use mgp_core::optics::{default_delta_grid, interference_readout};
use mgp_core::phase::critical_strength;
use mgp_core::scan::{chi_curve_vs_alpha, locate_transition, phase_diagram};

/// Exit status 2 marks configuration and input-file problems, 1 marks
/// computational failures (no transition, failed validation battery).
const EXIT_USAGE: u8 = 2;
const EXIT_FAILURE: u8 = 1;

#[derive(Parser)]
#[command(name = "mgp", version, about)]
struct Cli {
    /// JSON configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cap on worker threads (0 = automatic).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory override.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// chi(alpha) curve at one beam waist.
    ChiCurve(ChiCurveArgs),
    /// chi(alpha) curves for every configured waist, optionally locating the
    /// transition waist.
    ScanW0(ScanW0Args),
    /// Topological index over the (w0, gamma) grid.
    PhaseDiagram(OutArgs),
    /// Interference fringe (power vs reference phase) at one waist and plate
    /// angle.
    Fringe(FringeArgs),
    /// Genetic-algorithm fit of per-stage imperfections to measured curves.
    Fit(FitArgs),
    /// Cross-validation batteries; exits nonzero if any check fails.
    OracleSuite(OracleArgs),
    /// Critical measurement strength of the abstract qubit protocol.
    CriticalStrength(CriticalArgs),
}

#[derive(Args)]
struct ChiCurveArgs {
    /// Beam waist in mm (default: first configured scan waist).
    #[arg(long)]
    w0: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScanW0Args {
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also bisect the transition waist within the configured bracket.
    #[arg(long)]
    locate: bool,
}

#[derive(Args)]
struct OutArgs {
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FringeArgs {
    #[arg(long)]
    w0: Option<f64>,
    /// Plate angle in radians.
    #[arg(long, default_value_t = 0.6)]
    alpha: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Experiment CSV (`w0_mm,alpha_rad,chi_rad,contrast[,weight]`).
    #[arg(long)]
    data: PathBuf,
    /// RNG seed; required so fits are reproducible.
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_genome: Option<PathBuf>,
    #[arg(long)]
    out_history: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Run a tenth of the usual check counts.
    #[arg(long)]
    quick: bool,
}

#[derive(Args)]
struct CriticalArgs {
    /// Number of measurements in the family.
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Bisection resolution in zeta.
    #[arg(long, default_value_t = 1e-6)]
    resolution: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            let usage = err.is::<config::ConfigError>()
                || err.is::<mgp_core::io::IoError>()
                || err.is::<std::io::Error>();
            ExitCode::from(if usage { EXIT_USAGE } else { EXIT_FAILURE })
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = cli.output_dir {
        config.output_dir = dir;
    }
    let threads = cli.threads.unwrap_or(config.threads);
    if threads > 0 {
        // Ignore the error if a pool already exists (tests call run twice).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    std::fs::create_dir_all(&config.output_dir)?;

    match cli.command {
        Command::ChiCurve(args) => cmd_chi_curve(&config, &args),
        Command::ScanW0(args) => cmd_scan_w0(&config, &args),
        Command::PhaseDiagram(args) => cmd_phase_diagram(&config, &args),
        Command::Fringe(args) => cmd_fringe(&config, &args),
        Command::Fit(args) => cmd_fit(&config, &args),
        Command::OracleSuite(args) => cmd_oracle_suite(&config, &args),
        Command::CriticalStrength(args) => cmd_critical_strength(&config, &args),
    }
}

fn out_path(config: &RunConfig, chosen: &Option<PathBuf>, default_name: &str) -> PathBuf {
    chosen
        .clone()
        .unwrap_or_else(|| config.output_dir.join(default_name))
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| {
        anyhow::anyhow!("cannot create {}: {e}", path.display())
    })?))
}

fn cmd_chi_curve(config: &RunConfig, args: &ChiCurveArgs) -> anyhow::Result<ExitCode> {
    let w0 = args.w0.unwrap_or(config.scan.w0_values_mm[0]);
    let curve = chi_curve_vs_alpha(
        &config.setup(),
        w0,
        &config.alpha_grid(),
        &Default::default(),
    )?;
    let path = out_path(config, &args.out, "chi_curve.csv");
    let mut w = create(&path)?;
    write_preamble(&mut w, &config.echo())?;
    writeln!(w, "{ALPHA_CURVE_HEADER}")?;
    write_alpha_curve(&mut w, &curve, w0)?;
    let delta = curve.last().chi_unwrapped - curve.first().chi_unwrapped;
    println!(
        "w0 = {w0} mm: delta chi = {delta:.6} rad, {} points -> {}",
        curve.points.len(),
        path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_scan_w0(config: &RunConfig, args: &ScanW0Args) -> anyhow::Result<ExitCode> {
    let setup = config.setup();
    let grid = config.alpha_grid();
    let path = out_path(config, &args.out, "scan_w0.csv");
    let mut w = create(&path)?;
    write_preamble(&mut w, &config.echo())?;
    writeln!(w, "{ALPHA_CURVE_HEADER}")?;
    for &w0 in &config.scan.w0_values_mm {
        let curve = chi_curve_vs_alpha(&setup, w0, &grid, &Default::default())?;
        let delta = curve.last().chi_unwrapped - curve.first().chi_unwrapped;
        println!("w0 = {w0} mm: delta chi = {delta:.6} rad");
        write_alpha_curve(&mut w, &curve, w0)?;
    }
    println!("curves -> {}", path.display());

    if args.locate {
        let bracket = (config.scan.bracket_mm[0], config.scan.bracket_mm[1]);
        let report = locate_transition(&setup, bracket, config.scan.transition_tol_mm)?;
        println!(
            "transition: w0* = {:.6} mm (bracket {:.6}..{:.6}), m {} -> {}, min contrast {:.3e} at alpha = {:.4}",
            report.w0_star_mm,
            report.bracket_mm.0,
            report.bracket_mm.1,
            report.m_strong,
            report.m_weak,
            report.min_contrast,
            report.alpha_at_min
        );
        let path = config.output_dir.join("transition.json");
        let mut w = create(&path)?;
        let json = serde_json::json!({
            "config": serde_json::from_str::<serde_json::Value>(&config.echo())?,
            "w0_star_mm": report.w0_star_mm,
            "bracket_mm": [report.bracket_mm.0, report.bracket_mm.1],
            "m_strong": report.m_strong,
            "m_weak": report.m_weak,
            "min_contrast": report.min_contrast,
            "alpha_at_min_rad": report.alpha_at_min,
        });
        writeln!(w, "{}", serde_json::to_string_pretty(&json)?)?;
        println!("transition report -> {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_phase_diagram(config: &RunConfig, args: &OutArgs) -> anyhow::Result<ExitCode> {
    let diagram = phase_diagram(&config.setup(), &config.diagram_spec())?;
    let path = out_path(config, &args.out, "phase_diagram.csv");
    let mut w = create(&path)?;
    write_preamble(&mut w, &config.echo())?;
    write_diagram(&mut w, &diagram)?;
    println!(
        "{}x{} cells: {} trivial (m=0), {} unresolved -> {}",
        diagram.w0_values_mm.len(),
        diagram.gamma_values_rad.len(),
        diagram.trivial_cell_count(),
        diagram.unresolved_cell_count(),
        path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_fringe(config: &RunConfig, args: &FringeArgs) -> anyhow::Result<ExitCode> {
    let w0 = args.w0.unwrap_or(config.scan.w0_values_mm[0]);
    let setup = config.setup().with_w0(w0).with_alpha(args.alpha);
    let deltas = default_delta_grid();
    let readout = interference_readout(&setup, &deltas)?;
    let path = out_path(config, &args.out, "fringe.csv");
    let mut w = create(&path)?;
    write_preamble(&mut w, &config.echo())?;
    write_fringe(&mut w, &deltas, &readout.powers)?;
    println!(
        "w0 = {w0} mm, alpha = {}: chi = {:.6} rad, contrast = {:.6} -> {}",
        args.alpha,
        readout.chi,
        readout.contrast,
        path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_fit(config: &RunConfig, args: &FitArgs) -> anyhow::Result<ExitCode> {
    let file = File::open(&args.data).map_err(|e| {
        std::io::Error::new(
            e.kind(),
            format!("cannot read data file {}: {e}", args.data.display()),
        )
    })?;
    let records = read_experiment_records(BufReader::new(file))?;

    let mut ga = config.ga_config();
    ga.seed = args.seed;
    let base = config.setup();
    let result = evolve(&ga, &records, &base)?;
    let residual = loss(&result.best, &records, &base, ga.lambda_contrast);

    let genome_path = out_path(config, &args.out_genome, "fit_genome.json");
    let mut w = create(&genome_path)?;
    let json = serde_json::json!({
        "config": serde_json::from_str::<serde_json::Value>(&config.echo())?,
        "seed": args.seed,
        "nu_rad": result.best.pairs.iter().map(|p| p.0).collect::<Vec<_>>(),
        "beta_rad": result.best.pairs.iter().map(|p| p.1).collect::<Vec<_>>(),
        "best_loss": result.best_loss,
        "final_loss_check": residual,
        "initial_loss": result.history[0],
    });
    writeln!(w, "{}", serde_json::to_string_pretty(&json)?)?;

    let history_path = out_path(config, &args.out_history, "fit_history.csv");
    let mut w = create(&history_path)?;
    write_preamble(&mut w, &config.echo())?;
    write_history(&mut w, &result.history)?;

    println!(
        "fit over {} records: loss {:.6e} -> {:.6e} in {} generations",
        records.len(),
        result.history[0],
        result.best_loss,
        ga.generations
    );
    println!("genome -> {}", genome_path.display());
    println!("history -> {}", history_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle_suite(config: &RunConfig, args: &OracleArgs) -> anyhow::Result<ExitCode> {
    let seed = args.seed.unwrap_or(config.seed);
    let reports = mgp_core::battery::run_all(&config.setup(), seed, args.quick)?;
    let mut all_passed = true;
    for report in &reports {
        let status = if report.passed() { "PASS" } else { "FAIL" };
        println!(
            "{status}  {:<48} checks {:>4}  max residual {:.3e}  (tolerance {:.1e})",
            report.name, report.checks, report.max_residual, report.tolerance
        );
        all_passed &= report.passed();
    }
    Ok(if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILURE)
    })
}

fn cmd_critical_strength(config: &RunConfig, args: &CriticalArgs) -> anyhow::Result<ExitCode> {
    let report = critical_strength(args.n, args.resolution)?;
    println!(
        "N = {}: zeta_c = {:.8} (bracket width {:.2e}), m {} -> {}, min contrast {:.3e} at theta = {:.5}",
        args.n,
        report.zeta_c,
        report.bracket.1 - report.bracket.0,
        report.m_weak,
        report.m_strong,
        report.min_contrast,
        report.theta_at_min
    );
    let path = out_path(config, &args.out, "critical_strength.json");
    let mut w = create(&path)?;
    let json = serde_json::json!({
        "config": serde_json::from_str::<serde_json::Value>(&config.echo())?,
        "n": args.n,
        "resolution": args.resolution,
        "zeta_c": report.zeta_c,
        "eta_c": mgp_core::qubit::strength_eta(report.zeta_c)?,
        "bracket": [report.bracket.0, report.bracket.1],
        "m_weak": report.m_weak,
        "m_strong": report.m_strong,
        "min_contrast": report.min_contrast,
        "theta_at_min_rad": report.theta_at_min,
    });
    writeln!(w, "{}", serde_json::to_string_pretty(&json)?)?;
    println!("report -> {}", path.display());
    Ok(ExitCode::SUCCESS)
}
