//! Command-line front end.
//!
//! Subcommands: `security-table`, `optimize-cavity`, `sweep`, `mc-verify`
//! and `check`.  Every data-producing command accepts `--config <toml>`
//! plus repeatable `--set section.key=value` overrides, and writes CSV to
//! `--out` (stdout otherwise).  Exit codes: 0 success, 2 configuration
//! error, 3 numerical failure, 4 verification mismatch.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::design_opt::{
    fidelity_landscape, optimize_robust, optimize_standard, OptimalDesign, UncertaintyRegion,
};
use crate::error::{Error, Result};
use crate::report::{
    landscape_csv, render_line_chart, security_table_csv, sweep_chart, sweep_csv, write_artifact,
};
use crate::scenario::{Scenario, ScenarioConfig};
use crate::sweep::{run_sweep, SweepAxis, SweepRequest};
use crate::token::{
    gate_duration_ns, min_token_size, monte_carlo_forge, monte_carlo_verify, AcceptanceInput,
    EfficiencyBudget, LossModel, TokenSizeReport,
};

/// Exit code for configuration problems.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for numerical failures.
pub const EXIT_NUMERICS: i32 = 3;
/// Exit code for verification mismatches (`check`, `mc-verify`).
pub const EXIT_MISMATCH: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "spinmint",
    version,
    about = "Design and analysis toolkit for cavity-based quantum money hardware"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Scenario selection shared by all data-producing subcommands.
#[derive(Debug, Args)]
struct ConfigArgs {
    /// Scenario config file (TOML); defaults to the optical preset.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one config entry, e.g. --set photon.bandwidth_ghz=3.0
    /// (repeatable, applied in order).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn load_config(&self) -> Result<ScenarioConfig> {
        ScenarioConfig::load(self.config.as_deref(), &self.set)
    }

    fn load_scenario(&self) -> Result<Scenario> {
        Scenario::from_config(self.load_config()?)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimal token sizes for a list of forgery-probability ceilings.
    SecurityTable {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated ceilings, e.g. 1e-4,1e-5,1e-6.  Defaults to that
        /// list; an explicitly empty list yields an empty table.
        #[arg(long = "p-th", value_delimiter = ',', num_args = 0.., value_name = "P")]
        p_th: Option<Vec<f64>>,
        /// Cloning success probability per qubit (default: from config).
        #[arg(long, value_name = "ALPHA")]
        alpha: Option<f64>,
        /// Write the CSV here instead of stdout.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Optimize the cavity design and map the surrounding landscape.
    OptimizeCavity {
        #[command(flatten)]
        config: ConfigArgs,
        /// Minimize the fabrication-region average instead of the nominal
        /// infidelity.
        #[arg(long)]
        robust: bool,
        /// Landscape resolution per axis (1 = just the optimum cell).
        #[arg(long, default_value_t = 25, value_name = "N")]
        grid: usize,
        /// Optimizer seed.
        #[arg(long, default_value_t = 7, value_name = "SEED")]
        seed: u64,
        /// Write the landscape CSV here instead of stdout.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Sweep one operating-point axis and tabulate the figures of merit.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Axis: bandwidth, efficiency, length, storage or diffusion.
        #[arg(long, value_name = "AXIS")]
        axis: String,
        /// Lower end of the sweep (axis units; storage in seconds).
        #[arg(long, allow_hyphen_values = true, value_name = "MIN")]
        min: f64,
        /// Upper end of the sweep.
        #[arg(long, allow_hyphen_values = true, value_name = "MAX")]
        max: f64,
        /// Number of grid points.
        #[arg(long, default_value_t = 25, value_name = "N")]
        points: usize,
        /// Logarithmic grid spacing.
        #[arg(long)]
        log: bool,
        /// Write the CSV here instead of stdout.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Also render the sweep as an SVG chart.
        #[arg(long, value_name = "PATH")]
        svg: Option<PathBuf>,
    },
    /// Cross-check the closed-form acceptance rate against Monte Carlo.
    McVerify {
        #[command(flatten)]
        config: ConfigArgs,
        /// Monte Carlo trials per estimate.
        #[arg(long, default_value_t = 1_000_000, value_name = "N")]
        trials: u64,
        /// RNG seed.
        #[arg(long, default_value_t = 7, value_name = "SEED")]
        seed: u64,
        /// Also verify the forge-acceptance probability.
        #[arg(long)]
        forge: bool,
    },
    /// Re-derive the published anchor values and report PASS/FAIL lines.
    Check,
}

/// Parse `std::env::args` and run; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    finish(execute(cli.command))
}

/// Same as [`run`] but over explicit arguments (first element is the
/// program name), for tests.
pub fn run_from<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => finish(execute(cli.command)),
        Err(e) => {
            // Clap prints help/version through this path too; those are
            // successes.
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            code
        }
    }
}

fn finish(outcome: Result<i32>) -> i32 {
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Domain(_) => EXIT_CONFIG,
                _ => EXIT_NUMERICS,
            }
        }
    }
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::SecurityTable {
            config,
            p_th,
            alpha,
            out,
        } => security_table(&config, p_th, alpha, out.as_deref()),
        Command::OptimizeCavity {
            config,
            robust,
            grid,
            seed,
            out,
        } => optimize_cavity(&config, robust, grid, seed, out.as_deref()),
        Command::Sweep {
            config,
            axis,
            min,
            max,
            points,
            log,
            out,
            svg,
        } => sweep(
            &config,
            &axis,
            min,
            max,
            points,
            log,
            out.as_deref(),
            svg.as_deref(),
        ),
        Command::McVerify {
            config,
            trials,
            seed,
            forge,
        } => mc_verify(&config, trials, seed, forge),
        Command::Check => check(),
    }
}

fn emit(contents: &str, out: Option<&Path>, what: &str) -> Result<()> {
    match out {
        Some(path) => {
            write_artifact(path, contents)?;
            eprintln!("wrote {what} to {}", path.display());
            Ok(())
        }
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// security-table
// ---------------------------------------------------------------------------

fn security_table(
    config: &ConfigArgs,
    p_th: Option<Vec<f64>>,
    alpha: Option<f64>,
    out: Option<&Path>,
) -> Result<i32> {
    let cfg = config.load_config()?;
    let alpha = alpha.unwrap_or(cfg.security.alpha);
    let ceilings = p_th.unwrap_or_else(|| vec![1.0e-4, 1.0e-5, 1.0e-6]);
    let rows = ceilings
        .iter()
        .map(|&p| min_token_size(p, alpha))
        .collect::<Result<Vec<TokenSizeReport>>>()?;
    let csv = security_table_csv(&rows, cfg.hash()?);
    emit(&csv, out, "security table")?;
    Ok(0)
}

// ---------------------------------------------------------------------------
// optimize-cavity
// ---------------------------------------------------------------------------

fn optimize_cavity(
    config: &ConfigArgs,
    robust: bool,
    grid: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<i32> {
    if grid == 0 {
        return Err(Error::config("--grid must be at least 1"));
    }
    let scenario = config.load_scenario()?;
    let problem = scenario.design_problem();
    let design = if robust {
        optimize_robust(&problem, &UncertaintyRegion::default(), seed)?
    } else {
        optimize_standard(&problem, seed)?
    };
    print_design_report(&design, robust);

    let (kappa_range, delta_range) = if grid == 1 {
        (
            (design.kappa_ghz, design.kappa_ghz),
            (design.delta_ghz, design.delta_ghz),
        )
    } else {
        let b = &problem.bounds;
        (
            (
                (design.kappa_ghz - 10.0).max(b.kappa_ghz.0),
                (design.kappa_ghz + 10.0).min(b.kappa_ghz.1),
            ),
            (
                (design.delta_ghz - 20.0).max(b.delta_ghz.0),
                (design.delta_ghz + 20.0).min(b.delta_ghz.1),
            ),
        )
    };
    let cells = fidelity_landscape(
        &problem,
        design.omega0_offset_ghz,
        kappa_range,
        delta_range,
        grid,
    )?;
    let csv = landscape_csv(&cells, scenario.config_hash()?);
    emit(&csv, out, "fidelity landscape")?;
    Ok(0)
}

fn print_design_report(design: &OptimalDesign, robust: bool) {
    println!(
        "# optimize-cavity ({})",
        if robust { "robust" } else { "standard" }
    );
    println!("# kappa_ghz = {:.6}", design.kappa_ghz);
    println!("# delta_ghz = {:.6}", design.delta_ghz);
    println!("# omega0_offset_ghz = {:.6}", design.omega0_offset_ghz);
    println!("# infidelity = {:.6e}", design.infidelity);
    if let Some(avg) = design.region_avg_infidelity {
        println!("# region_avg_infidelity = {:.6e}", avg);
    }
    println!("# cooperativity = {:.4}", design.cooperativity);
    println!("# evaluations = {}", design.evaluations);
    println!("# converged = {}", design.converged);
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

#[allow(clippy::too_many_arguments)]
fn sweep(
    config: &ConfigArgs,
    axis: &str,
    min: f64,
    max: f64,
    points: usize,
    log: bool,
    out: Option<&Path>,
    svg: Option<&Path>,
) -> Result<i32> {
    let scenario = config.load_scenario()?;
    let axis: SweepAxis = axis.parse()?;
    let request = SweepRequest {
        axis,
        min,
        max,
        points,
        log_scale: log,
    };
    let result = run_sweep(&scenario, &request)?;
    let hash = scenario.config_hash()?;
    let csv = sweep_csv(&result, hash);
    emit(&csv, out, "sweep")?;
    if let Some(svg_path) = svg {
        let chart = sweep_chart(&result, &format!("{axis} sweep"));
        write_artifact(svg_path, &render_line_chart(&chart, hash)?)?;
        eprintln!("wrote chart to {}", svg_path.display());
    }
    let failures = result.points.iter().filter(|p| p.error.is_some()).count();
    if failures > 0 {
        eprintln!(
            "{failures} of {} points failed; see flagged rows",
            result.points.len()
        );
    }
    Ok(0)
}

// ---------------------------------------------------------------------------
// mc-verify
// ---------------------------------------------------------------------------

fn mc_verify(config: &ConfigArgs, trials: u64, seed: u64, forge: bool) -> Result<i32> {
    let scenario = config.load_scenario()?;
    let pt = scenario.operating_point();
    let closed = scenario.evaluate(&pt)?;
    let input = AcceptanceInput {
        design: scenario.design(),
        p_survive: closed.p_survive,
        f_avg: closed.f_avg,
        token_rate_hz: closed.gamma_tok_hz,
        model: LossModel::default(),
    };
    let mc = monte_carlo_verify(&input, trials, seed)?;
    let z_accept = z_score(mc.probability, closed.acceptance_prob, mc.std_error);
    println!("acceptance probability:");
    println!("  closed form = {:.6e}", closed.acceptance_prob);
    println!(
        "  monte carlo = {:.6e} +- {:.2e}  ({} trials, seed {})",
        mc.probability, mc.std_error, trials, seed
    );
    println!("  z = {z_accept:+.3}");
    let mut worst = z_accept.abs();

    if forge {
        let mc_forge = monte_carlo_forge(&scenario.design(), trials, seed ^ 0x666f_7267)?;
        let expected = scenario.security().p_forge;
        let z_forge = z_score(mc_forge.probability, expected, mc_forge.std_error);
        println!("forge acceptance probability:");
        println!("  closed form = {:.6e}", expected);
        println!(
            "  monte carlo = {:.6e} +- {:.2e}  ({} trials)",
            mc_forge.probability, mc_forge.std_error, trials
        );
        println!("  z = {z_forge:+.3}");
        worst = worst.max(z_forge.abs());
    }

    if worst > 3.0 {
        println!("verdict: MISMATCH (|z| = {worst:.3} > 3)");
        Ok(EXIT_MISMATCH)
    } else {
        println!("verdict: OK (|z| = {worst:.3} <= 3)");
        Ok(0)
    }
}

fn z_score(measured: f64, expected: f64, std_error: f64) -> f64 {
    let diff = measured - expected;
    if diff == 0.0 {
        0.0
    } else {
        diff / std_error
    }
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

struct CheckLine {
    name: &'static str,
    detail: String,
    pass: bool,
}

fn check_rel(
    lines: &mut Vec<CheckLine>,
    name: &'static str,
    got: f64,
    expected: f64,
    rel_tol: f64,
) {
    let rel = (got - expected).abs() / expected.abs();
    lines.push(CheckLine {
        name,
        detail: format!(
            "got {got:.5e}, expected {expected:.5e} within {:.0}% (off by {:.2}%)",
            rel_tol * 100.0,
            rel * 100.0
        ),
        pass: rel <= rel_tol,
    });
}

/// Re-derive the published anchor values.  One line per anchor; exits with
/// [`EXIT_MISMATCH`] when any anchor is out of tolerance.
fn check() -> Result<i32> {
    let mut lines: Vec<CheckLine> = Vec::new();

    // Minimal token sizes for the three standard ceilings.
    for (p_th, n, t) in [(1.0e-4, 42, 41), (1.0e-5, 51, 50), (1.0e-6, 59, 58)] {
        let r = min_token_size(p_th, 0.75)?;
        lines.push(CheckLine {
            name: "minimal token size",
            detail: format!(
                "p_th={p_th:.0e}: n={} t={} (expected n={n} t={t})",
                r.design.n(),
                r.design.t()
            ),
            pass: r.design.n() == n && r.design.t() == t,
        });
    }

    // Standard-design gate infidelity and its fabrication-region average,
    // both at the bandwidth of the published design study.
    const DESIGN_STUDY_BANDWIDTH_GHZ: f64 = 3.18;
    let optical = Scenario::from_config(ScenarioConfig::optical())?;
    let pt = optical.operating_point();
    let cp = optical.cp_infidelity(DESIGN_STUDY_BANDWIDTH_GHZ)?;
    check_rel(&mut lines, "standard-design CP infidelity", cp, 4.90e-5, 0.20);
    let problem = optical.design_problem_with_bandwidth(DESIGN_STUDY_BANDWIDTH_GHZ)?;
    let cfg = optical.config();
    let region_avg = problem.region_average_infidelity(
        cfg.cavity.kappa_ghz,
        cfg.cavity.delta_ghz,
        cfg.cavity.omega0_offset_ghz,
        &UncertaintyRegion::default(),
    )?;
    check_rel(
        &mut lines,
        "standard-design region-averaged infidelity",
        region_avg,
        1.80e-4,
        0.20,
    );

    // Acceptance rates of the three schemes at zero storage.
    let gamma_a = optical.evaluate(&pt)?.gamma_a_hz;
    check_rel(&mut lines, "optical acceptance rate", gamma_a, 80.16e3, 0.05);
    let microwave = Scenario::from_config(ScenarioConfig::microwave())?;
    let gamma_a = microwave.evaluate(&microwave.operating_point())?.gamma_a_hz;
    check_rel(&mut lines, "microwave acceptance rate", gamma_a, 53.22e3, 0.05);
    let nuclear = Scenario::from_config(ScenarioConfig::nuclear())?;
    let gamma_a = nuclear.evaluate(&nuclear.operating_point())?.gamma_a_hz;
    check_rel(&mut lines, "nuclear acceptance rate", gamma_a, 1.36e3, 0.05);

    // Electron relaxation from the phononic environment.
    check_rel(
        &mut lines,
        "optical electron relaxation rate",
        optical.rates().gamma_minus_per_ms,
        31.4,
        0.02,
    );

    // Gate duration from the quoted pulse width.
    let t_g = gate_duration_ns(0.35332);
    lines.push(CheckLine {
        name: "gate duration from pulse width",
        detail: format!("T_g = {t_g:.4} ns (expected 1.50 +- 0.01 ns)"),
        pass: (t_g - 1.50).abs() <= 0.01,
    });

    // Collection-efficiency budget.
    let eta = EfficiencyBudget::new(0.98, 0.73, 0.98, 0.0, 20.0)?.collection_efficiency();
    lines.push(CheckLine {
        name: "collection-efficiency budget",
        detail: format!("eta_c = {eta:.5} (expected 0.4915 +- 5e-5)"),
        pass: (eta - 0.4915).abs() <= 5.0e-5,
    });

    let mut failed = 0usize;
    for line in &lines {
        println!(
            "{} {}: {}",
            if line.pass { "PASS" } else { "FAIL" },
            line.name,
            line.detail
        );
        if !line.pass {
            failed += 1;
        }
    }
    println!(
        "{} of {} anchors reproduced{}",
        lines.len() - failed,
        lines.len(),
        if failed > 0 { "; see FAIL lines" } else { "" }
    );
    Ok(if failed > 0 { EXIT_MISMATCH } else { 0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn unknown_arguments_exit_with_config_code() {
        assert_eq!(run_from(["spinmint", "no-such-subcommand"]), EXIT_CONFIG);
        assert_eq!(
            run_from(["spinmint", "sweep", "--axis", "bandwidth"]),
            EXIT_CONFIG,
            "missing required --min/--max must be a usage error"
        );
    }

    #[test]
    fn z_score_handles_exact_agreement() {
        assert_eq!(z_score(0.5, 0.5, 0.0), 0.0);
        assert!(z_score(0.6, 0.5, 0.01) > 3.0);
    }
}
