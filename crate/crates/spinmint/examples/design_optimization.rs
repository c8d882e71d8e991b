//! Cavity design optimization: nominal and fabrication-robust.
//!
//! Searches (kappa, delta, omega0 - omega_a) for the design minimizing the
//! controlled-phase infidelity of a 3.18 GHz photon, first at the nominal
//! point, then averaged over a +/-2 GHz fabrication-uncertainty region in
//! (kappa, omega_c).  The atom-cavity coupling scales with the cavity
//! geometry, so g is re-derived from a fixed cooperativity while kappa moves.
//!
//! Run with: `cargo run --example design_optimization`

use spinmint::design_opt::{fidelity_landscape, optimize_robust, optimize_standard, UncertaintyRegion};
use spinmint::scenario::{Scenario, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario::from_config(ScenarioConfig::optical())?;
    // Narrow-band design study: long photons resolve the cavity features.
    let problem = scenario.design_problem_with_bandwidth(3.18)?;

    println!("== standard optimization (nominal parameters) ==");
    let standard = optimize_standard(&problem, 7)?;
    println!("  kappa          = {:.2} GHz", standard.kappa_ghz);
    println!("  delta          = {:.2} GHz", standard.delta_ghz);
    println!("  omega0 offset  = {:.2} GHz", standard.omega0_offset_ghz);
    println!("  infidelity     = {:.4e}", standard.infidelity);
    println!("  cooperativity  = {:.2}", standard.cooperativity);
    println!("  evaluations    = {}", standard.evaluations);

    println!();
    println!("== robust optimization (averaged over fabrication scatter) ==");
    let region = UncertaintyRegion::default();
    println!(
        "  region: +/-{} GHz in kappa x +/-{} GHz in omega_c ({}x{} grid)",
        region.half_width_kappa_ghz, region.half_width_omega_c_ghz, region.grid_per_axis, region.grid_per_axis
    );
    let robust = optimize_robust(&problem, &region, 7)?;
    println!("  kappa          = {:.2} GHz", robust.kappa_ghz);
    println!("  delta          = {:.2} GHz", robust.delta_ghz);
    println!("  omega0 offset  = {:.2} GHz", robust.omega0_offset_ghz);
    println!("  nominal infid. = {:.4e}", robust.infidelity);
    if let Some(avg) = robust.region_avg_infidelity {
        println!("  region average = {:.4e}", avg);
    }

    // How fragile is the standard optimum? Average its neighborhood too.
    let standard_avg = problem.region_average_infidelity(
        standard.kappa_ghz,
        standard.delta_ghz,
        standard.omega0_offset_ghz,
        &region,
    )?;
    println!();
    println!("standard optimum averaged over the same region: {standard_avg:.4e}");

    // A coarse infidelity landscape around the standard optimum.
    println!();
    println!("log10(infidelity) landscape around the standard optimum:");
    let n = 7;
    let kr = (standard.kappa_ghz - 6.0, standard.kappa_ghz + 6.0);
    let dr = (standard.delta_ghz - 12.0, standard.delta_ghz + 12.0);
    let cells = fidelity_landscape(&problem, standard.omega0_offset_ghz, kr, dr, n)?;
    print!("{:>10}", "k \\ d");
    for cell in cells.iter().take(n) {
        print!("{:>8.1}", cell.delta_ghz);
    }
    println!();
    for row in 0..n {
        print!("{:>10.2}", cells[row * n].kappa_ghz);
        for col in 0..n {
            print!("{:>8.2}", cells[row * n + col].infidelity.log10());
        }
        println!();
    }
    Ok(())
}
