//! Reflection spectrum of the spin-cavity system.
//!
//! The token qubit is a time-bin photon reflecting off a single-sided cavity
//! that contains one spin.  Which ground state the spin occupies shifts the
//! optical transition by the spin splitting, so the two spin states see two
//! different reflection curves — the phase contrast between them is the
//! controlled-phase resource.  This example prints both curves and the
//! resulting finite-bandwidth gate fidelity.
//!
//! Run with: `cargo run --example reflection_spectrum`

use spinmint::scenario::{Scenario, ScenarioConfig};
use spinmint::spectra::{cp_gate_fidelity, reflection_coefficient, PhotonSpectrum, SpinState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario::from_config(ScenarioConfig::optical())?;
    let params = scenario.cavity_params();

    println!("cavity-spin system (frequencies relative to the spin transition):");
    println!("  kappa          = {:.2} GHz", params.kappa_ghz);
    println!("  detuning delta = {:.2} GHz (cavity at {:.2} GHz)", params.delta_ghz, params.omega_c_ghz());
    println!("  g              = {:.3} GHz  (cooperativity C = {:.2})", params.g_ghz, params.cooperativity());
    println!("  spin splitting = {:.2} GHz", params.spin_splitting_ghz);
    println!();

    println!("{:>10}  {:>8} {:>9}   {:>8} {:>9}", "omega/GHz", "|r1|", "arg r1", "|r2|", "arg r2");
    let mut omega = -150.0;
    while omega <= 50.0 {
        let r1 = reflection_coefficient(params, omega, SpinState::One);
        let r2 = reflection_coefficient(params, omega, SpinState::Two);
        println!(
            "{omega:>10.1}  {:>8.4} {:>8.3}pi   {:>8.4} {:>8.3}pi",
            r1.norm(),
            r1.arg() / std::f64::consts::PI,
            r2.norm(),
            r2.arg() / std::f64::consts::PI
        );
        omega += 10.0;
    }

    // A monochromatic photon at the operating frequency would see a perfect
    // phase contrast; finite bandwidth averages over the curves above and
    // costs fidelity.
    println!();
    println!("finite-bandwidth controlled-phase fidelity at omega0 = {:.2} GHz:", scenario.omega0_ghz());
    for bandwidth in [0.5, 1.0, 2.0, 3.18, 5.69, 8.0] {
        let spectrum = PhotonSpectrum::new(bandwidth)?;
        let f = cp_gate_fidelity(params, &spectrum, scenario.omega0_ghz())?;
        println!("  gamma = {bandwidth:>5.2} GHz: F_CP = {f:.6}  (infidelity {:.3e})", 1.0 - f);
    }
    Ok(())
}
