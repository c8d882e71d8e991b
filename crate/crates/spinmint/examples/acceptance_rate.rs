//! Average token acceptance rate across control schemes.
//!
//! The headline figure of merit: how many tokens per second survive the full
//! issue -> store -> return -> verify cycle.  It trades off the token cycle
//! time (shorter photons are faster) against the controlled-phase fidelity
//! (shorter photons see more reflection-curve curvature), photon loss, gate
//! errors, and memory decay.
//!
//! Run with: `cargo run --example acceptance_rate`

use spinmint::scenario::{Scenario, ScenarioConfig};
use spinmint::sweep::{refine_peak, run_sweep, SweepAxis, SweepRequest};

fn summarize(label: &str, scenario: &Scenario) -> Result<(), Box<dyn std::error::Error>> {
    let pt = scenario.operating_point();
    let r = scenario.evaluate(&pt)?;
    println!("{label}");
    println!("  bandwidth        = {:.2} GHz", pt.bandwidth_ghz);
    println!("  token size       = (n, t) = ({}, {})", scenario.design().n(), scenario.design().t());
    println!("  <F>              = {:.6}", r.f_avg);
    println!("  p_survive        = {:.4}", r.p_survive);
    println!("  issuance rate    = {:.2} kHz", r.gamma_tok_hz / 1e3);
    println!("  acceptance rate  = {:.3} kHz", r.gamma_a_hz / 1e3);
    println!();
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let optical = Scenario::from_config(ScenarioConfig::optical())?;
    let microwave = Scenario::from_config(ScenarioConfig::microwave())?;
    let nuclear = Scenario::from_config(ScenarioConfig::nuclear())?;

    summarize("optical control, electron memory:", &optical)?;
    summarize("microwave control, electron memory:", &microwave)?;
    summarize("optical control, nuclear memory:", &nuclear)?;

    // Where does the optical scheme peak as a function of source bandwidth?
    let request = SweepRequest {
        axis: SweepAxis::Bandwidth,
        min: 3.0,
        max: 9.0,
        points: 25,
        log_scale: false,
    };
    let sweep = run_sweep(&optical, &request)?;
    println!("bandwidth sweep (optical):");
    println!("{:>12} {:>12} {:>12}", "gamma/GHz", "gamma_a/kHz", "<F>");
    for p in &sweep.points {
        println!("{:>12.2} {:>12.2} {:>12.6}", p.axis_value, p.gamma_a_hz / 1e3, p.f_avg);
    }
    if let Some(grid_peak) = sweep.peak {
        let peak = refine_peak(
            &optical,
            SweepAxis::Bandwidth,
            grid_peak.axis_value - 0.3,
            grid_peak.axis_value + 0.3,
        )?;
        println!(
            "refined peak: gamma_a = {:.2} kHz at gamma = {:.3} GHz",
            peak.gamma_a_hz / 1e3,
            peak.axis_value
        );
    }

    // The collection-efficiency cliff: because every one of the 2n photon
    // passes must survive, the rate collapses double-exponentially in the
    // per-pass efficiency.
    println!();
    println!("collection-efficiency cliff (optical):");
    for eta in [1.0, 0.95, 0.9, 0.8, 0.6, 0.4915] {
        let mut pt = optical.operating_point();
        pt.collection_efficiency = eta;
        let r = optical.evaluate(&pt)?;
        println!("  eta_c = {eta:>6.4}: gamma_a = {:>12.6e} Hz", r.gamma_a_hz);
    }
    Ok(())
}
