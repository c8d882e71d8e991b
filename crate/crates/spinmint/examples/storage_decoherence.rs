//! Memory decay during storage and the verification threshold.
//!
//! While the token is stored, the spin decoheres: the electron spin relaxes
//! toward its thermal mixture at the phonon-induced rates, the nuclear spin
//! only dephases.  The average verification fidelity therefore falls with
//! the storage time, and once it crosses 3/4 the stored qubits carry no more
//! information than classical copies — the token must be used before that.
//!
//! Run with: `cargo run --example storage_decoherence`

use spinmint::scenario::{Scenario, ScenarioConfig};

fn profile(label: &str, scenario: &Scenario, times_ns: &[f64]) {
    let rates = scenario.rates();
    println!("{label}");
    println!(
        "  rates: gamma+ = {:.3e}/ms, gamma- = {:.3e}/ms, gamma_d = {:.3}/s",
        rates.gamma_plus_per_ms, rates.gamma_minus_per_ms, rates.gamma_d_per_s
    );
    println!("  {:>12} {:>10} {:>10}", "storage", "M(t)", "<F>(t)");
    let mut pt = scenario.operating_point();
    for &t_ns in times_ns {
        pt.storage_ns = t_ns;
        let m = scenario.memory_decay_factor(t_ns);
        let f = scenario.average_fidelity(&pt).unwrap();
        println!("  {:>10.1} us {:>10.6} {:>10.6}", t_ns / 1e3, m, f);
    }
    match scenario.threshold_crossing_ns(&scenario.operating_point()).unwrap() {
        Some(t) if t > 0.0 => println!("  <F> crosses 3/4 after {:.2} us of storage", t / 1e3),
        Some(_) => println!("  <F> sits at or below 3/4 before any storage"),
        None => println!("  <F> never crosses 3/4 (decay saturates above threshold)"),
    }
    println!();
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Electron-spin memory: phonon-driven relaxation limits the hold time to
    // tens of microseconds at 100 mK.
    let electron = Scenario::from_config(ScenarioConfig::optical())?;
    profile(
        "electron spin (optical control):",
        &electron,
        &[0.0, 2e3, 5e3, 10e3, 20e3, 27.9e3, 40e3, 80e3],
    );

    // Nuclear-spin memory: the qubit is swapped onto a nuclear spin for the
    // hold, trading two swap operations for a much slower (dephasing-only)
    // decay measured in seconds.
    let nuclear = Scenario::from_config(ScenarioConfig::nuclear())?;
    profile(
        "nuclear spin (swap-in/swap-out):",
        &nuclear,
        &[0.0, 1e7, 1e8, 5e8, 1e9, 2e9],
    );
    Ok(())
}
