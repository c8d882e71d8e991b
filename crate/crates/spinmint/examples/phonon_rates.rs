//! Phonon-induced spin relaxation from first principles.
//!
//! The electron-spin hold time is set by single-phonon transitions between
//! the two lowest spin-orbit levels.  The rate combines three ingredients,
//! all computed here: anisotropic acoustic velocities from the Christoffel
//! eigenproblem, an absorption cross-section integrated over all propagation
//! directions, and the thermal phonon occupation at the transition frequency.
//!
//! Run with: `cargo run --example phonon_rates`

use nalgebra::Vector3;
use spinmint::phonon::{christoffel_velocities, occupation, ElasticMedium, StrainSusceptibility};
use spinmint::scenario::{Scenario, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let diamond = ElasticMedium::diamond();

    println!("acoustic velocities in diamond (km/s):");
    println!("{:>8} {:>14} {:>14} {:>14}", "dir", "longitudinal", "fast shear", "slow shear");
    for (name, dir) in [
        ("[100]", Vector3::new(1.0, 0.0, 0.0)),
        ("[110]", Vector3::new(1.0, 1.0, 0.0).normalize()),
        ("[111]", Vector3::new(1.0, 1.0, 1.0).normalize()),
    ] {
        let modes = christoffel_velocities(&dir, &diamond)?;
        println!(
            "{name:>8} {:>14.2} {:>14.2} {:>14.2}",
            modes[0].velocity_km_s, modes[1].velocity_km_s, modes[2].velocity_km_s
        );
    }

    println!();
    println!("strain susceptibilities (d, f in PHz/strain):");
    for (name, chi) in [
        ("ground", StrainSusceptibility::ground()),
        ("excited", StrainSusceptibility::excited()),
    ] {
        println!("  {name:>8}: d = {:+.3}, f = {:+.3}", chi.d_phz(), chi.f_phz());
    }

    println!();
    println!("thermal occupation of the 70.8 GHz transition:");
    for temp in [0.1, 0.3, 1.0, 4.0] {
        println!("  T = {temp:>4.1} K: n = {:.4e}", occupation(70.8039, temp)?);
    }

    // End to end: the optical preset carries a phonon environment whose
    // cross-sections and occupation produce the storage rates directly.
    println!();
    let scenario = Scenario::from_config(ScenarioConfig::optical())?;
    let rates = scenario.rates();
    println!("resolved electron-spin rates at the preset temperature (0.1 K):");
    println!("  gamma+ (absorption) = {:.3e} / ms", rates.gamma_plus_per_ms);
    println!("  gamma- (emission)   = {:.3e} / ms", rates.gamma_minus_per_ms);
    println!(
        "  -> thermal hold time 1/(gamma+ + gamma-) = {:.1} us",
        1e3 / (rates.gamma_plus_per_ms + rates.gamma_minus_per_ms)
    );

    // The same machinery across temperature, using the preset's phonon
    // section with the temperature overridden.
    println!();
    println!("emission rate vs temperature:");
    for temp in [0.05, 0.1, 0.2, 0.4, 0.8, 1.6] {
        let mut config = ScenarioConfig::optical();
        if let Some(phonon) = config.phonon.as_mut() {
            phonon.temperature_k = temp;
        }
        let s = Scenario::from_config(config)?;
        println!("  T = {temp:>5.2} K: gamma- = {:>10.3e} / ms", s.rates().gamma_minus_per_ms);
    }
    Ok(())
}
