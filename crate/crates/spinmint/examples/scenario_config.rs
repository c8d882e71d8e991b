//! Scenario files, presets, and dotted-path overrides.
//!
//! All physics inputs live in one TOML scenario: cavity, photon, gates,
//! memory, security, link budget, and optionally a phonon environment.
//! Presets cover the three control schemes; individual values are overridden
//! with `section.key=value` strings (the CLI's `--set`).  The content hash
//! stamped into every artifact changes with any field.
//!
//! Run with: `cargo run --example scenario_config`

use spinmint::scenario::{Scenario, ScenarioConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // The optical preset, serialized the way a scenario file looks on disk.
    let config = ScenarioConfig::optical();
    println!("== optical preset ==");
    println!("{}", config.to_toml_string()?);

    // Round trip through a file plus overrides.
    let dir = std::env::temp_dir().join("spinmint-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("scenario.toml");
    std::fs::write(&path, config.to_toml_string()?)?;

    let overridden = ScenarioConfig::load(
        Some(&path),
        &[
            "photon.bandwidth_ghz=4.2".into(),
            "link.fiber_length_km=2.0".into(),
        ],
    )?;
    println!("== after --set photon.bandwidth_ghz=4.2 --set link.fiber_length_km=2.0 ==");
    println!("bandwidth: {} GHz, fiber: {} km", overridden.photon.bandwidth_ghz, overridden.link.fiber_length_km);
    println!("hash before: {:016x}", config.hash()?);
    println!("hash after:  {:016x}", overridden.hash()?);

    // Longer fiber costs classical round trips and photon loss.
    let near = Scenario::from_config(config)?;
    let far = Scenario::from_config(overridden)?;
    let near_rate = near.evaluate(&near.operating_point())?;
    let far_rate = far.evaluate(&far.operating_point())?;
    println!();
    println!("acceptance rate at 0.5 km: {:.2} kHz", near_rate.gamma_a_hz / 1e3);
    println!("acceptance rate at 2.0 km (and 4.2 GHz photons): {:.2} kHz", far_rate.gamma_a_hz / 1e3);

    std::fs::remove_file(&path).ok();
    Ok(())
}
