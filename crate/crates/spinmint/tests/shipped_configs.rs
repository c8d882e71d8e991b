//! The scenario files shipped at the repository root must stay in lockstep
//! with the built-in presets: a drifting file would silently change every
//! CLI run that loads it.

use std::path::PathBuf;

use spinmint::scenario::ScenarioConfig;

fn shipped(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(format!("{name}.toml"))
}

#[test]
fn shipped_scenario_files_match_the_presets() {
    for (name, preset) in [
        ("optical", ScenarioConfig::optical()),
        ("microwave", ScenarioConfig::microwave()),
        ("nuclear", ScenarioConfig::nuclear()),
    ] {
        let path = shipped(name);
        let loaded = ScenarioConfig::load(Some(&path), &[]).unwrap_or_else(|e| {
            panic!("configs/{name}.toml failed to load: {e}");
        });
        assert_eq!(
            loaded,
            preset,
            "configs/{name}.toml has drifted from the built-in preset; \
             regenerate it with ScenarioConfig::{name}().to_toml_string()"
        );
        assert_eq!(loaded.hash().unwrap(), preset.hash().unwrap());
    }
}
