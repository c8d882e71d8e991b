//! Declarative experiment scenarios.
//!
//! A [`ScenarioConfig`] is a plain-data description of one complete token
//! experiment — cavity design, photon source, gate and memory quality,
//! security margin, link losses and (optionally) the phononic environment
//! that sets the electron-spin lifetimes.  It round-trips through TOML and
//! is the unit the command-line tools exchange via `--config` / `--set`.
//!
//! A [`Scenario`] is the validated, resolved form: coupling rate derived
//! from the cooperativity, security design solved, decoherence rates
//! either taken from the config or derived from the phonon section.  All
//! sweep axes funnel through [`Scenario::evaluate`] on an
//! [`OperatingPoint`], so every figure of merit is produced by exactly one
//! code path.

use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::design_opt::{DesignBounds, DesignProblem};
use crate::error::{Error, Result};
use crate::phonon::{
    absorption_cross_section, phonon_rate, ElasticMedium, RateMatrixInput, StrainSusceptibility,
};
use crate::spectra::{cp_gate_fidelity, CavitySpinParams, CouplingModel, PhotonSpectrum};
use crate::spin_channel::{storage_report, DecoherenceRates, DiffusionModel, StoragePipeline};
use crate::token::{
    acceptance_rate, min_token_size, AcceptanceInput, EfficiencyBudget, LossModel,
    SecurityDesign, TokenSizeReport, TokenTiming,
};

/// Standard cavity linewidth κ (GHz).
pub const DEFAULT_KAPPA_GHZ: f64 = 34.07;
/// Standard atom–cavity detuning δ (GHz).
pub const DEFAULT_DELTA_GHZ: f64 = 108.76;
/// Standard photon carrier offset ω₀ − ω_a (GHz).
pub const DEFAULT_OMEGA0_OFFSET_GHZ: f64 = -63.66;
/// Cooperativity C = g²/(κΓ) fixing the coupling rate.
pub const DEFAULT_COOPERATIVITY: f64 = 35.85;
/// Optical dipole decay rate Γ (GHz).
pub const DEFAULT_GAMMA_ATOM_GHZ: f64 = 0.0212207;
/// Ground-state spin splitting ω_s (GHz).
pub const DEFAULT_SPIN_SPLITTING_GHZ: f64 = 70.8039;
/// Standard photon bandwidth γ (GHz) of the optical scheme.
pub const DEFAULT_BANDWIDTH_GHZ: f64 = 5.69;
/// Off-diagonal phonon coupling ∣h∣ reproducing the optical-scheme
/// electron relaxation Γ_rel = 31.4 ms⁻¹ at 0.1 K.
pub const OPTICAL_PHONON_COUPLING: f64 = 2.939048e-2;
/// Off-diagonal phonon coupling ∣h∣ reproducing the microwave-scheme
/// electron relaxation Γ_rel = 0.628 ms⁻¹ at 0.1 K.
pub const MICROWAVE_PHONON_COUPLING: f64 = 4.156441e-3;

// ---------------------------------------------------------------------------
// Config sections
// ---------------------------------------------------------------------------

/// Cavity and emitter parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavitySection {
    /// Cavity linewidth κ (GHz).
    pub kappa_ghz: f64,
    /// Atom–cavity detuning δ = ω_a − ω_c (GHz).
    pub delta_ghz: f64,
    /// Photon carrier offset ω₀ − ω_a (GHz).
    pub omega0_offset_ghz: f64,
    /// Cooperativity C = g²/(κΓ); the coupling rate is g = √(CκΓ).
    pub cooperativity: f64,
    /// Optical dipole decay rate Γ (GHz).
    pub gamma_atom_ghz: f64,
    /// Ground-state spin splitting ω_s (GHz).
    pub omega_s_ghz: f64,
}

impl Default for CavitySection {
    fn default() -> Self {
        CavitySection {
            kappa_ghz: DEFAULT_KAPPA_GHZ,
            delta_ghz: DEFAULT_DELTA_GHZ,
            omega0_offset_ghz: DEFAULT_OMEGA0_OFFSET_GHZ,
            cooperativity: DEFAULT_COOPERATIVITY,
            gamma_atom_ghz: DEFAULT_GAMMA_ATOM_GHZ,
            omega_s_ghz: DEFAULT_SPIN_SPLITTING_GHZ,
        }
    }
}

/// Photon-source parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhotonSection {
    /// Photon bandwidth γ (GHz).
    pub bandwidth_ghz: f64,
    /// Spectral-diffusion standard deviation σ (GHz); 0 disables diffusion.
    pub diffusion_sigma_ghz: f64,
}

impl Default for PhotonSection {
    fn default() -> Self {
        PhotonSection {
            bandwidth_ghz: DEFAULT_BANDWIDTH_GHZ,
            diffusion_sigma_ghz: 0.0,
        }
    }
}

/// Local spin-gate parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateSection {
    /// Per-application π/2 gate fidelity F_g.
    pub fidelity: f64,
    /// Gate duration T_g (ns).
    pub duration_ns: f64,
}

impl Default for GateSection {
    fn default() -> Self {
        GateSection {
            fidelity: 0.9977,
            duration_ns: 1.5,
        }
    }
}

/// Which physical memory stores the token qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MemoryScheme {
    /// Electron spin addressed optically.
    ElectronOptical,
    /// Electron spin addressed through microwave control.
    ElectronMicrowave,
    /// Nuclear spin, reached by swapping from the electron.
    Nuclear,
}

impl MemoryScheme {
    /// True for the two electron-spin variants.
    pub fn is_electron(self) -> bool {
        matches!(self, MemoryScheme::ElectronOptical | MemoryScheme::ElectronMicrowave)
    }
}

/// Memory quality and storage decoherence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MemorySection {
    /// Storage scheme.
    pub scheme: MemoryScheme,
    /// Static write–read memory fidelity F_mem at zero storage time.
    pub fidelity: f64,
    /// Nominal storage interval T_s (ns).
    pub storage_ns: f64,
    /// Electron raising rate γ₊ (ms⁻¹).  When absent it is derived from
    /// the `[phonon]` section, or zero without one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_plus_per_ms: Option<f64>,
    /// Electron lowering rate γ₋ (ms⁻¹); same resolution rule as γ₊.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_minus_per_ms: Option<f64>,
    /// Electron↔nuclear swap gate fidelity (nuclear scheme only; enters
    /// once per direction).
    pub swap_fidelity: f64,
    /// Swap gate duration (ns); added twice to the storage interval.
    pub swap_duration_ns: f64,
    /// Nuclear dephasing rate γ_d (s⁻¹).
    pub gamma_d_per_s: f64,
}

impl Default for MemorySection {
    fn default() -> Self {
        MemorySection {
            scheme: MemoryScheme::ElectronOptical,
            fidelity: 0.9895,
            storage_ns: 0.0,
            gamma_plus_per_ms: None,
            gamma_minus_per_ms: None,
            swap_fidelity: 0.9993,
            swap_duration_ns: 1.0e5,
            gamma_d_per_s: 1.0,
        }
    }
}

/// Security margin of the token.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SecuritySection {
    /// Forgery-probability ceiling p_th.
    pub p_th: f64,
    /// Per-qubit success probability of the optimal cloning attack.
    pub alpha: f64,
}

impl Default for SecuritySection {
    fn default() -> Self {
        SecuritySection {
            p_th: 1.0e-4,
            alpha: crate::token::ALPHA_OPTIMAL_CLONING,
        }
    }
}

/// Photon link: collection efficiencies, fiber and detection timing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkSection {
    /// Cavity–fiber coupling efficiency (enters squared).
    pub eta_cf: f64,
    /// Frequency-conversion efficiency (enters squared).
    pub eta_fc: f64,
    /// Detector efficiency (enters squared).
    pub eta_d: f64,
    /// Fiber length L (km).
    pub fiber_length_km: f64,
    /// Fiber attenuation length L_att (km).
    pub attenuation_length_km: f64,
    /// Signal speed in the link (km/s).
    pub c_fiber_km_per_s: f64,
    /// Measurement time T_m (ns).
    pub measurement_ns: f64,
}

impl Default for LinkSection {
    fn default() -> Self {
        LinkSection {
            eta_cf: 1.0,
            eta_fc: 1.0,
            eta_d: 1.0,
            fiber_length_km: 0.5,
            attenuation_length_km: crate::token::DEFAULT_ATTENUATION_KM,
            c_fiber_km_per_s: crate::token::VACUUM_LIGHT_SPEED_KM_PER_S,
            measurement_ns: crate::token::DEFAULT_MEASUREMENT_NS,
        }
    }
}

/// Which strain susceptibility matrix a phonon mode couples through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrainAxis {
    /// The E_bx-type matrix.
    X,
    /// The E_by-type matrix.
    Y,
}

/// One strain mode: susceptibility parameters plus its dimensionless
/// level-coupling matrix h.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhononMode {
    /// Display label, e.g. "Egx".
    pub label: String,
    /// Which susceptibility matrix the mode couples through.
    pub axis: StrainAxis,
    /// Susceptibility parameter d (PHz).
    pub d_phz: f64,
    /// Susceptibility parameter f (PHz).
    pub f_phz: f64,
    /// Real part of h, row-major over the level index.
    pub h_re: Vec<Vec<f64>>,
    /// Imaginary part of h, row-major over the level index.
    pub h_im: Vec<Vec<f64>>,
}

impl PhononMode {
    fn h_matrix(&self, n: usize) -> Result<DMatrix<Complex64>> {
        for (name, rows) in [("h_re", &self.h_re), ("h_im", &self.h_im)] {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::config(format!(
                    "phonon mode '{}': {name} must be a {n}×{n} matrix",
                    self.label
                )));
            }
        }
        Ok(DMatrix::from_fn(n, n, |r, c| {
            Complex64::new(self.h_re[r][c], self.h_im[r][c])
        }))
    }

    fn susceptibility_matrix(&self) -> nalgebra::Matrix3<f64> {
        let s = StrainSusceptibility::new(self.d_phz, self.f_phz);
        match self.axis {
            StrainAxis::X => s.d_ebx(),
            StrainAxis::Y => s.d_eby(),
        }
    }
}

/// Phononic environment: elastic medium, temperature, spin levels and the
/// strain modes that connect them.  Present only when electron relaxation
/// rates should be derived from first principles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhononSection {
    /// Elastic constant C₁₁ (GPa).
    pub c11_gpa: f64,
    /// Elastic constant C₁₂ (GPa).
    pub c12_gpa: f64,
    /// Elastic constant C₄₄ (GPa).
    pub c44_gpa: f64,
    /// Mass density (g/cm³).
    pub density_g_cm3: f64,
    /// Sample temperature (K).
    pub temperature_k: f64,
    /// Spin-level frequencies (GHz); exactly two for rate derivation.
    pub levels_ghz: Vec<f64>,
    /// Strain modes.
    pub modes: Vec<PhononMode>,
}

impl Default for PhononSection {
    fn default() -> Self {
        PhononSection::diamond_ground(OPTICAL_PHONON_COUPLING)
    }
}

impl PhononSection {
    /// Diamond host, ground-manifold susceptibility, two spin levels split
    /// by ω_s, and a uniform off-diagonal coupling ∣h∣ on both E_g modes.
    pub fn diamond_ground(h_offdiag: f64) -> Self {
        let ground = StrainSusceptibility::ground();
        let medium = ElasticMedium::diamond();
        let off = vec![vec![0.0, h_offdiag], vec![h_offdiag, 0.0]];
        let zero = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        let mode = |label: &str, axis: StrainAxis| PhononMode {
            label: label.to_string(),
            axis,
            d_phz: ground.d_phz(),
            f_phz: ground.f_phz(),
            h_re: off.clone(),
            h_im: zero.clone(),
        };
        PhononSection {
            c11_gpa: medium.c11_gpa(),
            c12_gpa: medium.c12_gpa(),
            c44_gpa: medium.c44_gpa(),
            density_g_cm3: medium.density_g_cm3(),
            temperature_k: 0.1,
            levels_ghz: vec![0.0, DEFAULT_SPIN_SPLITTING_GHZ],
            modes: vec![mode("Egx", StrainAxis::X), mode("Egy", StrainAxis::Y)],
        }
    }

    /// Phononic absorption cross-sections χ_R (s²), one per mode.
    pub fn cross_sections(&self) -> Result<Vec<f64>> {
        let medium = ElasticMedium::new(
            self.c11_gpa,
            self.c12_gpa,
            self.c44_gpa,
            self.density_g_cm3,
        )?;
        self.modes
            .iter()
            .map(|m| absorption_cross_section(&m.susceptibility_matrix(), &medium))
            .collect()
    }

    /// Derive the electron raising and lowering rates (γ₊, γ₋) in ms⁻¹
    /// from the one-phonon absorption/emission rates between the two
    /// levels.
    pub fn electron_rates(&self) -> Result<(f64, f64)> {
        if self.levels_ghz.len() != 2 {
            return Err(Error::config(format!(
                "electron rate derivation needs exactly two levels, got {}",
                self.levels_ghz.len()
            )));
        }
        if self.modes.is_empty() {
            return Err(Error::config(
                "electron rate derivation needs at least one phonon mode",
            ));
        }
        let chi = self.cross_sections()?;
        let h = self
            .modes
            .iter()
            .map(|m| m.h_matrix(self.levels_ghz.len()))
            .collect::<Result<Vec<_>>>()?;
        let input = RateMatrixInput {
            h,
            omega_ghz: self.levels_ghz.clone(),
            temperature_k: self.temperature_k,
        };
        let (lo, hi) = if self.levels_ghz[0] <= self.levels_ghz[1] {
            (0, 1)
        } else {
            (1, 0)
        };
        let gamma_minus = phonon_rate(hi, lo, &input, &chi)?;
        let gamma_plus = phonon_rate(lo, hi, &input, &chi)?;
        Ok((gamma_plus, gamma_minus))
    }
}

// ---------------------------------------------------------------------------
// Top-level config
// ---------------------------------------------------------------------------

/// Complete declarative description of a token experiment.
///
/// Missing sections in a TOML file fall back to the optical-scheme
/// defaults, except `[phonon]`, which stays absent (no derived rates)
/// unless spelled out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub cavity: CavitySection,
    #[serde(default)]
    pub photon: PhotonSection,
    #[serde(default)]
    pub gates: GateSection,
    #[serde(default)]
    pub memory: MemorySection,
    #[serde(default)]
    pub security: SecuritySection,
    #[serde(default)]
    pub link: LinkSection,
    /// Optional first-principles source for the electron relaxation rates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phonon: Option<PhononSection>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig::optical()
    }
}

impl ScenarioConfig {
    /// Optical electron-spin scheme: γ = 5.69 GHz photons, optical π/2
    /// gates, phonon-derived relaxation at 0.1 K.
    pub fn optical() -> Self {
        ScenarioConfig {
            cavity: CavitySection::default(),
            photon: PhotonSection::default(),
            gates: GateSection::default(),
            memory: MemorySection::default(),
            security: SecuritySection::default(),
            link: LinkSection::default(),
            phonon: Some(PhononSection::diamond_ground(OPTICAL_PHONON_COUPLING)),
        }
    }

    /// Microwave electron-spin scheme: slower but much cleaner local gates
    /// and a weaker phonon coupling.
    pub fn microwave() -> Self {
        let mut c = ScenarioConfig::optical();
        c.photon.bandwidth_ghz = 1.22;
        c.gates = GateSection {
            fidelity: 0.9999,
            duration_ns: 34.21,
        };
        c.memory.scheme = MemoryScheme::ElectronMicrowave;
        c.memory.fidelity = 0.9965;
        c.phonon = Some(PhononSection::diamond_ground(MICROWAVE_PHONON_COUPLING));
        c
    }

    /// Nuclear-spin scheme: qubits are swapped onto a nuclear register and
    /// decay only by slow dephasing.
    pub fn nuclear() -> Self {
        let mut c = ScenarioConfig::optical();
        // The source bandwidth of this scheme happens to be 3.14 GHz; it is
        // a measured figure, not an approximation of pi.
        #[allow(clippy::approx_constant)]
        {
            c.photon.bandwidth_ghz = 3.14;
        }
        c.memory.scheme = MemoryScheme::Nuclear;
        c.memory.fidelity = 0.9896;
        c.phonon = None;
        c
    }

    /// Parse a config from TOML text; unknown keys are rejected.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(format!("invalid scenario config: {e}")))
    }

    /// Canonical TOML serialization (also the hashing pre-image).
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self)
            .map_err(|e| Error::config(format!("cannot serialize scenario config: {e}")))
    }

    /// Load a config from an optional file (default: the optical preset)
    /// and apply dotted-path `key=value` overrides in order.
    pub fn load(path: Option<&Path>, sets: &[String]) -> Result<Self> {
        let mut value: toml::Value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    Error::config(format!("cannot read config {}: {e}", p.display()))
                })?;
                text.parse().map_err(|e| {
                    Error::config(format!("invalid TOML in {}: {e}", p.display()))
                })?
            }
            None => toml::Value::try_from(ScenarioConfig::default())
                .map_err(|e| Error::config(format!("cannot encode default config: {e}")))?,
        };
        for spec in sets {
            apply_set(&mut value, spec)?;
        }
        value
            .try_into()
            .map_err(|e| Error::config(format!("invalid scenario config: {e}")))
    }

    /// FNV-1a 64-bit hash of the canonical TOML form.
    pub fn hash(&self) -> Result<u64> {
        Ok(fnv1a64(self.to_toml_string()?.as_bytes()))
    }
}

/// FNV-1a 64-bit hash.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Apply one `section.key=value` override to a TOML tree.  Values are
/// parsed as TOML scalars/arrays when possible and fall back to strings,
/// so `memory.scheme=nuclear` and `photon.bandwidth_ghz=3.1` both work.
fn apply_set(root: &mut toml::Value, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::config(format!("--set expects key=value, got '{spec}'")))?;
    let key = key.trim();
    let raw = raw.trim();
    if key.is_empty() {
        return Err(Error::config(format!("--set has an empty key in '{spec}'")));
    }
    let parsed = parse_set_value(raw);
    let parts: Vec<&str> = key.split('.').collect();
    let (last, parents) = parts.split_last().expect("split produced no parts");
    let mut node = root;
    for (i, part) in parents.iter().enumerate() {
        let table = node.as_table_mut().ok_or_else(|| {
            Error::config(format!("'{key}': '{}' is not a table", parts[..=i].join(".")))
        })?;
        node = table
            .entry((*part).to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let table = node
        .as_table_mut()
        .ok_or_else(|| Error::config(format!("'{key}': parent is not a table")))?;
    table.insert((*last).to_string(), parsed);
    Ok(())
}

fn parse_set_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Value>() {
        Ok(toml::Value::Table(mut t)) => t.remove("v").unwrap_or_else(|| raw.into()),
        _ => toml::Value::String(raw.to_string()),
    }
}

// ---------------------------------------------------------------------------
// Resolved scenario
// ---------------------------------------------------------------------------

/// The sweep-variable slice of a scenario.  [`Scenario::operating_point`]
/// yields the configured values; sweeps mutate one field at a time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    /// Photon bandwidth γ (GHz).
    pub bandwidth_ghz: f64,
    /// Storage interval (ns), excluding the nuclear swap overhead.
    pub storage_ns: f64,
    /// Combined collection efficiency η_c.
    pub collection_efficiency: f64,
    /// Fiber length L (km).
    pub fiber_length_km: f64,
    /// Spectral-diffusion standard deviation σ (GHz).
    pub diffusion_sigma_ghz: f64,
}

/// Figures of merit at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    /// Average acceptance rate γ_a (Hz).
    pub gamma_a_hz: f64,
    /// Token issuance rate γ_tok (Hz).
    pub gamma_tok_hz: f64,
    /// Average verification fidelity ⟨F⟩.
    pub f_avg: f64,
    /// Acceptance probability γ_a / γ_tok.
    pub acceptance_prob: f64,
    /// Controlled-phase gate infidelity at this bandwidth.
    pub cp_infidelity: f64,
    /// Per-qubit photon survival probability p₁.
    pub p_survive: f64,
}

/// A validated scenario with all derived quantities resolved.
#[derive(Debug, Clone)]
pub struct Scenario {
    config: ScenarioConfig,
    params: CavitySpinParams,
    spectrum: PhotonSpectrum,
    rates: DecoherenceRates,
    security: TokenSizeReport,
    budget: EfficiencyBudget,
}

impl Scenario {
    /// Validate a config and resolve every derived quantity.
    pub fn from_config(config: ScenarioConfig) -> Result<Self> {
        validate_scalars(&config)?;
        let cav = &config.cavity;
        if !(cav.cooperativity.is_finite() && cav.cooperativity > 0.0) {
            return Err(Error::config(format!(
                "cavity.cooperativity must be > 0, got {}",
                cav.cooperativity
            )));
        }
        let g = (cav.cooperativity * cav.kappa_ghz * cav.gamma_atom_ghz).sqrt();
        let params = CavitySpinParams::half_open(
            cav.kappa_ghz,
            cav.gamma_atom_ghz,
            g,
            cav.delta_ghz,
            cav.omega_s_ghz,
        )?;
        let spectrum = PhotonSpectrum::new(config.photon.bandwidth_ghz)?;
        DiffusionModel::new(config.photon.diffusion_sigma_ghz)?;
        let security = min_token_size(config.security.p_th, config.security.alpha)?;
        let budget = EfficiencyBudget::new(
            config.link.eta_cf,
            config.link.eta_fc,
            config.link.eta_d,
            config.link.fiber_length_km,
            config.link.attenuation_length_km,
        )?;
        let mem = &config.memory;
        let (gamma_plus, gamma_minus) =
            match (mem.gamma_plus_per_ms, mem.gamma_minus_per_ms, &config.phonon) {
                (Some(p), Some(m), _) => (p, m),
                (p, m, Some(ph)) => {
                    let (dp, dm) = ph.electron_rates()?;
                    (p.unwrap_or(dp), m.unwrap_or(dm))
                }
                (p, m, None) => (p.unwrap_or(0.0), m.unwrap_or(0.0)),
            };
        let rates = DecoherenceRates::new(gamma_plus, gamma_minus, mem.gamma_d_per_s)?;
        Ok(Scenario {
            config,
            params,
            spectrum,
            rates,
            security,
            budget,
        })
    }

    /// Load from an optional file plus `--set` overrides.
    pub fn load(path: Option<&Path>, sets: &[String]) -> Result<Self> {
        Scenario::from_config(ScenarioConfig::load(path, sets)?)
    }

    /// The underlying config.
    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    /// Hash of the canonical config serialization.
    pub fn config_hash(&self) -> Result<u64> {
        self.config.hash()
    }

    /// Resolved cavity parameters (g derived from the cooperativity).
    pub fn cavity_params(&self) -> &CavitySpinParams {
        &self.params
    }

    /// Absolute photon carrier frequency ω₀ (GHz).
    pub fn omega0_ghz(&self) -> f64 {
        self.params.omega_a_ghz + self.config.cavity.omega0_offset_ghz
    }

    /// Resolved decoherence rates.
    pub fn rates(&self) -> &DecoherenceRates {
        &self.rates
    }

    /// Minimal security design for the configured (p_th, α).
    pub fn security(&self) -> &TokenSizeReport {
        &self.security
    }

    /// The security design in use.
    pub fn design(&self) -> SecurityDesign {
        self.security.design
    }

    /// The configured operating point.
    pub fn operating_point(&self) -> OperatingPoint {
        OperatingPoint {
            bandwidth_ghz: self.config.photon.bandwidth_ghz,
            storage_ns: self.config.memory.storage_ns,
            collection_efficiency: self.budget.collection_efficiency(),
            fiber_length_km: self.config.link.fiber_length_km,
            diffusion_sigma_ghz: self.config.photon.diffusion_sigma_ghz,
        }
    }

    /// Cavity-design search problem seeded from this scenario (fixed g,
    /// preserved κ_l:κ ratio, the configured photon spectrum).
    pub fn design_problem(&self) -> DesignProblem {
        DesignProblem {
            template: self.params,
            coupling: CouplingModel::Fixed {
                g_ghz: self.params.g_ghz,
            },
            spectrum: self.spectrum,
            bounds: DesignBounds::default(),
        }
    }

    /// Like [`Scenario::design_problem`], but with the photon spectrum
    /// overridden to a different bandwidth (e.g. a design study at a source
    /// bandwidth other than the token operating point).
    pub fn design_problem_with_bandwidth(&self, bandwidth_ghz: f64) -> Result<DesignProblem> {
        Ok(DesignProblem {
            spectrum: PhotonSpectrum::new(bandwidth_ghz)?,
            ..self.design_problem()
        })
    }

    /// Controlled-phase gate infidelity at an arbitrary photon bandwidth.
    pub fn cp_infidelity(&self, bandwidth_ghz: f64) -> Result<f64> {
        let spectrum = PhotonSpectrum::new(bandwidth_ghz)?;
        let f = cp_gate_fidelity(&self.params, &spectrum, self.omega0_ghz())?;
        Ok(1.0 - f)
    }

    /// Storage-decay factor M(t): the fidelity multiplier of the four-state
    /// average after holding the memory for `storage_ns`.
    ///
    /// Electron schemes relax with total rate Γ_rel = γ₊ + γ₋:
    /// M(t) = ¼(2 + e^{−Γ_rel t} + e^{−Γ_rel t/2}).  The nuclear scheme
    /// dephases: M(t) = ¾ + ¼ e^{−2γ_d t}.
    pub fn memory_decay_factor(&self, storage_ns: f64) -> f64 {
        if self.config.memory.scheme.is_electron() {
            let rel_per_ms = self.rates.gamma_plus_per_ms + self.rates.gamma_minus_per_ms;
            let x = (-0.5 * rel_per_ms * storage_ns * 1.0e-6).exp();
            0.25 * (2.0 + x * x + x)
        } else {
            let t_s = storage_ns * 1.0e-9;
            0.75 + 0.25 * (-2.0 * self.config.memory.gamma_d_per_s * t_s).exp()
        }
    }

    /// Multiplicative fidelity penalty from spectral diffusion: the mean
    /// write×read transfer fidelity with diffusion divided by the same
    /// quantity without, both at ideal local gates.
    pub fn diffusion_penalty(&self, pt: &OperatingPoint) -> Result<f64> {
        if pt.diffusion_sigma_ghz == 0.0 {
            return Ok(1.0);
        }
        let spectrum = PhotonSpectrum::new(pt.bandwidth_ghz)?;
        let mut pipeline = StoragePipeline::new(self.params, spectrum, self.omega0_ghz(), 1.0)?;
        let sharp = transfer_fidelity(&pipeline)?;
        pipeline.diffusion = DiffusionModel::new(pt.diffusion_sigma_ghz)?;
        let diffused = transfer_fidelity(&pipeline)?;
        if !sharp.is_finite() || sharp <= 0.0 {
            return Err(Error::numerics(
                "diffusion-free transfer fidelity vanished; cannot normalize",
            ));
        }
        Ok((diffused / sharp).min(1.0))
    }

    /// Average verification fidelity ⟨F⟩ at an operating point:
    /// (1 − ε_CP)² · F_g⁴ · [F_swap² for nuclear] · F_mem · M(t) · R(σ),
    /// where ε_CP is the bandwidth-dependent gate infidelity and R the
    /// diffusion penalty.
    pub fn average_fidelity(&self, pt: &OperatingPoint) -> Result<f64> {
        let cp = self.cp_infidelity(pt.bandwidth_ghz)?;
        self.average_fidelity_with_cp(pt, cp)
    }

    fn static_budget(&self, pt: &OperatingPoint, cp_infidelity: f64) -> Result<f64> {
        let mem = &self.config.memory;
        let swap = if mem.scheme == MemoryScheme::Nuclear {
            mem.swap_fidelity.powi(2)
        } else {
            1.0
        };
        let budget = (1.0 - cp_infidelity).powi(2)
            * self.config.gates.fidelity.powi(4)
            * swap
            * mem.fidelity
            * self.diffusion_penalty(pt)?;
        Ok(budget.clamp(0.0, 1.0))
    }

    fn average_fidelity_with_cp(&self, pt: &OperatingPoint, cp_infidelity: f64) -> Result<f64> {
        let f = self.static_budget(pt, cp_infidelity)? * self.memory_decay_factor(pt.storage_ns);
        Ok(f.clamp(0.0, 1.0))
    }

    /// Token-cycle timing at an operating point.  The nuclear scheme adds
    /// one swap before and one after storage.
    pub fn timing(&self, pt: &OperatingPoint) -> Result<TokenTiming> {
        let t_lt_ns = 1.0 / (2.0 * std::f64::consts::PI * pt.bandwidth_ghz);
        let storage_ns = if self.config.memory.scheme == MemoryScheme::Nuclear {
            pt.storage_ns + 2.0 * self.config.memory.swap_duration_ns
        } else {
            pt.storage_ns
        };
        TokenTiming::new(
            t_lt_ns,
            self.config.gates.duration_ns,
            self.config.link.measurement_ns,
            storage_ns,
            pt.fiber_length_km,
            self.config.link.c_fiber_km_per_s,
        )
    }

    /// Evaluate every figure of merit at one operating point.
    pub fn evaluate(&self, pt: &OperatingPoint) -> Result<RatePoint> {
        if !((0.0..=1.0).contains(&pt.collection_efficiency)) {
            return Err(Error::config(format!(
                "collection efficiency must lie in [0,1], got {}",
                pt.collection_efficiency
            )));
        }
        let cp = self.cp_infidelity(pt.bandwidth_ghz)?;
        let f_avg = self.average_fidelity_with_cp(pt, cp)?;
        let timing = self.timing(pt)?;
        let gamma_tok_hz = timing.token_rate_hz(self.security.design.n());
        let p_survive = pt.collection_efficiency
            * (-pt.fiber_length_km / self.config.link.attenuation_length_km).exp();
        let breakdown = acceptance_rate(&AcceptanceInput {
            design: self.security.design,
            p_survive,
            f_avg,
            token_rate_hz: gamma_tok_hz,
            model: LossModel::default(),
        })?;
        Ok(RatePoint {
            gamma_a_hz: breakdown.gamma_a_hz,
            gamma_tok_hz,
            f_avg,
            acceptance_prob: breakdown.acceptance_prob,
            cp_infidelity: cp,
            p_survive,
        })
    }

    /// Storage time (ns) at which ⟨F⟩ decays to the classical-forgery
    /// threshold 3/4, if it ever does.  `Some(0)` means the scenario is
    /// already at or below threshold with zero storage; `None` means the
    /// fidelity never reaches it (no decay, or an asymptote above 3/4).
    pub fn threshold_crossing_ns(&self, pt: &OperatingPoint) -> Result<Option<f64>> {
        let cp = self.cp_infidelity(pt.bandwidth_ghz)?;
        let a = self.static_budget(pt, cp)?;
        if a <= 0.75 {
            return Ok(Some(0.0));
        }
        if self.config.memory.scheme.is_electron() {
            let rel_per_ms = self.rates.gamma_plus_per_ms + self.rates.gamma_minus_per_ms;
            if rel_per_ms == 0.0 {
                return Ok(None);
            }
            // Solve ¼a(2 + x² + x) = ¾ for x = e^{−Γ_rel t / 2}.
            let c = 3.0 / a - 2.0;
            let x = 0.5 * (-1.0 + (1.0 + 4.0 * c).sqrt());
            let t_ms = -2.0 * x.ln() / rel_per_ms;
            Ok(Some(t_ms * 1.0e6))
        } else {
            let gamma_d = self.config.memory.gamma_d_per_s;
            if gamma_d == 0.0 {
                return Ok(None);
            }
            // Solve a(¾ + ¼ e^{−2γ_d t}) = ¾.
            let d = 3.0 * (1.0 - a) / a;
            if d <= 0.0 || d >= 1.0 {
                return Ok(None);
            }
            let t_s = -d.ln() / (2.0 * gamma_d);
            Ok(Some(t_s * 1.0e9))
        }
    }
}

fn transfer_fidelity(pipeline: &StoragePipeline) -> Result<f64> {
    let report = storage_report(pipeline)?;
    let mean = report
        .records()
        .iter()
        .map(|r| r.f_in * r.f_out)
        .sum::<f64>()
        / 4.0;
    Ok(mean)
}

fn validate_scalars(config: &ScenarioConfig) -> Result<()> {
    let unit = |name: &str, v: f64| -> Result<()> {
        if !(v.is_finite() && v > 0.0 && v <= 1.0) {
            return Err(Error::config(format!("{name} must lie in (0,1], got {v}")));
        }
        Ok(())
    };
    let nonneg = |name: &str, v: f64| -> Result<()> {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::config(format!("{name} must be ≥ 0, got {v}")));
        }
        Ok(())
    };
    unit("gates.fidelity", config.gates.fidelity)?;
    nonneg("gates.duration_ns", config.gates.duration_ns)?;
    unit("memory.fidelity", config.memory.fidelity)?;
    nonneg("memory.storage_ns", config.memory.storage_ns)?;
    unit("memory.swap_fidelity", config.memory.swap_fidelity)?;
    nonneg("memory.swap_duration_ns", config.memory.swap_duration_ns)?;
    nonneg("memory.gamma_d_per_s", config.memory.gamma_d_per_s)?;
    if let Some(v) = config.memory.gamma_plus_per_ms {
        nonneg("memory.gamma_plus_per_ms", v)?;
    }
    if let Some(v) = config.memory.gamma_minus_per_ms {
        nonneg("memory.gamma_minus_per_ms", v)?;
    }
    nonneg("link.measurement_ns", config.link.measurement_ns)?;
    if !(config.link.c_fiber_km_per_s.is_finite() && config.link.c_fiber_km_per_s > 0.0) {
        return Err(Error::config(format!(
            "link.c_fiber_km_per_s must be > 0, got {}",
            config.link.c_fiber_km_per_s
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn explicit_rate_config(gamma_minus_per_ms: f64) -> ScenarioConfig {
        let mut c = ScenarioConfig::optical();
        c.phonon = None;
        c.memory.gamma_plus_per_ms = Some(0.0);
        c.memory.gamma_minus_per_ms = Some(gamma_minus_per_ms);
        c
    }

    #[test]
    fn optical_scenario_reproduces_published_acceptance_rate() {
        let s = Scenario::from_config(ScenarioConfig::optical()).unwrap();
        let point = s.evaluate(&s.operating_point()).unwrap();
        assert!(
            point.gamma_a_hz > 80.5e3 && point.gamma_a_hz < 82.5e3,
            "gamma_a = {} Hz",
            point.gamma_a_hz
        );
        assert_relative_eq!(point.gamma_tok_hz, 284.3e3, max_relative = 1e-2);
        assert!(point.f_avg > 0.97 && point.f_avg < 0.99);
        assert_eq!(s.design().n(), 42);
        assert_eq!(s.design().t(), 41);
    }

    #[test]
    fn realistic_collection_efficiency_kills_the_rate() {
        let s = Scenario::from_config(ScenarioConfig::optical()).unwrap();
        let mut pt = s.operating_point();
        pt.collection_efficiency = 0.4915;
        let point = s.evaluate(&pt).unwrap();
        assert!(point.gamma_a_hz < 1.0, "gamma_a = {} Hz", point.gamma_a_hz);
        assert!(point.gamma_a_hz > 0.0);
    }

    #[test]
    fn efficiency_budget_product_matches_hand_value() {
        let mut c = ScenarioConfig::optical();
        c.phonon = None;
        c.link.eta_cf = 0.98;
        c.link.eta_fc = 0.73;
        c.link.eta_d = 0.98;
        let s = Scenario::from_config(c).unwrap();
        let eta = s.operating_point().collection_efficiency;
        assert!((eta - 0.4915).abs() < 5.0e-5, "eta_c = {eta}");
    }

    #[test]
    fn electron_decay_factor_has_correct_limits() {
        let s = Scenario::from_config(explicit_rate_config(31.4)).unwrap();
        assert_relative_eq!(s.memory_decay_factor(0.0), 1.0, epsilon = 1e-12);
        // Long-time limit: populations equilibrate, coherences die -> 1/2.
        assert_relative_eq!(s.memory_decay_factor(1.0e9), 0.5, epsilon = 1e-9);
        let mut prev = 1.0;
        for i in 1..=40 {
            let m = s.memory_decay_factor(i as f64 * 2.0e3);
            assert!(m < prev, "M must decrease monotonically");
            prev = m;
        }
    }

    #[test]
    fn nuclear_decay_factor_has_correct_limits() {
        let s = Scenario::from_config(ScenarioConfig::nuclear()).unwrap();
        assert_relative_eq!(s.memory_decay_factor(0.0), 1.0, epsilon = 1e-12);
        // Pure dephasing leaves populations intact -> 3/4.
        assert_relative_eq!(s.memory_decay_factor(1.0e12), 0.75, epsilon = 1e-9);
        assert!(s.memory_decay_factor(1.0e9) < s.memory_decay_factor(1.0e8));
    }

    #[test]
    fn threshold_crossing_is_a_root_of_the_budget() {
        for config in [explicit_rate_config(31.4), ScenarioConfig::nuclear()] {
            let s = Scenario::from_config(config).unwrap();
            let pt = s.operating_point();
            let t_star = s
                .threshold_crossing_ns(&pt)
                .unwrap()
                .expect("decaying scenario must cross 3/4");
            assert!(t_star > 0.0);
            let mut at = pt;
            at.storage_ns = t_star;
            let f = s.average_fidelity(&at).unwrap();
            assert_relative_eq!(f, 0.75, epsilon = 1e-9);
        }
    }

    #[test]
    fn threshold_crossing_edge_cases() {
        // No decay at all: never crosses.
        let s = Scenario::from_config(explicit_rate_config(0.0)).unwrap();
        assert_eq!(s.threshold_crossing_ns(&s.operating_point()).unwrap(), None);
        // Budget already below 3/4: crossing at zero.
        let mut c = explicit_rate_config(31.4);
        c.memory.fidelity = 0.7;
        let s = Scenario::from_config(c).unwrap();
        assert_eq!(
            s.threshold_crossing_ns(&s.operating_point()).unwrap(),
            Some(0.0)
        );
    }

    #[test]
    fn nuclear_scenario_matches_published_initial_rate() {
        let s = Scenario::from_config(ScenarioConfig::nuclear()).unwrap();
        let point = s.evaluate(&s.operating_point()).unwrap();
        // Swap overhead dominates the cycle: ~4.9 kHz issuance.
        assert_relative_eq!(point.gamma_tok_hz, 4.91e3, max_relative = 2e-2);
        assert!(
            (point.gamma_a_hz - 1.36e3).abs() < 0.05 * 1.36e3,
            "gamma_a = {} Hz",
            point.gamma_a_hz
        );
    }

    #[test]
    fn microwave_scenario_matches_published_initial_rate() {
        let s = Scenario::from_config(ScenarioConfig::microwave()).unwrap();
        let point = s.evaluate(&s.operating_point()).unwrap();
        assert!(
            (point.gamma_a_hz - 53.22e3).abs() < 0.05 * 53.22e3,
            "gamma_a = {} Hz",
            point.gamma_a_hz
        );
    }

    #[test]
    fn optical_relaxation_is_phonon_derived() {
        let s = Scenario::from_config(ScenarioConfig::optical()).unwrap();
        assert!(
            (s.rates().gamma_minus_per_ms - 31.4).abs() < 0.05,
            "gamma_minus = {} /ms",
            s.rates().gamma_minus_per_ms
        );
        // At 0.1 K the upward rate is utterly frozen out.
        assert!(s.rates().gamma_plus_per_ms < 1.0e-12);
    }

    #[test]
    fn explicit_rates_override_phonon_derivation() {
        let mut c = ScenarioConfig::optical();
        c.memory.gamma_plus_per_ms = Some(0.25);
        c.memory.gamma_minus_per_ms = Some(1.5);
        let s = Scenario::from_config(c).unwrap();
        assert_eq!(s.rates().gamma_plus_per_ms, 0.25);
        assert_eq!(s.rates().gamma_minus_per_ms, 1.5);
    }

    #[test]
    fn config_round_trips_through_toml() {
        for config in [
            ScenarioConfig::optical(),
            ScenarioConfig::microwave(),
            ScenarioConfig::nuclear(),
        ] {
            let text = config.to_toml_string().unwrap();
            let back = ScenarioConfig::from_toml_str(&text).unwrap();
            assert_eq!(config, back);
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ScenarioConfig::from_toml_str("[cavity]\nkapa_ghz = 1.0\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)), "got {err:?}");
        let err = ScenarioConfig::from_toml_str("[typo]\nx = 1\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)), "got {err:?}");
    }

    #[test]
    fn set_overrides_apply_in_order() {
        let sets = vec![
            "photon.bandwidth_ghz=3.0".to_string(),
            "memory.scheme=nuclear".to_string(),
            "photon.bandwidth_ghz=4.5".to_string(),
        ];
        let c = ScenarioConfig::load(None, &sets).unwrap();
        assert_eq!(c.photon.bandwidth_ghz, 4.5);
        assert_eq!(c.memory.scheme, MemoryScheme::Nuclear);
    }

    #[test]
    fn bad_set_overrides_are_rejected() {
        let err = ScenarioConfig::load(None, &["photon.bandwith_ghz=3".to_string()]).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "got {err:?}");
        let err = ScenarioConfig::load(None, &["no-equals-sign".to_string()]).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "got {err:?}");
        let err = ScenarioConfig::load(None, &["memory.scheme=hamster".to_string()]).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "got {err:?}");
    }

    #[test]
    fn config_hash_is_deterministic_and_sensitive() {
        let a = ScenarioConfig::optical().hash().unwrap();
        let b = ScenarioConfig::optical().hash().unwrap();
        assert_eq!(a, b);
        let mut c = ScenarioConfig::optical();
        c.photon.bandwidth_ghz += 1.0e-9;
        assert_ne!(a, c.hash().unwrap());
        assert_eq!(fnv1a64(b"") , 0xcbf29ce484222325);
    }

    #[test]
    fn diffusion_penalty_is_one_without_sigma_and_below_one_with() {
        let s = Scenario::from_config(explicit_rate_config(0.0)).unwrap();
        let mut pt = s.operating_point();
        assert_eq!(s.diffusion_penalty(&pt).unwrap(), 1.0);
        pt.diffusion_sigma_ghz = 2.0;
        let r = s.diffusion_penalty(&pt).unwrap();
        assert!(r > 0.5 && r <= 1.0, "R = {r}");
    }
}
