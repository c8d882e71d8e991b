//! Cavity design optimization: find the operating point (κ, δ, ω₀) that
//! minimizes the controlled-phase gate infidelity, either at the nominal
//! fabrication target or averaged over a fabrication-uncertainty region.
//!
//! The robust objective averages the infidelity over a rectangular region of
//! (κ, ω_c) deviations on a uniform grid,
//!
//! ```text
//! ⟨1 − F⟩ = (1/|S|) Σ_{(δκ, δω_c) ∈ S} [1 − F_CP(κ + δκ, ω_c + δω_c, ω₀)]
//! ```
//!
//! with the photon center frequency ω₀ held fixed across the region (the
//! laser is tunable after fabrication, but one design must serve all
//! fabrication outcomes).  A cavity resonance deviation δω_c enters the
//! detuning as δ → δ − δω_c.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{global_minimize, Bounds, DeConfig, MinimizeResult, NelderMeadConfig};
use crate::spectra::{cp_gate_fidelity, CavitySpinParams, CouplingModel, PhotonSpectrum};

/// Fabrication-uncertainty region: a uniform grid of (δκ, δω_c) deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyRegion {
    /// Half-width of κ deviations (GHz).
    pub half_width_kappa_ghz: f64,
    /// Half-width of ω_c deviations (GHz).
    pub half_width_omega_c_ghz: f64,
    /// Grid points per axis (e.g. 5 for a 5×5 region).
    pub grid_per_axis: usize,
}

impl Default for UncertaintyRegion {
    fn default() -> Self {
        UncertaintyRegion {
            half_width_kappa_ghz: 2.0,
            half_width_omega_c_ghz: 2.0,
            grid_per_axis: 5,
        }
    }
}

impl UncertaintyRegion {
    /// Enumerate the grid of (δκ, δω_c) deviations.
    pub fn offsets(&self) -> Vec<(f64, f64)> {
        let n = self.grid_per_axis.max(1);
        let axis = |half: f64| -> Vec<f64> {
            if n == 1 {
                vec![0.0]
            } else {
                (0..n)
                    .map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64)
                    .collect()
            }
        };
        let ks = axis(self.half_width_kappa_ghz);
        let ws = axis(self.half_width_omega_c_ghz);
        let mut out = Vec::with_capacity(n * n);
        for &dk in &ks {
            for &dw in &ws {
                out.push((dk, dw));
            }
        }
        out
    }
}

/// Search-space box for the design variables (κ, δ, ω₀ − ω_a).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignBounds {
    /// κ range (GHz).
    pub kappa_ghz: (f64, f64),
    /// δ range (GHz).
    pub delta_ghz: (f64, f64),
    /// ω₀ − ω_a range (GHz).
    pub omega0_offset_ghz: (f64, f64),
}

impl Default for DesignBounds {
    fn default() -> Self {
        DesignBounds {
            kappa_ghz: (1.0, 200.0),
            delta_ghz: (-300.0, 300.0),
            omega0_offset_ghz: (-300.0, 300.0),
        }
    }
}

/// The full design problem: fixed physics plus the searchable variables.
#[derive(Debug, Clone)]
pub struct DesignProblem {
    /// Template parameters; κ and δ are overwritten by the search, the rest
    /// (Γ, ω_s, ω_a, the κ_l:κ ratio) are kept.
    pub template: CavitySpinParams,
    /// How g responds to retuning the cavity.
    pub coupling: CouplingModel,
    /// Photon spectrum.
    pub spectrum: PhotonSpectrum,
    /// Search box.
    pub bounds: DesignBounds,
}

impl DesignProblem {
    /// Materialize concrete cavity parameters for a candidate (κ, δ).
    pub fn params_at(&self, kappa_ghz: f64, delta_ghz: f64) -> Result<CavitySpinParams> {
        let mut p = self.template;
        let ratio = p.kappa_loaded_ghz / p.kappa_ghz;
        p.kappa_ghz = kappa_ghz;
        p.kappa_loaded_ghz = ratio * kappa_ghz;
        p.delta_ghz = delta_ghz;
        p.g_ghz = self.coupling.resolve(p.omega_c_ghz())?;
        p.validated()
    }

    /// Nominal infidelity 1 − F_CP at a candidate design.
    pub fn infidelity(&self, kappa_ghz: f64, delta_ghz: f64, omega0_offset_ghz: f64) -> Result<f64> {
        let p = self.params_at(kappa_ghz, delta_ghz)?;
        let f = cp_gate_fidelity(&p, &self.spectrum, p.omega_a_ghz + omega0_offset_ghz)?;
        Ok(1.0 - f)
    }

    /// Region-averaged infidelity over a fabrication-uncertainty grid,
    /// with ω₀ held fixed.
    pub fn region_average_infidelity(
        &self,
        kappa_ghz: f64,
        delta_ghz: f64,
        omega0_offset_ghz: f64,
        region: &UncertaintyRegion,
    ) -> Result<f64> {
        let offsets = region.offsets();
        let total: Result<f64> = offsets
            .par_iter()
            .map(|&(dk, dw)| {
                // δω_c shifts the cavity resonance, so δ = ω_a − ω_c drops by δω_c.
                self.infidelity(kappa_ghz + dk, delta_ghz - dw, omega0_offset_ghz)
            })
            .try_reduce(|| 0.0, |a, b| Ok(a + b));
        Ok(total? / offsets.len() as f64)
    }

    fn search_bounds(&self) -> Result<Bounds> {
        Bounds::new(
            vec![
                self.bounds.kappa_ghz.0,
                self.bounds.delta_ghz.0,
                self.bounds.omega0_offset_ghz.0,
            ],
            vec![
                self.bounds.kappa_ghz.1,
                self.bounds.delta_ghz.1,
                self.bounds.omega0_offset_ghz.1,
            ],
        )
    }
}

/// An optimized cavity design.
#[derive(Debug, Clone, Serialize)]
pub struct OptimalDesign {
    /// Cavity linewidth κ (GHz).
    pub kappa_ghz: f64,
    /// Atom-cavity detuning δ (GHz).
    pub delta_ghz: f64,
    /// Photon center frequency relative to the atom, ω₀ − ω_a (GHz).
    pub omega0_offset_ghz: f64,
    /// Nominal infidelity 1 − F_CP at the design point.
    pub infidelity: f64,
    /// Region-averaged infidelity, when optimized robustly.
    pub region_avg_infidelity: Option<f64>,
    /// Cooperativity at the design point.
    pub cooperativity: f64,
    /// Objective evaluations consumed.
    pub evaluations: usize,
    /// Whether local refinement met its tolerance.
    pub converged: bool,
}

fn package(problem: &DesignProblem, r: MinimizeResult, region: Option<&UncertaintyRegion>) -> Result<OptimalDesign> {
    let (kappa, delta, omega0) = (r.x[0], r.x[1], r.x[2]);
    let nominal = problem.infidelity(kappa, delta, omega0)?;
    let region_avg = match region {
        Some(reg) => Some(problem.region_average_infidelity(kappa, delta, omega0, reg)?),
        None => None,
    };
    let p = problem.params_at(kappa, delta)?;
    Ok(OptimalDesign {
        kappa_ghz: kappa,
        delta_ghz: delta,
        omega0_offset_ghz: omega0,
        infidelity: nominal,
        region_avg_infidelity: region_avg,
        cooperativity: p.cooperativity(),
        evaluations: r.evaluations,
        converged: r.converged,
    })
}

/// Optimize the nominal (point) infidelity.
pub fn optimize_standard(problem: &DesignProblem, seed: u64) -> Result<OptimalDesign> {
    let bounds = problem.search_bounds()?;
    let objective = |x: &[f64]| problem.infidelity(x[0], x[1], x[2]);
    let r = global_minimize(
        &objective,
        &bounds,
        &DeConfig::default(),
        &NelderMeadConfig::default(),
        4,
        1e-9,
        seed,
    )?;
    package(problem, r, None)
}

/// Optimize the region-averaged infidelity (robust design).
pub fn optimize_robust(
    problem: &DesignProblem,
    region: &UncertaintyRegion,
    seed: u64,
) -> Result<OptimalDesign> {
    // Shrink the search box by the region half-widths so every probed
    // fabrication offset stays inside the physical domain (κ > 0 in
    // particular); a design whose uncertainty region leaves the domain is
    // not a usable robust design anyway.
    let mut bounds = problem.search_bounds()?;
    bounds.lo[0] += region.half_width_kappa_ghz;
    bounds.hi[0] -= region.half_width_kappa_ghz;
    bounds.lo[1] += region.half_width_omega_c_ghz;
    bounds.hi[1] -= region.half_width_omega_c_ghz;
    if bounds.lo[0] >= bounds.hi[0] || bounds.lo[1] >= bounds.hi[1] {
        return Err(Error::config(
            "uncertainty region is wider than the design search box",
        ));
    }
    let objective = |x: &[f64]| problem.region_average_infidelity(x[0], x[1], x[2], region);
    let r = global_minimize(
        &objective,
        &bounds,
        &DeConfig::default(),
        &NelderMeadConfig::default(),
        4,
        1e-9,
        seed,
    )?;
    package(problem, r, Some(region))
}

/// Refine an existing design with local search only (warm start), e.g. when
/// sweeping an external parameter in small steps.  The initial simplex is
/// kept small (0.02% of the bound widths) so the search stays in the basin
/// of the supplied design.
pub fn refine_design(problem: &DesignProblem, start: &OptimalDesign) -> Result<OptimalDesign> {
    let nm = NelderMeadConfig {
        initial_scale: 2e-4,
        ..NelderMeadConfig::default()
    };
    let bounds = problem.search_bounds()?;
    let objective = |x: &[f64]| problem.infidelity(x[0], x[1], x[2]);
    let r = crate::optim::nelder_mead(
        &objective,
        &bounds,
        &[start.kappa_ghz, start.delta_ghz, start.omega0_offset_ghz],
        &nm,
    )?;
    package(problem, r, None)
}

/// One cell of a fidelity landscape.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LandscapeCell {
    /// κ (GHz).
    pub kappa_ghz: f64,
    /// δ (GHz).
    pub delta_ghz: f64,
    /// 1 − F_CP with ω₀ fixed at the supplied offset.
    pub infidelity: f64,
}

/// Evaluate the infidelity on a (κ, δ) grid at fixed ω₀ − ω_a.
///
/// Rows are emitted κ-major in ascending order, matching the CSV layout
/// `kappa_ghz,delta_ghz,infidelity`.
pub fn fidelity_landscape(
    problem: &DesignProblem,
    omega0_offset_ghz: f64,
    kappa_range: (f64, f64),
    delta_range: (f64, f64),
    resolution: usize,
) -> Result<Vec<LandscapeCell>> {
    let n = resolution.max(1);
    let axis = |range: (f64, f64)| -> Vec<f64> {
        if n == 1 {
            return vec![0.5 * (range.0 + range.1)];
        }
        (0..n)
            .map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64)
            .collect()
    };
    let kappas = axis(kappa_range);
    let deltas = axis(delta_range);
    let mut cells = Vec::with_capacity(n * n);
    for &k in &kappas {
        for &d in &deltas {
            cells.push((k, d));
        }
    }
    cells
        .par_iter()
        .map(|&(kappa_ghz, delta_ghz)| {
            let infidelity = problem.infidelity(kappa_ghz, delta_ghz, omega0_offset_ghz)?;
            Ok(LandscapeCell {
                kappa_ghz,
                delta_ghz,
                infidelity,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn toy_problem() -> DesignProblem {
        DesignProblem {
            template: CavitySpinParams::half_open(30.0, 0.0212207, 5.0912, 100.0, 70.0).unwrap(),
            coupling: CouplingModel::Fixed { g_ghz: 5.0912 },
            spectrum: PhotonSpectrum::new(3.18).unwrap(),
            bounds: DesignBounds::default(),
        }
    }

    #[test]
    fn region_offsets_cover_grid() {
        let region = UncertaintyRegion::default();
        let offsets = region.offsets();
        assert_eq!(offsets.len(), 25);
        assert!(offsets.contains(&(-2.0, -2.0)));
        assert!(offsets.contains(&(2.0, 2.0)));
        assert!(offsets.contains(&(0.0, 0.0)));
        let sum: (f64, f64) = offsets.iter().fold((0.0, 0.0), |acc, &(a, b)| (acc.0 + a, acc.1 + b));
        assert_relative_eq!(sum.0, 0.0, epsilon = 1e-12);
        assert_relative_eq!(sum.1, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn single_point_region_matches_nominal() {
        let problem = toy_problem();
        let region = UncertaintyRegion {
            half_width_kappa_ghz: 0.0,
            half_width_omega_c_ghz: 0.0,
            grid_per_axis: 1,
        };
        let nominal = problem.infidelity(34.0, 108.0, -63.0).unwrap();
        let avg = problem.region_average_infidelity(34.0, 108.0, -63.0, &region).unwrap();
        assert_relative_eq!(nominal, avg, max_relative = 1e-12);
    }

    #[test]
    fn landscape_has_expected_layout() {
        let problem = toy_problem();
        let cells = fidelity_landscape(&problem, -63.0, (30.0, 40.0), (100.0, 120.0), 3).unwrap();
        assert_eq!(cells.len(), 9);
        assert_relative_eq!(cells[0].kappa_ghz, 30.0);
        assert_relative_eq!(cells[0].delta_ghz, 100.0);
        assert_relative_eq!(cells[8].kappa_ghz, 40.0);
        assert_relative_eq!(cells[8].delta_ghz, 120.0);
        for c in &cells {
            assert!(c.infidelity.is_finite() && c.infidelity >= 0.0 && c.infidelity <= 1.0);
        }
    }

    #[test]
    fn coupling_ratio_preserved_when_materializing() {
        let mut template = CavitySpinParams::half_open(30.0, 0.02, 5.0, 100.0, 70.0).unwrap();
        template.kappa_loaded_ghz = 15.0; // two-sided cavity
        let problem = DesignProblem {
            template,
            coupling: CouplingModel::Fixed { g_ghz: 5.0 },
            spectrum: PhotonSpectrum::new(3.0).unwrap(),
            bounds: DesignBounds::default(),
        };
        let p = problem.params_at(60.0, 90.0).unwrap();
        assert_relative_eq!(p.kappa_loaded_ghz, 30.0, max_relative = 1e-12);
       assert_relative_eq!(p.delta_ghz, 90.0, max_relative = 1e-12);
    }
}
