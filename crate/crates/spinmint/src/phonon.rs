//! Phonon-limited rate machinery: Christoffel elastic eigenproblem,
//! unit-sphere quadrature for the absorption cross-section, thermal
//! occupation, and Lindblad rate assembly.
//!
//! The decay rate between levels i and j is
//! γ_{ij} = 2π Σ_R |h_{Rij}|² χ_R |ω_i−ω_j|³ n, with the absorption
//! cross-section per strain mode R
//!
//! χ_R = Σ_m ∫_S ħ · tr²(D_R k qᵀ) / (16 π³ ρ c_m⁵) dS,
//!
//! where the integral runs over unit wave-vector directions k, and for each
//! direction the three acoustic modes m have polarization q and speed c_m
//! from the Christoffel eigenproblem ρ c² q = Γ(k) q.
//!
//! # Unit convention
//!
//! Quoted inputs use lab units (GPa, g/cm³, PHz for the strain
//! susceptibilities, GHz for level splittings, K for temperature).  Inside
//! the cross-section and the Bose factor everything is converted to SI with
//! quoted frequencies read as ordinary frequencies (ω = 2πν); χ_R then
//! carries units of s², so that 2π|h|²χ|ω|³n is a rate in 1/s.  The overall
//! normalization of the |ω|³ factor is convention-dependent in the source
//! formulas; it is absorbed into the externally supplied, dimensionless
//! matrix elements h_{Rij}, which should be calibrated against a measured
//! relaxation time.

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Reduced Planck constant, J·s.
pub const HBAR_J_S: f64 = 1.054_571_817e-34;
/// Planck constant, J·s.
pub const PLANCK_J_S: f64 = 6.626_070_15e-34;
/// Boltzmann constant, J/K.
pub const BOLTZMANN_J_PER_K: f64 = 1.380_649e-23;

const UNIT_DIRECTION_TOL: f64 = 1e-12;
const SPHERE_REL_TOL: f64 = 1e-6;
/// Doubling ladder for the product sphere grid: (θ-order, φ-order).
const SPHERE_BASE: (usize, usize) = (16, 32);
const SPHERE_CAP: (usize, usize) = (256, 512);

// ---------------------------------------------------------------------------
// Elastic medium
// ---------------------------------------------------------------------------

/// Cubic elastic medium: stiffness constants and mass density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticMedium {
    c11_gpa: f64,
    c12_gpa: f64,
    c44_gpa: f64,
    density_g_cm3: f64,
}

impl ElasticMedium {
    /// Stiffness constants in GPa, density in g/cm³.  Requires the cubic
    /// stability conditions C₁₁ > |C₁₂| and C₄₄ > 0.
    pub fn new(c11_gpa: f64, c12_gpa: f64, c44_gpa: f64, density_g_cm3: f64) -> Result<Self> {
        for (name, v) in [
            ("C11", c11_gpa),
            ("C44", c44_gpa),
            ("density", density_g_cm3),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::domain(format!("{name} must be > 0, got {v}")));
            }
        }
        if !c12_gpa.is_finite() || c11_gpa <= c12_gpa.abs() {
            return Err(Error::domain(format!(
                "cubic stability requires C11 > |C12| (got C11={c11_gpa}, C12={c12_gpa})"
            )));
        }
        Ok(ElasticMedium {
            c11_gpa,
            c12_gpa,
            c44_gpa,
            density_g_cm3,
        })
    }

    /// Diamond: C₁₁=1079.6, C₁₂=126.73, C₄₄=578.16 GPa, ρ=3.51 g/cm³.
    pub fn diamond() -> Self {
        ElasticMedium::new(1079.6, 126.73, 578.16, 3.51)
            .expect("diamond constants satisfy the stability conditions")
    }

    /// An isotropic medium has C₄₄ = (C₁₁ − C₁₂)/2.
    pub fn isotropic(c11_gpa: f64, c12_gpa: f64, density_g_cm3: f64) -> Result<Self> {
        ElasticMedium::new(c11_gpa, c12_gpa, (c11_gpa - c12_gpa) / 2.0, density_g_cm3)
    }

    pub fn c11_gpa(&self) -> f64 {
        self.c11_gpa
    }
    pub fn c12_gpa(&self) -> f64 {
        self.c12_gpa
    }
    pub fn c44_gpa(&self) -> f64 {
        self.c44_gpa
    }
    pub fn density_g_cm3(&self) -> f64 {
        self.density_g_cm3
    }

    /// Christoffel matrix Γ_ik = C_ijkl n_j n_l / ρ for a cubic crystal, in
    /// (km/s)²: GPa / (g/cm³) = 10⁶ m²/s² = (km/s)².
    fn christoffel_matrix(&self, n: &Vector3<f64>) -> Matrix3<f64> {
        let (c11, c12, c44) = (self.c11_gpa, self.c12_gpa, self.c44_gpa);
        let mixed = c12 + c44;
        let m = Matrix3::new(
            c11 * n.x * n.x + c44 * (n.y * n.y + n.z * n.z),
            mixed * n.x * n.y,
            mixed * n.x * n.z,
            mixed * n.x * n.y,
            c11 * n.y * n.y + c44 * (n.x * n.x + n.z * n.z),
            mixed * n.y * n.z,
            mixed * n.x * n.z,
            mixed * n.y * n.z,
            c11 * n.z * n.z + c44 * (n.x * n.x + n.y * n.y),
        );
        m / self.density_g_cm3
    }
}

/// One acoustic mode along a given propagation direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcousticMode {
    /// Phase velocity in km/s.
    pub velocity_km_s: f64,
    /// Unit polarization vector.
    pub polarization: Vector3<f64>,
}

/// Solve the Christoffel eigenproblem for a unit propagation direction.
/// Returns the three (velocity, polarization) pairs sorted by descending
/// velocity; polarizations are orthonormal.
pub fn christoffel_velocities(
    direction: &Vector3<f64>,
    medium: &ElasticMedium,
) -> Result<[AcousticMode; 3]> {
    if (direction.norm() - 1.0).abs() > UNIT_DIRECTION_TOL {
        return Err(Error::domain(format!(
            "propagation direction must be a unit vector (|n| = {})",
            direction.norm()
        )));
    }
    let gamma = medium.christoffel_matrix(direction);
    let eig = nalgebra::SymmetricEigen::new(gamma);
    let mut modes: Vec<AcousticMode> = (0..3)
        .map(|i| {
            let lambda = eig.eigenvalues[i];
            if lambda <= 0.0 {
                return Err(Error::numerics(format!(
                    "Christoffel matrix not positive definite (eigenvalue {lambda})"
                )));
            }
            Ok(AcousticMode {
                velocity_km_s: lambda.sqrt(),
                polarization: eig.eigenvectors.column(i).into_owned(),
            })
        })
        .collect::<Result<_>>()?;
    modes.sort_by(|a, b| b.velocity_km_s.total_cmp(&a.velocity_km_s));
    Ok([modes[0], modes[1], modes[2]])
}

// ---------------------------------------------------------------------------
// Strain susceptibility
// ---------------------------------------------------------------------------

/// Strain susceptibility parameters (d, f) of one orbital manifold, in PHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrainSusceptibility {
    d_phz: f64,
    f_phz: f64,
}

impl StrainSusceptibility {
    pub fn new(d_phz: f64, f_phz: f64) -> Self {
        StrainSusceptibility { d_phz, f_phz }
    }

    /// Ground manifold: d = 0.787 PHz, f = −0.562 PHz.
    pub fn ground() -> Self {
        StrainSusceptibility::new(0.787, -0.562)
    }

    /// Excited manifold: d = 0.956 PHz, f = −2.555 PHz.
    pub fn excited() -> Self {
        StrainSusceptibility::new(0.956, -2.555)
    }

    pub fn d_phz(&self) -> f64 {
        self.d_phz
    }
    pub fn f_phz(&self) -> f64 {
        self.f_phz
    }

    /// D_Ebx = [[d, 0, f/2], [0, −d, 0], [f/2, 0, 0]] (PHz).
    pub fn d_ebx(&self) -> Matrix3<f64> {
        let (d, fh) = (self.d_phz, self.f_phz / 2.0);
        Matrix3::new(d, 0.0, fh, 0.0, -d, 0.0, fh, 0.0, 0.0)
    }

    /// D_Eby = [[0, −d, 0], [−d, 0, f/2], [0, f/2, 0]] (PHz).
    pub fn d_eby(&self) -> Matrix3<f64> {
        let (d, fh) = (self.d_phz, self.f_phz / 2.0);
        Matrix3::new(0.0, -d, 0.0, -d, 0.0, fh, 0.0, fh, 0.0)
    }
}

// ---------------------------------------------------------------------------
// Sphere quadrature
// ---------------------------------------------------------------------------

/// Integrate `f(k̂)` over the unit sphere with a product rule:
/// Gauss–Legendre in cos θ × uniform (trapezoidal) grid in φ.
pub fn sphere_integral(
    f: &impl Fn(&Vector3<f64>) -> f64,
    n_theta: usize,
    n_phi: usize,
) -> Result<f64> {
    let (nodes, weights) = crate::quad::gauss_legendre(n_theta);
    let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
    let mut total = 0.0;
    for (u, w) in nodes.iter().zip(weights.iter()) {
        let sin_theta = (1.0 - u * u).max(0.0).sqrt();
        let mut ring = 0.0;
        for p in 0..n_phi {
            // Midpoint offsets keep the poles and seams off the grid.
            let phi = dphi * (p as f64 + 0.5);
            let k = Vector3::new(sin_theta * phi.cos(), sin_theta * phi.sin(), *u);
            ring += f(&k);
        }
        total += w * ring * dphi;
    }
    Ok(total)
}

/// Integrate over the sphere, doubling both grid orders until the result is
/// stable to `SPHERE_REL_TOL` relative.
fn sphere_integral_converged(f: &impl Fn(&Vector3<f64>) -> f64) -> Result<f64> {
    let (mut nt, mut np) = SPHERE_BASE;
    let mut previous = sphere_integral(f, nt, np)?;
    while nt < SPHERE_CAP.0 {
        nt *= 2;
        np *= 2;
        let refined = sphere_integral(f, nt, np)?;
        let scale = refined.abs().max(1e-300);
        if (refined - previous).abs() / scale <= SPHERE_REL_TOL {
            return Ok(refined);
        }
        previous = refined;
    }
    Err(Error::numerics(format!(
        "sphere integral did not converge to {SPHERE_REL_TOL} relative by a {}×{} grid",
        SPHERE_CAP.0, SPHERE_CAP.1
    )))
}

// ---------------------------------------------------------------------------
// Absorption cross-section
// ---------------------------------------------------------------------------

const PHZ_TO_ANGULAR_SI: f64 = 2.0 * std::f64::consts::PI * 1.0e15;
const GHZ_TO_ANGULAR_SI: f64 = 2.0 * std::f64::consts::PI * 1.0e9;
const KM_S_TO_M_S: f64 = 1.0e3;
const G_CM3_TO_KG_M3: f64 = 1.0e3;

/// Directional integrand Σ_m (q·D k̂)² / c_m⁵ with D in angular SI and
/// velocities in m/s.
fn mode_sum(d_si: &Matrix3<f64>, k: &Vector3<f64>, medium: &ElasticMedium) -> Result<f64> {
    let dk = d_si * k;
    let modes = christoffel_velocities(k, medium)?;
    Ok(modes
        .iter()
        .map(|m| {
            let coupling = m.polarization.dot(&dk);
            let c = m.velocity_km_s * KM_S_TO_M_S;
            coupling * coupling / c.powi(5)
        })
        .sum())
}

/// Phononic absorption cross-section
/// χ_R = Σ_m ∫_S ħ tr²(D_R k qᵀ) / (16π³ ρ c_m⁵) dS, in s².
///
/// `d_matrix` is the assembled strain susceptibility matrix in PHz (see
/// [`StrainSusceptibility::d_ebx`]); it is converted to angular SI
/// internally.  The sphere integral uses a doubling product grid converged
/// to 1e−6 relative.
pub fn absorption_cross_section(d_matrix: &Matrix3<f64>, medium: &ElasticMedium) -> Result<f64> {
    let d_si = d_matrix * PHZ_TO_ANGULAR_SI;
    let rho_si = medium.density_g_cm3 * G_CM3_TO_KG_M3;
    let prefactor = HBAR_J_S / (16.0 * std::f64::consts::PI.powi(3) * rho_si);
    // Propagate Christoffel failures out of the closure via a slot; the
    // integrand itself cannot return a Result.
    let failure = std::cell::RefCell::new(None);
    let integrand = |k: &Vector3<f64>| match mode_sum(&d_si, k, medium) {
        Ok(v) => v,
        Err(e) => {
            *failure.borrow_mut() = Some(e);
            0.0
        }
    };
    let integral = sphere_integral_converged(&integrand)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(prefactor * integral)
}

// ---------------------------------------------------------------------------
// Occupation and rates
// ---------------------------------------------------------------------------

/// Two-branch phononic occupation number:
/// n(ω) = (e^{ħ|ω|/k_BT} − 1)^{-1} for ω > 0, with +1 added for ω < 0.
/// ω is quoted in GHz (ordinary frequency), T in K.
pub fn occupation(omega_ghz: f64, temperature_k: f64) -> Result<f64> {
    if omega_ghz == 0.0 {
        return Err(Error::domain(
            "occupation number diverges at zero frequency",
        ));
    }
    if !(temperature_k.is_finite() && temperature_k > 0.0) {
        return Err(Error::domain(format!(
            "temperature must be > 0, got {temperature_k}"
        )));
    }
    let x = HBAR_J_S * omega_ghz.abs() * GHZ_TO_ANGULAR_SI / (BOLTZMANN_J_PER_K * temperature_k);
    let bose = x.exp_m1().recip();
    Ok(if omega_ghz > 0.0 { bose } else { bose + 1.0 })
}

/// Externally supplied rate-matrix data: one complex h-matrix per strain
/// mode R, the level frequencies, and the temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrixInput {
    /// h_{Rij} for each mode R; each matrix is n×n over the level index.
    pub h: Vec<DMatrix<Complex64>>,
    /// Level frequencies ω_i in GHz.
    pub omega_ghz: Vec<f64>,
    /// Temperature in K.
    pub temperature_k: f64,
}

impl RateMatrixInput {
    fn validate(&self, chi_s2: &[f64]) -> Result<()> {
        if !(self.temperature_k.is_finite() && self.temperature_k > 0.0) {
            return Err(Error::domain(format!(
                "temperature must be > 0, got {}",
                self.temperature_k
            )));
        }
        if self.h.len() != chi_s2.len() {
            return Err(Error::config(format!(
                "{} h-matrices supplied for {} cross-sections",
                self.h.len(),
                chi_s2.len()
            )));
        }
        let n = self.omega_ghz.len();
        for (r, m) in self.h.iter().enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::config(format!(
                    "h-matrix {r} is {}×{}, expected {n}×{n} to match the level table",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        Ok(())
    }
}

/// Phononic decay rate γ_{ij} = 2π Σ_R |h_{Rij}|² χ_R |ω_i−ω_j|³ n for the
/// Lindblad operator |j⟩⟨i|, in 1/ms.
///
/// The occupation is evaluated at ω_j − ω_i so that a downward transition
/// (ω_i > ω_j, energy released into the lattice) carries the spontaneous
/// +1 branch; this is what makes the up/down rate pair obey detailed
/// balance, γ_up/γ_down = e^{−ħω/k_BT}.
pub fn phonon_rate(i: usize, j: usize, input: &RateMatrixInput, chi_s2: &[f64]) -> Result<f64> {
    input.validate(chi_s2)?;
    let n = input.omega_ghz.len();
    if i == j {
        return Err(Error::domain("phonon rate requires two distinct levels"));
    }
    if i >= n || j >= n {
        return Err(Error::domain(format!(
            "level indices ({i}, {j}) out of range for {n} levels"
        )));
    }
    let delta_ghz = input.omega_ghz[i] - input.omega_ghz[j];
    if delta_ghz == 0.0 {
        return Err(Error::domain(
            "levels are degenerate; the phonon rate is undefined",
        ));
    }
    let occupation = occupation(-delta_ghz, input.temperature_k)?;
    let omega_si = delta_ghz.abs() * GHZ_TO_ANGULAR_SI;
    let coupling: f64 = input
        .h
        .iter()
        .zip(chi_s2.iter())
        .map(|(h, chi)| h[(i, j)].norm_sqr() * chi)
        .sum();
    let rate_per_s = 2.0 * std::f64::consts::PI * coupling * omega_si.powi(3) * occupation;
    Ok(rate_per_s * 1.0e-3)
}
