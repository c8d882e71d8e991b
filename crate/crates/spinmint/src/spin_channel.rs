//! Density-matrix pipeline for writing a photonic time-bin qubit into a
//! cavity-coupled spin and reading it back out.
//!
//! The write sequence reflects the early bin off the cavity, applies a π/2
//! rotation to the spin, reflects the late bin, measures the photon in the
//! X basis and applies a heralded frame correction.  The read sequence runs
//! the mirror image on a fresh `(∣e⟩+∣l⟩)/√2` photon and projects the spin
//! in Z.  Both are tracked at the density-matrix level so imperfect π/2
//! gates (a CPTP channel), photon-generation depolarization, spectral
//! diffusion of the photon's center frequency, and storage decoherence all
//! compose without approximation.
//!
//! Finite bandwidth enters through the six spectral moments of the two
//! reflection responses against S² (see [`crate::spectra`]).  The photon's
//! frequency is traced out after the bin measurement, so density-matrix
//! entries involve same-frequency products such as ∫S²·r₁r₂* — not products
//! of separate single integrals.
//!
//! Internally every branch is kept unnormalized (so channel linearity holds
//! exactly); normalization happens only at the public API boundary.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::spectra::{compute_moments, CavitySpinParams, PhotonSpectrum, SpectralMoments};

/// Branch weights below this are considered impossible outcomes.
const DEGENERATE_BRANCH_TOL: f64 = 1e-15;
/// Hermiticity tolerance on density-matrix entries.
const HERMITICITY_TOL: f64 = 1e-12;
/// Trace tolerance after normalization.
const TRACE_TOL: f64 = 1e-10;
/// Positivity tolerance (diagonal entries and determinant).
const PSD_TOL: f64 = 1e-12;
/// Base Gauss–Hermite order for the spectral-diffusion average.
const GH_BASE_ORDER: usize = 64;
/// Upper limit for the order-doubling refinement.
const GH_MAX_ORDER: usize = 1024;
/// Convergence target for successive Gauss–Hermite doublings.
const GH_CONV_TOL: f64 = 1e-9;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// A 2×2 density matrix (photonic `{e,l}` or spin `{1,2}` basis).
///
/// Always Hermitian, unit-trace and positive semidefinite within numerical
/// tolerance; constructors enforce the invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2 {
    m: Matrix2<Complex64>,
}

impl DensityMatrix2 {
    /// Build from an explicit matrix, validating all invariants.
    pub fn from_matrix(m: Matrix2<Complex64>) -> Result<Self> {
        let rho = DensityMatrix2 { m };
        rho.validate()?;
        Ok(rho)
    }

    /// Build from an unnormalized (but otherwise valid) matrix by dividing
    /// out the trace.  Fails if the trace is non-positive or negligible.
    pub fn from_unnormalized(m: Matrix2<Complex64>) -> Result<Self> {
        let tr = m.trace();
        if !(tr.re.is_finite() && tr.re > DEGENERATE_BRANCH_TOL) {
            return Err(Error::DegenerateBranch(tr.re));
        }
        Self::from_matrix(m / c(tr.re))
    }

    /// Pure state from (unnormalized) amplitudes on the two basis states.
    pub fn pure(a0: Complex64, a1: Complex64) -> Result<Self> {
        let n2 = a0.norm_sqr() + a1.norm_sqr();
        if n2 <= DEGENERATE_BRANCH_TOL {
            return Err(Error::domain("pure state needs a nonzero amplitude vector"));
        }
        let m = Matrix2::new(
            a0 * a0.conj(),
            a0 * a1.conj(),
            a1 * a0.conj(),
            a1 * a1.conj(),
        ) / c(n2);
        Ok(DensityMatrix2 { m })
    }

    /// The maximally mixed state 𝟙/2.
    pub fn maximally_mixed() -> Self {
        DensityMatrix2 {
            m: Matrix2::identity() * c(0.5),
        }
    }

    /// Entry ρ₀₀.
    pub fn rho00(&self) -> Complex64 {
        self.m[(0, 0)]
    }
    /// Entry ρ₀₁.
    pub fn rho01(&self) -> Complex64 {
        self.m[(0, 1)]
    }
    /// Entry ρ₁₀.
    pub fn rho10(&self) -> Complex64 {
        self.m[(1, 0)]
    }
    /// Entry ρ₁₁.
    pub fn rho11(&self) -> Complex64 {
        self.m[(1, 1)]
    }

    /// The underlying matrix.
    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.m
    }

    /// Trace (real part; the imaginary part is zero within tolerance).
    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    /// Check Hermiticity, unit trace, and positive semidefiniteness.
    pub fn validate(&self) -> Result<()> {
        for v in [self.m[(0, 0)], self.m[(0, 1)], self.m[(1, 0)], self.m[(1, 1)]] {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::numerics("density matrix has non-finite entries"));
            }
        }
        let herm = (self.m[(1, 0)] - self.m[(0, 1)].conj()).norm()
            + self.m[(0, 0)].im.abs()
            + self.m[(1, 1)].im.abs();
        if herm > HERMITICITY_TOL {
            return Err(Error::numerics(format!(
                "density matrix not Hermitian (residual {herm:.3e})"
            )));
        }
        if (self.trace() - 1.0).abs() > TRACE_TOL {
            return Err(Error::numerics(format!(
                "density matrix trace {} deviates from 1",
                self.trace()
            )));
        }
        let d00 = self.m[(0, 0)].re;
        let d11 = self.m[(1, 1)].re;
        let det = (self.m[(0, 0)] * self.m[(1, 1)] - self.m[(0, 1)] * self.m[(1, 0)]).re;
        if d00 < -PSD_TOL || d11 < -PSD_TOL || det < -PSD_TOL {
            return Err(Error::numerics(format!(
                "density matrix not PSD (diag {d00:.3e}, {d11:.3e}; det {det:.3e})"
            )));
        }
        Ok(())
    }

    /// State fidelity ⟨ψ∣ρ∣ψ⟩ against a pure target with (unnormalized)
    /// amplitudes (t0, t1).
    pub fn fidelity_to_pure(&self, t0: Complex64, t1: Complex64) -> f64 {
        let n2 = t0.norm_sqr() + t1.norm_sqr();
        let v = nalgebra::Vector2::new(t0, t1);
        ((v.adjoint() * self.m * v)[(0, 0)].re / n2).clamp(0.0, 1.0 + 1e-9)
    }

    /// Uhlmann fidelity against another (possibly mixed) qubit state:
    /// F = tr(ρσ) + 2√(det ρ · det σ)  (exact closed form in dimension 2).
    pub fn fidelity(&self, other: &DensityMatrix2) -> f64 {
        let tr = (self.m * other.m).trace().re;
        let d1 = (self.m[(0, 0)] * self.m[(1, 1)] - self.m[(0, 1)] * self.m[(1, 0)]).re;
        let d2 = (other.m[(0, 0)] * other.m[(1, 1)] - other.m[(0, 1)] * other.m[(1, 0)]).re;
        (tr + 2.0 * (d1.max(0.0) * d2.max(0.0)).sqrt()).clamp(0.0, 1.0 + 1e-9)
    }
}

/// A pure photonic time-bin qubit a∣e⟩ + b∣l⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeBinQubit {
    a: Complex64,
    b: Complex64,
}

impl TimeBinQubit {
    /// Build from amplitudes; must already be normalized to 1e−12.
    pub fn new(a: Complex64, b: Complex64) -> Result<Self> {
        let n = a.norm_sqr() + b.norm_sqr();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "time-bin amplitudes must be normalized (|a|²+|b|² = {n})"
            )));
        }
        Ok(TimeBinQubit { a, b })
    }

    /// Build from arbitrary nonzero amplitudes, normalizing them.
    pub fn normalized(a: Complex64, b: Complex64) -> Result<Self> {
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if n <= 1e-12 {
            return Err(Error::domain("cannot normalize a zero amplitude vector"));
        }
        Ok(TimeBinQubit {
            a: a / c(n),
            b: b / c(n),
        })
    }

    /// ∣e⟩ (early bin).
    pub fn early() -> Self {
        TimeBinQubit { a: c(1.0), b: c(0.0) }
    }
    /// ∣l⟩ (late bin).
    pub fn late() -> Self {
        TimeBinQubit { a: c(0.0), b: c(1.0) }
    }
    /// (∣e⟩+∣l⟩)/√2.
    pub fn plus() -> Self {
        let s = c(std::f64::consts::FRAC_1_SQRT_2);
        TimeBinQubit { a: s, b: s }
    }
    /// (∣e⟩−∣l⟩)/√2.
    pub fn minus() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        TimeBinQubit { a: c(s), b: c(-s) }
    }

    /// Early-bin amplitude a.
    pub fn amplitude_early(&self) -> Complex64 {
        self.a
    }
    /// Late-bin amplitude b.
    pub fn amplitude_late(&self) -> Complex64 {
        self.b
    }

    /// The pure density matrix ∣ψ⟩⟨ψ∣ in the `{e,l}` basis.
    pub fn density_matrix(&self) -> DensityMatrix2 {
        DensityMatrix2::pure(self.a, self.b).expect("normalized by construction")
    }
}

/// A CPTP channel on the spin, stored as its process tensor: the images
/// D(∣j⟩⟨k∣) of the four basis elements.
#[derive(Debug, Clone, PartialEq)]
pub struct Pi2Channel {
    /// `lambda[j][k]` = D(∣j⟩⟨k∣) as a 2×2 matrix.
    lambda: [[Matrix2<Complex64>; 2]; 2],
}

impl Pi2Channel {
    /// The ideal π/2 rotation R: ∣1⟩ → (∣1⟩+∣2⟩)/√2, ∣2⟩ → (−∣1⟩+∣2⟩)/√2.
    pub fn ideal() -> Self {
        Self::from_unitary(&rotation_pi2())
    }

    /// Ideal rotation followed by a two-dimensional depolarizing channel of
    /// strength ε = 2(1−F_g), so one application degrades a pure state's
    /// fidelity to exactly F_g.
    pub fn depolarized(gate_fidelity: f64) -> Result<Self> {
        check_gate_fidelity(gate_fidelity)?;
        let eps = 2.0 * (1.0 - gate_fidelity);
        let r = rotation_pi2();
        let mut lambda = [[Matrix2::zeros(); 2]; 2];
        for (j, row) in lambda.iter_mut().enumerate() {
            for (k, entry) in row.iter_mut().enumerate() {
                let rot = r * basis_element(j, k) * r.adjoint();
                let trace_part = if j == k { c(0.5 * eps) } else { c(0.0) };
                *entry = rot * c(1.0 - eps) + Matrix2::identity() * trace_part;
            }
        }
        Ok(Pi2Channel { lambda })
    }

    /// Channel implementing conjugation by an arbitrary unitary.
    pub fn from_unitary(u: &Matrix2<Complex64>) -> Self {
        let mut lambda = [[Matrix2::zeros(); 2]; 2];
        for (j, row) in lambda.iter_mut().enumerate() {
            for (k, entry) in row.iter_mut().enumerate() {
                *entry = u * basis_element(j, k) * u.adjoint();
            }
        }
        Pi2Channel { lambda }
    }

    /// Build from an explicit process tensor, validating CPTP.
    pub fn from_process(lambda: [[Matrix2<Complex64>; 2]; 2]) -> Result<Self> {
        let ch = Pi2Channel { lambda };
        ch.validate()?;
        Ok(ch)
    }

    /// Image of the basis element ∣j⟩⟨k∣ (j, k ∈ {0, 1}).
    pub fn process_element(&self, j: usize, k: usize) -> &Matrix2<Complex64> {
        &self.lambda[j][k]
    }

    /// Apply the channel to an arbitrary (not necessarily normalized) matrix.
    pub fn apply_matrix(&self, m: &Matrix2<Complex64>) -> Matrix2<Complex64> {
        let mut out = Matrix2::zeros();
        for j in 0..2 {
            for k in 0..2 {
                out += self.lambda[j][k] * m[(j, k)];
            }
        }
        out
    }

    /// Apply the channel to a density matrix.
    pub fn apply(&self, rho: &DensityMatrix2) -> Result<DensityMatrix2> {
        DensityMatrix2::from_matrix(self.apply_matrix(rho.matrix()))
    }

    /// The Choi matrix Σ_jk ∣j⟩⟨k∣ ⊗ D(∣j⟩⟨k∣).
    pub fn choi(&self) -> Matrix4<Complex64> {
        let mut choi = Matrix4::zeros();
        for j in 0..2 {
            for k in 0..2 {
                for p in 0..2 {
                    for q in 0..2 {
                        choi[(2 * j + p, 2 * k + q)] = self.lambda[j][k][(p, q)];
                    }
                }
            }
        }
        choi
    }

    /// Verify complete positivity (Choi PSD) and trace preservation.
    pub fn validate(&self) -> Result<()> {
        for j in 0..2 {
            for k in 0..2 {
                let expected = if j == k { 1.0 } else { 0.0 };
                let tr = self.lambda[j][k].trace();
                if (tr - c(expected)).norm() > TRACE_TOL {
                    return Err(Error::domain(format!(
                        "channel is not trace-preserving: tr D(|{j}⟩⟨{k}|) = {tr}"
                    )));
                }
            }
        }
        let choi = self.choi();
        let herm_residual = (choi - choi.adjoint()).norm();
        if herm_residual > 1e-10 {
            return Err(Error::domain(format!(
                "channel Choi matrix not Hermitian (residual {herm_residual:.3e})"
            )));
        }
        let eig = nalgebra::SymmetricEigen::new(choi);
        if let Some(min) = eig
            .eigenvalues
            .iter()
            .cloned()
            .reduce(f64::min)
        {
            if min < -1e-10 {
                return Err(Error::domain(format!(
                    "channel is not completely positive (Choi eigenvalue {min:.3e})"
                )));
            }
        }
        Ok(())
    }
}

fn rotation_pi2() -> Matrix2<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Matrix2::new(c(s), c(-s), c(s), c(s))
}

fn basis_element(j: usize, k: usize) -> Matrix2<Complex64> {
    let mut m = Matrix2::zeros();
    m[(j, k)] = c(1.0);
    m
}

fn check_gate_fidelity(f: f64) -> Result<()> {
    if !(0.5..=1.0).contains(&f) {
        return Err(Error::domain(format!(
            "gate fidelity must lie in [1/2, 1], got {f}"
        )));
    }
    Ok(())
}

/// Gaussian jitter of the photon's central frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionModel {
    sigma_ghz: f64,
}

impl DiffusionModel {
    /// Standard deviation σ ≥ 0 in GHz; the Gaussian is centered on the
    /// nominal operating frequency ω₀.
    pub fn new(sigma_ghz: f64) -> Result<Self> {
        if !(sigma_ghz.is_finite() && sigma_ghz >= 0.0) {
            return Err(Error::domain(format!(
                "diffusion sigma must be ≥ 0, got {sigma_ghz}"
            )));
        }
        Ok(DiffusionModel { sigma_ghz })
    }

    /// No diffusion (σ = 0).
    pub fn none() -> Self {
        DiffusionModel { sigma_ghz: 0.0 }
    }

    /// Standard deviation in GHz.
    pub fn sigma_ghz(&self) -> f64 {
        self.sigma_ghz
    }
}

/// Storage decoherence rates.
///
/// Electron memory: amplitude damping between the two spin levels with
/// raising/lowering rates γ₊, γ₋ in 1/ms.  Nuclear memory: pure dephasing
/// at rate γ_d in 1/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceRates {
    pub gamma_plus_per_ms: f64,
    pub gamma_minus_per_ms: f64,
    pub gamma_d_per_s: f64,
}

impl DecoherenceRates {
    /// All rates must be finite and non-negative.
    pub fn new(gamma_plus_per_ms: f64, gamma_minus_per_ms: f64, gamma_d_per_s: f64) -> Result<Self> {
        for v in [gamma_plus_per_ms, gamma_minus_per_ms, gamma_d_per_s] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::domain(format!(
                    "decoherence rates must be ≥ 0, got {v}"
                )));
            }
        }
        Ok(DecoherenceRates {
            gamma_plus_per_ms,
            gamma_minus_per_ms,
            gamma_d_per_s,
        })
    }

    /// All-zero rates (perfect memory).
    pub fn zero() -> Self {
        DecoherenceRates {
            gamma_plus_per_ms: 0.0,
            gamma_minus_per_ms: 0.0,
            gamma_d_per_s: 0.0,
        }
    }
}

/// Which X-measurement branch of the write sequence to return.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoreOutcome {
    /// Photon found in (∣e⟩+∣l⟩)/√2.
    Plus,
    /// Photon found in (∣e⟩−∣l⟩)/√2 (state returned uncorrected).
    Minus,
    /// Equal-weight mixture of the two normalized branches with the known
    /// σ_x frame correction applied to the minus branch.
    Averaged,
}

/// Which Z-projection of the spin terminates the read sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadOutcome {
    /// Spin found in ∣1⟩; the photon needs no correction.
    State1,
    /// Spin found in ∣2⟩; the known unitary correction is applied.
    State2,
}

/// An unnormalized conditional state together with its weight (probability).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnnormalizedState {
    pub matrix: Matrix2<Complex64>,
}

impl UnnormalizedState {
    /// Branch weight = trace of the unnormalized matrix.
    pub fn weight(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Normalize into a density matrix (fails on degenerate weight).
    pub fn normalized(&self) -> Result<DensityMatrix2> {
        if self.weight() < DEGENERATE_BRANCH_TOL {
            return Err(Error::DegenerateBranch(self.weight()));
        }
        DensityMatrix2::from_unnormalized(self.matrix)
    }
}

/// The two unnormalized X-measurement branches of a write.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoreBranches {
    pub plus: UnnormalizedState,
    pub minus: UnnormalizedState,
}

/// The two unnormalized Z-projection branches of a read, in the `{e,l}`
/// photonic basis, with the State2 branch already frame-corrected.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadBranches {
    pub state1: UnnormalizedState,
    pub state2: UnnormalizedState,
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Depolarize a freshly generated photonic qubit: λ(ρ) = (1−ε)ρ + ε·tr(ρ)·𝟙/4
/// with ε = 2(1−F), restricted to the two-dimensional `{e,l}` block and
/// renormalized (only that block is tracked downstream).
pub fn depolarize_generation(q: &TimeBinQubit, fidelity: f64) -> Result<DensityMatrix2> {
    check_gate_fidelity(fidelity)?;
    let eps = 2.0 * (1.0 - fidelity);
    let pure = q.density_matrix();
    let m = pure.matrix() * c(1.0 - eps) + Matrix2::identity() * c(0.25 * eps);
    DensityMatrix2::from_unnormalized(m)
}

/// Trace-preserving two-dimensional depolarization with per-application
/// state fidelity F: ρ → (1−ε)ρ + ε·tr(ρ)·𝟙/2, ε = 2(1−F).
pub fn depolarize_spin(rho: &DensityMatrix2, fidelity: f64) -> Result<DensityMatrix2> {
    check_gate_fidelity(fidelity)?;
    let eps = 2.0 * (1.0 - fidelity);
    let m = rho.matrix() * c(1.0 - eps) + Matrix2::identity() * c(0.5 * eps * rho.trace());
    DensityMatrix2::from_matrix(m)
}

/// Moment lookup M(j,k) = ∫ S² r_j r_k* dω for j, k ∈ {1, 2} (0-indexed).
fn moment(m: &SpectralMoments, j: usize, k: usize) -> Complex64 {
    match (j, k) {
        (0, 0) => c(m.m11),
        (0, 1) => m.m12,
        (1, 0) => m.m12.conj(),
        (1, 1) => c(m.m22),
        _ => unreachable!("spin index out of range"),
    }
}

/// Unnormalized write branches for a photonic input state, spectral moments
/// and π/2 channel.  Exact in the channel and linear in the input, so this
/// is the natural level for composition and property checks.
pub fn store_branches(
    q_in: &DensityMatrix2,
    m: &SpectralMoments,
    ch: &Pi2Channel,
) -> StoreBranches {
    let p = q_in.matrix();
    let (p_ee, p_el, p_le, p_ll) = (p[(0, 0)], p[(0, 1)], p[(1, 0)], p[(1, 1)]);
    let lambda = ch.process_element(0, 0);
    let mut plus = Matrix2::zeros();
    let mut minus = Matrix2::zeros();
    for j in 0..2 {
        for k in 0..2 {
            let even = p_ee * c(m.m11) + p_ll * moment(m, j, k);
            let odd = p_el * moment(m, 0, k) + p_le * moment(m, j, 0);
            plus[(j, k)] = lambda[(j, k)] * (even + odd) * c(0.5);
            minus[(j, k)] = lambda[(j, k)] * (even - odd) * c(0.5);
        }
    }
    StoreBranches {
        plus: UnnormalizedState { matrix: plus },
        minus: UnnormalizedState { matrix: minus },
    }
}

/// Total photon-survival weight before the X measurement (the two branch
/// weights sum to this).
pub fn pre_measurement_weight(q_in: &DensityMatrix2, m: &SpectralMoments, ch: &Pi2Channel) -> f64 {
    let b = store_branches(q_in, m, ch);
    b.plus.weight() + b.minus.weight()
}

fn sigma_x() -> Matrix2<Complex64> {
    Matrix2::new(c(0.0), c(1.0), c(1.0), c(0.0))
}

/// Photonic frame correction applied after finding the spin in ∣2⟩ on read.
fn read_correction() -> Matrix2<Complex64> {
    Matrix2::new(c(0.0), c(1.0), c(-1.0), c(0.0))
}

fn combine_outcome(branches: &StoreBranches, outcome: StoreOutcome) -> Result<(DensityMatrix2, f64)> {
    match outcome {
        StoreOutcome::Plus => Ok((branches.plus.normalized()?, branches.plus.weight())),
        StoreOutcome::Minus => Ok((branches.minus.normalized()?, branches.minus.weight())),
        StoreOutcome::Averaged => {
            let p_plus = branches.plus.weight();
            let p_minus = branches.minus.weight();
            let rho_plus = branches.plus.normalized()?;
            let rho_minus = branches.minus.normalized()?;
            let x = sigma_x();
            let corrected = x * rho_minus.matrix() * x.adjoint();
            let avg = (rho_plus.matrix() + corrected) * c(0.5);
            Ok((DensityMatrix2::from_matrix(avg)?, p_plus + p_minus))
        }
    }
}

/// Write a photonic state into the spin given precomputed spectral moments.
///
/// Returns the normalized post-measurement spin state and the branch
/// probability (for `Averaged`: the total photon-survival probability).
pub fn store_state_with_moments(
    q_in: &DensityMatrix2,
    m: &SpectralMoments,
    ch: &Pi2Channel,
    outcome: StoreOutcome,
) -> Result<(DensityMatrix2, f64)> {
    combine_outcome(&store_branches(q_in, m, ch), outcome)
}

/// Write a photonic state into the spin, evaluating the spectral moments for
/// a photon centered at `omega0_ghz`.
pub fn store_state(
    q_in: &DensityMatrix2,
    p: &CavitySpinParams,
    s: &PhotonSpectrum,
    omega0_ghz: f64,
    ch: &Pi2Channel,
    outcome: StoreOutcome,
) -> Result<(DensityMatrix2, f64)> {
    let m = compute_moments(p, s, omega0_ghz)?;
    store_state_with_moments(q_in, &m, ch, outcome)
}

fn diffused_branches(
    q_in: &DensityMatrix2,
    p: &CavitySpinParams,
    s: &PhotonSpectrum,
    omega0_ghz: f64,
    ch: &Pi2Channel,
    d: &DiffusionModel,
) -> Result<StoreBranches> {
    let average_at = |order: usize| -> Result<StoreBranches> {
        let (nodes, weights) = quad::gauss_hermite(order)?;
        let mut plus = Matrix2::zeros();
        let mut minus = Matrix2::zeros();
        let norm = std::f64::consts::PI.sqrt();
        for (x, w) in nodes.iter().zip(&weights) {
            let nu = std::f64::consts::SQRT_2 * d.sigma_ghz() * x;
            let m = compute_moments(p, s, omega0_ghz + nu)?;
            let b = store_branches(q_in, &m, ch);
            plus += b.plus.matrix * c(w / norm);
            minus += b.minus.matrix * c(w / norm);
        }
        Ok(StoreBranches {
            plus: UnnormalizedState { matrix: plus },
            minus: UnnormalizedState { matrix: minus },
        })
    };

    let mut order = GH_BASE_ORDER;
    let mut current = average_at(order)?;
    loop {
        if 2 * order > GH_MAX_ORDER {
            // When σ dwarfs the reflection features, their weight sits in a
            // sliver far narrower than any reachable Gauss–Hermite node
            // spacing; switch to adaptive quadrature with explicit feature
            // breakpoints instead of giving up.
            return diffused_branches_adaptive(q_in, p, s, omega0_ghz, ch, d);
        }
        order *= 2;
        let refined = average_at(order)?;
        let diff = (refined.plus.matrix - current.plus.matrix).norm()
            + (refined.minus.matrix - current.minus.matrix).norm();
        current = refined;
        if diff < GH_CONV_TOL {
            return Ok(current);
        }
    }
}

/// Fallback Gaussian average for σ far beyond the reflection feature scale:
/// adaptive Gauss–Kronrod over the shift ν with breakpoints at the Gaussian
/// core and at the frequencies where the shifted spectrum crosses the
/// atomic/cavity structure.  A per-ν memo keeps the six entry integrals from
/// recomputing the (expensive) spectral moments.
fn diffused_branches_adaptive(
    q_in: &DensityMatrix2,
    p: &CavitySpinParams,
    s: &PhotonSpectrum,
    omega0_ghz: f64,
    ch: &Pi2Channel,
    d: &DiffusionModel,
) -> Result<StoreBranches> {
    use std::cell::RefCell;
    use std::collections::HashMap;

    let sigma = d.sigma_ghz();
    let (lo, hi) = (-8.0 * sigma, 8.0 * sigma);
    let mut breakpoints: Vec<f64> = [-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0]
        .iter()
        .map(|k| k * sigma)
        .collect();
    let span = p.kappa_ghz + p.g_ghz;
    for feature in [
        p.omega_a_ghz,
        p.omega_c_ghz(),
        p.omega_a_ghz + p.spin_splitting_ghz,
        p.omega_c_ghz() + p.spin_splitting_ghz,
    ] {
        let center = feature - omega0_ghz;
        for nu in [center - span, center, center + span] {
            if nu > lo && nu < hi {
                breakpoints.push(nu);
            }
        }
    }

    let memo: RefCell<HashMap<u64, StoreBranches>> = RefCell::new(HashMap::new());
    let inner_error: RefCell<Option<Error>> = RefCell::new(None);
    let gauss_norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * sigma);
    let branch_at = |nu: f64| -> StoreBranches {
        if let Some(b) = memo.borrow().get(&nu.to_bits()) {
            return *b;
        }
        let b = match compute_moments(p, s, omega0_ghz + nu) {
            Ok(m) => store_branches(q_in, &m, ch),
            Err(e) => {
                inner_error.borrow_mut().get_or_insert(e);
                StoreBranches {
                    plus: UnnormalizedState { matrix: Matrix2::zeros() },
                    minus: UnnormalizedState { matrix: Matrix2::zeros() },
                }
            }
        };
        memo.borrow_mut().insert(nu.to_bits(), b);
        b
    };

    let mut plus = Matrix2::zeros();
    let mut minus = Matrix2::zeros();
    for (j, k) in [(0, 0), (0, 1), (1, 1)] {
        for select_plus in [true, false] {
            let value = quad::adaptive_complex(
                |nu| {
                    let g = gauss_norm * (-0.5 * (nu / sigma).powi(2)).exp();
                    let b = branch_at(nu);
                    let m = if select_plus { b.plus.matrix } else { b.minus.matrix };
                    m[(j, k)] * c(g)
                },
                lo,
                hi,
                &breakpoints,
                1e-9,
                1e-12,
            )?;
            if let Some(e) = inner_error.borrow_mut().take() {
                return Err(e);
            }
            let target = if select_plus { &mut plus } else { &mut minus };
            target[(j, k)] = value;
            if j != k {
                target[(k, j)] = value.conj();
            }
        }
    }
    Ok(StoreBranches {
        plus: UnnormalizedState { matrix: plus },
        minus: UnnormalizedState { matrix: minus },
    })
}

/// Write with a Gaussian-diffused photon center frequency: the unnormalized
/// branch states are averaged over the Gaussian before normalization.
/// σ = 0 reduces exactly to [`store_state`].
pub fn store_state_diffused(
    q_in: &DensityMatrix2,
    p: &CavitySpinParams,
    s: &PhotonSpectrum,
    omega0_ghz: f64,
    ch: &Pi2Channel,
    outcome: StoreOutcome,
    d: &DiffusionModel,
) -> Result<(DensityMatrix2, f64)> {
    if d.sigma_ghz() == 0.0 {
        return store_state(q_in, p, s, omega0_ghz, ch, outcome);
    }
    let branches = diffused_branches(q_in, p, s, omega0_ghz, ch, d)?;
    combine_outcome(&branches, outcome)
}

/// Electron-spin storage decoherence over `t_ms` milliseconds: amplitude
/// damping toward the thermal mixture.  Populations relax at the full rate
/// γ₋+γ₊ toward (γ₋, γ₊)/(γ₋+γ₊); coherences decay at half that rate.
pub fn decohere_electron(
    rho0: &DensityMatrix2,
    rates: &DecoherenceRates,
    t_ms: f64,
) -> Result<DensityMatrix2> {
    if !(t_ms.is_finite() && t_ms >= 0.0) {
        return Err(Error::domain(format!("storage time must be ≥ 0, got {t_ms}")));
    }
    let total = rates.gamma_minus_per_ms + rates.gamma_plus_per_ms;
    if total == 0.0 {
        return Ok(*rho0);
    }
    let p_inf = rates.gamma_minus_per_ms / total;
    let decay = (-total * t_ms).exp();
    let coherence_decay = (-0.5 * total * t_ms).exp();
    let tr = rho0.trace();
    let p00 = p_inf * tr + (rho0.rho00().re - p_inf * tr) * decay;
    let m = Matrix2::new(
        c(p00),
        rho0.rho01() * c(coherence_decay),
        rho0.rho10() * c(coherence_decay),
        c(tr - p00),
    );
    DensityMatrix2::from_matrix(m)
}

/// Nuclear-spin storage decoherence over `t_s` seconds: pure dephasing,
/// coherences damped by e^{−2γ_d t}, populations untouched.
pub fn decohere_nuclear(
    rho0: &DensityMatrix2,
    rates: &DecoherenceRates,
    t_s: f64,
) -> Result<DensityMatrix2> {
    if !(t_s.is_finite() && t_s >= 0.0) {
        return Err(Error::domain(format!("storage time must be ≥ 0, got {t_s}")));
    }
    let damp = (-2.0 * rates.gamma_d_per_s * t_s).exp();
    let m = Matrix2::new(
        rho0.rho00(),
        rho0.rho01() * c(damp),
        rho0.rho10() * c(damp),
        rho0.rho11(),
    );
    DensityMatrix2::from_matrix(m)
}

/// Unnormalized read branches: a fresh (∣e⟩+∣l⟩)/√2 photon reflects, the π/2
/// channel acts, the late bin reflects, and the spin is projected in Z.  The
/// State2 branch carries its frame correction already.
pub fn read_branches(
    rho_spin: &DensityMatrix2,
    m: &SpectralMoments,
    ch: &Pi2Channel,
) -> ReadBranches {
    let s = rho_spin.matrix();
    let mut out = [Matrix2::zeros(), Matrix2::zeros()];
    for (mm, branch) in out.iter_mut().enumerate() {
        let mut ph = Matrix2::zeros();
        for j in 0..2 {
            for k in 0..2 {
                let lam = ch.process_element(j, k)[(mm, mm)];
                let coeff = s[(j, k)] * lam * c(0.5);
                ph[(0, 0)] += coeff * moment(m, j, k);
                ph[(0, 1)] += coeff * moment(m, j, mm);
                ph[(1, 0)] += coeff * moment(m, mm, k);
                ph[(1, 1)] += coeff * moment(m, mm, mm);
            }
        }
        *branch = ph;
    }
    let corr = read_correction();
    let corrected = corr * out[1] * corr.adjoint();
    ReadBranches {
        state1: UnnormalizedState { matrix: out[0] },
        state2: UnnormalizedState { matrix: corrected },
    }
}

/// Read the spin back into a photonic state given precomputed moments.
pub fn read_state_with_moments(
    rho_spin: &DensityMatrix2,
    m: &SpectralMoments,
    ch: &Pi2Channel,
    outcome: ReadOutcome,
) -> Result<(DensityMatrix2, f64)> {
    let b = read_branches(rho_spin, m, ch);
    let branch = match outcome {
        ReadOutcome::State1 => b.state1,
        ReadOutcome::State2 => b.state2,
    };
    Ok((branch.normalized()?, branch.weight()))
}

/// Read the spin back into a photonic state, evaluating the moments for a
/// retrieval photon centered at `omega0_ghz`.
pub fn read_state(
    rho_spin: &DensityMatrix2,
    p: &CavitySpinParams,
    s: &PhotonSpectrum,
    omega0_ghz: f64,
    ch: &Pi2Channel,
    outcome: ReadOutcome,
) -> Result<(DensityMatrix2, f64)> {
    let m = compute_moments(p, s, omega0_ghz)?;
    read_state_with_moments(rho_spin, &m, ch, outcome)
}

/// Probability-weighted combination of both (corrected) read branches.
pub fn read_combined(
    rho_spin: &DensityMatrix2,
    m: &SpectralMoments,
    ch: &Pi2Channel,
) -> Result<(DensityMatrix2, f64)> {
    let b = read_branches(rho_spin, m, ch);
    let total = b.state1.weight() + b.state2.weight();
    if total < DEGENERATE_BRANCH_TOL {
        return Err(Error::DegenerateBranch(total));
    }
    let sum = b.state1.matrix + b.state2.matrix;
    Ok((DensityMatrix2::from_unnormalized(sum)?, total))
}

// ---------------------------------------------------------------------------
// Full storage pipeline
// ---------------------------------------------------------------------------

/// Everything needed to push a qubit through write → storage → read.
#[derive(Debug, Clone)]
pub struct StoragePipeline {
    pub params: CavitySpinParams,
    pub spectrum: PhotonSpectrum,
    pub omega0_ghz: f64,
    pub write_channel: Pi2Channel,
    pub read_channel: Pi2Channel,
    /// Per-application π/2 state fidelity, also used for bookkeeping the
    /// extra applications beyond the one inside each sequence.
    pub gate_fidelity: f64,
    /// π/2-quality operations per write (entangling rotation + heralded
    /// frame correction by default).
    pub applications_per_write: u32,
    /// π/2-quality operations per read (basis preparation + entangling
    /// rotation by default).
    pub applications_per_read: u32,
    /// Photon-generation depolarization fidelity.
    pub generation_fidelity: f64,
    pub diffusion: DiffusionModel,
    pub rates: DecoherenceRates,
    /// Electron-memory storage interval in ms.
    pub electron_storage_ms: f64,
    /// Nuclear-memory storage interval in s.
    pub nuclear_storage_s: f64,
}

impl StoragePipeline {
    /// Pipeline with depolarized write/read channels at `gate_fidelity`,
    /// two gate applications per write and per read, ideal generation, no
    /// diffusion and no storage decoherence.
    pub fn new(
        params: CavitySpinParams,
        spectrum: PhotonSpectrum,
        omega0_ghz: f64,
        gate_fidelity: f64,
    ) -> Result<Self> {
        let channel = Pi2Channel::depolarized(gate_fidelity)?;
        Ok(StoragePipeline {
            params,
            spectrum,
            omega0_ghz,
            write_channel: channel.clone(),
            read_channel: channel,
            gate_fidelity,
            applications_per_write: 2,
            applications_per_read: 2,
            generation_fidelity: 1.0,
            diffusion: DiffusionModel::none(),
            rates: DecoherenceRates::zero(),
            electron_storage_ms: 0.0,
            nuclear_storage_s: 0.0,
        })
    }
}

/// Per-input fidelity decomposition of the storage pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputRecord {
    /// Fidelity of the stored spin state against the ideal stored target.
    pub f_in: f64,
    /// Fidelity of the stored state after the storage interval against the
    /// stored state before it.
    pub f_mem: f64,
    /// Read-back fidelity starting from the *ideal* stored state (isolates
    /// the output stage).
    pub f_out: f64,
    /// Fidelity of the full write → store → read chain against the input.
    pub f_total: f64,
    /// Photon-survival probability of the write.
    pub write_success: f64,
    /// Photon-survival probability of the read.
    pub read_success: f64,
}

/// Pipeline fidelities for the four standard inputs and their average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageReport {
    pub plus: InputRecord,
    pub minus: InputRecord,
    pub early: InputRecord,
    pub late: InputRecord,
}

impl StorageReport {
    /// The four records in (+, −, e, l) order.
    pub fn records(&self) -> [InputRecord; 4] {
        [self.plus, self.minus, self.early, self.late]
    }

    /// ⟨F⟩ = mean full-chain fidelity over the four inputs.
    pub fn average_fidelity(&self) -> f64 {
        self.records().iter().map(|r| r.f_total).sum::<f64>() / 4.0
    }

    /// Mean write-survival × read-survival over the four inputs.
    pub fn average_success(&self) -> f64 {
        self.records()
            .iter()
            .map(|r| r.write_success * r.read_success)
            .sum::<f64>()
            / 4.0
    }
}

fn repeat_depolarize(rho: DensityMatrix2, fidelity: f64, times: u32) -> Result<DensityMatrix2> {
    let mut out = rho;
    for _ in 0..times {
        out = depolarize_spin(&out, fidelity)?;
    }
    Ok(out)
}

/// Push one qubit through the full pipeline and report its fidelity
/// decomposition.
pub fn stored_fidelity(pipeline: &StoragePipeline, q: &TimeBinQubit) -> Result<InputRecord> {
    let moments = compute_moments(&pipeline.params, &pipeline.spectrum, pipeline.omega0_ghz)?;
    stored_fidelity_with_moments(pipeline, q, &moments)
}

/// As [`stored_fidelity`], reusing precomputed nominal-frequency moments for
/// the read stage (the diffused write recomputes as needed).
pub fn stored_fidelity_with_moments(
    pipeline: &StoragePipeline,
    q: &TimeBinQubit,
    moments: &SpectralMoments,
) -> Result<InputRecord> {
    let (a, b) = (q.amplitude_early(), q.amplitude_late());
    let sqrt2 = c(std::f64::consts::SQRT_2);
    // Ideal stored target: the Hadamard image of the input amplitudes.
    let (t1, t2) = ((a + b) / sqrt2, (a - b) / sqrt2);
    let extra_write = pipeline.applications_per_write.saturating_sub(1);
    let extra_read = pipeline.applications_per_read.saturating_sub(1);

    // Write stage.
    let photon = depolarize_generation(q, pipeline.generation_fidelity)?;
    let (written, write_success) = if pipeline.diffusion.sigma_ghz() == 0.0 {
        store_state_with_moments(&photon, moments, &pipeline.write_channel, StoreOutcome::Averaged)?
    } else {
        store_state_diffused(
            &photon,
            &pipeline.params,
            &pipeline.spectrum,
            pipeline.omega0_ghz,
            &pipeline.write_channel,
            StoreOutcome::Averaged,
            &pipeline.diffusion,
        )?
    };
    let written = repeat_depolarize(written, pipeline.gate_fidelity, extra_write)?;
    let f_in = written.fidelity_to_pure(t1, t2);

    // Storage stage.
    let held = decohere_electron(&written, &pipeline.rates, pipeline.electron_storage_ms)?;
    let held = decohere_nuclear(&held, &pipeline.rates, pipeline.nuclear_storage_s)?;
    let f_mem = held.fidelity(&written);

    // Read stage (full chain).
    let prepared = repeat_depolarize(held, pipeline.gate_fidelity, extra_read)?;
    let (read_back, read_success) = read_combined(&prepared, moments, &pipeline.read_channel)?;
    let f_total = read_back.fidelity_to_pure(a, b);

    // Output stage in isolation: ideal stored state through the read chain.
    let ideal_stored = DensityMatrix2::pure(t1, t2)?;
    let prepared_ideal = repeat_depolarize(ideal_stored, pipeline.gate_fidelity, extra_read)?;
    let (ideal_read, _) = read_combined(&prepared_ideal, moments, &pipeline.read_channel)?;
    let f_out = ideal_read.fidelity_to_pure(a, b);

    Ok(InputRecord {
        f_in,
        f_mem,
        f_out,
        f_total,
        write_success,
        read_success,
    })
}

/// Run the pipeline for the four standard inputs {+, −, e, l}.
pub fn storage_report(pipeline: &StoragePipeline) -> Result<StorageReport> {
    let moments = compute_moments(&pipeline.params, &pipeline.spectrum, pipeline.omega0_ghz)?;
    Ok(StorageReport {
        plus: stored_fidelity_with_moments(pipeline, &TimeBinQubit::plus(), &moments)?,
        minus: stored_fidelity_with_moments(pipeline, &TimeBinQubit::minus(), &moments)?,
        early: stored_fidelity_with_moments(pipeline, &TimeBinQubit::early(), &moments)?,
        late: stored_fidelity_with_moments(pipeline, &TimeBinQubit::late(), &moments)?,
    })
}
