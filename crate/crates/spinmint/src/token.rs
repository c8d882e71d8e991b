//! Security analysis and acceptance-rate model for the quantum-token scheme.
//!
//! A token is a string of `n` randomly prepared qubits; the bank accepts it
//! if at least `t` of them verify correctly.  Security rests on the optimal
//! single-qubit cloning bound: a forger who never saw the bank's bases
//! passes each verification with probability at most α = 3/4, so the forge
//! acceptance probability is the binomial tail Σ_{k=t}^n C(n,k)α^k(1−α)^{n−k}.
//!
//! The honest side combines photon survival (collection, conversion,
//! detection, fiber attenuation), the average storage fidelity ⟨F⟩, and the
//! token cycle time T_n into an average acceptance rate
//! γ_a = γ_tok · Σ_{k=t}^n p_a(k,⟨F⟩) · p_loss(n,k), with γ_tok = 1/T_n.
//! A Monte Carlo simulator provides an independent check of the closed form.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Optimal single-qubit cloning probability for conjugate-basis states.
pub const ALPHA_OPTIMAL_CLONING: f64 = 0.75;
/// Speed of light in vacuum, km/s.
pub const VACUUM_LIGHT_SPEED_KM_PER_S: f64 = 299_792.458;
/// Default fiber attenuation length, km.
pub const DEFAULT_ATTENUATION_KM: f64 = 20.0;
/// Default single-shot measurement time, ns.
pub const DEFAULT_MEASUREMENT_NS: f64 = 0.1;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Token length, verification threshold, adversary strength and the security
/// target they are sized against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityDesign {
    n: u32,
    t: u32,
    alpha: f64,
    p_th: f64,
}

impl SecurityDesign {
    /// Requires 1 ≤ t ≤ n, 0 < α < 1 and 0 < p_th < 1.
    pub fn new(n: u32, t: u32, alpha: f64, p_th: f64) -> Result<Self> {
        if t < 1 || t > n {
            return Err(Error::domain(format!(
                "verification threshold must satisfy 1 ≤ t ≤ n (got t={t}, n={n})"
            )));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!(
                "cloning probability must lie in (0,1), got {alpha}"
            )));
        }
        if !(p_th > 0.0 && p_th < 1.0) {
            return Err(Error::domain(format!(
                "security threshold must lie in (0,1), got {p_th}"
            )));
        }
        Ok(SecurityDesign { n, t, alpha, p_th })
    }

    /// Token length n.
    pub fn n(&self) -> u32 {
        self.n
    }
    /// Verification threshold t.
    pub fn t(&self) -> u32 {
        self.t
    }
    /// Single-qubit cloning probability α.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    /// Security threshold p_th the design was sized against.
    pub fn p_th(&self) -> f64 {
        self.p_th
    }
}

/// Photon efficiency budget between the token source and the verifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyBudget {
    eta_cf: f64,
    eta_fc: f64,
    eta_d: f64,
    fiber_length_km: f64,
    attenuation_length_km: f64,
}

impl EfficiencyBudget {
    /// Cavity–fiber, frequency-conversion and detector efficiencies (each
    /// entering squared: once per write pass, once per read pass), plus the
    /// fiber length and attenuation length.
    pub fn new(
        eta_cf: f64,
        eta_fc: f64,
        eta_d: f64,
        fiber_length_km: f64,
        attenuation_length_km: f64,
    ) -> Result<Self> {
        for (name, v) in [("eta_cf", eta_cf), ("eta_fc", eta_fc), ("eta_d", eta_d)] {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::domain(format!("{name} must lie in [0,1], got {v}")));
            }
        }
        if !(fiber_length_km.is_finite() && fiber_length_km >= 0.0) {
            return Err(Error::domain(format!(
                "fiber length must be ≥ 0, got {fiber_length_km}"
            )));
        }
        if !(attenuation_length_km.is_finite() && attenuation_length_km > 0.0) {
            return Err(Error::domain(format!(
                "attenuation length must be > 0, got {attenuation_length_km}"
            )));
        }
        Ok(EfficiencyBudget {
            eta_cf,
            eta_fc,
            eta_d,
            fiber_length_km,
            attenuation_length_km,
        })
    }

    /// Combined collection efficiency η_c = η_cf² · η_fc² · η_d².
    pub fn collection_efficiency(&self) -> f64 {
        (self.eta_cf * self.eta_fc * self.eta_d).powi(2)
    }

    /// Per-qubit survival probability p₁ = η_c · e^{−L/L_att}.
    ///
    /// (Sometimes called the single-photon "loss" probability, but it enters
    /// every formula as the probability that the photon survives.)
    pub fn survival_probability(&self) -> f64 {
        self.collection_efficiency() * (-self.fiber_length_km / self.attenuation_length_km).exp()
    }

    /// Fiber length in km.
    pub fn fiber_length_km(&self) -> f64 {
        self.fiber_length_km
    }
}

/// Timing model for one token cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenTiming {
    source_lifetime_ns: f64,
    gate_ns: f64,
    measurement_ns: f64,
    storage_ns: f64,
    fiber_length_km: f64,
    c_fiber_km_per_s: f64,
}

impl TokenTiming {
    /// All durations in ns, fiber length in km, signal speed in km/s.
    pub fn new(
        source_lifetime_ns: f64,
        gate_ns: f64,
        measurement_ns: f64,
        storage_ns: f64,
        fiber_length_km: f64,
        c_fiber_km_per_s: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("source lifetime", source_lifetime_ns),
            ("gate duration", gate_ns),
            ("measurement time", measurement_ns),
            ("storage time", storage_ns),
            ("fiber length", fiber_length_km),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::domain(format!("{name} must be ≥ 0, got {v}")));
            }
        }
        if !(c_fiber_km_per_s.is_finite() && c_fiber_km_per_s > 0.0) {
            return Err(Error::domain(format!(
                "fiber signal speed must be > 0, got {c_fiber_km_per_s}"
            )));
        }
        Ok(TokenTiming {
            source_lifetime_ns,
            gate_ns,
            measurement_ns,
            storage_ns,
            fiber_length_km,
            c_fiber_km_per_s,
        })
    }

    /// Source lifetime T_lt (ns).
    pub fn source_lifetime_ns(&self) -> f64 {
        self.source_lifetime_ns
    }

    /// Time-bin slot T_tb = 20 · T_lt (ns).
    pub fn time_bin_ns(&self) -> f64 {
        20.0 * self.source_lifetime_ns
    }

    /// Gate duration T_g (ns).
    pub fn gate_ns(&self) -> f64 {
        self.gate_ns
    }

    /// Measurement time T_m (ns).
    pub fn measurement_ns(&self) -> f64 {
        self.measurement_ns
    }

    /// Storage time T_s (ns).
    pub fn storage_ns(&self) -> f64 {
        self.storage_ns
    }

    /// Replace the storage interval (used by storage sweeps).
    pub fn with_storage_ns(mut self, storage_ns: f64) -> Self {
        self.storage_ns = storage_ns;
        self
    }

    /// One-way communication time T_c = L / c (ns).
    pub fn communication_ns(&self) -> f64 {
        self.fiber_length_km / self.c_fiber_km_per_s * 1.0e9
    }

    /// Full token cycle T_n = 2n(T_tb + T_g + T_m) + 2T_c + T_s (ns).
    pub fn token_cycle_ns(&self, n: u32) -> f64 {
        2.0 * n as f64 * (self.time_bin_ns() + self.gate_ns + self.measurement_ns)
            + 2.0 * self.communication_ns()
            + self.storage_ns
    }

    /// Token issuance rate γ_tok = 1/T_n (Hz).
    pub fn token_rate_hz(&self, n: u32) -> f64 {
        1.0e9 / self.token_cycle_ns(n)
    }
}

/// Gate duration from the control-pulse width: T_g = 40σ with
/// σ = τ_{π/8} / (2√(2 ln 2)), given the quoted total 4τ_{π/8} in ns.
pub fn gate_duration_ns(four_tau_pi8_ns: f64) -> f64 {
    let tau = four_tau_pi8_ns / 4.0;
    let sigma = tau / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
    40.0 * sigma
}

/// A concrete token draw (used by the Monte Carlo forging check).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenState {
    labels: Vec<QubitLabel>,
    serial: u64,
}

/// The four uniformly chosen preparation states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QubitLabel {
    Zero,
    One,
    Plus,
    Minus,
}

impl TokenState {
    /// Draw a fresh token of length n with the given serial.
    pub fn random(n: u32, serial: u64, rng: &mut impl Rng) -> Self {
        let labels = (0..n)
            .map(|_| match rng.gen_range(0..4u8) {
                0 => QubitLabel::Zero,
                1 => QubitLabel::One,
                2 => QubitLabel::Plus,
                _ => QubitLabel::Minus,
            })
            .collect();
        TokenState { labels, serial }
    }

    /// Token length.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// True if the token carries no qubits.
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// The opaque serial identifier.
    pub fn serial(&self) -> u64 {
        self.serial
    }

    /// The per-qubit preparation labels.
    pub fn labels(&self) -> &[QubitLabel] {
        &self.labels
    }
}

// ---------------------------------------------------------------------------
// Binomial building blocks
// ---------------------------------------------------------------------------

fn ln_choose(n: u32, k: u32) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Binomial pmf C(n,k) p^k (1−p)^{n−k}, evaluated in log space with exact
/// handling of the p ∈ {0, 1} edges.
pub fn binomial_pmf(n: u32, k: u32, p: f64) -> Result<f64> {
    if k > n {
        return Err(Error::domain(format!("k = {k} exceeds n = {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("probability out of range: {p}")));
    }
    if p == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    if p == 1.0 {
        return Ok(if k == n { 1.0 } else { 0.0 });
    }
    let ln_pmf = ln_choose(n, k) + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln();
    Ok(ln_pmf.exp())
}

fn binomial_tail(n: u32, t: u32, p: f64) -> Result<f64> {
    let mut sum = 0.0;
    for k in t..=n {
        sum += binomial_pmf(n, k, p)?;
    }
    Ok(sum.min(1.0))
}

// ---------------------------------------------------------------------------
// Security side
// ---------------------------------------------------------------------------

/// Probability that a forged token passes: P[Bin(n, α) ≥ t].
pub fn forge_acceptance_prob(d: &SecurityDesign) -> f64 {
    binomial_tail(d.n, d.t, d.alpha).expect("design invariants guarantee valid arguments")
}

/// Result of sizing the smallest secure token.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenSizeReport {
    /// The minimal design (t = n − 1).
    pub design: SecurityDesign,
    /// Forge acceptance probability of the minimal design.
    pub p_forge: f64,
    /// Smallest threshold t for which this n still meets p_th; every
    /// t ∈ [feasible_t_min, n] is secure.
    pub feasible_t_min: u32,
}

/// Find the smallest token length n (with threshold t = n − 1) whose forge
/// acceptance probability is below `p_th`.
pub fn min_token_size(p_th: f64, alpha: f64) -> Result<TokenSizeReport> {
    if !(p_th > 0.0 && p_th < 1.0) {
        return Err(Error::domain(format!(
            "security threshold must lie in (0,1), got {p_th}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!(
            "cloning probability must lie in (0,1), got {alpha}"
        )));
    }
    const N_CAP: u32 = 100_000;
    for n in 2..=N_CAP {
        let p_forge = binomial_tail(n, n - 1, alpha)?;
        if p_forge < p_th {
            let mut feasible_t_min = n - 1;
            while feasible_t_min > 1 && binomial_tail(n, feasible_t_min - 1, alpha)? < p_th {
                feasible_t_min -= 1;
            }
            return Ok(TokenSizeReport {
                design: SecurityDesign::new(n, n - 1, alpha, p_th)?,
                p_forge,
                feasible_t_min,
            });
        }
    }
    Err(Error::numerics(format!(
        "no token size below {N_CAP} meets threshold {p_th}"
    )))
}

// ---------------------------------------------------------------------------
// Honest-acceptance side
// ---------------------------------------------------------------------------

/// Probability of exactly k correct verifications out of n at average
/// fidelity ⟨F⟩: C(n,k)⟨F⟩^k(1−⟨F⟩)^{n−k}.
pub fn true_accept_prob(n: u32, k: u32, f_avg: f64) -> Result<f64> {
    binomial_pmf(n, k, f_avg)
}

/// Probability that exactly k of n photons survive transmission at
/// per-photon survival probability p₁.
pub fn loss_prob(n: u32, k: u32, p_survive: f64) -> Result<f64> {
    binomial_pmf(n, k, p_survive)
}

/// Average verification fidelity ⟨F⟩ = (1/4) Σ_x F_x^in · F^mem · F_x^out
/// over the four preparation states x ∈ {+, −, e, l}.
pub fn average_fidelity(f_in: &[f64; 4], f_mem: f64, f_out: &[f64; 4]) -> Result<f64> {
    for v in f_in.iter().chain(f_out.iter()).chain(std::iter::once(&f_mem)) {
        if !(0.0..=1.0).contains(v) {
            return Err(Error::domain(format!(
                "fidelity factors must lie in [0,1], got {v}"
            )));
        }
    }
    Ok(f_in
        .iter()
        .zip(f_out.iter())
        .map(|(i, o)| i * f_mem * o)
        .sum::<f64>()
        / 4.0)
}

/// How photon loss and verification statistics are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossModel {
    /// The printed sum: the verification binomial and the loss binomial are
    /// evaluated over the same k and multiplied — equivalently, accept iff
    /// the two independent counts coincide and reach the threshold.
    #[default]
    IndependentBinomials,
    /// Statistically coupled variant: verification successes are drawn among
    /// the k surviving photons only.
    CoupledSurvivors,
}

/// Everything the acceptance-rate evaluation needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptanceInput {
    pub design: SecurityDesign,
    /// Per-qubit photon survival probability p₁.
    pub p_survive: f64,
    /// Average verification fidelity ⟨F⟩.
    pub f_avg: f64,
    /// Token issuance rate γ_tok (Hz).
    pub token_rate_hz: f64,
    pub model: LossModel,
}

impl AcceptanceInput {
    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_survive) {
            return Err(Error::config(format!(
                "survival probability must lie in [0,1], got {}",
                self.p_survive
            )));
        }
        if !(0.0..=1.0).contains(&self.f_avg) {
            return Err(Error::config(format!(
                "average fidelity must lie in [0,1], got {}",
                self.f_avg
            )));
        }
        if !(self.token_rate_hz.is_finite() && self.token_rate_hz > 0.0) {
            return Err(Error::config(format!(
                "token rate must be > 0, got {}",
                self.token_rate_hz
            )));
        }
        Ok(())
    }
}

/// One term of the acceptance sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptanceTerm {
    pub k: u32,
    /// Verification factor at this k.
    pub p_accept: f64,
    /// Loss factor p_loss(n, k).
    pub p_loss: f64,
}

/// Acceptance rate with its full decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct AcceptanceBreakdown {
    /// Average acceptance rate γ_a (Hz).
    pub gamma_a_hz: f64,
    /// Token issuance rate γ_tok (Hz).
    pub gamma_tok_hz: f64,
    /// Acceptance probability Σ terms (γ_a / γ_tok).
    pub acceptance_prob: f64,
    pub f_avg: f64,
    pub p_survive: f64,
    pub terms: Vec<AcceptanceTerm>,
}

/// Evaluate γ_a = γ_tok Σ_{k=t}^n p_a(k,⟨F⟩) p_loss(n,k) (or the coupled
/// variant) exactly.
pub fn acceptance_rate(input: &AcceptanceInput) -> Result<AcceptanceBreakdown> {
    input.validate()?;
    let (n, t) = (input.design.n, input.design.t);
    let mut terms = Vec::with_capacity((n - t + 1) as usize);
    let mut total = 0.0;
    for k in t..=n {
        let p_loss = loss_prob(n, k, input.p_survive)?;
        let p_accept = match input.model {
            LossModel::IndependentBinomials => true_accept_prob(n, k, input.f_avg)?,
            LossModel::CoupledSurvivors => binomial_tail(k, t, input.f_avg)?,
        };
        total += p_accept * p_loss;
        terms.push(AcceptanceTerm { k, p_accept, p_loss });
    }
    Ok(AcceptanceBreakdown {
        gamma_a_hz: input.token_rate_hz * total,
        gamma_tok_hz: input.token_rate_hz,
        acceptance_prob: total,
        f_avg: input.f_avg,
        p_survive: input.p_survive,
        terms,
    })
}

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

/// Empirical probability estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub probability: f64,
    pub std_error: f64,
    pub trials: u64,
    /// Probability converted to a rate (0 when no rate applies).
    pub rate_hz: f64,
    pub rate_std_error_hz: f64,
}

fn mc_probability(
    trials: u64,
    seed: u64,
    success: impl Fn(&mut ChaCha8Rng) -> bool + Sync,
) -> McEstimate {
    let successes: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| {
            // Counter-based stream per trial: reduction-order independent.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial);
            u64::from(success(&mut rng))
        })
        .sum();
    let p = successes as f64 / trials as f64;
    let std_error = (p * (1.0 - p) / trials as f64).sqrt();
    McEstimate {
        probability: p,
        std_error,
        trials,
        rate_hz: 0.0,
        rate_std_error_hz: 0.0,
    }
}

fn count_bernoulli(rng: &mut ChaCha8Rng, n: u32, p: f64) -> u32 {
    // Exact edges keep the deterministic examples exact.
    if p >= 1.0 {
        return n;
    }
    if p <= 0.0 {
        return 0;
    }
    (0..n).filter(|_| rng.gen::<f64>() < p).count() as u32
}

/// Simulate honest token verification and convert to an acceptance rate.
/// Uses the same loss model as the closed form; deterministic per seed.
pub fn monte_carlo_verify(input: &AcceptanceInput, trials: u64, seed: u64) -> Result<McEstimate> {
    input.validate()?;
    if trials == 0 {
        return Err(Error::domain("Monte Carlo needs at least one trial"));
    }
    let (n, t) = (input.design.n, input.design.t);
    let (p1, f, model) = (input.p_survive, input.f_avg, input.model);
    let mut est = mc_probability(trials, seed, move |rng| match model {
        LossModel::IndependentBinomials => {
            let survived = count_bernoulli(rng, n, p1);
            let verified = count_bernoulli(rng, n, f);
            survived == verified && survived >= t
        }
        LossModel::CoupledSurvivors => {
            let survived = count_bernoulli(rng, n, p1);
            let verified = count_bernoulli(rng, survived, f);
            verified >= t
        }
    });
    est.rate_hz = est.probability * input.token_rate_hz;
    est.rate_std_error_hz = est.std_error * input.token_rate_hz;
    Ok(est)
}

/// Simulate the optimal-cloning forger: every qubit of a random token is
/// verified correctly with probability α, independently.  Validates the
/// closed-form forge acceptance probability.
pub fn monte_carlo_forge(d: &SecurityDesign, trials: u64, seed: u64) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::domain("Monte Carlo needs at least one trial"));
    }
    let (n, t, alpha) = (d.n, d.t, d.alpha);
    Ok(mc_probability(trials, seed, move |rng| {
        let token = TokenState::random(n, rng.gen(), rng);
        let correct = token
            .labels()
            .iter()
            .filter(|_| rng.gen::<f64>() < alpha)
            .count() as u32;
        correct >= t
    }))
}
