//! Monte Carlo cross-validation of the closed-form acceptance sum.
//!
//! The acceptance rate is an exact binomial double sum; the Monte Carlo
//! model draws every photon survival and verification outcome per token and
//! must agree within statistics.  Disagreement beyond a few standard errors
//! would flag a modeling bug on one side.
//!
//! Run with: `cargo run --example monte_carlo_check`

use spinmint::scenario::{Scenario, ScenarioConfig};
use spinmint::token::{acceptance_rate, monte_carlo_verify, AcceptanceInput, LossModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = Scenario::from_config(ScenarioConfig::optical())?;
    let pt = scenario.operating_point();
    let rate = scenario.evaluate(&pt)?;

    let input = AcceptanceInput {
        design: scenario.design(),
        p_survive: rate.p_survive,
        f_avg: rate.f_avg,
        token_rate_hz: rate.gamma_tok_hz,
        model: LossModel::IndependentBinomials,
    };
    let exact = acceptance_rate(&input)?;
    println!("closed form: acceptance probability {:.6e} -> gamma_a = {:.3} kHz", exact.acceptance_prob, exact.gamma_a_hz / 1e3);

    println!();
    println!("{:>10} {:>14} {:>14} {:>8}", "trials", "empirical", "std error", "z");
    for (trials, seed) in [(100_000u64, 7u64), (400_000, 8), (1_600_000, 9)] {
        let mc = monte_carlo_verify(&input, trials, seed)?;
        let se = (exact.acceptance_prob * (1.0 - exact.acceptance_prob) / trials as f64).sqrt();
        let z = (mc.probability - exact.acceptance_prob) / se;
        println!("{trials:>10} {:>14.6e} {:>14.2e} {z:>8.2}", mc.probability, se);
    }

    // The coupled variant conditions verification on the survivors; its
    // closed form and simulation must also agree with each other.
    println!();
    let coupled = AcceptanceInput {
        model: LossModel::CoupledSurvivors,
        ..input
    };
    let coupled_exact = acceptance_rate(&coupled)?;
    let mc = monte_carlo_verify(&coupled, 1_600_000, 11)?;
    let se = (coupled_exact.acceptance_prob * (1.0 - coupled_exact.acceptance_prob) / 1_600_000f64)
        .sqrt();
    println!(
        "coupled-survivors variant: closed {:.6e}, empirical {:.6e} ({:+.2} sigma)",
        coupled_exact.acceptance_prob,
        mc.probability,
        (mc.probability - coupled_exact.acceptance_prob) / se
    );
    Ok(())
}
