//! Token sizing against the optimal-cloning forger.
//!
//! A forger cloning an n-qubit token passes each verification qubit with
//! probability at most alpha = 3/4.  Verification demands at least t of the
//! returned qubits to pass; the smallest (n, t) pair pushing the forger's
//! overall acceptance below a threshold sets the token size.
//!
//! Run with: `cargo run --example security_table`

use spinmint::token::{
    forge_acceptance_prob, min_token_size, monte_carlo_forge, SecurityDesign, ALPHA_OPTIMAL_CLONING,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("minimal token sizes for alpha = {ALPHA_OPTIMAL_CLONING}:");
    println!("{:>8} {:>5} {:>5} {:>12} {:>14}", "p_th", "n", "t", "p_forge", "t_min feasible");
    for exponent in 3..=8 {
        let p_th = 10f64.powi(-exponent);
        let report = min_token_size(p_th, ALPHA_OPTIMAL_CLONING)?;
        println!(
            "{:>8.0e} {:>5} {:>5} {:>12.3e} {:>14}",
            p_th,
            report.design.n(),
            report.design.t(),
            report.p_forge,
            report.feasible_t_min
        );
    }

    // Sensitivity: a token verified with slack (t below n) needs to be much
    // longer for the same security, because the forger may miss a few.
    println!();
    println!("forger acceptance at n = 42 for different thresholds t:");
    for t in [38, 40, 41, 42] {
        let design = SecurityDesign::new(42, t, ALPHA_OPTIMAL_CLONING, 0.5)?;
        println!("  t = {t:>2}: p_forge = {:.3e}", forge_acceptance_prob(&design));
    }

    // Cross-check the closed-form tail with a forger simulation.
    println!();
    let report = min_token_size(1e-4, ALPHA_OPTIMAL_CLONING)?;
    let trials = 2_000_000;
    let mc = monte_carlo_forge(&report.design, trials, 42)?;
    let se = (report.p_forge * (1.0 - report.p_forge) / trials as f64).sqrt();
    println!(
        "forger simulation at (n, t) = ({}, {}): {:.3e} vs closed form {:.3e} ({:+.2} sigma, {} trials)",
        report.design.n(),
        report.design.t(),
        mc.probability,
        report.p_forge,
        (mc.probability - report.p_forge) / se,
        trials
    );
    Ok(())
}
