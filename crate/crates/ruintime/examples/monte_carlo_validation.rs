//! Validate the analytic density against the path simulator: run a million
//! surplus paths, compare the empirical ruin frequency and the per-bin
//! histogram against quadrature of the density, and show that a deliberately
//! wrong model is flagged.
//!
//! ```bash
//! cargo run --release --example monte_carlo_validation
//! ```

use ruintime::density::{DensityQuery, EvalPath};
use ruintime::model::{validate, DelaySpec, InterClaimFamily, ModelParams, SeriesConfig};
use ruintime::montecarlo::{compare_to_density, simulate, SimConfig};
use ruintime::quadrature::ruin_prob;

fn main() {
    let model = validate(
        ModelParams::new(0.0, 1.1, 1.0).unwrap(),
        InterClaimFamily::Gamma { shape: 2.0, rate: 2.0 },
        DelaySpec::Ordinary,
    )
    .unwrap();
    let sim = SimConfig { n_paths: 1_000_000, horizon: 20.0, seed: 7, bin_width: 0.5 };

    let start = std::time::Instant::now();
    let result = simulate(&model, &sim).unwrap();
    println!(
        "simulated {} paths in {:?} ({} ruined, {} survived, rng {})",
        result.n_paths,
        start.elapsed(),
        result.ruined,
        result.survived,
        result.rng_algorithm,
    );

    let query = DensityQuery::new(model.clone(), SeriesConfig::default(), EvalPath::Auto).unwrap();
    let analytic = ruin_prob(&query, sim.horizon, 1e-8).unwrap().value;
    let se = result.ruin_frequency_std_error();
    println!(
        "ruin frequency {:.6} vs analytic {:.6} ({:+.2} sigma)",
        result.ruin_frequency(),
        analytic,
        (result.ruin_frequency() - analytic) / se
    );

    let cmp = compare_to_density(&result, &query, 1e-9).unwrap();
    println!(
        "histogram: max |z| = {:.2} over {} bins, chi-square = {:.1}",
        cmp.max_abs_z, cmp.dof, cmp.chi_square
    );
    println!(
        "{}",
        if cmp.max_abs_z < 4.0 { "PASS: histogram consistent with the density" } else { "FAIL" }
    );

    // Negative control: the same histogram against a wrong claim rate.
    let wrong = validate(
        ModelParams::new(0.0, 1.1, 0.8).unwrap(),
        InterClaimFamily::Gamma { shape: 2.0, rate: 2.0 },
        DelaySpec::Ordinary,
    )
    .unwrap();
    let wrong_query = DensityQuery::new(wrong, SeriesConfig::default(), EvalPath::Auto).unwrap();
    let cmp = compare_to_density(&result, &wrong_query, 1e-9).unwrap();
    println!(
        "\nnegative control (lambda 0.8 instead of 1): max |z| = {:.1} -> {}",
        cmp.max_abs_z,
        if cmp.max_abs_z > 4.0 { "correctly rejected" } else { "NOT REJECTED (problem!)" }
    );
}
