//! The Lundberg ultimate-ruin probability as an independent cross-check:
//! with positive loading, psi(u, t) must increase toward (and never exceed)
//! psi(u) = (1 - R/lambda) e^{-R u}, with R the adjustment coefficient.
//!
//! ```bash
//! cargo run --release --example ultimate_ruin
//! ```

use ruintime::density::{DensityQuery, EvalPath};
use ruintime::model::{validate, DelaySpec, InterClaimFamily, ModelParams, SeriesConfig};
use ruintime::quadrature::{lundberg_ultimate, ruin_prob};

fn main() {
    // Exponential inter-claims first: the adjustment coefficient has the
    // classical closed form R = lambda - rate/c.
    let params = ModelParams::new(1.0, 1.1, 1.0).unwrap();
    let family = InterClaimFamily::Gamma { shape: 1.0, rate: 0.5 };
    let psi = lundberg_ultimate(&params, &family).unwrap();
    let r = 1.0 - 0.5 / 1.1;
    let closed = (1.0 - r) * (-r * params.surplus).exp();
    println!("exponential inter-claims: psi(1) = {psi:.12}, classical formula {closed:.12}");

    // Heavily loaded Erlang(2) case: the horizon catches up with the
    // ultimate probability quickly.
    let params = ModelParams::new(2.0, 2.0, 1.0).unwrap();
    let family = InterClaimFamily::Gamma { shape: 2.0, rate: 2.0 };
    let ultimate = lundberg_ultimate(&params, &family).unwrap();
    let model = validate(params, family, DelaySpec::Ordinary).unwrap();
    let query = DensityQuery::new(model, SeriesConfig::default(), EvalPath::Auto).unwrap();
    println!("\nloaded Erlang(2) model (c = 2, u = 2): ultimate psi = {ultimate:.12}");
    println!("{:>6} {:>14} {:>12}", "t", "psi(u,t)", "gap");
    for t in [5.0, 10.0, 20.0, 50.0, 100.0, 200.0] {
        let finite = ruin_prob(&query, t, 1e-9).unwrap().value;
        println!("{t:>6} {finite:>14.12} {:>12.2e}", ultimate - finite);
        assert!(finite <= ultimate + 1e-9, "finite-horizon value must stay below the ultimate");
    }

    // No positive loading, no adjustment coefficient.
    let heavy = ModelParams::new(1.0, 0.9, 1.0).unwrap();
    let family = InterClaimFamily::Gamma { shape: 1.0, rate: 1.0 };
    match lundberg_ultimate(&heavy, &family) {
        Err(e) => println!("\nc = 0.9 violates net profit, as reported: {e}"),
        Ok(v) => println!("\nunexpected ultimate probability {v}"),
    }
}
