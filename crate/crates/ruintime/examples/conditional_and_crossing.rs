//! The conditional ruin-time density given the first inter-claim time, its
//! exact reparametrization as a first-passage ("crossing") density of the
//! time-space swapped process, and the mixing identity that rebuilds the
//! unconditional density by integrating over the first arrival.
//!
//! ```bash
//! cargo run --release --example conditional_and_crossing
//! ```

use ruintime::density::{
    conditional_density, density_at, kendall_crossing_density, ConditionalEvaluator, DensityQuery,
    EvalPath, KendallQuery,
};
use ruintime::model::{
    delay_density, validate, DelaySpec, InterClaimFamily, ModelParams, SeriesConfig,
};

fn main() {
    let params = ModelParams::new(1.0, 1.0, 1.0).unwrap();
    let family = InterClaimFamily::Gamma { shape: 1.0, rate: 2.0 }; // Exp(2) inter-claims
    let cfg = SeriesConfig::default();
    let v = 0.5;

    println!("conditional density p(t | T0 = {v}) and the crossing-time reparametrization");
    println!("{:>6} {:>14} {:>14} {:>10}", "t", "p(t|v)", "c * p_sigma", "rel diff");
    for t in [0.75, 1.0, 2.0, 4.0, 8.0] {
        let direct = conditional_density(&params, &family, v, t, &cfg).unwrap();
        let query = KendallQuery {
            params,
            family: family.clone(),
            v,
            s: params.surplus + params.premium_rate * t,
        };
        let via_crossing = params.premium_rate * kendall_crossing_density(&query, &cfg).unwrap();
        println!(
            "{t:>6} {direct:>14.9} {via_crossing:>14.9} {:>10.1e}",
            (direct - via_crossing).abs() / direct
        );
    }

    // Mixing: int_0^t p(t|v) f0(v) dv + e^{-lambda(u+ct)} f0(t) = p(t).
    let t = 3.0;
    let model = validate(params, family.clone(), DelaySpec::Ordinary).unwrap();
    let cond = ConditionalEvaluator::new(&params, &family, &cfg, t).unwrap();
    let n = 600_000;
    let h = (t - 2e-9) / n as f64;
    let mut integral = 0.0;
    for i in 0..=n {
        let x = 1e-9 + h * i as f64;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        integral += w
            * cond.density(x, t).unwrap()
            * delay_density(&family, &DelaySpec::Ordinary, x).unwrap();
    }
    integral *= h;
    let atom = (-params.claim_rate * (params.surplus + params.premium_rate * t)).exp()
        * delay_density(&family, &DelaySpec::Ordinary, t).unwrap();
    let query = DensityQuery::new(model, cfg, EvalPath::Auto).unwrap();
    let direct = density_at(&query, t).unwrap();

    println!("\nmixing identity at t = {t}:");
    println!("  integral over first arrival   {integral:.12}");
    println!("  ruin-at-first-claim term      {atom:.12}");
    println!("  reconstructed density         {:.12}", integral + atom);
    println!("  direct density                {direct:.12}");
    let dev = (integral + atom - direct).abs();
    println!("  |difference| = {dev:.2e}  {}", if dev < 1e-7 { "PASS" } else { "FAIL" });
}
