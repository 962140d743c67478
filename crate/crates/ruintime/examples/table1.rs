//! Reproduce the benchmark table of finite-time ruin probabilities for
//! Erlang(2) inter-claim times (lambda = 1, beta = 2, c = 1.1), under both
//! the ordinary and the stationary (equilibrium first arrival) delay.
//!
//! ```bash
//! cargo run --release --example table1
//! ```

use ruintime::density::{DensityQuery, EvalPath};
use ruintime::model::{validate, DelaySpec, InterClaimFamily, ModelParams, SeriesConfig};
use ruintime::quadrature::ruin_prob;

fn main() {
    let reference: [(f64, [f64; 6]); 5] = [
        (20.0, [0.7973, 0.8463, 0.0457, 0.0509, 0.0009, 0.0010]),
        (40.0, [0.8332, 0.8735, 0.1008, 0.1082, 0.0060, 0.0066]),
        (60.0, [0.8481, 0.8848, 0.1387, 0.1469, 0.0138, 0.0148]),
        (80.0, [0.8564, 0.8912, 0.1651, 0.1737, 0.0218, 0.0232]),
        (100.0, [0.8618, 0.8952, 0.1842, 0.1930, 0.0292, 0.0309]),
    ];

    println!("Finite-time ruin probabilities, Erlang(2, 2) inter-claim times");
    println!("lambda = 1, c = 1.1; psi = ordinary delay, psi_e = stationary delay\n");
    println!(
        "{:>5} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
        "t", "psi(0,t)", "psi_e(0,t)", "psi(10,t)", "psi_e(10,t)", "psi(20,t)", "psi_e(20,t)"
    );

    let start = std::time::Instant::now();
    let mut worst: f64 = 0.0;
    for (t, expected) in reference {
        print!("{t:>5}");
        for (i, u) in [0.0, 10.0, 20.0].into_iter().enumerate() {
            for (j, delay) in [DelaySpec::Ordinary, DelaySpec::Stationary].into_iter().enumerate()
            {
                let model = validate(
                    ModelParams::new(u, 1.1, 1.0).unwrap(),
                    InterClaimFamily::Gamma { shape: 2.0, rate: 2.0 },
                    delay,
                )
                .unwrap();
                let query =
                    DensityQuery::new(model, SeriesConfig::default(), EvalPath::Auto).unwrap();
                let value = ruin_prob(&query, t, 1e-8).unwrap().value;
                worst = worst.max((value - expected[2 * i + j]).abs());
                print!(" {value:>10.6}");
            }
        }
        println!();
    }
    println!(
        "\nworst deviation from the four-decimal reference: {worst:.2e} (computed in {:?})",
        start.elapsed()
    );
    println!(
        "{}",
        if worst <= 5e-5 { "PASS: every cell matches to print precision" } else { "FAIL" }
    );
}
