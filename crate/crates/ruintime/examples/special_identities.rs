//! Exercise the special-function layer directly: generalized hypergeometric
//! series at small and very large arguments, the Bessel recurrence, the
//! contiguous 0Fn relation, and the Gauss multiplication ratio that the
//! Erlang closed form rests on.
//!
//! ```bash
//! cargo run --release --example special_identities
//! ```

use ruintime::specfun::{bessel_i, kummer_1f1, log_gamma, pfq, pfq_ln, pochhammer_value};

fn check(name: &str, residual: f64, threshold: f64) {
    println!(
        "{:<34} residual {residual:9.2e}  (threshold {threshold:.0e})  {}",
        name,
        if residual <= threshold { "PASS" } else { "FAIL" }
    );
}

fn main() {
    println!("spot values");
    println!("  (1/2)_3      = {}", pochhammer_value(0.5, 3));
    println!("  1F1(2;2;1)   = {}", kummer_1f1(2.0, 2.0, 1.0, 1e-14).unwrap());
    println!("  0F1(;1;1)    = {}", pfq(&[], &[1.0], 1.0, 1e-14).unwrap());
    println!("  I0(2)        = {}", bessel_i(0, 2.0));
    let huge = pfq_ln(&[], &[1.0, 1.5], 1e8, 1e-12).unwrap();
    println!("  ln 0F2(;1,3/2;1e8) = {:.6} (value would overflow a double)", huge.ln_abs);
    println!();

    // I0(z) - (2/z) I1(z) = I2(z)
    let mut worst: f64 = 0.0;
    for k in 1..=300 {
        let z = 0.1 * k as f64;
        let lhs = bessel_i(0, z) - (2.0 / z) * bessel_i(1, z);
        worst = worst.max((lhs - bessel_i(2, z)).abs() / bessel_i(2, z));
    }
    check("Bessel recurrence", worst, 1e-12);

    // 0Fn(1, 1+1/n, ...) - 0Fn(1+1/n, ...) = Z n^n n!/(2n)! 0Fn(2+1/n, ...)
    let mut worst: f64 = 0.0;
    for n in 1u32..=3 {
        let nf = n as f64;
        for k in 0..50 {
            let z = 2.0 * k as f64 + 0.5;
            let a: Vec<f64> = (0..n).map(|j| 1.0 + j as f64 / nf).collect();
            let b: Vec<f64> = (1..=n).map(|j| 1.0 + j as f64 / nf).collect();
            let c: Vec<f64> = (1..=n).map(|j| 2.0 + j as f64 / nf).collect();
            let lhs = pfq(&[], &a, z, 1e-14).unwrap() - pfq(&[], &b, z, 1e-14).unwrap();
            let scale =
                (log_gamma(nf + 1.0).unwrap() - log_gamma(2.0 * nf + 1.0).unwrap()).exp();
            let rhs = z * nf.powi(n as i32) * scale * pfq(&[], &c, z, 1e-14).unwrap();
            worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1e-300));
        }
    }
    check("contiguous 0Fn relation", worst, 1e-10);

    // Gamma(n+1)/Gamma(n(m+1)+1) = n^{-nm} prod_k Gamma(1 + (k+1)/n) / Gamma(m+1+(k+1)/n)
    let mut worst: f64 = 0.0;
    for n in 1u32..=4 {
        let nf = n as f64;
        for m in 0u32..=20 {
            let mf = m as f64;
            let lhs = log_gamma(nf + 1.0).unwrap() - log_gamma(nf * (mf + 1.0) + 1.0).unwrap();
            let mut rhs = -nf * mf * nf.ln();
            for k in 0..n {
                let frac = (k as f64 + 1.0) / nf;
                rhs += log_gamma(1.0 + frac).unwrap() - log_gamma(mf + 1.0 + frac).unwrap();
            }
            worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1.0));
        }
    }
    check("Gauss gamma-ratio (log space)", worst, 1e-12);
}
