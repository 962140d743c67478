//! Finite-time ruin probabilities `psi(u, t) = int_0^t p(s) ds`, density
//! tabulation, and the Lundberg ultimate-ruin cross-check.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{DensityQuery, Evaluator};
use crate::error::{Error, Result};
use crate::gk;
use crate::model::{DelaySpec, DensityGrid, InterClaimFamily, ModelParams};

/// A finite-time ruin probability with its certified error estimate.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RuinProbResult {
    /// `psi(u, t)`, clamped to [0, 1] after the sanity check.
    pub value: f64,
    /// Sum of the per-panel Gauss-Kronrod error estimates.
    pub abs_error_estimate: f64,
    /// Number of density evaluations spent.
    pub evaluations: u64,
}

const MAX_PANELS: usize = 4096;

/// Probability of ruin by time `t`, by adaptive Gauss-Kronrod integration of
/// the ruin-time density over `(0, t]`.
///
/// For an ordinary gamma family with shape `n < 1` the density has an
/// integrable singularity at 0; the first stretch is integrated under the
/// substitution `s = w^{1/n}`, which absorbs the `s^{n-1}` factor exactly.
pub fn ruin_prob(query: &DensityQuery, t: f64, quad_tol: f64) -> Result<RuinProbResult> {
    if !(quad_tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "quadrature tolerance must be positive, got {quad_tol}"
        )));
    }
    if t < 0.0 {
        return Err(Error::Domain(format!("ruin probability horizon must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(RuinProbResult { value: 0.0, abs_error_estimate: 0.0, evaluations: 0 });
    }
    let eval = Evaluator::new(query, t)?;

    let singular_shape = match (&query.model.family, &query.model.delay) {
        (InterClaimFamily::Gamma { shape, .. }, DelaySpec::Ordinary) if *shape < 1.0 => {
            Some(*shape)
        }
        _ => None,
    };

    let (value, error, evaluations) = match singular_shape {
        None => {
            let f = |s: f64| eval.density(s);
            let out = gk::adaptive(&f, 0.0, t, quad_tol, MAX_PANELS)?;
            (out.value, out.error, out.evaluations)
        }
        Some(n) => {
            // Split at a; the head [0, a] in transformed coordinates.
            let a = t.min(1.0 / rate_of(&query.model.family));
            let head = |w: f64| -> Result<f64> {
                let s = w.powf(1.0 / n);
                Ok(eval.density(s)? * s.powf(1.0 - n) / n)
            };
            let head_out = gk::adaptive(&head, 0.0, a.powf(n), quad_tol * 0.5, MAX_PANELS)?;
            if a >= t {
                (head_out.value, head_out.error, head_out.evaluations)
            } else {
                let f = |s: f64| eval.density(s);
                let tail_out = gk::adaptive(&f, a, t, quad_tol * 0.5, MAX_PANELS)?;
                (
                    head_out.value + tail_out.value,
                    head_out.error + tail_out.error,
                    head_out.evaluations + tail_out.evaluations,
                )
            }
        }
    };

    if !(-1e-6..=1.0 + 1e-6).contains(&value) {
        return Err(Error::ToleranceNotMet { value, estimate: error });
    }
    Ok(RuinProbResult { value: value.clamp(0.0, 1.0), abs_error_estimate: error, evaluations })
}

fn rate_of(family: &InterClaimFamily) -> f64 {
    match family {
        InterClaimFamily::Gamma { rate, .. } => *rate,
        InterClaimFamily::MixedExponential { beta, .. } => *beta,
        InterClaimFamily::Tabulated { .. } => 1.0,
    }
}

/// Tabulate the ruin-time density at `t = dt, 2dt, ..., t_max` (`t = 0` is
/// excluded: the density is only defined on positive times).
///
/// Points are evaluated in parallel; each point is an independent pure
/// evaluation, so the result does not depend on the partitioning.
pub fn tabulate_density(query: &DensityQuery, t_max: f64, dt: f64) -> Result<DensityGrid> {
    if !(t_max > 0.0) || !(dt > 0.0) {
        return Err(Error::Domain(format!(
            "tabulation needs t_max > 0 and dt > 0, got t_max = {t_max}, dt = {dt}"
        )));
    }
    if dt > t_max {
        return Err(Error::Domain(format!(
            "tabulation step dt = {dt} exceeds t_max = {t_max}"
        )));
    }
    let n = (t_max / dt).floor() as usize;
    let eval = Evaluator::new(query, n as f64 * dt)?;
    let values: Result<Vec<f64>> = (1..=n)
        .into_par_iter()
        .map(|i| eval.density(i as f64 * dt))
        .collect();
    DensityGrid::new(dt, dt, values?)
}

/// Ultimate ruin probability for the *ordinary* renewal model with
/// exponential claims: `psi(u) = (1 - R/lambda) e^{-R u}` where the
/// adjustment coefficient `R` in `(0, lambda)` solves
/// `lambda/(lambda - R) * L_f(c R) = 1`, `L_f` the Laplace transform of the
/// inter-claim density.
pub fn lundberg_ultimate(params: &ModelParams, family: &InterClaimFamily) -> Result<f64> {
    params.check()?;
    family.validate()?;
    let lambda = params.claim_rate;
    if params.premium_rate * family.mean() <= 1.0 / lambda {
        return Err(Error::NoRoot(
            "net profit condition fails (c E[T] <= E[X]); ruin is certain and no \
             adjustment coefficient exists"
                .into(),
        ));
    }
    let laplace = |s: f64| -> f64 {
        match family {
            InterClaimFamily::Gamma { shape, rate } => (rate / (rate + s)).powf(*shape),
            InterClaimFamily::MixedExponential { p, alpha, beta } => {
                p * alpha / (alpha + s) + (1.0 - p) * beta / (beta + s)
            }
            InterClaimFamily::Tabulated { grid } => {
                // Trapezoid transform; adequate for the smooth grids accepted
                // by validation.
                let dt = grid.step();
                let vals = grid.values();
                let mut sum = 0.0;
                for (i, v) in vals.iter().enumerate() {
                    let w = if i == 0 || i == vals.len() - 1 { 0.5 } else { 1.0 };
                    sum += w * v * (-s * (grid.start() + dt * i as f64)).exp();
                }
                sum * dt
            }
        }
    };
    // g(R) = lambda/(lambda - R) L_f(cR) - 1 has g(0) = 0, dips negative
    // under positive loading, and blows up at R -> lambda.
    let g = |r: f64| lambda / (lambda - r) * laplace(params.premium_rate * r) - 1.0;
    let scan_points = 4000;
    let mut best = (0.0f64, f64::INFINITY);
    for k in 1..scan_points {
        let r = lambda * k as f64 / scan_points as f64;
        let v = g(r);
        if v < best.1 {
            best = (r, v);
        }
    }
    if best.1 >= 0.0 {
        return Err(Error::NoRoot(format!(
            "Lundberg equation has no interior sign change (min residual {} at R = {})",
            best.1, best.0
        )));
    }
    let (mut lo, mut hi) = (best.0, lambda * (1.0 - 1e-14));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-12 {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    Ok((1.0 - r / lambda) * (-r * params.surplus).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::EvalPath;
    use crate::model::{validate, SeriesConfig};

    fn erlang2_query(u: f64, delay: DelaySpec) -> DensityQuery {
        let model = validate(
            ModelParams::new(u, 1.1, 1.0).unwrap(),
            InterClaimFamily::Gamma { shape: 2.0, rate: 2.0 },
            delay,
        )
        .unwrap();
        DensityQuery::new(model, SeriesConfig::default(), EvalPath::Auto).unwrap()
    }

    #[test]
    fn zero_horizon_is_exact_zero() {
        let q = erlang2_query(0.0, DelaySpec::Ordinary);
        let r = ruin_prob(&q, 0.0, 1e-8).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.evaluations, 0);
    }

    #[test]
    fn reference_table_spot_checks() {
        // psi(0, 20) = 0.7973 and psi_e(10, 40) = 0.1082 to four decimals.
        let r = ruin_prob(&erlang2_query(0.0, DelaySpec::Ordinary), 20.0, 1e-8).unwrap();
        assert!(
            (r.value - 0.7973).abs() < 5e-5,
            "psi(0,20) = {}, expected 0.7973 +- 5e-5",
            r.value
        );
        let r = ruin_prob(&erlang2_query(10.0, DelaySpec::Stationary), 40.0, 1e-8).unwrap();
        assert!(
            (r.value - 0.1082).abs() < 5e-5,
            "psi_e(10,40) = {}, expected 0.1082 +- 5e-5",
            r.value
        );
    }

    #[test]
    fn singular_shape_head_is_integrated() {
        // Ordinary gamma with shape 1/2: density ~ t^{-1/2} near 0, still
        // integrable; psi must be finite, positive, monotone in t.
        let model = validate(
            ModelParams::new(1.0, 1.5, 1.0).unwrap(),
            InterClaimFamily::Gamma { shape: 0.5, rate: 1.0 },
            DelaySpec::Ordinary,
        )
        .unwrap();
        let q = DensityQuery::new(model, SeriesConfig::default(), EvalPath::Auto).unwrap();
        let p1 = ruin_prob(&q, 1.0, 1e-8).unwrap();
        let p2 = ruin_prob(&q, 4.0, 1e-8).unwrap();
        assert!(p1.value > 0.0 && p2.value > p1.value && p2.value < 1.0);
    }

    #[test]
    fn tabulated_density_matches_quadrature() {
        let q = erlang2_query(0.0, DelaySpec::Ordinary);
        let grid = tabulate_density(&q, 20.0, 1e-2).unwrap();
        assert_eq!(grid.len(), 2000);
        assert!(grid.values().iter().all(|v| *v >= 0.0));
        // Trapezoid over the grid vs the adaptive integral. The grid misses
        // (0, dt); add the head estimate crudely as 0.5 dt p(dt).
        let trap = grid.integral() + 0.5 * grid.step() * grid.values()[0];
        let quad = ruin_prob(&q, 20.0, 1e-8).unwrap().value;
        assert!(
            (trap - quad).abs() < 1e-4,
            "trapezoid {trap} vs quadrature {quad}"
        );
    }

    #[test]
    fn tabulation_is_independent_of_thread_count() {
        let q = erlang2_query(3.0, DelaySpec::Stationary);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| tabulate_density(&q, 8.0, 0.05).unwrap());
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| tabulate_density(&q, 8.0, 0.05).unwrap());
        assert_eq!(single, multi, "per-point evaluation must not depend on partitioning");
    }

    #[test]
    fn tabulate_rejects_degenerate_grids() {
        let q = erlang2_query(0.0, DelaySpec::Ordinary);
        assert!(matches!(tabulate_density(&q, 0.0, 0.1), Err(Error::Domain(_))));
        assert!(matches!(tabulate_density(&q, 1.0, 2.0), Err(Error::Domain(_))));
        // Single point when dt == t_max.
        let g = tabulate_density(&q, 0.5, 0.5).unwrap();
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn lundberg_poisson_exponential_closed_form() {
        // Exp(0.5) inter-claims, lambda = 1, c = 1.1: R = 1 - 0.5/1.1 = 6/11.
        let params = ModelParams::new(0.0, 1.1, 1.0).unwrap();
        let family = InterClaimFamily::Gamma { shape: 1.0, rate: 0.5 };
        for &u in &[0.0, 1.0, 5.0, 20.0] {
            let p = ModelParams { surplus: u, ..params };
            let got = lundberg_ultimate(&p, &family).unwrap();
            let r = 6.0 / 11.0;
            let want = (5.0 / 11.0) * (-r * u).exp();
            assert!(
                (got - want).abs() < 1e-10,
                "psi({u}) = {got}, classical value {want}"
            );
        }
    }

    #[test]
    fn lundberg_bounds_reference_table_column() {
        // psi(0) must exceed the t = 100 table value 0.8618.
        let params = ModelParams::new(0.0, 1.1, 1.0).unwrap();
        let family = InterClaimFamily::Gamma { shape: 2.0, rate: 2.0 };
        let psi = lundberg_ultimate(&params, &family).unwrap();
        assert!(psi > 0.8618 && psi < 1.0, "psi(0) = {psi}");
    }

    #[test]
    fn lundberg_requires_positive_loading() {
        let params = ModelParams::new(0.0, 0.9, 1.0).unwrap();
        let family = InterClaimFamily::Gamma { shape: 1.0, rate: 1.0 };
        assert!(matches!(lundberg_ultimate(&params, &family), Err(Error::NoRoot(_))));
    }

    #[test]
    fn finite_time_probabilities_below_ultimate() {
        let params = ModelParams::new(5.0, 1.1, 1.0).unwrap();
        let family = InterClaimFamily::Gamma { shape: 2.0, rate: 2.0 };
        let ultimate = lundberg_ultimate(&params, &family).unwrap();
        let q = erlang2_query(5.0, DelaySpec::Ordinary);
        for &t in &[5.0, 20.0, 60.0] {
            let psi_t = ruin_prob(&q, t, 1e-8).unwrap().value;
            assert!(
                psi_t <= ultimate + 1e-8,
                "psi(5, {t}) = {psi_t} exceeds ultimate {ultimate}"
            );
        }
    }
}
