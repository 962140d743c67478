//! Domain types: model parameters, inter-claim families, delay (first
//! arrival) laws, series configuration, and uniform density grids.

use serde::{Deserialize, Serialize};

use crate::convolve::erlang_density;
use crate::error::{Error, Result};
use crate::specfun::regularized_gamma_q;

/// Parameters of the surplus process `U(t) = u + c t - sum claims`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Initial surplus `u >= 0` (money units).
    pub surplus: f64,
    /// Premium rate `c > 0` (money per unit time).
    pub premium_rate: f64,
    /// Rate of the exponential claim sizes, `lambda > 0` (1/money).
    pub claim_rate: f64,
}

impl ModelParams {
    pub fn new(surplus: f64, premium_rate: f64, claim_rate: f64) -> Result<Self> {
        let p = ModelParams { surplus, premium_rate, claim_rate };
        p.check()?;
        Ok(p)
    }

    pub(crate) fn check(&self) -> Result<()> {
        if !self.surplus.is_finite() || self.surplus < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "initial surplus must be finite and >= 0, got {}",
                self.surplus
            )));
        }
        if !self.premium_rate.is_finite() || self.premium_rate <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "premium rate must be finite and > 0, got {}",
                self.premium_rate
            )));
        }
        if !self.claim_rate.is_finite() || self.claim_rate <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "claim rate must be finite and > 0, got {}",
                self.claim_rate
            )));
        }
        Ok(())
    }
}

/// A density (or any nonnegative function) sampled on a uniform grid
/// `t0, t0 + dt, t0 + 2 dt, ...`, interpolated linearly between nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
}

impl DensityGrid {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !t0.is_finite() || t0 < 0.0 {
            return Err(Error::InvalidParameter(format!("grid start must be >= 0, got {t0}")));
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::InvalidParameter(format!("grid step must be > 0, got {dt}")));
        }
        if values.is_empty() {
            return Err(Error::InvalidParameter("grid needs at least one value".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid values must be finite and >= 0, found {bad}"
            )));
        }
        Ok(DensityGrid { t0, dt, values })
    }

    pub fn start(&self) -> f64 {
        self.t0
    }

    pub fn step(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Time of the last node.
    pub fn end(&self) -> f64 {
        self.t0 + self.dt * (self.values.len() - 1) as f64
    }

    /// Linear interpolation; zero outside the grid.
    pub fn value_at(&self, t: f64) -> f64 {
        let x = (t - self.t0) / self.dt;
        if x < 0.0 || x > (self.values.len() - 1) as f64 {
            return 0.0;
        }
        if self.values.len() == 1 {
            return self.values[0];
        }
        let i = (x.floor() as usize).min(self.values.len() - 2);
        let frac = x - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// Trapezoid integral over the grid span.
    pub fn integral(&self) -> f64 {
        if self.values.len() < 2 {
            return 0.0;
        }
        let interior: f64 = self.values[1..self.values.len() - 1].iter().sum();
        self.dt * (interior + 0.5 * (self.values[0] + self.values[self.values.len() - 1]))
    }

    /// Trapezoid moment `int t^k f(t) dt` over the grid span.
    pub fn moment(&self, k: i32) -> f64 {
        if self.values.len() < 2 {
            return 0.0;
        }
        let node = |i: usize| {
            let t = self.t0 + self.dt * i as f64;
            t.powi(k) * self.values[i]
        };
        let mut sum = 0.5 * (node(0) + node(self.values.len() - 1));
        for i in 1..self.values.len() - 1 {
            sum += node(i);
        }
        self.dt * sum
    }

    /// Cumulative trapezoid integral at each node (starts at 0).
    pub fn cumulative(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.values.len());
        let mut acc = 0.0;
        out.push(0.0);
        for w in self.values.windows(2) {
            acc += 0.5 * self.dt * (w[0] + w[1]);
            out.push(acc);
        }
        out
    }
}

/// The law of the generic inter-claim time `T_1` (and `T_2, T_3, ...`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum InterClaimFamily {
    /// Gamma with shape `n > 0` (not necessarily integer) and rate `beta > 0`.
    Gamma { shape: f64, rate: f64 },
    /// `p alpha e^{-alpha t} + q beta e^{-beta t}` with `0 < p < 1`,
    /// `0 < alpha < beta`.
    MixedExponential { p: f64, alpha: f64, beta: f64 },
    /// Density tabulated on a uniform grid starting at 0.
    Tabulated { grid: DensityGrid },
}

/// Tolerance on the trapezoid integral of a tabulated density; coarse grids
/// are the user's responsibility beyond this.
const TABULATED_MASS_TOL: f64 = 1e-3;

impl InterClaimFamily {
    pub fn validate(&self) -> Result<()> {
        match self {
            InterClaimFamily::Gamma { shape, rate } => {
                if !shape.is_finite() || *shape <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "gamma shape must be > 0, got {shape}"
                    )));
                }
                if !rate.is_finite() || *rate <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "gamma rate must be > 0, got {rate}"
                    )));
                }
            }
            InterClaimFamily::MixedExponential { p, alpha, beta } => {
                if !p.is_finite() || *p <= 0.0 || *p >= 1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "mixture weight must satisfy 0 < p < 1, got {p}"
                    )));
                }
                if !alpha.is_finite() || *alpha <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "mixture rate alpha must be > 0, got {alpha}"
                    )));
                }
                if !beta.is_finite() || *beta <= *alpha {
                    return Err(Error::InvalidParameter(format!(
                        "mixture rates must satisfy beta > alpha, got alpha = {alpha}, beta = {beta}"
                    )));
                }
            }
            InterClaimFamily::Tabulated { grid } => {
                if grid.start() != 0.0 {
                    return Err(Error::InvalidParameter(
                        "tabulated density must start at t = 0".into(),
                    ));
                }
                let mass = grid.integral();
                if (mass - 1.0).abs() > TABULATED_MASS_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "tabulated density integrates to {mass}, expected 1 within {TABULATED_MASS_TOL}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Density `f(t)`. For gamma shape < 1 the value diverges as `t -> 0`;
    /// the evaluators that cannot tolerate that guard on their side.
    pub fn density(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match self {
            InterClaimFamily::Gamma { shape, rate } => gamma_density(*shape, *rate, t),
            InterClaimFamily::MixedExponential { p, alpha, beta } => {
                let q = 1.0 - p;
                p * alpha * (-alpha * t).exp() + q * beta * (-beta * t).exp()
            }
            InterClaimFamily::Tabulated { grid } => grid.value_at(t),
        }
    }

    /// Survival function `1 - F(t)`.
    pub fn survival(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(1.0);
        }
        match self {
            InterClaimFamily::Gamma { shape, rate } => regularized_gamma_q(*shape, rate * t),
            InterClaimFamily::MixedExponential { p, alpha, beta } => {
                let q = 1.0 - p;
                Ok(p * (-alpha * t).exp() + q * (-beta * t).exp())
            }
            InterClaimFamily::Tabulated { grid } => {
                if t >= grid.end() {
                    return Ok(0.0);
                }
                let cum = grid.cumulative();
                let x = (t - grid.start()) / grid.step();
                let i = (x.floor() as usize).min(cum.len() - 2);
                let frac = x - i as f64;
                let at = cum[i] * (1.0 - frac) + cum[i + 1] * frac;
                Ok((grid.integral() - at).max(0.0))
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            InterClaimFamily::Gamma { shape, rate } => shape / rate,
            InterClaimFamily::MixedExponential { p, alpha, beta } => {
                p / alpha + (1.0 - p) / beta
            }
            InterClaimFamily::Tabulated { grid } => grid.moment(1),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            InterClaimFamily::Gamma { shape, rate } => shape / (rate * rate),
            InterClaimFamily::MixedExponential { p, alpha, beta } => {
                let q = 1.0 - p;
                let m = self.mean();
                2.0 * p / (alpha * alpha) + 2.0 * q / (beta * beta) - m * m
            }
            InterClaimFamily::Tabulated { grid } => {
                let m = grid.moment(1);
                grid.moment(2) - m * m
            }
        }
    }

    /// Raw third moment, needed for the moments of a stationary first arrival.
    pub fn third_moment(&self) -> f64 {
        match self {
            InterClaimFamily::Gamma { shape, rate } => {
                shape * (shape + 1.0) * (shape + 2.0) / rate.powi(3)
            }
            InterClaimFamily::MixedExponential { p, alpha, beta } => {
                let q = 1.0 - p;
                6.0 * p / alpha.powi(3) + 6.0 * q / beta.powi(3)
            }
            InterClaimFamily::Tabulated { grid } => grid.moment(3),
        }
    }
}

fn gamma_density(shape: f64, rate: f64, t: f64) -> f64 {
    if t == 0.0 {
        return match shape.partial_cmp(&1.0) {
            Some(std::cmp::Ordering::Less) => f64::INFINITY,
            Some(std::cmp::Ordering::Equal) => rate,
            _ => 0.0,
        };
    }
    let ln = shape * rate.ln() + (shape - 1.0) * t.ln()
        - rate * t
        - crate::specfun::log_gamma(shape).expect("validated shape");
    ln.exp()
}

/// The law of the first inter-claim time `T_0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DelaySpec {
    /// `T_0` has the same law as the later inter-claim times.
    Ordinary,
    /// `T_0` follows the equilibrium law, density `(1 - F(t)) / E[T_1]`,
    /// making the claim arrival process stationary.
    Stationary,
    /// An explicitly tabulated density for `T_0`.
    Explicit { grid: DensityGrid },
}

/// Relative tail level above which a tabulated family is rejected for
/// stationary delays: past the grid the tail is unknown, so the equilibrium
/// density cannot be certified integrable.
const STATIONARY_TAIL_TOL: f64 = 1e-6;

/// Density `f_0(t)` of the first inter-claim time under the given delay.
pub fn delay_density(family: &InterClaimFamily, delay: &DelaySpec, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::Domain(format!("delay density requires t >= 0, got {t}")));
    }
    match delay {
        DelaySpec::Ordinary => Ok(family.density(t)),
        DelaySpec::Stationary => {
            check_stationary_support(family)?;
            match family {
                // Integer gamma shape: (1 - F)/mean collapses to the equal
                // weight Erlang mixture (1/n) sum_{k=1..n} e(k, beta; t).
                InterClaimFamily::Gamma { shape, rate }
                    if shape.fract() == 0.0 && *shape <= 256.0 =>
                {
                    let n = *shape as u32;
                    let mut sum = 0.0;
                    for k in 1..=n {
                        sum += erlang_density(k, *rate, t);
                    }
                    Ok(sum / *shape)
                }
                _ => Ok(family.survival(t)? / family.mean()),
            }
        }
        DelaySpec::Explicit { grid } => Ok(grid.value_at(t)),
    }
}

fn check_stationary_support(family: &InterClaimFamily) -> Result<()> {
    if let InterClaimFamily::Tabulated { grid } = family {
        let max = grid.values().iter().cloned().fold(0.0, f64::max);
        let last = *grid.values().last().expect("non-empty grid");
        if last > STATIONARY_TAIL_TOL * max {
            return Err(Error::Unsupported(
                "stationary delay over a tabulated family requires the grid to cover \
                 essentially all of the density mass (tail value too large)"
                    .into(),
            ));
        }
    }
    Ok(())
}

/// Series evaluation controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesConfig {
    /// Absolute truncation tolerance for the density series.
    pub tol: f64,
    /// Cap on the outer series index.
    pub max_terms: usize,
    /// Tolerance for inner coefficient sums (Erlang mixture weights).
    pub coeff_tol: f64,
    /// Step for numeric grid convolution fallbacks.
    pub grid_dt: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig { tol: 1e-12, max_terms: 10_000, coeff_tol: 1e-14, grid_dt: 1e-3 }
    }
}

impl SeriesConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.coeff_tol > 0.0) || !(self.grid_dt > 0.0) {
            return Err(Error::InvalidParameter(
                "series tolerances and grid step must be positive".into(),
            ));
        }
        if self.max_terms == 0 {
            return Err(Error::InvalidParameter("max_terms must be >= 1".into()));
        }
        Ok(())
    }
}

/// A validated model: parameters plus the inter-claim and delay laws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub params: ModelParams,
    pub family: InterClaimFamily,
    pub delay: DelaySpec,
    /// Whether `c E[T_1] > E[X] = 1/lambda`. When false, ruin is certain;
    /// the density formulas remain valid, so this is a warning, not an error.
    pub net_profit_satisfied: bool,
}

impl Model {
    pub fn warnings(&self) -> Vec<String> {
        if self.net_profit_satisfied {
            Vec::new()
        } else {
            vec![
                "net profit condition violated (c*E[T] <= E[X]): ruin is certain; \
                 densities and probabilities remain valid"
                    .to_string(),
            ]
        }
    }
}

/// Validate parameters and laws, returning the assembled model.
pub fn validate(
    params: ModelParams,
    family: InterClaimFamily,
    delay: DelaySpec,
) -> Result<Model> {
    params.check()?;
    family.validate()?;
    if let DelaySpec::Explicit { grid } = &delay {
        let mass = grid.integral();
        if (mass - 1.0).abs() > TABULATED_MASS_TOL {
            return Err(Error::InvalidParameter(format!(
                "explicit delay density integrates to {mass}, expected 1 within {TABULATED_MASS_TOL}"
            )));
        }
    }
    if matches!(delay, DelaySpec::Stationary) {
        check_stationary_support(&family)?;
    }
    let net_profit_satisfied = params.premium_rate * family.mean() > 1.0 / params.claim_rate;
    Ok(Model { params, family, delay, net_profit_satisfied })
}

/// Mean and variance of the generic inter-claim time.
pub fn moments(family: &InterClaimFamily) -> (f64, f64) {
    (family.mean(), family.variance())
}

/// Mean and variance of the first inter-claim time under the given delay.
///
/// For the stationary delay, `E[T_0^k] = E[T_1^{k+1}] / ((k+1) E[T_1])`.
pub fn delay_moments(family: &InterClaimFamily, delay: &DelaySpec) -> Result<(f64, f64)> {
    match delay {
        DelaySpec::Ordinary => Ok(moments(family)),
        DelaySpec::Stationary => {
            check_stationary_support(family)?;
            let m1 = family.mean();
            let m2 = family.variance() + m1 * m1;
            let m3 = family.third_moment();
            let mean0 = m2 / (2.0 * m1);
            let var0 = m3 / (3.0 * m1) - mean0 * mean0;
            Ok((mean0, var0))
        }
        DelaySpec::Explicit { grid } => {
            let mean = grid.moment(1);
            Ok((mean, grid.moment(2) - mean * mean))
        }
    }
}
