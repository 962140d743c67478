//! The ruin-time density evaluators.
//!
//! The defective density of the ruin time is the Poisson-weighted series
//!
//! ```text
//! p(t) = e^{-lambda(u+ct)} { f0(t)
//!        + sum_{n>=1} lambda^n (u+ct)^{n-1} / n! [ u (f^{*n}*f0)(t) + c (f^{*n}*f1)(t) ] }
//! ```
//!
//! with `f1(t) = t f0(t)`. This module provides:
//!
//! - [`density_at`]: the generic series over any supported family/delay,
//!   with truncation certified by a Poisson tail bound;
//! - [`erlang_closed_form`]: the hypergeometric closed form for ordinary
//!   Erlang inter-claim times;
//! - [`gamma_ordinary_series`]: the double-series form valid for any real
//!   gamma shape (the alternate route used to cross-check the above);
//! - [`stationary_erlang2_closed_form`]: the stationary Erlang(2) closed
//!   form in terms of 0F2 values;
//! - [`conditional_density`]: the density of the ruin time given the first
//!   inter-claim time, and [`kendall_crossing_density`], the first-passage
//!   density of the time-space swapped process the conditional law is an
//!   exact reparametrization of.

use crate::convolve::{
    gamma_nfold, gamma_nfold_weighted, grid_convolve, mixed_exp_equilibrium_mixture,
    mixed_exp_nfold, mixed_exp_nfold_weighted, ErlangMixture,
};
use crate::error::{Error, Result};
use crate::gk;
use crate::model::{delay_density, DelaySpec, DensityGrid, InterClaimFamily, Model, SeriesConfig};
use crate::specfun::{log_gamma, pfq_ln, LogAccumulator, SignedLog};

/// Which evaluation route [`density_at`] takes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum EvalPath {
    /// Closed form when one exists, otherwise the generic series.
    Auto,
    /// Force the generic series.
    GenericSeries,
    /// Force the closed form; construction fails if none exists for the
    /// model's family/delay combination.
    ClosedForm,
}

/// A density evaluation request: validated model, series controls, route.
#[derive(Clone, Debug)]
pub struct DensityQuery {
    pub model: Model,
    pub cfg: SeriesConfig,
    pub path: EvalPath,
}

impl DensityQuery {
    pub fn new(model: Model, cfg: SeriesConfig, path: EvalPath) -> Result<Self> {
        cfg.validate()?;
        if path == EvalPath::ClosedForm && closed_form_kind(&model).is_none() {
            return Err(Error::Unsupported(format!(
                "no closed form for family {:?} with delay {:?}; closed forms exist for \
                 integer-shape gamma with ordinary delay, gamma shape 2 with stationary delay, \
                 and mixed exponential with ordinary delay",
                model.family, model.delay
            )));
        }
        Ok(DensityQuery { model, cfg, path })
    }

    pub fn auto(model: Model) -> Result<Self> {
        DensityQuery::new(model, SeriesConfig::default(), EvalPath::Auto)
    }
}

enum ClosedFormKind {
    ErlangOrdinary { order: u32, rate: f64 },
    StationaryErlang2 { rate: f64 },
    /// The Erlang-mixture series *is* the closed form for this family; the
    /// evaluator is shared with the generic path.
    MixedExponentialOrdinary,
}

fn closed_form_kind(model: &Model) -> Option<ClosedFormKind> {
    match (&model.family, &model.delay) {
        (InterClaimFamily::Gamma { shape, rate }, DelaySpec::Ordinary)
            if shape.fract() == 0.0 && *shape >= 1.0 && *shape <= 64.0 =>
        {
            Some(ClosedFormKind::ErlangOrdinary { order: *shape as u32, rate: *rate })
        }
        (InterClaimFamily::Gamma { shape, rate }, DelaySpec::Stationary) if *shape == 2.0 => {
            Some(ClosedFormKind::StationaryErlang2 { rate: *rate })
        }
        (InterClaimFamily::MixedExponential { .. }, DelaySpec::Ordinary) => {
            Some(ClosedFormKind::MixedExponentialOrdinary)
        }
        _ => None,
    }
}

/// Evaluate the defective ruin-time density at a single point `t > 0`.
///
/// For sweeps over many points build one [`Evaluator`] instead; the mixture
/// caches are then paid once.
pub fn density_at(query: &DensityQuery, t: f64) -> Result<f64> {
    Evaluator::new(query, t)?.density(t)
}

/// A reusable density evaluator for times in `(0, t_max]`.
///
/// Construction precomputes whatever the family needs (Erlang mixture
/// coefficient tables, convolution grids); evaluation is then pure and
/// `Sync`, so sweeps may run in parallel with results independent of the
/// partitioning.
pub struct Evaluator {
    model: Model,
    cfg: SeriesConfig,
    t_max: f64,
    route: Route,
}

enum Route {
    ErlangPfq { order: u32, rate: f64 },
    StatErlang2Pfq { rate: f64 },
    Series { kernel: ConvKernel, n_cap: usize },
}

impl Evaluator {
    pub fn new(query: &DensityQuery, t_max: f64) -> Result<Self> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::Domain(format!("t_max must be positive and finite, got {t_max}")));
        }
        let model = query.model.clone();
        let cfg = query.cfg;
        let closed = closed_form_kind(&model);
        let use_closed = match query.path {
            EvalPath::Auto | EvalPath::ClosedForm => closed.is_some(),
            EvalPath::GenericSeries => false,
        };
        let route = match (use_closed, closed) {
            (true, Some(ClosedFormKind::ErlangOrdinary { order, rate })) => {
                Route::ErlangPfq { order, rate }
            }
            (true, Some(ClosedFormKind::StationaryErlang2 { rate })) => {
                Route::StatErlang2Pfq { rate }
            }
            _ => {
                let n_cap = poisson_term_cap(&model, cfg.max_terms, t_max);
                let kernel = ConvKernel::build(&model, &cfg, t_max, n_cap)?;
                Route::Series { kernel, n_cap }
            }
        };
        Ok(Evaluator { model, cfg, t_max, route })
    }

    /// The defective density at `t` in `(0, t_max]`.
    pub fn density(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!(
                "the ruin-time density is evaluated on t > 0 only, got {t}"
            )));
        }
        if t > self.t_max * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "t = {t} exceeds the evaluator horizon {}",
                self.t_max
            )));
        }
        match &self.route {
            Route::ErlangPfq { order, rate } => {
                erlang_closed_form(&self.model.params, *order, *rate, t, self.cfg.tol)
            }
            Route::StatErlang2Pfq { rate } => {
                stationary_erlang2_closed_form(&self.model.params, *rate, t, self.cfg.tol)
            }
            Route::Series { kernel, n_cap } => self.series_density(kernel, *n_cap, t),
        }
    }

    /// Generic series, truncated with a certified bound: every unseen term
    /// satisfies `(u g_k + c h_k)/(u+ct) <= max(g_k, h_k/t) <= B(n+1)` where
    /// `B` is the kernel's rigorous sup bound on its future convolution
    /// factors (a convolution against a sub-probability measure cannot
    /// exceed the sup of the other factor), so the remainder is below
    /// `PoissonTail(n) * B(n+1)`.
    fn series_density(&self, kernel: &ConvKernel, n_cap: usize, t: f64) -> Result<f64> {
        let u = self.model.params.surplus;
        let c = self.model.params.premium_rate;
        let lambda = self.model.params.claim_rate;
        let reach = u + c * t;
        let s = lambda * reach;
        let f0 = delay_density(&self.model.family, &self.model.delay, t)?;
        if !f0.is_finite() {
            return Err(Error::Domain(format!(
                "first-arrival density is singular at t = {t}"
            )));
        }

        // Poisson weights w_n = e^{-s} s^n / n! carry the common prefactor;
        // the n = 0 term is e^{-s} f0(t).
        let mut ln_w = -s;
        let mut cum_w = ln_w.exp();
        let mut sum = f0 * cum_w;
        let mut bound = f64::INFINITY;
        let mut tail = 1.0;
        for n in 1..=n_cap {
            ln_w += s.ln() - (n as f64).ln();
            let w = ln_w.exp();
            cum_w += w;
            let g = kernel.with_delay(n as u32, t)?;
            let h = kernel.weighted(n as u32, t)?;
            sum += w * (u * g + c * h) / reach;
            tail = poisson_tail_bound(s, n, w, cum_w);
            if tail == 0.0 {
                return Ok(sum);
            }
            // The bound is monotone in n; avoid recomputing once it can
            // no longer trip the tolerance at the current tail.
            if tail * bound >= self.cfg.tol {
                bound = kernel.future_bound(n as u32 + 1, t);
            }
            if tail * bound < self.cfg.tol {
                return Ok(sum);
            }
        }
        Err(Error::NoConvergence {
            context: "ruin-time density series",
            terms: n_cap,
            residual: tail * bound,
        })
    }
}

/// Upper bound on the remaining Poisson mass after the `n`-th weight `w`.
///
/// Past the mode the weights decay geometrically with ratio `s/(n+1)`, so
/// `w r/(1-r)` bounds the tail without the catastrophic cancellation that
/// `1 - cum_w` runs into once the mass is exhausted; before the mode the
/// plain complement is accurate (no cancellation while `cum_w` is small).
fn poisson_tail_bound(s: f64, n: usize, w: f64, cum_w: f64) -> f64 {
    let r = s / (n as f64 + 1.0);
    if r < 1.0 {
        w * r / (1.0 - r)
    } else {
        (1.0 - cum_w).max(0.0)
    }
}

/// Sup over `x` of the gamma(shape, rate) density: the mode value, infinite
/// for shape < 1.
fn gamma_mode_sup(shape: f64, rate: f64) -> f64 {
    if shape < 1.0 {
        return f64::INFINITY;
    }
    if shape == 1.0 {
        return rate;
    }
    let k = shape - 1.0;
    (rate.ln() + k * (k.ln() - 1.0) - log_gamma(shape).expect("shape > 1")).exp()
}

/// How many Poisson-weighted terms can possibly matter: past
/// `s + 12 sqrt(s) + 60` the Poisson tail is below 1e-30.
fn poisson_term_cap(model: &Model, max_terms: usize, t_max: f64) -> usize {
    let s = model.params.claim_rate * (model.params.surplus + model.params.premium_rate * t_max);
    let cap = (s + 12.0 * s.sqrt() + 60.0).ceil() as usize;
    cap.min(max_terms)
}

/// Per-family providers of `(f^{*n} * f0)(t)` and `(f^{*n} * f1)(t)`.
enum ConvKernel {
    /// Ordinary gamma delay: both convolutions in closed form.
    GammaOrdinary { shape: f64, rate: f64 },
    /// Stationary delay over an integer-shape gamma family: `f0` is the
    /// equal-weight Erlang mixture `(1/n) sum_{k=1..n} e(k)`, so the
    /// convolutions stay finite Erlang sums.
    ErlangStationary { order: u32, rate: f64 },
    /// Stationary delay over a non-integer gamma family: semi-analytic
    /// quadrature of the closed-form `f^{*n}` against `f0`.
    GammaStationaryQuad { shape: f64, rate: f64, mean: f64, tol: f64 },
    /// Mixed exponential: cached Erlang mixtures per series index.
    Mixture { with_delay: Vec<ErlangMixture>, weighted: Vec<ErlangMixture>, f0_sup: f64 },
    /// Numeric fallback for tabulated families / explicit delays.
    Grid { with_delay: Vec<DensityGrid>, weighted: Vec<DensityGrid>, f0_sup: f64 },
}

impl ConvKernel {
    fn build(model: &Model, cfg: &SeriesConfig, t_max: f64, n_cap: usize) -> Result<ConvKernel> {
        match (&model.family, &model.delay) {
            (InterClaimFamily::Gamma { shape, rate }, DelaySpec::Ordinary) => {
                Ok(ConvKernel::GammaOrdinary { shape: *shape, rate: *rate })
            }
            (InterClaimFamily::Gamma { shape, rate }, DelaySpec::Stationary) => {
                if shape.fract() == 0.0 && *shape <= 256.0 {
                    Ok(ConvKernel::ErlangStationary { order: *shape as u32, rate: *rate })
                } else {
                    Ok(ConvKernel::GammaStationaryQuad {
                        shape: *shape,
                        rate: *rate,
                        mean: shape / rate,
                        tol: cfg.tol * 0.1,
                    })
                }
            }
            (InterClaimFamily::MixedExponential { p, alpha, beta }, DelaySpec::Ordinary) => {
                let mut with_delay = Vec::with_capacity(n_cap);
                let mut weighted = Vec::with_capacity(n_cap);
                for n in 1..=n_cap as u32 {
                    with_delay.push(mixed_exp_nfold(*p, *alpha, *beta, n + 1, cfg.coeff_tol)?);
                    weighted.push(mixed_exp_nfold_weighted(*p, *alpha, *beta, n, cfg.coeff_tol)?);
                }
                // The density is a decreasing mixture of exponentials.
                let f0_sup = p * alpha + (1.0 - p) * beta;
                Ok(ConvKernel::Mixture { with_delay, weighted, f0_sup })
            }
            (InterClaimFamily::MixedExponential { p, alpha, beta }, DelaySpec::Stationary) => {
                let f0 = mixed_exp_equilibrium_mixture(*p, *alpha, *beta, cfg.coeff_tol)?;
                let f1 = f0.time_weighted();
                let mut with_delay = Vec::with_capacity(n_cap);
                let mut weighted = Vec::with_capacity(n_cap);
                for n in 1..=n_cap as u32 {
                    let selfconv = mixed_exp_nfold(*p, *alpha, *beta, n, cfg.coeff_tol)?;
                    with_delay.push(selfconv.convolve(&f0)?);
                    weighted.push(selfconv.convolve(&f1)?);
                }
                let f0_sup = 1.0 / model.family.mean();
                Ok(ConvKernel::Mixture { with_delay, weighted, f0_sup })
            }
            (family, delay) => {
                // Tabulated family and/or explicit delay: grid convolutions.
                if let InterClaimFamily::Gamma { shape, .. } = family {
                    if *shape < 1.0 {
                        return Err(Error::Unsupported(
                            "grid convolution of a gamma density with shape < 1 (singular at 0) \
                             is not supported; use an ordinary delay for the closed form"
                                .into(),
                        ));
                    }
                }
                let dt = cfg.grid_dt;
                let len = (t_max / dt).ceil() as usize + 2;
                let budget = n_cap as f64 * (len as f64) * (len as f64);
                if budget > 4e9 {
                    return Err(Error::Unsupported(format!(
                        "grid convolution budget exceeded ({n_cap} convolutions of {len}-point \
                         grids); coarsen grid_dt or reduce the horizon"
                    )));
                }
                let sample = |f: &dyn Fn(f64) -> Result<f64>| -> Result<DensityGrid> {
                    let values: Result<Vec<f64>> =
                        (0..len).map(|i| f(i as f64 * dt)).collect();
                    DensityGrid::new(0.0, dt, values?)
                };
                let f_grid = sample(&|t| Ok(family.density(t)))?;
                let f0_grid = sample(&|t| delay_density(family, delay, t))?;
                let f1_grid = sample(&|t| Ok(t * delay_density(family, delay, t)?))?;
                let f0_sup = f0_grid.values().iter().cloned().fold(0.0, f64::max);
                let mut with_delay = Vec::with_capacity(n_cap);
                let mut weighted = Vec::with_capacity(n_cap);
                let mut g = f0_grid;
                let mut h = f1_grid;
                for _ in 0..n_cap {
                    g = truncate_grid(grid_convolve(&f_grid, &g)?, len)?;
                    h = truncate_grid(grid_convolve(&f_grid, &h)?, len)?;
                    with_delay.push(g.clone());
                    weighted.push(h.clone());
                }
                Ok(ConvKernel::Grid { with_delay, weighted, f0_sup })
            }
        }
    }

    /// `(f^{*n} * f0)(t)`, `n >= 1`.
    fn with_delay(&self, n: u32, t: f64) -> Result<f64> {
        match self {
            ConvKernel::GammaOrdinary { shape, rate } => gamma_nfold(*shape, *rate, n + 1, t),
            ConvKernel::ErlangStationary { order, rate } => {
                let base = *order * n;
                let mut sum = 0.0;
                for k in 1..=*order {
                    sum += crate::convolve::erlang_density(base + k, *rate, t);
                }
                Ok(sum / *order as f64)
            }
            ConvKernel::GammaStationaryQuad { shape, rate, mean, tol } => {
                stationary_gamma_conv(*shape, *rate, *mean, n, t, *tol, false)
            }
            ConvKernel::Mixture { with_delay, .. } => {
                Ok(with_delay[(n - 1) as usize].evaluate(t))
            }
            ConvKernel::Grid { with_delay, .. } => Ok(with_delay[(n - 1) as usize].value_at(t)),
        }
    }

    /// `(f^{*n} * f1)(t)` with `f1(t) = t f0(t)`, `n >= 1`.
    fn weighted(&self, n: u32, t: f64) -> Result<f64> {
        match self {
            ConvKernel::GammaOrdinary { shape, rate } => {
                Ok(gamma_nfold_weighted(*shape, *rate, n, t))
            }
            ConvKernel::ErlangStationary { order, rate } => {
                let base = *order * n;
                let mut sum = 0.0;
                for k in 1..=*order {
                    sum += k as f64 / rate
                        * crate::convolve::erlang_density(base + k + 1, *rate, t);
                }
                Ok(sum / *order as f64)
            }
            ConvKernel::GammaStationaryQuad { shape, rate, mean, tol } => {
                stationary_gamma_conv(*shape, *rate, *mean, n, t, *tol, true)
            }
            ConvKernel::Mixture { weighted, .. } => Ok(weighted[(n - 1) as usize].evaluate(t)),
            ConvKernel::Grid { weighted, .. } => Ok(weighted[(n - 1) as usize].value_at(t)),
        }
    }

    /// Rigorous sup bound on `max(g_k, h_k(t)/t)` for every `k >= next`.
    ///
    /// For a bounded first-arrival density, `g_k = f^{*k} * f0 <= sup f0`
    /// and `h_k(t) = int f^{*k}(t-v) v f0(v) dv <= t sup f0` (the time
    /// factor never exceeds `t` inside the convolution). When `f0` itself is
    /// unbounded (ordinary gamma with shape < 1), bound by the other factor:
    /// `sup f^{*(k+1)}`, which is nonincreasing in `k`.
    fn future_bound(&self, next: u32, t: f64) -> f64 {
        match self {
            ConvKernel::GammaOrdinary { shape, rate } => {
                if *shape >= 1.0 {
                    gamma_mode_sup(*shape, *rate)
                } else {
                    let g_sup = gamma_mode_sup(shape * (next as f64 + 1.0), *rate);
                    let h_sup =
                        shape / rate * gamma_mode_sup(shape * (next as f64 + 1.0) + 1.0, *rate) / t;
                    g_sup.max(h_sup)
                }
            }
            ConvKernel::ErlangStationary { order, rate } => rate / *order as f64,
            ConvKernel::GammaStationaryQuad { mean, .. } => 1.0 / mean,
            ConvKernel::Mixture { f0_sup, .. } | ConvKernel::Grid { f0_sup, .. } => *f0_sup,
        }
    }
}

fn truncate_grid(grid: DensityGrid, len: usize) -> Result<DensityGrid> {
    if grid.len() <= len {
        return Ok(grid);
    }
    DensityGrid::new(grid.start(), grid.step(), grid.values()[..len].to_vec())
}

/// Semi-analytic `(f^{*n} * f0)(t)` (or against `f1`) for a stationary
/// non-integer gamma family: adaptive quadrature of the closed-form gamma
/// convolution density against the equilibrium density. A power substitution
/// absorbs the endpoint singularity when `shape * n < 1`.
fn stationary_gamma_conv(
    shape: f64,
    rate: f64,
    mean: f64,
    n: u32,
    t: f64,
    tol: f64,
    weighted: bool,
) -> Result<f64> {
    if t <= 0.0 {
        return Ok(0.0);
    }
    let total = shape * n as f64;
    let f0 = |v: f64| -> Result<f64> {
        let base = crate::specfun::regularized_gamma_q(shape, rate * v)? / mean;
        Ok(if weighted { v * base } else { base })
    };
    let out = if total < 1.0 {
        // v near t is the singular end: substitute t - v = w^{1/total}.
        let integrand = |w: f64| -> Result<f64> {
            let x = w.powf(1.0 / total);
            let fval = (total * rate.ln() - rate * x - log_gamma(total)?).exp() / total;
            Ok(fval * f0(t - x)?)
        };
        gk::adaptive(&integrand, 0.0, t.powf(total), tol, 400)?
    } else {
        let integrand = |v: f64| -> Result<f64> { Ok(gamma_nfold(shape, rate, n, t - v)? * f0(v)?) };
        gk::adaptive(&integrand, 0.0, t, tol, 400)?
    };
    Ok(out.value)
}

/// Hypergeometric closed form for the ordinary Erlang(order) family:
///
/// ```text
/// p(t) = beta e^{-lambda(u+ct) - beta t} (beta t)^{n-1} / ((u+ct) (n-1)!)
///        [ u  0Fn(1, 1+1/n, ..., 1+(n-1)/n; Z)
///        + ct 0Fn(1+1/n, ..., 1+n/n;       Z) ],   Z = lambda (u+ct)(beta t)^n / n^n
/// ```
pub fn erlang_closed_form(
    params: &crate::model::ModelParams,
    order: u32,
    rate: f64,
    t: f64,
    tol: f64,
) -> Result<f64> {
    if order == 0 {
        return Err(Error::InvalidParameter("Erlang order must be >= 1".into()));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("closed form requires t > 0, got {t}")));
    }
    let u = params.surplus;
    let c = params.premium_rate;
    let lambda = params.claim_rate;
    let reach = u + c * t;
    let n = order as f64;
    let bt = rate * t;
    let z = lambda * reach * bt.powf(n) / n.powf(n);

    let lower: Vec<f64> = (0..order).map(|k| 1.0 + k as f64 / n).collect();
    let upper: Vec<f64> = (1..=order).map(|k| 1.0 + k as f64 / n).collect();
    let f_lower = pfq_ln(&[], &lower, z, tol)?;
    let f_upper = pfq_ln(&[], &upper, z, tol)?;

    let ln_prefix =
        rate.ln() - lambda * reach - bt + (n - 1.0) * bt.ln() - log_gamma(n)? - reach.ln();
    let mut acc = LogAccumulator::new();
    if u > 0.0 {
        acc.add(f_lower.scale_ln(u.ln()));
    }
    acc.add(f_upper.scale_ln((c * t).ln()));
    Ok(acc.total().scale_ln(ln_prefix).value())
}

/// Double-series form of the density for an ordinary gamma family with any
/// real shape `n > 0`:
///
/// ```text
/// p(t) = (beta t)^{n-1} u beta e^{-lambda(u+ct)-beta t}/(u+ct)
///            sum_m s^m (beta t)^{n m} / (m! Gamma(n(m+1)))
///      + (beta t)^n c n e^{-lambda(u+ct)-beta t}/(u+ct)
///            sum_m s^m (beta t)^{n m} / (m! Gamma(n(m+1)+1)),    s = lambda(u+ct).
/// ```
///
/// For integer shapes this is the same function as [`erlang_closed_form`]
/// computed through a different summation, which makes it the alternate
/// route for cross-checking.
pub fn gamma_ordinary_series(
    params: &crate::model::ModelParams,
    shape: f64,
    rate: f64,
    t: f64,
    cfg: &SeriesConfig,
) -> Result<f64> {
    if !(shape > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma shape must be > 0, got {shape}")));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("series form requires t > 0, got {t}")));
    }
    let u = params.surplus;
    let c = params.premium_rate;
    let lambda = params.claim_rate;
    let reach = u + c * t;
    let s = lambda * reach;
    let bt = rate * t;
    let ln_q = s.ln() + shape * bt.ln(); // per-term growth factor

    // sum_m exp(m ln_q - lnGamma(m+1) - lnGamma(shape (m+1) + shift))
    let tail_sum = |shift: f64| -> Result<SignedLog> {
        let mut acc = LogAccumulator::new();
        let mut prev_ln = f64::NEG_INFINITY;
        for m in 0..cfg.max_terms {
            let mf = m as f64;
            let ln_term =
                mf * ln_q - log_gamma(mf + 1.0)? - log_gamma(shape * (mf + 1.0) + shift)?;
            acc.add(SignedLog::from_ln(ln_term));
            // Ratio of consecutive terms; once decreasing and below one the
            // geometric tail bound applies.
            let ratio = (ln_term - prev_ln).exp();
            if m > 0 && ratio < 1.0 {
                let tail_ln = ln_term + (ratio / (1.0 - ratio)).ln();
                if tail_ln < cfg.tol.ln() + acc.magnitude_ln().max(0.0) {
                    return Ok(acc.total());
                }
            }
            prev_ln = ln_term;
        }
        Err(Error::NoConvergence {
            context: "gamma double series",
            terms: cfg.max_terms,
            residual: prev_ln.exp(),
        })
    };

    let ln_common = -s - bt - reach.ln();
    let mut acc = LogAccumulator::new();
    if u > 0.0 {
        let sum_u = tail_sum(0.0)?;
        acc.add(sum_u.scale_ln(ln_common + (shape - 1.0) * bt.ln() + (u * rate).ln()));
    }
    let sum_c = tail_sum(1.0)?;
    acc.add(sum_c.scale_ln(ln_common + shape * bt.ln() + (c * shape).ln()));
    Ok(acc.total().value())
}

/// Stationary Erlang(2) closed form:
///
/// ```text
/// p(t) = beta e^{-lambda(u+ct)-beta t} / (2(u+ct))
///        [ u 0F2(1/2, 1; W) + t(beta u + c) 0F2(1, 3/2; W) + c beta t^2 0F2(3/2, 2; W) ],
/// W = lambda (u+ct) (beta t)^2 / 4.
/// ```
pub fn stationary_erlang2_closed_form(
    params: &crate::model::ModelParams,
    rate: f64,
    t: f64,
    tol: f64,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("closed form requires t > 0, got {t}")));
    }
    let u = params.surplus;
    let c = params.premium_rate;
    let lambda = params.claim_rate;
    let reach = u + c * t;
    let bt = rate * t;
    let w = lambda * reach * bt * bt / 4.0;

    let f1 = pfq_ln(&[], &[0.5, 1.0], w, tol)?;
    let f2 = pfq_ln(&[], &[1.0, 1.5], w, tol)?;
    let f3 = pfq_ln(&[], &[1.5, 2.0], w, tol)?;

    let ln_prefix = rate.ln() - lambda * reach - bt - (2.0 * reach).ln();
    let mut acc = LogAccumulator::new();
    if u > 0.0 {
        acc.add(f1.scale_ln(u.ln()));
    }
    acc.add(f2.scale_ln((t * (rate * u + c)).ln()));
    acc.add(f3.scale_ln((c * rate * t * t).ln()));
    Ok(acc.total().scale_ln(ln_prefix).value())
}

/// Provider of plain `f^{*n}(x)` values for the conditional and crossing
/// densities (no delay involved).
pub(crate) struct NfoldKernel {
    family: InterClaimFamily,
    mixtures: Vec<ErlangMixture>,
    grids: Vec<DensityGrid>,
    n_cap: usize,
}

impl NfoldKernel {
    pub(crate) fn new(
        family: &InterClaimFamily,
        cfg: &SeriesConfig,
        x_max: f64,
        n_cap: usize,
    ) -> Result<Self> {
        let mut mixtures = Vec::new();
        let mut grids = Vec::new();
        match family {
            InterClaimFamily::Gamma { .. } => {}
            InterClaimFamily::MixedExponential { p, alpha, beta } => {
                for n in 1..=n_cap as u32 {
                    mixtures.push(mixed_exp_nfold(*p, *alpha, *beta, n, cfg.coeff_tol)?);
                }
            }
            InterClaimFamily::Tabulated { .. } => {
                let dt = cfg.grid_dt;
                let len = (x_max / dt).ceil() as usize + 2;
                let budget = n_cap as f64 * (len as f64) * (len as f64);
                if budget > 4e9 {
                    return Err(Error::Unsupported(format!(
                        "grid convolution budget exceeded ({n_cap} x {len}^2)"
                    )));
                }
                let values: Vec<f64> = (0..len).map(|i| family.density(i as f64 * dt)).collect();
                let f_grid = DensityGrid::new(0.0, dt, values)?;
                let mut g = f_grid.clone();
                grids.push(g.clone());
                for _ in 1..n_cap {
                    g = truncate_grid(grid_convolve(&f_grid, &g)?, len)?;
                    grids.push(g.clone());
                }
            }
        }
        Ok(NfoldKernel { family: family.clone(), mixtures, grids, n_cap })
    }

    pub(crate) fn value(&self, n: u32, x: f64) -> Result<f64> {
        match &self.family {
            InterClaimFamily::Gamma { shape, rate } => {
                if x == 0.0 && shape * (n as f64) < 1.0 {
                    // The series integrates across this point; the lone
                    // singular value is irrelevant on a null set.
                    return Ok(0.0);
                }
                gamma_nfold(*shape, *rate, n, x)
            }
            InterClaimFamily::MixedExponential { .. } => {
                Ok(self.mixtures[(n - 1) as usize].evaluate(x))
            }
            InterClaimFamily::Tabulated { .. } => Ok(self.grids[(n - 1) as usize].value_at(x)),
        }
    }

    /// Rigorous sup bound on `f^{*k}` for all `k >= next`; the sup of a
    /// self-convolution sequence is nonincreasing.
    fn future_bound(&self, next: u32) -> f64 {
        match &self.family {
            InterClaimFamily::Gamma { shape, rate } => {
                if *shape >= 1.0 {
                    gamma_mode_sup(*shape, *rate)
                } else {
                    gamma_mode_sup(shape * next as f64, *rate)
                }
            }
            InterClaimFamily::MixedExponential { p, alpha, beta } => {
                p * alpha + (1.0 - p) * beta
            }
            InterClaimFamily::Tabulated { .. } => {
                // Grid sup is exact up to discretization; pad it.
                let idx = ((next - 1) as usize).min(self.grids.len() - 1);
                2.0 * self.grids[idx].values().iter().cloned().fold(0.0, f64::max)
            }
        }
    }

    pub(crate) fn n_cap(&self) -> usize {
        self.n_cap
    }
}

/// Poisson-weighted n-fold series shared by [`conditional_density`] and
/// [`kendall_crossing_density`]: `e^{-s} sum_{n>=1} s^n/n! f^{*n}(x)`.
fn poisson_nfold_series(kernel: &NfoldKernel, s: f64, x: f64, tol: f64) -> Result<f64> {
    let mut ln_w = -s;
    let mut cum_w = ln_w.exp();
    let mut sum = 0.0;
    let mut bound = f64::INFINITY;
    let mut tail = 1.0;
    for n in 1..=kernel.n_cap() {
        ln_w += s.ln() - (n as f64).ln();
        let w = ln_w.exp();
        cum_w += w;
        sum += w * kernel.value(n as u32, x)?;
        tail = poisson_tail_bound(s, n, w, cum_w);
        if tail == 0.0 {
            return Ok(sum);
        }
        if tail * bound >= tol {
            bound = kernel.future_bound(n as u32 + 1);
        }
        if tail * bound < tol {
            return Ok(sum);
        }
    }
    Err(Error::NoConvergence {
        context: "conditional density series",
        terms: kernel.n_cap(),
        residual: tail,
    })
}

/// Conditional ruin-time density `p(t | T_0 = v)` for `t > v > 0`:
///
/// ```text
/// p(t|v) = (u + cv)/(u + ct) e^{-lambda(u+ct)} sum_{n>=1} (lambda(u+ct))^n/n! f^{*n}(t - v)
/// ```
///
/// The ruin-at-first-claim contribution is an atom at `t = v` and is *not*
/// part of this density; it enters the unconditional formula through the
/// `e^{-lambda(u+ct)} f0(t)` term instead.
pub fn conditional_density(
    params: &crate::model::ModelParams,
    family: &InterClaimFamily,
    v: f64,
    t: f64,
    cfg: &SeriesConfig,
) -> Result<f64> {
    ConditionalEvaluator::new(params, family, cfg, t)?.density(v, t)
}

/// Reusable evaluator of `p(t | T_0 = v)` for `0 < v < t <= t_max`; the
/// n-fold convolution tables are built once, so quadrature over `v` (as in
/// the mixing-identity reconstruction) stays cheap.
pub struct ConditionalEvaluator {
    params: crate::model::ModelParams,
    kernel: NfoldKernel,
    cfg: SeriesConfig,
    t_max: f64,
}

impl ConditionalEvaluator {
    pub fn new(
        params: &crate::model::ModelParams,
        family: &InterClaimFamily,
        cfg: &SeriesConfig,
        t_max: f64,
    ) -> Result<Self> {
        params.check()?;
        family.validate()?;
        cfg.validate()?;
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::Domain(format!("t_max must be positive and finite, got {t_max}")));
        }
        let s = params.claim_rate * (params.surplus + params.premium_rate * t_max);
        let n_cap = ((s + 12.0 * s.sqrt() + 60.0).ceil() as usize).min(cfg.max_terms);
        let kernel = NfoldKernel::new(family, cfg, t_max, n_cap)?;
        Ok(ConditionalEvaluator { params: *params, kernel, cfg: *cfg, t_max })
    }

    pub fn density(&self, v: f64, t: f64) -> Result<f64> {
        if !(v > 0.0) {
            return Err(Error::Domain(format!(
                "first inter-claim time must be positive, got {v}"
            )));
        }
        if !(t > v) {
            return Err(Error::Domain(format!(
                "conditional density is defined for t > v; got t = {t}, v = {v}"
            )));
        }
        if t > self.t_max * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "t = {t} exceeds the evaluator horizon {}",
                self.t_max
            )));
        }
        let s = self.params.claim_rate * (self.params.surplus + self.params.premium_rate * t);
        let series = poisson_nfold_series(&self.kernel, s, t - v, self.cfg.tol)?;
        let prefix = (self.params.surplus + self.params.premium_rate * v)
            / (self.params.surplus + self.params.premium_rate * t);
        Ok(prefix * series)
    }
}

/// A first-passage query for the time-space swapped process: given the first
/// inter-claim time `v`, the crossing "time" variable is `sigma = u + c tau`.
#[derive(Clone, Debug)]
pub struct KendallQuery {
    pub params: crate::model::ModelParams,
    pub family: InterClaimFamily,
    /// First inter-claim time (> 0).
    pub v: f64,
    /// Transformed time, must exceed `u + c v`.
    pub s: f64,
}

/// Density of the crossing time `sigma` by Kendall's identity:
///
/// ```text
/// p_sigma(s) = (v + u/c)/s e^{-lambda s} sum_{n>=1} (lambda s)^n/n! f^{*n}((s-u)/c - v)
/// ```
///
/// satisfying `p(t|v) = c p_sigma(u + c t)` exactly.
pub fn kendall_crossing_density(query: &KendallQuery, cfg: &SeriesConfig) -> Result<f64> {
    query.params.check()?;
    query.family.validate()?;
    let u = query.params.surplus;
    let c = query.params.premium_rate;
    if !(query.v > 0.0) {
        return Err(Error::Domain(format!(
            "first inter-claim time must be positive, got {}",
            query.v
        )));
    }
    if !(query.s > u + c * query.v) {
        return Err(Error::Domain(format!(
            "crossing density is supported on s > u + c v = {}, got {}",
            u + c * query.v,
            query.s
        )));
    }
    let x = (query.s - u) / c - query.v;
    let sl = query.params.claim_rate * query.s;
    let n_cap = ((sl + 12.0 * sl.sqrt() + 60.0).ceil() as usize).min(cfg.max_terms);
    let kernel = NfoldKernel::new(&query.family, cfg, x, n_cap)?;
    let series = poisson_nfold_series(&kernel, sl, x, cfg.tol)?;
    Ok((query.v + u / c) / query.s * series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate, ModelParams};

    fn params(u: f64, c: f64, lambda: f64) -> ModelParams {
        ModelParams::new(u, c, lambda).unwrap()
    }

    fn gamma(shape: f64, rate: f64) -> InterClaimFamily {
        InterClaimFamily::Gamma { shape, rate }
    }

    fn case_b() -> InterClaimFamily {
        InterClaimFamily::MixedExponential { p: 1.0 / 3.0, alpha: 0.5, beta: 2.0 }
    }

    fn query(u: f64, c: f64, lambda: f64, fam: InterClaimFamily, delay: DelaySpec) -> DensityQuery {
        let model = validate(params(u, c, lambda), fam, delay).unwrap();
        DensityQuery::new(model, SeriesConfig::default(), EvalPath::Auto).unwrap()
    }

    fn query_path(
        u: f64,
        c: f64,
        lambda: f64,
        fam: InterClaimFamily,
        delay: DelaySpec,
        path: EvalPath,
    ) -> DensityQuery {
        let model = validate(params(u, c, lambda), fam, delay).unwrap();
        DensityQuery::new(model, SeriesConfig::default(), path).unwrap()
    }

    #[test]
    fn tiny_claim_rate_degenerates_to_first_arrival_density() {
        // With lambda -> 0 the first claim ruins almost surely, so the ruin
        // time is T_0 itself.
        let q = query(5.0, 1.1, 1e-12, gamma(2.0, 2.0), DelaySpec::Ordinary);
        let got = density_at(&q, 1.0).unwrap();
        let want = 4.0 * (-2.0f64).exp();
        assert!(
            ((got - want) / want).abs() < 1e-9,
            "lambda->0 limit: got {got}, want f(1) = {want}"
        );
    }

    #[test]
    fn generic_series_matches_erlang_closed_form() {
        let model = validate(params(10.0, 1.1, 1.0), gamma(2.0, 2.0), DelaySpec::Ordinary).unwrap();
        let series =
            DensityQuery::new(model.clone(), SeriesConfig::default(), EvalPath::GenericSeries)
                .unwrap();
        let closed =
            DensityQuery::new(model, SeriesConfig::default(), EvalPath::ClosedForm).unwrap();
        for &t in &[0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0] {
            let a = density_at(&series, t).unwrap();
            let b = density_at(&closed, t).unwrap();
            assert!(
                ((a - b) / b.max(1e-300)).abs() < 1e-8,
                "series vs closed at t = {t}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn closed_form_rejected_when_unavailable() {
        let model =
            validate(params(1.0, 1.1, 1.0), gamma(1.5, 1.0), DelaySpec::Ordinary).unwrap();
        let err = DensityQuery::new(model, SeriesConfig::default(), EvalPath::ClosedForm)
            .unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn erlang_closed_form_u_zero_kills_surplus_term() {
        // At u = 0 only the c t branch contributes:
        // p = beta e^{-s - bt} (bt)^{n-1} / (Gamma(n) (u+ct)) * ct * 0Fn(upper; Z).
        let p = params(0.0, 1.1, 1.0);
        let t = 0.7;
        let got = erlang_closed_form(&p, 2, 2.0, t, 1e-13).unwrap();
        let bt: f64 = 2.0 * t;
        let reach = 1.1 * t;
        let z = reach * bt * bt / 4.0;
        let f = crate::specfun::pfq(&[], &[1.5, 2.0], z, 1e-13).unwrap();
        let want = 2.0 * (-reach - bt).exp() * bt * (1.1 * t) * f / reach;
        assert!((got - want).abs() < 1e-12 * want, "{got} vs {want}");
    }

    #[test]
    fn erlang1_closed_form_matches_generic_series() {
        // Classical Poisson/exponential model.
        let model = validate(params(1.0, 2.0, 1.0), gamma(1.0, 1.0), DelaySpec::Ordinary).unwrap();
        let series = DensityQuery::new(model, SeriesConfig::default(), EvalPath::GenericSeries)
            .unwrap();
        for &t in &[0.3, 1.0, 3.0, 8.0] {
            let a = erlang_closed_form(&params(1.0, 2.0, 1.0), 1, 1.0, t, 1e-13).unwrap();
            let b = density_at(&series, t).unwrap();
            assert!(((a - b) / b).abs() < 1e-9, "n=1 closed vs series at {t}: {a} vs {b}");
        }
    }

    #[test]
    fn double_series_matches_closed_form_for_integer_shape() {
        let p = params(10.0, 1.1, 1.0);
        let cfg = SeriesConfig::default();
        for k in 1..=20 {
            let t = k as f64 * 0.5;
            let a = gamma_ordinary_series(&p, 2.0, 2.0, t, &cfg).unwrap();
            let b = erlang_closed_form(&p, 2, 2.0, t, 1e-13).unwrap();
            assert!(
                ((a - b) / b.max(1e-300)).abs() < 1e-10,
                "double series vs 0Fn at t = {t}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn double_series_small_t_prefactor_behavior() {
        // (beta t)^{n-1} prefactor: for shape > 1 the density vanishes at 0+.
        let p = params(2.0, 1.5, 1.0);
        let cfg = SeriesConfig::default();
        let v = gamma_ordinary_series(&p, 2.0, 1.0, 1e-9, &cfg).unwrap();
        assert!(v < 1e-6, "density must vanish as t -> 0 for shape > 1, got {v}");
    }

    #[test]
    fn stationary_closed_form_small_t_limit() {
        // As t -> 0+ with u > 0 all 0F2 factors go to 1 and p -> (beta/2)e^{-lambda u}.
        let p = params(3.0, 1.1, 1.0);
        let got = stationary_erlang2_closed_form(&p, 2.0, 1e-10, 1e-13).unwrap();
        let want = (-3.0f64).exp();
        assert!(((got - want) / want).abs() < 1e-6, "t->0 limit: {got} vs {want}");
    }

    #[test]
    fn stationary_closed_form_matches_generic_series() {
        let model =
            validate(params(10.0, 1.1, 1.0), gamma(2.0, 2.0), DelaySpec::Stationary).unwrap();
        let series = DensityQuery::new(model, SeriesConfig::default(), EvalPath::GenericSeries)
            .unwrap();
        for &t in &[0.5, 1.0, 3.0, 7.0, 15.0] {
            let a = stationary_erlang2_closed_form(&params(10.0, 1.1, 1.0), 2.0, t, 1e-13).unwrap();
            let b = density_at(&series, t).unwrap();
            assert!(
                ((a - b) / b.max(1e-300)).abs() < 1e-8,
                "stationary closed vs series at t = {t}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn mixedexp_auto_path_equals_generic() {
        // For this family the mixture series is the closed form.
        let a = query(0.0, 1.1, 1.0, case_b(), DelaySpec::Ordinary);
        let b = query_path(0.0, 1.1, 1.0, case_b(), DelaySpec::Ordinary, EvalPath::GenericSeries);
        for &t in &[0.2, 1.0, 4.0] {
            let x = density_at(&a, t).unwrap();
            let y = density_at(&b, t).unwrap();
            assert_eq!(x, y, "mixed exponential auto and generic must coincide");
        }
    }

    #[test]
    fn density_rejects_t_zero() {
        let q = query(1.0, 1.1, 1.0, gamma(2.0, 2.0), DelaySpec::Ordinary);
        assert!(matches!(density_at(&q, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn density_nonnegative_across_families() {
        let queries = vec![
            query(0.0, 1.1, 1.0, gamma(2.0, 2.0), DelaySpec::Ordinary),
            query(10.0, 1.1, 1.0, gamma(2.0, 2.0), DelaySpec::Stationary),
            query(2.0, 1.5, 1.0, gamma(0.5, 1.0), DelaySpec::Ordinary),
            query(1.0, 1.1, 1.0, case_b(), DelaySpec::Ordinary),
            query(5.0, 1.1, 1.0, case_b(), DelaySpec::Stationary),
        ];
        for q in &queries {
            let eval = Evaluator::new(q, 30.0).unwrap();
            let mut t = 0.05;
            while t <= 30.0 {
                let v = eval.density(t).unwrap();
                assert!(v >= 0.0 && v.is_finite(), "density {v} at t = {t} for {:?}", q.model);
                t += 0.37;
            }
        }
    }

    #[test]
    fn conditional_density_vanishes_toward_v() {
        let p = params(1.0, 1.0, 1.0);
        let cfg = SeriesConfig::default();
        // Erlang(2) convolutions vanish at 0, so p(t|v) -> 0 as t -> v+.
        let v = 0.5;
        let mut prev = f64::INFINITY;
        for &eps in &[0.5, 0.2, 0.05, 0.01, 0.001] {
            let d = conditional_density(&p, &gamma(2.0, 2.0), v, v + eps, &cfg).unwrap();
            assert!(d >= 0.0 && d < prev, "should decrease toward the support edge");
            prev = d;
        }
        assert!(prev < 1e-2, "near-edge value should be small, got {prev}");
    }

    #[test]
    fn conditional_density_rejects_bad_support() {
        let p = params(1.0, 1.0, 1.0);
        let cfg = SeriesConfig::default();
        let err = conditional_density(&p, &gamma(2.0, 2.0), 0.5, 0.5, &cfg).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        let err = conditional_density(&p, &gamma(2.0, 2.0), 0.0, 1.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn kendall_density_is_exact_reparametrization_of_conditional() {
        let pars = params(1.0, 1.0, 1.0);
        let cfg = SeriesConfig::default();
        let fam = gamma(1.0, 2.0); // Exp(2) inter-claims
        let v = 0.5;
        let mut state = 0xdeadbeefcafef00du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let t = v + 1e-6 + 10.0 * next();
            let sigma = pars.surplus + pars.premium_rate * t;
            let q = KendallQuery { params: pars, family: fam.clone(), v, s: sigma };
            let lhs = conditional_density(&pars, &fam, v, t, &cfg).unwrap();
            let rhs = pars.premium_rate * kendall_crossing_density(&q, &cfg).unwrap();
            assert!(
                (lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300),
                "c p_sigma(u+ct) vs p(t|v) at t = {t}: {rhs} vs {lhs}"
            );
        }
    }

    #[test]
    fn kendall_density_support_error() {
        let pars = params(1.0, 1.0, 1.0);
        let q = KendallQuery { params: pars, family: gamma(1.0, 2.0), v: 0.5, s: 1.5 };
        let err = kendall_crossing_density(&q, &SeriesConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "s = u + cv is outside the support");
    }

    #[test]
    fn mixing_identity_reconstructs_unconditional_density() {
        // int_0^t p(t|v) f0(v) dv + e^{-lambda(u+ct)} f0(t) = p(t)
        let cfg = SeriesConfig::default();
        let cases: Vec<(ModelParams, InterClaimFamily)> = vec![
            (params(1.0, 1.1, 1.0), gamma(2.0, 2.0)),
            (params(0.5, 1.3, 0.8), gamma(1.0, 1.5)),
            (params(2.0, 1.1, 1.0), case_b()),
        ];
        for (pars, fam) in cases {
            let t = 3.0;
            let integrand = |v: f64| -> Result<f64> {
                Ok(conditional_density(&pars, &fam, v, t, &cfg)?
                    * delay_density(&fam, &DelaySpec::Ordinary, v)?)
            };
            let integral = gk::adaptive(&integrand, 1e-12, t, 1e-11, 800).unwrap().value;
            let atom = (-pars.claim_rate * (pars.surplus + pars.premium_rate * t)).exp()
                * delay_density(&fam, &DelaySpec::Ordinary, t).unwrap();
            let q = DensityQuery::new(
                validate(pars, fam.clone(), DelaySpec::Ordinary).unwrap(),
                cfg,
                EvalPath::GenericSeries,
            )
            .unwrap();
            let direct = density_at(&q, t).unwrap();
            assert!(
                (integral + atom - direct).abs() < 1e-8,
                "mixing identity for {fam:?}: {} vs {direct}",
                integral + atom
            );
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]
        #[test]
        fn density_is_nonnegative_and_finite(
            u in 0.0f64..15.0,
            c in 0.6f64..2.5,
            lambda in 0.2f64..1.5,
            shape in 0.6f64..4.0,
            rate in 0.5f64..3.0,
            t in 0.05f64..25.0,
        ) {
            let model = validate(
                ModelParams::new(u, c, lambda).unwrap(),
                InterClaimFamily::Gamma { shape, rate },
                DelaySpec::Ordinary,
            ).unwrap();
            let q = DensityQuery::new(model, SeriesConfig::default(), EvalPath::Auto).unwrap();
            let v = density_at(&q, t).unwrap();
            proptest::prop_assert!(v.is_finite() && v >= 0.0, "density {} at t = {}", v, t);
        }
    }

    #[test]
    fn stationary_noninteger_gamma_kernel_matches_grid_route() {
        // Semi-analytic quadrature kernel vs a brute grid evaluator.
        let model =
            validate(params(1.0, 1.2, 0.9), gamma(1.5, 1.0), DelaySpec::Stationary).unwrap();
        let q = DensityQuery::new(model, SeriesConfig::default(), EvalPath::Auto).unwrap();
        let eval = Evaluator::new(&q, 4.0).unwrap();

        // Grid route: sample f and f0 and convolve numerically.
        let dt = 5e-4;
        let len = (4.0 / dt) as usize + 2;
        let fam = gamma(1.5, 1.0);
        let f_values: Vec<f64> = (0..len).map(|i| fam.density(i as f64 * dt)).collect();
        let f = DensityGrid::new(0.0, dt, f_values).unwrap();
        let f0_values: Vec<f64> = (0..len)
            .map(|i| delay_density(&fam, &DelaySpec::Stationary, i as f64 * dt).unwrap())
            .collect();
        let f0 = DensityGrid::new(0.0, dt, f0_values).unwrap();
        let f1_values: Vec<f64> = (0..len)
            .map(|i| {
                let t = i as f64 * dt;
                t * delay_density(&fam, &DelaySpec::Stationary, t).unwrap()
            })
            .collect();
        let f1 = DensityGrid::new(0.0, dt, f1_values).unwrap();

        let pars = params(1.0, 1.2, 0.9);
        let t = 2.0;
        let s = pars.claim_rate * (pars.surplus + pars.premium_rate * t);
        let mut g = f0.clone();
        let mut h = f1.clone();
        let mut ln_w = -s;
        let mut brute = (-s).exp() * delay_density(&fam, &DelaySpec::Stationary, t).unwrap();
        for n in 1..=30 {
            g = grid_convolve(&f, &g).unwrap();
            h = grid_convolve(&f, &h).unwrap();
            ln_w += s.ln() - (n as f64).ln();
            brute += ln_w.exp()
                * (pars.surplus * g.value_at(t) + pars.premium_rate * h.value_at(t))
                / (pars.surplus + pars.premium_rate * t);
        }
        let got = eval.density(t).unwrap();
        assert!(
            (got - brute).abs() < 5e-5,
            "semi-analytic stationary kernel {got} vs grid reference {brute}"
        );
    }
}
