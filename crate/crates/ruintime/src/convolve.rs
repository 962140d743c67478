//! n-fold convolutions of the inter-claim density, the mixed convolutions
//! with the first-arrival density, and the Erlang-mixture algebra behind the
//! mixed exponential closed forms.
//!
//! Naming: for a family density `f` with first-arrival density `f0`, the
//! density series needs `f^{*n} * f0` and the *weighted* companion
//! `f^{*n} * f1` where `f1(t) = t f0(t)` carries an extra time factor.
//!
//! Gamma families convolve in closed form: `f^{*m}` is gamma with shape
//! `n m`, and for the ordinary delay
//! `f^{*m} * f1 = (n/beta) * gamma(n(m+1) + 1, beta)`.
//!
//! A mixed exponential `p alpha e^{-alpha t} + q beta e^{-beta t}` (with
//! `alpha < beta`) has `m`-fold convolutions expressible as infinite Erlang
//! mixtures with the *same* rate `beta`:
//!
//! ```text
//! f^{*m}(t)      = sum_j  w_{m,j}  e(m + j,     beta; t)
//! (f^{*m}*f1)(t) = sum_i  v_{i,m}  e(m + i + 2, beta; t)
//! ```
//!
//! where `e(k, beta; t)` is the Erlang(k) density. The weight sequences come
//! from expanding `e^{-alpha t}` around rate `beta`; each weight is a short
//! binomial sum evaluated in log space. The weighted coefficients `v_{i,m}`
//! merge two confluent-hypergeometric series (one per mixture branch), so the
//! bracket is `[alpha p (r+2)_i + beta q (r)_i] / i!`; the first-order check
//! is that the mixture must integrate to the inter-claim mean.
//!
//! `grid_convolve` is the universal numeric fallback (and test oracle) for
//! tabulated densities.

use crate::error::{Error, Result};
use crate::model::DensityGrid;
use crate::specfun::{kummer_1f1_ln, LogAccumulator, SignedLog};

/// Erlang(m) density `beta^m t^{m-1} e^{-beta t} / (m-1)!`, in log space.
pub fn erlang_density(order: u32, rate: f64, t: f64) -> f64 {
    debug_assert!(order >= 1 && rate > 0.0);
    if t < 0.0 {
        return 0.0;
    }
    if t == 0.0 {
        return if order == 1 { rate } else { 0.0 };
    }
    let m = order as f64;
    let ln = m * rate.ln() + (m - 1.0) * t.ln() - rate * t - ln_factorial(order - 1);
    ln.exp()
}

/// ln((k)!) for integer k, by table-free Stirling-range log-gamma.
fn ln_factorial(k: u32) -> f64 {
    crate::specfun::log_gamma(k as f64 + 1.0).expect("positive argument")
}

/// `m`-fold self-convolution of a gamma(shape, rate) density: a gamma
/// density with shape `shape * m`.
///
/// Errors with a singularity when evaluated at `t = 0` with `shape * m < 1`.
pub fn gamma_nfold(shape: f64, rate: f64, m: u32, t: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::Domain("gamma_nfold requires m >= 1".into()));
    }
    let total = shape * m as f64;
    if t < 0.0 {
        return Ok(0.0);
    }
    if t == 0.0 {
        if total < 1.0 {
            return Err(Error::Domain(format!(
                "gamma convolution density is singular at t = 0 for shape * m = {total} < 1"
            )));
        }
        return Ok(if total == 1.0 { rate } else { 0.0 });
    }
    let ln = total * rate.ln() + (total - 1.0) * t.ln()
        - rate * t
        - crate::specfun::log_gamma(total)?;
    Ok(ln.exp())
}

/// `(f^{*m} * f1)(t)` for an ordinary gamma delay, where `f1(t) = t f(t)`:
/// equals `(shape/rate) * gamma(shape (m+1) + 1, rate)` density. `m = 0`
/// reduces to `t f(t)` exactly.
pub fn gamma_nfold_weighted(shape: f64, rate: f64, m: u32, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let total = shape * (m as f64 + 1.0) + 1.0;
    let ln = (shape / rate).ln() + total * rate.ln() + (total - 1.0) * t.ln()
        - rate * t
        - crate::specfun::log_gamma(total).expect("positive argument");
    ln.exp()
}

/// `(f^{*m} * f0)(t)` for the Erlang(2) family under the stationary delay:
/// `f0 = (e(1) + e(2))/2`, so the result is `(e(2m+1) + e(2m+2))/2`.
pub fn erlang2_stationary_nfold(rate: f64, m: u32, t: f64) -> f64 {
    0.5 * (erlang_density(2 * m + 1, rate, t) + erlang_density(2 * m + 2, rate, t))
}

/// Weighted companion of [`erlang2_stationary_nfold`]:
/// `(f^{*m} * f1)(t) = e(2m+2)/(2 beta) + e(2m+3)/beta`.
pub fn erlang2_stationary_nfold_weighted(rate: f64, m: u32, t: f64) -> f64 {
    erlang_density(2 * m + 2, rate, t) / (2.0 * rate) + erlang_density(2 * m + 3, rate, t) / rate
}

/// A nonnegative combination of consecutive-order Erlang densities with a
/// common rate: `sum_j weights[j] * e(offset + j, rate; t)`.
#[derive(Clone, Debug)]
pub struct ErlangMixture {
    rate: f64,
    offset: u32,
    weights: Vec<f64>,
}

impl ErlangMixture {
    pub fn new(rate: f64, offset: u32, weights: Vec<f64>) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::InvalidParameter(format!("mixture rate must be > 0, got {rate}")));
        }
        if offset == 0 {
            return Err(Error::InvalidParameter("lowest Erlang order must be >= 1".into()));
        }
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter(
                "mixture weights must be a nonempty, nonnegative, finite sequence".into(),
            ));
        }
        Ok(ErlangMixture { rate, offset, weights })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn offset(&self) -> u32 {
        self.offset
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Sum of the weights: 1 for a probability density, the inter-claim mean
    /// for the weighted (`f1`) mixtures.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Evaluate the mixture at `t`.
    ///
    /// The Erlang values are generated by the order recurrence
    /// `e(k+1) = e(k) * rate * t / k` with an explicit scale exponent, so the
    /// first term underflowing (large offset, large `rate * t`) cannot wipe
    /// out interior terms near the Erlang peak `k ~ rate * t`.
    pub fn evaluate(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        if t == 0.0 {
            return if self.offset == 1 { self.weights[0] * self.rate } else { 0.0 };
        }
        let m = self.offset as f64;
        let mut scale_ln =
            m * self.rate.ln() + (m - 1.0) * t.ln() - self.rate * t - ln_factorial(self.offset - 1);
        let mut e = 1.0f64; // e(offset + j) = e * exp(scale_ln)
        let mut sum = 0.0f64; // in the same scale
        let rt = self.rate * t;
        for (j, w) in self.weights.iter().enumerate() {
            sum += w * e;
            e *= rt / (self.offset as f64 + j as f64);
            if e > 1e120 {
                sum *= 1e-120;
                e *= 1e-120;
                scale_ln += 120.0 * std::f64::consts::LN_10;
            } else if e < 1e-120 && sum < 1e-120 {
                sum *= 1e120;
                e *= 1e120;
                scale_ln -= 120.0 * std::f64::consts::LN_10;
            }
        }
        sum * scale_ln.exp()
    }

    /// Convolution with another mixture over the same rate: offsets add and
    /// the weight sequences convolve.
    pub fn convolve(&self, other: &ErlangMixture) -> Result<ErlangMixture> {
        if (self.rate - other.rate).abs() > 1e-12 * self.rate.abs() {
            return Err(Error::GridMismatch(format!(
                "mixture rates differ: {} vs {}",
                self.rate, other.rate
            )));
        }
        let mut weights = vec![0.0; self.weights.len() + other.weights.len() - 1];
        for (i, a) in self.weights.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (j, b) in other.weights.iter().enumerate() {
                weights[i + j] += a * b;
            }
        }
        ErlangMixture::new(self.rate, self.offset + other.offset, weights)
    }

    /// Multiply the represented function by `t`:
    /// `t e(k, beta; t) = (k / beta) e(k+1, beta; t)`.
    pub fn time_weighted(&self) -> ErlangMixture {
        let weights = self
            .weights
            .iter()
            .enumerate()
            .map(|(j, w)| w * (self.offset as f64 + j as f64) / self.rate)
            .collect();
        ErlangMixture { rate: self.rate, offset: self.offset + 1, weights }
    }
}

/// Hard cap on mixture coefficient counts.
const MAX_MIXTURE_TERMS: usize = 1_000_000;

struct MixedExp {
    p: f64,
    q: f64,
    alpha: f64,
    beta: f64,
}

impl MixedExp {
    fn new(p: f64, alpha: f64, beta: f64) -> Result<Self> {
        crate::model::InterClaimFamily::MixedExponential { p, alpha, beta }.validate()?;
        Ok(MixedExp { p, q: 1.0 - p, alpha, beta })
    }

    fn mean(&self) -> f64 {
        self.p / self.alpha + self.q / self.beta
    }
}

/// Shared driver for mixture weight sequences
/// `w_j = exp(base_ln + j ln(decay)) * inner(j)`, where `inner` is a
/// binomial sum whose term ratio in `j` is at most `(j + poly_degree)/(j+1)`.
///
/// Emission stops once the accumulated mass reaches `target` up to
/// `coeff_tol`, or — because the weights themselves carry ~1e-15 relative
/// error, which caps how closely the running total can approach the target —
/// once the rigorous geometric tail bound
/// `w_j * r/(1-r)` with `r = decay (j + poly_degree)/(j + 1)` falls below
/// `coeff_tol * target`. In both cases the current weight must also have
/// decayed relative to the largest one seen.
fn collect_weights(
    base_ln: f64,
    decay: f64,
    poly_degree: usize,
    target: f64,
    coeff_tol: f64,
    mut inner_ln: impl FnMut(usize) -> f64,
) -> Result<Vec<f64>> {
    let decay_ln = decay.ln();
    let mut weights = Vec::new();
    let mut cum = 0.0f64;
    let mut comp = 0.0f64; // Kahan compensation
    let mut w_max = 0.0f64;
    for j in 0..MAX_MIXTURE_TERMS {
        let w = (base_ln + j as f64 * decay_ln + inner_ln(j)).exp();
        weights.push(w);
        let y = w - comp;
        let t = cum + y;
        comp = (t - cum) - y;
        cum = t;
        w_max = w_max.max(w);
        if w < coeff_tol * w_max {
            if cum >= target * (1.0 - coeff_tol) {
                return Ok(weights);
            }
            let ratio = decay * (j + poly_degree) as f64 / (j + 1) as f64;
            if ratio < 1.0 && w * ratio / (1.0 - ratio) < coeff_tol * target {
                return Ok(weights);
            }
        }
    }
    Err(Error::NoConvergence {
        context: "Erlang mixture coefficients",
        terms: MAX_MIXTURE_TERMS,
        residual: target - cum,
    })
}

/// Log-gamma table over integers, grown on demand: `table[k] = ln((k-1)!)`,
/// so `poch_ln(r, j) = table[r + j] - table[r]` for integer `r >= 1`.
struct LnGammaTable {
    table: Vec<f64>,
}

impl LnGammaTable {
    fn new() -> Self {
        LnGammaTable { table: vec![f64::INFINITY, 0.0, 0.0] } // lnGamma(0) unused
    }

    fn ln_gamma(&mut self, k: usize) -> f64 {
        while self.table.len() <= k {
            let n = self.table.len();
            let prev = self.table[n - 1];
            self.table.push(prev + ((n - 1) as f64).ln());
        }
        self.table[k]
    }

    /// ln (r)_j for integer r >= 0 (zero contributes only at j = 0).
    fn poch_ln(&mut self, r: usize, j: usize) -> f64 {
        if r == 0 {
            return if j == 0 { 0.0 } else { f64::NEG_INFINITY };
        }
        self.ln_gamma(r + j) - self.ln_gamma(r)
    }
}

/// Erlang-mixture representation of the `m`-fold self-convolution `f^{*m}`
/// of a mixed exponential density (`m >= 1`). The mixture has offset `m`
/// and its weights sum to 1.
pub fn mixed_exp_nfold(
    p: f64,
    alpha: f64,
    beta: f64,
    m: u32,
    coeff_tol: f64,
) -> Result<ErlangMixture> {
    if m == 0 {
        return Err(Error::Domain("self-convolution order must be >= 1".into()));
    }
    let fam = MixedExp::new(p, alpha, beta)?;
    let mu = m as usize;
    let x_ln = (fam.alpha * fam.p / (fam.beta * fam.q)).ln();
    let base_ln = mu as f64 * fam.q.ln();
    let decay = 1.0 - fam.alpha / fam.beta;
    let mut lg = LnGammaTable::new();
    let binom_ln: Vec<f64> = (0..=mu)
        .map(|r| lg.ln_gamma(mu + 1) - lg.ln_gamma(r + 1) - lg.ln_gamma(mu - r + 1))
        .collect();
    let weights = collect_weights(base_ln, decay, mu.max(1), 1.0, coeff_tol, |j| {
        let mut acc = LogAccumulator::new();
        for (r, b_ln) in binom_ln.iter().enumerate() {
            let poch = lg.poch_ln(r, j);
            if poch == f64::NEG_INFINITY {
                continue;
            }
            acc.add(SignedLog::from_ln(b_ln + poch - lg.ln_gamma(j + 1) + r as f64 * x_ln));
        }
        acc.magnitude_ln()
    })?;
    ErlangMixture::new(beta, m, weights)
}

/// Erlang-mixture representation of `(f^{*m} * f1)(t)` for an ordinary mixed
/// exponential delay, `f1(t) = t f(t)`, valid for `m >= 0`. The mixture has
/// offset `m + 2` and its weights sum to the inter-claim mean.
pub fn mixed_exp_nfold_weighted(
    p: f64,
    alpha: f64,
    beta: f64,
    m: u32,
    coeff_tol: f64,
) -> Result<ErlangMixture> {
    let fam = MixedExp::new(p, alpha, beta)?;
    let mu = m as usize;
    let x_ln = (fam.alpha * fam.p / (fam.beta * fam.q)).ln();
    let ap_ln = (fam.alpha * fam.p).ln();
    let bq_ln = (fam.beta * fam.q).ln();
    let base_ln = mu as f64 * fam.q.ln() - 2.0 * fam.beta.ln();
    let decay = 1.0 - fam.alpha / fam.beta;
    let mut lg = LnGammaTable::new();
    let binom_ln: Vec<f64> = (0..=mu)
        .map(|r| lg.ln_gamma(mu + 1) - lg.ln_gamma(r + 1) - lg.ln_gamma(mu - r + 1))
        .collect();
    let weights = collect_weights(base_ln, decay, mu + 2, fam.mean(), coeff_tol, |i| {
        let mut acc = LogAccumulator::new();
        for (r, b_ln) in binom_ln.iter().enumerate() {
            let common = b_ln + r as f64 * x_ln - lg.ln_gamma(i + 1);
            // alpha p (r+2)_i branch
            acc.add(SignedLog::from_ln(common + ap_ln + lg.poch_ln(r + 2, i)));
            // beta q (r)_i branch
            let poch = lg.poch_ln(r, i);
            if poch != f64::NEG_INFINITY {
                acc.add(SignedLog::from_ln(common + bq_ln + poch));
            }
        }
        acc.magnitude_ln()
    })?;
    ErlangMixture::new(beta, m + 2, weights)
}

/// Independent confluent-hypergeometric route to `(f^{*m} * f1)(t)` for the
/// ordinary mixed exponential delay, from the Laplace-transform product:
///
/// ```text
/// (f^{*m} * f1)(t) = e^{-beta t} t^{m+1} / (m+1)! *
///     sum_r C(m,r) (alpha p)^r (beta q)^{m-r}
///         [ alpha p 1F1(r+2; m+2; (beta-alpha) t)
///         + beta  q 1F1(r;   m+2; (beta-alpha) t) ]
/// ```
///
/// Exists to cross-check [`mixed_exp_nfold_weighted`]; disagreements signal a
/// coefficient transcription error and must be surfaced, not absorbed.
pub fn mixed_exp_nfold_weighted_kummer(
    p: f64,
    alpha: f64,
    beta: f64,
    m: u32,
    t: f64,
    tol: f64,
) -> Result<f64> {
    let fam = MixedExp::new(p, alpha, beta)?;
    if t < 0.0 {
        return Err(Error::Domain(format!("time must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let mu = m as usize;
    let z = (fam.beta - fam.alpha) * t;
    let ap_ln = (fam.alpha * fam.p).ln();
    let bq_ln = (fam.beta * fam.q).ln();
    let mut lg = LnGammaTable::new();
    let prefix_ln = -fam.beta * t + (mu as f64 + 1.0) * t.ln() - lg.ln_gamma(mu + 2);
    let mut acc = LogAccumulator::new();
    for r in 0..=mu {
        let b_ln = lg.ln_gamma(mu + 1) - lg.ln_gamma(r + 1) - lg.ln_gamma(mu - r + 1);
        let common = prefix_ln + b_ln + r as f64 * ap_ln + (mu - r) as f64 * bq_ln;
        let f_upper = kummer_1f1_ln(r as f64 + 2.0, mu as f64 + 2.0, z, tol)?;
        acc.add(f_upper.scale_ln(common + ap_ln));
        if r > 0 {
            let f_lower = kummer_1f1_ln(r as f64, mu as f64 + 2.0, z, tol)?;
            acc.add(f_lower.scale_ln(common + bq_ln));
        } else {
            // 1F1(0; ...) = 1
            acc.add(SignedLog::from_ln(common + bq_ln));
        }
    }
    Ok(acc.total().value())
}

/// Erlang-mixture expansion of the *equilibrium* density of a mixed
/// exponential family. The equilibrium density is again a two-point mixed
/// exponential with the same rates and reweighted components, expanded here
/// around the larger rate.
pub(crate) fn mixed_exp_equilibrium_mixture(
    p: f64,
    alpha: f64,
    beta: f64,
    coeff_tol: f64,
) -> Result<ErlangMixture> {
    let fam = MixedExp::new(p, alpha, beta)?;
    let mu = fam.mean();
    let p_eq = fam.p / fam.alpha / mu; // weight of the alpha component
    let q_eq = fam.q / fam.beta / mu;
    // p_eq alpha e^{-alpha t} expands over e(j+1, beta; t) with weights
    // p_eq (alpha/beta) (1 - alpha/beta)^j; the beta component is e(1) itself.
    let ratio = fam.alpha / fam.beta;
    let decay = 1.0 - ratio;
    let mut weights = vec![q_eq + p_eq * ratio];
    let mut w = p_eq * ratio;
    let mut cum = weights[0];
    for _ in 0..MAX_MIXTURE_TERMS {
        w *= decay;
        weights.push(w);
        cum += w;
        if 1.0 - cum < coeff_tol {
            return ErlangMixture::new(beta, 1, weights);
        }
    }
    Err(Error::NoConvergence {
        context: "equilibrium mixture expansion",
        terms: MAX_MIXTURE_TERMS,
        residual: 1.0 - cum,
    })
}

/// Trapezoid-rule convolution of two densities tabulated on matching grids
/// (same `dt`, both starting at 0). Output length is `len(a) + len(b) - 1`.
pub fn grid_convolve(a: &DensityGrid, b: &DensityGrid) -> Result<DensityGrid> {
    let dt = a.step();
    if ((b.step() - dt) / dt).abs() > 1e-9 {
        return Err(Error::GridMismatch(format!(
            "grid steps differ: {} vs {}",
            a.step(),
            b.step()
        )));
    }
    if a.start() != 0.0 || b.start() != 0.0 {
        return Err(Error::GridMismatch("grid convolution requires both grids to start at 0".into()));
    }
    let av = a.values();
    let bv = b.values();
    let n_out = av.len() + bv.len() - 1;
    let mut out = vec![0.0; n_out];
    for (k, slot) in out.iter_mut().enumerate() {
        let lo = k.saturating_sub(bv.len() - 1);
        let hi = k.min(av.len() - 1);
        if lo > hi {
            continue;
        }
        let mut sum = 0.0;
        for i in lo..=hi {
            sum += av[i] * bv[k - i];
        }
        // Trapezoid end-point correction on [0, k dt].
        let edge = 0.5 * (av_get(av, 0) * bv_get(bv, k) + av_get(av, k) * bv_get(bv, 0));
        *slot = dt * (sum - edge).max(0.0);
    }
    DensityGrid::new(0.0, dt, out)
}

fn av_get(v: &[f64], i: usize) -> f64 {
    v.get(i).copied().unwrap_or(0.0)
}

fn bv_get(v: &[f64], i: usize) -> f64 {
    v.get(i).copied().unwrap_or(0.0)
}
