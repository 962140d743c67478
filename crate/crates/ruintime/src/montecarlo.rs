//! Independent stochastic oracle: simulate the surplus process path by path
//! and estimate ruin-time distributions with binomial error bars.
//!
//! Ruin can only happen at claim instants (between claims the surplus drifts
//! upward at rate `c > 0`), so each path just walks the claim epochs.
//!
//! Reproducibility contract: every path draws from its own ChaCha8 stream
//! derived from `(seed, path index)`, so results are byte-identical across
//! runs *and* across thread counts; histogram merging is integer addition.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::DensityQuery;
use crate::error::{Error, Result};
use crate::gk;
use crate::model::{DelaySpec, DensityGrid, InterClaimFamily, Model};

/// Simulation controls.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: u64,
    pub horizon: f64,
    pub seed: u64,
    pub bin_width: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::InvalidParameter("n_paths must be >= 1".into()));
        }
        if self.n_paths > 1_000_000_000 {
            return Err(Error::InvalidParameter(format!(
                "n_paths = {} exceeds the 1e9 guard",
                self.n_paths
            )));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive and finite, got {}",
                self.horizon
            )));
        }
        if !(self.bin_width > 0.0) || self.bin_width > self.horizon {
            return Err(Error::InvalidParameter(format!(
                "bin width must lie in (0, horizon], got {}",
                self.bin_width
            )));
        }
        Ok(())
    }

    fn bins(&self) -> usize {
        (self.horizon / self.bin_width).ceil() as usize
    }
}

/// Histogram of simulated ruin times plus right-censoring counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub rng_algorithm: String,
    pub seed: u64,
    pub n_paths: u64,
    pub horizon: f64,
    pub bin_width: f64,
    /// Counts of ruin times per bin `[k w, (k+1) w)`; the final bin is
    /// closed on the right so a ruin at exactly the horizon is kept.
    pub bin_counts: Vec<u64>,
    /// Paths ruined by the horizon; the histogram mass.
    pub ruined: u64,
    /// Paths that reached the horizon solvent (right-censored).
    pub survived: u64,
    /// Standard error of each bin proportion, `sqrt(p (1-p) / n)`.
    pub bin_std_errors: Vec<f64>,
}

impl SimResult {
    /// Empirical probability of ruin by the horizon.
    pub fn ruin_frequency(&self) -> f64 {
        self.ruined as f64 / self.n_paths as f64
    }

    /// Empirical probability of ruin by time `t <= horizon` (prefix sum of
    /// whole bins up to `t`; `t` should be a bin boundary for exactness).
    pub fn ruin_frequency_by(&self, t: f64) -> f64 {
        let k = ((t / self.bin_width).round() as usize).min(self.bin_counts.len());
        let count: u64 = self.bin_counts[..k].iter().sum();
        count as f64 / self.n_paths as f64
    }

    /// Binomial standard error of [`Self::ruin_frequency`].
    pub fn ruin_frequency_std_error(&self) -> f64 {
        let p = self.ruin_frequency();
        (p * (1.0 - p) / self.n_paths as f64).sqrt()
    }
}

/// Per-path samplers, with any tabulated inverse CDFs precomputed.
struct Samplers {
    family: InterClaimFamily,
    delay: DelaySpec,
    claim_rate: f64,
    family_inverse_cdf: Option<InverseCdf>,
    delay_inverse_cdf: Option<InverseCdf>,
    /// Equilibrium component weight of the alpha branch, for stationary
    /// mixed exponential delays.
    stationary_alpha_weight: f64,
}

struct InverseCdf {
    /// Cumulative probabilities at grid nodes, normalized to end at 1.
    cum: Vec<f64>,
    t0: f64,
    dt: f64,
}

impl InverseCdf {
    fn build(grid: &DensityGrid) -> Result<InverseCdf> {
        let mut cum = grid.cumulative();
        let total = *cum.last().expect("non-empty grid");
        if total <= 0.0 {
            return Err(Error::InvalidParameter(
                "cannot sample from an all-zero tabulated density".into(),
            ));
        }
        for c in &mut cum {
            *c /= total;
        }
        Ok(InverseCdf { cum, t0: grid.start(), dt: grid.step() })
    }

    fn sample(&self, u: f64) -> f64 {
        let i = match self.cum.binary_search_by(|c| c.total_cmp(&u)) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        let i = i.min(self.cum.len() - 2);
        let span = self.cum[i + 1] - self.cum[i];
        let frac = if span > 0.0 { (u - self.cum[i]) / span } else { 0.0 };
        self.t0 + self.dt * (i as f64 + frac.clamp(0.0, 1.0))
    }
}

impl Samplers {
    fn build(model: &Model) -> Result<Samplers> {
        let family_inverse_cdf = match &model.family {
            InterClaimFamily::Tabulated { grid } => Some(InverseCdf::build(grid)?),
            _ => None,
        };
        let delay_inverse_cdf = match &model.delay {
            DelaySpec::Explicit { grid } => Some(InverseCdf::build(grid)?),
            _ => None,
        };
        let stationary_alpha_weight = match (&model.family, &model.delay) {
            (InterClaimFamily::MixedExponential { p, alpha, .. }, DelaySpec::Stationary) => {
                p / alpha / model.family.mean()
            }
            _ => 0.0,
        };
        Ok(Samplers {
            family: model.family.clone(),
            delay: model.delay.clone(),
            claim_rate: model.params.claim_rate,
            family_inverse_cdf,
            delay_inverse_cdf,
            stationary_alpha_weight,
        })
    }

    fn claim(&self, rng: &mut ChaCha8Rng) -> f64 {
        sample_exp(rng, self.claim_rate)
    }

    fn inter_claim(&self, rng: &mut ChaCha8Rng) -> f64 {
        match &self.family {
            InterClaimFamily::Gamma { shape, rate } => sample_gamma(rng, *shape, *rate),
            InterClaimFamily::MixedExponential { p, alpha, beta } => {
                if rng.random::<f64>() < *p {
                    sample_exp(rng, *alpha)
                } else {
                    sample_exp(rng, *beta)
                }
            }
            InterClaimFamily::Tabulated { .. } => self
                .family_inverse_cdf
                .as_ref()
                .expect("built for tabulated families")
                .sample(rng.random::<f64>()),
        }
    }

    fn first_arrival(&self, rng: &mut ChaCha8Rng) -> f64 {
        match &self.delay {
            DelaySpec::Ordinary => self.inter_claim(rng),
            DelaySpec::Stationary => match &self.family {
                // Size-bias then thin: U * (size-biased T) has the
                // equilibrium law, and size-biased gamma(n) is gamma(n+1).
                InterClaimFamily::Gamma { shape, rate } => {
                    rng.random::<f64>() * sample_gamma(rng, shape + 1.0, *rate)
                }
                // The equilibrium law of a mixed exponential is again mixed
                // exponential with reweighted components.
                InterClaimFamily::MixedExponential { alpha, beta, .. } => {
                    if rng.random::<f64>() < self.stationary_alpha_weight {
                        sample_exp(rng, *alpha)
                    } else {
                        sample_exp(rng, *beta)
                    }
                }
                InterClaimFamily::Tabulated { .. } => {
                    unreachable!("validation rejects stationary tabulated sampling")
                }
            },
            DelaySpec::Explicit { .. } => self
                .delay_inverse_cdf
                .as_ref()
                .expect("built for explicit delays")
                .sample(rng.random::<f64>()),
        }
    }
}

fn sample_exp(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    -(1.0 - rng.random::<f64>()).ln() / rate
}

fn sample_std_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; one variate per call keeps the stream layout simple.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Gamma sampler: sum of exponentials for integer shape, Marsaglia-Tsang
/// squeeze otherwise (with the shape < 1 boost).
fn sample_gamma(rng: &mut ChaCha8Rng, shape: f64, rate: f64) -> f64 {
    if shape.fract() == 0.0 && shape <= 64.0 {
        let mut sum = 0.0;
        for _ in 0..shape as u32 {
            sum += sample_exp(rng, rate);
        }
        return sum;
    }
    if shape < 1.0 {
        let boost = rng.random::<f64>().powf(1.0 / shape);
        return boost * sample_gamma(rng, shape + 1.0, rate);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = sample_std_normal(rng);
        let v = (1.0 + c * x).powi(3);
        if v <= 0.0 {
            continue;
        }
        let u: f64 = rng.random();
        if u < 1.0 - 0.0331 * x.powi(4) {
            return d * v / rate;
        }
        if u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
            return d * v / rate;
        }
    }
}

/// Simulate `n_paths` surplus paths and histogram the ruin times.
///
/// A path draws `T_0` from the delay law, then i.i.d. inter-claim times and
/// exponential claims; ruin is the first claim instant where the surplus
/// goes strictly negative. Claim epochs past the horizon mean survival.
pub fn simulate(model: &Model, sim: &SimConfig) -> Result<SimResult> {
    sim.validate()?;
    if matches!(
        (&model.family, &model.delay),
        (InterClaimFamily::Tabulated { .. }, DelaySpec::Stationary)
    ) {
        return Err(Error::Unsupported(
            "stationary delay sampling over a tabulated family is not available".into(),
        ));
    }
    let samplers = Samplers::build(model)?;
    let n_bins = sim.bins();
    let u = model.params.surplus;
    let c = model.params.premium_rate;

    struct Local {
        bins: Vec<u64>,
        ruined: u64,
        survived: u64,
    }

    let merged = (0..sim.n_paths)
        .into_par_iter()
        .fold(
            || Local { bins: vec![0u64; n_bins], ruined: 0, survived: 0 },
            |mut acc, path| {
                let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
                rng.set_stream(path);
                let mut epoch = samplers.first_arrival(&mut rng);
                let mut claims = 0.0f64;
                loop {
                    if epoch > sim.horizon {
                        acc.survived += 1;
                        break;
                    }
                    claims += samplers.claim(&mut rng);
                    if u + c * epoch - claims < 0.0 {
                        let bin = ((epoch / sim.bin_width) as usize).min(n_bins - 1);
                        acc.bins[bin] += 1;
                        acc.ruined += 1;
                        break;
                    }
                    epoch += samplers.inter_claim(&mut rng);
                }
                acc
            },
        )
        .reduce(
            || Local { bins: vec![0u64; n_bins], ruined: 0, survived: 0 },
            |mut a, b| {
                for (x, y) in a.bins.iter_mut().zip(&b.bins) {
                    *x += y;
                }
                a.ruined += b.ruined;
                a.survived += b.survived;
                a
            },
        );

    let n = sim.n_paths as f64;
    let bin_std_errors = merged
        .bins
        .iter()
        .map(|&k| {
            let p = k as f64 / n;
            (p * (1.0 - p) / n).sqrt()
        })
        .collect();
    Ok(SimResult {
        rng_algorithm: "chacha8".to_string(),
        seed: sim.seed,
        n_paths: sim.n_paths,
        horizon: sim.horizon,
        bin_width: sim.bin_width,
        bin_counts: merged.bins,
        ruined: merged.ruined,
        survived: merged.survived,
        bin_std_errors,
    })
}

/// Per-bin comparison of a simulation against the analytic density.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityComparison {
    /// One z-score per bin; zero where the expected count is below 10.
    pub z_scores: Vec<f64>,
    pub max_abs_z: f64,
    /// Pearson chi-square over the bins with expected count >= 10.
    pub chi_square: f64,
    /// Number of bins entering the chi-square.
    pub dof: usize,
}

/// Compare a histogram against bin masses of the analytic density,
/// `z = (observed - n p) / sqrt(n p (1 - p))`, skipping bins whose expected
/// count is below 10.
pub fn compare_to_density(
    result: &SimResult,
    query: &DensityQuery,
    quad_tol: f64,
) -> Result<DensityComparison> {
    let eval = crate::density::Evaluator::new(query, result.horizon)?;
    let f = |s: f64| eval.density(s);
    let n = result.n_paths as f64;
    let mut z_scores = Vec::with_capacity(result.bin_counts.len());
    let mut chi_square = 0.0;
    let mut dof = 0usize;
    let mut max_abs_z = 0.0f64;
    for (k, &count) in result.bin_counts.iter().enumerate() {
        let a = k as f64 * result.bin_width;
        let b = ((k + 1) as f64 * result.bin_width).min(result.horizon);
        let mass = gk::adaptive(&f, a, b, quad_tol, 512)?.value.clamp(0.0, 1.0);
        let expected = n * mass;
        if expected < 10.0 {
            z_scores.push(0.0);
            continue;
        }
        let z = (count as f64 - expected) / (expected * (1.0 - mass)).sqrt();
        max_abs_z = max_abs_z.max(z.abs());
        chi_square += (count as f64 - expected).powi(2) / expected;
        dof += 1;
        z_scores.push(z);
    }
    Ok(DensityComparison { z_scores, max_abs_z, chi_square, dof })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{DensityQuery, EvalPath};
    use crate::model::{validate, ModelParams, SeriesConfig};

    fn erlang2_model(u: f64, delay: DelaySpec) -> Model {
        validate(
            ModelParams::new(u, 1.1, 1.0).unwrap(),
            InterClaimFamily::Gamma { shape: 2.0, rate: 2.0 },
            delay,
        )
        .unwrap()
    }

    #[test]
    fn identical_seeds_reproduce_bitwise() {
        let model = erlang2_model(5.0, DelaySpec::Ordinary);
        let sim = SimConfig { n_paths: 20_000, horizon: 20.0, seed: 42, bin_width: 0.5 };
        let a = simulate(&model, &sim).unwrap();
        let b = simulate(&model, &sim).unwrap();
        assert_eq!(a, b, "same seed must reproduce the exact result");
        let c = simulate(&model, &SimConfig { seed: 43, ..sim }).unwrap();
        assert_ne!(a, c, "different seed must change the histogram");
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let model = erlang2_model(2.0, DelaySpec::Stationary);
        let sim = SimConfig { n_paths: 10_000, horizon: 10.0, seed: 7, bin_width: 0.25 };
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| simulate(&model, &sim).unwrap());
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| simulate(&model, &sim).unwrap());
        assert_eq!(single, multi, "per-path streams make thread count irrelevant");
    }

    #[test]
    fn accounting_invariants_hold() {
        let model = erlang2_model(0.0, DelaySpec::Ordinary);
        let sim = SimConfig { n_paths: 50_000, horizon: 20.0, seed: 1, bin_width: 0.5 };
        let r = simulate(&model, &sim).unwrap();
        assert_eq!(r.ruined + r.survived, r.n_paths);
        assert_eq!(r.bin_counts.iter().sum::<u64>(), r.ruined);
        assert_eq!(r.bin_counts.len(), 40);
    }

    #[test]
    fn huge_claims_ruin_at_first_claim_with_delay_law_histogram() {
        // lambda ~ 0: the first claim dwarfs any surplus, so the ruin time
        // is T_0 itself and the histogram mean approaches E[T_0].
        let model = validate(
            ModelParams::new(50.0, 1.1, 1e-9).unwrap(),
            InterClaimFamily::Gamma { shape: 2.0, rate: 2.0 },
            DelaySpec::Ordinary,
        )
        .unwrap();
        let sim = SimConfig { n_paths: 100_000, horizon: 30.0, seed: 3, bin_width: 0.1 };
        let r = simulate(&model, &sim).unwrap();
        assert_eq!(r.ruined, r.n_paths, "every path must be ruined at the first claim");
        let mut mean = 0.0;
        for (k, &c) in r.bin_counts.iter().enumerate() {
            mean += (k as f64 + 0.5) * r.bin_width * c as f64;
        }
        mean /= r.n_paths as f64;
        // E[T_0] = 1, sd = 1/sqrt(2); 4 sigma of the mean estimate.
        assert!(
            (mean - 1.0).abs() < 4.0 * (0.5f64 / 100_000.0).sqrt() + 0.05 * r.bin_width,
            "histogram mean {mean} should approximate E[T_0] = 1"
        );
    }

    #[test]
    fn ruin_frequency_matches_reference_cell() {
        // psi(0, 20) = 0.7973; 2e5 paths give sigma ~ 9e-4.
        let model = erlang2_model(0.0, DelaySpec::Ordinary);
        let sim = SimConfig { n_paths: 200_000, horizon: 20.0, seed: 11, bin_width: 0.5 };
        let r = simulate(&model, &sim).unwrap();
        let se = r.ruin_frequency_std_error();
        assert!(
            (r.ruin_frequency() - 0.7973).abs() < 3.0 * se,
            "empirical {} vs analytic 0.7973 (3 sigma = {})",
            r.ruin_frequency(),
            3.0 * se
        );
    }

    #[test]
    fn z_scores_flag_a_wrong_model() {
        let model = erlang2_model(0.0, DelaySpec::Ordinary);
        let sim = SimConfig { n_paths: 100_000, horizon: 20.0, seed: 5, bin_width: 0.5 };
        let r = simulate(&model, &sim).unwrap();

        let honest = DensityQuery::new(
            erlang2_model(0.0, DelaySpec::Ordinary),
            SeriesConfig::default(),
            EvalPath::Auto,
        )
        .unwrap();
        let cmp = compare_to_density(&r, &honest, 1e-9).unwrap();
        assert!(cmp.max_abs_z < 5.0, "well-matched model: max |z| = {}", cmp.max_abs_z);
        assert!(cmp.dof > 10);

        // Negative control: feed a density with the wrong claim rate.
        let wrong = DensityQuery::new(
            validate(
                ModelParams::new(0.0, 1.1, 0.7).unwrap(),
                InterClaimFamily::Gamma { shape: 2.0, rate: 2.0 },
                DelaySpec::Ordinary,
            )
            .unwrap(),
            SeriesConfig::default(),
            EvalPath::Auto,
        )
        .unwrap();
        let cmp = compare_to_density(&r, &wrong, 1e-9).unwrap();
        assert!(cmp.max_abs_z > 10.0, "wrong lambda must be flagged: max |z| = {}", cmp.max_abs_z);
    }

    #[test]
    fn empty_histogram_yields_zero_z_scores() {
        // Enormous surplus: no path is ruined, every expected count is
        // below threshold, all z-scores are zero by convention.
        let model = erlang2_model(1e6, DelaySpec::Ordinary);
        let sim = SimConfig { n_paths: 1000, horizon: 5.0, seed: 2, bin_width: 0.5 };
        let r = simulate(&model, &sim).unwrap();
        assert_eq!(r.ruined, 0);
        let q = DensityQuery::new(
            erlang2_model(1e6, DelaySpec::Ordinary),
            SeriesConfig::default(),
            EvalPath::Auto,
        )
        .unwrap();
        let cmp = compare_to_density(&r, &q, 1e-9).unwrap();
        assert!(cmp.z_scores.iter().all(|z| *z == 0.0));
        assert_eq!(cmp.dof, 0);
    }

    #[test]
    fn gamma_sampler_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        for &(shape, rate) in &[(0.5, 1.0), (1.5, 0.7), (2.0, 2.0), (3.7, 1.3)] {
            let n = 200_000;
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            for _ in 0..n {
                let x = sample_gamma(&mut rng, shape, rate);
                sum += x;
                sum2 += x * x;
            }
            let mean = sum / n as f64;
            let var = sum2 / n as f64 - mean * mean;
            let want_mean = shape / rate;
            let want_var = shape / (rate * rate);
            let se_mean = (want_var / n as f64).sqrt();
            assert!(
                (mean - want_mean).abs() < 5.0 * se_mean,
                "gamma({shape},{rate}) sample mean {mean} vs {want_mean}"
            );
            assert!(
                (var - want_var).abs() < 0.05 * want_var,
                "gamma({shape},{rate}) sample variance {var} vs {want_var}"
            );
        }
    }

    #[test]
    fn stationary_sampler_matches_equilibrium_mean() {
        // E[T_0] = E[T^2]/(2 E[T]) = 0.75 for Erlang(2, 2).
        let model = erlang2_model(0.0, DelaySpec::Stationary);
        let samplers = Samplers::build(&model).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 200_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += samplers.first_arrival(&mut rng);
        }
        let mean = sum / n as f64;
        assert!((mean - 0.75).abs() < 0.01, "stationary T_0 mean {mean}, want 0.75");
    }

    #[test]
    fn simulate_rejects_bad_config() {
        let model = erlang2_model(0.0, DelaySpec::Ordinary);
        let bad = SimConfig { n_paths: 0, horizon: 10.0, seed: 1, bin_width: 0.5 };
        assert!(simulate(&model, &bad).is_err());
        let bad = SimConfig { n_paths: 10, horizon: -1.0, seed: 1, bin_width: 0.5 };
        assert!(simulate(&model, &bad).is_err());
    }
}
