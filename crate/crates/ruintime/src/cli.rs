//! Command-line frontend. Subcommands: `density`, `prob`, `table1`,
//! `simulate`, `verify`, `moments`. Emits CSV or JSON records that echo the
//! full parameter set, so every output is reproducible by copy-paste.
//!
//! Exit codes are a stable contract: 0 success, 1 check failure, 2 usage
//! error, 3 numeric failure.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;

use serde::Serialize;

use crate::density::{DensityQuery, EvalPath};
use crate::error::Error;
use crate::model::{
    delay_moments, moments, validate, DelaySpec, DensityGrid, InterClaimFamily, Model, ModelParams,
    SeriesConfig,
};
use crate::montecarlo::{simulate, SimConfig};
use crate::quadrature::{ruin_prob, tabulate_density};

const SCHEMA_VERSION: &str = "1.0.0";

/// Reference finite-time ruin probabilities for the default benchmark
/// parameters (lambda = 1, beta = 2, c = 1.1), four decimals. Columns:
/// psi(0,t), psi_e(0,t), psi(10,t), psi_e(10,t), psi(20,t), psi_e(20,t).
pub const REFERENCE_TABLE: [(f64, [f64; 6]); 5] = [
    (20.0, [0.7973, 0.8463, 0.0457, 0.0509, 0.0009, 0.0010]),
    (40.0, [0.8332, 0.8735, 0.1008, 0.1082, 0.0060, 0.0066]),
    (60.0, [0.8481, 0.8848, 0.1387, 0.1469, 0.0138, 0.0148]),
    (80.0, [0.8564, 0.8912, 0.1651, 0.1737, 0.0218, 0.0232]),
    (100.0, [0.8618, 0.8952, 0.1842, 0.1930, 0.0292, 0.0309]),
];

/// Tolerance for the `table1 --check` comparison (the reference prints four
/// decimals, so half an ulp of the last digit).
pub const REFERENCE_TOL: f64 = 5e-5;

#[derive(Serialize)]
struct OutputRecord<T: Serialize> {
    schema_version: &'static str,
    command: &'static str,
    parameters: BTreeMap<String, String>,
    results: T,
    warnings: Vec<String>,
}

/// Run the CLI with the given arguments (excluding the program name).
/// Returns the process exit code; output goes to the supplied writers.
pub fn run(args: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match run_inner(args, stdout) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
        Err(CliError::Numeric(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            3
        }
    }
}

enum CliError {
    Usage(String),
    Numeric(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        match e {
            Error::NoConvergence { .. } | Error::ToleranceNotMet { .. } | Error::NoRoot(_) => {
                CliError::Numeric(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

const USAGE: &str = "usage: ruintime <density|prob|table1|simulate|verify|moments> [flags]

common flags:
  --u X --c X --lambda X          model parameters (defaults 0, 1.1, 1)
  --family gamma|mixedexp|tabulated
  --shape X --rate X              gamma parameters
  --p X --alpha X --beta X        mixed exponential parameters
  --density-file PATH             CSV t,value for the tabulated family
  --delay ordinary|stationary|file   (default ordinary)
  --delay-file PATH               CSV t,value when --delay file
  --tol X                         density series tolerance (default 1e-12)
  --quad-tol X                    quadrature tolerance (default 1e-8)
  --grid-dt X                     numeric convolution step for tabulated
                                  densities (default 1e-3)
  --out csv|json                  output format
  --output PATH                   write to a file instead of stdout
  --threads N                     worker threads (1 = fully sequential)

per command:
  density   --t-max X --dt X
  prob      --t X
  table1    [--check]
  simulate  --paths N --horizon X --seed N --bin-width X
  verify    [--list] [--inject-error NAME]
  moments   (family flags only)";

struct Flags {
    values: BTreeMap<String, String>,
    booleans: Vec<String>,
}

const BOOLEAN_FLAGS: [&str; 2] = ["check", "list"];

/// Every value-taking flag any command accepts. Unknown flags are rejected
/// so a typo cannot silently fall back to a default.
const VALUE_FLAGS: [&str; 25] = [
    "u", "c", "lambda", "family", "shape", "rate", "p", "alpha", "beta", "density-file",
    "delay", "delay-file", "tol", "quad-tol", "grid-dt", "out", "output", "threads", "t",
    "t-max", "dt", "paths", "horizon", "seed", "bin-width",
];

impl Flags {
    fn parse(args: &[String]) -> CliResult<Flags> {
        let mut values = BTreeMap::new();
        let mut booleans = Vec::new();
        let mut i = 0;
        while i < args.len() {
            let arg = &args[i];
            let name = match arg.strip_prefix("--") {
                Some(n) if !n.is_empty() => n.to_string(),
                _ => return usage(format!("unexpected argument '{arg}'\n\n{USAGE}")),
            };
            if BOOLEAN_FLAGS.contains(&name.as_str()) {
                booleans.push(name);
                i += 1;
                continue;
            }
            if !VALUE_FLAGS.contains(&name.as_str()) && name != "inject-error" {
                return usage(format!("unknown flag --{name}\n\n{USAGE}"));
            }
            match args.get(i + 1) {
                Some(v) => {
                    values.insert(name, v.clone());
                    i += 2;
                }
                None => return usage(format!("flag --{name} expects a value")),
            }
        }
        Ok(Flags { values, booleans })
    }

    fn number(&self, name: &str, default: f64) -> CliResult<f64> {
        match self.values.get(name) {
            None => Ok(default),
            Some(v) => v
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("--{name} expects a number, got '{v}'"))),
        }
    }

    fn required_number(&self, name: &str) -> CliResult<f64> {
        match self.values.get(name) {
            None => usage(format!("missing required flag --{name}")),
            Some(v) => v
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("--{name} expects a number, got '{v}'"))),
        }
    }

    fn integer(&self, name: &str, default: u64) -> CliResult<u64> {
        match self.values.get(name) {
            None => Ok(default),
            Some(v) => v
                .parse::<u64>()
                .map_err(|_| CliError::Usage(format!("--{name} expects an integer, got '{v}'"))),
        }
    }

    fn string(&self, name: &str, default: &str) -> String {
        self.values.get(name).cloned().unwrap_or_else(|| default.to_string())
    }

    fn has(&self, name: &str) -> bool {
        self.booleans.iter().any(|b| b == name)
    }

    /// Echo of everything the user passed, for the output record.
    fn echo(&self) -> BTreeMap<String, String> {
        let mut map = self.values.clone();
        for b in &self.booleans {
            map.insert(b.clone(), "true".to_string());
        }
        map
    }
}

fn run_inner(args: &[String], stdout: &mut dyn Write) -> CliResult<i32> {
    let Some(command) = args.first() else {
        return usage(USAGE);
    };
    let flags = Flags::parse(&args[1..])?;

    // Commands write into a buffer so the work can move into a dedicated
    // thread pool; the buffer is flushed to the real writer afterwards.
    let mut buffer: Vec<u8> = Vec::new();
    let threads = flags.integer("threads", 0)?;
    let code = if threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads as usize)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot build thread pool: {e}")))?;
        pool.install(|| dispatch(command, &flags, &mut buffer))?
    } else {
        dispatch(command, &flags, &mut buffer)?
    };
    stdout.write_all(&buffer).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(code)
}

fn dispatch(command: &str, flags: &Flags, stdout: &mut Vec<u8>) -> CliResult<i32> {
    match command {
        "density" => cmd_density(flags, stdout),
        "prob" => cmd_prob(flags, stdout),
        "table1" => cmd_table1(flags, stdout),
        "simulate" => cmd_simulate(flags, stdout),
        "verify" => cmd_verify(flags, stdout),
        "moments" => cmd_moments(flags, stdout),
        other => usage(format!("unknown command '{other}'\n\n{USAGE}")),
    }
}

// ---------------------------------------------------------------------------
// Model assembly from flags
// ---------------------------------------------------------------------------

fn parse_family(flags: &Flags) -> CliResult<InterClaimFamily> {
    match flags.values.get("family").map(String::as_str) {
        Some("gamma") => Ok(InterClaimFamily::Gamma {
            shape: flags.required_number("shape")?,
            rate: flags.required_number("rate")?,
        }),
        Some("mixedexp") => Ok(InterClaimFamily::MixedExponential {
            p: flags.required_number("p")?,
            alpha: flags.required_number("alpha")?,
            beta: flags.required_number("beta")?,
        }),
        Some("tabulated") => {
            let path = flags
                .values
                .get("density-file")
                .ok_or_else(|| CliError::Usage("--family tabulated needs --density-file".into()))?;
            Ok(InterClaimFamily::Tabulated { grid: read_density_csv(path)? })
        }
        Some(other) => usage(format!(
            "unknown family '{other}' (expected gamma, mixedexp, or tabulated)"
        )),
        None => usage("missing required flag --family"),
    }
}

fn parse_delay(flags: &Flags) -> CliResult<DelaySpec> {
    match flags.string("delay", "ordinary").as_str() {
        "ordinary" => Ok(DelaySpec::Ordinary),
        "stationary" => Ok(DelaySpec::Stationary),
        "file" => {
            let path = flags
                .values
                .get("delay-file")
                .ok_or_else(|| CliError::Usage("--delay file needs --delay-file".into()))?;
            Ok(DelaySpec::Explicit { grid: read_density_csv(path)? })
        }
        other => usage(format!(
            "unknown delay '{other}' (expected ordinary, stationary, or file)"
        )),
    }
}

fn parse_model(flags: &Flags) -> CliResult<Model> {
    let params = ModelParams::new(
        flags.number("u", 0.0)?,
        flags.number("c", 1.1)?,
        flags.number("lambda", 1.0)?,
    )?;
    Ok(validate(params, parse_family(flags)?, parse_delay(flags)?)?)
}

fn parse_series_config(flags: &Flags) -> CliResult<SeriesConfig> {
    let cfg = SeriesConfig {
        tol: flags.number("tol", 1e-12)?,
        grid_dt: flags.number("grid-dt", 1e-3)?,
        ..SeriesConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Two-column CSV (`t,value`), optional header, uniform spacing required.
fn read_density_csv(path: &str) -> CliResult<DensityGrid> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read '{path}': {e}")))?;
    let mut ts = Vec::new();
    let mut vals = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let (a, b) = (cols.next().unwrap_or(""), cols.next().unwrap_or(""));
        match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
            (Ok(t), Ok(v)) => {
                ts.push(t);
                vals.push(v);
            }
            _ if lineno == 0 => continue, // header row
            _ => {
                return usage(format!("'{path}' line {}: expected 't,value'", lineno + 1));
            }
        }
    }
    if ts.len() < 2 {
        return usage(format!("'{path}': need at least two data rows"));
    }
    let dt = ts[1] - ts[0];
    if dt <= 0.0 {
        return usage(format!("'{path}': time column must be strictly increasing"));
    }
    for w in ts.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0) {
            return usage(format!("'{path}': time column must be uniformly spaced"));
        }
    }
    Ok(DensityGrid::new(ts[0], dt, vals)?)
}

// ---------------------------------------------------------------------------
// Output plumbing
// ---------------------------------------------------------------------------

fn emit(flags: &Flags, stdout: &mut Vec<u8>, text: String) -> CliResult<()> {
    match flags.values.get("output") {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Usage(format!("cannot write '{path}': {e}"))),
        None => {
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::Usage(e.to_string()))
        }
    }
}

fn to_json<T: Serialize>(
    command: &'static str,
    flags: &Flags,
    results: T,
    warnings: Vec<String>,
) -> String {
    let record = OutputRecord {
        schema_version: SCHEMA_VERSION,
        command,
        parameters: flags.echo(),
        results,
        warnings,
    };
    let mut s = serde_json::to_string_pretty(&record).expect("serializable record");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_density(flags: &Flags, stdout: &mut Vec<u8>) -> CliResult<i32> {
    let model = parse_model(flags)?;
    let warnings = model.warnings();
    let cfg = parse_series_config(flags)?;
    let t_max = flags.required_number("t-max")?;
    let dt = flags.required_number("dt")?;
    if !(t_max > 0.0) {
        return usage("t-max must be positive");
    }
    if !(dt > 0.0) {
        return usage("dt must be positive");
    }
    if t_max / dt > 1e7 {
        return usage(format!("grid of {:.0} points exceeds the 1e7 cap", t_max / dt));
    }
    let query = DensityQuery::new(model, cfg, EvalPath::Auto)?;
    let grid = tabulate_density(&query, t_max, dt)?;
    match flags.string("out", "csv").as_str() {
        "csv" => {
            let mut text = String::from("t,density\n");
            for (i, v) in grid.values().iter().enumerate() {
                text.push_str(&format!("{},{}\n", grid.start() + grid.step() * i as f64, v));
            }
            emit(flags, stdout, text)?;
        }
        "json" => {
            #[derive(Serialize)]
            struct GridOut<'a> {
                t0: f64,
                dt: f64,
                density: &'a [f64],
            }
            let out = GridOut { t0: grid.start(), dt: grid.step(), density: grid.values() };
            emit(flags, stdout, to_json("density", flags, out, warnings))?;
        }
        other => return usage(format!("unknown output format '{other}'")),
    }
    Ok(0)
}

fn cmd_prob(flags: &Flags, stdout: &mut Vec<u8>) -> CliResult<i32> {
    let model = parse_model(flags)?;
    let warnings = model.warnings();
    let cfg = parse_series_config(flags)?;
    let t = flags.required_number("t")?;
    let quad_tol = flags.number("quad-tol", 1e-8)?;
    let query = DensityQuery::new(model, cfg, EvalPath::Auto)?;
    let result = ruin_prob(&query, t, quad_tol)?;
    match flags.string("out", "json").as_str() {
        "json" => emit(flags, stdout, to_json("prob", flags, result, warnings))?,
        "csv" => {
            let text = format!(
                "value,abs_error_estimate,evaluations\n{},{},{}\n",
                result.value, result.abs_error_estimate, result.evaluations
            );
            emit(flags, stdout, text)?;
        }
        other => return usage(format!("unknown output format '{other}'")),
    }
    Ok(0)
}

fn cmd_table1(flags: &Flags, stdout: &mut Vec<u8>) -> CliResult<i32> {
    let c = flags.number("c", 1.1)?;
    let lambda = flags.number("lambda", 1.0)?;
    let rate = flags.number("rate", 2.0)?;
    let quad_tol = flags.number("quad-tol", 1e-8)?;
    let cfg = parse_series_config(flags)?;
    let check = flags.has("check");

    let mut text =
        String::from("t,psi_u0,psi_e_u0,psi_u10,psi_e_u10,psi_u20,psi_e_u20\n");
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for (t, reference) in REFERENCE_TABLE {
        text.push_str(&format!("{t}"));
        for (i, u) in [0.0, 10.0, 20.0].into_iter().enumerate() {
            for (j, delay) in [DelaySpec::Ordinary, DelaySpec::Stationary].into_iter().enumerate()
            {
                let model = validate(
                    ModelParams::new(u, c, lambda)?,
                    InterClaimFamily::Gamma { shape: 2.0, rate },
                    delay,
                )?;
                let query = DensityQuery::new(model, cfg, EvalPath::Auto)?;
                let result = ruin_prob(&query, t, quad_tol)?;
                let value = result.value;
                text.push_str(&format!(",{value}"));
                if check {
                    let want = reference[2 * i + j];
                    let dev = (value - want).abs();
                    worst = worst.max(dev);
                    let delay_name = if j == 0 { "ordinary" } else { "stationary" };
                    if dev > REFERENCE_TOL {
                        failures.push(format!(
                            "t = {t}, u = {u}, delay {delay_name}: {value} vs reference {want} \
                             (|dev| = {dev:.2e})"
                        ));
                    } else if result.abs_error_estimate > REFERENCE_TOL {
                        // The integral itself is not certified to the band
                        // the comparison needs.
                        failures.push(format!(
                            "t = {t}, u = {u}, delay {delay_name}: quadrature error estimate \
                             {:.2e} exceeds the comparison tolerance {REFERENCE_TOL:e}",
                            result.abs_error_estimate
                        ));
                    }
                }
            }
        }
        text.push('\n');
    }
    if check {
        text.push_str(&format!(
            "# check: worst |deviation| = {worst:.3e} (tolerance {REFERENCE_TOL:e})\n"
        ));
        for f in &failures {
            text.push_str(&format!("# FAIL {f}\n"));
        }
    }
    emit(flags, stdout, text)?;
    Ok(if check && !failures.is_empty() { 1 } else { 0 })
}

fn cmd_simulate(flags: &Flags, stdout: &mut Vec<u8>) -> CliResult<i32> {
    let model = parse_model(flags)?;
    let warnings = model.warnings();
    let sim = SimConfig {
        n_paths: flags.integer("paths", 100_000)?,
        horizon: flags.number("horizon", 20.0)?,
        seed: flags.integer("seed", 0)?,
        bin_width: flags.number("bin-width", 0.5)?,
    };
    if sim.n_paths == 0 {
        return usage("--paths must be at least 1");
    }
    let result = simulate(&model, &sim)?;
    match flags.string("out", "json").as_str() {
        "json" => emit(flags, stdout, to_json("simulate", flags, result, warnings))?,
        "csv" => {
            let mut text = String::from("bin_start,bin_end,count,proportion,std_error\n");
            let n = result.n_paths as f64;
            for (k, (&count, &se)) in
                result.bin_counts.iter().zip(&result.bin_std_errors).enumerate()
            {
                text.push_str(&format!(
                    "{},{},{},{},{}\n",
                    k as f64 * result.bin_width,
                    (k as f64 + 1.0) * result.bin_width,
                    count,
                    count as f64 / n,
                    se
                ));
            }
            text.push_str(&format!(
                "# ruined {} survived {} frequency {}\n",
                result.ruined,
                result.survived,
                result.ruin_frequency()
            ));
            emit(flags, stdout, text)?;
        }
        other => return usage(format!("unknown output format '{other}'")),
    }
    Ok(0)
}

fn cmd_moments(flags: &Flags, stdout: &mut Vec<u8>) -> CliResult<i32> {
    let family = parse_family(flags)?;
    family.validate()?;
    let delay = parse_delay(flags)?;
    let (mean, variance) = moments(&family);
    let (delay_mean, delay_variance) = delay_moments(&family, &delay)?;
    #[derive(Serialize)]
    struct MomentsOut {
        inter_claim_mean: f64,
        inter_claim_variance: f64,
        first_arrival_mean: f64,
        first_arrival_variance: f64,
    }
    let out = MomentsOut {
        inter_claim_mean: mean,
        inter_claim_variance: variance,
        first_arrival_mean: delay_mean,
        first_arrival_variance: delay_variance,
    };
    match flags.string("out", "json").as_str() {
        "json" => emit(flags, stdout, to_json("moments", flags, out, Vec::new()))?,
        "csv" => {
            let text = format!(
                "inter_claim_mean,inter_claim_variance,first_arrival_mean,first_arrival_variance\n{},{},{},{}\n",
                out.inter_claim_mean,
                out.inter_claim_variance,
                out.first_arrival_mean,
                out.first_arrival_variance
            );
            emit(flags, stdout, text)?;
        }
        other => return usage(format!("unknown output format '{other}'")),
    }
    Ok(0)
}

fn cmd_verify(flags: &Flags, stdout: &mut Vec<u8>) -> CliResult<i32> {
    let inject = flags.values.get("inject-error").map(String::as_str);
    if let Some(name) = inject {
        if name != "eta" {
            return usage(format!("unknown --inject-error target '{name}' (available: eta)"));
        }
    }
    if flags.has("list") {
        let mut text = String::new();
        for check in verify::CHECK_NAMES {
            text.push_str(check);
            text.push('\n');
        }
        emit(flags, stdout, text)?;
        return Ok(0);
    }
    let outcomes = verify::run_all(inject).map_err(CliError::from)?;
    let all_passed = outcomes.iter().all(|o| o.passed);
    match flags.string("out", "csv").as_str() {
        "json" => emit(flags, stdout, to_json("verify", flags, &outcomes, Vec::new()))?,
        "csv" => {
            let mut text = String::from("check,passed,max_residual,threshold\n");
            for o in &outcomes {
                text.push_str(&format!(
                    "{},{},{},{}\n",
                    o.name,
                    if o.passed { "PASS" } else { "FAIL" },
                    o.max_residual,
                    o.threshold
                ));
            }
            emit(flags, stdout, text)?;
        }
        other => return usage(format!("unknown output format '{other}'")),
    }
    Ok(if all_passed { 0 } else { 1 })
}

/// The identity and cross-path suite behind `ruintime verify`.
pub mod verify {
    use serde::Serialize;

    use crate::convolve::{
        grid_convolve, mixed_exp_nfold, mixed_exp_nfold_weighted, mixed_exp_nfold_weighted_kummer,
    };
    use crate::density::{
        conditional_density, density_at, erlang_closed_form, kendall_crossing_density,
        stationary_erlang2_closed_form, DensityQuery, EvalPath, KendallQuery,
    };
    use crate::error::Result;
    use crate::model::{
        delay_density, validate, DelaySpec, DensityGrid, InterClaimFamily, ModelParams,
        SeriesConfig,
    };
    use crate::quadrature::{lundberg_ultimate, ruin_prob};
    use crate::specfun::{bessel_i, log_gamma, pfq, pochhammer, SignedLog};

    pub const CHECK_NAMES: [&str; 11] = [
        "bessel-recurrence",
        "hypergeometric-contiguous",
        "gauss-gamma-ratio",
        "pfq-recursion",
        "erlang-closed-vs-series",
        "stationary-closed-vs-series",
        "eta-vs-kummer",
        "gamma-mixture-vs-grid",
        "mixing-identity",
        "kendall-reparametrization",
        "lundberg-bound",
    ];

    #[derive(Clone, Debug, Serialize)]
    pub struct CheckOutcome {
        pub name: &'static str,
        pub passed: bool,
        pub max_residual: f64,
        pub threshold: f64,
    }

    fn outcome(name: &'static str, max_residual: f64, threshold: f64) -> CheckOutcome {
        CheckOutcome { name, passed: max_residual <= threshold, max_residual, threshold }
    }

    /// Reference mixture parameter sets (alpha, beta, p) with unit mean.
    pub const MIX_CASES: [(f64, f64, f64); 3] =
        [(0.4, 2.0, 0.25), (0.5, 2.0, 1.0 / 3.0), (0.6, 2.0, 3.0 / 7.0)];

    struct Xorshift(u64);

    impl Xorshift {
        fn next(&mut self) -> f64 {
            self.0 ^= self.0 << 13;
            self.0 ^= self.0 >> 7;
            self.0 ^= self.0 << 17;
            (self.0 >> 11) as f64 / (1u64 << 53) as f64
        }
    }

    /// Run every check; `inject` deliberately perturbs one computation to
    /// prove the corresponding cross-check has teeth.
    pub fn run_all(inject: Option<&str>) -> Result<Vec<CheckOutcome>> {
        Ok(vec![
            bessel_recurrence(),
            hypergeometric_contiguous()?,
            gauss_gamma_ratio()?,
            pfq_recursion()?,
            erlang_closed_vs_series()?,
            stationary_closed_vs_series()?,
            eta_vs_kummer(inject == Some("eta"))?,
            gamma_mixture_vs_grid()?,
            mixing_identity()?,
            kendall_reparametrization()?,
            lundberg_bound()?,
        ])
    }

    fn bessel_recurrence() -> CheckOutcome {
        let mut worst: f64 = 0.0;
        let mut z = 0.1;
        while z <= 30.0 {
            let lhs = bessel_i(0, z) - (2.0 / z) * bessel_i(1, z);
            let rhs = bessel_i(2, z);
            worst = worst.max((lhs - rhs).abs() / rhs);
            z += 0.1;
        }
        outcome("bessel-recurrence", worst, 1e-12)
    }

    fn hypergeometric_contiguous() -> Result<CheckOutcome> {
        let mut rng = Xorshift(0x1234_5678_9abc_def1);
        let mut worst: f64 = 0.0;
        for n in 1u32..=3 {
            let nf = n as f64;
            for _ in 0..50 {
                let z = 100.0 * rng.next();
                let a: Vec<f64> = (0..n).map(|k| 1.0 + k as f64 / nf).collect();
                let b: Vec<f64> = (1..=n).map(|k| 1.0 + k as f64 / nf).collect();
                let c: Vec<f64> = (1..=n).map(|k| 2.0 + k as f64 / nf).collect();
                let lhs = pfq(&[], &a, z, 1e-14)? - pfq(&[], &b, z, 1e-14)?;
                let scale = (log_gamma(nf + 1.0)? - log_gamma(2.0 * nf + 1.0)?).exp();
                let rhs = z * nf.powi(n as i32) * scale * pfq(&[], &c, z, 1e-14)?;
                worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1e-300));
            }
        }
        Ok(outcome("hypergeometric-contiguous", worst, 1e-10))
    }

    fn gauss_gamma_ratio() -> Result<CheckOutcome> {
        let mut worst: f64 = 0.0;
        for n in 1u32..=4 {
            let nf = n as f64;
            for m in 0u32..=20 {
                let mf = m as f64;
                let lhs = log_gamma(nf + 1.0)? - log_gamma(nf * (mf + 1.0) + 1.0)?;
                let mut rhs = -nf * mf * nf.ln();
                for k in 0..n {
                    let frac = (k as f64 + 1.0) / nf;
                    rhs += log_gamma(1.0 + frac)? - log_gamma(mf + 1.0 + frac)?;
                }
                worst = worst.max((lhs - rhs).abs() / lhs.abs().max(1.0));
            }
        }
        Ok(outcome("gauss-gamma-ratio", worst, 1e-12))
    }

    fn pfq_recursion() -> Result<CheckOutcome> {
        let mut rng = Xorshift(0x0bad_cafe_dead_beef);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let b = 0.1 + 5.0 * rng.next();
            let c1 = 0.3 + 5.0 * rng.next();
            let c2 = 0.3 + 5.0 * rng.next();
            let z = 30.0 * rng.next();
            let got = pfq(&[b], &[c1, c2], z, 1e-15)?;
            // Naive route: explicit Pochhammer products per term.
            let mut naive = 0.0;
            for m in 0..120u32 {
                let mut t = pochhammer(b, m);
                let d1 = pochhammer(c1, m);
                let d2 = pochhammer(c2, m);
                t = SignedLog { sign: t.sign * d1.sign * d2.sign, ln_abs: t.ln_abs - d1.ln_abs - d2.ln_abs };
                let ln_z = if z == 0.0 && m == 0 { 0.0 } else { m as f64 * z.ln() };
                naive += t.scale_ln(ln_z - log_gamma(m as f64 + 1.0)?).value();
            }
            worst = worst.max((got - naive).abs() / naive.abs().max(1.0));
        }
        Ok(outcome("pfq-recursion", worst, 1e-13))
    }

    fn erlang_closed_vs_series() -> Result<CheckOutcome> {
        let sets = [(0.0, 1.1, 1.0), (10.0, 1.1, 1.0), (5.0, 2.0, 0.5)];
        let cfg = SeriesConfig::default();
        let mut worst: f64 = 0.0;
        for order in 1u32..=3 {
            for &(u, c, lambda) in &sets {
                let params = ModelParams::new(u, c, lambda)?;
                let model = validate(
                    params,
                    InterClaimFamily::Gamma { shape: order as f64, rate: 2.0 },
                    DelaySpec::Ordinary,
                )?;
                let series = DensityQuery::new(model, cfg, EvalPath::GenericSeries)?;
                let eval = crate::density::Evaluator::new(&series, 25.0)?;
                for k in 1..=100 {
                    let t = 0.25 * k as f64;
                    let a = erlang_closed_form(&params, order, 2.0, t, cfg.tol)?;
                    let b = eval.density(t)?;
                    worst = worst.max((a - b).abs() / a.abs().max(1e-300));
                }
            }
        }
        Ok(outcome("erlang-closed-vs-series", worst, 1e-8))
    }

    fn stationary_closed_vs_series() -> Result<CheckOutcome> {
        let sets = [(0.0, 1.1, 1.0), (10.0, 1.1, 1.0), (20.0, 1.3, 0.8)];
        let cfg = SeriesConfig::default();
        let mut worst: f64 = 0.0;
        for &(u, c, lambda) in &sets {
            let params = ModelParams::new(u, c, lambda)?;
            let model = validate(
                params,
                InterClaimFamily::Gamma { shape: 2.0, rate: 2.0 },
                DelaySpec::Stationary,
            )?;
            let series = DensityQuery::new(model, cfg, EvalPath::GenericSeries)?;
            let eval = crate::density::Evaluator::new(&series, 25.0)?;
            for k in 1..=100 {
                let t = 0.25 * k as f64;
                let a = stationary_erlang2_closed_form(&params, 2.0, t, cfg.tol)?;
                let b = eval.density(t)?;
                worst = worst.max((a - b).abs() / a.abs().max(1e-300));
            }
        }
        Ok(outcome("stationary-closed-vs-series", worst, 1e-8))
    }

    fn eta_vs_kummer(inject: bool) -> Result<CheckOutcome> {
        let mut rng = Xorshift(0x5eed_5eed_5eed_5eed);
        let mut worst: f64 = 0.0;
        for (alpha, beta, p) in MIX_CASES {
            for k in 0..50u32 {
                let m = k % 7;
                let t = 1e-3 + 20.0 * rng.next();
                let mix = mixed_exp_nfold_weighted(p, alpha, beta, m, 1e-14)?;
                let mut a = mix.evaluate(t);
                if inject {
                    // Test hook: simulate a coefficient transcription error.
                    a *= 1.0 + 1e-3;
                }
                let b = mixed_exp_nfold_weighted_kummer(p, alpha, beta, m, t, 1e-14)?;
                worst = worst.max((a - b).abs() / b.abs().max(1e-300));
            }
        }
        Ok(outcome("eta-vs-kummer", worst, 1e-9))
    }

    fn gamma_mixture_vs_grid() -> Result<CheckOutcome> {
        let dt = 1e-3;
        let t_max = 12.0;
        let n = (t_max / dt) as usize;
        let mut worst: f64 = 0.0;
        for (alpha, beta, p) in MIX_CASES {
            let fam = InterClaimFamily::MixedExponential { p, alpha, beta };
            let values: Vec<f64> = (0..=n).map(|i| fam.density(i as f64 * dt)).collect();
            let f = DensityGrid::new(0.0, dt, values)?;
            let mut conv = f.clone();
            for m in 2..=5u32 {
                conv = grid_convolve(&conv, &f)?;
                let mix = mixed_exp_nfold(p, alpha, beta, m, 1e-14)?;
                for &t in &[0.5, 1.0, 2.0, 4.0, 7.0] {
                    worst = worst.max((mix.evaluate(t) - conv.value_at(t)).abs());
                }
            }
        }
        Ok(outcome("gamma-mixture-vs-grid", worst, 5e-6))
    }

    fn mixing_identity() -> Result<CheckOutcome> {
        let cfg = SeriesConfig::default();
        let cases: Vec<(ModelParams, InterClaimFamily)> = vec![
            (ModelParams::new(1.0, 1.1, 1.0)?, InterClaimFamily::Gamma { shape: 2.0, rate: 2.0 }),
            (ModelParams::new(0.5, 1.3, 0.8)?, InterClaimFamily::Gamma { shape: 1.0, rate: 1.5 }),
            (
                ModelParams::new(2.0, 1.1, 1.0)?,
                InterClaimFamily::MixedExponential { p: 1.0 / 3.0, alpha: 0.5, beta: 2.0 },
            ),
        ];
        let mut worst: f64 = 0.0;
        for (params, family) in cases {
            let t = 3.0;
            let integrand = |v: f64| -> Result<f64> {
                Ok(conditional_density(&params, &family, v, t, &cfg)?
                    * delay_density(&family, &DelaySpec::Ordinary, v)?)
            };
            let integral = crate::gk::adaptive(&integrand, 1e-12, t, 1e-11, 1024)?.value;
            let atom = (-params.claim_rate * (params.surplus + params.premium_rate * t)).exp()
                * delay_density(&family, &DelaySpec::Ordinary, t)?;
            let q = DensityQuery::new(
                validate(params, family.clone(), DelaySpec::Ordinary)?,
                cfg,
                EvalPath::GenericSeries,
            )?;
            let direct = density_at(&q, t)?;
            worst = worst.max((integral + atom - direct).abs());
        }
        Ok(outcome("mixing-identity", worst, 1e-8))
    }

    fn kendall_reparametrization() -> Result<CheckOutcome> {
        let params = ModelParams::new(1.0, 1.0, 1.0)?;
        let family = InterClaimFamily::Gamma { shape: 1.0, rate: 2.0 };
        let cfg = SeriesConfig::default();
        let v = 0.5;
        let mut rng = Xorshift(0xfeed_f00d_dead_10cc);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let t = v + 1e-6 + 10.0 * rng.next();
            let q = KendallQuery {
                params,
                family: family.clone(),
                v,
                s: params.surplus + params.premium_rate * t,
            };
            let lhs = conditional_density(&params, &family, v, t, &cfg)?;
            let rhs = params.premium_rate * kendall_crossing_density(&q, &cfg)?;
            worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1e-300));
        }
        Ok(outcome("kendall-reparametrization", worst, 1e-12))
    }

    /// Finite-horizon probabilities must stay below the ultimate one, and a
    /// heavily loaded model must have essentially reached it by t = 200.
    fn lundberg_bound() -> Result<CheckOutcome> {
        let mut worst: f64 = 0.0;
        for (u, c, t, must_reach) in [(5.0, 1.1, 60.0, false), (2.0, 2.0, 200.0, true)] {
            let params = ModelParams::new(u, c, 1.0)?;
            let family = InterClaimFamily::Gamma { shape: 2.0, rate: 2.0 };
            let ultimate = lundberg_ultimate(&params, &family)?;
            let q = DensityQuery::new(
                validate(params, family, DelaySpec::Ordinary)?,
                SeriesConfig::default(),
                EvalPath::Auto,
            )?;
            let finite = ruin_prob(&q, t, 1e-9)?.value;
            // Bound violation in both cases; for the loaded case the gap
            // itself must also have closed.
            worst = worst.max(finite - ultimate);
            if must_reach {
                worst = worst.max(ultimate - finite);
            }
        }
        Ok(outcome("lundberg-bound", worst.max(0.0), 1e-8))
    }
}
