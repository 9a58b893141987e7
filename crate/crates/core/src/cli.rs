//! The `gbm-integrals` command line.
//!
//! Every subcommand writes tidy records, CSV by default or JSON with
//! `--format json`. A CSV row is one estimate:
//!
//! ```text
//! id,t,a,nu,n,estimate,stderr,trimmed,max_sample,z,pass
//! ```
//!
//! Numbers carry 17 significant digits. Cells that do not apply are empty. An
//! identity check yields two rows, one per side, that share `z` and `pass`.
//! The `a` column holds whatever level the quantity is indexed by: the CDF
//! argument, the strike, `2/y`, `θ` for moments, `u` for the Yor functional.
//!
//! Output bytes depend only on the arguments and the binary. Wall-clock
//! timings go to stderr, and only with `--timestamps`.
//!
//! `--config FILE` reads a flat TOML table of flag values
//! (`n = 100000`, `scheme = "left-riemann"`, `times = [0.5, 1.0]`). Flags on
//! the command line override the file.
//!
//! Exit codes: 0 success, 1 internal error, 2 invalid input, 3 a verification
//! failed.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{min_samples, Error};
use crate::estimators::{McConfig, MomentEstimate, MomentVariant, TestFunction};
use crate::grid::{self, Criterion, GridConfig};
use crate::oracles::{self, GammaLawSpec, KsReport};
use crate::paths::Scheme;
use crate::pricing::{self, OptionSpec};
use crate::stats::{EstimateWithCI, IdentityId, IdentityReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FAILED: i32 = 3;

pub const CSV_HEADER: &str = "id,t,a,nu,n,estimate,stderr,trimmed,max_sample,z,pass";

/// One output row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub id: String,
    pub t: Option<f64>,
    pub a: Option<f64>,
    pub nu: Option<f64>,
    pub n: usize,
    pub estimate: f64,
    pub stderr: Option<f64>,
    pub trimmed: Option<f64>,
    pub max_sample: Option<f64>,
    pub z: Option<f64>,
    pub pass: Option<bool>,
}

impl Record {
    pub fn value(
        id: &str,
        t: Option<f64>,
        a: Option<f64>,
        nu: Option<f64>,
        n: usize,
        v: f64,
    ) -> Self {
        Self {
            id: id.to_string(),
            t,
            a,
            nu,
            n,
            estimate: v,
            stderr: None,
            trimmed: None,
            max_sample: None,
            z: None,
            pass: None,
        }
    }

    pub fn estimate(
        id: &str,
        t: Option<f64>,
        a: Option<f64>,
        nu: Option<f64>,
        e: &EstimateWithCI,
    ) -> Self {
        Self {
            stderr: Some(e.stderr),
            trimmed: Some(e.trimmed_mean),
            max_sample: Some(e.max_sample),
            ..Self::value(id, t, a, nu, e.n_samples, e.mean)
        }
    }

    /// Left and right sides of a report.
    pub fn pair(report: &IdentityReport) -> [Self; 2] {
        let (left, right) = side_names(report.identity);
        let p = report.params;
        let row = |id: &str, e: &EstimateWithCI| Self {
            z: Some(report.z_score),
            pass: Some(report.pass),
            ..Self::estimate(id, Some(p.t), Some(p.a), Some(p.nu), e)
        };
        [row(left, &report.lhs), row(right, &report.rhs)]
    }

    /// `estimate` is the KS statistic, `t` the truncation, `a` the oracle's
    /// `μ`, `nu` the simulated time-changed drift. The threshold is only in
    /// the JSON [`KsReport`].
    pub fn ks(id: &str, r: &KsReport) -> Self {
        let nu = 0.5 - 0.25 * r.simulated_mu;
        Self {
            pass: Some(r.pass),
            ..Self::value(
                id,
                Some(r.truncation),
                Some(r.oracle_mu),
                Some(nu),
                r.n,
                r.statistic,
            )
        }
    }
}

fn side_names(id: IdentityId) -> (&'static str, &'static str) {
    match id {
        IdentityId::Cdf => ("cdf_direct", "cdf_identity"),
        IdentityId::CdfDrift => ("cdf_direct", "cdf_identity_drift"),
        IdentityId::Density => ("density_event", "density_difference"),
        IdentityId::MeasureChangeOne => ("measure_change_one_lhs", "measure_change_one_rhs"),
        IdentityId::MeasureChangeX => ("measure_change_x_lhs", "measure_change_x_rhs"),
        IdentityId::MeasureChangeXOverNegZ => (
            "measure_change_x_over_neg_z_lhs",
            "measure_change_x_over_neg_z_rhs",
        ),
        IdentityId::MeasureChangeXPowNu => {
            ("measure_change_x_pow_nu_lhs", "measure_change_x_pow_nu_rhs")
        }
        IdentityId::Supermartingale => ("supermartingale_mean", "supermartingale_cdf"),
        IdentityId::AsianCall => ("price_direct", "price_identity"),
        IdentityId::Yor => ("yor_simulated", "yor_closed_form"),
    }
}

fn num(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

/// Header plus one line per record.
pub fn write_csv(records: &[Record]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let pass = r.pass.map(|p| p.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.id,
            num(r.t),
            num(r.a),
            num(r.nu),
            r.n,
            num(Some(r.estimate)),
            num(r.stderr),
            num(r.trimmed),
            num(r.max_sample),
            num(r.z),
            pass
        ));
    }
    out
}

/// Everything a command produced. JSON output serializes this whole.
#[derive(Debug, Default, Serialize)]
pub struct Output {
    pub command: String,
    pub records: Vec<Record>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub reports: Vec<IdentityReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub ks: Vec<KsReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub moments: Vec<MomentEstimate>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub criteria: Vec<Criterion>,
    /// `false` if any verdict in the output failed.
    pub pass: bool,
}

impl Output {
    fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            pass: true,
            ..Self::default()
        }
    }

    fn report(&mut self, report: IdentityReport) {
        self.pass &= report.pass;
        self.records.extend(Record::pair(&report));
        self.reports.push(report);
    }

    fn ks(&mut self, id: &str, report: KsReport, expect_pass: bool) {
        self.pass &= report.pass == expect_pass;
        self.records.push(Record::ks(id, &report));
        self.ks.push(report);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Dufresne,
    Yor,
    Supermartingale,
    MeasureChange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestFn {
    One,
    X,
    XOverNegZ,
    XPowNu,
}

#[derive(Debug, Parser)]
#[command(
    name = "gbm-integrals",
    version,
    about = "Time integrals of geometric Brownian motion"
)]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Number of paths.
    #[arg(long)]
    n: Option<usize>,
    /// Grid steps over the horizon.
    #[arg(long, default_value_t = 2048)]
    steps: usize,
    #[arg(long, env = "GBM_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "trapezoid")]
    scheme: Scheme,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Flat TOML file of flag values; flags given here win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report elapsed time on stderr.
    #[arg(long)]
    timestamps: bool,
}

impl Common {
    fn mc(&self) -> Result<McConfig, Error> {
        if self.steps == 0 {
            return Err(Error::ZeroSteps);
        }
        if let Some(threads) = self.threads {
            min_samples(threads, 1)?;
        }
        Ok(McConfig {
            steps: self.steps,
            seed: self.seed,
            scheme: self.scheme,
            threads: self.threads,
            ..McConfig::default()
        })
    }

    fn n(&self, default: usize) -> Result<usize, Error> {
        let n = self.n.unwrap_or(default);
        min_samples(n, 1)?;
        Ok(n)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Means of A_t^(ν) and M_t over simulated paths.
    Simulate {
        #[arg(long)]
        t: f64,
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            default_value = "0"
        )]
        nu: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Pr{A_t^(ν) ≤ a}, direct and by identity.
    Cdf {
        #[arg(long)]
        t: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<f64>,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        nu: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Density of A_t from the sandwich event and from two CDFs.
    Density {
        #[arg(long)]
        t: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        a: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Exponential moments E[exp(θ/·)] with divergence diagnostics.
    Moment {
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        theta: Vec<f64>,
        #[arg(long, default_value = "no-drift")]
        variant: MomentVariant,
        #[command(flatten)]
        common: Common,
    },
    /// Asian call price E[(∫X ds − a)⁺].
    Price {
        #[arg(long)]
        strike: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        nu: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Oracle and identity suites.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        /// Dufresne drift μ.
        #[arg(long, default_value_t = 2.0)]
        mu: f64,
        /// Law to test against; defaults to `mu`. A different value is a negative control.
        #[arg(long)]
        oracle_mu: Option<f64>,
        /// Dufresne truncation T; defaults to 10/μ.
        #[arg(long)]
        truncation: Option<f64>,
        #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
        u: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 1.0)]
        y: f64,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1,2")]
        times: Vec<f64>,
        #[arg(long = "f", value_enum, default_value_t = TestFn::One)]
        f: TestFn,
        /// Exponent for `--f x-pow-nu`.
        #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
        nu: f64,
        #[command(flatten)]
        common: Common,
    },
    /// The full acceptance grid with a summary table on stderr.
    Report {
        #[arg(long, default_value_t = GridConfig::default().dufresne_n)]
        dufresne_n: usize,
        #[arg(long, default_value_t = GridConfig::default().dufresne_steps)]
        dufresne_steps: usize,
        #[arg(long, default_value_t = GridConfig::default().residual_paths)]
        residual_paths: usize,
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Simulate { common, .. }
            | Command::Cdf { common, .. }
            | Command::Density { common, .. }
            | Command::Moment { common, .. }
            | Command::Price { common, .. }
            | Command::Verify { common, .. }
            | Command::Report { common, .. } => common,
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Domain(#[from] Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Domain(Error::ThreadPool(_)) | Failure::Io(_) => EXIT_INTERNAL,
            Failure::Domain(_) => EXIT_USAGE,
        }
    }
}

/// Parses `argv` (program name first), runs the command, returns the exit code.
pub fn run<I: IntoIterator<Item = String>>(argv: I) -> i32 {
    let argv = match with_config(argv.into_iter().collect()) {
        Ok(argv) => argv,
        Err(e) => {
            eprintln!("error: {e}");
            return e.code();
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let started = Instant::now();
    let result = execute(&cli.command).and_then(|out| {
        emit(cli.command.common(), &out)?;
        Ok(out.pass)
    });
    if cli.command.common().timestamps {
        eprintln!("elapsed {:.3} s", started.elapsed().as_secs_f64());
    }
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}

/// Splices the `--config` file's entries in right after the subcommand, so
/// any explicit flag that follows overrides them.
fn with_config(mut argv: Vec<String>) -> Result<Vec<String>, Failure> {
    let Some(pos) = argv
        .iter()
        .position(|a| a == "--config" || a.starts_with("--config="))
    else {
        return Ok(argv);
    };
    let path = match argv[pos].strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => argv
            .get(pos + 1)
            .cloned()
            .ok_or_else(|| Failure::Usage("--config needs a path".into()))?,
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Failure::Usage(format!("cannot read config {path}: {e}")))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| Failure::Usage(format!("bad config {path}: {e}")))?;
    let mut flags = Vec::new();
    for (key, value) in table {
        let flag = format!("--{}", key.replace('_', "-"));
        let text = match value {
            toml::Value::Boolean(true) => {
                flags.push(flag);
                continue;
            }
            toml::Value::Boolean(false) => continue,
            toml::Value::String(s) => s,
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::Float(f) => f.to_string(),
            toml::Value::Array(items) => items
                .iter()
                .map(|v| match v {
                    toml::Value::String(s) => Ok(s.clone()),
                    toml::Value::Integer(i) => Ok(i.to_string()),
                    toml::Value::Float(f) => Ok(f.to_string()),
                    _ => Err(Failure::Usage(format!(
                        "config key `{key}`: unsupported list item"
                    ))),
                })
                .collect::<Result<Vec<_>, _>>()?
                .join(","),
            _ => {
                return Err(Failure::Usage(format!(
                    "config key `{key}`: unsupported value"
                )))
            }
        };
        flags.push(format!("{flag}={text}"));
    }
    let at = argv
        .iter()
        .skip(1)
        .position(|a| !a.starts_with('-'))
        .map_or(argv.len(), |i| i + 2);
    argv.splice(at..at, flags);
    Ok(argv)
}

fn emit(common: &Common, out: &Output) -> Result<(), Failure> {
    let text = match common.format {
        Format::Csv => write_csv(&out.records),
        Format::Json => {
            let mut s =
                serde_json::to_string_pretty(out).map_err(|e| Failure::Usage(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    match &common.output {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn execute(command: &Command) -> Result<Output, Failure> {
    let common = command.common();
    let mc = common.mc()?;
    match command {
        Command::Simulate { t, nu, .. } => {
            let n = common.n(10_000)?;
            let sample = mc.sample(*t, n, nu)?;
            let mut out = Output::new("simulate");
            let m: Vec<f64> = (0..n).map(|i| sample.martingale(i)).collect();
            let m = EstimateWithCI::from_samples(&m);
            out.records.push(Record::estimate(
                "martingale",
                Some(*t),
                None,
                Some(0.0),
                &m,
            ));
            for &v in nu {
                let a = EstimateWithCI::from_samples(sample.integrals(v)?);
                out.records
                    .push(Record::estimate("integral", Some(*t), None, Some(v), &a));
            }
            Ok(out)
        }
        Command::Cdf { t, a, nu, .. } => {
            let n = common.n(100_000)?;
            let sample = mc.sample(*t, n, &[*nu])?;
            let mut out = Output::new("cdf");
            for &level in a {
                out.report(sample.cdf_check(level, *nu)?);
            }
            Ok(out)
        }
        Command::Density { t, a, .. } => {
            let n = common.n(100_000)?;
            let sample = mc.sample(*t, n, &[0.0, 1.0])?;
            let mut out = Output::new("density");
            for &level in a {
                out.report(sample.density_check(level)?);
            }
            Ok(out)
        }
        Command::Moment {
            t, theta, variant, ..
        } => {
            let n = common.n(1 << 17)?;
            let sample = mc.sample(*t, n, &[0.0, 0.5])?;
            let mut out = Output::new("moment");
            for &th in theta {
                let m = sample.exp_moment(th, *variant)?;
                let nu = if *variant == MomentVariant::NoDrift {
                    0.5
                } else {
                    0.0
                };
                out.records.push(Record::estimate(
                    "exp_moment",
                    Some(*t),
                    Some(th),
                    Some(nu),
                    &m.estimate,
                ));
                out.moments.push(m);
            }
            Ok(out)
        }
        Command::Price {
            strike,
            t,
            nu,
            sigma,
            ..
        } => {
            let n = common.n(100_000)?;
            let spec = OptionSpec::new(*strike, *t, *nu, *sigma)?;
            let mut out = Output::new("price");
            if *nu == 0.0 {
                out.report(pricing::price_check(&spec, n, &mc)?);
            } else {
                let e = pricing::price_direct(&spec, n, &mc)?;
                out.records.push(Record::estimate(
                    "price_direct",
                    Some(*t),
                    Some(*strike),
                    Some(*nu),
                    &e,
                ));
            }
            Ok(out)
        }
        Command::Verify {
            suite,
            mu,
            oracle_mu,
            truncation,
            u,
            t,
            y,
            times,
            f,
            nu,
            ..
        } => {
            let mut out = Output::new("verify");
            match suite {
                Suite::Dufresne => {
                    let n = common.n(100_000)?;
                    let simulated = GammaLawSpec::new(*mu)?;
                    let oracle = GammaLawSpec::new(oracle_mu.unwrap_or(*mu))?;
                    let truncation = truncation.unwrap_or(simulated.default_truncation());
                    let report =
                        oracles::dufresne_ks_against(&simulated, &oracle, truncation, n, &mc)?;
                    out.ks("dufresne_ks", report, true);
                }
                Suite::Yor => {
                    let n = common.n(100_000)?;
                    out.report(oracles::yor_mc_check(*u, *t, n, &mc)?);
                }
                Suite::Supermartingale => {
                    let n = common.n(100_000)?;
                    let r = crate::estimators::supermartingale_check(*y, times, n, &mc)?;
                    out.pass &= r.strictly_decreasing;
                    for report in r.reports {
                        out.report(report);
                    }
                }
                Suite::MeasureChange => {
                    let n = common.n(100_000)?;
                    let f = match f {
                        TestFn::One => TestFunction::One,
                        TestFn::X => TestFunction::X,
                        TestFn::XOverNegZ => TestFunction::XOverNegZ,
                        TestFn::XPowNu => TestFunction::XPowNu(*nu),
                    };
                    out.report(crate::estimators::measure_change_check(*t, *y, f, n, &mc)?);
                }
            }
            Ok(out)
        }
        Command::Report {
            dufresne_n,
            dufresne_steps,
            residual_paths,
            ..
        } => {
            let config = GridConfig {
                n: common.n(GridConfig::default().n)?,
                steps: mc.steps,
                seed: mc.seed,
                threads: mc.threads,
                dufresne_n: *dufresne_n,
                dufresne_steps: *dufresne_steps,
                residual_paths: *residual_paths,
            };
            let mut criteria = grid::run(&config)?;
            criteria.insert(
                8,
                grid::determinism(&GridConfig {
                    n: config.n.min(1 << 14),
                    ..config
                })?,
            );
            eprint!("{}", grid::summary_table(&criteria));
            let mut out = Output::new("report");
            for c in &criteria {
                out.pass &= c.pass;
                out.records.extend(c.records.iter().map(|r| Record {
                    id: format!("c{}.{}", c.id, r.id),
                    ..r.clone()
                }));
            }
            out.criteria = criteria;
            Ok(out)
        }
    }
}
