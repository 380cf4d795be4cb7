use crate::config::{ConfigError, RunConfig};
use bdi_core::ensembles::{FieldCoeffs, FieldRealization};
use bdi_core::oracle::{compare, mc_ratio_estimate, validate_suite, MCEstimate, Report, SuiteBudgets};
use bdi_core::pfassembly::{z_generating, ZResult};
use bdi_core::rng::StreamSeed;
use bdi_core::spherical::{char_poly_mc, normalization_n2, real_count_stats, RealCountStats};
use bdi_core::winding::{flow_trace, winding_histogram, winding_number, WindingStats};
use bdi_core::{Error, C64, VERSION};
use serde::Serialize;
use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Numerical(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidDimension(_)
            | Error::DimensionMismatch(_)
            | Error::Domain(_)
            | Error::InvalidField(_)
            | Error::DegenerateMomenta(_) => Failure::Config(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numerical(format!("I/O error: {e}"))
    }
}

/// Outcome of a command that ran to completion.
pub struct Done {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
    /// False when a comparison or validation check failed.
    pub all_pass: bool,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'a str,
    command: &'a str,
    config: &'a RunConfig,
    result: T,
}

fn write_json<T: Serialize>(cfg: &RunConfig, command: &str, name: &str, result: T) -> Result<PathBuf, Failure> {
    fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join(name);
    let env = Envelope { version: VERSION, command, config: cfg, result };
    let mut text = serde_json::to_string_pretty(&env).map_err(|e| Failure::Numerical(e.to_string()))?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

fn provenance(cfg: &RunConfig, command: &str) -> Result<String, Failure> {
    let json = serde_json::to_string(cfg).map_err(|e| Failure::Numerical(e.to_string()))?;
    Ok(format!("bdi {VERSION} {command}\nconfig: {json}"))
}

pub fn flow(cfg: &RunConfig) -> Result<Done, Failure> {
    cfg.validate()?;
    let field = cfg.field()?;
    let real = FieldRealization::sample(cfg.n, &mut StreamSeed::new(cfg.seed).stream(0))?;
    let data = flow_trace(&field, &real, cfg.grid)?;
    fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join("flow.csv");
    let file = BufWriter::new(fs::File::create(&path)?);
    data.write_csv(file, Some(&provenance(cfg, "flow")?))?;
    let w = match winding_number(&field, &real, cfg.grid) {
        Ok(w) => format!("W = {}", w.w_value),
        Err(e) => format!("W unresolved: {e}"),
    };
    Ok(Done { summary: vec![format!("{} grid points; {w}", data.grid.len())], files: vec![path], all_pass: true })
}

pub fn winding(cfg: &RunConfig) -> Result<Done, Failure> {
    cfg.validate()?;
    let field = cfg.field()?;
    let stats: WindingStats = winding_histogram(&field, cfg.samples, cfg.grid, StreamSeed::new(cfg.seed))?;
    let odd: usize = stats.histogram.iter().filter(|(w, _)| *w % 2 != 0).map(|(_, c)| c).sum();
    let mut summary: Vec<String> = stats.histogram.iter().map(|(w, c)| format!("W = {w}: {c}")).collect();
    summary.push(format!("rejected {} of {}; odd windings {odd}", stats.rejected, cfg.samples));
    let path = write_json(cfg, "winding", "winding.json", &stats)?;
    // parity is a property of the Trig field only; general Fourier fields may wind oddly
    let parity_applies = matches!(cfg.field, FieldCoeffs::Trig);
    Ok(Done { files: vec![path], summary, all_pass: !parity_applies || odd == 0 })
}

#[derive(Serialize)]
struct ZOutput {
    analytic: ZResult,
    mc: Option<MCEstimate>,
    report: Option<Report>,
}

pub fn z(cfg: &RunConfig) -> Result<Done, Failure> {
    cfg.validate()?;
    if cfg.q.is_empty() || cfg.q.len() != cfg.p.len() {
        return Err(Failure::Config(format!("need equally many q and p momenta (got {} and {})", cfg.q.len(), cfg.p.len())));
    }
    let field = cfg.field()?;
    let ctx = cfg.kernel_context()?;
    let analytic = z_generating(&field, &cfg.q, &cfg.p, &ctx, cfg.route)?;
    let mut summary = vec![format!("analytic Z = {:.10} (err {:.2e}, route {:?})", analytic.complex(), analytic.err_est, cfg.route)];
    let (mc, report) = if cfg.mc {
        let mc = mc_ratio_estimate(&field, &cfg.q, &cfg.p, cfg.samples, StreamSeed::new(cfg.seed), cfg.scheme)?;
        let report = compare(analytic.complex(), analytic.err_est, &mc).named("z_analytic_vs_mc");
        summary.push(report.line());
        (Some(mc), Some(report))
    } else {
        (None, None)
    };
    let all_pass = report.as_ref().is_none_or(|r| r.pass);
    let path = write_json(cfg, "z", "z.json", ZOutput { analytic, mc, report })?;
    Ok(Done { files: vec![path], summary, all_pass })
}

#[derive(Serialize)]
struct SphericalOutput {
    real_count: RealCountStats,
    expected_real_count_asymptotic: f64,
    char_poly_at_2: MCEstimate,
    char_poly_report: Report,
    /// Total mass of the N = 2 joint eigenvalue density (only for n = 2).
    normalization_n2: Option<(f64, f64)>,
}

pub fn spherical(cfg: &RunConfig) -> Result<Done, Failure> {
    cfg.validate()?;
    let seed = StreamSeed::new(cfg.seed);
    let real_count = real_count_stats(cfg.n, cfg.samples, seed)?;
    let x = C64::new(2.0, 0.0);
    let cp = char_poly_mc(x, cfg.n, cfg.samples, seed.fork(1), cfg.scheme)?;
    let report = compare(x.powi(cfg.n as i32), 0.0, &cp).named("char_poly_monomial");
    let normalization = if cfg.n == 2 { Some(normalization_n2(0.0, 0.0, &cfg.quad)?) } else { None };
    let asym = (std::f64::consts::PI * cfg.n as f64 / 2.0).sqrt();
    let summary = vec![
        format!("mean real eigenvalues {:.4} ± {:.4} (large-N sqrt(pi N/2) = {asym:.4})", real_count.mean, real_count.stderr),
        report.line(),
    ];
    let all_pass = report.pass && real_count.all_parity_ok;
    let out = SphericalOutput {
        real_count,
        expected_real_count_asymptotic: asym,
        char_poly_at_2: cp,
        char_poly_report: report,
        normalization_n2: normalization,
    };
    let path = write_json(cfg, "spherical", "spherical.json", out)?;
    Ok(Done { files: vec![path], summary, all_pass })
}

#[derive(Serialize)]
struct ValidateOutput {
    budgets: SuiteBudgets,
    all_pass: bool,
    reports: Vec<Report>,
}

pub fn validate(cfg: &RunConfig) -> Result<Done, Failure> {
    cfg.quad.validate()?;
    let base = if cfg.smoke { SuiteBudgets::smoke() } else { SuiteBudgets::default() };
    let budgets = SuiteBudgets { seed: cfg.seed, quad: cfg.quad, ..base };
    let reports = validate_suite(&budgets)?;
    let all_pass = reports.iter().all(|r| r.pass);
    let summary = reports.iter().map(Report::line).collect();
    let path = write_json(cfg, "validate", "validate.json", ValidateOutput { budgets, all_pass, reports })?;
    Ok(Done { files: vec![path], summary, all_pass })
}
