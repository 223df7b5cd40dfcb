//! Command-line front end. Exit codes: 0 success, 1 verification failure,
//! 2 invalid input.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::Value;

use crate::analysis::{self, Flag, MetricReport};
use crate::catalog::{self, CatalogEntry};
use crate::complex_structure::InvariantComplexManifold;
use crate::error::{Error, Result};
use crate::forms::Form;
use crate::io;
use crate::metric::HermitianMetric;
use crate::operators::{self, IdentityEntry, SuiteOptions};
use crate::search::{self, MetricFamily};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "starsplit", version, about = "Pluriclosed star split metrics on invariant complex manifolds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Catalog of built-in manifolds.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Metric classes, f, rho, *rho and eigenvalues.
    Classify(Common),
    /// rho, *rho, f and eigenvalues, with optional pair and triple data.
    Invariants(Common),
    /// Run the identity suites.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Suite::All)]
        suite: Suite,
    },
    /// Search a metric family for a pluriclosed star split metric.
    Search {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Family::Diagonal)]
        family: Family,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
    },
    /// Classify along a list of values of one structure parameter; the
    /// scanned parameter is the `--param` given without a value.
    Scan {
        #[command(flatten)]
        common: Common,
        /// Comma-separated complex values such as `0.1,0.1+0.1i,-0.2i`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<String>,
    },
}

#[derive(Subcommand, Debug)]
pub enum CatalogAction {
    List {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Catalog name or path to a manifold JSON file.
    #[arg(long)]
    pub manifold: String,
    /// Metric JSON file; defaults to the catalog metric or the standard one.
    #[arg(long)]
    pub metric: Option<PathBuf>,
    /// `name=value`, repeatable.
    #[arg(long = "param", allow_hyphen_values = true)]
    pub params: Vec<String>,
    #[arg(long, default_value_t = crate::DEFAULT_TOL)]
    pub tol: f64,
    /// Shorthand for `--format json`.
    #[arg(long)]
    pub json: bool,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2000)]
    pub budget: usize,
    /// Second metric file for pair and operator computations.
    #[arg(long)]
    pub gamma: Option<PathBuf>,
    /// Pullback matrix file for triples.
    #[arg(long)]
    pub phi: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Commutation,
    Operators,
    All,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Diagonal,
    FullHermitian,
}

/// Resolved inputs of a command.
pub struct RunConfig {
    pub manifold: InvariantComplexManifold,
    pub entry: Option<CatalogEntry>,
    pub metric: HermitianMetric,
    pub gamma: Option<HermitianMetric>,
    pub tol: f64,
    pub format: Format,
    pub seed: u64,
    pub budget: usize,
}

impl Common {
    fn format(&self) -> Format {
        if self.json {
            Format::Json
        } else {
            self.format.unwrap_or(Format::Text)
        }
    }

    /// Bindings given as `name=value`; bare names are returned separately.
    fn split_params(&self) -> Result<(Vec<(String, Complex64)>, Vec<String>)> {
        let mut bound = Vec::new();
        let mut bare = Vec::new();
        for p in &self.params {
            match p.split_once('=') {
                Some((k, v)) => bound.push((k.trim().to_string(), crate::expr::parse_complex(v.trim())?)),
                None => bare.push(p.trim().to_string()),
            }
        }
        Ok((bound, bare))
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        if !(self.tol > 0.0) {
            return Err(Error::Invalid(format!("tolerance must be positive, got {}", self.tol)));
        }
        let (bound, bare) = self.split_params()?;
        if let Some(b) = bare.first() {
            return Err(Error::Invalid(format!("parameter '{b}' needs a value (name=value)")));
        }
        self.resolve_with(&bound)
    }

    fn resolve_with(&self, bound: &[(String, Complex64)]) -> Result<RunConfig> {
        let path = Path::new(&self.manifold);
        let looks_like_file = path.exists() || self.manifold.ends_with(".json");
        let (manifold, entry, default_metric) = if looks_like_file {
            let m = io::load_manifold(path)?.bind_all(bound)?;
            m.validate(self.tol)?;
            let g = HermitianMetric::identity(m.dim())?;
            (m, None, g)
        } else {
            let e = catalog::get(&self.manifold, bound)?;
            (e.manifold.clone(), Some(e.clone()), e.metric.clone())
        };
        let metric = match &self.metric {
            Some(p) => io::load_metric(p)?,
            None => default_metric,
        };
        if metric.dim() != manifold.dim() {
            return Err(Error::DimMismatch(manifold.dim(), metric.dim()));
        }
        let gamma = self.gamma.as_deref().map(io::load_metric).transpose()?;
        if let Some(g) = &gamma {
            if g.dim() != manifold.dim() {
                return Err(Error::DimMismatch(manifold.dim(), g.dim()));
            }
        }
        Ok(RunConfig {
            manifold,
            entry,
            metric,
            gamma,
            tol: self.tol,
            format: self.format(),
            seed: self.seed,
            budget: self.budget,
        })
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INVALID
        }
    }
}

pub fn run_from_env() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

pub fn execute(cmd: &Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Catalog { action: CatalogAction::List { json } } => cmd_catalog_list(*json, out),
        Command::Classify(c) => cmd_classify(&c.resolve()?, out),
        Command::Invariants(c) => cmd_invariants(&c.resolve()?, c.phi.as_deref(), out),
        Command::Verify { common, suite } => cmd_verify(&common.resolve()?, *suite, out),
        Command::Search { common, family, restarts } => cmd_search(&common.resolve()?, *family, *restarts, out),
        Command::Scan { common, values } => cmd_scan(common, values, out),
    }
}

fn emit_json<T: Serialize>(value: &T, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "{}", io::to_pretty_json(value)?)?;
    Ok(())
}

pub fn cmd_catalog_list(json: bool, out: &mut dyn Write) -> Result<i32> {
    let names = catalog::list();
    if json {
        emit_json(&names, out)?;
    } else {
        for n in names {
            writeln!(out, "{n}")?;
        }
    }
    Ok(EXIT_OK)
}

fn report_for(cfg: &RunConfig) -> Result<MetricReport> {
    match &cfg.entry {
        Some(e) => e.classify_with_tol(&cfg.metric, cfg.tol),
        None => analysis::classify_with_tol(&cfg.manifold, &cfg.metric, cfg.tol),
    }
}

fn mark(f: &Flag) -> &'static str {
    if f.holds {
        "yes"
    } else {
        "no"
    }
}

pub fn write_report_text(r: &MetricReport, out: &mut dyn Write) -> Result<()> {
    writeln!(out, "manifold: {} (n = {})", r.manifold, r.dim)?;
    writeln!(out, "f = {}", r.f)?;
    let fl = &r.flags;
    for (name, flag) in [
        ("kahler", &fl.kahler),
        ("balanced", &fl.balanced),
        ("gauduchon", &fl.gauduchon),
        ("skt", &fl.skt),
        ("astheno_kahler", &fl.astheno_kahler),
        ("n2_gauduchon", &fl.n2_gauduchon),
        ("pluriclosed_star_split", &fl.pluriclosed_star_split),
        ("closed_star_split", &fl.closed_star_split),
    ] {
        writeln!(out, "  {name:<24} {:<4} defect {:.3e}", mark(flag), flag.defect)?;
    }
    writeln!(out, "eigenvalues: {:?}", r.eigenvalues)?;
    writeln!(out, "rho = {}", r.rho)?;
    writeln!(out, "*rho = {}", r.star_rho)?;
    writeln!(out, "||del omega||^2 = {}, integral of f omega_n = {}", r.norms.del_omega_sq, r.norms.integral_f)?;
    writeln!(
        out,
        "checks: star {:.3e}, trace {:.3e}",
        r.checks.star_rho_residual, r.checks.f_trace_residual
    )?;
    for n in &r.notes {
        writeln!(out, "note: {n}")?;
    }
    Ok(())
}

pub fn cmd_classify(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let r = report_for(cfg)?;
    match cfg.format {
        Format::Json => emit_json(&r, out)?,
        Format::Csv => return Err(Error::Invalid("classify supports text and json output".into())),
        Format::Text => write_report_text(&r, out)?,
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct Invariants {
    manifold: String,
    f: f64,
    eigenvalues: Vec<f64>,
    rho: Form,
    star_rho: Form,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pair: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    triple: Option<Value>,
}

pub fn cmd_invariants(cfg: &RunConfig, phi: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let r = report_for(cfg)?;
    let mut inv = Invariants {
        manifold: r.manifold.clone(),
        f: r.f,
        eigenvalues: r.eigenvalues.clone(),
        rho: r.rho.clone(),
        star_rho: r.star_rho.clone(),
        notes: r.notes.clone(),
        pair: None,
        triple: None,
    };
    if let Some(gamma) = &cfg.gamma {
        let p = analysis::pair_analysis_tol(&cfg.manifold, &cfg.metric, gamma, cfg.tol)?;
        inv.pair = Some(serde_json::to_value(&p)?);
    }
    if let Some(path) = phi {
        let map = io::load_pullback(path)?;
        let gamma = cfg.gamma.as_ref().unwrap_or(&cfg.metric);
        let t = analysis::triple_analysis(&cfg.manifold, &map, &cfg.metric, gamma)?;
        inv.triple = Some(serde_json::to_value(&t)?);
    }
    match cfg.format {
        Format::Json => emit_json(&inv, out)?,
        Format::Csv => return Err(Error::Invalid("invariants supports text and json output".into())),
        Format::Text => {
            writeln!(out, "manifold: {}", inv.manifold)?;
            writeln!(out, "f = {}", inv.f)?;
            writeln!(out, "eigenvalues: {:?}", inv.eigenvalues)?;
            writeln!(out, "rho = {}", inv.rho)?;
            writeln!(out, "*rho = {}", inv.star_rho)?;
            for n in &inv.notes {
                writeln!(out, "note: {n}")?;
            }
            if let Some(p) = &inv.pair {
                writeln!(out, "pair f = {}, pluriclosed = {}", p["f_pair"], p["pluriclosed"]["holds"])?;
            }
            if let Some(t) = &inv.triple {
                writeln!(
                    out,
                    "triple f = {}, pluriclosed = {}, structure compatible = {}",
                    t["f_triple"], t["pluriclosed"], t["structure_compatible"]
                )?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn write_entry(e: &IdentityEntry, out: &mut dyn Write) -> Result<()> {
    match (&e.skipped_reason, e.pass, e.residual) {
        (Some(why), _, _) => writeln!(out, "SKIP {:<32} {why}", e.id)?,
        (None, Some(true), Some(r)) => writeln!(out, "PASS {:<32} {r:.3e}  {}", e.id, e.anchor)?,
        (None, _, r) => writeln!(
            out,
            "FAIL {:<32} {}  {}{}",
            e.id,
            r.map_or("-".to_string(), |r| format!("{r:.3e}")),
            e.anchor,
            e.error.as_ref().map_or(String::new(), |m| format!(" ({m})"))
        )?,
    }
    Ok(())
}

pub fn cmd_verify(cfg: &RunConfig, suite: Suite, out: &mut dyn Write) -> Result<i32> {
    let opts = SuiteOptions { tol: cfg.tol, seed: cfg.seed, ..SuiteOptions::default() };
    let gamma = cfg.gamma.as_ref().unwrap_or(&cfg.metric);
    let mut reports = Vec::new();
    if matches!(suite, Suite::Commutation | Suite::All) {
        reports.push(operators::verify_commutation_suite_with(&cfg.manifold, &cfg.metric, &opts));
    }
    if matches!(suite, Suite::Operators | Suite::All) {
        reports.push(operators::verify_operator_identities_with(&cfg.manifold, &cfg.metric, gamma, &opts));
    }
    let ok = reports.iter().all(|r| r.all_passed());
    match cfg.format {
        Format::Json => {
            let entries: Vec<&IdentityEntry> = reports.iter().flat_map(|r| r.entries.iter()).collect();
            emit_json(&entries, out)?;
        }
        Format::Csv => return Err(Error::Invalid("verify supports text and json output".into())),
        Format::Text => {
            for r in &reports {
                writeln!(out, "# {} / {} / tol {:e}", r.context.manifold, r.context.metric, r.context.tolerance)?;
                for e in &r.entries {
                    write_entry(e, out)?;
                }
            }
            writeln!(out, "{}", if ok { "all identities hold" } else { "verification failed" })?;
        }
    }
    Ok(if ok { EXIT_OK } else { EXIT_FAILED })
}

pub fn cmd_search(cfg: &RunConfig, family: Family, restarts: usize, out: &mut dyn Write) -> Result<i32> {
    let n = cfg.manifold.dim();
    let fam = match family {
        Family::Diagonal => MetricFamily::diagonal(n),
        Family::FullHermitian => MetricFamily::full_hermitian(n),
    };
    let opts = search::SearchOptions { budget: cfg.budget, seed: cfg.seed, restarts };
    let r = search::search_pss_with(&cfg.manifold, &fam, &opts)?;
    match cfg.format {
        Format::Json => emit_json(&r, out)?,
        Format::Csv => write!(out, "{}", search::trace_to_csv(&r.trace)?)?,
        Format::Text => {
            writeln!(out, "best defect {:.3e} after {} evaluations (restart {})", r.best_defect, r.evaluations, r.best_restart)?;
            writeln!(out, "best parameters {:?}", r.best_params)?;
            writeln!(out, "f sign changed during the search: {}", r.f_sign_changed)?;
            write_report_text(&r.report, out)?;
        }
    }
    Ok(EXIT_OK)
}

pub fn cmd_scan(common: &Common, values: &[String], out: &mut dyn Write) -> Result<i32> {
    let (bound, bare) = common.split_params()?;
    let param = match bare.as_slice() {
        [p] => p.clone(),
        _ => return Err(Error::Invalid("scan needs exactly one --param without a value".into())),
    };
    let vals: Vec<Complex64> = values.iter().map(|v| crate::expr::parse_complex(v.trim())).collect::<Result<_>>()?;
    let path = Path::new(&common.manifold);
    let rows = if path.exists() || common.manifold.ends_with(".json") {
        let cfg = common.resolve_with(&bound)?;
        search::scan(&cfg.manifold, &cfg.metric, &param, &vals)?
    } else if common.metric.is_some() {
        let cfg = common.resolve_with(&bound)?;
        let template = catalog::template(&common.manifold)?.bind_all(&bound)?;
        search::scan(&template, &cfg.metric, &param, &vals)?
    } else {
        search::scan_catalog(&common.manifold, &bound, &param, &vals)?
    };
    match common.format() {
        Format::Json => emit_json(&rows, out)?,
        Format::Csv => write!(out, "{}", search::scan_to_csv(&rows)?)?,
        Format::Text => {
            for r in &rows {
                writeln!(
                    out,
                    "{}={:<12} f={:<22} pss={} closed={} skt={} balanced={} eigenvalues={:?}",
                    r.param,
                    r.value,
                    r.f,
                    mark(&r.flags.pluriclosed_star_split),
                    mark(&r.flags.closed_star_split),
                    mark(&r.flags.skt),
                    mark(&r.flags.balanced),
                    r.eigenvalues
                )?;
            }
        }
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["starsplit"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn classify_iwasawa() {
        let (code, out, _) = run_capture(&["classify", "--manifold", "iwasawa3"]);
        assert_eq!(code, 0);
        assert!(out.contains("f = 1"), "{out}");
        assert!(out.contains("note:"));
    }

    #[test]
    fn invalid_inputs() {
        assert_eq!(run_capture(&["classify", "--manifold", "nowhere"]).0, 2);
        assert_eq!(run_capture(&["classify", "--manifold", "calabi_eckmann", "--param", "t=1.5"]).0, 2);
        assert_eq!(run_capture(&["classify", "--manifold", "iwasawa3", "--tol", "-1"]).0, 2);
        assert_eq!(run_capture(&["frobnicate"]).0, 2);
    }

    #[test]
    fn scan_needs_bare_param() {
        let (code, out, _) = run_capture(&[
            "scan", "--manifold", "calabi_eckmann", "--param", "t", "--values", "0.1,0.1+0.1i,-0.2i", "--format", "csv",
        ]);
        assert_eq!(code, 0);
        assert_eq!(out.lines().count(), 4);
        assert_eq!(run_capture(&["scan", "--manifold", "calabi_eckmann", "--values", "0.1"]).0, 2);
    }
}
