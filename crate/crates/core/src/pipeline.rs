//! Configured end-to-end runs: simulate, construct, bound, verify, report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::Prefactor;
use crate::chaining::{validate_family, ChainingFamily, FamilyReport};
use crate::covering::{
    check_entropy, critical_radii, fit_entropy_params, CoverOptions, EntropyCheck, EntropyParams,
    NetMode, DEFAULT_EXACT_LIMIT,
};
use crate::error::{Error, Result};
use crate::metric_space::FiniteMetricSpace;
use crate::simulate::{
    certificate, simulate, simulate_partial_sums, MomentCertificate, ProcessKind,
};
use crate::verify::{
    ks_distance_normal, tightness_table, verify_clt_moment_chain, verify_corollary,
    verify_lemma_b27, CltOutcome, CorollaryOutcome, LemmaOutcome, TightnessTable,
    VerificationReport,
};

/// Fewest replications accepted by any statistical check.
pub const MIN_REPLICATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceSource {
    /// A `.json` or `.csv` file, relative paths resolved against the config's directory.
    File(PathBuf),
    UniformGrid {
        points: usize,
        start: f64,
        end: f64,
    },
    /// An inline space document.
    Inline(crate::metric_space::SpaceDocument),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyConfig {
    pub t: f64,
    /// Fitted on the critical radii of the space when absent.
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    /// `Δ(Θ)` of the ambient set; the diameter of the space when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diam: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessConfig {
    pub n_values: Vec<usize>,
    pub deltas: Vec<f64>,
    pub epsilons: Vec<f64>,
    #[serde(rename = "R")]
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    LemmaB27,
    Corollary,
    Tightness,
    Clt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub space: SpaceSource,
    pub process: ProcessKind,
    /// Moment order of the increment condition.
    pub p: f64,
    pub entropy: EntropyConfig,
    #[serde(default)]
    pub betas: Vec<f64>,
    #[serde(default)]
    pub deltas: Vec<f64>,
    #[serde(rename = "R")]
    pub replications: usize,
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub net_mode: NetMode,
    #[serde(default = "default_exact_limit")]
    pub exact_limit: usize,
    #[serde(default)]
    pub prefactor: Prefactor,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tightness: Option<TightnessConfig>,
    /// Output directory for report.json and summary.csv.
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_exact_limit() -> usize {
    DEFAULT_EXACT_LIMIT
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let SpaceSource::File(f) = &mut cfg.space {
            if f.is_relative() {
                *f = base.join(&*f);
            }
        }
        Ok(cfg)
    }

    pub fn cover_options(&self) -> CoverOptions {
        CoverOptions {
            mode: self.net_mode,
            ..CoverOptions::default()
        }
        .with_exact_limit(self.exact_limit)
    }

    pub fn validate(&self) -> Result<()> {
        if self.checks.is_empty() {
            return Err(Error::InvalidInput("no checks requested".into()));
        }
        if self.replications < MIN_REPLICATIONS {
            return Err(Error::InvalidInput(format!(
                "need R >= {MIN_REPLICATIONS}, got {}",
                self.replications
            )));
        }
        let needs_deltas = self
            .checks
            .iter()
            .any(|c| matches!(c, Check::LemmaB27 | Check::Corollary));
        if needs_deltas && self.deltas.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if self.checks.contains(&Check::Corollary) && self.betas.is_empty() {
            return Err(Error::InvalidInput("corollary check needs betas".into()));
        }
        if self
            .checks
            .iter()
            .any(|c| matches!(c, Check::Tightness | Check::Clt))
        {
            let t = self
                .tightness
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("missing tightness section".into()))?;
            if t.n_values.is_empty() {
                return Err(Error::EmptyGrid);
            }
            if t.replications < MIN_REPLICATIONS {
                return Err(Error::InvalidInput(format!(
                    "need tightness R >= {MIN_REPLICATIONS}, got {}",
                    t.replications
                )));
            }
            if self.checks.contains(&Check::Tightness)
                && (t.deltas.is_empty() || t.epsilons.is_empty())
            {
                return Err(Error::EmptyGrid);
            }
        }
        Ok(())
    }

    pub fn load_space(&self) -> Result<FiniteMetricSpace> {
        match &self.space {
            SpaceSource::File(path) => FiniteMetricSpace::load(path),
            SpaceSource::UniformGrid { points, start, end } => {
                FiniteMetricSpace::uniform_grid(*points, *start, *end)
            }
            SpaceSource::Inline(doc) => FiniteMetricSpace::from_document(doc.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsDiagnostic {
    pub n: usize,
    pub point: usize,
    pub sd: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub config: ExperimentConfig,
    /// Seconds since the Unix epoch; the only field that varies between identical runs.
    pub timestamp: u64,
    pub space_points: usize,
    pub diameter: f64,
    pub min_gap: f64,
    pub entropy: EntropyParams,
    pub entropy_checks: Vec<EntropyCheck>,
    pub certificate: MomentCertificate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyReport>,
    pub lemma_b27: Vec<LemmaOutcome>,
    pub corollary: Vec<CorollaryOutcome>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tightness: Option<TightnessTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clt: Option<CltOutcome>,
    pub ks: Vec<KsDiagnostic>,
    pub pass: bool,
}

impl PipelineReport {
    /// Every bound comparison, in report order.
    pub fn reports(&self) -> Vec<&VerificationReport> {
        let mut out = Vec::new();
        for l in &self.lemma_b27 {
            out.push(&l.report);
            out.extend(l.structural_report.as_ref());
        }
        for c in &self.corollary {
            out.push(&c.quotient);
            out.extend(&c.reports);
        }
        if let Some(clt) = &self.clt {
            out.extend(&clt.factor_four);
        }
        out
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

fn entropy_params(
    space: &FiniteMetricSpace,
    cfg: &EntropyConfig,
    opts: &CoverOptions,
) -> Result<EntropyParams> {
    let mut params = match cfg.c {
        Some(c) => EntropyParams {
            c,
            t: cfg.t,
            eta_max: space.diameter(),
        },
        None => fit_entropy_params(space, &critical_radii(space), Some(cfg.t), opts)?,
    };
    if let Some(d) = cfg.diam {
        params.eta_max = d;
    }
    Ok(params)
}

/// Runs every configured check. Errors abort the run; failed comparisons do not.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<PipelineReport> {
    cfg.validate()?;
    let space = cfg.load_space()?;
    let opts = cfg.cover_options();
    let min_gap = space.min_gap()?;
    let entropy = entropy_params(&space, &cfg.entropy, &opts)?;
    let entropy_checks = check_entropy(&space, &entropy, &critical_radii(&space), &opts)?;
    let cert = certificate(&cfg.process, cfg.p)?;
    if cert.q <= entropy.t {
        return Err(Error::ParamViolation(format!(
            "need q > t, got q = {}, t = {}",
            cert.q, entropy.t
        )));
    }

    let needs_paths = cfg
        .checks
        .iter()
        .any(|c| matches!(c, Check::LemmaB27 | Check::Corollary));
    let ensemble = if needs_paths {
        Some(simulate(&space, &cfg.process, cfg.replications, cfg.seed)?)
    } else {
        None
    };

    let mut family_report = None;
    let mut lemma_b27 = Vec::new();
    if cfg.checks.contains(&Check::LemmaB27) {
        let ens = ensemble.as_ref().expect("paths simulated");
        let family = ChainingFamily::build(&space, &opts)?;
        family_report = Some(validate_family(&space, &family)?);
        for &delta in &cfg.deltas {
            lemma_b27.push(verify_lemma_b27(
                &space,
                ens,
                &cert,
                &entropy,
                delta,
                cfg.prefactor,
                &opts,
                Some(&family),
            )?);
        }
    }
    let mut corollary = Vec::new();
    if cfg.checks.contains(&Check::Corollary) {
        let ens = ensemble.as_ref().expect("paths simulated");
        for &beta in &cfg.betas {
            corollary.push(verify_corollary(
                &space,
                ens,
                &cert,
                &entropy,
                beta,
                &cfg.deltas,
                cfg.tol,
            )?);
        }
    }

    let mut tightness = None;
    let mut clt = None;
    let mut ks = Vec::new();
    if let Some(tc) = cfg.tightness.as_ref().filter(|_| {
        cfg.checks
            .iter()
            .any(|c| matches!(c, Check::Tightness | Check::Clt))
    }) {
        let sums = simulate_partial_sums(
            &space,
            &cfg.process,
            &tc.n_values,
            tc.replications,
            cfg.seed,
        )?;
        if cfg.checks.contains(&Check::Tightness) {
            tightness = Some(tightness_table(&space, &sums, &tc.deltas, &tc.epsilons)?);
        }
        if cfg.checks.contains(&Check::Clt) {
            let cert2 = certificate(&cfg.process, 2.0)?;
            clt = Some(verify_clt_moment_chain(&space, &sums, &cert2)?);
            ks = ks_diagnostics(&space, &sums, &cert2)?;
        }
    }

    let mut report = PipelineReport {
        config: cfg.clone(),
        timestamp: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        space_points: space.len(),
        diameter: space.diameter(),
        min_gap,
        entropy,
        entropy_checks,
        certificate: cert,
        family: family_report,
        lemma_b27,
        corollary,
        tightness,
        clt,
        ks,
        pass: false,
    };
    report.pass = report.reports().iter().all(|r| r.pass)
        && report.family.as_ref().is_none_or(|f| f.all_pass())
        && report.clt.as_ref().is_none_or(|c| c.all_pass())
        && report.entropy_checks.iter().all(|c| c.ok);
    Ok(report)
}

/// KS distance of the marginal at the point farthest from the origin to its
/// Gaussian limit `N(0, M·|θ|^q)`, per `n`.
fn ks_diagnostics(
    space: &FiniteMetricSpace,
    sums: &BTreeMap<usize, crate::simulate::PathEnsemble>,
    cert2: &MomentCertificate,
) -> Result<Vec<KsDiagnostic>> {
    let Some(coords) = space.coords() else {
        return Ok(Vec::new());
    };
    let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let point = (0..space.len())
        .max_by(|&a, &b| norm(&coords[a]).total_cmp(&norm(&coords[b])))
        .expect("nonempty space");
    let sd = (cert2.m * norm(&coords[point]).powf(cert2.q)).sqrt();
    sums.iter()
        .map(|(&n, ens)| {
            let xs: Vec<f64> = ens.paths().map(|x| x[point]).collect();
            Ok(KsDiagnostic {
                n,
                point,
                sd,
                distance: ks_distance_normal(&xs, 0.0, sd)?,
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct SummaryRow<'a> {
    statistic: &'a str,
    delta: Option<f64>,
    estimate: f64,
    std_error: f64,
    bound: f64,
    margin: f64,
    pass: bool,
}

/// Writes `report.json` and `summary.csv` into `dir`.
pub fn write_outputs(report: &PipelineReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json = serde_json::to_string_pretty(report)?;
    let path = dir.join("report.json");
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    let path = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path)?;
    for r in report.reports() {
        w.serialize(SummaryRow {
            statistic: &r.statistic,
            delta: r.delta,
            estimate: r.estimate.mean,
            std_error: r.estimate.std_error,
            bound: r.bound,
            margin: r.margin,
            pass: r.pass,
        })?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(())
}

/// Caps the global worker pool from `CHAINKIT_THREADS`, if set.
pub fn init_thread_pool() -> Result<()> {
    let Ok(v) = std::env::var("CHAINKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| {
        Error::InvalidInput(format!(
            "CHAINKIT_THREADS must be a positive integer, got {v:?}"
        ))
    })?;
    if n == 0 {
        return Err(Error::InvalidInput("CHAINKIT_THREADS must be >= 1".into()));
    }
    // a pool that is already initialized keeps its size
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}
