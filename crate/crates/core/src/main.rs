use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use chainkit::bounds::{
    holder_constant, lemma_b27_bound, lemma_b27_levels, BoundParams, Prefactor,
};
use chainkit::chaining::{validate_family, ChainingFamily};
use chainkit::covering::{covering_number, CoverOptions, EntropyParams, DEFAULT_EXACT_LIMIT};
use chainkit::error::{Error, Result};
use chainkit::metric_space::FiniteMetricSpace;
use chainkit::pair_reduction::build_pair_set;
use chainkit::pipeline::{init_thread_pool, run_pipeline, write_outputs, ExperimentConfig};
use chainkit::simulate::{
    load_ensembles, save_ensembles, simulate, simulate_partial_sums, MomentCertificate,
    PathEnsemble, ProcessKind,
};
use chainkit::verify::{
    tightness_table, verify_clt_moment_chain, verify_corollary, verify_lemma_b27,
};

/// Covering numbers, chaining families, pair sets and moment-bound verification
/// on finite metric spaces.
///
/// Set CHAINKIT_THREADS to cap the number of worker threads.
#[derive(Parser)]
#[command(name = "chainkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct NetArgs {
    /// Use greedy nets instead of minimum ones.
    #[arg(long, conflicts_with = "exact")]
    greedy: bool,
    /// Use minimum nets (default).
    #[arg(long)]
    exact: bool,
    /// Largest point count solved exactly (at most 128).
    #[arg(long, default_value_t = DEFAULT_EXACT_LIMIT)]
    exact_limit: usize,
}

impl NetArgs {
    fn options(&self) -> CoverOptions {
        let base = if self.greedy {
            CoverOptions::greedy()
        } else {
            CoverOptions::exact()
        };
        base.with_exact_limit(self.exact_limit)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Covering number N(η) with closed balls centered in the set.
    Cover {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        eta: f64,
        #[command(flatten)]
        net: NetArgs,
    },
    /// Dyadic chaining family {Θ_n, φ_n} and its structural checks.
    Chain {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        net: NetArgs,
    },
    /// Talagrand pair set U with its peeling trace.
    Pairs {
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "A")]
        a: f64,
        #[arg(long)]
        r: u32,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Explicit constants of the moment bounds.
    Bound {
        #[command(subcommand)]
        which: BoundCommand,
    },
    /// Simulate path ensembles into the binary paths format.
    Simulate {
        #[arg(long, value_enum, default_value_t = Kind::Fbm)]
        kind: Kind,
        /// Hurst index of the fBm kind.
        #[arg(long = "H", default_value_t = 0.5)]
        hurst: f64,
        #[arg(long)]
        space: PathBuf,
        #[arg(long = "R")]
        replications: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write partial-sum ensembles S_n for these n instead of one ensemble.
        #[arg(long, value_delimiter = ',')]
        n_values: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo verification against the bounds.
    Verify {
        #[arg(value_enum)]
        which: VerifyKind,
        #[arg(long)]
        paths: PathBuf,
        /// Needed when the paths file does not embed its space.
        #[arg(long)]
        space: Option<PathBuf>,
        /// {"M", "p", "q", "C", "t", "beta", "diam"}
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        deltas: Vec<f64>,
        /// Hölder orders for the corollary check; defaults to params.beta.
        #[arg(long, value_delimiter = ',')]
        betas: Vec<f64>,
        /// Thresholds for the tightness table.
        #[arg(long, value_delimiter = ',')]
        epsilons: Vec<f64>,
        #[arg(long, value_enum, default_value_t = PrefactorArg::Statement)]
        prefactor: PrefactorArg,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        net: NetArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate, construct, bound and verify from one config; writes report.json and summary.csv.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "R")]
        replications: Option<usize>,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BoundCommand {
    /// Bound on E sup_{d ≤ δ} d(X_θ, X_ϑ)^p from N(δ/4).
    LemmaB27 {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        params: PathBuf,
        #[arg(long, value_enum, default_value_t = PrefactorArg::Statement)]
        prefactor: PrefactorArg,
        #[command(flatten)]
        net: NetArgs,
    },
    /// Hölder constant L = L1 + L2.
    Holder {
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Fbm,
    Poisson,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrefactorArg {
    Statement,
    Proof,
}

impl From<PrefactorArg> for Prefactor {
    fn from(p: PrefactorArg) -> Self {
        match p {
            PrefactorArg::Statement => Prefactor::Statement,
            PrefactorArg::Proof => Prefactor::Proof,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyKind {
    Corollary,
    LemmaB27,
    Tightness,
    Clt,
}

fn read_params(path: &Path) -> Result<BoundParams> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => std::fs::write(path, json).map_err(|e| Error::Io {
            path: path.into(),
            source: e,
        }),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn split_params(params: &BoundParams) -> (MomentCertificate, EntropyParams) {
    (
        MomentCertificate {
            m: params.m,
            p: params.p,
            q: params.q,
            exact: false,
        },
        EntropyParams {
            c: params.c,
            t: params.t,
            eta_max: params.diam,
        },
    )
}

fn run(cli: Cli) -> Result<i32> {
    init_thread_pool()?;
    match cli.command {
        Command::Cover { input, eta, net } => {
            let space = FiniteMetricSpace::load(&input)?;
            emit(&covering_number(&space, eta, &net.options())?, None)?;
        }
        Command::Chain { input, out, net } => {
            let space = FiniteMetricSpace::load(&input)?;
            let family = ChainingFamily::build(&space, &net.options())?;
            let report = validate_family(&space, &family)?;
            emit(&family, out.as_deref())?;
            if out.is_some() {
                emit(&report, None)?;
            }
            return Ok(if report.all_pass() { 0 } else { 1 });
        }
        Command::Pairs {
            input,
            a,
            r,
            c,
            out,
        } => {
            let space = FiniteMetricSpace::load(&input)?;
            let red = build_pair_set(&space, a, r, c)?;
            let checks = red.check_invariants(&space);
            emit(&red, out.as_deref())?;
            if out.is_some() {
                emit(&checks, None)?;
            }
            return Ok(if checks.iter().all(|c| c.pass) { 0 } else { 1 });
        }
        Command::Bound { which } => match which {
            BoundCommand::LemmaB27 {
                space,
                delta,
                params,
                prefactor,
                net,
            } => {
                let space = FiniteMetricSpace::load(&space)?;
                let params = read_params(&params)?;
                let opts = net.options();
                let bound = lemma_b27_bound(&space, delta, &params, prefactor.into(), &opts)?;
                let levels = match lemma_b27_levels(&space, delta, &opts) {
                    Ok(l) => Some(l),
                    Err(Error::TrivialCase { .. }) => None,
                    Err(e) => return Err(e),
                };
                emit(
                    &serde_json::json!({ "delta": delta, "bound": bound, "levels": levels }),
                    None,
                )?;
            }
            BoundCommand::Holder { params, tol } => {
                emit(&holder_constant(&read_params(&params)?, tol)?, None)?;
            }
        },
        Command::Simulate {
            kind,
            hurst,
            space,
            replications,
            seed,
            n_values,
            out,
        } => {
            let space = FiniteMetricSpace::load(&space)?;
            let kind = match kind {
                Kind::Fbm => ProcessKind::Fbm { hurst },
                Kind::Poisson => ProcessKind::Poisson,
            };
            if n_values.is_empty() {
                let ens = simulate(&space, &kind, replications, seed)?;
                save_ensembles(&out, &[&ens], Some(&space))?;
            } else {
                let sums = simulate_partial_sums(&space, &kind, &n_values, replications, seed)?;
                let all: Vec<&PathEnsemble> = sums.values().collect();
                save_ensembles(&out, &all, Some(&space))?;
            }
        }
        Command::Verify {
            which,
            paths,
            space,
            params,
            deltas,
            betas,
            epsilons,
            prefactor,
            tol,
            net,
            out,
        } => {
            let (ensembles, embedded) = load_ensembles(&paths)?;
            let space = match (space, embedded) {
                (Some(p), _) => FiniteMetricSpace::load(&p)?,
                (None, Some(s)) => s,
                (None, None) => {
                    return Err(Error::InvalidInput(
                        "paths file has no embedded space; pass --space".into(),
                    ))
                }
            };
            let first = ensembles
                .first()
                .ok_or_else(|| Error::InvalidInput("paths file is empty".into()))?;
            let params = params.as_deref().map(read_params).transpose()?;
            let need_params =
                || params.ok_or_else(|| Error::InvalidInput("this check needs --params".into()));
            let opts = net.options();
            let (value, pass) = match which {
                VerifyKind::Corollary => {
                    let params = need_params()?;
                    let (cert, entropy) = split_params(&params);
                    let betas = if betas.is_empty() {
                        vec![params.beta]
                    } else {
                        betas
                    };
                    let outs = betas
                        .iter()
                        .map(|&b| verify_corollary(&space, first, &cert, &entropy, b, &deltas, tol))
                        .collect::<Result<Vec<_>>>()?;
                    let pass = outs.iter().all(|o| o.all_pass());
                    (serde_json::to_value(outs)?, pass)
                }
                VerifyKind::LemmaB27 => {
                    let params = need_params()?;
                    let (cert, entropy) = split_params(&params);
                    let family = ChainingFamily::build(&space, &opts).ok();
                    let outs = deltas
                        .iter()
                        .map(|&d| {
                            verify_lemma_b27(
                                &space,
                                first,
                                &cert,
                                &entropy,
                                d,
                                prefactor.into(),
                                &opts,
                                family.as_ref(),
                            )
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let pass = outs.iter().all(|o| o.all_pass());
                    (serde_json::to_value(outs)?, pass)
                }
                VerifyKind::Tightness => {
                    let sums = by_terms(&ensembles);
                    let table = tightness_table(&space, &sums, &deltas, &epsilons)?;
                    (serde_json::to_value(table)?, true)
                }
                VerifyKind::Clt => {
                    let params = need_params()?;
                    let (mut cert, _) = split_params(&params);
                    cert.exact = true;
                    let outcome = verify_clt_moment_chain(&space, &by_terms(&ensembles), &cert)?;
                    let pass = outcome.all_pass();
                    (serde_json::to_value(outcome)?, pass)
                }
            };
            emit(
                &serde_json::json!({ "inputs": {
                        "paths": paths, "params": params, "deltas": deltas,
                        "epsilons": epsilons, "prefactor": Prefactor::from(prefactor),
                    },
                    "result": value, "pass": pass }),
                out.as_deref(),
            )?;
            return Ok(if pass { 0 } else { 1 });
        }
        Command::Pipeline {
            config,
            seed,
            replications,
            out,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(r) = replications {
                cfg.replications = r;
            }
            if let Some(o) = out {
                cfg.output = o;
            }
            let report = run_pipeline(&cfg)?;
            write_outputs(&report, &cfg.output)?;
            eprintln!(
                "{} checks, pass = {}, outputs in {}",
                report.reports().len(),
                report.pass,
                cfg.output.display()
            );
            return Ok(report.exit_code());
        }
    }
    Ok(0)
}

/// Ensembles keyed by their number of summands (1 for plain ensembles).
fn by_terms(ensembles: &[PathEnsemble]) -> BTreeMap<usize, PathEnsemble> {
    ensembles
        .iter()
        .map(|e| (e.meta.sum_terms.unwrap_or(1), e.clone()))
        .collect()
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
