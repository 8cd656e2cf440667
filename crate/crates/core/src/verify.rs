//! Monte Carlo estimators for the expectations in the moment bounds, and the
//! tightness and partial-sum diagnostics.
//!
//! Every estimator maps replications to per-path statistics in parallel,
//! collects them in replication order and reduces by pairwise summation, so
//! results do not depend on the thread count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bounds::{
    corollary_bound, holder_constant, lemma_b27_from_count, lemma_b27_structural_bound,
    BoundParams, HolderConstant, Prefactor, StructuralBound,
};
use crate::chaining::ChainingFamily;
use crate::covering::{covering_number, CoverOptions, EntropyParams};
use crate::error::{Error, Result};
use crate::metric_space::FiniteMetricSpace;
use crate::pair_reduction::value_distance;
use crate::simulate::{MomentCertificate, PathEnsemble};

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_9;

/// A pass this close to its bound (`mean + 3·SE > bound / NEAR_BOUND_RATIO`)
/// is flagged: the constants are loose enough that it should not happen.
pub const NEAR_BOUND_RATIO: f64 = 10.0;

/// Finite sets only see a lower bound of the countable supremum.
pub const FINITE_SUP_NOTE: &str =
    "supremum taken over the finite point set; it lower-bounds the supremum over the full parameter set";

fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 64 {
        return x.iter().sum();
    }
    let (a, b) = x.split_at(x.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub statistic: String,
    pub mean: f64,
    pub std_error: f64,
    #[serde(rename = "R")]
    pub replications: usize,
    /// Set when the supremum ran over an empty pair set; the zero is not evidence.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub empty_sup: bool,
}

impl McEstimate {
    pub fn from_samples(statistic: impl Into<String>, samples: &[f64]) -> Self {
        let r = samples.len();
        let mean = pairwise_sum(samples) / r as f64;
        let std_error = if r > 1 {
            let sq: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
            (pairwise_sum(&sq) / (r - 1) as f64).sqrt() / (r as f64).sqrt()
        } else {
            0.0
        };
        McEstimate {
            statistic: statistic.into(),
            mean,
            std_error,
            replications: r,
            empty_sup: false,
        }
    }

    fn empty(statistic: impl Into<String>, replications: usize) -> Self {
        McEstimate {
            statistic: statistic.into(),
            mean: 0.0,
            std_error: 0.0,
            replications,
            empty_sup: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub statistic: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub estimate: McEstimate,
    pub bound: f64,
    /// `(bound − mean)/SE`; infinite when the standard error vanishes.
    pub margin: f64,
    pub pass: bool,
    pub near_bound: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl VerificationReport {
    pub fn new(delta: Option<f64>, estimate: McEstimate, bound: f64) -> Self {
        let upper = estimate.mean + 3.0 * estimate.std_error;
        let margin = if estimate.std_error > 0.0 {
            (bound - estimate.mean) / estimate.std_error
        } else if bound >= estimate.mean {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        VerificationReport {
            statistic: estimate.statistic.clone(),
            delta,
            pass: upper <= bound,
            near_bound: upper > bound / NEAR_BOUND_RATIO,
            margin,
            bound,
            estimate,
            note: None,
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

fn check_ensemble(space: &FiniteMetricSpace, ens: &PathEnsemble) -> Result<()> {
    if ens.points != space.len() {
        return Err(Error::Verification(format!(
            "ensemble has {} points, space has {}",
            ens.points,
            space.len()
        )));
    }
    if ens.replications == 0 || ens.dim == 0 {
        return Err(Error::Verification("empty ensemble".into()));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::ParamViolation(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

fn per_path<F>(ens: &PathEnsemble, f: F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    ens.values.par_chunks(ens.points * ens.dim).map(f).collect()
}

fn sup_over(path: &[f64], dim: usize, pairs: &[(usize, usize)]) -> f64 {
    pairs
        .iter()
        .map(|&(i, j)| value_distance(path, dim, i, j))
        .fold(0.0, f64::max)
}

/// `w(f, δ) = max{|f(θ) − f(ϑ)| : d(θ, ϑ) ≤ δ}`, zero when no distinct pair qualifies.
pub fn empirical_modulus(space: &FiniteMetricSpace, path: &[f64], dim: usize, delta: f64) -> f64 {
    sup_over(path, dim, &space.pairs_within(delta))
}

/// `E sup_{d(θ,ϑ) ≤ δ} |X_θ − X_ϑ|^p`.
pub fn estimate_sup_increment_moment(
    space: &FiniteMetricSpace,
    ens: &PathEnsemble,
    delta: f64,
    p: f64,
) -> Result<McEstimate> {
    check_ensemble(space, ens)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidDelta(delta));
    }
    check_positive("p", p)?;
    let statistic = format!("sup_increment_moment(p={p})");
    let pairs = space.pairs_within(delta);
    if pairs.is_empty() {
        return Ok(McEstimate::empty(statistic, ens.replications));
    }
    let samples = per_path(ens, |x| sup_over(x, ens.dim, &pairs).powf(p));
    Ok(McEstimate::from_samples(statistic, &samples))
}

/// `E sup_{θ ≠ ϑ} |X_θ − X_ϑ|^p / d(θ, ϑ)^{βp}`.
pub fn estimate_holder_quotient_moment(
    space: &FiniteMetricSpace,
    ens: &PathEnsemble,
    beta: f64,
    p: f64,
) -> Result<McEstimate> {
    check_ensemble(space, ens)?;
    if space.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            have: space.len(),
        });
    }
    check_positive("p", p)?;
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::ParamViolation(format!(
            "beta must be >= 0, got {beta}"
        )));
    }
    let n = space.len();
    let weighted: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, space.d(i, j).powf(-beta * p)))
        .collect();
    let samples = per_path(ens, |x| {
        weighted
            .iter()
            .map(|&(i, j, w)| value_distance(x, ens.dim, i, j).powf(p) * w)
            .fold(0.0, f64::max)
    });
    Ok(McEstimate::from_samples(
        format!("holder_quotient_moment(beta={beta},p={p})"),
        &samples,
    ))
}

/// `E|X_θ − X_ϑ|^p` for one pair.
pub fn estimate_pair_moment(ens: &PathEnsemble, i: usize, j: usize, p: f64) -> McEstimate {
    let samples = per_path(ens, |x| value_distance(x, ens.dim, i, j).powf(p));
    McEstimate::from_samples(format!("pair_moment({i},{j},p={p})"), &samples)
}

fn bound_params(cert: &MomentCertificate, entropy: &EntropyParams, beta: f64) -> BoundParams {
    BoundParams {
        m: cert.m,
        p: cert.p,
        q: cert.q,
        c: entropy.c,
        t: entropy.t,
        beta,
        diam: entropy.eta_max,
    }
}

fn require_q_above_t(cert: &MomentCertificate, entropy: &EntropyParams) -> Result<()> {
    if cert.q <= entropy.t {
        return Err(Error::ParamViolation(format!(
            "need q > t, got q = {}, t = {}",
            cert.q, entropy.t
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorollaryOutcome {
    pub beta: f64,
    pub params: BoundParams,
    pub holder: HolderConstant,
    /// The Hölder-quotient moment against `L` itself.
    pub quotient: VerificationReport,
    /// One report per `δ`, against `L·δ^{βp}`.
    pub reports: Vec<VerificationReport>,
}

impl CorollaryOutcome {
    pub fn all_pass(&self) -> bool {
        self.quotient.pass && self.reports.iter().all(|r| r.pass)
    }
}

/// Compares `E sup_{d ≤ δ} |X_θ − X_ϑ|^p` with `L·δ^{βp}` on every `δ` of the grid.
pub fn verify_corollary(
    space: &FiniteMetricSpace,
    ens: &PathEnsemble,
    cert: &MomentCertificate,
    entropy: &EntropyParams,
    beta: f64,
    deltas: &[f64],
    tol: f64,
) -> Result<CorollaryOutcome> {
    require_q_above_t(cert, entropy)?;
    if deltas.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let params = bound_params(cert, entropy, beta);
    let holder = holder_constant(&params, tol)?;
    let p = cert.p;
    let quotient = VerificationReport::new(
        None,
        estimate_holder_quotient_moment(space, ens, beta, p)?,
        holder.l,
    )
    .with_note(FINITE_SUP_NOTE);
    let mut reports = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let est = estimate_sup_increment_moment(space, ens, delta, p)?;
        let bound = corollary_bound(holder.l, delta, beta, p);
        reports.push(VerificationReport::new(Some(delta), est, bound).with_note(FINITE_SUP_NOTE));
    }
    Ok(CorollaryOutcome {
        beta,
        params,
        holder,
        quotient,
        reports,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaOutcome {
    pub delta: f64,
    /// `N(δ/4)` of the space.
    pub n4: usize,
    pub variant: Prefactor,
    /// `δ` below the minimal gap: nothing to bound.
    pub trivial: bool,
    pub report: VerificationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structural: Option<StructuralBound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structural_report: Option<VerificationReport>,
}

impl LemmaOutcome {
    pub fn all_pass(&self) -> bool {
        self.report.pass && self.structural_report.as_ref().is_none_or(|r| r.pass)
    }
}

/// Compares `E sup_{d ≤ δ} |X_θ − X_ϑ|^p` with the local-increment bound built from
/// the space's own `N(δ/4)`. With a chaining family and `p ≥ 1`, the per-instance
/// inequality chain is evaluated and checked as well.
#[allow(clippy::too_many_arguments)]
pub fn verify_lemma_b27(
    space: &FiniteMetricSpace,
    ens: &PathEnsemble,
    cert: &MomentCertificate,
    entropy: &EntropyParams,
    delta: f64,
    variant: Prefactor,
    opts: &CoverOptions,
    family: Option<&ChainingFamily>,
) -> Result<LemmaOutcome> {
    require_q_above_t(cert, entropy)?;
    let est = estimate_sup_increment_moment(space, ens, delta, cert.p)?;
    let trivial = est.empty_sup;
    let n4 = covering_number(space, delta / 4.0, opts)?.count;
    // β does not enter this bound
    let params = bound_params(cert, entropy, 0.0);
    let bound = lemma_b27_from_count(n4, delta, &params, variant)?;
    let mut report = VerificationReport::new(Some(delta), est.clone(), bound);
    if trivial {
        report = report
            .with_note("delta below the minimal gap: no distinct pair, bound holds trivially");
    }
    let (structural, structural_report) = match family {
        Some(fam) if cert.p >= 1.0 && !trivial => {
            let sb = lemma_b27_structural_bound(space, fam, delta, cert.m, cert.p, cert.q)?;
            let mut est = est;
            est.statistic = format!("{} vs instance chain", est.statistic);
            let rep = VerificationReport::new(Some(delta), est, sb.value);
            (Some(sb), Some(rep))
        }
        _ => (None, None),
    };
    Ok(LemmaOutcome {
        delta,
        n4,
        variant,
        trivial,
        report,
        structural,
        structural_report,
    })
}

/// Wilson score interval for `hits` successes out of `n`.
pub fn wilson_interval(hits: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let ph = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (ph + z2 / (2.0 * nf)) / denom;
    let half = z * (ph * (1.0 - ph) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessEntry {
    pub n: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub hits: usize,
    #[serde(rename = "R")]
    pub replications: usize,
    pub probability: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessTable {
    pub entries: Vec<TightnessEntry>,
}

impl TightnessTable {
    /// The entry with the largest probability over `n` at a given `(δ, ε)`.
    pub fn max_over_n(&self, delta: f64, epsilon: f64) -> Option<&TightnessEntry> {
        self.entries
            .iter()
            .filter(|e| e.delta == delta && e.epsilon == epsilon)
            .max_by(|a, b| a.probability.total_cmp(&b.probability))
    }

    /// Whether `max_n P(w ≥ ε)` is nonincreasing as `δ` decreases, up to overlap
    /// of the 99% Wilson intervals.
    pub fn monotone_in_delta(&self, epsilon: f64) -> bool {
        let mut deltas: Vec<f64> = self
            .entries
            .iter()
            .filter(|e| e.epsilon == epsilon)
            .map(|e| e.delta)
            .collect();
        deltas.sort_by(|a, b| b.total_cmp(a));
        deltas.dedup();
        deltas.windows(2).all(|w| {
            match (
                self.max_over_n(w[0], epsilon),
                self.max_over_n(w[1], epsilon),
            ) {
                (Some(big), Some(small)) => small.ci_low <= big.ci_high,
                _ => true,
            }
        })
    }
}

/// Empirical `P(w(X_n, δ) ≥ ε)` with 99% Wilson intervals.
pub fn tightness_table(
    space: &FiniteMetricSpace,
    ensembles: &BTreeMap<usize, PathEnsemble>,
    deltas: &[f64],
    epsilons: &[f64],
) -> Result<TightnessTable> {
    if ensembles.is_empty() || deltas.is_empty() || epsilons.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut entries = Vec::new();
    for (&n, ens) in ensembles {
        check_ensemble(space, ens)?;
        for &delta in deltas {
            if !(delta > 0.0 && delta.is_finite()) {
                return Err(Error::InvalidDelta(delta));
            }
            let pairs = space.pairs_within(delta);
            let moduli = per_path(ens, |x| sup_over(x, ens.dim, &pairs));
            for &epsilon in epsilons {
                let hits = moduli.iter().filter(|&&w| w >= epsilon).count();
                let (ci_low, ci_high) = wilson_interval(hits, ens.replications, Z99);
                entries.push(TightnessEntry {
                    n,
                    delta,
                    epsilon,
                    hits,
                    replications: ens.replications,
                    probability: hits as f64 / ens.replications as f64,
                    ci_low,
                    ci_high,
                });
            }
        }
    }
    Ok(TightnessTable { entries })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub n: usize,
    pub i: usize,
    pub j: usize,
    pub expected: f64,
    pub estimate: f64,
    pub std_error: f64,
    /// `(estimate − expected)/SE`
    pub z: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltOutcome {
    /// Per pair: `sup_n E|S_n(θ) − S_n(ϑ)|²` against `4·M·d^q`.
    pub factor_four: Vec<VerificationReport>,
    /// Per `(n, pair)`: the scalar identity `E|S_n(θ) − S_n(ϑ)|² = M·d^q`,
    /// only when the certificate is exact.
    pub identity: Vec<IdentityCheck>,
    pub identity_tolerance_se: f64,
}

impl CltOutcome {
    pub fn all_pass(&self) -> bool {
        self.factor_four.iter().all(|r| r.pass) && self.identity.iter().all(|c| c.pass)
    }
}

/// Second-moment checks along the partial-sum sequence.
pub fn verify_clt_moment_chain(
    space: &FiniteMetricSpace,
    ensembles: &BTreeMap<usize, PathEnsemble>,
    cert: &MomentCertificate,
) -> Result<CltOutcome> {
    const IDENTITY_SE: f64 = 5.0;
    if cert.p != 2.0 {
        return Err(Error::WrongOrder(cert.p));
    }
    if ensembles.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for ens in ensembles.values() {
        check_ensemble(space, ens)?;
    }
    let n = space.len();
    let mut factor_four = Vec::new();
    let mut identity = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let model = cert.m * space.d(i, j).powf(cert.q);
            let mut worst: Option<McEstimate> = None;
            for (&terms, ens) in ensembles {
                let est = estimate_pair_moment(ens, i, j, 2.0);
                if cert.exact {
                    let z = if est.std_error > 0.0 {
                        (est.mean - model) / est.std_error
                    } else if est.mean == model {
                        0.0
                    } else {
                        f64::INFINITY
                    };
                    identity.push(IdentityCheck {
                        n: terms,
                        i,
                        j,
                        expected: model,
                        estimate: est.mean,
                        std_error: est.std_error,
                        z,
                        pass: z.abs() <= IDENTITY_SE,
                    });
                }
                if worst.as_ref().is_none_or(|w| est.mean > w.mean) {
                    worst = Some(est);
                }
            }
            let mut est = worst.expect("nonempty ensembles");
            est.statistic = format!("sup_n second_moment({i},{j})");
            factor_four.push(VerificationReport::new(
                Some(space.d(i, j)),
                est,
                4.0 * model,
            ));
        }
    }
    Ok(CltOutcome {
        factor_four,
        identity,
        identity_tolerance_se: IDENTITY_SE,
    })
}

/// Kolmogorov-Smirnov distance between the empirical law of `samples` and `N(mean, sd²)`.
pub fn ks_distance_normal(samples: &[f64], mean: f64, sd: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("no samples".into()));
    }
    let normal = Normal::new(mean, sd).map_err(|e| Error::ParamViolation(e.to_string()))?;
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    Ok(xs
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = normal.cdf(x);
            (f - k as f64 / n).max((k + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max))
}

/// Per pair: empirical `E|X_θ − X_ϑ|^p` divided by `M·d^q`, with its relative standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertificateRatio {
    pub i: usize,
    pub j: usize,
    pub ratio: f64,
    pub rel_se: f64,
}

pub fn certificate_ratios(
    space: &FiniteMetricSpace,
    ens: &PathEnsemble,
    cert: &MomentCertificate,
) -> Result<Vec<CertificateRatio>> {
    check_ensemble(space, ens)?;
    let n = space.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let model = cert.m * space.d(i, j).powf(cert.q);
            let est = estimate_pair_moment(ens, i, j, cert.p);
            out.push(CertificateRatio {
                i,
                j,
                ratio: est.mean / model,
                rel_se: est.std_error / model,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{simulate, simulate_fbm_field, simulate_partial_sums, ProcessKind};

    fn grid(n: usize) -> FiniteMetricSpace {
        FiniteMetricSpace::uniform_grid(n, 0.0, 1.0).unwrap()
    }

    fn fixed(space: &FiniteMetricSpace, paths: Vec<Vec<f64>>) -> PathEnsemble {
        PathEnsemble {
            replications: paths.len(),
            points: space.len(),
            dim: 1,
            seed: 0,
            meta: crate::simulate::ProcessMeta {
                kind: ProcessKind::brownian(),
                sum_terms: None,
            },
            values: paths.concat(),
        }
    }

    #[test]
    fn modulus_examples() {
        let s = grid(3);
        assert_eq!(empirical_modulus(&s, &[0.0, 0.5, 1.0], 1, 0.5), 0.5);
        assert_eq!(empirical_modulus(&s, &[2.0; 3], 1, 1.0), 0.0);
        assert_eq!(empirical_modulus(&s, &[0.3, -1.0, 2.0], 1, 1.0), 3.0);
        assert_eq!(empirical_modulus(&s, &[0.3, -1.0, 2.0], 1, 0.1), 0.0);
    }

    #[test]
    fn estimate_statistics() {
        let est = McEstimate::from_samples("x", &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(est.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((est.std_error - sd / 2.0).abs() < 1e-15);
    }

    #[test]
    fn empty_pair_set_is_flagged() {
        let s = grid(3);
        let ens = fixed(&s, vec![vec![0.0, 1.0, 2.0]]);
        let est = estimate_sup_increment_moment(&s, &ens, 0.25, 2.0).unwrap();
        assert!(est.empty_sup);
        assert_eq!(est.mean, 0.0);
    }

    #[test]
    fn sup_moment_monotone_in_delta() {
        let s = grid(9);
        let (ens, _) = simulate_fbm_field(&s, 0.5, 300, 4, 2.0).unwrap();
        let mut last = 0.0;
        for delta in [0.125, 0.25, 0.5, 1.0] {
            let e = estimate_sup_increment_moment(&s, &ens, delta, 2.0)
                .unwrap()
                .mean;
            assert!(e >= last);
            last = e;
        }
    }

    #[test]
    fn quotient_reduces_to_increment_at_beta_zero() {
        let s = grid(5);
        let (ens, _) = simulate_fbm_field(&s, 0.5, 200, 8, 2.0).unwrap();
        let a = estimate_holder_quotient_moment(&s, &ens, 0.0, 2.0).unwrap();
        let b = estimate_sup_increment_moment(&s, &ens, 1.0, 2.0).unwrap();
        assert_eq!(a.mean, b.mean);
        let c = fixed(&s, vec![vec![1.0; 5]; 4]);
        assert_eq!(
            estimate_holder_quotient_moment(&s, &c, 0.2, 2.0)
                .unwrap()
                .mean,
            0.0
        );
    }

    #[test]
    fn report_rule() {
        let r = VerificationReport::new(None, McEstimate::from_samples("x", &[1.0, 3.0]), 10.0);
        assert_eq!(r.pass, r.margin >= 3.0);
        let zero = VerificationReport::new(None, McEstimate::from_samples("x", &[1.0, 1.0]), 1.0);
        assert!(zero.pass && zero.margin.is_infinite());
        let fail = VerificationReport::new(None, McEstimate::from_samples("x", &[2.0, 2.0]), 1.0);
        assert!(!fail.pass && fail.margin == f64::NEG_INFINITY);
    }

    #[test]
    fn corollary_rejects_q_le_t() {
        let s = grid(5);
        let (ens, mut cert) = simulate_fbm_field(&s, 0.5, 100, 1, 2.0).unwrap();
        let entropy = EntropyParams {
            c: 1.0,
            t: 1.0,
            eta_max: 1.0,
        };
        assert!(matches!(
            verify_corollary(&s, &ens, &cert, &entropy, 0.1, &[0.5], 1e-10),
            Err(Error::ParamViolation(_))
        ));
        cert.q = 0.5;
        assert!(verify_lemma_b27(
            &s,
            &ens,
            &cert,
            &entropy,
            0.5,
            Prefactor::Statement,
            &CoverOptions::default(),
            None
        )
        .is_err());
    }

    #[test]
    fn lemma_trivial_below_gap() {
        let s = grid(5);
        let (ens, cert) = simulate_fbm_field(&s, 0.5, 100, 1, 4.0).unwrap();
        let entropy = EntropyParams {
            c: 1.0,
            t: 1.0,
            eta_max: 1.0,
        };
        let out = verify_lemma_b27(
            &s,
            &ens,
            &cert,
            &entropy,
            0.1,
            Prefactor::Statement,
            &CoverOptions::default(),
            None,
        )
        .unwrap();
        assert!(out.trivial && out.report.pass && out.report.estimate.empty_sup);
    }

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(0, 100, Z99);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.07);
        let (lo, hi) = wilson_interval(50, 100, Z99);
        assert!((lo + hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tightness_edge_cases() {
        let s = grid(5);
        let sums = simulate_partial_sums(&s, &ProcessKind::brownian(), &[1, 4], 200, 3).unwrap();
        let table = tightness_table(&s, &sums, &[0.1, 0.5], &[0.0, 0.5]).unwrap();
        for e in &table.entries {
            if e.epsilon == 0.0 {
                assert_eq!(e.probability, 1.0);
            } else if e.delta == 0.1 {
                assert_eq!(e.probability, 0.0);
            }
        }
        assert!(table.max_over_n(0.5, 0.5).is_some());
    }

    #[test]
    fn clt_wrong_order() {
        let s = grid(3);
        let sums = simulate_partial_sums(&s, &ProcessKind::brownian(), &[1], 50, 3).unwrap();
        let cert = MomentCertificate {
            m: 3.0,
            p: 4.0,
            q: 2.0,
            exact: true,
        };
        assert!(matches!(
            verify_clt_moment_chain(&s, &sums, &cert),
            Err(Error::WrongOrder(_))
        ));
    }

    #[test]
    fn ks_small_for_gaussian_marginal() {
        let s = grid(3);
        let ens = simulate(&s, &ProcessKind::brownian(), 5000, 17).unwrap();
        let x: Vec<f64> = ens.paths().map(|p| p[2]).collect();
        assert!(ks_distance_normal(&x, 0.0, 1.0).unwrap() < 0.03);
        assert!(ks_distance_normal(&x, 3.0, 1.0).unwrap() > 0.5);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let s = grid(9);
        let (ens, _) = simulate_fbm_field(&s, 0.5, 1000, 2, 2.0).unwrap();
        let a = estimate_sup_increment_moment(&s, &ens, 0.25, 2.0).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| estimate_sup_increment_moment(&s, &ens, 0.25, 2.0).unwrap());
        assert_eq!(a, b);
    }
}
