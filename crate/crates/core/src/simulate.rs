//! Path ensembles on finite parameter sets.
//!
//! Every replication draws from its own ChaCha stream (`stream = replication
//! index`) keyed by the master seed, so generation is order-independent and
//! parallel runs are bit-identical to serial ones.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric_space::{FiniteMetricSpace, SpaceDocument};

/// Diagonal jitter, relative to the largest variance, tried in order.
pub const JITTER_SCHEDULE: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProcessKind {
    /// Origin-pinned fractional Brownian field, `Cov = ½(|θ|^{2H} + |ϑ|^{2H} − |θ−ϑ|^{2H})`.
    Fbm { hurst: f64 },
    /// Compensated unit-rate Poisson process `N(θ) − θ` on `[0, ∞)`.
    Poisson,
}

impl ProcessKind {
    pub fn brownian() -> Self {
        ProcessKind::Fbm { hurst: 0.5 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProcessKind::Fbm { .. } => "fbm",
            ProcessKind::Poisson => "poisson",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessMeta {
    #[serde(flatten)]
    pub kind: ProcessKind,
    /// Number of i.i.d. summands for a partial-sum ensemble.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sum_terms: Option<usize>,
}

/// `R` replications of a process on `n` points with values in `R^d`,
/// stored replication-major then point-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub replications: usize,
    pub points: usize,
    pub dim: usize,
    pub seed: u64,
    pub meta: ProcessMeta,
    pub values: Vec<f64>,
}

impl PathEnsemble {
    pub fn path(&self, r: usize) -> &[f64] {
        let w = self.points * self.dim;
        &self.values[r * w..(r + 1) * w]
    }

    pub fn paths(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks(self.points * self.dim)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// `(M, p, q)` with `E d(X_θ, X_ϑ)^p ≤ M d(θ, ϑ)^q`; `exact` when this holds with equality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentCertificate {
    #[serde(rename = "M")]
    pub m: f64,
    pub p: f64,
    pub q: f64,
    pub exact: bool,
}

/// `E|Z|^p = 2^{p/2} Γ((p+1)/2) / √π` for standard normal `Z`.
pub fn gaussian_abs_moment(p: f64) -> f64 {
    // (p−1)!! exactly for even integer orders
    if (2.0..=60.0).contains(&p) && p.fract() == 0.0 && (p as u32).is_multiple_of(2) {
        return (1..p as u32).step_by(2).map(f64::from).product();
    }
    (p / 2.0).exp2() * statrs::function::gamma::gamma((p + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
}

/// Moment certificate of a built-in process kind at order `p`.
pub fn certificate(kind: &ProcessKind, p: f64) -> Result<MomentCertificate> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::ParamViolation(format!(
            "p must be positive, got {p}"
        )));
    }
    match *kind {
        ProcessKind::Fbm { hurst } => Ok(MomentCertificate {
            m: gaussian_abs_moment(p),
            p,
            q: p * hurst,
            exact: true,
        }),
        ProcessKind::Poisson if p == 2.0 => Ok(MomentCertificate {
            m: 1.0,
            p,
            q: 1.0,
            exact: true,
        }),
        ProcessKind::Poisson => Err(Error::Simulation(format!(
            "no moment certificate for the Poisson kind at p = {p} (only p = 2)"
        ))),
    }
}

/// SplitMix64 finalizer; derives independent master seeds for sub-experiments.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    let mut z = master ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The generator for one replication.
pub fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

/// Draws one path of a process kind into `out` (length `n`, `d = 1`).
trait PathSampler: Sync {
    fn sample(&self, rng: &mut ChaCha8Rng, out: &mut [f64]);
}

/// Lower-triangular factor of the fBm covariance over the points of nonzero variance.
struct FbmSampler {
    active: Vec<usize>,
    factor: Vec<f64>,
    scratch_len: usize,
}

impl FbmSampler {
    fn new(space: &FiniteMetricSpace, hurst: f64) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::ParamViolation(format!(
                "Hurst index must lie in (0, 1), got {hurst}"
            )));
        }
        let coords = space.coords().ok_or_else(|| {
            Error::Simulation("fBm simulation needs a space with coordinates".into())
        })?;
        let two_h = 2.0 * hurst;
        let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let var: Vec<f64> = coords.iter().map(|x| norm(x).powf(two_h)).collect();
        let active: Vec<usize> = (0..space.len()).filter(|&i| var[i] > 0.0).collect();
        let k = active.len();
        let mut cov = DMatrix::<f64>::zeros(k, k);
        for (a, &i) in active.iter().enumerate() {
            for (b, &j) in active.iter().enumerate().take(a + 1) {
                let v = 0.5 * (var[i] + var[j] - space.d(i, j).powf(two_h));
                cov[(a, b)] = v;
                cov[(b, a)] = v;
            }
        }
        let scale = active.iter().map(|&i| var[i]).fold(0.0, f64::max);
        let mut last = 0.0;
        for &jitter in &JITTER_SCHEDULE {
            last = jitter;
            let mut m = cov.clone();
            for a in 0..k {
                m[(a, a)] += jitter * scale;
            }
            if let Some(ch) = m.cholesky() {
                let l = ch.l();
                let mut factor = Vec::with_capacity(k * (k + 1) / 2);
                for a in 0..k {
                    for b in 0..=a {
                        factor.push(l[(a, b)]);
                    }
                }
                return Ok(FbmSampler {
                    active,
                    factor,
                    scratch_len: k,
                });
            }
        }
        Err(Error::FactorizationFailure(last))
    }
}

impl PathSampler for FbmSampler {
    fn sample(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let k = self.scratch_len;
        let z: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut offset = 0;
        for (a, &i) in self.active.iter().enumerate() {
            let row = &self.factor[offset..offset + a + 1];
            out[i] = row.iter().zip(&z).map(|(l, z)| l * z).sum();
            offset += a + 1;
        }
    }
}

struct PoissonSampler {
    /// Point indices sorted by coordinate, with the gap from the previous point.
    order: Vec<(usize, f64)>,
    coords: Vec<f64>,
}

impl PoissonSampler {
    fn new(space: &FiniteMetricSpace) -> Result<Self> {
        let coords = match space.coords() {
            Some(c) if c[0].len() == 1 => c.iter().map(|x| x[0]).collect::<Vec<_>>(),
            _ => {
                return Err(Error::Simulation(
                    "the Poisson kind needs one-dimensional coordinates".into(),
                ))
            }
        };
        if coords.iter().any(|&x| x < 0.0) {
            return Err(Error::Simulation(
                "the Poisson kind needs nonnegative coordinates".into(),
            ));
        }
        let mut idx: Vec<usize> = (0..coords.len()).collect();
        idx.sort_by(|&a, &b| coords[a].total_cmp(&coords[b]));
        let mut prev = 0.0;
        let order = idx
            .into_iter()
            .map(|i| {
                let gap = coords[i] - prev;
                prev = coords[i];
                (i, gap)
            })
            .collect();
        Ok(PoissonSampler { order, coords })
    }
}

impl PathSampler for PoissonSampler {
    fn sample(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let mut count = 0.0;
        for &(i, gap) in &self.order {
            if gap > 0.0 {
                let jumps: f64 = Poisson::new(gap).expect("positive rate").sample(rng);
                count += jumps;
            }
            out[i] = count - self.coords[i];
        }
    }
}

use rand::distr::Distribution;

fn sampler(space: &FiniteMetricSpace, kind: &ProcessKind) -> Result<Box<dyn PathSampler>> {
    Ok(match *kind {
        ProcessKind::Fbm { hurst } => Box::new(FbmSampler::new(space, hurst)?),
        ProcessKind::Poisson => Box::new(PoissonSampler::new(space)?),
    })
}

fn check_replications(replications: usize) -> Result<()> {
    if replications == 0 {
        return Err(Error::InvalidInput("need at least one replication".into()));
    }
    Ok(())
}

/// `R` i.i.d. paths of a process kind on the points of the space.
pub fn simulate(
    space: &FiniteMetricSpace,
    kind: &ProcessKind,
    replications: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    check_replications(replications)?;
    let sampler = sampler(space, kind)?;
    let n = space.len();
    let mut values = vec![0.0; replications * n];
    values
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(r, out)| sampler.sample(&mut replication_rng(seed, r as u64), out));
    let ens = PathEnsemble {
        replications,
        points: n,
        dim: 1,
        seed,
        meta: ProcessMeta {
            kind: *kind,
            sum_terms: None,
        },
        values,
    };
    if !ens.all_finite() {
        return Err(Error::Simulation("non-finite sample".into()));
    }
    Ok(ens)
}

/// Exact fBm field sampling plus its moment certificate at order `p`.
pub fn simulate_fbm_field(
    space: &FiniteMetricSpace,
    hurst: f64,
    replications: usize,
    seed: u64,
    p: f64,
) -> Result<(PathEnsemble, MomentCertificate)> {
    let kind = ProcessKind::Fbm { hurst };
    let cert = certificate(&kind, p)?;
    Ok((simulate(space, &kind, replications, seed)?, cert))
}

/// Partial-sum processes `S_n = n^{-1/2} Σ_{i≤n} X_i` with fresh i.i.d. summands
/// per replication. The built-in kinds are centered, so no mean is subtracted.
pub fn simulate_partial_sums(
    space: &FiniteMetricSpace,
    kind: &ProcessKind,
    n_values: &[usize],
    replications: usize,
    seed: u64,
) -> Result<BTreeMap<usize, PathEnsemble>> {
    check_replications(replications)?;
    if n_values.contains(&0) {
        return Err(Error::InvalidInput("partial sums need n >= 1".into()));
    }
    let sampler = sampler(space, kind)?;
    let points = space.len();
    let mut out = BTreeMap::new();
    for &n in n_values {
        let sub_seed = derive_seed(seed, n as u64);
        let scale = 1.0 / (n as f64).sqrt();
        let mut values = vec![0.0; replications * points];
        values
            .par_chunks_mut(points)
            .enumerate()
            .for_each(|(r, acc)| {
                let mut rng = replication_rng(sub_seed, r as u64);
                let mut draw = vec![0.0; points];
                for _ in 0..n {
                    sampler.sample(&mut rng, &mut draw);
                    acc.iter_mut().zip(&draw).for_each(|(a, x)| *a += x);
                }
                acc.iter_mut().for_each(|a| *a *= scale);
            });
        out.insert(
            n,
            PathEnsemble {
                replications,
                points,
                dim: 1,
                seed: sub_seed,
                meta: ProcessMeta {
                    kind: *kind,
                    sum_terms: Some(n),
                },
                values,
            },
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    #[serde(rename = "R")]
    replications: usize,
    n: usize,
    d: usize,
    seed: u64,
    meta: ProcessMeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    space: Option<SpaceDocument>,
}

/// Writes ensembles back to back, each as a JSON header line followed by
/// `R·n·d` little-endian `f64` values.
pub fn write_ensembles<W: Write>(
    mut w: W,
    ensembles: &[&PathEnsemble],
    space: Option<&FiniteMetricSpace>,
) -> Result<()> {
    let ioerr = |e| Error::io("<paths>", e);
    for ens in ensembles {
        let header = Header {
            replications: ens.replications,
            n: ens.points,
            d: ens.dim,
            seed: ens.seed,
            meta: ens.meta.clone(),
            space: space.map(FiniteMetricSpace::to_document),
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n").map_err(ioerr)?;
        let mut buf = Vec::with_capacity(ens.values.len() * 8);
        for v in &ens.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf).map_err(ioerr)?;
    }
    w.flush().map_err(ioerr)
}

/// Reads every ensemble in the stream, plus the embedded space if any header has one.
pub fn read_ensembles<R: Read>(r: R) -> Result<(Vec<PathEnsemble>, Option<FiniteMetricSpace>)> {
    let ioerr = |e| Error::io("<paths>", e);
    let mut rd = BufReader::new(r);
    let mut out = Vec::new();
    let mut space = None;
    loop {
        let mut line = Vec::new();
        if rd.read_until(b'\n', &mut line).map_err(ioerr)? == 0 {
            break;
        }
        let header: Header = serde_json::from_slice(&line)?;
        let count = header
            .replications
            .checked_mul(header.n)
            .and_then(|v| v.checked_mul(header.d))
            .ok_or_else(|| Error::InvalidInput("path header sizes overflow".into()))?;
        let mut bytes = vec![0u8; count * 8];
        rd.read_exact(&mut bytes).map_err(ioerr)?;
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        if space.is_none() {
            if let Some(doc) = header.space {
                space = Some(FiniteMetricSpace::from_document(doc)?);
            }
        }
        out.push(PathEnsemble {
            replications: header.replications,
            points: header.n,
            dim: header.d,
            seed: header.seed,
            meta: header.meta,
            values,
        });
    }
    Ok((out, space))
}

pub fn save_ensembles(
    path: &Path,
    ensembles: &[&PathEnsemble],
    space: Option<&FiniteMetricSpace>,
) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_ensembles(std::io::BufWriter::new(f), ensembles, space)
}

pub fn load_ensembles(path: &Path) -> Result<(Vec<PathEnsemble>, Option<FiniteMetricSpace>)> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_ensembles(f)
}
