//! Finite metric spaces: validated distance matrices, optionally backed by a
//! Euclidean embedding.
//!
//! Distances are strict (no two distinct points at distance zero) because every
//! Hölder quotient downstream divides by a power of the distance.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, MetricViolation, Result};

/// Absolute tolerance used only while validating metric axioms.
pub const VALIDATION_TOL: f64 = 1e-12;

/// Above this many points the O(n³) triangle check is skipped unless forced.
pub const TRIANGLE_CHECK_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriangleCheck {
    /// Check when n ≤ [`TRIANGLE_CHECK_LIMIT`].
    Auto,
    Always,
    Never,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    coords: Option<Vec<Vec<f64>>>,
    dist: Vec<f64>,
    n: usize,
}

/// On-disk JSON form: `{"labels": [...], "coords": [[...]]}` or `{"labels": [...], "dist": [[...]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SpaceDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<Vec<Vec<f64>>>,
}

fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl FiniteMetricSpace {
    /// Builds the space of the given points under the Euclidean distance.
    pub fn euclidean(coords: Vec<Vec<f64>>) -> Result<Self> {
        Self::euclidean_with_labels(default_labels(coords.len()), coords)
    }

    pub fn euclidean_with_labels(labels: Vec<String>, coords: Vec<Vec<f64>>) -> Result<Self> {
        let n = coords.len();
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        if labels.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} points",
                labels.len(),
                n
            )));
        }
        let m = coords[0].len();
        if m == 0 {
            return Err(Error::InvalidInput("points have zero coordinates".into()));
        }
        for (i, row) in coords.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} coordinates, expected {m}",
                    row.len()
                )));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::NotAMetric {
                    kind: MetricViolation::NonFinite,
                    witness: vec![i],
                });
            }
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = euclid(&coords[i], &coords[j]);
                if d == 0.0 {
                    return Err(Error::DuplicatePoint(i, j));
                }
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Ok(FiniteMetricSpace {
            labels,
            coords: Some(coords),
            dist,
            n,
        })
    }

    /// Builds a space from an explicit distance matrix, validating every metric axiom.
    pub fn from_matrix(labels: Vec<String>, dist: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_matrix_checked(labels, dist, TriangleCheck::Auto)
    }

    pub fn from_matrix_checked(
        labels: Vec<String>,
        dist: Vec<Vec<f64>>,
        triangle: TriangleCheck,
    ) -> Result<Self> {
        let n = dist.len();
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        if labels.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} points",
                labels.len(),
                n
            )));
        }
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotAMetric {
                    kind: MetricViolation::NotSquare,
                    witness: vec![i],
                });
            }
            flat.extend_from_slice(row);
        }
        let space = FiniteMetricSpace {
            labels,
            coords: None,
            dist: flat,
            n,
        };
        space.validate(triangle)?;
        Ok(space)
    }

    /// Checks every metric axiom; returns the first violation with its witness indices.
    pub fn validate(&self, triangle: TriangleCheck) -> Result<()> {
        let n = self.n;
        let viol = |kind, witness: Vec<usize>| Err(Error::NotAMetric { kind, witness });
        for i in 0..n {
            for j in 0..n {
                if !self.d(i, j).is_finite() || self.d(i, j) < 0.0 {
                    return viol(MetricViolation::NonFinite, vec![i, j]);
                }
            }
        }
        for i in 0..n {
            if self.d(i, i).abs() > VALIDATION_TOL {
                return viol(MetricViolation::NonzeroDiagonal, vec![i]);
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if (self.d(i, j) - self.d(j, i)).abs() > VALIDATION_TOL {
                    return viol(MetricViolation::Asymmetric, vec![i, j]);
                }
                if self.d(i, j) <= VALIDATION_TOL {
                    return viol(MetricViolation::ZeroDistance, vec![i, j]);
                }
            }
        }
        let check = match triangle {
            TriangleCheck::Always => true,
            TriangleCheck::Never => false,
            TriangleCheck::Auto => n <= TRIANGLE_CHECK_LIMIT,
        };
        if check {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        if self.d(i, k) > self.d(i, j) + self.d(j, k) + VALIDATION_TOL {
                            return viol(MetricViolation::Triangle, vec![i, j, k]);
                        }
                    }
                }
            }
        }
        if let Some(coords) = &self.coords {
            for i in 0..n {
                for j in (i + 1)..n {
                    let e = euclid(&coords[i], &coords[j]);
                    if (e - self.d(i, j)).abs() > VALIDATION_TOL * e.max(1.0) {
                        return Err(Error::InvalidInput(format!(
                            "distance ({i},{j}) disagrees with coordinates"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    /// Embedding dimension, if the space carries coordinates.
    pub fn dim(&self) -> Option<usize> {
        self.coords.as_ref().map(|c| c[0].len())
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    /// Largest pairwise distance; zero for a singleton.
    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest distance between distinct points.
    pub fn min_gap(&self) -> Result<f64> {
        if self.n < 2 {
            return Err(Error::TooFewPoints {
                needed: 2,
                have: self.n,
            });
        }
        let mut g = f64::INFINITY;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                g = g.min(self.d(i, j));
            }
        }
        Ok(g)
    }

    /// Distinct off-diagonal distances in increasing order.
    pub fn distinct_distances(&self) -> Vec<f64> {
        let mut v: Vec<f64> = (0..self.n)
            .flat_map(|i| ((i + 1)..self.n).map(move |j| (i, j)))
            .map(|(i, j)| self.d(i, j))
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Unordered pairs `(i, j)`, `i < j`, with `d(i, j) ≤ delta`.
    pub fn pairs_within(&self, delta: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.d(i, j) <= delta {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Reorders points: point `k` of the result is point `perm[k]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::InvalidInput("permutation length mismatch".into()));
        }
        let mut seen = vec![false; self.n];
        for &p in perm {
            if p >= self.n || seen[p] {
                return Err(Error::InvalidInput("not a permutation".into()));
            }
            seen[p] = true;
        }
        let n = self.n;
        let mut dist = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                dist[a * n + b] = self.d(perm[a], perm[b]);
            }
        }
        Ok(FiniteMetricSpace {
            labels: perm.iter().map(|&p| self.labels[p].clone()).collect(),
            coords: self
                .coords
                .as_ref()
                .map(|c| perm.iter().map(|&p| c[p].clone()).collect()),
            dist,
            n,
        })
    }

    /// `n` equally spaced points on `[start, end]` of the real line.
    pub fn uniform_grid(points: usize, start: f64, end: f64) -> Result<Self> {
        if points == 0 {
            return Err(Error::EmptySpace);
        }
        if points == 1 {
            return Self::euclidean(vec![vec![start]]);
        }
        let h = (end - start) / (points - 1) as f64;
        Self::euclidean((0..points).map(|i| vec![start + h * i as f64]).collect())
    }

    pub fn from_document(doc: SpaceDocument) -> Result<Self> {
        match (doc.coords, doc.dist) {
            (Some(coords), None) => {
                let labels = doc.labels.unwrap_or_else(|| default_labels(coords.len()));
                Self::euclidean_with_labels(labels, coords)
            }
            (None, Some(dist)) => {
                let labels = doc.labels.unwrap_or_else(|| default_labels(dist.len()));
                Self::from_matrix(labels, dist)
            }
            (Some(_), Some(_)) => Err(Error::InvalidInput(
                "space document has both \"coords\" and \"dist\"".into(),
            )),
            (None, None) => Err(Error::InvalidInput(
                "space document needs \"coords\" or \"dist\"".into(),
            )),
        }
    }

    pub fn to_document(&self) -> SpaceDocument {
        match &self.coords {
            Some(c) => SpaceDocument {
                labels: Some(self.labels.clone()),
                coords: Some(c.clone()),
                dist: None,
            },
            None => SpaceDocument {
                labels: Some(self.labels.clone()),
                coords: None,
                dist: Some((0..self.n).map(|i| self.row(i).to_vec()).collect()),
            },
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_document(serde_json::from_str(s)?)
    }

    /// Reads a point cloud: one point per row, no header, comma separated.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut coords = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|e| Error::InvalidInput(format!("bad number {f:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            coords.push(row);
        }
        Self::euclidean(coords)
    }

    /// Loads `.csv` as a point cloud and anything else as a JSON space document.
    pub fn load(path: &Path) -> Result<Self> {
        let is_csv = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        if is_csv {
            let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
            Self::from_csv_reader(f)
        } else {
            let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Self::from_json_str(&s)
        }
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(&self.to_document())?;
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }
}
