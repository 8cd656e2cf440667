//! Talagrand-style pair sets.
//!
//! Peel the point set: take the lowest-index remaining point `θ_l`, find the
//! smallest `r_l ∈ {1..r}` whose ball of radius `r_l·c` holds at most `A^{r_l}`
//! remaining points, record every pair `(θ_l, θ)` inside that ball, then drop
//! the points within `(r_l − 1)·c`. The resulting `U` has at most `A·card`
//! pairs, each of length at most `c·r`, and every increment over a pair at
//! distance `≤ c` is at most twice the largest increment over `U`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric_space::FiniteMetricSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeelStep {
    pub l: usize,
    pub center: usize,
    pub radius_steps: u32,
    pub removed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReduction {
    #[serde(rename = "A")]
    pub a: f64,
    pub r: u32,
    pub c: f64,
    /// Points the reduction was built on (indices into the space).
    pub members: Vec<usize>,
    pub trace: Vec<PeelStep>,
    /// Ordered pairs `(θ_l, θ)`, diagonal pairs included.
    pub pairs: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionCheck {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Outcome of the domination inequality on one value assignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Domination {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Relative slack absorbing rounding in norm evaluations of the domination check.
const DOMINATION_SLACK: f64 = 8.0 * f64::EPSILON;

/// Builds the pair set on the whole space.
pub fn build_pair_set(space: &FiniteMetricSpace, a: f64, r: u32, c: f64) -> Result<PairReduction> {
    let all: Vec<usize> = (0..space.len()).collect();
    build_pair_set_on(space, &all, a, r, c)
}

/// Builds the pair set on a subset of the space's points.
pub fn build_pair_set_on(
    space: &FiniteMetricSpace,
    members: &[usize],
    a: f64,
    r: u32,
    c: f64,
) -> Result<PairReduction> {
    if members.is_empty() {
        return Err(Error::EmptySpace);
    }
    if !(a >= 1.0 && a.is_finite()) {
        return Err(Error::BadParameters(format!("A must be >= 1, got {a}")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::BadParameters(format!("c must be > 0, got {c}")));
    }
    if r < 1 {
        return Err(Error::BadParameters("r must be >= 1".into()));
    }
    let card = members.len();
    if a.powi(r as i32) < card as f64 {
        return Err(Error::BadParameters(format!(
            "A^r = {} < card = {card}",
            a.powi(r as i32)
        )));
    }
    let mut members = members.to_vec();
    members.sort_unstable();
    members.dedup();
    if members.iter().any(|&p| p >= space.len()) {
        return Err(Error::InvalidInput("member index out of range".into()));
    }

    let mut remaining = members.clone();
    let mut trace = Vec::new();
    let mut pairs = Vec::new();
    let mut l = 1;
    while let Some(&center) = remaining.first() {
        let within = |s: u32| {
            remaining
                .iter()
                .filter(|&&p| space.d(center, p) <= s as f64 * c)
                .count()
        };
        let s = (1..=r)
            .find(|&s| within(s) as f64 <= a.powi(s as i32))
            .unwrap_or(r);
        let reach = s as f64 * c;
        pairs.extend(
            remaining
                .iter()
                .filter(|&&p| space.d(center, p) <= reach)
                .map(|&p| (center, p)),
        );
        let keep_beyond = (s - 1) as f64 * c;
        let before = remaining.len();
        remaining.retain(|&p| p != center && space.d(center, p) > keep_beyond);
        trace.push(PeelStep {
            l,
            center,
            radius_steps: s,
            removed: before - remaining.len(),
        });
        l += 1;
    }
    Ok(PairReduction {
        a,
        r,
        c,
        members,
        trace,
        pairs,
    })
}

impl PairReduction {
    /// Checks cardinality, pair length, the peeling budget and strict peeling.
    pub fn check_invariants(&self, space: &FiniteMetricSpace) -> Vec<ReductionCheck> {
        let card = self.members.len() as f64;
        let mut out = Vec::new();
        out.push(ReductionCheck {
            name: "cardinality",
            pass: self.pairs.len() as f64 <= self.a * card,
            detail: format!(
                "card(U) = {} vs A*card = {}",
                self.pairs.len(),
                self.a * card
            ),
        });
        let longest = self
            .pairs
            .iter()
            .map(|&(x, y)| space.d(x, y))
            .fold(0.0, f64::max);
        out.push(ReductionCheck {
            name: "diameter",
            pass: longest <= self.c * self.r as f64,
            detail: format!(
                "max pair length {longest} vs c*r = {}",
                self.c * self.r as f64
            ),
        });
        let in_range = self
            .trace
            .iter()
            .all(|s| (1..=self.r).contains(&s.radius_steps));
        let budget: f64 = self
            .trace
            .iter()
            .map(|s| self.a.powi(s.radius_steps as i32))
            .sum();
        out.push(ReductionCheck {
            name: "budget",
            pass: in_range && budget <= self.a * card * (1.0 + 1e-12),
            detail: format!("sum A^r_l = {budget} vs A*card = {}", self.a * card),
        });
        let removed: usize = self.trace.iter().map(|s| s.removed).sum();
        out.push(ReductionCheck {
            name: "peeling",
            pass: self.trace.iter().all(|s| s.removed >= 1) && removed == self.members.len(),
            detail: format!("{} steps removed {removed} points", self.trace.len()),
        });
        out
    }

    /// Compares `sup_{d ≤ c} |x_θ − x_ϑ|` with `2·sup_U |x_θ − x_ϑ|` for one
    /// assignment of `dim`-dimensional values, stored point-major.
    pub fn check_domination(
        &self,
        space: &FiniteMetricSpace,
        values: &[f64],
        dim: usize,
        c: f64,
    ) -> Result<Domination> {
        if dim == 0 {
            return Err(Error::InvalidInput("value dimension must be >= 1".into()));
        }
        let have = values.len() / dim;
        if let Some(&missing) = self.members.iter().find(|&&p| p >= have) {
            return Err(Error::MissingValue(missing));
        }
        let dx = |i: usize, j: usize| value_distance(values, dim, i, j);
        let mut lhs: f64 = 0.0;
        for (k, &i) in self.members.iter().enumerate() {
            for &j in &self.members[k + 1..] {
                if space.d(i, j) <= c {
                    lhs = lhs.max(dx(i, j));
                }
            }
        }
        let rhs = 2.0
            * self
                .pairs
                .iter()
                .map(|&(i, j)| dx(i, j))
                .fold(0.0, f64::max);
        Ok(Domination {
            lhs,
            rhs,
            pass: lhs <= rhs * (1.0 + DOMINATION_SLACK),
        })
    }
}

/// Euclidean distance between the values at points `i` and `j`.
#[inline]
pub fn value_distance(values: &[f64], dim: usize, i: usize, j: usize) -> f64 {
    if dim == 1 {
        return (values[i] - values[j]).abs();
    }
    let (a, b) = (
        &values[i * dim..(i + 1) * dim],
        &values[j * dim..(j + 1) * dim],
    );
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
