//! Covering numbers with centers drawn from the point set itself.
//!
//! `N(η)` is the least number of closed balls `{θ : d(c, θ) ≤ η}` with
//! centers `c` in the space whose union is the whole space. The exact solver
//! is a branch-and-bound over the set-cover formulation seeded with the
//! greedy cover as incumbent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric_space::FiniteMetricSpace;

/// Default largest point count for exact covering numbers.
pub const DEFAULT_EXACT_LIMIT: usize = 24;

/// Hard cap imposed by the 128-bit point masks of the exact solver.
pub const MAX_EXACT_LIMIT: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NetMode {
    #[default]
    Exact,
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverOptions {
    pub mode: NetMode,
    pub exact_limit: usize,
}

impl Default for CoverOptions {
    fn default() -> Self {
        CoverOptions {
            mode: NetMode::Exact,
            exact_limit: DEFAULT_EXACT_LIMIT,
        }
    }
}

impl CoverOptions {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn greedy() -> Self {
        CoverOptions {
            mode: NetMode::Greedy,
            ..Self::default()
        }
    }

    pub fn with_exact_limit(mut self, limit: usize) -> Self {
        self.exact_limit = limit.min(MAX_EXACT_LIMIT);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cover {
    pub count: usize,
    /// Center indices, increasing.
    pub centers: Vec<usize>,
    pub eta: f64,
}

/// Entropy constants: `N(η) ≤ C η^{-t}` for `η ∈ (0, eta_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyParams {
    #[serde(rename = "C")]
    pub c: f64,
    pub t: f64,
    pub eta_max: f64,
}

impl EntropyParams {
    pub fn bound(&self, eta: f64) -> f64 {
        self.c * eta.powf(-self.t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyCheck {
    pub eta: f64,
    pub count: usize,
    pub bound: f64,
    pub ok: bool,
}

/// The two candidate constants for a bounded Euclidean set in `R^m` with `t = m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EuclideanConstants {
    pub t: f64,
    /// `C = 2Δ`, as stated alongside the volumetric bound.
    pub c_stated: f64,
    /// `C = (2Δ)^m`, what `((Δ+η)/η)^m ≤ (2Δ)^m η^{-m}` gives for `η ≤ Δ`.
    pub c_derived: f64,
}

fn check_radius(eta: f64) -> Result<()> {
    if eta > 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidRadius(eta))
    }
}

/// True when the closed `eta`-balls around `centers` cover every point.
pub fn is_cover(space: &FiniteMetricSpace, eta: f64, centers: &[usize]) -> bool {
    (0..space.len()).all(|i| centers.iter().any(|&c| space.d(c, i) <= eta))
}

/// Greedy max-coverage cover; ties go to the lowest center index.
pub fn covering_number_greedy(space: &FiniteMetricSpace, eta: f64) -> Result<Cover> {
    check_radius(eta)?;
    let n = space.len();
    let mut covered = vec![false; n];
    let mut left = n;
    let mut centers = Vec::new();
    while left > 0 {
        let mut best = (0usize, usize::MAX);
        for c in 0..n {
            let gain = space
                .row(c)
                .iter()
                .zip(&covered)
                .filter(|&(&d, &cov)| !cov && d <= eta)
                .count();
            if gain > best.0 {
                best = (gain, c);
            }
        }
        let c = best.1;
        for (i, cov) in covered.iter_mut().enumerate() {
            if !*cov && space.d(c, i) <= eta {
                *cov = true;
                left -= 1;
            }
        }
        centers.push(c);
    }
    centers.sort_unstable();
    Ok(Cover {
        count: centers.len(),
        centers,
        eta,
    })
}

struct BranchAndBound {
    balls: Vec<u128>,
    /// `containing[e]`: centers whose ball holds point `e`.
    containing: Vec<Vec<usize>>,
    best: Vec<usize>,
    chosen: Vec<usize>,
}

impl BranchAndBound {
    fn search(&mut self, uncovered: u128) {
        if uncovered == 0 {
            if self.chosen.len() < self.best.len() {
                self.best = self.chosen.clone();
            }
            return;
        }
        let left = uncovered.count_ones() as usize;
        let widest = self
            .balls
            .iter()
            .map(|b| (b & uncovered).count_ones() as usize)
            .max()
            .unwrap_or(0);
        let lower = self.chosen.len() + left.div_ceil(widest);
        if lower >= self.best.len() {
            return;
        }
        // branch on the uncovered point with the fewest candidate balls
        let mut pivot = usize::MAX;
        let mut fewest = usize::MAX;
        let mut rest = uncovered;
        while rest != 0 {
            let e = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let k = self.containing[e].len();
            if k < fewest {
                fewest = k;
                pivot = e;
            }
        }
        let mut options: Vec<(usize, usize)> = self.containing[pivot]
            .iter()
            .map(|&c| ((self.balls[c] & uncovered).count_ones() as usize, c))
            .collect();
        options.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for (_, c) in options {
            self.chosen.push(c);
            self.search(uncovered & !self.balls[c]);
            self.chosen.pop();
        }
    }
}

/// Minimum number of closed `eta`-balls centered in the space that cover it.
pub fn covering_number_exact(
    space: &FiniteMetricSpace,
    eta: f64,
    exact_limit: usize,
) -> Result<Cover> {
    check_radius(eta)?;
    let n = space.len();
    let limit = exact_limit.min(MAX_EXACT_LIMIT);
    if n > limit {
        return Err(Error::TooLarge { n, limit });
    }
    let greedy = covering_number_greedy(space, eta)?;
    let balls: Vec<u128> = (0..n)
        .map(|c| {
            space
                .row(c)
                .iter()
                .enumerate()
                .filter(|&(_, &d)| d <= eta)
                .fold(0u128, |m, (i, _)| m | (1u128 << i))
        })
        .collect();
    let containing = (0..n)
        .map(|e| (0..n).filter(|&c| balls[c] >> e & 1 == 1).collect())
        .collect();
    let full = if n == 128 {
        u128::MAX
    } else {
        (1u128 << n) - 1
    };
    let mut bb = BranchAndBound {
        balls,
        containing,
        best: greedy.centers,
        chosen: Vec::new(),
    };
    bb.search(full);
    let mut centers = bb.best;
    centers.sort_unstable();
    Ok(Cover {
        count: centers.len(),
        centers,
        eta,
    })
}

/// Dispatches on the requested mode; exact mode fails beyond the exact limit.
pub fn covering_number(space: &FiniteMetricSpace, eta: f64, opts: &CoverOptions) -> Result<Cover> {
    match opts.mode {
        NetMode::Exact => covering_number_exact(space, eta, opts.exact_limit),
        NetMode::Greedy => covering_number_greedy(space, eta),
    }
}

/// Radii at which `η ↦ N(η)·η^t` attains or approaches its supremum on `(0, Δ]`:
/// every distinct distance and the float just below it.
pub fn critical_radii(space: &FiniteMetricSpace) -> Vec<f64> {
    let mut grid = Vec::new();
    for d in space.distinct_distances() {
        grid.push(d.next_down());
        grid.push(d);
    }
    grid
}

/// Fits `(C, t)` so that `N(η) ≤ C η^{-t}` on every radius of the grid.
///
/// With `t_fixed`, `C = max N(η)·η^t`. Otherwise `t` is the least-squares slope of
/// `ln N` against `-ln η` (floored at [`MIN_FITTED_T`]) and `C` is inflated until
/// every grid point is dominated.
pub fn fit_entropy_params(
    space: &FiniteMetricSpace,
    eta_grid: &[f64],
    t_fixed: Option<f64>,
    opts: &CoverOptions,
) -> Result<EntropyParams> {
    if eta_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let counts = eta_grid
        .iter()
        .map(|&eta| covering_number(space, eta, opts).map(|c| (eta, c.count)))
        .collect::<Result<Vec<_>>>()?;
    let t = match t_fixed {
        Some(t) if t > 0.0 && t.is_finite() => t,
        Some(t) => {
            return Err(Error::ParamViolation(format!(
                "t must be positive, got {t}"
            )))
        }
        None => least_squares_slope(&counts).max(MIN_FITTED_T),
    };
    let c = counts
        .iter()
        .map(|&(eta, n)| n as f64 * eta.powf(t))
        .fold(0.0, f64::max);
    Ok(EntropyParams {
        c,
        t,
        eta_max: space.diameter(),
    })
}

/// Smallest exponent reported by an unconstrained fit.
pub const MIN_FITTED_T: f64 = 1e-3;

fn least_squares_slope(counts: &[(f64, usize)]) -> f64 {
    let xs: Vec<f64> = counts.iter().map(|&(eta, _)| -eta.ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&(_, n)| (n as f64).ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return 0.0;
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    sxy / sxx
}

/// `sup_{η ∈ (0, Δ]} N(η)·η^t`, evaluated exactly from the step structure of `N`.
///
/// `N` is constant on `[d_k, d_{k+1})` between consecutive distinct distances,
/// so the supremum is `max(n·d_1^t, max_k N(d_k)·d_{k+1}^t)`.
pub fn entropy_constant_sup(space: &FiniteMetricSpace, t: f64, opts: &CoverOptions) -> Result<f64> {
    let ds = space.distinct_distances();
    if ds.is_empty() {
        return Ok(0.0);
    }
    let mut sup = space.len() as f64 * ds[0].powf(t);
    for w in ds.windows(2) {
        let n = covering_number(space, w[0], opts)?.count;
        sup = sup.max(n as f64 * w[1].powf(t));
    }
    Ok(sup.max(ds[ds.len() - 1].powf(t)))
}

/// Evaluates `N(η) ≤ C η^{-t}` on each radius of the grid.
pub fn check_entropy(
    space: &FiniteMetricSpace,
    params: &EntropyParams,
    eta_grid: &[f64],
    opts: &CoverOptions,
) -> Result<Vec<EntropyCheck>> {
    eta_grid
        .iter()
        .map(|&eta| {
            let count = covering_number(space, eta, opts)?.count;
            let bound = params.bound(eta);
            Ok(EntropyCheck {
                eta,
                count,
                bound,
                // same form as the fit, so a fitted C passes on its own grid
                ok: count as f64 * eta.powf(params.t) <= params.c,
            })
        })
        .collect()
}

/// Volumetric bound `((Δ + η)/η)^m` for subsets of `R^m` of diameter `Δ`.
pub fn euclidean_entropy_bound(diameter: f64, m: u32, eta: f64) -> f64 {
    ((diameter + eta) / eta).powi(m as i32)
}

pub fn euclidean_constants(diameter: f64, m: u32) -> EuclideanConstants {
    EuclideanConstants {
        t: m as f64,
        c_stated: 2.0 * diameter,
        c_derived: (2.0 * diameter).powi(m as i32),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> FiniteMetricSpace {
        FiniteMetricSpace::euclidean(xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn exact_examples() {
        let s = line(&[0.0, 0.5, 1.0]);
        let c = covering_number_exact(&s, 0.5, 24).unwrap();
        assert_eq!((c.count, c.centers.clone()), (1, vec![1]));
        assert!(is_cover(&s, 0.5, &c.centers));
        assert_eq!(covering_number_exact(&s, 0.4, 24).unwrap().count, 3);
        let s = line(&[0.0, 0.4, 0.6, 1.0]);
        assert_eq!(covering_number_exact(&s, 0.3, 24).unwrap().count, 3);
    }

    #[test]
    fn exact_limit_enforced() {
        let s = FiniteMetricSpace::uniform_grid(30, 0.0, 1.0).unwrap();
        assert!(matches!(
            covering_number_exact(&s, 0.1, 24),
            Err(Error::TooLarge { n: 30, limit: 24 })
        ));
        assert!(covering_number_exact(&s, 0.1, 64).is_ok());
    }

    #[test]
    fn greedy_extremes() {
        let s = line(&[0.0, 0.5, 1.0]);
        let g = covering_number_greedy(&s, 0.5).unwrap();
        assert!((1..=2).contains(&g.count));
        assert!(is_cover(&s, 0.5, &g.centers));
        assert_eq!(covering_number_greedy(&s, 1.0).unwrap().count, 1);
        assert_eq!(covering_number_greedy(&s, 0.49).unwrap().count, 3);
    }

    #[test]
    fn bad_radius() {
        let s = line(&[0.0, 1.0]);
        assert!(matches!(
            covering_number_greedy(&s, 0.0),
            Err(Error::InvalidRadius(_))
        ));
        assert!(covering_number_exact(&s, f64::NAN, 24).is_err());
    }

    #[test]
    fn fit_with_fixed_exponent() {
        let s = line(&[0.0, 0.5, 1.0]);
        let p = fit_entropy_params(&s, &[0.5], Some(1.0), &CoverOptions::exact()).unwrap();
        assert_eq!(p.c, 0.5);
        assert_eq!(p.t, 1.0);
        assert_eq!(p.eta_max, 1.0);
        let p = fit_entropy_params(&s, &[1.0, 2.0], Some(2.0), &CoverOptions::exact()).unwrap();
        assert_eq!(p.c, 4.0);
        let p = fit_entropy_params(&s, &[0.1], Some(1.0), &CoverOptions::exact()).unwrap();
        assert!(p.c >= 3.0 * 0.1 - 1e-15);
        assert!(matches!(
            fit_entropy_params(&s, &[], None, &CoverOptions::exact()),
            Err(Error::EmptyGrid)
        ));
    }

    #[test]
    fn free_fit_dominates_grid() {
        let s = FiniteMetricSpace::uniform_grid(17, 0.0, 1.0).unwrap();
        let grid: Vec<f64> = (1..=16).map(|k| k as f64 / 16.0).collect();
        let p = fit_entropy_params(&s, &grid, None, &CoverOptions::exact()).unwrap();
        assert!(p.t > 0.5 && p.t < 1.5, "t = {}", p.t);
        for chk in check_entropy(&s, &p, &grid, &CoverOptions::exact()).unwrap() {
            assert!(chk.ok, "{chk:?}");
        }
    }

    #[test]
    fn sup_constant_matches_critical_grid() {
        let s = line(&[0.0, 0.3, 0.45, 1.0]);
        let opts = CoverOptions::exact();
        let sup = entropy_constant_sup(&s, 1.0, &opts).unwrap();
        let fit = fit_entropy_params(&s, &critical_radii(&s), Some(1.0), &opts).unwrap();
        assert!((sup - fit.c).abs() <= 1e-12 * sup);
        assert!(fit.c <= sup);
    }

    #[test]
    fn euclidean_bound_values() {
        assert_eq!(euclidean_entropy_bound(1.0, 1, 1.0), 2.0);
        assert_eq!(euclidean_entropy_bound(1.0, 2, 0.5), 9.0);
        assert_eq!(euclidean_entropy_bound(0.0, 3, 0.2), 1.0);
        let k = euclidean_constants(1.5, 2);
        assert_eq!((k.t, k.c_stated, k.c_derived), (2.0, 3.0, 9.0));
    }
}
