//! Explicit constants of the moment bounds.
//!
//! Symbols: `M, p, q` from the increment condition `E d(X_θ, X_ϑ)^p ≤ M d(θ, ϑ)^q`,
//! `C, t` from the entropy condition `N(η) ≤ C η^{-t}`, `β ∈ (0, (q−t)/p)` the
//! Hölder order and `diam` the diameter `Δ(Θ)` of the ambient parameter set.

use serde::{Deserialize, Serialize};

use crate::chaining::{dyadic, dyadic_levels, ChainingFamily, LevelCards};
use crate::covering::{covering_number, CoverOptions};
use crate::error::{Error, Result};
use crate::metric_space::FiniteMetricSpace;
use crate::pair_reduction::build_pair_set_on;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    #[serde(rename = "M")]
    pub m: f64,
    pub p: f64,
    pub q: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub t: f64,
    pub beta: f64,
    pub diam: f64,
}

/// Which power of four multiplies the local-increment bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Prefactor {
    /// `4^{t+2p+3q+2}`
    #[default]
    Statement,
    /// `4^{2p+4q+2}`, the constant the Hölder-constant derivation plugs in.
    Proof,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::ParamViolation(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

impl BoundParams {
    /// Checks `M, p, q, C, t > 0` and `q > t`.
    pub fn validate_moment(&self) -> Result<()> {
        positive("M", self.m)?;
        positive("p", self.p)?;
        positive("q", self.q)?;
        positive("C", self.c)?;
        positive("t", self.t)?;
        if self.q <= self.t {
            return Err(Error::ParamViolation(format!(
                "need q > t, got q = {}, t = {}",
                self.q, self.t
            )));
        }
        Ok(())
    }

    /// Full check, adding `0 < β < (q−t)/p` and `diam ≥ 0`.
    pub fn validate(&self) -> Result<()> {
        self.validate_moment()?;
        let hi = self.beta_max();
        if !(self.beta > 0.0 && self.beta < hi) {
            return Err(Error::ParamViolation(format!(
                "need 0 < beta < (q-t)/p = {hi}, got {}",
                self.beta
            )));
        }
        if !(self.diam >= 0.0 && self.diam.is_finite()) {
            return Err(Error::ParamViolation(format!(
                "diam must be >= 0, got {}",
                self.diam
            )));
        }
        Ok(())
    }

    pub fn beta_max(&self) -> f64 {
        (self.q - self.t) / self.p
    }

    /// `(2^{(q−t)/p} − 1)^p`
    pub fn geometric_denominator(&self) -> f64 {
        (self.beta_max().exp2() - 1.0).powf(self.p)
    }
}

pub fn lemma_b27_prefactor(params: &BoundParams, variant: Prefactor) -> f64 {
    let (p, q, t) = (params.p, params.q, params.t);
    match variant {
        Prefactor::Statement => 4f64.powf(t + 2.0 * p + 3.0 * q + 2.0),
        Prefactor::Proof => 4f64.powf(2.0 * p + 4.0 * q + 2.0),
    }
}

/// `pref·M·(N₄·[ln N₄]^q·δ^q + C·δ^{q−t}/(2^{(q−t)/p} − 1)^p)` for a given `N₄ = N(δ/4)`.
pub fn lemma_b27_from_count(
    n4: usize,
    delta: f64,
    params: &BoundParams,
    variant: Prefactor,
) -> Result<f64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidDelta(delta));
    }
    if n4 == 0 {
        return Err(Error::InvalidInput("covering number must be >= 1".into()));
    }
    params.validate_moment()?;
    let (q, t) = (params.q, params.t);
    let entropy_term = if n4 == 1 {
        0.0
    } else {
        let n4 = n4 as f64;
        n4 * n4.ln().powf(q) * delta.powf(q)
    };
    let chain_term = params.c * delta.powf(q - t) / params.geometric_denominator();
    Ok(lemma_b27_prefactor(params, variant) * params.m * (entropy_term + chain_term))
}

/// The local-increment bound on `E sup_{d ≤ δ} d_X(X_θ, X_ϑ)^p` over the space,
/// with `N₄` the covering number of the space at `δ/4`.
pub fn lemma_b27_bound(
    space: &FiniteMetricSpace,
    delta: f64,
    params: &BoundParams,
    variant: Prefactor,
    opts: &CoverOptions,
) -> Result<f64> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidDelta(delta));
    }
    let n4 = covering_number(space, delta / 4.0, opts)?.count;
    lemma_b27_from_count(n4, delta, params, variant)
}

/// `M·(Σ_{k=n}^{n1−1} card(Θ_{k+1})^{1/p} / 2^{kq/p})^p`.
pub fn chaining_sum_bound(
    cards: &LevelCards,
    n: i32,
    n1: i32,
    m: f64,
    p: f64,
    q: f64,
) -> Result<f64> {
    if n >= n1 {
        return Err(Error::EmptyRange { n, n1 });
    }
    let mut sum = 0.0;
    for k in n..n1 {
        let card = cards
            .get(k + 1)
            .filter(|&c| c >= 1)
            .ok_or(Error::InvalidLevels { n: k + 1, n1 })?;
        sum += (card as f64).powf(1.0 / p) * (-(k as f64) * q / p).exp2();
    }
    Ok(m * sum.powf(p))
}

/// Closed-form bound on `E sup_θ d_X(X_θ, X_{φ_n(θ)})^p` from the entropy constants,
/// split by the sign of the levels.
pub fn net_deviation_bound(n: i32, n1: i32, params: &BoundParams) -> Result<f64> {
    if n >= n1 {
        return Err(Error::InvalidLevels { n, n1 });
    }
    params.validate_moment()?;
    let (m, c, p, q, t) = (params.m, params.c, params.p, params.q, params.t);
    let g = params.beta_max().exp2();
    let n = n as f64;
    let v = if n1 <= 0 {
        m * c * t.exp2() * ((1.0 - n) * (q - t)).exp2() / (g - 1.0).powf(p)
    } else if n < 0.0 {
        m * c * t.exp2() * ((((1.0 - n) * (q - t) / p).exp2() + g) / (g - 1.0)).powf(p)
    } else {
        m * c * q.exp2() * (-n * (q - t)).exp2() / (g - 1.0).powf(p)
    };
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderConstant {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "L1")]
    pub l1: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
    pub k0: u32,
    pub terms_used: usize,
    /// Analytic majorant of the part of the `L1` series left out.
    pub tail_bound: f64,
}

/// Consecutive small terms required before the tail majorant is consulted.
const SMALL_RUN: usize = 20;
const MAX_TERMS: usize = 10_000_000;

/// `k0 = min{k ≥ 1 : 2^{-(k+1)}(Δ+1) ≤ Δ}`.
pub fn holder_k0(diam: f64) -> Result<u32> {
    if !(diam > 0.0 && diam.is_finite()) {
        return Err(Error::ParamViolation(format!(
            "diam must be positive for the Hölder constant, got {diam}"
        )));
    }
    let mut k = 1u32;
    while dyadic(k as i32 + 1) * (diam + 1.0) > diam {
        k += 1;
    }
    Ok(k)
}

/// `L = L1 + L2`, the constant bounding the expected supremum of Hölder quotients.
///
/// `L1` is summed until `SMALL_RUN` consecutive terms fall below `tol` times the
/// running sum and a geometric majorant of the remainder does too. The majorant
/// replaces `ln(C 2^{(k+1)t})` by `max(0, ln C) + (k+1)t ln 2` and, once the
/// polynomial factor grows by at most `2^{s/2}` per step (`s = q − t − βp`),
/// sums the tail with ratio `2^{-s/2}`.
pub fn holder_constant(params: &BoundParams, tol: f64) -> Result<HolderConstant> {
    params.validate()?;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::ParamViolation(format!(
            "tol must lie in (0, 1), got {tol}"
        )));
    }
    let (m, c, p, q, t, beta, diam) = (
        params.m,
        params.c,
        params.p,
        params.q,
        params.t,
        params.beta,
        params.diam,
    );
    let k0 = holder_k0(diam)?;
    let first_arg = c * ((k0 + 1) as f64 * t).exp2();
    if first_arg < 1.0 {
        return Err(Error::NonconvergentLog(first_arg));
    }
    let denom = params.geometric_denominator();
    let pre = 4f64.powf(2.0 * p + 5.0 * q + 2.0) * m * (diam + 1.0).powf(q) / denom;
    let s = q - t - beta * p;
    let rate = beta * p - (q - t);
    let four_t = 4f64.powf(t);
    let ln2 = std::f64::consts::LN_2;

    let term = |k: u32| {
        let log = c.ln() + (k + 1) as f64 * t * ln2;
        (rate * k as f64).exp2() * (four_t * log.powf(q) * denom + 1.0)
    };
    let log_floor = c.ln().max(0.0);
    let majorant = |k: u32| {
        let x = log_floor + (k + 1) as f64 * t * ln2;
        (rate * k as f64).exp2() * (four_t * x.powf(q) * denom + 1.0)
    };
    // x_k ≥ threshold ⇒ ((x_k + t ln 2)/x_k)^q ≤ 2^{s/2}
    let threshold = t * ln2 / ((s / (2.0 * q)).exp2() - 1.0);
    let tail_ratio = 1.0 - (-s / 2.0).exp2();

    let mut sum = 0.0;
    let mut run = 0;
    let mut k = k0;
    let tail = loop {
        let a = term(k);
        sum += a;
        run = if a < tol * sum { run + 1 } else { 0 };
        k += 1;
        if run >= SMALL_RUN && log_floor + (k + 1) as f64 * t * ln2 >= threshold {
            let tail = majorant(k) / tail_ratio;
            if tail < tol * sum {
                break tail;
            }
        }
        if (k - k0) as usize > MAX_TERMS {
            return Err(Error::SeriesNotConverged(MAX_TERMS));
        }
    };
    let rho = rate.exp2();
    let l1 = pre * c * sum;
    let l2 = pre * c * rho / (1.0 - rho);
    Ok(HolderConstant {
        l: l1 + l2,
        l1,
        l2,
        k0,
        terms_used: (k - k0) as usize,
        tail_bound: pre * c * tail,
    })
}

/// `L·δ^{βp}`
pub fn corollary_bound(l: f64, delta: f64, beta: f64, p: f64) -> f64 {
    l * delta.powf(beta * p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct B27Levels {
    pub n0: i32,
    pub n1: i32,
    pub n2: i32,
    pub n3: i32,
    pub r_bar: u32,
    /// `N(δ/4)`
    pub n4: usize,
}

/// `max(1, ⌈log₂ N⌉)`: the least natural `r` with `2^r ≥ N`.
pub fn r_bar(n: usize) -> u32 {
    let mut r = 1u32;
    while (1u128 << r) < n as u128 {
        r += 1;
    }
    r
}

/// `n2 = max{n : δ ≤ 2^{-n+2}}`.
pub fn level_n2(delta: f64) -> i32 {
    let mut n2 = (2.0 - delta.log2()).floor() as i32;
    while delta > dyadic(n2 - 2) {
        n2 -= 1;
    }
    while delta <= dyadic(n2 - 1) {
        n2 += 1;
    }
    n2
}

/// Level bookkeeping behind the local-increment bound. Fails with `TrivialCase`
/// when `δ` is below the minimal gap (no strict pair within `δ`).
pub fn lemma_b27_levels(
    space: &FiniteMetricSpace,
    delta: f64,
    opts: &CoverOptions,
) -> Result<B27Levels> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidDelta(delta));
    }
    let gap = space.min_gap()?;
    if delta < gap {
        return Err(Error::TrivialCase {
            delta,
            min_gap: gap,
        });
    }
    let (n0, n1) = dyadic_levels(space)?;
    let n2 = level_n2(delta);
    let n4 = covering_number(space, delta / 4.0, opts)?.count;
    Ok(B27Levels {
        n0,
        n1,
        n2,
        n3: n1.min(n2),
        r_bar: r_bar(n4),
        n4,
    })
}

/// Instance-level evaluation of the inequality chain behind the local-increment bound,
/// using the family and pair set actually built:
/// `4^p·(M Σ_{(θ,ϑ)∈U} d(θ,ϑ)^q + M(Σ_k card(Θ_{k+1})^{1/p} 2^{-kq/p})^p)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructuralBound {
    pub level: i32,
    pub pair_radius: f64,
    pub pair_count: usize,
    pub pair_term: f64,
    pub deviation_term: f64,
    pub value: f64,
}

pub fn lemma_b27_structural_bound(
    space: &FiniteMetricSpace,
    family: &ChainingFamily,
    delta: f64,
    m: f64,
    p: f64,
    q: f64,
) -> Result<StructuralBound> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidDelta(delta));
    }
    if delta < space.min_gap()? {
        return Ok(StructuralBound {
            level: family.n1,
            pair_radius: 0.0,
            pair_count: 0,
            pair_term: 0.0,
            deviation_term: 0.0,
            value: 0.0,
        });
    }
    let level = level_n2(delta).min(family.n1).max(family.n0);
    let net = &family.nets[&level];
    // d(φ(θ), φ(ϑ)) ≤ 2^{-level+2} + d(θ, ϑ) for every pair within δ
    let radius = dyadic(level - 2) + delta;
    let u = build_pair_set_on(space, net, 2.0, r_bar(net.len()), radius)?;
    let pair_term = m * u
        .pairs
        .iter()
        .map(|&(a, b)| space.d(a, b).powf(q))
        .sum::<f64>();
    let deviation_term = if level < family.n1 {
        chaining_sum_bound(&family.level_cards(), level, family.n1, m, p, q)?
    } else {
        0.0
    };
    Ok(StructuralBound {
        level,
        pair_radius: radius,
        pair_count: u.pairs.len(),
        pair_term,
        deviation_term,
        value: 4f64.powf(p) * (pair_term + deviation_term),
    })
}
