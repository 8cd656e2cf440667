//! Dyadic chaining families `{Θ_n, φ_n : n = n0..n1}`.
//!
//! `Θ_n` is a minimum internal `2^{-n}`-net, `π_n` sends a point to its nearest
//! net element (lowest index on ties), `φ_{n1}` is the identity and
//! `φ_n = π_n ∘ φ_{n+1}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::covering::{covering_number, covering_number_exact, CoverOptions, NetMode};
use crate::error::{Error, Result};
use crate::metric_space::FiniteMetricSpace;

/// `2^{-n}` for integer `n`, exact for every level a finite space can produce.
#[inline]
pub fn dyadic(n: i32) -> f64 {
    2f64.powi(-n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainingFamily {
    pub n0: i32,
    pub n1: i32,
    pub mode: NetMode,
    /// `Θ_n` as increasing point indices.
    pub nets: BTreeMap<i32, Vec<usize>>,
    /// `φ_n` as an array over all points.
    pub maps: BTreeMap<i32, Vec<usize>>,
}

/// Actual net sizes per level, as consumed by the chaining-sum bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelCards {
    pub first_level: i32,
    pub cards: Vec<usize>,
}

impl LevelCards {
    pub fn get(&self, level: i32) -> Option<usize> {
        let k = level.checked_sub(self.first_level)?;
        usize::try_from(k)
            .ok()
            .and_then(|k| self.cards.get(k).copied())
    }
}

/// `n0 = max{n : Δ ≤ 2^{-n}}` and `n1 = min{n : 2^{-n} < min_gap}`.
pub fn dyadic_levels(space: &FiniteMetricSpace) -> Result<(i32, i32)> {
    let gap = space.min_gap()?;
    let diam = space.diameter();
    if diam <= 0.0 {
        return Err(Error::DegenerateSpace);
    }
    let mut n0 = (-diam.log2()).floor() as i32;
    while diam > dyadic(n0) {
        n0 -= 1;
    }
    while diam <= dyadic(n0 + 1) {
        n0 += 1;
    }
    let mut n1 = (-gap.log2()).floor() as i32 + 1;
    while dyadic(n1) >= gap {
        n1 += 1;
    }
    while dyadic(n1 - 1) < gap {
        n1 -= 1;
    }
    Ok((n0, n1))
}

fn nearest(space: &FiniteMetricSpace, point: usize, net: &[usize]) -> usize {
    let mut best = net[0];
    for &c in &net[1..] {
        if space.d(point, c) < space.d(point, best) {
            best = c;
        }
    }
    best
}

impl ChainingFamily {
    pub fn build(space: &FiniteMetricSpace, opts: &CoverOptions) -> Result<Self> {
        let (n0, n1) = dyadic_levels(space)?;
        let n = space.len();
        let mut nets = BTreeMap::new();
        for level in n0..=n1 {
            nets.insert(level, covering_number(space, dyadic(level), opts)?.centers);
        }
        let mut maps = BTreeMap::new();
        let mut current: Vec<usize> = (0..n).collect();
        maps.insert(n1, current.clone());
        for level in (n0..n1).rev() {
            let net = &nets[&level];
            current = current.iter().map(|&p| nearest(space, p, net)).collect();
            maps.insert(level, current.clone());
        }
        Ok(ChainingFamily {
            n0,
            n1,
            mode: opts.mode,
            nets,
            maps,
        })
    }

    pub fn phi(&self, level: i32, point: usize) -> usize {
        self.maps[&level][point]
    }

    fn check_level(&self, level: i32, hi: i32) -> Result<()> {
        if level < self.n0 || level > hi {
            return Err(Error::LevelOutOfRange {
                level,
                lo: self.n0,
                hi,
            });
        }
        Ok(())
    }

    /// The chain `φ_n(θ), φ_{n+1}(θ), …, φ_{n1}(θ) = θ`.
    pub fn chain(&self, point: usize, level: i32) -> Result<Vec<usize>> {
        self.check_level(level, self.n1 - 1)?;
        Ok((level..=self.n1).map(|k| self.phi(k, point)).collect())
    }

    pub fn level_cards(&self) -> LevelCards {
        LevelCards {
            first_level: self.n0,
            cards: self.nets.values().map(Vec::len).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Outcome of one structural property.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub pass: bool,
    /// Offending `[level, point, ...]` when the property fails.
    pub witness: Option<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyReport {
    pub checks: Vec<PropertyCheck>,
}

impl FamilyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn outcome(name: &'static str, witness: Option<Vec<i64>>) -> PropertyCheck {
    PropertyCheck {
        name,
        pass: witness.is_none(),
        witness,
    }
}

/// Checks the structural properties of a family against its space.
///
/// In exact mode `card(Θ_n)` must equal the exact covering number at `2^{-n}`;
/// in greedy mode only the metric properties are binding and the pair count is
/// compared with the actual net size.
pub fn validate_family(space: &FiniteMetricSpace, family: &ChainingFamily) -> Result<FamilyReport> {
    let n = space.len();
    let (n0, n1) = (family.n0, family.n1);
    let levels: Vec<i32> = (n0..=n1).collect();
    for &l in &levels {
        let ok = family
            .nets
            .get(&l)
            .is_some_and(|net| net.iter().all(|&p| p < n))
            && family
                .maps
                .get(&l)
                .is_some_and(|m| m.len() == n && m.iter().all(|&p| p < n));
        if !ok {
            return Err(Error::InvalidInput(format!(
                "family has no valid net or map at level {l}"
            )));
        }
    }
    let mut checks = Vec::new();

    let expected = dyadic_levels(space)?;
    checks.push(outcome(
        "levels",
        (!(n0 < n1 && (n0, n1) == expected)).then(|| vec![n0 as i64, n1 as i64]),
    ));

    let mut witness = None;
    for &l in &levels {
        let card = family.nets[&l].len();
        let target = match family.mode {
            NetMode::Exact => covering_number_exact(space, dyadic(l), usize::MAX)?.count,
            NetMode::Greedy => card,
        };
        if card != target {
            witness = Some(vec![l as i64, card as i64, target as i64]);
            break;
        }
    }
    checks.push(outcome("cardinality", witness));

    let mut witness = None;
    'cover: for &l in &levels {
        let net = &family.nets[&l];
        for p in 0..n {
            if !net.iter().any(|&c| space.d(p, c) <= dyadic(l)) {
                witness = Some(vec![l as i64, p as i64]);
                break 'cover;
            }
        }
    }
    checks.push(outcome("covering", witness));

    let mut witness = None;
    'range: for &l in &levels {
        let net = &family.nets[&l];
        for (p, &img) in family.maps[&l].iter().enumerate() {
            if !net.contains(&img) {
                witness = Some(vec![l as i64, p as i64]);
                break 'range;
            }
        }
    }
    checks.push(outcome("range", witness));

    let witness = family.maps[&n1]
        .iter()
        .enumerate()
        .find(|&(p, &img)| p != img)
        .map(|(p, _)| vec![n1 as i64, p as i64]);
    checks.push(outcome("identity", witness));

    let m0 = &family.maps[&n0];
    let witness = m0
        .iter()
        .position(|&img| img != m0[0])
        .map(|p| vec![n0 as i64, p as i64]);
    checks.push(outcome("constant", witness));

    let mut witness = None;
    'link: for l in n0..n1 {
        let (upper, lower) = (&family.maps[&(l + 1)], &family.maps[&l]);
        for p in 0..n {
            if space.d(upper[p], lower[p]) > dyadic(l) {
                witness = Some(vec![l as i64, p as i64]);
                break 'link;
            }
        }
    }
    checks.push(outcome("link_distance", witness));

    let mut witness = None;
    for l in n0..n1 {
        let (upper, lower) = (&family.maps[&(l + 1)], &family.maps[&l]);
        let mut pairs: Vec<(usize, usize)> = (0..n).map(|p| (upper[p], lower[p])).collect();
        pairs.sort_unstable();
        pairs.dedup();
        let cap = match family.mode {
            NetMode::Exact => covering_number_exact(space, dyadic(l + 1), usize::MAX)?.count,
            NetMode::Greedy => family.nets[&(l + 1)].len(),
        };
        if pairs.len() > cap {
            witness = Some(vec![l as i64, pairs.len() as i64, cap as i64]);
            break;
        }
    }
    checks.push(outcome("pair_cardinality", witness));

    let mut witness = None;
    'sep: for &l in &levels {
        let m = &family.maps[&l];
        for a in 0..n {
            for b in (a + 1)..n {
                if space.d(m[a], m[b]) > dyadic(l - 2) + space.d(a, b) {
                    witness = Some(vec![l as i64, a as i64, b as i64]);
                    break 'sep;
                }
            }
        }
    }
    checks.push(outcome("separation", witness));

    Ok(FamilyReport { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> FiniteMetricSpace {
        FiniteMetricSpace::euclidean(xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn level_examples() {
        let s = line(&[0.0, 0.1, 0.7]);
        assert_eq!(dyadic_levels(&s).unwrap(), (0, 4));
        let s = line(&[0.0, 1.0]);
        assert_eq!(dyadic_levels(&s).unwrap(), (0, 1));
        let s = line(&[0.0, 3.0]);
        assert_eq!(dyadic_levels(&s).unwrap().0, -2);
        let s = line(&[0.0, 0.25, 0.5]);
        // Δ = 0.5 = 2^{-1}, gap 0.25 = 2^{-2}: n1 = 3
        assert_eq!(dyadic_levels(&s).unwrap(), (1, 3));
        assert!(dyadic_levels(&line(&[1.0])).is_err());
    }

    #[test]
    fn two_point_family() {
        let s = line(&[0.0, 1.0]);
        let f = ChainingFamily::build(&s, &CoverOptions::exact()).unwrap();
        assert_eq!((f.n0, f.n1), (0, 1));
        assert_eq!(f.nets[&0].len(), 1);
        assert_eq!(f.nets[&1], vec![0, 1]);
        assert_eq!(f.maps[&1], vec![0, 1]);
        assert_eq!(f.maps[&0], vec![0, 0]);
        assert!(validate_family(&s, &f).unwrap().all_pass());
    }

    #[test]
    fn three_point_family() {
        let s = line(&[0.0, 0.5, 1.0]);
        let f = ChainingFamily::build(&s, &CoverOptions::exact()).unwrap();
        assert_eq!((f.n0, f.n1), (0, 2));
        let rep = validate_family(&s, &f).unwrap();
        assert!(rep.all_pass(), "{rep:?}");
        assert_eq!(rep.checks.len(), 9);
    }

    #[test]
    fn broken_identity_detected() {
        let s = line(&[0.0, 0.5, 1.0]);
        let mut f = ChainingFamily::build(&s, &CoverOptions::exact()).unwrap();
        f.maps.get_mut(&f.n1).unwrap()[2] = 1;
        let rep = validate_family(&s, &f).unwrap();
        let c = rep.get("identity").unwrap();
        assert!(!c.pass);
        assert_eq!(c.witness, Some(vec![2, 2]));
    }

    #[test]
    fn broken_net_detected() {
        let s = line(&[0.0, 0.5, 1.0]);
        let mut f = ChainingFamily::build(&s, &CoverOptions::exact()).unwrap();
        // level 1 radius 0.5: the net {0} leaves point 2 uncovered
        f.nets.insert(1, vec![0]);
        let rep = validate_family(&s, &f).unwrap();
        let c = rep.get("covering").unwrap();
        assert!(!c.pass);
        assert_eq!(c.witness, Some(vec![1, 2]));
    }

    #[test]
    fn chains() {
        let s = line(&[0.0, 0.1, 0.35, 0.7, 1.0]);
        let f = ChainingFamily::build(&s, &CoverOptions::exact()).unwrap();
        for p in 0..s.len() {
            let top = f.chain(p, f.n1 - 1).unwrap();
            assert_eq!(top.len(), 2);
            assert_eq!(top[1], p);
            let full = f.chain(p, f.n0).unwrap();
            assert_eq!(full[0], f.maps[&f.n0][0]);
            for level in f.n0..f.n1 {
                let ch = f.chain(p, level).unwrap();
                let mut sum = 0.0;
                for (k, w) in ch.windows(2).enumerate() {
                    let link = s.d(w[0], w[1]);
                    assert!(link <= dyadic(level + k as i32));
                    sum += link;
                }
                assert!(s.d(ch[0], p) <= sum + 1e-15);
                assert!(sum < dyadic(level - 1));
            }
        }
        assert!(matches!(
            f.chain(0, f.n1),
            Err(Error::LevelOutOfRange { .. })
        ));
    }

    #[test]
    fn greedy_mode_family() {
        let s = FiniteMetricSpace::uniform_grid(40, 0.0, 1.0).unwrap();
        assert!(ChainingFamily::build(&s, &CoverOptions::exact()).is_err());
        let f = ChainingFamily::build(&s, &CoverOptions::greedy()).unwrap();
        assert!(validate_family(&s, &f).unwrap().all_pass());
    }

    #[test]
    fn json_shape() {
        let s = line(&[0.0, 1.0]);
        let f = ChainingFamily::build(&s, &CoverOptions::exact()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&f.to_json().unwrap()).unwrap();
        assert_eq!(v["n0"], 0);
        assert_eq!(v["maps"]["1"], serde_json::json!([0, 1]));
        let back: ChainingFamily = serde_json::from_value(v).unwrap();
        assert_eq!(back, f);
    }
}
