//! Independent oracles for integration tests: arbitrary-precision evaluation of
//! the bound formulas and exhaustive-subset covering numbers.
#![allow(dead_code, clippy::too_many_arguments)]

use std::cell::RefCell;

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use chainkit::metric_space::FiniteMetricSpace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 320 bits, about 96 decimal digits.
const P: usize = 320;
const RM: RoundingMode = RoundingMode::ToEven;

pub struct Hp {
    cc: RefCell<Consts>,
}

impl Hp {
    pub fn new() -> Self {
        Hp {
            cc: RefCell::new(Consts::new().expect("constants cache")),
        }
    }

    pub fn num(&self, x: f64) -> BigFloat {
        BigFloat::from_f64(x, P)
    }

    pub fn int(&self, x: i64) -> BigFloat {
        BigFloat::from_i64(x, P)
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, P, RM)
    }

    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, P, RM)
    }

    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, P, RM)
    }

    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, P, RM)
    }

    /// `a^b` for `a > 0`. Transcendental calls skip the final correct rounding:
    /// with it, exactly representable results such as `4^{1/2}` never terminate.
    pub fn pow(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.pow(b, P, RoundingMode::None, &mut self.cc.borrow_mut())
    }

    pub fn ln(&self, a: &BigFloat) -> BigFloat {
        a.ln(P, RoundingMode::None, &mut self.cc.borrow_mut())
    }

    pub fn lt(&self, a: &BigFloat, b: &BigFloat) -> bool {
        matches!(a.cmp(b), Some(s) if s < 0)
    }

    pub fn to_f64(&self, a: &BigFloat) -> f64 {
        let s = a
            .format(Radix::Dec, RM, &mut self.cc.borrow_mut())
            .expect("format");
        s.parse().unwrap_or_else(|_| panic!("unparsable {s}"))
    }

    fn two_pow(&self, e: &BigFloat) -> BigFloat {
        let two = self.num(2.0);
        self.pow(&two, e)
    }
}

/// Parameters as plain numbers; the oracle never touches the crate's types.
#[derive(Debug, Clone, Copy)]
pub struct Sym {
    pub m: f64,
    pub p: f64,
    pub q: f64,
    pub c: f64,
    pub t: f64,
    pub beta: f64,
    pub diam: f64,
}

impl Hp {
    /// `(2^{(q−t)/p} − 1)^p`
    fn denom(&self, s: &Sym) -> BigFloat {
        let (p, q, t) = (self.num(s.p), self.num(s.q), self.num(s.t));
        let e = self.div(&self.sub(&q, &t), &p);
        let g = self.two_pow(&e);
        let g1 = self.sub(&g, &self.num(1.0));
        self.pow(&g1, &p)
    }

    pub fn lemma_b27(&self, n4: u64, delta: f64, s: &Sym, proof_variant: bool) -> f64 {
        let (p, q, t) = (self.num(s.p), self.num(s.q), self.num(s.t));
        let expo = if proof_variant {
            // 2p + 4q + 2
            self.add(
                &self.add(&self.mul(&self.num(2.0), &p), &self.mul(&self.num(4.0), &q)),
                &self.num(2.0),
            )
        } else {
            // t + 2p + 3q + 2
            self.add(
                &self.add(&t, &self.mul(&self.num(2.0), &p)),
                &self.add(&self.mul(&self.num(3.0), &q), &self.num(2.0)),
            )
        };
        let four = self.num(4.0);
        let pre = self.mul(&self.pow(&four, &expo), &self.num(s.m));
        let d = self.num(delta);
        let first = if n4 == 1 {
            self.num(0.0)
        } else {
            let n = self.int(n4 as i64);
            let lnq = {
                let l = self.ln(&n);
                self.pow(&l, &q)
            };
            let dq = self.pow(&d, &q);
            self.mul(&self.mul(&n, &lnq), &dq)
        };
        let dqt = {
            let e = self.sub(&q, &t);
            self.pow(&d, &e)
        };
        let den = self.denom(s);
        let second = self.div(&self.mul(&self.num(s.c), &dqt), &den);
        let v = self.mul(&pre, &self.add(&first, &second));
        self.to_f64(&v)
    }

    pub fn net_deviation(&self, n: i32, n1: i32, s: &Sym) -> f64 {
        let (p, q, t) = (self.num(s.p), self.num(s.q), self.num(s.t));
        let qt = self.sub(&q, &t);
        let g = {
            let e = self.div(&qt, &p);
            self.two_pow(&e)
        };
        let g1 = self.sub(&g, &self.num(1.0));
        let mc = self.mul(&self.num(s.m), &self.num(s.c));
        let v = if n1 <= 0 {
            let e = self.mul(&self.int(1 - n as i64), &qt);
            let num = self.mul(&self.mul(&mc, &self.two_pow(&t)), &self.two_pow(&e));
            let den = self.pow(&g1, &p);
            self.div(&num, &den)
        } else if n < 0 {
            let e = self.div(&self.mul(&self.int(1 - n as i64), &qt), &p);
            let inner = self.div(&self.add(&self.two_pow(&e), &g), &g1);
            let inner_p = self.pow(&inner, &p);
            self.mul(&self.mul(&mc, &self.two_pow(&t)), &inner_p)
        } else {
            let e = self.mul(&self.int(-(n as i64)), &qt);
            let num = self.mul(&self.mul(&mc, &self.two_pow(&q)), &self.two_pow(&e));
            let den = self.pow(&g1, &p);
            self.div(&num, &den)
        };
        self.to_f64(&v)
    }

    /// `M (Σ_{k=n}^{n1−1} cards[k+1]^{1/p} 2^{-kq/p})^p`, `cards` indexed from level `first`.
    pub fn chaining_sum(
        &self,
        cards: &[u64],
        first: i32,
        n: i32,
        n1: i32,
        m: f64,
        p: f64,
        q: f64,
    ) -> f64 {
        let (pp, qq) = (self.num(p), self.num(q));
        let inv_p = self.div(&self.num(1.0), &pp);
        let mut sum = self.num(0.0);
        for k in n..n1 {
            let card = self.int(cards[(k + 1 - first) as usize] as i64);
            let root = self.pow(&card, &inv_p);
            let e = self.div(&self.mul(&self.int(-(k as i64)), &qq), &pp);
            let w = self.two_pow(&e);
            sum = self.add(&sum, &self.mul(&root, &w));
        }
        let v = self.mul(&self.num(m), &self.pow(&sum, &pp));
        self.to_f64(&v)
    }

    /// `(L, L1, L2)`, summing the series until terms are negligible at this precision.
    pub fn holder(&self, s: &Sym) -> (f64, f64, f64) {
        let (p, q, t) = (self.num(s.p), self.num(s.q), self.num(s.t));
        let (m, c, beta) = (self.num(s.m), self.num(s.c), self.num(s.beta));
        // k0 = max(1, ⌈log2(1 + 1/Δ)⌉ − 1)
        let k0 = ((1.0 + 1.0 / s.diam).log2().ceil() as i64 - 1).max(1);
        let den = self.denom(s);
        let pre = {
            let e = self.add(
                &self.add(&self.mul(&self.num(2.0), &p), &self.mul(&self.num(5.0), &q)),
                &self.num(2.0),
            );
            let four = self.num(4.0);
            let f = self.pow(&four, &e);
            let dp1 = self.num(s.diam + 1.0);
            let dq = self.pow(&dp1, &q);
            self.div(&self.mul(&self.mul(&f, &m), &dq), &den)
        };
        let rate = self.sub(&self.mul(&beta, &p), &self.sub(&q, &t));
        let four_t = {
            let four = self.num(4.0);
            self.pow(&four, &t)
        };
        let ln_c = self.ln(&c);
        let ln2 = {
            let two = self.num(2.0);
            self.ln(&two)
        };
        let eps = self.num(1e-40);
        let mut sum = self.num(0.0);
        let mut k = k0;
        let mut small = 0;
        while small < 200 {
            let kk = self.int(k);
            let arg = self.add(&ln_c, &self.mul(&self.mul(&self.int(k + 1), &t), &ln2));
            let lq = self.pow(&arg, &q);
            let inner = self.add(&self.mul(&self.mul(&four_t, &lq), &den), &self.num(1.0));
            let g = {
                let e = self.mul(&rate, &kk);
                self.two_pow(&e)
            };
            let term = self.mul(&g, &inner);
            sum = self.add(&sum, &term);
            small = if self.lt(&term, &self.mul(&eps, &sum)) {
                small + 1
            } else {
                0
            };
            k += 1;
            assert!(k < 2_000_000, "oracle series too slow");
        }
        let l1 = self.mul(&self.mul(&pre, &c), &sum);
        let rho = self.two_pow(&rate);
        let l2 = self.mul(
            &self.mul(&pre, &c),
            &self.div(&rho, &self.sub(&self.num(1.0), &rho)),
        );
        let l = self.add(&l1, &l2);
        (self.to_f64(&l), self.to_f64(&l1), self.to_f64(&l2))
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

/// Minimum internal cover size by trying every subset in order of size.
pub fn naive_covering_number(space: &FiniteMetricSpace, eta: f64) -> usize {
    let n = space.len();
    assert!(n <= 20);
    let full: u32 = if n == 32 { u32::MAX } else { (1 << n) - 1 };
    let balls: Vec<u32> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| space.d(i, j) <= eta)
                .fold(0, |m, j| m | (1 << j))
        })
        .collect();
    let mut best = n;
    for subset in 1u32..(1 << n) {
        let size = subset.count_ones() as usize;
        if size >= best {
            continue;
        }
        let covered = (0..n)
            .filter(|&i| subset & (1 << i) != 0)
            .fold(0, |m, i| m | balls[i]);
        if covered == full {
            best = size;
        }
    }
    best
}

/// Uniform point cloud in `[0,1]^m` with `n` points, redrawn until points are distinct.
pub fn random_cloud(rng: &mut ChaCha8Rng, n: usize, m: usize) -> FiniteMetricSpace {
    loop {
        let coords: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..m).map(|_| rng.random::<f64>()).collect())
            .collect();
        if let Ok(s) = FiniteMetricSpace::euclidean(coords) {
            return s;
        }
    }
}

/// The random-space corpus shared by the structural and covering checks:
/// `m` cycles through 1, 2, 3 and `n` through 2..=20.
pub fn corpus(count: usize, seed: u64) -> Vec<FiniteMetricSpace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let m = 1 + k % 3;
            let n = 2 + rng.random_range(0..19);
            random_cloud(&mut rng, n, m)
        })
        .collect()
}
