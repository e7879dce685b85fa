use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};

/// Arithmetic used for exact laws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arithmetic {
    /// Arbitrary-precision rationals; exact, capped at small `n`.
    Rational,
    /// Natural-log binary64 values with log-sum-exp reductions.
    LogSpace,
}

/// Mixing weights of the pruning recursion for one leaf count `n`:
/// `w(n, m) = P(S_{2,n} = m)` for `1 ≤ m ≤ ⌊n/2⌋`.
#[derive(Clone, Debug)]
pub struct PruneKernel {
    n: usize,
    weights: KernelWeights,
}

#[derive(Clone, Debug)]
pub enum KernelWeights {
    Rational(Vec<BigRational>),
    Log(Vec<f64>),
}

impl PruneKernel {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Largest pruned size `⌊n/2⌋`.
    pub fn max_m(&self) -> usize {
        self.n / 2
    }

    pub fn weights(&self) -> &KernelWeights {
        &self.weights
    }

    /// `log w(n, m)`; `-inf` outside `1..=⌊n/2⌋`.
    pub fn log_weight(&self, m: usize) -> f64 {
        if m == 0 || m > self.max_m() {
            return f64::NEG_INFINITY;
        }
        match &self.weights {
            KernelWeights::Log(w) => w[m - 1],
            KernelWeights::Rational(w) => super::rational_ln(&w[m - 1]),
        }
    }

    pub fn weight(&self, m: usize) -> f64 {
        self.log_weight(m).exp()
    }

    /// Exact weight (rational mode only).
    pub fn rational_weight(&self, m: usize) -> Option<&BigRational> {
        match &self.weights {
            KernelWeights::Rational(w) if m >= 1 && m <= w.len() => Some(&w[m - 1]),
            _ => None,
        }
    }
}

/// Builds the kernel for `n ≥ 2`.
pub fn prune_kernel(n: usize, mode: Arithmetic) -> Result<PruneKernel> {
    if n < 2 {
        return Err(Error::Domain(format!("prune kernel needs n >= 2, got {n}")));
    }
    let weights = match mode {
        Arithmetic::Rational => {
            if n > super::RATIONAL_CAP {
                return Err(Error::Resource {
                    what: "rational-mode leaf count",
                    requested: n as u64,
                    cap: super::RATIONAL_CAP as u64,
                });
            }
            KernelWeights::Rational(rational_weights(n))
        }
        Arithmetic::LogSpace => {
            if n > super::LOG_SPACE_CAP {
                return Err(Error::Resource {
                    what: "log-space leaf count",
                    requested: n as u64,
                    cap: super::LOG_SPACE_CAP as u64,
                });
            }
            let lf = LogFactorials::up_to(2 * n);
            KernelWeights::Log(lf.kernel_log_weights(n))
        }
    };
    Ok(PruneKernel { n, weights })
}

fn factorial(k: usize) -> BigUint {
    (1..=k as u64).fold(BigUint::one(), |acc, i| acc * i)
}

/// `n!(n−1)!(n−2)!/(2n−2)! · 2^{n−2m} / ((n−2m)! m! (m−1)!)`, exactly.
pub(crate) fn rational_weights(n: usize) -> Vec<BigRational> {
    let fact: Vec<BigUint> = (0..=2 * n).map(factorial).collect();
    let pre_num = &fact[n] * &fact[n - 1] * &fact[n - 2];
    let pre_den = &fact[2 * n - 2];
    (1..=n / 2)
        .map(|m| {
            let num = &pre_num * (BigUint::one() << (n - 2 * m));
            let den = pre_den * &fact[n - 2 * m] * &fact[m] * &fact[m - 1];
            BigRational::new(num.into(), den.into())
        })
        .collect()
}

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

impl Dd {
    fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = two_sum(s, e + t);
        let (hi, lo) = two_sum(s, e + f);
        Dd { hi, lo }
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    /// Product with a small exact integer.
    fn scale(self, k: f64) -> Dd {
        let p = self.hi * k;
        let e = self.hi.mul_add(k, -p);
        let (hi, lo) = two_sum(p, e + self.lo * k);
        Dd { hi, lo }
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

// Same rounding as the `ln 2` entry of the factorial table, so exact
// cancellations in the kernel exponent stay exact.
const LN_2_DD: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 0.0,
};

/// `ln k!` accumulated in double-double so that the large cancelling terms
/// of the kernel formula keep their low-order bits.
#[derive(Clone, Debug, Default)]
pub(crate) struct LogFactorials {
    table: Vec<Dd>,
}

impl LogFactorials {
    pub(crate) fn up_to(k: usize) -> Self {
        let mut lf = LogFactorials::default();
        lf.extend_to(k);
        lf
    }

    pub(crate) fn extend_to(&mut self, k: usize) {
        if self.table.is_empty() {
            self.table.push(Dd::from_f64(0.0));
        }
        while self.table.len() <= k {
            let i = self.table.len();
            let prev = self.table[i - 1];
            self.table.push(prev.add(Dd::from_f64((i as f64).ln())));
        }
    }

    fn get(&self, k: usize) -> Dd {
        self.table[k]
    }

    /// `log w(n, m)` for `m = 1..=⌊n/2⌋`; requires the table to reach `2n − 2`.
    pub(crate) fn kernel_log_weights(&self, n: usize) -> Vec<f64> {
        let pre = self
            .get(n)
            .add(self.get(n - 1))
            .add(self.get(n - 2))
            .sub(self.get(2 * n - 2));
        (1..=n / 2)
            .map(|m| {
                pre.add(LN_2_DD.scale((n - 2 * m) as f64))
                    .sub(self.get(n - 2 * m))
                    .sub(self.get(m))
                    .sub(self.get(m - 1))
                    .value()
            })
            .collect()
    }
}
