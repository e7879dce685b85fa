//! Pushforward of branch-count laws through the pruning recursion:
//! `P(S_{r+1,n} = k) = Σ_m w(n, m) · P(S_{r,m} = k)`.

use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use super::kernel::{rational_weights, LogFactorials};

/// A law over `start..start + mass.len()`.
#[derive(Clone, Debug)]
pub(crate) struct Pmf<T> {
    pub start: u64,
    pub mass: Vec<T>,
}

static POINT_LOG: [f64; 1] = [0.0];

/// Reusable log-space table of laws of `S_{r,m}`.
///
/// Orders 1 and 2 are implicit (point masses and kernels); orders `≥ 3` are
/// stored for every `m` up to the largest size requested so far. Building is
/// single-writer; summation order is ascending in `m` for every entry, so
/// results do not depend on the rayon thread count.
#[derive(Clone, Debug, Default)]
pub struct LogDpTable {
    logfact: LogFactorials,
    // kernels[m] = log w(m, ·) for m >= 2
    kernels: Vec<Vec<f64>>,
    // levels[r - 3][m - 1] = law of S_{r,m}
    levels: Vec<Vec<Pmf<f64>>>,
}

impl LogDpTable {
    pub fn new() -> Self {
        LogDpTable::default()
    }

    fn ensure_kernels(&mut self, cap: usize) {
        if self.kernels.len() > cap {
            return;
        }
        self.logfact.extend_to(2 * cap);
        let from = self.kernels.len().max(2);
        if self.kernels.len() < 2 {
            self.kernels.resize(2, Vec::new());
        }
        let lf = &self.logfact;
        let fresh: Vec<Vec<f64>> = (from..=cap)
            .into_par_iter()
            .map(|m| lf.kernel_log_weights(m))
            .collect();
        self.kernels.extend(fresh);
    }

    fn kernel(&mut self, n: usize) -> Vec<f64> {
        if n < self.kernels.len() {
            return self.kernels[n].clone();
        }
        self.logfact.extend_to(2 * n);
        self.logfact.kernel_log_weights(n)
    }

    /// Makes the law of `S_{order,m}` available for every `m ≤ cap`.
    fn ensure_level(&mut self, order: usize, cap: usize) {
        if order <= 2 {
            self.ensure_kernels(cap);
            return;
        }
        let idx = order - 3;
        if self.levels.len() > idx && self.levels[idx].len() >= cap {
            return;
        }
        self.ensure_level(order - 1, cap / 2);
        self.ensure_kernels(cap);
        while self.levels.len() <= idx {
            self.levels.push(Vec::new());
        }
        let (below, rest) = self.levels.split_at_mut(idx);
        let current = &mut rest[0];
        let below: &[Vec<Pmf<f64>>] = below;
        let kernels = &self.kernels;
        let lower = |m: usize| view(kernels, below, order - 1, m);
        let fresh: Vec<Pmf<f64>> = (current.len() + 1..=cap)
            .into_par_iter()
            .map(|m| {
                if m == 1 {
                    Pmf {
                        start: 0,
                        mass: vec![0.0],
                    }
                } else {
                    mix_log(&kernels[m], &lower)
                }
            })
            .collect();
        current.extend(fresh);
    }

    /// Law of `S_{r,n}` in log space (`r ≥ 1`, `n ≥ 1`).
    pub(crate) fn law(&mut self, r: usize, n: usize) -> Pmf<f64> {
        debug_assert!(r >= 1 && n >= 1);
        if r == 1 {
            return Pmf {
                start: n as u64,
                mass: vec![0.0],
            };
        }
        if n == 1 {
            return Pmf {
                start: 0,
                mass: vec![0.0],
            };
        }
        if r == 2 {
            return Pmf {
                start: 1,
                mass: self.kernel(n),
            };
        }
        self.ensure_level(r - 1, n / 2);
        let kernel = self.kernel(n);
        let (kernels, levels) = (&self.kernels, &self.levels);
        mix_log(&kernel, &|m| view(kernels, levels, r - 1, m))
    }
}

fn view<'a>(
    kernels: &'a [Vec<f64>],
    levels: &'a [Vec<Pmf<f64>>],
    order: usize,
    m: usize,
) -> (u64, &'a [f64]) {
    match order {
        1 => (m as u64, &POINT_LOG),
        _ if m == 1 => (0, &POINT_LOG),
        2 => (1, &kernels[m]),
        _ => {
            let p = &levels[order - 3][m - 1];
            (p.start, &p.mass)
        }
    }
}

/// `log Σ_m exp(kernel[m-1]) · P_m` evaluated per support point with a
/// max-shifted two-pass log-sum-exp.
fn mix_log<'a, F>(kernel: &[f64], lower: &F) -> Pmf<f64>
where
    F: Fn(usize) -> (u64, &'a [f64]),
{
    let mut lo = u64::MAX;
    let mut hi = 0u64;
    for m in 1..=kernel.len() {
        let (s, mass) = lower(m);
        lo = lo.min(s);
        hi = hi.max(s + mass.len() as u64);
    }
    let width = (hi - lo) as usize;
    let mut peak = vec![f64::NEG_INFINITY; width];
    for (i, &lw) in kernel.iter().enumerate() {
        let (s, mass) = lower(i + 1);
        let off = (s - lo) as usize;
        for (slot, &lp) in peak[off..off + mass.len()].iter_mut().zip(mass) {
            *slot = slot.max(lw + lp);
        }
    }
    let mut acc = vec![0.0f64; width];
    for (i, &lw) in kernel.iter().enumerate() {
        let (s, mass) = lower(i + 1);
        let off = (s - lo) as usize;
        for ((a, &p), &lp) in acc[off..off + mass.len()]
            .iter_mut()
            .zip(&peak[off..off + mass.len()])
            .zip(mass)
        {
            if p > f64::NEG_INFINITY {
                *a += (lw + lp - p).exp();
            }
        }
    }
    let mass = acc
        .iter()
        .zip(&peak)
        .map(|(&a, &p)| {
            if p == f64::NEG_INFINITY {
                p
            } else {
                p + a.ln()
            }
        })
        .collect();
    Pmf { start: lo, mass }
}

/// Exact law of `S_{r,n}` for small `n`.
pub(crate) fn rational_law(r: usize, n: usize) -> Pmf<BigRational> {
    let point = |k: u64| Pmf {
        start: k,
        mass: vec![BigRational::one()],
    };
    if r == 1 {
        return point(n as u64);
    }
    if n == 1 {
        return point(0);
    }
    // laws[m] for the current order, m = 1..=n
    let mut laws: Vec<Pmf<BigRational>> = (0..=n).map(|m| point(m as u64)).collect();
    let kernels: Vec<Vec<BigRational>> = (0..=n)
        .map(|m| {
            if m >= 2 {
                rational_weights(m)
            } else {
                Vec::new()
            }
        })
        .collect();
    for _ in 1..r {
        let mut next = Vec::with_capacity(n + 1);
        next.push(point(0));
        next.push(point(0));
        for kernel in &kernels[2..=n] {
            next.push(mix_rational(kernel, &laws));
        }
        laws = next;
    }
    laws.swap_remove(n)
}

fn mix_rational(kernel: &[BigRational], laws: &[Pmf<BigRational>]) -> Pmf<BigRational> {
    let lo = (1..=kernel.len()).map(|m| laws[m].start).min().unwrap_or(0);
    let hi = (1..=kernel.len())
        .map(|m| laws[m].start + laws[m].mass.len() as u64)
        .max()
        .unwrap_or(0);
    let mut mass = vec![BigRational::zero(); (hi - lo) as usize];
    for (i, w) in kernel.iter().enumerate() {
        let law = &laws[i + 1];
        let off = (law.start - lo) as usize;
        for (slot, p) in mass[off..].iter_mut().zip(&law.mass) {
            *slot += w * p;
        }
    }
    Pmf { start: lo, mass }
}
