//! Probability kernels: binomial and Poisson mass functions and tails, the
//! regularized incomplete Beta function for integer parameters, and the
//! standard normal tail.
//!
//! Mass functions use Loader's saddle-point form (Stirling error plus the
//! deviance term `bd0`), which keeps relative error near machine precision
//! for large counts where naive `ln_gamma` differences lose digits. Tails
//! are summed outward from the mode side with compensated summation and
//! stop once terms no longer change the total.

use std::f64::consts::{PI, SQRT_2};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Neumaier compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        iter.into_iter().for_each(|x| s.add(x));
        s
    }
}

// ln(n!) - [(n + 1/2) ln n - n + ln sqrt(2 pi)] at n = 0..=15.
const STIRLERR_SMALL: [f64; 16] = [
    0.0,
    0.081_061_466_795_327_258_219_670_2,
    0.041_340_695_955_409_294_093_822_1,
    0.027_677_925_684_998_339_148_789_29,
    0.020_790_672_103_765_093_111_522_77,
    0.016_644_691_189_821_192_163_194_87,
    0.013_876_128_823_070_747_998_745_73,
    0.011_896_709_945_891_770_095_055_72,
    0.010_411_265_261_972_096_497_478_567,
    0.009_255_462_182_712_732_917_728_637,
    0.008_330_563_433_362_871_256_469_318,
    0.007_573_675_487_951_840_794_972_024,
    0.006_942_840_107_209_529_865_664_152,
    0.006_408_994_188_004_207_068_439_631,
    0.005_951_370_112_758_847_735_624_416,
    0.005_554_733_551_962_801_371_038_690,
];

/// Stirling-series error term for integer `n`.
fn stirlerr(n: u64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15 {
        return STIRLERR_SMALL[n as usize];
    }
    let n = n as f64;
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x / np) + np - x`, computed stably near `x = np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// `P{Bin(n, p) = x}`.
pub fn binom_pmf(x: u64, n: u64, p: f64) -> f64 {
    if x > n {
        return 0.0;
    }
    let q = 1.0 - p;
    if p == 0.0 {
        return if x == 0 { 1.0 } else { 0.0 };
    }
    if q == 0.0 {
        return if x == n { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    if x == 0 {
        return if p > q { q.powf(nf) } else { (nf * (-p).ln_1p()).exp() };
    }
    if x == n {
        return if p > q { (nf * (-q).ln_1p()).exp() } else { p.powf(nf) };
    }
    let xf = x as f64;
    let lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(xf, nf * p) - bd0(nf - xf, nf * q);
    let lf = LN_2PI + xf.ln() + (-xf / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// `P{Poisson(lambda) = x}`.
pub fn poisson_pmf(x: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return if x == 0 { 1.0 } else { 0.0 };
    }
    if x == 0 {
        return (-lambda).exp();
    }
    let xf = x as f64;
    (-stirlerr(x) - bd0(xf, lambda)).exp() / (2.0 * PI * xf).sqrt()
}

/// Relative size below which a tail term no longer matters.
const TAIL_EPS: f64 = 1e-18;

/// Upper binomial tail `P{Bin(m, p) >= r}`.
pub fn binom_sf(r: u64, m: u64, p: f64) -> f64 {
    if r == 0 {
        return 1.0;
    }
    if r > m || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    let mut acc = CompensatedSum::new();
    if ((r - 1) as f64) < m as f64 * p {
        // r - 1 sits at or below the mode: the lower tail terms shrink as
        // the index decreases.
        for nu in (0..r).rev() {
            let t = binom_pmf(nu, m, p);
            acc.add(t);
            if t <= TAIL_EPS * acc.value() {
                break;
            }
        }
        (1.0 - acc.value()).clamp(0.0, 1.0)
    } else {
        for nu in r..=m {
            let t = binom_pmf(nu, m, p);
            acc.add(t);
            if t <= TAIL_EPS * acc.value() {
                break;
            }
        }
        acc.value().clamp(0.0, 1.0)
    }
}

/// Upper Poisson tail `P{Poisson(lambda) >= y}`.
pub fn poisson_sf(y: u64, lambda: f64) -> f64 {
    if y == 0 {
        return 1.0;
    }
    if lambda <= 0.0 {
        return 0.0;
    }
    let mut acc = CompensatedSum::new();
    if ((y - 1) as f64) < lambda {
        for nu in (0..y).rev() {
            let t = poisson_pmf(nu, lambda);
            acc.add(t);
            if t <= TAIL_EPS * acc.value() {
                break;
            }
        }
        (1.0 - acc.value()).clamp(0.0, 1.0)
    } else {
        let mut nu = y;
        loop {
            let t = poisson_pmf(nu, lambda);
            acc.add(t);
            if t <= TAIL_EPS * acc.value() || t == 0.0 {
                break;
            }
            nu += 1;
        }
        acc.value().clamp(0.0, 1.0)
    }
}

/// Regularized incomplete Beta `I_x(a, b)` for positive integer `a`, `b`,
/// by Lentz's continued fraction. The prefactor `x^a (1-x)^b / (a B(a, b))`
/// is rewritten as a binomial mass so it inherits that accuracy.
pub fn beta_reg_int(a: u64, b: u64, x: f64) -> f64 {
    assert!(a >= 1 && b >= 1, "beta parameters must be positive");
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let (af, bf) = (a as f64, b as f64);
    if x < (af + 1.0) / (af + bf + 2.0) {
        let front = (1.0 - x) * binom_pmf(a, a + b - 1, x);
        (front * beta_cf(af, bf, x)).clamp(0.0, 1.0)
    } else {
        let front = x * binom_pmf(b, a + b - 1, 1.0 - x);
        (1.0 - front * beta_cf(bf, af, 1.0 - x)).clamp(0.0, 1.0)
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 100_000;
    const EPS: f64 = 4.0 * f64::EPSILON;
    const FPMIN: f64 = f64::MIN_POSITIVE / f64::EPSILON;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let guard = |v: f64| if v.abs() < FPMIN { FPMIN } else { v };
    let mut c = 1.0;
    let mut d = 1.0 / guard(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Standard normal upper tail `1 - Phi(x)`.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

pub fn normal_cdf(x: f64) -> f64 {
    normal_sf(-x)
}
