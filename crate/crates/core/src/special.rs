//! Complementary error function and the Gaussian tail `Q(x)`.
//!
//! Uses W. J. Cody's rational Chebyshev approximations (the `CALERF` scheme),
//! which keep full relative accuracy for `erfc` deep into the tail. The
//! scaled variant `erfcx(x) = exp(x²) erfc(x)` gives `ln Q(x)` for arguments
//! far beyond the underflow point of `Q` itself.

// coefficients are kept exactly as tabulated
#![allow(clippy::excessive_precision)]

use crate::scalar::Scalar;

const A: [f64; 5] = [
    3.161_123_743_870_565_6e0,
    1.138_641_541_510_501_6e2,
    3.774_852_376_853_020_2e2,
    3.209_377_589_138_469_5e3,
    1.857_777_061_846_031_5e-1,
];
const B: [f64; 4] = [
    2.360_129_095_234_412_1e1,
    2.440_246_379_344_441_7e2,
    1.282_616_526_077_372_3e3,
    2.844_236_833_439_170_6e3,
];
const C: [f64; 9] = [
    5.641_884_969_886_700_9e-1,
    8.883_149_794_388_376e0,
    6.611_919_063_714_163e1,
    2.986_351_381_974_001_3e2,
    8.819_522_212_417_691e2,
    1.712_047_612_634_070_6e3,
    2.051_078_377_826_071_5e3,
    1.230_339_354_797_997_2e3,
    2.153_115_354_744_038_5e-8,
];
const D: [f64; 8] = [
    1.574_492_611_070_983_5e1,
    1.176_939_508_913_125e2,
    5.371_811_018_620_099e2,
    1.621_389_574_566_690_2e3,
    3.290_799_235_733_459_6e3,
    4.362_619_090_143_247e3,
    3.439_367_674_143_721_6e3,
    1.230_339_354_803_749_4e3,
];
const P: [f64; 6] = [
    3.053_266_349_612_323_4e-1,
    3.603_448_999_498_044_4e-1,
    1.257_817_261_112_292_5e-1,
    1.608_378_514_874_227_7e-2,
    6.587_491_615_298_378e-4,
    1.631_538_713_730_209_8e-2,
];
const Q: [f64; 5] = [
    2.568_520_192_289_822_4e0,
    1.872_952_849_923_467_3e0,
    5.279_051_029_514_284e-1,
    6.051_834_131_244_132e-2,
    2.335_204_976_268_691_9e-3,
];
const INV_SQRT_PI: f64 = 5.641_895_835_477_562_9e-1;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Flavor {
    Erfc,
    Erfcx,
}

/// `erf(x)` on `|x| ≤ 0.46875`.
fn erf_small<T: Scalar>(x: T) -> T {
    let ysq = if x.abs() > T::lit(1.11e-16) {
        x * x
    } else {
        T::zero()
    };
    let mut num = T::lit(A[4]) * ysq;
    let mut den = ysq;
    for i in 0..3 {
        num = (num + T::lit(A[i])) * ysq;
        den = (den + T::lit(B[i])) * ysq;
    }
    x * (num + T::lit(A[3])) / (den + T::lit(B[3]))
}

/// `erfcx(y)` for `y > 0.46875`.
fn erfcx_tail<T: Scalar>(y: T) -> T {
    if y <= T::lit(4.0) {
        let mut num = T::lit(C[8]) * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + T::lit(C[i])) * y;
            den = (den + T::lit(D[i])) * y;
        }
        (num + T::lit(C[7])) / (den + T::lit(D[7]))
    } else {
        let ysq = T::one() / (y * y);
        let mut num = T::lit(P[5]) * ysq;
        let mut den = ysq;
        for i in 0..4 {
            num = (num + T::lit(P[i])) * ysq;
            den = (den + T::lit(Q[i])) * ysq;
        }
        let r = ysq * (num + T::lit(P[4])) / (den + T::lit(Q[4]));
        (T::lit(INV_SQRT_PI) - r) / y
    }
}

/// `exp(-y²)` split as in Cody's code to avoid cancellation in `y²`.
fn exp_neg_sq<T: Scalar>(y: T) -> T {
    let sixteen = T::lit(16.0);
    let head = (y * sixteen).trunc() / sixteen;
    let del = (y - head) * (y + head);
    (-head * head).exp() * (-del).exp()
}

fn calerf<T: Scalar>(x: T, flavor: Flavor) -> T {
    if x.is_nan() {
        return x;
    }
    let y = x.abs();
    let two = T::lit(2.0);
    if y <= T::lit(0.46875) {
        let erfc = T::one() - erf_small(x);
        return match flavor {
            Flavor::Erfc => erfc,
            Flavor::Erfcx => (x * x).exp() * erfc,
        };
    }
    if y.is_infinite() {
        return match (flavor, x > T::zero()) {
            (Flavor::Erfc, true) | (Flavor::Erfcx, true) => T::zero(),
            (Flavor::Erfc, false) => two,
            (Flavor::Erfcx, false) => T::infinity(),
        };
    }
    let scaled = erfcx_tail(y);
    match (flavor, x > T::zero()) {
        (Flavor::Erfc, true) => exp_neg_sq(y) * scaled,
        (Flavor::Erfc, false) => two - exp_neg_sq(y) * scaled,
        (Flavor::Erfcx, true) => scaled,
        (Flavor::Erfcx, false) => {
            // erfcx(-y) = 2 exp(y²) - erfcx(y)
            let e = exp_neg_sq(y);
            if e == T::zero() {
                T::infinity()
            } else {
                two / e - scaled
            }
        }
    }
}

/// Complementary error function.
pub fn erfc<T: Scalar>(x: T) -> T {
    calerf(x, Flavor::Erfc)
}

/// Scaled complementary error function `exp(x²)·erfc(x)`.
pub fn erfcx<T: Scalar>(x: T) -> T {
    calerf(x, Flavor::Erfcx)
}

pub fn erf<T: Scalar>(x: T) -> T {
    if x.abs() <= T::lit(0.46875) {
        erf_small(x)
    } else {
        T::one() - erfc(x)
    }
}

/// Gaussian tail probability `Q(x) = P[N(0,1) > x] = ½ erfc(x/√2)`.
pub fn q_function<T: Scalar>(x: T) -> T {
    T::lit(0.5) * erfc(x * T::FRAC_1_SQRT_2())
}

/// `ln Q(x)`, finite for every finite `x` including where `Q(x)` underflows.
pub fn ln_q_function<T: Scalar>(x: T) -> T {
    let u = x * T::FRAC_1_SQRT_2();
    if u > T::lit(0.46875) {
        // ln(½ erfcx(u)) - u²
        (T::lit(0.5) * erfcx(u)).ln() - u * u
    } else {
        q_function(x).ln()
    }
}

/// Inverse of [`q_function`] on `(0, 1)`: returns `x` with `Q(x) = p`.
///
/// Bisection on a bracket followed by Newton polishing; used to get the
/// normal quantile for confidence intervals.
pub fn q_inverse<T: Scalar>(p: T) -> Option<T> {
    if !(p > T::zero() && p < T::one()) {
        return None;
    }
    let (mut lo, mut hi) = (T::lit(-40.0), T::lit(40.0));
    for _ in 0..200 {
        let mid = T::lit(0.5) * (lo + hi);
        if q_function(mid) > p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= T::epsilon() * (T::one() + mid.abs()) {
            break;
        }
    }
    let mut x = T::lit(0.5) * (lo + hi);
    let inv_sqrt_2pi = T::FRAC_1_SQRT_2() * T::FRAC_2_SQRT_PI() * T::lit(0.5);
    for _ in 0..3 {
        let pdf = inv_sqrt_2pi * (-(x * x) * T::lit(0.5)).exp();
        if pdf <= T::zero() {
            break;
        }
        x += (q_function(x) - p) / pdf;
    }
    Some(x)
}
