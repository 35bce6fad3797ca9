//! Large-system Gaussian statistics of the instantaneous capacity.
//!
//! For i.i.d. channels with unit-variance entries and `E|h|⁴ = 2`, capacity
//! is asymptotically Gaussian with mean and variance given in closed form via
//! the function `F(x, z)`; for square channels there is also a simpler
//! high-SNR expansion. For the correlated keyhole channel the mean is
//! `ln(1 + nγ)` and the variance is the sum of the two end correlation
//! measures.

use crate::capacity::Snr;
use crate::channel::KeyholeChannelSpec;
use crate::error::{domain, DmtError, Result};
use crate::scalar::Scalar;

/// Gaussian capacity statistics: mean in nats, variance in nats².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityStats<T> {
    pub mean: T,
    pub variance: T,
}

impl<T: Scalar> CapacityStats<T> {
    pub fn new(mean: T, variance: T) -> Result<Self> {
        if !(variance > T::zero()) || !mean.is_finite() || !variance.is_finite() {
            return Err(DmtError::InvalidInput(format!(
                "capacity statistics need finite mean and positive variance (mean={mean}, variance={variance})"
            )));
        }
        Ok(Self { mean, variance })
    }

    pub fn std_dev(&self) -> T {
        self.variance.sqrt()
    }
}

/// Tx/Rx aspect ratio `β = m/n`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AspectRatio<T>(T);

impl<T: Scalar> AspectRatio<T> {
    pub fn new(beta: T) -> Result<Self> {
        if beta > T::zero() && beta.is_finite() {
            Ok(Self(beta))
        } else {
            Err(DmtError::InvalidInput(format!(
                "aspect ratio must be positive, got {beta}"
            )))
        }
    }

    pub fn square() -> Self {
        Self(T::one())
    }

    pub fn from_antennas(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(DmtError::InvalidInput(
                "antenna counts must be positive".into(),
            ));
        }
        Self::new(T::from_count(m as u64) / T::from_count(n as u64))
    }

    pub fn value(self) -> T {
        self.0
    }
}

/// `F(x, z) = (√(x(1+√z)² + 1) − √(x(1−√z)² + 1))²`.
pub fn f_function<T: Scalar>(x: T, z: T) -> Result<T> {
    if !(x > T::zero()) || !(z > T::zero()) {
        return Err(DmtError::InvalidInput(format!(
            "F(x, z) requires x, z > 0 (x={x}, z={z})"
        )));
    }
    let sz = z.sqrt();
    let a = (x * (T::one() + sz).powi(2) + T::one()).sqrt();
    let b = (x * (T::one() - sz).powi(2) + T::one()).sqrt();
    // (a - b) rewritten as 4x√z / (a + b) avoids cancellation for small x
    let diff = T::lit(4.0) * x * sz / (a + b);
    Ok(diff * diff)
}

/// Asymptotic mean and variance for an `n × (βn)` i.i.d. channel.
///
/// For `β = 1` this is `C̄/n = 2 ln(1 + γ − F/4) − F/(4γ)` and
/// `σ² = −ln(1 − (F/(4γ))²)` with `F = F(γ, 1)`. General `β` follows the
/// same formula with `F = F(γ/β, β)`.
pub fn theorem1_stats<T: Scalar>(
    snr: Snr<T>,
    n: usize,
    beta: AspectRatio<T>,
) -> Result<CapacityStats<T>> {
    if n == 0 {
        return Err(DmtError::InvalidInput("n must be positive".into()));
    }
    let g = snr.linear();
    let b = beta.value();
    let f = f_function(g / b, b)?;
    let quarter = T::lit(0.25);
    let per_antenna = b * (T::one() + g / b - quarter * f).ln() + (T::one() + g - quarter * f).ln()
        - b * f / (T::lit(4.0) * g);
    let ratio = f / (T::lit(4.0) * g);
    let arg = T::one() - b * ratio * ratio;
    if !(arg > T::zero()) {
        return Err(DmtError::NumericalDomain {
            context: "theorem1_stats variance",
            detail: format!("1 - β(F/4γ)² = {arg} is not positive (γ={g}, β={b})"),
        });
    }
    let variance = -arg.ln();
    let mean = T::from_count(n as u64) * per_antenna;
    CapacityStats::new(mean, variance).map_err(|_| DmtError::NumericalDomain {
        context: "theorem1_stats",
        detail: format!("degenerate statistics at γ={g}: mean={mean}, variance={variance}"),
    })
}

/// High-SNR expansion for square channels:
/// `C̄/n ≈ ln(γ/e) + 2/√γ`, `σ² ≈ ½(ln(γ/4) + 2/√γ)`.
pub fn high_snr_stats<T: Scalar>(snr: Snr<T>, n: usize) -> Result<CapacityStats<T>> {
    let g = snr.linear();
    if !(g > T::one()) {
        return Err(domain(
            "high_snr_stats",
            format!("expansion needs γ > 1, got {g}"),
        ));
    }
    if n == 0 {
        return Err(DmtError::InvalidInput("n must be positive".into()));
    }
    let corr = T::lit(2.0) / g.sqrt();
    let mean = T::from_count(n as u64) * (g.ln() - T::one() + corr);
    let variance = T::lit(0.5) * ((g / T::lit(4.0)).ln() + corr);
    CapacityStats::new(mean, variance).map_err(|_| {
        domain(
            "high_snr_stats",
            format!("expansion variance is not positive at γ={g}"),
        )
    })
}

/// Keyhole statistics: `C̄ = ln(1 + nγ)`, `σ² = m⁻²‖R_t‖² + n⁻²‖R_r‖²`.
///
/// The spec's normalization is checked when it is built, so nothing is
/// rescaled here.
pub fn keyhole_stats<T: Scalar>(
    snr: Snr<T>,
    spec: &KeyholeChannelSpec<T>,
) -> Result<CapacityStats<T>> {
    let n = T::from_count(spec.n() as u64);
    let mean = (n * snr.linear()).ln_1p();
    CapacityStats::new(mean, spec.total_correlation())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snr(g: f64) -> Snr<f64> {
        Snr::from_linear(g).unwrap()
    }

    #[test]
    fn f_function_values() {
        let want = (41f64.sqrt() - 1.0).powi(2);
        assert!((f_function(10.0, 1.0).unwrap() - want).abs() < 1e-12);
        assert!((want - 29.1938).abs() < 1e-4);
        assert!(f_function(1e-12, 1.0).unwrap() < 1e-20);
        assert!(f_function(0.0, 1.0).is_err());
        assert!(f_function(1.0, -1.0).is_err());
    }

    #[test]
    fn f_function_square_simplification() {
        for k in -30..=60 {
            let g = 10f64.powf(k as f64 / 10.0);
            let direct = ((4.0 * g + 1.0).sqrt() - 1.0).powi(2);
            let got = f_function(g, 1.0).unwrap();
            assert!(((got - direct) / direct).abs() < 1e-12, "γ={g}");
        }
    }

    #[test]
    fn theorem1_reference_point() {
        let s = theorem1_stats(snr(10.0), 1, AspectRatio::square()).unwrap();
        assert!((s.mean - 1.8876).abs() < 1e-3, "{}", s.mean);
        assert!((s.variance - 0.7606).abs() < 1e-3, "{}", s.variance);
        let s10 = theorem1_stats(snr(10.0), 10, AspectRatio::square()).unwrap();
        assert!((s10.mean - 10.0 * s.mean).abs() < 1e-12);
        assert_eq!(s10.variance, s.variance);
    }

    #[test]
    fn theorem1_low_snr_limit() {
        let g = 1e-5;
        let s = theorem1_stats(snr(g), 1, AspectRatio::square()).unwrap();
        assert!(((s.mean - g) / g).abs() < 1e-4);
        assert!(s.variance < 1e-8);
    }

    #[test]
    fn theorem1_variance_argument_stays_in_unit_interval() {
        for k in -30..=60 {
            let g = 10f64.powf(k as f64 / 10.0);
            let f = f_function(g, 1.0).unwrap();
            let arg = 1.0 - (f / (4.0 * g)).powi(2);
            assert!(arg > 0.0 && arg <= 1.0);
            let s = theorem1_stats(snr(g), 4, AspectRatio::square()).unwrap();
            assert!(s.variance > 0.0 && s.variance.is_finite());
        }
    }

    #[test]
    fn theorem1_mean_increasing_and_concave() {
        let vals: Vec<f64> = (0..200)
            .map(|k| {
                let g = 10f64.powf(-2.0 + k as f64 * 0.03);
                theorem1_stats(snr(g), 1, AspectRatio::square())
                    .unwrap()
                    .mean
            })
            .collect();
        // concave in γ on a geometric grid: check the chord slopes decrease
        let gs: Vec<f64> = (0..200)
            .map(|k| 10f64.powf(-2.0 + k as f64 * 0.03))
            .collect();
        for i in 1..vals.len() {
            assert!(vals[i] > vals[i - 1]);
        }
        for i in 2..vals.len() {
            let s1 = (vals[i - 1] - vals[i - 2]) / (gs[i - 1] - gs[i - 2]);
            let s2 = (vals[i] - vals[i - 1]) / (gs[i] - gs[i - 1]);
            assert!(s2 < s1);
        }
    }

    #[test]
    fn high_snr_reference_points() {
        let g15 = 10f64.powf(1.5);
        let hs = high_snr_stats(snr(g15), 1).unwrap();
        let t1 = theorem1_stats(snr(g15), 1, AspectRatio::square()).unwrap();
        assert!((hs.mean - 2.8095).abs() < 1e-3);
        assert!((t1.mean - 2.7936).abs() < 1e-3, "{}", t1.mean);
        assert!(((hs.mean - t1.mean) / t1.mean).abs() < 0.006);

        let hs10 = high_snr_stats(snr(10.0), 1).unwrap();
        assert!((hs10.variance - 0.7744).abs() < 1e-4);
        assert!((hs10.mean - 1.9350).abs() < 1e-4);

        let big = high_snr_stats(snr(1e12), 1).unwrap();
        assert!((big.mean - 1e12f64.ln() + 1.0).abs() < 1e-5);
        assert!(high_snr_stats(snr(1.0), 1).is_err());
    }

    #[test]
    fn keyhole_examples() {
        let spec = KeyholeChannelSpec::<f64>::uncorrelated(10, 10).unwrap();
        let s = keyhole_stats(snr(10.0), &spec).unwrap();
        assert!((s.mean - 101f64.ln()).abs() < 1e-14);
        assert!((s.variance - 0.2).abs() < 1e-15);

        let tiny = keyhole_stats(snr(1e-9), &spec).unwrap();
        assert!(((tiny.mean - 1e-8) / 1e-8).abs() < 1e-7);

        let corr = KeyholeChannelSpec::<f64>::exponential(2, 2, 0.5, 0.5).unwrap();
        assert!((keyhole_stats(snr(1.0), &corr).unwrap().variance - 1.25).abs() < 1e-15);
    }

    #[test]
    fn keyhole_variance_symmetric_under_end_swap() {
        let spec = KeyholeChannelSpec::<f64>::exponential(3, 7, 0.2, 0.8).unwrap();
        let a = keyhole_stats(snr(5.0), &spec).unwrap().variance;
        let b = keyhole_stats(snr(5.0), &spec.swapped()).unwrap().variance;
        assert!((a - b).abs() < 1e-15);
    }
}
