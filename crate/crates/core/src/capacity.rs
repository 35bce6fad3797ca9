//! Instantaneous log-det capacity and streaming capacity statistics.

use std::fmt;

use num_complex::Complex;

use crate::channel::ChannelMatrix;
use crate::error::{DmtError, Result};
use crate::linalg::{gram_rows, ln_det_identity_plus};
use crate::scalar::Scalar;

/// Average receive SNR `γ` per Rx antenna, stored as a positive linear ratio.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Snr<T>(T);

impl<T: Scalar> Snr<T> {
    pub fn from_linear(value: T) -> Result<Self> {
        if value > T::zero() && value.is_finite() {
            Ok(Self(value))
        } else {
            Err(DmtError::InvalidInput(format!(
                "SNR must be positive and finite, got {value}"
            )))
        }
    }

    pub fn from_db(db: T) -> Result<Self> {
        Self::from_linear(T::lit(10.0).powf(db / T::lit(10.0)))
    }

    #[inline]
    pub fn linear(self) -> T {
        self.0
    }

    #[inline]
    pub fn db(self) -> T {
        T::lit(10.0) * self.0.log10()
    }

    #[inline]
    pub fn ln(self) -> T {
        self.0.ln()
    }
}

impl<T: Scalar> fmt::Display for Snr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} dB", self.db())
    }
}

/// Capacity of one channel realization, in nats/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CapacitySample<T>(pub T);

impl<T: Scalar> CapacitySample<T> {
    pub fn nats(self) -> T {
        self.0
    }
}

/// `ln det(I + (γ/m) H H⁺)` for an `n × m` channel `H`.
///
/// Works on the smaller of `HH⁺` and `H⁺H` (equal determinants) and uses a
/// Cholesky sweep, so the result is never formed as a raw determinant.
pub fn instantaneous_capacity<T: Scalar>(
    h: &ChannelMatrix<T>,
    snr: Snr<T>,
) -> Result<CapacitySample<T>> {
    if !h.is_finite() {
        return Err(DmtError::InvalidInput(
            "channel matrix has non-finite entries".into(),
        ));
    }
    let mut ws = CapacityWorkspace::new(h.rows(), h.cols());
    ws.load(h.as_slice());
    Ok(CapacitySample(ws.capacity(snr.linear())))
}

/// Closed form for a rank-one channel `H = h_r h_t⁺`:
/// `ln(1 + (γ/m)‖h_r‖²‖h_t‖²)` by the matrix determinant lemma.
pub fn rank_one_capacity<T: Scalar>(
    h_r: &[Complex<T>],
    h_t: &[Complex<T>],
    snr: Snr<T>,
) -> CapacitySample<T> {
    let m = T::from_count(h_t.len() as u64);
    let nr: T = h_r.iter().map(|z| z.norm_sqr()).sum();
    let nt: T = h_t.iter().map(|z| z.norm_sqr()).sum();
    CapacitySample((snr.linear() / m * nr * nt).ln_1p())
}

/// Reusable buffers for evaluating the capacity of many realizations, or one
/// realization at many SNRs, without reallocating.
#[derive(Debug, Clone)]
pub(crate) struct CapacityWorkspace<T> {
    n: usize,
    m: usize,
    dim: usize,
    transposed: Vec<Complex<T>>,
    gram: Vec<Complex<T>>,
    work: Vec<Complex<T>>,
}

impl<T: Scalar> CapacityWorkspace<T> {
    pub(crate) fn new(n: usize, m: usize) -> Self {
        let dim = n.min(m);
        let zero = Complex::new(T::zero(), T::zero());
        Self {
            n,
            m,
            dim,
            transposed: if m < n { vec![zero; n * m] } else { Vec::new() },
            gram: vec![zero; dim * dim],
            work: vec![zero; dim * dim],
        }
    }

    /// Form the Gram matrix of the row-major `n × m` channel in `h`.
    pub(crate) fn load(&mut self, h: &[Complex<T>]) {
        if self.m < self.n {
            for i in 0..self.n {
                for j in 0..self.m {
                    self.transposed[j * self.n + i] = h[i * self.m + j].conj();
                }
            }
            gram_rows(&self.transposed, self.m, self.n, &mut self.gram);
        } else {
            gram_rows(h, self.n, self.m, &mut self.gram);
        }
    }

    /// Capacity of the loaded realization at linear SNR `gamma`.
    pub(crate) fn capacity(&mut self, gamma: T) -> T {
        let scale = gamma / T::from_count(self.m as u64);
        ln_det_identity_plus(scale, &self.gram, self.dim, &mut self.work).max(T::zero())
    }
}

/// Streaming count/mean/variance with optional sample retention.
///
/// Uses Welford's update; [`EmpiricalStats::merge`] is the pairwise
/// combination of Chan et al., so shards can be reduced in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalStats<T> {
    count: u64,
    mean: T,
    m2: T,
    min: T,
    max: T,
    reservoir: Option<Vec<T>>,
}

impl<T: Scalar> Default for EmpiricalStats<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> EmpiricalStats<T> {
    pub fn new() -> Self {
        Self {
            count: 0,
            mean: T::zero(),
            m2: T::zero(),
            min: T::infinity(),
            max: T::neg_infinity(),
            reservoir: None,
        }
    }

    /// Accumulator that also keeps every sample for CDF queries.
    pub fn with_reservoir() -> Self {
        Self {
            reservoir: Some(Vec::new()),
            ..Self::new()
        }
    }

    pub fn from_samples(samples: impl IntoIterator<Item = T>) -> Self {
        let mut s = Self::new();
        for x in samples {
            s.push(x);
        }
        s
    }

    pub fn push(&mut self, x: T) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / T::from_count(self.count);
        self.m2 += delta * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
        if let Some(r) = self.reservoir.as_mut() {
            r.push(x);
        }
    }

    /// Functional form of [`push`](Self::push).
    pub fn accumulate(mut self, sample: CapacitySample<T>) -> Self {
        self.push(sample.0);
        self
    }

    pub fn merge(&mut self, other: &Self) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            let keep = self.reservoir.take();
            *self = other.clone();
            if let (Some(mut mine), Some(theirs)) = (keep, other.reservoir.as_ref()) {
                mine.clear();
                mine.extend_from_slice(theirs);
                self.reservoir = Some(mine);
            }
            return;
        }
        let na = T::from_count(self.count);
        let nb = T::from_count(other.count);
        let total = self.count + other.count;
        let n = T::from_count(total);
        let delta = other.mean - self.mean;
        self.mean += delta * nb / n;
        self.m2 += other.m2 + delta * delta * na * nb / n;
        self.count = total;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
        match (self.reservoir.as_mut(), other.reservoir.as_ref()) {
            (Some(mine), Some(theirs)) => mine.extend_from_slice(theirs),
            (Some(_), None) => self.reservoir = None,
            _ => {}
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> T {
        self.mean
    }

    /// Unbiased variance (divisor `count - 1`); zero below two samples.
    pub fn variance(&self) -> T {
        if self.count < 2 {
            T::zero()
        } else {
            (self.m2 / T::from_count(self.count - 1)).max(T::zero())
        }
    }

    pub fn min(&self) -> Option<T> {
        (self.count > 0).then_some(self.min)
    }

    pub fn max(&self) -> Option<T> {
        (self.count > 0).then_some(self.max)
    }

    pub fn samples(&self) -> Option<&[T]> {
        self.reservoir.as_deref()
    }

    /// Empirical outage from the retained samples.
    pub fn outage(&self, rate: T) -> Result<T> {
        match &self.reservoir {
            Some(r) => empirical_outage(r, rate),
            None => Err(DmtError::InvalidInput(
                "accumulator was created without a reservoir".into(),
            )),
        }
    }
}

/// Fraction of samples with capacity strictly below `rate`.
pub fn empirical_outage<T: Scalar>(samples: &[T], rate: T) -> Result<T> {
    if samples.is_empty() {
        return Err(DmtError::EmptySamples);
    }
    let below = samples.iter().filter(|&&c| c < rate).count();
    Ok(T::from_count(below as u64) / T::from_count(samples.len() as u64))
}
