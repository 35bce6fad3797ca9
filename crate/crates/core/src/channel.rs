//! Random channel ensembles: i.i.d. fading with a choice of entry
//! distribution, and the rank-one correlated keyhole channel `H = h_r h_t⁺`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{DmtError, Result};
use crate::linalg::{cholesky_psd, CMatrix};
use crate::scalar::Scalar;

pub type ChannelMatrix<T> = CMatrix<T>;

/// Distribution of a single channel entry. Every family has zero mean,
/// `E|h|² = 1` and `E|h|⁴ = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FadingFamily {
    /// Circularly symmetric `CN(0, 1)` (Rayleigh fading).
    ComplexGaussian,
    /// `|h|² ∈ {0, 2}` with equal probability and uniform phase.
    OnOffUniformPhase,
}

impl FadingFamily {
    pub const ALL: [FadingFamily; 2] = [
        FadingFamily::ComplexGaussian,
        FadingFamily::OnOffUniformPhase,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FadingFamily::ComplexGaussian => "complex-gaussian",
            FadingFamily::OnOffUniformPhase => "on-off-uniform-phase",
        }
    }

    #[inline]
    pub fn sample<T: Scalar, R: Rng + ?Sized>(self, rng: &mut R) -> Complex<T> {
        match self {
            FadingFamily::ComplexGaussian => {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let s = std::f64::consts::FRAC_1_SQRT_2;
                Complex::new(T::lit(re * s), T::lit(im * s))
            }
            FadingFamily::OnOffUniformPhase => {
                let on: bool = rng.random();
                let phase: f64 = rng.random::<f64>() * std::f64::consts::TAU;
                if on {
                    let a = std::f64::consts::SQRT_2;
                    Complex::new(T::lit(a * phase.cos()), T::lit(a * phase.sin()))
                } else {
                    Complex::new(T::zero(), T::zero())
                }
            }
        }
    }
}

impl fmt::Display for FadingFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FadingFamily {
    type Err = DmtError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "complex-gaussian" | "gaussian" | "rayleigh" => Ok(FadingFamily::ComplexGaussian),
            "on-off-uniform-phase" | "on-off" => Ok(FadingFamily::OnOffUniformPhase),
            other => Err(DmtError::InvalidSpec(format!(
                "unknown fading family `{other}`"
            ))),
        }
    }
}

/// `n × m` channel with i.i.d. entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IidChannelSpec {
    m: usize,
    n: usize,
    family: FadingFamily,
}

impl IidChannelSpec {
    pub fn new(m: usize, n: usize, family: FadingFamily) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(DmtError::InvalidSpec(format!(
                "antenna counts must be positive (m={m}, n={n})"
            )));
        }
        Ok(Self { m, n, family })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> FadingFamily {
        self.family
    }

    /// Aspect ratio `β = m/n`.
    pub fn beta<T: Scalar>(&self) -> T {
        T::from_count(self.m as u64) / T::from_count(self.n as u64)
    }
}

/// Keyhole channel `H = h_r h_t⁺` with Tx/Rx correlation matrices
/// normalized to unit average diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyholeChannelSpec<T> {
    tx_corr: CMatrix<T>,
    rx_corr: CMatrix<T>,
    tx_factor: CMatrix<T>,
    rx_factor: CMatrix<T>,
}

const NORMALIZATION_TOL: f64 = 1e-9;

impl<T: Scalar> KeyholeChannelSpec<T> {
    /// Validates both matrices (Hermitian, PSD, `tr(R)/size = 1`) and caches
    /// their coloring factors.
    pub fn new(tx_corr: CMatrix<T>, rx_corr: CMatrix<T>) -> Result<Self> {
        let tx_factor = validate_correlation(&tx_corr, "R_t")?;
        let rx_factor = validate_correlation(&rx_corr, "R_r")?;
        Ok(Self {
            tx_corr,
            rx_corr,
            tx_factor,
            rx_factor,
        })
    }

    /// Uncorrelated keyhole (`R_t = I_m`, `R_r = I_n`).
    pub fn uncorrelated(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(DmtError::InvalidSpec(format!(
                "antenna counts must be positive (m={m}, n={n})"
            )));
        }
        Self::new(CMatrix::identity(m), CMatrix::identity(n))
    }

    /// Exponential correlation `ρ^|i-j|` at each end.
    pub fn exponential(m: usize, n: usize, rho_tx: T, rho_rx: T) -> Result<Self> {
        Self::new(
            exponential_correlation(m, rho_tx)?,
            exponential_correlation(n, rho_rx)?,
        )
    }

    pub fn m(&self) -> usize {
        self.tx_corr.rows()
    }

    pub fn n(&self) -> usize {
        self.rx_corr.rows()
    }

    pub fn tx_corr(&self) -> &CMatrix<T> {
        &self.tx_corr
    }

    pub fn rx_corr(&self) -> &CMatrix<T> {
        &self.rx_corr
    }

    /// `m⁻²‖R_t‖² + n⁻²‖R_r‖²`.
    pub fn total_correlation(&self) -> T {
        // both matrices were validated square at construction
        correlation_measure(&self.tx_corr, self.m()).unwrap()
            + correlation_measure(&self.rx_corr, self.n()).unwrap()
    }

    /// The spec with Tx and Rx ends exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            tx_corr: self.rx_corr.clone(),
            rx_corr: self.tx_corr.clone(),
            tx_factor: self.rx_factor.clone(),
            rx_factor: self.tx_factor.clone(),
        }
    }
}

fn validate_correlation<T: Scalar>(r: &CMatrix<T>, name: &str) -> Result<CMatrix<T>> {
    if !r.is_square() || r.rows() == 0 {
        return Err(DmtError::InvalidSpec(format!(
            "{name} must be a non-empty square matrix, got {}x{}",
            r.rows(),
            r.cols()
        )));
    }
    if !r.is_finite() {
        return Err(DmtError::InvalidSpec(format!(
            "{name} has non-finite entries"
        )));
    }
    let size = T::from_count(r.rows() as u64);
    let tr = r.trace();
    let tol = T::lit(NORMALIZATION_TOL);
    if (tr.re / size - T::one()).abs() > tol || tr.im.abs() > tol {
        return Err(DmtError::InvalidSpec(format!(
            "{name} is not normalized: tr(R)/size = {}",
            tr.re / size
        )));
    }
    cholesky_psd(r, T::lit(1e-10)).map_err(|e| match e {
        DmtError::InvalidSpec(msg) => DmtError::InvalidSpec(format!("{name}: {msg}")),
        other => other,
    })
}

/// Fill `out` (row-major `n × m`) with i.i.d. draws.
pub(crate) fn fill_iid<T: Scalar, R: Rng + ?Sized>(
    family: FadingFamily,
    rng: &mut R,
    out: &mut [Complex<T>],
) {
    for z in out.iter_mut() {
        *z = family.sample(rng);
    }
}

/// Draw one `n × m` realization with i.i.d. entries.
pub fn sample_iid<T: Scalar, R: Rng + ?Sized>(
    spec: &IidChannelSpec,
    rng: &mut R,
) -> ChannelMatrix<T> {
    let mut data = vec![Complex::new(T::zero(), T::zero()); spec.n * spec.m];
    fill_iid(spec.family, rng, &mut data);
    // length is n*m by construction
    CMatrix::from_row_major(spec.n, spec.m, data).unwrap()
}

/// Colored `CN(0, R)` vector `L z` where `R = L L⁺`.
fn colored_gaussian<T: Scalar, R: Rng + ?Sized>(
    factor: &CMatrix<T>,
    rng: &mut R,
) -> Vec<Complex<T>> {
    let z: Vec<Complex<T>> = (0..factor.cols())
        .map(|_| FadingFamily::ComplexGaussian.sample(rng))
        .collect();
    factor.mul_vec(&z)
}

/// Draw `(h_r, h_t)` for a keyhole channel. `h_r` is drawn first.
pub fn sample_keyhole_vectors<T: Scalar, R: Rng + ?Sized>(
    spec: &KeyholeChannelSpec<T>,
    rng: &mut R,
) -> (Vec<Complex<T>>, Vec<Complex<T>>) {
    let h_r = colored_gaussian(&spec.rx_factor, rng);
    let h_t = colored_gaussian(&spec.tx_factor, rng);
    (h_r, h_t)
}

/// Draw one keyhole realization `H = h_r h_t⁺` (`n × m`, rank one).
pub fn sample_keyhole<T: Scalar, R: Rng + ?Sized>(
    spec: &KeyholeChannelSpec<T>,
    rng: &mut R,
) -> ChannelMatrix<T> {
    let (h_r, h_t) = sample_keyhole_vectors(spec, rng);
    CMatrix::outer(&h_r, &h_t)
}

/// Exponential correlation matrix with entries `ρ^|i-j|`, `0 ≤ ρ < 1`.
pub fn exponential_correlation<T: Scalar>(size: usize, rho: T) -> Result<CMatrix<T>> {
    if size == 0 {
        return Err(DmtError::InvalidInput(
            "correlation size must be positive".into(),
        ));
    }
    if !(rho >= T::zero() && rho < T::one()) {
        return Err(DmtError::InvalidInput(format!(
            "correlation coefficient {rho} outside [0, 1)"
        )));
    }
    Ok(CMatrix::from_real_fn(size, size, |i, j| {
        rho.powi(i.abs_diff(j) as i32)
    }))
}

/// `size⁻² ‖R‖²_F`: the keyhole variance contribution of one link end.
/// Ranges from `1/size` (uncorrelated) up to 1 (fully correlated).
pub fn correlation_measure<T: Scalar>(r: &CMatrix<T>, size: usize) -> Result<T> {
    if r.rows() != size || r.cols() != size {
        return Err(DmtError::DimensionMismatch {
            expected: format!("{size}x{size}"),
            actual: format!("{}x{}", r.rows(), r.cols()),
        });
    }
    let s = T::from_count(size as u64);
    Ok(r.frobenius_sq() / (s * s))
}

/// Any channel ensemble the Monte-Carlo engine can drive.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec<T> {
    Iid(IidChannelSpec),
    Keyhole(KeyholeChannelSpec<T>),
}

impl<T: Scalar> ChannelSpec<T> {
    pub fn m(&self) -> usize {
        match self {
            ChannelSpec::Iid(s) => s.m(),
            ChannelSpec::Keyhole(s) => s.m(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            ChannelSpec::Iid(s) => s.n(),
            ChannelSpec::Keyhole(s) => s.n(),
        }
    }

    /// Number of spatial degrees of freedom: `min(m, n)` for i.i.d., 1 for a keyhole.
    pub fn degrees_of_freedom(&self) -> usize {
        match self {
            ChannelSpec::Iid(s) => s.m().min(s.n()),
            ChannelSpec::Keyhole(_) => 1,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelMatrix<T> {
        match self {
            ChannelSpec::Iid(s) => sample_iid(s, rng),
            ChannelSpec::Keyhole(s) => sample_keyhole(s, rng),
        }
    }
}

impl<T> From<IidChannelSpec> for ChannelSpec<T> {
    fn from(s: IidChannelSpec) -> Self {
        ChannelSpec::Iid(s)
    }
}

impl<T> From<KeyholeChannelSpec<T>> for ChannelSpec<T> {
    fn from(s: KeyholeChannelSpec<T>) -> Self {
        ChannelSpec::Keyhole(s)
    }
}

/// Sample moments of a fading family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntryMoments {
    pub mean: Complex<f64>,
    pub second: f64,
    pub fourth: f64,
}

/// Empirical `E[h]`, `E|h|²`, `E|h|⁴` from `count` draws.
pub fn empirical_moments<R: Rng + ?Sized>(
    family: FadingFamily,
    count: usize,
    rng: &mut R,
) -> EntryMoments {
    let mut mean = Complex::new(0.0, 0.0);
    let (mut second, mut fourth) = (0.0, 0.0);
    for _ in 0..count {
        let h: Complex<f64> = family.sample(rng);
        let p = h.norm_sqr();
        mean += h;
        second += p;
        fourth += p * p;
    }
    let k = count.max(1) as f64;
    EntryMoments {
        mean: mean / k,
        second: second / k,
        fourth: fourth / k,
    }
}
