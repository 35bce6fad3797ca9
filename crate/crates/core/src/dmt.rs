//! Outage probability and the finite-SNR diversity-multiplexing tradeoff.
//!
//! Three ways of tying the rate `R` to a multiplexing gain `r` are supported:
//!
//! | variant          | rate                |
//! |------------------|---------------------|
//! | `LogSnr`         | `R = r ln γ`        |
//! | `LogSnrOffset`   | `R = r ln(γ/e)`     |
//! | `MeanFraction`   | `R = r C̄ / min(m,n)` |
//!
//! The outage probability under the Gaussian capacity law is
//! `Q((C̄ − R)/σ)`, upper-bounded by `½ exp(−½((C̄ − R)/σ)²)` when `R ≤ C̄`.
//! Diversity is reported either as the ratio `−ln P_out / ln γ` or as the
//! local slope `−∂ ln P_out / ∂ ln γ`; every [`DmtPoint`] carries a tag
//! saying which.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::asymptotic::{
    high_snr_stats, keyhole_stats, theorem1_stats, AspectRatio, CapacityStats,
};
use crate::capacity::Snr;
use crate::channel::KeyholeChannelSpec;
use crate::error::{domain, DmtError, Result};
use crate::scalar::Scalar;
use crate::special::{ln_q_function, q_function};

/// How the target rate scales with SNR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuxGainDef {
    /// `r = R / ln γ`
    LogSnr,
    /// `r = R / ln(γ/e)`
    LogSnrOffset,
    /// `r = min(m,n) R / C̄`
    MeanFraction,
}

impl MuxGainDef {
    pub const ALL: [MuxGainDef; 3] = [
        MuxGainDef::LogSnr,
        MuxGainDef::LogSnrOffset,
        MuxGainDef::MeanFraction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MuxGainDef::LogSnr => "log-snr",
            MuxGainDef::LogSnrOffset => "log-snr-offset",
            MuxGainDef::MeanFraction => "mean-fraction",
        }
    }
}

impl fmt::Display for MuxGainDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MuxGainDef {
    type Err = DmtError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "log-snr" => Ok(MuxGainDef::LogSnr),
            "log-snr-offset" => Ok(MuxGainDef::LogSnrOffset),
            "mean-fraction" => Ok(MuxGainDef::MeanFraction),
            other => Err(DmtError::InvalidInput(format!(
                "unknown multiplexing-gain definition `{other}` (expected log-snr, log-snr-offset or mean-fraction)"
            ))),
        }
    }
}

/// Multiplexing gain `r ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MuxGain<T>(T);

impl<T: Scalar> MuxGain<T> {
    pub fn new(r: T) -> Result<Self> {
        if r >= T::zero() && r.is_finite() {
            Ok(Self(r))
        } else {
            Err(DmtError::InvalidInput(format!(
                "multiplexing gain must be a finite r ≥ 0, got {r}"
            )))
        }
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }
}

/// How a diversity value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiversityMethod {
    AnalyticClosedForm,
    NumericDifferentiation,
    RatioDefinition,
    McEmpirical,
}

impl DiversityMethod {
    pub fn name(self) -> &'static str {
        match self {
            DiversityMethod::AnalyticClosedForm => "analytic-closed-form",
            DiversityMethod::NumericDifferentiation => "numeric-differentiation",
            DiversityMethod::RatioDefinition => "ratio-definition",
            DiversityMethod::McEmpirical => "mc-empirical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmtPoint<T> {
    pub snr: Snr<T>,
    pub r: MuxGain<T>,
    pub d: T,
    pub method: DiversityMethod,
}

/// The constant `c` in `P_out ≈ c / γ^d`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SnrOffset<T>(T);

impl<T: Scalar> SnrOffset<T> {
    pub fn new(c: T) -> Result<Self> {
        if c > T::zero() && c.is_finite() {
            Ok(Self(c))
        } else {
            Err(DmtError::InvalidInput(format!(
                "SNR offset must be positive, got {c}"
            )))
        }
    }

    pub fn value(self) -> T {
        self.0
    }
}

/// Target rate in nats for a multiplexing gain under `def`.
///
/// `dof` is `min(m, n)` (1 for a keyhole channel).
pub fn rate_from_mux<T: Scalar>(
    def: MuxGainDef,
    r: MuxGain<T>,
    snr: Snr<T>,
    stats: &CapacityStats<T>,
    dof: usize,
) -> Result<T> {
    let g = snr.linear();
    match def {
        MuxGainDef::LogSnr => {
            if !(g > T::one()) {
                return Err(domain("log-snr rate", format!("needs γ > 1, got γ = {g}")));
            }
            Ok(r.value() * g.ln())
        }
        MuxGainDef::LogSnrOffset => {
            if !(g > T::E()) {
                return Err(domain(
                    "log-snr-offset rate",
                    format!("needs γ > e, got γ = {g}"),
                ));
            }
            Ok(r.value() * (g.ln() - T::one()))
        }
        MuxGainDef::MeanFraction => {
            if !(stats.mean > T::zero()) {
                return Err(domain(
                    "mean-fraction rate",
                    format!("needs C̄ > 0, got {}", stats.mean),
                ));
            }
            if dof == 0 {
                return Err(DmtError::InvalidInput(
                    "degrees of freedom must be positive".into(),
                ));
            }
            Ok(r.value() * stats.mean / T::from_count(dof as u64))
        }
    }
}

/// Normalized distance `(C̄ − R)/σ`.
#[inline]
fn margin<T: Scalar>(stats: &CapacityStats<T>, rate: T) -> T {
    (stats.mean - rate) / stats.std_dev()
}

/// `P_out = Q((C̄ − R)/σ)`.
pub fn gaussian_outage<T: Scalar>(stats: &CapacityStats<T>, rate: T) -> T {
    q_function(margin(stats, rate))
}

/// `ln Q((C̄ − R)/σ)`, usable where the probability itself underflows.
pub fn ln_gaussian_outage<T: Scalar>(stats: &CapacityStats<T>, rate: T) -> T {
    ln_q_function(margin(stats, rate))
}

/// `½ exp(−½ x²)` with `x = (C̄ − R)/σ`; only an upper bound on `Q(x)` for
/// `x ≥ 0`, so `R > C̄` is an error.
pub fn gaussian_outage_bound<T: Scalar>(stats: &CapacityStats<T>, rate: T) -> Result<T> {
    ln_gaussian_outage_bound(stats, rate).map(T::exp)
}

pub fn ln_gaussian_outage_bound<T: Scalar>(stats: &CapacityStats<T>, rate: T) -> Result<T> {
    if rate > stats.mean {
        return Err(DmtError::BoundInvalid {
            rate: rate.to_f64_lossy(),
            mean: stats.mean.to_f64_lossy(),
        });
    }
    let x = margin(stats, rate);
    Ok(T::lit(0.5).ln() - T::lit(0.5) * x * x)
}

/// `d_γ = −ln P_out / ln γ`.
pub fn diversity_ratio<T: Scalar>(p_out: T, snr: Snr<T>) -> Result<T> {
    if !(p_out > T::zero() && p_out < T::one()) {
        return Err(domain(
            "diversity_ratio",
            format!("P_out must lie in (0, 1), got {p_out}"),
        ));
    }
    if !(snr.linear() > T::one()) {
        return Err(domain(
            "diversity_ratio",
            format!("needs γ > 1, got {}", snr.linear()),
        ));
    }
    Ok(-p_out.ln() / snr.ln())
}

/// [`diversity_ratio`] from `ln P_out`, for curves that underflow.
pub fn diversity_ratio_ln<T: Scalar>(ln_p_out: T, snr: Snr<T>) -> Result<T> {
    if !(ln_p_out < T::zero()) || ln_p_out.is_infinite() {
        return Err(domain(
            "diversity_ratio",
            format!("ln P_out must be finite and negative, got {ln_p_out}"),
        ));
    }
    if !(snr.linear() > T::one()) {
        return Err(domain(
            "diversity_ratio",
            format!("needs γ > 1, got {}", snr.linear()),
        ));
    }
    Ok(-ln_p_out / snr.ln())
}

/// Finite-difference step in `ln γ` for the differential diversity.
pub const DIFF_STEP: f64 = 0.01;
/// Allowed disagreement between the `h` and `h/2` stencils before a
/// result is flagged.
pub const DIFF_AGREEMENT: f64 = 1e-3;

/// Result of numerically differentiating `ln P_out` in `ln γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifferentialDiversity<T> {
    /// Central difference with step [`DIFF_STEP`].
    pub value: T,
    /// Same stencil with half the step.
    pub half_step: T,
    /// Set when the two stencils disagree by more than [`DIFF_AGREEMENT`].
    pub accuracy_warning: bool,
}

impl<T: Scalar> DifferentialDiversity<T> {
    pub fn as_point(&self, snr: Snr<T>, r: MuxGain<T>) -> DmtPoint<T> {
        DmtPoint {
            snr,
            r,
            d: self.value,
            method: DiversityMethod::NumericDifferentiation,
        }
    }
}

/// `d'_γ = −∂ ln P_out / ∂ ln γ` for a curve given as `γ ↦ ln P_out`.
pub fn differential_diversity_ln<T, F>(ln_curve: F, snr: Snr<T>) -> Result<DifferentialDiversity<T>>
where
    T: Scalar,
    F: Fn(Snr<T>) -> Result<T>,
{
    let l = snr.ln();
    let eval = |x: T| -> Result<T> {
        let v = ln_curve(Snr::from_linear(x.exp())?)?;
        if !v.is_finite() || v >= T::zero() {
            return Err(domain(
                "differential_diversity",
                format!(
                    "ln P_out = {v} at ln γ = {x}; the logarithm is undefined at P_out ∈ {{0, 1}}"
                ),
            ));
        }
        Ok(v)
    };
    let stencil = |h: T| -> Result<T> { Ok(-(eval(l + h)? - eval(l - h)?) / (h + h)) };
    let h = T::lit(DIFF_STEP);
    let value = stencil(h)?;
    let half_step = stencil(h * T::lit(0.5))?;
    Ok(DifferentialDiversity {
        value,
        half_step,
        accuracy_warning: (value - half_step).abs() > T::lit(DIFF_AGREEMENT),
    })
}

/// `d'_γ` for a curve given as `γ ↦ P_out`.
pub fn differential_diversity<T, F>(curve: F, snr: Snr<T>) -> Result<DifferentialDiversity<T>>
where
    T: Scalar,
    F: Fn(Snr<T>) -> Result<T>,
{
    differential_diversity_ln(|s| curve(s).map(T::ln), snr)
}

/// SNR-asymptotic tradeoff `(n − r)(m − r)` at integer `r`, linearly
/// interpolated in between.
pub fn dmt_asymptote<T: Scalar>(r: MuxGain<T>, m: usize, n: usize) -> Result<T> {
    let p = m.min(n);
    let r = r.value();
    if r > T::from_count(p as u64) {
        return Err(domain(
            "dmt_asymptote",
            format!("r = {r} exceeds min(m, n) = {p}"),
        ));
    }
    let corner = |k: T| (T::from_count(n as u64) - k) * (T::from_count(m as u64) - k);
    let lo = r.floor();
    let hi = r.ceil();
    if lo == hi {
        return Ok(corner(lo));
    }
    let frac = r - lo;
    Ok(corner(lo) * (T::one() - frac) + corner(hi) * frac)
}

/// High-SNR outage approximation for square i.i.d. channels under the
/// mean-fraction definition: `P_out ≈ ½ (γ/e)^(−(n−r)² Δ(γ))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IidOutageApprox<T> {
    pub p_out: T,
    /// `Δ(γ) = 1 + 2/(√γ ln(γ/e))`
    pub delta: T,
    /// Effective slope `(n − r)² Δ(γ)`.
    pub exponent: T,
    /// `c = ½ e^{exponent}`, so that `P_out = c γ^{−exponent}`.
    pub offset: SnrOffset<T>,
}

pub fn approx_outage_iid<T: Scalar>(
    snr: Snr<T>,
    n: usize,
    r: MuxGain<T>,
) -> Result<IidOutageApprox<T>> {
    let g = snr.linear();
    if !(g > T::E()) {
        return Err(domain(
            "approx_outage_iid",
            format!("needs γ > e, got γ = {g}"),
        ));
    }
    let nn = T::from_count(n as u64);
    if r.value() > nn {
        return Err(domain(
            "approx_outage_iid",
            format!("r = {} exceeds n = {n}", r.value()),
        ));
    }
    let l = g.ln() - T::one();
    let delta = T::one() + T::lit(2.0) / (g.sqrt() * l);
    let exponent = (nn - r.value()).powi(2) * delta;
    let half = T::lit(0.5);
    Ok(IidOutageApprox {
        p_out: half * (-exponent * l).exp(),
        delta,
        exponent,
        offset: SnrOffset::new(half * exponent.exp())?,
    })
}

/// Closed-form finite-SNR differential diversity for square i.i.d. channels.
///
/// * mean-fraction: `(n−r)² (1 − 1/(2√γ))`
/// * log-snr-offset: `(n−r)² (1 − (n+r)/(n−r) · 1/√γ)`
/// * log-snr: the previous expression minus `(n−r)² (r/(n−r))² / ln(γ/e)²`
///
/// `r = n` gives exactly zero.
pub fn dprime_closed_form<T: Scalar>(
    def: MuxGainDef,
    snr: Snr<T>,
    n: usize,
    r: MuxGain<T>,
) -> Result<T> {
    let g = snr.linear();
    let nn = T::from_count(n as u64);
    let r = r.value();
    if r > nn {
        return Err(domain(
            "dprime_closed_form",
            format!("r = {r} exceeds n = {n}"),
        ));
    }
    match def {
        MuxGainDef::LogSnr if !(g > T::one()) => {
            return Err(domain(
                "dprime_closed_form",
                format!("log-snr needs γ > 1, got {g}"),
            ))
        }
        MuxGainDef::LogSnrOffset if !(g > T::E()) => {
            return Err(domain(
                "dprime_closed_form",
                format!("log-snr-offset needs γ > e, got {g}"),
            ))
        }
        _ => {}
    }
    if r == nn {
        return Ok(T::zero());
    }
    let gap = nn - r;
    let base = gap * gap;
    let inv_sqrt = T::one() / g.sqrt();
    let value = match def {
        MuxGainDef::MeanFraction => base * (T::one() - T::lit(0.5) * inv_sqrt),
        MuxGainDef::LogSnrOffset => base * (T::one() - (nn + r) / gap * inv_sqrt),
        MuxGainDef::LogSnr => {
            let l = g.ln() - T::one();
            base * (T::one() - (nn + r) / gap * inv_sqrt - (r / gap).powi(2) / (l * l))
        }
    };
    if !value.is_finite() {
        return Err(domain("dprime_closed_form", format!("singular at γ = {g}")));
    }
    Ok(value)
}

/// Accuracy target behind the convergence thresholds: the finite-SNR
/// correction must fall below 10 %.
pub const CONVERGENCE_TOLERANCE: f64 = 0.1;

/// SNR beyond which the closed-form `d'_γ` is within 10 % of `(n − r)²`.
///
/// * mean-fraction: 25 (≈ 14 dB) regardless of `n`, `r`
/// * log-snr-offset: `(10 (n+r)/(n−r))²`
/// * log-snr: `max[(10 (n+r)/(n−r))², exp(1 + 3r/(n−r))]`
pub fn convergence_threshold<T: Scalar>(
    def: MuxGainDef,
    n: usize,
    r: MuxGain<T>,
) -> Result<Snr<T>> {
    let nn = T::from_count(n as u64);
    let r = r.value();
    if !(r < nn) {
        return Err(domain(
            "convergence_threshold",
            format!("needs r < n, got r = {r}, n = {n}"),
        ));
    }
    let tol = T::lit(CONVERGENCE_TOLERANCE);
    let gap = nn - r;
    let sqrt_term = ((nn + r) / gap / tol).powi(2);
    let g = match def {
        // 1/(2√γ) ≤ 0.1
        MuxGainDef::MeanFraction => (T::lit(0.5) / tol).powi(2),
        MuxGainDef::LogSnrOffset => sqrt_term,
        MuxGainDef::LogSnr => sqrt_term.max((T::one() + T::lit(3.0) * r / gap).exp()),
    };
    Snr::from_linear(g)
}

/// Keyhole finite-SNR tradeoff under the mean-fraction definition with one
/// degree of freedom (`0 ≤ r ≤ 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyholeDmt<T> {
    /// `½ (nγ)^(−(1−r)² Δ)`
    pub p_out: T,
    /// `Δ = ln(nγ) / (2σ²)`
    pub delta: T,
    /// `(1−r)² ln(nγ) / σ²`
    pub dprime: T,
}

pub fn keyhole_dmt<T: Scalar>(
    snr: Snr<T>,
    spec: &KeyholeChannelSpec<T>,
    r: MuxGain<T>,
) -> Result<KeyholeDmt<T>> {
    let r = r.value();
    if r > T::one() {
        return Err(domain(
            "keyhole_dmt",
            format!("keyhole multiplexing gain must satisfy r ≤ 1, got {r}"),
        ));
    }
    let ng = T::from_count(spec.n() as u64) * snr.linear();
    if !(ng > T::one()) {
        return Err(domain("keyhole_dmt", format!("needs nγ > 1, got {ng}")));
    }
    let sigma2 = spec.total_correlation();
    let d = (T::one() - r).powi(2);
    let l = ng.ln();
    let delta = l / (T::lit(2.0) * sigma2);
    Ok(KeyholeDmt {
        p_out: T::lit(0.5) * (-d * delta * l).exp(),
        delta,
        dprime: d * l / sigma2,
    })
}

/// Least-squares fit of `ln c` in `ln P_out = ln c − d ln γ` with `d` fixed.
pub fn fit_snr_offset<T: Scalar>(samples: &[(Snr<T>, T)], d: T) -> Result<SnrOffset<T>> {
    let logs = samples
        .iter()
        .map(|&(s, p)| {
            if p > T::zero() && p <= T::one() {
                Ok((s, p.ln()))
            } else {
                Err(DmtError::InvalidInput(format!(
                    "outage sample {p} outside (0, 1]"
                )))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    fit_snr_offset_ln(&logs, d)
}

/// As [`fit_snr_offset`] but with samples given as `ln P_out`.
pub fn fit_snr_offset_ln<T: Scalar>(samples: &[(Snr<T>, T)], d: T) -> Result<SnrOffset<T>> {
    if samples.len() < 2 {
        return Err(DmtError::InvalidInput(format!(
            "offset fit needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    if !(d > T::zero()) {
        return Err(DmtError::InvalidInput(format!(
            "diversity must be positive, got {d}"
        )));
    }
    let k = T::from_count(samples.len() as u64);
    let ln_c = samples.iter().map(|&(s, lp)| lp + d * s.ln()).sum::<T>() / k;
    SnrOffset::new(ln_c.exp())
}

/// Where the Gaussian moments of an analytic outage curve come from.
#[derive(Debug, Clone, PartialEq)]
pub enum MomentSource<T> {
    /// Large-system moments for an `n × βn` i.i.d. channel.
    Theorem1 { n: usize, beta: AspectRatio<T> },
    /// High-SNR expansion for a square `n × n` channel.
    HighSnr { n: usize },
    /// Correlated keyhole moments.
    Keyhole(KeyholeChannelSpec<T>),
}

impl<T: Scalar> MomentSource<T> {
    pub fn square(n: usize) -> Self {
        MomentSource::Theorem1 {
            n,
            beta: AspectRatio::square(),
        }
    }

    pub fn stats(&self, snr: Snr<T>) -> Result<CapacityStats<T>> {
        match self {
            MomentSource::Theorem1 { n, beta } => theorem1_stats(snr, *n, *beta),
            MomentSource::HighSnr { n } => high_snr_stats(snr, *n),
            MomentSource::Keyhole(spec) => keyhole_stats(snr, spec),
        }
    }

    /// `min(m, n)`, or 1 for a keyhole.
    pub fn degrees_of_freedom(&self) -> usize {
        match self {
            MomentSource::Theorem1 { n, beta } => {
                let m = (beta.value() * T::from_count(*n as u64))
                    .round()
                    .to_usize()
                    .unwrap_or(*n);
                m.max(1).min(*n)
            }
            MomentSource::HighSnr { n } => *n,
            MomentSource::Keyhole(_) => 1,
        }
    }
}

/// Gaussian outage as a function of SNR for a fixed gain definition.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageCurve<T> {
    pub source: MomentSource<T>,
    pub def: MuxGainDef,
    pub r: MuxGain<T>,
}

impl<T: Scalar> OutageCurve<T> {
    pub fn new(source: MomentSource<T>, def: MuxGainDef, r: MuxGain<T>) -> Self {
        Self { source, def, r }
    }

    /// Moments and target rate at `snr`.
    pub fn operating_point(&self, snr: Snr<T>) -> Result<(CapacityStats<T>, T)> {
        let stats = self.source.stats(snr)?;
        let rate = rate_from_mux(
            self.def,
            self.r,
            snr,
            &stats,
            self.source.degrees_of_freedom(),
        )?;
        Ok((stats, rate))
    }

    pub fn outage(&self, snr: Snr<T>) -> Result<T> {
        let (stats, rate) = self.operating_point(snr)?;
        Ok(gaussian_outage(&stats, rate))
    }

    pub fn ln_outage(&self, snr: Snr<T>) -> Result<T> {
        let (stats, rate) = self.operating_point(snr)?;
        Ok(ln_gaussian_outage(&stats, rate))
    }

    pub fn outage_bound(&self, snr: Snr<T>) -> Result<T> {
        let (stats, rate) = self.operating_point(snr)?;
        gaussian_outage_bound(&stats, rate)
    }

    /// Numeric `d'_γ` of `ln Q((C̄ − R)/σ)`.
    pub fn dprime_numeric(&self, snr: Snr<T>) -> Result<DifferentialDiversity<T>> {
        differential_diversity_ln(|s| self.ln_outage(s), snr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snr(g: f64) -> Snr<f64> {
        Snr::from_linear(g).unwrap()
    }

    fn mux(r: f64) -> MuxGain<f64> {
        MuxGain::new(r).unwrap()
    }

    fn stats(mean: f64, var: f64) -> CapacityStats<f64> {
        CapacityStats::new(mean, var).unwrap()
    }

    #[test]
    fn rate_examples() {
        let s = stats(12.0, 1.0);
        let full = rate_from_mux(MuxGainDef::MeanFraction, mux(4.0), snr(10.0), &s, 4).unwrap();
        assert_eq!(full, 12.0);
        let r = rate_from_mux(MuxGainDef::LogSnr, mux(9.0), snr(100.0), &s, 10).unwrap();
        assert!((r - 41.447).abs() < 1e-3);
        let err = rate_from_mux(
            MuxGainDef::LogSnrOffset,
            mux(1.0),
            snr(std::f64::consts::E),
            &s,
            1,
        )
        .unwrap_err();
        assert!(err.to_string().contains("log-snr-offset"));
        assert!(rate_from_mux(MuxGainDef::LogSnr, mux(1.0), snr(1.0), &s, 1).is_err());
    }

    #[test]
    fn gaussian_outage_examples() {
        assert_eq!(gaussian_outage(&stats(2.0, 1.0), 2.0), 0.5);
        assert!((gaussian_outage(&stats(2.0, 1.0), 1.0) - 0.158_655_253_931_457).abs() < 1e-12);
        assert!((gaussian_outage(&stats(2.0, 1.0), 3.0) - 0.841_344_746_068_543).abs() < 1e-12);
    }

    #[test]
    fn bound_examples() {
        assert_eq!(gaussian_outage_bound(&stats(2.0, 1.0), 2.0).unwrap(), 0.5);
        let b = gaussian_outage_bound(&stats(2.0, 1.0), 1.0).unwrap();
        assert!((b - 0.5 * (-0.5f64).exp()).abs() < 1e-15);
        assert!(b >= gaussian_outage(&stats(2.0, 1.0), 1.0));
        assert!(matches!(
            gaussian_outage_bound(&stats(2.0, 1.0), 3.0),
            Err(DmtError::BoundInvalid { .. })
        ));
    }

    #[test]
    fn bound_dominates_on_grid() {
        let s = stats(5.0, 2.0);
        for k in 0..=500 {
            let rate = 5.0 - k as f64 * 0.02;
            let q = gaussian_outage(&s, rate);
            let b = gaussian_outage_bound(&s, rate).unwrap();
            if k == 0 {
                assert_eq!(q, b);
            } else {
                assert!(b > q, "rate {rate}: bound {b} q {q}");
            }
        }
    }

    #[test]
    fn diversity_ratio_examples() {
        assert!((diversity_ratio(0.01, snr(100.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!((diversity_ratio(1e-4, snr(100.0)).unwrap() - 2.0).abs() < 1e-14);
        assert!(
            (diversity_ratio(0.5, snr(std::f64::consts::E)).unwrap() - 2f64.ln()).abs() < 1e-15
        );
        assert!(diversity_ratio(1.0, snr(10.0)).is_err());
        assert!(diversity_ratio(0.1, snr(0.5)).is_err());
        assert!((diversity_ratio_ln(-1e4f64.ln(), snr(100.0)).unwrap() - 2.0).abs() < 1e-14);
        assert!(
            (diversity_ratio_ln(-2000.0, snr(1e10)).unwrap() - 2000.0 / 1e10f64.ln()).abs() < 1e-12
        );
        assert!(diversity_ratio_ln(0.0, snr(10.0)).is_err());
    }

    #[test]
    fn differential_diversity_of_power_law() {
        for &(c, d) in &[(1.0, 1.0), (1e4, 2.5), (0.2, 4.0)] {
            let curve = |s: Snr<f64>| Ok(c / s.linear().powf(d));
            let got = differential_diversity(curve, snr(1e5)).unwrap();
            assert!((got.value - d).abs() < 1e-6, "c={c} d={d}: {}", got.value);
            assert!(!got.accuracy_warning);
        }
        let flat = differential_diversity(|_| Ok(0.1), snr(10.0)).unwrap();
        assert_eq!(flat.value, 0.0);
        assert!(differential_diversity(|_| Ok(1.0), snr(10.0)).is_err());
        assert!(differential_diversity(|_| Ok(0.0), snr(10.0)).is_err());
    }

    #[test]
    fn differential_diversity_flags_curvature() {
        // ln P = -(ln γ)^8 / 10^6 has a large third derivative at ln γ = 30
        let curve = |s: Snr<f64>| Ok(-s.ln().powi(8) / 1e6);
        let got = differential_diversity_ln(curve, snr(30f64.exp())).unwrap();
        assert!(got.accuracy_warning);
    }

    #[test]
    fn numeric_dprime_matches_mean_fraction_closed_form_at_20db() {
        let curve = OutageCurve::new(MomentSource::square(10), MuxGainDef::MeanFraction, mux(9.0));
        let numeric = curve.dprime_numeric(snr(100.0)).unwrap().value;
        let closed =
            dprime_closed_form(MuxGainDef::MeanFraction, snr(100.0), 10, mux(9.0)).unwrap();
        assert!((closed - 0.95).abs() < 1e-15);
        assert!(
            ((numeric - closed) / closed).abs() < 0.1,
            "{numeric} vs {closed}"
        );
    }

    #[test]
    fn asymptote_examples() {
        assert_eq!(dmt_asymptote(mux(0.0), 3, 4).unwrap(), 12.0);
        assert_eq!(dmt_asymptote(mux(3.0), 3, 4).unwrap(), 0.0);
        assert_eq!(dmt_asymptote(mux(0.5), 2, 2).unwrap(), 2.5);
        assert!(dmt_asymptote(mux(3.5), 3, 4).is_err());
    }

    #[test]
    fn approx_outage_examples() {
        let a = approx_outage_iid(snr(100.0), 10, mux(9.0)).unwrap();
        let l = (100.0f64 / std::f64::consts::E).ln();
        let delta = 1.0 + 2.0 / (10.0 * l);
        assert!((a.delta - delta).abs() < 1e-14);
        assert!((a.delta - 1.0556).abs() < 1e-3);
        assert!((a.p_out - 0.5 * (100.0f64 / std::f64::consts::E).powf(-delta)).abs() < 1e-15);
        // c γ^{-exponent} reproduces P_out
        assert!((a.offset.value() * 100f64.powf(-a.exponent) - a.p_out).abs() < 1e-15);

        // within a factor of two of the bound evaluated with the expansion moments
        let s = high_snr_stats(snr(100.0), 10).unwrap();
        let rate = rate_from_mux(MuxGainDef::MeanFraction, mux(9.0), snr(100.0), &s, 10).unwrap();
        let bound = gaussian_outage_bound(&s, rate).unwrap();
        assert!(
            a.p_out / bound < 2.0 && bound / a.p_out < 2.0,
            "{} vs {bound}",
            a.p_out
        );

        let full = approx_outage_iid(snr(50.0), 4, mux(4.0)).unwrap();
        assert_eq!(full.p_out, 0.5);
        let far = approx_outage_iid(snr(1e30), 4, mux(1.0)).unwrap();
        assert!((far.delta - 1.0).abs() < 1e-15 && (far.exponent - 9.0).abs() < 1e-13);
        assert!(approx_outage_iid(snr(2.0), 4, mux(1.0)).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let v = dprime_closed_form(MuxGainDef::LogSnr, snr(100.0), 2, mux(1.0)).unwrap();
        let l = (100.0f64).ln() - 1.0;
        assert!((v - (1.0 - 0.3 - 1.0 / (l * l))).abs() < 1e-14);
        assert!((v - 0.6231).abs() < 1e-4);
        for def in MuxGainDef::ALL {
            assert_eq!(
                dprime_closed_form(def, snr(100.0), 3, mux(3.0)).unwrap(),
                0.0
            );
            let far = dprime_closed_form(def, snr(1e40), 5, mux(2.0)).unwrap();
            assert!((far - 9.0).abs() < 1e-3, "{def}: {far}");
            assert!(dprime_closed_form(def, snr(100.0), 3, mux(3.5)).is_err());
        }
        assert!(dprime_closed_form(MuxGainDef::LogSnrOffset, snr(2.0), 3, mux(1.0)).is_err());
    }

    #[test]
    fn closed_form_definition_ordering() {
        for n in [2usize, 4, 10] {
            for r in 1..n {
                for k in 5..80 {
                    let g = 10f64.powf(k as f64 / 10.0);
                    let a =
                        dprime_closed_form(MuxGainDef::LogSnr, snr(g), n, mux(r as f64)).unwrap();
                    let b = dprime_closed_form(MuxGainDef::LogSnrOffset, snr(g), n, mux(r as f64))
                        .unwrap();
                    let c = dprime_closed_form(MuxGainDef::MeanFraction, snr(g), n, mux(r as f64))
                        .unwrap();
                    assert!(a <= b && b <= c, "n={n} r={r} γ={g}");
                }
            }
        }
    }

    #[test]
    fn threshold_examples() {
        for (n, r) in [(10, 9.0), (2, 1.0), (5, 0.0)] {
            let t = convergence_threshold(MuxGainDef::MeanFraction, n, mux(r)).unwrap();
            assert_eq!(t.linear(), 25.0);
            assert!((t.db() - 13.979).abs() < 1e-3);
        }
        let ls = convergence_threshold(MuxGainDef::LogSnr, 10, mux(9.0)).unwrap();
        assert!((ls.linear() - 28f64.exp()).abs() / 28f64.exp() < 1e-14);
        assert!((ls.db() - 121.6).abs() < 0.05);
        let off = convergence_threshold(MuxGainDef::LogSnrOffset, 10, mux(9.0)).unwrap();
        assert!((off.linear() - 36100.0).abs() < 1e-8);
        assert!((off.db() - 45.575).abs() < 1e-3);
        let small = convergence_threshold(MuxGainDef::LogSnr, 2, mux(1.0)).unwrap();
        assert!((small.linear() - 900.0).abs() < 1e-9);
        assert!(convergence_threshold(MuxGainDef::LogSnr, 2, mux(2.0)).is_err());
    }

    #[test]
    fn threshold_ordering() {
        for n in 2..=16usize {
            for r in 1..n {
                let t: Vec<f64> = [
                    MuxGainDef::MeanFraction,
                    MuxGainDef::LogSnrOffset,
                    MuxGainDef::LogSnr,
                ]
                .iter()
                .map(|&d| convergence_threshold(d, n, mux(r as f64)).unwrap().linear())
                .collect();
                assert!(t[0] <= t[1] && t[1] <= t[2], "n={n} r={r}: {t:?}");
            }
        }
    }

    #[test]
    fn keyhole_dmt_examples() {
        let spec = KeyholeChannelSpec::<f64>::uncorrelated(10, 10).unwrap();
        let k = keyhole_dmt(snr(10.0), &spec, mux(0.5)).unwrap();
        assert!((k.dprime - 0.25 * 100f64.ln() / 0.2).abs() < 1e-12);
        assert!((k.dprime - 5.756).abs() < 1e-3);
        let full = keyhole_dmt(snr(10.0), &spec, mux(1.0)).unwrap();
        assert_eq!((full.dprime, full.p_out), (0.0, 0.5));
        assert!(keyhole_dmt(snr(10.0), &spec, mux(1.5)).is_err());
        assert!(keyhole_dmt(snr(0.05), &spec, mux(0.5)).is_err());

        let mut prev = f64::INFINITY;
        for step in 0..=9 {
            let rho = step as f64 / 10.0;
            let s = KeyholeChannelSpec::<f64>::exponential(10, 10, rho, rho).unwrap();
            let d = keyhole_dmt(snr(10.0), &s, mux(0.5)).unwrap().dprime;
            assert!(d < prev);
            prev = d;
        }
    }

    #[test]
    fn keyhole_dprime_symmetric_and_increasing() {
        let spec = KeyholeChannelSpec::<f64>::exponential(4, 8, 0.7, 0.1).unwrap();
        let mut prev = 0.0;
        for k in 0..40 {
            let s = snr(10f64.powf(k as f64 / 10.0));
            let a = keyhole_dmt(s, &spec, mux(0.3)).unwrap().dprime;
            let b = keyhole_dmt(s, &spec.swapped(), mux(0.3));
            // swapping also swaps n, so compare only where both are defined and n matches
            if spec.n() == spec.swapped().n() {
                assert!((a - b.unwrap().dprime).abs() < 1e-12);
            }
            assert!(a > prev);
            prev = a;
        }
        let sym = KeyholeChannelSpec::<f64>::exponential(6, 6, 0.7, 0.1).unwrap();
        let a = keyhole_dmt(snr(10.0), &sym, mux(0.3)).unwrap().dprime;
        let b = keyhole_dmt(snr(10.0), &sym.swapped(), mux(0.3))
            .unwrap()
            .dprime;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn offset_fit_recovers_power_law() {
        let samples: Vec<_> = (0..20)
            .map(|k| {
                let s = snr(10f64.powf(2.0 + k as f64 * 0.2));
                (s, 5.0 / s.linear().powi(2))
            })
            .collect();
        let c = fit_snr_offset(&samples, 2.0).unwrap();
        assert!((c.value() - 5.0).abs() < 1e-6);
        assert!(fit_snr_offset(&samples[..1], 2.0).is_err());
        assert!(fit_snr_offset(&samples, 0.0).is_err());
    }

    #[test]
    fn mux_def_parsing() {
        for d in MuxGainDef::ALL {
            assert_eq!(d.name().parse::<MuxGainDef>().unwrap(), d);
        }
        assert_eq!(
            "LOG_SNR_OFFSET".parse::<MuxGainDef>().unwrap(),
            MuxGainDef::LogSnrOffset
        );
        assert!("eq99".parse::<MuxGainDef>().is_err());
    }
}
