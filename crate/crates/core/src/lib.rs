//! Finite-SNR diversity-multiplexing tradeoff for MIMO channels.
//!
//! The crate covers random channel ensembles ([`channel`]), log-det capacity
//! ([`capacity`]), large-system Gaussian capacity statistics
//! ([`asymptotic`]), outage probability and finite-SNR diversity
//! ([`dmt`]), and a deterministic parallel Monte-Carlo engine
//! ([`montecarlo`]).
//!
//! Everything numerical is generic over [`Scalar`] (`f32` or `f64`). The
//! `*64` aliases below fix the scalar to `f64`, which is what the tools use.
//!
//! ```
//! use mimo_dmt::{MomentSource, MuxGain, MuxGainDef, OutageCurve, Snr};
//!
//! let curve = OutageCurve::new(
//!     MomentSource::square(2),
//!     MuxGainDef::MeanFraction,
//!     MuxGain::new(1.0).unwrap(),
//! );
//! let p = curve.outage(Snr::from_db(20.0).unwrap()).unwrap();
//! assert!(p > 0.0 && p < 1e-2);
//! ```

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotic;
pub mod capacity;
pub mod channel;
pub mod dmt;
pub mod error;
pub mod linalg;
pub mod montecarlo;
pub mod scalar;
pub mod special;

pub use asymptotic::{
    f_function, high_snr_stats, keyhole_stats, theorem1_stats, AspectRatio, CapacityStats,
};
pub use capacity::{
    empirical_outage, instantaneous_capacity, rank_one_capacity, CapacitySample, EmpiricalStats,
    Snr,
};
pub use channel::{
    correlation_measure, exponential_correlation, sample_iid, sample_keyhole,
    sample_keyhole_vectors, ChannelMatrix, ChannelSpec, FadingFamily, IidChannelSpec,
    KeyholeChannelSpec,
};
pub use dmt::{
    approx_outage_iid, convergence_threshold, differential_diversity, differential_diversity_ln,
    diversity_ratio, diversity_ratio_ln, dmt_asymptote, dprime_closed_form, fit_snr_offset,
    fit_snr_offset_ln, gaussian_outage, gaussian_outage_bound, keyhole_dmt, ln_gaussian_outage,
    ln_gaussian_outage_bound, rate_from_mux, DifferentialDiversity, DiversityMethod, DmtPoint,
    IidOutageApprox, KeyholeDmt, MomentSource, MuxGain, MuxGainDef, OutageCurve, SnrOffset,
};
pub use error::{DmtError, Result};
pub use linalg::CMatrix;
pub use montecarlo::{
    common_random_sweep, common_random_sweep_rates, run_plan, wilson_interval, Interval,
    McEstimate, McPlan, McPoint, RatePolicy,
};
pub use scalar::Scalar;
pub use special::{ln_q_function, q_function, q_inverse};

pub type Snr64 = Snr<f64>;
pub type Snr32 = Snr<f32>;
pub type CapacityStats64 = CapacityStats<f64>;
pub type CapacityStats32 = CapacityStats<f32>;
pub type MuxGain64 = MuxGain<f64>;
pub type KeyholeChannelSpec64 = KeyholeChannelSpec<f64>;
pub type ChannelSpec64 = ChannelSpec<f64>;
pub type ChannelMatrix64 = ChannelMatrix<f64>;
pub type OutageCurve64 = OutageCurve<f64>;
pub type McPlan64 = McPlan<f64>;
pub type McPoint64 = McPoint<f64>;
pub type McEstimate64 = McEstimate<f64>;
pub type EmpiricalStats64 = EmpiricalStats<f64>;
