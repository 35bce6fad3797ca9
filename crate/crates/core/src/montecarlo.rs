//! Seeded, sharded Monte-Carlo estimation of outage probability.
//!
//! Trials are split into shards of fixed size. Shard `k` draws from its own
//! ChaCha8 stream, keyed by the plan seed and selected by `k`, so the set of
//! channel realizations depends only on `(seed, shard_size, trials)`. Shards
//! may run on any number of worker threads; their accumulators are merged
//! in shard order, which makes the output bit-identical for every worker
//! count.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::asymptotic::AspectRatio;
use crate::capacity::{CapacityWorkspace, EmpiricalStats, Snr};
use crate::channel::{fill_iid, sample_keyhole_vectors, ChannelSpec};
use crate::dmt::{rate_from_mux, MomentSource, MuxGain, MuxGainDef};
use crate::error::{DmtError, Result};
use crate::scalar::Scalar;
use crate::special::q_inverse;

pub const DEFAULT_TRIALS: u64 = 1_000_000;
pub const DEFAULT_SHARD_SIZE: u64 = 10_000;

/// How the target rate is chosen at each grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatePolicy<T> {
    /// Rate from a multiplexing gain. Mean-fraction rates use the analytic
    /// mean capacity of the channel (large-system moments for i.i.d.,
    /// `ln(1 + nγ)` for a keyhole).
    Mux { def: MuxGainDef, r: MuxGain<T> },
    /// The same rate in nats at every grid point.
    Fixed(T),
}

#[derive(Debug, Clone, PartialEq)]
pub struct McPlan<T> {
    pub channel: ChannelSpec<T>,
    pub snrs: Vec<Snr<T>>,
    pub rate: RatePolicy<T>,
    pub trials: u64,
    pub seed: u64,
    pub shard_size: u64,
    /// Worker threads; 0 uses rayon's default. Never affects results.
    pub workers: usize,
}

impl<T: Scalar> McPlan<T> {
    pub fn new(channel: impl Into<ChannelSpec<T>>, snrs: Vec<Snr<T>>, rate: RatePolicy<T>) -> Self {
        Self {
            channel: channel.into(),
            snrs,
            rate,
            trials: DEFAULT_TRIALS,
            seed: 0,
            shard_size: DEFAULT_SHARD_SIZE,
            workers: 0,
        }
    }

    pub fn trials(mut self, trials: u64) -> Self {
        self.trials = trials;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn shard_size(mut self, shard_size: u64) -> Self {
        self.shard_size = shard_size;
        self
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(DmtError::InvalidPlan("trials must be at least 1".into()));
        }
        if self.shard_size == 0 {
            return Err(DmtError::InvalidPlan(
                "shard size must be at least 1".into(),
            ));
        }
        if self.snrs.is_empty() {
            return Err(DmtError::InvalidPlan("SNR grid is empty".into()));
        }
        if self.snrs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(DmtError::InvalidPlan(
                "SNR grid must be strictly increasing".into(),
            ));
        }
        if let RatePolicy::Fixed(r) = self.rate {
            if !(r >= T::zero() && r.is_finite()) {
                return Err(DmtError::InvalidPlan(format!(
                    "fixed rate must be finite and non-negative, got {r}"
                )));
            }
        }
        Ok(())
    }

    fn shard_count(&self) -> u64 {
        self.trials.div_ceil(self.shard_size)
    }

    fn shard_len(&self, shard: u64) -> u64 {
        (self.trials - shard * self.shard_size).min(self.shard_size)
    }
}

/// Target rate at `snr` under `policy` for `channel`.
pub fn plan_rate<T: Scalar>(
    channel: &ChannelSpec<T>,
    policy: RatePolicy<T>,
    snr: Snr<T>,
) -> Result<T> {
    match policy {
        RatePolicy::Fixed(r) => Ok(r),
        RatePolicy::Mux { def, r } => {
            let source = analytic_source(channel)?;
            let stats = source.stats(snr)?;
            rate_from_mux(def, r, snr, &stats, channel.degrees_of_freedom())
        }
    }
}

/// Analytic moment model matching a channel spec.
pub fn analytic_source<T: Scalar>(channel: &ChannelSpec<T>) -> Result<MomentSource<T>> {
    Ok(match channel {
        ChannelSpec::Iid(s) => MomentSource::Theorem1 {
            n: s.n(),
            beta: AspectRatio::from_antennas(s.m(), s.n())?,
        },
        ChannelSpec::Keyhole(s) => MomentSource::Keyhole(s.clone()),
    })
}

/// Wilson score interval for a binomial proportion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> Interval<T> {
    pub fn contains(&self, x: T) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }
}

pub fn wilson_interval<T: Scalar>(successes: u64, trials: u64, level: T) -> Result<Interval<T>> {
    if trials == 0 || successes > trials {
        return Err(DmtError::InvalidInput(format!(
            "Wilson interval needs 0 ≤ successes ≤ trials and trials ≥ 1 (got {successes}/{trials})"
        )));
    }
    if !(level > T::zero() && level < T::one()) {
        return Err(DmtError::InvalidInput(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    // level in (0, 1) keeps the tail probability inside (0, 0.5)
    let z = q_inverse((T::one() - level) * T::lit(0.5)).unwrap();
    let n = T::from_count(trials);
    let p = T::from_count(successes) / n;
    let z2 = z * z;
    let denom = T::one() + z2 / n;
    let center = (p + z2 / (T::lit(2.0) * n)) / denom;
    let half = z / denom * (p * (T::one() - p) / n + z2 / (T::lit(4.0) * n * n)).sqrt();
    let lo = if successes == 0 {
        T::zero()
    } else {
        (center - half).max(T::zero()).min(p)
    };
    let hi = if successes == trials {
        T::one()
    } else {
        (center + half).min(T::one()).max(p)
    };
    Ok(Interval { lo, hi })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate<T> {
    pub snr: Snr<T>,
    /// Target rate in nats.
    pub rate: T,
    pub p_hat: T,
    pub trials: u64,
    pub outages: u64,
    pub ci95: Interval<T>,
    pub capacity_mean: T,
    pub capacity_variance: T,
}

impl<T: Scalar> McEstimate<T> {
    fn from_counts(snr: Snr<T>, rate: T, outages: u64, stats: &EmpiricalStats<T>) -> Result<Self> {
        let trials = stats.count();
        Ok(Self {
            snr,
            rate,
            p_hat: T::from_count(outages) / T::from_count(trials),
            trials,
            outages,
            ci95: wilson_interval(outages, trials, T::lit(0.95))?,
            capacity_mean: stats.mean(),
            capacity_variance: if trials > 1 {
                stats.variance()
            } else {
                T::zero()
            },
        })
    }

    /// Smallest `p_hat` worth reading off a run of this size (100 outages).
    pub fn resolution_floor(&self) -> T {
        T::lit(100.0) / T::from_count(self.trials)
    }
}

/// One grid point of a sweep: an estimate, or the reason it was skipped.
#[derive(Debug, Clone, PartialEq)]
pub enum McPoint<T> {
    Estimate(McEstimate<T>),
    Skipped { snr: Snr<T>, reason: DmtError },
}

impl<T: Scalar> McPoint<T> {
    pub fn snr(&self) -> Snr<T> {
        match self {
            McPoint::Estimate(e) => e.snr,
            McPoint::Skipped { snr, .. } => *snr,
        }
    }

    pub fn estimate(&self) -> Option<&McEstimate<T>> {
        match self {
            McPoint::Estimate(e) => Some(e),
            McPoint::Skipped { .. } => None,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for shard `shard` of the stream family `family` under `seed`.
///
/// The key is a hash of `(seed, family)`; the shard picks one of ChaCha's
/// 2⁶⁴ independent streams under that key.
pub fn substream(seed: u64, family: u64, shard: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(family)));
    rng.set_stream(shard);
    rng
}

/// Per-shard channel generator that leaves capacity evaluation to the caller.
struct Drawer<'a, T: Scalar> {
    channel: &'a ChannelSpec<T>,
    buf: Vec<Complex<T>>,
    ws: CapacityWorkspace<T>,
}

enum Draw<T> {
    /// Gram matrix loaded into the workspace.
    Loaded,
    /// Rank-one channel: capacity is `ln(1 + γ s)`.
    RankOne(T),
}

impl<'a, T: Scalar> Drawer<'a, T> {
    fn new(channel: &'a ChannelSpec<T>) -> Self {
        let (n, m) = (channel.n(), channel.m());
        let buf = match channel {
            ChannelSpec::Iid(_) => vec![Complex::new(T::zero(), T::zero()); n * m],
            ChannelSpec::Keyhole(_) => Vec::new(),
        };
        Self {
            channel,
            buf,
            ws: CapacityWorkspace::new(n, m),
        }
    }

    fn draw(&mut self, rng: &mut ChaCha8Rng) -> Draw<T> {
        match self.channel {
            ChannelSpec::Iid(s) => {
                fill_iid(s.family(), rng, &mut self.buf);
                self.ws.load(&self.buf);
                Draw::Loaded
            }
            ChannelSpec::Keyhole(s) => {
                let (h_r, h_t) = sample_keyhole_vectors(s, rng);
                let nr: T = h_r.iter().map(|z| z.norm_sqr()).sum();
                let nt: T = h_t.iter().map(|z| z.norm_sqr()).sum();
                Draw::RankOne(nr * nt / T::from_count(s.m() as u64))
            }
        }
    }

    fn capacity(&mut self, draw: &Draw<T>, gamma: T) -> T {
        match *draw {
            Draw::Loaded => self.ws.capacity(gamma),
            Draw::RankOne(s) => (gamma * s).ln_1p(),
        }
    }
}

/// Shard results for several grid points sharing the same draws.
#[derive(Clone)]
struct ShardTally<T> {
    outages: Vec<Vec<u64>>,
    stats: Vec<EmpiricalStats<T>>,
}

fn run_sharded<T, F>(plan: &McPlan<T>, job: F) -> Result<Vec<ShardTally<T>>>
where
    T: Scalar,
    F: Fn(u64, u64) -> ShardTally<T> + Sync + Send,
{
    let shards: Vec<u64> = (0..plan.shard_count()).collect();
    let run = || {
        shards
            .par_iter()
            .map(|&k| job(k, plan.shard_len(k)))
            .collect::<Vec<_>>()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| DmtError::InvalidPlan(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(run))
}

fn merge_tallies<T: Scalar>(
    tallies: Vec<ShardTally<T>>,
    points: usize,
    rows: usize,
) -> ShardTally<T> {
    let mut total = ShardTally {
        outages: vec![vec![0; points]; rows],
        stats: vec![EmpiricalStats::new(); points],
    };
    for t in tallies {
        for (acc, row) in total.outages.iter_mut().zip(&t.outages) {
            for (a, b) in acc.iter_mut().zip(row) {
                *a += b;
            }
        }
        for (acc, s) in total.stats.iter_mut().zip(&t.stats) {
            acc.merge(s);
        }
    }
    total
}

/// Estimate outage at each grid point with independent draws per point.
///
/// Points whose rate is undefined are returned as [`McPoint::Skipped`].
pub fn run_plan<T: Scalar>(plan: &McPlan<T>) -> Result<Vec<McPoint<T>>> {
    plan.validate()?;
    let mut out = Vec::with_capacity(plan.snrs.len());
    for (idx, &snr) in plan.snrs.iter().enumerate() {
        let rate = match plan_rate(&plan.channel, plan.rate, snr) {
            Ok(r) => r,
            Err(reason) => {
                out.push(McPoint::Skipped { snr, reason });
                continue;
            }
        };
        let gamma = snr.linear();
        let tallies = run_sharded(plan, |shard, len| {
            let mut rng = substream(plan.seed, idx as u64 + 1, shard);
            let mut drawer = Drawer::new(&plan.channel);
            let mut stats = EmpiricalStats::new();
            let mut outages = 0;
            for _ in 0..len {
                let d = drawer.draw(&mut rng);
                let c = drawer.capacity(&d, gamma);
                outages += u64::from(c < rate);
                stats.push(c);
            }
            ShardTally {
                outages: vec![vec![outages]],
                stats: vec![stats],
            }
        })?;
        let total = merge_tallies(tallies, 1, 1);
        out.push(McPoint::Estimate(McEstimate::from_counts(
            snr,
            rate,
            total.outages[0][0],
            &total.stats[0],
        )?));
    }
    Ok(out)
}

/// Like [`run_plan`], but every grid point sees the same channel draws.
///
/// Capacity of a fixed realization increases with `γ`, so for a fixed rate
/// the estimate is exactly non-increasing along the grid.
pub fn common_random_sweep<T: Scalar>(plan: &McPlan<T>) -> Result<Vec<McPoint<T>>> {
    let mut rows = common_random_sweep_rates(plan, &[plan.rate])?;
    Ok(rows.pop().unwrap())
}

/// Common-random-number sweep evaluated under several rate policies at once.
///
/// `plan.rate` is ignored; row `k` of the result belongs to `policies[k]`.
/// Every row is built from the same draws, so the rows equal what
/// [`common_random_sweep`] returns for each policy on its own.
pub fn common_random_sweep_rates<T: Scalar>(
    plan: &McPlan<T>,
    policies: &[RatePolicy<T>],
) -> Result<Vec<Vec<McPoint<T>>>> {
    plan.validate()?;
    let points = plan.snrs.len();
    let rates: Vec<Vec<Result<T>>> = policies
        .iter()
        .map(|&p| {
            plan.snrs
                .iter()
                .map(|&s| plan_rate(&plan.channel, p, s))
                .collect()
        })
        .collect();
    let gammas: Vec<T> = plan.snrs.iter().map(|s| s.linear()).collect();
    let thresholds: Vec<Vec<Option<T>>> = rates
        .iter()
        .map(|row| row.iter().map(|r| r.as_ref().ok().copied()).collect())
        .collect();

    let tallies = run_sharded(plan, |shard, len| {
        let mut rng = substream(plan.seed, 0, shard);
        let mut drawer = Drawer::new(&plan.channel);
        let mut tally = ShardTally {
            outages: vec![vec![0; points]; policies.len()],
            stats: vec![EmpiricalStats::new(); points],
        };
        for _ in 0..len {
            let d = drawer.draw(&mut rng);
            for (i, &g) in gammas.iter().enumerate() {
                let c = drawer.capacity(&d, g);
                tally.stats[i].push(c);
                for (row, th) in tally.outages.iter_mut().zip(&thresholds) {
                    if let Some(rate) = th[i] {
                        row[i] += u64::from(c < rate);
                    }
                }
            }
        }
        tally
    })?;
    let total = merge_tallies(tallies, points, policies.len());

    rates
        .into_iter()
        .zip(&total.outages)
        .map(|(row, counts)| {
            row.into_iter()
                .enumerate()
                .map(|(i, rate)| {
                    let snr = plan.snrs[i];
                    match rate {
                        Ok(r) => McEstimate::from_counts(snr, r, counts[i], &total.stats[i])
                            .map(McPoint::Estimate),
                        Err(reason) => Ok(McPoint::Skipped { snr, reason }),
                    }
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{FadingFamily, IidChannelSpec};

    fn scalar_plan(trials: u64) -> McPlan<f64> {
        let spec = IidChannelSpec::new(1, 1, FadingFamily::ComplexGaussian).unwrap();
        McPlan::new(
            spec,
            vec![Snr::from_linear(10.0).unwrap()],
            RatePolicy::Fixed(1.0),
        )
        .trials(trials)
    }

    #[test]
    fn wilson_examples() {
        let a = wilson_interval::<f64>(0, 100, 0.95).unwrap();
        assert_eq!(a.lo, 0.0);
        assert!((a.hi - 0.037).abs() < 5e-4, "{}", a.hi);
        let b = wilson_interval::<f64>(50, 100, 0.95).unwrap();
        assert!(((b.lo + b.hi) / 2.0 - 0.5).abs() < 1e-12);
        assert!((b.width() - 0.19).abs() < 0.005);
        let c = wilson_interval::<f64>(100, 100, 0.95).unwrap();
        assert_eq!(c.hi, 1.0);
        assert!(wilson_interval::<f64>(3, 2, 0.95).is_err());
        assert!(wilson_interval::<f64>(0, 0, 0.95).is_err());
    }

    #[test]
    fn plan_validation() {
        assert!(scalar_plan(0).validate().is_err());
        assert!(scalar_plan(10).shard_size(0).validate().is_err());
        let mut p = scalar_plan(10);
        p.snrs = vec![
            Snr::from_linear(2.0).unwrap(),
            Snr::from_linear(2.0).unwrap(),
        ];
        assert!(matches!(p.validate(), Err(DmtError::InvalidPlan(_))));
        p.snrs.clear();
        assert!(p.validate().is_err());
    }

    #[test]
    fn single_trial_plan_is_well_formed() {
        let est = run_plan(&scalar_plan(1)).unwrap();
        let e = est[0].estimate().unwrap();
        assert!(e.p_hat == 0.0 || e.p_hat == 1.0);
        assert!(e.ci95.contains(e.p_hat));
        assert_eq!(e.capacity_variance, 0.0);
    }

    #[test]
    fn shard_layout_covers_all_trials() {
        let p = scalar_plan(25_001).shard_size(1000);
        assert_eq!(p.shard_count(), 26);
        assert_eq!((0..26).map(|k| p.shard_len(k)).sum::<u64>(), 25_001);
        let e = run_plan(&p).unwrap();
        assert_eq!(e[0].estimate().unwrap().trials, 25_001);
    }

    #[test]
    fn scalar_oracle_small() {
        let e = *run_plan(&scalar_plan(200_000).seed(11)).unwrap()[0]
            .estimate()
            .unwrap();
        let truth = 1.0 - (-(1f64.exp() - 1.0) / 10.0).exp();
        let se = (truth * (1.0 - truth) / 2e5).sqrt();
        assert!((e.p_hat - truth).abs() < 4.0 * se, "{} vs {truth}", e.p_hat);
    }

    #[test]
    fn substreams_differ() {
        use rand::Rng;
        let a: u64 = substream(1, 0, 0).random();
        let b: u64 = substream(1, 0, 1).random();
        let c: u64 = substream(1, 1, 0).random();
        let d: u64 = substream(2, 0, 0).random();
        assert!(a != b && a != c && a != d && b != c);
        assert_eq!(a, substream(1, 0, 0).random::<u64>());
    }

    #[test]
    fn skipped_points_do_not_abort() {
        let spec = IidChannelSpec::new(2, 2, FadingFamily::ComplexGaussian).unwrap();
        let snrs = [0.5, 2.0, 10.0]
            .map(|g| Snr::from_linear(g).unwrap())
            .to_vec();
        let policy = RatePolicy::Mux {
            def: MuxGainDef::LogSnrOffset,
            r: MuxGain::new(1.0).unwrap(),
        };
        let plan = McPlan::new(spec, snrs, policy).trials(500);
        for points in [
            run_plan(&plan).unwrap(),
            common_random_sweep(&plan).unwrap(),
        ] {
            assert!(matches!(points[0], McPoint::Skipped { .. }));
            assert!(matches!(points[1], McPoint::Skipped { .. }));
            assert!(points[2].estimate().is_some());
        }
    }

    #[test]
    fn multi_rate_rows_match_single_sweeps() {
        let spec = IidChannelSpec::new(3, 2, FadingFamily::ComplexGaussian).unwrap();
        let snrs = [1.0, 5.0, 30.0]
            .map(|g| Snr::from_linear(g).unwrap())
            .to_vec();
        let policies = [RatePolicy::Fixed(1.5), RatePolicy::Fixed(3.0)];
        let plan = McPlan::new(spec, snrs, policies[0])
            .trials(3000)
            .shard_size(700)
            .seed(5);
        let rows = common_random_sweep_rates(&plan, &policies).unwrap();
        for (row, &p) in rows.iter().zip(&policies) {
            let mut single = plan.clone();
            single.rate = p;
            assert_eq!(row, &common_random_sweep(&single).unwrap());
        }
    }
}
