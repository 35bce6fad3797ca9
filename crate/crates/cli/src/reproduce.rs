//! Canned scenarios for the standard figures and threshold examples.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::ValueEnum;
use mimo_dmt::{
    fit_snr_offset_ln, FadingFamily, IidChannelSpec, MomentSource, MuxGain, MuxGainDef,
    OutageCurve, Snr64,
};

use crate::config::{
    ChannelConfig, Format, McSettings, Output, ScenarioConfig, Sweep, OUT_DIR_ENV,
};
use crate::error::{CliError, CliResult};
use crate::output;
use crate::record::{Cell, CurveRecord};
use crate::scenario::{format_threshold_table, run_scenario, threshold_rows, MC_FLOOR_OUTAGES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Target {
    /// Outage vs SNR, n = m = 10, r = 9, with MC overlay.
    Fig1,
    /// Outage vs SNR, n = m = 2, r = 1, with MC overlay.
    Fig2,
    /// Differential diversity vs SNR, n = m = 10, r = 9.
    Fig3,
    /// Differential diversity vs SNR, n = m = 2, r = 1.
    Fig4,
    /// Convergence thresholds, n = 10, r = 9.
    Ex1,
    /// Convergence thresholds, n = 2, r = 1.
    Ex2,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::Fig1 => "fig1",
            Target::Fig2 => "fig2",
            Target::Fig3 => "fig3",
            Target::Fig4 => "fig4",
            Target::Ex1 => "ex1",
            Target::Ex2 => "ex2",
        }
    }

    /// `(n, r)` of the square i.i.d. system behind the target.
    pub fn system(self) -> (usize, f64) {
        match self {
            Target::Fig1 | Target::Fig3 | Target::Ex1 => (10, 9.0),
            Target::Fig2 | Target::Fig4 | Target::Ex2 => (2, 1.0),
        }
    }

    pub fn default_trials(self) -> u64 {
        match self {
            Target::Fig1 => 10_000_000,
            _ => 1_000_000,
        }
    }
}

/// Width of the window at the top of the outage sweeps used to fit `c`.
pub const OFFSET_WINDOW_DB: f64 = 10.0;

#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Scenario behind a figure target; `None` for the threshold examples.
pub fn preset(target: Target, ov: &Overrides) -> CliResult<Option<ScenarioConfig>> {
    let (n, r) = target.system();
    let (sweep, outputs) = match target {
        Target::Fig1 | Target::Fig2 => (
            Sweep::new(0.0, 40.0, 1.0)?,
            vec![
                Output::Analytic,
                Output::Bound,
                Output::ClosedForm,
                Output::Numeric,
                Output::Mc,
            ],
        ),
        Target::Fig3 => (
            Sweep::new(0.0, 130.0, 1.0)?,
            vec![Output::Analytic, Output::ClosedForm, Output::Numeric],
        ),
        Target::Fig4 => (
            Sweep::new(0.0, 60.0, 1.0)?,
            vec![Output::Analytic, Output::ClosedForm, Output::Numeric],
        ),
        Target::Ex1 | Target::Ex2 => return Ok(None),
    };
    let dir = ov
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let defaults = McSettings::default();
    let trials = ov.trials.unwrap_or(target.default_trials());
    if trials == 0 {
        return Err(CliError::config("trials", "must be at least 1"));
    }
    Ok(Some(ScenarioConfig {
        channel: ChannelConfig::Iid(IidChannelSpec::new(n, n, FadingFamily::ComplexGaussian)?),
        sweep,
        definitions: MuxGainDef::ALL.to_vec(),
        r,
        outputs,
        mc: McSettings {
            trials,
            seed: ov.seed.unwrap_or(defaults.seed),
            shard_size: defaults.shard_size,
            workers: ov.workers.unwrap_or(0),
        },
        path: dir
            .join(format!("{}.csv", target.name()))
            .to_string_lossy()
            .into_owned(),
        format: ov.format.unwrap_or(Format::Both),
    }))
}

#[derive(Debug, Clone)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub summary: String,
    pub records: Vec<CurveRecord>,
}

pub fn reproduce(target: Target, ov: &Overrides) -> CliResult<Report> {
    let Some(cfg) = preset(target, ov)? else {
        let (n, r) = target.system();
        let rows = threshold_rows(
            n,
            r,
            &[
                MuxGainDef::MeanFraction,
                MuxGainDef::LogSnrOffset,
                MuxGainDef::LogSnr,
            ],
        )?;
        return Ok(Report {
            files: Vec::new(),
            summary: format_threshold_table(n, r, &rows),
            records: Vec::new(),
        });
    };
    let out = run_scenario(&cfg)?;
    let summary = match target {
        Target::Fig1 | Target::Fig2 => outage_summary(&cfg, &out.records)?,
        _ => dprime_summary(&cfg, &out.records)?,
    };
    let mut notes = out.notes;
    notes.push(summary.clone());
    let files = output::emit(&cfg, &out.records, &notes)?;
    Ok(Report {
        files,
        summary,
        records: out.records,
    })
}

fn rows_for(records: &[CurveRecord], def: MuxGainDef) -> impl Iterator<Item = &CurveRecord> {
    records.iter().filter(move |r| r.definition == def.name())
}

/// `[start, end]` dB spans over which the analytic outage rises with SNR.
pub fn increasing_segments(records: &[CurveRecord], def: MuxGainDef) -> Vec<(f64, f64)> {
    let pts: Vec<(f64, f64)> = rows_for(records, def)
        .filter_map(|r| r.p_analytic.value().map(|p| (r.gamma_db, p)))
        .collect();
    let mut out: Vec<(f64, f64)> = Vec::new();
    for w in pts.windows(2) {
        if w[1].1 > w[0].1 {
            match out.last_mut() {
                Some(seg) if seg.1 == w[0].0 => seg.1 = w[1].0,
                _ => out.push((w[0].0, w[1].0)),
            }
        }
    }
    out
}

/// Largest `|log10 p_hat − log10 P_analytic|` over points with `p_hat ≥ floor`.
pub fn mc_max_decade_gap(
    records: &[CurveRecord],
    def: MuxGainDef,
    floor: f64,
) -> Option<(f64, usize)> {
    let gaps: Vec<f64> = rows_for(records, def)
        .filter_map(|r| match (r.mc_p_hat, r.p_analytic) {
            (Cell::Value(m), Cell::Value(a)) if m >= floor && m > 0.0 && a > 0.0 => {
                Some((m.log10() - a.log10()).abs())
            }
            _ => None,
        })
        .collect();
    let max = gaps.iter().copied().fold(None, |acc: Option<f64>, g| {
        Some(acc.map_or(g, |a| a.max(g)))
    });
    max.map(|m| (m, gaps.len()))
}

/// Fit `c` in `P_out ≈ c γ^{−d}` on the analytic curve over `[lo_db, hi_db]`
/// with 1 dB spacing.
pub fn fit_offset(
    n: usize,
    r: f64,
    def: MuxGainDef,
    d: f64,
    lo_db: f64,
    hi_db: f64,
) -> CliResult<f64> {
    let curve = OutageCurve::new(MomentSource::square(n), def, MuxGain::new(r)?);
    let steps = ((hi_db - lo_db).round() as usize).max(1);
    let samples = (0..=steps)
        .map(|k| {
            let s = Snr64::from_db(lo_db + k as f64 * (hi_db - lo_db) / steps as f64)?;
            Ok((s, curve.ln_outage(s)?))
        })
        .collect::<mimo_dmt::Result<Vec<_>>>()?;
    Ok(fit_snr_offset_ln(&samples, d)?.value())
}

fn outage_summary(cfg: &ScenarioConfig, records: &[CurveRecord]) -> CliResult<String> {
    let n = cfg.channel.n();
    let d = (n as f64 - cfg.r).powi(2);
    let floor = (MC_FLOOR_OUTAGES / cfg.mc.trials as f64).max(1e-4);
    let (hi, lo) = (cfg.sweep.stop_db, cfg.sweep.stop_db - OFFSET_WINDOW_DB);
    let mut s = String::new();
    writeln!(
        s,
        "outage vs SNR, n = m = {n}, r = {}, {} MC trials, seed {}",
        cfg.r, cfg.mc.trials, cfg.mc.seed
    )
    .unwrap();
    for def in MuxGainDef::ALL {
        let segs = increasing_segments(records, def);
        let anomaly = if segs.is_empty() {
            "none".to_string()
        } else {
            segs.iter()
                .map(|(a, b)| format!("[{a}, {b}] dB"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let mc = match mc_max_decade_gap(records, def, floor) {
            Some((g, k)) => format!(
                "max |log10 MC - log10 analytic| = {g:.3} over {k} points with p_hat >= {floor:e}"
            ),
            None => format!("no MC points with p_hat >= {floor:e}"),
        };
        let c = fit_offset(n, cfg.r, def, d, lo, hi)?;
        writeln!(s, "{:<16} outage increasing on: {anomaly}", def.name()).unwrap();
        writeln!(s, "{:<16} {mc}", "").unwrap();
        writeln!(
            s,
            "{:<16} offset c = {c:.4e} (fit of P = c/gamma^{d} over [{lo}, {hi}] dB)",
            ""
        )
        .unwrap();
    }
    Ok(s)
}

fn dprime_summary(cfg: &ScenarioConfig, records: &[CurveRecord]) -> CliResult<String> {
    let n = cfg.channel.n();
    let d = (n as f64 - cfg.r).powi(2);
    let mut s = String::new();
    writeln!(
        s,
        "differential diversity vs SNR, n = m = {n}, r = {}, asymptote (n-r)^2 = {d}",
        cfg.r
    )
    .unwrap();
    for def in MuxGainDef::ALL {
        let last = rows_for(records, def).last();
        if let Some(rec) = last {
            writeln!(
                s,
                "{:<16} at {} dB: numeric {}, closed form {}",
                def.name(),
                rec.gamma_db,
                rec.dprime_numeric,
                rec.dprime_closed
            )
            .unwrap();
        }
    }
    let rows = threshold_rows(
        n,
        cfg.r,
        &[
            MuxGainDef::MeanFraction,
            MuxGainDef::LogSnrOffset,
            MuxGainDef::LogSnr,
        ],
    )?;
    s.push_str(&format_threshold_table(n, cfg.r, &rows));
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_tables() {
        let r = reproduce(Target::Ex1, &Overrides::default()).unwrap();
        assert!(r.summary.contains("mean-fraction"));
        assert!(r.summary.contains("121.60"), "{}", r.summary);
        assert!(r.summary.contains("45.58"), "{}", r.summary);
        assert!(r.summary.contains("120"));
        assert!(r.summary.contains("50"));
        let r2 = reproduce(Target::Ex2, &Overrides::default()).unwrap();
        assert!(r2.summary.contains("29.54"), "{}", r2.summary);
        assert!(r2.summary.contains("22"));
    }

    #[test]
    fn increasing_segments_merge_adjacent_steps() {
        let rec = |db: f64, p: f64| CurveRecord {
            definition: "log-snr".into(),
            r: 1.0,
            gamma_db: db,
            gamma_linear: 10f64.powf(db / 10.0),
            rate_nats: Cell::Na,
            p_analytic: Cell::Value(p),
            p_bound: Cell::Na,
            mc_p_hat: Cell::Na,
            mc_ci_lo: Cell::Na,
            mc_ci_hi: Cell::Na,
            mc_trials: Cell::Na,
            d_ratio: Cell::Na,
            dprime_numeric: Cell::Na,
            dprime_closed: Cell::Na,
            ref_inv_gamma: 1.0,
            methods: "none".into(),
        };
        let recs = vec![
            rec(0.0, 0.1),
            rec(1.0, 0.2),
            rec(2.0, 0.3),
            rec(3.0, 0.1),
            rec(4.0, 0.2),
        ];
        assert_eq!(
            increasing_segments(&recs, MuxGainDef::LogSnr),
            vec![(0.0, 2.0), (3.0, 4.0)]
        );
        assert!(increasing_segments(&recs, MuxGainDef::MeanFraction).is_empty());
    }
}
