//! Turn a resolved scenario into curve records.

use mimo_dmt::montecarlo::{analytic_source, RatePolicy};
use mimo_dmt::{
    common_random_sweep_rates, convergence_threshold, diversity_ratio_ln, dprime_closed_form,
    gaussian_outage, gaussian_outage_bound, keyhole_dmt, ln_gaussian_outage, ChannelSpec64,
    DiversityMethod, DmtError, McPlan64, McPoint64, MuxGain, MuxGain64, MuxGainDef, OutageCurve,
    Snr64,
};

use crate::config::{ChannelConfig, Output, ScenarioConfig};
use crate::error::{CliError, CliResult};
use crate::record::{Cell, CurveRecord};

/// Minimum number of outages for an MC point to be read as a probability.
pub const MC_FLOOR_OUTAGES: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdRow {
    pub definition: MuxGainDef,
    pub linear: f64,
    pub db: f64,
    pub reported_db: Option<f64>,
}

/// Threshold values stated alongside the closed forms in the literature
/// this tool reproduces, keyed by `(definition, n, r)`.
pub fn reported_threshold_db(def: MuxGainDef, n: usize, r: f64) -> Option<f64> {
    match def {
        MuxGainDef::MeanFraction => Some(14.0),
        MuxGainDef::LogSnrOffset if n == 10 && r == 9.0 => Some(50.0),
        MuxGainDef::LogSnr if n == 10 && r == 9.0 => Some(120.0),
        MuxGainDef::LogSnr | MuxGainDef::LogSnrOffset if n == 2 && r == 1.0 => Some(22.0),
        _ => None,
    }
}

pub fn threshold_rows(n: usize, r: f64, defs: &[MuxGainDef]) -> CliResult<Vec<ThresholdRow>> {
    let gain = MuxGain::new(r).map_err(|e| CliError::config("r", e.to_string()))?;
    if r.is_nan() || r >= n as f64 {
        return Err(CliError::config(
            "r",
            format!("thresholds need 0 ≤ r < n, got r = {r}, n = {n}"),
        ));
    }
    defs.iter()
        .map(|&d| {
            let t = convergence_threshold(d, n, gain)?;
            Ok(ThresholdRow {
                definition: d,
                linear: t.linear(),
                db: t.db(),
                reported_db: reported_threshold_db(d, n, r),
            })
        })
        .collect()
}

pub fn format_threshold_table(n: usize, r: f64, rows: &[ThresholdRow]) -> String {
    let mut out = format!(
        "convergence thresholds for n = {n}, r = {r} (closed-form d' within 10% of (n-r)^2)\n"
    );
    out.push_str(&format!(
        "{:<16} {:>14} {:>10} {:>12}\n",
        "definition", "gamma", "dB", "reported dB"
    ));
    for row in rows {
        let reported = row
            .reported_db
            .map_or("-".to_string(), |v| format!("{v:.0}"));
        let gamma = if row.linear < 1e6 {
            format!("{:.3}", row.linear)
        } else {
            format!("{:.4e}", row.linear)
        };
        out.push_str(&format!(
            "{:<16} {:>14} {:>10.2} {:>12}",
            row.definition.name(),
            gamma,
            row.db,
            reported
        ));
        if let Some(rep) = row.reported_db {
            let diff = row.db - rep;
            if diff.abs() >= 0.5 {
                out.push_str(&format!(
                    "   formula differs from reported value by {diff:+.1} dB"
                ));
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub records: Vec<CurveRecord>,
    pub notes: Vec<String>,
    pub thresholds: Option<Vec<ThresholdRow>>,
}

fn err_cell(e: &DmtError) -> Cell {
    match e {
        DmtError::BoundInvalid { .. } => Cell::Invalid,
        _ => Cell::Domain,
    }
}

fn closed_form(
    cfg: &ScenarioConfig,
    spec: &ChannelSpec64,
    def: MuxGainDef,
    snr: Snr64,
    r: MuxGain64,
) -> Cell {
    match (&cfg.channel, spec) {
        (ChannelConfig::Iid(s), _) if s.m() == s.n() => {
            dprime_closed_form(def, snr, s.n(), r).map_or_else(|e| err_cell(&e), Cell::Value)
        }
        (ChannelConfig::Keyhole { .. }, ChannelSpec64::Keyhole(k))
            if def == MuxGainDef::MeanFraction =>
        {
            keyhole_dmt(snr, k, r).map_or_else(|e| err_cell(&e), |k| Cell::Value(k.dprime))
        }
        _ => Cell::Na,
    }
}

pub fn run_scenario(cfg: &ScenarioConfig) -> CliResult<ScenarioOutput> {
    let spec = cfg.channel.spec()?;
    let snrs = cfg.sweep.snrs()?;
    let dbs = cfg.sweep.db_values();
    let r = MuxGain::new(cfg.r).map_err(|e| CliError::config("mux.r", e.to_string()))?;
    let source = analytic_source(&spec)?;
    let mut notes = Vec::new();

    let mc_rows: Option<Vec<Vec<McPoint64>>> = if cfg.wants(Output::Mc) {
        let plan = McPlan64::new(spec.clone(), snrs.clone(), RatePolicy::Fixed(0.0))
            .trials(cfg.mc.trials)
            .seed(cfg.mc.seed)
            .shard_size(cfg.mc.shard_size)
            .workers(cfg.mc.workers);
        let policies: Vec<_> = cfg
            .definitions
            .iter()
            .map(|&def| RatePolicy::Mux { def, r })
            .collect();
        let floor = MC_FLOOR_OUTAGES / cfg.mc.trials as f64;
        notes.push(format!(
            "mc_floor={floor:e} (MC estimates below {MC_FLOOR_OUTAGES} outages out of {} trials are not resolved)",
            cfg.mc.trials
        ));
        Some(common_random_sweep_rates(&plan, &policies)?)
    } else {
        None
    };

    let mut records = Vec::with_capacity(cfg.definitions.len() * snrs.len());
    let mut first_error: Option<DmtError> = None;
    let mut any_ok = false;
    for (k, &def) in cfg.definitions.iter().enumerate() {
        let curve = OutageCurve::new(source.clone(), def, r);
        for (i, (&snr, &db)) in snrs.iter().zip(&dbs).enumerate() {
            let mut methods = Vec::new();
            let point = curve.operating_point(snr);
            let (rate, p, bound, ratio) = match &point {
                Ok((stats, rate)) => {
                    any_ok = true;
                    let p = if cfg.wants(Output::Analytic) {
                        Cell::Value(gaussian_outage(stats, *rate))
                    } else {
                        Cell::Na
                    };
                    let bound = if cfg.wants(Output::Bound) {
                        gaussian_outage_bound(stats, *rate)
                            .map_or_else(|e| err_cell(&e), Cell::Value)
                    } else {
                        Cell::Na
                    };
                    let ratio = if cfg.wants(Output::Analytic) {
                        methods.push(DiversityMethod::RatioDefinition.name());
                        diversity_ratio_ln(ln_gaussian_outage(stats, *rate), snr)
                            .map_or_else(|e| err_cell(&e), Cell::Value)
                    } else {
                        Cell::Na
                    };
                    (Cell::Value(*rate), p, bound, ratio)
                }
                Err(e) => {
                    if first_error.is_none() {
                        first_error = Some(e.clone());
                    }
                    let c = err_cell(e);
                    let or_na = |o: Output| if cfg.wants(o) { c } else { Cell::Na };
                    (
                        c,
                        or_na(Output::Analytic),
                        or_na(Output::Bound),
                        or_na(Output::Analytic),
                    )
                }
            };
            let numeric = if cfg.wants(Output::Numeric) {
                methods.push(DiversityMethod::NumericDifferentiation.name());
                match curve.dprime_numeric(snr) {
                    Ok(d) => {
                        if d.accuracy_warning {
                            methods.push("step-warning");
                        }
                        Cell::Value(d.value)
                    }
                    Err(e) => err_cell(&e),
                }
            } else {
                Cell::Na
            };
            let closed = if cfg.wants(Output::ClosedForm) {
                let c = closed_form(cfg, &spec, def, snr, r);
                if c != Cell::Na {
                    methods.push(DiversityMethod::AnalyticClosedForm.name());
                }
                c
            } else {
                Cell::Na
            };
            let (mc_p, mc_lo, mc_hi, mc_n) = match mc_rows.as_ref().map(|rows| &rows[k][i]) {
                Some(McPoint64::Estimate(e)) => {
                    methods.push(DiversityMethod::McEmpirical.name());
                    (
                        Cell::Value(e.p_hat),
                        Cell::Value(e.ci95.lo),
                        Cell::Value(e.ci95.hi),
                        Cell::Value(e.trials as f64),
                    )
                }
                Some(McPoint64::Skipped { reason, .. }) => {
                    let c = err_cell(reason);
                    (c, c, c, c)
                }
                None => (Cell::Na, Cell::Na, Cell::Na, Cell::Na),
            };
            records.push(CurveRecord {
                definition: def.name().to_string(),
                r: cfg.r,
                gamma_db: db,
                gamma_linear: snr.linear(),
                rate_nats: rate,
                p_analytic: p,
                p_bound: bound,
                mc_p_hat: mc_p,
                mc_ci_lo: mc_lo,
                mc_ci_hi: mc_hi,
                mc_trials: mc_n,
                d_ratio: ratio,
                dprime_numeric: numeric,
                dprime_closed: closed,
                ref_inv_gamma: 1.0 / snr.linear(),
                methods: if methods.is_empty() {
                    "none".into()
                } else {
                    methods.join(";")
                },
            });
        }
    }
    if !any_ok {
        return Err(CliError::AllPointsFailed(
            first_error.unwrap_or_else(|| DmtError::InvalidInput("empty sweep".into())),
        ));
    }

    let thresholds = if cfg.wants(Output::Thresholds) {
        let rows = threshold_rows(cfg.channel.n(), cfg.r, &cfg.definitions)?;
        notes.push(format_threshold_table(cfg.channel.n(), cfg.r, &rows));
        Some(rows)
    } else {
        None
    };
    Ok(ScenarioOutput {
        records,
        notes,
        thresholds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ConfigFile, ScenarioConfig};

    fn cfg(text: &str) -> ScenarioConfig {
        ScenarioConfig::from_file(&ConfigFile::parse(text).unwrap()).unwrap()
    }

    #[test]
    fn minimal_sweep_has_one_row_per_grid_point() {
        let c = cfg("[channel]\nm = 2\nn = 2\n[mux]\nr = 1\n[report]\noutputs = [\"analytic\"]\n");
        let out = run_scenario(&c).unwrap();
        assert_eq!(out.records.len(), 31);
        assert!(out
            .records
            .iter()
            .all(|r| r.mc_p_hat == Cell::Na && r.dprime_numeric == Cell::Na));
    }

    #[test]
    fn offset_definition_marks_low_snr_rows() {
        let c = cfg("[channel]\nm = 2\nn = 2\n[mux]\ndefinitions = [\"log-snr-offset\"]\nr = 1\n");
        let out = run_scenario(&c).unwrap();
        for rec in &out.records {
            if rec.gamma_linear <= std::f64::consts::E {
                assert_eq!(rec.rate_nats, Cell::Domain);
                assert_eq!(rec.p_analytic, Cell::Domain);
            } else {
                assert!(rec.rate_nats.value().is_some());
            }
        }
        assert_eq!(out.records[0].gamma_db, 0.0);
        assert_eq!(
            out.records[5].rate_nats,
            Cell::Value(1.0 * (10f64.powf(0.5).ln() - 1.0))
        );
    }

    #[test]
    fn bound_sentinel_when_rate_exceeds_mean() {
        let c = cfg("[channel]\nm = 10\nn = 10\n[mux]\ndefinitions = [\"log-snr\"]\nr = 9\n[sweep]\nstart_db = 10\nstop_db = 20\n");
        let out = run_scenario(&c).unwrap();
        assert!(out.records.iter().any(|r| r.p_bound == Cell::Invalid));
    }

    #[test]
    fn all_failed_is_reported() {
        let c = cfg("[channel]\nm = 2\nn = 2\n[mux]\ndefinitions = [\"log-snr-offset\"]\nr = 1\n[sweep]\nstart_db = -10\nstop_db = 0\n");
        let err = run_scenario(&c).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn threshold_table_surfaces_discrepancy() {
        let rows = threshold_rows(10, 9.0, &MuxGainDef::ALL).unwrap();
        let text = format_threshold_table(10, 9.0, &rows);
        assert!(text.contains("45.58"), "{text}");
        assert!(text.contains("-4.4 dB"), "{text}");
        assert!(threshold_rows(2, 2.0, &MuxGainDef::ALL).is_err());
    }
}
