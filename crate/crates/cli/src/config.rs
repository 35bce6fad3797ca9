//! Scenario configuration: a TOML file, overridden key by key by flags.
//!
//! ```toml
//! [channel]
//! kind = "iid"                 # or "keyhole"
//! m = 2
//! n = 2
//! family = "complex-gaussian"  # iid only
//! rho_tx = 0.0                 # keyhole only, exponential correlation
//! rho_rx = 0.0
//!
//! [sweep]
//! start_db = 0.0
//! stop_db = 30.0
//! step_db = 1.0
//!
//! [mux]
//! definitions = ["mean-fraction"]
//! r = 1.0
//!
//! [mc]
//! trials = 1000000
//! seed = 1
//! shard_size = 10000
//! workers = 0
//!
//! [report]
//! outputs = ["analytic", "bound", "numeric", "closed-form"]
//! path = "-"
//! format = "csv"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use mimo_dmt::{
    ChannelSpec64, FadingFamily, IidChannelSpec, KeyholeChannelSpec64, MuxGainDef, Snr64,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Environment variable naming the directory for relative output paths.
pub const OUT_DIR_ENV: &str = "MIMO_DMT_OUT_DIR";

const MAX_GRID_POINTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelKind {
    Iid,
    Keyhole,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, ValueEnum,
)]
#[serde(rename_all = "kebab-case")]
pub enum Output {
    Analytic,
    Bound,
    ClosedForm,
    Numeric,
    Mc,
    Thresholds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub mux: MuxSection,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default)]
    pub report: ReportSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub kind: Option<ChannelKind>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub family: Option<FadingFamily>,
    pub rho_tx: Option<f64>,
    pub rho_rx: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub start_db: Option<f64>,
    pub stop_db: Option<f64>,
    pub step_db: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuxSection {
    pub definitions: Option<Vec<MuxGainDef>>,
    pub r: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub shard_size: Option<u64>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    pub outputs: Option<Vec<Output>>,
    pub path: Option<String>,
    pub format: Option<Format>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| text[s].trim().to_string())
                .unwrap_or_default();
            CliError::Config {
                field: if field.is_empty() {
                    "config".into()
                } else {
                    field
                },
                detail: e.message().to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::ConfigFile {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config { field, detail } => CliError::Config {
                field,
                detail: format!("{detail} (in {})", path.display()),
            },
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        // every field is a plain scalar or list, so serialization cannot fail
        toml::to_string(self).unwrap()
    }
}

/// Command-line overrides; each flag mirrors one config key.
#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    /// TOML scenario file; flags below override its values.
    #[arg(long, short = 'c')]
    pub config: Option<PathBuf>,

    #[arg(long, value_enum)]
    pub channel: Option<ChannelKind>,
    /// Transmit antennas.
    #[arg(long)]
    pub m: Option<usize>,
    /// Receive antennas.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub family: Option<FadingFamily>,
    #[arg(long)]
    pub rho_tx: Option<f64>,
    #[arg(long)]
    pub rho_rx: Option<f64>,

    #[arg(long, allow_hyphen_values = true)]
    pub start_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub stop_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub step_db: Option<f64>,

    /// Multiplexing-gain definitions (comma separated).
    #[arg(long = "definition", value_delimiter = ',')]
    pub definitions: Option<Vec<MuxGainDef>>,
    #[arg(long)]
    pub r: Option<f64>,

    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub shard_size: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,

    /// Requested outputs (comma separated).
    #[arg(long = "outputs", value_enum, value_delimiter = ',')]
    pub outputs: Option<Vec<Output>>,
    /// Output path; `-` writes to standard output.
    #[arg(long, short = 'o')]
    pub out: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl ScenarioArgs {
    /// Layer the flags over `file`.
    pub fn overlay(&self, mut file: ConfigFile) -> ConfigFile {
        fn set<T: Clone>(slot: &mut Option<T>, flag: &Option<T>) {
            if flag.is_some() {
                slot.clone_from(flag);
            }
        }
        let c = &mut file.channel;
        set(&mut c.kind, &self.channel);
        set(&mut c.m, &self.m);
        set(&mut c.n, &self.n);
        set(&mut c.family, &self.family);
        set(&mut c.rho_tx, &self.rho_tx);
        set(&mut c.rho_rx, &self.rho_rx);
        let s = &mut file.sweep;
        set(&mut s.start_db, &self.start_db);
        set(&mut s.stop_db, &self.stop_db);
        set(&mut s.step_db, &self.step_db);
        set(&mut file.mux.definitions, &self.definitions);
        set(&mut file.mux.r, &self.r);
        let mc = &mut file.mc;
        set(&mut mc.trials, &self.trials);
        set(&mut mc.seed, &self.seed);
        set(&mut mc.shard_size, &self.shard_size);
        set(&mut mc.workers, &self.workers);
        let rep = &mut file.report;
        set(&mut rep.outputs, &self.outputs);
        set(&mut rep.path, &self.out);
        set(&mut rep.format, &self.format);
        file
    }

    pub fn resolve(&self) -> CliResult<ScenarioConfig> {
        let file = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        ScenarioConfig::from_file(&self.overlay(file))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelConfig {
    Iid(IidChannelSpec),
    Keyhole {
        m: usize,
        n: usize,
        rho_tx: f64,
        rho_rx: f64,
    },
}

impl ChannelConfig {
    pub fn spec(&self) -> CliResult<ChannelSpec64> {
        Ok(match *self {
            ChannelConfig::Iid(s) => s.into(),
            ChannelConfig::Keyhole {
                m,
                n,
                rho_tx,
                rho_rx,
            } => KeyholeChannelSpec64::exponential(m, n, rho_tx, rho_rx)
                .map_err(|e| CliError::config("channel", e.to_string()))?
                .into(),
        })
    }

    pub fn m(&self) -> usize {
        match self {
            ChannelConfig::Iid(s) => s.m(),
            ChannelConfig::Keyhole { m, .. } => *m,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            ChannelConfig::Iid(s) => s.n(),
            ChannelConfig::Keyhole { n, .. } => *n,
        }
    }

    pub fn is_square_iid(&self) -> bool {
        matches!(self, ChannelConfig::Iid(s) if s.m() == s.n())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub start_db: f64,
    pub stop_db: f64,
    pub step_db: f64,
}

impl Sweep {
    pub fn new(start_db: f64, stop_db: f64, step_db: f64) -> CliResult<Self> {
        if !start_db.is_finite() {
            return Err(CliError::config("sweep.start_db", "must be finite"));
        }
        if !stop_db.is_finite() || stop_db < start_db {
            return Err(CliError::config(
                "sweep.stop_db",
                format!("must be finite and ≥ start_db ({start_db})"),
            ));
        }
        if !(step_db > 0.0 && step_db.is_finite()) {
            return Err(CliError::config(
                "sweep.step_db",
                format!("must be positive, got {step_db}"),
            ));
        }
        let s = Self {
            start_db,
            stop_db,
            step_db,
        };
        if s.len() > MAX_GRID_POINTS {
            return Err(CliError::config(
                "sweep.step_db",
                format!("grid would have {} points", s.len()),
            ));
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        ((self.stop_db - self.start_db) / self.step_db + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn db_values(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.start_db + i as f64 * self.step_db)
            .collect()
    }

    pub fn snrs(&self) -> CliResult<Vec<Snr64>> {
        self.db_values()
            .into_iter()
            .map(|db| Snr64::from_db(db).map_err(|e| CliError::config("sweep", e.to_string())))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McSettings {
    pub trials: u64,
    pub seed: u64,
    pub shard_size: u64,
    pub workers: usize,
}

pub const DEFAULT_SEED: u64 = 1;

impl Default for McSettings {
    fn default() -> Self {
        Self {
            trials: mimo_dmt::montecarlo::DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            shard_size: mimo_dmt::montecarlo::DEFAULT_SHARD_SIZE,
            workers: 0,
        }
    }
}

/// A fully resolved and validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub channel: ChannelConfig,
    pub sweep: Sweep,
    pub definitions: Vec<MuxGainDef>,
    pub r: f64,
    pub outputs: Vec<Output>,
    pub mc: McSettings,
    pub path: String,
    pub format: Format,
}

impl ScenarioConfig {
    pub fn from_file(file: &ConfigFile) -> CliResult<Self> {
        let ch = &file.channel;
        let kind = ch.kind.unwrap_or(ChannelKind::Iid);
        let m =
            ch.m.ok_or_else(|| CliError::config("channel.m", "missing"))?;
        let n =
            ch.n.ok_or_else(|| CliError::config("channel.n", "missing"))?;
        if m == 0 {
            return Err(CliError::config("channel.m", "must be at least 1"));
        }
        if n == 0 {
            return Err(CliError::config("channel.n", "must be at least 1"));
        }
        let channel = match kind {
            ChannelKind::Iid => {
                if ch.rho_tx.is_some() || ch.rho_rx.is_some() {
                    return Err(CliError::config(
                        "channel.rho_tx",
                        "correlation applies to keyhole channels only",
                    ));
                }
                let family = ch.family.unwrap_or(FadingFamily::ComplexGaussian);
                ChannelConfig::Iid(
                    IidChannelSpec::new(m, n, family)
                        .map_err(|e| CliError::config("channel", e.to_string()))?,
                )
            }
            ChannelKind::Keyhole => {
                if ch.family.is_some() {
                    return Err(CliError::config(
                        "channel.family",
                        "keyhole channels are always complex Gaussian",
                    ));
                }
                let rho = |v: Option<f64>, field: &str| -> CliResult<f64> {
                    let r = v.unwrap_or(0.0);
                    if (0.0..1.0).contains(&r) {
                        Ok(r)
                    } else {
                        Err(CliError::config(
                            field,
                            format!("must lie in [0, 1), got {r}"),
                        ))
                    }
                };
                ChannelConfig::Keyhole {
                    m,
                    n,
                    rho_tx: rho(ch.rho_tx, "channel.rho_tx")?,
                    rho_rx: rho(ch.rho_rx, "channel.rho_rx")?,
                }
            }
        };

        let sw = &file.sweep;
        let sweep = Sweep::new(
            sw.start_db.unwrap_or(0.0),
            sw.stop_db.unwrap_or(30.0),
            sw.step_db.unwrap_or(1.0),
        )?;

        let mut definitions = file
            .mux
            .definitions
            .clone()
            .unwrap_or_else(|| vec![MuxGainDef::MeanFraction]);
        if definitions.is_empty() {
            return Err(CliError::config(
                "mux.definitions",
                "must name at least one definition",
            ));
        }
        dedup_in_order(&mut definitions);
        let r = file
            .mux
            .r
            .ok_or_else(|| CliError::config("mux.r", "missing"))?;
        let dof = match channel {
            ChannelConfig::Iid(s) => s.m().min(s.n()),
            ChannelConfig::Keyhole { .. } => 1,
        };
        if !(r >= 0.0 && r <= dof as f64) {
            return Err(CliError::config(
                "mux.r",
                format!("must lie in [0, {dof}], got {r}"),
            ));
        }

        let mut outputs = file.report.outputs.clone().unwrap_or_else(|| {
            vec![
                Output::Analytic,
                Output::Bound,
                Output::Numeric,
                Output::ClosedForm,
            ]
        });
        if outputs.is_empty() {
            return Err(CliError::config(
                "report.outputs",
                "must request at least one output",
            ));
        }
        outputs.sort();
        outputs.dedup();
        if outputs.contains(&Output::Thresholds) && !channel.is_square_iid() {
            return Err(CliError::config(
                "report.outputs",
                "thresholds need a square i.i.d. channel",
            ));
        }

        let defaults = McSettings::default();
        let mc = McSettings {
            trials: file.mc.trials.unwrap_or(defaults.trials),
            seed: file.mc.seed.unwrap_or(defaults.seed),
            shard_size: file.mc.shard_size.unwrap_or(defaults.shard_size),
            workers: file.mc.workers.unwrap_or(defaults.workers),
        };
        if mc.trials == 0 {
            return Err(CliError::config("mc.trials", "must be at least 1"));
        }
        if mc.shard_size == 0 {
            return Err(CliError::config("mc.shard_size", "must be at least 1"));
        }

        let format = file.report.format.unwrap_or(Format::Csv);
        let path = file.report.path.clone().unwrap_or_else(|| "-".into());
        if path.is_empty() {
            return Err(CliError::config("report.path", "must not be empty"));
        }
        if path == "-" && format == Format::Both {
            return Err(CliError::config(
                "report.format",
                "`both` needs a file path, not standard output",
            ));
        }

        Ok(Self {
            channel,
            sweep,
            definitions,
            r,
            outputs,
            mc,
            path,
            format,
        })
    }

    pub fn wants(&self, o: Output) -> bool {
        self.outputs.contains(&o)
    }

    /// The config as a file that reproduces this run exactly.
    pub fn to_file(&self) -> ConfigFile {
        let channel = match self.channel {
            ChannelConfig::Iid(s) => ChannelSection {
                kind: Some(ChannelKind::Iid),
                m: Some(s.m()),
                n: Some(s.n()),
                family: Some(s.family()),
                rho_tx: None,
                rho_rx: None,
            },
            ChannelConfig::Keyhole {
                m,
                n,
                rho_tx,
                rho_rx,
            } => ChannelSection {
                kind: Some(ChannelKind::Keyhole),
                m: Some(m),
                n: Some(n),
                family: None,
                rho_tx: Some(rho_tx),
                rho_rx: Some(rho_rx),
            },
        };
        ConfigFile {
            channel,
            sweep: SweepSection {
                start_db: Some(self.sweep.start_db),
                stop_db: Some(self.sweep.stop_db),
                step_db: Some(self.sweep.step_db),
            },
            mux: MuxSection {
                definitions: Some(self.definitions.clone()),
                r: Some(self.r),
            },
            mc: McSection {
                trials: Some(self.mc.trials),
                seed: Some(self.mc.seed),
                shard_size: Some(self.mc.shard_size),
                workers: Some(self.mc.workers),
            },
            report: ReportSection {
                outputs: Some(self.outputs.clone()),
                path: Some(self.path.clone()),
                format: Some(self.format),
            },
        }
    }
}

fn dedup_in_order<T: PartialEq + Copy>(v: &mut Vec<T>) {
    let mut seen = Vec::with_capacity(v.len());
    v.retain(|x| {
        if seen.contains(x) {
            false
        } else {
            seen.push(*x);
            true
        }
    });
}

/// Resolve a relative output path against [`OUT_DIR_ENV`] when it is set.
pub fn resolve_output_path(path: &str) -> PathBuf {
    let p = PathBuf::from(path);
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if p.is_relative() && !dir.is_empty() => PathBuf::from(dir).join(p),
        _ => p,
    }
}
