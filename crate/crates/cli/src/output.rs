use std::io::{self, Write};
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::config::{Format, ScenarioConfig};
use crate::error::{CliError, CliResult};
use crate::record::{write_csv, CurveDocument, CurveRecord, SCHEMA_VERSION};

pub const TOOL_NAME: &str = "mimo-dmt";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(
    path: &Path,
    body: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut tmp = NamedTempFile::new_in(&dir).map_err(|e| CliError::io(&dir, e))?;
    {
        let mut w = io::BufWriter::new(tmp.as_file_mut());
        body(&mut w).map_err(|e| CliError::io(path, e))?;
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn document(cfg: &ScenarioConfig, records: &[CurveRecord], notes: &[String]) -> CurveDocument {
    let file = cfg.to_file();
    CurveDocument {
        schema: SCHEMA_VERSION,
        tool: TOOL_NAME.into(),
        version: TOOL_VERSION.into(),
        seed: cfg.mc.seed,
        trials: cfg.mc.trials,
        // plain data; cannot fail
        config: serde_json::to_value(&file).unwrap(),
        config_toml: file.to_toml(),
        notes: notes.to_vec(),
        records: records.to_vec(),
    }
}

pub fn csv_comments(cfg: &ScenarioConfig, notes: &[String]) -> Vec<String> {
    let mut c = vec![
        format!("tool={TOOL_NAME} {TOOL_VERSION}"),
        format!("seed={} trials={}", cfg.mc.seed, cfg.mc.trials),
    ];
    c.extend(notes.iter().cloned());
    c
}

fn write_one(
    path: &str,
    format: Format,
    cfg: &ScenarioConfig,
    records: &[CurveRecord],
    notes: &[String],
) -> CliResult<Vec<PathBuf>> {
    let emit = |w: &mut dyn Write| -> io::Result<()> {
        match format {
            Format::Csv => write_csv(w, records, &csv_comments(cfg, notes)),
            _ => {
                serde_json::to_writer_pretty(&mut *w, &document(cfg, records, notes))?;
                writeln!(w)
            }
        }
    };
    if path == "-" {
        let stdout = io::stdout();
        let mut lock = stdout.lock();
        emit(&mut lock).map_err(|e| CliError::io("<stdout>", e))?;
        return Ok(Vec::new());
    }
    let p = crate::config::resolve_output_path(path);
    write_atomic(&p, emit)?;
    Ok(vec![p])
}

/// Write the scenario's records in the configured format(s). Returns the
/// files written (empty for standard output).
pub fn emit(
    cfg: &ScenarioConfig,
    records: &[CurveRecord],
    notes: &[String],
) -> CliResult<Vec<PathBuf>> {
    match cfg.format {
        Format::Both => {
            let base = Path::new(&cfg.path).with_extension("");
            let base = base.to_string_lossy();
            let mut written = write_one(&format!("{base}.csv"), Format::Csv, cfg, records, notes)?;
            written.extend(write_one(
                &format!("{base}.json"),
                Format::Json,
                cfg,
                records,
                notes,
            )?);
            Ok(written)
        }
        f => write_one(&cfg.path, f, cfg, records, notes),
    }
}
