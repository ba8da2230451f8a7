use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{OutputFormat, SweepConfig};
use crate::error::{CliError, Result};
use crate::sweep::{FirstTermRow, SweepOutput, SweepRow};

pub const CSV_HEADER: &str = "n_atoms,mu,criterion,order,value,phi_x,phi_y,first_term,second_term";
pub const FIRST_TERMS_HEADER: &str = "n_atoms,mu,kind,order,value,phi";

/// 17 significant digits, enough to round-trip any f64.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.n_atoms,
            num(r.mu),
            r.criterion,
            r.order,
            num(r.value),
            num(r.phi_x),
            num(r.phi_y),
            num(r.first_term),
            num(r.second_term)
        ));
    }
    s
}

pub fn first_terms_to_csv(rows: &[FirstTermRow]) -> String {
    let mut s = String::from(FIRST_TERMS_HEADER);
    s.push('\n');
    for r in rows {
        let kind = serde_json::to_value(r.kind).expect("enum serializes");
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n_atoms,
            num(r.mu),
            kind.as_str().expect("string tag"),
            r.order,
            num(r.value),
            num(r.phi)
        ));
    }
    s
}

pub fn parse_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| CliError::Config(format!("bad csv: {e}")))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != CSV_HEADER {
        return Err(CliError::Config(format!("unexpected csv header '{header}'")));
    }
    reader
        .deserialize()
        .map(|r| r.map_err(|e| CliError::Config(format!("bad csv row: {e}"))))
        .collect()
}

#[derive(Serialize)]
struct JsonDoc<'a> {
    config: &'a SweepConfig,
    rows: &'a [SweepRow],
    #[serde(skip_serializing_if = "<[FirstTermRow]>::is_empty")]
    first_terms: &'a [FirstTermRow],
}

pub fn to_json(config: &SweepConfig, out: &SweepOutput) -> String {
    let doc = JsonDoc {
        config,
        rows: &out.rows,
        first_terms: &out.first_terms,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("plain data serializes");
    s.push('\n');
    s
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Sibling path for first-term rows: `out.csv` → `out.first_terms.csv`.
pub fn first_terms_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    path.with_file_name(format!("{stem}.first_terms.csv"))
}

/// Serializes the sweep in the configured format. Returns the main document
/// and, for CSV with first terms enabled, the first-term table.
pub fn render(config: &SweepConfig, out: &SweepOutput) -> (String, Option<String>) {
    match config.format {
        OutputFormat::Csv => {
            let extra = config
                .emit_first_terms
                .then(|| first_terms_to_csv(&out.first_terms));
            (rows_to_csv(&out.rows), extra)
        }
        OutputFormat::Json => (to_json(config, out), None),
    }
}

pub fn write_output(config: &SweepConfig, out: &SweepOutput) -> Result<()> {
    let (main, extra) = render(config, out);
    match &config.output_path {
        Some(path) => {
            write_atomic(path, &main)?;
            if let Some(extra) = extra {
                write_atomic(&first_terms_path(path), &extra)?;
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(main.as_bytes())
                .map_err(|e| CliError::io("<stdout>", e))?;
            if let Some(extra) = extra {
                stdout
                    .write_all(extra.as_bytes())
                    .map_err(|e| CliError::io("<stdout>", e))?;
            }
        }
    }
    Ok(())
}
