//! CSV serialization of curves, fringes, diagrams and experiment records.
//!
//! Every file starts with `# schema=1` and a `# config=...` echo of the fully
//! resolved configuration, so outputs are reproducible from their own header.

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::gafit::ExperimentRecord;
use crate::phase::PhaseCurve;
use crate::scan::PhaseDiagram;

pub const SCHEMA_LINE: &str = "# schema=1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing header line `{0}`")]
    MissingHeader(&'static str),
}

pub type Result<T> = std::result::Result<T, IoError>;

/// Writes the schema line plus a one-line configuration echo.
pub fn write_preamble(w: &mut impl Write, config_echo: &str) -> Result<()> {
    writeln!(w, "{SCHEMA_LINE}")?;
    writeln!(w, "# config={config_echo}")?;
    Ok(())
}

/// Qubit-protocol curve: `theta_rad,chi_raw,chi_unwrapped,contrast,valid`.
pub fn write_theta_curve(w: &mut impl Write, curve: &PhaseCurve) -> Result<()> {
    writeln!(w, "theta_rad,chi_raw,chi_unwrapped,contrast,valid")?;
    for p in &curve.points {
        writeln!(
            w,
            "{},{},{},{},{}",
            p.angle, p.chi_raw, p.chi_unwrapped, p.contrast, p.valid
        )?;
    }
    Ok(())
}

/// Optics curve rows: `alpha_rad,chi,contrast,w0_mm` (chi unwrapped).
pub fn write_alpha_curve(w: &mut impl Write, curve: &PhaseCurve, w0_mm: f64) -> Result<()> {
    for p in &curve.points {
        writeln!(w, "{},{},{},{}", p.angle, p.chi_unwrapped, p.contrast, w0_mm)?;
    }
    Ok(())
}

pub const ALPHA_CURVE_HEADER: &str = "alpha_rad,chi,contrast,w0_mm";

/// Fringe samples: `delta_rad,power`.
pub fn write_fringe(w: &mut impl Write, deltas: &[f64], powers: &[f64]) -> Result<()> {
    writeln!(w, "delta_rad,power")?;
    for (d, p) in deltas.iter().zip(powers) {
        writeln!(w, "{d},{p}")?;
    }
    Ok(())
}

/// Phase diagram: `w0_mm,gamma_rad,m,min_contrast,residual`, with empty `m`
/// and `residual` fields for unresolved cells.
pub fn write_diagram(w: &mut impl Write, diagram: &PhaseDiagram) -> Result<()> {
    writeln!(w, "w0_mm,gamma_rad,m,min_contrast,residual")?;
    for (i, &w0) in diagram.w0_values_mm.iter().enumerate() {
        for (j, &gamma) in diagram.gamma_values_rad.iter().enumerate() {
            let cell = diagram.cell(i, j);
            let m = cell.m.map_or(String::new(), |m| m.to_string());
            let residual = cell
                .quantization_residual
                .map_or(String::new(), |r| r.to_string());
            writeln!(w, "{w0},{gamma},{m},{},{residual}", cell.min_contrast)?;
        }
    }
    Ok(())
}

/// GA loss history: `generation,best_loss`.
pub fn write_history(w: &mut impl Write, history: &[f64]) -> Result<()> {
    writeln!(w, "generation,best_loss")?;
    for (generation, loss) in history.iter().enumerate() {
        writeln!(w, "{generation},{loss}")?;
    }
    Ok(())
}

pub const EXPERIMENT_HEADER: &str = "w0_mm,alpha_rad,chi_rad,contrast";

pub fn write_experiment_records(w: &mut impl Write, records: &[ExperimentRecord]) -> Result<()> {
    writeln!(w, "{EXPERIMENT_HEADER},weight")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.w0_mm, r.alpha_rad, r.chi_rad, r.contrast, r.weight
        )?;
    }
    Ok(())
}

/// Reads experiment records from CSV with header
/// `w0_mm,alpha_rad,chi_rad,contrast[,weight]`. Blank lines and `#` comments
/// are skipped; any malformed row aborts with its 1-based line number.
pub fn read_experiment_records(reader: impl BufRead) -> Result<Vec<ExperimentRecord>> {
    let mut records = Vec::new();
    let mut header_seen = false;
    let mut expect_weight = false;
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !header_seen {
            let normalized: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if normalized.len() < 4 || normalized[..4].join(",") != EXPERIMENT_HEADER {
                return Err(IoError::Parse {
                    line: line_no,
                    message: format!(
                        "expected header `{EXPERIMENT_HEADER}[,weight]`, got `{trimmed}`"
                    ),
                });
            }
            expect_weight = normalized.len() == 5 && normalized[4] == "weight";
            if normalized.len() > 5 || (normalized.len() == 5 && !expect_weight) {
                return Err(IoError::Parse {
                    line: line_no,
                    message: format!("unexpected header columns in `{trimmed}`"),
                });
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let expected = if expect_weight { 5 } else { 4 };
        if fields.len() != expected {
            return Err(IoError::Parse {
                line: line_no,
                message: format!("expected {expected} fields, got {}", fields.len()),
            });
        }
        let parse = |field: &str, name: &str| -> Result<f64> {
            field.parse::<f64>().map_err(|e| IoError::Parse {
                line: line_no,
                message: format!("bad {name} value `{field}`: {e}"),
            })
        };
        let record = ExperimentRecord {
            w0_mm: parse(fields[0], "w0_mm")?,
            alpha_rad: parse(fields[1], "alpha_rad")?,
            chi_rad: parse(fields[2], "chi_rad")?,
            contrast: parse(fields[3], "contrast")?,
            weight: if expect_weight {
                parse(fields[4], "weight")?
            } else {
                1.0
            },
        };
        if !(0.0..=1.0 + 1e-9).contains(&record.contrast) {
            return Err(IoError::Parse {
                line: line_no,
                message: format!("contrast {} outside [0, 1]", record.contrast),
            });
        }
        if record.weight < 0.0 {
            return Err(IoError::Parse {
                line: line_no,
                message: format!("negative weight {}", record.weight),
            });
        }
        records.push(record);
    }
    if !header_seen {
        return Err(IoError::MissingHeader(EXPERIMENT_HEADER));
    }
    Ok(records)
}
