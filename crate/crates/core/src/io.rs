//! CSV and JSON file formats, with atomic writes.
//!
//! Spectra CSV: `sample_id,plant_id,label,stage_gdd,wl_<nm>,...`, one column
//! per band with wavelengths ascending, label 0 (non-infected) or 1
//! (infected). Temperature CSV: `date,t_min,t_max[,t_mean]` with ISO dates;
//! empty cells are missing values.
//!
//! Row numbers in errors are file lines, counting the header as line 1.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::phenology::TemperatureRecord;
use crate::spectral::{Label, SpectralDataset, WavelengthGrid};

const META_COLUMNS: [&str; 4] = ["sample_id", "plant_id", "label", "stage_gdd"];
const WL_PREFIX: &str = "wl_";

fn row_err(line: usize, message: impl Into<String>) -> Error {
    Error::CsvRow {
        row: line,
        message: message.into(),
    }
}

fn parse_f64(cell: &str, line: usize, column: &str) -> Result<f64> {
    cell.trim()
        .parse::<f64>()
        .map_err(|_| row_err(line, format!("column {column}: cannot parse {cell:?} as a number")))
}

/// Writes to a sibling temp file, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidInput(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, &to_json_bytes(value)?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

/// Parses spectra CSV from any reader.
pub fn parse_spectra<R: Read>(reader: R) -> Result<SpectralDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() <= META_COLUMNS.len() {
        return Err(row_err(1, "no wavelength columns"));
    }
    for (i, want) in META_COLUMNS.iter().enumerate() {
        if header.get(i).map(str::trim) != Some(*want) {
            return Err(row_err(
                1,
                format!("column {} must be {want:?}, found {:?}", i + 1, header.get(i).unwrap_or("")),
            ));
        }
    }
    let wavelengths = header
        .iter()
        .skip(META_COLUMNS.len())
        .map(|h| {
            h.trim()
                .strip_prefix(WL_PREFIX)
                .and_then(|nm| nm.parse::<f64>().ok())
                .ok_or_else(|| row_err(1, format!("bad wavelength column {h:?}, expected wl_<nm>")))
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = WavelengthGrid::new(wavelengths).map_err(|e| row_err(1, e.to_string()))?;

    let mut samples = Vec::new();
    let mut labels = Vec::new();
    let mut sample_ids = Vec::new();
    let mut plant_ids = Vec::new();
    let mut stage_gdd = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| row_err(line, e.to_string()))?;
        if rec.len() != header.len() {
            return Err(row_err(
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        sample_ids.push(rec[0].to_string());
        plant_ids.push(rec[1].to_string());
        let label = match rec[2].trim() {
            "0" => Label::NonInfected,
            "1" => Label::Infected,
            other => return Err(row_err(line, format!("label must be 0 or 1, found {other:?}"))),
        };
        labels.push(label);
        stage_gdd.push(parse_f64(&rec[3], line, "stage_gdd")?);
        let row = rec
            .iter()
            .skip(META_COLUMNS.len())
            .zip(header.iter().skip(META_COLUMNS.len()))
            .map(|(cell, col)| {
                let v = parse_f64(cell, line, col)?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(row_err(line, format!("column {col}: non-finite value")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        samples.push(row);
    }
    if samples.is_empty() {
        return Err(row_err(2, "no data rows"));
    }
    SpectralDataset::new(grid, samples, labels, sample_ids, plant_ids, stage_gdd)
}

pub fn read_spectra_csv(path: &Path) -> Result<SpectralDataset> {
    let f = fs::File::open(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    parse_spectra(f)
}

pub fn spectra_csv_bytes(ds: &SpectralDataset) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = META_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(ds.grid.as_slice().iter().map(|nm| format!("{WL_PREFIX}{nm}")));
    w.write_record(&header)?;
    for i in 0..ds.n_samples() {
        let mut rec = vec![
            ds.sample_ids[i].clone(),
            ds.plant_ids[i].clone(),
            ds.labels[i].as_u8().to_string(),
            ds.stage_gdd[i].to_string(),
        ];
        rec.extend(ds.samples[i].iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

pub fn write_spectra_csv(path: &Path, ds: &SpectralDataset) -> Result<()> {
    write_atomic(path, &spectra_csv_bytes(ds)?)
}

fn optional_cell(cell: Option<&str>, line: usize, column: &str) -> Result<Option<f64>> {
    match cell.map(str::trim) {
        None | Some("") => Ok(None),
        Some(s) => parse_f64(s, line, column).map(Some),
    }
}

pub fn parse_temperatures<R: Read>(reader: R) -> Result<Vec<TemperatureRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let expected = ["date", "t_min", "t_max"];
    let has_mean = header.len() == 4 && header[3] == "t_mean";
    if header.len() < 3 || header[..3] != expected || (header.len() == 4 && !has_mean) || header.len() > 4 {
        return Err(row_err(1, "header must be date,t_min,t_max[,t_mean]"));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| row_err(line, e.to_string()))?;
        if rec.len() != header.len() {
            return Err(row_err(
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        let date = NaiveDate::parse_from_str(rec[0].trim(), "%Y-%m-%d")
            .map_err(|_| row_err(line, format!("bad date {:?}", &rec[0])))?;
        out.push(TemperatureRecord {
            date,
            t_min: optional_cell(rec.get(1), line, "t_min")?,
            t_max: optional_cell(rec.get(2), line, "t_max")?,
            t_mean: if has_mean {
                optional_cell(rec.get(3), line, "t_mean")?
            } else {
                None
            },
        });
    }
    Ok(out)
}

pub fn read_temperature_csv(path: &Path) -> Result<Vec<TemperatureRecord>> {
    let f = fs::File::open(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    parse_temperatures(f)
}
