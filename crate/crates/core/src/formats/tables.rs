use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::FormatError;
use crate::constants::{hz_to_rad, rad_to_hz};
use crate::spectrum::{amplitude_db, ComplexSpectrum};

pub const SPECTRUM_HEADER: [&str; 5] = ["probe_freq_hz", "re_t", "im_t", "mag_db", "phase_rad"];
pub const MAP_HEADER: [&str; 3] = ["drive_freq_hz", "probe_freq_hz", "mag_db"];
pub const NOISE_HEADER: [&str; 2] = ["freq_hz", "power"];

/// A transmission spectrum as stored on disk (frequencies in Hz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub freq_hz: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl SpectrumTable {
    pub fn from_spectrum(spectrum: &ComplexSpectrum) -> Self {
        Self {
            freq_hz: spectrum.frequencies().iter().map(|&w| rad_to_hz(w)).collect(),
            values: spectrum.values().to_vec(),
        }
    }

    /// Converts to rad/s and validates ordering and finiteness.
    pub fn to_spectrum(&self) -> Result<ComplexSpectrum, FormatError> {
        let grid = self.freq_hz.iter().map(|&f| hz_to_rad(f)).collect();
        Ok(ComplexSpectrum::new(grid, self.values.clone(), None)?)
    }
}

/// Magnitude map over a drive × probe product grid; `mag_db` is drive-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapTable {
    pub drive_hz: Vec<f64>,
    pub probe_hz: Vec<f64>,
    pub mag_db: Vec<f64>,
}

impl MapTable {
    pub fn at(&self, drive: usize, probe: usize) -> f64 {
        self.mag_db[drive * self.probe_hz.len() + probe]
    }

    pub fn row(&self, drive: usize) -> &[f64] {
        let n = self.probe_hz.len();
        &self.mag_db[drive * n..(drive + 1) * n]
    }
}

/// Real-valued spectrum such as a mechanical noise peak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseTable {
    pub freq_hz: Vec<f64>,
    pub power: Vec<f64>,
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(false)
        .from_reader(text.as_bytes())
}

/// Column positions of `required` in the header, by name.
fn locate(headers: &csv::StringRecord, required: &[&str]) -> Result<Vec<usize>, FormatError> {
    required
        .iter()
        .map(|name| {
            headers.iter().position(|h| h == *name).ok_or_else(|| FormatError::Csv {
                line: 1,
                message: format!("header lacks column `{name}`"),
            })
        })
        .collect()
}

fn field(record: &csv::StringRecord, column: usize, name: &str) -> Result<f64, FormatError> {
    let line = record.position().map_or(0, |p| p.line() as usize);
    let raw = record.get(column).unwrap_or("");
    raw.parse::<f64>().map_err(|_| FormatError::BadValue {
        key: name.to_string(),
        line,
        value: raw.to_string(),
    })
}

fn finite_field(record: &csv::StringRecord, column: usize, name: &str) -> Result<f64, FormatError> {
    let v = field(record, column, name)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(FormatError::BadValue {
            key: name.to_string(),
            line: record.position().map_or(0, |p| p.line() as usize),
            value: v.to_string(),
        })
    }
}

/// Writes the five-column spectrum CSV with 17 significant digits.
pub fn write_spectrum_csv(table: &SpectrumTable) -> String {
    let mut out = SPECTRUM_HEADER.join(",");
    out.push('\n');
    for (f, t) in table.freq_hz.iter().zip(&table.values) {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            f,
            t.re,
            t.im,
            amplitude_db(*t),
            t.arg()
        ));
    }
    out
}

/// Reads a spectrum CSV. `mag_db` and `phase_rad` are derived and ignored;
/// only `probe_freq_hz`, `re_t`, `im_t` are required.
pub fn parse_spectrum_csv(text: &str) -> Result<SpectrumTable, FormatError> {
    let mut rdr = reader(text);
    let cols = locate(rdr.headers()?, &SPECTRUM_HEADER[..3])?;
    let mut table = SpectrumTable {
        freq_hz: Vec::new(),
        values: Vec::new(),
    };
    for record in rdr.records() {
        let record = record?;
        table.freq_hz.push(finite_field(&record, cols[0], SPECTRUM_HEADER[0])?);
        let re = finite_field(&record, cols[1], SPECTRUM_HEADER[1])?;
        let im = finite_field(&record, cols[2], SPECTRUM_HEADER[2])?;
        table.values.push(Complex64::new(re, im));
    }
    Ok(table)
}

/// Long-form map CSV, one row per (drive, probe) pair, drive-major.
pub fn write_map_csv(table: &MapTable) -> String {
    let mut out = MAP_HEADER.join(",");
    out.push('\n');
    for (i, d) in table.drive_hz.iter().enumerate() {
        for (j, p) in table.probe_hz.iter().enumerate() {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", d, p, table.at(i, j)));
        }
    }
    out
}

/// Reads a long-form map and checks that it covers a full product grid in
/// drive-major order.
pub fn parse_map_csv(text: &str) -> Result<MapTable, FormatError> {
    let mut rdr = reader(text);
    let cols = locate(rdr.headers()?, &MAP_HEADER)?;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let mag = field(&record, cols[2], MAP_HEADER[2])?;
        if mag.is_nan() {
            return Err(FormatError::BadValue {
                key: MAP_HEADER[2].into(),
                line,
                value: "NaN".into(),
            });
        }
        rows.push((
            finite_field(&record, cols[0], MAP_HEADER[0])?,
            finite_field(&record, cols[1], MAP_HEADER[1])?,
            mag,
            line,
        ));
    }
    let Some(&(first_drive, ..)) = rows.first() else {
        return Ok(MapTable {
            drive_hz: Vec::new(),
            probe_hz: Vec::new(),
            mag_db: Vec::new(),
        });
    };
    let probe_hz: Vec<f64> = rows.iter().take_while(|r| r.0 == first_drive).map(|r| r.1).collect();
    let np = probe_hz.len();
    if rows.len() % np != 0 {
        return Err(FormatError::Invalid(format!(
            "{} rows do not form a product grid with {np} probe points",
            rows.len()
        )));
    }
    let drive_hz: Vec<f64> = rows.iter().step_by(np).map(|r| r.0).collect();
    for (k, &(d, p, _, line)) in rows.iter().enumerate() {
        if d != drive_hz[k / np] || p != probe_hz[k % np] {
            return Err(FormatError::Csv {
                line,
                message: "row breaks the drive-major product grid".into(),
            });
        }
    }
    Ok(MapTable {
        drive_hz,
        probe_hz,
        mag_db: rows.into_iter().map(|r| r.2).collect(),
    })
}

pub fn write_noise_csv(table: &NoiseTable) -> String {
    let mut out = NOISE_HEADER.join(",");
    out.push('\n');
    for (f, p) in table.freq_hz.iter().zip(&table.power) {
        out.push_str(&format!("{f:.16e},{p:.16e}\n"));
    }
    out
}

pub fn parse_noise_csv(text: &str) -> Result<NoiseTable, FormatError> {
    let mut rdr = reader(text);
    let cols = locate(rdr.headers()?, &NOISE_HEADER)?;
    let mut table = NoiseTable {
        freq_hz: Vec::new(),
        power: Vec::new(),
    };
    for record in rdr.records() {
        let record = record?;
        table.freq_hz.push(finite_field(&record, cols[0], NOISE_HEADER[0])?);
        table.power.push(finite_field(&record, cols[1], NOISE_HEADER[1])?);
    }
    Ok(table)
}

/// Writes any flat record type as CSV with a header row.
pub fn write_rows<T: Serialize>(rows: &[T]) -> Result<String, FormatError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| FormatError::Invalid(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| FormatError::Invalid(e.to_string()))
}

pub fn parse_rows<T: DeserializeOwned>(text: &str) -> Result<Vec<T>, FormatError> {
    let mut rdr = reader(text);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row?);
    }
    Ok(out)
}
