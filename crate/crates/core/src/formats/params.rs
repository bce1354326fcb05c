use serde::{Deserialize, Serialize};

use super::FormatError;
use crate::constants::{hz_to_rad, rad_to_hz};
use crate::device::{DeviceParams, DeviceSpec};

/// Keys of the parameter file, in canonical order. Only
/// `cavity_pull_hz_per_m` is optional.
pub const PARAM_KEYS: [&str; 13] = [
    "f_cavity_hz",
    "kappa_hz",
    "kappa_ext_hz",
    "kappa_int_hz",
    "f_mech_hz",
    "gamma_m_hz",
    "mass_kg",
    "gap_m",
    "inductance_h",
    "capacitance_f",
    "eta",
    "temperature_k",
    "cavity_pull_hz_per_m",
];

/// Device parameters as they appear in a parameter file: rates and
/// frequencies in Hz (κ/2π etc.), everything else SI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamRecord {
    pub f_cavity_hz: f64,
    pub kappa_hz: f64,
    pub kappa_ext_hz: f64,
    pub kappa_int_hz: f64,
    pub f_mech_hz: f64,
    pub gamma_m_hz: f64,
    pub mass_kg: f64,
    pub gap_m: f64,
    pub inductance_h: f64,
    pub capacitance_f: f64,
    pub eta: f64,
    pub temperature_k: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cavity_pull_hz_per_m: Option<f64>,
}

impl ParamRecord {
    pub fn from_params(params: &DeviceParams) -> Self {
        Self {
            f_cavity_hz: rad_to_hz(params.omega_c()),
            kappa_hz: rad_to_hz(params.kappa()),
            kappa_ext_hz: rad_to_hz(params.kappa_ex()),
            kappa_int_hz: rad_to_hz(params.kappa_0()),
            f_mech_hz: rad_to_hz(params.omega_m()),
            gamma_m_hz: rad_to_hz(params.gamma_m()),
            mass_kg: params.mass(),
            gap_m: params.gap(),
            inductance_h: params.inductance(),
            capacitance_f: params.capacitance(),
            eta: params.eta(),
            temperature_k: params.temperature(),
            cavity_pull_hz_per_m: Some(rad_to_hz(params.cavity_pull())),
        }
    }

    pub fn to_spec(&self) -> DeviceSpec {
        DeviceSpec {
            omega_c: hz_to_rad(self.f_cavity_hz),
            kappa: hz_to_rad(self.kappa_hz),
            kappa_ex: hz_to_rad(self.kappa_ext_hz),
            kappa_0: hz_to_rad(self.kappa_int_hz),
            omega_m: hz_to_rad(self.f_mech_hz),
            gamma_m: hz_to_rad(self.gamma_m_hz),
            mass: self.mass_kg,
            gap: self.gap_m,
            inductance: self.inductance_h,
            capacitance: self.capacitance_f,
            eta: self.eta,
            temperature: self.temperature_k,
            cavity_pull: self.cavity_pull_hz_per_m.map(hz_to_rad),
        }
    }

    pub fn to_params(&self) -> Result<DeviceParams, FormatError> {
        Ok(DeviceParams::new(self.to_spec())?)
    }

    fn values(&self) -> [Option<f64>; 13] {
        [
            Some(self.f_cavity_hz),
            Some(self.kappa_hz),
            Some(self.kappa_ext_hz),
            Some(self.kappa_int_hz),
            Some(self.f_mech_hz),
            Some(self.gamma_m_hz),
            Some(self.mass_kg),
            Some(self.gap_m),
            Some(self.inductance_h),
            Some(self.capacitance_f),
            Some(self.eta),
            Some(self.temperature_k),
            self.cavity_pull_hz_per_m,
        ]
    }

    fn from_values(values: [Option<f64>; 13]) -> Result<Self, FormatError> {
        let need = |i: usize| values[i].ok_or_else(|| FormatError::MissingKey(PARAM_KEYS[i].to_string()));
        Ok(Self {
            f_cavity_hz: need(0)?,
            kappa_hz: need(1)?,
            kappa_ext_hz: need(2)?,
            kappa_int_hz: need(3)?,
            f_mech_hz: need(4)?,
            gamma_m_hz: need(5)?,
            mass_kg: need(6)?,
            gap_m: need(7)?,
            inductance_h: need(8)?,
            capacitance_f: need(9)?,
            eta: need(10)?,
            temperature_k: need(11)?,
            cavity_pull_hz_per_m: values[12],
        })
    }
}

#[derive(Default)]
struct Collector {
    values: [Option<f64>; 13],
}

impl Collector {
    fn set(&mut self, key: &str, raw: &str, value: Option<f64>, line: usize) -> Result<(), FormatError> {
        let Some(slot) = PARAM_KEYS.iter().position(|k| *k == key) else {
            return Err(FormatError::UnknownKey {
                key: key.to_string(),
                line,
            });
        };
        if self.values[slot].is_some() {
            return Err(FormatError::DuplicateKey {
                key: key.to_string(),
                line,
            });
        }
        match value {
            Some(v) if v.is_finite() => {
                self.values[slot] = Some(v);
                Ok(())
            }
            _ => Err(FormatError::BadValue {
                key: key.to_string(),
                line,
                value: raw.to_string(),
            }),
        }
    }
}

/// Parses a parameter file: either a JSON object, or `key = value` lines
/// with `#` comments. Line numbers in errors are 1-based.
pub fn parse_param_file(text: &str) -> Result<ParamRecord, FormatError> {
    let mut collector = Collector::default();
    if text.trim_start().starts_with('{') {
        let map: serde_json::Map<String, serde_json::Value> = serde_json::from_str(text)?;
        for (key, value) in &map {
            let line = json_key_line(text, key);
            collector.set(key, &value.to_string(), value.as_f64(), line)?;
        }
    } else {
        for (index, raw_line) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(FormatError::Syntax {
                    line,
                    message: format!("expected `key = value`, found `{content}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            collector.set(key, value, value.parse::<f64>().ok(), line)?;
        }
    }
    ParamRecord::from_values(collector.values)
}

/// Line on which `"key"` first appears, for diagnostics; 0 if not found.
fn json_key_line(text: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    text.find(&needle)
        .map_or(0, |pos| text[..pos].matches('\n').count() + 1)
}

/// Parses a parameter file and validates it into [`DeviceParams`].
pub fn read_params(text: &str) -> Result<DeviceParams, FormatError> {
    parse_param_file(text)?.to_params()
}

/// Serializes in the `key = value` form, one key per line in canonical order.
/// Values use the shortest representation that parses back exactly.
pub fn write_param_file(record: &ParamRecord) -> String {
    let mut out = String::new();
    for (key, value) in PARAM_KEYS.iter().zip(record.values()) {
        if let Some(v) = value {
            out.push_str(&format!("{key} = {v:e}\n"));
        }
    }
    out
}
