//! Bundled device datasets and their typed loaders. Every file carries a
//! provenance block naming the source table; user files in the same layout
//! go through the same loaders.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::capnet::{load_capacitance_record, CapacitanceRecord};
use crate::charstats::{load_module_records, ModuleRecord};
use crate::error::{Error, Result};

/// Prefix selecting a bundled dataset in place of a file path.
pub const BUNDLED_PREFIX: &str = "bundled:";

pub struct BundledFile {
    pub key: &'static str,
    /// Alternative keys: the table ids the file transcribes.
    pub aliases: &'static [&'static str],
    pub file_name: &'static str,
    pub contents: &'static str,
}

macro_rules! bundled {
    ($key:literal, [$($alias:literal),*], $file:literal) => {
        BundledFile {
            key: $key,
            aliases: &[$($alias),*],
            file_name: $file,
            contents: include_str!(concat!("../data/", $file)),
        }
    };
}

pub const BUNDLED: &[BundledFile] = &[
    bundled!("resonators_two_qubit", ["tableS1"], "resonators_two_qubit.csv"),
    bundled!("resonators_single_qubit", ["tableS2"], "resonators_single_qubit.csv"),
    bundled!("capacitance_two_qubit", ["tableS3"], "capacitance_two_qubit.json"),
    bundled!("capacitance_single_qubit", ["tableS4"], "capacitance_single_qubit.json"),
    bundled!("couplings", ["tableS5", "tableS6"], "couplings.csv"),
    bundled!("metrology", ["tableS7"], "metrology_modules.csv"),
    bundled!("device_two_qubit", ["tableS8"], "device_two_qubit.json"),
    bundled!("gate_errors", ["tableS9"], "gate_errors_single_qubit.csv"),
    bundled!("device_single_qubit", ["tableS10"], "device_single_qubit.csv"),
    bundled!("rb_expectations", [], "rb_expectations.json"),
    bundled!("materials", [], "materials.json"),
];

/// Looks up a bundled file by key or alias.
pub fn bundled_file(key: &str) -> Result<&'static BundledFile> {
    BUNDLED.iter().find(|f| f.key == key || f.aliases.contains(&key)).ok_or_else(|| {
        let known: Vec<&str> = BUNDLED.iter().map(|f| f.key).collect();
        Error::validation(format!("no bundled dataset `{key}`; known: {}", known.join(", ")))
    })
}

/// `Some(key)` when `source` names a bundled dataset.
pub fn bundled_key(source: &str) -> Option<&str> {
    source.strip_prefix(BUNDLED_PREFIX)
}

/// The `#` comment lines at the head of a CSV file.
pub fn csv_header_notes(contents: &str) -> Vec<String> {
    contents.lines().take_while(|l| l.starts_with('#')).map(|l| l.trim_start_matches('#').trim().to_string()).collect()
}

/// Provenance of a bundled file: the CSV comment header or the JSON
/// `provenance` object.
pub fn provenance(file: &BundledFile) -> serde_json::Value {
    if file.file_name.ends_with(".json") {
        serde_json::from_str::<serde_json::Value>(file.contents)
            .ok()
            .and_then(|v| v.get("provenance").cloned())
            .unwrap_or(serde_json::Value::Null)
    } else {
        serde_json::Value::from(csv_header_notes(file.contents))
    }
}

fn csv_rows<T: for<'de> Deserialize<'de>>(contents: &str) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(contents.as_bytes());
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonatorRow {
    pub resonator: String,
    pub qc_sim: f64,
    pub fr_sim_ghz: f64,
    pub kappa_sim_mhz: f64,
    pub fr_meas_ghz: f64,
    pub kappa_meas_mhz: f64,
}

impl ResonatorRow {
    /// Simulated linewidth fr/Qc in MHz.
    pub fn kappa_from_sim(&self) -> Result<f64> {
        crate::capnet::kappa_from_qc(self.fr_sim_ghz * 1e3, self.qc_sim)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingRow {
    pub qubit: String,
    pub g_qr_sim_mhz: f64,
    pub g_qr_meas_mhz: f64,
    pub g_qc_sim_mhz: Option<f64>,
    pub g_qc_meas_mhz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceStat {
    pub flux: f64,
    pub t1_us: f64,
    pub t1_std_us: f64,
    pub t2_star_us: f64,
    pub t2_star_std_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceQubit {
    pub label: String,
    pub f01_mhz: f64,
    pub alpha_mhz: f64,
    pub ej_over_ec: f64,
    pub ec_mhz: f64,
    pub fr_mhz: f64,
    pub kappa_mhz: f64,
    pub g_qc_mhz: f64,
    pub g_qr_mhz: f64,
    pub coherence: Vec<CoherenceStat>,
    pub tp_xy_us: f64,
    pub tp_read_us: f64,
    pub tp_total_us: f64,
}

impl DeviceQubit {
    pub fn coherence_at(&self, flux: f64) -> Result<&CoherenceStat> {
        self.coherence
            .iter()
            .find(|c| (c.flux - flux).abs() < 1e-9)
            .ok_or_else(|| Error::validation(format!("{} has no coherence entry at flux {flux}", self.label)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceCoupler {
    pub f01_mhz_zero_flux: f64,
    pub bias_flux: f64,
    pub f01_mhz_at_bias: f64,
    pub alpha_mhz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitDevice {
    pub qubits: Vec<DeviceQubit>,
    pub coupler: DeviceCoupler,
    pub d_um: f64,
    pub delta_d_um: f64,
}

impl TwoQubitDevice {
    pub fn qubit(&self, label: &str) -> Result<&DeviceQubit> {
        self.qubits
            .iter()
            .find(|q| q.label == label)
            .ok_or_else(|| Error::validation(format!("device has no qubit `{label}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleQubitRow {
    pub qubit: String,
    pub f01_mhz: f64,
    pub alpha_mhz: f64,
    pub ej_over_ec: f64,
    pub ec_mhz: f64,
    pub fr_mhz: f64,
    pub kappa_mhz: f64,
    pub g_qr_mhz: f64,
    pub t1_us: f64,
    pub t1_std_us: f64,
    pub t2_star_us: f64,
    pub t2_star_std_us: f64,
    pub tp_read_us: f64,
    pub d_um: f64,
    pub delta_d_um: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateErrorRow {
    pub qubit: String,
    pub gate: String,
    pub error_e4: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueSe {
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueStd {
    pub value: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceLimits {
    pub q1: f64,
    pub q2: f64,
    pub mean_1q: f64,
    pub two_qubit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbExpectations {
    pub single_qubit_gate_ns: f64,
    pub cz_gate_ns: f64,
    pub r_1q: BTreeMap<String, ValueSe>,
    pub r_1q_repeated_mean: BTreeMap<String, ValueStd>,
    pub fidelity_1q_repeated_pct: BTreeMap<String, ValueStd>,
    pub r_2q: ValueSe,
    pub r_cz: ValueSe,
    pub r_cz_repeated_mean: ValueStd,
    pub fidelity_cz_repeated_pct: ValueStd,
    pub coherence_limit_pct: CoherenceLimits,
    pub sequences_per_length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Materials {
    pub aluminum_gap_uev: f64,
}

/// Dataset contents by key, starting from the bundled files. Entries can be
/// replaced to run the same checks against edited data.
#[derive(Debug, Clone)]
pub struct Datasets {
    contents: BTreeMap<&'static str, String>,
}

impl Default for Datasets {
    fn default() -> Self {
        Self::bundled()
    }
}

impl Datasets {
    pub fn bundled() -> Self {
        Self { contents: BUNDLED.iter().map(|f| (f.key, f.contents.to_string())).collect() }
    }

    /// Replaces the contents of the dataset named by `key` (or an alias).
    pub fn with_override(mut self, key: &str, contents: impl Into<String>) -> Result<Self> {
        let file = bundled_file(key)?;
        self.contents.insert(file.key, contents.into());
        Ok(self)
    }

    pub fn raw(&self, key: &str) -> Result<&str> {
        let file = bundled_file(key)?;
        Ok(self.contents[file.key].as_str())
    }

    pub fn resonators_two_qubit(&self) -> Result<Vec<ResonatorRow>> {
        csv_rows(self.raw("resonators_two_qubit")?)
    }

    pub fn resonators_single_qubit(&self) -> Result<Vec<ResonatorRow>> {
        csv_rows(self.raw("resonators_single_qubit")?)
    }

    pub fn capacitance_two_qubit(&self) -> Result<CapacitanceRecord> {
        load_capacitance_record(self.raw("capacitance_two_qubit")?)
    }

    pub fn capacitance_single_qubit(&self) -> Result<CapacitanceRecord> {
        load_capacitance_record(self.raw("capacitance_single_qubit")?)
    }

    pub fn couplings(&self) -> Result<Vec<CouplingRow>> {
        csv_rows(self.raw("couplings")?)
    }

    pub fn metrology(&self) -> Result<Vec<ModuleRecord>> {
        load_module_records(self.raw("metrology")?.as_bytes())
    }

    pub fn device_two_qubit(&self) -> Result<TwoQubitDevice> {
        Ok(serde_json::from_str(self.raw("device_two_qubit")?)?)
    }

    pub fn device_single_qubit(&self) -> Result<Vec<SingleQubitRow>> {
        csv_rows(self.raw("device_single_qubit")?)
    }

    pub fn gate_errors(&self) -> Result<Vec<GateErrorRow>> {
        csv_rows(self.raw("gate_errors")?)
    }

    pub fn rb_expectations(&self) -> Result<RbExpectations> {
        Ok(serde_json::from_str(self.raw("rb_expectations")?)?)
    }

    pub fn materials(&self) -> Result<Materials> {
        Ok(serde_json::from_str(self.raw("materials")?)?)
    }
}
