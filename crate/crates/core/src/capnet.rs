//! Capacitance-network records and the lumped-element quantities derived
//! from them: coupling strengths, XY-line coupling Q, Purcell lifetimes and
//! resonator linewidths.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{angular_from_mhz, lifetime_us_from_rate, FEMTOFARAD};
use crate::error::{require_positive, Error, Result};

/// Asymmetries below this (fF) are averaged away on load.
pub const SYMMETRIZE_TOL_FF: f64 = 1e-6;

/// How a node's self-capacitance maps to its effective mode capacitance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    #[default]
    Lumped,
    /// λ/4 transmission-line resonator whose raw electrostatic
    /// self-capacitance still needs the 2/π field-distribution factor.
    QuarterWave,
}

impl std::str::FromStr for ModeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lumped" => Ok(ModeKind::Lumped),
            "quarter_wave" | "quarter-wave" => Ok(ModeKind::QuarterWave),
            other => Err(Error::Parse(format!("unknown mode kind `{other}`"))),
        }
    }
}

/// On-disk layout of a capacitance record. `null` marks an element the
/// source did not report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapacitanceDocument {
    pub labels: Vec<String>,
    #[serde(default = "default_unit")]
    pub unit: String,
    pub spacing_um: Option<f64>,
    #[serde(default)]
    pub kinds: BTreeMap<String, ModeKind>,
    pub matrix: Vec<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

fn default_unit() -> String {
    "fF".to_string()
}

/// Validated symmetric capacitance matrix in fF.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacitanceRecord {
    labels: Vec<String>,
    values: Vec<Vec<Option<f64>>>,
    spacing_um: Option<f64>,
    kinds: Vec<ModeKind>,
}

/// Mode frequency together with its effective capacitance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub label: String,
    pub frequency: f64,
    pub c_eff: f64,
}

/// Purcell-limited lifetimes in μs; any of them may be +∞.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PurcellBudget {
    #[serde(with = "crate::serde_inf")]
    pub tp_read: f64,
    #[serde(with = "crate::serde_inf")]
    pub tp_xy: f64,
    #[serde(with = "crate::serde_inf")]
    pub tp_total: f64,
}

/// Parses and validates a JSON capacitance document.
pub fn load_capacitance_record(json: &str) -> Result<CapacitanceRecord> {
    let doc: CapacitanceDocument = serde_json::from_str(json)?;
    CapacitanceRecord::from_document(doc)
}

impl CapacitanceRecord {
    pub fn from_document(doc: CapacitanceDocument) -> Result<Self> {
        let scale = match doc.unit.as_str() {
            "fF" => 1.0,
            "pF" => 1e3,
            "aF" => 1e-3,
            other => return Err(Error::validation(format!("unsupported capacitance unit `{other}`"))),
        };
        let n = doc.labels.len();
        if n == 0 {
            return Err(Error::validation("capacitance record has no labels"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for l in &doc.labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::validation(format!("duplicate label `{l}`")));
            }
        }
        if doc.matrix.len() != n || doc.matrix.iter().any(|row| row.len() != n) {
            return Err(Error::validation(format!("matrix must be {n}x{n} to match the labels")));
        }
        for k in doc.kinds.keys() {
            if !seen.contains(k.as_str()) {
                return Err(Error::validation(format!("kind given for unknown label `{k}`")));
            }
        }
        if let Some(s) = doc.spacing_um {
            require_positive("spacing_um", s).map_err(|e| Error::validation(e.to_string()))?;
        }

        let mut values: Vec<Vec<Option<f64>>> =
            doc.matrix.iter().map(|row| row.iter().map(|v| v.map(|x| x * scale)).collect()).collect();

        for (i, label) in doc.labels.iter().enumerate() {
            if let Some(c) = values[i][i] {
                if !(c.is_finite() && c > 0.0) {
                    return Err(Error::validation(format!("self-capacitance of `{label}` must be positive, got {c}")));
                }
            }
        }
        // both triangles are visited, so index loops read clearer here
        #[allow(clippy::needless_range_loop)]
        for i in 0..n {
            for j in (i + 1)..n {
                match (values[i][j], values[j][i]) {
                    (Some(a), Some(b)) => {
                        if !(a.is_finite() && b.is_finite()) || a < 0.0 || b < 0.0 {
                            return Err(Error::validation(format!(
                                "mutual capacitance {}-{} must be finite and non-negative",
                                doc.labels[i], doc.labels[j]
                            )));
                        }
                        let asym = (a - b).abs();
                        if asym >= SYMMETRIZE_TOL_FF {
                            return Err(Error::validation(format!(
                                "matrix asymmetric at {}-{}: {a} vs {b} fF",
                                doc.labels[i], doc.labels[j]
                            )));
                        }
                        let m = 0.5 * (a + b);
                        values[i][j] = Some(m);
                        values[j][i] = Some(m);
                    }
                    (None, None) => {}
                    _ => {
                        return Err(Error::validation(format!(
                            "element {}-{} reported on one side of the diagonal only",
                            doc.labels[i], doc.labels[j]
                        )))
                    }
                }
            }
        }

        let kinds = doc.labels.iter().map(|l| doc.kinds.get(l).copied().unwrap_or_default()).collect();
        Ok(Self { labels: doc.labels, values, spacing_um: doc.spacing_um, kinds })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn spacing_um(&self) -> Option<f64> {
        self.spacing_um
    }

    fn index(&self, label: &str) -> Result<usize> {
        self.labels.iter().position(|l| l == label).ok_or_else(|| Error::validation(format!("unknown node `{label}`")))
    }

    pub fn kind(&self, label: &str) -> Result<ModeKind> {
        Ok(self.kinds[self.index(label)?])
    }

    /// Matrix element in fF, or `None` when the source did not report it.
    pub fn get(&self, a: &str, b: &str) -> Result<Option<f64>> {
        let (i, j) = (self.index(a)?, self.index(b)?);
        Ok(self.values[i][j])
    }

    fn require(&self, a: &str, b: &str) -> Result<f64> {
        self.get(a, b)?.ok_or_else(|| Error::validation(format!("capacitance {a}-{b} not reported")))
    }

    pub fn self_capacitance(&self, label: &str) -> Result<f64> {
        self.require(label, label)
    }

    pub fn mutual(&self, a: &str, b: &str) -> Result<f64> {
        if a == b {
            return Err(Error::validation("mutual capacitance needs two distinct nodes"));
        }
        self.require(a, b)
    }

    /// Self-capacitance with the node's mode-kind correction applied.
    pub fn effective(&self, label: &str) -> Result<f64> {
        effective_capacitance(self.self_capacitance(label)?, self.kind(label)?)
    }

    pub fn mode_summary(&self, label: &str, frequency: f64) -> Result<ModeSummary> {
        require_positive("mode frequency", frequency)?;
        Ok(ModeSummary { label: label.to_string(), frequency, c_eff: self.effective(label)? })
    }

    /// Coupling strength between two nodes for caller-chosen mode frequencies.
    pub fn coupling_between(&self, a: &str, fa: f64, b: &str, fb: f64) -> Result<f64> {
        coupling_strength(fa, fb, self.mutual(a, b)?, self.effective(a)?, self.effective(b)?)
    }

    /// Back to the serializable layout (unit fF).
    pub fn to_document(&self) -> CapacitanceDocument {
        CapacitanceDocument {
            labels: self.labels.clone(),
            unit: default_unit(),
            spacing_um: self.spacing_um,
            kinds: self.labels.iter().cloned().zip(self.kinds.iter().copied()).collect(),
            matrix: self.values.clone(),
            provenance: None,
        }
    }
}

/// Effective mode capacitance: identity for lumped nodes, 2/π for a raw
/// λ/4 resonator capacitance.
pub fn effective_capacitance(c_self_ff: f64, kind: ModeKind) -> Result<f64> {
    require_positive("self-capacitance", c_self_ff)?;
    Ok(match kind {
        ModeKind::Lumped => c_self_ff,
        ModeKind::QuarterWave => c_self_ff * 2.0 / PI,
    })
}

/// g = (√(f1 f2)/2) · C12/√(C1 C2), in MHz.
pub fn coupling_strength(f1: f64, f2: f64, c12_ff: f64, c1_ff: f64, c2_ff: f64) -> Result<f64> {
    require_positive("f1", f1)?;
    require_positive("f2", f2)?;
    require_positive("C1", c1_ff)?;
    require_positive("C2", c2_ff)?;
    if !(c12_ff.is_finite() && c12_ff >= 0.0) {
        return Err(Error::domain(format!("coupling capacitance must be non-negative, got {c12_ff}")));
    }
    Ok(0.5 * (f1 * f2).sqrt() * c12_ff / (c1_ff * c2_ff).sqrt())
}

fn check_xy_inputs(c_self_ff: f64, c_xy_ff: f64, f01: f64, r_e: f64) -> Result<()> {
    require_positive("qubit self-capacitance", c_self_ff)?;
    require_positive("f01", f01)?;
    require_positive("load resistance", r_e)?;
    if !(c_xy_ff.is_finite() && c_xy_ff >= 0.0) {
        return Err(Error::domain(format!("XY coupling capacitance must be non-negative, got {c_xy_ff}")));
    }
    Ok(())
}

/// Coupling quality factor to the XY line, C_self / (ω01 C_xy² R_e).
pub fn qc_xy(c_self_ff: f64, c_xy_ff: f64, f01: f64, r_e: f64) -> Result<f64> {
    check_xy_inputs(c_self_ff, c_xy_ff, f01, r_e)?;
    if c_xy_ff == 0.0 {
        return Ok(f64::INFINITY);
    }
    let w = angular_from_mhz(f01);
    let c_xy = c_xy_ff * FEMTOFARAD;
    Ok(c_self_ff * FEMTOFARAD / (w * c_xy * c_xy * r_e))
}

/// Purcell lifetime (μs) from decay into the XY line, Q_c(XY)/ω01.
pub fn tp_xy(c_self_ff: f64, c_xy_ff: f64, f01: f64, r_e: f64) -> Result<f64> {
    check_xy_inputs(c_self_ff, c_xy_ff, f01, r_e)?;
    let w = angular_from_mhz(f01);
    let c_xy = c_xy_ff * FEMTOFARAD;
    let rate = r_e * (w * c_xy).powi(2) / (c_self_ff * FEMTOFARAD);
    Ok(lifetime_us_from_rate(rate))
}

/// Purcell lifetime (μs) from decay through the readout resonator,
/// 1/T = κ (g/Δ)² with κ = 2π·`kappa_over_2pi`.
pub fn tp_read(kappa_over_2pi: f64, g: f64, detuning: f64) -> Result<f64> {
    require_positive("resonator linewidth", kappa_over_2pi)?;
    if !(g.is_finite() && g >= 0.0) {
        return Err(Error::domain(format!("coupling strength must be non-negative, got {g}")));
    }
    if !detuning.is_finite() {
        return Err(Error::domain("detuning must be finite"));
    }
    if detuning == 0.0 {
        return Err(Error::Resonance("qubit-resonator detuning is zero; dispersive Purcell formula is invalid".into()));
    }
    let rate = angular_from_mhz(kappa_over_2pi) * (g / detuning).powi(2);
    Ok(lifetime_us_from_rate(rate))
}

/// Harmonic combination of the readout and XY channels.
pub fn tp_combined(tp_read: f64, tp_xy: f64) -> Result<PurcellBudget> {
    for (name, t) in [("tp_read", tp_read), ("tp_xy", tp_xy)] {
        if t.is_nan() || t <= 0.0 {
            return Err(Error::domain(format!("{name} must be positive or +inf, got {t}")));
        }
    }
    let rate = 1.0 / tp_read + 1.0 / tp_xy;
    let tp_total = if rate == 0.0 { f64::INFINITY } else { 1.0 / rate };
    Ok(PurcellBudget { tp_read, tp_xy, tp_total })
}

/// Resonator linewidth κ/2π = f_r/Q_c, in MHz.
pub fn kappa_from_qc(fr: f64, qc: f64) -> Result<f64> {
    require_positive("resonator frequency", fr)?;
    if qc.is_nan() || qc <= 0.0 {
        return Err(Error::domain(format!("coupling Q must be positive, got {qc}")));
    }
    Ok(fr / qc)
}
