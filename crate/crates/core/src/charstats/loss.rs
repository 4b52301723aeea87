//! Participation-weighted dielectric loss budget: 1/Q = Σ p_i tanδ_i.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossDomain {
    pub name: String,
    /// Fraction of the mode's electric energy stored in this domain.
    pub p: f64,
    pub tan_delta: f64,
}

impl LossDomain {
    pub fn new(name: &str, p: f64, tan_delta: f64) -> Self {
        Self { name: name.into(), p, tan_delta }
    }
}

/// p_i = w_i / Σw from raw stored energies.
pub fn participation_normalize(raw: &[(String, f64)]) -> Result<Vec<(String, f64)>> {
    if let Some((n, w)) = raw.iter().find(|(_, w)| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::domain(format!("energy of '{n}' must be non-negative, got {w}")));
    }
    let total: f64 = raw.iter().map(|(_, w)| w).sum();
    if !(total > 0.0) {
        return Err(Error::domain("total stored energy must be positive"));
    }
    Ok(raw.iter().map(|(n, w)| (n.clone(), w / total)).collect())
}

/// Equivalent quality factor; +∞ for a lossless budget.
pub fn loss_q(domains: &[LossDomain]) -> Result<f64> {
    if domains.is_empty() {
        return Err(Error::validation("loss budget needs at least one domain"));
    }
    for d in domains {
        if !(d.p.is_finite() && d.p >= 0.0 && d.tan_delta.is_finite() && d.tan_delta >= 0.0) {
            return Err(Error::domain(format!(
                "domain '{}' needs p >= 0 and tan_delta >= 0, got ({}, {})",
                d.name, d.p, d.tan_delta
            )));
        }
    }
    let inv: f64 = domains.iter().map(|d| d.p * d.tan_delta).sum();
    Ok(if inv == 0.0 { f64::INFINITY } else { 1.0 / inv })
}

/// One entry of a loss-budget file: either a participation `p` or a raw
/// energy `raw_w`, used consistently across the file.
#[derive(Debug, Clone, Deserialize)]
pub struct LossEntry {
    pub name: String,
    pub p: Option<f64>,
    pub raw_w: Option<f64>,
    pub tan_delta: f64,
}

/// Parses a JSON list of loss entries into domains, normalizing raw energies.
pub fn load_loss_budget(json: &str) -> Result<Vec<LossDomain>> {
    let entries: Vec<LossEntry> = serde_json::from_str(json)?;
    if entries.is_empty() {
        return Err(Error::validation("loss budget needs at least one domain"));
    }
    let all_p = entries.iter().all(|e| e.p.is_some() && e.raw_w.is_none());
    let all_w = entries.iter().all(|e| e.raw_w.is_some() && e.p.is_none());
    if all_p {
        Ok(entries
            .into_iter()
            .map(|e| LossDomain { name: e.name, p: e.p.unwrap_or_default(), tan_delta: e.tan_delta })
            .collect())
    } else if all_w {
        let raw: Vec<(String, f64)> = entries.iter().map(|e| (e.name.clone(), e.raw_w.unwrap_or_default())).collect();
        let p = participation_normalize(&raw)?;
        Ok(entries
            .into_iter()
            .zip(p)
            .map(|(e, (_, p))| LossDomain { name: e.name, p, tan_delta: e.tan_delta })
            .collect())
    } else {
        Err(Error::validation("every entry must give exactly one of p or raw_w, the same one throughout"))
    }
}
