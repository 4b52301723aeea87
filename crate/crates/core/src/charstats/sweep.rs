//! Sensitivity of design quantities to the interchip spacing d: parameters
//! sampled at a few spacings are interpolated piecewise-linearly and the
//! derived quantities are recomputed at each point.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::capnet::{coupling_strength, kappa_from_qc, tp_combined, tp_read, tp_xy};
use crate::error::{Error, Result};
use crate::transmon::{ec_from_capacitance, f01_from_energies};

/// Quantities `derive` may request.
pub const DERIVED: [&str; 7] = ["ec", "f01", "g", "kappa", "tp_xy", "tp_read", "tp_total"];
const DEFAULT_R_E: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSample {
    /// Interchip spacing, μm.
    pub d: f64,
    pub params: BTreeMap<String, f64>,
}

fn default_delta() -> f64 {
    1.0
}

/// Sweep description. Recognized parameter names feed the derived
/// quantities: `c_q`, `c_r`, `c_qr`, `c_xy` (fF), `ej`, `f01`, `fr`, `kappa`
/// (MHz), `qc`, `r_e` (Ω). Other names are interpolated and reported only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub d_target: f64,
    /// Spacing offset for the relative-change report, μm.
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub samples: Vec<SweepSample>,
    #[serde(default)]
    pub derive: Vec<String>,
    #[serde(default)]
    pub allow_extrapolation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeChange {
    pub quantity: String,
    pub at_target: f64,
    pub at_minus: f64,
    pub at_plus: f64,
    /// (value(d_target − δ) − value(d_target))/value(d_target).
    pub rel_minus: f64,
    pub rel_plus: f64,
    pub max_abs_rel: f64,
    pub max_abs_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub d_target: f64,
    pub delta: f64,
    pub points: Vec<f64>,
    /// One column per parameter and derived quantity, aligned with `points`.
    pub curves: BTreeMap<String, Vec<f64>>,
    pub changes: Vec<RelativeChange>,
}

impl SweepSpec {
    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}

/// Piecewise-linear interpolation through (x, y) sorted by x; linear
/// extension of the end segments only when `extrapolate` is set.
fn interpolate(xs: &[f64], ys: &[f64], x: f64, extrapolate: bool, name: &str) -> Result<f64> {
    let n = xs.len();
    let (lo, hi) = (xs[0], xs[n - 1]);
    if (x < lo || x > hi) && !extrapolate {
        return Err(Error::domain(format!("'{name}' sampled on [{lo}, {hi}] um; d = {x} um requires extrapolation")));
    }
    let seg = xs.windows(2).position(|w| x <= w[1]).unwrap_or(n - 2);
    let (x0, x1, y0, y1) = (xs[seg], xs[seg + 1], ys[seg], ys[seg + 1]);
    Ok(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
}

struct Series {
    name: String,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

fn collect_series(spec: &SweepSpec) -> Result<Vec<Series>> {
    let mut by_name: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for s in &spec.samples {
        if !s.d.is_finite() || s.d <= 0.0 {
            return Err(Error::validation(format!("sample spacing must be positive, got {}", s.d)));
        }
        for (k, v) in &s.params {
            if !v.is_finite() {
                return Err(Error::validation(format!("parameter '{k}' at d = {} is not finite", s.d)));
            }
            by_name.entry(k.as_str()).or_default().push((s.d, *v));
        }
    }
    let mut out = Vec::new();
    for (name, mut pts) in by_name {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.len() < 2 {
            return Err(Error::validation(format!("parameter '{name}' needs at least 2 sample points")));
        }
        if pts.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::validation(format!("parameter '{name}' sampled twice at the same spacing")));
        }
        let (xs, ys) = pts.into_iter().unzip();
        out.push(Series { name: name.to_string(), xs, ys });
    }
    if out.is_empty() {
        return Err(Error::validation("sweep has no sampled parameters"));
    }
    Ok(out)
}

/// Derived quantities at one spacing, from the interpolated parameters.
fn derive_at(params: &BTreeMap<String, f64>, wanted: &[String]) -> Result<BTreeMap<String, f64>> {
    let p = |k: &str| params.get(k).copied();
    let mut v: BTreeMap<&str, f64> = BTreeMap::new();
    if let Some(c_q) = p("c_q") {
        v.insert("ec", ec_from_capacitance(c_q)?);
    }
    let f01 = match (p("f01"), v.get("ec"), p("ej")) {
        (Some(f), _, _) => Some(f),
        (None, Some(&ec), Some(ej)) => Some(f01_from_energies(ec, ej)?),
        _ => None,
    };
    if let Some(f) = f01 {
        v.insert("f01", f);
    }
    if let (Some(f01), Some(fr), Some(c_qr), Some(c_q), Some(c_r)) = (f01, p("fr"), p("c_qr"), p("c_q"), p("c_r")) {
        v.insert("g", coupling_strength(f01, fr, c_qr, c_q, c_r)?);
    }
    let kappa = match (p("kappa"), p("fr"), p("qc")) {
        (Some(k), _, _) => Some(k),
        (None, Some(fr), Some(qc)) => Some(kappa_from_qc(fr, qc)?),
        _ => None,
    };
    if let Some(k) = kappa {
        v.insert("kappa", k);
    }
    let wants = |q: &str| wanted.iter().any(|w| w == q);
    if wants("tp_xy") || wants("tp_total") {
        if let (Some(c_q), Some(c_xy), Some(f01)) = (p("c_q"), p("c_xy"), f01) {
            v.insert("tp_xy", tp_xy(c_q, c_xy, f01, p("r_e").unwrap_or(DEFAULT_R_E))?);
        }
    }
    if wants("tp_read") || wants("tp_total") {
        if let (Some(k), Some(&g), Some(f01), Some(fr)) = (kappa, v.get("g"), f01, p("fr")) {
            v.insert("tp_read", tp_read(k, g, f01 - fr)?);
        }
    }
    if wants("tp_total") {
        if let (Some(&r), Some(&x)) = (v.get("tp_read"), v.get("tp_xy")) {
            v.insert("tp_total", tp_combined(r, x)?.tp_total);
        }
    }
    let mut out = BTreeMap::new();
    for q in wanted {
        let val = v
            .get(q.as_str())
            .ok_or_else(|| Error::validation(format!("derived quantity '{q}' lacks the parameters it needs")))?;
        out.insert(q.clone(), *val);
    }
    Ok(out)
}

/// Runs the sweep and the relative-change report around `d_target`.
pub fn spacing_sweep(spec: &SweepSpec) -> Result<SweepReport> {
    if !(spec.d_target.is_finite() && spec.d_target > 0.0 && spec.delta.is_finite() && spec.delta > 0.0) {
        return Err(Error::validation("d_target and delta must be positive"));
    }
    if spec.delta >= spec.d_target {
        return Err(Error::validation("delta must be smaller than d_target"));
    }
    if let Some(q) = spec.derive.iter().find(|q| !DERIVED.contains(&q.as_str())) {
        return Err(Error::validation(format!("unknown derived quantity '{q}'; known: {}", DERIVED.join(", "))));
    }
    let series = collect_series(spec)?;
    if let Some(q) = spec.derive.iter().find(|q| series.iter().any(|s| &s.name == *q)) {
        return Err(Error::validation(format!("'{q}' is both sampled and derived")));
    }

    let mut points: Vec<f64> = spec.samples.iter().map(|s| s.d).collect();
    points.extend([spec.d_target - spec.delta, spec.d_target, spec.d_target + spec.delta]);
    points.sort_by(f64::total_cmp);
    points.dedup();

    let mut curves: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for &d in &points {
        let mut params = BTreeMap::new();
        for s in &series {
            params.insert(s.name.clone(), interpolate(&s.xs, &s.ys, d, spec.allow_extrapolation, &s.name)?);
        }
        let derived = derive_at(&params, &spec.derive)?;
        for (k, v) in params.into_iter().chain(derived) {
            curves.entry(k).or_default().push(v);
        }
    }

    let at = |d: f64| points.iter().position(|&x| x == d).expect("point inserted above");
    let (i_m, i_t, i_p) = (at(spec.d_target - spec.delta), at(spec.d_target), at(spec.d_target + spec.delta));
    let changes = curves
        .iter()
        .map(|(q, ys)| {
            let (m, t, p) = (ys[i_m], ys[i_t], ys[i_p]);
            let (rel_minus, rel_plus) = ((m - t) / t, (p - t) / t);
            RelativeChange {
                quantity: q.clone(),
                at_target: t,
                at_minus: m,
                at_plus: p,
                rel_minus,
                rel_plus,
                max_abs_rel: rel_minus.abs().max(rel_plus.abs()),
                max_abs_change: (m - t).abs().max((p - t).abs()),
            }
        })
        .collect();
    Ok(SweepReport { d_target: spec.d_target, delta: spec.delta, points, curves, changes })
}

impl SweepReport {
    pub fn change(&self, quantity: &str) -> Option<&RelativeChange> {
        self.changes.iter().find(|c| c.quantity == quantity)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("d");
        for k in self.curves.keys() {
            out.push(',');
            out.push_str(k);
        }
        out.push('\n');
        for (i, d) in self.points.iter().enumerate() {
            out.push_str(&d.to_string());
            for ys in self.curves.values() {
                out.push_str(&format!(",{}", ys[i]));
            }
            out.push('\n');
        }
        out
    }
}
