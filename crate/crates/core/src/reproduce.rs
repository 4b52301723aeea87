//! Reproduction of the published device numbers from the bundled datasets.
//! Each check is a single library evaluation compared with a tabulated
//! value under an explicit tolerance.

use serde::{Deserialize, Serialize};

use crate::capnet::{tp_combined, tp_read, tp_xy};
use crate::charstats::{
    frequency_sensitivity, module_geometry, population_stats, Combination, CornerMeasurements, ExclusionPolicy,
    GeometrySource, SensitivityInput,
};
use crate::datasets::Datasets;
use crate::error::Result;
use crate::rb::{coherence_limit, interleaved_error, p_from_error, CoherenceRecord};
use crate::spectrum::{avoided_crossing, flux_sweep, linspace, CouplingDef, ModeDef, SystemDef};
use crate::transmon::{ej_from_junction, f01_from_energies};

/// Characteristic impedance assumed for the XY line.
pub const XY_LINE_IMPEDANCE_OHM: f64 = 50.0;
/// Coupler flux bias at which gates were characterized.
pub const GATE_BIAS_FLUX: f64 = 0.34;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub group: String,
    pub name: String,
    pub expected: f64,
    pub actual: f64,
    /// Absolute tolerance in the unit of `expected`.
    pub tolerance: f64,
    pub unit: String,
    pub pass: bool,
}

struct Checks {
    rows: Vec<CheckRow>,
    filter: Option<String>,
}

impl Checks {
    fn wants(&self, group: &str) -> bool {
        self.filter.as_deref().is_none_or(|f| group.contains(f))
    }

    fn push(&mut self, group: &str, name: String, expected: f64, actual: f64, tolerance: f64, unit: &str) {
        // a small slack absorbs binary rounding of printed decimals
        let pass = (actual - expected).abs() <= tolerance * (1.0 + 1e-9);
        self.rows.push(CheckRow { group: group.into(), name, expected, actual, tolerance, unit: unit.into(), pass });
    }

    fn push_rel(&mut self, group: &str, name: String, expected: f64, actual: f64, rel: f64, unit: &str) {
        self.push(group, name, expected, actual, rel * expected.abs(), unit);
    }
}

/// Runs every check whose group contains `filter` (all when `None`).
pub fn run_checks(ds: &Datasets, filter: Option<&str>) -> Result<Vec<CheckRow>> {
    let mut c = Checks { rows: Vec::new(), filter: filter.map(str::to_string) };
    if c.wants("purcell") {
        purcell(ds, &mut c)?;
    }
    if c.wants("kappa") {
        kappa(ds, &mut c)?;
    }
    if c.wants("coupling") {
        coupling(ds, &mut c)?;
    }
    if c.wants("fidelity") {
        fidelity(ds, &mut c)?;
    }
    if c.wants("sensitivity") {
        sensitivity(&mut c)?;
    }
    if c.wants("metrology") {
        metrology(ds, &mut c)?;
    }
    if c.wants("junction") {
        junction(ds, &mut c)?;
    }
    if c.wants("rb") {
        rb(ds, &mut c)?;
    }
    if c.wants("spectrum") {
        spectrum(ds, &mut c)?;
    }
    Ok(c.rows)
}

fn purcell(ds: &Datasets, c: &mut Checks) -> Result<()> {
    let caps = ds.capacitance_two_qubit()?;
    let dev = ds.device_two_qubit()?;
    for (q, xy) in [("q1", "xy1"), ("q2", "xy2")] {
        let p = dev.qubit(q)?;
        let xy_t = tp_xy(caps.self_capacitance(q)?, caps.mutual(q, xy)?, p.f01_mhz, XY_LINE_IMPEDANCE_OHM)?;
        let read_t = tp_read(p.kappa_mhz, p.g_qr_mhz, p.f01_mhz - p.fr_mhz)?;
        let total = tp_combined(read_t, xy_t)?.tp_total;
        c.push_rel("purcell", format!("{q} Tp(XY)"), p.tp_xy_us, xy_t, 0.02, "us");
        c.push_rel("purcell", format!("{q} Tp(read)"), p.tp_read_us, read_t, 0.02, "us");
        c.push_rel("purcell", format!("{q} Tp(read+XY)"), p.tp_total_us, total, 0.02, "us");
    }
    for row in ds.device_single_qubit()? {
        let t = tp_read(row.kappa_mhz, row.g_qr_mhz, row.f01_mhz - row.fr_mhz)?;
        c.push_rel("purcell", format!("{} Tp(read)", row.qubit), row.tp_read_us, t, 0.02, "us");
    }
    Ok(())
}

fn kappa(ds: &Datasets, c: &mut Checks) -> Result<()> {
    for row in ds.resonators_two_qubit()?.into_iter().chain(ds.resonators_single_qubit()?) {
        let k = row.kappa_from_sim()?;
        // printed to two decimals
        c.push("kappa", format!("{} kappa/2pi = fr/Qc", row.resonator), row.kappa_sim_mhz, k, 0.005, "MHz");
    }
    Ok(())
}

fn coupling(ds: &Datasets, c: &mut Checks) -> Result<()> {
    let rows = ds.couplings()?;
    let sim = |q: &str| rows.iter().find(|r| r.qubit == q).map(|r| r.g_qr_sim_mhz);
    let caps = ds.capacitance_two_qubit()?;
    let dev = ds.device_two_qubit()?;
    for (q, r) in [("q1", "r1"), ("q2", "r2")] {
        let p = dev.qubit(q)?;
        let g = caps.coupling_between(q, p.f01_mhz, r, p.fr_mhz)?;
        if let Some(expected) = sim(q) {
            c.push_rel("coupling", format!("{q}-{r} g"), expected, g, 0.05, "MHz");
        }
    }
    let caps = ds.capacitance_single_qubit()?;
    for row in ds.device_single_qubit()? {
        let r = row.qubit.replace('q', "r");
        let g = caps.coupling_between(&row.qubit, row.f01_mhz, &r, row.fr_mhz)?;
        if let Some(expected) = sim(&row.qubit) {
            c.push_rel("coupling", format!("{}-{r} g", row.qubit), expected, g, 0.05, "MHz");
        }
    }
    Ok(())
}

fn fidelity(ds: &Datasets, c: &mut Checks) -> Result<()> {
    let dev = ds.device_two_qubit()?;
    let exp = ds.rb_expectations()?;
    let rec = |q: &str| -> Result<CoherenceRecord> {
        let s = dev.qubit(q)?.coherence_at(GATE_BIAS_FLUX)?;
        CoherenceRecord::new(s.t1_us, s.t2_star_us)
    };
    let (r1, r2) = (rec("q1")?, rec("q2")?);
    let f1 = 100.0 * coherence_limit(1, exp.single_qubit_gate_ns, &[r1])?;
    let f2 = 100.0 * coherence_limit(1, exp.single_qubit_gate_ns, &[r2])?;
    let f2q = 100.0 * coherence_limit(2, exp.cz_gate_ns, &[r1, r2])?;
    let lim = &exp.coherence_limit_pct;
    c.push("fidelity", "q1 coherence-limited 1Q fidelity".into(), lim.q1, f1, 0.001, "%");
    c.push("fidelity", "q2 coherence-limited 1Q fidelity".into(), lim.q2, f2, 0.001, "%");
    c.push("fidelity", "mean coherence-limited 1Q fidelity".into(), lim.mean_1q, 0.5 * (f1 + f2), 0.01, "%");
    c.push("fidelity", "coherence-limited 2Q fidelity".into(), lim.two_qubit, f2q, 0.01, "%");
    Ok(())
}

/// Worst-case |Δf01/f01| over the four sign combinations of exact
/// recomputation.
pub fn brute_force_sensitivity(s: &SensitivityInput) -> Result<f64> {
    let f0 = f01_from_energies(s.ec, s.ej)?;
    let mut worst: f64 = 0.0;
    for sec in [-1.0, 1.0] {
        for sej in [-1.0, 1.0] {
            let f = f01_from_energies(s.ec * (1.0 + sec * s.rel_dec), s.ej * (1.0 + sej * s.rel_dej))?;
            worst = worst.max(((f - f0) / f0).abs());
        }
    }
    Ok(worst)
}

fn sensitivity(c: &mut Checks) -> Result<()> {
    let input = SensitivityInput { ec: 200.0, ej: 11000.0, rel_dec: 0.026, rel_dej: 0.055 };
    let s = frequency_sensitivity(&input, Combination::WorstCase)?;
    c.push("sensitivity", "df01/f01 for 2.6% EC, 5.5% EJ".into(), 4.1, 100.0 * s.total, 0.1, "%");
    let brute = brute_force_sensitivity(&input)?;
    c.push("sensitivity", "exact worst case vs linearized".into(), 100.0 * s.total, 100.0 * brute, 0.2, "%");
    Ok(())
}

fn metrology(ds: &Datasets, c: &mut Checks) -> Result<()> {
    let recs = ds.metrology()?;
    if let Some(r) = recs.iter().find(|r| r.corners.run == "FC2" && r.corners.module == "CQ1") {
        let g = module_geometry(&CornerMeasurements { ..r.corners.clone() })?;
        c.push("metrology", "FC2 CQ1 d".into(), r.tabulated.d, g.d, 0.005, "um");
        c.push("metrology", "FC2 CQ1 delta d".into(), r.tabulated.delta_d, g.delta_d, 0.005, "um");
        c.push("metrology", "FC2 CQ1 delta theta".into(), r.tabulated.delta_theta, g.delta_theta, 0.5, "urad");
    }
    let policy = ExclusionPolicy { use_record_flags: true, ..Default::default() };
    let s = population_stats(&recs, &policy, GeometrySource::Tabulated)?;
    c.push("metrology", "included modules".into(), 17.0, s.included.len() as f64, 0.0, "");
    c.push("metrology", "mean d".into(), 7.8, s.d.mean, 0.05, "um");
    c.push("metrology", "std d".into(), 0.8, s.d.std, 0.05, "um");
    c.push("metrology", "mean delta d".into(), 1.7, s.delta_d.mean, 0.05, "um");
    c.push("metrology", "std delta d".into(), 1.0, s.delta_d.std, 0.05, "um");
    c.push("metrology", "mean delta theta".into(), 126.0, s.delta_theta.mean, 0.5, "urad");
    c.push("metrology", "std delta theta".into(), 76.0, s.delta_theta.std, 0.5, "urad");
    Ok(())
}

fn junction(ds: &Datasets, c: &mut Checks) -> Result<()> {
    let gap = ds.materials()?.aluminum_gap_uev;
    let (ej, _) = ej_from_junction(12500.0, gap)?;
    c.push_rel("junction", "EJ/h for RN = 12.5 kOhm".into(), 11000.0, ej, 0.03, "MHz");
    Ok(())
}

fn rb(ds: &Datasets, c: &mut Checks) -> Result<()> {
    let exp = ds.rb_expectations()?;
    let p_ref = p_from_error(exp.r_2q.value, 4)?;
    let p_int = p_ref * (1.0 - 4.0 / 3.0 * exp.r_cz.value);
    let r = interleaved_error(p_ref, p_int, 4)?;
    c.push("rb", "CZ error from interleaved decay ratio".into(), exp.r_cz.value, r, 1e-12, "");
    for (q, f) in &exp.fidelity_1q_repeated_pct {
        if let Some(rq) = exp.r_1q_repeated_mean.get(q) {
            c.push("rb", format!("{q} repeated-run 1Q fidelity"), f.value, 100.0 * (1.0 - rq.value), 0.0005, "%");
        }
    }
    c.push(
        "rb",
        "repeated-run CZ fidelity".into(),
        exp.fidelity_cz_repeated_pct.value,
        100.0 * (1.0 - exp.r_cz_repeated_mean.value),
        0.005,
        "%",
    );
    Ok(())
}

/// Lowest single-excitation avoided crossing between a qubit and the
/// coupler swept through it.
pub fn qubit_coupler_gap(
    f01: f64,
    alpha: f64,
    g: f64,
    fc0: f64,
    alpha_c: f64,
    flux_grid: &[f64],
) -> Result<(f64, f64)> {
    let sys = SystemDef {
        modes: vec![ModeDef::new("q", f01, alpha, 4), ModeDef::new("c", fc0, alpha_c, 4)],
        couplings: vec![CouplingDef { a: "q".into(), b: "c".into(), g }],
    };
    let curve = flux_sweep(&sys, "c", fc0, flux_grid, 3)?;
    let x = avoided_crossing(&curve, 1, 2)?;
    Ok((x.min_gap, x.at))
}

fn spectrum(ds: &Datasets, c: &mut Checks) -> Result<()> {
    let dev = ds.device_two_qubit()?;
    let grid = linspace(0.30, 0.45, 301)?;
    for q in ["q1", "q2"] {
        let p = dev.qubit(q)?;
        let (gap, _) = qubit_coupler_gap(
            p.f01_mhz,
            p.alpha_mhz,
            p.g_qc_mhz,
            dev.coupler.f01_mhz_zero_flux,
            dev.coupler.alpha_mhz,
            &grid,
        )?;
        c.push("spectrum", format!("{q}-coupler minimum gap (2g)"), 2.0 * p.g_qc_mhz, gap, 1.0, "MHz");
    }
    Ok(())
}

/// Fixed-width table with one row per check.
pub fn format_table(rows: &[CheckRow]) -> String {
    let mut out = format!(
        "{:<12} {:<40} {:>14} {:>14} {:>12} {:<5} {}\n",
        "group", "check", "expected", "actual", "tolerance", "unit", "result"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<12} {:<40} {:>14.6} {:>14.6} {:>12.3e} {:<5} {}\n",
            r.group,
            r.name,
            r.expected,
            r.actual,
            r.tolerance,
            r.unit,
            if r.pass { "PASS" } else { "FAIL" }
        ));
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    out.push_str(&format!("{} checks, {} passed, {} failed\n", rows.len(), rows.len() - failed, failed));
    out
}
