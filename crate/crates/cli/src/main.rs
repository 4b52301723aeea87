//! `flipchip` command-line front end. Every number in a report comes from a
//! single call into `flipchip-core`; this layer only parses, loads and
//! renders.

mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use flipchip_core::capnet::{
    coupling_strength, kappa_from_qc, load_capacitance_record, qc_xy, tp_combined, tp_read, tp_xy,
};
use flipchip_core::charstats::{
    frequency_sensitivity, load_loss_budget, load_module_records, loss_q, population_stats, spacing_sweep, Combination,
    ExclusionPolicy, GeometrySource, SensitivityInput, SweepSpec,
};
use flipchip_core::datasets::{Datasets, Materials, ResonatorRow, TwoQubitDevice};
use flipchip_core::rb::{
    coherence_limit, fit_reference, interleaved_error, interleaved_from_fits, synth_dataset, CoherenceRecord, RBDataset,
};
use flipchip_core::reproduce::{format_table, run_checks};
use flipchip_core::resonfit::{fit_trace, NotchParams, S21Trace};
use flipchip_core::spectrum::{avoided_crossing, flux_sweep, linspace, SystemDef};
use flipchip_core::transmon::{coupler_frequency, ec_from_capacitance, JunctionParams, TransmonParams};
use flipchip_core::{Error, Result};
use serde_json::{json, Value};

use report::{load, write_output, Format, Report};

const EXIT_CHECKS_FAILED: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "flipchip", version, about = "Design and characterization calculations for flip-chip qubit devices")]
struct Cli {
    /// Report format; reproduce-paper defaults to a table, everything else to JSON.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Transmon energies and frequencies, optionally a SQUID coupler frequency.
    Transmon(TransmonArgs),
    /// Critical current and E_J from normal-state resistance.
    Junction(JunctionArgs),
    /// Capacitive coupling strength between two modes.
    Coupling(CouplingArgs),
    /// Purcell-limited lifetimes through the readout resonator and XY line.
    Purcell(PurcellArgs),
    /// Resonator linewidth fr/Qc, for one resonator or a resonator table.
    Kappa(KappaArgs),
    /// Coupler flux sweep of the lowest levels and an optional avoided crossing.
    SpectrumSweep(SpectrumArgs),
    /// Notch-type resonator circle fit of a complex S21 trace.
    S21Fit(S21Args),
    /// Randomized-benchmarking decay fit.
    RbFit(RbFitArgs),
    /// Gate error from reference and interleaved decays.
    RbInterleaved(InterleavedArgs),
    /// Coherence-limited gate fidelity.
    CoherenceLimit(CoherenceArgs),
    /// Interchip spacing and tilt statistics over flip-chip modules.
    Metrology(MetrologyArgs),
    /// Quality factor from a participation-weighted loss budget.
    LossQ(LossArgs),
    /// Fractional f01 spread from fractional E_C and E_J spreads.
    Sensitivity(SensitivityArgs),
    /// Design quantities interpolated over interchip spacing.
    SpacingSweep(SpacingArgs),
    /// Recompute the published device numbers from the bundled datasets.
    ReproducePaper(ReproduceArgs),
}

#[derive(Args, Debug, serde::Serialize)]
struct TransmonArgs {
    #[arg(long)]
    ec_mhz: Option<f64>,
    #[arg(long)]
    ej_mhz: Option<f64>,
    #[arg(long)]
    f01_mhz: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha_mhz: Option<f64>,
    /// Total qubit capacitance, giving E_C = e^2/(2C).
    #[arg(long)]
    c_self_ff: Option<f64>,
    /// Coupler zero-flux frequency; requires --flux.
    #[arg(long, requires = "flux")]
    fc0_mhz: Option<f64>,
    /// Applied flux in units of the flux quantum.
    #[arg(long, allow_hyphen_values = true, requires = "fc0_mhz")]
    flux: Option<f64>,
}

#[derive(Args, Debug, serde::Serialize)]
struct JunctionArgs {
    #[arg(long)]
    rn_ohm: f64,
    /// Superconducting gap; defaults to the bundled materials value.
    #[arg(long)]
    gap_uev: Option<f64>,
}

#[derive(Args, Debug, serde::Serialize)]
struct CouplingArgs {
    #[arg(long)]
    f1_mhz: Option<f64>,
    #[arg(long)]
    f2_mhz: Option<f64>,
    #[arg(long)]
    c12_ff: Option<f64>,
    #[arg(long)]
    c1_ff: Option<f64>,
    #[arg(long)]
    c2_ff: Option<f64>,
    /// Capacitance record (path or bundled:tableS3); uses --mode-a/--mode-b.
    #[arg(long, conflicts_with_all = ["c12_ff", "c1_ff", "c2_ff"])]
    capacitance: Option<String>,
    #[arg(long, requires = "capacitance")]
    mode_a: Option<String>,
    #[arg(long, requires = "capacitance")]
    mode_b: Option<String>,
}

#[derive(Args, Debug, serde::Serialize)]
struct PurcellArgs {
    #[arg(long)]
    kappa_mhz: f64,
    #[arg(long)]
    g_mhz: f64,
    /// f01 − fr.
    #[arg(long, allow_hyphen_values = true)]
    detuning_mhz: f64,
    #[arg(long)]
    c_self_ff: f64,
    #[arg(long)]
    c_xy_ff: f64,
    #[arg(long)]
    f01_mhz: f64,
    #[arg(long, default_value_t = 50.0)]
    r_e_ohm: f64,
}

#[derive(Args, Debug, serde::Serialize)]
struct KappaArgs {
    #[arg(long, requires = "qc")]
    fr_mhz: Option<f64>,
    #[arg(long, requires = "fr_mhz")]
    qc: Option<f64>,
    /// Resonator table (path or bundled:tableS1 / bundled:tableS2).
    #[arg(long, conflicts_with = "fr_mhz")]
    dataset: Option<String>,
}

#[derive(Args, Debug, serde::Serialize)]
struct SpectrumArgs {
    /// System definition JSON (modes and couplings).
    #[arg(long)]
    system: String,
    /// Label of the flux-tuned mode.
    #[arg(long)]
    coupler: String,
    #[arg(long)]
    fc0_mhz: f64,
    #[arg(long, allow_hyphen_values = true)]
    flux_start: f64,
    #[arg(long, allow_hyphen_values = true)]
    flux_stop: f64,
    #[arg(long, default_value_t = 201)]
    points: usize,
    /// Number of lowest levels kept per point.
    #[arg(long, default_value_t = 4)]
    levels: usize,
    /// Track pair for the avoided crossing, e.g. `1,2`.
    #[arg(long, value_delimiter = ',')]
    crossing: Option<Vec<usize>>,
}

#[derive(Args, Debug, serde::Serialize)]
struct S21Args {
    /// Trace CSV with columns freq_mhz, re, im.
    #[arg(long, required_unless_present = "synth_fr_mhz")]
    input: Option<String>,
    /// Synthesize a trace instead of reading one.
    #[arg(long, conflicts_with = "input", requires_all = ["synth_qi", "synth_qc", "seed"])]
    synth_fr_mhz: Option<f64>,
    #[arg(long)]
    synth_qi: Option<f64>,
    #[arg(long)]
    synth_qc: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    synth_phi_rad: f64,
    /// Complex Gaussian noise per quadrature.
    #[arg(long, default_value_t = 0.0)]
    synth_sigma: f64,
    #[arg(long, default_value_t = 801)]
    synth_points: usize,
    /// Half-span in loaded linewidths.
    #[arg(long, default_value_t = 6.0)]
    synth_half_span_linewidths: f64,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug, serde::Serialize)]
struct RbFitArgs {
    /// CSV with columns m, sequence_index, fidelity.
    #[arg(long, required_unless_present = "synth_p")]
    input: Option<String>,
    #[arg(long, default_value_t = 1)]
    qubits: u32,
    /// Synthesize a dataset instead of reading one.
    #[arg(long, conflicts_with = "input", requires_all = ["synth_lengths", "seed"])]
    synth_p: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    synth_a: f64,
    #[arg(long, default_value_t = 0.5)]
    synth_b: f64,
    #[arg(long, value_delimiter = ',')]
    synth_lengths: Option<Vec<u32>>,
    #[arg(long, default_value_t = 40)]
    synth_sequences: usize,
    #[arg(long, default_value_t = 0.01)]
    synth_sigma: f64,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug, serde::Serialize)]
struct InterleavedArgs {
    #[arg(long, requires = "interleaved")]
    reference: Option<String>,
    #[arg(long, requires = "reference")]
    interleaved: Option<String>,
    #[arg(long, conflicts_with = "reference", requires = "p_int")]
    p_ref: Option<f64>,
    #[arg(long, requires = "p_ref")]
    p_int: Option<f64>,
    #[arg(long, default_value_t = 2)]
    qubits: u32,
}

#[derive(Args, Debug, serde::Serialize)]
struct CoherenceArgs {
    #[arg(long)]
    gate_ns: f64,
    /// One per qubit, paired with --t2-star-us.
    #[arg(long)]
    t1_us: Vec<f64>,
    #[arg(long)]
    t2_star_us: Vec<f64>,
    /// Device record (path or bundled:tableS8) instead of explicit times.
    #[arg(long, conflicts_with = "t1_us", requires_all = ["flux", "qubit"])]
    device: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    flux: Option<f64>,
    #[arg(long)]
    qubit: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
enum SourceArg {
    Tabulated,
    Corners,
}

#[derive(Args, Debug, serde::Serialize)]
struct MetrologyArgs {
    #[arg(long, default_value = "bundled:tableS7")]
    dataset: String,
    /// Fabrication run to drop; repeatable.
    #[arg(long)]
    exclude: Vec<String>,
    /// Also drop records flagged as excluded in the dataset.
    #[arg(long)]
    use_record_flags: bool,
    #[arg(long, value_enum, default_value = "tabulated")]
    source: SourceArg,
}

#[derive(Args, Debug, serde::Serialize)]
struct LossArgs {
    /// JSON list of {name, p | raw_w, tan_delta}.
    #[arg(long)]
    budget: String,
}

#[derive(Debug, Clone, Copy, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
enum CombinationArg {
    WorstCase,
    Quadrature,
}

#[derive(Args, Debug, serde::Serialize)]
struct SensitivityArgs {
    #[arg(long)]
    ec_mhz: f64,
    #[arg(long)]
    ej_mhz: f64,
    /// Fractional E_C spread, e.g. 0.026.
    #[arg(long)]
    rel_dec: f64,
    #[arg(long)]
    rel_dej: f64,
    #[arg(long, value_enum, default_value = "worst-case")]
    combination: CombinationArg,
}

#[derive(Args, Debug, serde::Serialize)]
struct SpacingArgs {
    /// Sweep description JSON.
    #[arg(long)]
    spec: String,
}

#[derive(Args, Debug, serde::Serialize)]
struct ReproduceArgs {
    /// Run only groups whose name contains this string.
    #[arg(long)]
    filter: Option<String>,
    /// Replace a bundled dataset, `KEY=PATH`; repeatable.
    #[arg(long = "override", value_name = "KEY=PATH")]
    overrides: Vec<String>,
}

fn params<T: serde::Serialize>(args: &T) -> Value {
    serde_json::to_value(args).unwrap_or(Value::Null)
}

fn missing(what: &str) -> Error {
    Error::Validation(format!("missing arguments: {what}"))
}

fn bundled_materials(report: &mut Report) -> Result<Materials> {
    let l = load("materials", "bundled:materials")?;
    report.input(&l);
    Datasets::bundled().with_override("materials", l.text)?.materials()
}

fn transmon(a: &TransmonArgs) -> Result<Report> {
    let mut r = Report::new("transmon", params(a));
    let mut res = serde_json::Map::new();
    match (a.ec_mhz, a.ej_mhz, a.f01_mhz, a.alpha_mhz, a.c_self_ff) {
        (Some(ec), Some(ej), None, None, None) => {
            res.insert("transmon".into(), serde_json::to_value(TransmonParams::from_energies(ec, ej)?)?);
        }
        (None, None, Some(f01), Some(alpha), None) => {
            res.insert("transmon".into(), serde_json::to_value(TransmonParams::from_spectrum(f01, alpha)?)?);
        }
        (None, None, None, None, Some(c)) => {
            res.insert("ec_mhz".into(), json!(ec_from_capacitance(c)?));
        }
        (None, None, None, None, None) if a.fc0_mhz.is_some() => {}
        _ => return Err(missing("exactly one of --ec-mhz/--ej-mhz, --f01-mhz/--alpha-mhz or --c-self-ff")),
    }
    if let (Some(fc0), Some(flux)) = (a.fc0_mhz, a.flux) {
        res.insert("coupler_mhz".into(), json!(coupler_frequency(fc0, flux)?));
    }
    r.results = Value::Object(res);
    Ok(r)
}

fn junction(a: &JunctionArgs) -> Result<Report> {
    let mut r = Report::new("junction", params(a));
    let gap = match a.gap_uev {
        Some(g) => g,
        None => bundled_materials(&mut r)?.aluminum_gap_uev,
    };
    let j = JunctionParams::from_resistance(a.rn_ohm, gap)?;
    r.results = json!({ "junction": j, "ej_mhz": j.ej_mhz() });
    Ok(r)
}

fn coupling(a: &CouplingArgs) -> Result<Report> {
    let mut r = Report::new("coupling", params(a));
    let (f1, f2) = (a.f1_mhz.ok_or_else(|| missing("--f1-mhz"))?, a.f2_mhz.ok_or_else(|| missing("--f2-mhz"))?);
    let g = match &a.capacitance {
        Some(src) => {
            let l = load("capacitance", src)?;
            r.input(&l);
            let rec = load_capacitance_record(&l.text)?;
            let (ma, mb) = (
                a.mode_a.as_deref().ok_or_else(|| missing("--mode-a"))?,
                a.mode_b.as_deref().ok_or_else(|| missing("--mode-b"))?,
            );
            rec.coupling_between(ma, f1, mb, f2)?
        }
        None => match (a.c12_ff, a.c1_ff, a.c2_ff) {
            (Some(c12), Some(c1), Some(c2)) => coupling_strength(f1, f2, c12, c1, c2)?,
            _ => return Err(missing("--c12-ff, --c1-ff and --c2-ff, or --capacitance")),
        },
    };
    r.results = json!({ "g_mhz": g });
    Ok(r)
}

fn purcell(a: &PurcellArgs) -> Result<Report> {
    let mut r = Report::new("purcell", params(a));
    let read = tp_read(a.kappa_mhz, a.g_mhz, a.detuning_mhz)?;
    let xy = tp_xy(a.c_self_ff, a.c_xy_ff, a.f01_mhz, a.r_e_ohm)?;
    let q = qc_xy(a.c_self_ff, a.c_xy_ff, a.f01_mhz, a.r_e_ohm)?;
    r.results = json!({ "budget_us": tp_combined(read, xy)?, "qc_xy": q });
    Ok(r)
}

fn kappa(a: &KappaArgs) -> Result<Report> {
    let mut r = Report::new("kappa", params(a));
    match (&a.dataset, a.fr_mhz, a.qc) {
        (Some(src), _, _) => {
            let l = load("dataset", src)?;
            r.input(&l);
            let rows: Vec<ResonatorRow> =
                Datasets::bundled().with_override("resonators_two_qubit", l.text)?.resonators_two_qubit()?;
            let mut out = Vec::new();
            let mut csv = String::from("resonator,qc,fr_ghz,kappa_mhz,kappa_tabulated_mhz\n");
            for row in rows {
                let k = row.kappa_from_sim()?;
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    row.resonator, row.qc_sim, row.fr_sim_ghz, k, row.kappa_sim_mhz
                ));
                out.push(json!({ "resonator": row.resonator, "qc": row.qc_sim, "fr_ghz": row.fr_sim_ghz, "kappa_mhz": k, "kappa_tabulated_mhz": row.kappa_sim_mhz }));
            }
            r.results = Value::Array(out);
            r.csv_body = Some(csv);
        }
        (None, Some(fr), Some(qc)) => r.results = json!({ "kappa_mhz": kappa_from_qc(fr, qc)? }),
        _ => return Err(missing("--fr-mhz and --qc, or --dataset")),
    }
    Ok(r)
}

fn spectrum(a: &SpectrumArgs) -> Result<Report> {
    let mut r = Report::new("spectrum-sweep", params(a));
    let l = load("system", &a.system)?;
    r.input(&l);
    let sys = SystemDef::from_json(&l.text)?;
    let grid = linspace(a.flux_start, a.flux_stop, a.points)?;
    let curve = flux_sweep(&sys, &a.coupler, a.fc0_mhz, &grid, a.levels)?;
    let crossing = match &a.crossing {
        Some(pair) => match pair.as_slice() {
            &[i, j] => Some(avoided_crossing(&curve, i, j)?),
            _ => return Err(Error::Validation("--crossing takes two track indices, e.g. 1,2".into())),
        },
        None => None,
    };
    r.csv_body = Some(curve.to_csv());
    r.results = json!({ "crossing": crossing, "curve": curve });
    Ok(r)
}

fn s21(a: &S21Args) -> Result<Report> {
    let mut r = Report::new("s21-fit", params(a));
    let trace = match &a.input {
        Some(src) => {
            let l = load("trace", src)?;
            r.input(&l);
            S21Trace::from_csv(l.text.as_bytes())?
        }
        None => {
            let (fr, qi, qc) = (
                a.synth_fr_mhz.ok_or_else(|| missing("--synth-fr-mhz"))?,
                a.synth_qi.ok_or_else(|| missing("--synth-qi"))?,
                a.synth_qc.ok_or_else(|| missing("--synth-qc"))?,
            );
            let seed = a.seed.ok_or_else(|| missing("--seed"))?;
            let p = NotchParams::from_qi_qc(fr, qi, qc, a.synth_phi_rad);
            let half = a.synth_half_span_linewidths * p.fr / p.ql;
            let grid = linspace(p.fr - half, p.fr + half, a.synth_points)?;
            S21Trace::synthesize(&p, &grid, a.synth_sigma, seed)?
        }
    };
    r.results(&fit_trace(&trace)?)?;
    Ok(r)
}

fn rb_dataset(r: &mut Report, name: &str, src: &str, dim: u32) -> Result<RBDataset> {
    let l = load(name, src)?;
    r.input(&l);
    RBDataset::from_csv(l.text.as_bytes(), dim)
}

fn rb_fit(a: &RbFitArgs) -> Result<Report> {
    let mut r = Report::new("rb-fit", params(a));
    let dim = flipchip_core::rb::dimension(a.qubits)?;
    let ds = match &a.input {
        Some(src) => rb_dataset(&mut r, "dataset", src, dim)?,
        None => {
            let p = a.synth_p.ok_or_else(|| missing("--synth-p"))?;
            let lengths = a.synth_lengths.as_deref().ok_or_else(|| missing("--synth-lengths"))?;
            let seed = a.seed.ok_or_else(|| missing("--seed"))?;
            synth_dataset(p, a.synth_a, a.synth_b, lengths, a.synth_sequences, a.synth_sigma, dim, seed)?
        }
    };
    r.results(&fit_reference(&ds)?)?;
    Ok(r)
}

fn rb_interleaved(a: &InterleavedArgs) -> Result<Report> {
    let mut r = Report::new("rb-interleaved", params(a));
    let dim = flipchip_core::rb::dimension(a.qubits)?;
    match (&a.reference, &a.interleaved, a.p_ref, a.p_int) {
        (Some(rs), Some(is), _, _) => {
            let reference = fit_reference(&rb_dataset(&mut r, "reference", rs, dim)?)?;
            let interleaved = fit_reference(&rb_dataset(&mut r, "interleaved", is, dim)?)?;
            let res = interleaved_from_fits(&reference, &interleaved)?;
            r.results = json!({ "reference": reference, "interleaved": interleaved, "gate": res });
        }
        (None, None, Some(p_ref), Some(p_int)) => {
            r.results = json!({ "r_gate": interleaved_error(p_ref, p_int, dim)? });
        }
        _ => return Err(missing("--reference and --interleaved, or --p-ref and --p-int")),
    }
    Ok(r)
}

fn coherence(a: &CoherenceArgs) -> Result<Report> {
    let mut r = Report::new("coherence-limit", params(a));
    let records = match &a.device {
        Some(src) => {
            let l = load("device", src)?;
            r.input(&l);
            let dev: TwoQubitDevice =
                Datasets::bundled().with_override("device_two_qubit", l.text)?.device_two_qubit()?;
            let flux = a.flux.ok_or_else(|| missing("--flux"))?;
            a.qubit
                .iter()
                .map(|q| {
                    let s = dev.qubit(q)?.coherence_at(flux)?;
                    CoherenceRecord::new(s.t1_us, s.t2_star_us)
                })
                .collect::<Result<Vec<_>>>()?
        }
        None => {
            if a.t1_us.len() != a.t2_star_us.len() || a.t1_us.is_empty() {
                return Err(Error::Validation("give one --t2-star-us per --t1-us".into()));
            }
            a.t1_us
                .iter()
                .zip(&a.t2_star_us)
                .map(|(&t1, &t2)| CoherenceRecord::new(t1, t2))
                .collect::<Result<Vec<_>>>()?
        }
    };
    let n = u32::try_from(records.len()).map_err(|_| Error::Validation("too many qubits".into()))?;
    let f = coherence_limit(n, a.gate_ns, &records)?;
    r.results = json!({ "fidelity": f, "records": records });
    Ok(r)
}

fn metrology(a: &MetrologyArgs) -> Result<Report> {
    let mut r = Report::new("metrology", params(a));
    let l = load("dataset", &a.dataset)?;
    r.input(&l);
    let recs = load_module_records(l.text.as_bytes())?;
    let mut policy = ExclusionPolicy::runs(a.exclude.iter().cloned());
    policy.use_record_flags = a.use_record_flags;
    let source = match a.source {
        SourceArg::Tabulated => GeometrySource::Tabulated,
        SourceArg::Corners => GeometrySource::Corners,
    };
    r.results(&population_stats(&recs, &policy, source)?)?;
    Ok(r)
}

fn loss(a: &LossArgs) -> Result<Report> {
    let mut r = Report::new("loss-q", params(a));
    let l = load("budget", &a.budget)?;
    r.input(&l);
    let domains = load_loss_budget(&l.text)?;
    let q = loss_q(&domains)?;
    r.results = json!({ "q": if q.is_finite() { json!(q) } else { json!("inf") }, "domains": domains });
    Ok(r)
}

fn sensitivity(a: &SensitivityArgs) -> Result<Report> {
    let mut r = Report::new("sensitivity", params(a));
    let mode = match a.combination {
        CombinationArg::WorstCase => Combination::WorstCase,
        CombinationArg::Quadrature => Combination::Quadrature,
    };
    let input = SensitivityInput { ec: a.ec_mhz, ej: a.ej_mhz, rel_dec: a.rel_dec, rel_dej: a.rel_dej };
    r.results(&frequency_sensitivity(&input, mode)?)?;
    Ok(r)
}

fn spacing(a: &SpacingArgs) -> Result<Report> {
    let mut r = Report::new("spacing-sweep", params(a));
    let l = load("spec", &a.spec)?;
    r.input(&l);
    let rep = spacing_sweep(&SweepSpec::from_json(&l.text)?)?;
    r.csv_body = Some(rep.to_csv());
    r.results(&rep)?;
    Ok(r)
}

fn reproduce(a: &ReproduceArgs) -> Result<(Report, bool)> {
    let mut r = Report::new("reproduce-paper", params(a));
    let mut ds = Datasets::bundled();
    for o in &a.overrides {
        let (key, path) =
            o.split_once('=').ok_or_else(|| Error::Validation(format!("override `{o}` is not KEY=PATH")))?;
        let l = load(key, path)?;
        r.input(&l);
        ds = ds.with_override(key, l.text)?;
    }
    let rows = run_checks(&ds, a.filter.as_deref())?;
    if rows.is_empty() {
        return Err(Error::Validation(format!("no checks match filter `{}`", a.filter.as_deref().unwrap_or(""))));
    }
    let ok = rows.iter().all(|c| c.pass);
    let mut csv = String::from("group,check,expected,actual,tolerance,unit,pass\n");
    for c in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            c.group, c.name, c.expected, c.actual, c.tolerance, c.unit, c.pass
        ));
    }
    r.csv_body = Some(csv);
    r.table = Some(format_table(&rows));
    r.results = json!({ "all_pass": ok, "checks": rows });
    Ok((r, ok))
}

fn run(cli: &Cli) -> Result<u8> {
    let (report, code) = match &cli.command {
        Command::Transmon(a) => (transmon(a)?, 0),
        Command::Junction(a) => (junction(a)?, 0),
        Command::Coupling(a) => (coupling(a)?, 0),
        Command::Purcell(a) => (purcell(a)?, 0),
        Command::Kappa(a) => (kappa(a)?, 0),
        Command::SpectrumSweep(a) => (spectrum(a)?, 0),
        Command::S21Fit(a) => (s21(a)?, 0),
        Command::RbFit(a) => (rb_fit(a)?, 0),
        Command::RbInterleaved(a) => (rb_interleaved(a)?, 0),
        Command::CoherenceLimit(a) => (coherence(a)?, 0),
        Command::Metrology(a) => (metrology(a)?, 0),
        Command::LossQ(a) => (loss(a)?, 0),
        Command::Sensitivity(a) => (sensitivity(a)?, 0),
        Command::SpacingSweep(a) => (spacing(a)?, 0),
        Command::ReproducePaper(a) => {
            let (r, ok) = reproduce(a)?;
            (r, if ok { 0 } else { EXIT_CHECKS_FAILED })
        }
    };
    let default = if matches!(cli.command, Command::ReproducePaper(_)) { Format::Table } else { Format::Json };
    let text = report.render(cli.format.unwrap_or(default))?;
    write_output(cli.output.as_deref(), &text)?;
    Ok(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::InvalidSubcommand
                | ErrorKind::MissingSubcommand
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_USAGE,
                _ => EXIT_VALIDATION,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_VALIDATION })
        }
    }
}
