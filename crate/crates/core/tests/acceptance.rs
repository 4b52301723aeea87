//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Every expected number is either a
//! tabulated value from the bundled datasets or recomputed here from its
//! closed form, independently of the library code path.

use std::f64::consts::PI;
use std::process::ExitCode;

use flipchip_core::capnet::{coupling_strength, kappa_from_qc, tp_combined, tp_read, tp_xy};
use flipchip_core::charstats::{
    frequency_sensitivity, module_geometry, population_stats, Combination, ExclusionPolicy, GeometrySource,
    SensitivityInput,
};
use flipchip_core::datasets::{self, Datasets};
use flipchip_core::rb::{
    coherence_limit, fit_reference, interleaved_error, p_from_error, synth_dataset, CoherenceRecord,
};
use flipchip_core::reproduce::{brute_force_sensitivity, qubit_coupler_gap, XY_LINE_IMPEDANCE_OHM};
use flipchip_core::resonfit::{fit_trace, NotchParams, S21Trace};
use flipchip_core::spectrum::{build_hamiltonian, eigenlevels, CouplingDef, ModeDef, SystemDef};
use flipchip_core::transmon::ej_from_junction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const E: f64 = 1.602_176_634e-19;

fn close(name: &str, actual: f64, expected: f64, tol: f64) -> Result<(), String> {
    if (actual - expected).abs() <= tol * (1.0 + 1e-9) {
        Ok(())
    } else {
        Err(format!("{name}: got {actual}, expected {expected} +/- {tol}"))
    }
}

fn rel(name: &str, actual: f64, expected: f64, r: f64) -> Result<(), String> {
    close(name, actual, expected, r * expected.abs())
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn criterion_1(ds: &Datasets) -> Outcome {
    let caps = ds.capacitance_two_qubit().map_err(err)?;
    let dev = ds.device_two_qubit().map_err(err)?;
    let mut worst: f64 = 0.0;
    for (q, xy) in [("q1", "xy1"), ("q2", "xy2")] {
        let p = dev.qubit(q).map_err(err)?;
        let c = caps.self_capacitance(q).map_err(err)? * 1e-15;
        let cxy = caps.mutual(q, xy).map_err(err)? * 1e-15;
        let w = 2.0 * PI * p.f01_mhz * 1e6;
        // oracle: T = C / (w^2 Cxy^2 Re), 1/T = 2 pi kappa (g/Delta)^2
        let xy_oracle = c / (w * w * cxy * cxy * XY_LINE_IMPEDANCE_OHM) * 1e6;
        let det = p.f01_mhz - p.fr_mhz;
        let read_oracle = 1.0 / (2.0 * PI * p.kappa_mhz * (p.g_qr_mhz / det).powi(2));
        let total_oracle = 1.0 / (1.0 / xy_oracle + 1.0 / read_oracle);
        let xy_t = tp_xy(c * 1e15, cxy * 1e15, p.f01_mhz, XY_LINE_IMPEDANCE_OHM).map_err(err)?;
        let read_t = tp_read(p.kappa_mhz, p.g_qr_mhz, det).map_err(err)?;
        let total = tp_combined(read_t, xy_t).map_err(err)?.tp_total;
        rel(&format!("{q} tp_xy vs oracle"), xy_t, xy_oracle, 1e-9)?;
        rel(&format!("{q} tp_read vs oracle"), read_t, read_oracle, 1e-9)?;
        rel(&format!("{q} tp_total vs oracle"), total, total_oracle, 1e-9)?;
        rel(&format!("{q} tp_xy"), xy_t, p.tp_xy_us, 0.02)?;
        rel(&format!("{q} tp_read"), read_t, p.tp_read_us, 0.02)?;
        rel(&format!("{q} tp_total"), total, p.tp_total_us, 0.02)?;
        for (a, b) in [(xy_t, p.tp_xy_us), (read_t, p.tp_read_us), (total, p.tp_total_us)] {
            worst = worst.max((a / b - 1.0).abs());
        }
    }
    Ok(format!("six Purcell times within {:.2}% of tabulated", 100.0 * worst))
}

fn criterion_2(ds: &Datasets) -> Outcome {
    let mut rows = ds.resonators_two_qubit().map_err(err)?;
    rows.extend(ds.resonators_single_qubit().map_err(err)?);
    let mut failures = Vec::new();
    for r in &rows {
        let k = kappa_from_qc(r.fr_sim_ghz * 1e3, r.qc_sim).map_err(err)?;
        close(&format!("{} oracle", r.resonator), k, r.fr_sim_ghz * 1e3 / r.qc_sim, 1e-12)?;
        let printed = format!("{:.2}", k);
        if printed != format!("{:.2}", r.kappa_sim_mhz) {
            failures
                .push(format!("{}: fr/Qc = {k:.4} prints {printed}, tabulated {:.2}", r.resonator, r.kappa_sim_mhz));
        }
    }
    if failures.is_empty() {
        Ok(format!("{} linewidths match to two decimals", rows.len()))
    } else {
        Err(failures.join("; "))
    }
}

fn criterion_3(ds: &Datasets) -> Outcome {
    let caps = ds.capacitance_two_qubit().map_err(err)?;
    let dev = ds.device_two_qubit().map_err(err)?;
    let table = ds.couplings().map_err(err)?;
    let mut msg = Vec::new();
    for (q, r) in [("q1", "r1"), ("q2", "r2")] {
        let p = dev.qubit(q).map_err(err)?;
        let (c1, c2, c12) = (
            caps.self_capacitance(q).map_err(err)?,
            caps.self_capacitance(r).map_err(err)?,
            caps.mutual(q, r).map_err(err)?,
        );
        let oracle = 0.5 * (p.f01_mhz * p.fr_mhz).sqrt() * c12 / (c1 * c2).sqrt();
        let g = coupling_strength(p.f01_mhz, p.fr_mhz, c12, c1, c2).map_err(err)?;
        rel(&format!("{q} g vs oracle"), g, oracle, 1e-12)?;
        let expected = table.iter().find(|t| t.qubit == q).ok_or("missing coupling row")?.g_qr_sim_mhz;
        rel(&format!("{q}-{r} g"), g, expected, 0.05)?;
        msg.push(format!("{q} {g:.1}/{expected}"));
    }
    Ok(format!("g (MHz) {}", msg.join(", ")))
}

fn criterion_4(ds: &Datasets) -> Outcome {
    let dev = ds.device_two_qubit().map_err(err)?;
    let exp = ds.rb_expectations().map_err(err)?;
    let coh = |q: &str| dev.qubit(q).and_then(|p| p.coherence_at(0.34).cloned());
    let (c1, c2) = (coh("q1").map_err(err)?, coh("q2").map_err(err)?);
    // oracle: single-qubit 1 - (tau/3)(1/(2T1) + 1/T2*), two-qubit
    // 1 - (2 tau/5) sum (1/T1 + 1/Tphi)
    let tau1 = exp.single_qubit_gate_ns * 1e-3;
    let tau2 = exp.cz_gate_ns * 1e-3;
    let one = |t1: f64, t2: f64| 100.0 * (1.0 - tau1 / 3.0 * (0.5 / t1 + 1.0 / t2));
    let rate = |t1: f64, t2: f64| 1.0 / t1 + (1.0 / t2 - 0.5 / t1).max(0.0);
    let two = 100.0 * (1.0 - 0.4 * tau2 * (rate(c1.t1_us, c1.t2_star_us) + rate(c2.t1_us, c2.t2_star_us)));
    let r1 = CoherenceRecord::new(c1.t1_us, c1.t2_star_us).map_err(err)?;
    let r2 = CoherenceRecord::new(c2.t1_us, c2.t2_star_us).map_err(err)?;
    let f1 = 100.0 * coherence_limit(1, exp.single_qubit_gate_ns, &[r1]).map_err(err)?;
    let f2 = 100.0 * coherence_limit(1, exp.single_qubit_gate_ns, &[r2]).map_err(err)?;
    let f2q = 100.0 * coherence_limit(2, exp.cz_gate_ns, &[r1, r2]).map_err(err)?;
    close("q1 vs oracle", f1, one(c1.t1_us, c1.t2_star_us), 1e-10)?;
    close("q2 vs oracle", f2, one(c2.t1_us, c2.t2_star_us), 1e-10)?;
    close("2Q vs oracle", f2q, two, 1e-10)?;
    let lim = &exp.coherence_limit_pct;
    close("q1", f1, lim.q1, 0.001)?;
    close("q2", f2, lim.q2, 0.001)?;
    close("mean", 0.5 * (f1 + f2), lim.mean_1q, 0.01)?;
    close("2Q", f2q, lim.two_qubit, 0.01)?;
    Ok(format!("{f1:.4}% {f2:.4}% mean {:.4}% 2Q {f2q:.4}%", 0.5 * (f1 + f2)))
}

fn criterion_5() -> Outcome {
    let input = SensitivityInput { ec: 200.0, ej: 11000.0, rel_dec: 0.026, rel_dej: 0.055 };
    let s = frequency_sensitivity(&input, Combination::WorstCase).map_err(err)?;
    // oracle: logarithmic derivatives of sqrt(8 EJ EC) - EC
    let root = (8.0 * input.ej * input.ec).sqrt();
    let f = root - input.ec;
    let ec_term = ((0.5 * root - input.ec) / f).abs() * input.rel_dec;
    let ej_term = (0.5 * root / f) * input.rel_dej;
    close("linearized vs oracle", s.total, ec_term + ej_term, 1e-12)?;
    close("total", 100.0 * s.total, 4.1, 0.1)?;
    let brute = brute_force_sensitivity(&input).map_err(err)?;
    close("finite difference", 100.0 * brute, 100.0 * s.total, 0.2)?;
    Ok(format!("linearized {:.3}%, exact worst case {:.3}%", 100.0 * s.total, 100.0 * brute))
}

fn criterion_6(ds: &Datasets) -> Outcome {
    let recs = ds.metrology().map_err(err)?;
    let r = recs.iter().find(|r| r.corners.run == "FC2" && r.corners.module == "CQ1").ok_or("FC2 CQ1 missing")?;
    let z = r.corners.z;
    let d_oracle = z.iter().sum::<f64>() / 4.0;
    let max = z.iter().cloned().fold(f64::MIN, f64::max);
    let min = z.iter().cloned().fold(f64::MAX, f64::min);
    // corners SE, NE, SW, NW; edges SE-NE, NE-NW, NW-SW, SW-SE
    let edges = [(0, 1), (1, 3), (3, 2), (2, 0)];
    let diags = [(0, 3), (1, 2)];
    let mut th: f64 = 0.0;
    for (a, b) in edges {
        th = th.max((z[a] - z[b]).abs() / r.corners.edge_mm * 1e3);
    }
    for (a, b) in diags {
        th = th.max((z[a] - z[b]).abs() / r.corners.diagonal_mm * 1e3);
    }
    let g = module_geometry(&r.corners).map_err(err)?;
    close("d vs oracle", g.d, d_oracle, 1e-12)?;
    close("delta d vs oracle", g.delta_d, max - min, 1e-12)?;
    close("delta theta vs oracle", g.delta_theta, th, 1e-9)?;
    if format!("{:.2}", g.d + 1e-12) != "8.13"
        || format!("{:.2}", g.delta_d) != "0.71"
        || format!("{:.0}", g.delta_theta) != "56"
    {
        return Err(format!("FC2 CQ1 prints ({:.2}, {:.2}, {:.0})", g.d, g.delta_d, g.delta_theta));
    }
    let policy = ExclusionPolicy { use_record_flags: true, ..Default::default() };
    let s = population_stats(&recs, &policy, GeometrySource::Tabulated).map_err(err)?;
    if s.included.len() != 17 {
        return Err(format!("{} modules included", s.included.len()));
    }
    let kept: Vec<_> = recs.iter().filter(|r| !r.corners.excluded).collect();
    let ms = |v: Vec<f64>| {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
    };
    let od = ms(kept.iter().map(|r| r.tabulated.d).collect());
    let odd = ms(kept.iter().map(|r| r.tabulated.delta_d).collect());
    let ot = ms(kept.iter().map(|r| r.tabulated.delta_theta).collect());
    for (name, got, want) in [
        ("mean d", s.d.mean, od.0),
        ("std d", s.d.std, od.1),
        ("mean dd", s.delta_d.mean, odd.0),
        ("std dd", s.delta_d.std, odd.1),
        ("mean dtheta", s.delta_theta.mean, ot.0),
        ("std dtheta", s.delta_theta.std, ot.1),
    ] {
        close(&format!("{name} vs oracle"), got, want, 1e-9)?;
    }
    let printed = format!(
        "{:.1}+/-{:.1}, {:.1}+/-{:.1}, {:.0}+/-{:.0}",
        s.d.mean, s.d.std, s.delta_d.mean, s.delta_d.std, s.delta_theta.mean, s.delta_theta.std
    );
    if printed != "7.8+/-0.8, 1.7+/-1.0, 126+/-76" {
        return Err(format!("population prints {printed}"));
    }
    Ok(format!("FC2 CQ1 (8.13, 0.71, 56); population {printed} over 17 modules"))
}

fn criterion_7(ds: &Datasets) -> Outcome {
    let gap = ds.materials().map_err(err)?.aluminum_gap_uev;
    let rn = 12500.0;
    let ic_oracle = PI * gap * 1e-6 / (2.0 * rn);
    let ej_oracle = ic_oracle / (4.0 * PI * E) * 1e-6;
    let ic_oracle = ic_oracle * 1e9;
    let (ej, ic) = ej_from_junction(rn, gap).map_err(err)?;
    rel("Ic vs oracle", ic, ic_oracle, 1e-9)?;
    rel("EJ vs oracle", ej, ej_oracle, 1e-9)?;
    rel("EJ", ej, 11000.0, 0.03)?;
    Ok(format!("EJ/h = {ej:.0} MHz ({:+.1}% from 11000)", 100.0 * (ej / 11000.0 - 1.0)))
}

fn criterion_8(ds: &Datasets) -> Outcome {
    // two-level resonant splitting
    let g = 30.0;
    let sys = SystemDef {
        modes: vec![ModeDef::new("a", 5000.0, -200.0, 2), ModeDef::new("b", 5000.0, -200.0, 2)],
        couplings: vec![CouplingDef { a: "a".into(), b: "b".into(), g }],
    };
    let lv = eigenlevels(&build_hamiltonian(&sys).map_err(err)?).map_err(err)?;
    let split = lv[2] - lv[1];
    rel("two-level splitting", split, 2.0 * g, 1e-3)?;

    // decoupled limit against the exact ladder sums
    let sys = SystemDef {
        modes: vec![ModeDef::new("a", 4776.0, -210.0, 4), ModeDef::new("c", 6100.0, -75.0, 3)],
        couplings: vec![],
    };
    let lv = eigenlevels(&build_hamiltonian(&sys).map_err(err)?).map_err(err)?;
    let ladder =
        |f: f64, a: f64, n: usize| (0..n).map(move |k| k as f64 * f + 0.5 * a * (k * k.saturating_sub(1)) as f64);
    let mut oracle: Vec<f64> =
        ladder(4776.0, -210.0, 4).flat_map(|x| ladder(6100.0, -75.0, 3).map(move |y| x + y)).collect();
    oracle.sort_by(f64::total_cmp);
    for (a, b) in lv.iter().zip(&oracle) {
        close("decoupled level", *a, *b, 1e-9)?;
    }

    // truncation stability
    let dev = ds.device_two_qubit().map_err(err)?;
    let q2 = dev.qubit("q2").map_err(err)?;
    let base = |dq: usize, dc: usize| SystemDef {
        modes: vec![
            ModeDef::new("q", q2.f01_mhz, q2.alpha_mhz, dq),
            ModeDef::new("c", dev.coupler.f01_mhz_at_bias, dev.coupler.alpha_mhz, dc),
        ],
        couplings: vec![CouplingDef { a: "q".into(), b: "c".into(), g: q2.g_qc_mhz }],
    };
    let low = |s: SystemDef| -> Result<Vec<f64>, String> {
        Ok(eigenlevels(&build_hamiltonian(&s).map_err(err)?).map_err(err)?[..4].to_vec())
    };
    let l0 = low(base(4, 4))?;
    let mut worst: f64 = 0.0;
    for l in [low(base(5, 4))?, low(base(4, 5))?] {
        for (a, b) in l.iter().zip(&l0) {
            worst = worst.max((a - b).abs());
        }
    }
    if worst >= 0.1 {
        return Err(format!("truncation moves lowest levels by {worst} MHz"));
    }

    let grid: Vec<f64> = (0..=300).map(|i| 0.30 + 0.15 * i as f64 / 300.0).collect();
    let (gap, at) = qubit_coupler_gap(
        q2.f01_mhz,
        q2.alpha_mhz,
        q2.g_qc_mhz,
        dev.coupler.f01_mhz_zero_flux,
        dev.coupler.alpha_mhz,
        &grid,
    )
    .map_err(err)?;
    close("q2-coupler gap", gap, 60.0, 1.0)?;
    Ok(format!("2g split {split:.3}; truncation shift {worst:.2e} MHz; q2 gap {gap:.2} MHz at {at:.4} flux"))
}

fn draw_params(rng: &mut ChaCha8Rng) -> NotchParams {
    let fr = rng.random_range(4000.0..8000.0);
    let qc = 10f64.powf(rng.random_range(3.0..5.0));
    let qi = 10f64.powf(rng.random_range(4.0..8.0));
    let phi = rng.random_range(-0.3..0.3);
    let mut p = NotchParams::from_qi_qc(fr, qi, qc, phi);
    p.amplitude = rng.random_range(0.05..1.0);
    p.phase_offset = rng.random_range(-PI..PI);
    p.delay_ns = rng.random_range(0.0..50.0);
    p
}

fn grid(p: &NotchParams, n: usize) -> Vec<f64> {
    let lw = p.fr / p.ql;
    (0..n).map(|i| p.fr - 6.0 * lw + 12.0 * lw * i as f64 / (n - 1) as f64).collect()
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let p = draw_params(&mut rng);
        let trace = S21Trace::synthesize(&p, &grid(&p, 801), 0.0, k).map_err(err)?;
        let f = fit_trace(&trace).map_err(err)?;
        let qi = p.qi().map_err(err)?;
        for (name, got, want) in
            [("fr", f.fr, p.fr), ("Ql", f.ql, p.ql), ("|Qc|", f.qc_mag, p.qc_mag), ("Qi", f.qi, qi)]
        {
            let e = (got / want - 1.0).abs();
            if e.is_nan() || e > 1e-4 {
                return Err(format!("draw {k}: {name} {got} vs {want} (Qi {qi:.3e}, Qc {:.3e})", p.qc_mag));
            }
            worst = worst.max(e);
        }
    }
    let p = {
        let mut p = NotchParams::from_qi_qc(6107.0, 2e5, 12723.0, 0.1);
        p.amplitude = 1.0;
        p
    };
    let trace = S21Trace::synthesize(&p, &grid(&p, 801), 0.01, 2024).map_err(err)?;
    let f = fit_trace(&trace).map_err(err)?;
    rel("noisy Qc", f.qc_mag, p.qc_mag, 0.01)?;
    Ok(format!(
        "100 noiseless draws worst error {:.1e}; noisy Qc error {:.2}%",
        worst,
        100.0 * (f.qc_mag / p.qc_mag - 1.0).abs()
    ))
}

fn calibration(r: f64, dim: u32, a: f64, b: f64, lengths: &[u32], sigma: f64, seed0: u64) -> Result<usize, String> {
    let p = p_from_error(r, dim).map_err(err)?;
    let mut hits = 0;
    for t in 0..200 {
        let ds = synth_dataset(p, a, b, lengths, 40, sigma, dim, seed0 + t).map_err(err)?;
        let fit = fit_reference(&ds).map_err(err)?;
        if (fit.r - r).abs() <= 3.0 * fit.r_se {
            hits += 1;
        }
    }
    Ok(hits)
}

fn criterion_10(ds: &Datasets) -> Outcome {
    let one = calibration(2.2e-4, 2, 0.45, 0.5, &[1, 100, 200, 400, 700, 1000, 1500, 2000, 3000, 4000], 0.01, 1000)?;
    let two = calibration(1.55e-2, 4, 0.7, 0.25, &[1, 5, 10, 20, 30, 45, 60, 80, 100, 130], 0.01, 5000)?;
    if one < 190 || two < 190 {
        return Err(format!("coverage {one}/200 and {two}/200"));
    }
    let exp = ds.rb_expectations().map_err(err)?;
    let ratio: f64 = 1.0 - 4.0 / 3.0 * exp.r_cz.value;
    let p_ref = p_from_error(exp.r_2q.value, 4).map_err(err)?;
    let r_cz = interleaved_error(p_ref, p_ref * ratio, 4).map_err(err)?;
    close("r_CZ", r_cz, 1.35e-2, 1e-12)?;
    Ok(format!("3-SE coverage {one}/200 (1Q), {two}/200 (2Q); r_CZ = {r_cz:.4e}"))
}

fn criterion_11() -> Outcome {
    // documented as not reproducible: only the provenance notes are checked
    let mut missing = Vec::new();
    for key in ["device_two_qubit", "device_single_qubit", "gate_errors", "metrology", "rb_expectations"] {
        let file = datasets::bundled_file(key).map_err(err)?;
        let notes = datasets::provenance(file);
        if notes.is_null() || notes.as_array().is_some_and(|a| a.is_empty()) {
            missing.push(key);
        }
    }
    if missing.is_empty() {
        Ok("not reproducible at desk scale; provenance notes present for measured datasets".into())
    } else {
        Err(format!("provenance notes missing for {}", missing.join(", ")))
    }
}

fn main() -> ExitCode {
    let ds = Datasets::bundled();
    let results: Vec<(u32, Outcome)> = vec![
        (1, criterion_1(&ds)),
        (2, criterion_2(&ds)),
        (3, criterion_3(&ds)),
        (4, criterion_4(&ds)),
        (5, criterion_5()),
        (6, criterion_6(&ds)),
        (7, criterion_7(&ds)),
        (8, criterion_8(&ds)),
        (9, criterion_9()),
        (10, criterion_10(&ds)),
        (11, criterion_11()),
    ];
    let mut failed = 0;
    for (n, r) in &results {
        match r {
            Ok(msg) => println!("criterion {n}: PASS {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n}: FAIL {msg}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
