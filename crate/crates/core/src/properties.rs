//! Randomized invariants across the modules.

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use crate::capnet::{coupling_strength, qc_xy, tp_combined, tp_read, tp_xy};
use crate::charstats::{
    frequency_sensitivity, loss_q, module_geometry, population_stats, Combination, CornerMeasurements, ExclusionPolicy,
    GeometrySource, LossDomain, SensitivityInput,
};
use crate::datasets::Datasets;
use crate::rb::{coherence_limit, error_from_p, p_from_error, CoherenceRecord};
use crate::resonfit::{fit_trace, NotchParams, S21Trace};
use crate::spectrum::{build_hamiltonian, eigenlevels, CouplingDef, ModeDef, SystemDef};
use crate::transmon::{coupler_frequency, ej_from_junction, energies_from_spectrum, f01_from_energies};

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig { cases: n, ..ProptestConfig::default() }
}

fn levels(sys: &SystemDef) -> Vec<f64> {
    eigenlevels(&build_hamiltonian(sys).unwrap()).unwrap()
}

fn two_mode(fq: f64, aq: f64, dq: usize, fc: f64, ac: f64, dc: usize, g: f64) -> SystemDef {
    SystemDef {
        modes: vec![ModeDef::new("q", fq, aq, dq), ModeDef::new("c", fc, ac, dc)],
        couplings: vec![CouplingDef { a: "q".into(), b: "c".into(), g }],
    }
}

/// Corner permutations induced by the 8 symmetries of the square, with
/// corners SE, NE, SW, NW at (1,0), (1,1), (0,0), (0,1).
type PointMap = fn(i32, i32) -> (i32, i32);

fn square_symmetries() -> Vec<[usize; 4]> {
    let pos = [(1, 0), (1, 1), (0, 0), (0, 1)];
    let maps: [PointMap; 8] = [
        |x, y| (x, y),
        |x, y| (1 - y, x),
        |x, y| (1 - x, 1 - y),
        |x, y| (y, 1 - x),
        |x, y| (1 - x, y),
        |x, y| (x, 1 - y),
        |x, y| (y, x),
        |x, y| (1 - y, 1 - x),
    ];
    maps.iter()
        .map(|m| {
            let mut perm = [0; 4];
            for (i, &(x, y)) in pos.iter().enumerate() {
                let t = m(x, y);
                perm[i] = pos.iter().position(|&p| p == t).unwrap();
            }
            perm
        })
        .collect()
}

proptest! {
    #![proptest_config(cases(200))]

    #[test]
    fn f01_increases_with_ej(ec in 100.0..400.0f64, ej in 5000.0..30000.0f64, step in 1.0..500.0f64) {
        prop_assert!(f01_from_energies(ec, ej + step).unwrap() > f01_from_energies(ec, ej).unwrap());
    }

    #[test]
    fn spectrum_round_trip(ec in 100.0..400.0f64, ratio in 20.0..120.0f64) {
        let f01 = f01_from_energies(ec, ratio * ec).unwrap();
        let (ec2, ej2) = energies_from_spectrum(f01, -ec).unwrap();
        prop_assert_eq!(ec2, ec);
        let f = f01_from_energies(ec2, ej2).unwrap();
        prop_assert!((f - f01).abs() <= 1e-12 * f01);
    }

    #[test]
    fn coupler_periodic_and_even(fc0 in 4000.0..9000.0f64, flux in -0.49..0.49f64, k in -3i32..3) {
        let f = coupler_frequency(fc0, flux).unwrap();
        prop_assert!((coupler_frequency(fc0, flux + k as f64).unwrap() - f).abs() < 1e-6);
        prop_assert!((coupler_frequency(fc0, -flux).unwrap() - f).abs() < 1e-9);
    }

    #[test]
    fn ej_times_rn_constant(rn in 1000.0..50000.0f64, k in 0.1..10.0f64) {
        let (a, _) = ej_from_junction(rn, 180.0).unwrap();
        let (b, _) = ej_from_junction(k * rn, 180.0).unwrap();
        prop_assert!((a * rn - b * k * rn).abs() <= 1e-9 * a * rn);
    }

    #[test]
    fn tp_xy_is_qc_over_omega(c in 50.0..150.0f64, cxy in 0.005..0.1f64, f in 3000.0..8000.0f64, re in 25.0..100.0f64) {
        let t = tp_xy(c, cxy, f, re).unwrap();
        let q = qc_xy(c, cxy, f, re).unwrap();
        let w_per_us = 2.0 * PI * f;
        prop_assert!((t * w_per_us - q).abs() <= 1e-9 * q);
    }

    #[test]
    fn tp_read_ratio_only(kappa in 0.1..2.0f64, g in 10.0..150.0f64, det in -3000.0..-200.0f64, k in 0.1..10.0f64) {
        let a = tp_read(kappa, g, det).unwrap();
        let b = tp_read(kappa, k * g, k * det).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn tp_combined_symmetric_and_bounded(a in 1.0..1000.0f64, b in 1.0..1000.0f64, c in 1.0..1000.0f64) {
        let ab = tp_combined(a, b).unwrap().tp_total;
        prop_assert!((ab - tp_combined(b, a).unwrap().tp_total).abs() <= 1e-12 * ab);
        prop_assert!(ab <= a.min(b));
        let left = tp_combined(ab, c).unwrap().tp_total;
        let right = tp_combined(a, tp_combined(b, c).unwrap().tp_total).unwrap().tp_total;
        prop_assert!((left - right).abs() <= 1e-12 * left);
    }

    #[test]
    fn coupling_exchange_symmetric(f1 in 3000.0..8000.0f64, f2 in 3000.0..8000.0f64, c12 in 0.5..10.0f64,
                                   c1 in 50.0..200.0f64, c2 in 50.0..500.0f64) {
        let a = coupling_strength(f1, f2, c12, c1, c2).unwrap();
        let b = coupling_strength(f2, f1, c12, c2, c1).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn rb_error_bijection(p in 1e-6..1.0f64, n in 1u32..3) {
        let d = 1u32 << n;
        let r = error_from_p(p, d).unwrap();
        prop_assert!((p_from_error(r, d).unwrap() - p).abs() <= 1e-12);
    }

    #[test]
    fn coherence_limit_monotone(t1 in 10.0..200.0f64, frac in 0.05..1.0f64, tau in 10.0..400.0f64, dt in 0.1..50.0f64) {
        let t2 = frac * 2.0 * t1;
        let rec = CoherenceRecord::new(t1, t2).unwrap();
        let base = coherence_limit(1, tau, &[rec]).unwrap();
        prop_assert!(coherence_limit(1, tau + dt, &[rec]).unwrap() < base);
        let longer_t1 = CoherenceRecord::new(t1 + dt, t2).unwrap();
        prop_assert!(coherence_limit(1, tau, &[longer_t1]).unwrap() >= base);
        let longer_t2 = CoherenceRecord::new(t1, (t2 + dt).min(2.0 * t1)).unwrap();
        prop_assert!(coherence_limit(1, tau, &[longer_t2]).unwrap() >= base);
    }

    #[test]
    fn coherence_limit_closed_forms(t1a in 10.0..200.0f64, fa in 0.05..1.0f64, t1b in 10.0..200.0f64, fb in 0.05..1.0f64, tau in 10.0..400.0f64) {
        let (t2a, t2b) = (fa * 2.0 * t1a, fb * 2.0 * t1b);
        let ra = CoherenceRecord::new(t1a, t2a).unwrap();
        let rb = CoherenceRecord::new(t1b, t2b).unwrap();
        let t = tau * 1e-3;
        let one = 1.0 - t / 3.0 * (0.5 / t1a + 1.0 / t2a);
        prop_assert!((coherence_limit(1, tau, &[ra]).unwrap() - one).abs() <= 1e-12);
        let two = 1.0 - 0.4 * t * (0.5 / t1a + 1.0 / t2a + 0.5 / t1b + 1.0 / t2b);
        prop_assert!((coherence_limit(2, tau, &[ra, rb]).unwrap() - two).abs() <= 1e-12);
    }

    #[test]
    fn square_symmetries_preserve_geometry(z in prop::array::uniform4(5.0..10.0f64)) {
        let base = module_geometry(&CornerMeasurements::new("R", "M", z)).unwrap();
        for perm in square_symmetries() {
            let zz = [z[perm[0]], z[perm[1]], z[perm[2]], z[perm[3]]];
            let g = module_geometry(&CornerMeasurements::new("R", "M", zz)).unwrap();
            prop_assert!((g.d - base.d).abs() < 1e-12);
            prop_assert!((g.delta_d - base.delta_d).abs() < 1e-12);
            prop_assert!((g.delta_theta - base.delta_theta).abs() < 1e-9);
        }
    }

    #[test]
    fn tilt_bounded_by_edge_and_diagonal(z in prop::array::uniform4(5.0..10.0f64)) {
        let c = CornerMeasurements::new("R", "M", z);
        let g = module_geometry(&c).unwrap();
        prop_assert!(g.delta_theta <= g.delta_d / c.edge_mm * 1e3 + 1e-9);
        prop_assert!(g.delta_theta >= g.delta_d / c.diagonal_mm * 1e3 - 1e-9);
    }

    #[test]
    fn loss_monotone_and_linear(ps in prop::collection::vec(0.0..1.0f64, 1..6), seed in prop::collection::vec(1e-7..1e-3f64, 6),
                                i in 0usize..6, k in 0.1..10.0f64) {
        let doms: Vec<LossDomain> = ps.iter().zip(&seed).enumerate().map(|(j, (p, t))| LossDomain::new(&format!("d{j}"), *p, *t)).collect();
        let q = loss_q(&doms).unwrap();
        let mut worse = doms.clone();
        let i = i % worse.len();
        worse[i].tan_delta *= 2.0;
        prop_assert!(loss_q(&worse).unwrap() <= q);
        let scaled: Vec<LossDomain> = doms.iter().map(|d| LossDomain::new(&d.name, d.p, k * d.tan_delta)).collect();
        let qs = loss_q(&scaled).unwrap();
        if q.is_finite() {
            prop_assert!((1.0 / qs - k / q).abs() <= 1e-12 * k / q);
        }
    }

    #[test]
    fn sensitivity_reduces_to_partials(ec in 100.0..400.0f64, ratio in 20.0..100.0f64, dec in 0.0..0.1f64, dej in 0.0..0.1f64) {
        let ej = ratio * ec;
        let full = frequency_sensitivity(&SensitivityInput { ec, ej, rel_dec: dec, rel_dej: dej }, Combination::WorstCase).unwrap();
        let only_ec = frequency_sensitivity(&SensitivityInput { ec, ej, rel_dec: dec, rel_dej: 0.0 }, Combination::WorstCase).unwrap();
        let only_ej = frequency_sensitivity(&SensitivityInput { ec, ej, rel_dec: 0.0, rel_dej: dej }, Combination::WorstCase).unwrap();
        prop_assert!((only_ec.total - full.ec_term).abs() < 1e-15);
        prop_assert!((only_ej.total - full.ej_term).abs() < 1e-15);
        let quad = frequency_sensitivity(&SensitivityInput { ec, ej, rel_dec: dec, rel_dej: 0.0 }, Combination::Quadrature).unwrap();
        prop_assert!((quad.total - only_ec.total).abs() < 1e-15);
    }
}

proptest! {
    #![proptest_config(cases(40))]

    #[test]
    fn eigenvalues_permutation_invariant(f in prop::array::uniform3(4000.0..8000.0f64), a in prop::array::uniform3(-250.0..-50.0f64),
                                         g in prop::array::uniform3(0.0..100.0f64)) {
        let modes = |order: [usize; 3]| {
            let names = ["x", "y", "z"];
            SystemDef {
                modes: order.iter().map(|&i| ModeDef::new(names[i], f[i], a[i], 3)).collect(),
                couplings: vec![
                    CouplingDef { a: "x".into(), b: "y".into(), g: g[0] },
                    CouplingDef { a: "y".into(), b: "z".into(), g: g[1] },
                    CouplingDef { a: "z".into(), b: "x".into(), g: g[2] },
                ],
            }
        };
        let base = levels(&modes([0, 1, 2]));
        for order in [[1, 0, 2], [2, 1, 0], [1, 2, 0]] {
            for (x, y) in levels(&modes(order)).iter().zip(&base) {
                prop_assert!((x - y).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn decoupled_levels_are_sums(f in prop::array::uniform3(3000.0..8000.0f64), a in prop::array::uniform3(-250.0..0.0f64),
                                 d in prop::array::uniform3(2usize..4)) {
        let sys = SystemDef {
            modes: (0..3).map(|i| ModeDef::new(format!("m{i}"), f[i], a[i], d[i])).collect(),
            couplings: vec![],
        };
        let ladder = |i: usize| (0..d[i]).map(move |n| n as f64 * f[i] + 0.5 * a[i] * (n * n.saturating_sub(1)) as f64);
        let mut sums: Vec<f64> = ladder(0)
            .flat_map(|x| ladder(1).flat_map(move |y| ladder(2).map(move |z| x + y + z)))
            .collect();
        sums.sort_by(f64::total_cmp);
        let lv = levels(&sys);
        prop_assert_eq!(lv.len(), sums.len());
        for (x, y) in lv.iter().zip(&sums) {
            prop_assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn truncation_stable(fq in 4000.0..5000.0f64, aq in -250.0..-150.0f64, fc in 5000.0..8000.0f64,
                         ac in -120.0..-50.0f64, g in 10.0..100.0f64) {
        let l0 = levels(&two_mode(fq, aq, 4, fc, ac, 4, g));
        for l in [levels(&two_mode(fq, aq, 5, fc, ac, 4, g)), levels(&two_mode(fq, aq, 4, fc, ac, 5, g))] {
            for (x, y) in l.iter().zip(&l0).take(4) {
                prop_assert!((x - y).abs() < 0.1, "moved {}", (x - y).abs());
            }
        }
    }

    #[test]
    fn fit_invariant_under_scale_and_rotation(fr in 4000.0..8000.0f64, lqc in 3.0..5.0f64, lqi in 4.0..6.0f64,
                                              k in 0.1..10.0f64, theta in -PI..PI) {
        let p = NotchParams::from_qi_qc(fr, 10f64.powf(lqi), 10f64.powf(lqc), 0.1);
        let lw = p.fr / p.ql;
        let freqs: Vec<f64> = (0..401).map(|i| fr - 6.0 * lw + 12.0 * lw * i as f64 / 400.0).collect();
        let trace = S21Trace::synthesize(&p, &freqs, 0.0, 0).unwrap();
        let rot = Complex64::from_polar(k, theta);
        let moved = S21Trace::new(freqs.clone(), trace.s21.iter().map(|z| z * rot).collect()).unwrap();
        let a = fit_trace(&trace).unwrap();
        let b = fit_trace(&moved).unwrap();
        prop_assert!((a.ql / b.ql - 1.0).abs() < 1e-4);
        prop_assert!((a.qc_mag / b.qc_mag - 1.0).abs() < 1e-4);
        prop_assert!((a.qi / b.qi - 1.0).abs() < 1e-4);
        prop_assert!((b.amplitude / (k * a.amplitude) - 1.0).abs() < 1e-4);
    }
}

#[test]
fn resonant_splitting_converges_to_2g() {
    for g in [5.0, 30.0, 80.0] {
        let curve = crate::spectrum::sweep(
            &(0..=200).map(|i| 5000.0 + g * (i as f64 - 100.0) / 50.0).collect::<Vec<_>>(),
            3,
            |f| Ok(two_mode(5000.0, -200.0, 2, f, -200.0, 2, g)),
        )
        .unwrap();
        let x = crate::spectrum::avoided_crossing(&curve, 1, 2).unwrap();
        assert!((x.min_gap / (2.0 * g) - 1.0).abs() < 1e-3, "{g}: {}", x.min_gap);
    }
}

#[test]
fn population_stats_permutation_invariant() {
    let mut recs = Datasets::bundled().metrology().unwrap();
    let policy = ExclusionPolicy { use_record_flags: true, ..Default::default() };
    let a = population_stats(&recs, &policy, GeometrySource::Tabulated).unwrap();
    recs.reverse();
    recs.rotate_left(7);
    let b = population_stats(&recs, &policy, GeometrySource::Tabulated).unwrap();
    for (x, y) in [(a.d, b.d), (a.delta_d, b.delta_d), (a.delta_theta, b.delta_theta)] {
        assert!((x.mean - y.mean).abs() < 1e-12 && (x.std - y.std).abs() < 1e-12);
    }
}
