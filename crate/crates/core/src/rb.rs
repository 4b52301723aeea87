//! Randomized-benchmarking decay fits, interleaved gate errors and
//! coherence-limited fidelity bounds.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::lsq::{levenberg_marquardt, LsqOptions};

pub use crate::stats::{series_stats, SeriesStats};

/// Minimum number of distinct sequence lengths for a three-parameter fit.
pub const MIN_LENGTHS: usize = 3;

/// Sequence fidelities grouped by Clifford sequence length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RBDataset {
    /// Strictly increasing sequence lengths.
    pub lengths: Vec<u32>,
    /// One entry per random sequence at each length.
    pub samples: Vec<Vec<f64>>,
    /// Hilbert-space dimension 2^N.
    pub dim: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RBFitResult {
    pub a: f64,
    pub b: f64,
    pub p: f64,
    pub r: f64,
    pub a_se: f64,
    pub b_se: f64,
    pub p_se: f64,
    pub r_se: f64,
    pub dim: u32,
    pub n_points: usize,
}

/// T1 and T2* of one qubit together with the pure-dephasing time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceRecord {
    pub t1: f64,
    pub t2_star: f64,
    #[serde(with = "crate::serde_inf")]
    pub t_phi: f64,
    /// Set when T2* > 2T1 forced T_φ to +∞.
    pub t_phi_clamped: bool,
}

impl CoherenceRecord {
    pub fn new(t1: f64, t2_star: f64) -> Result<Self> {
        let (t_phi, t_phi_clamped) = tphi_checked(t1, t2_star)?;
        Ok(Self { t1, t2_star, t_phi, t_phi_clamped })
    }

    /// Total decoherence rate 1/T1 + 1/T_φ in 1/μs.
    pub fn rate(&self) -> f64 {
        1.0 / self.t1 + 1.0 / self.t_phi
    }
}

/// Dimension 2^N for an N-qubit register.
pub fn dimension(n_qubits: u32) -> Result<u32> {
    if n_qubits == 0 || n_qubits > 16 {
        return Err(Error::domain(format!("qubit count must be in 1..=16, got {n_qubits}")));
    }
    Ok(1 << n_qubits)
}

fn check_dim(d: u32) -> Result<()> {
    if d < 2 {
        return Err(Error::domain(format!("dimension must be at least 2, got {d}")));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::domain(format!("decay parameter must lie in (0, 1], got {p}")));
    }
    Ok(())
}

/// F(m) = A·p^m + B.
pub fn decay_model(m: f64, a: f64, b: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    if !(m >= 0.0) {
        return Err(Error::domain(format!("sequence length must be non-negative, got {m}")));
    }
    Ok(a * p.powf(m) + b)
}

/// Average error per Clifford r = (1 − p)(d − 1)/d.
pub fn error_from_p(p: f64, d: u32) -> Result<f64> {
    check_p(p)?;
    check_dim(d)?;
    let d = d as f64;
    Ok((1.0 - p) * (d - 1.0) / d)
}

/// Inverse of [`error_from_p`]: p = 1 − r·d/(d − 1).
pub fn p_from_error(r: f64, d: u32) -> Result<f64> {
    check_dim(d)?;
    let df = d as f64;
    if !(r >= 0.0 && r < (df - 1.0) / df) {
        return Err(Error::domain(format!("error per gate must lie in [0, (d-1)/d), got {r}")));
    }
    Ok(1.0 - r * df / (df - 1.0))
}

impl RBDataset {
    pub fn new(lengths: Vec<u32>, samples: Vec<Vec<f64>>, dim: u32) -> Result<Self> {
        let ds = Self { lengths, samples, dim };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.dim)?;
        if self.lengths.len() != self.samples.len() {
            return Err(Error::validation("lengths and sample groups differ in count"));
        }
        if self.lengths.len() < MIN_LENGTHS {
            return Err(Error::validation(format!(
                "need at least {MIN_LENGTHS} distinct sequence lengths, got {}",
                self.lengths.len()
            )));
        }
        if self.lengths[0] == 0 || self.lengths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation("sequence lengths must be positive and strictly increasing"));
        }
        for (m, group) in self.lengths.iter().zip(&self.samples) {
            if group.is_empty() {
                return Err(Error::validation(format!("no sequences at length {m}")));
            }
            if let Some(f) = group.iter().find(|f| !(0.0..=1.0).contains(*f)) {
                return Err(Error::validation(format!("fidelity {f} at length {m} is outside [0, 1]")));
            }
        }
        Ok(())
    }

    /// Reads CSV columns `m,sequence_index,fidelity`; rows may come in any
    /// order and are grouped by length.
    pub fn from_csv<R: std::io::Read>(reader: R, dim: u32) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            m: u32,
            sequence_index: u32,
            fidelity: f64,
        }
        let mut groups: BTreeMap<u32, BTreeMap<u32, f64>> = BTreeMap::new();
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
        for row in rdr.deserialize::<Row>() {
            let row = row?;
            if groups.entry(row.m).or_default().insert(row.sequence_index, row.fidelity).is_some() {
                return Err(Error::validation(format!(
                    "duplicate sequence {} at length {}",
                    row.sequence_index, row.m
                )));
            }
        }
        let lengths = groups.keys().copied().collect();
        let samples = groups.into_values().map(|g| g.into_values().collect()).collect();
        Self::new(lengths, samples, dim)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,sequence_index,fidelity\n");
        for (m, group) in self.lengths.iter().zip(&self.samples) {
            for (i, f) in group.iter().enumerate() {
                out.push_str(&format!("{m},{i},{f}\n"));
            }
        }
        out
    }

    fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.lengths.iter().zip(&self.samples).flat_map(|(&m, g)| g.iter().map(move |&f| (m as f64, f)))
    }

    fn mean_at(&self, i: usize) -> f64 {
        self.samples[i].iter().sum::<f64>() / self.samples[i].len() as f64
    }
}

/// Least-squares fit of F(m) = A·p^m + B over every sequence.
pub fn fit_reference(ds: &RBDataset) -> Result<RBFitResult> {
    ds.validate()?;
    let (ms, fs): (Vec<f64>, Vec<f64>) = ds.points().unzip();
    let last = ds.lengths.len() - 1;
    let (m_lo, m_hi) = (ds.lengths[0] as f64, ds.lengths[last] as f64);
    let (f_lo, f_hi) = (ds.mean_at(0), ds.mean_at(last));
    let a0 = f_lo - f_hi;
    let b0 = f_hi;
    let p0 = if f_lo > 0.0 && f_hi > 0.0 && f_hi < f_lo { (f_hi / f_lo).ln() / (m_hi - m_lo) } else { -1.0 / m_hi }
        .exp()
        .clamp(1e-6, 1.0 - 1e-12);
    let a0 = if a0 == 0.0 { 0.5 } else { a0 };

    let n = ms.len();
    let eval = |q: &DVector<f64>| {
        let (a, b, p) = (q[0], q[1], q[2]);
        if !(p > 0.0) {
            return None;
        }
        let mut r = DVector::zeros(n);
        let mut j = DMatrix::zeros(n, 3);
        for k in 0..n {
            let pm = p.powf(ms[k]);
            r[k] = fs[k] - (a * pm + b);
            j[(k, 0)] = -pm;
            j[(k, 1)] = -1.0;
            j[(k, 2)] = -a * ms[k] * p.powf(ms[k] - 1.0);
        }
        Some((r, j))
    };
    let sol = levenberg_marquardt(eval, DVector::from_vec(vec![a0, b0, p0]), LsqOptions::default())?;
    let (a, b, p) = (sol.params[0], sol.params[1], sol.params[2]);
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Inconclusive(format!("fitted decay parameter {p} lies outside (0, 1]")));
    }
    let se = sol.std_errors();
    let d = ds.dim as f64;
    Ok(RBFitResult {
        a,
        b,
        p,
        r: error_from_p(p, ds.dim)?,
        a_se: se[0],
        b_se: se[1],
        p_se: se[2],
        r_se: se[2] * (d - 1.0) / d,
        dim: ds.dim,
        n_points: n,
    })
}

/// Interleaved gate error r = (d − 1)(1 − p_int/p_ref)/d. A faster
/// interleaved decay than the reference is reported as a negative error.
pub fn interleaved_error(p_ref: f64, p_int: f64, d: u32) -> Result<f64> {
    check_p(p_ref)?;
    check_p(p_int)?;
    check_dim(d)?;
    if p_int > p_ref {
        log::warn!("interleaved decay {p_int} exceeds reference {p_ref}; gate error is negative");
    }
    let d = d as f64;
    Ok((d - 1.0) * (1.0 - p_int / p_ref) / d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterleavedResult {
    pub p_ref: f64,
    pub p_int: f64,
    pub r_gate: f64,
    /// First-order propagation of the two decay standard errors.
    pub r_gate_se: f64,
}

/// Gate error from a reference and an interleaved fit of the same dimension.
pub fn interleaved_from_fits(reference: &RBFitResult, interleaved: &RBFitResult) -> Result<InterleavedResult> {
    if reference.dim != interleaved.dim {
        return Err(Error::validation("reference and interleaved fits have different dimensions"));
    }
    let r_gate = interleaved_error(reference.p, interleaved.p, reference.dim)?;
    let d = reference.dim as f64;
    let ratio = interleaved.p / reference.p;
    let rel = ((interleaved.p_se / interleaved.p).powi(2) + (reference.p_se / reference.p).powi(2)).sqrt();
    Ok(InterleavedResult { p_ref: reference.p, p_int: interleaved.p, r_gate, r_gate_se: (d - 1.0) / d * ratio * rel })
}

fn tphi_checked(t1: f64, t2_star: f64) -> Result<(f64, bool)> {
    require_positive("T1", t1)?;
    require_positive("T2*", t2_star)?;
    let rate = 1.0 / t2_star - 1.0 / (2.0 * t1);
    if rate < 0.0 {
        log::warn!("T2* = {t2_star} us exceeds 2*T1 = {} us; treating dephasing as absent", 2.0 * t1);
        return Ok((f64::INFINITY, true));
    }
    Ok((if rate == 0.0 { f64::INFINITY } else { 1.0 / rate }, false))
}

/// Pure-dephasing time from 1/T_φ = 1/T2* − 1/(2T1), in the units of the
/// inputs. +∞ at the lifetime limit and, with a warning, beyond it.
pub fn tphi_from(t1: f64, t2_star: f64) -> Result<f64> {
    tphi_checked(t1, t2_star).map(|(t, _)| t)
}

/// Incoherent-error bound on the average fidelity of an N-qubit gate:
/// F = 1 − dτ/(2(d+1))·Σ(1/T1 + 1/T_φ). Gate time in ns, lifetimes in μs.
pub fn coherence_limit(n_qubits: u32, gate_time_ns: f64, records: &[CoherenceRecord]) -> Result<f64> {
    let d = dimension(n_qubits)? as f64;
    if records.len() != n_qubits as usize {
        return Err(Error::validation(format!(
            "{} coherence records supplied for a {n_qubits}-qubit gate",
            records.len()
        )));
    }
    if !(gate_time_ns.is_finite() && gate_time_ns >= 0.0) {
        return Err(Error::domain(format!("gate time must be non-negative, got {gate_time_ns}")));
    }
    let tau_us = gate_time_ns * 1e-3;
    let rate: f64 = records.iter().map(CoherenceRecord::rate).sum();
    Ok(1.0 - d * tau_us / (2.0 * (d + 1.0)) * rate)
}

/// Seeded synthetic dataset: A·p^m + B plus Gaussian noise of width
/// `noise_sigma`, clamped to [0, 1].
#[allow(clippy::too_many_arguments)]
pub fn synth_dataset(
    p: f64,
    a: f64,
    b: f64,
    lengths: &[u32],
    sequences_per_length: usize,
    noise_sigma: f64,
    dim: u32,
    seed: u64,
) -> Result<RBDataset> {
    check_p(p)?;
    if sequences_per_length == 0 {
        return Err(Error::validation("need at least one sequence per length"));
    }
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(Error::domain("noise sigma must be non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_sigma).map_err(|e| Error::domain(e.to_string()))?;
    let samples = lengths
        .iter()
        .map(|&m| {
            let ideal = a * p.powf(m as f64) + b;
            (0..sequences_per_length)
                .map(|_| {
                    let noise = if noise_sigma > 0.0 { normal.sample(&mut rng) } else { 0.0 };
                    (ideal + noise).clamp(0.0, 1.0)
                })
                .collect()
        })
        .collect();
    RBDataset::new(lengths.to_vec(), samples, dim)
}
