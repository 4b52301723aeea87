//! Truncated multi-mode Hamiltonians for transmon–resonator–coupler systems,
//! dense diagonalization, flux sweeps and avoided-crossing extraction.
//!
//! Each mode is an anharmonic ladder E_n = n f01 + (α/2) n(n−1); every
//! coupling contributes g (a†+a)(b†+b) without the rotating-wave
//! approximation. All energies are in MHz.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::transmon::coupler_frequency;

/// Default cap on the product of mode dimensions.
pub const DEFAULT_DIM_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeDef {
    pub label: String,
    pub f01: f64,
    /// Anharmonicity; 0 for a harmonic mode.
    #[serde(default)]
    pub alpha: f64,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingDef {
    pub a: String,
    pub b: String,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDef {
    pub modes: Vec<ModeDef>,
    #[serde(default)]
    pub couplings: Vec<CouplingDef>,
}

/// Sorted eigenvalue tracks over a one-parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCurve {
    /// Sweep coordinate (flux in Φ0 for [`flux_sweep`]).
    pub sweep: Vec<f64>,
    /// `levels[p]` holds the lowest k eigenvalues at sweep point p, ascending.
    pub levels: Vec<Vec<f64>>,
}

/// Minimum separation between two tracks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub min_gap: f64,
    pub at: f64,
}

impl ModeDef {
    pub fn new(label: impl Into<String>, f01: f64, alpha: f64, dim: usize) -> Self {
        Self { label: label.into(), f01, alpha, dim }
    }

    fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::validation(format!("mode `{}` needs dim >= 2", self.label)));
        }
        require_positive(&format!("f01 of mode `{}`", self.label), self.f01)?;
        if !self.alpha.is_finite() {
            return Err(Error::domain(format!("alpha of mode `{}` is not finite", self.label)));
        }
        Ok(())
    }
}

impl SystemDef {
    pub fn from_json(json: &str) -> Result<Self> {
        let sys: SystemDef = serde_json::from_str(json)?;
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::validation("system has no modes"));
        }
        let mut labels = BTreeSet::new();
        for m in &self.modes {
            m.validate()?;
            if !labels.insert(m.label.as_str()) {
                return Err(Error::validation(format!("duplicate mode label `{}`", m.label)));
            }
        }
        let mut pairs = BTreeSet::new();
        for c in &self.couplings {
            for l in [&c.a, &c.b] {
                if !labels.contains(l.as_str()) {
                    return Err(Error::validation(format!("coupling references unknown mode `{l}`")));
                }
            }
            if c.a == c.b {
                return Err(Error::validation(format!("self-coupling on `{}`", c.a)));
            }
            if !c.g.is_finite() {
                return Err(Error::domain("coupling strength must be finite"));
            }
            let key = if c.a < c.b { (c.a.as_str(), c.b.as_str()) } else { (c.b.as_str(), c.a.as_str()) };
            if !pairs.insert(key) {
                return Err(Error::validation(format!("duplicate coupling {}-{}", c.a, c.b)));
            }
        }
        Ok(())
    }

    pub fn total_dim(&self) -> usize {
        self.modes.iter().map(|m| m.dim).product()
    }

    fn mode_index(&self, label: &str) -> Result<usize> {
        self.modes
            .iter()
            .position(|m| m.label == label)
            .ok_or_else(|| Error::validation(format!("no mode labelled `{label}`")))
    }

    /// Copy of the system with one mode's f01 replaced.
    pub fn with_frequency(&self, label: &str, f01: f64) -> Result<Self> {
        let i = self.mode_index(label)?;
        let mut out = self.clone();
        out.modes[i].f01 = f01;
        Ok(out)
    }
}

/// Uncoupled ladder n f01 + (α/2) n(n−1) for n = 0..dim.
pub fn mode_levels(mode: &ModeDef) -> Vec<f64> {
    (0..mode.dim)
        .map(|n| {
            let n = n as f64;
            n * mode.f01 + 0.5 * mode.alpha * n * (n - 1.0)
        })
        .collect()
}

pub fn build_hamiltonian(system: &SystemDef) -> Result<DMatrix<f64>> {
    build_hamiltonian_with_cap(system, DEFAULT_DIM_CAP)
}

pub fn build_hamiltonian_with_cap(system: &SystemDef, cap: usize) -> Result<DMatrix<f64>> {
    system.validate()?;
    let dims: Vec<usize> = system.modes.iter().map(|m| m.dim).collect();
    let total = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).unwrap_or(usize::MAX);
    if total > cap {
        return Err(Error::DimensionCap { dim: total, cap });
    }
    // row-major strides: the first mode is the most significant digit
    let mut strides = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let ladders: Vec<Vec<f64>> = system.modes.iter().map(mode_levels).collect();
    let couplings: Vec<(usize, usize, f64)> = system
        .couplings
        .iter()
        .map(|c| Ok((system.mode_index(&c.a)?, system.mode_index(&c.b)?, c.g)))
        .collect::<Result<_>>()?;

    let mut h = DMatrix::<f64>::zeros(total, total);
    let mut occ = vec![0usize; dims.len()];
    for state in 0..total {
        let mut rem = state;
        for k in 0..dims.len() {
            occ[k] = rem / strides[k];
            rem %= strides[k];
        }
        h[(state, state)] = occ.iter().zip(&ladders).map(|(&n, l)| l[n]).sum();

        for &(a, b, g) in &couplings {
            let (na, nb) = (occ[a] as isize, occ[b] as isize);
            for da in [-1isize, 1] {
                let ma = na + da;
                if ma < 0 || ma >= dims[a] as isize {
                    continue;
                }
                for db in [-1isize, 1] {
                    let mb = nb + db;
                    if mb < 0 || mb >= dims[b] as isize {
                        continue;
                    }
                    // ⟨m|(a†+a)|n⟩ = √max(m, n) for |m − n| = 1
                    let amp = (na.max(ma) as f64).sqrt() * (nb.max(mb) as f64).sqrt();
                    let target = (state as isize + da * strides[a] as isize + db * strides[b] as isize) as usize;
                    h[(target, state)] += g * amp;
                }
            }
        }
    }
    Ok(h)
}

fn check_symmetric(h: &DMatrix<f64>) -> Result<()> {
    if !h.is_square() {
        return Err(Error::validation("hamiltonian must be square"));
    }
    let scale = h.amax().max(f64::MIN_POSITIVE);
    for i in 0..h.nrows() {
        for j in (i + 1)..h.ncols() {
            if (h[(i, j)] - h[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::validation(format!("hamiltonian not symmetric at ({i}, {j})")));
            }
        }
    }
    if h.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("hamiltonian has non-finite entries"));
    }
    Ok(())
}

/// Ascending eigenvalues with matching eigenvectors (as columns).
pub fn eigensystem(h: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    check_symmetric(h)?;
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(h.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Ascending eigenvalues of a real symmetric matrix.
pub fn eigenlevels(h: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(eigensystem(h)?.0)
}

/// Diagonalizes `build(x)` at every grid point and keeps the lowest `k`
/// levels. Points are evaluated in parallel; output follows grid order.
pub fn sweep<F>(grid: &[f64], k: usize, build: F) -> Result<LevelCurve>
where
    F: Fn(f64) -> Result<SystemDef> + Sync,
{
    if grid.is_empty() {
        return Err(Error::validation("sweep grid is empty"));
    }
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::validation("sweep grid has non-finite values"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation("sweep grid must be strictly increasing"));
    }
    if k == 0 {
        return Err(Error::validation("at least one track must be requested"));
    }
    let levels = grid
        .par_iter()
        .map(|&x| {
            let sys = build(x)?;
            if k > sys.total_dim() {
                return Err(Error::validation(format!(
                    "{k} tracks requested but the truncated space has only {} states",
                    sys.total_dim()
                )));
            }
            let mut ev = eigenlevels(&build_hamiltonian(&sys)?)?;
            ev.truncate(k);
            Ok(ev)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LevelCurve { sweep: grid.to_vec(), levels })
}

/// `n` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::validation("a sweep grid needs at least 2 points"));
    }
    if !(start.is_finite() && stop.is_finite() && stop > start) {
        return Err(Error::validation(format!("grid bounds must satisfy start < stop, got {start}..{stop}")));
    }
    Ok((0..n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect())
}

/// Sweeps the coupler flux: at each point the coupler's f01 is replaced by
/// the SQUID frequency at that flux and the system is re-diagonalized.
pub fn flux_sweep(template: &SystemDef, coupler: &str, fc0: f64, flux_grid: &[f64], k: usize) -> Result<LevelCurve> {
    template.validate()?;
    template.mode_index(coupler)?;
    require_positive("zero-bias coupler frequency", fc0)?;
    sweep(flux_grid, k, |flux| {
        let fc = coupler_frequency(fc0, flux)?;
        if fc <= 0.0 {
            return Err(Error::domain(format!("coupler frequency vanishes at flux {flux}")));
        }
        template.with_frequency(coupler, fc)
    })
}

impl LevelCurve {
    pub fn track_count(&self) -> usize {
        self.levels.first().map_or(0, Vec::len)
    }

    pub fn track(&self, i: usize) -> Result<Vec<f64>> {
        if i >= self.track_count() {
            return Err(Error::validation(format!("track {i} not present")));
        }
        Ok(self.levels.iter().map(|l| l[i]).collect())
    }

    /// CSV with a header row `flux,lambda0,lambda1,...`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("flux");
        for i in 0..self.track_count() {
            let _ = write!(out, ",lambda{i}");
        }
        out.push('\n');
        for (x, lv) in self.sweep.iter().zip(&self.levels) {
            let _ = write!(out, "{x}");
            for v in lv {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Minimum |λ_j − λ_i| over the sweep, refined by a parabola through the
/// discrete minimum and its two neighbours.
pub fn avoided_crossing(curve: &LevelCurve, i: usize, j: usize) -> Result<Crossing> {
    if i == j {
        return Err(Error::validation("avoided crossing needs two distinct tracks"));
    }
    let (ti, tj) = (curve.track(i)?, curve.track(j)?);
    let gaps: Vec<f64> = ti.iter().zip(&tj).map(|(a, b)| (b - a).abs()).collect();
    let n = gaps.len();
    if n < 3 {
        return Err(Error::Inconclusive("need at least 3 sweep points".into()));
    }
    let m = (0..n).min_by(|&a, &b| gaps[a].total_cmp(&gaps[b])).unwrap_or(0);
    if m == 0 || m == n - 1 {
        return Err(Error::Inconclusive(format!(
            "minimum gap {:.4} MHz lies on the sweep boundary at {}",
            gaps[m], curve.sweep[m]
        )));
    }
    let (x0, x1, x2) = (curve.sweep[m - 1], curve.sweep[m], curve.sweep[m + 1]);
    let (y0, y1, y2) = (gaps[m - 1], gaps[m], gaps[m + 1]);
    // Newton divided differences for the interpolating parabola
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curvature = (d12 - d01) / (x2 - x0);
    if curvature <= 0.0 {
        return Ok(Crossing { min_gap: y1, at: x1 });
    }
    let at = 0.5 * (x0 + x1) - d01 / (2.0 * curvature);
    let at = at.clamp(x0, x2);
    let min_gap = y0 + d01 * (at - x0) + curvature * (at - x0) * (at - x1);
    Ok(Crossing { min_gap, at })
}
