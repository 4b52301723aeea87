//! Notch-type resonator transmission model and circle-fit extraction of
//! f_r, Q_l, Q_c, Q_i and the linewidth κ.
//!
//! Model (frequencies in MHz, delay in ns):
//!
//! S21(f) = a e^{iα} e^{−2πifτ} [1 − (Q_l/|Q_c|) e^{iφ} / (1 + 2iQ_l(f/f_r − 1))]
//!
//! Fit pipeline: cable delay from the phase slope (refined by minimizing the
//! circle residual), algebraic circle fit, phase-vs-frequency fit on the
//! centred circle for f_r and Q_l, then the off-resonant point fixes the
//! environment and the normalized circle yields |Q_c| and φ.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};
use crate::lsq::{levenberg_marquardt, LsqOptions};

pub const MIN_SAMPLES: usize = 7;
/// Minimum span in units of the fitted linewidth f_r/Q_l.
pub const MIN_SPAN_LINEWIDTHS: f64 = 3.0;

/// Parameters of the notch model including the environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NotchParams {
    pub fr: f64,
    pub ql: f64,
    pub qc_mag: f64,
    /// Impedance-mismatch angle, rad.
    pub phi: f64,
    pub amplitude: f64,
    /// Global phase offset α, rad.
    pub phase_offset: f64,
    pub delay_ns: f64,
}

impl NotchParams {
    /// Ideal environment (a = 1, α = 0, τ = 0) with Q_l from Q_i and Q_c.
    pub fn from_qi_qc(fr: f64, qi: f64, qc_mag: f64, phi: f64) -> Self {
        let ql = 1.0 / (1.0 / qi + phi.cos() / qc_mag);
        Self { fr, ql, qc_mag, phi, amplitude: 1.0, phase_offset: 0.0, delay_ns: 0.0 }
    }

    pub fn qi(&self) -> Result<f64> {
        qi_from(self.ql, self.qc_mag, self.phi)
    }

    fn validate(&self) -> Result<()> {
        require_positive("fr", self.fr)?;
        require_positive("Ql", self.ql)?;
        require_positive("|Qc|", self.qc_mag)?;
        Ok(())
    }
}

/// Frequency samples (MHz, strictly increasing) with complex S21.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S21Trace {
    pub freq_mhz: Vec<f64>,
    pub s21: Vec<Complex64>,
    pub noise_sigma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonatorFit {
    pub fr: f64,
    pub ql: f64,
    pub qc_mag: f64,
    pub phi: f64,
    /// Internal Q; +∞ when the internal loss is below what the fit resolves.
    #[serde(with = "crate::serde_inf")]
    pub qi: f64,
    /// |Q_c|/cos φ.
    #[serde(with = "crate::serde_inf")]
    pub qc_real: f64,
    pub kappa_over_2pi: f64,
    pub amplitude: f64,
    pub phase_offset: f64,
    pub delay_ns: f64,
    pub residual_rms: f64,
    /// False when 1/Q_l − cos φ/|Q_c| came out non-positive.
    pub qi_resolved: bool,
}

impl ResonatorFit {
    pub fn as_params(&self) -> NotchParams {
        NotchParams {
            fr: self.fr,
            ql: self.ql,
            qc_mag: self.qc_mag,
            phi: self.phi,
            amplitude: self.amplitude,
            phase_offset: self.phase_offset,
            delay_ns: self.delay_ns,
        }
    }
}

/// Evaluates the notch model at `f_mhz`.
pub fn s21_model(f_mhz: f64, p: &NotchParams) -> Complex64 {
    let env = Complex64::from_polar(p.amplitude, p.phase_offset - 2.0 * PI * f_mhz * p.delay_ns * 1e-3);
    let dip = Complex64::from_polar(p.ql / p.qc_mag, p.phi) / Complex64::new(1.0, 2.0 * p.ql * (f_mhz / p.fr - 1.0));
    env * (1.0 - dip)
}

/// 1/Q_i = 1/Q_l − cos φ/|Q_c|.
pub fn qi_from(ql: f64, qc_mag: f64, phi: f64) -> Result<f64> {
    require_positive("Ql", ql)?;
    if qc_mag.is_nan() || qc_mag <= 0.0 {
        return Err(Error::domain(format!("|Qc| must be positive, got {qc_mag}")));
    }
    let inv = 1.0 / ql - phi.cos() / qc_mag;
    if inv <= 0.0 {
        return Err(Error::domain(format!(
            "non-physical decomposition: 1/Ql = {:.6e} < cos(phi)/|Qc| = {:.6e}",
            1.0 / ql,
            phi.cos() / qc_mag
        )));
    }
    Ok(1.0 / inv)
}

impl S21Trace {
    pub fn new(freq_mhz: Vec<f64>, s21: Vec<Complex64>) -> Result<Self> {
        let t = Self { freq_mhz, s21, noise_sigma: None };
        t.validate()?;
        Ok(t)
    }

    /// Samples the model on `freq_mhz`, adding independent Gaussian noise of
    /// width `sigma` to both quadratures.
    pub fn synthesize(p: &NotchParams, freq_mhz: &[f64], sigma: f64, seed: u64) -> Result<Self> {
        p.validate()?;
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::domain("noise sigma must be non-negative"));
        }
        let mut s21: Vec<Complex64> = freq_mhz.iter().map(|&f| s21_model(f, p)).collect();
        if sigma > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let normal = Normal::new(0.0, sigma).map_err(|e| Error::domain(e.to_string()))?;
            for z in &mut s21 {
                *z += Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
            }
        }
        let mut t = Self::new(freq_mhz.to_vec(), s21)?;
        t.noise_sigma = (sigma > 0.0).then_some(sigma);
        Ok(t)
    }

    /// Reads CSV columns `freq_mhz,re,im` (header required).
    pub fn from_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            freq_mhz: f64,
            re: f64,
            im: f64,
        }
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
        let mut f = Vec::new();
        let mut z = Vec::new();
        for row in rdr.deserialize::<Row>() {
            let row = row?;
            f.push(row.freq_mhz);
            z.push(Complex64::new(row.re, row.im));
        }
        Self::new(f, z)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq_mhz,re,im\n");
        for (f, z) in self.freq_mhz.iter().zip(&self.s21) {
            out.push_str(&format!("{f},{},{}\n", z.re, z.im));
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if self.freq_mhz.len() != self.s21.len() {
            return Err(Error::validation("frequency and S21 sample counts differ"));
        }
        if self.freq_mhz.iter().any(|f| !f.is_finite() || *f <= 0.0)
            || self.s21.iter().any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::validation("trace contains non-finite or non-positive samples"));
        }
        if self.freq_mhz.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::validation("frequencies must be strictly increasing"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Circle {
    pub center: Complex64,
    pub radius: f64,
}

/// Pratt algebraic circle fit (Newton iteration on the characteristic
/// polynomial, after Chernov).
pub(crate) fn fit_circle(points: &[Complex64]) -> Option<Circle> {
    let n = points.len() as f64;
    let centroid = points.iter().sum::<Complex64>() / n;
    let (mut mxx, mut myy, mut mxy, mut mxz, mut myz, mut mzz) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let (x, y) = (p.re - centroid.re, p.im - centroid.im);
        let z = x * x + y * y;
        mxx += x * x;
        myy += y * y;
        mxy += x * y;
        mxz += x * z;
        myz += y * z;
        mzz += z * z;
    }
    let (mxx, myy, mxy, mxz, myz, mzz) = (mxx / n, myy / n, mxy / n, mxz / n, myz / n, mzz / n);
    let mz = mxx + myy;
    if !(mz > 0.0) {
        return None;
    }
    let cov_xy = mxx * myy - mxy * mxy;
    let a2 = 4.0 * cov_xy - 3.0 * mz * mz - mzz;
    let a1 = mzz * mz + 4.0 * cov_xy * mz - mxz * mxz - myz * myz - mz * mz * mz;
    let a0 = mxz * mxz * myy + myz * myz * mxx - mzz * cov_xy - 2.0 * mxz * myz * mxy + mz * mz * cov_xy;

    let mut x = 0.0f64;
    let mut y = f64::INFINITY;
    for _ in 0..50 {
        let y_new = a0 + x * (a1 + x * (a2 + 4.0 * x * x));
        if y_new.abs() > y.abs() {
            x = 0.0;
            break;
        }
        y = y_new;
        let dy = a1 + x * (2.0 * a2 + 16.0 * x * x);
        if dy == 0.0 {
            break;
        }
        let x_new = x - y / dy;
        if x_new == x || ((x_new - x) / x_new).abs() < 1e-14 {
            x = x_new;
            break;
        }
        x = x_new;
    }
    if x < 0.0 || !x.is_finite() {
        x = 0.0;
    }
    let det = x * x - x * mz + cov_xy;
    if det == 0.0 {
        return None;
    }
    let cx = (mxz * (myy - x) - myz * mxy) / det / 2.0;
    let cy = (myz * (mxx - x) - mxz * mxy) / det / 2.0;
    let radius = (cx * cx + cy * cy + mz + 2.0 * x).sqrt();
    let circle = Circle { center: centroid + Complex64::new(cx, cy), radius };
    (circle.radius.is_finite() && circle.center.re.is_finite() && circle.center.im.is_finite()).then_some(circle)
}

fn circle_residual(points: &[Complex64], c: &Circle) -> f64 {
    points.iter().map(|p| ((p - c.center).norm() - c.radius).powi(2)).sum()
}

fn remove_delay(freq: &[f64], s21: &[Complex64], delay_ns: f64) -> Vec<Complex64> {
    freq.iter().zip(s21).map(|(&f, &z)| z * Complex64::from_polar(1.0, 2.0 * PI * f * delay_ns * 1e-3)).collect()
}

fn unwrap(phases: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    let mut offset = 0.0;
    let mut prev: Option<f64> = None;
    for p in phases {
        if let Some(q) = prev {
            let d = p - q;
            if d > PI {
                offset -= 2.0 * PI;
            } else if d < -PI {
                offset += 2.0 * PI;
            }
        }
        prev = Some(p);
        out.push(p + offset);
    }
    out
}

/// Slope and intercept of an ordinary least-squares line.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let sxx: f64 = x.iter().map(|a| (a - xm).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, ym - slope * xm)
}

/// Initial delay from the phase slope of the outer tenth on each side.
fn delay_from_phase_slope(freq: &[f64], s21: &[Complex64]) -> f64 {
    let n = freq.len();
    let edge = (n / 10).max(2).min(n / 2);
    let phase = unwrap(s21.iter().map(|z| z.arg()));
    let idx: Vec<usize> = (0..edge).chain(n - edge..n).collect();
    let xs: Vec<f64> = idx.iter().map(|&i| freq[i]).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| phase[i]).collect();
    let (slope, _) = linear_fit(&xs, &ys);
    -slope / (2.0 * PI) * 1e3
}

/// Refines the delay by minimizing the circle residual: a coarse scan
/// followed by golden-section search around the best scan point.
fn refine_delay(freq: &[f64], s21: &[Complex64], tau0: f64) -> f64 {
    let span = freq[freq.len() - 1] - freq[0];
    let half_width = 0.5e3 / span;
    let cost = |tau: f64| {
        let pts = remove_delay(freq, s21, tau);
        fit_circle(&pts).map_or(f64::INFINITY, |c| circle_residual(&pts, &c))
    };
    let steps = 40;
    let h = 2.0 * half_width / steps as f64;
    let (mut best_tau, mut best) = (tau0, cost(tau0));
    for i in 0..=steps {
        let t = tau0 - half_width + i as f64 * h;
        let c = cost(t);
        if c < best {
            best = c;
            best_tau = t;
        }
    }
    let (mut lo, mut hi) = (best_tau - h, best_tau + h);
    let gr = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - gr * (hi - lo);
    let mut x2 = lo + gr * (hi - lo);
    let (mut f1, mut f2) = (cost(x1), cost(x2));
    for _ in 0..200 {
        if (hi - lo).abs() <= 1e-13 * (1.0 + best_tau.abs()) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = cost(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = cost(x2);
        }
    }
    let tau = 0.5 * (lo + hi);
    if cost(tau) <= best {
        tau
    } else {
        best_tau
    }
}

struct PhaseFit {
    theta0: f64,
    ql: f64,
    fr: f64,
}

/// Fits θ(f) = θ0 + 2 atan(2Q_l(1 − f/f_r)) to the unwrapped phase of the
/// points about the circle centre.
fn fit_phase(freq: &[f64], theta: &[f64], fr0: f64, ql0: f64, theta00: f64) -> Result<PhaseFit> {
    let w0 = fr0 / ql0;
    let n = freq.len();
    let eval = |p: &DVector<f64>| {
        let theta0 = p[0];
        let ql = ql0 * p[1];
        let fr = fr0 + p[2] * w0;
        if !(ql > 0.0 && fr > 0.0) {
            return None;
        }
        let mut r = DVector::zeros(n);
        let mut j = DMatrix::zeros(n, 3);
        for k in 0..n {
            let u = 2.0 * ql * (1.0 - freq[k] / fr);
            let dth_du = 2.0 / (1.0 + u * u);
            r[k] = theta[k] - (theta0 + 2.0 * u.atan());
            j[(k, 0)] = -1.0;
            j[(k, 1)] = -dth_du * 2.0 * (1.0 - freq[k] / fr) * ql0;
            j[(k, 2)] = -dth_du * 2.0 * ql * freq[k] / (fr * fr) * w0;
        }
        Some((r, j))
    };
    let sol = levenberg_marquardt(eval, DVector::from_vec(vec![theta00, 1.0, 0.0]), LsqOptions::default())?;
    Ok(PhaseFit { theta0: sol.params[0], ql: ql0 * sol.params[1], fr: fr0 + sol.params[2] * w0 })
}

/// Crossing of `target` by the unwrapped phase, linearly interpolated.
fn crossing(freq: &[f64], theta: &[f64], target: f64) -> Option<f64> {
    theta.windows(2).zip(freq.windows(2)).find_map(|(t, f)| {
        let (a, b) = (t[0] - target, t[1] - target);
        (a == 0.0 || a.signum() != b.signum()).then(|| f[0] + (f[1] - f[0]) * a / (a - b))
    })
}

/// Circle-fit extraction of the resonator parameters from a notch trace.
pub fn fit_trace(trace: &S21Trace) -> Result<ResonatorFit> {
    trace.validate()?;
    let freq = &trace.freq_mhz;
    let n = freq.len();
    if n < MIN_SAMPLES {
        return Err(Error::validation(format!("need at least {MIN_SAMPLES} samples, got {n}")));
    }

    // a trace with no resonance is a pure delay line: constant modulus and
    // linear phase
    let tau_lin = {
        let phase = unwrap(trace.s21.iter().map(|z| z.arg()));
        -linear_fit(freq, &phase).0 / (2.0 * PI) * 1e3
    };
    let flat = remove_delay(freq, &trace.s21, tau_lin);
    let mean_mag = flat.iter().map(|z| z.norm()).sum::<f64>() / n as f64;
    let mean_z = flat.iter().sum::<Complex64>() / n as f64;
    let spread = flat.iter().map(|z| (z - mean_z).norm()).fold(0.0, f64::max);
    if !(mean_mag > 0.0) || spread <= 1e-6 * mean_mag {
        return Err(Error::Degenerate("trace shows no resonance feature".into()));
    }

    let tau0 = delay_from_phase_slope(freq, &trace.s21);
    let delay_ns = refine_delay(freq, &trace.s21, tau0);
    let pts = remove_delay(freq, &trace.s21, delay_ns);
    let circle = fit_circle(&pts).ok_or_else(|| Error::Degenerate("circle fit failed".into()))?;
    if circle.radius <= 1e-6 * mean_mag {
        return Err(Error::Degenerate("resonance circle has vanishing radius".into()));
    }

    let theta = unwrap(pts.iter().map(|z| (z - circle.center).arg()));
    // off-resonant point: both ends of the trace approach it
    let p_off0 = 0.5 * (pts[0] + pts[n - 1]);
    let i_res = (0..n).max_by(|&a, &b| (pts[a] - p_off0).norm().total_cmp(&(pts[b] - p_off0).norm())).unwrap_or(n / 2);
    let fr0 = freq[i_res];
    let theta00 = theta[i_res];
    let span = freq[n - 1] - freq[0];
    let ql0 = match (crossing(freq, &theta, theta00 + PI / 2.0), crossing(freq, &theta, theta00 - PI / 2.0)) {
        (Some(a), Some(b)) if (b - a).abs() > 0.0 => fr0 / (b - a).abs(),
        _ => fr0 / (span / 10.0),
    };
    let ph = fit_phase(freq, &theta, fr0, ql0, theta00)?;
    if !(ph.fr >= freq[0] && ph.fr <= freq[n - 1]) {
        return Err(Error::Degenerate(format!("fitted resonance {:.6} MHz lies outside the trace", ph.fr)));
    }
    let linewidth = ph.fr / ph.ql;
    if span < MIN_SPAN_LINEWIDTHS * linewidth {
        return Err(Error::validation(format!(
            "span {span:.6} MHz covers fewer than {MIN_SPAN_LINEWIDTHS} linewidths ({linewidth:.6} MHz)"
        )));
    }
    let max_step = freq.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    if max_step >= linewidth {
        return Err(Error::validation(format!(
            "frequency step {max_step:.6} MHz is not smaller than the linewidth {linewidth:.6} MHz"
        )));
    }

    let p_off = circle.center + Complex64::from_polar(circle.radius, ph.theta0 + PI);
    let amplitude = p_off.norm();
    let phase_offset = p_off.arg();
    let r_norm = circle.radius / amplitude;
    let center_norm = circle.center / p_off;
    let phi = (Complex64::new(1.0, 0.0) - center_norm).arg();
    let qc_mag = ph.ql / (2.0 * r_norm);
    let (qi, qi_resolved) = match qi_from(ph.ql, qc_mag, phi) {
        Ok(q) => (q, true),
        Err(_) => (f64::INFINITY, false),
    };
    let qc_real = qc_mag / phi.cos();
    let mut fit = ResonatorFit {
        fr: ph.fr,
        ql: ph.ql,
        qc_mag,
        phi,
        qi,
        qc_real,
        kappa_over_2pi: ph.fr * phi.cos() / qc_mag,
        amplitude,
        phase_offset,
        delay_ns,
        residual_rms: 0.0,
        qi_resolved,
    };
    let model = fit.as_params();
    let ss: f64 = freq.iter().zip(&trace.s21).map(|(&f, z)| (z - s21_model(f, &model)).norm_sqr()).sum();
    fit.residual_rms = (ss / n as f64).sqrt();
    Ok(fit)
}
