//! Small dense Levenberg–Marquardt solver shared by the RB and resonator
//! fits. Problems here have at most a handful of parameters, so the normal
//! equations are formed explicitly.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LsqOptions {
    pub max_iter: usize,
    /// Relative parameter-step tolerance.
    pub xtol: f64,
    /// Relative cost-reduction tolerance.
    pub ftol: f64,
}

impl Default for LsqOptions {
    fn default() -> Self {
        Self { max_iter: 500, xtol: 1e-13, ftol: 1e-15 }
    }
}

#[derive(Debug, Clone)]
pub struct LsqSolution {
    pub params: DVector<f64>,
    /// Sum of squared residuals at the solution.
    pub cost: f64,
    pub n_obs: usize,
    pub iterations: usize,
    /// Unscaled (JᵀJ)⁻¹ at the solution, if it is invertible.
    pub jtj_inv: Option<DMatrix<f64>>,
}

impl LsqSolution {
    /// Residual variance estimate cost/(n − k).
    pub fn residual_variance(&self) -> f64 {
        let dof = self.n_obs.saturating_sub(self.params.len());
        if dof == 0 {
            f64::NAN
        } else {
            self.cost / dof as f64
        }
    }

    /// Parameter covariance s²(JᵀJ)⁻¹.
    pub fn covariance(&self) -> Option<DMatrix<f64>> {
        self.jtj_inv.as_ref().map(|m| m * self.residual_variance())
    }

    /// Standard errors from the diagonal of the covariance.
    pub fn std_errors(&self) -> Vec<f64> {
        match self.covariance() {
            Some(c) => (0..c.nrows()).map(|i| c[(i, i)].max(0.0).sqrt()).collect(),
            None => vec![f64::NAN; self.params.len()],
        }
    }
}

/// Minimizes ‖r(p)‖². `eval` returns residuals and Jacobian, or `None` when
/// the trial parameters are infeasible (the step is then rejected).
pub fn levenberg_marquardt<F>(mut eval: F, p0: DVector<f64>, opts: LsqOptions) -> Result<LsqSolution>
where
    F: FnMut(&DVector<f64>) -> Option<(DVector<f64>, DMatrix<f64>)>,
{
    let k = p0.len();
    let (mut r, mut jac) =
        eval(&p0).ok_or_else(|| Error::NonConvergence("initial parameters are infeasible".into()))?;
    let n_obs = r.len();
    if n_obs < k {
        return Err(Error::validation(format!("{n_obs} observations cannot determine {k} parameters")));
    }
    let mut p = p0;
    let mut cost = r.norm_squared();
    if !cost.is_finite() {
        return Err(Error::NonConvergence("non-finite residuals at the initial point".into()));
    }
    let mut lambda = 1e-3;

    for iter in 0..opts.max_iter {
        let jtj = jac.tr_mul(&jac);
        let grad = jac.tr_mul(&r);
        if grad.amax() == 0.0 {
            return Ok(finish(p, cost, n_obs, iter, &jtj));
        }

        let mut accepted = false;
        while lambda < 1e20 {
            let mut a = jtj.clone();
            for i in 0..k {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-300);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&grad));
            let trial = &p + &step;
            let Some((rt, jt)) = eval(&trial) else {
                lambda *= 10.0;
                continue;
            };
            let cost_t = rt.norm_squared();
            if cost_t.is_finite() && cost_t <= cost {
                let small_step = step.norm() <= opts.xtol * (p.norm() + opts.xtol);
                let small_gain = cost - cost_t <= opts.ftol * cost;
                p = trial;
                r = rt;
                jac = jt;
                cost = cost_t;
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                if small_step || small_gain {
                    let jtj = jac.tr_mul(&jac);
                    return Ok(finish(p, cost, n_obs, iter + 1, &jtj));
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no descent direction left: we are at the minimum to working precision
            return Ok(finish(p, cost, n_obs, iter, &jtj));
        }
    }
    Err(Error::NonConvergence(format!("least squares did not converge in {} iterations", opts.max_iter)))
}

fn finish(params: DVector<f64>, cost: f64, n_obs: usize, iterations: usize, jtj: &DMatrix<f64>) -> LsqSolution {
    LsqSolution { params, cost, n_obs, iterations, jtj_inv: jtj.clone().try_inverse() }
}
