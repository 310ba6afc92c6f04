//! Class-weighted L2 logistic regression.
//!
//! The objective is the weighted negative log-likelihood summed over rows
//! plus `lambda/2 * |w|^2`; the intercept is not penalized. It is minimized
//! by damped Newton steps with Armijo backtracking, falling back to the
//! negative gradient when the Hessian cannot be factored.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::RiskModelError;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub max_iter: usize,
    /// Stop once the infinity norm of the gradient falls below this.
    pub grad_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { max_iter: 10_000, grad_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub loss: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    /// False when the iteration cap or a stalled line search ended the run.
    pub converged: bool,
}

impl LogisticFit {
    /// Parameters as `[w..., b]`.
    pub fn theta(&self) -> Vec<f64> {
        let mut t = self.weights.clone();
        t.push(self.intercept);
        t
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        crate::matrix::dot(&self.weights, x) + self.intercept
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Positive-class weight for the balanced rule: `N_neg / N_pos`.
pub fn balanced_weight(labels: &[bool]) -> Result<f64, RiskModelError> {
    let pos = labels.iter().filter(|&&y| y).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(RiskModelError::SingleClass);
    }
    Ok(neg as f64 / pos as f64)
}

/// A design matrix with an appended intercept column, labels and row costs.
#[derive(Debug, Clone)]
pub struct LogisticProblem {
    x: DMatrix<f64>,
    y: DVector<f64>,
    cost: DVector<f64>,
}

impl LogisticProblem {
    pub fn new(x: &Matrix, labels: &[bool], w_pos: f64) -> Result<Self, RiskModelError> {
        if x.rows() != labels.len() {
            return Err(RiskModelError::DimensionMismatch { expected: x.rows(), got: labels.len() });
        }
        if x.rows() < 2 {
            return Err(RiskModelError::TooFew(x.rows()));
        }
        if labels.iter().all(|&y| y) || labels.iter().all(|&y| !y) {
            return Err(RiskModelError::SingleClass);
        }
        if !(w_pos > 0.0 && w_pos.is_finite()) {
            return Err(RiskModelError::InvalidParameter(format!("positive class weight {w_pos}")));
        }
        let (n, d) = (x.rows(), x.cols());
        let design = DMatrix::from_fn(n, d + 1, |i, j| if j == d { 1.0 } else { x.get(i, j) });
        let y = DVector::from_iterator(n, labels.iter().map(|&l| if l { 1.0 } else { 0.0 }));
        let cost = DVector::from_iterator(n, labels.iter().map(|&l| if l { w_pos } else { 1.0 }));
        Ok(Self { x: design, y, cost })
    }

    /// Number of weights, excluding the intercept.
    pub fn dim(&self) -> usize {
        self.x.ncols() - 1
    }

    fn check_theta(&self, theta: &[f64]) -> Result<DVector<f64>, RiskModelError> {
        if theta.len() != self.x.ncols() {
            return Err(RiskModelError::DimensionMismatch { expected: self.x.ncols(), got: theta.len() });
        }
        Ok(DVector::from_column_slice(theta))
    }

    fn loss_at(&self, z: &DVector<f64>, theta: &DVector<f64>, lambda: f64) -> f64 {
        let data: f64 = z.iter().zip(self.y.iter()).zip(self.cost.iter()).map(|((&z, &y), &c)| c * (softplus(z) - y * z)).sum();
        let d = self.dim();
        data + 0.5 * lambda * theta.rows(0, d).norm_squared()
    }

    fn gradient_at(&self, z: &DVector<f64>, theta: &DVector<f64>, lambda: f64) -> DVector<f64> {
        let r = DVector::from_iterator(
            z.len(),
            z.iter().zip(self.y.iter()).zip(self.cost.iter()).map(|((&z, &y), &c)| c * (sigmoid(z) - y)),
        );
        let mut g = self.x.tr_mul(&r);
        let d = self.dim();
        for j in 0..d {
            g[j] += lambda * theta[j];
        }
        g
    }

    fn hessian_at(&self, z: &DVector<f64>, lambda: f64) -> DMatrix<f64> {
        let mut xs = self.x.clone();
        for (i, (&zi, &c)) in z.iter().zip(self.cost.iter()).enumerate() {
            let p = sigmoid(zi);
            let s = (c * p * (1.0 - p)).sqrt();
            xs.row_mut(i).scale_mut(s);
        }
        let mut h = xs.transpose() * &xs;
        for j in 0..self.dim() {
            h[(j, j)] += lambda;
        }
        h
    }

    pub fn loss(&self, theta: &[f64], lambda: f64) -> Result<f64, RiskModelError> {
        let t = self.check_theta(theta)?;
        Ok(self.loss_at(&(&self.x * &t), &t, lambda))
    }

    pub fn gradient(&self, theta: &[f64], lambda: f64) -> Result<Vec<f64>, RiskModelError> {
        let t = self.check_theta(theta)?;
        Ok(self.gradient_at(&(&self.x * &t), &t, lambda).as_slice().to_vec())
    }

    /// Minimizes the objective from `init` (or zero).
    pub fn fit(&self, lambda: f64, cfg: &SolverConfig, init: Option<&[f64]>) -> Result<LogisticFit, RiskModelError> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(RiskModelError::InvalidParameter(format!("lambda {lambda}")));
        }
        let mut theta = match init {
            Some(t) => self.check_theta(t)?,
            None => DVector::zeros(self.x.ncols()),
        };
        let mut z = &self.x * &theta;
        let mut loss = self.loss_at(&z, &theta, lambda);
        let mut grad = self.gradient_at(&z, &theta, lambda);
        let mut iterations = 0;
        let mut converged = false;
        while iterations < cfg.max_iter {
            if grad.amax() < cfg.grad_tol {
                converged = true;
                break;
            }
            iterations += 1;
            let direction = self
                .newton_direction(&z, lambda, &grad)
                .filter(|d| d.dot(&grad) < 0.0)
                .unwrap_or_else(|| -&grad);
            let slope = direction.dot(&grad);
            let mut step = 1.0;
            let mut accepted = None;
            // Once the predicted decrease is below the rounding resolution of
            // the loss, Armijo cannot tell good steps from bad ones; judge the
            // full step by the gradient instead.
            if -slope < 1e3 * f64::EPSILON * loss.abs().max(1.0) {
                let cand = &theta + &direction;
                let cz = &self.x * &cand;
                let cg = self.gradient_at(&cz, &cand, lambda);
                if cg.amax() < grad.amax() {
                    let cl = self.loss_at(&cz, &cand, lambda);
                    theta = cand;
                    z = cz;
                    loss = cl;
                    grad = cg;
                    continue;
                }
            }
            while step > 1e-16 {
                let cand = &theta + step * &direction;
                let cz = &self.x * &cand;
                let cl = self.loss_at(&cz, &cand, lambda);
                if cl <= loss + 1e-4 * step * slope {
                    accepted = Some((cand, cz, cl));
                    break;
                }
                step *= 0.5;
            }
            let Some((cand, cz, cl)) = accepted else { break };
            theta = cand;
            z = cz;
            loss = cl;
            grad = self.gradient_at(&z, &theta, lambda);
        }
        if !converged && grad.amax() < cfg.grad_tol {
            converged = true;
        }
        let d = self.dim();
        Ok(LogisticFit {
            weights: theta.rows(0, d).iter().copied().collect(),
            intercept: theta[d],
            loss,
            grad_norm: grad.amax(),
            iterations,
            converged,
        })
    }

    fn newton_direction(&self, z: &DVector<f64>, lambda: f64, grad: &DVector<f64>) -> Option<DVector<f64>> {
        let h = self.hessian_at(z, lambda);
        let chol = Cholesky::new(h.clone()).or_else(|| {
            let jitter = 1e-10 * h.diagonal().amax().max(1.0);
            Cholesky::new(h + DMatrix::identity(self.x.ncols(), self.x.ncols()) * jitter)
        })?;
        let d = -chol.solve(grad);
        d.iter().all(|v| v.is_finite()).then_some(d)
    }
}

/// One-shot fit from zero.
pub fn train_logreg(
    x: &Matrix,
    labels: &[bool],
    lambda: f64,
    w_pos: f64,
    cfg: &SolverConfig,
) -> Result<LogisticFit, RiskModelError> {
    LogisticProblem::new(x, labels, w_pos)?.fit(lambda, cfg, None)
}
