//! Primal Newton solver for the squared-slack ranking objective
//!
//! ```text
//! f(w) = 1/2 |w|^2 + C * sum_O max(0, 1 - w.(x_a - x_b))^2 + C * sum_S (w.(x_a - x_b))^2
//! ```
//!
//! Pair differences are never materialized: products with the difference
//! matrix go through the sample matrix (`Z v`, then scatter per pair), which
//! keeps a Hessian-vector product at `O(T d + |O| + |S|)`.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

/// Convergence record attached to a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    /// Accepted Newton steps.
    pub iterations: usize,
    pub final_objective: f64,
    pub gradient_norm: f64,
    pub converged: bool,
    /// Objective at the start point followed by the value after each
    /// accepted step.
    pub objective_history: Vec<f64>,
}

pub(crate) struct Problem<'a> {
    pub samples: &'a Array2<f64>,
    pub ordered: &'a [(usize, usize)],
    pub similar: &'a [(usize, usize)],
    pub c: f64,
}

pub(crate) struct SolverSettings {
    pub max_iter: usize,
    pub grad_tol: f64,
}

const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-12;

impl Problem<'_> {
    fn dim(&self) -> usize {
        self.samples.ncols()
    }

    fn scores(&self, w: ArrayView1<'_, f64>) -> Array1<f64> {
        self.samples.dot(&w)
    }

    pub fn objective(&self, w: ArrayView1<'_, f64>) -> f64 {
        let s = self.scores(w);
        let hinge: f64 = self
            .ordered
            .iter()
            .map(|&(a, b)| (1.0 - (s[a] - s[b])).max(0.0).powi(2))
            .sum();
        let tie: f64 = self
            .similar
            .iter()
            .map(|&(a, b)| (s[a] - s[b]).powi(2))
            .sum();
        0.5 * w.dot(&w) + self.c * (hinge + tie)
    }

    /// `w + Z^T coef` where `coef` scatters per-pair weights onto samples.
    fn gather(&self, w: ArrayView1<'_, f64>, coef: &Array1<f64>) -> Array1<f64> {
        &w + &self.samples.t().dot(coef)
    }

    /// Gradient and the ordered pairs with an active hinge.
    fn gradient(&self, w: ArrayView1<'_, f64>) -> (Array1<f64>, Vec<(usize, usize)>) {
        let s = self.scores(w);
        let mut coef = Array1::zeros(self.samples.nrows());
        let mut active = Vec::new();
        for &(a, b) in self.ordered {
            let slack = 1.0 - (s[a] - s[b]);
            if slack > 0.0 {
                let g = -2.0 * self.c * slack;
                coef[a] += g;
                coef[b] -= g;
                active.push((a, b));
            }
        }
        for &(a, b) in self.similar {
            let g = 2.0 * self.c * (s[a] - s[b]);
            coef[a] += g;
            coef[b] -= g;
        }
        (self.gather(w, &coef), active)
    }

    /// Generalized Hessian at the current active set times `v`.
    fn hess_vec(&self, v: ArrayView1<'_, f64>, active: &[(usize, usize)]) -> Array1<f64> {
        let u = self.scores(v);
        let mut coef = Array1::zeros(self.samples.nrows());
        for &(a, b) in active.iter().chain(self.similar) {
            let h = 2.0 * self.c * (u[a] - u[b]);
            coef[a] += h;
            coef[b] -= h;
        }
        self.gather(v, &coef)
    }

    /// Conjugate gradient for `H p = rhs`; `H` is at least the identity.
    fn solve_newton(&self, rhs: &Array1<f64>, active: &[(usize, usize)]) -> Array1<f64> {
        let mut x = Array1::zeros(self.dim());
        let mut r = rhs.clone();
        let mut p = r.clone();
        let mut rr = r.dot(&r);
        let stop = rr * 1e-24;
        for _ in 0..(2 * self.dim() + 20) {
            if rr <= stop {
                break;
            }
            let hp = self.hess_vec(p.view(), active);
            let alpha = rr / p.dot(&hp);
            x.scaled_add(alpha, &p);
            r.scaled_add(-alpha, &hp);
            let rr_next = r.dot(&r);
            p = &r + &(rr_next / rr * &p);
            rr = rr_next;
        }
        x
    }

    pub fn minimize(&self, settings: &SolverSettings) -> (Array1<f64>, SolverReport) {
        let mut w = Array1::zeros(self.dim());
        let mut f = self.objective(w.view());
        let mut history = vec![f];
        let mut converged = false;
        let mut grad_norm = f64::INFINITY;
        let mut iterations = 0;
        while iterations < settings.max_iter {
            let (g, active) = self.gradient(w.view());
            grad_norm = g.dot(&g).sqrt();
            if grad_norm <= settings.grad_tol {
                converged = true;
                break;
            }
            let step = self.solve_newton(&(-&g), &active);
            let slope = g.dot(&step);
            if slope >= 0.0 {
                break;
            }
            let mut t = 1.0;
            let accepted = loop {
                let trial = &w + &(t * &step);
                let ft = self.objective(trial.view());
                if ft <= f + ARMIJO * t * slope {
                    break Some((trial, ft));
                }
                t *= 0.5;
                if t < MIN_STEP {
                    break None;
                }
            };
            let Some((next, fnext)) = accepted else { break };
            w = next;
            f = fnext;
            history.push(f);
            iterations += 1;
        }
        if !converged {
            let (g, _) = self.gradient(w.view());
            grad_norm = g.dot(&g).sqrt();
            converged = grad_norm <= settings.grad_tol;
        }
        (
            w,
            SolverReport {
                iterations,
                final_objective: f,
                gradient_norm: grad_norm,
                converged,
                objective_history: history,
            },
        )
    }
}
