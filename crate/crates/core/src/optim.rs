//! Gradient descent with backtracking (Armijo) line search.

/// Stopping rules for [`minimize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimOptions {
    pub max_iter: usize,
    /// Stop once `|f_old - f_new| / max(|f_old|, 1e-12)` drops below this.
    pub rel_tol: f64,
    pub initial_step: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self { max_iter: 20_000, rel_tol: 1e-8, initial_step: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub params: Vec<f64>,
    pub value: f64,
    pub initial_value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every accepted step, starting with the initial value.
    pub history: Vec<f64>,
}

/// Minimizes `objective`, which returns the value and its gradient.
///
/// Every accepted step satisfies the Armijo condition, so the recorded
/// objective sequence is non-increasing. A non-finite initial value or
/// gradient ends the run immediately with `converged = false`.
pub fn minimize<F>(mut params: Vec<f64>, objective: F, opts: OptimOptions) -> OptimResult
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    const ARMIJO: f64 = 1e-4;
    let (mut value, mut grad) = objective(&params);
    let initial_value = value;
    let mut history = vec![value];
    let mut step = opts.initial_step;
    let mut converged = false;
    let mut iterations = 0;
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return OptimResult { params, value, initial_value, iterations, converged, history };
    }

    while iterations < opts.max_iter {
        iterations += 1;
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        if gnorm2 == 0.0 {
            converged = true;
            break;
        }
        let mut accepted = None;
        while step > 1e-30 {
            let trial: Vec<f64> = params.iter().zip(&grad).map(|(p, g)| p - step * g).collect();
            let (v, g) = objective(&trial);
            if v.is_finite() && v <= value - ARMIJO * step * gnorm2 && g.iter().all(|x| x.is_finite()) {
                accepted = Some((trial, v, g));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, v, g)) = accepted else {
            converged = true;
            break;
        };
        let rel = (value - v).abs() / value.abs().max(1e-12);
        params = trial;
        value = v;
        grad = g;
        history.push(value);
        step *= 2.0;
        if rel < opts.rel_tol {
            converged = true;
            break;
        }
    }
    OptimResult { params, value, initial_value, iterations, converged, history }
}

/// Limited-memory BFGS with the same Armijo backtracking as [`minimize`],
/// so the recorded objective sequence is non-increasing. Falls back to the
/// negative gradient whenever the quasi-Newton direction is not a descent
/// direction.
pub fn minimize_lbfgs<F>(mut params: Vec<f64>, objective: F, memory: usize, opts: OptimOptions) -> OptimResult
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    const ARMIJO: f64 = 1e-4;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let (mut value, mut grad) = objective(&params);
    let initial_value = value;
    let mut history = vec![value];
    let mut converged = false;
    let mut iterations = 0;
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return OptimResult { params, value, initial_value, iterations, converged, history };
    }
    let mut pairs: std::collections::VecDeque<(Vec<f64>, Vec<f64>, f64)> = Default::default();
    while iterations < opts.max_iter {
        iterations += 1;
        if grad.iter().all(|&g| g == 0.0) {
            converged = true;
            break;
        }
        // two-loop recursion
        let mut q = grad.clone();
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        if let Some((s, y, _)) = pairs.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        } else {
            q.iter_mut().for_each(|v| *v *= opts.initial_step);
        }
        for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&grad, &dir);
        if !(slope < 0.0) {
            pairs.clear();
            dir = grad.iter().map(|g| -opts.initial_step * g).collect();
            slope = dot(&grad, &dir);
        }
        let mut step = 1.0;
        let mut accepted = None;
        while step > 1e-20 {
            let trial: Vec<f64> = params.iter().zip(&dir).map(|(p, d)| p + step * d).collect();
            let (v, g) = objective(&trial);
            if v.is_finite() && v <= value + ARMIJO * step * slope && g.iter().all(|x| x.is_finite()) {
                accepted = Some((trial, v, g));
                break;
            }
            step *= 0.5;
        }
        let Some((trial, v, g)) = accepted else {
            if pairs.is_empty() {
                converged = true;
                break;
            }
            pairs.clear();
            continue;
        };
        let s: Vec<f64> = trial.iter().zip(&params).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if pairs.len() == memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        let rel = (value - v).abs() / value.abs().max(1e-12);
        params = trial;
        value = v;
        grad = g;
        history.push(value);
        if rel < opts.rel_tol {
            converged = true;
            break;
        }
    }
    OptimResult { params, value, initial_value, iterations, converged, history }
}

/// Central finite-difference gradient, for checking analytic gradients.
pub fn finite_difference<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + h;
            let up = f(&p);
            p[i] = x[i] - h;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}
