//! Limited-memory BFGS with a backtracking (Armijo) line search.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub struct LbfgsParams {
    pub memory_size: usize,
    pub max_iter: usize,
    /// Converged once the gradient's max-norm drops below this.
    pub tolerance: f64,
    /// Sufficient-decrease constant.
    pub armijo_c1: f64,
    pub backtrack: f64,
    pub min_step: f64,
}

impl Default for LbfgsParams {
    fn default() -> Self {
        LbfgsParams {
            memory_size: 10,
            max_iter: 500,
            tolerance: 1e-5,
            armijo_c1: 1e-4,
            backtrack: 0.5,
            min_step: 1e-20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// The line search could not find a decreasing step.
    LineSearchFailed,
    NonFinite,
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// Objective value at the start point and after every accepted step.
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

/// Two-loop recursion: returns `-H·g` for the current inverse-Hessian estimate.
fn direction(g: &[f64], memory: &VecDeque<Pair>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alpha = Vec::with_capacity(memory.len());
    for p in memory.iter().rev() {
        let a = p.rho * dot(&p.s, &q);
        q.iter_mut().zip(&p.y).for_each(|(qi, yi)| *qi -= a * yi);
        alpha.push(a);
    }
    if let Some(last) = memory.back() {
        let gamma = dot(&last.s, &last.y) / dot(&last.y, &last.y);
        q.iter_mut().for_each(|qi| *qi *= gamma);
    }
    for (p, a) in memory.iter().zip(alpha.iter().rev()) {
        let b = p.rho * dot(&p.y, &q);
        q.iter_mut()
            .zip(&p.s)
            .for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|qi| *qi = -*qi);
    q
}

/// Minimizes `f`, which writes the gradient into its second argument and
/// returns the objective value.
pub fn minimize<F>(mut f: F, x0: Vec<f64>, params: &LbfgsParams) -> LbfgsResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let dim = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; dim];
    let mut value = f(&x, &mut g);
    let mut history = vec![value];
    let mut memory: VecDeque<Pair> = VecDeque::with_capacity(params.memory_size);
    let mut x_new = vec![0.0; dim];
    let mut g_new = vec![0.0; dim];
    let mut iterations = 0;

    let finish = |x, value, g: &[f64], iterations, termination, history| LbfgsResult {
        x,
        value,
        gradient_norm: max_norm(g),
        iterations,
        termination,
        history,
    };

    if !value.is_finite() {
        return finish(x, value, &g, 0, Termination::NonFinite, history);
    }

    loop {
        if max_norm(&g) < params.tolerance {
            return finish(x, value, &g, iterations, Termination::Converged, history);
        }
        if iterations >= params.max_iter {
            return finish(
                x,
                value,
                &g,
                iterations,
                Termination::MaxIterations,
                history,
            );
        }

        let mut d = direction(&g, &memory);
        let mut slope = dot(&g, &d);
        if slope >= 0.0 || !slope.is_finite() {
            memory.clear();
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }
        // Without curvature information, scale the first step to unit length.
        let mut step = if memory.is_empty() {
            (1.0 / dot(&d, &d).sqrt()).min(1.0)
        } else {
            1.0
        };

        let accepted = loop {
            for i in 0..dim {
                x_new[i] = x[i] + step * d[i];
            }
            let v = f(&x_new, &mut g_new);
            if v.is_finite() && v <= value + params.armijo_c1 * step * slope {
                break Some(v);
            }
            step *= params.backtrack;
            if step < params.min_step {
                break None;
            }
        };
        let Some(v) = accepted else {
            return finish(
                x,
                value,
                &g,
                iterations,
                Termination::LineSearchFailed,
                history,
            );
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
            if memory.len() == params.memory_size {
                memory.pop_front();
            }
            memory.push_back(Pair {
                s,
                y,
                rho: 1.0 / sy,
            });
        }
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g, &mut g_new);
        value = v;
        history.push(value);
        iterations += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        // f = sum_i (i + 1) * (x_i - i)^2
        let f = |x: &[f64], g: &mut [f64]| {
            let mut v = 0.0;
            for (i, (xi, gi)) in x.iter().zip(g.iter_mut()).enumerate() {
                let w = (i + 1) as f64;
                let r = xi - i as f64;
                v += w * r * r;
                *gi = 2.0 * w * r;
            }
            v
        };
        let res = minimize(f, vec![0.0; 6], &LbfgsParams::default());
        assert_eq!(res.termination, Termination::Converged);
        for (i, xi) in res.x.iter().enumerate() {
            assert!((xi - i as f64).abs() < 1e-5);
        }
        assert!(res.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let params = LbfgsParams {
            max_iter: 1000,
            ..Default::default()
        };
        let res = minimize(f, vec![-1.2, 1.0], &params);
        assert_eq!(res.termination, Termination::Converged);
        assert!((res.x[0] - 1.0).abs() < 1e-4 && (res.x[1] - 1.0).abs() < 1e-4);
    }
}
