//! Limited-memory BFGS with Armijo backtracking, for smooth penalty objectives.

use std::collections::VecDeque;

pub(crate) struct Lbfgs {
    pub max_iter: usize,
    pub memory: usize,
    pub grad_tol: f64,
}

impl Default for Lbfgs {
    fn default() -> Self {
        Self {
            max_iter: 200,
            memory: 8,
            grad_tol: 1e-10,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Lbfgs {
    /// Minimizes `f`, which returns the value and writes the gradient into its second argument.
    pub fn minimize<F>(&self, mut f: F, mut x: Vec<f64>) -> (Vec<f64>, f64)
    where
        F: FnMut(&[f64], &mut [f64]) -> f64,
    {
        let n = x.len();
        let mut g = vec![0.0; n];
        let mut fx = f(&x, &mut g);
        let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
        let mut g_new = vec![0.0; n];
        for _ in 0..self.max_iter {
            if dot(&g, &g).sqrt() < self.grad_tol || !fx.is_finite() {
                break;
            }
            // two-loop recursion
            let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
            let mut alphas = Vec::with_capacity(history.len());
            for (s, y, rho) in history.iter().rev() {
                let a = rho * dot(s, &d);
                d.iter_mut().zip(y).for_each(|(di, yi)| *di -= a * yi);
                alphas.push(a);
            }
            if let Some((s, y, _)) = history.back() {
                let gamma = dot(s, y) / dot(y, y);
                d.iter_mut().for_each(|di| *di *= gamma);
            } else {
                let scale = 1.0 / dot(&g, &g).sqrt().max(1.0);
                d.iter_mut().for_each(|di| *di *= scale);
            }
            for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
                let b = rho * dot(y, &d);
                d.iter_mut().zip(s).for_each(|(di, si)| *di += (a - b) * si);
            }
            let mut slope = dot(&g, &d);
            if slope >= 0.0 {
                history.clear();
                d = g.iter().map(|v| -v).collect();
                slope = -dot(&g, &g);
            }
            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
                let ft = f(&trial, &mut g_new);
                if ft.is_finite() && ft <= fx + 1e-4 * step * slope {
                    accepted = Some((trial, ft));
                    break;
                }
                step *= 0.5;
            }
            let Some((x_new, f_new)) = accepted else {
                break;
            };
            let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-14 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
                if history.len() == self.memory {
                    history.pop_front();
                }
                history.push_back((s, y, 1.0 / sy));
            }
            let improvement = fx - f_new;
            x = x_new;
            fx = f_new;
            g.copy_from_slice(&g_new);
            if improvement <= 1e-15 * fx.abs().max(1e-300) {
                break;
            }
        }
        (x, fx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_rosenbrock() {
        let (x, fx) = Lbfgs {
            max_iter: 500,
            ..Default::default()
        }
        .minimize(
            |x, g| {
                let (a, b) = (x[0], x[1]);
                g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
                g[1] = 200.0 * (b - a * a);
                (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
            },
            vec![-1.2, 1.0],
        );
        assert!(fx < 1e-12, "f = {fx}");
        assert!((x[0] - 1.0).abs() < 1e-5 && (x[1] - 1.0).abs() < 1e-5);
    }
}
