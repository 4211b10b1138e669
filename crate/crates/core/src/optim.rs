//! Nelder-Mead simplex search with dimension-adaptive coefficients
//! (Gao & Han) and simplex rebuilds around the incumbent until a rebuild
//! stops paying off.

#[derive(Debug, Clone)]
pub struct NelderMead {
    pub max_evals: usize,
    /// Stop when the simplex spread in `f` and the gain from a rebuild both
    /// fall below this.
    pub f_tol: f64,
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            max_evals: 5000,
            f_tol: 1e-10,
            initial_step: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

struct Counter<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counter<F> {
    fn call(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

impl NelderMead {
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, f: F, x0: &[f64]) -> Minimum {
        let mut f = Counter { f, evals: 0 };
        let mut best_x = x0.to_vec();
        let mut best = f.call(&best_x);
        let mut converged = false;
        let mut step = self.initial_step;
        while f.evals < self.max_evals {
            let (x, v, settled) = self.run_simplex(&mut f, &best_x, best, step);
            let gain = best - v;
            if v <= best {
                best = v;
                best_x = x;
            }
            if settled && gain <= self.f_tol {
                converged = true;
                break;
            }
            // Smaller rebuilds polish; a large gain means we were still far off.
            step = (0.1 * step).max(1e-6);
        }
        Minimum {
            x: best_x,
            value: best,
            evals: f.evals,
            converged,
        }
    }

    /// One simplex run from `x0`. Returns the best vertex, its value and
    /// whether the simplex collapsed below `f_tol` before the budget ran out.
    fn run_simplex<F: FnMut(&[f64]) -> f64>(
        &self,
        f: &mut Counter<F>,
        x0: &[f64],
        f0: f64,
        step: f64,
    ) -> (Vec<f64>, f64, bool) {
        let n = x0.len();
        let nf = n as f64;
        let (alpha, gamma, rho, sigma) = if n >= 2 {
            (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf)
        } else {
            (1.0, 2.0, 0.5, 0.5)
        };

        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        simplex.push((x0.to_vec(), f0));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += step;
            let v = f.call(&x);
            simplex.push((x, v));
        }

        let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
            a.iter().zip(b).map(|(p, q)| p + t * (q - p)).collect()
        };

        loop {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let spread = simplex[n].1 - simplex[0].1;
            if spread <= self.f_tol {
                let (x, v) = simplex.swap_remove(0);
                return (x, v, true);
            }
            if f.evals >= self.max_evals {
                let (x, v) = simplex.swap_remove(0);
                return (x, v, false);
            }

            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / nf;
                }
            }
            let worst = simplex[n].0.clone();
            let f_worst = simplex[n].1;
            let f_second = simplex[n - 1].1;
            let f_best = simplex[0].1;

            let xr = lerp(&centroid, &worst, -alpha);
            let fr = f.call(&xr);
            if fr < f_best {
                let xe = lerp(&centroid, &worst, -alpha * gamma);
                let fe = f.call(&xe);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < f_second {
                simplex[n] = (xr, fr);
                continue;
            }
            let (xc, fc, accept) = if fr < f_worst {
                let xc = lerp(&centroid, &xr, rho);
                let fc = f.call(&xc);
                (xc, fc, fc <= fr)
            } else {
                let xc = lerp(&centroid, &worst, rho);
                let fc = f.call(&xc);
                (xc, fc, fc < f_worst)
            };
            if accept {
                simplex[n] = (xc, fc);
                continue;
            }
            let x_best = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                vertex.0 = lerp(&x_best, &vertex.0, sigma);
                vertex.1 = f.call(&vertex.0);
            }
        }
    }
}
