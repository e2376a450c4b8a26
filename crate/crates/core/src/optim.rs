//! Quasi-Newton minimisation with a random-restart wrapper.

use rand::Rng;

#[derive(Debug, Clone, Copy)]
pub struct BfgsConfig {
    pub max_iterations: usize,
    pub grad_tol: f64,
}

impl Default for BfgsConfig {
    fn default() -> Self {
        BfgsConfig { max_iterations: 2000, grad_tol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// BFGS on the inverse Hessian with a backtracking Armijo line search.
/// `f(x, grad)` returns the objective and writes the gradient.
pub fn bfgs<F>(mut f: F, x0: &[f64], cfg: &BfgsConfig) -> Minimum
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut h = identity(n);
    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];
    let mut d = vec![0.0; n];
    for it in 0..cfg.max_iterations {
        if dot(&g, &g).sqrt() <= cfg.grad_tol {
            return Minimum { x, f: fx, iterations: it, converged: true };
        }
        for i in 0..n {
            d[i] = -dot(&h[i * n..(i + 1) * n], &g);
        }
        let mut slope = dot(&d, &g);
        if slope >= 0.0 {
            h = identity(n);
            d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi);
            slope = -dot(&g, &g);
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..n {
                xn[i] = x[i] + step * d[i];
            }
            let fnew = f(&xn, &mut gn);
            if fnew.is_finite() && fnew <= fx + 1e-4 * step * slope {
                accepted = true;
                let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
                    update_inverse(&mut h, &s, &y, sy);
                }
                x.copy_from_slice(&xn);
                g.copy_from_slice(&gn);
                fx = fnew;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Minimum { x, f: fx, iterations: it, converged: false };
        }
    }
    Minimum { x, f: fx, iterations: cfg.max_iterations, converged: false }
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

/// H <- (I - ρ s yᵀ) H (I - ρ y sᵀ) + ρ s sᵀ.
fn update_inverse(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

/// Local minimisation from `x0`, then `restarts` perturbed restarts around
/// the incumbent; a restart replaces it only when strictly better.
pub fn minimize_with_restarts<F, R>(
    mut f: F,
    x0: &[f64],
    cfg: &BfgsConfig,
    restarts: usize,
    step: f64,
    rng: &mut R,
) -> Minimum
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
    R: Rng + ?Sized,
{
    let mut best = bfgs(&mut f, x0, cfg);
    for _ in 0..restarts {
        let start: Vec<f64> = best.x.iter().map(|v| v + rng.random_range(-step..=step)).collect();
        let m = bfgs(&mut f, &start, cfg);
        if m.f < best.f {
            best = m;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
    }

    #[test]
    fn finds_rosenbrock_minimum() {
        let m = bfgs(rosenbrock, &[-1.2, 1.0], &BfgsConfig::default());
        assert!(m.converged);
        assert_abs_diff_eq!(m.x[0], 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(m.x[1], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn restarts_escape_local_minimum() {
        // Double well with the deeper basin at x = +1.
        let f = |x: &[f64], g: &mut [f64]| {
            let v = x[0];
            g[0] = 4.0 * v * (v * v - 1.0) - 0.3;
            (v * v - 1.0).powi(2) - 0.3 * v
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let m = minimize_with_restarts(f, &[-1.0], &BfgsConfig::default(), 10, 2.0, &mut rng);
        assert!(m.x[0] > 0.5);
    }
}
