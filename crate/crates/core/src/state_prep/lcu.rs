//! Fourier interpolation of the target amplitude and its block encoding as a
//! linear combination of diagonal phase unitaries, post-selected on the
//! ancilla register returning to zero.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{amplitude_loader, PrepMethod, PreparedState};
use crate::circuit::{apply, Circuit, Gate, StateVector};
use crate::distributions::{DensitySpec, Grid};
use crate::error::{QmciError, Result};

/// f_d(u) = Σ_{k=-d}^{d} c_k exp(iπku) on the unit coordinate u.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierExpansion {
    pub degree: usize,
    /// c_{-d}, ..., c_d.
    pub coeffs: Vec<Complex64>,
}

impl FourierExpansion {
    pub fn coeff(&self, k: i64) -> Complex64 {
        self.coeffs[(k + self.degree as i64) as usize]
    }

    pub fn eval(&self, u: f64) -> Complex64 {
        let d = self.degree as i64;
        (-d..=d).map(|k| self.coeff(k) * Complex64::from_polar(1.0, PI * k as f64 * u)).sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    pub fn ancillas(&self) -> usize {
        let m = 2 * self.degree + 1;
        (usize::BITS - (m - 1).leading_zeros()) as usize
    }
}

/// Trigonometric interpolant of `h` extended evenly to period 2, through the
/// 2d+1 equispaced nodes u_j = -1 + 2j/(2d+1).
pub fn fourier_interpolate_fn<H: Fn(f64) -> f64>(h: H, d: usize) -> FourierExpansion {
    let m = 2 * d + 1;
    let mut buf: Vec<Complex64> = (0..m)
        .map(|j| Complex64::new(h((-1.0 + 2.0 * j as f64 / m as f64).abs()), 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let coeffs = (-(d as i64)..=d as i64)
        .map(|k| {
            // exp(-iπk u_j) = (-1)^k exp(-2πi k j / m)
            let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            buf[k.rem_euclid(m as i64) as usize] * (sign / m as f64)
        })
        .collect();
    FourierExpansion { degree: d, coeffs }
}

/// Interpolates the amplitude sqrt(f) of `spec` over the grid's support.
pub fn fourier_interpolate(spec: &DensitySpec, grid: &Grid, d: usize) -> Result<FourierExpansion> {
    spec.validate()?;
    grid.validate()?;
    let span = grid.x_u - grid.x_l;
    Ok(fourier_interpolate_fn(|u| spec.value(grid.x_l + span * u).sqrt(), d))
}

fn unit_points(grid: &Grid) -> Vec<f64> {
    let span = grid.x_u - grid.x_l;
    grid.points().iter().map(|x| (x - grid.x_l) / span).collect()
}

pub fn lcu_success_probability(exp: &FourierExpansion, grid: &Grid) -> Result<f64> {
    let l1 = exp.l1_norm();
    if !(l1 > 0.0) {
        return Err(QmciError::ZeroMass);
    }
    let pts = unit_points(grid);
    let s: f64 = pts.iter().map(|&u| exp.eval(u).norm_sqr()).sum();
    Ok(s / (pts.len() as f64 * l1 * l1))
}

/// Builds H^n ⊗ PREP, SELECT, PREP† and post-selects the ancillas on |0>.
pub fn prepare_lcu_state(exp: &FourierExpansion, grid: &Grid, target: &[f64]) -> Result<PreparedState> {
    grid.validate()?;
    let l1 = exp.l1_norm();
    if !(l1 > 0.0) {
        return Err(QmciError::ZeroMass);
    }
    let n = grid.n;
    let a = exp.ancillas();
    let d = exp.degree as i64;
    let mut c = Circuit::new(n + a);
    for q in 0..n {
        c.push(Gate::H(q))?;
    }
    let mut weights = vec![0.0; 1 << a];
    for (j, ck) in exp.coeffs.iter().enumerate() {
        weights[j] = ck.norm() / l1;
    }
    let prep = amplitude_loader(&weights)?;
    c.append(&prep, n)?;
    let anc: Vec<usize> = (n..n + a).collect();
    // Coefficient phases on ancilla basis states.
    for (j, ck) in exp.coeffs.iter().enumerate() {
        let phi = ck.arg();
        if ck.norm() == 0.0 || phi.abs() < 1e-15 {
            continue;
        }
        if a == 0 {
            continue; // global phase
        }
        for (b, &q) in anc.iter().enumerate() {
            if j >> b & 1 == 0 {
                c.push(Gate::X(q))?;
            }
        }
        let (&t, ctrl) = anc.split_last().expect("a > 0");
        c.push(Gate::Phase { controls: ctrl.to_vec(), target: t, angle: phi })?;
        for (b, &q) in anc.iter().enumerate() {
            if j >> b & 1 == 0 {
                c.push(Gate::X(q))?;
            }
        }
    }
    // exp(iπ(j - d)u) with u = i Δ / span: pairwise ancilla-data phases plus an offset.
    let unit = grid.spacing() / (grid.x_u - grid.x_l);
    let two_pi = 2.0 * PI;
    for q in 0..n {
        let w = PI * (1u64 << q) as f64 * unit;
        for (b, &aq) in anc.iter().enumerate() {
            let angle = (w * (1u64 << b) as f64).rem_euclid(two_pi);
            if angle > 1e-15 && (two_pi - angle) > 1e-15 {
                c.push(Gate::Phase { controls: vec![aq], target: q, angle })?;
            }
        }
        let off = (-(d as f64) * w).rem_euclid(two_pi);
        if off > 1e-15 && (two_pi - off) > 1e-15 {
            c.push(Gate::Phase { controls: vec![], target: q, angle: off })?;
        }
    }
    c.append(&prep.adjoint(), n)?;
    let out = apply(&c, &StateVector::zero(n + a))?;
    let branch: Vec<f64> = out.amplitudes()[..1 << n].iter().map(|z| z.norm_sqr()).collect();
    let p_success: f64 = branch.iter().sum();
    if !(p_success > 0.0) {
        return Err(QmciError::ZeroMass);
    }
    let probs = branch.iter().map(|p| p / p_success).collect();
    PreparedState::assemble(PrepMethod::FourierLcu, c, n, a, p_success, probs, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{discretise, DiscretisedDistribution};
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_target() {
        let e = fourier_interpolate_fn(|_| 2.0, 5);
        assert_abs_diff_eq!(e.coeff(0).re, 2.0, epsilon = 1e-14);
        for k in 1..=5 {
            assert!(e.coeff(k).norm() < 1e-14 && e.coeff(-k).norm() < 1e-14);
        }
        let e0 = fourier_interpolate_fn(|u| u * u + 1.0, 0);
        // A single node sits at u = -1.
        assert_abs_diff_eq!(e0.coeff(0).re, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn interpolates_nodes_and_is_symmetric() {
        let h = |u: f64| (1.0 + 3.0 * u).sqrt() * (-u).exp();
        let d = 7;
        let e = fourier_interpolate_fn(h, d);
        let m = 2 * d + 1;
        for j in 0..m {
            let u = -1.0 + 2.0 * j as f64 / m as f64;
            assert_abs_diff_eq!(e.eval(u).re, h(u.abs()), epsilon = 1e-12);
            assert_abs_diff_eq!(e.eval(u).im, 0.0, epsilon = 1e-12);
        }
        for k in 1..=d as i64 {
            assert_abs_diff_eq!((e.coeff(k) - e.coeff(-k).conj()).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn constant_lcu_is_uniform() {
        let grid = Grid::new(0.0, 1.0, 3).unwrap();
        let e = fourier_interpolate_fn(|_| 1.0, 0);
        assert_eq!(e.ancillas(), 0);
        assert_abs_diff_eq!(lcu_success_probability(&e, &grid).unwrap(), 1.0, epsilon = 1e-14);
        let s = prepare_lcu_state(&e, &grid, &DiscretisedDistribution::uniform(grid).probs).unwrap();
        assert_abs_diff_eq!(s.p_success, 1.0, epsilon = 1e-12);
        assert!(s.cmse < 1e-28);
    }

    #[test]
    fn post_selected_state_matches_interpolant() {
        let spec = DensitySpec::breit_wigner(80.377, 2.085).unwrap();
        let grid = Grid::new(0.0, 100.0f64.powi(2), 5).unwrap();
        let e = fourier_interpolate(&spec, &grid, 6).unwrap();
        assert_eq!(e.ancillas(), 4);
        let target = discretise(&spec, &grid).unwrap();
        let s = prepare_lcu_state(&e, &grid, &target.probs).unwrap();
        let p = lcu_success_probability(&e, &grid).unwrap();
        assert_abs_diff_eq!(s.p_success, p, epsilon = 1e-9);
        let fd: Vec<f64> = (0..32).map(|i| e.eval(i as f64 / 32.0).norm_sqr()).collect();
        let z: f64 = fd.iter().sum();
        for (a, b) in s.probs.iter().zip(&fd) {
            assert_abs_diff_eq!(*a, b / z, epsilon = 1e-9);
        }
        assert_eq!(s.total_qubits(), 9);
    }
}
