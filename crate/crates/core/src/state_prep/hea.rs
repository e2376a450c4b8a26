//! Hardware-efficient ansatz: RY layers separated by CX chains, trained on
//! real amplitudes with analytic adjoint gradients.

use serde::{Deserialize, Serialize};

use super::{PrepMethod, PreparedState};
use crate::circuit::{apply, Circuit, Gate, StateVector};
use crate::distributions::DiscretisedDistribution;
use crate::error::{QmciError, Result};
use crate::optim::{minimize_with_restarts, BfgsConfig};
use crate::qae::job_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeaAnsatz {
    pub n: usize,
    pub layers: usize,
    /// Layer-major: angles[k * n + i] drives qubit i in rotation layer k.
    pub angles: Vec<f64>,
}

impl HeaAnsatz {
    pub fn parameter_count(n: usize, layers: usize) -> usize {
        n * (layers + 1)
    }

    pub fn circuit(&self) -> Result<Circuit> {
        build_hea(self.n, self.layers, &self.angles)
    }
}

/// U = R(θ^{L+1}) · Π_{k=L..1} [CX-chain · R(θ^k)], CX(i, i+1) along a line.
pub fn build_hea(n: usize, layers: usize, angles: &[f64]) -> Result<Circuit> {
    let want = HeaAnsatz::parameter_count(n, layers);
    if angles.len() != want {
        return Err(QmciError::LengthMismatch { left: angles.len(), right: want });
    }
    let mut c = Circuit::new(n);
    for k in 0..=layers {
        if k > 0 {
            for i in 0..n.saturating_sub(1) {
                c.push(Gate::Cx { control: i, target: i + 1 })?;
            }
        }
        for i in 0..n {
            c.push(Gate::Ry { target: i, angle: angles[k * n + i] })?;
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossOrder {
    L1,
    L2,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub loss: LossOrder,
    pub loss_scale: f64,
    pub max_iterations: usize,
    pub restarts: usize,
    /// Half-width of the uniform kick applied to the incumbent on restart.
    pub restart_step: f64,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            loss: LossOrder::L2,
            loss_scale: 1.0,
            max_iterations: 3000,
            restarts: 4,
            restart_step: 0.3,
            seed: 0,
        }
    }
}

/// Real-amplitude simulator specialised to the ansatz gate set.
fn apply_ry(psi: &mut [f64], q: usize, angle: f64) {
    let (s, c) = (angle / 2.0).sin_cos();
    let stride = 1 << q;
    for base in (0..psi.len()).step_by(stride << 1) {
        for i in base..base + stride {
            let (a, b) = (psi[i], psi[i + stride]);
            psi[i] = c * a - s * b;
            psi[i + stride] = s * a + c * b;
        }
    }
}

fn apply_cx(psi: &mut [f64], control: usize, target: usize) {
    let (cm, tm) = (1 << control, 1 << target);
    for i in 0..psi.len() {
        if i & cm != 0 && i & tm == 0 {
            psi.swap(i, i | tm);
        }
    }
}

/// d/dθ of RY(θ) applied to psi, written into `out`.
fn ry_derivative(psi: &[f64], q: usize, angle: f64, out: &mut [f64]) {
    let (s, c) = (angle / 2.0).sin_cos();
    let stride = 1 << q;
    for base in (0..psi.len()).step_by(stride << 1) {
        for i in base..base + stride {
            let (a, b) = (psi[i], psi[i + stride]);
            out[i] = 0.5 * (-s * a - c * b);
            out[i + stride] = 0.5 * (c * a - s * b);
        }
    }
}

enum Op {
    Ry(usize, usize),
    Cx(usize, usize),
}

fn ops(n: usize, layers: usize) -> Vec<Op> {
    let mut v = Vec::new();
    for k in 0..=layers {
        if k > 0 {
            for i in 0..n.saturating_sub(1) {
                v.push(Op::Cx(i, i + 1));
            }
        }
        for i in 0..n {
            v.push(Op::Ry(i, k * n + i));
        }
    }
    v
}

struct Objective {
    n: usize,
    ops: Vec<Op>,
    target: Vec<f64>,
    loss: LossOrder,
    scale: f64,
}

impl Objective {
    fn forward(&self, theta: &[f64]) -> Vec<f64> {
        let mut psi = vec![0.0; 1 << self.n];
        psi[0] = 1.0;
        for op in &self.ops {
            match *op {
                Op::Ry(q, p) => apply_ry(&mut psi, q, theta[p]),
                Op::Cx(c, t) => apply_cx(&mut psi, c, t),
            }
        }
        psi
    }

    /// Loss and gradient; the target sign follows the overlap so the global
    /// phase ±1 is not penalised.
    fn eval(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let mut psi = self.forward(theta);
        let sign = if psi.iter().zip(&self.target).map(|(a, b)| a * b).sum::<f64>() < 0.0 {
            -1.0
        } else {
            1.0
        };
        let r: Vec<f64> = psi.iter().zip(&self.target).map(|(a, t)| a - sign * t).collect();
        let (value, mut lam) = match self.loss {
            LossOrder::L2 => (r.iter().map(|x| x * x).sum::<f64>(), r.iter().map(|x| 2.0 * x).collect::<Vec<_>>()),
            LossOrder::L1 => (r.iter().map(|x| x.abs()).sum(), r.iter().map(|x| x.signum()).collect()),
            LossOrder::Max => {
                let (imax, vmax) = r
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                    .map(|(i, v)| (i, *v))
                    .unwrap_or((0, 0.0));
                let mut l = vec![0.0; r.len()];
                l[imax] = vmax.signum();
                (vmax.abs(), l)
            }
        };
        lam.iter_mut().for_each(|x| *x *= self.scale);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut d = vec![0.0; psi.len()];
        for op in self.ops.iter().rev() {
            match *op {
                Op::Ry(q, p) => {
                    apply_ry(&mut psi, q, -theta[p]);
                    ry_derivative(&psi, q, theta[p], &mut d);
                    grad[p] += lam.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
                    apply_ry(&mut lam, q, -theta[p]);
                }
                Op::Cx(c, t) => {
                    apply_cx(&mut psi, c, t);
                    apply_cx(&mut lam, c, t);
                }
            }
        }
        self.scale * value
    }
}

/// Trains the ansatz from the all-π/2 start; deterministic for a given seed.
pub fn train_variational(
    target: &DiscretisedDistribution,
    layers: usize,
    config: &TrainingConfig,
) -> Result<(HeaAnsatz, PreparedState)> {
    if !(config.loss_scale > 0.0) {
        return Err(QmciError::InvalidArgument("loss scale must be positive".into()));
    }
    let n = target.grid.n;
    let obj = Objective {
        n,
        ops: ops(n, layers),
        target: target.probs.iter().map(|p| p.sqrt()).collect(),
        loss: config.loss,
        scale: config.loss_scale,
    };
    let x0 = vec![std::f64::consts::FRAC_PI_2; HeaAnsatz::parameter_count(n, layers)];
    let cfg = BfgsConfig { max_iterations: config.max_iterations, grad_tol: 1e-12 };
    let mut rng = job_rng(config.seed, 0);
    let best = minimize_with_restarts(
        |x, g| obj.eval(x, g),
        &x0,
        &cfg,
        config.restarts,
        config.restart_step,
        &mut rng,
    );
    let ansatz = HeaAnsatz { n, layers, angles: best.x };
    let circuit = ansatz.circuit()?;
    let probs = apply(&circuit, &StateVector::zero(n))?.probabilities();
    let mut state =
        PreparedState::assemble(PrepMethod::Variational, circuit, n, 0, 1.0, probs, &target.probs)?;
    state.layers = Some(layers);
    state.loss = Some(best.f);
    Ok((ansatz, state))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Grid;
    use approx::assert_abs_diff_eq;

    #[test]
    fn parameter_law_and_layout() {
        let c = build_hea(2, 0, &[0.1, 0.2]).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.multi_qubit_count(), 0);
        let c = build_hea(6, 4, &[0.0; 30]).unwrap();
        assert_eq!(c.len() - c.multi_qubit_count(), 30);
        assert_eq!(c.multi_qubit_count(), 20);
        assert!(build_hea(3, 1, &[0.0; 5]).is_err());
    }

    #[test]
    fn real_simulator_matches_circuit() {
        let theta: Vec<f64> = (0..12).map(|i| 0.3 * i as f64 - 1.0).collect();
        let obj = Objective { n: 3, ops: ops(3, 3), target: vec![0.0; 8], loss: LossOrder::L2, scale: 1.0 };
        let psi = obj.forward(&theta);
        let s = apply(&build_hea(3, 3, &theta).unwrap(), &StateVector::zero(3)).unwrap();
        for (a, b) in psi.iter().zip(s.amplitudes()) {
            assert_abs_diff_eq!(*a, b.re, epsilon = 1e-14);
        }
    }

    #[test]
    fn adjoint_gradient_matches_finite_differences() {
        let n = 3;
        let target: Vec<f64> = [0.1, 0.2, 0.05, 0.15, 0.2, 0.1, 0.1, 0.1].iter().map(|p: &f64| p.sqrt()).collect();
        let obj = Objective { n, ops: ops(n, 2), target, loss: LossOrder::L2, scale: 2.0 };
        let theta: Vec<f64> = (0..9).map(|i| 0.4 + 0.17 * i as f64).collect();
        let mut g = vec![0.0; 9];
        obj.eval(&theta, &mut g);
        let mut scratch = vec![0.0; 9];
        for p in 0..9 {
            let h = 1e-6;
            let mut tp = theta.clone();
            tp[p] += h;
            let fp = obj.eval(&tp, &mut scratch);
            tp[p] -= 2.0 * h;
            let fm = obj.eval(&tp, &mut scratch);
            assert_abs_diff_eq!(g[p], (fp - fm) / (2.0 * h), epsilon = 1e-7);
        }
    }

    #[test]
    fn uniform_and_basis_targets() {
        let grid = Grid::new(0.0, 1.0, 3).unwrap();
        let cfg = TrainingConfig { restarts: 1, ..Default::default() };
        let (_, s) = train_variational(&DiscretisedDistribution::uniform(grid), 1, &cfg).unwrap();
        assert!(s.cmse <= 1e-6, "{}", s.cmse);
        let mut p = vec![0.0; 8];
        p[5] = 1.0;
        let basis = DiscretisedDistribution::from_probs(grid, p).unwrap();
        let (_, s) = train_variational(&basis, 1, &cfg).unwrap();
        assert!(s.loss.unwrap() < 1e-3, "{:?}", s.loss);
        assert_eq!(s.p_success, 1.0);
    }

    #[test]
    fn training_is_deterministic() {
        let grid = Grid::new(0.0, 1.0, 3).unwrap();
        let target = DiscretisedDistribution::from_probs(grid, vec![0.3, 0.2, 0.1, 0.05, 0.05, 0.1, 0.1, 0.1]).unwrap();
        let cfg = TrainingConfig { restarts: 2, max_iterations: 200, seed: 9, ..Default::default() };
        let (a, _) = train_variational(&target, 2, &cfg).unwrap();
        let (b, _) = train_variational(&target, 2, &cfg).unwrap();
        assert_eq!(a, b);
    }
}
