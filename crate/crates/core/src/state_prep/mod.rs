//! Circuits that load a discretised distribution into amplitudes.

mod hea;
mod lcu;

pub use hea::{build_hea, train_variational, HeaAnsatz, LossOrder, TrainingConfig};
pub use lcu::{
    fourier_interpolate, fourier_interpolate_fn, lcu_success_probability, prepare_lcu_state,
    FourierExpansion,
};

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::distributions::{cmse, jsd};
use crate::error::{QmciError, Result};
use crate::resources::{census, CostModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrepMethod {
    Exact,
    Variational,
    FourierLcu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedState {
    pub method: PrepMethod,
    pub circuit: Circuit,
    pub data_qubits: usize,
    pub ancillas: usize,
    pub p_success: f64,
    /// Data-register probabilities after (post-selected) preparation.
    pub probs: Vec<f64>,
    pub cmse: f64,
    pub jsd: f64,
    /// One-qubit and CX counts after NISQ decomposition.
    pub g_1q: u64,
    pub g_2q: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<f64>,
}

impl PreparedState {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        method: PrepMethod,
        circuit: Circuit,
        data_qubits: usize,
        ancillas: usize,
        p_success: f64,
        probs: Vec<f64>,
        target: &[f64],
    ) -> Result<Self> {
        let c = census(&circuit, &CostModel::default());
        Ok(PreparedState {
            method,
            data_qubits,
            ancillas,
            p_success,
            cmse: cmse(&probs, target)?,
            jsd: jsd(&probs, target)?,
            g_1q: c.one_qubit(),
            g_2q: c.cx_count,
            probs,
            circuit,
            layers: None,
            loss: None,
        })
    }

    pub fn total_qubits(&self) -> usize {
        self.data_qubits + self.ancillas
    }
}

/// Exact loader: a tree of uniformly controlled RY rotations producing
/// Σ_i sqrt(p_i)|i> on qubits 0..n.
pub fn amplitude_loader(probs: &[f64]) -> Result<Circuit> {
    if probs.is_empty() || !probs.len().is_power_of_two() {
        return Err(QmciError::InvalidArgument(format!(
            "probability vector length {} is not a power of two",
            probs.len()
        )));
    }
    if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(QmciError::InvalidArgument("probabilities must be finite and nonnegative".into()));
    }
    let n = probs.len().trailing_zeros() as usize;
    let mut c = Circuit::new(n);
    // mass[l][j]: total probability of indices whose top l bits read j.
    let mut levels = vec![probs.to_vec()];
    for _ in 0..n {
        let last = levels.last().expect("nonempty");
        levels.push(last.chunks(2).map(|p| p[0] + p[1]).collect());
    }
    for t in (0..n).rev() {
        // Children of pattern j at level t are 2j (bit t = 0) and 2j + 1;
        // the pattern is read from the bits above t.
        let masses = &levels[t];
        let angles: Vec<f64> = masses
            .chunks(2)
            .map(|p| 2.0 * p[1].max(0.0).sqrt().atan2(p[0].max(0.0).sqrt()))
            .collect();
        let controls: Vec<usize> = (t + 1..n).collect();
        if controls.is_empty() {
            c.push(Gate::Ry { target: t, angle: angles[0] })?;
        } else {
            c.push(Gate::Ucry { controls, target: t, angles })?;
        }
    }
    Ok(c)
}

/// Hadamard on every qubit.
pub fn uniform_loader(n: usize) -> Result<Circuit> {
    Circuit::from_gates(n, (0..n).map(Gate::H).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{apply, StateVector};
    use approx::assert_abs_diff_eq;

    #[test]
    fn loader_reproduces_probabilities() {
        let p = vec![0.05, 0.1, 0.0, 0.2, 0.3, 0.15, 0.12, 0.08];
        let c = amplitude_loader(&p).unwrap();
        let s = apply(&c, &StateVector::zero(3)).unwrap();
        for (a, q) in s.amplitudes().iter().zip(&p) {
            assert_abs_diff_eq!(a.re, q.sqrt(), epsilon = 1e-14);
            assert_abs_diff_eq!(a.im, 0.0);
        }
    }

    #[test]
    fn uniform_loader_is_flat() {
        let s = apply(&uniform_loader(4).unwrap(), &StateVector::zero(4)).unwrap();
        for p in s.probabilities() {
            assert_abs_diff_eq!(p, 1.0 / 16.0, epsilon = 1e-15);
        }
    }
}
