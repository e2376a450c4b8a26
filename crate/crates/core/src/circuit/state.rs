use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Circuit, Gate};
use crate::error::{QmciError, Result};

/// Below this many amplitudes the kernels stay on one thread.
const PAR_LEN: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// |0...0> on `width` qubits.
    pub fn zero(width: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << width];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        StateVector { amplitudes }
    }

    pub fn basis(width: usize, index: usize) -> Result<Self> {
        if index >= 1 << width {
            return Err(QmciError::InvalidArgument(format!(
                "basis index {index} exceeds width {width}"
            )));
        }
        let mut s = StateVector { amplitudes: vec![Complex64::new(0.0, 0.0); 1 << width] };
        s.amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// Accepts a power-of-two length vector with unit norm (tolerance 1e-10).
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() || !amplitudes.len().is_power_of_two() {
            return Err(QmciError::InvalidArgument(format!(
                "amplitude count {} is not a power of two",
                amplitudes.len()
            )));
        }
        if let Some(i) = amplitudes.iter().position(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(QmciError::NonFiniteAmplitude(i));
        }
        let s = StateVector { amplitudes };
        let norm = s.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(QmciError::InvalidArgument(format!("state norm^2 is {norm}, expected 1")));
        }
        Ok(s)
    }

    /// Rescales an arbitrary nonzero vector to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let n: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(QmciError::ZeroMass);
        }
        StateVector::from_amplitudes(amplitudes.into_iter().map(|a| a / n).collect())
    }

    pub fn width(&self) -> usize {
        self.amplitudes.len().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Total probability of basis states where every qubit in `qubits` is 1.
    pub fn all_ones_probability(&self, qubits: &[usize]) -> Result<f64> {
        let width = self.width();
        let mut mask = 0usize;
        for &q in qubits {
            if q >= width {
                return Err(QmciError::QubitOutOfRange { qubit: q, width });
            }
            mask |= 1 << q;
        }
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == mask)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    fn apply_gate(&mut self, gate: &Gate) {
        match gate {
            Gate::H(t) => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                self.pair_map(*t, 0, move |_, a, b| (h * (a + b), h * (a - b)));
            }
            Gate::X(t) => self.pair_map(*t, 0, |_, a, b| (b, a)),
            Gate::Z(t) => self.diagonal(1 << t, Complex64::new(-1.0, 0.0)),
            Gate::Ry { target, angle } => {
                let r = ry(*angle);
                self.pair_map(*target, 0, move |_, a, b| r(a, b))
            }
            Gate::Cry { controls, target, angle } => {
                let r = ry(*angle);
                self.pair_map(*target, mask_of(controls), move |_, a, b| r(a, b))
            }
            Gate::Cx { control, target } => self.pair_map(*target, 1 << control, |_, a, b| (b, a)),
            Gate::Mcx { controls, target } => self.pair_map(*target, mask_of(controls), |_, a, b| (b, a)),
            Gate::Ucry { controls, target, angles } => {
                let sc: Vec<(f64, f64)> = angles.iter().map(|a| (a / 2.0).sin_cos()).collect();
                self.pair_map(*target, 0, move |i, a, b| {
                    let j = controls.iter().enumerate().fold(0, |j, (bit, q)| j | (i >> q & 1) << bit);
                    let (s, c) = sc[j];
                    (c * a - s * b, s * a + c * b)
                })
            }
            Gate::Mcz { controls, target } => {
                self.diagonal(mask_of(controls) | 1 << target, Complex64::new(-1.0, 0.0))
            }
            Gate::Phase { controls, target, angle } => {
                self.diagonal(mask_of(controls) | 1 << target, Complex64::from_polar(1.0, *angle))
            }
        }
    }

    /// Applies `f` to each amplitude pair differing in bit `target` whose
    /// index satisfies the control mask.
    fn pair_map<F>(&mut self, target: usize, cmask: usize, f: F)
    where
        F: Fn(usize, Complex64, Complex64) -> (Complex64, Complex64) + Sync,
    {
        let stride = 1usize << target;
        let block = stride << 1;
        let kernel = |base: usize, lo: &mut [Complex64], hi: &mut [Complex64]| {
            for (j, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                if (base + j) & cmask == cmask {
                    let (x, y) = f(base + j, *a, *b);
                    *a = x;
                    *b = y;
                }
            }
        };
        let n = self.amplitudes.len();
        if n < PAR_LEN {
            for (c, chunk) in self.amplitudes.chunks_mut(block).enumerate() {
                let (lo, hi) = chunk.split_at_mut(stride);
                kernel(c * block, lo, hi);
            }
        } else if stride >= 4096 {
            for (c, chunk) in self.amplitudes.chunks_mut(block).enumerate() {
                let (lo, hi) = chunk.split_at_mut(stride);
                lo.par_chunks_mut(1024)
                    .zip(hi.par_chunks_mut(1024))
                    .enumerate()
                    .for_each(|(k, (l, h))| kernel(c * block + k * 1024, l, h));
            }
        } else {
            self.amplitudes.par_chunks_mut(block).enumerate().for_each(|(c, chunk)| {
                let (lo, hi) = chunk.split_at_mut(stride);
                kernel(c * block, lo, hi);
            });
        }
    }

    fn diagonal(&mut self, mask: usize, factor: Complex64) {
        let op = |(i, a): (usize, &mut Complex64)| {
            if i & mask == mask {
                *a *= factor;
            }
        };
        if self.amplitudes.len() < PAR_LEN {
            self.amplitudes.iter_mut().enumerate().for_each(op);
        } else {
            self.amplitudes.par_iter_mut().enumerate().for_each(op);
        }
    }
}

fn mask_of(qubits: &[usize]) -> usize {
    qubits.iter().fold(0, |m, q| m | 1 << q)
}

fn ry(angle: f64) -> impl Fn(Complex64, Complex64) -> (Complex64, Complex64) + Sync {
    let (s, c) = (angle / 2.0).sin_cos();
    move |a: Complex64, b: Complex64| (c * a - s * b, s * a + c * b)
}

pub fn apply(circuit: &Circuit, state: &StateVector) -> Result<StateVector> {
    let expected = 1usize << circuit.width();
    if state.amplitudes.len() != expected {
        return Err(QmciError::WidthMismatch { expected, found: state.amplitudes.len() });
    }
    let mut out = state.clone();
    for g in circuit.gates() {
        out.apply_gate(g);
    }
    if let Some(i) = out.amplitudes.iter().position(|a| !a.re.is_finite() || !a.im.is_finite()) {
        return Err(QmciError::NonFiniteAmplitude(i));
    }
    Ok(out)
}

pub fn marginal_probability(state: &StateVector, qubit: usize, bit: u8) -> Result<f64> {
    let width = state.width();
    if qubit >= width {
        return Err(QmciError::QubitOutOfRange { qubit, width });
    }
    if bit > 1 {
        return Err(QmciError::InvalidArgument(format!("bit must be 0 or 1, got {bit}")));
    }
    let want = (bit as usize) << qubit;
    let p: f64 = state
        .amplitudes
        .iter()
        .enumerate()
        .filter(|(i, _)| i & (1 << qubit) == want)
        .map(|(_, a)| a.norm_sqr())
        .sum();
    Ok(p.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hadamard_on_zero() {
        let c = Circuit::from_gates(1, vec![Gate::H(0)]).unwrap();
        let s = apply(&c, &StateVector::zero(1)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(s.amplitudes()[0].re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].re, h, epsilon = 1e-15);
        assert_abs_diff_eq!(marginal_probability(&s, 0, 1).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn ry_on_zero() {
        let theta = 0.83;
        let c = Circuit::from_gates(1, vec![Gate::Ry { target: 0, angle: theta }]).unwrap();
        let s = apply(&c, &StateVector::zero(1)).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, (theta / 2.0).cos(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].re, (theta / 2.0).sin(), epsilon = 1e-15);
    }

    #[test]
    fn ry_encodes_amplitude() {
        let angle = 2.0 * 0.3f64.sqrt().asin();
        let c = Circuit::from_gates(2, vec![Gate::Ry { target: 1, angle }]).unwrap();
        let s = apply(&c, &StateVector::zero(2)).unwrap();
        assert_abs_diff_eq!(marginal_probability(&s, 1, 1).unwrap(), 0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(marginal_probability(&s, 0, 1).unwrap(), 0.0);
    }

    #[test]
    fn width_mismatch_and_bad_index() {
        let c = Circuit::new(2);
        assert!(matches!(
            apply(&c, &StateVector::zero(3)),
            Err(QmciError::WidthMismatch { expected: 4, found: 8 })
        ));
        assert!(marginal_probability(&StateVector::zero(2), 2, 0).is_err());
    }

    #[test]
    fn controlled_gates_respect_controls() {
        // |10> (qubit 1 set): CX with control 0 does nothing, control 1 flips qubit 0.
        let s = StateVector::basis(2, 0b10).unwrap();
        let c = Circuit::from_gates(2, vec![Gate::Cx { control: 0, target: 1 }]).unwrap();
        assert_eq!(apply(&c, &s).unwrap(), s);
        let c = Circuit::from_gates(2, vec![Gate::Cx { control: 1, target: 0 }]).unwrap();
        assert_eq!(apply(&c, &s).unwrap(), StateVector::basis(2, 0b11).unwrap());
        let c = Circuit::from_gates(
            3,
            vec![Gate::Cry { controls: vec![0, 2], target: 1, angle: std::f64::consts::PI }],
        )
        .unwrap();
        let on = apply(&c, &StateVector::basis(3, 0b101).unwrap()).unwrap();
        assert_abs_diff_eq!(on.amplitudes()[0b111].re, 1.0, epsilon = 1e-15);
        let off = apply(&c, &StateVector::basis(3, 0b001).unwrap()).unwrap();
        assert_abs_diff_eq!(off.amplitudes()[0b001].re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn uniformly_controlled_ry_selects_angle() {
        let angles = vec![0.1, 0.7, 1.3, 2.9];
        let c = Circuit::from_gates(3, vec![Gate::Ucry { controls: vec![2, 0], target: 1, angles: angles.clone() }])
            .unwrap();
        for (idx, j) in [(0b000, 0), (0b100, 1), (0b001, 2), (0b101, 3)] {
            let s = apply(&c, &StateVector::basis(3, idx).unwrap()).unwrap();
            assert_abs_diff_eq!(s.amplitudes()[idx | 0b010].re, (angles[j] / 2.0).sin(), epsilon = 1e-15);
        }
    }

    #[test]
    fn parallel_kernels_match_sequential() {
        // 15 qubits crosses the parallel threshold; compare against a
        // qubit-by-qubit tensor-product oracle.
        let n = 15;
        let angles: Vec<f64> = (0..n).map(|q| 0.1 + 0.2 * q as f64).collect();
        let mut c = Circuit::new(n);
        for (q, &a) in angles.iter().enumerate() {
            c.push(Gate::Ry { target: q, angle: a }).unwrap();
        }
        let s = apply(&c, &StateVector::zero(n)).unwrap();
        for idx in [0usize, 1, 777, (1 << n) - 1, 12345] {
            let expect: f64 = (0..n)
                .map(|q| {
                    let (sn, cs) = (angles[q] / 2.0).sin_cos();
                    if idx >> q & 1 == 1 { sn } else { cs }
                })
                .product();
            assert_abs_diff_eq!(s.amplitudes()[idx].re, expect, epsilon = 1e-13);
        }
        let back = apply(&c.adjoint(), &s).unwrap();
        assert_abs_diff_eq!(back.amplitudes()[0].re, 1.0, epsilon = 1e-12);
    }
}
