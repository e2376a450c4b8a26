use super::{Circuit, Gate};
use crate::error::{QmciError, Result};

/// Q = A S0 A^dag S_flag, with the good subspace marked by a single flag qubit.
pub fn grover_operator(a: &Circuit, flag: usize) -> Result<Circuit> {
    grover_operator_marked(a, &[flag])
}

/// Q = A S0 A^dag S_good where the good subspace has every qubit in `good` set.
pub fn grover_operator_marked(a: &Circuit, good: &[usize]) -> Result<Circuit> {
    let all: Vec<usize> = (0..a.width()).collect();
    grover_operator_reflecting(a, good, &all)
}

/// As [`grover_operator_marked`], but S0 only reflects about |0> on `reflect`.
///
/// Valid when A maps the zero state of the omitted qubits to itself for every
/// input, as for ancillas that A computes and uncomputes.
pub fn grover_operator_reflecting(a: &Circuit, good: &[usize], reflect: &[usize]) -> Result<Circuit> {
    let w = a.width();
    let (&target, controls) = good
        .split_last()
        .ok_or_else(|| QmciError::InvalidArgument("empty good-qubit list".into()))?;
    let (&r_target, r_controls) = reflect
        .split_last()
        .ok_or_else(|| QmciError::InvalidArgument("empty reflection register".into()))?;
    let mut q = Circuit::new(w);
    q.push(Gate::Mcz { controls: controls.to_vec(), target })?;
    q.append(&a.adjoint(), 0)?;
    for &i in reflect {
        q.push(Gate::X(i))?;
    }
    q.push(Gate::Mcz { controls: r_controls.to_vec(), target: r_target })?;
    for &i in reflect {
        q.push(Gate::X(i))?;
    }
    q.append(a, 0)?;
    Ok(q)
}

/// Q^m A as one circuit.
pub fn grover_power(a: &Circuit, good: &[usize], m: usize) -> Result<Circuit> {
    let mut c = a.clone();
    if m > 0 {
        let q = grover_operator_marked(a, good)?;
        for _ in 0..m {
            c.append(&q, 0)?;
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{apply, marginal_probability, StateVector};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn one_step_rotates_to_certainty() {
        let theta = PI / 6.0;
        let a = Circuit::from_gates(2, vec![Gate::H(0), Gate::Ry { target: 1, angle: 2.0 * theta }])
            .unwrap();
        let c = grover_power(&a, &[1], 1).unwrap();
        let s = apply(&c, &StateVector::zero(2)).unwrap();
        assert_abs_diff_eq!(marginal_probability(&s, 1, 1).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_amplitude_stays_zero() {
        let a = Circuit::new(3);
        for m in 0..5 {
            let s = apply(&grover_power(&a, &[2], m).unwrap(), &StateVector::zero(3)).unwrap();
            assert_abs_diff_eq!(marginal_probability(&s, 2, 1).unwrap(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn single_qubit_register() {
        let a = Circuit::from_gates(1, vec![Gate::Ry { target: 0, angle: 0.4 }]).unwrap();
        let theta = 0.2f64;
        for m in 0..6 {
            let s = apply(&grover_power(&a, &[0], m).unwrap(), &StateVector::zero(1)).unwrap();
            let expect = ((2 * m + 1) as f64 * theta).sin().powi(2);
            assert_abs_diff_eq!(marginal_probability(&s, 0, 1).unwrap(), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn empty_good_list_rejected() {
        assert!(grover_operator_marked(&Circuit::new(1), &[]).is_err());
    }
}
