//! Reversible integer arithmetic for cut functions: a ripple-carry adder that
//! accumulates registers into a sum register, and a comparator against a
//! classical threshold that computes only the carry chain of S + (2^m - T).

use crate::circuit::{Circuit, Gate};
use crate::error::{QmciError, Result};

fn toffoli(a: usize, b: usize, t: usize) -> Gate {
    Gate::Mcx { controls: vec![a, b], target: t }
}

/// Adds the register `a` into `b` modulo 2^|b|, using |b| - 1 clean carry
/// qubits that are returned to zero. `a` may be shorter than `b`.
pub fn add_into(c: &mut Circuit, a: &[usize], b: &[usize], carries: &[usize]) -> Result<()> {
    let m = b.len();
    if a.len() > m {
        return Err(QmciError::InvalidArgument(format!(
            "cannot add a {}-qubit register into {} qubits",
            a.len(),
            m
        )));
    }
    if m == 0 {
        return Ok(());
    }
    if carries.len() + 1 < m {
        return Err(QmciError::InvalidArgument(format!("adder needs {} carry qubits", m - 1)));
    }
    // carry(i) is c_i; c_0 is identically zero and has no qubit.
    let carry = |i: usize| if i == 0 { None } else { Some(carries[i - 1]) };
    let carry_gates = |i: usize| -> Vec<Gate> {
        let next = carries[i];
        let mut g = Vec::new();
        if let Some(&ai) = a.get(i) {
            g.push(toffoli(ai, b[i], next));
            g.push(Gate::Cx { control: ai, target: b[i] });
        }
        if let Some(ci) = carry(i) {
            g.push(toffoli(ci, b[i], next));
        }
        if let Some(&ai) = a.get(i) {
            g.push(Gate::Cx { control: ai, target: b[i] });
        }
        g
    };
    let sum_gates = |i: usize| -> Vec<Gate> {
        let mut g = Vec::new();
        if let Some(&ai) = a.get(i) {
            g.push(Gate::Cx { control: ai, target: b[i] });
        }
        if let Some(ci) = carry(i) {
            g.push(Gate::Cx { control: ci, target: b[i] });
        }
        g
    };
    for i in 0..m - 1 {
        for g in carry_gates(i) {
            c.push(g)?;
        }
    }
    for g in sum_gates(m - 1) {
        c.push(g)?;
    }
    for i in (0..m - 1).rev() {
        for g in carry_gates(i).into_iter().rev() {
            c.push(g)?;
        }
        for g in sum_gates(i) {
            c.push(g)?;
        }
    }
    Ok(())
}

/// Gates that XOR [S >= t] into `flag` for the m-qubit register `s` and a
/// classical 0 < t < 2^m, leaving the carries clean.
pub fn compare_geq(c: &mut Circuit, s: &[usize], t: u64, carries: &[usize], flag: usize) -> Result<()> {
    let m = s.len();
    if m == 0 || m >= 63 || t == 0 || t >= 1 << m {
        return Err(QmciError::UnsupportedCut(format!(
            "threshold {t} not representable against a {m}-qubit sum"
        )));
    }
    if carries.len() + 1 < m {
        return Err(QmciError::InvalidArgument(format!("comparator needs {} carry qubits", m - 1)));
    }
    // Carry out of S + K with K = 2^m - t: c_{j+1} = s_j AND c_j when k_j = 0,
    // s_j OR c_j when k_j = 1, with c_0 = 0.
    let k = (1u64 << m) - t;
    let stage = |j: usize| -> Vec<Gate> {
        let bit = k >> j & 1 == 1;
        let out = if j + 1 == m { flag } else { carries[j] };
        if j == 0 {
            return if bit { vec![Gate::Cx { control: s[0], target: out }] } else { Vec::new() };
        }
        let prev = carries[j - 1];
        if bit {
            // OR via De Morgan.
            vec![
                Gate::X(s[j]),
                Gate::X(prev),
                toffoli(s[j], prev, out),
                Gate::X(out),
                Gate::X(s[j]),
                Gate::X(prev),
            ]
        } else {
            vec![toffoli(s[j], prev, out)]
        }
    };
    let compute: Vec<Gate> = (0..m - 1).flat_map(stage).collect();
    for g in compute.iter().chain(&stage(m - 1)) {
        c.push(g.clone())?;
    }
    for g in compute.iter().rev() {
        c.push(g.adjoint())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{apply, StateVector};

    fn run(c: &Circuit, index: usize) -> usize {
        let s = apply(c, &StateVector::basis(c.width(), index).unwrap()).unwrap();
        let (i, a) = s
            .amplitudes()
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.norm_sqr().total_cmp(&y.1.norm_sqr()))
            .unwrap();
        assert!((a.norm_sqr() - 1.0).abs() < 1e-12);
        i
    }

    #[test]
    fn adder_is_modular_addition() {
        // a: qubits 0..2, b: 2..6, carries: 6..9
        let a = [0, 1];
        let b = [2, 3, 4, 5];
        let carries = [6, 7, 8];
        let mut c = Circuit::new(9);
        add_into(&mut c, &a, &b, &carries).unwrap();
        for x in 0..4 {
            for y in 0..16 {
                let out = run(&c, x | y << 2);
                assert_eq!(out & 3, x);
                assert_eq!(out >> 2 & 15, (x + y) % 16, "{x} + {y}");
                assert_eq!(out >> 6, 0);
            }
        }
    }

    #[test]
    fn comparator_matches_classical() {
        let s = [0, 1, 2, 3];
        let carries = [4, 5, 6];
        for t in 1..16u64 {
            let mut c = Circuit::new(8);
            compare_geq(&mut c, &s, t, &carries, 7).unwrap();
            for v in 0..16usize {
                let out = run(&c, v);
                assert_eq!(out & 0x7f, v, "carries or sum disturbed");
                assert_eq!(out >> 7 == 1, v as u64 >= t, "{v} >= {t}");
            }
        }
        assert!(compare_geq(&mut Circuit::new(8), &s, 16, &carries, 7).is_err());
    }

    #[test]
    fn single_bit_registers() {
        let mut c = Circuit::new(2);
        add_into(&mut c, &[0], &[1], &[]).unwrap();
        assert_eq!(run(&c, 0b01), 0b11);
        assert_eq!(run(&c, 0b11), 0b01);
        let mut c = Circuit::new(2);
        compare_geq(&mut c, &[0], 1, &[], 1).unwrap();
        assert_eq!(run(&c, 1), 0b11);
        assert_eq!(run(&c, 0), 0);
    }
}
