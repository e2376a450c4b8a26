//! Gate-list circuits and a dense state-vector simulator.
//!
//! Qubit `q` corresponds to bit `q` of the basis-state index (little endian).

mod grover;
mod state;

pub use grover::{grover_operator, grover_operator_marked, grover_operator_reflecting, grover_power};
pub use state::{apply, marginal_probability, StateVector};

use serde::{Deserialize, Serialize};

use crate::error::{QmciError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "GateRecord", try_from = "GateRecord")]
pub enum Gate {
    H(usize),
    X(usize),
    Z(usize),
    Ry { target: usize, angle: f64 },
    /// RY on `target` applied only when every control is 1.
    Cry { controls: Vec<usize>, target: usize, angle: f64 },
    Cx { control: usize, target: usize },
    /// X on `target` when every control is 1.
    Mcx { controls: Vec<usize>, target: usize },
    /// Phase flip on the all-ones subspace of `controls` plus `target`.
    Mcz { controls: Vec<usize>, target: usize },
    /// Multiplies the all-ones subspace of `controls` plus `target` by exp(i angle).
    Phase { controls: Vec<usize>, target: usize, angle: f64 },
    /// Uniformly controlled RY: `angles[j]` is applied when the controls read
    /// j, with `controls[b]` as bit b of j.
    Ucry { controls: Vec<usize>, target: usize, angles: Vec<f64> },
}

impl Gate {
    pub fn kind(&self) -> &'static str {
        match self {
            Gate::H(_) => "h",
            Gate::X(_) => "x",
            Gate::Z(_) => "z",
            Gate::Ry { .. } => "ry",
            Gate::Cry { .. } => "cry",
            Gate::Cx { .. } => "cx",
            Gate::Mcx { .. } => "mcx",
            Gate::Mcz { .. } => "mcz",
            Gate::Phase { .. } => "phase",
            Gate::Ucry { .. } => "ucry",
        }
    }

    /// Controls first, target last.
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::H(q) | Gate::X(q) | Gate::Z(q) => vec![*q],
            Gate::Ry { target, .. } => vec![*target],
            Gate::Cx { control, target } => vec![*control, *target],
            Gate::Cry { controls, target, .. }
            | Gate::Mcx { controls, target }
            | Gate::Mcz { controls, target }
            | Gate::Phase { controls, target, .. }
            | Gate::Ucry { controls, target, .. } => {
                let mut q = controls.clone();
                q.push(*target);
                q
            }
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match self {
            Gate::Ry { angle, .. } | Gate::Cry { angle, .. } | Gate::Phase { angle, .. } => {
                Some(*angle)
            }
            _ => None,
        }
    }

    pub fn angles(&self) -> Option<&[f64]> {
        match self {
            Gate::Ucry { angles, .. } => Some(angles),
            _ => None,
        }
    }

    pub fn adjoint(&self) -> Gate {
        match self {
            Gate::Ry { target, angle } => Gate::Ry { target: *target, angle: -angle },
            Gate::Cry { controls, target, angle } => Gate::Cry {
                controls: controls.clone(),
                target: *target,
                angle: -angle,
            },
            Gate::Phase { controls, target, angle } => Gate::Phase {
                controls: controls.clone(),
                target: *target,
                angle: -angle,
            },
            Gate::Ucry { controls, target, angles } => Gate::Ucry {
                controls: controls.clone(),
                target: *target,
                angles: angles.iter().map(|a| -a).collect(),
            },
            g => g.clone(),
        }
    }

    pub fn shifted(&self, offset: usize) -> Gate {
        let s = |q: &usize| q + offset;
        let sv = |v: &Vec<usize>| v.iter().map(s).collect::<Vec<_>>();
        match self {
            Gate::H(q) => Gate::H(s(q)),
            Gate::X(q) => Gate::X(s(q)),
            Gate::Z(q) => Gate::Z(s(q)),
            Gate::Ry { target, angle } => Gate::Ry { target: s(target), angle: *angle },
            Gate::Cry { controls, target, angle } => Gate::Cry {
                controls: sv(controls),
                target: s(target),
                angle: *angle,
            },
            Gate::Cx { control, target } => Gate::Cx { control: s(control), target: s(target) },
            Gate::Mcx { controls, target } => Gate::Mcx { controls: sv(controls), target: s(target) },
            Gate::Mcz { controls, target } => Gate::Mcz { controls: sv(controls), target: s(target) },
            Gate::Phase { controls, target, angle } => Gate::Phase {
                controls: sv(controls),
                target: s(target),
                angle: *angle,
            },
            Gate::Ucry { controls, target, angles } => Gate::Ucry {
                controls: sv(controls),
                target: s(target),
                angles: angles.clone(),
            },
        }
    }

    pub fn validate(&self, width: usize) -> Result<()> {
        let qs = self.qubits();
        for (i, &q) in qs.iter().enumerate() {
            if q >= width {
                return Err(QmciError::QubitOutOfRange { qubit: q, width });
            }
            if qs[..i].contains(&q) {
                return Err(QmciError::DuplicateQubit(q));
            }
        }
        if let Some(a) = self.angle() {
            if !a.is_finite() {
                return Err(QmciError::NonFiniteAngle(a));
            }
        }
        if let Gate::Ucry { controls, angles, .. } = self {
            if controls.len() > 24 || angles.len() != 1 << controls.len() {
                return Err(QmciError::InvalidArgument(format!(
                    "uniformly controlled RY with {} controls needs {} angles, got {}",
                    controls.len(),
                    1u64 << controls.len().min(63),
                    angles.len()
                )));
            }
            if let Some(a) = angles.iter().find(|a| !a.is_finite()) {
                return Err(QmciError::NonFiniteAngle(*a));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GateRecord {
    kind: String,
    qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    angle: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    angles: Option<Vec<f64>>,
}

impl From<Gate> for GateRecord {
    fn from(g: Gate) -> Self {
        GateRecord {
            kind: g.kind().to_string(),
            qubits: g.qubits(),
            angle: g.angle(),
            angles: g.angles().map(<[f64]>::to_vec),
        }
    }
}

impl TryFrom<GateRecord> for Gate {
    type Error = String;

    fn try_from(r: GateRecord) -> std::result::Result<Self, String> {
        let angle = || r.angle.ok_or_else(|| format!("gate '{}' needs an angle", r.kind));
        let one = || match r.qubits.as_slice() {
            [q] => Ok(*q),
            _ => Err(format!("gate '{}' takes exactly one qubit", r.kind)),
        };
        let split = || match r.qubits.split_last() {
            Some((t, c)) => Ok((c.to_vec(), *t)),
            None => Err(format!("gate '{}' needs at least one qubit", r.kind)),
        };
        Ok(match r.kind.as_str() {
            "h" => Gate::H(one()?),
            "x" => Gate::X(one()?),
            "z" => Gate::Z(one()?),
            "ry" => Gate::Ry { target: one()?, angle: angle()? },
            "cry" => {
                let (controls, target) = split()?;
                Gate::Cry { controls, target, angle: angle()? }
            }
            "cx" => match r.qubits.as_slice() {
                [c, t] => Gate::Cx { control: *c, target: *t },
                _ => return Err("gate 'cx' takes two qubits".into()),
            },
            "mcx" => {
                let (controls, target) = split()?;
                Gate::Mcx { controls, target }
            }
            "mcz" => {
                let (controls, target) = split()?;
                Gate::Mcz { controls, target }
            }
            "phase" => {
                let (controls, target) = split()?;
                Gate::Phase { controls, target, angle: angle()? }
            }
            "ucry" => {
                let (controls, target) = split()?;
                let angles = r.angles.clone().ok_or("gate 'ucry' needs an angle list")?;
                Gate::Ucry { controls, target, angles }
            }
            other => return Err(format!("unknown gate kind '{other}'")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircuitRecord")]
pub struct Circuit {
    width: usize,
    gates: Vec<Gate>,
}

#[derive(Deserialize)]
struct CircuitRecord {
    width: usize,
    gates: Vec<Gate>,
}

impl TryFrom<CircuitRecord> for Circuit {
    type Error = QmciError;

    fn try_from(r: CircuitRecord) -> Result<Self> {
        Circuit::from_gates(r.width, r.gates)
    }
}

impl Circuit {
    pub fn new(width: usize) -> Self {
        Circuit { width, gates: Vec::new() }
    }

    pub fn from_gates(width: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Circuit::new(width);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.width)?;
        self.gates.push(gate);
        Ok(())
    }

    /// Appends `other` with its qubit `q` mapped to `q + offset`.
    pub fn append(&mut self, other: &Circuit, offset: usize) -> Result<()> {
        if other.width + offset > self.width {
            return Err(QmciError::QubitOutOfRange {
                qubit: other.width + offset - 1,
                width: self.width,
            });
        }
        self.gates.extend(other.gates.iter().map(|g| g.shifted(offset)));
        Ok(())
    }

    /// Same gates on a wider register.
    pub fn widened(&self, width: usize) -> Result<Circuit> {
        let mut c = Circuit::new(width);
        c.append(self, 0)?;
        Ok(c)
    }

    pub fn adjoint(&self) -> Circuit {
        Circuit {
            width: self.width,
            gates: self.gates.iter().rev().map(Gate::adjoint).collect(),
        }
    }

    /// Number of gates touching more than one qubit.
    pub fn multi_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.qubits().len() > 1).count()
    }

    /// Greedy ASAP layering over all gates.
    pub fn depth(&self) -> usize {
        let mut level = vec![0usize; self.width];
        let mut depth = 0;
        for g in &self.gates {
            let qs = g.qubits();
            let l = qs.iter().map(|&q| level[q]).max().unwrap_or(0) + 1;
            for q in qs {
                level[q] = l;
            }
            depth = depth.max(l);
        }
        depth
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Circuit> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rejects_bad_gates() {
        let mut c = Circuit::new(2);
        assert!(matches!(c.push(Gate::X(2)), Err(QmciError::QubitOutOfRange { .. })));
        assert!(matches!(
            c.push(Gate::Cx { control: 1, target: 1 }),
            Err(QmciError::DuplicateQubit(1))
        ));
        assert!(matches!(
            c.push(Gate::Ry { target: 0, angle: f64::NAN }),
            Err(QmciError::NonFiniteAngle(_))
        ));
        assert!(c.is_empty());
    }

    #[test]
    fn double_adjoint_is_identity() {
        let c = Circuit::from_gates(
            3,
            vec![
                Gate::H(0),
                Gate::Ry { target: 1, angle: 0.3 },
                Gate::Cry { controls: vec![0, 1], target: 2, angle: -1.1 },
                Gate::Phase { controls: vec![2], target: 0, angle: 0.7 },
                Gate::Mcz { controls: vec![0], target: 2 },
                Gate::Ucry { controls: vec![2, 0], target: 1, angles: vec![0.1, 0.2, 0.3, 0.4] },
            ],
        )
        .unwrap();
        assert_eq!(c.adjoint().adjoint(), c);
        assert_ne!(c.adjoint(), c);
    }

    #[test]
    fn depth_counts_layers() {
        let c = Circuit::from_gates(
            3,
            vec![Gate::H(0), Gate::H(1), Gate::H(2), Gate::Cx { control: 0, target: 1 }, Gate::X(2)],
        )
        .unwrap();
        assert_eq!(c.depth(), 2);
        assert_eq!(c.multi_qubit_count(), 1);
    }

    #[test]
    fn json_round_trip() {
        let c = Circuit::from_gates(
            3,
            vec![
                Gate::H(0),
                Gate::Cry { controls: vec![0, 1], target: 2, angle: 0.25 },
                Gate::Cx { control: 2, target: 0 },
                Gate::Ucry { controls: vec![0], target: 1, angles: vec![0.5, -0.5] },
            ],
        )
        .unwrap();
        let s = c.to_json().unwrap();
        assert!(s.contains("\"kind\": \"cry\""));
        assert_eq!(Circuit::from_json(&s).unwrap(), c);
        let bad = r#"{"width": 1, "gates": [{"kind": "x", "qubits": [3]}]}"#;
        assert!(Circuit::from_json(bad).is_err());
    }
}
