//! Full integration runs: joint loaders plus cut arithmetic (P), one rotation
//! bank per sinusoid (R), amplitude estimation per term and recombination.

mod arithmetic;
mod plan;

pub use arithmetic::{add_into, compare_geq};
pub use plan::{
    estimate_resources, exact_comparison, integrate, plan, Allocation, EngineConfig, ExactComparison,
    IntegrationResult, Job, JobKind, JobReport, MagnitudeSource, MetricTotals, Plan, ResourceReport,
    Strategy, Synthesis,
};

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circuit::{apply, Circuit, Gate, StateVector};
use crate::distributions::{discretise_with, DensitySpec, Discretisation, Grid, GridConvention};
use crate::error::{QmciError, Result};
use crate::fourier::{FunctionApplied, SinusoidTerm};
use crate::state_prep::{amplitude_loader, uniform_loader, PreparedState};

fn cell_mass() -> Discretisation {
    Discretisation::CellMass
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Loader {
    /// Hadamard on every qubit; only for uniform densities.
    Hadamard,
    /// Exact tree of uniformly controlled rotations over the discretised density.
    Exact {
        #[serde(default = "cell_mass")]
        discretisation: Discretisation,
    },
    /// A previously prepared deterministic circuit.
    Prepared { state: Box<PreparedState> },
    /// Same as `Prepared`, read from a JSON file relative to the spec.
    PreparedFile { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub density: DensitySpec,
    pub grid: Grid,
    /// Hadamards for uniform densities and the exact loader otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loader: Option<Loader>,
}

impl Dimension {
    pub fn new(density: DensitySpec, grid: Grid) -> Self {
        Dimension { density, grid, loader: None }
    }

    /// Loader circuit on `grid.n` qubits and the probabilities it produces.
    pub fn resolve(&self) -> Result<(Circuit, Vec<f64>)> {
        self.density.validate()?;
        self.grid.validate()?;
        let n = self.grid.n;
        let loader = self.loader.clone().unwrap_or(match self.density {
            DensitySpec::Uniform => Loader::Hadamard,
            _ => Loader::Exact { discretisation: Discretisation::CellMass },
        });
        match loader {
            Loader::Hadamard => {
                if self.density != DensitySpec::Uniform {
                    return Err(QmciError::Spec("the Hadamard loader needs a uniform density".into()));
                }
                Ok((uniform_loader(n)?, vec![1.0 / self.grid.len() as f64; self.grid.len()]))
            }
            Loader::Exact { discretisation } => {
                let d = discretise_with(&self.density, &self.grid, discretisation)?;
                Ok((amplitude_loader(&d.probs)?, d.probs))
            }
            Loader::Prepared { state } => {
                if state.data_qubits != n || state.ancillas != 0 || state.circuit.width() != n {
                    return Err(QmciError::Spec(format!(
                        "prepared state has {} data and {} ancilla qubits; the grid needs {} and 0",
                        state.data_qubits, state.ancillas, n
                    )));
                }
                let probs = apply(&state.circuit, &StateVector::zero(n))?.probabilities();
                Ok((state.circuit.clone(), probs))
            }
            Loader::PreparedFile { path } => Err(QmciError::Spec(format!(
                "prepared-state file '{path}' was not resolved; load the spec with IntegralSpec::from_file"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutDirection {
    Less,
    GreaterEq,
}

/// Σ_d coeffs[d] · i_d compared with `threshold`, in grid-index units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutExpression {
    pub coeffs: Vec<i64>,
    pub threshold: f64,
    pub direction: CutDirection,
}

/// Largest per-register multiplicity the adder chain accepts.
const MAX_CUT_COEFF: i64 = 16;

impl CutExpression {
    pub fn less(coeffs: Vec<i64>, threshold: f64) -> Self {
        CutExpression { coeffs, threshold, direction: CutDirection::Less }
    }

    pub fn validate(&self, dims: usize) -> Result<()> {
        if self.coeffs.len() != dims {
            return Err(QmciError::LengthMismatch { left: self.coeffs.len(), right: dims });
        }
        if self.coeffs.iter().all(|&c| c == 0) {
            return Err(QmciError::UnsupportedCut("cut has no nonzero coefficient".into()));
        }
        if let Some(c) = self.coeffs.iter().find(|&&c| !(0..=MAX_CUT_COEFF).contains(&c)) {
            return Err(QmciError::UnsupportedCut(format!(
                "coefficient {c} outside 0..={MAX_CUT_COEFF}; only sums of registers are compiled"
            )));
        }
        if !self.threshold.is_finite() {
            return Err(QmciError::UnsupportedCut("threshold is not finite".into()));
        }
        Ok(())
    }

    /// Integer threshold equivalent on integer sums.
    pub fn integer_threshold(&self) -> i64 {
        self.threshold.ceil() as i64
    }

    pub fn linear_form(&self, idx: &[usize]) -> i64 {
        self.coeffs.iter().zip(idx).map(|(c, &i)| c * i as i64).sum()
    }

    pub fn holds(&self, idx: &[usize]) -> bool {
        let l = self.linear_form(idx);
        match self.direction {
            CutDirection::Less => l < self.integer_threshold(),
            CutDirection::GreaterEq => l >= self.integer_threshold(),
        }
    }

    fn max_sum(&self, bits: &[usize]) -> i64 {
        self.coeffs.iter().zip(bits).map(|(c, &n)| c * ((1i64 << n) - 1)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralSpec {
    #[serde(default)]
    pub name: String,
    pub dimensions: Vec<Dimension>,
    pub function: FunctionApplied,
    #[serde(default)]
    pub cuts: Vec<CutExpression>,
    /// Multiplies E[g Θ] to give the integral.
    #[serde(default = "one")]
    pub scale: f64,
    /// Target relative RMSE.
    pub precision: f64,
    /// Known value of the integral, used to convert relative to absolute precision.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl IntegralSpec {
    pub fn validate(&self) -> Result<()> {
        let d = self.dimensions.len();
        if d == 0 {
            return Err(QmciError::Spec("no dimensions".into()));
        }
        if self.function.monomials.is_empty() {
            return Err(QmciError::Spec("function applied has no monomials".into()));
        }
        if self.function.dims() != d {
            return Err(QmciError::Spec(format!(
                "function applied has {} variables but the spec has {d} dimensions",
                self.function.dims()
            )));
        }
        self.function.validate()?;
        for dim in &self.dimensions {
            dim.density.validate()?;
            dim.grid.validate()?;
            if dim.grid.convention != GridConvention::HalfOpen {
                return Err(QmciError::InvalidGrid("the engine needs half-open grids".into()));
            }
        }
        for c in &self.cuts {
            c.validate(d)?;
        }
        if !(self.scale.is_finite() && self.scale != 0.0) {
            return Err(QmciError::Spec("scale must be finite and nonzero".into()));
        }
        if !(self.precision > 0.0 && self.precision < 1.0) {
            return Err(QmciError::Spec(format!("precision {} outside (0, 1)", self.precision)));
        }
        if let Some(r) = self.reference {
            if !r.is_finite() {
                return Err(QmciError::Spec("reference value is not finite".into()));
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: IntegralSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Reads a spec and inlines any `prepared_file` loaders, resolved
    /// relative to the spec's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let mut spec: IntegralSpec = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for d in &mut spec.dimensions {
            if let Some(Loader::PreparedFile { path: p }) = &d.loader {
                let state: PreparedState = serde_json::from_str(&std::fs::read_to_string(base.join(p))?)?;
                d.loader = Some(Loader::Prepared { state: Box::new(state) });
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn domains(&self) -> Vec<(f64, f64)> {
        self.dimensions.iter().map(|d| (d.grid.x_l, d.grid.x_u)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub start: usize,
    pub len: usize,
}

impl Register {
    pub fn qubits(&self) -> Vec<usize> {
        (self.start..self.start + self.len).collect()
    }
}

/// Qubit allocation: data registers, then the sum register and carries used
/// by the cut arithmetic, then one flag per cut and the rotation flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisterLayout {
    pub data: Vec<Register>,
    pub sum: Option<Register>,
    pub carries: Option<Register>,
    pub cut_flags: Vec<usize>,
    pub flag: usize,
    pub width: usize,
}

impl RegisterLayout {
    pub fn new(bits: &[usize], cuts: &[CutExpression]) -> Result<Self> {
        let mut at = 0;
        let data: Vec<Register> = bits
            .iter()
            .map(|&len| {
                let r = Register { start: at, len };
                at += len;
                r
            })
            .collect();
        let (mut sum, mut carries) = (None, None);
        if !cuts.is_empty() {
            let m = cuts
                .iter()
                .map(|c| bit_length(c.max_sum(bits).max(1) as u64))
                .max()
                .unwrap_or(1);
            if m > 62 {
                return Err(QmciError::UnsupportedCut("sum register wider than 62 qubits".into()));
            }
            sum = Some(Register { start: at, len: m });
            at += m;
            if m > 1 {
                carries = Some(Register { start: at, len: m - 1 });
                at += m - 1;
            }
        }
        let cut_flags: Vec<usize> = (at..at + cuts.len()).collect();
        at += cuts.len();
        Ok(RegisterLayout { data, sum, carries, cut_flags, flag: at, width: at + 1 })
    }

    /// Qubits of the good subspace when estimating a rotation term.
    pub fn good_with_flag(&self) -> Vec<usize> {
        let mut g = self.cut_flags.clone();
        g.push(self.flag);
        g
    }

    /// Qubits that are not guaranteed to be clean after P and R, so the
    /// reflection about |0> has to include them.
    pub fn reflected(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.data.iter().flat_map(Register::qubits).collect();
        r.extend(&self.cut_flags);
        r.push(self.flag);
        r
    }
}

fn bit_length(v: u64) -> usize {
    (u64::BITS - v.leading_zeros()) as usize
}

/// Fragment that sets `flag` exactly on basis states satisfying `cut`,
/// restoring the sum register and carries to zero.
pub fn apply_threshold(layout: &RegisterLayout, cut: &CutExpression, flag: usize) -> Result<Circuit> {
    cut.validate(layout.data.len())?;
    let mut c = Circuit::new(layout.width);
    let bits: Vec<usize> = layout.data.iter().map(|r| r.len).collect();
    let max_sum = cut.max_sum(&bits);
    let t = cut.integer_threshold();
    let always = match cut.direction {
        CutDirection::Less if t > max_sum => true,
        CutDirection::GreaterEq if t <= 0 => true,
        _ => false,
    };
    let never = match cut.direction {
        CutDirection::Less => t <= 0,
        CutDirection::GreaterEq => t > max_sum,
    };
    if never {
        return Err(QmciError::UnsupportedCut(format!(
            "threshold {} excludes every grid point (sums range over 0..={max_sum})",
            cut.threshold
        )));
    }
    if always {
        c.push(Gate::X(flag))?;
        return Ok(c);
    }
    let sum = layout.sum.ok_or_else(|| QmciError::UnsupportedCut("layout has no sum register".into()))?;
    let s = sum.qubits();
    let carries = layout.carries.map(|r| r.qubits()).unwrap_or_default();
    let mut adder = Circuit::new(layout.width);
    for (d, &k) in cut.coeffs.iter().enumerate() {
        let a = layout.data[d].qubits();
        for _ in 0..k {
            add_into(&mut adder, &a, &s, &carries)?;
        }
    }
    c.append(&adder, 0)?;
    compare_geq(&mut c, &s, t as u64, &carries, flag)?;
    if cut.direction == CutDirection::Less {
        c.push(Gate::X(flag))?;
    }
    c.append(&adder.adjoint(), 0)?;
    Ok(c)
}

/// Joint loader over all data registers followed by every cut.
pub fn build_p(spec: &IntegralSpec) -> Result<(Circuit, RegisterLayout)> {
    let (c, layout, _) = build_p_with_probs(spec)?;
    Ok((c, layout))
}

pub(crate) fn build_p_with_probs(spec: &IntegralSpec) -> Result<(Circuit, RegisterLayout, Vec<Vec<f64>>)> {
    spec.validate()?;
    let bits: Vec<usize> = spec.dimensions.iter().map(|d| d.grid.n).collect();
    let layout = RegisterLayout::new(&bits, &spec.cuts)?;
    let mut c = Circuit::new(layout.width);
    let mut probs = Vec::with_capacity(bits.len());
    for (d, reg) in spec.dimensions.iter().zip(&layout.data) {
        let (loader, p) = d.resolve()?;
        c.append(&loader, reg.start)?;
        probs.push(p);
    }
    for (cut, &flag) in spec.cuts.iter().zip(&layout.cut_flags) {
        c.append(&apply_threshold(&layout, cut, flag)?, 0)?;
    }
    Ok((c, layout, probs))
}

/// Reduces an RY angle to (-2π, 2π]; RY has period 4π.
fn wrap_ry(a: f64) -> f64 {
    let r = a.rem_euclid(4.0 * PI);
    if r > 2.0 * PI { r - 4.0 * PI } else { r }
}

/// RY bank on the rotation flag whose 1-probability on basis state i is
/// sin^2(z(i)/2) with z = Σ_d k_d π i_d / N_d - φ.
pub fn build_r(term: &SinusoidTerm, layout: &RegisterLayout) -> Result<Circuit> {
    if term.freqs.len() != layout.data.len() {
        return Err(QmciError::LengthMismatch { left: term.freqs.len(), right: layout.data.len() });
    }
    let mut c = Circuit::new(layout.width);
    let tiny = 1e-13;
    let base = wrap_ry(-term.phase());
    if base.abs() > tiny {
        c.push(Gate::Ry { target: layout.flag, angle: base })?;
    }
    for (&k, reg) in term.freqs.iter().zip(&layout.data) {
        if k == 0 {
            continue;
        }
        let n_points = 1i64 << reg.len;
        if k.abs() > n_points {
            return Err(QmciError::FrequencyOverflow { freq: k, bits: reg.len });
        }
        for b in 0..reg.len {
            let angle = wrap_ry(k as f64 * PI * (1u64 << b) as f64 / n_points as f64);
            if angle.abs() > tiny {
                c.push(Gate::Cry { controls: vec![reg.start + b], target: layout.flag, angle })?;
            }
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::marginal_probability;
    use crate::fourier::Monomial;
    use approx::assert_abs_diff_eq;

    fn uniform_dim(n: usize) -> Dimension {
        Dimension::new(DensitySpec::Uniform, Grid::new(0.0, 1.0, n).unwrap())
    }

    fn spec(dims: Vec<Dimension>, cuts: Vec<CutExpression>) -> IntegralSpec {
        let d = dims.len();
        IntegralSpec {
            name: String::new(),
            dimensions: dims,
            function: FunctionApplied { monomials: vec![Monomial { coeff: 1.0, exponents: vec![1; d] }] },
            cuts,
            scale: 1.0,
            precision: 0.1,
            reference: None,
        }
    }

    #[test]
    fn two_uniform_loaders_are_flat() {
        let (c, layout) = build_p(&spec(vec![uniform_dim(2), uniform_dim(2)], vec![])).unwrap();
        assert_eq!(layout.width, 5);
        let s = apply(&c, &StateVector::zero(5)).unwrap();
        for (i, p) in s.probabilities().iter().enumerate() {
            let want = if i < 16 { 1.0 / 16.0 } else { 0.0 };
            assert_abs_diff_eq!(*p, want, epsilon = 1e-14);
        }
    }

    /// Runs a circuit of X, CX and MCX gates on a basis state.
    fn run_classical(c: &Circuit, mut x: usize) -> usize {
        let on = |x: usize, q: &[usize]| q.iter().all(|&q| x >> q & 1 == 1);
        for g in c.gates() {
            match g {
                Gate::X(t) => x ^= 1 << t,
                Gate::Cx { control, target } if on(x, &[*control]) => x ^= 1 << target,
                Gate::Mcx { controls, target } if on(x, controls) => x ^= 1 << target,
                Gate::Cx { .. } | Gate::Mcx { .. } => {}
                other => panic!("not a permutation gate: {other:?}"),
            }
        }
        x
    }

    /// Applies the threshold fragment to every data basis state and checks
    /// the flag and that sum and carries come back clean.
    fn check_threshold(bits: &[usize], cut: &CutExpression) {
        let layout = RegisterLayout::new(bits, std::slice::from_ref(cut)).unwrap();
        let t = apply_threshold(&layout, cut, layout.cut_flags[0]).unwrap();
        let data_bits: usize = bits.iter().sum();
        for x in 0..1usize << data_bits {
            let mut rest = x;
            let idx: Vec<usize> = bits
                .iter()
                .map(|&n| {
                    let i = rest & ((1 << n) - 1);
                    rest >>= n;
                    i
                })
                .collect();
            let want = x | (cut.holds(&idx) as usize) << layout.cut_flags[0];
            assert_eq!(run_classical(&t, x), want, "{bits:?} {cut:?} at {idx:?}");
        }
    }

    #[test]
    fn thresholds_exhaustive() {
        check_threshold(&[2], &CutExpression { coeffs: vec![1], threshold: 2.0, direction: CutDirection::GreaterEq });
        for t in [1.0, 2.5, 5.0, 9.0, 13.9, 14.0] {
            check_threshold(&[3, 3], &CutExpression::less(vec![1, 1], t));
            let geq = CutExpression { coeffs: vec![2, 1], threshold: t, direction: CutDirection::GreaterEq };
            if t.ceil() > 13.0 {
                let layout = RegisterLayout::new(&[2, 3], std::slice::from_ref(&geq)).unwrap();
                assert!(apply_threshold(&layout, &geq, layout.cut_flags[0]).is_err());
            } else {
                check_threshold(&[2, 3], &geq);
            }
        }
        check_threshold(&[2, 2, 2], &CutExpression::less(vec![1, 0, 3], 7.0));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn random_thresholds(n0 in 1usize..4, n1 in 1usize..4, c0 in 0i64..4, c1 in 1i64..3, frac in 0.01f64..0.99, less: bool) {
            let bits = [n0, n1];
            let max = c0 * ((1 << n0) - 1) + c1 * ((1 << n1) - 1);
            let threshold = (frac * max as f64).max(0.5);
            let direction = if less { CutDirection::Less } else { CutDirection::GreaterEq };
            check_threshold(&bits, &CutExpression { coeffs: vec![c0, c1], threshold, direction });
        }
    }

    #[test]
    fn vacuous_cut_always_sets_flag() {
        let cut = CutExpression::less(vec![1, 1], 100.0);
        let (c, layout) = build_p(&spec(vec![uniform_dim(2), uniform_dim(2)], vec![cut])).unwrap();
        let s = apply(&c, &StateVector::zero(layout.width)).unwrap();
        assert_abs_diff_eq!(marginal_probability(&s, layout.cut_flags[0], 1).unwrap(), 1.0, epsilon = 1e-12);
        let never = CutExpression::less(vec![1, 1], 0.0);
        assert!(build_p(&spec(vec![uniform_dim(2), uniform_dim(2)], vec![never])).is_err());
    }

    #[test]
    fn layout_matches_reported_cut_sizes() {
        let cut = CutExpression::less(vec![1, 1], 32.0);
        let l = RegisterLayout::new(&[5, 5], &[cut]).unwrap();
        assert_eq!(l.width, 23);
        let cut = CutExpression::less(vec![1, 1], 64.0);
        assert_eq!(RegisterLayout::new(&[6, 6], &[cut]).unwrap().width, 27);
    }

    #[test]
    fn rotation_bank_matches_weighted_sum() {
        let layout = RegisterLayout::new(&[3, 2], &[]).unwrap();
        let mut p = Circuit::new(layout.width);
        let probs0 = [0.05, 0.2, 0.1, 0.15, 0.1, 0.1, 0.2, 0.1];
        let probs1 = [0.4, 0.3, 0.2, 0.1];
        p.append(&amplitude_loader(&probs0).unwrap(), 0).unwrap();
        p.append(&amplitude_loader(&probs1).unwrap(), 3).unwrap();
        for (freqs, quarter) in [(vec![3, 0], 0u8), (vec![5, -3], 1), (vec![-8, 4], 0), (vec![1, 1], 1)] {
            let term = SinusoidTerm { coeff: 1.0, freqs: freqs.clone(), quarter };
            let mut a = p.clone();
            a.append(&build_r(&term, &layout).unwrap(), 0).unwrap();
            let s = apply(&a, &StateVector::zero(layout.width)).unwrap();
            let mut want = 0.0;
            for (i, p0) in probs0.iter().enumerate() {
                for (j, p1) in probs1.iter().enumerate() {
                    let z = term.argument(&[i as f64 / 8.0, j as f64 / 4.0]);
                    want += p0 * p1 * (z / 2.0).sin().powi(2);
                }
            }
            assert_abs_diff_eq!(marginal_probability(&s, layout.flag, 1).unwrap(), want, epsilon = 1e-12);
        }
        let bad = SinusoidTerm { coeff: 1.0, freqs: vec![9, 0], quarter: 0 };
        assert!(matches!(build_r(&bad, &layout), Err(QmciError::FrequencyOverflow { .. })));
    }
}
