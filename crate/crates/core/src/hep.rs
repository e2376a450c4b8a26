//! Cross-section integrands: physical constants, the general
//! numerator-over-propagators form, its split into engine specs, closed-form
//! oracles for the tau-decay examples and a plain Monte Carlo baseline.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{DensitySpec, Grid};
use crate::engine::{CutDirection, CutExpression, Dimension, IntegralSpec};
use crate::error::{QmciError, Result};
use crate::fourier::{FunctionApplied, Monomial};
use crate::qae::job_rng;
use crate::quad::{self, Tolerance};
use rand::Rng;

/// Masses and widths in GeV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicsConstants {
    pub m_tau: f64,
    pub m_w: f64,
    pub gamma_w: f64,
    pub m_z: f64,
    pub gamma_z: f64,
    pub m_t: f64,
    pub gamma_t: f64,
}

impl Default for PhysicsConstants {
    fn default() -> Self {
        PhysicsConstants {
            m_tau: 1.776,
            m_w: 80.377,
            gamma_w: 2.085,
            m_z: 91.1876,
            gamma_z: 2.4952,
            m_t: 172.5,
            gamma_t: 1.42,
        }
    }
}

impl PhysicsConstants {
    pub fn validate(&self) -> Result<()> {
        let all = [self.m_tau, self.m_w, self.gamma_w, self.m_z, self.gamma_z, self.m_t, self.gamma_t];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(QmciError::Spec("physics constants must be positive and finite".into()))
        }
    }

    /// Reads a JSON or TOML file (by extension); missing fields keep defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let c: PhysicsConstants = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text).map_err(|e| QmciError::Toml(e.to_string()))?,
            _ => serde_json::from_str(&text)?,
        };
        c.validate()?;
        Ok(c)
    }

    /// (mass, width) of a named resonance: "W", "Z" or "t".
    pub fn resonance(&self, name: &str) -> Result<(f64, f64)> {
        match name {
            "W" | "w" => Ok((self.m_w, self.gamma_w)),
            "Z" | "z" => Ok((self.m_z, self.gamma_z)),
            "t" | "top" => Ok((self.m_t, self.gamma_t)),
            other => Err(QmciError::Spec(format!("unknown resonance '{other}' (expected W, Z or t)"))),
        }
    }
}

/// ∫_0^s ds2 ∫_0^{s-s2} ds1 (s1^2 - M_τ^2 s1) = s^4/12 - M_τ^2 s^3/6.
pub fn sigma_1d_analytic(s: f64, m_tau: f64) -> f64 {
    s.powi(4) / 12.0 - m_tau * m_tau * s.powi(3) / 6.0
}

/// cot^{-1} on the principal branch (-π/2, π/2].
fn acot(x: f64) -> f64 {
    (1.0 / x).atan()
}

/// ∫_0^s ds2 ∫_0^{s-s2} ds1 (s1^2 - M_τ^2 s1) / ((s2 - M^2)^2 + M^2 Γ^2).
pub fn i_analytic(s: f64, m: f64, g: f64, m_tau: f64) -> f64 {
    let (m2, gm, t) = (m * m, g * m, m_tau * m_tau);
    let d = m2 - s;
    let log = ((gm * gm + d * d) / (m2 * (g * g + m2))).ln();
    let k = 3.0 * gm * gm * (t + 2.0 * m2 - 2.0 * s);
    let l = d * d * (3.0 * t + 2.0 * m2 - 2.0 * s);
    (gm * (gm * gm - 3.0 * d * (t + m2 - s)) * log
        + (m / g).atan() * (k - l)
        + (l - k) * acot(gm / d)
        + gm * s * (-3.0 * t - 4.0 * m2 + 5.0 * s))
        / (6.0 * gm)
}

/// ∫_0^s ds2 ∫_0^{s-s2} ds1 M_τ^2 s1 s2 / ((s2 - M^2)^2 + M^2 Γ^2).
pub fn i1_analytic(s: f64, m: f64, g: f64, m_tau: f64) -> f64 {
    let (m2, gm, t) = (m * m, g * m, m_tau * m_tau);
    let d = m2 - s;
    t / (4.0 * g)
        * (-2.0 * m * (g * g * (2.0 * s - 3.0 * m2) + d * d) * (acot(gm / d) - (m / g).atan())
            + g * (gm * gm - 3.0 * m2 * m2 + 4.0 * m2 * s - s * s) * (m2 * (g * g + m2) / (gm * gm + d * d)).ln()
            + g * s * (4.0 * m2 - 3.0 * s))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticValue {
    pub value: f64,
    pub formula: String,
    pub constants: PhysicsConstants,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

/// 1/((a·x - M^2)^2 + M^2 Γ^2). Only a single variable with unit
/// coefficient can become a distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Propagator {
    pub argument: Vec<f64>,
    pub mass: f64,
    pub width: f64,
}

impl Propagator {
    pub fn on(variable: usize, dims: usize, mass: f64, width: f64) -> Self {
        let mut argument = vec![0.0; dims];
        argument[variable] = 1.0;
        Propagator { argument, mass, width }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let a: f64 = self.argument.iter().zip(x).map(|(c, v)| c * v).sum();
        let m2 = self.mass * self.mass;
        1.0 / ((a - m2).powi(2) + m2 * self.width * self.width)
    }

    /// The variable this propagator depends on, or an error if it mixes several.
    fn variable(&self) -> Result<usize> {
        let nz: Vec<usize> = (0..self.argument.len()).filter(|&i| self.argument[i] != 0.0).collect();
        match nz.as_slice() {
            [v] if self.argument[*v] == 1.0 => Ok(*v),
            _ => Err(QmciError::Spec(format!(
                "propagator argument {:?} is not a single variable; sums or rescalings of variables \
                 inside a propagator cannot be loaded as a distribution",
                self.argument
            ))),
        }
    }
}

/// Σ coeffs[d] x_d < bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearBoundary {
    pub coeffs: Vec<f64>,
    pub bound: f64,
}

impl LinearBoundary {
    fn holds(&self, x: &[f64]) -> bool {
        self.coeffs.iter().zip(x).map(|(c, v)| c * v).sum::<f64>() < self.bound
    }
}

/// Σ_k α_k Π x^n / Π propagators over a box with linear boundaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralIntegrand {
    pub name: String,
    pub variables: Vec<Variable>,
    pub numerator: FunctionApplied,
    #[serde(default)]
    pub propagators: Vec<Propagator>,
    #[serde(default)]
    pub boundaries: Vec<LinearBoundary>,
}

impl GeneralIntegrand {
    pub fn validate(&self) -> Result<()> {
        let d = self.variables.len();
        if d == 0 {
            return Err(QmciError::Spec("integrand has no variables".into()));
        }
        if self.numerator.dims() != d {
            return Err(QmciError::Spec(format!(
                "numerator has {} variables, integrand {d}",
                self.numerator.dims()
            )));
        }
        self.numerator.validate()?;
        if self.propagators.len() > d {
            return Err(QmciError::Spec("more propagators than integration variables".into()));
        }
        let mut seen = vec![false; d];
        for p in &self.propagators {
            if p.argument.len() != d {
                return Err(QmciError::LengthMismatch { left: p.argument.len(), right: d });
            }
            let v = p.variable()?;
            if seen[v] {
                return Err(QmciError::Spec(format!("two propagators on variable {v}")));
            }
            seen[v] = true;
            DensitySpec::breit_wigner(p.mass, p.width)?;
        }
        for b in &self.boundaries {
            if b.coeffs.len() != d {
                return Err(QmciError::LengthMismatch { left: b.coeffs.len(), right: d });
            }
        }
        for v in &self.variables {
            if !(v.lower.is_finite() && v.upper.is_finite() && v.upper > v.lower) {
                return Err(QmciError::Spec(format!("variable {} has an empty range", v.name)));
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        if !self.boundaries.iter().all(|b| b.holds(x)) {
            return 0.0;
        }
        self.numerator.eval(x) * self.propagators.iter().map(|p| p.eval(x)).product::<f64>()
    }

    fn density(&self, d: usize) -> Result<DensitySpec> {
        for p in &self.propagators {
            if p.variable()? == d {
                return DensitySpec::breit_wigner(p.mass, p.width);
            }
        }
        Ok(DensitySpec::Uniform)
    }

    /// Adaptive quadrature for one variable, or two variables with at most
    /// one boundary of the form a x_0 + b x_1 < c with a > 0.
    pub fn quadrature(&self, tol: Tolerance) -> Result<f64> {
        self.validate()?;
        let breaks = |d: usize| -> Vec<f64> {
            self.propagators
                .iter()
                .filter(|p| p.variable().ok() == Some(d))
                .map(|p| p.mass * p.mass)
                .collect()
        };
        let v = &self.variables;
        match (v.len(), self.boundaries.as_slice()) {
            (1, []) => {
                let mut br = vec![v[0].lower];
                br.extend(breaks(0).into_iter().filter(|&b| b > v[0].lower && b < v[0].upper));
                br.push(v[0].upper);
                quad::integrate_with_breaks(|x| self.eval(&[x]), &br, tol)
            }
            (2, bs) if bs.len() <= 1 => {
                let (a, b, c) = match bs.first() {
                    Some(l) if l.coeffs[0] > 0.0 => (l.coeffs[0], l.coeffs[1], l.bound),
                    Some(_) => {
                        return Err(QmciError::Spec("boundary must have a positive first coefficient".into()))
                    }
                    None => (1.0, 0.0, f64::INFINITY),
                };
                let numer = |x0: f64, x1: f64| {
                    self.numerator.eval(&[x0, x1]) * self.propagators.iter().map(|p| p.eval(&[x0, x1])).product::<f64>()
                };
                // Outer integral over x_1, inner over x_0 up to the boundary.
                quad::integrate_2d(
                    |x1, x0| numer(x0, x1),
                    v[1].lower,
                    v[1].upper,
                    |_| v[0].lower,
                    |x1| v[0].upper.min((c - b * x1) / a),
                    &breaks(1),
                    &breaks(0),
                    tol,
                )
            }
            _ => Err(QmciError::Spec("quadrature supports one or two variables and one boundary".into())),
        }
    }
}

fn grid_for(v: &Variable, bits: usize) -> Result<Grid> {
    Grid::new(v.lower, v.upper, bits)
}

/// Turns a physical boundary into an integer cut on grid indices, which
/// needs the coefficients times the grid spacings to be integer multiples
/// of a common unit.
fn boundary_to_cut(b: &LinearBoundary, grids: &[Grid]) -> Result<CutExpression> {
    let scaled: Vec<f64> = b.coeffs.iter().zip(grids).map(|(c, g)| c * g.spacing()).collect();
    let unit = scaled
        .iter()
        .filter(|c| **c != 0.0)
        .map(|c| c.abs())
        .fold(f64::INFINITY, f64::min);
    if !unit.is_finite() {
        return Err(QmciError::UnsupportedCut("boundary has no nonzero coefficient".into()));
    }
    let mut coeffs = Vec::with_capacity(scaled.len());
    for c in &scaled {
        let r = c / unit;
        if (r - r.round()).abs() > 1e-9 || r < 0.0 {
            return Err(QmciError::UnsupportedCut(format!(
                "boundary {:?} < {} is not a nonnegative integer combination of grid steps",
                b.coeffs, b.bound
            )));
        }
        coeffs.push(r.round() as i64);
    }
    let offset: f64 = b.coeffs.iter().zip(grids).map(|(c, g)| c * g.x_l).sum();
    let threshold = (b.bound - offset) / unit;
    // Absorb rounding noise so an exact integer threshold stays exact.
    let threshold = if (threshold - threshold.round()).abs() < 1e-9 { threshold.round() } else { threshold };
    Ok(CutExpression { coeffs, threshold, direction: CutDirection::Less })
}

/// How monomials of the numerator are grouped into specs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    /// One spec per monomial.
    PerMonomial,
    /// All monomials in one spec.
    Fused,
}

/// Numerator monomials become the function applied, propagators the
/// distributions (uniform where there is none), boundaries become cuts.
/// The scale restores the integral from the normalised expectation.
pub fn decompose_to_spec(
    integrand: &GeneralIntegrand,
    bits: &[usize],
    grouping: Grouping,
    precision: f64,
) -> Result<Vec<IntegralSpec>> {
    integrand.validate()?;
    if bits.len() != integrand.variables.len() {
        return Err(QmciError::LengthMismatch { left: bits.len(), right: integrand.variables.len() });
    }
    let grids = integrand
        .variables
        .iter()
        .zip(bits)
        .map(|(v, &n)| grid_for(v, n))
        .collect::<Result<Vec<_>>>()?;
    let mut dims = Vec::with_capacity(grids.len());
    let mut scale = 1.0;
    for (d, g) in grids.iter().enumerate() {
        let density = integrand.density(d)?;
        scale *= density.mass_between(g.x_l, g.x_u);
        dims.push(Dimension::new(density, *g));
    }
    let cuts = integrand
        .boundaries
        .iter()
        .map(|b| boundary_to_cut(b, &grids))
        .collect::<Result<Vec<_>>>()?;
    let make = |name: String, monomials: Vec<Monomial>| IntegralSpec {
        name,
        dimensions: dims.clone(),
        function: FunctionApplied { monomials },
        cuts: cuts.clone(),
        scale,
        precision,
        reference: None,
    };
    let specs = match grouping {
        Grouping::Fused => vec![make(integrand.name.clone(), integrand.numerator.monomials.clone())],
        Grouping::PerMonomial => integrand
            .numerator
            .monomials
            .iter()
            .enumerate()
            .map(|(k, m)| make(format!("{}#{k}", integrand.name), vec![m.clone()]))
            .collect(),
    };
    for s in &specs {
        s.validate()?;
    }
    Ok(specs)
}

/// The three tau-decay style examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Example {
    /// Numerator only, both variables uniform, s = M_τ^2.
    OneDim,
    /// Numerator over the W propagator in s2, s = (100 GeV)^2.
    Separable,
    /// s times the separable numerator plus M_τ^2 s1 s2, same propagator.
    NonSeparable,
}

impl Example {
    pub const ALL: [Example; 3] = [Example::OneDim, Example::Separable, Example::NonSeparable];

    pub fn name(self) -> &'static str {
        match self {
            Example::OneDim => "one_dim",
            Example::Separable => "separable",
            Example::NonSeparable => "non_separable",
        }
    }

    pub fn parse(s: &str) -> Result<Example> {
        Example::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| QmciError::Spec(format!("unknown example '{s}'")))
    }

    /// Available energy s in GeV^2.
    pub fn energy(self, c: &PhysicsConstants) -> f64 {
        match self {
            Example::OneDim => c.m_tau * c.m_tau,
            Example::Separable | Example::NonSeparable => 100.0f64.powi(2),
        }
    }

    /// Qubits per variable used in the reported runs.
    pub fn bits(self) -> usize {
        match self {
            Example::OneDim => 5,
            Example::Separable | Example::NonSeparable => 6,
        }
    }

    pub fn integrand(self, c: &PhysicsConstants) -> GeneralIntegrand {
        let s = self.energy(c);
        let t = c.m_tau * c.m_tau;
        let var = |name: &str| Variable { name: name.into(), lower: 0.0, upper: s };
        let mono = |coeff: f64, e: [i32; 2]| Monomial { coeff, exponents: e.to_vec() };
        let (monomials, propagators) = match self {
            Example::OneDim => (vec![mono(1.0, [2, 0]), mono(-t, [1, 0])], vec![]),
            Example::Separable => {
                (vec![mono(1.0, [2, 0]), mono(-t, [1, 0])], vec![Propagator::on(1, 2, c.m_w, c.gamma_w)])
            }
            Example::NonSeparable => (
                vec![mono(s, [2, 0]), mono(-s * t, [1, 0]), mono(t, [1, 1])],
                vec![Propagator::on(1, 2, c.m_w, c.gamma_w)],
            ),
        };
        GeneralIntegrand {
            name: self.name().into(),
            variables: vec![var("s1"), var("s2")],
            numerator: FunctionApplied { monomials },
            propagators,
            boundaries: vec![LinearBoundary { coeffs: vec![1.0, 1.0], bound: s }],
        }
    }

    pub fn spec(self, c: &PhysicsConstants, precision: f64) -> Result<IntegralSpec> {
        let bits = self.bits();
        let mut specs = decompose_to_spec(&self.integrand(c), &[bits, bits], Grouping::Fused, precision)?;
        Ok(specs.remove(0))
    }

    pub fn analytic(self, c: &PhysicsConstants) -> AnalyticValue {
        let s = self.energy(c);
        let (value, formula) = match self {
            Example::OneDim => (sigma_1d_analytic(s, c.m_tau), "s^4/12 - M_tau^2 s^3/6"),
            Example::Separable => (i_analytic(s, c.m_w, c.gamma_w, c.m_tau), "I"),
            Example::NonSeparable => (
                s * i_analytic(s, c.m_w, c.gamma_w, c.m_tau) + i1_analytic(s, c.m_w, c.gamma_w, c.m_tau),
                "s I + I_1",
            ),
        };
        AnalyticValue { value, formula: formula.into(), constants: *c, s }
    }

    /// Values quoted for these examples in the literature.
    pub fn published(self) -> f64 {
        match self {
            Example::OneDim => -8.248,
            Example::Separable => 3.162e8,
            Example::NonSeparable => 3.179e12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
}

const MC_CHUNKS: u64 = 64;

/// Uniform-sampling Monte Carlo of the continuous integral the spec
/// discretises: points drawn uniformly in the box, weighted by the
/// unnormalised densities, with cuts evaluated on fractional grid indices.
pub fn classical_mc(spec: &IntegralSpec, samples: u64, seed: u64) -> Result<McEstimate> {
    spec.validate()?;
    if samples == 0 {
        return Err(QmciError::InvalidArgument("classical Monte Carlo needs at least one sample".into()));
    }
    let grids: Vec<Grid> = spec.dimensions.iter().map(|d| d.grid).collect();
    let volume: f64 = grids.iter().map(|g| g.x_u - g.x_l).product();
    let norm: f64 = spec.dimensions.iter().map(|d| d.density.mass_between(d.grid.x_l, d.grid.x_u)).product();
    let factor = spec.scale * volume / norm;
    let per = samples.div_ceil(MC_CHUNKS);
    let sums: Vec<(f64, f64, u64)> = (0..MC_CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let n = per.min(samples.saturating_sub(chunk * per));
            let mut rng = job_rng(seed, chunk + 1);
            let (mut s, mut s2) = (0.0, 0.0);
            let mut x = vec![0.0; grids.len()];
            let mut frac = vec![0.0; grids.len()];
            for _ in 0..n {
                for (d, g) in grids.iter().enumerate() {
                    x[d] = g.x_l + (g.x_u - g.x_l) * rng.random::<f64>();
                    frac[d] = (x[d] - g.x_l) / g.spacing();
                }
                let inside = spec.cuts.iter().all(|c| {
                    let l: f64 = c.coeffs.iter().zip(&frac).map(|(&k, f)| k as f64 * f).sum();
                    match c.direction {
                        CutDirection::Less => l < c.threshold,
                        CutDirection::GreaterEq => l >= c.threshold,
                    }
                });
                let v = if inside {
                    let w: f64 = spec.dimensions.iter().zip(&x).map(|(d, &xi)| d.density.value(xi)).product();
                    factor * w * spec.function.eval(&x)
                } else {
                    0.0
                };
                s += v;
                s2 += v * v;
            }
            (s, s2, n)
        })
        .collect();
    let (s, s2, n) = sums.iter().fold((0.0, 0.0, 0u64), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let mean = s / n as f64;
    let var = if n > 1 { ((s2 - n as f64 * mean * mean) / (n - 1) as f64).max(0.0) } else { 0.0 };
    Ok(McEstimate { estimate: mean, std_error: (var / n as f64).sqrt(), samples: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const TIGHT: Tolerance = Tolerance { abs: 0.0, rel: 1e-11 };

    #[test]
    fn one_dim_value() {
        let c = PhysicsConstants::default();
        let v = sigma_1d_analytic(c.m_tau * c.m_tau, c.m_tau);
        assert_eq!(format!("{v:.3}"), "-8.248");
        assert_relative_eq!(sigma_1d_analytic(2.0, 0.0), 16.0 / 12.0);
        for k in [0.3, 1.0, 1.9] {
            assert!(sigma_1d_analytic(k * c.m_tau * c.m_tau, c.m_tau) < 0.0);
        }
    }

    #[test]
    fn formulas_match_quadrature() {
        let c = PhysicsConstants::default();
        for e in Example::ALL {
            let q = e.integrand(&c).quadrature(TIGHT).unwrap();
            assert_relative_eq!(q, e.analytic(&c).value, max_relative = 1e-9);
        }
        // Width doubled: the peak contribution roughly halves.
        let wide = PhysicsConstants { gamma_w: 2.0 * c.gamma_w, ..c };
        let r = i_analytic(1e4, wide.m_w, wide.gamma_w, c.m_tau) / i_analytic(1e4, c.m_w, c.gamma_w, c.m_tau);
        assert!((r - 0.5).abs() < 0.1, "{r}");
        assert_eq!(i1_analytic(1e4, c.m_w, c.gamma_w, 0.0), 0.0);
    }

    #[test]
    fn decomposition_builds_expected_specs() {
        let c = PhysicsConstants::default();
        let spec = Example::OneDim.spec(&c, 0.1).unwrap();
        assert_eq!(spec.cuts, vec![CutExpression::less(vec![1, 1], 32.0)]);
        let s = c.m_tau * c.m_tau;
        assert_relative_eq!(spec.scale, s * s, max_relative = 1e-14);
        let parts = decompose_to_spec(&Example::Separable.integrand(&c), &[6, 6], Grouping::PerMonomial, 0.1).unwrap();
        assert_eq!(parts.len(), 2);
        assert!(matches!(parts[0].dimensions[1].density, DensitySpec::BreitWigner { .. }));
        assert_eq!(parts[1].function.monomials[0].coeff, -s);
    }

    #[test]
    fn mixed_propagator_rejected() {
        let c = PhysicsConstants::default();
        let mut g = Example::Separable.integrand(&c);
        g.propagators[0].argument = vec![1.0, 1.0];
        assert!(matches!(g.validate(), Err(QmciError::Spec(_))));
    }

    #[test]
    fn monte_carlo_constant_and_one_dim() {
        let c = PhysicsConstants::default();
        let mut spec = Example::OneDim.spec(&c, 0.1).unwrap();
        let r = classical_mc(&spec, 200_000, 5).unwrap();
        assert!((r.estimate + 8.248).abs() < 4.0 * r.std_error, "{r:?}");
        spec.cuts.clear();
        spec.function = FunctionApplied::monomial(2.0, vec![0, 0]);
        let r = classical_mc(&spec, 1000, 1).unwrap();
        assert_relative_eq!(r.estimate, 2.0 * spec.scale, max_relative = 1e-12);
        assert!(r.std_error < 1e-9 * spec.scale);
        assert!(classical_mc(&spec, 0, 1).is_err());
    }
}
