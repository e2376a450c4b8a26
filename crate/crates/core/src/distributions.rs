//! Grids, target densities and the discretisation error metrics.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{QmciError, Result};
use crate::quad::{self, Tolerance};

/// Where the N = 2^n support points sit inside [x_l, x_u].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridConvention {
    /// Δ = (x_u - x_l)/N and x_i = x_l + iΔ, so x_{N-1} = x_u - Δ.
    #[default]
    HalfOpen,
    /// Δ = (x_u - x_l)/(N - 1), so x_{N-1} = x_u.
    Inclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x_l: f64,
    pub x_u: f64,
    pub n: usize,
    #[serde(default)]
    pub convention: GridConvention,
}

impl Grid {
    pub fn new(x_l: f64, x_u: f64, n: usize) -> Result<Grid> {
        Grid::with_convention(x_l, x_u, n, GridConvention::HalfOpen)
    }

    pub fn with_convention(x_l: f64, x_u: f64, n: usize, convention: GridConvention) -> Result<Grid> {
        let g = Grid { x_l, x_u, n, convention };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_l.is_finite() && self.x_u.is_finite()) || self.x_u <= self.x_l {
            return Err(QmciError::InvalidGrid(format!(
                "need finite x_u > x_l, got [{}, {}]",
                self.x_l, self.x_u
            )));
        }
        if self.n == 0 || self.n > 30 {
            return Err(QmciError::InvalidGrid(format!("qubit count {} not in 1..=30", self.n)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        1 << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        let l = self.x_u - self.x_l;
        match self.convention {
            GridConvention::HalfOpen => l / self.len() as f64,
            GridConvention::Inclusive => l / (self.len() - 1) as f64,
        }
    }

    pub fn point(&self, i: usize) -> f64 {
        self.x_l + i as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Integration cell attached to point i (clipped to the support).
    pub fn cell(&self, i: usize) -> (f64, f64) {
        let d = self.spacing();
        match self.convention {
            GridConvention::HalfOpen => (self.point(i), self.point(i) + d),
            GridConvention::Inclusive => {
                let x = self.point(i);
                ((x - 0.5 * d).max(self.x_l), (x + 0.5 * d).min(self.x_u))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensitySpec {
    Uniform,
    /// Propagator-shaped density 1/((x - M^2)^2 + M^2 Γ^2) in x = invariant mass squared.
    BreitWigner { mass: f64, width: f64 },
}

impl DensitySpec {
    pub fn breit_wigner(mass: f64, width: f64) -> Result<DensitySpec> {
        let d = DensitySpec::BreitWigner { mass, width };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DensitySpec::Uniform => Ok(()),
            DensitySpec::BreitWigner { mass, width } => {
                if mass > 0.0 && width > 0.0 && mass.is_finite() && width.is_finite() {
                    Ok(())
                } else {
                    Err(QmciError::InvalidArgument(format!(
                        "Breit-Wigner needs positive mass and width, got M={mass}, Γ={width}"
                    )))
                }
            }
        }
    }

    /// Unnormalised density.
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            DensitySpec::Uniform => 1.0,
            DensitySpec::BreitWigner { mass, width } => {
                let m2 = mass * mass;
                let d = x - m2;
                1.0 / (d * d + m2 * width * width)
            }
        }
    }

    /// An antiderivative of `value`.
    pub fn antiderivative(&self, x: f64) -> f64 {
        match *self {
            DensitySpec::Uniform => x,
            DensitySpec::BreitWigner { mass, width } => {
                let mg = mass * width;
                ((x - mass * mass) / mg).atan() / mg
            }
        }
    }

    /// Location of the density peak, if it has one.
    pub fn peak(&self) -> Option<f64> {
        match *self {
            DensitySpec::Uniform => None,
            DensitySpec::BreitWigner { mass, .. } => Some(mass * mass),
        }
    }

    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        self.antiderivative(b) - self.antiderivative(a)
    }
}

/// How grid probabilities are derived from a density.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discretisation {
    /// p_i ∝ f(x_i) Δ.
    #[default]
    Point,
    /// p_i ∝ ∫ f over the cell of x_i.
    CellMass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretisedDistribution {
    pub grid: Grid,
    pub probs: Vec<f64>,
}

impl DiscretisedDistribution {
    /// Validates nonnegativity and normalisation (to 1e-9), then renormalises exactly.
    pub fn from_probs(grid: Grid, probs: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        if probs.len() != grid.len() {
            return Err(QmciError::LengthMismatch { left: probs.len(), right: grid.len() });
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(QmciError::InvalidArgument("probabilities must be finite and nonnegative".into()));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(QmciError::InvalidArgument(format!("probabilities sum to {s}")));
        }
        Ok(DiscretisedDistribution { grid, probs: probs.into_iter().map(|p| p / s).collect() })
    }

    pub fn uniform(grid: Grid) -> Self {
        let n = grid.len();
        DiscretisedDistribution { grid, probs: vec![1.0 / n as f64; n] }
    }

    pub fn expectation<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        self.grid.points().into_iter().zip(&self.probs).map(|(x, p)| g(x) * p).sum()
    }

    pub fn argmax(&self) -> usize {
        self.probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    pub fn cdf(&self) -> Vec<f64> {
        self.probs
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["x", "prob"]).map_err(csv_err)?;
        for (x, p) in self.grid.points().iter().zip(&self.probs) {
            wr.serialize((x, p)).map_err(csv_err)?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> QmciError {
    QmciError::Io(std::io::Error::other(e))
}

pub fn density_value(spec: &DensitySpec, x: f64) -> f64 {
    spec.value(x)
}

/// Point-sampled discretisation, p_i ∝ f(x_i) Δ.
pub fn discretise(spec: &DensitySpec, grid: &Grid) -> Result<DiscretisedDistribution> {
    discretise_with(spec, grid, Discretisation::Point)
}

pub fn discretise_with(
    spec: &DensitySpec,
    grid: &Grid,
    rule: Discretisation,
) -> Result<DiscretisedDistribution> {
    spec.validate()?;
    grid.validate()?;
    let w: Vec<f64> = match rule {
        Discretisation::Point => {
            let d = grid.spacing();
            grid.points().into_iter().map(|x| spec.value(x) * d).collect()
        }
        Discretisation::CellMass => (0..grid.len())
            .map(|i| {
                let (a, b) = grid.cell(i);
                spec.mass_between(a, b).max(0.0)
            })
            .collect(),
    };
    let z: f64 = w.iter().sum();
    if !(z > 0.0 && z.is_finite()) {
        return Err(QmciError::ZeroMass);
    }
    Ok(DiscretisedDistribution { grid: *grid, probs: w.into_iter().map(|v| v / z).collect() })
}

/// Density rescaled to the unit interval u = (x - x_l)/(x_u - x_l) and
/// normalised to integrate to one there.
struct UnitDensity {
    spec: DensitySpec,
    grid: Grid,
    scale: f64,
}

impl UnitDensity {
    fn new(spec: &DensitySpec, grid: &Grid) -> Result<Self> {
        spec.validate()?;
        grid.validate()?;
        let l = grid.x_u - grid.x_l;
        let z = spec.mass_between(grid.x_l, grid.x_u);
        if !(z > 0.0) {
            return Err(QmciError::ZeroMass);
        }
        Ok(UnitDensity { spec: *spec, grid: *grid, scale: l / z })
    }

    fn at(&self, u: f64) -> f64 {
        let l = self.grid.x_u - self.grid.x_l;
        self.spec.value(self.grid.x_l + l * u) * self.scale
    }

    fn peak(&self) -> Option<f64> {
        let l = self.grid.x_u - self.grid.x_l;
        self.spec.peak().map(|x| (x - self.grid.x_l) / l).filter(|u| *u > 0.0 && *u < 1.0)
    }

    fn nodes(&self) -> (Vec<f64>, f64) {
        let l = self.grid.x_u - self.grid.x_l;
        let pts = self.grid.points().into_iter().map(|x| (x - self.grid.x_l) / l).collect();
        (pts, self.grid.spacing() / l)
    }
}

/// Discretisation error |∫ g f du - Σ g(u_i) f(u_i) Δ_u|.
///
/// Evaluated in the unit variable u = (x - x_l)/(x_u - x_l) with the density
/// normalised on [0, 1], so `g` receives u and the error is dimensionless.
pub fn error_discretisation<G: Fn(f64) -> f64>(g: G, spec: &DensitySpec, grid: &Grid) -> Result<f64> {
    let ud = UnitDensity::new(spec, grid)?;
    let mut br = vec![0.0];
    br.extend(ud.peak());
    br.push(1.0);
    let exact = quad::integrate_with_breaks(|u| g(u) * ud.at(u), &br, Tolerance { abs: 1e-12, rel: 1e-13 })?;
    let (pts, du) = ud.nodes();
    let riemann: f64 = pts.iter().map(|&u| g(u) * ud.at(u) * du).sum();
    Ok((exact - riemann).abs())
}

/// Normalisation error Σ |g(u_i) (f(u_i) Δ_u - f̃_i)|, f̃ the renormalised point masses.
/// Same unit-variable convention as [`error_discretisation`].
pub fn error_normalisation<G: Fn(f64) -> f64>(g: G, spec: &DensitySpec, grid: &Grid) -> Result<f64> {
    let ud = UnitDensity::new(spec, grid)?;
    let (pts, du) = ud.nodes();
    let raw: Vec<f64> = pts.iter().map(|&u| ud.at(u) * du).collect();
    let z: f64 = raw.iter().sum();
    if !(z > 0.0) {
        return Err(QmciError::ZeroMass);
    }
    Ok(pts.iter().zip(&raw).map(|(&u, &r)| (g(u) * (r - r / z)).abs()).sum())
}

/// |E[X Θ(X ≥ v)] - E[X Θ(X ≥ x_k)]| where x_k is the grid point at or below `v`.
pub fn error_thresholding(dist: &DiscretisedDistribution, v_th: f64) -> Result<f64> {
    let g = &dist.grid;
    if !(v_th >= g.x_l && v_th <= g.x_u) {
        return Err(QmciError::InvalidArgument(format!(
            "threshold {v_th} outside support [{}, {}]",
            g.x_l, g.x_u
        )));
    }
    let k = (((v_th - g.x_l) / g.spacing()).floor() as usize).min(g.len() - 1);
    let snapped = g.point(k);
    let tail = |t: f64| dist.expectation(|x| if x >= t { x } else { 0.0 });
    Ok((tail(v_th) - tail(snapped)).abs())
}

/// Mean squared difference between the two cumulative distributions.
pub fn cmse(prepared: &[f64], target: &[f64]) -> Result<f64> {
    if prepared.len() != target.len() {
        return Err(QmciError::LengthMismatch { left: prepared.len(), right: target.len() });
    }
    if prepared.is_empty() {
        return Ok(0.0);
    }
    let (mut a, mut b, mut s) = (0.0, 0.0, 0.0);
    for (p, q) in prepared.iter().zip(target) {
        a += p;
        b += q;
        s += (a - b) * (a - b);
    }
    Ok(s / prepared.len() as f64)
}

/// Jensen-Shannon divergence in nats.
pub fn jsd(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(QmciError::LengthMismatch { left: p.len(), right: q.len() });
    }
    let kl = |a: f64, m: f64| if a > 0.0 { a * (a / m).ln() } else { 0.0 };
    let s: f64 = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            let m = 0.5 * (a + b);
            0.5 * (kl(a, m) + kl(b, m))
        })
        .sum();
    Ok(s.max(0.0))
}
