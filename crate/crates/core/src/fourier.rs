//! Fourier decomposition of polynomial observables into single sinusoids.
//!
//! Every variable is mapped to the unit coordinate u = (x - x_l)/(x_u - x_l)
//! in [0, 1). A polynomial p(u) is extended to period 2 by a cubic Hermite
//! bridge on [-1, 0) that matches p's value and slope at both seams, so the
//! extension is C^1 with piecewise-bounded third derivative and its Fourier
//! coefficients decay like 1/k^3.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QmciError, Result};

/// Dense polynomial, coefficients in ascending powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Polynomial { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Polynomial { coeffs: vec![c] }
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c)
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial {
            coeffs: self.coeffs.iter().enumerate().skip(1).map(|(j, c)| j as f64 * c).collect(),
        }
    }

    pub fn integral_01(&self) -> f64 {
        self.coeffs.iter().enumerate().map(|(j, c)| c / (j + 1) as f64).sum()
    }

    /// Upper bound on sup |p| over [0, 1].
    pub fn sup_bound_01(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    pub fn scaled(&self, s: f64) -> Polynomial {
        Polynomial { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn add(&self, o: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(o.coeffs.len());
        let get = |v: &Vec<f64>, i: usize| v.get(i).copied().unwrap_or(0.0);
        Polynomial { coeffs: (0..n).map(|i| get(&self.coeffs, i) + get(&o.coeffs, i)).collect() }
    }

    /// x^power written in the unit variable, with x = x_l + span * u.
    pub fn monomial_in_unit(power: u32, x_l: f64, span: f64) -> Polynomial {
        let p = power as usize;
        let mut coeffs = vec![0.0; p + 1];
        let mut binom = 1.0;
        for (j, c) in coeffs.iter_mut().enumerate() {
            *c = binom * x_l.powi((p - j) as i32) * span.powi(j as i32);
            binom = binom * (p - j) as f64 / (j + 1) as f64;
        }
        Polynomial { coeffs }
    }
}

/// ∫_a^b q(u) e^{-iωu} du for ω ≠ 0, by repeated integration by parts.
fn oscillatory_integral(q: &Polynomial, omega: f64, a: f64, b: f64) -> Complex64 {
    let iw = Complex64::new(0.0, omega);
    let prim = |u: f64| {
        let mut d = q.clone();
        let mut pow = iw;
        let mut s = Complex64::new(0.0, 0.0);
        while !d.coeffs.is_empty() {
            s += d.eval(u) / pow;
            pow *= iw;
            d = d.derivative();
        }
        -Complex64::from_polar(1.0, -omega * u) * s
    };
    prim(b) - prim(a)
}

/// Period-2 C^1 extension of a polynomial given on [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicExtension {
    pub poly: Polynomial,
    /// Bridge on [-1, 0] in the local coordinate t = u + 1.
    pub bridge: Polynomial,
    pub period: f64,
    /// Total variation of the extension's second derivative (jumps plus ∫|G'''|).
    pub variation: f64,
}

impl PeriodicExtension {
    pub fn eval(&self, u: f64) -> f64 {
        let r = (u + 1.0).rem_euclid(2.0) - 1.0;
        if r >= 0.0 {
            self.poly.eval(r)
        } else {
            self.bridge.eval(r + 1.0)
        }
    }
}

pub fn periodic_extend(p: &Polynomial) -> Result<PeriodicExtension> {
    if p.coeffs.iter().any(|c| !c.is_finite()) {
        return Err(QmciError::NotSmooth("polynomial has non-finite coefficients".into()));
    }
    let dp = p.derivative();
    let (y0, m0) = (p.eval(1.0), dp.eval(1.0));
    let (y1, m1) = (p.eval(0.0), dp.eval(0.0));
    // Hermite basis in t on [0, 1]: from (y0, m0) at t=0 to (y1, m1) at t=1.
    let bridge = Polynomial::new(vec![
        y0,
        m0,
        -3.0 * y0 - 2.0 * m0 + 3.0 * y1 - m1,
        2.0 * y0 + m0 - 2.0 * y1 + m1,
    ]);
    let d2p = dp.derivative();
    let d2b = bridge.derivative().derivative();
    let jumps = (d2p.eval(0.0) - d2b.eval(1.0)).abs() + (d2b.eval(0.0) - d2p.eval(1.0)).abs();
    let third = d2p.derivative().sup_bound_01() + d2b.derivative().sup_bound_01();
    Ok(PeriodicExtension { poly: p.clone(), bridge, period: 2.0, variation: jumps + third })
}

/// Truncated series a_0 + Σ_{k=1}^{K} a_k cos(kωu) + b_k sin(kωu) with ω = π.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierSeries {
    pub constant: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
    pub omega: f64,
    /// Sup-norm bound on the truncation error.
    pub bound: f64,
    /// Upper bound on sup |g| over [0, 1].
    pub sup: f64,
}

impl FourierSeries {
    pub fn cutoff(&self) -> usize {
        self.cos.len()
    }

    pub fn eval(&self, u: f64) -> f64 {
        let mut s = self.constant;
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let (sn, cs) = ((k + 1) as f64 * self.omega * u).sin_cos();
            s += a * cs + b * sn;
        }
        s
    }
}

/// Sup-norm bound on the tail beyond K for an extension with the given variation.
pub fn tail_bound(variation: f64, k: usize) -> f64 {
    variation / (2.0 * PI.powi(3) * (k as f64).powi(2))
}

/// Smallest cutoff whose tail bound is at most `target`.
pub fn cutoff_for_bound(variation: f64, target: f64) -> usize {
    if variation == 0.0 {
        return 1;
    }
    ((variation / (2.0 * PI.powi(3) * target)).sqrt().ceil() as usize).max(1)
}

pub fn decompose(ext: &PeriodicExtension, k_max: usize) -> Result<FourierSeries> {
    if k_max < 1 {
        return Err(QmciError::InvalidArgument("Fourier cutoff must be at least 1".into()));
    }
    let constant = 0.5 * (ext.poly.integral_01() + ext.bridge.integral_01());
    let mut cos = Vec::with_capacity(k_max);
    let mut sin = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let w = k as f64 * PI;
        // Bridge lives on u in [-1, 0]: substitute u = t - 1.
        let c = 0.5
            * (oscillatory_integral(&ext.poly, w, 0.0, 1.0)
                + Complex64::from_polar(1.0, w) * oscillatory_integral(&ext.bridge, w, 0.0, 1.0));
        cos.push(2.0 * c.re);
        sin.push(-2.0 * c.im);
    }
    Ok(FourierSeries {
        constant,
        cos,
        sin,
        omega: PI,
        bound: tail_bound(ext.variation, k_max),
        sup: ext.poly.sup_bound_01(),
    })
}

/// coeff * cos(Σ_d k_d π u_d - φ) with φ = quarter * π/2, quarter ∈ {0, 1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinusoidTerm {
    pub coeff: f64,
    pub freqs: Vec<i64>,
    pub quarter: u8,
}

impl SinusoidTerm {
    pub fn phase(&self) -> f64 {
        self.quarter as f64 * PI / 2.0
    }

    pub fn arity(&self) -> usize {
        self.freqs.iter().filter(|&&k| k != 0).count()
    }

    pub fn argument(&self, u: &[f64]) -> f64 {
        self.freqs.iter().zip(u).map(|(&k, &x)| k as f64 * PI * x).sum::<f64>() - self.phase()
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        self.coeff * self.argument(u).cos()
    }
}

/// Constant plus single sinusoids over `dims` unit variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermList {
    pub dims: usize,
    pub constant: f64,
    pub terms: Vec<SinusoidTerm>,
    /// Sup-norm bound on |represented function - exact function|.
    pub bound: f64,
    /// Upper bound on sup |exact function|.
    pub sup: f64,
}

impl TermList {
    pub fn constant(dims: usize, c: f64) -> Self {
        TermList { dims, constant: c, terms: Vec::new(), bound: 0.0, sup: c.abs() }
    }

    pub fn from_series(s: &FourierSeries, dim: usize, dims: usize) -> Self {
        let mut terms = Vec::new();
        for (k, (a, b)) in s.cos.iter().zip(&s.sin).enumerate() {
            let mut freqs = vec![0i64; dims];
            freqs[dim] = (k + 1) as i64;
            terms.push(SinusoidTerm { coeff: *a, freqs: freqs.clone(), quarter: 0 });
            terms.push(SinusoidTerm { coeff: *b, freqs, quarter: 1 });
        }
        TermList { dims, constant: s.constant, terms, bound: s.bound, sup: s.sup }.canonical()
    }

    pub fn eval(&self, u: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|t| t.eval(u)).sum::<f64>()
    }

    pub fn scaled(&self, c: f64) -> Self {
        TermList {
            dims: self.dims,
            constant: self.constant * c,
            terms: self
                .terms
                .iter()
                .map(|t| SinusoidTerm { coeff: t.coeff * c, ..t.clone() })
                .collect(),
            bound: self.bound * c.abs(),
            sup: self.sup * c.abs(),
        }
    }

    pub fn sum(&self, o: &TermList) -> Result<Self> {
        if self.dims != o.dims {
            return Err(QmciError::LengthMismatch { left: self.dims, right: o.dims });
        }
        let mut terms = self.terms.clone();
        terms.extend(o.terms.iter().cloned());
        Ok(TermList {
            dims: self.dims,
            constant: self.constant + o.constant,
            terms,
            bound: self.bound + o.bound,
            sup: self.sup + o.sup,
        }
        .canonical())
    }

    /// Pointwise product, collapsed back into single sinusoids.
    pub fn product(&self, o: &TermList) -> Result<Self> {
        if self.dims != o.dims {
            return Err(QmciError::LengthMismatch { left: self.dims, right: o.dims });
        }
        let mut terms = Vec::with_capacity(2 * self.terms.len() * o.terms.len() + self.terms.len() + o.terms.len());
        let mut constant = self.constant * o.constant;
        for t in &self.terms {
            terms.push(SinusoidTerm { coeff: t.coeff * o.constant, ..t.clone() });
        }
        for t in &o.terms {
            terms.push(SinusoidTerm { coeff: t.coeff * self.constant, ..t.clone() });
        }
        for a in &self.terms {
            for b in &o.terms {
                let c = 0.5 * a.coeff * b.coeff;
                let plus: Vec<i64> = a.freqs.iter().zip(&b.freqs).map(|(x, y)| x + y).collect();
                let minus: Vec<i64> = a.freqs.iter().zip(&b.freqs).map(|(x, y)| x - y).collect();
                for (freqs, q) in [
                    (plus, (a.quarter + b.quarter) as i32),
                    (minus, a.quarter as i32 - b.quarter as i32),
                ] {
                    match normalise(c, freqs, q) {
                        Normalised::Constant(v) => constant += v,
                        Normalised::Term(t) => terms.push(t),
                        Normalised::Zero => {}
                    }
                }
            }
        }
        Ok(TermList {
            dims: self.dims,
            constant,
            terms,
            bound: self.bound * o.sup + (self.sup + self.bound) * o.bound,
            sup: self.sup * o.sup,
        }
        .canonical())
    }

    /// Reduces each frequency into (-N_d, N_d] using u_d = i / N_d, which is
    /// exact on the grid. Adds nothing to the bound.
    pub fn folded(&self, points: &[usize]) -> Result<Self> {
        if points.len() != self.dims {
            return Err(QmciError::LengthMismatch { left: points.len(), right: self.dims });
        }
        let mut out = Vec::with_capacity(self.terms.len());
        let mut constant = self.constant;
        for t in &self.terms {
            let freqs: Vec<i64> = t
                .freqs
                .iter()
                .zip(points)
                .map(|(&k, &n)| {
                    let p = 2 * n as i64;
                    let r = k.rem_euclid(p);
                    if r > n as i64 { r - p } else { r }
                })
                .collect();
            match normalise(t.coeff, freqs, t.quarter as i32) {
                Normalised::Constant(v) => constant += v,
                Normalised::Term(t) => out.push(t),
                Normalised::Zero => {}
            }
        }
        Ok(TermList { terms: out, constant, ..self.clone() }.canonical())
    }

    /// Merges duplicate (frequency, phase) pairs and drops zero coefficients.
    pub fn canonical(mut self) -> Self {
        let mut map: BTreeMap<(Vec<i64>, u8), f64> = BTreeMap::new();
        for t in self.terms.drain(..) {
            match normalise(t.coeff, t.freqs, t.quarter as i32) {
                Normalised::Constant(v) => self.constant += v,
                Normalised::Term(t) => *map.entry((t.freqs, t.quarter)).or_insert(0.0) += t.coeff,
                Normalised::Zero => {}
            }
        }
        self.terms = map
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|((freqs, quarter), coeff)| SinusoidTerm { coeff, freqs, quarter })
            .collect();
        self
    }

    pub fn max_abs_freq(&self) -> Vec<i64> {
        let mut m = vec![0i64; self.dims];
        for t in &self.terms {
            for (d, k) in t.freqs.iter().enumerate() {
                m[d] = m[d].max(k.abs());
            }
        }
        m
    }
}

enum Normalised {
    Constant(f64),
    Term(SinusoidTerm),
    Zero,
}

/// Rewrites coeff * cos(θ - q π/2) so the phase is 0 or π/2 and the first
/// nonzero frequency is positive.
fn normalise(mut coeff: f64, mut freqs: Vec<i64>, q: i32) -> Normalised {
    let mut q = q.rem_euclid(4);
    if q >= 2 {
        coeff = -coeff;
        q -= 2;
    }
    if coeff == 0.0 {
        return Normalised::Zero;
    }
    match freqs.iter().find(|&&k| k != 0) {
        None => {
            if q == 0 {
                Normalised::Constant(coeff)
            } else {
                Normalised::Zero
            }
        }
        Some(&k) => {
            if k < 0 {
                freqs.iter_mut().for_each(|k| *k = -*k);
                // cos(-θ - π/2) = -cos(θ - π/2)
                if q == 1 {
                    coeff = -coeff;
                }
            }
            Normalised::Term(SinusoidTerm { coeff, freqs, quarter: q as u8 })
        }
    }
}

/// Product of two univariate series over variables 0 and 1.
pub fn product_terms(h: &FourierSeries, l: &FourierSeries) -> Result<TermList> {
    TermList::from_series(h, 0, 2).product(&TermList::from_series(l, 1, 2))
}

/// Estimated probability with its RMSE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub rmse: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, rmse: 0.0 }
    }
}

/// Recovers E[C g] from per-term flag probabilities a_t = E[C sin^2(z_t/2)].
///
/// `mass` is E[C] (exactly 1 without cuts). Uses E[C cos z] = E[C] - 2 a_t.
/// Estimates are assumed independent.
pub fn recombine(terms: &TermList, estimates: &[Estimate], mass: Estimate) -> Result<Estimate> {
    if estimates.len() != terms.terms.len() {
        return Err(QmciError::MissingEstimate(estimates.len().min(terms.terms.len())));
    }
    let csum: f64 = terms.constant + terms.terms.iter().map(|t| t.coeff).sum::<f64>();
    let mut value = csum * mass.value;
    let mut var = (csum * mass.rmse).powi(2);
    for (t, e) in terms.terms.iter().zip(estimates) {
        value -= 2.0 * t.coeff * e.value;
        var += (2.0 * t.coeff * e.rmse).powi(2);
    }
    Ok(Estimate { value, rmse: var.sqrt() })
}

/// Monomial coeff * Π_d x_d^{exponents[d]}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    pub exponents: Vec<i32>,
}

/// Polynomial observable g in physical variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionApplied {
    pub monomials: Vec<Monomial>,
}

impl FunctionApplied {
    pub fn monomial(coeff: f64, exponents: Vec<i32>) -> Self {
        FunctionApplied { monomials: vec![Monomial { coeff, exponents }] }
    }

    pub fn dims(&self) -> usize {
        self.monomials.first().map(|m| m.exponents.len()).unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.monomials
            .iter()
            .map(|m| m.coeff * m.exponents.iter().zip(x).map(|(&e, &v)| v.powi(e)).product::<f64>())
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dims();
        for m in &self.monomials {
            if m.exponents.len() != d {
                return Err(QmciError::LengthMismatch { left: m.exponents.len(), right: d });
            }
            if !m.coeff.is_finite() {
                return Err(QmciError::InvalidArgument("monomial coefficient is not finite".into()));
            }
            if let Some(e) = m.exponents.iter().find(|&&e| e < 0) {
                return Err(QmciError::NotSmooth(format!(
                    "exponent {e} is negative: the function is unbounded near zero and has no \
                     C^1 periodic extension with bounded derivatives"
                )));
            }
        }
        Ok(())
    }

    /// Per-monomial factors as unit-variable polynomials, `domains[d] = (x_l, x_u)`.
    pub fn unit_factors(&self, domains: &[(f64, f64)]) -> Result<Vec<(f64, Vec<Polynomial>)>> {
        self.validate()?;
        if domains.len() != self.dims() {
            return Err(QmciError::LengthMismatch { left: domains.len(), right: self.dims() });
        }
        Ok(self
            .monomials
            .iter()
            .map(|m| {
                let polys = m
                    .exponents
                    .iter()
                    .zip(domains)
                    .map(|(&e, &(lo, hi))| Polynomial::monomial_in_unit(e as u32, lo, hi - lo))
                    .collect();
                (m.coeff, polys)
            })
            .collect())
    }
}

/// Fourier term list for one monomial given per-dimension cutoffs.
pub fn monomial_terms(coeff: f64, factors: &[Polynomial], cutoffs: &[usize]) -> Result<TermList> {
    let dims = factors.len();
    let mut acc = TermList::constant(dims, coeff);
    for (d, p) in factors.iter().enumerate() {
        if p.coeffs.len() <= 1 {
            acc = acc.scaled(p.coeffs.first().copied().unwrap_or(0.0));
            continue;
        }
        let s = decompose(&periodic_extend(p)?, cutoffs[d])?;
        acc = acc.product(&TermList::from_series(&s, d, dims))?;
    }
    Ok(acc)
}
