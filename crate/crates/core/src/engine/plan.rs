//! Cutoff selection, job planning and execution.
//!
//! The absolute target ε on E[g Θ] is split three ways: a quarter for the
//! Fourier tail, up to a quarter for sinusoids dropped because their
//! coefficients are tiny, and the rest for the amplitude estimates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_p_with_probs, build_r, IntegralSpec, RegisterLayout};
use crate::circuit::Circuit;
use crate::error::{QmciError, Result};
use crate::fourier::{
    decompose, periodic_extend, recombine, tail_bound, Estimate, Polynomial, SinusoidTerm, TermList,
};
use crate::qae::{job_rng, mlqae_with_rng, schedule_for_precision, AmplitudeProblem, Backend, Schedule};
use crate::resources::{census_power, rotation_count, synthesis_t_count, CostModel, Mode};

const MAX_CUTOFF: usize = 1 << 14;
/// Largest joint grid enumerated classically.
const MAX_SUPPORT: usize = 1 << 22;
const PILOT_ROUNDS: usize = 16;

/// How the monomials of g are turned into estimation jobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// One job per sinusoid of each monomial.
    #[default]
    PerTerm,
    /// Sinusoids with the same frequency and phase are merged across monomials.
    Fused,
}

/// How the statistical budget is shared between jobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Allocation {
    /// Same amplitude precision for every job, so each job's contribution
    /// to the error is proportional to its coefficient.
    #[default]
    Proportional,
    /// Minimises total queries: σ_j ∝ W_j^(-2/3).
    Optimal,
}

/// T cost of arbitrary rotations in fault-tolerant reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Synthesis {
    /// `cost.rotation_t` per rotation regardless of precision.
    Fixed,
    /// Each circuit's rotations share an error budget equal to its job's
    /// amplitude target, so the per-rotation T count grows with precision
    /// and circuit size.
    #[default]
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub backend: Backend,
    pub strategy: Strategy,
    pub allocation: Allocation,
    pub cost: CostModel,
    pub synthesis: Synthesis,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            backend: Backend::Analytic,
            strategy: Strategy::PerTerm,
            allocation: Allocation::Proportional,
            cost: CostModel::default(),
            synthesis: Synthesis::Adaptive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JobKind {
    /// E[Θ], the probability that every cut holds.
    Mass,
    Term { term: SinusoidTerm },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub kind: JobKind,
    /// Factor multiplying the amplitude error in the recombined estimate.
    pub weight: f64,
    pub target_rmse: f64,
    pub schedule: Schedule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MagnitudeSource {
    Reference,
    Pilot,
    ExactSum,
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub layout: RegisterLayout,
    pub cutoff: usize,
    /// Kept sinusoids of g in unit variables, one entry per job.
    pub terms: TermList,
    /// Fourier tail bound on g.
    pub tail: f64,
    /// Σ|c| over dropped sinusoids.
    pub dropped: f64,
    pub dropped_count: usize,
    /// Absolute target on E[g Θ].
    pub target: f64,
    pub magnitude: f64,
    pub magnitude_source: MagnitudeSource,
    pub mass: Option<Job>,
    pub jobs: Vec<Job>,
}

impl Plan {
    pub fn queries(&self) -> u64 {
        self.all_jobs().map(|j| j.schedule.queries()).sum()
    }

    fn all_jobs(&self) -> impl Iterator<Item = &Job> {
        self.mass.iter().chain(&self.jobs)
    }
}

/// Sup-norm truncation bound for one monomial without building its terms.
fn monomial_bound(coeff: f64, factors: &[Polynomial], k: usize) -> Result<f64> {
    let (mut bound, mut sup) = (0.0, coeff.abs());
    for p in factors {
        if p.coeffs.len() <= 1 {
            let c = p.coeffs.first().copied().unwrap_or(0.0).abs();
            bound *= c;
            sup *= c;
            continue;
        }
        let b = tail_bound(periodic_extend(p)?.variation, k);
        let m = p.sup_bound_01();
        bound = bound * m + (sup + bound) * b;
        sup *= m;
    }
    Ok(bound)
}

fn total_bound(factors: &[(f64, Vec<Polynomial>)], k: usize) -> Result<f64> {
    factors.iter().map(|(c, f)| monomial_bound(*c, f, k)).sum()
}

/// Smallest common cutoff with total tail bound at most `target`.
fn choose_cutoff(factors: &[(f64, Vec<Polynomial>)], target: f64) -> Result<usize> {
    if total_bound(factors, 1)? <= target {
        return Ok(1);
    }
    let mut hi = 2;
    while total_bound(factors, hi)? > target {
        if hi >= MAX_CUTOFF {
            return Err(QmciError::InfeasiblePrecision { target, floor: total_bound(factors, MAX_CUTOFF)? });
        }
        hi = (hi * 2).min(MAX_CUTOFF);
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if total_bound(factors, mid)? <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Term list of one monomial, folded onto the grid after every product.
fn monomial_termlist(coeff: f64, factors: &[Polynomial], k: usize, points: &[usize]) -> Result<TermList> {
    let dims = factors.len();
    let mut acc = TermList::constant(dims, coeff);
    for (d, p) in factors.iter().enumerate() {
        if p.coeffs.len() <= 1 {
            acc = acc.scaled(p.coeffs.first().copied().unwrap_or(0.0));
            continue;
        }
        let s = decompose(&periodic_extend(p)?, k)?;
        let t = TermList::from_series(&s, d, dims).folded(points)?;
        acc = acc.product(&t)?.folded(points)?;
    }
    Ok(acc)
}

fn sup_of(factors: &[(f64, Vec<Polynomial>)]) -> f64 {
    factors.iter().map(|(c, f)| c.abs() * f.iter().map(Polynomial::sup_bound_01).product::<f64>()).sum()
}

/// Grid points with their loader probability times the cut indicator.
struct Support {
    points: Vec<(Vec<usize>, f64)>,
    sizes: Vec<usize>,
}

impl Support {
    fn build(spec: &IntegralSpec, probs: &[Vec<f64>]) -> Option<Support> {
        let sizes: Vec<usize> = probs.iter().map(Vec::len).collect();
        let total = sizes.iter().try_fold(1usize, |a, &n| a.checked_mul(n))?;
        if total > MAX_SUPPORT {
            return None;
        }
        let mut points = Vec::new();
        let mut idx = vec![0usize; sizes.len()];
        for _ in 0..total {
            let w: f64 = idx.iter().zip(probs).map(|(&i, p)| p[i]).product();
            if w > 0.0 && spec.cuts.iter().all(|c| c.holds(&idx)) {
                points.push((idx.clone(), w));
            }
            for (d, i) in idx.iter_mut().enumerate() {
                *i += 1;
                if *i < sizes[d] {
                    break;
                }
                *i = 0;
            }
        }
        Some(Support { points, sizes })
    }

    fn unit(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().zip(&self.sizes).map(|(&i, &n)| i as f64 / n as f64).collect()
    }

    fn mass(&self) -> f64 {
        self.points.iter().map(|(_, w)| w).sum()
    }

    fn amplitude(&self, t: &SinusoidTerm) -> f64 {
        self.points.iter().map(|(i, w)| w * (0.5 * t.argument(&self.unit(i))).sin().powi(2)).sum()
    }

    /// E[g Θ] on the grid in physical variables.
    fn exact(&self, spec: &IntegralSpec) -> f64 {
        let grids: Vec<_> = spec.dimensions.iter().map(|d| d.grid).collect();
        self.points
            .iter()
            .map(|(idx, w)| {
                let x: Vec<f64> = idx.iter().zip(&grids).map(|(&i, g)| g.point(i)).collect();
                w * spec.function.eval(&x)
            })
            .sum()
    }
}

/// Everything derived from the spec that does not depend on the target.
struct Prepared {
    p: Circuit,
    layout: RegisterLayout,
    factors: Vec<(f64, Vec<Polynomial>)>,
    points: Vec<usize>,
    support: Option<Support>,
}

impl Prepared {
    fn new(spec: &IntegralSpec) -> Result<Prepared> {
        let (p, layout, probs) = build_p_with_probs(spec)?;
        let support = Support::build(spec, &probs);
        Ok(Prepared {
            p,
            layout,
            factors: spec.function.unit_factors(&spec.domains())?,
            points: probs.iter().map(Vec::len).collect(),
            support,
        })
    }

    fn support(&self) -> Result<&Support> {
        self.support.as_ref().ok_or_else(|| {
            QmciError::InvalidArgument(format!("joint grid larger than {MAX_SUPPORT} points"))
        })
    }
}

fn build_plan(
    prep: &Prepared,
    config: &EngineConfig,
    target: f64,
    magnitude: f64,
    magnitude_source: MagnitudeSource,
) -> Result<Plan> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(QmciError::InfeasiblePrecision { target, floor: 0.0 });
    }
    let cutoff = choose_cutoff(&prep.factors, target / 4.0)?;
    let tail = total_bound(&prep.factors, cutoff)?;
    let dims = prep.points.len();

    let lists = prep
        .factors
        .iter()
        .map(|(c, f)| monomial_termlist(*c, f, cutoff, &prep.points))
        .collect::<Result<Vec<_>>>()?;
    let mut terms = TermList::constant(dims, lists.iter().map(|l| l.constant).sum());
    terms.bound = tail;
    terms.sup = sup_of(&prep.factors);
    match config.strategy {
        Strategy::PerTerm => terms.terms = lists.into_iter().flat_map(|l| l.terms).collect(),
        Strategy::Fused => {
            terms.terms = lists.into_iter().flat_map(|l| l.terms).collect();
            terms = terms.canonical();
        }
    }

    // Drop the smallest sinusoids while their total weight fits in ε/4.
    let mut order: Vec<usize> = (0..terms.terms.len()).collect();
    order.sort_by(|&a, &b| terms.terms[a].coeff.abs().total_cmp(&terms.terms[b].coeff.abs()));
    let (mut dropped, mut drop) = (0.0, vec![false; terms.terms.len()]);
    for i in order {
        let c = terms.terms[i].coeff.abs();
        if dropped + c > target / 4.0 {
            break;
        }
        dropped += c;
        drop[i] = true;
    }
    let dropped_count = drop.iter().filter(|&&d| d).count();
    let mut keep = drop.iter().map(|d| !d);
    terms.terms.retain(|_| keep.next().unwrap_or(true));

    let budget = target - tail - dropped;
    let csum = terms.constant + terms.terms.iter().map(|t| t.coeff).sum::<f64>();
    let mass_weight = if prep.layout.cut_flags.is_empty() || csum == 0.0 { 0.0 } else { csum.abs() };
    let mut weights: Vec<f64> = terms.terms.iter().map(|t| 2.0 * t.coeff.abs()).collect();
    weights.push(mass_weight);
    let sigmas = allocate(&weights, budget, config.allocation);
    let job = |kind: JobKind, weight: f64, sigma: f64| -> Result<Job> {
        let target_rmse = sigma.min(0.5);
        Ok(Job { kind, weight, target_rmse, schedule: schedule_for_precision(target_rmse)? })
    };
    let mass = if mass_weight > 0.0 {
        Some(job(JobKind::Mass, mass_weight, sigmas[weights.len() - 1])?)
    } else {
        None
    };
    let jobs = terms
        .terms
        .iter()
        .zip(&weights)
        .zip(&sigmas)
        .map(|((t, &w), &s)| job(JobKind::Term { term: t.clone() }, w, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(Plan {
        layout: prep.layout.clone(),
        cutoff,
        terms,
        tail,
        dropped,
        dropped_count,
        target,
        magnitude,
        magnitude_source,
        mass,
        jobs,
    })
}

/// Per-job amplitude RMSE targets with Σ (W_j σ_j)^2 = budget^2.
fn allocate(weights: &[f64], budget: f64, allocation: Allocation) -> Vec<f64> {
    let active = |w: &&f64| **w > 0.0;
    match allocation {
        Allocation::Proportional => {
            let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
            let s = if norm > 0.0 { budget / norm } else { 0.5 };
            vec![s; weights.len()]
        }
        Allocation::Optimal => {
            let norm = weights.iter().filter(active).map(|w| w.powf(2.0 / 3.0)).sum::<f64>().sqrt();
            weights
                .iter()
                .map(|&w| if w > 0.0 { budget * w.powf(-2.0 / 3.0) / norm } else { 0.5 })
                .collect()
        }
    }
}

/// Plan for an explicit absolute target on the integral.
pub fn plan(spec: &IntegralSpec, config: &EngineConfig, absolute_target: Option<f64>) -> Result<Plan> {
    let prep = Prepared::new(spec)?;
    let (magnitude, source) = match absolute_target {
        Some(t) => (t / spec.precision, MagnitudeSource::Absolute),
        None => classical_magnitude(spec, &prep)?,
    };
    build_plan(&prep, config, spec.precision * magnitude / spec.scale.abs(), magnitude, source)
}

/// |integral| from the spec's reference or, failing that, the exact grid sum.
fn classical_magnitude(spec: &IntegralSpec, prep: &Prepared) -> Result<(f64, MagnitudeSource)> {
    match spec.reference {
        Some(r) => Ok((r.abs(), MagnitudeSource::Reference)),
        None => Ok(((spec.scale * prep.support()?.exact(spec)).abs(), MagnitudeSource::ExactSum)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobReport {
    pub kind: JobKind,
    pub weight: f64,
    pub target_rmse: f64,
    pub estimate: f64,
    pub rmse: f64,
    /// Exact amplitude, when the joint grid is small enough to enumerate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<f64>,
    pub queries: u64,
    pub shots: u64,
    pub max_power: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrationResult {
    pub name: String,
    pub estimate: f64,
    /// Statistical RMSE bound of the estimate.
    pub rmse: f64,
    /// Bias bound from the Fourier tail and dropped sinusoids.
    pub truncation: f64,
    /// rmse + truncation.
    pub error_bound: f64,
    pub target: f64,
    pub magnitude: f64,
    pub magnitude_source: MagnitudeSource,
    /// The same integral summed exactly over the grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact_discrete: Option<f64>,
    pub cutoff: usize,
    pub qubits: usize,
    pub queries: u64,
    pub shots: u64,
    pub pilot_queries: u64,
    pub jobs: Vec<JobReport>,
}

fn job_circuit(prep: &Prepared, job: &Job) -> Result<(Circuit, Vec<usize>)> {
    let mut a = prep.p.clone();
    match &job.kind {
        JobKind::Mass => Ok((a, prep.layout.cut_flags.clone())),
        JobKind::Term { term } => {
            a.append(&build_r(term, &prep.layout)?, 0)?;
            Ok((a, prep.layout.good_with_flag()))
        }
    }
}

fn exact_amplitude(prep: &Prepared, job: &Job) -> Option<f64> {
    let s = prep.support.as_ref()?;
    Some(match &job.kind {
        JobKind::Mass => s.mass(),
        JobKind::Term { term } => s.amplitude(term).clamp(0.0, 1.0),
    })
}

fn run_job(prep: &Prepared, job: &Job, backend: Backend, seed: u64, stream: u64) -> Result<JobReport> {
    let exact = exact_amplitude(prep, job);
    let problem = match backend {
        Backend::Analytic => {
            let a = exact.ok_or_else(|| {
                QmciError::InvalidArgument(format!(
                    "analytic backend needs a joint grid of at most {MAX_SUPPORT} points"
                ))
            })?;
            AmplitudeProblem::analytic(a)?
        }
        Backend::Statevector => {
            let (a, good) = job_circuit(prep, job)?;
            AmplitudeProblem::marked(a, good)?.with_reflection(prep.layout.reflected())?
        }
    };
    let r = mlqae_with_rng(&problem, &job.schedule, backend, &mut job_rng(seed, stream))?;
    Ok(JobReport {
        kind: job.kind.clone(),
        weight: job.weight,
        target_rmse: job.target_rmse,
        estimate: r.estimate,
        rmse: r.rmse,
        exact,
        queries: r.queries,
        shots: r.shots,
        max_power: job.schedule.max_power(),
    })
}

/// Runs every job and recombines; values are E[g Θ] in unit variables.
fn execute(prep: &Prepared, plan: &Plan, backend: Backend, seed: u64, base: u64) -> Result<(Estimate, Vec<JobReport>)> {
    let jobs: Vec<&Job> = plan.all_jobs().collect();
    let run = |(i, j): (usize, &&Job)| run_job(prep, j, backend, seed, base + i as u64 + 1);
    // Wide state vectors run one at a time to bound memory.
    let reports: Vec<JobReport> = if backend == Backend::Statevector && prep.layout.width > 20 {
        jobs.iter().enumerate().map(run).collect::<Result<_>>()?
    } else {
        jobs.par_iter().enumerate().map(run).collect::<Result<_>>()?
    };
    let (mass, rest) = match plan.mass {
        Some(_) => (Estimate { value: reports[0].estimate, rmse: reports[0].rmse }, &reports[1..]),
        // No cuts means E[Θ] = 1; a zero coefficient sum makes E[Θ] irrelevant.
        None => (Estimate::exact(1.0), &reports[..]),
    };
    let estimates: Vec<Estimate> = rest.iter().map(|r| Estimate { value: r.estimate, rmse: r.rmse }).collect();
    Ok((recombine(&plan.terms, &estimates, mass)?, reports))
}

/// Estimates the integral to the spec's relative precision.
///
/// The magnitude used to turn relative into absolute precision is the
/// spec's reference value when given, otherwise a pilot run is refined until
/// its own error is below 30% of its estimate.
pub fn integrate(spec: &IntegralSpec, config: &EngineConfig, seed: u64) -> Result<IntegrationResult> {
    let prep = Prepared::new(spec)?;
    let scale = spec.scale.abs();
    let mut pilot_queries = 0;
    let (magnitude, source) = match spec.reference {
        Some(r) => (r.abs(), MagnitudeSource::Reference),
        None => {
            let mut t = 0.3 * sup_of(&prep.factors).max(f64::MIN_POSITIVE);
            let mut found = None;
            for round in 0..PILOT_ROUNDS {
                let p = build_plan(&prep, config, t, 0.0, MagnitudeSource::Pilot)?;
                pilot_queries += p.queries();
                let (e, _) = execute(&prep, &p, config.backend, seed, (round as u64 + 1) << 32)?;
                let err = e.rmse + p.tail + p.dropped;
                if err <= 0.3 * e.value.abs() {
                    found = Some(e.value.abs() * scale);
                    break;
                }
                t = (0.3 * e.value.abs()).max(t / 8.0).min(t / 2.0);
            }
            let m = found.ok_or(QmciError::InfeasiblePrecision { target: t, floor: t })?;
            (m, MagnitudeSource::Pilot)
        }
    };
    let plan = build_plan(&prep, config, spec.precision * magnitude / scale, magnitude, source)?;
    let (e, jobs) = execute(&prep, &plan, config.backend, seed, 0)?;
    let truncation = (plan.tail + plan.dropped) * scale;
    Ok(IntegrationResult {
        name: spec.name.clone(),
        estimate: e.value * spec.scale,
        rmse: e.rmse * scale,
        truncation,
        error_bound: e.rmse * scale + truncation,
        target: plan.target * scale,
        magnitude,
        magnitude_source: source,
        exact_discrete: prep.support.as_ref().map(|s| s.exact(spec) * spec.scale),
        cutoff: plan.cutoff,
        qubits: plan.layout.width,
        queries: jobs.iter().map(|j| j.queries).sum(),
        shots: jobs.iter().map(|j| j.shots).sum(),
        pilot_queries,
        jobs,
    })
}

/// The estimator fed exact amplitudes, next to the direct grid sum. The two
/// differ by at most `truncation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactComparison {
    pub recombined: f64,
    pub direct: f64,
    pub truncation: f64,
    pub jobs: usize,
}

pub fn exact_comparison(spec: &IntegralSpec, config: &EngineConfig) -> Result<ExactComparison> {
    let prep = Prepared::new(spec)?;
    let (magnitude, source) = classical_magnitude(spec, &prep)?;
    let scale = spec.scale.abs();
    let plan = build_plan(&prep, config, spec.precision * magnitude / scale, magnitude, source)?;
    let exact = |j: &Job| -> Result<Estimate> {
        exact_amplitude(&prep, j)
            .map(Estimate::exact)
            .ok_or_else(|| QmciError::InvalidArgument(format!("joint grid larger than {MAX_SUPPORT} points")))
    };
    let mass = match &plan.mass {
        Some(j) => exact(j)?,
        None => Estimate::exact(1.0),
    };
    let estimates = plan.jobs.iter().map(exact).collect::<Result<Vec<_>>>()?;
    let r = recombine(&plan.terms, &estimates, mass)?;
    Ok(ExactComparison {
        recombined: r.value * spec.scale,
        direct: prep.support()?.exact(spec) * spec.scale,
        truncation: (plan.tail + plan.dropped) * scale,
        jobs: plan.all_jobs().count(),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricTotals {
    /// Summed over every distinct circuit Q^m A.
    pub total_count: u64,
    pub total_depth: u64,
    /// The circuit with the largest count.
    pub largest_count: u64,
    pub largest_depth: u64,
    /// Count weighted by the number of shots each circuit is run.
    pub executed_count: u64,
}

impl MetricTotals {
    fn add(&mut self, count: u64, depth: u64, shots: u64) {
        self.total_count += count;
        self.total_depth += depth;
        self.executed_count += count * shots;
        if count > self.largest_count {
            self.largest_count = count;
            self.largest_depth = depth;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub name: String,
    pub mode: Mode,
    pub precision: f64,
    pub magnitude: f64,
    pub magnitude_source: MagnitudeSource,
    pub qubits: usize,
    pub logical_width: usize,
    pub cutoff: usize,
    pub jobs: usize,
    pub circuits: usize,
    pub queries: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cx: Option<MetricTotals>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub all_gates: Option<MetricTotals>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<MetricTotals>,
}

/// Gate totals for every circuit the estimation would run. The magnitude
/// comes from the reference or the exact grid sum, never from sampling.
pub fn estimate_resources(spec: &IntegralSpec, config: &EngineConfig, mode: Mode) -> Result<ResourceReport> {
    let prep = Prepared::new(spec)?;
    let (magnitude, source) = classical_magnitude(spec, &prep)?;
    let plan = build_plan(
        &prep,
        config,
        spec.precision * magnitude / spec.scale.abs(),
        magnitude,
        source,
    )?;
    let censuses = plan
        .all_jobs()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|job| {
            let (a, good) = job_circuit(&prep, job)?;
            let q = AmplitudeProblem::marked(a.clone(), good)?
                .with_reflection(prep.layout.reflected())?
                .grover_operator()?;
            Ok(job
                .schedule
                .entries
                .iter()
                .map(|e| {
                    let model = match config.synthesis {
                        Synthesis::Fixed => config.cost,
                        Synthesis::Adaptive => {
                            let r = rotation_count(&a, &q, e.power).max(1);
                            // A rotation error δ moves the hit probability by at most 2δ.
                            CostModel { rotation_t: synthesis_t_count(job.target_rmse / (2.0 * r as f64)) }
                        }
                    };
                    (census_power(&a, &q, e.power, &model), e.shots)
                })
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut cx, mut all, mut t) = (MetricTotals::default(), MetricTotals::default(), MetricTotals::default());
    let (mut circuits, mut qubits) = (0, 0);
    for (c, shots) in censuses.iter().flatten() {
        circuits += 1;
        cx.add(c.cx_count, c.cx_depth, *shots);
        all.add(c.gate_count, c.gate_depth, *shots);
        t.add(c.t_count, c.t_depth, *shots);
        qubits = qubits.max(match mode {
            Mode::Nisq => c.nisq_qubits,
            Mode::Ft => c.ft_qubits,
        });
    }
    let nisq = mode == Mode::Nisq;
    Ok(ResourceReport {
        name: spec.name.clone(),
        mode,
        precision: spec.precision,
        magnitude,
        magnitude_source: source,
        qubits,
        logical_width: plan.layout.width,
        cutoff: plan.cutoff,
        jobs: plan.all_jobs().count(),
        circuits,
        queries: plan.queries(),
        cx: nisq.then_some(cx),
        all_gates: nisq.then_some(all),
        t: (!nisq).then_some(t),
    })
}
