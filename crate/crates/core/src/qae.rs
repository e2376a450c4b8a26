//! Maximum-likelihood amplitude estimation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{apply, grover_operator_reflecting, Circuit, StateVector};
use crate::error::{QmciError, Result};

/// Calibrated RMSE constant: RMSE(â) ≤ KAPPA / sqrt(Σ N_k (2 m_k + 1)^2).
/// The Cramér-Rao bound gives 0.5 at a = 1/2. At some amplitudes the
/// likelihood occasionally peaks one period of the top power away from the
/// truth, which pushes the empirical constant to about 0.83.
pub const KAPPA: f64 = 0.9;

/// Smallest per-power shot count that keeps the likelihood unimodal enough
/// for the calibration constant to hold.
pub const MIN_SHOTS: u64 = 48;

const GRID_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Statevector,
    Analytic,
}

/// Prepared state A|0> whose good subspace has every `good` qubit set.
#[derive(Debug, Clone)]
pub struct AmplitudeProblem {
    pub circuit: Circuit,
    pub good: Vec<usize>,
    /// Qubits S0 reflects on; all of them when `None`.
    pub reflect: Option<Vec<usize>>,
    /// Known good-state probability; required by the analytic backend.
    pub amplitude: Option<f64>,
}

impl AmplitudeProblem {
    pub fn new(circuit: Circuit, flag: usize) -> Result<Self> {
        AmplitudeProblem::marked(circuit, vec![flag])
    }

    pub fn marked(circuit: Circuit, good: Vec<usize>) -> Result<Self> {
        if good.is_empty() {
            return Err(QmciError::InvalidArgument("no good qubits given".into()));
        }
        for &q in &good {
            if q >= circuit.width() {
                return Err(QmciError::QubitOutOfRange { qubit: q, width: circuit.width() });
            }
        }
        Ok(AmplitudeProblem { circuit, good, reflect: None, amplitude: None })
    }

    pub fn with_reflection(mut self, reflect: Vec<usize>) -> Result<Self> {
        if let Some(&q) = reflect.iter().find(|&&q| q >= self.circuit.width()) {
            return Err(QmciError::QubitOutOfRange { qubit: q, width: self.circuit.width() });
        }
        self.reflect = Some(reflect);
        Ok(self)
    }

    pub fn grover_operator(&self) -> Result<Circuit> {
        match &self.reflect {
            Some(r) => grover_operator_reflecting(&self.circuit, &self.good, r),
            None => {
                let all: Vec<usize> = (0..self.circuit.width()).collect();
                grover_operator_reflecting(&self.circuit, &self.good, &all)
            }
        }
    }

    /// Problem with no circuit, usable only with the analytic backend.
    pub fn analytic(a: f64) -> Result<Self> {
        let mut p = AmplitudeProblem::new(Circuit::new(1), 0)?;
        p.amplitude = Some(check_amplitude(a)?);
        Ok(p)
    }

    pub fn with_amplitude(mut self, a: f64) -> Result<Self> {
        self.amplitude = Some(check_amplitude(a)?);
        Ok(self)
    }

    /// Good-state probability after Q^m A|0> for each requested power.
    pub fn hit_probabilities(&self, powers: &[u64], backend: Backend) -> Result<Vec<f64>> {
        match backend {
            Backend::Analytic => {
                let a = self.amplitude.ok_or(QmciError::MissingAmplitude)?;
                let theta = a.sqrt().asin();
                Ok(powers.iter().map(|&m| amplified(theta, m)).collect())
            }
            Backend::Statevector => {
                let q = self.grover_operator()?;
                let mut state = apply(&self.circuit, &StateVector::zero(self.circuit.width()))?;
                let mut order: Vec<usize> = (0..powers.len()).collect();
                order.sort_by_key(|&i| powers[i]);
                let mut out = vec![0.0; powers.len()];
                let mut at = 0u64;
                for i in order {
                    while at < powers[i] {
                        state = apply(&q, &state)?;
                        at += 1;
                    }
                    out[i] = state.all_ones_probability(&self.good)?.clamp(0.0, 1.0);
                }
                Ok(out)
            }
        }
    }
}

fn check_amplitude(a: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&a) {
        Ok(a)
    } else {
        Err(QmciError::InvalidArgument(format!("amplitude {a} outside [0, 1]")))
    }
}

fn amplified(theta: f64, m: u64) -> f64 {
    ((2 * m + 1) as f64 * theta).sin().powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub power: u64,
    pub shots: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub entries: Vec<ScheduleEntry>,
}

impl Schedule {
    pub fn new(entries: Vec<ScheduleEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(QmciError::InvalidArgument("schedule is empty".into()));
        }
        if entries.iter().any(|e| e.shots == 0) {
            return Err(QmciError::InvalidArgument("every schedule entry needs shots".into()));
        }
        if entries.windows(2).any(|w| w[1].power < w[0].power) {
            return Err(QmciError::InvalidArgument("schedule powers must be nondecreasing".into()));
        }
        Ok(Schedule { entries })
    }

    /// Powers 0, 1, 2, 4, ..., 2^(k-1) with `shots` each.
    pub fn exponential(k: u32, shots: u64) -> Result<Self> {
        let mut entries = vec![ScheduleEntry { power: 0, shots }];
        entries.extend((0..k).map(|j| ScheduleEntry { power: 1 << j, shots }));
        Schedule::new(entries)
    }

    pub fn powers(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.power).collect()
    }

    pub fn max_power(&self) -> u64 {
        self.entries.iter().map(|e| e.power).max().unwrap_or(0)
    }

    pub fn total_shots(&self) -> u64 {
        self.entries.iter().map(|e| e.shots).sum()
    }

    /// Σ N_k (2 m_k + 1).
    pub fn queries(&self) -> u64 {
        self.entries.iter().map(|e| e.shots * (2 * e.power + 1)).sum()
    }

    /// Σ N_k (2 m_k + 1)^2, the Fisher information per 4 in θ.
    pub fn information(&self) -> f64 {
        self.entries.iter().map(|e| e.shots as f64 * ((2 * e.power + 1) as f64).powi(2)).sum()
    }

    /// Calibrated upper bound on the RMSE of the amplitude estimate.
    pub fn rmse_bound(&self) -> f64 {
        (KAPPA / self.information().sqrt()).min(0.5)
    }
}

/// Cheapest exponential schedule whose calibrated RMSE bound is at most `eps`.
pub fn schedule_for_precision(eps: f64) -> Result<Schedule> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(QmciError::InvalidArgument(format!("precision {eps} outside (0, 0.5]")));
    }
    let need = (KAPPA / eps).powi(2);
    for k in (0..=40u32).rev() {
        let info_per_shot: f64 =
            1.0 + (0..k).map(|j| ((2u64 << j) + 1) as f64).map(|c| c * c).sum::<f64>();
        let shots = (need / info_per_shot).ceil() as u64;
        if shots >= MIN_SHOTS || k == 0 {
            return Schedule::exponential(k, shots.max(1));
        }
    }
    unreachable!("k = 0 always returns")
}

/// Per-job random stream: one ChaCha8 key per seed, one stream per job.
pub fn job_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Number of `n` uniform draws falling below `p`.
pub fn sample_hits<R: Rng + ?Sized>(p: f64, n: u64, rng: &mut R) -> u64 {
    (0..n).filter(|_| rng.random::<f64>() < p).count() as u64
}

pub fn sample_outcomes<R: Rng + ?Sized>(
    problem: &AmplitudeProblem,
    m: u64,
    n: u64,
    backend: Backend,
    rng: &mut R,
) -> Result<u64> {
    let p = problem.hit_probabilities(&[m], backend)?[0];
    Ok(sample_hits(p, n, rng))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub estimate: f64,
    pub rmse: f64,
    pub shots: u64,
    pub queries: u64,
    pub schedule: Schedule,
    pub hits: Vec<u64>,
}

fn log_likelihood(schedule: &Schedule, hits: &[u64], theta: f64) -> f64 {
    let mut l = 0.0;
    for (e, &h) in schedule.entries.iter().zip(hits) {
        let p = amplified(theta, e.power);
        let miss = e.shots - h;
        if h > 0 {
            l += h as f64 * p.max(1e-300).ln();
        }
        if miss > 0 {
            l += miss as f64 * (1.0 - p).max(1e-300).ln();
        }
    }
    l
}

/// θ maximising the binomial likelihood: dense grid on [0, π/2], then
/// golden-section refinement around the best grid point.
pub fn maximize_likelihood(schedule: &Schedule, hits: &[u64]) -> Result<f64> {
    if hits.len() != schedule.entries.len() {
        return Err(QmciError::LengthMismatch { left: hits.len(), right: schedule.entries.len() });
    }
    if let Some(e) = schedule.entries.iter().zip(hits).find(|(e, &h)| h > e.shots) {
        return Err(QmciError::InvalidArgument(format!(
            "hit count {} exceeds {} shots",
            e.1, e.0.shots
        )));
    }
    let half_pi = std::f64::consts::FRAC_PI_2;
    if hits.iter().all(|&h| h == 0) {
        return Ok(0.0);
    }
    if schedule.entries.iter().zip(hits).all(|(e, &h)| h == e.shots) {
        return Ok(half_pi);
    }
    // Keep roughly 40 grid points per likelihood oscillation at the top power.
    let points = GRID_POINTS.max(40 * (2 * schedule.max_power() as usize + 1));
    let step = half_pi / (points - 1) as f64;
    let (mut best, mut best_l) = (0.0, f64::NEG_INFINITY);
    for i in 0..points {
        let t = i as f64 * step;
        let l = log_likelihood(schedule, hits, t);
        if l > best_l {
            best_l = l;
            best = t;
        }
    }
    let (mut a, mut b) = ((best - step).max(0.0), (best + step).min(half_pi));
    let gr = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..3 {
        let mut c = b - gr * (b - a);
        let mut d = a + gr * (b - a);
        let (mut fc, mut fd) = (log_likelihood(schedule, hits, c), log_likelihood(schedule, hits, d));
        for _ in 0..40 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - gr * (b - a);
                fc = log_likelihood(schedule, hits, c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + gr * (b - a);
                fd = log_likelihood(schedule, hits, d);
            }
        }
        let mid = 0.5 * (a + b);
        // Re-open a narrower bracket around the current optimum for the next round.
        let w = (b - a).max(1e-15) * 4.0;
        a = (mid - w).max(0.0);
        b = (mid + w).min(half_pi);
    }
    let t = 0.5 * (a + b);
    Ok(if log_likelihood(schedule, hits, t) >= best_l { t } else { best })
}

pub fn mlqae(
    problem: &AmplitudeProblem,
    schedule: &Schedule,
    backend: Backend,
    seed: u64,
) -> Result<EstimateResult> {
    mlqae_with_rng(problem, schedule, backend, &mut job_rng(seed, 0))
}

pub fn mlqae_with_rng<R: Rng + ?Sized>(
    problem: &AmplitudeProblem,
    schedule: &Schedule,
    backend: Backend,
    rng: &mut R,
) -> Result<EstimateResult> {
    let probs = problem.hit_probabilities(&schedule.powers(), backend)?;
    let hits: Vec<u64> =
        schedule.entries.iter().zip(&probs).map(|(e, &p)| sample_hits(p, e.shots, rng)).collect();
    estimate_from_hits(schedule, hits)
}

pub fn estimate_from_hits(schedule: &Schedule, hits: Vec<u64>) -> Result<EstimateResult> {
    let theta = maximize_likelihood(schedule, &hits)?;
    Ok(EstimateResult {
        estimate: theta.sin().powi(2).clamp(0.0, 1.0),
        rmse: schedule.rmse_bound(),
        shots: schedule.total_shots(),
        queries: schedule.queries(),
        schedule: schedule.clone(),
        hits,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    /// Number of Grover powers after the k = 0 entry.
    pub size: u32,
    pub queries: u64,
    pub quantum_rmse: f64,
    /// Plain sampling with the same number of oracle calls.
    pub classical_rmse: f64,
}

/// Empirical RMSE of MLQAE on exponential schedules of each size against
/// direct sampling at equal query count, for a known amplitude.
pub fn rmse_scan(a: f64, sizes: &[u32], shots: u64, reps: u64, seed: u64) -> Result<Vec<ScanPoint>> {
    if reps == 0 {
        return Err(QmciError::InvalidArgument("scan needs at least one repetition".into()));
    }
    let problem = AmplitudeProblem::analytic(a)?;
    sizes
        .iter()
        .map(|&k| {
            let schedule = Schedule::exponential(k, shots)?;
            let n = schedule.queries();
            let base = u64::from(k) << 40;
            let (q, c) = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let e = mlqae_with_rng(&problem, &schedule, Backend::Analytic, &mut job_rng(seed, base + 2 * r))?;
                    let hits = sample_hits(a, n, &mut job_rng(seed, base + 2 * r + 1));
                    Ok(((e.estimate - a).powi(2), (hits as f64 / n as f64 - a).powi(2)))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold((0.0, 0.0), |(q, c), (x, y)| (q + x, c + y));
            Ok(ScanPoint {
                size: k,
                queries: n,
                quantum_rmse: (q / reps as f64).sqrt(),
                classical_rmse: (c / reps as f64).sqrt(),
            })
        })
        .collect()
}

/// Least-squares slope of log y against log x; None with fewer than two
/// distinct x or any nonpositive value.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
