//! Local nonlinear Step 4: a flag-only nonlinear Schrödinger flow.
//!
//! The register obeys
//!
//! ```text
//! i d|Ψ⟩/dt = ε tanh(α ⟨Ψ|1⊗(A − η1)|Ψ⟩) (1⊗A) |Ψ⟩
//! A = η(|0⟩⟨0| − |1⟩⟨1|) + √(1−η²)(|0⟩⟨1| + |1⟩⟨0|)
//! ```
//!
//! Since `A² = 1` and the generator is proportional to `1⊗A`, `⟨1⊗A⟩` is a
//! constant of motion and the flow is solved by
//! `|Ψ_t⟩ = (cos ωt − i (1⊗A) sin ωt)|Ψ₀⟩` with `ω` frozen from the initial
//! flag reduction. After Steps 1–3 the flag reduction is
//! `diag((2ⁿ−s)/2ⁿ, s/2ⁿ)` and
//!
//! ```text
//! ⟨σ₃⟩(t) = z₀ cos 2ωt + 2η² z₀ sin² ωt,   z₀ = (2ⁿ⁻¹ − s)/2ⁿ⁻¹
//! ```
//!
//! [`rk4_evolve`] integrates the equation of motion directly, re-evaluating
//! the nonlinearity at every stage, and serves as the independent check on
//! the closed form.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qstate::{partial_trace, DensityMatrix, StateError, StateVector, Subsystem, C64};

/// Largest `n` accepted by the analytic (density-matrix only) path.
pub const ANALYTIC_MAX_INPUTS: usize = 1000;
/// Integrations whose `|‖ψ‖² − 1|` exceeds this are rejected.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;
/// Slack on `⟨σ₃⟩ ∈ [−1, 1]` for stored samples.
pub const SIGMA3_RANGE_TOL: f64 = 1e-9;

pub const DEFAULT_EPSILON: f64 = 1.0;
pub const DEFAULT_ETA: f64 = 0.01;

const SIGMA3: [[C64; 2]; 2] = [
    [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
    [C64::new(0.0, 0.0), C64::new(-1.0, 0.0)],
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NlError {
    #[error("invalid nonlinear parameters: {0}")]
    InvalidParams(String),
    #[error("invalid time grid: t_max = {t_max}, dt = {dt}")]
    InvalidGrid { t_max: f64, dt: f64 },
    #[error("norm drift {drift:e} at t = {t} exceeds {NORM_DRIFT_LIMIT:e}; reduce dt")]
    NormDrift { drift: f64, t: f64 },
    #[error("trajectory covers {covered} but the decision needs at least {required}")]
    TooShort { covered: f64, required: f64 },
    #[error("no oscillation: ω = 0 when no input is marked")]
    NoOscillation,
    #[error("analytic path supports 1..={ANALYTIC_MAX_INPUTS} inputs, got {n}")]
    InputsOutOfRange { n: usize },
    #[error("marked count {s} exceeds 2^{n}")]
    MarkedCountOutOfRange { n: usize, s: u128 },
    #[error("trajectory samples invalid: {0}")]
    InvalidTrajectory(String),
    #[error(transparent)]
    State(#[from] StateError),
}

/// `A` for a given `η ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlagOperator {
    eta: f64,
    off: f64,
}

impl FlagOperator {
    pub fn new(eta: f64) -> Result<Self, NlError> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(NlError::InvalidParams(format!("eta = {eta} not in (0, 1)")));
        }
        Ok(FlagOperator {
            eta,
            off: (1.0 - eta * eta).sqrt(),
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn matrix(&self) -> [[C64; 2]; 2] {
        [
            [C64::new(self.eta, 0.0), C64::new(self.off, 0.0)],
            [C64::new(self.off, 0.0), C64::new(-self.eta, 0.0)],
        ]
    }

    /// `(1⊗A)ψ` together with `⟨ψ|1⊗A|ψ⟩` and `⟨ψ|ψ⟩`.
    fn apply(&self, psi: &[C64], out: &mut [C64]) -> (f64, f64) {
        let (mut expect, mut norm) = (0.0, 0.0);
        for (pair, dst) in psi.chunks_exact(2).zip(out.chunks_exact_mut(2)) {
            let (a0, a1) = (pair[0], pair[1]);
            dst[0] = a0 * self.eta + a1 * self.off;
            dst[1] = a0 * self.off - a1 * self.eta;
            expect += a0.re * dst[0].re + a0.im * dst[0].im + a1.re * dst[1].re + a1.im * dst[1].im;
            norm += a0.norm_sqr() + a1.norm_sqr();
        }
        (expect, norm)
    }
}

/// `(ε, α, η)`: magnitude of the nonlinearity, gain and mixing of `A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearParams {
    pub epsilon: f64,
    pub alpha: f64,
    pub eta: f64,
}

impl NonlinearParams {
    pub fn new(epsilon: f64, alpha: f64, eta: f64) -> Result<Self, NlError> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(NlError::InvalidParams(format!(
                "epsilon = {epsilon} must be > 0"
            )));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(NlError::InvalidParams(format!(
                "alpha = {alpha} must be > 0"
            )));
        }
        FlagOperator::new(eta)?;
        Ok(NonlinearParams {
            epsilon,
            alpha,
            eta,
        })
    }

    /// `ε = 1`, `η = 0.01`, `α = default_alpha(n, η)`.
    pub fn defaults(n: usize) -> Self {
        NonlinearParams {
            epsilon: DEFAULT_EPSILON,
            alpha: default_alpha(n, DEFAULT_ETA),
            eta: DEFAULT_ETA,
        }
    }

    pub fn flag_operator(&self) -> FlagOperator {
        FlagOperator::new(self.eta).expect("validated eta")
    }

    /// Multiplies each parameter by its factor, revalidating the result.
    pub fn perturbed(
        &self,
        eps_factor: f64,
        eta_factor: f64,
        alpha_factor: f64,
    ) -> Result<Self, NlError> {
        NonlinearParams::new(
            self.epsilon * eps_factor,
            self.alpha * alpha_factor,
            self.eta * eta_factor,
        )
    }
}

/// `max(2ⁿ, 10·2ⁿ⁻¹/η)`: keeps the s = 1 tanh argument at 10 or above.
pub fn default_alpha(n: usize, eta: f64) -> f64 {
    let half = pow2(n as i32 - 1);
    (2.0 * half).max(10.0 * half / eta)
}

/// `2π/ε · 10⁻³`.
pub fn default_dt(epsilon: f64) -> f64 {
    1e-3 * TAU / epsilon
}

fn pow2(k: i32) -> f64 {
    2f64.powi(k)
}

fn check_inputs(n: usize, s: u128) -> Result<(), NlError> {
    if n == 0 || n > ANALYTIC_MAX_INPUTS {
        return Err(NlError::InputsOutOfRange { n });
    }
    if n < 127 && s > 1u128 << n {
        return Err(NlError::MarkedCountOutOfRange { n, s });
    }
    Ok(())
}

/// `ε tanh(αηs / 2ⁿ⁻¹)`, non-negative.
pub fn omega(n: usize, s: u64, p: &NonlinearParams) -> f64 {
    p.epsilon * (p.alpha * p.eta * s as f64 / pow2(n as i32 - 1)).tanh()
}

/// `ε tanh(α Tr ρ(A − η1))` for a flag reduction `ρ`. For the post-oracle
/// reduction this equals `−omega(n, s, p)`; only `|ω|` reaches observables.
pub fn omega_trace_form(rho: &DensityMatrix, p: &NonlinearParams) -> f64 {
    let a = p.flag_operator();
    let expect = rho.expectation(&a.matrix()).re - p.eta * rho.trace();
    p.epsilon * (p.alpha * expect).tanh()
}

/// Flag reduction after Steps 1–3: `diag((2ⁿ−s)/2ⁿ, s/2ⁿ)`.
pub fn flag_reduction(n: usize, s: u64) -> Result<DensityMatrix, NlError> {
    check_inputs(n, s as u128)?;
    let p1 = s as f64 / pow2(n as i32);
    Ok(DensityMatrix::diagonal(&[1.0 - p1, p1])?)
}

/// `z₀ = (2ⁿ⁻¹ − s)/2ⁿ⁻¹`, the initial flag polarization.
pub fn initial_polarization(n: usize, s: u64) -> f64 {
    let half = pow2(n as i32 - 1);
    (half - s as f64) / half
}

/// Closed-form `⟨σ₃⟩(t)` for the post-oracle state.
pub fn sigma3_closed_form(t: f64, n: usize, s: u64, p: &NonlinearParams) -> f64 {
    let z0 = initial_polarization(n, s);
    let wt = omega(n, s, p) * t;
    z0 * (2.0 * wt).cos() + 2.0 * p.eta * p.eta * z0 * wt.sin().powi(2)
}

/// Depth of the closed-form dip, `z₀(2η² − 1)`, reached at [`hold_time`].
pub fn sigma3_minimum(n: usize, s: u64, p: &NonlinearParams) -> f64 {
    if s == 0 {
        return 1.0;
    }
    initial_polarization(n, s) * (2.0 * p.eta * p.eta - 1.0)
}

/// First minimizer of the closed-form `⟨σ₃⟩`, `π/(2ω)`.
pub fn hold_time(n: usize, s: u64, p: &NonlinearParams) -> Result<f64, NlError> {
    check_inputs(n, s as u128)?;
    let w = omega(n, s, p);
    if s == 0 || w == 0.0 {
        return Err(NlError::NoOscillation);
    }
    Ok(PI / (2.0 * w))
}

/// `(cos ωt − i A sin ωt)` applied to the flag factor.
pub(crate) fn propagate(
    state: &StateVector,
    p: &NonlinearParams,
    w: f64,
    t: f64,
    sign: f64,
) -> StateVector {
    let a = p.flag_operator();
    let amps = state.amplitudes();
    let mut a_psi = vec![C64::new(0.0, 0.0); amps.len()];
    a.apply(amps, &mut a_psi);
    let (c, s) = ((w * t).cos(), (w * t).sin());
    let k = C64::new(0.0, -sign * s);
    let out = amps
        .iter()
        .zip(&a_psi)
        .map(|(x, ax)| x * c + ax * k)
        .collect();
    StateVector::from_raw(state.n_inputs(), out)
}

/// Exact solution of the flow at time `t`, with `ω` taken from the flag
/// reduction of `state`.
pub fn closed_form_evolve(state: &StateVector, t: f64, p: &NonlinearParams) -> StateVector {
    let rho = partial_trace(state, Subsystem::Flag).expect("flag always present");
    let w = omega_trace_form(&rho, p);
    propagate(state, p, w, t, 1.0)
}

/// `V ρ V†` with `V = cos ωt − i A sin ωt`.
pub fn evolve_flag_reduction(
    rho: &DensityMatrix,
    p: &NonlinearParams,
    w: f64,
    t: f64,
) -> DensityMatrix {
    let a = p.flag_operator().matrix();
    let (c, s) = ((w * t).cos(), (w * t).sin());
    let mut v = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let id = if i == j { c } else { 0.0 };
            v[i][j] = C64::new(id, 0.0) + a[i][j] * C64::new(0.0, -s);
        }
    }
    let mut out = vec![C64::new(0.0, 0.0); 4];
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..2 {
                for l in 0..2 {
                    acc += v[i][k] * rho.get(k, l) * v[j][l].conj();
                }
            }
            out[i * 2 + j] = acc;
        }
    }
    DensityMatrix::from_raw(2, out)
}

/// `⟨1⊗σ₃⟩` of a (possibly unnormalized) vector, divided by its norm².
pub fn flag_sigma3(state: &StateVector) -> f64 {
    sigma3_of(state.amplitudes())
}

fn sigma3_of(amps: &[C64]) -> f64 {
    let (mut z, mut norm) = (0.0, 0.0);
    for pair in amps.chunks_exact(2) {
        let (p0, p1) = (pair[0].norm_sqr(), pair[1].norm_sqr());
        z += p0 - p1;
        norm += p0 + p1;
    }
    z / norm
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "closed-form")]
    ClosedForm,
    #[serde(rename = "rk4")]
    Rk4,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::ClosedForm => "closed-form",
            Source::Rk4 => "rk4",
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Source {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "closed-form" => Ok(Source::ClosedForm),
            "rk4" => Ok(Source::Rk4),
            other => Err(format!("unknown trajectory source `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub sigma3: f64,
}

/// `⟨σ₃⟩(t)` samples with the run metadata that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub n: usize,
    /// Marked count, when known.
    pub s: Option<u64>,
    pub params: NonlinearParams,
    pub source: Source,
    samples: Vec<Sample>,
}

impl Trajectory {
    pub fn new(
        n: usize,
        s: Option<u64>,
        params: NonlinearParams,
        source: Source,
        samples: Vec<Sample>,
    ) -> Result<Self, NlError> {
        if samples.is_empty() {
            return Err(NlError::InvalidTrajectory("no samples".into()));
        }
        if let Some(w) = samples.windows(2).find(|w| w[1].t <= w[0].t) {
            return Err(NlError::InvalidTrajectory(format!(
                "times not increasing at t = {}",
                w[1].t
            )));
        }
        let limit = 1.0 + SIGMA3_RANGE_TOL;
        if let Some(bad) = samples.iter().find(|x| !(x.sigma3.abs() <= limit)) {
            return Err(NlError::InvalidTrajectory(format!(
                "sigma3 = {} at t = {} outside [-1, 1]",
                bad.sigma3, bad.t
            )));
        }
        Ok(Trajectory {
            n,
            s,
            params,
            source,
            samples,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn duration(&self) -> f64 {
        self.samples.last().unwrap().t - self.samples[0].t
    }

    /// Sample with the smallest `⟨σ₃⟩`.
    pub fn min_sample(&self) -> Sample {
        *self
            .samples
            .iter()
            .min_by(|a, b| a.sigma3.total_cmp(&b.sigma3))
            .unwrap()
    }

    /// Sup-norm gap to a trajectory on the same time grid.
    pub fn sup_gap(&self, other: &Trajectory) -> Result<f64, NlError> {
        if self.samples.len() != other.samples.len() {
            return Err(NlError::InvalidTrajectory("sample counts differ".into()));
        }
        let mut gap = 0.0f64;
        for (a, b) in self.samples.iter().zip(&other.samples) {
            if (a.t - b.t).abs() > 1e-12 * a.t.abs().max(1.0) {
                return Err(NlError::InvalidTrajectory(format!(
                    "grids differ at t = {}",
                    a.t
                )));
            }
            gap = gap.max((a.sigma3 - b.sigma3).abs());
        }
        Ok(gap)
    }
}

/// `0, h, 2h, …, t_max` with `h ≤ dt` chosen to land on `t_max` exactly.
pub fn time_grid(t_max: f64, dt: f64) -> Result<Vec<f64>, NlError> {
    if !(dt > 0.0 && t_max.is_finite() && t_max >= dt) {
        return Err(NlError::InvalidGrid { t_max, dt });
    }
    // Tolerate t_max/dt landing a hair above an integer.
    let steps = (t_max / dt * (1.0 - 1e-12)).ceil() as usize;
    let h = t_max / steps as f64;
    Ok((0..=steps).map(|k| k as f64 * h).collect())
}

/// Closed-form trajectory from `(n, s)` alone; no state vector is built.
pub fn analytic_trajectory(
    n: usize,
    s: u64,
    p: &NonlinearParams,
    t_max: f64,
    dt: f64,
) -> Result<Trajectory, NlError> {
    check_inputs(n, s as u128)?;
    let samples = time_grid(t_max, dt)?
        .into_iter()
        .map(|t| Sample {
            t,
            sigma3: sigma3_closed_form(t, n, s, p),
        })
        .collect();
    Trajectory::new(n, Some(s), *p, Source::ClosedForm, samples)
}

/// Closed-form trajectory of a dense state, propagating only its flag
/// reduction (the propagator acts on the flag alone).
pub fn reduced_trajectory(
    state: &StateVector,
    p: &NonlinearParams,
    t_max: f64,
    dt: f64,
) -> Result<Trajectory, NlError> {
    let rho = partial_trace(state, Subsystem::Flag)?;
    let w = omega_trace_form(&rho, p);
    let samples = time_grid(t_max, dt)?
        .into_iter()
        .map(|t| {
            let sigma3 = evolve_flag_reduction(&rho, p, w, t).expectation(&SIGMA3).re;
            Sample { t, sigma3 }
        })
        .collect();
    Trajectory::new(state.n_inputs(), None, *p, Source::ClosedForm, samples)
}

/// Closed-form trajectory obtained by evolving the full vector at every
/// sample time.
pub fn dense_trajectory(
    state: &StateVector,
    p: &NonlinearParams,
    t_max: f64,
    dt: f64,
) -> Result<Trajectory, NlError> {
    let samples = time_grid(t_max, dt)?
        .into_iter()
        .map(|t| Sample {
            t,
            sigma3: flag_sigma3(&closed_form_evolve(state, t, p)),
        })
        .collect();
    Trajectory::new(state.n_inputs(), None, *p, Source::ClosedForm, samples)
}

/// Result of an RK4 integration.
#[derive(Debug, Clone)]
pub struct Rk4Run {
    pub trajectory: Trajectory,
    pub final_state: StateVector,
    /// `max |‖ψ(t)‖² − 1|` over the run.
    pub norm_drift: f64,
    /// `max |⟨1⊗A⟩(t) − ⟨1⊗A⟩(0)|` over the run.
    pub a_drift: f64,
    /// Nonlinearity argument `α⟨1⊗(A − η1)⟩` at every sample.
    pub tanh_args: Vec<f64>,
}

struct Flow {
    a: FlagOperator,
    p: NonlinearParams,
}

impl Flow {
    /// `out = −i ε tanh(α⟨A − η⟩) Aψ`; returns the tanh argument.
    fn rhs(&self, psi: &[C64], out: &mut [C64]) -> f64 {
        let (expect, norm) = self.a.apply(psi, out);
        let arg = self.p.alpha * (expect - self.p.eta * norm);
        let k = C64::new(0.0, -self.p.epsilon * arg.tanh());
        out.iter_mut().for_each(|v| *v *= k);
        arg
    }
}

/// Classical RK4 integration of the full nonlinear equation of motion.
///
/// The state is never renormalized; the norm drift is tracked and an
/// integration whose drift exceeds [`NORM_DRIFT_LIMIT`] is rejected.
/// Reported `⟨σ₃⟩` values are divided by the current norm².
pub fn rk4_evolve(
    state: &StateVector,
    t_max: f64,
    dt: f64,
    p: &NonlinearParams,
) -> Result<Rk4Run, NlError> {
    let grid = time_grid(t_max, dt)?;
    let h = grid[1] - grid[0];
    let flow = Flow {
        a: p.flag_operator(),
        p: *p,
    };
    let dim = state.dim();
    let zero = C64::new(0.0, 0.0);

    let mut psi = state.amplitudes().to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (
        vec![zero; dim],
        vec![zero; dim],
        vec![zero; dim],
        vec![zero; dim],
    );
    let mut tmp = vec![zero; dim];

    let mut samples = Vec::with_capacity(grid.len());
    let mut tanh_args = Vec::with_capacity(grid.len());
    let (a0, norm0) = flow.a.apply(&psi, &mut tmp);
    let (mut norm_drift, mut a_drift) = ((norm0 - 1.0).abs(), 0.0f64);

    for (step, &t) in grid.iter().enumerate() {
        if step > 0 {
            flow.rhs(&psi, &mut k1);
            axpy(&psi, 0.5 * h, &k1, &mut tmp);
            flow.rhs(&tmp, &mut k2);
            axpy(&psi, 0.5 * h, &k2, &mut tmp);
            flow.rhs(&tmp, &mut k3);
            axpy(&psi, h, &k3, &mut tmp);
            flow.rhs(&tmp, &mut k4);
            for i in 0..dim {
                psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
            }
        }
        let (expect, norm) = flow.a.apply(&psi, &mut tmp);
        let drift = (norm - 1.0).abs();
        if drift > NORM_DRIFT_LIMIT {
            return Err(NlError::NormDrift { drift, t });
        }
        norm_drift = norm_drift.max(drift);
        a_drift = a_drift.max((expect / norm - a0 / norm0).abs());
        tanh_args.push(p.alpha * (expect - p.eta * norm));
        samples.push(Sample {
            t,
            sigma3: sigma3_of(&psi),
        });
    }

    let trajectory = Trajectory::new(state.n_inputs(), None, *p, Source::Rk4, samples)?;
    Ok(Rk4Run {
        trajectory,
        final_state: StateVector::from_raw(state.n_inputs(), psi),
        norm_drift,
        a_drift,
        tanh_args,
    })
}

fn axpy(x: &[C64], a: f64, y: &[C64], out: &mut [C64]) {
    for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
        *o = xi + yi * a;
    }
}

/// RK4 integration of the one-qubit equation `i ψ̇ = ε tanh(α⟨A − η⟩) A ψ`.
pub fn single_qubit_evolve(
    psi: [C64; 2],
    t_max: f64,
    dt: f64,
    p: &NonlinearParams,
) -> Result<Rk4Run, NlError> {
    let state = StateVector::from_amplitudes(0, psi.to_vec())?;
    rk4_evolve(&state, t_max, dt, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Zero,
    Nonzero,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Zero => "zero",
            Decision::Nonzero => "nonzero",
        })
    }
}

/// Margin below 1 that `min ⟨σ₃⟩` must clear to report a marked input.
pub fn decision_margin(n: usize) -> f64 {
    pow2(-(n as i32))
}

/// Reads `s = 0` vs `s ≠ 0` off a trajectory: nonzero iff
/// `min ⟨σ₃⟩ < 1 − 2⁻ⁿ`. The trajectory must span at least the hold time
/// of a single marked input, `π/(2ω(n, 1))`.
pub fn decide_s(traj: &Trajectory, n: usize) -> Result<Decision, NlError> {
    check_inputs(n, 0)?;
    let w_min = omega(n, 1, &traj.params);
    let required = if w_min > 0.0 {
        PI / (2.0 * w_min)
    } else {
        f64::INFINITY
    };
    let covered = traj.duration();
    if covered < required * (1.0 - 1e-12) {
        return Err(NlError::TooShort { covered, required });
    }
    if traj.min_sample().sigma3 < 1.0 - decision_margin(n) {
        Ok(Decision::Nonzero)
    } else {
        Ok(Decision::Zero)
    }
}
