//! Batch invariant suites behind the `verify` command.
//!
//! Each suite reports the worst deviation it observed next to its
//! tolerance. [`Fault`] lets a caller inject a known defect to confirm the
//! suites notice it.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;

use crate::locality::{no_signaling_check, signaling_check_mob};
use crate::nldyn::{
    analytic_trajectory, closed_form_evolve, decide_s, default_alpha, default_dt, dense_trajectory,
    flag_sigma3, hold_time, omega_trace_form, propagate, reduced_trajectory, rk4_evolve,
    sigma3_closed_form, single_qubit_evolve, Decision, FlagOperator, NonlinearParams,
};
use crate::pipeline::{measure_flag, prepare_flagged, run_pairwise, OracleSpec};
use crate::qstate::{apply_single_qubit_gate, partial_trace, Gate, Subsystem, C64, STATE_TOL};

/// Printed by `verify`; the trace-form sign of ω is opposite to the
/// displayed closed form, which observables cannot detect.
pub const OMEGA_SIGN_NOTE: &str = "note: omega sign. Tr rho(A - eta 1) evaluates to -eta*s/2^(n-1) for the \
post-oracle flag reduction, while the closed-form omega is written with +alpha*eta*s/2^(n-1) inside tanh. \
<sigma3>(t) depends on omega only through cos(2 omega t) and sin^2(omega t), so the sign is unobservable; \
|omega| is reported and the propagator uses the trace-form value that solves the equation of motion.";

/// Printed by `verify`; the hold time is the derived minimizer, not π/ε.
pub const HOLD_TIME_NOTE: &str =
    "note: hold time. The closed-form <sigma3> is minimal at t* = pi/(2 omega); \
at t = pi/epsilon it returns to +z0. t* is used throughout.";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Closed-form propagator uses `cos ωt + i A sin ωt`.
    PropagatorSign,
}

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    pub fault: Option<Fault>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub tolerance: f64,
    pub worst: f64,
    pub passed: bool,
    pub detail: String,
}

impl SuiteOutcome {
    fn check(name: &'static str, tolerance: f64, worst: f64, detail: impl Into<String>) -> Self {
        SuiteOutcome {
            name,
            tolerance,
            worst,
            passed: worst <= tolerance,
            detail: detail.into(),
        }
    }
}

pub const ORACLE_TOL: f64 = 1e-6;
pub const CONSERVATION_TOL: f64 = 1e-8;

pub fn run_all(opts: &VerifyOptions) -> Vec<SuiteOutcome> {
    let mut out = vec![flag_operator(), norm_conservation(), reductions()];
    out.extend(pairwise());
    out.extend(oracle_equivalence(opts));
    out.push(formula_consistency());
    out.push(analytic_path());
    out.push(no_signaling());
    out.push(decision_robustness());
    out.push(single_qubit_fixed_point());
    out
}

fn flag_operator() -> SuiteOutcome {
    let worst = [0.3, 0.1, 0.01, 1e-4, 0.9]
        .iter()
        .map(|&eta| {
            let a = FlagOperator::new(eta).unwrap().matrix();
            let g = Gate(a);
            let sq = g.mul(&g).0;
            (0..4)
                .map(|k| (sq[k / 2][k % 2] - Gate::identity().0[k / 2][k % 2]).norm())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    SuiteOutcome::check(
        "flag-operator",
        STATE_TOL,
        worst,
        "max |A^2 - 1| over eta grid",
    )
}

fn norm_conservation() -> SuiteOutcome {
    let gates = [
        Gate::walsh(),
        Gate::rotation(0.7, [1.0, 2.0, 3.0]),
        Gate::rotation(2.9, [-0.3, 0.1, 1.0]),
    ];
    let mut worst = 0.0f64;
    for n in 1..=6 {
        let state = prepare_flagged(&OracleSpec::new(n, [(1u64 << n) - 1]).unwrap())
            .unwrap()
            .state;
        for pos in 0..=n {
            for g in &gates {
                let fwd = apply_single_qubit_gate(&state, pos, g).unwrap();
                let back = apply_single_qubit_gate(&fwd, pos, &g.adjoint()).unwrap();
                worst = worst
                    .max((fwd.norm_sqr() - 1.0).abs())
                    .max(back.max_abs_diff(&state));
            }
        }
    }
    SuiteOutcome::check(
        "norm-conservation",
        STATE_TOL,
        worst,
        "gate norm and G then G^-1 round trip",
    )
}

fn reductions() -> SuiteOutcome {
    let mut worst = 0.0f64;
    for n in 1..=6 {
        let mut state = prepare_flagged(&OracleSpec::new(n, [1]).unwrap())
            .unwrap()
            .state;
        state = apply_single_qubit_gate(&state, 0, &Gate::rotation(1.1, [0.2, 0.5, 1.0])).unwrap();
        for pos in 0..=n {
            let rho = partial_trace(&state, Subsystem::from_position(pos, n)).unwrap();
            worst = worst
                .max((rho.trace() - 1.0).abs())
                .max(rho.hermiticity_defect())
                .max((-rho.eigenvalues_2x2()[0]).max(0.0));
        }
    }
    SuiteOutcome::check(
        "partial-trace",
        STATE_TOL,
        worst,
        "trace, hermiticity and positivity defects",
    )
}

fn pairwise() -> [SuiteOutcome; 2] {
    let cells: Vec<(usize, Option<u64>)> = (1..=10)
        .flat_map(|n| std::iter::once((n, None)).chain((0..1u64 << n).map(move |x| (n, Some(x)))))
        .collect();
    let results: Vec<(f64, usize)> = cells
        .par_iter()
        .map(|&(n, mark)| {
            let oracle = OracleSpec::new(n, mark).unwrap();
            let run = run_pairwise(&oracle).unwrap();
            let expected = if mark.is_some() { 1.0 } else { 0.0 };
            let pass_error = run.pass_count.abs_diff(n);
            ((measure_flag(&run.state) - expected).abs(), pass_error)
        })
        .collect();
    let worst_p = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let worst_ops = results.iter().map(|r| r.1).max().unwrap_or(0);
    [
        SuiteOutcome::check(
            "pairwise-decision",
            0.0,
            worst_p,
            format!(
                "{} instances, n = 1..=10, flag probability exact",
                cells.len()
            ),
        ),
        SuiteOutcome::check(
            "operation-count",
            0.0,
            worst_ops as f64,
            "step 4 pass count minus n, every instance",
        ),
    ]
}

/// `(n, s, η, α)` cells of the closed-form vs RK4 comparison.
pub fn oracle_grid() -> Vec<(usize, u64, f64, f64)> {
    let mut cells = Vec::new();
    for n in 1..=8 {
        for s in [0u64, 1] {
            for eta in [0.3, 0.1, 0.01] {
                for alpha in [2f64.powi(n as i32), 10.0 * 2f64.powi(n as i32 - 1) / eta] {
                    cells.push((n, s, eta, alpha));
                }
            }
        }
    }
    cells
}

fn oracle_equivalence(opts: &VerifyOptions) -> [SuiteOutcome; 2] {
    let sign = if opts.fault == Some(Fault::PropagatorSign) {
        -1.0
    } else {
        1.0
    };
    let t_max = TAU;
    let dt = default_dt(1.0);
    let results: Vec<(f64, f64)> = oracle_grid()
        .par_iter()
        .map(|&(n, s, eta, alpha)| {
            let p = NonlinearParams::new(1.0, alpha, eta).unwrap();
            let marks = (0..s).map(|k| k + 1);
            let state = prepare_flagged(&OracleSpec::new(n, marks).unwrap())
                .unwrap()
                .state;
            let run = match rk4_evolve(&state, t_max, dt, &p) {
                Ok(run) => run,
                Err(_) => return (f64::INFINITY, f64::INFINITY),
            };
            let mut gap = 0.0f64;
            for sample in run.trajectory.samples() {
                gap = gap.max((sample.sigma3 - sigma3_closed_form(sample.t, n, s, &p)).abs());
            }
            let rho = partial_trace(&state, Subsystem::Flag).unwrap();
            let w = omega_trace_form(&rho, &p);
            let closed = propagate(&state, &p, w, t_max, sign);
            gap = gap.max(run.final_state.max_abs_diff(&closed));
            (gap, run.norm_drift.max(run.a_drift))
        })
        .collect();
    let gap = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let drift = results.iter().map(|r| r.1).fold(0.0, f64::max);
    [
        SuiteOutcome::check(
            "oracle-equivalence",
            ORACLE_TOL,
            gap,
            format!(
                "{} cells, sup |sigma3| and final-state gaps, RK4 vs closed form",
                results.len()
            ),
        ),
        SuiteOutcome::check(
            "conservation",
            CONSERVATION_TOL,
            drift,
            "RK4 norm and <1 x A> drift",
        ),
    ]
}

fn formula_consistency() -> SuiteOutcome {
    let mut worst = 0.0f64;
    for n in 1..=8 {
        for s in [0u64, 1] {
            let p = NonlinearParams::new(1.0, default_alpha(n, 0.1), 0.1).unwrap();
            let state = prepare_flagged(&OracleSpec::new(n, 0..s).unwrap())
                .unwrap()
                .state;
            for t in [0.0, 0.3, 1.0, 2.5, 6.0] {
                let evolved = closed_form_evolve(&state, t, &p);
                worst = worst.max((flag_sigma3(&evolved) - sigma3_closed_form(t, n, s, &p)).abs());
            }
        }
    }
    SuiteOutcome::check(
        "formula-consistency",
        STATE_TOL,
        worst,
        "evolved-state <sigma3> vs formula",
    )
}

fn analytic_path() -> SuiteOutcome {
    let mut worst = 0.0f64;
    for n in 1..=10 {
        for s in [0u64, 1] {
            let p = NonlinearParams::defaults(n);
            let state = prepare_flagged(&OracleSpec::new(n, 0..s).unwrap())
                .unwrap()
                .state;
            let analytic = analytic_trajectory(n, s, &p, TAU, 0.05).unwrap();
            let reduced = reduced_trajectory(&state, &p, TAU, 0.05).unwrap();
            worst = worst.max(analytic.sup_gap(&reduced).unwrap());
            if n <= 6 {
                let dense = dense_trajectory(&state, &p, TAU, 0.05).unwrap();
                worst = worst.max(analytic.sup_gap(&dense).unwrap());
            }
        }
    }
    SuiteOutcome::check(
        "analytic-path",
        STATE_TOL,
        worst,
        "analytic vs dense-vector trajectories",
    )
}

fn no_signaling() -> SuiteOutcome {
    let mut worst = 0.0f64;
    for n in 1..=6 {
        for s in [0u64, 1] {
            let p = NonlinearParams::defaults(n);
            let oracle = OracleSpec::new(n, (0..s).map(|k| (1u64 << n) - 1 - k)).unwrap();
            let t_star = hold_time(n, 1, &p).unwrap();
            let report =
                no_signaling_check(n, &oracle, &p, &[0.1, t_star, 2.0 * t_star, 5.0]).unwrap();
            worst = worst.max(report.max_input_deviation);
        }
    }
    let mob = signaling_check_mob();
    let q1 = mob.record(Subsystem::Input(0)).unwrap();
    let mob_error = (q1.initial_purity - 0.5).abs() + (q1.evolved[0].purity - 1.0).abs();
    SuiteOutcome::check(
        "no-signaling",
        STATE_TOL,
        worst.max(mob_error),
        "input-qubit deviation under the local flow; mob purity 0.5 -> 1",
    )
}

fn decision_robustness() -> SuiteOutcome {
    let factors = [0.9, 1.0, 1.1];
    let mut wrong = 0usize;
    for n in [3usize, 8] {
        let nominal = NonlinearParams::defaults(n);
        for s in [0u64, 1] {
            for fe in factors {
                for fh in factors {
                    for fa in factors {
                        let p = nominal.perturbed(fe, fh, fa).unwrap();
                        let t_max = TAU / p.epsilon;
                        let traj =
                            analytic_trajectory(n, s, &p, t_max, default_dt(p.epsilon)).unwrap();
                        let expected = if s == 0 {
                            Decision::Zero
                        } else {
                            Decision::Nonzero
                        };
                        if decide_s(&traj, n).ok() != Some(expected) {
                            wrong += 1;
                        }
                    }
                }
            }
        }
    }
    SuiteOutcome::check(
        "decision-robustness",
        0.0,
        wrong as f64,
        "wrong verdicts on the +-10% cube",
    )
}

fn single_qubit_fixed_point() -> SuiteOutcome {
    let p = NonlinearParams::new(1.0, 1e6, 0.01).unwrap();
    let zero = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    let run = single_qubit_evolve(zero, 10.0, 1e-2, &p).unwrap();
    let worst = run
        .trajectory
        .samples()
        .iter()
        .map(|x| (x.sigma3 - 1.0).abs())
        .fold(0.0, f64::max);
    SuiteOutcome::check(
        "single-qubit-fixed-point",
        1e-10,
        worst,
        "|0> stationary over [0, 10/eps]",
    )
}
