use nlsearch::io::write_trajectory_csv;
use nlsearch::locality::{no_signaling_check, signaling_check_mob, LocalityReport};
use nlsearch::nldyn::{
    analytic_trajectory, decide_s, decision_margin, hold_time, initial_polarization, omega,
    reduced_trajectory, rk4_evolve, sigma3_minimum, Decision, NlError, NonlinearParams, Trajectory,
};
use nlsearch::pipeline::{
    enumeration_baseline, measure_flag, prepare_flagged, OracleSpec, PipelineState,
};
use nlsearch::qstate::{StateVector, DENSE_CAP};
use nlsearch::verify::{self, Fault, SuiteOutcome, VerifyOptions, HOLD_TIME_NOTE, OMEGA_SIGN_NOTE};
use serde::Serialize;

use crate::config::{Algo, Format, OracleMode, RunConfig, Target};
use crate::report::{emit, Diagnostics, Report};
use crate::CliError;

#[derive(Debug, Serialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum AlgoResult {
    Pairwise(PairwiseResult),
    Local(LocalResult),
}

#[derive(Debug, Serialize)]
pub struct PairwiseResult {
    pub s: u64,
    /// Steps 1–4: n single-qubit U, one oracle call, n pairwise passes.
    pub op_count: usize,
    pub step4_passes: usize,
    pub enumeration_baseline: u128,
    pub flag_probability: f64,
    pub decision: Decision,
}

#[derive(Debug, Serialize)]
pub struct Rk4Summary {
    pub sup_gap: f64,
    pub norm_drift: f64,
    pub a_drift: f64,
}

#[derive(Debug, Serialize)]
pub struct LocalResult {
    /// `dense` when built from the state vector, `analytic` from (n, s) only.
    pub path: &'static str,
    pub s: u64,
    pub omega: f64,
    pub initial_sigma3: f64,
    pub hold_time: Option<f64>,
    pub sigma3_min_closed_form: f64,
    pub sigma3_min_sampled: f64,
    pub t_at_min: f64,
    pub decision_margin: f64,
    pub decision: Option<Decision>,
    pub samples: usize,
    pub rk4: Option<Rk4Summary>,
}

struct LocalRun {
    result: LocalResult,
    closed: Trajectory,
    rk4: Option<Trajectory>,
}

fn oracle_for(config: &RunConfig) -> Result<Option<OracleSpec>, CliError> {
    let marked = match &config.target {
        Target::Marked(m) => m.clone(),
        Target::Count(_) => return Ok(None),
    };
    let oracle = OracleSpec::new(config.n, marked).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(Some(oracle))
}

fn dense_cap_error(n: usize) -> CliError {
    CliError::Usage(format!(
        "n = {n} exceeds the dense cap of {DENSE_CAP}; use --s with --algo local for the analytic path"
    ))
}

fn flagged_state(config: &RunConfig, oracle: Option<&OracleSpec>) -> Result<StateVector, CliError> {
    if config.n > DENSE_CAP {
        return Err(dense_cap_error(config.n));
    }
    // Only s matters for the flag dynamics; the analytic path marks 0..s.
    let owned;
    let oracle = match oracle {
        Some(o) => o,
        None => {
            owned = OracleSpec::new(config.n, 0..config.target.s())
                .map_err(|e| CliError::Usage(e.to_string()))?;
            &owned
        }
    };
    Ok(prepare_flagged(oracle)
        .map_err(|e| CliError::Usage(e.to_string()))?
        .state)
}

fn run_pairwise(config: &RunConfig, oracle: &OracleSpec) -> Result<PairwiseResult, CliError> {
    if config.n > DENSE_CAP {
        return Err(dense_cap_error(config.n));
    }
    let done = prepare_flagged(oracle)
        .and_then(PipelineState::step4)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let p = measure_flag(&done.state);
    Ok(PairwiseResult {
        s: oracle.s() as u64,
        op_count: done.op_count,
        step4_passes: done.pass_count,
        enumeration_baseline: enumeration_baseline(config.n),
        flag_probability: p,
        decision: if p > 0.5 {
            Decision::Nonzero
        } else {
            Decision::Zero
        },
    })
}

fn nl_error(e: NlError) -> CliError {
    match e {
        NlError::NormDrift { .. } => CliError::Numerical(e.to_string()),
        other => CliError::Usage(other.to_string()),
    }
}

/// With `need_decision` unset, a horizon too short to decide leaves the
/// decision empty instead of failing.
fn run_local(
    config: &RunConfig,
    oracle: Option<&OracleSpec>,
    need_decision: bool,
) -> Result<LocalRun, CliError> {
    let p: NonlinearParams = config.params();
    let (n, s) = (config.n, config.target.s());
    let (path, mut closed) = match oracle {
        Some(_) => {
            let state = flagged_state(config, oracle)?;
            (
                "dense",
                reduced_trajectory(&state, &p, config.t_max, config.dt).map_err(nl_error)?,
            )
        }
        None => (
            "analytic",
            analytic_trajectory(n, s, &p, config.t_max, config.dt).map_err(nl_error)?,
        ),
    };
    closed.s = Some(s);
    let decision = match decide_s(&closed, n) {
        Ok(d) => Some(d),
        Err(NlError::TooShort { .. }) if !need_decision => None,
        Err(e) => return Err(nl_error(e)),
    };

    let (rk4, rk4_summary) = match config.oracle {
        OracleMode::None => (None, None),
        OracleMode::Rk4 => {
            let state = flagged_state(config, oracle)?;
            let run = rk4_evolve(&state, config.t_max, config.dt, &p).map_err(nl_error)?;
            let mut traj = run.trajectory;
            traj.s = Some(s);
            let summary = Rk4Summary {
                sup_gap: traj.sup_gap(&closed).map_err(nl_error)?,
                norm_drift: run.norm_drift,
                a_drift: run.a_drift,
            };
            (Some(traj), Some(summary))
        }
    };

    let min = closed.min_sample();
    let result = LocalResult {
        path,
        s,
        omega: omega(n, s, &p),
        initial_sigma3: initial_polarization(n, s),
        hold_time: hold_time(n, s, &p).ok(),
        sigma3_min_closed_form: sigma3_minimum(n, s, &p),
        sigma3_min_sampled: min.sigma3,
        t_at_min: min.t,
        decision_margin: decision_margin(n),
        decision,
        samples: closed.samples().len(),
        rk4: rk4_summary,
    };
    Ok(LocalRun {
        result,
        closed,
        rk4,
    })
}

fn diagnostics_for(config: &RunConfig) -> Diagnostics {
    let mut diag = Diagnostics::default();
    if config.target.s() >= 2 {
        diag.warnings.push(format!(
            "s = {} marked inputs: outside the at-most-one-marked assumption; simulated anyway",
            config.target.s()
        ));
    }
    if config.algorithm != Algo::Pairwise {
        diag.notes.push(OMEGA_SIGN_NOTE.to_string());
        diag.notes.push(HOLD_TIME_NOTE.to_string());
    }
    diag
}

pub fn cmd_run(config: &RunConfig) -> Result<(), CliError> {
    if config.format != Format::Json {
        return Err(CliError::Usage(
            "run writes JSON reports only; use trace for CSV".into(),
        ));
    }
    let oracle = oracle_for(config)?;
    let mut results = Vec::new();
    if matches!(config.algorithm, Algo::Pairwise | Algo::Both) {
        let oracle = oracle
            .as_ref()
            .expect("validated: pairwise requires --marked");
        results.push(AlgoResult::Pairwise(run_pairwise(config, oracle)?));
    }
    if matches!(config.algorithm, Algo::Local | Algo::Both) {
        results.push(AlgoResult::Local(
            run_local(config, oracle.as_ref(), true)?.result,
        ));
    }
    let report = Report::new(config, results, diagnostics_for(config));
    emit(config.out.as_deref(), &report.to_bytes()?)?;
    Ok(())
}

pub fn cmd_trace(config: &RunConfig) -> Result<(), CliError> {
    if config.algorithm != Algo::Local {
        return Err(CliError::Usage("trace requires --algo local".into()));
    }
    let oracle = oracle_for(config)?;
    let run = run_local(config, oracle.as_ref(), false)?;
    if let Some(summary) = &run.result.rk4 {
        eprintln!(
            "rk4 vs closed-form sup-norm gap: {:e} (norm drift {:e})",
            summary.sup_gap, summary.norm_drift
        );
    }
    let mut trajectories = vec![&run.closed];
    trajectories.extend(run.rk4.as_ref());
    let bytes = match config.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_trajectory_csv(&mut buf, &trajectories).map_err(|e| CliError::Other(e.into()))?;
            buf
        }
        Format::Json => Report::new(config, &trajectories, diagnostics_for(config)).to_bytes()?,
    };
    emit(config.out.as_deref(), &bytes)?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct MobDemoResults {
    pub mob: LocalityReport,
    pub local: LocalityReport,
}

#[derive(Debug, Serialize)]
pub struct MobDemoConfig {
    pub n: usize,
    pub marked: Vec<u64>,
    pub params: NonlinearParams,
    pub times: Vec<f64>,
}

/// Reduced-state comparison: the disentangling map on a Bell pair next to
/// the flag-local flow on the 3-input worked example.
pub fn mob_demo_report() -> Result<Report<MobDemoConfig, MobDemoResults>, CliError> {
    let n = 3;
    let marked = vec![0b110];
    let params = NonlinearParams::defaults(n);
    let t_star = hold_time(n, 1, &params).map_err(nl_error)?;
    let times = vec![0.1, t_star, 2.0 * t_star];
    let oracle = OracleSpec::new(n, marked.clone()).map_err(|e| CliError::Other(e.into()))?;
    let local =
        no_signaling_check(n, &oracle, &params, &times).map_err(|e| CliError::Other(e.into()))?;
    let results = MobDemoResults {
        mob: signaling_check_mob(),
        local,
    };
    let config = MobDemoConfig {
        n,
        marked,
        params,
        times,
    };
    Ok(Report::new(config, results, Diagnostics::default()))
}

pub fn cmd_mob_demo(out: Option<&std::path::Path>) -> Result<(), CliError> {
    let report = mob_demo_report()?;
    emit(out, &report.to_bytes()?)?;
    Ok(())
}

pub fn cmd_verify(fault: Option<Fault>) -> Result<(), CliError> {
    let outcomes = verify::run_all(&VerifyOptions { fault });
    println!("{OMEGA_SIGN_NOTE}");
    println!("{HOLD_TIME_NOTE}");
    for SuiteOutcome {
        name,
        tolerance,
        worst,
        passed,
        detail,
    } in &outcomes
    {
        let mark = if *passed { "PASS" } else { "FAIL" };
        println!("[{mark}] {name:<26} worst {worst:<12.3e} tol {tolerance:<8.1e} {detail}");
    }
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| !o.passed)
        .map(|o| o.name)
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "failing suites: {}",
            failed.join(", ")
        )))
    }
}
