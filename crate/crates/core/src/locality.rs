//! Remote-influence checks on reduced density matrices.
//!
//! A flag-local dynamics must leave every input qubit's reduced state
//! untouched. The idealized disentangling map
//! `(|00⟩+|11⟩)/√2 → (|01⟩+|11⟩)/√2` does not: it purifies the reduced state
//! of the first qubit even though only the second was acted on.

use serde::{Deserialize, Serialize};

use crate::nldyn::{closed_form_evolve, NonlinearParams};
use crate::pipeline::{prepare_flagged, step4_pairwise, OracleSpec, PipelineError};
use crate::qstate::{
    partial_trace, purity, DensityMatrix, StateError, StateVector, Subsystem, C64,
};

/// Input-qubit deviations above this count as signaling.
pub const SIGNALING_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Signaling,
    NoSignaling,
}

/// One qubit's reduced state at one evolution point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionSnapshot {
    /// Evolution time, or `None` for a discrete transformation.
    pub t: Option<f64>,
    pub rho: DensityMatrix,
    pub purity: f64,
    /// Max entrywise `|ρ(t) − ρ(0)|`.
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitRecord {
    pub qubit: Subsystem,
    pub initial: DensityMatrix,
    pub initial_purity: f64,
    pub evolved: Vec<ReductionSnapshot>,
    /// Purity at the last snapshot minus the initial purity.
    pub purity_change: f64,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityReport {
    pub scenario: String,
    pub n_inputs: usize,
    pub qubits: Vec<QubitRecord>,
    /// Largest deviation over the input (non-flag) qubits.
    pub max_input_deviation: f64,
    pub verdict: Verdict,
}

impl LocalityReport {
    pub fn record(&self, qubit: Subsystem) -> Option<&QubitRecord> {
        self.qubits.iter().find(|r| r.qubit == qubit)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LocalityError {
    #[error(
        "the disentangling map is only defined on (|00⟩+|11⟩)/√2; overlap with it is {overlap}"
    )]
    UnsupportedInput { overlap: f64 },
    #[error("oracle has {oracle} inputs, check requested {n}")]
    InputMismatch { oracle: usize, n: usize },
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Compares the reductions of `initial` against those of every evolved state.
pub fn build_report(
    scenario: impl Into<String>,
    initial: &StateVector,
    evolved: &[(Option<f64>, StateVector)],
) -> Result<LocalityReport, StateError> {
    let n = initial.n_inputs();
    let mut qubits = Vec::with_capacity(n + 1);
    for position in 0..=n {
        let qubit = Subsystem::from_position(position, n);
        let rho0 = partial_trace(initial, qubit)?;
        let initial_purity = purity(&rho0);
        let snapshots = evolved
            .iter()
            .map(|(t, state)| {
                let rho = partial_trace(state, qubit)?;
                Ok(ReductionSnapshot {
                    t: *t,
                    purity: purity(&rho),
                    deviation: rho.max_abs_diff(&rho0),
                    rho,
                })
            })
            .collect::<Result<Vec<_>, StateError>>()?;
        let max_deviation = snapshots.iter().map(|s| s.deviation).fold(0.0, f64::max);
        let purity_change = snapshots.last().map_or(0.0, |s| s.purity - initial_purity);
        qubits.push(QubitRecord {
            qubit,
            initial: rho0,
            initial_purity,
            evolved: snapshots,
            purity_change,
            max_deviation,
        });
    }
    let max_input_deviation = qubits
        .iter()
        .filter(|r| r.qubit != Subsystem::Flag)
        .map(|r| r.max_deviation)
        .fold(0.0, f64::max);
    let verdict = if max_input_deviation > SIGNALING_THRESHOLD {
        Verdict::Signaling
    } else {
        Verdict::NoSignaling
    };
    Ok(LocalityReport {
        scenario: scenario.into(),
        n_inputs: n,
        qubits,
        max_input_deviation,
        verdict,
    })
}

/// `(|00⟩+|11⟩)/√2` on one input qubit plus the flag.
pub fn bell_pair() -> StateVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    StateVector::from_amplitudes(1, vec![C64::new(h, 0.0), z, z, C64::new(h, 0.0)])
        .expect("normalized")
}

/// `(|00⟩+|11⟩)/√2 → (|01⟩+|11⟩)/√2`, keeping any global phase of the input.
pub fn mob_transform(state: &StateVector) -> Result<StateVector, LocalityError> {
    if state.n_inputs() != 1 {
        return Err(LocalityError::UnsupportedInput { overlap: 0.0 });
    }
    let overlap = bell_pair().overlap(state);
    if (overlap.norm() - 1.0).abs() > 1e-12 {
        return Err(LocalityError::UnsupportedInput {
            overlap: overlap.norm(),
        });
    }
    let phase = overlap / overlap.norm();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    let amps = vec![z, phase * h, z, phase * h];
    Ok(StateVector::from_amplitudes(1, amps)?)
}

/// Reduced-state bookkeeping for the disentangling map on the Bell pair.
pub fn signaling_check_mob() -> LocalityReport {
    let before = bell_pair();
    let after = mob_transform(&before).expect("Bell input");
    build_report("mob-transform", &before, &[(None, after)]).expect("two-qubit register")
}

/// Evolves the post-oracle state under the flag-local closed-form flow and
/// records every qubit's reduction at each sample time.
pub fn no_signaling_check(
    n: usize,
    oracle: &OracleSpec,
    p: &NonlinearParams,
    times: &[f64],
) -> Result<LocalityReport, LocalityError> {
    if oracle.n_inputs() != n {
        return Err(LocalityError::InputMismatch {
            oracle: oracle.n_inputs(),
            n,
        });
    }
    let initial = prepare_flagged(oracle)?.state;
    let evolved: Vec<_> = times
        .iter()
        .map(|&t| (Some(t), closed_form_evolve(&initial, t, p)))
        .collect();
    Ok(build_report("local-flag-dynamics", &initial, &evolved)?)
}

/// Same bookkeeping for the idealized pairwise Step 4.
pub fn pairwise_signaling_check(oracle: &OracleSpec) -> Result<LocalityReport, LocalityError> {
    let initial = prepare_flagged(oracle)?.state;
    let after = step4_pairwise(&initial)?.state;
    Ok(build_report("pairwise-step4", &initial, &[(None, after)])?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nldyn::hold_time;

    #[test]
    fn mob_maps_bell_to_product() {
        let out = mob_transform(&bell_pair()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(out.amplitudes()[0b01], C64::new(h, 0.0));
        assert_eq!(out.amplitudes()[0b11], C64::new(h, 0.0));

        let phased = bell_pair().scaled(C64::new(0.0, 1.0));
        let out = mob_transform(&phased).unwrap();
        assert!((out.amplitudes()[0b01] - C64::new(0.0, h)).norm() < 1e-15);
    }

    #[test]
    fn mob_rejects_other_inputs() {
        let s = StateVector::basis(1, 0).unwrap();
        assert!(matches!(
            mob_transform(&s),
            Err(LocalityError::UnsupportedInput { .. })
        ));
        let wide = StateVector::basis(2, 0).unwrap();
        assert!(mob_transform(&wide).is_err());
    }

    #[test]
    fn mob_purifies_the_remote_qubit() {
        let report = signaling_check_mob();
        let q1 = report.record(Subsystem::Input(0)).unwrap();
        assert_eq!(q1.initial_purity, 0.5);
        assert_eq!(q1.evolved[0].purity, 1.0);
        let expected = DensityMatrix::new(2, vec![C64::new(0.5, 0.0); 4]).unwrap();
        assert!(q1.evolved[0].rho.max_abs_diff(&expected) < 1e-15);
        assert!((q1.max_deviation - 0.5).abs() < 1e-15);
        assert_eq!(report.verdict, Verdict::Signaling);
    }

    #[test]
    fn local_flow_leaves_inputs_alone() {
        let p = NonlinearParams::new(1.0, 400.0, 0.1).unwrap();
        let oracle = OracleSpec::new(3, [0b110]).unwrap();
        let t_star = hold_time(3, 1, &p).unwrap();
        let report = no_signaling_check(3, &oracle, &p, &[0.1, t_star, 2.0 * t_star]).unwrap();
        assert_eq!(report.verdict, Verdict::NoSignaling);
        assert!(report.max_input_deviation < 1e-12);
        assert!(report.record(Subsystem::Flag).unwrap().max_deviation > 0.1);

        let empty = no_signaling_check(3, &OracleSpec::empty(3), &p, &[0.1, 1.0]).unwrap();
        assert_eq!(empty.max_input_deviation, 0.0);
        assert!(empty.qubits.iter().all(|q| q.max_deviation == 0.0));
    }

    #[test]
    fn pairwise_step4_signals() {
        let report = pairwise_signaling_check(&OracleSpec::new(3, [0b110]).unwrap()).unwrap();
        assert_eq!(report.verdict, Verdict::Signaling);
        // Off-diagonal of every input reduction goes from 3/8 to 1/2.
        assert!((report.max_input_deviation - 0.125).abs() < 1e-15);
    }

    #[test]
    fn input_mismatch_is_rejected() {
        let p = NonlinearParams::defaults(3);
        assert!(matches!(
            no_signaling_check(4, &OracleSpec::empty(3), &p, &[1.0]),
            Err(LocalityError::InputMismatch { oracle: 3, n: 4 })
        ));
    }
}
