//! The four-step search pipeline with the idealized pairwise Step 4.
//!
//! Step 1 prepares `|0…0⟩|0⟩`, Step 2 applies `U` to every input qubit,
//! Step 3 XORs `f(x)` into the flag and Step 4 runs one pairwise regrouping
//! pass per input bit. Each pass looks at the pairs `(x, x ⊕ bit)`; whenever
//! exactly one member of a pair carries flag 1, the other member's flag is
//! switched from 0 to 1 with its amplitude unchanged.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::qstate::{
    apply_gate_unchecked, basis_index, Gate, StateError, StateVector, C64, DENSE_CAP,
};

/// Amplitudes at or below this modulus count as "no support".
pub const SUPPORT_TOL: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error("input register size {n} outside 1..={DENSE_CAP}")]
    InputsOutOfRange { n: usize },
    #[error("marked value {value} does not fit in {n_inputs} input bits")]
    MarkedOutOfRange { value: u64, n_inputs: usize },
    #[error("oracle is defined on {oracle} inputs but the state has {state}")]
    DimensionMismatch { oracle: usize, state: usize },
    #[error("pair bit {bit} out of range for {n_inputs} inputs")]
    PairBitOutOfRange { bit: usize, n_inputs: usize },
    #[error("input string {input:#b} has support on both flag values")]
    DoubleFlagSupport { input: usize },
}

/// The hidden predicate `f`, given by its marked set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleSpec {
    n_inputs: usize,
    marked: BTreeSet<usize>,
}

impl OracleSpec {
    pub fn new(
        n_inputs: usize,
        marked: impl IntoIterator<Item = u64>,
    ) -> Result<Self, PipelineError> {
        let mut set = BTreeSet::new();
        for value in marked {
            if n_inputs < 64 && value >> n_inputs != 0 || n_inputs == 0 {
                return Err(PipelineError::MarkedOutOfRange { value, n_inputs });
            }
            set.insert(value as usize);
        }
        Ok(OracleSpec {
            n_inputs,
            marked: set,
        })
    }

    /// `f ≡ 0`.
    pub fn empty(n_inputs: usize) -> Self {
        OracleSpec {
            n_inputs,
            marked: BTreeSet::new(),
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn marked(&self) -> &BTreeSet<usize> {
        &self.marked
    }

    /// Number of marked inputs.
    pub fn s(&self) -> usize {
        self.marked.len()
    }

    /// The algorithm assumes at most one marked input. Larger sets are still
    /// simulated; callers surface this as a warning.
    pub fn within_assumption(&self) -> bool {
        self.s() <= 1
    }

    pub fn f(&self, input: usize) -> bool {
        self.marked.contains(&input)
    }
}

/// A pipeline snapshot with operation accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineState {
    pub state: StateVector,
    /// Pairwise nonlinear passes applied so far.
    pub pass_count: usize,
    /// Elementary operations applied so far: one per single-qubit `U`, one
    /// for the oracle call, one per pairwise pass.
    pub op_count: usize,
}

impl PipelineState {
    /// Step 1.
    pub fn start(n: usize) -> Result<Self, PipelineError> {
        Ok(PipelineState {
            state: init_state(n)?,
            pass_count: 0,
            op_count: 0,
        })
    }

    /// Step 2.
    pub fn walsh(self) -> Self {
        let n = self.state.n_inputs();
        PipelineState {
            state: apply_walsh(&self.state),
            op_count: self.op_count + n,
            ..self
        }
    }

    /// Step 3.
    pub fn oracle(self, oracle: &OracleSpec) -> Result<Self, PipelineError> {
        let state = apply_oracle(&self.state, oracle)?;
        Ok(PipelineState {
            state,
            op_count: self.op_count + 1,
            ..self
        })
    }

    /// Step 4.
    pub fn step4(self) -> Result<Self, PipelineError> {
        let step = step4_pairwise(&self.state)?;
        Ok(PipelineState {
            state: step.state,
            pass_count: self.pass_count + step.pass_count,
            op_count: self.op_count + step.op_count,
        })
    }
}

/// Runs Steps 1–3, returning the state `Σ_x |x⟩|f(x)⟩ / √2ⁿ`.
pub fn prepare_flagged(oracle: &OracleSpec) -> Result<PipelineState, PipelineError> {
    PipelineState::start(oracle.n_inputs())?
        .walsh()
        .oracle(oracle)
}

/// Runs all four steps.
pub fn run_pairwise(oracle: &OracleSpec) -> Result<PipelineState, PipelineError> {
    prepare_flagged(oracle)?.step4()
}

/// Queries a classical search spends on an unstructured table of `n` bits.
pub fn enumeration_baseline(n: usize) -> u128 {
    1u128 << n
}

pub fn init_state(n: usize) -> Result<StateVector, PipelineError> {
    if n == 0 || n > DENSE_CAP {
        return Err(PipelineError::InputsOutOfRange { n });
    }
    Ok(StateVector::basis(n, 0)?)
}

/// `U ⊗ … ⊗ U ⊗ 1`.
pub fn apply_walsh(state: &StateVector) -> StateVector {
    let u = Gate::walsh();
    (0..state.n_inputs()).fold(state.clone(), |s, k| apply_gate_unchecked(&s, k, &u))
}

/// `U† ⊗ … ⊗ U† ⊗ 1`.
pub fn apply_walsh_inverse(state: &StateVector) -> StateVector {
    let u_dag = Gate::walsh().adjoint();
    (0..state.n_inputs()).fold(state.clone(), |s, k| apply_gate_unchecked(&s, k, &u_dag))
}

/// `|x⟩|b⟩ → |x⟩|b ⊕ f(x)⟩`.
pub fn apply_oracle(
    state: &StateVector,
    oracle: &OracleSpec,
) -> Result<StateVector, PipelineError> {
    if oracle.n_inputs != state.n_inputs() {
        return Err(PipelineError::DimensionMismatch {
            oracle: oracle.n_inputs,
            state: state.n_inputs(),
        });
    }
    let mut amps = state.amplitudes().to_vec();
    for &x in &oracle.marked {
        amps.swap(basis_index(x, false), basis_index(x, true));
    }
    Ok(StateVector::from_raw(state.n_inputs(), amps))
}

/// Flag carried by input string `x`, or `None` when `x` has no support.
fn flag_of(amps: &[C64], x: usize) -> Result<Option<bool>, PipelineError> {
    let zero = amps[basis_index(x, false)].norm() > SUPPORT_TOL;
    let one = amps[basis_index(x, true)].norm() > SUPPORT_TOL;
    match (zero, one) {
        (true, true) => Err(PipelineError::DoubleFlagSupport { input: x }),
        (true, false) => Ok(Some(false)),
        (false, true) => Ok(Some(true)),
        (false, false) => Ok(None),
    }
}

/// One regrouping pass over the pairs that differ in input position
/// `pair_bit` (zero-based, `0` is `i₁`).
pub fn pairwise_pass(state: &StateVector, pair_bit: usize) -> Result<StateVector, PipelineError> {
    let n = state.n_inputs();
    if pair_bit >= n {
        return Err(PipelineError::PairBitOutOfRange {
            bit: pair_bit,
            n_inputs: n,
        });
    }
    let mask = 1usize << (n - 1 - pair_bit);
    let src = state.amplitudes();
    let mut amps = src.to_vec();
    for x in (0..1usize << n).filter(|x| x & mask == 0) {
        let y = x | mask;
        let (fx, fy) = (flag_of(src, x)?, flag_of(src, y)?);
        let raise = match (fx, fy) {
            (Some(false), Some(true)) => x,
            (Some(true), Some(false)) => y,
            _ => continue,
        };
        // The flag-1 slot of `raise` is empty, so a swap moves the amplitude exactly.
        amps.swap(basis_index(raise, false), basis_index(raise, true));
    }
    Ok(StateVector::from_raw(n, amps))
}

/// Step 4: one pairwise pass per input bit, `i₁` first.
pub fn step4_pairwise(state: &StateVector) -> Result<PipelineState, PipelineError> {
    let n = state.n_inputs();
    let mut current = state.clone();
    for bit in 0..n {
        current = pairwise_pass(&current, bit)?;
    }
    Ok(PipelineState {
        state: current,
        pass_count: n,
        op_count: n,
    })
}

/// Probability that the flag reads 1.
pub fn measure_flag(state: &StateVector) -> f64 {
    let (mut one, mut total) = (0.0, 0.0);
    for pair in state.amplitudes().chunks_exact(2) {
        let p1 = pair[1].norm_sqr();
        one += p1;
        total += pair[0].norm_sqr() + p1;
    }
    // Relative to the total weight, so an all-flag-1 state reads exactly 1.
    one / total
}
