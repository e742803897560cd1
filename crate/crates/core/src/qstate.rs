//! Dense register representation: `n` input qubits followed by one flag qubit.
//!
//! Basis index `b` encodes the input bits `i₁…iₙ` with `i₁` most significant,
//! followed by the flag as the least significant bit, i.e. `b = (x << 1) | flag`
//! where `x` is the input string read as a binary number. Qubit positions are
//! numbered `0..=n`: position `k < n` is input bit `i_{k+1}`, position `n` is
//! the flag.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;

/// Norm/trace/hermiticity tolerance for state-level quantities.
pub const STATE_TOL: f64 = 1e-12;
/// Tolerance on `‖G†G − 1‖` for accepted gates.
pub const UNITARY_TOL: f64 = 1e-10;
/// Largest input register held as a dense vector (2²¹ amplitudes).
pub const DENSE_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("amplitude array has length {len}, expected {expected}")]
    BadLength { len: usize, expected: usize },
    #[error("state norm² {norm_sqr} is not 1 within {STATE_TOL:e}")]
    NotNormalized { norm_sqr: f64 },
    #[error("qubit position {index} out of range: register has {n_inputs} inputs plus the flag")]
    QubitOutOfRange { index: usize, n_inputs: usize },
    #[error(
        "gate is not unitary: max |G†G − 1| entry is {deviation:e} (tolerance {UNITARY_TOL:e})"
    )]
    NonUnitary { deviation: f64 },
    #[error("{n} input qubits exceed the dense cap of {DENSE_CAP}")]
    ExceedsDenseCap { n: usize },
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),
}

/// Selects one qubit of the register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subsystem {
    /// Zero-based input position; `Input(0)` is `i₁`.
    Input(usize),
    Flag,
}

impl Subsystem {
    pub fn position(self, n_inputs: usize) -> usize {
        match self {
            Subsystem::Input(k) => k,
            Subsystem::Flag => n_inputs,
        }
    }

    pub fn from_position(position: usize, n_inputs: usize) -> Self {
        if position == n_inputs {
            Subsystem::Flag
        } else {
            Subsystem::Input(position)
        }
    }
}

impl fmt::Display for Subsystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Subsystem::Input(k) => write!(f, "input{}", k + 1),
            Subsystem::Flag => write!(f, "flag"),
        }
    }
}

/// Basis index of `|x⟩|flag⟩`.
#[inline]
pub fn basis_index(input: usize, flag: bool) -> usize {
    (input << 1) | flag as usize
}

/// Unit-norm vector of `2^(n_inputs+1)` amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_inputs: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn from_amplitudes(n_inputs: usize, amps: Vec<C64>) -> Result<Self, StateError> {
        if n_inputs > DENSE_CAP {
            return Err(StateError::ExceedsDenseCap { n: n_inputs });
        }
        let expected = 1usize << (n_inputs + 1);
        if amps.len() != expected {
            return Err(StateError::BadLength {
                len: amps.len(),
                expected,
            });
        }
        let state = StateVector { n_inputs, amps };
        let norm_sqr = state.norm_sqr();
        if (norm_sqr - 1.0).abs() > STATE_TOL {
            return Err(StateError::NotNormalized { norm_sqr });
        }
        Ok(state)
    }

    /// Computational basis state with amplitude 1 at `index`.
    pub fn basis(n_inputs: usize, index: usize) -> Result<Self, StateError> {
        if n_inputs > DENSE_CAP {
            return Err(StateError::ExceedsDenseCap { n: n_inputs });
        }
        let dim = 1usize << (n_inputs + 1);
        if index >= dim {
            return Err(StateError::BadLength {
                len: index + 1,
                expected: dim,
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(StateVector { n_inputs, amps })
    }

    /// Skips the norm check. Callers guarantee the length; the norm is
    /// whatever the producing operation preserved.
    pub(crate) fn from_raw(n_inputs: usize, amps: Vec<C64>) -> Self {
        debug_assert_eq!(amps.len(), 1usize << (n_inputs + 1));
        StateVector { n_inputs, amps }
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    /// Total qubit count, inputs plus flag.
    pub fn n_qubits(&self) -> usize {
        self.n_inputs + 1
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn amplitude(&self, input: usize, flag: bool) -> C64 {
        self.amps[basis_index(input, flag)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn scaled(&self, factor: C64) -> StateVector {
        StateVector::from_raw(
            self.n_inputs,
            self.amps.iter().map(|a| a * factor).collect(),
        )
    }

    /// Largest componentwise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "state dimensions differ");
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &StateVector) -> C64 {
        assert_eq!(self.dim(), other.dim(), "state dimensions differ");
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// 2×2 complex matrix acting on one qubit, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate(pub [[C64; 2]; 2]);

impl Gate {
    pub fn identity() -> Self {
        let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        Gate([[o, z], [z, o]])
    }

    /// `U|0⟩ = (|0⟩+|1⟩)/√2`, `U|1⟩ = (−|0⟩+|1⟩)/√2`.
    pub fn walsh() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Gate([
            [C64::new(h, 0.0), C64::new(-h, 0.0)],
            [C64::new(h, 0.0), C64::new(h, 0.0)],
        ])
    }

    pub fn pauli_x() -> Self {
        let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        Gate([[z, o], [o, z]])
    }

    /// `exp(−iθ n·σ/2)` for a unit axis `n`.
    pub fn rotation(theta: f64, axis: [f64; 3]) -> Self {
        let norm = axis.iter().map(|v| v * v).sum::<f64>().sqrt();
        let [nx, ny, nz] = axis.map(|v| v / norm);
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        Gate([
            [C64::new(c, -s * nz), C64::new(-s * ny, -s * nx)],
            [C64::new(s * ny, -s * nx), C64::new(c, s * nz)],
        ])
    }

    pub fn adjoint(&self) -> Self {
        let m = self.0;
        Gate([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn mul(&self, rhs: &Gate) -> Gate {
        let (a, b) = (self.0, rhs.0);
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Gate(out)
    }

    /// Max entry of `|G†G − 1|`.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.adjoint().mul(self).0;
        let id = Gate::identity().0;
        (0..4)
            .map(|k| (p[k / 2][k % 2] - id[k / 2][k % 2]).norm())
            .fold(0.0, f64::max)
    }
}

/// Applies `gate` to the qubit at `position` (`n_inputs` selects the flag).
pub fn apply_single_qubit_gate(
    state: &StateVector,
    position: usize,
    gate: &Gate,
) -> Result<StateVector, StateError> {
    let n = state.n_inputs;
    if position > n {
        return Err(StateError::QubitOutOfRange {
            index: position,
            n_inputs: n,
        });
    }
    let deviation = gate.unitarity_defect();
    if deviation > UNITARY_TOL {
        return Err(StateError::NonUnitary { deviation });
    }
    Ok(apply_gate_unchecked(state, position, gate))
}

pub(crate) fn apply_gate_unchecked(
    state: &StateVector,
    position: usize,
    gate: &Gate,
) -> StateVector {
    let stride = 1usize << (state.n_inputs - position);
    let g = gate.0;
    let mut out = state.amps.clone();
    for block in (0..out.len()).step_by(stride << 1) {
        for lo in block..block + stride {
            let hi = lo + stride;
            let (a0, a1) = (state.amps[lo], state.amps[hi]);
            out[lo] = g[0][0] * a0 + g[0][1] * a1;
            out[hi] = g[1][0] * a0 + g[1][1] * a1;
        }
    }
    StateVector::from_raw(state.n_inputs, out)
}

/// Hermitian, positive, trace-one matrix; row-major storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "DensityMatrixRepr", try_from = "DensityMatrixRepr")]
pub struct DensityMatrix {
    dim: usize,
    entries: Vec<C64>,
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity against [`STATE_TOL`].
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self, StateError> {
        if entries.len() != dim * dim || dim == 0 {
            return Err(StateError::InvalidDensityMatrix(format!(
                "{} entries for dimension {dim}",
                entries.len()
            )));
        }
        let rho = DensityMatrix { dim, entries };
        let herm = rho.hermiticity_defect();
        if herm > STATE_TOL {
            return Err(StateError::InvalidDensityMatrix(format!(
                "not Hermitian ({herm:e})"
            )));
        }
        let tr = rho.trace();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(StateError::InvalidDensityMatrix(format!("trace {tr}")));
        }
        if !rho.is_positive(STATE_TOL) {
            return Err(StateError::InvalidDensityMatrix(
                "eigenvalue below tolerance".into(),
            ));
        }
        Ok(rho)
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self, StateError> {
        let dim = probs.len();
        let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
        for (i, p) in probs.iter().enumerate() {
            entries[i * dim + i] = C64::new(*p, 0.0);
        }
        DensityMatrix::new(dim, entries)
    }

    /// `|ψ⟩⟨ψ|` for a normalized single-qubit vector.
    pub fn pure(psi: [C64; 2]) -> Result<Self, StateError> {
        let entries = (0..4).map(|k| psi[k / 2] * psi[k % 2].conj()).collect();
        DensityMatrix::new(2, entries)
    }

    pub(crate) fn from_raw(dim: usize, entries: Vec<C64>) -> Self {
        DensityMatrix { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i).re).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Positive semidefinite up to `tol`: `ρ + tol·1` admits a Cholesky factorization.
    pub fn is_positive(&self, tol: f64) -> bool {
        let d = self.dim;
        let mut l = vec![C64::new(0.0, 0.0); d * d];
        for j in 0..d {
            let mut diag = self.get(j, j).re + tol;
            for k in 0..j {
                diag -= l[j * d + k].norm_sqr();
            }
            if diag <= 0.0 {
                return false;
            }
            let ljj = diag.sqrt();
            l[j * d + j] = C64::new(ljj, 0.0);
            for i in j + 1..d {
                let mut v = self.get(i, j);
                for k in 0..j {
                    v -= l[i * d + k] * l[j * d + k].conj();
                }
                l[i * d + j] = v / ljj;
            }
        }
        true
    }

    /// Eigenvalues of a 2×2 matrix, ascending.
    pub fn eigenvalues_2x2(&self) -> [f64; 2] {
        assert_eq!(self.dim, 2, "closed-form eigenvalues need a 2x2 matrix");
        let (a, d, b) = (self.get(0, 0).re, self.get(1, 1).re, self.get(0, 1));
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d).powi(2) + b.norm_sqr()).sqrt();
        [mean - radius, mean + radius]
    }

    /// `Tr(ρ O)` for a 2×2 observable given row-major.
    pub fn expectation(&self, op: &[[C64; 2]; 2]) -> C64 {
        assert_eq!(self.dim, 2);
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                acc += self.get(i, j) * op[j][i];
            }
        }
        acc
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
struct DensityMatrixRepr {
    dim: usize,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl From<DensityMatrix> for DensityMatrixRepr {
    fn from(rho: DensityMatrix) -> Self {
        let rows = |f: fn(&C64) -> f64| {
            rho.entries
                .chunks(rho.dim)
                .map(|r| r.iter().map(f).collect())
                .collect()
        };
        DensityMatrixRepr {
            dim: rho.dim,
            re: rows(|c| c.re),
            im: rows(|c| c.im),
        }
    }
}

impl TryFrom<DensityMatrixRepr> for DensityMatrix {
    type Error = StateError;

    fn try_from(repr: DensityMatrixRepr) -> Result<Self, Self::Error> {
        let shape_ok = repr.re.len() == repr.dim
            && repr.im.len() == repr.dim
            && repr.re.iter().chain(&repr.im).all(|r| r.len() == repr.dim);
        if !shape_ok {
            return Err(StateError::InvalidDensityMatrix("ragged rows".into()));
        }
        let entries = repr
            .re
            .iter()
            .flatten()
            .zip(repr.im.iter().flatten())
            .map(|(&re, &im)| C64::new(re, im))
            .collect();
        // Serialized reductions already passed validation when produced.
        Ok(DensityMatrix::from_raw(repr.dim, entries))
    }
}

/// Reduced density matrix of one qubit, tracing out all others. The result
/// is the reduction of `state / ‖state‖`.
pub fn partial_trace(state: &StateVector, keep: Subsystem) -> Result<DensityMatrix, StateError> {
    let n = state.n_inputs;
    let position = keep.position(n);
    if position > n {
        return Err(StateError::QubitOutOfRange {
            index: position,
            n_inputs: n,
        });
    }
    let stride = 1usize << (n - position);
    let amps = &state.amps;
    let (mut r00, mut r11, mut r01) = (0.0, 0.0, C64::new(0.0, 0.0));
    for block in (0..amps.len()).step_by(stride << 1) {
        for lo in block..block + stride {
            let (a0, a1) = (amps[lo], amps[lo + stride]);
            r00 += a0.norm_sqr();
            r11 += a1.norm_sqr();
            r01 += a0 * a1.conj();
        }
    }
    // Dividing by the total weight keeps exact fractions (1/2, 7/8) exact
    // even though amplitudes like 1/√2 are not representable.
    let norm = r00 + r11;
    Ok(DensityMatrix::from_raw(
        2,
        vec![
            C64::new(r00 / norm, 0.0),
            r01 / norm,
            r01.conj() / norm,
            C64::new(r11 / norm, 0.0),
        ],
    ))
}

/// `Tr ρ²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    // Tr ρ² = Σ_ij ρ_ij ρ_ji = Σ_ij |ρ_ij|² for Hermitian ρ.
    rho.entries.iter().map(|e| e.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn bell() -> StateVector {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        StateVector::from_amplitudes(1, vec![c(h), c(0.0), c(0.0), c(h)]).unwrap()
    }

    #[test]
    fn walsh_on_zero_and_one() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let zero = StateVector::basis(0, 0).unwrap();
        let out = apply_single_qubit_gate(&zero, 0, &Gate::walsh()).unwrap();
        assert!((out.amplitudes()[0] - c(h)).norm() < 1e-15);
        assert!((out.amplitudes()[1] - c(h)).norm() < 1e-15);

        let one = StateVector::basis(0, 1).unwrap();
        let out = apply_single_qubit_gate(&one, 0, &Gate::walsh()).unwrap();
        assert!((out.amplitudes()[0] - c(-h)).norm() < 1e-15);
        assert!((out.amplitudes()[1] - c(h)).norm() < 1e-15);
    }

    #[test]
    fn identity_gate_is_a_no_op() {
        let s = apply_single_qubit_gate(&bell(), 1, &Gate::identity()).unwrap();
        assert_eq!(s, bell());
    }

    #[test]
    fn gate_targets_the_right_factor() {
        // X on input 1 of |00⟩|0⟩ gives |10⟩|0⟩, index 0b100.
        let s = StateVector::basis(2, 0).unwrap();
        let out = apply_single_qubit_gate(&s, 0, &Gate::pauli_x()).unwrap();
        assert_eq!(out.amplitudes()[0b100], c(1.0));
        let out = apply_single_qubit_gate(&s, 2, &Gate::pauli_x()).unwrap();
        assert_eq!(out.amplitudes()[0b001], c(1.0));
    }

    #[test]
    fn rejects_non_unitary_gate_and_bad_index() {
        let s = StateVector::basis(1, 0).unwrap();
        let mut g = Gate::identity();
        g.0[0][0] = c(1.001);
        assert!(matches!(
            apply_single_qubit_gate(&s, 0, &g),
            Err(StateError::NonUnitary { .. })
        ));
        assert!(matches!(
            apply_single_qubit_gate(&s, 2, &Gate::walsh()),
            Err(StateError::QubitOutOfRange {
                index: 2,
                n_inputs: 1
            })
        ));
    }

    #[test]
    fn constructor_checks_length_and_norm() {
        assert!(matches!(
            StateVector::from_amplitudes(1, vec![c(1.0); 3]),
            Err(StateError::BadLength {
                len: 3,
                expected: 4
            })
        ));
        assert!(matches!(
            StateVector::from_amplitudes(1, vec![c(1.0), c(1.0), c(0.0), c(0.0)]),
            Err(StateError::NotNormalized { .. })
        ));
        assert!(matches!(
            StateVector::basis(21, 0),
            Err(StateError::ExceedsDenseCap { n: 21 })
        ));
    }

    #[test]
    fn product_state_flag_reduction() {
        let s = StateVector::basis(3, 0).unwrap();
        let rho = partial_trace(&s, Subsystem::Flag).unwrap();
        assert_eq!(rho.entries(), &[c(1.0), c(0.0), c(0.0), c(0.0)]);
    }

    #[test]
    fn bell_pair_reductions_are_maximally_mixed() {
        for keep in [Subsystem::Input(0), Subsystem::Flag] {
            let rho = partial_trace(&bell(), keep).unwrap();
            assert!((rho.get(0, 0).re - 0.5).abs() < 1e-15);
            assert!((rho.get(1, 1).re - 0.5).abs() < 1e-15);
            assert!(rho.get(0, 1).norm() < 1e-15);
            assert!((purity(&rho) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn purity_examples() {
        assert_eq!(purity(&DensityMatrix::diagonal(&[0.5, 0.5]).unwrap()), 0.5);
        assert_eq!(
            purity(&DensityMatrix::diagonal(&[0.875, 0.125]).unwrap()),
            0.78125
        );
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let proj = DensityMatrix::pure([c(h), C64::new(0.0, h)]).unwrap();
        assert!((purity(&proj) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::diagonal(&[0.6, 0.6]).is_err());
        assert!(DensityMatrix::diagonal(&[1.1, -0.1]).is_err());
        let non_herm = vec![c(0.5), c(0.1), c(0.2), c(0.5)];
        assert!(DensityMatrix::new(2, non_herm).is_err());
        assert!(DensityMatrix::new(2, vec![c(1.0)]).is_err());
        let three = DensityMatrix::diagonal(&[0.5, 0.25, 0.25]).unwrap();
        assert!((purity(&three) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn density_matrix_json_round_trip() {
        let rho = partial_trace(&bell(), Subsystem::Flag).unwrap();
        let text = serde_json::to_string(&rho).unwrap();
        let back: DensityMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(rho, back);
    }

    fn arb_state(n_inputs: usize) -> impl Strategy<Value = StateVector> {
        let dim = 1usize << (n_inputs + 1);
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
            .prop_filter("non-zero", |v| {
                v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3)
            })
            .prop_map(move |v| {
                let amps: Vec<C64> = v.into_iter().map(|(a, b)| C64::new(a, b)).collect();
                let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                StateVector::from_raw(n_inputs, amps.into_iter().map(|a| a / norm).collect())
            })
    }

    fn arb_gate() -> impl Strategy<Value = Gate> {
        (
            0.0f64..std::f64::consts::TAU,
            -1.0f64..1.0,
            -1.0f64..1.0,
            0.1f64..1.0,
        )
            .prop_map(|(theta, x, y, z)| Gate::rotation(theta, [x, y, z]))
    }

    proptest! {
        #[test]
        fn gates_preserve_norm_and_invert(
            state in (1usize..5).prop_flat_map(arb_state),
            gate in arb_gate(),
            pos_seed in 0usize..16,
        ) {
            let pos = pos_seed % state.n_qubits();
            let out = apply_single_qubit_gate(&state, pos, &gate).unwrap();
            prop_assert!((out.norm_sqr() - 1.0).abs() < STATE_TOL);
            let back = apply_single_qubit_gate(&out, pos, &gate.adjoint()).unwrap();
            prop_assert!(back.max_abs_diff(&state) < STATE_TOL);
        }

        #[test]
        fn reductions_are_valid_density_matrices(
            state in (0usize..5).prop_flat_map(arb_state),
            pos_seed in 0usize..16,
        ) {
            let keep = Subsystem::from_position(pos_seed % state.n_qubits(), state.n_inputs());
            let rho = partial_trace(&state, keep).unwrap();
            prop_assert!((rho.trace() - 1.0).abs() < STATE_TOL);
            prop_assert!(rho.hermiticity_defect() < STATE_TOL);
            prop_assert!(rho.eigenvalues_2x2()[0] > -STATE_TOL);
            let p = purity(&rho);
            prop_assert!((0.5 - STATE_TOL..=1.0 + STATE_TOL).contains(&p));
        }
    }
}
