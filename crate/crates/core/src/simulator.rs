//! Dense statevector simulation: circuit application, Pauli expectations,
//! basis-rotated sampling with optional readout noise, readout calibration,
//! and an ancilla-based interference test for single-string expectations.
//!
//! Basis-index convention: bit q of an amplitude index is the state of qubit
//! q, so the literal `"1100"` (qubit 0 leftmost) is amplitude index 3.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::models::{Circuit, Gate};
use crate::pauli::{PauliString, PauliSum};

/// Condition-number cap for readout calibration solves.
pub const CALIBRATION_CONDITION_CAP: f64 = 1e6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense n-qubit state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// |00...0>.
    pub fn zero_state(n_qubits: usize) -> Self {
        assert!(n_qubits >= 1 && n_qubits <= 24, "statevector register out of range");
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[0] = ONE;
        StateVector { n_qubits, amplitudes }
    }

    /// Computational basis state from a literal such as `"1100"`; the
    /// leftmost character is qubit 0.
    pub fn from_bitstring(bits: &str) -> Result<Self> {
        let n = bits.len();
        if n == 0 || n > 24 {
            return Err(Error::invalid("bitstring", format!("length {n} not in 1..=24")));
        }
        let mut index = 0usize;
        for (q, ch) in bits.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => index |= 1 << q,
                other => return Err(Error::invalid("bitstring", format!("character '{other}'"))),
            }
        }
        let mut state = StateVector::zero_state(n);
        state.amplitudes[0] = ZERO;
        state.amplitudes[index] = ONE;
        Ok(state)
    }

    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1usize << n_qubits {
            return Err(Error::invalid(
                "amplitudes",
                format!("{} entries for {n_qubits} qubits", amplitudes.len()),
            ));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::invalid("amplitudes", "non-finite entry"));
        }
        Ok(StateVector { n_qubits, amplitudes })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// <self|other>.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.n_qubits, other.n_qubits, "qubit count mismatch");
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    fn apply_single(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) {
        let bit = 1usize << qubit;
        for base in 0..self.amplitudes.len() {
            if base & bit == 0 {
                let (v0, v1) = (self.amplitudes[base], self.amplitudes[base | bit]);
                self.amplitudes[base] = m[0][0] * v0 + m[0][1] * v1;
                self.amplitudes[base | bit] = m[1][0] * v0 + m[1][1] * v1;
            }
        }
    }
}

/// Run every gate of `circuit` on a copy of `state`.
pub fn apply_circuit(state: &StateVector, circuit: &Circuit) -> StateVector {
    assert_eq!(state.n_qubits(), circuit.n_qubits(), "qubit count mismatch");
    let mut out = state.clone();
    let im = |v: f64| Complex64::new(0.0, v);
    let re = |v: f64| Complex64::new(v, 0.0);
    for gate in circuit.gates() {
        match *gate {
            Gate::X(q) => out.apply_single(q, [[ZERO, ONE], [ONE, ZERO]]),
            Gate::H(q) => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                out.apply_single(q, [[re(h), re(h)], [re(h), re(-h)]]);
            }
            Gate::S(q) => out.apply_single(q, [[ONE, ZERO], [ZERO, im(1.0)]]),
            Gate::Sdg(q) => out.apply_single(q, [[ONE, ZERO], [ZERO, im(-1.0)]]),
            Gate::Ry { qubit, theta } => {
                let (s, c) = (theta / 2.0).sin_cos();
                out.apply_single(qubit, [[re(c), re(-s)], [re(s), re(c)]]);
            }
            Gate::Rz { qubit, theta } => {
                let phase = Complex64::from_polar(1.0, theta / 2.0);
                out.apply_single(qubit, [[phase.conj(), ZERO], [ZERO, phase]]);
            }
            Gate::Cz(a, b) => {
                let mask = (1usize << a) | (1usize << b);
                for (j, amp) in out.amplitudes.iter_mut().enumerate() {
                    if j & mask == mask {
                        *amp = -*amp;
                    }
                }
            }
            Gate::Cx { control, target } => {
                let (cbit, tbit) = (1usize << control, 1usize << target);
                for j in 0..out.amplitudes.len() {
                    if j & cbit != 0 && j & tbit == 0 {
                        out.amplitudes.swap(j, j | tbit);
                    }
                }
            }
        }
    }
    out
}

/// Prepare a circuit's output state from |00...0>.
pub fn prepare(circuit: &Circuit) -> StateVector {
    apply_circuit(&StateVector::zero_state(circuit.n_qubits()), circuit)
}

/// P|phi> for a single string: amplitude j picks up i^w (-1)^(z.j) and moves
/// to j xor x, with w the count of Y factors.
fn apply_string(state: &StateVector, p: &PauliString, coeff: Complex64, out: &mut [Complex64]) {
    let (x, z) = (p.x_mask() as usize, p.z_mask());
    let i_pow = [ONE, Complex64::new(0.0, 1.0), -ONE, Complex64::new(0.0, -1.0)];
    let phase = coeff * i_pow[((p.x_mask() & p.z_mask()).count_ones() % 4) as usize];
    for (j, amp) in state.amplitudes.iter().enumerate() {
        let signed = if (z & j as u64).count_ones() % 2 == 0 { phase } else { -phase };
        out[j ^ x] += signed * amp;
    }
}

/// A|phi> for a Pauli sum.
pub fn apply(sum: &PauliSum, state: &StateVector) -> Result<StateVector> {
    if sum.n_qubits() != state.n_qubits() {
        return Err(Error::DimensionMismatch { left: sum.n_qubits(), right: state.n_qubits() });
    }
    let mut out = vec![ZERO; state.amplitudes.len()];
    for (p, c) in sum.terms() {
        apply_string(state, p, *c, &mut out);
    }
    StateVector::from_amplitudes(state.n_qubits(), out)
}

/// <phi|P|phi>; exactly real in exact arithmetic, the tiny imaginary
/// rounding residue is checked and discarded.
pub fn expectation_string(state: &StateVector, p: &PauliString) -> f64 {
    assert_eq!(state.n_qubits(), p.n_qubits(), "qubit count mismatch");
    let (x, z) = (p.x_mask() as usize, p.z_mask());
    let i_pow = [ONE, Complex64::new(0.0, 1.0), -ONE, Complex64::new(0.0, -1.0)];
    let phase = i_pow[((p.x_mask() & p.z_mask()).count_ones() % 4) as usize];
    let mut total = ZERO;
    for (j, amp) in state.amplitudes.iter().enumerate() {
        let sign = if (z & j as u64).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        total += state.amplitudes[j ^ x].conj() * phase * sign * amp;
    }
    debug_assert!(total.im.abs() < 1e-8, "string expectation residue {}", total.im);
    total.re
}

/// <phi|A|phi> for a Hermitian sum.
pub fn expectation(state: &StateVector, sum: &PauliSum) -> Result<f64> {
    if sum.n_qubits() != state.n_qubits() {
        return Err(Error::DimensionMismatch { left: sum.n_qubits(), right: state.n_qubits() });
    }
    if !sum.is_hermitian(1e-10) {
        return Err(Error::NotHermitian("expectation of a non-Hermitian sum".into()));
    }
    let mut total = 0.0;
    for (p, c) in sum.terms() {
        total += c.re * expectation_string(state, p);
    }
    Ok(total)
}

/// Measurement axis per qubit for a qubitwise-commuting group: the common
/// non-identity letter where one exists, Z where every member is identity.
pub fn measurement_basis(group: &[PauliString]) -> Result<Vec<char>> {
    if group.is_empty() {
        return Err(Error::invalid("group", "empty measurement group"));
    }
    let n = group[0].n_qubits();
    let mut basis = vec!['Z'; n];
    for (q, slot) in basis.iter_mut().enumerate() {
        let mut seen = None;
        for p in group {
            if p.n_qubits() != n {
                return Err(Error::DimensionMismatch { left: n, right: p.n_qubits() });
            }
            let letter = p.letter(q);
            if letter == 'I' {
                continue;
            }
            match seen {
                None => seen = Some(letter),
                Some(prev) if prev == letter => {}
                Some(prev) => {
                    return Err(Error::invalid(
                        "group",
                        format!("qubit {q} mixes {prev} and {letter}; not qubitwise commuting"),
                    ));
                }
            }
        }
        if let Some(letter) = seen {
            *slot = letter;
        }
    }
    Ok(basis)
}

/// Circuit rotating each axis onto Z: H for X, S-dagger then H for Y.
pub fn rotation_for_basis(basis: &[char]) -> Circuit {
    let mut c = Circuit::new(basis.len());
    for (q, letter) in basis.iter().enumerate() {
        match letter {
            'X' => c.push(Gate::H(q)),
            'Y' => {
                c.push(Gate::Sdg(q));
                c.push(Gate::H(q));
            }
            _ => {}
        }
    }
    c
}

/// Basis-change circuit for a qubitwise-commuting group.
pub fn measurement_rotation(group: &[PauliString]) -> Result<Circuit> {
    Ok(rotation_for_basis(&measurement_basis(group)?))
}

/// True when a measurement in `basis` determines `<string>`: every support
/// qubit of the string measures along the string's own letter.
pub fn basis_measures(basis: &[char], string: &PauliString) -> bool {
    assert_eq!(basis.len(), string.n_qubits(), "qubit count mismatch");
    (0..string.n_qubits()).all(|q| {
        let letter = string.letter(q);
        letter == 'I' || letter == basis[q]
    })
}

/// Bit-flip readout error rates: p01 = P(read 1 | true 0), p10 the reverse.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReadoutNoiseModel {
    p01: f64,
    p10: f64,
}

impl ReadoutNoiseModel {
    pub fn new(p01: f64, p10: f64) -> Result<Self> {
        for (name, v) in [("p01", p01), ("p10", p10)] {
            if !(0.0..0.5).contains(&v) {
                return Err(Error::invalid(name, format!("{v} not in [0, 0.5)")));
            }
        }
        Ok(ReadoutNoiseModel { p01, p10 })
    }

    pub fn p01(&self) -> f64 {
        self.p01
    }

    pub fn p10(&self) -> f64 {
        self.p10
    }

    pub fn is_trivial(&self) -> bool {
        self.p01 == 0.0 && self.p10 == 0.0
    }

    /// Push an outcome distribution through the per-qubit confusion matrix
    /// [[1-p01, p10], [p01, 1-p10]] on every qubit.
    pub fn apply_to_probabilities(&self, probabilities: &[f64]) -> Vec<f64> {
        let mut out = probabilities.to_vec();
        let n = out.len().trailing_zeros() as usize;
        for q in 0..n {
            let bit = 1usize << q;
            for base in 0..out.len() {
                if base & bit == 0 {
                    let (v0, v1) = (out[base], out[base | bit]);
                    out[base] = (1.0 - self.p01) * v0 + self.p10 * v1;
                    out[base | bit] = self.p01 * v0 + (1.0 - self.p10) * v1;
                }
            }
        }
        out
    }
}

/// Histogram over computational-basis outcomes. Entries are f64 so that
/// calibrated (fractional) counts share the type; `total_shots` stays 0 for
/// analytic distributions, whose entries are exact probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct CountsVector {
    pub counts: Vec<f64>,
    pub total_shots: u64,
}

impl CountsVector {
    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

/// Measure `state` in the basis reached by `rotation`. With `shots == 0` the
/// exact outcome distribution (noise applied when given) is returned; with
/// shots, each shot draws an outcome by CDF inversion and then, under noise,
/// one flip decision per qubit in ascending order.
pub fn sample_counts(
    state: &StateVector,
    rotation: &Circuit,
    shots: u64,
    noise: Option<&ReadoutNoiseModel>,
    seed: u64,
) -> Result<CountsVector> {
    if state.n_qubits() != rotation.n_qubits() {
        return Err(Error::DimensionMismatch { left: state.n_qubits(), right: rotation.n_qubits() });
    }
    let rotated = apply_circuit(state, rotation);
    let probabilities = rotated.probabilities();
    let n = state.n_qubits();
    if shots == 0 {
        let counts = match noise {
            Some(model) => model.apply_to_probabilities(&probabilities),
            None => probabilities,
        };
        return Ok(CountsVector { counts, total_shots: 0 });
    }
    let mut cdf = probabilities.clone();
    let mut acc = 0.0;
    for v in cdf.iter_mut() {
        acc += *v;
        *v = acc;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0.0; probabilities.len()];
    for _ in 0..shots {
        let u: f64 = rng.gen::<f64>() * acc;
        let mut outcome = cdf.partition_point(|&c| c <= u);
        if outcome >= counts.len() {
            outcome = counts.len() - 1;
        }
        if let Some(model) = noise {
            for q in 0..n {
                let flip_probability = if outcome & (1 << q) == 0 { model.p01() } else { model.p10() };
                if rng.gen::<f64>() < flip_probability {
                    outcome ^= 1 << q;
                }
            }
        }
        counts[outcome] += 1.0;
    }
    Ok(CountsVector { counts, total_shots: shots })
}

/// Expectation of each string from one shared histogram: eigenvalue of an
/// outcome is the parity of the outcome bits over the string's support.
pub fn expectations_from_counts(counts: &CountsVector, strings: &[PauliString]) -> Result<Vec<f64>> {
    let total = counts.total();
    if total <= 0.0 {
        return Err(Error::invalid("counts", "empty histogram"));
    }
    let mut out = Vec::with_capacity(strings.len());
    for p in strings {
        if counts.counts.len() != 1usize << p.n_qubits() {
            return Err(Error::DimensionMismatch {
                left: counts.counts.len(),
                right: 1usize << p.n_qubits(),
            });
        }
        let support = p.support_mask();
        let mut value = 0.0;
        for (o, c) in counts.counts.iter().enumerate() {
            if (o as u64 & support).count_ones() % 2 == 0 {
                value += c;
            } else {
                value -= c;
            }
        }
        out.push(value / total);
    }
    Ok(out)
}

/// Readout confusion matrix; column t holds the outcome distribution of the
/// prepared basis state t.
#[derive(Clone, Debug)]
pub struct CalibrationMatrix {
    j: DMatrix<f64>,
}

impl CalibrationMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn n_qubits(&self) -> usize {
        self.j.nrows().trailing_zeros() as usize
    }
}

/// Estimate the confusion matrix column by column: prepare each basis state,
/// read it out under `noise`. `shots_per_basis == 0` takes the analytic
/// product-form columns instead of sampling.
pub fn build_calibration(
    noise: &ReadoutNoiseModel,
    n_qubits: usize,
    shots_per_basis: u64,
    seed: u64,
) -> Result<CalibrationMatrix> {
    let dim = 1usize << n_qubits;
    let identity_rotation = Circuit::new(n_qubits);
    let mut j = DMatrix::zeros(dim, dim);
    for t in 0..dim {
        let mut basis = StateVector::zero_state(n_qubits);
        basis.amplitudes[0] = ZERO;
        basis.amplitudes[t] = ONE;
        let counts = sample_counts(
            &basis,
            &identity_rotation,
            shots_per_basis,
            Some(noise),
            mix_seed(seed, t as u64),
        )?;
        let total = counts.total();
        for o in 0..dim {
            j[(o, t)] = counts.counts[o] / total;
        }
    }
    Ok(CalibrationMatrix { j })
}

/// Calibration output: the repaired histogram plus the raw linear-solve
/// result (which may carry small negative entries) and the conditioning of
/// the confusion matrix.
#[derive(Clone, Debug)]
pub struct CalibratedCounts {
    pub counts: CountsVector,
    pub unclipped: Vec<f64>,
    pub condition_number: f64,
}

/// Invert the confusion matrix on a histogram: solve J c = counts, reject
/// conditioning beyond [`CALIBRATION_CONDITION_CAP`], then clip negatives and
/// rescale so the repaired histogram keeps the observed total.
pub fn calibrate_counts(
    calibration: &CalibrationMatrix,
    noisy: &CountsVector,
) -> Result<CalibratedCounts> {
    let dim = calibration.j.nrows();
    if noisy.counts.len() != dim {
        return Err(Error::DimensionMismatch { left: noisy.counts.len(), right: dim });
    }
    let singular = calibration.j.clone().svd(false, false).singular_values;
    let (s_max, s_min) = (singular.max(), singular.min());
    let condition_number = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    if condition_number > CALIBRATION_CONDITION_CAP {
        return Err(Error::IllConditioned { cond: condition_number, cap: CALIBRATION_CONDITION_CAP });
    }
    let rhs = nalgebra::DVector::from_column_slice(&noisy.counts);
    let unclipped = calibration
        .j
        .clone()
        .full_piv_lu()
        .solve(&rhs)
        .ok_or(Error::IllConditioned { cond: condition_number, cap: CALIBRATION_CONDITION_CAP })?;
    let unclipped: Vec<f64> = unclipped.iter().copied().collect();
    let clipped: Vec<f64> = unclipped.iter().map(|&v| v.max(0.0)).collect();
    let clipped_total: f64 = clipped.iter().sum();
    if clipped_total <= 0.0 {
        return Err(Error::invalid("calibration", "histogram vanished after clipping"));
    }
    let scale = noisy.total() / clipped_total;
    Ok(CalibratedCounts {
        counts: CountsVector {
            counts: clipped.into_iter().map(|v| v * scale).collect(),
            total_shots: noisy.total_shots,
        },
        unclipped,
        condition_number,
    })
}

/// Interference estimate of Re<phi|P|phi> with one ancilla: Hadamard,
/// controlled string, Hadamard, then ancilla statistics p0 = (1 + Re<P>)/2.
/// `shots == 0` reads p0 off the ancilla amplitudes exactly.
pub fn hadamard_test(
    prep: &Circuit,
    p: &PauliString,
    shots: u64,
    seed: u64,
) -> Result<f64> {
    if prep.n_qubits() != p.n_qubits() {
        return Err(Error::DimensionMismatch { left: prep.n_qubits(), right: p.n_qubits() });
    }
    let n = p.n_qubits();
    let anc = 1usize << n;
    // data register keeps its bit positions; the ancilla is the new top bit
    let mut extended = Circuit::new(n + 1);
    for gate in prep.gates() {
        extended.push(*gate);
    }
    extended.push(Gate::H(n));
    let mut state = prepare(&extended);
    // controlled string on the ancilla-set half of the register
    let (x, z) = (p.x_mask() as usize, p.z_mask());
    let i_pow = [ONE, Complex64::new(0.0, 1.0), -ONE, Complex64::new(0.0, -1.0)];
    let phase = i_pow[((p.x_mask() & p.z_mask()).count_ones() % 4) as usize];
    let mut next = state.amplitudes.clone();
    for j in 0..anc {
        let source = anc | j;
        let sign = if (z & j as u64).count_ones() % 2 == 0 { phase } else { -phase };
        next[anc | (j ^ x)] = sign * state.amplitudes[source];
    }
    state.amplitudes = next;
    let mut closing = Circuit::new(n + 1);
    closing.push(Gate::H(n));
    let state = apply_circuit(&state, &closing);
    let p0: f64 = state.amplitudes[..anc].iter().map(|a| a.norm_sqr()).sum();
    if shots == 0 {
        return Ok(2.0 * p0 - 1.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut zeros = 0u64;
    for _ in 0..shots {
        if rng.gen::<f64>() < p0 {
            zeros += 1;
        }
    }
    Ok(2.0 * (zeros as f64 / shots as f64) - 1.0)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Decorrelated per-stream seed so that parallel work items draw independent
/// sequences from one user-facing seed, independent of worker count.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_add(0xA5A5_A5A5_A5A5_A5A5)))
}
