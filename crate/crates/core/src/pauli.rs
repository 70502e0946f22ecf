//! Pauli strings in the symplectic bit-mask representation, and real- or
//! complex-weighted sums of them.
//!
//! A string is a pair of masks `(x_mask, z_mask)`: bit `q` of `x_mask` set
//! means the factor at qubit `q` contains sigma_x, bit `q` of `z_mask` means
//! it contains sigma_z. The four combinations per qubit are I (00), X (10),
//! Z (01) and Y (11); the canonical single-qubit operator is
//! `i^(x*z) X^x Z^z`, which makes Y = iXZ come out Hermitian.
//!
//! Convention used throughout the crate: qubit 0 is the *leftmost* symbol of
//! a literal such as `"XYZI"` or a ket `|1100>`, and bit `q` of a basis index
//! is the state of qubit `q`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register the single-word masks can hold.
pub const MAX_QUBITS: usize = 64;

/// Default absolute magnitude below which sum coefficients are discarded.
pub const DEFAULT_DROPOUT: f64 = 1e-12;

const I_POWERS: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];

/// Phase-free n-qubit Pauli string.
///
/// The derived `Ord` (masks after qubit count) is only used for deterministic
/// map ordering; order by [`PauliString::literal`] when a human-facing order
/// is needed.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct PauliString {
    n_qubits: usize,
    x_mask: u64,
    z_mask: u64,
}

impl PauliString {
    /// Build from raw masks. Panics if the register is empty, larger than
    /// [`MAX_QUBITS`], or a mask uses bits outside the register: those are
    /// programmer errors, not data errors.
    pub fn new(n_qubits: usize, x_mask: u64, z_mask: u64) -> Self {
        assert!(n_qubits >= 1 && n_qubits <= MAX_QUBITS, "bad qubit count {n_qubits}");
        let valid = if n_qubits == 64 { u64::MAX } else { (1u64 << n_qubits) - 1 };
        assert_eq!(x_mask & !valid, 0, "x_mask uses bits outside the register");
        assert_eq!(z_mask & !valid, 0, "z_mask uses bits outside the register");
        PauliString { n_qubits, x_mask, z_mask }
    }

    pub fn identity(n_qubits: usize) -> Self {
        PauliString::new(n_qubits, 0, 0)
    }

    /// Parse a literal like `"XYZI"`; leftmost letter is qubit 0.
    pub fn from_literal(text: &str) -> Result<Self> {
        let n = text.len();
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::invalid("pauli literal", format!("length {n} not in 1..={MAX_QUBITS}")));
        }
        let (mut x, mut z) = (0u64, 0u64);
        for (q, ch) in text.chars().enumerate() {
            match ch {
                'I' => {}
                'X' => x |= 1 << q,
                'Z' => z |= 1 << q,
                'Y' => {
                    x |= 1 << q;
                    z |= 1 << q;
                }
                other => {
                    return Err(Error::invalid("pauli literal", format!("character '{other}' at qubit {q}")));
                }
            }
        }
        Ok(PauliString::new(n, x, z))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x_mask
    }

    pub fn z_mask(&self) -> u64 {
        self.z_mask
    }

    /// Qubits carrying a non-identity factor.
    pub fn support_mask(&self) -> u64 {
        self.x_mask | self.z_mask
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> u32 {
        self.support_mask().count_ones()
    }

    pub fn is_identity(&self) -> bool {
        self.support_mask() == 0
    }

    pub fn letter(&self, qubit: usize) -> char {
        assert!(qubit < self.n_qubits);
        match ((self.x_mask >> qubit) & 1, (self.z_mask >> qubit) & 1) {
            (0, 0) => 'I',
            (1, 0) => 'X',
            (0, 1) => 'Z',
            _ => 'Y',
        }
    }

    pub fn literal(&self) -> String {
        (0..self.n_qubits).map(|q| self.letter(q)).collect()
    }

    /// Product string and the exponent k of the global phase i^k, so that
    /// `A * B = i^k * C`.
    pub fn mul_with_phase(&self, other: &Self) -> (Self, u8) {
        assert_eq!(self.n_qubits, other.n_qubits, "qubit count mismatch");
        let cx = self.x_mask ^ other.x_mask;
        let cz = self.z_mask ^ other.z_mask;
        // i^(a.xz) i^(b.xz) (-1)^(a.z & b.x) = i^k i^(c.xz) with the result in
        // canonical form; popcounts live in u32 so work the subtraction mod 4.
        let k = (self.x_mask & self.z_mask).count_ones()
            + (other.x_mask & other.z_mask).count_ones()
            + 2 * (self.z_mask & other.x_mask).count_ones()
            + 4 * MAX_QUBITS as u32
            - (cx & cz).count_ones();
        (PauliString::new(self.n_qubits, cx, cz), (k % 4) as u8)
    }

    /// General commutativity: the symplectic form has even parity.
    pub fn commutes(&self, other: &Self) -> bool {
        assert_eq!(self.n_qubits, other.n_qubits, "qubit count mismatch");
        ((self.x_mask & other.z_mask) ^ (self.z_mask & other.x_mask)).count_ones() % 2 == 0
    }

    /// Qubitwise commutativity: at every qubit the factors are equal or at
    /// least one is identity. Strictly stronger than [`commutes`].
    ///
    /// [`commutes`]: PauliString::commutes
    pub fn qubitwise_commutes(&self, other: &Self) -> bool {
        assert_eq!(self.n_qubits, other.n_qubits, "qubit count mismatch");
        let both = self.support_mask() & other.support_mask();
        ((self.x_mask ^ other.x_mask) | (self.z_mask ^ other.z_mask)) & both == 0
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.literal())
    }
}

/// One weighted string.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliTerm {
    pub string: PauliString,
    pub coefficient: Complex64,
}

impl PauliTerm {
    pub fn new(string: PauliString, coefficient: Complex64) -> Self {
        PauliTerm { string, coefficient }
    }
}

/// Term product: result string is the mask XOR, the phase lands in the
/// coefficient so string equality stays a pure mask comparison.
pub fn pauli_mul(a: &PauliTerm, b: &PauliTerm) -> Result<PauliTerm> {
    if a.string.n_qubits() != b.string.n_qubits() {
        return Err(Error::DimensionMismatch {
            left: a.string.n_qubits(),
            right: b.string.n_qubits(),
        });
    }
    let (string, k) = a.string.mul_with_phase(&b.string);
    Ok(PauliTerm::new(string, a.coefficient * b.coefficient * I_POWERS[k as usize]))
}

/// Sum of weighted Pauli strings with like terms combined.
///
/// Coefficients whose magnitude falls at or below the dropout tolerance are
/// removed on insertion (absolute threshold, configurable per sum).
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    dropout: f64,
    terms: BTreeMap<PauliString, Complex64>,
}

impl PauliSum {
    pub fn new(n_qubits: usize) -> Self {
        PauliSum::with_dropout(n_qubits, DEFAULT_DROPOUT)
    }

    pub fn with_dropout(n_qubits: usize, dropout: f64) -> Self {
        assert!(n_qubits >= 1 && n_qubits <= MAX_QUBITS, "bad qubit count {n_qubits}");
        assert!(dropout >= 0.0);
        PauliSum { n_qubits, dropout, terms: BTreeMap::new() }
    }

    pub fn identity(n_qubits: usize) -> Self {
        let mut s = PauliSum::new(n_qubits);
        s.terms.insert(PauliString::identity(n_qubits), Complex64::new(1.0, 0.0));
        s
    }

    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, Complex64)>,
    {
        let mut s = PauliSum::new(n_qubits);
        for (string, coefficient) in terms {
            s.add_term(string, coefficient)?;
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, string: PauliString, coefficient: Complex64) -> Result<()> {
        if string.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch { left: self.n_qubits, right: string.n_qubits() });
        }
        if !coefficient.re.is_finite() || !coefficient.im.is_finite() {
            return Err(Error::invalid("coefficient", format!("non-finite for {string}")));
        }
        let entry = self.terms.entry(string).or_insert(Complex64::new(0.0, 0.0));
        *entry += coefficient;
        if entry.norm() <= self.dropout {
            self.terms.remove(&string);
        }
        Ok(())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.terms.iter()
    }

    pub fn strings(&self) -> impl Iterator<Item = &PauliString> {
        self.terms.keys()
    }

    /// Coefficient of a string, zero when absent.
    pub fn coefficient(&self, string: &PauliString) -> Complex64 {
        self.terms.get(string).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Largest coefficient magnitude in the sum (0 for the empty sum).
    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// All coefficients have imaginary part within `tol`; since Pauli strings
    /// are Hermitian and linearly independent this is exactly Hermiticity.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = PauliSum::with_dropout(self.n_qubits, self.dropout);
        for (s, c) in &self.terms {
            let v = c * factor;
            if v.norm() > out.dropout {
                out.terms.insert(*s, v);
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch { left: self.n_qubits, right: other.n_qubits });
        }
        let mut out = self.clone();
        for (s, c) in &other.terms {
            out.add_term(*s, *c)?;
        }
        Ok(out)
    }

    /// Drop terms with |c| below `eps` times the largest magnitude present.
    /// High symbolic powers cancel huge coefficients exactly; the absolute
    /// dropout cannot see those residues, a relative pass can.
    pub fn prune_relative(&mut self, eps: f64) {
        let scale = self.max_abs_coefficient();
        if scale > 0.0 {
            let cut = eps * scale;
            self.terms.retain(|_, c| c.norm() > cut);
        }
    }
}

/// Product of two sums: every pairwise term product, like strings merged,
/// entries at or below the dropout tolerance removed.
pub fn sum_mul(a: &PauliSum, b: &PauliSum) -> Result<PauliSum> {
    if a.n_qubits() != b.n_qubits() {
        return Err(Error::DimensionMismatch { left: a.n_qubits(), right: b.n_qubits() });
    }
    let mut out = PauliSum::with_dropout(a.n_qubits(), a.dropout().max(b.dropout()));
    let mut acc: BTreeMap<PauliString, Complex64> = BTreeMap::new();
    for (sa, ca) in a.terms() {
        for (sb, cb) in b.terms() {
            let (s, k) = sa.mul_with_phase(sb);
            *acc.entry(s).or_insert(Complex64::new(0.0, 0.0)) += ca * cb * I_POWERS[k as usize];
        }
    }
    for (s, c) in acc {
        if c.norm() > out.dropout() {
            out.terms.insert(s, c);
        }
    }
    Ok(out)
}

/// A^n by repeated multiplication; A^0 is the identity sum.
pub fn sum_power(a: &PauliSum, n: usize) -> Result<PauliSum> {
    let mut out = PauliSum::identity(a.n_qubits());
    for _ in 0..n {
        out = sum_mul(&out, a)?;
    }
    Ok(out)
}

/// Outcome of a string-basis closure search.
#[derive(Clone, Debug)]
pub struct ClosureResult {
    /// Union of strings appearing in A^1..A^power_reached.
    pub strings: BTreeSet<PauliString>,
    /// True when some power added no new strings before `max_power` ran out.
    pub closed: bool,
    /// Highest power that still contributed a new string.
    pub power_reached: usize,
}

/// Collect the strings of A^1, A^2, ... until the set stops growing (closure)
/// or `max_power` is reached. Degenerate couplings can close on fewer strings
/// than the generic count, so the result reports sizes instead of asserting
/// them. Powers are pruned relative to their largest coefficient so that
/// exactly-cancelling strings do not linger as rounding residue.
pub fn basis_closure(a: &PauliSum, max_power: usize) -> Result<ClosureResult> {
    if max_power < 1 {
        return Err(Error::invalid("max_power", "must be at least 1"));
    }
    let mut strings: BTreeSet<PauliString> = a.strings().copied().collect();
    let mut current = a.clone();
    let mut power_reached = 1;
    let mut closed = false;
    for power in 2..=max_power {
        current = sum_mul(&current, a)?;
        current.prune_relative(DEFAULT_DROPOUT);
        let before = strings.len();
        strings.extend(current.strings().copied());
        if strings.len() == before {
            closed = true;
            break;
        }
        power_reached = power;
    }
    Ok(ClosureResult { strings, closed, power_reached })
}
