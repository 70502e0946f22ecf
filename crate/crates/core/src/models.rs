//! Model builders: the anisotropic Heisenberg Hamiltonian on a short spin
//! chain or ring, the total-magnetization observable, the hardware-style
//! four-qubit trial circuit, and small dense spectra for reference values.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{PauliString, PauliSum};

/// Largest register the dense-spectrum routines accept.
pub const SPECTRUM_QUBIT_CAP: usize = 12;

/// Chain boundary handling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    OpenChain,
    Ring,
}

/// Couplings for H = J sum (XX + YY) + U sum ZZ + B sum Z over nearest
/// neighbours; the ring closes the last bond when there are more than two
/// sites (for two sites the wrap bond would duplicate the open one).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeisenbergParams {
    pub j: f64,
    pub u: f64,
    pub b: f64,
    pub n_sites: usize,
    pub topology: Topology,
}

pub fn build_heisenberg(params: &HeisenbergParams) -> Result<PauliSum> {
    let n = params.n_sites;
    if n < 2 || n > crate::pauli::MAX_QUBITS {
        return Err(Error::invalid("n_sites", format!("{n} not in 2..=64")));
    }
    let mut bonds: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    if params.topology == Topology::Ring && n > 2 {
        bonds.push((n - 1, 0));
    }
    let mut sum = PauliSum::new(n);
    let re = |v: f64| Complex64::new(v, 0.0);
    for (i, j) in bonds {
        let (bi, bj) = (1u64 << i, 1u64 << j);
        sum.add_term(PauliString::new(n, bi | bj, 0), re(params.j))?;
        sum.add_term(PauliString::new(n, bi | bj, bi | bj), re(params.j))?;
        sum.add_term(PauliString::new(n, 0, bi | bj), re(params.u))?;
    }
    for q in 0..n {
        sum.add_term(PauliString::new(n, 0, 1 << q), re(params.b))?;
    }
    Ok(sum)
}

/// Total magnetization sum_q Z_q.
pub fn build_magnetization(n_sites: usize) -> Result<PauliSum> {
    if n_sites < 1 || n_sites > crate::pauli::MAX_QUBITS {
        return Err(Error::invalid("n_sites", format!("{n_sites} not in 1..=64")));
    }
    let mut sum = PauliSum::new(n_sites);
    for q in 0..n_sites {
        sum.add_term(PauliString::new(n_sites, 0, 1 << q), Complex64::new(1.0, 0.0))?;
    }
    Ok(sum)
}

/// Circuit gates. Ry(theta) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]],
/// Rz(theta) = diag(e^{-i t/2}, e^{i t/2}).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    X(usize),
    H(usize),
    S(usize),
    Sdg(usize),
    Ry { qubit: usize, theta: f64 },
    Rz { qubit: usize, theta: f64 },
    Cz(usize, usize),
    Cx { control: usize, target: usize },
}

impl Gate {
    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::X(q) | Gate::H(q) | Gate::S(q) | Gate::Sdg(q) => (q, None),
            Gate::Ry { qubit, .. } | Gate::Rz { qubit, .. } => (qubit, None),
            Gate::Cz(a, b) => (a, Some(b)),
            Gate::Cx { control, target } => (control, Some(target)),
        }
    }
}

/// Ordered gate list on a fixed register.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        assert!(n_qubits >= 1 && n_qubits <= crate::pauli::MAX_QUBITS);
        Circuit { n_qubits, gates: Vec::new() }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) {
        let (a, b) = gate.qubits();
        assert!(a < self.n_qubits, "gate qubit {a} outside register");
        if let Some(b) = b {
            assert!(b < self.n_qubits, "gate qubit {b} outside register");
            assert_ne!(a, b, "two-qubit gate needs distinct qubits");
        }
        self.gates.push(gate);
    }

    pub fn extend(&mut self, other: &Circuit) {
        assert_eq!(self.n_qubits, other.n_qubits);
        self.gates.extend_from_slice(&other.gates);
    }
}

/// Four-qubit trial-state preparation: flip qubits 0 and 1, entangle with a
/// CZ ladder, then rotate qubits 0, 2 and 3 about Y (qubit 3 by a fixed pi).
pub fn build_ansatz(theta0: f64, theta1: f64) -> Circuit {
    let mut c = Circuit::new(4);
    c.push(Gate::X(0));
    c.push(Gate::X(1));
    c.push(Gate::Cz(0, 1));
    c.push(Gate::Cz(1, 2));
    c.push(Gate::Cz(2, 3));
    c.push(Gate::Ry { qubit: 0, theta: theta0 });
    c.push(Gate::Ry { qubit: 2, theta: theta1 });
    c.push(Gate::Ry { qubit: 3, theta: std::f64::consts::PI });
    c
}

/// Dense matrix of a Pauli sum in the computational basis; bit q of the
/// column index is the state of qubit q.
pub fn dense_matrix(sum: &PauliSum) -> DMatrix<Complex64> {
    let n = sum.n_qubits();
    let dim = 1usize << n;
    let mut m = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    let i_pow = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ];
    for (p, coeff) in sum.terms() {
        let (x, z) = (p.x_mask(), p.z_mask());
        let phase = i_pow[((x & z).count_ones() % 4) as usize];
        for col in 0..dim {
            let sign = if (z & col as u64).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            let row = col ^ x as usize;
            m[(row, col)] += coeff * phase * sign;
        }
    }
    m
}

/// Ascending eigenvalues plus the ground eigenvector.
#[derive(Clone, Debug)]
pub struct SpectrumResult {
    pub eigenvalues: Vec<f64>,
    pub ground_vector: Vec<Complex64>,
}

/// Full eigensystem, eigenvectors column-per-eigenvalue in ascending order.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<Complex64>>,
}

fn hermitian_eigensystem(sum: &PauliSum) -> Result<(Vec<f64>, Vec<Vec<Complex64>>)> {
    let n = sum.n_qubits();
    if n > SPECTRUM_QUBIT_CAP {
        return Err(Error::SizeCap { n_qubits: n, cap: SPECTRUM_QUBIT_CAP });
    }
    if !sum.is_hermitian(1e-10) {
        return Err(Error::NotHermitian("coefficients are not real".into()));
    }
    let dim = 1usize << n;
    let eig = dense_matrix(sum).symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors: Vec<Vec<Complex64>> = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    Ok((eigenvalues, eigenvectors))
}

/// Eigenvalues in ascending order and the ground eigenvector, by dense
/// Hermitian diagonalization. Rejects registers above [`SPECTRUM_QUBIT_CAP`]
/// and sums with non-real coefficients.
pub fn exact_spectrum(sum: &PauliSum) -> Result<SpectrumResult> {
    let (eigenvalues, mut eigenvectors) = hermitian_eigensystem(sum)?;
    let ground_vector = eigenvectors.swap_remove(0);
    Ok(SpectrumResult { eigenvalues, ground_vector })
}

/// Like [`exact_spectrum`] but keeps every eigenvector, for propagator-based
/// routines that need the full resolution of the identity.
pub fn spectral_decomposition(sum: &PauliSum) -> Result<SpectralDecomposition> {
    let (eigenvalues, eigenvectors) = hermitian_eigensystem(sum)?;
    Ok(SpectralDecomposition { eigenvalues, eigenvectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn chain(j: f64, u: f64, b: f64, n: usize) -> PauliSum {
        build_heisenberg(&HeisenbergParams { j, u, b, n_sites: n, topology: Topology::OpenChain })
            .unwrap()
    }

    #[test]
    fn chain_term_count() {
        // 3 bonds x 3 strings + 4 field strings
        assert_eq!(chain(1.0, 1.0, 1.0, 4).len(), 13);
        let ring = build_heisenberg(&HeisenbergParams {
            j: 1.0,
            u: 1.0,
            b: 1.0,
            n_sites: 4,
            topology: Topology::Ring,
        })
        .unwrap();
        assert_eq!(ring.len(), 16);
    }

    #[test]
    fn two_site_ring_equals_chain() {
        let mk = |t| build_heisenberg(&HeisenbergParams { j: 1.0, u: 0.5, b: 0.0, n_sites: 2, topology: t }).unwrap();
        assert_eq!(mk(Topology::Ring), mk(Topology::OpenChain));
    }

    #[test]
    fn field_only_matrix_is_diagonal_magnetization() {
        let m = dense_matrix(&chain(0.0, 0.0, 1.0, 2));
        let diag: Vec<f64> = (0..4).map(|i| m[(i, i)].re).collect();
        assert_eq!(diag, vec![2.0, 0.0, 0.0, -2.0]);
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(m[(i, j)], Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn two_site_exchange_spectrum() {
        // XX + YY + ZZ: singlet at -3, triplet at +1
        let spec = exact_spectrum(&chain(1.0, 1.0, 0.0, 2)).unwrap();
        let want = [-3.0, 1.0, 1.0, 1.0];
        for (got, want) in spec.eigenvalues.iter().zip(want) {
            assert_abs_diff_eq!(got, &want, epsilon = 1e-12);
        }
        // field splits the triplet but leaves the singlet alone
        let spec = exact_spectrum(&chain(1.0, 1.0, 0.5, 2)).unwrap();
        let want = [-3.0, 0.0, 1.0, 2.0];
        for (got, want) in spec.eigenvalues.iter().zip(want) {
            assert_abs_diff_eq!(got, &want, epsilon = 1e-12);
        }
    }

    #[test]
    fn ground_vector_is_eigenvector() {
        let sum = build_heisenberg(&HeisenbergParams {
            j: 0.7,
            u: 0.3,
            b: 1.0,
            n_sites: 4,
            topology: Topology::Ring,
        })
        .unwrap();
        let spec = exact_spectrum(&sum).unwrap();
        assert!(spec.eigenvalues.windows(2).all(|w| w[0] <= w[1] + 1e-12));
        let m = dense_matrix(&sum);
        let v = nalgebra::DVector::from_vec(spec.ground_vector.clone());
        let hv = &m * &v;
        let residual = (&hv - &v * Complex64::new(spec.eigenvalues[0], 0.0)).norm();
        assert!(residual < 1e-9, "residual {residual}");
        assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn magnetization_spectrum() {
        let spec = exact_spectrum(&build_magnetization(2).unwrap()).unwrap();
        assert_eq!(spec.eigenvalues, vec![-2.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let mut sum = PauliSum::new(2);
        sum.add_term(PauliString::from_literal("XY").unwrap(), Complex64::new(0.0, 1.0)).unwrap();
        assert!(matches!(exact_spectrum(&sum), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn ansatz_shape() {
        let c = build_ansatz(-2.0, 1.0);
        assert_eq!(c.n_qubits(), 4);
        assert_eq!(c.len(), 8);
        assert!(matches!(c.gates()[2], Gate::Cz(0, 1)));
        assert!(matches!(c.gates()[5], Gate::Ry { qubit: 0, .. }));
    }
}
