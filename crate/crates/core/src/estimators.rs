//! Ground-energy estimators driven by Hamiltonian moments: generalized-
//! eigenvalue extraction from Krylov overlap matrices, moment-tridiagonal
//! recursion coefficients, the connected-moment expansion in matrix and
//! nested form, a closed-form infimum bound, root-finding on the moment
//! polynomial, imaginary-time series evolution, and real-time propagation
//! inside the moment-spanned subspace.
//!
//! Every routine that mixes moment orders first rescales by sigma = sqrt(m_2)
//! so intermediate matrices stay O(1) instead of spanning ~16 decades.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::models::spectral_decomposition;
use crate::moments::{connected_moments, contract_expectations, MomentTable, PowerBasis};
use crate::pauli::{sum_mul, PauliSum};
use crate::simulator::{apply, StateVector};

/// Default relative eigenvalue threshold below which Krylov overlap
/// directions are dropped as numerically dependent.
pub const DEFAULT_KRYLOV_DROP: f64 = 1e-10;

/// Relative floor on the scaled third connected moment below which the
/// connected-moment expansion divides by noise.
pub const CMX_SINGULAR_TOLERANCE: f64 = 1e-12;

/// Floor on the imaginary-time normalization <T T>.
pub const ITE_DENOMINATOR_TOLERANCE: f64 = 1e-12;

/// Agreement demanded between the closed-form infimum and its direct
/// one-dimensional minimization.
pub const INFIMUM_CROSSCHECK_TOLERANCE: f64 = 1e-8;

fn golden_min<F: Fn(f64) -> f64>(mut a: f64, mut b: f64, tol: f64, f: F) -> (f64, f64) {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

fn sorted(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    values
}

/// Raw (unscaled) Krylov overlap matrices L_ij = m_{i+j} and
/// R_ij = m_{i+j+1}, i, j = 0..=r.
#[derive(Clone, Debug)]
pub struct KrylovMatrices {
    pub l: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

pub fn krylov_matrices(table: &MomentTable, r: usize) -> Result<KrylovMatrices> {
    table.require(2 * r + 1)?;
    let dim = r + 1;
    Ok(KrylovMatrices {
        l: DMatrix::from_fn(dim, dim, |i, j| table.value(i + j)),
        r: DMatrix::from_fn(dim, dim, |i, j| table.value(i + j + 1)),
    })
}

/// Orthonormalized moment subspace: sigma-scaled overlap matrices are
/// whitened through the eigendecomposition of the Gram matrix, keeping the
/// directions whose Gram eigenvalue clears `drop` times the largest.
struct KrylovSpace {
    sigma: f64,
    /// Whitening map: columns span the kept subspace, U = V s^{-1/2}.
    u: DMatrix<f64>,
    /// Kept Gram eigenvalues, aligned with the columns of `u`.
    s: Vec<f64>,
    /// Scaled Hamiltonian in the whitened basis, symmetric kept x kept.
    reduced: DMatrix<f64>,
}

fn krylov_space(table: &MomentTable, r: usize, drop: f64) -> Result<KrylovSpace> {
    assert!(r >= 1, "r = 0 has no subspace to build");
    table.require(2 * r + 1)?;
    let m2 = table.value(2);
    if !(m2 > 0.0) || !m2.is_finite() {
        return Err(Error::DegenerateSubspace);
    }
    let sigma = m2.sqrt();
    let dim = r + 1;
    let mu = |n: usize| table.value(n) / sigma.powi(n as i32);
    let gram = DMatrix::from_fn(dim, dim, |i, j| mu(i + j));
    let shifted = DMatrix::from_fn(dim, dim, |i, j| mu(i + j + 1));
    let eig = gram.symmetric_eigen();
    let s_max = eig.eigenvalues.max();
    if !(s_max > 0.0) {
        return Err(Error::DegenerateSubspace);
    }
    let kept: Vec<usize> = (0..dim).filter(|&i| eig.eigenvalues[i] > drop * s_max).collect();
    if kept.is_empty() {
        return Err(Error::DegenerateSubspace);
    }
    let mut u = DMatrix::zeros(dim, kept.len());
    let mut s = Vec::with_capacity(kept.len());
    for (col, &i) in kept.iter().enumerate() {
        let value = eig.eigenvalues[i];
        s.push(value);
        let scale = 1.0 / value.sqrt();
        for row in 0..dim {
            u[(row, col)] = eig.eigenvectors[(row, i)] * scale;
        }
    }
    let raw = u.transpose() * &shifted * &u;
    let reduced = (&raw + &raw.transpose()) * 0.5;
    Ok(KrylovSpace { sigma, u, s, reduced })
}

/// Eigenvalues (ascending) of the Hamiltonian restricted to the span of
/// H^0..H^r applied to the state, from moments alone, with the default
/// dependence threshold.
pub fn krylov_generalized_eig(table: &MomentTable, r: usize) -> Result<Vec<f64>> {
    krylov_generalized_eig_with_drop(table, r, DEFAULT_KRYLOV_DROP)
}

/// Same with an explicit dependence threshold; larger values trade subspace
/// dimension for robustness against noisy moments.
pub fn krylov_generalized_eig_with_drop(
    table: &MomentTable,
    r: usize,
    drop: f64,
) -> Result<Vec<f64>> {
    if r == 0 {
        table.require(1)?;
        return Ok(vec![table.value(1)]);
    }
    let space = krylov_space(table, r, drop)?;
    let eig = space.reduced.symmetric_eigen();
    Ok(sorted(eig.eigenvalues.iter().map(|v| v * space.sigma).collect()))
}

/// Tridiagonal recursion coefficients extracted from moments.
#[derive(Clone, Debug)]
pub struct LanczosCoefficients {
    /// Diagonal entries alpha_1..alpha_k.
    pub alphas: Vec<f64>,
    /// Off-diagonal entries beta_1..beta_{k-1}.
    pub betas: Vec<f64>,
}

impl LanczosCoefficients {
    pub fn dimension(&self) -> usize {
        self.alphas.len()
    }
}

/// Tridiagonalize the moment subspace by an incremental Cholesky of the
/// Gram matrix, truncating at the first non-positive pivot (the basis stops
/// being independent there), then T = C^{-1} R C^{-T}.
pub fn lanczos_coefficients(table: &MomentTable, depth: usize) -> Result<LanczosCoefficients> {
    if depth == 0 {
        return Err(Error::invalid("depth", "must be at least 1"));
    }
    if depth == 1 {
        table.require(1)?;
        return Ok(LanczosCoefficients { alphas: vec![table.value(1)], betas: vec![] });
    }
    table.require(2 * depth - 1)?;
    let m2 = table.value(2);
    if !(m2 > 0.0) {
        return Err(Error::DegenerateSubspace);
    }
    let sigma = m2.sqrt();
    let mu = |n: usize| table.value(n) / sigma.powi(n as i32);
    let gram = DMatrix::from_fn(depth, depth, |i, j| mu(i + j));
    let shifted = DMatrix::from_fn(depth, depth, |i, j| mu(i + j + 1));
    let mut chol = DMatrix::zeros(depth, depth);
    let mut keff = depth;
    for k in 0..depth {
        let mut pivot = gram[(k, k)];
        for j in 0..k {
            pivot -= chol[(k, j)] * chol[(k, j)];
        }
        if pivot <= 1e-12 * gram[(k, k)].abs().max(1.0) {
            keff = k;
            break;
        }
        chol[(k, k)] = pivot.sqrt();
        for i in k + 1..depth {
            let mut value = gram[(i, k)];
            for j in 0..k {
                value -= chol[(i, j)] * chol[(k, j)];
            }
            chol[(i, k)] = value / chol[(k, k)];
        }
    }
    if keff == 0 {
        return Err(Error::DegenerateSubspace);
    }
    let c_sub = chol.view((0, 0), (keff, keff)).into_owned();
    let r_sub = shifted.view((0, 0), (keff, keff)).into_owned();
    let y = c_sub
        .solve_lower_triangular(&r_sub)
        .ok_or(Error::DegenerateSubspace)?;
    let t_transposed = c_sub
        .solve_lower_triangular(&y.transpose())
        .ok_or(Error::DegenerateSubspace)?;
    let t = (&t_transposed + &t_transposed.transpose()) * 0.5;
    let alphas = (0..keff).map(|i| t[(i, i)] * sigma).collect();
    let betas = (0..keff.saturating_sub(1)).map(|i| t[(i, i + 1)] * sigma).collect();
    Ok(LanczosCoefficients { alphas, betas })
}

/// Eigenvalues (ascending) of the tridiagonal matrix the coefficients
/// describe; equals the Krylov spectrum when no truncation occurred.
pub fn lanczos_tridiagonal_spectrum(coefficients: &LanczosCoefficients) -> Vec<f64> {
    let k = coefficients.dimension();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = coefficients.alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = coefficients.betas[i];
            t[(i + 1, i)] = coefficients.betas[i];
        }
    }
    sorted(t.symmetric_eigen().eigenvalues.iter().copied().collect())
}

/// Closed-form infimum bound with its direct-minimization cross-check.
#[derive(Clone, Debug)]
pub struct InfimumEstimate {
    /// Closed-form bound.
    pub energy: f64,
    /// Minimizing expansion parameter found numerically.
    pub z_opt: f64,
    /// Energy at `z_opt`; agrees with `energy` to within
    /// [`INFIMUM_CROSSCHECK_TOLERANCE`] or the estimate errors out.
    pub numeric_energy: f64,
}

/// Infimum bound from connected moments c_1..c_4 (slice starts at c_1):
/// E = c_1 - (c_2^2/(c_3^2 - c_2 c_4)) (sqrt(3 c_3^2 - 2 c_2 c_4) - c_3),
/// valid when c_3^2 > c_2 c_4 and the radicand is nonnegative. The same
/// bound is recomputed as a golden-section minimum over the expansion
/// parameter and the two must agree.
pub fn infimum_estimate(connected: &[f64]) -> Result<InfimumEstimate> {
    if connected.len() < 4 {
        return Err(Error::InsufficientOrder { have: connected.len(), need: 4 });
    }
    let (c1, c2, c3, c4) = (connected[0], connected[1], connected[2], connected[3]);
    if c2.abs() <= 1e-12 {
        // zero variance: the state is an eigenstate and c_1 is exact
        return Ok(InfimumEstimate { energy: c1, z_opt: 0.0, numeric_energy: c1 });
    }
    if c2 < 0.0 {
        return Err(Error::invalid("connected moments", format!("variance c_2 = {c2} < 0")));
    }
    let den = c3 * c3 - c2 * c4;
    if den <= 0.0 {
        return Err(Error::InfimumDomain { radicand: den });
    }
    let radicand = 3.0 * c3 * c3 - 2.0 * c2 * c4;
    if radicand < 0.0 {
        return Err(Error::InfimumDomain { radicand });
    }
    let energy = c1 - (c2 * c2 / den) * (radicand.sqrt() - c3);
    let z_max = 2.0 * c2.powi(3) / den;
    let objective = |z: f64| {
        let alpha = c1 + z * c3 / c2;
        let beta_sq = z * c2 + z * z * (c2 * c4 - c3 * c3) / (2.0 * c2 * c2);
        alpha - 2.0 * beta_sq.max(0.0).sqrt()
    };
    let (z_opt, at_opt) = golden_min(z_max * 1e-12, z_max, z_max * 1e-12, objective);
    let numeric_energy = at_opt.min(objective(z_max));
    if (energy - numeric_energy).abs() > INFIMUM_CROSSCHECK_TOLERANCE * energy.abs().max(1.0) {
        return Err(Error::invalid(
            "infimum",
            format!("closed form {energy} disagrees with minimization {numeric_energy}"),
        ));
    }
    Ok(InfimumEstimate { energy, z_opt, numeric_energy })
}

/// Connected-moment expansion value in both algebraic forms.
#[derive(Clone, Debug)]
pub struct CmxEnergy {
    /// Matrix form c_1 - b^T A^{-1} b; the reported energy.
    pub energy: f64,
    /// Nested-recursion form; identical through order 3, generally different
    /// from order 4 on.
    pub nested_energy: f64,
    pub order: usize,
}

/// Connected-moment expansion at `order` >= 2 from connected moments
/// c_1..c_{2 order - 1} (slice starts at c_1). Both the matrix form
/// (A_ij = c_{i+j+1}, b_i = c_{i+1}) and the nested S-recursion are
/// evaluated; the matrix form is the energy.
pub fn cmx_energy(connected: &[f64], order: usize) -> Result<CmxEnergy> {
    if order < 2 {
        return Err(Error::invalid("order", "expansion starts at order 2"));
    }
    let need = 2 * order - 1;
    if connected.len() < need {
        return Err(Error::InsufficientOrder { have: connected.len(), need });
    }
    let c1 = connected[0];
    let c2 = connected[1];
    if !(c2 > 0.0) {
        return Err(Error::CmxSingular { order });
    }
    let sigma = c2.sqrt();
    // scaled connected moments, 1-indexed: ct(2) = 1
    let ct = |k: usize| connected[k - 1] / sigma.powi(k as i32);
    if ct(3).abs() < CMX_SINGULAR_TOLERANCE {
        return Err(Error::CmxSingular { order });
    }
    // matrix form
    let dim = order - 1;
    let a = DMatrix::from_fn(dim, dim, |i, j| ct(i + j + 3));
    let b = DVector::from_fn(dim, |i, _| ct(i + 2));
    let x = a.full_piv_lu().solve(&b).ok_or(Error::CmxSingular { order })?;
    let energy = c1 - sigma * b.dot(&x);
    // nested recursion: S_{k,1} = c_k, S_{k,i+1} = S_{k,i} S_{k+2,i} - S_{k+1,i}^2
    let top = 2 * order - 1;
    let mut level: Vec<f64> = (0..=top).map(|k| if k >= 2 { ct(k) } else { 0.0 }).collect();
    let mut s2 = vec![0.0; order];
    let mut s3 = vec![0.0; order];
    s2[1] = level[2];
    s3[1] = level[3];
    for i in 2..order {
        let hi = top - 2 * (i - 1);
        let mut next = vec![0.0; hi + 1];
        for k in 2..=hi {
            next[k] = level[k] * level[k + 2] - level[k + 1] * level[k + 1];
        }
        level = next;
        s2[i] = level[2];
        s3[i] = level[3];
    }
    let mut t = 1.0;
    for i in (2..order).rev() {
        let denom = s2[i - 1] * s2[i - 1] * s3[i];
        if denom == 0.0 {
            return Err(Error::CmxSingular { order });
        }
        t = 1.0 + s2[i] * s2[i] / denom * t;
    }
    let nested_energy = c1 - sigma * (s2[1] * s2[1] / s3[1]) * t;
    // the two forms are the same algebraic object through order 3; beyond
    // that the nested recursion resums differently and they part ways
    debug_assert!(
        order > 3 || (energy - nested_energy).abs() <= 1e-8 * energy.abs().max(1.0),
        "matrix {energy} vs nested {nested_energy} at order {order}"
    );
    Ok(CmxEnergy { energy, nested_energy, order })
}

/// Roots of the degree-K moment polynomial; the smallest is the ground
/// estimate.
#[derive(Clone, Debug)]
pub struct PdsEnergy {
    pub energy: f64,
    /// All real roots, ascending.
    pub roots: Vec<f64>,
    pub order: usize,
}

/// Degree-K polynomial whose roots approximate eigenvalues: solve
/// M X = -Y with M_ij = mu_{2K-i-j}, Y_i = mu_{2K-i} (1-based, scaled),
/// then take companion-matrix roots of a^K + sum X_i a^{K-i}. A singular
/// system is retried once with a tiny ridge before giving up. Roots with a
/// relative imaginary part above 1e-8 are discarded; an all-complex root
/// set is an error.
pub fn pds_energy(table: &MomentTable, k: usize) -> Result<PdsEnergy> {
    if k == 0 {
        return Err(Error::invalid("order", "polynomial degree must be at least 1"));
    }
    table.require(2 * k - 1)?;
    if k == 1 {
        let m1 = table.value(1);
        return Ok(PdsEnergy { energy: m1, roots: vec![m1], order: 1 });
    }
    let m2 = table.value(2);
    if !(m2 > 0.0) {
        return Err(Error::PdsDegenerate { k });
    }
    let sigma = m2.sqrt();
    let mu = |n: usize| table.value(n) / sigma.powi(n as i32);
    // 1-based formulas shifted to 0-based storage
    let m = DMatrix::from_fn(k, k, |i, j| mu(2 * k - i - j - 2));
    let y = DVector::from_fn(k, |i, _| -mu(2 * k - i - 1));
    let x = match m.clone().full_piv_lu().solve(&y) {
        Some(x) => x,
        None => {
            let ridge = 1e-12 * m.trace().abs();
            let mut damped = m;
            for i in 0..k {
                damped[(i, i)] += ridge;
            }
            damped
                .full_piv_lu()
                .solve(&y)
                .ok_or(Error::PdsDegenerate { k })?
        }
    };
    let mut companion = DMatrix::zeros(k, k);
    for j in 0..k {
        companion[(0, j)] = -x[j];
    }
    for i in 1..k {
        companion[(i, i - 1)] = 1.0;
    }
    let complex_roots = companion.complex_eigenvalues();
    let mut roots = Vec::with_capacity(k);
    let mut real_roots = Vec::with_capacity(k);
    for z in complex_roots.iter() {
        roots.push(z.re * sigma);
        if z.im.abs() <= 1e-8 {
            real_roots.push(z.re * sigma);
        } else {
            eprintln!(
                "warning: moment polynomial root {} has imaginary part {:.3e} sigma (noisy moments?)",
                z.re * sigma,
                z.im
            );
        }
    }
    if real_roots.is_empty() {
        return Err(Error::PdsDegenerate { k });
    }
    let roots = sorted(roots);
    let energy = real_roots.into_iter().fold(f64::INFINITY, f64::min);
    Ok(PdsEnergy { energy, roots, order: k })
}

fn half_propagator_coefficients(tau: f64, order: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(order + 1);
    c.push(1.0);
    for k in 1..=order {
        let prev = c[k - 1];
        c.push(prev * (-tau) / k as f64);
    }
    c
}

/// Imaginary-time energy from moments: with c_k = (-tau)^k/k! per
/// half-propagator and d their self-convolution,
/// E(tau) = sum d_k m_{k+1} / sum d_k m_k. Needs moments up to
/// 2 order + 1.
pub fn ite_energy(table: &MomentTable, tau: f64, order: usize) -> Result<f64> {
    if tau < 0.0 {
        return Err(Error::invalid("tau", "imaginary time must be nonnegative"));
    }
    table.require(2 * order + 1)?;
    let c = half_propagator_coefficients(tau, order);
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for k in 0..=2 * order {
        let lo = k.saturating_sub(order);
        let hi = k.min(order);
        let mut d_k = 0.0;
        for i in lo..=hi {
            d_k += c[i] * c[k - i];
        }
        numerator += d_k * table.value(k + 1);
        denominator += d_k * table.value(k);
    }
    if denominator <= ITE_DENOMINATOR_TOLERANCE {
        return Err(Error::IteNormalization { denom: denominator });
    }
    Ok(numerator / denominator)
}

/// Energy and variance of the exactly propagated imaginary-time state
/// e^{-tau H/2}|phi>, by dense diagonalization. On this functional
/// dE/dtau = -variance identically.
#[derive(Clone, Copy, Debug)]
pub struct IteExactPoint {
    pub energy: f64,
    pub variance: f64,
}

pub fn ite_exact(h: &PauliSum, state: &StateVector, tau: f64) -> Result<IteExactPoint> {
    if tau < 0.0 {
        return Err(Error::invalid("tau", "imaginary time must be nonnegative"));
    }
    let decomp = spectral_decomposition(h)?;
    let lambda0 = decomp.eigenvalues[0];
    let mut z = 0.0;
    let mut first = 0.0;
    let mut second = 0.0;
    for (lambda, vector) in decomp.eigenvalues.iter().zip(&decomp.eigenvectors) {
        let overlap: Complex64 = vector
            .iter()
            .zip(state.amplitudes())
            .map(|(v, a)| v.conj() * a)
            .sum();
        // shift by the ground energy so the weights cannot underflow together
        let g = overlap.norm_sqr() * (-tau * (lambda - lambda0)).exp();
        z += g;
        first += g * lambda;
        second += g * lambda * lambda;
    }
    if z <= ITE_DENOMINATOR_TOLERANCE {
        return Err(Error::IteNormalization { denom: z });
    }
    let energy = first / z;
    Ok(IteExactPoint { energy, variance: second / z - energy * energy })
}

/// Imaginary-time expectation of an observable under the truncated series
/// propagator, exactly on the statevector: with T = sum_k c_k H^k,
/// <O>(tau) = <T phi|O|T phi> / <T phi|T phi>.
pub fn ite_expectation_exact(
    h: &PauliSum,
    observable: &PauliSum,
    state: &StateVector,
    tau: f64,
    order: usize,
) -> Result<f64> {
    if tau < 0.0 {
        return Err(Error::invalid("tau", "imaginary time must be nonnegative"));
    }
    let c = half_propagator_coefficients(tau, order);
    let mut krylov_vector = state.clone();
    let mut amplitudes: Vec<Complex64> = state
        .amplitudes()
        .iter()
        .map(|a| a * Complex64::new(c[0], 0.0))
        .collect();
    for coefficient in c.iter().skip(1) {
        krylov_vector = apply(h, &krylov_vector)?;
        for (acc, a) in amplitudes.iter_mut().zip(krylov_vector.amplitudes()) {
            *acc += a * Complex64::new(*coefficient, 0.0);
        }
    }
    let propagated = StateVector::from_amplitudes(state.n_qubits(), amplitudes)?;
    let denominator = propagated.inner(&propagated).re;
    if denominator <= ITE_DENOMINATOR_TOLERANCE {
        return Err(Error::IteNormalization { denom: denominator });
    }
    let numerator = propagated.inner(&apply(observable, &propagated)?).re;
    Ok(numerator / denominator)
}

/// The same truncated-propagator expectation from measured string
/// expectations, through the symbolic products T O T and T T.
pub fn ite_expectation_measured(
    h: &PauliSum,
    observable: &PauliSum,
    tau: f64,
    order: usize,
    expectations: &BTreeMap<crate::pauli::PauliString, f64>,
) -> Result<f64> {
    if tau < 0.0 {
        return Err(Error::invalid("tau", "imaginary time must be nonnegative"));
    }
    let c = half_propagator_coefficients(tau, order);
    let basis = PowerBasis::new(h, order)?;
    let mut t_sum = PauliSum::new(h.n_qubits());
    for (k, coefficient) in c.iter().enumerate() {
        t_sum = t_sum.add(&basis.power(k).scale(Complex64::new(*coefficient, 0.0)))?;
    }
    t_sum.prune_relative(crate::pauli::DEFAULT_DROPOUT);
    let mut denominator_sum = sum_mul(&t_sum, &t_sum)?;
    denominator_sum.prune_relative(crate::pauli::DEFAULT_DROPOUT);
    let mut numerator_sum = sum_mul(&sum_mul(&t_sum, observable)?, &t_sum)?;
    numerator_sum.prune_relative(crate::pauli::DEFAULT_DROPOUT);
    let denominator = contract_expectations(&denominator_sum, expectations)?;
    if denominator <= ITE_DENOMINATOR_TOLERANCE {
        return Err(Error::IteNormalization { denom: denominator });
    }
    Ok(contract_expectations(&numerator_sum, expectations)? / denominator)
}

/// Result of the imaginary-time sweep.
#[derive(Clone, Copy, Debug)]
pub struct TauOptimum {
    pub tau: f64,
    pub energy: f64,
}

/// Minimize the imaginary-time energy over tau in [0, tau_max]. The series
/// denominator collapses at large tau, so a coarse scan first clips the
/// bracket to the healthy prefix, then a golden-section search (tau
/// tolerance 1e-4) refines, and the refined point is compared against both
/// bracket endpoints.
pub fn optimize_tau(table: &MomentTable, order: usize, tau_max: f64) -> Result<TauOptimum> {
    if !(tau_max > 0.0) {
        return Err(Error::invalid("tau_max", "bracket must be positive"));
    }
    table.require(2 * order + 1)?;
    let evaluate = |tau: f64| -> Option<f64> {
        ite_energy(table, tau, order).ok().filter(|e| e.is_finite())
    };
    let scan_points = 100;
    let mut hi = 0.0;
    for i in 1..=scan_points {
        let tau = tau_max * i as f64 / scan_points as f64;
        if evaluate(tau).is_none() {
            break;
        }
        hi = tau;
    }
    let at_zero = table.value(1);
    if hi == 0.0 {
        return Ok(TauOptimum { tau: 0.0, energy: at_zero });
    }
    let objective = |tau: f64| evaluate(tau).unwrap_or(f64::INFINITY);
    let (tau_star, at_star) = golden_min(0.0, hi, 1e-4, objective);
    let at_hi = objective(hi);
    let mut best = TauOptimum { tau: tau_star, energy: at_star };
    if at_zero < best.energy {
        best = TauOptimum { tau: 0.0, energy: at_zero };
    }
    if at_hi < best.energy {
        best = TauOptimum { tau: hi, energy: at_hi };
    }
    Ok(best)
}

/// Real-time evolution inside the moment subspace.
#[derive(Clone, Debug)]
pub struct RteResult {
    /// Sample times 0, dt, .., steps*dt.
    pub times: Vec<f64>,
    /// Power-basis coefficients of the evolving state at each time.
    pub trajectory: Vec<Vec<Complex64>>,
    /// Survival amplitude <psi(0)|psi(t)>.
    pub survival: Vec<Complex64>,
    /// Spectral peaks of the survival signal, ascending, resolved to
    /// 2 pi / (steps * dt).
    pub frequencies: Vec<f64>,
    /// Eigenvalues of the subspace Hamiltonian, for comparison.
    pub krylov_eigenvalues: Vec<f64>,
}

/// Propagate the coefficient vector `c0` (over the basis H^k|phi>,
/// k = 0..=r) under i d/dt = H within the moment subspace, by fourth-order
/// Runge-Kutta, and locate the spectral peaks of the survival amplitude.
/// With r = 0 the dynamics is the exact single phase e^{-i m_1 t}.
pub fn rte_propagate(
    table: &MomentTable,
    r: usize,
    c0: &[f64],
    dt: f64,
    steps: usize,
) -> Result<RteResult> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "step must be positive"));
    }
    if steps < 2 {
        return Err(Error::invalid("steps", "need at least 2 steps"));
    }
    if c0.len() != r + 1 {
        return Err(Error::DimensionMismatch { left: c0.len(), right: r + 1 });
    }
    let times: Vec<f64> = (0..=steps).map(|n| n as f64 * dt).collect();
    if r == 0 {
        table.require(1)?;
        let m1 = table.value(1);
        let weight = c0[0] * c0[0];
        let mut trajectory = Vec::with_capacity(steps + 1);
        let mut survival = Vec::with_capacity(steps + 1);
        for &t in &times {
            let phase = Complex64::from_polar(1.0, -m1 * t);
            trajectory.push(vec![phase * c0[0]]);
            survival.push(phase * weight);
        }
        return Ok(RteResult {
            times,
            trajectory,
            survival,
            frequencies: vec![m1],
            krylov_eigenvalues: vec![m1],
        });
    }
    let space = krylov_space(table, r, DEFAULT_KRYLOV_DROP)?;
    let sigma = space.sigma;
    let krylov_eigenvalues = sorted(
        space
            .reduced
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .map(|v| v * sigma)
            .collect(),
    );
    // initial coefficients in the whitened basis: d0 = diag(s) U^T c~0
    let scaled_c0 = DVector::from_fn(r + 1, |k, _| c0[k] * sigma.powi(k as i32));
    let projected = space.u.transpose() * &scaled_c0;
    let kept = space.s.len();
    let mut d = DVector::from_fn(kept, |i, _| Complex64::new(projected[i] * space.s[i], 0.0));
    let d0 = d.clone();
    // generator -i H in the whitened basis, in unscaled energy units
    let generator = space.reduced.map(|v| Complex64::new(0.0, -v * sigma));
    let back_map = space.u.map(|v| Complex64::new(v, 0.0));
    let unscale = DVector::from_fn(r + 1, |k, _| Complex64::new(sigma.powi(-(k as i32)), 0.0));
    let mut trajectory = Vec::with_capacity(steps + 1);
    let mut survival = Vec::with_capacity(steps + 1);
    let record = |d: &DVector<Complex64>, trajectory: &mut Vec<Vec<Complex64>>, survival: &mut Vec<Complex64>| {
        let powers = &back_map * d;
        trajectory.push((0..=r).map(|k| powers[k] * unscale[k]).collect());
        survival.push(d0.dotc(d));
    };
    record(&d, &mut trajectory, &mut survival);
    let half = Complex64::new(dt / 2.0, 0.0);
    let sixth = Complex64::new(dt / 6.0, 0.0);
    let full = Complex64::new(dt, 0.0);
    let two = Complex64::new(2.0, 0.0);
    for _ in 0..steps {
        let k1 = &generator * &d;
        let k2 = &generator * &(&d + &k1 * half);
        let k3 = &generator * &(&d + &k2 * half);
        let k4 = &generator * &(&d + &k3 * full);
        d += (k1 + k2 * two + k3 * two + k4) * sixth;
        record(&d, &mut trajectory, &mut survival);
    }
    let frequencies = survival_peaks(&survival[..steps], dt, kept);
    Ok(RteResult { times, trajectory, survival, frequencies, krylov_eigenvalues })
}

/// Periodogram peak picking: Hann-windowed DFT of the survival signal, the
/// `expected` strongest local maxima, mapped to energies in
/// (-pi/dt, pi/dt].
fn survival_peaks(signal: &[Complex64], dt: f64, expected: usize) -> Vec<f64> {
    let n = signal.len();
    let mut power = Vec::with_capacity(n);
    for j in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, value) in signal.iter().enumerate() {
            let window = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * idx as f64 / n as f64).cos();
            let angle = 2.0 * std::f64::consts::PI * (j * idx % n) as f64 / n as f64;
            acc += value * window * Complex64::from_polar(1.0, angle);
        }
        power.push(acc.norm_sqr());
    }
    let mut peaks: Vec<(f64, usize)> = (0..n)
        .filter(|&j| {
            let prev = power[(j + n - 1) % n];
            let next = power[(j + 1) % n];
            power[j] > prev && power[j] >= next
        })
        .map(|j| (power[j], j))
        .collect();
    peaks.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    peaks.truncate(expected);
    let mut frequencies: Vec<f64> = peaks
        .into_iter()
        .map(|(_, j)| {
            let mut omega = 2.0 * std::f64::consts::PI * j as f64 / (n as f64 * dt);
            if omega > std::f64::consts::PI / dt {
                omega -= 2.0 * std::f64::consts::PI / dt;
            }
            omega
        })
        .collect();
    frequencies.sort_by(|a, b| a.partial_cmp(b).unwrap());
    frequencies
}

/// Estimator selection for the driver-level API.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Krylov,
    Lanczos,
    Cmx,
    Pds,
    Ite,
    Infimum,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Krylov => "krylov",
            Method::Lanczos => "lanczos",
            Method::Cmx => "cmx",
            Method::Pds => "pds",
            Method::Ite => "ite",
            Method::Infimum => "infimum",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        match text {
            "krylov" => Ok(Method::Krylov),
            "lanczos" => Ok(Method::Lanczos),
            "cmx" => Ok(Method::Cmx),
            "pds" => Ok(Method::Pds),
            "ite" => Ok(Method::Ite),
            "infimum" => Ok(Method::Infimum),
            other => Err(Error::invalid("method", format!("unknown method '{other}'"))),
        }
    }
}

/// Knobs shared by the estimator dispatch.
#[derive(Clone, Copy, Debug)]
pub struct EstimateOptions {
    /// Subspace size, expansion order, polynomial degree, or series order,
    /// depending on the method.
    pub order: usize,
    /// Fixed imaginary time; None lets the sweep pick it.
    pub tau: Option<f64>,
    /// Sweep bracket for the imaginary time when `tau` is None.
    pub tau_max: f64,
    /// Dependence threshold for subspace methods.
    pub krylov_drop: f64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions { order: 3, tau: None, tau_max: 10.0, krylov_drop: DEFAULT_KRYLOV_DROP }
    }
}

/// Uniform estimator output for drivers.
#[derive(Clone, Debug)]
pub struct EstimatorResult {
    pub method: &'static str,
    pub energy: f64,
    /// Subspace eigenvalues or polynomial roots where the method has them.
    pub spectrum: Vec<f64>,
    pub tau: Option<f64>,
    pub alphas: Option<Vec<f64>>,
    pub betas: Option<Vec<f64>>,
    /// Named scalar extras (nested-form value, kept dimension, ...).
    pub diagnostics: Vec<(String, f64)>,
}

/// Run one estimator on a moment table.
pub fn estimate_energy(
    method: Method,
    table: &MomentTable,
    options: &EstimateOptions,
) -> Result<EstimatorResult> {
    let mut result = EstimatorResult {
        method: method.name(),
        energy: f64::NAN,
        spectrum: vec![],
        tau: None,
        alphas: None,
        betas: None,
        diagnostics: vec![],
    };
    match method {
        Method::Krylov => {
            let eigenvalues =
                krylov_generalized_eig_with_drop(table, options.order, options.krylov_drop)?;
            result.energy = eigenvalues[0];
            result.diagnostics.push(("kept".into(), eigenvalues.len() as f64));
            result.spectrum = eigenvalues;
        }
        Method::Lanczos => {
            let coefficients = lanczos_coefficients(table, options.order)?;
            let spectrum = lanczos_tridiagonal_spectrum(&coefficients);
            result.energy = spectrum[0];
            result.spectrum = spectrum;
            result.diagnostics.push(("dimension".into(), coefficients.dimension() as f64));
            result.alphas = Some(coefficients.alphas);
            result.betas = Some(coefficients.betas);
        }
        Method::Cmx => {
            let connected = connected_moments(table);
            let cmx = cmx_energy(&connected, options.order)?;
            result.energy = cmx.energy;
            result.diagnostics.push(("nested".into(), cmx.nested_energy));
        }
        Method::Pds => {
            let pds = pds_energy(table, options.order)?;
            result.energy = pds.energy;
            result.spectrum = pds.roots;
        }
        Method::Ite => match options.tau {
            Some(tau) => {
                result.energy = ite_energy(table, tau, options.order)?;
                result.tau = Some(tau);
            }
            None => {
                let optimum = optimize_tau(table, options.order, options.tau_max)?;
                result.energy = optimum.energy;
                result.tau = Some(optimum.tau);
            }
        },
        Method::Infimum => {
            let connected = connected_moments(table);
            let infimum = infimum_estimate(&connected)?;
            result.energy = infimum.energy;
            result.diagnostics.push(("z_opt".into(), infimum.z_opt));
            result.diagnostics.push(("numeric".into(), infimum.numeric_energy));
        }
    }
    Ok(result)
}
