//! Hamiltonian moments <H^n> from three routes: exact statevector
//! contraction, measured string expectations combined through symbolic
//! powers, and central finite differences of the time propagator. Also the
//! connected-moment transform and the power-to-Chebyshev change of basis.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grouping::GroupingPlan;
use crate::models::spectral_decomposition;
use crate::pauli::{sum_mul, PauliString, PauliSum};
use crate::simulator::{
    apply, basis_measures, calibrate_counts, expectations_from_counts, mix_seed, sample_counts,
    CalibrationMatrix, ReadoutNoiseModel, StateVector,
};

/// Hard ceiling on the moment order a table may hold.
pub const MOMENT_ORDER_CAP: usize = 40;

/// Order beyond which a construction warning is emitted: double precision
/// has little headroom left once powers span ~16 decades.
pub const MOMENT_ORDER_SOFT_LIMIT: usize = 20;

/// Relative coefficient threshold below which a string missing from a
/// measured-expectation table is ignorable rather than a coverage failure.
pub const COVERAGE_RELATIVE_TOLERANCE: f64 = 1e-9;

/// How a moment table was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Exact,
    PauliMeasured,
    Cfd,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Exact => "exact",
            Provenance::PauliMeasured => "pauli-measured",
            Provenance::Cfd => "cfd",
        })
    }
}

/// Moments m_0..m_N with their origin. m_0 must be 1 to within 1e-10;
/// tables above order [`MOMENT_ORDER_SOFT_LIMIT`] warn, above
/// [`MOMENT_ORDER_CAP`] they are rejected.
#[derive(Clone, Debug)]
pub struct MomentTable {
    values: Vec<f64>,
    provenance: Provenance,
}

impl MomentTable {
    pub fn new(values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("moments", "empty table"));
        }
        let max_order = values.len() - 1;
        if max_order > MOMENT_ORDER_CAP {
            return Err(Error::invalid(
                "moments",
                format!("order {max_order} beyond cap {MOMENT_ORDER_CAP}"),
            ));
        }
        if max_order > MOMENT_ORDER_SOFT_LIMIT {
            eprintln!(
                "warning: moment order {max_order} beyond {MOMENT_ORDER_SOFT_LIMIT}; \
                 double precision is running out of headroom"
            );
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("moments", "non-finite entry"));
        }
        if (values[0] - 1.0).abs() > 1e-10 {
            return Err(Error::invalid("moments", format!("m_0 = {} is not 1", values[0])));
        }
        if provenance == Provenance::Exact {
            // exact even moments are vector norms; a negative one is a bug
            for (n, v) in values.iter().enumerate() {
                if n % 2 == 0 && *v < -1e-9 {
                    return Err(Error::invalid("moments", format!("exact m_{n} = {v} < 0")));
                }
            }
        }
        Ok(MomentTable { values, provenance })
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn max_order(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// m_n; panics above [`max_order`](MomentTable::max_order).
    pub fn value(&self, order: usize) -> f64 {
        self.values[order]
    }

    /// Error unless the table reaches `order`.
    pub fn require(&self, order: usize) -> Result<()> {
        if self.max_order() < order {
            Err(Error::InsufficientOrder { have: self.max_order(), need: order })
        } else {
            Ok(())
        }
    }

    /// `order,value,provenance` rows, 12 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("order,value,provenance\n");
        for (n, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{n},{v:.11e},{}\n", self.provenance));
        }
        out
    }
}

/// Exact binomial coefficient as f64 (exact through the orders allowed by
/// [`MOMENT_ORDER_CAP`]).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as f64
}

/// Symmetrized exact moments: with v_k = H^k |phi>, m_2k = <v_k|v_k> and
/// m_2k+1 = Re<v_k|v_k+1>, keeping even moments nonnegative by construction.
pub fn moments_exact(h: &PauliSum, state: &StateVector, max_order: usize) -> Result<MomentTable> {
    if !h.is_hermitian(1e-10) {
        return Err(Error::NotHermitian("moments of a non-Hermitian sum".into()));
    }
    let mut values = Vec::with_capacity(max_order + 1);
    let mut lower = state.clone();
    values.push(lower.inner(&lower).re);
    let mut order = 1;
    while order <= max_order {
        let upper = apply(h, &lower)?;
        // odd moment bridging v_k and v_{k+1}
        values.push(lower.inner(&upper).re);
        order += 1;
        if order <= max_order {
            values.push(upper.inner(&upper).re);
            order += 1;
        }
        lower = upper;
    }
    MomentTable::new(values, Provenance::Exact)
}

/// Repeated symbolic powers H^0..H^max with a relative prune per power, so
/// coefficients that cancel exactly do not survive as rounding residue.
pub struct PowerBasis {
    powers: Vec<PauliSum>,
}

impl PowerBasis {
    pub fn new(h: &PauliSum, max_order: usize) -> Result<Self> {
        let mut powers = Vec::with_capacity(max_order + 1);
        powers.push(PauliSum::identity(h.n_qubits()));
        for k in 1..=max_order {
            let mut next = sum_mul(&powers[k - 1], h)?;
            next.prune_relative(crate::pauli::DEFAULT_DROPOUT);
            powers.push(next);
        }
        Ok(PowerBasis { powers })
    }

    pub fn max_order(&self) -> usize {
        self.powers.len() - 1
    }

    pub fn power(&self, k: usize) -> &PauliSum {
        &self.powers[k]
    }

    /// Union of strings across all powers: what a measurement plan must
    /// cover to evaluate every moment in the basis.
    pub fn strings(&self) -> Vec<PauliString> {
        let set: std::collections::BTreeSet<PauliString> =
            self.powers.iter().flat_map(|p| p.strings().copied()).collect();
        set.into_iter().collect()
    }

    /// m_k from measured expectations.
    pub fn contract(&self, order: usize, expectations: &BTreeMap<PauliString, f64>) -> Result<f64> {
        contract_expectations(&self.powers[order], expectations)
    }
}

/// Re<A> from per-string expectations: sum of Re(c_P) <P>. A string absent
/// from the table is a coverage failure when its real coefficient is above
/// [`COVERAGE_RELATIVE_TOLERANCE`] of the sum's largest coefficient, and
/// ignorable rounding debris below it.
pub fn contract_expectations(
    sum: &PauliSum,
    expectations: &BTreeMap<PauliString, f64>,
) -> Result<f64> {
    let cut = COVERAGE_RELATIVE_TOLERANCE * sum.max_abs_coefficient();
    let mut value = 0.0;
    let mut missing = 0usize;
    let mut first: Option<PauliString> = None;
    for (p, c) in sum.terms() {
        match expectations.get(p) {
            Some(e) => value += c.re * e,
            None => {
                if c.re.abs() > cut {
                    missing += 1;
                    first.get_or_insert(*p);
                }
            }
        }
    }
    if missing > 0 {
        return Err(Error::Coverage {
            count: missing,
            first: first.map(|p| p.literal()).unwrap_or_default(),
        });
    }
    Ok(value)
}

/// Moments from measured string expectations through symbolic powers.
pub fn moments_from_expectations(
    h: &PauliSum,
    expectations: &BTreeMap<PauliString, f64>,
    max_order: usize,
) -> Result<MomentTable> {
    let basis = PowerBasis::new(h, max_order)?;
    let mut values = Vec::with_capacity(max_order + 1);
    for k in 0..=max_order {
        values.push(basis.contract(k, expectations)?);
    }
    MomentTable::new(values, Provenance::PauliMeasured)
}

/// Measured string expectations and how redundantly they were read out.
#[derive(Clone, Debug)]
pub struct MeasuredExpectations {
    pub values: BTreeMap<PauliString, f64>,
    /// Mean number of measurement bases contributing to each string.
    pub mean_multiplicity: f64,
}

/// Measure every string of the plan: one histogram per group (seeded
/// independently per group from one master seed), optional readout noise and
/// calibration, then each string's estimate is averaged over *all* group
/// bases that happen to diagonalize it, not only its home group.
pub fn measured_expectations(
    plan: &GroupingPlan,
    state: &StateVector,
    shots: u64,
    noise: Option<&ReadoutNoiseModel>,
    calibration: Option<&CalibrationMatrix>,
    seed: u64,
) -> Result<MeasuredExpectations> {
    if plan.n_qubits() != state.n_qubits() {
        return Err(Error::DimensionMismatch { left: plan.n_qubits(), right: state.n_qubits() });
    }
    let strings: Vec<PauliString> = {
        let set: std::collections::BTreeSet<PauliString> =
            plan.groups().iter().flatten().copied().collect();
        set.into_iter().collect()
    };
    let mut sums: BTreeMap<PauliString, (f64, u32)> =
        strings.iter().map(|p| (*p, (0.0, 0))).collect();
    for (g, rotation) in plan.rotations().iter().enumerate() {
        let counts = sample_counts(state, rotation, shots, noise, mix_seed(seed, g as u64))?;
        let counts = match calibration {
            Some(cal) => calibrate_counts(cal, &counts)?.counts,
            None => counts,
        };
        let basis = &plan.bases()[g];
        let compatible: Vec<PauliString> = strings
            .iter()
            .copied()
            .filter(|p| basis_measures(basis, p))
            .collect();
        let estimates = expectations_from_counts(&counts, &compatible)?;
        for (p, e) in compatible.iter().zip(estimates) {
            let entry = sums.get_mut(p).expect("string sets agree");
            entry.0 += e;
            entry.1 += 1;
        }
    }
    let mut values = BTreeMap::new();
    let mut total_multiplicity = 0u32;
    for (p, (sum, count)) in sums {
        debug_assert!(count > 0, "every string is measured by its home group");
        values.insert(p, sum / count as f64);
        total_multiplicity += count;
    }
    let mean_multiplicity = total_multiplicity as f64 / values.len() as f64;
    Ok(MeasuredExpectations { values, mean_multiplicity })
}

/// Symmetrized generalized moment Re<phi| H^a O H^b |phi> by exact
/// statevector contraction. The real part is the (a,b)-(b,a) Hermitian
/// average, which is what real-coefficient functionals consume.
pub fn generalized_moment(
    h: &PauliSum,
    observable: &PauliSum,
    a: usize,
    b: usize,
    state: &StateVector,
) -> Result<f64> {
    let mut va = state.clone();
    for _ in 0..a {
        va = apply(h, &va)?;
    }
    let mut vb = state.clone();
    for _ in 0..b {
        vb = apply(h, &vb)?;
    }
    Ok(va.inner(&apply(observable, &vb)?).re)
}

/// The same generalized moment from measured expectations, through the
/// symbolic product H^a O H^b.
pub fn generalized_moment_from_expectations(
    h: &PauliSum,
    observable: &PauliSum,
    a: usize,
    b: usize,
    expectations: &BTreeMap<PauliString, f64>,
) -> Result<f64> {
    let basis = PowerBasis::new(h, a.max(b))?;
    let mut product = sum_mul(basis.power(a), observable)?;
    product = sum_mul(&product, basis.power(b))?;
    product.prune_relative(crate::pauli::DEFAULT_DROPOUT);
    contract_expectations(&product, expectations)
}

fn propagator_weights(h: &PauliSum, state: &StateVector) -> Result<(Vec<f64>, Vec<f64>)> {
    let decomp = spectral_decomposition(h)?;
    let mut weights = Vec::with_capacity(decomp.eigenvalues.len());
    for vector in &decomp.eigenvectors {
        let overlap: Complex64 = vector
            .iter()
            .zip(state.amplitudes())
            .map(|(v, a)| v.conj() * a)
            .sum();
        weights.push(overlap.norm_sqr());
    }
    Ok((decomp.eigenvalues, weights))
}

/// Moments from central finite differences of the survival amplitude
/// f(t) = <phi|e^{-iHt}|phi>: m_n ~ i^n/dt^n sum_j (-1)^(n-j) C(n,j)
/// f((2j-n) dt/2). Exactly reproduces sum_k w_k (2 sin(lambda_k dt/2)/dt)^n,
/// a second-order-accurate distortion of the true moments.
pub fn moments_via_cfd(
    h: &PauliSum,
    state: &StateVector,
    max_order: usize,
    dt: f64,
) -> Result<MomentTable> {
    if dt <= 0.0 {
        return Err(Error::invalid("dt", "step must be positive"));
    }
    let (eigenvalues, weights) = propagator_weights(h, state)?;
    let f = |t: f64| -> Complex64 {
        eigenvalues
            .iter()
            .zip(&weights)
            .map(|(lambda, w)| Complex64::from_polar(*w, -lambda * t))
            .sum()
    };
    let i_pow = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ];
    let mut values = Vec::with_capacity(max_order + 1);
    for n in 0..=max_order {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..=n {
            let sign = if (n - j) % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binomial(n, j) * f((2.0 * j as f64 - n as f64) * dt / 2.0);
        }
        let value = i_pow[n % 4] * acc / dt.powi(n as i32);
        debug_assert!(value.im.abs() <= 1e-6 * value.re.abs().max(1.0));
        values.push(value.re);
    }
    MomentTable::new(values, Provenance::Cfd)
}

/// Richardson-extrapolated finite-difference moments,
/// (4 m_n(dt/2) - m_n(dt)) / 3, cancelling the leading dt^2 distortion.
pub fn moments_via_cfd_extrapolated(
    h: &PauliSum,
    state: &StateVector,
    max_order: usize,
    dt: f64,
) -> Result<MomentTable> {
    let coarse = moments_via_cfd(h, state, max_order, dt)?;
    let fine = moments_via_cfd(h, state, max_order, dt / 2.0)?;
    let values: Vec<f64> = fine
        .values()
        .iter()
        .zip(coarse.values())
        .map(|(f, c)| (4.0 * f - c) / 3.0)
        .collect();
    MomentTable::new(values, Provenance::Cfd)
}

/// Connected moments c_1..c_N from raw moments via
/// c_n = m_n - sum_{k=1}^{n-1} C(n-1, k-1) c_k m_{n-k}.
pub fn connected_moments(table: &MomentTable) -> Vec<f64> {
    let n_max = table.max_order();
    let mut connected: Vec<f64> = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let mut value = table.value(n);
        for (k, c_k) in connected.iter().enumerate().map(|(i, c)| (i + 1, c)) {
            value -= binomial(n - 1, k - 1) * c_k * table.value(n - k);
        }
        connected.push(value);
    }
    connected
}

/// Coefficients of x^n in the Chebyshev basis: x^n = sum_k C_{n,k} T_k(x).
/// C_{n,k} = 2^{1-n} C(n, (n-k)/2) for k > 0 with n-k even, half that at
/// k = 0, zero otherwise.
pub fn chebyshev_coefficients(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for (k, slot) in out.iter_mut().enumerate() {
        if (n - k) % 2 != 0 {
            continue;
        }
        let b = binomial(n, (n - k) / 2);
        *slot = if k == 0 {
            b * (0.5f64).powi(n as i32)
        } else {
            b * (0.5f64).powi(n as i32) * 2.0
        };
    }
    if n == 0 {
        out[0] = 1.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouping::{greedy_qwc_grouping, OrderingPolicy};
    use crate::models::{build_ansatz, build_heisenberg, build_magnetization, HeisenbergParams, Topology};
    use crate::pauli::basis_closure;
    use crate::simulator::{build_calibration, prepare};
    use approx::assert_abs_diff_eq;

    fn chain_h() -> PauliSum {
        build_heisenberg(&HeisenbergParams {
            j: 1.0,
            u: 1.0,
            b: 1.0,
            n_sites: 4,
            topology: Topology::OpenChain,
        })
        .unwrap()
    }

    fn ring_h() -> PauliSum {
        build_heisenberg(&HeisenbergParams {
            j: 0.5,
            u: 0.5,
            b: 1.0,
            n_sites: 4,
            topology: Topology::Ring,
        })
        .unwrap()
    }

    fn trial() -> StateVector {
        prepare(&build_ansatz(-2.0, 1.0))
    }

    const CHAIN_MOMENTS: [f64; 14] = [
        1.0,
        -2.540302305868,
        17.68500692251,
        -90.82454727125,
        556.8009406185,
        -3263.171255254,
        20054.44006395,
        -122684.7864461,
        762058.2944066,
        -4743433.261889,
        29704676.45763,
        -186501088.4759,
        1174710130.729,
        -7415459725.020,
    ];

    const RING_MOMENTS: [f64; 10] = [
        1.0,
        -2.0,
        7.72159654365,
        -25.96699078633,
        102.7543493199,
        -391.3398157267,
        1560.904807605,
        -6164.908904208,
        24641.81779563,
        -98252.42987766,
    ];

    #[test]
    fn exact_moments_match_reference() {
        let table = moments_exact(&chain_h(), &trial(), 13).unwrap();
        for (n, want) in CHAIN_MOMENTS.iter().enumerate() {
            let got = table.value(n);
            assert!(
                (got - want).abs() <= 1e-9 * want.abs().max(1.0),
                "m_{n}: {got} vs {want}"
            );
        }
        let table = moments_exact(&ring_h(), &trial(), 9).unwrap();
        for (n, want) in RING_MOMENTS.iter().enumerate() {
            let got = table.value(n);
            assert!(
                (got - want).abs() <= 1e-9 * want.abs().max(1.0),
                "ring m_{n}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn measured_route_agrees_with_exact_route() {
        let h = chain_h();
        let state = trial();
        let closure = basis_closure(&h, 8).unwrap();
        let strings: Vec<PauliString> = closure.strings.iter().copied().collect();
        let plan = greedy_qwc_grouping(&strings, OrderingPolicy::WeightDescending).unwrap();
        let measured = measured_expectations(&plan, &state, 0, None, None, 1).unwrap();
        assert!(measured.mean_multiplicity > 1.0);
        let table = moments_from_expectations(&h, &measured.values, 8).unwrap();
        assert_eq!(table.provenance(), Provenance::PauliMeasured);
        for n in 0..=8 {
            let want = CHAIN_MOMENTS[n];
            assert!(
                (table.value(n) - want).abs() <= 1e-8 * want.abs().max(1.0),
                "m_{n}: {} vs {want}",
                table.value(n)
            );
        }
    }

    #[test]
    fn cfd_route_converges_to_exact_moments() {
        // dt small enough for the dt^2/dt^4 remainders to be tiny but large
        // enough that dividing the n-th difference by dt^n does not storm
        // the roundoff floor
        let h = ring_h();
        let state = trial();
        let plain = moments_via_cfd(&h, &state, 4, 1e-2).unwrap();
        let refined = moments_via_cfd_extrapolated(&h, &state, 4, 1e-2).unwrap();
        assert_eq!(plain.provenance(), Provenance::Cfd);
        let refined_tol = [1e-10, 1e-8, 1e-8, 1e-6, 1e-5];
        for n in 0..=4 {
            let want = RING_MOMENTS[n];
            let scale = want.abs().max(1.0);
            assert!(
                (plain.value(n) - want).abs() <= 1e-2 * scale,
                "plain m_{n}: {} vs {want}",
                plain.value(n)
            );
            assert!(
                (refined.value(n) - want).abs() <= refined_tol[n] * scale,
                "refined m_{n}: {} vs {want}",
                refined.value(n)
            );
            if n >= 1 {
                let plain_err = (plain.value(n) - want).abs();
                let refined_err = (refined.value(n) - want).abs();
                assert!(refined_err <= plain_err, "extrapolation must not hurt m_{n}");
            }
        }
    }

    #[test]
    fn cfd_error_shrinks_quadratically() {
        let h = ring_h();
        let state = trial();
        let exact = moments_exact(&h, &state, 3).unwrap();
        let coarse = moments_via_cfd(&h, &state, 3, 1e-2).unwrap();
        let fine = moments_via_cfd(&h, &state, 3, 5e-3).unwrap();
        for n in 1..=3 {
            let e_coarse = (coarse.value(n) - exact.value(n)).abs();
            let e_fine = (fine.value(n) - exact.value(n)).abs();
            let ratio = e_coarse / e_fine;
            assert!((3.5..=4.5).contains(&ratio), "order {n} ratio {ratio}");
        }
    }

    #[test]
    fn connected_moments_match_reference() {
        let table = moments_exact(&chain_h(), &trial(), 8).unwrap();
        let got = connected_moments(&table);
        let want = [
            -2.540302305868,
            11.23187111731,
            11.16541279031,
            -184.7374500595,
            -830.1284013374,
            12763.29757350,
            134089.2806550,
            -1755612.341181,
        ];
        for (n, (g, w)) in got.iter().zip(want).enumerate() {
            assert!((g - w).abs() <= 1e-8 * w.abs().max(1.0), "c_{}: {g} vs {w}", n + 1);
        }
        // closed forms for the first few connected moments
        let m = |n: usize| table.value(n);
        assert_abs_diff_eq!(got[1], m(2) - m(1) * m(1), epsilon = 1e-8);
        assert_abs_diff_eq!(
            got[2],
            m(3) - 3.0 * m(1) * m(2) + 2.0 * m(1).powi(3),
            epsilon = 1e-7
        );
    }

    #[test]
    fn generalized_moments_cover_magnetization() {
        let h = chain_h();
        let state = trial();
        let mag = build_magnetization(4).unwrap();
        let closure = basis_closure(&h, 8).unwrap();
        let strings: Vec<PauliString> = closure.strings.iter().copied().collect();
        let plan = greedy_qwc_grouping(&strings, OrderingPolicy::WeightDescending).unwrap();
        let measured = measured_expectations(&plan, &state, 0, None, None, 1).unwrap();
        for (a, b) in [(0, 0), (1, 2), (3, 3), (2, 4)] {
            let exact = generalized_moment(&h, &mag, a, b, &state).unwrap();
            let via_exps =
                generalized_moment_from_expectations(&h, &mag, a, b, &measured.values).unwrap();
            assert!(
                (via_exps - exact).abs() <= 1e-8 * exact.abs().max(1.0),
                "t_{a}{b}: {via_exps} vs {exact}"
            );
        }
    }

    #[test]
    fn missing_strings_raise_coverage_errors() {
        let h = chain_h();
        let state = trial();
        let mut expectations = BTreeMap::new();
        // only the bare Hamiltonian strings: enough for m_1, not for m_2
        for p in h.strings() {
            expectations.insert(*p, crate::simulator::expectation_string(&state, p));
        }
        expectations.insert(PauliString::identity(4), 1.0);
        assert!(moments_from_expectations(&h, &expectations, 1).is_ok());
        match moments_from_expectations(&h, &expectations, 2) {
            Err(Error::Coverage { count, first }) => {
                assert!(count > 0);
                assert_eq!(first.len(), 4);
            }
            other => panic!("expected coverage error, got {other:?}"),
        }
    }

    #[test]
    fn noisy_measured_expectations_are_deterministic() {
        let h = chain_h();
        let state = trial();
        let closure = basis_closure(&h, 8).unwrap();
        let strings: Vec<PauliString> = closure.strings.iter().copied().collect();
        let plan = greedy_qwc_grouping(&strings, OrderingPolicy::WeightDescending).unwrap();
        let noise = ReadoutNoiseModel::new(0.02, 0.02).unwrap();
        let cal = build_calibration(&noise, 4, 0, 7).unwrap();
        let a = measured_expectations(&plan, &state, 2048, Some(&noise), Some(&cal), 42).unwrap();
        let b = measured_expectations(&plan, &state, 2048, Some(&noise), Some(&cal), 42).unwrap();
        assert_eq!(a.values, b.values);
        let c = measured_expectations(&plan, &state, 2048, Some(&noise), Some(&cal), 43).unwrap();
        assert_ne!(a.values, c.values);
        // identity is exactly one under any calibrated histogram
        let id = PauliString::identity(4);
        assert_abs_diff_eq!(a.values[&id], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn table_validation() {
        assert!(MomentTable::new(vec![], Provenance::Exact).is_err());
        assert!(MomentTable::new(vec![0.5], Provenance::Exact).is_err());
        assert!(MomentTable::new(vec![1.0, f64::NAN], Provenance::Exact).is_err());
        assert!(MomentTable::new(vec![1.0, 2.0, -1.0], Provenance::Exact).is_err());
        assert!(MomentTable::new(vec![1.0, 2.0, -1.0], Provenance::PauliMeasured).is_ok());
        let too_long = vec![1.0; MOMENT_ORDER_CAP + 2];
        assert!(MomentTable::new(too_long, Provenance::Exact).is_err());
    }

    #[test]
    fn csv_format() {
        let table = MomentTable::new(vec![1.0, -2.5], Provenance::Exact).unwrap();
        let csv = table.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "order,value,provenance");
        assert_eq!(lines[1], "0,1.00000000000e0,exact");
        assert_eq!(lines[2], "1,-2.50000000000e0,exact");
    }

    #[test]
    fn chebyshev_change_of_basis() {
        // row sums are 1 because T_k(1) = 1
        for n in 0..=10 {
            let c = chebyshev_coefficients(n);
            assert_eq!(c.len(), n + 1);
            let sum: f64 = c.iter().sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        }
        // x^2 = (T_0 + T_2)/2, x^3 = (3 T_1 + T_3)/4
        assert_eq!(chebyshev_coefficients(2), vec![0.5, 0.0, 0.5]);
        assert_eq!(chebyshev_coefficients(3), vec![0.0, 0.75, 0.0, 0.25]);
        // spot-check the identity on a small grid
        for n in 0..=6 {
            let c = chebyshev_coefficients(n);
            for i in 0..=40 {
                let x = -1.0 + 2.0 * i as f64 / 40.0;
                let mut t = (1.0, x);
                let mut total = c[0];
                for coeff in c.iter().skip(1) {
                    total += coeff * t.1;
                    t = (t.1, 2.0 * x * t.1 - t.0);
                }
                assert!((total - x.powi(n as i32)).abs() < 1e-13, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn binomials_are_exact() {
        assert_eq!(binomial(0, 0), 1.0);
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(40, 20), 137846528820.0);
        assert_eq!(binomial(3, 5), 0.0);
    }
}
