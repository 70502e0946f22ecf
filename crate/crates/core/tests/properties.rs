//! Randomized invariants of the Pauli algebra, simulator, grouping, and
//! moment layers, checked against the brute-force dense oracle in
//! `common`. Only small registers are used so the oracle stays exact and
//! fast.

mod common;

use common::{dense_string, matmul, max_abs_diff, quadratic_form, scale_add};
use num_complex::Complex64;
use proptest::prelude::*;

use hamo::grouping::{greedy_qwc_grouping, OrderingPolicy};
use hamo::models::{Circuit, Gate};
use hamo::moments::moments_exact;
use hamo::pauli::{basis_closure, pauli_mul, sum_mul, sum_power, PauliString, PauliSum, PauliTerm};
use hamo::simulator::{apply, apply_circuit, expectation_string, StateVector};

const N: usize = 3;
const DIM: usize = 1 << N;

fn arb_string() -> impl Strategy<Value = PauliString> {
    (0u64..DIM as u64, 0u64..DIM as u64).prop_map(|(x, z)| PauliString::new(N, x, z))
}

fn arb_state() -> impl Strategy<Value = StateVector> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), DIM..=DIM).prop_filter_map(
        "norm too small",
        |pairs| {
            let amplitudes: Vec<Complex64> =
                pairs.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
            let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-3 {
                return None;
            }
            StateVector::from_amplitudes(N, amplitudes.into_iter().map(|a| a / norm).collect())
                .ok()
        },
    )
}

fn arb_gate() -> impl Strategy<Value = Gate> {
    prop_oneof![
        (0..N).prop_map(Gate::X),
        (0..N).prop_map(Gate::H),
        (0..N).prop_map(Gate::S),
        (0..N).prop_map(Gate::Sdg),
        (0..N, -3.2f64..3.2).prop_map(|(q, theta)| Gate::Ry { qubit: q, theta }),
        (0..N, -3.2f64..3.2).prop_map(|(q, theta)| Gate::Rz { qubit: q, theta }),
        (0..N, 0..N).prop_filter_map("distinct", |(a, b)| (a != b).then_some(Gate::Cz(a, b))),
        (0..N, 0..N)
            .prop_filter_map("distinct", |(a, b)| (a != b)
                .then_some(Gate::Cx { control: a, target: b })),
    ]
}

fn arb_hermitian_sum() -> impl Strategy<Value = PauliSum> {
    proptest::collection::vec((arb_string(), -2.0f64..2.0), 1..6).prop_map(|terms| {
        let mut sum = PauliSum::new(N);
        for (string, weight) in terms {
            sum.add_term(string, Complex64::new(weight, 0.0)).unwrap();
        }
        if sum.is_empty() {
            sum.add_term(PauliString::identity(N), Complex64::new(1.0, 0.0)).unwrap();
        }
        sum
    })
}

proptest! {
    #[test]
    fn string_product_matches_dense_oracle(a in arb_string(), b in arb_string()) {
        let ta = PauliTerm::new(a, Complex64::new(1.0, 0.0));
        let tb = PauliTerm::new(b, Complex64::new(1.0, 0.0));
        let product = pauli_mul(&ta, &tb).unwrap();
        let dense = matmul(&dense_string(&a.literal()), &dense_string(&b.literal()));
        let mut expected = vec![vec![Complex64::new(0.0, 0.0); DIM]; DIM];
        scale_add(&mut expected, &dense_string(&product.string.literal()), product.coefficient);
        prop_assert!(max_abs_diff(&dense, &expected) < 1e-12);
    }

    #[test]
    fn commutation_predicate_matches_dense_commutator(a in arb_string(), b in arb_string()) {
        let da = dense_string(&a.literal());
        let db = dense_string(&b.literal());
        let commutator = max_abs_diff(&matmul(&da, &db), &matmul(&db, &da));
        prop_assert_eq!(a.commutes(&b), commutator < 1e-12);
        // qubitwise commutation is strictly stronger
        if a.qubitwise_commutes(&b) {
            prop_assert!(a.commutes(&b));
        }
    }

    #[test]
    fn sum_arithmetic_matches_dense_oracle(h in arb_hermitian_sum(), g in arb_hermitian_sum()) {
        let product = sum_mul(&h, &g).unwrap();
        let mut dense_h = vec![vec![Complex64::new(0.0, 0.0); DIM]; DIM];
        let mut dense_g = dense_h.clone();
        let mut dense_product = dense_h.clone();
        for (p, c) in h.terms() {
            scale_add(&mut dense_h, &dense_string(&p.literal()), *c);
        }
        for (p, c) in g.terms() {
            scale_add(&mut dense_g, &dense_string(&p.literal()), *c);
        }
        for (p, c) in product.terms() {
            scale_add(&mut dense_product, &dense_string(&p.literal()), *c);
        }
        prop_assert!(max_abs_diff(&matmul(&dense_h, &dense_g), &dense_product) < 1e-9);
    }

    #[test]
    fn repeated_product_equals_power(h in arb_hermitian_sum()) {
        let squared = sum_mul(&h, &h).unwrap();
        let cubed = sum_mul(&squared, &h).unwrap();
        let power = sum_power(&h, 3).unwrap();
        for (p, c) in cubed.terms() {
            prop_assert!((power.coefficient(p) - c).norm() <= 1e-9 * c.norm().max(1.0));
        }
        for (p, c) in power.terms() {
            prop_assert!((cubed.coefficient(p) - c).norm() <= 1e-9 * c.norm().max(1.0));
        }
    }

    #[test]
    fn closure_ignores_term_insertion_order(h in arb_hermitian_sum()) {
        let forward = basis_closure(&h, 6).unwrap();
        let mut reversed_sum = PauliSum::new(N);
        let mut terms: Vec<_> = h.terms().map(|(p, c)| (*p, *c)).collect();
        terms.reverse();
        for (p, c) in terms {
            reversed_sum.add_term(p, c).unwrap();
        }
        let reversed = basis_closure(&reversed_sum, 6).unwrap();
        prop_assert_eq!(&forward.strings, &reversed.strings);
        // the closure contains the strings of the sum itself
        for p in h.strings() {
            prop_assert!(forward.strings.contains(p));
        }
    }

    #[test]
    fn circuits_preserve_norm(gates in proptest::collection::vec(arb_gate(), 0..12), state in arb_state()) {
        let mut circuit = Circuit::new(N);
        for gate in gates {
            circuit.push(gate);
        }
        let evolved = apply_circuit(&state, &circuit);
        prop_assert!((evolved.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn string_expectation_matches_dense_quadratic_form(p in arb_string(), state in arb_state()) {
        let fast = expectation_string(&state, &p);
        let dense = quadratic_form(state.amplitudes(), &dense_string(&p.literal()));
        prop_assert!(dense.im.abs() < 1e-10);
        prop_assert!((fast - dense.re).abs() < 1e-10);
    }

    #[test]
    fn applying_a_sum_matches_dense_action(h in arb_hermitian_sum(), state in arb_state()) {
        let applied = apply(&h, &state).unwrap();
        let mut dense_h = vec![vec![Complex64::new(0.0, 0.0); DIM]; DIM];
        for (p, c) in h.terms() {
            scale_add(&mut dense_h, &dense_string(&p.literal()), *c);
        }
        for (row, want) in applied.amplitudes().iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (col, a) in state.amplitudes().iter().enumerate() {
                acc += dense_h[row][col] * a;
            }
            prop_assert!((want - acc).norm() < 1e-10);
        }
    }

    #[test]
    fn grouping_partitions_and_commutes(
        strings in proptest::collection::vec(arb_string(), 1..40),
        policy_pick in 0usize..3,
    ) {
        let policy = [
            OrderingPolicy::WeightDescending,
            OrderingPolicy::Lexicographic,
            OrderingPolicy::Insertion,
        ][policy_pick];
        let plan = greedy_qwc_grouping(&strings, policy).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for group in plan.groups() {
            for (i, p) in group.iter().enumerate() {
                prop_assert!(seen.insert(*p), "string appears twice in the plan");
                for q in &group[i + 1..] {
                    prop_assert!(p.qubitwise_commutes(q));
                }
            }
        }
        let unique: std::collections::BTreeSet<_> = strings.iter().copied().collect();
        prop_assert_eq!(seen, unique);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn moments_match_dense_quadratic_forms(h in arb_hermitian_sum(), state in arb_state()) {
        let table = match moments_exact(&h, &state, 6) {
            Ok(table) => table,
            // moment tables reject pathological scales; that is their job
            Err(_) => return Ok(()),
        };
        let mut dense_h = vec![vec![Complex64::new(0.0, 0.0); DIM]; DIM];
        for (p, c) in h.terms() {
            scale_add(&mut dense_h, &dense_string(&p.literal()), *c);
        }
        let mut power = vec![vec![Complex64::new(0.0, 0.0); DIM]; DIM];
        for (i, row) in power.iter_mut().enumerate() {
            row[i] = Complex64::new(1.0, 0.0);
        }
        for n in 0..=6usize {
            let want = quadratic_form(state.amplitudes(), &power);
            let scale = table.value(n).abs().max(1.0);
            prop_assert!(
                (table.value(n) - want.re).abs() <= 1e-9 * scale,
                "m_{}: {} vs {}", n, table.value(n), want.re
            );
            power = matmul(&power, &dense_h);
        }
    }
}
