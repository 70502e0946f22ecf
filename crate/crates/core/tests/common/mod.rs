//! Brute-force dense oracle used by the property suites: Pauli strings and
//! sums expanded into explicit 2^n x 2^n complex matrices through tensor
//! products, with naive matrix arithmetic. Everything here is deliberately
//! independent of the bit-mask algebra under test.

use num_complex::Complex64;

pub type Dense = Vec<Vec<Complex64>>;

fn zero(dim: usize) -> Dense {
    vec![vec![Complex64::new(0.0, 0.0); dim]; dim]
}

fn letter_matrix(letter: char) -> [[Complex64; 2]; 2] {
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match letter {
        'I' => [[l, o], [o, l]],
        'X' => [[o, l], [l, o]],
        'Y' => [[o, -i], [i, o]],
        'Z' => [[l, o], [o, -l]],
        other => panic!("not a Pauli letter: {other}"),
    }
}

/// Dense matrix of a Pauli string; qubit q lives at bit q of the index.
pub fn dense_string(literal: &str) -> Dense {
    let n = literal.len();
    let dim = 1usize << n;
    let factors: Vec<[[Complex64; 2]; 2]> = literal.chars().map(letter_matrix).collect();
    let mut out = zero(dim);
    for (row, out_row) in out.iter_mut().enumerate() {
        for (col, entry) in out_row.iter_mut().enumerate() {
            let mut product = Complex64::new(1.0, 0.0);
            for (q, factor) in factors.iter().enumerate() {
                product *= factor[(row >> q) & 1][(col >> q) & 1];
            }
            *entry = product;
        }
    }
    out
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let dim = a.len();
    let mut out = zero(dim);
    for i in 0..dim {
        for k in 0..dim {
            let aik = a[i][k];
            if aik.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..dim {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn scale_add(acc: &mut Dense, m: &Dense, c: Complex64) {
    for (acc_row, m_row) in acc.iter_mut().zip(m) {
        for (a, v) in acc_row.iter_mut().zip(m_row) {
            *a += c * v;
        }
    }
}

pub fn max_abs_diff(a: &Dense, b: &Dense) -> f64 {
    let mut worst = 0.0f64;
    for (ra, rb) in a.iter().zip(b) {
        for (va, vb) in ra.iter().zip(rb) {
            worst = worst.max((va - vb).norm());
        }
    }
    worst
}

/// <state| M |state> for a dense matrix.
pub fn quadratic_form(state: &[Complex64], m: &Dense) -> Complex64 {
    let mut out = Complex64::new(0.0, 0.0);
    for (i, row) in m.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out += state[i].conj() * v * state[j];
        }
    }
    out
}
