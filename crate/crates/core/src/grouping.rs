//! Greedy partitioning of Pauli strings into qubitwise-commuting measurement
//! groups, plus the shot-budget estimate for measuring a weighted sum to a
//! target precision.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::models::Circuit;
use crate::pauli::{PauliString, PauliSum};
use crate::simulator::{expectation_string, measurement_basis, rotation_for_basis, StateVector};

/// Order in which the greedy pass visits strings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrderingPolicy {
    /// Heaviest strings first, ties by literal; tends to give the fewest
    /// groups because hard-to-place strings claim groups early.
    WeightDescending,
    /// Plain literal order.
    Lexicographic,
    /// The caller's order, unchanged.
    Insertion,
}

impl OrderingPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            OrderingPolicy::WeightDescending => "weight-descending",
            OrderingPolicy::Lexicographic => "lexicographic",
            OrderingPolicy::Insertion => "insertion",
        }
    }
}

impl std::str::FromStr for OrderingPolicy {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        match text {
            "weight-descending" => Ok(OrderingPolicy::WeightDescending),
            "lexicographic" => Ok(OrderingPolicy::Lexicographic),
            "insertion" => Ok(OrderingPolicy::Insertion),
            other => Err(Error::invalid("ordering policy", format!("unknown policy '{other}'"))),
        }
    }
}

/// A measurement plan: disjoint qubitwise-commuting groups, each with its
/// per-qubit basis letters and the circuit rotating that basis onto Z.
#[derive(Clone, Debug)]
pub struct GroupingPlan {
    n_qubits: usize,
    groups: Vec<Vec<PauliString>>,
    bases: Vec<Vec<char>>,
    rotations: Vec<Circuit>,
}

impl GroupingPlan {
    /// Validate explicit groups (each must be qubitwise commuting) and derive
    /// their bases and rotations.
    pub fn from_groups(groups: Vec<Vec<PauliString>>) -> Result<Self> {
        let n_qubits = groups
            .first()
            .and_then(|g| g.first())
            .map(|p| p.n_qubits())
            .ok_or_else(|| Error::invalid("grouping", "no strings to group"))?;
        let mut bases = Vec::with_capacity(groups.len());
        let mut rotations = Vec::with_capacity(groups.len());
        for group in &groups {
            let basis = measurement_basis(group)?;
            rotations.push(rotation_for_basis(&basis));
            bases.push(basis);
        }
        Ok(GroupingPlan { n_qubits, groups, bases, rotations })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn groups(&self) -> &[Vec<PauliString>] {
        &self.groups
    }

    pub fn bases(&self) -> &[Vec<char>] {
        &self.bases
    }

    pub fn rotations(&self) -> &[Circuit] {
        &self.rotations
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.len()).collect()
    }

    pub fn total_strings(&self) -> usize {
        self.groups.iter().map(|g| g.len()).sum()
    }

    /// One line per group, literals space-separated.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for group in &self.groups {
            let line: Vec<String> = group.iter().map(|p| p.literal()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parse the [`to_text`] format; blank lines and `#` comments are
    /// skipped, groups are validated.
    ///
    /// [`to_text`]: GroupingPlan::to_text
    pub fn from_text(text: &str) -> Result<Self> {
        let mut groups = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let group: Result<Vec<PauliString>> =
                line.split_whitespace().map(PauliString::from_literal).collect();
            groups.push(group?);
        }
        GroupingPlan::from_groups(groups)
    }
}

/// First-fit greedy grouping: visit strings in policy order, place each in
/// the first group it qubitwise-commutes with entirely, open a new group
/// otherwise. Duplicates are collapsed before grouping.
pub fn greedy_qwc_grouping(strings: &[PauliString], policy: OrderingPolicy) -> Result<GroupingPlan> {
    if strings.is_empty() {
        return Err(Error::invalid("grouping", "no strings to group"));
    }
    let n = strings[0].n_qubits();
    let mut seen = std::collections::BTreeSet::new();
    let mut ordered = Vec::with_capacity(strings.len());
    for p in strings {
        if p.n_qubits() != n {
            return Err(Error::DimensionMismatch { left: n, right: p.n_qubits() });
        }
        if seen.insert(*p) {
            ordered.push(*p);
        }
    }
    match policy {
        OrderingPolicy::WeightDescending => {
            ordered.sort_by(|a, b| b.weight().cmp(&a.weight()).then_with(|| a.literal().cmp(&b.literal())));
        }
        OrderingPolicy::Lexicographic => {
            ordered.sort_by_key(|p| p.literal());
        }
        OrderingPolicy::Insertion => {}
    }
    let mut groups: Vec<Vec<PauliString>> = Vec::new();
    for p in ordered {
        match groups.iter_mut().find(|g| g.iter().all(|q| q.qubitwise_commutes(&p))) {
            Some(group) => group.push(p),
            None => groups.push(vec![p]),
        }
    }
    // canonical member order inside each group; the group sequence itself
    // stays in creation order so the policy remains visible in the output
    for group in &mut groups {
        group.sort_by_key(|p| p.literal());
    }
    GroupingPlan::from_groups(groups)
}

/// Within-group covariance matrices Cov(P_i, P_j) = <P_i P_j> - <P_i><P_j>
/// on `state`; qubitwise-commuting products are strings with a real +-1
/// phase, so every entry is real.
pub fn covariances_from_state(plan: &GroupingPlan, state: &StateVector) -> Result<Vec<DMatrix<f64>>> {
    if plan.n_qubits() != state.n_qubits() {
        return Err(Error::DimensionMismatch { left: plan.n_qubits(), right: state.n_qubits() });
    }
    let mut out = Vec::with_capacity(plan.len());
    for group in plan.groups() {
        let means: Vec<f64> = group.iter().map(|p| expectation_string(state, p)).collect();
        let mut cov = DMatrix::zeros(group.len(), group.len());
        for (i, pi) in group.iter().enumerate() {
            for (j, pj) in group.iter().enumerate().skip(i) {
                let (prod, k) = pi.mul_with_phase(pj);
                debug_assert!(k % 2 == 0, "commuting product phase must be real");
                let sign = if k == 0 { 1.0 } else { -1.0 };
                let value = sign * expectation_string(state, &prod) - means[i] * means[j];
                cov[(i, j)] = value;
                cov[(j, i)] = value;
            }
        }
        out.push(cov);
    }
    Ok(out)
}

/// Shot-budget estimate for a target standard error.
#[derive(Clone, Debug)]
pub struct ShotBudget {
    /// Variance of each group's weighted contribution (clipped at zero).
    pub group_variances: Vec<f64>,
    /// Optimal fraction of shots per group, proportional to sqrt variance.
    pub allocations: Vec<f64>,
    /// Total shots (sum_G sqrt(V_G) / epsilon)^2.
    pub total_shots: f64,
}

/// Estimate the shots needed to measure sum_i h_i <P_i> to standard error
/// `epsilon` under the plan, allocating shots across groups proportionally
/// to each group's weighted standard deviation. Identity strings carry no
/// variance; a group variance driven slightly negative by rounding is
/// clipped to zero with a warning.
pub fn shot_budget(
    plan: &GroupingPlan,
    weights: &PauliSum,
    covariances: &[DMatrix<f64>],
    epsilon: f64,
) -> Result<ShotBudget> {
    if epsilon <= 0.0 {
        return Err(Error::invalid("epsilon", "target precision must be positive"));
    }
    if covariances.len() != plan.len() {
        return Err(Error::DimensionMismatch { left: covariances.len(), right: plan.len() });
    }
    let mut group_variances = Vec::with_capacity(plan.len());
    for (g, group) in plan.groups().iter().enumerate() {
        let h: Vec<f64> = group.iter().map(|p| weights.coefficient(p).re).collect();
        let cov = &covariances[g];
        if cov.nrows() != group.len() {
            return Err(Error::DimensionMismatch { left: cov.nrows(), right: group.len() });
        }
        let mut variance = 0.0;
        for i in 0..group.len() {
            for j in 0..group.len() {
                variance += h[i] * h[j] * cov[(i, j)];
            }
        }
        if variance < 0.0 {
            if variance < -1e-9 {
                eprintln!("warning: group {g} variance {variance:.3e} clipped to zero");
            }
            variance = 0.0;
        }
        group_variances.push(variance);
    }
    let sqrt_sum: f64 = group_variances.iter().map(|v| v.sqrt()).sum();
    let allocations = if sqrt_sum > 0.0 {
        group_variances.iter().map(|v| v.sqrt() / sqrt_sum).collect()
    } else {
        vec![0.0; group_variances.len()]
    };
    Ok(ShotBudget {
        group_variances,
        allocations,
        total_shots: (sqrt_sum / epsilon).powi(2),
    })
}
