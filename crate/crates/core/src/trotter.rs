//! Even-order Suzuki product formulas on a truncated Hamiltonian.

use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{domain, Result, StabError};
use crate::lattice::LocalityConstants;
use crate::linalg::{self, EigHermitian, LocalIndex};
use crate::operators::{assemble_dense, TruncatedHamiltonian};
use crate::{CMatrix, CVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    Forward,
    Reverse,
}

impl Ordering {
    fn flip(self) -> Self {
        match self {
            Ordering::Forward => Ordering::Reverse,
            Ordering::Reverse => Ordering::Forward,
        }
    }
}

/// One sweep over all retained terms with a common time coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub coefficient: f64,
    pub ordering: Ordering,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrotterPlan {
    pub p: usize,
    pub n: usize,
    pub stages: Vec<Stage>,
}

/// `P_k = (4 − 4^{1/(2k+1)})^{−1}`.
pub fn suzuki_p(k: usize) -> f64 {
    1.0 / (4.0 - 4f64.powf(1.0 / (2 * k + 1) as f64))
}

fn suzuki_stages(p: usize) -> Vec<Stage> {
    if p == 2 {
        return vec![
            Stage { coefficient: 0.5, ordering: Ordering::Forward },
            Stage { coefficient: 0.5, ordering: Ordering::Reverse },
        ];
    }
    let base = suzuki_stages(p - 2);
    let pk = suzuki_p(p / 2 - 1);
    let scaled = |c: f64| base.iter().map(move |s| Stage { coefficient: s.coefficient * c, ordering: s.ordering });
    scaled(pk)
        .chain(scaled(pk))
        .chain(scaled(1.0 - 4.0 * pk))
        .chain(scaled(pk))
        .chain(scaled(pk))
        .collect()
}

/// Order-`p` Suzuki plan repeated `n` times.
pub fn suzuki_plan(p: usize, n: usize) -> Result<TrotterPlan> {
    if p == 0 || p % 2 == 1 {
        return domain(format!("product formula order must be even and positive, got {p}"));
    }
    if n == 0 {
        return domain("Trotter number must be at least 1");
    }
    Ok(TrotterPlan { p, n, stages: suzuki_stages(p) })
}

/// One gate of the product: `e^{-i (t/n) a H_term}` within repetition `j`
/// and stage `upsilon`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate {
    pub j: usize,
    pub upsilon: usize,
    /// Position in the truncated term list.
    pub term: usize,
    pub coefficient: f64,
}

impl TrotterPlan {
    /// Stage count `Υ = 2·5^{k−1}`.
    pub fn upsilon(&self) -> usize {
        self.stages.len()
    }

    /// Stage list of the inverse formula: reversed order, negated
    /// coefficients, flipped term orderings.
    pub fn inverse_stages(&self) -> Vec<Stage> {
        self.stages
            .iter()
            .rev()
            .map(|s| Stage { coefficient: -s.coefficient, ordering: s.ordering.flip() })
            .collect()
    }

    /// Gates in application order (first element acts first on the state).
    pub fn gates(&self, n_terms: usize) -> impl Iterator<Item = Gate> + '_ {
        (0..self.n).flat_map(move |j| {
            self.stages.iter().enumerate().flat_map(move |(upsilon, s)| {
                (0..n_terms).map(move |k| {
                    let term = match s.ordering {
                        Ordering::Forward => k,
                        Ordering::Reverse => n_terms - 1 - k,
                    };
                    Gate { j, upsilon, term, coefficient: s.coefficient }
                })
            })
        })
    }

    pub fn n_gates(&self, n_terms: usize) -> usize {
        self.n * self.upsilon() * n_terms
    }
}

/// Eigendecompositions of every retained term, reused across gates.
pub struct TermPropagators {
    eigs: Vec<EigHermitian>,
}

impl TermPropagators {
    pub fn new(trunc: &TruncatedHamiltonian) -> Result<Self> {
        let eigs = trunc.terms.iter().map(|t| linalg::eigh(&t.matrix)).collect::<Result<_>>()?;
        Ok(Self { eigs })
    }

    /// `e^{-i s H_term}` on the term support.
    pub fn gate(&self, term: usize, s: f64) -> CMatrix {
        self.eigs[term].propagator(s)
    }
}

/// Dense `U^{(p)}_n(t)`.
pub fn product_unitary(plan: &TrotterPlan, trunc: &TruncatedHamiltonian, t: f64) -> Result<CMatrix> {
    let props = TermPropagators::new(trunc)?;
    let tau = t / plan.n as f64;
    let mut u = linalg::identity(trunc.dim);
    for g in plan.gates(trunc.n_terms()) {
        let gate = props.gate(g.term, tau * g.coefficient);
        trunc.terms[g.term].index.apply_left(&gate, &mut u);
    }
    Ok(u)
}

/// `U^{(p)}_n(t) ψ`.
pub fn product_state(plan: &TrotterPlan, trunc: &TruncatedHamiltonian, t: f64, psi: &CVector) -> Result<CVector> {
    let props = TermPropagators::new(trunc)?;
    let tau = t / plan.n as f64;
    let mut out = psi.clone();
    let slice = out.as_slice_mut().expect("contiguous state");
    for g in plan.gates(trunc.n_terms()) {
        let gate = props.gate(g.term, tau * g.coefficient);
        trunc.terms[g.term].index.apply_vec(&gate, slice);
    }
    Ok(out)
}

/// A commutator restricted to the qubits it acts on.
struct LocalOp {
    qubits: Vec<usize>,
    matrix: CMatrix,
}

fn commute_local(h_qubits: &[usize], h: &CMatrix, c: &LocalOp) -> LocalOp {
    let mut qubits: Vec<usize> = c.qubits.iter().chain(h_qubits).copied().collect();
    qubits.sort_unstable();
    qubits.dedup();
    let n = qubits.len();
    let place = |qs: &[usize]| -> Vec<usize> { qs.iter().map(|q| qubits.binary_search(q).expect("qubit present")).collect() };
    let a = LocalIndex::new(n, &place(h_qubits)).embed(h);
    let b = LocalIndex::new(n, &place(&c.qubits)).embed(&c.matrix);
    LocalOp { qubits, matrix: linalg::commutator(&a, &b) }
}

/// Exact `Σ_{γ_1..γ_D} ‖[H_{γ_D}, …, [H_{γ_2}, H_{γ_1}]]‖` over the retained
/// terms. Tuples whose next term is disjoint from the current commutator
/// vanish and are pruned.
pub fn nested_commutator_exact(trunc: &TruncatedHamiltonian, depth: usize) -> Result<f64> {
    if trunc.dim > 256 {
        return Err(StabError::Capacity(format!("exact nested commutators need dimension ≤ 256, got {}", trunc.dim)));
    }
    if depth == 0 {
        return domain("commutator depth must be at least 1");
    }
    fn recurse(trunc: &TruncatedHamiltonian, c: LocalOp, remaining: usize) -> f64 {
        if remaining == 0 {
            return linalg::operator_norm(&c.matrix);
        }
        let mut acc = 0.0;
        for t in &trunc.terms {
            if !t.qubits.iter().any(|q| c.qubits.contains(q)) {
                continue;
            }
            let next = commute_local(&t.qubits, &t.matrix, &c);
            if linalg::max_abs(&next.matrix) < 1e-14 {
                continue;
            }
            acc += recurse(trunc, next, remaining - 1);
        }
        acc
    }
    Ok(trunc
        .terms
        .iter()
        .map(|t| recurse(trunc, LocalOp { qubits: t.qubits.clone(), matrix: t.matrix.clone() }, depth - 1))
        .sum())
}

/// Counting bound `2^D (Λ_d 2^d R^d)^{D−1} [(D−1)!]^d |Θ_l|` on the
/// depth-`D` commutator sum.
pub fn nested_commutator_bound(depth: usize, n_terms: usize, c: &LocalityConstants) -> f64 {
    let d = c.d as i32;
    let fact: f64 = (1..depth).map(|k| k as f64).product();
    2f64.powi(depth as i32)
        * (c.lambda_d * 2f64.powi(d) * c.r.powi(d)).powi(depth as i32 - 1)
        * fact.powi(d)
        * n_terms as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrotterErrorReport {
    /// `‖U_l(t) − U^{(p)}_{l,n}(t)‖`, when the register is small enough.
    pub exact_error: Option<f64>,
    /// Exact commutator sum times `t^{p+1} / (n^p (p+1)!)`.
    pub commutator_sum: Option<f64>,
    /// `K |Θ_l| t^{p+1} / n^p`.
    pub bound_rhs: f64,
}

/// Largest register for which the exact error is computed.
pub const EXACT_ERROR_MAX_DIM: usize = 1024;

pub fn trotter_error_report(
    plan: &TrotterPlan,
    trunc: &TruncatedHamiltonian,
    t: f64,
    constants: &LocalityConstants,
) -> Result<TrotterErrorReport> {
    let p = plan.p as i32;
    let scale = t.abs().powi(p + 1) / (plan.n as f64).powi(p);
    let bound_rhs = bounds::trotter_k(plan.p, constants) * trunc.n_terms() as f64 * scale;
    let exact_error = if trunc.dim <= EXACT_ERROR_MAX_DIM {
        let h = assemble_dense(trunc)?;
        let exact = linalg::expm_i_hermitian(&h, t)?;
        Some(linalg::operator_norm(&(exact - product_unitary(plan, trunc, t)?)))
    } else {
        None
    };
    let commutator_sum = if trunc.dim <= 256 {
        let fact: f64 = (1..=plan.p + 1).map(|k| k as f64).product();
        Some(nested_commutator_exact(trunc, plan.p + 1)? * scale / fact)
    } else {
        None
    };
    Ok(TrotterErrorReport { exact_error, commutator_sum, bound_rhs })
}
