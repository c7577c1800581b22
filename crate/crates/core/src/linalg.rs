//! Dense complex linear algebra on qubit registers.
//!
//! Hermitian propagators go through an eigendecomposition, so a single
//! decomposition serves every evolution time. Local gates are applied
//! directly to state vectors or matrix rows without building the embedded
//! operator.

use faer::complex_native::c64;
use faer::linalg::solvers::SpSolver;
use faer::{Mat, Side};
use ndarray::{Array1, Array2};

use crate::error::{domain, Result, StabError};
use crate::{CMatrix, CVector, C64, MAX_DIM};

/// Input Hermiticity tolerance, relative to the largest entry (floor 1).
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Output unitarity tolerance.
pub const UNITARY_TOL: f64 = 1e-10;
/// Trace tolerance for density matrices.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue accepted for a density matrix.
pub const PSD_TOL: f64 = 1e-10;

pub fn identity(n: usize) -> CMatrix {
    Array2::from_diag_elem(n, C64::new(1.0, 0.0))
}

pub fn zeros(n: usize) -> CMatrix {
    Array2::zeros((n, n))
}

pub fn dagger(a: &CMatrix) -> CMatrix {
    a.t().mapv(|z| z.conj())
}

pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.dot(b)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let x = a[[i, j]];
            if x == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = x * b[[k, l]];
                }
            }
        }
    }
    out
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.dot(b) - b.dot(a)
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diag().sum()
}

/// Largest entry modulus.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Largest entrywise deviation `|a_ij - conj(a_ji)|`.
pub fn hermiticity_error(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(a: &CMatrix) -> bool {
    a.is_square() && hermiticity_error(a) <= HERMITIAN_TOL * max_abs(a).max(1.0)
}

fn check_square(a: &CMatrix) -> Result<usize> {
    if !a.is_square() {
        return domain(format!("matrix is {:?}, expected square", a.dim()));
    }
    if a.nrows() > MAX_DIM * MAX_DIM {
        return Err(StabError::Capacity(format!("dimension {} too large", a.nrows())));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return domain("matrix has non-finite entries");
    }
    Ok(a.nrows())
}

fn check_hermitian(a: &CMatrix) -> Result<usize> {
    let n = check_square(a)?;
    let err = hermiticity_error(a);
    if err > HERMITIAN_TOL * max_abs(a).max(1.0) {
        return domain(format!("matrix is not Hermitian (deviation {err:e})"));
    }
    Ok(n)
}

fn to_faer(a: &CMatrix) -> Mat<c64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| {
        let z = a[[i, j]];
        c64::new(z.re, z.im)
    })
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct EigHermitian {
    /// Eigenvalues in ascending order.
    pub eigenvalues: Vec<f64>,
    /// Columns are the matching orthonormal eigenvectors.
    pub eigenvectors: CMatrix,
}

impl EigHermitian {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(f(λ)) V†`.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            let fl = f(l);
            scaled.column_mut(j).mapv_inplace(|z| z * fl);
        }
        scaled.dot(&dagger(v))
    }

    /// `e^{-i s H}`.
    pub fn propagator(&self, s: f64) -> CMatrix {
        self.map(|l| C64::from_polar(1.0, -s * l))
    }

    /// `e^{-i s H} ψ` without forming the propagator.
    pub fn evolve(&self, s: f64, psi: &CVector) -> CVector {
        let v = &self.eigenvectors;
        let mut c = dagger(v).dot(psi);
        for (cj, &l) in c.iter_mut().zip(&self.eigenvalues) {
            *cj *= C64::from_polar(1.0, -s * l);
        }
        v.dot(&c)
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|l| C64::new(l, 0.0))
    }

    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, l| m.max(l.abs()))
    }
}

/// Hermitian eigendecomposition; rejects non-Hermitian input.
pub fn eigh(h: &CMatrix) -> Result<EigHermitian> {
    let n = check_hermitian(h)?;
    if n > MAX_DIM {
        return Err(StabError::Capacity(format!("dimension {n} exceeds {MAX_DIM}")));
    }
    let f = to_faer(h);
    let e = f.selfadjoint_eigendecomposition(Side::Lower);
    let s = e.s().column_vector();
    let u = e.u();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s.read(i).re.total_cmp(&s.read(j).re));
    let eigenvalues = order.iter().map(|&i| s.read(i).re).collect();
    let eigenvectors = Array2::from_shape_fn((n, n), |(i, j)| {
        let z = u.read(i, order[j]);
        C64::new(z.re, z.im)
    });
    Ok(EigHermitian { eigenvalues, eigenvectors })
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(h: &CMatrix) -> Result<Vec<f64>> {
    check_hermitian(h)?;
    let mut w: Vec<f64> = to_faer(h).selfadjoint_eigenvalues(Side::Lower);
    w.sort_by(f64::total_cmp);
    Ok(w)
}

/// `e^{-i s H}` for Hermitian `H`.
pub fn expm_i_hermitian(h: &CMatrix, s: f64) -> Result<CMatrix> {
    Ok(eigh(h)?.propagator(s))
}

/// Largest singular value. Hermitian input uses the spectrum directly.
pub fn operator_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    if is_hermitian(a) {
        let w = to_faer(a).selfadjoint_eigenvalues(Side::Lower);
        return w.iter().fold(0.0, |m, l| m.max(l.abs()));
    }
    to_faer(a).singular_values().into_iter().fold(0.0, f64::max)
}

/// Deviation `‖U†U − I‖`.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let n = u.nrows();
    operator_norm(&(dagger(u).dot(u) - identity(n)))
}

/// Validates a density matrix against the trace, Hermiticity and positivity
/// tolerances.
pub fn check_density(rho: &CMatrix) -> Result<()> {
    check_square(rho)?;
    let herm = hermiticity_error(rho);
    if herm > 1e-10 {
        return domain(format!("density matrix not Hermitian (deviation {herm:e})"));
    }
    let tr = trace(rho);
    if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
        return domain(format!("density matrix trace {tr} differs from 1"));
    }
    let w = eigvalsh(&symmetrize(rho))?;
    if w[0] < -PSD_TOL {
        return domain(format!("density matrix has eigenvalue {:e}", w[0]));
    }
    Ok(())
}

/// `(A + A†) / 2`.
pub fn symmetrize(a: &CMatrix) -> CMatrix {
    (a + &dagger(a)).mapv(|z| z * 0.5)
}

/// Trace norm of the difference of two density matrices.
pub fn trace_distance(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    check_density(rho)?;
    check_density(sigma)?;
    if rho.dim() != sigma.dim() {
        return domain("density matrices have different dimensions");
    }
    trace_norm_hermitian(&(rho - sigma))
}

/// `‖A‖₁` of the Hermitian part of `A`, without validating either input as
/// a state. Used for Monte Carlo averages whose trace is one only on average.
pub fn trace_norm_hermitian(a: &CMatrix) -> Result<f64> {
    Ok(eigvalsh(&symmetrize(a))?.iter().map(|l| l.abs()).sum())
}

/// `|ψ⟩⟨ψ|`.
pub fn outer(psi: &CVector) -> CMatrix {
    let n = psi.len();
    Array2::from_shape_fn((n, n), |(i, j)| psi[i] * psi[j].conj())
}

pub fn vec_norm(psi: &CVector) -> f64 {
    psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨ψ|A|ψ⟩`, real part.
pub fn expectation(a: &CMatrix, psi: &CVector) -> f64 {
    let apsi = a.dot(psi);
    psi.iter().zip(apsi.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// `Re tr(A ρ)`.
pub fn expectation_dm(a: &CMatrix, rho: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[[i, j]] * rho[[j, i]]).re;
        }
    }
    acc
}

/// Maximum-column-sum norm.
pub fn norm_1(a: &CMatrix) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential of a general square matrix by scaling and squaring
/// with a degree-13 Padé approximant.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;
    let n = check_square(a)?;
    let norm = norm_1(a);
    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let scale = C64::new(2f64.powi(-s), 0.0);
    let a = a.mapv(|z| z * scale);
    let id = identity(n);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let c = |k: usize| C64::new(B[k], 0.0);
    let inner_u = &a6 * c(13) + &a4 * c(11) + &a2 * c(9);
    let u = a.dot(&(a6.dot(&inner_u) + &a6 * c(7) + &a4 * c(5) + &a2 * c(3) + &id * c(1)));
    let inner_v = &a6 * c(12) + &a4 * c(10) + &a2 * c(8);
    let v = a6.dot(&inner_v) + &a6 * c(6) + &a4 * c(4) + &a2 * c(2) + &id * c(0);
    let p = &v + &u;
    let q = &v - &u;
    let lu = to_faer(&q).partial_piv_lu();
    let sol = lu.solve(&to_faer(&p));
    let mut r = Array2::from_shape_fn((n, n), |(i, j)| {
        let z = sol.read(i, j);
        C64::new(z.re, z.im)
    });
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(StabError::Numerical("Padé solve produced non-finite entries".into()));
    }
    for _ in 0..s {
        r = r.dot(&r);
    }
    Ok(r)
}

/// `e^{-i s H} ψ` by a truncated Taylor series, subdividing `s` so each
/// substep has `‖sH‖₁ ≤ 1/2`. Intended for short steps on small registers.
pub fn expm_action(h: &CMatrix, s: f64, psi: &CVector) -> CVector {
    let norm = norm_1(h) * s.abs();
    let substeps = ((norm / 0.5).ceil() as usize).max(1);
    let ds = s / substeps as f64;
    let mi = C64::new(0.0, -ds);
    let mut out = psi.clone();
    for _ in 0..substeps {
        let mut term = out.clone();
        let mut acc = out.clone();
        let scale = vec_norm(&out).max(1e-300);
        for k in 1..40 {
            term = h.dot(&term).mapv(|z| z * mi / k as f64);
            acc += &term;
            if vec_norm(&term) < 1e-17 * scale {
                break;
            }
        }
        out = acc;
    }
    out
}

/// Precomputed index offsets for applying a `2^k`-dimensional operator to a
/// subset of qubits in an `n`-qubit register. Qubit `q` is bit `n−1−q`
/// of the basis index; the first listed qubit is the most significant
/// local factor.
#[derive(Clone, Debug)]
pub struct LocalIndex {
    offsets: Vec<usize>,
    bases: Vec<usize>,
}

impl LocalIndex {
    pub fn new(n_qubits: usize, qubits: &[usize]) -> Self {
        let k = qubits.len();
        let mut mask = 0usize;
        for &q in qubits {
            debug_assert!(q < n_qubits);
            mask |= 1 << (n_qubits - 1 - q);
        }
        let offsets = (0..1usize << k)
            .map(|j| {
                qubits.iter().enumerate().fold(0usize, |acc, (i, &q)| {
                    if (j >> (k - 1 - i)) & 1 == 1 {
                        acc | 1 << (n_qubits - 1 - q)
                    } else {
                        acc
                    }
                })
            })
            .collect();
        let bases = (0..1usize << n_qubits).filter(|b| b & mask == 0).collect();
        Self { offsets, bases }
    }

    pub fn local_dim(&self) -> usize {
        self.offsets.len()
    }

    /// `ψ ← (G ⊗ I) ψ`.
    pub fn apply_vec(&self, g: &CMatrix, psi: &mut [C64]) {
        let m = self.offsets.len();
        let mut buf = vec![C64::new(0.0, 0.0); m];
        for &b in &self.bases {
            for (j, &o) in self.offsets.iter().enumerate() {
                buf[j] = psi[b + o];
            }
            for (i, &o) in self.offsets.iter().enumerate() {
                let row = g.row(i);
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..m {
                    acc += row[j] * buf[j];
                }
                psi[b + o] = acc;
            }
        }
    }

    /// `M ← (G ⊗ I) M`.
    pub fn apply_left(&self, g: &CMatrix, mat: &mut CMatrix) {
        let m = self.offsets.len();
        let cols = mat.ncols();
        let mut buf = Array2::<C64>::zeros((m, cols));
        for &b in &self.bases {
            for (j, &o) in self.offsets.iter().enumerate() {
                buf.row_mut(j).assign(&mat.row(b + o));
            }
            for (i, &o) in self.offsets.iter().enumerate() {
                let mut row = mat.row_mut(b + o);
                row.fill(C64::new(0.0, 0.0));
                for j in 0..m {
                    let gij = g[[i, j]];
                    if gij != C64::new(0.0, 0.0) {
                        row.scaled_add(gij, &buf.row(j));
                    }
                }
            }
        }
    }

    /// Normalized partial trace `tr_rest(M) / dim_rest` onto the listed qubits.
    pub fn reduce(&self, mat: &CMatrix) -> CMatrix {
        let m = self.offsets.len();
        let mut out = Array2::zeros((m, m));
        for &b in &self.bases {
            for (i, &oi) in self.offsets.iter().enumerate() {
                for (j, &oj) in self.offsets.iter().enumerate() {
                    out[[i, j]] += mat[[b + oi, b + oj]];
                }
            }
        }
        out.mapv(|z: C64| z / self.bases.len() as f64)
    }

    /// The embedded operator `G ⊗ I` as a dense matrix.
    pub fn embed(&self, g: &CMatrix) -> CMatrix {
        let dim = self.bases.len() * self.offsets.len();
        let mut out = Array2::zeros((dim, dim));
        for &b in &self.bases {
            for (i, &oi) in self.offsets.iter().enumerate() {
                for (j, &oj) in self.offsets.iter().enumerate() {
                    out[[b + oi, b + oj]] = g[[i, j]];
                }
            }
        }
        out
    }
}

/// Embeds a local operator acting on `qubits` into an `n`-qubit register.
pub fn embed(g: &CMatrix, n_qubits: usize, qubits: &[usize]) -> CMatrix {
    LocalIndex::new(n_qubits, qubits).embed(g)
}

pub fn cvec(re_im: &[(f64, f64)]) -> CVector {
    Array1::from_iter(re_im.iter().map(|&(r, i)| C64::new(r, i)))
}
