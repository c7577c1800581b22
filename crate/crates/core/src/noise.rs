//! Perturbed evolutions: noisy product formulas, analog evolution under
//! Gaussian-process noise, the white-noise stochastic Schrödinger equation
//! and Lindblad propagation.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, StabError};
use crate::linalg::{self, EigHermitian};
use crate::operators::{assemble_dense, sample_perturbation, EnsembleKind, TruncatedHamiltonian};
use crate::trotter::TrotterPlan;
use crate::{CMatrix, CVector, C64};

/// Digital gate-noise models.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DigitalModel {
    /// Gate generator `(t/n)(aH + δL)`.
    M1,
    /// Gate generator `(t/n)aH + δL`.
    M2,
    /// Gate generator `(t/n)aH + δ√(t/n) L`.
    DiscreteIto,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DigitalNoiseSpec {
    pub model: DigitalModel,
    pub delta: f64,
    #[serde(default)]
    pub ensemble: EnsembleKind,
}

impl DigitalNoiseSpec {
    /// Weight of `L` in the generator of one gate of a plan with step `t/n`.
    pub fn gate_weight(&self, tau: f64) -> f64 {
        match self.model {
            DigitalModel::M1 => self.delta * tau,
            DigitalModel::M2 => self.delta,
            DigitalModel::DiscreteIto => self.delta * tau.sqrt(),
        }
    }
}

/// Where per-gate perturbations come from.
pub enum PerturbationSource<'a, R: Rng + ?Sized> {
    /// A fresh draw for every gate.
    Random(&'a mut R),
    /// The same operator for every gate of a term, indexed by term position.
    Fixed(&'a [CMatrix]),
}

fn gate_unitary(h: &CMatrix, a: f64, tau: f64, l: &CMatrix, weight: f64) -> Result<CMatrix> {
    let g = h.mapv(|z| z * (a * tau)) + l.mapv(|z| z * weight);
    Ok(linalg::eigh(&g)?.propagator(1.0))
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return domain(format!("noise strength must be finite and non-negative, got {delta}"));
    }
    Ok(())
}

/// Visits each noisy gate in application order.
fn for_each_noisy_gate<R: Rng + ?Sized>(
    plan: &TrotterPlan,
    trunc: &TruncatedHamiltonian,
    t: f64,
    spec: &DigitalNoiseSpec,
    source: &mut PerturbationSource<'_, R>,
    mut apply: impl FnMut(usize, &CMatrix),
) -> Result<()> {
    check_delta(spec.delta)?;
    if let PerturbationSource::Fixed(ls) = source {
        if ls.len() != trunc.n_terms() {
            return domain(format!("{} fixed perturbations for {} terms", ls.len(), trunc.n_terms()));
        }
    }
    let tau = t / plan.n as f64;
    let weight = spec.gate_weight(tau);
    for g in plan.gates(trunc.n_terms()) {
        let term = &trunc.terms[g.term];
        let l = match source {
            PerturbationSource::Random(rng) => sample_perturbation(spec.ensemble, term.qubits.len(), *rng),
            PerturbationSource::Fixed(ls) => ls[g.term].clone(),
        };
        let v = gate_unitary(&term.matrix, g.coefficient, tau, &l, weight)?;
        apply(g.term, &v);
    }
    Ok(())
}

/// Dense noisy product `V^{(p)}_n(t)`.
pub fn perturbed_product_unitary<R: Rng + ?Sized>(
    plan: &TrotterPlan,
    trunc: &TruncatedHamiltonian,
    t: f64,
    spec: &DigitalNoiseSpec,
    mut source: PerturbationSource<'_, R>,
) -> Result<CMatrix> {
    if trunc.dim > crate::MAX_DIM {
        return Err(StabError::Capacity(format!("dimension {} exceeds {}", trunc.dim, crate::MAX_DIM)));
    }
    let mut u = linalg::identity(trunc.dim);
    for_each_noisy_gate(plan, trunc, t, spec, &mut source, |k, v| trunc.terms[k].index.apply_left(v, &mut u))?;
    Ok(u)
}

/// `V^{(p)}_n(t) ψ` without forming the dense product.
pub fn perturbed_product_state<R: Rng + ?Sized>(
    plan: &TrotterPlan,
    trunc: &TruncatedHamiltonian,
    t: f64,
    spec: &DigitalNoiseSpec,
    mut source: PerturbationSource<'_, R>,
    psi: &CVector,
) -> Result<CVector> {
    let mut out = psi.clone();
    let slice = out.as_slice_mut().expect("contiguous state");
    for_each_noisy_gate(plan, trunc, t, spec, &mut source, |k, v| trunc.terms[k].index.apply_vec(v, slice))?;
    Ok(out)
}

/// Draws one unit-norm direction per `(term, a)` pair, ordered term-major
/// and embedded in the truncated register.
pub fn sample_directions<R: Rng + ?Sized>(
    trunc: &TruncatedHamiltonian,
    m: usize,
    ensemble: EnsembleKind,
    rng: &mut R,
) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(m * trunc.n_terms());
    for term in &trunc.terms {
        for _ in 0..m {
            let x = sample_perturbation(ensemble, term.qubits.len(), rng);
            out.push(term.index.embed(&x));
        }
    }
    out
}

/// Samples Gaussian processes with covariance `exp(−(s−u)²/2λ²)` on a fixed
/// time grid. The Cholesky factor is computed once and shared.
#[derive(Clone, Debug)]
pub struct GaussianSampler {
    times: Vec<f64>,
    /// Lower Cholesky factor, row-major; `None` for `λ = ∞`.
    chol: Option<Vec<f64>>,
}

/// Diagonal jitter added to the covariance before factorization.
pub const CHOLESKY_JITTER: f64 = 1e-10;

impl GaussianSampler {
    /// `lambda = None` is the infinite correlation length.
    pub fn new(lambda: Option<f64>, times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return domain("a Gaussian path needs at least two grid points");
        }
        let Some(lam) = lambda else {
            return Ok(Self { times, chol: None });
        };
        if !(lam > 0.0) {
            return domain(format!("correlation length must be positive, got {lam}"));
        }
        let n = times.len();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let dt = times[i] - times[j];
                a[i * n + j] = (-dt * dt / (2.0 * lam * lam)).exp();
            }
            a[i * n + i] += CHOLESKY_JITTER;
        }
        for j in 0..n {
            let mut diag = a[j * n + j];
            for k in 0..j {
                diag -= a[j * n + k] * a[j * n + k];
            }
            if !(diag > 0.0) {
                return Err(StabError::Numerical(format!(
                    "covariance not positive definite at grid point {j}; the grid is too fine for λ = {lam}"
                )));
            }
            let ljj = diag.sqrt();
            a[j * n + j] = ljj;
            for i in (j + 1)..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= a[i * n + k] * a[j * n + k];
                }
                a[i * n + j] = s / ljj;
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                a[i * n + j] = 0.0;
            }
        }
        Ok(Self { times, chol: Some(a) })
    }

    /// Uniform grid on `[0, t_final]` with `n_grid` points.
    pub fn uniform(lambda: Option<f64>, t_final: f64, n_grid: usize) -> Result<Self> {
        if n_grid < 2 || !(t_final > 0.0) {
            return domain("need n_grid ≥ 2 and t_final > 0");
        }
        let times = (0..n_grid).map(|i| t_final * i as f64 / (n_grid - 1) as f64).collect();
        Self::new(lambda, times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// One path sampled on the grid.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.times.len();
        match &self.chol {
            None => vec![rng.sample::<f64, _>(StandardNormal); n],
            Some(l) => {
                let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                (0..n).map(|i| (0..=i).map(|k| l[i * n + k] * z[k]).sum()).collect()
            }
        }
    }

    /// Piecewise-linear interpolation of a sampled path.
    pub fn interpolate(&self, path: &[f64], s: f64) -> f64 {
        let ts = &self.times;
        if s <= ts[0] {
            return path[0];
        }
        let k = ts.partition_point(|&x| x <= s);
        if k >= ts.len() {
            return path[ts.len() - 1];
        }
        let w = (s - ts[k - 1]) / (ts[k] - ts[k - 1]);
        path[k - 1] * (1.0 - w) + path[k] * w
    }
}

/// Grid spacing for Gaussian paths: 8 points per correlation length and 64
/// per unit time, whichever is finer.
pub fn default_grid_dt(lambda: Option<f64>) -> f64 {
    match lambda {
        Some(l) => (1.0 / 64.0f64).min(l / 8.0),
        None => 1.0 / 64.0,
    }
}

/// Independent Gaussian paths sampled for every direction.
pub fn sample_gaussian_paths<R: Rng + ?Sized>(sampler: &GaussianSampler, channels: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..channels).map(|_| sampler.sample(rng)).collect()
}

/// Outcome of a time-dependent evolution sampled at checkpoints.
#[derive(Clone, Debug)]
pub struct Checkpoints {
    pub times: Vec<f64>,
    pub states: Vec<CVector>,
    /// Integrator diagnostic: halvings used, or norm drift for SDE paths.
    pub halvings: usize,
    pub max_norm_drift: f64,
}

fn check_checkpoints(times: &[f64]) -> Result<()> {
    if times.is_empty() || times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return domain("checkpoint times must be finite and non-negative");
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return domain("checkpoint times must be sorted");
    }
    Ok(())
}

/// Maximum number of step halvings before the analog integrator gives up.
pub const MAX_HALVINGS: usize = 12;

/// Evolves `ψ` under `H(s) = H_l + δ Σ_σ ξ_σ(s) X_σ`, with `ξ_σ` the
/// piecewise-linear interpolants of `paths` on `sampler`'s grid.
///
/// Steps are piecewise constant at segment midpoints; the step is halved
/// until successive results agree to `tol` at every checkpoint.
#[allow(clippy::too_many_arguments)]
pub fn evolve_analog(
    trunc: &TruncatedHamiltonian,
    directions: &[CMatrix],
    sampler: &GaussianSampler,
    paths: &[Vec<f64>],
    delta: f64,
    psi: &CVector,
    checkpoints: &[f64],
    tol: f64,
) -> Result<Checkpoints> {
    check_delta(delta)?;
    check_checkpoints(checkpoints)?;
    if directions.len() != paths.len() {
        return domain("one path per direction is required");
    }
    if !(tol > 0.0) {
        return domain("tolerance must be positive");
    }
    let h0 = assemble_dense(trunc)?;
    let constant = sampler.chol.is_none() || delta == 0.0;
    if constant {
        let mut h = h0;
        for (x, path) in directions.iter().zip(paths) {
            h = h + x.mapv(|z| z * (delta * path[0]));
        }
        let eig = linalg::eigh(&h)?;
        let states = checkpoints.iter().map(|&t| eig.evolve(t, psi)).collect();
        return Ok(Checkpoints { times: checkpoints.to_vec(), states, halvings: 0, max_norm_drift: 0.0 });
    }
    let base_dt = sampler.times[1] - sampler.times[0];
    let hamiltonian_at = |s: f64| -> CMatrix {
        let mut h = h0.clone();
        for (x, path) in directions.iter().zip(paths) {
            let w = delta * sampler.interpolate(path, s);
            h.scaled_add(C64::new(w, 0.0), x);
        }
        h
    };
    let run = |refine: usize| -> Vec<CVector> {
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut state = psi.clone();
        let mut now = 0.0;
        for &target in checkpoints {
            let seg = target - now;
            if seg > 0.0 {
                let steps = ((seg / base_dt).ceil() as usize).max(1) * refine;
                let h = seg / steps as f64;
                for k in 0..steps {
                    let mid = now + (k as f64 + 0.5) * h;
                    state = linalg::expm_action(&hamiltonian_at(mid), h, &state);
                }
            }
            now = target;
            out.push(state.clone());
        }
        out
    };
    let mut prev = run(1);
    for halving in 1..=MAX_HALVINGS {
        let next = run(1 << halving);
        let change = prev.iter().zip(&next).map(|(a, b)| linalg::vec_norm(&(a - b))).fold(0.0, f64::max);
        if change < tol {
            return Ok(Checkpoints { times: checkpoints.to_vec(), states: next, halvings: halving, max_norm_drift: 0.0 });
        }
        prev = next;
    }
    Err(StabError::Numerical(format!("analog integrator did not reach tolerance {tol:e} after {MAX_HALVINGS} halvings")))
}

/// `e^{−i t (H_l + δ Σ_γ L_γ)}` for time-independent perturbations, one per
/// retained term, given on the term supports.
pub fn evolve_analog_constant(trunc: &TruncatedHamiltonian, perturbations: &[CMatrix], delta: f64, t: f64) -> Result<CMatrix> {
    check_delta(delta)?;
    if perturbations.len() != trunc.n_terms() {
        return domain(format!("{} perturbations for {} terms", perturbations.len(), trunc.n_terms()));
    }
    let mut h = assemble_dense(trunc)?;
    for (term, l) in trunc.terms.iter().zip(perturbations) {
        h = h + term.index.embed(l).mapv(|z| z * delta);
    }
    linalg::expm_i_hermitian(&h, t)
}

/// Step control for the white-noise integrator.
///
/// Each base step of length about `dt` draws `fine` Wiener increments per
/// channel and is integrated with `refine` sub-steps, so runs that differ
/// only in `refine` share the same Brownian path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdeSteps {
    pub dt: f64,
    pub refine: usize,
    pub fine: usize,
}

impl SdeSteps {
    pub fn new(dt: f64) -> Self {
        Self { dt, refine: 1, fine: 1 }
    }

    /// Default step `min(0.01, 0.001/δ²)`.
    pub fn default_for(delta: f64) -> Self {
        let dt = if delta > 0.0 { (0.01f64).min(0.001 / (delta * delta)) } else { 0.01 };
        Self::new(dt)
    }
}

/// Dense pieces of the white-noise equation on the truncated register.
pub struct WhiteNoiseSystem {
    eig: EigHermitian,
    directions: Vec<CMatrix>,
    square_sum: CMatrix,
}

impl WhiteNoiseSystem {
    pub fn new(trunc: &TruncatedHamiltonian, directions: Vec<CMatrix>) -> Result<Self> {
        let h = assemble_dense(trunc)?;
        Self::from_dense(&h, directions)
    }

    pub fn from_dense(h: &CMatrix, directions: Vec<CMatrix>) -> Result<Self> {
        let eig = linalg::eigh(h)?;
        let mut square_sum = linalg::zeros(h.nrows());
        for x in &directions {
            if x.dim() != h.dim() {
                return domain("direction shape does not match the Hamiltonian");
            }
            square_sum = square_sum + x.dot(x);
        }
        Ok(Self { eig, directions, square_sum })
    }
}

/// Pathwise norms outside this range are flagged.
pub const NORM_WARNING_RANGE: (f64, f64) = (0.5, 1.5);

/// Integrates `dψ = (−iH − δ²/2 Σ X²)ψ dt − iδ Σ Xψ dW` with exponential
/// Euler–Maruyama steps:
/// `ψ ← e^{−iH h}(ψ − (δ²/2) h ΣX²ψ − iδ Σ Xψ ΔW)`.
///
/// The state is never renormalized; the largest `|‖ψ‖ − 1|` is recorded.
pub fn evolve_white_noise<R: Rng + ?Sized>(
    sys: &WhiteNoiseSystem,
    delta: f64,
    psi: &CVector,
    checkpoints: &[f64],
    steps: SdeSteps,
    rng: &mut R,
) -> Result<Checkpoints> {
    check_delta(delta)?;
    check_checkpoints(checkpoints)?;
    if !(steps.dt > 0.0) || steps.refine == 0 || steps.fine == 0 || !steps.fine.is_multiple_of(steps.refine) {
        return domain("need dt > 0 and refine dividing fine");
    }
    let channels = sys.directions.len();
    let group = steps.fine / steps.refine;
    let mut state = psi.clone();
    let mut now = 0.0;
    let mut drift: f64 = 0.0;
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut fine_dw = vec![0.0; steps.fine * channels];
    for &target in checkpoints {
        let seg = target - now;
        if seg > 0.0 {
            let base_steps = ((seg / steps.dt).ceil() as usize).max(1);
            let base_h = seg / base_steps as f64;
            let h = base_h / steps.refine as f64;
            let prop = sys.eig.propagator(h);
            let sd = (base_h / steps.fine as f64).sqrt();
            for _ in 0..base_steps {
                for w in fine_dw.iter_mut() {
                    *w = sd * rng.sample::<f64, _>(StandardNormal);
                }
                for r in 0..steps.refine {
                    let mut next = &state - &sys.square_sum.dot(&state).mapv(|z| z * (0.5 * delta * delta * h));
                    for (c, x) in sys.directions.iter().enumerate() {
                        let dw: f64 = (0..group).map(|g| fine_dw[(r * group + g) * channels + c]).sum();
                        next.scaled_add(C64::new(0.0, -delta * dw), &x.dot(&state));
                    }
                    state = prop.dot(&next);
                }
                drift = drift.max((linalg::vec_norm(&state) - 1.0).abs());
            }
        }
        now = target;
        out.push(state.clone());
    }
    Ok(Checkpoints { times: checkpoints.to_vec(), states: out, halvings: 0, max_norm_drift: drift })
}

/// Hermitian jump operators with `‖L_a‖ ≤ 1`.
#[derive(Clone, Debug)]
pub struct LindbladSpec {
    pub jumps: Vec<CMatrix>,
    pub delta: f64,
}

/// Superoperator of `ρ ↦ −i[H,ρ] + δ² Σ_a (L_a ρ L_a − ½{L_a², ρ})` acting
/// on row-major `vec(ρ)`, where `vec(AρB) = (A ⊗ Bᵀ) vec(ρ)`.
pub fn lindblad_superoperator(h: &CMatrix, spec: &LindbladSpec) -> Result<CMatrix> {
    check_delta(spec.delta)?;
    let n = h.nrows();
    let id = linalg::identity(n);
    let mi = C64::new(0.0, -1.0);
    let mut sup = (linalg::kron(h, &id) - linalg::kron(&id, &h.t().to_owned())).mapv(|z| z * mi);
    let d2 = spec.delta * spec.delta;
    for l in &spec.jumps {
        if l.dim() != h.dim() || !linalg::is_hermitian(l) {
            return domain("jump operators must be Hermitian on the full register");
        }
        if linalg::operator_norm(l) > 1.0 + 1e-12 {
            return domain("jump operators must have norm at most one");
        }
        let l2 = l.dot(l);
        let diss = linalg::kron(l, &l.t().to_owned())
            - linalg::kron(&l2, &id).mapv(|z| z * 0.5)
            - linalg::kron(&id, &l2.t().to_owned()).mapv(|z| z * 0.5);
        sup = sup + diss.mapv(|z| z * d2);
    }
    Ok(sup)
}

/// Largest register dimension propagated with the dense superoperator.
pub const LINDBLAD_DIRECT_MAX_DIM: usize = 64;

/// `e^{t𝓛} ρ₀` with the dense superoperator.
pub fn lindblad_propagate(h: &CMatrix, spec: &LindbladSpec, rho0: &CMatrix, t: f64) -> Result<CMatrix> {
    let n = h.nrows();
    if n > LINDBLAD_DIRECT_MAX_DIM {
        return Err(StabError::Capacity(format!(
            "direct Lindblad propagation needs dimension ≤ {LINDBLAD_DIRECT_MAX_DIM}, got {n}; use trajectory mode"
        )));
    }
    if rho0.dim() != h.dim() {
        return domain("density matrix shape does not match the Hamiltonian");
    }
    let sup = lindblad_superoperator(h, spec)?;
    // e^{t𝓛} = e^{−i t (i𝓛)}
    let gen = sup.mapv(|z| z * C64::new(0.0, 1.0));
    let v = ndarray::Array1::from_iter(rho0.iter().copied());
    let out = linalg::expm_action(&gen, t, &v);
    let rho = out.into_shape_with_order((n, n)).map_err(|e| StabError::Numerical(e.to_string()))?;
    let rho = linalg::symmetrize(&rho);
    linalg::check_density(&rho)?;
    Ok(rho)
}

/// Averages `|ψ⟩⟨ψ|` over white-noise paths, each drawn from the generator
/// returned by `rng_for(path)`. The jumps act as the noise directions.
pub fn lindblad_trajectories<R: Rng>(
    h: &CMatrix,
    spec: &LindbladSpec,
    psi: &CVector,
    t: f64,
    steps: SdeSteps,
    paths: usize,
    mut rng_for: impl FnMut(usize) -> R,
) -> Result<CMatrix> {
    if paths == 0 {
        return domain("trajectory mode needs at least one path");
    }
    let sys = WhiteNoiseSystem::from_dense(h, spec.jumps.clone())?;
    let mut acc = linalg::zeros(h.nrows());
    for k in 0..paths {
        let mut rng = rng_for(k);
        let out = evolve_white_noise(&sys, spec.delta, psi, &[t], steps, &mut rng)?;
        acc = acc + linalg::outer(&out.states[0]);
    }
    Ok(acc.mapv(|z| z / paths as f64))
}

/// Jumps whose Lindbladian is the small-step average of discrete-Ito
/// circuits with Pauli-Rademacher perturbations: for every retained term,
/// `√(Υ/(4^k−1)) P` over the non-identity Pauli strings `P` on its support.
pub fn discrete_ito_jumps(trunc: &TruncatedHamiltonian, upsilon: usize) -> Result<Vec<CMatrix>> {
    let mut jumps = Vec::new();
    for term in &trunc.terms {
        let k = term.qubits.len();
        let strings = crate::operators::nontrivial_paulis(k);
        let w = (upsilon as f64 / strings.len() as f64).sqrt();
        if w > 1.0 + 1e-12 {
            return domain("jump weight exceeds one; use a larger support or lower order");
        }
        for s in strings {
            let p = crate::operators::pauli_string(&s)?;
            jumps.push(term.index.embed(&p).mapv(|z| z * w));
        }
    }
    Ok(jumps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{full_system, pauli, ModelSpec, Observable, ObservableSpec};
    use crate::rng::trial_stream;
    use crate::trotter::{product_unitary, suzuki_plan};

    fn tfim(n: usize) -> TruncatedHamiltonian {
        let ham = ModelSpec::tfim_chain(n, 1.0, 0.9, 0.5).build().unwrap();
        let obs = Observable::from_spec(&ObservableSpec::single(vec![0], 'Z'), &ham.lattice).unwrap();
        full_system(&ham, &obs).unwrap()
    }

    #[test]
    fn zero_noise_matches_product() {
        let tr = tfim(3);
        let plan = suzuki_plan(2, 5).unwrap();
        let exact = product_unitary(&plan, &tr, 0.7).unwrap();
        for model in [DigitalModel::M1, DigitalModel::M2, DigitalModel::DiscreteIto] {
            let spec = DigitalNoiseSpec { model, delta: 0.0, ensemble: EnsembleKind::GueNormalized };
            let mut rng = trial_stream(1, 0);
            let v = perturbed_product_unitary(&plan, &tr, 0.7, &spec, PerturbationSource::Random(&mut rng)).unwrap();
            assert!(linalg::operator_norm(&(v - &exact)) < 1e-13);
        }
    }

    #[test]
    fn noisy_products_are_unitary_and_telescope() {
        let tr = tfim(3);
        let plan = suzuki_plan(2, 3).unwrap();
        let exact = product_unitary(&plan, &tr, 1.0).unwrap();
        for model in [DigitalModel::M1, DigitalModel::M2, DigitalModel::DiscreteIto] {
            let spec = DigitalNoiseSpec { model, delta: 0.05, ensemble: EnsembleKind::GueNormalized };
            let mut rng = trial_stream(2, 0);
            let v = perturbed_product_unitary(&plan, &tr, 1.0, &spec, PerturbationSource::Random(&mut rng)).unwrap();
            assert!(linalg::unitarity_error(&v) < 1e-9);
            // each gate moves by at most its generator change
            let per_gate = spec.gate_weight(1.0 / 3.0);
            let total = per_gate * plan.n_gates(tr.n_terms()) as f64;
            assert!(linalg::operator_norm(&(v - &exact)) <= total + 1e-12);
        }
    }

    #[test]
    fn m1_single_gate_closed_form() {
        let (tau, delta) = (0.3, 0.2);
        let z = pauli('Z').unwrap();
        let x = pauli('X').unwrap();
        let spec = DigitalNoiseSpec { model: DigitalModel::M1, delta, ensemble: EnsembleKind::GueNormalized };
        let v = gate_unitary(&z, 1.0, tau, &x, spec.gate_weight(tau)).unwrap();
        let u = linalg::expm_i_hermitian(&z, tau).unwrap();
        let dist = linalg::operator_norm(&(v - u));
        // rotation angle between the two axes, to leading order
        let leading = 2.0 * (delta * tau / 2.0).sin();
        assert!(dist <= delta * tau + 1e-12);
        assert!((dist - leading).abs() < 0.05 * leading);
    }

    #[test]
    fn discrete_ito_weight_scales_with_root_n() {
        let spec = DigitalNoiseSpec { model: DigitalModel::DiscreteIto, delta: 0.3, ensemble: EnsembleKind::GueNormalized };
        let a = spec.gate_weight(1.0 / 8.0);
        let b = spec.gate_weight(1.0 / 16.0);
        assert!((a / b - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn infinite_correlation_length_gives_constant_paths() {
        let s = GaussianSampler::uniform(None, 2.0, 50).unwrap();
        let mut rng = trial_stream(3, 0);
        let p = s.sample(&mut rng);
        assert!(p.iter().all(|&x| x == p[0]));
    }

    #[test]
    fn gaussian_path_lag_one_correlation() {
        let lam = 0.2;
        let s = GaussianSampler::uniform(Some(lam), 1.0, 41).unwrap();
        let dt = 1.0 / 40.0;
        let mut rng = trial_stream(4, 0);
        let (mut lag, mut var, mut cross) = (0.0, 0.0, 0.0);
        let trials = 10_000;
        for _ in 0..trials {
            let paths = sample_gaussian_paths(&s, 2, &mut rng);
            lag += paths[0][10] * paths[0][11];
            var += paths[0][10] * paths[0][10];
            cross += paths[0][10] * paths[1][10];
        }
        let expected = (-dt * dt / (2.0 * lam * lam)).exp();
        assert!((lag / trials as f64 - expected).abs() < 0.02 + 0.02);
        assert!((var / trials as f64 - 1.0).abs() < 0.05);
        assert!((cross / trials as f64).abs() < 0.03);
    }

    #[test]
    fn analog_without_noise_is_exact() {
        let tr = tfim(3);
        let dirs = sample_directions(&tr, 1, EnsembleKind::GueNormalized, &mut trial_stream(5, 0));
        let s = GaussianSampler::uniform(Some(0.3), 2.0, 100).unwrap();
        let paths = sample_gaussian_paths(&s, dirs.len(), &mut trial_stream(5, 1));
        let psi = crate::metrics::product_state(3, 0.4, 0.0);
        let out = evolve_analog(&tr, &dirs, &s, &paths, 0.0, &psi, &[0.5, 2.0], 1e-9).unwrap();
        let h = assemble_dense(&tr).unwrap();
        let exact = linalg::eigh(&h).unwrap().evolve(2.0, &psi);
        assert!(linalg::vec_norm(&(&out.states[1] - &exact)) < 1e-9);
    }

    #[test]
    fn analog_time_dependent_converges() {
        let tr = tfim(2);
        let dirs = sample_directions(&tr, 1, EnsembleKind::GueNormalized, &mut trial_stream(6, 0));
        let s = GaussianSampler::uniform(Some(0.2), 1.0, 65).unwrap();
        let paths = sample_gaussian_paths(&s, dirs.len(), &mut trial_stream(6, 1));
        let psi = crate::metrics::product_state(2, 0.4, 0.0);
        let out = evolve_analog(&tr, &dirs, &s, &paths, 0.3, &psi, &[1.0], 1e-8).unwrap();
        assert!((linalg::vec_norm(&out.states[0]) - 1.0).abs() < 1e-10);
        assert!(out.halvings >= 1);
    }

    #[test]
    fn white_noise_without_noise_is_exact() {
        let tr = tfim(3);
        let dirs = sample_directions(&tr, 1, EnsembleKind::GueNormalized, &mut trial_stream(7, 0));
        let sys = WhiteNoiseSystem::new(&tr, dirs).unwrap();
        let psi = crate::metrics::product_state(3, 0.4, 0.0);
        let out = evolve_white_noise(&sys, 0.0, &psi, &[1.3], SdeSteps::new(0.01), &mut trial_stream(7, 1)).unwrap();
        let h = assemble_dense(&tr).unwrap();
        let exact = linalg::eigh(&h).unwrap().evolve(1.3, &psi);
        assert!(linalg::vec_norm(&(&out.states[0] - &exact)) < 1e-6);
    }

    #[test]
    fn white_noise_norm_is_a_martingale() {
        let tr = tfim(2);
        let dirs = sample_directions(&tr, 1, EnsembleKind::GueNormalized, &mut trial_stream(8, 0));
        let sys = WhiteNoiseSystem::new(&tr, dirs).unwrap();
        let psi = crate::metrics::product_state(2, 0.4, 0.0);
        let trials = 1000;
        let norms: Vec<f64> = (0..trials)
            .map(|k| {
                let out = evolve_white_noise(&sys, 0.3, &psi, &[1.0], SdeSteps::new(0.01), &mut trial_stream(8, k + 1)).unwrap();
                linalg::vec_norm(&out.states[0]).powi(2)
            })
            .collect();
        let mean = norms.iter().sum::<f64>() / trials as f64;
        let var = norms.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let se = (var / trials as f64).sqrt().max(1e-6);
        assert!((mean - 1.0).abs() <= 3.0 * se + 1e-3, "mean {mean}, se {se}");
    }

    #[test]
    fn dephasing_closed_form() {
        let h = linalg::zeros(2);
        let spec = LindbladSpec { jumps: vec![pauli('Z').unwrap()], delta: 0.4 };
        let plus = crate::metrics::product_state(1, std::f64::consts::FRAC_PI_4, 0.0);
        let rho0 = linalg::outer(&plus);
        let t = 1.7;
        let rho = lindblad_propagate(&h, &spec, &rho0, t).unwrap();
        let expected = rho0[[0, 1]] * (-2.0 * 0.16 * t).exp();
        assert!((rho[[0, 1]] - expected).norm() < 1e-8);
    }

    #[test]
    fn lindblad_without_noise_is_unitary_conjugation() {
        let tr = tfim(2);
        let h = assemble_dense(&tr).unwrap();
        let spec = LindbladSpec { jumps: vec![], delta: 0.0 };
        let psi = crate::metrics::product_state(2, 0.4, 0.0);
        let rho = lindblad_propagate(&h, &spec, &linalg::outer(&psi), 0.9).unwrap();
        let exact = linalg::outer(&linalg::eigh(&h).unwrap().evolve(0.9, &psi));
        assert!(linalg::max_abs(&(rho - exact)) < 1e-10);
    }

    #[test]
    fn lindblad_output_is_a_state() {
        let tr = tfim(2);
        let h = assemble_dense(&tr).unwrap();
        let jumps = discrete_ito_jumps(&tr, 2).unwrap();
        let spec = LindbladSpec { jumps, delta: 0.5 };
        let psi = crate::metrics::product_state(2, 0.4, 0.0);
        let rho = lindblad_propagate(&h, &spec, &linalg::outer(&psi), 2.0).unwrap();
        assert!((linalg::trace(&rho).re - 1.0).abs() < 1e-9);
        assert!(linalg::hermiticity_error(&rho) < 1e-10);
        assert!(linalg::eigvalsh(&rho).unwrap()[0] > -1e-8);
    }

    #[test]
    fn discrete_ito_jump_count() {
        let tr = tfim(3);
        let jumps = discrete_ito_jumps(&tr, 2).unwrap();
        assert_eq!(jumps.len(), 2 * 15);
        let w2: f64 = 2.0 / 15.0;
        assert!((linalg::operator_norm(&jumps[0]) - w2.sqrt()).abs() < 1e-12);
    }
}
