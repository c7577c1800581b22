//! Error functionals: the state-dependent deviation `Δ(ρ)`, the worst-case
//! deviation `Δ`, and Lieb-Robinson truncation probes.

use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{domain, Result, StabError};
use crate::lattice::Region;
use crate::linalg::{self, UNITARY_TOL};
use crate::operators::{full_system, truncate, assemble_dense, LocalHamiltonian, Observable, TruncatedHamiltonian};
use crate::{CMatrix, CVector, C64};

/// `⊗_k (cos θ |0⟩ + e^{iφ} sin θ |1⟩)` on `n` qubits.
pub fn product_state(n: usize, theta: f64, phi: f64) -> CVector {
    let one = [C64::new(theta.cos(), 0.0), C64::from_polar(theta.sin(), phi)];
    let dim = 1usize << n;
    CVector::from_shape_fn(dim, |idx| (0..n).fold(C64::new(1.0, 0.0), |acc, q| acc * one[(idx >> (n - 1 - q)) & 1]))
}

/// A pure or mixed state on a register.
#[derive(Clone, Debug)]
pub enum QState {
    Pure(CVector),
    Mixed(CMatrix),
}

impl QState {
    pub fn dim(&self) -> usize {
        match self {
            QState::Pure(v) => v.len(),
            QState::Mixed(m) => m.nrows(),
        }
    }

    pub fn expectation(&self, a: &CMatrix) -> f64 {
        match self {
            QState::Pure(v) => linalg::expectation(a, v),
            QState::Mixed(m) => linalg::expectation_dm(a, m),
        }
    }
}

/// `|tr(O ρ_exact) − tr(O ρ_noisy)|` with `O` padded by identities on
/// `region`.
pub fn delta_state(obs: &Observable, region: &Region, exact: &QState, noisy: &QState) -> Result<f64> {
    if !obs.support.is_subset(region) {
        return domain("observable support is not contained in the truncated region");
    }
    let dim = 1usize << region.len();
    if exact.dim() != dim || noisy.dim() != dim {
        return domain("state dimension does not match the region");
    }
    let o = obs.embedded(region)?;
    Ok(delta_state_embedded(&o, exact, noisy))
}

/// `delta_state` with an already embedded observable.
pub fn delta_state_embedded(o: &CMatrix, exact: &QState, noisy: &QState) -> f64 {
    (exact.expectation(o) - noisy.expectation(o)).abs()
}

/// `‖U†OU − V†OV‖`.
pub fn delta_worst(o: &CMatrix, u: &CMatrix, v: &CMatrix) -> Result<f64> {
    for (name, w) in [("exact", u), ("noisy", v)] {
        let err = linalg::unitarity_error(w);
        if err > UNITARY_TOL {
            return domain(format!("{name} propagator is not unitary (deviation {err:e})"));
        }
    }
    let heis = |w: &CMatrix| linalg::dagger(w).dot(o).dot(w);
    Ok(linalg::operator_norm(&(heis(u) - heis(v))))
}

/// `‖ψ − ψ′‖₂`.
pub fn hs_distance(a: &CVector, b: &CVector) -> f64 {
    linalg::vec_norm(&(a - b))
}

/// One measured error with its coordinates.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorSample {
    pub delta_rho: f64,
    pub delta_wc: Option<f64>,
    pub hs_distance: Option<f64>,
    pub t: f64,
    pub delta: f64,
    pub n: Option<usize>,
    pub l: Option<i64>,
    pub model: String,
    pub seed: u64,
    pub trial: u64,
}

impl ErrorSample {
    /// Checks `Δ(ρ) ≤ 2‖O‖ ‖ψ−ψ′‖` and `Δ(ρ) ≤ Δ` when the quantities are
    /// present, with slack `tol`.
    pub fn check(&self, norm_o: f64, tol: f64) -> Result<()> {
        if let Some(hs) = self.hs_distance {
            if self.delta_rho > 2.0 * norm_o * hs + tol {
                return Err(StabError::Numerical(format!(
                    "Δ(ρ) = {} exceeds 2‖O‖‖ψ−ψ′‖ = {}",
                    self.delta_rho,
                    2.0 * norm_o * hs
                )));
            }
        }
        if let Some(wc) = self.delta_wc {
            if self.delta_rho > wc + tol {
                return Err(StabError::Numerical(format!("Δ(ρ) = {} exceeds Δ = {wc}", self.delta_rho)));
            }
        }
        Ok(())
    }
}

/// Heisenberg-picture `U†OU` on the register of `trunc`.
pub fn heisenberg(obs: &Observable, trunc: &TruncatedHamiltonian, t: f64) -> Result<CMatrix> {
    let h = assemble_dense(trunc)?;
    let u = linalg::expm_i_hermitian(&h, t)?;
    let o = obs.embedded(&trunc.region)?;
    Ok(linalg::dagger(&u).dot(&o).dot(&u))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPoint {
    pub l: i64,
    /// `‖U_l†OU_l − U_ref†OU_ref‖`.
    pub error: f64,
    /// `|supp O| ‖O‖ min(e^{−μl}(e^{μvt} − 1), 1)`.
    pub rhs: f64,
    /// The reference is the whole lattice, so `error` is exact.
    pub exact_reference: bool,
}

/// Truncation errors against the largest listed `l`. If that truncation
/// keeps every term, the reference is the exact finite-lattice evolution.
pub fn truncation_probe(ham: &LocalHamiltonian, obs: &Observable, t: f64, l_list: &[i64]) -> Result<Vec<TruncationPoint>> {
    let Some(&l_max) = l_list.iter().max() else {
        return domain("empty list of truncation lengths");
    };
    let reference = truncate(ham, obs, l_max)?;
    let exact_reference = reference.covers_all;
    let reference = if exact_reference { full_system(ham, obs)? } else { reference };
    let o_ref = heisenberg(obs, &reference, t)?;
    let c = ham.constants_for(obs);
    l_list
        .iter()
        .map(|&l| {
            let tr = truncate(ham, obs, l)?;
            let o_l = heisenberg(obs, &tr, t)?;
            let qubits = crate::operators::positions(&tr.region, &reference.region)?;
            let lifted = linalg::embed(&o_l, reference.n_qubits(), &qubits);
            let error = linalg::operator_norm(&(lifted - &o_ref));
            let rhs = if tr.covers_all { 0.0 } else { bounds::truncation_term(obs.norm, obs.support.len(), l, t, &c) };
            Ok(TruncationPoint { l, error, rhs, exact_reference })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{pauli, ModelSpec, ObservableSpec};
    use crate::rng::trial_stream;
    use rand::Rng;

    #[test]
    fn product_state_is_normalized_and_ordered() {
        let psi = product_state(3, 0.4, 0.7);
        assert!((linalg::vec_norm(&psi) - 1.0).abs() < 1e-14);
        let up = product_state(2, std::f64::consts::FRAC_PI_2, 0.0);
        assert!((up[3].re - 1.0).abs() < 1e-15);
        let first = product_state(1, 0.4, 0.0);
        assert!((psi[0].re - first[0].re.powi(3)).abs() < 1e-15);
    }

    #[test]
    fn identical_outputs_have_zero_error() {
        let psi = product_state(2, 0.3, 0.1);
        let o = pauli('Z').unwrap();
        let obs = Observable::new(Region::new(vec![vec![0]]), o).unwrap();
        let region = Region::new(vec![vec![0], vec![1]]);
        let s = QState::Pure(psi.clone());
        assert_eq!(delta_state(&obs, &region, &s, &s).unwrap(), 0.0);
        let outside = Region::new(vec![vec![1], vec![2]]);
        assert!(delta_state(&obs, &outside, &s, &s).is_err());
    }

    #[test]
    fn single_qubit_closed_form() {
        let z = pauli('Z').unwrap();
        let x = pauli('X').unwrap();
        let psi = product_state(1, 0.0, 0.0);
        for &(delta, t) in &[(0.1, 0.7), (0.3, 2.0), (0.05, 5.0)] {
            let hp = &z + &x.mapv(|c| c * delta);
            let exact = linalg::expm_i_hermitian(&z, t).unwrap().dot(&psi);
            let noisy = linalg::expm_i_hermitian(&hp, t).unwrap().dot(&psi);
            let got = delta_state_embedded(&z, &QState::Pure(exact), &QState::Pure(noisy));
            let w = (1.0f64 + delta * delta).sqrt();
            let expected = 2.0 * delta * delta * (w * t).sin().powi(2) / (w * w);
            assert!((got - expected).abs() < 1e-10, "{got} vs {expected}");
        }
    }

    #[test]
    fn worst_case_dominates_and_is_capped() {
        let mut rng = trial_stream(11, 0);
        let h = crate::operators::gue(4, &mut rng);
        let hp = &h + &crate::operators::gue(4, &mut rng).mapv(|c| c * 0.1);
        let o = linalg::embed(&pauli('Z').unwrap(), 2, &[0]);
        let u = linalg::expm_i_hermitian(&h, 1.0).unwrap();
        let v = linalg::expm_i_hermitian(&hp, 1.0).unwrap();
        let wc = delta_worst(&o, &u, &v).unwrap();
        assert!(wc <= 2.0 + 1e-12);
        for _ in 0..100 {
            let psi = CVector::from_shape_fn(4, |_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
            let psi = &psi / C64::new(linalg::vec_norm(&psi), 0.0);
            let ex = QState::Pure(u.dot(&psi));
            let no = QState::Pure(v.dot(&psi));
            let d = delta_state_embedded(&o, &ex, &no);
            assert!(d <= wc + 1e-12);
            assert!(d <= 2.0 * hs_distance(&u.dot(&psi), &v.dot(&psi)) + 1e-12);
        }
        let phase = v.mapv(|c| c * C64::from_polar(1.0, 0.9));
        assert!((delta_worst(&o, &u, &phase).unwrap() - wc).abs() < 1e-12);
        assert_eq!(delta_worst(&o, &u, &u).unwrap(), 0.0);
        assert!(delta_worst(&o, &u, &(v.mapv(|c| c * 2.0))).is_err());
    }

    #[test]
    fn truncation_probe_basics() {
        let ham = ModelSpec::tfim_chain(6, 1.0, 0.9, 0.5).build().unwrap();
        let obs = Observable::from_spec(&ObservableSpec::single(vec![0], 'Z'), &ham.lattice).unwrap();
        let at_zero = truncation_probe(&ham, &obs, 0.0, &[0, 1, 2, 4]).unwrap();
        assert!(at_zero.iter().all(|p| p.error < 1e-12));
        let pts = truncation_probe(&ham, &obs, 0.5, &[0, 1, 2, 4]).unwrap();
        assert!(pts.last().unwrap().error < 1e-12);
        assert!(pts.iter().all(|p| p.error <= p.rhs + 1e-12));
    }

    #[test]
    fn sample_invariants_are_checked() {
        let s = ErrorSample { delta_rho: 0.3, hs_distance: Some(0.1), ..Default::default() };
        assert!(s.check(1.0, 1e-12).is_err());
        let s = ErrorSample { delta_rho: 0.1, hs_distance: Some(0.1), delta_wc: Some(0.2), ..Default::default() };
        assert!(s.check(1.0, 1e-12).is_ok());
    }
}
