//! Seeded Monte Carlo experiments: configuration, trial execution, sweeps
//! with incremental persistence, scaling fits, tail estimates and bound
//! audits.
//!
//! Every trial draws from its own stream `(master_seed, trial_index)`, so a
//! sweep gives identical results however its trials are scheduled.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use statrs::function::beta::beta_reg;

use crate::bounds::{self, BoundParams, BoundReport, TheoremId};
use crate::error::{domain, Result, StabError};
use crate::linalg::{self, EigHermitian};
use crate::metrics::{self, ErrorSample};
use crate::noise::{
    self, DigitalModel, DigitalNoiseSpec, GaussianSampler, LindbladSpec, PerturbationSource, SdeSteps, WhiteNoiseSystem,
};
use crate::operators::{
    assemble_dense, full_system, sample_perturbation, truncate, EnsembleKind, LocalHamiltonian, ModelSpec, Observable,
    ObservableSpec, TruncatedHamiltonian,
};
use crate::rng::{self, StreamRng};
use crate::trotter::{self, suzuki_plan, TrotterPlan};
use crate::{CMatrix, CVector, C64};

/// Initial product state `⊗(cos θ|0⟩ + e^{iφ} sin θ|1⟩)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    #[serde(default = "product_kind")]
    pub kind: String,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default)]
    pub phi: f64,
}

fn product_kind() -> String {
    "product".into()
}

fn default_theta() -> f64 {
    0.4
}

impl Default for InitialState {
    fn default() -> Self {
        Self { kind: product_kind(), theta: default_theta(), phi: 0.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// Noiseless: exact truncated evolution, or the product formula when a
    /// Trotter number is given.
    None,
    M1,
    M2,
    DiscreteIto,
    /// One random time-independent perturbation per term.
    AnalogConstant,
    GaussianProcess,
    WhiteNoise,
    Lindblad,
}

impl NoiseModel {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseModel::None => "none",
            NoiseModel::M1 => "m1",
            NoiseModel::M2 => "m2",
            NoiseModel::DiscreteIto => "discrete_ito",
            NoiseModel::AnalogConstant => "analog_constant",
            NoiseModel::GaussianProcess => "gaussian_process",
            NoiseModel::WhiteNoise => "white_noise",
            NoiseModel::Lindblad => "lindblad",
        }
    }

    fn digital(self) -> Option<DigitalModel> {
        match self {
            NoiseModel::M1 => Some(DigitalModel::M1),
            NoiseModel::M2 => Some(DigitalModel::M2),
            NoiseModel::DiscreteIto => Some(DigitalModel::DiscreteIto),
            _ => None,
        }
    }
}

/// Noise section of the configuration. `delta` and `lambda` are used when
/// the grid does not list them; `lambda = null` is the infinite correlation
/// length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub model: NoiseModel,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "one")]
    pub m: usize,
    #[serde(default)]
    pub ensemble: EnsembleKind,
    /// Integrator step for white noise, or the path grid spacing for
    /// Gaussian processes.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Number of path grid points; overrides `dt` for Gaussian processes.
    #[serde(default)]
    pub n_grid: Option<usize>,
    /// Convergence tolerance of the time-dependent analog integrator.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// White-noise paths per trial when the Lindblad register is too large
    /// for the dense superoperator.
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    /// Draw the Gaussian and white-noise directions once per sweep instead
    /// of once per trial, so trials differ only in their noise paths.
    #[serde(default)]
    pub fixed_directions: bool,
}

fn one() -> usize {
    1
}

fn default_tol() -> f64 {
    1e-8
}

fn default_trajectories() -> usize {
    200
}

/// Grid axes. Empty `delta` and `lambda` fall back to the noise section,
/// empty `p` to 2, empty `n` to no product formula and empty `l` to the
/// whole lattice.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub t: Vec<f64>,
    #[serde(default)]
    pub delta: Vec<f64>,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub l: Vec<i64>,
    #[serde(default)]
    pub p: Vec<usize>,
    #[serde(default)]
    pub lambda: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub observable: ObservableSpec,
    #[serde(default)]
    pub initial_state: InitialState,
    pub noise: NoiseConfig,
    pub grid: Grid,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Bounds to evaluate and audit; empty selects the natural bound of the
    /// noise model.
    #[serde(default)]
    pub theorems: Vec<TheoremId>,
    /// Also compute the worst-case deviation from the propagators. For
    /// analog constant noise and the M1/M2 models the first trials use the
    /// fixed adversarial probes.
    #[serde(default)]
    pub worst_case: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| StabError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Canonical pretty JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Applies `dotted.key=value` overrides. Values are parsed as JSON and
    /// fall back to strings; the result is re-validated against the schema.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        let mut v = serde_json::to_value(self)?;
        for o in overrides {
            let (key, raw) = o.split_once('=').ok_or_else(|| StabError::Config(format!("override {o:?} is not key=value")))?;
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            let mut cur = &mut v;
            let parts: Vec<&str> = key.split('.').collect();
            for (i, part) in parts.iter().enumerate() {
                let obj = cur.as_object_mut().ok_or_else(|| StabError::Config(format!("override key {key:?} does not name an object field")))?;
                if i + 1 == parts.len() {
                    obj.insert(part.to_string(), value.clone());
                    break;
                }
                cur = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
            }
        }
        serde_json::from_value(v).map_err(|e| StabError::Config(format!("after overrides: {e}")))
    }

    /// Bounds evaluated at every point.
    pub fn theorem_ids(&self) -> Vec<TheoremId> {
        if !self.theorems.is_empty() {
            return self.theorems.clone();
        }
        let wc = self.worst_case;
        let has_n = !self.grid.n.is_empty();
        vec![match self.noise.model {
            NoiseModel::None if has_n => TheoremId::Trotter,
            NoiseModel::None => TheoremId::Truncation,
            NoiseModel::M1 if wc => TheoremId::T2,
            NoiseModel::M1 => TheoremId::T6,
            NoiseModel::M2 if wc => TheoremId::T3,
            NoiseModel::M2 => TheoremId::T7,
            NoiseModel::DiscreteIto => TheoremId::T8,
            NoiseModel::AnalogConstant if wc => TheoremId::T1,
            NoiseModel::AnalogConstant => TheoremId::T5b,
            NoiseModel::GaussianProcess => TheoremId::T4,
            NoiseModel::WhiteNoise => TheoremId::T5,
            NoiseModel::Lindblad => TheoremId::T9,
        }]
    }

    /// All grid points in sweep order (`t` varies fastest).
    pub fn points(&self) -> Result<Vec<GridPoint>> {
        if self.grid.t.is_empty() {
            return Err(StabError::Config("grid.t must not be empty".into()));
        }
        if self.trials == 0 {
            return Err(StabError::Config("trials must be at least 1".into()));
        }
        let deltas = if self.grid.delta.is_empty() { vec![self.noise.delta] } else { self.grid.delta.clone() };
        let lambdas = if self.grid.lambda.is_empty() { vec![self.noise.lambda] } else { self.grid.lambda.clone() };
        let ps = if self.grid.p.is_empty() { vec![2] } else { self.grid.p.clone() };
        let ns: Vec<Option<usize>> = if self.grid.n.is_empty() { vec![None] } else { self.grid.n.iter().map(|&n| Some(n)).collect() };
        let ls: Vec<Option<i64>> = if self.grid.l.is_empty() { vec![None] } else { self.grid.l.iter().map(|&l| Some(l)).collect() };
        let mut out = Vec::new();
        for &p in &ps {
            for &n in &ns {
                for &l in &ls {
                    for &lambda in &lambdas {
                        for &delta in &deltas {
                            for &t in &self.grid.t {
                                if !(t >= 0.0 && t.is_finite()) || !(delta >= 0.0 && delta.is_finite()) {
                                    return Err(StabError::Config(format!("invalid grid values t={t}, delta={delta}")));
                                }
                                out.push(GridPoint { index: out.len(), t, delta, n, l, p, lambda });
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// One grid point. `n = None` means no product formula; `l = None` the
/// whole lattice; `lambda = None` an infinite correlation length.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub index: usize,
    pub t: f64,
    pub delta: f64,
    pub n: Option<usize>,
    pub l: Option<i64>,
    pub p: usize,
    pub lambda: Option<f64>,
}

/// Full-lattice registers up to this many sites serve as the exact reference.
pub const EXACT_REFERENCE_MAX_SITES: usize = 10;

/// Hamiltonian, observable and exact reference shared by all points.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub ham: LocalHamiltonian,
    pub obs: Observable,
    pub points: Vec<GridPoint>,
    reference: Option<Reference>,
}

struct Reference {
    trunc: TruncatedHamiltonian,
    eig: EigHermitian,
    o: CMatrix,
    psi0: CVector,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        if config.initial_state.kind != "product" {
            return Err(StabError::Config(format!("unsupported initial state kind {:?}", config.initial_state.kind)));
        }
        let ham = config.model.build().map_err(to_config)?;
        let obs = Observable::from_spec(&config.observable, &ham.lattice).map_err(to_config)?;
        let points = config.points()?;
        for pt in &points {
            if let Some(l) = pt.l {
                truncate(&ham, &obs, l)?;
            }
            if config.noise.model.digital().is_some() && pt.n.is_none() {
                return Err(StabError::Config("digital noise models need grid.n".into()));
            }
            if pt.n.is_some() {
                suzuki_plan(pt.p, pt.n.unwrap_or(1)).map_err(to_config)?;
            }
        }
        let reference = if ham.lattice.n_sites() <= EXACT_REFERENCE_MAX_SITES {
            let trunc = full_system(&ham, &obs)?;
            let h = assemble_dense(&trunc)?;
            let eig = linalg::eigh(&h)?;
            let o = obs.embedded(&trunc.region)?;
            let th = &config.initial_state;
            let psi0 = metrics::product_state(trunc.n_qubits(), th.theta, th.phi);
            Some(Reference { trunc, eig, o, psi0 })
        } else {
            None
        };
        Ok(Self { config, ham, obs, points, reference })
    }

    /// Per-point data shared by every trial at `point`.
    pub fn context(&self, point: &GridPoint) -> Result<PointContext<'_>> {
        PointContext::new(self, *point)
    }
}

fn to_config(e: StabError) -> StabError {
    match e {
        StabError::Domain(m) => StabError::Config(m),
        other => other,
    }
}

/// Number of fixed probes returned by [`adversarial_probes`]; with
/// `worst_case` set, trials below this index use them.
pub const ADVERSARIAL_PROBES: usize = 3;

/// Fixed adversarial perturbation families for worst-case probes: all-X,
/// all-Z, and the direction of `i[H_γ, O(t/2)]` reduced to each term.
pub fn adversarial_probes(trunc: &TruncatedHamiltonian, obs: &Observable, t: f64) -> Result<Vec<(String, Vec<CMatrix>)>> {
    let uniform = |letter: char| -> Result<Vec<CMatrix>> {
        trunc
            .terms
            .iter()
            .map(|term| crate::operators::pauli_string(&letter.to_string().repeat(term.qubits.len())))
            .collect()
    };
    let o_half = metrics::heisenberg(obs, trunc, t / 2.0)?;
    let aligned = trunc
        .terms
        .iter()
        .map(|term| {
            let h = term.index.embed(&term.matrix);
            let c = linalg::commutator(&h, &o_half).mapv(|z| z * C64::new(0.0, 1.0));
            let local = linalg::symmetrize(&term.index.reduce(&c));
            let norm = linalg::operator_norm(&local);
            if norm > 1e-12 {
                Ok(local.mapv(|z| z / norm))
            } else {
                crate::operators::pauli_string(&"X".repeat(term.qubits.len()))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![("all_x".into(), uniform('X')?), ("all_z".into(), uniform('Z')?), ("commutator".into(), aligned)])
}

/// Data shared by the trials of one grid point.
pub struct PointContext<'a> {
    pub exp: &'a Experiment,
    pub point: GridPoint,
    pub trunc: TruncatedHamiltonian,
    h: CMatrix,
    eig: EigHermitian,
    o_region: CMatrix,
    psi0: CVector,
    /// `U_l(t) ψ₀` on the truncated register.
    psi_l: CVector,
    /// `⟨O(t)⟩` of the exact reference.
    exact_expectation: f64,
    /// `U†OU` on the reference register, built on demand.
    exact_heisenberg: OnceLock<Result<CMatrix>>,
    proxy_reference: bool,
    plan: Option<TrotterPlan>,
    sampler: Option<GaussianSampler>,
    fixed_directions: OnceLock<Vec<CMatrix>>,
    lindblad: OnceLock<Result<(Vec<CMatrix>, Option<CMatrix>)>>,
    probes: OnceLock<Result<Vec<(String, Vec<CMatrix>)>>>,
    pub bounds: Vec<BoundReport>,
}

impl<'a> PointContext<'a> {
    fn new(exp: &'a Experiment, point: GridPoint) -> Result<Self> {
        let cfg = &exp.config;
        let trunc = match point.l {
            Some(l) => truncate(&exp.ham, &exp.obs, l)?,
            None => full_system(&exp.ham, &exp.obs)?,
        };
        let h = assemble_dense(&trunc)?;
        let eig = linalg::eigh(&h)?;
        let o_region = exp.obs.embedded(&trunc.region)?;
        let th = &cfg.initial_state;
        let psi0 = metrics::product_state(trunc.n_qubits(), th.theta, th.phi);
        let psi_l = eig.evolve(point.t, &psi0);
        let (exact_expectation, proxy_reference) = match &exp.reference {
            Some(r) => (linalg::expectation(&r.o, &r.eig.evolve(point.t, &r.psi0)), false),
            None => (linalg::expectation(&o_region, &psi_l), true),
        };
        let plan = point.n.map(|n| suzuki_plan(point.p, n)).transpose()?;
        let sampler = if cfg.noise.model == NoiseModel::GaussianProcess && point.t > 0.0 {
            let n_grid = match cfg.noise.n_grid {
                Some(g) => g,
                None => {
                    let dt = cfg.noise.dt.unwrap_or_else(|| noise::default_grid_dt(point.lambda));
                    ((point.t / dt).ceil() as usize + 1).max(2)
                }
            };
            Some(GaussianSampler::uniform(point.lambda, point.t, n_grid)?)
        } else {
            None
        };
        let mut ctx = Self {
            exp,
            point,
            trunc,
            h,
            eig,
            o_region,
            psi0,
            psi_l,
            exact_expectation,
            exact_heisenberg: OnceLock::new(),
            proxy_reference,
            plan,
            sampler,
            fixed_directions: OnceLock::new(),
            lindblad: OnceLock::new(),
            probes: OnceLock::new(),
            bounds: Vec::new(),
        };
        let params = ctx.bound_params()?;
        ctx.bounds = cfg
            .theorem_ids()
            .into_iter()
            .map(|id| bounds::eval_bound(id, &params))
            .collect::<Result<_>>()?;
        Ok(ctx)
    }

    /// Inputs of the bound evaluator at this point.
    pub fn bound_params(&self) -> Result<BoundParams> {
        let c = self.exp.ham.constants_for(&self.exp.obs);
        let cfg = &self.exp.config;
        let mut p = BoundParams::new(c.d, c.r);
        p.r_o = c.r_o;
        p.norm_o = self.exp.obs.norm;
        p.supp_o = self.exp.obs.support.len();
        p.p = Some(self.point.p);
        p.t = Some(self.point.t);
        p.delta = Some(self.point.delta);
        p.lambda = self.point.lambda;
        p.m = cfg.noise.m;
        p.n = self.point.n;
        p.l = self.point.l;
        p.theta = Some(self.trunc.n_terms());
        p.covers_all = self.trunc.covers_all;
        if cfg.noise.model == NoiseModel::Lindblad {
            let (jumps, _) = self.lindblad_data()?;
            let mut sq = linalg::zeros(self.trunc.dim);
            for j in jumps {
                sq = sq + j.dot(j);
            }
            p.jump_square_norm = Some(linalg::operator_norm(&sq));
        }
        Ok(p)
    }

    fn exact_heisenberg(&self) -> Result<&CMatrix> {
        self.exact_heisenberg
            .get_or_init(|| match &self.exp.reference {
                Some(r) => {
                    let u = r.eig.propagator(self.point.t);
                    Ok(linalg::dagger(&u).dot(&r.o).dot(&u))
                }
                None => {
                    let u = self.eig.propagator(self.point.t);
                    Ok(linalg::dagger(&u).dot(&self.o_region).dot(&u))
                }
            })
            .as_ref()
            .map_err(|e| StabError::Numerical(e.to_string()))
    }

    /// Worst-case deviation of a noisy propagator on the truncated register.
    fn worst_case(&self, v: &CMatrix) -> Result<f64> {
        let err = linalg::unitarity_error(v);
        if err > linalg::UNITARY_TOL {
            return domain(format!("noisy propagator is not unitary (deviation {err:e})"));
        }
        let heis = linalg::dagger(v).dot(&self.o_region).dot(v);
        let exact = self.exact_heisenberg()?;
        let lifted = match &self.exp.reference {
            Some(r) => {
                let qubits = crate::operators::positions(&self.trunc.region, &r.trunc.region)?;
                linalg::embed(&heis, r.trunc.n_qubits(), &qubits)
            }
            None => heis,
        };
        Ok(linalg::operator_norm(&(lifted - exact)))
    }

    /// Directions drawn once from the fixed channel of the master seed.
    fn fixed_directions(&self) -> &Vec<CMatrix> {
        self.fixed_directions.get_or_init(|| {
            let cfg = &self.exp.config;
            let mut fixed = rng::stream(cfg.master_seed, 0, rng::CHANNEL_FIXED);
            noise::sample_directions(&self.trunc, cfg.noise.m, cfg.noise.ensemble, &mut fixed)
        })
    }

    fn directions(&self, rng: &mut StreamRng) -> Vec<CMatrix> {
        let cfg = &self.exp.config;
        if cfg.noise.fixed_directions {
            self.fixed_directions().clone()
        } else {
            noise::sample_directions(&self.trunc, cfg.noise.m, cfg.noise.ensemble, rng)
        }
    }

    fn lindblad_data(&self) -> Result<&(Vec<CMatrix>, Option<CMatrix>)> {
        self.lindblad
            .get_or_init(|| {
                let jumps = self.fixed_directions().clone();
                let rho = if self.trunc.dim <= noise::LINDBLAD_DIRECT_MAX_DIM {
                    let spec = LindbladSpec { jumps: jumps.clone(), delta: self.point.delta };
                    Some(noise::lindblad_propagate(&self.h, &spec, &linalg::outer(&self.psi0), self.point.t)?)
                } else {
                    None
                };
                Ok((jumps, rho))
            })
            .as_ref()
            .map_err(|e| StabError::Numerical(e.to_string()))
    }

    fn probes(&self) -> Result<&Vec<(String, Vec<CMatrix>)>> {
        self.probes
            .get_or_init(|| adversarial_probes(&self.trunc, &self.exp.obs, self.point.t))
            .as_ref()
            .map_err(|e| StabError::Numerical(e.to_string()))
    }

    fn noisy_pure(&self, psi: CVector, sample: &mut ErrorSample) {
        sample.hs_distance = Some(metrics::hs_distance(&self.psi_l, &psi));
        sample.delta_rho = (self.exact_expectation - linalg::expectation(&self.o_region, &psi)).abs();
    }

    /// Runs trial `trial` and returns its sample and diagnostic flags.
    pub fn run_trial(&self, trial: u64) -> Result<(ErrorSample, Vec<String>)> {
        let cfg = &self.exp.config;
        let pt = &self.point;
        let mut flags = Vec::new();
        if self.proxy_reference {
            flags.push("proxy_reference".to_string());
        }
        let mut sample = ErrorSample {
            t: pt.t,
            delta: pt.delta,
            n: pt.n,
            l: pt.l,
            model: cfg.noise.model.as_str().to_string(),
            seed: cfg.master_seed,
            trial,
            ..Default::default()
        };
        let mut rng: StreamRng = rng::trial_stream(cfg.master_seed, trial);
        let probe = |k: u64| -> Result<Option<&Vec<CMatrix>>> {
            if !cfg.worst_case {
                return Ok(None);
            }
            Ok(self.probes()?.get(k as usize).map(|(_, ls)| ls))
        };
        match cfg.noise.model {
            NoiseModel::None => {
                let v = match &self.plan {
                    Some(plan) => trotter::product_unitary(plan, &self.trunc, pt.t)?,
                    None => self.eig.propagator(pt.t),
                };
                self.noisy_pure(v.dot(&self.psi0), &mut sample);
                if cfg.worst_case {
                    sample.delta_wc = Some(self.worst_case(&v)?);
                }
            }
            NoiseModel::M1 | NoiseModel::M2 | NoiseModel::DiscreteIto => {
                let plan = self.plan.as_ref().ok_or_else(|| StabError::Config("digital noise needs n".into()))?;
                let spec = DigitalNoiseSpec {
                    model: cfg.noise.model.digital().expect("digital model"),
                    delta: pt.delta,
                    ensemble: cfg.noise.ensemble,
                };
                let fixed = probe(trial)?;
                if cfg.worst_case {
                    let v = match fixed {
                        Some(ls) => noise::perturbed_product_unitary::<StreamRng>(plan, &self.trunc, pt.t, &spec, PerturbationSource::Fixed(ls))?,
                        None => noise::perturbed_product_unitary(plan, &self.trunc, pt.t, &spec, PerturbationSource::Random(&mut rng))?,
                    };
                    self.noisy_pure(v.dot(&self.psi0), &mut sample);
                    sample.delta_wc = Some(self.worst_case(&v)?);
                } else {
                    let psi = noise::perturbed_product_state(plan, &self.trunc, pt.t, &spec, PerturbationSource::Random(&mut rng), &self.psi0)?;
                    self.noisy_pure(psi, &mut sample);
                }
            }
            NoiseModel::AnalogConstant => {
                let ls = match probe(trial)? {
                    Some(ls) => ls.clone(),
                    None => self
                        .trunc
                        .terms
                        .iter()
                        .map(|term| sample_perturbation(cfg.noise.ensemble, term.qubits.len(), &mut rng))
                        .collect(),
                };
                let v = noise::evolve_analog_constant(&self.trunc, &ls, pt.delta, pt.t)?;
                self.noisy_pure(v.dot(&self.psi0), &mut sample);
                if cfg.worst_case {
                    sample.delta_wc = Some(self.worst_case(&v)?);
                }
            }
            NoiseModel::GaussianProcess => {
                let dirs = self.directions(&mut rng);
                let psi = match &self.sampler {
                    Some(sampler) => {
                        let paths = noise::sample_gaussian_paths(sampler, dirs.len(), &mut rng);
                        let out = noise::evolve_analog(&self.trunc, &dirs, sampler, &paths, pt.delta, &self.psi0, &[pt.t], cfg.noise.tol)?;
                        out.states.into_iter().next().expect("one checkpoint")
                    }
                    None => self.psi0.clone(),
                };
                self.noisy_pure(psi, &mut sample);
            }
            NoiseModel::WhiteNoise => {
                let dirs = self.directions(&mut rng);
                let sys = WhiteNoiseSystem::from_dense(&self.h, dirs)?;
                let steps = cfg.noise.dt.map(SdeSteps::new).unwrap_or_else(|| SdeSteps::default_for(pt.delta));
                let out = noise::evolve_white_noise(&sys, pt.delta, &self.psi0, &[pt.t], steps, &mut rng)?;
                let (lo, hi) = noise::NORM_WARNING_RANGE;
                if out.max_norm_drift > (1.0 - lo).min(hi - 1.0) {
                    flags.push("norm_warning".into());
                }
                self.noisy_pure(out.states.into_iter().next().expect("one checkpoint"), &mut sample);
            }
            NoiseModel::Lindblad => {
                let (jumps, direct) = self.lindblad_data()?;
                let rho = match direct {
                    Some(rho) => rho.clone(),
                    None => {
                        let spec = LindbladSpec { jumps: jumps.clone(), delta: pt.delta };
                        let steps = cfg.noise.dt.map(SdeSteps::new).unwrap_or_else(|| SdeSteps::default_for(pt.delta));
                        let seed = cfg.master_seed;
                        noise::lindblad_trajectories(&self.h, &spec, &self.psi0, pt.t, steps, cfg.noise.trajectories, |k| {
                            rng::stream(seed, k as u64, 16 + trial)
                        })?
                    }
                };
                sample.delta_rho = (self.exact_expectation - linalg::expectation_dm(&self.o_region, &rho)).abs();
            }
        }
        for r in &self.bounds {
            if !r.assumptions_ok() {
                flags.push(format!("{}:{}", r.theorem, r.failed_flags()));
            }
        }
        Ok((sample, flags))
    }
}

/// Outcome of one trial as persisted in `results.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub point: usize,
    pub trial: u64,
    pub sample: Option<ErrorSample>,
    pub error: Option<String>,
    #[serde(default)]
    pub flags: Vec<String>,
    pub runtime_ms: f64,
}

/// Summary statistics of a sample.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub stderr: f64,
    pub max: f64,
    /// Quantiles at 0.5, 0.9 and 0.99.
    pub q50: f64,
    pub q90: f64,
    pub q99: f64,
}

impl Stats {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self::default();
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        let mut sorted = xs.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q = |p: f64| sorted[((p * (n - 1) as f64).round() as usize).min(n - 1)];
        Self {
            count: n,
            mean,
            std: var.sqrt(),
            stderr: (var / n as f64).sqrt(),
            max: sorted[n - 1],
            q50: q(0.5),
            q90: q(0.9),
            q99: q(0.99),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub point: GridPoint,
    pub delta_rho: Stats,
    pub delta_wc: Option<Stats>,
    /// Statistics of `‖ψ−ψ′‖²`.
    pub hs_squared: Option<Stats>,
    pub bounds: Vec<BoundReport>,
    pub failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<PointSummary>,
}

impl SweepResult {
    /// Records of point `index`, in trial order.
    pub fn records_for(&self, index: usize) -> impl Iterator<Item = &TrialRecord> {
        self.records.iter().filter(move |r| r.point == index)
    }
}

/// Options of a sweep run.
#[derive(Clone, Debug, Default)]
pub struct SweepOptions {
    /// Thread cap; `None` reads `STABSIM_THREADS` or uses all cores.
    pub threads: Option<usize>,
    /// Keep wall-clock timings in the CSV (breaks byte-identity).
    pub record_timings: bool,
}

/// Reads `STABSIM_THREADS`.
pub fn threads_from_env() -> Option<usize> {
    std::env::var("STABSIM_THREADS").ok().and_then(|s| s.parse().ok()).filter(|&n| n > 0)
}

fn summarize(contexts: &[PointContext<'_>], records: &[TrialRecord]) -> Vec<PointSummary> {
    contexts
        .iter()
        .map(|ctx| {
            let recs: Vec<&TrialRecord> = records.iter().filter(|r| r.point == ctx.point.index).collect();
            let samples: Vec<&ErrorSample> = recs.iter().filter_map(|r| r.sample.as_ref()).collect();
            let rho: Vec<f64> = samples.iter().map(|s| s.delta_rho).collect();
            let wc: Vec<f64> = samples.iter().filter_map(|s| s.delta_wc).collect();
            let hs: Vec<f64> = samples.iter().filter_map(|s| s.hs_distance.map(|h| h * h)).collect();
            PointSummary {
                point: ctx.point,
                delta_rho: Stats::of(&rho),
                delta_wc: (!wc.is_empty()).then(|| Stats::of(&wc)),
                hs_squared: (!hs.is_empty()).then(|| Stats::of(&hs)),
                bounds: ctx.bounds.clone(),
                failures: recs.len() - samples.len(),
            }
        })
        .collect()
}

fn run_one(ctx: &PointContext<'_>, trial: u64) -> TrialRecord {
    let start = Instant::now();
    let (sample, error, flags) = match ctx.run_trial(trial) {
        Ok((s, f)) => (Some(s), None, f),
        Err(e) => (None, Some(e.to_string()), Vec::new()),
    };
    TrialRecord { point: ctx.point.index, trial, sample, error, flags, runtime_ms: start.elapsed().as_secs_f64() * 1e3 }
}

/// Runs every point and trial in memory.
pub fn run_sweep(config: &ExperimentConfig, opts: &SweepOptions) -> Result<SweepResult> {
    let exp = Experiment::new(config.clone())?;
    run_experiment(&exp, opts, &HashSet::new(), Vec::new(), |_| Ok(()))
}

fn run_experiment(
    exp: &Experiment,
    opts: &SweepOptions,
    done: &HashSet<(usize, u64)>,
    mut previous: Vec<TrialRecord>,
    persist: impl Fn(&TrialRecord) -> Result<()> + Sync,
) -> Result<SweepResult> {
    let contexts = exp.points.iter().map(|p| exp.context(p)).collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, u64)> = contexts
        .iter()
        .enumerate()
        .flat_map(|(k, _)| (0..exp.config.trials as u64).map(move |t| (k, t)))
        .filter(|&(k, t)| !done.contains(&(exp.points[k].index, t)))
        .collect();
    let threads = opts.threads.or_else(threads_from_env).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| StabError::Numerical(format!("thread pool: {e}")))?;
    let fresh: Vec<TrialRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|&(k, t)| {
                let rec = run_one(&contexts[k], t);
                persist(&rec).map(|_| rec)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    previous.extend(fresh);
    previous.sort_by_key(|r| (r.point, r.trial));
    let summaries = summarize(&contexts, &previous);
    Ok(SweepResult { records: previous, summaries })
}

/// Runs a sweep persisting each trial to `out_dir/results.jsonl` as it
/// completes, then writes `results.csv` and `summary.json`. Trials already
/// in the JSON-lines file are kept and skipped, so an interrupted sweep can
/// be resumed with the same configuration.
pub fn run_sweep_to_dir(config: &ExperimentConfig, out_dir: &Path, opts: &SweepOptions) -> Result<SweepResult> {
    fs::create_dir_all(out_dir)?;
    let exp = Experiment::new(config.clone())?;
    let manifest_path = out_dir.join("manifest.json");
    let canonical = config.to_json();
    if manifest_path.exists() {
        let old: Value = serde_json::from_str(&fs::read_to_string(&manifest_path)?)?;
        if old.get("config") != Some(&serde_json::from_str::<Value>(&canonical)?) {
            return Err(StabError::Config(format!(
                "{} holds results of a different configuration",
                out_dir.display()
            )));
        }
    } else {
        let manifest = serde_json::json!({ "config": serde_json::from_str::<Value>(&canonical)?, "points": exp.points.len(), "trials": config.trials });
        fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    }
    let jsonl = out_dir.join("results.jsonl");
    let mut previous = Vec::new();
    if jsonl.exists() {
        for line in BufReader::new(File::open(&jsonl)?).lines() {
            let line = line?;
            // a torn final line from an interruption is dropped and rerun
            if let Ok(rec) = serde_json::from_str::<TrialRecord>(&line) {
                previous.push(rec);
            }
        }
    }
    let done: HashSet<(usize, u64)> = previous.iter().map(|r| (r.point, r.trial)).collect();
    let file = Mutex::new(OpenOptions::new().create(true).append(true).open(&jsonl)?);
    let persist = |rec: &TrialRecord| -> Result<()> {
        let line = serde_json::to_string(rec)?;
        let mut f = file.lock().expect("jsonl lock");
        writeln!(f, "{line}")?;
        f.flush()?;
        Ok(())
    };
    let result = run_experiment(&exp, opts, &done, previous, persist)?;
    write_csv(&exp, &result, &out_dir.join("results.csv"), opts.record_timings)?;
    fs::write(out_dir.join("summary.json"), serde_json::to_string_pretty(&result.summaries)? + "\n")?;
    Ok(result)
}

/// Fixed 17-significant-digit rendering used in CSV output.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_f64(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// CSV columns of `results.csv`.
pub const CSV_COLUMNS: [&str; 16] = [
    "model", "d", "p", "n", "l", "t", "delta", "lambda", "seed", "trial", "delta_rho", "delta_wc", "hs_distance",
    "bound_rhs", "flags", "runtime_ms",
];

/// Writes one row per trial, sorted by point and trial.
pub fn write_csv(exp: &Experiment, result: &SweepResult, path: &Path, record_timings: bool) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_COLUMNS)?;
    let by_point: BTreeMap<usize, &PointSummary> = result.summaries.iter().map(|s| (s.point.index, s)).collect();
    for rec in &result.records {
        let summary = by_point[&rec.point];
        let pt = summary.point;
        let rhs = summary.bounds.first().map(|b| b.rhs);
        let mut flags = rec.flags.clone();
        if let Some(e) = &rec.error {
            flags.push(format!("error:{e}"));
        }
        let s = rec.sample.as_ref();
        w.write_record([
            exp.config.noise.model.as_str().to_string(),
            exp.ham.lattice.d.to_string(),
            pt.p.to_string(),
            pt.n.map(|n| n.to_string()).unwrap_or_default(),
            pt.l.map(|l| l.to_string()).unwrap_or_default(),
            fmt_f64(pt.t),
            fmt_f64(pt.delta),
            pt.lambda.map(fmt_f64).unwrap_or_else(|| "inf".into()),
            exp.config.master_seed.to_string(),
            rec.trial.to_string(),
            opt_f64(s.map(|s| s.delta_rho)),
            opt_f64(s.and_then(|s| s.delta_wc)),
            opt_f64(s.and_then(|s| s.hs_distance)),
            opt_f64(rhs),
            flags.join(";"),
            if record_timings { fmt_f64(rec.runtime_ms) } else { String::new() },
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Axis of a scaling fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    T,
    Delta,
    N,
    Lambda,
}

impl std::str::FromStr for Axis {
    type Err = StabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "t" => Ok(Axis::T),
            "delta" => Ok(Axis::Delta),
            "n" => Ok(Axis::N),
            "lambda" => Ok(Axis::Lambda),
            other => Err(StabError::Config(format!("unknown fit axis {other:?}"))),
        }
    }
}

/// Which points enter a fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum FitWindow {
    All,
    /// Drop the smallest-`x` points until `r² ≥ 0.98` or four points remain.
    Auto,
    /// Half-open index range into the `x`-sorted points.
    Range(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub axis: Option<Axis>,
    pub exponent: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Index range of the `x`-sorted points used.
    pub window: (usize, usize),
    /// Power of the logarithmic correction divided out of `y`.
    pub log_power: f64,
}

/// Minimum number of points in a fit.
pub const MIN_FIT_POINTS: usize = 4;

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let stderr = if n > 2.0 && sxx > 0.0 { (sse / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    (slope, intercept, stderr, r2)
}

/// Least-squares slope of `log y` against `log x`. With `log_power = q > 0`
/// each `y < 1` is first divided by `log^q(1/y)`.
pub fn fit_scaling(points: &[(f64, f64)], window: FitWindow, log_power: f64) -> Result<ScalingFit> {
    if points.len() < MIN_FIT_POINTS {
        return domain(format!("a scaling fit needs at least {MIN_FIT_POINTS} points, got {}", points.len()));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0) || !x.is_finite() || !y.is_finite()) {
        return domain("scaling fits need positive finite data");
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pts
        .iter()
        .map(|&(_, y)| {
            let corr = if log_power > 0.0 && y < 1.0 { (1.0 / y).ln().powf(log_power) } else { 1.0 };
            (y / corr).ln()
        })
        .collect();
    let fit = |a: usize, b: usize| least_squares(&lx[a..b], &ly[a..b]);
    let (start, end) = match window {
        FitWindow::All => (0, pts.len()),
        FitWindow::Range(a, b) => {
            if b > pts.len() || b < a + MIN_FIT_POINTS {
                return domain("fit window must hold at least four points");
            }
            (a, b)
        }
        FitWindow::Auto => {
            let end = pts.len();
            let mut start = 0;
            while end - start > MIN_FIT_POINTS && fit(start, end).3 < 0.98 {
                start += 1;
            }
            (start, end)
        }
    };
    let (exponent, intercept, stderr, r2) = fit(start, end);
    Ok(ScalingFit { axis: None, exponent, stderr, intercept, r2, window: (start, end), log_power })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub threshold: f64,
    pub exceedance: f64,
    /// One-sided 99% Clopper–Pearson upper bound on the exceedance
    /// probability.
    pub upper99: f64,
}

/// Clopper–Pearson upper confidence bound for `k` successes in `n` trials.
pub fn clopper_pearson_upper(k: usize, n: usize, confidence: f64) -> f64 {
    if k >= n {
        return 1.0;
    }
    // the bound is the `confidence` quantile of Beta(k+1, n−k); bisect the
    // regularized incomplete beta function, which is monotone in x
    let (a, b) = (k as f64 + 1.0, (n - k) as f64);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if beta_reg(a, b, mid) < confidence {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    hi
}

/// Minimum sample count for tail estimates.
pub const MIN_TAIL_SAMPLES: usize = 100;

/// Empirical exceedance `#{x > threshold} / n` with 99% upper bounds.
pub fn tail_estimate(samples: &[f64], thresholds: &[f64]) -> Result<Vec<TailPoint>> {
    if samples.len() < MIN_TAIL_SAMPLES {
        return domain(format!("tail estimates need at least {MIN_TAIL_SAMPLES} samples"));
    }
    let n = samples.len();
    Ok(thresholds
        .iter()
        .map(|&th| {
            let k = samples.iter().filter(|&&x| x > th).count();
            TailPoint { threshold: th, exceedance: k as f64 / n as f64, upper99: clopper_pearson_upper(k, n, 0.99) }
        })
        .collect())
}

/// Tail check after empirical normalization: thresholds are `s·√2·rms`
/// and the form `2e^{−s²}` must lie above the 99% Clopper-Pearson upper
/// limit of each exceedance probability. Returns `(s, tail point, bound,
/// dominated)` per `s`.
pub fn normalized_tail_check(samples: &[f64], s_values: &[f64]) -> Result<Vec<(f64, TailPoint, f64, bool)>> {
    let rms = (samples.iter().map(|x| x * x).sum::<f64>() / samples.len().max(1) as f64).sqrt();
    let scale = 2f64.sqrt() * rms;
    let ths: Vec<f64> = s_values.iter().map(|s| s * scale).collect();
    let tail = tail_estimate(samples, &ths)?;
    Ok(s_values
        .iter()
        .zip(tail)
        .map(|(&s, tp)| {
            let bound = bounds::TailForm::probability(s);
            let ok = tp.upper99 <= bound;
            (s, tp, bound, ok)
        })
        .collect())
}

/// A bound that the data contradict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub point: GridPoint,
    pub theorem: TheoremId,
    /// Offending trial for per-realization bounds.
    pub trial: Option<u64>,
    pub measured: f64,
    pub rhs: f64,
    pub flags: String,
}

/// Audit outcome: violations and the number of checks skipped because an
/// assumption of the bound failed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    pub violations: Vec<Violation>,
    pub checked: usize,
    pub skipped: usize,
}

/// Checks every bound report of the sweep. Per-realization bounds use raw
/// samples (worst-case deviation when present); expectation bounds compare
/// `mean − 2·stderr`. `rhs_scale` multiplies every right-hand side.
pub fn audit_bounds_scaled(sweep: &SweepResult, rhs_scale: f64) -> Audit {
    let mut audit = Audit::default();
    for summary in &sweep.summaries {
        let samples: Vec<(u64, &ErrorSample)> = sweep
            .records_for(summary.point.index)
            .filter_map(|r| r.sample.as_ref().map(|s| (r.trial, s)))
            .collect();
        for report in &summary.bounds {
            if !report.assumptions_ok() {
                audit.skipped += 1;
                continue;
            }
            audit.checked += 1;
            let rhs = report.rhs * rhs_scale;
            let slack = 1e-12 * rhs.abs().max(1.0);
            let value = |s: &ErrorSample| -> f64 {
                match report.theorem {
                    TheoremId::T1 | TheoremId::T2 | TheoremId::T3 | TheoremId::T5b | TheoremId::Trotter | TheoremId::Truncation => {
                        s.delta_wc.unwrap_or(s.delta_rho)
                    }
                    _ => s.delta_rho,
                }
            };
            if report.theorem.is_worst_case() {
                for &(trial, s) in &samples {
                    let v = value(s);
                    if v > rhs + slack {
                        audit.violations.push(Violation {
                            point: summary.point,
                            theorem: report.theorem,
                            trial: Some(trial),
                            measured: v,
                            rhs,
                            flags: report.failed_flags(),
                        });
                    }
                }
            } else {
                let xs: Vec<f64> = samples.iter().map(|(_, s)| value(s)).collect();
                let st = Stats::of(&xs);
                if st.count > 0 && st.mean - 2.0 * st.stderr > rhs + slack {
                    audit.violations.push(Violation {
                        point: summary.point,
                        theorem: report.theorem,
                        trial: None,
                        measured: st.mean,
                        rhs,
                        flags: report.failed_flags(),
                    });
                }
            }
        }
    }
    audit
}

pub fn audit_bounds(sweep: &SweepResult) -> Audit {
    audit_bounds_scaled(sweep, 1.0)
}

/// Points `(x, mean Δ(ρ))` along `axis`, for summaries that agree on every
/// other coordinate with the first one.
pub fn series(summaries: &[PointSummary], axis: Axis) -> Vec<(f64, f64, f64)> {
    summaries
        .iter()
        .filter_map(|s| {
            let x = match axis {
                Axis::T => Some(s.point.t),
                Axis::Delta => Some(s.point.delta),
                Axis::N => s.point.n.map(|n| n as f64),
                Axis::Lambda => s.point.lambda,
            }?;
            Some((x, s.delta_rho.mean, s.delta_rho.stderr))
        })
        .collect()
}

/// Coordinates of a point other than `axis`, used to group series.
pub fn group_key(p: &GridPoint, axis: Axis) -> String {
    let mut parts = vec![format!("p={}", p.p)];
    if axis != Axis::T {
        parts.push(format!("t={}", p.t));
    }
    if axis != Axis::Delta {
        parts.push(format!("delta={}", p.delta));
    }
    if axis != Axis::N {
        parts.push(format!("n={}", p.n.map(|n| n.to_string()).unwrap_or_else(|| "-".into())));
    }
    if axis != Axis::Lambda {
        parts.push(format!("lambda={}", p.lambda.map(|l| l.to_string()).unwrap_or_else(|| "inf".into())));
    }
    parts.push(format!("l={}", p.l.map(|l| l.to_string()).unwrap_or_else(|| "all".into())));
    parts.join(",")
}

/// Bootstrap standard error of a fitted exponent, resampling trials within
/// each point with the bootstrap stream of `master_seed`.
pub fn bootstrap_exponent(per_point: &[(f64, Vec<f64>)], resamples: usize, master_seed: u64) -> Result<f64> {
    use rand::Rng;
    if resamples < 2 {
        return domain("bootstrap needs at least two resamples");
    }
    let mut rng = rng::stream(master_seed, 0, rng::CHANNEL_BOOTSTRAP);
    let mut exps = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let pts: Vec<(f64, f64)> = per_point
            .iter()
            .map(|(x, ys)| {
                let m = ys.len();
                let mean = (0..m).map(|_| ys[rng.gen_range(0..m)]).sum::<f64>() / m as f64;
                (*x, mean)
            })
            .collect();
        exps.push(fit_scaling(&pts, FitWindow::All, 0.0)?.exponent);
    }
    Ok(Stats::of(&exps).std)
}

/// Convenience for a single trial of a configuration.
pub fn run_trial(config: &ExperimentConfig, point_index: usize, trial: u64) -> Result<ErrorSample> {
    let exp = Experiment::new(config.clone())?;
    let point = exp
        .points
        .get(point_index)
        .copied()
        .ok_or_else(|| StabError::Config(format!("no grid point {point_index}")))?;
    Ok(exp.context(&point)?.run_trial(trial)?.0)
}
