//! Local Hamiltonian terms, observables, truncation to an observable-centred
//! region, and random Hermitian perturbations.

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, StabError};
use crate::lattice::{l1_distance, omega_region, LatticeSpec, LocalityConstants, Region, Site};
use crate::linalg::{self, LocalIndex};
use crate::{CMatrix, C64, MAX_DIM};

const NORM_SLACK: f64 = 1e-12;

pub fn pauli(c: char) -> Result<CMatrix> {
    let o = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let m = match c {
        'I' => [[one, o], [o, one]],
        'X' => [[o, one], [one, o]],
        'Y' => [[o, -i], [i, o]],
        'Z' => [[one, o], [o, -one]],
        _ => return domain(format!("unknown Pauli letter {c:?}")),
    };
    Ok(Array2::from_shape_fn((2, 2), |(r, s)| m[r][s]))
}

/// Tensor product of Pauli letters; the first letter is the most significant
/// factor.
pub fn pauli_string(s: &str) -> Result<CMatrix> {
    let mut out = linalg::identity(1);
    for c in s.chars() {
        out = linalg::kron(&out, &pauli(c)?);
    }
    Ok(out)
}

/// Pauli string with the letter `c` at position `pos` of `len` and identities
/// elsewhere.
fn single_letter(len: usize, pos: usize, c: char) -> String {
    (0..len).map(|k| if k == pos { c } else { 'I' }).collect()
}

/// One Hamiltonian term `H_γ` with its anchor site.
#[derive(Clone, Debug)]
pub struct LocalTerm {
    pub anchor: Site,
    pub support: Region,
    /// Acts on the support sites in region order.
    pub matrix: CMatrix,
}

impl LocalTerm {
    pub fn new(anchor: Site, support: Region, matrix: CMatrix) -> Result<Self> {
        let dim = 1usize << support.len();
        if matrix.dim() != (dim, dim) {
            return domain(format!("term matrix {:?} does not match support of {} sites", matrix.dim(), support.len()));
        }
        if !linalg::is_hermitian(&matrix) {
            return domain("term matrix is not Hermitian");
        }
        let norm = linalg::operator_norm(&matrix);
        if norm > 1.0 + NORM_SLACK {
            return domain(format!("term norm {norm} exceeds 1"));
        }
        Ok(Self { anchor, support, matrix })
    }

    /// Largest l1 distance from the anchor to a support site.
    pub fn radius(&self) -> i64 {
        self.support.sites().iter().map(|s| l1_distance(s, &self.anchor)).max().unwrap_or(0)
    }
}

/// `H = Σ_γ H_γ` on a finite lattice, at most one term per anchor.
#[derive(Clone, Debug)]
pub struct LocalHamiltonian {
    pub lattice: LatticeSpec,
    pub terms: Vec<LocalTerm>,
    pub constants: LocalityConstants,
    /// Norms of the raw coupling matrices before normalization.
    pub raw_norms: Vec<f64>,
}

impl LocalHamiltonian {
    pub fn new(lattice: LatticeSpec, terms: Vec<LocalTerm>, raw_norms: Vec<f64>) -> Result<Self> {
        let mut anchors: Vec<&Site> = terms.iter().map(|t| &t.anchor).collect();
        anchors.sort();
        if anchors.windows(2).any(|w| w[0] == w[1]) {
            return domain("two terms share an anchor site");
        }
        for t in &terms {
            if let Some(s) = t.support.sites().iter().find(|s| !lattice.contains(s)) {
                return domain(format!("term support site {s:?} outside lattice"));
            }
        }
        let r = terms.iter().map(|t| t.radius()).max().unwrap_or(1).max(1);
        let constants = LocalityConstants::new(lattice.d, r as f64, 0.0)?;
        Ok(Self { lattice, terms, constants, raw_norms })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Locality constants with the observable radius filled in.
    pub fn constants_for(&self, obs: &Observable) -> LocalityConstants {
        LocalityConstants::new(self.lattice.d, self.constants.r, obs.radius() as f64)
            .expect("constants already validated")
    }
}

/// Two-site couplings `xx XX + yy YY + zz ZZ` along every lattice axis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Couplings {
    #[serde(default)]
    pub xx: f64,
    #[serde(default)]
    pub yy: f64,
    #[serde(default)]
    pub zz: f64,
}

/// On-site field `x X + y Y + z Z`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Field {
    #[serde(default)]
    pub x: f64,
    #[serde(default)]
    pub y: f64,
    #[serde(default)]
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomTerm {
    pub sites: Vec<Site>,
    /// `(pauli string aligned with sites, weight)`.
    pub paulis: Vec<(String, f64)>,
    #[serde(default)]
    pub anchor: Option<Site>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Tfim,
    Heisenberg,
    Custom,
}

/// Model definition as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub model: ModelKind,
    pub d: usize,
    pub extent: Vec<usize>,
    #[serde(default)]
    pub couplings: Option<Couplings>,
    #[serde(default)]
    pub field: Option<Field>,
    #[serde(default)]
    pub terms: Option<Vec<CustomTerm>>,
    /// Multiplies every normalized built-in term; must lie in (0, 1].
    #[serde(default)]
    pub scale: Option<f64>,
}

impl ModelSpec {
    pub fn tfim_chain(n: usize, j: f64, h: f64, g: f64) -> Self {
        Self {
            model: ModelKind::Tfim,
            d: 1,
            extent: vec![n],
            couplings: Some(Couplings { zz: j, ..Default::default() }),
            field: Some(Field { x: h, z: g, ..Default::default() }),
            terms: None,
            scale: None,
        }
    }

    pub fn build(&self) -> Result<LocalHamiltonian> {
        let lattice = LatticeSpec::new(self.d, self.extent.clone())?;
        let scale = self.scale.unwrap_or(1.0);
        if !(scale > 0.0 && scale <= 1.0) {
            return domain(format!("scale {scale} outside (0, 1]"));
        }
        match self.model {
            ModelKind::Tfim => {
                let c = self.couplings.unwrap_or(Couplings { zz: 1.0, ..Default::default() });
                let f = self.field.unwrap_or(Field { x: 1.0, ..Default::default() });
                nearest_neighbour(lattice, c, f, scale)
            }
            ModelKind::Heisenberg => {
                let c = self.couplings.unwrap_or(Couplings { xx: 1.0, yy: 1.0, zz: 1.0 });
                let f = self.field.unwrap_or_default();
                nearest_neighbour(lattice, c, f, scale)
            }
            ModelKind::Custom => {
                let terms = self.terms.as_ref().ok_or_else(|| StabError::Config("custom model needs terms".into()))?;
                custom(lattice, terms)
            }
        }
    }
}

/// Bond-plus-field model on a hypercubic lattice. The term anchored at `x`
/// holds the bonds from `x` to its forward neighbours and the field on `x`.
/// The far corner has no forward bonds, so its field joins the term of its
/// predecessor; every term then acts on at least two sites. Each term is
/// divided by its spectral norm and multiplied by `scale`.
pub fn nearest_neighbour(lattice: LatticeSpec, c: Couplings, f: Field, scale: f64) -> Result<LocalHamiltonian> {
    let sites = lattice.sites();
    let forward = |x: &Site| -> Vec<Site> {
        (0..lattice.d)
            .map(|axis| {
                let mut y = x.clone();
                y[axis] += 1;
                y
            })
            .filter(|y| lattice.contains(y))
            .collect()
    };
    let corner = sites.last().cloned().expect("lattice has at least one site");
    let corner_host = if sites.len() > 1 {
        (0..lattice.d).rev().find_map(|axis| {
            let mut y = corner.clone();
            y[axis] -= 1;
            lattice.contains(&y).then_some(y)
        })
    } else {
        None
    };
    let mut terms = Vec::new();
    let mut raw_norms = Vec::new();
    for x in &sites {
        if Some(x) == Some(&corner) && corner_host.is_some() {
            continue;
        }
        let mut support_sites = vec![x.clone()];
        support_sites.extend(forward(x));
        let mut field_sites = vec![x.clone()];
        if corner_host.as_ref() == Some(x) {
            field_sites.push(corner.clone());
        }
        let support = Region::new(support_sites);
        let k = support.len();
        let pos = |s: &Site| support.position(s).expect("site in support");
        let mut m: CMatrix = Array2::zeros((1 << k, 1 << k));
        for y in forward(x) {
            let (a, b) = (pos(x), pos(&y));
            for (w, c) in [(c.xx, 'X'), (c.yy, 'Y'), (c.zz, 'Z')] {
                if w != 0.0 {
                    let s: String = (0..k).map(|i| if i == a || i == b { c } else { 'I' }).collect();
                    m = m + pauli_string(&s)?.mapv(|z| z * w);
                }
            }
        }
        for s in &field_sites {
            for (w, c) in [(f.x, 'X'), (f.y, 'Y'), (f.z, 'Z')] {
                if w != 0.0 {
                    m = m + pauli_string(&single_letter(k, pos(s), c))?.mapv(|z| z * w);
                }
            }
        }
        let norm = linalg::operator_norm(&m);
        if norm == 0.0 {
            continue;
        }
        raw_norms.push(norm);
        terms.push(LocalTerm::new(x.clone(), support, m.mapv(|z| z * (scale / norm)))?);
    }
    LocalHamiltonian::new(lattice, terms, raw_norms)
}

fn custom(lattice: LatticeSpec, terms: &[CustomTerm]) -> Result<LocalHamiltonian> {
    let mut out = Vec::new();
    let mut raw_norms = Vec::new();
    for t in terms {
        if t.sites.is_empty() {
            return Err(StabError::Config("custom term without sites".into()));
        }
        let support = Region::new(t.sites.clone());
        if support.len() != t.sites.len() {
            return Err(StabError::Config("custom term lists a site twice".into()));
        }
        let k = support.len();
        let mut m: CMatrix = Array2::zeros((1 << k, 1 << k));
        for (string, w) in &t.paulis {
            if string.chars().count() != k {
                return Err(StabError::Config(format!("Pauli string {string:?} does not match {k} sites")));
            }
            // Reorder letters from the listed site order to region order.
            let mut letters = vec!['I'; k];
            for (c, s) in string.chars().zip(&t.sites) {
                letters[support.position(s).expect("site in support")] = c;
            }
            let s: String = letters.into_iter().collect();
            m = m + pauli_string(&s)?.mapv(|z| z * *w);
        }
        raw_norms.push(linalg::operator_norm(&m));
        let anchor = t.anchor.clone().unwrap_or_else(|| t.sites[0].clone());
        out.push(LocalTerm::new(anchor, support, m)?);
    }
    LocalHamiltonian::new(lattice, out, raw_norms)
}

/// Observable as read from JSON: one Pauli letter per listed site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSpec {
    pub sites: Vec<Site>,
    pub pauli: String,
}

impl ObservableSpec {
    pub fn single(site: Site, letter: char) -> Self {
        Self { sites: vec![site], pauli: letter.to_string() }
    }
}

/// Local observable `O` with cached spectral norm.
#[derive(Clone, Debug)]
pub struct Observable {
    pub support: Region,
    pub matrix: CMatrix,
    pub norm: f64,
}

impl Observable {
    pub fn new(support: Region, matrix: CMatrix) -> Result<Self> {
        if support.is_empty() {
            return domain("observable support is empty");
        }
        let dim = 1usize << support.len();
        if matrix.dim() != (dim, dim) || !linalg::is_hermitian(&matrix) {
            return domain("observable must be Hermitian on its support");
        }
        let norm = linalg::operator_norm(&matrix);
        Ok(Self { support, matrix, norm })
    }

    pub fn from_spec(spec: &ObservableSpec, lattice: &LatticeSpec) -> Result<Self> {
        if spec.pauli.chars().count() != spec.sites.len() {
            return Err(StabError::Config("observable Pauli string does not match its sites".into()));
        }
        if let Some(s) = spec.sites.iter().find(|s| !lattice.contains(s)) {
            return Err(StabError::Config(format!("observable site {s:?} outside lattice")));
        }
        let support = Region::new(spec.sites.clone());
        let mut letters = vec!['I'; support.len()];
        for (c, s) in spec.pauli.chars().zip(&spec.sites) {
            letters[support.position(s).expect("site in support")] = c;
        }
        Self::new(support, pauli_string(&letters.into_iter().collect::<String>())?)
    }

    /// Radius of the support around its first site.
    pub fn radius(&self) -> i64 {
        let c = &self.support.sites()[0];
        self.support.sites().iter().map(|s| l1_distance(s, c)).max().unwrap_or(0)
    }

    /// `O` embedded in the register of `region`.
    pub fn embedded(&self, region: &Region) -> Result<CMatrix> {
        let qubits = positions(&self.support, region)?;
        Ok(linalg::embed(&self.matrix, region.len(), &qubits))
    }
}

/// Positions of `inner` sites within `outer`.
pub fn positions(inner: &Region, outer: &Region) -> Result<Vec<usize>> {
    inner
        .sites()
        .iter()
        .map(|s| outer.position(s).ok_or_else(|| StabError::Domain(format!("site {s:?} not in region"))))
        .collect()
}

/// One retained term placed in the truncated register.
#[derive(Clone, Debug)]
pub struct PlacedTerm {
    /// Index `γ` in the parent Hamiltonian.
    pub gamma: usize,
    pub qubits: Vec<usize>,
    pub matrix: CMatrix,
    pub index: LocalIndex,
}

/// `H_l = Σ_{γ∈Θ_l} H_γ` on the register spanned by its support.
#[derive(Clone, Debug)]
pub struct TruncatedHamiltonian {
    /// Truncation length; `None` when the whole system is retained.
    pub l: Option<i64>,
    pub theta: Vec<usize>,
    pub region: Region,
    pub dim: usize,
    /// `Θ_l` contains every term of the parent Hamiltonian.
    pub covers_all: bool,
    pub terms: Vec<PlacedTerm>,
}

impl TruncatedHamiltonian {
    fn build(ham: &LocalHamiltonian, theta: Vec<usize>, extra: &Region, l: Option<i64>) -> Result<Self> {
        let mut region = extra.clone();
        for &g in &theta {
            region = region.union(&ham.terms[g].support);
        }
        if region.len() > 12 {
            return Err(StabError::Capacity(format!(
                "truncated region has {} sites (dimension 2^{}), limit is {MAX_DIM}",
                region.len(),
                region.len()
            )));
        }
        let n = region.len();
        let terms = theta
            .iter()
            .map(|&g| {
                let t = &ham.terms[g];
                let qubits = positions(&t.support, &region)?;
                let index = LocalIndex::new(n, &qubits);
                Ok(PlacedTerm { gamma: g, qubits, matrix: t.matrix.clone(), index })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { l, covers_all: theta.len() == ham.len(), theta, region, dim: 1 << n, terms })
    }

    pub fn n_qubits(&self) -> usize {
        self.region.len()
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }
}

/// Keeps the terms whose support meets `Ω_l`.
pub fn truncate(ham: &LocalHamiltonian, obs: &Observable, l: i64) -> Result<TruncatedHamiltonian> {
    let omega = omega_region(&obs.support, l, &ham.lattice)?;
    let theta: Vec<usize> = (0..ham.len()).filter(|&g| ham.terms[g].support.intersects(&omega)).collect();
    match TruncatedHamiltonian::build(ham, theta, &obs.support, Some(l)) {
        Err(StabError::Capacity(msg)) => {
            let feasible = (0..l).rev().find(|&k| {
                let om = omega_region(&obs.support, k, &ham.lattice).expect("valid support");
                let mut region = obs.support.clone();
                for t in ham.terms.iter().filter(|t| t.support.intersects(&om)) {
                    region = region.union(&t.support);
                }
                region.len() <= 12
            });
            Err(StabError::Capacity(match feasible {
                Some(k) => format!("{msg}; reduce l from {l} to at most {k}"),
                None => format!("{msg}; no truncation length fits"),
            }))
        }
        other => other,
    }
}

/// Retains every term of the Hamiltonian.
pub fn full_system(ham: &LocalHamiltonian, obs: &Observable) -> Result<TruncatedHamiltonian> {
    TruncatedHamiltonian::build(ham, (0..ham.len()).collect(), &obs.support, None)
}

/// Dense `H_l` on the truncated register.
pub fn assemble_dense(trunc: &TruncatedHamiltonian) -> Result<CMatrix> {
    if trunc.dim > MAX_DIM {
        return Err(StabError::Capacity(format!("dimension {} exceeds {MAX_DIM}", trunc.dim)));
    }
    let mut h = linalg::zeros(trunc.dim);
    for t in &trunc.terms {
        h = h + t.index.embed(&t.matrix);
    }
    Ok(h)
}

/// Distribution of mean-zero perturbations with `‖L‖ ≤ 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    /// GUE draw divided by its own spectral norm.
    #[default]
    GueNormalized,
    /// Uniform non-identity Pauli string with a random sign.
    PauliRademacher,
}

/// GUE matrix with unit-variance diagonal.
pub fn gue<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let mut a: CMatrix = Array2::zeros((dim, dim));
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..dim {
        a[[i, i]] = C64::new(rng.sample(StandardNormal), 0.0);
        for j in (i + 1)..dim {
            let z = C64::new(s * rng.sample::<f64, _>(StandardNormal), s * rng.sample::<f64, _>(StandardNormal));
            a[[i, j]] = z;
            a[[j, i]] = z.conj();
        }
    }
    a
}

/// All `4^k − 1` non-identity Pauli strings on `k` qubits, in base-4 order.
pub fn nontrivial_paulis(k: usize) -> Vec<String> {
    let letters = ['I', 'X', 'Y', 'Z'];
    (1..4usize.pow(k as u32))
        .map(|mut idx| {
            let mut s = vec!['I'; k];
            for pos in (0..k).rev() {
                s[pos] = letters[idx % 4];
                idx /= 4;
            }
            s.into_iter().collect()
        })
        .collect()
}

/// Draws one perturbation on `k` qubits. The draw is a deterministic
/// function of the generator state.
pub fn sample_perturbation<R: Rng + ?Sized>(kind: EnsembleKind, k: usize, rng: &mut R) -> CMatrix {
    match kind {
        EnsembleKind::GueNormalized => {
            let a = gue(1 << k, rng);
            let norm = linalg::operator_norm(&a);
            a.mapv(|z| z / norm)
        }
        EnsembleKind::PauliRademacher => {
            let idx = rng.gen_range(1..4usize.pow(k as u32));
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let letters = ['I', 'X', 'Y', 'Z'];
            let mut s = vec!['I'; k];
            let mut rest = idx;
            for pos in (0..k).rev() {
                s[pos] = letters[rest % 4];
                rest /= 4;
            }
            pauli_string(&s.into_iter().collect::<String>()).expect("valid letters").mapv(|z| z * sign)
        }
    }
}
