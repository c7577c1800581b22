//! Hypercubic lattice geometry with the l1 metric and open boundaries.
//!
//! Sites are integer coordinate tuples ordered lexicographically; that order
//! fixes the tensor-factor order of every register built from a region.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

pub type Site = Vec<i64>;

/// Finite `d`-dimensional lattice `[0, extent_0) × … × [0, extent_{d-1})`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub d: usize,
    pub extent: Vec<usize>,
}

impl LatticeSpec {
    pub fn new(d: usize, extent: Vec<usize>) -> Result<Self> {
        if d == 0 {
            return domain("lattice dimension must be at least 1");
        }
        if extent.len() != d {
            return domain(format!("extent has {} entries, expected {d}", extent.len()));
        }
        if extent.contains(&0) {
            return domain("every extent must be at least 1");
        }
        Ok(Self { d, extent })
    }

    /// Open chain of `n` sites.
    pub fn chain(n: usize) -> Result<Self> {
        Self::new(1, vec![n])
    }

    pub fn n_sites(&self) -> usize {
        self.extent.iter().product()
    }

    pub fn contains(&self, site: &[i64]) -> bool {
        site.len() == self.d && site.iter().zip(&self.extent).all(|(&x, &e)| x >= 0 && (x as usize) < e)
    }

    /// Lexicographic index of a site.
    pub fn index_of(&self, site: &[i64]) -> Option<usize> {
        if !self.contains(site) {
            return None;
        }
        Some(site.iter().zip(&self.extent).fold(0, |acc, (&x, &e)| acc * e + x as usize))
    }

    pub fn site_at(&self, mut index: usize) -> Site {
        let mut out = vec![0; self.d];
        for axis in (0..self.d).rev() {
            out[axis] = (index % self.extent[axis]) as i64;
            index /= self.extent[axis];
        }
        out
    }

    /// All sites in lexicographic order.
    pub fn sites(&self) -> Vec<Site> {
        (0..self.n_sites()).map(|i| self.site_at(i)).collect()
    }
}

pub fn l1_distance(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Ordered set of sites without duplicates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Region {
    sites: Vec<Site>,
}

impl Region {
    pub fn new(mut sites: Vec<Site>) -> Self {
        sites.sort();
        sites.dedup();
        Self { sites }
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, site: &[i64]) -> bool {
        self.sites.binary_search_by(|s| s.as_slice().cmp(site)).is_ok()
    }

    /// Position of a site in the region order.
    pub fn position(&self, site: &[i64]) -> Option<usize> {
        self.sites.binary_search_by(|s| s.as_slice().cmp(site)).ok()
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.sites.iter().all(|s| other.contains(s))
    }

    pub fn intersects(&self, other: &Region) -> bool {
        self.sites.iter().any(|s| other.contains(s))
    }

    pub fn union(&self, other: &Region) -> Region {
        Region::new(self.sites.iter().chain(&other.sites).cloned().collect())
    }

    /// Smallest l1 distance from `site` to the region.
    pub fn distance_to(&self, site: &[i64]) -> Option<i64> {
        self.sites.iter().map(|s| l1_distance(s, site)).min()
    }
}

/// l1 ball on the unbounded lattice `Z^d`.
pub fn ball_unclipped(center: &[i64], radius: i64) -> Region {
    let d = center.len();
    let mut sites = Vec::new();
    let mut offset = vec![-radius; d];
    loop {
        if offset.iter().map(|x| x.abs()).sum::<i64>() <= radius {
            sites.push(center.iter().zip(&offset).map(|(c, o)| c + o).collect());
        }
        let mut axis = d;
        loop {
            if axis == 0 {
                return Region::new(sites);
            }
            axis -= 1;
            if offset[axis] < radius {
                offset[axis] += 1;
                break;
            }
            offset[axis] = -radius;
        }
    }
}

/// Sites of `lattice` within l1 distance `radius` of `center`.
pub fn ball(center: &[i64], radius: i64, lattice: &LatticeSpec) -> Result<Region> {
    if !lattice.contains(center) {
        return domain(format!("center {center:?} outside lattice"));
    }
    if radius < 0 {
        return domain("radius must be non-negative");
    }
    let all = ball_unclipped(center, radius);
    Ok(Region::new(all.sites.into_iter().filter(|s| lattice.contains(s)).collect()))
}

/// Sites of `Z^d` within distance `l` of at least one support site.
pub fn omega_region_unclipped(support: &Region, l: i64) -> Result<Region> {
    if support.is_empty() {
        return domain("observable support is empty");
    }
    if l < 0 {
        return domain("truncation length must be non-negative");
    }
    let mut sites = Vec::new();
    for s in support.sites() {
        sites.extend(ball_unclipped(s, l).sites);
    }
    Ok(Region::new(sites))
}

/// Lattice sites within distance `l` of the support set.
pub fn omega_region(support: &Region, l: i64, lattice: &LatticeSpec) -> Result<Region> {
    if let Some(s) = support.sites().iter().find(|s| !lattice.contains(s)) {
        return domain(format!("support site {s:?} outside lattice"));
    }
    let all = omega_region_unclipped(support, l)?;
    Ok(Region::new(all.sites.into_iter().filter(|s| lattice.contains(s)).collect()))
}

/// Interaction radius, observable radius and the Lieb-Robinson constants
/// derived from them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalityConstants {
    pub d: usize,
    pub r: f64,
    pub r_o: f64,
    pub lambda_d: f64,
    pub v: f64,
    pub mu: f64,
}

impl LocalityConstants {
    pub fn new(d: usize, r: f64, r_o: f64) -> Result<Self> {
        if d == 0 || r <= 0.0 || r_o < 0.0 {
            return domain("need d ≥ 1, R > 0 and R_O ≥ 0");
        }
        let lambda_d = lambda_d(d);
        Ok(Self {
            d,
            r,
            r_o,
            lambda_d,
            v: std::f64::consts::E * lambda_d * r.powi(d as i32 + 1),
            mu: 1.0 / r,
        })
    }
}

/// Volume constant `2^d / d!` of the unit l1 ball.
pub fn lambda_d(d: usize) -> f64 {
    let fact: f64 = (1..=d).map(|k| k as f64).product();
    2f64.powi(d as i32) / fact
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaCountBound {
    /// Bound on the number of retained terms.
    pub count_bound: f64,
    /// Bound on the size of the support of the truncated Hamiltonian.
    pub support_bound: f64,
    /// `2^d Λ_d l^d`, valid for `l ≥ 2R + R_O`.
    pub simplified: Option<f64>,
}

pub fn theta_count_bound(l: f64, c: &LocalityConstants) -> ThetaCountBound {
    let d = c.d as i32;
    let simplified = (l >= 2.0 * c.r + c.r_o).then(|| 2f64.powi(d) * c.lambda_d * l.powi(d));
    ThetaCountBound {
        count_bound: c.lambda_d * (c.r_o + l + c.r).powi(d),
        support_bound: c.lambda_d * (2.0 * c.r + l + c.r_o).powi(d),
        simplified,
    }
}
