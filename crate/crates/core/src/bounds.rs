//! Closed-form right-hand sides of the stability bounds and the parameter
//! choices that balance their terms.
//!
//! Every bound is evaluated with explicit constants. Where a result is only
//! stated up to constants, the expression before simplification is used and
//! the simplified scaling form is kept alongside it for exponent fits.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, StabError};
use crate::lattice::{theta_count_bound, LocalityConstants};

/// Identifier of a bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TheoremId {
    /// Worst-case analog error under constant perturbations.
    T1,
    /// Worst-case digital error, perturbation `δ t/n` per gate.
    T2,
    /// Worst-case digital error, perturbation `δ` per gate.
    T3,
    /// Average analog error under Gaussian-process noise.
    T4,
    /// Average analog error under white noise.
    T5,
    /// Expected worst-case analog error under random constant perturbations.
    T5b,
    /// Average digital error, M1 noise.
    T6,
    /// Average digital error, M2 noise.
    T7,
    /// Average digital error, discrete-Ito noise.
    T8,
    /// Lindbladian perturbation.
    T9,
    /// Product-formula error on the truncated system.
    Trotter,
    /// Lieb-Robinson truncation error.
    Truncation,
    /// Norm of an interleaved sum of mean-zero unit perturbations.
    RandomSum,
}

impl TheoremId {
    pub const ALL: [TheoremId; 13] = [
        TheoremId::T1,
        TheoremId::T2,
        TheoremId::T3,
        TheoremId::T4,
        TheoremId::T5,
        TheoremId::T5b,
        TheoremId::T6,
        TheoremId::T7,
        TheoremId::T8,
        TheoremId::T9,
        TheoremId::Trotter,
        TheoremId::Truncation,
        TheoremId::RandomSum,
    ];

    /// Whether the bound holds for every realization rather than on average.
    pub fn is_worst_case(self) -> bool {
        matches!(self, TheoremId::T1 | TheoremId::T2 | TheoremId::T3 | TheoremId::Trotter | TheoremId::Truncation)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::T1 => "T1",
            TheoremId::T2 => "T2",
            TheoremId::T3 => "T3",
            TheoremId::T4 => "T4",
            TheoremId::T5 => "T5",
            TheoremId::T5b => "T5b",
            TheoremId::T6 => "T6",
            TheoremId::T7 => "T7",
            TheoremId::T8 => "T8",
            TheoremId::T9 => "T9",
            TheoremId::Trotter => "trotter",
            TheoremId::Truncation => "truncation",
            TheoremId::RandomSum => "random_sum",
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = StabError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        TheoremId::ALL
            .into_iter()
            .find(|id| id.as_str().to_ascii_lowercase() == key)
            .ok_or_else(|| StabError::Config(format!("unknown theorem id {s:?}")))
    }
}

/// Inputs of the bound evaluator.
///
/// `lambda = None` is the infinite correlation length. `theta` is the number
/// of retained terms `|Θ_l|`; when absent it is replaced by its counting
/// bound at `l`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundParams {
    pub d: usize,
    pub r: f64,
    #[serde(default)]
    pub r_o: f64,
    pub norm_o: f64,
    pub supp_o: usize,
    #[serde(default)]
    pub p: Option<usize>,
    #[serde(default)]
    pub t: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default = "one")]
    pub m: usize,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub l: Option<i64>,
    #[serde(default)]
    pub theta: Option<usize>,
    /// The truncated system is the whole lattice, so truncation is exact.
    #[serde(default)]
    pub covers_all: bool,
    /// `‖Σ_a L_a²‖` for the Lindblad bound; defaults to `m |Θ_l|`.
    #[serde(default)]
    pub jump_square_norm: Option<f64>,
    /// Random-matrix constant of the expected worst-case analog bound;
    /// defaults to `2^d Λ_d`.
    #[serde(default)]
    pub c_random: Option<f64>,
}

fn one() -> usize {
    1
}

impl BoundParams {
    /// Parameters for a `d`-dimensional lattice with interaction radius `r`
    /// and a single-site observable of norm one.
    pub fn new(d: usize, r: f64) -> Self {
        Self {
            d,
            r,
            r_o: 0.0,
            norm_o: 1.0,
            supp_o: 1,
            p: None,
            t: None,
            delta: None,
            lambda: None,
            m: 1,
            n: None,
            l: None,
            theta: None,
            covers_all: false,
            jump_square_norm: None,
            c_random: None,
        }
    }

    pub fn constants(&self) -> Result<LocalityConstants> {
        LocalityConstants::new(self.d, self.r, self.r_o)
    }

    fn need_t(&self) -> Result<f64> {
        match self.t {
            Some(t) if t >= 0.0 && t.is_finite() => Ok(t),
            Some(t) => domain(format!("t must be finite and non-negative, got {t}")),
            None => domain("missing parameter t"),
        }
    }

    fn need_delta(&self) -> Result<f64> {
        match self.delta {
            Some(x) if x >= 0.0 && x.is_finite() => Ok(x),
            Some(x) => domain(format!("delta must be finite and non-negative, got {x}")),
            None => domain("missing parameter delta"),
        }
    }

    fn need_p(&self) -> Result<usize> {
        match self.p {
            Some(p) if p > 0 && p % 2 == 0 => Ok(p),
            Some(p) => domain(format!("product formula order must be even and positive, got {p}")),
            None => domain("missing parameter p"),
        }
    }

    fn need_n(&self) -> Result<f64> {
        match self.n {
            Some(n) if n > 0 => Ok(n as f64),
            Some(_) => domain("Trotter number must be at least 1"),
            None => domain("missing parameter n"),
        }
    }

    fn theta_count(&self, c: &LocalityConstants) -> Result<f64> {
        if let Some(th) = self.theta {
            return Ok(th as f64);
        }
        match self.l {
            Some(l) if l >= 0 => Ok(theta_count_bound(l as f64, c).count_bound),
            Some(l) => domain(format!("truncation length must be non-negative, got {l}")),
            None => domain("missing parameter theta (or l)"),
        }
    }
}

/// Stage count `Υ = 2·5^{p/2−1}` of the order-`p` Suzuki formula.
pub fn upsilon(p: usize) -> f64 {
    2.0 * 5f64.powi(p as i32 / 2 - 1)
}

/// Product-formula constant `K = 2^p (Λ_d 2^d R^d)^p [(p−1)!]^d / (p+1)!`.
pub fn trotter_k(p: usize, c: &LocalityConstants) -> f64 {
    let d = c.d as i32;
    let fact = |k: usize| -> f64 { (1..=k).map(|i| i as f64).product() };
    2f64.powi(p as i32) * (c.lambda_d * 2f64.powi(d) * c.r.powi(d)).powi(p as i32) * fact(p - 1).powi(d)
        / fact(p + 1)
}

/// `K_d ≤ Γ(d)/μ^d`.
pub fn k_d(c: &LocalityConstants) -> f64 {
    let gamma: f64 = (1..c.d).map(|i| i as f64).product();
    gamma / c.mu.powi(c.d as i32)
}

/// Worst-case analog constant `M = ‖O‖ |supp O| v^d (2^d Λ_d + K_d)`.
pub fn analog_m(norm_o: f64, supp_o: usize, c: &LocalityConstants) -> f64 {
    norm_o * supp_o as f64 * c.v.powi(c.d as i32) * (2f64.powi(c.d as i32) * c.lambda_d + k_d(c))
}

/// Lieb-Robinson truncation error `|supp O| ‖O‖ min(e^{−μl}(e^{μvt} − 1), 1)`.
pub fn truncation_term(norm_o: f64, supp_o: usize, l: i64, t: f64, c: &LocalityConstants) -> f64 {
    let growth = (-c.mu * l as f64).exp() * (c.mu * c.v * t).exp_m1();
    supp_o as f64 * norm_o * growth.min(1.0)
}

/// Expected norm bound `√(2π T)` for a sum of `T` mean-zero unit draws.
pub fn random_sum_bound(count: f64) -> f64 {
    (2.0 * std::f64::consts::PI * count).sqrt()
}

/// Concentration form `Prob[Δ ≥ offset + s·scale] ≤ 2e^{−s²}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailForm {
    pub offset: f64,
    pub scale: f64,
}

impl TailForm {
    pub fn threshold(&self, s: f64) -> f64 {
        self.offset + s * self.scale
    }

    pub fn probability(s: f64) -> f64 {
        (2.0 * (-s * s).exp()).min(1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem: TheoremId,
    pub rhs: f64,
    /// Simplified scaling form evaluated at the same parameters.
    pub asymptotic: f64,
    pub asymptotic_form: String,
    pub n_opt: Option<usize>,
    pub l_opt: Option<i64>,
    pub tail: Option<TailForm>,
    /// Assumptions of the bound, computed rather than presumed.
    pub flags: BTreeMap<String, bool>,
}

impl BoundReport {
    pub fn assumptions_ok(&self) -> bool {
        self.flags.values().all(|&b| b)
    }

    /// Names of the failed assumptions, joined by `|`.
    pub fn failed_flags(&self) -> String {
        self.flags.iter().filter(|(_, &ok)| !ok).map(|(k, _)| k.as_str()).collect::<Vec<_>>().join("|")
    }
}

/// Evaluates the right-hand side of `id` at `params`.
pub fn eval_bound(id: TheoremId, params: &BoundParams) -> Result<BoundReport> {
    let c = params.constants()?;
    let d = params.d as i32;
    let df = params.d as f64;
    let o = params.norm_o;
    let mut flags = BTreeMap::new();
    let mut tail = None;

    let trunc = |t: f64| -> Result<f64> {
        if params.covers_all {
            return Ok(0.0);
        }
        match params.l {
            Some(l) => Ok(truncation_term(o, params.supp_o, l, t, &c)),
            None => domain("missing parameter l"),
        }
    };
    let trotter = |t: f64| -> Result<f64> {
        let p = params.need_p()?;
        let n = params.need_n()?;
        Ok(trotter_k(p, &c) * params.theta_count(&c)? * t.powi(p as i32 + 1) / n.powi(p as i32))
    };

    let (rhs, asymptotic, form) = match id {
        TheoremId::T1 => {
            let (t, delta) = (params.need_t()?, params.need_delta()?);
            flags.insert("vt_gt_1".into(), c.v * t > 1.0);
            flags.insert("delta_t_small".into(), delta * t.powi(d + 1) <= 1.0);
            let m = analog_m(o, params.supp_o, &c);
            (m * delta * t.powi(d + 1), delta * t.powi(d + 1), "delta*t^(d+1)")
        }
        TheoremId::T2 => {
            let (t, delta, p) = (params.need_t()?, params.need_delta()?, params.need_p()?);
            let theta = params.theta_count(&c)?;
            let noise = 2.0 * o * upsilon(p) * theta * delta * t;
            (noise + 2.0 * o * trotter(t)? + trunc(t)?, delta * t.powi(d + 1), "delta*t^(d+1)")
        }
        TheoremId::T3 => {
            let (t, delta, p) = (params.need_t()?, params.need_delta()?, params.need_p()?);
            let n = params.need_n()?;
            let theta = params.theta_count(&c)?;
            let noise = 2.0 * o * n * upsilon(p) * theta * delta;
            let pf = p as f64;
            (
                noise + 2.0 * o * trotter(t)? + trunc(t)?,
                delta.powf(pf / (pf + 1.0)) * t.powi(d + 1),
                "delta^(p/(p+1))*t^(d+1)",
            )
        }
        TheoremId::T4 => {
            let (t, delta) = (params.need_t()?, params.need_delta()?);
            let theta = params.theta_count(&c)?;
            let integral = match params.lambda {
                Some(lam) if lam > 0.0 => ((2.0 * std::f64::consts::PI).sqrt() * lam * t).min(t * t),
                Some(lam) => return domain(format!("correlation length must be positive, got {lam}")),
                None => t * t,
            };
            let exponent = delta * delta * params.m as f64 * theta * integral / 2.0;
            let rhs = 2.0 * o * exponent.exp_m1().sqrt() + trunc(t)?;
            match params.lambda {
                Some(lam) => (rhs, lam.sqrt() * delta * t.powf((df + 1.0) / 2.0), "sqrt(lambda)*delta*t^((d+1)/2)"),
                None => (rhs, delta * t.powf(df / 2.0 + 1.0), "delta*t^(d/2+1)"),
            }
        }
        TheoremId::T5 => {
            let (t, delta) = (params.need_t()?, params.need_delta()?);
            let theta = params.theta_count(&c)?;
            let stochastic = 2.0 * o * (delta * delta * t * params.m as f64 * theta / 2.0).sqrt();
            let tr = trunc(t)?;
            tail = Some(TailForm { offset: tr, scale: stochastic });
            (stochastic + tr, delta * t.powf((df + 1.0) / 2.0), "delta*t^((d+1)/2)")
        }
        TheoremId::T5b => {
            let (t, delta) = (params.need_t()?, params.need_delta()?);
            let theta = params.theta_count(&c)?;
            flags.insert("vt_gt_1".into(), c.v * t > 1.0);
            let c_rand = params.c_random.unwrap_or(2f64.powi(d) * c.lambda_d);
            let rhs = 2.0 * c_rand.sqrt() * o * delta * t * theta + o * params.supp_o as f64 * k_d(&c) * t * delta;
            (rhs, delta * t.powi(d + 1), "delta*t^(d+1)")
        }
        TheoremId::T6 => {
            let (t, delta, p) = (params.need_t()?, params.need_delta()?, params.need_p()?);
            let n = params.need_n()?;
            let theta = params.theta_count(&c)?;
            let ups = upsilon(p);
            let sum = 2.0 * o * (2.0 * std::f64::consts::PI * ups * theta).sqrt() * delta * t / n.sqrt();
            let rest = 2.0 * o * theta * delta * ups * t * t / n + 2.0 * o * trotter(t)? + trunc(t)?;
            tail = Some(TailForm { offset: rest, scale: 2.0 * o * (2.0 * ups * theta).sqrt() * delta * t / n.sqrt() });
            (sum + rest, delta * t.powf(df / 2.0 + 1.0) / n.sqrt(), "delta*t^(d/2+1)/sqrt(n)")
        }
        TheoremId::T7 | TheoremId::T8 => {
            let (t, delta, p) = (params.need_t()?, params.need_delta()?, params.need_p()?);
            let n = params.need_n()?;
            let eff = if id == TheoremId::T8 { delta * (t / n).sqrt() } else { delta };
            let theta = params.theta_count(&c)?;
            let ups = upsilon(p);
            let sum = (2.0 * std::f64::consts::PI * ups * theta).sqrt() * eff * (n.sqrt() + t / n.sqrt());
            let second = theta * (2.0 / 3.0) * ups * (eff * eff * t + eff * t * t / n);
            let rhs = 2.0 * o * (sum + second) + 2.0 * o * trotter(t)? + trunc(t)?;
            let pf = p as f64;
            if id == TheoremId::T7 {
                (rhs, delta.powf(2.0 * pf / (2.0 * pf + 1.0)) * t.powf(2.0 * (df + 1.0) / 3.0), "delta^(2p/(2p+1))*t^(2(d+1)/3)")
            } else {
                (rhs, delta * t.powf((df + 1.0) / 2.0), "delta*t^((d+1)/2)")
            }
        }
        TheoremId::T9 => {
            let (t, delta) = (params.need_t()?, params.need_delta()?);
            let sq = match params.jump_square_norm {
                Some(x) => x,
                None => params.m as f64 * params.theta_count(&c)?,
            };
            (2.0 * o * delta * (t * sq).sqrt() + trunc(t)?, delta * t.powf((df + 1.0) / 2.0), "delta*t^((d+1)/2)")
        }
        TheoremId::Trotter => {
            let t = params.need_t()?;
            let p = params.need_p()? as i32;
            let rhs = trotter(t)?;
            (rhs, t.powi(p + 1) / params.need_n()?.powi(p), "t^(p+1)/n^p")
        }
        TheoremId::Truncation => {
            let t = params.need_t()?;
            let rhs = trunc(t)?;
            let l = params.l.unwrap_or(0) as f64;
            (rhs, (-c.mu * (l - c.v * t)).exp(), "exp(-mu*(l-v*t))")
        }
        TheoremId::RandomSum => {
            let p = params.need_p()?;
            let n = params.need_n()?;
            let count = n * upsilon(p) * params.theta_count(&c)?;
            (random_sum_bound(count), count.sqrt(), "sqrt(n*Upsilon*|Theta|)")
        }
    };

    let opt = match (params.t, params.delta) {
        (Some(t), Some(delta)) if delta > 0.0 && delta < 1.0 && t > 0.0 => optimal_params(id, params, None).ok(),
        _ => None,
    };
    Ok(BoundReport {
        theorem: id,
        rhs,
        asymptotic,
        asymptotic_form: form.to_string(),
        n_opt: opt.as_ref().and_then(|o| o.n_opt),
        l_opt: opt.as_ref().and_then(|o| o.l_opt),
        tail,
        flags,
    })
}

/// Balanced choices of the Trotter number and truncation length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalParams {
    pub n_opt: Option<usize>,
    pub l_opt: Option<i64>,
    /// `l_opt` is at most the capacity limit passed in.
    pub l_feasible: bool,
}

fn ceil_int(x: f64) -> f64 {
    // guard against `powf` landing a hair above an exact integer
    (x * (1.0 - 1e-12)).ceil().max(1.0)
}

/// `n_opt` and `l_opt` of the given bound. `l_cap` clips the truncation
/// length to what fits in memory.
pub fn optimal_params(id: TheoremId, params: &BoundParams, l_cap: Option<i64>) -> Result<OptimalParams> {
    let t = params.need_t()?;
    let delta = params.need_delta()?;
    if !(delta > 0.0 && delta < 1.0) {
        return domain(format!("optimal parameters need 0 < delta < 1, got {delta}"));
    }
    if t <= 0.0 {
        return domain("optimal parameters need t > 0");
    }
    let c = params.constants()?;
    let d = params.d as i32;
    let n_opt = match id {
        TheoremId::T2 => Some(t / delta.powf(1.0 / params.need_p()? as f64)),
        TheoremId::T3 => Some(t / delta.powf(1.0 / (params.need_p()? + 1) as f64)),
        TheoremId::T7 => {
            let p = params.need_p()? as f64;
            Some(delta.powf(-2.0 / (2.0 * p + 1.0)) * t.powf((params.d as f64 + 4.0) / 3.0))
        }
        _ => None,
    }
    .map(|x| ceil_int(x) as usize);
    let l_raw = c.v * t - (delta * t.powi(d + 1)).ln() / c.mu;
    let l_raw = ceil_int(l_raw) as i64;
    let (l_opt, l_feasible) = match l_cap {
        Some(cap) if l_raw > cap => (cap, false),
        _ => (l_raw, true),
    };
    Ok(OptimalParams { n_opt, l_opt: Some(l_opt), l_feasible })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> BoundParams {
        BoundParams::new(1, 1.0)
    }

    #[test]
    fn analog_constant_in_one_dimension() {
        let c = base().constants().unwrap();
        let m = analog_m(1.0, 1, &c);
        assert!((m - 10.0 * std::f64::consts::E).abs() < 1e-12);
        let mut p = base();
        p.t = Some(2.0);
        p.delta = Some(1e-3);
        let rep = eval_bound(TheoremId::T1, &p).unwrap();
        assert!((rep.rhs - 27.18281828459045 * 1e-3 * 4.0).abs() < 1e-12);
        assert!(rep.assumptions_ok());
        p.t = Some(0.1);
        assert!(!eval_bound(TheoremId::T1, &p).unwrap().assumptions_ok());
    }

    #[test]
    fn trotter_constant() {
        let c = base().constants().unwrap();
        assert!((trotter_k(2, &c) - 64.0 / 6.0).abs() < 1e-12);
        assert!((trotter_k(4, &c) - 4096.0 * 6.0 / 120.0).abs() < 1e-9);
    }

    #[test]
    fn trotter_bound_halves_p_times() {
        let mut p = base();
        p.p = Some(4);
        p.t = Some(1.0);
        p.theta = Some(3);
        p.n = Some(10);
        let a = eval_bound(TheoremId::Trotter, &p).unwrap().rhs;
        p.n = Some(20);
        let b = eval_bound(TheoremId::Trotter, &p).unwrap().rhs;
        assert!((a / b - 16.0).abs() < 1e-9);
    }

    #[test]
    fn noise_bounds_vanish_without_noise() {
        let mut p = base();
        p.t = Some(1.5);
        p.delta = Some(0.0);
        p.theta = Some(4);
        p.covers_all = true;
        p.p = Some(2);
        p.n = Some(1_000_000);
        for id in [TheoremId::T1, TheoremId::T4, TheoremId::T5, TheoremId::T5b, TheoremId::T9] {
            assert_eq!(eval_bound(id, &p).unwrap().rhs, 0.0, "{id}");
        }
        for id in [TheoremId::T2, TheoremId::T3, TheoremId::T6, TheoremId::T7, TheoremId::T8] {
            let rep = eval_bound(id, &p).unwrap();
            let trotter = 2.0 * eval_bound(TheoremId::Trotter, &p).unwrap().rhs;
            assert!((rep.rhs - trotter).abs() <= 1e-15, "{id}");
        }
    }

    #[test]
    fn missing_parameter_is_a_domain_error() {
        let p = base();
        assert!(matches!(eval_bound(TheoremId::T1, &p), Err(StabError::Domain(_))));
        let mut p = base();
        p.t = Some(1.0);
        p.delta = Some(0.1);
        assert!(matches!(eval_bound(TheoremId::T5, &p), Err(StabError::Domain(_))));
    }

    #[test]
    fn optimal_trotter_numbers() {
        let mut p = base();
        p.p = Some(2);
        p.t = Some(10.0);
        p.delta = Some(1e-4);
        assert_eq!(optimal_params(TheoremId::T2, &p, None).unwrap().n_opt, Some(1000));
        p.delta = Some(1e-3);
        assert_eq!(optimal_params(TheoremId::T3, &p, None).unwrap().n_opt, Some(100));
        p.delta = Some(1.0);
        assert!(optimal_params(TheoremId::T2, &p, None).is_err());
    }

    #[test]
    fn l_opt_grows_as_delta_shrinks() {
        let mut p = base();
        p.p = Some(2);
        p.t = Some(1.0);
        let mut prev = i64::MIN;
        for delta in [1e-1, 1e-3, 1e-5, 1e-7, 1e-9] {
            p.delta = Some(delta);
            let l = optimal_params(TheoremId::T2, &p, None).unwrap().l_opt.unwrap();
            assert!(l > prev);
            prev = l;
        }
        let clipped = optimal_params(TheoremId::T2, &p, Some(3)).unwrap();
        assert_eq!(clipped.l_opt, Some(3));
        assert!(!clipped.l_feasible);
    }

    #[test]
    fn truncation_term_saturates() {
        let c = base().constants().unwrap();
        assert_eq!(truncation_term(1.0, 1, 0, 10.0, &c), 1.0);
        assert_eq!(truncation_term(1.0, 1, 5, 0.0, &c), 0.0);
    }

    #[test]
    fn white_noise_tail_scale() {
        let mut p = base();
        p.t = Some(2.0);
        p.delta = Some(0.1);
        p.theta = Some(3);
        p.covers_all = true;
        let rep = eval_bound(TheoremId::T5, &p).unwrap();
        let tail = rep.tail.unwrap();
        assert_eq!(tail.offset, 0.0);
        assert!((tail.threshold(1.0) - rep.rhs).abs() < 1e-15);
        assert!(TailForm::probability(1.0) > TailForm::probability(2.0));
    }

    #[test]
    fn finite_correlation_length_is_never_worse() {
        let mut p = base();
        p.t = Some(3.0);
        p.delta = Some(0.01);
        p.theta = Some(5);
        p.covers_all = true;
        let inf = eval_bound(TheoremId::T4, &p).unwrap().rhs;
        p.lambda = Some(0.1);
        let fin = eval_bound(TheoremId::T4, &p).unwrap().rhs;
        assert!(fin < inf);
    }

    #[test]
    fn theorem_ids_parse() {
        for id in TheoremId::ALL {
            assert_eq!(id.as_str().parse::<TheoremId>().unwrap(), id);
        }
        assert_eq!("t5B".parse::<TheoremId>().unwrap(), TheoremId::T5b);
        assert!("T10".parse::<TheoremId>().is_err());
    }
}
