//! Disease-free and endemic steady states.
//!
//! The endemic state is built through the auxiliary pair `g`, `f`: for a
//! candidate steady `[SS] = U`, the steady `[SI] = Z = g(U)` is the
//! nonnegative root of
//!
//! ```text
//! γ nN U = γ Z² + Z U (τ + 2γ) + γ U²
//! ```
//!
//! and the endemic `U` is the unique root of `f(U) = 1` on `(0, nN)`, found by
//! bisection. The steady susceptibles then follow from
//! `X_l = γ N_l / (γ + τ n_l Z / (Z + U))` and `[II]` from conservation of
//! pairs.

use serde::{Deserialize, Serialize};

use crate::degree::{DegreeDistribution, EpidemicParams};
use crate::error::{Error, Result};
use crate::system::{CompactPairwise, CpState};

/// Lower end of the bisection bracket, relative to nN.
pub const BRACKET_FLOOR: f64 = 1e-12;
/// Bisection stops once the bracket is narrower than this times nN.
pub const BRACKET_WIDTH: f64 = 1e-12;
pub const MAX_BISECTIONS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumKind {
    DiseaseFree,
    Endemic,
    /// The continuation of the endemic branch below threshold. It has
    /// negative coordinates and no epidemiological meaning.
    Virtual,
}

/// Steady values `X_l = [S_l]`, `Z = [SI]`, `U = [SS]`, `V = [II]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndemicCoordinates {
    pub x: Vec<f64>,
    pub z: f64,
    pub u: f64,
    pub v: f64,
}

impl From<&CpState> for EndemicCoordinates {
    fn from(c: &CpState) -> Self {
        Self {
            x: c.s.clone(),
            z: c.si,
            u: c.ss,
            v: c.ii,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub kind: EquilibriumKind,
    pub coordinates: CpState,
    /// Max-norm of the full right-hand side at `coordinates`.
    pub residual_norm: f64,
    /// Bisection steps taken.
    pub iterations: usize,
    /// Final bracket of the bisection variable (`U` for the endemic solver,
    /// θ for the virtual branch).
    pub bracket: (f64, f64),
}

impl EquilibriumReport {
    pub fn total_infected(&self) -> f64 {
        self.coordinates.total_infected()
    }
}

pub fn disease_free(dist: &DegreeDistribution) -> CpState {
    CpState {
        s: dist.counts().collect(),
        i: vec![0.0; dist.len()],
        si: 0.0,
        ss: dist.stubs(),
        ii: 0.0,
    }
}

fn check_u(u: f64, dist: &DegreeDistribution, allow_zero: bool) -> Result<()> {
    let nn = dist.stubs();
    let ok = if allow_zero { u >= 0.0 } else { u > 0.0 };
    if ok && u <= nn {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            what: "U",
            value: u,
            lo: 0.0,
            hi: nn,
        })
    }
}

fn discriminant_root(u: f64, p: EpidemicParams, nn: f64) -> f64 {
    let EpidemicParams { tau, gamma } = p;
    (u * u * (tau * tau + 4.0 * gamma * tau) + 4.0 * u * nn * gamma * gamma).sqrt()
}

/// Steady `[SI]` as a function of steady `[SS]`.
///
/// Evaluated as `2γU(nN − U) / (U(τ + 2γ) + s)`, the conjugate form of the
/// quadratic-formula root, which keeps full relative accuracy as `U → nN`.
pub fn g_of_u(u: f64, params: EpidemicParams, dist: &DegreeDistribution) -> Result<f64> {
    check_u(u, dist, true)?;
    if u == 0.0 {
        return Ok(0.0);
    }
    let nn = dist.stubs();
    let EpidemicParams { tau, gamma } = params;
    let s = discriminant_root(u, params, nn);
    Ok(2.0 * gamma * u * (nn - u) / (u * (tau + 2.0 * gamma) + s))
}

pub fn g_prime(u: f64, params: EpidemicParams, dist: &DegreeDistribution) -> Result<f64> {
    check_u(u, dist, false)?;
    let nn = dist.stubs();
    let EpidemicParams { tau, gamma } = params;
    let s = discriminant_root(u, params, nn);
    let num = u * (tau * tau + 4.0 * gamma * tau) + 2.0 * nn * gamma * gamma;
    Ok((num / s - (tau + 2.0 * gamma)) / (2.0 * gamma))
}

pub fn g_double_prime(u: f64, params: EpidemicParams, dist: &DegreeDistribution) -> Result<f64> {
    check_u(u, dist, false)?;
    let nn = dist.stubs();
    let gamma = params.gamma;
    let s = discriminant_root(u, params, nn);
    Ok(-2.0 * nn * nn * gamma.powi(3) / (s * s * s))
}

/// `f(U) = (τU / (U + g)) Σ n_l(n_l − 1)N_l / (γ(U + g) + τ n_l g)`.
pub fn f_of_u(u: f64, params: EpidemicParams, dist: &DegreeDistribution) -> Result<f64> {
    check_u(u, dist, false)?;
    let EpidemicParams { tau, gamma } = params;
    let g = g_of_u(u, params, dist)?;
    let sum: f64 = dist
        .classes()
        .iter()
        .map(|c| {
            let k = c.degree as f64;
            k * (k - 1.0) * c.count as f64 / (gamma * (u + g) + tau * k * g)
        })
        .sum();
    Ok(tau * u / (u + g) * sum)
}

/// Limit of `f` as `U → 0⁺`: `(τ/nN) Σ n_l(n_l − 1)N_l / (γ + τ n_l)`.
pub fn f_limit_at_zero(params: EpidemicParams, dist: &DegreeDistribution) -> f64 {
    let EpidemicParams { tau, gamma } = params;
    let sum: f64 = dist
        .classes()
        .iter()
        .map(|c| {
            let k = c.degree as f64;
            k * (k - 1.0) * c.count as f64 / (gamma + tau * k)
        })
        .sum();
    tau / dist.stubs() * sum
}

/// `h_l(U) = U + g(U)(1/n_l + τ/γ + 1)`, strictly increasing on `(0, nN)`.
pub fn h_l(u: f64, degree: f64, params: EpidemicParams, dist: &DegreeDistribution) -> Result<f64> {
    let g = g_of_u(u, params, dist)?;
    Ok(u + g * (1.0 / degree + params.tau / params.gamma + 1.0))
}

/// Max-norm of the full right-hand side.
pub fn residual(state: &CpState, params: EpidemicParams, dist: &DegreeDistribution) -> Result<f64> {
    CompactPairwise::new(dist.clone(), params).residual(state)
}

/// Assembles the full state from steady `[S_l]` given by the edge
/// prevalence `θ = Z/(Z + U)`, plus `Z`, `U`.
fn assemble(theta: f64, z: f64, u: f64, params: EpidemicParams, dist: &DegreeDistribution) -> CpState {
    let EpidemicParams { tau, gamma } = params;
    let mut s = Vec::with_capacity(dist.len());
    let mut i = Vec::with_capacity(dist.len());
    for c in dist.classes() {
        let (k, n) = (c.degree as f64, c.count as f64);
        let denom = gamma + tau * k * theta;
        s.push(gamma * n / denom);
        i.push(tau * k * theta * n / denom);
    }
    CpState {
        s,
        i,
        si: z,
        ss: u,
        ii: dist.stubs() - u - 2.0 * z,
    }
}

/// The unique endemic steady state for `τ > τ_c`.
pub fn endemic_equilibrium(params: EpidemicParams, dist: &DegreeDistribution) -> Result<EquilibriumReport> {
    let tau_c = dist.tau_c(params.gamma);
    if params.tau <= tau_c {
        return Err(Error::BelowThreshold { tau: params.tau, tau_c });
    }
    let nn = dist.stubs();
    let mut lo = BRACKET_FLOOR * nn;
    let mut hi = nn;
    let f_lo = f_of_u(lo, params, dist)?;
    let f_hi = f_of_u(hi, params, dist)?;
    if !(f_lo < 1.0 && f_hi > 1.0) {
        return Err(Error::BracketFailure { lo, hi, f_lo, f_hi });
    }
    let mut iterations = 0;
    while hi - lo >= BRACKET_WIDTH * nn && iterations < MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if f_of_u(mid, params, dist)? < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let u = 0.5 * (lo + hi);
    let z = g_of_u(u, params, dist)?;
    let state = assemble(z / (z + u), z, u, params, dist);
    Ok(EquilibriumReport {
        kind: EquilibriumKind::Endemic,
        residual_norm: residual(&state, params, dist)?,
        coordinates: state,
        iterations,
        bracket: (lo, hi),
    })
}

/// Steady state of the θ-form for a given edge prevalence `θ`, as
/// `(S_l(θ), θ̇(θ))` with `S_l = γN_l/(γ + τ n_l θ)`.
fn theta_balance(theta: f64, params: EpidemicParams, dist: &DegreeDistribution) -> f64 {
    let EpidemicParams { tau, gamma } = params;
    let (mut s_s, mut d) = (0.0, 0.0);
    for c in dist.classes() {
        let (k, n) = (c.degree as f64, c.count as f64);
        let s = gamma * n / (gamma + tau * k * theta);
        s_s += k * s;
        d += k * k * s;
    }
    gamma * (dist.stubs() / s_s) * (1.0 - theta) - gamma * (1.0 + theta) + tau * (d / s_s - 2.0) * theta * (1.0 - theta)
}

fn theta_state(theta: f64, params: EpidemicParams, dist: &DegreeDistribution) -> CpState {
    let EpidemicParams { tau, gamma } = params;
    let s_s: f64 = dist
        .classes()
        .iter()
        .map(|c| {
            let k = c.degree as f64;
            k * gamma * c.count as f64 / (gamma + tau * k * theta)
        })
        .sum();
    let z = theta * s_s;
    assemble(theta, z, s_s - z, params, dist)
}

/// Nontrivial equilibrium found in θ-coordinates: the root of
/// `θ̇(θ)/θ` with the steady susceptibles substituted.
///
/// Above threshold the root lies in `(0, 1)` and coincides with
/// [`endemic_equilibrium`]; below threshold it lies in
/// `(−γ/(τ n_max), 0)` and gives the virtual branch. The root closest to
/// θ = 0 is returned.
pub fn theta_branch_equilibrium(params: EpidemicParams, dist: &DegreeDistribution) -> Result<EquilibriumReport> {
    let EpidemicParams { tau, gamma } = params;
    let tau_c = dist.tau_c(gamma);
    if tau == tau_c {
        let state = disease_free(dist);
        return Ok(EquilibriumReport {
            kind: EquilibriumKind::Virtual,
            residual_norm: residual(&state, params, dist)?,
            coordinates: state,
            iterations: 0,
            bracket: (0.0, 0.0),
        });
    }
    let supercritical = tau > tau_c;
    let far = if supercritical {
        1.0
    } else {
        if tau == 0.0 {
            return Err(Error::BracketFailure {
                lo: f64::NEG_INFINITY,
                hi: 0.0,
                f_lo: f64::NAN,
                f_hi: f64::NAN,
            });
        }
        let k_max = dist.classes().last().unwrap().degree as f64;
        -gamma / (tau * k_max) * (1.0 - 1e-9)
    };
    let reduced = |theta: f64| theta_balance(theta, params, dist) / theta;

    // Scan outward from θ = 0 for the first sign change.
    const GRID: usize = 1000;
    let near = far * 1e-9;
    let h_near = reduced(near);
    let mut prev = (near, h_near);
    let mut bracket = None;
    for j in 1..=GRID {
        let th = far * j as f64 / GRID as f64;
        let h = reduced(th);
        if h.signum() != prev.1.signum() {
            bracket = Some((prev.0, th));
            break;
        }
        prev = (th, h);
    }
    let (mut a, mut b) = bracket.ok_or(Error::BracketFailure {
        lo: near,
        hi: far,
        f_lo: h_near,
        f_hi: reduced(far),
    })?;
    let sign_a = reduced(a).signum();
    let mut iterations = 0;
    while (b - a).abs() > 1e-15 * a.abs().max(b.abs()) && iterations < 200 {
        let mid = 0.5 * (a + b);
        if reduced(mid).signum() == sign_a {
            a = mid;
        } else {
            b = mid;
        }
        iterations += 1;
    }
    let state = theta_state(0.5 * (a + b), params, dist);
    Ok(EquilibriumReport {
        kind: if supercritical {
            EquilibriumKind::Endemic
        } else {
            EquilibriumKind::Virtual
        },
        residual_norm: residual(&state, params, dist)?,
        coordinates: state,
        iterations,
        bracket: (a.min(b), a.max(b)),
    })
}

/// The endemic state above threshold, or the virtual branch when
/// `allow_virtual` is set and `τ ≤ τ_c`.
pub fn nontrivial_equilibrium(
    params: EpidemicParams,
    dist: &DegreeDistribution,
    allow_virtual: bool,
) -> Result<EquilibriumReport> {
    match endemic_equilibrium(params, dist) {
        Err(Error::BelowThreshold { .. }) if allow_virtual => theta_branch_equilibrium(params, dist),
        other => other,
    }
}
