//! Monotone-iteration certificate for global stability of the disease-free
//! state below threshold.
//!
//! If θ = [SI]/S_s stays below `x` from some time on, then every `[S_l]`
//! eventually exceeds `N_l / (1 + a n_l x)`, which bounds `nN/S_s` and
//! `D/S_s` from above, which in turn drives θ below the root `z*(x)` of
//!
//! ```text
//! p_x(z) = γ(1 + Bx)(1 − z) − γ(1 + z) + γa(b(x) − 2) z(1 − z).
//! ```
//!
//! Under (A1) or (A2) `z*(x) < x`, so `x_{n+1} = (x_n + z*(x_n))/2` starting
//! from `x_0 = 1` decreases to zero and θ → 0.

use serde::{Deserialize, Serialize};

use crate::degree::{DegreeDistribution, EpidemicParams};
use crate::error::{Error, Result};
use crate::system::{CpState, ThetaState};

pub const DEFAULT_TARGET_EPS: f64 = 1e-6;
/// The contraction is only linear-over-x near zero, so reaching 10⁻⁶ takes
/// of the order of 10⁷ steps.
pub const DEFAULT_MAX_ITER: u64 = 100_000_000;
/// Every iterate up to this index is kept in the recorded sequence; later
/// ones are sampled geometrically.
pub const RECORD_HEAD: u64 = 1000;
const RECORD_GROWTH: f64 = 1.05;
/// Slack for closed-form roots that land just outside `[0, 1]`.
const ROOT_SLACK: f64 = 1e-10;
/// Relative slack for trajectory bound checks.
pub const BOUND_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Assumption {
    /// `(2 + √2)⟨n⟩ ≤ ⟨n²⟩`.
    A1,
    /// Two degree classes.
    A2,
}

impl Assumption {
    pub fn holds(self, dist: &DegreeDistribution) -> bool {
        let r = dist.check_assumptions();
        match self {
            Assumption::A1 => r.a1_holds,
            Assumption::A2 => r.a2_holds,
        }
    }

    /// A1 if it holds, else A2 if it holds.
    pub fn select(dist: &DegreeDistribution) -> Option<Self> {
        [Assumption::A1, Assumption::A2].into_iter().find(|a| a.holds(dist))
    }
}

fn check_x(x: f64) -> Result<()> {
    if x > 0.0 && x <= 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            what: "x",
            value: x,
            lo: 0.0,
            hi: 1.0,
        })
    }
}

/// `N_l / (1 + a n_l x)`: eventual lower bound on `[S_l]` once θ ≤ x.
pub fn s_lower_bound(x: f64, dist: &DegreeDistribution) -> Result<Vec<f64>> {
    check_x(x)?;
    let a = dist.threshold_ratio();
    Ok(dist
        .degrees()
        .zip(dist.counts())
        .map(|(k, n)| n / (1.0 + a * k * x))
        .collect())
}

/// `1 + Bx`, the Jensen bound on `nN / S_s`.
pub fn jensen_bound(x: f64, dist: &DegreeDistribution) -> Result<f64> {
    check_x(x)?;
    Ok(1.0 + dist.jensen_constant() * x)
}

/// `Σ n_l N_l / (1 + a n_l x)`, the stub count implied by the lower bounds.
/// `nN / jensen_sum(x) ≤ jensen_bound(x)`.
pub fn jensen_sum(x: f64, dist: &DegreeDistribution) -> Result<f64> {
    Ok(s_lower_bound(x, dist)?
        .iter()
        .zip(dist.degrees())
        .map(|(s, k)| k * s)
        .sum())
}

/// Upper bound `b(x)` on `D / S_s`.
pub fn d_over_ss_bound(x: f64, dist: &DegreeDistribution, assumption: Assumption) -> Result<f64> {
    check_x(x)?;
    b_of_x(x, dist, assumption)
}

fn b_of_x(x: f64, dist: &DegreeDistribution, assumption: Assumption) -> Result<f64> {
    match assumption {
        Assumption::A1 => {
            if !assumption.holds(dist) {
                return Err(Error::VariantNotApplicable { variant: "A1" });
            }
            let m = dist.moments();
            Ok(m.n2 / m.n * (1.0 + dist.jensen_constant() * x))
        }
        Assumption::A2 => {
            let c = dist.classes();
            if c.len() != 2 {
                return Err(Error::VariantNotApplicable { variant: "A2" });
            }
            let (n1, n2) = (c[0].degree as f64, c[1].degree as f64);
            let (c1, c2) = (c[0].count as f64, c[1].count as f64);
            let t = 1.0 + dist.threshold_ratio() * n1 * x;
            Ok((n1 * n1 * c1 + t * n2 * n2 * c2) / (n1 * c1 + t * n2 * c2))
        }
    }
}

/// Coefficients `(c2, c1, c0)` of `p_x(z) = c2 z² + c1 z + c0`.
fn p_coefficients(x: f64, gamma: f64, dist: &DegreeDistribution, assumption: Assumption) -> Result<(f64, f64, f64)> {
    let bx = dist.jensen_constant() * x;
    let c = gamma * dist.threshold_ratio() * (b_of_x(x, dist, assumption)? - 2.0);
    Ok((-c, c - gamma * (2.0 + bx), gamma * bx))
}

/// `p_x(z)`.
pub fn p_x(z: f64, x: f64, gamma: f64, dist: &DegreeDistribution, assumption: Assumption) -> Result<f64> {
    check_x(x)?;
    let (c2, c1, c0) = p_coefficients(x, gamma, dist, assumption)?;
    Ok((c2 * z + c1) * z + c0)
}

/// The root of `p_x` in `(0, 1)`.
pub fn z_star(x: f64, gamma: f64, dist: &DegreeDistribution, assumption: Assumption) -> Result<f64> {
    check_x(x)?;
    let (c2, c1, c0) = p_coefficients(x, gamma, dist, assumption)?;
    let p = |z: f64| (c2 * z + c1) * z + c0;
    let (p0, p1) = (p(0.0), p(1.0));
    if !(p0 > 0.0 && p1 < 0.0) {
        return Err(Error::RootNotBracketed { x });
    }
    // c0 > 0 > c0 + c1 + c2, so the discriminant is positive in exact
    // arithmetic.
    let disc = (c1 * c1 - 4.0 * c2 * c0).max(0.0).sqrt();
    let q = -0.5 * (c1 + disc.copysign(c1));
    let mut candidates = Vec::with_capacity(2);
    if q != 0.0 {
        candidates.push(c0 / q);
    }
    if c2 != 0.0 {
        candidates.push(q / c2);
    }
    if let Some(z) = candidates
        .into_iter()
        .find(|z| (-ROOT_SLACK..=1.0 + ROOT_SLACK).contains(z))
    {
        return Ok(z.clamp(0.0, 1.0));
    }
    // Rounding pushed the closed form out of range; bisect instead.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if p(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `F(x) = (x + z*(x)) / 2`.
pub fn contraction_map(x: f64, gamma: f64, dist: &DegreeDistribution, assumption: Assumption) -> Result<f64> {
    Ok(0.5 * (x + z_star(x, gamma, dist, assumption)?))
}

/// `(p″(0), p‴(0))` of the cubic `x ↦ p_x(x)` under A1, in closed form:
/// `p″(0) = −2γ(⟨n²⟩² − 4⟨n²⟩n + 2n²)/(⟨n²⟩ − n)²` and
/// `p‴(0) = −6γ⟨n²⟩²/(⟨n²⟩ − n)²`.
pub fn a1_cubic_derivatives(dist: &DegreeDistribution, gamma: f64) -> (f64, f64) {
    let m = dist.moments();
    let (n, n2) = (m.n, m.n2);
    let den = (n2 - n).powi(2);
    (
        -2.0 * gamma * (n2 * n2 - 4.0 * n2 * n + 2.0 * n * n) / den,
        -6.0 * gamma * n2 * n2 / den,
    )
}

/// The A2 cubic `r(x) = U(x) p_x(x)` with `U(x) = n₁N₁ + (1 + a n₁ x) n₂N₂`.
/// Requires two classes.
pub fn a2_cubic(x: f64, gamma: f64, dist: &DegreeDistribution) -> Result<f64> {
    let c = dist.classes();
    if c.len() != 2 {
        return Err(Error::VariantNotApplicable { variant: "A2" });
    }
    let (n1, n2) = (c[0].degree as f64, c[1].degree as f64);
    let (c1, c2) = (c[0].count as f64, c[1].count as f64);
    let a = dist.threshold_ratio();
    let bb = dist.jensen_constant();
    let t = 1.0 + a * n1 * x;
    let u = n1 * c1 + t * n2 * c2;
    let num = n1 * n1 * c1 + t * n2 * n2 * c2;
    Ok(gamma * (1.0 + bb * x) * (1.0 - x) * u - gamma * (1.0 + x) * u + gamma * a * (num - 2.0 * u) * x * (1.0 - x))
}

/// Closed forms `(r″(0), r‴(0), V)` for the A2 cubic, where
/// `r″(0) = −2γn V / (N(⟨n²⟩ − n)²)`.
pub fn a2_cubic_derivatives(dist: &DegreeDistribution, gamma: f64) -> Result<(f64, f64, f64)> {
    let c = dist.classes();
    if c.len() != 2 {
        return Err(Error::VariantNotApplicable { variant: "A2" });
    }
    let (n1, n2) = (c[0].degree as f64, c[1].degree as f64);
    let (c1, c2) = (c[0].count as f64, c[1].count as f64);
    let m = dist.moments();
    let big_n = dist.n_total();
    let v = a2_v(n1, c1, n2, c2);
    let den = (m.n2 - m.n).powi(2);
    let r2 = -2.0 * gamma * m.n / (big_n * den) * v;
    let r3 = -6.0 * gamma * n2 * c2 * m.n * n1 / den * (m.n2 + m.n * n2 - 2.0 * m.n);
    Ok((r2, r3, v))
}

/// `V = 2n₁²N₁²(n₁−1)² + 2n₂²N₂²(n₂−1)² + N₁N₂n₁n₂(n₁−2)² + N₁N₂n₁n₂²(3n₁−4)`.
pub fn a2_v(n1: f64, c1: f64, n2: f64, c2: f64) -> f64 {
    2.0 * n1 * n1 * c1 * c1 * (n1 - 1.0).powi(2)
        + 2.0 * n2 * n2 * c2 * c2 * (n2 - 1.0).powi(2)
        + c1 * c2 * n1 * n2 * (n1 - 2.0).powi(2)
        + c1 * c2 * n1 * n2 * n2 * (3.0 * n1 - 4.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CertificateVerdict {
    Certified,
    NotApplicable,
    IterationCapReached,
    /// `z*(x) ≥ x` was met, so the iteration cannot make progress.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub assumption: Option<Assumption>,
    pub tau: f64,
    pub gamma: f64,
    pub target_eps: f64,
    pub max_iter: u64,
    /// Number of map applications performed.
    pub iterations: u64,
    pub final_x: f64,
    /// Recorded `[x_n, z*(x_n)]` pairs.
    pub sequence: Vec<[f64; 2]>,
    /// The index `n` of each recorded pair.
    pub sequence_indices: Vec<u64>,
    /// Checked on every iterate, recorded or not.
    pub strictly_decreasing: bool,
    /// `z*(x_n) < x_n` on every iterate.
    pub z_below_x: bool,
    pub verdict: CertificateVerdict,
    pub reason: Option<String>,
}

impl StabilityCertificate {
    /// The recorded levels `x_n`.
    pub fn levels(&self) -> impl Iterator<Item = f64> + '_ {
        self.sequence.iter().map(|p| p[0])
    }
}

/// Runs `x_{n+1} = F(x_n)` from `x_0 = 1` until `x_n < target_eps` or
/// `max_iter` applications.
pub fn iterate_certificate(
    dist: &DegreeDistribution,
    params: EpidemicParams,
    target_eps: f64,
    max_iter: u64,
) -> Result<StabilityCertificate> {
    if !(target_eps > 0.0 && target_eps < 1.0) {
        return Err(Error::OutOfDomain {
            what: "target_eps",
            value: target_eps,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let EpidemicParams { tau, gamma } = params;
    let mut cert = StabilityCertificate {
        assumption: None,
        tau,
        gamma,
        target_eps,
        max_iter,
        iterations: 0,
        final_x: 1.0,
        sequence: Vec::new(),
        sequence_indices: Vec::new(),
        strictly_decreasing: true,
        z_below_x: true,
        verdict: CertificateVerdict::NotApplicable,
        reason: None,
    };
    let tau_c = dist.tau_c(gamma);
    if tau >= tau_c {
        cert.reason = Some(format!("tau = {tau} is not below the threshold {tau_c}"));
        return Ok(cert);
    }
    let Some(assumption) = Assumption::select(dist) else {
        cert.reason = Some("neither A1 nor A2 holds".to_string());
        return Ok(cert);
    };
    cert.assumption = Some(assumption);

    let mut x = 1.0f64;
    let mut n = 0u64;
    let mut next_record = 0u64;
    let mut record = |cert: &mut StabilityCertificate, n: u64, x: f64, z: f64, force: bool| {
        if force || n == next_record {
            cert.sequence.push([x, z]);
            cert.sequence_indices.push(n);
        }
        if n == next_record {
            next_record = if n + 1 < RECORD_HEAD {
                n + 1
            } else {
                ((n as f64 * RECORD_GROWTH).ceil() as u64).max(n + 1)
            };
        }
    };
    loop {
        let z = z_star(x, gamma, dist, assumption)?;
        let done = x < target_eps || n >= max_iter || z >= x;
        record(&mut cert, n, x, z, done);
        if x < target_eps {
            cert.verdict = CertificateVerdict::Certified;
            break;
        }
        if z >= x {
            cert.z_below_x = false;
            cert.verdict = CertificateVerdict::Stalled;
            cert.reason = Some(format!("z*(x) = {z} is not below x = {x}"));
            break;
        }
        if n >= max_iter {
            cert.verdict = CertificateVerdict::IterationCapReached;
            break;
        }
        let next = 0.5 * (x + z);
        if !(next < x) {
            cert.strictly_decreasing = false;
            cert.verdict = CertificateVerdict::Stalled;
            cert.reason = Some(format!("iteration stopped decreasing at x = {x}"));
            break;
        }
        x = next;
        n += 1;
    }
    cert.iterations = n;
    cert.final_x = x;
    if cert.verdict == CertificateVerdict::Certified && !(cert.strictly_decreasing && cert.z_below_x) {
        cert.verdict = CertificateVerdict::Stalled;
    }
    Ok(cert)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    /// θ outside `[0, 1]`.
    ThetaRange,
    /// `[S_l] < N_l / (1 + a n_l x)` after the locator time.
    SusceptibleLower,
    /// `[S_l]` below the solution of the linear comparison equation.
    Comparison,
    /// `nN / S_s > 1 + Bx`.
    Jensen,
    /// `D / S_s > b(x)`.
    DRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundViolation {
    pub kind: BoundKind,
    pub level: f64,
    pub class: Option<usize>,
    pub time: f64,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCheck {
    pub level: f64,
    /// First sample time from which on every sample has θ ≤ level.
    pub t_n: f64,
    /// Time after which the lower bounds on `[S_l]` are guaranteed.
    pub t_star: f64,
    pub samples_checked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundChainReport {
    pub assumption: Assumption,
    pub levels_total: usize,
    /// Levels whose crossing happened inside the trajectory.
    pub levels: Vec<LevelCheck>,
    pub violation_count: usize,
    /// The first violations found, at most [`MAX_REPORTED_VIOLATIONS`].
    pub violations: Vec<BoundViolation>,
}

pub const MAX_REPORTED_VIOLATIONS: usize = 100;

impl BoundChainReport {
    pub fn first_violation(&self) -> Option<&BoundViolation> {
        self.violations.first()
    }

    pub fn is_clean(&self) -> bool {
        self.violation_count == 0
    }
}

/// Projects full states onto the θ-form.
pub fn project_trajectory(states: &[CpState], dist: &DegreeDistribution) -> Result<Vec<ThetaState>> {
    states.iter().map(|s| ThetaState::from_full(s, dist)).collect()
}

/// Checks the bounds behind each recorded certificate level along a sampled
/// subcritical trajectory.
///
/// For level `x_n`, `T_n` is the first sample time after which every sample
/// has θ ≤ x_n. From
/// `T_n` on, `[S_l]` must dominate the solution `y` of
/// `y′ = γN_l − (γ + τ n_l x_n) y`, `y(T_n) = [S_l](T_n)`, and once every `y`
/// has passed its lower bound the Jensen and `D/S_s` bounds must hold too.
pub fn verify_bound_chain(
    times: &[f64],
    states: &[ThetaState],
    cert: &StabilityCertificate,
    dist: &DegreeDistribution,
    params: EpidemicParams,
) -> Result<BoundChainReport> {
    let EpidemicParams { tau, gamma } = params;
    let tau_c = dist.tau_c(gamma);
    if tau >= tau_c {
        return Err(Error::OutOfDomain {
            what: "tau",
            value: tau,
            lo: 0.0,
            hi: tau_c,
        });
    }
    let assumption = cert.assumption.ok_or(Error::VariantNotApplicable { variant: "none" })?;
    if times.len() != states.len() || times.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "trajectory has {} times and {} states",
            times.len(),
            states.len()
        )));
    }
    let degrees: Vec<f64> = dist.degrees().collect();
    let counts: Vec<f64> = dist.counts().collect();
    let nn = dist.stubs();

    let mut report = BoundChainReport {
        assumption,
        levels_total: cert.sequence.len(),
        levels: Vec::new(),
        violation_count: 0,
        violations: Vec::new(),
    };
    let push = |report: &mut BoundChainReport, v: BoundViolation| {
        report.violation_count += 1;
        if report.violations.len() < MAX_REPORTED_VIOLATIONS {
            report.violations.push(v);
        }
    };

    for (&t, st) in times.iter().zip(states) {
        if !(-BOUND_SLACK..=1.0 + BOUND_SLACK).contains(&st.theta) {
            push(
                &mut report,
                BoundViolation {
                    kind: BoundKind::ThetaRange,
                    level: 1.0,
                    class: None,
                    time: t,
                    value: st.theta,
                    bound: 1.0,
                },
            );
        }
    }

    for x in cert.levels() {
        // First sample after the last excursion above x.
        let start = match states.iter().rposition(|s| s.theta > x) {
            None => 0,
            Some(i) if i + 1 < states.len() => i + 1,
            Some(_) => continue,
        };
        let t_n = times[start];
        let anchor = &states[start];
        let lower = s_lower_bound(x, dist)?;
        let jensen = jensen_bound(x, dist)?;
        let b = d_over_ss_bound(x, dist, assumption)?;

        // Comparison solutions and the time at which all have passed their
        // lower bounds.
        let rates: Vec<f64> = degrees.iter().map(|k| gamma + tau * k * x).collect();
        let limits: Vec<f64> = counts.iter().zip(&rates).map(|(n, r)| gamma * n / r).collect();
        let mut t_star = t_n;
        for c in 0..degrees.len() {
            let s0 = anchor.s[c];
            if s0 < lower[c] {
                let dt = ((limits[c] - s0) / (limits[c] - lower[c])).ln() / rates[c];
                t_star = t_star.max(t_n + dt);
            }
        }

        let mut checked = 0;
        for (&t, st) in times.iter().zip(states).skip(start) {
            checked += 1;
            for c in 0..degrees.len() {
                let y = limits[c] + (anchor.s[c] - limits[c]) * (-rates[c] * (t - t_n)).exp();
                let slack = BOUND_SLACK * counts[c];
                if st.s[c] < y - slack {
                    push(
                        &mut report,
                        BoundViolation {
                            kind: BoundKind::Comparison,
                            level: x,
                            class: Some(c),
                            time: t,
                            value: st.s[c],
                            bound: y,
                        },
                    );
                }
                if t > t_star && st.s[c] < lower[c] - slack {
                    push(
                        &mut report,
                        BoundViolation {
                            kind: BoundKind::SusceptibleLower,
                            level: x,
                            class: Some(c),
                            time: t,
                            value: st.s[c],
                            bound: lower[c],
                        },
                    );
                }
            }
            if t > t_star {
                let s_s: f64 = degrees.iter().zip(&st.s).map(|(k, s)| k * s).sum();
                let d: f64 = degrees.iter().zip(&st.s).map(|(k, s)| k * k * s).sum();
                let ratio = nn / s_s;
                if ratio > jensen * (1.0 + BOUND_SLACK) {
                    push(
                        &mut report,
                        BoundViolation {
                            kind: BoundKind::Jensen,
                            level: x,
                            class: None,
                            time: t,
                            value: ratio,
                            bound: jensen,
                        },
                    );
                }
                if d / s_s > b * (1.0 + BOUND_SLACK) {
                    push(
                        &mut report,
                        BoundViolation {
                            kind: BoundKind::DRatio,
                            level: x,
                            class: None,
                            time: t,
                            value: d / s_s,
                            bound: b,
                        },
                    );
                }
            }
        }
        report.levels.push(LevelCheck {
            level: x,
            t_n,
            t_star,
            samples_checked: checked,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn trimodal() -> DegreeDistribution {
        DegreeDistribution::new(&[(2, 850), (3, 100), (4, 50)]).unwrap()
    }

    fn bimodal() -> DegreeDistribution {
        DegreeDistribution::new(&[(2, 500), (4, 500)]).unwrap()
    }

    fn regular4() -> DegreeDistribution {
        DegreeDistribution::regular(4, 1000).unwrap()
    }

    /// Exact second and third derivatives at zero of a cubic vanishing at 0.
    fn cubic_derivs(f: impl Fn(f64) -> f64, h: f64) -> (f64, f64) {
        let d2 = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
        let d3 = (f(2.0 * h) - 2.0 * f(h) + 2.0 * f(-h) - f(-2.0 * h)) / (2.0 * h * h * h);
        (d2, d3)
    }

    #[test]
    fn lower_bound_values() {
        let lb = s_lower_bound(1.0, &trimodal()).unwrap();
        assert!((lb[0] - 850.0 / (1.0 + 2.0 * 2.2 / 2.9)).abs() < 1e-10);
        assert!((lb[0] - 337.671).abs() < 1e-3);
        let tiny = s_lower_bound(1e-14, &trimodal()).unwrap();
        assert!((tiny[0] - 850.0).abs() < 1e-9 && (tiny[2] - 50.0).abs() < 1e-9);
        assert!(s_lower_bound(0.0, &trimodal()).is_err());
        assert!(s_lower_bound(1.5, &trimodal()).is_err());
    }

    #[test]
    fn jensen_values() {
        let j = jensen_bound(0.5, &trimodal()).unwrap();
        assert!((j - (1.0 + 5.1 / 2.9 * 0.5)).abs() < 1e-12);
        assert!((j - 1.8793).abs() < 1e-4);
        for x in [0.01, 0.3, 1.0] {
            let d = regular4();
            let g = jensen_sum(x, &d).unwrap();
            assert!((d.stubs() / g - jensen_bound(x, &d).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn d_ratio_bounds() {
        let d = bimodal();
        let b1 = d_over_ss_bound(1.0, &d, Assumption::A2).unwrap();
        assert!((b1 - 118.0 / 33.0).abs() < 1e-12);
        let m = d.moments();
        let small = d_over_ss_bound(1e-12, &d, Assumption::A2).unwrap();
        assert!((small - m.n2 / m.n).abs() < 1e-9);
        let r = regular4();
        let a1 = d_over_ss_bound(1e-12, &r, Assumption::A1).unwrap();
        assert!((a1 - 4.0).abs() < 1e-9);
        assert!(matches!(
            d_over_ss_bound(0.5, &trimodal(), Assumption::A1),
            Err(Error::VariantNotApplicable { .. })
        ));
        assert!(d_over_ss_bound(0.5, &trimodal(), Assumption::A2).is_err());
    }

    #[test]
    fn p_endpoints_and_root() {
        for (d, a) in [(regular4(), Assumption::A1), (bimodal(), Assumption::A2)] {
            for i in 1..=1000 {
                let x = i as f64 / 1000.0;
                let gamma = 0.7;
                let p0 = p_x(0.0, x, gamma, &d, a).unwrap();
                let p1 = p_x(1.0, x, gamma, &d, a).unwrap();
                assert!((p0 - gamma * d.jensen_constant() * x).abs() < 1e-12);
                assert!((p1 + 2.0 * gamma).abs() < 1e-12);
                let z = z_star(x, gamma, &d, a).unwrap();
                assert!(z > 0.0 && z < 1.0);
                assert!(p_x(z, x, gamma, &d, a).unwrap().abs() < 1e-12 * gamma);
                assert!(z < x, "z*({x}) = {z}");
            }
        }
    }

    #[test]
    fn linear_case() {
        // b(x) = 2 makes p_x linear: degrees 1 and 3 with n²-weighted mean 2.
        let d = DegreeDistribution::new(&[(1, 3), (3, 1)]).unwrap();
        let m = d.moments();
        assert!((m.n2 / m.n - 2.0).abs() < 1e-15);
        let z = z_star(1e-300, 1.0, &d, Assumption::A2).unwrap();
        assert!((0.0..1e-299).contains(&z));
    }

    #[test]
    fn a1_cubic_matches_closed_forms() {
        for d in [
            regular4(),
            DegreeDistribution::new(&[(3, 10), (9, 4), (20, 1)]).unwrap(),
        ] {
            let gamma = 1.7;
            let (d2, d3) = a1_cubic_derivatives(&d, gamma);
            let f = |x: f64| {
                let bx = d.jensen_constant() * x;
                let m = d.moments();
                let b = m.n2 / m.n * (1.0 + bx);
                gamma * (1.0 + bx) * (1.0 - x) - gamma * (1.0 + x)
                    + gamma * d.threshold_ratio() * (b - 2.0) * x * (1.0 - x)
            };
            assert!(f(0.0).abs() < 1e-15);
            let (n2, n3) = cubic_derivs(f, 0.5);
            assert!((n2 - d2).abs() < 1e-10 * d2.abs().max(1.0), "{n2} vs {d2}");
            assert!((n3 - d3).abs() < 1e-10 * d3.abs(), "{n3} vs {d3}");
            assert!(d3 < 0.0);
        }
    }

    #[test]
    fn a1_second_derivative_sign_tracks_assumption() {
        // Bimodal (2, N₁), (k, N₂) families straddling (2 + √2)⟨n⟩ = ⟨n²⟩.
        let mut seen = (false, false);
        for k in 3..12u32 {
            for c1 in [1u64, 5, 20, 80, 300, 1000] {
                let d = DegreeDistribution::new(&[(2, c1), (k, 100)]).unwrap();
                let (d2, _) = a1_cubic_derivatives(&d, 1.0);
                let a1 = d.check_assumptions().a1_holds;
                assert_eq!(d2 <= 0.0, a1, "k {k} c1 {c1}");
                if a1 {
                    seen.0 = true
                } else {
                    seen.1 = true
                }
            }
        }
        assert!(seen.0 && seen.1);
    }

    #[test]
    fn a2_cubic_matches_closed_forms() {
        for (n1, c1, n2, c2) in [(2, 500, 4, 500), (1, 30, 5, 40), (3, 7, 10, 2), (2, 1000, 3, 1)] {
            let d = DegreeDistribution::new(&[(n1, c1), (n2, c2)]).unwrap();
            let gamma = 0.8;
            let (r2, r3, v) = a2_cubic_derivatives(&d, gamma).unwrap();
            let f = |x: f64| a2_cubic(x, gamma, &d).unwrap();
            let scale = f(1.0).abs().max(1.0);
            assert!(f(0.0).abs() < 1e-12 * scale);
            let (e2, e3) = cubic_derivs(f, 0.5);
            assert!((e2 - r2).abs() < 1e-9 * scale, "r'' {e2} vs {r2}");
            assert!((e3 - r3).abs() < 1e-9 * scale, "r''' {e3} vs {r3}");
            // V in its original form.
            let m = d.moments();
            let big_n = d.n_total();
            let v0 = 2.0 * big_n * big_n * (m.n2 - m.n).powi(2)
                + big_n * (m.n2 - m.n * n2 as f64) * c2 as f64 * n1 as f64 * n2 as f64;
            assert!((v - v0).abs() < 1e-9 * v.abs());
        }
    }

    proptest! {
        #[test]
        fn jensen_sum_respects_bound(
            pairs in prop::collection::btree_map(1u32..=30, 1u64..=5000, 2..=6),
            x in 1e-6f64..=1.0,
        ) {
            let pairs: Vec<(u32, u64)> = pairs.into_iter().collect();
            if let Ok(d) = DegreeDistribution::new(&pairs) {
                let g = jensen_sum(x, &d).unwrap();
                prop_assert!(d.stubs() / g <= jensen_bound(x, &d).unwrap() * (1.0 + 1e-12));
            }
        }

        #[test]
        fn a2_sign_machinery(n1 in 1u32..=8, gap in 1u32..=10, c1 in 1u64..=2000, c2 in 1u64..=2000) {
            let n2 = n1 + gap;
            prop_assume!(n1 >= 2 || n2 as u64 * c2 >= c1);
            let d = DegreeDistribution::new(&[(n1, c1), (n2, c2)]).unwrap();
            let (r2, r3, v) = a2_cubic_derivatives(&d, 1.0).unwrap();
            prop_assert!(v >= 0.0);
            prop_assert!(r2 <= 0.0);
            prop_assert!(r3 < 0.0);
            for i in 1..=50 {
                let x = i as f64 / 50.0;
                prop_assert!(a2_cubic(x, 1.0, &d).unwrap() < 0.0);
            }
        }

        #[test]
        fn contraction_is_a_self_map(x in 1e-9f64..=1.0, k in 4u32..=12) {
            let d = DegreeDistribution::regular(k, 100).unwrap();
            let f = contraction_map(x, 1.0, &d, Assumption::A1).unwrap();
            prop_assert!(f > 0.0 && f < x);
        }
    }

    #[test]
    fn certificate_regular4() {
        let d = regular4();
        let p = EpidemicParams::new(0.3, 1.0).unwrap();
        let c = iterate_certificate(&d, p, DEFAULT_TARGET_EPS, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(c.verdict, CertificateVerdict::Certified);
        assert_eq!(c.assumption, Some(Assumption::A1));
        assert!(c.final_x < 1e-6);
        assert!(c.strictly_decreasing && c.z_below_x);
        assert!(c.sequence.windows(2).all(|w| w[1][0] < w[0][0]));
        assert_eq!(c.sequence[0], [1.0, z_star(1.0, 1.0, &d, Assumption::A1).unwrap()]);
        assert_eq!(*c.sequence_indices.last().unwrap(), c.iterations);
        assert_eq!(c.sequence.last().unwrap()[0], c.final_x);
    }

    #[test]
    fn certificate_bimodal_and_trimodal() {
        let p = EpidemicParams::new(0.3, 1.0).unwrap();
        let c = iterate_certificate(&bimodal(), p, DEFAULT_TARGET_EPS, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(c.verdict, CertificateVerdict::Certified);
        assert_eq!(c.assumption, Some(Assumption::A2));
        let t = iterate_certificate(&trimodal(), p, DEFAULT_TARGET_EPS, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(t.verdict, CertificateVerdict::NotApplicable);
        assert!(t.sequence.is_empty());
    }

    #[test]
    fn certificate_cap_and_supercritical() {
        let p = EpidemicParams::new(0.3, 1.0).unwrap();
        let c = iterate_certificate(&regular4(), p, 1e-6, 50).unwrap();
        assert_eq!(c.verdict, CertificateVerdict::IterationCapReached);
        assert_eq!(c.iterations, 50);
        assert!(c.final_x > 1e-6);
        let sup = EpidemicParams::new(0.5, 1.0).unwrap();
        let s = iterate_certificate(&regular4(), sup, 1e-6, 50).unwrap();
        assert_eq!(s.verdict, CertificateVerdict::NotApplicable);
        assert!(iterate_certificate(&regular4(), p, 0.0, 50).is_err());
    }
}
