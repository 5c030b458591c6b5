//! Local stability of the steady states and the transcritical bifurcation at
//! the epidemic threshold.
//!
//! Jacobians are taken on the reduced system in `([S_l], [SI], [II])`. The
//! disease-free spectrum is also available in closed form: `−γ` with
//! multiplicity L plus the two roots of
//! `λ² + λ(2γ − α) − 2γ(α + τ)`, `α = τ(⟨n²⟩ − ⟨n⟩)/⟨n⟩ − (τ + γ)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::degree::{DegreeDistribution, EpidemicParams};
use crate::eigen::{eigenvalues, Matrix};
use crate::equilibria::{self, EquilibriumKind};
use crate::error::Result;
use crate::integrator::OdeSystem;
use crate::system::{CompactPairwise, CpState, ReducedState};

/// Relative finite-difference step for numeric Jacobians.
pub const FD_STEP: f64 = 1e-6;
/// Eigenvalues with `|Re λ| < MARGINAL_TOL · γ` are treated as zero.
pub const MARGINAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DfeSpectrum {
    /// `−γ`, with multiplicity equal to the number of degree classes.
    pub repeated_eig: f64,
    pub multiplicity: usize,
    pub alpha: f64,
    /// Roots of the quadratic, larger first. Always real.
    pub quad_roots: [f64; 2],
    /// `α + τ < 0`, equivalently `τ < τ_c`.
    pub stable: bool,
}

impl DfeSpectrum {
    pub fn leading(&self) -> f64 {
        self.quad_roots[0].max(self.repeated_eig)
    }
}

/// Closed-form spectrum of the disease-free state.
pub fn dfe_spectrum(params: EpidemicParams, dist: &DegreeDistribution) -> DfeSpectrum {
    let EpidemicParams { tau, gamma } = params;
    let m = dist.moments();
    let alpha = tau * (m.n2 - m.n) / m.n - (tau + gamma);
    let p = 2.0 * gamma - alpha;
    let q = -2.0 * gamma * (alpha + tau);
    // p² − 4q = (2γ + α)² + 8γτ ≥ 0.
    let disc = ((2.0 * gamma + alpha).powi(2) + 8.0 * gamma * tau).sqrt();
    let big = -0.5 * (p + disc.copysign(p));
    let (r1, r2) = if big == 0.0 { (0.0, 0.0) } else { (big, q / big) };
    DfeSpectrum {
        repeated_eig: -gamma,
        multiplicity: dist.len(),
        alpha,
        quad_roots: [r1.max(r2), r1.min(r2)],
        stable: alpha + tau < 0.0,
    }
}

/// Analytic Jacobian of the reduced system at the disease-free state.
pub fn dfe_jacobian(params: EpidemicParams, dist: &DegreeDistribution) -> Matrix {
    let EpidemicParams { tau, gamma } = params;
    let l = dist.len();
    let nn = dist.stubs();
    let alpha = dfe_spectrum(params, dist).alpha;
    let mut j = Matrix::zeros(l + 2, l + 2);
    for (c, (k, n)) in dist.degrees().zip(dist.counts()).enumerate() {
        j[(c, c)] = -gamma;
        j[(c, l)] = -tau * k * n / nn;
    }
    j[(l, l)] = alpha;
    j[(l, l + 1)] = gamma;
    j[(l + 1, l)] = 2.0 * tau;
    j[(l + 1, l + 1)] = -2.0 * gamma;
    j
}

/// Centered-difference Jacobian of `sys` at `y`, with step
/// `h · max(|y_j|, floor)` in coordinate `j`.
pub fn numeric_jacobian<S: OdeSystem + ?Sized>(sys: &S, y: &[f64], h: f64, floor: f64) -> Result<Matrix> {
    let n = sys.dim();
    let mut jac = Matrix::zeros(n, n);
    let mut yp = y.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for j in 0..n {
        let step = h * y[j].abs().max(floor);
        yp[j] = y[j] + step;
        sys.rhs(0.0, &yp, &mut fp)?;
        yp[j] = y[j] - step;
        sys.rhs(0.0, &yp, &mut fm)?;
        yp[j] = y[j];
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * step);
        }
    }
    Ok(jac)
}

/// Numeric Jacobian of the reduced system at a full state, with the default
/// step and a floor of `10⁻⁶ N`.
pub fn reduced_jacobian(model: &CompactPairwise, state: &CpState) -> Result<Matrix> {
    let y = ReducedState::from(state).to_vec();
    numeric_jacobian(&model.reduced(), &y, FD_STEP, 1e-6 * model.dist().n_total())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
}

pub fn verdict(leading_re: f64, gamma: f64) -> Verdict {
    if leading_re.abs() < MARGINAL_TOL * gamma {
        Verdict::Marginal
    } else if leading_re < 0.0 {
        Verdict::Stable
    } else {
        Verdict::Unstable
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub kind: EquilibriumKind,
    /// Real part of the rightmost eigenvalue.
    pub leading_eigenvalue: f64,
    pub leading_imag: f64,
    /// Full spectrum as `[re, im]` pairs, rightmost first.
    pub eigenvalues: Vec<[f64; 2]>,
    pub verdict: Verdict,
    /// Set when the verdict rests on a numeric Jacobian rather than a
    /// closed-form spectrum.
    pub numerical: bool,
}

impl StabilityReport {
    fn from_spectrum(kind: EquilibriumKind, ev: &[Complex64], gamma: f64, numerical: bool) -> Self {
        Self {
            kind,
            leading_eigenvalue: ev[0].re,
            leading_imag: ev[0].im,
            eigenvalues: ev.iter().map(|z| [z.re, z.im]).collect(),
            verdict: verdict(ev[0].re, gamma),
            numerical,
        }
    }
}

/// Stability of the disease-free state from its closed-form spectrum.
pub fn dfe_stability(params: EpidemicParams, dist: &DegreeDistribution) -> StabilityReport {
    let spec = dfe_spectrum(params, dist);
    let mut ev: Vec<Complex64> = spec.quad_roots.iter().map(|&r| Complex64::new(r, 0.0)).collect();
    ev.extend(std::iter::repeat_n(
        Complex64::new(spec.repeated_eig, 0.0),
        spec.multiplicity,
    ));
    ev.sort_by(|a, b| b.re.total_cmp(&a.re));
    StabilityReport::from_spectrum(EquilibriumKind::DiseaseFree, &ev, params.gamma, false)
}

/// Stability of an arbitrary steady state from the numeric Jacobian.
pub fn state_stability(model: &CompactPairwise, kind: EquilibriumKind, state: &CpState) -> Result<StabilityReport> {
    let jac = reduced_jacobian(model, state)?;
    let ev = eigenvalues(&jac)?;
    Ok(StabilityReport::from_spectrum(kind, &ev, model.params().gamma, true))
}

/// Right and left null vectors `(w, v)` of the Jacobian at `τ = τ_c`, in the
/// coordinates `([I_l], [SI], [II])`:
/// `w = (τ_c n_l N_l / nN, …, γ, τ_c)`, `v = (0, …, 0, 2, 1)`.
pub fn null_eigenvectors(dist: &DegreeDistribution, gamma: f64) -> (Vec<f64>, Vec<f64>) {
    let tc = dist.tau_c(gamma);
    let nn = dist.stubs();
    let l = dist.len();
    let mut w: Vec<f64> = dist
        .degrees()
        .zip(dist.counts())
        .map(|(k, n)| tc * k * n / nn)
        .collect();
    w.extend([gamma, tc]);
    let mut v = vec![0.0; l];
    v.extend([2.0, 1.0]);
    (w, v)
}

/// Jacobian at the disease-free state for `τ = τ_c`, in the coordinates
/// `([I_l], [SI], [II])`.
pub fn critical_jacobian(dist: &DegreeDistribution, gamma: f64) -> Matrix {
    let tc = dist.tau_c(gamma);
    let nn = dist.stubs();
    let l = dist.len();
    let mut j = Matrix::zeros(l + 2, l + 2);
    for (c, (k, n)) in dist.degrees().zip(dist.counts()).enumerate() {
        j[(c, c)] = -gamma;
        j[(c, l)] = tc * k * n / nn;
    }
    j[(l, l)] = -tc;
    j[(l, l + 1)] = gamma;
    j[(l + 1, l)] = 2.0 * tc;
    j[(l + 1, l + 1)] = -2.0 * gamma;
    j
}

/// Coefficients of the transcritical normal form at `τ = τ_c`, with the
/// bifurcation parameter `φ = τ − τ_c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationCoefficients {
    pub tau_c: f64,
    /// Closed form `(4γ²τ_c/nN)(−⟨n³⟩ + 2⟨n²⟩ − ⟨n⟩)/(⟨n²⟩ − ⟨n⟩)`.
    pub b: f64,
    /// Closed form `2γ(⟨n²⟩ − ⟨n⟩)/⟨n⟩`.
    pub d: f64,
    /// `Σ v_k w_i w_j ∂²f_k/∂x_i∂x_j` from the second partials.
    pub b_sum: f64,
    /// `Σ v_k w_i ∂²f_k/∂x_i∂φ` from the second partials.
    pub d_sum: f64,
    pub w: Vec<f64>,
    pub v: Vec<f64>,
}

pub fn bifurcation_coefficients(dist: &DegreeDistribution, gamma: f64) -> BifurcationCoefficients {
    let m = dist.moments();
    let (n, n2, n3) = (m.n, m.n2, m.n3);
    let nn = dist.stubs();
    let tc = dist.tau_c(gamma);
    let (w, v) = null_eigenvectors(dist, gamma);
    let l = dist.len();

    let b = 4.0 * gamma * gamma * tc / nn * (-n3 + 2.0 * n2 - n) / (n2 - n);
    let d = 2.0 * gamma * (n2 - n) / n;

    // Nonzero second partials at the disease-free state. Only the [SI] and
    // [II] equations carry weight in v.
    let q0 = (n2 - n) / (n * nn);
    let f1_i_si = |k: f64| -(tc / nn) * ((k * k - k) * n - 2.0 * k * (n2 - n)) / n;
    let f1_si_si = -6.0 * tc * q0;
    let f1_si_ii = -tc * q0;
    let f2_si_si = 4.0 * tc * q0;
    let f1_si_phi = (n2 - n) / n - 1.0;
    let f2_si_phi = 2.0;

    let (w_si, w_ii) = (w[l], w[l + 1]);
    let cross: f64 = dist.degrees().zip(&w).map(|(k, wl)| wl * w_si * f1_i_si(k)).sum();
    let quad1 = 2.0 * cross + w_si * w_si * f1_si_si + 2.0 * w_si * w_ii * f1_si_ii;
    let quad2 = w_si * w_si * f2_si_si;
    let b_sum = v[l] * quad1 + v[l + 1] * quad2;
    let d_sum = v[l] * w_si * f1_si_phi + v[l + 1] * w_si * f2_si_phi;

    BifurcationCoefficients {
        tau_c: tc,
        b,
        d,
        b_sum,
        d_sum,
        w,
        v,
    }
}

/// One row of the bifurcation table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub dfe_lead_re: f64,
    pub endemic_sum_i: Option<f64>,
    pub endemic_lead_re: Option<f64>,
}

/// Evaluates both branches at one τ. Both leading eigenvalues come from the
/// numeric Jacobian. Below threshold the endemic columns are empty unless
/// `allow_virtual` is set, in which case the virtual branch is reported.
pub fn sweep_row(dist: &DegreeDistribution, gamma: f64, tau: f64, allow_virtual: bool) -> Result<SweepRow> {
    let params = EpidemicParams::new(tau, gamma)?;
    let model = CompactPairwise::new(dist.clone(), params);
    let dfe = equilibria::disease_free(dist);
    let dfe_lead_re = eigenvalues(&reduced_jacobian(&model, &dfe)?)?[0].re;
    let mut row = SweepRow {
        tau,
        dfe_lead_re,
        endemic_sum_i: None,
        endemic_lead_re: None,
    };
    if tau > dist.tau_c(gamma) || allow_virtual {
        let eq = equilibria::nontrivial_equilibrium(params, dist, allow_virtual)?;
        let lead = eigenvalues(&reduced_jacobian(&model, &eq.coordinates)?)?[0].re;
        row.endemic_sum_i = Some(eq.total_infected());
        row.endemic_lead_re = Some(lead);
    }
    Ok(row)
}

/// Rows for an ascending grid of τ values.
pub fn bifurcation_sweep(
    dist: &DegreeDistribution,
    gamma: f64,
    taus: &[f64],
    allow_virtual: bool,
) -> Result<Vec<SweepRow>> {
    taus.iter().map(|&t| sweep_row(dist, gamma, t, allow_virtual)).collect()
}
