//! The five verbs as library functions returning serializable results.

use cpsis::certificate::{
    iterate_certificate, project_trajectory, verify_bound_chain, BoundChainReport, StabilityCertificate,
};
use cpsis::equilibria::{
    disease_free, endemic_equilibrium, nontrivial_equilibrium, EquilibriumKind, EquilibriumReport,
};
use cpsis::integrator::{integrate, integrate_sampled};
use cpsis::stability::{dfe_stability, state_stability, sweep_row, StabilityReport, SweepRow};
use cpsis::system::{conservation_residuals, initial_condition};
use cpsis::{CompactPairwise, CpState, Error, Trajectory};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliResult;

/// Sample spacing of the trajectory behind `certify --verify`.
pub const VERIFY_DT: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentsReport {
    pub n: f64,
    pub n2: f64,
    pub n3: f64,
    pub tau_c: f64,
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub a1: bool,
    pub a2: bool,
    #[serde(rename = "nN")]
    pub stubs: f64,
    #[serde(rename = "N")]
    pub nodes: u64,
    pub gamma: f64,
}

pub fn moments(cfg: &RunConfig) -> CliResult<MomentsReport> {
    let dist = cfg.dist()?;
    let m = dist.moments();
    let report = dist.check_assumptions();
    Ok(MomentsReport {
        n: m.n,
        n2: m.n2,
        n3: m.n3,
        tau_c: dist.tau_c(cfg.gamma),
        a: report.a,
        b: report.b,
        a1: report.a1_holds,
        a2: report.a2_holds,
        stubs: m.stubs,
        nodes: dist.total_nodes(),
        gamma: cfg.gamma,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub tau: f64,
    pub gamma: f64,
    pub tau_c: f64,
    pub t_final: f64,
    /// Accepted steps, including the initial state.
    pub samples: usize,
    pub converged: bool,
    pub terminal_rhs_norm: f64,
    pub terminal_state: CpState,
    pub total_infected: f64,
    pub nearest_equilibrium: EquilibriumKind,
    /// Max-norm distance to the nearest equilibrium.
    pub distance: f64,
    pub distance_dfe: f64,
    /// Absent at or below threshold.
    pub distance_endemic: Option<f64>,
    pub endemic_total_infected: Option<f64>,
    pub max_pair_residual: f64,
    pub max_singles_residual: f64,
    pub max_stub_residual: f64,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub model: CompactPairwise,
    pub trajectory: Trajectory,
    pub summary: SimulationSummary,
}

/// Integrates the full system to `t_max`, keeping every accepted step.
pub fn simulate(cfg: &RunConfig) -> CliResult<Simulation> {
    let dist = cfg.dist()?;
    let params = cfg.params()?;
    let icfg = cfg.integration(&dist, params)?;
    let y0 = initial_condition(&dist, &cfg.infected(&dist))?;
    let model = CompactPairwise::new(dist.clone(), params);
    let trajectory = integrate(&model.full(), &y0.to_vec(), &icfg)?;

    let terminal = CpState::from_slice(trajectory.last_state());
    let distance_dfe = terminal.max_abs_diff(&disease_free(&dist));
    let endemic = match endemic_equilibrium(params, &dist) {
        Ok(eq) => Some(eq),
        Err(Error::BelowThreshold { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let distance_endemic = endemic.as_ref().map(|eq| terminal.max_abs_diff(&eq.coordinates));
    let (nearest_equilibrium, distance) = match distance_endemic {
        Some(d) if d < distance_dfe => (EquilibriumKind::Endemic, d),
        _ => (EquilibriumKind::DiseaseFree, distance_dfe),
    };

    let (mut pairs, mut singles, mut stubs) = (0.0f64, 0.0f64, 0.0f64);
    for y in &trajectory.states {
        let r = conservation_residuals(&CpState::from_slice(y), &dist);
        pairs = pairs.max(r.pairs.abs());
        singles = singles.max(r.max_singles());
        stubs = stubs.max(r.stubs.abs());
    }

    let summary = SimulationSummary {
        tau: params.tau,
        gamma: params.gamma,
        tau_c: dist.tau_c(params.gamma),
        t_final: trajectory.last_time(),
        samples: trajectory.len(),
        converged: trajectory.converged,
        terminal_rhs_norm: trajectory.terminal_rhs_norm,
        total_infected: terminal.total_infected(),
        terminal_state: terminal,
        nearest_equilibrium,
        distance,
        distance_dfe,
        distance_endemic,
        endemic_total_infected: endemic.as_ref().map(EquilibriumReport::total_infected),
        max_pair_residual: pairs,
        max_singles_residual: singles,
        max_stub_residual: stubs,
    };
    Ok(Simulation {
        model,
        trajectory,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumOutput {
    pub tau: f64,
    pub gamma: f64,
    pub tau_c: f64,
    pub total_infected: f64,
    #[serde(flatten)]
    pub report: EquilibriumReport,
    pub stability: StabilityReport,
    /// Stability of the disease-free state at the same parameters.
    pub dfe_stability: StabilityReport,
}

/// The endemic state, or the virtual branch below threshold when allowed.
pub fn equilibrium(cfg: &RunConfig) -> CliResult<EquilibriumOutput> {
    let dist = cfg.dist()?;
    let params = cfg.params()?;
    let report = nontrivial_equilibrium(params, &dist, cfg.allow_virtual)?;
    let model = CompactPairwise::new(dist.clone(), params);
    let stability = state_stability(&model, report.kind, &report.coordinates)?;
    Ok(EquilibriumOutput {
        tau: params.tau,
        gamma: params.gamma,
        tau_c: dist.tau_c(params.gamma),
        total_infected: report.total_infected(),
        report,
        stability,
        dfe_stability: dfe_stability(params, &dist),
    })
}

/// One row per grid point, sorted by τ.
pub fn sweep(cfg: &RunConfig) -> CliResult<Vec<SweepRow>> {
    let dist = cfg.dist()?;
    cpsis::EpidemicParams::new(0.0, cfg.gamma)?;
    let grid = cfg.tau_grid()?;
    let rows = grid
        .par_iter()
        .map(|&tau| sweep_row(&dist, cfg.gamma, tau, cfg.allow_virtual))
        .collect::<cpsis::Result<Vec<_>>>()?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifyOutput {
    #[serde(flatten)]
    pub certificate: StabilityCertificate,
    pub tau_c: f64,
    /// Bound-chain check along a simulated trajectory, when requested and
    /// applicable.
    pub verification: Option<BoundChainReport>,
}

pub fn certify(cfg: &RunConfig) -> CliResult<CertifyOutput> {
    let dist = cfg.dist()?;
    let params = cfg.params()?;
    let certificate = iterate_certificate(&dist, params, cfg.eps, cfg.max_iter)?;
    let tau_c = dist.tau_c(params.gamma);
    let verification = if cfg.verify && certificate.assumption.is_some() && params.tau < tau_c {
        let icfg = cfg.integration(&dist, params)?;
        let y0 = initial_condition(&dist, &cfg.infected(&dist))?;
        let model = CompactPairwise::new(dist.clone(), params);
        let n = (cfg.t_max / VERIFY_DT).ceil().max(1.0) as usize;
        let times: Vec<f64> = (0..=n).map(|i| (i as f64 * VERIFY_DT).min(cfg.t_max)).collect();
        let traj = integrate_sampled(&model.full(), &y0.to_vec(), &icfg, &dedup(times))?;
        let states: Vec<CpState> = traj.states.iter().map(|y| CpState::from_slice(y)).collect();
        let theta = project_trajectory(&states, &dist)?;
        Some(verify_bound_chain(&traj.times, &theta, &certificate, &dist, params)?)
    } else {
        None
    };
    Ok(CertifyOutput {
        certificate,
        tau_c,
        verification,
    })
}

fn dedup(mut v: Vec<f64>) -> Vec<f64> {
    v.dedup();
    v
}
