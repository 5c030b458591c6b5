//! Adaptive Dormand–Prince 5(4) integration with PI step-size control.
//!
//! Every accepted step is retained; there is no dense output. Runs can stop
//! early once the max-norm of the right-hand side falls below
//! `equilibrium_tol`.

use serde::{Deserialize, Serialize};

use crate::degree::{DegreeDistribution, EpidemicParams};
use crate::error::{Error, Result};

/// An autonomous or non-autonomous first-order system `y' = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()>;

    /// Multiplier applied to `abs_tol` for component `i`.
    fn abs_tol_weight(&self, _i: usize) -> f64 {
        1.0
    }
}

/// Adapter turning an infallible closure into an [`OdeSystem`].
pub struct FnSystem<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(f64, &[f64], &mut [f64])> FnSystem<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(f64, &[f64], &mut [f64])> OdeSystem for FnSystem<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        (self.f)(t, y, dy);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_max: f64,
    pub max_steps: usize,
    /// Max-norm of the right-hand side below which the state counts as an
    /// equilibrium.
    pub equilibrium_tol: f64,
}

impl IntegrationConfig {
    /// Defaults scaled to a model: `rel_tol = 1e-11`, `abs_tol = 1e-11·N`
    /// and `equilibrium_tol = 1e-9·N·max(τ, γ)`.
    ///
    /// Near a stable steady state an explicit method settles at its stability
    /// boundary, where the right-hand side jitters at a level of about
    /// `rel_tol · nN`. The tolerances keep this floor below
    /// `equilibrium_tol` for mean degrees up to several dozen.
    pub fn for_model(dist: &DegreeDistribution, params: EpidemicParams) -> Self {
        let n = dist.n_total();
        Self {
            rel_tol: 1e-11,
            abs_tol: 1e-11 * n,
            t_max: 100.0,
            max_steps: 1_000_000,
            equilibrium_tol: 1e-9 * n * params.max_rate(),
        }
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        positive("rel_tol", self.rel_tol)?;
        positive("abs_tol", self.abs_tol)?;
        positive("t_max", self.t_max)?;
        positive("equilibrium_tol", self.equilibrium_tol)?;
        if self.rel_tol < 1e-14 {
            return Err(Error::InvalidConfig(format!(
                "rel_tol must be at least 1e-14, got {}",
                self.rel_tol
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be positive".into()));
        }
        Ok(())
    }
}

/// States at every accepted step (or at every requested sample time).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub converged: bool,
    pub terminal_rhs_norm: f64,
}

impl Trajectory {
    pub fn last_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds at least the initial time")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Outcome of [`integrate_to_equilibrium`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumRun {
    pub state: Vec<f64>,
    pub time: f64,
    pub converged: bool,
    pub rhs_norm: f64,
    pub steps: usize,
}

/// Integrates to `cfg.t_max`, keeping every accepted step.
pub fn integrate<S: OdeSystem + ?Sized>(sys: &S, y0: &[f64], cfg: &IntegrationConfig) -> Result<Trajectory> {
    let mut out = Recorder::every_step(y0);
    let end = Dopri5::new(sys, cfg)?.run(y0, false, &[], &mut out)?;
    Ok(out.finish(end.rhs_norm < cfg.equilibrium_tol, end.rhs_norm))
}

/// Integrates until the max-norm of the right-hand side drops below
/// `cfg.equilibrium_tol`, or to `cfg.t_max`.
pub fn integrate_to_equilibrium<S: OdeSystem + ?Sized>(
    sys: &S,
    y0: &[f64],
    cfg: &IntegrationConfig,
) -> Result<EquilibriumRun> {
    let mut out = Recorder::Discard;
    let end = Dopri5::new(sys, cfg)?.run(y0, true, &[], &mut out)?;
    Ok(EquilibriumRun {
        converged: end.rhs_norm < cfg.equilibrium_tol,
        state: end.y,
        time: end.t,
        rhs_norm: end.rhs_norm,
        steps: end.steps,
    })
}

/// Integrates to the last of `sample_times`, shortening steps so that each
/// sample time is hit exactly; only the samples are kept.
pub fn integrate_sampled<S: OdeSystem + ?Sized>(
    sys: &S,
    y0: &[f64],
    cfg: &IntegrationConfig,
    sample_times: &[f64],
) -> Result<Trajectory> {
    if sample_times.is_empty() {
        return Err(Error::InvalidConfig("no sample times".into()));
    }
    if sample_times[0] < 0.0 || sample_times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig(
            "sample times must be nonnegative and strictly increasing".into(),
        ));
    }
    let mut cfg = *cfg;
    cfg.t_max = *sample_times.last().unwrap();
    let mut out = Recorder::Samples {
        times: Vec::new(),
        states: Vec::new(),
    };
    if sample_times[0] == 0.0 {
        out.push(0.0, y0);
    }
    let stops: Vec<f64> = sample_times.iter().copied().filter(|&t| t > 0.0).collect();
    let end = Dopri5::new(sys, &cfg)?.run(y0, false, &stops, &mut out)?;
    Ok(out.finish(end.rhs_norm < cfg.equilibrium_tol, end.rhs_norm))
}

enum Recorder {
    Discard,
    Steps { times: Vec<f64>, states: Vec<Vec<f64>> },
    Samples { times: Vec<f64>, states: Vec<Vec<f64>> },
}

impl Recorder {
    fn every_step(y0: &[f64]) -> Self {
        Recorder::Steps {
            times: vec![0.0],
            states: vec![y0.to_vec()],
        }
    }

    fn push(&mut self, t: f64, y: &[f64]) {
        match self {
            Recorder::Discard => {}
            Recorder::Steps { times, states } | Recorder::Samples { times, states } => {
                times.push(t);
                states.push(y.to_vec());
            }
        }
    }

    fn on_step(&mut self, t: f64, y: &[f64], at_stop: bool) {
        match self {
            Recorder::Steps { .. } => self.push(t, y),
            Recorder::Samples { .. } if at_stop => self.push(t, y),
            _ => {}
        }
    }

    fn finish(self, converged: bool, terminal_rhs_norm: f64) -> Trajectory {
        match self {
            Recorder::Steps { times, states } | Recorder::Samples { times, states } => Trajectory {
                times,
                states,
                converged,
                terminal_rhs_norm,
            },
            Recorder::Discard => unreachable!("discarding recorder has no trajectory"),
        }
    }
}

struct RunEnd {
    y: Vec<f64>,
    t: f64,
    rhs_norm: f64,
    steps: usize,
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

struct Dopri5<'a, S: ?Sized> {
    sys: &'a S,
    cfg: IntegrationConfig,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    abs_tol: Vec<f64>,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl<'a, S: OdeSystem + ?Sized> Dopri5<'a, S> {
    fn new(sys: &'a S, cfg: &IntegrationConfig) -> Result<Self> {
        cfg.validate()?;
        let n = sys.dim();
        Ok(Self {
            sys,
            cfg: *cfg,
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
            abs_tol: (0..n).map(|i| cfg.abs_tol * sys.abs_tol_weight(i)).collect(),
        })
    }

    fn scale(&self, i: usize, a: f64, b: f64) -> f64 {
        self.abs_tol[i] + self.cfg.rel_tol * a.abs().max(b.abs())
    }

    /// Starting step from the usual two-evaluation heuristic.
    fn initial_step(&mut self, t: f64, y: &[f64]) -> Result<f64> {
        let n = y.len();
        let (mut d0, mut d1) = (0.0f64, 0.0f64);
        for i in 0..n {
            let sc = self.scale(i, y[i], y[i]);
            d0 = d0.max((y[i] / sc).abs());
            d1 = d1.max((self.k[0][i] / sc).abs());
        }
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(self.cfg.t_max);
        for i in 0..n {
            self.tmp[i] = y[i] + h0 * self.k[0][i];
        }
        self.sys.rhs(t + h0, &self.tmp, &mut self.k[1])?;
        let mut d2 = 0.0f64;
        for i in 0..n {
            let sc = self.scale(i, y[i], y[i]);
            d2 = d2.max(((self.k[1][i] - self.k[0][i]) / sc).abs());
        }
        d2 /= h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        Ok((100.0 * h0).min(h1).min(self.cfg.t_max))
    }

    /// One trial step of size `h` from `(t, y)`; `k[0]` must hold `f(t, y)`.
    /// Leaves the candidate in `y_new` and `f(t + h, y_new)` in `k[6]`, and
    /// returns the scaled error norm.
    fn trial(&mut self, t: f64, y: &[f64], h: f64) -> Result<f64> {
        let n = y.len();
        let sys = self.sys;
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let tmp = &mut self.tmp;

        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k1[i];
        }
        sys.rhs(t + C2 * h, tmp, k2)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        sys.rhs(t + C3 * h, tmp, k3)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        sys.rhs(t + C4 * h, tmp, k4)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        sys.rhs(t + C5 * h, tmp, k5)?;
        for i in 0..n {
            tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        sys.rhs(t + h, tmp, k6)?;
        for i in 0..n {
            self.y_new[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        sys.rhs(t + h, &self.y_new, k7)?;

        let mut err = 0.0f64;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.abs_tol[i] + self.cfg.rel_tol * y[i].abs().max(self.y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        Ok(err)
    }

    fn run(mut self, y0: &[f64], stop_at_equilibrium: bool, stops: &[f64], out: &mut Recorder) -> Result<RunEnd> {
        let n = self.sys.dim();
        if y0.len() != n {
            return Err(Error::ClassCountMismatch {
                expected: n,
                got: y0.len(),
            });
        }
        let mut y = y0.to_vec();
        let mut t = 0.0;
        self.sys.rhs(t, &y, &mut self.k[0])?;
        let mut rhs_norm = max_norm(&self.k[0]);
        let t_end = self.cfg.t_max;
        if stop_at_equilibrium && rhs_norm < self.cfg.equilibrium_tol {
            return Ok(RunEnd {
                y,
                t,
                rhs_norm,
                steps: 0,
            });
        }

        let mut h = self.initial_step(t, &y)?;
        let mut err_old: f64 = 1e-4;
        let mut steps = 0usize;
        let mut next_stop = 0usize;
        let mut rejected_last = false;

        while t < t_end {
            if steps >= self.cfg.max_steps {
                return Err(Error::StepCapExceeded { steps, t });
            }
            let target = stops.get(next_stop).copied().unwrap_or(t_end).min(t_end);
            let clamped = h >= target - t;
            let h_try = if clamped { target - t } else { h };
            if h_try < 16.0 * f64::EPSILON * t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t, h: h_try });
            }

            let err = self.trial(t, &y, h_try)?;
            steps += 1;
            let fac_err = err.powf(0.2 - 0.75 * BETA);

            if err <= 1.0 {
                let fac = (fac_err / err_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let mut h_new = h_try / fac;
                if rejected_last {
                    h_new = h_new.min(h_try);
                }
                err_old = err.max(1e-4);
                rejected_last = false;

                t = if clamped { target } else { t + h_try };
                std::mem::swap(&mut y, &mut self.y_new);
                self.k.swap(0, 6);
                rhs_norm = max_norm(&self.k[0]);

                let at_stop = clamped && next_stop < stops.len() && target == stops[next_stop];
                if at_stop {
                    next_stop += 1;
                }
                out.on_step(t, &y, at_stop);

                if stop_at_equilibrium && rhs_norm < self.cfg.equilibrium_tol {
                    break;
                }
                // Keep the controller's proposal rather than the clamped step.
                h = if clamped { h_new.max(h) } else { h_new };
            } else {
                h = h_try / (fac_err / SAFETY).min(1.0 / FAC_MIN);
                rejected_last = true;
            }
        }
        Ok(RunEnd { y, t, rhs_norm, steps })
    }
}
