//! Model state and right-hand sides of the compact pairwise SIS system.
//!
//! Three equivalent forms are provided:
//!
//! * the full system in `([S_l], [I_l], [SI], [SS], [II])`, 2L + 3 equations;
//! * the reduced system in `([S_l], [SI], [II])`, obtained by eliminating
//!   `[I_l]` and `[SS]` through the conservation of singles and pairs;
//! * the θ-form in `([S_l], θ)` with `θ = [SI] / S_s`.
//!
//! All states are absolute expected counts, not densities.

use serde::{Deserialize, Serialize};

use crate::degree::{DegreeDistribution, EpidemicParams};
use crate::error::{Error, Result};
use crate::integrator::OdeSystem;

/// Below this fraction of the total stub count the susceptible stubs are
/// considered exhausted.
pub const STUB_FLOOR: f64 = 1e-12;

/// Full model state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpState {
    /// Susceptible nodes per degree class.
    pub s: Vec<f64>,
    /// Infected nodes per degree class.
    pub i: Vec<f64>,
    pub si: f64,
    pub ss: f64,
    pub ii: f64,
}

impl CpState {
    pub fn len_classes(&self) -> usize {
        self.s.len()
    }

    /// Flat layout `[S_1..S_L, I_1..I_L, SI, SS, II]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.s.len() + 3);
        v.extend_from_slice(&self.s);
        v.extend_from_slice(&self.i);
        v.extend_from_slice(&[self.si, self.ss, self.ii]);
        v
    }

    pub fn from_slice(y: &[f64]) -> Self {
        assert!(
            y.len() >= 5 && (y.len() - 3).is_multiple_of(2),
            "bad full-state length {}",
            y.len()
        );
        let l = (y.len() - 3) / 2;
        Self {
            s: y[..l].to_vec(),
            i: y[l..2 * l].to_vec(),
            si: y[2 * l],
            ss: y[2 * l + 1],
            ii: y[2 * l + 2],
        }
    }

    pub fn total_infected(&self) -> f64 {
        self.i.iter().sum()
    }

    /// Lifts a reduced state using the conservation laws.
    pub fn from_reduced(r: &ReducedState, dist: &DegreeDistribution) -> Self {
        Self {
            s: r.s.clone(),
            i: dist.counts().zip(&r.s).map(|(n, s)| n - s).collect(),
            si: r.si,
            ss: dist.stubs() - 2.0 * r.si - r.ii,
            ii: r.ii,
        }
    }

    /// Lifts a θ-state, using `[SI] = θ S_s`, `[SS] = S_s − [SI]` and the
    /// conservation of pairs.
    pub fn from_theta(t: &ThetaState, dist: &DegreeDistribution) -> Self {
        let s_s: f64 = dist.degrees().zip(&t.s).map(|(k, s)| k * s).sum();
        let si = t.theta * s_s;
        let ss = s_s - si;
        Self {
            s: t.s.clone(),
            i: dist.counts().zip(&t.s).map(|(n, s)| n - s).collect(),
            si,
            ss,
            ii: dist.stubs() - ss - 2.0 * si,
        }
    }

    /// Max-norm distance to another state of the same shape.
    pub fn max_abs_diff(&self, other: &CpState) -> f64 {
        self.to_vec()
            .iter()
            .zip(other.to_vec())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_norm(&self) -> f64 {
        self.to_vec().iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// State of the reduced system: `[S_l]`, `[SI]`, `[II]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedState {
    pub s: Vec<f64>,
    pub si: f64,
    pub ii: f64,
}

impl ReducedState {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.s.clone();
        v.push(self.si);
        v.push(self.ii);
        v
    }

    pub fn from_slice(y: &[f64]) -> Self {
        let l = y.len() - 2;
        Self {
            s: y[..l].to_vec(),
            si: y[l],
            ii: y[l + 1],
        }
    }
}

impl From<&CpState> for ReducedState {
    fn from(c: &CpState) -> Self {
        Self {
            s: c.s.clone(),
            si: c.si,
            ii: c.ii,
        }
    }
}

/// State of the θ-form: `[S_l]` and the edge prevalence ratio θ = [SI]/S_s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaState {
    pub s: Vec<f64>,
    pub theta: f64,
}

impl ThetaState {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.s.clone();
        v.push(self.theta);
        v
    }

    pub fn from_slice(y: &[f64]) -> Self {
        let l = y.len() - 1;
        Self {
            s: y[..l].to_vec(),
            theta: y[l],
        }
    }

    /// Projects a full state; θ is `[SI] / Σ n_l [S_l]`.
    pub fn from_full(c: &CpState, dist: &DegreeDistribution) -> Result<Self> {
        let agg = aggregates(dist, &c.s);
        if agg.stubs_exhausted {
            return Err(Error::SusceptibleStubsExhausted { s_s: agg.s_s });
        }
        Ok(Self {
            s: c.s.clone(),
            theta: c.si / agg.s_s,
        })
    }
}

/// Weighted sums of the susceptible counts that enter the closure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedAggregates {
    /// Σ n_l [S_l].
    pub s_s: f64,
    /// Σ n_l² [S_l].
    pub d: f64,
    /// Σ n_l [I_l], taken as nN − S_s.
    pub i_s: f64,
    /// (1/S_s²) Σ (n_l − 1) n_l [S_l]; `None` when the stubs are exhausted.
    pub q_cp: Option<f64>,
    pub stubs_exhausted: bool,
}

/// Aggregates of a susceptible vector.
pub fn aggregates(dist: &DegreeDistribution, s: &[f64]) -> DerivedAggregates {
    let (mut s_s, mut d) = (0.0, 0.0);
    for (k, &sl) in dist.degrees().zip(s) {
        s_s += k * sl;
        d += k * k * sl;
    }
    let exhausted = s_s <= STUB_FLOOR * dist.stubs();
    DerivedAggregates {
        s_s,
        d,
        i_s: dist.stubs() - s_s,
        q_cp: (!exhausted).then(|| (d - s_s) / (s_s * s_s)),
        stubs_exhausted: exhausted,
    }
}

/// Residuals of the conservation laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConservationResiduals {
    /// `S_l + I_l − N_l` per class.
    pub singles: Vec<f64>,
    /// `SS + 2 SI + II − nN`.
    pub pairs: f64,
    /// `Σ n_l S_l − SS − SI`.
    pub stubs: f64,
}

impl ConservationResiduals {
    pub fn max_singles(&self) -> f64 {
        self.singles.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

pub fn conservation_residuals(state: &CpState, dist: &DegreeDistribution) -> ConservationResiduals {
    let singles = dist
        .counts()
        .zip(state.s.iter().zip(&state.i))
        .map(|(n, (s, i))| s + i - n)
        .collect();
    let s_s: f64 = dist.degrees().zip(&state.s).map(|(k, s)| k * s).sum();
    ConservationResiduals {
        singles,
        pairs: state.ss + 2.0 * state.si + state.ii - dist.stubs(),
        stubs: s_s - state.ss - state.si,
    }
}

/// Initial state with `infected[l]` infected nodes in class `l` and pairs
/// seeded by random mixing of stubs:
/// `SI = S_s I_s / nN`, `SS = S_s² / nN`, `II = I_s² / nN`.
pub fn initial_condition(dist: &DegreeDistribution, infected: &[f64]) -> Result<CpState> {
    if infected.len() != dist.len() {
        return Err(Error::ClassCountMismatch {
            expected: dist.len(),
            got: infected.len(),
        });
    }
    for (l, (c, &inf)) in dist.classes().iter().zip(infected).enumerate() {
        if !(inf >= 0.0 && inf <= c.count as f64) {
            return Err(Error::CountExceedsClass {
                class: l,
                infected: inf,
                size: c.count,
            });
        }
    }
    let s: Vec<f64> = dist.counts().zip(infected).map(|(n, i)| n - i).collect();
    let s_s: f64 = dist.degrees().zip(&s).map(|(k, s)| k * s).sum();
    let i_s: f64 = dist.degrees().zip(infected).map(|(k, i)| k * i).sum();
    let nn = dist.stubs();
    Ok(CpState {
        s,
        i: infected.to_vec(),
        si: s_s * i_s / nn,
        ss: s_s * s_s / nn,
        ii: i_s * i_s / nn,
    })
}

/// The compact pairwise model for one network and one parameter set.
#[derive(Debug, Clone)]
pub struct CompactPairwise {
    dist: DegreeDistribution,
    params: EpidemicParams,
    degrees: Vec<f64>,
    counts: Vec<f64>,
}

impl CompactPairwise {
    pub fn new(dist: DegreeDistribution, params: EpidemicParams) -> Self {
        let degrees = dist.degrees().collect();
        let counts = dist.counts().collect();
        Self {
            dist,
            params,
            degrees,
            counts,
        }
    }

    pub fn dist(&self) -> &DegreeDistribution {
        &self.dist
    }

    pub fn params(&self) -> EpidemicParams {
        self.params
    }

    pub fn classes(&self) -> usize {
        self.degrees.len()
    }

    /// Returns `(S_s, Q_CP, D)` or fails when the stubs are exhausted.
    fn closure(&self, s: &[f64]) -> Result<(f64, f64, f64)> {
        let (mut s_s, mut d) = (0.0, 0.0);
        for (k, sl) in self.degrees.iter().zip(s) {
            s_s += k * sl;
            d += k * k * sl;
        }
        if !(s_s > STUB_FLOOR * self.dist.stubs()) {
            return Err(Error::SusceptibleStubsExhausted { s_s });
        }
        Ok((s_s, (d - s_s) / (s_s * s_s), d))
    }

    /// Full right-hand side on the flat layout of [`CpState::to_vec`].
    pub fn full_rhs_into(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let l = self.classes();
        let EpidemicParams { tau, gamma } = self.params;
        let (s, rest) = y.split_at(l);
        let (i, pairs) = rest.split_at(l);
        let (si, ss, ii) = (pairs[0], pairs[1], pairs[2]);
        let (s_s, q, _) = self.closure(s)?;
        let theta = si / s_s;
        for c in 0..l {
            let ds = gamma * i[c] - tau * self.degrees[c] * s[c] * theta;
            dy[c] = ds;
            dy[l + c] = -ds;
        }
        dy[2 * l] = gamma * (ii - si) + tau * (ss - si) * si * q - tau * si;
        dy[2 * l + 1] = 2.0 * gamma * si - 2.0 * tau * ss * si * q;
        dy[2 * l + 2] = 2.0 * tau * si - 2.0 * gamma * ii + 2.0 * tau * si * si * q;
        Ok(())
    }

    /// Reduced right-hand side on `[S_1..S_L, SI, II]`, with
    /// `[SS] − [SI]` replaced by `nN − 3[SI] − [II]`.
    pub fn reduced_rhs_into(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let l = self.classes();
        let EpidemicParams { tau, gamma } = self.params;
        let (s, pairs) = y.split_at(l);
        let (si, ii) = (pairs[0], pairs[1]);
        let (s_s, q, _) = self.closure(s)?;
        let theta = si / s_s;
        for c in 0..l {
            dy[c] = gamma * (self.counts[c] - s[c]) - tau * self.degrees[c] * s[c] * theta;
        }
        let nn = self.dist.stubs();
        dy[l] = gamma * (ii - si) + tau * (nn - 3.0 * si - ii) * si * q - tau * si;
        dy[l + 1] = 2.0 * tau * si - 2.0 * gamma * ii + 2.0 * tau * si * si * q;
        Ok(())
    }

    /// θ-form right-hand side on `[S_1..S_L, θ]`.
    pub fn theta_rhs_into(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let l = self.classes();
        let EpidemicParams { tau, gamma } = self.params;
        let (s, th) = y.split_at(l);
        let theta = th[0];
        let (s_s, _, d) = self.closure(s)?;
        for c in 0..l {
            dy[c] = gamma * (self.counts[c] - s[c]) - tau * self.degrees[c] * s[c] * theta;
        }
        dy[l] = gamma * (self.dist.stubs() / s_s) * (1.0 - theta) - gamma * (1.0 + theta)
            + tau * (d / s_s - 2.0) * theta * (1.0 - theta);
        Ok(())
    }

    pub fn rhs_full(&self, state: &CpState) -> Result<CpState> {
        let y = state.to_vec();
        let mut dy = vec![0.0; y.len()];
        self.full_rhs_into(&y, &mut dy)?;
        Ok(CpState::from_slice(&dy))
    }

    pub fn rhs_reduced(&self, state: &ReducedState) -> Result<ReducedState> {
        let y = state.to_vec();
        let mut dy = vec![0.0; y.len()];
        self.reduced_rhs_into(&y, &mut dy)?;
        Ok(ReducedState::from_slice(&dy))
    }

    pub fn rhs_theta(&self, state: &ThetaState) -> Result<ThetaState> {
        let y = state.to_vec();
        let mut dy = vec![0.0; y.len()];
        self.theta_rhs_into(&y, &mut dy)?;
        Ok(ThetaState::from_slice(&dy))
    }

    /// Max-norm of the full right-hand side; zero exactly at equilibria.
    pub fn residual(&self, state: &CpState) -> Result<f64> {
        let d = self.rhs_full(state)?;
        Ok(d.max_norm())
    }

    pub fn full(&self) -> FullSystem<'_> {
        FullSystem(self)
    }

    pub fn reduced(&self) -> ReducedSystem<'_> {
        ReducedSystem(self)
    }

    pub fn theta(&self) -> ThetaSystem<'_> {
        ThetaSystem(self)
    }
}

/// The full system as an ODE for the integrator.
#[derive(Debug, Clone, Copy)]
pub struct FullSystem<'a>(pub &'a CompactPairwise);

/// The reduced (L + 2)-dimensional system.
#[derive(Debug, Clone, Copy)]
pub struct ReducedSystem<'a>(pub &'a CompactPairwise);

/// The (L + 1)-dimensional θ-form.
#[derive(Debug, Clone, Copy)]
pub struct ThetaSystem<'a>(pub &'a CompactPairwise);

impl OdeSystem for FullSystem<'_> {
    fn dim(&self) -> usize {
        2 * self.0.classes() + 3
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        self.0.full_rhs_into(y, dy)
    }
}

impl OdeSystem for ReducedSystem<'_> {
    fn dim(&self) -> usize {
        self.0.classes() + 2
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        self.0.reduced_rhs_into(y, dy)
    }
}

impl OdeSystem for ThetaSystem<'_> {
    fn dim(&self) -> usize {
        self.0.classes() + 1
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        self.0.theta_rhs_into(y, dy)
    }

    // θ is a ratio in [0, 1] while S_l are counts; scale its absolute
    // tolerance down by the node count.
    fn abs_tol_weight(&self, i: usize) -> f64 {
        if i == self.0.classes() {
            1.0 / self.0.dist().n_total()
        } else {
            1.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn trimodal() -> DegreeDistribution {
        DegreeDistribution::new(&[(2, 850), (3, 100), (4, 50)]).unwrap()
    }

    fn model(tau: f64) -> CompactPairwise {
        CompactPairwise::new(trimodal(), EpidemicParams::new(tau, 1.0).unwrap())
    }

    fn dfe(dist: &DegreeDistribution) -> CpState {
        initial_condition(dist, &vec![0.0; dist.len()]).unwrap()
    }

    /// A random state satisfying all three conservation identities.
    fn admissible(dist: &DegreeDistribution, rng: &mut impl Rng) -> CpState {
        loop {
            let inf: Vec<f64> = dist.counts().map(|n| rng.gen_range(0.0..n)).collect();
            let s: Vec<f64> = dist.counts().zip(&inf).map(|(n, i)| n - i).collect();
            let s_s: f64 = dist.degrees().zip(&s).map(|(k, s)| k * s).sum();
            let si = rng.gen_range(0.0..1.0) * s_s;
            let ss = s_s - si;
            let ii = dist.stubs() - ss - 2.0 * si;
            if ii >= 0.0 && s_s > 0.0 {
                return CpState { s, i: inf, si, ss, ii };
            }
        }
    }

    #[test]
    fn disease_free_state_is_stationary() {
        let m = model(1.3);
        let d = m.rhs_full(&dfe(m.dist())).unwrap();
        assert_eq!(d.max_norm(), 0.0);
        let t = m
            .rhs_theta(&ThetaState {
                s: m.dist().counts().collect(),
                theta: 0.0,
            })
            .unwrap();
        assert_eq!(t.to_vec().iter().fold(0.0f64, |a, x| a.max(x.abs())), 0.0);
        let r = m.rhs_reduced(&ReducedState::from(&dfe(m.dist()))).unwrap();
        assert!(r.to_vec().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn no_infection_without_si_edges() {
        let m = model(1.0);
        let state = CpState {
            s: vec![800.0, 90.0, 45.0],
            i: vec![50.0, 10.0, 5.0],
            si: 0.0,
            ss: 1950.0,
            ii: 0.0,
        };
        let d = m.rhs_full(&state).unwrap();
        assert_eq!(d.si, 0.0);
        for (di, i) in d.i.iter().zip(&state.i) {
            assert_eq!(*di, -i);
        }
    }

    #[test]
    fn theta_rhs_at_full_prevalence_edge() {
        let m = model(0.8);
        let t = m
            .rhs_theta(&ThetaState {
                s: m.dist().counts().collect(),
                theta: 1.0,
            })
            .unwrap();
        assert_relative_eq!(t.theta, -2.0, max_relative = 1e-15);
        assert!(t.s.iter().zip(m.dist().counts()).all(|(ds, n)| *ds < 0.0 && n > 0.0));
    }

    #[test]
    fn exhausted_stubs_are_an_error() {
        let m = model(1.0);
        let all_infected = initial_condition(m.dist(), &[850.0, 100.0, 50.0]).unwrap();
        assert!(matches!(
            m.rhs_full(&all_infected),
            Err(Error::SusceptibleStubsExhausted { .. })
        ));
        let agg = aggregates(m.dist(), &all_infected.s);
        assert!(agg.stubs_exhausted);
        assert_eq!(agg.s_s, 0.0);
        assert_eq!(agg.q_cp, None);
    }

    #[test]
    fn aggregates_at_dfe() {
        let d = trimodal();
        let agg = aggregates(&d, &dfe(&d).s);
        assert_eq!(agg.s_s, 2200.0);
        assert_eq!(agg.d, 5100.0);
        assert_relative_eq!(agg.q_cp.unwrap(), 2900.0 / (2200.0 * 2200.0), max_relative = 1e-15);

        let reg = DegreeDistribution::regular(5, 300).unwrap();
        let agg = aggregates(&reg, &dfe(&reg).s);
        assert_relative_eq!(agg.q_cp.unwrap(), 4.0 / (5.0 * 300.0), max_relative = 1e-15);
    }

    #[test]
    fn initial_condition_mixing() {
        let d = trimodal();
        let c = initial_condition(&d, &[90.0, 50.0, 10.0]).unwrap();
        assert_eq!(c.s, vec![760.0, 50.0, 40.0]);
        assert_relative_eq!(c.si, 1830.0 * 370.0 / 2200.0, max_relative = 1e-15);
        assert!((c.si - 307.77).abs() < 5e-3);
        let r = conservation_residuals(&c, &d);
        assert!(r.max_singles() == 0.0);
        assert!(r.pairs.abs() < 1e-12 * 2200.0);
        assert!(r.stubs.abs() < 1e-12 * 2200.0);

        let all = initial_condition(&d, &[850.0, 100.0, 50.0]).unwrap();
        assert_eq!((all.si, all.ss, all.ii), (0.0, 0.0, 2200.0));
        assert_eq!(dfe(&d).ss, 2200.0);
        assert_eq!(dfe(&d).si, 0.0);

        assert!(matches!(
            initial_condition(&d, &[900.0, 0.0, 0.0]),
            Err(Error::CountExceedsClass { class: 0, .. })
        ));
        assert!(matches!(
            initial_condition(&d, &[1.0, 0.0]),
            Err(Error::ClassCountMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn perturbed_pairs_residual() {
        let d = trimodal();
        let mut c = initial_condition(&d, &[90.0, 50.0, 10.0]).unwrap();
        c.ss += 3.5;
        let r = conservation_residuals(&c, &d);
        assert_relative_eq!(r.pairs, 3.5, max_relative = 1e-12);
    }

    #[test]
    fn derivative_level_conservation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = trimodal();
        for _ in 0..1000 {
            let m = model(rng.gen_range(0.0..5.0));
            let c = admissible(&d, &mut rng);
            let dc = m.rhs_full(&c).unwrap();
            let scale = d.stubs() * m.params().max_rate();
            for (ds, di) in dc.s.iter().zip(&dc.i) {
                assert!((ds + di).abs() <= 1e-12 * scale);
            }
            assert!((dc.ss + 2.0 * dc.si + dc.ii).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn reduced_matches_full_under_lift() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = trimodal();
        for _ in 0..1000 {
            let m = model(rng.gen_range(0.0..5.0));
            let c = admissible(&d, &mut rng);
            let r = ReducedState::from(&c);
            assert_eq!(CpState::from_reduced(&r, &d).s, c.s);
            let full = m.rhs_full(&CpState::from_reduced(&r, &d)).unwrap();
            let red = m.rhs_reduced(&r).unwrap();
            let scale = d.stubs() * m.params().max_rate();
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * scale.max(a.abs());
            for (a, b) in full.s.iter().zip(&red.s) {
                assert!(close(*a, *b), "{a} vs {b}");
            }
            assert!(close(full.si, red.si));
            assert!(close(full.ii, red.ii));
        }
    }

    #[test]
    fn theta_rhs_is_quotient_rule_of_full() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let d = trimodal();
        for _ in 0..1000 {
            let m = model(rng.gen_range(0.0..5.0));
            let c = admissible(&d, &mut rng);
            let full = m.rhs_full(&c).unwrap();
            let s_s: f64 = d.degrees().zip(&c.s).map(|(k, s)| k * s).sum();
            let ds_s: f64 = d.degrees().zip(&full.s).map(|(k, s)| k * s).sum();
            let expected = (full.si * s_s - c.si * ds_s) / (s_s * s_s);
            let th = m.rhs_theta(&ThetaState::from_full(&c, &d).unwrap()).unwrap();
            let scale = m.params().max_rate() * (d.stubs() / s_s);
            assert!(
                (th.theta - expected).abs() <= 1e-10 * scale.max(expected.abs()),
                "{} vs {}",
                th.theta,
                expected
            );
        }
    }

    #[test]
    fn theta_lift_round_trip() {
        let d = trimodal();
        let c = initial_condition(&d, &[90.0, 50.0, 10.0]).unwrap();
        let t = ThetaState::from_full(&c, &d).unwrap();
        let back = CpState::from_theta(&t, &d);
        assert!(back.max_abs_diff(&c) < 1e-9);
    }

    proptest! {
        #[test]
        fn boundary_positivity(l in 0usize..3, si in 0.0..500.0f64, ii in 0.0..500.0f64, tau in 0.0..4.0f64) {
            let m = model(tau);
            let mut s: Vec<f64> = m.dist().counts().collect();
            s[l] = 0.0;
            let i: Vec<f64> = m.dist().counts().zip(&s).map(|(n, s)| n - s).collect();
            let c = CpState { s, i, si, ss: 1000.0, ii };
            let d = m.rhs_full(&c).unwrap();
            prop_assert!((d.s[l] - m.dist().classes()[l].count as f64).abs() < 1e-9);

            let c0 = CpState { si: 0.0, ..c };
            let d0 = m.rhs_full(&c0).unwrap();
            prop_assert!(d0.si >= 0.0);
            prop_assert!((d0.si - ii).abs() < 1e-12 * (1.0 + ii));
        }
    }
}
