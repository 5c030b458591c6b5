//! Degree distributions, their moments, the epidemic threshold and the
//! structural assumptions used by the global-stability certificate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One degree class: `count` nodes, each with `degree` neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeClass {
    pub degree: u32,
    pub count: u64,
}

/// Raw moments of the degree distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    /// Mean degree.
    pub n: f64,
    /// Second moment.
    pub n2: f64,
    /// Third moment.
    pub n3: f64,
    /// Total stub count, mean degree times node count.
    #[serde(rename = "nN")]
    pub stubs: f64,
}

/// A validated degree distribution with classes sorted by increasing degree.
///
/// Moments are accumulated in integer arithmetic and divided once, so they
/// are exact up to a single rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    classes: Vec<DegreeClass>,
    total: u64,
    sums: [u128; 4],
    moments: Moments,
}

impl DegreeDistribution {
    /// Builds a distribution from `(degree, count)` pairs in any order.
    pub fn new(pairs: &[(u32, u64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut classes = Vec::with_capacity(pairs.len());
        for &(degree, count) in pairs {
            if degree == 0 || count == 0 {
                return Err(Error::NonPositiveEntry {
                    degree: degree as u64,
                    count,
                });
            }
            classes.push(DegreeClass { degree, count });
        }
        classes.sort_by_key(|c| c.degree);
        if let Some(w) = classes.windows(2).find(|w| w[0].degree == w[1].degree) {
            return Err(Error::DuplicateDegree(w[0].degree as u64));
        }

        let mut sums = [0u128; 4];
        for c in &classes {
            let k = c.degree as u128;
            let m = c.count as u128;
            sums[0] += m;
            sums[1] += k * m;
            sums[2] += k * k * m;
            sums[3] += k * k * k * m;
        }
        if sums[2] == sums[1] {
            return Err(Error::DegenerateDistribution);
        }
        let total = sums[0] as f64;
        let moments = Moments {
            n: sums[1] as f64 / total,
            n2: sums[2] as f64 / total,
            n3: sums[3] as f64 / total,
            stubs: sums[1] as f64,
        };
        Ok(Self {
            classes,
            total: sums[0] as u64,
            sums,
            moments,
        })
    }

    /// Regular network: every node has degree `k`.
    pub fn regular(k: u32, nodes: u64) -> Result<Self> {
        Self::new(&[(k, nodes)])
    }

    pub fn classes(&self) -> &[DegreeClass] {
        &self.classes
    }

    /// Number of degree classes, L.
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Total node count, N.
    pub fn total_nodes(&self) -> u64 {
        self.total
    }

    pub fn n_total(&self) -> f64 {
        self.total as f64
    }

    pub fn moments(&self) -> Moments {
        self.moments
    }

    /// Total stub count nN.
    pub fn stubs(&self) -> f64 {
        self.moments.stubs
    }

    pub fn degrees(&self) -> impl Iterator<Item = f64> + '_ {
        self.classes.iter().map(|c| c.degree as f64)
    }

    pub fn counts(&self) -> impl Iterator<Item = f64> + '_ {
        self.classes.iter().map(|c| c.count as f64)
    }

    pub fn min_degree(&self) -> u32 {
        self.classes[0].degree
    }

    /// `(⟨n²⟩ - ⟨n⟩) · N`, exact in integers before conversion.
    fn excess_stubs(&self) -> f64 {
        (self.sums[2] - self.sums[1]) as f64
    }

    /// Epidemic threshold γ⟨n⟩ / (⟨n²⟩ − ⟨n⟩).
    pub fn tau_c(&self, gamma: f64) -> f64 {
        gamma * self.threshold_ratio()
    }

    /// a = ⟨n⟩ / (⟨n²⟩ − ⟨n⟩), so that τ_c = γ·a.
    pub fn threshold_ratio(&self) -> f64 {
        self.sums[1] as f64 / self.excess_stubs()
    }

    /// B = ⟨n²⟩ / (⟨n²⟩ − ⟨n⟩), the constant of the Jensen stub bound.
    pub fn jensen_constant(&self) -> f64 {
        self.sums[2] as f64 / self.excess_stubs()
    }

    pub fn check_assumptions(&self) -> AssumptionReport {
        let m = self.moments;
        AssumptionReport {
            a1_holds: (2.0 + std::f64::consts::SQRT_2) * m.n <= m.n2,
            a2_holds: self.len() == 2,
            a: self.threshold_ratio(),
            b: self.jensen_constant(),
        }
    }
}

/// Which of the structural assumptions (A1), (A2) hold, plus the constants
/// the certificate needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// (2 + √2)⟨n⟩ ≤ ⟨n²⟩.
    pub a1_holds: bool,
    /// Exactly two degree classes.
    pub a2_holds: bool,
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
}

/// Infection and recovery rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpidemicParams {
    pub tau: f64,
    pub gamma: f64,
}

impl EpidemicParams {
    pub fn new(tau: f64, gamma: f64) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::InvalidRate {
                name: "tau",
                value: tau,
            });
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidRate {
                name: "gamma",
                value: gamma,
            });
        }
        Ok(Self { tau, gamma })
    }

    pub fn with_tau(self, tau: f64) -> Result<Self> {
        Self::new(tau, self.gamma)
    }

    pub fn max_rate(&self) -> f64 {
        self.tau.max(self.gamma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn trimodal() -> DegreeDistribution {
        DegreeDistribution::new(&[(2, 850), (3, 100), (4, 50)]).unwrap()
    }

    #[test]
    fn trimodal_moments() {
        let d = trimodal();
        assert_eq!(d.total_nodes(), 1000);
        assert_eq!(d.len(), 3);
        let m = d.moments();
        assert_eq!(m.n, 2.2);
        assert_eq!(m.n2, 5.1);
        assert_eq!(m.n3, 12.7);
        assert_eq!(m.stubs, 2200.0);
    }

    #[test]
    fn input_order_is_irrelevant() {
        let d = DegreeDistribution::new(&[(4, 50), (2, 850), (3, 100)]).unwrap();
        assert_eq!(d, trimodal());
        assert_eq!(d.classes()[0].degree, 2);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(DegreeDistribution::new(&[]), Err(Error::EmptyInput));
        assert_eq!(DegreeDistribution::new(&[(1, 10)]), Err(Error::DegenerateDistribution));
        assert_eq!(
            DegreeDistribution::new(&[(1, 10), (1, 5)]),
            Err(Error::DuplicateDegree(1))
        );
        assert!(matches!(
            DegreeDistribution::new(&[(0, 10), (2, 5)]),
            Err(Error::NonPositiveEntry { degree: 0, .. })
        ));
        assert!(matches!(
            DegreeDistribution::new(&[(3, 0)]),
            Err(Error::NonPositiveEntry { count: 0, .. })
        ));
    }

    #[test]
    fn regular_network() {
        let d = DegreeDistribution::regular(4, 1000).unwrap();
        assert_eq!(d.len(), 1);
        let m = d.moments();
        assert_eq!((m.n, m.n2, m.n3), (4.0, 16.0, 64.0));
        assert_relative_eq!(d.tau_c(1.0), 1.0 / 3.0, max_relative = 1e-15);
        assert!(d.check_assumptions().a1_holds);
        assert!(!d.check_assumptions().a2_holds);
    }

    #[test]
    fn thresholds() {
        assert!((trimodal().tau_c(1.0) - 0.7586).abs() < 5e-5);
        let bimodal = DegreeDistribution::new(&[(2, 500), (4, 500)]).unwrap();
        assert_relative_eq!(bimodal.tau_c(1.0), 3.0 / 7.0, max_relative = 1e-15);
        let r = bimodal.check_assumptions();
        assert!(r.a2_holds);
        assert!(!r.a1_holds);
        assert_relative_eq!(r.b, 10.0 / 7.0, max_relative = 1e-15);
    }

    #[test]
    fn trimodal_violates_both_assumptions() {
        let r = trimodal().check_assumptions();
        assert!(!r.a1_holds);
        assert!(!r.a2_holds);
        assert_relative_eq!(r.a * 1.0, trimodal().tau_c(1.0));
    }

    #[test]
    fn rates_are_validated() {
        assert!(EpidemicParams::new(0.0, 1.0).is_ok());
        assert!(EpidemicParams::new(-0.1, 1.0).is_err());
        assert!(EpidemicParams::new(1.0, 0.0).is_err());
        assert!(EpidemicParams::new(f64::NAN, 1.0).is_err());
    }

    fn distribution(min_degree: u32) -> impl Strategy<Value = DegreeDistribution> {
        prop::collection::btree_map(min_degree..40u32, 1..10_000u64, 1..7).prop_filter_map("degenerate", |m| {
            let pairs: Vec<_> = m.into_iter().collect();
            DegreeDistribution::new(&pairs).ok()
        })
    }

    proptest! {
        #[test]
        fn moment_inequalities(d in distribution(1)) {
            let m = d.moments();
            prop_assert!(m.n2 >= m.n * m.n * (1.0 - 1e-12));
            prop_assert!(m.n3 + m.n >= 2.0 * m.n2 * (1.0 - 1e-12));
            prop_assert!(d.tau_c(1.0) > 0.0);
        }

        #[test]
        fn min_degree_four_implies_a1(d in distribution(4)) {
            prop_assert!(d.check_assumptions().a1_holds);
        }

        #[test]
        fn threshold_is_linear_in_gamma(d in distribution(1), c in 1e-3..1e3f64, gamma in 1e-2..10.0f64) {
            let lhs = d.tau_c(c * gamma);
            let rhs = c * d.tau_c(gamma);
            prop_assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * rhs);
        }
    }
}
