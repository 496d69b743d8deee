//! Deterministic long-memory (r -> 0) dynamics of the two- and four-trader
//! systems: flow fields, fixed points, linear stability and the coordination
//! and fragmentation thresholds.

pub mod four_player;
pub mod two_player;

use serde::{Deserialize, Serialize};

/// Qualitative type of a fixed point of the small-system flows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixedPointClass {
    /// Market preferences stay weak or mirror the agents' trading roles.
    Uncoordinated,
    /// All agents develop a preference for the same market.
    Coordinated,
    /// Each agent group splits across the two markets.
    Fragmented,
    /// Exactly one group splits across the markets.
    PartiallyFragmented,
}

/// Combined score prefactors for probabilistic buy/sell roles with the
/// symmetric assignment p^1 = 1 - p^{-1} = p.
///
/// `trade` = p^2 + (1-p)^2 multiplies every score term (the probability that
/// the two sides submit complementary orders); `role` = p^2 - (1-p)^2 is the
/// prefactor of the role-asymmetric part.
pub(crate) fn role_factors(p_buy: f64) -> (f64, f64) {
    let q = 1.0 - p_buy;
    (p_buy * p_buy + q * q, p_buy * p_buy - q * q)
}

/// Deterministic score of a group-`g` agent at a market with bias `theta_m`,
/// given both groups' buying preferences: the expected payoff per trade,
/// p^g (1-p^{-g}) (1-theta_m) + (1-p^g) p^{-g} theta_m.
pub(crate) fn group_score(theta_m: f64, p_own: f64, p_other: f64) -> f64 {
    p_own * (1.0 - p_other) * (1.0 - theta_m) + (1.0 - p_own) * p_other * theta_m
}

/// Stability margin: eigenvalues with real part within this distance of zero
/// are treated as marginal rather than classified.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// Deduplication tolerance for multi-start fixed-point searches (max norm).
pub const DEDUP_TOL: f64 = 1e-8;

/// Linear stability verdict from the real parts of Jacobian eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

impl Stability {
    pub(crate) fn from_max_real(max_re: f64) -> Self {
        if max_re < -STABILITY_MARGIN {
            Stability::Stable
        } else if max_re > STABILITY_MARGIN {
            Stability::Unstable
        } else {
            Stability::Marginal
        }
    }

    pub fn is_stable(self) -> bool {
        matches!(self, Stability::Stable)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn role_factors_limits() {
        assert_eq!(role_factors(1.0), (1.0, 1.0));
        assert_eq!(role_factors(0.5), (0.5, 0.0));
        let (f, g) = role_factors(0.8);
        assert!((f - 0.68).abs() < 1e-15);
        assert!((g - 0.6).abs() < 1e-15);
    }

    #[test]
    fn group_score_strict_roles() {
        // strict buyer vs strict seller: buyer payoff 1 - theta, seller theta
        assert_eq!(group_score(0.3, 1.0, 0.0), 0.7);
        assert_eq!(group_score(0.3, 0.0, 1.0), 0.3);
    }
}
