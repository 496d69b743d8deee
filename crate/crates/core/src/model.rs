//! Model parameters and the closed-form primitives shared by analysis and
//! simulation: expected prices, order-validity and execution probabilities,
//! partial score moments and the two-market softmax choice.
//!
//! Markets are always handled as a pair. Index 0 is market m = +1 and index 1
//! is market m = -1; [`MARKET_SIGNS`] maps indices to the signs used in the
//! attraction-difference dynamics.

use crate::error::{Error, Result};
use crate::math;
use serde::{Deserialize, Serialize};

/// Signs of the two markets by array index.
pub const MARKET_SIGNS: [f64; 2] = [1.0, -1.0];

/// One trading venue: `theta` interpolates the round price between the
/// average ask (theta = 0) and the average bid (theta = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketSpec {
    pub theta: f64,
}

impl MarketSpec {
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidParameter {
                name: "theta",
                value: theta,
                reason: "must lie in [0, 1]",
            });
        }
        Ok(Self { theta })
    }
}

/// The symmetric market pair (theta, 1 - theta).
pub fn symmetric_markets(theta: f64) -> Result<[MarketSpec; 2]> {
    Ok([MarketSpec::new(theta)?, MarketSpec::new(1.0 - theta)?])
}

/// Gaussian order-price model: asks a ~ N(mu_a, sigma_a^2), bids
/// b ~ N(mu_b, sigma_b^2) with mu_b > mu_a.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderPriceModel {
    pub mu_a: f64,
    pub mu_b: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
}

impl Default for OrderPriceModel {
    /// The standard setting mu_b - mu_a = 1, sigma_a = sigma_b = 1.
    fn default() -> Self {
        Self {
            mu_a: 0.0,
            mu_b: 1.0,
            sigma_a: 1.0,
            sigma_b: 1.0,
        }
    }
}

impl OrderPriceModel {
    /// Deterministic orders (sigma = 0) with unit bid-ask gap.
    pub fn deterministic() -> Self {
        Self {
            mu_a: 0.0,
            mu_b: 1.0,
            sigma_a: 0.0,
            sigma_b: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu_b <= self.mu_a {
            return Err(Error::InvalidParameter {
                name: "mu_b",
                value: self.mu_b,
                reason: "mean bid must exceed mean ask",
            });
        }
        for (name, v) in [("sigma_a", self.sigma_a), ("sigma_b", self.sigma_b)] {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "spread must be finite and non-negative",
                });
            }
        }
        Ok(())
    }
}

/// A trader group: fixed buying preference and its population fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub p_buy: f64,
    pub weight: f64,
}

impl GroupSpec {
    pub fn new(p_buy: f64, weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_buy) {
            return Err(Error::InvalidParameter {
                name: "p_buy",
                value: p_buy,
                reason: "must lie in [0, 1]",
            });
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::InvalidParameter {
                name: "weight",
                value: weight,
                reason: "must lie in [0, 1]",
            });
        }
        Ok(Self { p_buy, weight })
    }

    /// Two equal-weight groups with symmetric buying preferences (p, 1-p).
    pub fn symmetric_pair(p_buy: f64) -> Result<[GroupSpec; 2]> {
        Ok([
            GroupSpec::new(p_buy, 0.5)?,
            GroupSpec::new(1.0 - p_buy, 0.5)?,
        ])
    }
}

/// Learning rate (inverse memory length) and intensity of choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LearningParams {
    pub r: f64,
    pub beta: f64,
}

impl LearningParams {
    pub fn new(r: f64, beta: f64) -> Result<Self> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "r",
                value: r,
                reason: "learning rate must lie in (0, 1]",
            });
        }
        if beta < 0.0 || !beta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: beta,
                reason: "intensity of choice must be finite and non-negative",
            });
        }
        Ok(Self { r, beta })
    }
}

/// Partial first and second moments of the positive branch of a score
/// distribution: m1 = int_0^inf S N(S; mu, sigma^2) dS and likewise for S^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnMoments {
    pub m1: f64,
    pub m2: f64,
}

/// Demand-to-supply ratios plus the derived validity and execution
/// probabilities for both markets (index 0 is market +1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketConditions {
    pub d: [f64; 2],
    pub q_buy: [f64; 2],
    pub q_sell: [f64; 2],
    pub t_buy: [f64; 2],
    pub t_sell: [f64; 2],
}

impl MarketConditions {
    /// Derive validity and execution probabilities from market specs, the
    /// order-price model and a pair of demand-to-supply ratios.
    pub fn derive(
        markets: &[MarketSpec; 2],
        prices: &OrderPriceModel,
        d: [f64; 2],
    ) -> Result<Self> {
        prices.validate()?;
        let mut out = MarketConditions {
            d,
            q_buy: [0.0; 2],
            q_sell: [0.0; 2],
            t_buy: [0.0; 2],
            t_sell: [0.0; 2],
        };
        for m in 0..2 {
            let (qb, qs) = validity_probs(&markets[m], prices);
            let (tb, ts) = execution_probs(qb, qs, d[m])?;
            out.q_buy[m] = qb;
            out.q_sell[m] = qs;
            out.t_buy[m] = tb;
            out.t_sell[m] = ts;
        }
        Ok(out)
    }
}

/// Round trading price evaluated at the ensemble means of the submitted
/// orders: pi_m = mu_a + theta_m (mu_b - mu_a).
pub fn expected_price(market: &MarketSpec, prices: &OrderPriceModel) -> f64 {
    prices.mu_a + market.theta * (prices.mu_b - prices.mu_a)
}

/// Probabilities that a submitted bid/ask is valid at the expected price:
/// q_buy = P(b > pi_m), q_sell = P(a < pi_m).
///
/// A zero spread degenerates to an indicator (1/2 at exact equality), so the
/// deterministic-order setting is a special case of the same primitive.
pub fn validity_probs(market: &MarketSpec, prices: &OrderPriceModel) -> (f64, f64) {
    let pi = expected_price(market, prices);
    let q_buy = tail_above(prices.mu_b, prices.sigma_b, pi);
    let q_sell = 1.0 - tail_above(prices.mu_a, prices.sigma_a, pi);
    (q_buy, q_sell)
}

/// P(X > threshold) for X ~ N(mu, sigma^2), with the sigma = 0 step limit.
fn tail_above(mu: f64, sigma: f64, threshold: f64) -> f64 {
    if sigma == 0.0 {
        return if mu > threshold {
            1.0
        } else if mu < threshold {
            0.0
        } else {
            0.5
        };
    }
    math::normal_cdf((mu - threshold) / sigma)
}

/// Execution probabilities for valid orders given the demand-to-supply
/// ratio d: t_buy = min(1, q_sell/(q_buy d)), t_sell = min(1, q_buy d/q_sell).
pub fn execution_probs(q_buy: f64, q_sell: f64, d: f64) -> Result<(f64, f64)> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::NonPositiveDemand(d));
    }
    if q_buy <= 0.0 {
        return Err(Error::VanishingValidity);
    }
    let ratio = q_sell / (q_buy * d);
    let t_buy = ratio.min(1.0);
    let t_sell = if q_sell > 0.0 {
        (q_buy * d / q_sell).min(1.0)
    } else {
        1.0
    };
    Ok((t_buy, t_sell))
}

/// Positive-branch partial moments of N(mu_eff, sigma^2):
/// m1 = mu Phi(mu/sigma) + sigma phi(mu/sigma),
/// m2 = (mu^2 + sigma^2) Phi(mu/sigma) + mu sigma phi(mu/sigma).
pub fn partial_return_moments(mu_eff: f64, sigma: f64) -> ReturnMoments {
    if sigma == 0.0 {
        // deterministic limit
        return if mu_eff > 0.0 {
            ReturnMoments {
                m1: mu_eff,
                m2: mu_eff * mu_eff,
            }
        } else {
            ReturnMoments { m1: 0.0, m2: 0.0 }
        };
    }
    let a = mu_eff / sigma;
    let cdf = math::normal_cdf(a);
    let pdf = math::normal_pdf(a);
    ReturnMoments {
        m1: mu_eff * cdf + sigma * pdf,
        m2: (mu_eff * mu_eff + sigma * sigma) * cdf + mu_eff * sigma * pdf,
    }
}

/// Two-market softmax: probability of picking market +1 and market -1 given
/// the attraction difference delta. Overflow-safe for large |beta * delta|.
pub fn softmax_pair(beta: f64, delta: f64) -> (f64, f64) {
    let p_plus = math::logistic(beta * delta);
    (p_plus, 1.0 - p_plus)
}
