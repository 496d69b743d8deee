//! Self-consistent market order parameters for one- and two-group
//! populations: the order-parameter map, finite-r self-consistency loci, the
//! three long-memory (r -> 0) solvers, phase-diagram sweeps and average
//! population returns.

pub mod loci;
pub mod r0;
pub mod sweep;

use crate::error::{Error, Result};
use crate::fokker_planck::{AttractionGrid, Fragmentation, Peak, TradingEnv};
use crate::math;
use crate::model::{GroupSpec, MarketSpec, OrderPriceModel, MARKET_SIGNS};
use serde::{Deserialize, Serialize};

/// Market pair, order-price model and the two trader groups; the shared
/// setup of the population-level solvers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PopulationModel {
    pub markets: [MarketSpec; 2],
    pub prices: OrderPriceModel,
    pub groups: [GroupSpec; 2],
}

impl PopulationModel {
    pub fn new(
        markets: [MarketSpec; 2],
        prices: OrderPriceModel,
        groups: [GroupSpec; 2],
    ) -> Result<Self> {
        prices.validate()?;
        let total = groups[0].weight + groups[1].weight;
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                name: "groups.weight",
                value: total,
                reason: "group weights must sum to 1",
            });
        }
        Ok(Self {
            markets,
            prices,
            groups,
        })
    }

    /// Symmetric default: markets (theta, 1-theta), groups (p, 1-p) at equal
    /// weight, standard Gaussian order prices.
    pub fn symmetric(theta: f64, p_buy: f64) -> Result<Self> {
        Self::new(
            crate::model::symmetric_markets(theta)?,
            OrderPriceModel::default(),
            GroupSpec::symmetric_pair(p_buy)?,
        )
    }

    pub fn env(&self, d: [f64; 2]) -> Result<TradingEnv> {
        TradingEnv::new(self.markets, self.prices, d)
    }
}

/// Buying/selling population fractions per market.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GroupMarketFractions {
    pub n_buy: [f64; 2],
    pub n_sell: [f64; 2],
}

/// Point-mass mixture representation of one group's attraction distribution
/// in the r -> 0 limit (one peak for U/W states, two for S states).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMixture {
    pub peaks: Vec<Peak>,
}

impl GroupMixture {
    pub fn single(delta: f64) -> Self {
        Self {
            peaks: vec![Peak { delta, weight: 1.0 }],
        }
    }

    pub fn bimodal(delta1: f64, delta2: f64, omega: f64) -> Self {
        Self {
            peaks: vec![
                Peak {
                    delta: delta1,
                    weight: omega,
                },
                Peak {
                    delta: delta2,
                    weight: 1.0 - omega,
                },
            ],
        }
    }

    /// Expectation of sigma_beta(m Delta) under the mixture.
    pub fn softmax_mean(&self, beta: f64, market: usize) -> f64 {
        self.peaks
            .iter()
            .map(|p| p.weight * math::logistic(beta * MARKET_SIGNS[market] * p.delta))
            .sum()
    }
}

/// Which procedure produced a steady state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverOrigin {
    Homogeneous,
    CoFragmented,
    PartiallyFragmented,
    LociIntersection,
}

/// A self-consistent population steady state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteadyState {
    pub d: [f64; 2],
    pub classes: [Fragmentation; 2],
    pub mixtures: [GroupMixture; 2],
    /// Some(true/false) when both groups are unimodal; None otherwise.
    pub coordinated: Option<bool>,
    pub avg_return: f64,
    pub origin: SolverOrigin,
}

impl SteadyState {
    /// Two-letter label like "(U,S)".
    pub fn label(&self) -> String {
        format!(
            "({},{})",
            self.classes[0].letter(),
            self.classes[1].letter()
        )
    }
}

/// Solution multiset at one cell of a phase-diagram sweep.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseDiagramCell {
    pub x: f64,
    pub y: f64,
    pub solutions: Vec<SteadyState>,
    pub failure: Option<String>,
}

/// Per-group buy/sell fractions at both markets given gridded distributions.
pub fn market_fractions(
    dists: [&AttractionGrid; 2],
    groups: &[GroupSpec; 2],
    beta: f64,
) -> [GroupMarketFractions; 2] {
    let mut out = [GroupMarketFractions {
        n_buy: [0.0; 2],
        n_sell: [0.0; 2],
    }; 2];
    for g in 0..2 {
        for m in 0..2 {
            let integral = dists[g].weighted(|d| math::logistic(beta * MARKET_SIGNS[m] * d));
            out[g].n_buy[m] = groups[g].p_buy * groups[g].weight * integral;
            out[g].n_sell[m] = (1.0 - groups[g].p_buy) * groups[g].weight * integral;
        }
    }
    out
}

/// Updated demand-to-supply ratios D'_m from the groups' attraction
/// distributions: total buyers over total sellers at each market.
pub fn order_param_map(
    dists: [&AttractionGrid; 2],
    groups: &[GroupSpec; 2],
    beta: f64,
) -> Result<[f64; 2]> {
    let fractions = market_fractions(dists, groups, beta);
    let mut out = [0.0; 2];
    for m in 0..2 {
        let num: f64 = fractions.iter().map(|f| f.n_buy[m]).sum();
        let den: f64 = fractions.iter().map(|f| f.n_sell[m]).sum();
        if den <= 1e-300 || !den.is_finite() {
            return Err(Error::EmptyMarketSide { market: m });
        }
        out[m] = num / den;
    }
    Ok(out)
}

/// Same map evaluated on point-mass mixtures (the r -> 0 limit).
pub fn order_params_from_mixtures(
    mixtures: &[GroupMixture; 2],
    groups: &[GroupSpec; 2],
    beta: f64,
) -> Result<[f64; 2]> {
    let mut out = [0.0; 2];
    for m in 0..2 {
        let mut num = 0.0;
        let mut den = 0.0;
        for g in 0..2 {
            let mean = mixtures[g].softmax_mean(beta, m);
            num += groups[g].p_buy * groups[g].weight * mean;
            den += (1.0 - groups[g].p_buy) * groups[g].weight * mean;
        }
        if den <= 1e-300 || !den.is_finite() {
            return Err(Error::EmptyMarketSide { market: m });
        }
        out[m] = num / den;
    }
    Ok(out)
}

/// Average per-agent per-round score (counting zero returns) of a population
/// described by point-mass mixtures at market conditions `d`.
pub fn average_population_return(
    model: &PopulationModel,
    d: [f64; 2],
    mixtures: &[GroupMixture; 2],
    beta: f64,
) -> Result<f64> {
    let env = model.env(d)?;
    let mut total = 0.0;
    for g in 0..2 {
        let mut group_return = 0.0;
        for peak in &mixtures[g].peaks {
            let mut per_agent = 0.0;
            for m in 0..2 {
                let (c1, _) = env.score_rates(m, model.groups[g].p_buy);
                per_agent += math::logistic(beta * MARKET_SIGNS[m] * peak.delta) * c1;
            }
            group_return += peak.weight * per_agent;
        }
        total += model.groups[g].weight * group_return;
    }
    Ok(total)
}

/// Finite-r variant on gridded distributions.
pub fn average_return_from_grids(
    model: &PopulationModel,
    d: [f64; 2],
    dists: [&AttractionGrid; 2],
    beta: f64,
) -> Result<f64> {
    let env = model.env(d)?;
    let mut total = 0.0;
    for g in 0..2 {
        let p_buy = model.groups[g].p_buy;
        let rates = [env.score_rates(0, p_buy).0, env.score_rates(1, p_buy).0];
        let group_return = dists[g].weighted(|delta| {
            (0..2)
                .map(|m| math::logistic(beta * MARKET_SIGNS[m] * delta) * rates[m])
                .sum::<f64>()
        });
        total += model.groups[g].weight * group_return;
    }
    Ok(total)
}

/// Average population return when every trader picks a market uniformly at
/// random (the beta = 0 baseline), at the correspondingly balanced order
/// parameters.
pub fn random_choice_return(model: &PopulationModel) -> Result<f64> {
    let mixtures = [GroupMixture::single(0.0), GroupMixture::single(0.0)];
    let d = order_params_from_mixtures(&mixtures, &model.groups, 0.0)?;
    average_population_return(model, d, &mixtures, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fokker_planck::{stationary_distribution, GridSpec};
    use approx::assert_relative_eq;

    #[test]
    fn single_group_order_parameter_is_preference_ratio() {
        // D_m = p/(1-p) independent of the distribution shape, beta and theta
        for &(p, beta, theta) in &[(0.8, 3.0, 0.3), (0.8, 11.0, 0.45), (0.6, 0.7, 0.2)] {
            let groups = [
                GroupSpec {
                    p_buy: p,
                    weight: 0.5,
                },
                GroupSpec {
                    p_buy: p,
                    weight: 0.5,
                },
            ];
            let model = PopulationModel::new(
                crate::model::symmetric_markets(theta).unwrap(),
                OrderPriceModel::default(),
                groups,
            )
            .unwrap();
            let env = model.env([1.3, 0.8]).unwrap();
            let spec = GridSpec::default();
            let dist = stationary_distribution(p, &env, beta, 0.05, &spec).unwrap();
            let d = order_param_map([&dist, &dist], &model.groups, beta).unwrap();
            assert_relative_eq!(d[0], p / (1.0 - p), epsilon = 1e-8);
            assert_relative_eq!(d[1], p / (1.0 - p), epsilon = 1e-8);
        }
    }

    #[test]
    fn mixture_map_symmetry() {
        let groups = GroupSpec::symmetric_pair(0.8).unwrap();
        // Delta-symmetric point masses at 0: D' = 1 at both markets
        let mixtures = [GroupMixture::single(0.0), GroupMixture::single(0.0)];
        let d = order_params_from_mixtures(&mixtures, &groups, 5.0).unwrap();
        assert_relative_eq!(d[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(d[1], 1.0, epsilon = 1e-12);
        // mirror-symmetric mixtures give D_1 * D_-1 = 1
        let mixtures = [GroupMixture::single(0.4), GroupMixture::single(-0.4)];
        let d = order_params_from_mixtures(&mixtures, &groups, 5.0).unwrap();
        assert_relative_eq!(d[0] * d[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mixture_map_matches_quadrature() {
        // generic two-group input against direct numerical integration
        let groups = GroupSpec::symmetric_pair(0.7).unwrap();
        let beta = 4.0;
        let mixtures = [
            GroupMixture::bimodal(0.5, -0.3, 0.6),
            GroupMixture::single(-0.2),
        ];
        let d = order_params_from_mixtures(&mixtures, &groups, beta).unwrap();
        // independent route: represent the mixtures as narrow Gaussians on a
        // grid and integrate
        let spec = GridSpec {
            lo: -2.0,
            hi: 2.0,
            n: 40001,
        };
        let grid = spec.build();
        let narrow = |peaks: &[Peak]| {
            let s = 1e-3;
            let values: Vec<f64> = grid
                .iter()
                .map(|&x| {
                    peaks
                        .iter()
                        .map(|p| p.weight * math::normal_pdf((x - p.delta) / s) / s)
                        .sum()
                })
                .collect();
            AttractionGrid {
                grid: grid.clone(),
                values,
            }
        };
        let g1 = narrow(&mixtures[0].peaks);
        let g2 = narrow(&mixtures[1].peaks);
        let d_grid = order_param_map([&g1, &g2], &groups, beta).unwrap();
        assert_relative_eq!(d[0], d_grid[0], max_relative = 1e-6);
        assert_relative_eq!(d[1], d_grid[1], max_relative = 1e-6);
    }

    #[test]
    fn empty_market_side_is_signaled() {
        let groups = [
            GroupSpec {
                p_buy: 1.0,
                weight: 0.5,
            },
            GroupSpec {
                p_buy: 1.0,
                weight: 0.5,
            },
        ];
        let mixtures = [GroupMixture::single(0.0), GroupMixture::single(0.0)];
        let err = order_params_from_mixtures(&mixtures, &groups, 1.0).unwrap_err();
        assert!(matches!(err, Error::EmptyMarketSide { .. }));
    }

    #[test]
    fn random_choice_return_decisive_groups() {
        let model = PopulationModel::symmetric(0.3, 0.8).unwrap();
        let r = random_choice_return(&model).unwrap();
        // balanced markets: D = (1,1); every agent trades with the
        // group-averaged score rate at each market
        let env = model.env([1.0, 1.0]).unwrap();
        let expect = 0.5
            * (0..2)
                .map(|m| {
                    0.5 * (env.score_rates(m, 0.8).0 + env.score_rates(m, 0.2).0)
                })
                .sum::<f64>();
        assert_relative_eq!(r, expect, max_relative = 1e-12);
    }
}
