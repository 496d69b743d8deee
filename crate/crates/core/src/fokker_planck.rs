//! Single-group large-population machinery: drift and diffusion of the
//! attraction-difference dynamics, the free-energy profile, the stationary
//! distribution P(Delta) ~ exp(-f/r)/M2, its U/W/S classification, the Binder
//! cumulant, and a single-agent transition-kernel Monte Carlo that serves as
//! the brute-force oracle for all of the above.

use crate::error::{Error, Result};
use crate::math;
use crate::model::{
    expected_price, partial_return_moments, softmax_pair, LearningParams, MarketConditions,
    MarketSpec, OrderPriceModel, ReturnMoments, MARKET_SIGNS,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Market pair, price model and everything derived from a fixed set of
/// demand-to-supply ratios: validity/execution probabilities and the partial
/// score moments per market and order side.
#[derive(Debug, Clone)]
pub struct TradingEnv {
    pub markets: [MarketSpec; 2],
    pub prices: OrderPriceModel,
    pub cond: MarketConditions,
    /// positive-branch score moments, indexed [market][0 = buy, 1 = sell]
    pub moments: [[ReturnMoments; 2]; 2],
    /// effective score means mu_b - pi_m (buy) and pi_m - mu_a (sell)
    pub mu_eff: [[f64; 2]; 2],
}

impl TradingEnv {
    pub fn new(markets: [MarketSpec; 2], prices: OrderPriceModel, d: [f64; 2]) -> Result<Self> {
        let cond = MarketConditions::derive(&markets, &prices, d)?;
        let mut moments = [[ReturnMoments { m1: 0.0, m2: 0.0 }; 2]; 2];
        let mut mu_eff = [[0.0; 2]; 2];
        for m in 0..2 {
            let pi = expected_price(&markets[m], &prices);
            mu_eff[m][0] = prices.mu_b - pi;
            mu_eff[m][1] = pi - prices.mu_a;
            moments[m][0] = partial_return_moments(mu_eff[m][0], prices.sigma_b);
            moments[m][1] = partial_return_moments(mu_eff[m][1], prices.sigma_a);
        }
        Ok(Self {
            markets,
            prices,
            cond,
            moments,
            mu_eff,
        })
    }

    /// Expected score rate and square rate at market `m` for an agent with
    /// buying preference `p_buy`:
    /// c1 = sum_tau p_tau T_tau <S_tau>, c2 = sum_tau p_tau T_tau <S^2_tau>.
    pub fn score_rates(&self, m: usize, p_buy: f64) -> (f64, f64) {
        let c1 = p_buy * self.cond.t_buy[m] * self.moments[m][0].m1
            + (1.0 - p_buy) * self.cond.t_sell[m] * self.moments[m][1].m1;
        let c2 = p_buy * self.cond.t_buy[m] * self.moments[m][0].m2
            + (1.0 - p_buy) * self.cond.t_sell[m] * self.moments[m][1].m2;
        (c1, c2)
    }

    /// Trade probability (validity times execution) per market and side.
    pub fn trade_prob(&self, m: usize, side: usize) -> f64 {
        match side {
            0 => self.cond.q_buy[m] * self.cond.t_buy[m],
            _ => self.cond.q_sell[m] * self.cond.t_sell[m],
        }
    }
}

/// Drift of the attraction difference:
/// M1(Delta) = sum_m m [sum_tau p_tau T_tau <S_tau>] sigma_beta(m Delta) - Delta.
pub fn drift_m1(delta: f64, p_buy: f64, env: &TradingEnv, beta: f64) -> f64 {
    let mut acc = -delta;
    for m in 0..2 {
        let (c1, _) = env.score_rates(m, p_buy);
        acc += MARKET_SIGNS[m] * c1 * math::logistic(beta * MARKET_SIGNS[m] * delta);
    }
    acc
}

/// Diffusion strength:
/// M2(Delta) = Delta^2 + sum_m [c2 - 2 m Delta c1] sigma_beta(m Delta).
pub fn diffusion_m2(delta: f64, p_buy: f64, env: &TradingEnv, beta: f64) -> f64 {
    let mut acc = delta * delta;
    for m in 0..2 {
        let (c1, c2) = env.score_rates(m, p_buy);
        let s = math::logistic(beta * MARKET_SIGNS[m] * delta);
        acc += (c2 - 2.0 * MARKET_SIGNS[m] * delta * c1) * s;
    }
    acc
}

/// Evaluation grid for Delta.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Default for GridSpec {
    /// Scores are bounded near [0, 1] with the default prices, so |Delta| is
    /// at most about 1 at stationarity; the margin covers transients.
    fn default() -> Self {
        Self {
            lo: -1.5,
            hi: 1.5,
            n: 3001,
        }
    }
}

impl GridSpec {
    pub fn build(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n).map(|i| self.lo + step * i as f64).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo < 0.0 && self.hi > 0.0) {
            return Err(Error::InvalidParameter {
                name: "grid",
                value: self.lo,
                reason: "grid must straddle Delta = 0",
            });
        }
        if self.n < 3 {
            return Err(Error::InvalidParameter {
                name: "grid.n",
                value: self.n as f64,
                reason: "need at least 3 points",
            });
        }
        Ok(())
    }
}

/// A local minimum of the free energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyMinimum {
    pub delta: f64,
    pub f: f64,
}

/// Free energy f(Delta) = -2 int_0^Delta M1/M2 with the drift and diffusion
/// profiles it was built from.
#[derive(Debug, Clone)]
pub struct FreeEnergyProfile {
    pub grid: Vec<f64>,
    pub f: Vec<f64>,
    pub m1: Vec<f64>,
    pub m2: Vec<f64>,
    /// minima sorted by location, with f computed by adaptive quadrature
    pub minima: Vec<FreeEnergyMinimum>,
}

pub fn free_energy(
    p_buy: f64,
    env: &TradingEnv,
    beta: f64,
    grid_spec: &GridSpec,
) -> Result<FreeEnergyProfile> {
    grid_spec.validate()?;
    let grid = grid_spec.build();
    let mut m1 = Vec::with_capacity(grid.len());
    let mut m2 = Vec::with_capacity(grid.len());
    for &d in &grid {
        let v2 = diffusion_m2(d, p_buy, env, beta);
        if v2 <= 0.0 {
            return Err(Error::NonPositiveDiffusion { delta: d, m2: v2 });
        }
        m1.push(drift_m1(d, p_buy, env, beta));
        m2.push(v2);
    }
    let ratio: Vec<f64> = m1.iter().zip(&m2).map(|(a, b)| -2.0 * a / b).collect();
    let anchor = grid
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap();
    let f = math::cumtrapz_anchored(&grid, &ratio, anchor);
    let minima = locate_minima(&grid, &m1, p_buy, env, beta);
    Ok(FreeEnergyProfile {
        grid,
        f,
        m1,
        m2,
        minima,
    })
}

/// Minima of f are descending zeros of M1; each is bracketed on the grid,
/// refined by bisection and assigned an f value by quadrature from 0.
fn locate_minima(
    grid: &[f64],
    m1: &[f64],
    p_buy: f64,
    env: &TradingEnv,
    beta: f64,
) -> Vec<FreeEnergyMinimum> {
    let mut out = Vec::new();
    for i in 0..grid.len() - 1 {
        if m1[i] > 0.0 && m1[i + 1] <= 0.0 {
            let root = math::bisect(
                &|d| drift_m1(d, p_buy, env, beta),
                grid[i],
                grid[i + 1],
                200,
            );
            out.push(FreeEnergyMinimum {
                delta: root,
                f: free_energy_at(root, p_buy, env, beta),
            });
        }
    }
    out
}

/// f at an arbitrary point by adaptive quadrature of -2 M1/M2 from 0.
pub fn free_energy_at(delta: f64, p_buy: f64, env: &TradingEnv, beta: f64) -> f64 {
    math::integrate(
        &|d| -2.0 * drift_m1(d, p_buy, env, beta) / diffusion_m2(d, p_buy, env, beta),
        0.0,
        delta,
        1e-12,
    )
}

/// Normalized stationary density of Delta on a grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttractionGrid {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl AttractionGrid {
    pub fn integral(&self) -> f64 {
        math::trapz(&self.grid, &self.values)
    }

    /// Raw moment int Delta^k P(Delta) dDelta.
    pub fn moment(&self, k: u32) -> f64 {
        let vals: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.values)
            .map(|(d, p)| d.powi(k as i32) * p)
            .collect();
        math::trapz(&self.grid, &vals)
    }

    /// Integral of w(Delta) P(Delta) dDelta.
    pub fn weighted<F: Fn(f64) -> f64>(&self, w: F) -> f64 {
        let vals: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.values)
            .map(|(d, p)| w(*d) * p)
            .collect();
        math::trapz(&self.grid, &vals)
    }
}

/// Stationary solution P(Delta) proportional to exp(-f/r)/M2, normalized in
/// the log domain so small r cannot underflow.
pub fn stationary_distribution(
    p_buy: f64,
    env: &TradingEnv,
    beta: f64,
    r: f64,
    grid_spec: &GridSpec,
) -> Result<AttractionGrid> {
    let profile = free_energy(p_buy, env, beta, grid_spec)?;
    Ok(stationary_from_profile(&profile, r))
}

/// Same as [`stationary_distribution`] but reusing an existing profile.
pub fn stationary_from_profile(profile: &FreeEnergyProfile, r: f64) -> AttractionGrid {
    let logw: Vec<f64> = profile
        .f
        .iter()
        .zip(&profile.m2)
        .map(|(f, m2)| -f / r - m2.ln())
        .collect();
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
    let z = math::trapz(&profile.grid, &w);
    AttractionGrid {
        grid: profile.grid.clone(),
        values: w.iter().map(|v| v / z).collect(),
    }
}

/// Fragmentation class of a single-group steady state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fragmentation {
    Unfragmented,
    WeaklyFragmented,
    StronglyFragmented,
}

impl Fragmentation {
    pub fn letter(self) -> char {
        match self {
            Fragmentation::Unfragmented => 'U',
            Fragmentation::WeaklyFragmented => 'W',
            Fragmentation::StronglyFragmented => 'S',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub delta: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateClass {
    pub class: Fragmentation,
    pub peaks: Vec<Peak>,
}

/// Default "equal minima" tolerance at finite r. Free-energy differences of
/// order r already shift peak weights by order one.
pub fn strong_tolerance(r: f64) -> f64 {
    10.0 * r
}

pub fn classify_state(profile: &FreeEnergyProfile, r: f64) -> StateClass {
    classify_state_with_tol(profile, r, strong_tolerance(r))
}

/// U if f has one minimum, S if at least two minima agree within
/// `strong_tol` of the global one, W otherwise. Peak weights come from the
/// Laplace approximation of exp(-f/r)/M2 around each minimum.
pub fn classify_state_with_tol(
    profile: &FreeEnergyProfile,
    r: f64,
    strong_tol: f64,
) -> StateClass {
    let minima = &profile.minima;
    if minima.is_empty() {
        // no interior minimum: treat the global f minimum on the grid as one peak
        let (i, _) = profile
            .f
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        return StateClass {
            class: Fragmentation::Unfragmented,
            peaks: vec![Peak {
                delta: profile.grid[i],
                weight: 1.0,
            }],
        };
    }
    let f_min = minima.iter().map(|m| m.f).fold(f64::INFINITY, f64::min);
    let class = if minima.len() == 1 {
        Fragmentation::Unfragmented
    } else if minima.iter().filter(|m| m.f - f_min <= strong_tol).count() >= 2 {
        Fragmentation::StronglyFragmented
    } else {
        Fragmentation::WeaklyFragmented
    };
    StateClass {
        class,
        peaks: laplace_weights(profile, minima, r),
    }
}

fn laplace_weights(
    profile: &FreeEnergyProfile,
    minima: &[FreeEnergyMinimum],
    r: f64,
) -> Vec<Peak> {
    let interp = |x: f64, values: &[f64]| -> f64 {
        let grid = &profile.grid;
        let step = grid[1] - grid[0];
        let idx = ((x - grid[0]) / step).floor() as usize;
        let idx = idx.min(grid.len() - 2);
        let t = (x - grid[idx]) / step;
        values[idx] * (1.0 - t) + values[idx + 1] * t
    };
    let f_min = minima.iter().map(|m| m.f).fold(f64::INFINITY, f64::min);
    let mut raw = Vec::with_capacity(minima.len());
    for m in minima {
        // curvature f'' = -2 M1'/M2 at the minimum (M1 = 0 there)
        let h = 1e-5;
        let m1_slope = (interp(m.delta + h, &profile.m1) - interp(m.delta - h, &profile.m1))
            / (2.0 * h);
        let m2_here = interp(m.delta, &profile.m2).max(1e-300);
        let curv = (-2.0 * m1_slope / m2_here).max(1e-12);
        let w = ((f_min - m.f) / r).exp() / m2_here * (1.0 / curv.sqrt());
        raw.push(w);
    }
    let total: f64 = raw.iter().sum();
    minima
        .iter()
        .zip(raw)
        .map(|(m, w)| Peak {
            delta: m.delta,
            weight: w / total,
        })
        .collect()
}

/// Binder cumulant B = 1 - <Delta^4> / (3 <Delta^2>^2) of a gridded density.
pub fn binder_cumulant(dist: &AttractionGrid) -> Result<f64> {
    binder_from_moments(dist.moment(2), dist.moment(4))
}

/// Binder cumulant from raw second and fourth moments.
pub fn binder_from_moments(m2: f64, m4: f64) -> Result<f64> {
    if m2 <= 1e-300 {
        return Err(Error::DegenerateDistribution);
    }
    Ok(1.0 - m4 / (3.0 * m2 * m2))
}

/// A single-agent trajectory sampled from the transition kernel.
#[derive(Debug, Clone)]
pub struct KernelSample {
    pub deltas: Vec<f64>,
}

/// One kernel update: pick a market by softmax, trade with probability
/// Q_{tau m} T_{tau m}, draw the positive-branch score, then
/// Delta' = m r S + (1 - r) Delta.
pub fn kernel_step<R: Rng>(
    delta: f64,
    p_buy: f64,
    env: &TradingEnv,
    learning: &LearningParams,
    rng: &mut R,
) -> f64 {
    let (p_plus, _) = softmax_pair(learning.beta, delta);
    let m = if rng.gen::<f64>() < p_plus { 0 } else { 1 };
    let side = if rng.gen::<f64>() < p_buy { 0 } else { 1 };
    let mut update = 0.0;
    if rng.gen::<f64>() < env.trade_prob(m, side) {
        let sigma = if side == 0 {
            env.prices.sigma_b
        } else {
            env.prices.sigma_a
        };
        let s = truncated_positive_normal(env.mu_eff[m][side], sigma, rng);
        update = MARKET_SIGNS[m] * learning.r * s;
    }
    (1.0 - learning.r) * delta + update
}

fn truncated_positive_normal<R: Rng>(mu: f64, sigma: f64, rng: &mut R) -> f64 {
    if sigma == 0.0 {
        return mu.max(0.0);
    }
    loop {
        let s = mu + sigma * math::standard_normal(rng);
        if s > 0.0 {
            return s;
        }
    }
}

/// Simulate one agent against fixed market conditions for `steps` rounds,
/// starting from Delta = 0. Deterministic for a given seed.
pub fn kernel_monte_carlo(
    p_buy: f64,
    env: &TradingEnv,
    learning: &LearningParams,
    steps: usize,
    seed: u64,
) -> KernelSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut deltas = Vec::with_capacity(steps + 1);
    let mut delta = 0.0;
    deltas.push(delta);
    for _ in 0..steps {
        delta = kernel_step(delta, p_buy, env, learning, &mut rng);
        deltas.push(delta);
    }
    KernelSample { deltas }
}

/// Fig.-14-style reference conditions used across tests: a single group of
/// decisive buyers facing symmetrically biased markets, with the varying
/// demand-to-supply ratio attached to the buyer-friendly market.
pub fn reference_env(d_at_buyer_market: f64, d_other: f64) -> TradingEnv {
    let markets = [
        MarketSpec { theta: 0.7 },
        MarketSpec { theta: 0.3 },
    ];
    TradingEnv::new(
        markets,
        OrderPriceModel::default(),
        [d_other, d_at_buyer_market],
    )
    .expect("reference conditions are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const BETA_FIG: f64 = 1.0 / 0.265;

    fn count_drift_zeros(p_buy: f64, env: &TradingEnv, beta: f64) -> usize {
        let grid = GridSpec::default().build();
        let vals: Vec<f64> = grid
            .iter()
            .map(|&d| drift_m1(d, p_buy, env, beta))
            .collect();
        (0..grid.len() - 1)
            .filter(|&i| vals[i] * vals[i + 1] < 0.0)
            .count()
    }

    #[test]
    fn drift_zero_counts_at_reference_conditions() {
        assert_eq!(count_drift_zeros(0.8, &reference_env(1.0, 1.0), BETA_FIG), 1);
        assert_eq!(
            count_drift_zeros(0.8, &reference_env(1.15, 1.0), BETA_FIG),
            3
        );
    }

    #[test]
    fn drift_symmetric_setup_balances_at_zero() {
        let markets = [MarketSpec { theta: 0.3 }, MarketSpec { theta: 0.7 }];
        let env = TradingEnv::new(markets, OrderPriceModel::default(), [1.0, 1.0]).unwrap();
        assert_relative_eq!(drift_m1(0.0, 0.5, &env, 3.0), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn diffusion_positive_and_balanced_at_zero() {
        for d in [1.0, 1.1, 1.15] {
            let env = reference_env(d, 1.0);
            let grid = GridSpec::default().build();
            for &x in &grid {
                assert!(diffusion_m2(x, 0.8, &env, BETA_FIG) > 0.0);
            }
            // M2(0) = (1/2) sum_m c2_m > 0
            let expected: f64 = (0..2)
                .map(|m| 0.5 * env.score_rates(m, 0.8).1)
                .sum();
            assert_relative_eq!(
                diffusion_m2(0.0, 0.8, &env, BETA_FIG),
                expected,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn free_energy_zero_at_origin_and_gradient_checks() {
        let env = reference_env(1.1, 1.0);
        let profile = free_energy(0.8, &env, BETA_FIG, &GridSpec::default()).unwrap();
        let anchor = profile.grid.len() / 2;
        assert_eq!(profile.f[anchor], 0.0);
        // f' = -2 M1/M2 against centered differences, skipping the ends
        let step = profile.grid[1] - profile.grid[0];
        for i in (10..profile.grid.len() - 10).step_by(97) {
            let fd = (profile.f[i + 1] - profile.f[i - 1]) / (2.0 * step);
            let expect = -2.0 * profile.m1[i] / profile.m2[i];
            let scale = expect.abs().max(1.0);
            assert!(
                (fd - expect).abs() / scale < 1e-5,
                "gradient mismatch at {}",
                profile.grid[i]
            );
        }
    }

    #[test]
    fn reference_classification_u_w_s() {
        // one minimum / two unequal minima / two equal minima
        let cases = [
            (1.0, Fragmentation::Unfragmented),
            (1.1, Fragmentation::WeaklyFragmented),
            (1.15, Fragmentation::StronglyFragmented),
        ];
        for (d, expect) in cases {
            let env = reference_env(d, 1.0);
            let profile = free_energy(0.8, &env, BETA_FIG, &GridSpec::default()).unwrap();
            let class = classify_state_with_tol(&profile, 0.05, 2e-3);
            assert_eq!(class.class, expect, "at D = {d}");
        }
    }

    #[test]
    fn reference_minima_values() {
        // frozen from the independent quadrature oracle
        let env = reference_env(1.15, 1.0);
        let profile = free_energy(0.8, &env, BETA_FIG, &GridSpec::default()).unwrap();
        assert_eq!(profile.minima.len(), 2);
        assert_relative_eq!(profile.minima[0].delta, -0.3164, epsilon = 2e-4);
        assert_relative_eq!(profile.minima[1].delta, 0.3140, epsilon = 2e-4);
        let gap = (profile.minima[0].f - profile.minima[1].f).abs();
        assert!(gap < 3e-4, "near-Maxwell gap was {gap}");
        let env = reference_env(1.1, 1.0);
        let profile = free_energy(0.8, &env, BETA_FIG, &GridSpec::default()).unwrap();
        let gap = (profile.minima[0].f - profile.minima[1].f).abs();
        assert_relative_eq!(gap, 0.017276, epsilon = 2e-4);
    }

    #[test]
    fn stationary_distribution_normalized_and_peak_ratio() {
        let env = reference_env(1.15, 1.0);
        let r = 0.05;
        let profile = free_energy(0.8, &env, BETA_FIG, &GridSpec::default()).unwrap();
        let dist = stationary_from_profile(&profile, r);
        assert_relative_eq!(dist.integral(), 1.0, epsilon = 1e-8);
        assert!(dist.values.iter().all(|&v| v >= 0.0));
        // peak-height ratio against the closed form (M2 ratio x exp(-df/r))
        let interp = |x: f64, vals: &[f64]| {
            let step = dist.grid[1] - dist.grid[0];
            let i = ((x - dist.grid[0]) / step).floor() as usize;
            let t = (x - dist.grid[i]) / step;
            vals[i] * (1.0 - t) + vals[i + 1] * t
        };
        let (a, b) = (profile.minima[0], profile.minima[1]);
        let lhs = interp(a.delta, &dist.values) / interp(b.delta, &dist.values);
        let m2a = diffusion_m2(a.delta, 0.8, &env, BETA_FIG);
        let m2b = diffusion_m2(b.delta, 0.8, &env, BETA_FIG);
        let rhs = m2b / m2a * (-(a.f - b.f) / r).exp();
        assert_relative_eq!(lhs, rhs, max_relative = 0.01);
    }

    #[test]
    fn peak_width_scales_as_sqrt_r() {
        let env = reference_env(1.0, 1.0);
        let spec = GridSpec::default();
        let width = |r: f64| {
            let dist = stationary_distribution(0.8, &env, BETA_FIG, r, &spec).unwrap();
            let mean = dist.moment(1);
            (dist.moment(2) - mean * mean).sqrt()
        };
        // small enough r that the peak is deep in the Laplace regime
        let w1 = width(0.004);
        let w2 = width(0.001);
        // quartering r should halve the width
        assert_relative_eq!(w1 / w2, 2.0, max_relative = 0.05);
    }

    #[test]
    fn market_relabel_symmetry_of_distribution() {
        // swapping (theta_1, D_1) <-> (theta_-1, D_-1) maps P(Delta) to P(-Delta)
        let m_a = [MarketSpec { theta: 0.7 }, MarketSpec { theta: 0.3 }];
        let m_b = [MarketSpec { theta: 0.3 }, MarketSpec { theta: 0.7 }];
        let env_a = TradingEnv::new(m_a, OrderPriceModel::default(), [1.0, 1.2]).unwrap();
        let env_b = TradingEnv::new(m_b, OrderPriceModel::default(), [1.2, 1.0]).unwrap();
        let spec = GridSpec::default();
        let da = stationary_distribution(0.8, &env_a, 3.0, 0.1, &spec).unwrap();
        let db = stationary_distribution(0.8, &env_b, 3.0, 0.1, &spec).unwrap();
        let n = da.values.len();
        for i in (0..n).step_by(53) {
            assert_relative_eq!(da.values[i], db.values[n - 1 - i], max_relative = 1e-9);
        }
    }

    #[test]
    fn binder_special_cases() {
        // centered Gaussian -> 0
        let spec = GridSpec {
            lo: -3.0,
            hi: 3.0,
            n: 6001,
        };
        let grid = spec.build();
        let sigma = 0.3;
        let values: Vec<f64> = grid
            .iter()
            .map(|d| math::normal_pdf(d / sigma) / sigma)
            .collect();
        let gauss = AttractionGrid { grid, values };
        assert!(binder_cumulant(&gauss).unwrap().abs() < 1e-6);
        // symmetric two-delta mixture and single off-center delta -> 2/3
        assert_relative_eq!(
            binder_from_moments(0.25, 0.0625).unwrap(),
            2.0 / 3.0,
            max_relative = 1e-12
        );
        assert!(binder_from_moments(0.0, 0.0).is_err());
    }

    #[test]
    fn kernel_full_forgetting_without_trade() {
        // r = 1 and a forced no-trade market: Delta' = 0 regardless of Delta
        let markets = [MarketSpec { theta: 0.5 }, MarketSpec { theta: 0.5 }];
        let mut env =
            TradingEnv::new(markets, OrderPriceModel::default(), [1.0, 1.0]).unwrap();
        env.cond.t_buy = [0.0; 2];
        env.cond.t_sell = [0.0; 2];
        env.cond.q_buy = [0.0; 2];
        env.cond.q_sell = [0.0; 2];
        let learning = LearningParams { r: 1.0, beta: 2.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let next = kernel_step(0.9, 0.5, &env, &learning, &mut rng);
        assert_eq!(next, 0.0);
    }

    #[test]
    fn kernel_mean_step_matches_drift() {
        let env = reference_env(1.1, 1.0);
        let learning = LearningParams {
            r: 1e-3,
            beta: BETA_FIG,
        };
        let delta0 = 0.2;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let step = kernel_step(delta0, 0.8, &env, &learning, &mut rng) - delta0;
            sum += step;
            sumsq += step * step;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        let se = (var / n as f64).sqrt();
        let predicted = drift_m1(delta0, 0.8, &env, BETA_FIG) * learning.r;
        assert!(
            (mean - predicted).abs() < 3.0 * se,
            "kernel drift {mean} vs theory {predicted} (3se = {})",
            3.0 * se
        );
    }

    #[test]
    fn kernel_is_seed_deterministic() {
        let env = reference_env(1.0, 1.0);
        let learning = LearningParams {
            r: 0.05,
            beta: BETA_FIG,
        };
        let a = kernel_monte_carlo(0.8, &env, &learning, 2000, 11);
        let b = kernel_monte_carlo(0.8, &env, &learning, 2000, 11);
        assert_eq!(a.deltas, b.deltas);
    }
}
