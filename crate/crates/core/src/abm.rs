//! Finite-N stochastic simulation of the full market-choice model: softmax
//! venue choice, Gaussian limit orders, price setting from the round's order
//! averages, random pairing of valid orders, and the exponentially weighted
//! attraction update. Used both for the dynamics studies (metastability,
//! lifetimes) and as the ground-truth oracle for the analytic modules.

use crate::error::{Error, Result};
use crate::fokker_planck::binder_from_moments;
use crate::math;
use crate::model::{LearningParams, MarketSpec, OrderPriceModel};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GroupDef {
    pub p_buy: f64,
    pub size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    /// all attraction differences start at zero ("blank canvasses")
    Zero,
    /// attraction differences drawn from N(mu, sigma^2)
    Gaussian { mu: f64, sigma: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub markets: [MarketSpec; 2],
    pub prices: OrderPriceModel,
    pub learning: LearningParams,
    pub groups: Vec<GroupDef>,
    pub init: InitialCondition,
    pub seed: u64,
    pub rounds: usize,
    /// sampling stride (rounds) for the summary series
    pub stride: usize,
    /// rescaled times at which to store full per-agent snapshots
    pub snapshot_times: Vec<f64>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.prices.validate()?;
        let n: usize = self.groups.iter().map(|g| g.size).sum();
        if n < 2 {
            return Err(Error::InvalidParameter {
                name: "groups.size",
                value: n as f64,
                reason: "need at least two agents",
            });
        }
        if self.groups.iter().any(|g| !(0.0..=1.0).contains(&g.p_buy)) {
            return Err(Error::InvalidParameter {
                name: "groups.p_buy",
                value: f64::NAN,
                reason: "buying preference must lie in [0, 1]",
            });
        }
        if self.stride == 0 {
            return Err(Error::InvalidParameter {
                name: "stride",
                value: 0.0,
                reason: "stride must be positive",
            });
        }
        LearningParams::new(self.learning.r, self.learning.beta)?;
        Ok(())
    }

    pub fn n_agents(&self) -> usize {
        self.groups.iter().map(|g| g.size).sum()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Agent {
    pub attractions: [f64; 2],
    pub group: u32,
    pub p_buy: f64,
}

impl Agent {
    pub fn delta(&self) -> f64 {
        self.attractions[0] - self.attractions[1]
    }
}

/// Per-round aggregate outcome.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RoundOutcome {
    pub price: [Option<f64>; 2],
    pub submitted_buys: [usize; 2],
    pub submitted_sells: [usize; 2],
    pub valid_buys: [usize; 2],
    pub valid_sells: [usize; 2],
    pub trades: [usize; 2],
}

/// One row of the summary time series.
#[derive(Debug, Clone, Serialize)]
pub struct SeriesRow {
    /// rescaled time t = n r
    pub t: f64,
    pub binder: Vec<f64>,
    pub mean_delta: Vec<f64>,
    /// demand-to-supply ratio per market from this round's submitted orders
    /// (NaN when a side is empty)
    pub d: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct Snapshot {
    pub t: f64,
    /// per-group attraction differences, agents in stable index order
    pub deltas: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub series: Vec<SeriesRow>,
    pub snapshots: Vec<Snapshot>,
    pub max_score: f64,
}

pub struct Simulation {
    markets: [MarketSpec; 2],
    prices: OrderPriceModel,
    learning: LearningParams,
    agents: Vec<Agent>,
    n_groups: usize,
    rng: ChaCha8Rng,
    round: usize,
    // per-round scratch, reused across rounds
    choice: Vec<u8>,
    side: Vec<u8>,
    value: Vec<f64>,
    valid: [[Vec<u32>; 2]; 2],
    scores: Vec<f64>,
}

impl Simulation {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let n = config.n_agents();
        let mut agents = Vec::with_capacity(n);
        for (g, def) in config.groups.iter().enumerate() {
            for _ in 0..def.size {
                let delta0 = match config.init {
                    InitialCondition::Zero => 0.0,
                    InitialCondition::Gaussian { mu, sigma } => {
                        mu + sigma * math::standard_normal(&mut rng)
                    }
                };
                agents.push(Agent {
                    attractions: [0.5 * delta0, -0.5 * delta0],
                    group: g as u32,
                    p_buy: def.p_buy,
                });
            }
        }
        Ok(Self {
            markets: config.markets,
            prices: config.prices,
            learning: config.learning,
            agents,
            n_groups: config.groups.len(),
            rng,
            round: 0,
            choice: vec![0; n],
            side: vec![0; n],
            value: vec![0.0; n],
            valid: Default::default(),
            scores: vec![0.0; n],
        })
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    /// Scores assigned in the most recent round.
    pub fn last_scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn rescaled_time(&self) -> f64 {
        self.round as f64 * self.learning.r
    }

    /// Run one trading round: market choice, order submission, price
    /// setting, validity marking, random pairing, scoring and the
    /// attraction update.
    pub fn step(&mut self) -> RoundOutcome {
        let beta = self.learning.beta;
        let r = self.learning.r;
        let mut bid_sum = [0.0f64; 2];
        let mut bid_n = [0usize; 2];
        let mut ask_sum = [0.0f64; 2];
        let mut ask_n = [0usize; 2];
        for i in 0..self.agents.len() {
            let agent = &self.agents[i];
            let p_plus = math::logistic(beta * agent.delta());
            let m = usize::from(!(self.rng.gen::<f64>() < p_plus));
            let is_buy = self.rng.gen::<f64>() < agent.p_buy;
            let value = if is_buy {
                self.prices.mu_b + self.prices.sigma_b * math::standard_normal(&mut self.rng)
            } else {
                self.prices.mu_a + self.prices.sigma_a * math::standard_normal(&mut self.rng)
            };
            self.choice[i] = m as u8;
            self.side[i] = u8::from(!is_buy);
            self.value[i] = value;
            if is_buy {
                bid_sum[m] += value;
                bid_n[m] += 1;
            } else {
                ask_sum[m] += value;
                ask_n[m] += 1;
            }
        }
        // price per market from the averages of all submitted orders
        let mut price = [None; 2];
        for m in 0..2 {
            if bid_n[m] > 0 && ask_n[m] > 0 {
                let avg_b = bid_sum[m] / bid_n[m] as f64;
                let avg_a = ask_sum[m] / ask_n[m] as f64;
                price[m] = Some(avg_a + self.markets[m].theta * (avg_b - avg_a));
            }
        }
        // validity: bids below the price and asks above it cannot execute
        for lists in self.valid.iter_mut() {
            lists[0].clear();
            lists[1].clear();
        }
        let mut valid_counts = [[0usize; 2]; 2];
        for i in 0..self.agents.len() {
            let m = self.choice[i] as usize;
            let Some(pi) = price[m] else { continue };
            let side = self.side[i] as usize;
            let ok = if side == 0 {
                self.value[i] >= pi
            } else {
                self.value[i] <= pi
            };
            if ok {
                self.valid[m][side].push(i as u32);
                valid_counts[m][side] += 1;
            }
        }
        // random pairing of valid orders; surplus scores zero
        self.scores.iter_mut().for_each(|s| *s = 0.0);
        let mut trades = [0usize; 2];
        let mut max_in_round: f64 = 0.0;
        for m in 0..2 {
            let Some(pi) = price[m] else { continue };
            let (buyers, sellers) = {
                let [b, s] = &mut self.valid[m];
                (b, s)
            };
            buyers.shuffle(&mut self.rng);
            sellers.shuffle(&mut self.rng);
            let n_trades = buyers.len().min(sellers.len());
            trades[m] = n_trades;
            for k in 0..n_trades {
                let b = buyers[k] as usize;
                let s = sellers[k] as usize;
                self.scores[b] = self.value[b] - pi;
                self.scores[s] = pi - self.value[s];
                max_in_round = max_in_round.max(self.scores[b]).max(self.scores[s]);
            }
        }
        // attraction update: both attractions decay, the chosen market's
        // attraction additionally receives r * score
        for i in 0..self.agents.len() {
            let m = self.choice[i] as usize;
            let agent = &mut self.agents[i];
            agent.attractions[0] *= 1.0 - r;
            agent.attractions[1] *= 1.0 - r;
            agent.attractions[m] += r * self.scores[i];
        }
        self.round += 1;
        let mut submitted_buys = [0usize; 2];
        let mut submitted_sells = [0usize; 2];
        for i in 0..self.agents.len() {
            let m = self.choice[i] as usize;
            if self.side[i] == 0 {
                submitted_buys[m] += 1;
            } else {
                submitted_sells[m] += 1;
            }
        }
        let _ = max_in_round;
        RoundOutcome {
            price,
            submitted_buys,
            submitted_sells,
            valid_buys: [valid_counts[0][0], valid_counts[1][0]],
            valid_sells: [valid_counts[0][1], valid_counts[1][1]],
            trades,
        }
    }

    /// Attraction differences grouped by agent group, in index order.
    pub fn deltas_by_group(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); self.n_groups];
        for a in &self.agents {
            out[a.group as usize].push(a.delta());
        }
        out
    }

    fn series_row(&self, outcome: &RoundOutcome) -> SeriesRow {
        let groups = self.deltas_by_group();
        let binder = groups
            .iter()
            .map(|g| binder_of_samples(g).unwrap_or(f64::NAN))
            .collect();
        let mean_delta = groups
            .iter()
            .map(|g| g.iter().sum::<f64>() / g.len().max(1) as f64)
            .collect();
        let d = [0, 1].map(|m| {
            if outcome.submitted_sells[m] > 0 {
                outcome.submitted_buys[m] as f64 / outcome.submitted_sells[m] as f64
            } else {
                f64::NAN
            }
        });
        SeriesRow {
            t: self.rescaled_time(),
            binder,
            mean_delta,
            d,
        }
    }
}

/// Binder cumulant of a sample of attraction differences (raw moments).
pub fn binder_of_samples(deltas: &[f64]) -> Result<f64> {
    if deltas.len() < 2 {
        return Err(Error::DegenerateGroup);
    }
    let n = deltas.len() as f64;
    let m2 = deltas.iter().map(|d| d * d).sum::<f64>() / n;
    let m4 = deltas.iter().map(|d| d.powi(4)).sum::<f64>() / n;
    binder_from_moments(m2, m4)
}

/// Run a full simulation, sampling the Binder/order-parameter series every
/// `stride` rounds and storing per-agent snapshots at the requested times.
/// Deterministic for a given config and seed.
pub fn run_simulation(config: &SimConfig) -> Result<SimResult> {
    let mut sim = Simulation::new(config)?;
    let mut snapshot_rounds: Vec<usize> = config
        .snapshot_times
        .iter()
        .map(|&t| ((t / config.learning.r).round() as usize).max(1))
        .collect();
    snapshot_rounds.sort_unstable();
    snapshot_rounds.dedup();
    let mut series = Vec::new();
    let mut snapshots = Vec::new();
    let mut max_score: f64 = 0.0;
    let mut next_snapshot = 0usize;
    for n in 1..=config.rounds {
        let outcome = sim.step();
        max_score = sim
            .last_scores()
            .iter()
            .fold(max_score, |acc, s| acc.max(*s));
        if n % config.stride == 0 {
            series.push(sim.series_row(&outcome));
        }
        while next_snapshot < snapshot_rounds.len() && snapshot_rounds[next_snapshot] == n {
            snapshots.push(Snapshot {
                t: sim.rescaled_time(),
                deltas: sim.deltas_by_group(),
            });
            next_snapshot += 1;
        }
        // skip past any duplicate snapshot rounds
        while next_snapshot < snapshot_rounds.len() && snapshot_rounds[next_snapshot] < n {
            next_snapshot += 1;
        }
    }
    Ok(SimResult {
        series,
        snapshots,
        max_score,
    })
}

/// Per-group Binder cumulants of a snapshot sequence.
pub fn binder_series(snapshots: &[Snapshot]) -> Vec<(f64, Vec<f64>)> {
    snapshots
        .iter()
        .map(|s| {
            (
                s.t,
                s.deltas
                    .iter()
                    .map(|g| binder_of_samples(g).unwrap_or(f64::NAN))
                    .collect(),
            )
        })
        .collect()
}

/// Theory Binder values used to detect the metastable plateau and the final
/// state: `strong` holds the per-group strongly fragmented predictions,
/// `weak` one entry per candidate final state (per-group values).
#[derive(Debug, Clone)]
pub struct BinderTargets {
    pub strong: Vec<f64>,
    pub weak: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
pub struct LifetimeRule {
    /// half-width of the acceptance band around a theory value
    pub band: f64,
    /// dwell time (rescaled units) a band condition must persist
    pub dwell: f64,
}

impl Default for LifetimeRule {
    fn default() -> Self {
        Self {
            band: 0.05,
            dwell: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LifetimeEstimate {
    /// whether the metastable (strongly fragmented) plateau was reached
    pub entered: bool,
    /// departure time (rescaled); horizon when censored, 0 when never entered
    pub time: f64,
    /// true when the run ended while still on the plateau
    pub censored: bool,
}

/// First time the series leaves the strongly fragmented band and settles in
/// a weakly/partially fragmented band, with dwell filtering against
/// fluctuation-triggered exits.
pub fn lifetime_estimate(
    series: &[SeriesRow],
    targets: &BinderTargets,
    rule: LifetimeRule,
) -> LifetimeEstimate {
    let in_strong = |row: &SeriesRow| {
        row.binder
            .iter()
            .zip(&targets.strong)
            .all(|(b, s)| (b - s).abs() <= rule.band)
    };
    let in_weak = |row: &SeriesRow| {
        targets.weak.iter().any(|w| {
            row.binder.iter().zip(w).enumerate().any(|(g, (b, wv))| {
                (b - wv).abs() <= rule.band && (b - targets.strong[g]).abs() > rule.band
            })
        })
    };
    let dwell_ok = |start: usize, pred: &dyn Fn(&SeriesRow) -> bool| {
        let t0 = series[start].t;
        series[start..]
            .iter()
            .take_while(|row| row.t <= t0 + rule.dwell)
            .all(|row| pred(row))
    };
    let mut entry = None;
    for i in 0..series.len() {
        if in_strong(&series[i]) && dwell_ok(i, &in_strong) {
            entry = Some(i);
            break;
        }
    }
    let Some(entry_idx) = entry else {
        return LifetimeEstimate {
            entered: false,
            time: 0.0,
            censored: false,
        };
    };
    for i in entry_idx + 1..series.len() {
        if in_weak(&series[i]) && dwell_ok(i, &in_weak) {
            return LifetimeEstimate {
                entered: true,
                time: series[i].t,
                censored: false,
            };
        }
    }
    LifetimeEstimate {
        entered: true,
        time: series.last().map(|r| r.t).unwrap_or(0.0),
        censored: true,
    }
}

/// Population-averaged centered autocorrelation of single-agent attraction
/// differences, C(lag) = < (Delta_i(t0) - mean)(Delta_i(t0+lag) - mean) >,
/// measured from the snapshot at `origin` onward. Agents are pooled across
/// groups.
pub fn attraction_autocorrelation(snapshots: &[Snapshot], origin: usize) -> Vec<(f64, f64)> {
    if origin >= snapshots.len() {
        return Vec::new();
    }
    let pool = |s: &Snapshot| -> Vec<f64> { s.deltas.iter().flatten().copied().collect() };
    let base = pool(&snapshots[origin]);
    let n = base.len() as f64;
    let base_mean = base.iter().sum::<f64>() / n;
    let t0 = snapshots[origin].t;
    snapshots[origin..]
        .iter()
        .map(|s| {
            let now = pool(s);
            let now_mean = now.iter().sum::<f64>() / n;
            let c = base
                .iter()
                .zip(&now)
                .map(|(a, b)| (a - base_mean) * (b - now_mean))
                .sum::<f64>()
                / n;
            (s.t - t0, c)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::symmetric_markets;
    use approx::assert_relative_eq;

    fn two_agent_config() -> SimConfig {
        SimConfig {
            markets: symmetric_markets(0.3).unwrap(),
            prices: OrderPriceModel::deterministic(),
            learning: LearningParams { r: 0.1, beta: 2.0 },
            groups: vec![GroupDef { p_buy: 1.0, size: 1 }, GroupDef { p_buy: 0.0, size: 1 }],
            init: InitialCondition::Zero,
            seed: 1,
            rounds: 1,
            stride: 1,
            snapshot_times: vec![],
        }
    }

    #[test]
    fn deterministic_pair_scores() {
        // one buyer and one seller with deterministic orders: whenever both
        // land at the same market, scores are (1 - theta_m, theta_m)
        let config = two_agent_config();
        let mut sim = Simulation::new(&config).unwrap();
        let mut seen_market = [false; 2];
        for _ in 0..200 {
            let outcome = sim.step();
            for m in 0..2 {
                if outcome.trades[m] == 1 {
                    seen_market[m] = true;
                    let theta = config.markets[m].theta;
                    assert_relative_eq!(sim.last_scores()[0], 1.0 - theta, epsilon = 1e-12);
                    assert_relative_eq!(sim.last_scores()[1], theta, epsilon = 1e-12);
                }
            }
            if outcome.trades == [0, 0] {
                assert!(sim.last_scores().iter().all(|&s| s == 0.0));
            }
        }
        assert!(seen_market[0] || seen_market[1]);
    }

    #[test]
    fn excess_buyers_score_zero() {
        // two strict buyers, one strict seller, deterministic orders and a
        // single effective market (both thetas equal)
        let config = SimConfig {
            markets: [MarketSpec { theta: 0.3 }, MarketSpec { theta: 0.3 }],
            prices: OrderPriceModel::deterministic(),
            learning: LearningParams { r: 0.1, beta: 0.0 },
            groups: vec![GroupDef { p_buy: 1.0, size: 2 }, GroupDef { p_buy: 0.0, size: 1 }],
            init: InitialCondition::Zero,
            seed: 3,
            rounds: 1,
            stride: 1,
            snapshot_times: vec![],
        };
        let mut sim = Simulation::new(&config).unwrap();
        for _ in 0..100 {
            let outcome = sim.step();
            let total_trades = outcome.trades[0] + outcome.trades[1];
            let scored = sim.last_scores().iter().filter(|&&s| s != 0.0).count();
            assert_eq!(scored, 2 * total_trades);
            for m in 0..2 {
                assert_eq!(
                    outcome.trades[m],
                    outcome.valid_buys[m].min(outcome.valid_sells[m])
                );
            }
        }
    }

    #[test]
    fn seed_determinism() {
        let config = SimConfig {
            markets: symmetric_markets(0.3).unwrap(),
            prices: OrderPriceModel::default(),
            learning: LearningParams { r: 0.05, beta: 5.0 },
            groups: vec![
                GroupDef { p_buy: 0.8, size: 25 },
                GroupDef { p_buy: 0.2, size: 25 },
            ],
            init: InitialCondition::Gaussian { mu: 0.1, sigma: 0.2 },
            seed: 99,
            rounds: 400,
            stride: 20,
            snapshot_times: vec![1.0],
        };
        let a = run_simulation(&config).unwrap();
        let b = run_simulation(&config).unwrap();
        assert_eq!(a.series.len(), b.series.len());
        for (x, y) in a.series.iter().zip(&b.series) {
            assert_eq!(x.t, y.t);
            assert_eq!(x.binder, y.binder);
            assert_eq!(x.mean_delta, y.mean_delta);
        }
        assert_eq!(a.snapshots[0].deltas, b.snapshots[0].deltas);
    }

    #[test]
    fn attraction_boundedness() {
        let config = SimConfig {
            markets: symmetric_markets(0.3).unwrap(),
            prices: OrderPriceModel::default(),
            learning: LearningParams { r: 0.1, beta: 8.0 },
            groups: vec![
                GroupDef { p_buy: 0.8, size: 20 },
                GroupDef { p_buy: 0.2, size: 20 },
            ],
            init: InitialCondition::Zero,
            seed: 5,
            rounds: 2000,
            stride: 2000,
            snapshot_times: vec![],
        };
        let mut sim = Simulation::new(&config).unwrap();
        let mut max_score: f64 = 0.0;
        for _ in 0..config.rounds {
            sim.step();
            max_score = sim
                .last_scores()
                .iter()
                .fold(max_score, |acc, s| acc.max(*s));
        }
        for agent in sim.agents() {
            assert!(agent.attractions[0].abs() <= max_score + 1e-12);
            assert!(agent.attractions[1].abs() <= max_score + 1e-12);
        }
    }

    #[test]
    fn translation_invariance_of_choice() {
        // choice probabilities depend on attractions only through the
        // difference; a common shift leaves them unchanged
        let beta = 3.7;
        let dyadic = [(0.25f64, -0.5f64), (1.5, 0.75), (-0.125, 2.0)];
        for (a1, a2) in dyadic {
            let shift = 1024.0;
            let before = math::logistic(beta * (a1 - a2));
            let after = math::logistic(beta * ((a1 + shift) - (a2 + shift)));
            assert_eq!(before, after);
        }
    }

    #[test]
    fn binder_of_identical_deltas_is_two_thirds() {
        let b = binder_of_samples(&[0.4; 50]).unwrap();
        assert_relative_eq!(b, 2.0 / 3.0, epsilon = 1e-12);
        // large-N Gaussian sample: near zero
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sample: Vec<f64> = (0..200_000)
            .map(|_| 0.3 * math::standard_normal(&mut rng))
            .collect();
        let b = binder_of_samples(&sample).unwrap();
        // estimator sd is ~sqrt(24/N) ~ 0.011 at this sample size
        assert!(b.abs() < 0.03, "gaussian binder {b}");
    }

    #[test]
    fn random_choice_market_counts_balance() {
        // beta = 0: binomial split across markets
        let config = SimConfig {
            markets: symmetric_markets(0.5).unwrap(),
            prices: OrderPriceModel::default(),
            learning: LearningParams { r: 0.05, beta: 0.0 },
            groups: vec![GroupDef { p_buy: 0.5, size: 400 }],
            init: InitialCondition::Zero,
            seed: 11,
            rounds: 200,
            stride: 1,
            snapshot_times: vec![],
        };
        let mut sim = Simulation::new(&config).unwrap();
        let mut mean_at_one = 0.0;
        for _ in 0..config.rounds {
            let o = sim.step();
            mean_at_one += (o.submitted_buys[0] + o.submitted_sells[0]) as f64;
        }
        mean_at_one /= config.rounds as f64;
        // 3-sigma band around N/2 for a binomial(400, 1/2) averaged 200x
        assert!((mean_at_one - 200.0).abs() < 3.0 * 10.0 / (200.0f64).sqrt());
    }

    #[test]
    fn lifetime_estimator_basic_shapes() {
        let mk = |t: f64, b0: f64, b1: f64| SeriesRow {
            t,
            binder: vec![b0, b1],
            mean_delta: vec![0.0, 0.0],
            d: [1.0, 1.0],
        };
        let targets = BinderTargets {
            strong: vec![0.6, 0.6],
            weak: vec![vec![0.3, 0.45], vec![0.45, 0.3]],
        };
        let rule = LifetimeRule {
            band: 0.05,
            dwell: 2.0,
        };
        // plateau then departure of group 0 into the weak band at t = 30
        let mut series = Vec::new();
        for i in 0..=60 {
            let t = i as f64;
            if t < 30.0 {
                series.push(mk(t, 0.61, 0.59));
            } else {
                series.push(mk(t, 0.31, 0.58));
            }
        }
        let est = lifetime_estimate(&series, &targets, rule);
        assert!(est.entered);
        assert!(!est.censored);
        assert_relative_eq!(est.time, 30.0);
        // never entering the plateau
        let flat: Vec<_> = (0..40).map(|i| mk(i as f64, 0.2, 0.2)).collect();
        let est = lifetime_estimate(&flat, &targets, rule);
        assert!(!est.entered);
        // censored: stays on the plateau
        let stay: Vec<_> = (0..40).map(|i| mk(i as f64, 0.6, 0.6)).collect();
        let est = lifetime_estimate(&stay, &targets, rule);
        assert!(est.entered && est.censored);
    }

    #[test]
    fn autocorrelation_starts_at_variance() {
        let snap = Snapshot {
            t: 5.0,
            deltas: vec![vec![0.1, 0.5, -0.3], vec![0.2, -0.4]],
        };
        let c = attraction_autocorrelation(&[snap.clone(), snap.clone()], 0);
        let pooled = [0.1, 0.5, -0.3, 0.2, -0.4];
        let mean = pooled.iter().sum::<f64>() / 5.0;
        let var = pooled.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 5.0;
        assert_relative_eq!(c[0].1, var, epsilon = 1e-12);
        assert_relative_eq!(c[1].1, var, epsilon = 1e-12);
        assert_eq!(c[0].0, 0.0);
    }
}
