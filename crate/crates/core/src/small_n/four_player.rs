//! Two buyers and two sellers (or two symmetric probabilistic groups) across
//! two symmetrically biased markets: the smallest system where fragmented
//! states exist.
//!
//! Each agent carries an attraction difference Delta^{g,i}; the r -> 0 flow
//! replaces every other agent's market indicator with its softmax
//! expectation. The expected score at a market keeps the crowding factor 1/2
//! when both same-group agents meet there and only one counterparty shows up.

use super::{group_score, FixedPointClass, Stability, DEDUP_TOL};
use crate::math;
use crate::model::MARKET_SIGNS;
use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

/// Attraction differences [buyer 1, buyer 2, seller 1, seller 2].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourPlayerState {
    pub delta: [f64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourPlayerFixedPoint {
    pub state: FourPlayerState,
    pub stability: Stability,
    pub class: FixedPointClass,
}

/// Result of a multi-start search, keeping track of seeds that failed to
/// converge anywhere.
#[derive(Debug, Clone)]
pub struct FourPlayerSolve {
    pub fixed_points: Vec<FourPlayerFixedPoint>,
    pub failed_seeds: usize,
}

/// Intra-group attraction split beyond which a group counts as fragmented.
pub const SPLIT_TOL: f64 = 0.1;

/// Expected per-round score of every agent at both markets,
/// indexed [agent][market].
pub fn expected_scores(
    state: &FourPlayerState,
    beta: f64,
    theta: f64,
    p_buy: f64,
) -> [[f64; 2]; 4] {
    let thetas = [theta, 1.0 - theta];
    let mut sigma = [[0.0; 2]; 4];
    for (a, d) in state.delta.iter().enumerate() {
        for m in 0..2 {
            sigma[a][m] = math::logistic(beta * MARKET_SIGNS[m] * d);
        }
    }
    let mut scores = [[0.0; 2]; 4];
    for a in 0..4 {
        let g = a / 2;
        let partner = a ^ 1;
        let (o1, o2) = if g == 0 { (2, 3) } else { (0, 1) };
        let (p_own, p_other) = if g == 0 {
            (p_buy, 1.0 - p_buy)
        } else {
            (1.0 - p_buy, p_buy)
        };
        for m in 0..2 {
            let sig_m = group_score(thetas[m], p_own, p_other);
            let ps = sigma[partner][m];
            let (q1, q2) = (sigma[o1][m], sigma[o2][m]);
            let crowded = 0.5 * ps * (q1 + q2);
            let alone = (1.0 - ps) * (q1 + q2 - q1 * q2);
            scores[a][m] = sigma[a][m] * sig_m * (crowded + alone);
        }
    }
    scores
}

/// Right-hand side of d Delta^{g,i}/dt = -Delta^{g,i} + sum_m m S_m^{g,i}.
pub fn four_player_flow(state: &FourPlayerState, beta: f64, theta: f64, p_buy: f64) -> [f64; 4] {
    let scores = expected_scores(state, beta, theta, p_buy);
    let mut out = [0.0; 4];
    for a in 0..4 {
        out[a] = -state.delta[a] + scores[a][0] - scores[a][1];
    }
    out
}

/// Expected per-round return of each agent (summed over markets).
pub fn four_player_returns(
    state: &FourPlayerState,
    beta: f64,
    theta: f64,
    p_buy: f64,
) -> [f64; 4] {
    let scores = expected_scores(state, beta, theta, p_buy);
    let mut out = [0.0; 4];
    for a in 0..4 {
        out[a] = scores[a][0] + scores[a][1];
    }
    out
}

fn classify(state: &FourPlayerState) -> FixedPointClass {
    let split0 = (state.delta[0] - state.delta[1]).abs() > SPLIT_TOL;
    let split1 = (state.delta[2] - state.delta[3]).abs() > SPLIT_TOL;
    match (split0, split1) {
        (true, true) => FixedPointClass::Fragmented,
        (true, false) | (false, true) => FixedPointClass::PartiallyFragmented,
        (false, false) => {
            let all_pos = state.delta.iter().all(|&d| d > 1e-6);
            let all_neg = state.delta.iter().all(|&d| d < -1e-6);
            if all_pos || all_neg {
                FixedPointClass::Coordinated
            } else {
                FixedPointClass::Uncoordinated
            }
        }
    }
}

fn stability_of(state: &FourPlayerState, beta: f64, theta: f64, p_buy: f64) -> Stability {
    // forward-difference Jacobian of the flow
    let h = 1e-7;
    let base = four_player_flow(state, beta, theta, p_buy);
    let mut jac = Matrix4::zeros();
    for j in 0..4 {
        let mut shifted = *state;
        shifted.delta[j] += h;
        let fj = four_player_flow(&shifted, beta, theta, p_buy);
        for i in 0..4 {
            jac[(i, j)] = (fj[i] - base[i]) / h;
        }
    }
    let max_re = jac
        .complex_eigenvalues()
        .iter()
        .map(|e| e.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Stability::from_max_real(max_re)
}

/// All fixed points from a 5^4 seed lattice over [-1, 1]^4.
pub fn four_player_fixed_points(beta: f64, theta: f64, p_buy: f64) -> FourPlayerSolve {
    let f = |v: &[f64]| {
        let state = FourPlayerState {
            delta: [v[0], v[1], v[2], v[3]],
        };
        Some(four_player_flow(&state, beta, theta, p_buy).to_vec())
    };
    let levels = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let mut fixed_points: Vec<FourPlayerFixedPoint> = Vec::new();
    let mut failed = 0usize;
    for &a in &levels {
        for &b in &levels {
            for &c in &levels {
                for &d in &levels {
                    let Some(root) = math::newton(&f, &[a, b, c, d], 1e-12, 0.25, 300) else {
                        failed += 1;
                        continue;
                    };
                    let dup = fixed_points.iter().any(|fp| {
                        fp.state
                            .delta
                            .iter()
                            .zip(root.iter())
                            .map(|(x, y)| (x - y).abs())
                            .fold(0.0f64, f64::max)
                            < DEDUP_TOL
                    });
                    if dup {
                        continue;
                    }
                    let state = FourPlayerState {
                        delta: [root[0], root[1], root[2], root[3]],
                    };
                    fixed_points.push(FourPlayerFixedPoint {
                        stability: stability_of(&state, beta, theta, p_buy),
                        class: classify(&state),
                        state,
                    });
                }
            }
        }
    }
    fixed_points.sort_by(|x, y| x.state.delta[0].total_cmp(&y.state.delta[0]));
    FourPlayerSolve {
        fixed_points,
        failed_seeds: failed,
    }
}

/// Existence predicates used for the threshold curves.
fn has_class(solve: &FourPlayerSolve, class: FixedPointClass, require_stable: bool) -> bool {
    solve
        .fixed_points
        .iter()
        .any(|fp| fp.class == class && (!require_stable || fp.stability.is_stable()))
}

fn bisect_onset<P: Fn(f64) -> bool>(pred: P, beta_lo: f64, beta_max: f64, tol: f64) -> Option<f64> {
    let mut lo = beta_lo;
    let mut hi = lo.max(2.0);
    if pred(lo) {
        return Some(lo);
    }
    while !pred(hi) {
        lo = hi;
        hi *= 1.4;
        if hi > beta_max {
            return None;
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Critical beta values at one parameter point of a sweep.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ThresholdPoint {
    pub param: f64,
    /// onset of stable coordinated fixed points
    pub coordination: Option<f64>,
    /// onset of stable fragmented fixed points
    pub fragmentation: Option<f64>,
    /// onset of (unstable) partially fragmented fixed points
    pub partial: Option<f64>,
}

pub const THRESHOLD_BETA_MAX: f64 = 120.0;

/// Threshold curves over a parameter sweep. `params` are either market
/// biases (with fixed `p_buy`) or buying preferences (with fixed `theta`),
/// selected by `sweep_theta`.
pub fn four_player_thresholds(
    params: &[f64],
    fixed: f64,
    sweep_theta: bool,
    tol: f64,
) -> Vec<ThresholdPoint> {
    use rayon::prelude::*;
    params
        .par_iter()
        .map(|&param| {
            let (theta, p_buy) = if sweep_theta {
                (param, fixed)
            } else {
                (fixed, param)
            };
            let solve_at = |beta: f64| four_player_fixed_points(beta, theta, p_buy);
            ThresholdPoint {
                param,
                coordination: bisect_onset(
                    |b| has_class(&solve_at(b), FixedPointClass::Coordinated, true),
                    1.0,
                    THRESHOLD_BETA_MAX,
                    tol,
                ),
                fragmentation: bisect_onset(
                    |b| has_class(&solve_at(b), FixedPointClass::Fragmented, true),
                    1.0,
                    THRESHOLD_BETA_MAX,
                    tol,
                ),
                partial: bisect_onset(
                    |b| has_class(&solve_at(b), FixedPointClass::PartiallyFragmented, false),
                    1.0,
                    THRESHOLD_BETA_MAX,
                    tol,
                ),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn symmetric_state_is_fixed_at_unbiased_markets() {
        let zero = FourPlayerState { delta: [0.0; 4] };
        let flow = four_player_flow(&zero, 3.0, 0.5, 1.0);
        assert!(flow.iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn group_symmetry_is_preserved_by_flow() {
        let state = FourPlayerState {
            delta: [0.3, 0.3, -0.2, -0.2],
        };
        let flow = four_player_flow(&state, 4.0, 0.3, 1.0);
        assert_relative_eq!(flow[0], flow[1], max_relative = 1e-14);
        assert_relative_eq!(flow[2], flow[3], max_relative = 1e-14);
    }

    #[test]
    fn low_beta_single_uncoordinated_point() {
        let solve = four_player_fixed_points(2.0, 0.3, 1.0);
        assert_eq!(solve.fixed_points.len(), 1);
        let fp = &solve.fixed_points[0];
        assert_eq!(fp.class, FixedPointClass::Uncoordinated);
        assert!(fp.stability.is_stable());
    }

    #[test]
    fn fragmented_structure_above_threshold() {
        // well above both thresholds at theta = 0.3
        let solve = four_player_fixed_points(14.0, 0.3, 1.0);
        let stable_frag: Vec<_> = solve
            .fixed_points
            .iter()
            .filter(|f| f.class == FixedPointClass::Fragmented && f.stability.is_stable())
            .collect();
        assert_eq!(stable_frag.len(), 4);
        let stable_coord: Vec<_> = solve
            .fixed_points
            .iter()
            .filter(|f| f.class == FixedPointClass::Coordinated && f.stability.is_stable())
            .collect();
        assert_eq!(stable_coord.len(), 2);
        // fragmented states pair one buyer and one seller per market
        for fp in &stable_frag {
            assert!(fp.state.delta[0] * fp.state.delta[1] < 0.0);
            assert!(fp.state.delta[2] * fp.state.delta[3] < 0.0);
        }
    }

    #[test]
    fn fixed_points_zero_the_flow() {
        let solve = four_player_fixed_points(12.0, 0.3, 1.0);
        assert!(!solve.fixed_points.is_empty());
        for fp in &solve.fixed_points {
            let flow = four_player_flow(&fp.state, 12.0, 0.3, 1.0);
            let res = flow.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(res < 1e-8, "flow residual {res}");
        }
    }

    #[test]
    fn partially_fragmented_points_are_unstable() {
        for beta in [16.0, 25.0, 40.0] {
            let solve = four_player_fixed_points(beta, 0.3, 1.0);
            for fp in &solve.fixed_points {
                if fp.class == FixedPointClass::PartiallyFragmented {
                    assert!(
                        !fp.stability.is_stable(),
                        "partially fragmented point stable at beta={beta}"
                    );
                }
            }
        }
    }

    #[test]
    fn market_relabel_symmetry() {
        let solve = four_player_fixed_points(12.0, 0.3, 1.0);
        let mirrored = four_player_fixed_points(12.0, 0.7, 1.0);
        assert_eq!(solve.fixed_points.len(), mirrored.fixed_points.len());
        for fp in &solve.fixed_points {
            let found = mirrored.fixed_points.iter().any(|m| {
                m.state
                    .delta
                    .iter()
                    .zip(fp.state.delta.iter())
                    .all(|(a, b)| (a + b).abs() < 1e-7)
            });
            assert!(found);
        }
    }

    #[test]
    fn large_beta_returns_coincide() {
        let solve = four_player_fixed_points(100.0, 0.3, 1.0);
        let mean = |fp: &FourPlayerFixedPoint| {
            four_player_returns(&fp.state, 100.0, 0.3, 1.0)
                .iter()
                .sum::<f64>()
                / 4.0
        };
        let coord: Vec<f64> = solve
            .fixed_points
            .iter()
            .filter(|f| f.class == FixedPointClass::Coordinated && f.stability.is_stable())
            .map(mean)
            .collect();
        let frag: Vec<f64> = solve
            .fixed_points
            .iter()
            .filter(|f| f.class == FixedPointClass::Fragmented && f.stability.is_stable())
            .map(mean)
            .collect();
        assert!(!coord.is_empty() && !frag.is_empty());
        for c in &coord {
            for f in &frag {
                assert_relative_eq!(c, f, epsilon = 1e-3);
            }
        }
    }
}
