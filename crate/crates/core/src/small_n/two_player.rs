//! One buyer against one seller (or a symmetric probabilistic-role pair)
//! choosing between two symmetrically biased markets.
//!
//! In the averaged variables xi = (Delta^1 + Delta^{-1})/2 and
//! rho = (Delta^1 - Delta^{-1})/2 the r -> 0 dynamics reads
//!
//!   d xi /dt = -xi  + (F/2) sinh(beta xi) / (cosh(beta xi) + cosh(beta rho))
//!   d rho/dt = -rho + (G/2) cosh(beta xi) / (cosh(beta xi) + cosh(beta rho))
//!
//! with F = p^2 + (1-p)^2 and G = (1 - 2 theta)(p^2 - (1-p)^2); strict roles
//! are recovered at p = 1.

use super::{role_factors, FixedPointClass, Stability, DEDUP_TOL};
use crate::math;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPlayerState {
    pub xi: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPlayerFixedPoint {
    pub state: TwoPlayerState,
    pub stability: Stability,
    pub class: FixedPointClass,
}

/// Right-hand sides of the (xi, rho) flow.
pub fn two_player_flow(state: TwoPlayerState, beta: f64, theta: f64, p_buy: f64) -> (f64, f64) {
    let (trade, role) = role_factors(p_buy);
    let g = (1.0 - 2.0 * theta) * role;
    let denom = (beta * state.xi).cosh() + (beta * state.rho).cosh();
    let d_xi = -state.xi + 0.5 * trade * (beta * state.xi).sinh() / denom;
    let d_rho = -state.rho + 0.5 * g * (beta * state.xi).cosh() / denom;
    (d_xi, d_rho)
}

/// Jacobian of the flow at `state`.
fn flow_jacobian(state: TwoPlayerState, beta: f64, theta: f64, p_buy: f64) -> [[f64; 2]; 2] {
    let (trade, role) = role_factors(p_buy);
    let g = (1.0 - 2.0 * theta) * role;
    let cx = (beta * state.xi).cosh();
    let sx = (beta * state.xi).sinh();
    let cr = (beta * state.rho).cosh();
    let sr = (beta * state.rho).sinh();
    let denom = cx + cr;
    let d2 = denom * denom;
    [
        [
            -1.0 + 0.5 * trade * beta * (cx * denom - sx * sx) / d2,
            -0.5 * trade * beta * sx * sr / d2,
        ],
        [
            0.5 * g * beta * sx * cr / d2,
            -1.0 - 0.5 * g * beta * cx * sr / d2,
        ],
    ]
}

fn classify(state: TwoPlayerState) -> FixedPointClass {
    if state.xi.abs() > 1e-6 {
        FixedPointClass::Coordinated
    } else {
        FixedPointClass::Uncoordinated
    }
}

/// All fixed points of the two-player flow, found by damped Newton from a
/// 9 x 9 seed lattice over [-1, 1]^2 and deduplicated at 1e-8.
pub fn two_player_fixed_points(beta: f64, theta: f64, p_buy: f64) -> Vec<TwoPlayerFixedPoint> {
    let f = |v: &[f64]| {
        let (dx, dr) = two_player_flow(
            TwoPlayerState {
                xi: v[0],
                rho: v[1],
            },
            beta,
            theta,
            p_buy,
        );
        Some(vec![dx, dr])
    };
    let mut found: Vec<TwoPlayerFixedPoint> = Vec::new();
    for i in 0..9 {
        for j in 0..9 {
            let seed = [-1.0 + 0.25 * i as f64, -1.0 + 0.25 * j as f64];
            let Some(root) = math::newton(&f, &seed, 1e-12, 0.25, 200) else {
                continue;
            };
            if found.iter().any(|fp| {
                (fp.state.xi - root[0]).abs().max((fp.state.rho - root[1]).abs()) < DEDUP_TOL
            }) {
                continue;
            }
            let state = TwoPlayerState {
                xi: root[0],
                rho: root[1],
            };
            let jac = flow_jacobian(state, beta, theta, p_buy);
            let max_re = max_real_eigenvalue_2x2(jac);
            found.push(TwoPlayerFixedPoint {
                state,
                stability: Stability::from_max_real(max_re),
                class: classify(state),
            });
        }
    }
    found.sort_by(|a, b| a.state.xi.total_cmp(&b.state.xi));
    found
}

fn max_real_eigenvalue_2x2(j: [[f64; 2]; 2]) -> f64 {
    let tr = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let disc = tr * tr - 4.0 * det;
    if disc >= 0.0 {
        0.5 * (tr + disc.sqrt())
    } else {
        0.5 * tr
    }
}

/// rho component of the uncoordinated fixed point (xi* = 0):
/// rho* = (G/2) / (1 + cosh(beta rho*)).
pub fn uncoordinated_rho(beta: f64, theta: f64, p_buy: f64) -> f64 {
    let (_, role) = role_factors(p_buy);
    let g = (1.0 - 2.0 * theta) * role;
    if g == 0.0 {
        return 0.0;
    }
    let h = |rho: f64| rho - 0.5 * g / (1.0 + (beta * rho).cosh());
    let (lo, hi) = if g > 0.0 { (0.0, 0.5 * g) } else { (0.5 * g, 0.0) };
    math::bisect(&h, lo, hi, 100)
}

/// Linear stability of the uncoordinated fixed point:
/// (beta/2) (p^2 + (1-p)^2) / (1 + cosh(beta rho*)) <= 1.
pub fn two_player_stability(beta: f64, theta: f64, p_buy: f64, rho_star: f64) -> bool {
    let _ = theta;
    let (trade, _) = role_factors(p_buy);
    0.5 * beta * trade / (1.0 + (beta * rho_star).cosh()) <= 1.0
}

/// Search ceiling for the coordination threshold.
pub const BETA_MAX: f64 = 1e3;

/// Critical intensity of choice where the uncoordinated fixed point loses
/// stability, located by bisection to absolute tolerance 1e-6. Returns
/// +infinity if the fixed point stays stable up to [`BETA_MAX`].
pub fn coordination_threshold(theta: f64, p_buy: f64) -> f64 {
    let unstable = |beta: f64| {
        let rho = uncoordinated_rho(beta, theta, p_buy);
        !two_player_stability(beta, theta, p_buy, rho)
    };
    // expanding scan for a bracket
    let mut lo = 1e-6;
    let mut hi = 4.0;
    while !unstable(hi) {
        lo = hi;
        hi *= 1.5;
        if hi > BETA_MAX {
            return f64::INFINITY;
        }
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if unstable(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Per-agent expected returns (buyer-side agent, seller-side agent) at
/// attraction differences delta = (Delta^1, Delta^{-1}).
pub fn two_player_returns(
    delta: (f64, f64),
    beta: f64,
    theta: f64,
    p_buy: f64,
) -> (f64, f64) {
    let thetas = [theta, 1.0 - theta];
    let p1 = p_buy;
    let p2 = 1.0 - p_buy;
    let mut r = [0.0; 2];
    for (m, theta_m) in thetas.iter().enumerate() {
        let sgn = crate::model::MARKET_SIGNS[m];
        let both_here = math::logistic(beta * sgn * delta.0) * math::logistic(beta * sgn * delta.1);
        r[0] += both_here * super::group_score(*theta_m, p1, p2);
        r[1] += both_here * super::group_score(*theta_m, p2, p1);
    }
    (r[0], r[1])
}

/// Integrate the flow from `start` for a rescaled-time span, tolerance 1e-9.
pub fn integrate_flow(
    start: TwoPlayerState,
    beta: f64,
    theta: f64,
    p_buy: f64,
    t_end: f64,
) -> TwoPlayerState {
    let rhs = |_t: f64, y: &[f64]| {
        let (dx, dr) = two_player_flow(
            TwoPlayerState {
                xi: y[0],
                rho: y[1],
            },
            beta,
            theta,
            p_buy,
        );
        vec![dx, dr]
    };
    let out = math::ode_rk45(&rhs, &[start.xi, start.rho], 0.0, t_end, 1e-9);
    TwoPlayerState {
        xi: out[0],
        rho: out[1],
    }
}
