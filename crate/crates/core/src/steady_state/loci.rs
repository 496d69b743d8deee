//! Finite-r self-consistency loci in the market order-parameter plane.
//!
//! For a given (beta, r) the map D -> D' is evaluated on a log-spaced grid
//! over (D_1, D_-1); the zero contours of ln D'_m - ln D_m are the two loci
//! whose intersections are the self-consistent steady states.

use super::{
    average_return_from_grids, order_param_map, GroupMixture, PopulationModel, SolverOrigin,
    SteadyState,
};
use crate::error::{Error, Result};
use crate::fokker_planck::{
    classify_state, free_energy, stationary_from_profile, Fragmentation, GridSpec, TradingEnv,
};
use crate::math;
use crate::model::MARKET_SIGNS;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LociConfig {
    /// order-parameter window, log-spaced
    pub d_lo: f64,
    pub d_hi: f64,
    /// grid nodes per axis
    pub resolution: usize,
    /// attraction-difference grid for the stationary distributions
    pub grid: GridSpec,
}

impl Default for LociConfig {
    fn default() -> Self {
        Self {
            d_lo: 1e-2,
            d_hi: 1e2,
            resolution: 200,
            grid: GridSpec::default(),
        }
    }
}

impl LociConfig {
    pub fn windowed(d_lo: f64, d_hi: f64, resolution: usize) -> Self {
        Self {
            d_lo,
            d_hi,
            resolution,
            ..Self::default()
        }
    }
}

/// One contour segment in (D_1, D_-1) coordinates.
pub type Segment = [[f64; 2]; 2];

#[derive(Debug, Clone)]
pub struct LociResult {
    /// log-D axis nodes (both axes share it)
    pub axis: Vec<f64>,
    /// residuals ln D'_m - ln D_m at the grid nodes, row-major [i * n + j]
    /// with i indexing D_1 and j indexing D_-1; NaN where masked
    pub residual: [Vec<f64>; 2],
    pub segments: [Vec<Segment>; 2],
    pub intersections: Vec<SteadyState>,
    /// grid cells where the map could not be evaluated
    pub masked: usize,
}

/// Precomputed per-group data making the map evaluation cheap: everything
/// except the execution probabilities is independent of D.
struct GroupBasis {
    p_buy: f64,
    weight: f64,
    /// softmax factors per market over the grid
    sig: [Vec<f64>; 2],
    /// drift basis per [side][market]: M1 = sum T u - Delta
    u: [[Vec<f64>; 2]; 2],
    /// diffusion basis per [side][market]: M2 = Delta^2 + sum T v
    v: [[Vec<f64>; 2]; 2],
}

struct MapEvaluator {
    grid: Vec<f64>,
    q_buy: [f64; 2],
    q_sell: [f64; 2],
    groups: Vec<GroupBasis>,
    r: f64,
}

impl MapEvaluator {
    fn new(model: &PopulationModel, beta: f64, r: f64, grid_spec: &GridSpec) -> Result<Self> {
        grid_spec.validate()?;
        let base = model.env([1.0, 1.0])?;
        let grid = grid_spec.build();
        let groups = model
            .groups
            .iter()
            .map(|gs| {
                let mut sig: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
                for m in 0..2 {
                    sig[m] = grid
                        .iter()
                        .map(|&d| math::logistic(beta * MARKET_SIGNS[m] * d))
                        .collect();
                }
                let p = [gs.p_buy, 1.0 - gs.p_buy];
                let mut u: [[Vec<f64>; 2]; 2] = Default::default();
                let mut v: [[Vec<f64>; 2]; 2] = Default::default();
                for side in 0..2 {
                    for m in 0..2 {
                        let mom = base.moments[m][side];
                        u[side][m] = grid
                            .iter()
                            .enumerate()
                            .map(|(i, _)| MARKET_SIGNS[m] * p[side] * mom.m1 * sig[m][i])
                            .collect();
                        v[side][m] = grid
                            .iter()
                            .enumerate()
                            .map(|(i, &d)| {
                                p[side] * (mom.m2 - 2.0 * MARKET_SIGNS[m] * d * mom.m1) * sig[m][i]
                            })
                            .collect();
                    }
                }
                GroupBasis {
                    p_buy: gs.p_buy,
                    weight: gs.weight,
                    sig,
                    u,
                    v,
                }
            })
            .collect();
        Ok(Self {
            grid,
            q_buy: base.cond.q_buy,
            q_sell: base.cond.q_sell,
            groups,
            r,
        })
    }

    /// Residual (ln D'_1 - ln D_1, ln D'_-1 - ln D_-1) at log coordinates.
    fn residual(&self, u: f64, v: f64) -> Option<[f64; 2]> {
        let d = [u.exp(), v.exp()];
        let mut t = [[0.0; 2]; 2]; // [side][market]
        for m in 0..2 {
            t[0][m] = (self.q_sell[m] / (self.q_buy[m] * d[m])).min(1.0);
            t[1][m] = (self.q_buy[m] * d[m] / self.q_sell[m]).min(1.0);
        }
        let n = self.grid.len();
        let mut num = [0.0; 2];
        let mut den = [0.0; 2];
        let mut m1 = vec![0.0; n];
        let mut m2 = vec![0.0; n];
        let mut f = vec![0.0; n];
        let mut w = vec![0.0; n];
        for gb in &self.groups {
            for (i, &delta) in self.grid.iter().enumerate() {
                let mut a = -delta;
                let mut b = delta * delta;
                for side in 0..2 {
                    for m in 0..2 {
                        a += t[side][m] * gb.u[side][m][i];
                        b += t[side][m] * gb.v[side][m][i];
                    }
                }
                if b <= 0.0 {
                    return None;
                }
                m1[i] = a;
                m2[i] = b;
            }
            // free energy, anchored at the center node (Delta = 0)
            f[0] = 0.0;
            for i in 1..n {
                let step = self.grid[i] - self.grid[i - 1];
                f[i] = f[i - 1]
                    - step * (m1[i] / m2[i] + m1[i - 1] / m2[i - 1]);
            }
            let fmin = f.iter().cloned().fold(f64::INFINITY, f64::min);
            for i in 0..n {
                w[i] = ((fmin - f[i]) / self.r).exp() / m2[i];
            }
            let z = math::trapz(&self.grid, &w);
            if !(z > 0.0) || !z.is_finite() {
                return None;
            }
            for m in 0..2 {
                let vals: Vec<f64> = (0..n).map(|i| gb.sig[m][i] * w[i]).collect();
                let integral = math::trapz(&self.grid, &vals) / z;
                num[m] += gb.p_buy * gb.weight * integral;
                den[m] += (1.0 - gb.p_buy) * gb.weight * integral;
            }
        }
        let mut out = [0.0; 2];
        for m in 0..2 {
            if den[m] <= 1e-300 || !den[m].is_finite() || num[m] <= 0.0 {
                return None;
            }
            out[m] = (num[m] / den[m]).ln() - if m == 0 { u } else { v };
        }
        Some(out)
    }
}

/// Trace both self-consistency loci and return their intersections as
/// classified steady states.
pub fn self_consistency_loci(
    model: &PopulationModel,
    beta: f64,
    r: f64,
    cfg: &LociConfig,
) -> Result<LociResult> {
    if !(cfg.d_lo > 0.0 && cfg.d_hi > cfg.d_lo) {
        return Err(Error::InvalidParameter {
            name: "loci.window",
            value: cfg.d_lo,
            reason: "need 0 < d_lo < d_hi",
        });
    }
    if cfg.resolution < 8 {
        return Err(Error::InvalidParameter {
            name: "loci.resolution",
            value: cfg.resolution as f64,
            reason: "resolution too small",
        });
    }
    let eval = MapEvaluator::new(model, beta, r, &cfg.grid)?;
    let n = cfg.resolution;
    let lo = cfg.d_lo.ln();
    let hi = cfg.d_hi.ln();
    let axis: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    // grid fill, parallel over rows
    let rows: Vec<Vec<Option<[f64; 2]>>> = axis
        .par_iter()
        .map(|&u| axis.iter().map(|&v| eval.residual(u, v)).collect())
        .collect();
    let mut residual = [vec![f64::NAN; n * n], vec![f64::NAN; n * n]];
    let mut masked = 0usize;
    for i in 0..n {
        for j in 0..n {
            match rows[i][j] {
                Some(fv) => {
                    residual[0][i * n + j] = fv[0];
                    residual[1][i * n + j] = fv[1];
                }
                None => masked += 1,
            }
        }
    }
    // contour segments per locus
    let segments = [
        marching_squares(&axis, &residual[0]),
        marching_squares(&axis, &residual[1]),
    ];
    // intersection candidates: cells with sign changes in both residuals,
    // plus explicit segment crossings
    let mut candidates: Vec<[f64; 2]> = Vec::new();
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let corners = |f: &Vec<f64>| {
                [
                    f[i * n + j],
                    f[(i + 1) * n + j],
                    f[i * n + j + 1],
                    f[(i + 1) * n + j + 1],
                ]
            };
            let c0 = corners(&residual[0]);
            let c1 = corners(&residual[1]);
            if c0.iter().chain(c1.iter()).any(|v| !v.is_finite()) {
                continue;
            }
            let changes = |c: &[f64; 4]| {
                let mn = c.iter().cloned().fold(f64::INFINITY, f64::min);
                let mx = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                mn < 0.0 && mx >= 0.0
            };
            if changes(&c0) && changes(&c1) {
                candidates.push([
                    0.5 * (axis[i] + axis[i + 1]),
                    0.5 * (axis[j] + axis[j + 1]),
                ]);
            }
        }
    }
    // refine candidates to simultaneous zeros
    let refined: Vec<[f64; 2]> = candidates
        .par_iter()
        .filter_map(|&start| {
            let f = |x: &[f64]| eval.residual(x[0], x[1]).map(|r| r.to_vec());
            math::newton(&f, &start, 1e-10, 0.15, 120).map(|r| [r[0], r[1]])
        })
        .collect();
    let mut roots: Vec<[f64; 2]> = Vec::new();
    for r0 in refined {
        if r0[0] < lo - 0.5 || r0[0] > hi + 0.5 || r0[1] < lo - 0.5 || r0[1] > hi + 0.5 {
            continue;
        }
        if !roots
            .iter()
            .any(|q| (q[0] - r0[0]).abs() < 1e-5 && (q[1] - r0[1]).abs() < 1e-5)
        {
            roots.push(r0);
        }
    }
    roots.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let mut intersections = Vec::new();
    for root in roots {
        let d = [root[0].exp(), root[1].exp()];
        if let Some(state) = classify_intersection(model, beta, r, d, &cfg.grid)? {
            intersections.push(state);
        }
    }
    Ok(LociResult {
        axis,
        residual,
        segments,
        intersections,
        masked,
    })
}

/// Classify one self-consistent point and package it as a steady state.
/// Points whose order parameters fail to reproduce within the finite-r
/// tolerance are dropped.
fn classify_intersection(
    model: &PopulationModel,
    beta: f64,
    r: f64,
    d: [f64; 2],
    grid: &GridSpec,
) -> Result<Option<SteadyState>> {
    let env: TradingEnv = model.env(d)?;
    let mut classes = [Fragmentation::Unfragmented; 2];
    let mut mixtures = [GroupMixture::single(0.0), GroupMixture::single(0.0)];
    let mut dists = Vec::new();
    for g in 0..2 {
        let profile = free_energy(model.groups[g].p_buy, &env, beta, grid)?;
        let class = classify_state(&profile, r);
        classes[g] = class.class;
        mixtures[g] = GroupMixture {
            peaks: class.peaks.clone(),
        };
        dists.push(stationary_from_profile(&profile, r));
    }
    // self-consistency check at the finite-r tolerance
    let dmap = order_param_map([&dists[0], &dists[1]], &model.groups, beta)?;
    let err = (0..2)
        .map(|m| (dmap[m].ln() - d[m].ln()).abs())
        .fold(0.0f64, f64::max);
    if err > 1e-3 {
        return Ok(None);
    }
    let avg_return = average_return_from_grids(model, d, [&dists[0], &dists[1]], beta)?;
    let coordinated = if classes.iter().all(|c| *c != Fragmentation::StronglyFragmented) {
        let dominant = |mix: &GroupMixture| {
            mix.peaks
                .iter()
                .max_by(|a, b| a.weight.total_cmp(&b.weight))
                .map(|p| p.delta)
                .unwrap_or(0.0)
        };
        Some(dominant(&mixtures[0]) * dominant(&mixtures[1]) > 0.0)
    } else {
        None
    };
    Ok(Some(SteadyState {
        d,
        classes,
        mixtures,
        coordinated,
        avg_return,
        origin: SolverOrigin::LociIntersection,
    }))
}

/// Contour segments of the zero level set on a square grid (values row-major
/// [i * n + j] over axis x axis, i = first coordinate). Cells containing
/// non-finite values are skipped; output points are in (D_1, D_-1).
fn marching_squares(axis: &[f64], values: &[f64]) -> Vec<Segment> {
    let n = axis.len();
    let mut segments = Vec::new();
    let interp = |a: f64, fa: f64, b: f64, fb: f64| a + (b - a) * (fa / (fa - fb));
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let f00 = values[i * n + j];
            let f10 = values[(i + 1) * n + j];
            let f01 = values[i * n + j + 1];
            let f11 = values[(i + 1) * n + j + 1];
            if ![f00, f10, f01, f11].iter().all(|v| v.is_finite()) {
                continue;
            }
            let (x0, x1) = (axis[i], axis[i + 1]);
            let (y0, y1) = (axis[j], axis[j + 1]);
            let mut pts: Vec<[f64; 2]> = Vec::with_capacity(4);
            // bottom (y = y0), right (x = x1), top (y = y1), left (x = x0)
            if (f00 < 0.0) != (f10 < 0.0) {
                pts.push([interp(x0, f00, x1, f10), y0]);
            }
            if (f10 < 0.0) != (f11 < 0.0) {
                pts.push([x1, interp(y0, f10, y1, f11)]);
            }
            if (f01 < 0.0) != (f11 < 0.0) {
                pts.push([interp(x0, f01, x1, f11), y1]);
            }
            if (f00 < 0.0) != (f01 < 0.0) {
                pts.push([x0, interp(y0, f00, y1, f01)]);
            }
            match pts.len() {
                2 => segments.push([
                    [pts[0][0].exp(), pts[0][1].exp()],
                    [pts[1][0].exp(), pts[1][1].exp()],
                ]),
                4 => {
                    // saddle cell: connect by the sign of the center estimate
                    let center = 0.25 * (f00 + f10 + f01 + f11);
                    let pairs = if (center < 0.0) == (f00 < 0.0) {
                        [(0usize, 3usize), (1, 2)]
                    } else {
                        [(0, 1), (2, 3)]
                    };
                    for (a, b) in pairs {
                        segments.push([
                            [pts[a][0].exp(), pts[a][1].exp()],
                            [pts[b][0].exp(), pts[b][1].exp()],
                        ]);
                    }
                }
                _ => {}
            }
        }
    }
    segments
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Decisive groups at low beta: a single (U,U) intersection.
    #[test]
    fn decisive_low_beta_single_solution() {
        let model = PopulationModel::symmetric(0.3, 0.8).unwrap();
        let cfg = LociConfig::windowed(0.25, 4.0, 96);
        let res = self_consistency_loci(&model, 1.0 / 0.31, 1e-3, &cfg).unwrap();
        assert_eq!(res.intersections.len(), 1);
        let s = &res.intersections[0];
        assert_eq!(s.label(), "(U,U)");
        assert_eq!(s.coordinated, Some(false));
        assert_eq!(res.masked, 0);
    }

    /// The solution set is closed under simultaneous market and group
    /// exchange: (D_1, D_-1) -> (1/D_-1, 1/D_1).
    #[test]
    fn exchange_symmetry_of_intersections() {
        let model = PopulationModel::symmetric(0.3, 0.8).unwrap();
        let cfg = LociConfig::windowed(0.25, 4.0, 96);
        let res = self_consistency_loci(&model, 1.0 / 0.29, 1e-3, &cfg).unwrap();
        assert_eq!(res.intersections.len(), 3);
        for s in &res.intersections {
            let mirror = [1.0 / s.d[1], 1.0 / s.d[0]];
            assert!(
                res.intersections.iter().any(|t| {
                    (t.d[0].ln() - mirror[0].ln()).abs() < 1e-4
                        && (t.d[1].ln() - mirror[1].ln()).abs() < 1e-4
                }),
                "missing mirror of {:?}",
                s.d
            );
        }
    }
}
