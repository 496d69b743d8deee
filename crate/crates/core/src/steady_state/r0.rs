//! Long-memory (r -> 0) steady-state solvers.
//!
//! Three procedures cover the possible two-group states:
//!  - `homogeneous_solver`: both groups unimodal; solves the peak-position
//!    equations M1^(g)(Delta^g; D(Delta^1, Delta^2)) = 0 with the closed-form
//!    order parameters of point-mass distributions, then validates each root
//!    against the global free-energy minimum.
//!  - `cofragmented_solver`: both groups strongly fragmented; intersects the
//!    two groups' Maxwell loci (equal free-energy minima) and solves a 2x2
//!    linear system for the peak weights.
//!  - `partial_fragmented_solver`: one group strongly fragmented, the other
//!    unimodal; walks the fragmented group's Maxwell locus and matches the
//!    weight implied by the two markets' order-parameter equations.

use super::{
    average_population_return, order_params_from_mixtures, GroupMixture, PopulationModel,
    SolverOrigin, SteadyState,
};
use crate::error::Result;
use crate::fokker_planck::{drift_m1, free_energy_at, FreeEnergyMinimum, TradingEnv};
use crate::math;
use crate::model::MARKET_SIGNS;
use rayon::prelude::*;

/// Scan range for peak positions; scores are bounded near [0, 1] with the
/// default prices so attraction differences stay well inside.
const DELTA_LO: f64 = -1.5;
const DELTA_HI: f64 = 1.5;
const DELTA_SCAN: usize = 601;

/// Default order-parameter window for locus tracing.
const D_WINDOW_LO: f64 = 1e-2;
const D_WINDOW_HI: f64 = 1e2;
/// Scan lines per orientation when tracing a Maxwell locus.
const LOCUS_SCAN: usize = 320;

/// Acceptance slack for peak weights at the boundary of [0, 1].
const WEIGHT_SLACK: f64 = 1e-9;

/// Self-consistency tolerance of returned r -> 0 states.
const SELF_TOL: f64 = 1e-6;

/// Minima of group `g`'s free energy at fixed conditions, by scanning the
/// drift for descending zeros and refining by bisection; f values come from
/// adaptive quadrature so gaps are smooth in the conditions.
fn group_minima(env: &TradingEnv, p_buy: f64, beta: f64) -> Vec<FreeEnergyMinimum> {
    let step = (DELTA_HI - DELTA_LO) / (DELTA_SCAN - 1) as f64;
    let mut prev = drift_m1(DELTA_LO, p_buy, env, beta);
    let mut out = Vec::new();
    for i in 1..DELTA_SCAN {
        let x = DELTA_LO + step * i as f64;
        let cur = drift_m1(x, p_buy, env, beta);
        if prev > 0.0 && cur <= 0.0 {
            let root = math::bisect(&|d| drift_m1(d, p_buy, env, beta), x - step, x, 100);
            out.push(FreeEnergyMinimum {
                delta: root,
                f: free_energy_at(root, p_buy, env, beta),
            });
        }
        prev = cur;
    }
    out
}

/// Free-energy gap f(rightmost minimum) - f(leftmost minimum); None when
/// the profile is unimodal.
fn maxwell_gap(env: &TradingEnv, p_buy: f64, beta: f64) -> Option<(f64, [FreeEnergyMinimum; 2])> {
    let minima = group_minima(env, p_buy, beta);
    if minima.len() < 2 {
        return None;
    }
    let first = minima[0];
    let last = *minima.last().unwrap();
    Some((last.f - first.f, [first, last]))
}

/// Sign-continuous extension of the Maxwell gap: outside the bimodal region
/// a missing right (left) well counts as an infinitely high one, so the sign
/// stays usable for bracketing even when the bimodal band is narrower than
/// the scan step.
const GAP_SENTINEL: f64 = 1e6;

fn extended_gap(env: &TradingEnv, p_buy: f64, beta: f64) -> f64 {
    let minima = group_minima(env, p_buy, beta);
    match minima.len() {
        0 => 0.0,
        1 => {
            if minima[0].delta < 0.0 {
                GAP_SENTINEL
            } else {
                -GAP_SENTINEL
            }
        }
        _ => minima.last().unwrap().f - minima[0].f,
    }
}

/// A root of the homogeneous-population peak equations.
#[derive(Debug, Clone)]
pub struct HomogeneousRoot {
    pub delta: [f64; 2],
    pub d: [f64; 2],
    /// false when the global free-energy minimum of some group sits away
    /// from the root; such roots are not bona fide steady states
    pub valid: bool,
    pub state: Option<SteadyState>,
}

/// Closed-form order parameters of point-mass groups at (Delta^1, Delta^2).
fn point_mass_d(model: &PopulationModel, beta: f64, delta: [f64; 2]) -> Result<[f64; 2]> {
    let mixtures = [
        GroupMixture::single(delta[0]),
        GroupMixture::single(delta[1]),
    ];
    order_params_from_mixtures(&mixtures, &model.groups, beta)
}

/// All simultaneous roots of the two groups' peak-position equations, found
/// from a 9 x 9 seed lattice and validated against the free-energy profile.
pub fn homogeneous_solver(model: &PopulationModel, beta: f64) -> Result<Vec<HomogeneousRoot>> {
    let objective = |x: &[f64]| -> Option<Vec<f64>> {
        if x[0].abs() > 3.0 || x[1].abs() > 3.0 {
            return None;
        }
        let d = point_mass_d(model, beta, [x[0], x[1]]).ok()?;
        let env = model.env(d).ok()?;
        Some(vec![
            drift_m1(x[0], model.groups[0].p_buy, &env, beta),
            drift_m1(x[1], model.groups[1].p_buy, &env, beta),
        ])
    };
    let mut roots: Vec<[f64; 2]> = Vec::new();
    for i in 0..9 {
        for j in 0..9 {
            let seed = [-1.0 + 0.25 * i as f64, -1.0 + 0.25 * j as f64];
            let Some(root) = math::newton(&objective, &seed, 1e-12, 0.25, 300) else {
                continue;
            };
            if !roots
                .iter()
                .any(|r| (r[0] - root[0]).abs().max((r[1] - root[1]).abs()) < 1e-7)
            {
                roots.push([root[0], root[1]]);
            }
        }
    }
    roots.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let mut out = Vec::new();
    for root in roots {
        let d = point_mass_d(model, beta, root)?;
        let env = model.env(d)?;
        let mut valid = true;
        let mut classes = [crate::fokker_planck::Fragmentation::Unfragmented; 2];
        for g in 0..2 {
            let minima = group_minima(&env, model.groups[g].p_buy, beta);
            let Some(global) = minima
                .iter()
                .min_by(|a, b| a.f.total_cmp(&b.f))
                .copied()
            else {
                valid = false;
                break;
            };
            if (global.delta - root[g]).abs() > 1e-4 {
                valid = false;
                break;
            }
            classes[g] = if minima.len() == 1 {
                crate::fokker_planck::Fragmentation::Unfragmented
            } else {
                crate::fokker_planck::Fragmentation::WeaklyFragmented
            };
        }
        let state = if valid {
            let mixtures = [GroupMixture::single(root[0]), GroupMixture::single(root[1])];
            let avg_return = average_population_return(model, d, &mixtures, beta)?;
            Some(SteadyState {
                d,
                classes,
                mixtures,
                coordinated: Some(root[0] * root[1] > 0.0),
                avg_return,
                origin: SolverOrigin::Homogeneous,
            })
        } else {
            None
        };
        out.push(HomogeneousRoot {
            delta: root,
            d,
            valid,
            state,
        });
    }
    Ok(out)
}

/// A point on one group's Maxwell locus.
#[derive(Debug, Clone, Copy)]
struct LocusPoint {
    d: [f64; 2],
    minima: [FreeEnergyMinimum; 2],
}

/// Solve the Maxwell condition gap = 0 along one scan line. `scan_idx` is
/// the fixed coordinate (0: D_1 fixed, solving D_-1; 1: vice versa).
fn locus_points_on_line(
    model: &PopulationModel,
    beta: f64,
    group: usize,
    fixed_coord: usize,
    fixed_val: f64,
) -> Vec<LocusPoint> {
    let p_buy = model.groups[group].p_buy;
    let make_d = |x: f64| -> [f64; 2] {
        let mut d = [0.0; 2];
        d[fixed_coord] = fixed_val;
        d[1 - fixed_coord] = x;
        d
    };
    let gap_at = |x: f64| -> Option<(f64, [FreeEnergyMinimum; 2])> {
        let env = model.env(make_d(x)).ok()?;
        maxwell_gap(&env, p_buy, beta)
    };
    let n = 240;
    let lo = D_WINDOW_LO.ln();
    let hi = D_WINDOW_HI.ln();
    let xs: Vec<f64> = (0..n)
        .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
        .collect();
    let gaps: Vec<Option<f64>> = xs.iter().map(|&x| gap_at(x).map(|g| g.0)).collect();
    let mut out = Vec::new();
    for i in 0..n - 1 {
        let (Some(g0), Some(g1)) = (gaps[i], gaps[i + 1]) else {
            continue;
        };
        if (g0 < 0.0) == (g1 < 0.0) {
            continue;
        }
        let mut a = xs[i];
        let mut b = xs[i + 1];
        let mut ga = g0;
        for _ in 0..70 {
            let mid = (a * b).sqrt();
            match gap_at(mid) {
                Some((gm, _)) => {
                    if (ga < 0.0) == (gm < 0.0) {
                        a = mid;
                        ga = gm;
                    } else {
                        b = mid;
                    }
                }
                None => break,
            }
        }
        let x = (a * b).sqrt();
        if let Some((_, minima)) = gap_at(x) {
            out.push(LocusPoint {
                d: make_d(x),
                minima,
            });
        }
    }
    out
}

/// Traced Maxwell locus of one group (opaque; feed it to the fragmented
/// solvers to avoid re-tracing).
pub struct MaxwellTrace {
    branches: Vec<(usize, Vec<LocusPoint>)>,
}

/// Trace both groups' Maxwell loci once.
pub fn trace_loci(model: &PopulationModel, beta: f64) -> [MaxwellTrace; 2] {
    [
        MaxwellTrace {
            branches: trace_maxwell_branches(model, beta, 0),
        },
        MaxwellTrace {
            branches: trace_maxwell_branches(model, beta, 1),
        },
    ]
}

/// Trace a group's Maxwell locus as branches of consecutive scan-line
/// solutions, in both scan orientations.
fn trace_maxwell_branches(
    model: &PopulationModel,
    beta: f64,
    group: usize,
) -> Vec<(usize, Vec<LocusPoint>)> {
    let lo = D_WINDOW_LO.ln();
    let hi = D_WINDOW_HI.ln();
    let lines: Vec<f64> = (0..LOCUS_SCAN)
        .map(|i| (lo + (hi - lo) * i as f64 / (LOCUS_SCAN - 1) as f64).exp())
        .collect();
    let mut branches: Vec<(usize, Vec<LocusPoint>)> = Vec::new();
    for fixed_coord in 0..2 {
        let per_line: Vec<Vec<LocusPoint>> = lines
            .par_iter()
            .map(|&fv| locus_points_on_line(model, beta, group, fixed_coord, fv))
            .collect();
        // connect nearest solutions between consecutive scan lines
        let mut open: Vec<Vec<LocusPoint>> = Vec::new();
        for pts in per_line {
            let mut next_open: Vec<Vec<LocusPoint>> = Vec::new();
            let mut used = vec![false; pts.len()];
            for branch in open.drain(..) {
                let last = branch.last().unwrap().d[1 - fixed_coord].ln();
                let mut best: Option<(usize, f64)> = None;
                for (k, p) in pts.iter().enumerate() {
                    if used[k] {
                        continue;
                    }
                    let dist = (p.d[1 - fixed_coord].ln() - last).abs();
                    if dist < 0.15 && best.map_or(true, |(_, bd)| dist < bd) {
                        best = Some((k, dist));
                    }
                }
                if let Some((k, _)) = best {
                    used[k] = true;
                    let mut b = branch;
                    b.push(pts[k]);
                    next_open.push(b);
                } else if branch.len() >= 2 {
                    branches.push((fixed_coord, branch));
                }
            }
            for (k, p) in pts.iter().enumerate() {
                if !used[k] {
                    next_open.push(vec![*p]);
                }
            }
            open = next_open;
        }
        for branch in open {
            if branch.len() >= 2 {
                branches.push((fixed_coord, branch));
            }
        }
    }
    branches
}

/// Re-solve a locus point at a given free coordinate bracket.
fn solve_locus_point(
    model: &PopulationModel,
    beta: f64,
    group: usize,
    fixed_coord: usize,
    fixed_val: f64,
    bracket: (f64, f64),
) -> Option<LocusPoint> {
    let p_buy = model.groups[group].p_buy;
    let make_d = |x: f64| -> [f64; 2] {
        let mut d = [0.0; 2];
        d[fixed_coord] = fixed_val;
        d[1 - fixed_coord] = x;
        d
    };
    let gap_at = |x: f64| -> Option<(f64, [FreeEnergyMinimum; 2])> {
        let env = model.env(make_d(x)).ok()?;
        maxwell_gap(&env, p_buy, beta)
    };
    // widen the bracket slightly, then bisect
    let (mut a, mut b) = (bracket.0 * 0.995, bracket.1 * 1.005);
    let (mut ga, gb) = (gap_at(a)?.0, gap_at(b)?.0);
    if (ga < 0.0) == (gb < 0.0) {
        return None;
    }
    for _ in 0..70 {
        let mid = (a * b).sqrt();
        let (gm, _) = gap_at(mid)?;
        if (ga < 0.0) == (gm < 0.0) {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    let x = (a * b).sqrt();
    let (_, minima) = gap_at(x)?;
    Some(LocusPoint {
        d: make_d(x),
        minima,
    })
}

/// Scan a function along a traced branch, bracket its sign changes and
/// refine each by bisection in the scan coordinate.
///
/// `value` returns None where undefined; such gaps break brackets.
/// `pole_guard`, when set, discards brackets whose endpoint magnitudes exceed
/// the bound (sign changes across poles of the weight equations rather than
/// through zero). Intervals with small endpoint values are subdivided first
/// so that pairs of nearby crossings are not skipped over.
fn refine_along_branch<F>(
    model: &PopulationModel,
    beta: f64,
    group: usize,
    fixed_coord: usize,
    branch: &[LocusPoint],
    value: &F,
    pole_guard: Option<f64>,
) -> Vec<LocusPoint>
where
    F: Fn(&LocusPoint) -> Option<f64>,
{
    // refined (point, value) sequence with subdivision where a double
    // crossing could hide between scan lines
    let mut seq: Vec<(LocusPoint, f64)> = Vec::new();
    let vals: Vec<Option<f64>> = branch.iter().map(value).collect();
    for i in 0..branch.len() {
        if let Some(v) = vals[i] {
            seq.push((branch[i], v));
        }
        if i + 1 >= branch.len() {
            break;
        }
        let (Some(v0), Some(v1)) = (vals[i], vals[i + 1]) else {
            continue;
        };
        let small = 2.0;
        if v0.abs() < small && v1.abs() < small {
            let s0 = branch[i].d[fixed_coord];
            let s1 = branch[i + 1].d[fixed_coord];
            let x0 = branch[i].d[1 - fixed_coord];
            let x1 = branch[i + 1].d[1 - fixed_coord];
            let subdivide = 6;
            for k in 1..subdivide {
                let t = k as f64 / subdivide as f64;
                let s = s0 * (s1 / s0).powf(t);
                let bracket = (x0.min(x1), x0.max(x1));
                if let Some(p) = solve_locus_point(model, beta, group, fixed_coord, s, bracket) {
                    if let Some(v) = value(&p) {
                        seq.push((p, v));
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    for w in 0..seq.len().saturating_sub(1) {
        let (p0, v0) = (seq[w].0, seq[w].1);
        let (p1, v1) = (seq[w + 1].0, seq[w + 1].1);
        if (v0 < 0.0) == (v1 < 0.0) {
            continue;
        }
        if let Some(bound) = pole_guard {
            if v0.abs() > bound || v1.abs() > bound {
                continue;
            }
        }
        let mut s0 = p0.d[fixed_coord];
        let mut s1 = p1.d[fixed_coord];
        let mut x0 = p0.d[1 - fixed_coord];
        let mut x1 = p1.d[1 - fixed_coord];
        let mut f0 = v0;
        let mut point = None;
        for _ in 0..60 {
            let sm = (s0 * s1).sqrt();
            let bracket = (x0.min(x1), x0.max(x1));
            let Some(p) = solve_locus_point(model, beta, group, fixed_coord, sm, bracket)
            else {
                break;
            };
            let Some(fm) = value(&p) else { break };
            if (f0 < 0.0) == (fm < 0.0) {
                s0 = sm;
                x0 = p.d[1 - fixed_coord];
                f0 = fm;
            } else {
                s1 = sm;
                x1 = p.d[1 - fixed_coord];
            }
            point = Some(p);
            if (s1 / s0).ln().abs() < 1e-11 {
                break;
            }
        }
        if let Some(p) = point {
            out.push(p);
        }
    }
    out
}

/// Weight of the fragmented group's first peak implied by the market-`m`
/// order-parameter equation, given the unimodal group's peak position.
fn implied_weight(
    model: &PopulationModel,
    beta: f64,
    frag: usize,
    peaks: &[FreeEnergyMinimum; 2],
    unim_delta: f64,
    d: [f64; 2],
    m: usize,
) -> Option<f64> {
    let unim = 1 - frag;
    let gf = &model.groups[frag];
    let go = &model.groups[unim];
    let cf = gf.weight * (gf.p_buy - d[m] * (1.0 - gf.p_buy));
    let co = go.weight * (go.p_buy - d[m] * (1.0 - go.p_buy));
    let sa = math::logistic(beta * MARKET_SIGNS[m] * peaks[0].delta);
    let sb = math::logistic(beta * MARKET_SIGNS[m] * peaks[1].delta);
    let su = math::logistic(beta * MARKET_SIGNS[m] * unim_delta);
    let den = cf * (sa - sb);
    if den.abs() < 1e-14 {
        return None;
    }
    Some((-co * su - cf * sb) / den)
}

/// Both-groups-fragmented steady states: intersections of the two Maxwell
/// loci with admissible peak weights.
pub fn cofragmented_solver(model: &PopulationModel, beta: f64) -> Result<Vec<SteadyState>> {
    cofragmented_with_traces(model, beta, &trace_loci(model, beta))
}

pub fn cofragmented_with_traces(
    model: &PopulationModel,
    beta: f64,
    traces: &[MaxwellTrace; 2],
) -> Result<Vec<SteadyState>> {
    let mut states: Vec<SteadyState> = Vec::new();
    for lead in 0..2 {
        let other = 1 - lead;
        // sign-continuous gap so intersections are caught even when the
        // other group's bimodal band is narrower than the scan step
        let other_gap = |p: &LocusPoint| -> Option<f64> {
            let env = model.env(p.d).ok()?;
            Some(extended_gap(&env, model.groups[other].p_buy, beta))
        };
        for (fixed_coord, branch) in &traces[lead].branches {
            for point in refine_along_branch(
                model,
                beta,
                lead,
                *fixed_coord,
                branch,
                &other_gap,
                None,
            ) {
                let env = model.env(point.d)?;
                let Some((other_gap_val, other_minima)) =
                    maxwell_gap(&env, model.groups[other].p_buy, beta)
                else {
                    continue;
                };
                if other_gap_val.abs() > 1e-6 {
                    continue;
                }
                let mut peaks = [[FreeEnergyMinimum { delta: 0.0, f: 0.0 }; 2]; 2];
                peaks[lead] = point.minima;
                peaks[other] = other_minima;
                // 2x2 linear system for the two weights
                let mut a = [0.0; 4];
                let mut rhs = [0.0; 2];
                for m in 0..2 {
                    for g in 0..2 {
                        let gs = &model.groups[g];
                        let c = gs.weight * (gs.p_buy - point.d[m] * (1.0 - gs.p_buy));
                        let s1 = math::logistic(beta * MARKET_SIGNS[m] * peaks[g][0].delta);
                        let s2 = math::logistic(beta * MARKET_SIGNS[m] * peaks[g][1].delta);
                        a[m * 2 + g] = c * (s1 - s2);
                        rhs[m] -= c * s2;
                    }
                }
                if math::solve_linear(&mut a, &mut rhs, 2).is_none() {
                    continue;
                }
                if rhs
                    .iter()
                    .any(|w| *w < -WEIGHT_SLACK || *w > 1.0 + WEIGHT_SLACK)
                {
                    continue;
                }
                let w = [rhs[0].clamp(0.0, 1.0), rhs[1].clamp(0.0, 1.0)];
                let mixtures = [
                    GroupMixture::bimodal(peaks[0][0].delta, peaks[0][1].delta, w[0]),
                    GroupMixture::bimodal(peaks[1][0].delta, peaks[1][1].delta, w[1]),
                ];
                let dmap = order_params_from_mixtures(&mixtures, &model.groups, beta)?;
                let err = (0..2)
                    .map(|m| (dmap[m].ln() - point.d[m].ln()).abs())
                    .fold(0.0f64, f64::max);
                if err > SELF_TOL {
                    continue;
                }
                if states.iter().any(|s| close_d(s.d, point.d)) {
                    continue;
                }
                let avg_return = average_population_return(model, point.d, &mixtures, beta)?;
                states.push(SteadyState {
                    d: point.d,
                    classes: [
                        crate::fokker_planck::Fragmentation::StronglyFragmented,
                        crate::fokker_planck::Fragmentation::StronglyFragmented,
                    ],
                    mixtures,
                    coordinated: None,
                    avg_return,
                    origin: SolverOrigin::CoFragmented,
                });
            }
        }
    }
    Ok(states)
}

/// One-group-fragmented steady states: points of a group's Maxwell locus
/// where both markets' order-parameter equations give the same admissible
/// fragmented-group weight, with the other group at its global free-energy
/// minimum.
pub fn partial_fragmented_solver(model: &PopulationModel, beta: f64) -> Result<Vec<SteadyState>> {
    partial_fragmented_with_traces(model, beta, &trace_loci(model, beta))
}

pub fn partial_fragmented_with_traces(
    model: &PopulationModel,
    beta: f64,
    traces: &[MaxwellTrace; 2],
) -> Result<Vec<SteadyState>> {
    let mut states: Vec<SteadyState> = Vec::new();
    for frag in 0..2 {
        let unim = 1 - frag;
        let unim_peak = |d: [f64; 2]| -> Option<(FreeEnergyMinimum, usize)> {
            let env = model.env(d).ok()?;
            let minima = group_minima(&env, model.groups[unim].p_buy, beta);
            let global = minima.iter().min_by(|x, y| x.f.total_cmp(&y.f))?;
            Some((*global, minima.len()))
        };
        let weight_mismatch = |p: &LocusPoint| -> Option<f64> {
            let (peak, _) = unim_peak(p.d)?;
            let w1 = implied_weight(model, beta, frag, &p.minima, peak.delta, p.d, 0)?;
            let w2 = implied_weight(model, beta, frag, &p.minima, peak.delta, p.d, 1)?;
            Some(w1 - w2)
        };
        for (fixed_coord, branch) in &traces[frag].branches {
            // break brackets where the unimodal group's global minimum jumps
            let positions: Vec<Option<f64>> = branch
                .iter()
                .map(|p| unim_peak(p.d).map(|(g, _)| g.delta))
                .collect();
            let mut segments: Vec<Vec<LocusPoint>> = Vec::new();
            let mut current: Vec<LocusPoint> = Vec::new();
            for i in 0..branch.len() {
                let continuous = i == 0
                    || match (positions[i - 1], positions[i]) {
                        (Some(a), Some(b)) => (a - b).abs() < 0.3,
                        _ => false,
                    };
                if !continuous && current.len() >= 2 {
                    segments.push(std::mem::take(&mut current));
                } else if !continuous {
                    current.clear();
                }
                current.push(branch[i]);
            }
            if current.len() >= 2 {
                segments.push(current);
            }
            for segment in segments {
                for point in refine_along_branch(
                    model,
                    beta,
                    frag,
                    *fixed_coord,
                    &segment,
                    &weight_mismatch,
                    Some(10.0),
                ) {
                    let Some((peak, n_minima)) = unim_peak(point.d) else {
                        continue;
                    };
                    let Some(w) = implied_weight(
                        model,
                        beta,
                        frag,
                        &point.minima,
                        peak.delta,
                        point.d,
                        0,
                    ) else {
                        continue;
                    };
                    if !(-WEIGHT_SLACK..=1.0 + WEIGHT_SLACK).contains(&w) {
                        continue;
                    }
                    let w = w.clamp(0.0, 1.0);
                    let mut mixtures = [GroupMixture::single(0.0), GroupMixture::single(0.0)];
                    mixtures[frag] =
                        GroupMixture::bimodal(point.minima[0].delta, point.minima[1].delta, w);
                    mixtures[unim] = GroupMixture::single(peak.delta);
                    let dmap = order_params_from_mixtures(&mixtures, &model.groups, beta)?;
                    let err = (0..2)
                        .map(|m| (dmap[m].ln() - point.d[m].ln()).abs())
                        .fold(0.0f64, f64::max);
                    if err > SELF_TOL {
                        continue;
                    }
                    if states.iter().any(|s| close_d(s.d, point.d)) {
                        continue;
                    }
                    let mut classes = [crate::fokker_planck::Fragmentation::Unfragmented; 2];
                    classes[frag] = crate::fokker_planck::Fragmentation::StronglyFragmented;
                    classes[unim] = if n_minima == 1 {
                        crate::fokker_planck::Fragmentation::Unfragmented
                    } else {
                        crate::fokker_planck::Fragmentation::WeaklyFragmented
                    };
                    let avg_return =
                        average_population_return(model, point.d, &mixtures, beta)?;
                    states.push(SteadyState {
                        d: point.d,
                        classes,
                        mixtures,
                        coordinated: None,
                        avg_return,
                        origin: SolverOrigin::PartiallyFragmented,
                    });
                }
            }
        }
    }
    Ok(states)
}

fn close_d(a: [f64; 2], b: [f64; 2]) -> bool {
    (a[0].ln() - b[0].ln()).abs() < 1e-4 && (a[1].ln() - b[1].ln()).abs() < 1e-4
}

/// Union of the three r -> 0 solvers (valid states only). The Maxwell loci
/// are traced once and shared by the two fragmented-state solvers.
pub fn all_r0_states(model: &PopulationModel, beta: f64) -> Result<Vec<SteadyState>> {
    let mut states: Vec<SteadyState> = homogeneous_solver(model, beta)?
        .into_iter()
        .filter_map(|r| r.state)
        .collect();
    let traces = trace_loci(model, beta);
    for s in cofragmented_with_traces(model, beta, &traces)? {
        if !states.iter().any(|t| close_d(t.d, s.d)) {
            states.push(s);
        }
    }
    for s in partial_fragmented_with_traces(model, beta, &traces)? {
        if !states.iter().any(|t| close_d(t.d, s.d)) {
            states.push(s);
        }
    }
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn homogeneous_low_beta_unique_antisymmetric_root() {
        let model = PopulationModel::symmetric(0.3, 0.55).unwrap();
        let roots = homogeneous_solver(&model, 1.0 / 0.31).unwrap();
        let valid: Vec<_> = roots.iter().filter(|r| r.valid).collect();
        assert_eq!(valid.len(), 1);
        let r = valid[0];
        assert_relative_eq!(r.delta[0], -r.delta[1], epsilon = 1e-8);
        assert!(r.delta[0] > 0.0, "buyers prefer the buyer-friendly market");
        let state = r.state.as_ref().unwrap();
        assert_eq!(state.label(), "(U,U)");
        assert_eq!(state.coordinated, Some(false));
    }

    #[test]
    fn point_mass_map_is_symmetric_at_zero() {
        let model = PopulationModel::symmetric(0.3, 0.8).unwrap();
        let d = point_mass_d(&model, 4.0, [0.0, 0.0]).unwrap();
        assert_relative_eq!(d[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(d[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn high_beta_coordinated_roots_exist() {
        let model = PopulationModel::symmetric(0.3, 0.8).unwrap();
        let roots = homogeneous_solver(&model, 1.0 / 0.2).unwrap();
        let coordinated: Vec<_> = roots
            .iter()
            .filter(|r| r.valid && r.delta[0] * r.delta[1] > 0.0)
            .collect();
        assert_eq!(coordinated.len(), 2, "coordination at either market");
    }

    #[test]
    fn states_reproduce_their_order_parameters() {
        let model = PopulationModel::symmetric(0.3, 0.55).unwrap();
        for state in all_r0_states(&model, 1.0 / 0.285).unwrap() {
            let dmap =
                order_params_from_mixtures(&state.mixtures, &model.groups, 1.0 / 0.285).unwrap();
            for m in 0..2 {
                assert_relative_eq!(dmap[m], state.d[m], max_relative = 1e-5);
            }
        }
    }
}
