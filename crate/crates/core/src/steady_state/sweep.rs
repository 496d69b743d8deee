//! Phase-diagram sweeps over (beta, p_buy) and (r, beta) grids, plus
//! boundary refinement along one axis.

use super::loci::{self_consistency_loci, LociConfig};
use super::r0::all_r0_states;
use super::{PhaseDiagramCell, PopulationModel};
use crate::error::Result;
use rayon::prelude::*;

/// Sweep the r -> 0 solvers over an (intensity of choice, buying preference)
/// grid of symmetric two-group populations at market bias `theta`.
pub fn phase_diagram_beta_pbuy(
    theta: f64,
    betas: &[f64],
    p_buys: &[f64],
) -> Vec<PhaseDiagramCell> {
    let cells: Vec<(f64, f64)> = betas
        .iter()
        .flat_map(|&b| p_buys.iter().map(move |&p| (b, p)))
        .collect();
    cells
        .par_iter()
        .map(|&(beta, p_buy)| {
            let run = || -> Result<Vec<super::SteadyState>> {
                let model = PopulationModel::symmetric(theta, p_buy)?;
                all_r0_states(&model, beta)
            };
            match run() {
                Ok(solutions) => PhaseDiagramCell {
                    x: beta,
                    y: p_buy,
                    solutions,
                    failure: None,
                },
                Err(e) => PhaseDiagramCell {
                    x: beta,
                    y: p_buy,
                    solutions: Vec::new(),
                    failure: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// Sweep the finite-r loci over an (r, beta) grid; the recorded solutions are
/// the loci intersections.
pub fn phase_diagram_r_beta(
    model: &PopulationModel,
    rs: &[f64],
    betas: &[f64],
    cfg: &LociConfig,
) -> Vec<PhaseDiagramCell> {
    let cells: Vec<(f64, f64)> = rs
        .iter()
        .flat_map(|&r| betas.iter().map(move |&b| (r, b)))
        .collect();
    cells
        .iter()
        .map(|&(r, beta)| match self_consistency_loci(model, beta, r, cfg) {
            Ok(res) => PhaseDiagramCell {
                x: r,
                y: beta,
                solutions: res.intersections,
                failure: None,
            },
            Err(e) => PhaseDiagramCell {
                x: r,
                y: beta,
                solutions: Vec::new(),
                failure: Some(e.to_string()),
            },
        })
        .collect()
}

/// Largest learning rate below which multiple self-consistent steady states
/// exist at fixed beta, located by bisection on the loci intersection count.
pub fn multiple_state_threshold_r(
    model: &PopulationModel,
    beta: f64,
    r_lo: f64,
    r_hi: f64,
    tol: f64,
    cfg: &LociConfig,
) -> Result<f64> {
    let multiple = |r: f64| -> Result<bool> {
        let res = self_consistency_loci(model, beta, r, cfg)?;
        Ok(res.intersections.len() > 1)
    };
    if !multiple(r_lo)? {
        return Err(crate::error::Error::NoConvergence(
            "no multiple states at the lower end of the r bracket",
        ));
    }
    if multiple(r_hi)? {
        return Err(crate::error::Error::NoConvergence(
            "multiple states persist at the upper end of the r bracket",
        ));
    }
    let (mut lo, mut hi) = (r_lo, r_hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if multiple(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Bisect the location of a classification change of `classify` along one
/// axis; `classify(lo)` and `classify(hi)` must differ.
pub fn bisect_change<K, F>(classify: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    K: PartialEq,
    F: Fn(f64) -> Result<K>,
{
    let k_lo = classify(lo)?;
    if classify(hi)? == k_lo {
        return Err(crate::error::Error::NoConvergence(
            "no classification change inside the bracket",
        ));
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if classify(mid)? == k_lo {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}
