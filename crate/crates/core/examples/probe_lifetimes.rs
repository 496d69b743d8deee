use marketfrag::abm::*;
use marketfrag::model::{symmetric_markets, LearningParams, OrderPriceModel};
use rayon::prelude::*;

fn departure(n: usize, r: f64, ib: f64, seed: u64, t_end: f64) -> f64 {
    let config = SimConfig {
        markets: symmetric_markets(0.3).unwrap(),
        prices: OrderPriceModel::default(),
        learning: LearningParams { r, beta: 1.0 / ib },
        groups: vec![GroupDef { p_buy: 0.8, size: n / 2 }, GroupDef { p_buy: 0.2, size: n / 2 }],
        init: InitialCondition::Zero,
        seed,
        rounds: (t_end / r) as usize,
        stride: ((0.5 / r) as usize).max(1),
        snapshot_times: vec![],
    };
    let out = run_simulation(&config).unwrap();
    // crude departure: |mean delta| of either group beyond 0.25 sustained
    let rows = &out.series;
    for i in 0..rows.len() {
        let sustained = rows[i..].iter().take_while(|q| q.t <= rows[i].t + 20.0).all(|q| {
            q.mean_delta.iter().any(|m| m.abs() > 0.25)
        });
        if rows[i].mean_delta.iter().any(|m| m.abs() > 0.25) && sustained {
            return rows[i].t;
        }
    }
    f64::INFINITY
}

fn main() {
    for r in [0.03, 0.05, 0.06] {
        let taus: Vec<f64> = (0..8u64).into_par_iter()
            .map(|s| departure(200, r, 0.15, 1000 + s, 4000.0)).collect();
        let mut sorted = taus.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        println!("N=200 r={r}: taus={:?} median={}", taus, 0.5*(sorted[3]+sorted[4]));
    }
}
