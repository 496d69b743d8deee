use marketfrag::abm::*;
use marketfrag::model::{symmetric_markets, LearningParams, OrderPriceModel};

fn run(n: usize, r: f64, ib: f64, seed: u64, t_end: f64) {
    let config = SimConfig {
        markets: symmetric_markets(0.3).unwrap(),
        prices: OrderPriceModel::default(),
        learning: LearningParams { r, beta: 1.0 / ib },
        groups: vec![GroupDef { p_buy: 0.8, size: n / 2 }, GroupDef { p_buy: 0.2, size: n / 2 }],
        init: InitialCondition::Zero,
        seed,
        rounds: (t_end / r) as usize,
        stride: ((1.0 / r) as usize).max(1),
        snapshot_times: vec![],
    };
    let out = run_simulation(&config).unwrap();
    print!("N={n} r={r} 1/b={ib} seed={seed}: ");
    for row in out.series.iter().step_by(out.series.len() / 12) {
        print!("[t={:.0} B=({:.3},{:.3}) m=({:+.2},{:+.2})] ", row.t, row.binder[0], row.binder[1], row.mean_delta[0], row.mean_delta[1]);
    }
    println!();
}

fn main() {
    run(2000, 0.05, 0.16, 1, 6000.0);
    run(2000, 0.05, 0.16, 2, 6000.0);
    run(200, 0.05, 0.15, 1, 3000.0);
    run(200, 0.03, 0.15, 1, 3000.0);
    run(200, 0.06, 0.15, 1, 3000.0);
}
