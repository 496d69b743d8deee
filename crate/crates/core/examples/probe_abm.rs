use marketfrag::abm::*;
use marketfrag::fokker_planck::{binder_cumulant, stationary_distribution, GridSpec};
use marketfrag::model::{symmetric_markets, LearningParams, OrderPriceModel};
use marketfrag::steady_state::loci::{self_consistency_loci, LociConfig};
use marketfrag::steady_state::PopulationModel;

fn main() {
    let (r, beta) = (0.05, 1.0 / 0.16);
    let model = PopulationModel::symmetric(0.3, 0.8).unwrap();
    let cfg = LociConfig::windowed(0.25, 4.0, 200);
    let res = self_consistency_loci(&model, beta, r, &cfg).unwrap();
    println!("{} states at (r=0.05, 1/beta=0.16)", res.intersections.len());
    let spec = GridSpec::default();
    let mut strong: Vec<f64> = vec![];
    let mut weaks: Vec<Vec<f64>> = vec![];
    for s in &res.intersections {
        let env = model.env(s.d).unwrap();
        let b: Vec<f64> = (0..2).map(|g| {
            let dist = stationary_distribution(model.groups[g].p_buy, &env, beta, r, &spec).unwrap();
            binder_cumulant(&dist).unwrap()
        }).collect();
        println!("  {} D=({:.4},{:.4}) binder=({:.4},{:.4})", s.label(), s.d[0], s.d[1], b[0], b[1]);
        if s.label() == "(S,S)" { strong = b; } else { weaks.push(b); }
    }
    // one fig-10 style run
    let config = SimConfig {
        markets: symmetric_markets(0.3).unwrap(),
        prices: OrderPriceModel::default(),
        learning: LearningParams { r, beta },
        groups: vec![GroupDef { p_buy: 0.8, size: 1000 }, GroupDef { p_buy: 0.2, size: 1000 }],
        init: InitialCondition::Zero,
        seed: 12345,
        rounds: 40_000,
        stride: 20,
        snapshot_times: vec![],
    };
    let t0 = std::time::Instant::now();
    let out = run_simulation(&config).unwrap();
    println!("sim wall time {:?}", t0.elapsed());
    for row in out.series.iter().step_by(25) {
        println!("t={:7.1} B=({:+.4},{:+.4}) meanD=({:+.3},{:+.3}) D=({:.2},{:.2})",
            row.t, row.binder[0], row.binder[1], row.mean_delta[0], row.mean_delta[1], row.d[0], row.d[1]);
    }
    let targets = BinderTargets { strong: strong.clone(), weak: weaks.clone() };
    let est = lifetime_estimate(&out.series, &targets, LifetimeRule::default());
    println!("lifetime: entered={} t={:.1} censored={}", est.entered, est.time, est.censored);
}
