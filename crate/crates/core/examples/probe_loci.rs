use marketfrag::steady_state::loci::{self_consistency_loci, LociConfig};
use marketfrag::steady_state::sweep::multiple_state_threshold_r;
use marketfrag::steady_state::PopulationModel;

fn main() {
    let model = PopulationModel::symmetric(0.3, 0.8).unwrap();
    let cfg = LociConfig::windowed(0.25, 4.0, 200);
    for ib in [0.31, 0.29, 0.265, 0.2] {
        let t0 = std::time::Instant::now();
        let res = self_consistency_loci(&model, 1.0 / ib, 1e-3, &cfg).unwrap();
        print!("1/beta={ib}: {} solutions [", res.intersections.len());
        for s in &res.intersections {
            print!("{} D=({:.4},{:.4}) R={:.4}; ", s.label(), s.d[0], s.d[1], s.avg_return);
        }
        println!("] masked={} in {:?}", res.masked, t0.elapsed());
    }
    // criterion 9: threshold r at 1/beta = 0.15
    let t0 = std::time::Instant::now();
    let rc = multiple_state_threshold_r(&model, 1.0 / 0.15, 0.02, 0.09, 1e-3, &cfg).unwrap();
    println!("r_c(1/beta=0.15) = {rc:.4} in {:?}", t0.elapsed());
}
