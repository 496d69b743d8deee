use marketfrag::steady_state::r0::{all_r0_states, homogeneous_solver};
use marketfrag::steady_state::PopulationModel;

fn main() {
    let t0 = std::time::Instant::now();
    for (p, inv_betas) in [(0.55, vec![0.285f64, 0.1]), (0.8, vec![0.265, 0.2])] {
        let model = PopulationModel::symmetric(0.3, p).unwrap();
        for ib in &inv_betas {
            let beta = 1.0 / ib;
            let all = all_r0_states(&model, beta).unwrap();
            println!("p={p} 1/beta={ib}: {} states", all.len());
            for s in &all {
                println!("  {:?} {} D=({:.4},{:.4}) coord={:?} R={:.4}",
                    s.origin, s.label(), s.d[0], s.d[1], s.coordinated, s.avg_return);
            }
            // uncoordinated continuation (valid or not)
            for r in homogeneous_solver(&model, beta).unwrap() {
                if !r.valid && r.delta[0] * r.delta[1] < 0.0 && (r.delta[0] + r.delta[1]).abs() < 1e-6 {
                    println!("  continuation delta=({:+.4},{:+.4})", r.delta[0], r.delta[1]);
                }
            }
        }
    }
    println!("elapsed {:?}", t0.elapsed());
}
