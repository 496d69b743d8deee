use marketfrag::fokker_planck::*;
use marketfrag::steady_state::loci::{self_consistency_loci, LociConfig};
use marketfrag::steady_state::PopulationModel;

fn main() {
    let model = PopulationModel::symmetric(0.3, 0.8).unwrap();
    let cfg = LociConfig::windowed(0.25, 4.0, 200);
    for (r, ib) in [(0.05, 0.16), (0.05, 0.15), (0.03, 0.16), (0.02, 0.16), (0.01, 0.16)] {
        let beta = 1.0 / ib;
        let res = self_consistency_loci(&model, beta, r, &cfg).unwrap();
        println!("r={r} 1/beta={ib}: {} states", res.intersections.len());
        let spec = GridSpec::default();
        for s in &res.intersections {
            let env = model.env(s.d).unwrap();
            print!("  D=({:.4},{:.4})", s.d[0], s.d[1]);
            for g in 0..2 {
                let p = model.groups[g].p_buy;
                let prof = free_energy(p, &env, beta, &spec).unwrap();
                let dist = stationary_from_profile(&prof, r);
                let b = binder_cumulant(&dist).unwrap();
                let mins: Vec<String> = prof.minima.iter()
                    .map(|m| format!("{:+.3}(f={:+.4})", m.delta, m.f)).collect();
                let cls = classify_state_with_tol(&prof, r, 0.5 * r);
                let wts: Vec<String> = cls.peaks.iter().map(|p| format!("{:.3}", p.weight)).collect();
                print!("  g{g}: B={b:.4} mins={} w={}", mins.join("/"), wts.join("/"));
            }
            println!();
        }
    }
}
