use marketfrag::steady_state::r0::{all_r0_states, homogeneous_solver};
use marketfrag::steady_state::{average_population_return, random_choice_return, GroupMixture, PopulationModel};

fn main() {
    let model = PopulationModel::symmetric(0.3, 0.8).unwrap();
    println!("random-choice return: {:.6}", random_choice_return(&model).unwrap());
    for ib in [0.31, 0.29, 0.28, 0.265, 0.25, 0.22, 0.2, 0.15, 0.1, 0.05, 0.01] {
        let beta = 1.0 / ib;
        let states = all_r0_states(&model, beta).unwrap();
        // uncoordinated continuation: antisymmetric root with smallest |delta|
        let cont = homogeneous_solver(&model, beta).unwrap().into_iter()
            .filter(|r| r.delta[0] > 0.0 && r.delta[1] < 0.0 && (r.delta[0] + r.delta[1]).abs() < 1e-6)
            .min_by(|a, b| a.delta[0].abs().total_cmp(&b.delta[0].abs()));
        let cont_r = cont.as_ref().map(|r| {
            let mix = [GroupMixture::single(r.delta[0]), GroupMixture::single(r.delta[1])];
            average_population_return(&model, r.d, &mix, beta).unwrap()
        });
        let coord: Vec<f64> = states.iter().filter(|s| s.coordinated == Some(true)).map(|s| s.avg_return).collect();
        let frag: Vec<f64> = states.iter().filter(|s| s.label() == "(S,S)").map(|s| s.avg_return).collect();
        println!("1/beta={ib:<6} n={} unc_cont={:?} (valid={:?}) coord={:?} ss={:?}",
            states.len(), cont_r, cont.as_ref().map(|c| c.valid), coord, frag);
    }
}
