//! Multi-rank runs over the loopback backend reproduce the single-process run.

use boltzmann_core::config::parse_config;
use boltzmann_core::run::{RunRecord, Simulation};

fn bits(r: &RunRecord) -> Vec<u64> {
    r.moments
        .iter()
        .flat_map(|m| m.to_array())
        .chain(r.ledger.iter().map(|l| l.mass))
        .chain(r.final_state.iter().copied())
        .map(f64::to_bits)
        .collect()
}

fn check(text: &str) {
    let sim = Simulation::new(parse_config(text).unwrap()).unwrap();
    let solo = bits(&sim.run_loopback(1).unwrap());
    for ranks in [2, 3, 4] {
        assert!(bits(&sim.run_loopback(ranks).unwrap()) == solo, "{ranks} ranks differ");
    }
}

#[test]
fn free_streaming_halo_matches_single_process() {
    check("N=4\nlambda=0\nscenario=sudden_cooling\nepsilon=inf\nend_time=1\nfine_length=1\nfine_per_mfp=4\ndomain_length=5\ncoarse_per_mfp=1\n");
}

#[test]
fn no_inflow_far_end_matches_single_process() {
    check("N=4\nlambda=1\nscenario=sudden_heating\nfar_boundary=no_inflow\nend_time=0.5\nfine_length=1\nfine_per_mfp=4\ndomain_length=5\ncoarse_per_mfp=1\n");
}
