//! Cross-validation of the state-class engine against the discretized
//! brute-force oracle: on randomized small nets with integer bounds, the
//! sets of reachable discrete states must coincide exactly.

use tpnsec_core::compile::CompiledNet;
use tpnsec_core::testkit::{engine_reachable, gen_net, oracle_reachable, GenProfile};

// fast regression slice; the acceptance suite runs the full 200-sample
// check at the same budgets
const SAMPLES: usize = 60;
const CONFIG_BUDGET: usize = 60_000;
const CLASS_BUDGET: usize = 60_000;

#[test]
fn engine_matches_discretized_oracle_on_random_nets() {
    let profile = GenProfile::default();
    let mut accepted = 0usize;
    let mut seed = 0u64;
    let mut discarded = 0usize;
    while accepted < SAMPLES {
        assert!(
            seed < 4_000,
            "only {} of {} samples accepted after {} seeds",
            accepted,
            SAMPLES,
            seed
        );
        let net = gen_net(seed, &profile);
        seed += 1;
        let compiled = CompiledNet::compile(&net).expect("generated nets validate");
        let Some(oracle) = oracle_reachable(&compiled, CONFIG_BUDGET) else {
            discarded += 1;
            continue;
        };
        let Some(engine) = engine_reachable(&compiled, CLASS_BUDGET) else {
            discarded += 1;
            continue;
        };
        if oracle != engine {
            let only_oracle: Vec<_> = oracle.difference(&engine).take(3).collect();
            let only_engine: Vec<_> = engine.difference(&oracle).take(3).collect();
            panic!(
                "seed {}: reachable-state mismatch\nnet: {:#?}\noracle-only: {:?}\nengine-only: {:?}",
                seed - 1,
                net,
                only_oracle,
                only_engine
            );
        }
        accepted += 1;
    }
    eprintln!(
        "oracle equivalence: {} samples matched ({} divergent/oversized nets discarded)",
        accepted, discarded
    );
}
