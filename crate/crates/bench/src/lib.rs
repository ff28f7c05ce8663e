//! Shared inputs for the benchmarks.

use blockcount::{stream_rng, Design, ModelConfig, Realization, ThetaLaw};

/// Design-1 DCSBM draw with three communities, as in the simulation study.
pub fn planted(n: usize, seed: u64) -> Realization {
    let model = ModelConfig {
        design: Design::S1,
        k0: 3,
        n,
        rho: Some(5.0),
        theta_law: ThetaLaw::Uniform,
        membership_probs: None,
        seed,
        redraw_block: true,
    };
    model
        .generate(None, &mut stream_rng(seed, 0))
        .expect("valid benchmark model")
}
