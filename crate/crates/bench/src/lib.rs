//! Shared fixtures for the criterion benches.

use krflow_core::flow::{init_flow, FlowParams, FlowState};
use krflow_core::radial::{Family, RadialPotential, DEFAULT_S_BUF, DEFAULT_S_MAX};

/// Perturbed benchmark state at the given grid size.
pub fn perturbed_state(n: usize, grid_n: usize) -> FlowState {
    let u = RadialPotential::make_family(
        n,
        Family::PerturbedModel { c: n as f64 + 1.0, eps: 0.05, center: 0.3, width: 0.1 },
        DEFAULT_S_MAX,
        DEFAULT_S_BUF,
        grid_n,
    )
    .expect("benchmark family");
    init_flow(
        u,
        FlowParams { grid_n, cfl_safety: 0.5, snapshot_cadence: 0.25 },
    )
    .expect("init")
}

pub fn model_potential(n: usize, c: f64) -> RadialPotential {
    RadialPotential::make_family(n, Family::ModelBall { c }, DEFAULT_S_MAX, DEFAULT_S_BUF, 256)
        .expect("model family")
}
