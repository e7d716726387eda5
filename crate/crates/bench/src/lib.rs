//! Shared fixtures for the engine benchmarks.

use airside_core::calibration::fit_correspondences;
use airside_core::sim::reference::{reference_regions, reference_scenario};
use airside_core::sim::{generate, ScenarioConfig, ScenarioOutput};
use airside_core::{CalibrationModel, RegionGraph};

pub struct Fixture {
    pub config: ScenarioConfig,
    pub graph: RegionGraph,
    pub output: ScenarioOutput,
    pub model: CalibrationModel,
}

/// The reference scenario simulated with `seed` and its fitted degree-5 model.
pub fn reference_fixture(seed: u64) -> Fixture {
    let config = reference_scenario(seed);
    let graph = reference_regions(&config.camera);
    let output = generate(&config, &graph).expect("reference scenario generates");
    let model = fit_correspondences(&output.correspondences, 5, config.camera.frame())
        .expect("reference pairs fit");
    Fixture {
        config,
        graph,
        output,
        model,
    }
}
