//! Shared fixtures for the benchmarks.

use aptf::datasets::{
    build_forecast_split, generate_synthetic, CorruptionScope, PipelineSpec, SplitData, SplitSpec,
    SyntheticSpec, WindowSpec,
};
use aptf::models::{init_model, ModelSpec, ModelState};
use aptf::Rng;

/// Heavy-tailed losses: mostly small, with a corrupted fraction scaled up.
pub fn batch_losses(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = Rng::new(seed);
    (0..n)
        .map(|_| {
            let base = rng.uniform_range(0.0, 1.0);
            if rng.uniform_range(0.0, 1.0) < 0.2 {
                base * 64.0
            } else {
                base
            }
        })
        .collect()
}

pub fn forecast_data(length: usize, lookback: usize) -> SplitData {
    let spec = SyntheticSpec {
        length,
        ..SyntheticSpec::default()
    };
    let table = generate_synthetic(&mut Rng::new(0), &spec).expect("valid synthetic spec");
    let pipeline = PipelineSpec {
        window: WindowSpec::forecast(lookback, 1),
        split: SplitSpec::default(),
        scope: CorruptionScope::Window,
        clean_eval: true,
        normalize: true,
    };
    build_forecast_split(&table, &pipeline).expect("valid pipeline")
}

pub fn mlp(lookback: usize) -> ModelState {
    let spec = ModelSpec::MlpForecaster {
        lookback,
        horizon: 1,
        variables: 1,
        hidden: 32,
    };
    init_model(spec, &mut Rng::new(1)).expect("valid model spec")
}
