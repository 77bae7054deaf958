#![allow(dead_code)]

use aptf::datasets::{
    build_forecast_split, generate_synthetic, CorruptionScope, PipelineSpec, SplitData, SplitSpec,
    SyntheticSpec, WindowSpec,
};
use aptf::models::{init_model, ModelSpec, ModelState};
use aptf::Rng;

/// Small AR(1) forecasting problem with 20% corrupted timesteps.
pub fn small_forecast_data(seed: u64, length: usize, lookback: usize) -> SplitData {
    let spec = SyntheticSpec {
        length,
        ..SyntheticSpec::default()
    };
    let table = generate_synthetic(&mut Rng::new(seed), &spec).unwrap();
    let pipeline = PipelineSpec {
        window: WindowSpec::forecast(lookback, 1),
        split: SplitSpec::default(),
        scope: CorruptionScope::Window,
        clean_eval: true,
        normalize: true,
    };
    build_forecast_split(&table, &pipeline).unwrap()
}

pub fn linear(lookback: usize, seed: u64) -> ModelState {
    let spec = ModelSpec::LinearForecaster {
        lookback,
        horizon: 1,
        variables: 1,
    };
    init_model(spec, &mut Rng::new(seed)).unwrap()
}

pub fn mlp(lookback: usize, seed: u64) -> ModelState {
    let spec = ModelSpec::MlpForecaster {
        lookback,
        horizon: 1,
        variables: 1,
        hidden: 6,
    };
    init_model(spec, &mut Rng::new(seed)).unwrap()
}
