//! Fixtures shared by the criterion benchmarks in `benches/`.

use nashlab::pipeline::{setup, Setup};
use nashlab::{make_mu_a, make_ornstein_uhlenbeck, MeasureModel};

pub fn mu_a() -> MeasureModel {
    make_mu_a(1.5, 10.0).expect("valid model")
}

pub fn ou() -> MeasureModel {
    make_ornstein_uhlenbeck(8.0).expect("valid model")
}

pub fn prepared(model: &MeasureModel, n: usize) -> Setup {
    setup(model, n).expect("discretization succeeds")
}
