//! Benchmarks for the fitting and forecasting paths live under `benches/`.
