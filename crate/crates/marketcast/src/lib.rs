//! Reconstructs probabilistic forecasts from prediction-market contract
//! prices, scores them against expert-hub and statistical baselines under
//! proper scoring rules with point-in-time ground truth, and quantifies
//! market inefficiencies.
//!
//! Modules follow the pipeline: [`ingest`] pulls or replays market data,
//! [`contracts`] turns contract prices into distributions over [`bins`],
//! [`surveillance`] supplies vintage-aware ground truth, [`baselines`]
//! produces hub and ARIMA comparators on the same bins, [`evaluation`]
//! scores and diagnoses, and [`pipeline`] orchestrates end to end.

pub mod baselines;
pub mod bins;
pub mod contracts;
pub mod evaluation;
pub mod ingest;
pub mod pipeline;
pub mod surveillance;
