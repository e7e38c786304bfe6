//! Station clustering and trip link prediction for station-based bike sharing.
//!
//! The crate is organised as a pipeline:
//!
//! - [`ingest`] parses trip, station-status, weather and distance files and
//!   drops low-activity stations.
//! - [`demand`] reconstructs bike availability per station and day and turns
//!   it into the five-slot check-out profile used by geo-clustering.
//! - [`clustering`] holds K-Medoids, Geo-Clustering, T-Matrix generation,
//!   Transit-Clustering, the iterated AdaTC+ loop, the KM/SC baselines and the
//!   parameter-validation metrics.
//! - [`linkpred`] builds the station transition graph, samples positive and
//!   negative links, trains a two-layer mean-aggregator embedder with a link
//!   head, calibrates it with isotonic regression and evaluates it.
//! - [`synth`] generates seeded synthetic cities with planted structure.
//! - [`pipeline`] and [`cli`] glue the stages together.
//!
//! Runnable walkthroughs for each stage live in the crate's `examples/`
//! directory.

pub mod clustering;
pub mod demand;
pub mod error;
pub mod ingest;
pub mod linkpred;
pub mod output;
pub mod pipeline;
pub mod seed;
pub mod synth;

pub mod cli;

pub use error::{Error, Result};
pub use ingest::StationId;
