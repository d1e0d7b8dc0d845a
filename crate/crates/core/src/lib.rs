//! Piecewise-deterministic Markov process samplers.
//!
//! The event times of a PDMP come from thinning a piecewise-constant
//! envelope of the event rate. The envelope is rebuilt on a look-ahead window
//! `[0, t_max]` whose length adapts while the chain runs: it grows whenever
//! the window is exhausted without an event and shrinks whenever a proposal is
//! rejected.
//!
//! ```
//! use pdmp::models::ZigZag;
//! use pdmp::sampler::{run, SamplerConfig};
//! use pdmp::stats::path_mean;
//! use pdmp::targets::StandardGaussian;
//! use pdmp::models::PdmpModel;
//!
//! let target = StandardGaussian::new(2);
//! let config = SamplerConfig { n_events: 2_000, n_segments: 10, seed: 3, ..Default::default() };
//! let (skeleton, stats) = run(&ZigZag, &target, &config).unwrap();
//! let mean = path_mean(&skeleton, ZigZag.flow()).unwrap();
//! assert_eq!(skeleton.events.len(), 2_000);
//! assert!(stats.thinning_ar() > 0.0 && mean.len() == 2);
//! ```

pub mod bounds;
pub mod config;
pub mod diff;
pub mod error;
pub mod events;
pub mod experiments;
pub mod models;
pub mod process;
pub mod rng;
pub mod runner;
pub mod sampler;
pub mod stats;
pub mod targets;

pub use error::{Error, Result};
