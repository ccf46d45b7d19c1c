//! Deterministic, seedable round-based simulator for clustered wireless
//! sensor networks.
//!
//! Five cluster-formation strategies (LEACH, HEED, EECS, K-means and fuzzy
//! C-means) run over one shared first-order radio model. A run deploys the
//! nodes, forms clusters every round, charges setup and steady-state traffic,
//! and records deaths and base-station deliveries until the network is dead.
//!
//! ```
//! use wsnsim::{run_simulation, NetworkConfig, Protocol};
//!
//! let config = NetworkConfig { initial_energy: 0.01, ..NetworkConfig::default() };
//! let result = run_simulation(&config, &Protocol::from_name("leach").unwrap(), 10_000).unwrap();
//! assert!(result.first_death_round <= result.last_death_round);
//! ```

pub mod engine;
pub mod error;
pub mod metrics;
pub mod model;
pub mod partition;
pub mod protocols;
pub mod rng;
pub mod sweep;

pub use engine::{
    run_from_state, run_round, run_simulation, time_of, ExperimentResult, FuzzyParams,
    KmeansParams, Protocol, RoundReport, SimState,
};
pub use error::{Error, Result};
pub use model::{deploy_nodes, euclidean_distance, NetworkConfig, Node, Position, RadioModel};
