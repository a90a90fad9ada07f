//! Clustered-data simulation studies: data generation, replicate loops and
//! rejection-rate summaries with Wilson intervals.

mod generate;
mod interval;
mod run;
mod scenario;

pub use generate::{simulate_cluster_dataset, simulate_detailed, SimulatedData};
pub use interval::rejection_interval;
pub use run::{run_scenario, MethodResult, SimResult};
pub use scenario::{Method, NuisanceMode, Scenario, LIMITATION_NOTE};
