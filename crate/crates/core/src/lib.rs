//! A recursive-dynamic, multi-sector, multi-region general-equilibrium trade
//! simulator with trade-mediated technology diffusion.
//!
//! Productivity in each region-sector pair follows a Fréchet distribution
//! whose location parameter evolves endogenously: producers draw insights
//! from their suppliers, so import trade shares and intermediate cost shares
//! jointly determine the source distribution of new ideas. On top of the
//! static Bertrand/Fréchet trade core this crate provides:
//!
//! * [`economy`] — the immutable model definition, validation, and share
//!   calibration from a base-year accounting snapshot;
//! * [`equilibrium`] — one period's static general equilibrium (prices, trade
//!   shares, incomes, profits, tariff revenue, market clearing);
//! * [`dynamics`] — capital accumulation, the idea-diffusion law of motion,
//!   and multi-period simulation paths;
//! * [`diffusion`] — the diffusion objective, planner-optimal trade shares,
//!   and the between-sector distortion statistic;
//! * [`calibration`] — initial productivity grids, profit-income rebalancing,
//!   growth-moment matching for the diffusion sensitivity, and bloc
//!   assignment from voting similarity;
//! * [`scenario`] — decoupling policy experiments and comparison reports;
//! * [`io`] — CSV/JSON readers and writers for all external file formats.

pub mod calibration;
pub mod diffusion;
pub mod dynamics;
pub mod economy;
pub mod equilibrium;
pub mod grid;
pub mod io;
pub mod scenario;
pub mod toy;

mod math;

pub use economy::{BaselineFlows, Economy, StateVector};
pub use equilibrium::{EquilibriumSolution, PolicyInputs, SolveOptions};
pub use scenario::{ComparisonReport, PolicyShock};
