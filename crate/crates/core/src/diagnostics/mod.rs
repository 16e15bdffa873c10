//! Observables extracted from traces and marginals: Gaussian-comb fits,
//! power-law diffusion exponents, breathing correlations and maps of the
//! accelerating regions of phase space.

mod accel_map;
mod breathing;
mod comb;
mod diffusion;
mod lsq;
mod profile;

pub use accel_map::{acceleration_map, flagged_component_size, AccelMap, AccelMapRun, MapGrid, MapPoint};
pub use breathing::{breathing_score, BreathingScore};
pub use comb::{comb_fit, comb_model, CombFit, CombShape};
pub use diffusion::{diffusion_exponent, power_law_fit, DiffusionFit};
pub use profile::{histogram_marginal, AxisSpec, DistributionProfile};
