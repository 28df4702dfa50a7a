pub mod combinations;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod landscape;
pub mod model;
pub mod patterns;
pub mod priors;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod verify;

pub use dynamics::{descend, DescentPolicy, DescentResult};
pub use energy::{energy_full, OverlapState};
pub use error::{Error, Result};
pub use model::{exponents, ExponentSet, Given, LoadParams};
pub use patterns::{flip, hamming, FlipSet, PatternMatrix, SpinState};
