//! Large-deviation rate estimation from samples: empirical MGF/CGF estimators,
//! exact Fenchel conjugates of piecewise-linear convex functions, Attouch-Wets
//! distances, Loynes exponents, relative-entropy oracles and seeded studies.

pub mod awtopology;
pub mod convexfn;
pub mod distributions;
pub mod entropy;
pub mod error;
pub mod estimators;
pub mod extreal;
pub mod fenchel;
pub mod grid;
pub mod loynes;
pub mod mc_harness;
pub mod numeric;

pub use convexfn::{epi_dist, make_fn, EpiPoint, ExtConvexFn, FnGrid};
pub use distributions::DistributionModel;
pub use entropy::DiscreteMeasure;
pub use error::{Error, Result};
pub use estimators::SampleBatch;
pub use extreal::ExtReal;
pub use grid::GridSpec;
