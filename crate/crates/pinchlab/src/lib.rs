//! Numerical laboratory for comparison geometry on 2-D model manifolds with
//! pinched negative curvature: warped-product models, geodesic/Jacobi/Riccati
//! integration, comparison bounds, a geometric compactification with
//! its boundary metric, and empirical Holder regularity certification of
//! transition maps between compactifications.

pub mod comparison;
pub mod compactification;
pub mod distance;
pub mod error;
pub mod ode;
pub mod profile;
pub mod report;
pub mod geodesic;
pub mod jacobi;
pub mod riccati;
pub mod warp;

pub use error::{Error, Result};
pub use profile::{CurvatureFn, ModelConfig, PinchingProfile};
pub use warp::{solve_warp, HyperbolicModel, WarpedModel};
