//! Numerical laboratory for flows whose non-wandering sets combine expanding
//! attractors with isolated equilibria and periodic orbits.
//!
//! The crate builds a small family of explicit systems — suspensions of
//! hyperbolic torus maps and their derived modifications, an involution
//! quotient carrying a sphere attractor, a local periodic-orbit model,
//! gradient sphere flows, a surgered flow on the 3-sphere, and latitude
//! extensions to higher spheres — and the machinery to verify their
//! dynamical properties at desk scale: hybrid orbit integration with exact
//! seam events, tangent/variational transport, equilibrium and
//! periodic-orbit location, Lyapunov spectra, box-counting dimension,
//! trapping-region checks, orientability of the unstable bundle along
//! near-returns, and basin censuses.

pub mod analysis;
pub mod charts;
pub mod error;
pub mod exec;
pub mod flows;
pub mod maps;
pub mod orbit;
pub mod surfaces;

pub use charts::{
    quotient_canonical, torus_reduce, Atlas, BaseChart, Chart, ChartId, ChartedPoint, Coords,
    CylinderPoint, EmbeddedSpherePoint, LocalPoint, MappingTorusPoint, SphereQuotientPoint,
    TangentVector, TorusPoint2,
};
pub use error::{CoreError, Result};
