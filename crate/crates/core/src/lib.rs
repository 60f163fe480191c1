//! Variable-altitude Cox point process model of LEO satellite constellations.
//!
//! Orbits form a Poisson process on `[r_a, r_b] x [0, pi) x [0, pi)`
//! (radius, node longitude, inclination) with intensity
//! `lambda sin(phi) / (2 pi) nu(d rho) d phi d theta`; conditionally on the
//! orbits, each carries a Poisson number of satellites with mean `mu` at
//! uniform orbital angles. The crate provides
//!
//! * [`geometry`]: satellite coordinates, distances, visibility, caps and
//!   frame rotations;
//! * [`constellation`]: Cox, binomial and deterministic samplers;
//! * [`channel`]: path loss and fading;
//! * [`analytics`]: closed-form statistics evaluated by nested quadrature;
//! * [`simulate`]: the Monte Carlo engine used to cross-check them.

pub mod analytics;
pub mod channel;
pub mod constellation;
pub mod geometry;
pub mod quadrature;
pub mod simulate;
pub mod stats;

pub use analytics::{CurveKind, CurveRow, CurveTable};
pub use channel::{ChannelModel, FadingLaw};
pub use constellation::{AltitudeDistribution, ConstellationModel, CoxParams, Shell, Snapshot};
pub use geometry::{EarthFrame, Observer, Orbit, SatellitePos, SphericalCap, Vec3};
pub use quadrature::QuadratureSpec;
pub use simulate::{CoverageResult, SimSpec, Simulator, TrialRecord};

/// Version string embedded in output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
