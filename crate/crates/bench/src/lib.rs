//! Shared fixtures for the criterion benches.

use orbitcox_core::{AltitudeDistribution, CoxParams};

/// Orbits uniform on 7000-7050 km, 72 orbits of 22 satellites on average.
pub fn narrow_band() -> CoxParams {
    CoxParams {
        lambda: 72.0,
        mu: 22.0,
        nu: AltitudeDistribution::uniform(7000.0, 7050.0),
    }
}

/// Same intensity, orbits spread over 7000-8500 km.
pub fn wide_band() -> CoxParams {
    CoxParams {
        lambda: 72.0,
        mu: 22.0,
        nu: AltitudeDistribution::uniform(7000.0, 8500.0),
    }
}
