//! Deterministic spherical and orbital geometry.
//!
//! Conventions: the Earth is a sphere of radius `r_e` centred at the origin,
//! the xy-plane is the equator and the x-axis is the longitude reference. An
//! orbit is a great circle of radius `rho` described by the longitude of its
//! ascending node `theta` and its inclination `phi`. Orbits are stored
//! undirected, with `theta` and `phi` both in `[0, pi)`. The typical observer
//! sits at the north pole `(0, 0, r_e)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// Mean Earth radius in km.
pub const DEFAULT_EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("earth radius must be positive and finite, got {0}")]
    EarthRadius(f64),
    #[error("orbit radius {radius} km must exceed the earth radius {earth_radius} km")]
    OrbitRadius { radius: f64, earth_radius: f64 },
    #[error("{name} = {value} rad is outside [0, pi)")]
    AngleRange { name: &'static str, value: f64 },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("cap distance {d} km is outside [{lo}, {hi}] for shell radius {radius} km")]
    CapDistance { d: f64, lo: f64, hi: f64, radius: f64 },
}

/// Minimal 3-vector in km.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Self) -> Self {
        Self::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn normalized(self) -> Self {
        self * (1.0 / self.norm())
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, k: f64) -> Vec3 {
        Vec3::new(self.x * k, self.y * k, self.z * k)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// The reference sphere. Everything that compares a radius against the
/// Earth goes through one of these.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarthFrame {
    earth_radius: f64,
}

impl Default for EarthFrame {
    fn default() -> Self {
        Self {
            earth_radius: DEFAULT_EARTH_RADIUS_KM,
        }
    }
}

impl EarthFrame {
    pub fn new(earth_radius: f64) -> Result<Self, GeometryError> {
        if !(earth_radius.is_finite() && earth_radius > 0.0) {
            return Err(GeometryError::EarthRadius(earth_radius));
        }
        Ok(Self { earth_radius })
    }

    pub fn earth_radius(&self) -> f64 {
        self.earth_radius
    }

    /// Builds an orbit after checking it clears the Earth.
    pub fn orbit(&self, radius: f64, longitude: f64, inclination: f64) -> Result<Orbit, GeometryError> {
        let orbit = Orbit::new(radius, longitude, inclination)?;
        self.check_radius(radius)?;
        Ok(orbit)
    }

    pub fn check_radius(&self, radius: f64) -> Result<(), GeometryError> {
        if !radius.is_finite() {
            return Err(GeometryError::NonFinite("orbit radius"));
        }
        if radius <= self.earth_radius {
            return Err(GeometryError::OrbitRadius {
                radius,
                earth_radius: self.earth_radius,
            });
        }
        Ok(())
    }

    /// Slant distance from an observer to the horizon of a shell of radius `radius`.
    pub fn horizon_distance(&self, radius: f64) -> f64 {
        ((radius - self.earth_radius) * (radius + self.earth_radius)).max(0.0).sqrt()
    }

    pub fn north_pole(&self) -> Observer {
        Observer {
            latitude: FRAC_PI_2,
            longitude: 0.0,
            cartesian: Vec3::new(0.0, 0.0, self.earth_radius),
        }
    }

    /// Observer at geographic latitude/longitude in radians.
    pub fn observer(&self, latitude: f64, longitude: f64) -> Result<Observer, GeometryError> {
        if !(latitude.is_finite() && longitude.is_finite()) {
            return Err(GeometryError::NonFinite("observer coordinates"));
        }
        let (sin_lat, cos_lat) = latitude.sin_cos();
        let (sin_lon, cos_lon) = longitude.sin_cos();
        Ok(Observer {
            latitude,
            longitude,
            cartesian: Vec3::new(cos_lat * cos_lon, cos_lat * sin_lon, sin_lat) * self.earth_radius,
        })
    }
}

/// Circular orbit `l(rho, theta, phi)` with cached trigonometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orbit {
    radius: f64,
    longitude: f64,
    inclination: f64,
    sin_lon: f64,
    cos_lon: f64,
    sin_inc: f64,
    cos_inc: f64,
}

impl Orbit {
    /// Checks the angle ranges only; use [`EarthFrame::orbit`] to also check
    /// the radius against the Earth.
    pub fn new(radius: f64, longitude: f64, inclination: f64) -> Result<Self, GeometryError> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GeometryError::NonFinite("orbit radius"));
        }
        for (name, value) in [("longitude", longitude), ("inclination", inclination)] {
            if !(0.0..PI).contains(&value) {
                return Err(GeometryError::AngleRange { name, value });
            }
        }
        let (sin_lon, cos_lon) = longitude.sin_cos();
        let (sin_inc, cos_inc) = inclination.sin_cos();
        Ok(Self {
            radius,
            longitude,
            inclination,
            sin_lon,
            cos_lon,
            sin_inc,
            cos_inc,
        })
    }

    /// Converts a directed orbit (ascending node anywhere in `[0, 2pi)`,
    /// inclination in `[0, pi]`) into the stored undirected form.
    ///
    /// Returns the orbit together with a map taking the directed orbital
    /// angle to the orbital angle on the stored orbit. Orbit `(theta, phi)`
    /// traced at `omega` is the same point as orbit `(theta - pi, pi - phi)`
    /// traced at `pi - omega`.
    pub fn from_directed(
        radius: f64,
        node_longitude: f64,
        inclination: f64,
    ) -> Result<(Self, AngleMap), GeometryError> {
        if !(node_longitude.is_finite() && inclination.is_finite()) {
            return Err(GeometryError::NonFinite("orbit angles"));
        }
        if !(0.0..=PI).contains(&inclination) {
            return Err(GeometryError::AngleRange {
                name: "inclination",
                value: inclination,
            });
        }
        let node = node_longitude.rem_euclid(TAU);
        // Equatorial orbits: the node is meaningless, fold it into omega.
        if inclination == 0.0 {
            return Ok((Self::new(radius, 0.0, 0.0)?, AngleMap { sign: 1.0, shift: node }));
        }
        if inclination == PI {
            return Ok((Self::new(radius, 0.0, 0.0)?, AngleMap { sign: -1.0, shift: node }));
        }
        if node < PI {
            Ok((Self::new(radius, node, inclination)?, AngleMap { sign: 1.0, shift: 0.0 }))
        } else {
            let longitude = (node - PI).clamp(0.0, PI.next_down());
            Ok((
                Self::new(radius, longitude, PI - inclination)?,
                AngleMap { sign: -1.0, shift: PI },
            ))
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn longitude(&self) -> f64 {
        self.longitude
    }

    pub fn inclination(&self) -> f64 {
        self.inclination
    }

    pub fn sin_inclination(&self) -> f64 {
        self.sin_inc
    }

    /// Unit normal by the right-hand rule of increasing orbital angle.
    pub fn normal(&self) -> Vec3 {
        Vec3::new(
            self.sin_lon * self.sin_inc,
            -self.cos_lon * self.sin_inc,
            self.cos_inc,
        )
    }

    /// Unit vector to the ascending node (orbital angle 0).
    pub fn node_direction(&self) -> Vec3 {
        Vec3::new(self.cos_lon, self.sin_lon, 0.0)
    }

    /// Rebuilds an orbit from its unit normal, and returns it with the
    /// orbital angle of `point` on it.
    pub fn from_normal_and_point(radius: f64, normal: Vec3, point: Vec3) -> Result<(Self, f64), GeometryError> {
        let n = normal.normalized();
        let p = point.normalized();
        if n.x.hypot(n.y) < 1e-15 {
            // Prograde or retrograde equatorial orbit.
            let prograde = n.z > 0.0;
            let (orbit, map) = Self::from_directed(radius, 0.0, if prograde { 0.0 } else { PI })?;
            let azimuth = p.y.atan2(p.x);
            return Ok((orbit, map.apply(if prograde { azimuth } else { -azimuth })));
        }
        let inclination = n.z.clamp(-1.0, 1.0).acos();
        let node = n.x.atan2(-n.y);
        let node_dir = Vec3::new(node.cos(), node.sin(), 0.0);
        let omega = p.dot(n.cross(node_dir)).atan2(p.dot(node_dir));
        let (orbit, map) = Self::from_directed(radius, node, inclination)?;
        Ok((orbit, map.apply(omega)))
    }
}

/// Affine map `omega -> sign * omega + shift (mod 2pi)` between orbital angle
/// parametrisations of the same circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleMap {
    sign: f64,
    shift: f64,
}

impl AngleMap {
    pub fn apply(&self, omega: f64) -> f64 {
        wrap_tau(self.shift + self.sign * omega)
    }
}

/// Wraps an angle into `[0, 2pi)`.
pub fn wrap_tau(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    if a >= TAU {
        0.0
    } else {
        a
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatellitePos {
    pub orbit: Orbit,
    pub orbital_angle: f64,
    pub cartesian: Vec3,
}

impl SatellitePos {
    pub fn radius(&self) -> f64 {
        self.orbit.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observer {
    pub latitude: f64,
    pub longitude: f64,
    pub cartesian: Vec3,
}

/// Position of the satellite at orbital angle `omega` on `orbit`.
///
/// The point lies at height `rho sin(omega) sin(phi)` above the equator and
/// at horizontal radius `rho sqrt(cos^2 omega + sin^2 omega cos^2 phi)`, in
/// the direction `theta + atan2(sin omega cos phi, cos omega)`. The
/// two-argument form keeps the map continuous in `omega`.
pub fn satellite_position(orbit: &Orbit, orbital_angle: f64) -> SatellitePos {
    let rho = orbit.radius;
    let (sin_w, cos_w) = orbital_angle.sin_cos();
    let along = sin_w * orbit.cos_inc;
    let planar = cos_w.hypot(along);
    let (x, y) = if planar > 0.0 {
        // cos/sin of the in-plane angle measured from the node.
        let (c, s) = (cos_w / planar, along / planar);
        let r_xy = rho * planar;
        (
            r_xy * (c * orbit.cos_lon - s * orbit.sin_lon),
            r_xy * (s * orbit.cos_lon + c * orbit.sin_lon),
        )
    } else {
        (0.0, 0.0)
    };
    SatellitePos {
        orbit: *orbit,
        orbital_angle,
        cartesian: Vec3::new(x, y, rho * sin_w * orbit.sin_inc),
    }
}

/// Distance from `(0, 0, r_e)` to the satellite at `orbital_angle`; it does
/// not depend on the node longitude.
pub fn distance_to_north_pole_observer(frame: &EarthFrame, orbit: &Orbit, orbital_angle: f64) -> f64 {
    let rho = orbit.radius;
    let re = frame.earth_radius;
    (rho * rho - 2.0 * rho * re * orbital_angle.sin() * orbit.sin_inc + re * re)
        .max(0.0)
        .sqrt()
}

/// Line-of-sight visibility with a closed horizon: the satellite is visible
/// when its distance is at most `sqrt(rho^2 - r_e^2)`.
pub fn is_visible(frame: &EarthFrame, sat: &SatellitePos, obs: &Observer) -> bool {
    sat.cartesian.distance(obs.cartesian) <= frame.horizon_distance(sat.radius())
}

/// Orbital angles visible from the north pole on an orbit of radius `rho`
/// and inclination `phi`: the closed interval
/// `[asin(r_e / (rho sin phi)), pi - asin(r_e / (rho sin phi))]`, or `None`
/// when the orbit stays below the horizon.
pub fn visible_orbital_angles(frame: &EarthFrame, rho: f64, inclination: f64) -> Option<(f64, f64)> {
    let reach = rho * inclination.sin();
    let re = frame.earth_radius;
    if !(reach >= re) || reach <= 0.0 {
        return None;
    }
    let lo = (re / reach).min(1.0).asin();
    Some((lo, PI - lo))
}

/// Cap of the shell of radius `rho` within distance `d` of the north-pole
/// observer and above its horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalCap {
    shell_radius: f64,
    max_distance: f64,
    cos_half_angle: f64,
    half_angle: f64,
}

impl SphericalCap {
    pub fn new(frame: &EarthFrame, shell_radius: f64, max_distance: f64) -> Result<Self, GeometryError> {
        frame.check_radius(shell_radius)?;
        let re = frame.earth_radius;
        let lo = shell_radius - re;
        let hi = frame.horizon_distance(shell_radius);
        if !(max_distance >= lo && max_distance <= hi) {
            return Err(GeometryError::CapDistance {
                d: max_distance,
                lo,
                hi,
                radius: shell_radius,
            });
        }
        let cos_half_angle = ((shell_radius * shell_radius + re * re - max_distance * max_distance)
            / (2.0 * shell_radius * re))
            .clamp(re / shell_radius, 1.0);
        Ok(Self {
            shell_radius,
            max_distance,
            cos_half_angle,
            half_angle: cos_half_angle.acos(),
        })
    }

    /// Cap bounded by the observer's horizon.
    pub fn horizon(frame: &EarthFrame, shell_radius: f64) -> Result<Self, GeometryError> {
        Self::new(frame, shell_radius, frame.horizon_distance(shell_radius))
    }

    pub fn shell_radius(&self) -> f64 {
        self.shell_radius
    }

    pub fn max_distance(&self) -> f64 {
        self.max_distance
    }

    pub fn half_angle(&self) -> f64 {
        self.half_angle
    }

    pub fn cos_half_angle(&self) -> f64 {
        self.cos_half_angle
    }
}

/// Length of the arc an orbit of inclination `inclination` cuts from `cap`.
///
/// `2 rho asin(sqrt(1 - cos^2(xi) csc^2(phi)))`, and zero once
/// `cos^2(xi) csc^2(phi) >= 1`, which also covers equatorial orbits.
pub fn cap_orbit_arc_length(cap: &SphericalCap, inclination: f64) -> f64 {
    2.0 * cap.shell_radius * half_arc_angle(cap.cos_half_angle, inclination.sin().abs())
}

/// Half the central angle of the arc, `acos(cos(xi) / sin(phi))`, computed
/// without cancellation near tangency.
pub(crate) fn half_arc_angle(cos_half_angle: f64, sin_inclination: f64) -> f64 {
    if sin_inclination <= 0.0 {
        return 0.0;
    }
    let c = cos_half_angle / sin_inclination;
    if c >= 1.0 {
        return 0.0;
    }
    ((1.0 - c) * (1.0 + c)).sqrt().atan2(c)
}

/// Proper rotation matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    m: [[f64; 3]; 3],
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn about_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            m: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn about_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            m: [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]],
        }
    }

    pub fn then(&self, next: &Rotation) -> Rotation {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| next.m[i][k] * self.m[k][j]).sum();
            }
        }
        Rotation { m }
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.m;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        self.m
    }

    /// Re-expresses an orbit in the rotated frame, returning the rotated
    /// orbit and the map from old to new orbital angles.
    pub fn rotate_orbit(&self, orbit: &Orbit) -> Result<(Orbit, f64), GeometryError> {
        let normal = self.apply(orbit.normal());
        let node = self.apply(orbit.node_direction());
        // Orbital angle of the old node on the rotated orbit.
        Orbit::from_normal_and_point(orbit.radius, normal, node)
    }

    pub fn rotate_satellite(&self, sat: &SatellitePos) -> Result<SatellitePos, GeometryError> {
        let (orbit, _) = self.rotate_orbit(&sat.orbit)?;
        let cartesian = self.apply(sat.cartesian);
        let (_, orbital_angle) = Orbit::from_normal_and_point(orbit.radius, orbit.normal(), cartesian)?;
        Ok(SatellitePos {
            orbit,
            orbital_angle,
            cartesian,
        })
    }
}

/// Rotation carrying `obs` to the north pole `(0, 0, r_e)`.
///
/// Built as `Rz(lon) Ry(lat - pi/2) Rz(-lon)`, the rotation about the axis
/// orthogonal to both points; it is the identity for an observer already at
/// the north pole whatever its nominal longitude.
pub fn rotate_frame_to_observer(obs: &Observer) -> Rotation {
    let lat = obs.cartesian.z.atan2(obs.cartesian.x.hypot(obs.cartesian.y));
    if lat == FRAC_PI_2 {
        return Rotation::IDENTITY;
    }
    let lon = obs.cartesian.y.atan2(obs.cartesian.x);
    Rotation::about_z(-lon)
        .then(&Rotation::about_y(lat - FRAC_PI_2))
        .then(&Rotation::about_z(lon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const RE: f64 = DEFAULT_EARTH_RADIUS_KM;

    fn frame() -> EarthFrame {
        EarthFrame::default()
    }

    fn rx(a: f64) -> [[f64; 3]; 3] {
        let (s, c) = a.sin_cos();
        [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]
    }

    fn rz(a: f64) -> [[f64; 3]; 3] {
        let (s, c) = a.sin_cos();
        [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
    }

    fn mul(m: [[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|i| m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2])
    }

    /// Circle in the xy-plane tilted by the inclination, then turned to the node.
    fn rotation_oracle(rho: f64, theta: f64, phi: f64, omega: f64) -> [f64; 3] {
        mul(rz(theta), mul(rx(phi), [rho * omega.cos(), rho * omega.sin(), 0.0]))
    }

    #[test]
    fn polar_orbit_positions() {
        let o = frame().orbit(7000.0, 0.0, FRAC_PI_2).unwrap();
        let top = satellite_position(&o, FRAC_PI_2).cartesian;
        assert!(top.x.abs() < 1e-9 && top.y.abs() < 1e-9);
        assert!((top.z - 7000.0).abs() < 1e-9);
        let node = satellite_position(&o, 0.0).cartesian;
        assert!((node.x - 7000.0).abs() < 1e-9 && node.y.abs() < 1e-9 && node.z.abs() < 1e-9);
    }

    #[test]
    fn position_matches_rotation_oracle() {
        let o = frame().orbit(6896.0, 1.0, 0.925).unwrap();
        let p = satellite_position(&o, 2.3).cartesian;
        let q = rotation_oracle(6896.0, 1.0, 0.925, 2.3);
        for (a, b) in [p.x, p.y, p.z].iter().zip(q) {
            assert!((a - b).abs() <= 1e-9 * 6896.0, "{a} vs {b}");
        }
    }

    #[test]
    fn zenith_and_node_distances() {
        let f = frame();
        let o = f.orbit(7000.0, 0.0, FRAC_PI_2).unwrap();
        assert!((distance_to_north_pole_observer(&f, &o, FRAC_PI_2) - 629.0).abs() < 1e-9);
        let o2 = f.orbit(7000.0, 0.3, 0.8).unwrap();
        let expect = (7000.0f64.powi(2) + RE * RE).sqrt();
        assert!((distance_to_north_pole_observer(&f, &o2, 0.0) - expect).abs() < 1e-9);
    }

    #[test]
    fn distance_matches_cartesian_norm() {
        let f = frame();
        let o = f.orbit(7050.0, 2.0, 1.2).unwrap();
        let cart = satellite_position(&o, 0.7).cartesian.distance(f.north_pole().cartesian);
        let closed = distance_to_north_pole_observer(&f, &o, 0.7);
        assert!((cart - closed).abs() / closed < 1e-9);
    }

    #[test]
    fn visibility_cases() {
        let f = frame();
        let np = f.north_pole();
        let o = f.orbit(7000.0, 0.0, FRAC_PI_2).unwrap();
        assert!(is_visible(&f, &satellite_position(&o, FRAC_PI_2), &np));
        assert!(!is_visible(&f, &satellite_position(&o, 1.5 * PI), &np));
        // Exactly on the horizon plane z = r_e.
        let h = f.horizon_distance(7000.0);
        let boundary = SatellitePos {
            orbit: o,
            orbital_angle: 0.0,
            cartesian: Vec3::new(h, 0.0, RE),
        };
        assert!(is_visible(&f, &boundary, &np));
    }

    #[test]
    fn visible_interval_matches_predicate() {
        let f = frame();
        let np = f.north_pole();
        for &(rho, phi) in &[(7000.0, 1.3), (7500.0, 1.2), (7500.0, 2.0), (8000.0, FRAC_PI_2)] {
            let (lo, hi) = visible_orbital_angles(&f, rho, phi).unwrap();
            let o = f.orbit(rho, 0.4, phi).unwrap();
            for k in 0..2000 {
                let w = TAU * (k as f64 + 0.5) / 2000.0;
                let inside = w >= lo && w <= hi;
                let vis = is_visible(&f, &satellite_position(&o, w), &np);
                let margin = (w - lo).abs().min((w - hi).abs());
                if margin > 1e-9 {
                    assert_eq!(inside, vis, "rho={rho} phi={phi} w={w}");
                }
            }
        }
        assert!(visible_orbital_angles(&f, 7000.0, 0.3).is_none());
        assert!(visible_orbital_angles(&f, 7000.0, 0.0).is_none());
    }

    #[test]
    fn degenerate_cap_has_no_arc() {
        let f = frame();
        let cap = SphericalCap::new(&f, 7000.0, 629.0).unwrap();
        for k in 0..50 {
            let phi = PI * k as f64 / 50.0;
            assert_eq!(cap_orbit_arc_length(&cap, phi), 0.0);
        }
    }

    #[test]
    fn polar_orbit_arc_is_twice_rho_xi() {
        let f = frame();
        let cap = SphericalCap::new(&f, 7000.0, 1500.0).unwrap();
        let arc = cap_orbit_arc_length(&cap, FRAC_PI_2);
        assert!((arc - 2.0 * 7000.0 * cap.half_angle()).abs() < 1e-9);
    }

    fn discretized_arc(rho: f64, d: f64, phi: f64, n: usize) -> f64 {
        let inside = (0..n)
            .filter(|&k| {
                let p = rotation_oracle(rho, 0.0, phi, TAU * (k as f64 + 0.5) / n as f64);
                (p[0] * p[0] + p[1] * p[1] + (p[2] - RE).powi(2)).sqrt() <= d
            })
            .count();
        TAU * rho * inside as f64 / n as f64
    }

    #[test]
    fn arc_length_matches_discretized_circle() {
        let f = frame();
        let cap = SphericalCap::new(&f, 7000.0, 1500.0).unwrap();
        // phi = 1.3 passes outside this cap entirely.
        assert_eq!(cap_orbit_arc_length(&cap, 1.3), 0.0);
        assert_eq!(discretized_arc(7000.0, 1500.0, 1.3, 1_000_000), 0.0);

        let arc = cap_orbit_arc_length(&cap, 1.45);
        let oracle = discretized_arc(7000.0, 1500.0, 1.45, 1_000_000);
        assert!((arc - oracle).abs() / arc < 1e-4, "{arc} vs {oracle}");
        // 1e7-point discretization, frozen.
        assert!((arc - 2311.762317).abs() / arc < 1e-4, "{arc}");
    }

    #[test]
    fn cap_rejects_out_of_range_distance() {
        let f = frame();
        assert!(SphericalCap::new(&f, 7000.0, 600.0).is_err());
        assert!(SphericalCap::new(&f, 7000.0, 3100.0).is_err());
        assert!(SphericalCap::new(&f, 7000.0, f.horizon_distance(7000.0)).is_ok());
    }

    #[test]
    fn north_pole_rotation_is_identity() {
        let f = frame();
        assert!(rotate_frame_to_observer(&f.north_pole()).is_identity());
        let np_odd_lon = f.observer(FRAC_PI_2, 1.2).unwrap();
        let r = rotate_frame_to_observer(&np_odd_lon);
        let v = Vec3::new(1.0, 2.0, 3.0);
        assert!(r.apply(v).distance(v) < 1e-12);
    }

    #[test]
    fn south_pole_rotation_preserves_distances() {
        let f = frame();
        let sp = f.observer(-FRAC_PI_2, 0.0).unwrap();
        let r = rotate_frame_to_observer(&sp);
        let mapped = r.apply(sp.cartesian);
        assert!(mapped.distance(Vec3::new(0.0, 0.0, RE)) < 1e-9);
        let pts = [Vec3::new(7000.0, 0.0, 0.0), Vec3::new(0.0, -6900.0, 100.0), Vec3::new(1.0, 2.0, -7100.0)];
        for p in pts {
            let before = p.distance(sp.cartesian);
            let after = r.apply(p).distance(Vec3::new(0.0, 0.0, RE));
            assert!((before - after).abs() / before < 1e-12);
        }
    }

    #[test]
    fn rotated_satellite_keeps_orbit_consistency() {
        let f = frame();
        let obs = f.observer(0.4, -2.0).unwrap();
        let r = rotate_frame_to_observer(&obs);
        let o = f.orbit(7100.0, 2.5, 0.7).unwrap();
        let sat = satellite_position(&o, 4.0);
        let rotated = r.rotate_satellite(&sat).unwrap();
        let rebuilt = satellite_position(&rotated.orbit, rotated.orbital_angle);
        assert!(rebuilt.cartesian.distance(rotated.cartesian) < 1e-7);
        assert!(rotated.orbit.longitude() < PI && rotated.orbit.inclination() < PI);
    }

    #[test]
    fn directed_orbit_canonicalisation_preserves_points() {
        for &(node, inc) in &[(0.3, 0.9), (4.0, 0.9), (3.5, 2.5), (5.0, 0.0), (2.0, PI), (PI, FRAC_PI_2)] {
            let (o, map) = Orbit::from_directed(7000.0, node, inc).unwrap();
            for k in 0..16 {
                let w = TAU * k as f64 / 16.0;
                let expect = rotation_oracle(7000.0, node, inc, w);
                let got = satellite_position(&o, map.apply(w)).cartesian;
                let err = ((got.x - expect[0]).powi(2) + (got.y - expect[1]).powi(2) + (got.z - expect[2]).powi(2)).sqrt();
                assert!(err < 1e-8, "node={node} inc={inc} w={w} err={err}");
            }
        }
    }

    proptest! {
        #[test]
        fn closed_form_distance_equals_cartesian(
            rho in 6400.0f64..9000.0,
            theta in 0.0f64..PI,
            phi in 0.0f64..PI,
            omega in 0.0f64..TAU,
        ) {
            let f = frame();
            let o = f.orbit(rho, theta, phi).unwrap();
            let cart = satellite_position(&o, omega).cartesian;
            prop_assert!((cart.norm() - rho).abs() / rho < 1e-12);
            let d = distance_to_north_pole_observer(&f, &o, omega);
            prop_assert!((d - cart.distance(f.north_pole().cartesian)).abs() / rho < 1e-12);
        }

        #[test]
        fn distance_ignores_longitude(rho in 6500.0f64..8000.0, t1 in 0.0f64..PI, t2 in 0.0f64..PI, phi in 0.0f64..PI, omega in 0.0f64..TAU) {
            let f = frame();
            let a = distance_to_north_pole_observer(&f, &f.orbit(rho, t1, phi).unwrap(), omega);
            let b = distance_to_north_pole_observer(&f, &f.orbit(rho, t2, phi).unwrap(), omega);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn arc_length_monotone_in_distance(rho in 6500.0f64..8500.0, u1 in 0.0f64..1.0, u2 in 0.0f64..1.0, phi in 0.0f64..PI) {
            let f = frame();
            let (lo, hi) = (rho - RE, f.horizon_distance(rho));
            let (a, b) = (lo + (hi - lo) * u1.min(u2), lo + (hi - lo) * u1.max(u2));
            let la = cap_orbit_arc_length(&SphericalCap::new(&f, rho, a).unwrap(), phi);
            let lb = cap_orbit_arc_length(&SphericalCap::new(&f, rho, b).unwrap(), phi);
            prop_assert!(la <= lb + 1e-9);
            let mirrored = cap_orbit_arc_length(&SphericalCap::new(&f, rho, b).unwrap(), PI - phi);
            prop_assert!((lb - mirrored).abs() < 1e-6);
        }

        #[test]
        fn visibility_algebraic_form(rho in 6400.0f64..9000.0, theta in 0.0f64..PI, phi in 0.0f64..PI, omega in 0.0f64..TAU) {
            let f = frame();
            let o = f.orbit(rho, theta, phi).unwrap();
            let s = omega.sin() * phi.sin();
            let margin = (s - RE / rho).abs();
            prop_assume!(margin > 1e-9);
            let sat = satellite_position(&o, omega);
            prop_assert_eq!(is_visible(&f, &sat, &f.north_pole()), s >= RE / rho);
        }

        #[test]
        fn rotation_is_isometry(lat in -1.5f64..1.5, lon in -3.0f64..3.0,
                                a in prop::array::uniform3(-8000.0f64..8000.0),
                                b in prop::array::uniform3(-8000.0f64..8000.0)) {
            let f = frame();
            let obs = f.observer(lat, lon).unwrap();
            let r = rotate_frame_to_observer(&obs);
            prop_assert!(r.apply(obs.cartesian).distance(Vec3::new(0.0, 0.0, RE)) < 1e-8);
            let (pa, pb) = (Vec3::new(a[0], a[1], a[2]), Vec3::new(b[0], b[1], b[2]));
            let d0 = pa.distance(pb);
            prop_assume!(d0 > 1.0);
            prop_assert!((r.apply(pa).distance(r.apply(pb)) - d0).abs() / d0 < 1e-9);
        }
    }
}
