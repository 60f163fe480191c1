//! Constellation generators: the Cox orbit/satellite process, the binomial
//! benchmark and deterministic multi-shell (Walker-style) constellations.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{satellite_position, wrap_tau, EarthFrame, GeometryError, Orbit, SatellitePos, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstellationError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("altitude distribution: {0}")]
    Altitude(String),
    #[error("{name} must be non-negative and finite, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("lambda_choice must be positive, got {0}")]
    LambdaChoice(f64),
    #[error("shell {index}: {reason}")]
    Shell { index: usize, reason: String },
    #[error("reuse factor must be at least 1")]
    ReuseFactor,
    #[error("satellite {0} is not in the snapshot")]
    UnknownSatellite(usize),
}

/// Point mass of the altitude law at an orbit radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub radius_km: f64,
    pub mass: f64,
}

/// Uniform density on `[lo_km, hi_km]` carrying `mass`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformPiece {
    pub lo_km: f64,
    pub hi_km: f64,
    pub mass: f64,
}

/// Law of orbit radii: a mixture of atoms and uniform pieces with total
/// mass one.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AltitudeDistribution {
    pub atoms: Vec<Atom>,
    pub uniform: Vec<UniformPiece>,
}

impl AltitudeDistribution {
    /// All orbits at one radius.
    pub fn dirac(radius_km: f64) -> Self {
        Self {
            atoms: vec![Atom { radius_km, mass: 1.0 }],
            uniform: Vec::new(),
        }
    }

    /// Radii uniform on `[lo_km, hi_km]`.
    pub fn uniform(lo_km: f64, hi_km: f64) -> Self {
        Self {
            atoms: Vec::new(),
            uniform: vec![UniformPiece { lo_km, hi_km, mass: 1.0 }],
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum::<f64>() + self.uniform.iter().map(|p| p.mass).sum::<f64>()
    }

    pub fn validate(&self, frame: &EarthFrame) -> Result<(), ConstellationError> {
        let bad = |msg: String| Err(ConstellationError::Altitude(msg));
        if self.atoms.is_empty() && self.uniform.is_empty() {
            return bad("no atoms or uniform pieces".into());
        }
        for a in &self.atoms {
            if !(a.mass >= 0.0 && a.mass.is_finite()) {
                return bad(format!("atom at {} km has invalid mass {}", a.radius_km, a.mass));
            }
            frame.check_radius(a.radius_km)?;
        }
        for p in &self.uniform {
            if !(p.mass >= 0.0 && p.mass.is_finite()) {
                return bad(format!("piece [{}, {}] has invalid mass {}", p.lo_km, p.hi_km, p.mass));
            }
            if !(p.lo_km < p.hi_km) {
                return bad(format!("piece [{}, {}] needs lo < hi", p.lo_km, p.hi_km));
            }
            frame.check_radius(p.lo_km)?;
            frame.check_radius(p.hi_km)?;
        }
        let total = self.total_mass();
        if (total - 1.0).abs() > 1e-12 {
            return bad(format!("total mass is {total}, expected 1"));
        }
        Ok(())
    }

    /// Smallest and largest radius carrying mass.
    pub fn support(&self) -> (f64, f64) {
        let atoms = self.atoms.iter().filter(|a| a.mass > 0.0).map(|a| (a.radius_km, a.radius_km));
        let pieces = self.uniform.iter().filter(|p| p.mass > 0.0).map(|p| (p.lo_km, p.hi_km));
        atoms
            .chain(pieces)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)))
    }

    pub fn cdf(&self, radius: f64) -> f64 {
        let atoms: f64 = self.atoms.iter().filter(|a| a.radius_km <= radius).map(|a| a.mass).sum();
        let pieces: f64 = self
            .uniform
            .iter()
            .map(|p| p.mass * ((radius - p.lo_km) / (p.hi_km - p.lo_km)).clamp(0.0, 1.0))
            .sum();
        atoms + pieces
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut u: f64 = rng.random::<f64>() * self.total_mass();
        for a in &self.atoms {
            if u < a.mass {
                return a.radius_km;
            }
            u -= a.mass;
        }
        for p in &self.uniform {
            if u < p.mass {
                return p.lo_km + (p.hi_km - p.lo_km) * (u / p.mass);
            }
            u -= p.mass;
        }
        // Only reachable through rounding in the final subtraction.
        self.uniform
            .last()
            .map(|p| p.hi_km)
            .or_else(|| self.atoms.last().map(|a| a.radius_km))
            .unwrap_or(f64::NAN)
    }
}

/// Parameters of the Cox satellite process: on average `lambda` orbits,
/// `mu` satellites per orbit, orbit radii drawn from `nu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoxParams {
    pub lambda: f64,
    pub mu: f64,
    pub nu: AltitudeDistribution,
}

impl CoxParams {
    pub fn validate(&self, frame: &EarthFrame) -> Result<(), ConstellationError> {
        for (name, value) in [("lambda", self.lambda), ("mu", self.mu)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(ConstellationError::Negative { name, value });
            }
        }
        self.nu.validate(frame)
    }

    /// Mean total number of satellites.
    pub fn mean_count(&self) -> f64 {
        self.lambda * self.mu
    }
}

/// One shell of a deterministic constellation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shell {
    pub altitude_km: f64,
    pub inclination_deg: f64,
    pub plane_count: u32,
    pub sats_per_plane: u32,
    /// Walker phasing factor `F`: plane `p` is shifted by `2 pi F p / (P S)`.
    #[serde(default)]
    pub phasing: u32,
    /// Longitude of the first ascending node.
    #[serde(default)]
    pub raan_offset_deg: f64,
}

impl Shell {
    /// Ascending-node longitudes, evenly spaced around the equator.
    pub fn plane_longitudes(&self) -> Vec<f64> {
        let offset = self.raan_offset_deg.to_radians();
        (0..self.plane_count)
            .map(|p| wrap_tau(offset + TAU * p as f64 / self.plane_count as f64))
            .collect()
    }

    pub fn phase_offsets(&self) -> Vec<f64> {
        let cell = TAU / (self.plane_count as f64 * self.sats_per_plane as f64);
        (0..self.plane_count)
            .map(|p| wrap_tau(cell * self.phasing as f64 * p as f64))
            .collect()
    }

    pub fn satellite_count(&self) -> usize {
        self.plane_count as usize * self.sats_per_plane as usize
    }

    fn validate(&self, index: usize, frame: &EarthFrame) -> Result<(), ConstellationError> {
        let fail = |reason: String| Err(ConstellationError::Shell { index, reason });
        if self.plane_count == 0 || self.sats_per_plane == 0 {
            return fail("plane_count and sats_per_plane must be at least 1".into());
        }
        if !(0.0..=180.0).contains(&self.inclination_deg) {
            return fail(format!("inclination {} deg outside [0, 180]", self.inclination_deg));
        }
        if !(self.altitude_km > 0.0 && self.altitude_km.is_finite()) {
            return fail(format!("altitude {} km must be positive", self.altitude_km));
        }
        if !self.raan_offset_deg.is_finite() {
            return fail("raan_offset_deg must be finite".into());
        }
        frame.check_radius(frame.earth_radius() + self.altitude_km)?;
        Ok(())
    }
}

/// Which generator a snapshot or simulation uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
pub enum ConstellationModel {
    Cox {
        lambda: f64,
        mu: f64,
        #[serde(default)]
        altitude: AltitudeDistribution,
    },
    Binomial {
        count: usize,
        radius_km: f64,
    },
    Deterministic {
        shells: Vec<Shell>,
    },
}

impl ConstellationModel {
    pub fn cox(params: CoxParams) -> Self {
        Self::Cox {
            lambda: params.lambda,
            mu: params.mu,
            altitude: params.nu,
        }
    }

    pub fn cox_params(&self) -> Option<CoxParams> {
        match self {
            Self::Cox { lambda, mu, altitude } => Some(CoxParams {
                lambda: *lambda,
                mu: *mu,
                nu: altitude.clone(),
            }),
            _ => None,
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Self::Cox { .. } => ModelKind::Cox,
            Self::Binomial { .. } => ModelKind::Binomial,
            Self::Deterministic { .. } => ModelKind::Deterministic,
        }
    }

    pub fn validate(&self, frame: &EarthFrame) -> Result<(), ConstellationError> {
        match self {
            Self::Cox { .. } => self.cox_params().expect("cox").validate(frame),
            Self::Binomial { radius_km, .. } => Ok(frame.check_radius(*radius_km)?),
            Self::Deterministic { shells } => shells
                .iter()
                .enumerate()
                .try_for_each(|(i, s)| s.validate(i, frame)),
        }
    }

    /// Whether snapshots are random, i.e. isotropic and worth re-drawing per trial.
    pub fn is_random(&self) -> bool {
        !matches!(self, Self::Deterministic { .. })
    }

    /// Draws (or builds) one snapshot using `rng`.
    pub fn snapshot<R: Rng + ?Sized>(&self, frame: &EarthFrame, rng: &mut R) -> Result<Snapshot, ConstellationError> {
        match self {
            Self::Cox { .. } => sample_cox_with(&self.cox_params().expect("cox"), frame, rng),
            Self::Binomial { count, radius_km } => sample_binomial_with(*count, *radius_km, frame, rng),
            Self::Deterministic { shells } => build_deterministic(shells, frame),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Cox,
    Binomial,
    Deterministic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Satellite {
    pub position: SatellitePos,
    /// Index into [`Snapshot::orbits`]; `None` for binomial points.
    pub orbit_index: Option<usize>,
}

/// Satellites of one realisation together with the orbits carrying them.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub orbits: Vec<Orbit>,
    pub satellites: Vec<Satellite>,
    pub seed: Option<u64>,
    pub kind: ModelKind,
    pub model_tag: String,
}

impl Snapshot {
    pub fn empty(kind: ModelKind, model_tag: impl Into<String>) -> Self {
        Self {
            orbits: Vec::new(),
            satellites: Vec::new(),
            seed: None,
            kind,
            model_tag: model_tag.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.satellites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.satellites.is_empty()
    }
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Samples the Cox process from a seed.
pub fn sample_cox(params: &CoxParams, frame: &EarthFrame, rng_seed: u64) -> Result<Snapshot, ConstellationError> {
    let mut snap = sample_cox_with(params, frame, &mut seeded_rng(rng_seed))?;
    snap.seed = Some(rng_seed);
    Ok(snap)
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let draw: f64 = Poisson::new(mean).expect("positive finite mean").sample(rng);
    draw as usize
}

/// Samples the Cox process: `Poisson(lambda)` orbits with radius from `nu`,
/// node longitude uniform on `[0, pi)` and inclination with density
/// `sin(phi) / 2` (drawn as `acos(1 - 2U)`); then `Poisson(mu)` satellites
/// per orbit at uniform orbital angles.
pub fn sample_cox_with<R: Rng + ?Sized>(
    params: &CoxParams,
    frame: &EarthFrame,
    rng: &mut R,
) -> Result<Snapshot, ConstellationError> {
    params.validate(frame)?;
    let tag = format!("cox(lambda={}, mu={})", params.lambda, params.mu);
    let mut snap = Snapshot::empty(ModelKind::Cox, tag);
    let n_orbits = poisson(params.lambda, rng);
    snap.orbits.reserve(n_orbits);
    for _ in 0..n_orbits {
        let radius = params.nu.sample(rng);
        let longitude = PI * rng.random::<f64>();
        let inclination = (1.0 - 2.0 * rng.random::<f64>()).clamp(-1.0, 1.0).acos();
        // acos(-1) = pi lies outside the half-open range; it has probability zero.
        let inclination = if inclination >= PI { 0.0 } else { inclination };
        snap.orbits.push(Orbit::new(radius, longitude, inclination)?);
    }
    for (index, orbit) in snap.orbits.iter().enumerate() {
        let count = poisson(params.mu, rng);
        for _ in 0..count {
            let omega = TAU * rng.random::<f64>();
            snap.satellites.push(Satellite {
                position: satellite_position(orbit, omega),
                orbit_index: Some(index),
            });
        }
    }
    Ok(snap)
}

pub fn sample_binomial(n: usize, radius: f64, frame: &EarthFrame, rng_seed: u64) -> Result<Snapshot, ConstellationError> {
    let mut snap = sample_binomial_with(n, radius, frame, &mut seeded_rng(rng_seed))?;
    snap.seed = Some(rng_seed);
    Ok(snap)
}

/// `n` points i.i.d. uniform on the sphere of radius `radius`. Each point
/// is attached to the polar orbit through it so it still carries an orbital
/// parametrisation, but the snapshot lists no orbits.
pub fn sample_binomial_with<R: Rng + ?Sized>(
    n: usize,
    radius: f64,
    frame: &EarthFrame,
    rng: &mut R,
) -> Result<Snapshot, ConstellationError> {
    frame.check_radius(radius)?;
    let mut snap = Snapshot::empty(ModelKind::Binomial, format!("binomial(n={n}, radius={radius})"));
    snap.satellites.reserve(n);
    for _ in 0..n {
        let z = 1.0 - 2.0 * rng.random::<f64>();
        let azimuth = TAU * rng.random::<f64>();
        let r_xy = (1.0 - z * z).max(0.0).sqrt();
        let unit = Vec3::new(r_xy * azimuth.cos(), r_xy * azimuth.sin(), z);
        snap.satellites.push(Satellite {
            position: polar_parametrisation(radius, unit)?,
            orbit_index: None,
        });
    }
    Ok(snap)
}

fn polar_parametrisation(radius: f64, unit: Vec3) -> Result<SatellitePos, GeometryError> {
    let mut azimuth = unit.y.atan2(unit.x);
    let mut horizontal = unit.x.hypot(unit.y);
    if azimuth < 0.0 {
        azimuth += PI;
        horizontal = -horizontal;
    }
    let longitude = if azimuth >= PI { 0.0 } else { azimuth };
    let orbit = Orbit::new(radius, longitude, PI / 2.0)?;
    let omega = wrap_tau(unit.z.atan2(horizontal));
    Ok(SatellitePos {
        orbit,
        orbital_angle: omega,
        cartesian: unit * radius,
    })
}

/// Builds a deterministic constellation: per shell, `plane_count` planes
/// with ascending nodes evenly spaced over the full equator and
/// `sats_per_plane` satellites evenly spaced in orbital angle, shifted by
/// the plane's phase offset.
pub fn build_deterministic(shells: &[Shell], frame: &EarthFrame) -> Result<Snapshot, ConstellationError> {
    let mut snap = Snapshot::empty(ModelKind::Deterministic, format!("deterministic({} shells)", shells.len()));
    for (index, shell) in shells.iter().enumerate() {
        shell.validate(index, frame)?;
        let radius = frame.earth_radius() + shell.altitude_km;
        let inclination = shell.inclination_deg.to_radians();
        for (node, phase) in shell.plane_longitudes().into_iter().zip(shell.phase_offsets()) {
            let (orbit, map) = Orbit::from_directed(radius, node, inclination)?;
            let orbit_index = snap.orbits.len();
            snap.orbits.push(orbit);
            for j in 0..shell.sats_per_plane {
                let omega = map.apply(phase + TAU * j as f64 / shell.sats_per_plane as f64);
                snap.satellites.push(Satellite {
                    position: satellite_position(&orbit, omega),
                    orbit_index: Some(orbit_index),
                });
            }
        }
    }
    snap.seed = None;
    Ok(snap)
}

/// Chooses `mu` so the mean satellite count `lambda * mu` hits `target_total`.
pub fn moment_match(
    target_total: f64,
    nu: AltitudeDistribution,
    lambda_choice: f64,
) -> Result<CoxParams, ConstellationError> {
    if !(lambda_choice > 0.0 && lambda_choice.is_finite()) {
        return Err(ConstellationError::LambdaChoice(lambda_choice));
    }
    if !(target_total >= 0.0 && target_total.is_finite()) {
        return Err(ConstellationError::Negative {
            name: "target_total",
            value: target_total,
        });
    }
    Ok(CoxParams {
        lambda: lambda_choice,
        mu: target_total / lambda_choice,
        nu,
    })
}

/// Co-channel mask for frequency reuse with `keep` always retained.
///
/// Random snapshots are thinned independently with retention probability
/// `1 / reuse_factor`. Deterministic snapshots keep every
/// `reuse_factor`-th satellite along each orbit in orbital-angle order,
/// using the residue class of `keep`'s rank on its own orbit.
pub fn reuse_mask<R: Rng + ?Sized>(
    snapshot: &Snapshot,
    reuse_factor: u32,
    keep: usize,
    rng: &mut R,
) -> Result<Vec<bool>, ConstellationError> {
    if reuse_factor == 0 {
        return Err(ConstellationError::ReuseFactor);
    }
    if keep >= snapshot.satellites.len() {
        return Err(ConstellationError::UnknownSatellite(keep));
    }
    let n = snapshot.satellites.len();
    if reuse_factor == 1 {
        return Ok(vec![true; n]);
    }
    let k = reuse_factor as usize;
    let mut mask = vec![false; n];
    match snapshot.kind {
        ModelKind::Cox | ModelKind::Binomial => {
            let p = 1.0 / reuse_factor as f64;
            for m in mask.iter_mut() {
                *m = rng.random::<f64>() < p;
            }
        }
        ModelKind::Deterministic => {
            let ranks = orbit_ranks(snapshot);
            let residue = ranks[keep] % k;
            for (m, rank) in mask.iter_mut().zip(&ranks) {
                *m = rank % k == residue;
            }
        }
    }
    mask[keep] = true;
    Ok(mask)
}

/// Rank of each satellite along its orbit by increasing orbital angle.
fn orbit_ranks(snapshot: &Snapshot) -> Vec<usize> {
    let mut per_orbit: Vec<Vec<usize>> = vec![Vec::new(); snapshot.orbits.len()];
    let mut loose = Vec::new();
    for (i, sat) in snapshot.satellites.iter().enumerate() {
        match sat.orbit_index {
            Some(o) if o < per_orbit.len() => per_orbit[o].push(i),
            _ => loose.push(i),
        }
    }
    let mut ranks = vec![0; snapshot.satellites.len()];
    for members in per_orbit.iter_mut().chain(std::iter::once(&mut loose)) {
        members.sort_by(|&a, &b| {
            let wa = snapshot.satellites[a].position.orbital_angle;
            let wb = snapshot.satellites[b].position.orbital_angle;
            wa.total_cmp(&wb)
        });
        for (rank, &i) in members.iter().enumerate() {
            ranks[i] = rank;
        }
    }
    ranks
}

/// Applies [`reuse_mask`] and returns the co-channel snapshot.
pub fn thin_for_reuse(
    snapshot: &Snapshot,
    reuse_factor: u32,
    keep: usize,
    rng_seed: u64,
) -> Result<Snapshot, ConstellationError> {
    let mask = reuse_mask(snapshot, reuse_factor, keep, &mut seeded_rng(rng_seed))?;
    let satellites = snapshot
        .satellites
        .iter()
        .zip(&mask)
        .filter(|(_, &m)| m)
        .map(|(s, _)| *s)
        .collect();
    Ok(Snapshot {
        orbits: snapshot.orbits.clone(),
        satellites,
        seed: snapshot.seed,
        kind: snapshot.kind,
        model_tag: format!("{} reuse 1/{}", snapshot.model_tag, reuse_factor),
    })
}
