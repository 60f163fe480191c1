//! Closed-form statistics of the Cox constellation, evaluated by nested
//! adaptive quadrature.
//!
//! All evaluators work in the north-pole frame. The node longitude never
//! appears in a distance, so wherever an integrand is longitude-free the
//! `theta` integral over `[0, pi)` is replaced by the factor `pi`.
//!
//! Endpoint handling: the void integrand
//! `1 - exp(-(mu/pi) acos(cos(xi) / cos(v)))` has a square-root edge at
//! `v = xi`. Integrals over `[0, xi]` use `v = xi sin^2(t)`, which turns
//! the edge into a smooth endpoint. The same substitution is applied to the
//! inclination integral of the interference transform, whose integrand has a
//! square-root edge where orbits start to rise above the horizon.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{db_to_linear, ChannelError, ChannelModel};
use crate::constellation::{AltitudeDistribution, ConstellationError, CoxParams};
use crate::geometry::{half_arc_angle, EarthFrame};
use crate::quadrature::{try_integrate, QuadratureError, QuadratureSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Constellation(#[from] ConstellationError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("{0}")]
    Domain(String),
}

impl AnalyticsError {
    pub fn is_nonconvergence(&self) -> bool {
        matches!(self, AnalyticsError::Quadrature(QuadratureError::NonConvergence { .. }))
    }
}

type Result<T> = std::result::Result<T, AnalyticsError>;

/// Tolerance factor between nesting levels.
const NEST: f64 = 10.0;

/// `sum_atoms mass f(rho) + sum_pieces mass / (hi - lo) int f(rho) d rho`,
/// with each piece clipped to `[.., upper]` and split at `breaks`.
fn integrate_over_altitudes<F>(
    nu: &AltitudeDistribution,
    upper: f64,
    breaks: &[f64],
    quad: &QuadratureSpec,
    mut f: F,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut total = 0.0;
    for atom in nu.atoms.iter().filter(|a| a.mass > 0.0) {
        total += atom.mass * f(atom.radius_km)?;
    }
    for piece in nu.uniform.iter().filter(|p| p.mass > 0.0) {
        let hi = piece.hi_km.min(upper);
        if hi <= piece.lo_km {
            continue;
        }
        let est = try_integrate(&mut f, piece.lo_km, hi, breaks, quad)?;
        total += piece.mass / (piece.hi_km - piece.lo_km) * est.value;
    }
    Ok(total)
}

/// Half-angle of the cap of shell `rho` within distance `d`, clamped to the
/// horizon. Returns `(cos xi, xi)`; `xi = 0` when `d <= rho - r_e`.
fn clamped_cap(frame: &EarthFrame, rho: f64, d: f64) -> (f64, f64) {
    let re = frame.earth_radius();
    if d <= rho - re {
        return (1.0, 0.0);
    }
    if d >= frame.horizon_distance(rho) {
        let c = re / rho;
        return (c, c.acos());
    }
    // 1 - cos xi = (d^2 - (rho - r_e)^2) / (2 rho r_e), kept exact for small caps.
    let one_minus = (d - (rho - re)) * (d + (rho - re)) / (2.0 * rho * re);
    let xi = 2.0 * (0.5 * one_minus).sqrt().asin();
    (1.0 - one_minus, xi)
}

/// `int_0^xi (1 - exp(-(mu/pi) acos(cos xi / cos v))) cos v dv`: the
/// contribution of one orbit radius to the void exponent.
fn cap_void_integral(mu: f64, cos_xi: f64, xi: f64, quad: &QuadratureSpec) -> Result<f64> {
    if xi <= 0.0 || mu <= 0.0 {
        return Ok(0.0);
    }
    let k = mu / PI;
    let integrand = |t: f64| -> Result<f64> {
        let (s, c) = t.sin_cos();
        let v = xi * s * s;
        let cos_v = v.cos();
        let half_arc = half_arc_angle(cos_xi, cos_v);
        Ok(-(-k * half_arc).exp_m1() * cos_v * 2.0 * xi * s * c)
    };
    Ok(try_integrate(integrand, 0.0, FRAC_PI_2, &[], quad)?.value)
}

fn check_inputs(params: &CoxParams, frame: &EarthFrame, quad: &QuadratureSpec) -> Result<()> {
    params.validate(frame)?;
    quad.validate()?;
    Ok(())
}

/// `P(D > d)`, the probability that no visible satellite lies within `d`
/// of the typical user.
///
/// Per radius the cap half-angle is clamped: radii with `d <= rho - r_e`
/// contribute nothing and radii whose horizon is nearer than `d` use the
/// horizon cap. Below `r_a - r_e` the value is 1; beyond
/// `sqrt(r_b^2 - r_e^2)` it equals the outage probability.
pub fn nearest_distance_ccdf(params: &CoxParams, frame: &EarthFrame, d: f64, quad: &QuadratureSpec) -> Result<f64> {
    check_inputs(params, frame, quad)?;
    if !(d >= 0.0 && d.is_finite()) {
        return Err(AnalyticsError::Domain(format!("distance must be finite and >= 0, got {d}")));
    }
    if params.lambda == 0.0 || params.mu == 0.0 {
        return Ok(1.0);
    }
    let re = frame.earth_radius();
    let inner = quad.tightened(NEST);
    // Kink where the horizon clamp releases, cut-off where the cap vanishes.
    let horizon_release = (d * d + re * re).sqrt();
    let exponent = integrate_over_altitudes(&params.nu, re + d, &[horizon_release], quad, |rho| {
        let (cos_xi, xi) = clamped_cap(frame, rho, d);
        cap_void_integral(params.mu, cos_xi, xi, &inner)
    })?;
    Ok((-params.lambda * exponent).exp())
}

/// `P(D = inf)`: no satellite above the horizon.
pub fn outage_probability(params: &CoxParams, frame: &EarthFrame, quad: &QuadratureSpec) -> Result<f64> {
    check_inputs(params, frame, quad)?;
    if params.lambda == 0.0 || params.mu == 0.0 {
        return Ok(1.0);
    }
    let re = frame.earth_radius();
    let inner = quad.tightened(NEST);
    let exponent = integrate_over_altitudes(&params.nu, f64::INFINITY, &[], quad, |rho| {
        let cos_xi = re / rho;
        cap_void_integral(params.mu, cos_xi, cos_xi.acos(), &inner)
    })?;
    Ok((-params.lambda * exponent).exp())
}

/// A non-negative function of a satellite, written in orbit coordinates
/// `(rho, theta, phi, omega)`.
pub trait OrbitFunctional: Sync {
    fn value(&self, radius: f64, longitude: f64, inclination: f64, orbital_angle: f64) -> f64;

    /// Lets the evaluator replace the longitude integral by its length.
    fn longitude_invariant(&self) -> bool {
        false
    }

    /// Orbital angles where the functional jumps, if known.
    fn orbital_angle_breakpoints(&self, _radius: f64, _longitude: f64, _inclination: f64) -> Vec<f64> {
        Vec::new()
    }
}

impl<F> OrbitFunctional for F
where
    F: Fn(f64, f64, f64, f64) -> f64 + Sync,
{
    fn value(&self, radius: f64, longitude: f64, inclination: f64, orbital_angle: f64) -> f64 {
        self(radius, longitude, inclination, orbital_angle)
    }
}

/// `E[exp(-sum_X f(X))]` over the Cox process:
///
/// `exp(-(lambda / 2pi) int nu(d rho) int_0^pi d theta int_0^pi sin(phi)
/// (1 - exp(-(mu / 2pi) int_0^2pi (1 - exp(-f)) d omega)) d phi)`.
pub fn laplace_functional<F>(params: &CoxParams, frame: &EarthFrame, f: &F, quad: &QuadratureSpec) -> Result<f64>
where
    F: OrbitFunctional + ?Sized,
{
    check_inputs(params, frame, quad)?;
    if params.lambda == 0.0 || params.mu == 0.0 {
        return Ok(1.0);
    }
    let theta_quad = quad.tightened(NEST);
    let phi_quad = theta_quad.tightened(NEST);
    let omega_quad = phi_quad.tightened(NEST);
    let k = params.mu / TAU;

    let over_phi = |rho: f64, theta: f64| -> Result<f64> {
        let integrand = |phi: f64| -> Result<f64> {
            let sin_phi = phi.sin();
            if sin_phi <= 0.0 {
                return Ok(0.0);
            }
            let breaks = f.orbital_angle_breakpoints(rho, theta, phi);
            let mass = try_integrate(
                |w: f64| Ok::<f64, AnalyticsError>(-(-f.value(rho, theta, phi, w)).exp_m1()),
                0.0,
                TAU,
                &breaks,
                &omega_quad,
            )?
            .value;
            Ok(-(-k * mass).exp_m1() * sin_phi)
        };
        Ok(try_integrate(integrand, 0.0, PI, &[], &phi_quad)?.value)
    };

    let exponent = integrate_over_altitudes(&params.nu, f64::INFINITY, &[], quad, |rho| {
        if f.longitude_invariant() {
            Ok(PI * over_phi(rho, 0.0)?)
        } else {
            Ok(try_integrate(|theta| over_phi(rho, theta), 0.0, PI, &[], &theta_quad)?.value)
        }
    })?;
    Ok((-params.lambda / TAU * exponent).exp())
}

/// Laplace transform `E[exp(-s S)]` of the aggregate power `S` received
/// from every visible satellite, each with an independent fading draw and
/// the interferer antenna gain.
///
/// Frequency reuse is not applied here; pass `mu / reuse` to study the
/// co-channel subset.
pub fn interference_laplace(
    params: &CoxParams,
    channel: &ChannelModel,
    frame: &EarthFrame,
    s: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_inputs(params, frame, quad)?;
    channel.validate()?;
    if !(s >= 0.0 && s.is_finite()) {
        return Err(ChannelError::NegativeArgument(s).into());
    }
    if s == 0.0 || params.lambda == 0.0 || params.mu == 0.0 {
        return Ok(1.0);
    }
    let re = frame.earth_radius();
    let scale = s * db_to_linear(channel.interferer_gain_db);
    let half_alpha = 0.5 * channel.alpha;
    let law = channel.fading;
    let k = params.mu / TAU;
    let phi_quad = quad.tightened(NEST);
    let omega_quad = phi_quad.tightened(NEST);

    // Integrand symmetric under phi -> pi - phi and omega -> pi - omega, so
    // both integrals run over half the range and are doubled.
    let exponent = integrate_over_altitudes(&params.nu, f64::INFINITY, &[], quad, |rho| {
        let phi_min = (re / rho).asin();
        let span = FRAC_PI_2 - phi_min;
        let integrand = |t: f64| -> Result<f64> {
            let (st, ct) = t.sin_cos();
            let phi = phi_min + span * st * st;
            let sin_phi = phi.sin();
            let omega_min = (re / (rho * sin_phi)).min(1.0).asin();
            let visible_mass = 2.0
                * try_integrate(
                    |w: f64| {
                        let d2 = rho * rho - 2.0 * rho * re * w.sin() * sin_phi + re * re;
                        Ok::<f64, AnalyticsError>(1.0 - law.laplace_unchecked(scale * d2.powf(-half_alpha)))
                    },
                    omega_min,
                    FRAC_PI_2,
                    &[],
                    &omega_quad,
                )?
                .value;
            Ok(-(-k * visible_mass).exp_m1() * sin_phi * 2.0 * span * st * ct)
        };
        // (lambda / 2pi) * pi (longitude) * 2 (phi symmetry) = lambda.
        Ok(try_integrate(integrand, 0.0, FRAC_PI_2, &[], &phi_quad)?.value)
    })?;
    Ok((-params.lambda * exponent).exp())
}

/// Mean number of satellites above the horizon: `lambda mu` times the
/// average visible cap fraction `(1 - r_e / rho) / 2`.
pub fn mean_visible_count(params: &CoxParams, frame: &EarthFrame) -> Result<f64> {
    params.validate(frame)?;
    let re = frame.earth_radius();
    let atoms: f64 = params.nu.atoms.iter().map(|a| a.mass * 0.5 * (1.0 - re / a.radius_km)).sum();
    let pieces: f64 = params
        .nu
        .uniform
        .iter()
        .map(|p| p.mass * 0.5 * (1.0 - re * (p.hi_km / p.lo_km).ln() / (p.hi_km - p.lo_km)))
        .sum();
    Ok(params.lambda * params.mu * (atoms + pieces))
}

/// Which statistic a [`CurveTable`] tabulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    /// `P(D > d)` against distance in km.
    DistanceCcdf,
    /// Outage probability against the mean number of orbits.
    OutageVsLambda,
    /// Outage probability against the mean satellites per orbit.
    OutageVsMu,
    /// `E[exp(-s S)]` against `s`.
    LaplaceVsS,
}

impl CurveKind {
    pub fn labels(&self) -> (&'static str, &'static str) {
        match self {
            CurveKind::DistanceCcdf => ("distance_km", "ccdf"),
            CurveKind::OutageVsLambda => ("lambda", "outage"),
            CurveKind::OutageVsMu => ("mu", "outage"),
            CurveKind::LaplaceVsS => ("s", "laplace"),
        }
    }

    pub fn is_probability(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub abscissa: f64,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    /// Set when the evaluator failed for this row; `value` is then NaN.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CurveTable {
    pub abscissa_label: String,
    pub value_label: String,
    pub rows: Vec<CurveRow>,
    pub metadata: BTreeMap<String, String>,
}

impl CurveTable {
    pub fn new(abscissa_label: &str, value_label: &str) -> Self {
        Self {
            abscissa_label: abscissa_label.into(),
            value_label: value_label.into(),
            ..Default::default()
        }
    }

    pub fn failed_rows(&self) -> impl Iterator<Item = &CurveRow> {
        self.rows.iter().filter(|r| r.error.is_some())
    }

    pub fn values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value).collect()
    }
}

pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(AnalyticsError::Domain("grid contains non-finite values".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AnalyticsError::Domain("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Evaluates `kind` at every grid point. A failing row is kept, marked with
/// its error and a NaN value; only invalid inputs fail the whole table.
pub fn tabulate_curve(
    kind: CurveKind,
    grid: &[f64],
    params: &CoxParams,
    channel: &ChannelModel,
    frame: &EarthFrame,
    quad: &QuadratureSpec,
) -> Result<CurveTable> {
    check_grid(grid)?;
    check_inputs(params, frame, quad)?;
    if kind == CurveKind::LaplaceVsS {
        channel.validate()?;
    }
    let (xl, yl) = kind.labels();
    let mut table = CurveTable::new(xl, yl);
    table.metadata.insert("kind".into(), format!("{kind:?}"));
    if kind != CurveKind::OutageVsLambda {
        table.metadata.insert("lambda".into(), params.lambda.to_string());
    }
    if kind != CurveKind::OutageVsMu {
        table.metadata.insert("mu".into(), params.mu.to_string());
    }
    table.metadata.insert("earth_radius_km".into(), frame.earth_radius().to_string());
    table.metadata.insert("version".into(), crate::VERSION.to_string());

    let eval = |x: f64| -> Result<f64> {
        match kind {
            CurveKind::DistanceCcdf => nearest_distance_ccdf(params, frame, x, quad),
            CurveKind::OutageVsLambda => outage_probability(&CoxParams { lambda: x, ..params.clone() }, frame, quad),
            CurveKind::OutageVsMu => outage_probability(&CoxParams { mu: x, ..params.clone() }, frame, quad),
            CurveKind::LaplaceVsS => interference_laplace(params, channel, frame, x, quad),
        }
    };
    table.rows = grid
        .par_iter()
        .map(|&x| match eval(x) {
            Ok(value) => CurveRow {
                abscissa: x,
                value,
                stderr: None,
                error: None,
            },
            Err(e) => CurveRow {
                abscissa: x,
                value: f64::NAN,
                stderr: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    Ok(table)
}
