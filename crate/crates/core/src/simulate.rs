//! Monte Carlo engine: per-snapshot nearest distance, interference and SIR,
//! aggregated into coverage, CCDF and Laplace-transform estimates.
//!
//! Trial `i` draws everything from `ChaCha8Rng::seed_from_u64(base_seed)`
//! switched to stream `i`, so a trial's record depends only on
//! `(base_seed, i)` and the run order is irrelevant.

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{check_grid, CurveRow, CurveTable};
use crate::channel::{db_to_linear, ChannelError, ChannelModel};
use crate::constellation::{reuse_mask, ConstellationError, ConstellationModel, CoxParams, Snapshot};
use crate::geometry::{rotate_frame_to_observer, EarthFrame, GeometryError, Observer, Rotation, Vec3};
use crate::stats::{binomial_stderr, mean_and_stderr};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Constellation(#[from] ConstellationError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid simulation settings: {0}")]
    Spec(String),
}

type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub model: ConstellationModel,
    pub channel: ChannelModel,
    pub frame: EarthFrame,
    pub observer: Observer,
    /// Redraw the observer longitude uniformly each trial, keeping its latitude.
    pub longitude_uniform: bool,
    pub trials: usize,
    pub base_seed: u64,
    pub thresholds_db: Vec<f64>,
}

impl SimSpec {
    /// Typical user at the north pole.
    pub fn new(model: ConstellationModel, channel: ChannelModel, trials: usize, base_seed: u64) -> Self {
        let frame = EarthFrame::default();
        Self {
            model,
            channel,
            frame,
            observer: frame.north_pole(),
            longitude_uniform: false,
            trials,
            base_seed,
            thresholds_db: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(SimError::Spec("trials must be at least 1".into()));
        }
        if self.thresholds_db.iter().any(|t| t.is_nan() || *t == f64::INFINITY) {
            return Err(SimError::Spec("thresholds must be numbers below +inf".into()));
        }
        if self.thresholds_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SimError::Spec("thresholds must be strictly increasing".into()));
        }
        let r = self.observer.cartesian.norm();
        if (r - self.frame.earth_radius()).abs() > 1e-9 * self.frame.earth_radius() {
            return Err(SimError::Spec(format!("observer is not on the Earth surface (|u| = {r})")));
        }
        self.model.validate(&self.frame)?;
        self.channel.validate()?;
        Ok(())
    }
}

/// Outcome of one snapshot as seen by the observer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// `None` when no satellite is above the horizon.
    pub nearest_distance: Option<f64>,
    pub visible_count: usize,
    /// Serving gain times fading times path gain of the nearest satellite.
    pub serving_power: f64,
    /// Co-channel visible satellites other than the serving one, with interferer gain.
    pub interference_power: f64,
    /// Every visible satellite with interferer gain, before reuse thinning.
    pub aggregate_power: f64,
}

impl TrialRecord {
    pub fn is_outage(&self) -> bool {
        self.nearest_distance.is_none()
    }

    /// SIR (or SINR with `noise`); infinite with neither noise nor interference.
    pub fn sinr(&self, noise: f64) -> f64 {
        let denom = noise + self.interference_power;
        if self.is_outage() {
            0.0
        } else if denom > 0.0 {
            self.serving_power / denom
        } else {
            f64::INFINITY
        }
    }
}

fn trial_rng(base_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(trial);
    rng
}

pub struct Simulator {
    spec: SimSpec,
    fixed: Option<Snapshot>,
    rotation: Rotation,
}

impl Simulator {
    pub fn new(spec: SimSpec) -> Result<Self> {
        spec.validate()?;
        let fixed = if spec.model.is_random() {
            None
        } else {
            Some(spec.model.snapshot(&spec.frame, &mut trial_rng(spec.base_seed, 0))?)
        };
        let rotation = rotate_frame_to_observer(&spec.observer);
        Ok(Self { spec, fixed, rotation })
    }

    pub fn spec(&self) -> &SimSpec {
        &self.spec
    }

    /// Draws a snapshot and measures it from the observer.
    ///
    /// Random (isotropic) constellations are rotated so the observer sits at
    /// the north pole. A fixed constellation is measured from the observer
    /// where it stands.
    pub fn run_trial(&self, trial: u64) -> Result<TrialRecord> {
        let spec = &self.spec;
        let mut rng = trial_rng(spec.base_seed, trial);
        let (observer, rotation) = if spec.longitude_uniform {
            let obs = spec.frame.observer(spec.observer.latitude, TAU * rng.random::<f64>())?;
            (obs, rotate_frame_to_observer(&obs))
        } else {
            (spec.observer, self.rotation)
        };
        let drawn;
        let (snapshot, target, rotation) = match &self.fixed {
            Some(s) => (s, observer.cartesian, None),
            None => {
                drawn = spec.model.snapshot(&spec.frame, &mut rng)?;
                let rot = (!rotation.is_identity()).then_some(rotation);
                (&drawn, spec.frame.north_pole().cartesian, rot)
            }
        };
        Ok(measure(snapshot, target, rotation.as_ref(), &spec.frame, &spec.channel, &mut rng)?)
    }

    /// All trials, in trial order.
    pub fn run_trials(&self) -> Result<Vec<TrialRecord>> {
        (0..self.spec.trials as u64)
            .into_par_iter()
            .map(|i| self.run_trial(i))
            .collect()
    }

    pub fn coverage_curve(&self) -> Result<CoverageResult> {
        Ok(coverage_from_records(&self.run_trials()?, &self.spec))
    }

    pub fn empirical_distance_ccdf(&self, d_grid: &[f64]) -> Result<CurveTable> {
        check_grid(d_grid).map_err(|e| SimError::Spec(e.to_string()))?;
        let mut table = distance_ccdf_from_records(&self.run_trials()?, d_grid);
        self.annotate(&mut table);
        Ok(table)
    }

    pub fn empirical_interference_laplace(&self, s_grid: &[f64]) -> Result<CurveTable> {
        check_grid(s_grid).map_err(|e| SimError::Spec(e.to_string()))?;
        if s_grid.iter().any(|&s| s < 0.0) {
            return Err(SimError::Channel(ChannelError::NegativeArgument(s_grid[0])));
        }
        let mut table = laplace_from_records(&self.run_trials()?, s_grid);
        self.annotate(&mut table);
        Ok(table)
    }

    /// Sorted nearest distances, `+inf` for outage trials.
    pub fn nearest_distance_samples(&self) -> Result<Vec<f64>> {
        Ok(sorted_distances(&self.run_trials()?))
    }

    fn annotate(&self, table: &mut CurveTable) {
        table.metadata.insert("trials".into(), self.spec.trials.to_string());
        table.metadata.insert("base_seed".into(), self.spec.base_seed.to_string());
        table.metadata.insert("version".into(), crate::VERSION.to_string());
    }
}

fn measure(
    snapshot: &Snapshot,
    target: Vec3,
    rotation: Option<&Rotation>,
    frame: &EarthFrame,
    channel: &ChannelModel,
    rng: &mut ChaCha8Rng,
) -> std::result::Result<TrialRecord, ConstellationError> {
    let re2 = frame.earth_radius().powi(2);
    // (satellite index, squared distance) of every visible satellite.
    let mut visible: Vec<(usize, f64)> = Vec::new();
    for (i, sat) in snapshot.satellites.iter().enumerate() {
        let x = match rotation {
            Some(r) => r.apply(sat.position.cartesian),
            None => sat.position.cartesian,
        };
        let rho = sat.position.radius();
        let dx = x - target;
        let d2 = dx.dot(dx);
        if d2 <= rho * rho - re2 {
            visible.push((i, d2));
        }
    }
    let Some(serving_slot) = (0..visible.len()).min_by(|&a, &b| visible[a].1.total_cmp(&visible[b].1)) else {
        return Ok(TrialRecord {
            nearest_distance: None,
            visible_count: 0,
            serving_power: 0.0,
            interference_power: 0.0,
            aggregate_power: 0.0,
        });
    };
    let serving_index = visible[serving_slot].0;
    let half_alpha = 0.5 * channel.alpha;
    let g_serving = db_to_linear(channel.serving_gain_db);
    let g_interferer = db_to_linear(channel.interferer_gain_db);
    let received: Vec<f64> = visible
        .iter()
        .map(|&(_, d2)| channel.fading.draw(rng) * d2.powf(-half_alpha))
        .collect();
    let mask = reuse_mask(snapshot, channel.reuse_factor, serving_index, rng)?;
    assert!(mask[serving_index], "serving satellite dropped by reuse thinning");
    let mut interference = 0.0;
    let mut aggregate = 0.0;
    for (slot, (&(i, _), &p)) in visible.iter().zip(&received).enumerate() {
        aggregate += g_interferer * p;
        if slot != serving_slot && mask[i] {
            interference += g_interferer * p;
        }
    }
    Ok(TrialRecord {
        nearest_distance: Some(visible[serving_slot].1.sqrt()),
        visible_count: visible.len(),
        serving_power: g_serving * received[serving_slot],
        interference_power: interference,
        aggregate_power: aggregate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub tau_db: f64,
    /// Among trials with a visible satellite.
    pub coverage: f64,
    pub stderr: f64,
    /// Over all trials, outage counted as not covered.
    pub coverage_unconditional: f64,
    pub stderr_unconditional: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub rows: Vec<CoverageRow>,
    pub trials: usize,
    pub outage_fraction: f64,
    pub outage_stderr: f64,
    pub mean_visible_count: f64,
    pub mean_visible_stderr: f64,
}

pub fn coverage_from_records(records: &[TrialRecord], spec: &SimSpec) -> CoverageResult {
    let n = records.len();
    let sinrs: Vec<f64> = records
        .iter()
        .filter(|r| !r.is_outage())
        .map(|r| r.sinr(spec.channel.noise_power))
        .collect();
    let served = sinrs.len();
    let rows: Vec<CoverageRow> = spec
        .thresholds_db
        .iter()
        .map(|&tau_db| {
            let tau = db_to_linear(tau_db);
            let covered = sinrs.iter().filter(|&&x| x > tau || x == f64::INFINITY).count();
            let p = if served == 0 { 0.0 } else { covered as f64 / served as f64 };
            let pu = covered as f64 / n as f64;
            CoverageRow {
                tau_db,
                coverage: p,
                stderr: if served == 0 { 0.0 } else { binomial_stderr(p, served) },
                coverage_unconditional: pu,
                stderr_unconditional: binomial_stderr(pu, n),
            }
        })
        .collect();
    debug_assert!(rows.windows(2).all(|w| w[1].coverage <= w[0].coverage));
    let outage = (n - served) as f64 / n as f64;
    let counts: Vec<f64> = records.iter().map(|r| r.visible_count as f64).collect();
    let (mean_visible_count, mean_visible_stderr) = mean_and_stderr(&counts);
    CoverageResult {
        rows,
        trials: n,
        outage_fraction: outage,
        outage_stderr: binomial_stderr(outage, n),
        mean_visible_count,
        mean_visible_stderr,
    }
}

pub fn sorted_distances(records: &[TrialRecord]) -> Vec<f64> {
    let mut d: Vec<f64> = records
        .iter()
        .map(|r| r.nearest_distance.unwrap_or(f64::INFINITY))
        .collect();
    d.sort_by(f64::total_cmp);
    d
}

/// Fraction of trials with `D > d` at each grid point, outage counting as `D = inf`.
pub fn distance_ccdf_from_records(records: &[TrialRecord], d_grid: &[f64]) -> CurveTable {
    let sorted = sorted_distances(records);
    let mut table = CurveTable::new("distance_km", "ccdf");
    table.rows = d_grid
        .iter()
        .map(|&d| {
            let p = crate::stats::fraction_above(&sorted, d);
            CurveRow {
                abscissa: d,
                value: p,
                stderr: Some(binomial_stderr(p, sorted.len())),
                error: None,
            }
        })
        .collect();
    table
}

/// Mean of `exp(-s S)` over trials, `S` the aggregate visible power.
pub fn laplace_from_records(records: &[TrialRecord], s_grid: &[f64]) -> CurveTable {
    let mut table = CurveTable::new("s", "laplace");
    table.rows = s_grid
        .iter()
        .map(|&s| {
            let vals: Vec<f64> = records.iter().map(|r| (-s * r.aggregate_power).exp()).collect();
            let (value, stderr) = mean_and_stderr(&vals);
            CurveRow {
                abscissa: s,
                value,
                stderr: Some(stderr),
                error: None,
            }
        })
        .collect();
    table
}

/// Coverage curves of Cox models sharing the altitude law of `base`, one per
/// `(lambda, mu)` pair, with their pointwise envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub pairs: Vec<(f64, f64)>,
    pub curves: Vec<CoverageResult>,
    /// `(tau_db, min, max)` of conditional coverage across the curves.
    pub envelope: Vec<(f64, f64, f64)>,
}

pub fn coverage_sweep(base: &SimSpec, pairs: &[(f64, f64)]) -> Result<SweepResult> {
    let nu = match &base.model {
        ConstellationModel::Cox { altitude, .. } => altitude.clone(),
        _ => return Err(SimError::Spec("a sweep needs a cox model".into())),
    };
    if pairs.is_empty() {
        return Err(SimError::Spec("a sweep needs at least one (lambda, mu) pair".into()));
    }
    let curves = pairs
        .iter()
        .map(|&(lambda, mu)| {
            let spec = SimSpec {
                model: ConstellationModel::cox(CoxParams {
                    lambda,
                    mu,
                    nu: nu.clone(),
                }),
                ..base.clone()
            };
            Simulator::new(spec)?.coverage_curve()
        })
        .collect::<Result<Vec<_>>>()?;
    let envelope = base
        .thresholds_db
        .iter()
        .enumerate()
        .map(|(k, &tau)| {
            let vals = curves.iter().map(|c| c.rows[k].coverage);
            let lo = vals.clone().fold(f64::INFINITY, f64::min);
            let hi = vals.fold(f64::NEG_INFINITY, f64::max);
            (tau, lo, hi)
        })
        .collect();
    Ok(SweepResult {
        pairs: pairs.to_vec(),
        curves,
        envelope,
    })
}

/// `(lambda, total / lambda)` for each lambda.
pub fn pairs_at_fixed_total(total: f64, lambdas: &[f64]) -> Vec<(f64, f64)> {
    lambdas.iter().map(|&l| (l, total / l)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::mean_visible_count;
    use crate::constellation::{AltitudeDistribution, Shell};

    fn cox(lambda: f64, mu: f64, lo: f64, hi: f64) -> ConstellationModel {
        ConstellationModel::cox(CoxParams {
            lambda,
            mu,
            nu: AltitudeDistribution::uniform(lo, hi),
        })
    }

    #[test]
    fn empty_cox_is_always_outage() {
        let mut spec = SimSpec::new(cox(0.0, 22.0, 7000.0, 7050.0), ChannelModel::default(), 200, 1);
        spec.thresholds_db = vec![0.0];
        let res = Simulator::new(spec).unwrap().coverage_curve().unwrap();
        assert_eq!(res.outage_fraction, 1.0);
        assert_eq!(res.rows[0].coverage_unconditional, 0.0);
    }

    #[test]
    fn single_zenith_satellite_always_covered() {
        let shell = Shell {
            altitude_km: 629.0,
            inclination_deg: 90.0,
            plane_count: 1,
            sats_per_plane: 1,
            phasing: 0,
            raan_offset_deg: 0.0,
        };
        let model = ConstellationModel::Deterministic { shells: vec![shell] };
        let mut spec = SimSpec::new(model, ChannelModel::default(), 10, 3);
        // The single satellite sits over (lat 0, lon 0).
        spec.observer = spec.frame.observer(0.0, 0.0).unwrap();
        spec.thresholds_db = vec![-20.0, 0.0, 40.0];
        let sim = Simulator::new(spec).unwrap();
        let rec = sim.run_trial(0).unwrap();
        assert!((rec.nearest_distance.unwrap() - 629.0).abs() < 1e-6);
        let res = sim.coverage_curve().unwrap();
        assert!(res.rows.iter().all(|r| r.coverage == 1.0));
    }

    #[test]
    fn minus_infinity_threshold_covers_everything_served() {
        let mut spec = SimSpec::new(cox(10.0, 5.0, 7000.0, 7050.0), ChannelModel::default(), 300, 9);
        spec.thresholds_db = vec![f64::NEG_INFINITY, 0.0, 10.0];
        let res = Simulator::new(spec).unwrap().coverage_curve().unwrap();
        assert_eq!(res.rows[0].coverage, 1.0);
        assert!(res.rows[1].coverage >= res.rows[2].coverage);
    }

    #[test]
    fn trials_reproducible_and_order_free() {
        let spec = SimSpec::new(cox(72.0, 22.0, 7000.0, 7050.0), ChannelModel::default(), 8, 77);
        let sim = Simulator::new(spec).unwrap();
        let all = sim.run_trials().unwrap();
        assert_eq!(sim.run_trial(5).unwrap(), all[5]);
        assert_eq!(sim.run_trial(5).unwrap(), sim.run_trial(5).unwrap());
        assert_ne!(all[0], all[1]);
    }

    #[test]
    fn deterministic_runs_bit_reproducible() {
        let shell = Shell {
            altitude_km: 550.0,
            inclination_deg: 53.0,
            plane_count: 12,
            sats_per_plane: 20,
            phasing: 1,
            raan_offset_deg: 0.0,
        };
        let mut spec = SimSpec::new(
            ConstellationModel::Deterministic { shells: vec![shell] },
            ChannelModel {
                reuse_factor: 4,
                ..Default::default()
            },
            50,
            4,
        );
        spec.observer = spec.frame.observer(0.5, 0.0).unwrap();
        spec.longitude_uniform = true;
        let a = Simulator::new(spec.clone()).unwrap().run_trials().unwrap();
        let b = Simulator::new(spec).unwrap().run_trials().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ccdf_below_min_slant_and_laplace_at_zero() {
        let spec = SimSpec::new(cox(20.0, 10.0, 7000.0, 7050.0), ChannelModel::default(), 500, 2);
        let sim = Simulator::new(spec).unwrap();
        let ccdf = sim.empirical_distance_ccdf(&[100.0, 628.0]).unwrap();
        assert!(ccdf.rows.iter().all(|r| r.value == 1.0));
        let lap = sim.empirical_interference_laplace(&[0.0]).unwrap();
        assert_eq!(lap.rows[0].value, 1.0);
        assert!(sim.empirical_distance_ccdf(&[2.0, 1.0]).is_err());
    }

    #[test]
    fn mean_visible_count_matches_intensity() {
        let model = cox(72.0, 22.0, 7000.0, 7050.0);
        let params = model.cox_params().unwrap();
        let mut spec = SimSpec::new(model, ChannelModel::default(), 4000, 12);
        spec.thresholds_db = vec![0.0];
        let res = Simulator::new(spec.clone()).unwrap().coverage_curve().unwrap();
        let expect = mean_visible_count(&params, &spec.frame).unwrap();
        assert!(
            (res.mean_visible_count - expect).abs() < 4.0 * res.mean_visible_stderr,
            "{} vs {expect}",
            res.mean_visible_count
        );
    }

    #[test]
    fn serving_is_nearest_and_reuse_cuts_interference() {
        let base = cox(30.0, 20.0, 7000.0, 7050.0);
        let full = Simulator::new(SimSpec::new(base.clone(), ChannelModel::default(), 300, 5)).unwrap();
        let reuse = Simulator::new(SimSpec::new(
            base,
            ChannelModel {
                reuse_factor: 4,
                ..Default::default()
            },
            300,
            5,
        ))
        .unwrap();
        let (mut i_full, mut i_reuse) = (0.0, 0.0);
        for t in 0..300 {
            let a = full.run_trial(t).unwrap();
            let b = reuse.run_trial(t).unwrap();
            assert_eq!(a.nearest_distance, b.nearest_distance);
            assert_eq!(a.aggregate_power, b.aggregate_power);
            assert!(b.interference_power <= a.interference_power);
            i_full += a.interference_power;
            i_reuse += b.interference_power;
        }
        let ratio = i_reuse / i_full;
        assert!((ratio - 0.25).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn stderr_scales_with_trials() {
        let mut spec = SimSpec::new(cox(72.0, 22.0, 7000.0, 7050.0), ChannelModel::default(), 1_000, 21);
        spec.thresholds_db = vec![0.0];
        let small = Simulator::new(spec.clone()).unwrap().coverage_curve().unwrap();
        spec.trials = 10_000;
        let large = Simulator::new(spec).unwrap().coverage_curve().unwrap();
        let ratio = small.mean_visible_stderr / large.mean_visible_stderr;
        assert!((ratio / 10f64.sqrt() - 1.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn spec_validation() {
        let mut spec = SimSpec::new(cox(1.0, 1.0, 7000.0, 7050.0), ChannelModel::default(), 0, 0);
        assert!(Simulator::new(spec.clone()).is_err());
        spec.trials = 1;
        spec.thresholds_db = vec![1.0, 0.0];
        assert!(Simulator::new(spec.clone()).is_err());
        spec.thresholds_db = vec![];
        spec.observer.cartesian = Vec3::new(0.0, 0.0, 1.0);
        assert!(Simulator::new(spec).is_err());
    }

    #[test]
    fn sweep_envelope_contains_curves() {
        let mut spec = SimSpec::new(cox(1.0, 1.0, 6896.0, 6906.0), ChannelModel::default(), 300, 8);
        spec.thresholds_db = vec![-5.0, 0.0, 5.0];
        let sweep = coverage_sweep(&spec, &pairs_at_fixed_total(100.0, &[5.0, 20.0, 100.0])).unwrap();
        for (k, &(_, lo, hi)) in sweep.envelope.iter().enumerate() {
            for c in &sweep.curves {
                assert!(c.rows[k].coverage >= lo && c.rows[k].coverage <= hi);
            }
        }
        let bin = SimSpec {
            model: ConstellationModel::Binomial {
                count: 10,
                radius_km: 7000.0,
            },
            ..spec
        };
        assert!(coverage_sweep(&bin, &[(1.0, 1.0)]).is_err());
    }
}
