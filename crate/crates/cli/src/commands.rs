use orbitcox_core::analytics::{tabulate_curve, CurveKind};
use orbitcox_core::constellation::seeded_rng;
use orbitcox_core::simulate::{
    coverage_from_records, coverage_sweep, distance_ccdf_from_records, laplace_from_records, pairs_at_fixed_total,
};
use orbitcox_core::{ConstellationModel, CoxParams, CurveTable, SimSpec, Simulator};

use crate::config::{Quantity, RunConfig, Source};
use crate::error::CliError;
use crate::output::Table;

fn provenance(table: &mut Table, command: &str, cfg: &RunConfig) {
    table.meta("tool", "orbitcox");
    table.meta("version", orbitcox_core::VERSION);
    table.meta("command", command);
    table.meta("seed", cfg.run.seed);
    table.configs.push(("config".into(), cfg.to_toml()));
}

fn cox_params(cfg: &RunConfig, what: &str) -> Result<CoxParams, CliError> {
    cfg.constellation
        .cox_params()
        .ok_or_else(|| CliError::Config(format!("{what} needs a cox constellation")))
}

pub fn sample(cfg: &RunConfig) -> Result<Table, CliError> {
    let frame = cfg.frame()?;
    let snap = cfg
        .constellation
        .snapshot(&frame, &mut seeded_rng(cfg.run.seed))
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut table = Table::new(&[
        "x_km",
        "y_km",
        "z_km",
        "rho_km",
        "theta_rad",
        "phi_rad",
        "omega_rad",
        "orbit_index",
    ]);
    table.rows = snap
        .satellites
        .iter()
        .map(|s| {
            let p = &s.position;
            vec![
                p.cartesian.x,
                p.cartesian.y,
                p.cartesian.z,
                p.orbit.radius(),
                p.orbit.longitude(),
                p.orbit.inclination(),
                p.orbital_angle,
                s.orbit_index.map_or(f64::NAN, |i| i as f64),
            ]
        })
        .collect();
    provenance(&mut table, "sample", cfg);
    table.meta("model", &snap.model_tag);
    table.meta("satellites", snap.satellites.len());
    table.meta("orbits", snap.orbits.len());
    Ok(table)
}

fn from_curve(curve: &CurveTable, with_errors: bool) -> Table {
    let mut table = Table::new(&[curve.abscissa_label.as_str(), curve.value_label.as_str()]);
    let has_stderr = curve.rows.iter().any(|r| r.stderr.is_some());
    if has_stderr {
        table.columns.push("stderr".into());
    }
    table.rows = curve
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![r.abscissa, r.value];
            if has_stderr {
                row.push(r.stderr.unwrap_or(f64::NAN));
            }
            row
        })
        .collect();
    if with_errors {
        let errors = curve.rows.iter().map(|r| r.error.clone().unwrap_or_default()).collect();
        table.text_column = Some(("error".into(), errors));
    }
    for (k, v) in &curve.metadata {
        table.meta(k, v);
    }
    table
}

fn analytic_curve(cfg: &RunConfig, grid: &[f64]) -> Result<Table, CliError> {
    let kind = match cfg.run.quantity {
        Quantity::Distance => CurveKind::DistanceCcdf,
        Quantity::OutageLambda => CurveKind::OutageVsLambda,
        Quantity::OutageMu => CurveKind::OutageVsMu,
        Quantity::Laplace => CurveKind::LaplaceVsS,
        Quantity::Coverage => {
            return Err(CliError::Config(
                "coverage has no closed form; use `mc` or `sweep`".into(),
            ))
        }
    };
    let params = cox_params(cfg, "analytic")?;
    let curve = tabulate_curve(kind, grid, &params, &cfg.channel, &cfg.frame()?, &cfg.quadrature)?;
    let mut table = from_curve(&curve, true);
    let failed = curve.failed_rows().count();
    table.meta("failed_rows", failed);
    Ok(table)
}

/// Rows that failed to converge; the caller writes the table then exits 3.
pub fn failed_rows(table: &Table) -> usize {
    table
        .metadata
        .get("failed_rows")
        .and_then(|v| v.parse().ok())
        .unwrap_or(0)
}

pub fn analytic(cfg: &RunConfig) -> Result<Table, CliError> {
    let grid = cfg.run.grid()?;
    let mut table = analytic_curve(cfg, &grid)?;
    provenance(&mut table, "analytic", cfg);
    Ok(table)
}

fn sim_spec(cfg: &RunConfig, model: ConstellationModel, thresholds_db: Vec<f64>) -> Result<SimSpec, CliError> {
    let frame = cfg.frame()?;
    Ok(SimSpec {
        model,
        channel: cfg.channel.clone(),
        frame,
        observer: cfg.observer()?,
        longitude_uniform: cfg.observer.longitude_uniform,
        trials: cfg.run.trials,
        base_seed: cfg.run.seed,
        thresholds_db,
    })
}

fn coverage_table(result: &orbitcox_core::CoverageResult) -> Table {
    let mut table = Table::new(&[
        "tau_db",
        "coverage",
        "stderr",
        "coverage_unconditional",
        "stderr_unconditional",
    ]);
    table.rows = result
        .rows
        .iter()
        .map(|r| vec![r.tau_db, r.coverage, r.stderr, r.coverage_unconditional, r.stderr_unconditional])
        .collect();
    table.meta("outage_fraction", result.outage_fraction);
    table.meta("outage_stderr", result.outage_stderr);
    table.meta("mean_visible_count", result.mean_visible_count);
    table
}

fn mc_curve(cfg: &RunConfig, grid: &[f64]) -> Result<Table, CliError> {
    let mut table = match cfg.run.quantity {
        Quantity::Distance | Quantity::Laplace => {
            let sim = Simulator::new(sim_spec(cfg, cfg.constellation.clone(), Vec::new())?)?;
            let records = sim.run_trials()?;
            let curve = if cfg.run.quantity == Quantity::Distance {
                distance_ccdf_from_records(&records, grid)
            } else {
                if grid[0] < 0.0 {
                    return Err(CliError::Config("laplace grid must be non-negative".into()));
                }
                laplace_from_records(&records, grid)
            };
            from_curve(&curve, false)
        }
        Quantity::Coverage => {
            let spec = sim_spec(cfg, cfg.constellation.clone(), grid.to_vec())?;
            let sim = Simulator::new(spec)?;
            coverage_table(&coverage_from_records(&sim.run_trials()?, sim.spec()))
        }
        Quantity::OutageLambda | Quantity::OutageMu => {
            let base = cox_params(cfg, "an outage sweep")?;
            let by_lambda = cfg.run.quantity == Quantity::OutageLambda;
            let mut table = Table::new(&[if by_lambda { "lambda" } else { "mu" }, "outage", "stderr"]);
            for &x in grid {
                let params = if by_lambda {
                    CoxParams { lambda: x, ..base.clone() }
                } else {
                    CoxParams { mu: x, ..base.clone() }
                };
                let spec = sim_spec(cfg, ConstellationModel::cox(params), Vec::new())?;
                let res = coverage_from_records(&Simulator::new(spec.clone())?.run_trials()?, &spec);
                table.rows.push(vec![x, res.outage_fraction, res.outage_stderr]);
            }
            table
        }
    };
    table.meta("trials", cfg.run.trials);
    Ok(table)
}

pub fn mc(cfg: &RunConfig) -> Result<Table, CliError> {
    let grid = cfg.run.grid()?;
    let mut table = mc_curve(cfg, &grid)?;
    provenance(&mut table, "mc", cfg);
    Ok(table)
}

fn evaluate(cfg: &RunConfig, source: Source, grid: &[f64]) -> Result<Table, CliError> {
    match source {
        Source::Analytic => analytic_curve(cfg, grid),
        Source::Mc => mc_curve(cfg, grid),
    }
}

fn source_name(s: Source) -> &'static str {
    match s {
        Source::Analytic => "analytic",
        Source::Mc => "mc",
    }
}

/// Evaluates the configured quantity on the left config and on `right`
/// (the same config when `None`) and joins the curves on the grid of the
/// left config.
pub fn compare(left: &RunConfig, right: Option<&RunConfig>) -> Result<Table, CliError> {
    let grid = left.run.grid()?;
    let right_cfg = right.unwrap_or(left);
    if right_cfg.run.quantity != left.run.quantity {
        return Err(CliError::Config("compared configs must share run.quantity".into()));
    }
    let a = evaluate(left, left.compare.left, &grid)?;
    let b = evaluate(right_cfg, left.compare.right, &grid)?;
    let value_name = a.columns[1].clone();
    let mut table = Table::new(&[
        a.columns[0].as_str(),
        "left",
        "left_stderr",
        "right",
        "right_stderr",
        "difference",
    ]);
    let nan = vec![f64::NAN; grid.len()];
    let av = a.column(&value_name).expect("value column");
    let bv = b.column(&value_name).expect("value column");
    let ae = a.column("stderr").unwrap_or_else(|| nan.clone());
    let be = b.column("stderr").unwrap_or(nan);
    let mut max_dev: f64 = 0.0;
    for i in 0..grid.len() {
        let d = av[i] - bv[i];
        if d.is_finite() {
            max_dev = max_dev.max(d.abs());
        }
        table.rows.push(vec![grid[i], av[i], ae[i], bv[i], be[i], d]);
    }
    provenance(&mut table, "compare", left);
    if let Some(r) = right {
        table.configs.push(("right_config".into(), r.to_toml()));
    }
    table.meta("quantity", &value_name);
    table.meta("left_source", source_name(left.compare.left));
    table.meta("right_source", source_name(left.compare.right));
    table.meta("max_abs_deviation", max_dev);
    if left.run.quantity == Quantity::Distance {
        // Sup-distance between the two CCDFs on the grid.
        table.meta("ks_statistic", max_dev);
    }
    table.meta("seed", left.run.seed);
    table.meta("right_seed", right_cfg.run.seed);
    table.meta("failed_rows", failed_rows(&a) + failed_rows(&b));
    Ok(table)
}

/// Coverage curves of Cox models with `lambda * mu = total`, their envelope
/// and optionally a binomial reference.
pub fn sweep(cfg: &RunConfig) -> Result<Table, CliError> {
    let section = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep needs a [sweep] section".into()))?;
    if !(section.total > 0.0) || section.lambdas.is_empty() || section.lambdas.iter().any(|&l| !(l > 0.0)) {
        return Err(CliError::Config("sweep.total and sweep.lambdas must be positive and non-empty".into()));
    }
    let grid = cfg.run.grid()?;
    cox_params(cfg, "sweep")?;
    let spec = sim_spec(cfg, cfg.constellation.clone(), grid.clone())?;
    let pairs = pairs_at_fixed_total(section.total, &section.lambdas);
    let result = coverage_sweep(&spec, &pairs)?;

    let mut columns = vec!["tau_db".to_string(), "envelope_min".into(), "envelope_max".into()];
    for &(l, m) in &pairs {
        columns.push(format!("cox_lambda{l}_mu{m}"));
    }
    let binomial = match &section.binomial {
        Some(b) => {
            let model = ConstellationModel::Binomial {
                count: b.count,
                radius_km: b.radius_km,
            };
            let spec = sim_spec(cfg, model, grid.clone())?;
            let res = Simulator::new(spec)?.coverage_curve()?;
            columns.push(format!("binomial_n{}", b.count));
            columns.push(format!("binomial_n{}_stderr", b.count));
            Some(res)
        }
        None => None,
    };
    let mut table = Table::new(&columns);
    for (k, &(tau, lo, hi)) in result.envelope.iter().enumerate() {
        let mut row = vec![tau, lo, hi];
        row.extend(result.curves.iter().map(|c| c.rows[k].coverage));
        if let Some(b) = &binomial {
            row.push(b.rows[k].coverage);
            row.push(b.rows[k].stderr);
        }
        table.rows.push(row);
    }
    provenance(&mut table, "sweep", cfg);
    table.meta("trials", cfg.run.trials);
    table.meta("total", section.total);
    Ok(table)
}
