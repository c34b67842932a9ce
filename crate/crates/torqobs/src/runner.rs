//! Executes the sections of a scenario and writes their artifacts.
//!
//! | section          | files                                               |
//! |------------------|-----------------------------------------------------|
//! | `simulation`     | `trajectory.csv`, `metrics.json`                    |
//! | `sweep`          | `margins.csv`, `margins.json`                       |
//! | `identification` | `steady_state.csv`, `acceleration.csv`, `identification.json` |
//!
//! Every run also writes the resolved `scenario.toml`.

use std::path::{Path, PathBuf};

use torqobs_core::analysis::{margin_sweep, table_cells, ErrorMetrics, ObserverKind};
use torqobs_core::identification::{
    acceleration_observations, acceleration_test, identify, steady_state_test, IdentifiedParams,
};
use torqobs_core::observe::run_observers;
use torqobs_core::plant::{simulate, UncertaintyBox};
use torqobs_core::trajectory::Trajectory;

use crate::config::Scenario;
use crate::error::{Error, Result};
use crate::formats::{
    acceleration_csv, margins_csv, margins_json, read_acceleration, read_steady_state,
    steady_state_csv, write_atomic, write_trajectory, IdentificationDoc, MarginRow, MetricsDoc,
    ObserverMetrics, IDENTIFICATION_SCHEMA, SCHEMA_VERSION,
};
use crate::report::{observer_label, ESTIMATE_PREFIX};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const MARGINS_CSV_FILE: &str = "margins.csv";
pub const MARGINS_JSON_FILE: &str = "margins.json";
pub const STEADY_STATE_FILE: &str = "steady_state.csv";
pub const ACCELERATION_FILE: &str = "acceleration.csv";
pub const IDENTIFICATION_FILE: &str = "identification.json";
pub const SCENARIO_FILE: &str = "scenario.toml";

/// A scenario plus where its relative paths resolve and where output goes.
#[derive(Debug, Clone)]
pub struct Run {
    pub scenario: Scenario,
    pub base_dir: PathBuf,
    pub out_dir: PathBuf,
}

impl Run {
    pub fn new(
        scenario: Scenario,
        base_dir: impl Into<PathBuf>,
        out_dir: impl Into<PathBuf>,
    ) -> Self {
        Self {
            scenario,
            base_dir: base_dir.into(),
            out_dir: out_dir.into(),
        }
    }

    /// Loads `config`; `seed` overrides the file's seed.
    pub fn from_config(config: &Path, out_dir: &Path, seed: Option<u64>) -> Result<Self> {
        let mut scenario = Scenario::load(config)?;
        if let Some(s) = seed {
            scenario.seed = s;
        }
        let base = config.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self::new(scenario, base, out_dir))
    }

    fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn prepare(&self) -> Result<()> {
        std::fs::create_dir_all(&self.out_dir).map_err(Error::io(&self.out_dir))?;
        write_atomic(&self.out(SCENARIO_FILE), self.scenario.to_toml().as_bytes())
    }

    pub fn simulate(&self) -> Result<(Trajectory, MetricsDoc)> {
        let s = &self.scenario;
        let (plant, cfg) = s
            .sim_setup()?
            .ok_or_else(|| Error::Usage("scenario has no [simulation] section".into()))?;
        self.prepare()?;
        let mut tr = simulate(&plant, &cfg)?;
        run_observers(&mut tr, &s.observer_set()?)?;
        let metrics = trajectory_metrics(&tr)?;
        let doc = MetricsDoc::new(s.seed, tr.dt, cfg.horizon, metrics);
        write_trajectory(&self.out(TRAJECTORY_FILE), &tr, s.seed)?;
        write_atomic(&self.out(METRICS_FILE), doc.to_json()?.as_bytes())?;
        Ok((tr, doc))
    }

    pub fn sweep(&self) -> Result<Vec<MarginRow>> {
        let s = &self.scenario;
        let sw = s
            .sweep
            .as_ref()
            .ok_or_else(|| Error::Usage("scenario has no [sweep] section".into()))?;
        self.prepare()?;
        let design = s.sweep_design();
        let mut groups: Vec<(String, Vec<UncertaintyBox>)> = sw
            .table_km_fracs
            .iter()
            .map(|&f| {
                (
                    format!("table_km_{f}"),
                    table_cells(&design.nominal, f).to_vec(),
                )
            })
            .collect();
        if !sw.cells.is_empty() {
            let cells = sw.cells.iter().map(|c| c.to_box(&design.nominal)).collect();
            groups.push(("cells".into(), cells));
        }
        let mut rows = Vec::new();
        for (group, cells) in &groups {
            for &obs in &sw.observers {
                let which = ObserverKind::from(obs);
                for r in margin_sweep(cells, which, &design)? {
                    rows.push(MarginRow::new(group, which.name(), &r));
                }
            }
        }
        write_atomic(
            &self.out(MARGINS_CSV_FILE),
            margins_csv(&rows, s.seed).as_bytes(),
        )?;
        write_atomic(
            &self.out(MARGINS_JSON_FILE),
            margins_json(&rows, s.seed)?.as_bytes(),
        )?;
        Ok(rows)
    }

    pub fn identify(&self) -> Result<IdentifiedParams> {
        let s = &self.scenario;
        let id = s
            .identification
            .as_ref()
            .ok_or_else(|| Error::Usage("scenario has no [identification] section".into()))?;
        self.prepare()?;
        let plant = s.plant();
        let spec = id.experiment();
        let noise = s.noise();
        let steady = match &id.steady_state_csv {
            Some(p) => read_steady_state(&self.base_dir.join(p))?,
            None => steady_state_test(&plant, &spec, &noise)?,
        };
        let accel = match &id.acceleration_csv {
            Some(p) => read_acceleration(&self.base_dir.join(p))?,
            None => acceleration_observations(&acceleration_test(&plant, &spec, &noise)?, &spec)?,
        };
        let params = identify(plant.km, &steady, &accel)?;
        let doc = IdentificationDoc {
            schema: IDENTIFICATION_SCHEMA.into(),
            version: SCHEMA_VERSION,
            seed: s.seed,
            km_nm_per_a: plant.km,
            b_nm_s_per_rad: params.b,
            cf_nm: params.cf,
            j_kg_m2: params.j,
            friction_residual_a: params.friction_residual,
            steady_state_points: steady.len(),
            acceleration_points: accel.len(),
        };
        write_atomic(
            &self.out(STEADY_STATE_FILE),
            steady_state_csv(&steady, s.seed).as_bytes(),
        )?;
        write_atomic(
            &self.out(ACCELERATION_FILE),
            acceleration_csv(&accel, s.seed).as_bytes(),
        )?;
        write_atomic(
            &self.out(IDENTIFICATION_FILE),
            (serde_json::to_string_pretty(&doc)? + "\n").as_bytes(),
        )?;
        Ok(params)
    }

    /// Runs every section present in the scenario; returns the names of the
    /// sections that ran.
    pub fn all(&self) -> Result<Vec<&'static str>> {
        let mut ran = Vec::new();
        if self.scenario.simulation.is_some() {
            self.simulate()?;
            ran.push("simulation");
        }
        if self.scenario.sweep.is_some() {
            self.sweep()?;
            ran.push("sweep");
        }
        if self.scenario.identification.is_some() {
            self.identify()?;
            ran.push("identification");
        }
        Ok(ran)
    }
}

/// RMS, STD and step lag for each `tau_hat_*` column, in column order.
pub fn trajectory_metrics(tr: &Trajectory) -> Result<Vec<ObserverMetrics>> {
    tr.extra_columns()
        .filter(|(n, _)| n.starts_with(ESTIMATE_PREFIX))
        .map(|(name, est)| {
            let m = ErrorMetrics::compute(&tr.tau_true, est, tr.dt)?;
            Ok(ObserverMetrics {
                observer: observer_label(name),
                rms_nm: m.rms,
                std_abs_nm: m.std_abs,
                lag_s: torqobs_core::observe::transient_lag(&tr.t, &tr.tau_true, est)?,
            })
        })
        .collect()
}
