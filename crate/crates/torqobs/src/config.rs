//! Scenario files in TOML. Every physical quantity carries its unit in the
//! key name (`speed_ref_rad_s`, `horizon_s`, ...).

use std::path::Path;

use serde::{Deserialize, Serialize};
use torqobs_core::analysis::{ObserverKind, SweepDesign};
use torqobs_core::dob::{DobConfig, DEFAULT_OMEGA0};
use torqobs_core::identification::ExperimentSpec;
use torqobs_core::luenberger::{design_by_poles, LuenbergerDesign, DEFAULT_POLE_MULTIPLIER};
use torqobs_core::observe::ObserverSet;
use torqobs_core::plant::{
    LoadKind, LoadProfile, NoiseSpec, PlantParams, SimConfig, SpeedController, UncertaintyBox,
    CONTROL_PERIOD, DEFAULT_ENCODER_QUANTUM,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub plant: PlantSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub load: LoadSection,
    #[serde(default)]
    pub observers: ObserversSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identification: Option<IdentificationSection>,
}

impl Default for Scenario {
    /// Reference plant at 10.5 rad/s under a square-plus-sine load with
    /// both observers.
    fn default() -> Self {
        Self {
            seed: 0,
            plant: PlantSection::default(),
            noise: NoiseSection::default(),
            load: LoadSection::default(),
            observers: ObserversSection::default(),
            simulation: Some(SimulationSection::default()),
            sweep: None,
            identification: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub km_nm_per_a: f64,
    pub j_kg_m2: f64,
    pub b_nm_s_per_rad: f64,
    pub cf_nm: f64,
    pub pole_pairs: u32,
}

impl Default for PlantSection {
    fn default() -> Self {
        let p = PlantParams::reference();
        Self {
            km_nm_per_a: p.km,
            j_kg_m2: p.j,
            b_nm_s_per_rad: p.b,
            cf_nm: p.cf,
            pole_pairs: p.pole_pairs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub encoder_quantum_rad: f64,
    pub current_noise_std_a: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            encoder_quantum_rad: DEFAULT_ENCODER_QUANTUM,
            current_noise_std_a: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadKindName {
    Constant,
    Square,
    Sine,
    SquarePlusSine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSection {
    pub kind: LoadKindName,
    pub amplitude_nm: f64,
    #[serde(default)]
    pub frequency_hz: f64,
    #[serde(default)]
    pub offset_nm: f64,
    #[serde(default = "half")]
    pub duty: f64,
    #[serde(default)]
    pub start_s: f64,
    #[serde(default)]
    pub sine_amplitude_nm: f64,
    #[serde(default)]
    pub sine_frequency_hz: f64,
}

fn half() -> f64 {
    0.5
}

impl Default for LoadSection {
    fn default() -> Self {
        Self {
            kind: LoadKindName::SquarePlusSine,
            amplitude_nm: 0.4,
            frequency_hz: 0.5,
            offset_nm: 0.1,
            duty: 0.5,
            start_s: 0.1,
            sine_amplitude_nm: 0.1,
            sine_frequency_hz: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserversSection {
    /// Compensate the modeled Coulomb friction in the observer input.
    #[serde(default = "yes")]
    pub friction_feedforward: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub luenberger: Option<LuenbergerSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dob: Option<DobSection>,
}

fn yes() -> bool {
    true
}

impl Default for ObserversSection {
    fn default() -> Self {
        Self {
            friction_feedforward: true,
            luenberger: Some(LuenbergerSection::default()),
            dob: Some(DobSection::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LuenbergerSection {
    /// Double pole at this multiple of the mechanical pole `−b/J`.
    #[serde(default = "default_multiplier")]
    pub pole_multiplier: f64,
    /// Explicit poles; override `pole_multiplier` when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poles_rad_s: Option<[f64; 2]>,
}

fn default_multiplier() -> f64 {
    DEFAULT_POLE_MULTIPLIER
}

impl Default for LuenbergerSection {
    fn default() -> Self {
        Self {
            pole_multiplier: DEFAULT_POLE_MULTIPLIER,
            poles_rad_s: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DobSection {
    #[serde(default = "default_omega0")]
    pub omega0_rad_s: f64,
}

fn default_omega0() -> f64 {
    DEFAULT_OMEGA0
}

impl Default for DobSection {
    fn default() -> Self {
        Self {
            omega0_rad_s: DEFAULT_OMEGA0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub speed_ref_rad_s: f64,
    #[serde(default)]
    pub initial_speed_rad_s: f64,
    pub horizon_s: f64,
    #[serde(default = "default_dt")]
    pub dt_s: f64,
    #[serde(default = "default_bandwidth")]
    pub controller_bandwidth_rad_s: f64,
    #[serde(default = "default_torque_limit")]
    pub torque_limit_nm: f64,
    /// Deviation of the simulated plant from the nominal model the
    /// observers use, as fractions of the nominal values.
    #[serde(default)]
    pub plant_delta: DeltaFractions,
}

fn default_dt() -> f64 {
    CONTROL_PERIOD
}

fn default_bandwidth() -> f64 {
    SpeedController::DEFAULT_BANDWIDTH
}

fn default_torque_limit() -> f64 {
    SpeedController::DEFAULT_TORQUE_LIMIT
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            speed_ref_rad_s: 10.5,
            initial_speed_rad_s: 10.5,
            horizon_s: 4.0,
            dt_s: CONTROL_PERIOD,
            controller_bandwidth_rad_s: SpeedController::DEFAULT_BANDWIDTH,
            torque_limit_nm: SpeedController::DEFAULT_TORQUE_LIMIT,
            plant_delta: DeltaFractions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaFractions {
    #[serde(default)]
    pub d_km_frac: f64,
    #[serde(default)]
    pub d_j_frac: f64,
    #[serde(default)]
    pub d_b_frac: f64,
}

impl DeltaFractions {
    pub fn to_box(&self, p: &PlantParams) -> UncertaintyBox {
        UncertaintyBox::relative(p, self.d_km_frac, self.d_j_frac, self.d_b_frac)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObserverName {
    Luenberger,
    Dob,
}

impl From<ObserverName> for ObserverKind {
    fn from(o: ObserverName) -> Self {
        match o {
            ObserverName::Luenberger => ObserverKind::Luenberger,
            ObserverName::Dob => ObserverKind::Dob,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "both_observers")]
    pub observers: Vec<ObserverName>,
    /// Each entry adds the four `(±ΔK_m, ±b/3)` table cells with
    /// `|ΔK_m| = frac·K_m`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub table_km_fracs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<DeltaFractions>,
}

fn both_observers() -> Vec<ObserverName> {
    vec![ObserverName::Dob, ObserverName::Luenberger]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentificationSection {
    pub speeds_rad_s: Vec<f64>,
    pub settle_s: f64,
    pub average_s: f64,
    pub accel_current_a: f64,
    pub accel_duration_s: f64,
    pub accel_skip_s: f64,
    pub ma_window_samples: usize,
    pub lp_tau_s: f64,
    #[serde(default = "default_dt")]
    pub dt_s: f64,
    /// Measured steady-state points (`qdot_rad_s,i_q_a`) used instead of the
    /// synthetic test; relative to the scenario file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steady_state_csv: Option<String>,
    /// Measured acceleration points (`qdot_rad_s,qddot_rad_s2,i_q_a`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceleration_csv: Option<String>,
}

impl Default for IdentificationSection {
    fn default() -> Self {
        let e = ExperimentSpec::default();
        Self {
            speeds_rad_s: e.speeds,
            settle_s: e.settle,
            average_s: e.average,
            accel_current_a: e.accel_current,
            accel_duration_s: e.accel_duration,
            accel_skip_s: e.accel_skip,
            ma_window_samples: e.ma_window,
            lp_tau_s: e.lp_tau,
            dt_s: e.dt,
            steady_state_csv: None,
            acceleration_csv: None,
        }
    }
}

impl IdentificationSection {
    pub fn experiment(&self) -> ExperimentSpec {
        ExperimentSpec {
            speeds: self.speeds_rad_s.clone(),
            settle: self.settle_s,
            average: self.average_s,
            accel_current: self.accel_current_a,
            accel_duration: self.accel_duration_s,
            accel_skip: self.accel_skip_s,
            ma_window: self.ma_window_samples,
            lp_tau: self.lp_tau_s,
            dt: self.dt_s,
        }
    }
}

impl Scenario {
    /// Parses and validates; diagnostics name the offending line.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config {
            path: origin.to_string(),
            line: e.span().map_or(1, |r| line_of_offset(text, r.start)),
            message: e.message().trim().to_string(),
        })?;
        s.validate(text, origin)?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn plant(&self) -> PlantParams {
        let p = &self.plant;
        PlantParams {
            km: p.km_nm_per_a,
            j: p.j_kg_m2,
            b: p.b_nm_s_per_rad,
            cf: p.cf_nm,
            pole_pairs: p.pole_pairs,
        }
    }

    pub fn noise(&self) -> NoiseSpec {
        NoiseSpec {
            encoder_quantum: self.noise.encoder_quantum_rad,
            current_noise_std: self.noise.current_noise_std_a,
            seed: self.seed,
        }
    }

    pub fn load_profile(&self) -> LoadProfile {
        let l = &self.load;
        let kind = match l.kind {
            LoadKindName::Constant => LoadKind::Constant,
            LoadKindName::Square => LoadKind::Square,
            LoadKindName::Sine => LoadKind::Sine,
            LoadKindName::SquarePlusSine => LoadKind::SquarePlusSine {
                sine_amplitude: l.sine_amplitude_nm,
                sine_frequency_hz: l.sine_frequency_hz,
            },
        };
        LoadProfile {
            kind,
            amplitude: l.amplitude_nm,
            frequency_hz: l.frequency_hz,
            offset: l.offset_nm,
            duty: l.duty,
            start: l.start_s,
        }
    }

    pub fn luenberger(&self) -> Result<Option<LuenbergerDesign>> {
        let p = self.plant();
        let Some(l) = &self.observers.luenberger else {
            return Ok(None);
        };
        let [p1, p2] = l
            .poles_rad_s
            .unwrap_or([l.pole_multiplier * p.mechanical_pole(); 2]);
        Ok(Some(design_by_poles(&p, p1, p2)?))
    }

    pub fn dob(&self) -> Result<Option<DobConfig>> {
        self.observers
            .dob
            .as_ref()
            .map(|d| DobConfig::new(d.omega0_rad_s, self.plant()).map_err(Error::from))
            .transpose()
    }

    pub fn observer_set(&self) -> Result<ObserverSet> {
        Ok(ObserverSet {
            luenberger: self.luenberger()?,
            dob: self.dob()?,
            friction_cf: if self.observers.friction_feedforward {
                self.plant.cf_nm
            } else {
                0.0
            },
        })
    }

    /// Simulated (possibly perturbed) plant and its run settings. The drive
    /// reports torque with the nominal `K_m`.
    pub fn sim_setup(&self) -> Result<Option<(PlantParams, SimConfig)>> {
        let Some(sim) = &self.simulation else {
            return Ok(None);
        };
        let nominal = self.plant();
        let actual = nominal.perturbed(&sim.plant_delta.to_box(&nominal))?;
        let mut cfg = SimConfig::new(
            &actual,
            sim.speed_ref_rad_s,
            self.load_profile(),
            sim.horizon_s,
        );
        cfg.dt = sim.dt_s;
        cfg.noise = self.noise();
        cfg.initial_speed = sim.initial_speed_rad_s;
        cfg.controller = SpeedController::by_bandwidth(
            &nominal,
            sim.controller_bandwidth_rad_s,
            sim.torque_limit_nm,
        );
        cfg.sensed_km = Some(nominal.km);
        Ok(Some((actual, cfg)))
    }

    /// Design shared by all sweep cells: the configured observers, or the
    /// reference designs where a section is absent.
    pub fn sweep_design(&self) -> SweepDesign {
        let nominal = self.plant();
        let pole = self
            .observers
            .luenberger
            .as_ref()
            .map_or(DEFAULT_POLE_MULTIPLIER, |l| l.pole_multiplier)
            * nominal.mechanical_pole();
        SweepDesign {
            nominal,
            omega0: self
                .observers
                .dob
                .as_ref()
                .map_or(DEFAULT_OMEGA0, |d| d.omega0_rad_s),
            observer_poles: self
                .observers
                .luenberger
                .as_ref()
                .and_then(|l| l.poles_rad_s)
                .unwrap_or([pole, pole]),
        }
    }

    fn validate(&self, text: &str, origin: &str) -> Result<()> {
        let mut errs = Vec::new();
        let mut push = |table: &str, key: &str, message: String| {
            errs.push(Error::Config {
                path: origin.to_string(),
                line: locate(text, table, key, 0),
                message,
            });
        };
        if self.simulation.is_none() && self.sweep.is_none() && self.identification.is_none() {
            push(
                "",
                "",
                "nothing to do: add a [simulation], [sweep] or [identification] section".into(),
            );
        }
        if let Err(e) = self.plant().validate() {
            push("plant", "", e.to_string());
        }
        if let Err(e) = self.noise().validate() {
            push("noise", "", e.to_string());
        }
        if let Some(l) = &self.observers.luenberger {
            if !(l.pole_multiplier > 0.0) {
                push(
                    "observers.luenberger",
                    "pole_multiplier",
                    "pole_multiplier must be > 0".into(),
                );
            }
            if let Some([a, b]) = l.poles_rad_s {
                if !(a < 0.0 && b < 0.0) {
                    push(
                        "observers.luenberger",
                        "poles_rad_s",
                        "observer poles must be < 0".into(),
                    );
                }
            }
        }
        if let Some(d) = &self.observers.dob {
            if !(d.omega0_rad_s > 0.0) {
                push(
                    "observers.dob",
                    "omega0_rad_s",
                    "omega0_rad_s must be > 0".into(),
                );
            }
        }
        if let Some(sim) = &self.simulation {
            if self.observers.luenberger.is_none() && self.observers.dob.is_none() {
                push(
                    "observers",
                    "",
                    "simulation requested but the observer set is empty".into(),
                );
            }
            for (key, v) in [
                ("horizon_s", sim.horizon_s),
                ("dt_s", sim.dt_s),
                ("controller_bandwidth_rad_s", sim.controller_bandwidth_rad_s),
                ("torque_limit_nm", sim.torque_limit_nm),
            ] {
                if !(v > 0.0) {
                    push("simulation", key, format!("{key} = {v} must be > 0"));
                }
            }
            if sim.dt_s > 0.0 && sim.horizon_s < 2.0 * sim.dt_s {
                push(
                    "simulation",
                    "horizon_s",
                    "horizon must span at least two samples".into(),
                );
            }
            let p = self.plant();
            if let Err(e) = sim.plant_delta.to_box(&p).check(&p) {
                push("simulation.plant_delta", "", e.to_string());
            }
            if let Err(e) = self.load_profile().validate() {
                push("load", "", e.to_string());
            }
        }
        if let Some(sw) = &self.sweep {
            if sw.observers.is_empty() {
                push(
                    "sweep",
                    "observers",
                    "sweep needs at least one observer".into(),
                );
            }
            if sw.cells.is_empty() && sw.table_km_fracs.is_empty() {
                push(
                    "sweep",
                    "",
                    "sweep has no cells and no table_km_fracs".into(),
                );
            }
            let p = self.plant();
            for (i, c) in sw.cells.iter().enumerate() {
                if let Err(e) = c.to_box(&p).check(&p) {
                    errs.push(Error::Config {
                        path: origin.to_string(),
                        line: locate(text, "sweep.cells", "", i),
                        message: format!("sweep cell {i}: {e}"),
                    });
                }
            }
            for (i, f) in sw.table_km_fracs.iter().enumerate() {
                if !(f.abs() < 1.0) {
                    errs.push(Error::Config {
                        path: origin.to_string(),
                        line: locate(text, "sweep", "table_km_fracs", 0),
                        message: format!("table_km_fracs[{i}] = {f} must lie in (-1, 1)"),
                    });
                }
            }
        }
        if let Some(id) = &self.identification {
            if let Err(e) = id.experiment().validate() {
                errs.push(Error::Config {
                    path: origin.to_string(),
                    line: locate(text, "identification", "", 0),
                    message: e.to_string(),
                });
            }
        }
        match errs.len() {
            0 => Ok(()),
            1 => Err(errs.pop().expect("one error")),
            _ => Err(Error::ConfigList(errs)),
        }
    }
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// 1-based line of `key = ...` inside `[table]` (the `nth` occurrence for
/// arrays of tables). Falls back to the table header, then to line 1.
fn locate(text: &str, table: &str, key: &str, nth: usize) -> usize {
    let mut current = String::new();
    let mut seen = 0usize;
    let mut header_line = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            current = line
                .trim_matches(|c| c == '[' || c == ']')
                .trim()
                .to_string();
            if current == table {
                if header_line.is_some() && seen < nth {
                    seen += 1;
                    header_line = Some(i + 1);
                } else if header_line.is_none() {
                    header_line = Some(i + 1);
                }
                if seen > nth {
                    break;
                }
            }
            continue;
        }
        if current == table && seen == nth && !key.is_empty() {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return i + 1;
                }
            }
        }
    }
    header_line.unwrap_or(1)
}
