//! On-disk artifacts.
//!
//! Trajectory CSV: `#` comment lines (schema, seed, sample period), then a
//! header `t,u,q,qdot,tau_true[,observer columns]` and one row per sample.
//! Numbers carry 17 significant digits so a read-back is bit exact.
//!
//! Margin CSV: `group,observer,d_km_nm_per_a,d_j_kg_m2,d_b_nm_s_per_rad,
//! min_phase,unstable_zero_rad_s,k_c,omega_c_rad_s,phi_deg`. Unbounded
//! margins are written `inf`; absent values are empty.
//!
//! Observation CSVs: `qdot_rad_s,i_q_a` (steady state) and
//! `qdot_rad_s,qddot_rad_s2,i_q_a` (acceleration).

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use torqobs_core::analysis::MarginReport;
use torqobs_core::identification::{AccelObs, SteadyStateObs};
use torqobs_core::lti::Margin;
use torqobs_core::trajectory::{Trajectory, BASE_COLUMNS};

use crate::error::{Error, Result};

pub const TRAJECTORY_SCHEMA: &str = "torqobs-trajectory";
pub const METRICS_SCHEMA: &str = "torqobs-metrics";
pub const MARGINS_SCHEMA: &str = "torqobs-margins";
pub const IDENTIFICATION_SCHEMA: &str = "torqobs-identification";
pub const SCHEMA_VERSION: u32 = 1;

pub const MARGIN_COLUMNS: [&str; 10] = [
    "group",
    "observer",
    "d_km_nm_per_a",
    "d_j_kg_m2",
    "d_b_nm_s_per_rad",
    "min_phase",
    "unstable_zero_rad_s",
    "k_c",
    "omega_c_rad_s",
    "phi_deg",
];

/// Writes `bytes` to a temporary file beside `path` and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(Error::io(dir))?;
    tmp.write_all(bytes).map_err(Error::io(path))?;
    tmp.persist(path).map_err(|e| Error::Io {
        path: path.into(),
        source: e.error,
    })?;
    Ok(())
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn parse_num(s: &str) -> Option<f64> {
    s.trim().parse().ok()
}

pub fn trajectory_csv(tr: &Trajectory, seed: u64) -> String {
    let names = tr.column_names();
    let cols: Vec<&[f64]> = names
        .iter()
        .map(|n| tr.column(n).expect("listed column exists"))
        .collect();
    let mut out = String::with_capacity(tr.len() * names.len() * 24 + 128);
    let _ = writeln!(
        out,
        "# schema={TRAJECTORY_SCHEMA} version={SCHEMA_VERSION} seed={seed} dt_s={}",
        num(tr.dt)
    );
    out.push_str(&names.join(","));
    out.push('\n');
    for k in 0..tr.len() {
        for (i, c) in cols.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&num(c[k]));
        }
        out.push('\n');
    }
    out
}

pub fn write_trajectory(path: &Path, tr: &Trajectory, seed: u64) -> Result<()> {
    write_atomic(path, trajectory_csv(tr, seed).as_bytes())
}

/// Column-major numeric table as read from a CSV file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn len(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Fails with every listed column that is absent.
    pub fn require(&self, names: &[&str]) -> Result<()> {
        let missing: Vec<String> = names
            .iter()
            .filter(|n| self.column(n).is_none())
            .map(|n| n.to_string())
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::MissingColumns(missing))
        }
    }
}

/// Reads any numeric CSV with a header row; `#` lines are skipped.
pub fn read_table(path: &Path) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(Error::csv(path))?;
    let names: Vec<String> = rdr
        .headers()
        .map_err(Error::csv(path))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut columns = vec![Vec::new(); names.len()];
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(Error::csv(path))?;
        for (i, field) in rec.iter().enumerate() {
            let v = parse_num(field).ok_or_else(|| Error::Format {
                path: path.into(),
                message: format!(
                    "row {}: `{field}` in column {} is not a number",
                    row + 1,
                    names[i]
                ),
            })?;
            columns[i].push(v);
        }
    }
    Ok(Table { names, columns })
}

/// Reads a trajectory written by [`write_trajectory`] (or any CSV holding
/// the base columns with uniform time steps).
pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let table = read_table(path)?;
    table.require(&BASE_COLUMNS)?;
    let col = |n: &str| table.column(n).expect("required").to_vec();
    let t = col("t");
    let dt = match t.as_slice() {
        [a, b, ..] => b - a,
        _ => {
            return Err(Error::Format {
                path: path.into(),
                message: "trajectory needs at least two rows".into(),
            })
        }
    };
    let mut tr = Trajectory::with_capacity(dt, t.len());
    let (u, q, qdot, tau) = (col("u"), col("q"), col("qdot"), col("tau_true"));
    for k in 0..t.len() {
        tr.push_row(t[k], u[k], q[k], qdot[k], tau[k]);
    }
    for (name, data) in table.names.iter().zip(&table.columns) {
        if !BASE_COLUMNS.contains(&name.as_str()) {
            tr.set_column(name, data.clone())?;
        }
    }
    tr.validate()?;
    Ok(tr)
}

/// JSON number, or the string `"inf"` for an unbounded margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonMargin {
    Finite(f64),
    Infinite(InfTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfTag {
    #[serde(rename = "inf")]
    Inf,
}

impl From<Margin> for JsonMargin {
    fn from(m: Margin) -> Self {
        match m {
            Margin::Finite(v) => JsonMargin::Finite(v),
            Margin::Infinite => JsonMargin::Infinite(InfTag::Inf),
        }
    }
}

impl From<JsonMargin> for Margin {
    fn from(m: JsonMargin) -> Self {
        match m {
            JsonMargin::Finite(v) => Margin::Finite(v),
            JsonMargin::Infinite(_) => Margin::Infinite,
        }
    }
}

/// One margin row with its labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginRow {
    /// Which set of cells the row belongs to, e.g. `table_km_0.1`.
    pub group: String,
    pub observer: String,
    pub d_km_nm_per_a: f64,
    pub d_j_kg_m2: f64,
    pub d_b_nm_s_per_rad: f64,
    pub min_phase: bool,
    pub unstable_zero_rad_s: Option<f64>,
    pub k_c: JsonMargin,
    pub omega_c_rad_s: Option<f64>,
    pub phi_deg: JsonMargin,
}

impl MarginRow {
    pub fn new(group: &str, observer: &str, r: &MarginReport) -> Self {
        Self {
            group: group.into(),
            observer: observer.into(),
            d_km_nm_per_a: r.d_km,
            d_j_kg_m2: r.d_j,
            d_b_nm_s_per_rad: r.d_b,
            min_phase: r.min_phase,
            unstable_zero_rad_s: r.unstable_zero_freq,
            k_c: r.k_c.into(),
            omega_c_rad_s: r.omega_c,
            phi_deg: r.phi.into(),
        }
    }

    pub fn k_c(&self) -> Margin {
        self.k_c.into()
    }

    pub fn phi(&self) -> Margin {
        self.phi_deg.into()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginsDoc {
    pub schema: String,
    pub version: u32,
    pub seed: u64,
    pub rows: Vec<MarginRow>,
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn margin(m: JsonMargin) -> String {
    num(Margin::from(m).value())
}

pub fn margins_csv(rows: &[MarginRow], seed: u64) -> String {
    let mut out = format!("# schema={MARGINS_SCHEMA} version={SCHEMA_VERSION} seed={seed}\n");
    out.push_str(&MARGIN_COLUMNS.join(","));
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.group,
            r.observer,
            num(r.d_km_nm_per_a),
            num(r.d_j_kg_m2),
            num(r.d_b_nm_s_per_rad),
            r.min_phase,
            opt(r.unstable_zero_rad_s),
            margin(r.k_c),
            opt(r.omega_c_rad_s),
            margin(r.phi_deg),
        );
    }
    out
}

pub fn read_margins_csv(path: &Path) -> Result<Vec<MarginRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(Error::csv(path))?;
    let bad = |row: usize, what: &str| Error::Format {
        path: path.into(),
        message: format!("row {row}: bad {what}"),
    };
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(Error::csv(path))?;
        let field = |j: usize| rec.get(j).unwrap_or("");
        let f = |j: usize| parse_num(field(j)).ok_or_else(|| bad(i + 1, MARGIN_COLUMNS[j]));
        let o = |j: usize| -> Result<Option<f64>> {
            if field(j).is_empty() {
                Ok(None)
            } else {
                f(j).map(Some)
            }
        };
        let m = |j: usize| -> Result<JsonMargin> {
            let v = f(j)?;
            Ok(if v.is_infinite() && v > 0.0 {
                Margin::Infinite
            } else {
                Margin::Finite(v)
            }
            .into())
        };
        rows.push(MarginRow {
            group: field(0).into(),
            observer: field(1).into(),
            d_km_nm_per_a: f(2)?,
            d_j_kg_m2: f(3)?,
            d_b_nm_s_per_rad: f(4)?,
            min_phase: field(5)
                .parse()
                .map_err(|_| bad(i + 1, MARGIN_COLUMNS[5]))?,
            unstable_zero_rad_s: o(6)?,
            k_c: m(7)?,
            omega_c_rad_s: o(8)?,
            phi_deg: m(9)?,
        });
    }
    Ok(rows)
}

pub fn margins_json(rows: &[MarginRow], seed: u64) -> Result<String> {
    let doc = MarginsDoc {
        schema: MARGINS_SCHEMA.into(),
        version: SCHEMA_VERSION,
        seed,
        rows: rows.to_vec(),
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

/// Error metrics of one observer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverMetrics {
    pub observer: String,
    pub rms_nm: f64,
    pub std_abs_nm: f64,
    /// Time to 90% of the first load step, when the load has one.
    pub lag_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsDoc {
    pub schema: String,
    pub version: u32,
    pub seed: u64,
    pub dt_s: f64,
    pub horizon_s: f64,
    pub observers: Vec<ObserverMetrics>,
}

impl MetricsDoc {
    pub fn new(seed: u64, dt_s: f64, horizon_s: f64, observers: Vec<ObserverMetrics>) -> Self {
        Self {
            schema: METRICS_SCHEMA.into(),
            version: SCHEMA_VERSION,
            seed,
            dt_s,
            horizon_s,
            observers,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        let doc: Self = serde_json::from_str(&text)?;
        if doc.schema != METRICS_SCHEMA || doc.version != SCHEMA_VERSION {
            return Err(Error::Format {
                path: path.into(),
                message: format!("unsupported schema {} v{}", doc.schema, doc.version),
            });
        }
        Ok(doc)
    }
}

/// Identified parameters next to the values used to generate the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentificationDoc {
    pub schema: String,
    pub version: u32,
    pub seed: u64,
    pub km_nm_per_a: f64,
    pub b_nm_s_per_rad: f64,
    pub cf_nm: f64,
    pub j_kg_m2: f64,
    pub friction_residual_a: f64,
    pub steady_state_points: usize,
    pub acceleration_points: usize,
}

#[derive(Serialize, Deserialize)]
struct SteadyRow {
    qdot_rad_s: f64,
    i_q_a: f64,
}

#[derive(Serialize, Deserialize)]
struct AccelRow {
    qdot_rad_s: f64,
    qddot_rad_s2: f64,
    i_q_a: f64,
}

pub fn steady_state_csv(obs: &[SteadyStateObs], seed: u64) -> String {
    let mut out = format!("# seed={seed}\nqdot_rad_s,i_q_a\n");
    for o in obs {
        let _ = writeln!(out, "{},{}", num(o.qdot), num(o.i_q));
    }
    out
}

pub fn acceleration_csv(obs: &[AccelObs], seed: u64) -> String {
    let mut out = format!("# seed={seed}\nqdot_rad_s,qddot_rad_s2,i_q_a\n");
    for o in obs {
        let _ = writeln!(out, "{},{},{}", num(o.qdot), num(o.qddot), num(o.i_q));
    }
    out
}

fn read_rows<T: serde::de::DeserializeOwned>(path: &Path, want: &[&str]) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(Error::csv(path))?;
    let header = rdr.headers().map_err(Error::csv(path))?.clone();
    let missing: Vec<String> = want
        .iter()
        .filter(|w| !header.iter().any(|h| h == **w))
        .map(|w| w.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingColumns(missing));
    }
    rdr.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(Error::csv(path))
}

pub fn read_steady_state(path: &Path) -> Result<Vec<SteadyStateObs>> {
    Ok(read_rows::<SteadyRow>(path, &["qdot_rad_s", "i_q_a"])?
        .into_iter()
        .map(|r| SteadyStateObs {
            qdot: r.qdot_rad_s,
            i_q: r.i_q_a,
        })
        .collect())
}

pub fn read_acceleration(path: &Path) -> Result<Vec<AccelObs>> {
    Ok(
        read_rows::<AccelRow>(path, &["qdot_rad_s", "qddot_rad_s2", "i_q_a"])?
            .into_iter()
            .map(|r| AccelObs {
                qdot: r.qdot_rad_s,
                qddot: r.qddot_rad_s2,
                i_q: r.i_q_a,
            })
            .collect(),
    )
}
