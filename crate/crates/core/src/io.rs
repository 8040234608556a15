//! On-disk formats.
//!
//! * Surrogate model: little-endian binary, `CCKMSURR` magic + version,
//!   header fields, then every block as `rows: u64, cols: u64` followed by
//!   row-major `f64` values. A JSON sidecar carries the same metadata in
//!   readable form.
//! * Trajectory CSV: `t_days,p_actuator,cell_0,…` in bar / m³ / fraction.
//! * Schedule CSV: `t_days,u` (m³/day or bar), one row per step.
//! * Series CSV: `t_days,value`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::actuator::Kinematics;
use crate::dataset::{Scaling, Variable};
use crate::error::{Error, Result};
use crate::ident::{FieldForm, FitSummary, ModelKind, SurrogateModel};
use crate::model::{ControlMode, ControlSchedule};
use crate::units;

pub const MODEL_MAGIC: &[u8; 8] = b"CCKMSURR";
pub const MODEL_VERSION: u32 = 1;

fn kind_code(k: ModelKind) -> u8 {
    match k {
        ModelKind::Dmdc => 0,
        ModelKind::CckmLevel => 1,
        ModelKind::CckmDelta => 2,
        ModelKind::HybridB => 3,
    }
}

fn kind_from(c: u8) -> Result<ModelKind> {
    Ok(match c {
        0 => ModelKind::Dmdc,
        1 => ModelKind::CckmLevel,
        2 => ModelKind::CckmDelta,
        3 => ModelKind::HybridB,
        _ => return Err(Error::Format(format!("unknown model kind code {c}"))),
    })
}

fn enum_from<T>(c: u8, values: [T; 2], what: &str) -> Result<T> {
    let [a, b] = values;
    match c {
        0 => Ok(a),
        1 => Ok(b),
        _ => Err(Error::Format(format!("unknown {what} code {c}"))),
    }
}

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn u8(&mut self, v: u8) -> Result<()> {
        Ok(self.0.write_all(&[v])?)
    }
    fn u32(&mut self, v: u32) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn u64(&mut self, v: u64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn matrix(&mut self, m: &DMatrix<f64>) -> Result<()> {
        self.u64(m.nrows() as u64)?;
        self.u64(m.ncols() as u64)?;
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                self.f64(m[(r, c)])?;
            }
        }
        Ok(())
    }
}

struct Reader<R: Read>(R);

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.0
            .read_exact(&mut b)
            .map_err(|e| Error::Format(format!("truncated model file: {e}")))?;
        Ok(b)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
    fn matrix(&mut self, name: &str, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
        let (r, c) = (self.u64()? as usize, self.u64()? as usize);
        if (r, c) != (rows, cols) {
            return Err(Error::Format(format!("block {name}: expected {rows}x{cols}, found {r}x{c}")));
        }
        let mut m = DMatrix::zeros(r, c);
        for i in 0..r {
            for j in 0..c {
                m[(i, j)] = self.f64()?;
            }
        }
        Ok(m)
    }
}

/// Serialize a model to the binary format.
pub fn write_model<W: Write>(model: &SurrogateModel, out: W) -> Result<()> {
    let mut w = Writer(out);
    w.0.write_all(MODEL_MAGIC)?;
    w.u32(MODEL_VERSION)?;
    w.u8(kind_code(model.kind))?;
    w.u8(match model.variable {
        Variable::Pressure => 0,
        Variable::Saturation => 1,
    })?;
    w.u8(match model.form {
        FieldForm::Level => 0,
        FieldForm::Delta => 1,
    })?;
    w.u8(match model.kin.mode {
        ControlMode::Rate => 0,
        ControlMode::Bhp => 1,
    })?;
    w.u64(model.actuator_dim() as u64)?;
    w.u64(model.field_dim() as u64)?;
    w.f64(model.kin.dt)?;
    w.f64(model.kin.lambda)?;
    w.f64(model.scaling.mean)?;
    w.f64(model.scaling.std)?;
    let prov = model.provenance.as_bytes();
    w.u32(prov.len() as u32)?;
    w.0.write_all(prov)?;
    let f = &model.fit;
    w.u64(f.rank as u64)?;
    w.u64(f.regressors as u64)?;
    w.u64(f.samples as u64)?;
    w.f64(f.sigma_max)?;
    w.f64(f.sigma_min_kept)?;
    w.u8(f.degenerate as u8)?;
    for block in [&model.a_pp, &model.a_px, &model.a_xp, &model.a_xx, &model.b_p, &model.b_x] {
        w.matrix(block)?;
    }
    w.matrix(&DMatrix::from_column_slice(model.bias.len(), 1, model.bias.as_slice()))?;
    w.0.flush()?;
    Ok(())
}

/// Parse a model written by [`write_model`].
pub fn read_model<R: Read>(input: R) -> Result<SurrogateModel> {
    let mut r = Reader(input);
    let magic: [u8; 8] = r.bytes()?;
    if &magic != MODEL_MAGIC {
        return Err(Error::Format("not a surrogate model file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != MODEL_VERSION {
        return Err(Error::Format(format!("unsupported model version {version}")));
    }
    let kind = kind_from(r.u8()?)?;
    let variable = enum_from(r.u8()?, [Variable::Pressure, Variable::Saturation], "variable")?;
    let form = enum_from(r.u8()?, [FieldForm::Level, FieldForm::Delta], "form")?;
    let mode = enum_from(r.u8()?, [ControlMode::Rate, ControlMode::Bhp], "control mode")?;
    let m = r.u64()? as usize;
    let n = r.u64()? as usize;
    let dt = r.f64()?;
    let lambda = r.f64()?;
    let scaling = Scaling { mean: r.f64()?, std: r.f64()? };
    let plen = r.u32()? as usize;
    let mut prov = vec![0u8; plen];
    r.0.read_exact(&mut prov)
        .map_err(|e| Error::Format(format!("truncated model file: {e}")))?;
    let provenance = String::from_utf8(prov).map_err(|e| Error::Format(e.to_string()))?;
    let fit = FitSummary {
        rank: r.u64()? as usize,
        regressors: r.u64()? as usize,
        samples: r.u64()? as usize,
        sigma_max: r.f64()?,
        sigma_min_kept: r.f64()?,
        degenerate: r.u8()? != 0,
    };
    let a_pp = r.matrix("A_pp", m, m)?;
    let a_px = r.matrix("A_px", m, n)?;
    let a_xp = r.matrix("A_xp", n, m)?;
    let a_xx = r.matrix("A_xx", n, n)?;
    let b_p = r.matrix("B_p", m, m)?;
    let b_x = r.matrix("B_x", n, m)?;
    let bias = DVector::from_column_slice(r.matrix("b_x", n, 1)?.as_slice());
    let mut rest = Vec::new();
    r.0.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes after model blocks", rest.len())));
    }
    let kin = Kinematics { mode, dt, lambda, m };
    kin.validate()?;
    Ok(SurrogateModel {
        kind,
        variable,
        form,
        kin,
        a_pp,
        a_px,
        a_xp,
        a_xx,
        b_p,
        b_x,
        bias,
        scaling,
        provenance,
        fit,
    })
}

/// Human-readable description of a model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub format_version: u32,
    pub model_kind: ModelKind,
    pub variable: Variable,
    pub form: FieldForm,
    pub control_mode: ControlMode,
    pub dt_s: f64,
    pub lambda: f64,
    pub actuator_dim: usize,
    pub field_dim: usize,
    pub scaling: Scaling,
    pub provenance: String,
    pub fit: FitSummary,
    /// Frobenius norm of the bottom-B block.
    pub norm_b_x: f64,
    pub norm_field_input_path: f64,
}

impl ModelMetadata {
    pub fn of(model: &SurrogateModel) -> Self {
        ModelMetadata {
            format_version: MODEL_VERSION,
            model_kind: model.kind,
            variable: model.variable,
            form: model.form,
            control_mode: model.kin.mode,
            dt_s: model.kin.dt,
            lambda: model.kin.lambda,
            actuator_dim: model.actuator_dim(),
            field_dim: model.field_dim(),
            scaling: model.scaling,
            provenance: model.provenance.clone(),
            fit: model.fit.clone(),
            norm_b_x: model.b_x.norm(),
            norm_field_input_path: model.field_input_path().norm(),
        }
    }
}

/// Write `<path>` and its `<path>.json` sidecar.
pub fn save_model(model: &SurrogateModel, path: &Path) -> Result<()> {
    write_model(model, BufWriter::new(File::create(path)?))?;
    let sidecar = sidecar_path(path);
    let json = serde_json::to_string_pretty(&ModelMetadata::of(model))?;
    std::fs::write(sidecar, json + "\n")?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<SurrogateModel> {
    read_model(BufReader::new(File::open(path)?))
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

fn actuator_to_output(mode: ControlMode, v: f64) -> f64 {
    match mode {
        ControlMode::Rate => v,
        ControlMode::Bhp => units::pa_to_bar(v),
    }
}

fn actuator_from_output(mode: ControlMode, v: f64) -> f64 {
    match mode {
        ControlMode::Rate => v,
        ControlMode::Bhp => units::bar_to_pa(v),
    }
}

fn field_to_output(variable: Variable, v: f64) -> f64 {
    match variable {
        Variable::Pressure => units::pa_to_bar(v),
        Variable::Saturation => v,
    }
}

fn field_from_output(variable: Variable, v: f64) -> f64 {
    match variable {
        Variable::Pressure => units::bar_to_pa(v),
        Variable::Saturation => v,
    }
}

/// Snapshot table read back from a trajectory CSV, SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    /// Snapshot times (s).
    pub t: Vec<f64>,
    /// Actuator states, `1 × (K+1)`.
    pub p: DMatrix<f64>,
    /// Field snapshots, `N × (K+1)`.
    pub x: DMatrix<f64>,
}

/// Trajectory CSV: one row per snapshot.
pub fn write_trajectory_csv<W: Write>(
    out: W,
    variable: Variable,
    mode: ControlMode,
    t: &[f64],
    p: &DMatrix<f64>,
    x: &DMatrix<f64>,
) -> Result<()> {
    if p.nrows() != 1 || p.ncols() != t.len() || x.ncols() != t.len() {
        return Err(Error::Dimension {
            context: "trajectory csv",
            expected: format!("1 actuator row and {} columns", t.len()),
            got: format!("p {:?}, x {:?}", p.shape(), x.shape()),
        });
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t_days".to_string(), "p_actuator".to_string()];
    header.extend((0..x.nrows()).map(|i| format!("cell_{i}")));
    w.write_record(&header)?;
    for (k, &tk) in t.iter().enumerate() {
        let mut row = Vec::with_capacity(x.nrows() + 2);
        row.push(units::s_to_days(tk).to_string());
        row.push(actuator_to_output(mode, p[(0, k)]).to_string());
        row.extend(x.column(k).iter().map(|&v| field_to_output(variable, v).to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Format(format!("line {line}: `{s}`: {e}")))
}

pub fn read_trajectory_csv<R: Read>(input: R, variable: Variable, mode: ControlMode) -> Result<TrajectoryTable> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.len() < 3 || &header[0] != "t_days" || &header[1] != "p_actuator" {
        return Err(Error::Format("trajectory header must start with t_days,p_actuator,cell_0".into()));
    }
    let n = header.len() - 2;
    let mut t = Vec::new();
    let mut p = Vec::new();
    let mut cols: Vec<f64> = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != n + 2 {
            return Err(Error::Format(format!("line {line}: expected {} fields, got {}", n + 2, rec.len())));
        }
        t.push(units::days_to_s(parse_f64(&rec[0], line)?));
        p.push(actuator_from_output(mode, parse_f64(&rec[1], line)?));
        for j in 0..n {
            cols.push(field_from_output(variable, parse_f64(&rec[j + 2], line)?));
        }
    }
    if t.is_empty() {
        return Err(Error::Format("trajectory file has no rows".into()));
    }
    let k = t.len();
    Ok(TrajectoryTable {
        t,
        p: DMatrix::from_row_slice(1, k, &p),
        x: DMatrix::from_column_slice(n, k, &cols),
    })
}

/// Schedule CSV: `t_days,u` at the start of each step.
pub fn write_schedule_csv<W: Write>(out: W, schedule: &ControlSchedule) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_days", "u"])?;
    for (k, &u) in schedule.u.iter().enumerate() {
        let v = match schedule.mode {
            ControlMode::Rate => units::rate_si_to_per_day(u),
            ControlMode::Bhp => units::pa_to_bar(u),
        };
        w.write_record([units::s_to_days(k as f64 * schedule.dt).to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_schedule_csv<R: Read>(input: R, mode: ControlMode) -> Result<ControlSchedule> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.len() != 2 || &header[0] != "t_days" || &header[1] != "u" {
        return Err(Error::Format("schedule header must be t_days,u".into()));
    }
    let mut t = Vec::new();
    let mut u = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != 2 {
            return Err(Error::Format(format!("line {line}: expected 2 fields")));
        }
        t.push(units::days_to_s(parse_f64(&rec[0], line)?));
        let v = parse_f64(&rec[1], line)?;
        u.push(match mode {
            ControlMode::Rate => units::rate_per_day_to_si(v),
            ControlMode::Bhp => units::bar_to_pa(v),
        });
    }
    if t.len() < 2 {
        return Err(Error::Format("schedule needs at least two steps".into()));
    }
    let dt = t[1] - t[0];
    let schedule = ControlSchedule { mode, dt, u };
    schedule.validate()?;
    Ok(schedule)
}

/// `t_days,value` series.
pub fn write_series_csv<W: Write>(out: W, t_days: &[f64], values: &[f64]) -> Result<()> {
    if t_days.len() != values.len() {
        return Err(Error::Dimension {
            context: "series csv",
            expected: format!("{} values", t_days.len()),
            got: format!("{} values", values.len()),
        });
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_days", "value"])?;
    for (t, v) in t_days.iter().zip(values) {
        w.write_record([t.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_series_csv<R: Read>(input: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rd = csv::Reader::from_reader(input);
    let mut t = Vec::new();
    let mut v = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        t.push(parse_f64(&rec[0], i + 2)?);
        v.push(parse_f64(&rec[1], i + 2)?);
    }
    Ok((t, v))
}
