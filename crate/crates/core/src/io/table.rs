use std::io::{Read, Write};
use std::str::FromStr;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde_json::json;

use super::run::{FloquetReport, FourierCoefficient};
use super::{IoError, TOOL, VERSION};
use crate::compare::CollapseComparison;
use crate::floquet::FloquetParams;
use crate::oracle::{FragmentAnalysis, QuantumTrace};
use crate::resonances::{CurvePoint, ResonanceResult};
use crate::semiclassics::{PolarizationTrace, SplitReport};

/// Metadata, column names and rows of one CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub version: String,
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            version: VERSION.to_string(),
            metadata: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn set_meta(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        match self.metadata.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.metadata.push((key.to_string(), value)),
        }
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn require_meta<T: FromStr>(&self, key: &str) -> Result<T, IoError> {
        let v = self
            .meta(key)
            .ok_or_else(|| IoError::Format(format!("missing metadata key {key:?}")))?;
        v.parse()
            .map_err(|_| IoError::Format(format!("metadata {key:?} has unparsable value {v:?}")))
    }

    fn meta_opt(&self, key: &str) -> Result<Option<f64>, IoError> {
        match self.meta(key) {
            None | Some("") => Ok(None),
            Some(_) => self.require_meta(key).map(Some),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of one column; empty cells are `None`.
    pub fn column_values(&self, name: &str) -> Result<Vec<Option<f64>>, IoError> {
        let i = self
            .column(name)
            .ok_or_else(|| IoError::Format(format!("no column {name:?}")))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| Cells { row, line: r, at: i }.opt())
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# {TOOL} {}", self.version)?;
        for (k, v) in &self.metadata {
            writeln!(w, "# {k} = {}", v.replace('\n', " "))?;
        }
        let mut csv = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        csv.write_record(&self.columns)?;
        for row in &self.rows {
            csv.write_record(row)?;
        }
        csv.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }

    /// Everything after the metadata block.
    pub fn data_section(&self) -> String {
        let text = self.to_csv_string();
        text.lines()
            .skip_while(|l| l.starts_with('#'))
            .map(|l| format!("{l}\n"))
            .collect()
    }

    pub fn read_csv<R: Read>(mut r: R) -> Result<Table, IoError> {
        let mut text = String::new();
        r.read_to_string(&mut text)
            .map_err(|e| IoError::Format(e.to_string()))?;
        let mut lines = text.split_inclusive('\n');
        let mut offset = 0;
        let first = lines.next().ok_or_else(|| IoError::Format("empty file".into()))?;
        offset += first.len();
        let version = first
            .trim_end()
            .strip_prefix(&format!("# {TOOL} "))
            .ok_or_else(|| IoError::Format(format!("first line is not a {TOOL} version line")))?
            .to_string();
        let mut metadata = Vec::new();
        for line in lines {
            let Some(body) = line.strip_prefix('#') else { break };
            offset += line.len();
            let (k, v) = body
                .trim_end_matches(['\n', '\r'])
                .trim_start()
                .split_once(" = ")
                .ok_or_else(|| IoError::Format(format!("metadata line {line:?} is not `key = value`")))?;
            metadata.push((k.to_string(), v.to_string()));
        }
        let mut reader = csv::ReaderBuilder::new().from_reader(&text.as_bytes()[offset..]);
        let columns = reader
            .headers()
            .map_err(|e| IoError::Format(e.to_string()))?
            .iter()
            .map(String::from)
            .collect();
        let rows = reader
            .records()
            .map(|r| {
                r.map(|rec| rec.iter().map(String::from).collect())
                    .map_err(|e| IoError::Format(e.to_string()))
            })
            .collect::<Result<_, _>>()?;
        Ok(Table {
            version,
            metadata,
            columns,
            rows,
        })
    }

    /// Machine-readable description written next to the CSV.
    pub fn sidecar(&self, parameters: &[(String, String)]) -> serde_json::Value {
        let map = |kv: &[(String, String)]| {
            kv.iter()
                .map(|(k, v)| (k.clone(), json!(v)))
                .collect::<serde_json::Map<_, _>>()
        };
        json!({
            "tool": TOOL,
            "version": self.version,
            "parameters": map(parameters),
            "metadata": map(&self.metadata),
            "columns": self.columns,
            "rows": self.rows.len(),
        })
    }

    fn expect_columns(&self, want: &[&str]) -> Result<(), IoError> {
        if self.columns.iter().map(String::as_str).eq(want.iter().copied()) {
            Ok(())
        } else {
            Err(IoError::Format(format!(
                "expected columns {want:?}, found {:?}",
                self.columns
            )))
        }
    }

    fn cells(&self) -> impl Iterator<Item = Cells<'_>> {
        self.rows.iter().enumerate().map(|(line, row)| Cells { row, line, at: 0 })
    }
}

/// Sequential typed reader over one row.
struct Cells<'a> {
    row: &'a [String],
    line: usize,
    at: usize,
}

impl Cells<'_> {
    fn text(&mut self) -> Result<&str, IoError> {
        let s = self
            .row
            .get(self.at)
            .ok_or_else(|| IoError::Format(format!("row {} is short", self.line + 1)))?;
        self.at += 1;
        Ok(s)
    }

    fn parse<T: FromStr>(&mut self) -> Result<T, IoError> {
        let (line, at) = (self.line, self.at);
        let s = self.text()?;
        s.parse()
            .map_err(|_| IoError::Format(format!("row {} column {}: cannot parse {s:?}", line + 1, at + 1)))
    }

    fn f64(&mut self) -> Result<f64, IoError> {
        self.parse()
    }

    fn opt(&mut self) -> Result<Option<f64>, IoError> {
        if self.row.get(self.at).is_some_and(|s| s.is_empty()) {
            self.at += 1;
            return Ok(None);
        }
        self.f64().map(Some)
    }

    fn vector(&mut self) -> Result<Vector3<f64>, IoError> {
        Ok(Vector3::new(self.f64()?, self.f64()?, self.f64()?))
    }

    fn complex(&mut self) -> Result<Complex64, IoError> {
        Ok(Complex64::new(self.f64()?, self.f64()?))
    }
}

/// Conversion between a result type and a [`Table`].
pub trait Tabular: Sized {
    fn to_table(&self) -> Table;
    fn from_table(table: &Table) -> Result<Self, IoError>;
}

const RESONANCE_COLUMNS: [&str; 7] = [
    "kind",
    "mu",
    "delta_res",
    "value_at_res",
    "bracket_lo",
    "bracket_hi",
    "objective_evaluations",
];

impl Tabular for Vec<ResonanceResult> {
    fn to_table(&self) -> Table {
        let mut t = Table::new(&RESONANCE_COLUMNS);
        for r in self {
            t.push(vec![
                r.kind.to_string(),
                num(r.mu),
                num(r.delta_res),
                num(r.value_at_res),
                num(r.bracket.0),
                num(r.bracket.1),
                r.objective_evaluations.to_string(),
            ]);
        }
        t
    }

    fn from_table(table: &Table) -> Result<Self, IoError> {
        table.expect_columns(&RESONANCE_COLUMNS)?;
        table
            .cells()
            .map(|mut c| {
                Ok(ResonanceResult {
                    kind: c.parse()?,
                    mu: c.f64()?,
                    delta_res: c.f64()?,
                    value_at_res: c.f64()?,
                    bracket: (c.f64()?, c.f64()?),
                    objective_evaluations: c.parse()?,
                })
            })
            .collect()
    }
}

const CURVE_COLUMNS: [&str; 8] = [
    "kind",
    "mu",
    "delta_res",
    "omega_ratio",
    "speed_ratio",
    "collapse_ratio",
    "mean_square_polarization",
    "error",
];

impl Tabular for Vec<CurvePoint> {
    fn to_table(&self) -> Table {
        let mut t = Table::new(&CURVE_COLUMNS);
        for p in self {
            t.push(vec![
                p.kind.to_string(),
                num(p.mu),
                opt(p.delta_res),
                opt(p.omega_ratio),
                opt(p.speed_ratio),
                opt(p.collapse_ratio),
                opt(p.mean_square_polarization),
                p.error.clone().unwrap_or_default(),
            ]);
        }
        t
    }

    fn from_table(table: &Table) -> Result<Self, IoError> {
        table.expect_columns(&CURVE_COLUMNS)?;
        table
            .cells()
            .map(|mut c| {
                Ok(CurvePoint {
                    kind: c.parse()?,
                    mu: c.f64()?,
                    delta_res: c.opt()?,
                    omega_ratio: c.opt()?,
                    speed_ratio: c.opt()?,
                    collapse_ratio: c.opt()?,
                    mean_square_polarization: c.opt()?,
                    error: Some(c.text()?.to_string()).filter(|s| !s.is_empty()),
                })
            })
            .collect()
    }
}

const TRACE_COLUMNS: [&str; 6] = ["t", "s1", "s2", "s3", "envelope", "purity"];

impl Tabular for PolarizationTrace {
    fn to_table(&self) -> Table {
        let mut t = Table::new(&TRACE_COLUMNS);
        for i in 0..self.times.len() {
            let s = &self.s_expectation[i];
            t.push(vec![
                num(self.times[i]),
                num(s[0]),
                num(s[1]),
                num(s[2]),
                num(self.envelope[i]),
                num(self.purity[i]),
            ]);
        }
        t
    }

    fn from_table(table: &Table) -> Result<Self, IoError> {
        table.expect_columns(&TRACE_COLUMNS)?;
        let mut out = PolarizationTrace {
            times: Vec::new(),
            s_expectation: Vec::new(),
            envelope: Vec::new(),
            purity: Vec::new(),
        };
        for mut c in table.cells() {
            out.times.push(c.f64()?);
            out.s_expectation.push(c.vector()?);
            out.envelope.push(c.f64()?);
            out.purity.push(c.f64()?);
        }
        Ok(out)
    }
}

const SPLIT_COLUMNS: [&str; 11] = [
    "zeta_re", "zeta_im", "v_re", "v_im", "n1", "n2", "n3", "weight_plus", "weight_minus", "speed_ratio", "omega",
];

impl Tabular for SplitReport {
    fn to_table(&self) -> Table {
        let mut t = Table::new(&SPLIT_COLUMNS);
        t.push(vec![
            num(self.zeta_bar.re),
            num(self.zeta_bar.im),
            num(self.velocity.re),
            num(self.velocity.im),
            num(self.direction[0]),
            num(self.direction[1]),
            num(self.direction[2]),
            num(self.weights.0),
            num(self.weights.1),
            num(self.speed_ratio),
            num(self.omega),
        ]);
        t
    }

    fn from_table(table: &Table) -> Result<Self, IoError> {
        table.expect_columns(&SPLIT_COLUMNS)?;
        if table.rows.len() != 1 {
            return Err(IoError::Format(format!("expected one row, found {}", table.rows.len())));
        }
        let mut c = table.cells().next().expect("one row");
        Ok(SplitReport {
            zeta_bar: c.complex()?,
            velocity: c.complex()?,
            direction: c.vector()?,
            weights: (c.f64()?, c.f64()?),
            speed_ratio: c.f64()?,
            omega: c.f64()?,
        })
    }
}

const QUANTUM_COLUMNS: [&str; 12] = [
    "t",
    "sigma1",
    "sigma2",
    "sigma3",
    "purity",
    "norm_drift",
    "top_occupation",
    "field_re",
    "field_im",
    "photon_number",
    "energy",
    "energy_drift",
];

impl Tabular for QuantumTrace {
    fn to_table(&self) -> Table {
        let mut t = Table::new(&QUANTUM_COLUMNS);
        t.set_meta("tail_mass", num(self.tail_mass));
        let e0 = self.energy.first().copied().unwrap_or(0.0);
        for i in 0..self.times.len() {
            let s = &self.sigma[i];
            t.push(vec![
                num(self.times[i]),
                num(s[0]),
                num(s[1]),
                num(s[2]),
                num(self.purity[i]),
                num(self.norm_drift[i]),
                num(self.top_occupation[i]),
                num(self.field_mean[i].re),
                num(self.field_mean[i].im),
                num(self.photon_number[i]),
                num(self.energy[i]),
                num(self.energy[i] - e0),
            ]);
        }
        t
    }

    fn from_table(table: &Table) -> Result<Self, IoError> {
        table.expect_columns(&QUANTUM_COLUMNS)?;
        let mut out = QuantumTrace {
            times: Vec::new(),
            sigma: Vec::new(),
            purity: Vec::new(),
            norm_drift: Vec::new(),
            top_occupation: Vec::new(),
            field_mean: Vec::new(),
            photon_number: Vec::new(),
            energy: Vec::new(),
            tail_mass: table.require_meta("tail_mass")?,
        };
        for mut c in table.cells() {
            out.times.push(c.f64()?);
            out.sigma.push(c.vector()?);
            out.purity.push(c.f64()?);
            out.norm_drift.push(c.f64()?);
            out.top_occupation.push(c.f64()?);
            out.field_mean.push(c.complex()?);
            out.photon_number.push(c.f64()?);
            out.energy.push(c.f64()?);
        }
        Ok(out)
    }
}

const FRAGMENT_COLUMNS: [&str; 8] = [
    "t",
    "center1_re",
    "center1_im",
    "center2_re",
    "center2_im",
    "weight1",
    "weight2",
    "separation",
];

impl Tabular for FragmentAnalysis {
    fn to_table(&self) -> Table {
        let mut t = Table::new(&FRAGMENT_COLUMNS);
        for i in 0..self.times.len() {
            let (a, b) = self.peak_centers[i];
            let (wa, wb) = self.peak_weights[i];
            t.push(vec![
                num(self.times[i]),
                num(a.re),
                num(a.im),
                num(b.re),
                num(b.im),
                num(wa),
                num(wb),
                num(self.separation[i]),
            ]);
        }
        t
    }

    fn from_table(table: &Table) -> Result<Self, IoError> {
        table.expect_columns(&FRAGMENT_COLUMNS)?;
        let mut out = FragmentAnalysis {
            times: Vec::new(),
            peak_centers: Vec::new(),
            peak_weights: Vec::new(),
            separation: Vec::new(),
        };
        for mut c in table.cells() {
            out.times.push(c.f64()?);
            out.peak_centers.push((c.complex()?, c.complex()?));
            out.peak_weights.push((c.f64()?, c.f64()?));
            out.separation.push(c.f64()?);
        }
        Ok(out)
    }
}

const COMPARE_COLUMNS: [&str; 17] = [
    "t",
    "oracle_sigma1",
    "oracle_sigma2",
    "oracle_sigma3",
    "semiclassical_s1",
    "semiclassical_s2",
    "semiclassical_s3",
    "oracle_purity",
    "semiclassical_purity",
    "collapsed_purity",
    "oracle_envelope",
    "semiclassical_envelope",
    "dsigma3",
    "max_abs_dsigma3",
    "dpurity",
    "dpurity_collapsed",
    "denvelope",
];

impl Tabular for CollapseComparison {
    fn to_table(&self) -> Table {
        let mut t = Table::new(&COMPARE_COLUMNS);
        t.set_meta("mu", num(self.mu));
        t.set_meta("delta", num(self.delta));
        t.set_meta("epsilon", num(self.epsilon));
        t.set_meta("collapse_time", num(self.collapse_time));
        t.set_meta("oracle_decay_time", opt(self.oracle_decay_time));
        t.set_meta("semiclassical_decay_time", opt(self.semiclassical_decay_time));
        t.set_meta(
            "max_abs_dsigma3_to_2tc",
            num(self.max_sigma3_deviation(2.0 * self.collapse_time)),
        );
        let mut running = 0.0_f64;
        for i in 0..self.times.len() {
            let o = &self.oracle_sigma[i];
            let s = &self.semiclassical_sigma[i];
            let d = o[2] - s[2];
            running = running.max(d.abs());
            let denv = match (self.oracle_envelope[i], self.semiclassical_envelope[i]) {
                (Some(a), Some(b)) => Some(a - b),
                _ => None,
            };
            t.push(vec![
                num(self.times[i]),
                num(o[0]),
                num(o[1]),
                num(o[2]),
                num(s[0]),
                num(s[1]),
                num(s[2]),
                num(self.oracle_purity[i]),
                num(self.semiclassical_purity[i]),
                num(self.collapsed_purity[i]),
                opt(self.oracle_envelope[i]),
                opt(self.semiclassical_envelope[i]),
                num(d),
                num(running),
                num(self.oracle_purity[i] - self.semiclassical_purity[i]),
                num(self.oracle_purity[i] - self.collapsed_purity[i]),
                opt(denv),
            ]);
        }
        t
    }

    fn from_table(table: &Table) -> Result<Self, IoError> {
        table.expect_columns(&COMPARE_COLUMNS)?;
        let mut out = CollapseComparison {
            mu: table.require_meta("mu")?,
            delta: table.require_meta("delta")?,
            epsilon: table.require_meta("epsilon")?,
            times: Vec::new(),
            oracle_sigma: Vec::new(),
            semiclassical_sigma: Vec::new(),
            oracle_purity: Vec::new(),
            semiclassical_purity: Vec::new(),
            collapsed_purity: Vec::new(),
            oracle_envelope: Vec::new(),
            semiclassical_envelope: Vec::new(),
            collapse_time: table.require_meta("collapse_time")?,
            oracle_decay_time: table.meta_opt("oracle_decay_time")?,
            semiclassical_decay_time: table.meta_opt("semiclassical_decay_time")?,
        };
        for mut c in table.cells() {
            out.times.push(c.f64()?);
            out.oracle_sigma.push(c.vector()?);
            out.semiclassical_sigma.push(c.vector()?);
            out.oracle_purity.push(c.f64()?);
            out.semiclassical_purity.push(c.f64()?);
            out.collapsed_purity.push(c.f64()?);
            out.oracle_envelope.push(c.opt()?);
            out.semiclassical_envelope.push(c.opt()?);
        }
        Ok(out)
    }
}

const FLOQUET_COLUMNS: [&str; 10] = [
    "omega",
    "delta",
    "mu",
    "n_max",
    "rabi_frequency",
    "zero_mode_frequency",
    "r0_condition",
    "convergence_gap",
    "max_real_part",
    "rabi_period",
];

impl Tabular for FloquetReport {
    fn to_table(&self) -> Table {
        let mut t = Table::new(&FLOQUET_COLUMNS);
        t.push(vec![
            num(self.params.omega),
            num(self.params.delta),
            num(self.params.mu),
            self.params.n_max.to_string(),
            num(self.rabi_frequency),
            num(self.zero_mode_frequency),
            num(self.r0_condition),
            opt(self.convergence_gap),
            num(self.max_real_part),
            num(2.0 * std::f64::consts::PI / self.rabi_frequency),
        ]);
        t
    }

    fn from_table(table: &Table) -> Result<Self, IoError> {
        table.expect_columns(&FLOQUET_COLUMNS)?;
        if table.rows.len() != 1 {
            return Err(IoError::Format(format!("expected one row, found {}", table.rows.len())));
        }
        let mut c = table.cells().next().expect("one row");
        let omega = c.f64()?;
        let delta = c.f64()?;
        let mu = c.f64()?;
        let n_max = c.parse()?;
        Ok(FloquetReport {
            params: FloquetParams::new(delta, mu).with_omega(omega).with_n_max(n_max),
            rabi_frequency: c.f64()?,
            zero_mode_frequency: c.f64()?,
            r0_condition: c.f64()?,
            convergence_gap: c.opt()?,
            max_real_part: c.f64()?,
        })
    }
}

const FOURIER_COLUMNS: [&str; 6] = ["k", "n", "a", "re", "im", "abs"];

impl Tabular for Vec<FourierCoefficient> {
    fn to_table(&self) -> Table {
        let mut t = Table::new(&FOURIER_COLUMNS);
        for f in self {
            t.push(vec![
                f.k.to_string(),
                f.n.to_string(),
                f.a.to_string(),
                num(f.value.re),
                num(f.value.im),
                num(f.value.norm()),
            ]);
        }
        t
    }

    fn from_table(table: &Table) -> Result<Self, IoError> {
        table.expect_columns(&FOURIER_COLUMNS)?;
        table
            .cells()
            .map(|mut c| {
                Ok(FourierCoefficient {
                    k: c.parse()?,
                    n: c.parse()?,
                    a: c.parse()?,
                    value: c.complex()?,
                })
            })
            .collect()
    }
}
