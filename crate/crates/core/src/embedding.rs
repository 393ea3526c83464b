//! Time series and their embeddings as continuous piecewise-linear paths.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A univariate series `{(t_i, r_i)}` with strictly increasing timestamps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidSeries(format!(
                "{} timestamps but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::InvalidSeries("empty series".into()));
        }
        if times.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::InvalidSeries("non-finite entry".into()));
        }
        if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSeries(format!(
                "timestamps not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(TimeSeries { times, values })
    }

    /// Series on the uniform grid `t = 0, 1, 2, ...`.
    pub fn uniform(values: Vec<f64>) -> Result<Self> {
        let times = (0..values.len()).map(|i| i as f64).collect();
        Self::new(times, values)
    }

    pub fn from_points(points: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            points.iter().map(|p| p.0).collect(),
            points.iter().map(|p| p.1).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    /// Sub-series over the index range `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::InvalidArgument(format!(
                "bad window {start}..{end} for series of length {}",
                self.len()
            )));
        }
        Ok(TimeSeries {
            times: self.times[start..end].to_vec(),
            values: self.values[start..end].to_vec(),
        })
    }

    /// Reads the `t,r` CSV layout. Extra columns are ignored.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let table = read_columns(reader, &["t", "r"])?;
        Self::new(table[0].clone(), table[1].clone())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "r"])?;
        for (t, r) in self.points() {
            w.write_record([t.to_string(), r.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads the named numeric columns of a headed CSV table.
pub fn read_columns<R: Read>(reader: R, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let idx: Vec<usize> = names
        .iter()
        .map(|name| {
            headers
                .iter()
                .position(|h| h == *name)
                .ok_or_else(|| Error::InvalidArgument(format!("missing CSV column `{name}`")))
        })
        .collect::<Result<_>>()?;
    let mut columns = vec![Vec::new(); names.len()];
    for record in rdr.records() {
        let record = record?;
        for (col, &i) in columns.iter_mut().zip(&idx) {
            let field = record.get(i).unwrap_or("");
            let x: f64 = field
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad number `{field}` in CSV")))?;
            col.push(x);
        }
    }
    Ok(columns)
}

/// A continuous path through `vertices`, one unit of parameter time per segment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinearPath {
    dim: usize,
    vertices: Vec<Vec<f64>>,
}

impl PiecewiseLinearPath {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidArgument(
                "a path needs at least two vertices".into(),
            ));
        }
        let dim = vertices[0].len();
        if dim == 0 || vertices.iter().any(|v| v.len() != dim) {
            return Err(Error::InvalidArgument(
                "all vertices must share a positive dimension".into(),
            ));
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite vertex".into()));
        }
        Ok(PiecewiseLinearPath { dim, vertices })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn num_segments(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Increment of each segment.
    pub fn increments(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        self.vertices
            .windows(2)
            .map(|w| w[1].iter().zip(&w[0]).map(|(b, a)| b - a).collect())
    }

    /// Position at parameter `s ∈ [0, num_segments]`.
    pub fn at(&self, s: f64) -> Vec<f64> {
        let last = self.num_segments();
        let s = s.clamp(0.0, last as f64);
        let seg = (s.floor() as usize).min(last - 1);
        let frac = s - seg as f64;
        let (a, b) = (&self.vertices[seg], &self.vertices[seg + 1]);
        a.iter().zip(b).map(|(x, y)| x + frac * (y - x)).collect()
    }

    /// Concatenation: `other` translated so it starts where `self` ends.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::ShapeMismatch(self.dim, 0, other.dim, 0));
        }
        let end = self.vertices.last().expect("non-empty path");
        let start = &other.vertices[0];
        let mut vertices = self.vertices.clone();
        for v in &other.vertices[1..] {
            vertices.push(
                v.iter()
                    .zip(start)
                    .zip(end)
                    .map(|((x, s), e)| x - s + e)
                    .collect(),
            );
        }
        Self::new(vertices)
    }
}

/// Time-joined embedding: start at `(t_0, 0)`, rise to `(t_0, r_0)`, then for
/// each step move right to `(t_{i+1}, r_i)` and up to `(t_{i+1}, r_{i+1})`.
///
/// The jump to `r_{i+1}` happens at `t_{i+1}`, which keeps the path
/// continuous and makes the time coordinate non-decreasing.
pub fn embed_time_joined(ts: &TimeSeries) -> PiecewiseLinearPath {
    let t = ts.times();
    let r = ts.values();
    let mut vertices = Vec::with_capacity(2 * t.len());
    vertices.push(vec![t[0], 0.0]);
    vertices.push(vec![t[0], r[0]]);
    for i in 0..t.len() - 1 {
        vertices.push(vec![t[i + 1], r[i]]);
        vertices.push(vec![t[i + 1], r[i + 1]]);
    }
    PiecewiseLinearPath { dim: 2, vertices }
}

/// Linear interpolation through the points `(t_i, r_i)`.
///
/// A single observation becomes a zero-length segment.
pub fn embed_piecewise_linear(ts: &TimeSeries) -> PiecewiseLinearPath {
    let mut vertices: Vec<Vec<f64>> = ts.points().map(|(t, r)| vec![t, r]).collect();
    if vertices.len() == 1 {
        vertices.push(vertices[0].clone());
    }
    PiecewiseLinearPath { dim: 2, vertices }
}

/// How a window's timestamps are presented to the feature map.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RebasePolicy {
    /// Shift so the window starts at `t = 0`.
    #[default]
    Shift,
    /// Keep absolute timestamps.
    Absolute,
}

pub fn rebase_window(ts: &TimeSeries, policy: RebasePolicy) -> TimeSeries {
    match policy {
        RebasePolicy::Absolute => ts.clone(),
        RebasePolicy::Shift => {
            let t0 = ts.times[0];
            TimeSeries {
                times: ts.times.iter().map(|t| t - t0).collect(),
                values: ts.values.clone(),
            }
        }
    }
}

/// Which path a time series is embedded as.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Embedding {
    #[default]
    TimeJoined,
    Linear,
}

pub fn embed(ts: &TimeSeries, embedding: Embedding) -> PiecewiseLinearPath {
    match embedding {
        Embedding::TimeJoined => embed_time_joined(ts),
        Embedding::Linear => embed_piecewise_linear(ts),
    }
}
