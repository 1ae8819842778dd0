//! Deterministic JSON output and the CSV driving-record format `t,U1..Un[,lambda1..lambdan]`.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fitter::{Diagnostics, FitResult};
use crate::forward::{DrivingRecord, Weights};
use crate::geometry::{SampledFunction, WeightVector};

/// JSON formatter printing every float with 17 significant digits.
struct FixedFloats;

impl serde_json::ser::Formatter for FixedFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> std::io::Result<()> {
        if v.is_finite() {
            write!(w, "{v:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> std::io::Result<()> {
        self.write_f64(w, v as f64)
    }
}

/// Serializes `value` as compact JSON with fixed 17-significant-digit floats and a trailing newline.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("JSON output is UTF-8"))
}

/// Serialized fit: weights, final time, grid size, driving samples and diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct FitReport<'a> {
    pub lambda: &'a [f64],
    #[serde(rename = "T")]
    pub t_end: f64,
    pub grid: usize,
    #[serde(rename = "U")]
    pub u: Vec<&'a [f64]>,
    pub diagnostics: &'a Diagnostics,
}

impl<'a> From<&'a FitResult> for FitReport<'a> {
    fn from(r: &'a FitResult) -> Self {
        FitReport {
            lambda: r.lambda.weights(),
            t_end: r.driving.t_end(),
            grid: r.driving.grid_len(),
            u: r.driving.drivings().iter().map(|d| d.values()).collect(),
            diagnostics: &r.diagnostics,
        }
    }
}

/// Writes a driving record as CSV; `with_weights` appends the weight of every slit on each row.
pub fn write_driving_csv<W: Write>(out: W, d: &DrivingRecord, with_weights: bool) -> Result<()> {
    let n = d.slit_count();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|j| format!("U{j}")));
    if with_weights {
        header.extend((1..=n).map(|j| format!("lambda{j}")));
    }
    w.write_record(&header)?;
    for (k, t) in d.times().iter().enumerate() {
        let mut row = vec![fmt(*t)];
        row.extend((0..n).map(|j| fmt(d.driving(j).values()[k])));
        if with_weights {
            row.extend((0..n).map(|j| fmt(d.weight(j, k))));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Reads a driving record from CSV. Times must form a uniform grid starting at 0. Without weight
/// columns the slits get equal weights; weight rows that never change become constant weights.
pub fn read_driving_csv<R: Read>(input: R) -> Result<DrivingRecord> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let n = header.iter().filter(|h| h.starts_with('U')).count();
    let expected_u: Vec<String> = (1..=n).map(|j| format!("U{j}")).collect();
    let expected_l: Vec<String> = (1..=n).map(|j| format!("lambda{j}")).collect();
    let has_weights = header.len() == 1 + 2 * n;
    if n == 0
        || header[0] != "t"
        || header[1..=n] != expected_u[..]
        || (has_weights && header[n + 1..] != expected_l[..])
        || (!has_weights && header.len() != 1 + n)
    {
        return Err(Error::InvalidInput(format!("unexpected CSV header {header:?}")));
    }
    let mut times = Vec::new();
    let mut values = vec![Vec::new(); n];
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let nums = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::InvalidInput(format!("bad number {s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if nums.len() != header.len() {
            return Err(Error::InvalidInput("CSV row length differs from header".into()));
        }
        times.push(nums[0]);
        for j in 0..n {
            values[j].push(nums[1 + j]);
        }
        if has_weights {
            rows.push(nums[1 + n..].to_vec());
        }
    }
    if times.len() < 2 {
        return Err(Error::InvalidInput("a driving record needs at least two samples".into()));
    }
    let t_end = *times.last().unwrap();
    let dt = t_end / (times.len() - 1) as f64;
    if times[0] != 0.0 || times.iter().enumerate().any(|(k, t)| (t - k as f64 * dt).abs() > 1e-9 * t_end) {
        return Err(Error::InvalidInput("times must form a uniform grid starting at 0".into()));
    }
    let drivings = values
        .into_iter()
        .map(|v| SampledFunction::new(0.0, t_end, v))
        .collect::<Result<Vec<_>>>()?;
    let weights = if !has_weights {
        Weights::Constant(WeightVector::equal(n))
    } else if rows.iter().all(|r| r == &rows[0]) {
        Weights::Constant(WeightVector::new(rows[0].clone())?)
    } else {
        Weights::Rows(rows.into_iter().map(WeightVector::new).collect::<Result<Vec<_>>>()?)
    };
    DrivingRecord::new(drivings, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_floats_have_seventeen_digits() {
        let s = to_json_string(&[0.5, 1.0 / 3.0]).unwrap();
        assert_eq!(s, "[5.0000000000000000e-1,3.3333333333333331e-1]\n");
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.5, 1.0 / 3.0]);
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            WeightVector::new(vec![0.25, 0.75]).unwrap(),
            WeightVector::new(vec![0.5, 0.5]).unwrap(),
            WeightVector::new(vec![0.5, 0.5]).unwrap(),
        ];
        let d = DrivingRecord::new(
            vec![
                SampledFunction::new(0.0, 1.0, vec![-1.0, -1.1, -1.0 / 3.0]).unwrap(),
                SampledFunction::new(0.0, 1.0, vec![1.0, 0.9, 0.7]).unwrap(),
            ],
            Weights::Rows(rows),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_driving_csv(&mut buf, &d, true).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("t,U1,U2,lambda1,lambda2\n"));
        assert_eq!(read_driving_csv(&buf[..]).unwrap(), d);
    }

    #[test]
    fn csv_rejects_non_uniform_times() {
        let text = "t,U1\n0,0\n0.3,0\n1,0\n";
        assert!(read_driving_csv(text.as_bytes()).unwrap_err().is_validation());
    }
}
