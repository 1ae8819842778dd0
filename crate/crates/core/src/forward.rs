//! Forward multi-slit Loewner flow, hull tracing and a Carathéodory-distance proxy.
//!
//! Driving functions are sampled on a uniform grid over `[0, T]`. In cell `k` (between samples `k`
//! and `k + 1`) slit `j` grows with weight `λ_j` taken from weight row `k` (or the constant weight
//! vector) while its driving value is the cell midpoint of the linear interpolant.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{MultiSlit, SampledFunction, SlitCurve, WeightVector};
use crate::slitmaps::{ConformalChain, ElementaryStep};

/// Weights of the Loewner equation: constant, or one row per grid sample (row `k` applies on cell `k`).
#[derive(Clone, Debug, PartialEq)]
pub enum Weights {
    Constant(WeightVector),
    Rows(Vec<WeightVector>),
}

/// Sampled driving functions `U_1, …, U_n` on a shared grid over `[0, T]` together with weights.
#[derive(Clone, Debug, PartialEq)]
pub struct DrivingRecord {
    drivings: Vec<SampledFunction>,
    weights: Weights,
}

impl DrivingRecord {
    pub fn new(drivings: Vec<SampledFunction>, weights: Weights) -> Result<Self> {
        let first = drivings
            .first()
            .ok_or_else(|| Error::InvalidInput("driving record needs at least one function".into()))?;
        if first.t0() != 0.0 {
            return Err(Error::InvalidInput("driving grid must start at t = 0".into()));
        }
        if drivings
            .iter()
            .any(|u| u.len() != first.len() || u.t0() != first.t0() || u.t1() != first.t1())
        {
            return Err(Error::InvalidInput("driving functions must share one grid".into()));
        }
        match &weights {
            Weights::Constant(w) if w.len() != drivings.len() => {
                return Err(Error::InvalidInput("weight count differs from driving count".into()))
            }
            Weights::Rows(rows) => {
                if rows.len() != first.len() {
                    return Err(Error::InvalidInput("need one weight row per grid sample".into()));
                }
                if rows.iter().any(|r| r.len() != drivings.len()) {
                    return Err(Error::InvalidInput("weight row length differs from driving count".into()));
                }
            }
            _ => {}
        }
        Ok(DrivingRecord { drivings, weights })
    }

    /// Driving values `values[j][k]` on a uniform grid over `[0, t_end]` with constant weights.
    pub fn constant(t_end: f64, values: Vec<Vec<f64>>, weights: WeightVector) -> Result<Self> {
        let drivings = values
            .into_iter()
            .map(|v| SampledFunction::new(0.0, t_end, v))
            .collect::<Result<Vec<_>>>()?;
        DrivingRecord::new(drivings, Weights::Constant(weights))
    }

    pub fn slit_count(&self) -> usize {
        self.drivings.len()
    }

    /// Final time `T`; the generated hull has capacity `2T`.
    pub fn t_end(&self) -> f64 {
        self.drivings[0].t1()
    }

    pub fn grid_len(&self) -> usize {
        self.drivings[0].len()
    }

    pub fn cell_count(&self) -> usize {
        self.grid_len() - 1
    }

    pub fn times(&self) -> Vec<f64> {
        self.drivings[0].times()
    }

    pub fn driving(&self, j: usize) -> &SampledFunction {
        &self.drivings[j]
    }

    pub fn drivings(&self) -> &[SampledFunction] {
        &self.drivings
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    /// Weight of slit `j` on cell `k`.
    pub fn weight(&self, j: usize, k: usize) -> f64 {
        match &self.weights {
            Weights::Constant(w) => w.weights()[j],
            Weights::Rows(rows) => rows[k].weights()[j],
        }
    }

    /// Length scale: the larger of `√T` and the spread of all driving values.
    pub fn scale(&self) -> f64 {
        let (lo, hi) = self.range();
        self.t_end().sqrt().max(hi - lo)
    }

    /// Smallest and largest driving value.
    pub fn range(&self) -> (f64, f64) {
        self.drivings.iter().flat_map(|u| u.values().iter().copied()).fold(
            (f64::INFINITY, f64::NEG_INFINITY),
            |(lo, hi), v| (lo.min(v), hi.max(v)),
        )
    }

    fn midpoint(&self, j: usize, k: usize) -> f64 {
        let v = self.drivings[j].values();
        0.5 * (v[k] + v[k + 1])
    }

    /// Elementary steps of cell `k` in application order, labelled by slit.
    ///
    /// A single growing slit gives one exact vertical step; several give a symmetric
    /// (Strang) splitting of half steps.
    fn cell_steps(&self, k: usize) -> Result<Vec<(usize, ElementaryStep)>> {
        let dt = self.drivings[0].time(k + 1) - self.drivings[0].time(k);
        let active: Vec<usize> = (0..self.slit_count()).filter(|&j| self.weight(j, k) > 0.0).collect();
        let mut out = Vec::with_capacity(2 * active.len());
        if active.len() == 1 {
            let j = active[0];
            out.push((j, ElementaryStep::vertical(self.midpoint(j, k), 2.0 * self.weight(j, k) * dt)?));
            return Ok(out);
        }
        for &j in active.iter().chain(active.iter().rev()) {
            out.push((j, ElementaryStep::vertical(self.midpoint(j, k), self.weight(j, k) * dt)?));
        }
        Ok(out)
    }

    /// Chain of all elementary steps with their (cell, slit) labels.
    pub fn chain(&self) -> Result<(ConformalChain, Vec<(usize, usize)>)> {
        let mut chain = ConformalChain::new();
        let mut labels = Vec::new();
        for k in 0..self.cell_count() {
            for (j, st) in self.cell_steps(k)? {
                chain.push(st);
                labels.push((k, j));
            }
        }
        Ok((chain, labels))
    }
}

/// Time integration scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Integrator {
    /// Exact vertical map-outs per cell with the cell-midpoint driving value.
    Splitting,
    /// Adaptive Dormand–Prince integration of the linearly interpolated driving functions.
    Adaptive { rtol: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowConfig {
    pub integrator: Integrator,
    /// Record probe values every this many cells (and at `T`).
    pub record_every: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { integrator: Integrator::Splitting, record_every: 1 }
    }
}

/// Probe images under `g_t`, with escape times for probes that hit the hull.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowResult {
    pub probe_inputs: Vec<Complex64>,
    pub probe_outputs: Vec<Complex64>,
    /// `Some(T_z)` when the probe is swallowed at time `T_z`.
    pub escaped: Vec<Option<f64>>,
    pub record_times: Vec<f64>,
    /// `records[r][p]`: image of probe `p` at `record_times[r]` (frozen after escape).
    pub records: Vec<Vec<Complex64>>,
}

/// Integrates `∂g/∂t = Σ 2λ_j / (g − U_j)` for every probe with the default configuration.
pub fn solve_forward(d: &DrivingRecord, probes: &[Complex64]) -> Result<FlowResult> {
    solve_forward_with(d, probes, &FlowConfig::default())
}

pub fn solve_forward_with(d: &DrivingRecord, probes: &[Complex64], cfg: &FlowConfig) -> Result<FlowResult> {
    if let Some(z) = probes.iter().find(|z| !(z.im >= 0.0) || !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidInput(format!("probe {z} not in the closed upper half-plane")));
    }
    let every = cfg.record_every.max(1);
    let cells = d.cell_count();
    let recorded: Vec<usize> = (0..=cells).filter(|&k| k % every == 0 || k == cells).collect();
    let times = d.times();
    let steps = match cfg.integrator {
        Integrator::Splitting => Some((0..cells).map(|k| d.cell_steps(k)).collect::<Result<Vec<_>>>()?),
        Integrator::Adaptive { .. } => None,
    };
    let paths: Vec<(Vec<Complex64>, Option<f64>)> = probes
        .par_iter()
        .map(|&z| {
            let mut path = Vec::with_capacity(recorded.len());
            let mut g = z;
            let mut escaped = None;
            let mut next = 0;
            for k in 0..=cells {
                if recorded.get(next) == Some(&k) {
                    path.push(g);
                    next += 1;
                }
                if k == cells || escaped.is_some() {
                    continue;
                }
                let out = match (&steps, cfg.integrator) {
                    (Some(steps), _) => splitting_cell(d, k, &steps[k], g, &times)?,
                    (None, Integrator::Adaptive { rtol }) => adaptive_cell(d, k, g, &times, rtol)?,
                    _ => unreachable!(),
                };
                g = out.0;
                escaped = out.1;
            }
            Ok((path, escaped))
        })
        .collect::<Result<Vec<_>>>()?;
    let record_times: Vec<f64> = recorded.iter().map(|&k| times[k]).collect();
    let records = (0..recorded.len())
        .map(|r| paths.iter().map(|p| p.0[r]).collect())
        .collect();
    Ok(FlowResult {
        probe_inputs: probes.to_vec(),
        probe_outputs: paths.iter().map(|p| *p.0.last().unwrap()).collect(),
        escaped: paths.iter().map(|p| p.1).collect(),
        record_times,
        records,
    })
}

fn escape_distance(d: &DrivingRecord) -> f64 {
    1e-6 * d.scale()
}

/// Real probes are swallowed when a growing slit's driving function crosses them.
fn real_crossing(d: &DrivingRecord, k: usize, g0: f64, g1: f64, times: &[f64]) -> Option<f64> {
    (0..d.slit_count()).filter(|&j| d.weight(j, k) > 0.0).find_map(|j| {
        let u = d.driving(j).values();
        let (a, b) = (g0 - u[k], g1 - u[k + 1]);
        if a == 0.0 {
            Some(times[k])
        } else if a.signum() != b.signum() {
            Some(times[k] + (times[k + 1] - times[k]) * a / (a - b))
        } else {
            None
        }
    })
}

fn splitting_cell(
    d: &DrivingRecord,
    k: usize,
    steps: &[(usize, ElementaryStep)],
    g: Complex64,
    times: &[f64],
) -> Result<(Complex64, Option<f64>)> {
    let eps = escape_distance(d);
    if g.im > 0.0 {
        for (j, st) in steps {
            let dist = (g - st.anchor()).norm();
            if dist < eps {
                return Ok((g, Some(times[k])));
            }
            let u = d.driving(*j).values();
            if (u[k + 1] - u[k]).abs() > dist {
                return Err(Error::RefineNeeded(format!(
                    "driving {j} moves {:.3e} in cell {k}, probe distance {dist:.3e}",
                    (u[k + 1] - u[k]).abs()
                )));
            }
        }
    }
    let mut w = g;
    for (_, st) in steps {
        match st.forward_displacement(w) {
            Some((next, _)) => w = next,
            None => return Ok((g, Some(swallow_time(steps, g, eps, times[k], times[k + 1])))),
        }
    }
    if g.im == 0.0 {
        if let Some(tz) = real_crossing(d, k, g.re, w.re, times) {
            return Ok((g, Some(tz)));
        }
    }
    Ok((w, None))
}

/// Time at which `g` comes within `eps` of a driving point or is swallowed, by bisection on the
/// fraction of the cell; a fraction `f` of the cell is the same steps scaled by `√f`.
fn swallow_time(steps: &[(usize, ElementaryStep)], g: Complex64, eps: f64, t0: f64, t1: f64) -> f64 {
    let survives = |f: f64| -> bool {
        let mut w = g;
        for (_, st) in steps {
            let Ok(part) = st.scaled(f.sqrt()) else {
                return false;
            };
            if (w - part.anchor()).norm() < eps {
                return false;
            }
            match part.forward_displacement(w) {
                Some((next, _)) => w = next,
                None => return false,
            }
        }
        true
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if survives(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    t0 + (t1 - t0) * hi
}

/// Dormand–Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn adaptive_cell(
    d: &DrivingRecord,
    k: usize,
    g0: Complex64,
    times: &[f64],
    rtol: f64,
) -> Result<(Complex64, Option<f64>)> {
    let (t0, t1) = (times[k], times[k + 1]);
    let active: Vec<(f64, f64, f64)> = (0..d.slit_count())
        .filter(|&j| d.weight(j, k) > 0.0)
        .map(|j| {
            let u = d.driving(j).values();
            (2.0 * d.weight(j, k), u[k], u[k + 1])
        })
        .collect();
    let uat = |t: f64, a: f64, b: f64| a + (b - a) * (t - t0) / (t1 - t0);
    let field = |t: f64, g: Complex64| -> Complex64 {
        active.iter().map(|&(w, a, b)| w / (g - uat(t, a, b))).sum()
    };
    let dist = |t: f64, g: Complex64| -> f64 {
        active.iter().map(|&(_, a, b)| (g - uat(t, a, b)).norm()).fold(f64::INFINITY, f64::min)
    };
    let eps = escape_distance(d);
    let scale = d.scale();
    let mut t = t0;
    let mut g = g0;
    let mut h = t1 - t0;
    let mut k_stage = [Complex64::new(0.0, 0.0); 7];
    let mut guard = 0;
    while t < t1 {
        guard += 1;
        if guard > 1_000_000 {
            return Err(Error::Integration(format!("adaptive step count exceeded in cell {k}")));
        }
        let dmin = dist(t, g);
        if dmin < eps {
            return Ok((g, Some(t)));
        }
        let speed: f64 = active.iter().map(|a| a.0).sum::<f64>() / dmin;
        h = h.min(t1 - t).min(0.25 * dmin / speed.max(1e-300));
        if h < 1e-15 * (t1 - t0).max(1e-300) {
            return Ok((g, Some(t)));
        }
        for s in 0..7 {
            let mut y = g;
            for (i, a) in DP_A[s].iter().enumerate().take(s) {
                y += k_stage[i] * (a * h);
            }
            k_stage[s] = field(t + DP_C[s] * h, y);
        }
        let mut next = g;
        let mut err = Complex64::new(0.0, 0.0);
        for s in 0..7 {
            next += k_stage[s] * (DP_A[6].get(s).copied().unwrap_or(0.0) * h);
            err += k_stage[s] * (DP_E[s] * h);
        }
        let tol = rtol * (g.norm() + scale);
        let e = err.norm();
        let crosses = g0.im == 0.0 && active.iter().any(|&(_, a, b)| {
            (g.re - uat(t, a, b)).signum() != (next.re - uat(t + h, a, b)).signum()
        });
        if crosses {
            if h < 1e-12 * (t1 - t0) {
                return Ok((g, Some(t)));
            }
            h *= 0.5;
            continue;
        }
        if e <= tol {
            t += h;
            g = if g0.im == 0.0 { Complex64::new(next.re, 0.0) } else { next };
        }
        let fac = if e == 0.0 { 5.0 } else { (0.9 * (tol / e).powf(0.2)).clamp(0.2, 5.0) };
        h *= fac;
    }
    Ok((g, None))
}

/// Traced slits with the capacity time of every vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct TracedHull {
    pub slits: MultiSlit,
    /// `times[j][v]`: time at which vertex `v` of slit `j` was reached.
    pub times: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

/// Tips of the growing slits, obtained by pulling every elementary slit tip back through the
/// chain, joined into polylines.
pub fn trace_hulls(d: &DrivingRecord) -> Result<MultiSlit> {
    Ok(trace_hulls_detailed(d)?.slits)
}

pub fn trace_hulls_detailed(d: &DrivingRecord) -> Result<TracedHull> {
    let (chain, labels) = d.chain()?;
    let times = d.times();
    let n = d.slit_count();
    // Last step of each slit within each cell.
    let mut last: Vec<(usize, usize, usize)> = Vec::new();
    for (idx, &(k, j)) in labels.iter().enumerate() {
        let later = labels[idx + 1..].iter().take_while(|l| l.0 == k).any(|l| l.1 == j);
        if !later {
            last.push((k, j, idx));
        }
    }
    let tips: Vec<Complex64> = last
        .par_iter()
        .map(|&(_, _, idx)| chain.inverse_through(chain.steps()[idx].tip_point(), idx))
        .collect();
    let mut pts: Vec<Vec<Complex64>> = (0..n).map(|j| vec![Complex64::new(d.driving(j).values()[0], 0.0)]).collect();
    let mut when: Vec<Vec<f64>> = vec![vec![0.0]; n];
    for (&(k, j, _), &tip) in last.iter().zip(&tips) {
        if !(tip.re.is_finite() && tip.im.is_finite()) {
            return Err(Error::Integration(format!("backward flow blew up for slit {j} at t = {}", times[k + 1])));
        }
        pts[j].push(tip);
        when[j].push(times[k + 1]);
    }
    let mut warnings = Vec::new();
    let eps = 1e-9 * d.scale();
    for a in 0..n {
        for b in a + 1..n {
            if (pts[a].last().unwrap() - pts[b].last().unwrap()).norm() < eps {
                warnings.push(format!("tips of slits {a} and {b} collide: output may not be a slit union"));
            }
        }
    }
    Ok(TracedHull {
        slits: MultiSlit::new(pts.into_iter().map(SlitCurve::new).collect()),
        times: when,
        warnings,
    })
}

/// Supremum of `|g¹_t(z) − g²_t(z)|` over shared probes and record times, skipping escaped probes.
pub fn caratheodory_distance(f1: &FlowResult, f2: &FlowResult) -> Result<f64> {
    if f1.probe_inputs != f2.probe_inputs {
        return Err(Error::Incompatible("flow results use different probe sets".into()));
    }
    if f1.record_times.len() != f2.record_times.len()
        || f1.record_times.iter().zip(&f2.record_times).any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + a.abs()))
    {
        return Err(Error::Incompatible("flow results use different record times".into()));
    }
    let mut sup: f64 = 0.0;
    for (r, &t) in f1.record_times.iter().enumerate() {
        for p in 0..f1.probe_inputs.len() {
            let alive = |f: &FlowResult| f.escaped[p].is_none_or(|tz| tz > t);
            if alive(f1) && alive(f2) {
                sup = sup.max((f1.records[r][p] - f2.records[r][p]).norm());
            }
        }
    }
    Ok(sup)
}

/// 32 probes on semicircles of radius `2·diam` and `4·diam` about `center`.
pub fn standard_probes(center: f64, diam: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(32);
    for r in [2.0 * diam, 4.0 * diam] {
        for k in 0..16 {
            let th = PI * (k as f64 + 0.5) / 16.0;
            out.push(Complex64::new(center, 0.0) + Complex64::from_polar(r, th));
        }
    }
    out
}

/// Standard probes for the hull generated by `d`, which lies within `4·max(√T, sup|U − U(0)|)`
/// of the initial driving values.
pub fn probes_for_record(d: &DrivingRecord) -> Vec<Complex64> {
    let (lo, hi) = d.range();
    let center = 0.5 * (lo + hi);
    let spread = d
        .drivings()
        .iter()
        .flat_map(|u| {
            let u0 = u.values()[0];
            u.values().iter().map(move |v| (v - u0).abs())
        })
        .fold(0.0, f64::max);
    let reach = 4.0 * d.t_end().sqrt().max(spread);
    standard_probes(center, (hi - lo) + 2.0 * reach)
}
