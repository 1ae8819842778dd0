//! Bang-bang construction: slits grow alternately on dyadic intervals.

use serde::Serialize;

use super::{illinois, simulate_constant, FitConfig, FitMethod, FitModel, FitResult, Diagnostics, Growth};
use crate::error::{Error, Result};
use crate::forward::{DrivingRecord, Weights};
use crate::geometry::{MultiSlit, WeightVector};
use crate::slitmaps::ConformalChain;

/// One bang-bang simulation at level `n` with duty cycle `μ`.
#[derive(Clone, Debug)]
pub struct BangBangLevel {
    /// Capacity of the grown part of slit 1 at the final time, in input units.
    pub x1: f64,
    /// The same in normalized units (total capacity 2).
    pub x1_normalized: f64,
    /// Driving functions sampled on the output grid; weight rows carry the time fraction of each cell
    /// during which each slit grows.
    pub driving: DrivingRecord,
    /// Composition chain in input units.
    pub chain: ConformalChain,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
struct Segment {
    slit: usize,
    start: f64,
    end: f64,
}

/// Growth phases of level `n`: slit 1 on `[k, k + μ)·2⁻ⁿ`, slit 2 on `[k + μ, k + 1)·2⁻ⁿ`, each
/// cut at the given record times.
fn segments(n: u32, mu: f64, cuts: &[f64]) -> Vec<Segment> {
    let parts = 1u64 << n;
    let mut bounds: Vec<f64> = Vec::with_capacity(2 * parts as usize + cuts.len() + 1);
    for k in 0..parts {
        bounds.push(k as f64 / parts as f64);
        bounds.push((k as f64 + mu) / parts as f64);
    }
    bounds.push(1.0);
    bounds.extend_from_slice(cuts);
    bounds.sort_by(f64::total_cmp);
    bounds.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    bounds
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]) * parts as f64;
            let slit = if mid - mid.floor() < mu { 0 } else { 1 };
            Segment { slit, start: w[0], end: w[1] }
        })
        .collect()
}

/// Capacity of slit 1 after the level-`n` schedule, normalized units.
pub(crate) fn level_progress(model: &FitModel, n: u32, mu: f64) -> Result<f64> {
    if mu <= 0.0 {
        return Ok(0.0);
    }
    let mut g = Growth::new(model);
    for s in segments(n, mu, &[]) {
        g.grow(s.slit, 2.0 * (s.end - s.start))?;
    }
    Ok(g.progress(0))
}

/// Level-`n` schedule recorded on `grid` uniform samples: driving values, weight rows, final
/// capacity of slit 1 and the chain.
fn level_record(
    model: &FitModel,
    n: u32,
    mu: f64,
    grid: usize,
) -> Result<(Vec<Vec<f64>>, Vec<WeightVector>, f64, ConformalChain)> {
    let times: Vec<f64> = (0..grid).map(|k| k as f64 / (grid - 1) as f64).collect();
    let mut g = Growth::new(model);
    let mut u = vec![vec![g.drivings()[0]], vec![g.drivings()[1]]];
    let mut share = vec![0.0; grid];
    let mut next = 1;
    for s in segments(n, mu, &times) {
        g.grow(s.slit, 2.0 * (s.end - s.start))?;
        if s.slit == 0 {
            share[next - 1] += s.end - s.start;
        }
        if next < grid && (s.end - times[next]).abs() < 1e-15 {
            let d = g.drivings();
            for j in 0..2 {
                u[j].push(d[j]);
            }
            next += 1;
        }
    }
    let dt = 1.0 / (grid - 1) as f64;
    let rows = share
        .iter()
        .map(|s| {
            let w = (s / dt).clamp(0.0, 1.0);
            WeightVector::new(vec![w, 1.0 - w])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((u, rows, g.progress(0), g.zip.chain().clone()))
}

/// Simulates the bang-bang schedule of level `n` and duty cycle `μ` on the capacity-2 normalization
/// of `m`, recording the driving functions on a grid of `max(1025, 2ⁿ⁺⁵ + 1)` samples.
pub fn bang_bang_level(m: &MultiSlit, n: u32, mu: f64) -> Result<BangBangLevel> {
    let grid = 1025.max((1usize << (n + 5).min(30)) + 1);
    bang_bang_level_with(m, n, mu, &FitConfig { grid, ..FitConfig::default() })
}

/// As [`bang_bang_level`], recording on `cfg.grid` samples.
pub fn bang_bang_level_with(m: &MultiSlit, n: u32, mu: f64, cfg: &FitConfig) -> Result<BangBangLevel> {
    let model = FitModel::new(m, &cfg.zipper)?;
    if cfg.grid < 2 {
        return Err(Error::InvalidInput(format!("grid {} < 2", cfg.grid)));
    }
    if model.slit_count() != 2 {
        return Err(Error::InvalidInput("the bang-bang construction needs exactly two slits".into()));
    }
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::InvalidInput(format!("duty cycle {mu} outside [0, 1]")));
    }
    let (u, rows, x1n, chain) = level_record(&model, n, mu, cfg.grid)?;
    Ok(BangBangLevel {
        x1: model.norm.uncap(x1n),
        x1_normalized: x1n,
        driving: model.driving(Weights::Rows(rows), u)?,
        chain: model.chain_to_input(&chain)?,
    })
}

/// Fits the weights of a two-slit hull by the bang-bang construction at levels `1..=levels`.
pub fn fit_bang_bang(m: &MultiSlit, levels: u32, tol: f64) -> Result<FitResult> {
    fit_bang_bang_with(m, levels, &FitConfig { tol, ..FitConfig::default() })
}

pub fn fit_bang_bang_with(m: &MultiSlit, levels: u32, cfg: &FitConfig) -> Result<FitResult> {
    if m.len() != 2 {
        return Err(Error::InvalidInput("the bang-bang construction needs exactly two slits".into()));
    }
    if !(1..=12).contains(&levels) {
        return Err(Error::InvalidInput(format!("levels {levels} outside [1, 12]")));
    }
    let model = FitModel::new(m, &cfg.zipper)?;
    let target = model.targets[0];
    let mut mus: Vec<f64> = Vec::new();
    let mut evaluations = Vec::new();
    let mut residual = f64::NAN;
    for n in 1..=levels {
        let mut log = Vec::new();
        let f = |mu: f64| Ok(level_progress(&model, n, mu)? - target);
        let eval = |mu: f64, log: &mut Vec<(f64, f64)>| -> Result<f64> {
            let v = if mu <= 0.0 {
                -target
            } else if mu >= 1.0 {
                2.0 - target
            } else {
                f(mu)?
            };
            log.push((mu, v));
            Ok(v)
        };
        let (mut a, mut b) = match mus.len() {
            0 => (0.0, 1.0),
            k => {
                let c = mus[k - 1];
                let w = if k >= 2 { 4.0 * (mus[k - 1] - mus[k - 2]).abs() } else { 0.0 };
                let w = w.max(0.01);
                ((c - w).max(0.0), (c + w).min(1.0))
            }
        };
        let mut fa = eval(a, &mut log)?;
        let mut fb = eval(b, &mut log)?;
        let mut widen = b - a;
        while fa > 0.0 && a > 0.0 {
            widen *= 2.0;
            a = (a - widen).max(0.0);
            fa = eval(a, &mut log)?;
        }
        while fb < 0.0 && b < 1.0 {
            widen *= 2.0;
            b = (b + widen).min(1.0);
            fb = eval(b, &mut log)?;
        }
        let mu = illinois(f, (a, fa), (b, fb), cfg.tol, cfg.tol / 4.0, &mut log)?;
        residual = log
            .iter()
            .filter(|e| e.0 == mu)
            .map(|e| e.1.abs())
            .next()
            .unwrap_or(f64::NAN);
        evaluations.extend(log.iter().map(|&(m, v)| (m, v + target)));
        mus.push(mu);
    }
    let lambda = *mus.last().unwrap();
    let weights = WeightVector::pair(lambda)?;
    let rec = simulate_constant(&model, weights.weights(), cfg.grid, true)?;
    let mut warnings = Vec::new();
    if rec.shortfall > 1e-12 {
        warnings.push(format!("extended slits ran out of capacity by {:.3e}", rec.shortfall));
    }
    let w = Weights::Constant(weights.clone());
    Ok(FitResult {
        lambda: weights,
        driving: model.driving(w.clone(), rec.u)?,
        parametrization: model.parametrization(w, rec.x)?,
        diagnostics: Diagnostics {
            method: FitMethod::BangBang,
            level_increment: (mus.len() >= 2).then(|| (mus[mus.len() - 1] - mus[mus.len() - 2]).abs()),
            mu_levels: mus,
            evaluations,
            residual,
            experimental: false,
            warnings,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments_split_each_dyadic_interval() {
        let s = segments(2, 0.25, &[]);
        assert_eq!(s.len(), 8);
        assert_eq!(s[0], Segment { slit: 0, start: 0.0, end: 0.0625 });
        assert_eq!(s[1].slit, 1);
        let total0: f64 = s.iter().filter(|x| x.slit == 0).map(|x| x.end - x.start).sum();
        assert!((total0 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn driving_values_stay_between_outer_base_images() {
        let m = crate::fixtures::asymmetric_pair();
        let cfg = FitConfig { grid: 2049, ..FitConfig::default() };
        let l = bang_bang_level_with(&m, 3, 0.2, &cfg).unwrap();
        let p = m.base_points();
        let lo = l.chain.boundary_images(p[0], crate::slitmaps::Side::Left).unwrap();
        let hi = l.chain.boundary_images(p[1], crate::slitmaps::Side::Right).unwrap();
        for d in l.driving.drivings() {
            assert!(d.values().iter().all(|u| (lo..=hi).contains(u)), "{lo} {hi}");
        }
    }
}
