//! Shooting construction for two slits: `ẋ = 2λ / C(x, t)` with a tabulated factor `C`.
//!
//! In the state where slit 1 has single capacity `x` and the whole hull capacity `2t`, slit 2 is
//! mapped out after slit 1 by a map `h` of capacity `s = 2t − x`, and `C = h'(χ)²` at the image
//! `χ` of the tip of slit 1. `C` is tabulated in `(x, s)`, where it is smooth up to `s = 0`.

use rayon::prelude::*;
use serde::Serialize;

use super::{illinois, Diagnostics, FitConfig, FitMethod, FitModel, FitResult};
use crate::error::{Error, Result};
use crate::forward::Weights;
use crate::geometry::{MultiSlit, WeightVector};
use crate::inverse::drive_multi;
use crate::zipper::{Zipper, ZipperConfig};

/// `C` and the capacity excess `E = x + y − 2t` (with `y` the single capacity of slit 2) on a
/// uniform lattice of slit 1 capacity `x ∈ [0, 2]` and slit 2 context capacity `s ∈ [0, 2]`,
/// normalized units.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CLattice {
    pub xs: Vec<f64>,
    pub ss: Vec<f64>,
    /// `c[i][l]` at `(xs[i], ss[l])`.
    pub c: Vec<Vec<f64>>,
    pub excess: Vec<Vec<f64>>,
}

impl CLattice {
    /// Lattice with `size` nodes per axis for the capacity-2 normalization of `m`.
    pub fn new(m: &MultiSlit, size: usize, cfg: &ZipperConfig) -> Result<Self> {
        let model = FitModel::new(m, cfg)?;
        CLattice::build(&model, size)
    }

    pub(crate) fn build(model: &FitModel, size: usize) -> Result<Self> {
        if model.slit_count() != 2 {
            return Err(Error::InvalidInput("the shooting construction needs exactly two slits".into()));
        }
        if size < 2 {
            return Err(Error::InvalidInput(format!("lattice size {size} < 2")));
        }
        let xs: Vec<f64> = (0..size).map(|i| 2.0 * i as f64 / (size - 1) as f64).collect();
        let ss = xs.clone();
        let rows = xs
            .par_iter()
            .map(|&x0| lattice_row(model, x0, &ss))
            .collect::<Result<Vec<_>>>()?;
        let (c, excess) = rows.into_iter().unzip();
        Ok(CLattice { xs, ss, c, excess })
    }

    /// `C` at slit 1 capacity `x` and time `t`.
    pub fn c(&self, x: f64, t: f64) -> f64 {
        self.interpolate(&self.c, x, 2.0 * t - x)
    }

    /// `E` at slit 1 capacity `x` and time `t`.
    pub fn excess(&self, x: f64, t: f64) -> f64 {
        self.interpolate(&self.excess, x, 2.0 * t - x)
    }

    fn interpolate(&self, table: &[Vec<f64>], x: f64, s: f64) -> f64 {
        let locate = |grid: &[f64], v: f64| {
            let n = grid.len() - 1;
            let s = (v.clamp(grid[0], grid[n]) - grid[0]) / (grid[n] - grid[0]) * n as f64;
            let i = (s.floor() as usize).min(n - 1);
            (i, s - i as f64)
        };
        let (i, fx) = locate(&self.xs, x);
        let (l, ft) = locate(&self.ss, s);
        let v0 = table[i][l] * (1.0 - ft) + table[i][l + 1] * ft;
        let v1 = table[i + 1][l] * (1.0 - ft) + table[i + 1][l + 1] * ft;
        v0 * (1.0 - fx) + v1 * fx
    }
}

/// `(C, E)` for slit 1 grown to `x0` and slit 2 grown after it by context capacity `s`, for each
/// increasing `s` in `ss`.
fn lattice_row(model: &FitModel, x0: f64, ss: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut zip = Zipper::from_curves(&model.thetas, model.family);
    zip.advance(0, x0, true)?;
    let mut chi = zip.driving(0);
    let mut dchi = 1.0;
    let mut pushed = zip.chain().len();
    let caps = model.singles[1].caps();
    let mut c = Vec::with_capacity(ss.len());
    let mut e = Vec::with_capacity(ss.len());
    for &s in ss {
        let need = s - zip.grown(1);
        if s <= 0.0 || zip.exhausted(1) {
            c.push(*c.last().unwrap_or(&1.0));
            e.push(*e.last().unwrap_or(&0.0));
            continue;
        }
        let adv = zip.advance(1, need.max(0.0), false)?;
        for st in &zip.chain().steps()[pushed..] {
            let (w, d) = st.forward_real(chi, None)?;
            chi = w;
            dchi *= d;
        }
        pushed = zip.chain().len();
        let (d, y) = match adv.pending {
            Some(p) => {
                let k = zip.next_vertex(1) - 1;
                let tip = zip.chain().inverse_eval(p.tip_point());
                (dchi * p.forward_real(chi, None)?.1, model.singles[1].cap_on_segment(k, tip))
            }
            None => (dchi, caps[zip.next_vertex(1) - 1]),
        };
        c.push(d * d);
        e.push(x0 + y - (x0 + s));
    }
    Ok((c, e))
}

/// `C(x0, t)` for the two-slit hull `m`, with `x0` and `t` in the units of `m`.
pub fn c_factor(m: &MultiSlit, x0: f64, t: f64) -> Result<f64> {
    let model = FitModel::new(m, &ZipperConfig::default())?;
    if model.slit_count() != 2 {
        return Err(Error::InvalidInput("the shooting construction needs exactly two slits".into()));
    }
    let r2 = model.norm.scale * model.norm.scale;
    let x0 = (x0 * r2).clamp(0.0, 2.0);
    let (c, _) = lattice_row(&model, x0, &[(2.0 * t * r2 - x0).max(0.0)])?;
    Ok(c[0])
}

/// Lattice side used for a tolerance `tol` when none is configured.
fn auto_lattice(tol: f64) -> usize {
    ((0.4 / tol.sqrt()).ceil() as usize).clamp(33, 129)
}

/// `x(t)` on `grid` samples of `[0, 1]` for `ẋ = 2λ / C(x, t)`, `x(0) = 0`, by the classical
/// fourth-order Runge–Kutta method with a step no longer than a sixteenth of a lattice cell.
fn integrate(lat: &CLattice, lambda: f64, grid: usize) -> Vec<f64> {
    let dt = 1.0 / (grid - 1) as f64;
    let cell = 1.0 / (lat.ss.len() - 1) as f64;
    let sub = ((16.0 * dt / cell).ceil() as usize).max(1);
    let h = dt / sub as f64;
    let f = |x: f64, t: f64| 2.0 * lambda / lat.c(x, t);
    let mut x = 0.0;
    let mut out = vec![0.0];
    for k in 0..grid - 1 {
        for s in 0..sub {
            let t = k as f64 * dt + s as f64 * h;
            let k1 = f(x, t);
            let k2 = f(x + 0.5 * h * k1, t + 0.5 * h);
            let k3 = f(x + 0.5 * h * k2, t + 0.5 * h);
            let k4 = f(x + h * k3, t + h);
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        out.push(x);
    }
    out
}

/// Fits the weights of a two-slit hull by shooting on `λ`.
pub fn fit_shooting(m: &MultiSlit, tol: f64) -> Result<FitResult> {
    fit_shooting_with(m, &FitConfig { tol, ..FitConfig::default() })
}

pub fn fit_shooting_with(m: &MultiSlit, cfg: &FitConfig) -> Result<FitResult> {
    if m.len() != 2 {
        return Err(Error::InvalidInput("the shooting construction needs exactly two slits".into()));
    }
    let model = FitModel::new(m, &cfg.zipper)?;
    let size = if cfg.lattice == 0 { auto_lattice(cfg.tol) } else { cfg.lattice };
    let lat = CLattice::build(&model, size)?;
    let target = model.targets[0];
    let coarse = 257;
    let mut log = Vec::new();
    let f = |lambda: f64| Ok(*integrate(&lat, lambda, coarse).last().unwrap() - target);
    log.push((0.0, -target));
    log.push((1.0, 2.0 - target));
    let lambda = illinois(f, (0.0, -target), (1.0, 2.0 - target), cfg.tol, cfg.tol / 4.0, &mut log)?;
    let x = integrate(&lat, lambda, cfg.grid);
    let residual = (x.last().unwrap() - target).abs();
    // Slit 2's capacity at each output time, from the joint state (x(t), 2t) evaluated directly.
    let dt = 1.0 / (cfg.grid - 1) as f64;
    let excess = x
        .par_iter()
        .enumerate()
        .map(|(k, &xk)| {
            let xk = xk.clamp(0.0, 2.0);
            Ok(lattice_row(&model, xk, &[(2.0 * k as f64 * dt - xk).max(0.0)])?.1[0])
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut y = Vec::with_capacity(cfg.grid);
    let mut top = 0.0f64;
    for (k, (&xk, e)) in x.iter().zip(&excess).enumerate() {
        top = top.max(2.0 * k as f64 * dt - xk + e);
        y.push(top);
    }
    let mut warnings = Vec::new();
    let miss = (y.last().unwrap() - model.targets[1]).abs();
    if miss > 10.0 * cfg.tol {
        warnings.push(format!("slit 2 ends {miss:.3e} away from its capacity"));
    }
    let weights = WeightVector::pair(lambda)?;
    let parametrization = model.parametrization(Weights::Constant(weights.clone()), vec![x, y])?;
    let driving = drive_multi(&parametrization)?;
    Ok(FitResult {
        lambda: weights,
        driving,
        parametrization,
        diagnostics: Diagnostics {
            method: FitMethod::Shooting,
            mu_levels: Vec::new(),
            level_increment: None,
            evaluations: log.iter().map(|&(l, v)| (l, v + target)).collect(),
            residual,
            experimental: false,
            warnings,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn c_is_one_until_slit_two_grows_and_below_one_after() {
        let m = fixtures::symmetric_pair();
        let model = FitModel::new(&m, &ZipperConfig { segments: 60, ..Default::default() }).unwrap();
        let lat = CLattice::build(&model, 9).unwrap();
        for (i, x) in lat.xs.iter().enumerate() {
            for (l, s) in lat.ss.iter().enumerate() {
                let c = lat.c[i][l];
                if *s == 0.0 {
                    assert_eq!(c, 1.0);
                } else {
                    assert!(c > 0.0 && c < 1.0, "{x} {s} {c}");
                    assert!(lat.excess[i][l] > -1e-9, "{x} {s} {}", lat.excess[i][l]);
                }
            }
        }
    }
}
