//! Weights of hulls with any number of slits by nested root searches on constant-weight growth.

use super::{illinois, simulate_constant, Diagnostics, FitConfig, FitMethod, FitModel, FitResult};
use crate::error::{Error, Result};
use crate::forward::Weights;
use crate::geometry::{MultiSlit, WeightVector};

/// Samples of the grid used inside the root searches.
const SEARCH_GRID: usize = 257;

/// Fits constant weights `λ` so that each slit reaches its own capacity at `T`.
///
/// `λ_1` is searched on `[0, 1]`; for each trial the remaining weights are solved recursively on the
/// remaining budget. Marked experimental: monotonicity in `λ_j` is assumed, not proven, and the
/// search grid is coarser than the output grid.
pub fn fit_multi(m: &MultiSlit, tol: f64) -> Result<FitResult> {
    fit_multi_with(m, &FitConfig { tol, ..FitConfig::default() })
}

pub fn fit_multi_with(m: &MultiSlit, cfg: &FitConfig) -> Result<FitResult> {
    let model = FitModel::new(m, &cfg.zipper)?;
    let n = model.slit_count();
    let mut evaluations = Vec::new();
    let (lambda, finals) = solve(&model, &[], 1.0, cfg.tol, &mut evaluations)?;
    let residual = finals
        .iter()
        .zip(&model.targets)
        .map(|(x, t)| (x - t).abs())
        .fold(0.0, f64::max);
    let weights = WeightVector::new(lambda)?;
    let rec = simulate_constant(&model, weights.weights(), cfg.grid, true)?;
    let mut warnings = Vec::new();
    if rec.shortfall > 1e-12 {
        warnings.push(format!("extended slits ran out of capacity by {:.3e}", rec.shortfall));
    }
    if n > 1 {
        warnings.push(format!("nested root search on a {SEARCH_GRID}-sample grid"));
    }
    let w = Weights::Constant(weights.clone());
    Ok(FitResult {
        lambda: weights,
        driving: model.driving(w.clone(), rec.u)?,
        parametrization: model.parametrization(w, rec.x)?,
        diagnostics: Diagnostics {
            method: FitMethod::Multi,
            mu_levels: Vec::new(),
            level_increment: None,
            evaluations,
            residual,
            experimental: true,
            warnings,
        },
    })
}

/// Completes the weight vector `prefix` with weights summing to `budget`; returns the vector and the
/// final capacities of all slits.
fn solve(
    model: &FitModel,
    prefix: &[f64],
    budget: f64,
    tol: f64,
    evaluations: &mut Vec<(f64, f64)>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = model.slit_count();
    let i = prefix.len();
    if i + 1 == n {
        let mut lambda = prefix.to_vec();
        lambda.push(budget.max(0.0));
        let rec = simulate_constant(model, &lambda, SEARCH_GRID, false)?;
        let finals = rec.x.iter().map(|x| *x.last().unwrap()).collect();
        return Ok((lambda, finals));
    }
    let target = model.targets[i];
    let mut best: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut log = Vec::new();
    let mut f = |li: f64| -> Result<f64> {
        let mut p = prefix.to_vec();
        p.push(li);
        let (lambda, finals) = solve(model, &p, budget - li, tol, &mut Vec::new())?;
        let v = finals[i] - target;
        if best.as_ref().is_none_or(|b| (b.1[i] - target).abs() > v.abs()) {
            best = Some((lambda, finals));
        }
        Ok(v)
    };
    let fa = -target;
    let fb = f(budget)?;
    log.push((0.0, fa));
    log.push((budget, fb));
    // Inner searches whose whole budget cannot reach the target saturate at the budget; the outer
    // search then sees a continuous, monotone function.
    if fb > 0.0 {
        illinois(&mut f, (0.0, fa), (budget, fb), tol, tol / 4.0 * budget, &mut log)?;
    } else if i == 0 {
        return Err(Error::Bracket { reason: "slit 1 cannot reach its capacity".into(), sweep: log });
    }
    if i == 0 {
        evaluations.extend(log.iter().map(|&(l, v)| (l, v + target)));
    }
    best.ok_or_else(|| Error::FitFailure { location: format!("slit {}", i + 1), reason: "no evaluation".into() })
}
