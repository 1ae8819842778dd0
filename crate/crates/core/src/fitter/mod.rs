//! Schramm–Loewner weights and driving functions of multi-slits.
//!
//! All fitters work on a normalized copy of the input (capacity 2, so `T = 1`, base points centred
//! at 0) and map their outputs back. Every slit `Γ_j` is prolonged to a slit `Θ_j ⊇ Γ_j` of
//! capacity 2 so that any slit can absorb the whole capacity budget.

mod bangbang;
mod multi;
mod shooting;

pub use bangbang::{bang_bang_level, bang_bang_level_with, fit_bang_bang, fit_bang_bang_with, BangBangLevel};
pub use multi::{fit_multi, fit_multi_with};
pub use shooting::{c_factor, fit_shooting, fit_shooting_with, CLattice};

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::Serialize;

use crate::capacity::hcap_chain_with;
use crate::error::{Error, Result};
use crate::forward::{DrivingRecord, Weights};
use crate::geometry::{point_polyline_distance, polyline_distance, MultiSlit, SampledFunction, SlitCurve, WeightVector};
use crate::slitmaps::{ConformalChain, ElementaryStep};
use crate::zipper::{SlitModel, StepFamily, Zipper, ZipperConfig};

/// Growth schedule of a multi-slit: the capacity `x_j(t)` of the generated part of every slit.
#[derive(Clone, Debug, PartialEq)]
pub struct LoewnerParametrization {
    slits: Vec<SlitCurve>,
    progress: Vec<SampledFunction>,
    weights: Weights,
    family: StepFamily,
}

impl LoewnerParametrization {
    /// `slits` are the curve models (vertices define the capacity model), `progress[j]` samples
    /// `x_j` on a uniform grid over `[0, T]`.
    pub fn new(
        slits: Vec<SlitCurve>,
        progress: Vec<SampledFunction>,
        weights: Weights,
        family: StepFamily,
    ) -> Result<Self> {
        if slits.len() != progress.len() || slits.is_empty() {
            return Err(Error::InvalidInput("one progress function per slit required".into()));
        }
        let first = &progress[0];
        if progress.iter().any(|p| p.len() != first.len() || p.t0() != 0.0 || p.t1() != first.t1()) {
            return Err(Error::InvalidInput("progress functions must share a grid starting at 0".into()));
        }
        for (j, p) in progress.iter().enumerate() {
            let v = p.values();
            let scale = v.last().unwrap().abs().max(f64::MIN_POSITIVE);
            if v[0].abs() > 1e-12 * scale || v.windows(2).any(|w| w[1] < w[0] - 1e-12 * scale) {
                return Err(Error::InvalidInput(format!("progress of slit {j} must start at 0 and not decrease")));
            }
        }
        Ok(LoewnerParametrization { slits, progress, weights, family })
    }

    pub fn slit_count(&self) -> usize {
        self.slits.len()
    }

    pub fn slits(&self) -> &[SlitCurve] {
        &self.slits
    }

    pub fn t_end(&self) -> f64 {
        self.progress[0].t1()
    }

    pub fn grid_len(&self) -> usize {
        self.progress[0].len()
    }

    pub fn times(&self) -> Vec<f64> {
        self.progress[0].times()
    }

    pub fn progress(&self, j: usize) -> &SampledFunction {
        &self.progress[j]
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    pub fn family(&self) -> StepFamily {
        self.family
    }

    /// Single-slit capacity models of the curves.
    pub fn models(&self) -> Result<Vec<SlitModel>> {
        self.slits.iter().map(|s| SlitModel::new(s.vertices().to_vec(), self.family)).collect()
    }

    /// Tips `γ_j(t_k)` for all slits at grid index `k`.
    pub fn tips(&self, models: &[SlitModel], k: usize) -> Vec<Complex64> {
        (0..self.slits.len())
            .map(|j| models[j].point_at(self.progress[j].values()[k]))
            .collect()
    }
}

/// How a fit was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    BangBang,
    Shooting,
    Multi,
}

/// Convergence information of a fit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub method: FitMethod,
    /// Bang-bang: the root `μ_n` found at each level `n = 1, 2, …`.
    pub mu_levels: Vec<f64>,
    /// Bang-bang: `|μ_L − μ_{L−1}|` at the finest level `L`, the convergence indicator.
    pub level_increment: Option<f64>,
    /// Every trial value of the control variable with the resulting capacity of slit 1.
    pub evaluations: Vec<(f64, f64)>,
    /// `|x₁(T) − hcap(Γ₁)|` in normalized units at the accepted control value.
    pub residual: f64,
    pub experimental: bool,
    pub warnings: Vec<String>,
}

/// Fitted weights with driving functions and growth schedule, in the input's units.
#[derive(Clone, Debug)]
pub struct FitResult {
    pub lambda: WeightVector,
    pub driving: DrivingRecord,
    pub parametrization: LoewnerParametrization,
    pub diagnostics: Diagnostics,
}

/// Common fitter settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitConfig {
    pub zipper: ZipperConfig,
    /// Samples of the output grid over `[0, T]`.
    pub grid: usize,
    /// Tolerance on the capacity of slit 1 at `T` (normalized units, total capacity 2).
    pub tol: f64,
    /// Side of the shooting method's C-factor lattice; 0 picks it from `tol`.
    pub lattice: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { zipper: ZipperConfig::default(), grid: 1001, tol: 1e-5, lattice: 0 }
    }
}

/// Affine map `z ↦ r (z − c)` taking the input to capacity 2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Normalization {
    pub scale: f64,
    pub shift: f64,
}

impl Normalization {
    pub fn point(&self, z: Complex64) -> Complex64 {
        (z - self.shift) * self.scale
    }

    pub fn unpoint(&self, w: Complex64) -> Complex64 {
        w / self.scale + self.shift
    }

    /// Capacity (or time) in input units from normalized units.
    pub fn uncap(&self, x: f64) -> f64 {
        x / (self.scale * self.scale)
    }
}

/// Normalized slits, their capacity-2 extensions and single-slit models.
#[derive(Clone, Debug)]
pub(crate) struct FitModel {
    pub norm: Normalization,
    pub gammas: Vec<SlitCurve>,
    pub thetas: Vec<SlitCurve>,
    pub singles: Vec<SlitModel>,
    /// Single-slit capacity of `Γ_j` within the model of `Θ_j`.
    pub targets: Vec<f64>,
    pub family: StepFamily,
}

impl FitModel {
    pub fn new(m: &MultiSlit, cfg: &ZipperConfig) -> Result<Self> {
        m.ensure_valid()?;
        let cap = hcap_chain_with(m, cfg)?.value;
        let bases = m.base_points();
        let shift = bases.iter().sum::<f64>() / bases.len() as f64;
        let norm = Normalization { scale: (2.0 / cap).sqrt(), shift };
        let normalized = m.map(|z| norm.point(z));
        let h = cfg.spacing(normalized.slits());
        let gammas: Vec<SlitCurve> = normalized.slits().iter().map(|s| s.refine(h)).collect();
        let thetas = match build_extensions(&gammas, h, cfg.family, false) {
            Ok(t) => t,
            Err(_) => build_extensions(&gammas, h, cfg.family, true)?,
        };
        let singles = thetas
            .iter()
            .map(|t| SlitModel::new(t.vertices().to_vec(), cfg.family))
            .collect::<Result<Vec<_>>>()?;
        let targets = gammas
            .iter()
            .zip(&singles)
            .map(|(g, s)| s.caps()[g.len() - 1])
            .collect();
        Ok(FitModel { norm, gammas, thetas, singles, targets, family: cfg.family })
    }

    pub fn slit_count(&self) -> usize {
        self.gammas.len()
    }

    /// Driving record in input units from normalized driving samples on `[0, 1]`.
    pub fn driving(&self, weights: Weights, u: Vec<Vec<f64>>) -> Result<DrivingRecord> {
        let t_end = self.norm.uncap(1.0);
        let drivings = u
            .into_iter()
            .map(|v| SampledFunction::new(0.0, t_end, v.into_iter().map(|w| self.norm.unpoint(w.into()).re).collect()))
            .collect::<Result<Vec<_>>>()?;
        DrivingRecord::new(drivings, weights)
    }

    /// Parametrization in input units from normalized progress samples on `[0, 1]`.
    pub fn parametrization(&self, weights: Weights, x: Vec<Vec<f64>>) -> Result<LoewnerParametrization> {
        let t_end = self.norm.uncap(1.0);
        let progress = x
            .into_iter()
            .map(|v| SampledFunction::new(0.0, t_end, v.into_iter().map(|c| self.norm.uncap(c.max(0.0))).collect()))
            .collect::<Result<Vec<_>>>()?;
        let slits = self.gammas.iter().map(|g| g.map(|z| self.norm.unpoint(z))).collect();
        LoewnerParametrization::new(slits, progress, weights, self.family)
    }

    /// A normalized chain expressed in input units.
    pub fn chain_to_input(&self, chain: &ConformalChain) -> Result<ConformalChain> {
        let r = self.norm.scale;
        let steps = chain
            .steps()
            .iter()
            .map(|st| ElementaryStep::tilted(st.anchor() / r + self.norm.shift, st.tilt(), st.dcap() / (r * r)))
            .collect::<Result<Vec<_>>>()?;
        Ok(ConformalChain::from_steps(steps))
    }
}

fn build_extensions(gammas: &[SlitCurve], h: f64, family: StepFamily, vertical: bool) -> Result<Vec<SlitCurve>> {
    let mut thetas: Vec<SlitCurve> = gammas.to_vec();
    for j in 0..gammas.len() {
        let others: Vec<SlitCurve> = (0..gammas.len()).filter(|&i| i != j).map(|i| thetas[i].clone()).collect();
        thetas[j] = extend_to_capacity(&gammas[j], &others, 2.0, h, family, vertical)?;
    }
    let m = MultiSlit::new(thetas.clone());
    if !m.validate().is_ok() {
        return Err(Error::Extension("extended slits intersect".into()));
    }
    Ok(thetas)
}

/// Prolongs `gamma` from its tip until its capacity is exactly `target`.
///
/// The prolongation continues the last segment and turns upward whenever it would come within half
/// the initial separation of another slit; with `vertical` it rises straight up.
pub(crate) fn extend_to_capacity(
    gamma: &SlitCurve,
    others: &[SlitCurve],
    target: f64,
    h: f64,
    family: StepFamily,
    vertical: bool,
) -> Result<SlitCurve> {
    let sep = others
        .iter()
        .map(|o| polyline_distance(gamma.vertices(), o.vertices()))
        .fold(f64::INFINITY, f64::min);
    let v = gamma.vertices();
    let mut pts = v.to_vec();
    let mut dir = if vertical || v.len() < 2 {
        Complex64::i()
    } else {
        let d = v[v.len() - 1] - v[v.len() - 2];
        d / d.norm()
    };
    let mut ext_len = 0.0;
    let mut goal = gamma.length().max(1.0);
    for _ in 0..24 {
        while ext_len < goal {
            let tip = *pts.last().unwrap();
            let mut th = dir.arg();
            if !(0.3..=std::f64::consts::PI - 0.3).contains(&th) {
                th += (FRAC_PI_2 - th).clamp(-0.25, 0.25);
            }
            let mut d = Complex64::from_polar(1.0, th);
            let near = |p: Complex64| others.iter().any(|o| point_polyline_distance(p, o.vertices()) < 0.5 * sep);
            let mut turns = 0;
            while near(tip + d * h) && turns < 8 {
                th += (FRAC_PI_2 - th).clamp(-0.25, 0.25);
                d = Complex64::from_polar(1.0, th);
                turns += 1;
            }
            dir = d;
            pts.push(tip + d * h);
            ext_len += h;
        }
        let model = SlitModel::new(pts.clone(), family)?;
        if model.total() >= target {
            return truncate_at_capacity(&pts, &model, target, family);
        }
        goal *= 2.0;
    }
    Err(Error::Extension(format!("could not reach capacity {target}")))
}

/// Cuts the polyline inside the segment where its capacity reaches `target`, by bisection on the
/// position of the last vertex.
fn truncate_at_capacity(pts: &[Complex64], model: &SlitModel, target: f64, family: StepFamily) -> Result<SlitCurve> {
    let caps = model.caps();
    let k = caps.partition_point(|&c| c < target) - 1;
    let chain = model.chain().prefix(k);
    let anchor = if k == 0 { pts[0].re } else { chain.steps()[k - 1].tip_image() };
    let (a, b) = (pts[k], pts[k + 1]);
    let cap_at = |f: f64| -> Result<f64> {
        let w = chain.forward_eval(a + (b - a) * f)?;
        Ok(caps[k] + family.step_to(anchor, w)?.dcap())
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if cap_at(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let mut out = pts[..=k].to_vec();
    out.push(a + (b - a) * hi);
    Ok(SlitCurve::new(out))
}

/// Alternating growth of the extended slits in one zipper.
pub(crate) struct Growth<'a> {
    pub model: &'a FitModel,
    pub zip: Zipper,
    /// Capacity requested but not available because a slit ran out.
    pub shortfall: f64,
}

impl<'a> Growth<'a> {
    pub fn new(model: &'a FitModel) -> Self {
        Growth { model, zip: Zipper::from_curves(&model.thetas, model.family), shortfall: 0.0 }
    }

    pub fn grow(&mut self, j: usize, amount: f64) -> Result<()> {
        if amount <= 0.0 {
            return Ok(());
        }
        let a = self.zip.advance(j, amount, true)?;
        self.shortfall += amount - a.grown;
        Ok(())
    }

    /// Single-slit capacity of the grown part of slit `j`, from its tip pulled back through the chain.
    pub fn progress(&self, j: usize) -> f64 {
        let caps = self.model.singles[j].caps();
        if self.zip.grown(j) == 0.0 {
            return 0.0;
        }
        if self.zip.exhausted(j) {
            return *caps.last().unwrap();
        }
        let k = self.zip.next_vertex(j) - 1;
        let tip = self.zip.chain().inverse_eval(Complex64::new(self.zip.driving(j), 0.0));
        self.model.singles[j].cap_on_segment(k, tip)
    }

    pub fn drivings(&self) -> Vec<f64> {
        self.zip.drivings()
    }
}

/// Driving values and progress of every slit on a grid, in normalized units.
pub(crate) struct Recorded {
    pub u: Vec<Vec<f64>>,
    pub x: Vec<Vec<f64>>,
    pub shortfall: f64,
}

/// Constant-weight growth: every grid cell grows the slits by `2 λ_j dt` in a symmetric order.
pub(crate) fn simulate_constant(model: &FitModel, lambda: &[f64], grid: usize, record: bool) -> Result<Recorded> {
    let n = model.slit_count();
    let dt = 1.0 / (grid - 1) as f64;
    let mut g = Growth::new(model);
    let mut u = vec![Vec::new(); n];
    let mut x = vec![Vec::new(); n];
    let push = |g: &Growth, u: &mut Vec<Vec<f64>>, x: &mut Vec<Vec<f64>>| {
        let d = g.drivings();
        for j in 0..n {
            u[j].push(d[j]);
            x[j].push(g.progress(j));
        }
    };
    if record {
        push(&g, &mut u, &mut x);
    }
    for k in 0..grid - 1 {
        if n == 1 {
            g.grow(0, 2.0 * lambda[0] * dt)?;
        } else {
            for j in (0..n).chain((0..n).rev()) {
                g.grow(j, lambda[j] * dt)?;
            }
        }
        if record || k == grid - 2 {
            push(&g, &mut u, &mut x);
        }
    }
    Ok(Recorded { u, x, shortfall: g.shortfall })
}

/// Bracketing root search (Illinois variant of regula falsi) for an increasing function.
///
/// Stops when `|f| ≤ ftol` or the bracket is narrower than `xtol`; all evaluations are appended to
/// `log`. Fails with the sweep attached if the evaluations contradict monotonicity.
pub(crate) fn illinois(
    mut f: impl FnMut(f64) -> Result<f64>,
    (mut a, mut fa): (f64, f64),
    (mut b, mut fb): (f64, f64),
    ftol: f64,
    xtol: f64,
    log: &mut Vec<(f64, f64)>,
) -> Result<f64> {
    if fa > 0.0 || fb < 0.0 {
        return Err(Error::Bracket { reason: "no sign change on the bracket".into(), sweep: log.clone() });
    }
    // `ta`, `tb` are the true function values; `fa`, `fb` carry the Illinois down-weighting.
    let (mut ta, mut tb) = (fa, fb);
    let mut side = 0;
    for _ in 0..200 {
        if ta.abs() <= ftol {
            return Ok(a);
        }
        if tb.abs() <= ftol {
            return Ok(b);
        }
        if b - a <= xtol {
            return Ok(if ta.abs() < tb.abs() { a } else { b });
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        let w = b - a;
        if !(c > a + 0.02 * w && c < b - 0.02 * w) {
            c = 0.5 * (a + b);
        }
        let fc = f(c)?;
        log.push((c, fc));
        check_monotone(log, ftol)?;
        if fc > 0.0 {
            b = c;
            fb = fc;
            tb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            ta = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::Bracket { reason: "no convergence".into(), sweep: log.clone() })
}

fn check_monotone(log: &[(f64, f64)], tol: f64) -> Result<()> {
    let mut s = log.to_vec();
    s.sort_by(|p, q| p.0.total_cmp(&q.0));
    if s.windows(2).any(|w| w[1].1 < w[0].1 - tol) {
        return Err(Error::Bracket { reason: "capacity not monotone in the control variable".into(), sweep: s });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn extensions_reach_capacity_two() {
        let m = fixtures::asymmetric_pair();
        let fm = FitModel::new(&m, &ZipperConfig { segments: 80, ..Default::default() }).unwrap();
        for (j, s) in fm.singles.iter().enumerate() {
            assert!((s.total() - 2.0).abs() < 1e-12, "{}", s.total());
            assert!(fm.targets[j] < 2.0);
            assert_eq!(&fm.thetas[j].vertices()[..fm.gammas[j].len()], fm.gammas[j].vertices());
        }
        assert!(MultiSlit::new(fm.thetas.clone()).validate().is_ok());
    }

    #[test]
    fn constant_growth_progress_matches_single_capacity() {
        let m = MultiSlit::single(SlitCurve::vertical(0.0, 1.0));
        let fm = FitModel::new(&m, &ZipperConfig { segments: 50, ..Default::default() }).unwrap();
        let r = simulate_constant(&fm, &[1.0], 101, true).unwrap();
        for (k, x) in r.x[0].iter().enumerate() {
            assert!((x - 2.0 * k as f64 / 100.0).abs() < 1e-9, "{k} {x}");
        }
        assert!(r.u[0].iter().all(|u| u.abs() < 1e-9));
    }

    #[test]
    fn illinois_finds_root() {
        let mut log = Vec::new();
        let f = |x: f64| Ok(x * x * x + x - 1.0);
        let r = illinois(f, (0.0, -1.0), (1.0, 1.0), 1e-13, 1e-15, &mut log).unwrap();
        assert!((r * r * r + r - 1.0).abs() <= 1e-13);
    }
}
