//! Driving functions of a single slit and of Loewner parametrizations of multi-slits.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fitter::LoewnerParametrization;
use crate::forward::{DrivingRecord, Weights};
use crate::geometry::{SampledFunction, SlitCurve, WeightVector};
use crate::slitmaps::{ConformalChain, ElementaryStep};
use crate::zipper::{SlitModel, StepFamily, Zipper, ZipperConfig};

/// A slit polyline together with the capacity of its initial piece at every vertex.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityParametrization {
    #[serde(skip)]
    pub curve: SlitCurve,
    pub cap_of_vertex: Vec<f64>,
}

impl CapacityParametrization {
    /// Total capacity `2T`.
    pub fn total(&self) -> f64 {
        *self.cap_of_vertex.last().unwrap()
    }
}

/// Output of [`drive_single`].
#[derive(Clone, Debug)]
pub struct SingleDrive {
    pub driving: DrivingRecord,
    pub chain: ConformalChain,
    pub parametrization: CapacityParametrization,
}

/// Driving function of a single slit on a uniform capacity grid of `grid_size` samples.
pub fn drive_single(s: &SlitCurve, grid_size: usize) -> Result<SingleDrive> {
    drive_single_with(s, grid_size, &ZipperConfig::default())
}

pub fn drive_single_with(s: &SlitCurve, grid_size: usize, cfg: &ZipperConfig) -> Result<SingleDrive> {
    crate::geometry::MultiSlit::single(s.clone()).ensure_valid()?;
    if grid_size < 2 {
        return Err(Error::InvalidInput(format!("grid size {grid_size} < 2")));
    }
    let refined = s.refine(cfg.spacing(std::slice::from_ref(s)));
    let model = SlitModel::new(refined.vertices().to_vec(), cfg.family)?;
    let t_end = model.total() / 2.0;
    let u = SampledFunction::from_fn(0.0, t_end, grid_size, |t| single_driving(&model, 2.0 * t))?;
    let mut values = u.values().to_vec();
    values[grid_size - 1] = single_driving(&model, model.total());
    let u = SampledFunction::new(0.0, t_end, values)?;
    Ok(SingleDrive {
        driving: DrivingRecord::new(vec![u], Weights::Constant(WeightVector::equal(1)))?,
        chain: model.chain().clone(),
        parametrization: CapacityParametrization { curve: refined, cap_of_vertex: model.caps().to_vec() },
    })
}

/// `g_t(γ(t))` for the initial piece of capacity `x`.
fn single_driving(model: &SlitModel, x: f64) -> f64 {
    match model.prefix_steps(x) {
        Ok((_, Some(partial))) => partial.tip_image(),
        Ok((0, None)) | Err(_) => model.vertices()[0].re,
        Ok((k, None)) => model.chain().steps()[k - 1].tip_image(),
    }
}

/// Driving functions `U_j(t) = g_t(γ_j(t))` of a Loewner parametrization, with the weights
/// given by the parametrization's capacity growth per cell.
pub fn drive_multi(p: &LoewnerParametrization) -> Result<DrivingRecord> {
    let n = p.slit_count();
    let models = p.models()?;
    let mut zip = Zipper::from_curves(p.slits(), p.family());
    let grid = p.grid_len();
    let mut values = vec![Vec::with_capacity(grid); n];
    for k in 0..grid {
        let xs: Vec<f64> = (0..n).map(|j| p.progress(j).values()[k]).collect();
        // Commit every whole vertex step reached by time t_k, slit by slit.
        for j in 0..n {
            let caps = models[j].caps();
            let last = caps.partition_point(|&c| c <= xs[j] * (1.0 + 1e-14)) - 1;
            zip.advance_to_vertex(j, last)?;
        }
        // Pending partial steps are applied in slit order on top of the committed chain.
        let mut u = zip.drivings();
        let mut applied: Vec<ElementaryStep> = Vec::new();
        for j in 0..n {
            let caps = models[j].caps();
            let v = zip.next_vertex(j) - 1;
            if v + 1 >= caps.len() || xs[j] <= caps[v] {
                continue;
            }
            let frac = ((xs[j] - caps[v]) / (caps[v + 1] - caps[v])).clamp(0.0, 1.0);
            let mut target = zip.image(j, v + 1)?;
            for st in &applied {
                target = st.forward(target).ok_or_else(|| Error::RefineNeeded(format!("slit {j} vertex swallowed")))?;
            }
            let full = match p.family() {
                StepFamily::Tilted => ElementaryStep::through(u[j], target)?,
                StepFamily::Vertical => ElementaryStep::vertical(target.re, 0.5 * target.im * target.im)?,
            };
            let step = full.scaled(frac.sqrt())?;
            for (i, ui) in u.iter_mut().enumerate() {
                *ui = if i == j { step.tip_image() } else { step.forward_real(*ui, None)?.0 };
            }
            applied.push(step);
        }
        for j in 0..n {
            values[j].push(u[j]);
        }
    }
    let drivings = values
        .into_iter()
        .map(|v| SampledFunction::new(0.0, p.t_end(), v))
        .collect::<Result<Vec<_>>>()?;
    DrivingRecord::new(drivings, p.weights().clone())
}

/// Chain of the whole multi-slit of a parametrization, zipped in slit order.
pub fn final_chain(p: &LoewnerParametrization) -> Result<ConformalChain> {
    let mut zip = Zipper::from_curves(p.slits(), p.family());
    for j in 0..p.slit_count() {
        zip.zip_all(j)?;
    }
    Ok(zip.into_chain())
}

/// Tip `γ_j(t_k)` of slit `j` at grid time `k` in the parametrization's curve model.
pub fn tip_at(p: &LoewnerParametrization, models: &[SlitModel], j: usize, k: usize) -> Complex64 {
    models[j].point_at(p.progress(j).values()[k])
}
