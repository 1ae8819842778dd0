//! Half-plane capacity by conformal chains and by Brownian motion, and capacity inequality checks.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, MultiSlit, SlitCurve};
use crate::zipper::{SlitModel, Zipper, ZipperConfig};

/// How a capacity estimate was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HcapMethod {
    Chain,
    MonteCarlo,
}

/// A half-plane capacity value with its standard error (zero for chain values).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HcapEstimate {
    pub value: f64,
    pub method: HcapMethod,
    pub stderr: f64,
}

/// Half-plane capacity of a multi-slit from its zipper chain, with default resolution.
pub fn hcap_chain(m: &MultiSlit) -> Result<HcapEstimate> {
    hcap_chain_with(m, &ZipperConfig::default())
}

/// Half-plane capacity of a multi-slit from its zipper chain.
pub fn hcap_chain_with(m: &MultiSlit, cfg: &ZipperConfig) -> Result<HcapEstimate> {
    m.ensure_valid()?;
    let h = cfg.spacing(m.slits());
    let refined: Vec<SlitCurve> = m.slits().iter().map(|s| s.refine(h)).collect();
    let mut z = Zipper::from_curves(&refined, cfg.family);
    for j in 0..refined.len() {
        z.zip_all(j)?;
    }
    Ok(HcapEstimate { value: z.total_hcap(), method: HcapMethod::Chain, stderr: 0.0 })
}

/// Where Monte Carlo walkers start.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Launch {
    /// Points on a semicircle enclosing the hull, with angular density `sin θ / 2`; exact identity
    /// `hcap = (4R/π) E[Im B_τ]`.
    Semicircle,
    /// The point `c + iY` with `Y` the given multiple of the hull diameter; estimates
    /// `Y E[Im B_τ]`, which carries an `O(Y⁻²)` bias.
    Height(f64),
}

/// Monte Carlo settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McConfig {
    pub launch: Launch,
    /// Hull-hit distance as a fraction of the hull diameter.
    pub eps_rel: f64,
    /// Also run with twice the hit distance and add the change to the standard error.
    pub sensitivity: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig { launch: Launch::Semicircle, eps_rel: 1e-4, sensitivity: true }
    }
}

/// Monte Carlo estimate of the half-plane capacity with default settings.
pub fn hcap_mc(m: &MultiSlit, walkers: usize, seed: u64) -> Result<HcapEstimate> {
    hcap_mc_with(m, walkers, seed, &McConfig::default())
}

struct Segments {
    segs: Vec<(Complex64, Complex64)>,
}

impl Segments {
    /// Distance to the hull and the imaginary part of the nearest hull point.
    fn nearest(&self, z: Complex64) -> (f64, f64) {
        let mut best = f64::INFINITY;
        let mut im = 0.0;
        for &(a, b) in &self.segs {
            let d = point_segment_distance(z, a, b);
            if d < best {
                best = d;
                let ab = b - a;
                let t = (((z - a) * ab.conj()).re / ab.norm_sqr()).clamp(0.0, 1.0);
                im = (a + ab * t).im;
            }
        }
        (best, im)
    }
}

struct Walk<'a> {
    hull: &'a Segments,
    center: f64,
    /// Radius of the semicircle receiving walkers returning from far away.
    r_mid: f64,
    /// Walkers beyond this distance from the centre jump back to the `r_mid` semicircle.
    r_out: f64,
}

impl Walk<'_> {
    /// Runs one walk-on-spheres path; returns the score `Im` of the hull hit or 0 on ℝ.
    fn run(&self, mut z: Complex64, eps: f64, rng: &mut ChaCha8Rng) -> f64 {
        for _ in 0..1_000_000 {
            let rel = z - self.center;
            if rel.norm() > self.r_out {
                // Exact exit distribution of ℍ minus the half-disk via w = ζ + R²/ζ.
                let w = rel + self.r_mid * self.r_mid / rel;
                let u: f64 = rng.gen();
                let x = w.re + w.im * (PI * (u - 0.5)).tan();
                if x.abs() >= 2.0 * self.r_mid {
                    return 0.0;
                }
                let th = (x / (2.0 * self.r_mid)).acos();
                z = Complex64::from_polar(self.r_mid, th) + self.center;
                continue;
            }
            let (d_hull, im) = self.hull.nearest(z);
            if d_hull < eps {
                return im;
            }
            if z.im < eps {
                return 0.0;
            }
            let r = d_hull.min(z.im);
            let ang: f64 = rng.gen::<f64>() * 2.0 * PI;
            z += Complex64::from_polar(r, ang);
        }
        0.0
    }
}

/// Monte Carlo estimate of the half-plane capacity by walk-on-spheres Brownian paths.
///
/// Walker `i` draws from the ChaCha stream `(seed, i)`, so results do not depend on how the
/// walkers are distributed over threads.
pub fn hcap_mc_with(m: &MultiSlit, walkers: usize, seed: u64, cfg: &McConfig) -> Result<HcapEstimate> {
    m.ensure_valid()?;
    if walkers < 1000 {
        return Err(Error::InvalidInput(format!("need at least 1000 walkers, got {walkers}")));
    }
    let hull = Segments {
        segs: m
            .slits()
            .iter()
            .flat_map(|s| s.vertices().windows(2).map(|w| (w[0], w[1])))
            .collect(),
    };
    let diam = m.diameter().max(m.height());
    let bases = m.base_points();
    let lo = bases.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = bases.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let center = 0.5 * (lo + hi);
    let radius = m.vertices().map(|z| (z - center).norm()).fold(0.0, f64::max) * (1.0 + 1e-9);
    let walk = Walk { hull: &hull, center, r_mid: 1.5 * radius, r_out: 2.0 * radius };
    let eps = cfg.eps_rel * diam;
    let (scale, start): (f64, Box<dyn Fn(&mut ChaCha8Rng) -> Complex64 + Sync>) = match cfg.launch {
        Launch::Semicircle => (
            4.0 * radius / PI,
            Box::new(move |rng: &mut ChaCha8Rng| {
                let th = (1.0 - 2.0 * rng.gen::<f64>()).acos();
                Complex64::from_polar(radius, th) + center
            }),
        ),
        Launch::Height(k) => {
            let y = k * diam;
            (y, Box::new(move |_: &mut ChaCha8Rng| Complex64::new(center, y)))
        }
    };
    let scores: Vec<(f64, f64)> = (0..walkers)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let z0 = start(&mut rng);
            let a = walk.run(z0, eps, &mut rng);
            let b = if cfg.sensitivity {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let z0 = start(&mut rng);
                walk.run(z0, 2.0 * eps, &mut rng)
            } else {
                a
            };
            (a * scale, b * scale)
        })
        .collect();
    let n = walkers as f64;
    let mean = scores.iter().map(|s| s.0).sum::<f64>() / n;
    let var = scores.iter().map(|s| (s.0 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let mean2 = scores.iter().map(|s| s.1).sum::<f64>() / n;
    let stat = (var / n).sqrt();
    let stderr = (stat * stat + (mean2 - mean).powi(2)).sqrt();
    Ok(HcapEstimate { value: mean, method: HcapMethod::MonteCarlo, stderr: stderr.max(f64::MIN_POSITIVE) })
}

/// A hull made of initial pieces of the slits of a parent multi-slit.
///
/// `cuts[j]` is the arclength of the piece of slit `j` (0 for none).
#[derive(Clone, Debug, PartialEq)]
pub struct SubHull {
    pub cuts: Vec<f64>,
}

impl SubHull {
    pub fn new(cuts: Vec<f64>) -> Self {
        SubHull { cuts }
    }

    pub fn is_subset_of(&self, other: &SubHull) -> bool {
        self.cuts.iter().zip(&other.cuts).all(|(a, b)| a <= b)
    }

    pub fn is_disjoint_from(&self, other: &SubHull) -> bool {
        self.cuts.iter().zip(&other.cuts).all(|(a, b)| *a == 0.0 || *b == 0.0)
    }

    pub fn union(&self, other: &SubHull) -> SubHull {
        SubHull::new(self.cuts.iter().zip(&other.cuts).map(|(a, b)| a.max(*b)).collect())
    }

    pub fn intersection(&self, other: &SubHull) -> SubHull {
        SubHull::new(self.cuts.iter().zip(&other.cuts).map(|(a, b)| a.min(*b)).collect())
    }
}

/// Part of the capacity lemma a check refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LemmaPart {
    /// `hcap(A₁) + hcap(A₂) ≥ hcap(A₁ ∪ A₂) + hcap(A₁ ∩ A₂)`.
    Subadditivity,
    /// `hcap(A₂) ≥ hcap(A₁)` for `A₁ ⊂ A₂`.
    Monotonicity,
    /// `hcap(g_{A₁}(A₂)) ≤ hcap(A₂)` for disjoint `A₁`, `A₂`.
    MappedCapacity,
}

/// Outcome of one inequality check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub part: LemmaPart,
    /// False when the hypotheses of this part are not met; the slack is then not evaluated.
    pub applicable: bool,
    /// Larger side minus smaller side.
    pub slack: f64,
    /// For monotonicity: `hcap(A₂) − hcap(A₁) − hcap(g_{A₁}(A₂∖A₁))`, the additivity residual.
    pub residual: f64,
}

/// Capacity inequality report for a pair of sub-hulls.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CapacityReport {
    pub checks: Vec<InequalityCheck>,
}

impl CapacityReport {
    pub fn min_slack(&self) -> f64 {
        self.checks
            .iter()
            .filter(|c| c.applicable)
            .map(|c| c.slack)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Parent slits refined with every cut point inserted as a vertex, so that all sub-hulls are
/// vertex prefixes of one polyline family.
struct CutModel {
    slits: Vec<Vec<Complex64>>,
    lengths: Vec<Vec<f64>>,
    family: crate::zipper::StepFamily,
}

impl CutModel {
    fn new(parent: &MultiSlit, cuts: &[&SubHull], cfg: &ZipperConfig) -> Self {
        let h = cfg.spacing(parent.slits());
        let mut slits = Vec::new();
        let mut lengths = Vec::new();
        for (j, s) in parent.slits().iter().enumerate() {
            let refined = s.refine(h);
            let lens = refined.arclengths();
            let mut pts: Vec<(f64, Complex64)> =
                lens.iter().copied().zip(refined.vertices().iter().copied()).collect();
            for sub in cuts {
                let c = sub.cuts[j];
                if c > 0.0 && c < *lens.last().unwrap() && !lens.iter().any(|&l| (l - c).abs() < 1e-12 * h) {
                    pts.push((c, refined.point_at(c)));
                }
            }
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            lengths.push(pts.iter().map(|p| p.0).collect());
            slits.push(pts.into_iter().map(|p| p.1).collect());
        }
        CutModel { slits, lengths, family: cfg.family }
    }

    /// Vertex index ending the piece of slit `j` with arclength `cut`.
    fn index(&self, j: usize, cut: f64) -> usize {
        let lens = &self.lengths[j];
        if cut <= 0.0 {
            return 0;
        }
        let h = lens.last().unwrap() * 1e-12;
        lens.iter().position(|&l| l >= cut - h).unwrap_or(lens.len() - 1)
    }

    /// Zips the pieces `(slit, end vertex)` in order; returns the total capacity after each.
    fn zip(&self, pieces: &[(usize, usize)]) -> Result<Vec<f64>> {
        let mut z = Zipper::new(self.slits.clone(), self.family);
        let mut out = Vec::with_capacity(pieces.len());
        for &(j, k) in pieces {
            z.advance_to_vertex(j, k)?;
            out.push(z.total_hcap());
        }
        Ok(out)
    }

    fn pieces(&self, a: &SubHull) -> Vec<(usize, usize)> {
        (0..self.slits.len())
            .filter(|&j| a.cuts[j] > 0.0)
            .map(|j| (j, self.index(j, a.cuts[j])))
            .collect()
    }

    fn hcap(&self, a: &SubHull) -> Result<f64> {
        Ok(self.zip(&self.pieces(a))?.last().copied().unwrap_or(0.0))
    }
}

/// Evaluates the three capacity inequalities for two sub-hulls of `parent`.
pub fn check_capacity_inequalities(
    parent: &MultiSlit,
    a1: &SubHull,
    a2: &SubHull,
    cfg: &ZipperConfig,
) -> Result<CapacityReport> {
    parent.ensure_valid()?;
    if a1.cuts.len() != parent.len() || a2.cuts.len() != parent.len() {
        return Err(Error::Incompatible("sub-hull cut count differs from slit count".into()));
    }
    let union = a1.union(a2);
    let inter = a1.intersection(a2);
    let model = CutModel::new(parent, &[a1, a2], cfg);
    let h1 = model.hcap(a1)?;
    let h2 = model.hcap(a2)?;
    let mut checks = vec![InequalityCheck {
        part: LemmaPart::Subadditivity,
        applicable: true,
        slack: h1 + h2 - model.hcap(&union)? - model.hcap(&inter)?,
        residual: 0.0,
    }];
    let (small, large, nested) = if a1.is_subset_of(a2) {
        (a1, a2, true)
    } else if a2.is_subset_of(a1) {
        (a2, a1, true)
    } else {
        (a1, a2, false)
    };
    if nested {
        let hs = model.hcap(small)?;
        let hl = model.hcap(large)?;
        let mut pieces = model.pieces(small);
        let base = pieces.len();
        for j in 0..parent.len() {
            if large.cuts[j] > small.cuts[j] {
                pieces.push((j, model.index(j, large.cuts[j])));
            }
        }
        let caps = model.zip(&pieces)?;
        let start = if base == 0 { 0.0 } else { caps[base - 1] };
        let rest = caps.last().copied().unwrap_or(0.0) - start;
        checks.push(InequalityCheck {
            part: LemmaPart::Monotonicity,
            applicable: true,
            slack: hl - hs,
            residual: hl - hs - rest,
        });
    } else {
        checks.push(InequalityCheck {
            part: LemmaPart::Monotonicity,
            applicable: false,
            slack: f64::NAN,
            residual: f64::NAN,
        });
    }
    if a1.is_disjoint_from(a2) {
        let mut pieces = model.pieces(a1);
        let base = pieces.len();
        pieces.extend(model.pieces(a2));
        let caps = model.zip(&pieces)?;
        let start = if base == 0 { 0.0 } else { caps[base - 1] };
        let mapped = caps.last().copied().unwrap_or(0.0) - start;
        checks.push(InequalityCheck {
            part: LemmaPart::MappedCapacity,
            applicable: true,
            slack: h2 - mapped,
            residual: 0.0,
        });
    } else {
        checks.push(InequalityCheck {
            part: LemmaPart::MappedCapacity,
            applicable: false,
            slack: f64::NAN,
            residual: f64::NAN,
        });
    }
    Ok(CapacityReport { checks })
}

/// Sampled capacity ratios for nested pieces of one slit next to another slit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CProbe {
    /// Minimum of `(hcap(B₁∪Θ₂) − hcap(A₁∪Θ₂)) / (hcap(B₁) − hcap(A₁))` over the samples.
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub samples: usize,
}

/// Samples nested pieces `A₁ ⊊ B₁ ⊆ Θ₁` and reports the extreme capacity-increment ratios.
pub fn c_constant_probe(theta1: &SlitCurve, theta2: &SlitCurve, trials: usize) -> Result<CProbe> {
    c_constant_probe_with(theta1, theta2, trials, 0x5eed, &ZipperConfig::default())
}

pub fn c_constant_probe_with(
    theta1: &SlitCurve,
    theta2: &SlitCurve,
    trials: usize,
    seed: u64,
    cfg: &ZipperConfig,
) -> Result<CProbe> {
    let m = MultiSlit::new(vec![theta1.clone(), theta2.clone()]);
    m.ensure_valid()?;
    let h = cfg.spacing(m.slits());
    let s1 = theta1.refine(h);
    let s2 = theta2.refine(h);
    let single = SlitModel::new(s1.vertices().to_vec(), cfg.family)?;
    let mut z = Zipper::from_curves(&[s1.clone(), s2], cfg.family);
    z.zip_all(1)?;
    z.zip_all(0)?;
    let ctx = z.vertex_caps(0).to_vec();
    let n = ctx.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi, mut count) = (f64::INFINITY, f64::NEG_INFINITY, 0);
    for _ in 0..trials {
        let i = rng.gen_range(0..n - 1);
        let j = rng.gen_range(i + 1..n);
        let den = single.caps()[j] - single.caps()[i];
        if den < 1e-12 {
            continue;
        }
        let r = (ctx[j] - ctx[i]) / den;
        lo = lo.min(r);
        hi = hi.max(r);
        count += 1;
    }
    Ok(CProbe { min_ratio: lo, max_ratio: hi, samples: count })
}
