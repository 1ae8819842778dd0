//! Incremental zipper: grows slits step by step by mapping out straight image segments.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::SlitCurve;
use crate::slitmaps::{ConformalChain, ElementaryStep};

/// Shape of the micro-slit used for each zipper step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StepFamily {
    /// Straight segment from the current driving point to the next vertex image.
    #[default]
    Tilted,
    /// Vertical segment below the next vertex image; the driving point jumps to its real part.
    Vertical,
}

impl StepFamily {
    /// Step from the driving point `anchor` whose slit ends at `target`.
    pub fn step_to(self, anchor: f64, target: Complex64) -> Result<ElementaryStep> {
        match self {
            StepFamily::Tilted => ElementaryStep::through(anchor, target),
            StepFamily::Vertical => ElementaryStep::vertical(target.re, 0.5 * target.im * target.im),
        }
    }
}

/// Discretization settings shared by all zipper-based computations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZipperConfig {
    pub family: StepFamily,
    /// Number of segments the longest slit is subdivided into.
    pub segments: usize,
}

impl Default for ZipperConfig {
    fn default() -> Self {
        ZipperConfig { family: StepFamily::Tilted, segments: 200 }
    }
}

impl ZipperConfig {
    /// Maximal segment length used when refining `slits`.
    pub fn spacing(&self, slits: &[SlitCurve]) -> f64 {
        let longest = slits.iter().map(|s| s.length()).fold(0.0, f64::max);
        longest / self.segments.max(1) as f64
    }
}

#[derive(Clone, Debug)]
struct Track {
    images: Vec<Complex64>,
    pushed: Vec<usize>,
    next: usize,
    driving: f64,
    grown: f64,
    vertex_caps: Vec<f64>,
}

/// Result of advancing a slit by some capacity.
#[derive(Clone, Copy, Debug)]
pub struct Advance {
    /// Capacity actually added (less than requested when the slit ran out of vertices).
    pub grown: f64,
    /// Final partial step when it was not committed.
    pub pending: Option<ElementaryStep>,
}

/// Zipper state for several slits growing in a common conformal chain.
#[derive(Clone, Debug)]
pub struct Zipper {
    chain: ConformalChain,
    tracks: Vec<Track>,
    family: StepFamily,
}

impl Zipper {
    /// Starts from slits given as vertex lists whose first vertex lies on ℝ.
    pub fn new(slits: Vec<Vec<Complex64>>, family: StepFamily) -> Self {
        let tracks = slits
            .into_iter()
            .map(|v| Track {
                driving: v[0].re,
                pushed: vec![0; v.len()],
                images: v,
                next: 1,
                grown: 0.0,
                vertex_caps: vec![0.0],
            })
            .collect();
        Zipper { chain: ConformalChain::new(), tracks, family }
    }

    pub fn from_curves(slits: &[SlitCurve], family: StepFamily) -> Self {
        Self::new(slits.iter().map(|s| s.vertices().to_vec()).collect(), family)
    }

    pub fn chain(&self) -> &ConformalChain {
        &self.chain
    }

    pub fn into_chain(self) -> ConformalChain {
        self.chain
    }

    pub fn slit_count(&self) -> usize {
        self.tracks.len()
    }

    pub fn total_hcap(&self) -> f64 {
        self.chain.total_hcap()
    }

    /// Current driving point of slit `j` (image of its tip, or of its base before it starts).
    pub fn driving(&self, j: usize) -> f64 {
        self.tracks[j].driving
    }

    pub fn drivings(&self) -> Vec<f64> {
        self.tracks.iter().map(|t| t.driving).collect()
    }

    /// Capacity added by the steps of slit `j` so far.
    pub fn grown(&self, j: usize) -> f64 {
        self.tracks[j].grown
    }

    /// Index of the next vertex slit `j` is heading to.
    pub fn next_vertex(&self, j: usize) -> usize {
        self.tracks[j].next
    }

    pub fn vertex_count(&self, j: usize) -> usize {
        self.tracks[j].images.len()
    }

    pub fn exhausted(&self, j: usize) -> bool {
        self.tracks[j].next >= self.tracks[j].images.len()
    }

    /// Capacity grown by slit `j` when it reached each vertex so far.
    pub fn vertex_caps(&self, j: usize) -> &[f64] {
        &self.tracks[j].vertex_caps
    }

    /// Image of vertex `k` of slit `j` under the current chain.
    pub fn image(&mut self, j: usize, k: usize) -> Result<Complex64> {
        let n = self.chain.len();
        let track = &mut self.tracks[j];
        if track.pushed[k] < n {
            let steps = &self.chain.steps()[track.pushed[k]..];
            let mut z = track.images[k];
            for (i, st) in steps.iter().enumerate() {
                z = st.forward(z).ok_or(Error::PointSwallowed {
                    step: track.pushed[k] + i,
                    z: track.images[k],
                })?;
            }
            track.images[k] = z;
            track.pushed[k] = n;
        }
        Ok(track.images[k])
    }

    /// Step from the current driving point of slit `j` to its next vertex image.
    pub fn full_step(&mut self, j: usize) -> Result<Option<ElementaryStep>> {
        if self.exhausted(j) {
            return Ok(None);
        }
        let k = self.tracks[j].next;
        let c = self.image(j, k)?;
        let anchor = self.tracks[j].driving;
        let step = match self.family {
            StepFamily::Tilted => ElementaryStep::through(anchor, c),
            StepFamily::Vertical => ElementaryStep::vertical(c.re, 0.5 * c.im * c.im),
        };
        step.map(Some).map_err(|e| Error::FitFailure {
            location: format!("slit {j}, vertex {k}"),
            reason: e.to_string(),
        })
    }

    /// Appends an externally built step, updating every driving point.
    pub fn apply(&mut self, j: usize, step: ElementaryStep) -> Result<()> {
        for (i, t) in self.tracks.iter_mut().enumerate() {
            if i != j {
                t.driving = step.forward_real(t.driving, None)?.0;
            }
        }
        let t = &mut self.tracks[j];
        t.driving = step.tip_image();
        t.grown += step.dcap();
        self.chain.push(step);
        Ok(())
    }

    /// Grows slit `j` by context capacity `amount`.
    ///
    /// Whole steps to successive vertices are committed; the last partial step (a straight
    /// segment of the same direction, shortened to the remaining capacity) is committed only if
    /// `commit_partial` is set and otherwise returned in [`Advance::pending`].
    pub fn advance(&mut self, j: usize, amount: f64, commit_partial: bool) -> Result<Advance> {
        let mut remaining = amount;
        let mut grown = 0.0;
        let tiny = 1e-15 * (1.0 + self.chain.total_hcap());
        while remaining > tiny {
            let Some(step) = self.full_step(j)? else {
                break;
            };
            if step.dcap() <= remaining * (1.0 + 1e-12) {
                self.apply(j, step)?;
                remaining -= step.dcap();
                grown += step.dcap();
                let t = &mut self.tracks[j];
                t.next += 1;
                t.vertex_caps.push(t.grown);
            } else {
                let partial = step.scaled((remaining / step.dcap()).sqrt())?;
                grown += partial.dcap();
                if commit_partial {
                    self.apply(j, partial)?;
                    return Ok(Advance { grown, pending: None });
                }
                return Ok(Advance { grown, pending: Some(partial) });
            }
        }
        Ok(Advance { grown, pending: None })
    }

    /// Grows slit `j` through whole steps until vertex `k` is reached.
    pub fn advance_to_vertex(&mut self, j: usize, k: usize) -> Result<()> {
        while self.tracks[j].next <= k && !self.exhausted(j) {
            let step = self.full_step(j)?.expect("not exhausted");
            self.apply(j, step)?;
            let t = &mut self.tracks[j];
            t.next += 1;
            t.vertex_caps.push(t.grown);
        }
        Ok(())
    }

    /// Grows slit `j` through all its vertices.
    pub fn zip_all(&mut self, j: usize) -> Result<()> {
        let last = self.vertex_count(j) - 1;
        self.advance_to_vertex(j, last)
    }

    /// Context capacity of the next vertex of slit `j` if it were reached by one straight step.
    pub fn next_vertex_cap_estimate(&mut self, j: usize) -> Result<Option<f64>> {
        let grown = self.tracks[j].grown;
        Ok(self.full_step(j)?.map(|s| grown + s.dcap()))
    }
}

/// A slit zipped on its own: the capacity of every initial sub-polyline.
#[derive(Clone, Debug)]
pub struct SlitModel {
    vertices: Vec<Complex64>,
    caps: Vec<f64>,
    chain: ConformalChain,
    family: StepFamily,
}

impl SlitModel {
    pub fn new(vertices: Vec<Complex64>, family: StepFamily) -> Result<Self> {
        let mut z = Zipper::new(vec![vertices.clone()], family);
        z.zip_all(0)?;
        let caps = z.vertex_caps(0).to_vec();
        Ok(SlitModel { vertices, caps, chain: z.into_chain(), family })
    }

    pub fn vertices(&self) -> &[Complex64] {
        &self.vertices
    }

    /// Capacity of the sub-polyline ending at each vertex.
    pub fn caps(&self) -> &[f64] {
        &self.caps
    }

    pub fn total(&self) -> f64 {
        *self.caps.last().unwrap()
    }

    pub fn chain(&self) -> &ConformalChain {
        &self.chain
    }

    /// Steps mapping out the initial piece of capacity `x`: whole steps plus an optional partial one.
    pub fn prefix_steps(&self, x: f64) -> Result<(usize, Option<ElementaryStep>)> {
        let x = x.clamp(0.0, self.total());
        let k = self.caps.partition_point(|&c| c <= x) - 1;
        if k + 1 >= self.caps.len() {
            return Ok((k, None));
        }
        let rest = x - self.caps[k];
        if rest <= 0.0 {
            return Ok((k, None));
        }
        let st = self.chain.steps()[k];
        Ok((k, Some(st.scaled((rest / st.dcap()).sqrt())?)))
    }

    /// Chain of the initial piece of capacity `x`.
    pub fn prefix_chain(&self, x: f64) -> Result<ConformalChain> {
        let (k, partial) = self.prefix_steps(x)?;
        let mut ch = self.chain.prefix(k);
        if let Some(p) = partial {
            ch.push(p);
        }
        Ok(ch)
    }

    /// Point of the polyline at capacity parameter `x`: the tip of the partial step pulled back
    /// through the preceding steps, projected onto its segment.
    pub fn point_at(&self, x: f64) -> Complex64 {
        match self.prefix_steps(x) {
            Ok((k, Some(partial))) => {
                let p = self.chain.inverse_through(partial.tip_point(), k);
                let (a, b) = (self.vertices[k], self.vertices[k + 1]);
                a + (b - a) * project(a, b, p)
            }
            Ok((k, None)) => self.vertices[k],
            Err(_) => self.vertices[0],
        }
    }

    /// Capacity of the initial piece ending at the point of segment `k` nearest to `p`.
    pub fn cap_on_segment(&self, k: usize, p: Complex64) -> f64 {
        if k + 1 >= self.vertices.len() {
            return self.total();
        }
        let (a, b) = (self.vertices[k], self.vertices[k + 1]);
        let f = project(a, b, p);
        if f <= 0.0 {
            return self.caps[k];
        }
        if f >= 1.0 {
            return self.caps[k + 1];
        }
        let steps = &self.chain.steps()[..k];
        let mut w = a + (b - a) * f;
        for st in steps {
            match st.forward(w) {
                Some(v) => w = v,
                None => return self.caps[k],
            }
        }
        let anchor = steps.last().map_or(a.re, |st| st.tip_image());
        match self.family.step_to(anchor, w) {
            Ok(st) => (self.caps[k] + st.dcap()).clamp(self.caps[k], self.caps[k + 1]),
            Err(_) => self.caps[k],
        }
    }

}

/// Position of the projection of `p` onto segment `[a, b]` as a fraction in `[0, 1]`.
fn project(a: Complex64, b: Complex64, p: Complex64) -> f64 {
    let d = b - a;
    (((p - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn vertical_slit_capacity_is_exact() {
        let s = SlitCurve::vertical(0.3, 1.0).refine(0.01);
        for family in [StepFamily::Tilted, StepFamily::Vertical] {
            let m = SlitModel::new(s.vertices().to_vec(), family).unwrap();
            assert!((m.total() - 0.5).abs() < 1e-12);
            for (k, cap) in m.caps().iter().enumerate() {
                let h = s.vertices()[k].im;
                assert!((cap - h * h / 2.0).abs() < 1e-12);
            }
            for st in m.chain().steps() {
                assert!((st.anchor() - 0.3).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tilted_line_capacity_converges_to_single_step() {
        let one = ElementaryStep::through(0.0, c(1.0, 1.0)).unwrap();
        let mut prev = f64::INFINITY;
        for n in [2usize, 8, 32] {
            let v: Vec<_> = (0..=n).map(|k| c(1.0, 1.0) * (k as f64 / n as f64)).collect();
            let m = SlitModel::new(v, StepFamily::Tilted).unwrap();
            let err = (m.total() - one.dcap()).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 2e-3 * one.dcap());
        let v = vec![c(0.0, 0.0), c(0.5, 0.5), c(1.0, 1.0)];
        let m = SlitModel::new(v, StepFamily::Tilted).unwrap();
        let quarter = ElementaryStep::through(0.0, c(0.5, 0.5)).unwrap();
        assert!((m.caps()[1] - quarter.dcap()).abs() < 1e-12);
    }

    #[test]
    fn partial_advance_matches_prefix() {
        let s = SlitCurve::from_xy(&[(0.0, 0.0), (0.2, 0.5), (0.1, 1.0), (0.4, 1.3)]).refine(0.05);
        let m = SlitModel::new(s.vertices().to_vec(), StepFamily::Tilted).unwrap();
        let x = 0.37 * m.total();
        let mut z = Zipper::from_curves(std::slice::from_ref(&s), StepFamily::Tilted);
        let adv = z.advance(0, x, true).unwrap();
        assert!((adv.grown - x).abs() < 1e-14);
        let ch = m.prefix_chain(x).unwrap();
        assert!((ch.total_hcap() - x).abs() < 1e-14);
        assert_eq!(ch.len(), z.chain().len());
        assert!((z.driving(0) - ch.steps().last().unwrap().tip_image()).abs() < 1e-14);
    }
}
