use num_complex::Complex64;

use super::step::{ElementaryStep, Side};
use crate::error::{Error, Result};

/// Composition `g_A = step_m ∘ … ∘ step_1` of elementary map-outs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConformalChain {
    steps: Vec<ElementaryStep>,
    total_hcap: f64,
}

impl ConformalChain {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_steps(steps: Vec<ElementaryStep>) -> Self {
        let total_hcap = steps.iter().map(|s| s.dcap()).sum();
        ConformalChain { steps, total_hcap }
    }

    pub fn push(&mut self, step: ElementaryStep) {
        self.total_hcap += step.dcap();
        self.steps.push(step);
    }

    pub fn extend(&mut self, other: &ConformalChain) {
        for s in &other.steps {
            self.push(*s);
        }
    }

    pub fn steps(&self) -> &[ElementaryStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_hcap(&self) -> f64 {
        self.total_hcap
    }

    /// Chain made of the first `k` steps.
    pub fn prefix(&self, k: usize) -> ConformalChain {
        ConformalChain::from_steps(self.steps[..k].to_vec())
    }

    /// Applies steps `start..` to `z`.
    pub fn forward_from(&self, z: Complex64, start: usize) -> Result<Complex64> {
        let mut w = z;
        for (k, st) in self.steps.iter().enumerate().skip(start) {
            w = st.forward(w).ok_or(Error::PointSwallowed { step: k, z })?;
        }
        Ok(w)
    }

    /// `g_A(z)`.
    pub fn forward_eval(&self, z: Complex64) -> Result<Complex64> {
        self.forward_from(z, 0)
    }

    /// `(g_A(z), g_A(z) − z)` with the displacement accumulated step by step.
    pub fn forward_displacement(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let mut w = z;
        let mut disp = Complex64::new(0.0, 0.0);
        for (k, st) in self.steps.iter().enumerate() {
            let (g, d) = st
                .forward_displacement(w)
                .ok_or(Error::PointSwallowed { step: k, z })?;
            w = g;
            disp += d;
        }
        Ok((w, disp))
    }

    /// `h_A(w) = g_A⁻¹(w)`.
    pub fn inverse_eval(&self, w: Complex64) -> Complex64 {
        self.inverse_through(w, self.steps.len())
    }

    /// Applies the inverses of steps `k-1, …, 0` to `w`.
    pub fn inverse_through(&self, w: Complex64, k: usize) -> Complex64 {
        self.steps[..k].iter().rev().fold(w, |acc, st| st.inverse(acc))
    }

    /// Real-axis evaluation with derivative; `side` resolves exact hits of an anchor.
    pub fn eval_real(&self, x: f64, side: Option<Side>) -> Result<(f64, f64)> {
        let mut v = x;
        let mut d = 1.0;
        for st in &self.steps {
            let (nv, nd) = st.forward_real(v, side)?;
            v = nv;
            d *= nd;
        }
        Ok((v, d))
    }

    /// `g^−(x)` or `g^+(x)`: boundary image of a real point approached from `side`.
    pub fn boundary_images(&self, x: f64, side: Side) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::AmbiguousBoundary(x));
        }
        Ok(self.eval_real(x, Some(side))?.0)
    }

    /// `g_A′(x)` at a real point off the hull, by the chain rule through every step.
    pub fn derivative_at_boundary(&self, x: f64) -> Result<f64> {
        let mut v = x;
        let mut d = 1.0;
        for st in &self.steps {
            let dist = (v - st.anchor()).abs();
            if dist <= 1e-10 * st.scale() {
                return Err(Error::NearSingularity { x, distance: dist });
            }
            let (nv, nd) = st.forward_real(v, None)?;
            v = nv;
            d *= nd;
        }
        Ok(d)
    }

    /// Expansion coefficient at ∞ fitted from probes `iR` at two radii.
    pub fn fitted_hcap(&self) -> Result<f64> {
        let extent = self
            .steps
            .iter()
            .map(|s| s.anchor().abs() + s.length())
            .fold(0.0, f64::max)
            + self.total_hcap.sqrt();
        let base = extent.max(1.0);
        let (r1, r2) = (1e3 * base, 1e4 * base);
        let b1 = -r1 * self.forward_displacement(Complex64::new(0.0, r1))?.1.im;
        let b2 = -r2 * self.forward_displacement(Complex64::new(0.0, r2))?.1.im;
        Ok((r2 * r2 * b2 - r1 * r1 * b1) / (r2 * r2 - r1 * r1))
    }

    /// Tip of every step mapped back to the original domain.
    pub fn tips(&self) -> Vec<Complex64> {
        (0..self.steps.len())
            .map(|k| self.inverse_through(self.steps[k].tip_point(), k))
            .collect()
    }
}
