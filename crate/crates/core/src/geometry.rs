//! Slits, multi-slits, sampled functions and weight vectors.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A simple polyline starting on the real axis and running into the upper half-plane.
#[derive(Clone, Debug, PartialEq)]
pub struct SlitCurve {
    vertices: Vec<Complex64>,
}

impl SlitCurve {
    /// Wraps a vertex list. Invariants are checked by [`MultiSlit::validate`].
    pub fn new(vertices: Vec<Complex64>) -> Self {
        SlitCurve { vertices }
    }

    pub fn from_xy(points: &[(f64, f64)]) -> Self {
        SlitCurve::new(points.iter().map(|&(x, y)| Complex64::new(x, y)).collect())
    }

    /// Vertical segment of height `h` at `x`.
    pub fn vertical(x: f64, h: f64) -> Self {
        SlitCurve::new(vec![Complex64::new(x, 0.0), Complex64::new(x, h)])
    }

    pub fn vertices(&self) -> &[Complex64] {
        &self.vertices
    }

    pub fn base(&self) -> Complex64 {
        self.vertices[0]
    }

    pub fn tip(&self) -> Complex64 {
        *self.vertices.last().expect("slit has vertices")
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn segment_count(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    pub fn max_segment_length(&self) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .fold(0.0, f64::max)
    }

    /// Cumulative arclength at each vertex.
    pub fn arclengths(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.vertices.len());
        let mut acc = 0.0;
        out.push(0.0);
        for w in self.vertices.windows(2) {
            acc += (w[1] - w[0]).norm();
            out.push(acc);
        }
        out
    }

    /// Point at arclength `s` from the base (clamped to the curve).
    pub fn point_at(&self, s: f64) -> Complex64 {
        let lens = self.arclengths();
        point_on_polyline(&self.vertices, &lens, s)
    }

    /// Initial sub-polyline of arclength `s`.
    pub fn prefix(&self, s: f64) -> SlitCurve {
        let lens = self.arclengths();
        let mut out = vec![self.vertices[0]];
        for k in 1..self.vertices.len() {
            if lens[k] < s {
                out.push(self.vertices[k]);
            } else {
                let p = point_on_polyline(&self.vertices, &lens, s);
                if (p - *out.last().unwrap()).norm() > 0.0 {
                    out.push(p);
                }
                break;
            }
        }
        SlitCurve::new(out)
    }

    /// Subdivides every segment into equal pieces no longer than `max_len`, keeping all vertices.
    pub fn refine(&self, max_len: f64) -> SlitCurve {
        let mut out = vec![self.vertices[0]];
        for w in self.vertices.windows(2) {
            let len = (w[1] - w[0]).norm();
            let pieces = ((len / max_len).ceil() as usize).max(1);
            for k in 1..=pieces {
                let f = k as f64 / pieces as f64;
                out.push(if k == pieces { w[1] } else { w[0] + (w[1] - w[0]) * f });
            }
        }
        SlitCurve::new(out)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> SlitCurve {
        SlitCurve::new(self.vertices.iter().map(|&z| f(z)).collect())
    }

    fn violations(&self, slit: usize, out: &mut Vec<Violation>) {
        let v = &self.vertices;
        if v.len() < 2 {
            out.push(Violation::TooFewVertices { slit });
            return;
        }
        for (index, z) in v.iter().enumerate() {
            if !z.re.is_finite() || !z.im.is_finite() {
                out.push(Violation::NonFinite { slit, index });
                return;
            }
        }
        if v[0].im != 0.0 {
            out.push(Violation::BaseOffAxis { slit });
        }
        for (index, z) in v.iter().enumerate().skip(1) {
            if z.im <= 0.0 {
                out.push(Violation::NotInUpperHalfPlane { slit, index });
            }
        }
        for index in 1..v.len() {
            if v[index] == v[index - 1] {
                out.push(Violation::RepeatedVertex { slit, index });
            }
        }
        let m = v.len() - 1;
        for a in 0..m {
            for b in (a + 1)..m {
                let hit = if b == a + 1 {
                    adjacent_overlap(v[a], v[a + 1], v[b + 1])
                } else {
                    segments_intersect(v[a], v[a + 1], v[b], v[b + 1])
                };
                if hit {
                    out.push(Violation::SelfIntersection { slit, segments: (a, b) });
                }
            }
        }
    }
}

/// Geometric invariant violations found by [`MultiSlit::validate`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Violation {
    NoSlits,
    TooFewVertices { slit: usize },
    NonFinite { slit: usize, index: usize },
    BaseOffAxis { slit: usize },
    NotInUpperHalfPlane { slit: usize, index: usize },
    RepeatedVertex { slit: usize, index: usize },
    SelfIntersection { slit: usize, segments: (usize, usize) },
    ClosuresIntersect { slits: (usize, usize) },
    SharedBasePoint { slits: (usize, usize) },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoSlits => write!(f, "no slits"),
            Violation::TooFewVertices { slit } => write!(f, "slit {slit}: fewer than 2 vertices"),
            Violation::NonFinite { slit, index } => {
                write!(f, "slit {slit}: non-finite vertex {index}")
            }
            Violation::BaseOffAxis { slit } => write!(f, "slit {slit}: base point off ℝ"),
            Violation::NotInUpperHalfPlane { slit, index } => {
                write!(f, "slit {slit}: vertex {index} not in the upper half-plane")
            }
            Violation::RepeatedVertex { slit, index } => {
                write!(f, "slit {slit}: vertex {index} repeats its predecessor")
            }
            Violation::SelfIntersection { slit, segments } => write!(
                f,
                "slit {slit}: segments {} and {} intersect",
                segments.0, segments.1
            ),
            Violation::ClosuresIntersect { slits } => {
                write!(f, "slits {} and {}: closures intersect", slits.0, slits.1)
            }
            Violation::SharedBasePoint { slits } => {
                write!(f, "slits {} and {}: shared base point", slits.0, slits.1)
            }
        }
    }
}

/// Result of validating a multi-slit.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A finite union of slits with disjoint closures.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiSlit {
    slits: Vec<SlitCurve>,
    separation: f64,
}

impl MultiSlit {
    pub fn new(slits: Vec<SlitCurve>) -> Self {
        let separation = separation(&slits);
        MultiSlit { slits, separation }
    }

    pub fn single(slit: SlitCurve) -> Self {
        MultiSlit::new(vec![slit])
    }

    pub fn slits(&self) -> &[SlitCurve] {
        &self.slits
    }

    pub fn slit(&self, j: usize) -> &SlitCurve {
        &self.slits[j]
    }

    pub fn len(&self) -> usize {
        self.slits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slits.is_empty()
    }

    /// Minimum distance between distinct slits (infinite for a single slit).
    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn base_points(&self) -> Vec<f64> {
        self.slits.iter().map(|s| s.base().re).collect()
    }

    pub fn vertices(&self) -> impl Iterator<Item = &Complex64> {
        self.slits.iter().flat_map(|s| s.vertices().iter())
    }

    /// Euclidean diameter of the vertex set.
    pub fn diameter(&self) -> f64 {
        let pts: Vec<Complex64> = self.vertices().copied().collect();
        let mut d: f64 = 0.0;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                d = d.max((pts[i] - pts[j]).norm());
            }
        }
        d
    }

    /// Largest imaginary part of any vertex.
    pub fn height(&self) -> f64 {
        self.vertices().map(|z| z.im).fold(0.0, f64::max)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        if self.slits.is_empty() {
            violations.push(Violation::NoSlits);
        }
        for (j, s) in self.slits.iter().enumerate() {
            s.violations(j, &mut violations);
        }
        if violations.is_empty() {
            for a in 0..self.slits.len() {
                for b in (a + 1)..self.slits.len() {
                    if self.slits[a].base() == self.slits[b].base() {
                        violations.push(Violation::SharedBasePoint { slits: (a, b) });
                    }
                    if polyline_distance(self.slits[a].vertices(), self.slits[b].vertices()) <= 0.0
                    {
                        violations.push(Violation::ClosuresIntersect { slits: (a, b) });
                    }
                }
            }
        }
        ValidationReport { violations }
    }

    /// Returns an error listing all violations if the multi-slit is invalid.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_ok() {
            Ok(())
        } else {
            let msg: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
            Err(Error::InvalidGeometry(msg.join("; ")))
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64 + Copy) -> MultiSlit {
        MultiSlit::new(self.slits.iter().map(|s| s.map(f)).collect())
    }

    pub fn from_json(text: &str) -> Result<MultiSlit> {
        let raw: MultiSlitJson = serde_json::from_str(text)?;
        Ok(raw.into())
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(MultiSlitJson::from(self)).expect("multi-slit serializes")
    }
}

/// Serialized form `{"slits":[{"vertices":[[x,y],...]}, ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultiSlitJson {
    pub slits: Vec<SlitJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlitJson {
    pub vertices: Vec<[f64; 2]>,
}

impl From<MultiSlitJson> for MultiSlit {
    fn from(raw: MultiSlitJson) -> Self {
        MultiSlit::new(
            raw.slits
                .into_iter()
                .map(|s| {
                    SlitCurve::new(
                        s.vertices
                            .into_iter()
                            .map(|[x, y]| Complex64::new(x, y))
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

impl From<&MultiSlit> for MultiSlitJson {
    fn from(m: &MultiSlit) -> Self {
        MultiSlitJson {
            slits: m
                .slits
                .iter()
                .map(|s| SlitJson {
                    vertices: s.vertices.iter().map(|z| [z.re, z.im]).collect(),
                })
                .collect(),
        }
    }
}

/// Maps every vertex `z` to `r z + c`.
pub fn affine_map(m: &MultiSlit, r: f64, c: f64) -> Result<MultiSlit> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidScale(r));
    }
    Ok(m.map(move |z| z * r + c))
}

/// Resamples a slit to `n_points` vertices equally spaced in arclength.
pub fn resample_by_arclength(s: &SlitCurve, n_points: usize) -> Result<SlitCurve> {
    if n_points < 2 {
        return Err(Error::InvalidInput(format!(
            "resampling needs at least 2 points, got {n_points}"
        )));
    }
    let lens = s.arclengths();
    let total = *lens.last().unwrap();
    let mut out = Vec::with_capacity(n_points);
    out.push(s.base());
    for k in 1..n_points - 1 {
        let target = total * k as f64 / (n_points - 1) as f64;
        out.push(point_on_polyline(s.vertices(), &lens, target));
    }
    out.push(s.tip());
    Ok(SlitCurve::new(out))
}

fn point_on_polyline(v: &[Complex64], lens: &[f64], s: f64) -> Complex64 {
    if s <= 0.0 {
        return v[0];
    }
    let k = lens.partition_point(|&l| l < s);
    if k >= v.len() {
        return *v.last().unwrap();
    }
    let seg = lens[k] - lens[k - 1];
    if seg <= 0.0 {
        return v[k];
    }
    let f = (s - lens[k - 1]) / seg;
    v[k - 1] + (v[k] - v[k - 1]) * f
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn orient(a: Complex64, b: Complex64, c: Complex64) -> f64 {
    cross(b - a, c - a)
}

fn on_segment(a: Complex64, b: Complex64, p: Complex64) -> bool {
    p.re >= a.re.min(b.re) && p.re <= a.re.max(b.re) && p.im >= a.im.min(b.im) && p.im <= a.im.max(b.im)
}

/// Closed segment intersection test.
pub fn segments_intersect(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Adjacent segments `[a,b]`, `[b,c]` overlap beyond their shared vertex when they fold back.
fn adjacent_overlap(a: Complex64, b: Complex64, c: Complex64) -> bool {
    orient(a, b, c) == 0.0 && ((b - a).re * (c - b).re + (b - a).im * (c - b).im) < 0.0
}

pub fn point_segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

pub fn segment_distance(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

/// Distance from a point to a polyline.
pub fn point_polyline_distance(p: Complex64, v: &[Complex64]) -> f64 {
    if v.len() == 1 {
        return (p - v[0]).norm();
    }
    v.windows(2)
        .map(|w| point_segment_distance(p, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}

/// Distance between two polylines (brute force over segment pairs).
pub fn polyline_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut d = f64::INFINITY;
    for s in a.windows(2) {
        for t in b.windows(2) {
            d = d.min(segment_distance(s[0], s[1], t[0], t[1]));
            if d == 0.0 {
                return 0.0;
            }
        }
    }
    d
}

fn separation(slits: &[SlitCurve]) -> f64 {
    let mut d = f64::INFINITY;
    for a in 0..slits.len() {
        for b in (a + 1)..slits.len() {
            if slits[a].len() >= 2 && slits[b].len() >= 2 {
                d = d.min(polyline_distance(slits[a].vertices(), slits[b].vertices()));
            }
        }
    }
    d
}

/// Directed Hausdorff distance from polyline `a` to polyline `b`, sampling `a` on every segment.
pub fn directed_hausdorff(a: &[Complex64], b: &[Complex64], samples_per_segment: usize) -> f64 {
    let k = samples_per_segment.max(1);
    let mut d: f64 = point_polyline_distance(a[0], b);
    for w in a.windows(2) {
        for i in 1..=k {
            let p = w[0] + (w[1] - w[0]) * (i as f64 / k as f64);
            d = d.max(point_polyline_distance(p, b));
        }
    }
    d
}

/// Symmetric Hausdorff distance between two polylines.
pub fn hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    directed_hausdorff(a, b, 8).max(directed_hausdorff(b, a, 8))
}

/// Hausdorff distance between two multi-slits with matching slit order (max over slits).
pub fn multislit_hausdorff(a: &MultiSlit, b: &MultiSlit) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Incompatible(format!(
            "slit counts differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.slits()
        .iter()
        .zip(b.slits())
        .map(|(s, t)| hausdorff(s.vertices(), t.vertices()))
        .fold(0.0, f64::max))
}

/// Real values sampled on a uniform grid over `[t0, t1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    t0: f64,
    t1: f64,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(t0: f64, t1: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput("sampled function needs ≥ 2 values".into()));
        }
        if !(t0 < t1) {
            return Err(Error::InvalidInput(format!("empty interval [{t0}, {t1}]")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("sampled function has non-finite values".into()));
        }
        Ok(SampledFunction { t0, t1, values })
    }

    /// Samples `f` at `n` uniform points.
    pub fn from_fn(t0: f64, t1: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let dt = (t1 - t0) / (n.max(2) - 1) as f64;
        SampledFunction::new(t0, t1, (0..n.max(2)).map(|k| f(t0 + dt * k as f64)).collect())
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        (self.t1 - self.t0) / (self.values.len() - 1) as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k + 1 == self.values.len() {
            self.t1
        } else {
            self.t0 + self.spacing() * k as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len()).map(|k| self.time(k)).collect()
    }

    /// Linear interpolation, clamped to the end values outside the interval.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.values.len();
        let u = ((t - self.t0) / self.spacing()).clamp(0.0, (n - 1) as f64);
        let k = (u.floor() as usize).min(n - 2);
        let f = u - k as f64;
        self.values[k] * (1.0 - f) + self.values[k + 1] * f
    }

    pub fn sup_distance(&self, other: &SampledFunction) -> f64 {
        if self.len() == other.len() && self.t0 == other.t0 && self.t1 == other.t1 {
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        } else {
            let n = self.len().max(other.len()) * 2;
            let (a, b) = (self.t0.max(other.t0), self.t1.min(other.t1));
            (0..=n)
                .map(|k| {
                    let t = a + (b - a) * k as f64 / n as f64;
                    (self.eval(t) - other.eval(t)).abs()
                })
                .fold(0.0, f64::max)
        }
    }

    /// Largest |f(t) − f(s)| over grid pairs with |t − s| ≤ delta.
    pub fn modulus_of_continuity(&self, delta: f64) -> f64 {
        let lag = ((delta / self.spacing()) + 1e-9).floor() as usize;
        let mut best: f64 = 0.0;
        for i in 0..self.values.len() {
            for j in (i + 1)..=(i + lag).min(self.values.len() - 1) {
                best = best.max((self.values[j] - self.values[i]).abs());
            }
        }
        best
    }
}

/// Nonnegative weights summing to one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightVector {
    weights: Vec<f64>,
}

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("empty weight vector".into()));
        }
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::InvalidInput(format!("weights outside [0,1]: {weights:?}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("weights sum to {sum}, not 1")));
        }
        Ok(WeightVector { weights })
    }

    pub fn equal(n: usize) -> Self {
        WeightVector { weights: vec![1.0 / n as f64; n] }
    }

    /// Two weights `(l, 1 − l)`.
    pub fn pair(l: f64) -> Result<Self> {
        WeightVector::new(vec![l, 1.0 - l])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn two_separate_vertical_segments_are_valid() {
        let m = MultiSlit::new(vec![SlitCurve::vertical(0.0, 1.0), SlitCurve::vertical(3.0, 1.0)]);
        assert!(m.validate().is_ok());
        assert!((m.separation() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn base_off_axis_is_reported() {
        let m = MultiSlit::single(SlitCurve::from_xy(&[(0.0, 0.1), (0.0, 1.0)]));
        let r = m.validate();
        assert_eq!(r.violations, vec![Violation::BaseOffAxis { slit: 0 }]);
        assert_eq!(r.violations[0].to_string(), "slit 0: base point off ℝ");
    }

    #[test]
    fn shared_base_point_reports_intersecting_closures() {
        let m = MultiSlit::new(vec![
            SlitCurve::vertical(0.0, 1.0),
            SlitCurve::from_xy(&[(0.0, 0.0), (1.0, 1.0)]),
        ]);
        let r = m.validate();
        assert!(r.violations.contains(&Violation::ClosuresIntersect { slits: (0, 1) }));
        assert!(r.violations.iter().any(|v| v.to_string().contains("closures intersect")));
    }

    #[test]
    fn self_intersection_is_reported() {
        let s = SlitCurve::from_xy(&[(0.0, 0.0), (0.0, 2.0), (1.0, 1.0), (-1.0, 1.0)]);
        let r = MultiSlit::single(s).validate();
        assert!(matches!(r.violations[0], Violation::SelfIntersection { .. }));
    }

    #[test]
    fn fold_back_is_reported() {
        let s = SlitCurve::from_xy(&[(0.0, 0.0), (0.0, 2.0), (0.0, 1.0)]);
        assert!(!MultiSlit::single(s).validate().is_ok());
    }

    #[test]
    fn affine_map_examples() {
        let v1 = MultiSlit::single(SlitCurve::vertical(0.0, 1.0));
        assert_eq!(affine_map(&v1, 2.0, 0.0).unwrap().slit(0), &SlitCurve::vertical(0.0, 2.0));
        assert_eq!(affine_map(&v1, 1.0, 0.0).unwrap(), v1);
        assert_eq!(affine_map(&v1, 1.0, 5.0).unwrap().slit(0), &SlitCurve::vertical(5.0, 1.0));
        assert!(matches!(affine_map(&v1, 0.0, 0.0), Err(Error::InvalidScale(_))));
        assert!(matches!(affine_map(&v1, -1.0, 0.0), Err(Error::InvalidScale(_))));
    }

    #[test]
    fn resample_examples() {
        let v1 = SlitCurve::vertical(0.0, 1.0);
        assert_eq!(resample_by_arclength(&v1, 2).unwrap(), v1);
        let r = resample_by_arclength(&v1, 101).unwrap();
        assert_eq!(r.len(), 101);
        for (k, z) in r.vertices().iter().enumerate() {
            assert_eq!(z.re, 0.0);
            assert!((z.im - k as f64 / 100.0).abs() < 1e-15);
        }
    }

    #[test]
    fn resampled_l_shape_stays_within_corner_cut_bound() {
        let l = SlitCurve::from_xy(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]);
        let r = resample_by_arclength(&l, 1000).unwrap();
        assert_eq!(r.base(), l.base());
        // Spacing 2/999: neighbours of the corner at distances a, b with a + b = 2/999
        // cut it by ab/sqrt(a²+b²) ≤ (2/999)/(2√2).
        let bound = (2.0 / 999.0) / (2.0 * 2f64.sqrt());
        let h = hausdorff(r.vertices(), l.vertices());
        assert!(h <= bound + 1e-12, "{h} > {bound}");
        assert!(h <= 1.0 / 999.0);
    }

    #[test]
    fn prefix_and_refine() {
        let s = SlitCurve::from_xy(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)]);
        let p = s.prefix(1.5);
        assert_eq!(p.vertices(), &[c(0.0, 0.0), c(0.0, 1.0), c(0.5, 1.0)]);
        let r = s.refine(0.3);
        assert_eq!(r.len(), 9);
        assert!(r.max_segment_length() <= 0.3);
        assert!(hausdorff(r.vertices(), s.vertices()) < 1e-15);
    }

    #[test]
    fn sampled_function_interpolates() {
        let f = SampledFunction::from_fn(0.0, 1.0, 11, |t| 2.0 * t).unwrap();
        assert!((f.eval(0.55) - 1.1).abs() < 1e-14);
        assert_eq!(f.eval(2.0), 2.0);
        assert!((f.modulus_of_continuity(0.2) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn weight_vector_checks() {
        assert!(WeightVector::new(vec![0.3, 0.7]).is_ok());
        assert!(WeightVector::new(vec![0.3, 0.8]).is_err());
        assert!(WeightVector::new(vec![-0.1, 1.1]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = MultiSlit::new(vec![SlitCurve::vertical(-1.0, 1.0), SlitCurve::vertical(1.0, 2.0)]);
        let text = serde_json::to_string(&m.to_json_value()).unwrap();
        assert_eq!(MultiSlit::from_json(&text).unwrap(), m);
    }
}
