use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Which side of a boundary point an evaluation approaches from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Map-out of a straight micro-slit from `anchor` at angle `π·tilt` with capacity `dcap`.
///
/// In coordinates centred at the anchor the inverse map is
/// `h(w) = (w − p)^a (w − q)^(1−a)` with `a = 1 − tilt`, `p = −(1−a)s`, `q = a s`.
/// The slit tip has preimage `w* = p + q` and the base point splits into `p` (left) and `q` (right).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementaryStep {
    anchor: f64,
    dcap: f64,
    tilt: f64,
    a: f64,
    s: f64,
    p: f64,
    q: f64,
    length: f64,
    tip: Complex64,
    vertical: bool,
    /// Coefficients `c_n` of `g(ζ) = ζ (1 + Σ c_n (s/ζ)^n)` about ∞ (tilted steps only).
    series: [f64; SERIES_LEN],
}

const HALF: f64 = 0.5;
const SERIES_LEN: usize = 16;
/// Beyond this multiple of the slit length the truncated series is accurate to rounding.
const SERIES_ONLY: f64 = 10.0;
/// Beyond this multiple of the slit length one Newton correction of the series value suffices.
const SERIES_NEWTON: f64 = 4.0;

impl ElementaryStep {
    /// Tilted micro-slit of capacity `dcap` at `anchor`.
    pub fn tilted(anchor: f64, tilt: f64, dcap: f64) -> Result<Self> {
        if !(dcap > 0.0) || !dcap.is_finite() {
            return Err(Error::InvalidCapacity(dcap));
        }
        if !(tilt > 0.0 && tilt < 1.0) {
            return Err(Error::InvalidTilt(tilt));
        }
        if !anchor.is_finite() {
            return Err(Error::InvalidInput(format!("anchor {anchor}")));
        }
        Ok(Self::build(anchor, tilt, dcap))
    }

    /// Vertical micro-slit of capacity `dcap` (height `sqrt(2 dcap)`) at `u`.
    pub fn vertical(u: f64, dcap: f64) -> Result<Self> {
        Self::tilted(u, HALF, dcap)
    }

    /// Micro-slit running straight from `anchor` on ℝ to `target` in ℍ.
    pub fn through(anchor: f64, target: Complex64) -> Result<Self> {
        let d = target - anchor;
        if !(d.im > 0.0) || !d.im.is_finite() || !d.re.is_finite() {
            return Err(Error::InvalidInput(format!(
                "micro-slit target {target} not above anchor line"
            )));
        }
        let tilt = d.im.atan2(d.re) / PI;
        let tilt = tilt.clamp(1e-12, 1.0 - 1e-12);
        let a = 1.0 - tilt;
        let r = d.norm();
        let s = r / shape(a);
        Self::tilted(anchor, tilt, a * (1.0 - a) * s * s / 2.0)
    }

    fn build(anchor: f64, tilt: f64, dcap: f64) -> Self {
        let a = 1.0 - tilt;
        let vertical = tilt == HALF;
        let s = (2.0 * dcap / (a * (1.0 - a))).sqrt();
        let (p, q, length) = if vertical {
            let h = (2.0 * dcap).sqrt();
            (-h, h, h)
        } else {
            (-(1.0 - a) * s, a * s, s * shape(a))
        };
        let tip = if vertical {
            Complex64::new(0.0, length)
        } else {
            Complex64::from_polar(length, PI * tilt)
        };
        let series = if vertical { [0.0; SERIES_LEN] } else { laurent(a, p / s, q / s) };
        ElementaryStep { anchor, dcap, tilt, a, s, p, q, length, tip, vertical, series }
    }

    /// `ζ Σ_{n≥2} c_n (s/ζ)^n`, the truncated far-field displacement.
    fn series_displacement(&self, zeta: Complex64) -> Complex64 {
        let t = self.s / zeta;
        let mut acc = Complex64::new(0.0, 0.0);
        for n in (2..SERIES_LEN).rev() {
            acc = (acc + self.series[n]) * t;
        }
        zeta * acc * t
    }

    /// Same anchor and tilt with the slit length scaled by `f` (capacity by `f²`).
    pub fn scaled(&self, f: f64) -> Result<Self> {
        Self::tilted(self.anchor, self.tilt, self.dcap * f * f)
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn dcap(&self) -> f64 {
        self.dcap
    }

    pub fn tilt(&self) -> f64 {
        self.tilt
    }

    pub fn is_vertical(&self) -> bool {
        self.vertical
    }

    /// Length of the removed segment.
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Tip of the removed segment.
    pub fn tip_point(&self) -> Complex64 {
        self.tip + self.anchor
    }

    /// Image of the tip on ℝ (the new driving point).
    pub fn tip_image(&self) -> f64 {
        self.anchor + self.p + self.q
    }

    /// Images of the base point approached from the left and from the right.
    pub fn base_images(&self) -> (f64, f64) {
        (self.anchor + self.p, self.anchor + self.q)
    }

    /// Length scale of the removed set's preimage interval.
    pub fn scale(&self) -> f64 {
        self.q - self.p
    }

    /// `g(z) − z` for large `|z|` has expansion `dcap/z + moment3/z² + …`.
    fn moment3(&self) -> f64 {
        let a = self.a;
        a * (1.0 - a) * self.s.powi(3) * (2.0 * a - 1.0) / 3.0
    }

    /// Inverse map `h`, defined on the closed upper half-plane.
    pub fn inverse(&self, w: Complex64) -> Complex64 {
        let z = w - self.anchor;
        let out = if self.vertical {
            let h = self.length;
            upper_sqrt(z - h) * upper_sqrt(z + h)
        } else {
            (log_upper(z - self.p) * self.a + log_upper(z - self.q) * (1.0 - self.a)).exp()
        };
        out + self.anchor
    }

    /// Derivative of the inverse map.
    pub fn inverse_derivative(&self, w: Complex64) -> Complex64 {
        let z = w - self.anchor;
        let h = self.inverse(w) - self.anchor;
        h * (self.a / (z - self.p) + (1.0 - self.a) / (z - self.q))
    }

    /// Forward map `g` on the closed upper half-plane minus the slit.
    ///
    /// Real inputs use the boundary branch selected by their position relative to the anchor;
    /// hitting the anchor exactly or lying on the slit returns `None`.
    pub fn forward(&self, z: Complex64) -> Option<Complex64> {
        self.forward_displacement(z).map(|(g, _)| g)
    }

    /// `g(ζ) − anchor` for `ζ = z − anchor`.
    fn forward_local(&self, z: Complex64) -> Option<Complex64> {
        let zeta = z - self.anchor;
        if zeta.im <= 0.0 {
            if zeta.re == 0.0 {
                return None;
            }
            return self
                .forward_real(z.re, None)
                .ok()
                .map(|(x, _)| Complex64::new(x - self.anchor, 0.0));
        }
        if self.on_slit(zeta) {
            return None;
        }
        if self.vertical {
            Some(vertical_sqrt(zeta, self.length))
        } else {
            self.far_field(zeta).map_or_else(|| self.solve_tilted(zeta), |(w, _)| Some(w))
        }
    }

    /// Far-field evaluation: series, plus one Newton correction at moderate distance.
    fn far_field(&self, zeta: Complex64) -> Option<(Complex64, Complex64)> {
        let r = zeta.norm();
        if r < SERIES_NEWTON * self.length {
            return None;
        }
        let d = self.series_displacement(zeta);
        if r >= SERIES_ONLY * self.length {
            return Some((zeta + d, d));
        }
        // Newton correction with the residual h(w) − ζ formed without cancellation.
        let w = zeta + d;
        let a = self.a;
        let l = ln1p(-self.p / w) * a + ln1p(-self.q / w) * (1.0 - a);
        let hw_minus_w = w * expm1(l);
        let res = d + hw_minus_w;
        let dh = (w + hw_minus_w) * (a / (w - self.p) + (1.0 - a) / (w - self.q));
        let dw = res / dh;
        Some((w - dw, d - dw))
    }

    /// `g(z) − z`, evaluated without cancellation for large `|z|`.
    pub fn forward_displacement(&self, z: Complex64) -> Option<(Complex64, Complex64)> {
        let zeta = z - self.anchor;
        if !self.vertical && zeta.im > 0.0 {
            if let Some((_, d)) = self.far_field(zeta) {
                return Some((z + d, d));
            }
        }
        let w = self.forward_local(z)?;
        let big = 4.0 * self.scale();
        if zeta.im <= 0.0 || w.norm() < big {
            let g = w + self.anchor;
            return Some((g, g - z));
        }
        let disp = if self.vertical {
            self.length * self.length / (w + zeta)
        } else {
            let e = ln1p(-self.p / w) * self.a + ln1p(-self.q / w) * (1.0 - self.a);
            -(w * expm1(e))
        };
        // Adding the displacement to z keeps the low bits of z when the anchor is far away.
        Some((z + disp, disp))
    }

    fn on_slit(&self, zeta: Complex64) -> bool {
        let r = zeta.norm();
        if r > self.length * (1.0 + 1e-14) {
            return false;
        }
        let dir = self.tip / self.length;
        let along = (zeta * dir.conj()).re;
        let off = (zeta * dir.conj()).im.abs();
        along >= 0.0 && off <= 1e-14 * self.length
    }

    fn phi(&self, w: Complex64) -> (Complex64, Complex64) {
        let a = self.a;
        let wp = w - self.p;
        let wq = w - self.q;
        let f = log_upper(wp) * a + log_upper(wq) * (1.0 - a);
        let df = a / wp + (1.0 - a) / wq;
        (f, df)
    }

    /// Real preimage on one side of the slit of the slit point at distance `rho` from the anchor.
    fn slit_preimage(&self, rho: f64, left: bool) -> f64 {
        let (a, p, q) = (self.a, self.p, self.q);
        let wstar = p + q;
        let (mut lo, mut hi) = if left { (p, wstar) } else { (wstar, q) };
        let target = rho.ln();
        // |h| increases on (p, w*) and decreases on (w*, q).
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let val = a * (mid - p).ln() + (1.0 - a) * (q - mid).ln() - target;
            if (val < 0.0) == left {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn candidates(&self, zeta: Complex64) -> [Option<Complex64>; 5] {
        let a = self.a;
        let (p, q) = (self.p, self.q);
        let wstar = p + q;
        let mut out = [None; 5];
        out[0] = Some(zeta + self.series_displacement(zeta));
        out[1] = Some(vertical_sqrt(zeta - self.tip.re, self.tip.im) + wstar);
        let dtip = zeta - self.tip;
        if dtip.norm() < self.length {
            let c = dtip / self.tip * (-2.0 * a * (1.0 - a) * self.s * self.s);
            let d = c.sqrt();
            out[2] = Some(if d.im < 0.0 { -d } else { d } + wstar);
        }
        let dir = self.tip / self.length;
        let rel = zeta * dir.conj();
        if rel.re > 0.0 && rel.re < self.length && rel.im.abs() < self.length {
            let left = rel.im > 0.0;
            let w = self.slit_preimage(rel.re, left);
            let dh = (rel.re * (a / (w - p) + (1.0 - a) / (w - q))).abs();
            out[3] = Some(Complex64::new(w, rel.im.abs() / dh.max(1e-300)));
        }
        if zeta.norm() < 0.5 * self.length {
            let ang = zeta.arg();
            let w = if ang > std::f64::consts::PI * self.tilt {
                let k = Complex64::from_polar((q - p).powf(1.0 - a), std::f64::consts::PI * (1.0 - a));
                log_upper(zeta / k) * (1.0 / a)
            } else {
                log_upper(zeta / (q - p).powf(a)) * (1.0 / (1.0 - a))
            };
            let base = if ang > std::f64::consts::PI * self.tilt { p } else { q };
            out[4] = Some(w.exp() + base);
        }
        out
    }

    fn newton(&self, target: Complex64, mut w: Complex64) -> Option<Complex64> {
        let scale = self.s;
        let (mut f, mut df) = self.phi(w);
        let mut res = (f - target).norm();
        let tiny = 1e-15 * (1.0 + target.norm());
        for _ in 0..100 {
            if res <= tiny {
                return Some(w);
            }
            let dw = (f - target) / df;
            if !dw.re.is_finite() || !dw.im.is_finite() {
                return None;
            }
            let mut lam = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let wn = w - dw * lam;
                if wn.im > 0.0 {
                    let (fn_, dfn) = self.phi(wn);
                    let rn = (fn_ - target).norm();
                    if rn < res {
                        w = wn;
                        f = fn_;
                        df = dfn;
                        res = rn;
                        accepted = true;
                        break;
                    }
                }
                lam *= 0.5;
            }
            if !accepted {
                return if res < 1e-11 * (1.0 + target.norm()) { Some(w) } else { None };
            }
            if (dw * lam).norm() <= 1e-16 * (w.norm() + scale) {
                return Some(w);
            }
        }
        if res < 1e-11 * (1.0 + target.norm()) {
            Some(w)
        } else {
            None
        }
    }

    fn best_start(&self, zeta: Complex64, target: Complex64) -> Complex64 {
        let mut best = None;
        let mut best_res = f64::INFINITY;
        for w in self.candidates(zeta).into_iter().flatten() {
            let w = if w.im > 0.0 { w } else { Complex64::new(w.re, f64::MIN_POSITIVE.max(1e-300)) };
            if !(w.re.is_finite() && w.im.is_finite()) {
                continue;
            }
            let r = (self.phi(w).0 - target).norm();
            if r < best_res {
                best_res = r;
                best = Some(w);
            }
        }
        best.unwrap_or(zeta)
    }

    fn solve_tilted(&self, zeta: Complex64) -> Option<Complex64> {
        let target = log_upper(zeta);
        let w0 = self.best_start(zeta, target);
        if let Some(w) = self.newton(target, w0) {
            return Some(w);
        }
        // Continuation along the ray from a far point where the asymptotic guess is accurate.
        let r = zeta.norm();
        let dir = zeta / r;
        let mut rad = (8.0 * self.s).max(r);
        let mut cur = dir * rad;
        let mut guess = self.best_start(cur, log_upper(cur));
        loop {
            let sol = self.newton(log_upper(cur), guess)?;
            if rad <= r {
                return Some(sol);
            }
            let prev = cur;
            rad = (rad * 0.9).max(r);
            cur = if rad <= r { zeta } else { dir * rad };
            // First-order predictor dw = dz / h'(w) with h' = h Φ'.
            let dphi = self.phi(sol).1;
            guess = sol + (cur - prev) / (prev * dphi);
            if !(guess.im > 0.0) {
                guess = Complex64::new(guess.re, 0.5 * sol.im);
            }
        }
    }

    /// Forward map on the real axis with its derivative.
    ///
    /// A point exactly at the anchor requires `side`; without it the call fails.
    pub fn forward_real(&self, x: f64, side: Option<Side>) -> Result<(f64, f64)> {
        let xt = x - self.anchor;
        // With a side given, hits within rounding of the anchor count as exact: the base point of a
        // slit and the driving value of that slit are computed along different paths.
        let hit = match side {
            Some(_) => xt.abs() <= 1e-13 * (self.anchor.abs() + self.scale()),
            None => xt == 0.0,
        };
        let side = if hit {
            let side = side.ok_or(Error::AmbiguousBoundary(x))?;
            let v = match side {
                Side::Left => self.p,
                Side::Right => self.q,
            };
            return Ok((v + self.anchor, 0.0));
        } else if xt < 0.0 {
            Side::Left
        } else {
            Side::Right
        };
        if self.vertical {
            let h = self.length;
            let r = xt.hypot(h);
            let v = if side == Side::Left { -r } else { r };
            return Ok((v + self.anchor, xt.abs() / r));
        }
        let w = self.solve_real(xt, side);
        let dh = xt * (self.a / (w - self.p) + (1.0 - self.a) / (w - self.q));
        Ok((w + self.anchor, 1.0 / dh))
    }

    fn solve_real(&self, xt: f64, side: Side) -> f64 {
        let a = self.a;
        let (p, q) = (self.p, self.q);
        let ln_target = xt.abs().ln();
        // f is monotone on each side; keep a bracket and use safeguarded Newton.
        let (mut lo, mut hi) = match side {
            Side::Left => (p + xt, xt.min(p)),
            Side::Right => (xt.max(q), q + xt),
        };
        let f = |w: f64| -> (f64, f64) {
            let (u, v) = ((w - p).abs(), (w - q).abs());
            let val = a * u.ln() + (1.0 - a) * v.ln() - ln_target;
            let der = a / (w - p) + (1.0 - a) / (w - q);
            (val, der)
        };
        let mut w = match side {
            Side::Left => (xt + self.dcap / xt + self.moment3() / (xt * xt)).clamp(lo, hi),
            Side::Right => (xt + self.dcap / xt + self.moment3() / (xt * xt)).clamp(lo, hi),
        };
        for _ in 0..200 {
            let (val, der) = f(w);
            if val == 0.0 {
                return w;
            }
            // Increasing in w on the right branch, decreasing on the left.
            let increasing = side == Side::Right;
            if (val > 0.0) == increasing {
                hi = hi.min(w);
            } else {
                lo = lo.max(w);
            }
            let mut wn = w - val / der;
            if !(wn > lo && wn < hi) {
                wn = 0.5 * (lo + hi);
            }
            if (wn - w).abs() <= 2e-16 * (w.abs() + self.s) || hi - lo <= 2e-16 * (w.abs() + self.s)
            {
                return wn;
            }
            w = wn;
        }
        w
    }
}

/// Laurent coefficients of the forward map of a tilted step in units of `s`.
///
/// With `E(v) = (1 − p v)^a (1 − q v)^(1−a)` one has `h(w) = w E(1/w)` and Lagrange inversion
/// gives `c_n = −[v^n] E(v)^(n−1) / (n − 1)`.
fn laurent(a: f64, p: f64, q: f64) -> [f64; SERIES_LEN] {
    let mut out = [0.0; SERIES_LEN];
    out[0] = 1.0;
    for n in 2..SERIES_LEN {
        let m = (n - 1) as f64;
        let bp = binomial_series(a * m, -p, n);
        let bq = binomial_series((1.0 - a) * m, -q, n);
        let coef: f64 = (0..=n).map(|k| bp[k] * bq[n - k]).sum();
        out[n] = -coef / m;
    }
    out
}

/// Coefficients of `(1 + x v)^e` up to `v^n`.
fn binomial_series(e: f64, x: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut c = 1.0;
    out.push(1.0);
    for k in 1..=n {
        c *= (e - (k - 1) as f64) / k as f64 * x;
        out.push(c);
    }
    out
}

/// `a^a (1−a)^(1−a)`, the ratio of slit length to preimage scale.
fn shape(a: f64) -> f64 {
    let b = 1.0 - a;
    let la = if a > 0.0 { a * a.ln() } else { 0.0 };
    let lb = if b > 0.0 { b * b.ln() } else { 0.0 };
    (la + lb).exp()
}

/// Principal logarithm with argument in `[0, π]` for points of the closed upper half-plane.
pub(crate) fn log_upper(z: Complex64) -> Complex64 {
    let im = if z.im > 0.0 { z.im } else { 0.0 };
    Complex64::new(z.norm().ln(), im.atan2(z.re))
}

/// Square root with argument in `[0, π/2]` for points of the closed upper half-plane.
pub(crate) fn upper_sqrt(z: Complex64) -> Complex64 {
    let im = if z.im > 0.0 { z.im } else { 0.0 };
    Complex64::new(z.re, im).sqrt()
}

/// `sqrt(z² + h²)` on the branch with nonnegative imaginary part.
fn vertical_sqrt(z: Complex64, h: f64) -> Complex64 {
    let w = (z * z + h * h).sqrt();
    if w.im < 0.0 {
        -w
    } else {
        w
    }
}

/// `ln(1 + z)` accurate for small `|z|`.
fn ln1p(z: Complex64) -> Complex64 {
    let re = 0.5 * (2.0 * z.re + z.norm_sqr()).ln_1p();
    Complex64::new(re, z.im.atan2(1.0 + z.re))
}

/// `exp(z) − 1` accurate for small `|z|`.
fn expm1(z: Complex64) -> Complex64 {
    let half = (0.5 * z.im).sin();
    let re = z.re.exp_m1() * z.im.cos() - 2.0 * half * half;
    Complex64::new(re, z.re.exp() * z.im.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64, y: f64) -> Complex64 {
        Complex64::new(x, y)
    }

    #[test]
    fn vertical_closed_forms() {
        let st = ElementaryStep::vertical(0.0, 0.5).unwrap();
        assert!((st.length() - 1.0).abs() < 1e-15);
        let w = st.forward(c(0.0, 2.0)).unwrap();
        assert!((w - c(0.0, 3f64.sqrt())).norm() < 1e-15);
        assert_eq!(st.tip_image(), 0.0);
        assert_eq!(st.base_images(), (-1.0, 1.0));
        assert!((st.inverse(c(0.0, 3f64.sqrt())) - c(0.0, 2.0)).norm() < 1e-15);
        assert!(st.inverse(c(0.0, 0.0)).norm() < 1e-15 + 1.0);
        assert!((st.inverse(c(0.0, 0.0)) - c(0.0, 1.0)).norm() < 1e-15);
        assert!(matches!(ElementaryStep::vertical(0.0, 0.0), Err(Error::InvalidCapacity(_))));
        assert!(matches!(ElementaryStep::vertical(0.0, -1.0), Err(Error::InvalidCapacity(_))));
    }

    #[test]
    fn tilted_tip_and_base_images() {
        let st = ElementaryStep::tilted(0.3, 0.3, 0.2).unwrap();
        let tip = st.tip_point();
        assert!((st.inverse(c(st.tip_image(), 0.0)) - tip).norm() < 1e-14);
        let (l, r) = st.base_images();
        assert!((st.inverse(c(l, 0.0)) - c(0.3, 0.0)).norm() < 1e-14);
        assert!((st.inverse(c(r, 0.0)) - c(0.3, 0.0)).norm() < 1e-14);
        let arg = (tip - 0.3).arg();
        assert!((arg - 0.3 * PI).abs() < 1e-14);
    }

    #[test]
    fn through_reaches_target() {
        let target = c(0.7, 0.4);
        let st = ElementaryStep::through(0.2, target).unwrap();
        assert!((st.tip_point() - target).norm() < 1e-14);
        let v = ElementaryStep::through(1.0, c(1.0, 2.0)).unwrap();
        assert!((v.dcap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn tilted_round_trip() {
        // Thin wedges between an almost flat slit and ℝ are exponentially compressed, so the
        // extreme tilts are only checked away from the slit.
        for &tilt in &[0.05, 0.2, 0.3, 0.5, 0.62, 0.8, 0.95] {
            let st = ElementaryStep::tilted(-0.4, tilt, 0.37).unwrap();
            let extreme = !(0.2..=0.8).contains(&tilt);
            for i in 0..40 {
                for j in 0..15 {
                    let z = c(-3.0 + 0.15 * i as f64, 0.01 + 0.2 * j as f64);
                    if extreme && (z + 0.4).norm() < 1.5 * st.length() {
                        continue;
                    }
                    if let Some(w) = st.forward(z) {
                        let back = st.inverse(w);
                        let cond = st.inverse_derivative(w).norm() * (w.norm() + 1.0);
                        let tol = 1e-12 + 1e-14 * cond;
                        assert!((back - z).norm() < tol, "tilt {tilt} z {z} back {back}");
                        assert!(w.im >= 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn near_tip_and_near_slit_points() {
        let st = ElementaryStep::tilted(0.0, 0.3, 1.0).unwrap();
        let tip = st.tip_point();
        let dir = tip / tip.norm();
        for &eps in &[1e-9, 1e-6, 1e-3, 0.1] {
            for k in 0..16 {
                let ang = 2.0 * PI * k as f64 / 16.0;
                let z = tip + Complex64::from_polar(eps, ang);
                if z.im <= 0.0 {
                    continue;
                }
                if let Some(w) = st.forward(z) {
                    assert!((st.inverse(w) - z).norm() < 1e-12 + 1e-6 * eps, "{z}");
                }
            }
            for &f in &[0.1, 0.5, 0.9] {
                let on = tip * f;
                for sgn in [-1.0, 1.0] {
                    let z = on + dir * Complex64::new(0.0, sgn * eps);
                    let w = st.forward(z).unwrap();
                    assert!((st.inverse(w) - z).norm() < 1e-12, "{z}");
                }
            }
        }
        assert!(st.forward(tip * 0.5).is_none());
    }

    #[test]
    fn real_branch_matches_inverse() {
        for &tilt in &[0.1, 0.5, 0.8] {
            let st = ElementaryStep::tilted(1.0, tilt, 0.25).unwrap();
            let xs: &[f64] = if tilt == 0.5 {
                &[-5.0, -0.5, 0.999, 1.001, 1.3, 7.0]
            } else {
                &[-5.0, -0.5, 1.5, 7.0]
            };
            for &x in xs {
                let (g, d) = st.forward_real(x, None).unwrap();
                let cond = 1.0 / d * (g.abs() + 1.0);
                assert!((st.inverse(c(g, 0.0)).re - x).abs() < 1e-12 + 1e-14 * cond);
                let h = 1e-6;
                let fd = (st.forward_real(x + h, None).unwrap().0
                    - st.forward_real(x - h, None).unwrap().0)
                    / (2.0 * h);
                assert!((fd - d).abs() < 1e-3 * d + 1e-8, "{x}: {fd} vs {d}");
                assert!(d > 0.0 && d <= 1.0);
            }
            assert!(matches!(st.forward_real(1.0, None), Err(Error::AmbiguousBoundary(_))));
            let (l, r) = st.base_images();
            assert_eq!(st.forward_real(1.0, Some(Side::Left)).unwrap().0, l);
            assert_eq!(st.forward_real(1.0, Some(Side::Right)).unwrap().0, r);
        }
    }

    #[test]
    fn far_field_evaluation_solves_the_map_equation() {
        for &tilt in &[0.02, 0.2, 0.45, 0.7, 0.98] {
            let st = ElementaryStep::tilted(0.0, tilt, 0.01).unwrap();
            // h(w) − ζ formed without cancellation.
            let resid = |w: Complex64, zeta: Complex64| {
                let l = ln1p(-st.p / w) * st.a + ln1p(-st.q / w) * (1.0 - st.a);
                ((w - zeta) + w * expm1(l)).norm() / zeta.norm()
            };
            for &dist in &[4.01, 6.0, 10.0, 16.0, 30.0, 100.0] {
                for k in 0..9 {
                    let ang = PI * (0.01 + 0.98 * k as f64 / 8.0);
                    let zeta = Complex64::from_polar(dist * st.length(), ang);
                    let (w, d) = st.far_field(zeta).unwrap();
                    assert!(resid(w, zeta) < 1e-15, "tilt {tilt} dist {dist}");
                    assert!((w - zeta - d).norm() < 1e-15 * zeta.norm());
                    let newton = st.solve_tilted(zeta).unwrap();
                    assert!((newton - w).norm() < 1e-14 * zeta.norm());
                }
            }
        }
    }

    #[test]
    fn displacement_is_accurate_far_away() {
        let st = ElementaryStep::tilted(0.0, 0.4, 0.5).unwrap();
        let z = c(0.0, 1e4);
        let (_, d) = st.forward_displacement(z).unwrap();
        let b = -1e4 * d.im;
        assert!((b - 0.5).abs() < 1e-7, "{b}");
    }
}
