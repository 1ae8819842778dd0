//! Bundled multi-slit fixtures and seeded random smooth slits.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{MultiSlit, SlitCurve};

/// Vertical segment `[x, x + ih]`.
pub fn vertical(x: f64, h: f64) -> SlitCurve {
    SlitCurve::vertical(x, h)
}

/// Mirror-image vertical slits at `±1` with height 1.
pub fn symmetric_pair() -> MultiSlit {
    MultiSlit::new(vec![vertical(-1.0, 1.0), vertical(1.0, 1.0)])
}

/// Mirror-image bent slits leaning away from each other.
pub fn symmetric_bent_pair() -> MultiSlit {
    let left = bent(-0.8, 1.0, -0.25, 24);
    let right = left.map(|z| -z.conj());
    MultiSlit::new(vec![left, right])
}

/// Two unequal slits: a short tilted one on the left, a taller curved one on the right.
pub fn asymmetric_pair() -> MultiSlit {
    MultiSlit::new(vec![bent(-1.0, 0.7, 0.2, 16), bent(0.6, 1.3, -0.15, 24)])
}

/// Three slits, the outer pair mirror images of each other about the vertical middle slit.
pub fn symmetric_triple() -> MultiSlit {
    let left = bent(-1.5, 0.9, -0.2, 16);
    let right = left.map(|z| -z.conj());
    MultiSlit::new(vec![left, vertical(0.0, 0.6), right])
}

/// Slit from `x` of height `h` whose direction turns by `bend` radians along its length.
pub fn bent(x: f64, h: f64, bend: f64, segments: usize) -> SlitCurve {
    let angles: Vec<f64> = (0..segments)
        .map(|k| FRAC_PI_2 + bend * (k as f64 + 0.5) / segments as f64)
        .collect();
    polyline_from_angles(x, h, &angles)
}

/// Polyline of height `h` from `x` whose segment `k` has direction `angles[k]`.
fn polyline_from_angles(x: f64, h: f64, angles: &[f64]) -> SlitCurve {
    let rise: f64 = angles.iter().map(|a| a.sin()).sum();
    let step = h / rise;
    let mut z = Complex64::new(x, 0.0);
    let mut pts = vec![z];
    for a in angles {
        z += Complex64::from_polar(step, *a);
        pts.push(z);
    }
    SlitCurve::new(pts)
}

/// Smooth random slit with height in `[0.5, 1.5]` from base `x`; directions stay within 0.6 rad of
/// vertical so the curve is a graph over the imaginary axis.
pub fn random_slit(rng: &mut ChaCha8Rng, x: f64, segments: usize) -> SlitCurve {
    let h = rng.gen_range(0.5..1.5);
    let a1 = rng.gen_range(-0.35..0.35);
    let a2 = rng.gen_range(-0.25..0.25);
    let ph = rng.gen_range(0.0..2.0 * PI);
    let angles: Vec<f64> = (0..segments)
        .map(|k| {
            let s = (k as f64 + 0.5) / segments as f64;
            FRAC_PI_2 + a1 * (PI * s).sin() + a2 * (2.0 * PI * s + ph).sin()
        })
        .collect();
    polyline_from_angles(x, h, &angles)
}

/// Valid random two-slit instance determined by `seed`; base points are `1` to `3` apart.
pub fn random_pair(seed: u64) -> MultiSlit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let d = rng.gen_range(1.0..3.0);
        let c = rng.gen_range(-1.0..1.0);
        let m = MultiSlit::new(vec![
            random_slit(&mut rng, c - d / 2.0, 40),
            random_slit(&mut rng, c + d / 2.0, 40),
        ]);
        if m.validate().is_ok() && m.separation() > 0.2 {
            return m;
        }
    }
}

/// Named fixtures shipped with the library.
pub fn bundled() -> Vec<(&'static str, MultiSlit)> {
    vec![
        ("vertical", MultiSlit::single(vertical(0.0, 1.0))),
        ("symmetric_pair", symmetric_pair()),
        ("symmetric_bent_pair", symmetric_bent_pair()),
        ("asymmetric_pair", asymmetric_pair()),
        ("symmetric_triple", symmetric_triple()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_valid() {
        for (name, m) in bundled() {
            assert!(m.validate().is_ok(), "{name}");
        }
        for seed in 0..20 {
            assert!(random_pair(seed).validate().is_ok());
        }
    }

    #[test]
    fn bent_slit_has_requested_height() {
        let s = bent(0.0, 1.3, 0.4, 10);
        assert!((s.tip().im - 1.3).abs() < 1e-12);
        assert_eq!(s.base(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn random_pairs_are_reproducible() {
        assert_eq!(random_pair(5), random_pair(5));
        assert_ne!(random_pair(5), random_pair(6));
    }
}
