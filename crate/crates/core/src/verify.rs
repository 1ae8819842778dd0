//! Property suite over the bundled fixtures and seeded random instances.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::capacity::{c_constant_probe_with, check_capacity_inequalities, hcap_chain, hcap_mc, SubHull};
use crate::error::Result;
use crate::fitter::{fit_bang_bang_with, fit_multi, FitConfig, FitResult};
use crate::fixtures;
use crate::forward::{solve_forward, trace_hulls, DrivingRecord};
use crate::geometry::{affine_map, multislit_hausdorff, MultiSlit, SlitCurve, WeightVector};
use crate::inverse::drive_single;
use crate::zipper::ZipperConfig;

/// Default seed of the randomized checks.
pub const DEFAULT_SEED: u64 = 20240601;

/// One property check: `value` compared against `limit` by `relation` (`"<="` or `">"`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: &'static str,
    pub limit: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

struct Checks(Vec<Check>);

impl Checks {
    fn at_most(&mut self, name: impl Into<String>, value: f64, limit: f64) {
        self.0.push(Check { name: name.into(), value, relation: "<=", limit, passed: value <= limit });
    }

    fn above(&mut self, name: impl Into<String>, value: f64, limit: f64) {
        self.0.push(Check { name: name.into(), value, relation: ">", limit, passed: value > limit });
    }
}

/// Runs the property suite; every randomized check derives its randomness from `seed`.
pub fn run_property_suite(seed: u64) -> Result<VerifyReport> {
    let mut c = Checks(Vec::new());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for h in [0.5, 1.0, 2.0] {
        let v = hcap_chain(&MultiSlit::single(SlitCurve::vertical(0.0, h)))?.value;
        c.at_most(format!("hcap_chain vertical h={h}: relative error"), (v - h * h / 2.0).abs() / (h * h / 2.0), 1e-6);
    }
    let pair = fixtures::symmetric_pair();
    let chain = hcap_chain(&pair)?.value;
    let mc = hcap_mc(&pair, 20_000, rng.gen())?;
    c.at_most("hcap chain vs Monte Carlo on symmetric_pair: deviation / stderr", (mc.value - chain).abs() / mc.stderr, 3.0);
    let (r, shift) = (rng.gen_range(0.3..3.0), rng.gen_range(-5.0..5.0));
    let scaled = hcap_chain(&affine_map(&pair, r, shift)?)?.value;
    c.at_most("hcap scaling covariance: relative error", (scaled - r * r * chain).abs() / (r * r * chain), 1e-9);

    let cfg = ZipperConfig::default();
    let mut slack = f64::INFINITY;
    let mut ratio = f64::INFINITY;
    for k in 0..10 {
        let m = fixtures::random_pair(rng.gen());
        let l = [m.slit(0).length(), m.slit(1).length()];
        let mut u = || rng.gen_range(0.0..1.0);
        let a1 = SubHull::new(vec![u() * l[0], u() * l[1]]);
        let a2 = SubHull::new(vec![u() * l[0], u() * l[1]]);
        let nested = SubHull::new(vec![a1.cuts[0] + (l[0] - a1.cuts[0]) * u(), a1.cuts[1] + (l[1] - a1.cuts[1]) * u()]);
        for (x, y) in [(&a1, &a2), (&a1, &nested)] {
            slack = slack.min(check_capacity_inequalities(&m, x, y, &cfg)?.min_slack());
        }
        if k < 3 {
            ratio = ratio.min(c_constant_probe_with(m.slit(0), m.slit(1), 20, rng.gen(), &cfg)?.min_ratio);
        }
    }
    c.above("capacity inequalities on 10 random pairs: min slack", slack, -1e-8);
    c.above("capacity constant probe on 3 random pairs: min ratio", ratio, 0.0);

    let v = drive_single(&SlitCurve::vertical(0.0, 1.0), 1000)?;
    let sup = v.driving.driving(0).values().iter().fold(0.0f64, |a, u| a.max(u.abs()));
    c.at_most("drive_single vertical: |T - 1/4|", (v.driving.t_end() - 0.25).abs(), 1e-6);
    c.at_most("drive_single vertical: sup|U|", sup, 1e-4);

    let d = DrivingRecord::constant(1.0, vec![vec![0.0; 33]], WeightVector::equal(1))?;
    let probes: Vec<Complex64> = (0..4).map(|_| Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(2.5..5.0))).collect();
    let out = solve_forward(&d, &probes)?;
    let err = probes
        .iter()
        .zip(&out.probe_outputs)
        .map(|(z, g)| {
            let w = (z * z + 4.0).sqrt();
            (g - if w.im < 0.0 { -w } else { w }).norm()
        })
        .fold(0.0, f64::max);
    c.at_most("forward solve U = 0 against sqrt(z^2 + 4t)", err, 1e-10);

    let fit_cfg = FitConfig { tol: 1e-5, ..FitConfig::default() };
    for (name, m) in fixtures::bundled() {
        let fit = match m.len() {
            1 => continue,
            2 => fit_bang_bang_with(&m, 8, &fit_cfg)?,
            _ => fit_multi(&m, fit_cfg.tol)?,
        };
        fit_checks(&mut c, name, &m, &fit)?;
        if name.starts_with("symmetric") {
            let w = fit.lambda.weights();
            c.at_most(format!("{name}: mirror weights differ"), (w[0] - w[w.len() - 1]).abs(), 2e-3);
        }
    }
    let passed = c.0.iter().all(|x| x.passed);
    Ok(VerifyReport { seed, passed, checks: c.0 })
}

fn fit_checks(c: &mut Checks, name: &str, m: &MultiSlit, fit: &FitResult) -> Result<()> {
    c.at_most(format!("{name}: capacity residual of the fit"), fit.diagnostics.residual, 1e-4);
    let p = &fit.parametrization;
    let models = p.models()?;
    let mut excess = f64::NEG_INFINITY;
    for (k, t) in p.times().iter().enumerate() {
        for tip in p.tips(&models, k) {
            excess = excess.max(tip.im - 2.0 * t.sqrt());
        }
    }
    c.at_most(format!("{name}: max(Im tip - 2 sqrt t)"), excess, 1e-6);
    let traced = trace_hulls(&fit.driving)?;
    c.at_most(format!("{name}: closed-loop Hausdorff / diameter"), multislit_hausdorff(&traced, m)? / m.diameter(), 1e-2);
    Ok(())
}
