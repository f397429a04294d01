//! Invariant suites behind `trilayer verify`.
//!
//! Each suite draws seeded random inputs, records the worst deviation and the
//! input that produced it, and compares against a fixed tolerance. The closed
//! form amplitudes are injected through [`Hooks`] so that a deliberately broken
//! implementation can be shown to fail.

use crate::error::Result;
use crate::green::{amplitude_set, green_with, probabilities, AmplitudeSet, RegionPair};
use crate::media::{Layer, SpectralPoint, TrilayerMedium};
use crate::mst::assembled_green;
use crate::packet::{
    free_propagator_closed, homogeneous_plane_wave, packet_field_normal, plane_wave_limit,
    propagator_g, FieldSettings, PropagatorSettings, ScaledPacket,
};
use crate::step::{Channel, StepContext};
use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::f64::consts::PI;

pub type AmplitudeFn = fn(&TrilayerMedium, &SpectralPoint) -> Result<AmplitudeSet>;

#[derive(Debug, Clone, Copy)]
pub struct Hooks {
    pub closed_amplitudes: AmplitudeFn,
}

impl Default for Hooks {
    fn default() -> Self {
        Self {
            closed_amplitudes: amplitude_set,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub cases: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub worst_input: String,
    /// Evaluation errors, counted as failures.
    pub errors: Vec<String>,
}

impl SuiteResult {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            cases: 0,
            worst: 0.0,
            tolerance,
            worst_input: String::new(),
            errors: Vec::new(),
        }
    }

    fn record(&mut self, deviation: f64, input: impl FnOnce() -> String) {
        self.cases += 1;
        if !(deviation <= self.worst) {
            self.worst = deviation;
            self.worst_input = input();
        }
    }

    fn fail(&mut self, e: impl std::fmt::Display) {
        self.cases += 1;
        self.errors.push(e.to_string());
    }

    pub fn passed(&self) -> bool {
        self.errors.is_empty() && self.worst <= self.tolerance
    }

    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "passed": self.passed(),
            "cases": self.cases,
            "worst": self.worst,
            "tolerance": self.tolerance,
            "worst_input": self.worst_input,
            "errors": self.errors,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub seed: u64,
    pub suites: Vec<SuiteResult>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteResult::passed)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "seed": self.seed,
            "passed": self.passed(),
            "suites": self.suites.iter().map(SuiteResult::to_json).collect::<Vec<_>>(),
        })
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Velocities in `[0.3, 3]`, spacer width in `[0.2, 2]`.
pub fn random_medium<R: Rng>(rng: &mut R) -> TrilayerMedium {
    let mut v = || rng.gen_range(0.3..3.0);
    let (v1, v2, v3) = (v(), v(), v());
    TrilayerMedium::new(v1, v2, v3, rng.gen_range(0.2..2.0)).expect("valid by construction")
}

/// A spectral point that propagates in all three layers.
pub fn random_propagating_point<R: Rng>(rng: &mut R, medium: &TrilayerMedium) -> SpectralPoint {
    let omega = rng.gen_range(0.1..10.0);
    let k_max = omega / medium.max_velocity();
    let k_par = if rng.gen_bool(0.25) {
        0.0
    } else {
        rng.gen_range(0.0..0.95) * k_max
    };
    SpectralPoint::new(omega, k_par, medium)
}

/// A position strictly inside `layer`, within three spacer widths of it.
pub fn random_position<R: Rng>(rng: &mut R, layer: Layer, medium: &TrilayerMedium) -> f64 {
    let d = medium.d;
    match layer {
        Layer::One => -rng.gen_range(1e-3..3.0) * d,
        Layer::Two => rng.gen_range(0.0..1.0) * d,
        Layer::Three => d + rng.gen_range(1e-3..3.0) * d,
    }
}

/// Random `(x, x')` for a region pair.
pub fn random_pair<R: Rng>(rng: &mut R, pair: RegionPair, medium: &TrilayerMedium) -> (f64, f64) {
    let (lx, lp) = match pair {
        RegionPair::Transmit13 => (Layer::Three, Layer::One),
        RegionPair::Transmit31 => (Layer::One, Layer::Three),
        RegionPair::Spacer21 => (Layer::Two, Layer::One),
        RegionPair::Spacer12 => (Layer::One, Layer::Two),
        RegionPair::Reflect11 => (Layer::One, Layer::One),
    };
    (
        random_position(rng, lx, medium),
        random_position(rng, lp, medium),
    )
}

fn describe(m: &TrilayerMedium, sp: &SpectralPoint) -> String {
    format!(
        "v=({}, {}, {}) d={} omega={} k_par={}",
        m.v1, m.v2, m.v3, m.d, sp.omega, sp.k_par
    )
}

fn relative(a: C64, b: C64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

pub fn unitarity(seed: u64, cases: usize) -> SuiteResult {
    let mut s = SuiteResult::new("unitarity", 1e-12);
    let mut rng = rng(seed);
    for _ in 0..cases {
        let m = random_medium(&mut rng);
        let sp = random_propagating_point(&mut rng, &m);
        match probabilities(&m, &sp) {
            Ok(p) => s.record((p.transmission + p.reflection - 1.0).abs(), || {
                describe(&m, &sp)
            }),
            Err(e) => s.fail(e),
        }
    }
    s
}

/// `G(x, x') = G(x', x)` through the mirrored region formulas.
pub fn reciprocity(seed: u64, cases: usize, hooks: &Hooks) -> SuiteResult {
    let mut s = SuiteResult::new("reciprocity", 1e-12);
    let mut rng = rng(seed ^ 0x5eed_0001);
    let pairs = [
        RegionPair::Transmit13,
        RegionPair::Spacer21,
        RegionPair::Reflect11,
    ];
    for i in 0..cases {
        let m = random_medium(&mut rng);
        let sp = random_propagating_point(&mut rng, &m);
        let pair = pairs[i % pairs.len()];
        let (x, xp) = random_pair(&mut rng, pair, &m);
        let run = || -> Result<f64> {
            let a = (hooks.closed_amplitudes)(&m, &sp)?;
            let fwd = green_with(pair, x, xp, &m, &sp, &a)?;
            let back = green_with(pair.mirrored(), xp, x, &m, &sp, &a)?;
            Ok(relative(fwd, back))
        };
        match run() {
            Ok(dev) => s.record(dev, || {
                format!("{pair:?} x={x} x'={xp} {}", describe(&m, &sp))
            }),
            Err(e) => s.fail(e),
        }
    }
    s
}

/// Multiple-scattering assembly against the closed form, all region pairs.
pub fn dual_path(seed: u64, cases: usize, hooks: &Hooks) -> SuiteResult {
    let mut s = SuiteResult::new("dual_path", 1e-12);
    let mut rng = rng(seed ^ 0x5eed_0002);
    for i in 0..cases {
        let m = random_medium(&mut rng);
        let sp = random_propagating_point(&mut rng, &m);
        let pair = RegionPair::ALL[i % RegionPair::ALL.len()];
        let (x, xp) = random_pair(&mut rng, pair, &m);
        let run = || -> Result<f64> {
            let a = (hooks.closed_amplitudes)(&m, &sp)?;
            let closed = green_with(pair, x, xp, &m, &sp, &a)?;
            Ok(relative(assembled_green(x, xp, &m, &sp)?, closed))
        };
        match run() {
            Ok(dev) => s.record(dev, || {
                format!("{pair:?} x={x} x'={xp} {}", describe(&m, &sp))
            }),
            Err(e) => s.fail(e),
        }
    }
    s
}

/// Born partial sums approach the resummed T-matrix with error exactly
/// `|T| q^n`, `q = |G0 H|`. The deviation is measured relative to that value.
pub fn t_matrix_series(seed: u64, cases: usize, terms: usize) -> SuiteResult {
    let mut s = SuiteResult::new("t_matrix_series", 1e-6);
    let mut rng = rng(seed ^ 0x5eed_0003);
    let mut done = 0;
    while done < cases {
        let ctx = StepContext::real(
            rng.gen_range(0.1..5.0),
            rng.gen_range(0.1..5.0),
            rng.gen_range(0.3..3.0),
            rng.gen_range(0.3..3.0),
        );
        let channel = Channel::ALL[done % 3];
        let run = || -> Result<Option<f64>> {
            let q = ctx.series_ratio(channel)?;
            if q >= 0.9 {
                return Ok(None);
            }
            let t = ctx.t_matrix_closed(channel)?;
            let mut worst = 0.0f64;
            for n in 1..=terms {
                let err = (ctx.t_matrix_series(channel, n)? - t).norm();
                let bound = t.norm() * q.powi(n as i32);
                // below the rounding floor only the absolute error is meaningful
                let dev = if bound > 1e-8 * t.norm() {
                    (err / bound - 1.0).abs()
                } else {
                    (err - bound - 1e-13 * t.norm()).max(0.0) / t.norm()
                };
                worst = worst.max(dev);
            }
            Ok(Some(worst))
        };
        match run() {
            Ok(None) => continue,
            Ok(Some(dev)) => s.record(dev, || format!("{channel:?} {ctx:?}")),
            Err(e) => s.fail(e),
        }
        done += 1;
    }
    s
}

/// Wide packet in a homogeneous medium against `C/2 cos(...)` over one period
/// around the packet center.
pub fn homogeneous_packet(settings: &FieldSettings) -> SuiteResult {
    let mut s = SuiteResult::new("homogeneous_packet", 1e-2);
    let m = TrilayerMedium::homogeneous(1.0, 1.0).expect("valid");
    let omega0 = PI;
    let packet = ScaledPacket::new(1.0, -5.0, 20.0, omega0).expect("valid");
    let t0 = 3.0;
    for k in 0..16 {
        let t = t0 + 2.0 * k as f64 / 16.0;
        for x in [-5.0 + t, -1.5, 0.5, 1.7] {
            match packet_field_normal(x, t, &m, &packet, settings) {
                Ok(f) => {
                    let (ep, _) = homogeneous_plane_wave(x, t, &m, omega0, 1.0);
                    s.record((f.f_plus - ep).abs(), || format!("x={x} t={t}"));
                }
                Err(e) => s.fail(e),
            }
        }
    }
    s
}

pub fn plane_wave(seed: u64, cases: usize) -> SuiteResult {
    let mut s = SuiteResult::new("plane_wave", 1e-10);
    let mut rng = rng(seed ^ 0x5eed_0004);
    for _ in 0..cases {
        let v = rng.gen_range(0.3..3.0);
        let m = TrilayerMedium::homogeneous(v, 1.0).expect("valid");
        let (x, t, w) = (
            rng.gen_range(-5.0..5.0),
            rng.gen_range(-10.0..10.0),
            rng.gen_range(0.1..10.0),
        );
        let (p, q) = plane_wave_limit(x, t, &m, w, 1.0);
        let (ep, eq) = homogeneous_plane_wave(x, t, &m, w, 1.0);
        s.record((p - ep).abs().max((q - eq).abs()), || {
            format!("v={v} x={x} t={t} omega0={w}")
        });
    }
    s
}

/// Homogeneous propagator against the closed-form step, at least 0.1 light
/// cone units from the discontinuity, plus exact oddness in `tau`.
pub fn free_propagator(settings: &PropagatorSettings) -> Vec<SuiteResult> {
    let mut step = SuiteResult::new("free_propagator", 1e-3);
    let mut odd = SuiteResult::new("propagator_antisymmetry", 1e-13);
    for v in [0.5, 1.0, 2.0] {
        let m = TrilayerMedium::homogeneous(v, 1.0).expect("valid");
        for (x, xp) in [(-1.0f64, -2.0f64), (-0.5, -3.0), (2.5, -1.0)] {
            let cone = (x - xp).abs() / v;
            for tau in [
                0.0,
                0.3 * cone,
                cone - 0.1,
                cone + 0.1,
                1.5 * cone,
                3.0 * cone,
            ] {
                let run = || -> Result<(f64, f64)> {
                    let p = propagator_g(x, xp, tau, &m, 0.0, settings)?.g;
                    let n = propagator_g(x, xp, -tau, &m, 0.0, settings)?.g;
                    Ok((p, n))
                };
                match run() {
                    Ok((p, n)) => {
                        let exact = free_propagator_closed(x, xp, tau, v);
                        step.record((p - exact).abs(), || {
                            format!("v={v} x={x} x'={xp} tau={tau}")
                        });
                        odd.record((p + n).abs(), || format!("v={v} x={x} x'={xp} tau={tau}"));
                    }
                    Err(e) => {
                        step.fail(&e);
                        odd.fail(e);
                    }
                }
            }
        }
    }
    vec![step, odd]
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    pub seed: u64,
    pub unitarity_cases: usize,
    pub dual_path_cases: usize,
    pub series_cases: usize,
    pub series_terms: usize,
    pub field: FieldSettings,
    pub propagator: PropagatorSettings,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            unitarity_cases: 10_000,
            dual_path_cases: 1_000,
            series_cases: 100,
            series_terms: 30,
            field: FieldSettings::default(),
            propagator: PropagatorSettings::default(),
        }
    }
}

pub fn run_all(options: &VerifyOptions, hooks: &Hooks) -> Report {
    let seed = options.seed;
    let mut suites = vec![
        unitarity(seed, options.unitarity_cases),
        reciprocity(seed, options.dual_path_cases, hooks),
        dual_path(seed, options.dual_path_cases, hooks),
        t_matrix_series(seed, options.series_cases, options.series_terms),
        homogeneous_packet(&options.field),
        plane_wave(seed, 200),
    ];
    suites.extend(free_propagator(&options.propagator));
    Report { seed, suites }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flipped_r(m: &TrilayerMedium, sp: &SpectralPoint) -> Result<AmplitudeSet> {
        let mut a = amplitude_set(m, sp)?;
        a.r = -a.r;
        Ok(a)
    }

    #[test]
    fn algebraic_suites_pass() {
        let hooks = Hooks::default();
        for s in [
            unitarity(7, 2000),
            reciprocity(7, 300, &hooks),
            dual_path(7, 300, &hooks),
            t_matrix_series(7, 30, 30),
            plane_wave(7, 50),
        ] {
            assert!(s.passed(), "{s:?}");
        }
    }

    #[test]
    fn sign_error_in_r_fails_dual_path() {
        let hooks = Hooks {
            closed_amplitudes: flipped_r,
        };
        let s = dual_path(3, 50, &hooks);
        assert!(!s.passed());
        assert!(s.worst_input.starts_with("Reflect11"));
    }

    #[test]
    fn report_is_reproducible() {
        let hooks = Hooks::default();
        let a = dual_path(42, 40, &hooks).to_json();
        let b = dual_path(42, 40, &hooks).to_json();
        assert_eq!(a, b);
        assert_ne!(a, dual_path(43, 40, &hooks).to_json());
    }
}
