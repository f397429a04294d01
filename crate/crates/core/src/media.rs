//! Trilayer geometry, velocity profile, dispersion and dimensionless scaling.
//!
//! Interfaces sit at `x = 0` and `x = d`. A point exactly on an interface is
//! assigned to the spacer.

use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Layer {
    /// `x < 0`
    One,
    /// `0 <= x <= d`
    Two,
    /// `x > d`
    Three,
}

impl Layer {
    pub const ALL: [Layer; 3] = [Layer::One, Layer::Two, Layer::Three];

    /// 1-based index as used in output and error messages.
    pub fn number(self) -> u8 {
        match self {
            Layer::One => 1,
            Layer::Two => 2,
            Layer::Three => 3,
        }
    }

    fn slot(self) -> usize {
        self.number() as usize - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrilayerMedium {
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
    pub d: f64,
}

impl TrilayerMedium {
    pub fn new(v1: f64, v2: f64, v3: f64, d: f64) -> Result<Self> {
        for (name, v) in [("v1", v1), ("v2", v2), ("v3", v3)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidMedium(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidMedium(format!(
                "spacer width must be positive and finite, got {d}"
            )));
        }
        Ok(Self { v1, v2, v3, d })
    }

    /// Same velocity everywhere.
    pub fn homogeneous(v: f64, d: f64) -> Result<Self> {
        Self::new(v, v, v, d)
    }

    /// Dimensionless medium with `v2 = 1` and `d = 1`, built from the ratios
    /// `v2/v1` and `v2/v3`.
    pub fn from_ratios(v2_over_v1: f64, v2_over_v3: f64) -> Result<Self> {
        Self::new(1.0 / v2_over_v1, 1.0, 1.0 / v2_over_v3, 1.0)
    }

    pub fn velocity(&self, layer: Layer) -> f64 {
        match layer {
            Layer::One => self.v1,
            Layer::Two => self.v2,
            Layer::Three => self.v3,
        }
    }

    pub fn layer_of(&self, x: f64) -> Layer {
        if x < 0.0 {
            Layer::One
        } else if x > self.d {
            Layer::Three
        } else {
            Layer::Two
        }
    }

    /// Layer of `x` together with its phase velocity.
    pub fn velocity_at(&self, x: f64) -> (Layer, f64) {
        let layer = self.layer_of(x);
        (layer, self.velocity(layer))
    }

    pub fn is_homogeneous(&self) -> bool {
        self.v1 == self.v2 && self.v2 == self.v3
    }

    pub fn is_symmetric(&self) -> bool {
        self.v1 == self.v3
    }

    pub fn max_velocity(&self) -> f64 {
        self.v1.max(self.v2).max(self.v3)
    }

    pub fn min_velocity(&self) -> f64 {
        self.v1.min(self.v2).min(self.v3)
    }

    pub fn scale(&self) -> ScaleSystem {
        ScaleSystem::new(self)
    }

    /// This medium expressed in units of `d` and `d / v2`.
    pub fn dimensionless(&self) -> TrilayerMedium {
        TrilayerMedium {
            v1: self.v1 / self.v2,
            v2: 1.0,
            v3: self.v3 / self.v2,
            d: 1.0,
        }
    }
}

/// `sqrt(omega^2 / v^2 - k_par^2)` on the branch with `Im >= 0`.
///
/// Factored as `(omega/v - k)(omega/v + k)` so the result goes to zero
/// continuously at the cutoff `omega = v * k_par` from both sides.
pub fn perp_wavevector(omega: f64, k_par: f64, v: f64) -> C64 {
    let k = omega / v;
    let arg = (k - k_par) * (k + k_par);
    if arg >= 0.0 {
        C64::new(arg.sqrt(), 0.0)
    } else {
        C64::new(0.0, (-arg).sqrt())
    }
}

/// A frequency and lateral wave number with the perpendicular wave vectors of
/// all three layers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub omega: f64,
    pub k_par: f64,
    kperp: [C64; 3],
}

impl SpectralPoint {
    pub fn new(omega: f64, k_par: f64, medium: &TrilayerMedium) -> Self {
        let kperp = Layer::ALL.map(|l| perp_wavevector(omega, k_par, medium.velocity(l)));
        Self {
            omega,
            k_par,
            kperp,
        }
    }

    /// Normal incidence.
    pub fn normal(omega: f64, medium: &TrilayerMedium) -> Self {
        Self::new(omega, 0.0, medium)
    }

    pub fn kperp(&self, layer: Layer) -> C64 {
        self.kperp[layer.slot()]
    }

    pub fn k1(&self) -> C64 {
        self.kperp[0]
    }

    pub fn k2(&self) -> C64 {
        self.kperp[1]
    }

    pub fn k3(&self) -> C64 {
        self.kperp[2]
    }

    /// True when every perpendicular wave vector is real and nonzero.
    pub fn is_propagating(&self) -> bool {
        self.kperp.iter().all(|k| k.im == 0.0 && k.re > 0.0)
    }

    /// Fails with a cutoff error if the wave vector of `layer` is exactly zero.
    pub fn nonzero_kperp(&self, layer: Layer) -> Result<C64> {
        let k = self.kperp(layer);
        if k == C64::new(0.0, 0.0) {
            Err(Error::Cutoff {
                layer: layer.number(),
                omega: self.omega,
            })
        } else {
            Ok(k)
        }
    }
}

/// Units of the dimensionless system: length `d`, time `t_d = d / v2`.
///
/// Only `t_d` is stored; the frequency unit is its reciprocal and every
/// frequency conversion multiplies or divides by `t_d`, so `omega_d * t_d = 1`
/// holds by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleSystem {
    pub length: f64,
    pub t_d: f64,
}

/// Coordinates and packet parameters in one unit system.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Coordinates {
    pub x: f64,
    pub x_i: f64,
    pub sigma_x: f64,
    pub t: f64,
    pub omega: f64,
    pub omega0: f64,
}

impl ScaleSystem {
    pub fn new(medium: &TrilayerMedium) -> Self {
        Self {
            length: medium.d,
            t_d: medium.d / medium.v2,
        }
    }

    pub fn omega_d(&self) -> f64 {
        1.0 / self.t_d
    }

    pub fn length_to_dimensionless(&self, x: f64) -> f64 {
        x / self.length
    }

    pub fn length_from_dimensionless(&self, x: f64) -> f64 {
        x * self.length
    }

    pub fn time_to_dimensionless(&self, t: f64) -> f64 {
        t / self.t_d
    }

    pub fn time_from_dimensionless(&self, t: f64) -> f64 {
        t * self.t_d
    }

    pub fn frequency_to_dimensionless(&self, omega: f64) -> f64 {
        omega * self.t_d
    }

    pub fn frequency_from_dimensionless(&self, omega: f64) -> f64 {
        omega / self.t_d
    }

    pub fn to_dimensionless(&self, c: &Coordinates) -> Coordinates {
        Coordinates {
            x: self.length_to_dimensionless(c.x),
            x_i: self.length_to_dimensionless(c.x_i),
            sigma_x: self.length_to_dimensionless(c.sigma_x),
            t: self.time_to_dimensionless(c.t),
            omega: self.frequency_to_dimensionless(c.omega),
            omega0: self.frequency_to_dimensionless(c.omega0),
        }
    }

    pub fn from_dimensionless(&self, c: &Coordinates) -> Coordinates {
        Coordinates {
            x: self.length_from_dimensionless(c.x),
            x_i: self.length_from_dimensionless(c.x_i),
            sigma_x: self.length_from_dimensionless(c.sigma_x),
            t: self.time_from_dimensionless(c.t),
            omega: self.frequency_from_dimensionless(c.omega),
            omega0: self.frequency_from_dimensionless(c.omega0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn medium() -> TrilayerMedium {
        TrilayerMedium::new(0.5, 1.0, 0.5, 2.0).unwrap()
    }

    #[test]
    fn perp_wavevector_examples() {
        assert_eq!(perp_wavevector(2.0, 0.0, 1.0), C64::new(2.0, 0.0));
        assert_eq!(perp_wavevector(5.0, 3.0, 1.0), C64::new(4.0, 0.0));
        let k = perp_wavevector(1.0, 2.0, 1.0);
        assert_eq!(k.re, 0.0);
        assert!((k.im - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cutoff_is_continuous() {
        let v = 1.7;
        let k_par = 2.3;
        let wc = v * k_par;
        assert_eq!(perp_wavevector(wc, k_par, v), C64::new(0.0, 0.0));
        for eps in [1e-4, 1e-8, 1e-12] {
            let above = perp_wavevector(wc * (1.0 + eps), k_par, v);
            let below = perp_wavevector(wc * (1.0 - eps), k_par, v);
            let bound = 3.0 * (eps).sqrt() * k_par;
            assert!(above.norm() < bound && below.norm() < bound);
            assert_eq!(above.im, 0.0);
            assert_eq!(below.re, 0.0);
        }
    }

    #[test]
    fn layer_of_examples() {
        let m = medium();
        assert_eq!(m.layer_of(-1.0), Layer::One);
        assert_eq!(m.layer_of(m.d / 2.0), Layer::Two);
        assert_eq!(m.layer_of(0.0), Layer::Two);
        assert_eq!(m.layer_of(m.d), Layer::Two);
        assert_eq!(m.layer_of(m.d * 1.5), Layer::Three);
        assert_eq!(m.velocity_at(-1.0), (Layer::One, 0.5));
    }

    #[test]
    fn rejects_bad_media() {
        assert!(TrilayerMedium::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(TrilayerMedium::new(1.0, f64::INFINITY, 1.0, 1.0).is_err());
        assert!(TrilayerMedium::new(1.0, 1.0, -2.0, 1.0).is_err());
        assert!(TrilayerMedium::new(1.0, 1.0, 1.0, 0.0).is_err());
        assert!(TrilayerMedium::new(1.0, 1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn scaling_examples() {
        let m = TrilayerMedium::new(0.5e8, 1e8, 0.5e8, 100e-9).unwrap();
        let s = m.scale();
        assert!((s.t_d - 1e-15).abs() < 1e-30);
        let c = s.to_dimensionless(&Coordinates {
            x: m.d,
            ..Default::default()
        });
        assert_eq!(c.x, 1.0);
        assert_eq!(c.t, 0.0);
        assert!((s.omega_d() * s.t_d - 1.0).abs() <= f64::EPSILON);
    }

    #[test]
    fn dimensionless_medium() {
        let m = TrilayerMedium::new(3.0, 6.0, 2.0, 5.0)
            .unwrap()
            .dimensionless();
        assert_eq!(m, TrilayerMedium::from_ratios(2.0, 3.0).unwrap());
    }

    proptest! {
        #[test]
        fn perp_wavevector_branch_and_square(
            omega in 0.0f64..100.0, k_par in 0.0f64..100.0, v in 0.01f64..100.0
        ) {
            let k = perp_wavevector(omega, k_par, v);
            prop_assert!(k.im >= 0.0);
            let target = (omega / v).powi(2) - k_par * k_par;
            let scale = (omega / v).powi(2).max(k_par * k_par).max(f64::MIN_POSITIVE);
            prop_assert!((k * k - target).norm() <= 4.0 * f64::EPSILON * scale);
            if omega >= v * k_par {
                prop_assert_eq!(k.im, 0.0);
            }
        }

        #[test]
        fn scaling_round_trip(
            v2 in 1e-3f64..1e9, d in 1e-9f64..1e3,
            x in -1e3f64..1e3, t in -1e3f64..1e3, w in 0.0f64..1e3, s in 1e-3f64..1e3
        ) {
            let m = TrilayerMedium::new(1.0, v2, 1.0, d).unwrap();
            let sc = m.scale();
            let c = Coordinates { x: x * d, x_i: -x.abs() * d, sigma_x: s * d, t: t * sc.t_d, omega: w / sc.t_d, omega0: 2.0 * w / sc.t_d };
            let back = sc.from_dimensionless(&sc.to_dimensionless(&c));
            for (a, b) in [(c.x, back.x), (c.x_i, back.x_i), (c.sigma_x, back.sigma_x), (c.t, back.t), (c.omega, back.omega), (c.omega0, back.omega0)] {
                prop_assert!((a - b).abs() <= 1e-15 * a.abs());
            }
        }
    }
}
