//! Closed-form retarded Green function of the trilayer at fixed `(omega, k_par)`.
//!
//! Amplitudes are flux-normalized: `t` and `r` carry `sqrt(k_perp)` factors so
//! that `|t|^2 + |r|^2 = 1` in the propagating regime without velocity ratios.
//! As a consequence the Green function is not continuous across `x = d`; the
//! two one-sided limits differ by `v2 / v3`.

use crate::error::{Error, Result};
use crate::media::{Layer, SpectralPoint, TrilayerMedium};
use crate::step::sqrt_branch;
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

/// Source/receiver placements for which closed forms exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionPair {
    /// `x' < 0`, `x > d`
    Transmit13,
    /// `x' > d`, `x < 0`
    Transmit31,
    /// `x' < 0`, `0 <= x <= d`
    Spacer21,
    /// `x < 0`, `0 <= x' <= d`
    Spacer12,
    /// `x < 0`, `x' < 0`
    Reflect11,
}

impl RegionPair {
    pub const ALL: [RegionPair; 5] = [
        RegionPair::Transmit13,
        RegionPair::Transmit31,
        RegionPair::Spacer21,
        RegionPair::Spacer12,
        RegionPair::Reflect11,
    ];

    pub fn classify(x: f64, x_prime: f64, medium: &TrilayerMedium) -> Result<Self> {
        let (lx, lp) = (medium.layer_of(x), medium.layer_of(x_prime));
        match (lx, lp) {
            (Layer::Three, Layer::One) => Ok(RegionPair::Transmit13),
            (Layer::One, Layer::Three) => Ok(RegionPair::Transmit31),
            (Layer::Two, Layer::One) => Ok(RegionPair::Spacer21),
            (Layer::One, Layer::Two) => Ok(RegionPair::Spacer12),
            (Layer::One, Layer::One) => Ok(RegionPair::Reflect11),
            _ => Err(Error::UnsupportedRegion {
                x_layer: lx.number(),
                xp_layer: lp.number(),
            }),
        }
    }

    /// The pair with source and receiver exchanged.
    pub fn mirrored(self) -> Self {
        match self {
            RegionPair::Transmit13 => RegionPair::Transmit31,
            RegionPair::Transmit31 => RegionPair::Transmit13,
            RegionPair::Spacer21 => RegionPair::Spacer12,
            RegionPair::Spacer12 => RegionPair::Spacer21,
            RegionPair::Reflect11 => RegionPair::Reflect11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeSet {
    pub t: C64,
    pub t_prime: C64,
    pub r_prime: C64,
    pub r: C64,
    pub denom: C64,
}

pub fn amplitude_set(medium: &TrilayerMedium, sp: &SpectralPoint) -> Result<AmplitudeSet> {
    let (k1, k2, k3) = (sp.k1(), sp.k2(), sp.k3());
    let e1 = (I * k2 * medium.d).exp();
    let e2 = e1 * e1;
    let denom = (k1 + k2) * (k3 + k2) - (k1 - k2) * (k3 - k2) * e2;
    if denom.norm() == 0.0 {
        return Err(Error::Pole {
            what: "trilayer denominator",
        });
    }
    let s1 = sqrt_branch(k1);
    let s2 = sqrt_branch(k2);
    let s3 = sqrt_branch(k3);
    Ok(AmplitudeSet {
        t: 4.0 * s1 * s3 * k2 * e1 / denom,
        t_prime: 2.0 * s1 * s2 * (k3 + k2) / denom,
        r_prime: 2.0 * s1 * s2 * (k2 - k3) * e2 / denom,
        r: ((k1 - k2) * (k3 + k2) - (k1 + k2) * (k3 - k2) * e2) / denom,
        denom,
    })
}

/// Evaluates the region formula for a known region pair and amplitude set.
pub fn green_with(
    pair: RegionPair,
    x: f64,
    x_prime: f64,
    medium: &TrilayerMedium,
    sp: &SpectralPoint,
    a: &AmplitudeSet,
) -> Result<C64> {
    let d = medium.d;
    let (v1, v2, v3) = (medium.v1, medium.v2, medium.v3);
    let phase = |k: C64, s: f64| (I * k * s).exp();
    Ok(match pair {
        RegionPair::Transmit13 | RegionPair::Transmit31 => {
            let k1 = sp.nonzero_kperp(Layer::One)?;
            let k3 = sp.nonzero_kperp(Layer::Three)?;
            let pref = 1.0 / (2.0 * I * v1 * v3 * sqrt_branch(k1) * sqrt_branch(k3));
            let (x3, x1) = if pair == RegionPair::Transmit13 {
                (x, x_prime)
            } else {
                (x_prime, x)
            };
            pref * phase(k3, x3 - d) * a.t * phase(k1, -x1)
        }
        RegionPair::Spacer21 => {
            let k1 = sp.nonzero_kperp(Layer::One)?;
            let k2 = sp.nonzero_kperp(Layer::Two)?;
            let pref = 1.0 / (2.0 * I * v1 * v2 * sqrt_branch(k1) * sqrt_branch(k2));
            pref * (phase(k2, x) * a.t_prime + phase(k2, -x) * a.r_prime) * phase(k1, -x_prime)
        }
        RegionPair::Spacer12 => {
            let k1 = sp.nonzero_kperp(Layer::One)?;
            let k2 = sp.nonzero_kperp(Layer::Two)?;
            let pref = 1.0 / (2.0 * I * v1 * v2 * sqrt_branch(k1) * sqrt_branch(k2));
            pref * phase(k1, -x)
                * (a.t_prime * phase(k2, x_prime) + a.r_prime * phase(k2, -x_prime))
        }
        RegionPair::Reflect11 => {
            let k1 = sp.nonzero_kperp(Layer::One)?;
            let pref = 1.0 / (2.0 * I * v1 * v1 * k1);
            pref * (phase(k1, (x - x_prime).abs()) + a.r * phase(k1, -(x + x_prime)))
        }
    })
}

pub fn green_retarded(
    x: f64,
    x_prime: f64,
    medium: &TrilayerMedium,
    sp: &SpectralPoint,
) -> Result<C64> {
    let pair = RegionPair::classify(x, x_prime, medium)?;
    let a = amplitude_set(medium, sp)?;
    green_with(pair, x, x_prime, medium, sp, &a)
}

/// `G-(x, x') = conj(G+(x, x'))` at real spectral points.
pub fn green_advanced(
    x: f64,
    x_prime: f64,
    medium: &TrilayerMedium,
    sp: &SpectralPoint,
) -> Result<C64> {
    green_retarded(x, x_prime, medium, sp).map(|g| g.conj())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probabilities {
    pub transmission: f64,
    pub reflection: f64,
}

/// `|t|^2` and `|r|^2` from the real-wave-vector formulas.
pub fn probabilities(medium: &TrilayerMedium, sp: &SpectralPoint) -> Result<Probabilities> {
    for layer in Layer::ALL {
        let k = sp.kperp(layer);
        if k.im != 0.0 {
            return Err(Error::Evanescent {
                layer: layer.number(),
            });
        }
        sp.nonzero_kperp(layer)?;
    }
    let (k1, k2, k3) = (sp.k1().re, sp.k2().re, sp.k3().re);
    let s = (k2 * medium.d).sin();
    let mix = (k1 * k1 - k2 * k2) * (k3 * k3 - k2 * k2) * s * s;
    let denom = (k1 + k3).powi(2) * k2 * k2 + mix;
    Ok(Probabilities {
        transmission: 4.0 * k1 * k2 * k2 * k3 / denom,
        reflection: (k2 * k2 * (k1 - k3).powi(2) + mix) / denom,
    })
}
