//! Two-interface multiple-scattering assembly.
//!
//! The trilayer Green function is built from free layer propagators and the
//! single-interface T-matrices of [`crate::step`], without using the closed
//! forms of [`crate::green`]. The two routes must agree.

use crate::error::{Error, Result};
use crate::green::{AmplitudeSet, RegionPair};
use crate::media::{Layer, SpectralPoint, TrilayerMedium};
use crate::step::{sqrt_branch, Channel, StepContext};
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

/// Free propagator `exp(i k |x - x'|) / (2i v^2 k)` of one layer.
pub fn free_green(
    x: f64,
    x_prime: f64,
    layer: Layer,
    medium: &TrilayerMedium,
    sp: &SpectralPoint,
) -> Result<C64> {
    let k = sp.nonzero_kperp(layer)?;
    let v = medium.velocity(layer);
    Ok((I * k * (x - x_prime).abs()).exp() / (2.0 * I * v * v * k))
}

/// Interface at `x = 0`: layer 1 on the left, layer 2 on the right.
fn near_interface(medium: &TrilayerMedium, sp: &SpectralPoint) -> StepContext {
    StepContext::new(sp.k2(), sp.k1(), medium.v2, medium.v1)
}

/// Interface at `x = d`: layer 2 on the left, layer 3 on the right.
fn far_interface(medium: &TrilayerMedium, sp: &SpectralPoint) -> StepContext {
    StepContext::new(sp.k3(), sp.k2(), medium.v3, medium.v2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeAmplitudes {
    pub t_full: C64,
    pub t_prime: C64,
    pub r_prime: C64,
    pub r: C64,
    pub denom: C64,
}

impl CompositeAmplitudes {
    /// Strips the free-propagator prefactors to recover the flux-normalized
    /// amplitudes of the closed form.
    pub fn flux_normalized(&self, medium: &TrilayerMedium, sp: &SpectralPoint) -> AmplitudeSet {
        let (s1, s2, s3) = (
            sqrt_branch(sp.k1()),
            sqrt_branch(sp.k2()),
            sqrt_branch(sp.k3()),
        );
        let (v1, v2, v3) = (medium.v1, medium.v2, medium.v3);
        let spacer = 2.0 * I * v1 * v2 * s1 * s2;
        let denom = (sp.k1() + sp.k2()) * (sp.k3() + sp.k2()) * self.denom;
        AmplitudeSet {
            t: self.t_full / (2.0 * I * v1 * v3 * s1 * s3),
            t_prime: self.t_prime / spacer,
            r_prime: self.r_prime * (I * sp.k2() * medium.d).exp() / spacer,
            r: self.r / (2.0 * I * v1 * v1 * sp.k1()),
            denom,
        }
    }
}

pub fn composite_amplitudes(
    medium: &TrilayerMedium,
    sp: &SpectralPoint,
) -> Result<CompositeAmplitudes> {
    let near = near_interface(medium, sp);
    let far = far_interface(medium, sp);
    let t0_gt = near.t_matrix(Channel::ReflectGt)?;
    let t0_lt = near.t_matrix(Channel::ReflectLt)?;
    let t0_x = near.t_matrix(Channel::Cross)?;
    let td_lt = far.t_matrix(Channel::ReflectLt)?;
    let td_x = far.t_matrix(Channel::Cross)?;

    let g_d0 = free_green(medium.d, 0.0, Layer::Two, medium, sp)?;
    let g_0d = free_green(0.0, medium.d, Layer::Two, medium, sp)?;

    let denom = 1.0 - g_d0 * t0_gt * g_0d * td_lt;
    if denom.norm() == 0.0 {
        return Err(Error::Pole {
            what: "multiple-scattering denominator",
        });
    }
    let t_prime = t0_x / denom;
    Ok(CompositeAmplitudes {
        t_full: td_x * g_d0 * t0_x / denom,
        t_prime,
        r_prime: td_lt * g_d0 * t_prime,
        r: t0_lt + t0_x * g_0d * td_lt * g_d0 * t0_x / denom,
        denom,
    })
}

/// Green function from free propagators sandwiching composite T-matrices.
pub fn assembled_green(
    x: f64,
    x_prime: f64,
    medium: &TrilayerMedium,
    sp: &SpectralPoint,
) -> Result<C64> {
    let pair = RegionPair::classify(x, x_prime, medium)?;
    let c = composite_amplitudes(medium, sp)?;
    let d = medium.d;
    let g = |a: f64, b: f64, layer: Layer| free_green(a, b, layer, medium, sp);
    use Layer::*;
    Ok(match pair {
        RegionPair::Transmit13 => g(x, d, Three)? * c.t_full * g(0.0, x_prime, One)?,
        RegionPair::Transmit31 => g(x, 0.0, One)? * c.t_full * g(d, x_prime, Three)?,
        RegionPair::Spacer21 => {
            g(x, 0.0, Two)? * c.t_prime * g(0.0, x_prime, One)?
                + g(x, d, Two)? * c.r_prime * g(0.0, x_prime, One)?
        }
        RegionPair::Spacer12 => {
            g(x, 0.0, One)? * c.t_prime * g(0.0, x_prime, Two)?
                + g(x, 0.0, One)? * c.r_prime * g(d, x_prime, Two)?
        }
        RegionPair::Reflect11 => {
            g(x, x_prime, One)? + g(x, 0.0, One)? * c.r * g(0.0, x_prime, One)?
        }
    })
}
