//! Scattering at a single velocity step.
//!
//! The interface is described from its two sides: `gt` is the right (`x`
//! larger) side and `lt` the left side. Reflection and transmission enter the
//! multiple-scattering series through δ-localized effective potentials whose
//! resummed T-matrices reproduce the textbook step amplitudes.

use crate::error::{Error, Result};
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

/// Principal square root; for wave vectors on the `Im >= 0` branch the result
/// has `arg` in `[0, pi/4]`.
pub fn sqrt_branch(k: C64) -> C64 {
    k.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepContext {
    pub k_gt: C64,
    pub k_lt: C64,
    pub v_gt: f64,
    pub v_lt: f64,
}

/// Which scattering process at the interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    /// Reflection of a wave arriving from the right side.
    ReflectGt,
    /// Reflection of a wave arriving from the left side.
    ReflectLt,
    /// Transmission through the interface.
    Cross,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::ReflectGt, Channel::ReflectLt, Channel::Cross];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepAmplitudes {
    pub r_gt: C64,
    pub r_lt: C64,
    pub t: C64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectivePotentials {
    pub h_gt: C64,
    pub h_lt: C64,
    pub h_cross: C64,
}

impl EffectivePotentials {
    pub fn channel(&self, channel: Channel) -> C64 {
        match channel {
            Channel::ReflectGt => self.h_gt,
            Channel::ReflectLt => self.h_lt,
            Channel::Cross => self.h_cross,
        }
    }
}

impl StepContext {
    pub fn new(k_gt: C64, k_lt: C64, v_gt: f64, v_lt: f64) -> Self {
        Self {
            k_gt,
            k_lt,
            v_gt,
            v_lt,
        }
    }

    /// Real wave vectors, for tests and examples.
    pub fn real(k_gt: f64, k_lt: f64, v_gt: f64, v_lt: f64) -> Self {
        Self::new(C64::new(k_gt, 0.0), C64::new(k_lt, 0.0), v_gt, v_lt)
    }

    /// `sqrt(k_gt) * sqrt(k_lt)`, each root taken separately.
    fn root_product(&self) -> C64 {
        sqrt_branch(self.k_gt) * sqrt_branch(self.k_lt)
    }

    pub fn step_amplitudes(&self) -> Result<StepAmplitudes> {
        let sum = self.k_gt + self.k_lt;
        if sum == C64::new(0.0, 0.0) {
            return Err(Error::DegenerateSpectralPoint);
        }
        let r_gt = (self.k_gt - self.k_lt) / sum;
        Ok(StepAmplitudes {
            r_gt,
            r_lt: -r_gt,
            t: 2.0 * self.root_product() / sum,
        })
    }

    pub fn effective_potentials(&self) -> EffectivePotentials {
        let (kg, kl) = (self.k_gt, self.k_lt);
        let root_sum = sqrt_branch(kg) + sqrt_branch(kl);
        EffectivePotentials {
            h_gt: I * self.v_gt * self.v_gt * (kg - kl),
            h_lt: I * self.v_lt * self.v_lt * (kl - kg),
            h_cross: 4.0 * I * self.v_gt * self.v_lt * kg * kl / (root_sum * root_sum),
        }
    }

    /// Free Green function evaluated at the interface for the given channel.
    pub fn interface_green(&self, channel: Channel) -> Result<C64> {
        let zero = C64::new(0.0, 0.0);
        let denom = match channel {
            Channel::ReflectGt => 2.0 * I * self.v_gt * self.v_gt * self.k_gt,
            Channel::ReflectLt => 2.0 * I * self.v_lt * self.v_lt * self.k_lt,
            Channel::Cross => 2.0 * I * self.v_gt * self.v_lt * self.root_product(),
        };
        if denom == zero {
            let side = match channel {
                Channel::ReflectGt => "gt",
                Channel::ReflectLt => "lt",
                Channel::Cross if self.k_gt == zero => "gt",
                Channel::Cross => "lt",
            };
            return Err(Error::InterfaceCutoff { side });
        }
        Ok(1.0 / denom)
    }

    /// Resummed Born series `H / (1 - G0 H)`.
    pub fn t_matrix(&self, channel: Channel) -> Result<C64> {
        let h = self.effective_potentials().channel(channel);
        let g = self.interface_green(channel)?;
        let denom = 1.0 - g * h;
        if denom.norm() <= 1e-300 {
            return Err(Error::Pole { what: "1 - G0 H1" });
        }
        Ok(h / denom)
    }

    /// `2i v^2 k r` for reflection, `2i v_gt v_lt sqrt(k_gt) sqrt(k_lt) t` for
    /// transmission.
    pub fn t_matrix_closed(&self, channel: Channel) -> Result<C64> {
        let amps = self.step_amplitudes()?;
        Ok(match channel {
            Channel::ReflectGt => 2.0 * I * self.v_gt * self.v_gt * self.k_gt * amps.r_gt,
            Channel::ReflectLt => 2.0 * I * self.v_lt * self.v_lt * self.k_lt * amps.r_lt,
            Channel::Cross => 2.0 * I * self.v_gt * self.v_lt * self.root_product() * amps.t,
        })
    }

    /// Partial sum of the first `n_terms` Born terms `H (G0 H)^m`.
    pub fn t_matrix_series(&self, channel: Channel, n_terms: usize) -> Result<C64> {
        let h = self.effective_potentials().channel(channel);
        let g = self.interface_green(channel)?;
        let ratio = g * h;
        let mut term = h;
        let mut sum = C64::new(0.0, 0.0);
        for _ in 0..n_terms {
            sum += term;
            term *= ratio;
        }
        Ok(sum)
    }

    /// `|G0 H|`, the geometric ratio of the Born series.
    pub fn series_ratio(&self, channel: Channel) -> Result<f64> {
        let h = self.effective_potentials().channel(channel);
        Ok((self.interface_green(channel)? * h).norm())
    }
}

/// Perpendicular-polarization Fresnel form of the step amplitudes, with
/// `n_ratio = k_gt / k_lt` and `cos_* = k_perp / k` on each side.
pub fn fresnel_amplitudes(n_ratio: f64, cos_gt: f64, cos_lt: f64) -> (f64, f64) {
    let a = n_ratio * cos_gt;
    let sum = a + cos_lt;
    ((a - cos_lt) / sum, 2.0 * (a * cos_lt).sqrt() / sum)
}
