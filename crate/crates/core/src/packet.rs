//! Time-domain solutions: the space-time propagator and the field of an
//! initial Gaussian wave packet launched from layer 1.
//!
//! The packet field is computed at fixed lateral wave vector (infinitely wide
//! lateral profile). For normal incidence the dimensionless region formulas are
//! evaluated directly; the oblique path goes through the closed-form Green
//! function in whatever units the medium is given in. Both reduce to the same
//! integrand at `k_par = 0`.

use crate::error::{Error, Result};
use crate::green::{amplitude_set, green_retarded, green_with, RegionPair};
use crate::media::{perp_wavevector, Layer, SpectralPoint, TrilayerMedium};
use crate::quadrature::{OscillatorySpec, PanelRule, QuadratureSettings};
use crate::C64;
use std::f64::consts::PI;

const I: C64 = C64::new(0.0, 1.0);

fn sqrt_2pi() -> f64 {
    (2.0 * PI).sqrt()
}

/// Initial packet `C exp(-(x - x_i)^2 / 2 sigma_x^2) cos(k0 . r)` at rest
/// (zero initial time derivative), in the units of the medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncidentPacket {
    pub c: f64,
    pub x_i: f64,
    pub sigma_x: f64,
    pub k0_x: f64,
    pub k0_par: f64,
}

impl IncidentPacket {
    pub fn new(c: f64, x_i: f64, sigma_x: f64, k0_x: f64, k0_par: f64) -> Result<Self> {
        let p = Self {
            c,
            x_i,
            sigma_x,
            k0_x,
            k0_par,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.x_i < 0.0) || !self.x_i.is_finite() {
            return Err(Error::InvalidPacket(format!(
                "x_i must be negative, got {}",
                self.x_i
            )));
        }
        if !(self.sigma_x > 0.0 && self.sigma_x.is_finite()) {
            return Err(Error::InvalidPacket(format!(
                "sigma_x must be positive, got {}",
                self.sigma_x
            )));
        }
        if !(self.k0_x > 0.0 && self.k0_x.is_finite()) {
            return Err(Error::InvalidPacket(format!(
                "k0_x must be positive, got {}",
                self.k0_x
            )));
        }
        if !(self.k0_par >= 0.0 && self.k0_par.is_finite()) || !self.c.is_finite() {
            return Err(Error::InvalidPacket(format!("{self:?}")));
        }
        Ok(())
    }

    /// Carrier frequency `v1 |k0|`.
    pub fn omega0(&self, medium: &TrilayerMedium) -> f64 {
        medium.v1 * self.k0_x.hypot(self.k0_par)
    }

    /// Normal-incidence parameters in units of `d` and `d / v2`.
    pub fn to_scaled(&self, medium: &TrilayerMedium) -> ScaledPacket {
        let s = medium.scale();
        ScaledPacket {
            c: self.c,
            x_i: s.length_to_dimensionless(self.x_i),
            sigma_x: s.length_to_dimensionless(self.sigma_x),
            omega0: s.frequency_to_dimensionless(self.omega0(medium)),
        }
    }
}

/// Normal-incidence packet in dimensionless units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledPacket {
    pub c: f64,
    pub x_i: f64,
    pub sigma_x: f64,
    pub omega0: f64,
}

impl ScaledPacket {
    pub fn new(c: f64, x_i: f64, sigma_x: f64, omega0: f64) -> Result<Self> {
        let p = Self {
            c,
            x_i,
            sigma_x,
            omega0,
        };
        if !(x_i < 0.0 && x_i.is_finite())
            || !(sigma_x > 0.0 && sigma_x.is_finite())
            || !(omega0 > 0.0 && omega0.is_finite())
            || !c.is_finite()
        {
            return Err(Error::InvalidPacket(format!("{p:?}")));
        }
        Ok(p)
    }

    /// The same packet in the units of a dimensionless medium (`v2 = d = 1`).
    pub fn to_incident(&self, medium: &TrilayerMedium) -> IncidentPacket {
        let v1 = medium.v1 / medium.v2;
        IncidentPacket {
            c: self.c,
            x_i: self.x_i,
            sigma_x: self.sigma_x,
            k0_x: self.omega0 / v1,
            k0_par: 0.0,
        }
    }

    /// `(v2^2 / v1^2) sigma^2 / 2`, which controls the weight of the
    /// backward-moving component.
    pub fn dispersion_factor(&self, medium: &TrilayerMedium) -> f64 {
        let a = medium.v2 / medium.v1;
        a * a * self.sigma_x * self.sigma_x / 2.0
    }
}

/// How the frequency measure is weighted in the normal-incidence integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OmegaWeight {
    /// `d omega` only; the `omega` of the physical measure is absorbed into
    /// the region amplitudes (`G ~ 1 / omega`). Reproduces the homogeneous
    /// limit `C/2 cos(...)`.
    #[default]
    Absorbed,
    /// Compatibility mode: an extra factor `omega` on top of `Absorbed`.
    Explicit,
}

/// Which parts of the solution are kept. Everything is on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Terms {
    /// Components built on the `+omega0` spectral envelope.
    pub forward: bool,
    /// Components built on the `-omega0` envelope.
    pub backward: bool,
    /// Direct wave in layer 1.
    pub incident: bool,
    /// Reflected wave in layer 1.
    pub reflected: bool,
}

impl Default for Terms {
    fn default() -> Self {
        Self {
            forward: true,
            backward: true,
            incident: true,
            reflected: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldSettings {
    pub quadrature: QuadratureSettings,
    pub weight: OmegaWeight,
    pub terms: Terms,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub x: f64,
    pub t: f64,
    pub f_plus: f64,
    pub f_minus: f64,
    pub f: f64,
    /// Quadrature error estimate for `(f_plus, f_minus)` combined.
    pub error: f64,
    pub shortfall: bool,
}

/// Dimensionless `(v2/v1, v2/v3)` of a medium.
fn ratios(medium: &TrilayerMedium) -> (f64, f64) {
    (medium.v2 / medium.v1, medium.v2 / medium.v3)
}

/// Phase-rate bound `(|x| + |x_i|) max(v2/v_i) + |t| + 2` in dimensionless
/// units, counting the spacer round trip.
pub fn phase_rate_bound(x_abs: f64, x_i: f64, t_abs: f64, medium: &TrilayerMedium) -> f64 {
    let (a, b) = ratios(medium);
    (x_abs + x_i.abs()) * a.max(b).max(1.0) + t_abs + 2.0
}

/// Per-node spectral factors shared by every sample of a grid.
struct NormalPlan {
    rule: PanelRule,
    /// Envelope times source phase for `+omega0` and `-omega0`.
    fwd: Vec<C64>,
    bwd: Vec<C64>,
    inv_d: Vec<C64>,
    r: Vec<C64>,
    weight: Vec<f64>,
    a: f64,
    b: f64,
    sigma: f64,
    c: f64,
    terms: Terms,
}

impl NormalPlan {
    fn new(
        medium: &TrilayerMedium,
        packet: &ScaledPacket,
        max_phase_rate: f64,
        settings: &FieldSettings,
    ) -> Result<Self> {
        let (a, b) = ratios(medium);
        let spec = OscillatorySpec {
            omega_min: 0.0,
            center: packet.omega0,
            width: 1.0 / (a * packet.sigma_x),
            max_phase_rate,
        };
        let rule = PanelRule::new(&spec, &settings.quadrature)?;
        let n = rule.nodes().len();
        let (mut fwd, mut bwd, mut inv_d, mut r, mut weight) = (
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        );
        let s2 = packet.sigma_x * packet.sigma_x;
        for &w in rule.nodes() {
            let envelope = |w0: f64| {
                let g = (-(a * a) * (w0 - w) * (w0 - w) * s2 / 2.0).exp();
                C64::from_polar(g, a * (w0 - w) * packet.x_i)
            };
            fwd.push(envelope(packet.omega0));
            bwd.push(envelope(-packet.omega0));
            let e2 = C64::from_polar(1.0, 2.0 * w);
            let dd = (a + 1.0) * (b + 1.0) - (a - 1.0) * (b - 1.0) * e2;
            let inv = 1.0 / dd;
            inv_d.push(inv);
            r.push(((a - 1.0) * (b + 1.0) - (a + 1.0) * (b - 1.0) * e2) * inv);
            weight.push(match settings.weight {
                OmegaWeight::Absorbed => 1.0,
                OmegaWeight::Explicit => w,
            });
        }
        Ok(Self {
            rule,
            fwd,
            bwd,
            inv_d,
            r,
            weight,
            a,
            b,
            sigma: packet.sigma_x,
            c: packet.c,
            terms: settings.terms,
        })
    }

    /// Spatial part of the region amplitude at node `j` (everything except the
    /// envelope and source phase).
    fn spatial(&self, x: f64, j: usize) -> C64 {
        let w = self.rule.nodes()[j];
        let (a, b, s) = (self.a, self.b, self.sigma);
        if x > 1.0 {
            -2.0 * I * a * b * s * C64::from_polar(1.0, w + b * w * (x - 1.0)) * self.inv_d[j]
        } else if x >= 0.0 {
            let inner = C64::from_polar(b + 1.0, w * x) + C64::from_polar(1.0 - b, 2.0 * w - w * x);
            -I * a * s * inner * self.inv_d[j]
        } else {
            let mut inner = C64::new(0.0, 0.0);
            if self.terms.incident {
                inner += C64::from_polar(1.0, a * w * x);
            }
            if self.terms.reflected {
                inner += self.r[j] * C64::from_polar(1.0, -a * w * x);
            }
            -0.5 * I * a * s * inner
        }
    }

    /// `phi(x; w_j; +omega0)` and `phi(x; w_j; -omega0)` for every node.
    fn column(&self, x: f64) -> Vec<(C64, C64)> {
        (0..self.rule.nodes().len())
            .map(|j| {
                let s = self.spatial(x, j);
                let p = if self.terms.forward {
                    self.fwd[j] * s
                } else {
                    C64::new(0.0, 0.0)
                };
                let m = if self.terms.backward {
                    self.bwd[j] * s
                } else {
                    C64::new(0.0, 0.0)
                };
                (p * self.weight[j], m * self.weight[j])
            })
            .collect()
    }

    fn sample(&self, x: f64, t: f64, column: &[(C64, C64)], tol: f64) -> Result<FieldSample> {
        let values: Vec<C64> = self
            .rule
            .nodes()
            .iter()
            .zip(column)
            .map(|(&w, &(p, m))| {
                let e = C64::from_polar(1.0, -w * t);
                let ec = e.conj();
                C64::new((e * p + ec * m).im, (ec * p + e * m).im)
            })
            .collect();
        let est = self.rule.reduce(&values, tol)?;
        let scale = -self.c / sqrt_2pi();
        let f_plus = scale * est.value.re;
        let f_minus = scale * est.value.im;
        Ok(FieldSample {
            x,
            t,
            f_plus,
            f_minus,
            f: f_plus + f_minus,
            error: scale.abs() * est.error,
            shortfall: est.shortfall,
        })
    }
}

fn check_source(packet: &ScaledPacket) -> Result<()> {
    if packet.x_i < 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidPacket("source must start in layer 1".into()))
    }
}

/// Normal-incidence field at one dimensionless point `(x, t)`.
pub fn packet_field_normal(
    x: f64,
    t: f64,
    medium: &TrilayerMedium,
    packet: &ScaledPacket,
    settings: &FieldSettings,
) -> Result<FieldSample> {
    check_source(packet)?;
    let rate = phase_rate_bound(x.abs(), packet.x_i, t.abs(), medium);
    let plan = NormalPlan::new(medium, packet, rate, settings)?;
    let column = plan.column(x);
    plan.sample(x, t, &column, settings.quadrature.tol)
}

/// A sampled field on a rectangular `(x, t)` lattice, `x` major.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    pub samples: Vec<FieldSample>,
    /// Free-form provenance written into output headers.
    pub metadata: Vec<(String, String)>,
}

impl FieldGrid {
    pub fn at(&self, ix: usize, it: usize) -> &FieldSample {
        &self.samples[ix * self.t.len() + it]
    }

    pub fn worst_error(&self) -> f64 {
        self.samples.iter().map(|s| s.error).fold(0.0, f64::max)
    }

    pub fn any_shortfall(&self) -> bool {
        self.samples.iter().any(|s| s.shortfall)
    }
}

/// Inclusive uniform axis with `steps >= 2` points.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![lo];
    }
    let h = (hi - lo) / (steps - 1) as f64;
    (0..steps)
        .map(|i| {
            if i + 1 == steps {
                hi
            } else {
                lo + h * i as f64
            }
        })
        .collect()
}

/// Normal-incidence field over a grid. All samples share one node layout, sized
/// for the largest `|x|` and `|t|` on the grid.
pub fn packet_field_grid(
    xs: &[f64],
    ts: &[f64],
    medium: &TrilayerMedium,
    packet: &ScaledPacket,
    settings: &FieldSettings,
) -> Result<FieldGrid> {
    check_source(packet)?;
    if xs.is_empty() || ts.is_empty() {
        return Err(Error::InvalidGrid("empty axis".into()));
    }
    let x_max = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let t_max = ts.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let rate = phase_rate_bound(x_max, packet.x_i, t_max, medium);
    let plan = NormalPlan::new(medium, packet, rate, settings)?;
    let exec = settings.quadrature.execution;
    let tol = settings.quadrature.tol;
    let columns: Vec<Vec<(C64, C64)>> = exec.map(xs, |&x| plan.column(x));
    let nt = ts.len();
    let samples = exec.map_range(xs.len() * nt, |idx| {
        let (ix, it) = (idx / nt, idx % nt);
        plan.sample(xs[ix], ts[it], &columns[ix], tol)
    });
    let samples = samples.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(FieldGrid {
        x: xs.to_vec(),
        t: ts.to_vec(),
        samples,
        metadata: Vec::new(),
    })
}

/// `sigma_x`-free amplitude at `omega = omega0` scaled by `v1 / (v2 sigma)`,
/// the weight the Gaussian envelope integrates to as `sigma -> infinity`.
pub fn plane_wave_limit(
    x: f64,
    t: f64,
    medium: &TrilayerMedium,
    omega0: f64,
    c: f64,
) -> (f64, f64) {
    let (a, b) = ratios(medium);
    let w = omega0;
    let e2 = C64::from_polar(1.0, 2.0 * w);
    let dd = (a + 1.0) * (b + 1.0) - (a - 1.0) * (b - 1.0) * e2;
    let phi = if x > 1.0 {
        -2.0 * I * a * b * C64::from_polar(1.0, w + b * w * (x - 1.0)) / dd
    } else if x >= 0.0 {
        -I * a * (C64::from_polar(b + 1.0, w * x) + C64::from_polar(1.0 - b, 2.0 * w - w * x)) / dd
    } else {
        let r = ((a - 1.0) * (b + 1.0) - (a + 1.0) * (b - 1.0) * e2) / dd;
        -0.5 * I * a * (C64::from_polar(1.0, a * w * x) + r * C64::from_polar(1.0, -a * w * x))
    } / a;
    let f_plus = -c * (C64::from_polar(1.0, -w * t) * phi).im;
    let f_minus = -c * (C64::from_polar(1.0, w * t) * phi).im;
    (f_plus, f_minus)
}

/// `(C/2) cos(omega0 x v2/v1 -/+ omega0 t)`: the plane-wave field of a
/// homogeneous medium in dimensionless units.
pub fn homogeneous_plane_wave(
    x: f64,
    t: f64,
    medium: &TrilayerMedium,
    omega0: f64,
    c: f64,
) -> (f64, f64) {
    let k = omega0 * medium.v2 / medium.v1;
    (
        0.5 * c * (k * x - omega0 * t).cos(),
        0.5 * c * (k * x + omega0 * t).cos(),
    )
}

/// Green function used under the packet integral. Identical to
/// [`green_retarded`] except that in layer 1 the direct term is taken as the
/// right-moving `exp(i k1 (x - x_i))`, which is what integrating the source
/// profile against `exp(-i k1 x')` produces.
pub fn packet_kernel(x: f64, x_i: f64, medium: &TrilayerMedium, sp: &SpectralPoint) -> Result<C64> {
    let pair = RegionPair::classify(x, x_i, medium)?;
    let amps = amplitude_set(medium, sp)?;
    if pair == RegionPair::Reflect11 {
        let k1 = sp.nonzero_kperp(Layer::One)?;
        let pref = 1.0 / (2.0 * I * medium.v1 * medium.v1 * k1);
        return Ok(pref * ((I * k1 * (x - x_i)).exp() + amps.r * (-I * k1 * (x + x_i)).exp()));
    }
    green_with(pair, x, x_i, medium, sp, &amps)
}

/// Field of an obliquely incident packet at fixed lateral wave vector, in the
/// units of `medium`. `rho_dot_kpar` is the lateral phase `k0_par . rho`.
pub fn packet_field_oblique(
    x: f64,
    rho_dot_kpar: f64,
    t: f64,
    medium: &TrilayerMedium,
    packet: &IncidentPacket,
    settings: &FieldSettings,
) -> Result<FieldSample> {
    packet.validate()?;
    let v1 = medium.v1;
    let kpar = packet.k0_par;
    let floor = v1 * kpar;
    let omega0 = packet.omega0(medium);
    let slowest = 1.0 / medium.min_velocity();
    let spec = OscillatorySpec {
        omega_min: floor,
        center: omega0,
        width: v1 / packet.sigma_x,
        max_phase_rate: (x.abs() + packet.x_i.abs()) * slowest * medium.v2 / medium.v2
            + t.abs()
            + 2.0 * medium.d / medium.v2,
    };
    let rule = PanelRule::new(&spec, &settings.quadrature)?;
    let s2 = packet.sigma_x * packet.sigma_x;
    let lateral = packet.k0_x * packet.x_i + rho_dot_kpar;
    let values = rule
        .nodes()
        .iter()
        .map(|&w| {
            let sp = SpectralPoint::new(w, kpar, medium);
            let k1 = perp_wavevector(w, kpar, v1).re;
            let g = packet_kernel(x, packet.x_i, medium, &sp)?;
            let env = |k0: f64| packet.sigma_x * (-(k1 - k0) * (k1 - k0) * s2 / 2.0).exp();
            let weight = match settings.weight {
                OmegaWeight::Absorbed => w,
                OmegaWeight::Explicit => w * w,
            };
            let p = if settings.terms.forward {
                env(packet.k0_x) * g * C64::from_polar(1.0, lateral) * weight
            } else {
                C64::new(0.0, 0.0)
            };
            let m = if settings.terms.backward {
                env(-packet.k0_x) * g * C64::from_polar(1.0, -lateral) * weight
            } else {
                C64::new(0.0, 0.0)
            };
            let e = C64::from_polar(1.0, -w * t);
            let ec = e.conj();
            Ok(C64::new((e * p + ec * m).im, (ec * p + e * m).im))
        })
        .collect::<Result<Vec<_>>>()?;
    let est = rule.reduce(&values, settings.quadrature.tol)?;
    let scale = -packet.c / sqrt_2pi();
    let (f_plus, f_minus) = (scale * est.value.re, scale * est.value.im);
    Ok(FieldSample {
        x,
        t,
        f_plus,
        f_minus,
        f: f_plus + f_minus,
        error: scale.abs() * est.error,
        shortfall: est.shortfall,
    })
}

/// Ratio of the integrated magnitudes of the `-omega0` and `+omega0`
/// components at `x`. Shrinks as the dispersion factor grows.
pub fn backward_fraction(
    x: f64,
    medium: &TrilayerMedium,
    packet: &ScaledPacket,
    settings: &FieldSettings,
) -> Result<f64> {
    check_source(packet)?;
    let rate = phase_rate_bound(x.abs(), packet.x_i, 0.0, medium);
    let plan = NormalPlan::new(medium, packet, rate, settings)?;
    let column = plan.column(x);
    let fwd: Vec<C64> = column
        .iter()
        .map(|(p, _)| C64::new(p.norm(), 0.0))
        .collect();
    let bwd: Vec<C64> = column
        .iter()
        .map(|(_, m)| C64::new(m.norm(), 0.0))
        .collect();
    let tol = settings.quadrature.tol;
    let f = plan.rule.reduce(&fwd, tol)?.value.re;
    let b = plan.rule.reduce(&bwd, tol)?.value.re;
    Ok(b / f)
}

/// Regularized propagator settings. The frequency integral of the propagator
/// does not converge absolutely; it is evaluated with a Gaussian frequency
/// window of width `bandwidth`, which smooths the light-cone step over a time
/// of order `1 / bandwidth`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorSettings {
    pub bandwidth: f64,
    pub quadrature: QuadratureSettings,
}

impl Default for PropagatorSettings {
    fn default() -> Self {
        Self {
            bandwidth: 60.0,
            quadrature: QuadratureSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorValue {
    pub g: f64,
    pub error: f64,
    pub shortfall: bool,
}

/// `(2/pi) \int sin(omega tau) Im G+(x, x'; omega, k_par) d omega` from the
/// floor `omega = v1 k_par`.
pub fn propagator_g(
    x: f64,
    x_prime: f64,
    tau: f64,
    medium: &TrilayerMedium,
    k_par: f64,
    settings: &PropagatorSettings,
) -> Result<PropagatorValue> {
    RegionPair::classify(x, x_prime, medium)?;
    let floor = medium.v1 * k_par;
    let spec = OscillatorySpec {
        omega_min: floor,
        center: floor,
        width: settings.bandwidth,
        max_phase_rate: tau.abs()
            + (x.abs() + x_prime.abs()) / medium.min_velocity()
            + 2.0 * medium.d / medium.v2,
    };
    let rule = PanelRule::new(&spec, &settings.quadrature)?;
    let bw2 = settings.bandwidth * settings.bandwidth;
    let values = rule
        .nodes()
        .iter()
        .map(|&w| {
            let sp = SpectralPoint::new(w, k_par, medium);
            let g = green_retarded(x, x_prime, medium, &sp)?;
            let window = (-(w - floor) * (w - floor) / (2.0 * bw2)).exp();
            Ok(C64::new((w * tau).sin() * g.im * window, 0.0))
        })
        .collect::<Result<Vec<_>>>()?;
    let est = rule.reduce(&values, settings.quadrature.tol)?;
    let scale = 2.0 / PI;
    Ok(PropagatorValue {
        g: scale * est.value.re,
        error: scale * est.error,
        shortfall: est.shortfall,
    })
}

/// `-(1 / 2v) theta(v |t| - |x - x'|) sign(t)`.
pub fn free_propagator_closed(x: f64, x_prime: f64, t: f64, v: f64) -> f64 {
    if t == 0.0 || v * t.abs() < (x - x_prime).abs() {
        0.0
    } else {
        -t.signum() / (2.0 * v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    /// `(x, t, normalized residual)` at every admissible interior point.
    pub points: Vec<(f64, f64, f64)>,
    pub max_abs: f64,
    /// Grid spacing exceeds `1 / (8 omega0)`.
    pub too_coarse: bool,
}

/// Fourth-order finite-difference residual `f_tt - v(x)^2 f_xx` of a
/// dimensionless field grid, normalized by `max|f| omega0^2`. Only points whose
/// five-point stencils stay inside one layer and inside the grid are used.
pub fn wave_equation_residual(
    grid: &FieldGrid,
    medium: &TrilayerMedium,
    omega0: f64,
) -> Result<Residual> {
    let (nx, nt) = (grid.x.len(), grid.t.len());
    if nx < 5 || nt < 5 {
        return Err(Error::InvalidGrid("need at least 5 points per axis".into()));
    }
    let hx = (grid.x[nx - 1] - grid.x[0]) / (nx - 1) as f64;
    let ht = (grid.t[nt - 1] - grid.t[0]) / (nt - 1) as f64;
    let uniform = |axis: &[f64], h: f64| {
        axis.windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1.0))
    };
    if !(hx > 0.0 && ht > 0.0 && uniform(&grid.x, hx) && uniform(&grid.t, ht)) {
        return Err(Error::InvalidGrid(
            "axes must be uniform and increasing".into(),
        ));
    }
    let dimless = medium.dimensionless();
    let peak = grid.samples.iter().map(|s| s.f.abs()).fold(0.0, f64::max);
    let norm = peak * omega0 * omega0;
    let f = |ix: usize, it: usize| grid.at(ix, it).f;
    let d2 = |m2: f64, m1: f64, c: f64, p1: f64, p2: f64, h: f64| {
        (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h)
    };
    let mut points = Vec::new();
    let mut max_abs = 0.0f64;
    for ix in 2..nx - 2 {
        let layer = dimless.layer_of(grid.x[ix]);
        let same_layer = (ix - 2..=ix + 2).all(|k| {
            let l = dimless.layer_of(grid.x[k]);
            // stencils touching an interface point are excluded
            l == layer && grid.x[k] != 0.0 && grid.x[k] != dimless.d
        });
        if !same_layer {
            continue;
        }
        let v = dimless.velocity(layer);
        for it in 2..nt - 2 {
            let ftt = d2(
                f(ix, it - 2),
                f(ix, it - 1),
                f(ix, it),
                f(ix, it + 1),
                f(ix, it + 2),
                ht,
            );
            let fxx = d2(
                f(ix - 2, it),
                f(ix - 1, it),
                f(ix, it),
                f(ix + 1, it),
                f(ix + 2, it),
                hx,
            );
            let r = if norm > 0.0 {
                (ftt - v * v * fxx) / norm
            } else {
                0.0
            };
            max_abs = max_abs.max(r.abs());
            points.push((grid.x[ix], grid.t[it], r));
        }
    }
    Ok(Residual {
        points,
        max_abs,
        too_coarse: hx.max(ht) > 1.0 / (8.0 * omega0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slow_cladding() -> TrilayerMedium {
        TrilayerMedium::from_ratios(2.0, 2.0).unwrap()
    }

    #[test]
    fn free_propagator_examples() {
        assert_eq!(free_propagator_closed(1.0, 0.0, 2.0, 1.0), -0.5);
        assert_eq!(free_propagator_closed(1.0, 0.0, -2.0, 1.0), 0.5);
        assert_eq!(free_propagator_closed(1.0, 0.0, 0.5, 1.0), 0.0);
        assert_eq!(free_propagator_closed(0.0, 3.0, 2.0, 2.0), -0.25);
    }

    #[test]
    fn propagator_examples() {
        let m = TrilayerMedium::homogeneous(1.0, 1.0).unwrap();
        let s = PropagatorSettings::default();
        assert_eq!(propagator_g(-1.0, -2.0, 0.0, &m, 0.0, &s).unwrap().g, 0.0);
        let g = propagator_g(-1.0, -2.0, 2.0, &m, 0.0, &s).unwrap();
        assert!((g.g + 0.5).abs() < 1e-3, "{g:?}");
        let g = propagator_g(-1.0, -2.0, 0.5, &m, 0.0, &s).unwrap();
        assert!(g.g.abs() < 1e-3);
    }

    #[test]
    fn propagator_is_odd_in_tau() {
        let m = TrilayerMedium::new(0.5, 1.0, 0.7, 1.0).unwrap();
        let s = PropagatorSettings::default();
        for tau in [0.3, 1.7, 4.0] {
            let p = propagator_g(2.0, -1.0, tau, &m, 0.0, &s).unwrap().g;
            let n = propagator_g(2.0, -1.0, -tau, &m, 0.0, &s).unwrap().g;
            assert!((p + n).abs() <= 1e-13);
        }
    }

    #[test]
    fn plane_wave_homogeneous() {
        let m = TrilayerMedium::homogeneous(1.0, 1.0).unwrap();
        for &(x, t) in &[(-2.0, 0.3), (0.4, 1.1), (3.0, 7.0)] {
            let (p, q) = plane_wave_limit(x, t, &m, 2.5, 1.0);
            let (ep, eq) = homogeneous_plane_wave(x, t, &m, 2.5, 1.0);
            assert!((p - ep).abs() < 1e-12 && (q - eq).abs() < 1e-12);
        }
    }

    #[test]
    fn plane_wave_bounded() {
        let m = slow_cladding();
        for x in [-3.0, 0.5, 1.5] {
            let (bp, _) = plane_wave_limit(x, 0.0, &m, 1.3, 1.0);
            let (bq, _) = plane_wave_limit(x, PI / (2.0 * 1.3), &m, 1.3, 1.0);
            let amp = bp.hypot(bq);
            for k in 0..20 {
                let (p, q) = plane_wave_limit(x, 0.37 * k as f64, &m, 1.3, 1.0);
                assert!(p.abs() <= amp + 1e-12 && q.abs() <= amp + 1e-12);
            }
        }
    }

    #[test]
    fn source_must_be_in_layer_one() {
        assert!(ScaledPacket::new(1.0, 0.5, 1.0, 1.0).is_err());
        assert!(IncidentPacket::new(1.0, -1.0, 1.0, -2.0, 0.0).is_err());
        assert!(IncidentPacket::new(1.0, -1.0, 0.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn oblique_matches_normal_at_zero_kpar() {
        let m = slow_cladding();
        let packet = ScaledPacket::new(1.0, -5.0, 1.0, PI).unwrap();
        let inc = packet.to_incident(&m);
        let st = FieldSettings::default();
        for &(x, t) in &[(1.5, 11.0), (0.5, 10.5), (-2.0, 6.0), (-6.0, 2.0)] {
            let a = packet_field_normal(x, t, &m, &packet, &st).unwrap();
            let b = packet_field_oblique(x, 0.0, t, &m, &inc, &st).unwrap();
            assert!((a.f_plus - b.f_plus).abs() < 1e-12, "{a:?} {b:?}");
            assert!((a.f_minus - b.f_minus).abs() < 1e-12);
        }
    }

    #[test]
    fn backward_fraction_decreases_with_dispersion() {
        let m = slow_cladding();
        let st = FieldSettings::default();
        let mut last = f64::INFINITY;
        for sigma in [0.05, 0.1, 0.2, 0.4, 0.8] {
            let p = ScaledPacket::new(1.0, -5.0, sigma, PI).unwrap();
            let frac = backward_fraction(1.5, &m, &p, &st).unwrap();
            assert!(frac < last);
            last = frac;
        }
    }

    #[test]
    fn residual_of_exact_solution_vanishes() {
        let m = TrilayerMedium::homogeneous(1.0, 1.0).unwrap();
        let w0 = 2.0;
        let mut prev = f64::INFINITY;
        for n in [16.0, 32.0] {
            let h = 1.0 / (n * w0);
            // unequal spacings, otherwise the two truncation errors cancel
            let xs: Vec<f64> = (0..40).map(|i| -3.0 + 0.7 * h * i as f64).collect();
            let ts: Vec<f64> = (0..40).map(|i| h * i as f64).collect();
            let samples = xs
                .iter()
                .flat_map(|&x| ts.iter().map(move |&t| (x, t)))
                .map(|(x, t)| {
                    let (p, q) = homogeneous_plane_wave(x, t, &m, w0, 1.0);
                    FieldSample {
                        x,
                        t,
                        f_plus: p,
                        f_minus: q,
                        f: p + q,
                        error: 0.0,
                        shortfall: false,
                    }
                })
                .collect();
            let grid = FieldGrid {
                x: xs,
                t: ts,
                samples,
                metadata: vec![],
            };
            let r = wave_equation_residual(&grid, &m, w0).unwrap();
            assert!(!r.too_coarse);
            assert!(r.max_abs < prev / 10.0);
            prev = r.max_abs;
        }
        assert!(prev < 1e-5);
    }

    #[test]
    fn residual_of_noise_is_order_one() {
        use rand::{Rng, SeedableRng};
        let m = TrilayerMedium::homogeneous(1.0, 1.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let w0 = 2.0;
        let h = 1.0 / (16.0 * w0);
        let xs = linspace(-3.0, -3.0 + 29.0 * h, 30);
        let ts = linspace(0.0, 29.0 * h, 30);
        let samples = xs
            .iter()
            .flat_map(|&x| ts.iter().map(move |&t| (x, t)))
            .map(|(x, t)| {
                let f = rng.gen_range(-1.0..1.0);
                FieldSample {
                    x,
                    t,
                    f_plus: f,
                    f_minus: 0.0,
                    f,
                    error: 0.0,
                    shortfall: false,
                }
            })
            .collect();
        let grid = FieldGrid {
            x: xs,
            t: ts,
            samples,
            metadata: vec![],
        };
        let r = wave_equation_residual(&grid, &m, w0).unwrap();
        assert!(r.max_abs > 1.0);
    }
}
