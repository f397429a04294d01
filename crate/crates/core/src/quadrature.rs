//! Fixed-density panel quadrature for Gaussian-enveloped oscillatory
//! integrands over `(omega_min, omega_max)`.
//!
//! The range is cut into equal panels no wider than `pi / (8 * max_phase_rate)`
//! and `width / 8`, each integrated with the 15-point Gauss-Kronrod rule. The
//! embedded 7-point Gauss rule gives the error estimate. All nodes are strictly
//! inside their panel, so `omega_min` itself is never evaluated.
//!
//! Panel sums are combined by a pairwise tree over the panel index, which makes
//! the result independent of how node evaluations are scheduled.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::C64;
use std::f64::consts::PI;

/// Default truncation point in envelope widths; `exp(-7.5^2 / 2) < 1e-12`.
pub const DEFAULT_TRUNCATION_WIDTHS: f64 = 7.5;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Nodes per panel.
pub const PANEL_ORDER: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorySpec {
    /// Lower limit, never evaluated.
    pub omega_min: f64,
    /// Center of the Gaussian envelope.
    pub center: f64,
    /// Standard deviation of the envelope `exp(-(w - center)^2 / (2 width^2))`.
    pub width: f64,
    /// Upper bound on `|d phase / d omega|` over the range.
    pub max_phase_rate: f64,
}

impl OscillatorySpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.omega_min.is_finite()
            && self.omega_min >= 0.0
            && self.center.is_finite()
            && self.width.is_finite()
            && self.width > 0.0
            && self.max_phase_rate.is_finite()
            && self.max_phase_rate >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidQuadrature(format!("{self:?}")))
        }
    }

    pub fn omega_max(&self, truncation_widths: f64) -> f64 {
        (self.center + truncation_widths * self.width).max(self.omega_min)
    }

    /// Largest admissible panel width before refinement.
    pub fn max_panel_width(&self) -> f64 {
        let by_width = self.width / 8.0;
        if self.max_phase_rate > 0.0 {
            by_width.min(PI / (8.0 * self.max_phase_rate))
        } else {
            by_width
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings {
    /// Accepted error estimate; larger estimates are flagged as a shortfall.
    pub tol: f64,
    pub truncation_widths: f64,
    /// Panel-density multiplier (1 = the conservative default density).
    pub refinement: u32,
    pub execution: Execution,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            truncation_widths: DEFAULT_TRUNCATION_WIDTHS,
            refinement: 1,
            execution: Execution::Parallel,
        }
    }
}

impl QuadratureSettings {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub fn sequential(mut self) -> Self {
        self.execution = Execution::Sequential;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: C64,
    pub error: f64,
    /// The error estimate exceeds the requested tolerance.
    pub shortfall: bool,
}

/// Node layout and weights for one spec; reusable across integrands that
/// share the same spec.
#[derive(Debug, Clone)]
pub struct PanelRule {
    nodes: Vec<f64>,
    kronrod: Vec<f64>,
    gauss: Vec<f64>,
    panels: usize,
    omega_min: f64,
    omega_max: f64,
}

impl PanelRule {
    pub fn new(spec: &OscillatorySpec, settings: &QuadratureSettings) -> Result<Self> {
        spec.validate()?;
        if !(settings.truncation_widths > 0.0) || settings.refinement == 0 {
            return Err(Error::InvalidQuadrature(format!("{settings:?}")));
        }
        let lo = spec.omega_min;
        let hi = spec.omega_max(settings.truncation_widths);
        let span = hi - lo;
        let panels = if span > 0.0 {
            ((span / spec.max_panel_width()).ceil() as usize).max(1) * settings.refinement as usize
        } else {
            0
        };
        let mut nodes = Vec::with_capacity(panels * PANEL_ORDER);
        let mut kronrod = Vec::with_capacity(panels * PANEL_ORDER);
        let mut gauss = Vec::with_capacity(panels * PANEL_ORDER);
        let h = if panels > 0 {
            span / panels as f64
        } else {
            0.0
        };
        for p in 0..panels {
            let a = lo + h * p as f64;
            let b = if p + 1 == panels {
                hi
            } else {
                lo + h * (p + 1) as f64
            };
            let c = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            for j in 0..7 {
                let wg = if j % 2 == 1 { WG[j / 2] * half } else { 0.0 };
                for x in [c - half * XGK[j], c + half * XGK[j]] {
                    nodes.push(x);
                    kronrod.push(WGK[j] * half);
                    gauss.push(wg);
                }
            }
            nodes.push(c);
            kronrod.push(WGK[7] * half);
            gauss.push(WG[3] * half);
        }
        Ok(Self {
            nodes,
            kronrod,
            gauss,
            panels,
            omega_min: lo,
            omega_max: hi,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn range(&self) -> (f64, f64) {
        (self.omega_min, self.omega_max)
    }

    /// Combines integrand values (one per node, in node order).
    pub fn reduce(&self, values: &[C64], tol: f64) -> Result<Estimate> {
        assert_eq!(values.len(), self.nodes.len(), "one value per node");
        let mut sums = Vec::with_capacity(self.panels);
        let mut errs = Vec::with_capacity(self.panels);
        for p in 0..self.panels {
            let range = p * PANEL_ORDER..(p + 1) * PANEL_ORDER;
            let mut k = C64::new(0.0, 0.0);
            let mut g = C64::new(0.0, 0.0);
            for i in range {
                let v = values[i];
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::NonFiniteIntegrand {
                        omega: self.nodes[i],
                    });
                }
                k += v * self.kronrod[i];
                g += v * self.gauss[i];
            }
            sums.push(k);
            errs.push((k - g).norm());
        }
        let value = tree_sum(&sums, C64::new(0.0, 0.0));
        let error = tree_sum(&errs, 0.0);
        Ok(Estimate {
            value,
            error,
            shortfall: error > tol,
        })
    }

    /// Evaluates `f` on every node and reduces.
    pub fn integrate<F>(&self, f: F, settings: &QuadratureSettings) -> Result<Estimate>
    where
        F: Fn(f64) -> C64 + Sync + Send,
    {
        let values: Vec<C64> = settings
            .execution
            .map_range(self.panels, |p| {
                let start = p * PANEL_ORDER;
                self.nodes[start..start + PANEL_ORDER]
                    .iter()
                    .map(|&w| f(w))
                    .collect::<Vec<_>>()
            })
            .into_iter()
            .flatten()
            .collect();
        self.reduce(&values, settings.tol)
    }
}

/// Integrates `f` over `(spec.omega_min, omega_max)`.
pub fn integrate<F>(f: F, spec: &OscillatorySpec, settings: &QuadratureSettings) -> Result<Estimate>
where
    F: Fn(f64) -> C64 + Sync + Send,
{
    PanelRule::new(spec, settings)?.integrate(f, settings)
}

/// Pairwise sum with a fixed bracketing.
pub fn tree_sum<T>(xs: &[T], zero: T) -> T
where
    T: Copy + std::ops::Add<Output = T>,
{
    match xs.len() {
        0 => zero,
        1 => xs[0],
        n => {
            let (a, b) = xs.split_at(n / 2);
            tree_sum(a, zero) + tree_sum(b, zero)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(center: f64, width: f64) -> impl Fn(f64) -> f64 + Sync + Send {
        move |w| (-(w - center).powi(2) / (2.0 * width * width)).exp()
    }

    fn spec(center: f64, width: f64, rate: f64) -> OscillatorySpec {
        OscillatorySpec {
            omega_min: 0.0,
            center,
            width,
            max_phase_rate: rate,
        }
    }

    #[test]
    fn gaussian_on_half_line() {
        // Oracle: the half-line Gaussian integral in terms of erf.
        let (c, w) = (2.0, 0.5);
        let g = gaussian(c, w);
        let est = integrate(
            |x| C64::new(g(x), 0.0),
            &spec(c, w, 0.0),
            &QuadratureSettings::default(),
        )
        .unwrap();
        let exact = (2.0 * PI).sqrt() * w * 0.5 * (1.0 + libm::erf(c / (w * 2f64.sqrt())));
        assert!(
            (est.value.re - exact).abs() < 1e-10,
            "{} vs {}",
            est.value.re,
            exact
        );
        assert!(est.value.im == 0.0);
        assert!(!est.shortfall);
    }

    #[test]
    fn gaussian_fourier_transform() {
        // Center ten widths from the origin, so the half line is the full line
        // to far below tolerance.
        let (c, w) = (10.0, 1.0);
        let g = gaussian(c, w);
        for tau in [0.0, 0.7, 3.0, -5.5] {
            let est = integrate(
                |x| C64::from_polar(g(x), x * tau),
                &spec(c, w, f64::abs(tau)),
                &QuadratureSettings::default(),
            )
            .unwrap();
            let exact = C64::from_polar(
                (2.0 * PI).sqrt() * w * (-(w * tau).powi(2) / 2.0).exp(),
                c * tau,
            );
            assert!((est.value - exact).norm() < 1e-10);
        }
    }

    #[test]
    fn doubling_density_is_stable() {
        let (c, w, tau) = (3.0, 0.8, 12.0);
        let g = gaussian(c, w);
        let f = |x: f64| C64::from_polar(g(x) / (1.0 + x), x * tau);
        let s = spec(c, w, tau);
        let base = integrate(f, &s, &QuadratureSettings::default()).unwrap();
        let fine = integrate(
            f,
            &s,
            &QuadratureSettings {
                refinement: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((base.value - fine.value).norm() < 1e-10);
        assert!(fine.error <= 2.0 * base.error + 1e-15);
    }

    #[test]
    fn nodes_are_interior_and_cover_range() {
        let s = OscillatorySpec {
            omega_min: 1.5,
            center: 2.0,
            width: 0.3,
            max_phase_rate: 4.0,
        };
        let rule = PanelRule::new(&s, &QuadratureSettings::default()).unwrap();
        let (lo, hi) = rule.range();
        assert_eq!(lo, 1.5);
        assert!((hi - (2.0 + 7.5 * 0.3)).abs() < 1e-15);
        assert!(rule.nodes().iter().all(|&x| x > lo && x < hi));
        let h = (hi - lo) / rule.panels() as f64;
        assert!(h <= s.max_panel_width() * (1.0 + 1e-12));
    }

    #[test]
    fn truncation_floors_at_omega_min() {
        let s = OscillatorySpec {
            omega_min: 5.0,
            center: 1.0,
            width: 0.1,
            max_phase_rate: 0.0,
        };
        let est = integrate(|_| C64::new(1.0, 0.0), &s, &QuadratureSettings::default()).unwrap();
        assert_eq!(est.value, C64::new(0.0, 0.0));
    }

    #[test]
    fn non_finite_integrand_reported() {
        let s = spec(1.0, 0.5, 0.0);
        let err = integrate(
            |x| C64::new(if x > 2.0 { f64::NAN } else { 1.0 }, 0.0),
            &s,
            &QuadratureSettings::default(),
        )
        .unwrap_err();
        match err {
            Error::NonFiniteIntegrand { omega } => assert!(omega > 2.0),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn invalid_spec_rejected() {
        for s in [
            spec(1.0, 0.0, 0.0),
            spec(1.0, 1.0, -1.0),
            OscillatorySpec {
                omega_min: -1.0,
                ..spec(1.0, 1.0, 0.0)
            },
        ] {
            assert!(matches!(
                PanelRule::new(&s, &QuadratureSettings::default()),
                Err(Error::InvalidQuadrature(_))
            ));
        }
    }

    #[test]
    fn shortfall_flag() {
        // A discontinuous integrand defeats the error estimate.
        let s = spec(1.0, 0.5, 0.0);
        let est = integrate(
            |x| C64::new(if x > 1.01 { 1.0 } else { 0.0 }, 0.0),
            &s,
            &QuadratureSettings::with_tol(1e-14),
        )
        .unwrap();
        assert!(est.shortfall);
    }

    #[test]
    fn sequential_and_parallel_bit_identical() {
        let (c, w, tau) = (4.0, 1.3, 25.0);
        let g = gaussian(c, w);
        let f = |x: f64| C64::from_polar(g(x) * x.sqrt(), x * tau);
        let s = spec(c, w, tau);
        let a = integrate(f, &s, &QuadratureSettings::default()).unwrap();
        let b = integrate(f, &s, &QuadratureSettings::default().sequential()).unwrap();
        assert_eq!(a.value.re.to_bits(), b.value.re.to_bits());
        assert_eq!(a.value.im.to_bits(), b.value.im.to_bits());
        assert_eq!(a.error.to_bits(), b.error.to_bits());
    }

    #[test]
    fn linearity() {
        let (c, w, tau) = (3.0, 0.6, 6.0);
        let g = gaussian(c, w);
        let f = |x: f64| C64::from_polar(g(x), x * tau);
        let h = |x: f64| C64::new(g(x) * x.cos(), 0.0);
        let (a, b) = (C64::new(0.3, -1.2), C64::new(2.5, 0.0));
        let s = spec(c, w, tau);
        let st = QuadratureSettings::default();
        let lhs = integrate(|x| a * f(x) + b * h(x), &s, &st).unwrap().value;
        let rhs =
            a * integrate(f, &s, &st).unwrap().value + b * integrate(h, &s, &st).unwrap().value;
        assert!((lhs - rhs).norm() <= 2.0 * st.tol);
    }

    #[test]
    fn tree_sum_brackets() {
        assert_eq!(tree_sum::<f64>(&[], 0.0), 0.0);
        assert_eq!(tree_sum(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.0), 15.0);
    }
}
