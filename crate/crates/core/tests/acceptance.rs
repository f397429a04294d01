//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};
use trilayer::cli::{cmd_field, RunConfig};
use trilayer::exec::with_threads;
use trilayer::green::probabilities;
use trilayer::packet::{
    linspace, packet_field_grid, wave_equation_residual, FieldSettings, OmegaWeight,
    PropagatorSettings, ScaledPacket, Terms,
};
use trilayer::verify::{self, Hooks};
use trilayer::{SpectralPoint, TrilayerMedium};

type Criterion = (&'static str, Option<u64>, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let start = Instant::now();
    let mut o = f();
    let took = start.elapsed();
    if let Some(limit) = limit {
        if took > limit {
            o.pass = false;
            o.detail = format!("{}; exceeded {:?}", o.detail, limit);
        }
    }
    (o, took)
}

fn suite_outcome(s: &verify::SuiteResult) -> Outcome {
    Outcome {
        pass: s.passed(),
        detail: format!(
            "{} cases, worst {:.3e} (tol {:.0e}){}",
            s.cases,
            s.worst,
            s.tolerance,
            if s.errors.is_empty() {
                String::new()
            } else {
                format!(", errors: {:?}", s.errors)
            }
        ),
    }
}

fn unitarity() -> Outcome {
    suite_outcome(&verify::unitarity(2024, 10_000))
}

fn resonance() -> Outcome {
    let mut worst_sym = 0.0f64;
    // symmetric media at k2 d = pi, including oblique incidence
    let mut rng = verify::rng(11);
    use rand::Rng;
    for _ in 0..200 {
        let v1 = rng.gen_range(0.3..3.0);
        let v2 = rng.gen_range(0.3..3.0);
        let d = rng.gen_range(0.2..2.0);
        let m = TrilayerMedium::new(v1, v2, v1, d).unwrap();
        let k_par = rng.gen_range(0.0..0.5) * PI / d / v2.max(v1) * v2;
        let k2 = PI / d;
        let omega = v2 * (k2 * k2 + k_par * k_par).sqrt();
        let sp = SpectralPoint::new(omega, k_par, &m);
        if !sp.is_propagating() {
            continue;
        }
        let p = probabilities(&m, &sp).unwrap();
        worst_sym = worst_sym.max((p.transmission - 1.0).abs());
    }
    // k1 = 1, k3 = 2 with sin(k2 d) = 0, for several spacer wave numbers
    let mut worst_asym = 0.0f64;
    for (v2, d) in [(0.5, PI / 2.0), (0.25, PI / 4.0), (1.0 / 3.0, PI)] {
        let m = TrilayerMedium::new(1.0, v2, 0.5, d).unwrap();
        let p = probabilities(&m, &SpectralPoint::normal(1.0, &m)).unwrap();
        worst_asym = worst_asym.max((p.transmission - 8.0 / 9.0).abs());
    }
    Outcome {
        pass: worst_sym <= 1e-10 && worst_asym <= 1e-12,
        detail: format!(
            "symmetric |t|^2 - 1: {worst_sym:.3e}; asymmetric |t|^2 - 8/9: {worst_asym:.3e}"
        ),
    }
}

fn dual_path() -> Outcome {
    suite_outcome(&verify::dual_path(2024, 1_000, &Hooks::default()))
}

fn series() -> Outcome {
    suite_outcome(&verify::t_matrix_series(2024, 100, 30))
}

fn free_propagator() -> Outcome {
    let suites = verify::free_propagator(&PropagatorSettings::default());
    let pass = suites.iter().all(|s| s.passed());
    let detail = suites
        .iter()
        .map(|s| {
            format!(
                "{}: worst {:.3e} (tol {:.0e})",
                s.name, s.worst, s.tolerance
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    Outcome { pass, detail }
}

fn homogeneous_packet() -> Outcome {
    let absorbed = verify::homogeneous_packet(&FieldSettings::default());
    let explicit = verify::homogeneous_packet(&FieldSettings {
        weight: OmegaWeight::Explicit,
        ..FieldSettings::default()
    });
    Outcome {
        pass: absorbed.passed() && !explicit.passed(),
        detail: format!(
            "absorbed weight sup error {:.3e}; explicit weight sup error {:.3e} (tol 1e-2)",
            absorbed.worst, explicit.worst
        ),
    }
}

fn slow_cladding() -> TrilayerMedium {
    TrilayerMedium::from_ratios(2.0, 2.0).unwrap()
}

/// Reflected over incident field energy on the pre-spacer grid.
fn reflected_fraction(sigma: f64) -> f64 {
    let m = slow_cladding();
    let packet = ScaledPacket::new(1.0, -5.0, sigma, PI).unwrap();
    let xs: Vec<f64> = linspace(-5.0, 0.0, 101)[..100].to_vec();
    let ts = linspace(0.0, 30.0, 150);
    let part = |incident: bool| {
        let settings = FieldSettings {
            terms: Terms {
                incident,
                reflected: !incident,
                ..Terms::default()
            },
            ..FieldSettings::default()
        };
        let g = packet_field_grid(&xs, &ts, &m, &packet, &settings).unwrap();
        g.samples.iter().map(|s| s.f * s.f).sum::<f64>()
    };
    part(false) / part(true)
}

fn packet_transit() -> Outcome {
    let m = slow_cladding();
    let packet = ScaledPacket::new(1.0, -5.0, 0.2, PI).unwrap();
    let xs = linspace(1.0, 2.0, 100);
    let ts = linspace(5.0, 20.0, 150);
    let g = packet_field_grid(&xs, &ts, &m, &packet, &FieldSettings::default()).unwrap();
    let (it, _) = (0..ts.len())
        .map(|it| (it, g.at(0, it).f_plus.abs()))
        .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let t_peak = ts[it];
    let arrival_ok = (9.0..=14.0).contains(&t_peak);

    let small = reflected_fraction(0.2);
    let large = reflected_fraction(2.0);
    let ratio = large / small;
    Outcome {
        pass: arrival_ok && ratio < 0.1 && !g.any_shortfall(),
        detail: format!(
            "transmitted peak at x=1: t={t_peak:.3}; reflected energy fraction {large:.4e} (sigma 2) vs {small:.4e} (sigma 0.2), ratio {ratio:.4}"
        ),
    }
}

fn residual() -> Outcome {
    let m = slow_cladding();
    let omega0 = PI;
    let packet = ScaledPacket::new(1.0, -5.0, 1.0, omega0).unwrap();
    let h = 1.0 / (16.0 * omega0);
    let nx = (1.0 / h).floor() as usize + 1;
    let nt = (15.0 / h).floor() as usize + 1;
    let xs: Vec<f64> = (0..nx).map(|i| 1.0 + h * i as f64).collect();
    let ts: Vec<f64> = (0..nt).map(|i| 5.0 + h * i as f64).collect();
    let g = packet_field_grid(&xs, &ts, &m, &packet, &FieldSettings::default()).unwrap();
    let r = wave_equation_residual(&g, &m, omega0).unwrap();
    Outcome {
        pass: r.max_abs < 1e-2 && !r.too_coarse,
        detail: format!(
            "{}x{} grid, {} interior points, max normalized residual {:.3e}",
            nx,
            nt,
            r.points.len(),
            r.max_abs
        ),
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.grid.x_steps = 12;
    cfg.grid.t_steps = 20;
    cfg.packet.sigma_x = 1.0;
    let run = |threads: usize, tag: &str| {
        let out = dir.path().join(tag);
        let w = with_threads(Some(threads), || cmd_field(&cfg, &out)).unwrap();
        std::fs::read(w.data).unwrap()
    };
    let a = run(1, "a");
    let b = run(1, "b");
    let c = run(4, "c");
    let d = run(4, "d");
    let pass = a == b && a == c && a == d;
    Outcome {
        pass,
        detail: format!(
            "{} bytes; 1 thread x2 and 4 threads x2 identical: {pass}",
            a.len()
        ),
    }
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("unitarity sweep", Some(1), unitarity),
        ("resonance", None, resonance),
        ("dual-path multiple scattering", Some(5), dual_path),
        ("T-matrix series", None, series),
        ("free-propagator oracle", Some(10), free_propagator),
        ("homogeneous packet oracle", None, homogeneous_packet),
        ("packet transit and reflection", Some(120), packet_transit),
        ("wave-equation residual", None, residual),
        ("determinism", None, determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.into_iter().enumerate() {
        let (o, took) = timed(limit.map(Duration::from_secs), f);
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {} {}: {} [{:.2}s] {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            name,
            took.as_secs_f64(),
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
