//! Command-line front end: configuration, subcommands and file output.
//!
//! Configuration is a flat `key = value` file with section prefixes. Every
//! output file echoes the fully resolved configuration as `#! key = value`
//! lines, and the loader accepts such a file directly, so any output can be
//! regenerated byte for byte from itself.

use crate::error::Error;
use crate::exec::Execution;
use crate::green::probabilities;
use crate::media::{SpectralPoint, TrilayerMedium};
use crate::packet::{
    linspace, packet_field_grid, packet_field_oblique, propagator_g, FieldGrid, FieldSettings,
    IncidentPacket, OmegaWeight, PropagatorSettings, ScaledPacket,
};
use crate::quadrature::{QuadratureSettings, DEFAULT_TRUNCATION_WIDTHS, PANEL_ORDER};
use crate::verify::{run_all, Hooks, Report, VerifyOptions};
use crate::ENGINE_VERSION;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("accuracy shortfall: {0}")]
    Shortfall(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Numerical(Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Shortfall(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Numerical(e) => match e {
                Error::InvalidMedium(_)
                | Error::InvalidPacket(_)
                | Error::InvalidGrid(_)
                | Error::InvalidQuadrature(_)
                | Error::UnsupportedRegion { .. }
                | Error::Evanescent { .. }
                | Error::Cutoff { .. }
                | Error::Config(_) => 2,
                _ => 1,
            },
            CliError::Io { .. } => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Numerical(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    Scan,
    #[default]
    Field,
    Propagator,
    Verify,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Scan => "scan",
            Mode::Field => "field",
            Mode::Propagator => "propagator",
            Mode::Verify => "verify",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "scan" => Mode::Scan,
            "field" => Mode::Field,
            "propagator" => Mode::Propagator,
            "verify" => Mode::Verify,
            _ => return None,
        })
    }
}

/// Physical velocities (m/s) and spacer width (nm), or the two dimensionless
/// velocity ratios. Ratios win when both are given.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MediumConfig {
    pub v1: Option<f64>,
    pub v2: Option<f64>,
    pub v3: Option<f64>,
    pub d_nm: Option<f64>,
    pub v2_over_v1: Option<f64>,
    pub v2_over_v3: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketConfig {
    pub c: f64,
    pub x_i: f64,
    pub sigma_x: f64,
    pub omega0: f64,
    pub k_par: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub x_steps: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub t_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    pub omega_min: f64,
    pub omega_max: f64,
    pub steps: usize,
    pub k_par: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorConfig {
    pub x: f64,
    pub x_prime: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub tau_steps: usize,
    pub k_par: f64,
    pub bandwidth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub tol: f64,
    pub truncation_widths: f64,
    pub refinement: u32,
    pub omega_weight: OmegaWeight,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    /// File stem; empty means the mode name.
    pub prefix: String,
    pub plot: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    pub unitarity_cases: usize,
    pub dual_path_cases: usize,
    pub series_cases: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub medium: MediumConfig,
    pub packet: PacketConfig,
    pub grid: GridConfig,
    pub scan: ScanConfig,
    pub propagator: PropagatorConfig,
    pub quadrature: QuadratureConfig,
    pub output: OutputConfig,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Field,
            medium: MediumConfig::default(),
            packet: PacketConfig {
                c: 1.0,
                x_i: -5.0,
                sigma_x: 0.2,
                omega0: PI,
                k_par: 0.0,
            },
            grid: GridConfig {
                x_min: 1.0,
                x_max: 2.0,
                x_steps: 100,
                t_min: 5.0,
                t_max: 20.0,
                t_steps: 150,
            },
            scan: ScanConfig {
                omega_min: 0.1,
                omega_max: 10.0,
                steps: 1000,
                k_par: 0.0,
            },
            propagator: PropagatorConfig {
                x: -1.0,
                x_prime: -2.0,
                tau_min: -5.0,
                tau_max: 5.0,
                tau_steps: 201,
                k_par: 0.0,
                bandwidth: PropagatorSettings::default().bandwidth,
            },
            quadrature: QuadratureConfig {
                tol: QuadratureSettings::default().tol,
                truncation_widths: DEFAULT_TRUNCATION_WIDTHS,
                refinement: 1,
                omega_weight: OmegaWeight::Absorbed,
            },
            output: OutputConfig {
                prefix: String::new(),
                plot: true,
            },
            verify: VerifyConfig {
                seed: 0,
                unitarity_cases: 10_000,
                dual_path_cases: 1_000,
                series_cases: 100,
            },
        }
    }
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn parse_f64(key: &str, v: &str) -> CliResult<f64> {
    let x: f64 = v
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: '{v}' is not a number")))?;
    if !x.is_finite() {
        return Err(CliError::Config(format!("{key}: '{v}' is not finite")));
    }
    Ok(x)
}

fn parse_int<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.parse()
        .map_err(|_| CliError::Config(format!("{key}: '{v}' is not a non-negative integer")))
}

fn parse_bool(key: &str, v: &str) -> CliResult<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(CliError::Config(format!(
            "{key}: expected true or false, got '{v}'"
        ))),
    }
}

fn weight_name(w: OmegaWeight) -> &'static str {
    match w {
        OmegaWeight::Absorbed => "absorbed",
        OmegaWeight::Explicit => "explicit",
    }
}

impl RunConfig {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let f = |v: &str| parse_f64(key, v);
        let some = |v: &str| parse_f64(key, v).map(Some);
        match key {
            "mode" => {
                self.mode = Mode::parse(value)
                    .ok_or_else(|| CliError::Config(format!("mode: unknown mode '{value}'")))?
            }
            "medium.v1" => self.medium.v1 = some(value)?,
            "medium.v2" => self.medium.v2 = some(value)?,
            "medium.v3" => self.medium.v3 = some(value)?,
            "medium.d_nm" => self.medium.d_nm = some(value)?,
            "medium.v2_over_v1" => self.medium.v2_over_v1 = some(value)?,
            "medium.v2_over_v3" => self.medium.v2_over_v3 = some(value)?,
            "packet.c" => self.packet.c = f(value)?,
            "packet.x_i" => self.packet.x_i = f(value)?,
            "packet.sigma_x" => self.packet.sigma_x = f(value)?,
            "packet.omega0" => self.packet.omega0 = f(value)?,
            "packet.k_par" => self.packet.k_par = f(value)?,
            "grid.x_min" => self.grid.x_min = f(value)?,
            "grid.x_max" => self.grid.x_max = f(value)?,
            "grid.x_steps" => self.grid.x_steps = parse_int(key, value)?,
            "grid.t_min" => self.grid.t_min = f(value)?,
            "grid.t_max" => self.grid.t_max = f(value)?,
            "grid.t_steps" => self.grid.t_steps = parse_int(key, value)?,
            "scan.omega_min" => self.scan.omega_min = f(value)?,
            "scan.omega_max" => self.scan.omega_max = f(value)?,
            "scan.steps" => self.scan.steps = parse_int(key, value)?,
            "scan.k_par" => self.scan.k_par = f(value)?,
            "propagator.x" => self.propagator.x = f(value)?,
            "propagator.x_prime" => self.propagator.x_prime = f(value)?,
            "propagator.tau_min" => self.propagator.tau_min = f(value)?,
            "propagator.tau_max" => self.propagator.tau_max = f(value)?,
            "propagator.tau_steps" => self.propagator.tau_steps = parse_int(key, value)?,
            "propagator.k_par" => self.propagator.k_par = f(value)?,
            "propagator.bandwidth" => self.propagator.bandwidth = f(value)?,
            "quadrature.tol" => self.quadrature.tol = f(value)?,
            "quadrature.truncation_widths" => self.quadrature.truncation_widths = f(value)?,
            "quadrature.refinement" => self.quadrature.refinement = parse_int(key, value)?,
            "quadrature.omega_weight" => {
                self.quadrature.omega_weight = match value {
                    "absorbed" => OmegaWeight::Absorbed,
                    "explicit" => OmegaWeight::Explicit,
                    _ => {
                        return Err(CliError::Config(format!(
                            "{key}: expected absorbed or explicit, got '{value}'"
                        )))
                    }
                }
            }
            "output.prefix" => self.output.prefix = value.to_string(),
            "output.plot" => self.output.plot = parse_bool(key, value)?,
            "verify.seed" => self.verify.seed = parse_int(key, value)?,
            "verify.unitarity_cases" => self.verify.unitarity_cases = parse_int(key, value)?,
            "verify.dual_path_cases" => self.verify.dual_path_cases = parse_int(key, value)?,
            "verify.series_cases" => self.verify.series_cases = parse_int(key, value)?,
            _ => return Err(CliError::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Every key with its resolved value, in a fixed order. Unset optional
    /// medium keys are omitted.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let mut e = vec![("mode", self.mode.name().to_string())];
        let m = &self.medium;
        for (k, v) in [
            ("medium.v1", m.v1),
            ("medium.v2", m.v2),
            ("medium.v3", m.v3),
            ("medium.d_nm", m.d_nm),
            ("medium.v2_over_v1", m.v2_over_v1),
            ("medium.v2_over_v3", m.v2_over_v3),
        ] {
            if let Some(v) = v {
                e.push((k, fmt_f64(v)));
            }
        }
        let p = &self.packet;
        let g = &self.grid;
        let s = &self.scan;
        let pr = &self.propagator;
        let q = &self.quadrature;
        e.extend([
            ("packet.c", fmt_f64(p.c)),
            ("packet.x_i", fmt_f64(p.x_i)),
            ("packet.sigma_x", fmt_f64(p.sigma_x)),
            ("packet.omega0", fmt_f64(p.omega0)),
            ("packet.k_par", fmt_f64(p.k_par)),
            ("grid.x_min", fmt_f64(g.x_min)),
            ("grid.x_max", fmt_f64(g.x_max)),
            ("grid.x_steps", g.x_steps.to_string()),
            ("grid.t_min", fmt_f64(g.t_min)),
            ("grid.t_max", fmt_f64(g.t_max)),
            ("grid.t_steps", g.t_steps.to_string()),
            ("scan.omega_min", fmt_f64(s.omega_min)),
            ("scan.omega_max", fmt_f64(s.omega_max)),
            ("scan.steps", s.steps.to_string()),
            ("scan.k_par", fmt_f64(s.k_par)),
            ("propagator.x", fmt_f64(pr.x)),
            ("propagator.x_prime", fmt_f64(pr.x_prime)),
            ("propagator.tau_min", fmt_f64(pr.tau_min)),
            ("propagator.tau_max", fmt_f64(pr.tau_max)),
            ("propagator.tau_steps", pr.tau_steps.to_string()),
            ("propagator.k_par", fmt_f64(pr.k_par)),
            ("propagator.bandwidth", fmt_f64(pr.bandwidth)),
            ("quadrature.tol", fmt_f64(q.tol)),
            ("quadrature.truncation_widths", fmt_f64(q.truncation_widths)),
            ("quadrature.refinement", q.refinement.to_string()),
            (
                "quadrature.omega_weight",
                weight_name(q.omega_weight).to_string(),
            ),
            ("output.prefix", self.output.prefix.clone()),
            ("output.plot", self.output.plot.to_string()),
            ("verify.seed", self.verify.seed.to_string()),
            (
                "verify.unitarity_cases",
                self.verify.unitarity_cases.to_string(),
            ),
            (
                "verify.dual_path_cases",
                self.verify.dual_path_cases.to_string(),
            ),
            ("verify.series_cases", self.verify.series_cases.to_string()),
        ]);
        e
    }

    /// The config as a loadable text file.
    pub fn to_text(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Parses a config file, or the `#!` echo lines of an output file.
    /// Returns the config and any warnings.
    pub fn parse(text: &str) -> CliResult<(RunConfig, Vec<String>)> {
        let echoed = text.lines().any(|l| l.starts_with("#!"));
        let mut cfg = RunConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = if echoed {
                match raw.strip_prefix("#!") {
                    Some(rest) => rest,
                    None => continue,
                }
            } else {
                raw
            };
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected 'key = value'", n + 1))
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        let warnings = cfg.validate()?;
        Ok((cfg, warnings))
    }

    pub fn load(path: &Path) -> CliResult<(RunConfig, Vec<String>)> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Checks every invariant; returns warnings for accepted but dubious input.
    pub fn validate(&self) -> CliResult<Vec<String>> {
        let mut warnings = Vec::new();
        let m = &self.medium;
        let physical = [m.v1, m.v2, m.v3, m.d_nm];
        let n_physical = physical.iter().filter(|v| v.is_some()).count();
        let has_ratios = m.v2_over_v1.is_some() || m.v2_over_v3.is_some();
        if has_ratios && (m.v2_over_v1.is_none() || m.v2_over_v3.is_none()) {
            return Err(CliError::Config(
                "medium: give both v2_over_v1 and v2_over_v3".into(),
            ));
        }
        if n_physical != 0 && n_physical != 4 {
            return Err(CliError::Config(
                "medium: physical input needs all of v1, v2, v3 and d_nm".into(),
            ));
        }
        if has_ratios && n_physical == 4 {
            warnings.push(
                "medium: both physical and dimensionless values given; using v2_over_v1 and v2_over_v3"
                    .into(),
            );
        }
        if n_physical == 4 {
            self.physical_medium()?;
        }
        self.medium()?;

        let g = &self.grid;
        let axis = |name: &str, lo: f64, hi: f64, steps: usize| -> CliResult<()> {
            if steps < 2 {
                return Err(CliError::Config(format!("{name}: need at least 2 steps")));
            }
            if !(lo < hi) {
                return Err(CliError::Config(format!(
                    "{name}: empty range [{lo}, {hi}]"
                )));
            }
            Ok(())
        };
        axis("grid.x", g.x_min, g.x_max, g.x_steps)?;
        axis("grid.t", g.t_min, g.t_max, g.t_steps)?;
        axis(
            "scan.omega",
            self.scan.omega_min,
            self.scan.omega_max,
            self.scan.steps,
        )?;
        let pr = &self.propagator;
        axis("propagator.tau", pr.tau_min, pr.tau_max, pr.tau_steps)?;
        if !(pr.bandwidth > 0.0) {
            return Err(CliError::Config(
                "propagator.bandwidth must be positive".into(),
            ));
        }
        if self.scan.k_par < 0.0 || pr.k_par < 0.0 {
            return Err(CliError::Config("k_par must be non-negative".into()));
        }
        if !(self.scan.omega_min > 0.0) {
            return Err(CliError::Config("scan.omega_min must be positive".into()));
        }
        self.scaled_packet()?;
        let q = &self.quadrature;
        if !(q.tol > 0.0) || !(q.truncation_widths > 0.0) || q.refinement == 0 {
            return Err(CliError::Config(
                "quadrature: tol and truncation_widths must be positive, refinement at least 1"
                    .into(),
            ));
        }
        if self.output.prefix.contains(['/', '\\']) || self.output.prefix.contains('\n') {
            return Err(CliError::Config(
                "output.prefix must be a plain file stem".into(),
            ));
        }
        Ok(warnings)
    }

    fn physical_medium(&self) -> CliResult<Option<TrilayerMedium>> {
        let m = &self.medium;
        match (m.v1, m.v2, m.v3, m.d_nm) {
            (Some(v1), Some(v2), Some(v3), Some(d)) => TrilayerMedium::new(v1, v2, v3, d * 1e-9)
                .map(Some)
                .map_err(|e| CliError::Config(e.to_string())),
            _ => Ok(None),
        }
    }

    /// The medium in dimensionless units (`v2 = d = 1`). Defaults to
    /// `v2/v1 = v2/v3 = 2` when nothing is given.
    pub fn medium(&self) -> CliResult<TrilayerMedium> {
        let m = &self.medium;
        let built = match (m.v2_over_v1, m.v2_over_v3) {
            (Some(a), Some(b)) => TrilayerMedium::from_ratios(a, b),
            _ => match self.physical_medium()? {
                Some(p) => Ok(p.dimensionless()),
                None => TrilayerMedium::from_ratios(2.0, 2.0),
            },
        };
        built.map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn scaled_packet(&self) -> CliResult<ScaledPacket> {
        let p = &self.packet;
        if !(p.x_i < 0.0) {
            return Err(CliError::Config(format!(
                "packet.x_i = {} lies outside layer 1, the interval (-inf, 0)",
                p.x_i
            )));
        }
        if p.k_par < 0.0 {
            return Err(CliError::Config("packet.k_par must be non-negative".into()));
        }
        ScaledPacket::new(p.c, p.x_i, p.sigma_x, p.omega0)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    fn quadrature_settings(&self) -> QuadratureSettings {
        QuadratureSettings {
            tol: self.quadrature.tol,
            truncation_widths: self.quadrature.truncation_widths,
            refinement: self.quadrature.refinement,
            execution: Execution::Parallel,
        }
    }

    pub fn field_settings(&self) -> FieldSettings {
        FieldSettings {
            quadrature: self.quadrature_settings(),
            weight: self.quadrature.omega_weight,
            ..FieldSettings::default()
        }
    }

    fn stem(&self) -> &str {
        if self.output.prefix.is_empty() {
            self.mode.name()
        } else {
            &self.output.prefix
        }
    }

    /// Metadata lines shared by every output file.
    fn header(&self, title: &str) -> String {
        let mut h = String::new();
        let q = &self.quadrature;
        let _ = writeln!(h, "# trilayer {title}");
        let _ = writeln!(h, "# engine_version = {ENGINE_VERSION}");
        let _ = writeln!(
            h,
            "# quadrature = composite Gauss-Kronrod {PANEL_ORDER}-point panels, tol {}, truncation {} widths, refinement {}",
            fmt_f64(q.tol),
            fmt_f64(q.truncation_widths),
            q.refinement
        );
        if let Ok(Some(p)) = self.physical_medium() {
            if self.medium.v2_over_v1.is_none() {
                let _ = writeln!(h, "# t_d_seconds = {}", fmt_f64(p.scale().t_d));
            }
        }
        for (k, v) in self.entries() {
            let _ = writeln!(h, "#! {k} = {v}");
        }
        h
    }
}

/// Files written by a subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct Written {
    pub data: PathBuf,
    pub script: Option<PathBuf>,
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(config: &RunConfig, out: &Path, csv: &str, script: String) -> CliResult<Written> {
    std::fs::create_dir_all(out).map_err(|source| CliError::Io {
        path: out.to_path_buf(),
        source,
    })?;
    let data = out.join(format!("{}.csv", config.stem()));
    write_file(&data, csv)?;
    let script = if config.output.plot {
        let p = out.join(format!("{}.gp", config.stem()));
        write_file(&p, &script)?;
        Some(p)
    } else {
        None
    };
    Ok(Written { data, script })
}

/// Evaluates the configured field grid.
pub fn field_grid(config: &RunConfig) -> CliResult<FieldGrid> {
    let medium = config.medium()?;
    let packet = config.scaled_packet()?;
    let g = &config.grid;
    let xs = linspace(g.x_min, g.x_max, g.x_steps);
    let ts = linspace(g.t_min, g.t_max, g.t_steps);
    let settings = config.field_settings();
    let mut grid = if config.packet.k_par == 0.0 {
        packet_field_grid(&xs, &ts, &medium, &packet, &settings)?
    } else {
        let normal = packet.to_incident(&medium);
        let k = normal.k0_x;
        let kp = config.packet.k_par;
        if !(kp < k) {
            return Err(CliError::Config(format!(
                "packet.k_par = {kp} must be below the carrier wave number {k} in layer 1"
            )));
        }
        let inc = IncidentPacket::new(
            packet.c,
            packet.x_i,
            packet.sigma_x,
            (k * k - kp * kp).sqrt(),
            kp,
        )?;
        let nt = ts.len();
        let samples = settings
            .quadrature
            .execution
            .map_range(xs.len() * nt, |i| {
                packet_field_oblique(xs[i / nt], 0.0, ts[i % nt], &medium, &inc, &settings)
            })
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
        FieldGrid {
            x: xs,
            t: ts,
            samples,
            metadata: Vec::new(),
        }
    };
    grid.metadata = config
        .entries()
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    Ok(grid)
}

pub fn field_csv(config: &RunConfig, grid: &FieldGrid) -> String {
    let mut s = config.header("space-time field");
    let _ = writeln!(s, "# max_error_estimate = {}", fmt_f64(grid.worst_error()));
    s.push_str("x_tilde,t_tilde,f_plus,f_minus,f\n");
    for p in &grid.samples {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_f64(p.x),
            fmt_f64(p.t),
            fmt_f64(p.f_plus),
            fmt_f64(p.f_minus),
            fmt_f64(p.f)
        );
    }
    s
}

fn gnuplot_preamble(stem: &str) -> String {
    format!(
        "set datafile separator ','\nset datafile commentschars '#'\nset terminal pngcairo size 900,700\nset output '{stem}.png'\n"
    )
}

fn field_script(config: &RunConfig) -> String {
    let stem = config.stem();
    format!(
        "{}C = {}\nset xlabel 't~'\nset ylabel 'x~'\nset cblabel 'f_+ sqrt(2 pi) / C'\nset palette rgbformulae 33,13,10\n\
         plot '{stem}.csv' every ::1 using 2:1:($3*sqrt(2*pi)/C) with image notitle\n",
        gnuplot_preamble(stem),
        fmt_f64(config.packet.c)
    )
}

/// Writes `<stem>.csv` and `<stem>.gp`. Fails with a shortfall after writing
/// when any sample missed the quadrature tolerance.
pub fn cmd_field(config: &RunConfig, out: &Path) -> CliResult<Written> {
    let grid = field_grid(config)?;
    let written = emit(config, out, &field_csv(config, &grid), field_script(config))?;
    shortfall_check(
        grid.any_shortfall(),
        grid.worst_error(),
        config.quadrature.tol,
    )?;
    Ok(written)
}

fn shortfall_check(any: bool, worst: f64, tol: f64) -> CliResult<()> {
    if any {
        Err(CliError::Shortfall(format!(
            "worst error estimate {} exceeds tolerance {}; raise quadrature.refinement",
            fmt_f64(worst),
            fmt_f64(tol)
        )))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub omega: f64,
    pub transmission: f64,
    pub reflection: f64,
}

pub fn scan_rows(config: &RunConfig) -> CliResult<Vec<ScanRow>> {
    let medium = config.medium()?;
    let s = &config.scan;
    let omegas = linspace(s.omega_min, s.omega_max, s.steps);
    let rows = Execution::Parallel.map(&omegas, |&w| {
        let sp = SpectralPoint::new(w, s.k_par, &medium);
        probabilities(&medium, &sp).map(|p| ScanRow {
            omega: w,
            transmission: p.transmission,
            reflection: p.reflection,
        })
    });
    rows.into_iter()
        .zip(&omegas)
        .map(|(r, w)| {
            r.map_err(|e| CliError::Config(format!("scan point omega = {}: {e}", fmt_f64(*w))))
        })
        .collect()
}

pub fn cmd_scan(config: &RunConfig, out: &Path) -> CliResult<Written> {
    let rows = scan_rows(config)?;
    let mut s = config.header("transmission spectrum");
    s.push_str("omega_tilde,transmission,reflection,sum\n");
    for r in &rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            fmt_f64(r.omega),
            fmt_f64(r.transmission),
            fmt_f64(r.reflection),
            fmt_f64(r.transmission + r.reflection)
        );
    }
    let stem = config.stem();
    let script = format!(
        "{}set xlabel 'omega~'\nset yrange [0:1.05]\n\
         plot '{stem}.csv' every ::1 using 1:2 with lines title '|t|^2', '' every ::1 using 1:3 with lines title '|r|^2'\n",
        gnuplot_preamble(stem)
    );
    emit(config, out, &s, script)
}

pub fn cmd_propagator(config: &RunConfig, out: &Path) -> CliResult<Written> {
    let medium = config.medium()?;
    let p = &config.propagator;
    crate::green::RegionPair::classify(p.x, p.x_prime, &medium).map_err(|e| {
        CliError::Config(format!(
            "propagator pair x = {}, x' = {}: {e}",
            fmt_f64(p.x),
            fmt_f64(p.x_prime)
        ))
    })?;
    let settings = PropagatorSettings {
        bandwidth: p.bandwidth,
        quadrature: config.quadrature_settings(),
    };
    let taus = linspace(p.tau_min, p.tau_max, p.tau_steps);
    let values = Execution::Parallel
        .map(&taus, |&tau| {
            propagator_g(p.x, p.x_prime, tau, &medium, p.k_par, &settings)
        })
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let mut s = config.header("propagator trace");
    s.push_str("tau_tilde,g,error\n");
    for (tau, v) in taus.iter().zip(&values) {
        let _ = writeln!(s, "{},{},{}", fmt_f64(*tau), fmt_f64(v.g), fmt_f64(v.error));
    }
    let stem = config.stem();
    let script = format!(
        "{}set xlabel 'tau~'\nset ylabel 'g~'\nplot '{stem}.csv' every ::1 using 1:2 with lines notitle\n",
        gnuplot_preamble(stem)
    );
    let written = emit(config, out, &s, script)?;
    let worst = values.iter().map(|v| v.error).fold(0.0, f64::max);
    shortfall_check(
        values.iter().any(|v| v.shortfall),
        worst,
        config.quadrature.tol,
    )?;
    Ok(written)
}

pub fn verify_options(config: &RunConfig) -> VerifyOptions {
    VerifyOptions {
        seed: config.verify.seed,
        unitarity_cases: config.verify.unitarity_cases,
        dual_path_cases: config.verify.dual_path_cases,
        series_cases: config.verify.series_cases,
        field: config.field_settings(),
        propagator: PropagatorSettings {
            bandwidth: config.propagator.bandwidth,
            quadrature: config.quadrature_settings(),
        },
        ..VerifyOptions::default()
    }
}

/// Runs every suite; writes `<out>/verify.json` when `out` is given.
pub fn cmd_verify(config: &RunConfig, out: Option<&Path>, hooks: &Hooks) -> CliResult<Report> {
    let report = run_all(&verify_options(config), hooks);
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let text = serde_json::to_string_pretty(&report.to_json()).expect("json values serialize");
        write_file(&dir.join("verify.json"), &(text + "\n"))?;
    }
    Ok(report)
}
