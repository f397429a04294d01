use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid medium: {0}")]
    InvalidMedium(String),

    /// A perpendicular wave vector vanished, i.e. omega = v * k_par exactly.
    #[error(
        "channel cutoff: perpendicular wave vector vanishes in layer {layer} at omega = {omega}"
    )]
    Cutoff { layer: u8, omega: f64 },

    /// Zero wave vector on one side of a single interface.
    #[error("interface cutoff: perpendicular wave vector vanishes on the {side} side")]
    InterfaceCutoff { side: &'static str },

    #[error("degenerate spectral point: k_gt + k_lt = 0")]
    DegenerateSpectralPoint,

    #[error("pole: {what} vanishes")]
    Pole { what: &'static str },

    #[error("region pair (x in layer {x_layer}, x' in layer {xp_layer}) is not covered")]
    UnsupportedRegion { x_layer: u8, xp_layer: u8 },

    #[error("evanescent regime: k_perp in layer {layer} is not real")]
    Evanescent { layer: u8 },

    #[error("non-finite integrand at omega = {omega}")]
    NonFiniteIntegrand { omega: f64 },

    #[error("invalid quadrature spec: {0}")]
    InvalidQuadrature(String),

    #[error("invalid packet: {0}")]
    InvalidPacket(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("config error: {0}")]
    Config(String),
}
