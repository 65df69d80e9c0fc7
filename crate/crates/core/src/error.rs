use thiserror::Error;

/// Errors produced by the simulation, optimization and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time {t} is outside the tabulated range [{start}, {end}]")]
    OutOfDomain { t: f64, start: f64, end: f64 },

    #[error("value {0} is outside the domain (-1, 1) of the inverse error function")]
    InverseErfDomain(f64),

    #[error("cavity output norm {norm:e} is degenerate")]
    DegenerateOutput { norm: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    Stiffness { t: f64, h: f64 },

    #[error("integrator exceeded {0} steps")]
    TooManySteps(usize),

    #[error("square-pulse exact solution requires the oscillatory regime (Ω² = {omega_sq:e} <= 0)")]
    OverdampedRegime { omega_sq: f64 },

    #[error("total pulse area {total} never reaches π")]
    UnreachableArea { total: f64 },

    #[error("pulse area {theta} is outside [0, {total})")]
    AreaOutOfRange { theta: f64, total: f64 },

    #[error("excitation probability {pe} at t = {t} is unphysical; the photon-number hierarchy has lost precision")]
    Unphysical { pe: f64, t: f64 },

    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
