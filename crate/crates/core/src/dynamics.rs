//! Time-domain integration of the coherent-state Bloch system and of the
//! N-photon Fock hierarchy, plus the closed-form coherent square pulse.
//!
//! Coherent drive with mean photon number `n̄` obeys
//!
//! ```text
//! Σ̇  = −(Γ/2) Σ + 4c f P_e − 2c f
//! Ṗ_e = −Γ P_e − c f Σ,                 c = √(n̄ Γ_P)
//! ```
//!
//! and an N-photon Fock state couples level `n` to level `n − 1` with
//! `c_n = √(n Γ_P)`. Hierarchy states are stored interleaved as
//! `[Σ₀, P₁, Σ₁, P₂, …, Σ_{N−1}, P_N]`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fock_single::check_grid;
use crate::ode::Integrator;
use crate::pulses::{LossModel, PulseShape};

/// Quantum state of the incident field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Field {
    /// Single-photon Fock state.
    Fock1,
    /// Coherent state with mean photon number `nbar`.
    Coherent { nbar: f64 },
    /// Fock state with exactly `photons` photons.
    Fock { photons: u32 },
}

impl Field {
    /// Photon number that sets the Rabi scale (`n̄` or `N`).
    pub fn effective_photons(&self) -> f64 {
        match *self {
            Field::Fock1 => 1.0,
            Field::Coherent { nbar } => nbar,
            Field::Fock { photons } => photons as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Field::Coherent { nbar } if !(nbar > 0.0 && nbar.is_finite()) => {
                Err(Error::InvalidArgument(format!("nbar must be positive, got {nbar}")))
            }
            Field::Fock { photons: 0 } => Err(Error::InvalidArgument("photon number must be at least 1".into())),
            _ => Ok(()),
        }
    }
}

/// What produced an [`ExcitationTrace`].
#[derive(Debug, Clone)]
pub struct Drive {
    pub field: Field,
    /// `None` for the undriven atom.
    pub shape: Option<PulseShape>,
    pub loss: LossModel,
}

/// Solver output: `P_e(t)` and the dipole `Σ(t)` on a time grid.
///
/// For the Fock hierarchy `pe` is the top level `P_{e,N}` and `sigma` is
/// `Σ_{N−1}`.
#[derive(Debug, Clone)]
pub struct ExcitationTrace {
    pub times: Vec<f64>,
    pub pe: Vec<f64>,
    pub sigma: Vec<f64>,
    pub drive: Drive,
}

#[derive(Debug, Clone, Copy)]
enum Model {
    Coherent { coupling: f64 },
    Hierarchy { photons: usize },
}

/// Integrates one drive configuration and can resume from any stored state.
pub struct Propagator<'a> {
    shape: &'a PulseShape,
    loss: LossModel,
    model: Model,
    breaks: Vec<f64>,
    start: f64,
    pub integrator: Integrator,
}

impl<'a> Propagator<'a> {
    pub fn new(shape: &'a PulseShape, loss: LossModel, field: Field) -> Result<Self> {
        field.validate()?;
        let model = match field {
            Field::Fock1 => Model::Hierarchy { photons: 1 },
            Field::Fock { photons } => Model::Hierarchy { photons: photons as usize },
            Field::Coherent { nbar } => Model::Coherent { coupling: (nbar * loss.gamma_p()).sqrt() },
        };
        let (start, _) = shape.integration_window();
        Ok(Self {
            shape,
            loss,
            model,
            breaks: shape.breakpoints(),
            start,
            integrator: Integrator::default(),
        })
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.integrator.rtol = rtol;
        self.integrator.atol = atol;
        self
    }

    /// Time at which the atom is taken to be in its ground state.
    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn dim(&self) -> usize {
        match self.model {
            Model::Coherent { .. } => 2,
            Model::Hierarchy { photons } => 2 * photons,
        }
    }

    /// Ground state: `P_e = 0`, `Σ = 0` at every level.
    pub fn ground_state(&self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    pub fn pe(&self, y: &[f64]) -> f64 {
        y[y.len() - 1]
    }

    pub fn sigma(&self, y: &[f64]) -> f64 {
        y[y.len() - 2]
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let f = self.shape.amplitude(t);
        let gamma = self.loss.gamma_total();
        match self.model {
            Model::Coherent { coupling } => {
                let cf = coupling * f;
                dy[0] = -0.5 * gamma * y[0] + 4.0 * cf * y[1] - 2.0 * cf;
                dy[1] = -gamma * y[1] - cf * y[0];
            }
            Model::Hierarchy { photons } => {
                let gp = self.loss.gamma_p();
                let mut p_below = 0.0;
                for n in 1..=photons {
                    let cf = (gp * n as f64).sqrt() * f;
                    let (s, p) = (y[2 * n - 2], y[2 * n - 1]);
                    dy[2 * n - 2] = -0.5 * gamma * s + 4.0 * cf * p_below - 2.0 * cf;
                    dy[2 * n - 1] = -gamma * p - cf * s;
                    p_below = p;
                }
            }
        }
    }

    /// Advances `y` from `t0` to `t1`, restarting at pulse breakpoints.
    pub fn advance(&self, y: &mut [f64], t0: f64, t1: f64, h: &mut f64) -> Result<()> {
        if t1 <= t0 {
            return Ok(());
        }
        let mut t = t0;
        for &b in self.breaks.iter().filter(|&&b| b > t0 && b < t1) {
            self.segment(y, t, b, h)?;
            t = b;
        }
        self.segment(y, t, t1, h)
    }

    /// One breakpoint-free stretch. The drive is sampled strictly inside the
    /// stretch so a jump at either end is seen from the correct side.
    fn segment(&self, y: &mut [f64], a: f64, b: f64, h: &mut f64) -> Result<()> {
        let (lo, hi) = interior(a, b);
        let mut rhs = |t: f64, y: &[f64], dy: &mut [f64]| self.rhs(t.clamp(lo, hi), y, dy);
        self.integrator.advance(&mut rhs, a, y, b, h)?;
        Ok(())
    }

    /// State at `t1` given state `y0` at `t0`.
    pub fn state_at(&self, y0: &[f64], t0: f64, t1: f64) -> Result<Vec<f64>> {
        let mut y = y0.to_vec();
        let mut h = 0.0;
        self.advance(&mut y, t0, t1, &mut h)?;
        Ok(y)
    }

    /// Integrates from the ground state over a strictly increasing grid and
    /// returns the state at every grid point.
    pub fn run(&self, grid: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_grid(grid)?;
        let mut y = self.ground_state();
        let mut t = self.start.min(grid[0]);
        let mut h = 0.0;
        let mut states = Vec::with_capacity(grid.len());
        for &tg in grid {
            self.advance(&mut y, t, tg, &mut h)?;
            t = tg;
            states.push(y.clone());
        }
        Ok(states)
    }

    pub fn trace(&self, grid: &[f64], field: Field) -> Result<ExcitationTrace> {
        let states = self.run(grid)?;
        Ok(ExcitationTrace {
            times: grid.to_vec(),
            pe: states.iter().map(|y| self.pe(y)).collect(),
            sigma: states.iter().map(|y| self.sigma(y)).collect(),
            drive: Drive { field, shape: Some(self.shape.clone()), loss: self.loss },
        })
    }
}

/// `[a, b]` pulled in by a relative `1e-12` so one-sided limits are sampled.
pub(crate) fn interior(a: f64, b: f64) -> (f64, f64) {
    let d = 1e-12 * (b - a);
    (a + d, b - d)
}

/// Coherent-state drive through the optical Bloch equations.
pub fn integrate_coherent(shape: &PulseShape, loss: &LossModel, nbar: f64, grid: &[f64]) -> Result<ExcitationTrace> {
    let field = Field::Coherent { nbar };
    Propagator::new(shape, *loss, field)?.trace(grid, field)
}

/// N-photon Fock drive through the `2N`-dimensional hierarchy.
pub fn integrate_fock_hierarchy(shape: &PulseShape, loss: &LossModel, photons: u32, grid: &[f64]) -> Result<ExcitationTrace> {
    let field = Field::Fock { photons };
    Propagator::new(shape, *loss, field)?.trace(grid, field)
}

/// Any supported field; `Fock1` runs the one-level hierarchy.
pub fn integrate(shape: &PulseShape, loss: &LossModel, field: Field, grid: &[f64]) -> Result<ExcitationTrace> {
    Propagator::new(shape, *loss, field)?.trace(grid, field)
}

/// Trace of an undriven atom starting in its ground state (identically zero).
pub fn integrate_free(loss: &LossModel, field: Field, grid: &[f64]) -> Result<ExcitationTrace> {
    check_grid(grid)?;
    field.validate()?;
    Ok(ExcitationTrace {
        times: grid.to_vec(),
        pe: vec![0.0; grid.len()],
        sigma: vec![0.0; grid.len()],
        drive: Drive { field, shape: None, loss: *loss },
    })
}

/// Rabi scale `Ω₀ = 2√(n̄ Γ_P / T)` of a square pulse.
pub fn square_rabi(loss: &LossModel, nbar: f64, duration: f64) -> f64 {
    2.0 * (nbar * loss.gamma_p() / duration).sqrt()
}

/// Exact `P_e(t)` for a coherent square pulse of duration `T` in the
/// oscillatory regime `Ω² = Ω₀² − Γ²/16 > 0`; after the pulse it decays at `Γ`.
pub fn coherent_square_exact(loss: &LossModel, nbar: f64, duration: f64, t: f64) -> Result<f64> {
    if !(nbar > 0.0 && duration > 0.0) {
        return Err(Error::InvalidArgument("nbar and T must be positive".into()));
    }
    let gamma = loss.gamma_total();
    let w0 = square_rabi(loss, nbar, duration);
    let omega_sq = w0 * w0 - gamma * gamma / 16.0;
    if omega_sq <= 0.0 {
        return Err(Error::OverdampedRegime { omega_sq });
    }
    if t <= 0.0 {
        return Ok(0.0);
    }
    let omega = omega_sq.sqrt();
    let tt = t.min(duration);
    let ring = (-0.75 * gamma * tt).exp() * ((omega * tt).cos() + 0.75 * gamma / omega * (omega * tt).sin());
    let at = w0 * w0 / (gamma * gamma + 2.0 * w0 * w0) * (1.0 - ring);
    Ok(at * (-gamma * (t - tt)).exp())
}

/// The π-pulse branch of the coherent square pulse: the shortest `T` whose
/// interior maximum `t = π/Ω` still falls inside the pulse, and the value
/// reached there. Returns `(T, P_e)`.
pub fn coherent_square_pi_branch(loss: &LossModel, nbar: f64) -> Result<(f64, f64)> {
    let gamma = loss.gamma_total();
    let s = nbar * loss.gamma_p();
    // ΩT = π  ⇔  Γ²T² − 64 n̄Γ_P T + 16π² = 0
    let reach = 8.0 * s / gamma;
    if reach < PI {
        return Err(Error::UnreachableArea { total: reach });
    }
    let duration = if gamma == 0.0 {
        PI * PI / (4.0 * s)
    } else {
        let b = 32.0 * s;
        let disc = (b * b - 16.0 * PI * PI * gamma * gamma).sqrt();
        // smaller root, written to avoid cancellation
        16.0 * PI * PI / (b + disc)
    };
    let x = 4.0 * s / duration;
    let pe = x / (gamma * gamma + 2.0 * x)
        * (1.0 + (-3.0 * PI * gamma / (16.0 * x - gamma * gamma).sqrt()).exp());
    Ok((duration, pe))
}

/// Quasi-steady response `4n̄Γ_P f² / (Γ² + 8n̄Γ_P f²)` of a long pulse.
pub fn adiabatic_pe(shape: &PulseShape, loss: &LossModel, nbar: f64, t: f64) -> f64 {
    let f = shape.amplitude(t);
    let x = nbar * loss.gamma_p() * f * f;
    let gamma = loss.gamma_total();
    if x == 0.0 {
        return 0.0;
    }
    4.0 * x / (gamma * gamma + 8.0 * x)
}

/// Upper limit on trace length.
pub const MAX_GRID_POINTS: usize = 50_000;

/// Evenly spaced grid covering the pulse and the subsequent decay.
///
/// Spacing resolves both the pulse (`≤ L/points`) and the fastest Rabi
/// oscillation (`≤` one eighth of a π time), capped at [`MAX_GRID_POINTS`].
pub fn default_grid(shape: &PulseShape, loss: &LossModel, field: Field, points: usize) -> Vec<f64> {
    let (a, b) = observation_window(shape, loss);
    let len = b - a;
    let peak_f = peak_amplitude(shape);
    let rabi = 2.0 * (field.effective_photons() * loss.gamma_p()).sqrt() * peak_f;
    let mut dt = len / points.max(2) as f64;
    if rabi > 0.0 {
        dt = dt.min(PI / rabi / 8.0);
    }
    let n = ((len / dt).ceil() as usize).clamp(2, MAX_GRID_POINTS);
    (0..=n).map(|i| a + len * i as f64 / n as f64).collect()
}

/// Pulse support plus a few decay times afterwards.
pub fn observation_window(shape: &PulseShape, loss: &LossModel) -> (f64, f64) {
    let (a, b) = shape.integration_window();
    let gamma = loss.gamma_total();
    (a, b + (b - a).min(8.0 / gamma))
}

fn peak_amplitude(shape: &PulseShape) -> f64 {
    match *shape {
        PulseShape::Square { duration } => duration.sqrt().recip(),
        PulseShape::Gaussian { .. } => shape.amplitude(0.0),
        PulseShape::DecayingExp { .. } => shape.amplitude(0.0),
        PulseShape::RisingExp { anchor, .. } => shape.amplitude(anchor),
        _ => {
            let (a, b) = shape.integration_window();
            (0..=2000)
                .map(|i| shape.amplitude(a + (b - a) * i as f64 / 2000.0).abs())
                .fold(0.0, f64::max)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock_single::closed_form_pe;

    fn lin(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
    }

    #[test]
    fn coherent_square_matches_exact() {
        let loss = LossModel::new(1.0, 0.3).unwrap();
        let sq = PulseShape::square(1.7).unwrap();
        let grid = lin(0.0, 3.0, 60);
        let tr = integrate_coherent(&sq, &loss, 2.5, &grid).unwrap();
        for (t, p) in tr.times.iter().zip(&tr.pe) {
            let exact = coherent_square_exact(&loss, 2.5, 1.7, *t).unwrap();
            assert!((p - exact).abs() < 1e-8, "t={t} {p} {exact}");
        }
    }

    #[test]
    fn lossless_rabi_flopping() {
        // Γ → 0 is approached by shrinking Γ_P and scaling n̄ up.
        let loss = LossModel::new(1e-9, 0.0).unwrap();
        let nbar = 1e9;
        let t_len = 2.0;
        let w0 = square_rabi(&loss, nbar, t_len);
        for &t in &[0.3, 1.1, 1.9] {
            let p = coherent_square_exact(&loss, nbar, t_len, t).unwrap();
            assert!((p - (w0 * t / 2.0).sin().powi(2)).abs() < 1e-8);
        }
    }

    #[test]
    fn overdamped_is_rejected() {
        let loss = LossModel::new(1.0, 10.0).unwrap();
        let r = coherent_square_exact(&loss, 0.1, 5.0, 1.0);
        assert!(matches!(r, Err(Error::OverdampedRegime { .. })));
    }

    #[test]
    fn pi_branch_value() {
        let (t, pe) = coherent_square_pi_branch(&LossModel::lossless(), 1.0).unwrap();
        assert!((pe - 0.433_441_444_506).abs() < 1e-10, "{pe}");
        // at that T the interior maximum sits exactly at the pulse end
        let w = (square_rabi(&LossModel::lossless(), 1.0, t).powi(2) - 1.0 / 16.0).sqrt();
        assert!((w * t - PI).abs() < 1e-12);
        let direct = coherent_square_exact(&LossModel::lossless(), 1.0, t, t).unwrap();
        assert!((direct - pe).abs() < 1e-12);
    }

    #[test]
    fn hierarchy_n1_is_single_photon() {
        let loss = LossModel::new(1.0, 0.25).unwrap();
        let g = PulseShape::gaussian(1.3).unwrap();
        let grid = default_grid(&g, &loss, Field::Fock1, 300);
        let tr = integrate_fock_hierarchy(&g, &loss, 1, &grid).unwrap();
        for (t, p) in tr.times.iter().zip(&tr.pe) {
            assert!((p - closed_form_pe(&g, &loss, *t).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_photons_rejected() {
        let g = PulseShape::gaussian(1.0).unwrap();
        let r = integrate_fock_hierarchy(&g, &LossModel::lossless(), 0, &[0.0, 1.0]);
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn free_decay_after_square_pulse() {
        let loss = LossModel::new(1.0, 0.5).unwrap();
        let sq = PulseShape::square(1.2).unwrap();
        let grid = lin(0.0, 4.0, 80);
        let tr = integrate_coherent(&sq, &loss, 3.0, &grid).unwrap();
        let i_end = grid.iter().position(|&t| t >= 1.2).unwrap();
        let p_end = tr.pe[i_end];
        for i in i_end..grid.len() {
            let expect = p_end * (-1.5 * (grid[i] - grid[i_end])).exp();
            assert!((tr.pe[i] - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn adiabatic_limits() {
        let loss = LossModel::lossless();
        let sq = PulseShape::square(4.0).unwrap();
        assert_eq!(adiabatic_pe(&sq, &loss, 1.0, -1.0), 0.0);
        // n̄Γ_P/T = Γ²/8
        assert!((adiabatic_pe(&sq, &loss, 0.5, 1.0) - 0.25).abs() < 1e-15);
        assert!((adiabatic_pe(&sq, &loss, 1e12, 1.0) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn grid_resolves_rabi_period() {
        let sq = PulseShape::square(1.0).unwrap();
        let grid = default_grid(&sq, &LossModel::lossless(), Field::Coherent { nbar: 1e4 }, 100);
        let dt = grid[1] - grid[0];
        assert!(dt <= PI / (2.0 * 100.0) / 8.0 + 1e-15);
        assert!(grid.len() <= MAX_GRID_POINTS + 1);
    }
}
