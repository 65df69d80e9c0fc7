//! Single-photon (Fock `N = 1`) excitation.
//!
//! For a real envelope the atom's excitation is
//! `P_e(t) = Γ_P e^{-Γt} (∫_{-∞}^t e^{Γt'/2} f(t') dt')²`. The inner integral
//! is accumulated grid cell by grid cell as
//! `J(t) = ∫ e^{Γ(t'−t)/2} f(t') dt'`, which never overflows, so that
//! `P_e = Γ_P J²`.

use num_complex::Complex64;

use crate::dynamics::interior;
use crate::error::{Error, Result};
use crate::ode::Integrator;
use crate::pulses::{CavityFilter, LossModel, PulseShape};
use crate::quadrature;
use crate::special_functions::erfc;

const SEGMENT_TOL: f64 = 1e-14;

/// `P_e(t)` on a time grid for a single-photon pulse.
#[derive(Debug, Clone)]
pub struct Fock1Result {
    pub times: Vec<f64>,
    pub pe: Vec<f64>,
    pub shape: PulseShape,
    pub loss: LossModel,
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("time grid is empty".into()));
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("time grid contains non-finite values".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Advances `J` from `a` to `b`: `J(b) = e^{-Γ(b−a)/2} J(a) + ∫_a^b e^{Γ(t'−b)/2} f`.
fn advance_amplitude(shape: &PulseShape, gamma: f64, window: (f64, f64), breaks: &[f64], j: f64, a: f64, b: f64) -> f64 {
    let carried = (-0.5 * gamma * (b - a)).exp() * j;
    let lo = a.max(window.0);
    let hi = b.min(window.1);
    if hi <= lo {
        return carried;
    }
    let drive = quadrature::integrate_piecewise(
        |t| (0.5 * gamma * (t - b)).exp() * shape.amplitude(t),
        lo,
        hi,
        breaks,
        SEGMENT_TOL,
    );
    carried + drive
}

/// Excitation probability on `grid` by cumulative quadrature of the
/// single-integral form.
pub fn pe_trace_fock1(shape: &PulseShape, loss: &LossModel, grid: &[f64]) -> Result<Fock1Result> {
    check_grid(grid)?;
    let gamma = loss.gamma_total();
    let window = shape.integration_window();
    let breaks = shape.breakpoints();
    let mut pe = Vec::with_capacity(grid.len());
    let mut j = 0.0;
    let mut t_prev = window.0;
    for &t in grid {
        if t <= window.0 {
            pe.push(0.0);
            continue;
        }
        j = advance_amplitude(shape, gamma, window, &breaks, j, t_prev, t);
        t_prev = t;
        pe.push(loss.gamma_p() * j * j);
    }
    Ok(Fock1Result { times: grid.to_vec(), pe, shape: shape.clone(), loss: *loss })
}

/// `P_e(t)` at a single time.
pub fn pe_fock1_at(shape: &PulseShape, loss: &LossModel, t: f64) -> f64 {
    let window = shape.integration_window();
    if t <= window.0 {
        return 0.0;
    }
    let j = advance_amplitude(shape, loss.gamma_total(), window, &shape.breakpoints(), 0.0, window.0, t);
    loss.gamma_p() * j * j
}

/// Analytic `P_e(t)` for the shapes that admit one.
pub fn closed_form_pe(shape: &PulseShape, loss: &LossModel, t: f64) -> Result<f64> {
    let gp = loss.gamma_p();
    let gamma = loss.gamma_total();
    match *shape {
        PulseShape::Square { duration } => {
            if t <= 0.0 {
                return Ok(0.0);
            }
            let tt = t.min(duration);
            let rise = -(-0.5 * gamma * tt).exp_m1();
            let at = 4.0 * gp / (gamma * gamma * duration) * rise * rise;
            Ok(at * (-gamma * (t - tt)).exp())
        }
        PulseShape::Gaussian { duration } => {
            let x = t / duration - gamma * duration / 4.0;
            let e = erfc(-x);
            if e == 0.0 {
                return Ok(0.0);
            }
            let log_p = ((2.0 * std::f64::consts::PI).sqrt() * gp * duration / 4.0).ln() - gamma * t
                + gamma * gamma * duration * duration / 8.0
                + 2.0 * e.ln();
            Ok(log_p.exp())
        }
        PulseShape::DecayingExp { duration } => {
            if t <= 0.0 {
                return Ok(0.0);
            }
            // (e^{-t/T} − e^{-Γt/2}) / (ΓT − 2) written through expm1.
            let d = 0.5 * gamma - 1.0 / duration;
            let ratio = if d == 0.0 {
                (-t / duration).exp() * t / (2.0 * duration)
            } else {
                (-t / duration).exp() * (-(-d * t).exp_m1()) / (2.0 * d * duration)
            };
            Ok(8.0 * gp * duration * ratio * ratio)
        }
        PulseShape::RisingExp { duration, anchor } => {
            let m = t.min(anchor);
            let rate = 0.5 * gamma + 1.0 / duration;
            let j = (2.0 / duration).sqrt() * (0.5 * gamma * (m - t) + (m - anchor) / duration).exp() / rate;
            Ok(gp * j * j)
        }
        PulseShape::AtomCavityDecay { g, kappa } => {
            if t <= 0.0 {
                return Ok(0.0);
            }
            let j = cavity_amplitude_integral(g, kappa, gamma, t);
            Ok(gp * j * j)
        }
        PulseShape::Tabulated(_) => Err(Error::InvalidArgument(
            "no closed form exists for tabulated pulses".into(),
        )),
    }
}

/// `∫₀^t e^{Γ(t'−t)/2} f(t') dt'` for the atom–cavity decay pulse.
fn cavity_amplitude_integral(g: f64, kappa: f64, gamma: f64, t: f64) -> f64 {
    let pref = g * (2.0 * kappa).sqrt();
    let half = 0.5 * gamma;
    let s = Complex64::new(kappa * kappa - 4.0 * g * g, 0.0).sqrt();
    if s.norm() < 1e-6 * kappa {
        // critically damped: f = pref · t e^{-κt/2}
        let w = half - 0.5 * kappa;
        let u = w * t;
        let h = if u.abs() < 1e-4 {
            0.5 + u / 3.0 + u * u / 8.0 + u * u * u / 30.0
        } else {
            (u * u.exp() - u.exp() + 1.0) / (u * u)
        };
        return pref * (-half * t).exp() * t * t * h;
    }
    // φ(z) = ∫₀^t e^{-z t'} e^{Γ(t'−t)/2} dt'
    let phi = |z: Complex64| -> Complex64 {
        let w = half - z;
        let u = w * t;
        if u.norm() < 1e-5 {
            (-half * t).exp() * t * (1.0 + u / 2.0 + u * u / 6.0)
        } else {
            ((-z * t).exp() - (-half * t).exp()) / w
        }
    };
    let a = (kappa - s) / 2.0;
    let b = (kappa + s) / 2.0;
    (pref * (phi(a) - phi(b)) / s).re
}

/// Upper bound `(Γ_P/Γ) ∫_{-∞}^{t0} f²` on `P_e(t0)`.
pub fn cauchy_schwarz_bound(shape: &PulseShape, loss: &LossModel, t0: f64) -> f64 {
    loss.coupling_ratio() * shape.cumulative_norm(t0)
}

/// The rising exponential matched to `Γ`, which attains the bound at `t0`.
pub fn optimal_rising_profile(loss: &LossModel, t0: f64) -> PulseShape {
    PulseShape::rising_exp_matched(loss.gamma_total(), t0).expect("loss rates are positive")
}

/// Single-photon excitation by `inner` after reflection from a single-sided
/// atom–cavity filter, computed by integrating the filter and the target
/// atom together (the target sees `f_out` as it is produced).
pub struct CascadedFilter<'a> {
    pub inner: &'a PulseShape,
    pub filter: CavityFilter,
    pub loss: LossModel,
    integrator: Integrator,
}

impl<'a> CascadedFilter<'a> {
    pub fn new(inner: &'a PulseShape, g: f64, kappa: f64, loss: LossModel) -> Self {
        Self {
            inner,
            filter: CavityFilter { g, kappa },
            loss,
            integrator: Integrator { rtol: 1e-10, atol: 1e-13, ..Integrator::default() },
        }
    }

    pub fn start(&self) -> f64 {
        self.inner.integration_window().0
    }

    /// End of the interval where the filtered pulse still carries norm.
    pub fn horizon(&self) -> f64 {
        let (a, b) = self.inner.integration_window();
        let slow = self.filter.kappa.min(self.filter.g * self.filter.g / self.filter.kappa.max(1e-300));
        let slow = slow.max(1e-3 * self.filter.kappa);
        b + (b - a).min(10.0 / self.loss.gamma_total()) + 50.0 / slow
    }

    /// Advances state `(c, a, J)` from `t0` to `t1`.
    pub fn advance(&self, state: &mut [f64; 3], t0: f64, t1: f64, h: &mut f64) -> Result<()> {
        let half = 0.5 * self.loss.gamma_total();
        let filter = self.filter;
        let inner = self.inner;
        let breaks = inner.breakpoints();
        let mut t = t0;
        let ends = breaks.iter().copied().filter(|&b| b > t0 && b < t1).chain(std::iter::once(t1));
        for b in ends {
            let (lo, hi) = interior(t, b);
            let mut rhs = |s: f64, y: &[f64], dy: &mut [f64]| {
                let f_in = inner.amplitude(s.clamp(lo, hi));
                filter.derivative(&y[..2], f_in, &mut dy[..2]);
                dy[2] = -half * y[2] + filter.output(&y[..2], f_in);
            };
            self.integrator.advance(&mut rhs, t, state, b, h)?;
            t = b;
        }
        Ok(())
    }

    pub fn pe(&self, state: &[f64; 3]) -> f64 {
        self.loss.gamma_p() * state[2] * state[2]
    }

    /// `P_e` and states on a strictly increasing grid starting at or after [`Self::start`].
    pub fn trace(&self, grid: &[f64]) -> Result<(Vec<f64>, Vec<[f64; 3]>)> {
        check_grid(grid)?;
        let mut state = [0.0; 3];
        let mut t = self.start();
        let mut h = 0.0;
        let mut pe = Vec::with_capacity(grid.len());
        let mut states = Vec::with_capacity(grid.len());
        for &tg in grid {
            if tg > t {
                self.advance(&mut state, t, tg, &mut h)?;
                t = tg;
            }
            pe.push(self.pe(&state));
            states.push(state);
        }
        Ok((pe, states))
    }
}
