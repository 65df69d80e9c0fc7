//! Temporal pulse envelopes `f(t)` and the loss model they are scored against.
//!
//! All envelopes are real and normalized so that `∫ f(t)² dt = 1`; amplitudes
//! carry units of `time^(-1/2)`.

use std::f64::consts::PI;

use crate::dynamics::interior;
use crate::error::{Error, Result};
use crate::ode::Integrator;
use crate::quadrature;
use crate::special_functions::erfc;

/// Per-side tail norm used when truncating pulses for integration.
///
/// The neglected *amplitude* integral scales like the square root of this,
/// so it is far below the reporting tolerance `DEFAULT_EPS`.
pub const INTEGRATION_EPS: f64 = 1e-20;

/// Default per-side tail norm for [`PulseShape::support_window`].
pub const DEFAULT_EPS: f64 = 1e-9;

/// Tail norm used by [`PulseShape::normalization_deviation`].
const NORM_EPS: f64 = 1e-18;

/// Coupling `Γ_P` to the pulse modes and `Γ_B` to unobserved bath modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossModel {
    gamma_p: f64,
    gamma_b: f64,
}

impl LossModel {
    pub fn new(gamma_p: f64, gamma_b: f64) -> Result<Self> {
        if !(gamma_p > 0.0 && gamma_p.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma_p must be positive, got {gamma_p}")));
        }
        if !(gamma_b >= 0.0 && gamma_b.is_finite()) {
            return Err(Error::InvalidArgument(format!("gamma_b must be non-negative, got {gamma_b}")));
        }
        Ok(Self { gamma_p, gamma_b })
    }

    /// `Γ_P = 1`, `Γ_B = 0`.
    pub fn lossless() -> Self {
        Self { gamma_p: 1.0, gamma_b: 0.0 }
    }

    /// Loss model with `Γ_P / (Γ_P + Γ_B) = ratio` and unit total rate.
    pub fn from_coupling_ratio(ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::InvalidArgument(format!("coupling ratio must lie in (0, 1], got {ratio}")));
        }
        Self::new(ratio, 1.0 - ratio)
    }

    pub fn gamma_p(&self) -> f64 {
        self.gamma_p
    }

    pub fn gamma_b(&self) -> f64 {
        self.gamma_b
    }

    /// `Γ = Γ_P + Γ_B`.
    pub fn gamma_total(&self) -> f64 {
        self.gamma_p + self.gamma_b
    }

    /// `Γ_P / Γ`, the best single-photon excitation probability.
    pub fn coupling_ratio(&self) -> f64 {
        self.gamma_p / self.gamma_total()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PulseKind {
    Square,
    Gaussian,
    DecayingExp,
    RisingExp,
    AtomCavityDecay,
    Tabulated,
}

impl PulseKind {
    pub fn name(&self) -> &'static str {
        match self {
            PulseKind::Square => "square",
            PulseKind::Gaussian => "gaussian",
            PulseKind::DecayingExp => "decayingexp",
            PulseKind::RisingExp => "risingexp",
            PulseKind::AtomCavityDecay => "cavity",
            PulseKind::Tabulated => "tabulated",
        }
    }
}

/// Piecewise-linear envelope on strictly increasing sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Tabulated {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn interpolate(&self, t: f64) -> Option<f64> {
        let (first, last) = (self.times[0], *self.times.last().unwrap());
        if !(t >= first && t <= last) {
            return None;
        }
        let i = match self.times.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => return Some(self.values[i]),
            Err(i) => i,
        };
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        let s = (t - t0) / (t1 - t0);
        Some(v0 + s * (v1 - v0))
    }

    /// Exact `∫ f²` of the linear interpolant up to `t`.
    fn cumulative_norm(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for i in 1..self.times.len() {
            let (t0, t1) = (self.times[i - 1], self.times[i]);
            if t <= t0 {
                break;
            }
            let (a, b) = (self.values[i - 1], self.values[i]);
            if t >= t1 {
                acc += (t1 - t0) * (a * a + a * b + b * b) / 3.0;
            } else {
                let bt = self.interpolate(t).unwrap();
                acc += (t - t0) * (a * a + a * bt + bt * bt) / 3.0;
                break;
            }
        }
        acc
    }
}

/// A normalized real pulse envelope.
#[derive(Debug, Clone, PartialEq)]
pub enum PulseShape {
    /// `1/√T` on `[0, T]`.
    Square { duration: f64 },
    /// `e^{-t²/T²} / √(T √(π/2))`, centred at `t = 0`.
    Gaussian { duration: f64 },
    /// `√(2/T) e^{-t/T}` for `t ≥ 0`.
    DecayingExp { duration: f64 },
    /// `√(2/T) e^{(t - t₀)/T}` for `t ≤ t₀`.
    RisingExp { duration: f64, anchor: f64 },
    /// Field emitted by an initially excited atom in a single-sided cavity.
    AtomCavityDecay { g: f64, kappa: f64 },
    Tabulated(Tabulated),
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")))
    }
}

impl PulseShape {
    pub fn square(duration: f64) -> Result<Self> {
        Ok(Self::Square { duration: positive("duration", duration)? })
    }

    pub fn gaussian(duration: f64) -> Result<Self> {
        Ok(Self::Gaussian { duration: positive("duration", duration)? })
    }

    pub fn decaying_exp(duration: f64) -> Result<Self> {
        Ok(Self::DecayingExp { duration: positive("duration", duration)? })
    }

    pub fn rising_exp(duration: f64, anchor: f64) -> Result<Self> {
        if !anchor.is_finite() {
            return Err(Error::InvalidArgument("anchor must be finite".into()));
        }
        Ok(Self::RisingExp { duration: positive("duration", duration)?, anchor })
    }

    /// Rising exponential whose growth rate matches the atomic decay `rate`,
    /// i.e. `f = √rate · e^{rate (t − t₀)/2}`.
    pub fn rising_exp_matched(rate: f64, anchor: f64) -> Result<Self> {
        Self::rising_exp(2.0 / positive("rate", rate)?, anchor)
    }

    pub fn atom_cavity_decay(g: f64, kappa: f64) -> Result<Self> {
        Ok(Self::AtomCavityDecay { g: positive("g", g)?, kappa: positive("kappa", kappa)? })
    }

    /// Builds a tabulated pulse, rescaling it to unit norm when it is off by
    /// more than `1e-12`.
    pub fn tabulated(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() || times.len() < 2 {
            return Err(Error::InvalidArgument(
                "tabulated pulse needs at least two (time, amplitude) pairs".into(),
            ));
        }
        if times.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("tabulated samples must be finite".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("tabulated times must be strictly increasing".into()));
        }
        let mut tab = Tabulated { times, values };
        let norm = tab.cumulative_norm(f64::INFINITY);
        if norm < 1e-300 {
            return Err(Error::DegenerateOutput { norm });
        }
        if (norm - 1.0).abs() > 1e-12 {
            let scale = norm.sqrt().recip();
            tab.values.iter_mut().for_each(|v| *v *= scale);
        }
        Ok(Self::Tabulated(tab))
    }

    pub fn kind(&self) -> PulseKind {
        match self {
            Self::Square { .. } => PulseKind::Square,
            Self::Gaussian { .. } => PulseKind::Gaussian,
            Self::DecayingExp { .. } => PulseKind::DecayingExp,
            Self::RisingExp { .. } => PulseKind::RisingExp,
            Self::AtomCavityDecay { .. } => PulseKind::AtomCavityDecay,
            Self::Tabulated(_) => PulseKind::Tabulated,
        }
    }

    /// Duration parameter `T` for the four single-timescale families.
    pub fn duration(&self) -> Option<f64> {
        match *self {
            Self::Square { duration }
            | Self::Gaussian { duration }
            | Self::DecayingExp { duration }
            | Self::RisingExp { duration, .. } => Some(duration),
            _ => None,
        }
    }

    /// Timescale used to build the dimensionless envelope `√T f(t)`.
    pub fn characteristic_time(&self) -> f64 {
        match self {
            Self::AtomCavityDecay { kappa, .. } => 1.0 / kappa,
            Self::Tabulated(tab) => tab.times.last().unwrap() - tab.times[0],
            other => other.duration().unwrap(),
        }
    }

    /// `f(t)`; fails only for tabulated pulses queried outside their samples.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        match self {
            Self::Tabulated(tab) => tab.interpolate(t).ok_or(Error::OutOfDomain {
                t,
                start: tab.times[0],
                end: *tab.times.last().unwrap(),
            }),
            _ => Ok(self.amplitude(t)),
        }
    }

    /// `f(t)` with zero outside the support (and outside tabulated samples).
    pub fn amplitude(&self, t: f64) -> f64 {
        match *self {
            Self::Square { duration } => {
                if (0.0..=duration).contains(&t) {
                    duration.sqrt().recip()
                } else {
                    0.0
                }
            }
            Self::Gaussian { duration } => {
                let u = t / duration;
                (-u * u).exp() / (duration * (PI / 2.0).sqrt()).sqrt()
            }
            Self::DecayingExp { duration } => {
                if t < 0.0 {
                    0.0
                } else {
                    (2.0 / duration).sqrt() * (-t / duration).exp()
                }
            }
            Self::RisingExp { duration, anchor } => {
                if t > anchor {
                    0.0
                } else {
                    (2.0 / duration).sqrt() * ((t - anchor) / duration).exp()
                }
            }
            Self::AtomCavityDecay { g, kappa } => cavity_decay_amplitude(g, kappa, t),
            Self::Tabulated(ref tab) => tab.interpolate(t).unwrap_or(0.0),
        }
    }

    /// Times at which `f` or its derivative jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Square { duration } => vec![0.0, *duration],
            Self::Gaussian { .. } => vec![],
            Self::DecayingExp { .. } | Self::AtomCavityDecay { .. } => vec![0.0],
            Self::RisingExp { anchor, .. } => vec![*anchor],
            Self::Tabulated(tab) => tab.times.clone(),
        }
    }

    /// Smallest window with less than `eps` of the norm outside on each side.
    pub fn support_window(&self, eps: f64) -> Result<(f64, f64)> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidArgument(format!("eps must lie in (0, 1), got {eps}")));
        }
        let half_log = 0.5 * (1.0 / eps).ln();
        Ok(match self {
            Self::Square { duration } => (0.0, *duration),
            Self::DecayingExp { duration } => (0.0, duration * half_log),
            Self::RisingExp { duration, anchor } => (anchor - duration * half_log, *anchor),
            Self::Gaussian { duration } => {
                // ∫_a^∞ f² = erfc(√2 a / T) / 2
                let tail = |a: f64| 0.5 * erfc(std::f64::consts::SQRT_2 * a / duration);
                let a = bisect_decreasing(tail, eps, 0.0, *duration);
                (-a, a)
            }
            Self::AtomCavityDecay { g, kappa } => {
                let (g, kappa) = (*g, *kappa);
                let end = bisect_decreasing(|t| cavity_decay_tail(g, kappa, t), eps, 0.0, 1.0 / kappa);
                (0.0, end)
            }
            Self::Tabulated(tab) => {
                let total = tab.cumulative_norm(f64::INFINITY);
                let (t0, t1) = (tab.times[0], *tab.times.last().unwrap());
                let start = bisect_increasing(|t| tab.cumulative_norm(t), eps, t0, t1);
                let end = bisect_decreasing(|t| total - tab.cumulative_norm(t), eps, t0, t1);
                (start.min(end), end.max(start))
            }
        })
    }

    /// Window used to start and stop time integration.
    pub fn integration_window(&self) -> (f64, f64) {
        self.support_window(INTEGRATION_EPS).expect("constant eps is valid")
    }

    /// `∫_{-∞}^t f(s)² ds`.
    pub fn cumulative_norm(&self, t: f64) -> f64 {
        match *self {
            Self::Square { duration } => (t / duration).clamp(0.0, 1.0),
            Self::Gaussian { duration } => 0.5 * erfc(-std::f64::consts::SQRT_2 * t / duration),
            Self::DecayingExp { duration } => {
                if t <= 0.0 {
                    0.0
                } else {
                    -(-2.0 * t / duration).exp_m1()
                }
            }
            Self::RisingExp { duration, anchor } => {
                if t >= anchor {
                    1.0
                } else {
                    (2.0 * (t - anchor) / duration).exp()
                }
            }
            Self::AtomCavityDecay { .. } => {
                if t <= 0.0 {
                    return 0.0;
                }
                let f = |s: f64| self.amplitude(s).powi(2);
                quadrature::integrate(f, 0.0, t, 1e-15)
            }
            Self::Tabulated(ref tab) => tab.cumulative_norm(t),
        }
    }

    /// `|∫ f² dt − 1|` by adaptive quadrature over the (nearly complete) support.
    pub fn normalization_deviation(&self) -> f64 {
        let (a, b) = self.support_window(NORM_EPS).expect("constant eps is valid");
        let f = |t: f64| self.amplitude(t).powi(2);
        let breaks = self.breakpoints();
        (quadrature::integrate_piecewise(f, a, b, &breaks, 1e-14) - 1.0).abs()
    }
}

/// `f(t)` for an atom decaying through a single-sided cavity, written without
/// complex arithmetic in each damping regime.
fn cavity_decay_amplitude(g: f64, kappa: f64, t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    let pref = g * (2.0 * kappa).sqrt();
    let disc = kappa * kappa - 4.0 * g * g;
    if disc > 0.0 {
        let s = disc.sqrt();
        // (e^{-(κ-s)t/2} − e^{-(κ+s)t/2}) / s
        let slow = (-(kappa - s) * t / 2.0).exp();
        pref * slow * (-(-s * t).exp_m1()) / s
    } else if disc < 0.0 {
        let w = (-disc).sqrt();
        pref * (-kappa * t / 2.0).exp() * 2.0 * (w * t / 2.0).sin() / w
    } else {
        pref * t * (-kappa * t / 2.0).exp()
    }
}

/// `∫_t^∞ f²` for the cavity-decay pulse (used only to size windows).
fn cavity_decay_tail(g: f64, kappa: f64, t: f64) -> f64 {
    let c2 = 2.0 * kappa * g * g;
    let disc = kappa * kappa - 4.0 * g * g;
    let rel = disc.abs().sqrt() / kappa;
    if rel < 1e-3 {
        let e = (-kappa * t).exp();
        c2 * e * (t * t / kappa + 2.0 * t / (kappa * kappa) + 2.0 / kappa.powi(3))
    } else if disc > 0.0 {
        let s = disc.sqrt();
        let (a, b) = ((kappa - s) / 2.0, (kappa + s) / 2.0);
        c2 / (s * s)
            * ((-2.0 * a * t).exp() / (2.0 * a) - 2.0 * (-(a + b) * t).exp() / (a + b)
                + (-2.0 * b * t).exp() / (2.0 * b))
    } else {
        let w = (-disc).sqrt();
        let e = (-kappa * t).exp();
        let osc = (kappa * (w * t).cos() - w * (w * t).sin()) / (kappa * kappa + w * w);
        4.0 * c2 / (w * w) * 0.5 * (e / kappa - e * osc)
    }
}

/// Solves `tail(x) = eps` for a decreasing `tail`, expanding the right end
/// from `lo + scale` until it is bracketed.
fn bisect_decreasing<F: Fn(f64) -> f64>(tail: F, eps: f64, lo: f64, scale: f64) -> f64 {
    let mut lo = lo;
    let mut hi = lo + scale;
    let mut guard = 0;
    while tail(hi) > eps && guard < 200 {
        lo = hi;
        hi += scale * 2f64.powi(guard.min(30));
        guard += 1;
    }
    if tail(lo) <= eps {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if tail(mid) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Largest `x` in `[lo, hi]` with `cum(x) <= eps` for an increasing `cum`.
fn bisect_increasing<F: Fn(f64) -> f64>(cum: F, eps: f64, mut lo: f64, mut hi: f64) -> f64 {
    if cum(hi) <= eps {
        return hi;
    }
    if cum(lo) > eps {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if cum(mid) <= eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Linear single-excitation model of a single-sided cavity containing a
/// resonant two-level atom: cavity amplitude `c`, atom amplitude `a`,
///
/// ```text
/// ċ = −(κ/2) c − g a + √κ f_in,   ȧ = g c,   f_out = √κ c − f_in
/// ```
#[derive(Debug, Clone, Copy)]
pub struct CavityFilter {
    pub g: f64,
    pub kappa: f64,
}

impl CavityFilter {
    /// Writes `d(c, a)/dt` for input amplitude `f_in`.
    #[inline]
    pub fn derivative(&self, state: &[f64], f_in: f64, out: &mut [f64]) {
        let (c, a) = (state[0], state[1]);
        out[0] = -0.5 * self.kappa * c - self.g * a + self.kappa.sqrt() * f_in;
        out[1] = self.g * c;
    }

    #[inline]
    pub fn output(&self, state: &[f64], f_in: f64) -> f64 {
        self.kappa.sqrt() * state[0] - f_in
    }
}

/// Raw reflected-field samples of [`CavityFilter`] driven by `inner`, before
/// renormalization, together with their piecewise-linear norm.
pub fn cavity_filter_samples(inner: &PulseShape, g: f64, kappa: f64) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    if !(g >= 0.0 && g.is_finite()) {
        return Err(Error::InvalidArgument(format!("g must be non-negative, got {g}")));
    }
    positive("kappa", kappa)?;
    let filter = CavityFilter { g, kappa };
    let (start, end) = inner.integration_window();
    let rate = kappa + 2.0 * g;
    let dt = ((end - start) / 4000.0).min(0.02 / rate).max((end - start) / 200_000.0);
    let integ = Integrator { rtol: 1e-10, atol: 1e-13, ..Integrator::default() };

    let breaks = inner.breakpoints();
    let mut state = [0.0, 0.0];
    let mut h = 0.0;
    let mut times = vec![start];
    let mut values = vec![filter.output(&state, inner.amplitude(start))];
    let mut t = start;
    // Keep stepping past the inner pulse until the stored excitation has leaked out.
    let max_len = 400_000;
    loop {
        let mut next = t + dt;
        if let Some(&b) = breaks.iter().find(|&&b| b > t + 1e-12 * dt && b < next) {
            next = b;
        }
        let (lo, hi) = interior(t, next);
        let mut rhs = |s: f64, y: &[f64], dy: &mut [f64]| filter.derivative(y, inner.amplitude(s.clamp(lo, hi)), dy);
        integ.advance(&mut rhs, t, &mut state, next, &mut h)?;
        t = next;
        times.push(t);
        values.push(filter.output(&state, inner.amplitude(t)));
        let stored = state[0] * state[0] + state[1] * state[1];
        if (t >= end && stored < INTEGRATION_EPS) || times.len() >= max_len {
            break;
        }
    }
    let norm = Tabulated { times: times.clone(), values: values.clone() }.cumulative_norm(f64::INFINITY);
    Ok((times, values, norm))
}

/// Normalized envelope reflected by a single-sided atom–cavity system when
/// `inner` is sent in through the coupling mirror.
pub fn cavity_filter_output(inner: &PulseShape, g: f64, kappa: f64) -> Result<PulseShape> {
    let (times, values, norm) = cavity_filter_samples(inner, g, kappa)?;
    if norm < 1e-6 {
        return Err(Error::DegenerateOutput { norm });
    }
    let scale = norm.sqrt().recip();
    let values = values.into_iter().map(|v| v * scale).collect();
    PulseShape::tabulated(times, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn reference_amplitudes() {
        let sq = PulseShape::square(2.0).unwrap();
        assert!((sq.evaluate(1.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(sq.evaluate(2.5).unwrap(), 0.0);
        let ga = PulseShape::gaussian(1.0).unwrap();
        assert!((ga.evaluate(0.0).unwrap() - (2.0 / PI).powf(0.25)).abs() < 1e-15);
        let re = PulseShape::rising_exp_matched(1.0, 0.0).unwrap();
        assert!((re.evaluate(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(re.evaluate(1e-9).unwrap(), 0.0);
        assert_eq!(PulseShape::decaying_exp(1.0).unwrap().evaluate(-0.1).unwrap(), 0.0);
        assert_eq!(PulseShape::atom_cavity_decay(1.0, 1.0).unwrap().evaluate(-1.0).unwrap(), 0.0);
    }

    fn cavity_oracle(g: f64, kappa: f64, t: f64) -> f64 {
        let s = Complex64::new(kappa * kappa - 4.0 * g * g, 0.0).sqrt();
        let pref = -g * (2.0 * kappa).sqrt() / s;
        let v = pref * ((-(kappa + s) * t / 2.0).exp() - (-(kappa - s) * t / 2.0).exp());
        assert!(v.im.abs() < 1e-12);
        v.re
    }

    #[test]
    fn cavity_decay_matches_complex_form() {
        for &(g, kappa) in &[(0.2, 1.0), (0.9076, 1.0), (3.0, 0.5)] {
            let p = PulseShape::atom_cavity_decay(g, kappa).unwrap();
            for i in 0..10 {
                let t = 0.37 * i as f64 + 0.05;
                let v = p.evaluate(t).unwrap();
                assert!((v - cavity_oracle(g, kappa, t)).abs() < 1e-12, "g={g} t={t}");
            }
            assert_eq!(p.evaluate(0.0).unwrap(), 0.0);
        }
    }

    /// Closed-form ∫₀^∞ of A²(e^{-at} − e^{-bt})² with complex a, b.
    fn cavity_norm_oracle(g: f64, kappa: f64) -> f64 {
        let s = Complex64::new(kappa * kappa - 4.0 * g * g, 0.0).sqrt();
        let a = (kappa - s) / 2.0;
        let b = (kappa + s) / 2.0;
        let amp2 = 2.0 * kappa * g * g / (s * s);
        let v = amp2 * (1.0 / (2.0 * a) - 2.0 / (a + b) + 1.0 / (2.0 * b));
        v.re
    }

    #[test]
    fn normalization() {
        let shapes = [
            PulseShape::square(0.7).unwrap(),
            PulseShape::gaussian(1.0).unwrap(),
            PulseShape::gaussian(3.3).unwrap(),
            PulseShape::decaying_exp(2.0).unwrap(),
            PulseShape::rising_exp(0.4, 1.5).unwrap(),
            PulseShape::atom_cavity_decay(0.9076, 1.0).unwrap(),
            PulseShape::atom_cavity_decay(0.1, 2.0).unwrap(),
        ];
        for p in &shapes {
            assert!(p.normalization_deviation() < 1e-9, "{p:?}: {}", p.normalization_deviation());
        }
        assert_eq!(PulseShape::square(5.0).unwrap().normalization_deviation(), 0.0);
        for &(g, k) in &[(0.9076, 1.0), (0.1, 2.0), (2.0, 0.3)] {
            assert!((cavity_norm_oracle(g, k) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn support_windows() {
        let sq = PulseShape::square(3.0).unwrap();
        assert_eq!(sq.support_window(1e-9).unwrap(), (0.0, 3.0));
        let de = PulseShape::decaying_exp(1.0).unwrap();
        let (a, b) = de.support_window(1e-9).unwrap();
        assert_eq!(a, 0.0);
        assert!((b - 10.361_632_918_473_205).abs() < 1e-9);
        let ga = PulseShape::gaussian(1.0).unwrap();
        let (a, b) = ga.support_window(1e-9).unwrap();
        assert_eq!(a, -b);
        // bisection on the quadrature tail as oracle
        let tail = |x: f64| quadrature::integrate(|t| ga.amplitude(t).powi(2), x, 20.0, 1e-16);
        assert!((tail(b) - 1e-9).abs() < 1e-12);
        let cav = PulseShape::atom_cavity_decay(0.9076, 1.0).unwrap();
        let (_, end) = cav.support_window(1e-9).unwrap();
        let tail = quadrature::integrate(|t| cav.amplitude(t).powi(2), end, end + 80.0, 1e-16);
        assert!((tail - 1e-9).abs() < 1e-11, "{tail:e}");
        assert!(ga.support_window(0.0).is_err());
    }

    #[test]
    fn support_window_nests() {
        let shapes = [
            PulseShape::gaussian(1.3).unwrap(),
            PulseShape::decaying_exp(0.5).unwrap(),
            PulseShape::rising_exp(2.0, -1.0).unwrap(),
            PulseShape::atom_cavity_decay(0.4, 2.0).unwrap(),
        ];
        for p in &shapes {
            let mut prev = p.support_window(1e-2).unwrap();
            for e in [1e-4, 1e-8, 1e-12, 1e-16] {
                let w = p.support_window(e).unwrap();
                assert!(w.0 <= prev.0 && w.1 >= prev.1, "{p:?}");
                prev = w;
            }
        }
    }

    #[test]
    fn cumulative_norm_consistent_with_quadrature() {
        let shapes = [
            PulseShape::gaussian(1.1).unwrap(),
            PulseShape::decaying_exp(0.8).unwrap(),
            PulseShape::rising_exp(1.2, 0.3).unwrap(),
            PulseShape::atom_cavity_decay(1.5, 0.8).unwrap(),
        ];
        for p in &shapes {
            let (a, _) = p.support_window(1e-18).unwrap();
            for &t in &[-0.5f64, 0.1, 0.7, 2.0] {
                let q = quadrature::integrate_piecewise(
                    |s| p.amplitude(s).powi(2),
                    a,
                    t.max(a),
                    &p.breakpoints(),
                    1e-15,
                );
                assert!((q - p.cumulative_norm(t)).abs() < 1e-12, "{p:?} t={t}");
            }
        }
    }

    #[test]
    fn tabulated_interpolation_and_domain() {
        let p = PulseShape::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]).unwrap();
        let (t, v) = match &p {
            PulseShape::Tabulated(tab) => (tab.times().to_vec(), tab.values().to_vec()),
            _ => unreachable!(),
        };
        assert_eq!(t.len(), 3);
        // triangle of height h has norm 2h²/3
        assert!((v[1] - 1.5f64.sqrt()).abs() < 1e-15);
        assert!((p.evaluate(0.5).unwrap() - 0.5 * v[1]).abs() < 1e-15);
        assert!(matches!(p.evaluate(2.5), Err(Error::OutOfDomain { .. })));
        assert!(p.normalization_deviation() < 1e-12);
        assert!(PulseShape::tabulated(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn evaluation_is_deterministic() {
        let p = PulseShape::atom_cavity_decay(0.9, 1.1).unwrap();
        for i in 0..50 {
            let t = i as f64 * 0.13;
            assert_eq!(p.amplitude(t).to_bits(), p.amplitude(t).to_bits());
        }
    }

    #[test]
    fn empty_cavity_reflection_is_lossless() {
        let inner = PulseShape::gaussian(1.0).unwrap();
        for kappa in [0.3, 1.0, 5.0] {
            let (_, _, norm) = cavity_filter_samples(&inner, 0.0, kappa).unwrap();
            assert!((norm - 1.0).abs() < 1e-6, "kappa={kappa} norm={norm}");
        }
        let out = cavity_filter_output(&inner, 0.7, 1.3).unwrap();
        assert!(out.normalization_deviation() < 1e-9);
        assert_eq!(out.kind(), PulseKind::Tabulated);
    }

    #[test]
    fn loss_model_validation() {
        assert!(LossModel::new(0.0, 0.0).is_err());
        assert!(LossModel::new(1.0, -0.1).is_err());
        let l = LossModel::new(3.0, 1.0).unwrap();
        assert_eq!(l.gamma_total(), 4.0);
        assert_eq!(l.coupling_ratio(), 0.75);
        let r = LossModel::from_coupling_ratio(0.7).unwrap();
        assert!((r.coupling_ratio() - 0.7).abs() < 1e-15);
    }
}
