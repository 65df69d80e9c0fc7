//! Large-photon-number perturbation theory.
//!
//! In the scaled frame `τ = Ω₀ t`, `Ω₀ = 2√(n̄Γ_P/T)`, `ε = Γ/Ω₀`, the zero-order
//! solution is a lossless rotation by the pulse area `θ(τ) = ∫ g dτ'` with
//! `g = √T f`. To first order in `ε` the shortfall at the π point is
//!
//! ```text
//! 1 − P_e|_{θ=π} = ε ∫₀^π sin⁴(θ/2) / g(τ(θ)) dθ.
//! ```
//!
//! Writing `s = n̄Γ_P T` and `a = Ω₀T = 2√s`, the shortfall becomes
//! `β(s) Γ/(n̄Γ_P)` with `β(s) = (√s/2) I(a)`, which is minimized over `s`
//! subject to the total area reaching π.
//!
//! For N-photon Fock states the zero-order excitation overshoots by
//! `π²/16N`, giving `P_e ≈ 1 + π²/16N − β(1 + Γ_B/Γ_P)/N`.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::optimizer::{golden_max, ShapeFamily, PARAM_RTOL};
use crate::pulses::{LossModel, PulseShape};
use crate::quadrature;
use crate::special_functions::{erf, hyp1f1_neg_int, inverse_erf};

const QUAD_TOL: f64 = 1e-12;

/// Largest `N` summed exactly in [`fock_first_order_kernel`].
pub const KERNEL_EXACT_MAX_N: u32 = 500;

/// `(2π)^{1/4}`: total area of a unit Gaussian envelope per unit `a`.
fn gaussian_area_factor() -> f64 {
    (2.0 * PI).powf(0.25)
}

/// Scales of the perturbative frame for a pulse of duration `T`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledFrame {
    /// `Ω₀ = 2√(n̄Γ_P/T)`.
    pub omega0: f64,
    /// `ε = Γ/Ω₀`.
    pub epsilon: f64,
    /// `a = Ω₀T`.
    pub omega0_t: f64,
}

impl ScaledFrame {
    pub fn new(loss: &LossModel, nbar: f64, duration: f64) -> Self {
        let omega0 = 2.0 * (nbar * loss.gamma_p() / duration).sqrt();
        Self { omega0, epsilon: loss.gamma_total() / omega0, omega0_t: omega0 * duration }
    }

    pub fn tau(&self, t: f64) -> f64 {
        self.omega0 * t
    }
}

/// `T` used for the dimensionless envelope `g = √T f`.
fn scale_time(shape: &PulseShape) -> f64 {
    shape.characteristic_time()
}

/// Dimensionless envelope `g(τ) = √T f(τT/a)`.
pub fn scaled_envelope(shape: &PulseShape, omega0_t: f64, tau: f64) -> f64 {
    let t_scale = scale_time(shape);
    t_scale.sqrt() * shape.amplitude(tau * t_scale / omega0_t)
}

/// Pulse area `θ(τ)` accumulated up to scaled time `τ`.
pub fn theta_of_tau(shape: &PulseShape, omega0_t: f64, tau: f64) -> f64 {
    let a = omega0_t;
    match *shape {
        PulseShape::Square { .. } => tau.clamp(0.0, a),
        PulseShape::DecayingExp { .. } => {
            if tau <= 0.0 {
                0.0
            } else {
                -SQRT_2 * a * (-tau / a).exp_m1()
            }
        }
        PulseShape::RisingExp { duration, anchor } => {
            let tau0 = anchor * a / duration;
            SQRT_2 * a * ((tau.min(tau0) - tau0) / a).exp()
        }
        PulseShape::Gaussian { .. } => 0.5 * a * gaussian_area_factor() * (1.0 + erf(tau / a)),
        _ => {
            // θ = (a/√T) ∫ f dt
            let t_scale = scale_time(shape);
            let (start, end) = shape.integration_window();
            let t = (tau * t_scale / a).min(end);
            if t <= start {
                return 0.0;
            }
            let area = quadrature::integrate_piecewise(|s| shape.amplitude(s), start, t, &shape.breakpoints(), 1e-13);
            a / t_scale.sqrt() * area
        }
    }
}

/// Total area `θ(∞)`.
pub fn total_area(shape: &PulseShape, omega0_t: f64) -> f64 {
    let a = omega0_t;
    match shape {
        PulseShape::Square { .. } => a,
        PulseShape::DecayingExp { .. } | PulseShape::RisingExp { .. } => SQRT_2 * a,
        PulseShape::Gaussian { .. } => a * gaussian_area_factor(),
        _ => {
            let t_scale = scale_time(shape);
            theta_of_tau(shape, a, shape.integration_window().1 * a / t_scale)
        }
    }
}

/// `τ` at which the area reaches `θ`.
pub fn invert_theta(shape: &PulseShape, omega0_t: f64, theta: f64) -> Result<f64> {
    let a = omega0_t;
    let total = total_area(shape, a);
    if !(theta >= 0.0 && theta < total) {
        return Err(Error::AreaOutOfRange { theta, total });
    }
    Ok(match *shape {
        PulseShape::Square { .. } => theta,
        PulseShape::DecayingExp { .. } => -a * (-theta / (SQRT_2 * a)).ln_1p(),
        PulseShape::RisingExp { duration, anchor } => {
            if theta == 0.0 {
                f64::NEG_INFINITY
            } else {
                anchor * a / duration + a * (theta / (SQRT_2 * a)).ln()
            }
        }
        PulseShape::Gaussian { .. } => {
            let y = 2.0 * theta / (a * gaussian_area_factor()) - 1.0;
            if y <= -1.0 {
                f64::NEG_INFINITY
            } else {
                a * inverse_erf(y)?
            }
        }
        _ => {
            // first crossing: coarse scan, then bisection
            let t_scale = scale_time(shape);
            let (start, end) = shape.integration_window();
            let (ts, te) = (start * a / t_scale, end * a / t_scale);
            let n = 2000;
            let mut lo = ts;
            let mut hi = te;
            for i in 1..=n {
                let tau = ts + (te - ts) * i as f64 / n as f64;
                if theta_of_tau(shape, a, tau) >= theta {
                    hi = tau;
                    break;
                }
                lo = tau;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi || hi - lo <= 1e-14 * hi.abs().max(1.0) {
                    break;
                }
                if theta_of_tau(shape, a, mid) < theta {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
    })
}

/// `1/g(τ(θ))` in closed form for the four single-timescale families.
#[cfg(test)]
fn inverse_envelope_family(shape: &PulseShape, a: f64, theta: f64) -> Result<f64> {
    Ok(match shape {
        PulseShape::Square { .. } => 1.0,
        PulseShape::DecayingExp { .. } => 1.0 / (SQRT_2 * (1.0 - theta / (SQRT_2 * a))),
        PulseShape::RisingExp { .. } => a / theta,
        PulseShape::Gaussian { .. } => {
            let y = 2.0 * theta / (a * gaussian_area_factor()) - 1.0;
            if y <= -1.0 {
                return Ok(0.0);
            }
            let u = inverse_erf(y)?;
            (PI / 2.0).powf(0.25) * (u * u).exp()
        }
        _ => {
            let tau = invert_theta(shape, a, theta)?;
            1.0 / scaled_envelope(shape, a, tau)
        }
    })
}

/// Scaled time at which the area reaches π.
fn pi_time(shape: &PulseShape, a: f64) -> Result<f64> {
    let total = total_area(shape, a);
    if total > PI {
        return invert_theta(shape, a, PI);
    }
    match *shape {
        // compact on the right: π is reached exactly at the end of the pulse
        PulseShape::Square { .. } if total == PI => Ok(a),
        PulseShape::RisingExp { duration, anchor } if total == PI => Ok(anchor * a / duration),
        _ => Err(Error::UnreachableArea { total }),
    }
}

/// `I(a) = ∫₀^π sin⁴(θ/2) / g(τ(θ)) dθ`, computed as `∫ sin⁴(θ(τ)/2) dτ` up
/// to the π time, which stays smooth even where `g → 0`.
fn area_integral(shape: &PulseShape, a: f64) -> Result<f64> {
    let tau_pi = pi_time(shape, a)?;
    // below θ = 1e-4 the remaining contribution is O(θ⁴) and negligible
    let tau_lo = match shape {
        PulseShape::Square { .. } | PulseShape::DecayingExp { .. } => 0.0,
        PulseShape::RisingExp { .. } | PulseShape::Gaussian { .. } => invert_theta(shape, a, 1e-4)?,
        _ => shape.integration_window().0 * a / scale_time(shape),
    };
    let integrand = |tau: f64| (0.5 * theta_of_tau(shape, a, tau)).sin().powi(4);
    let v = quadrature::integrate(integrand, tau_lo, tau_pi, QUAD_TOL);
    if !v.is_finite() {
        return Err(Error::UnreachableArea { total: total_area(shape, a) });
    }
    Ok(v)
}

/// `I(a)` evaluated in the area variable, `∫₀^π sin⁴(θ/2) / g(τ(θ)) dθ`.
///
/// The integrand blows up where `g` vanishes, so this form is only used as
/// a cross-check away from the reachability boundary.
#[cfg(test)]
fn area_integral_theta(shape: &PulseShape, a: f64) -> Result<f64> {
    let total = total_area(shape, a);
    if total < PI {
        return Err(Error::UnreachableArea { total });
    }
    let mut failure = None;
    let integrand = |theta: f64| -> f64 {
        let s4 = (0.5 * theta).sin().powi(4);
        if s4 == 0.0 {
            return 0.0;
        }
        match inverse_envelope_family(shape, a, theta) {
            Ok(v) => s4 * v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        }
    };
    let v = quadrature::integrate(integrand, 0.0, PI, QUAD_TOL);
    if let Some(e) = failure {
        // the π point sits exactly at the end of an infinitely long tail
        return Err(match e {
            Error::AreaOutOfRange { .. } | Error::InverseErfDomain(_) => Error::UnreachableArea { total },
            other => other,
        });
    }
    if !v.is_finite() {
        return Err(Error::UnreachableArea { total });
    }
    Ok(v)
}

/// First-order shortfall `1 − P_e` at the π point for a pulse whose own
/// timescale plays the role of `T`.
pub fn deficit_integral(shape: &PulseShape, nbar: f64, loss: &LossModel) -> Result<f64> {
    if !(nbar > 0.0) {
        return Err(Error::InvalidArgument(format!("nbar must be positive, got {nbar}")));
    }
    let frame = ScaledFrame::new(loss, nbar, scale_time(shape));
    Ok(frame.epsilon * area_integral(shape, frame.omega0_t)?)
}

/// `β(s)` such that the shortfall is `β Γ/(n̄Γ_P)` at `s = n̄Γ_P T`.
pub fn deficit_coefficient(family: ShapeFamily, s: f64) -> Result<f64> {
    let a = 2.0 * s.sqrt();
    Ok(0.5 * s.sqrt() * area_integral(&family.build(1.0)?, a)?)
}

/// Total area per unit `a = Ω₀T` of each family.
pub fn area_factor(family: ShapeFamily) -> f64 {
    match family {
        ShapeFamily::Square => 1.0,
        ShapeFamily::DecayingExp | ShapeFamily::RisingExp => SQRT_2,
        ShapeFamily::Gaussian => gaussian_area_factor(),
    }
}

/// Smallest `s = n̄Γ_P T` for which the area reaches π.
pub fn min_reachable_s(family: ShapeFamily) -> f64 {
    let k = area_factor(family);
    PI * PI / (4.0 * k * k)
}

/// Optimal-duration constants of one pulse family.
#[derive(Debug, Clone, Copy)]
pub struct AsymptoticCoefficients {
    pub family: ShapeFamily,
    /// `T_opt n̄ Γ_P`.
    pub alpha: f64,
    /// Coherent shortfall coefficient: `P_e ≈ 1 − β Γ/(n̄Γ_P)`.
    pub beta: f64,
    /// Whether `T_opt` sits on the reachability boundary `θ_total = π`.
    pub constrained: bool,
}

impl AsymptoticCoefficients {
    /// Fock-state numerator without external loss, `β − π²/16`.
    pub fn beta_lossless(&self) -> f64 {
        self.beta - PI * PI / 16.0
    }

    /// Fock-state coefficient of `Γ_B/(NΓ_P)`; identical to the coherent `β`.
    pub fn beta_loss(&self) -> f64 {
        self.beta
    }

    /// `1 − β Γ/(n̄Γ_P)`.
    pub fn coherent_pe(&self, nbar: f64, loss: &LossModel) -> f64 {
        1.0 - self.beta * loss.gamma_total() / (nbar * loss.gamma_p())
    }

    /// `1 − [β_lossless + β_loss Γ_B/Γ_P]/N`; the `+π²/16N` zero-order gain
    /// is already folded into `β_lossless`.
    pub fn fock_pe(&self, photons: u32, loss: &LossModel) -> f64 {
        let n = photons as f64;
        1.0 - (self.beta_lossless() + self.beta_loss() * loss.gamma_b() / loss.gamma_p()) / n
    }
}

/// Minimizes the first-order shortfall over the pulse duration.
///
/// When the shortfall keeps shrinking as `T` decreases, the optimum is the
/// shortest pulse whose area still reaches π.
pub fn optimize_deficit(family: ShapeFamily, nbar: f64, loss: &LossModel) -> Result<AsymptoticCoefficients> {
    if !(nbar > 0.0) {
        return Err(Error::InvalidArgument(format!("nbar must be positive, got {nbar}")));
    }
    let scale = nbar * loss.gamma_p();
    let unit = loss.gamma_total() / scale;
    let t_min = min_reachable_s(family) / scale;
    let deficit = |t: f64| -> f64 {
        family
            .build(t)
            .and_then(|p| deficit_integral(&p, nbar, loss))
            .unwrap_or(f64::INFINITY)
    };
    let points = 60;
    let ln_lo = t_min.ln();
    let ln_hi = (t_min * 1e3).ln();
    let xs: Vec<f64> = (0..points).map(|i| ln_lo + (ln_hi - ln_lo) * i as f64 / (points - 1) as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| deficit(x.exp())).collect();
    let i = vals
        .iter()
        .enumerate()
        .fold(0, |best, (k, &v)| if v < vals[best] { k } else { best });
    if !vals[i].is_finite() {
        return Err(Error::UnreachableArea { total: 0.0 });
    }
    if i == 0 && vals[0] <= deficit(t_min * (1.0 + 1e-7)) {
        return Ok(AsymptoticCoefficients { family, alpha: t_min * scale, beta: vals[0] / unit, constrained: true });
    }
    let a = xs[i.saturating_sub(1)];
    let b = xs[(i + 1).min(points - 1)];
    let g = golden_max(|x| Ok(-deficit(x.exp())), a, b, PARAM_RTOL * 1e-2, 300)?;
    let t_opt = g.x.exp();
    Ok(AsymptoticCoefficients { family, alpha: t_opt * scale, beta: -g.fx / unit, constrained: false })
}

/// Zero-order Fock excitation `(1 − ₁F₁(−N, 1/2, θ²/4N))/2`.
pub fn fock_zero_order_pe(photons: u32, theta: f64) -> f64 {
    let n = photons as f64;
    0.5 * (1.0 - hyp1f1_neg_int(photons, 0.5, theta * theta / (4.0 * n)))
}

/// The bracketed kernel of the first-order Fock correction at areas
/// `θ' ≤ θ`, summed exactly for `N ≤ 500`.
///
/// Beyond that the kernel is replaced by its large-`N` limit
/// `cos(θ−θ')(1 − cos θ') − ½ sin(θ−θ') sin θ'`.
pub fn fock_first_order_kernel(photons: u32, theta: f64, theta_p: f64) -> f64 {
    let d = theta - theta_p;
    if photons > KERNEL_EXACT_MAX_N {
        return d.cos() * (1.0 - theta_p.cos()) - 0.5 * d.sin() * theta_p.sin();
    }
    let big_n = photons as f64;
    let x = theta_p * theta_p / (4.0 * big_n);
    let d2 = d * d;

    // Σ_{n=0}^{N−1} (−1)ⁿ N!/((2n)! Nⁿ (N−n)!) d^{2n} [1 − ₁F₁(−N+n, 1/2, x)]
    let mut first = 0.0;
    let mut c = 1.0;
    for n in 0..photons {
        if n > 0 {
            let k = n as f64;
            c *= -(big_n - k + 1.0) * d2 / ((2.0 * k - 1.0) * (2.0 * k) * big_n);
        }
        if c == 0.0 {
            break;
        }
        first += c * (1.0 - hyp1f1_neg_int(photons - n, 0.5, x));
    }

    // Σ_{n=1}^{N} (−1)^{n−1} (N−1)!/((2n−1)! N^{n−1} (N−n)!) d^{2n−1} θ' ₁F₁(−N+n, 3/2, x)
    let mut second = 0.0;
    let mut c = d;
    for n in 1..=photons {
        if n > 1 {
            let k = n as f64;
            c *= -(big_n - k + 1.0) * d2 / ((2.0 * k - 2.0) * (2.0 * k - 1.0) * big_n);
        }
        if c == 0.0 {
            break;
        }
        second += c * theta_p * hyp1f1_neg_int(photons - n, 1.5, x);
    }
    first - 0.5 * second
}

/// Asymptotic optimized Fock-state excitation for a pulse family.
pub fn fock_asymptotic_pe(family: ShapeFamily, photons: u32, loss: &LossModel) -> Result<f64> {
    if photons == 0 {
        return Err(Error::InvalidArgument("photon number must be at least 1".into()));
    }
    Ok(optimize_deficit(family, photons as f64, loss)?.fock_pe(photons, loss))
}
