//! Adaptive Dormand–Prince 5(4) integrator for small dense systems.

use crate::error::{Error, Result};

/// Tolerances and limits for [`Integrator::advance`].
#[derive(Debug, Clone, Copy)]
pub struct Integrator {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Integrator {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 10_000_000,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// 5th-order weights minus embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Scratch space reused across steps.
struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
        }
    }
}

impl Integrator {
    /// Advances `y` from `t0` to `t1` (forward only).
    ///
    /// `h` carries the step-size guess in and out so consecutive calls on
    /// adjoining intervals keep the controller warm. Returns the number of
    /// accepted steps.
    pub fn advance<F>(&self, rhs: &mut F, t0: f64, y: &mut [f64], t1: f64, h: &mut f64) -> Result<usize>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        if t1 <= t0 {
            return Ok(0);
        }
        let n = y.len();
        let mut s = Stages::new(n);
        let span = t1 - t0;
        if !(*h > 0.0) || !h.is_finite() {
            *h = span * 1e-2;
        }
        let mut t = t0;
        let mut accepted = 0;
        rhs(t, y, &mut s.k[0]);
        let mut attempts = 0usize;
        while t < t1 {
            attempts += 1;
            if attempts > self.max_steps {
                return Err(Error::TooManySteps(self.max_steps));
            }
            let remaining = t1 - t;
            let floor = 16.0 * f64::EPSILON * t.abs().max(t1.abs());
            if remaining <= floor {
                // below the resolution of t itself
                for (yi, ki) in y.iter_mut().zip(&s.k[0]) {
                    *yi += remaining * ki;
                }
                break;
            }
            let mut step = h.min(remaining);
            let last = step >= remaining;
            if last {
                step = remaining;
            }
            if step < floor.max(1e-15 * span) && !last {
                return Err(Error::Stiffness { t, h: step });
            }
            let err = self.try_step(rhs, t, y, step, &mut s);
            if err <= 1.0 {
                t = if last { t1 } else { t + step };
                y.copy_from_slice(&s.y_new);
                // FSAL: stage 7 is the derivative at the new point.
                let (head, tail) = s.k.split_at_mut(6);
                head[0].copy_from_slice(&tail[0]);
                accepted += 1;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || fac < 1.0 {
                    *h = step * fac;
                }
            } else {
                let fac = (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                *h = step * fac;
            }
        }
        Ok(accepted)
    }

    fn try_step<F>(&self, rhs: &mut F, t: f64, y: &[f64], h: f64, s: &mut Stages) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        let Stages { k, tmp, y_new } = s;
        for i in 0..n {
            tmp[i] = y[i] + h * A21 * k[0][i];
        }
        rhs(t + C2 * h, tmp, &mut k[1]);
        for i in 0..n {
            tmp[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
        }
        rhs(t + C3 * h, tmp, &mut k[2]);
        for i in 0..n {
            tmp[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
        }
        rhs(t + C4 * h, tmp, &mut k[3]);
        for i in 0..n {
            tmp[i] = y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
        }
        rhs(t + C5 * h, tmp, &mut k[4]);
        for i in 0..n {
            tmp[i] = y[i]
                + h * (A61 * k[0][i] + A62 * k[1][i] + A63 * k[2][i] + A64 * k[3][i] + A65 * k[4][i]);
        }
        rhs(t + h, tmp, &mut k[5]);
        for i in 0..n {
            y_new[i] = y[i]
                + h * (A71 * k[0][i] + A73 * k[2][i] + A74 * k[3][i] + A75 * k[4][i] + A76 * k[5][i]);
        }
        rhs(t + h, y_new, &mut k[6]);
        let mut err: f64 = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i]
                    + E7 * k[6][i]);
            let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / sc).abs());
        }
        err
    }
}
