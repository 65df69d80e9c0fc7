//! Error function, its inverse, and the terminating confluent
//! hypergeometric series `₁F₁(−n; b; x)`.
//!
//! Everything here is implemented directly so that results do not depend on
//! the platform libm beyond `exp`/`ln`.

use crate::error::{Error, Result};

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// Below this magnitude `erf` uses the everywhere-positive series
/// `erf x = 2/√π · e^{-x²} · Σ 2ⁿ x^{2n+1} / (2n+1)!!`.
const SERIES_LIMIT: f64 = 3.0;

/// `erfc` switches to the continued fraction above this argument.
const CF_LIMIT: f64 = 2.0;

/// The error function.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    let v = if ax <= SERIES_LIMIT {
        erf_series(ax)
    } else {
        1.0 - erfc_cf(ax)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// The complementary error function `1 − erf(x)`, accurate in the far right tail.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x >= CF_LIMIT {
        erfc_cf(x)
    } else if x <= -CF_LIMIT {
        2.0 - erfc_cf(-x)
    } else {
        1.0 - erf(x)
    }
}

fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    FRAC_2_SQRT_PI * (-x2).exp() * sum
}

/// Modified Lentz evaluation of
/// `erfc x = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …))))`, x > 0.
fn erfc_cf(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = f;
    let mut d = 0.0;
    for k in 1..5000 {
        let a = k as f64 * 0.5;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (std::f64::consts::PI.sqrt() * f)
}

/// Inverse of [`erf`] on the open interval (−1, 1).
///
/// A single-precision rational start (Giles 2010) is polished with Halley
/// steps on our own `erf`, so `erf(inverse_erf(y)) == y` to rounding.
pub fn inverse_erf(y: f64) -> Result<f64> {
    if !(y > -1.0 && y < 1.0) {
        return Err(Error::InverseErfDomain(y));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let mut x = giles_guess(y);
    for _ in 0..8 {
        let err = erf(x) - y;
        let deriv = FRAC_2_SQRT_PI * (-x * x).exp();
        if deriv == 0.0 {
            break;
        }
        let dx = err / deriv;
        x -= dx / (1.0 + x * dx);
        if dx.abs() <= 1e-16 * x.abs() {
            break;
        }
    }
    Ok(x)
}

fn giles_guess(y: f64) -> f64 {
    let w = -((1.0 - y) * (1.0 + y)).ln();
    let p = if w < 5.0 {
        let w = w - 2.5;
        let mut p = 2.810_226_36e-08;
        p = 3.432_739_39e-07 + p * w;
        p = -3.523_387_7e-06 + p * w;
        p = -4.391_506_54e-06 + p * w;
        p = 0.000_218_580_87 + p * w;
        p = -0.001_253_725_03 + p * w;
        p = -0.004_177_681_64 + p * w;
        p = 0.246_640_727 + p * w;
        1.501_409_41 + p * w
    } else {
        let w = w.sqrt() - 3.0;
        let mut p = -0.000_200_214_257;
        p = 0.000_100_950_558 + p * w;
        p = 0.001_349_343_22 + p * w;
        p = -0.003_673_428_44 + p * w;
        p = 0.005_739_507_73 + p * w;
        p = -0.007_622_461_3 + p * w;
        p = 0.009_438_870_47 + p * w;
        p = 1.001_674_06 + p * w;
        2.832_976_82 + p * w
    };
    p * y
}

/// `₁F₁(−n; b; x)` for integer `n ≥ 0`, which is a degree-`n` polynomial.
///
/// Coefficients follow `c_{k+1} = c_k (k − n) x / ((b + k)(k + 1))`; each
/// term is carried as a (log-magnitude, sign) pair and the sum is rescaled by
/// the largest term so that large `n` or `x` cannot overflow intermediate
/// factorial ratios.
pub fn hyp1f1_neg_int(n: u32, b: f64, x: f64) -> f64 {
    debug_assert!(b > 0.0);
    if x == 0.0 || n == 0 {
        return 1.0;
    }
    let lnx = x.abs().ln();
    let xsign = x.signum();
    let mut terms: Vec<(f64, f64)> = Vec::with_capacity(n as usize + 1);
    let mut log_c = 0.0_f64;
    let mut sign = 1.0_f64;
    terms.push((log_c, sign));
    for k in 0..n {
        let k = k as f64;
        let nk = n as f64 - k;
        log_c += nk.ln() + lnx - (b + k).ln() - (k + 1.0).ln();
        // (k − n) < 0 contributes a sign flip per step.
        sign *= -xsign;
        terms.push((log_c, sign));
    }
    let max = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|&(l, s)| s * (l - max).exp()).sum();
    sum * max.exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Alternating Maclaurin series, summed in long form for moderate x.
    fn erf_maclaurin(x: f64) -> f64 {
        let mut sum = 0.0;
        let mut pow = x;
        let mut fact = 1.0;
        for n in 0..200 {
            let term = pow / (fact * (2 * n + 1) as f64);
            sum += if n % 2 == 0 { term } else { -term };
            pow *= x * x;
            fact *= (n + 1) as f64;
            if term.abs() < 1e-20 {
                break;
            }
        }
        FRAC_2_SQRT_PI * sum
    }

    #[test]
    fn erf_reference_values() {
        assert_eq!(erf(0.0), 0.0);
        assert!((erf(1.0) - 0.842_700_792_949_715).abs() < 1e-15);
        for &x in &[0.1, 0.5, 1.3] {
            assert!((erf(x) - erf_maclaurin(x)).abs() < 1e-14, "x = {x}");
        }
        // beyond x ≈ 1.5 the alternating series cancels too much; use tabulated values
        for &(x, v) in &[
            (2.0, 0.995_322_265_018_952_734),
            (2.7, 0.999_865_667_260_059_476),
            (3.0, 0.999_977_909_503_001_415),
        ] {
            assert!((erf(x) - v).abs() < 1e-15, "x = {x}");
        }
        for &x in &[6.0, 7.5, 10.0, 30.0] {
            assert!((erf(x) - 1.0).abs() <= 1e-14);
        }
        assert_eq!(erf(-0.37), -erf(0.37));
    }

    #[test]
    fn erf_continuous_across_branches() {
        let below = erf(SERIES_LIMIT - 1e-12);
        let above = erf(SERIES_LIMIT + 1e-12);
        assert!((below - above).abs() < 1e-14);
        // the jump must be explained by the slope alone
        let slope = -FRAC_2_SQRT_PI * (-CF_LIMIT * CF_LIMIT).exp();
        let jump = erfc(CF_LIMIT + 1e-12) - erfc(CF_LIMIT - 1e-12);
        assert!((jump - 2e-12 * slope).abs() < 1e-15, "jump {jump:e}");
        assert!((erfc(2.7) / 1.343_327_399_405_241_92e-4 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn erfc_far_tail() {
        // erfc(5) = 1.5374597944280348e-12
        assert!((erfc(5.0) / 1.537_459_794_428_034_8e-12 - 1.0).abs() < 1e-13);
        assert!((erfc(-1.0) - (1.0 + erf(1.0))).abs() < 1e-15);
    }

    #[test]
    fn erf_monotone_and_bounded() {
        let mut prev = erf(-6.0);
        for i in 1..=1200 {
            let x = -6.0 + i as f64 * 0.01;
            let v = erf(x);
            assert!(v.abs() <= 1.0);
            if x.abs() < 5.5 {
                assert!(v > prev, "not increasing at {x}");
                assert!(v.abs() < 1.0);
            }
            prev = v;
        }
    }

    #[test]
    fn inverse_erf_reference() {
        assert_eq!(inverse_erf(0.0).unwrap(), 0.0);
        // bisection on erf as an independent oracle
        let (mut lo, mut hi) = (0.0, 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if erf(mid) < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((lo - 0.476_936_276_204_470).abs() < 1e-14);
        assert!((inverse_erf(0.5).unwrap() - lo).abs() < 1e-14);
    }

    #[test]
    fn inverse_erf_round_trip() {
        let mut worst: f64 = 0.0;
        for i in 0..1000 {
            let y = -0.999 + 1.998 * (i as f64 + 0.5) / 1000.0;
            let x = inverse_erf(y).unwrap();
            worst = worst.max((erf(x) - y).abs());
        }
        assert!(worst < 1e-13, "max round-trip error {worst:e}");
        let x = inverse_erf(1.0 - 1e-12).unwrap();
        assert!((erf(x) - (1.0 - 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn inverse_erf_domain() {
        assert!(matches!(inverse_erf(1.0), Err(Error::InverseErfDomain(_))));
        assert!(inverse_erf(-1.5).is_err());
        assert!(inverse_erf(f64::NAN).is_err());
    }

    #[test]
    fn hyp1f1_small_polynomials() {
        for &x in &[-1.0, 0.0, 0.3, 2.5] {
            assert!((hyp1f1_neg_int(1, 0.5, x) - (1.0 - 2.0 * x)).abs() < 1e-14);
        }
        assert!((hyp1f1_neg_int(2, 0.5, 1.0) + 5.0 / 3.0).abs() < 1e-14);
        assert_eq!(hyp1f1_neg_int(0, 1.5, 3.0), 1.0);
        assert_eq!(hyp1f1_neg_int(7, 1.5, 0.0), 1.0);
    }

    #[test]
    fn hyp1f1_large_n_matches_cosine_limit() {
        // At N = 100 the direct sum differs from e^{θ²/8N} cos θ by 7.79e-6
        // (relative) at θ = π.
        let n = 100;
        let theta = std::f64::consts::PI;
        let x = theta * theta / (4.0 * n as f64);
        let exact = hyp1f1_neg_int(n, 0.5, x);
        let limit = (theta * theta / (8.0 * n as f64)).exp() * theta.cos();
        let rel = ((exact - limit) / limit).abs();
        assert!(rel < 1e-5, "relative gap {rel:e}");
        assert!((exact - -1.012_421_306_056_972).abs() < 1e-12);
    }

    #[test]
    fn hyp1f1_kummer_derivative() {
        for &(n, b, x) in &[(5u32, 0.5, 0.7), (12, 1.5, 0.2), (40, 0.5, 0.05), (3, 2.0, -1.2)] {
            let h = 1e-6;
            let fd = (hyp1f1_neg_int(n, b, x + h) - hyp1f1_neg_int(n, b, x - h)) / (2.0 * h);
            let analytic = -(n as f64) / b * hyp1f1_neg_int(n - 1, b + 1.0, x);
            assert!(((fd - analytic) / analytic).abs() < 1e-6, "n={n} b={b} x={x}");
        }
    }

    #[test]
    fn hyp1f1_cosine_gap_shrinks_with_n() {
        let gap = |n: u32| {
            (0..=200)
                .map(|i| {
                    let th = std::f64::consts::PI * i as f64 / 200.0;
                    let x = th * th / (4.0 * n as f64);
                    (hyp1f1_neg_int(n, 0.5, x) - (th * th / (8.0 * n as f64)).exp() * th.cos())
                        .abs()
                })
                .fold(0.0, f64::max)
        };
        let (a, b, c) = (gap(10), gap(50), gap(250));
        assert!(a > b && b > c, "{a} {b} {c}");
    }
}
