//! Special functions: complete elliptic integrals, exponentially scaled
//! modified Bessel functions of integer order, and the mean Gaussian step
//! length.
//!
//! Elliptic integrals take the *modulus* `xi`, i.e. `xi^2` multiplies
//! `sin^2(theta)` in the integrand. This differs from the parameter convention
//! `m = xi^2` used by some libraries.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Complete elliptic integral of the first kind in modulus form,
///
/// ```text
/// K(xi) = ∫_0^{π/2} dθ / sqrt(1 - xi² sin²θ),    0 <= xi < 1
/// ```
///
/// Evaluated with the arithmetic-geometric mean, `K = π / (2 AGM(1, sqrt(1 - xi²)))`.
pub fn elliptic_k_modulus(xi: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&xi) {
        return Err(Error::domain(format!("K(xi) needs 0 <= xi < 1, got {xi}")));
    }
    let (a, _) = agm(1.0, (1.0 - xi * xi).sqrt(), xi);
    Ok(PI / (2.0 * a))
}

/// Complete elliptic integral of the second kind in modulus form,
///
/// ```text
/// E(xi) = ∫_0^{π/2} sqrt(1 - xi² sin²θ) dθ,    0 <= xi <= 1
/// ```
pub fn elliptic_e_modulus(xi: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(Error::domain(format!("E(xi) needs 0 <= xi <= 1, got {xi}")));
    }
    if xi == 1.0 {
        return Ok(1.0);
    }
    let (a, c_sum) = agm(1.0, (1.0 - xi * xi).sqrt(), xi);
    let k = PI / (2.0 * a);
    Ok(k * (1.0 - c_sum))
}

/// Runs the AGM from `(a, b)` and returns `(AGM, Σ_{n>=0} 2^{n-1} c_n²)` with
/// `c_0 = c0`, `c_{n+1} = (a_n - b_n) / 2`.
fn agm(mut a: f64, mut b: f64, c0: f64) -> (f64, f64) {
    let mut sum = 0.5 * c0 * c0;
    let mut pow = 0.5;
    for _ in 0..64 {
        let c = 0.5 * (a - b);
        pow *= 2.0;
        sum += pow * c * c;
        if c.abs() <= f64::EPSILON * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    (a, sum)
}

/// Exponentially scaled modified Bessel function `e^{-x} I_k(x)`.
pub fn bessel_i_scaled(k: usize, x: f64) -> Result<f64> {
    let seq = bessel_i_scaled_seq(x, k)?;
    Ok(seq[k])
}

/// `e^{-x} I_k(x)` for every order `k = 0..=k_max`.
///
/// Ratios `r_k = I_k / I_{k-1}` are generated by the backward recurrence
/// `r_k = x / (2k + x r_{k+1})` (Miller's algorithm in ratio form), started
/// well above both `k_max` and the point where the sequence falls below
/// round-off. The sequence is then normalised with the generating-function
/// identity `e^{-x} (I_0 + 2 Σ_{k>=1} I_k) = 1`, so `e^x` is never formed.
pub fn bessel_i_scaled_seq(x: f64, k_max: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; k_max + 1];
    bessel_i_scaled_into(x, &mut out)?;
    Ok(out)
}

/// Buffer-reusing form of [`bessel_i_scaled_seq`]; fills `out[k]` for
/// `k < out.len()`.
pub fn bessel_i_scaled_into(x: f64, out: &mut [f64]) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::domain(format!("I_k(x) needs x >= 0, got {x}")));
    }
    if out.is_empty() {
        return Ok(());
    }
    if x == 0.0 {
        out.fill(0.0);
        out[0] = 1.0;
        return Ok(());
    }
    if !x.is_finite() {
        return Err(Error::domain("I_k(x) needs finite x"));
    }

    let k_max = out.len() - 1;
    let start = k_max + 25 + (10.0 * x.sqrt()).ceil() as usize;

    // Walk down from `start`, accumulating the products P_k = Π_{j<=k} r_j
    // lazily: first collect ratios, then form the normalisation sum upwards.
    let mut ratio = 0.0;
    // ratios[k] = r_k for k in 1..=start; only the first k_max are kept in
    // `out`, the remainder feed the normalisation directly.
    let mut tail = Vec::with_capacity(start - k_max);
    for k in (1..=start).rev() {
        ratio = x / (2.0 * k as f64 + x * ratio);
        if k > k_max {
            tail.push(ratio);
        } else {
            out[k] = ratio;
        }
    }
    tail.reverse(); // tail[i] = r_{k_max + 1 + i}

    // P_0 = 1; P_k = P_{k-1} r_k.
    let mut sum = 1.0;
    let mut prod = 1.0;
    for r in out.iter_mut().skip(1) {
        prod *= *r;
        *r = prod;
        sum += 2.0 * prod;
    }
    for r in tail {
        prod *= r;
        if prod == 0.0 {
            break;
        }
        sum += 2.0 * prod;
    }

    let i0 = 1.0 / sum;
    out[0] = i0;
    for v in out.iter_mut().skip(1) {
        *v *= i0;
    }
    Ok(())
}

/// Mean distance between two independent standard Gaussian points in `R^d`:
///
/// ```text
/// E|r2 - r1| = 2 Γ((d+1)/2) / Γ(d/2)
/// ```
///
/// The gamma ratio `g(d) = Γ((d+1)/2) / Γ(d/2)` is stepped from `g(1) = 1/√π`
/// and `g(2) = √π/2` with `g(d+2) = (d+1)/d · g(d)`.
pub fn gaussian_step_mean(d: usize) -> Result<f64> {
    if d < 1 {
        return Err(Error::domain("gaussian_step_mean needs d >= 1"));
    }
    let (mut g, mut m) = if d % 2 == 1 {
        (1.0 / PI.sqrt(), 1)
    } else {
        (PI.sqrt() / 2.0, 2)
    };
    while m < d {
        g *= (m as f64 + 1.0) / m as f64;
        m += 2;
    }
    Ok(2.0 * g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    /// Adaptive Simpson on the defining θ-integral; independent of the AGM.
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn rec<F: Fn(f64) -> f64>(
            f: &F,
            a: f64,
            b: f64,
            fa: f64,
            fm: f64,
            fb: f64,
            whole: f64,
            tol: f64,
            depth: u32,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = f(lm);
            let frm = f(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let fa = f(a);
        let fb = f(b);
        let fm = f(0.5 * (a + b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(f, a, b, fa, fm, fb, whole, tol, 50)
    }

    /// Ascending series `I_k(x) = Σ_m (x/2)^{2m+k} / (m! (m+k)!)`.
    fn bessel_i_series(k: usize, x: f64) -> f64 {
        let half = x / 2.0;
        let mut term = half.powi(k as i32) / (1..=k).map(|j| j as f64).product::<f64>();
        let mut sum = term;
        for m in 1..200 {
            term *= half * half / (m as f64 * (m + k) as f64);
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        sum
    }

    #[test]
    fn elliptic_at_zero() {
        assert_relative_eq!(elliptic_k_modulus(0.0).unwrap(), FRAC_PI_2, epsilon = 1e-15);
        assert_relative_eq!(elliptic_e_modulus(0.0).unwrap(), FRAC_PI_2, epsilon = 1e-15);
        assert_eq!(elliptic_e_modulus(1.0).unwrap(), 1.0);
    }

    #[test]
    fn elliptic_domain_errors() {
        assert!(elliptic_k_modulus(1.0).is_err());
        assert!(elliptic_k_modulus(-0.1).is_err());
        assert!(elliptic_e_modulus(1.0 + 1e-12).is_err());
        assert!(elliptic_e_modulus(-1e-12).is_err());
        assert!(elliptic_k_modulus(f64::NAN).is_err());
    }

    #[test]
    fn elliptic_matches_direct_quadrature() {
        for &xi in &[0.3, 0.5, 0.9, 0.99] {
            let kq = simpson(
                &|t: f64| 1.0 / (1.0 - xi * xi * t.sin().powi(2)).sqrt(),
                0.0,
                FRAC_PI_2,
                1e-14,
            );
            let eq = simpson(
                &|t: f64| (1.0 - xi * xi * t.sin().powi(2)).sqrt(),
                0.0,
                FRAC_PI_2,
                1e-14,
            );
            assert_relative_eq!(elliptic_k_modulus(xi).unwrap(), kq, epsilon = 1e-10);
            assert_relative_eq!(elliptic_e_modulus(xi).unwrap(), eq, epsilon = 1e-10);
        }
    }

    #[test]
    fn elliptic_near_one() {
        // E is continuous at 1; K diverges logarithmically.
        let e = elliptic_e_modulus(1.0 - 1e-12).unwrap();
        assert!((e - 1.0).abs() < 1e-9);
        let k = elliptic_k_modulus(1.0 - 1e-12).unwrap();
        let approx = (4.0 / (1.0 - (1.0f64 - 1e-12).powi(2)).sqrt()).ln();
        assert!((k - approx).abs() < 1e-6);
    }

    #[test]
    fn bessel_at_zero() {
        assert_eq!(bessel_i_scaled(0, 0.0).unwrap(), 1.0);
        for k in 1..10 {
            assert_eq!(bessel_i_scaled(k, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn bessel_rejects_negative_argument() {
        assert!(bessel_i_scaled(0, -1.0).is_err());
        assert!(bessel_i_scaled(2, f64::NAN).is_err());
        assert!(bessel_i_scaled(2, f64::INFINITY).is_err());
    }

    #[test]
    fn bessel_matches_ascending_series() {
        let want = bessel_i_series(3, 7.5) * (-7.5f64).exp();
        assert_relative_eq!(bessel_i_scaled(3, 7.5).unwrap(), want, max_relative = 1e-13);

        for &x in &[0.01, 0.5, 2.0, 10.0, 30.0] {
            let seq = bessel_i_scaled_seq(x, 60).unwrap();
            for (k, &v) in seq.iter().enumerate() {
                let want = bessel_i_series(k, x) * (-x).exp();
                if want < 1e-290 {
                    continue;
                }
                assert_relative_eq!(v, want, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn bessel_large_argument_asymptotics() {
        // e^{-x} I_0(x) ~ 1/sqrt(2πx) (1 + 1/(8x) + 9/(128x²) + 225/(3072 x³))
        let x = 400.0f64;
        let want = (1.0 + 1.0 / (8.0 * x) + 9.0 / (128.0 * x * x)
            + 225.0 / (3072.0 * x * x * x))
            / (2.0 * PI * x).sqrt();
        assert_relative_eq!(bessel_i_scaled(0, x).unwrap(), want, max_relative = 1e-10);
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn step_mean_low_dimensions() {
        assert_relative_eq!(gaussian_step_mean(1).unwrap(), 2.0 / PI.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(gaussian_step_mean(2).unwrap(), PI.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(gaussian_step_mean(3).unwrap(), 4.0 / PI.sqrt(), epsilon = 1e-15);
        assert!((gaussian_step_mean(1).unwrap() - 1.128379).abs() < 1e-6);
        assert!((gaussian_step_mean(2).unwrap() - 1.772453).abs() < 1e-6);
        assert!((gaussian_step_mean(3).unwrap() - 2.256758).abs() < 1e-6);
        assert!(gaussian_step_mean(0).is_err());
    }

    #[test]
    fn step_mean_grows_like_sqrt_2d() {
        let d = 400;
        let m = gaussian_step_mean(d).unwrap();
        assert!((m / (2.0 * d as f64).sqrt() - 1.0).abs() < 1e-3);
    }
}
