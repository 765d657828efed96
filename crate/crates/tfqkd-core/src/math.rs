//! Small numerical helpers shared across the crate.

/// Binary entropy h(p) in bits, with h(0) = h(1) = 0.
pub fn binary_entropy(p: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "binary_entropy: p out of [0,1]");
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -(p * log2(p) + (1.0 - p) * log2(1.0 - p))
}

/// Base-2 logarithm.
pub fn log2(x: f64) -> f64 {
    libm::log(x) / core::f64::consts::LN_2
}

/// k! as f64; exact for k <= 20, asymptotically correct beyond.
pub fn factorial(k: u32) -> f64 {
    let mut f = 1.0;
    for i in 2..=k {
        f *= i as f64;
    }
    f
}

/// Poisson probability mass e^(-mu) mu^k / k!.
pub fn poisson_pmf(mu: f64, k: u32) -> f64 {
    if mu == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    libm::exp(-mu + k as f64 * libm::log(mu)) / factorial(k)
}

/// Modified Bessel function I0 by its power series; adequate for the small
/// arguments (|x| < 5) that interference averaging produces.
pub fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= q / ((k * k) as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Mean of `f` over a Gaussian N(0, sigma^2), by Simpson's rule on
/// [-8 sigma, 8 sigma]. Deterministic; relative accuracy far below any
/// statistical tolerance used by callers.
pub fn gauss_mean(sigma: f64, f: impl Fn(f64) -> f64) -> f64 {
    if sigma == 0.0 {
        return f(0.0);
    }
    let n = 512usize; // even
    let a = -8.0 * sigma;
    let hstep = 16.0 * sigma / n as f64;
    let norm = 1.0 / (sigma * libm::sqrt(2.0 * core::f64::consts::PI));
    let weight = |x: f64| norm * libm::exp(-x * x / (2.0 * sigma * sigma));
    let g = |x: f64| weight(x) * f(x);
    let mut sum = g(a) + g(a + 16.0 * sigma);
    for i in 1..n {
        let x = a + i as f64 * hstep;
        sum += g(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * hstep / 3.0
}

/// Mean of `f` over the uniform distribution on [lo, hi] (Simpson).
pub fn interval_mean(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    assert!(hi > lo);
    let n = 256usize;
    let hstep = (hi - lo) / n as f64;
    let mut sum = f(lo) + f(hi);
    for i in 1..n {
        sum += f(lo + i as f64 * hstep) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * hstep / 3.0 / (hi - lo)
}

/// Complete homogeneous symmetric polynomial h_deg over the given points.
/// h_0 = 1; returns 0 for negative degree.
pub fn complete_homogeneous(deg: i32, pts: &[f64]) -> f64 {
    if deg < 0 {
        return 0.0;
    }
    // dynamic programming over h_d(x_1..x_k) = h_d(x_1..x_{k-1}) + x_k h_{d-1}(x_1..x_k)
    let d = deg as usize;
    let mut h = alloc::vec![0.0f64; d + 1];
    h[0] = 1.0;
    for &x in pts {
        for j in 1..=d {
            h[j] += x * h[j - 1];
        }
    }
    h[d]
}

/// Newton divided difference of the samples `vals` at the points `pts`.
pub fn divided_difference(pts: &[f64], vals: &[f64]) -> f64 {
    assert_eq!(pts.len(), vals.len());
    let mut a = alloc::vec::Vec::from(vals);
    for j in 1..pts.len() {
        for i in (j..pts.len()).rev() {
            a[i] = (a[i] - a[i - 1]) / (pts[i] - pts[i - j]);
        }
    }
    a[pts.len() - 1]
}

/// Sample standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() - 1) as f64;
    libm::sqrt(var)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_endpoints() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn entropy_known_value() {
        // direct evaluation at p = 0.11
        assert!((binary_entropy(0.11) - 0.4999159582).abs() < 1e-9);
    }

    #[test]
    fn poisson_mass_sums_to_one() {
        let s: f64 = (0..40).map(|k| poisson_pmf(1.3, k)).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bessel_i0_matches_series_reference() {
        // reference values from the defining series evaluated independently
        assert!((bessel_i0(0.0) - 1.0).abs() < 1e-15);
        assert!((bessel_i0(1.0) - 1.2660658777520084).abs() < 1e-13);
        assert!((bessel_i0(2.5) - 3.2898391440501231).abs() < 1e-12);
    }

    #[test]
    fn gauss_mean_of_quadratic_is_variance() {
        let v = gauss_mean(0.3, |x| x * x);
        assert!((v - 0.09).abs() < 1e-9);
    }

    #[test]
    fn divided_difference_picks_leading_coefficient() {
        // f(x) = 3x^2 + 2x + 1 over three points: second dd = 3
        let pts = [0.1, 0.4, 0.9];
        let vals: alloc::vec::Vec<f64> =
            pts.iter().map(|&x| 3.0 * x * x + 2.0 * x + 1.0).collect();
        assert!((divided_difference(&pts, &vals) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn complete_homogeneous_small_cases() {
        let pts = [2.0, 3.0];
        assert_eq!(complete_homogeneous(0, &pts), 1.0);
        assert_eq!(complete_homogeneous(1, &pts), 5.0);
        assert_eq!(complete_homogeneous(2, &pts), 4.0 + 6.0 + 9.0);
        assert_eq!(complete_homogeneous(-1, &pts), 0.0);
    }
}
