//! Decoy-state estimation: yield upper bounds for the phase-matching
//! protocol (linear-programming and analytical divided-difference paths),
//! the single-photon phase-error estimator, SNS decoy bounds, and
//! finite-statistics Chernoff intervals.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{complete_homogeneous, divided_difference, factorial, poisson_pmf};
use crate::simplex::LpProblem;

/// Square grid of per-photon-number quantities indexed by (m, n).
#[derive(Debug, Clone, PartialEq)]
pub struct YieldGrid {
    pub n_cut: usize,
    vals: Vec<f64>,
}

impl YieldGrid {
    pub fn filled(n_cut: usize, v: f64) -> Self {
        YieldGrid { n_cut, vals: vec![v; (n_cut + 1) * (n_cut + 1)] }
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.vals[m * (self.n_cut + 1) + n]
    }

    pub fn set(&mut self, m: usize, n: usize, v: f64) {
        self.vals[m * (self.n_cut + 1) + n] = v;
    }
}

/// Settings shared by both yield-bound paths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalDecoyConfig {
    /// Decoy launch fluxes, brightest first: u, v, w.
    pub decoys: [f64; 3],
    /// Photon-number truncation of the estimation grid.
    pub n_cut: usize,
    /// Indices with m + n >= y_cut take the trivial bound 1.
    pub y_cut: usize,
    /// Expected pulse pairs behind each ordered decoy row.
    pub row_pulses: f64,
    /// Statistical margin in Poisson sigmas on each row (0 disables).
    pub z_sigma: f64,
}

impl CalDecoyConfig {
    fn margin(&self, q: f64) -> f64 {
        if self.z_sigma == 0.0 {
            return 0.0;
        }
        let cnt = q * self.row_pulses;
        if cnt > 0.0 {
            self.z_sigma / libm::sqrt(cnt)
        } else {
            1.0
        }
    }

    fn ordered_combos(&self) -> [(f64, f64); 9] {
        let [u, v, w] = self.decoys;
        let mut out = [(0.0, 0.0); 9];
        let levels = [u, v, w];
        let mut k = 0;
        for &a in &levels {
            for &b in &levels {
                out[k] = (a, b);
                k += 1;
            }
        }
        out
    }
}

/// Per-photon-number yield upper bounds by linear programming. `gain(a, b)`
/// is the phase-averaged click probability of the target detector when the
/// two users launch fluxes a and b. Each ordered decoy row constrains the
/// Poisson mixture of yields within its statistical margin; truncated
/// Poisson mass is released into the row's upper side.
pub fn cal_yield_upper_bounds(
    cfg: &CalDecoyConfig,
    gain: impl Fn(f64, f64) -> f64,
) -> YieldGrid {
    let n = cfg.n_cut + 1;
    let nv = n * n;
    let mut lp = LpProblem::new(nv);
    for (a, b) in cfg.ordered_combos() {
        let q = gain(a, b);
        let m = cfg.margin(q) * q;
        let mut row = vec![0.0f64; nv];
        let mut mass = 0.0;
        for i in 0..n {
            for j in 0..n {
                let c = poisson_pmf(a, i as u32) * poisson_pmf(b, j as u32);
                if c >= 1e-16 {
                    row[i * n + j] = c;
                    mass += c;
                }
            }
        }
        let slack = 1.0 - mass;
        lp.add_le(&row, q + m);
        lp.add_ge(&row, q - slack - m);
    }
    for k in 0..nv {
        let mut e = vec![0.0f64; nv];
        e[k] = 1.0;
        lp.add_le(&e, 1.0);
    }
    let mut grid = YieldGrid::filled(cfg.n_cut, 1.0);
    for m in 0..n {
        for k in 0..n {
            if m + k >= cfg.y_cut {
                continue;
            }
            let mut obj = vec![0.0f64; nv];
            obj[m * n + k] = 1.0;
            let (v, _) = lp
                .maximize(&obj)
                .expect("decoy LP must stay feasible: the true yields satisfy every row");
            grid.set(m, k, v.clamp(0.0, 1.0));
        }
    }
    grid
}

/// Analytical counterpart of [`cal_yield_upper_bounds`]: two-dimensional
/// Newton divided differences of G(a,b) = e^(a+b) Q(a,b) over decoy subsets,
/// normalised by complete homogeneous symmetric polynomials, minimised over
/// subset choices; statistical margins propagate through the absolute
/// divided-difference coefficients. Y00 is refined by subtracting one-sided
/// single-photon lower bounds.
pub fn cal_yield_upper_bounds_analytic(
    cfg: &CalDecoyConfig,
    gain: impl Fn(f64, f64) -> f64,
) -> YieldGrid {
    let [u, v, w] = cfg.decoys;
    let graw = |a: f64, b: f64| libm::exp(a + b) * gain(a, b);
    let n = cfg.n_cut + 1;
    // subset pools per divided-difference order (order 0, 1, 2)
    let subsets: [&[&[f64]]; 3] = [
        &[&[w]],
        &[&[w, v], &[w, u], &[v, u]],
        &[&[w, v, u]],
    ];

    let dd2_margined = |pa: &[f64], pb: &[f64]| -> f64 {
        let vals: Vec<f64> = pa
            .iter()
            .map(|&a| {
                let row: Vec<f64> = pb.iter().map(|&b| graw(a, b)).collect();
                divided_difference(pb, &row)
            })
            .collect();
        let base = divided_difference(pa, &vals);
        let mut err = 0.0;
        for (i, &a) in pa.iter().enumerate() {
            let mut ca = 1.0;
            for (l, &al) in pa.iter().enumerate() {
                if l != i {
                    ca /= (a - al).abs();
                }
            }
            for (j, &b) in pb.iter().enumerate() {
                let mut cb = 1.0;
                for (l, &bl) in pb.iter().enumerate() {
                    if l != j {
                        cb /= (b - bl).abs();
                    }
                }
                err += ca * cb * cfg.margin(gain(a, b)) * graw(a, b);
            }
        }
        base + err
    };

    let mut grid = YieldGrid::filled(cfg.n_cut, 1.0);
    for m in 0..n {
        for k in 0..n {
            if m + k >= cfg.y_cut {
                continue;
            }
            let mut best = 1.0f64;
            for sa in 0..(m + 1).min(3) {
                for sb in 0..(k + 1).min(3) {
                    for pa in subsets[sa] {
                        for pb in subsets[sb] {
                            let ca = complete_homogeneous(m as i32 - sa as i32, pa)
                                / factorial(m as u32);
                            let cb = complete_homogeneous(k as i32 - sb as i32, pb)
                                / factorial(k as u32);
                            if ca <= 0.0 || cb <= 0.0 {
                                continue;
                            }
                            best = best.min(dd2_margined(pa, pb) / (ca * cb));
                        }
                    }
                }
            }
            grid.set(m, k, best.max(0.0));
        }
    }

    // one-sided single-photon lower bounds feed a subtractive Y00 refinement
    let z1_low = |side_a: bool| -> f64 {
        let h = |mu: f64| if side_a { graw(mu, w) } else { graw(w, mu) };
        let mg = |a: f64, b: f64| cfg.margin(gain(a, b));
        let (mv, mu_) = if side_a { (mg(v, w), mg(u, w)) } else { (mg(w, v), mg(w, u)) };
        let mw = mg(w, w);
        let z = (u / (u * v - v * v))
            * (h(v) * (1.0 - mv)
                - (v * v) / (u * u) * h(u) * (1.0 + mu_)
                - (u * u - v * v) / (u * u) * graw(w, w) * (1.0 + mw));
        z.max(0.0)
    };
    let qww = gain(w, w);
    let y00 = libm::exp(2.0 * w)
        * (qww * (1.0 + cfg.margin(qww)) - w * libm::exp(-2.0 * w) * (z1_low(true) + z1_low(false))
            + w * w * libm::exp(-2.0 * w) * grid.get(1, 1));
    let refined = grid.get(0, 0).min(y00.max(0.0));
    grid.set(0, 0, refined);
    grid
}

/// Single-photon phase-error upper bound of the phase-matching protocol from
/// a grid of yield upper bounds: coherent-state amplitudes of each photon
/// parity interfere through the square roots of the bounded yields, and the
/// two parity contributions add in quadrature against the coding gain `qz`.
pub fn cal_phase_error(grid: &YieldGrid, mu: f64, qz: f64, y_cut: usize) -> f64 {
    let n = grid.n_cut + 1;
    let c = |k: usize, j: usize| -> f64 {
        if k % 2 != j {
            return 0.0;
        }
        libm::exp(-mu / 2.0) * libm::pow(mu, k as f64 / 2.0) / libm::sqrt(factorial(k as u32))
    };
    let mut tot = 0.0;
    for j in 0..2 {
        let mut ss = 0.0;
        for m in 0..n {
            for k in 0..n {
                let g = if m + k < y_cut { grid.get(m, k) } else { 1.0 };
                ss += c(m, j) * c(k, j) * libm::sqrt(g.max(0.0));
            }
        }
        tot += ss * ss;
    }
    (tot / qz).min(1.0)
}

/// Observed quantities feeding the SNS decoy bounds, all per-pulse-pair and
/// already conditioned on the relevant pattern rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnsObservables {
    /// Vacuum-like yield (both users effectively off).
    pub y0: f64,
    /// One-sided gain when one user launches flux u, the other off.
    pub q_u: f64,
    /// Same at flux v.
    pub q_v: f64,
    /// Matched X-basis gain with both at flux v.
    pub q_vv: f64,
    /// Error rate of the matched vv rows.
    pub e_vv: f64,
    pub flux_u: f64,
    pub flux_v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnsBounds {
    pub y0_lower: f64,
    pub y1_lower: f64,
    pub e1ph_upper: f64,
}

/// Two-decoy SNS bounds: standard single-photon yield lower bound from the
/// u/v one-sided gains, and the matched-vv phase-error estimator with the
/// vacuum contribution at error rate 1/2 subtracted.
pub fn sns_decoy_bounds(obs: &SnsObservables) -> SnsBounds {
    let (u, v) = (obs.flux_u, obs.flux_v);
    assert!(u > v && v > 0.0, "decoy fluxes must satisfy u > v > 0");
    let y1 = (u / (u * v - v * v))
        * (obs.q_v * libm::exp(v)
            - (v * v) / (u * u) * obs.q_u * libm::exp(u)
            - (u * u - v * v) / (u * u) * obs.y0);
    let y1 = y1.max(0.0);
    let e1 = if y1 > 0.0 {
        let num = obs.e_vv * obs.q_vv - 0.5 * libm::exp(-2.0 * v) * obs.y0;
        (num / (2.0 * v * libm::exp(-2.0 * v) * y1)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    SnsBounds { y0_lower: obs.y0.max(0.0), y1_lower: y1, e1ph_upper: e1 }
}

/// Two-sided Chernoff interval on the true mean of a Poisson-like count
/// given `observed` events, each tail at failure probability `epsilon`.
/// Inverts the Kullback-Leibler tail exponent by bisection; observed = 0
/// yields the exact (0, ln(1/eps)) interval.
pub fn chernoff_interval(observed: f64, epsilon: f64) -> (f64, f64) {
    assert!(observed >= 0.0 && epsilon > 0.0 && epsilon < 1.0);
    let log_eps = libm::log(epsilon);
    // log of the tail bound exp(-mu) (e mu / x)^x, shared by both tails
    let log_tail = |mu: f64| -> f64 {
        if observed == 0.0 {
            -mu
        } else {
            observed * libm::log(mu / observed) + observed - mu
        }
    };
    let bisect = |mut lo: f64, mut hi: f64, rising: bool| -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let above = log_tail(mid) > log_eps;
            if above == rising {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-12 * (1.0 + hi) {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    let upper = {
        let mut hi = observed.max(1.0);
        while log_tail(hi) > log_eps {
            hi *= 2.0;
        }
        bisect(observed, hi, true)
    };
    let lower = if observed == 0.0 {
        0.0
    } else {
        let mut lo = observed;
        while log_tail(lo) > log_eps && lo > 1e-300 {
            lo *= 0.5;
        }
        bisect(lo, observed, false)
    };
    (lower, upper)
}
