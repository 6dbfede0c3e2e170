#![allow(dead_code)]

pub mod mcmc;

use predbayes::diag::ess;
use predbayes::stats::{mean, variance};

/// Adaptive Simpson on `[a, b]` with an explicit stack and a cap on the
/// number of subdivisions.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let simpson = |a: f64, fa: f64, fm: f64, b: f64, fb: f64| (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    // (a, b, fa, fm, fb, whole, tol, depth)
    let mut stack = vec![(a, b, fa, fm, fb, simpson(a, fa, fm, b, fb), tol, 0u32)];
    let mut total = 0.0;
    let mut splits = 0usize;
    while let Some((a, b, fa, fm, fb, whole, tol, depth)) = stack.pop() {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(a, fa, flm, m, fm);
        let right = simpson(m, fm, frm, b, fb);
        let delta = left + right - whole;
        if depth >= 40 || splits >= 100_000 || delta.abs() <= 15.0 * tol {
            total += left + right + delta / 15.0;
        } else {
            splits += 1;
            let t = (0.5 * tol).max(1e-16);
            stack.push((a, m, fa, flm, fm, left, t, depth + 1));
            stack.push((m, b, fm, frm, fb, right, t, depth + 1));
        }
    }
    total
}

/// Integral over the real line via `s = c + w t / (1 - t^2)`, with the
/// interval split into panels so narrow peaks are not stepped over.
pub fn integrate_real_at<F: Fn(f64) -> f64>(f: &F, c: f64, w: f64, tol: f64) -> f64 {
    let g = |t: f64| {
        let d = 1.0 - t * t;
        if d <= 0.0 {
            return 0.0;
        }
        let v = f(c + w * t / d) * w * (1.0 + t * t) / (d * d);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let panels = 64;
    (0..panels)
        .map(|k| {
            let a = -1.0 + 2.0 * k as f64 / panels as f64;
            integrate(&g, a, a + 2.0 / panels as f64, tol / panels as f64)
        })
        .sum()
}

pub fn integrate_real<F: Fn(f64) -> f64>(f: &F, tol: f64) -> f64 {
    integrate_real_at(f, 0.0, 1.0, tol)
}

/// Kolmogorov distance between the sample and a CDF.
pub fn ks_one_sample<F: Fn(f64) -> f64>(xs: &[f64], cdf: F) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// 1% critical value of the one-sample KS statistic.
pub fn ks_crit_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

pub fn ks2_crit_1pct(n: usize, m: usize) -> f64 {
    1.628 * ((n + m) as f64 / (n * m) as f64).sqrt()
}

/// Monte Carlo standard error of the mean of an autocorrelated series.
pub fn mcse(xs: &[f64]) -> f64 {
    let n_eff = ess(xs).unwrap_or(xs.len() as f64).max(1.0);
    (variance(xs) / n_eff).sqrt()
}

/// Two-sample z statistic for equal means with ESS-adjusted standard errors.
pub fn z_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let se = (mcse(a).powi(2) + mcse(b).powi(2)).sqrt();
    (mean(a) - mean(b)) / se
}

/// Two-sided standard normal quantile for a tail probability `p`.
pub fn z_crit(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::new(0.0, 1.0).unwrap().inverse_cdf(1.0 - p / 2.0)
}

pub fn gauss_jordan_inverse<const N: usize>(m: [[f64; N]; N]) -> [[f64; N]; N] {
    let mut a = m;
    let mut inv = [[0.0; N]; N];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for c in 0..N {
        let p = (c..N).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        inv.swap(c, p);
        let d = a[c][c];
        for k in 0..N {
            a[c][k] /= d;
            inv[c][k] /= d;
        }
        for r in 0..N {
            if r != c {
                let f = a[r][c];
                for k in 0..N {
                    a[r][k] -= f * a[c][k];
                    inv[r][k] -= f * inv[c][k];
                }
            }
        }
    }
    inv
}
