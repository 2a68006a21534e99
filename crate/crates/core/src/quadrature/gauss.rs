//! Gauss–Legendre rules.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights of the `m`-point Gauss–Legendre rule on `[-1, 1]`, ascending.
pub fn gauss_legendre(m: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().unwrap().get(&m) {
        return r.clone();
    }
    let rule = Arc::new(compute(m));
    cache.lock().unwrap().insert(m, rule.clone());
    rule
}

fn compute(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m > 0);
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Tricomi's initial guess, then Newton on P_m.
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(m, t);
            dp = d;
            let dt = p / d;
            t -= dt;
            if dt.abs() < 1e-16 {
                let (_, d) = legendre_and_derivative(m, t);
                dp = d;
                break;
            }
        }
        x[i] = -t;
        x[m - 1 - i] = t;
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    if m % 2 == 1 {
        x[m / 2] = 0.0;
    }
    (x, w)
}

fn legendre_and_derivative(m: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    for k in 1..m {
        let p2 = ((2 * k + 1) as f64 * t * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if m == 0 { 1.0 } else { p1 };
    let d = m as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p, d)
}

/// Rule on `[a, b]` as `(node, weight)` pairs.
pub fn gauss_on(m: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let rule = gauss_legendre(m);
    let (h, c) = (0.5 * (b - a), 0.5 * (b + a));
    rule.0
        .iter()
        .zip(&rule.1)
        .map(|(x, w)| (c + h * x, h * w))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_monomials_exactly() {
        for m in [1, 2, 5, 16, 40, 80] {
            let rule = gauss_legendre(m);
            for k in 0..2 * m {
                let s: f64 = rule.0.iter().zip(&rule.1).map(|(x, w)| w * x.powi(k as i32)).sum();
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((s - exact).abs() < 5e-15 * (m as f64), "m={m} k={k} {s} {exact}");
            }
        }
    }

    #[test]
    fn weights_sum_to_two() {
        let r = gauss_legendre(33);
        assert!((r.1.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        assert!(r.0.windows(2).all(|w| w[0] < w[1]));
    }
}
