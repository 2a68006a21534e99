use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{IntegralResult, IntegrationMethod};
use crate::geometry::ConvexBody;
use crate::{Error, Result};

pub const MC_DEFAULT_SEED: u64 = 0x5EED;
pub const MC_DEFAULT_SAMPLES: usize = 2_000_000;

/// Stratified Monte Carlo over the bounding box with a three-sigma error bound.
///
/// Each stratum draws from its own stream derived from `seed`, so the estimate does not
/// depend on how strata are distributed over threads. The bound is rejected when it
/// exceeds 1e-2 of `∫_D |f|` (the natural scale when `∫ f` itself nearly cancels).
pub fn monte_carlo_integral(
    body: &ConvexBody,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
    samples: usize,
    seed: u64,
) -> Result<IntegralResult> {
    let bbox = body.bounding_box();
    let d = body.dim();
    let per_axis: usize = match d {
        1 => 1024,
        2 => 32,
        _ => 12,
    };
    let strata = per_axis.pow(d as u32);
    let per_stratum = samples.div_ceil(strata).max(2);
    let cell: Vec<f64> = bbox.iter().map(|(lo, hi)| (hi - lo) / per_axis as f64).collect();
    let cell_vol: f64 = cell.iter().product();
    let parts: Vec<(f64, f64, f64)> = (0..strata)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (s as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut idx = s;
            let lo: Vec<f64> = (0..d)
                .map(|i| {
                    let k = idx % per_axis;
                    idx /= per_axis;
                    bbox[i].0 + k as f64 * cell[i]
                })
                .collect();
            let mut p = vec![0.0; d];
            let (mut sum, mut sq, mut abs) = (0.0, 0.0, 0.0);
            for _ in 0..per_stratum {
                for i in 0..d {
                    p[i] = lo[i] + cell[i] * rng.random::<f64>();
                }
                let v = if body.contains(&p) { f(&p) } else { 0.0 };
                sum += v;
                sq += v * v;
                abs += v.abs();
            }
            let n = per_stratum as f64;
            let mean = sum / n;
            let var = ((sq - n * mean * mean) / (n - 1.0)).max(0.0);
            (cell_vol * mean, cell_vol * cell_vol * var / n, cell_vol * abs / n)
        })
        .collect();
    let value: f64 = parts.iter().map(|p| p.0).sum();
    let var: f64 = parts.iter().map(|p| p.1).sum();
    let scale: f64 = parts.iter().map(|p| p.2).sum();
    let bound = 3.0 * var.sqrt();
    if bound > 1e-2 * scale.max(value.abs()) {
        return Err(Error::MCVarianceTooHigh { bound, scale });
    }
    Ok(IntegralResult { value, abs_error_bound: bound, method: IntegrationMethod::MonteCarlo })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_area_and_reproducibility() {
        let sq = ConvexBody::polygon(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let a = monte_carlo_integral(&sq, &|x| x[0], 200_000, 7).unwrap();
        let b = monte_carlo_integral(&sq, &|x| x[0], 200_000, 7).unwrap();
        assert_eq!(a, b);
        assert!((a.value - 1.0 / 6.0).abs() <= a.abs_error_bound);
    }
}
