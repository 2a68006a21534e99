use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{summarize, Params, Record, RunContext, Summary};
use crate::christoffel::{christoffel_1d, christoffel_eval_with, EvalOptions};
use crate::constructions::{bound_rhs, certify, sharpness_body_2d, sharpness_body_nd};
use crate::geometry::{exit_distance, measure, ConvexBody};
use crate::linalg::binomial;
use crate::{Error, Result};

type Outcome = Result<(Vec<Record>, Summary)>;

pub struct Experiment {
    pub name: &'static str,
    /// Accepted parameter keys.
    pub keys: &'static [&'static str],
    pub about: &'static str,
    pub run: fn(&Params, &RunContext) -> Outcome,
}

pub static EXPERIMENTS: &[Experiment] = &[
    Experiment { name: "interval-oracle", keys: &["ns", "points"], about: "Gram path against the Legendre closed form on [-1,1]", run: interval_oracle },
    Experiment { name: "disc-center", keys: &["ns"], about: "lambda_n(disc, 0) * C(n+2,2) against 2 pi", run: disc_center },
    Experiment { name: "disc-edge", keys: &["ns", "deltas"], about: "lambda_n(disc, (1-delta,0)) n^2 / sqrt(delta) plateau", run: disc_edge },
    Experiment { name: "lp-exponent", keys: &["alphas", "n", "deltas"], about: "log-log slope of lambda_n(B_alpha, (1-delta,0)) in delta", run: lp_exponent },
    Experiment { name: "lp-diagonal", keys: &["alpha", "ns", "deltas"], about: "lambda_n(B_alpha, (1-delta) x0) n^2 / sqrt(delta) plateau", run: lp_diagonal },
    Experiment { name: "halfball-rim-step", keys: &["ns", "mus"], about: "lambda_n(half ball, (1-mu,0,mu/4)) n^3 / mu plateau", run: halfball_rim_step },
    Experiment { name: "boundary-step", keys: &["ns"], about: "lambda_n(D, mu x) / lambda_n(D, x) for boundary x", run: boundary_step },
    Experiment { name: "sharpness-2d", keys: &["ns", "sigma"], about: "lambda_n over the planar bound on extremal bodies", run: sharpness_2d },
    Experiment { name: "sharpness-3d", keys: &["ns", "sigma"], about: "lambda_n over the spatial bound on extremal bodies", run: sharpness_3d },
    Experiment { name: "certify-vs-truth", keys: &["ns", "sigma"], about: "needle certificates against lambda_n and the bound", run: certify_vs_truth },
    Experiment { name: "conjecture-lp", keys: &["alpha", "n", "count"], about: "lambda_n(B_alpha, x) n^2 / sqrt(l1 l2) at random x", run: conjecture_lp },
];

fn opts(ctx: &RunContext) -> EvalOptions {
    EvalOptions { precision: ctx.precision, john: false }
}

fn lambda(body: &ConvexBody, n: usize, x: &[f64], ctx: &RunContext) -> Result<f64> {
    Ok(christoffel_eval_with(body, n, x, opts(ctx))?.lambda)
}

fn log_space(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    (0..k).map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (k - 1) as f64).exp()).collect()
}

fn require(ok: bool, what: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::ParamOutOfRange(what()))
    }
}

fn check_ns(ns: &[usize], lo: usize, hi: usize) -> Result<()> {
    require(!ns.is_empty() && ns.iter().all(|n| (lo..=hi).contains(n)), || format!("ns must lie in [{lo}, {hi}], got {ns:?}"))
}

fn check_unit(name: &str, v: &[f64], lo: f64, hi: f64) -> Result<()> {
    require(!v.is_empty() && v.iter().all(|t| *t > lo && *t < hi), || format!("{name} must lie in ({lo}, {hi}), got {v:?}"))
}

fn plain(records: Vec<Record>) -> Summary {
    summarize(&records, false, &BTreeMap::new())
}

/// Grid points evaluated on the rayon pool, kept in grid order.
fn par_grid<T: Sync, F>(grid: &[T], f: F) -> Result<Vec<Record>>
where
    F: Fn(&T) -> Result<Record> + Sync + Send,
{
    grid.par_iter().map(f).collect()
}

fn interval_oracle(p: &Params, ctx: &RunContext) -> Outcome {
    let ns = p.sizes("ns", &(1..=40).collect::<Vec<_>>())?;
    check_ns(&ns, 0, 60)?;
    let k = p.size("points", 11)?;
    require(k >= 2, || format!("points must be at least 2, got {k}"))?;
    let body = ConvexBody::interval();
    let xs: Vec<f64> = (0..k).map(|j| (PI * j as f64 / (k - 1) as f64).cos()).collect();
    let grid: Vec<(usize, f64)> = ns.iter().flat_map(|&n| xs.iter().map(move |&x| (n, x))).collect();
    let records = par_grid(&grid, |&(n, x)| {
        let lam = lambda(&body, n, &[x], ctx)?;
        let reference = christoffel_1d(n, x);
        Ok(Record {
            body: "interval".into(),
            n,
            x: vec![x],
            param: x,
            slice: format!("n={n}"),
            lambda: lam,
            reference: Some(reference),
            certificate: None,
            ratio: lam / reference,
        })
    })?;
    let mut s = plain(records.clone());
    let worst = records.iter().map(|r| (r.ratio - 1.0).abs()).fold(0.0, f64::max);
    s.values.insert("max_rel_error".into(), worst);
    Ok((records, s))
}

fn disc_center(p: &Params, ctx: &RunContext) -> Outcome {
    let ns = p.sizes("ns", &[4, 8, 12, 16, 20, 24, 28, 32])?;
    check_ns(&ns, 1, 32)?;
    let body = ConvexBody::unit_ball(2);
    let records = par_grid(&ns, |&n| {
        let lam = lambda(&body, n, &[0.0, 0.0], ctx)?;
        let dim = binomial(n + 2, 2) as f64;
        Ok(Record {
            body: "disc".into(),
            n,
            x: vec![0.0, 0.0],
            param: n as f64,
            slice: "disc".into(),
            lambda: lam,
            reference: Some(2.0 * PI / dim),
            certificate: None,
            ratio: lam * dim / (2.0 * PI),
        })
    })?;
    let mut s = plain(records.clone());
    let dev: Vec<f64> = records.iter().map(|r| (r.ratio - 1.0).abs()).collect();
    let decreasing = dev.windows(2).all(|w| w[1] < w[0]);
    s.values.insert("deviation_decreasing".into(), if decreasing { 1.0 } else { 0.0 });
    s.values.insert("last_deviation".into(), *dev.last().unwrap());
    Ok((records, s))
}

fn edge_records(
    body: &ConvexBody,
    label: &str,
    dir: &[f64],
    ns: &[usize],
    deltas: &[f64],
    ctx: &RunContext,
) -> Result<Vec<Record>> {
    let grid: Vec<(usize, f64)> = ns.iter().flat_map(|&n| deltas.iter().map(move |&d| (n, d))).collect();
    par_grid(&grid, |&(n, delta)| {
        let x: Vec<f64> = dir.iter().map(|c| (1.0 - delta) * c).collect();
        let lam = lambda(body, n, &x, ctx)?;
        let nf = n as f64;
        Ok(Record {
            body: label.into(),
            n,
            x,
            param: delta,
            slice: format!("n={n}"),
            lambda: lam,
            reference: Some(delta.sqrt() / (nf * nf)),
            certificate: None,
            ratio: lam * nf * nf / delta.sqrt(),
        })
    })
}

fn disc_edge(p: &Params, ctx: &RunContext) -> Outcome {
    let ns = p.sizes("ns", &[8, 12, 16, 20, 24])?;
    let deltas = p.floats("deltas", &[0.05, 0.1, 0.2, 0.4])?;
    check_ns(&ns, 1, 32)?;
    check_unit("deltas", &deltas, 0.0, 1.0)?;
    let records = edge_records(&ConvexBody::unit_ball(2), "disc", &[1.0, 0.0], &ns, &deltas, ctx)?;
    Ok((records.clone(), plain(records)))
}

fn lp_exponent(p: &Params, ctx: &RunContext) -> Outcome {
    let alphas = p.floats("alphas", &[1.2, 1.5, 2.0])?;
    let n = p.size("n", 20)?;
    let deltas = p.floats("deltas", &log_space(0.02, 0.3, 7))?;
    check_ns(&[n], 1, 32)?;
    check_unit("deltas", &deltas, 0.0, 1.0)?;
    require(alphas.iter().all(|a| *a > 1.0), || format!("alphas must exceed 1, got {alphas:?}"))?;
    require(deltas.len() >= 2, || "at least two deltas are needed for a slope".into())?;
    let mut records = Vec::new();
    let mut targets = BTreeMap::new();
    for &a in &alphas {
        let body = ConvexBody::lp_ball(a, 2)?;
        let slice = format!("alpha={a}");
        targets.insert(slice.clone(), 1.0 / a);
        let nf = n as f64;
        records.extend(par_grid(&deltas, |&delta| {
            let x = vec![1.0 - delta, 0.0];
            let lam = lambda(&body, n, &x, ctx)?;
            let reference = delta.powf(1.0 / a) / (nf * nf);
            Ok(Record {
                body: format!("lpball:{a}"),
                n,
                x,
                param: delta,
                slice: slice.clone(),
                lambda: lam,
                reference: Some(reference),
                certificate: None,
                ratio: lam / reference,
            })
        })?);
    }
    let s = summarize(&records, true, &targets);
    Ok((records, s))
}

fn lp_diagonal(p: &Params, ctx: &RunContext) -> Outcome {
    let a = p.float("alpha", 1.5)?;
    let ns = p.sizes("ns", &[8, 12, 16, 20, 24])?;
    let deltas = p.floats("deltas", &[0.05, 0.1, 0.2, 0.4])?;
    check_ns(&ns, 1, 32)?;
    check_unit("deltas", &deltas, 0.0, 1.0)?;
    require(a > 1.0, || format!("alpha must exceed 1, got {a}"))?;
    let c = 2f64.powf(-1.0 / a);
    let records = edge_records(&ConvexBody::lp_ball(a, 2)?, &format!("lpball:{a}"), &[c, c], &ns, &deltas, ctx)?;
    Ok((records.clone(), plain(records)))
}

fn halfball_rim_step(p: &Params, ctx: &RunContext) -> Outcome {
    let ns = p.sizes("ns", &[6, 8, 10, 12, 14])?;
    let mus = p.floats("mus", &[0.05, 0.1, 0.2])?;
    check_ns(&ns, 1, 14)?;
    check_unit("mus", &mus, 0.0, 1.0)?;
    let body = ConvexBody::half_ball3();
    let grid: Vec<(usize, f64)> = ns.iter().flat_map(|&n| mus.iter().map(move |&m| (n, m))).collect();
    let records = par_grid(&grid, |&(n, mu)| {
        let x = vec![1.0 - mu, 0.0, mu / 4.0];
        let lam = lambda(&body, n, &x, ctx)?;
        let n3 = (n as f64).powi(3);
        Ok(Record {
            body: "halfball3".into(),
            n,
            x,
            param: mu,
            slice: format!("n={n}"),
            lambda: lam,
            reference: Some(mu / n3),
            certificate: None,
            ratio: lam * n3 / mu,
        })
    })?;
    Ok((records.clone(), plain(records)))
}

/// `c(d) = 2^{-3-d/2}`.
pub fn step_constant(d: usize) -> f64 {
    2f64.powf(-3.0 - d as f64 / 2.0)
}

fn boundary_step(p: &Params, ctx: &RunContext) -> Outcome {
    let ns = p.sizes("ns", &[8, 16, 24])?;
    check_ns(&ns, 1, 32)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let cases: Vec<(&str, ConvexBody, Vec<f64>)> = vec![
        ("disc", ConvexBody::unit_ball(2), vec![1.0, 0.0]),
        ("disc", ConvexBody::unit_ball(2), vec![s, s]),
        ("square", ConvexBody::square(-1.0, 1.0), vec![1.0, 0.0]),
        ("square", ConvexBody::square(-1.0, 1.0), vec![1.0, 0.5]),
        ("square", ConvexBody::square(-1.0, 1.0), vec![1.0, 1.0]),
    ];
    let grid: Vec<(usize, usize)> = (0..cases.len()).flat_map(|c| ns.iter().map(move |&n| (c, n))).collect();
    let records = par_grid(&grid, |&(c, n)| {
        let (label, body, x) = &cases[c];
        let mu = 1.0 - step_constant(2) / (n * n) as f64;
        let inner: Vec<f64> = x.iter().map(|v| mu * v).collect();
        let at_x = lambda(body, n, x, ctx)?;
        let lam = lambda(body, n, &inner, ctx)?;
        Ok(Record {
            body: label.to_string(),
            n,
            x: inner,
            param: mu,
            slice: label.to_string(),
            lambda: lam,
            reference: Some(at_x),
            certificate: None,
            ratio: lam / at_x,
        })
    })?;
    Ok((records.clone(), plain(records)))
}

/// `(δ, l₁, l₂)` with `10δ < l_i < 1/10`.
pub const SHARP_2D_CASES: [(f64, f64, f64); 8] = [
    (0.002, 0.03, 0.05),
    (0.002, 0.05, 0.03),
    (0.002, 0.025, 0.09),
    (0.002, 0.08, 0.08),
    (0.005, 0.06, 0.09),
    (0.005, 0.07, 0.06),
    (0.001, 0.02, 0.03),
    (0.001, 0.015, 0.09),
];

/// `(δ, v)` pairs for the spatial construction; the section radius stays within a factor
/// of two of the chord half-width `√(δ(4−δ))`.
pub const SHARP_3D_CASES: [(f64, f64); 6] = [(0.02, 0.1), (0.02, 0.3), (0.02, 1.0), (0.05, 0.3), (0.05, 0.6), (0.05, 1.5)];

fn sharpness_2d(p: &Params, ctx: &RunContext) -> Outcome {
    let ns = p.sizes("ns", &[10, 16, 22])?;
    let sigma = p.float("sigma", 0.1)?;
    check_ns(&ns, 1, 32)?;
    require(sigma > 0.0, || format!("sigma must be positive, got {sigma}"))?;
    let bodies = SHARP_2D_CASES
        .iter()
        .map(|&(d, l1, l2)| sharpness_body_2d(d, l1, l2))
        .collect::<Result<Vec<_>>>()?;
    let grid: Vec<(usize, usize)> = (0..bodies.len()).flat_map(|c| ns.iter().map(move |&n| (c, n))).collect();
    let records = par_grid(&grid, |&(c, n)| {
        let (d, l1, l2) = SHARP_2D_CASES[c];
        let sb = &bodies[c];
        let meas = measure(&sb.body, &sb.x, Some(&sb.u))?;
        let rhs = bound_rhs(&meas, n, sigma)?;
        let lam = lambda(&sb.body, n, &sb.x, ctx)?;
        Ok(Record {
            body: format!("sharp2d:{d},{l1},{l2}"),
            n,
            x: sb.x.clone(),
            param: (l1 * l2).min(d),
            slice: format!("n={n}"),
            lambda: lam,
            reference: Some(rhs),
            certificate: None,
            ratio: lam / rhs,
        })
    })?;
    let mut s = plain(records.clone());
    let rt = bodies.iter().map(|b| b.round_trip_error).fold(0.0, f64::max);
    s.values.insert("max_round_trip_error".into(), rt);
    Ok((records, s))
}

fn sharpness_3d(p: &Params, ctx: &RunContext) -> Outcome {
    let ns = p.sizes("ns", &[8, 12])?;
    let sigma = p.float("sigma", 1.0)?;
    check_ns(&ns, 1, 14)?;
    require(sigma > 0.0, || format!("sigma must be positive, got {sigma}"))?;
    let bodies = SHARP_3D_CASES
        .iter()
        .map(|&(d, v)| sharpness_body_nd(d, v, 3, None))
        .collect::<Result<Vec<_>>>()?;
    let grid: Vec<(usize, usize)> = (0..bodies.len()).flat_map(|c| ns.iter().map(move |&n| (c, n))).collect();
    let records = par_grid(&grid, |&(c, n)| {
        let (d, v) = SHARP_3D_CASES[c];
        let sb = &bodies[c];
        let nf = n as f64;
        if d < sigma / (nf * nf) {
            return Err(Error::SigmaViolated { delta: d, threshold: sigma / (nf * nf) });
        }
        let rhs = d.sqrt().min(v / d.sqrt()) / nf.powi(3);
        let lam = lambda(&sb.body, n, &sb.x, ctx)?;
        Ok(Record {
            body: format!("sharpnd:{d},{v},3"),
            n,
            x: sb.x.clone(),
            param: sb.mu,
            slice: format!("n={n}"),
            lambda: lam,
            reference: Some(rhs),
            certificate: None,
            ratio: lam / rhs,
        })
    })?;
    let mut s = plain(records.clone());
    let rt = bodies.iter().map(|b| b.round_trip_error).fold(0.0, f64::max);
    s.values.insert("max_round_trip_error".into(), rt);
    Ok((records, s))
}

/// Point at relative depth `delta` below the boundary point in direction `theta`.
fn depth_point(body: &ConvexBody, theta: f64, delta: f64) -> Result<Vec<f64>> {
    let origin = vec![0.0; 2];
    let dir = vec![theta.cos(), theta.sin()];
    let r = exit_distance(body, &origin, &dir)?;
    Ok(dir.iter().map(|c| (1.0 - delta) * r * c).collect())
}

/// `(θ, relative depth)` probes shared by the planar certificate cases.
pub const CERTIFY_POINTS_2D: [(f64, f64); 4] = [(0.0, 0.05), (0.5, 0.1), (1.2, 0.2), (2.5, 0.4)];

/// Half-ball points for the spatial certificate cases.
pub const CERTIFY_POINTS_3D: [[f64; 3]; 3] = [[0.0, 0.0, 0.3], [0.5, 0.2, 0.2], [0.0, -0.6, 0.1]];

pub const CERTIFY_NS_3D: [usize; 2] = [6, 12];

fn certify_vs_truth(p: &Params, ctx: &RunContext) -> Outcome {
    let ns = p.sizes("ns", &[8, 16])?;
    let sigma = p.float("sigma", 0.1)?;
    check_ns(&ns, 2, 32)?;
    require(sigma >= 0.0, || format!("sigma must be non-negative, got {sigma}"))?;
    let mut cases: Vec<(String, ConvexBody, Vec<f64>, usize)> = Vec::new();
    for label in ["disc", "square", "lpball:1.5"] {
        let body = super::resolve_body(label)?.body;
        for &(th, dl) in &CERTIFY_POINTS_2D {
            let x = depth_point(&body, th, dl)?;
            for &n in &ns {
                cases.push((label.to_string(), body.clone(), x.clone(), n));
            }
        }
    }
    for x in CERTIFY_POINTS_3D {
        for n in CERTIFY_NS_3D {
            cases.push(("halfball3".into(), ConvexBody::half_ball3(), x.to_vec(), n));
        }
    }
    let records = par_grid(&cases, |(label, body, x, n)| {
        let n = *n;
        let (meas, cert) = certify(body, x, n)?;
        let lam = lambda(body, n, x, ctx)?;
        let rhs = bound_rhs(&meas, n, sigma)?;
        Ok(Record {
            body: label.clone(),
            n,
            x: x.clone(),
            param: meas.delta,
            slice: format!("{label} d={}", x.len()),
            lambda: lam,
            reference: Some(cert.box_bound),
            certificate: Some(cert.l2sq.value),
            ratio: cert.l2sq.value / rhs,
        })
    })?;
    let mut s = plain(records.clone());
    let mut lower = 0f64;
    let mut upper = 0f64;
    let (mut lo2, mut hi2) = (f64::INFINITY, 0f64);
    for r in &records {
        let c = r.certificate.unwrap();
        lower = lower.max((r.lambda - c) / c);
        upper = upper.max((c - r.reference.unwrap()) / c);
        if r.x.len() == 2 {
            lo2 = lo2.min(r.ratio);
            hi2 = hi2.max(r.ratio);
        }
    }
    s.values.insert("lambda_over_certificate_excess".into(), lower);
    s.values.insert("certificate_over_box_excess".into(), upper);
    s.values.insert("ratio_spread_2d".into(), hi2 / lo2);
    Ok((records, s))
}

fn conjecture_lp(p: &Params, ctx: &RunContext) -> Outcome {
    let a = p.float("alpha", 1.5)?;
    let n = p.size("n", 16)?;
    let count = p.size("count", 12)?;
    check_ns(&[n], 1, 32)?;
    require(a > 1.0, || format!("alpha must exceed 1, got {a}"))?;
    require(count > 0, || "count must be positive".into())?;
    let body = ConvexBody::lp_ball(a, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let draws: Vec<(f64, f64)> = (0..count)
        .map(|_| {
            let th = rng.random_range(0.0..2.0 * PI);
            let dl = (rng.random_range(0.02f64.ln()..0.3f64.ln())).exp();
            (th, dl)
        })
        .collect();
    let records = par_grid(&draws, |&(th, dl)| {
        let x = depth_point(&body, th, dl)?;
        let meas = measure(&body, &x, None)?;
        let chords = meas.l1.unwrap() * meas.l2.unwrap();
        let lam = lambda(&body, n, &x, ctx)?;
        let nf = n as f64;
        Ok(Record {
            body: format!("lpball:{a}"),
            n,
            x,
            param: chords,
            slice: format!("alpha={a}"),
            lambda: lam,
            reference: Some(chords.sqrt() / (nf * nf)),
            certificate: None,
            ratio: lam * nf * nf / chords.sqrt(),
        })
    })?;
    Ok((records.clone(), plain(records)))
}

#[cfg(test)]
mod tests {
    use super::super::run_experiment;
    use super::*;

    #[test]
    fn interval_oracle_small() {
        let p = Params::parse(&["ns=1,5,20".into()]).unwrap();
        let r = run_experiment("interval-oracle", &p, &RunContext::default()).unwrap();
        assert_eq!(r.records.len(), 33);
        assert!(r.summary.values["max_rel_error"] < 1e-11);
    }

    #[test]
    fn registry_names_are_unique() {
        let mut names: Vec<_> = EXPERIMENTS.iter().map(|e| e.name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), EXPERIMENTS.len());
    }

    #[test]
    fn conjecture_is_seeded() {
        let p = Params::parse(&["n=6".into(), "count=3".into()]).unwrap();
        let ctx = RunContext { seed: 7, ..Default::default() };
        let a = run_experiment("conjecture-lp", &p, &ctx).unwrap();
        let b = run_experiment("conjecture-lp", &p, &ctx).unwrap();
        assert_eq!(a.records, b.records);
    }
}
