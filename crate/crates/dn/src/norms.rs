//! Ordinary and parameter-dependent Sobolev/Bessel-potential norms on grid
//! fields, plus the resolvent norm-ratio functionals.
//!
//! The torus carries unit measure: the discrete `L_p` norm uses quadrature
//! weight `1/M^n`, so the constant function 1 has norm 1 for every `p`.
//! `p = 2` norms are exact Parseval sums; other `p` are grid quadrature
//! approximations.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{self, GridField, GridSpec, ProductRule};
use crate::symbol::{anisotropic_weight, multi_indices, DNOrders, DNSystem};

/// Discrete `L_p` norm of one component (unit-measure quadrature).
pub fn lp_norm(samples: &[Complex64], p: f64) -> f64 {
    let total = samples.len() as f64;
    (samples.iter().map(|v| v.norm().powf(p)).sum::<f64>() / total).powf(1.0 / p)
}

/// Bessel-potential norm: multiply the spectrum by `<xi>^s`, transform
/// back, take `L_p`.
pub fn bessel_norm(samples: &[Complex64], spec: &GridSpec, s: i64, p: f64) -> f64 {
    let mut hat = fourier::forward(samples, spec);
    for (flat, v) in hat.iter_mut().enumerate() {
        let xi = spec.xi_at(flat);
        let w = (1.0 + xi.iter().map(|x| x * x).sum::<f64>()).sqrt();
        *v *= w.powi(s as i32);
    }
    lp_norm(&fourier::inverse(&hat, spec), p)
}

/// Sobolev norm `(sum_{|alpha| <= s} ||D^alpha u||_p^p)^{1/p}`.
pub fn sobolev_norm(samples: &[Complex64], spec: &GridSpec, s: u32, p: f64) -> f64 {
    let hat = fourier::forward(samples, spec);
    let mut acc = 0.0;
    for alpha in multi_indices(spec.dim(), s) {
        let mut dhat = hat.clone();
        for (flat, v) in dhat.iter_mut().enumerate() {
            *v *= alpha.xi_pow(&spec.xi_at(flat));
        }
        acc += lp_norm(&fourier::inverse(&dhat, spec), p).powf(p);
    }
    acc.powf(1.0 / p)
}

/// Parameter-dependent norm of a scalar component with group weight `m_j`:
/// for `s >= 0` the sum `||u||_{s,p} + |lambda|^{s/m_j} ||u||_{0,p}`;
/// for `s < 0` the multiplier norm with weight `<xi, lambda>_j^s`.
pub fn param_norm(
    samples: &[Complex64],
    spec: &GridSpec,
    s: i64,
    p: f64,
    lambda: Complex64,
    m_j: i64,
) -> Result<f64> {
    if lambda == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroLambda);
    }
    if s >= 0 {
        let sob = sobolev_norm(samples, spec, s as u32, p);
        let base = lp_norm(samples, p);
        Ok(sob + lambda.norm().powf(s as f64 / m_j as f64) * base)
    } else {
        let mut hat = fourier::forward(samples, spec);
        for (flat, v) in hat.iter_mut().enumerate() {
            let w = anisotropic_weight(&spec.xi_at(flat), lambda, m_j);
            *v *= w.powi(s as i32);
        }
        Ok(lp_norm(&fourier::inverse(&hat, spec), p))
    }
}

/// The two product norms of a field: `(|||u|||_{(t),p}, |||u|||_{(-s),p})`,
/// each the sum of componentwise parameter-dependent norms with that
/// component's group weight.
pub fn product_norms(
    u: &GridField,
    p: f64,
    lambda: Complex64,
    orders: &DNOrders,
) -> Result<(f64, f64)> {
    let mut t_norm = 0.0;
    let mut neg_s_norm = 0.0;
    for (k, comp) in u.comps.iter().enumerate() {
        t_norm += param_norm(comp, &u.spec, orders.t()[k], p, lambda, orders.m()[k])?;
        neg_s_norm += param_norm(comp, &u.spec, -orders.s()[k], p, lambda, orders.m()[k])?;
    }
    Ok((t_norm, neg_s_norm))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RatioMode {
    /// Per-frequency weighted singular values; exact at `p = 2` for
    /// constant-coefficient systems.
    Exact,
    /// Maximum over random band-limited trial fields; a certified lower
    /// bound on the supremum in the same weighted norm.
    Sampled { trials: usize, seed: u64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct AprioriRatios {
    /// `sup_u |||u|||_(t) / |||(A - lambda) u|||_(-s)` -- the a-priori
    /// estimate constant.
    pub backward: f64,
    /// `sup_u |||(A - lambda) u|||_(-s) / |||u|||_(t)` -- the forward
    /// boundedness constant.
    pub forward: f64,
}

/// Weighted resolvent ratios at `p = 2`. Both modes use the
/// Euclidean-combined multiplier form of the parameter-dependent product
/// norms (`|||u|||^2 = sum_k sum_xi <xi,lambda>_k^{2 tau_k} |u_k^hat|^2`),
/// which is equivalent to the summed form and makes the supremum a
/// per-frequency singular-value computation.
pub fn apriori_ratio(
    sys: &DNSystem,
    lambda: Complex64,
    spec: &GridSpec,
    mode: RatioMode,
) -> Result<AprioriRatios> {
    match mode {
        RatioMode::Exact => {
            if !sys.is_constant_coefficient() {
                return Err(Error::Unsupported(
                    "exact ratio mode requires a constant-coefficient system".into(),
                ));
            }
            exact_ratio(sys, lambda, spec)
        }
        RatioMode::Sampled { trials, seed } => sampled_ratio(sys, lambda, spec, trials, seed),
    }
}

fn weights(
    orders: &DNOrders,
    xi: &[f64],
    lambda: Complex64,
) -> (Vec<f64>, Vec<f64>) {
    let n = orders.size();
    let mut wt = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    for k in 0..n {
        let w = anisotropic_weight(xi, lambda, orders.m()[k]);
        wt.push(w.powi(orders.t()[k] as i32));
        ws.push(w.powi(-(orders.s()[k] as i32)));
    }
    (wt, ws)
}

fn exact_ratio(sys: &DNSystem, lambda: Complex64, spec: &GridSpec) -> Result<AprioriRatios> {
    let n = sys.size();
    let x0 = vec![0.0; sys.dim()];
    let mut backward: f64 = 0.0;
    let mut forward: f64 = 0.0;
    for flat in 0..spec.points() {
        let xi = spec.xi_at(flat);
        let b = sys.eval_symbol(&x0, &xi, lambda);
        let (wt, ws) = weights(sys.orders(), &xi, lambda);
        let inv = b.clone().try_inverse().ok_or(Error::SingularFrequency {
            xi: xi.clone(),
            sigma_min: 0.0,
            eig: lambda,
        })?;
        // backward: sigma_max( W_t B^{-1} W_{-s}^{-1} )
        let mut m1 = inv.clone();
        let mut m2 = b.clone();
        for j in 0..n {
            for k in 0..n {
                m1[(j, k)] *= wt[j] / ws[k];
                m2[(j, k)] *= ws[j] / wt[k];
            }
        }
        backward = backward.max(sigma_max(&m1));
        forward = forward.max(sigma_max(&m2));
    }
    Ok(AprioriRatios { backward, forward })
}

fn sigma_max(m: &DMatrix<Complex64>) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

fn weighted_l2(spectral: &[Vec<Complex64>], spec: &GridSpec, w: impl Fn(&[f64], usize) -> f64) -> f64 {
    let mut acc = 0.0;
    for (k, comp) in spectral.iter().enumerate() {
        for (flat, v) in comp.iter().enumerate() {
            let weight = w(&spec.xi_at(flat), k);
            acc += (weight * v.norm()).powi(2);
        }
    }
    acc.sqrt()
}

fn sampled_ratio(
    sys: &DNSystem,
    lambda: Complex64,
    spec: &GridSpec,
    trials: usize,
    seed: u64,
) -> Result<AprioriRatios> {
    let n = sys.size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let orders = sys.orders().clone();
    let mut backward: f64 = 0.0;
    let mut forward: f64 = 0.0;
    let band = spec.m() / 4;
    for _ in 0..trials.max(1) {
        let mut uhat = vec![vec![Complex64::new(0.0, 0.0); spec.points()]; n];
        for comp in uhat.iter_mut() {
            for flat in 0..spec.points() {
                let idx = spec.unflatten(flat);
                if idx
                    .iter()
                    .all(|&i| spec.axis_freq(i).unsigned_abs() as usize <= band)
                {
                    comp[flat] =
                        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
        }
        let fhat = fourier::apply_operator_spectral(sys, lambda, &uhat, spec, ProductRule::Padded);
        let u_t = weighted_l2(&uhat, spec, |xi, k| {
            anisotropic_weight(xi, lambda, orders.m()[k]).powi(orders.t()[k] as i32)
        });
        let f_s = weighted_l2(&fhat, spec, |xi, k| {
            anisotropic_weight(xi, lambda, orders.m()[k]).powi(-(orders.s()[k] as i32))
        });
        if f_s > 0.0 {
            backward = backward.max(u_t / f_s);
        }
        if u_t > 0.0 {
            forward = forward.max(f_s / u_t);
        }
    }
    Ok(AprioriRatios { backward, forward })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example::{example_system, ExampleParams};
    use crate::symbol::validate_orders;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn spec_1d(m: usize) -> GridSpec {
        GridSpec::new(1, m, 2.0 * std::f64::consts::PI).unwrap()
    }

    #[test]
    fn bessel_norm_of_one() {
        let spec = spec_1d(16);
        let ones = vec![c(1.0, 0.0); spec.points()];
        for &s in &[-2i64, 0, 3] {
            for &p in &[1.5, 2.0, 4.0] {
                assert!((bessel_norm(&ones, &spec, s, p) - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn bessel_norm_single_mode() {
        let spec = spec_1d(16);
        let u = GridField::single_mode(spec, 1, 0, &[1]);
        let v = bessel_norm(&u.comps[0], &spec, 2, 2.0);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bessel_norm_s_zero_is_lp() {
        let spec = spec_1d(16);
        let u = GridField::from_fn(spec, 1, |_, x| c(x[0].sin() + 0.5, 0.1 * x[0].cos()));
        for &p in &[1.5, 2.0, 3.0] {
            let a = bessel_norm(&u.comps[0], &spec, 0, p);
            let b = lp_norm(&u.comps[0], p);
            assert!((a - b).abs() < 1e-13 * b.max(1.0));
        }
    }

    #[test]
    fn param_norm_single_mode_hand_value() {
        // u = e^{ix}, s=2, p=2, |lambda|=16, m=4: sqrt(3) + 4.
        let spec = spec_1d(16);
        let u = GridField::single_mode(spec, 1, 0, &[1]);
        let v = param_norm(&u.comps[0], &spec, 2, 2.0, c(-16.0, 0.0), 4).unwrap();
        assert!((v - (3.0f64.sqrt() + 4.0)).abs() < 1e-12);
    }

    #[test]
    fn param_norm_s_zero_doubles() {
        let spec = spec_1d(16);
        let u = GridField::from_fn(spec, 1, |_, x| c(x[0].cos(), 0.0));
        let v = param_norm(&u.comps[0], &spec, 0, 2.0, c(-3.0, 0.0), 2).unwrap();
        let base = lp_norm(&u.comps[0], 2.0);
        assert!((v - 2.0 * base).abs() < 1e-13);
    }

    #[test]
    fn param_norm_rejects_zero_lambda() {
        let spec = spec_1d(8);
        let u = GridField::zeros(spec, 1);
        assert!(matches!(
            param_norm(&u.comps[0], &spec, 1, 2.0, c(0.0, 0.0), 2),
            Err(Error::ZeroLambda)
        ));
    }

    #[test]
    fn negative_order_decay_rate() {
        // s = -2: param norm of a fixed field decays like |lambda|^{-2/m_j}.
        let spec = spec_1d(16);
        let u = GridField::single_mode(spec, 1, 0, &[1]);
        let m_j = 4;
        let mut values = Vec::new();
        for &r in &[1e3, 1e4, 1e5] {
            values.push(
                param_norm(&u.comps[0], &spec, -2, 2.0, c(-r, 0.0), m_j).unwrap(),
            );
        }
        let slope1 = (values[1] / values[0]).log10();
        let slope2 = (values[2] / values[1]).log10();
        let expect = -2.0 / m_j as f64;
        assert!((slope1 - expect).abs() < 0.05 * expect.abs());
        assert!((slope2 - expect).abs() < 0.05 * expect.abs());
    }

    #[test]
    fn product_norm_reductions() {
        let spec = spec_1d(16);
        let orders = validate_orders(&[0, 0], &[4, 2]).unwrap();
        let lambda = c(-5.0, 0.0);

        // One nonzero component: the product norm equals that component's norm.
        let mut u = GridField::zeros(spec, 2);
        for (flat, v) in u.comps[1].iter_mut().enumerate() {
            *v = c((spec.x_at(flat)[0]).sin(), 0.0);
        }
        let (t_norm, s_norm) = product_norms(&u, 2.0, lambda, &orders).unwrap();
        let single_t = param_norm(&u.comps[1], &spec, 2, 2.0, lambda, 2).unwrap();
        assert!((t_norm - single_t).abs() < 1e-13);
        // s = 0 everywhere: (-s)-norm is the sum of doubled L2 norms.
        let expect_s = 2.0 * lp_norm(&u.comps[1], 2.0);
        assert!((s_norm - expect_s).abs() < 1e-13);

        // Scaling doubles both norms.
        let mut u2 = u.clone();
        for comp in &mut u2.comps {
            for v in comp.iter_mut() {
                *v *= 2.0;
            }
        }
        let (t2, s2) = product_norms(&u2, 2.0, lambda, &orders).unwrap();
        assert!((t2 - 2.0 * t_norm).abs() < 1e-12 * t_norm.max(1.0));
        assert!((s2 - 2.0 * s_norm).abs() < 1e-12 * s_norm.max(1.0));
    }

    #[test]
    fn parseval_two_paths() {
        // Physical quadrature and frequency sum agree at p = 2.
        let spec = spec_1d(32);
        let u = GridField::from_fn(spec, 1, |_, x| {
            c(x[0].sin() + 0.3 * (4.0 * x[0]).cos(), (2.0 * x[0]).sin())
        });
        let phys = lp_norm(&u.comps[0], 2.0);
        let hat = fourier::forward(&u.comps[0], &spec);
        let freq: f64 = hat.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        assert!((phys - freq).abs() < 1e-13 * phys.max(1.0));
    }

    #[test]
    fn triangle_and_homogeneity() {
        let spec = spec_1d(16);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let orders = validate_orders(&[1, 0], &[3, 2]).unwrap();
        let lambda = c(-2.0, 1.0);
        for _ in 0..10 {
            let mk = |rng: &mut ChaCha8Rng| {
                let mut f = GridField::zeros(spec, 2);
                for comp in &mut f.comps {
                    for v in comp.iter_mut() {
                        *v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    }
                }
                f
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            let mut sum = a.clone();
            for (ca, cb) in sum.comps.iter_mut().zip(&b.comps) {
                for (va, vb) in ca.iter_mut().zip(cb) {
                    *va += vb;
                }
            }
            let (ta, _) = product_norms(&a, 2.0, lambda, &orders).unwrap();
            let (tb, _) = product_norms(&b, 2.0, lambda, &orders).unwrap();
            let (tsum, _) = product_norms(&sum, 2.0, lambda, &orders).unwrap();
            assert!(tsum <= ta + tb + 1e-12 * (ta + tb));
        }
    }

    #[test]
    fn norm_equivalence_across_lambda() {
        // W-form and multiplier-form parameter norms stay within a
        // lambda-independent factor over a two-decade sweep.
        let spec = spec_1d(32);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut u = GridField::zeros(spec, 1);
        for v in u.comps[0].iter_mut() {
            *v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let s = 2i64;
        let m_j = 4i64;
        let mut factors = Vec::new();
        for &r in &[1.0, 10.0, 100.0] {
            let lambda = c(-r, 0.0);
            let w_form = param_norm(&u.comps[0], &spec, s, 2.0, lambda, m_j).unwrap();
            // multiplier form: || <xi,lambda>_j^s u^hat ||
            let hat = fourier::forward(&u.comps[0], &spec);
            let mult: f64 = hat
                .iter()
                .enumerate()
                .map(|(flat, v)| {
                    let w = anisotropic_weight(&spec.xi_at(flat), lambda, m_j);
                    (w.powi(s as i32) * v.norm()).powi(2)
                })
                .sum::<f64>()
                .sqrt();
            factors.push(w_form / mult);
        }
        let fmax = factors.iter().cloned().fold(f64::MIN, f64::max);
        let fmin = factors.iter().cloned().fold(f64::MAX, f64::min);
        assert!(fmax / fmin < 4.0, "equivalence factor drifted: {factors:?}");
    }

    #[test]
    fn sampled_ratio_below_exact() {
        let sys = example_system(&ExampleParams {
            dim: 1,
            c: 1.0,
            bump_amplitude: 0.0,
            ..Default::default()
        })
        .unwrap();
        let spec = spec_1d(16);
        let lambda = c(-10.0, 0.0);
        let exact = apriori_ratio(&sys, lambda, &spec, RatioMode::Exact).unwrap();
        for seed in 0..20 {
            let sampled = apriori_ratio(
                &sys,
                lambda,
                &spec,
                RatioMode::Sampled { trials: 8, seed },
            )
            .unwrap();
            assert!(sampled.backward <= exact.backward * (1.0 + 1e-10));
            assert!(sampled.forward <= exact.forward * (1.0 + 1e-10));
        }
    }

    #[test]
    fn exact_ratio_rejects_variable_coefficients() {
        let sys = example_system(&ExampleParams {
            dim: 1,
            c: 1.0,
            bump_amplitude: 0.5,
            ..Default::default()
        })
        .unwrap();
        let spec = spec_1d(8);
        assert!(apriori_ratio(&sys, c(-10.0, 0.0), &spec, RatioMode::Exact).is_err());
    }
}
