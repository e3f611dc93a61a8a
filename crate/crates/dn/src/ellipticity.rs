//! Numerical verification of uniform parameter-ellipticity in a sector.
//!
//! For each order group `r` the determinant of the nested principal minor,
//! with `lambda` subtracted on the current group's diagonal block, must stay
//! bounded away from zero on the compact constraint set
//! `{ <xi, lambda>_{k_r} = 1, lambda in sector }` after dividing by
//! `|xi|^{N_{r-1}}`. The estimates here are sampled minima plus local
//! refinement, i.e. certified upper bounds on the true infimum.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::symbol::{
    anisotropic_weight, lambda_mask, parity_check, DNSystem, ParityVerdict, Sector,
};

/// Grid resolution over the constraint set.
#[derive(Clone, Debug, Serialize, serde::Deserialize)]
pub struct Resolution {
    /// Points per angular axis of the xi-sphere (dimension 1 always uses
    /// the two signs).
    pub directions: usize,
    /// Points along the radial parameter `u = |lambda|^{1/m} in [0, 1]`.
    pub radial: usize,
    /// Points along the `arg lambda` sweep.
    pub args: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Resolution {
            directions: 16,
            radial: 65,
            args: 65,
        }
    }
}

/// One point of the constraint set `<xi, lambda>_{k_r} = 1`.
#[derive(Clone, Debug, Serialize)]
pub struct ConstraintSample {
    pub xi: Vec<f64>,
    pub lambda: Complex64,
    pub r: usize,
}

/// Unit directions on the sphere `S^{n-1}` (supported for n <= 3).
pub fn sphere_directions(n: usize, count: usize) -> Result<Vec<Vec<f64>>> {
    match n {
        1 => Ok(vec![vec![1.0], vec![-1.0]]),
        2 => {
            let count = count.max(2);
            Ok((0..count)
                .map(|i| {
                    let phi = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
                    vec![phi.cos(), phi.sin()]
                })
                .collect())
        }
        3 => {
            let count = count.max(2);
            let mut out = Vec::new();
            for ip in 0..count {
                let theta = std::f64::consts::PI * ip as f64 / (count - 1) as f64;
                if theta == 0.0 || (theta - std::f64::consts::PI).abs() < 1e-15 {
                    out.push(vec![0.0, 0.0, theta.cos()]);
                    continue;
                }
                for ia in 0..count {
                    let phi = 2.0 * std::f64::consts::PI * ia as f64 / count as f64;
                    out.push(vec![
                        theta.sin() * phi.cos(),
                        theta.sin() * phi.sin(),
                        theta.cos(),
                    ]);
                }
            }
            Ok(out)
        }
        _ => Err(Error::Unsupported(format!(
            "sphere sampling not implemented for dimension {n}"
        ))),
    }
}

/// Default exclusion radius near `xi = 0` for groups `r > 1`, where the
/// ellipticity inequality is vacuous.
pub const DEFAULT_XI_FLOOR: f64 = 1e-3;

/// Sample the constraint set for group `r`. Degenerate duplicates are
/// collapsed: at `u = 0` (`lambda = 0`) only one `arg` is kept, and at
/// `u = 1` (`xi = 0`) only one direction is kept. For `r > 1` samples with
/// `|xi| < xi_floor` are dropped.
pub fn constraint_samples(
    sys_dim: usize,
    orders: &crate::symbol::DNOrders,
    r: usize,
    sector: &Sector,
    resolution: &Resolution,
    xi_floor: f64,
) -> Result<Vec<ConstraintSample>> {
    if resolution.directions < 2 || resolution.radial < 2 || resolution.args < 2 {
        return Err(Error::DegenerateResolution(format!(
            "need at least 2 points per axis, got {resolution:?}"
        )));
    }
    let m = orders.group_order(r);
    let dirs = sphere_directions(sys_dim, resolution.directions)?;
    let mut out = Vec::new();
    for iu in 0..resolution.radial {
        let u = iu as f64 / (resolution.radial - 1) as f64;
        let xi_len = (1.0 - u * u).max(0.0).sqrt();
        let lam_mod = u.powi(m as i32);
        if r > 1 && xi_len < xi_floor {
            continue;
        }
        let dir_slice: &[Vec<f64>] = if xi_len == 0.0 { &dirs[..1] } else { &dirs };
        for dir in dir_slice {
            let xi: Vec<f64> = dir.iter().map(|d| d * xi_len).collect();
            if lam_mod == 0.0 {
                out.push(ConstraintSample {
                    xi,
                    lambda: Complex64::new(0.0, 0.0),
                    r,
                });
                continue;
            }
            for ia in 0..resolution.args {
                let theta = sector.theta_min
                    + (sector.theta_max - sector.theta_min) * ia as f64
                        / (resolution.args - 1) as f64;
                out.push(ConstraintSample {
                    xi: xi.clone(),
                    lambda: Complex64::from_polar(lam_mod, theta),
                    r,
                });
            }
        }
    }
    Ok(out)
}

/// Minimizer location and value for one group level.
#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub x: Vec<f64>,
    pub sample: ConstraintSample,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelReport {
    pub r: usize,
    pub kappa: f64,
    pub witness: Witness,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EllipticityReport {
    pub parity: ParityVerdict,
    pub levels: Vec<LevelReport>,
    pub pass: bool,
    pub c0_estimate: Option<f64>,
    pub lambda_dagger_estimate: Option<f64>,
    pub resolution: Resolution,
    pub kappa_floor: f64,
}

#[derive(Clone, Debug)]
pub struct EllipticityConfig {
    pub resolution: Resolution,
    /// Pass/fail floor for the kappa estimates.
    pub kappa_floor: f64,
    pub xi_floor: f64,
    /// Whether to also estimate `C_0` and the perturbation threshold.
    pub estimate_constants: bool,
    pub lambda_floor: f64,
    pub threshold_cap: f64,
}

impl Default for EllipticityConfig {
    fn default() -> Self {
        EllipticityConfig {
            resolution: Resolution::default(),
            kappa_floor: 1e-6,
            xi_floor: DEFAULT_XI_FLOOR,
            estimate_constants: false,
            lambda_floor: 1.0,
            threshold_cap: 1e8,
        }
    }
}

/// Determinant ratio of the nested minor at one constraint sample.
fn level_ratio(sys: &DNSystem, x: &[f64], xi: &[f64], lambda: Complex64, r: usize) -> f64 {
    let orders = sys.orders();
    let block = sys.nested_principal(x, xi, r).expect("validated r");
    let mask = lambda_mask(orders, r);
    let det = (block - mask * lambda).determinant().norm();
    let n_prev = orders.partial_sum(r - 1);
    if n_prev == 0 {
        det
    } else {
        let xi_len = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        det / xi_len.powi(n_prev as i32)
    }
}

/// Representative x-lattice: points covering each bump's effective support
/// plus one far-field point where the coefficients are ~constant.
pub fn default_x_samples(sys: &DNSystem) -> Vec<Vec<f64>> {
    let dim = sys.dim();
    let mut out = vec![vec![0.0; dim]];
    let mut far = 0.0f64;
    for j in 0..sys.size() {
        for k in 0..sys.size() {
            for term in sys.entry(j, k) {
                for bump in &term.coeff.bumps {
                    far = far.max(
                        bump.center.iter().cloned().fold(0.0f64, f64::max)
                            + 100.0 * bump.width,
                    );
                    // 5-point lattice per axis over the 4-width ball
                    let steps = [-1.0, -0.5, 0.0, 0.5, 1.0];
                    let mut pts: Vec<Vec<f64>> = vec![Vec::new()];
                    for ax in 0..dim {
                        let mut next = Vec::new();
                        for p in &pts {
                            for st in steps {
                                let mut q = p.clone();
                                q.push(bump.center[ax] + 4.0 * bump.width * st);
                                next.push(q);
                            }
                        }
                        pts = next;
                    }
                    out.extend(pts);
                }
            }
        }
    }
    if far > 0.0 {
        out.push(vec![far; dim]);
    }
    out.dedup();
    out
}

/// Continuous parametrization of the constraint set used for local
/// refinement: angles of the xi-direction, the radial parameter `u`, and
/// `arg lambda`.
struct LevelObjective<'a> {
    sys: &'a DNSystem,
    x: Vec<f64>,
    r: usize,
    m: i64,
    sector: Sector,
    u_max: f64,
    /// Direction sign in dimension 1 (the sign is discrete; refinement
    /// keeps the best grid direction fixed).
    dir_sign: f64,
}

impl LevelObjective<'_> {
    fn dim(&self) -> usize {
        self.sys.dim()
    }

    fn n_params(&self) -> usize {
        // (dim - 1) direction angles + u + arg
        self.dim() + 1
    }

    fn decode(&self, p: &[f64]) -> (Vec<f64>, Complex64) {
        let dim = self.dim();
        let u = p[dim - 1].clamp(0.0, self.u_max);
        let theta = p[dim].clamp(self.sector.theta_min, self.sector.theta_max);
        let xi_len = (1.0 - u * u).max(0.0).sqrt();
        let dir = match dim {
            1 => vec![self.dir_sign],
            2 => vec![p[0].cos(), p[0].sin()],
            3 => vec![
                p[1].sin() * p[0].cos(),
                p[1].sin() * p[0].sin(),
                p[1].cos(),
            ],
            _ => unreachable!("dimension checked earlier"),
        };
        let xi: Vec<f64> = dir.iter().map(|d| d * xi_len).collect();
        let lambda = Complex64::from_polar(u.powi(self.m as i32), theta);
        (xi, lambda)
    }

    fn eval(&self, p: &[f64]) -> f64 {
        let (xi, lambda) = self.decode(p);
        level_ratio(self.sys, &self.x, &xi, lambda, self.r)
    }

    fn encode(&self, sample: &ConstraintSample) -> Vec<f64> {
        let dim = self.dim();
        let mut p = vec![0.0; self.n_params()];
        let xi_len = sample.xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        match dim {
            1 => {}
            2 => p[0] = sample.xi[1].atan2(sample.xi[0]),
            3 => {
                p[0] = sample.xi[1].atan2(sample.xi[0]);
                p[1] = if xi_len > 0.0 {
                    (sample.xi[2] / xi_len).clamp(-1.0, 1.0).acos()
                } else {
                    0.0
                };
            }
            _ => unreachable!(),
        }
        let lam_mod = sample.lambda.norm();
        p[dim - 1] = lam_mod.powf(1.0 / self.m as f64).clamp(0.0, self.u_max);
        let mut arg = sample.lambda.arg();
        if arg < 0.0 {
            arg += 2.0 * std::f64::consts::PI;
        }
        p[dim] = if lam_mod == 0.0 {
            self.sector.theta_min
        } else {
            arg.clamp(self.sector.theta_min, self.sector.theta_max)
        };
        p
    }
}

/// Coordinate-descent shrink refinement: per round, a ternary search along
/// each parameter within the current step, then the step shrinks.
fn refine(obj: &LevelObjective, start: &[f64], initial_steps: &[f64], rounds: usize) -> (Vec<f64>, f64) {
    let mut p = start.to_vec();
    let mut best = obj.eval(&p);
    let mut steps = initial_steps.to_vec();
    for _ in 0..rounds {
        for _sweep in 0..3 {
            for i in 0..p.len() {
                let (lo, hi) = (p[i] - steps[i], p[i] + steps[i]);
                let (q, v) = ternary_min(
                    |val| {
                        let mut pp = p.clone();
                        pp[i] = val;
                        obj.eval(&pp)
                    },
                    lo,
                    hi,
                    80,
                );
                if v < best {
                    best = v;
                    p[i] = q;
                }
            }
        }
        for s in &mut steps {
            *s *= 0.25;
        }
    }
    (p, best)
}

fn ternary_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    for _ in 0..iters {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let mid = 0.5 * (lo + hi);
    (mid, f(mid))
}

/// Estimate `kappa_r`: minimum of the determinant ratio over the sampled
/// constraint set and x-lattice, then local refinement around the best
/// grid point.
pub fn kappa_estimate(
    sys: &DNSystem,
    r: usize,
    sector: &Sector,
    x_samples: &[Vec<f64>],
    resolution: &Resolution,
    xi_floor: f64,
) -> Result<(f64, Witness)> {
    let samples = constraint_samples(sys.dim(), sys.orders(), r, sector, resolution, xi_floor)?;
    // Deterministic parallel min with lexicographic tie-break on
    // (|xi|, arg lambda, sample index).
    let best = x_samples
        .par_iter()
        .flat_map(|x| {
            samples
                .par_iter()
                .enumerate()
                .map(move |(idx, s)| (x, idx, s))
        })
        .map(|(x, idx, s)| {
            let v = level_ratio(sys, x, &s.xi, s.lambda, r);
            (v, x.clone(), idx)
        })
        .reduce(
            || (f64::INFINITY, Vec::new(), usize::MAX),
            |a, b| {
                let key = |t: &(f64, Vec<f64>, usize)| {
                    let s = samples.get(t.2.min(samples.len().saturating_sub(1)));
                    let xi_len = s
                        .map(|s| s.xi.iter().map(|v| v * v).sum::<f64>().sqrt())
                        .unwrap_or(f64::INFINITY);
                    let arg = s.map(|s| s.lambda.arg()).unwrap_or(f64::INFINITY);
                    (t.0, xi_len, arg, t.2)
                };
                if key(&a) <= key(&b) {
                    a
                } else {
                    b
                }
            },
        );
    let (_, x_best, idx_best) = best;
    let sample_best = samples[idx_best].clone();

    let m = sys.orders().group_order(r);
    let u_max = if r > 1 {
        (1.0 - xi_floor * xi_floor).sqrt()
    } else {
        1.0
    };
    let dir_sign = if sys.dim() == 1 && sample_best.xi.first().copied().unwrap_or(1.0) < 0.0 {
        -1.0
    } else {
        1.0
    };
    let obj = LevelObjective {
        sys,
        x: x_best.clone(),
        r,
        m,
        sector: *sector,
        u_max,
        dir_sign,
    };
    let start = obj.encode(&sample_best);
    let mut steps = vec![0.0; obj.n_params()];
    let dim = sys.dim();
    for ang in steps.iter_mut().take(dim.saturating_sub(1)) {
        *ang = 2.0 * std::f64::consts::PI / resolution.directions as f64;
    }
    steps[dim - 1] = 1.0 / (resolution.radial - 1) as f64;
    steps[dim] = (sector.theta_max - sector.theta_min) / (resolution.args - 1) as f64;
    let (p, kappa) = refine(&obj, &start, &steps, 3);
    let (xi, lambda) = obj.decode(&p);
    Ok((
        kappa,
        Witness {
            x: x_best,
            sample: ConstraintSample { xi, lambda, r },
        },
    ))
}

/// Full parameter-ellipticity check: evenness prefilter, then a kappa
/// estimate for every order group; optionally the global constants.
pub fn check_parameter_ellipticity(
    sys: &DNSystem,
    sector: &Sector,
    config: &EllipticityConfig,
) -> Result<EllipticityReport> {
    let parity = parity_check(sys.orders(), sys.dim());
    let x_samples = default_x_samples(sys);
    let mut levels = Vec::new();
    let mut pass = parity.pass;
    if parity.pass {
        for r in 1..=sys.orders().num_groups() {
            let (kappa, witness) = kappa_estimate(
                sys,
                r,
                sector,
                &x_samples,
                &config.resolution,
                config.xi_floor,
            )?;
            let level_pass = kappa >= config.kappa_floor;
            pass &= level_pass;
            levels.push(LevelReport {
                r,
                kappa,
                witness,
                pass: level_pass,
            });
        }
    }
    let (mut c0_estimate, mut lambda_dagger_estimate) = (None, None);
    if pass && config.estimate_constants {
        let c0 = full_determinant_bound(
            sys,
            sector,
            config.lambda_floor,
            &config.resolution,
            &x_samples,
        );
        if c0 > 0.0 {
            lambda_dagger_estimate = perturbation_threshold(
                sys,
                sector,
                c0,
                &config.resolution,
                &x_samples,
                config.threshold_cap,
            )
            .ok();
        }
        c0_estimate = Some(c0);
    }
    Ok(EllipticityReport {
        parity,
        levels,
        pass,
        c0_estimate,
        lambda_dagger_estimate,
        resolution: config.resolution.clone(),
        kappa_floor: config.kappa_floor,
    })
}

fn full_ratio(sys: &DNSystem, x: &[f64], xi: &[f64], lambda: Complex64) -> f64 {
    let n = sys.size();
    let principal = sys.principal_symbol(x, xi);
    let det = (principal - nalgebra::DMatrix::from_diagonal_element(n, n, lambda))
        .determinant()
        .norm();
    let mut weight = 1.0;
    for j in 0..n {
        weight *= anisotropic_weight(xi, lambda, sys.orders().m()[j])
            .powi(sys.orders().m()[j] as i32);
    }
    det / weight
}

/// Sampled estimate of `C_0 = inf |det(A0 - lambda I)| / prod <xi,lambda>_j^{m_j}`
/// over the sector, swept one decade up from `lambda_floor` with
/// `<xi,lambda>`-scaled xi shells. Within each order group the ratio is
/// quasi-homogeneous of degree 0; the cross-group coupling decays like a
/// fractional power of `|lambda|`, so the estimate stabilizes as the floor
/// grows and the decade sweep captures the near-floor regime exactly.
pub fn full_determinant_bound(
    sys: &DNSystem,
    sector: &Sector,
    lambda_floor: f64,
    resolution: &Resolution,
    x_samples: &[Vec<f64>],
) -> f64 {
    let dirs = sphere_directions(sys.dim(), resolution.directions)
        .unwrap_or_else(|_| vec![vec![1.0; sys.dim()]]);
    let m_min = *sys.orders().m().iter().min().unwrap();
    let m_max = *sys.orders().m().iter().max().unwrap();
    let nr = resolution.radial.max(2);
    let na = resolution.args.max(2);
    let mut min_ratio = f64::INFINITY;
    for il in 0..nr {
        let lam_mod = lambda_floor * 10f64.powf(il as f64 / (nr - 1) as f64);
        for ia in 0..na {
            let theta = sector.theta_min
                + (sector.theta_max - sector.theta_min) * ia as f64 / (na - 1) as f64;
            let lambda = Complex64::from_polar(lam_mod, theta);
            let scale_lo = 1e-2 * lam_mod.powf(1.0 / m_max as f64);
            let scale_hi = 1e2 * lam_mod.powf(1.0 / m_min as f64);
            let mut radii = vec![0.0];
            for is in 0..nr {
                radii.push(
                    scale_lo * (scale_hi / scale_lo).powf(is as f64 / (nr - 1) as f64),
                );
            }
            for x in x_samples {
                for dir in &dirs {
                    for &rad in &radii {
                        let xi: Vec<f64> = dir.iter().map(|d| d * rad).collect();
                        min_ratio = min_ratio.min(full_ratio(sys, x, &xi, lambda));
                    }
                }
            }
        }
    }
    min_ratio
}

/// Smallest sampled radius `R` past which the lower-order perturbation of
/// the determinant stays below `C_0/2` times the weight product. Doubling
/// sweep with an explicit cap.
pub fn perturbation_threshold(
    sys: &DNSystem,
    sector: &Sector,
    c0: f64,
    resolution: &Resolution,
    x_samples: &[Vec<f64>],
    cap: f64,
) -> Result<f64> {
    let dirs = sphere_directions(sys.dim(), resolution.directions)?;
    let m_min = *sys.orders().m().iter().min().unwrap();
    let m_max = *sys.orders().m().iter().max().unwrap();
    let n = sys.size();
    let nr = resolution.radial.max(2).min(17);
    let na = resolution.args.max(2).min(17);
    let mut radius = 1.0;
    'outer: while radius <= cap {
        // Check three decades above the candidate radius.
        for il in 0..(3 * nr) {
            let lam_mod = radius * 10f64.powf(3.0 * il as f64 / (3 * nr - 1) as f64);
            for ia in 0..na {
                let theta = sector.theta_min
                    + (sector.theta_max - sector.theta_min) * ia as f64 / (na - 1) as f64;
                let lambda = Complex64::from_polar(lam_mod, theta);
                let scale_lo = 1e-2 * lam_mod.powf(1.0 / m_max as f64);
                let scale_hi = 1e2 * lam_mod.powf(1.0 / m_min as f64);
                let mut radii = vec![0.0];
                for is in 0..nr {
                    radii.push(
                        scale_lo * (scale_hi / scale_lo).powf(is as f64 / (nr - 1) as f64),
                    );
                }
                for x in x_samples {
                    for dir in &dirs {
                        for &rad in &radii {
                            let xi: Vec<f64> = dir.iter().map(|d| d * rad).collect();
                            let full = sys
                                .eval_symbol(x, &xi, lambda)
                                .determinant()
                                .norm();
                            let principal = (sys.principal_symbol(x, &xi)
                                - nalgebra::DMatrix::from_diagonal_element(n, n, lambda))
                            .determinant()
                            .norm();
                            let mut weight = 1.0;
                            for j in 0..n {
                                weight *= anisotropic_weight(
                                    &xi,
                                    lambda,
                                    sys.orders().m()[j],
                                )
                                .powi(sys.orders().m()[j] as i32);
                            }
                            if (full - principal).abs() > 0.5 * c0 * weight {
                                radius *= 2.0;
                                continue 'outer;
                            }
                        }
                    }
                }
            }
        }
        return Ok(radius);
    }
    Err(Error::ThresholdCap { cap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example::{example_system, ExampleParams};
    use rand::{Rng, SeedableRng};

    fn unperturbed_1d() -> DNSystem {
        example_system(&ExampleParams {
            dim: 1,
            c: 1.0,
            bump_amplitude: 0.0,
            ..Default::default()
        })
        .unwrap()
    }

    fn standard_sector() -> Sector {
        let eps = std::f64::consts::PI / 6.0;
        Sector::new(eps, 2.0 * std::f64::consts::PI - eps).unwrap()
    }

    #[test]
    fn constraint_samples_satisfy_the_weight_identity() {
        let sys = unperturbed_1d();
        let sector = standard_sector();
        for r in 1..=2 {
            let m = sys.orders().group_order(r);
            let samples = constraint_samples(
                1,
                sys.orders(),
                r,
                &sector,
                &Resolution::default(),
                DEFAULT_XI_FLOOR,
            )
            .unwrap();
            assert!(!samples.is_empty());
            for s in &samples {
                let w = anisotropic_weight(&s.xi, s.lambda, m);
                assert!((w - 1.0).abs() < 1e-12, "weight {w} at {s:?}");
            }
        }
    }

    #[test]
    fn constraint_sample_count_with_duplicates_collapsed() {
        let sys = unperturbed_1d();
        let sector = standard_sector();
        let res = Resolution {
            directions: 3,
            radial: 3,
            args: 3,
        };
        // u = 0: one lambda per direction (2); u = 1/2: 2 dirs x 3 args;
        // u = 1: xi = 0 collapses to one direction x 3 args.
        let samples =
            constraint_samples(1, sys.orders(), 1, &sector, &res, DEFAULT_XI_FLOOR).unwrap();
        assert_eq!(samples.len(), 2 + 6 + 3);
        // For r > 1 the xi = 0 row is excluded.
        let samples =
            constraint_samples(1, sys.orders(), 2, &sector, &res, DEFAULT_XI_FLOOR).unwrap();
        assert_eq!(samples.len(), 2 + 6);
    }

    #[test]
    fn degenerate_resolution_is_rejected() {
        let sys = unperturbed_1d();
        let res = Resolution {
            directions: 1,
            radial: 1,
            args: 1,
        };
        assert!(matches!(
            constraint_samples(1, sys.orders(), 1, &standard_sector(), &res, DEFAULT_XI_FLOOR),
            Err(Error::DegenerateResolution(_))
        ));
    }

    #[test]
    fn lambda_zero_slice_is_sampled() {
        let sys = unperturbed_1d();
        let samples = constraint_samples(
            1,
            sys.orders(),
            1,
            &standard_sector(),
            &Resolution::default(),
            DEFAULT_XI_FLOOR,
        )
        .unwrap();
        assert!(samples
            .iter()
            .any(|s| s.lambda.norm() == 0.0 && (s.xi[0].abs() - 1.0).abs() < 1e-15));
    }

    /// Brute-force oracle for the unperturbed benchmark in 1d, where the
    /// level ratios reduce to scalar expressions of `u` and `theta`:
    /// r = 1 gives `|(1-u^2)^2 - u^4 e^{i theta}|`, r = 2 gives
    /// `|(1-u^2) - u^2 e^{i theta}|`.
    fn brute_force_kappa(r: usize, sector: &Sector, steps: usize) -> f64 {
        let mut min = f64::INFINITY;
        for iu in 0..=steps {
            let u = iu as f64 / steps as f64;
            let s = u * u;
            for ia in 0..=steps {
                let theta = sector.theta_min
                    + (sector.theta_max - sector.theta_min) * ia as f64 / steps as f64;
                let lam = Complex64::from_polar(1.0, theta);
                let v = match r {
                    1 => (Complex64::new((1.0 - s) * (1.0 - s), 0.0) - lam * s * s).norm(),
                    _ => (Complex64::new(1.0 - s, 0.0) - lam * s).norm(),
                };
                min = min.min(v);
            }
        }
        min
    }

    #[test]
    fn kappa_matches_brute_force_oracle() {
        let sys = unperturbed_1d();
        let sector = standard_sector();
        let x = default_x_samples(&sys);
        for r in 1..=2 {
            let (kappa, witness) = kappa_estimate(
                &sys,
                r,
                &sector,
                &x,
                &Resolution::default(),
                DEFAULT_XI_FLOOR,
            )
            .unwrap();
            let oracle = brute_force_kappa(r, &sector, 4000);
            assert!(
                (kappa - oracle).abs() <= 0.05 * oracle,
                "r = {r}: kappa {kappa} vs oracle {oracle}"
            );
            // The witness reproduces its own ratio.
            let v = level_ratio(&sys, &witness.x, &witness.sample.xi, witness.sample.lambda, r);
            assert!((v - kappa).abs() <= 1e-12 * kappa.max(1.0));
        }
    }

    #[test]
    fn refinement_never_exceeds_the_grid_minimum() {
        let sys = unperturbed_1d();
        let sector = standard_sector();
        let res = Resolution::default();
        let x = default_x_samples(&sys);
        for r in 1..=2 {
            let samples =
                constraint_samples(1, sys.orders(), r, &sector, &res, DEFAULT_XI_FLOOR).unwrap();
            let grid_min = samples
                .iter()
                .map(|s| level_ratio(&sys, &x[0], &s.xi, s.lambda, r))
                .fold(f64::INFINITY, f64::min);
            let (kappa, _) =
                kappa_estimate(&sys, r, &sector, &x, &res, DEFAULT_XI_FLOOR).unwrap();
            assert!(kappa <= grid_min + 1e-12);
        }
    }

    #[test]
    fn full_plane_sector_fails_with_a_tight_witness() {
        let sys = unperturbed_1d();
        let sector = Sector::new(0.0, 2.0 * std::f64::consts::PI).unwrap();
        let config = EllipticityConfig::default();
        let report = check_parameter_ellipticity(&sys, &sector, &config).unwrap();
        assert!(!report.pass);
        let worst = report
            .levels
            .iter()
            .min_by(|a, b| a.kappa.partial_cmp(&b.kappa).unwrap())
            .unwrap();
        // The positive real axis meets the symbol range; refinement must
        // drive the witness ratio to numerical zero.
        assert!(worst.kappa <= 1e-10, "kappa = {:e}", worst.kappa);
        let w = &worst.witness;
        let v = level_ratio(&sys, &w.x, &w.sample.xi, w.sample.lambda, worst.r);
        assert!(v <= 1e-10);
    }

    #[test]
    fn standard_sector_passes_with_constants() {
        let sys = unperturbed_1d();
        let config = EllipticityConfig {
            estimate_constants: true,
            ..Default::default()
        };
        let report = check_parameter_ellipticity(&sys, &standard_sector(), &config).unwrap();
        assert!(report.pass);
        assert_eq!(report.levels.len(), 2);
        let c0 = report.c0_estimate.unwrap();
        // xi = 0 gives ratio exactly 1, so the infimum cannot exceed it.
        assert!(c0 > 0.0 && c0 <= 1.0 + 1e-12);
        let dagger = report.lambda_dagger_estimate.unwrap();
        assert!(dagger >= 1.0);
    }

    #[test]
    fn determinant_bound_stabilizes_for_large_floors() {
        // Each order group's ratio is scale-invariant on its own; the
        // cross-group coupling decays like |lambda|^{-1/2} here, so the
        // estimate converges as the floor grows.
        let sys = unperturbed_1d();
        let sector = standard_sector();
        let res = Resolution {
            directions: 2,
            radial: 257,
            args: 33,
        };
        let x = default_x_samples(&sys);
        let a = full_determinant_bound(&sys, &sector, 1e4, &res, &x);
        let b = full_determinant_bound(&sys, &sector, 4e4, &res, &x);
        assert!(a > 0.0);
        assert!((a - b).abs() <= 0.05 * a.max(b), "{a} vs {b}");

        // Large-floor limit: one factor sits at its own scale-invariant
        // minimum while the other tends to 1.
        let mut oracle = f64::INFINITY;
        for &m in &[2i32, 4] {
            for ir in 0..4000 {
                let rho = 1e-2 * (1e4f64 / 1e-2).powf(ir as f64 / 3999.0);
                for ia in 0..200 {
                    let theta = sector.theta_min
                        + (sector.theta_max - sector.theta_min) * ia as f64 / 199.0;
                    let v = (Complex64::new(rho.powi(m), 0.0) - Complex64::from_polar(1.0, theta))
                        .norm()
                        / (rho * rho + 1.0).powi(m / 2);
                    oracle = oracle.min(v);
                }
            }
        }
        assert!((b - oracle).abs() <= 0.1 * oracle, "{b} vs limit {oracle}");
    }

    #[test]
    fn perturbation_threshold_caps_out() {
        let sys = unperturbed_1d();
        // c0 = 0 forces every radius to fail the margin test.
        assert!(matches!(
            perturbation_threshold(
                &sys,
                &standard_sector(),
                0.0,
                &Resolution {
                    directions: 2,
                    radial: 5,
                    args: 5
                },
                &default_x_samples(&sys),
                4.0,
            ),
            Err(Error::ThresholdCap { .. })
        ));
    }

    #[test]
    fn nested_determinant_scaling_identity() {
        // det of the nested minor at (tau xi, tau^m lambda) equals
        // tau^{N_r} times the value at (xi, lambda).
        let sys = example_system(&ExampleParams {
            dim: 2,
            c: 1.0,
            bump_amplitude: 0.9,
            ..Default::default()
        })
        .unwrap();
        let orders = sys.orders();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let xi: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let lambda = Complex64::from_polar(
                rng.gen_range(0.1..5.0),
                rng.gen_range(0.0..2.0 * std::f64::consts::PI),
            );
            let tau: f64 = rng.gen_range(0.5..3.0);
            for r in 1..=orders.num_groups() {
                let m = orders.group_order(r);
                let mask = lambda_mask(orders, r);
                let det = |xi: &[f64], lam: Complex64| {
                    (sys.nested_principal(&x, xi, r).unwrap() - mask.clone() * lam)
                        .determinant()
                };
                let xi_tau: Vec<f64> = xi.iter().map(|v| v * tau).collect();
                let lhs = det(&xi_tau, lambda * tau.powi(m as i32));
                let rhs = det(&xi, lambda) * tau.powi(orders.partial_sum(r) as i32);
                assert!(
                    (lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1e-300),
                    "r = {r}: {lhs} vs {rhs}"
                );
            }
        }
    }
}
