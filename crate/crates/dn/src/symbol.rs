//! Symbolic representation of mixed-order (Douglis-Nirenberg) systems.
//!
//! A system is an `N x N` matrix of differential operators where entry
//! `(j, k)` has order at most `s_j + t_k`. Coefficients are modeled as a
//! complex constant plus finitely many Gaussian bumps, so every derivative
//! needed by the formal adjoint exists in closed form. The convention is
//! `D = -i d/dx`, so the symbol of `D^alpha` is `xi^alpha` with real `xi`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Exponent vector of a monomial `xi^alpha = xi_1^{a_1} ... xi_n^{a_n}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total order `|alpha|`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `xi^alpha` for real `xi`.
    pub fn xi_pow(&self, xi: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(xi)
            .map(|(&a, &x)| x.powi(a as i32))
            .product()
    }

    /// All `beta <= alpha` componentwise, each with the binomial weight
    /// `prod_i C(alpha_i, beta_i)`. Used by the Leibniz expansion.
    pub fn sub_indices(&self) -> Vec<(MultiIndex, f64)> {
        let mut out = vec![(MultiIndex(Vec::new()), 1.0)];
        for &a in &self.0 {
            let mut next = Vec::with_capacity(out.len() * (a as usize + 1));
            for (prefix, w) in &out {
                for b in 0..=a {
                    let mut entries = prefix.0.clone();
                    entries.push(b);
                    next.push((MultiIndex(entries), w * binomial(a, b)));
                }
            }
            out = next;
        }
        out
    }

    pub fn sub(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| a - b)
                .collect(),
        )
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut v = 1.0;
    for i in 0..k {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

/// Enumerate every multi-index of dimension `n` with `|alpha| <= max_order`.
pub fn multi_indices(n: usize, max_order: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut current = vec![0u32; n];
    fill(&mut out, &mut current, 0, max_order);
    fn fill(out: &mut Vec<MultiIndex>, current: &mut Vec<u32>, axis: usize, budget: u32) {
        if axis == current.len() {
            out.push(MultiIndex(current.clone()));
            return;
        }
        for a in 0..=budget {
            current[axis] = a;
            fill(out, current, axis + 1, budget - a);
        }
        current[axis] = 0;
    }
    out
}

/// Weight vectors of a DN system together with the derived order groups.
///
/// `m_j = s_j + t_k` is constant on each group; `groups[r]` holds the
/// one-based end index `k_r` of group `r`, and `partial_sums[r]` holds
/// `N_{r+1} = sum_{j <= k_{r+1}} m_j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DNOrders {
    s: Vec<i64>,
    t: Vec<i64>,
    m: Vec<i64>,
    groups: Vec<usize>,
    partial_sums: Vec<i64>,
}

impl DNOrders {
    pub fn size(&self) -> usize {
        self.s.len()
    }

    pub fn s(&self) -> &[i64] {
        &self.s
    }

    pub fn t(&self) -> &[i64] {
        &self.t
    }

    pub fn m(&self) -> &[i64] {
        &self.m
    }

    /// Number of order groups `d`.
    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    /// One-based end index `k_r` of group `r` (`r` one-based).
    pub fn group_end(&self, r: usize) -> usize {
        self.groups[r - 1]
    }

    /// The common order `m_{k_r}` within group `r`.
    pub fn group_order(&self, r: usize) -> i64 {
        self.m[self.groups[r - 1] - 1]
    }

    /// `N_r = sum_{j <= k_r} m_j`, with `N_0 = 0`.
    pub fn partial_sum(&self, r: usize) -> i64 {
        if r == 0 {
            0
        } else {
            self.partial_sums[r - 1]
        }
    }
}

/// Validate weight vectors against the standing assumptions
/// (`s_1 >= ... >= s_N >= 0`, `t_1 >= ... >= t_N > 0`) and derive the
/// group structure.
pub fn validate_orders(s: &[i64], t: &[i64]) -> Result<DNOrders> {
    if s.is_empty() || s.len() != t.len() {
        return Err(Error::InvalidOrders {
            index: 0,
            reason: format!("s has length {}, t has length {}", s.len(), t.len()),
        });
    }
    for (j, &sj) in s.iter().enumerate() {
        if sj < 0 {
            return Err(Error::InvalidOrders {
                index: j,
                reason: format!("s[{j}] = {sj} < 0"),
            });
        }
        if j > 0 && sj > s[j - 1] {
            return Err(Error::InvalidOrders {
                index: j,
                reason: format!("s[{j}] = {sj} exceeds s[{}] = {}", j - 1, s[j - 1]),
            });
        }
    }
    for (j, &tj) in t.iter().enumerate() {
        if tj <= 0 {
            return Err(Error::InvalidOrders {
                index: j,
                reason: format!("t[{j}] = {tj} <= 0"),
            });
        }
        if j > 0 && tj > t[j - 1] {
            return Err(Error::InvalidOrders {
                index: j,
                reason: format!("t[{j}] = {tj} exceeds t[{}] = {}", j - 1, t[j - 1]),
            });
        }
    }
    let m: Vec<i64> = s.iter().zip(t).map(|(&a, &b)| a + b).collect();
    let mut groups = Vec::new();
    for j in 1..=m.len() {
        if j == m.len() || m[j] != m[j - 1] {
            groups.push(j);
        }
    }
    let mut partial_sums = Vec::with_capacity(groups.len());
    for &k in &groups {
        partial_sums.push(m[..k].iter().sum());
    }
    Ok(DNOrders {
        s: s.to_vec(),
        t: t.to_vec(),
        m,
        groups,
        partial_sums,
    })
}

/// The anisotropic weight `<xi, lambda>_j = (|xi|^2 + |lambda|^{2/m_j})^{1/2}`.
pub fn anisotropic_weight(xi: &[f64], lambda: Complex64, m_j: i64) -> f64 {
    let xi2: f64 = xi.iter().map(|x| x * x).sum();
    (xi2 + lambda.norm().powf(2.0 / m_j as f64)).sqrt()
}

/// One Gaussian bump `amplitude * p(x - center) * exp(-|x - center|^2 / width^2)`,
/// where `p` is a separable real polynomial (identically 1 for user-supplied
/// bumps; derivatives introduce nontrivial factors).
#[derive(Clone, Debug)]
pub struct Bump {
    pub amplitude: Complex64,
    pub center: Vec<f64>,
    pub width: f64,
    axis_polys: Vec<Vec<f64>>,
}

impl Bump {
    pub fn new(amplitude: Complex64, center: Vec<f64>, width: f64) -> Self {
        let n = center.len();
        Bump {
            amplitude,
            center,
            width,
            axis_polys: vec![vec![1.0]; n],
        }
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let mut v = 1.0;
        for i in 0..self.center.len() {
            let u = x[i] - self.center[i];
            v *= poly_eval(&self.axis_polys[i], u) * (-u * u / (self.width * self.width)).exp();
        }
        self.amplitude * v
    }

    /// Partial derivative d/dx_axis; `p -> p' - (2u/w^2) p` on that axis.
    fn partial(&self, axis: usize) -> Bump {
        let w2 = self.width * self.width;
        let p = &self.axis_polys[axis];
        let mut q = vec![0.0; p.len() + 1];
        for (k, &c) in p.iter().enumerate() {
            if k > 0 {
                q[k - 1] += k as f64 * c;
            }
            q[k + 1] -= 2.0 / w2 * c;
        }
        while q.len() > 1 && q.last() == Some(&0.0) {
            q.pop();
        }
        let mut out = self.clone();
        out.axis_polys[axis] = q;
        out
    }

    fn conj(&self) -> Bump {
        let mut out = self.clone();
        out.amplitude = self.amplitude.conj();
        out
    }
}

fn poly_eval(p: &[f64], u: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * u + c)
}

/// Coefficient function `constant + sum of bumps`; closed under `D^alpha`.
#[derive(Clone, Debug)]
pub struct CoefficientFn {
    pub constant: Complex64,
    pub bumps: Vec<Bump>,
}

impl CoefficientFn {
    pub fn constant(c: Complex64) -> Self {
        CoefficientFn {
            constant: c,
            bumps: Vec::new(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.bumps.iter().fold(self.constant, |acc, b| acc + b.eval(x))
    }

    pub fn is_constant(&self) -> bool {
        self.bumps.is_empty()
    }

    pub fn conj(&self) -> CoefficientFn {
        CoefficientFn {
            constant: self.constant.conj(),
            bumps: self.bumps.iter().map(Bump::conj).collect(),
        }
    }

    pub fn scale(&self, factor: Complex64) -> CoefficientFn {
        CoefficientFn {
            constant: self.constant * factor,
            bumps: self
                .bumps
                .iter()
                .map(|b| {
                    let mut b = b.clone();
                    b.amplitude *= factor;
                    b
                })
                .collect(),
        }
    }

    /// Apply `D^alpha = (-i)^{|alpha|} d^alpha/dx^alpha` in closed form.
    pub fn d_derivative(&self, alpha: &MultiIndex) -> CoefficientFn {
        if alpha.order() == 0 {
            return self.clone();
        }
        let mut bumps = self.bumps.clone();
        for (axis, &a) in alpha.0.iter().enumerate() {
            for _ in 0..a {
                bumps = bumps.iter().map(|b| b.partial(axis)).collect();
            }
        }
        let phase = Complex64::new(0.0, -1.0).powu(alpha.order());
        for b in &mut bumps {
            b.amplitude *= phase;
        }
        CoefficientFn {
            constant: Complex64::new(0.0, 0.0),
            bumps,
        }
    }

    fn merge(&mut self, other: &CoefficientFn) {
        self.constant += other.constant;
        self.bumps.extend(other.bumps.iter().cloned());
    }
}

/// One term `a(x) D^alpha` of a system entry.
#[derive(Clone, Debug)]
pub struct Term {
    pub alpha: MultiIndex,
    pub coeff: CoefficientFn,
}

/// Closed sector in the complex plane with vertex at the origin,
/// `theta_min <= arg(lambda) <= theta_max` with angles in `[0, 2*pi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sector {
    pub theta_min: f64,
    pub theta_max: f64,
}

impl Sector {
    pub fn new(theta_min: f64, theta_max: f64) -> Result<Self> {
        let tau = 2.0 * std::f64::consts::PI;
        if !(0.0..=tau).contains(&theta_min)
            || !(0.0..=tau).contains(&theta_max)
            || theta_min > theta_max
        {
            return Err(Error::Validation {
                path: "sector".into(),
                reason: format!(
                    "need 0 <= theta_min <= theta_max <= 2*pi, got [{theta_min}, {theta_max}]"
                ),
            });
        }
        Ok(Sector {
            theta_min,
            theta_max,
        })
    }

    pub fn contains(&self, lambda: Complex64) -> bool {
        if lambda == Complex64::new(0.0, 0.0) {
            return true;
        }
        let mut arg = lambda.arg();
        if arg < 0.0 {
            arg += 2.0 * std::f64::consts::PI;
        }
        // A sector reaching to 2*pi also contains the positive real axis.
        (self.theta_min <= arg && arg <= self.theta_max)
            || (arg == 0.0 && self.theta_max >= 2.0 * std::f64::consts::PI)
    }
}

/// A Douglis-Nirenberg system: entry `(j, k)` is a sum of terms
/// `a(x) D^alpha` with `|alpha| <= s_j + t_k`.
#[derive(Clone, Debug)]
pub struct DNSystem {
    dim: usize,
    orders: DNOrders,
    entries: Vec<Vec<Vec<Term>>>,
}

impl DNSystem {
    pub fn new(dim: usize, orders: DNOrders, entries: Vec<Vec<Vec<Term>>>) -> Result<Self> {
        let n_sys = orders.size();
        if entries.len() != n_sys || entries.iter().any(|row| row.len() != n_sys) {
            return Err(Error::Validation {
                path: "entries".into(),
                reason: format!("expected {n_sys} x {n_sys} entry matrix"),
            });
        }
        for (j, row) in entries.iter().enumerate() {
            for (k, terms) in row.iter().enumerate() {
                let cap = orders.s[j] + orders.t[k];
                for (ti, term) in terms.iter().enumerate() {
                    if term.alpha.len() != dim {
                        return Err(Error::Validation {
                            path: format!("entries[{j}][{k}][{ti}].alpha"),
                            reason: format!(
                                "multi-index length {} != dimension {dim}",
                                term.alpha.len()
                            ),
                        });
                    }
                    if (term.alpha.order() as i64) > cap {
                        return Err(Error::Validation {
                            path: format!("entries[{j}][{k}][{ti}].alpha"),
                            reason: format!(
                                "order {} exceeds s_j + t_k = {cap}",
                                term.alpha.order()
                            ),
                        });
                    }
                }
            }
        }
        Ok(DNSystem {
            dim,
            orders,
            entries,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.orders.size()
    }

    pub fn orders(&self) -> &DNOrders {
        &self.orders
    }

    pub fn entry(&self, j: usize, k: usize) -> &[Term] {
        &self.entries[j][k]
    }

    pub fn entries(&self) -> &[Vec<Vec<Term>>] {
        &self.entries
    }

    pub fn is_constant_coefficient(&self) -> bool {
        self.entries
            .iter()
            .flatten()
            .flatten()
            .all(|t| t.coeff.is_constant())
    }

    /// Full symbol `A(x, xi) - lambda I`.
    pub fn eval_symbol(&self, x: &[f64], xi: &[f64], lambda: Complex64) -> DMatrix<Complex64> {
        let n = self.size();
        DMatrix::from_fn(n, n, |j, k| {
            let mut v: Complex64 = self.entries[j][k]
                .iter()
                .map(|t| t.coeff.eval(x) * t.alpha.xi_pow(xi))
                .sum();
            if j == k {
                v -= lambda;
            }
            v
        })
    }

    /// Principal symbol: only the terms of exact order `s_j + t_k`.
    pub fn principal_symbol(&self, x: &[f64], xi: &[f64]) -> DMatrix<Complex64> {
        let n = self.size();
        DMatrix::from_fn(n, n, |j, k| {
            let top = (self.orders.s[j] + self.orders.t[k]) as u32;
            self.entries[j][k]
                .iter()
                .filter(|t| t.alpha.order() == top)
                .map(|t| t.coeff.eval(x) * t.alpha.xi_pow(xi))
                .sum()
        })
    }

    /// Top-left `k_r x k_r` block of the principal symbol.
    pub fn nested_principal(&self, x: &[f64], xi: &[f64], r: usize) -> Result<DMatrix<Complex64>> {
        if r < 1 || r > self.orders.num_groups() {
            return Err(Error::Validation {
                path: "r".into(),
                reason: format!("group index {r} out of 1..={}", self.orders.num_groups()),
            });
        }
        let kr = self.orders.group_end(r);
        Ok(self.principal_symbol(x, xi).view((0, 0), (kr, kr)).into())
    }

    /// Constant-coefficient system freezing the principal part at `x0`.
    pub fn frozen_principal(&self, x0: &[f64]) -> DNSystem {
        let n = self.size();
        let mut entries = vec![vec![Vec::new(); n]; n];
        for j in 0..n {
            for k in 0..n {
                let top = (self.orders.s[j] + self.orders.t[k]) as u32;
                for term in &self.entries[j][k] {
                    if term.alpha.order() == top {
                        entries[j][k].push(Term {
                            alpha: term.alpha.clone(),
                            coeff: CoefficientFn::constant(term.coeff.eval(x0)),
                        });
                    }
                }
            }
        }
        DNSystem {
            dim: self.dim,
            orders: self.orders.clone(),
            entries,
        }
    }

    /// Formal adjoint `A'` defined by `<A u, v> = <u, A' v>`; only for
    /// systems with `s_j = 0` for all `j`, where the adjoint stays in the
    /// same DN class with `s' = 0`, `t' = t`.
    pub fn formal_adjoint(&self) -> Result<DNSystem> {
        let n = self.size();
        for (j, &sj) in self.orders.s.iter().enumerate() {
            if sj != 0 {
                return Err(Error::AdjointOrders {
                    index: j,
                    value: sj,
                });
            }
        }
        let mut entries = vec![vec![Vec::new(); n]; n];
        for j in 0..n {
            for k in 0..n {
                // Entry (j, k) of A' collects D^alpha( conj(a) . ) for each
                // term a D^alpha of A_{kj}, expanded by the Leibniz rule.
                let mut collected: Vec<Term> = Vec::new();
                for term in &self.entries[k][j] {
                    let conj = term.coeff.conj();
                    for (beta, binom) in term.alpha.sub_indices() {
                        let coeff = conj
                            .d_derivative(&beta)
                            .scale(Complex64::new(binom, 0.0));
                        let alpha = term.alpha.sub(&beta);
                        if let Some(existing) =
                            collected.iter_mut().find(|t| t.alpha == alpha)
                        {
                            existing.coeff.merge(&coeff);
                        } else {
                            collected.push(Term { alpha, coeff });
                        }
                    }
                }
                entries[j][k] = collected;
            }
        }
        DNSystem::new(self.dim, self.orders.clone(), entries)
    }
}

/// Diagonal 0/1 mask with ones exactly on the indices of group `r`
/// (the matrix written `I~_{r,0}` for the nested minors).
pub fn lambda_mask(orders: &DNOrders, r: usize) -> DMatrix<Complex64> {
    let kr = orders.group_end(r);
    let lo = if r == 1 { 0 } else { orders.group_end(r - 1) };
    DMatrix::from_fn(kr, kr, |i, j| {
        if i == j && i >= lo {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Outcome of the evenness prefilter on the partial order sums `N_r`.
#[derive(Clone, Debug, Serialize)]
pub struct ParityVerdict {
    pub pass: bool,
    pub levels: Vec<ParityLevel>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ParityLevel {
    pub r: usize,
    pub n_r: i64,
    /// Whether evenness is a necessary condition at this level
    /// (always for r = 1; for r > 1 only when n > 2).
    pub required: bool,
    pub even: bool,
}

/// Necessary-condition check: `N_r` must be even for `r = 1`, and for
/// `r > 1` whenever the ambient dimension exceeds 2.
pub fn parity_check(orders: &DNOrders, n: usize) -> ParityVerdict {
    let mut levels = Vec::new();
    let mut pass = true;
    for r in 1..=orders.num_groups() {
        let n_r = orders.partial_sum(r);
        let required = r == 1 || n > 2;
        let even = n_r % 2 == 0;
        if required && !even {
            pass = false;
        }
        levels.push(ParityLevel {
            r,
            n_r,
            required,
            even,
        });
    }
    ParityVerdict { pass, levels }
}
