//! Truncated Taylor polynomials ("jets") in one and two variables.
//!
//! A [`Jet2`] of order `K` stores the coefficients `c[i][j]`, `i + j <= K`, of
//! `Σ c[i][j] (u - u0)^i (v - v0)^j`; a [`Jet1`] stores `Σ c[i] (t - t0)^i`.
//! All arithmetic is truncated at `K`, so a jet built from the coordinate
//! functions carries exact partial derivatives of the expression that built
//! it (up to floating-point rounding).
//!
//! Both types implement [`Jet`], which supplies the elementary functions by
//! composing their univariate Taylor series with the non-constant part of
//! the argument.

use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// Default truncation order.
pub const DEFAULT_ORDER: usize = 6;

/// Default absolute guard on constant terms for division, `sqrt` and
/// non-integer powers.
pub const DEFAULT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("singular division: divisor constant term {constant:e} is below the guard")]
    SingularDivision { constant: f64 },
    #[error("{function} is undefined for constant term {constant:e}")]
    Domain {
        function: &'static str,
        constant: f64,
    },
}

/// Operations shared by univariate and bivariate jets.
pub trait Jet: Clone + Sized {
    fn order(&self) -> usize;
    fn coeffs(&self) -> &[f64];
    fn coeffs_mut(&mut self) -> &mut [f64];

    /// A constant jet with the same shape (order, base point) as `self`.
    fn constant_like(&self, c: f64) -> Self;

    /// Truncated Cauchy product.
    fn mul_jet(&self, rhs: &Self) -> Self;

    /// Quotient by recursive coefficient solve.
    fn div_jet_eps(&self, rhs: &Self, eps: f64) -> Result<Self, JetError>;

    fn div_jet(&self, rhs: &Self) -> Result<Self, JetError> {
        self.div_jet_eps(rhs, DEFAULT_EPSILON)
    }

    fn value(&self) -> f64 {
        self.coeffs()[0]
    }

    fn add_jet(&self, rhs: &Self) -> Self {
        assert_eq!(self.order(), rhs.order(), "jet order mismatch");
        let mut out = self.clone();
        for (o, r) in out.coeffs_mut().iter_mut().zip(rhs.coeffs()) {
            *o += r;
        }
        out
    }

    fn sub_jet(&self, rhs: &Self) -> Self {
        assert_eq!(self.order(), rhs.order(), "jet order mismatch");
        let mut out = self.clone();
        for (o, r) in out.coeffs_mut().iter_mut().zip(rhs.coeffs()) {
            *o -= r;
        }
        out
    }

    fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs_mut().iter_mut().for_each(|c| *c *= s);
        out
    }

    fn add_scalar(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs_mut()[0] += s;
        out
    }

    fn is_zero(&self) -> bool {
        self.coeffs().iter().all(|&c| c == 0.0)
    }

    /// Evaluates `Σ taylor[n] h^n` where `h = self - self.value()`.
    ///
    /// `taylor[n]` must hold `f^(n)(a0) / n!`; entries beyond the order are
    /// ignored since `h^n` vanishes for `n > K`.
    fn compose_series(&self, taylor: &[f64]) -> Self {
        let mut h = self.clone();
        h.coeffs_mut()[0] = 0.0;
        let top = taylor.len().min(self.order() + 1);
        if top == 0 {
            return self.constant_like(0.0);
        }
        // Horner in the nilpotent increment.
        let mut acc = self.constant_like(taylor[top - 1]);
        for n in (0..top - 1).rev() {
            acc = acc.mul_jet(&h).add_scalar(taylor[n]);
        }
        acc
    }

    fn recip(&self) -> Result<Self, JetError> {
        self.recip_eps(DEFAULT_EPSILON)
    }

    fn recip_eps(&self, eps: f64) -> Result<Self, JetError> {
        let a0 = self.value();
        if a0.abs() < eps {
            return Err(JetError::SingularDivision { constant: a0 });
        }
        // 1/(a0 + h) = Σ (-1)^n h^n / a0^(n+1)
        let taylor: Vec<f64> = (0..=self.order())
            .map(|n| {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                sign / a0.powi(n as i32 + 1)
            })
            .collect();
        Ok(self.compose_series(&taylor))
    }

    fn sqrt(&self) -> Result<Self, JetError> {
        self.sqrt_eps(DEFAULT_EPSILON)
    }

    fn sqrt_eps(&self, eps: f64) -> Result<Self, JetError> {
        let a0 = self.value();
        if a0 <= eps {
            return Err(JetError::Domain {
                function: "sqrt",
                constant: a0,
            });
        }
        Ok(self.compose_series(&power_series(a0, 0.5, self.order())))
    }

    /// Real power with non-integer exponent; the constant term must be positive.
    fn powf(&self, r: f64) -> Result<Self, JetError> {
        self.powf_eps(r, DEFAULT_EPSILON)
    }

    fn powf_eps(&self, r: f64, eps: f64) -> Result<Self, JetError> {
        let a0 = self.value();
        if a0 <= eps {
            return Err(JetError::Domain {
                function: "pow",
                constant: a0,
            });
        }
        Ok(self.compose_series(&power_series(a0, r, self.order())))
    }

    /// Integer power by repeated squaring. Negative exponents divide.
    fn powi(&self, n: i64) -> Result<Self, JetError> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut result = self.constant_like(1.0);
        let mut base = self.clone();
        let mut e = n as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_jet(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_jet(&base);
            }
        }
        Ok(result)
    }

    fn exp(&self) -> Self {
        let e0 = self.value().exp();
        let mut taylor = Vec::with_capacity(self.order() + 1);
        let mut fact = 1.0;
        for n in 0..=self.order() {
            if n > 0 {
                fact *= n as f64;
            }
            taylor.push(e0 / fact);
        }
        self.compose_series(&taylor)
    }

    fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose_series(&trig_series([s, c, -s, -c], self.order()))
    }

    fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose_series(&trig_series([c, -s, -c, s], self.order()))
    }
}

/// Taylor coefficients of `x^r` at `x0`: `binom(r, n) x0^(r-n)`.
fn power_series(x0: f64, r: f64, order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(order + 1);
    let mut binom = 1.0;
    for n in 0..=order {
        if n > 0 {
            binom *= (r - (n as f64 - 1.0)) / n as f64;
        }
        out.push(binom * x0.powf(r - n as f64));
    }
    out
}

fn trig_series(cycle: [f64; 4], order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(order + 1);
    let mut fact = 1.0;
    for n in 0..=order {
        if n > 0 {
            fact *= n as f64;
        }
        out.push(cycle[n % 4] / fact);
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

// ---------------------------------------------------------------------------
// Bivariate jets

#[inline]
fn tri_index(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + j
}

/// Number of coefficients of a bivariate jet of order `k`.
pub fn jet2_len(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Bivariate truncated Taylor polynomial in `(u - u0, v - v0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    order: usize,
    base: [f64; 2],
    coeffs: Vec<f64>,
}

impl Jet2 {
    pub fn constant(c: f64, base: [f64; 2], order: usize) -> Self {
        let mut coeffs = vec![0.0; jet2_len(order)];
        coeffs[0] = c;
        Self {
            order,
            base,
            coeffs,
        }
    }

    pub fn zero(base: [f64; 2], order: usize) -> Self {
        Self::constant(0.0, base, order)
    }

    /// The coordinate function `u` at `base`.
    pub fn var_u(base: [f64; 2], order: usize) -> Self {
        let mut jet = Self::constant(base[0], base, order);
        if order >= 1 {
            jet.coeffs[tri_index(1, 0)] = 1.0;
        }
        jet
    }

    /// The coordinate function `v` at `base`.
    pub fn var_v(base: [f64; 2], order: usize) -> Self {
        let mut jet = Self::constant(base[1], base, order);
        if order >= 1 {
            jet.coeffs[tri_index(0, 1)] = 1.0;
        }
        jet
    }

    /// Builds a jet from a coefficient function `(i, j) -> c[i][j]`.
    pub fn from_fn(base: [f64; 2], order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut jet = Self::zero(base, order);
        for d in 0..=order {
            for j in 0..=d {
                jet.coeffs[tri_index(d - j, j)] = f(d - j, j);
            }
        }
        jet
    }

    pub fn base(&self) -> [f64; 2] {
        self.base
    }

    /// Taylor coefficient of `(u-u0)^i (v-v0)^j`; zero beyond the order.
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        if i + j > self.order {
            0.0
        } else {
            self.coeffs[tri_index(i, j)]
        }
    }

    pub fn set_coeff(&mut self, i: usize, j: usize, value: f64) {
        assert!(i + j <= self.order, "index beyond jet order");
        self.coeffs[tri_index(i, j)] = value;
    }

    /// `∂^(i+j) / ∂u^i ∂v^j` at the base point.
    pub fn partial(&self, i: usize, j: usize) -> f64 {
        factorial(i) * factorial(j) * self.coeff(i, j)
    }

    pub fn grad(&self) -> [f64; 2] {
        [self.partial(1, 0), self.partial(0, 1)]
    }

    /// `[[f_uu, f_uv], [f_uv, f_vv]]` at the base point.
    pub fn hessian(&self) -> [[f64; 2]; 2] {
        let uv = self.partial(1, 1);
        [[self.partial(2, 0), uv], [uv, self.partial(0, 2)]]
    }

    /// Jet of `∂/∂u`, one order lower.
    pub fn d_du(&self) -> Self {
        let k = self.order.saturating_sub(1);
        Self::from_fn(self.base, k, |i, j| (i + 1) as f64 * self.coeff(i + 1, j))
    }

    /// Jet of `∂/∂v`, one order lower.
    pub fn d_dv(&self) -> Self {
        let k = self.order.saturating_sub(1);
        Self::from_fn(self.base, k, |i, j| (j + 1) as f64 * self.coeff(i, j + 1))
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        Self::from_fn(self.base, order, |i, j| self.coeff(i, j))
    }

    /// Substitutes jets for the increments `(u - u0, v - v0)`.
    ///
    /// `du` and `dv` must have zero constant terms; the result carries their
    /// shape. Coefficients of the result are exact up to this jet's order.
    pub fn compose<J: Jet>(&self, du: &J, dv: &J) -> J {
        debug_assert!(du.value() == 0.0 && dv.value() == 0.0);
        let k = self.order;
        let mut du_pow = vec![du.constant_like(1.0)];
        let mut dv_pow = vec![dv.constant_like(1.0)];
        for n in 1..=k {
            du_pow.push(du_pow[n - 1].mul_jet(du));
            dv_pow.push(dv_pow[n - 1].mul_jet(dv));
        }
        let mut acc = du.constant_like(0.0);
        for d in 0..=k {
            for j in 0..=d {
                let c = self.coeffs[tri_index(d - j, j)];
                if c != 0.0 {
                    acc = acc.add_jet(&du_pow[d - j].mul_jet(&dv_pow[j]).scale(c));
                }
            }
        }
        acc
    }

    /// Re-expands this jet under the linear change `(u - u0, v - v0) = A (y - y0)`,
    /// returning a jet in `y` based at `new_base`.
    pub fn compose_linear(&self, a: [[f64; 2]; 2], new_base: [f64; 2]) -> Self {
        let order = self.order;
        let mut du = Jet2::zero(new_base, order);
        let mut dv = Jet2::zero(new_base, order);
        if order >= 1 {
            du.set_coeff(1, 0, a[0][0]);
            du.set_coeff(0, 1, a[0][1]);
            dv.set_coeff(1, 0, a[1][0]);
            dv.set_coeff(0, 1, a[1][1]);
        }
        self.compose(&du, &dv)
    }

    /// Value of the represented polynomial at the increment `(du, dv)`.
    pub fn eval_at(&self, du: f64, dv: f64) -> f64 {
        let mut total = 0.0;
        for d in (0..=self.order).rev() {
            for j in 0..=d {
                total += self.coeffs[tri_index(d - j, j)] * du.powi((d - j) as i32) * dv.powi(j as i32);
            }
        }
        total
    }
}

impl Jet for Jet2 {
    fn order(&self) -> usize {
        self.order
    }

    fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    fn constant_like(&self, c: f64) -> Self {
        Self::constant(c, self.base, self.order)
    }

    fn mul_jet(&self, rhs: &Self) -> Self {
        assert_eq!(self.order, rhs.order, "jet order mismatch");
        let k = self.order;
        let mut out = self.constant_like(0.0);
        for d1 in 0..=k {
            for j1 in 0..=d1 {
                let a = self.coeffs[tri_index(d1 - j1, j1)];
                if a == 0.0 {
                    continue;
                }
                let i1 = d1 - j1;
                for d2 in 0..=(k - d1) {
                    for j2 in 0..=d2 {
                        let i2 = d2 - j2;
                        out.coeffs[tri_index(i1 + i2, j1 + j2)] += a * rhs.coeffs[tri_index(i2, j2)];
                    }
                }
            }
        }
        out
    }

    fn div_jet_eps(&self, rhs: &Self, eps: f64) -> Result<Self, JetError> {
        assert_eq!(self.order, rhs.order, "jet order mismatch");
        let b0 = rhs.coeffs[0];
        if b0.abs() < eps {
            return Err(JetError::SingularDivision { constant: b0 });
        }
        let k = self.order;
        let mut q = self.constant_like(0.0);
        // Graded order guarantees every q[i-k][j-l] on the right is known.
        for d in 0..=k {
            for j in 0..=d {
                let i = d - j;
                let mut acc = self.coeffs[tri_index(i, j)];
                for kk in 0..=i {
                    for ll in 0..=j {
                        if kk == 0 && ll == 0 {
                            continue;
                        }
                        acc -= rhs.coeffs[tri_index(kk, ll)] * q.coeffs[tri_index(i - kk, j - ll)];
                    }
                }
                q.coeffs[tri_index(i, j)] = acc / b0;
            }
        }
        Ok(q)
    }
}

// ---------------------------------------------------------------------------
// Univariate jets

/// Univariate truncated Taylor polynomial in `t - t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet1 {
    base: f64,
    coeffs: Vec<f64>,
}

impl Jet1 {
    pub fn constant(c: f64, base: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = c;
        Self { base, coeffs }
    }

    /// The coordinate function `t` at `base`.
    pub fn var(base: f64, order: usize) -> Self {
        Self::linear(base, 1.0, base, order)
    }

    /// `value + slope (t - base)`.
    pub fn linear(value: f64, slope: f64, base: f64, order: usize) -> Self {
        let mut jet = Self::constant(value, base, order);
        if order >= 1 {
            jet.coeffs[1] = slope;
        }
        jet
    }

    pub fn from_coeffs(base: f64, coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least a constant term");
        Self { base, coeffs }
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn coeff(&self, i: usize) -> f64 {
        self.coeffs.get(i).copied().unwrap_or(0.0)
    }

    /// `d^i/dt^i` at the base point.
    pub fn derivative(&self, i: usize) -> f64 {
        factorial(i) * self.coeff(i)
    }

    pub fn d_dt(&self) -> Self {
        let k = self.order().saturating_sub(1);
        let coeffs = (0..=k).map(|i| (i + 1) as f64 * self.coeff(i + 1)).collect();
        Self {
            base: self.base,
            coeffs,
        }
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order());
        Self {
            base: self.base,
            coeffs: self.coeffs[..=order].to_vec(),
        }
    }

    /// Divides by `(t - t0)^k`, dropping the first `k` coefficients.
    ///
    /// The caller asserts those coefficients vanish; the result has order `K - k`.
    pub fn shift_down(&self, k: usize) -> Self {
        assert!(k <= self.order(), "shift beyond jet order");
        Self {
            base: self.base,
            coeffs: self.coeffs[k..].to_vec(),
        }
    }

    /// Index of the first coefficient with `|c| > tol`, if any.
    pub fn valuation(&self, tol: f64) -> Option<usize> {
        self.coeffs.iter().position(|c| c.abs() > tol)
    }

    pub fn eval_at(&self, dt: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * dt + c)
    }
}

impl Jet for Jet1 {
    fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    fn constant_like(&self, c: f64) -> Self {
        Self::constant(c, self.base, self.order())
    }

    fn mul_jet(&self, rhs: &Self) -> Self {
        assert_eq!(self.order(), rhs.order(), "jet order mismatch");
        let k = self.order();
        let mut out = vec![0.0; k + 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in rhs.coeffs[..=k - i].iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self {
            base: self.base,
            coeffs: out,
        }
    }

    fn div_jet_eps(&self, rhs: &Self, eps: f64) -> Result<Self, JetError> {
        assert_eq!(self.order(), rhs.order(), "jet order mismatch");
        let b0 = rhs.coeffs[0];
        if b0.abs() < eps {
            return Err(JetError::SingularDivision { constant: b0 });
        }
        let k = self.order();
        let mut q = vec![0.0; k + 1];
        for n in 0..=k {
            let mut acc = self.coeffs[n];
            for m in 1..=n {
                acc -= rhs.coeffs[m] * q[n - m];
            }
            q[n] = acc / b0;
        }
        Ok(Self {
            base: self.base,
            coeffs: q,
        })
    }
}

macro_rules! impl_jet_ops {
    ($ty:ty) => {
        impl Add for &$ty {
            type Output = $ty;
            fn add(self, rhs: Self) -> $ty {
                self.add_jet(rhs)
            }
        }
        impl Add for $ty {
            type Output = $ty;
            fn add(self, rhs: Self) -> $ty {
                self.add_jet(&rhs)
            }
        }
        impl Sub for &$ty {
            type Output = $ty;
            fn sub(self, rhs: Self) -> $ty {
                self.sub_jet(rhs)
            }
        }
        impl Sub for $ty {
            type Output = $ty;
            fn sub(self, rhs: Self) -> $ty {
                self.sub_jet(&rhs)
            }
        }
        impl Mul for &$ty {
            type Output = $ty;
            fn mul(self, rhs: Self) -> $ty {
                self.mul_jet(rhs)
            }
        }
        impl Mul for $ty {
            type Output = $ty;
            fn mul(self, rhs: Self) -> $ty {
                self.mul_jet(&rhs)
            }
        }
        impl Mul<f64> for &$ty {
            type Output = $ty;
            fn mul(self, rhs: f64) -> $ty {
                self.scale(rhs)
            }
        }
        impl Mul<f64> for $ty {
            type Output = $ty;
            fn mul(self, rhs: f64) -> $ty {
                self.scale(rhs)
            }
        }
        impl Add<f64> for $ty {
            type Output = $ty;
            fn add(self, rhs: f64) -> $ty {
                self.add_scalar(rhs)
            }
        }
        impl Neg for &$ty {
            type Output = $ty;
            fn neg(self) -> $ty {
                self.scale(-1.0)
            }
        }
        impl Neg for $ty {
            type Output = $ty;
            fn neg(self) -> $ty {
                self.scale(-1.0)
            }
        }
    };
}

impl_jet_ops!(Jet1);
impl_jet_ops!(Jet2);

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn square_of_one_plus_v() {
        let one_v = Jet2::var_v([0.0, 0.0], 2) + 1.0;
        let sq = &one_v * &one_v;
        assert_eq!(sq.coeff(0, 0), 1.0);
        assert_eq!(sq.coeff(0, 1), 2.0);
        assert_eq!(sq.coeff(0, 2), 1.0);
        assert_eq!(sq.coeff(1, 0), 0.0);
        assert_eq!(sq.coeff(1, 1), 0.0);
        assert_eq!(sq.coeff(2, 0), 0.0);
    }

    #[test]
    fn zero_annihilates() {
        let x = Jet2::var_u([0.3, -1.0], 4).sin() * 3.0 + Jet2::var_v([0.3, -1.0], 4).exp();
        let z = x.constant_like(0.0);
        assert!((&x * &z).is_zero());
        assert!((&z * &x).is_zero());
    }

    #[test]
    fn self_quotient_is_one() {
        let x = Jet2::var_u([0.0, 0.0], 5) + 1.0;
        let q = x.div_jet(&x).unwrap();
        assert_eq!(q.value(), 1.0);
        assert!(q.coeffs()[1..].iter().all(|c| c.abs() < 1e-15));
    }

    #[test]
    fn singular_division() {
        let x = Jet2::var_u([0.0, 0.0], 3);
        let err = Jet2::constant(1.0, [0.0, 0.0], 3).div_jet(&x).unwrap_err();
        assert!(matches!(err, JetError::SingularDivision { .. }));
    }

    #[test]
    fn sqrt_binomial() {
        let x = Jet2::var_u([0.0, 0.0], 2) * 2.0 + 1.0;
        let r = x.sqrt().unwrap();
        assert_abs_diff_eq!(r.coeff(0, 0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.coeff(1, 0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.coeff(2, 0), -0.5, epsilon = 1e-15);
        assert_eq!(r.coeff(0, 1), 0.0);
    }

    #[test]
    fn sqrt_domain() {
        let x = Jet1::var(0.0, 3) - Jet1::constant(1.0, 0.0, 3);
        assert!(matches!(x.sqrt(), Err(JetError::Domain { function: "sqrt", .. })));
        let zero = Jet1::var(0.0, 3);
        assert!(zero.sqrt().is_err());
        assert!(zero.powf(1.5).is_err());
    }

    #[test]
    fn sin_of_zero() {
        let z = Jet2::constant(0.0, [1.0, 2.0], 4);
        assert!(z.sin().is_zero());
    }

    #[test]
    fn pow_three_halves_of_four() {
        let x = Jet2::constant(4.0, [0.0, 0.0], 3);
        let p = x.powf(1.5).unwrap();
        assert_abs_diff_eq!(p.value(), 4f64.powf(1.5), epsilon = 1e-14);
        assert_abs_diff_eq!(p.value(), 8.0, epsilon = 1e-14);
        assert!(p.coeffs()[1..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn coordinate_jets() {
        let u = Jet2::var_u([3.0, 5.0], 2);
        assert_eq!(u.coeffs(), &[3.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let v = Jet2::var_v([0.0, 0.0], 1);
        assert_eq!(v.coeffs(), &[0.0, 0.0, 1.0]);
        let t = Jet1::var(2.0, 4);
        assert_eq!(t.coeffs(), &[2.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn partials_of_product() {
        // u^2 v^3 at (1, 2)
        let base = [1.0, 2.0];
        let u = Jet2::var_u(base, 6);
        let v = Jet2::var_v(base, 6);
        let f = u.powi(2).unwrap() * v.powi(3).unwrap();
        assert_abs_diff_eq!(f.value(), 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.partial(1, 0), 16.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.partial(0, 1), 12.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.partial(1, 1), 24.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.partial(2, 3), 12.0, epsilon = 1e-12);
        assert_eq!(f.coeff(3, 4), 0.0);
    }

    #[test]
    fn negative_integer_power() {
        let x = Jet1::var(2.0, 3);
        let p = x.powi(-2).unwrap();
        // d/dt t^-2 = -2 t^-3
        assert_abs_diff_eq!(p.value(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(p.derivative(1), -0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(p.derivative(2), 6.0 / 16.0, epsilon = 1e-15);
    }

    #[test]
    fn derivative_jets_and_composition() {
        let base = [0.5, -0.25];
        let u = Jet2::var_u(base, 5);
        let v = Jet2::var_v(base, 5);
        let f = (&u * &v).sin() + v.exp();
        let fu = f.d_du();
        assert_eq!(fu.order(), 4);
        assert_abs_diff_eq!(fu.value(), f.partial(1, 0), epsilon = 1e-14);
        assert_abs_diff_eq!(fu.partial(1, 1), f.partial(2, 1), epsilon = 1e-12);

        // Linear re-expansion with the identity leaves the jet alone.
        let same = f.compose_linear([[1.0, 0.0], [0.0, 1.0]], base);
        for (a, b) in same.coeffs().iter().zip(f.coeffs()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
        // Along the curve (u0 + s, v0 + 2s): d/ds f = f_u + 2 f_v.
        let s = Jet1::var(0.0, 5);
        let along: Jet1 = f.compose(&s, &(&s * 2.0));
        assert_abs_diff_eq!(along.derivative(1), f.partial(1, 0) + 2.0 * f.partial(0, 1), epsilon = 1e-13);
    }

    #[test]
    fn jet1_shift_and_valuation() {
        let t = Jet1::var(0.0, 4);
        let t3 = t.powi(3).unwrap() + t.powi(4).unwrap() * 2.0;
        assert_eq!(t3.valuation(1e-14), Some(3));
        let s = t3.shift_down(3);
        assert_eq!(s.coeffs(), &[1.0, 2.0]);
    }
}
