//! Exact arithmetic in the cyclotomic field Q(ζ_N).
//!
//! Elements are stored in the power basis `1, ζ, …, ζ^{d-1}` reduced modulo the
//! N-th cyclotomic polynomial Φ_N (`d = deg Φ_N`). Only the nonzero coefficients
//! are kept, sorted by exponent, so the representation is unique and equality is
//! structural. Reduction goes through a precomputed table of `ζ^e mod Φ_N`
//! for `0 <= e < N`; all table entries are small integers.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Arbitrary-precision rational used for every coefficient.
pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CycloError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("field context mismatch: Q(zeta_{left}) vs Q(zeta_{right})")]
    ContextMismatch { left: u32, right: u32 },
    #[error("{0} is not a prime")]
    NotPrime(u32),
    #[error("unsupported field order {order} for p = {p}; supported orders are p, p^2 and 4p^2")]
    UnsupportedOrder { order: u32, p: u32 },
    #[error("field order {0} is not of the form p, p^2 or 4p^2 for a prime p")]
    UnknownOrder(u32),
    #[error("expected {expected} coefficients, found {found}")]
    CoefficientCount { expected: usize, found: usize },
    #[error("invalid rational literal {0:?}")]
    BadRational(String),
    #[error("cannot embed Q(zeta_{from}) into Q(zeta_{to})")]
    NotSubfield { from: u32, to: u32 },
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

struct FieldData {
    order: u32,
    p: u32,
    degree: usize,
    phi: Vec<i64>,
    /// `powers[e]` is ζ^e reduced mod Φ_N, as sparse `(exponent, coefficient)`.
    powers: Vec<Vec<(u32, i64)>>,
}

/// The field Q(ζ_N) together with the prime `p` of the acting group.
#[derive(Clone)]
pub struct FieldContext(Arc<FieldData>);

impl PartialEq for FieldContext {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || (self.0.order == other.0.order && self.0.p == other.0.p)
    }
}

impl Eq for FieldContext {}

impl fmt::Debug for FieldContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q(zeta_{}) [p = {}]", self.0.order, self.0.p)
    }
}

fn context_cache() -> &'static Mutex<HashMap<(u32, u32), FieldContext>> {
    static CACHE: OnceLock<Mutex<HashMap<(u32, u32), FieldContext>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl FieldContext {
    /// Q(ζ_N) for the group Z/pZ. `order` must be one of p, p², 4p².
    pub fn new(p: u32, order: u32) -> Result<Self, CycloError> {
        if !is_prime(p) {
            return Err(CycloError::NotPrime(p));
        }
        if order != p && order != p * p && order != 4 * p * p {
            return Err(CycloError::UnsupportedOrder { order, p });
        }
        let mut cache = context_cache().lock().expect("field cache poisoned");
        if let Some(ctx) = cache.get(&(p, order)) {
            return Ok(ctx.clone());
        }
        let ctx = FieldContext(Arc::new(build_field(p, order)));
        cache.insert((p, order), ctx.clone());
        Ok(ctx)
    }

    /// Q(ζ_{4p²}), the default field.
    pub fn with_default_order(p: u32) -> Result<Self, CycloError> {
        Self::new(p, 4 * p * p)
    }

    /// Recovers `p` from the order; the three supported shapes never collide.
    pub fn from_order(order: u32) -> Result<Self, CycloError> {
        if is_prime(order) {
            return Self::new(order, order);
        }
        let r = integer_sqrt(order);
        if r * r == order && is_prime(r) {
            return Self::new(r, order);
        }
        if order.is_multiple_of(4) {
            let r = integer_sqrt(order / 4);
            if r * r == order / 4 && is_prime(r) {
                return Self::new(r, order);
            }
        }
        Err(CycloError::UnknownOrder(order))
    }

    pub fn order(&self) -> u32 {
        self.0.order
    }

    pub fn p(&self) -> u32 {
        self.0.p
    }

    pub fn degree(&self) -> usize {
        self.0.degree
    }

    /// Coefficients of Φ_N, constant term first.
    pub fn cyclotomic_polynomial(&self) -> &[i64] {
        &self.0.phi
    }

    fn check(&self, other: &FieldContext) -> Result<(), CycloError> {
        if self == other {
            Ok(())
        } else {
            Err(CycloError::ContextMismatch { left: self.order(), right: other.order() })
        }
    }
}

fn integer_sqrt(n: u32) -> u32 {
    let mut r = (n as f64).sqrt() as u32;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Φ_n by repeated division of xⁿ - 1 by Φ_d for the proper divisors d.
fn cyclotomic(n: u32) -> Vec<i64> {
    let mut num = vec![0i64; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in 1..n {
        if n.is_multiple_of(d) {
            num = exact_div(&num, &cyclotomic(d));
        }
    }
    num
}

fn exact_div(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let qd = rem.len() - 1 - dd;
    let mut q = vec![0i64; qd + 1];
    for i in (0..=qd).rev() {
        let c = rem[i + dd];
        q[i] = c;
        if c != 0 {
            for (j, &b) in den.iter().enumerate() {
                rem[i + j] -= c * b;
            }
        }
    }
    debug_assert!(rem.iter().all(|&c| c == 0));
    q
}

fn build_field(p: u32, order: u32) -> FieldData {
    let phi = cyclotomic(order);
    let degree = phi.len() - 1;
    let mut powers = Vec::with_capacity(order as usize);
    let mut cur = vec![0i64; degree];
    cur[0] = 1;
    for _ in 0..order {
        powers.push(
            cur.iter()
                .enumerate()
                .filter(|(_, &c)| c != 0)
                .map(|(i, &c)| (i as u32, c))
                .collect::<Vec<_>>(),
        );
        // multiply by x and reduce the overflow coefficient with the monic Φ_N
        let top = cur[degree - 1];
        for i in (1..degree).rev() {
            cur[i] = cur[i - 1];
        }
        cur[0] = 0;
        if top != 0 {
            for i in 0..degree {
                cur[i] -= top * phi[i];
            }
        }
    }
    FieldData { order, p, degree, phi, powers }
}

/// An exact element of Q(ζ_N).
#[derive(Clone, PartialEq, Eq)]
pub struct Scalar {
    ctx: FieldContext,
    terms: Vec<(u32, Rational)>,
}

fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Merges unsorted `(exponent, coefficient)` pairs into the normal form.
fn normalize(mut raw: Vec<(u32, Rational)>) -> Vec<(u32, Rational)> {
    if raw.len() <= 1 {
        raw.retain(|(_, c)| !c.is_zero());
        return raw;
    }
    raw.sort_by_key(|(i, _)| *i);
    let mut out: Vec<(u32, Rational)> = Vec::with_capacity(raw.len());
    for (i, c) in raw {
        match out.last_mut() {
            Some((j, acc)) if *j == i => *acc += c,
            _ => out.push((i, c)),
        }
    }
    out.retain(|(_, c)| !c.is_zero());
    out
}

impl Scalar {
    pub fn zero(ctx: &FieldContext) -> Self {
        Scalar { ctx: ctx.clone(), terms: Vec::new() }
    }

    pub fn one(ctx: &FieldContext) -> Self {
        Self::from_rational(ctx, Rational::one())
    }

    pub fn from_int(ctx: &FieldContext, n: i64) -> Self {
        Self::from_rational(ctx, rat(n))
    }

    pub fn from_rational(ctx: &FieldContext, q: Rational) -> Self {
        let terms = if q.is_zero() { Vec::new() } else { vec![(0, q)] };
        Scalar { ctx: ctx.clone(), terms }
    }

    /// ζ_N^k, with `k` taken modulo N.
    pub fn root(ctx: &FieldContext, k: i64) -> Self {
        let n = ctx.order() as i64;
        let e = k.rem_euclid(n) as usize;
        let terms = ctx.0.powers[e].iter().map(|&(i, c)| (i, rat(c))).collect();
        Scalar { ctx: ctx.clone(), terms }
    }

    /// ζ_p^k where ζ_p = ζ_N^{N/p}.
    pub fn p_root(ctx: &FieldContext, k: i64) -> Self {
        let step = (ctx.order() / ctx.p()) as i64;
        Self::root(ctx, k.rem_euclid(ctx.p() as i64) * step)
    }

    /// Builds an element from a dense power-basis vector of length `deg Φ_N`.
    pub fn from_coeffs(ctx: &FieldContext, coeffs: Vec<Rational>) -> Result<Self, CycloError> {
        if coeffs.len() != ctx.degree() {
            return Err(CycloError::CoefficientCount { expected: ctx.degree(), found: coeffs.len() });
        }
        let terms = coeffs
            .into_iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (i as u32, c))
            .collect();
        Ok(Scalar { ctx: ctx.clone(), terms })
    }

    pub fn ctx(&self) -> &FieldContext {
        &self.ctx
    }

    /// Dense power-basis coefficients, length `deg Φ_N`.
    pub fn coeffs(&self) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.ctx.degree()];
        for (i, c) in &self.terms {
            out[*i as usize] = c.clone();
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0 == 0 && self.terms[0].1.is_one()
    }

    /// The rational value if the element lies in Q.
    pub fn as_rational(&self) -> Option<Rational> {
        match self.terms.as_slice() {
            [] => Some(Rational::zero()),
            [(0, c)] => Some(c.clone()),
            _ => None,
        }
    }

    /// The integer value if the element is a rational integer.
    pub fn as_integer(&self) -> Option<i64> {
        let q = self.as_rational()?;
        if q.is_integer() {
            q.to_integer().to_i64()
        } else {
            None
        }
    }

    pub fn try_add(&self, other: &Scalar) -> Result<Scalar, CycloError> {
        self.ctx.check(&other.ctx)?;
        Ok(self.add_unchecked(other, false))
    }

    pub fn try_sub(&self, other: &Scalar) -> Result<Scalar, CycloError> {
        self.ctx.check(&other.ctx)?;
        Ok(self.add_unchecked(other, true))
    }

    pub fn try_mul(&self, other: &Scalar) -> Result<Scalar, CycloError> {
        self.ctx.check(&other.ctx)?;
        Ok(self.mul_unchecked(other))
    }

    fn add_unchecked(&self, other: &Scalar, negate: bool) -> Scalar {
        if other.is_zero() {
            return self.clone();
        }
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.terms, &other.terms);
        while i < a.len() || j < b.len() {
            let take_a = j >= b.len() || (i < a.len() && a[i].0 < b[j].0);
            let take_b = i >= a.len() || (j < b.len() && b[j].0 < a[i].0);
            if take_a {
                out.push(a[i].clone());
                i += 1;
            } else if take_b {
                let c = if negate { -b[j].1.clone() } else { b[j].1.clone() };
                out.push((b[j].0, c));
                j += 1;
            } else {
                let c = if negate { &a[i].1 - &b[j].1 } else { &a[i].1 + &b[j].1 };
                if !c.is_zero() {
                    out.push((a[i].0, c));
                }
                i += 1;
                j += 1;
            }
        }
        Scalar { ctx: self.ctx.clone(), terms: out }
    }

    fn mul_unchecked(&self, other: &Scalar) -> Scalar {
        if self.is_zero() || other.is_zero() {
            return Scalar::zero(&self.ctx);
        }
        let n = self.ctx.order();
        let powers = &self.ctx.0.powers;
        let mut raw = Vec::new();
        for (i, a) in &self.terms {
            for (j, b) in &other.terms {
                let ab = a * b;
                let e = ((i + j) % n) as usize;
                if let [(k, c)] = powers[e].as_slice() {
                    if *c == 1 {
                        raw.push((*k, ab));
                        continue;
                    }
                }
                for &(k, c) in &powers[e] {
                    raw.push((k, &ab * rat(c)));
                }
            }
        }
        Scalar { ctx: self.ctx.clone(), terms: normalize(raw) }
    }

    pub fn scale(&self, q: &Rational) -> Scalar {
        if q.is_zero() {
            return Scalar::zero(&self.ctx);
        }
        Scalar { ctx: self.ctx.clone(), terms: self.terms.iter().map(|(i, c)| (*i, c * q)).collect() }
    }

    /// Complex conjugation, the automorphism ζ ↦ ζ^{N-1}.
    pub fn conj(&self) -> Scalar {
        let n = self.ctx.order();
        let powers = &self.ctx.0.powers;
        let mut raw = Vec::new();
        for (i, c) in &self.terms {
            let e = ((n - i) % n) as usize;
            for &(k, m) in &powers[e] {
                raw.push((k, c * rat(m)));
            }
        }
        Scalar { ctx: self.ctx.clone(), terms: normalize(raw) }
    }

    /// Multiplicative inverse via the extended Euclidean algorithm against Φ_N.
    pub fn inv(&self) -> Result<Scalar, CycloError> {
        if self.is_zero() {
            return Err(CycloError::DivisionByZero);
        }
        if let [(i, c)] = self.terms.as_slice() {
            // c ζ^i  ->  c⁻¹ ζ^{-i}
            let root = Scalar::root(&self.ctx, -(*i as i64));
            return Ok(root.scale(&c.recip()));
        }
        let a = self.coeffs();
        let m: Vec<Rational> = self.ctx.0.phi.iter().map(|&c| rat(c)).collect();
        let s = poly_inverse_mod(&a, &m);
        Scalar::from_coeffs(&self.ctx, s).map_err(|_| CycloError::DivisionByZero)
    }

    pub fn try_div(&self, other: &Scalar) -> Result<Scalar, CycloError> {
        self.ctx.check(&other.ctx)?;
        Ok(self.mul_unchecked(&other.inv()?))
    }

    pub fn pow(&self, mut e: u64) -> Scalar {
        let mut base = self.clone();
        let mut acc = Scalar::one(&self.ctx);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_unchecked(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_unchecked(&base);
            }
        }
        acc
    }

    /// Least `m` with `a^m = 1`, testing only the divisors of N.
    pub fn root_order(&self) -> Option<u32> {
        let n = self.ctx.order();
        (1..=n).filter(|m| n.is_multiple_of(*m)).find(|&m| self.pow(m as u64).is_one())
    }

    /// The exponent `k` (mod N) with `self = ζ_N^k`, if any.
    pub fn root_exponent(&self) -> Option<u32> {
        let powers = &self.ctx.0.powers;
        (0..self.ctx.order()).find(|&k| {
            let t = &powers[k as usize];
            t.len() == self.terms.len()
                && t.iter().zip(&self.terms).all(|((i, c), (j, d))| i == j && d.is_integer() && d.to_integer() == BigInt::from(*c))
        })
    }

    /// The exponent `k` (mod p) with `self = ζ_p^k`, if any.
    pub fn p_root_exponent(&self) -> Option<u32> {
        let step = self.ctx.order() / self.ctx.p();
        self.root_exponent().filter(|k| k % step == 0).map(|k| k / step)
    }

    /// Floating-point image under ζ_N ↦ e^{2πi/N}, rounded to `digits` decimals.
    /// For reporting only.
    pub fn approx(&self, digits: u32) -> (f64, f64) {
        let n = self.ctx.order() as f64;
        let (mut re, mut im) = (0.0f64, 0.0f64);
        for (i, c) in &self.terms {
            let v = c.numer().to_f64().unwrap_or(f64::NAN) / c.denom().to_f64().unwrap_or(f64::NAN);
            let t = 2.0 * std::f64::consts::PI * (*i as f64) / n;
            re += v * t.cos();
            im += v * t.sin();
        }
        let scale = 10f64.powi(digits.min(15) as i32);
        let round = |x: f64| {
            let r = (x * scale).round() / scale;
            if r == 0.0 {
                0.0
            } else {
                r
            }
        };
        (round(re), round(im))
    }

    /// Re-expresses the element in Q(ζ_M) for a multiple M of N.
    pub fn embed(&self, target: &FieldContext) -> Result<Scalar, CycloError> {
        let (from, to) = (self.ctx.order(), target.order());
        if to % from != 0 {
            return Err(CycloError::NotSubfield { from, to });
        }
        let step = (to / from) as i64;
        let mut acc = Scalar::zero(target);
        for (i, c) in &self.terms {
            acc = acc.add_unchecked(&Scalar::root(target, *i as i64 * step).scale(c), false);
        }
        Ok(acc)
    }

    /// A square root of the prime `p` built from a quadratic Gauss sum, when it
    /// lies in the field.
    pub fn sqrt_of_p(ctx: &FieldContext) -> Option<Scalar> {
        let p = ctx.p();
        let n = ctx.order();
        let candidate = if p == 2 {
            if !n.is_multiple_of(8) {
                return None;
            }
            Scalar::root(ctx, (n / 8) as i64) + Scalar::root(ctx, -((n / 8) as i64))
        } else {
            let mut g = Scalar::zero(ctx);
            for a in 1..p {
                let chi = legendre(a, p);
                g = g + Scalar::p_root(ctx, a as i64).scale(&rat(chi));
            }
            if p % 4 == 1 {
                g
            } else {
                if !n.is_multiple_of(4) {
                    return None;
                }
                // g² = -p, so (−i·g)² = p
                -(g * Scalar::root(ctx, (n / 4) as i64))
            }
        };
        if candidate.mul_unchecked(&candidate) == Scalar::from_int(ctx, p as i64) {
            Some(candidate)
        } else {
            None
        }
    }
}

fn legendre(a: u32, p: u32) -> i64 {
    let mut r = 1u64;
    let (mut b, mut e) = (a as u64 % p as u64, (p as u64 - 1) / 2);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p as u64;
        }
        b = b * b % p as u64;
        e >>= 1;
    }
    if r == 1 {
        1
    } else {
        -1
    }
}

fn trim(mut a: Vec<Rational>) -> Vec<Rational> {
    while a.last().is_some_and(|c| c.is_zero()) {
        a.pop();
    }
    a
}

fn poly_divrem(a: &[Rational], b: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
    let b = trim(b.to_vec());
    let mut r = trim(a.to_vec());
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let lead = b.last().expect("nonzero divisor").clone();
    let mut q = vec![Rational::zero(); r.len() - b.len() + 1];
    while r.len() >= b.len() && !r.is_empty() {
        let shift = r.len() - b.len();
        let c = r.last().unwrap() / &lead;
        for (j, bj) in b.iter().enumerate() {
            r[shift + j] -= &c * bj;
        }
        q[shift] = c;
        r = trim(r);
    }
    (q, r)
}

fn poly_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(out)
}

fn poly_sub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] -= y;
    }
    trim(out)
}

/// `s` with `s·a ≡ 1 (mod m)`, padded to `deg m` coefficients. `a` must be
/// coprime to `m` (always true for nonzero `a` when `m` is irreducible).
fn poly_inverse_mod(a: &[Rational], m: &[Rational]) -> Vec<Rational> {
    let d = m.len() - 1;
    let (mut r0, mut r1) = (trim(m.to_vec()), trim(a.to_vec()));
    let (mut s0, mut s1): (Vec<Rational>, Vec<Rational>) = (Vec::new(), vec![Rational::one()]);
    while !r1.is_empty() {
        let (q, r) = poly_divrem(&r0, &r1);
        let s = poly_sub(&s0, &poly_mul(&q, &s1));
        r0 = std::mem::replace(&mut r1, r);
        s0 = std::mem::replace(&mut s1, s);
    }
    // r0 is a nonzero constant gcd
    let g = r0[0].clone();
    let (_, s) = poly_divrem(&s0, m);
    let mut out: Vec<Rational> = s.into_iter().map(|c| c / &g).collect();
    out.resize(d, Rational::zero());
    out
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, rhs: Scalar) -> Scalar {
        &self + &rhs
    }
}

impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, rhs: Scalar) -> Scalar {
        &self - &rhs
    }
}

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        &self * &rhs
    }
}

impl Div for Scalar {
    type Output = Scalar;
    fn div(self, rhs: Scalar) -> Scalar {
        &self / &rhs
    }
}

// The operator forms panic on a context mismatch or division by zero; use the
// `try_*` methods where either can happen.
impl<'a> Add<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        self.try_add(rhs).expect("scalar addition")
    }
}

impl<'a> Sub<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        self.try_sub(rhs).expect("scalar subtraction")
    }
}

impl<'a> Mul<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        self.try_mul(rhs).expect("scalar multiplication")
    }
}

impl<'a> Div<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn div(self, rhs: &Scalar) -> Scalar {
        self.try_div(rhs).expect("scalar division")
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar { ctx: self.ctx.clone(), terms: self.terms.iter().map(|(i, c)| (*i, -c.clone())).collect() }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        if let Some(k) = self.root_exponent().filter(|_| self.terms.len() > 1 || self.terms[0].0 != 0) {
            return write!(f, "z{}^{}", self.ctx.order(), k);
        }
        for (idx, (i, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if idx > 0 {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            } else if neg {
                write!(f, "-")?;
            }
            match (*i, mag.is_one()) {
                (0, _) => write!(f, "{mag}")?,
                (_, true) => write!(f, "z{}^{}", self.ctx.order(), i)?,
                (_, false) => write!(f, "{mag}*z{}^{}", self.ctx.order(), i)?,
            }
        }
        Ok(())
    }
}

/// Canonical string form of a rational: `"n"` or `"n/d"` in lowest terms.
pub fn rational_to_string(q: &Rational) -> String {
    q.to_string()
}

pub fn parse_rational(s: &str) -> Result<Rational, CycloError> {
    let bad = || CycloError::BadRational(s.to_string());
    let t = s.trim();
    if t.is_empty() {
        return Err(bad());
    }
    match t.split_once('/') {
        None => BigInt::from_str(t).map(Rational::from_integer).map_err(|_| bad()),
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Rational::new(n, d))
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScalarWire {
    order: u32,
    coeffs: Vec<String>,
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ScalarWire { order: self.ctx.order(), coeffs: self.coeffs().iter().map(rational_to_string).collect() }
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = ScalarWire::deserialize(deserializer)?;
        let ctx = FieldContext::from_order(wire.order).map_err(D::Error::custom)?;
        let coeffs = wire
            .coeffs
            .iter()
            .map(|s| parse_rational(s))
            .collect::<Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        Scalar::from_coeffs(&ctx, coeffs).map_err(D::Error::custom)
    }
}

/// Greatest common divisor helper reused by the integer-matrix code.
pub fn gcd(a: i64, b: i64) -> i64 {
    a.gcd(&b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(p: u32, n: u32) -> FieldContext {
        FieldContext::new(p, n).unwrap()
    }

    #[test]
    fn cyclotomic_polynomials() {
        assert_eq!(cyclotomic(4), vec![1, 0, 1]);
        assert_eq!(cyclotomic(16), vec![1, 0, 0, 0, 0, 0, 0, 0, 1]);
        assert_eq!(cyclotomic(9), vec![1, 0, 0, 1, 0, 0, 1]);
        assert_eq!(cyclotomic(36), vec![1, 0, 0, 0, 0, 0, -1, 0, 0, 0, 0, 0, 1]);
        assert_eq!(ctx(5, 100).degree(), 40);
    }

    #[test]
    fn root_wraps_modulo_order() {
        let c = ctx(5, 5);
        assert!(Scalar::root(&c, 5).is_one());
        assert_eq!(Scalar::root(&c, -1), Scalar::root(&c, 4));
    }

    #[test]
    fn cube_roots_multiply_to_one() {
        let c = ctx(3, 3);
        assert!((Scalar::root(&c, 1) * Scalar::root(&c, 2)).is_one());
    }

    #[test]
    fn gaussian_integer_product() {
        let c = ctx(2, 4);
        let i = Scalar::root(&c, 1);
        let one = Scalar::one(&c);
        assert_eq!((&one + &i) * (&one - &i), Scalar::from_int(&c, 2));
    }

    #[test]
    fn conj_inverts_roots() {
        let c = ctx(3, 36);
        for k in 0..36 {
            assert_eq!(Scalar::root(&c, k).conj(), Scalar::root(&c, 36 - k));
        }
    }

    #[test]
    fn sum_of_prime_roots_vanishes() {
        for p in [2u32, 3, 5, 7] {
            let c = ctx(p, p);
            let s = (0..p).fold(Scalar::zero(&c), |acc, j| acc + Scalar::root(&c, j as i64));
            assert!(s.is_zero(), "p = {p}");
        }
    }

    #[test]
    fn inverse_of_two() {
        let c = ctx(2, 16);
        let half = Scalar::from_int(&c, 2).inv().unwrap();
        assert_eq!(half, Scalar::from_rational(&c, Rational::new(1.into(), 2.into())));
        assert_eq!(Scalar::zero(&c).inv(), Err(CycloError::DivisionByZero));
    }

    #[test]
    fn general_inverse() {
        let c = ctx(3, 36);
        let a = Scalar::from_int(&c, 3) + Scalar::root(&c, 5) - Scalar::root(&c, 7).scale(&Rational::new(2.into(), 7.into()));
        assert!((&a * &a.inv().unwrap()).is_one());
    }

    #[test]
    fn root_orders() {
        let c = ctx(3, 9);
        assert_eq!(Scalar::one(&c).root_order(), Some(1));
        assert_eq!(Scalar::root(&c, 3).root_order(), Some(3));
        let half = Scalar::from_rational(&c, Rational::new(1.into(), 2.into()));
        assert_eq!(half.root_order(), None);
    }

    #[test]
    fn approximations() {
        let c4 = ctx(2, 4);
        assert_eq!(Scalar::one(&c4).approx(6), (1.0, 0.0));
        assert_eq!(Scalar::root(&c4, 1).approx(6), (0.0, 1.0));
        let c3 = ctx(3, 3);
        let (re, im) = Scalar::root(&c3, 1).approx(4);
        assert_eq!(re, -0.5);
        assert_eq!(im, 0.866);
    }

    #[test]
    fn square_roots_of_p_in_default_fields() {
        for p in [2u32, 3, 5, 7] {
            let c = FieldContext::with_default_order(p).unwrap();
            let s = Scalar::sqrt_of_p(&c).expect("sqrt p");
            assert_eq!(&s * &s, Scalar::from_int(&c, p as i64));
        }
        assert!(Scalar::sqrt_of_p(&ctx(3, 3)).is_none());
        assert!(Scalar::sqrt_of_p(&ctx(5, 5)).is_some());
    }

    #[test]
    fn order_shapes() {
        assert!(FieldContext::new(4, 16).is_err());
        assert!(FieldContext::new(3, 12).is_err());
        assert_eq!(FieldContext::from_order(16).unwrap().p(), 2);
        assert_eq!(FieldContext::from_order(36).unwrap().p(), 3);
        assert_eq!(FieldContext::from_order(25).unwrap().p(), 5);
        assert_eq!(FieldContext::from_order(7).unwrap().p(), 7);
        assert!(FieldContext::from_order(12).is_err());
    }

    #[test]
    fn context_mismatch_is_reported() {
        let a = Scalar::one(&ctx(2, 4));
        let b = Scalar::one(&ctx(2, 16));
        assert_eq!(a.try_add(&b), Err(CycloError::ContextMismatch { left: 4, right: 16 }));
    }

    #[test]
    fn embedding_preserves_roots() {
        let small = ctx(2, 4);
        let big = ctx(2, 16);
        assert_eq!(Scalar::root(&small, 1).embed(&big).unwrap(), Scalar::root(&big, 4));
        assert!(Scalar::root(&big, 1).embed(&small).is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = ctx(3, 9);
        let a = Scalar::root(&c, 4).scale(&Rational::new((-3).into(), 4.into())) + Scalar::from_int(&c, 2);
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, r#"{"order":9,"coeffs":["2","0","0","0","-3/4","0"]}"#);
        let b: Scalar = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
    }
}
