//! Exact arithmetic in finite fields `GF(p^{e·k})`.
//!
//! A [`FieldCtx`] describes the working field `GF(q^k)` with `q = p^e`. The
//! arithmetic Frobenius is `x ↦ x^q`, so its fixed field is the base field
//! `GF(q)`.
//!
//! Elements are stored as small integer codes: the code of
//! `c_0 + c_1 x + … + c_{d-1} x^{d-1}` (with `d = e·k`) is `Σ c_i p^i`.
//! Every operation is a table lookup, so the contexts are meant for
//! desk-scale fields only. The cap is [`MAX_FIELD_SIZE`] elements.
//!
//! Hot loops in other modules work on raw codes (`u16`) through the context
//! methods. [`FieldElem`] is the checked value type for API users. It carries
//! its context, and mixing contexts is a hard error.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Largest supported field size (number of elements).
pub const MAX_FIELD_SIZE: usize = 2187;

/// Raw element code inside a [`FieldCtx`].
pub type Code = u16;

/// Errors raised while building or using a field context.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    #[error("characteristic {0} is not an odd prime")]
    NotOddPrime(u32),
    #[error("extension degrees must be at least 1 (got e={e}, k={k})")]
    ZeroDegree { e: u32, k: u32 },
    #[error("field of size {0} exceeds the supported bound {MAX_FIELD_SIZE}")]
    TooLarge(u64),
    #[error("modulus must be monic of degree {expected} (got {got} coefficients)")]
    BadModulus { expected: usize, got: usize },
    #[error("modulus coefficient {0} is not reduced modulo p")]
    CoefficientRange(u32),
    #[error("supplied modulus is reducible over F_p")]
    Reducible,
    #[error("inverse of zero")]
    ZeroInverse,
    #[error("elements belong to different field contexts")]
    ContextMismatch,
    #[error("enumeration of {size} elements exceeds the bound {bound}")]
    EnumerationBound { size: usize, bound: usize },
}

/// How the defining polynomial is chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Modulus {
    /// Lexicographically smallest monic irreducible polynomial. Coefficient
    /// vectors `(c_0, …, c_{d-1})` are compared through their codes.
    Auto,
    /// Explicit coefficients, constant term first, including the leading 1.
    Explicit(Vec<u32>),
}

/// An immutable description of `GF(q^k)`, `q = p^e`, with all arithmetic
/// tables precomputed.
pub struct FieldCtx {
    p: u32,
    e: u32,
    k: u32,
    degree: u32,
    size: usize,
    modulus: Vec<u32>,
    add: Vec<Code>,
    neg: Vec<Code>,
    log: Vec<u32>,
    exp: Vec<Code>,
    inv: Vec<Code>,
    frob: Vec<Code>,
    base_field: Vec<Code>,
}

impl fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldCtx")
            .field("p", &self.p)
            .field("e", &self.e)
            .field("k", &self.k)
            .field("modulus", &self.modulus)
            .finish()
    }
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Polynomial helpers over `F_p`, coefficient vectors constant term first.
mod poly {
    pub fn trim(mut a: Vec<u32>) -> Vec<u32> {
        while a.len() > 1 && *a.last().unwrap() == 0 {
            a.pop();
        }
        a
    }

    pub fn rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
        let dm = m.len() - 1;
        let mut r = a.to_vec();
        let lead_inv = super::inv_mod(m[dm], p);
        for i in (dm..r.len()).rev() {
            let c = r[i] * lead_inv % p;
            if c != 0 {
                for j in 0..=dm {
                    let idx = i - dm + j;
                    r[idx] = (r[idx] + p - c * m[j] % p) % p;
                }
            }
        }
        r.truncate(dm);
        if r.is_empty() {
            r.push(0);
        }
        trim(r)
    }

    pub fn is_zero(a: &[u32]) -> bool {
        a.iter().all(|&c| c == 0)
    }
}

fn inv_mod(a: u32, p: u32) -> u32 {
    let mut r = 1u64;
    let mut b = a as u64 % p as u64;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p as u64;
        }
        b = b * b % p as u64;
        e >>= 1;
    }
    r as u32
}

/// Exhaustive irreducibility test: no monic factor of degree ≤ deg/2.
fn is_irreducible(m: &[u32], p: u32) -> bool {
    let d = m.len() - 1;
    if d <= 1 {
        return d == 1;
    }
    for fd in 1..=d / 2 {
        let count = (p as u64).pow(fd as u32);
        for code in 0..count {
            let mut f = Vec::with_capacity(fd + 1);
            let mut c = code;
            for _ in 0..fd {
                f.push((c % p as u64) as u32);
                c /= p as u64;
            }
            f.push(1);
            if poly::is_zero(&poly::rem(m, &f, p)) {
                return false;
            }
        }
    }
    true
}

fn code_to_coeffs(code: usize, p: u32, d: u32) -> Vec<u32> {
    let mut c = code;
    (0..d)
        .map(|_| {
            let v = (c % p as usize) as u32;
            c /= p as usize;
            v
        })
        .collect()
}

fn coeffs_to_code(c: &[u32], p: u32) -> usize {
    c.iter().rev().fold(0usize, |acc, &x| acc * p as usize + x as usize)
}

fn poly_mulmod(a: &[u32], b: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let mut prod = vec![0u32; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    let mut r = poly::rem(&prod, m, p);
    r.resize(m.len() - 1, 0);
    r
}

impl FieldCtx {
    /// Builds `GF(q^k)` with `q = p^e`.
    ///
    /// The modulus must be monic of degree `e·k` and irreducible over `F_p`.
    /// `Modulus::Auto` picks the lexicographically smallest one. For degree 1
    /// the auto modulus is `x`, so the prime field is `F_p[x]/(x)`.
    pub fn new(p: u32, e: u32, k: u32, modulus: Modulus) -> Result<Arc<Self>, GfError> {
        if p < 3 || !is_prime(p) {
            return Err(GfError::NotOddPrime(p));
        }
        if e == 0 || k == 0 {
            return Err(GfError::ZeroDegree { e, k });
        }
        let degree = e * k;
        let size64 = (p as u64).checked_pow(degree).unwrap_or(u64::MAX);
        if size64 > MAX_FIELD_SIZE as u64 {
            return Err(GfError::TooLarge(size64));
        }
        let size = size64 as usize;
        let d = degree as usize;
        let modulus = match modulus {
            Modulus::Explicit(m) => {
                if m.len() != d + 1 || m[d] != 1 {
                    return Err(GfError::BadModulus { expected: d, got: m.len() });
                }
                if let Some(&c) = m.iter().find(|&&c| c >= p) {
                    return Err(GfError::CoefficientRange(c));
                }
                if !is_irreducible(&m, p) {
                    return Err(GfError::Reducible);
                }
                m
            }
            Modulus::Auto => {
                let mut found = None;
                for code in 0..size {
                    let mut m = code_to_coeffs(code, p, degree);
                    m.push(1);
                    if is_irreducible(&m, p) {
                        found = Some(m);
                        break;
                    }
                }
                found.expect("irreducible polynomials exist in every degree")
            }
        };

        let coeffs: Vec<Vec<u32>> = (0..size).map(|c| code_to_coeffs(c, p, degree)).collect();
        let mut add = vec![0 as Code; size * size];
        for a in 0..size {
            for b in 0..size {
                let s: Vec<u32> = coeffs[a]
                    .iter()
                    .zip(&coeffs[b])
                    .map(|(x, y)| (x + y) % p)
                    .collect();
                add[a * size + b] = coeffs_to_code(&s, p) as Code;
            }
        }
        let neg: Vec<Code> = (0..size)
            .map(|a| {
                let s: Vec<u32> = coeffs[a].iter().map(|x| (p - x) % p).collect();
                coeffs_to_code(&s, p) as Code
            })
            .collect();

        // Primitive element search: smallest code whose powers exhaust the
        // multiplicative group.
        let order = size - 1;
        let mut exp = Vec::new();
        for g in 1..size {
            let mut pows = Vec::with_capacity(order);
            let mut cur = code_to_coeffs(1, p, degree);
            let gc = &coeffs[g];
            let mut ok = true;
            for i in 0..order {
                let c = coeffs_to_code(&cur, p);
                if i > 0 && c == 1 {
                    ok = false;
                    break;
                }
                pows.push(c as Code);
                cur = poly_mulmod(&cur, gc, &modulus, p);
            }
            if ok {
                exp = pows;
                break;
            }
        }
        let mut log = vec![u32::MAX; size];
        for (i, &c) in exp.iter().enumerate() {
            log[c as usize] = i as u32;
        }
        let mut exp2 = exp.clone();
        exp2.extend_from_slice(&exp);
        let mut ctx = FieldCtx {
            p,
            e,
            k,
            degree,
            size,
            modulus,
            add,
            neg,
            log,
            exp: exp2,
            inv: Vec::new(),
            frob: Vec::new(),
            base_field: Vec::new(),
        };
        ctx.inv = (0..size)
            .map(|a| if a == 0 { 0 } else { ctx.pow(a as Code, (order - 1) as u64) })
            .collect();
        let q = (p as u64).pow(e);
        ctx.frob = (0..size).map(|a| ctx.pow(a as Code, q)).collect();
        ctx.base_field = (0..size)
            .filter(|&a| ctx.frob[a] as usize == a)
            .map(|a| a as Code)
            .collect();
        Ok(Arc::new(ctx))
    }

    /// Convenience constructor with the automatic modulus.
    pub fn auto(p: u32, e: u32, k: u32) -> Result<Arc<Self>, GfError> {
        Self::new(p, e, k, Modulus::Auto)
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn e(&self) -> u32 {
        self.e
    }
    pub fn k(&self) -> u32 {
        self.k
    }
    /// `q = p^e`, the size of the Frobenius-fixed base field.
    pub fn q(&self) -> u64 {
        (self.p as u64).pow(self.e)
    }
    /// Degree `e·k` of the working field over `F_p`.
    pub fn degree(&self) -> u32 {
        self.degree
    }
    /// Number of elements `q^k`.
    pub fn size(&self) -> usize {
        self.size
    }
    /// Defining polynomial, constant term first.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    #[inline]
    pub fn zero(&self) -> Code {
        0
    }
    #[inline]
    pub fn one(&self) -> Code {
        1
    }
    #[inline]
    pub fn add(&self, a: Code, b: Code) -> Code {
        self.add[a as usize * self.size + b as usize]
    }
    #[inline]
    pub fn neg(&self, a: Code) -> Code {
        self.neg[a as usize]
    }
    #[inline]
    pub fn sub(&self, a: Code, b: Code) -> Code {
        self.add(a, self.neg(b))
    }
    #[inline]
    pub fn mul(&self, a: Code, b: Code) -> Code {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[(self.log[a as usize] + self.log[b as usize]) as usize]
    }
    /// Multiplicative inverse; `None` for zero.
    #[inline]
    pub fn inv(&self, a: Code) -> Option<Code> {
        if a == 0 {
            None
        } else {
            Some(self.inv[a as usize])
        }
    }
    /// Inverse of a value known to be non-zero (internal hot paths).
    #[inline]
    pub fn inv_nz(&self, a: Code) -> Code {
        debug_assert!(a != 0);
        self.inv[a as usize]
    }
    /// The arithmetic Frobenius `a ↦ a^q`.
    #[inline]
    pub fn frob(&self, a: Code) -> Code {
        self.frob[a as usize]
    }
    /// `a^n` by square-and-multiply through the log tables.
    pub fn pow(&self, a: Code, n: u64) -> Code {
        if n == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let order = (self.size - 1) as u64;
        let l = (self.log[a as usize] as u64 * (n % order)) % order;
        self.exp[l as usize]
    }
    /// Embeds an integer into the prime field.
    pub fn from_int(&self, v: i64) -> Code {
        v.rem_euclid(self.p as i64) as Code
    }
    /// Reads a prime-field element back as an integer in `0..p`, if it is one.
    pub fn to_int(&self, a: Code) -> Option<u32> {
        if (a as u32) < self.p {
            Some(a as u32)
        } else {
            None
        }
    }
    /// `true` when `a` lies in the Frobenius-fixed subfield `GF(q)`.
    pub fn in_base_field(&self, a: Code) -> bool {
        self.frob(a) == a
    }
    /// The elements of `GF(q)` inside the working field, in code order.
    pub fn base_field(&self) -> &[Code] {
        &self.base_field
    }
    /// The primitive element used for the log tables.
    pub fn generator(&self) -> Code {
        self.exp[1]
    }
    /// Coefficient vector of `a` over `F_p`, constant term first.
    pub fn coeffs(&self, a: Code) -> Vec<u32> {
        code_to_coeffs(a as usize, self.p, self.degree)
    }
    /// Element with the given coefficient vector (constant term first).
    pub fn from_coeffs(&self, c: &[u32]) -> Result<Code, GfError> {
        if c.len() != self.degree as usize {
            return Err(GfError::BadModulus { expected: self.degree as usize, got: c.len() });
        }
        if let Some(&x) = c.iter().find(|&&x| x >= self.p) {
            return Err(GfError::CoefficientRange(x));
        }
        Ok(coeffs_to_code(c, self.p) as Code)
    }
    /// Finds a square root if one exists.
    pub fn sqrt(&self, a: Code) -> Option<Code> {
        (0..self.size as Code).find(|&x| self.mul(x, x) == a)
    }
    /// `true` when `a` is a non-zero square.
    pub fn is_square(&self, a: Code) -> bool {
        a != 0 && self.log[a as usize].is_multiple_of(2)
    }

    /// All elements, each exactly once, in code order (which is
    /// lexicographic order on reversed coefficient vectors).
    pub fn enumerate(self: &Arc<Self>, bound: usize) -> Result<Vec<FieldElem>, GfError> {
        if self.size > bound {
            return Err(GfError::EnumerationBound { size: self.size, bound });
        }
        Ok((0..self.size)
            .map(|c| FieldElem { ctx: Arc::clone(self), v: c as Code })
            .collect())
    }

    /// Wraps a raw code as a checked element.
    pub fn elem(self: &Arc<Self>, v: Code) -> FieldElem {
        assert!((v as usize) < self.size, "code {v} out of range");
        FieldElem { ctx: Arc::clone(self), v }
    }
}

/// A field element bound to its context.
#[derive(Clone)]
pub struct FieldElem {
    ctx: Arc<FieldCtx>,
    v: Code,
}

impl fmt::Debug for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldElem({:?})", self.ctx.coeffs(self.v))
    }
}

impl PartialEq for FieldElem {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.ctx, &other.ctx) && self.v == other.v
    }
}
impl Eq for FieldElem {}

impl FieldElem {
    pub fn ctx(&self) -> &Arc<FieldCtx> {
        &self.ctx
    }
    pub fn code(&self) -> Code {
        self.v
    }
    pub fn is_zero(&self) -> bool {
        self.v == 0
    }
    /// Coefficient vector over `F_p`, constant term first.
    pub fn coeffs(&self) -> Vec<u32> {
        self.ctx.coeffs(self.v)
    }
    fn same(&self, o: &Self) -> Result<(), GfError> {
        if Arc::ptr_eq(&self.ctx, &o.ctx) {
            Ok(())
        } else {
            Err(GfError::ContextMismatch)
        }
    }
    fn with(&self, v: Code) -> Self {
        FieldElem { ctx: Arc::clone(&self.ctx), v }
    }
    pub fn checked_add(&self, o: &Self) -> Result<Self, GfError> {
        self.same(o)?;
        Ok(self.with(self.ctx.add(self.v, o.v)))
    }
    pub fn checked_sub(&self, o: &Self) -> Result<Self, GfError> {
        self.same(o)?;
        Ok(self.with(self.ctx.sub(self.v, o.v)))
    }
    pub fn checked_mul(&self, o: &Self) -> Result<Self, GfError> {
        self.same(o)?;
        Ok(self.with(self.ctx.mul(self.v, o.v)))
    }
    /// Multiplicative inverse; errors on zero.
    pub fn inv(&self) -> Result<Self, GfError> {
        self.ctx.inv(self.v).map(|v| self.with(v)).ok_or(GfError::ZeroInverse)
    }
    /// `a^q`.
    pub fn frobenius(&self) -> Self {
        self.with(self.ctx.frob(self.v))
    }
    pub fn pow(&self, n: u64) -> Self {
        self.with(self.ctx.pow(self.v, n))
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $checked:ident) => {
        impl std::ops::$tr for &FieldElem {
            type Output = FieldElem;
            fn $m(self, o: &FieldElem) -> FieldElem {
                self.$checked(o).expect("cross-context field arithmetic")
            }
        }
        impl std::ops::$tr for FieldElem {
            type Output = FieldElem;
            fn $m(self, o: FieldElem) -> FieldElem {
                (&self).$checked(&o).expect("cross-context field arithmetic")
            }
        }
    };
}
binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);

impl std::ops::Neg for &FieldElem {
    type Output = FieldElem;
    fn neg(self) -> FieldElem {
        self.with(self.ctx.neg(self.v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_field_auto_uses_x() {
        let f = FieldCtx::auto(5, 1, 1).unwrap();
        assert_eq!(f.modulus(), &[0, 1]);
        assert_eq!(f.size(), 5);
    }

    #[test]
    fn gf9_auto_is_x2_plus_1() {
        let f = FieldCtx::auto(3, 1, 2).unwrap();
        assert_eq!(f.modulus(), &[1, 0, 1]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(FieldCtx::auto(2, 1, 1).unwrap_err(), GfError::NotOddPrime(2));
        assert_eq!(FieldCtx::auto(9, 1, 1).unwrap_err(), GfError::NotOddPrime(9));
        assert!(matches!(FieldCtx::auto(3, 0, 1), Err(GfError::ZeroDegree { .. })));
        // x^2 - 1 = (x - 1)(x + 1)
        assert_eq!(
            FieldCtx::new(3, 1, 2, Modulus::Explicit(vec![2, 0, 1])).unwrap_err(),
            GfError::Reducible
        );
    }

    #[test]
    fn inverse_of_two_mod_five() {
        let f = FieldCtx::auto(5, 1, 1).unwrap();
        let two = f.elem(2);
        assert_eq!(two.inv().unwrap().code(), 3);
        assert_eq!(f.elem(1).inv().unwrap().code(), 1);
        assert_eq!(f.elem(0).inv().unwrap_err(), GfError::ZeroInverse);
    }

    #[test]
    fn base_field_of_gf81_over_gf9() {
        let f = FieldCtx::auto(3, 2, 2).unwrap();
        assert_eq!(f.q(), 9);
        assert_eq!(f.base_field().len(), 9);
    }
}
