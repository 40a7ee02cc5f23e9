//! Exact univariate polynomials and rational functions over the rationals.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{fmt_q, qi, Q};
use crate::series::ZSeries;

/// Dense polynomial, coefficients in ascending degree, no trailing zeros.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Poly {
    coeffs: Vec<Q>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Q>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_ints(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&x| qi(x)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        Self::new(vec![c])
    }

    /// `z - a`.
    pub fn linear_root(a: &Q) -> Self {
        Self::new(vec![-a.clone(), Q::one()])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports `None`.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, k: usize) -> Q {
        self.coeffs.get(k).cloned().unwrap_or_else(Q::zero)
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    pub fn leading(&self) -> Q {
        self.coeffs.last().cloned().unwrap_or_else(Q::zero)
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        Self::new((0..n).map(|k| self.coeff(k) + o.coeff(k)).collect())
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&-Q::one()))
    }

    pub fn scale(&self, c: &Q) -> Self {
        Self::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let mut out = vec![Q::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::one(), |acc, _| acc.mul(self))
    }

    pub fn derivative(&self) -> Self {
        Self::new(self.coeffs.iter().enumerate().skip(1).map(|(k, c)| c * qi(k as i64)).collect())
    }

    pub fn eval(&self, x: &Q) -> Q {
        self.coeffs.iter().rev().fold(Q::zero(), |acc, c| acc * x + c)
    }

    /// Euclidean division `(quotient, remainder)`.
    pub fn div_rem(&self, d: &Self) -> Result<(Self, Self)> {
        let dd = d.degree().ok_or(Error::NotInvertible)?;
        let lead = d.leading();
        let mut rem = self.coeffs.clone();
        let mut quo = vec![Q::zero(); self.coeffs.len().saturating_sub(dd).max(1)];
        while rem.len() > dd && !rem.is_empty() {
            let k = rem.len() - 1 - dd;
            let c = rem.last().unwrap() / &lead;
            for (j, x) in d.coeffs.iter().enumerate() {
                rem[k + j] -= &c * x;
            }
            quo[k] = c;
            rem.pop();
            while rem.last().is_some_and(Zero::is_zero) {
                rem.pop();
            }
        }
        Ok((Self::new(quo), Self::new(rem)))
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        self.scale(&self.leading().recip())
    }

    pub fn gcd(&self, o: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b).expect("nonzero divisor");
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Taylor coefficients at `a`, i.e. the polynomial in `e` equal to `self(a + e)`.
    pub fn shift(&self, a: &Q) -> Self {
        let mut out = Self::zero();
        let base = Self::new(vec![a.clone(), Q::one()]);
        for c in self.coeffs.iter().rev() {
            out = out.mul(&base).add(&Self::constant(c.clone()));
        }
        out
    }

    /// Multiplicity of `a` as a root.
    pub fn root_multiplicity(&self, a: &Q) -> usize {
        if self.is_zero() {
            return usize::MAX;
        }
        self.shift(a).coeffs.iter().take_while(|c| c.is_zero()).count()
    }

    /// All rational roots with multiplicity, sorted ascending.
    pub fn rational_roots(&self) -> Vec<(Q, usize)> {
        let Some(deg) = self.degree() else { return Vec::new() };
        if deg == 0 {
            return Vec::new();
        }
        let mut out = Vec::new();
        let zero_mult = self.coeffs.iter().take_while(|c| c.is_zero()).count();
        if zero_mult > 0 {
            out.push((Q::zero(), zero_mult));
        }
        let reduced: Vec<Q> = self.coeffs[zero_mult..].to_vec();
        if reduced.len() > 1 {
            let ints = integer_coeffs(&reduced);
            let a0 = ints[0].abs();
            let an = ints.last().unwrap().abs();
            let p = Self::new(reduced);
            for num in divisors(&a0) {
                for den in divisors(&an) {
                    for sign in [1i64, -1] {
                        let r = Q::new(BigInt::from(sign) * &num, den.clone());
                        if out.iter().any(|(x, _)| *x == r) {
                            continue;
                        }
                        if p.eval(&r).is_zero() {
                            out.push((r.clone(), p.root_multiplicity(&r)));
                        }
                    }
                }
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    pub fn to_zseries(&self, order: usize) -> ZSeries {
        ZSeries::from_coeffs(self.coeffs.iter().take(order + 1).cloned().collect(), order)
    }
}

fn integer_coeffs(c: &[Q]) -> Vec<BigInt> {
    let l = c.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    c.iter().map(|x| (x * Q::from_integer(l.clone())).to_integer()).collect()
}

fn divisors(n: &BigInt) -> Vec<BigInt> {
    let mut out = Vec::new();
    let mut d = BigInt::one();
    while &d * &d <= *n {
        if (n % &d).is_zero() {
            out.push(d.clone());
            let e = n / &d;
            if e != d {
                out.push(e);
            }
        }
        d += 1;
    }
    out
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> =
            self.coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(k, c)| format!("{}*z^{k}", fmt_q(c))).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Point on the projective line: a rational number or infinity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Point {
    Finite(Q),
    Infinity,
}

/// Reduced fraction `num/den` with monic denominator.
#[derive(Clone, PartialEq, Eq)]
pub struct RatFn {
    num: Poly,
    den: Poly,
}

impl RatFn {
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::NotInvertible);
        }
        if num.is_zero() {
            return Ok(Self { num, den: Poly::one() });
        }
        let g = num.gcd(&den);
        let (n, _) = num.div_rem(&g)?;
        let (d, _) = den.div_rem(&g)?;
        let lead = d.leading();
        Ok(Self { num: n.scale(&lead.recip()), den: d.monic() })
    }

    pub fn poly(p: Poly) -> Self {
        Self { num: p, den: Poly::one() }
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.num.mul(&o.den).add(&o.num.mul(&self.den)), self.den.mul(&o.den)).expect("nonzero den")
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&-Q::one()))
    }

    pub fn scale(&self, c: &Q) -> Self {
        Self::new(self.num.scale(c), self.den.clone()).expect("nonzero den")
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self::new(self.num.mul(&o.num), self.den.mul(&o.den)).expect("nonzero den")
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        Self::new(self.num.mul(&o.den), self.den.mul(&o.num))
    }

    pub fn derivative(&self) -> Self {
        let n = self.num.derivative().mul(&self.den).sub(&self.num.mul(&self.den.derivative()));
        Self::new(n, self.den.mul(&self.den)).expect("nonzero den")
    }

    pub fn eval(&self, x: &Q) -> Result<Q> {
        let d = self.den.eval(x);
        if d.is_zero() {
            return Err(Error::NotInvertible);
        }
        Ok(self.num.eval(x) / d)
    }

    /// Laurent expansion at a finite point: `(v, c)` with `self(a+e) = e^v sum_k c_k e^k`.
    pub fn expand_at(&self, a: &Q, order: usize) -> Result<(i64, ZSeries)> {
        let num = self.num.shift(a);
        let den = self.den.shift(a);
        let vn = num.coeffs.iter().take_while(|c| c.is_zero()).count();
        let vd = den.coeffs.iter().take_while(|c| c.is_zero()).count();
        let ns = ZSeries::from_coeffs(num.coeffs.iter().skip(vn).cloned().collect(), order);
        let ds = ZSeries::from_coeffs(den.coeffs.iter().skip(vd).cloned().collect(), order);
        Ok((vn as i64 - vd as i64, ns.div(&ds)?))
    }

    /// Residue of `self(z) dz` at the given point.
    pub fn residue(&self, at: &Point) -> Result<Q> {
        match at {
            Point::Finite(a) => {
                let (v, _) = self.expand_at(a, 0)?;
                if v >= 0 {
                    return Ok(Q::zero());
                }
                let k = (-v - 1) as usize;
                Ok(self.expand_at(a, k)?.1.coeff(k))
            }
            Point::Infinity => {
                // z = 1/t, dz = -dt/t^2
                let t2 = RatFn::new(Poly::one(), Poly::new(vec![Q::zero(), Q::zero(), Q::one()]))?;
                self.flip().mul(&t2).scale(&-Q::one()).residue(&Point::Finite(Q::zero()))
            }
        }
    }

    /// `self(1/t)` as a rational function of `t`.
    pub fn flip(&self) -> Self {
        let n = self.num.degree().unwrap_or(0);
        let d = self.den.degree().unwrap_or(0);
        let m = n.max(d);
        let rev = |p: &Poly| {
            let mut c = vec![Q::zero(); m + 1];
            for (k, x) in p.coeffs.iter().enumerate() {
                c[m - k] = x.clone();
            }
            Poly::new(c)
        };
        Self::new(rev(&self.num), rev(&self.den)).expect("nonzero den")
    }

    /// Finite poles with their orders, ascending; irrational poles are reported as an error.
    pub fn finite_poles(&self) -> Result<Vec<(Q, usize)>> {
        let roots = self.den.rational_roots();
        let found: usize = roots.iter().map(|r| r.1).sum();
        if Some(found) != self.den.degree() {
            return Err(Error::IrrationalPoint(format!("denominator {:?}", self.den)));
        }
        Ok(roots)
    }

    /// Order of vanishing at infinity of `self(z) dz` (negative for poles).
    pub fn order_at_infinity_differential(&self) -> i64 {
        let n = self.num.degree().map_or(i64::MAX / 4, |d| d as i64);
        let d = self.den.degree().unwrap_or(0) as i64;
        d - n - 2
    }
}

impl fmt::Debug for RatFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}) / ({:?})", self.num, self.den)
    }
}
