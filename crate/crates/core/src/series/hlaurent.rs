//! Truncated Laurent polynomials in hbar.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{fmt_q, factorial, Q};

/// Inclusive range of retained hbar exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HWindow {
    pub lo: i32,
    pub hi: i32,
}

impl HWindow {
    pub const fn new(lo: i32, hi: i32) -> Self {
        Self { lo, hi }
    }

    pub fn meet(self, other: HWindow) -> HWindow {
        HWindow::new(self.lo.min(other.lo), self.hi.min(other.hi))
    }
}

impl Default for HWindow {
    fn default() -> Self {
        HWindow::new(-1, 6)
    }
}

/// A Laurent polynomial in hbar, truncated above `window.hi`.
///
/// Products that would produce an exponent below `window.lo` are reported as
/// [`Error::WindowUnderflow`] instead of being silently kept.
#[derive(Clone, PartialEq, Eq)]
pub struct HLaurent {
    coeffs: BTreeMap<i32, Q>,
    window: HWindow,
}

impl HLaurent {
    pub fn zero(window: HWindow) -> Self {
        Self { coeffs: BTreeMap::new(), window }
    }

    pub fn one(window: HWindow) -> Self {
        Self::constant(Q::one(), window)
    }

    pub fn constant(c: Q, window: HWindow) -> Self {
        Self::monomial(c, 0, window)
    }

    pub fn monomial(c: Q, exponent: i32, window: HWindow) -> Self {
        let mut out = Self::zero(window);
        out.add_term(exponent, c);
        out
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (i32, Q)>, window: HWindow) -> Self {
        let mut out = Self::zero(window);
        for (e, c) in terms {
            out.add_term(e, c);
        }
        out
    }

    pub fn window(&self) -> HWindow {
        self.window
    }

    /// Adds `c * hbar^e`; terms above the window are dropped.
    pub fn add_term(&mut self, e: i32, c: Q) {
        if e > self.window.hi || c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(e).or_insert_with(Q::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&e);
        }
    }

    pub fn coeff(&self, e: i32) -> Q {
        self.coeffs.get(&e).cloned().unwrap_or_else(Q::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (i32, &Q)> {
        self.coeffs.iter().map(|(e, c)| (*e, c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn lowest_exponent(&self) -> Option<i32> {
        self.coeffs.keys().next().copied()
    }

    pub fn highest_exponent(&self) -> Option<i32> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.keys().all(|&e| e == 0)
    }

    pub fn with_window(&self, window: HWindow) -> Self {
        Self::from_terms(self.coeffs.iter().map(|(e, c)| (*e, c.clone())), window)
    }

    pub fn truncate(&self, hi: i32) -> Self {
        let w = HWindow::new(self.window.lo, hi.min(self.window.hi));
        self.with_window(w)
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero(self.window);
        }
        Self {
            coeffs: self.coeffs.iter().map(|(e, x)| (*e, x * c)).collect(),
            window: self.window,
        }
    }

    /// Multiplies by `hbar^k`.
    pub fn shift(&self, k: i32) -> Result<Self> {
        let mut out = Self::zero(self.window);
        for (e, c) in &self.coeffs {
            let ne = e + k;
            if ne < self.window.lo {
                return Err(Error::WindowUnderflow { exponent: ne, floor: self.window.lo });
            }
            out.add_term(ne, c.clone());
        }
        Ok(out)
    }

    /// Replaces hbar by `gamma * hbar`.
    pub fn rescale_hbar(&self, gamma: &Q) -> Self {
        Self::from_terms(
            self.coeffs.iter().map(|(e, c)| (*e, c * crate::rational::pow_q(gamma, *e))),
            self.window,
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.with_window(self.window.meet(other.window));
        for (e, c) in &other.coeffs {
            out.add_term(*e, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.with_window(self.window.meet(other.window));
        for (e, c) in &other.coeffs {
            out.add_term(*e, -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Q::one())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let window = self.window.meet(other.window);
        let mut out = Self::zero(window);
        for (ea, ca) in &self.coeffs {
            for (eb, cb) in &other.coeffs {
                let e = ea + eb;
                if e > window.hi {
                    break;
                }
                if e < window.lo {
                    return Err(Error::WindowUnderflow { exponent: e, floor: window.lo });
                }
                out.add_term(e, ca * cb);
            }
        }
        Ok(out)
    }

    /// Truncated exponential; the argument must only carry positive powers of hbar.
    pub fn exp(&self) -> Result<Self> {
        match self.lowest_exponent() {
            None => return Ok(Self::one(self.window)),
            Some(e) if e < 1 => return Err(Error::NonzeroConstant),
            _ => {}
        }
        let hi = self.window.hi.max(0);
        let mut out = Self::one(self.window);
        let mut power = Self::one(self.window);
        for k in 1..=hi as u32 {
            power = power.mul(self)?;
            if power.is_zero() {
                break;
            }
            out = out.add(&power.scale(&factorial(k).recip()));
        }
        Ok(out)
    }

    /// Multiplicative inverse of a series with nonzero constant term and no negative powers.
    pub fn inv(&self) -> Result<Self> {
        let c0 = self.coeff(0);
        if c0.is_zero() || self.lowest_exponent().is_some_and(|e| e < 0) {
            return Err(Error::NotInvertible);
        }
        let hi = self.window.hi.max(0);
        let mut out = vec![Q::zero(); hi as usize + 1];
        let inv0 = c0.recip();
        for n in 0..=hi as usize {
            let mut acc = if n == 0 { Q::one() } else { Q::zero() };
            for k in 1..=n {
                let a = self.coeff(k as i32);
                if !a.is_zero() {
                    acc -= a * &out[n - k];
                }
            }
            out[n] = acc * &inv0;
        }
        Ok(Self::from_terms(out.into_iter().enumerate().map(|(e, c)| (e as i32, c)), self.window))
    }
}

impl fmt::Debug for HLaurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for HLaurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> =
            self.coeffs.iter().map(|(e, c)| format!("{}*h^{}", fmt_q(c), e)).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    const W: HWindow = HWindow::new(-2, 4);

    #[test]
    fn product_truncates_above_window() {
        let a = HLaurent::from_terms([(1, q(1, 1)), (3, q(2, 1))], W);
        let p = a.mul(&a).unwrap();
        assert_eq!(p.coeff(2), q(1, 1));
        assert_eq!(p.coeff(4), q(4, 1));
        assert_eq!(p.coeff(6), q(0, 1));
    }

    #[test]
    fn product_below_floor_is_an_error() {
        let a = HLaurent::monomial(q(1, 1), -2, W);
        assert!(matches!(a.mul(&a), Err(Error::WindowUnderflow { .. })));
    }

    #[test]
    fn exp_of_minus_hbar() {
        let a = HLaurent::monomial(q(-1, 1), 1, W);
        let e = a.exp().unwrap();
        assert_eq!(e.coeff(3), q(-1, 6));
        assert_eq!(e.coeff(4), q(1, 24));
        let inv = e.inv().unwrap();
        assert_eq!(inv.coeff(2), q(1, 2));
    }
}
