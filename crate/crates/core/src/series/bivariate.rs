//! Truncated power series in two variables `z1, z2`, cut at total degree `N`.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::rational::{fmt_q, qi, Q};
use crate::series::ZSeries;

#[derive(Clone, PartialEq, Eq)]
pub struct BiSeries {
    coeffs: BTreeMap<(u32, u32), Q>,
    order: u32,
}

impl BiSeries {
    pub fn zero(order: u32) -> Self {
        Self { coeffs: BTreeMap::new(), order }
    }

    pub fn constant(c: Q, order: u32) -> Self {
        let mut out = Self::zero(order);
        out.add_term(0, 0, c);
        out
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn add_term(&mut self, i: u32, j: u32, c: Q) {
        if i + j > self.order || c.is_zero() {
            return;
        }
        let e = self.coeffs.entry((i, j)).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.coeffs.remove(&(i, j));
        }
    }

    pub fn coeff(&self, i: u32, j: u32) -> Q {
        self.coeffs.get(&(i, j)).cloned().unwrap_or_else(Q::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &Q)> {
        self.coeffs.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn truncate(&self, order: u32) -> Self {
        let mut out = Self::zero(order.min(self.order));
        for ((i, j), c) in &self.coeffs {
            out.add_term(*i, *j, c.clone());
        }
        out
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.truncate(o.order);
        for ((i, j), c) in &o.coeffs {
            out.add_term(*i, *j, c.clone());
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&qi(-1)))
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut out = Self::zero(self.order);
        for ((i, j), x) in &self.coeffs {
            out.add_term(*i, *j, x * c);
        }
        out
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero(self.order.min(o.order));
        for ((i, j), a) in &self.coeffs {
            for ((k, l), b) in &o.coeffs {
                out.add_term(i + k, j + l, a * b);
            }
        }
        out
    }

    /// `log(1 + self)`; the constant term must vanish.
    pub fn log1p(&self) -> Result<Self> {
        if !self.coeff(0, 0).is_zero() {
            return Err(Error::NonzeroConstant);
        }
        let mut out = Self::zero(self.order);
        let mut power = Self::constant(qi(1), self.order);
        for k in 1..=self.order as i64 {
            power = power.mul(self);
            if power.is_zero() {
                break;
            }
            let sign = if k % 2 == 1 { qi(1) } else { qi(-1) };
            out = out.add(&power.scale(&(sign / qi(k))));
        }
        Ok(out)
    }

    /// `f(z1) g(z2)`.
    pub fn outer(f: &ZSeries, g: &ZSeries, order: u32) -> Self {
        let mut out = Self::zero(order);
        for (i, a) in f.coeffs().iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in g.coeffs().iter().enumerate() {
                out.add_term(i as u32, j as u32, a * b);
            }
        }
        out
    }

    /// Substitutes `z_i -> f(z_i)` in both slots; `f(0)` must vanish.
    pub fn compose(&self, f: &ZSeries) -> Result<Self> {
        if !f.coeff(0).is_zero() {
            return Err(Error::NonzeroConstant);
        }
        let n = self.order as usize;
        let f = f.truncate(n);
        let mut powers = vec![ZSeries::one(n)];
        for k in 1..=n {
            powers.push(powers[k - 1].mul(&f));
        }
        let mut out = Self::zero(self.order);
        for ((i, j), c) in &self.coeffs {
            out = out.add(&Self::outer(&powers[*i as usize], &powers[*j as usize], self.order).scale(c));
        }
        Ok(out)
    }

    pub fn swap(&self) -> Self {
        let mut out = Self::zero(self.order);
        for ((i, j), c) in &self.coeffs {
            out.add_term(*j, *i, c.clone());
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        self.swap() == *self
    }

    /// Coefficients of `d1 d2 self`: entry `(i, j)` multiplies `z1^{i-1} z2^{j-1} dz1 dz2`.
    pub fn d1d2(&self) -> Self {
        let mut out = Self::zero(self.order);
        for ((i, j), c) in &self.coeffs {
            if *i > 0 && *j > 0 {
                out.add_term(*i, *j, c * qi(*i as i64) * qi(*j as i64));
            }
        }
        out
    }

    /// Multiplies the `(i, j)` coefficient by `f(i + j)`.
    pub fn map_by_degree(&self, f: impl Fn(u32) -> Q) -> Self {
        let mut out = Self::zero(self.order);
        for ((i, j), c) in &self.coeffs {
            out.add_term(*i, *j, c * f(i + j));
        }
        out
    }
}

impl fmt::Debug for BiSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.coeffs.iter().map(|((i, j), c)| format!("{}*z1^{i}*z2^{j}", fmt_q(c))).collect();
        write!(f, "BiSeries[{}]({})", self.order, parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_round_trip_on_product() {
        let f = ZSeries::from_ints(&[0, 1, 1], 4);
        let b = BiSeries::outer(&f, &f, 4);
        let l = b.log1p().unwrap();
        assert_eq!(l.coeff(1, 1), qi(1));
        assert_eq!(l.coeff(2, 2), qi(1) - Q::new(1.into(), 2.into()));
        assert!(l.is_symmetric());
    }

    #[test]
    fn compose_identity() {
        let mut b = BiSeries::zero(3);
        b.add_term(1, 2, qi(5));
        assert_eq!(b.compose(&ZSeries::z(3)).unwrap(), b);
    }
}
