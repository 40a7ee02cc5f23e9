//! Dense truncated power series in the spectral coordinate z.

use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::{binomial_q, fmt_q, qi, Q};

/// Power series `sum_{k=0}^{N} c_k z^k`, exact modulo `z^{N+1}`.
#[derive(Clone, PartialEq, Eq)]
pub struct ZSeries {
    coeffs: Vec<Q>,
}

impl ZSeries {
    pub fn zero(order: usize) -> Self {
        Self { coeffs: vec![Q::zero(); order + 1] }
    }

    pub fn one(order: usize) -> Self {
        Self::monomial(Q::one(), 0, order)
    }

    /// The coordinate `z` itself.
    pub fn z(order: usize) -> Self {
        Self::monomial(Q::one(), 1, order)
    }

    pub fn monomial(c: Q, k: usize, order: usize) -> Self {
        let mut out = Self::zero(order);
        if k <= order {
            out.coeffs[k] = c;
        }
        out
    }

    pub fn from_coeffs(mut coeffs: Vec<Q>, order: usize) -> Self {
        coeffs.resize(order + 1, Q::zero());
        Self { coeffs }
    }

    pub fn from_ints(coeffs: &[i64], order: usize) -> Self {
        Self::from_coeffs(coeffs.iter().map(|&c| qi(c)).collect(), order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> Q {
        self.coeffs.get(k).cloned().unwrap_or_else(Q::zero)
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    pub fn set_coeff(&mut self, k: usize, c: Q) {
        if k < self.coeffs.len() {
            self.coeffs[k] = c;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self::from_coeffs(self.coeffs.iter().take(order + 1).cloned().collect(), order)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        Self::from_coeffs((0..=n).map(|k| &self.coeffs[k] + &other.coeffs[k]).collect(), n)
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        Self::from_coeffs((0..=n).map(|k| &self.coeffs[k] - &other.coeffs[k]).collect(), n)
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Q::one())
    }

    pub fn scale(&self, c: &Q) -> Self {
        Self { coeffs: self.coeffs.iter().map(|x| x * c).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        let mut out = vec![Q::zero(); n + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(n + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(n + 1 - i) {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        Self { coeffs: out }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::one(self.order());
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Multiplies by `z^k`, dropping overflow.
    pub fn shift_up(&self, k: usize) -> Self {
        let n = self.order();
        let mut out = Self::zero(n);
        for i in 0..=n.saturating_sub(k) {
            if i + k <= n {
                out.coeffs[i + k] = self.coeffs[i].clone();
            }
        }
        out
    }

    /// Divides by `z^k`; the low coefficients must vanish. Order drops by `k`.
    pub fn shift_down(&self, k: usize) -> Result<Self> {
        if self.coeffs.iter().take(k).any(|c| !c.is_zero()) {
            return Err(Error::Invalid(format!("series not divisible by z^{k}")));
        }
        let n = self.order().saturating_sub(k);
        Ok(Self::from_coeffs(self.coeffs.iter().skip(k).cloned().collect(), n))
    }

    pub fn derivative(&self) -> Self {
        let n = self.order();
        let c = (1..=n).map(|k| &self.coeffs[k] * qi(k as i64)).collect();
        Self::from_coeffs(c, n.saturating_sub(1))
    }

    /// `z d/dz`, which keeps the truncation order.
    pub fn euler(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().enumerate().map(|(k, c)| c * qi(k as i64)).collect(),
        }
    }

    /// Antiderivative with zero constant term.
    pub fn integral(&self) -> Self {
        let n = self.order() + 1;
        let mut c = vec![Q::zero()];
        c.extend(self.coeffs.iter().enumerate().map(|(k, x)| x / qi(k as i64 + 1)));
        Self::from_coeffs(c, n)
    }

    pub fn inv(&self) -> Result<Self> {
        let c0 = self.coeff(0);
        if c0.is_zero() {
            return Err(Error::NotInvertible);
        }
        let n = self.order();
        let inv0 = c0.recip();
        let mut out = vec![Q::zero(); n + 1];
        for m in 0..=n {
            let mut acc = if m == 0 { Q::one() } else { Q::zero() };
            for k in 1..=m {
                if !self.coeffs[k].is_zero() {
                    acc -= &self.coeffs[k] * &out[m - k];
                }
            }
            out[m] = acc * &inv0;
        }
        Ok(Self { coeffs: out })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.inv()?))
    }

    /// Truncated exponential of a series with zero constant term.
    pub fn exp(&self) -> Result<Self> {
        if !self.coeff(0).is_zero() {
            return Err(Error::NonzeroConstant);
        }
        let n = self.order();
        let mut e = vec![Q::zero(); n + 1];
        e[0] = Q::one();
        // e' = f' e, so m e_m = sum_k k f_k e_{m-k}
        for m in 1..=n {
            let mut acc = Q::zero();
            for k in 1..=m {
                if !self.coeffs[k].is_zero() {
                    acc += qi(k as i64) * &self.coeffs[k] * &e[m - k];
                }
            }
            e[m] = acc / qi(m as i64);
        }
        Ok(Self { coeffs: e })
    }

    /// Truncated logarithm of a series with constant term 1.
    pub fn log(&self) -> Result<Self> {
        if self.coeff(0) != Q::one() {
            return Err(Error::ConstantNotOne);
        }
        let n = self.order();
        let ratio = self.derivative().mul(&self.truncate(n.saturating_sub(1)).inv()?);
        Ok(ratio.integral().truncate(n))
    }

    /// `f^alpha` for rational `alpha`, when `f(0) = 1`.
    pub fn pow_rational(&self, alpha: &Q) -> Result<Self> {
        if self.coeff(0) != Q::one() {
            return Err(Error::ConstantNotOne);
        }
        let n = self.order();
        let u = self.sub(&Self::one(n));
        let mut out = Self::zero(n);
        let mut power = Self::one(n);
        for k in 0..=n as u32 {
            out = out.add(&power.scale(&binomial_q(alpha, k)));
            power = power.mul(&u);
        }
        Ok(out)
    }

    /// `self(inner(z))`; `inner` must have zero constant term.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        if !inner.coeff(0).is_zero() {
            return Err(Error::NonzeroConstant);
        }
        let n = self.order().min(inner.order());
        let inner = inner.truncate(n);
        let mut out = Self::zero(n);
        for k in (0..=n).rev() {
            out = out.mul(&inner);
            out.coeffs[0] += &self.coeffs[k];
        }
        Ok(out)
    }

    /// Compositional inverse by Newton iteration, doubling the precision each step.
    pub fn reversion(&self) -> Result<Self> {
        if !self.coeff(0).is_zero() {
            return Err(Error::NonzeroConstant);
        }
        let c1 = self.coeff(1);
        if c1.is_zero() {
            return Err(Error::ZeroLinearCoefficient);
        }
        let n = self.order();
        let mut g = Self::monomial(c1.recip(), 1, n.min(1));
        let mut prec = n.min(1);
        while prec < n {
            prec = (2 * prec).min(n);
            let f = self.truncate(prec);
            let g_ext = g.truncate(prec);
            let residual = f.compose(&g_ext)?.sub(&Self::z(prec));
            // residual = O(z^{old+1}), so the slope is only needed to low order
            let slope = f.derivative().compose(&g_ext.truncate(prec - 1))?;
            let slope = Self::from_coeffs(slope.coeffs, prec);
            let step = residual.mul(&slope.inv()?);
            g = g_ext.sub(&step);
        }
        Ok(g.truncate(n))
    }

    /// Substitutes `z -> c z`.
    pub fn rescale(&self, c: &Q) -> Self {
        let mut pw = Q::one();
        let mut out = Vec::with_capacity(self.coeffs.len());
        for x in &self.coeffs {
            out.push(x * &pw);
            pw *= c;
        }
        Self { coeffs: out }
    }
}

impl fmt::Debug for ZSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| format!("{}*z^{}", fmt_q(c), k))
            .collect();
        write!(f, "[{}; O(z^{})]", parts.join(" + "), self.order() + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    #[test]
    fn exp_of_z() {
        let e = ZSeries::z(3).exp().unwrap();
        assert_eq!(e.coeffs(), &[q(1, 1), q(1, 1), q(1, 2), q(1, 6)]);
        assert!(ZSeries::zero(4).exp().unwrap() == ZSeries::one(4));
        assert!(ZSeries::one(2).exp().is_err());
    }

    #[test]
    fn mercator() {
        let l = ZSeries::from_ints(&[1, 1], 4).log().unwrap();
        assert_eq!(l.coeffs(), &[q(0, 1), q(1, 1), q(-1, 2), q(1, 3), q(-1, 4)]);
        assert!(ZSeries::one(3).log().unwrap().is_zero());
        assert!(ZSeries::zero(3).log().is_err());
    }

    #[test]
    fn compose_hand_expansion() {
        let f = ZSeries::from_ints(&[0, 0, 1], 3);
        let g = ZSeries::from_ints(&[0, 1, 1], 3);
        assert_eq!(f.compose(&g).unwrap(), ZSeries::from_ints(&[0, 0, 1, 2], 3));
        assert_eq!(f.compose(&ZSeries::z(3)).unwrap(), f);
        assert!(f.compose(&ZSeries::one(3)).is_err());
    }

    #[test]
    fn reversion_of_kazarian_x() {
        // X = z/(1+z) exp(-z/(1+z))
        let n = 6;
        let m = ZSeries::from_ints(&[1, 1], n).inv().unwrap().shift_up(1);
        let x = m.mul(&m.neg().exp().unwrap());
        let r = x.reversion().unwrap();
        assert_eq!(r.coeff(3), q(9, 2));
        assert_eq!(x.compose(&r).unwrap(), ZSeries::z(n));
        assert_eq!(ZSeries::z(5).reversion().unwrap(), ZSeries::z(5));
        assert!(ZSeries::from_ints(&[0, 0, 1], 4).reversion().is_err());
    }

    #[test]
    fn rational_power() {
        let f = ZSeries::from_ints(&[1, -3], 5);
        let cube_root = f.pow_rational(&q(1, 3)).unwrap();
        assert_eq!(cube_root.pow(3), f);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn reversion_inverts_composition(c in proptest::collection::vec((-5i64..6, 1i64..4), 1..5), lead in 1i64..4) {
            let n = 8;
            let mut coeffs = vec![Q::zero(), q(lead, 1)];
            coeffs.extend(c.iter().map(|&(a, b)| q(a, b)));
            let f = ZSeries::from_coeffs(coeffs, n);
            let g = f.reversion().unwrap();
            proptest::prop_assert_eq!(f.compose(&g).unwrap(), ZSeries::z(n));
            proptest::prop_assert_eq!(g.compose(&f).unwrap(), ZSeries::z(n));
        }

        #[test]
        fn rational_powers_multiply(c in proptest::collection::vec((-5i64..6, 1i64..4), 1..5), a in (-6i64..7, 1i64..5), b in (-6i64..7, 1i64..5)) {
            let n = 7;
            let mut coeffs = vec![Q::one()];
            coeffs.extend(c.iter().map(|&(x, y)| q(x, y)));
            let f = ZSeries::from_coeffs(coeffs, n);
            let (a, b) = (q(a.0, a.1), q(b.0, b.1));
            let lhs = f.pow_rational(&a).unwrap().mul(&f.pow_rational(&b).unwrap());
            proptest::prop_assert_eq!(lhs, f.pow_rational(&(&a + &b)).unwrap());
            proptest::prop_assert_eq!(f.log().unwrap().exp().unwrap(), f);
        }
    }
}
