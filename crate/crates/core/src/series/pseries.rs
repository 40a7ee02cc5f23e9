//! Sparse truncated polynomials in power-sum-like variables `p_1, p_2, ...`
//! with hbar-Laurent coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{factorial, qi, Q};
use crate::series::{HLaurent, HWindow};

/// Multiset of variable indices, kept sorted ascending. `[1, 1, 3]` is `p_1^2 p_3`.
pub type Monomial = Vec<u32>;

pub fn weight(m: &Monomial) -> u32 {
    m.iter().sum()
}

/// Product of `m_i!` over the multiplicities of a monomial.
pub fn multiplicity_factor(m: &Monomial) -> Q {
    let mut out = Q::one();
    let mut i = 0;
    while i < m.len() {
        let j = m[i..].iter().take_while(|&&x| x == m[i]).count();
        out *= factorial(j as u32);
        i += j;
    }
    out
}

fn merge(a: &Monomial, b: &Monomial) -> Monomial {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Truncation caps: total weight (`deg p_k = k`) and number of factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PCaps {
    pub weight: u32,
    pub parts: u32,
}

impl PCaps {
    pub const fn new(weight: u32, parts: u32) -> Self {
        Self { weight, parts }
    }

    pub fn admits(&self, m: &Monomial) -> bool {
        m.len() as u32 <= self.parts && weight(m) <= self.weight
    }

    fn meet(self, o: PCaps) -> PCaps {
        PCaps::new(self.weight.min(o.weight), self.parts.min(o.parts))
    }
}

/// How hbar exponents are attached to monomials.
///
/// `GenusShifted` stores the coefficient of `hbar^e p_mu` of the plain series
/// at exponent `e + len(mu)`; equivalently every `p_k` carries a factor hbar.
/// Free energies of hypergeometric tau-functions only have non-negative
/// exponents in this grading, so truncation there is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Grading {
    Plain,
    GenusShifted,
}

#[derive(Clone, PartialEq, Eq)]
pub struct PSeries {
    terms: BTreeMap<Monomial, HLaurent>,
    caps: PCaps,
    window: HWindow,
    grading: Grading,
}

impl PSeries {
    pub fn zero(caps: PCaps, window: HWindow) -> Self {
        Self { terms: BTreeMap::new(), caps, window, grading: Grading::Plain }
    }

    pub fn one(caps: PCaps, window: HWindow) -> Self {
        let mut out = Self::zero(caps, window);
        out.add_term(Vec::new(), HLaurent::one(window));
        out
    }

    pub fn var(k: u32, caps: PCaps, window: HWindow) -> Self {
        let mut out = Self::zero(caps, window);
        out.add_term(vec![k], HLaurent::one(window));
        out
    }

    /// Linear form `sum_m c_m p_m` with hbar-free coefficients.
    pub fn linear<'a>(coeffs: impl IntoIterator<Item = (u32, &'a Q)>, caps: PCaps, window: HWindow) -> Self {
        let mut out = Self::zero(caps, window);
        for (m, c) in coeffs {
            out.add_term(vec![m], HLaurent::constant(c.clone(), window));
        }
        out
    }

    pub fn with_grading(mut self, grading: Grading) -> Self {
        self.grading = grading;
        self
    }

    pub fn caps(&self) -> PCaps {
        self.caps
    }

    pub fn window(&self) -> HWindow {
        self.window
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &HLaurent)> {
        self.terms.iter()
    }

    /// Adds a term, respecting caps and window. Monomial need not be sorted.
    pub fn add_term(&mut self, mut m: Monomial, c: HLaurent) {
        m.sort_unstable();
        if !self.caps.admits(&m) || c.is_zero() {
            return;
        }
        let c = c.truncate(self.window.hi);
        match self.terms.get_mut(&m) {
            Some(x) => {
                *x = x.add(&c);
                if x.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                if !c.is_zero() {
                    self.terms.insert(m, c.with_window(self.window));
                }
            }
        }
    }

    pub fn coeff(&self, m: &[u32]) -> HLaurent {
        let mut key = m.to_vec();
        key.sort_unstable();
        self.terms.get(&key).cloned().unwrap_or_else(|| HLaurent::zero(self.window))
    }

    pub fn constant_term(&self) -> HLaurent {
        self.coeff(&[])
    }

    pub fn map_coeffs(&self, f: impl Fn(&Monomial, &HLaurent) -> HLaurent) -> Self {
        let mut out = Self { terms: BTreeMap::new(), ..self.clone() };
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(m, c));
        }
        out
    }

    pub fn filter(&self, keep: impl Fn(&Monomial, i32) -> bool) -> Self {
        self.map_coeffs(|m, c| {
            HLaurent::from_terms(c.terms().filter(|(e, _)| keep(m, *e)).map(|(e, x)| (e, x.clone())), c.window())
        })
    }

    pub fn truncate(&self, caps: PCaps, hi: i32) -> Self {
        let window = HWindow::new(self.window.lo, hi.min(self.window.hi));
        let mut out = Self { terms: BTreeMap::new(), caps: self.caps.meet(caps), window, grading: self.grading };
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.truncate(other.caps, other.window.hi);
        out.window = self.window.meet(other.window);
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Q::one())
    }

    pub fn scale(&self, c: &Q) -> Self {
        self.map_coeffs(|_, x| x.scale(c))
    }

    pub fn scale_h(&self, c: &HLaurent) -> Result<Self> {
        let mut out = Self { terms: BTreeMap::new(), ..self.clone() };
        for (m, x) in &self.terms {
            out.add_term(m.clone(), x.mul(c)?);
        }
        Ok(out)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let caps = self.caps.meet(other.caps);
        let window = self.window.meet(other.window);
        let mut out = Self { terms: BTreeMap::new(), caps, window, grading: self.grading };
        for (ma, ca) in &self.terms {
            let wa = weight(ma);
            for (mb, cb) in &other.terms {
                if wa + weight(mb) > caps.weight || (ma.len() + mb.len()) as u32 > caps.parts {
                    continue;
                }
                out.add_term(merge(ma, mb), ca.mul(cb)?);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, e: u32) -> Result<Self> {
        let mut out = Self::one(self.caps, self.window).with_grading(self.grading);
        for _ in 0..e {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    fn has_zero_constant(&self) -> bool {
        self.constant_term().is_zero()
    }

    /// Truncated exponential; the constant term must vanish.
    pub fn exp(&self) -> Result<Self> {
        if !self.has_zero_constant() {
            return Err(Error::NonzeroConstant);
        }
        let mut out = Self::one(self.caps, self.window).with_grading(self.grading);
        let mut power = out.clone();
        for k in 1..=self.caps.weight {
            power = power.mul(self)?;
            if power.is_zero() {
                break;
            }
            out = out.add(&power.scale(&factorial(k).recip()));
        }
        Ok(out)
    }

    /// Truncated logarithm; the constant term must be exactly 1.
    pub fn log(&self) -> Result<Self> {
        let c0 = self.constant_term();
        if c0 != HLaurent::one(self.window) && !(c0.coeff(0) == Q::one() && c0.is_constant()) {
            return Err(Error::ConstantNotOne);
        }
        let u = self.sub(&Self::one(self.caps, self.window).with_grading(self.grading));
        let mut out = Self::zero(self.caps, self.window).with_grading(self.grading);
        let mut power = Self::one(self.caps, self.window).with_grading(self.grading);
        for k in 1..=self.caps.weight {
            power = power.mul(&u)?;
            if power.is_zero() {
                break;
            }
            let sign = if k % 2 == 1 { qi(1) } else { qi(-1) };
            out = out.add(&power.scale(&(sign / qi(k as i64))));
        }
        Ok(out)
    }

    /// Partial derivative in `p_k`.
    pub fn derivative(&self, k: u32) -> Self {
        let mut out = Self { terms: BTreeMap::new(), ..self.clone() };
        for (m, c) in &self.terms {
            let count = m.iter().filter(|&&x| x == k).count();
            if count == 0 {
                continue;
            }
            let mut rest = m.clone();
            let pos = rest.iter().position(|&x| x == k).unwrap();
            rest.remove(pos);
            out.add_term(rest, c.scale(&qi(count as i64)));
        }
        out
    }

    /// Iterated partial derivative, e.g. `&[1, 1, 3]` is `d^3 / dp_1^2 dp_3`.
    pub fn derivatives(&self, ks: &[u32]) -> Self {
        ks.iter().fold(self.clone(), |acc, &k| acc.derivative(k))
    }

    /// Replaces each `p_k` by `image(k)` (a series in new variables) under the given caps.
    pub fn substitute(&self, image: impl Fn(u32) -> Self, caps: PCaps) -> Result<Self> {
        let mut cache: BTreeMap<Monomial, Self> = BTreeMap::new();
        let one = Self::one(caps, self.window).with_grading(self.grading);
        let mut out = Self::zero(caps, self.window).with_grading(self.grading);
        for (m, c) in &self.terms {
            let mut acc = one.clone();
            for (i, &k) in m.iter().enumerate() {
                let prefix = m[..=i].to_vec();
                acc = match cache.get(&prefix) {
                    Some(v) => v.clone(),
                    None => {
                        let v = acc.mul(&image(k).truncate(caps, self.window.hi))?;
                        cache.insert(prefix, v.clone());
                        v
                    }
                };
            }
            out = out.add(&acc.scale_h(c)?);
        }
        Ok(out)
    }

    /// Replaces hbar by `gamma * hbar`.
    pub fn rescale_hbar(&self, gamma: &Q) -> Self {
        self.map_coeffs(|_, c| c.rescale_hbar(gamma))
    }

    /// Replaces `p_k` by `rho^k p_k`.
    pub fn rescale_vars(&self, rho: &Q) -> Self {
        self.map_coeffs(|m, c| c.scale(&crate::rational::pow_q(rho, weight(m) as i32)))
    }

    /// Converts a genus-shifted series to plain grading. The plain window
    /// keeps only exponents whose value is exact for every admitted monomial.
    pub fn to_plain(&self) -> Result<Self> {
        if self.grading == Grading::Plain {
            return Ok(self.clone());
        }
        let hi = self.window.hi - self.caps.parts as i32;
        let window = HWindow::new(self.window.lo - self.caps.parts as i32, hi);
        let mut out = Self::zero(self.caps, window);
        for (m, c) in &self.terms {
            let wide = HWindow::new(window.lo, self.window.hi);
            out.add_term(m.clone(), c.with_window(wide).shift(-(m.len() as i32))?.with_window(window));
        }
        Ok(out)
    }

    pub fn to_genus_shifted(&self) -> Result<Self> {
        if self.grading == Grading::GenusShifted {
            return Ok(self.clone());
        }
        let window = HWindow::new(self.window.lo, self.window.hi);
        let mut out = Self::zero(self.caps, window).with_grading(Grading::GenusShifted);
        for (m, c) in &self.terms {
            let shifted = c.with_window(HWindow::new(window.lo, window.hi + m.len() as i32));
            out.add_term(m.clone(), shifted.shift(m.len() as i32)?.with_window(window));
        }
        Ok(out)
    }

    /// Equality of coefficients, ignoring caps, window and grading tags.
    pub fn same_terms(&self, other: &Self) -> bool {
        self.terms.len() == other.terms.len()
            && self.terms.iter().zip(&other.terms).all(|((ma, ca), (mb, cb))| {
                ma == mb && ca.terms().eq(cb.terms())
            })
    }

    pub fn lowest_exponent(&self) -> Option<i32> {
        self.terms.values().filter_map(HLaurent::lowest_exponent).min()
    }

    /// Drops every hbar exponent above `hi` (window shrinks accordingly).
    pub fn truncate_hbar(&self, hi: i32) -> Self {
        self.truncate(self.caps, hi)
    }
}

impl fmt::Debug for PSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "PSeries({:?}, {:?}, {:?}) {{", self.caps, self.window, self.grading)?;
        for (m, c) in &self.terms {
            writeln!(f, "  {:?}: {}", m, c)?;
        }
        write!(f, "}}")
    }
}

/// Renders a monomial like `p1^2*p3`.
pub fn fmt_monomial(m: &Monomial, var: &str) -> String {
    if m.is_empty() {
        return "1".into();
    }
    let mut parts = Vec::new();
    let mut i = 0;
    while i < m.len() {
        let j = m[i..].iter().take_while(|&&x| x == m[i]).count();
        if j == 1 {
            parts.push(format!("{var}{}", m[i]));
        } else {
            parts.push(format!("{var}{}^{j}", m[i]));
        }
        i += j;
    }
    parts.join("*")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn caps() -> PCaps {
        PCaps::new(6, 6)
    }
    const W: HWindow = HWindow::new(-2, 4);

    #[test]
    fn exp_log_of_p1() {
        let p1 = PSeries::var(1, caps(), W);
        let e = p1.exp().unwrap();
        assert_eq!(e.coeff(&[1, 1, 1]).coeff(0), q(1, 6));
        assert_eq!(e.log().unwrap(), p1);
        assert!(PSeries::zero(caps(), W).exp().unwrap() == PSeries::one(caps(), W));
    }

    #[test]
    fn derivative_counts_multiplicity() {
        let p = PSeries::var(2, caps(), W).pow(2).unwrap();
        assert_eq!(p.derivatives(&[2, 2]).constant_term().coeff(0), q(2, 1));
    }

    #[test]
    fn genus_grading_round_trip() {
        let mut f = PSeries::zero(PCaps::new(4, 2), HWindow::new(-2, 3));
        f.add_term(vec![1], HLaurent::monomial(q(1, 1), -1, f.window()));
        f.add_term(vec![1, 2], HLaurent::monomial(q(1, 2), 1, f.window()));
        let s = f.to_genus_shifted().unwrap();
        assert_eq!(s.coeff(&[1]).coeff(0), q(1, 1));
        assert_eq!(s.coeff(&[1, 2]).coeff(3), q(1, 2));
        let back = s.to_plain().unwrap();
        assert_eq!(back.coeff(&[1, 2]).coeff(1), q(1, 2));
    }

    #[test]
    fn monomial_rendering() {
        assert_eq!(fmt_monomial(&vec![1, 1, 3], "q"), "q1^2*q3");
        assert_eq!(multiplicity_factor(&vec![1, 1, 3]), q(2, 1));
    }
}
