//! Partitions, Young-diagram statistics, symmetric-group characters and
//! Schur polynomials in power sums.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use once_cell::sync::Lazy;
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{factorial, qi, Q};
use crate::series::{HLaurent, HWindow, PCaps, PSeries};

/// Weakly decreasing sequence of positive integers.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Partition(Vec<u32>);

impl Partition {
    /// Sorts the parts and drops zeros.
    pub fn new(mut parts: Vec<u32>) -> Self {
        parts.retain(|&p| p > 0);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Self(parts)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn size(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn conjugate(&self) -> Self {
        let n = self.0.first().copied().unwrap_or(0);
        Self((1..=n).map(|j| self.0.iter().filter(|&&p| p >= j).count() as u32).collect())
    }

    /// Multiplicity `m_i` of the part `i`.
    pub fn multiplicity(&self, i: u32) -> u32 {
        self.0.iter().filter(|&&p| p == i).count() as u32
    }

    /// Boxes `(row, column)`, 1-based.
    pub fn boxes(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.0.iter().enumerate().flat_map(|(i, &p)| (1..=p).map(move |j| (i as u32 + 1, j)))
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.0.iter().map(u32::to_string).collect();
        write!(f, "({})", s.join(","))
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// All partitions of `n`, in decreasing lexicographic order.
pub fn enumerate_partitions(n: u32) -> Vec<Partition> {
    fn rec(n: u32, max: u32, prefix: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if n == 0 {
            out.push(Partition(prefix.clone()));
            return;
        }
        for p in (1..=max.min(n)).rev() {
            prefix.push(p);
            rec(n - p, p, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

/// All partitions of size at most `n`, smallest size first.
pub fn partitions_up_to(n: u32) -> Vec<Partition> {
    (0..=n).flat_map(enumerate_partitions).collect()
}

pub fn hook_lengths(nu: &Partition) -> Vec<u32> {
    let conj = nu.conjugate();
    nu.boxes().map(|(i, j)| (nu.0[i as usize - 1] - j) + (conj.0[j as usize - 1] - i) + 1).collect()
}

pub fn contents(nu: &Partition) -> Vec<i64> {
    nu.boxes().map(|(i, j)| j as i64 - i as i64).collect()
}

/// `z_mu = prod_i i^{m_i} m_i!`.
pub fn z_factor(mu: &Partition) -> Q {
    let mut out = Q::one();
    let mut i = 0;
    let p = &mu.0;
    while i < p.len() {
        let m = p[i..].iter().take_while(|&&x| x == p[i]).count() as u32;
        out *= factorial(m) * num_traits::pow(qi(p[i] as i64), m as usize);
        i += m as usize;
    }
    out
}

/// Shifted symmetric sum of squares `1/2 sum_j [(nu_j - j + 1/2)^2 - (-j + 1/2)^2]`.
pub fn f2(nu: &Partition) -> Q {
    let half = Q::new(BigInt::one(), BigInt::from(2));
    let mut acc = Q::zero();
    for (j, &p) in nu.0.iter().enumerate() {
        let j = qi(j as i64 + 1);
        let a = qi(p as i64) - &j + &half;
        let b = -j + &half;
        acc += &a * &a - &b * &b;
    }
    acc * half
}

type CharKey = (Vec<u32>, Vec<u32>);
static CHAR_MEMO: Lazy<RwLock<HashMap<CharKey, BigInt>>> = Lazy::new(|| RwLock::new(HashMap::new()));

/// Irreducible character `chi^nu_mu` by the Murnaghan-Nakayama rule on beta-sets.
pub fn character(nu: &Partition, mu: &Partition) -> Result<BigInt> {
    if nu.size() != mu.size() {
        return Err(Error::SizeMismatch(nu.size() as usize, mu.size() as usize));
    }
    Ok(mn(&nu.0, &mu.0))
}

fn mn(nu: &[u32], mu: &[u32]) -> BigInt {
    if mu.is_empty() {
        return BigInt::one();
    }
    let key = (nu.to_vec(), mu.to_vec());
    if let Some(v) = CHAR_MEMO.read().get(&key) {
        return v.clone();
    }
    let r = mu[0];
    let l = nu.len() as u32;
    // beta-numbers, strictly decreasing
    let beta: Vec<u32> = nu.iter().enumerate().map(|(i, &p)| p + l - 1 - i as u32).collect();
    let mut total = BigInt::zero();
    for (idx, &b) in beta.iter().enumerate() {
        if b < r || beta.contains(&(b - r)) {
            continue;
        }
        let nb = b - r;
        let between = beta.iter().filter(|&&x| x > nb && x < b).count();
        let mut next = beta.clone();
        next[idx] = nb;
        next.sort_unstable_by(|a, b| b.cmp(a));
        let len = next.len() as u32;
        let parts: Vec<u32> =
            next.iter().enumerate().map(|(i, &x)| x - (len - 1 - i as u32)).filter(|&p| p > 0).collect();
        let v = mn(&parts, &mu[1..]);
        if between % 2 == 0 {
            total += v;
        } else {
            total -= v;
        }
    }
    CHAR_MEMO.write().insert(key, total.clone());
    total
}

/// Coefficients `chi^nu_mu / z_mu` of `s_nu` in the power-sum basis.
pub fn schur_coefficients(nu: &Partition) -> Vec<(Partition, Q)> {
    enumerate_partitions(nu.size())
        .into_iter()
        .filter_map(|mu| {
            let c = Q::from_integer(mn(&nu.0, &mu.0)) / z_factor(&mu);
            (!c.is_zero()).then_some((mu, c))
        })
        .collect()
}

pub fn schur_in_powersums(nu: &Partition, caps: PCaps, window: HWindow) -> PSeries {
    let mut out = PSeries::zero(caps, window);
    for (mu, c) in schur_coefficients(nu) {
        out.add_term(mu.0, HLaurent::constant(c, window));
    }
    out
}

/// `s_nu` with `p_k` replaced by `values[k]`.
pub fn schur_specialize(nu: &Partition, values: &BTreeMap<u32, HLaurent>, window: HWindow) -> Result<HLaurent> {
    let mut out = HLaurent::zero(window);
    if nu.is_empty() {
        return Ok(HLaurent::one(window));
    }
    for (mu, c) in schur_coefficients(nu) {
        let mut term = HLaurent::constant(c, window);
        for k in mu.parts() {
            let v = values.get(k).ok_or(Error::MissingValue(*k))?;
            term = term.mul(v)?;
            if term.is_zero() {
                break;
            }
        }
        out = out.add(&term);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use proptest::prelude::*;

    fn p(v: &[u32]) -> Partition {
        Partition::new(v.to_vec())
    }

    /// Partition numbers from Euler's pentagonal recurrence.
    fn pentagonal(n: usize) -> Vec<i64> {
        let mut a = vec![0i64; n + 1];
        a[0] = 1;
        for m in 1..=n {
            let mut k: i64 = 1;
            loop {
                let g1 = (k * (3 * k - 1) / 2) as usize;
                if g1 > m {
                    break;
                }
                let s = if k % 2 == 1 { 1 } else { -1 };
                a[m] += s * a[m - g1];
                let g2 = (k * (3 * k + 1) / 2) as usize;
                if g2 <= m {
                    a[m] += s * a[m - g2];
                }
                k += 1;
            }
        }
        a
    }

    #[test]
    fn enumeration() {
        assert_eq!(enumerate_partitions(0), vec![Partition::empty()]);
        assert_eq!(enumerate_partitions(3), vec![p(&[3]), p(&[2, 1]), p(&[1, 1, 1])]);
        let counts = pentagonal(12);
        for n in 0..=12 {
            assert_eq!(enumerate_partitions(n as u32).len() as i64, counts[n]);
        }
    }

    #[test]
    fn hooks_and_contents() {
        let mut h = hook_lengths(&p(&[2, 1]));
        h.sort();
        assert_eq!(h, vec![1, 1, 3]);
        let mut h = hook_lengths(&p(&[2, 2]));
        h.sort();
        assert_eq!(h, vec![1, 2, 2, 3]);
        let mut c = contents(&p(&[2, 1]));
        c.sort();
        assert_eq!(c, vec![-1, 0, 1]);
    }

    #[test]
    fn z_factors() {
        assert_eq!(z_factor(&p(&[5])), qi(5));
        assert_eq!(z_factor(&p(&[1, 1, 1])), qi(6));
        assert_eq!(z_factor(&p(&[2, 1, 1])), qi(4));
    }

    #[test]
    fn small_characters() {
        assert_eq!(character(&p(&[1, 1]), &p(&[2])).unwrap(), BigInt::from(-1));
        assert_eq!(character(&p(&[2, 1]), &p(&[3])).unwrap(), BigInt::from(-1));
        assert_eq!(character(&p(&[2, 1]), &p(&[1, 1, 1])).unwrap(), BigInt::from(2));
        assert_eq!(character(&p(&[4]), &p(&[2, 1, 1])).unwrap(), BigInt::from(1));
        assert!(character(&p(&[2]), &p(&[1])).is_err());
    }

    #[test]
    fn f2_values() {
        assert_eq!(f2(&Partition::empty()), qi(0));
        assert_eq!(f2(&p(&[2])), qi(1));
        assert_eq!(f2(&p(&[2, 1])), qi(0));
    }

    #[test]
    fn content_sum_is_f2() {
        for nu in partitions_up_to(8) {
            assert_eq!(qi(contents(&nu).iter().sum()), f2(&nu));
        }
    }

    #[test]
    fn column_orthogonality() {
        for n in 0..=6 {
            let ps = enumerate_partitions(n);
            for mu in &ps {
                for rho in &ps {
                    let s: BigInt = ps.iter().map(|nu| mn(&nu.0, &mu.0) * mn(&nu.0, &rho.0)).sum();
                    let expected = if mu == rho { z_factor(mu) } else { qi(0) };
                    assert_eq!(Q::from_integer(s), expected);
                }
            }
        }
    }

    #[test]
    fn hook_length_formula() {
        for nu in partitions_up_to(8) {
            let n = nu.size();
            let hooks: u64 = hook_lengths(&nu).iter().map(|&h| h as u64).product();
            let dim = factorial(n) / qi(hooks as i64);
            let ones = Partition::new(vec![1; n as usize]);
            assert_eq!(Q::from_integer(character(&nu, &ones).unwrap()), dim);
        }
    }

    #[test]
    fn schur_polynomials() {
        let caps = PCaps::new(8, 8);
        let w = HWindow::new(0, 0);
        let s2 = schur_in_powersums(&p(&[2]), caps, w);
        assert_eq!(s2.coeff(&[1, 1]).coeff(0), q(1, 2));
        assert_eq!(s2.coeff(&[2]).coeff(0), q(1, 2));
        let s11 = schur_in_powersums(&p(&[1, 1]), caps, w);
        assert_eq!(s11.coeff(&[2]).coeff(0), q(-1, 2));
        for k in 1..=6u32 {
            let s = schur_in_powersums(&Partition::new(vec![1; k as usize]), caps, w);
            assert_eq!(s.coeff(&vec![1; k as usize]).coeff(0), factorial(k).recip());
        }
    }

    #[test]
    fn specialization() {
        let w = HWindow::new(-2, 2);
        let mut vals = BTreeMap::new();
        vals.insert(1, HLaurent::one(w));
        vals.insert(2, HLaurent::one(w));
        assert_eq!(schur_specialize(&p(&[2]), &vals, w).unwrap(), HLaurent::one(w));
        assert_eq!(schur_specialize(&p(&[1]), &vals, w).unwrap(), HLaurent::one(w));
        let zeros: BTreeMap<u32, HLaurent> = (1..=3).map(|k| (k, HLaurent::zero(w))).collect();
        assert!(schur_specialize(&p(&[2, 1]), &zeros, w).unwrap().is_zero());
        assert_eq!(schur_specialize(&p(&[3]), &vals, w), Err(Error::MissingValue(3)));
    }

    proptest! {
        #[test]
        fn conjugation_twists_characters(n in 1u32..7, a in 0usize..100, b in 0usize..100) {
            let ps = enumerate_partitions(n);
            let nu = &ps[a % ps.len()];
            let mu = &ps[b % ps.len()];
            let sign = if (mu.size() as usize - mu.len()) % 2 == 0 { 1 } else { -1 };
            prop_assert_eq!(mn(&nu.conjugate().0, &mu.0), mn(&nu.0, &mu.0) * sign);
        }
    }
}
