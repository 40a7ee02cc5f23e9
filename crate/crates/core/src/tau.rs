//! Hypergeometric (Orlov-Scherbin) tau-functions: construction, free energy
//! and the genus-expanded correlators `H_{g,n}`.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partitions::{contents, enumerate_partitions, partitions_up_to, schur_coefficients, Partition};
use crate::rational::{pow_q, qi, Q};
use crate::series::{
    multiplicity_factor, s_inv_series, s_series, weight, Grading, HLaurent, HWindow, PCaps, PSeries, Poly, ZSeries,
};

/// Which structural family of the correlator theorem the data belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyTag {
    FamilyI,
    FamilyII,
    ExtendedFamilyII,
    Generic,
}

/// Coefficients of `psi_hat(hbar^2, y) = sum c_{k,m} y^k hbar^{2m}` and
/// `y_hat(hbar^2, z) = sum s_{k,m} z^k hbar^{2m}`.
///
/// `precision = Some(P)` records that the tables are exact only for
/// `psi_hat` terms with `k + 2m <= P` and `y_hat` terms with `k <= P`,
/// `2m <= P`; infinite series are cut there. `None` means the support is
/// genuinely finite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TauData {
    psi_hat: BTreeMap<(u32, u32), Q>,
    y_hat: BTreeMap<(u32, u32), Q>,
    family: FamilyTag,
    precision: Option<u32>,
}

fn nonzero(map: BTreeMap<(u32, u32), Q>) -> BTreeMap<(u32, u32), Q> {
    map.into_iter().filter(|(_, v)| !v.is_zero()).collect()
}

/// Taylor coefficients of `num/den` at 0 up to `z^order`.
pub fn ratfn_series(num: &Poly, den: &Poly, order: usize) -> Result<ZSeries> {
    num.to_zseries(order).div(&den.to_zseries(order))
}

/// Taylor coefficients of `log(num/den)` at 0; needs `num(0) = den(0) != 0`.
pub fn log_ratio_series(num: &Poly, den: &Poly, order: usize) -> Result<ZSeries> {
    if num.coeff(0) != den.coeff(0) || num.coeff(0).is_zero() {
        return Err(Error::Invalid("log(R3/R4) needs R3(0) = R4(0) != 0".into()));
    }
    ratfn_series(num, den, order)?.log()
}

impl TauData {
    pub fn new(
        psi_hat: BTreeMap<(u32, u32), Q>,
        y_hat: BTreeMap<(u32, u32), Q>,
        family: FamilyTag,
        precision: Option<u32>,
    ) -> Result<Self> {
        let data = Self { psi_hat: nonzero(psi_hat), y_hat: nonzero(y_hat), family, precision };
        data.validate()?;
        Ok(data)
    }

    /// `psi_hat = y`, `y_hat = z`: simple Hurwitz numbers.
    pub fn naive_hodge() -> Self {
        let psi = BTreeMap::from([((1, 0), Q::one())]);
        let y = BTreeMap::from([((1, 0), Q::one())]);
        Self { psi_hat: psi, y_hat: y, family: FamilyTag::FamilyII, precision: None }
    }

    /// Family I: `psi_hat = S(hbar d/dy) P1(y) + log(P2/P3)`, `y_hat = R1/R2`.
    ///
    /// Constant terms produced by `S(hbar d/dy)` acting on `P1` are absorbed
    /// into `y_hat` via `y_hat_k -> e^{k c_0(hbar^2)} y_hat_k`.
    pub fn family_one(p1: &Poly, p2: &Poly, p3: &Poly, r1: &Poly, r2: &Poly, precision: u32) -> Result<Self> {
        let n = precision as usize;
        if !p1.coeff(0).is_zero() || !r1.coeff(0).is_zero() || r2.coeff(0).is_zero() {
            return Err(Error::Invalid("Family I needs P1(0) = R1(0) = 0 and R2(0) != 0".into()));
        }
        let log_part = log_ratio_series(p2, p3, n)?;
        let s = s_series(n);
        let mut psi = BTreeMap::new();
        let mut absorbed = BTreeMap::new();
        for m in 0..=n / 2 {
            let mut deriv = p1.clone();
            for _ in 0..2 * m {
                deriv = deriv.derivative();
            }
            let sm = s.coeff(2 * m);
            for (k, c) in deriv.coeffs().iter().enumerate() {
                if k == 0 {
                    if m > 0 {
                        absorbed.insert(m as u32, c * &sm);
                    }
                } else if k + 2 * m <= n {
                    *psi.entry((k as u32, m as u32)).or_insert_with(Q::zero) += c * &sm;
                }
            }
        }
        for k in 1..=n {
            *psi.entry((k as u32, 0)).or_insert_with(Q::zero) += log_part.coeff(k);
        }
        let y0 = ratfn_series(r1, r2, n)?;
        let w = HWindow::new(0, n as i32);
        let c0 = HLaurent::from_terms(absorbed.iter().map(|(m, c)| (2 * *m as i32, c.clone())), w);
        let mut y = BTreeMap::new();
        for k in 1..=n {
            let factor = c0.scale(&qi(k as i64)).exp()?;
            for (e, c) in factor.terms() {
                if e % 2 == 0 && e as usize <= n {
                    y.insert((k as u32, e as u32 / 2), y0.coeff(k) * c);
                }
            }
        }
        Self::new(psi, y, FamilyTag::FamilyI, Some(precision))
    }

    /// Family II: `psi_hat = alpha y`, `y_hat = R1/R2 + S(hbar z d/dz)^{-1} log(R3/R4)`.
    pub fn family_two(alpha: &Q, r: [&Poly; 4], precision: u32) -> Result<Self> {
        Self::extended_family_two(alpha, &Q::one(), r, precision)
    }

    /// `y_hat = R1/R2 + lambda S(lambda^{-1} hbar z d/dz)^{-1} log(R3/R4)`.
    pub fn extended_family_two(alpha: &Q, lambda: &Q, r: [&Poly; 4], precision: u32) -> Result<Self> {
        if alpha.is_zero() || lambda.is_zero() {
            return Err(Error::Invalid("alpha and lambda must be nonzero".into()));
        }
        if !r[0].coeff(0).is_zero() || r[1].coeff(0).is_zero() {
            return Err(Error::Invalid("Family II needs R1(0) = 0 and R2(0) != 0".into()));
        }
        let n = precision as usize;
        let rat = ratfn_series(r[0], r[1], n)?;
        let log = log_ratio_series(r[2], r[3], n)?;
        let si = s_inv_series(n);
        let mut y = BTreeMap::new();
        for k in 1..=n {
            y.insert((k as u32, 0), rat.coeff(k));
            for m in 0..=n / 2 {
                let c = lambda * log.coeff(k) * si.coeff(2 * m) * pow_q(&(qi(k as i64) / lambda), 2 * m as i32);
                *y.entry((k as u32, m as u32)).or_insert_with(Q::zero) += c;
            }
        }
        let psi = BTreeMap::from([((1, 0), alpha.clone())]);
        let tag = if lambda.is_one() { FamilyTag::FamilyII } else { FamilyTag::ExtendedFamilyII };
        Self::new(psi, y, tag, Some(precision))
    }

    /// Triple-Hodge data: `psi_hat = y/w`, `y_hat = sum_k (beta w z)^k / (k S(hbar k))`.
    pub fn marino_vafa(w: &Q, beta: &Q, precision: u32) -> Result<Self> {
        if w.is_zero() || beta.is_zero() {
            return Err(Error::Invalid("w and beta must be nonzero".into()));
        }
        let r4 = Poly::new(vec![Q::one(), -(beta * w)]);
        Self::family_two(&w.recip(), [&Poly::zero(), &Poly::one(), &Poly::one(), &r4], precision)
    }

    pub fn psi_hat(&self) -> &BTreeMap<(u32, u32), Q> {
        &self.psi_hat
    }

    pub fn y_hat(&self) -> &BTreeMap<(u32, u32), Q> {
        &self.y_hat
    }

    pub fn family(&self) -> FamilyTag {
        self.family
    }

    pub fn precision(&self) -> Option<u32> {
        self.precision
    }

    fn validate(&self) -> Result<()> {
        if self.psi_hat.keys().chain(self.y_hat.keys()).any(|(k, _)| *k == 0) {
            return Err(Error::Invalid("constant terms (k = 0) are not allowed".into()));
        }
        match self.family {
            FamilyTag::Generic => Ok(()),
            FamilyTag::FamilyI => self.validate_family_one(),
            FamilyTag::FamilyII | FamilyTag::ExtendedFamilyII => self.validate_family_two(),
        }
    }

    fn max_m(map: &BTreeMap<(u32, u32), Q>) -> u32 {
        map.keys().map(|(_, m)| *m).max().unwrap_or(0)
    }

    fn validate_family_one(&self) -> Result<()> {
        if self.y_hat.keys().any(|(_, m)| *m > 0) && self.psi_hat.keys().all(|(_, m)| *m == 0) {
            return Err(Error::Invalid("Family I with hbar-independent psi_hat needs hbar-independent y_hat".into()));
        }
        // hbar^2 part of psi_hat is P1''/24; every higher order must be S_{2m} P1^{(2m)}
        let s = s_series(2 * Self::max_m(&self.psi_hat) as usize + 2);
        let second: BTreeMap<u32, Q> =
            self.psi_hat.iter().filter(|((_, m), _)| *m == 1).map(|((k, _), v)| (*k, v * qi(24))).collect();
        for ((k, m), v) in &self.psi_hat {
            if *m < 2 {
                continue;
            }
            // coefficient of y^k in P1^{(2m)} = (d/dy)^{2m-2} P1''
            let src = k + 2 * m - 2;
            let mut expect = second.get(&src).cloned().unwrap_or_else(Q::zero);
            for j in 0..(2 * m - 2) {
                expect *= qi((src - j) as i64);
            }
            if &(expect * s.coeff(2 * *m as usize)) != v {
                return Err(Error::Invalid(format!("psi_hat coefficient ({k},{m}) breaks the Family I shape")));
            }
        }
        Ok(())
    }

    fn validate_family_two(&self) -> Result<()> {
        if self.psi_hat.len() != 1 || !self.psi_hat.contains_key(&(1, 0)) {
            return Err(Error::Invalid("Family II needs psi_hat = alpha y".into()));
        }
        // s_{k,m} = L_k sigma_m k^{2m} mu^m for m >= 1 with a single mu = lambda^{-2}
        let si = s_inv_series(2 * Self::max_m(&self.y_hat) as usize + 2);
        let mut mu: Option<Q> = None;
        let by_k = |k: u32, m: u32| self.y_hat.get(&(k, m)).cloned().unwrap_or_else(Q::zero);
        let ks: Vec<u32> = self.y_hat.keys().map(|(k, _)| *k).collect();
        for &k in &ks {
            let s1 = by_k(k, 1);
            let top = Self::max_m(&self.y_hat);
            if s1.is_zero() {
                if (2..=top).any(|m| !by_k(k, m).is_zero()) {
                    return Err(Error::Invalid(format!("y_hat_{k} breaks the Family II shape")));
                }
                continue;
            }
            let kk = qi(k as i64);
            let lk_mu = &s1 / (si.coeff(2) * &kk * &kk);
            if top >= 2 {
                let ratio = by_k(k, 2) / (&lk_mu * si.coeff(4) * pow_q(&kk, 4));
                match &mu {
                    None => mu = Some(ratio),
                    Some(m0) if *m0 != ratio => {
                        return Err(Error::Invalid(format!("y_hat_{k} uses a different torus parameter")));
                    }
                    _ => {}
                }
            }
            let mu_v = mu.clone().unwrap_or_else(Q::one);
            for m in 2..=top {
                let expect = &lk_mu * si.coeff(2 * m as usize) * pow_q(&kk, 2 * m as i32) * pow_q(&mu_v, m as i32 - 1);
                if expect != by_k(k, m) {
                    return Err(Error::Invalid(format!("y_hat coefficient ({k},{m}) breaks the Family II shape")));
                }
            }
        }
        if self.family == FamilyTag::FamilyII && mu.is_some_and(|m| !m.is_one()) {
            return Err(Error::Invalid("data needs the extended Family II tag".into()));
        }
        Ok(())
    }

    /// `psi(y) = psi_hat(0, y)` up to `y^order`.
    pub fn psi(&self, order: usize) -> ZSeries {
        let mut out = ZSeries::zero(order);
        for ((k, m), c) in &self.psi_hat {
            if *m == 0 {
                out.set_coeff(*k as usize, c.clone());
            }
        }
        out
    }

    /// `y(z) = y_hat(0, z)` up to `z^order`.
    pub fn y(&self, order: usize) -> ZSeries {
        let mut out = ZSeries::zero(order);
        for ((k, m), c) in &self.y_hat {
            if *m == 0 {
                out.set_coeff(*k as usize, c.clone());
            }
        }
        out
    }

    /// `y_hat_k(hbar^2)` as an hbar series.
    pub fn y_hat_k(&self, k: u32, window: HWindow) -> HLaurent {
        HLaurent::from_terms(
            self.y_hat.range((k, 0)..=(k, u32::MAX)).map(|((_, m), c)| (2 * *m as i32, c.clone())),
            window,
        )
    }

    /// `psi_hat(hbar^2, hbar c)`.
    pub fn psi_hat_at_content(&self, c: i64, window: HWindow) -> HLaurent {
        let cq = qi(c);
        HLaurent::from_terms(
            self.psi_hat.iter().map(|((k, m), v)| ((k + 2 * m) as i32, v * pow_q(&cq, *k as i32))),
            window,
        )
    }

    pub fn ensure_precision(&self, needed: u32) -> Result<()> {
        match self.precision {
            Some(p) if p < needed => {
                Err(Error::Truncation(format!("data exact through order {p}, computation needs {needed}")))
            }
            _ => Ok(()),
        }
    }
}

/// `(psi_hat(lambda^{-2} hbar^2, lambda^{-1} y), lambda y_hat(lambda^{-2} hbar^2, z))`.
pub fn rescale_data(lambda: &Q, data: &TauData) -> Result<TauData> {
    if lambda.is_zero() {
        return Err(Error::Invalid("lambda must be nonzero".into()));
    }
    let psi = data.psi_hat.iter().map(|((k, m), c)| ((*k, *m), c * pow_q(lambda, -(*k as i32) - 2 * *m as i32))).collect();
    let y = data.y_hat.iter().map(|((k, m), c)| ((*k, *m), c * pow_q(lambda, 1 - 2 * *m as i32))).collect();
    let family = match data.family {
        FamilyTag::FamilyII if !lambda.is_one() => FamilyTag::ExtendedFamilyII,
        f => f,
    };
    TauData::new(psi, y, family, data.precision)
}

/// `exp(sum over boxes of psi_hat(hbar^2, hbar c_box))`.
pub fn content_weight(data: &TauData, nu: &Partition, window: HWindow) -> Result<HLaurent> {
    let mut sum = HLaurent::zero(window);
    for c in contents(nu) {
        sum = sum.add(&data.psi_hat_at_content(c, window));
    }
    sum.exp()
}

/// Coefficient `a_nu` of `s_nu(p)` in the tau-function:
/// content weight times `s_nu(y_hat_k / hbar)`.
fn diagonal_coefficients(data: &TauData, max: u32, window: HWindow) -> Result<BTreeMap<Partition, HLaurent>> {
    let values: Vec<HLaurent> = (0..=max)
        .map(|k| if k == 0 { Ok(HLaurent::zero(window)) } else { data.y_hat_k(k, window).shift(-1) })
        .collect::<Result<_>>()?;
    let mut pvals: BTreeMap<Partition, HLaurent> = BTreeMap::new();
    for mu in partitions_up_to(max) {
        let v = match mu.parts().split_last() {
            None => HLaurent::one(window),
            Some((last, rest)) => pvals[&Partition::new(rest.to_vec())].mul(&values[*last as usize])?,
        };
        pvals.insert(mu, v);
    }
    partitions_up_to(max)
        .into_par_iter()
        .map(|nu| {
            let mut s = HLaurent::zero(window);
            for (mu, c) in schur_coefficients(&nu) {
                s = s.add(&pvals[&mu].scale(&c));
            }
            let a = content_weight(data, &nu, window)?.mul(&s)?;
            Ok((nu, a))
        })
        .collect()
}

/// Hbar depth used internally so that a requested plain window is exact.
fn shifted_cap(caps: PCaps, window: HWindow) -> i32 {
    window.hi + caps.parts as i32
}

/// Orlov-Scherbin partition function `Z = sum_nu r_nu s_nu(p) s_nu(y_hat/hbar)`.
///
/// The result is returned in [`Grading::GenusShifted`] (every `p_k` carries
/// one hbar), where it is a genuine power series in hbar; it is exact up to
/// `window.hi + caps.parts` there, so [`PSeries::to_plain`] yields a series
/// exact up to `window.hi`.
pub fn build_tau(data: &TauData, caps: PCaps, window: HWindow) -> Result<PSeries> {
    let hs = shifted_cap(caps, window);
    let depth = hs + caps.weight as i32;
    data.ensure_precision((depth + 1) as u32)?;
    let inner = HWindow::new(-(caps.weight as i32) - 1, depth);
    let diag = diagonal_coefficients(data, caps.weight, inner)?;
    let out_window = HWindow::new(0, hs);
    let terms: Vec<(Partition, HLaurent)> = partitions_up_to(caps.weight)
        .into_par_iter()
        .filter(|mu| mu.len() as u32 <= caps.parts)
        .map(|mu| {
            let mut acc = HLaurent::zero(inner);
            for nu in enumerate_partitions(mu.size()) {
                let chi = crate::partitions::character(&nu, &mu)?;
                if !chi.is_zero() {
                    acc = acc.add(&diag[&nu].scale(&Q::from_integer(chi)));
                }
            }
            let acc = acc.scale(&crate::partitions::z_factor(&mu).recip()).shift(mu.len() as i32)?;
            if acc.lowest_exponent().is_some_and(|e| e < 0) {
                return Err(Error::Truncation(format!("negative genus-shifted exponent at p_{mu}")));
            }
            Ok((mu, acc.with_window(out_window)))
        })
        .collect::<Result<_>>()?;
    let mut z = PSeries::zero(caps, out_window).with_grading(Grading::GenusShifted);
    for (mu, c) in terms {
        z.add_term(mu.parts().to_vec(), c);
    }
    Ok(z)
}

/// Coefficients `a_nu` of the Schur expansion, for `|nu| <= max`, as plain hbar series.
pub fn tau_schur_coefficients(data: &TauData, max: u32, window: HWindow) -> Result<BTreeMap<Partition, HLaurent>> {
    let depth = window.hi + 2 * max as i32;
    data.ensure_precision((depth + 1) as u32)?;
    let inner = HWindow::new(window.lo.min(-(max as i32)) - 1, depth);
    Ok(diagonal_coefficients(data, max, inner)?.into_iter().map(|(k, v)| (k, v.truncate(window.hi))).collect())
}

/// `F = log Z`; the grading of `Z` is kept.
pub fn free_energy(z: &PSeries) -> Result<PSeries> {
    z.log()
}

/// Builds `Z` and returns the free energy in plain grading, exact in `window`.
pub fn free_energy_plain(data: &TauData, caps: PCaps, window: HWindow) -> Result<PSeries> {
    let f = free_energy(&build_tau(data, caps, window)?)?.to_plain()?;
    Ok(f.truncate(caps, window.hi))
}

/// One correlator `H_{g,n}`: coefficients of `X_1^{k_1} ... X_n^{k_n}` (ordered tuples)
/// and of `z_1^{m_1} ... z_n^{m_n}` after substituting `X_i = X(z_i)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HgnEntry {
    pub g: u32,
    pub n: u32,
    pub order: u32,
    pub unstable: bool,
    pub x_coeffs: BTreeMap<Vec<u32>, Q>,
    pub z_coeffs: BTreeMap<Vec<u32>, Q>,
}

pub type HgnTable = BTreeMap<(u32, u32), HgnEntry>;

fn tuples(n: u32, max_total: u32) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for t in &out {
            let used: u32 = t.iter().sum();
            let remaining = n as usize - t.len() - 1;
            for k in 1..=max_total.saturating_sub(used + remaining as u32) {
                let mut t2 = t.clone();
                t2.push(k);
                next.push(t2);
            }
        }
        out = next;
    }
    out
}

/// Extracts `H_{g,n}` from a plain-graded free energy. Coefficients are
/// checked to carry only hbar exponents of the form `2g' - 2 + n`.
pub fn extract_hgn(f: &PSeries, x: &ZSeries, g: u32, n: u32, order: u32) -> Result<HgnEntry> {
    if f.grading() != Grading::Plain {
        return Err(Error::Invalid("extract_hgn needs a plain-graded free energy".into()));
    }
    if f.caps().weight < order || f.caps().parts < n {
        return Err(Error::Truncation(format!("free energy caps {:?} below order {order}", f.caps())));
    }
    let e = 2 * g as i32 - 2 + n as i32;
    if f.window().hi < e {
        return Err(Error::Truncation(format!("hbar window {:?} misses exponent {e}", f.window())));
    }
    let mut x_coeffs = BTreeMap::new();
    for t in tuples(n, order) {
        let c = f.coeff(&t);
        if c.terms().any(|(ex, _)| (ex - n as i32) % 2 != 0 || ex < n as i32 - 2) {
            return Err(Error::ResidualHbar { g, n });
        }
        let mut key = t.clone();
        key.sort_unstable();
        let v = c.coeff(e) * multiplicity_factor(&key);
        if !v.is_zero() {
            x_coeffs.insert(t, v);
        }
    }
    let powers: Vec<ZSeries> = {
        let xs = x.truncate(order as usize);
        let mut acc = vec![ZSeries::one(order as usize)];
        for k in 1..=order {
            acc.push(acc[k as usize - 1].mul(&xs));
        }
        acc
    };
    let mut z_coeffs: BTreeMap<Vec<u32>, Q> = BTreeMap::new();
    for (t, c) in &x_coeffs {
        for mt in tuples(n, order) {
            if mt.iter().zip(t).any(|(m, k)| m < k) {
                continue;
            }
            let mut prod = c.clone();
            for (m, k) in mt.iter().zip(t) {
                prod *= powers[*k as usize].coeff(*m as usize);
                if prod.is_zero() {
                    break;
                }
            }
            if !prod.is_zero() {
                *z_coeffs.entry(mt).or_insert_with(Q::zero) += prod;
            }
        }
    }
    z_coeffs.retain(|_, v| !v.is_zero());
    Ok(HgnEntry { g, n, order, unstable: g == 0 && n <= 2, x_coeffs, z_coeffs })
}

/// Extracts every requested `(g, n)`.
pub fn extract_table(f: &PSeries, x: &ZSeries, labels: &[(u32, u32)], order: u32) -> Result<HgnTable> {
    labels.iter().map(|&(g, n)| Ok(((g, n), extract_hgn(f, x, g, n, order)?))).collect()
}

/// Total `p`-weight of every monomial of `f` is at most `w`.
pub fn max_weight(f: &PSeries) -> u32 {
    f.terms().map(|(m, _)| weight(m)).max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partitions::{hook_lengths, schur_in_powersums};
    use crate::rational::{factorial, q};

    fn w() -> HWindow {
        HWindow::new(-2, 3)
    }

    #[test]
    fn content_weights() {
        let d = TauData::naive_hodge();
        let win = HWindow::new(0, 4);
        assert_eq!(content_weight(&d, &Partition::empty(), win).unwrap(), HLaurent::one(win));
        assert_eq!(content_weight(&d, &Partition::new(vec![1]), win).unwrap(), HLaurent::one(win));
        let e = content_weight(&d, &Partition::new(vec![2]), win).unwrap();
        let expected = HLaurent::monomial(qi(1), 1, win).exp().unwrap();
        assert_eq!(e, expected);
    }

    #[test]
    fn trivial_y_hat_gives_one() {
        let d = TauData::new(BTreeMap::from([((1, 0), qi(1))]), BTreeMap::new(), FamilyTag::Generic, None).unwrap();
        let z = build_tau(&d, PCaps::new(4, 4), w()).unwrap();
        assert_eq!(z.len(), 1);
        assert_eq!(z.constant_term().coeff(0), qi(1));
    }

    #[test]
    fn naive_hodge_p1_coefficient() {
        let z = build_tau(&TauData::naive_hodge(), PCaps::new(4, 4), w()).unwrap().to_plain().unwrap();
        let c = z.coeff(&[1]);
        assert_eq!(c.coeff(-1), qi(1));
        assert_eq!(c.terms().count(), 1);
    }

    #[test]
    fn schur_expansion_is_diagonal() {
        // Z re-expanded on Schur functions has coefficient content_weight * s_nu(y_hat/hbar)
        let d = TauData::naive_hodge();
        let caps = PCaps::new(4, 4);
        let win = HWindow::new(-4, 2);
        let z = build_tau(&d, caps, win).unwrap().to_plain().unwrap();
        let mut rebuilt = PSeries::zero(caps, z.window());
        for nu in partitions_up_to(4) {
            // s_nu(p1 = 1/hbar) = dim(nu)/|nu|! hbar^{-|nu|}
            let hooks: i64 = hook_lengths(&nu).iter().map(|&h| h as i64).product();
            let spec = HLaurent::monomial(qi(hooks).recip(), -(nu.size() as i32), HWindow::new(-8, 8));
            let a = content_weight(&d, &nu, HWindow::new(-8, 8)).unwrap().mul(&spec).unwrap();
            rebuilt = rebuilt.add(&schur_in_powersums(&nu, caps, HWindow::new(-8, 8)).scale_h(&a).unwrap());
        }
        assert!(rebuilt.truncate(caps, 2).same_terms(&z.truncate(caps, 2)));
    }

    #[test]
    fn free_energy_round_trip() {
        let caps = PCaps::new(5, 5);
        let p1 = PSeries::var(1, caps, HWindow::new(0, 3));
        assert_eq!(free_energy(&p1.exp().unwrap()).unwrap(), p1);
        assert!(free_energy(&PSeries::one(caps, HWindow::new(0, 3))).unwrap().is_zero());
    }

    #[test]
    fn genus_parity_of_naive_hodge() {
        let f = free_energy_plain(&TauData::naive_hodge(), PCaps::new(5, 5), HWindow::new(-1, 3)).unwrap();
        for (m, c) in f.terms() {
            for (e, _) in c.terms() {
                assert_eq!((e - m.len() as i32).rem_euclid(2), 0, "{m:?} {e}");
                assert!(e >= m.len() as i32 - 2);
            }
        }
    }

    /// Genus-zero simple Hurwitz numbers from the closed formula
    /// `|mu|^{l-3} prod mu_i^{mu_i}/mu_i! / |Aut mu|`.
    fn hurwitz_genus_zero(mu: &[u32]) -> Q {
        let d = mu.iter().sum::<u32>() as i64;
        let mut v = pow_q(&qi(d), mu.len() as i32 - 3);
        for &m in mu {
            v *= pow_q(&qi(m as i64), m as i32) / factorial(m);
        }
        v / multiplicity_factor(&mu.to_vec())
    }

    #[test]
    fn hurwitz_numbers_from_free_energy() {
        let f = free_energy_plain(&TauData::naive_hodge(), PCaps::new(4, 4), HWindow::new(-1, 2)).unwrap();
        for mu in partitions_up_to(4).into_iter().skip(1) {
            let l = mu.len() as i32;
            assert_eq!(f.coeff(mu.parts()).coeff(l - 2), hurwitz_genus_zero(mu.parts()), "{mu}");
        }
        // genus one, one part: d^d/d! (d-1)/24
        for d in 1..=4u32 {
            let expected = pow_q(&qi(d as i64), d as i32) / factorial(d) * q(d as i64 - 1, 24);
            assert_eq!(f.coeff(&[d]).coeff(1), expected);
        }
    }

    #[test]
    fn unstable_one_point_solves_d_equation() {
        // D H_{0,1} = y with D = (1/Q) z d/dz and X = z e^{-z}
        let d = TauData::naive_hodge();
        let n = 6;
        let f = free_energy_plain(&d, PCaps::new(n, n), HWindow::new(-1, 0)).unwrap();
        let x = ZSeries::z(n as usize).mul(&ZSeries::z(n as usize).neg().exp().unwrap());
        let h = extract_hgn(&f, &x, 0, 1, n).unwrap();
        let hz = ZSeries::from_coeffs((0..=n).map(|m| h.z_coeffs.get(&vec![m]).cloned().unwrap_or_default()).collect(), n as usize);
        let qz = ZSeries::from_ints(&[1, -1], n as usize);
        assert_eq!(hz.euler().div(&qz).unwrap(), d.y(n as usize));
    }

    #[test]
    fn family_constructors_validate() {
        let one = Poly::one();
        let r4 = Poly::from_ints(&[1, -2]);
        let d = TauData::family_two(&q(1, 3), [&Poly::from_ints(&[0, 1]), &one, &one, &r4], 6).unwrap();
        assert_eq!(d.family(), FamilyTag::FamilyII);
        let e = rescale_data(&qi(2), &d).unwrap();
        assert_eq!(e.family(), FamilyTag::ExtendedFamilyII);
        let back = rescale_data(&q(1, 2), &e).unwrap();
        assert_eq!(back.y_hat(), d.y_hat());
        let mut bad = d.y_hat().clone();
        *bad.get_mut(&(2, 2)).unwrap() += qi(1);
        assert!(TauData::new(d.psi_hat().clone(), bad, FamilyTag::FamilyII, Some(6)).is_err());
        let f1 = TauData::family_one(
            &Poly::from_ints(&[0, 1, 0, 1]),
            &Poly::from_ints(&[1, 1]),
            &Poly::one(),
            &Poly::from_ints(&[0, 1]),
            &Poly::from_ints(&[1, 1]),
            8,
        )
        .unwrap();
        assert_eq!(f1.family(), FamilyTag::FamilyI);
        assert_eq!(rescale_data(&qi(3), &f1).unwrap().family(), FamilyTag::FamilyI);
        assert!(TauData::new(BTreeMap::from([((0, 0), qi(1))]), BTreeMap::new(), FamilyTag::Generic, None).is_err());
    }

    #[test]
    fn rescale_identity() {
        let d = TauData::marino_vafa(&qi(2), &q(1, 3), 8).unwrap();
        assert_eq!(rescale_data(&qi(1), &d).unwrap(), d);
    }
}
