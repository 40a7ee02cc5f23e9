//! Spectral data `X`, `Q`, `T_l`, the linear change of variables `p(q)`,
//! the `T`-variable recursion, unstable corrections, the KP flow generator
//! and the finiteness detector.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{fmt_q, pow_q, qi, Q};
use crate::series::{BiSeries, HLaurent, HWindow, PCaps, PSeries, Poly, ZSeries};
use crate::tau::TauData;

/// `X(z)`, `Q(z) = z X'/X`, the reciprocal coefficients `T_l` of `Q`, and
/// `psi(y(z)) = log z - x(z)`, all truncated at the same order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectralData {
    pub x: ZSeries,
    pub q: ZSeries,
    pub tcal: Vec<Q>,
    pub psi_of_y: ZSeries,
}

impl SpectralData {
    /// Spectral data of an arbitrary `X = a z + O(z^2)`, `a != 0`.
    ///
    /// Dividing by `z` loses one order, so the result is exact to `z^{N-1}`.
    pub fn from_x(x: &ZSeries) -> Result<Self> {
        let n = x.order().saturating_sub(1);
        if !x.coeff(0).is_zero() || x.coeff(1).is_zero() {
            return Err(Error::Invalid("X must be a z + O(z^2) with a != 0".into()));
        }
        let ratio = Self::x_over_z(x)?;
        let a = ratio.coeff(0);
        let psi_of_y = ratio.scale(&a.recip()).log()?.neg();
        Self::assemble(x.truncate(n), psi_of_y.truncate(n))
    }

    fn x_over_z(x: &ZSeries) -> Result<ZSeries> {
        x.shift_down(1)
    }

    fn assemble(x: ZSeries, psi_of_y: ZSeries) -> Result<Self> {
        let n = x.order();
        // Q = 1 - z (psi o y)'
        let q = ZSeries::one(n).sub(&ZSeries::from_coeffs(psi_of_y.euler().coeffs().to_vec(), n));
        let tcal = tcal_coeffs(&q, n)?;
        Ok(Self { x, q, tcal, psi_of_y })
    }

    pub fn order(&self) -> usize {
        self.x.order()
    }

    /// `D = (1/Q) z d/dz`.
    pub fn d(&self, f: &ZSeries) -> Result<ZSeries> {
        f.euler().div(&self.q.truncate(f.order()))
    }
}

/// `X = z exp(-psi(y(z)))` with `Q` and `T_l`.
pub fn build_x(data: &TauData, order: usize) -> Result<SpectralData> {
    data.ensure_precision(order as u32)?;
    let psi_of_y = data.psi(order).compose(&data.y(order))?;
    let x = ZSeries::z(order).mul(&psi_of_y.neg().exp()?);
    SpectralData::assemble(x, psi_of_y)
}

/// Coefficients of `Q^{-1} = sum T_l z^l`.
pub fn tcal_coeffs(q: &ZSeries, order: usize) -> Result<Vec<Q>> {
    if !q.coeff(0).is_one() {
        return Err(Error::ConstantNotOne);
    }
    Ok(q.truncate(order).inv()?.coeffs().to_vec())
}

/// Linear form `sum_m c_m q_m`, `1 <= m <= cap`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearForm {
    coeffs: BTreeMap<u32, Q>,
    cap: u32,
}

impl LinearForm {
    pub fn new(cap: u32) -> Self {
        Self { coeffs: BTreeMap::new(), cap }
    }

    pub fn from_coeffs(c: impl IntoIterator<Item = (u32, Q)>, cap: u32) -> Self {
        let mut out = Self::new(cap);
        for (m, v) in c {
            out.add(m, v);
        }
        out
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn add(&mut self, m: u32, v: Q) {
        if m == 0 || m > self.cap || v.is_zero() {
            return;
        }
        let e = self.coeffs.entry(m).or_insert_with(Q::zero);
        *e += v;
        if e.is_zero() {
            self.coeffs.remove(&m);
        }
    }

    pub fn coeff(&self, m: u32) -> Q {
        self.coeffs.get(&m).cloned().unwrap_or_else(Q::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &Q)> {
        self.coeffs.iter().map(|(m, c)| (*m, c))
    }

    pub fn scale(&self, c: &Q) -> Self {
        Self::from_coeffs(self.coeffs.iter().map(|(m, v)| (*m, v * c)), self.cap)
    }

    pub fn to_pseries(&self, caps: PCaps, window: HWindow) -> PSeries {
        PSeries::linear(self.coeffs.iter().map(|(m, c)| (*m, c)), caps, window)
    }

    /// `sum_m c_m z^m`.
    pub fn to_zseries(&self) -> ZSeries {
        let mut z = ZSeries::zero(self.cap as usize);
        for (m, c) in &self.coeffs {
            z.set_coeff(*m as usize, c.clone());
        }
        z
    }

    /// Inverse of `to_zseries`, for the correspondence `q_m <-> z^m`.
    pub fn from_zseries(z: &ZSeries, cap: u32) -> Self {
        Self::from_coeffs((1..=cap.min(z.order() as u32)).map(|m| (m, z.coeff(m as usize))), cap)
    }

    /// JSON object `{"m": "num/den"}` with keys in increasing `m`.
    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (m, c) in &self.coeffs {
            map.insert(m.to_string(), serde_json::Value::String(fmt_q(c)));
        }
        serde_json::Value::Object(map)
    }
}

/// `p_k(q) = sum_m c_k^m q_m` with `X^k = sum_m c_k^m z^m`.
pub fn p_of_q(sd: &SpectralData, k: u32, cap: u32) -> Result<LinearForm> {
    if (cap as usize) > sd.order() {
        return Err(Error::Truncation(format!("spectral data order {} below q-cap {cap}", sd.order())));
    }
    let xk = sd.x.truncate(cap as usize).pow(k);
    Ok(LinearForm::from_zseries(&xk, cap))
}

/// Substitutes `p_k -> p_k(q)` into a p-series; the q-weight cap is that of `f`.
pub fn substitute_p_of_q(f: &PSeries, sd: &SpectralData) -> Result<PSeries> {
    let caps = f.caps();
    let forms: Vec<LinearForm> = (0..=caps.weight).map(|k| if k == 0 { Ok(LinearForm::new(0)) } else { p_of_q(sd, k, caps.weight) }).collect::<Result<_>>()?;
    f.substitute(|k| forms[k as usize].to_pseries(caps, f.window()).with_grading(f.grading()), caps)
}

/// `T^j_k` via `T^j_{-1} = q_{j+1}/(j+1)` and `T_{k+1} = sum m T_l q_{m+l} d/dq_m T_k`.
pub fn t_recursion(sd: &SpectralData, j: u32, k: i32, cap: u32) -> Result<LinearForm> {
    if k < -1 {
        return Err(Error::Invalid("T^j_k needs k >= -1".into()));
    }
    if (cap as usize) > sd.tcal.len() {
        return Err(Error::Truncation(format!("T_l known to {} terms, q-cap {cap}", sd.tcal.len())));
    }
    let mut t = LinearForm::from_coeffs([(j + 1, qi(j as i64 + 1).recip())], cap);
    for _ in -1..k {
        t = recursion_step(&t, &sd.tcal);
    }
    Ok(t)
}

/// One step `sum_m m (sum_l c_l q_{m+l}) d/dq_m` of a T-variable recursion.
pub fn recursion_step(t: &LinearForm, c: &[Q]) -> LinearForm {
    let cap = t.cap();
    let mut next = LinearForm::new(cap);
    for (m, v) in t.terms() {
        for (l, cl) in c.iter().enumerate() {
            if m + l as u32 > cap {
                break;
            }
            next.add(m + l as u32, qi(m as i64) * cl * v);
        }
    }
    next
}

/// The same forms through the correspondence `T^j_k <-> D^{k+1} z^{j+1}/(j+1)`.
pub fn t_recursion_theta(sd: &SpectralData, j: u32, k: i32, cap: u32) -> Result<LinearForm> {
    let n = cap as usize;
    if n > sd.order() {
        return Err(Error::Truncation(format!("spectral data order {} below q-cap {cap}", sd.order())));
    }
    let mut f = ZSeries::monomial(qi(j as i64 + 1).recip(), j as usize + 1, n);
    for _ in -1..k {
        f = sd.d(&f)?;
    }
    Ok(LinearForm::from_zseries(&f, cap))
}

/// Family of forms `T^j_0 .. T^j_kmax`, computed in parallel.
pub fn t_forms(sd: &SpectralData, j: u32, kmax: u32, cap: u32) -> Result<Vec<LinearForm>> {
    (0..=kmax as i32).into_par_iter().map(|k| t_recursion(sd, j, k, cap)).collect()
}

/// `H_{0,1}` as a series in `X` with `D H_{0,1} = y`, zero constant term.
pub fn unstable_h01(sd: &SpectralData, y: &ZSeries, order: usize) -> Result<ZSeries> {
    let x = sd.x.truncate(order);
    // z as a series in X
    let z_of_x = x.reversion()?;
    let y_of_x = y.truncate(order).compose(&z_of_x)?;
    if !y_of_x.coeff(0).is_zero() {
        return Err(Error::Invalid("y must vanish at z = 0".into()));
    }
    let c = (0..=order).map(|k| if k == 0 { Q::zero() } else { y_of_x.coeff(k) / qi(k as i64) }).collect();
    Ok(ZSeries::from_coeffs(c, order))
}

/// `H_{0,2} = log((z1^{-1} - z2^{-1}) / (X1^{-1} - X2^{-1}))`, split as a
/// constant `log(log_arg)` plus a bivariate series vanishing at the origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct H02 {
    pub log_arg: Q,
    pub series: BiSeries,
}

/// `H_{0,2}` for an arbitrary `X = a z + O(z^2)`.
pub fn h02_of(x: &ZSeries, order: u32) -> Result<H02> {
    let n = order as usize;
    let x = x.truncate(n + 1);
    let a = x.coeff(1);
    if a.is_zero() {
        return Err(Error::ZeroLinearCoefficient);
    }
    // 1/X = (1/(a z)) (1 + sigma(z))
    if x.order() < n + 1 {
        return Err(Error::Truncation(format!("X known to z^{}, need z^{}", x.order(), n + 1)));
    }
    let ratio = x.shift_down(1)?.scale(&a.recip());
    let sigma = ratio.inv()?.sub(&ZSeries::one(n));
    // (X1^{-1} - X2^{-1}) / (z1^{-1} - z2^{-1}) = (1/a)(1 + delta),
    // delta = -sum_k sigma_k z1 z2 h_{k-2}(z1, z2)
    let mut delta = BiSeries::zero(order);
    for k in 2..=n {
        let s = sigma.coeff(k);
        if s.is_zero() {
            continue;
        }
        for i in 0..=(k - 2) as u32 {
            delta.add_term(i + 1, (k - 2) as u32 - i + 1, -s.clone());
        }
    }
    Ok(H02 { log_arg: a, series: delta.log1p()?.scale(&qi(-1)) })
}

pub fn unstable_h02(sd: &SpectralData, order: u32) -> Result<H02> {
    h02_of(&sd.x, order)
}

/// The generator `A = (1 - 1/Q(beta z))(z/beta) d/dz - 1/2 dH_{0,2}/dbeta|_X`.
///
/// `euler[m]` is the coefficient `e_m` of `z^{m+1} d/dz`, i.e. of the
/// differential part of `L_m`; `quadratic` is the polynomial part
/// `sum_m e_m 1/2 sum_{k=1}^{m-1} z1^k z2^{m-k}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowGenerator {
    pub beta: Q,
    pub euler: Vec<Q>,
    pub quadratic: BiSeries,
}

impl FlowGenerator {
    /// Number of nonzero `L_m` components.
    pub fn support(&self) -> usize {
        self.euler.iter().filter(|c| !c.is_zero()).count()
    }
}

/// `X_beta(z) = X(beta z)/beta`.
pub fn x_beta(x: &ZSeries, beta: &Q) -> ZSeries {
    let n = x.order();
    let c = (0..=n).map(|k| if k == 0 { Q::zero() } else { x.coeff(k) * pow_q(beta, k as i32 - 1) }).collect();
    ZSeries::from_coeffs(c, n)
}

pub fn flow_generator(sd: &SpectralData, beta: &Q, order: u32) -> Result<FlowGenerator> {
    if beta.is_zero() {
        return Err(Error::Invalid("beta must be nonzero".into()));
    }
    let n = order as usize;
    let qb = sd.q.truncate(n).rescale(beta);
    let e = ZSeries::one(n).sub(&qb.inv()?).scale(&beta.recip());
    let euler = e.coeffs().to_vec();
    let mut quadratic = BiSeries::zero(order);
    for (m, em) in euler.iter().enumerate() {
        for k in 1..m as u32 {
            quadratic.add_term(k, m as u32 - k, em / qi(2));
        }
    }
    Ok(FlowGenerator { beta: beta.clone(), euler, quadratic })
}

/// `dX_beta/dbeta - (1 - 1/Q(beta z))(z/beta) dX_beta/dz`, expected to vanish.
pub fn flow_residual(sd: &SpectralData, beta: &Q, order: u32) -> Result<ZSeries> {
    let n = order as usize;
    let x = sd.x.truncate(n);
    let xb = x_beta(&x, beta);
    let dxb = ZSeries::from_coeffs(
        (0..=n).map(|k| if k < 2 { Q::zero() } else { x.coeff(k) * qi(k as i64 - 1) * pow_q(beta, k as i32 - 2) }).collect(),
        n,
    );
    let gen = flow_generator(sd, beta, order)?;
    let e = ZSeries::from_coeffs(gen.euler.clone(), n);
    Ok(dxb.sub(&e.mul(&xb.euler())))
}

/// `-1/2 dH_{0,2}/dbeta` at fixed `X`, re-expanded in `z`; equals the quadratic part of the generator.
pub fn quadratic_from_h02(sd: &SpectralData, beta: &Q, order: u32) -> Result<BiSeries> {
    let n = order as usize;
    let x = sd.x.truncate(n + 1);
    // G(X1, X2) = log((1/z1 - 1/z2)/(1/X1 - 1/X2)) with z = z(X): minus H_{0,2} of z(X)
    let z_of_x = x.reversion()?;
    let g = h02_of(&z_of_x, order)?.series.scale(&qi(-1));
    // G_beta(X1, X2) = G(beta X1, beta X2); its beta-derivative scales degree d by d beta^{d-1}
    let dg = g.map_by_degree(|d| qi(d as i64) * pow_q(beta, d as i32 - 1));
    let xb = x_beta(&x, beta).truncate(n);
    Ok(dg.compose(&xb)?.scale(&Q::new((-1).into(), 2.into())))
}

/// Outcome of the polynomial test on `P = Q^{-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Finiteness {
    /// `P(z) = prod (1 - c_j z)` of degree `r + 1`.
    Polynomial {
        degree: u32,
        #[serde(serialize_with = "ser_qs")]
        coefficients: Vec<Q>,
        /// `(c_j, multiplicity)`; empty when `P` has no rational factorization.
        #[serde(serialize_with = "ser_qpairs")]
        c: Vec<(Q, usize)>,
        factored: bool,
        /// `(c_j, A_j)` with `x = log z - sum_j A_j log(1 - c_j z)`, for distinct `c_j`.
        #[serde(serialize_with = "ser_qqpairs")]
        log_terms: Vec<(Q, Q)>,
    },
    NotPolynomial { cap: u32 },
}

fn ser_qs<S: serde::Serializer>(v: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(fmt_q))
}

fn ser_qpairs<S: serde::Serializer>(v: &[(Q, usize)], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|(a, m)| (fmt_q(a), *m)))
}

fn ser_qqpairs<S: serde::Serializer>(v: &[(Q, Q)], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|(a, b)| (fmt_q(a), fmt_q(b))))
}

impl Finiteness {
    pub fn is_polynomial(&self) -> bool {
        matches!(self, Finiteness::Polynomial { .. })
    }

    /// `r`, one less than the degree of `P`.
    pub fn r(&self) -> Option<i64> {
        match self {
            Finiteness::Polynomial { degree, .. } => Some(*degree as i64 - 1),
            Finiteness::NotPolynomial { .. } => None,
        }
    }
}

/// Decides whether `Q^{-1}` is a polynomial of degree at most `cap - 1`
/// (all `T_l` with `deg < l <= cap` vanish) and factors it over the rationals.
pub fn finiteness_check(sd: &SpectralData, cap: u32) -> Result<Finiteness> {
    if cap as usize >= sd.tcal.len() {
        return Err(Error::Truncation(format!("T_l known to {} terms, cap {cap}", sd.tcal.len())));
    }
    let t = &sd.tcal[..=cap as usize];
    let Some(deg) = (0..cap as usize).rev().find(|&l| !t[l].is_zero()) else {
        return Ok(Finiteness::NotPolynomial { cap });
    };
    if !t[cap as usize].is_zero() {
        return Ok(Finiteness::NotPolynomial { cap });
    }
    if t[deg + 1..].iter().any(|c| !c.is_zero()) {
        return Ok(Finiteness::NotPolynomial { cap });
    }
    let p = Poly::new(t[..=deg].to_vec());
    let roots = p.rational_roots();
    let found: usize = roots.iter().map(|r| r.1).sum();
    let factored = found == deg;
    let c: Vec<(Q, usize)> = if factored { roots.iter().map(|(r, m)| (r.recip(), *m)).collect() } else { Vec::new() };
    let mut c_sorted = c.clone();
    c_sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let log_terms = if factored && c_sorted.iter().all(|(_, m)| *m == 1) {
        c_sorted
            .iter()
            .map(|(cj, _)| {
                let mut prod = Q::one();
                for (ck, _) in &c_sorted {
                    if ck != cj {
                        prod *= Q::one() - ck / cj;
                    }
                }
                (cj.clone(), prod.recip())
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(Finiteness::Polynomial { degree: deg as u32, coefficients: t[..=deg].to_vec(), c: c_sorted, factored, log_terms })
}

/// `-sum_j A_j log(1 - c_j z)`, the non-logarithmic part of `x`, predicted by the factorization.
pub fn predicted_psi_of_y(verdict: &Finiteness, order: usize) -> Option<ZSeries> {
    let Finiteness::Polynomial { log_terms, degree, .. } = verdict else { return None };
    if log_terms.is_empty() && *degree > 0 {
        return None;
    }
    let mut out = ZSeries::zero(order);
    for (c, a) in log_terms {
        let l = ZSeries::from_coeffs(vec![Q::one(), -c.clone()], order).log().ok()?;
        out = out.add(&l.scale(a));
    }
    Some(out)
}

/// Convenience for tests and tables: hbar-free linear form as an hbar series.
pub fn linear_form_coeff_h(form: &LinearForm, m: u32, window: HWindow) -> HLaurent {
    HLaurent::constant(form.coeff(m), window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{binomial_q, q};

    fn naive() -> SpectralData {
        build_x(&TauData::naive_hodge(), 10).unwrap()
    }

    fn mobius(a: &Q, b: &Q, n: usize) -> SpectralData {
        let x = ZSeries::from_coeffs(vec![Q::one(), b.clone()], n).inv().unwrap().shift_up(1).scale(a);
        SpectralData::from_x(&x).unwrap()
    }

    fn triple_hodge_x(w: &Q, beta: &Q, n: usize) -> ZSeries {
        // z/(1+(w+1)beta z) ((1+beta z)/(1+(w+1)beta z))^{1/w}
        let den = ZSeries::from_coeffs(vec![Q::one(), (w + qi(1)) * beta], n);
        let num = ZSeries::from_coeffs(vec![Q::one(), beta.clone()], n);
        let base = num.div(&den).unwrap().pow_rational(&w.recip()).unwrap();
        ZSeries::z(n).mul(&den.inv().unwrap()).mul(&base)
    }

    #[test]
    fn naive_hodge_spectral_data() {
        let sd = naive();
        let mut e = ZSeries::z(10).neg().exp().unwrap().shift_up(1);
        e = e.truncate(10);
        assert_eq!(sd.x, e);
        assert_eq!(sd.q, ZSeries::from_ints(&[1, -1], 10));
        assert!(sd.tcal.iter().all(|t| t.is_one()));
    }

    #[test]
    fn zero_psi_gives_identity() {
        let d = TauData::new(BTreeMap::new(), BTreeMap::from([((1, 0), qi(1))]), crate::tau::FamilyTag::Generic, None).unwrap();
        let sd = build_x(&d, 6).unwrap();
        assert_eq!(sd.x, ZSeries::z(6));
        assert_eq!(sd.q, ZSeries::one(6));
        let p = p_of_q(&sd, 3, 6).unwrap();
        assert_eq!(p, LinearForm::from_coeffs([(3, qi(1))], 6));
        assert_eq!(t_recursion(&sd, 1, 2, 6).unwrap(), LinearForm::from_coeffs([(2, q(4, 1))], 6));
    }

    #[test]
    fn marino_vafa_x_matches_binomial_expansion() {
        let d = TauData::marino_vafa(&qi(3), &qi(1), 10).unwrap();
        let sd = build_x(&d, 8).unwrap();
        // z (1 - 3z)^{1/3}
        for k in 0..8usize {
            let expected = binomial_q(&q(1, 3), k as u32) * pow_q(&qi(-3), k as i32);
            assert_eq!(sd.x.coeff(k + 1), expected);
        }
    }

    #[test]
    fn tcal_examples() {
        assert_eq!(tcal_coeffs(&ZSeries::one(4), 4).unwrap(), vec![qi(1), qi(0), qi(0), qi(0), qi(0)]);
        let p = ZSeries::from_ints(&[1, 3, 2], 5);
        let qz = p.inv().unwrap();
        assert_eq!(tcal_coeffs(&qz, 5).unwrap(), vec![qi(1), qi(3), qi(2), qi(0), qi(0), qi(0)]);
    }

    #[test]
    fn p_of_q_naive_hodge() {
        let p1 = p_of_q(&naive(), 1, 5).unwrap();
        assert_eq!(p1.coeff(1), qi(1));
        assert_eq!(p1.coeff(2), qi(-1));
        assert_eq!(p1.coeff(3), q(1, 2));
        assert_eq!(p1.coeff(4), q(-1, 6));
        for k in 1..=5 {
            let pk = p_of_q(&naive(), k, 8).unwrap();
            assert_eq!(pk.coeff(k), qi(1));
            assert!((1..k).all(|m| pk.coeff(m).is_zero()));
        }
    }

    #[test]
    fn stirling_rows() {
        let sd = naive();
        let rows = [[1, 1, 1, 1, 1], [1, 3, 6, 10, 15], [1, 7, 25, 65, 140]];
        for (k, row) in rows.iter().enumerate() {
            let t = t_recursion(&sd, 0, k as i32, 5).unwrap();
            for (m, v) in row.iter().enumerate() {
                assert_eq!(t.coeff(m as u32 + 1), qi(*v));
            }
        }
    }

    #[test]
    fn both_t_routes_agree() {
        let w = q(2, 3);
        let datasets = [naive(), SpectralData::from_x(&triple_hodge_x(&w, &q(1, 2), 10)).unwrap(), mobius(&qi(2), &q(-1, 3), 10)];
        for sd in &datasets {
            for j in 0..=3 {
                for k in -1..=4 {
                    assert_eq!(t_recursion(sd, j, k, 9).unwrap(), t_recursion_theta(sd, j, k, 9).unwrap(), "j={j} k={k}");
                }
            }
        }
    }

    #[test]
    fn h01_inverts_d() {
        let d = TauData::naive_hodge();
        let sd = naive();
        let h = unstable_h01(&sd, &d.y(10), 10).unwrap();
        assert_eq!(h.coeff(1), qi(1));
        let hz = h.compose(&sd.x).unwrap();
        assert_eq!(sd.d(&hz).unwrap(), d.y(10));
        assert!(unstable_h01(&sd, &ZSeries::zero(10), 10).unwrap().is_zero());
    }

    #[test]
    fn h02_examples() {
        let id = SpectralData::from_x(&ZSeries::z(8)).unwrap();
        let h = unstable_h02(&id, 6).unwrap();
        assert!(h.series.is_zero() && h.log_arg.is_one());
        let h = unstable_h02(&naive(), 6).unwrap();
        assert_eq!(h.series.coeff(1, 1), q(1, 2));
        assert!(h.series.is_symmetric());
        let m = unstable_h02(&mobius(&qi(3), &q(2, 5), 10), 8).unwrap();
        assert_eq!(m.log_arg, qi(3));
        assert!(m.series.is_zero());
        let m1 = unstable_h02(&mobius(&qi(1), &q(2, 5), 10), 8).unwrap();
        assert!(m1.series.is_zero() && m1.log_arg.is_one());
    }

    #[test]
    fn flow_along_beta() {
        let sd = naive();
        assert!(flow_residual(&sd, &q(3, 2), 8).unwrap().is_zero());
        let id = SpectralData::from_x(&ZSeries::z(10)).unwrap();
        let g = flow_generator(&id, &qi(2), 8).unwrap();
        assert_eq!(g.support(), 0);
        assert!(g.quadratic.is_zero());
    }

    #[test]
    fn quadratic_part_is_h02_derivative() {
        let w = q(3, 5);
        let sd = SpectralData::from_x(&triple_hodge_x(&w, &qi(1), 10)).unwrap();
        for beta in [qi(1), q(1, 2), q(-2, 3)] {
            let g = flow_generator(&sd, &beta, 6).unwrap();
            assert_eq!(g.quadratic, quadratic_from_h02(&sd, &beta, 6).unwrap());
        }
        let g = flow_generator(&naive(), &q(1, 3), 6).unwrap();
        assert_eq!(g.quadratic, quadratic_from_h02(&naive(), &q(1, 3), 6).unwrap());
    }

    #[test]
    fn finiteness_verdicts() {
        assert_eq!(finiteness_check(&naive(), 8).unwrap(), Finiteness::NotPolynomial { cap: 8 });
        let m = finiteness_check(&mobius(&qi(1), &q(2, 5), 10), 8).unwrap();
        assert_eq!(m.r(), Some(0));
        let (w, beta) = (q(3, 5), q(1, 2));
        let sd = SpectralData::from_x(&triple_hodge_x(&w, &beta, 12)).unwrap();
        let v = finiteness_check(&sd, 10).unwrap();
        assert_eq!(v.r(), Some(1));
        let Finiteness::Polynomial { c, .. } = &v else { unreachable!() };
        let mut expected = vec![(-beta.clone(), 1), (-(w + qi(1)) * beta, 1)];
        expected.sort_by(|a, b| a.0.cmp(&b.0));
        assert_eq!(c, &expected);
        assert_eq!(predicted_psi_of_y(&v, sd.order()).unwrap(), sd.psi_of_y);
    }

    #[test]
    fn linear_form_json_is_sorted() {
        let f = LinearForm::from_coeffs([(10, q(1, 2)), (2, qi(-3))], 12);
        assert_eq!(f.to_json().to_string(), r#"{"10":"1/2","2":"-3/1"}"#);
    }
}
