//! Intersection numbers, CohFT generating functions, and the Hodge-type
//! scenarios: naive single Hodge, triple Hodge via the Mariño–Vafa
//! partition function, and the explicit series inversion behind it.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::changevars::{build_x, recursion_step, substitute_p_of_q, t_forms, LinearForm, SpectralData};
use crate::error::{Error, Result};
use crate::partitions::{character, enumerate_partitions, f2, hook_lengths, partitions_up_to, z_factor, Partition};
use crate::rational::{binomial_q, factorial, fmt_q, is_square, parse_q, pow_q, q, qi, Q};
use crate::series::{s_inv_series, s_of_hbar, Grading, HLaurent, HWindow, PCaps, PSeries, SMode, ZSeries};
use crate::tau::{build_tau, free_energy_plain, FamilyTag, TauData};

type Key = (u32, Vec<u32>, Vec<u32>);

/// Table of `int_{M_{g,n}} prod psi_i^{d_i} prod lambda_j`.
///
/// Keys hold sorted psi exponents and sorted lambda indices (`[1, 1]` is
/// `lambda_1^2`). `coverage` lists the `(g, n)` for which the table is
/// complete; queries elsewhere fail.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IntersectionTable {
    entries: BTreeMap<Key, Q>,
    coverage: BTreeSet<(u32, u32)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryJson {
    g: u32,
    psi: Vec<u32>,
    lambda: Vec<u32>,
    value: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableJson {
    coverage: Vec<(u32, u32)>,
    entries: Vec<EntryJson>,
}

fn multisets(n: usize, total: u32) -> Vec<Vec<u32>> {
    // weakly increasing sequences of length n summing to total
    fn rec(n: usize, total: u32, min: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if n == 0 {
            if total == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        let mut d = min;
        while d * n as u32 <= total {
            prefix.push(d);
            rec(n - 1, total - d, d, prefix, out);
            prefix.pop();
            d += 1;
        }
    }
    let mut out = Vec::new();
    rec(n, total, 0, &mut Vec::new(), &mut out);
    out
}

fn dim(g: u32, n: u32) -> i64 {
    3 * g as i64 - 3 + n as i64
}

/// Value from the seeds `<tau_0^3>_0 = 1`, `<tau_1>_1 = <lambda_1>_{1,1} = 1/24`
/// by the string and dilaton equations; `lambda` classes pull back along
/// forgetful maps, and `lambda_1^2 = 0` in genus one.
fn derive_value(g: u32, ds: &[u32], lam: &[u32]) -> Result<Q> {
    let n = ds.len() as u32;
    let deg = ds.iter().sum::<u32>() as i64 + lam.iter().sum::<u32>() as i64;
    if 2 * g as i64 - 2 + n as i64 <= 0 || deg != dim(g, n) {
        return Ok(Q::zero());
    }
    if lam.iter().any(|&i| i > g) || (g == 1 && lam.len() > 1) {
        return Ok(Q::zero());
    }
    match (g, n) {
        (0, 3) => return Ok(Q::one()),
        (1, 1) => return Ok(q(1, 24)),
        _ => {}
    }
    if let Some(pos) = ds.iter().position(|&d| d == 0) {
        let mut rest = ds.to_vec();
        rest.remove(pos);
        let mut sum = Q::zero();
        for j in 0..rest.len() {
            if rest[j] > 0 {
                let mut r = rest.clone();
                r[j] -= 1;
                r.sort_unstable();
                sum += derive_value(g, &r, lam)?;
            }
        }
        return Ok(sum);
    }
    if let Some(pos) = ds.iter().position(|&d| d == 1) {
        let mut rest = ds.to_vec();
        rest.remove(pos);
        return Ok(qi(2 * g as i64 - 3 + n as i64) * derive_value(g, &rest, lam)?);
    }
    Err(Error::OutOfTable(format!("g={g} psi={ds:?} lambda={lam:?} not reachable by string/dilaton")))
}

impl IntersectionTable {
    /// Genus 0 and 1, `n <= n_max`: every entry with a psi/lambda_1 insertion.
    pub fn builtin(n_max: u32) -> Result<Self> {
        let mut t = Self::default();
        for g in 0..=1u32 {
            for n in 1..=n_max {
                if 2 * g as i64 - 2 + n as i64 <= 0 {
                    continue;
                }
                t.coverage.insert((g, n));
                let lams: Vec<Vec<u32>> = if g == 0 { vec![vec![]] } else { vec![vec![], vec![1]] };
                for lam in lams {
                    let rest = dim(g, n) - lam.iter().sum::<u32>() as i64;
                    if rest < 0 {
                        continue;
                    }
                    for ds in multisets(n as usize, rest as u32) {
                        let v = derive_value(g, &ds, &lam)?;
                        if !v.is_zero() {
                            t.entries.insert((g, ds, lam.clone()), v);
                        }
                    }
                }
            }
        }
        Ok(t)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() && self.coverage.is_empty()
    }

    pub fn covers(&self, g: u32, n: u32) -> bool {
        self.coverage.contains(&(g, n))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn insert(&mut self, g: u32, psi: &[u32], lambda: &[u32], value: Q) {
        let (mut p, mut l) = (psi.to_vec(), lambda.to_vec());
        p.sort_unstable();
        l.sort_unstable();
        self.coverage.insert((g, p.len() as u32));
        self.entries.insert((g, p, l), value);
    }

    pub fn intersection_number(&self, g: u32, psi: &[u32], lambda: &[u32]) -> Result<Q> {
        let n = psi.len() as u32;
        if !self.covers(g, n) {
            return Err(Error::OutOfTable(format!("(g, n) = ({g}, {n})")));
        }
        let deg = psi.iter().sum::<u32>() as i64 + lambda.iter().sum::<u32>() as i64;
        if deg != dim(g, n) {
            return Ok(Q::zero());
        }
        let (mut p, mut l) = (psi.to_vec(), lambda.to_vec());
        p.sort_unstable();
        l.sort_unstable();
        Ok(self.entries.get(&(g, p, l)).cloned().unwrap_or_else(Q::zero))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let t = TableJson {
            coverage: self.coverage.iter().cloned().collect(),
            entries: self
                .entries
                .iter()
                .map(|((g, p, l), v)| EntryJson { g: *g, psi: p.clone(), lambda: l.clone(), value: fmt_q(v) })
                .collect(),
        };
        serde_json::to_value(t).expect("table serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let t: TableJson = serde_json::from_value(v.clone()).map_err(|e| Error::Parse(e.to_string()))?;
        let mut out = Self::default();
        for (g, n) in t.coverage {
            out.coverage.insert((g, n));
        }
        for e in t.entries {
            if !out.covers(e.g, e.psi.len() as u32) {
                return Err(Error::Parse(format!("entry outside declared coverage: g={} psi={:?}", e.g, e.psi)));
            }
            out.insert(e.g, &e.psi, &e.lambda, parse_q(&e.value)?);
        }
        Ok(out)
    }
}

/// `prod_j Lambda(a_j)` in genus `g` as lambda-monomials with coefficients.
pub fn lambda_expansion(weights: &[Q], g: u32) -> Vec<(Vec<u32>, Q)> {
    let mut acc: BTreeMap<Vec<u32>, Q> = BTreeMap::from([(Vec::new(), Q::one())]);
    for a in weights {
        let mut next: BTreeMap<Vec<u32>, Q> = BTreeMap::new();
        for (m, c) in &acc {
            for i in 0..=g {
                let coef = c * pow_q(a, i as i32);
                if coef.is_zero() {
                    continue;
                }
                let mut m2 = m.clone();
                if i > 0 {
                    m2.push(i);
                    m2.sort_unstable();
                }
                *next.entry(m2).or_insert_with(Q::zero) += coef;
            }
        }
        next.retain(|_, c| !c.is_zero());
        acc = next;
    }
    acc.into_iter().collect()
}

/// `G_Omega(T) = sum hbar^{2g-2+n}/n! sum_d int Omega prod psi_i^{d_i} T_{d_i}`
/// over the stable `(g, n)` whose hbar exponent lies in `window`, with
/// `Omega = prod_j Lambda(weights_j)` and `t[d] = T_d`.
pub fn cohft_generating(
    table: &IntersectionTable,
    weights: &[Q],
    t: &[LinearForm],
    caps: PCaps,
    window: HWindow,
) -> Result<PSeries> {
    let inner = HWindow::new(0, window.hi.max(0));
    let mut out = PSeries::zero(caps, inner);
    if table.is_empty() {
        return Ok(restrict(&out, window));
    }
    let tser: Vec<PSeries> = t.iter().map(|f| f.to_pseries(caps, inner)).collect();
    for e in window.lo.max(1)..=window.hi {
        for g in 0..=((e + 1) / 2) as u32 {
            let n = e + 2 - 2 * g as i32;
            if n < 1 || n as u32 > caps.parts {
                continue;
            }
            let n = n as u32;
            if !table.covers(g, n) {
                return Err(Error::OutOfTable(format!("hbar^{e} needs (g, n) = ({g}, {n})")));
            }
            for (lam, lc) in lambda_expansion(weights, g) {
                let rest = dim(g, n) - lam.iter().sum::<u32>() as i64;
                if rest < 0 {
                    continue;
                }
                for ds in multisets(n as usize, rest as u32) {
                    let v = table.intersection_number(g, &ds, &lam)?;
                    if v.is_zero() {
                        continue;
                    }
                    let mut mult = Q::one();
                    let mut prod = PSeries::one(caps, inner);
                    for (i, d) in ds.iter().enumerate() {
                        let f = tser.get(*d as usize).ok_or_else(|| {
                            Error::Truncation(format!("T_{d} needed, only {} forms given", tser.len()))
                        })?;
                        prod = prod.mul(f)?;
                        if i == 0 || ds[i - 1] != *d {
                            mult *= factorial(ds.iter().filter(|x| *x == d).count() as u32);
                        }
                    }
                    let c = HLaurent::monomial(&v * &lc / mult, e, inner);
                    out = out.add(&prod.scale_h(&c)?);
                }
            }
        }
    }
    Ok(restrict(&out, window))
}

/// Triple-Hodge parameters `(u, s)` with `w = s^2 - 1`, so that `sqrt(w + 1) = s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleHodgeParams {
    u: Q,
    s: Q,
}

impl TripleHodgeParams {
    pub fn new(u: Q, s: Q) -> Result<Self> {
        if s.is_zero() {
            return Err(Error::Invalid(
                "s = 0 means w = -1, where X is a Möbius map; use the moebius scenario instead".into(),
            ));
        }
        Ok(Self { u, s })
    }

    /// From `w`, provided `w + 1` is the square of a rational.
    pub fn from_w(u: Q, w: &Q) -> Result<Self> {
        if *w == qi(-1) {
            return Self::new(u, Q::zero());
        }
        let s = is_square(&(w + qi(1)))
            .ok_or_else(|| Error::Invalid(format!("w + 1 = {} is not a rational square", fmt_q(&(w + qi(1))))))?;
        Self::new(u, s)
    }

    pub fn u(&self) -> &Q {
        &self.u
    }

    pub fn s(&self) -> &Q {
        &self.s
    }

    pub fn w(&self) -> Q {
        &self.s * &self.s - qi(1)
    }

    /// `beta = u^3 / s`.
    pub fn beta(&self) -> Q {
        pow_q(&self.u, 3) / &self.s
    }

    /// `(-u^2, -u^2 w, u^2 w / (w + 1))`.
    pub fn cy_triple(&self) -> [Q; 3] {
        let u2 = &self.u * &self.u;
        let w = self.w();
        [-u2.clone(), -(&u2 * &w), &u2 * &w / (&self.s * &self.s)]
    }

    /// `1/a + 1/b + 1/c`, or `None` when a weight vanishes.
    pub fn cy_residual(&self) -> Option<Q> {
        let t = self.cy_triple();
        if t.iter().any(Zero::is_zero) {
            return None;
        }
        Some(t.iter().map(|x| x.recip()).sum())
    }

    /// Coefficients `(u^2, u (w + 2)/sqrt(w + 1), 1)` of the T-recursion step.
    pub fn step_coeffs(&self) -> [Q; 3] {
        let u2 = &self.u * &self.u;
        [u2, &self.u * (&self.s * &self.s + qi(1)) / &self.s, Q::one()]
    }

    /// Rescaling `hbar_G = (s / u^3) hbar` between the Mariño–Vafa genus parameter and `G_TH`.
    pub fn hbar_scale(&self) -> Result<Q> {
        if self.u.is_zero() {
            return Err(Error::Invalid("u = 0 has no Mariño–Vafa realization".into()));
        }
        Ok(&self.s / pow_q(&self.u, 3))
    }
}

/// `T_k` with `T_0 = q_1`, `T_{k+1} = sum m (u^2 q_m + u (w+2)/sqrt(w+1) q_{m+1} + q_{m+2}) d/dq_m T_k`.
pub fn triple_hodge_t(params: &TripleHodgeParams, k: u32, cap: u32) -> LinearForm {
    let c = params.step_coeffs();
    let mut t = LinearForm::from_coeffs([(1, Q::one())], cap);
    for _ in 0..k {
        t = recursion_step(&t, &c);
    }
    t
}

/// `(1 + c z)^alpha` to order `n` by the binomial series.
fn binomial_power(c: &Q, alpha: &Q, n: usize) -> ZSeries {
    ZSeries::from_coeffs((0..=n).map(|k| binomial_q(alpha, k as u32) * pow_q(c, k as i32)).collect(), n)
}

/// `X = z/(1+(w+1)beta z) ((1+beta z)/(1+(w+1)beta z))^{1/w}`; at `w = 0` the
/// limit `z/(1+beta z) exp(-beta z/(1+beta z))`.
pub fn inversion_x(w: &Q, beta: &Q, n: usize) -> Result<ZSeries> {
    let a = (w + qi(1)) * beta;
    let pre = ZSeries::z(n).mul(&binomial_power(&a, &qi(-1), n));
    if w.is_zero() {
        let m = ZSeries::z(n).mul(&binomial_power(beta, &qi(-1), n)).scale(beta);
        return Ok(pre.mul(&m.neg().exp()?));
    }
    let e = w.recip();
    Ok(pre.mul(&binomial_power(beta, &e, n)).mul(&binomial_power(&a, &-e, n)))
}

/// `C_m = prod_{j=1}^{m-1} (m + j w) / (m-1)! beta^{m-1}`.
pub fn inversion_coeff(w: &Q, beta: &Q, m: u32) -> Q {
    let mut c = pow_q(beta, m as i32 - 1) / factorial(m - 1);
    for j in 1..m {
        c *= qi(m as i64) + qi(j as i64) * w;
    }
    c
}

/// `z(X) = sum_m C_m X^m`.
pub fn inversion_z_of_x(w: &Q, beta: &Q, n: usize) -> ZSeries {
    ZSeries::from_coeffs((0..=n).map(|m| if m == 0 { Q::zero() } else { inversion_coeff(w, beta, m as u32) }).collect(), n)
}

/// `z(X(z)) - z` and `X(z(X)) - X`, both expected to vanish to order `n`.
pub fn inversion_check(w: &Q, beta: &Q, n: usize) -> Result<(ZSeries, ZSeries)> {
    let x = inversion_x(w, beta, n)?;
    let zx = inversion_z_of_x(w, beta, n);
    Ok((zx.compose(&x)?.sub(&ZSeries::z(n)), x.compose(&zx)?.sub(&ZSeries::z(n))))
}

/// `X = z (1 - beta w z)^{1/w}`; at `w = 0` the limit `z e^{-beta z}`.
pub fn mv_x(w: &Q, beta: &Q, n: usize) -> Result<ZSeries> {
    if w.is_zero() {
        return Ok(ZSeries::z(n).mul(&ZSeries::z(n).scale(&-beta.clone()).exp()?));
    }
    Ok(ZSeries::z(n).mul(&binomial_power(&-(beta * w), &w.recip(), n)))
}

/// `X_inv(z) - X_mv(z / (1 + (w+1) beta z))`, expected to vanish.
pub fn moebius_relation_check(w: &Q, beta: &Q, n: usize) -> Result<ZSeries> {
    let m = ZSeries::z(n).mul(&binomial_power(&((w + qi(1)) * beta), &qi(-1), n));
    Ok(inversion_x(w, beta, n)?.sub(&mv_x(w, beta, n)?.compose(&m)?))
}

/// `dX/dbeta + ((w+2) z + (w+1) beta z^2) z dX/dz` for the inversion-lemma `X`.
pub fn xdiff_residual(w: &Q, beta: &Q, n: usize) -> Result<ZSeries> {
    let x1 = inversion_x(w, &qi(1), n)?;
    let x = crate::changevars::x_beta(&x1, beta);
    let dbeta = ZSeries::from_coeffs(
        (0..=n).map(|k| if k < 2 { Q::zero() } else { x1.coeff(k) * qi(k as i64 - 1) * pow_q(beta, k as i32 - 2) }).collect(),
        n,
    );
    let op = ZSeries::from_coeffs(vec![Q::zero(), w + qi(2), (w + qi(1)) * beta], n);
    Ok(dbeta.add(&op.mul(&x.euler())))
}

fn character_sum(
    m: u32,
    window: HWindow,
    diag: impl Fn(&Partition) -> Result<HLaurent> + Sync,
) -> Result<PSeries> {
    let caps = PCaps::new(m, m);
    let diag: BTreeMap<Partition, HLaurent> =
        partitions_up_to(m).into_par_iter().map(|nu| Ok((nu.clone(), diag(&nu)?))).collect::<Result<_>>()?;
    let terms: Vec<(Partition, HLaurent)> = partitions_up_to(m)
        .into_par_iter()
        .map(|mu| {
            let mut acc = HLaurent::zero(window);
            for nu in enumerate_partitions(mu.size()) {
                let chi = character(&nu, &mu)?;
                if !chi.is_zero() {
                    acc = acc.add(&diag[&nu].scale(&Q::from_integer(chi)));
                }
            }
            Ok((mu.clone(), acc.scale(&z_factor(&mu).recip())))
        })
        .collect::<Result<_>>()?;
    let mut out = PSeries::zero(caps, window);
    for (mu, c) in terms {
        out.add_term(mu.parts().to_vec(), c);
    }
    Ok(out)
}

fn box_product(nu: &Partition, factor: impl Fn(u32) -> HLaurent, inner: HWindow) -> Result<HLaurent> {
    let mut acc = HLaurent::one(inner);
    for h in hook_lengths(nu) {
        acc = acc.mul(&factor(h))?;
    }
    Ok(acc)
}

fn check_floor(nu: &Partition, window: HWindow) -> Result<()> {
    let floor = -(nu.size() as i32);
    if floor < window.lo {
        return Err(Error::WindowUnderflow { exponent: floor, floor: window.lo });
    }
    Ok(())
}

/// `sum_{mu, nu} chi^nu_mu / z_mu e^{(1/w + 1/2) hbar f_2(nu)} prod_box beta w / varsigma(hbar h) p_mu`
/// for `|mu| <= m`, the Mariño–Vafa sum after `beta -> hbar/w`, `p_k -> (beta w/hbar)^k p_k`.
pub fn mv_rhs(w: &Q, beta: &Q, m: u32, window: HWindow) -> Result<PSeries> {
    if w.is_zero() {
        return Err(Error::Invalid("w must be nonzero".into()));
    }
    let bw = beta * w;
    let coef = w.recip() + q(1, 2);
    character_sum(m, window, |nu| {
        check_floor(nu, window)?;
        let inner = HWindow::new(window.lo - 1, window.hi + nu.size() as i32 + 1);
        let boxes = box_product(nu, |h| crate::series::inv_varsigma_of_hbar(&qi(h as i64), inner), inner)?;
        let e = HLaurent::monomial(&coef * f2(nu), 1, inner).exp()?;
        Ok(boxes.mul(&e)?.scale(&pow_q(&bw, nu.size() as i32)).with_window(window))
    })
}

/// `sum chi^nu_mu / z_mu e^{(1 + w/2) hbar f_2(nu)} prod_box w / varsigma(hbar w h) p_mu`,
/// the Mariño–Vafa sum with `beta` playing the role of `hbar` and one `hbar` per
/// unit of `|mu|` removed; at `w = 0` the box factor is `1/(hbar h)`.
pub fn mv_rhs_genus(w: &Q, m: u32, window: HWindow) -> Result<PSeries> {
    let coef = qi(1) + w / qi(2);
    character_sum(m, window, |nu| {
        check_floor(nu, window)?;
        let inner = HWindow::new(window.lo - 1, window.hi + nu.size() as i32 + 1);
        let boxes = box_product(
            nu,
            |h| {
                let s = s_of_hbar(&(w * qi(h as i64)), SMode::Inverse, inner);
                s.shift(-1).expect("window admits hbar^-1").scale(&qi(h as i64).recip())
            },
            inner,
        )?;
        let e = HLaurent::monomial(&coef * f2(nu), 1, inner).exp()?;
        Ok(boxes.mul(&e)?.with_window(window))
    })
}

/// Hypergeometric data of [`mv_rhs_genus`]: `psi_hat = y`,
/// `y_hat = sum_k w^{k-1} z^k / (k S(hbar w k))`, exact through `precision`.
pub fn triple_hodge_genus_data(w: &Q, precision: u32) -> Result<TauData> {
    let sinv = s_inv_series(precision as usize);
    let mut y = BTreeMap::new();
    for k in 1..=precision {
        let base = pow_q(w, k as i32 - 1) / qi(k as i64);
        for m in 0..=precision / 2 {
            let c = &base * sinv.coeff(2 * m as usize) * pow_q(&(w * qi(k as i64)), 2 * m as i32);
            if !c.is_zero() {
                y.insert((k, m), c);
            }
        }
    }
    TauData::new(BTreeMap::from([((1, 0), Q::one())]), y, FamilyTag::Generic, Some(precision))
}

/// Both sides of the triple-Hodge KP statement in `q`-variables.
#[derive(Debug, Clone)]
pub struct TripleHodgePipeline {
    /// `log Z` minus unstable terms, through `p(q~)` and `q~_m = (u s)^{-m} q_m`.
    pub pipeline: PSeries,
    /// `G_TH(-u^2, -u^2 w, u^2 w/(w+1); T(q))` from the intersection table.
    pub table: PSeries,
    /// Unstable terms sit exactly at `(hbar^{-1}, one part)` and `(hbar^0, two parts)`.
    pub unstable_shape_ok: bool,
}

/// Runs Mariño–Vafa tau-function -> free energy -> unstable subtraction ->
/// `p(q~)` substitution -> rescaling, and the independent table route.
pub fn triple_hodge_pipeline(params: &TripleHodgeParams, weight: u32, hbar_order: i32) -> Result<TripleHodgePipeline> {
    let gamma = params.hbar_scale()?;
    let w = params.w();
    let caps = PCaps::new(weight, weight);
    let precision = (hbar_order + 2 * weight as i32 + 1) as u32;
    let data = triple_hodge_genus_data(&w, precision)?;
    let f = free_energy_plain(&data, caps, HWindow::new(-1, hbar_order))?;
    let unstable_shape_ok = f.terms().all(|(m, c)| {
        c.terms().all(|(e, _)| match e {
            -1 => m.len() == 1,
            0 => m.len() == 2,
            _ => true,
        })
    });
    let window = HWindow::new(1, hbar_order);
    let stable = f.filter(|_, e| e >= 1);
    let sd = SpectralData::from_x(&inversion_x(&w, &qi(1), weight as usize + 1)?)?;
    let pipeline = substitute_p_of_q(&stable, &sd)?
        .rescale_vars(&(params.u() * params.s()).recip())
        .truncate(caps, hbar_order);
    let pipeline = restrict(&pipeline, window);
    let table = triple_hodge_table_side(params, caps, hbar_order)?.rescale_hbar(&gamma);
    Ok(TripleHodgePipeline { pipeline, table, unstable_shape_ok })
}

fn restrict(f: &PSeries, window: HWindow) -> PSeries {
    let mut out = PSeries::zero(f.caps(), window).with_grading(Grading::Plain);
    for (m, c) in f.terms() {
        out.add_term(m.clone(), c.with_window(window));
    }
    out
}

/// `G_TH(-u^2, -u^2 w, u^2 w/(w+1); T(q))` through `hbar^{hbar_order}` (table hbar, no rescaling).
pub fn triple_hodge_table_side(params: &TripleHodgeParams, caps: PCaps, hbar_order: i32) -> Result<PSeries> {
    let table = IntersectionTable::builtin((hbar_order + 2).max(3) as u32)?;
    let t: Vec<LinearForm> = (0..=hbar_order.max(0) as u32).map(|k| triple_hodge_t(params, k, caps.weight)).collect();
    cohft_generating(&table, &params.cy_triple(), &t, caps, HWindow::new(1, hbar_order))
}

/// `G_{Lambda(-1)}(T(q))` with `T_k` from the naive-Hodge spectral data `X = z e^{-z}`.
pub fn naive_hodge_generating(weight: u32, hbar_order: i32) -> Result<PSeries> {
    let caps = PCaps::new(weight, weight);
    let sd = build_x(&TauData::naive_hodge(), weight as usize + 1)?;
    let kmax = (3 * hbar_order.max(0) as u32) / 2 + 1;
    let t = t_forms(&sd, 0, kmax, weight)?;
    let table = IntersectionTable::builtin((hbar_order + 2).max(3) as u32)?;
    cohft_generating(&table, &[-Q::one()], &t, caps, HWindow::new(1, hbar_order))
}

/// Both sides of the Mariño–Vafa lemma in plain grading on `window`: the character
/// sum and `build_tau` on the Family II data `(psi_hat = y/w, y_hat)`.
pub fn mv_lemma_sides(w: &Q, beta: &Q, m: u32, window: HWindow) -> Result<(PSeries, PSeries)> {
    let direct = mv_rhs(w, beta, m, window)?;
    let caps = PCaps::new(m, m);
    let precision = (window.hi + 2 * m as i32 + 2).max(1) as u32;
    let tau = build_tau(&TauData::marino_vafa(w, beta, precision)?, caps, window)?.to_plain()?;
    Ok((direct, restrict(&tau, window)))
}

/// Every variable index occurring in `f` is odd.
pub fn odd_support(f: &PSeries) -> bool {
    f.terms().all(|(m, _)| m.iter().all(|k| k % 2 == 1))
}

/// `Z` for the genus-graded Mariño–Vafa data, genus-shifted, for callers that need the tau-function itself.
pub fn triple_hodge_tau(w: &Q, caps: PCaps, window: HWindow) -> Result<PSeries> {
    let precision = (window.hi + caps.parts as i32 + caps.weight as i32 + 1) as u32;
    build_tau(&triple_hodge_genus_data(w, precision)?, caps, window)
}

/// Sign-aware helper for reports: `true` when the rational is a positive square.
pub fn is_positive_square(x: &Q) -> bool {
    x.is_positive() && is_square(x).is_some()
}
