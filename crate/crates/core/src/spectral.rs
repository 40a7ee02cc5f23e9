//! Topological recursion on rational spectral curves with simple ramification,
//! computed on truncated local series at the ramification points.
//!
//! Stable correlators are stored by principal parts: `omega_{g,n}` is a finite sum
//! of `c * prod_i dz_i / (z_i - a_{j_i})^{k_i}`. Pole orders are at least 2, since
//! the correlators are residue-free.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::hodge::IntersectionTable;
use crate::rational::{fmt_q, parse_q, pow_q, qi, Q};
use crate::series::{BiSeries, Point, Poly, RatFn, ZSeries};

/// Slot data of one basis monomial: `(ramification index, pole order)` per variable.
pub type Key = Vec<(usize, u32)>;

const EXACT: i32 = 1 << 28;

/// `dx = dx(z) dz`, `dy = dy(z) dz` on the projective line with the standard
/// `B = dz1 dz2 / (z1 - z2)^2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectralCurve {
    dx: RatFn,
    dy: RatFn,
    ramification: Vec<Point>,
}

/// `f(z) dz` pulled back along `z = 1/t`.
fn flip_differential(f: &RatFn) -> RatFn {
    let t2 = RatFn::new(Poly::new(vec![-Q::one()]), Poly::new(vec![Q::zero(), Q::zero(), Q::one()])).expect("nonzero");
    f.flip().mul(&t2)
}

impl SpectralCurve {
    /// Validates simple zeroes of `dx` (rational or at infinity), and that `dy` is
    /// holomorphic and nonvanishing at each of them.
    pub fn new(dx: RatFn, dy: RatFn) -> Result<Self> {
        if dx.is_zero() || dy.is_zero() {
            return Err(Error::Invalid("dx and dy must be nonzero".into()));
        }
        let roots = dx.num().rational_roots();
        let found: usize = roots.iter().map(|r| r.1).sum();
        if Some(found) != dx.num().degree() {
            return Err(Error::IrrationalPoint(format!("zeroes of dx numerator {:?}", dx.num())));
        }
        let mut ramification = Vec::new();
        for (a, m) in roots {
            if m > 1 {
                return Err(Error::NonSimpleZero(format!("dx vanishes to order {m} at z = {}", fmt_q(&a))));
            }
            let (v, _) = dy.expand_at(&a, 0)?;
            if v != 0 {
                return Err(Error::Invalid(format!("dy has order {v} at the zero z = {} of dx", fmt_q(&a))));
            }
            ramification.push(Point::Finite(a));
        }
        let inf = dx.order_at_infinity_differential();
        if inf > 1 {
            return Err(Error::NonSimpleZero(format!("dx vanishes to order {inf} at infinity")));
        }
        if inf == 1 {
            if dy.order_at_infinity_differential() != 0 {
                return Err(Error::Invalid("dy must be holomorphic and nonzero at the zero of dx at infinity".into()));
            }
            ramification.push(Point::Infinity);
        }
        Ok(Self { dx, dy, ramification })
    }

    /// From numerator/denominator coefficient strings, e.g. `("1 - z", "z")`.
    pub fn parse(dx: (&str, &str), dy: (&str, &str)) -> Result<Self> {
        let f = |(n, d): (&str, &str)| RatFn::new(parse_poly(n)?, parse_poly(d)?);
        Self::new(f(dx)?, f(dy)?)
    }

    /// `x = z^2, y = z`.
    pub fn airy() -> Self {
        Self::new(RatFn::poly(Poly::from_ints(&[0, 2])), RatFn::poly(Poly::one())).expect("valid curve")
    }

    /// `x = log z - z, y = z`.
    pub fn naive_hodge() -> Self {
        let dx = RatFn::new(Poly::from_ints(&[1, -1]), Poly::from_ints(&[0, 1])).expect("valid");
        Self::new(dx, RatFn::poly(Poly::one())).expect("valid curve")
    }

    /// Triple-Hodge curve in the inversion coordinate (`beta = 1`):
    /// `dx = dz / (z(1+z)(1+(w+1)z))`, `dy = w dz / ((1+z)(1+(w+1)z))`.
    pub fn triple_hodge(w: &Q) -> Result<Self> {
        if w.is_zero() || *w == -Q::one() {
            return Err(Error::Invalid("triple-Hodge curve needs w != 0, -1".into()));
        }
        let c = w + Q::one();
        let base = Poly::new(vec![Q::one(), Q::one()]).mul(&Poly::new(vec![Q::one(), c]));
        let dx = RatFn::new(Poly::one(), base.mul(&Poly::from_ints(&[0, 1])))?;
        let dy = RatFn::new(Poly::new(vec![w.clone()]), base)?;
        Self::new(dx, dy)
    }

    pub fn dx(&self) -> &RatFn {
        &self.dx
    }

    pub fn dy(&self) -> &RatFn {
        &self.dy
    }

    pub fn ramification(&self) -> &[Point] {
        &self.ramification
    }

    /// Same curve in the coordinate `t = 1/z`.
    pub fn flipped(&self) -> Result<Self> {
        Self::new(flip_differential(&self.dx), flip_differential(&self.dy))
    }

    /// `dy -> lambda dy`.
    pub fn scale_dy(&self, lambda: &Q) -> Result<Self> {
        if lambda.is_zero() {
            return Err(Error::Invalid("lambda must be nonzero".into()));
        }
        Self::new(self.dx.clone(), self.dy.scale(lambda))
    }

    /// Finite ramification points, flipping the coordinate if one sits at infinity.
    fn finite_chart(&self) -> Result<(Self, bool)> {
        if !self.ramification.contains(&Point::Infinity) {
            return Ok((self.clone(), false));
        }
        let f = self.flipped()?;
        if f.ramification.contains(&Point::Infinity) {
            return Err(Error::Invalid("ramification at both 0 and infinity".into()));
        }
        Ok((f, true))
    }

    fn finite_points(&self) -> Vec<Q> {
        self.ramification
            .iter()
            .map(|p| match p {
                Point::Finite(a) => a.clone(),
                Point::Infinity => unreachable!("finite chart"),
            })
            .collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "dx": ratfn_json(&self.dx),
            "dy": ratfn_json(&self.dy),
            "ramification": self.ramification.iter().map(point_str).collect::<Vec<_>>(),
        })
    }
}

fn point_str(p: &Point) -> String {
    match p {
        Point::Finite(a) => fmt_q(a),
        Point::Infinity => "inf".into(),
    }
}

fn ratfn_json(f: &RatFn) -> Value {
    json!({ "num": poly_string(f.num()), "den": poly_string(f.den()) })
}

/// `3/2*z^2 - z + 1` style rendering, ascending degree.
pub fn poly_string(p: &Poly) -> String {
    let mut parts = Vec::new();
    for (k, c) in p.coeffs().iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        parts.push(match k {
            0 => fmt_q(c),
            1 => format!("{}*z", fmt_q(c)),
            _ => format!("{}*z^{k}", fmt_q(c)),
        });
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

/// Parses a polynomial in `z` with rational coefficients: `1 - 3/2*z + z^3`.
pub fn parse_poly(s: &str) -> Result<Poly> {
    let err = || Error::Parse(format!("bad polynomial {s:?}"));
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(err());
    }
    let mut terms = Vec::new();
    let mut cur = String::new();
    for (i, ch) in compact.chars().enumerate() {
        if (ch == '+' || ch == '-') && i > 0 && !cur.ends_with('^') {
            terms.push(std::mem::take(&mut cur));
        }
        cur.push(ch);
    }
    terms.push(cur);
    let mut coeffs: Vec<Q> = Vec::new();
    for t in terms {
        let (sign, body) = match t.strip_prefix('-') {
            Some(b) => (-Q::one(), b),
            None => (Q::one(), t.strip_prefix('+').unwrap_or(&t)),
        };
        let (c, deg) = match body.find('z') {
            None => (parse_q(body).map_err(|_| err())?, 0usize),
            Some(pos) => {
                let head = body[..pos].trim_end_matches('*');
                let c = if head.is_empty() { Q::one() } else { parse_q(head).map_err(|_| err())? };
                let tail = &body[pos + 1..];
                let deg = if tail.is_empty() {
                    1
                } else {
                    tail.strip_prefix('^').ok_or_else(err)?.parse::<usize>().map_err(|_| err())?
                };
                (c, deg)
            }
        };
        if coeffs.len() <= deg {
            coeffs.resize(deg + 1, Q::zero());
        }
        coeffs[deg] += sign * c;
    }
    Ok(Poly::new(coeffs))
}

/// Laurent series in `eps` with coefficients indexed by basis keys of the other
/// slots; exponents `>= prec` are unknown.
#[derive(Debug, Clone)]
struct Local {
    terms: BTreeMap<Key, BTreeMap<i32, Q>>,
    prec: i32,
}

impl Local {
    fn zero(prec: i32) -> Self {
        Self { terms: BTreeMap::new(), prec }
    }

    /// `eps^shift * z(eps)` with `z` known through its order.
    fn series(z: &ZSeries, shift: i32) -> Self {
        let prec = shift + z.order() as i32 + 1;
        let mut out = Self::zero(prec);
        for (k, c) in z.coeffs().iter().enumerate() {
            out.add_term(Vec::new(), shift + k as i32, c.clone());
        }
        out
    }

    fn add_term(&mut self, key: Key, e: i32, c: Q) {
        if e >= self.prec || c.is_zero() {
            return;
        }
        let row = self.terms.entry(key.clone()).or_default();
        let v = row.entry(e).or_insert_with(Q::zero);
        *v += c;
        if v.is_zero() {
            row.remove(&e);
            if row.is_empty() {
                self.terms.remove(&key);
            }
        }
    }

    fn val(&self) -> i32 {
        self.terms.values().filter_map(|r| r.keys().next().copied()).min().unwrap_or(self.prec)
    }

    fn add_assign(&mut self, o: &Local) {
        self.prec = self.prec.min(o.prec);
        let keep = self.prec;
        self.terms.values_mut().for_each(|r| r.retain(|e, _| *e < keep));
        self.terms.retain(|_, r| !r.is_empty());
        for (k, row) in &o.terms {
            for (e, c) in row {
                self.add_term(k.clone(), *e, c.clone());
            }
        }
    }

    fn mul(&self, o: &Local) -> Local {
        let prec = (self.val().saturating_add(o.prec)).min(o.val().saturating_add(self.prec)).min(EXACT);
        let mut out = Local::zero(prec);
        for (ka, ra) in &self.terms {
            for (kb, rb) in &o.terms {
                let mut key = ka.clone();
                key.extend(kb.iter().copied());
                for (ea, ca) in ra {
                    for (eb, cb) in rb {
                        if ea + eb < prec {
                            out.add_term(key.clone(), ea + eb, ca * cb);
                        }
                    }
                }
            }
        }
        out
    }

    /// Key position `p` belongs to slot `slots[p]`; reorders keys by slot.
    fn reorder(&self, slots: &[usize]) -> Local {
        let mut idx: Vec<usize> = (0..slots.len()).collect();
        idx.sort_by_key(|&p| slots[p]);
        let mut out = Local::zero(self.prec);
        for (k, r) in &self.terms {
            let key: Key = idx.iter().map(|&p| k[p]).collect();
            for (e, c) in r {
                out.add_term(key.clone(), *e, c.clone());
            }
        }
        out
    }

    fn coeffs_at(&self, e: i32) -> BTreeMap<Key, Q> {
        self.terms.iter().filter_map(|(k, r)| r.get(&e).map(|c| (k.clone(), c.clone()))).collect()
    }

    /// Keys with a nonzero coefficient at an exponent below `bound`.
    fn nonzero_below(&self, bound: i32) -> Vec<(Key, i32, Q)> {
        let mut out = Vec::new();
        for (k, r) in &self.terms {
            for (e, c) in r.range(..bound) {
                out.push((k.clone(), *e, c.clone()));
            }
        }
        out
    }
}

fn expansion_at(f: &RatFn, a: &Q, order: usize) -> Result<(i64, ZSeries)> {
    f.expand_at(a, order)
}

/// `sigma(a + eps) - a` for a simple zero `a` of `dx`, by Newton iteration on
/// `x(a + s) = x(a + eps)`.
pub fn local_involution(curve: &SpectralCurve, a: &Q, depth: usize) -> Result<ZSeries> {
    let xl = local_x(curve, a, depth)?;
    let n = depth;
    let d1 = xl.derivative();
    let mut s = ZSeries::monomial(-Q::one(), 1, n);
    for _ in 0..=(usize::BITS - n.leading_zeros()) + 2 {
        let f = xl.compose(&s)?.sub(&xl);
        let slope = d1.compose(&s)?;
        let step = ZSeries::from_coeffs(f.shift_down(1)?.coeffs().to_vec(), n)
            .mul(&ZSeries::from_coeffs(slope.shift_down(1)?.coeffs().to_vec(), n).inv()?);
        let next = s.sub(&ZSeries::from_coeffs(step.coeffs().to_vec(), n));
        if next == s {
            break;
        }
        s = next;
    }
    Ok(s)
}

/// `x(a + eps) - x(a)` to order `depth + 1` (valuation 2 at a simple zero).
fn local_x(curve: &SpectralCurve, a: &Q, depth: usize) -> Result<ZSeries> {
    let (v, s) = expansion_at(&curve.dx, a, depth)?;
    if v == 0 {
        return Err(Error::Invalid(format!("z = {} is not a zero of dx", fmt_q(a))));
    }
    if v != 1 {
        return Err(Error::NonSimpleZero(format!("dx has order {v} at z = {}", fmt_q(a))));
    }
    Ok(s.shift_up(1).truncate(depth).integral().truncate(depth + 1))
}

/// Per-ramification-point series, all in `eps = z - a`.
#[derive(Debug, Clone)]
struct LocalData {
    a: Q,
    sigma: ZSeries,
    dsigma: ZSeries,
    kernel_den_inv: ZSeries,
    depth: usize,
}

impl LocalData {
    fn new(curve: &SpectralCurve, a: &Q, depth: usize) -> Result<Self> {
        let p = depth;
        let sigma = local_involution(curve, a, p)?;
        let dsigma = sigma.derivative();
        let (vx, sx) = expansion_at(&curve.dx, a, p)?;
        let xp = sx.shift_up(vx as usize).truncate(p);
        let (vy, sy) = expansion_at(&curve.dy, a, p)?;
        debug_assert_eq!(vy, 0);
        let yl = sy.integral().truncate(p);
        let dy_diff = yl.sub(&yl.compose(&sigma)?);
        // (y(z) - y(sigma z)) x'(z) = eps^2 * unit
        let den = dy_diff.mul(&xp).shift_down(2)?;
        let kernel_den_inv = den.inv()?;
        Ok(Self { a: a.clone(), sigma, dsigma, kernel_den_inv, depth: p })
    }

    /// `1/2 (eps^m - sigma^m) / ((y(z) - y(sigma z)) dx(z))`.
    fn kernel(&self, m: u32) -> Local {
        let p = self.depth;
        let num = ZSeries::monomial(Q::one(), m as usize, p).sub(&self.sigma.pow(m));
        let body = num.mul(&self.kernel_den_inv).scale(&Q::new(1.into(), 2.into()));
        Local::series(&body, -2)
    }

    /// `dz/(z - b)^k` at `z = a + eps`.
    fn at_z(&self, b: &Q, k: u32) -> Result<Local> {
        if *b == self.a {
            let mut l = Local::zero(EXACT);
            l.add_term(Vec::new(), -(k as i32), Q::one());
            return Ok(l);
        }
        let base = ZSeries::from_coeffs(vec![&self.a - b, Q::one()], self.depth);
        Ok(Local::series(&base.inv()?.pow(k), 0))
    }

    /// `dz/(z - b)^k` at `z = sigma(a + eps)`, including `dsigma`.
    fn at_sigma(&self, b: &Q, k: u32) -> Result<Local> {
        if *b == self.a {
            let u = self.sigma.shift_down(1)?;
            let body = u.inv()?.pow(k).mul(&self.dsigma);
            return Ok(Local::series(&body, -(k as i32)));
        }
        let base = self.sigma.add(&ZSeries::monomial(&self.a - b, 0, self.depth));
        Ok(Local::series(&base.inv()?.pow(k).mul(&self.dsigma), 0))
    }

    /// `B(z, sigma z)` as a function of `eps`.
    fn b_z_sigma(&self) -> Result<Local> {
        let v = ZSeries::z(self.depth).sub(&self.sigma).shift_down(1)?;
        Ok(Local::series(&v.inv()?.pow(2).mul(&self.dsigma), -2))
    }

    /// `B(z, z_j)`: `sum_m (m+1) eps^m dz_j/(z_j - a)^{m+2}`.
    fn b_z_other(&self, ia: usize) -> Local {
        let p = self.depth as i32;
        let mut l = Local::zero(p + 1);
        for m in 0..=p {
            l.add_term(vec![(ia, m as u32 + 2)], m, qi(m as i64 + 1));
        }
        l
    }

    /// `B(sigma z, z_j)`: `sum_m (m+1) sigma^m dsigma dz_j/(z_j - a)^{m+2}`.
    fn b_sigma_other(&self, ia: usize) -> Local {
        let p = self.depth;
        let mut out = Local::zero(EXACT);
        let mut pw = ZSeries::one(p);
        for m in 0..=p {
            let term = Local::series(&pw.mul(&self.dsigma), 0);
            let mut keyed = Local::zero(term.prec);
            for (e, c) in term.coeffs_at_all() {
                keyed.add_term(vec![(ia, m as u32 + 2)], e, c.scale_int(m as i64 + 1));
            }
            out.add_assign(&keyed);
            pw = pw.mul(&self.sigma);
        }
        out
    }
}

impl Local {
    fn coeffs_at_all(&self) -> Vec<(i32, Q)> {
        self.terms.get(&Vec::new()).map(|r| r.iter().map(|(e, c)| (*e, c.clone())).collect()).unwrap_or_default()
    }
}

trait ScaleInt {
    fn scale_int(&self, k: i64) -> Q;
}

impl ScaleInt for Q {
    fn scale_int(&self, k: i64) -> Q {
        self * qi(k)
    }
}

/// Principal-part representation of a stable correlator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OmegaRep {
    pub g: u32,
    pub n: u32,
    /// Ramification points of the chart the keys refer to.
    pub points: Vec<Q>,
    /// The chart is `t = 1/z` (a ramification point sits at `z = infinity`).
    pub flipped: bool,
    pub terms: BTreeMap<Key, Q>,
}

impl OmegaRep {
    pub fn is_symmetric(&self) -> bool {
        let n = self.n as usize;
        let mut perm: Vec<usize> = (0..n).collect();
        loop {
            for (k, c) in &self.terms {
                let pk: Key = perm.iter().map(|&i| k[i]).collect();
                if self.terms.get(&pk) != Some(c) {
                    return false;
                }
            }
            if !next_permutation(&mut perm) {
                return true;
            }
        }
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut out = self.clone();
        out.terms = self.terms.iter().map(|(k, v)| (k.clone(), v * c)).filter(|(_, v)| !v.is_zero()).collect();
        out
    }

    /// `sum_i (2d_i+1)!!`-normalized coefficients at a single point:
    /// entry `d` is the coefficient of `prod dz_i / (z_i - a)^{2d_i+2}` divided by
    /// `prod (2d_i+1)!!`. Odd pole orders are returned separately.
    pub fn psi_coefficients(&self) -> (BTreeMap<Vec<u32>, Q>, BTreeMap<Key, Q>) {
        let mut even = BTreeMap::new();
        let mut odd = BTreeMap::new();
        for (k, c) in &self.terms {
            if k.iter().all(|(_, o)| o % 2 == 0) {
                let d: Vec<u32> = k.iter().map(|(_, o)| o / 2 - 1).collect();
                let df: Q = d.iter().map(|&d| double_factorial(2 * d + 1)).product();
                *even.entry(d).or_insert_with(Q::zero) += c / df;
            } else {
                odd.insert(k.clone(), c.clone());
            }
        }
        (even, odd)
    }

    pub fn to_json(&self) -> Value {
        let terms: BTreeMap<String, String> = self
            .terms
            .iter()
            .map(|(k, c)| {
                let s = k.iter().map(|(a, o)| format!("{}:{}", fmt_q(&self.points[*a]), o)).collect::<Vec<_>>().join(",");
                (format!("[{s}]"), fmt_q(c))
            })
            .collect();
        json!({ "g": self.g, "n": self.n, "flipped": self.flipped, "terms": terms })
    }
}

fn double_factorial(n: u32) -> Q {
    let mut acc = Q::one();
    let mut k = n;
    while k > 1 {
        acc *= qi(k as i64);
        k -= 2;
    }
    acc
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Correlator table for one curve at a fixed local depth.
#[derive(Debug, Clone)]
pub struct TrEngine {
    curve: SpectralCurve,
    chart: SpectralCurve,
    flipped: bool,
    points: Vec<Q>,
    locals: Vec<LocalData>,
    cache: BTreeMap<(u32, u32), OmegaRep>,
}

impl TrEngine {
    pub fn new(curve: &SpectralCurve, depth: usize) -> Result<Self> {
        let (chart, flipped) = curve.finite_chart()?;
        let points = chart.finite_points();
        if points.is_empty() {
            return Err(Error::Invalid("curve has no ramification points".into()));
        }
        let locals = points.par_iter().map(|a| LocalData::new(&chart, a, depth)).collect::<Result<Vec<_>>>()?;
        Ok(Self { curve: curve.clone(), chart, flipped, points, locals, cache: BTreeMap::new() })
    }

    pub fn curve(&self) -> &SpectralCurve {
        &self.curve
    }

    pub fn depth(&self) -> usize {
        self.locals[0].depth
    }

    /// `omega_{g,n}` for `2g - 2 + n > 0`, computing lower correlators as needed.
    pub fn omega(&mut self, g: u32, n: u32) -> Result<OmegaRep> {
        if 2 * g as i32 - 2 + n as i32 <= 0 || n == 0 {
            return Err(Error::Invalid(format!("(g, n) = ({g}, {n}) is not stable")));
        }
        if let Some(w) = self.cache.get(&(g, n)) {
            return Ok(w.clone());
        }
        // waves by 2g - 2 + n
        for (g1, n1) in lower_labels(g, n) {
            if !self.cache.contains_key(&(g1, n1)) {
                let w = self.recurse(g1, n1)?;
                self.cache.insert((g1, n1), w);
            }
        }
        let w = self.recurse(g, n)?;
        self.cache.insert((g, n), w.clone());
        Ok(w)
    }

    fn stable(&self, g: u32, n: u32) -> &OmegaRep {
        self.cache.get(&(g, n)).expect("lower correlators computed first")
    }

    /// Slot-0 expansion of a stored correlator at point `ia`, via `at`.
    fn expand_first(&self, w: &OmegaRep, ia: usize, sigma: bool) -> Result<Local> {
        let loc = &self.locals[ia];
        let mut out = Local::zero(EXACT);
        let mut cache: BTreeMap<(usize, u32), Local> = BTreeMap::new();
        for (k, c) in &w.terms {
            let (b, o) = k[0];
            if !cache.contains_key(&(b, o)) {
                let l = if sigma { loc.at_sigma(&self.points[b], o)? } else { loc.at_z(&self.points[b], o)? };
                cache.insert((b, o), l);
            }
            let base = &cache[&(b, o)];
            let mut keyed = Local::zero(base.prec);
            for (e, v) in base.coeffs_at_all() {
                keyed.add_term(k[1..].to_vec(), e, v * c);
            }
            out.add_assign(&keyed);
        }
        Ok(out)
    }

    /// Expansion of `omega(z, sigma z, ...)` in its first two slots.
    fn expand_first_two(&self, w: &OmegaRep, ia: usize) -> Result<Local> {
        let loc = &self.locals[ia];
        let mut out = Local::zero(EXACT);
        for (k, c) in &w.terms {
            let l1 = loc.at_z(&self.points[k[0].0], k[0].1)?;
            let l2 = loc.at_sigma(&self.points[k[1].0], k[1].1)?;
            let mut rest = Local::zero(EXACT);
            rest.add_term(k[2..].to_vec(), 0, c.clone());
            out.add_assign(&l1.mul(&l2).mul(&rest));
        }
        Ok(out)
    }

    /// `omega_{g', 1+|I|}(z or sigma z, z_I)`, including the `B` cases.
    fn factor(&self, g: u32, slots: usize, ia: usize, sigma: bool) -> Result<Local> {
        if g == 0 && slots == 1 {
            let loc = &self.locals[ia];
            return Ok(if sigma { loc.b_sigma_other(ia) } else { loc.b_z_other(ia) });
        }
        self.expand_first(self.stable(g, slots as u32 + 1), ia, sigma)
    }

    /// Recursion integrand for `omega_{g, k+1}` at point `ia`: the `g-1` term plus
    /// all splittings without `omega_{0,1}`. Keys refer to the `k` outer slots.
    fn integrand(&self, g: u32, k: usize, ia: usize) -> Result<Local> {
        let mut total = Local::zero(EXACT);
        if g >= 1 {
            if g == 1 && k == 0 {
                total.add_assign(&self.locals[ia].b_z_sigma()?);
            } else {
                total.add_assign(&self.expand_first_two(self.stable(g - 1, k as u32 + 2), ia)?);
            }
        }
        for g1 in 0..=g {
            let g2 = g - g1;
            for mask in 0u32..(1 << k) {
                let iset: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 1).collect();
                let jset: Vec<usize> = (0..k).filter(|i| mask >> i & 1 == 0).collect();
                if (g1 == 0 && iset.is_empty()) || (g2 == 0 && jset.is_empty()) {
                    continue;
                }
                let left = self.factor(g1, iset.len(), ia, false)?;
                let right = self.factor(g2, jset.len(), ia, true)?;
                let slots: Vec<usize> = iset.iter().chain(jset.iter()).copied().collect();
                total.add_assign(&left.mul(&right).reorder(&slots));
            }
        }
        Ok(total)
    }

    fn recurse(&self, g: u32, n: u32) -> Result<OmegaRep> {
        let k = n as usize - 1;
        let parts = (0..self.points.len())
            .into_par_iter()
            .map(|ia| -> Result<BTreeMap<Key, Q>> {
                let integrand = self.integrand(g, k, ia)?;
                let v = integrand.val();
                let mut out: BTreeMap<Key, Q> = BTreeMap::new();
                if v >= EXACT {
                    return Ok(out);
                }
                for m in 1..=(1 - v).max(0) as u32 {
                    let prod = self.locals[ia].kernel(m).mul(&integrand);
                    if prod.prec <= -1 {
                        return Err(Error::Truncation(format!(
                            "local depth {} too small for omega_({g},{n})",
                            self.locals[ia].depth
                        )));
                    }
                    for (key, c) in prod.coeffs_at(-1) {
                        let mut full = vec![(ia, m + 1)];
                        full.extend(key);
                        *out.entry(full).or_insert_with(Q::zero) += c;
                    }
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut terms: BTreeMap<Key, Q> = BTreeMap::new();
        for p in parts {
            for (k, c) in p {
                *terms.entry(k).or_insert_with(Q::zero) += c;
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Ok(OmegaRep { g, n, points: self.points.clone(), flipped: self.flipped, terms })
    }
}

/// Stable labels strictly below `(g, n)` needed by the recursion, by `2g-2+n`.
fn lower_labels(g: u32, n: u32) -> Vec<(u32, u32)> {
    let chi = 2 * g as i32 - 2 + n as i32;
    let mut out = Vec::new();
    for c in 1..chi {
        for gg in 0..=g {
            let nn = c + 2 - 2 * gg as i32;
            if nn >= 1 && nn as u32 <= n + 1 {
                out.push((gg, nn as u32));
            }
        }
    }
    out
}

pub fn tr_correlator(curve: &SpectralCurve, g: u32, n: u32, depth: usize) -> Result<OmegaRep> {
    TrEngine::new(curve, depth)?.omega(g, n)
}

/// Loop-equation verdicts at every ramification point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoopReport {
    pub g: u32,
    pub n: u32,
    pub linear_pass: bool,
    pub quadratic_pass: bool,
    /// `(point, equation, slot key, eps exponent, coefficient)` for each failure.
    pub failures: Vec<(String, &'static str, Key, i32, Q)>,
}

impl LoopReport {
    pub fn pass(&self) -> bool {
        self.linear_pass && self.quadratic_pass
    }

    pub fn to_json(&self) -> Value {
        json!({
            "g": self.g,
            "n": self.n,
            "pass": self.pass(),
            "linear_pass": self.linear_pass,
            "quadratic_pass": self.quadratic_pass,
            "failures": self.failures.iter().map(|(p, eq, k, e, c)| json!({
                "point": p, "equation": eq, "key": format!("{k:?}"), "eps_power": e, "coefficient": fmt_q(c),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Checks the linear and quadratic loop equations for `omega_{g,n}`.
pub fn loop_equation_check(curve: &SpectralCurve, g: u32, n: u32, depth: usize) -> Result<LoopReport> {
    let mut eng = TrEngine::new(curve, depth)?;
    let w = eng.omega(g, n)?;
    loop_equation_check_with(&eng, &w)
}

/// Loop equations with a caller-supplied `omega_{g,n}` (lower correlators from the engine).
pub fn loop_equation_check_with(eng: &TrEngine, w: &OmegaRep) -> Result<LoopReport> {
    let (g, n) = (w.g, w.n);
    let k = n as usize - 1;
    let mut failures = Vec::new();
    let (mut lin_ok, mut quad_ok) = (true, true);
    for (ia, loc) in eng.locals.iter().enumerate() {
        let pname = fmt_q(&loc.a);
        let at_z = eng.expand_first(w, ia, false)?;
        let at_s = eng.expand_first(w, ia, true)?;
        let mut lin = at_z.clone();
        lin.add_assign(&at_s);
        if lin.prec < 1 {
            return Err(Error::Truncation(format!("depth {} too small for the linear loop equation", loc.depth)));
        }
        for (key, e, c) in lin.nonzero_below(1) {
            lin_ok = false;
            failures.push((pname.clone(), "linear", key, e, c));
        }
        // omega_{0,1} terms: dx(z) (y(z) omega(sigma z) + y(sigma z) omega(z))
        let p = loc.depth;
        let (vx, sx) = expansion_at(&eng.chart.dx, &loc.a, p)?;
        let xp = Local::series(&sx.truncate(p), vx as i32);
        let (_, sy) = expansion_at(&eng.chart.dy, &loc.a, p)?;
        let yl = sy.integral().truncate(p);
        let y_z = Local::series(&yl, 0);
        let y_s = Local::series(&yl.compose(&loc.sigma)?, 0);
        let mut quad = eng.integrand(g, k, ia)?;
        let mut w01 = y_z.mul(&at_s);
        w01.add_assign(&y_s.mul(&at_z));
        quad.add_assign(&xp.mul(&w01));
        if quad.prec < 2 {
            return Err(Error::Truncation(format!("depth {} too small for the quadratic loop equation", loc.depth)));
        }
        for (key, e, c) in quad.nonzero_below(2) {
            quad_ok = false;
            failures.push((pname.clone(), "quadratic", key, e, c));
        }
    }
    Ok(LoopReport { g, n, linear_pass: lin_ok, quadratic_pass: quad_ok, failures })
}

/// Recomputes `omega_{g,n}` in its first slot from the principal parts of its local
/// expansions at every ramification point; true iff it reproduces the correlator.
pub fn projection_check(eng: &TrEngine, w: &OmegaRep) -> Result<bool> {
    let mut rebuilt: BTreeMap<Key, Q> = BTreeMap::new();
    for ia in 0..eng.locals.len() {
        let loc = eng.expand_first(w, ia, false)?;
        if loc.prec < 0 {
            return Err(Error::Truncation("depth too small for the projection check".into()));
        }
        for (key, e, c) in loc.nonzero_below(0) {
            let mut full = vec![(ia, (-e) as u32)];
            full.extend(key);
            *rebuilt.entry(full).or_insert_with(Q::zero) += c;
        }
    }
    rebuilt.retain(|_, c| !c.is_zero());
    Ok(rebuilt == w.terms)
}

/// `X(z) = z exp(int_0^z (dx - dz/z))`, requiring `dx = dz/z + holomorphic` at 0.
pub fn x_series(curve: &SpectralCurve, order: usize) -> Result<ZSeries> {
    let (v, s) = curve.dx.expand_at(&Q::zero(), order)?;
    if v != -1 || !s.coeff(0).is_one() {
        return Err(Error::Invalid("dx must be dz/z + holomorphic at z = 0".into()));
    }
    let reg = s.sub(&ZSeries::one(order)).shift_down(1)?;
    Ok(reg.integral().truncate(order).exp()?.shift_up(1).truncate(order))
}

/// X-expansion at `z_i = 0`: entry `k` (ordered, `sum k_i <= order`) is the
/// coefficient of `prod X_i^{k_i - 1} dX_i`.
pub fn doss_expand(w: &OmegaRep, curve: &SpectralCurve, order: u32) -> Result<BTreeMap<Vec<u32>, Q>> {
    if w.flipped {
        return Err(Error::Invalid("X-expansion needs finite ramification points".into()));
    }
    if w.points.iter().any(|a| a.is_zero()) {
        return Err(Error::Invalid("expansion point z = 0 coincides with a ramification point".into()));
    }
    let n = order as usize;
    let x = x_series(curve, n + 1)?;
    let z_of_x = x.reversion()?;
    let dz = z_of_x.derivative();
    let mut basis: BTreeMap<(usize, u32), ZSeries> = BTreeMap::new();
    for k in w.terms.keys() {
        for &(b, o) in k {
            basis.entry((b, o)).or_insert_with(|| {
                let shifted = z_of_x.sub(&ZSeries::monomial(w.points[b].clone(), 0, n));
                shifted.truncate(n).inv().expect("b != 0").pow(o).mul(&dz.truncate(n))
            });
        }
    }
    let mut out: BTreeMap<Vec<u32>, Q> = BTreeMap::new();
    for (k, c) in &w.terms {
        let mut acc: BTreeMap<Vec<u32>, Q> = BTreeMap::from([(Vec::new(), c.clone())]);
        for slot in k {
            let s = &basis[slot];
            let mut next = BTreeMap::new();
            for (t, v) in &acc {
                let used: u32 = t.iter().sum();
                for j in 0..s.order().min(n) {
                    let kk = j as u32 + 1;
                    if used + kk > order {
                        break;
                    }
                    let cj = s.coeff(j);
                    if cj.is_zero() {
                        continue;
                    }
                    let mut t2 = t.clone();
                    t2.push(kk);
                    *next.entry(t2).or_insert_with(Q::zero) += v * cj;
                }
            }
            acc = next;
        }
        for (t, v) in acc {
            *out.entry(t).or_insert_with(Q::zero) += v;
        }
    }
    out.retain(|t, v| !v.is_zero() && t.len() == w.n as usize);
    Ok(out)
}

/// `B - dX1 dX2/(X1 - X2)^2` at `z_i = 0`: entry `(i, j)` multiplies
/// `z1^{i-1} z2^{j-1} dz1 dz2`, total degree `i + j <= order`.
pub fn doss_expand_02(curve: &SpectralCurve, order: u32) -> Result<BiSeries> {
    let n = order as usize + 2;
    let x = x_series(curve, n + 2)?;
    let xp = x.derivative();
    // X(z1) - X(z2) = (z1 - z2) D, D = sum_k X_k h_{k-1}(z1, z2)
    let big = order + 2;
    let mut dd = BiSeries::zero(big);
    for k in 1..=n + 1 {
        let xk = x.coeff(k);
        for i in 0..k as u32 {
            dd.add_term(i, k as u32 - 1 - i, xk.clone());
        }
    }
    let xpp = BiSeries::outer(&xp.truncate(big as usize), &xp.truncate(big as usize), big);
    let d2 = dd.mul(&dd);
    let num = d2.sub(&xpp);
    let quotient = divide_diagonal_square(&num)?;
    let inv = bi_inverse(&d2)?;
    let full = quotient.mul(&inv);
    let mut out = BiSeries::zero(order);
    for ((i, j), c) in full.terms() {
        out.add_term(i + 1, j + 1, c.clone());
    }
    Ok(out)
}

/// `f / (z1 - z2)^2`, exact degree by degree.
fn divide_diagonal_square(f: &BiSeries) -> Result<BiSeries> {
    let order = f.order();
    let mut out = BiSeries::zero(order.saturating_sub(2));
    for d in 0..=order {
        // homogeneous part as polynomial in t = z1/z2: coefficient of t^i is f_{i, d-i}
        let mut c: Vec<Q> = (0..=d).map(|i| f.coeff(i, d - i)).collect();
        if c.iter().all(|v| v.is_zero()) {
            continue;
        }
        if d < 2 {
            return Err(Error::Invalid("series not divisible by (z1 - z2)^2".into()));
        }
        // divide twice by (t - 1): synthetic division
        for _ in 0..2 {
            let m = c.len() - 1;
            let mut qv = vec![Q::zero(); m];
            let mut carry = Q::zero();
            for i in (1..=m).rev() {
                carry = &c[i] + &carry;
                qv[i - 1] = carry.clone();
            }
            if !(&c[0] + &carry).is_zero() {
                return Err(Error::Invalid("series not divisible by (z1 - z2)^2".into()));
            }
            // c = (t - 1) q  =>  q_{i-1} = sum_{j >= i} c_j
            c = qv;
        }
        for (i, v) in c.iter().enumerate() {
            out.add_term(i as u32, d - 2 - i as u32, v.clone());
        }
    }
    Ok(out)
}

fn bi_inverse(f: &BiSeries) -> Result<BiSeries> {
    let a = f.coeff(0, 0);
    if a.is_zero() {
        return Err(Error::Invalid("bivariate series not invertible".into()));
    }
    let order = f.order();
    let u = f.scale(&a.recip()).sub(&BiSeries::constant(Q::one(), order));
    let mut out = BiSeries::constant(Q::one(), order);
    let mut pw = BiSeries::constant(Q::one(), order);
    for k in 1..=order {
        pw = pw.mul(&u).scale(&-Q::one());
        if pw.is_zero() {
            break;
        }
        let _ = k;
        out = out.add(&pw);
    }
    Ok(out.scale(&a.recip()))
}

/// Residue-free basis forms at one ramification point: `f_0 = 1/(z-a)^2`,
/// `f_{k+1} = d/dz (f_k / x'(z))`, each standing for `f_k(z) dz`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XiFamily {
    pub point: Point,
    /// Forms are written in the coordinate `t = 1/z` when the point is at infinity.
    pub flipped: bool,
    pub forms: Vec<RatFn>,
}

pub fn xi_basis(curve: &SpectralCurve, kmax: u32) -> Result<Vec<XiFamily>> {
    let (chart, flipped) = curve.finite_chart()?;
    let mut out = Vec::new();
    for (orig, a) in curve.ramification.iter().zip(chart_points_in_order(curve, &chart, flipped)) {
        let base = Poly::new(vec![-a.clone(), Q::one()]);
        let mut f = RatFn::new(Poly::one(), base.mul(&base))?;
        let mut forms = vec![f.clone()];
        for _ in 0..kmax {
            f = f.div(&chart.dx)?.derivative();
            forms.push(f.clone());
        }
        out.push(XiFamily { point: orig.clone(), flipped, forms });
    }
    Ok(out)
}

/// Ramification points of the finite chart, aligned with `curve.ramification`.
fn chart_points_in_order(curve: &SpectralCurve, chart: &SpectralCurve, flipped: bool) -> Vec<Q> {
    if !flipped {
        return chart.finite_points();
    }
    curve
        .ramification
        .iter()
        .map(|p| match p {
            Point::Infinity => Q::zero(),
            Point::Finite(a) => a.recip(),
        })
        .collect()
}

/// Every pole of `f dz` (finite and at infinity) has zero residue.
pub fn residue_free(f: &RatFn) -> Result<bool> {
    for (a, _) in f.finite_poles()? {
        if !f.residue(&Point::Finite(a))?.is_zero() {
            return Ok(false);
        }
    }
    Ok(f.residue(&Point::Infinity)?.is_zero())
}

/// Normalization `kappa` with `kappa * omega_{0,3} = <tau_0^3> = 1` on the Airy curve.
pub fn airy_kappa(depth: usize) -> Result<Q> {
    let w = tr_correlator(&SpectralCurve::airy(), 0, 3, depth)?;
    let (even, _) = w.psi_coefficients();
    let c = even.get(&vec![0, 0, 0]).cloned().unwrap_or_else(Q::zero);
    if c.is_zero() {
        return Err(Error::Invalid("Airy omega_{0,3} vanished".into()));
    }
    Ok(c.recip())
}

/// `<prod tau_{d_i}>_g` read off a correlator on a curve with one ramification
/// point, using the Airy calibration `kappa^{2g-2+n}`.
pub fn psi_dictionary(w: &OmegaRep, kappa: &Q) -> BTreeMap<Vec<u32>, Q> {
    let f = pow_q(kappa, 2 * w.g as i32 - 2 + w.n as i32);
    w.psi_coefficients().0.into_iter().map(|(d, c)| (d, c * &f)).collect()
}

/// Compares the dictionary of an Airy correlator with the intersection table.
pub fn airy_matches_table(w: &OmegaRep, kappa: &Q, table: &IntersectionTable) -> Result<bool> {
    let (_, odd) = w.psi_coefficients();
    if !odd.is_empty() {
        return Ok(false);
    }
    let dict = psi_dictionary(w, kappa);
    let dim = 3 * w.g + w.n - 3;
    if dict.keys().any(|d| d.iter().sum::<u32>() != dim) {
        return Ok(false);
    }
    for d in compositions(dim, w.n as usize) {
        let expected = table.intersection_number(w.g, &d, &[])?;
        if dict.get(&d).cloned().unwrap_or_else(Q::zero) != expected {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Ordered tuples of `n` nonnegative integers summing to `total`.
fn compositions(total: u32, n: usize) -> Vec<Vec<u32>> {
    if n == 0 {
        return if total == 0 { vec![Vec::new()] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, n - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::changevars::h02_of;
    use crate::rational::q;
    use crate::series::{HWindow, PCaps};
    use crate::tau::{extract_hgn, free_energy_plain, TauData};

    #[test]
    fn curve_validation() {
        assert_eq!(SpectralCurve::airy().ramification(), &[Point::Finite(Q::zero())]);
        assert_eq!(SpectralCurve::naive_hodge().ramification(), &[Point::Finite(qi(1))]);
        assert_eq!(SpectralCurve::triple_hodge(&qi(3)).unwrap().ramification(), &[Point::Infinity]);
        // x = z^3: double zero
        assert!(matches!(SpectralCurve::parse(("3*z^2", "1"), ("1", "1")), Err(Error::NonSimpleZero(_))));
        // x = z^3/3 - 2z: irrational zeroes
        assert!(matches!(SpectralCurve::parse(("z^2 - 2", "1"), ("1", "1")), Err(Error::IrrationalPoint(_))));
        // dy vanishing at the ramification point
        assert!(SpectralCurve::parse(("z", "1"), ("z", "1")).is_err());
        let c = SpectralCurve::parse(("1 - z", "z"), ("1", "1")).unwrap();
        assert_eq!(c, SpectralCurve::naive_hodge());
    }

    #[test]
    fn parse_poly_forms() {
        assert_eq!(parse_poly("1 - 3/2*z + z^3").unwrap().coeffs(), &[qi(1), q(-3, 2), qi(0), qi(1)]);
        assert_eq!(parse_poly("-z").unwrap().coeffs(), &[qi(0), qi(-1)]);
        assert!(parse_poly("z^").is_err());
        assert!(parse_poly("").is_err());
        let p = parse_poly("2 + 1/3*z^2").unwrap();
        assert_eq!(parse_poly(&poly_string(&p)).unwrap(), p);
    }

    #[test]
    fn involutions() {
        let s = local_involution(&SpectralCurve::airy(), &Q::zero(), 10).unwrap();
        assert_eq!(s, ZSeries::monomial(qi(-1), 1, 10));
        let c = SpectralCurve::naive_hodge();
        let s = local_involution(&c, &qi(1), 12).unwrap();
        assert_eq!(s.coeff(1), qi(-1));
        let xl = local_x(&c, &qi(1), 12).unwrap();
        let r = xl.compose(&s).unwrap().sub(&xl);
        assert!(r.is_zero(), "{r:?}");
        // x = z^2 + z^3: a = 0 still simple
        let c = SpectralCurve::parse(("2*z + 3*z^2", "1"), ("1", "1")).unwrap();
        let s = local_involution(&c, &Q::zero(), 8).unwrap();
        assert_eq!(s.coeff(1), qi(-1));
        let xl = local_x(&c, &Q::zero(), 8).unwrap();
        assert!(xl.compose(&s).unwrap().sub(&xl).is_zero());
    }

    #[test]
    fn airy_calibration() {
        let kappa = airy_kappa(12).unwrap();
        let table = IntersectionTable::builtin(5).unwrap();
        let mut eng = TrEngine::new(&SpectralCurve::airy(), 16).unwrap();
        for (g, n) in [(0, 3), (1, 1), (0, 4), (1, 2), (0, 5)] {
            let w = eng.omega(g, n).unwrap();
            assert!(w.is_symmetric(), "({g},{n})");
            assert!(airy_matches_table(&w, &kappa, &table).unwrap(), "({g},{n}) {:?}", psi_dictionary(&w, &kappa));
        }
        assert_eq!(kappa, qi(-2));
        let w11 = eng.omega(1, 1).unwrap();
        assert_eq!(psi_dictionary(&w11, &kappa)[&vec![1]], q(1, 24));
    }

    #[test]
    fn symmetry_and_projection() {
        let mut eng = TrEngine::new(&SpectralCurve::naive_hodge(), 16).unwrap();
        for (g, n) in [(0, 3), (0, 4), (1, 1), (1, 2)] {
            let w = eng.omega(g, n).unwrap();
            assert!(w.is_symmetric(), "({g},{n})");
            assert!(w.terms.keys().all(|k| k.iter().all(|s| s.1 >= 2)));
            assert!(projection_check(&eng, &w).unwrap());
        }
    }

    #[test]
    fn loop_equations() {
        for (curve, g, n) in [(SpectralCurve::airy(), 0, 3), (SpectralCurve::naive_hodge(), 1, 1), (SpectralCurve::naive_hodge(), 0, 3)] {
            let r = loop_equation_check(&curve, g, n, 16).unwrap();
            assert!(r.pass(), "{:?}", r.failures);
        }
        let mut eng = TrEngine::new(&SpectralCurve::airy(), 16).unwrap();
        let w = eng.omega(0, 3).unwrap().scale(&qi(-1));
        let r = loop_equation_check_with(&eng, &w).unwrap();
        assert!(!r.quadratic_pass);
        let mut eng = TrEngine::new(&SpectralCurve::naive_hodge(), 16).unwrap();
        let w = eng.omega(1, 1).unwrap().scale(&qi(-1));
        assert!(!loop_equation_check_with(&eng, &w).unwrap().quadratic_pass);
    }

    #[test]
    fn homogeneity() {
        let c = SpectralCurve::naive_hodge();
        let lam = q(-2, 3);
        let scaled = c.scale_dy(&lam).unwrap();
        for (g, n) in [(0, 3), (1, 1)] {
            let w = tr_correlator(&c, g, n, 14).unwrap();
            let ws = tr_correlator(&scaled, g, n, 14).unwrap();
            assert_eq!(ws, w.scale(&pow_q(&lam, 2 - 2 * g as i32 - n as i32)));
        }
    }

    fn naive_hodge_hgn(g: u32, n: u32, order: u32) -> BTreeMap<Vec<u32>, Q> {
        let data = TauData::naive_hodge();
        let e = 2 * g as i32 - 2 + n as i32;
        let f = free_energy_plain(&data, PCaps::new(order, n), HWindow::new(-1, e)).unwrap();
        let x = ZSeries::from_coeffs(
            (0..=order as usize)
                .map(|k| if k == 0 { Q::zero() } else { pow_q(&qi(-1), k as i32 - 1) / crate::rational::factorial(k as u32 - 1) })
                .collect(),
            order as usize,
        );
        let h = extract_hgn(&f, &x, g, n, order).unwrap();
        h.x_coeffs.into_iter().map(|(k, c)| (k.clone(), c * k.iter().map(|&v| qi(v as i64)).product::<Q>())).collect()
    }

    #[test]
    fn doss_matches_tau_side() {
        let c = SpectralCurve::naive_hodge();
        let mut eng = TrEngine::new(&c, 18).unwrap();
        for (g, n) in [(0, 3), (1, 1)] {
            let w = eng.omega(g, n).unwrap();
            let tr = doss_expand(&w, &c, 6).unwrap();
            let tau = naive_hodge_hgn(g, n, 6);
            assert!(!tau.is_empty());
            assert_eq!(tr, tau, "({g},{n})");
        }
    }

    #[test]
    fn doss_02() {
        let c = SpectralCurve::naive_hodge();
        let x = x_series(&c, 10).unwrap();
        let tr = doss_expand_02(&c, 6).unwrap();
        let h = h02_of(&x, 8).unwrap().series.d1d2().truncate(6);
        assert!(!tr.is_zero());
        assert_eq!(tr, h);
    }

    #[test]
    fn xi_bases() {
        for (curve, point) in [
            (SpectralCurve::airy(), Point::Finite(Q::zero())),
            (SpectralCurve::naive_hodge(), Point::Finite(qi(1))),
            (SpectralCurve::triple_hodge(&q(3, 5)).unwrap(), Point::Infinity),
        ] {
            let b = xi_basis(&curve, 3).unwrap();
            assert_eq!(b.len(), 1);
            assert_eq!(b[0].point, point);
            for (k, f) in b[0].forms.iter().enumerate() {
                assert!(residue_free(f).unwrap());
                let a = match &point {
                    Point::Finite(a) => a.clone(),
                    Point::Infinity => Q::zero(),
                };
                assert_eq!(f.expand_at(&a, 0).unwrap().0, -(2 * k as i64 + 2));
            }
        }
    }

    #[test]
    fn triple_hodge_curve_tr() {
        let c = SpectralCurve::triple_hodge(&qi(3)).unwrap();
        let mut eng = TrEngine::new(&c, 14).unwrap();
        let w = eng.omega(0, 3).unwrap();
        assert!(w.flipped && w.is_symmetric());
        assert!(loop_equation_check_with(&eng, &w).unwrap().pass());
    }
}
