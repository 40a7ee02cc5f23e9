//! The functions `varsigma(t) = e^{t/2} - e^{-t/2}` and `S(t) = varsigma(t)/t`,
//! and the diagonal operators `S(c hbar z d/dz)^{+-1}`.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::rational::{factorial, pow_q, qi, Q};
use crate::series::{HLaurent, HWindow, ZSeries};

/// Taylor coefficients of `varsigma(t)` up to `t^n`; only odd powers occur.
pub fn varsigma_series(n: usize) -> ZSeries {
    let c = (0..=n)
        .map(|k| if k % 2 == 1 { (factorial(k as u32) * pow_q(&qi(2), k as i32 - 1)).recip() } else { Q::zero() })
        .collect();
    ZSeries::from_coeffs(c, n)
}

/// Taylor coefficients of `S(t)` up to `t^n`; only even powers occur.
pub fn s_series(n: usize) -> ZSeries {
    let c = (0..=n)
        .map(|k| if k % 2 == 0 { (factorial(k as u32 + 1) * pow_q(&qi(2), k as i32)).recip() } else { Q::zero() })
        .collect();
    ZSeries::from_coeffs(c, n)
}

pub fn s_inv_series(n: usize) -> ZSeries {
    s_series(n).inv().expect("S(0) = 1")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SMode {
    Forward,
    Inverse,
}

/// `S(c hbar)^{+-1}` expanded in hbar up to the window's top exponent.
pub fn s_of_hbar(c: &Q, mode: SMode, window: HWindow) -> HLaurent {
    let n = window.hi.max(0) as usize;
    let base = match mode {
        SMode::Forward => s_series(n),
        SMode::Inverse => s_inv_series(n),
    };
    HLaurent::from_terms(base.coeffs().iter().enumerate().map(|(e, x)| (e as i32, x * pow_q(c, e as i32))), window)
}

/// `1/varsigma(c hbar)` as a Laurent series starting at `hbar^{-1}`.
pub fn inv_varsigma_of_hbar(c: &Q, window: HWindow) -> HLaurent {
    let wide = HWindow::new(window.lo, window.hi + 1);
    let s = s_of_hbar(c, SMode::Inverse, wide);
    s.shift(-1).expect("window admits hbar^-1").scale(&c.recip()).with_window(window)
}

/// Applies `S(c hbar z d/dz)^{+-1}` to a z-series: the `z^k` coefficient is
/// multiplied by `S(c k hbar)^{+-1}`. Entry `k` of the result is the
/// hbar-dependent coefficient of `z^k`.
pub fn apply_s(c: &Q, f: &ZSeries, mode: SMode, window: HWindow) -> Vec<HLaurent> {
    f.coeffs()
        .iter()
        .enumerate()
        .map(|(k, x)| s_of_hbar(&(c * qi(k as i64)), mode, window).scale(x))
        .collect()
}
