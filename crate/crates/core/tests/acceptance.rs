//! One pass/fail line per acceptance criterion; exact comparisons throughout.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use kpcohft::changevars::{build_x, finiteness_check, h02_of, t_recursion, Finiteness, SpectralData};
use kpcohft::cli::{random_family_two, tau_side_differentials};
use kpcohft::hodge::{
    inversion_check, inversion_coeff, inversion_x, moebius_relation_check, mv_lemma_sides, naive_hodge_generating,
    odd_support, triple_hodge_pipeline, triple_hodge_table_side, TripleHodgeParams,
};
use kpcohft::kpcheck::{kp_residual_q1, kp_residual_q2, kp_residual_t, pluecker_check, KpEquation, ResidualReport};
use kpcohft::rational::{q, qi, Q};
use kpcohft::series::{HWindow, PCaps, ZSeries};
use kpcohft::spectral::{doss_expand, loop_equation_check_with, SpectralCurve, TrEngine};
use kpcohft::tau::{build_tau, free_energy_plain, rescale_data, TauData};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Verdict = Result<(), String>;

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Verdict {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn residual(r: &ResidualReport) -> Verdict {
    ensure(r.pass, || format!("{} nonzero at {:?}", r.label, r.entries.keys().take(4).collect::<Vec<_>>()))
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Number of set partitions of an n-set into each block count, by enumerating restricted growth strings.
fn brute_stirling_row(n: usize) -> Vec<u64> {
    let mut counts = vec![0u64; n + 1];
    fn rec(pos: usize, n: usize, blocks: usize, counts: &mut [u64]) {
        if pos == n {
            counts[blocks] += 1;
            return;
        }
        for b in 0..=blocks {
            rec(pos + 1, n, blocks.max(b + 1), counts);
        }
    }
    if n == 0 {
        counts[0] = 1;
    } else {
        rec(1, n, 1, &mut counts);
    }
    counts
}

fn stirling_tables() -> Verdict {
    let sd = build_x(&TauData::naive_hodge(), 10).map_err(err)?;
    let rows: [[i64; 5]; 3] = [[1, 1, 1, 1, 1], [1, 3, 6, 10, 15], [1, 7, 25, 65, 140]];
    for (k, row) in rows.iter().enumerate() {
        let t = t_recursion(&sd, 0, k as i32, 5).map_err(err)?;
        for (m, v) in row.iter().enumerate() {
            ensure(t.coeff(m as u32 + 1) == qi(*v), || format!("T_{k} q_{} = {}", m + 1, t.coeff(m as u32 + 1)))?;
        }
    }
    let brute: Vec<Vec<u64>> = (0..=12).map(brute_stirling_row).collect();
    for k in 0..=4u32 {
        let t = t_recursion(&sd, 0, k as i32, 8).map_err(err)?;
        for m in 1..=8u32 {
            let s = brute[(k + m) as usize][m as usize];
            ensure(t.coeff(m) == qi(s as i64), || format!("c_{{{k},{m}}} = {} vs S = {s}", t.coeff(m)))?;
        }
    }
    Ok(())
}

fn naive_hodge_kp() -> Verdict {
    let g = naive_hodge_generating(10, 2).map_err(err)?;
    // hbar (T_0^3/6 + T_1/24 - T_0/24) + hbar^2 (T_0^3 T_1/6 + T_1^2/48 + T_0 T_2/24 - T_0 T_1/24)
    ensure(g.coeff(&[1, 1, 1]).coeff(1) == q(1, 6), || "q1^3 hbar".into())?;
    ensure(g.coeff(&[1]).coeff(1).is_zero(), || "q1 hbar".into())?;
    ensure(g.coeff(&[2]).coeff(1) == q(1, 12), || "q2 hbar".into())?;
    ensure(g.coeff(&[1, 1]).coeff(2) == q(1, 48) + q(1, 24) - q(1, 24), || "q1^2 hbar^2".into())?;
    ensure(g.coeff(&[1, 1, 1, 1]).coeff(2) == q(1, 6), || "q1^4 hbar^2".into())?;
    for r in [kp_residual_q1(&g).map_err(err)?, kp_residual_q2(&g).map_err(err)?] {
        residual(&r)?;
        ensure(r.hbar_hi >= 2 && r.weight >= 2, || format!("{} checked only to hbar^{} weight {}", r.label, r.hbar_hi, r.weight))?;
    }
    Ok(())
}

fn tau_ness(data: &TauData, label: &str) -> Verdict {
    // Z to |nu| <= 6 for the Plücker relations; F to weight 10 so the t-equation residual is reliable through weight 6.
    let z = build_tau(data, PCaps::new(6, 6), HWindow::new(-8, 8)).map_err(err)?;
    residual(&pluecker_check(&z, 6).map_err(err)?).map_err(|e| format!("{label}: {e}"))?;
    let f = free_energy_plain(data, PCaps::new(10, 10), HWindow::new(-1, 1)).map_err(err)?;
    let r = kp_residual_t(&f, KpEquation::First).map_err(err)?;
    residual(&r).map_err(|e| format!("{label}: {e}"))?;
    ensure(r.weight >= 6, || format!("{label}: kp1-t reliable only to weight {}", r.weight))
}

fn hypergeometric_tau() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut sets = vec![("psi=y, y=z".to_string(), TauData::naive_hodge())];
    for i in 0..10 {
        sets.push((format!("random set {i}"), random_family_two(&mut rng, 40).map_err(err)?));
    }
    sets.par_iter().map(|(label, d)| tau_ness(d, label)).collect()
}

fn inversion_lemma() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let w = q(rng.gen_range(-9..=9), rng.gen_range(1..=7));
        let beta = q(rng.gen_range(1..=9) * if rng.gen_bool(0.5) { 1 } else { -1 }, rng.gen_range(1..=7));
        let (a, b) = inversion_check(&w, &beta, 12).map_err(err)?;
        ensure(a.is_zero() && b.is_zero(), || format!("residual at w={w}, beta={beta}"))?;
    }
    // w = 0: C_m = m^m/m! beta^{m-1}
    for beta in [qi(1), q(-2, 3)] {
        let mut fact = Q::one();
        let mut pw = Q::one();
        for m in 1..=5i64 {
            fact *= qi(m);
            let mm: Q = (0..m).map(|_| qi(m)).product();
            let expected = mm / &fact * &pw;
            ensure(inversion_coeff(&Q::zero(), &beta, m as u32) == expected, || format!("C_{m} at beta={beta}"))?;
            pw *= &beta;
        }
    }
    Ok(())
}

fn mv_lemma() -> Verdict {
    for (w, beta) in [(q(1, 2), qi(1)), (qi(-3), q(2, 5)), (q(2, 3), q(-1, 2))] {
        let (direct, tau) = mv_lemma_sides(&w, &beta, 4, HWindow::new(-4, 4)).map_err(err)?;
        ensure(!direct.is_zero() && direct.same_terms(&tau), || format!("w={w}, beta={beta}"))?;
    }
    Ok(())
}

fn tr_tau() -> Verdict {
    let curve = SpectralCurve::naive_hodge();
    let data = TauData::naive_hodge();
    let x = build_x(&data, 8).map_err(err)?.x;
    let mut eng = TrEngine::new(&curve, 18).map_err(err)?;
    for (g, n) in [(0, 3), (1, 1)] {
        let w = eng.omega(g, n).map_err(err)?;
        let tr = doss_expand(&w, &curve, 6).map_err(err)?;
        let tau = tau_side_differentials(&data, &x, g, n, 6).map_err(err)?;
        ensure(!tau.is_empty() && tr == tau, || format!("({g},{n}): TR {tr:?} vs tau {tau:?}"))?;
        let lr = loop_equation_check_with(&eng, &w).map_err(err)?;
        ensure(lr.pass(), || format!("loop equations ({g},{n}): {:?}", lr.failures))?;
    }
    Ok(())
}

fn triple_hodge() -> Verdict {
    for (u, s) in [(1, 2), (1, 1), (2, 3)] {
        let p = TripleHodgeParams::new(qi(u), qi(s)).map_err(err)?;
        let out = triple_hodge_pipeline(&p, 7, 2).map_err(err)?;
        ensure(out.unstable_shape_ok, || format!("({u},{s}) unstable terms"))?;
        ensure(!out.table.is_zero() && out.pipeline.same_terms(&out.table), || format!("({u},{s}) pipeline vs table"))?;
        residual(&kp_residual_q1(&out.pipeline).map_err(err)?)?;
        residual(&kp_residual_q2(&out.pipeline).map_err(err)?)?;
    }
    let p = TripleHodgeParams::new(qi(0), qi(1)).map_err(err)?;
    let g = triple_hodge_table_side(&p, PCaps::new(7, 7), 2).map_err(err)?;
    ensure(!g.is_zero() && odd_support(&g), || "(0,1) not supported on odd q".into())
}

fn structural() -> Verdict {
    // H_{0,2} of X = a z/(1 + b z) is the constant log a
    for (a, b) in [(qi(3), q(2, 5)), (q(-1, 2), qi(4))] {
        let xm = ZSeries::from_coeffs(vec![Q::one(), b.clone()], 11).inv().map_err(err)?.shift_up(1).scale(&a);
        let h = h02_of(&xm, 10).map_err(err)?;
        ensure(h.series.is_zero() && h.log_arg == a, || format!("H02 at a={a}, b={b}"))?;
    }
    ensure(moebius_relation_check(&qi(1), &qi(1), 10).map_err(err)?.is_zero(), || "lemma X vs inversion X".into())?;
    // torus action: omega_{g,n} scales by lambda^{2-2g-n} on both sides
    let lambda = q(2, 3);
    let curve = SpectralCurve::naive_hodge();
    let mut a = TrEngine::new(&curve, 16).map_err(err)?;
    let mut b = TrEngine::new(&curve.scale_dy(&lambda).map_err(err)?, 16).map_err(err)?;
    let data = TauData::naive_hodge();
    let scaled = rescale_data(&lambda, &data).map_err(err)?;
    let x = build_x(&data, 8).map_err(err)?.x;
    ensure(build_x(&scaled, 8).map_err(err)?.x == x, || "X changed under rescaling".into())?;
    for (g, n) in [(0u32, 3u32), (1, 1)] {
        let f: Q = (0..(n as i32 + 2 * g as i32 - 2)).map(|_| Q::one() / &lambda).product();
        ensure(b.omega(g, n).map_err(err)? == a.omega(g, n).map_err(err)?.scale(&f), || format!("TR ({g},{n})"))?;
        let h: BTreeMap<_, _> = tau_side_differentials(&data, &x, g, n, 6).map_err(err)?;
        let h2 = tau_side_differentials(&scaled, &x, g, n, 6).map_err(err)?;
        let expected: BTreeMap<_, _> = h.iter().map(|(k, v)| (k.clone(), v * &f)).collect();
        ensure(!h.is_empty() && h2 == expected, || format!("tau ({g},{n})"))?;
    }
    // finiteness verdicts
    let nh = finiteness_check(&build_x(&data, 12).map_err(err)?, 8).map_err(err)?;
    ensure(matches!(nh, Finiteness::NotPolynomial { .. }), || format!("naive Hodge: {nh:?}"))?;
    let (w, beta) = (q(1, 2), qi(3));
    let th = finiteness_check(&SpectralData::from_x(&inversion_x(&w, &beta, 14).map_err(err)?).map_err(err)?, 10).map_err(err)?;
    let mut roots = vec![(-beta.clone(), 1usize), (-(&w + qi(1)) * &beta, 1usize)];
    roots.sort();
    match &th {
        Finiteness::Polynomial { c, .. } if th.r() == Some(1) && *c == roots => Ok(()),
        _ => Err(format!("triple Hodge: {th:?}")),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Verdict, u64); 8] = [
        ("stirling tables from the T-recursion", stirling_tables, 1),
        ("naive-Hodge generating function solves KP", naive_hodge_kp, 10),
        ("hypergeometric tau-functions: KP and Plücker", hypergeometric_tau, 60),
        ("inversion lemma", inversion_lemma, 1),
        ("Mariño-Vafa lemma consistency", mv_lemma, 60),
        ("topological recursion equals tau-side correlators", tr_tau, 60),
        ("triple-Hodge pipeline solves KP", triple_hodge, 120),
        ("structural invariants", structural, 10),
    ];
    let mut failed = Vec::new();
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let over = if elapsed > Duration::from_secs(*budget) { format!(" (over {budget}s budget)") } else { String::new() };
        match verdict {
            Ok(()) => println!("PASS {}: {name} [{:.2}s]{over}", i + 1, elapsed.as_secs_f64()),
            Err(e) => {
                println!("FAIL {}: {name} [{:.2}s]: {e}", i + 1, elapsed.as_secs_f64());
                failed.push(i + 1);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", criteria.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
