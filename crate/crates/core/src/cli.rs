//! Command-line front end: scenario configs in, verdicts and coefficient tables out.
//!
//! Exit codes: 0 all residuals pass, 1 a residual fails, 2 config or flag parse
//! failure, 3 computation failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::changevars::{
    build_x, finiteness_check, h02_of, p_of_q, t_recursion, Finiteness, SpectralData,
};
use crate::error::Error;
use crate::hodge::{
    inversion_check, inversion_coeff, inversion_x, mv_lemma_sides, moebius_relation_check, naive_hodge_generating,
    odd_support, triple_hodge_pipeline, triple_hodge_t, triple_hodge_table_side, xdiff_residual, TripleHodgeParams,
};
use crate::kpcheck::{hirota_residual, kp_residual_q1, kp_residual_q2, kp_residual_t, pluecker_check, schur_expand, KpEquation, ResidualReport};
use crate::rational::{factorial, fmt_q, parse_q, pow_q, q, qi, Q};
use crate::series::{HWindow, PCaps, Poly, ZSeries};
use crate::spectral::{
    airy_kappa, airy_matches_table, doss_expand, doss_expand_02, loop_equation_check_with, x_series, SpectralCurve, TrEngine,
};
use crate::tau::{build_tau, extract_hgn, free_energy_plain, rescale_data, FamilyTag, TauData};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Parser)]
#[command(name = "kpcohft", version, about = "Exact KP integrability checks for hypergeometric tau-functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a verification scenario; exit 0 iff every residual vanishes.
    Verify {
        #[arg(value_enum)]
        scenario: Scenario,
        #[command(flatten)]
        opts: Opts,
    },
    /// Write a coefficient table.
    Tables {
        #[arg(value_enum)]
        kind: TableKind,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    NaiveHodge,
    TripleHodge,
    Inversion,
    MvLemma,
    Pluecker,
    TrCompare,
    TorusAction,
    Moebius,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableKind {
    TForms,
    POfQ,
    TauCoeffs,
    Omega,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Opts {
    /// TOML scenario config; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Framing parameter w (rational, "num/den").
    #[arg(long, allow_hyphen_values = true)]
    pub w: Option<String>,
    /// Hurwitz parameter beta.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    /// Triple-Hodge parameter u.
    #[arg(long, allow_hyphen_values = true)]
    pub u: Option<String>,
    /// Triple-Hodge parameter s, with w = s^2 - 1.
    #[arg(long, allow_hyphen_values = true)]
    pub s: Option<String>,
    /// Series order (z-order, X-order or partition size, per scenario).
    #[arg(long)]
    pub order: Option<u32>,
    /// Weight cap for q- or p-variables.
    #[arg(long)]
    pub weight: Option<u32>,
    /// Highest hbar power checked.
    #[arg(long)]
    pub hbar_order: Option<i32>,
    /// Write output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// On-disk scenario config. Rationals are `"num/den"` strings.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Option<String>,
    pub w: Option<String>,
    pub beta: Option<String>,
    pub u: Option<String>,
    pub s: Option<String>,
    pub lambda: Option<String>,
    pub a: Option<String>,
    pub b: Option<String>,
    pub order: Option<u32>,
    pub weight: Option<u32>,
    pub hbar_order: Option<i32>,
    pub q_cap: Option<u32>,
    pub kmax: Option<u32>,
    pub depth: Option<u32>,
    pub random_sets: Option<u32>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub tau: Option<TauConfig>,
    pub curve: Option<CurveConfig>,
}

/// `psi_hat` / `y_hat` coefficients keyed `"k,m"` (the `y^k hbar^{2m}` / `z^k hbar^{2m}` term).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauConfig {
    pub preset: Option<String>,
    #[serde(default)]
    pub psi_hat: BTreeMap<String, String>,
    #[serde(default)]
    pub y_hat: BTreeMap<String, String>,
    pub precision: Option<u32>,
}

/// `dx` and `dy` as `[numerator, denominator]` polynomial strings in `z`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub preset: Option<String>,
    pub w: Option<String>,
    pub dx: Option<[String; 2]>,
    pub dy: Option<[String; 2]>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("computation: {0}")]
    Compute(#[from] Error),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) | CliError::Io(_) => 3,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Flags merged over the config file, with rationals parsed.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    pub w: Option<Q>,
    pub beta: Option<Q>,
    pub u: Option<Q>,
    pub s: Option<Q>,
    pub lambda: Option<Q>,
    pub a: Option<Q>,
    pub b: Option<Q>,
    pub order: Option<u32>,
    pub weight: Option<u32>,
    pub hbar_order: Option<i32>,
    pub q_cap: Option<u32>,
    pub kmax: Option<u32>,
    pub depth: Option<u32>,
    pub random_sets: u32,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub tau: Option<TauData>,
    pub curve: Option<SpectralCurve>,
}

fn rat(field: &str, v: &Option<String>) -> CliResult<Option<Q>> {
    v.as_ref().map(|s| parse_q(s).map_err(|e| CliError::Config(format!("{field}: {e}")))).transpose()
}

pub fn load_config(path: &Path) -> CliResult<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> CliResult<ScenarioConfig> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

impl Settings {
    pub fn resolve(opts: &Opts) -> CliResult<Self> {
        Self::merge(&Self::config(opts)?, opts)
    }

    fn config(opts: &Opts) -> CliResult<ScenarioConfig> {
        match &opts.config {
            Some(p) => load_config(p),
            None => Ok(ScenarioConfig::default()),
        }
    }

    /// Like `resolve`, but rejects a config whose `scenario` names a different scenario.
    pub fn resolve_for(scenario: Scenario, opts: &Opts) -> CliResult<Self> {
        let cfg = Self::config(opts)?;
        if let Some(name) = &cfg.scenario {
            if name != scenario_name(scenario) {
                return Err(CliError::Config(format!(
                    "config is for scenario {name:?}, not {:?}",
                    scenario_name(scenario)
                )));
            }
        }
        Self::merge(&cfg, opts)
    }

    pub fn merge(cfg: &ScenarioConfig, opts: &Opts) -> CliResult<Self> {
        let pick = |flag: &Option<String>, file: &Option<String>| flag.clone().or_else(|| file.clone());
        let mut st = Settings {
            w: rat("w", &pick(&opts.w, &cfg.w))?,
            beta: rat("beta", &pick(&opts.beta, &cfg.beta))?,
            u: rat("u", &pick(&opts.u, &cfg.u))?,
            s: rat("s", &pick(&opts.s, &cfg.s))?,
            lambda: rat("lambda", &cfg.lambda)?,
            a: rat("a", &cfg.a)?,
            b: rat("b", &cfg.b)?,
            order: opts.order.or(cfg.order),
            weight: opts.weight.or(cfg.weight),
            hbar_order: opts.hbar_order.or(cfg.hbar_order),
            q_cap: cfg.q_cap,
            kmax: cfg.kmax,
            depth: cfg.depth,
            random_sets: cfg.random_sets.unwrap_or(0),
            seed: cfg.seed.unwrap_or(1),
            out: opts.out.clone().or_else(|| cfg.out.clone()),
            format: opts.format.or(cfg.format).unwrap_or_default(),
            tau: None,
            curve: None,
        };
        for (name, v) in [("order", st.order), ("weight", st.weight), ("q_cap", st.q_cap), ("depth", st.depth)] {
            if v == Some(0) {
                return Err(CliError::Config(format!("{name} must be positive")));
            }
        }
        if let Some(t) = &cfg.tau {
            st.tau = Some(tau_from_config(t, &st)?);
        }
        if let Some(c) = &cfg.curve {
            st.curve = Some(curve_from_config(c)?);
        }
        Ok(st)
    }
}

fn parse_key(k: &str) -> CliResult<(u32, u32)> {
    let bad = || CliError::Config(format!("coefficient key {k:?} must be \"k,m\""));
    let (a, b) = k.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn tau_from_config(t: &TauConfig, st: &Settings) -> CliResult<TauData> {
    let explicit = !t.psi_hat.is_empty() || !t.y_hat.is_empty();
    match t.preset.as_deref() {
        Some(_) if explicit => Err(CliError::Config("tau: give either a preset or coefficients".into())),
        Some("naive-hodge") => Ok(TauData::naive_hodge()),
        Some("marino-vafa") => {
            let w = st.w.clone().ok_or_else(|| CliError::Config("marino-vafa preset needs w".into()))?;
            let beta = st.beta.clone().unwrap_or_else(Q::one);
            Ok(TauData::marino_vafa(&w, &beta, t.precision.unwrap_or(24))?)
        }
        Some(p) => Err(CliError::Config(format!("unknown tau preset {p:?}"))),
        None => {
            let mut psi = BTreeMap::new();
            for (k, v) in &t.psi_hat {
                psi.insert(parse_key(k)?, parse_q(v).map_err(|e| CliError::Config(e.to_string()))?);
            }
            let mut y = BTreeMap::new();
            for (k, v) in &t.y_hat {
                y.insert(parse_key(k)?, parse_q(v).map_err(|e| CliError::Config(e.to_string()))?);
            }
            TauData::new(psi, y, FamilyTag::Generic, t.precision).map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

fn curve_from_config(c: &CurveConfig) -> CliResult<SpectralCurve> {
    let conf = |e: Error| CliError::Config(e.to_string());
    match (c.preset.as_deref(), &c.dx, &c.dy) {
        (Some("airy"), None, None) => Ok(SpectralCurve::airy()),
        (Some("naive-hodge"), None, None) => Ok(SpectralCurve::naive_hodge()),
        (Some("triple-hodge"), None, None) => {
            let w = rat("curve.w", &c.w)?.ok_or_else(|| CliError::Config("triple-hodge curve needs w".into()))?;
            SpectralCurve::triple_hodge(&w).map_err(conf)
        }
        (None, Some(dx), Some(dy)) => SpectralCurve::parse((&dx[0], &dx[1]), (&dy[0], &dy[1])).map_err(conf),
        (Some(p), None, None) => Err(CliError::Config(format!("unknown curve preset {p:?}"))),
        _ => Err(CliError::Config("curve: give either a preset or both dx and dy".into())),
    }
}

/// One named verdict with supporting data.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: Value) -> Self {
        Self { name: name.into(), pass, detail }
    }

    fn residual(name: impl Into<String>, r: &ResidualReport) -> Self {
        Self::new(name, r.pass, r.to_json())
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub scenario: Scenario,
    pub parameters: Value,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "command": "verify",
            "scenario": scenario_name(self.scenario),
            "parameters": self.parameters,
            "pass": self.pass(),
            "checks": self.checks.iter().map(|c| json!({"name": c.name, "pass": c.pass, "detail": c.detail})).collect::<Vec<_>>(),
        })
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["check", "pass"]).map_err(csv_err)?;
        for c in &self.checks {
            w.write_record([c.name.as_str(), if c.pass { "true" } else { "false" }]).map_err(csv_err)?;
        }
        w.write_record(["all", if self.pass() { "true" } else { "false" }]).map_err(csv_err)?;
        finish_csv(w)
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e.to_string()))
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> CliResult<String> {
    let bytes = w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))
}

pub fn scenario_name(s: Scenario) -> &'static str {
    match s {
        Scenario::NaiveHodge => "naive-hodge",
        Scenario::TripleHodge => "triple-hodge",
        Scenario::Inversion => "inversion",
        Scenario::MvLemma => "mv-lemma",
        Scenario::Pluecker => "pluecker",
        Scenario::TrCompare => "tr-compare",
        Scenario::TorusAction => "torus-action",
        Scenario::Moebius => "moebius",
    }
}

pub const SCENARIOS: [Scenario; 8] = [
    Scenario::NaiveHodge,
    Scenario::TripleHodge,
    Scenario::Inversion,
    Scenario::MvLemma,
    Scenario::Pluecker,
    Scenario::TrCompare,
    Scenario::TorusAction,
    Scenario::Moebius,
];

pub const TABLE_KINDS: [TableKind; 4] = [TableKind::TForms, TableKind::POfQ, TableKind::TauCoeffs, TableKind::Omega];

pub fn parse_scenario(name: &str) -> CliResult<Scenario> {
    SCENARIOS
        .into_iter()
        .find(|s| scenario_name(*s) == name)
        .ok_or_else(|| CliError::Config(format!("unknown scenario {name:?}")))
}

pub fn parse_table_kind(name: &str) -> CliResult<TableKind> {
    TABLE_KINDS
        .into_iter()
        .find(|k| table_name(*k) == name)
        .ok_or_else(|| CliError::Config(format!("unknown table kind {name:?}")))
}

/// Runs a scenario from TOML config text (flags play no part).
pub fn verify_config_text(scenario: Scenario, text: &str) -> CliResult<Report> {
    let cfg = parse_config(text)?;
    if let Some(name) = &cfg.scenario {
        if name != scenario_name(scenario) {
            return Err(CliError::Config(format!("config is for scenario {name:?}")));
        }
    }
    run_scenario(scenario, &Settings::merge(&cfg, &Opts::default())?)
}

/// Builds a table from TOML config text.
pub fn table_config_text(kind: TableKind, text: &str) -> CliResult<Table> {
    run_table(kind, &Settings::merge(&parse_config(text)?, &Opts::default())?)
}

pub fn table_name(k: TableKind) -> &'static str {
    match k {
        TableKind::TForms => "t-forms",
        TableKind::POfQ => "p-of-q",
        TableKind::TauCoeffs => "tau-coeffs",
        TableKind::Omega => "omega",
    }
}

fn opt_q(x: &Option<Q>, default: Q) -> Q {
    x.clone().unwrap_or(default)
}

/// Stirling numbers of the second kind by the triangle recurrence.
pub fn stirling2(n: u32, k: u32) -> Q {
    let mut row = vec![Q::one()];
    for i in 1..=n as usize {
        let mut next = vec![Q::zero(); i + 1];
        for j in 1..=i {
            let prev = if j < row.len() { row[j].clone() } else { Q::zero() };
            next[j] = qi(j as i64) * prev + &row[j - 1];
        }
        row = next;
    }
    row.get(k as usize).cloned().unwrap_or_else(Q::zero)
}

fn form_json(f: &crate::changevars::LinearForm) -> Value {
    f.to_json()
}

pub fn run_scenario(scenario: Scenario, st: &Settings) -> CliResult<Report> {
    match scenario {
        Scenario::NaiveHodge => naive_hodge(st),
        Scenario::TripleHodge => triple_hodge(st),
        Scenario::Inversion => inversion(st),
        Scenario::MvLemma => mv_lemma(st),
        Scenario::Pluecker => pluecker(st),
        Scenario::TrCompare => tr_compare(st),
        Scenario::TorusAction => torus_action(st),
        Scenario::Moebius => moebius(st),
    }
}

fn naive_hodge(st: &Settings) -> CliResult<Report> {
    let h = st.hbar_order.unwrap_or(2);
    let weight = st.weight.unwrap_or(10);
    let cap = st.q_cap.unwrap_or(8);
    let kmax = st.kmax.unwrap_or(4);
    let sd = build_x(&TauData::naive_hodge(), cap.max(5) as usize + 1)?;
    let mut checks = Vec::new();
    let rows: [[i64; 5]; 3] = [[1, 1, 1, 1, 1], [1, 3, 6, 10, 15], [1, 7, 25, 65, 140]];
    let mut ok = true;
    for (k, row) in rows.iter().enumerate() {
        let t = t_recursion(&sd, 0, k as i32, 5)?;
        ok &= row.iter().enumerate().all(|(m, v)| t.coeff(m as u32 + 1) == qi(*v));
    }
    checks.push(Check::new("stirling-rows", ok, json!({"rows": rows})));
    let mut tables = serde_json::Map::new();
    let mut ok = true;
    for k in 0..=kmax {
        let t = t_recursion(&sd, 0, k as i32, cap)?;
        ok &= (1..=cap).all(|m| t.coeff(m) == stirling2(k + m, m));
        tables.insert(format!("T_{k}"), form_json(&t));
    }
    checks.push(Check::new("stirling-oracle", ok, Value::Object(tables)));
    let g = naive_hodge_generating(weight, h)?;
    checks.push(Check::residual("kp1-q", &kp_residual_q1(&g)?));
    checks.push(Check::residual("kp2-q", &kp_residual_q2(&g)?));
    Ok(Report {
        scenario: Scenario::NaiveHodge,
        parameters: json!({"hbar_order": h, "weight": weight, "q_cap": cap, "kmax": kmax}),
        checks,
    })
}

fn triple_params(st: &Settings) -> CliResult<TripleHodgeParams> {
    let u = opt_q(&st.u, Q::one());
    let p = match (&st.s, &st.w) {
        (Some(s), _) => TripleHodgeParams::new(u, s.clone()),
        (None, Some(w)) => TripleHodgeParams::from_w(u, w),
        (None, None) => TripleHodgeParams::new(u, qi(2)),
    };
    p.map_err(|e| CliError::Config(e.to_string()))
}

fn triple_hodge(st: &Settings) -> CliResult<Report> {
    let p = triple_params(st)?;
    let h = st.hbar_order.unwrap_or(2);
    let weight = st.weight.unwrap_or(7);
    let mut checks = Vec::new();
    checks.push(Check::new(
        "calabi-yau",
        p.u().is_zero() || p.cy_residual() == Some(Q::zero()),
        json!({"triple": p.cy_triple().iter().map(fmt_q).collect::<Vec<_>>()}),
    ));
    if p.u().is_zero() {
        let g = triple_hodge_table_side(&p, PCaps::new(weight, weight), h)?;
        checks.push(Check::new("nonzero", !g.is_zero(), json!({"terms": g.len()})));
        checks.push(Check::new("odd-support", odd_support(&g), json!({})));
        checks.push(Check::residual("kp1-q", &kp_residual_q1(&g)?));
        checks.push(Check::residual("kp2-q", &kp_residual_q2(&g)?));
    } else {
        let r = triple_hodge_pipeline(&p, weight, h)?;
        checks.push(Check::new("unstable-shape", r.unstable_shape_ok, json!({})));
        checks.push(Check::new(
            "pipeline-equals-table",
            r.pipeline.same_terms(&r.table) && !r.table.is_zero(),
            json!({"terms": r.table.len()}),
        ));
        checks.push(Check::residual("kp1-q", &kp_residual_q1(&r.pipeline)?));
        checks.push(Check::residual("kp2-q", &kp_residual_q2(&r.pipeline)?));
    }
    Ok(Report {
        scenario: Scenario::TripleHodge,
        parameters: json!({"u": fmt_q(p.u()), "s": fmt_q(p.s()), "w": fmt_q(&p.w()), "weight": weight, "hbar_order": h}),
        checks,
    })
}

fn inversion(st: &Settings) -> CliResult<Report> {
    let w = opt_q(&st.w, q(3, 5));
    let beta = opt_q(&st.beta, qi(2));
    let n = st.order.unwrap_or(12) as usize;
    let (r1, r2) = inversion_check(&w, &beta, n)?;
    let mut checks = vec![
        Check::new("z-of-x-of-z", r1.is_zero(), json!({"order": n})),
        Check::new("x-of-z-of-x", r2.is_zero(), json!({"order": n})),
        Check::new("x-differential-equation", xdiff_residual(&w, &beta, n)?.is_zero(), json!({})),
    ];
    if w.is_zero() {
        // C_m = m^{m-1}/(m-1)! beta^{m-1}
        let ok = (1..=5u32).all(|m| {
            inversion_coeff(&w, &beta, m) == pow_q(&qi(m as i64), m as i32 - 1) / factorial(m - 1) * pow_q(&beta, m as i32 - 1)
        });
        checks.push(Check::new("w0-closed-form", ok, json!({"m_max": 5})));
    }
    Ok(Report {
        scenario: Scenario::Inversion,
        parameters: json!({"w": fmt_q(&w), "beta": fmt_q(&beta), "order": n}),
        checks,
    })
}

fn mv_lemma(st: &Settings) -> CliResult<Report> {
    let w = opt_q(&st.w, q(1, 2));
    let beta = opt_q(&st.beta, qi(1));
    let m = st.order.unwrap_or(4);
    let h = st.hbar_order.unwrap_or(4);
    let window = HWindow::new(-h, h);
    let (direct, tau) = mv_lemma_sides(&w, &beta, m, window)?;
    let checks = vec![Check::new(
        "character-sum-equals-tau",
        direct.same_terms(&tau),
        json!({"terms": direct.len()}),
    )];
    Ok(Report {
        scenario: Scenario::MvLemma,
        parameters: json!({"w": fmt_q(&w), "beta": fmt_q(&beta), "size_cap": m, "hbar_window": [-h, h]}),
        checks,
    })
}

/// `psi_hat = y`, `y_hat = z`.
pub fn default_pluecker_data() -> TauData {
    TauData::naive_hodge()
}

/// Random Family II data with small rational parameters and linear `R_i`.
pub fn random_family_two<R: Rng>(rng: &mut R, precision: u32) -> crate::error::Result<TauData> {
    let mut small = |nonzero: bool| loop {
        let n: i64 = rng.gen_range(-4..=4);
        let d: i64 = rng.gen_range(1..=3);
        if !nonzero || n != 0 {
            return q(n, d);
        }
    };
    let alpha = small(true);
    let r1 = Poly::new(vec![Q::zero(), small(false)]);
    let r2 = Poly::new(vec![Q::one(), small(false)]);
    let r3 = Poly::new(vec![Q::one(), small(false)]);
    let r4 = Poly::new(vec![Q::one(), small(false)]);
    TauData::family_two(&alpha, [&r1, &r2, &r3, &r4], precision)
}

fn tau_checks(label: &str, data: &TauData, weight: u32) -> CliResult<Vec<Check>> {
    let caps = PCaps::new(weight, weight);
    let window = HWindow::new(-(weight as i32) - 2, weight as i32 + 2);
    let z = build_tau(data, caps, window)?;
    let f = free_energy_plain(data, caps, HWindow::new(-1, 2))?;
    Ok(vec![
        Check::residual(format!("{label}pluecker"), &pluecker_check(&z, weight)?),
        Check::residual(format!("{label}kp1-t"), &kp_residual_t(&f, KpEquation::First)?),
        Check::residual(format!("{label}kp2-t"), &kp_residual_t(&f, KpEquation::Second)?),
        Check::residual(format!("{label}hirota"), &hirota_residual(&f, weight.min(4))?),
    ])
}

fn pluecker(st: &Settings) -> CliResult<Report> {
    let weight = st.weight.unwrap_or(6);
    let data = st.tau.clone().unwrap_or_else(default_pluecker_data);
    let mut checks = tau_checks("", &data, weight)?;
    let mut rng = ChaCha8Rng::seed_from_u64(st.seed);
    let precision = 3 * weight + 8;
    for i in 0..st.random_sets {
        let d = random_family_two(&mut rng, precision)?;
        checks.extend(tau_checks(&format!("random-{i}/"), &d, weight)?);
    }
    Ok(Report {
        scenario: Scenario::Pluecker,
        parameters: json!({"weight": weight, "random_sets": st.random_sets, "seed": st.seed}),
        checks,
    })
}

/// X-expansion of the tau-side `d_1...d_n H_{g,n}` (entry `k` multiplies `prod X_i^{k_i-1} dX_i`).
pub fn tau_side_differentials(data: &TauData, x: &ZSeries, g: u32, n: u32, order: u32) -> crate::error::Result<BTreeMap<Vec<u32>, Q>> {
    let e = 2 * g as i32 - 2 + n as i32;
    let f = free_energy_plain(data, PCaps::new(order, n), HWindow::new(-1, e))?;
    let h = extract_hgn(&f, x, g, n, order)?;
    Ok(h.x_coeffs.into_iter().map(|(k, c)| {
        let m: Q = k.iter().map(|&v| qi(v as i64)).product();
        (k, c * m)
    }).collect())
}

fn keyed_json(m: &BTreeMap<Vec<u32>, Q>) -> Value {
    let obj: BTreeMap<String, String> =
        m.iter().map(|(k, v)| (k.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","), fmt_q(v))).collect();
    json!(obj)
}

fn tr_compare(st: &Settings) -> CliResult<Report> {
    let order = st.order.unwrap_or(6);
    let depth = st.depth.unwrap_or(18) as usize;
    let (curve, data) = match (&st.curve, &st.tau) {
        (Some(c), d) => (c.clone(), d.clone()),
        (None, Some(d)) => return Err(CliError::Config(format!("tr-compare with [tau] {:?} needs the matching [curve]", d.family()))),
        (None, None) => (SpectralCurve::naive_hodge(), Some(TauData::naive_hodge())),
    };
    let mut eng = TrEngine::new(&curve, depth)?;
    let mut checks = Vec::new();
    for (g, n) in [(0, 3), (1, 1)] {
        let w = eng.omega(g, n)?;
        checks.push(Check::new(format!("symmetric-{g}-{n}"), w.is_symmetric(), json!({"terms": w.terms.len()})));
        let lr = loop_equation_check_with(&eng, &w)?;
        checks.push(Check::new(format!("loop-equations-{g}-{n}"), lr.pass(), lr.to_json()));
        if let Some(d) = &data {
            let sd = build_x(d, order as usize + 2)?;
            let tr = doss_expand(&w, &curve, order)?;
            let tau = tau_side_differentials(d, &sd.x, g, n, order)?;
            checks.push(Check::new(
                format!("tr-equals-tau-{g}-{n}"),
                tr == tau && !tau.is_empty(),
                json!({"tr": keyed_json(&tr), "tau": keyed_json(&tau)}),
            ));
        }
    }
    if let Some(d) = &data {
        let sd = build_x(d, order as usize + 4)?;
        let x = x_series(&curve, order as usize + 4)?;
        let h = h02_of(&sd.x, order + 2)?.series.d1d2().truncate(order);
        let tr = doss_expand_02(&curve, order)?;
        checks.push(Check::new("spectral-x-equals-tau-x", x.truncate(order as usize) == sd.x.truncate(order as usize), json!({})));
        checks.push(Check::new("tr-equals-tau-0-2", tr == h, json!({"order": order})));
    }
    let kappa = airy_kappa(depth)?;
    let table = crate::hodge::IntersectionTable::builtin(4)?;
    let mut airy = TrEngine::new(&SpectralCurve::airy(), depth)?;
    let mut ok = true;
    for (g, n) in [(0, 3), (1, 1), (0, 4), (1, 2)] {
        ok &= airy_matches_table(&airy.omega(g, n)?, &kappa, &table)?;
    }
    checks.push(Check::new("airy-dictionary", ok, json!({"kappa": fmt_q(&kappa)})));
    Ok(Report {
        scenario: Scenario::TrCompare,
        parameters: json!({"curve": curve.to_json(), "order": order, "depth": depth}),
        checks,
    })
}

fn torus_action(st: &Settings) -> CliResult<Report> {
    let lambda = opt_q(&st.lambda, q(2, 3));
    if lambda.is_zero() {
        return Err(CliError::Config("lambda must be nonzero".into()));
    }
    let depth = st.depth.unwrap_or(16) as usize;
    let order = st.order.unwrap_or(6);
    let curve = st.curve.clone().unwrap_or_else(SpectralCurve::naive_hodge);
    let scaled = curve.scale_dy(&lambda)?;
    let mut a = TrEngine::new(&curve, depth)?;
    let mut b = TrEngine::new(&scaled, depth)?;
    let mut checks = Vec::new();
    let data = st.tau.clone().unwrap_or_else(TauData::naive_hodge);
    let rescaled = rescale_data(&lambda, &data)?;
    let sd = build_x(&data, order as usize + 2)?;
    let sd2 = build_x(&rescaled, order as usize + 2)?;
    checks.push(Check::new("x-invariant", sd.x == sd2.x, json!({})));
    for (g, n) in [(0u32, 3u32), (1, 1)] {
        let f = pow_q(&lambda, 2 - 2 * g as i32 - n as i32);
        let ok = b.omega(g, n)? == a.omega(g, n)?.scale(&f);
        checks.push(Check::new(format!("tr-homogeneity-{g}-{n}"), ok, json!({"factor": fmt_q(&f)})));
        let h = tau_side_differentials(&data, &sd.x, g, n, order)?;
        let h2 = tau_side_differentials(&rescaled, &sd.x, g, n, order)?;
        let expected: BTreeMap<Vec<u32>, Q> = h.iter().map(|(k, v)| (k.clone(), v * &f)).collect();
        checks.push(Check::new(format!("tau-homogeneity-{g}-{n}"), h2 == expected && !h.is_empty(), json!({})));
    }
    Ok(Report {
        scenario: Scenario::TorusAction,
        parameters: json!({"lambda": fmt_q(&lambda), "order": order, "depth": depth}),
        checks,
    })
}

fn moebius(st: &Settings) -> CliResult<Report> {
    let w = opt_q(&st.w, qi(1));
    let beta = opt_q(&st.beta, qi(1));
    let a = opt_q(&st.a, qi(3));
    let b = opt_q(&st.b, q(2, 5));
    let n = st.order.unwrap_or(10);
    if a.is_zero() {
        return Err(CliError::Config("a must be nonzero".into()));
    }
    let mut checks = vec![Check::new(
        "inversion-vs-lemma-x",
        moebius_relation_check(&w, &beta, n as usize)?.is_zero(),
        json!({"order": n}),
    )];
    // X = a z / (1 + b z)
    let xm = ZSeries::from_coeffs(vec![Q::one(), b.clone()], n as usize + 1).inv()?.shift_up(1).scale(&a);
    let h = h02_of(&xm, n)?;
    checks.push(Check::new(
        "h02-constant-log-a",
        h.series.is_zero() && h.log_arg == a,
        json!({"log_arg": fmt_q(&h.log_arg)}),
    ));
    let cap = 8;
    let nh = finiteness_check(&build_x(&TauData::naive_hodge(), 12)?, cap)?;
    checks.push(Check::new("finiteness-naive-hodge", nh == Finiteness::NotPolynomial { cap }, serde_json::to_value(&nh).unwrap_or(Value::Null)));
    let th = finiteness_check(&SpectralData::from_x(&inversion_x(&w, &beta, 14)?)?, 10)?;
    let ok = match &th {
        Finiteness::Polynomial { c, .. } => {
            let mut expected = vec![(-beta.clone(), 1usize), (-(&w + qi(1)) * &beta, 1usize)];
            expected.sort_by(|x, y| x.0.cmp(&y.0));
            th.r() == Some(1) && *c == expected
        }
        Finiteness::NotPolynomial { .. } => false,
    };
    checks.push(Check::new("finiteness-triple-hodge", ok, serde_json::to_value(&th).unwrap_or(Value::Null)));
    Ok(Report {
        scenario: Scenario::Moebius,
        parameters: json!({"w": fmt_q(&w), "beta": fmt_q(&beta), "a": fmt_q(&a), "b": fmt_q(&b), "order": n}),
        checks,
    })
}

/// Deterministic table: column names plus rows of strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub kind: TableKind,
    pub parameters: Value,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: BTreeMap<&str, &String> = self.columns.iter().copied().zip(r.iter()).collect();
                json!(obj)
            })
            .collect();
        json!({
            "schema_version": SCHEMA_VERSION,
            "command": "tables",
            "kind": table_name(self.kind),
            "parameters": self.parameters,
            "rows": rows,
        })
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        finish_csv(w)
    }
}

fn linear_rows(forms: &[(u32, crate::changevars::LinearForm)]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (k, f) in forms {
        for (m, c) in f.terms() {
            rows.push(vec![k.to_string(), m.to_string(), fmt_q(c)]);
        }
    }
    rows
}

fn spectral_data(st: &Settings, order: usize) -> CliResult<(SpectralData, Value)> {
    if let Some(w) = &st.w {
        let beta = opt_q(&st.beta, Q::one());
        let x = inversion_x(w, &beta, order + 1)?;
        return Ok((SpectralData::from_x(&x)?, json!({"x": "inversion", "w": fmt_q(w), "beta": fmt_q(&beta)})));
    }
    let data = st.tau.clone().unwrap_or_else(TauData::naive_hodge);
    Ok((build_x(&data, order)?, json!({"x": "tau-data"})))
}

pub fn run_table(kind: TableKind, st: &Settings) -> CliResult<Table> {
    match kind {
        TableKind::TForms => {
            let kmax = st.kmax.unwrap_or(2);
            let cap = st.q_cap.unwrap_or(5);
            if st.u.is_some() {
                let p = triple_params(st)?;
                let forms: Vec<_> = (0..=kmax).map(|k| (k, triple_hodge_t(&p, k, cap))).collect();
                return Ok(Table {
                    kind,
                    parameters: json!({"source": "triple-hodge", "u": fmt_q(p.u()), "s": fmt_q(p.s()), "kmax": kmax, "q_cap": cap}),
                    columns: vec!["k", "m", "value"],
                    rows: linear_rows(&forms),
                });
            }
            let (sd, mut params) = spectral_data(st, cap as usize + 1)?;
            let forms = (0..=kmax).map(|k| Ok((k, t_recursion(&sd, 0, k as i32, cap)?))).collect::<crate::error::Result<Vec<_>>>()?;
            params["kmax"] = json!(kmax);
            params["q_cap"] = json!(cap);
            Ok(Table { kind, parameters: params, columns: vec!["k", "m", "value"], rows: linear_rows(&forms) })
        }
        TableKind::POfQ => {
            let kmax = st.order.unwrap_or(5);
            let cap = st.q_cap.unwrap_or(kmax);
            let (sd, mut params) = spectral_data(st, cap.max(kmax) as usize + 1)?;
            let forms = (1..=kmax).map(|k| Ok((k, p_of_q(&sd, k, cap)?))).collect::<crate::error::Result<Vec<_>>>()?;
            params["order"] = json!(kmax);
            params["q_cap"] = json!(cap);
            Ok(Table { kind, parameters: params, columns: vec!["k", "m", "value"], rows: linear_rows(&forms) })
        }
        TableKind::TauCoeffs => {
            let weight = st.weight.unwrap_or(4);
            let h = st.hbar_order.unwrap_or(2);
            let data = st.tau.clone().unwrap_or_else(TauData::naive_hodge);
            let window = HWindow::new(-(weight as i32), h);
            let z = build_tau(&data, PCaps::new(weight, weight), window)?;
            let coeffs = schur_expand(&z, weight)?;
            let mut rows = Vec::new();
            for (nu, c) in &coeffs {
                for (e, v) in c.terms() {
                    rows.push(vec![format!("{nu}"), e.to_string(), fmt_q(v)]);
                }
            }
            Ok(Table {
                kind,
                parameters: json!({"weight": weight, "hbar_window": [-(weight as i32), h]}),
                columns: vec!["partition", "hbar", "value"],
                rows,
            })
        }
        TableKind::Omega => {
            let curve = st.curve.clone().unwrap_or_else(SpectralCurve::naive_hodge);
            let depth = st.depth.unwrap_or(16) as usize;
            let mut eng = TrEngine::new(&curve, depth)?;
            let mut rows = Vec::new();
            for (g, n) in [(0, 3), (0, 4), (1, 1), (1, 2)] {
                let w = eng.omega(g, n)?;
                for (k, c) in &w.terms {
                    let key = k.iter().map(|(a, o)| format!("{}:{}", fmt_q(&w.points[*a]), o)).collect::<Vec<_>>().join(" ");
                    rows.push(vec![g.to_string(), n.to_string(), key, fmt_q(c)]);
                }
            }
            Ok(Table {
                kind,
                parameters: json!({"curve": curve.to_json(), "depth": depth}),
                columns: vec!["g", "n", "slots", "value"],
                rows,
            })
        }
    }
}

fn emit(text: &str, out: &Option<PathBuf>) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Executes a parsed command line and returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let result = match &cli.command {
        Command::Verify { scenario, opts } => Settings::resolve_for(*scenario, opts).and_then(|st| {
            let report = run_scenario(*scenario, &st)?;
            let text = match st.format {
                Format::Json => render_json(&report.to_json()),
                Format::Csv => report.to_csv()?,
            };
            emit(&text, &st.out)?;
            Ok(if report.pass() { 0 } else { 1 })
        }),
        Command::Tables { kind, opts } => Settings::resolve(opts).and_then(|st| {
            let table = run_table(*kind, &st)?;
            let text = match st.format {
                Format::Json => render_json(&table.to_json()),
                Format::Csv => table.to_csv()?,
            };
            emit(&text, &st.out)?;
            Ok(0)
        }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("kpcohft: {e}");
            e.exit_code()
        }
    }
}

/// Applies `KPCOHFT_THREADS` to the global worker pool.
pub fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("KPCOHFT_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| CliError::Config(format!("KPCOHFT_THREADS={v:?} is not a count")))?;
        if n == 0 {
            return Err(CliError::Config("KPCOHFT_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}
