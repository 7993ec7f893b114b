//! Acceptance criteria: each returns one pass/fail outcome with its numbers.

use std::collections::HashSet;
use std::path::Path;

use num_complex::Complex64;
use pellclass::asymptotics::{count_range, moment_report, size_residual, tail_empirical, MomentMode};
use pellclass::charsum::{b_m, b_m_direct, c_mau, charfreq, d_au, BConvention, CMode};
use pellclass::classno::{class_number_cycles, DiscriminantRecord, DEFAULT_L_TOL};
use pellclass::model::{
    c0_constant, euler_expectation, expectation_times_phi, series_big_h, series_expectation, tail_formula, tail_mc,
    EulerProductConfig, ModelVariant, TailMode, DEFAULT_P_TRUNC,
};
use pellclass::pell::{enumerate_family, family_bounds, scan_family};
use pellclass::special::{zeta2, EULER_GAMMA};

use crate::commands::{count_rows, family_records, run, Command};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::Cell;

/// Setting this variable to `1` adds the `H = 1000` count, which needs the
/// family up to about `6.6e8` (tens of minutes on one core).
pub const FULL_ENV: &str = "PELLCLASS_FULL";

/// Result of one criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    /// False when the criterion is known to be out of reach at this scale;
    /// such a failure is reported but does not fail the suite.
    pub attainable: bool,
}

impl Outcome {
    pub fn line(&self) -> String {
        let tag = match (self.pass, self.attainable) {
            (true, _) => "PASS",
            (false, true) => "FAIL",
            (false, false) => "FAIL (known limitation)",
        };
        format!("{tag} {}: {}", self.name, self.detail)
    }
}

type Check = fn(&mut Shared) -> CliResult<(bool, String)>;

/// One criterion: name, whether it is attainable, and its check.
pub struct Criterion {
    pub name: &'static str,
    pub attainable: bool,
    check: Check,
}

/// Data shared between criteria.
pub struct Shared {
    pub seed: u64,
    /// Family records for `alpha = 1/4` up to `count_range(100)`.
    large: Option<Vec<DiscriminantRecord>>,
}

impl Shared {
    pub fn new(seed: u64) -> Self {
        Shared { seed, large: None }
    }

    fn large(&mut self) -> CliResult<&[DiscriminantRecord]> {
        if self.large.is_none() {
            self.large = Some(family_records(count_range(100.0), 0.25, DEFAULT_L_TOL, false)?);
        }
        Ok(self.large.as_deref().unwrap())
    }
}

pub const CRITERIA: &[Criterion] = &[
    Criterion { name: "oracle-equivalence", attainable: true, check: oracle_equivalence },
    Criterion { name: "dual-class-numbers", attainable: true, check: dual_class_numbers },
    Criterion { name: "enumeration-completeness", attainable: true, check: enumeration_completeness },
    Criterion { name: "c0-quadrature", attainable: true, check: c0_quadrature },
    Criterion { name: "series-vs-product", attainable: false, check: series_vs_product },
    Criterion { name: "character-frequencies", attainable: false, check: character_frequencies },
    Criterion { name: "l-moments", attainable: true, check: l_moments },
    Criterion { name: "tail-distribution", attainable: false, check: tail_distribution },
    Criterion { name: "size-residual-trend", attainable: true, check: size_residual_trend },
    Criterion { name: "class-count-trend", attainable: false, check: class_count_trend },
    Criterion { name: "determinism", attainable: true, check: determinism },
];

/// Names of the criteria cheap enough for a routine `verify`.
pub const FAST: &[&str] = &[
    "oracle-equivalence",
    "dual-class-numbers",
    "enumeration-completeness",
    "c0-quadrature",
    "character-frequencies",
    "size-residual-trend",
];

pub fn evaluate(c: &Criterion, shared: &mut Shared) -> Outcome {
    let (pass, detail) = match (c.check)(shared) {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    Outcome {
        name: c.name,
        pass,
        detail,
        attainable: c.attainable,
    }
}

/// Every criterion, reporting each outcome as soon as it is known.
pub fn run_all(seed: u64, mut report: impl FnMut(&Outcome)) -> Vec<Outcome> {
    let mut shared = Shared::new(seed);
    CRITERIA
        .iter()
        .map(|c| {
            let o = evaluate(c, &mut shared);
            report(&o);
            o
        })
        .collect()
}

pub fn all(seed: u64) -> Vec<Outcome> {
    run_all(seed, |_| {})
}

pub fn fast() -> Vec<Outcome> {
    let mut shared = Shared::new(1);
    CRITERIA
        .iter()
        .filter(|c| FAST.contains(&c.name))
        .map(|c| evaluate(c, &mut shared))
        .collect()
}

fn oracle_equivalence(_: &mut Shared) -> CliResult<(bool, String)> {
    let mut checked = 0u64;
    for u in 1..=25u64 {
        for a in (3..=4 * u * u + 2).filter(|&a| d_au(a, u).is_some()) {
            for m in 1..=60u64 {
                let (x, y) = (c_mau(m, a, u, CMode::Direct)?, c_mau(m, a, u, CMode::Closed)?);
                if x != y {
                    return Ok((false, format!("C(m = {m}, a = {a}, u = {u}): direct {x}, closed {y}")));
                }
                checked += 1;
            }
        }
    }
    for u in 1..=64u64 {
        for m in 1..=60u64 {
            let (x, y) = (b_m_direct(m, u), b_m(m, u, BConvention::Standard));
            if x != y {
                return Ok((false, format!("B(m = {m}, u = {u}): direct {x}, table {y}")));
            }
        }
    }
    Ok((true, format!("{checked} character sums and 3840 B values agree")))
}

fn dual_class_numbers(_: &mut Shared) -> CliResult<(bool, String)> {
    let records = family_records(1e5, 0.25, DEFAULT_L_TOL, false)?;
    for r in &records {
        let cycles = class_number_cycles(r.d)?;
        if cycles != r.h {
            return Ok((false, format!("d = {}: cycles {cycles}, formula {}", r.d, r.h)));
        }
    }
    Ok((true, format!("{} discriminants agree", records.len())))
}

fn enumeration_completeness(_: &mut Shared) -> CliResult<(bool, String)> {
    let mut sizes = Vec::new();
    for alpha in [0.05, 0.15, 0.25, 0.45] {
        let fast: HashSet<u64> = enumerate_family(&family_bounds(1e4, alpha)?)?.iter().map(|p| p.d).collect();
        let slow: HashSet<u64> = scan_family(10_000, alpha)?.iter().map(|p| p.d).collect();
        if fast != slow {
            let mut diff: Vec<u64> = fast.symmetric_difference(&slow).copied().collect();
            diff.sort_unstable();
            diff.truncate(5);
            return Ok((false, format!("alpha = {alpha}: sets differ, e.g. {diff:?}")));
        }
        sizes.push(format!("{alpha}: {}", fast.len()));
    }
    Ok((true, format!("sets equal ({})", sizes.join(", "))))
}

fn c0_quadrature(_: &mut Shared) -> CliResult<(bool, String)> {
    let c0 = c0_constant();
    Ok(((c0 - 0.819).abs() <= 5e-4, format!("C_0 = {c0:.6}")))
}

fn series_vs_product(_: &mut Shared) -> CliResult<(bool, String)> {
    const M: u64 = 100_000;
    let cfg = EulerProductConfig::new(DEFAULT_P_TRUNC);
    let zs = [
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(2.0, 0.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(1.0, 1.0),
    ];
    let mut total = 0;
    let mut over = Vec::new();
    let mut note = |gap: f64, what: String| {
        total += 1;
        if gap > 1e-3 {
            over.push(format!("{what}: {gap:.2e}"));
        }
    };
    for &z in &zs {
        for s in [1.0, 1.5, 3.0] {
            let a = series_expectation(z, s, M)?;
            let b = euler_expectation(z, ModelVariant::Generalized(s), &cfg)?.value;
            note((a - b).norm(), format!("E at z = {z}, s = {s}"));
        }
        let e = euler_expectation(z, ModelVariant::Standard, &cfg)?.value;
        let a = series_big_h(z, M, 0)?;
        note((a - e / zeta2()).norm(), format!("sum H_m at z = {z}"));
        let b = series_big_h(z, M, 1)?;
        let rhs = (expectation_times_phi(z, &cfg)? - 2.0 * EULER_GAMMA * e) / zeta2();
        note((b - rhs).norm(), format!("sum H'_m at z = {z}"));
    }
    let detail = format!("{} of {total} identities off by more than 1e-3 [{}]", over.len(), over.join("; "));
    Ok((over.is_empty(), detail))
}

fn character_frequencies(_: &mut Shared) -> CliResult<(bool, String)> {
    let family = enumerate_family(&family_bounds(1e5, 0.25)?)?;
    let mut worst = (0.0f64, 0u64);
    for f in charfreq(&family, 100) {
        let gap = (f.freq_plus - f.a_p)
            .abs()
            .max((f.freq_minus - f.b_p).abs())
            .max((f.freq_zero - f.c_p).abs());
        if gap > worst.0 {
            worst = (gap, f.p);
        }
    }
    Ok((worst.0 <= 0.05, format!("largest gap {:.4} at p = {} over {} discriminants", worst.0, worst.1, family.len())))
}

fn l_moments(shared: &mut Shared) -> CliResult<(bool, String)> {
    let x = 1e6;
    let large = shared.large()?;
    let records = &large[..large.partition_point(|r| r.d as f64 <= x)];
    let cfg = EulerProductConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for z in [Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(-1.0, 0.0), Complex64::new(1.0, 1.0)] {
        let r = moment_report(records, x, 0.25, z, MomentMode::LMoment, &cfg)?;
        let ratio = r.empirical / r.theoretical;
        pass &= (ratio - 1.0).norm() <= 0.3;
        parts.push(format!("z = {z}: {ratio:.4}"));
    }
    Ok((pass, format!("ratios {}", parts.join(", "))))
}

fn tail_distribution(shared: &mut Shared) -> CliResult<(bool, String)> {
    let x = 1e6;
    let records = family_records(x, 0.1, DEFAULT_L_TOL, false)?;
    let taus: Vec<f64> = (0..=10).map(|k| 1.2 + 0.1 * k as f64).collect();
    let curve = tail_empirical(&records, x, &taus);
    let within = |a: f64, b: f64, k: f64| a > 0.0 && b > 0.0 && a <= k * b && b <= k * a;
    let bad_emp: Vec<String> = taus
        .iter()
        .enumerate()
        .filter(|&(i, _)| !within(curve.empirical[i], curve.model[i], 3.0))
        .map(|(i, t)| format!("{t:.1}: {:.2e} vs {:.2e}", curve.empirical[i], curve.model[i]))
        .collect();
    let mc_taus = [1.5, 2.0, 2.5];
    let est = tail_mc(&mc_taus, 1_000_000, TailMode::Upper, ModelVariant::Standard, &EulerProductConfig::default(), shared.seed)?;
    let mc: Vec<String> = mc_taus
        .iter()
        .zip(&est)
        .map(|(&t, e)| format!("{t}: {:.2e} vs {:.2e}", e.estimate, tail_formula(t)))
        .collect();
    let mc_ok = mc_taus.iter().zip(&est).all(|(&t, e)| within(e.estimate, tail_formula(t), 2.0));
    let detail = format!(
        "{} records; empirical off by more than 3x at {} of {} points [{}]; Monte Carlo [{}]",
        records.len(),
        bad_emp.len(),
        taus.len(),
        bad_emp.join("; "),
        mc.join("; ")
    );
    Ok((bad_emp.is_empty() && mc_ok, detail))
}

fn size_residual_trend(_: &mut Shared) -> CliResult<(bool, String)> {
    let cfg = EulerProductConfig::default();
    let rs = [10.0, 20.0, 40.0, 80.0];
    let res: Vec<f64> = rs.iter().map(|&r| size_residual(r, &cfg)).collect::<Result<_, _>>()?;
    let pass = res.windows(2).all(|w| w[1].abs() < w[0].abs());
    Ok((pass, format!("residuals {:?}", res.iter().map(|v| format!("{v:.5}")).collect::<Vec<_>>())))
}

fn class_count_trend(shared: &mut Shared) -> CliResult<(bool, String)> {
    let full = std::env::var(FULL_ENV).is_ok_and(|v| v == "1");
    let mut ratios = Vec::new();
    let mut parts = Vec::new();
    for h in [100u64, 1_000, 10_000] {
        let range = count_range(h as f64);
        let rows = if h == 100 {
            count_rows(shared.large()?, 0.25, &[h], DEFAULT_P_TRUNC)?
        } else if range <= 1e9 && full {
            count_rows(&family_records(range, 0.25, DEFAULT_L_TOL, false)?, 0.25, &[h], DEFAULT_P_TRUNC)?
        } else {
            let why = if range > 1e9 { "beyond x <= 1e9" } else { "set PELLCLASS_FULL=1" };
            parts.push(format!("H = {h}: needs x = {range:.2e}, {why}"));
            continue;
        };
        let ratio = match rows[0][3] {
            Cell::Real(v) => v,
            Cell::Int(v) => v as f64,
        };
        ratios.push(ratio);
        parts.push(format!("H = {h}: ratio {ratio:.4}"));
    }
    let in_band = ratios.iter().all(|r| (0.5..=1.5).contains(r));
    let toward = ratios.windows(2).all(|w| (w[1] - 1.0).abs() <= (w[0] - 1.0).abs());
    Ok((ratios.len() == 3 && in_band && toward, parts.join("; ")))
}

/// Every CSV and cache file under `dir`, by relative path.
fn snapshot(dir: &Path) -> CliResult<Vec<(String, Vec<u8>)>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d)? {
            let p = e?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).expect("under dir").to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p)?));
            }
        }
    }
    out.sort();
    Ok(out)
}

/// The whole pipeline at `x = 1e5` in a fresh directory.
pub fn pipeline_snapshot(workers: usize, seed: u64) -> CliResult<Vec<(String, Vec<u8>)>> {
    let dir = tempfile::tempdir()?;
    let cfg = RunConfig {
        x: 1e5,
        alpha: 0.25,
        seed,
        primes: 10_000,
        tol: DEFAULT_L_TOL,
        out: dir.path().join("out"),
        workers,
        cache: dir.path().join("cache"),
    };
    let zs = vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0), Complex64::new(1.0, 1.0)];
    let cmds = [
        Command::Enumerate { cycles: false },
        Command::Charfreq { p_max: 100 },
        Command::Moments { zs: zs.clone(), mode: MomentMode::LMoment },
        Command::Moments { zs, mode: MomentMode::HMoment },
        Command::Tails { taus: vec![0.5, 1.0, 1.5], mc_samples: 50_000 },
        Command::Counts { h_grid: vec![10, 30] },
    ];
    for c in &cmds {
        run(c, &cfg)?;
    }
    snapshot(dir.path())
}

fn determinism(shared: &mut Shared) -> CliResult<(bool, String)> {
    let reference = pipeline_snapshot(1, shared.seed)?;
    for workers in [1, 2, 3] {
        let again = pipeline_snapshot(workers, shared.seed)?;
        if again.len() != reference.len() {
            return Err(CliError::Invariant(format!("{workers} workers wrote {} files, expected {}", again.len(), reference.len())));
        }
        for ((name, a), (_, b)) in reference.iter().zip(&again) {
            if a != b {
                return Ok((false, format!("{name} differs with {workers} workers")));
            }
        }
    }
    let names: Vec<&str> = reference.iter().map(|(n, _)| n.as_str()).collect();
    Ok((true, format!("{} files byte-identical over 1, 2, 3 workers and a repeat: {}", names.len(), names.join(", "))))
}
