use std::path::PathBuf;

use num_complex::Complex64;
use pellclass::asymptotics::{class_count_cumulative, count_range, moment_report, tail_empirical, z_in_range, MomentMode};
use pellclass::charsum::charfreq;
use pellclass::classno::{compute_records, DiscriminantRecord};
use pellclass::model::{tail_formula, tail_mc, ModelVariant, TailMode};
use pellclass::pell::{enumerate_family, family_bounds, PellPoint};

use crate::config::RunConfig;
use crate::criteria::{self, Outcome};
use crate::error::{CliError, CliResult};
use crate::output::{write_csv, Cell};
use crate::store::{check_rows, read_cache, read_cache_for, write_cache, CacheHeader, CacheRequest};

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    /// Enumerate the family, compute class numbers, write the cache.
    Enumerate { cycles: bool },
    /// Character frequencies for primes up to `p_max`.
    Charfreq { p_max: u64 },
    Moments { zs: Vec<Complex64>, mode: MomentMode },
    /// Empirical tail curve, plus a Monte Carlo tail when `mc_samples > 0`.
    Tails { taus: Vec<f64>, mc_samples: u64 },
    Counts { h_grid: Vec<u64> },
    /// Cache integrity plus the oracle and invariant checks.
    Verify { full: bool },
}

/// What a command produced.
#[derive(Debug, Default)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
    pub outcomes: Vec<Outcome>,
}

/// Run `cmd` on a pool of `cfg.workers` threads.
pub fn run(cmd: &Command, cfg: &RunConfig) -> CliResult<RunReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| dispatch(cmd, cfg))
}

fn dispatch(cmd: &Command, cfg: &RunConfig) -> CliResult<RunReport> {
    match cmd {
        Command::Enumerate { cycles } => enumerate(cfg, *cycles),
        Command::Charfreq { p_max } => run_charfreq(cfg, *p_max),
        Command::Moments { zs, mode } => moments(cfg, zs, *mode),
        Command::Tails { taus, mc_samples } => tails(cfg, taus, *mc_samples),
        Command::Counts { h_grid } => counts(cfg, h_grid),
        Command::Verify { full } => verify(cfg, *full),
    }
}

/// Family records for `(x, alpha)`, computed from scratch.
pub fn family_records(x: f64, alpha: f64, tol: f64, cycles: bool) -> CliResult<Vec<DiscriminantRecord>> {
    let family = enumerate_family(&family_bounds(x, alpha)?)?;
    Ok(compute_records(&family, tol, cycles)?)
}

fn enumerate(cfg: &RunConfig, cycles: bool) -> CliResult<RunReport> {
    let records = family_records(cfg.x, cfg.alpha, cfg.tol, cycles)?;
    let header = CacheHeader::new(cfg.x, cfg.alpha, cfg.primes, cfg.tol, records.len() as u64);
    let path = cfg.cache_file();
    write_cache(&path, &header, &records)?;
    Ok(RunReport {
        files: vec![path],
        lines: vec![format!("{} discriminants in D_{}({})", records.len(), cfg.alpha, cfg.x)],
        outcomes: Vec::new(),
    })
}

/// Records from the cache, checked row by row.
pub fn load_records(cfg: &RunConfig) -> CliResult<(CacheHeader, Vec<DiscriminantRecord>)> {
    let path = cfg.cache_file();
    if !path.exists() {
        return Err(CliError::Io(format!("no cache at {}; run `enumerate` first", path.display())));
    }
    let req = CacheRequest {
        x: cfg.x,
        alpha: cfg.alpha,
        l_tol: cfg.tol,
    };
    let (header, records) = read_cache_for(&path, &req)?;
    check_rows(&records)?;
    Ok((header, records))
}

fn points(records: &[DiscriminantRecord]) -> Vec<PellPoint> {
    records.iter().map(|r| r.point()).collect()
}

fn run_charfreq(cfg: &RunConfig, p_max: u64) -> CliResult<RunReport> {
    let (_, records) = load_records(cfg)?;
    let rows: Vec<Vec<Cell>> = charfreq(&points(&records), p_max)
        .into_iter()
        .map(|f| {
            vec![
                Cell::Int(f.p as i128),
                Cell::Real(f.freq_plus),
                Cell::Real(f.freq_minus),
                Cell::Real(f.freq_zero),
                Cell::Real(f.a_p),
                Cell::Real(f.b_p),
                Cell::Real(f.c_p),
            ]
        })
        .collect();
    let path = cfg.out.join("charfreq.csv");
    write_csv(&path, &["p", "freq_plus", "freq_minus", "freq_zero", "a_p", "b_p", "c_p"], &rows)?;
    Ok(RunReport {
        files: vec![path],
        ..Default::default()
    })
}

fn moments(cfg: &RunConfig, zs: &[Complex64], mode: MomentMode) -> CliResult<RunReport> {
    let (_, records) = load_records(cfg)?;
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for &z in zs {
        if !z_in_range(z, cfg.alpha, cfg.x) {
            lines.push(format!("warning: z = {z} lies outside the proven uniformity range at x = {}", cfg.x));
        }
        let r = moment_report(&records, cfg.x, cfg.alpha, z, mode, &cfg.euler())?;
        rows.push(vec![
            Cell::Real(z.re),
            Cell::Real(z.im),
            Cell::Real(r.empirical.re),
            Cell::Real(r.empirical.im),
            Cell::Real(r.theoretical.re),
            Cell::Real(r.theoretical.im),
            Cell::Real(r.rel_dev),
        ]);
    }
    let name = match mode {
        MomentMode::HMoment => "moments_h.csv",
        _ => "moments_L.csv",
    };
    let path = cfg.out.join(name);
    write_csv(
        &path,
        &["z_re", "z_im", "empirical_re", "empirical_im", "theoretical_re", "theoretical_im", "rel_dev"],
        &rows,
    )?;
    Ok(RunReport {
        files: vec![path],
        lines,
        outcomes: Vec::new(),
    })
}

fn tails(cfg: &RunConfig, taus: &[f64], mc_samples: u64) -> CliResult<RunReport> {
    let (_, records) = load_records(cfg)?;
    let curve = tail_empirical(&records, cfg.x, taus);
    let rows: Vec<Vec<Cell>> = (0..taus.len())
        .map(|i| vec![Cell::Real(curve.tau[i]), Cell::Real(curve.empirical[i]), Cell::Real(curve.model[i])])
        .collect();
    let path = cfg.out.join("tail.csv");
    write_csv(&path, &["tau", "empirical", "model"], &rows)?;
    let mut report = RunReport {
        files: vec![path],
        ..Default::default()
    };
    if mc_samples > 0 {
        let est = tail_mc(taus, mc_samples, TailMode::Upper, ModelVariant::Standard, &cfg.euler(), cfg.seed)?;
        let rows: Vec<Vec<Cell>> = taus
            .iter()
            .zip(&est)
            .map(|(&t, e)| vec![Cell::Real(t), Cell::Real(e.estimate), Cell::Real(e.stderr), Cell::Real(tail_formula(t))])
            .collect();
        for (&t, e) in taus.iter().zip(&est) {
            if e.low_count {
                report.lines.push(format!("warning: fewer than 25 Monte Carlo hits at tau = {t}"));
            }
        }
        let path = cfg.out.join("tail_mc.csv");
        write_csv(&path, &["tau", "estimate", "stderr", "formula"], &rows)?;
        report.files.push(path);
    }
    Ok(report)
}

fn counts(cfg: &RunConfig, h_grid: &[u64]) -> CliResult<RunReport> {
    let (header, records) = load_records(cfg)?;
    for &h in h_grid {
        let need = count_range(h as f64);
        if need > header.x {
            return Err(CliError::Config(format!(
                "counting h <= {h} needs the family up to x = {need:.4e}, cache holds x = {}",
                header.x
            )));
        }
    }
    let rows = count_rows(&records, cfg.alpha, h_grid, cfg.primes)?;
    let path = cfg.out.join("counts.csv");
    write_csv(&path, &["H", "count", "reference", "ratio"], &rows)?;
    Ok(RunReport {
        files: vec![path],
        ..Default::default()
    })
}

/// Cumulative counts, each `H` restricted to the range that captures every `h(d) <= H`.
pub fn count_rows(records: &[DiscriminantRecord], alpha: f64, h_grid: &[u64], p_trunc: u64) -> CliResult<Vec<Vec<Cell>>> {
    let mut rows = Vec::with_capacity(h_grid.len());
    for &h in h_grid {
        let range = count_range(h as f64);
        let end = records.partition_point(|r| r.d as f64 <= range);
        let c = class_count_cumulative(&records[..end], alpha, &[h], p_trunc)?[0];
        rows.push(vec![
            Cell::Int(c.h as i128),
            Cell::Int(c.count as i128),
            Cell::Real(c.reference),
            Cell::Real(c.count as f64 / c.reference),
        ]);
    }
    Ok(rows)
}

fn verify(cfg: &RunConfig, full: bool) -> CliResult<RunReport> {
    let mut report = RunReport::default();
    let path = cfg.cache_file();
    if path.exists() {
        let (header, records) = read_cache(&path)?;
        check_rows(&records)?;
        report.lines.push(format!("cache {}: {} rows ok", path.display(), header.count));
    }
    report.outcomes = if full { criteria::all(cfg.seed) } else { criteria::fast() };
    if let Some(bad) = report.outcomes.iter().find(|o| !o.pass && o.attainable) {
        let lines = report.outcomes.iter().map(|o| o.line()).collect::<Vec<_>>().join("\n");
        return Err(CliError::Invariant(format!("{}\n{} failed", lines, bad.name)));
    }
    Ok(report)
}

/// Parse `a`, `bi`, `a+bi` or `a-bi`.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot read complex number {s:?}");
    if let Some(body) = t.strip_suffix('i') {
        let split = body
            .char_indices()
            .skip(1)
            .filter(|&(i, c)| (c == '+' || c == '-') && !matches!(body.as_bytes()[i - 1], b'e' | b'E'))
            .map(|(i, _)| i)
            .last();
        let (re, im) = match split {
            Some(i) => (&body[..i], &body[i..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => "1",
            "-" => "-1",
            v => v,
        };
        Ok(Complex64::new(re.parse().map_err(|_| bad())?, im.parse().map_err(|_| bad())?))
    } else {
        Ok(Complex64::new(t.parse().map_err(|_| bad())?, 0.0))
    }
}
