//! Seeded Monte Carlo benchmarks for DOA estimation and source enumeration.
//!
//! Run `k` of every sweep point draws its data from the seed
//! `run_seed(base_seed, k)`, so results do not depend on the order in which
//! runs execute or on how many worker threads are used. All methods at a
//! sweep point consume the same snapshots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;
use serde_json::Value;

use crate::array_model::{sample_covariance, snr_db, synthesize_snapshots, Scenario};
use crate::doa::{estimate_doa, DoaMethod, SearchOptions};
use crate::enumeration::{enumerate_from_covariance, Approach, Criterion, EnumOptions};
use crate::error::{Error, Result};
use crate::noise_cov::{ConfiguredEstimator, EstimatorKind, EstimatorOptions, NoiseEstimator};

/// Root mean squared angle error in degrees over all runs and sources.
///
/// Each run's estimates are paired with `true_doas` in sorted order.
pub fn rmse(true_doas: &[f64], estimates_per_run: &[Vec<f64>]) -> Result<f64> {
    let mut truth = true_doas.to_vec();
    truth.sort_by(f64::total_cmp);
    let mut sum = 0.0;
    let mut count = 0usize;
    for run in estimates_per_run {
        if run.len() != truth.len() {
            return Err(Error::Dimension(format!(
                "run has {} estimates for {} sources",
                run.len(),
                truth.len()
            )));
        }
        let mut est = run.clone();
        est.sort_by(f64::total_cmp);
        for (e, t) in est.iter().zip(&truth) {
            sum += (e - t).powi(2);
            count += 1;
        }
    }
    if count == 0 {
        return Ok(f64::NAN);
    }
    Ok((sum / count as f64).sqrt())
}

/// What the benchmark varies between sweep points.
#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    /// The scenario as given; the sweep value is its SNR in dB.
    Fixed,
    /// Source power set to reach each SNR (dB).
    Snr(Vec<f64>),
    /// Second source moved to each angle; the sweep value is the separation
    /// from the first source. `snr_db` overrides the scenario's source power.
    Separation {
        second_doa_deg: Vec<f64>,
        snr_db: Option<f64>,
    },
}

impl Sweep {
    /// Concrete scenarios with their sweep values.
    pub fn points(&self, base: &Scenario) -> Result<Vec<(f64, Scenario)>> {
        let points = match self {
            Sweep::Fixed => vec![(snr_db(base), base.clone())],
            Sweep::Snr(grid) => {
                if grid.is_empty() {
                    return Err(Error::Config("SNR grid is empty".into()));
                }
                grid.iter().map(|&s| (s, base.with_snr_db(s))).collect()
            }
            Sweep::Separation {
                second_doa_deg,
                snr_db,
            } => {
                if second_doa_deg.is_empty() {
                    return Err(Error::Config("separation grid is empty".into()));
                }
                if base.doas_deg.len() != 2 {
                    return Err(Error::Config(
                        "a separation sweep needs exactly two sources".into(),
                    ));
                }
                let base = match snr_db {
                    Some(s) => base.with_snr_db(*s),
                    None => base.clone(),
                };
                second_doa_deg
                    .iter()
                    .map(|&psi2| {
                        let mut s = base.clone();
                        s.doas_deg[1] = psi2;
                        (psi2 - s.doas_deg[0], s)
                    })
                    .collect()
            }
        };
        for (_, s) in &points {
            s.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(points)
    }
}

/// A noise estimator paired with a DOA criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct DoaVariant {
    pub method: DoaMethod,
    pub estimator: EstimatorKind,
}

impl DoaVariant {
    pub const ALL: [DoaVariant; 4] = [
        DoaVariant {
            method: DoaMethod::Sml,
            estimator: EstimatorKind::Imlse,
        },
        DoaVariant {
            method: DoaMethod::Sml,
            estimator: EstimatorKind::Noniterative,
        },
        DoaVariant {
            method: DoaMethod::Dml,
            estimator: EstimatorKind::Imlse,
        },
        DoaVariant {
            method: DoaMethod::Dml,
            estimator: EstimatorKind::Noniterative,
        },
    ];

    /// `sml-imlse`, `sml-noniter`, `dml-imlse` or `dml-noniter`.
    pub fn name(&self) -> String {
        let est = match self.estimator {
            EstimatorKind::Imlse => "imlse",
            EstimatorKind::Noniterative => "noniter",
        };
        format!("{}-{}", self.method.name(), est)
    }
}

impl std::str::FromStr for DoaVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (method, est) = s
            .split_once('-')
            .ok_or_else(|| Error::Config(format!("invalid method '{s}'")))?;
        Ok(DoaVariant {
            method: method.parse()?,
            estimator: est.parse()?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct DoaBenchSpec {
    pub scenario: Scenario,
    pub sweep: Sweep,
    pub variants: Vec<DoaVariant>,
    pub search: SearchOptions,
    pub estimator: EstimatorOptions,
    /// Worker threads; 1 runs serially.
    pub workers: usize,
}

/// Where the enumeration benchmark gets its covariance from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DataMode {
    #[default]
    Sampled,
    /// Exact model covariance, no sampling noise.
    Exact,
}

#[derive(Debug, Clone)]
pub struct EnumBenchSpec {
    pub scenario: Scenario,
    pub sweep: Sweep,
    pub approaches: Vec<Approach>,
    pub data: DataMode,
    pub options: EnumOptions,
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    RmseDeg(f64),
    Successes(usize),
}

/// One line of benchmark output.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep_value: f64,
    pub method: String,
    pub metric: Metric,
    /// Runs that produced an estimate.
    pub runs: usize,
    /// Runs excluded because estimation failed.
    pub failures: usize,
}

impl ResultRow {
    pub fn rmse_deg(&self) -> Option<f64> {
        match self.metric {
            Metric::RmseDeg(v) => Some(v),
            Metric::Successes(_) => None,
        }
    }

    pub fn success_count(&self) -> Option<usize> {
        match self.metric {
            Metric::Successes(v) => Some(v),
            Metric::RmseDeg(_) => None,
        }
    }
}

/// Maps `f` over `0..count`, on `workers` threads when `workers > 1`.
/// Output order is the index order either way.
fn map_runs<T, F>(workers: usize, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if workers <= 1 {
        return Ok((0..count).map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..count).into_par_iter().map(f).collect()))
}

fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        a.sweep_value
            .total_cmp(&b.sweep_value)
            .then_with(|| a.method.cmp(&b.method))
    });
}

/// Monte Carlo RMSE of every DOA variant at every sweep point.
pub fn run_doa_benchmark(spec: &DoaBenchSpec) -> Result<Vec<ResultRow>> {
    spec.scenario.validate()?;
    spec.search.validate()?;
    spec.estimator.validate()?;
    if spec.variants.is_empty() {
        return Err(Error::Config("no DOA methods selected".into()));
    }
    let q = spec.scenario.sources();
    if q == 0 {
        return Err(Error::Config("DOA benchmark needs at least one source".into()));
    }
    let points = spec.sweep.points(&spec.scenario)?;
    let runs = spec.scenario.runs;
    let geometry = &spec.scenario.geometry;

    let outcomes: Vec<Vec<Option<Vec<f64>>>> = map_runs(spec.workers, points.len() * runs, |job| {
        let (_, scenario) = &points[job / runs];
        let run_index = (job % runs) as u64;
        let r_hat = match synthesize_snapshots(scenario, run_index) {
            Ok(x) => sample_covariance(&x),
            Err(_) => return vec![None; spec.variants.len()],
        };
        let mut noise: BTreeMap<EstimatorKind, Option<_>> = BTreeMap::new();
        spec.variants
            .iter()
            .map(|v| {
                let q_hat = noise
                    .entry(v.estimator)
                    .or_insert_with(|| {
                        ConfiguredEstimator {
                            kind: v.estimator,
                            options: spec.estimator,
                        }
                        .estimate(&r_hat, q)
                        .ok()
                        .map(|e| e.q_hat)
                    })
                    .clone()?;
                estimate_doa(geometry, &r_hat, q, &q_hat, v.method, &spec.search)
                    .ok()
                    .map(|res| res.psi_hat_deg)
            })
            .collect()
    })?;

    let mut rows = Vec::new();
    for (p, (sweep_value, scenario)) in points.iter().enumerate() {
        for (vi, variant) in spec.variants.iter().enumerate() {
            let estimates: Vec<Vec<f64>> = (0..runs)
                .filter_map(|k| outcomes[p * runs + k][vi].clone())
                .collect();
            rows.push(ResultRow {
                sweep_value: *sweep_value,
                method: variant.name(),
                metric: Metric::RmseDeg(rmse(&scenario.doas_deg, &estimates)?),
                runs: estimates.len(),
                failures: runs - estimates.len(),
            });
        }
    }
    sort_rows(&mut rows);
    Ok(rows)
}

/// Monte Carlo success counts of every (approach, criterion) pair.
pub fn run_enum_benchmark(spec: &EnumBenchSpec) -> Result<Vec<ResultRow>> {
    spec.scenario.validate()?;
    spec.options.search.validate()?;
    spec.options.estimator.validate()?;
    if spec.approaches.is_empty() {
        return Err(Error::Config("no enumeration approaches selected".into()));
    }
    let points = spec.sweep.points(&spec.scenario)?;
    let runs = spec.scenario.runs;
    let geometry = &spec.scenario.geometry;
    let n = spec.scenario.snapshots;

    let outcomes: Vec<Vec<Option<[usize; 3]>>> = map_runs(spec.workers, points.len() * runs, |job| {
        let (_, scenario) = &points[job / runs];
        let run_index = (job % runs) as u64;
        let r_hat = match spec.data {
            DataMode::Sampled => synthesize_snapshots(scenario, run_index).map(|x| sample_covariance(&x)),
            DataMode::Exact => scenario.model_covariance(),
        };
        let Ok(r_hat) = r_hat else {
            return vec![None; spec.approaches.len()];
        };
        spec.approaches
            .iter()
            .map(|&a| {
                enumerate_from_covariance(geometry, &r_hat, n, a, &spec.options)
                    .ok()
                    .map(|res| [res.q_hat_aic, res.q_hat_mdl, res.q_hat_eef])
            })
            .collect()
    })?;

    let mut rows = Vec::new();
    for (p, (sweep_value, scenario)) in points.iter().enumerate() {
        let truth = scenario.sources();
        for (ai, approach) in spec.approaches.iter().enumerate() {
            let picks: Vec<[usize; 3]> = (0..runs)
                .filter_map(|k| outcomes[p * runs + k][ai])
                .collect();
            for (ci, criterion) in Criterion::ALL.iter().enumerate() {
                let successes = picks.iter().filter(|q| q[ci] == truth).count();
                rows.push(ResultRow {
                    sweep_value: *sweep_value,
                    method: format!("approach{}-{}", approach.number(), criterion.name()),
                    metric: Metric::Successes(successes),
                    runs: picks.len(),
                    failures: runs - picks.len(),
                });
            }
        }
    }
    sort_rows(&mut rows);
    Ok(rows)
}

/// Formats `x` with six significant digits, like C's `%.6g`.
pub fn format_sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub const CSV_HEADER: &str = "sweep_value,method,rmse_deg,success_count,runs,failures";

/// CSV text for `rows`, in the given order.
pub fn render_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let rmse = r.rmse_deg().map(format_sig6).unwrap_or_default();
        let successes = r.success_count().map(|s| s.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            format_sig6(r.sweep_value),
            r.method,
            rmse,
            successes,
            r.runs,
            r.failures
        );
    }
    out
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    fs::write(path, render_csv(rows))?;
    Ok(())
}

/// Parses a file written by [`emit_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Data("unexpected CSV header".into()));
    }
    let bad = |line: &str| Error::Data(format!("malformed CSV line '{line}'"));
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad(line));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(line));
            let int = |s: &str| s.parse::<usize>().map_err(|_| bad(line));
            let metric = match (f[2].is_empty(), f[3].is_empty()) {
                (false, true) => Metric::RmseDeg(num(f[2])?),
                (true, false) => Metric::Successes(int(f[3])?),
                _ => return Err(bad(line)),
            };
            Ok(ResultRow {
                sweep_value: num(f[0])?,
                method: f[1].to_string(),
                metric,
                runs: int(f[4])?,
                failures: int(f[5])?,
            })
        })
        .collect()
}

/// Gnuplot-friendly table text: one line per sweep value, one column per method.
pub fn render_plotdata(rows: &[ResultRow]) -> String {
    let mut methods: Vec<&str> = rows.iter().map(|r| r.method.as_str()).collect();
    methods.sort_unstable();
    methods.dedup();
    let mut sweep: Vec<f64> = rows.iter().map(|r| r.sweep_value).collect();
    sweep.sort_by(f64::total_cmp);
    sweep.dedup();

    let mut out = String::from("# sweep_value");
    for m in &methods {
        out.push(' ');
        out.push_str(m);
    }
    out.push('\n');
    for s in sweep {
        out.push_str(&format_sig6(s));
        for m in &methods {
            let value = rows
                .iter()
                .find(|r| r.sweep_value == s && r.method == *m)
                .map(|r| match r.metric {
                    Metric::RmseDeg(v) => format_sig6(v),
                    Metric::Successes(c) => c.to_string(),
                })
                .unwrap_or_else(|| "nan".into());
            out.push(' ');
            out.push_str(&value);
        }
        out.push('\n');
    }
    out
}

pub fn emit_plotdata(rows: &[ResultRow], path: &Path) -> Result<()> {
    fs::write(path, render_plotdata(rows))?;
    Ok(())
}

/// Benchmark settings that may accompany a scenario in its JSON file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessKeys {
    /// One DOA variant name or a list of them.
    pub method: Option<OneOrMany>,
    pub approach: Option<Approach>,
    pub coarse_step_deg: Option<f64>,
    pub refine_tol_deg: Option<f64>,
    /// Positions of the second source for a separation sweep.
    pub separation_sweep_deg: Option<Vec<f64>>,
    pub exact_covariance: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

const HARNESS_KEY_NAMES: [&str; 6] = [
    "method",
    "approach",
    "coarse_step_deg",
    "refine_tol_deg",
    "separation_sweep_deg",
    "exact_covariance",
];

/// A parsed benchmark configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub scenario: Scenario,
    pub harness: HarnessKeys,
}

impl BenchConfig {
    /// Parses a scenario file. Keys outside the scenario schema and the
    /// harness keys are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        let Value::Object(mut map) = value else {
            return Err(Error::Config("scenario file must hold a JSON object".into()));
        };
        let mut harness = serde_json::Map::new();
        for key in HARNESS_KEY_NAMES {
            if let Some(v) = map.remove(key) {
                harness.insert(key.to_string(), v);
            }
        }
        let scenario: Scenario = serde_json::from_value(Value::Object(map))
            .map_err(|e| Error::Config(e.to_string()))?;
        scenario
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        let harness: HarnessKeys = serde_json::from_value(Value::Object(harness))
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(Self { scenario, harness })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn sweep(&self) -> Result<Sweep> {
        let grid = &self.scenario.snr_grid_db;
        match &self.harness.separation_sweep_deg {
            Some(second) => {
                let snr_db = match grid.len() {
                    0 => None,
                    1 => Some(grid[0]),
                    _ => {
                        return Err(Error::Config(
                            "a separation sweep takes at most one SNR value".into(),
                        ))
                    }
                };
                Ok(Sweep::Separation {
                    second_doa_deg: second.clone(),
                    snr_db,
                })
            }
            None if grid.is_empty() => Ok(Sweep::Fixed),
            None => Ok(Sweep::Snr(grid.clone())),
        }
    }

    pub fn search_options(&self) -> Result<SearchOptions> {
        let mut s = SearchOptions::default();
        if let Some(v) = self.harness.coarse_step_deg {
            s.coarse_step_deg = v;
        }
        if let Some(v) = self.harness.refine_tol_deg {
            s.refine_tol_deg = v;
        }
        s.validate()?;
        Ok(s)
    }

    pub fn variants(&self) -> Result<Vec<DoaVariant>> {
        match &self.harness.method {
            None => Ok(DoaVariant::ALL.to_vec()),
            Some(OneOrMany::One(s)) => Ok(vec![s.parse()?]),
            Some(OneOrMany::Many(v)) => v.iter().map(|s| s.parse()).collect(),
        }
    }

    pub fn doa_spec(&self, workers: usize) -> Result<DoaBenchSpec> {
        Ok(DoaBenchSpec {
            scenario: self.scenario.clone(),
            sweep: self.sweep()?,
            variants: self.variants()?,
            search: self.search_options()?,
            estimator: EstimatorOptions::default(),
            workers,
        })
    }

    pub fn enum_spec(&self, workers: usize) -> Result<EnumBenchSpec> {
        Ok(EnumBenchSpec {
            scenario: self.scenario.clone(),
            sweep: self.sweep()?,
            approaches: match self.harness.approach {
                Some(a) => vec![a],
                None => Approach::ALL.to_vec(),
            },
            data: if self.harness.exact_covariance.unwrap_or(false) {
                DataMode::Exact
            } else {
                DataMode::Sampled
            },
            options: EnumOptions {
                estimator: EstimatorOptions::default(),
                search: self.search_options()?,
            },
            workers,
        })
    }
}
