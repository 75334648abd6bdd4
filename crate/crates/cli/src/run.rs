//! Experiment execution: per-trial persistence, resume, aggregation.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use randpoly_core::chebyshev::direction_scan;
use randpoly_core::ensemble::{classify_tail, purpose, RandomPolynomial, SeedStream};
use randpoly_core::extremal::{extremal_estimate, field_distance, j_count, k_count, DistanceMode, ReferenceExtremal, ScalarField};
use randpoly_core::orthopoly::OrthonormalBasis;
use randpoly_core::zeros::{polynomial_roots, potential_field, radial_sector_histogram, EmpiricalZeroMeasure};

use crate::config::{default_route, ExperimentConfig, ExperimentKind};
use crate::report::{content_hash, evaluate_threshold, num, overall_status, Report, Status, Table, REPORT_SCHEMA};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{message} (partial report at {})", report.display())]
    Numerical { message: String, report: PathBuf },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One persisted unit of work.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: u32,
    pub trial: u64,
    pub data: Value,
}

/// Append-only `trials.jsonl` with a single writer.
pub struct TrialStore {
    file: Mutex<File>,
    done: BTreeMap<(u32, u64), Value>,
    resumed: usize,
}

impl TrialStore {
    /// Opens the store in `dir`. Records are kept only if `config.json` there
    /// matches `config`; a torn last line from a killed run is dropped.
    pub fn open(dir: &Path, config: &ExperimentConfig) -> Result<Self, RunError> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("trials.jsonl");
        let cfg_path = dir.join("config.json");
        let cfg_text = serde_json::to_string_pretty(config)?;
        let same = std::fs::read_to_string(&cfg_path).map(|t| t == cfg_text).unwrap_or(false);
        let mut done = BTreeMap::new();
        let mut valid_len = 0u64;
        if same && path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for line in reader.split(b'\n') {
                let line = line?;
                match serde_json::from_slice::<TrialRecord>(&line) {
                    Ok(r) => {
                        valid_len += line.len() as u64 + 1;
                        done.insert((r.n, r.trial), r.data);
                    }
                    Err(_) => break,
                }
            }
        }
        std::fs::write(&cfg_path, cfg_text)?;
        let file = OpenOptions::new().create(true).write(true).truncate(false).open(&path)?;
        file.set_len(valid_len)?;
        let mut file = file;
        use std::io::Seek;
        file.seek(std::io::SeekFrom::End(0))?;
        let resumed = done.len();
        Ok(TrialStore {
            file: Mutex::new(file),
            done,
            resumed,
        })
    }

    fn append(&self, rec: &TrialRecord) -> Result<(), RunError> {
        let mut line = serde_json::to_vec(rec)?;
        line.push(b'\n');
        let mut f = self.file.lock().expect("trial writer poisoned");
        f.write_all(&line)?;
        f.flush()?;
        Ok(())
    }

    /// Runs the missing trials of degree `n` in parallel and returns every
    /// trial's data in trial order.
    pub fn run_trials<F>(&self, n: u32, trials: u64, work: F) -> Result<Vec<Value>, String>
    where
        F: Fn(u64) -> Result<Value, String> + Sync,
    {
        let fresh: Vec<(u64, Value)> = (0..trials)
            .into_par_iter()
            .filter(|t| !self.done.contains_key(&(n, *t)))
            .map(|t| {
                let data = work(t).map_err(|e| format!("n={n} trial={t}: {e}"))?;
                self.append(&TrialRecord {
                    n,
                    trial: t,
                    data: data.clone(),
                })
                .map_err(|e| e.to_string())?;
                Ok((t, data))
            })
            .collect::<Result<_, String>>()?;
        let fresh: BTreeMap<u64, Value> = fresh.into_iter().collect();
        Ok((0..trials)
            .map(|t| self.done.get(&(n, t)).or_else(|| fresh.get(&t)).cloned().expect("every trial ran"))
            .collect())
    }
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    store: &'a TrialStore,
    fields_dir: PathBuf,
}

/// Runs an experiment, writes its artifacts and returns the report.
pub fn run(cfg: &ExperimentConfig) -> Result<Report, RunError> {
    run_in(cfg, &cfg.resolved_output_dir())
}

/// Like [`run`] with an explicit output directory.
pub fn run_in(cfg: &ExperimentConfig, dir: &Path) -> Result<Report, RunError> {
    let start = Instant::now();
    let store = TrialStore::open(dir, cfg)?;
    let ctx = Ctx {
        cfg,
        store: &store,
        fields_dir: dir.join("fields"),
    };
    let result = match cfg.kind {
        ExperimentKind::ZeroMeasure => zero_measure(&ctx),
        ExperimentKind::PotentialL1 => potential(&ctx, false),
        ExperimentKind::TailBoundary => potential(&ctx, true),
        ExperimentKind::JnGrowth => jn_growth(&ctx),
        ExperimentKind::BmConstant => bm_constant(&ctx),
        ExperimentKind::ChebScan => cheb_scan(&ctx),
    };
    let (tables, errors) = match result {
        Ok(t) => (t, vec![]),
        Err(e) => (BTreeMap::new(), vec![e]),
    };
    let outcomes: Vec<_> = if errors.is_empty() {
        cfg.thresholds.iter().map(|t| evaluate_threshold(&tables, t)).collect()
    } else {
        vec![]
    };
    let status = if errors.is_empty() { overall_status(&outcomes) } else { Status::Error };
    let completed = std::fs::read_to_string(dir.join("trials.jsonl"))
        .map(|t| t.lines().count())
        .unwrap_or(0);
    let report = Report {
        schema: REPORT_SCHEMA.into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        kind: cfg.kind.as_str().into(),
        config: cfg.clone(),
        trials_completed: completed,
        content_hash: content_hash(&tables),
        tables,
        thresholds: outcomes,
        status,
        errors: errors.clone(),
        wall_clock_s: start.elapsed().as_secs_f64(),
        resumed_trials: store.resumed,
    };
    let path = report.write(dir)?;
    if let Some(e) = errors.into_iter().next() {
        return Err(RunError::Numerical { message: e, report: path });
    }
    Ok(report)
}

type Tables = BTreeMap<String, Table>;

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (m, 0.0);
    }
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0);
    (m, (var / k).sqrt())
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn coeff_stream(cfg: &ExperimentConfig, n: u32, t: u64) -> SeedStream {
    SeedStream::new(cfg.seed, t, purpose::at_degree(purpose::COEFFICIENTS, n))
}

fn basis(cfg: &ExperimentConfig, n: u32) -> Result<Arc<OrthonormalBasis>, String> {
    OrthonormalBasis::for_set(&cfg.geometry, n, cfg.precision_bits)
        .map(Arc::new)
        .map_err(err)
}

fn reference(cfg: &ExperimentConfig) -> Option<(ReferenceExtremal, f64)> {
    ReferenceExtremal::for_set(&cfg.geometry).map(|r| (r, ReferenceExtremal::offset(&cfg.geometry)))
}

/// Radial CDF of the equilibrium measure where it has a simple closed form.
fn reference_radial_cdf(r: &ReferenceExtremal) -> Option<(f64, fn(f64) -> f64)> {
    match r {
        ReferenceExtremal::GinibreDisk => Some((0.5f64.sqrt(), |x| (2.0 * x * x).min(1.0))),
        _ => None,
    }
}

fn zero_measure(ctx: &Ctx) -> Result<Tables, String> {
    let cfg = ctx.cfg;
    let p = &cfg.params;
    let [a0, a1] = p.annulus.unwrap_or([0.9, 1.1]);
    let inside = p.inside_radius.unwrap_or(0.75);
    // the last radial bin also collects everything beyond its lower edge
    let edges = p.radial_edges.clone().unwrap_or(vec![0.0, a0, a1, f64::MAX]);
    let bins = p.angular_bins.unwrap_or(8);
    let cdf_ref = reference(cfg).and_then(|(r, _)| reference_radial_cdf(&r));

    let mut summary = Table::new(
        &[
            "n", "trials", "zeros_mean", "annulus_mean", "annulus_se", "inside_mean", "inside_se", "cdf_dev",
            "cdf_dev_se", "fallback_trials",
        ],
        &["n"],
    );
    let mut hist = Table::new(&["n", "radial_bin", "r_lo", "angular_bin", "count", "count_se"], &["n", "radial_bin", "angular_bin"]);
    for &n in &cfg.n_schedule {
        let b = basis(cfg, n)?;
        let law = cfg.law.as_ref().expect("validated");
        let data = ctx.store.run_trials(n, cfg.trials, |t| {
            let g = RandomPolynomial::sample(b.clone(), law, coeff_stream(cfg, n, t)).map_err(err)?;
            let rep = polynomial_roots(&g).map_err(err)?;
            let zeros: Vec<[f64; 2]> = rep.roots.iter().map(|z| [z.re, z.im]).collect();
            Ok(json!({
                "zeros": zeros,
                "method": rep.method,
                "iterations": rep.iterations,
                "max_residual": rep.max_residual,
            }))
        })?;
        let measures: Vec<EmpiricalZeroMeasure> = data
            .iter()
            .map(|d| {
                let z: Vec<[f64; 2]> = serde_json::from_value(d["zeros"].clone()).unwrap_or_default();
                EmpiricalZeroMeasure::new(z.into_iter().map(|[a, b]| Complex64::new(a, b)).collect())
            })
            .collect();
        let fallback = data.iter().filter(|d| d["method"] != json!("aberth")).count();
        let ann: Vec<f64> = measures.iter().map(|m| m.annulus_fraction(a0, a1)).collect();
        let ins: Vec<f64> = measures.iter().map(|m| m.radial_cdf(inside)).collect();
        let counts: Vec<f64> = measures.iter().map(|m| m.len() as f64).collect();
        let (am, ase) = mean_se(&ann);
        let (im, ise) = mean_se(&ins);
        let (cdf, cdf_se) = match cdf_ref {
            Some((rmax, f)) => {
                let dev = |m: &EmpiricalZeroMeasure| {
                    (0..=50)
                        .map(|i| {
                            let r = rmax * i as f64 / 50.0;
                            (m.radial_cdf(r) - f(r)).abs()
                        })
                        .fold(0.0, f64::max)
                };
                let pooled = EmpiricalZeroMeasure::new(measures.iter().flat_map(|m| m.zeros.clone()).collect());
                let per: Vec<f64> = measures.iter().map(dev).collect();
                let (_, se) = mean_se(&per);
                (num(dev(&pooled)), num(se))
            }
            None => (Value::Null, Value::Null),
        };
        summary.push(vec![
            n.into(),
            cfg.trials.into(),
            num(mean_se(&counts).0),
            num(am),
            num(ase),
            num(im),
            num(ise),
            cdf,
            cdf_se,
            fallback.into(),
        ]);
        let mut total = radial_sector_histogram(&measures[0], &edges, bins).map_err(err)?;
        for m in &measures[1..] {
            total.add(&radial_sector_histogram(m, &edges, bins).map_err(err)?).map_err(err)?;
        }
        for (i, row) in total.counts.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                hist.push(vec![n.into(), i.into(), num(edges[i]), j.into(), (*c).into(), num((*c as f64).sqrt())]);
            }
        }
    }
    Ok(BTreeMap::from([("summary".into(), summary), ("histogram".into(), hist)]))
}

fn shifted_reference_field(cfg: &ExperimentConfig) -> Result<ScalarField, String> {
    let (r, off) = reference(cfg).ok_or("no closed-form extremal function")?;
    let grid = cfg.grid_or_default();
    let f = r.field(&grid).map_err(err)?;
    if off == 0.0 {
        return Ok(f);
    }
    let vals = f.values.iter().map(|v| v + off).collect();
    ScalarField::new(grid, vals, f.clamp).map_err(err)
}

fn potential(ctx: &Ctx, tail: bool) -> Result<Tables, String> {
    let cfg = ctx.cfg;
    let grid = cfg.grid_or_default();
    let exceed = cfg.params.exceed.unwrap_or(0.2);
    let save = cfg.params.save_fields.unwrap_or(true);
    let target = shifted_reference_field(cfg)?;
    if save {
        target.save(&ctx.fields_dir, "reference").map_err(err)?;
    }
    let law = cfg.law.as_ref().expect("validated");
    let mut summary = Table::new(
        &[
            "n", "trials", "l1_median", "l1_median_se", "l1_mean", "l1_se", "exceed_frac", "exceed_frac_se",
            "fallback_trials",
        ],
        &["n"],
    );
    let mut exceed_by_n = Vec::new();
    for &n in &cfg.n_schedule {
        let b = basis(cfg, n)?;
        let data = ctx.store.run_trials(n, cfg.trials, |t| {
            let g = RandomPolynomial::sample(b.clone(), law, coeff_stream(cfg, n, t)).map_err(err)?;
            // roots only sharpen log|G| next to zeros; heavy-tailed draws can
            // defeat the root finder, and then the log-scaled evaluation is used
            let roots = if cfg.geometry.dim() == 1 {
                polynomial_roots(&g).ok().map(|r| r.roots)
            } else {
                None
            };
            let direct = cfg.geometry.dim() == 1 && roots.is_none();
            let f = potential_field(&g, &grid, roots.as_deref()).map_err(err)?;
            if save && t == 0 {
                f.save(&ctx.fields_dir, &format!("potential_n{n}_trial0")).map_err(err)?;
            }
            let l1 = field_distance(&f, &target, DistanceMode::L1).map_err(err)?;
            let sup = field_distance(&f, &target, DistanceMode::Sup).map_err(err)?;
            Ok(json!({ "l1": l1, "sup": sup, "direct": direct }))
        })?;
        let l1: Vec<f64> = data.iter().map(|d| d["l1"].as_f64().unwrap_or(f64::NAN)).collect();
        let (m, se) = mean_se(&l1);
        let k = l1.len() as f64;
        let sd = se * k.sqrt();
        let frac = l1.iter().filter(|x| **x > exceed).count() as f64 / k;
        let frac_se = (frac * (1.0 - frac) / k).sqrt();
        exceed_by_n.push((n, frac, frac_se));
        summary.push(vec![
            n.into(),
            cfg.trials.into(),
            num(median(&l1)),
            num(1.2533 * sd / k.sqrt()),
            num(m),
            num(se),
            num(frac),
            num(frac_se),
            data.iter().filter(|d| d["direct"] == json!(true)).count().into(),
        ]);
    }
    let mut tables = BTreeMap::from([("summary".to_string(), summary)]);
    if tail {
        let law = cfg.law.as_ref().expect("validated");
        let class = classify_tail(law, cfg.geometry.dim());
        let (n0, f0, s0) = exceed_by_n[0];
        let (n1, f1, s1) = *exceed_by_n.last().expect("nonempty schedule");
        let (ratio, ratio_se) = if f0 > 0.0 {
            let r = f1 / f0;
            let rel = ((s0 / f0).powi(2) + if f1 > 0.0 { (s1 / f1).powi(2) } else { 0.0 }).sqrt();
            (num(r), num(r * rel))
        } else {
            (Value::Null, Value::Null)
        };
        let mut t = Table::new(
            &["law", "tail_class", "n_first", "n_last", "exceed_first", "exceed_last", "ratio", "ratio_se"],
            &["law"],
        );
        t.push(vec![
            law.label().into(),
            serde_json::to_value(class).map_err(err)?,
            n0.into(),
            n1.into(),
            num(f0),
            num(f1),
            ratio,
            ratio_se,
        ]);
        tables.insert("tail".into(), t);
    }
    Ok(tables)
}

fn parse_points(pts: &[Vec<[f64; 2]>]) -> Vec<Vec<Complex64>> {
    pts.iter()
        .map(|p| p.iter().map(|[a, b]| Complex64::new(*a, *b)).collect())
        .collect()
}

/// Uniform points in `[-2, 2]^2` per coordinate from the points stream.
fn random_points(cfg: &ExperimentConfig, count: usize) -> Vec<Vec<Complex64>> {
    use rand::Rng;
    let mut rng = SeedStream::new(cfg.seed, 0, purpose::at_degree(purpose::POINTS, 0)).rng();
    let d = cfg.geometry.dim();
    (0..count)
        .map(|_| {
            (0..d)
                .map(|_| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
                .collect()
        })
        .collect()
}

fn jn_growth(ctx: &Ctx) -> Result<Tables, String> {
    let cfg = ctx.cfg;
    let (r, off) = reference(cfg).ok_or("no closed-form extremal function")?;
    let d = cfg.geometry.dim();
    let pts = cfg
        .params
        .points
        .as_deref()
        .map(parse_points)
        .unwrap_or_else(|| vec![vec![Complex64::new(0.5, 0.0); d]]);
    let eps = cfg.params.eps.unwrap_or(0.1);
    let margin = cfg.params.k_margin.unwrap_or(0.1);
    let samples = random_points(cfg, cfg.params.random_points.unwrap_or(10));

    let mut jn = Table::new(&["n", "point", "v_ref", "j_count", "k_count", "dim"], &["n", "point"]);
    let mut kn = Table::new(&["n", "samples", "k_max", "k_total"], &["n"]);
    for &n in &cfg.n_schedule {
        let data = ctx.store.run_trials(n, 1, |_| {
            let b = basis(cfg, n)?;
            let rows: Vec<Value> = pts
                .iter()
                .map(|z| {
                    let v = r.eval(z).map_err(err)? + off;
                    Ok(json!([v, j_count(&b, z, v, eps), k_count(&b, z, v + margin), b.len()]))
                })
                .collect::<Result<_, String>>()?;
            let ks: Vec<usize> = samples
                .iter()
                .map(|z| Ok(k_count(&b, z, r.eval(z).map_err(err)? + off + margin)))
                .collect::<Result<_, String>>()?;
            Ok(json!({ "points": rows, "k_samples": ks }))
        })?;
        let d0 = &data[0];
        for (i, row) in d0["points"].as_array().into_iter().flatten().enumerate() {
            jn.push(vec![n.into(), i.into(), row[0].clone(), row[1].clone(), row[2].clone(), row[3].clone()]);
        }
        let ks: Vec<u64> = serde_json::from_value(d0["k_samples"].clone()).unwrap_or_default();
        kn.push(vec![
            n.into(),
            ks.len().into(),
            ks.iter().max().copied().unwrap_or(0).into(),
            ks.iter().sum::<u64>().into(),
        ]);
    }
    Ok(BTreeMap::from([("jn".into(), jn), ("kn".into(), kn)]))
}

fn bm_constant(ctx: &Ctx) -> Result<Tables, String> {
    let cfg = ctx.cfg;
    let nodes = cfg.geometry.sup_nodes(cfg.params.sup_count.unwrap_or(256));
    let save = cfg.params.save_fields.unwrap_or(false);
    let grid = if cfg.geometry.dim() == 1 || cfg.grid.is_some() {
        Some(cfg.grid_or_default())
    } else {
        None
    };
    let target = match (&grid, reference(cfg)) {
        (Some(_), Some(_)) => Some(shifted_reference_field(cfg)?),
        _ => None,
    };
    let mut t = Table::new(&["n", "m_n", "log_m_n_over_n", "extremal_sup_err", "extremal_l1_err"], &["n"]);
    for &n in &cfg.n_schedule {
        let data = ctx.store.run_trials(n, 1, |_| {
            let b = basis(cfg, n)?;
            let m = b.bernstein_markov_constant(&cfg.geometry, &nodes).map_err(err)?;
            let (sup, l1) = match (&grid, &target) {
                (Some(g), Some(tf)) => {
                    let est = extremal_estimate(&b, g).map_err(err)?;
                    if save {
                        est.save(&ctx.fields_dir, &format!("extremal_n{n}")).map_err(err)?;
                    }
                    (
                        num(field_distance(&est, tf, DistanceMode::Sup).map_err(err)?),
                        num(field_distance(&est, tf, DistanceMode::L1).map_err(err)?),
                    )
                }
                _ => (Value::Null, Value::Null),
            };
            Ok(json!({ "m_n": m, "sup": sup, "l1": l1 }))
        })?;
        let d = &data[0];
        let m = d["m_n"].as_f64().unwrap_or(f64::NAN);
        t.push(vec![n.into(), num(m), num(m.ln() / n as f64), d["sup"].clone(), d["l1"].clone()]);
    }
    Ok(BTreeMap::from([("bm".into(), t)]))
}

fn cheb_scan(ctx: &Ctx) -> Result<Tables, String> {
    let cfg = ctx.cfg;
    let theta = cfg.params.theta.clone().expect("validated");
    let route = cfg.params.route.unwrap_or(default_route(&cfg.geometry));
    let data = ctx.store.run_trials(0, 1, |_| {
        let scan = direction_scan(&cfg.geometry, &theta, &cfg.n_schedule, route, cfg.precision_bits).map_err(err)?;
        serde_json::to_value(&scan.rows).map_err(err)
    })?;
    let rows: Vec<randpoly_core::chebyshev::ScanRow> = serde_json::from_value(data[0].clone()).map_err(err)?;
    let mut t = Table::new(&["n", "alpha", "value", "diff", "offset"], &["n", "alpha"]);
    for r in rows {
        let a: Vec<String> = r.alpha.iter().map(|e| e.to_string()).collect();
        t.push(vec![
            r.n.into(),
            a.join(";").into(),
            num(r.value),
            r.diff.map(num).unwrap_or(Value::Null),
            r.track.into(),
        ]);
    }
    Ok(BTreeMap::from([("scan".into(), t)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn cfg() -> ExperimentConfig {
        let text = r#"{"kind": "zero-measure", "geometry": {"kind": "circle", "params": {"radius": 1.0}},
            "law": {"kind": "rademacher", "params": {}}, "n_schedule": [4], "trials": 6, "seed": 1,
            "output_dir": "unused"}"#;
        parse_config(text, None).unwrap()
    }

    #[test]
    fn failed_trials_keep_the_finished_ones() {
        let dir = tempfile::tempdir().unwrap();
        let store = TrialStore::open(dir.path(), &cfg()).unwrap();
        let err = store
            .run_trials(4, 6, |t| if t == 3 { Err("boom".into()) } else { Ok(json!(t)) })
            .unwrap_err();
        assert!(err.contains("trial=3") && err.contains("boom"), "{err}");
        drop(store);

        let store = TrialStore::open(dir.path(), &cfg()).unwrap();
        assert!(store.resumed >= 1 && store.resumed <= 5);
        assert!(!store.done.contains_key(&(4, 3)));
        let all = store.run_trials(4, 6, |t| Ok(json!(t))).unwrap();
        assert_eq!(all, (0..6).map(|t| json!(t)).collect::<Vec<_>>());
    }
}
