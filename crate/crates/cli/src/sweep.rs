//! Sweep execution, CSV rows and summary statistics.

use std::io::Write;
use std::path::Path;

use permlab_core::analysis::fit::{burn_in_len, fit_poly_rate, RateFit};
use permlab_core::engine::{run, RunConfig};
use permlab_core::instances::Instance;
use permlab_core::problems::{FiniteSum, StepContext};
use permlab_core::rng::derive_seed;
use permlab_core::schedulers::{PermutationStrategy, StrategySpec};
use permlab_core::Vector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::plot::emit_gnuplot;
use crate::CliError;

/// CSV header, in column order.
pub const CSV_HEADER: [&str; 11] = [
    "run_id", "algo", "flipflop", "n", "d", "K", "seed", "alpha", "epoch", "sq_error", "diverged",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub run_id: usize,
    pub algo: String,
    pub flipflop: bool,
    pub n: usize,
    pub d: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub seed: u64,
    pub alpha: f64,
    pub epoch: usize,
    pub sq_error: f64,
    pub diverged: bool,
}

/// Final-error statistics of one `(algo, K)` cell over repeats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub algo: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub alpha: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    /// Runs that completed and enter the statistics.
    pub runs: usize,
    pub diverged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgoFit {
    pub algo: String,
    pub fit: Option<RateFit>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub cells: Vec<CellSummary>,
    pub fits: Vec<AlgoFit>,
    pub diverged_runs: usize,
    pub burn_in: f64,
}

impl Summary {
    pub fn cell(&self, algo: &str, k: usize) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.algo == algo && c.k == k)
    }

    pub fn slope(&self, algo: &str) -> Option<f64> {
        self.fits
            .iter()
            .find(|f| f.algo == algo)
            .and_then(|f| f.fit.as_ref())
            .map(|f| f.slope)
    }

    /// Algorithm labels in first-appearance order.
    pub fn algos(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for c in &self.cells {
            if !out.contains(&c.algo) {
                out.push(c.algo.clone());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub summary: Summary,
}

/// Quantile with linear interpolation between order statistics
/// (`h = (m − 1) p`). `sorted` must be ascending and non-empty.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

struct Job {
    run_id: usize,
    spec: StrategySpec,
    k: usize,
    seed: u64,
}

struct Finished {
    job: Job,
    alpha: f64,
    errors: Vec<f64>,
    diverged: bool,
}

/// Executes every `(algo, K, repeat)` run of `cfg`.
///
/// Run ids enumerate algorithms, then K values, then repeats; run `r` uses
/// the seed `derive_seed(cfg.seed, r)`. Runs execute in parallel and rows
/// are sorted by `(run_id, epoch)`, so output does not depend on
/// scheduling.
pub fn execute(cfg: &ExperimentConfig) -> Result<SweepOutput, CliError> {
    cfg.validate()?;
    let instance = cfg.instance.build()?;
    let strategies = cfg.strategies()?;
    let (n, d) = (instance.num_components(), instance.dim());
    let x0 = match &cfg.x0 {
        Some(v) if v.len() != d => {
            return Err(CliError::Usage(format!(
                "x0: expected {d} entries, got {}",
                v.len()
            )));
        }
        Some(v) => Vector::from_column_slice(v),
        None => Vector::zeros(d),
    };
    let stats = instance.stats(&x0)?;
    let l_hessian = instance.l_hessian();

    let mut jobs = Vec::new();
    for spec in &strategies {
        for &k in &cfg.k_grid {
            for _ in 0..cfg.repeats {
                let run_id = jobs.len();
                jobs.push(Job {
                    run_id,
                    spec: *spec,
                    k,
                    seed: derive_seed(cfg.seed, run_id as u64),
                });
            }
        }
    }
    let finished: Vec<Finished> = jobs
        .into_par_iter()
        .map(|job| run_job(&instance, &stats, l_hessian, cfg, &x0, job))
        .collect::<Result<_, CliError>>()?;

    let mut rows = Vec::new();
    for f in &finished {
        for (e, err) in f.errors.iter().enumerate() {
            rows.push(SweepRow {
                run_id: f.job.run_id,
                algo: f.job.spec.label(),
                flipflop: f.job.spec.flipflop,
                n,
                d,
                k: f.job.k,
                seed: f.job.seed,
                alpha: f.alpha,
                epoch: e + 1,
                sq_error: *err,
                diverged: f.diverged,
            });
        }
    }
    rows.sort_by_key(|r| (r.run_id, r.epoch));
    let summary = summarize(&finished, &strategies, cfg);
    Ok(SweepOutput { rows, summary })
}

fn run_job(
    instance: &Instance,
    stats: &permlab_core::problems::InstanceStats,
    l_hessian: f64,
    cfg: &ExperimentConfig,
    x0: &Vector,
    job: Job,
) -> Result<Finished, CliError> {
    let ctx = StepContext::from_stats(instance.num_components(), job.k, stats, l_hessian);
    let alpha = cfg.step_rule.resolve(&ctx)?;
    let mut strategy =
        PermutationStrategy::from_spec(job.spec, job.seed, instance.num_components())?;
    let traj = run(
        instance,
        &mut strategy,
        &RunConfig::new(alpha, job.k, x0.clone()),
        &stats.minimizer,
    )?;
    if traj.diverged() {
        log::warn!("run {} ({}, K = {}) diverged", job.run_id, job.spec, job.k);
    }
    Ok(Finished {
        diverged: traj.diverged(),
        errors: traj.sq_errors,
        alpha,
        job,
    })
}

fn summarize(
    finished: &[Finished],
    strategies: &[StrategySpec],
    cfg: &ExperimentConfig,
) -> Summary {
    let mut cells = Vec::new();
    let mut fits = Vec::new();
    for spec in strategies {
        let label = spec.label();
        let mut ks = Vec::new();
        let mut medians = Vec::new();
        for &k in &cfg.k_grid {
            let group: Vec<&Finished> = finished
                .iter()
                .filter(|f| f.job.spec == *spec && f.job.k == k)
                .collect();
            let diverged = group.iter().filter(|f| f.diverged).count();
            let mut finals: Vec<f64> = group
                .iter()
                .filter(|f| !f.diverged)
                .filter_map(|f| f.errors.last().copied())
                .collect();
            finals.sort_by(f64::total_cmp);
            let alpha = group.first().map_or(f64::NAN, |f| f.alpha);
            let (median, q1, q3) = if finals.is_empty() {
                (f64::NAN, f64::NAN, f64::NAN)
            } else {
                (
                    quantile(&finals, 0.5),
                    quantile(&finals, 0.25),
                    quantile(&finals, 0.75),
                )
            };
            if !finals.is_empty() {
                ks.push(k as f64);
                medians.push(median);
            }
            cells.push(CellSummary {
                algo: label.clone(),
                k,
                alpha,
                median,
                q1,
                q3,
                runs: finals.len(),
                diverged,
            });
        }
        let skip = burn_in_len(ks.len(), cfg.burn_in);
        let (fit, note) = match fit_poly_rate(&ks[skip..], &medians[skip..]) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        };
        fits.push(AlgoFit {
            algo: label,
            fit,
            note,
        });
    }
    Summary {
        diverged_runs: finished.iter().filter(|f| f.diverged).count(),
        cells,
        fits,
        burn_in: cfg.burn_in,
    }
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes rows as CSV with 17 significant digits per float.
pub fn write_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in rows {
        out.write_record([
            r.run_id.to_string(),
            r.algo.clone(),
            r.flipflop.to_string(),
            r.n.to_string(),
            r.d.to_string(),
            r.k.to_string(),
            r.seed.to_string(),
            float(r.alpha),
            r.epoch.to_string(),
            float(r.sq_error),
            r.diverged.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Per-cell statistics as gnuplot data: one block per algorithm, blocks
/// separated by two blank lines so they can be addressed with `index`.
pub fn write_summary_data<W: Write>(summary: &Summary, mut w: W) -> Result<(), CliError> {
    writeln!(w, "# K median q1 q3 runs diverged")?;
    for (i, algo) in summary.algos().iter().enumerate() {
        if i > 0 {
            writeln!(w)?;
            writeln!(w)?;
        }
        writeln!(w, "# {algo}")?;
        for c in summary.cells.iter().filter(|c| &c.algo == algo) {
            writeln!(
                w,
                "{} {} {} {} {} {}",
                c.k,
                float(c.median),
                float(c.q1),
                float(c.q3),
                c.runs,
                c.diverged
            )?;
        }
    }
    Ok(())
}

/// Runs the sweep and writes `sweep.csv`, `summary.json`, `summary.dat`
/// and `plot.gp` into `out_dir`.
pub fn cmd_run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<SweepOutput, CliError> {
    let output = execute(cfg)?;
    std::fs::create_dir_all(out_dir)?;
    write_csv(
        &output.rows,
        std::fs::File::create(out_dir.join("sweep.csv"))?,
    )?;
    let json = serde_json::to_string_pretty(&output.summary)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    std::fs::write(out_dir.join("summary.json"), json + "\n")?;
    write_summary_data(
        &output.summary,
        std::fs::File::create(out_dir.join("summary.dat"))?,
    )?;
    std::fs::write(
        out_dir.join("plot.gp"),
        emit_gnuplot(&output.summary, "summary.dat"),
    )?;
    Ok(output)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&[5.0], 0.75), 5.0);
    }

    #[test]
    fn one_run_two_epochs_two_rows() {
        let cfg = ExperimentConfig::from_json(
            r#"{"instance": {"kind": "quadratic", "n": 2, "d": 1, "A": [[[1.0]], [[1.0]]], "b": [[1.0], [-1.0]]},
                "algos": ["igd"], "K_grid": [2], "step_rule": {"rule": "explicit", "alpha": 0.1}}"#,
        )
        .unwrap();
        let out = execute(&cfg).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert_eq!(out.rows[1].epoch, 2);
        assert_eq!(out.summary.cells.len(), 1);
    }
}
