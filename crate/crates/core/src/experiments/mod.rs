//! Monte Carlo experiments.
//!
//! Sample `i` of a row always uses the draw `sample_index(i)` of the row's
//! law, so rows sharing a regularity share their random fields, and results
//! are identical for any worker count.

mod lagrangian;

pub use lagrangian::{count_crossings, LagrangianKind, TestLagrangian};

use std::cmp::Ordering;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::field::{osc_estimate, HamiltonianSampler};
use crate::flow::{advect_curve, integrate_lifts, integrate_point, inverse_point, LagrangianCurve};
use crate::hamiltonian::{Shear, SharedHamiltonian, Sum};
use crate::rng::{self, SHARED_LABEL};
use crate::stats::{self, KsResult};
use crate::torus::{periodic_delta, wrap, TorusPoint, Vec2};

/// Samples evaluated between failure-budget checks.
const CHUNK: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub label: String,
    pub regularity: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl ResultRow {
    pub fn from_values(label: impl Into<String>, regularity: f64, values: &[f64]) -> Self {
        ResultRow {
            label: label.into(),
            regularity,
            estimate: stats::mean(values),
            stderr: stats::standard_error(values),
            samples: values.len(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

/// `L2 < L10`: compare the alphabetic prefix, then the numeric suffix.
fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn split(s: &str) -> (&str, Option<u64>) {
        let i = s.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        (&s[..i], s[i..].parse().ok())
    }
    let (pa, na) = split(a);
    let (pb, nb) = split(b);
    pa.cmp(pb).then(na.cmp(&nb)).then(a.cmp(b))
}

impl ResultTable {
    pub fn new(mut rows: Vec<ResultRow>) -> Self {
        rows.sort_by(|a, b| {
            natural_cmp(&a.label, &b.label).then(a.regularity.total_cmp(&b.regularity))
        });
        ResultTable { rows }
    }

    pub fn get(&self, label: &str, regularity: f64) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.label == label && (r.regularity - regularity).abs() < 1e-12)
    }
}

/// Run `f` for `0..n` in fixed chunks, in parallel within a chunk, and stop
/// once more than `budget` samples have failed.
///
/// Returns every evaluated outcome in index order. The stopping point depends
/// only on the outcomes, never on scheduling.
fn run_budgeted<T: Send>(
    n: usize,
    budget: usize,
    f: impl Fn(usize) -> Result<T> + Sync,
) -> Vec<Result<T>> {
    let mut out = Vec::with_capacity(n);
    let mut failed = 0;
    for start in (0..n).step_by(CHUNK) {
        let end = (start + CHUNK).min(n);
        let chunk: Vec<Result<T>> = (start..end).into_par_iter().map(&f).collect();
        failed += chunk.iter().filter(|r| r.is_err()).count();
        out.extend(chunk);
        if failed > budget {
            break;
        }
    }
    out
}

fn budget(config: &ExperimentConfig, n: usize) -> usize {
    (config.failure_budget * n as f64 + 1e-9).floor() as usize
}

/// Collect successes, or report the row as failed when the budget is exceeded.
fn settle<T>(row: &str, total: usize, allowed: usize, outcomes: Vec<Result<T>>) -> Result<Vec<T>> {
    let failed = outcomes.iter().filter(|r| r.is_err()).count();
    if failed > allowed {
        let (first_index, first) = outcomes
            .iter()
            .enumerate()
            .find_map(|(i, r)| r.as_ref().err().map(|e| (i, e.to_string())))
            .expect("at least one failure");
        return Err(Error::TooManyFailures {
            row: row.to_string(),
            failed,
            total,
            first_index,
            first_message: first,
        });
    }
    Ok(outcomes.into_iter().filter_map(|r| r.ok()).collect())
}

fn format_r(r: f64) -> String {
    format!("r={r}")
}

/// Expected crossings of each listed test Lagrangian with the time-one image
/// of `K = S¹ × {0.5}`.
pub fn run_intersections(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    let labels: Vec<TestLagrangian> = config
        .lagrangians
        .iter()
        .map(|l| TestLagrangian::standard(l))
        .collect::<Result<_>>()?;
    let n = config.samples();
    let allowed = budget(config, n);
    let settings = config.flow_settings();
    let k = LagrangianCurve::horizontal(0.5, config.curve_vertices);
    let mut rows = Vec::new();
    rng::with_workers(|| -> Result<()> {
        for &r in &config.regularity {
            let sampler = HamiltonianSampler::new(config.law(r))?;
            let outcomes = run_budgeted(n, allowed, |i| {
                let h = sampler.sample_index(i as u64);
                let image = advect_curve(&h, &k, 1.0, &settings)?;
                Ok(labels
                    .iter()
                    .map(|l| count_crossings(&image, l))
                    .collect::<Vec<_>>())
            });
            let per_sample = settle(&format_r(r), n, allowed, outcomes)?;
            for (j, l) in labels.iter().enumerate() {
                let counts: Vec<Result<f64>> = per_sample
                    .iter()
                    .map(|c| c[j].clone().map(|v| v as f64))
                    .collect();
                let row = format!("{} {}", l.label, format_r(r));
                let values = settle(&row, n, allowed, counts)?;
                rows.push(ResultRow::from_values(&l.label, r, &values));
            }
        }
        Ok(())
    })?;
    Ok(ResultTable::new(rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionResult {
    pub regularity: f64,
    pub times: Vec<f64>,
    pub grid: usize,
    /// Pooled cell counts per time, row-major with `x` as the row index.
    pub grid_counts: Vec<Vec<u64>>,
    /// Pearson statistic of the pooled counts per time.
    pub chi_square: Vec<f64>,
    /// `run_chi_square[run][time]` for each single draw.
    pub run_chi_square: Vec<Vec<f64>>,
}

impl DiffusionResult {
    /// Fraction of runs whose statistic at the last time is below the one at the first.
    pub fn spreading_fraction(&self) -> f64 {
        if self.run_chi_square.is_empty() {
            return 0.0;
        }
        let spread = self
            .run_chi_square
            .iter()
            .filter(|c| c[c.len() - 1] < c[0])
            .count();
        spread as f64 / self.run_chi_square.len() as f64
    }
}

/// Uniform points in the disc of `radius` around `center`.
pub fn disc_cloud<R: Rng + ?Sized>(center: Vec2, radius: f64, n: usize, rng: &mut R) -> Vec<Vec2> {
    (0..n)
        .map(|_| {
            let rho = radius * rng.gen::<f64>().sqrt();
            let a = std::f64::consts::TAU * rng.gen::<f64>();
            [center[0] + rho * a.cos(), center[1] + rho * a.sin()]
        })
        .collect()
}

fn bin(points: &[Vec2], m: usize) -> Vec<u64> {
    let mut counts = vec![0u64; m * m];
    let cell = |v: f64| ((wrap(v) * m as f64) as usize).min(m - 1);
    for p in points {
        counts[cell(p[0]) * m + cell(p[1])] += 1;
    }
    counts
}

/// Spreading of a disc cloud under the first configured regularity.
pub fn run_diffusion(config: &ExperimentConfig) -> Result<DiffusionResult> {
    config.validate()?;
    let r = *config
        .regularity
        .first()
        .ok_or_else(|| Error::validation("regularity", "needs a value"))?;
    let n = config.samples();
    let m = config.grid;
    let steps = config.steps;
    let cloud = disc_cloud(
        config.center,
        config.radius,
        config.points,
        &mut rng::derive(config.seed, &[SHARED_LABEL]),
    );
    let sampler = HamiltonianSampler::new(config.law(r))?;
    let runs: Vec<Vec<Vec<u64>>> = rng::with_workers(|| {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let h = sampler.sample_index(i as u64);
                let mut pts = cloud.clone();
                let mut t = 0.0;
                let mut out = Vec::with_capacity(config.times.len());
                for &next in &config.times {
                    integrate_lifts(&h, &mut pts, t, next, steps)?;
                    t = next;
                    out.push(bin(&pts, m));
                }
                Ok(out)
            })
            .collect::<Result<_>>()
    })?;
    let mut pooled = vec![vec![0u64; m * m]; config.times.len()];
    for run in &runs {
        for (acc, counts) in pooled.iter_mut().zip(run) {
            acc.iter_mut().zip(counts).for_each(|(a, c)| *a += c);
        }
    }
    Ok(DiffusionResult {
        regularity: r,
        times: config.times.clone(),
        grid: m,
        chi_square: pooled.iter().map(|c| stats::chi_square_uniform(c)).collect(),
        run_chi_square: runs
            .iter()
            .map(|run| run.iter().map(|c| stats::chi_square_uniform(c)).collect())
            .collect(),
        grid_counts: pooled,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub regularity: f64,
    pub samples: usize,
    /// Fitted centre `R` (mean of the fitting half).
    pub r_fit: f64,
    /// Fitted scale `C` in `2 exp(-u²/C)`.
    pub c_fit: f64,
    /// Test excess `u = 2·std`.
    pub u: f64,
    pub bound: f64,
    /// Fraction of held-out draws with `osc > R + u`.
    pub heldout_fraction: f64,
    pub passes: bool,
    /// `(osc, empirical survival)` over all draws, sorted by `osc`.
    pub survival: Vec<(f64, f64)>,
}

/// Least-squares `C` for `-ln(S/2) ≈ u²/C` over the upper quartile of `sorted`.
fn fit_tail_scale(sorted: &[f64], center: f64) -> f64 {
    let n = sorted.len();
    let (mut num, mut den) = (0.0, 0.0);
    for (j, &x) in sorted.iter().enumerate().skip((3 * n) / 4) {
        let u = x - center;
        if u <= 0.0 {
            continue;
        }
        let s = (n - j) as f64 - 0.5;
        let y = -(s / n as f64 / 2.0).ln();
        num += u * u * u * u;
        den += y * u * u;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Sub-Gaussian tail check of the oscillation norm from precomputed draws.
pub fn tail_report(regularity: f64, oscs: &[f64]) -> Result<TailReport> {
    if oscs.len() < 1000 {
        return Err(Error::validation("samples", "tail statistics need at least 1000 draws"));
    }
    let fit: Vec<f64> = oscs.iter().step_by(2).copied().collect();
    let held: Vec<f64> = oscs.iter().skip(1).step_by(2).copied().collect();
    let r_fit = stats::mean(&fit);
    let sd = stats::std_dev(&fit);
    let all = sorted(oscs);
    let n = all.len() as f64;
    let survival = all
        .iter()
        .enumerate()
        .map(|(j, &x)| (x, (n - j as f64 - 1.0) / n))
        .collect();
    if sd == 0.0 {
        // degenerate law: nothing exceeds the centre
        return Ok(TailReport {
            regularity,
            samples: oscs.len(),
            r_fit,
            c_fit: 0.0,
            u: 0.0,
            bound: 2.0,
            heldout_fraction: 0.0,
            passes: true,
            survival,
        });
    }
    let c_fit = fit_tail_scale(&sorted(&fit), r_fit);
    let u = 2.0 * sd;
    let bound = if c_fit > 0.0 { 2.0 * (-u * u / c_fit).exp() } else { 0.0 };
    let heldout_fraction =
        held.iter().filter(|&&x| x > r_fit + u).count() as f64 / held.len() as f64;
    Ok(TailReport {
        regularity,
        samples: oscs.len(),
        r_fit,
        c_fit,
        u,
        bound,
        heldout_fraction,
        passes: heldout_fraction <= 1.5 * bound,
        survival,
    })
}

fn osc_draws(config: &ExperimentConfig, r: f64) -> Result<Vec<f64>> {
    let sampler = HamiltonianSampler::new(config.law(r))?;
    rng::with_workers(|| {
        (0..config.samples())
            .into_par_iter()
            .map(|i| {
                osc_estimate(
                    &sampler.sample_index(i as u64),
                    config.osc_spatial_grid,
                    config.osc_time_grid,
                )
            })
            .collect()
    })
}

/// Tail statistics at the first configured regularity.
pub fn run_tail_stats(config: &ExperimentConfig) -> Result<TailReport> {
    config.validate()?;
    let r = *config
        .regularity
        .first()
        .ok_or_else(|| Error::validation("regularity", "needs a value"))?;
    tail_report(r, &osc_draws(config, r)?)
}

/// Mean oscillation norm per regularity, labelled `osc`.
pub fn run_concentration(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    let mut rows = Vec::new();
    for &r in &config.regularity {
        rows.push(ResultRow::from_values("osc", r, &osc_draws(config, r)?));
    }
    Ok(ResultTable::new(rows))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionReport {
    pub regularity: f64,
    pub samples: usize,
    pub level: f64,
    /// KS test on `d(p, φ(p))` against `d(p, φ⁻¹(p))`.
    pub norm: KsResult,
    /// KS tests on the signed `x` and `y` displacements.
    pub dx: KsResult,
    pub dy: KsResult,
    pub passes: bool,
}

/// Signed displacement `q - p` through the nearest representative.
fn displacement(p: TorusPoint, q: TorusPoint) -> Vec2 {
    [periodic_delta(q.x, p.x), periodic_delta(q.y, p.y)]
}

/// Compare the displacement laws of `φ` and `φ⁻¹` at the configured probe.
///
/// Forward draws use indices `0..n`, inverse draws `n..2n`. The three tests
/// share the level by Bonferroni.
pub fn run_inversion_test(config: &ExperimentConfig) -> Result<InversionReport> {
    config.validate()?;
    let r = *config
        .regularity
        .first()
        .ok_or_else(|| Error::validation("regularity", "needs a value"))?;
    let n = config.samples();
    let settings = config.flow_settings();
    let p = TorusPoint::new(config.probe[0], config.probe[1]);
    let sampler = HamiltonianSampler::new(config.law(r))?;
    let offset = config.mean_offset;
    let draw = |i: usize| -> SharedHamiltonian {
        let h: SharedHamiltonian = Arc::new(sampler.sample_index(i as u64));
        if offset == 0.0 {
            h
        } else {
            Arc::new(Sum(vec![h, Arc::new(Shear::horizontal(offset))]))
        }
    };
    let (forward, backward): (Vec<Vec2>, Vec<Vec2>) = rng::with_workers(|| -> Result<_> {
        let f = (0..n)
            .into_par_iter()
            .map(|i| Ok(displacement(p, integrate_point(draw(i).as_ref(), p, 0.0, 1.0, &settings)?.point)))
            .collect::<Result<Vec<_>>>()?;
        let b = (n..2 * n)
            .into_par_iter()
            .map(|i| Ok(displacement(p, inverse_point(draw(i).as_ref(), p, &settings)?.point)))
            .collect::<Result<Vec<_>>>()?;
        Ok((f, b))
    })?;
    let column = |v: &[Vec2], c: usize| v.iter().map(|d| d[c]).collect::<Vec<_>>();
    let norms = |v: &[Vec2]| v.iter().map(|d| d[0].hypot(d[1])).collect::<Vec<_>>();
    let level = 0.01;
    let norm = stats::ks_two_sample(&norms(&forward), &norms(&backward));
    let dx = stats::ks_two_sample(&column(&forward, 0), &column(&backward, 0));
    let dy = stats::ks_two_sample(&column(&forward, 1), &column(&backward, 1));
    let passes = [norm, dx, dy].iter().all(|k| k.passes(level / 3.0));
    Ok(InversionReport {
        regularity: r,
        samples: n,
        level,
        norm,
        dx,
        dy,
        passes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Command;
    use crate::temporal::KernelTag;

    fn quick(command: Command) -> ExperimentConfig {
        let mut c = ExperimentConfig::for_command(command);
        c.spatial_max = 4;
        c.temporal_max = 3;
        c
    }

    fn zero(command: Command) -> ExperimentConfig {
        let mut c = quick(command);
        c.per_mode_scale = 0.0;
        c
    }

    #[test]
    fn natural_label_order() {
        let rows = ["L10", "L2", "L1", "L2"]
            .iter()
            .zip([0.1, 0.14, 0.1, 0.04])
            .map(|(l, r)| ResultRow::from_values(*l, r, &[1.0]))
            .collect();
        let t = ResultTable::new(rows);
        let order: Vec<(&str, f64)> = t.rows.iter().map(|r| (r.label.as_str(), r.regularity)).collect();
        assert_eq!(order, vec![("L1", 0.1), ("L2", 0.04), ("L2", 0.14), ("L10", 0.1)]);
    }

    #[test]
    fn zero_field_intersections_are_exact() {
        let mut c = zero(Command::Intersections);
        c.samples = Some(20);
        c.regularity = vec![0.14];
        c.lagrangians = vec!["L2".into(), "L5".into(), "L14".into()];
        let t = run_intersections(&c).unwrap();
        let l2 = t.get("L2", 0.14).unwrap();
        assert_eq!((l2.estimate, l2.stderr, l2.samples), (1.0, 0.0, 20));
        assert_eq!(t.get("L5", 0.14).unwrap().estimate, 3.0);
        assert_eq!(t.get("L14", 0.14).unwrap().estimate, 2.0);
    }

    #[test]
    fn degenerate_rows_exceed_the_budget() {
        let mut c = zero(Command::Intersections);
        c.samples = Some(4);
        c.regularity = vec![0.14];
        c.lagrangians = vec!["L8".into()];
        let err = run_intersections(&c).unwrap_err();
        match err {
            Error::TooManyFailures { failed, total, first_index, .. } => {
                assert_eq!((failed, total, first_index), (4, 4, 0));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn intersections_respect_homological_floor() {
        let mut c = quick(Command::Intersections);
        c.samples = Some(8);
        c.regularity = vec![0.1];
        c.lagrangians = vec!["L4".into(), "L5".into(), "L6".into()];
        let t = run_intersections(&c).unwrap();
        for (label, floor) in [("L4", 2.0), ("L5", 3.0), ("L6", 4.0)] {
            assert!(t.get(label, 0.1).unwrap().estimate >= floor);
        }
    }

    #[test]
    fn zero_field_diffusion_is_frozen() {
        let mut c = zero(Command::Diffusion);
        c.samples = Some(3);
        let d = run_diffusion(&c).unwrap();
        for counts in &d.grid_counts {
            assert_eq!(counts, &d.grid_counts[0]);
            assert_eq!(counts.iter().sum::<u64>(), 300);
        }
        assert_eq!(d.spreading_fraction(), 0.0);
    }

    #[test]
    fn diffusion_conserves_mass() {
        let mut c = quick(Command::Diffusion);
        c.samples = Some(4);
        c.grid = 7;
        let d = run_diffusion(&c).unwrap();
        for counts in &d.grid_counts {
            assert_eq!(counts.len(), 49);
            assert_eq!(counts.iter().sum::<u64>(), 400);
        }
        assert_eq!(d.chi_square[0], d.chi_square.iter().copied().fold(0.0, f64::max));
    }

    #[test]
    fn disc_cloud_stays_in_the_disc() {
        let pts = disc_cloud([0.5, 0.5], 0.1, 500, &mut rng::derive(1, &[]));
        assert!(pts.iter().all(|p| (p[0] - 0.5).hypot(p[1] - 0.5) <= 0.1));
    }

    #[test]
    fn zero_field_tails_are_degenerate() {
        let oscs = vec![0.0; 1000];
        let rep = tail_report(0.1, &oscs).unwrap();
        assert!(rep.passes);
        assert_eq!(rep.heldout_fraction, 0.0);
        assert!(tail_report(0.1, &oscs[..999]).is_err());
    }

    #[test]
    fn survival_is_nonincreasing() {
        let mut r = rng::derive(2, &[]);
        let xs: Vec<f64> = (0..1200).map(|_| r.gen::<f64>().powi(3)).collect();
        let rep = tail_report(0.1, &xs).unwrap();
        assert!(rep.survival.windows(2).all(|w| w[1].1 <= w[0].1 && w[1].0 >= w[0].0));
    }

    #[test]
    fn gaussian_tails_pass() {
        let mut r = rng::derive(3, &[]);
        let xs: Vec<f64> = (0..2000)
            .map(|_| 1.0 + 0.1 * r.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        let rep = tail_report(0.1, &xs).unwrap();
        assert!(rep.passes, "{rep:?}");
        assert!(rep.c_fit > 0.0);
    }

    #[test]
    fn zero_field_concentration_is_zero() {
        let mut c = zero(Command::Concentration);
        c.samples = Some(3);
        c.osc_spatial_grid = 16;
        c.osc_time_grid = 5;
        let t = run_concentration(&c).unwrap();
        assert_eq!(t.rows.len(), 5);
        assert!(t.rows.iter().all(|r| r.estimate == 0.0));
    }

    #[test]
    fn inversion_detects_a_mean_shear() {
        let mut c = quick(Command::Inversion);
        c.samples = Some(200);
        let base = run_inversion_test(&c).unwrap();
        assert!(base.passes, "{base:?}");
        c.mean_offset = 0.5;
        let shifted = run_inversion_test(&c).unwrap();
        assert!(!shifted.passes, "{shifted:?}");
    }

    #[test]
    fn matched_displacements_agree() {
        let c = quick(Command::Inversion);
        let sampler = HamiltonianSampler::new(c.law(0.14)).unwrap();
        let s = c.flow_settings();
        for i in 0..10 {
            let h = sampler.sample_index(i);
            let p = TorusPoint::new(0.3, 0.7);
            let q = integrate_point(&h, p, 0.0, 1.0, &s).unwrap().point;
            let back = inverse_point(&h, q, &s).unwrap().point;
            assert!(back.distance(p) < 1e-8);
            assert!((p.distance(q) - back.distance(q)).abs() < 1e-8);
        }
    }

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let mut c = quick(Command::Intersections);
        c.samples = Some(20);
        c.regularity = vec![0.12];
        c.lagrangians = vec!["L1".into(), "L13".into()];
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| run_intersections(&c)).unwrap();
        let b = three.install(|| run_intersections(&c)).unwrap();
        assert_eq!(a, b);
        c.kernel = Some(KernelTag::Autonomous);
        assert_ne!(run_intersections(&c).unwrap(), a);
    }
}
