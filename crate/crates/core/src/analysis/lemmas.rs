//! Numerical checks of the supporting inequalities.
//!
//! Every verifier first checks the inequality's hypotheses. Outside them it
//! reports [`LemmaStatus::HypothesisUnmet`] and never a violation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{flipflop_bias_z, run, RunConfig, Trajectory};
use crate::error::invalid;
use crate::instances::{SmoothSpec, SmoothSum1d};
use crate::linalg::{spectral_norm, symmetric_extremes, Hessian};
use crate::problems::{FiniteSum, InstanceStats, QuadraticComponent, QuadraticSum};
use crate::rng::{derive_seed, Xoshiro256};
use crate::schedulers::{shuffle, BaseOrder, PermutationStrategy, StrategySpec};
use crate::{Error, Matrix, Result, Vector};

/// Relative slack added to deterministic bounds to absorb rounding.
pub const ROUNDING_SLACK: f64 = 1e-12;

/// Standard errors subtracted from Monte-Carlo means before comparing.
pub const MC_CUSHION: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaStatus {
    Pass,
    Violated,
    HypothesisUnmet,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LemmaParams {
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub mu: f64,
    pub l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: String,
    pub status: LemmaStatus,
    pub trials: usize,
    /// Number of individual comparisons made.
    pub checks: usize,
    pub violations: usize,
    /// Largest `observed − bound` over all checks (negative when all hold).
    pub worst_margin: f64,
    /// Largest `observed / bound` over all checks with a positive bound.
    pub worst_ratio: f64,
    /// Largest Monte-Carlo standard error, when applicable.
    pub max_std_error: Option<f64>,
    pub params: LemmaParams,
    pub notes: Vec<String>,
}

impl LemmaReport {
    fn new(lemma: &str, params: LemmaParams) -> Self {
        Self {
            lemma: lemma.into(),
            status: LemmaStatus::Pass,
            trials: 0,
            checks: 0,
            violations: 0,
            worst_margin: f64::NEG_INFINITY,
            worst_ratio: 0.0,
            max_std_error: None,
            params,
            notes: Vec::new(),
        }
    }

    fn unmet(lemma: &str, params: LemmaParams, why: String) -> Self {
        let mut r = Self::new(lemma, params);
        r.status = LemmaStatus::HypothesisUnmet;
        r.notes.push(why);
        r
    }

    /// Records `observed ≤ bound` (with rounding slack); returns whether it held.
    fn check(&mut self, observed: f64, bound: f64) -> bool {
        self.checks += 1;
        self.worst_margin = self.worst_margin.max(observed - bound);
        if bound > 0.0 {
            self.worst_ratio = self.worst_ratio.max(observed / bound);
        }
        let ok = observed <= bound + ROUNDING_SLACK * bound.abs().max(1.0);
        if !ok {
            self.violations += 1;
            self.status = LemmaStatus::Violated;
        }
        ok
    }

    fn merge(&mut self, other: &LemmaReport) {
        self.checks += other.checks;
        self.violations += other.violations;
        self.worst_margin = self.worst_margin.max(other.worst_margin);
        self.worst_ratio = self.worst_ratio.max(other.worst_ratio);
        if other.status == LemmaStatus::Violated {
            self.status = LemmaStatus::Violated;
        }
    }

    pub fn passed(&self) -> bool {
        self.status != LemmaStatus::Violated
    }
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of `R`'s diagonal folded into `Q`.
pub fn haar_orthogonal(rng: &mut Xoshiro256, d: usize) -> Matrix {
    let g = Matrix::from_fn(d, d, |_, _| rng.gaussian());
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `n` symmetric matrices with spectra in `[0, L]` whose mean has smallest
/// eigenvalue at least `μ`.
///
/// Each `A_i = QΛQᵀ` with Haar `Q` and `Λ` uniform in `[0, L]`. If the
/// mean's smallest eigenvalue `m` falls short of `μ`, every matrix is
/// shrunk toward a shared floor, `A_i ← (1 − s/L) A_i + s I` with
/// `s = L(μ − m)/(L − m)`, which keeps spectra inside `[0, L]` and lifts
/// the mean to at least `μ`.
pub fn sample_spectral_family(
    rng: &mut Xoshiro256,
    n: usize,
    d: usize,
    mu: f64,
    l: f64,
) -> Result<Vec<Matrix>> {
    if !(mu > 0.0) || !(l >= mu) {
        return Err(invalid(
            "mu/L",
            format!("need 0 < mu <= L, got mu = {mu}, L = {l}"),
        ));
    }
    let mut mats: Vec<Matrix> = (0..n)
        .map(|_| {
            let q = haar_orthogonal(rng, d);
            let lambda = Vector::from_fn(d, |_, _| rng.uniform(0.0, l));
            let a = &q * Matrix::from_diagonal(&lambda) * q.transpose();
            (&a + a.transpose()) * 0.5
        })
        .collect();
    let mean = mats.iter().fold(Matrix::zeros(d, d), |acc, m| acc + m) / n as f64;
    let (m, _) = symmetric_extremes(&mean);
    if m < mu {
        let s = l * (mu - m) / (l - m);
        let eye = Matrix::identity(d, d);
        for a in &mut mats {
            *a = &*a * (1.0 - s / l) + &eye * s;
        }
    }
    Ok(mats)
}

/// Step bound under which the forward-times-reversed product contracts:
/// `(1/(8κL)) · min{2, √κ/n}`.
pub fn amgm_step_bound(n: usize, mu: f64, l: f64) -> f64 {
    let kappa = l / mu;
    (1.0 / (8.0 * kappa * l)) * 2f64.min(kappa.sqrt() / n as f64)
}

/// Checks `‖Π(I−αA_i) · Π(I−αA_{n−i+1})‖ ≤ 1 − αnμ` over random families.
pub fn verify_amgm_matrix(
    trials: usize,
    n: usize,
    d: usize,
    mu: f64,
    l: f64,
    alpha: f64,
    seed: u64,
) -> Result<LemmaReport> {
    if !(mu > 0.0) || !(l >= mu) || n == 0 || d == 0 {
        return Err(invalid(
            "mu/L",
            format!("need 0 < mu <= L and n, d >= 1, got mu = {mu}, L = {l}"),
        ));
    }
    let params = LemmaParams { n, d, alpha, mu, l };
    let limit = amgm_step_bound(n, mu, l);
    if !(alpha > 0.0 && alpha <= limit) {
        return Ok(LemmaReport::unmet(
            "amgm",
            params,
            format!("alpha = {alpha:e} outside (0, {limit:e}]"),
        ));
    }
    let bound = 1.0 - alpha * n as f64 * mu;
    let observed: Vec<Result<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = Xoshiro256::seed_from_u64(derive_seed(seed, t as u64));
            let mats = sample_spectral_family(&mut rng, n, d, mu, l)?;
            let eye = Matrix::identity(d, d);
            let mut forward = eye.clone();
            for a in &mats {
                forward = (&eye - a * alpha) * forward;
            }
            let mut pair = forward.clone();
            for a in mats.iter().rev() {
                pair = (&eye - a * alpha) * pair;
            }
            Ok(spectral_norm(&pair))
        })
        .collect();
    let mut report = LemmaReport::new("amgm", params);
    report.trials = trials;
    for o in observed {
        report.check(o?, bound);
    }
    Ok(report)
}

/// Random instance families for the coupling check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingFamily {
    /// Pure quadratics (`L_H = 0`).
    #[default]
    Quadratic,
    /// Quadratics plus small log-cosh terms.
    LogCosh,
}

fn random_smooth_instance(
    rng: &mut Xoshiro256,
    n: usize,
    family: CouplingFamily,
) -> Result<SmoothSum1d> {
    let a: Vec<f64> = (0..n).map(|_| rng.uniform(0.5, 2.0)).collect();
    let c: Vec<f64> = (0..n).map(|_| rng.gaussian()).collect();
    let (eps, shift) = match family {
        CouplingFamily::Quadratic => (vec![], vec![]),
        CouplingFamily::LogCosh => (
            (0..n).map(|_| rng.uniform(-0.2, 0.2)).collect(),
            (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect(),
        ),
    };
    SmoothSum1d::new(&SmoothSpec { a, c, eps, shift })
}

/// Two 1-D runs sharing each epoch's permutation: checks
/// `(1−αL)^n |y₀−x₀| ≤ |y_n−x_n| ≤ (1 − nμα/2)|y₀−x₀|` every epoch, with
/// `α = μ/(2n(L² + L_H G))`.
pub fn verify_coupling(
    trials: usize,
    n: usize,
    epochs: usize,
    family: CouplingFamily,
    seed: u64,
) -> Result<LemmaReport> {
    if n == 0 || epochs == 0 {
        return Err(invalid("n/K", "need n >= 1 and K >= 1"));
    }
    let results: Vec<Result<(LemmaReport, f64)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = Xoshiro256::seed_from_u64(derive_seed(seed, t as u64));
            let inst = random_smooth_instance(&mut rng, n, family)?;
            let x_star = inst.minimizer();
            let x0 = x_star + rng.uniform(-2.0, 2.0);
            let y0 = if t == 0 {
                x0
            } else {
                x_star + rng.uniform(-2.0, 2.0)
            };
            let sx = inst.stats(x0)?;
            let sy = inst.stats(y0)?;
            let g = sx.g.max(sy.g);
            let (mu, l) = (sx.mu, sx.l);
            let alpha = mu / (2.0 * n as f64 * (l * l + inst.l_hessian() * g));
            let mut local = LemmaReport::new(
                "coupling",
                LemmaParams {
                    n,
                    d: 1,
                    alpha,
                    mu,
                    l,
                },
            );
            let lower = (1.0 - alpha * l).powi(n as i32);
            let upper = 1.0 - n as f64 * mu * alpha / 2.0;
            let mut strategy =
                PermutationStrategy::new(BaseOrder::RandomReshuffle, false, rng.next_u64(), n)?;
            let (mut x, mut y) = (Vector::from_element(1, x0), Vector::from_element(1, y0));
            let mut tight: f64 = 0.0;
            for k in 1..=epochs {
                let perm = strategy.next_permutation(k)?;
                let gap0 = (y[0] - x[0]).abs();
                for &i in perm.as_slice() {
                    inst.sgd_step(i, alpha, &mut x);
                    inst.sgd_step(i, alpha, &mut y);
                }
                let gap = (y[0] - x[0]).abs();
                if gap0 == 0.0 {
                    local.check(gap, 0.0);
                    continue;
                }
                local.check(gap, upper * gap0);
                local.check(lower * gap0, gap);
                tight = tight.max(gap / gap0);
            }
            Ok((local, tight))
        })
        .collect();
    let mut report = LemmaReport::new(
        "coupling",
        LemmaParams {
            n,
            d: 1,
            ..Default::default()
        },
    );
    report.trials = trials;
    let mut tightest: f64 = 0.0;
    for r in results {
        let (local, tight) = r?;
        if report.params.alpha == 0.0 {
            report.params = local.params.clone();
        }
        report.merge(&local);
        tightest = tightest.max(tight);
    }
    report.notes.push(format!(
        "largest per-epoch gap ratio observed {tightest:.6}; step size and constants are per trial, first trial shown"
    ));
    Ok(report)
}

fn require_centered(q: &QuadraticSum) -> Result<()> {
    let residual = q.centering_residual();
    if residual > 1e-10 {
        return Err(Error::NotCentered { residual });
    }
    Ok(())
}

fn max_linear_norm(q: &QuadraticSum) -> f64 {
    q.components()
        .iter()
        .map(|c| c.b.norm())
        .fold(0.0, f64::max)
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.count += 1.0;
        let delta = v - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (v - self.mean);
    }

    fn merge(&mut self, o: &Moments) {
        if o.count == 0.0 {
            return;
        }
        let total = self.count + o.count;
        let delta = o.mean - self.mean;
        self.mean += delta * o.count / total;
        self.m2 += o.m2 + delta * delta * self.count * o.count / total;
        self.count = total;
    }

    fn std_error(&self) -> f64 {
        if self.count < 2.0 {
            return 0.0;
        }
        (self.m2 / (self.count - 1.0) / self.count).sqrt()
    }
}

const MC_CHUNKS: usize = 64;

/// Runs `trials` Monte-Carlo draws split over fixed chunks so results do not
/// depend on thread scheduling. Each chunk gets `derive_seed(seed, chunk)`.
fn monte_carlo<T: Send>(
    trials: usize,
    seed: u64,
    init: impl Fn() -> T + Sync,
    draw: impl Fn(&mut Xoshiro256, &mut T) -> Result<()> + Sync,
) -> Result<Vec<T>> {
    let chunks = MC_CHUNKS.min(trials.max(1));
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = trials / chunks + usize::from(c < trials % chunks);
            let mut rng = Xoshiro256::seed_from_u64(derive_seed(seed, c as u64));
            let mut state = init();
            for _ in 0..count {
                draw(&mut rng, &mut state)?;
            }
            Ok(state)
        })
        .collect()
}

/// Monte-Carlo check of `E‖Σ_{i≤j} αb_{σ_i}‖² ≤ 18 j α² G*² log n` for every
/// prefix length `j`, over uniform permutations of a centered instance.
pub fn verify_prefix_sums(
    trials: usize,
    q: &QuadraticSum,
    alpha: f64,
    seed: u64,
) -> Result<LemmaReport> {
    require_centered(q)?;
    let (n, d) = (q.n(), q.dim());
    let params = LemmaParams {
        n,
        d,
        alpha,
        ..Default::default()
    };
    if n < 2 {
        return Ok(LemmaReport::unmet(
            "prefix_sums",
            params,
            "needs n >= 2".into(),
        ));
    }
    let g_star = max_linear_norm(q);
    let states = monte_carlo(
        trials,
        seed,
        || vec![Moments::default(); n],
        |rng, acc| {
            let perm = shuffle(rng, n);
            let mut partial = Vector::zeros(d);
            for (j, &i) in perm.as_slice().iter().enumerate() {
                partial += q.linear_term(i) * alpha;
                acc[j].push(partial.norm_squared());
            }
            Ok(())
        },
    )?;
    let mut total = vec![Moments::default(); n];
    for s in &states {
        for (t, m) in total.iter_mut().zip(s) {
            t.merge(m);
        }
    }
    let mut report = LemmaReport::new("prefix_sums", params);
    report.trials = trials;
    let mut max_se: f64 = 0.0;
    for (j, m) in total.iter().enumerate() {
        let bound = 18.0 * (j + 1) as f64 * alpha * alpha * g_star * g_star * (n as f64).ln();
        let se = m.std_error();
        max_se = max_se.max(se);
        report.check(m.mean - MC_CUSHION * se, bound);
    }
    report.max_std_error = Some(max_se);
    report.notes.push(format!(
        "G* = {g_star:e}; comparison uses the mean minus {MC_CUSHION} standard errors"
    ));
    Ok(report)
}

/// The bound `2n²α⁴L²G² + 170 n⁵α⁶L⁴G² log n` with `G` used in both terms.
pub fn z_moment_bound(n: usize, alpha: f64, l: f64, g: f64) -> f64 {
    let n = n as f64;
    2.0 * n.powi(2) * alpha.powi(4) * l * l * g * g
        + 170.0 * n.powi(5) * alpha.powi(6) * l.powi(4) * g * g * n.ln()
}

/// Monte-Carlo check of the second moment of the FlipFlop bias term `z`.
///
/// The instance is centered, so its minimizer is the origin and
/// `G* = max‖b_i‖`; starting from the minimizer gives `D = G*/(2L)` and
/// `G = 2G*`, which is used in both terms of the bound.
pub fn verify_z_moment(
    trials: usize,
    q: &QuadraticSum,
    alpha: f64,
    seed: u64,
) -> Result<LemmaReport> {
    require_centered(q)?;
    let (n, d) = (q.n(), q.dim());
    let stats = q.stats(&Vector::zeros(d))?;
    let params = LemmaParams {
        n,
        d,
        alpha,
        mu: stats.mu,
        l: stats.l,
    };
    if !(alpha > 0.0 && alpha <= 1.0 / stats.l) {
        return Ok(LemmaReport::unmet(
            "z_moment",
            params,
            format!("alpha = {alpha:e} outside (0, 1/L = {:e}]", 1.0 / stats.l),
        ));
    }
    let g = stats.g;
    let states = monte_carlo(trials, seed, Moments::default, |rng, m| {
        let perm = shuffle(rng, n);
        let z = flipflop_bias_z(q, &perm, alpha)?;
        m.push(z.norm_squared());
        Ok(())
    })?;
    let mut total = Moments::default();
    for s in &states {
        total.merge(s);
    }
    let bound = z_moment_bound(n, alpha, stats.l, g);
    let mut report = LemmaReport::new("z_moment", params);
    report.trials = trials;
    report.max_std_error = Some(total.std_error());
    report.check(total.mean - MC_CUSHION * total.std_error(), bound);
    report.notes.push(format!(
        "E|z|^2 ~ {:e}, bound {bound:e}; G = {g:e} used in both terms",
        total.mean
    ));
    Ok(report)
}

/// Step bound for the bounded-iterates envelope: `1/(8κnL)`.
pub fn bounded_iterates_step_bound(n: usize, stats: &InstanceStats) -> f64 {
    1.0 / (8.0 * stats.kappa * n as f64 * stats.l)
}

/// Checks `‖x − x*‖ ≤ 2D` and `‖∇f_i(x)‖ ≤ G* + 2DL` on every recorded
/// iterate of `runs`, which must be recorded with all iterates.
///
/// `stats` must be computed at the runs' common initialization.
pub fn verify_bounded_iterates<F: FiniteSum + ?Sized>(
    fs: &F,
    stats: &InstanceStats,
    runs: &[Trajectory],
) -> Result<LemmaReport> {
    let n = fs.num_components();
    let alpha = runs.first().map_or(0.0, |r| r.meta.alpha);
    let params = LemmaParams {
        n,
        d: fs.dim(),
        alpha,
        mu: stats.mu,
        l: stats.l,
    };
    let limit = bounded_iterates_step_bound(n, stats);
    if let Some(r) = runs.iter().find(|r| !(r.meta.alpha < limit)) {
        return Ok(LemmaReport::unmet(
            "bounded_iterates",
            params,
            format!(
                "alpha = {:e} not below 1/(8 kappa n L) = {limit:e}",
                r.meta.alpha
            ),
        ));
    }
    let mut report = LemmaReport::new("bounded_iterates", params);
    report.trials = runs.len();
    for r in runs {
        let its = r
            .iterates
            .as_ref()
            .ok_or_else(|| invalid("runs", "trajectories must record all iterates"))?;
        for x in its {
            report.check((x - &stats.minimizer).norm(), 2.0 * stats.d);
            let worst = (0..n)
                .map(|i| fs.gradient_unchecked(i, x).norm())
                .fold(0.0, f64::max);
            report.check(worst, stats.g);
        }
    }
    Ok(report)
}

/// Random dense quadratic with `A_i` of spectrum in `[0, L]`, mean spectrum
/// at least `μ`, Gaussian `b_i`, translated so the minimizer is the origin.
pub fn random_centered_quadratic(
    rng: &mut Xoshiro256,
    n: usize,
    d: usize,
    mu: f64,
    l: f64,
) -> Result<QuadraticSum> {
    let mats = sample_spectral_family(rng, n, d, mu, l)?;
    let comps = mats
        .into_iter()
        .map(|a| QuadraticComponent::new(Hessian::dense(a), rng.gaussian_vector(d)))
        .collect();
    QuadraticSum::new(comps)?.translate_to_origin()
}

/// Default parameterizations of the five checks, as run by the CLI and the
/// acceptance suite.
pub mod defaults {
    use super::*;

    /// `n = 4`, `d = 3`, `μ = 1`, `L = 10`, step at the hypothesis bound.
    pub fn amgm(trials: usize, seed: u64) -> Result<LemmaReport> {
        let (n, mu, l) = (4, 1.0, 10.0);
        verify_amgm_matrix(trials, n, 3, mu, l, amgm_step_bound(n, mu, l), seed)
    }

    pub fn coupling(trials: usize, seed: u64) -> Result<LemmaReport> {
        verify_coupling(trials, 5, 20, CouplingFamily::LogCosh, seed)
    }

    /// Ten random centered linear terms in `R³` with `α = 0.1`.
    pub fn prefix_sums(trials: usize, seed: u64) -> Result<LemmaReport> {
        let mut rng = Xoshiro256::seed_from_u64(seed);
        let q = random_centered_quadratic(&mut rng, 10, 3, 0.5, 2.0)?;
        verify_prefix_sums(trials, &q, 0.1, derive_seed(seed, 1))
    }

    /// Six components in `R²` with `α = 1/(nL)`.
    pub fn z_moment(trials: usize, seed: u64) -> Result<LemmaReport> {
        let mut rng = Xoshiro256::seed_from_u64(seed);
        let q = random_centered_quadratic(&mut rng, 6, 2, 0.5, 2.0)?;
        let alpha = 1.0 / (6.0 * q.smoothness());
        verify_z_moment(trials, &q, alpha, derive_seed(seed, 1))
    }

    /// `runs` random instances (`n = 6`, `d = 3`), each run under all six
    /// strategies from a random start with `α` just below `1/(8κnL)`.
    pub fn bounded_iterates(runs: usize, seed: u64) -> Result<LemmaReport> {
        let n = 6;
        let strategies = ["igd", "ss", "rr", "ff-igd", "ff-ss", "ff-rr"];
        let reports: Vec<Result<LemmaReport>> = (0..runs)
            .into_par_iter()
            .map(|r| {
                let mut rng = Xoshiro256::seed_from_u64(derive_seed(seed, r as u64));
                let q = random_centered_quadratic(&mut rng, n, 3, 0.5, 2.0)?;
                let x0 = rng.gaussian_vector(3);
                let stats = q.stats(&x0)?;
                let alpha = 0.99 * bounded_iterates_step_bound(n, &stats);
                let trajectories = strategies
                    .iter()
                    .map(|s| {
                        let spec = StrategySpec::parse(s)?;
                        let mut strat = PermutationStrategy::from_spec(spec, rng.next_u64(), n)?;
                        let cfg = RunConfig::new(alpha, 10, x0.clone()).recording_all();
                        run(&q, &mut strat, &cfg, &stats.minimizer)
                    })
                    .collect::<Result<Vec<_>>>()?;
                verify_bounded_iterates(&q, &stats, &trajectories)
            })
            .collect();
        let mut report = LemmaReport::new("bounded_iterates", LemmaParams::default());
        for (k, r) in reports.into_iter().enumerate() {
            let r = r?;
            if k == 0 {
                report.params = r.params.clone();
            }
            if r.status == LemmaStatus::HypothesisUnmet {
                return Ok(r);
            }
            report.merge(&r);
            report.trials += r.trials;
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_matrix_is_orthogonal() {
        let mut rng = Xoshiro256::seed_from_u64(4);
        let q = haar_orthogonal(&mut rng, 5);
        assert!((q.transpose() * &q - Matrix::identity(5, 5)).amax() < 1e-12);
    }

    #[test]
    fn sampled_family_respects_spectra() {
        let mut rng = Xoshiro256::seed_from_u64(8);
        for _ in 0..50 {
            let mats = sample_spectral_family(&mut rng, 4, 3, 1.0, 10.0).unwrap();
            let mean = mats.iter().fold(Matrix::zeros(3, 3), |a, m| a + m) / 4.0;
            assert!(symmetric_extremes(&mean).0 >= 1.0 - 1e-12);
            for m in &mats {
                let (lo, hi) = symmetric_extremes(m);
                assert!(lo >= -1e-12 && hi <= 10.0 + 1e-12);
            }
        }
        assert!(sample_spectral_family(&mut rng, 2, 2, 3.0, 1.0).is_err());
    }

    #[test]
    fn amgm_scalar_case() {
        // all A_i = μI, n = 2: the product is (1 − αμ)⁴ ≤ 1 − 2αμ
        let (mu, alpha) = (1.0, 0.01);
        let v = (1.0f64 - alpha * mu).powi(4);
        assert!(v <= 1.0 - 2.0 * alpha * mu);
    }

    #[test]
    fn amgm_outside_hypothesis_is_unmet() {
        let r = verify_amgm_matrix(10, 4, 3, 1.0, 10.0, 1.0, 0).unwrap();
        assert_eq!(r.status, LemmaStatus::HypothesisUnmet);
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn prefix_full_sum_vanishes() {
        let mut rng = Xoshiro256::seed_from_u64(1);
        let q = random_centered_quadratic(&mut rng, 5, 2, 0.5, 2.0).unwrap();
        let perm = shuffle(&mut rng, 5);
        let total = perm
            .as_slice()
            .iter()
            .fold(Vector::zeros(2), |acc, &i| acc + q.linear_term(i));
        assert!(total.norm() < 1e-12);
    }

    #[test]
    fn z_moment_zero_for_zero_linear_terms() {
        let q = QuadraticSum::scalar(&[1.0, 2.0, 3.0], &[0.0; 3]).unwrap();
        let r = verify_z_moment(100, &q, 0.1, 0).unwrap();
        assert_eq!(r.status, LemmaStatus::Pass);
        let unmet = verify_z_moment(10, &q, 1.0, 0).unwrap();
        assert_eq!(unmet.status, LemmaStatus::HypothesisUnmet);
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let data: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        let mut whole = Moments::default();
        data.iter().for_each(|v| whole.push(*v));
        let (mut a, mut b) = (Moments::default(), Moments::default());
        data[..37].iter().for_each(|v| a.push(*v));
        data[37..].iter().for_each(|v| b.push(*v));
        a.merge(&b);
        assert!((a.mean - whole.mean).abs() < 1e-14);
        assert!((a.m2 - whole.m2).abs() < 1e-12);
    }
}
