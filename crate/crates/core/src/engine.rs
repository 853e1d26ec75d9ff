//! Epoch runner and exact epoch maps for quadratics.

use serde::{Deserialize, Serialize};

use crate::problems::{FiniteSum, QuadraticSum};
use crate::schedulers::{Permutation, PermutationStrategy};
use crate::{Error, Matrix, Result, Vector};

/// Iterates with a norm above this are treated as diverged.
pub const DIVERGENCE_NORM: f64 = 1e100;

/// Largest dimension for which affine maps are materialized.
pub const MAX_MAP_DIM: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Record {
    #[default]
    Endpoints,
    AllIterates,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub alpha: f64,
    pub epochs: usize,
    pub x0: Vector,
    pub record: Record,
}

impl RunConfig {
    pub fn new(alpha: f64, epochs: usize, x0: Vector) -> Self {
        Self {
            alpha,
            epochs,
            x0,
            record: Record::Endpoints,
        }
    }

    pub fn recording_all(mut self) -> Self {
        self.record = Record::AllIterates;
        self
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: format!(
                    "step size must be finite and non-negative, got {}",
                    self.alpha
                ),
            });
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParameter {
                name: "K",
                reason: "need at least one epoch".into(),
            });
        }
        if self.x0.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.x0.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub algo: String,
    pub seed: Option<u64>,
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub epochs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// The iterate left the finite range during `epoch` (1-based).
    Diverged {
        epoch: usize,
    },
}

/// Per-epoch record of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// `‖x_n^k − x*‖²` for each completed epoch `k = 1..K`.
    pub sq_errors: Vec<f64>,
    /// Last finite epoch endpoint.
    pub final_x: Vector,
    /// All visited iterates (`x0` first) when requested.
    pub iterates: Option<Vec<Vector>>,
    pub meta: RunMeta,
    pub status: RunStatus,
}

impl Trajectory {
    pub fn diverged(&self) -> bool {
        matches!(self.status, RunStatus::Diverged { .. })
    }

    pub fn final_sq_error(&self) -> Option<f64> {
        self.sq_errors.last().copied()
    }
}

/// True when `x` has left the finite range or exceeds [`DIVERGENCE_NORM`].
pub fn is_diverged(x: &Vector) -> bool {
    let norm = x.norm();
    !norm.is_finite() || norm > DIVERGENCE_NORM
}

fn check_perm<F: FiniteSum + ?Sized>(fs: &F, perm: &Permutation) -> Result<()> {
    if perm.len() != fs.num_components() {
        return Err(Error::InvalidPermutation(format!(
            "permutation of length {} for {} components",
            perm.len(),
            fs.num_components()
        )));
    }
    Ok(())
}

/// One epoch: `n` sequential steps in `perm` order. Divergence is not an
/// error here; callers inspect the result with [`is_diverged`].
pub fn sgd_epoch<F: FiniteSum + ?Sized>(
    fs: &F,
    x0: &Vector,
    perm: &Permutation,
    alpha: f64,
) -> Result<Vector> {
    check_perm(fs, perm)?;
    fs.check_point(x0)?;
    let mut x = x0.clone();
    for &i in perm.as_slice() {
        fs.sgd_step(i, alpha, &mut x);
    }
    Ok(x)
}

/// Runs `cfg.epochs` epochs drawing permutations from `strategy`.
pub fn run<F: FiniteSum + ?Sized>(
    fs: &F,
    strategy: &mut PermutationStrategy,
    cfg: &RunConfig,
    x_star: &Vector,
) -> Result<Trajectory> {
    if strategy.spec().flipflop && cfg.epochs % 2 == 1 {
        return Err(Error::OddFlipFlopEpochs(cfg.epochs));
    }
    if strategy.n() != fs.num_components() {
        return Err(Error::InvalidPermutation(format!(
            "strategy over {} components for a sum of {}",
            strategy.n(),
            fs.num_components()
        )));
    }
    let meta = RunMeta {
        algo: strategy.spec().label(),
        seed: Some(strategy.seed()),
        n: fs.num_components(),
        d: fs.dim(),
        alpha: cfg.alpha,
        epochs: cfg.epochs,
    };
    drive(fs, cfg, x_star, meta, |k| strategy.next_permutation(k))
}

/// Runs a fixed permutation sequence (one permutation per epoch).
pub fn run_with_sequence<F: FiniteSum + ?Sized>(
    fs: &F,
    sequence: &[Permutation],
    cfg: &RunConfig,
    x_star: &Vector,
) -> Result<Trajectory> {
    if sequence.len() != cfg.epochs {
        return Err(Error::InvalidParameter {
            name: "sequence",
            reason: format!("{} permutations for {} epochs", sequence.len(), cfg.epochs),
        });
    }
    let meta = RunMeta {
        algo: "fixed".into(),
        seed: None,
        n: fs.num_components(),
        d: fs.dim(),
        alpha: cfg.alpha,
        epochs: cfg.epochs,
    };
    drive(fs, cfg, x_star, meta, |k| Ok(sequence[k - 1].clone()))
}

fn drive<F: FiniteSum + ?Sized>(
    fs: &F,
    cfg: &RunConfig,
    x_star: &Vector,
    meta: RunMeta,
    mut next: impl FnMut(usize) -> Result<Permutation>,
) -> Result<Trajectory> {
    cfg.validate(fs.dim())?;
    fs.check_point(x_star)?;
    let mut x = cfg.x0.clone();
    let mut sq_errors = Vec::with_capacity(cfg.epochs);
    let mut iterates = match cfg.record {
        Record::AllIterates => Some(vec![x.clone()]),
        Record::Endpoints => None,
    };
    let mut status = RunStatus::Completed;
    for k in 1..=cfg.epochs {
        let perm = next(k)?;
        check_perm(fs, &perm)?;
        let mut y = x.clone();
        for &i in perm.as_slice() {
            fs.sgd_step(i, cfg.alpha, &mut y);
            if let Some(its) = iterates.as_mut() {
                its.push(y.clone());
            }
        }
        if is_diverged(&y) {
            status = RunStatus::Diverged { epoch: k };
            if let Some(its) = iterates.as_mut() {
                its.retain(|v| !is_diverged(v));
            }
            break;
        }
        sq_errors.push((&y - x_star).norm_squared());
        x = y;
    }
    Ok(Trajectory {
        sq_errors,
        final_x: x,
        iterates,
        meta,
        status,
    })
}

/// The epoch as an affine map `x ↦ M x + v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineEpochMap {
    pub m: Matrix,
    pub v: Vector,
}

impl AffineEpochMap {
    pub fn identity(d: usize) -> Self {
        Self {
            m: Matrix::identity(d, d),
            v: Vector::zeros(d),
        }
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.m * x + &self.v
    }

    /// The map that applies `self` first and `next` second.
    pub fn then(&self, next: &AffineEpochMap) -> AffineEpochMap {
        AffineEpochMap {
            m: &next.m * &self.m,
            v: &next.m * &self.v + &next.v,
        }
    }
}

fn check_map_dim(d: usize) -> Result<()> {
    if d > MAX_MAP_DIM {
        return Err(Error::Unsupported(format!(
            "affine epoch maps are limited to d <= {MAX_MAP_DIM}, got d = {d}"
        )));
    }
    Ok(())
}

/// Closed-form epoch map: `M = Π (I − αA_{σ_i})` (latest step leftmost) and
/// `v` the accumulated `αb` terms.
pub fn epoch_affine_map(
    q: &QuadraticSum,
    perm: &Permutation,
    alpha: f64,
) -> Result<AffineEpochMap> {
    check_perm(q, perm)?;
    let d = q.dim();
    check_map_dim(d)?;
    let mut map = AffineEpochMap::identity(d);
    for &i in perm.as_slice() {
        let step = Matrix::identity(d, d) - q.hessian(i).to_dense() * alpha;
        map = AffineEpochMap {
            m: &step * &map.m,
            v: &step * &map.v + q.linear_term(i) * alpha,
        };
    }
    Ok(map)
}

/// Bias term of a forward epoch followed by its reversal on a centered
/// quadratic, computed from explicit product formulas.
///
/// With `S_i = αA_{σ_i}`, `t_i = αb_{σ_i}`, `R_m = (I−S_1)⋯(I−S_m)` and
/// `Q_m = (I−S_n)⋯(I−S_{n+1−m})`, this returns
/// `z = Σ_i R_n Q_{n−i} t_i + Σ_i R_{n−i} t_{n+1−i}`, so that the endpoint of
/// the pair is `R_n Q_n x + z`.
pub fn flipflop_bias_z(q: &QuadraticSum, perm: &Permutation, alpha: f64) -> Result<Vector> {
    check_perm(q, perm)?;
    let residual = q.centering_residual();
    if residual > 1e-10 {
        return Err(Error::NotCentered { residual });
    }
    let (n, d) = (q.n(), q.dim());
    check_map_dim(d)?;
    let sigma = perm.as_slice();
    let eye = Matrix::identity(d, d);
    let factor = |pos: usize| -> Matrix { &eye - q.hessian(sigma[pos - 1]).to_dense() * alpha };
    let t = |pos: usize| -> Vector { q.linear_term(sigma[pos - 1]) * alpha };

    let mut r = Vec::with_capacity(n + 1);
    let mut qm = Vec::with_capacity(n + 1);
    r.push(eye.clone());
    qm.push(eye.clone());
    for m in 1..=n {
        r.push(&r[m - 1] * factor(m));
        qm.push(&qm[m - 1] * factor(n + 1 - m));
    }
    let p = &r[n];
    let mut z = Vector::zeros(d);
    for i in 1..=n {
        z += p * (&qm[n - i] * t(i));
        z += &r[n - i] * t(n + 1 - i);
    }
    Ok(z)
}

/// Leading `α²` coefficients of a 1-D centered sum written as
/// `f_i(x) = a_i x²/2 + b_i x`, started at the minimizer 0:
/// `(Σ_i b_i Σ_{j>i} a_j, −Σ_i b_i a_i)` for one epoch and for a
/// forward-plus-reversed pair respectively.
pub fn scalar_first_order_bias(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sum: f64 = b.iter().sum();
    if scale > 0.0 && sum.abs() > 1e-12 * scale * b.len() as f64 {
        return Err(Error::NotCentered {
            residual: sum.abs(),
        });
    }
    let mut tail = 0.0;
    let mut one_epoch = 0.0;
    for i in (0..a.len()).rev() {
        one_epoch += b[i] * tail;
        tail += a[i];
    }
    let pair: f64 = -a.iter().zip(b).map(|(ai, bi)| ai * bi).sum::<f64>();
    Ok((one_epoch, pair))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedulers::BaseOrder;

    fn pair() -> QuadraticSum {
        QuadraticSum::scalar_with_linear(&[1.0, 1.0], &[1.0, -1.0]).unwrap()
    }

    fn perm(p: &[usize]) -> Permutation {
        Permutation::from_one_based(p).unwrap()
    }

    #[test]
    fn zero_step_leaves_point() {
        let q = pair();
        let x0 = Vector::from_element(1, 0.7);
        assert_eq!(sgd_epoch(&q, &x0, &perm(&[2, 1]), 0.0).unwrap(), x0);
    }

    #[test]
    fn one_epoch_scalar_example() {
        let x = sgd_epoch(&pair(), &Vector::zeros(1), &perm(&[1, 2]), 0.1).unwrap();
        assert!((x[0] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn flipflop_and_single_shuffle_two_epochs() {
        let q = pair();
        let cfg = RunConfig::new(0.1, 2, Vector::zeros(1));
        let fixed =
            |seq: Vec<Permutation>| run_with_sequence(&q, &seq, &cfg, &Vector::zeros(1)).unwrap();
        let ff = fixed(vec![perm(&[1, 2]), perm(&[2, 1])]);
        let ss = fixed(vec![perm(&[1, 2]), perm(&[1, 2])]);
        assert!((ff.final_x[0] + 0.0019).abs() < 1e-15);
        assert!((ss.final_x[0] - 0.0181).abs() < 1e-15);
    }

    #[test]
    fn affine_map_scalar_example() {
        let map = epoch_affine_map(&pair(), &perm(&[1, 2]), 0.1).unwrap();
        assert!((map.m[(0, 0)] - 0.81).abs() < 1e-15);
        assert!((map.v[0] - 0.01).abs() < 1e-15);
        let id = epoch_affine_map(&pair(), &perm(&[1, 2]), 0.0).unwrap();
        assert_eq!(id, AffineEpochMap::identity(1));
    }

    #[test]
    fn bias_z_scalar_example() {
        let z = flipflop_bias_z(&pair(), &perm(&[1, 2]), 0.1).unwrap();
        assert!((z[0] + 0.0019).abs() < 1e-15);
    }

    #[test]
    fn bias_z_needs_centering() {
        let q = QuadraticSum::scalar(&[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert!(matches!(
            flipflop_bias_z(&q, &perm(&[1, 2]), 0.1),
            Err(Error::NotCentered { .. })
        ));
    }

    #[test]
    fn first_order_bias_coefficients() {
        assert_eq!(
            scalar_first_order_bias(&[1.0, 1.0], &[1.0, -1.0]).unwrap(),
            (1.0, 0.0)
        );
        assert_eq!(
            scalar_first_order_bias(&[2.0, 3.0], &[0.0, 0.0]).unwrap(),
            (0.0, -0.0)
        );
        assert!(scalar_first_order_bias(&[1.0, 1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn odd_flipflop_epochs_rejected() {
        let q = pair();
        let mut s = PermutationStrategy::new(BaseOrder::RandomReshuffle, true, 1, 2).unwrap();
        let cfg = RunConfig::new(0.1, 3, Vector::zeros(1));
        assert!(matches!(
            run(&q, &mut s, &cfg, &Vector::zeros(1)),
            Err(Error::OddFlipFlopEpochs(3))
        ));
    }

    #[test]
    fn divergence_is_flagged() {
        // curvature 1 with α = 2.5: |1 − α| = 1.5 per step
        let q = QuadraticSum::scalar(&[1.0], &[0.0]).unwrap();
        let mut s = PermutationStrategy::new(BaseOrder::Igd, false, 0, 1).unwrap();
        let cfg = RunConfig::new(2.5, 1000, Vector::from_element(1, 1.0));
        let t = run(&q, &mut s, &cfg, &Vector::zeros(1)).unwrap();
        assert!(t.diverged());
        assert!(t.sq_errors.iter().all(|e| e.is_finite()));
        assert!(t.final_x[0].is_finite());
        assert!(t.sq_errors.len() < 1000);
    }
}
