//! Finite-sum problem model: `F(x) = (1/n) Σ f_i(x)`.
//!
//! Quadratic components are stored as `f_i(x) = ½ xᵀA_i x − b_iᵀx`; constant
//! offsets are never stored since they affect neither gradients nor the
//! minimizer.

use serde::{Deserialize, Serialize};

use crate::error::invalid;
use crate::linalg::Hessian;
use crate::{Error, Matrix, Result, Vector};

/// Default relative tolerance for symmetry and centering checks.
pub const STRUCTURE_TOL: f64 = 1e-12;

/// A finite sum of differentiable components.
///
/// Implementors provide the per-component gradient; the checked entry points
/// and the SGD step are derived from it.
pub trait FiniteSum: Send + Sync {
    /// Number of components `n`.
    fn num_components(&self) -> usize;

    /// Ambient dimension `d`.
    fn dim(&self) -> usize;

    /// `∇f_i(x)` with `i` 0-based. Callers guarantee the index and dimension.
    fn gradient_unchecked(&self, i: usize, x: &Vector) -> Vector;

    /// `f_i(x)` if the family can evaluate it.
    fn value_unchecked(&self, _i: usize, _x: &Vector) -> Option<f64> {
        None
    }

    /// In-place step `x ← x − α ∇f_i(x)`.
    fn sgd_step(&self, i: usize, alpha: f64, x: &mut Vector) {
        let g = self.gradient_unchecked(i, x);
        x.axpy(-alpha, &g, 1.0);
    }

    fn gradient(&self, i: usize, x: &Vector) -> Result<Vector> {
        self.check_index(i)?;
        self.check_point(x)?;
        Ok(self.gradient_unchecked(i, x))
    }

    fn value(&self, i: usize, x: &Vector) -> Result<Option<f64>> {
        self.check_index(i)?;
        self.check_point(x)?;
        Ok(self.value_unchecked(i, x))
    }

    /// `∇F(x) = (1/n) Σ ∇f_i(x)`.
    fn full_gradient(&self, x: &Vector) -> Result<Vector> {
        self.check_point(x)?;
        let n = self.num_components();
        let mut acc = Vector::zeros(self.dim());
        for i in 0..n {
            acc += self.gradient_unchecked(i, x);
        }
        Ok(acc / n as f64)
    }

    /// `F(x)` if every component can be evaluated.
    fn mean_value(&self, x: &Vector) -> Result<Option<f64>> {
        self.check_point(x)?;
        let n = self.num_components();
        let mut total = 0.0;
        for i in 0..n {
            match self.value_unchecked(i, x) {
                Some(v) => total += v,
                None => return Ok(None),
            }
        }
        Ok(Some(total / n as f64))
    }

    fn check_index(&self, i: usize) -> Result<()> {
        let n = self.num_components();
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        Ok(())
    }

    fn check_point(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(invalid("x", "point has non-finite entries"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticComponent {
    pub hessian: Hessian,
    pub b: Vector,
}

impl QuadraticComponent {
    pub fn new(hessian: Hessian, b: Vector) -> Self {
        Self { hessian, b }
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        self.hessian.apply(x) - &self.b
    }

    pub fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&self.hessian.apply(x)) - self.b.dot(x)
    }
}

/// Mean of quadratic components `½ xᵀA_i x − b_iᵀx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticSum {
    components: Vec<QuadraticComponent>,
    dim: usize,
}

impl QuadraticSum {
    pub fn new(components: Vec<QuadraticComponent>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| invalid("components", "need at least one component"))?;
        let dim = first.b.len();
        if dim == 0 {
            return Err(invalid("d", "dimension must be at least 1"));
        }
        for c in &components {
            if c.hessian.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.hessian.dim(),
                });
            }
            if c.b.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.b.len(),
                });
            }
            let scale = c.hessian.max_abs_entry().max(1.0);
            if c.hessian.asymmetry() > STRUCTURE_TOL * scale {
                return Err(invalid("A", "component Hessian is not symmetric"));
            }
            let finite = c.b.iter().all(|v| v.is_finite())
                && c.hessian.to_dense().iter().all(|v| v.is_finite());
            if !finite {
                return Err(invalid("A/b", "non-finite coefficients"));
            }
        }
        Ok(Self { components, dim })
    }

    /// Dense constructor from matrices and linear terms.
    pub fn from_dense(a: Vec<Matrix>, b: Vec<Vector>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(invalid("A/b", "need as many matrices as linear terms"));
        }
        let components = a
            .into_iter()
            .zip(b)
            .map(|(m, v)| {
                if !m.is_square() {
                    return Err(invalid("A", "matrices must be square"));
                }
                Ok(QuadraticComponent::new(Hessian::dense(m), v))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(components)
    }

    /// 1-D components `½ a_i x² − b_i x`.
    pub fn scalar(a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(invalid("a/b", "length mismatch"));
        }
        let components = a
            .iter()
            .zip(b)
            .map(|(&ai, &bi)| {
                QuadraticComponent::new(
                    Hessian::scaled_identity(1, ai),
                    Vector::from_element(1, bi),
                )
            })
            .collect();
        Self::new(components)
    }

    /// 1-D components written as `½ a_i x² + c_i x` (linear coefficient with
    /// a plus sign, the usual way scalar examples are stated).
    pub fn scalar_with_linear(a: &[f64], c: &[f64]) -> Result<Self> {
        let b: Vec<f64> = c.iter().map(|v| -v).collect();
        Self::scalar(a, &b)
    }

    pub fn components(&self) -> &[QuadraticComponent] {
        &self.components
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn hessian(&self, i: usize) -> &Hessian {
        &self.components[i].hessian
    }

    pub fn linear_term(&self, i: usize) -> &Vector {
        &self.components[i].b
    }

    /// `Ā = (1/n) Σ A_i`, structured when all components are.
    pub fn mean_hessian(&self) -> Hessian {
        let n = self.n() as f64;
        let mut acc = self.components[0].hessian.clone();
        for c in &self.components[1..] {
            acc = acc.add(&c.hessian);
        }
        acc.scale(1.0 / n)
    }

    pub fn mean_linear_term(&self) -> Vector {
        let sum = self
            .components
            .iter()
            .fold(Vector::zeros(self.dim), |acc, c| acc + &c.b);
        sum / self.n() as f64
    }

    /// Smallest eigenvalue of the mean Hessian.
    pub fn strong_convexity(&self) -> f64 {
        self.mean_hessian().eigen_extremes().0
    }

    /// `max_i ‖A_i‖`, the component smoothness constant.
    pub fn smoothness(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.hessian.spectral_radius())
            .fold(0.0, f64::max)
    }

    /// `x* = Ā⁻¹ · mean(b)`.
    pub fn minimizer(&self) -> Result<Vector> {
        let mean_h = self.mean_hessian();
        let (lo, hi) = mean_h.eigen_extremes();
        let scale = hi.abs().max(1.0);
        if !(lo > STRUCTURE_TOL * scale) {
            return Err(Error::NotStronglyConvex { min_eigenvalue: lo });
        }
        let rhs = self.mean_linear_term();
        let x = match &mean_h {
            Hessian::ScaledIdentity { scale, .. } => rhs / *scale,
            Hessian::Diagonal { diag } => rhs.component_div(diag),
            Hessian::Dense { matrix } => matrix
                .clone()
                .cholesky()
                .ok_or(Error::NotStronglyConvex { min_eigenvalue: lo })?
                .solve(&rhs),
        };
        Ok(x)
    }

    /// `‖Σ b_i‖` relative to `max_i ‖b_i‖`; zero when all `b_i` vanish.
    pub fn centering_residual(&self) -> f64 {
        let scale = self
            .components
            .iter()
            .map(|c| c.b.norm())
            .fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let sum = self
            .components
            .iter()
            .fold(Vector::zeros(self.dim), |acc, c| acc + &c.b);
        sum.norm() / scale
    }

    pub fn is_centered(&self, tol: f64) -> bool {
        self.centering_residual() <= tol
    }

    /// Shifts coordinates so the minimizer sits at the origin:
    /// `b_i ← b_i − A_i x*`. Gradients at corresponding points agree and
    /// objective values differ by a constant.
    pub fn translate_to_origin(&self) -> Result<QuadraticSum> {
        let x_star = self.minimizer()?;
        let components = self
            .components
            .iter()
            .map(|c| QuadraticComponent::new(c.hessian.clone(), &c.b - c.hessian.apply(&x_star)))
            .collect();
        QuadraticSum::new(components)
    }

    /// Statistics of the instance for a run started at `x0`.
    pub fn stats(&self, x0: &Vector) -> Result<InstanceStats> {
        self.check_point(x0)?;
        let minimizer = self.minimizer()?;
        let mu = self.strong_convexity();
        let l = self.smoothness();
        let g_star = self
            .components
            .iter()
            .map(|c| c.gradient(&minimizer).norm())
            .fold(0.0, f64::max);
        InstanceStats::from_parts(mu, l, minimizer, g_star, x0)
    }
}

impl FiniteSum for QuadraticSum {
    fn num_components(&self) -> usize {
        self.components.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn gradient_unchecked(&self, i: usize, x: &Vector) -> Vector {
        self.components[i].gradient(x)
    }

    fn value_unchecked(&self, i: usize, x: &Vector) -> Option<f64> {
        Some(self.components[i].value(x))
    }

    fn sgd_step(&self, i: usize, alpha: f64, x: &mut Vector) {
        let c = &self.components[i];
        c.hessian.descent_step(&c.b, alpha, x);
    }
}

/// Free-function form of [`QuadraticSum::stats`].
pub fn instance_stats(q: &QuadraticSum, x0: &Vector) -> Result<InstanceStats> {
    q.stats(x0)
}

/// Free-function form of [`QuadraticSum::translate_to_origin`].
pub fn translate_to_origin(q: &QuadraticSum) -> Result<QuadraticSum> {
    q.translate_to_origin()
}

/// Constants of an instance relative to a particular initialization.
///
/// `d` and `g` depend on the starting point, so stats are computed per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceStats {
    pub mu: f64,
    pub l: f64,
    pub kappa: f64,
    pub minimizer: Vector,
    /// `max_i ‖∇f_i(x*)‖`.
    pub g_star: f64,
    /// `max{‖x0 − x*‖, g_star / (2L)}`.
    pub d: f64,
    /// `g_star + 2 d L`.
    pub g: f64,
}

impl InstanceStats {
    pub fn from_parts(
        mu: f64,
        l: f64,
        minimizer: Vector,
        g_star: f64,
        x0: &Vector,
    ) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::NotStronglyConvex { min_eigenvalue: mu });
        }
        if !(l >= mu) {
            return Err(invalid(
                "L",
                format!("smoothness {l} below strong convexity {mu}"),
            ));
        }
        if x0.len() != minimizer.len() {
            return Err(Error::DimensionMismatch {
                expected: minimizer.len(),
                got: x0.len(),
            });
        }
        let d = (x0 - &minimizer).norm().max(g_star / (2.0 * l));
        Ok(Self {
            mu,
            l,
            kappa: l / mu,
            g: g_star + 2.0 * d * l,
            minimizer,
            g_star,
            d,
        })
    }
}

/// How the constant step size of a run is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StepSizeRule {
    Explicit {
        alpha: f64,
    },
    /// FlipFlop with Single Shuffle: `10 log(nK) / (μ n K)`.
    FlipflopSs,
    /// FlipFlop with Random Reshuffle: `10 log(nK) / (μ n K)`.
    FlipflopRr,
    /// FlipFlop with IGD: `6 log(nK) / (μ n K)`.
    FlipflopIgd,
    /// Exponential-convergence rule for 1-D sums: `μ / (8 n (L² + L_H G))`.
    OneDimExponential,
    /// `scale · log(nK) / (μ n K)`, the same regime with a free constant.
    LogRegime {
        scale: f64,
    },
}

/// Quantities a [`StepSizeRule`] may need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepContext {
    pub n: usize,
    pub epochs: usize,
    pub mu: f64,
    pub l: f64,
    pub l_hessian: f64,
    pub g: f64,
}

impl StepContext {
    pub fn from_stats(n: usize, epochs: usize, stats: &InstanceStats, l_hessian: f64) -> Self {
        Self {
            n,
            epochs,
            mu: stats.mu,
            l: stats.l,
            l_hessian,
            g: stats.g,
        }
    }
}

impl StepSizeRule {
    pub fn resolve(&self, ctx: &StepContext) -> Result<f64> {
        let n = ctx.n as f64;
        let k = ctx.epochs as f64;
        let log_regime = |c: f64| c * (n * k).ln() / (ctx.mu * n * k);
        let alpha = match self {
            StepSizeRule::Explicit { alpha } => {
                if !(*alpha > 0.0) || !alpha.is_finite() {
                    return Err(invalid("alpha", "explicit step size must be positive"));
                }
                return Ok(*alpha);
            }
            StepSizeRule::FlipflopSs | StepSizeRule::FlipflopRr => log_regime(10.0),
            StepSizeRule::FlipflopIgd => log_regime(6.0),
            StepSizeRule::LogRegime { scale } => {
                if !(*scale > 0.0) {
                    return Err(invalid("scale", "must be positive"));
                }
                log_regime(*scale)
            }
            StepSizeRule::OneDimExponential => {
                ctx.mu / (8.0 * n * (ctx.l * ctx.l + ctx.l_hessian * ctx.g))
            }
        };
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(invalid(
                "alpha",
                format!("rule resolved to a non-positive step size {alpha}"),
            ));
        }
        let limit = 1.0 / ctx.l;
        if alpha > limit {
            return Err(Error::StepTooLarge { alpha, limit });
        }
        Ok(alpha)
    }
}
