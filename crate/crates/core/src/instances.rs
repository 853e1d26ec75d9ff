//! Generators for the constructed problem families, plus the JSON instance
//! format that names them.

use serde::{Deserialize, Serialize};

use crate::error::invalid;
use crate::linalg::Hessian;
use crate::problems::{FiniteSum, InstanceStats, QuadraticComponent, QuadraticSum};
use crate::rng::Xoshiro256;
use crate::{Error, Matrix, Result, Vector};

/// Mean computation: `f_i(x) = ‖x − x_i‖²` with `x_i` uniform on the unit
/// sphere of `R^d`, so `A_i = 2I`, `b_i = 2x_i` and `x*` is the sample mean.
pub fn gen_mean_computation(n: usize, d: usize, seed: u64) -> Result<QuadraticSum> {
    if n == 0 || d == 0 {
        return Err(invalid("n/d", "need n >= 1 and d >= 1"));
    }
    let mut rng = Xoshiro256::seed_from_u64(seed);
    let components = (0..n)
        .map(|_| {
            let p = rng.unit_sphere(d);
            QuadraticComponent::new(Hessian::scaled_identity(d, 2.0), p * 2.0)
        })
        .collect();
    QuadraticSum::new(components)
}

/// The sample points of [`gen_mean_computation`], recovered from `b_i / 2`.
pub fn mean_computation_points(q: &QuadraticSum) -> Vec<Vector> {
    q.components().iter().map(|c| &c.b / 2.0).collect()
}

fn check_l(l: f64) -> Result<()> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(invalid("L", "must be positive and finite"));
    }
    Ok(())
}

/// Paired-coordinate family over `z = (x_1, y_1, …, x_{n/2}, y_{n/2})`.
///
/// Components `f_1..f_{n/2}` come first: `f_i` has curvature `L` on every
/// coordinate except `y_i`, and linear part `−x_i + y_i`. Then `g_i`
/// mirrors it with the roles of `x_i` and `y_i` swapped. The mean is
/// `((n−1)/n)(L/2)‖z‖²`.
pub fn gen_lower_bound_f1(n: usize, l: f64) -> Result<QuadraticSum> {
    check_l(l)?;
    if n < 4 || n % 2 == 1 {
        return Err(invalid("n", format!("needs an even n >= 4, got {n}")));
    }
    let half = n / 2;
    let mut components = Vec::with_capacity(n);
    for flip in [false, true] {
        for i in 0..half {
            let (xi, yi) = (2 * i, 2 * i + 1);
            let (zero_at, plus_at, minus_at) = if flip { (xi, yi, xi) } else { (yi, xi, yi) };
            let mut diag = Vector::from_element(n, l);
            diag[zero_at] = 0.0;
            let mut b = Vector::zeros(n);
            b[plus_at] = 1.0;
            b[minus_at] = -1.0;
            components.push(QuadraticComponent::new(Hessian::diagonal(diag), b));
        }
    }
    QuadraticSum::new(components)
}

/// `f_i(y) = −y_i + Σ_{j≠i} (L y_j²/2 + y_j/(n−1))` over `n` coordinates.
pub fn gen_lower_bound_f2(n: usize, l: f64) -> Result<QuadraticSum> {
    check_l(l)?;
    if n < 2 {
        return Err(invalid("n", "needs n >= 2"));
    }
    let off = -1.0 / (n as f64 - 1.0);
    let components = (0..n)
        .map(|i| {
            let mut diag = Vector::from_element(n, l);
            diag[i] = 0.0;
            let mut b = Vector::from_element(n, off);
            b[i] = 1.0;
            QuadraticComponent::new(Hessian::diagonal(diag), b)
        })
        .collect();
    QuadraticSum::new(components)
}

/// `n` identical 1-D components `f_i(z) = L z²`.
pub fn gen_lower_bound_f3(l: f64, n: usize) -> Result<QuadraticSum> {
    check_l(l)?;
    if n == 0 {
        return Err(invalid("n", "needs n >= 1"));
    }
    let components = (0..n)
        .map(|_| QuadraticComponent::new(Hessian::scaled_identity(1, 2.0 * l), Vector::zeros(1)))
        .collect();
    QuadraticSum::new(components)
}

/// Direct sum of the three families, dimension `2n + 1`; component `i` is
/// the direct sum of the `i`-th component of each.
pub fn gen_lower_bound_combined(n: usize, l: f64) -> Result<QuadraticSum> {
    let f1 = gen_lower_bound_f1(n, l)?;
    let f2 = gen_lower_bound_f2(n, l)?;
    let f3 = gen_lower_bound_f3(l, n)?;
    let components = (0..n)
        .map(|i| {
            let parts = [
                &f1.components()[i],
                &f2.components()[i],
                &f3.components()[i],
            ];
            let hessian = parts[0]
                .hessian
                .direct_sum(&parts[1].hessian)
                .direct_sum(&parts[2].hessian);
            let b =
                Vector::from_iterator(2 * n + 1, parts.iter().flat_map(|c| c.b.iter().copied()));
            QuadraticComponent::new(hessian, b)
        })
        .collect();
    QuadraticSum::new(components)
}

/// Two 1-D components, `L x²/2 − x` and the concave `−L x²/4 + x`; their
/// mean is `L x²/8`.
pub fn gen_nonconvex_pair(l: f64) -> Result<QuadraticSum> {
    check_l(l)?;
    QuadraticSum::scalar(&[l, -l / 2.0], &[1.0, -1.0])
}

/// Layout of the identity-order-adversarial instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IgdHardVariant {
    /// 1-D, `f_i = L x²/2 + s_i G x` with `s_i = +1` on the first half of
    /// the components and `−1` on the second half.
    #[default]
    TwoBlock,
    /// The combined lower-bound family scheduled in identity order.
    LbCombined,
}

/// An instance on which the identity order is slow.
///
/// The default two-block layout puts every positive gradient offset ahead of
/// every negative one, so the identity order drifts by `Θ(nαG)` each epoch
/// and its error stalls at `Θ(1/K²)` under the log-regime step size.
pub fn gen_igd_hard(n: usize, l: f64, g: f64, variant: IgdHardVariant) -> Result<QuadraticSum> {
    check_l(l)?;
    match variant {
        IgdHardVariant::TwoBlock => {
            if n < 2 || n % 2 == 1 {
                return Err(invalid("n", format!("needs an even n >= 2, got {n}")));
            }
            if !(g > 0.0) {
                return Err(invalid("G", "must be positive"));
            }
            let a = vec![l; n];
            let c: Vec<f64> = (0..n).map(|i| if i < n / 2 { g } else { -g }).collect();
            QuadraticSum::scalar_with_linear(&a, &c)
        }
        IgdHardVariant::LbCombined => gen_lower_bound_combined(n, l),
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

/// Bisection-safeguarded Newton on an increasing 1-D function.
fn solve_increasing(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
) -> Result<f64> {
    let mut expand = 0;
    while f(lo) > 0.0 {
        lo -= (hi - lo).max(1.0);
        expand += 1;
        if expand > 200 {
            return Err(Error::Unsupported("root bracket not found".into()));
        }
    }
    while f(hi) < 0.0 {
        hi += (hi - lo).max(1.0);
        expand += 1;
        if expand > 200 {
            return Err(Error::Unsupported("root bracket not found".into()));
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..500 {
        let fx = f(x);
        if fx.abs() <= 1e-15 {
            return Ok(x);
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        x = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(x)
}

/// 1-D logistic regression with `±1` data points.
///
/// Component `i` is the cross-entropy `−y_i log h(x z_i) − (1−y_i)
/// log(1 − h(x z_i))` with the sigmoid `h`. Labels agree with the sign of
/// `z` with probability 3/4, which puts the population minimizer at
/// `ln 3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticSum {
    z: Vec<f64>,
    y: Vec<f64>,
    minimizer: f64,
}

impl LogisticSum {
    pub fn new(z: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if z.is_empty() || z.len() != y.len() {
            return Err(invalid("z/y", "need matching non-empty data and labels"));
        }
        let mut s = Self {
            z,
            y,
            minimizer: 0.0,
        };
        s.minimizer = s.solve_minimizer()?;
        Ok(s)
    }

    fn mean_derivative(&self, x: f64) -> f64 {
        let n = self.z.len() as f64;
        self.z
            .iter()
            .zip(&self.y)
            .map(|(z, y)| (sigmoid(x * z) - y) * z)
            .sum::<f64>()
            / n
    }

    fn mean_curvature(&self, x: f64) -> f64 {
        let n = self.z.len() as f64;
        self.z
            .iter()
            .map(|z| {
                let h = sigmoid(x * z);
                h * (1.0 - h) * z * z
            })
            .sum::<f64>()
            / n
    }

    fn solve_minimizer(&self) -> Result<f64> {
        let agree = self
            .z
            .iter()
            .zip(&self.y)
            .filter(|(z, y)| (**z > 0.0) == (**y > 0.5))
            .count();
        if agree == 0 || agree == self.z.len() {
            return Err(invalid("labels", "separable data has no finite minimizer"));
        }
        solve_increasing(
            |x| self.mean_derivative(x),
            |x| self.mean_curvature(x),
            -1.0,
            1.0,
        )
    }

    pub fn points(&self) -> &[f64] {
        &self.z
    }

    pub fn labels(&self) -> &[f64] {
        &self.y
    }

    /// Minimizer of the empirical loss.
    pub fn minimizer(&self) -> f64 {
        self.minimizer
    }

    /// Minimizer of the expected loss under the generating distribution.
    pub fn population_minimizer() -> f64 {
        3f64.ln()
    }

    pub fn stats(&self, x0: f64) -> Result<InstanceStats> {
        let x_star = self.minimizer;
        // Curvature is h(1−h)z² ≤ 1/4; the local curvature at the minimizer
        // stands in for the strong-convexity constant.
        let mu = self.mean_curvature(x_star);
        let l = self.z.iter().map(|z| z * z).fold(0.0, f64::max) / 4.0;
        let xs = Vector::from_element(1, x_star);
        let g_star = (0..self.z.len())
            .map(|i| self.gradient_unchecked(i, &xs)[0].abs())
            .fold(0.0, f64::max);
        InstanceStats::from_parts(mu, l, xs, g_star, &Vector::from_element(1, x0))
    }
}

impl FiniteSum for LogisticSum {
    fn num_components(&self) -> usize {
        self.z.len()
    }

    fn dim(&self) -> usize {
        1
    }

    fn gradient_unchecked(&self, i: usize, x: &Vector) -> Vector {
        let z = self.z[i];
        Vector::from_element(1, (sigmoid(x[0] * z) - self.y[i]) * z)
    }

    fn value_unchecked(&self, i: usize, x: &Vector) -> Option<f64> {
        // −y log h(t) − (1−y) log(1−h(t)) = softplus(t) − y t
        let t = x[0] * self.z[i];
        Some(softplus(t) - self.y[i] * t)
    }

    fn sgd_step(&self, i: usize, alpha: f64, x: &mut Vector) {
        let z = self.z[i];
        x[0] -= alpha * (sigmoid(x[0] * z) - self.y[i]) * z;
    }
}

/// Logistic data: `z_i = ±1` with equal probability; `y_i = 1_{z_i > 0}`
/// with probability 3/4 and `1_{z_i < 0}` otherwise.
pub fn gen_logistic_1d(n: usize, seed: u64) -> Result<LogisticSum> {
    if n < 2 {
        return Err(invalid("n", "needs n >= 2"));
    }
    let mut rng = Xoshiro256::seed_from_u64(seed);
    let mut z = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let zi = rng.sign();
        let agree = rng.next_f64() < 0.75;
        let positive = (zi > 0.0) == agree;
        z.push(zi);
        y.push(if positive { 1.0 } else { 0.0 });
    }
    LogisticSum::new(z, y)
}

/// Sup of `|d³/dx³ log cosh x|`, attained where `tanh² x = 1/3`.
pub fn logcosh_third_derivative_bound() -> f64 {
    4.0 / (3.0 * 3f64.sqrt())
}

fn logcosh(u: f64) -> f64 {
    let a = u.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Parameters of a 1-D Hessian-smooth sum
/// `f_i(x) = a_i x²/2 + c_i x + ε_i log cosh(x − s_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothSpec {
    pub a: Vec<f64>,
    pub c: Vec<f64>,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub shift: Vec<f64>,
}

/// 1-D sum of quadratics with log-cosh perturbations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothSum1d {
    a: Vec<f64>,
    c: Vec<f64>,
    eps: Vec<f64>,
    shift: Vec<f64>,
    minimizer: f64,
}

impl SmoothSum1d {
    pub fn new(spec: &SmoothSpec) -> Result<Self> {
        let n = spec.a.len();
        if n == 0 || spec.c.len() != n {
            return Err(invalid("a/c", "need matching non-empty coefficient lists"));
        }
        let fill = |v: &Vec<f64>, name: &'static str| -> Result<Vec<f64>> {
            match v.len() {
                0 => Ok(vec![0.0; n]),
                m if m == n => Ok(v.clone()),
                _ => Err(invalid(name, "length must match a")),
            }
        };
        let mut s = Self {
            a: spec.a.clone(),
            c: spec.c.clone(),
            eps: fill(&spec.eps, "eps")?,
            shift: fill(&spec.shift, "shift")?,
            minimizer: 0.0,
        };
        let mu = s.mu();
        if !(mu > 0.0) {
            return Err(Error::NotStronglyConvex { min_eigenvalue: mu });
        }
        s.minimizer =
            solve_increasing(|x| s.mean_derivative(x), |x| s.mean_curvature(x), -1.0, 1.0)?;
        Ok(s)
    }

    fn derivative(&self, i: usize, x: f64) -> f64 {
        self.a[i] * x + self.c[i] + self.eps[i] * (x - self.shift[i]).tanh()
    }

    fn curvature(&self, i: usize, x: f64) -> f64 {
        let t = (x - self.shift[i]).tanh();
        self.a[i] + self.eps[i] * (1.0 - t * t)
    }

    fn mean_derivative(&self, x: f64) -> f64 {
        (0..self.a.len())
            .map(|i| self.derivative(i, x))
            .sum::<f64>()
            / self.a.len() as f64
    }

    fn mean_curvature(&self, x: f64) -> f64 {
        (0..self.a.len()).map(|i| self.curvature(i, x)).sum::<f64>() / self.a.len() as f64
    }

    /// Global lower bound on `F''`: each `sech²` factor lies in `(0, 1]`.
    pub fn mu(&self) -> f64 {
        let n = self.a.len() as f64;
        self.a
            .iter()
            .zip(&self.eps)
            .map(|(a, e)| a + e.min(0.0))
            .sum::<f64>()
            / n
    }

    /// `max_i sup_x |f_i''(x)|`.
    pub fn l(&self) -> f64 {
        self.a
            .iter()
            .zip(&self.eps)
            .map(|(a, e)| a.abs().max((a + e).abs()))
            .fold(0.0, f64::max)
    }

    /// `max_i |ε_i| · sup |(log cosh)'''|`.
    pub fn l_hessian(&self) -> f64 {
        self.eps.iter().fold(0.0f64, |m, e| m.max(e.abs())) * logcosh_third_derivative_bound()
    }

    pub fn minimizer(&self) -> f64 {
        self.minimizer
    }

    /// `f_i'` at `x` for every component.
    pub fn derivatives_at(&self, x: f64) -> Vec<f64> {
        (0..self.a.len()).map(|i| self.derivative(i, x)).collect()
    }

    pub fn stats(&self, x0: f64) -> Result<InstanceStats> {
        let g_star = self
            .derivatives_at(self.minimizer)
            .into_iter()
            .fold(0.0f64, |m, g| m.max(g.abs()));
        InstanceStats::from_parts(
            self.mu(),
            self.l(),
            Vector::from_element(1, self.minimizer),
            g_star,
            &Vector::from_element(1, x0),
        )
    }
}

impl FiniteSum for SmoothSum1d {
    fn num_components(&self) -> usize {
        self.a.len()
    }

    fn dim(&self) -> usize {
        1
    }

    fn gradient_unchecked(&self, i: usize, x: &Vector) -> Vector {
        Vector::from_element(1, self.derivative(i, x[0]))
    }

    fn value_unchecked(&self, i: usize, x: &Vector) -> Option<f64> {
        let x = x[0];
        Some(0.5 * self.a[i] * x * x + self.c[i] * x + self.eps[i] * logcosh(x - self.shift[i]))
    }

    fn sgd_step(&self, i: usize, alpha: f64, x: &mut Vector) {
        x[0] -= alpha * self.derivative(i, x[0]);
    }
}

pub fn gen_hessian_smooth_1d(spec: &SmoothSpec) -> Result<SmoothSum1d> {
    SmoothSum1d::new(spec)
}

fn default_l() -> f64 {
    1.0
}

fn default_seed() -> u64 {
    0
}

/// A problem instance as described in JSON: either a named generator with
/// its parameters or an inline quadratic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorSpec {
    /// Inline quadratic: `A` is a list of matrices, each a list of rows.
    Quadratic {
        n: usize,
        d: usize,
        #[serde(rename = "A")]
        a: Vec<Vec<Vec<f64>>>,
        b: Vec<Vec<f64>>,
    },
    MeanComputation {
        n: usize,
        d: usize,
        #[serde(default = "default_seed")]
        seed: u64,
    },
    LbF1 {
        n: usize,
        #[serde(rename = "L", default = "default_l")]
        l: f64,
    },
    LbF2 {
        n: usize,
        #[serde(rename = "L", default = "default_l")]
        l: f64,
    },
    LbF3 {
        n: usize,
        #[serde(rename = "L", default = "default_l")]
        l: f64,
    },
    LbCombined {
        n: usize,
        #[serde(rename = "L", default = "default_l")]
        l: f64,
    },
    NonconvexPair {
        #[serde(rename = "L", default = "default_l")]
        l: f64,
    },
    #[serde(rename = "logistic_1d")]
    Logistic1d {
        n: usize,
        #[serde(default = "default_seed")]
        seed: u64,
    },
    #[serde(rename = "hessian_smooth_1d")]
    HessianSmooth1d(SmoothSpec),
    IgdHard {
        n: usize,
        #[serde(rename = "L", default = "default_l")]
        l: f64,
        #[serde(rename = "G", default = "default_l")]
        g: f64,
        #[serde(default)]
        variant: IgdHardVariant,
    },
}

impl GeneratorSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn build(&self) -> Result<Instance> {
        Ok(match self {
            GeneratorSpec::Quadratic { n, d, a, b } => {
                if a.len() != *n || b.len() != *n {
                    return Err(Error::Format(format!(
                        "expected {n} matrices and vectors, got {} and {}",
                        a.len(),
                        b.len()
                    )));
                }
                let mats = a
                    .iter()
                    .map(|rows| {
                        if rows.len() != *d || rows.iter().any(|r| r.len() != *d) {
                            return Err(Error::Format(format!("each A must be {d}x{d}")));
                        }
                        Ok(Matrix::from_fn(*d, *d, |r, c| rows[r][c]))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let vecs = b
                    .iter()
                    .map(|v| {
                        if v.len() != *d {
                            return Err(Error::Format(format!("each b must have length {d}")));
                        }
                        Ok(Vector::from_column_slice(v))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Instance::Quadratic(QuadraticSum::from_dense(mats, vecs)?)
            }
            GeneratorSpec::MeanComputation { n, d, seed } => {
                Instance::Quadratic(gen_mean_computation(*n, *d, *seed)?)
            }
            GeneratorSpec::LbF1 { n, l } => Instance::Quadratic(gen_lower_bound_f1(*n, *l)?),
            GeneratorSpec::LbF2 { n, l } => Instance::Quadratic(gen_lower_bound_f2(*n, *l)?),
            GeneratorSpec::LbF3 { n, l } => Instance::Quadratic(gen_lower_bound_f3(*l, *n)?),
            GeneratorSpec::LbCombined { n, l } => {
                Instance::Quadratic(gen_lower_bound_combined(*n, *l)?)
            }
            GeneratorSpec::NonconvexPair { l } => Instance::Quadratic(gen_nonconvex_pair(*l)?),
            GeneratorSpec::Logistic1d { n, seed } => {
                Instance::Logistic(gen_logistic_1d(*n, *seed)?)
            }
            GeneratorSpec::HessianSmooth1d(spec) => Instance::Smooth(gen_hessian_smooth_1d(spec)?),
            GeneratorSpec::IgdHard { n, l, g, variant } => {
                Instance::Quadratic(gen_igd_hard(*n, *l, *g, *variant)?)
            }
        })
    }
}

/// A built instance of any family.
#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Quadratic(QuadraticSum),
    Logistic(LogisticSum),
    Smooth(SmoothSum1d),
}

impl Instance {
    fn inner(&self) -> &dyn FiniteSum {
        match self {
            Instance::Quadratic(q) => q,
            Instance::Logistic(l) => l,
            Instance::Smooth(s) => s,
        }
    }

    pub fn as_quadratic(&self) -> Option<&QuadraticSum> {
        match self {
            Instance::Quadratic(q) => Some(q),
            _ => None,
        }
    }

    /// The point errors are measured against.
    pub fn minimizer(&self) -> Result<Vector> {
        match self {
            Instance::Quadratic(q) => q.minimizer(),
            Instance::Logistic(l) => Ok(Vector::from_element(1, l.minimizer())),
            Instance::Smooth(s) => Ok(Vector::from_element(1, s.minimizer())),
        }
    }

    /// Lipschitz constant of the component second derivatives.
    pub fn l_hessian(&self) -> f64 {
        match self {
            Instance::Quadratic(_) => 0.0,
            // |d³/dt³ softplus| ≤ 1/(6√3) for the sigmoid's second derivative
            Instance::Logistic(_) => 1.0 / (6.0 * 3f64.sqrt()),
            Instance::Smooth(s) => s.l_hessian(),
        }
    }

    pub fn stats(&self, x0: &Vector) -> Result<InstanceStats> {
        match self {
            Instance::Quadratic(q) => q.stats(x0),
            Instance::Logistic(l) => {
                self.check_point(x0)?;
                l.stats(x0[0])
            }
            Instance::Smooth(s) => {
                self.check_point(x0)?;
                s.stats(x0[0])
            }
        }
    }
}

impl FiniteSum for Instance {
    fn num_components(&self) -> usize {
        self.inner().num_components()
    }

    fn dim(&self) -> usize {
        self.inner().dim()
    }

    fn gradient_unchecked(&self, i: usize, x: &Vector) -> Vector {
        self.inner().gradient_unchecked(i, x)
    }

    fn value_unchecked(&self, i: usize, x: &Vector) -> Option<f64> {
        self.inner().value_unchecked(i, x)
    }

    fn sgd_step(&self, i: usize, alpha: f64, x: &mut Vector) {
        self.inner().sgd_step(i, alpha, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_points_and_mean_minimizer() {
        let q = gen_mean_computation(50, 7, 3).unwrap();
        let pts = mean_computation_points(&q);
        assert!(pts.iter().all(|p| (p.norm() - 1.0).abs() < 1e-12));
        let mut mean = Vector::zeros(7);
        for p in &pts {
            mean += p;
        }
        mean /= 50.0;
        assert!((q.minimizer().unwrap() - mean).norm() < 1e-14);
        let s = q.stats(&Vector::zeros(7)).unwrap();
        assert_eq!((s.mu, s.l, s.kappa), (2.0, 2.0, 1.0));
    }

    #[test]
    fn single_point_minimizer() {
        let q = gen_mean_computation(1, 4, 11).unwrap();
        let p = &mean_computation_points(&q)[0];
        assert!((q.minimizer().unwrap() - p).norm() < 1e-15);
    }

    #[test]
    fn f1_gradient_matches_written_form() {
        // f_1 at z = 0 has gradient (−1, 1, 0, 0) for n = 4
        let q = gen_lower_bound_f1(4, 2.0).unwrap();
        let g = q.gradient(0, &Vector::zeros(4)).unwrap();
        assert_eq!(g.as_slice(), &[-1.0, 1.0, 0.0, 0.0]);
        // g_1 swaps the roles
        let g = q.gradient(2, &Vector::zeros(4)).unwrap();
        assert_eq!(g.as_slice(), &[1.0, -1.0, 0.0, 0.0]);
        assert!(gen_lower_bound_f1(5, 1.0).is_err());
        assert!(gen_lower_bound_f1(2, 1.0).is_err());
    }

    #[test]
    fn f2_is_centered_with_scaled_curvature() {
        let q = gen_lower_bound_f2(5, 3.0).unwrap();
        assert!(q.full_gradient(&Vector::zeros(5)).unwrap().amax() < 1e-15);
        let s = q.stats(&Vector::zeros(5)).unwrap();
        assert!((s.mu - 4.0 * 3.0 / 5.0).abs() < 1e-14);
    }

    #[test]
    fn combined_dimension_and_constants() {
        let q = gen_lower_bound_combined(6, 1.5).unwrap();
        assert_eq!(q.dim(), 13);
        let s = q.stats(&Vector::zeros(13)).unwrap();
        assert!(s.minimizer.norm() < 1e-15);
        assert!((s.mu - 5.0 * 1.5 / 6.0).abs() < 1e-14);
        assert!((s.l - 3.0).abs() < 1e-14);
    }

    #[test]
    fn nonconvex_pair_mean() {
        let q = gen_nonconvex_pair(2.0).unwrap();
        assert!((q.strong_convexity() - 0.5).abs() < 1e-15);
        assert_eq!(q.minimizer().unwrap()[0], 0.0);
    }

    #[test]
    fn logistic_gradient_at_zero_is_half() {
        let l = gen_logistic_1d(20, 1).unwrap();
        for i in 0..20 {
            assert_eq!(l.gradient(i, &Vector::zeros(1)).unwrap()[0].abs(), 0.5);
        }
    }

    #[test]
    fn logistic_minimizer_matches_count_formula() {
        let l = gen_logistic_1d(800, 17).unwrap();
        // F'(x) = h(x) − (#{z=1,y=1} + #{z=−1} − #{z=−1,y=1}) / n
        let n = 800.0;
        let mut target = 0.0;
        for (z, y) in l.points().iter().zip(l.labels()) {
            target += if *z > 0.0 { *y } else { 1.0 - *y };
        }
        let p: f64 = target / n;
        let closed = (p / (1.0 - p)).ln();
        assert!((l.minimizer() - closed).abs() < 1e-12);
        assert!((l.minimizer() - LogisticSum::population_minimizer()).abs() < 5.0 / n.sqrt());
    }

    #[test]
    fn smooth_family_constants() {
        let pure = SmoothSum1d::new(&SmoothSpec {
            a: vec![1.0, 2.0],
            c: vec![1.0, -1.0],
            eps: vec![],
            shift: vec![],
        })
        .unwrap();
        assert_eq!(pure.l_hessian(), 0.0);
        assert!((pure.minimizer() - 0.0).abs() < 1e-15);
        let s = SmoothSum1d::new(&SmoothSpec {
            a: vec![1.0, 1.5, 2.5, 3.0],
            c: vec![1.0, -2.0, 0.5, 0.5],
            eps: vec![0.2, -0.1, 0.1, 0.0],
            shift: vec![0.3, -0.2, 0.0, 1.0],
        })
        .unwrap();
        let g: f64 = s.derivatives_at(s.minimizer()).iter().sum();
        assert!(g.abs() < 1e-12);
        assert!((s.l() - 3.0).abs() < 1e-15);
        assert!((s.mu() - 1.975).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let spec = GeneratorSpec::from_json(r#"{"kind":"mean_computation","n":10,"d":3,"seed":4}"#)
            .unwrap();
        assert_eq!(
            spec,
            GeneratorSpec::MeanComputation {
                n: 10,
                d: 3,
                seed: 4
            }
        );
        let inline = r#"{"kind":"quadratic","n":2,"d":1,"A":[[[1.0]],[[1.0]]],"b":[[1.0],[-1.0]]}"#;
        let inst = GeneratorSpec::from_json(inline).unwrap().build().unwrap();
        assert_eq!(inst.num_components(), 2);
        assert!(GeneratorSpec::from_json(r#"{"kind":"nope"}"#).is_err());
        let text = serde_json::to_string(&GeneratorSpec::IgdHard {
            n: 8,
            l: 1.0,
            g: 1.0,
            variant: IgdHardVariant::TwoBlock,
        })
        .unwrap();
        assert!(text.contains("\"kind\":\"igd_hard\""));
    }
}
