//! Small dense linear-algebra helpers shared by the problem model, the engine
//! and the lemma verifiers.

use serde::{Deserialize, Serialize};

use crate::{Matrix, Vector};

/// Symmetric Hessian of a quadratic component.
///
/// Dense storage is the general case. The constructed families have
/// identity-multiple or diagonal Hessians; storing them that way keeps
/// high-dimensional sweeps cheap and makes their spectra exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Hessian {
    ScaledIdentity { dim: usize, scale: f64 },
    Diagonal { diag: Vector },
    Dense { matrix: Matrix },
}

impl Hessian {
    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        Hessian::ScaledIdentity { dim, scale }
    }

    pub fn diagonal(diag: Vector) -> Self {
        Hessian::Diagonal { diag }
    }

    pub fn dense(matrix: Matrix) -> Self {
        Hessian::Dense { matrix }
    }

    pub fn dim(&self) -> usize {
        match self {
            Hessian::ScaledIdentity { dim, .. } => *dim,
            Hessian::Diagonal { diag } => diag.len(),
            Hessian::Dense { matrix } => matrix.nrows(),
        }
    }

    /// `H x`.
    pub fn apply(&self, x: &Vector) -> Vector {
        match self {
            Hessian::ScaledIdentity { scale, .. } => x * *scale,
            Hessian::Diagonal { diag } => diag.component_mul(x),
            Hessian::Dense { matrix } => matrix * x,
        }
    }

    /// `x ← x − α (H x − b)` without allocating for the structured forms.
    pub fn descent_step(&self, b: &Vector, alpha: f64, x: &mut Vector) {
        match self {
            Hessian::ScaledIdentity { scale, .. } => {
                let shrink = 1.0 - alpha * scale;
                for (xi, bi) in x.iter_mut().zip(b.iter()) {
                    *xi = shrink * *xi + alpha * bi;
                }
            }
            Hessian::Diagonal { diag } => {
                for ((xi, bi), hi) in x.iter_mut().zip(b.iter()).zip(diag.iter()) {
                    *xi = (1.0 - alpha * hi) * *xi + alpha * bi;
                }
            }
            Hessian::Dense { matrix } => {
                let g = matrix * &*x - b;
                x.axpy(-alpha, &g, 1.0);
            }
        }
    }

    pub fn to_dense(&self) -> Matrix {
        match self {
            Hessian::ScaledIdentity { dim, scale } => Matrix::identity(*dim, *dim) * *scale,
            Hessian::Diagonal { diag } => Matrix::from_diagonal(diag),
            Hessian::Dense { matrix } => matrix.clone(),
        }
    }

    /// Smallest and largest eigenvalue. Exact for the structured forms.
    pub fn eigen_extremes(&self) -> (f64, f64) {
        match self {
            Hessian::ScaledIdentity { scale, .. } => (*scale, *scale),
            Hessian::Diagonal { diag } => (diag.min(), diag.max()),
            Hessian::Dense { matrix } => symmetric_extremes(matrix),
        }
    }

    /// Largest absolute eigenvalue (spectral norm of a symmetric matrix).
    pub fn spectral_radius(&self) -> f64 {
        let (lo, hi) = self.eigen_extremes();
        lo.abs().max(hi.abs())
    }

    /// Largest absolute deviation from symmetry. Zero for structured forms.
    pub fn asymmetry(&self) -> f64 {
        match self {
            Hessian::Dense { matrix } => (matrix - matrix.transpose()).amax(),
            _ => 0.0,
        }
    }

    pub fn max_abs_entry(&self) -> f64 {
        match self {
            Hessian::ScaledIdentity { scale, .. } => scale.abs(),
            Hessian::Diagonal { diag } => diag.amax(),
            Hessian::Dense { matrix } => matrix.amax(),
        }
    }

    pub(crate) fn is_structured(&self) -> bool {
        !matches!(self, Hessian::Dense { .. })
    }

    /// Sum of two Hessians of the same dimension, kept structured when possible.
    pub fn add(&self, other: &Hessian) -> Hessian {
        use Hessian::*;
        match (self, other) {
            (ScaledIdentity { dim, scale: a }, ScaledIdentity { scale: b, .. }) => ScaledIdentity {
                dim: *dim,
                scale: a + b,
            },
            (a, b) if a.is_structured() && b.is_structured() => Diagonal {
                diag: a.diagonal_entries() + b.diagonal_entries(),
            },
            (a, b) => Dense {
                matrix: a.to_dense() + b.to_dense(),
            },
        }
    }

    pub fn scale(&self, factor: f64) -> Hessian {
        match self {
            Hessian::ScaledIdentity { dim, scale } => Hessian::ScaledIdentity {
                dim: *dim,
                scale: scale * factor,
            },
            Hessian::Diagonal { diag } => Hessian::Diagonal {
                diag: diag * factor,
            },
            Hessian::Dense { matrix } => Hessian::Dense {
                matrix: matrix * factor,
            },
        }
    }

    fn diagonal_entries(&self) -> Vector {
        match self {
            Hessian::ScaledIdentity { dim, scale } => Vector::from_element(*dim, *scale),
            Hessian::Diagonal { diag } => diag.clone(),
            Hessian::Dense { matrix } => matrix.diagonal(),
        }
    }

    /// Block-diagonal direct sum `self ⊕ other`.
    pub fn direct_sum(&self, other: &Hessian) -> Hessian {
        if self.is_structured() && other.is_structured() {
            let a = self.diagonal_entries();
            let b = other.diagonal_entries();
            let diag = Vector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied());
            return Hessian::Diagonal { diag };
        }
        let (da, db) = (self.dim(), other.dim());
        let mut m = Matrix::zeros(da + db, da + db);
        m.view_mut((0, 0), (da, da)).copy_from(&self.to_dense());
        m.view_mut((da, da), (db, db)).copy_from(&other.to_dense());
        Hessian::Dense { matrix: m }
    }
}

/// Extreme eigenvalues of a symmetric matrix via the symmetric eigensolver.
pub fn symmetric_extremes(m: &Matrix) -> (f64, f64) {
    if m.nrows() == 0 {
        return (0.0, 0.0);
    }
    let eig = m.clone().symmetric_eigen();
    (eig.eigenvalues.min(), eig.eigenvalues.max())
}

/// Spectral norm (largest singular value) of a general square matrix,
/// computed as the square root of the top eigenvalue of `MᵀM`.
pub fn spectral_norm(m: &Matrix) -> f64 {
    let gram = m.transpose() * m;
    let (_, top) = symmetric_extremes(&gram);
    top.max(0.0).sqrt()
}

/// Sum of `vs`, all of length `dim`; used for centering checks.
pub fn sum_vectors<'a>(dim: usize, vs: impl IntoIterator<Item = &'a Vector>) -> Vector {
    vs.into_iter().fold(Vector::zeros(dim), |acc, v| acc + v)
}
