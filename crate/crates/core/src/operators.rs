//! Operators on a finite-dimensional truncation of the Hilbert space.
//!
//! Everything is expressed in canonical coordinates of `R^d`. Norms follow the
//! Schatten convention: `p = 1` nuclear, `p = 2` Hilbert–Schmidt,
//! `p = ∞` operator norm.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

const SYMMETRY_TOLERANCE: f64 = 1e-12;
const ORTHONORMAL_TOLERANCE: f64 = 1e-10;
const CLAMP_RELATIVE: f64 = 1e-13;

/// Stand-in for the Hilbert space: `R^d` with optional basis names.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSpace {
    dim: usize,
    basis_labels: Option<Arc<[String]>>,
}

impl TruncatedSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("space dimension must be >= 1".into()));
        }
        Ok(Self {
            dim,
            basis_labels: None,
        })
    }

    pub fn with_labels(labels: Vec<String>) -> Result<Self> {
        let mut space = Self::new(labels.len())?;
        space.basis_labels = Some(labels.into());
        Ok(space)
    }

    /// `L²([0,1])` truncated to the first `dim` orthonormal shifted Legendre
    /// functions `√(2k+1) P_k(2x-1)`.
    pub fn shifted_legendre(dim: usize) -> Result<Self> {
        Self::with_labels((0..dim).map(|k| format!("sqrt({})*P_{k}(2x-1)", 2 * k + 1)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis_labels(&self) -> Option<&[String]> {
        self.basis_labels.as_deref()
    }
}

/// Linear operator on a [`TruncatedSpace`], stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorOnH {
    space: TruncatedSpace,
    entries: DMatrix<f64>,
    self_adjoint: bool,
}

impl OperatorOnH {
    /// Wraps a square matrix; the self-adjoint flag is set when the matrix is
    /// symmetric to within `1e-12` relative to its largest entry.
    pub fn new(space: TruncatedSpace, entries: DMatrix<f64>) -> Result<Self> {
        let d = space.dim();
        if entries.nrows() != d || entries.ncols() != d {
            return Err(Error::DimensionMismatch {
                left: d,
                right: entries.nrows().max(entries.ncols()),
            });
        }
        let self_adjoint = is_symmetric(&entries);
        Ok(Self {
            space,
            entries,
            self_adjoint,
        })
    }

    /// Symmetrizes `entries` and marks the result self-adjoint.
    pub fn new_self_adjoint(space: TruncatedSpace, entries: DMatrix<f64>) -> Result<Self> {
        let mut op = Self::new(space, entries)?;
        op.entries = (&op.entries + op.entries.transpose()) * 0.5;
        op.self_adjoint = true;
        Ok(op)
    }

    pub fn zeros(space: TruncatedSpace) -> Self {
        let d = space.dim();
        Self {
            space,
            entries: DMatrix::zeros(d, d),
            self_adjoint: true,
        }
    }

    pub fn identity(space: TruncatedSpace) -> Self {
        let d = space.dim();
        Self {
            space,
            entries: DMatrix::identity(d, d),
            self_adjoint: true,
        }
    }

    pub fn diagonal(space: TruncatedSpace, diag: &[f64]) -> Result<Self> {
        if diag.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                left: space.dim(),
                right: diag.len(),
            });
        }
        Ok(Self {
            entries: DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
            space,
            self_adjoint: true,
        })
    }

    pub fn space(&self) -> &TruncatedSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.self_adjoint
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), v.len())?;
        Ok((&self.entries * DVector::from_column_slice(v))
            .iter()
            .copied()
            .collect())
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space.clone(),
            entries: self.entries.transpose(),
            self_adjoint: self.self_adjoint,
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            space: self.space.clone(),
            entries: &self.entries * factor,
            self_adjoint: self.self_adjoint,
        }
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, other: &Self, factor: f64) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            space: self.space.clone(),
            entries: &self.entries + &other.entries * factor,
            self_adjoint: self.self_adjoint && other.self_adjoint,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, -1.0)
    }

    /// Singular values in decreasing order.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        if self.entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut s: Vec<f64> = if self.self_adjoint {
            SymmetricEigen::new(self.entries.clone())
                .eigenvalues
                .iter()
                .map(|x| x.abs())
                .collect()
        } else {
            self.entries.clone().svd(false, false).singular_values.iter().copied().collect()
        };
        s.sort_by(|a, b| b.total_cmp(a));
        Ok(s)
    }

    /// Eigenvalues in decreasing order. Only meaningful for self-adjoint operators.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        if !self.self_adjoint {
            return Err(Error::InvalidArgument(
                "eigenvalues requested for a non-self-adjoint operator".into(),
            ));
        }
        if self.entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let mut ev: Vec<f64> = SymmetricEigen::new(self.entries.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        Ok(ev)
    }

    pub fn schatten_norm(&self, p: f64) -> Result<f64> {
        schatten_norm(self, p)
    }

    pub fn trace(&self) -> f64 {
        trace(self)
    }

    /// `‖A‖₂`, computed from entries.
    pub fn hs_norm(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let scale = m.amax().max(1.0);
    let n = m.nrows();
    (0..n).all(|i| (0..i).all(|k| (m[(i, k)] - m[(k, i)]).abs() <= SYMMETRY_TOLERANCE * scale))
}

fn check_dim(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch { left, right });
    }
    Ok(())
}

/// Schatten `p`-norm; pass `f64::INFINITY` for the operator norm.
///
/// For `p < 2` singular values below `1e-13 ‖op‖_∞` are treated as zero.
pub fn schatten_norm(op: &OperatorOnH, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidSchattenExponent(p));
    }
    if p == 2.0 {
        if op.entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        return Ok(op.hs_norm());
    }
    let s = op.singular_values()?;
    let top = s.first().copied().unwrap_or(0.0);
    if p.is_infinite() {
        return Ok(top);
    }
    let cutoff = if p < 2.0 { CLAMP_RELATIVE * top } else { 0.0 };
    let kept = s.iter().filter(|&&x| x > cutoff);
    if p == 1.0 {
        return Ok(kept.sum());
    }
    Ok(kept.map(|x| x.powf(p)).sum::<f64>().powf(1.0 / p))
}

pub fn trace(op: &OperatorOnH) -> f64 {
    op.entries.diagonal().sum()
}

/// `u ⊗ v`, i.e. `f ↦ u ⟨f, v⟩`; entries `u_i v_k`.
pub fn outer_product(space: &TruncatedSpace, u: &[f64], v: &[f64]) -> Result<OperatorOnH> {
    check_dim(space.dim(), u.len())?;
    check_dim(space.dim(), v.len())?;
    let entries = DMatrix::from_fn(u.len(), v.len(), |i, k| u[i] * v[k]);
    OperatorOnH::new(space.clone(), entries)
}

/// Hilbert–Schmidt inner product `Σ a_ik b_ik`.
pub fn hs_inner(a: &OperatorOnH, b: &OperatorOnH) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    Ok(a.entries.iter().zip(b.entries.iter()).map(|(x, y)| x * y).sum())
}

/// Largest entry of `QᵀQ - I`.
pub fn orthonormality_defect(frame: &DMatrix<f64>) -> f64 {
    let gram = frame.transpose() * frame;
    let n = gram.nrows();
    (&gram - DMatrix::<f64>::identity(n, n)).amax()
}

fn check_frame(space: &TruncatedSpace, frame: &DMatrix<f64>) -> Result<()> {
    if frame.nrows() != space.dim() || frame.ncols() != space.dim() {
        return Err(Error::DimensionMismatch {
            left: space.dim(),
            right: frame.ncols(),
        });
    }
    let deviation = orthonormality_defect(frame);
    if !(deviation <= ORTHONORMAL_TOLERANCE) {
        return Err(Error::NotOrthonormal { deviation });
    }
    Ok(())
}

/// Element `E_{j,j'}` of the Hilbert–Schmidt orthonormal basis of self-adjoint
/// operators built from a frame (indices are 1-based, `j >= j'`).
#[derive(Debug, Clone, PartialEq)]
pub struct SymBasisElement {
    pub j: usize,
    pub j_prime: usize,
    pub operator: OperatorOnH,
}

fn sym_basis_unchecked(j: usize, j_prime: usize, frame: &DMatrix<f64>) -> DMatrix<f64> {
    let ej = frame.column(j - 1);
    if j == j_prime {
        ej * ej.transpose()
    } else {
        let ek = frame.column(j_prime - 1);
        (ej * ek.transpose() + ek * ej.transpose()) * std::f64::consts::FRAC_1_SQRT_2
    }
}

/// `e_j ⊗ e_j` when `j = j'`, otherwise `(e_j ⊗ e_{j'} + e_{j'} ⊗ e_j)/√2`.
/// `frame` holds the orthonormal vectors `e_1..e_d` as columns.
pub fn sym_basis(
    space: &TruncatedSpace,
    j: usize,
    j_prime: usize,
    frame: &DMatrix<f64>,
) -> Result<SymBasisElement> {
    if j_prime < 1 || j < j_prime || j > space.dim() {
        return Err(Error::InvalidBasisPair { j, j_prime });
    }
    check_frame(space, frame)?;
    Ok(SymBasisElement {
        j,
        j_prime,
        operator: OperatorOnH {
            space: space.clone(),
            entries: sym_basis_unchecked(j, j_prime, frame),
            self_adjoint: true,
        },
    })
}

/// All `(j, j')` with `d >= j >= j' >= 1`, ordered by `j` then `j'`.
pub fn sym_pairs(d: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..=d).flat_map(|j| (1..=j).map(move |jp| (j, jp)))
}

/// Coordinates `⟨A, E_{j,j'}⟩` of a self-adjoint operator, in [`sym_pairs`] order.
pub fn sym_coordinates(op: &OperatorOnH, frame: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_frame(op.space(), frame)?;
    let rotated = frame.transpose() * &op.entries * frame;
    Ok(sym_pairs(op.dim())
        .map(|(j, jp)| {
            if j == jp {
                rotated[(j - 1, j - 1)]
            } else {
                std::f64::consts::SQRT_2 * 0.5 * (rotated[(j - 1, jp - 1)] + rotated[(jp - 1, j - 1)])
            }
        })
        .collect())
}

/// Inverse of [`sym_coordinates`].
pub fn from_sym_coordinates(
    space: &TruncatedSpace,
    coords: &[f64],
    frame: &DMatrix<f64>,
) -> Result<OperatorOnH> {
    let d = space.dim();
    check_dim(d * (d + 1) / 2, coords.len())?;
    check_frame(space, frame)?;
    let mut entries = DMatrix::zeros(d, d);
    for ((j, jp), c) in sym_pairs(d).zip(coords) {
        entries += sym_basis_unchecked(j, jp, frame) * *c;
    }
    OperatorOnH::new_self_adjoint(space.clone(), entries)
}

/// Covariance operator of `√(2l+1)(F̂_l − F_l)` on self-adjoint Hilbert–Schmidt
/// operators, held in its eigenbasis `{E_{j,j'}}` where it is diagonal with
/// variance `2 λ_j λ_{j'}`.
#[derive(Debug, Clone)]
pub struct CltCovariance {
    pub ell: usize,
    pub eigenpairs: Vec<((usize, usize), f64)>,
    pub basis: Vec<SymBasisElement>,
}

pub fn clt_covariance(
    ell: usize,
    space: &TruncatedSpace,
    eigenvalues: &[f64],
    frame: &DMatrix<f64>,
) -> Result<CltCovariance> {
    check_dim(space.dim(), eigenvalues.len())?;
    if let Some((index, &value)) = eigenvalues
        .iter()
        .enumerate()
        .find(|(_, &v)| !(v >= 0.0) || !v.is_finite())
    {
        return Err(Error::NegativeEigenvalue { index, value });
    }
    check_frame(space, frame)?;
    let d = space.dim();
    let mut eigenpairs = Vec::with_capacity(d * (d + 1) / 2);
    let mut basis = Vec::with_capacity(d * (d + 1) / 2);
    for (j, jp) in sym_pairs(d) {
        eigenpairs.push(((j, jp), 2.0 * eigenvalues[j - 1] * eigenvalues[jp - 1]));
        basis.push(SymBasisElement {
            j,
            j_prime: jp,
            operator: OperatorOnH {
                space: space.clone(),
                entries: sym_basis_unchecked(j, jp, frame),
                self_adjoint: true,
            },
        });
    }
    Ok(CltCovariance {
        ell,
        eigenpairs,
        basis,
    })
}

impl CltCovariance {
    pub fn variances(&self) -> impl Iterator<Item = f64> + '_ {
        self.eigenpairs.iter().map(|(_, v)| *v)
    }

    /// Nuclear norm (the operator is nonnegative).
    pub fn trace(&self) -> f64 {
        self.variances().sum()
    }

    pub fn hs_norm_sq(&self) -> f64 {
        self.variances().map(|v| v * v).sum()
    }

    /// `S(A) = Σ 2λ_jλ_{j'} ⟨A, E⟩ E`.
    pub fn apply(&self, op: &OperatorOnH) -> Result<OperatorOnH> {
        let space = self.basis[0].operator.space().clone();
        check_dim(space.dim(), op.dim())?;
        let mut out = DMatrix::zeros(op.dim(), op.dim());
        for (e, (_, var)) in self.basis.iter().zip(&self.eigenpairs) {
            out += &e.operator.entries * (var * hs_inner(op, &e.operator)?);
        }
        OperatorOnH::new_self_adjoint(space, out)
    }
}
