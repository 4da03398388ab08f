//! Truncated Fock-space linear algebra.
//!
//! Operators and density matrices are dense complex matrices on the basis
//! `|0>, ..., |N-1>` (or on a product of two such spaces). For joint spaces
//! the ordering is always `oscillator (a) ⊗ ion (b)`, i.e. the basis index of
//! `|n_a>|n_b>` is `n_a * n_b_levels + n_b`.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex;
#[allow(unused_imports)] // shadowed by inherent f64 methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Maximum elementwise `|rho - rho^†|` accepted for a density matrix.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Maximum `|tr rho - 1|` accepted for a density matrix.
pub const TRACE_TOL: f64 = 1e-9;
/// Most negative eigenvalue accepted for a density matrix.
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Smallest truncation handed out by [`truncation_for`].
pub const MIN_LEVELS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    mat: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch { expected: mat.nrows(), found: mat.ncols() });
        }
        if mat.nrows() < MIN_LEVELS {
            return Err(Error::InvalidParameter { name: "dim", reason: "operators need at least 2 levels" });
        }
        Ok(Self { mat })
    }

    pub fn identity(n_levels: usize) -> Result<Self> {
        Self::from_matrix(DMatrix::identity(n_levels, n_levels))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self { mat: self.mat.adjoint() }
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { mat: &self.mat * factor }
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self { mat: &self.mat * &other.mat - &other.mat * &self.mat })
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        hermiticity_error(&self.mat) <= tol
    }
}

impl Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator { mat: &self.mat * &rhs.mat }
    }
}

impl Add for &Operator {
    type Output = Operator;

    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator { mat: &self.mat + &rhs.mat }
    }
}

impl Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        Operator { mat: &self.mat - &rhs.mat }
    }
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite
/// (all to the module tolerances).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn from_matrix(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch { expected: mat.nrows(), found: mat.ncols() });
        }
        if mat.nrows() < MIN_LEVELS {
            return Err(Error::InvalidParameter { name: "dim", reason: "density matrices need at least 2 levels" });
        }
        let herm = hermiticity_error(&mat);
        if herm > HERMITICITY_TOL {
            return Err(Error::InvalidDensityMatrix { reason: "not Hermitian", deviation: herm });
        }
        let trace_err = (mat.trace() - C64::new(1.0, 0.0)).norm();
        if trace_err > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix { reason: "trace differs from 1", deviation: trace_err });
        }
        let rho = Self { mat };
        let min_eig = rho.min_eigenvalue();
        if min_eig < -POSITIVITY_TOL {
            return Err(Error::InvalidDensityMatrix { reason: "negative eigenvalue", deviation: min_eig });
        }
        Ok(rho)
    }

    /// Wraps a matrix produced by the integrators. Invariants are monitored by
    /// the caller, not enforced here.
    pub(crate) fn from_matrix_unchecked(mat: DMatrix<C64>) -> Self {
        Self { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn trace_error(&self) -> f64 {
        (self.mat.trace() - C64::new(1.0, 0.0)).norm()
    }

    /// Maximum elementwise `|rho - rho^†|`.
    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.mat)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Diagonal of the matrix in the Fock basis.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.mat[(n, n)].re).collect()
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &Self) -> Self {
        Self { mat: self.mat.kronecker(&other.mat) }
    }

    /// Reduced state of the first factor of an `n_a ⊗ n_b` joint space.
    pub fn partial_trace_b(&self, n_a: usize, n_b: usize) -> Result<Self> {
        check_dim(n_a * n_b, self.dim())?;
        let mat = DMatrix::from_fn(n_a, n_a, |i, j| {
            (0..n_b).map(|k| self.mat[(i * n_b + k, j * n_b + k)]).sum()
        });
        Ok(Self { mat })
    }

    /// Reduced state of the second factor of an `n_a ⊗ n_b` joint space.
    pub fn partial_trace_a(&self, n_a: usize, n_b: usize) -> Result<Self> {
        check_dim(n_a * n_b, self.dim())?;
        let mat = DMatrix::from_fn(n_b, n_b, |i, j| {
            (0..n_a).map(|k| self.mat[(k * n_b + i, k * n_b + j)]).sum()
        });
        Ok(Self { mat })
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        let diff = &self.mat - &other.mat;
        let herm = (&diff + diff.adjoint()) * C64::new(0.5, 0.0);
        Ok(0.5 * herm.symmetric_eigenvalues().iter().map(|e| e.abs()).sum::<f64>())
    }
}

/// Thermal tail bound for a truncated Fock space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FockTruncation {
    pub n_levels: usize,
    pub tail_mass_bound: f64,
}

impl FockTruncation {
    /// Smallest truncation keeping the thermal tail of `nbar` below the bound.
    pub fn for_thermal(nbar: f64, tail_mass_bound: f64) -> Result<Self> {
        Ok(Self { n_levels: truncation_for(nbar, tail_mass_bound)?, tail_mass_bound })
    }
}

/// Annihilation operator, `<m|a|n> = sqrt(n) δ_{m,n-1}`.
pub fn destroy(n_levels: usize) -> Result<Operator> {
    if n_levels < MIN_LEVELS {
        return Err(Error::InvalidParameter { name: "n_levels", reason: "must be at least 2" });
    }
    let mut mat = DMatrix::zeros(n_levels, n_levels);
    for n in 1..n_levels {
        mat[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(Operator { mat })
}

pub fn create(n_levels: usize) -> Result<Operator> {
    Ok(destroy(n_levels)?.adjoint())
}

/// `a^† a = diag(0, 1, ..., N-1)`.
pub fn number(n_levels: usize) -> Result<Operator> {
    if n_levels < MIN_LEVELS {
        return Err(Error::InvalidParameter { name: "n_levels", reason: "must be at least 2" });
    }
    let mut mat = DMatrix::zeros(n_levels, n_levels);
    for n in 0..n_levels {
        mat[(n, n)] = C64::new(n as f64, 0.0);
    }
    Ok(Operator { mat })
}

/// Kronecker product `A ⊗ B`.
pub fn tensor(a: &Operator, b: &Operator) -> Operator {
    Operator { mat: a.mat.kronecker(&b.mat) }
}

/// Normalized geometric weights `p_n ∝ (nbar / (1 + nbar))^n` over `n_levels`.
pub fn thermal_populations(n_levels: usize, nbar: f64) -> Result<Vec<f64>> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(Error::InvalidParameter { name: "nbar", reason: "must be finite and non-negative" });
    }
    if n_levels == 0 {
        return Err(Error::InvalidParameter { name: "n_levels", reason: "must be positive" });
    }
    let ratio = nbar / (1.0 + nbar);
    let mut probs = Vec::with_capacity(n_levels);
    let mut w = 1.0;
    for _ in 0..n_levels {
        probs.push(w);
        w *= ratio;
    }
    let norm: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= norm);
    Ok(probs)
}

pub fn thermal_state(n_levels: usize, nbar: f64) -> Result<DensityMatrix> {
    if n_levels < MIN_LEVELS {
        return Err(Error::InvalidParameter { name: "n_levels", reason: "must be at least 2" });
    }
    let probs = thermal_populations(n_levels, nbar)?;
    let mut mat = DMatrix::zeros(n_levels, n_levels);
    for (n, p) in probs.into_iter().enumerate() {
        mat[(n, n)] = C64::new(p, 0.0);
    }
    Ok(DensityMatrix { mat })
}

/// `|n><n|`.
pub fn fock_state(n_levels: usize, n: usize) -> Result<DensityMatrix> {
    if n_levels < MIN_LEVELS {
        return Err(Error::InvalidParameter { name: "n_levels", reason: "must be at least 2" });
    }
    if n >= n_levels {
        return Err(Error::LevelOutOfRange { index: n, n_levels });
    }
    let mut mat = DMatrix::zeros(n_levels, n_levels);
    mat[(n, n)] = C64::new(1.0, 0.0);
    Ok(DensityMatrix { mat })
}

/// `tr(A ρ)`.
pub fn expectation(op: &Operator, rho: &DensityMatrix) -> Result<C64> {
    check_dim(op.dim(), rho.dim())?;
    let (a, r) = (&op.mat, &rho.mat);
    let n = op.dim();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * r[(k, i)];
        }
    }
    Ok(acc)
}

/// Lindblad dissipator `D[O]ρ = O ρ O^† - (O^† O ρ + ρ O^† O) / 2`.
pub fn dissipator(op: &Operator, rho: &DensityMatrix) -> Result<DMatrix<C64>> {
    dissipator_matrix(op, rho.matrix())
}

/// [`dissipator`] on an arbitrary square matrix.
pub fn dissipator_matrix(op: &Operator, rho: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    check_dim(op.dim(), rho.nrows())?;
    let o = &op.mat;
    let od = o.adjoint();
    let odo = &od * o;
    let half = C64::new(0.5, 0.0);
    Ok(o * rho * &od - (&odo * rho + rho * &odo) * half)
}

/// Smallest `N >= 2` for which a thermal state of mean `nbar` has at most
/// `tail_mass_bound` probability on levels `>= N`.
///
/// The untruncated tail mass is `(nbar / (1 + nbar))^N`.
pub fn truncation_for(nbar: f64, tail_mass_bound: f64) -> Result<usize> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(Error::InvalidParameter { name: "nbar", reason: "must be finite and non-negative" });
    }
    if !(tail_mass_bound > 0.0 && tail_mass_bound < 1.0) {
        return Err(Error::InvalidParameter { name: "tail_mass_bound", reason: "must lie in (0, 1)" });
    }
    if nbar == 0.0 {
        return Ok(MIN_LEVELS);
    }
    let ratio = nbar / (1.0 + nbar);
    let estimate = (tail_mass_bound.ln() / ratio.ln()).ceil();
    let mut n = if estimate.is_finite() && estimate > 1.0 { estimate as usize } else { 1 };
    // correct the log estimate against the exact power
    while n > 1 && ratio.powi(n as i32 - 1) <= tail_mass_bound {
        n -= 1;
    }
    while ratio.powi(n as i32) > tail_mass_bound {
        n += 1;
    }
    Ok(n.max(MIN_LEVELS))
}

pub(crate) fn hermiticity_error(mat: &DMatrix<C64>) -> f64 {
    let n = mat.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
