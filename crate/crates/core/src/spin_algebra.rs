//! Dense complex operators on small spin-1/2 Hilbert spaces.
//!
//! Site ordering follows the usual Kronecker convention: the leftmost factor
//! is spin 1, so the basis label `|b1 b2 b3>` reads left to right and
//! `|0>` is the `+1` eigenstate of `sigma_z`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FidError, Result};

pub type C64 = Complex64;

/// Largest supported Hilbert-space dimension (four spins).
pub const MAX_DIM: usize = 16;

const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        };
        f.write_str(s)
    }
}

/// Square complex matrix whose side is a power of two.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    mat: DMatrix<C64>,
}

impl Operator {
    pub fn from_matrix(mat: DMatrix<C64>) -> Result<Self> {
        let (r, c) = mat.shape();
        if r != c {
            return Err(FidError::invalid(format!(
                "operator must be square, got {r}x{c}"
            )));
        }
        if r == 0 || !r.is_power_of_two() {
            return Err(FidError::invalid(format!(
                "operator dimension {r} is not a power of two"
            )));
        }
        Ok(Operator { mat })
    }

    /// Builds an operator from row-major entries.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(FidError::invalid(format!(
                "expected {} entries for a {dim}x{dim} operator, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Self::from_matrix(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_matrix(DMatrix::zeros(dim, dim)).expect("dimension must be a power of two")
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_matrix(DMatrix::identity(dim, dim)).expect("dimension must be a power of two")
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let mut mat = DMatrix::zeros(n, n);
        for (k, v) in values.iter().enumerate() {
            mat[(k, k)] = C64::new(*v, 0.0);
        }
        Self::from_matrix(mat)
    }

    /// `|k><k|` in the computational basis.
    pub fn basis_projector(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(FidError::invalid(format!(
                "basis index {index} out of range for dimension {dim}"
            )));
        }
        let mut op = Self::from_matrix(DMatrix::zeros(dim, dim))?;
        op.mat[(index, index)] = C64::new(1.0, 0.0);
        Ok(op)
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

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.mat[(row, col)]
    }

    pub fn dagger(&self) -> Self {
        Operator {
            mat: self.mat.adjoint(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Operator {
            mat: self.mat.map(|z| z * factor),
        }
    }

    pub fn scale_complex(&self, factor: C64) -> Self {
        Operator {
            mat: &self.mat * factor,
        }
    }

    pub fn kron(&self, rhs: &Operator) -> Self {
        Operator {
            mat: self.mat.kronecker(&rhs.mat),
        }
    }

    pub fn commutator(&self, rhs: &Operator) -> Self {
        Operator {
            mat: &self.mat * &rhs.mat - &rhs.mat * &self.mat,
        }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (i..n).all(|j| (self.mat[(i, j)] - self.mat[(j, i)].conj()).norm() <= tol))
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.mat[(i, j)].norm() <= tol))
    }

    fn check_same_dim(&self, rhs: &Operator) -> Result<()> {
        if self.dim() != rhs.dim() {
            return Err(FidError::invalid(format!(
                "dimension mismatch: {} vs {}",
                self.dim(),
                rhs.dim()
            )));
        }
        Ok(())
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        Operator {
            mat: self.mat + rhs.mat,
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        Operator {
            mat: self.mat - rhs.mat,
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator {
            mat: &self.mat * &rhs.mat,
        }
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        Operator {
            mat: self.mat * rhs.mat,
        }
    }
}

/// 2x2 Pauli matrix. The spin operator is `I_a = sigma_a / 2`.
pub fn pauli(axis: Axis) -> Operator {
    let o = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let entries = match axis {
        Axis::X => [o, one, one, o],
        Axis::Y => [o, -i, i, o],
        Axis::Z => [one, o, o, -one],
    };
    Operator::from_rows(2, &entries).expect("2x2 is valid")
}

/// Spin-1/2 operator `I_a`.
pub fn spin_half(axis: Axis) -> Operator {
    pauli(axis).scale(0.5)
}

/// Places a single-spin operator at `site` of an `n_spins` register:
/// `1 (x) ... (x) single (x) ... (x) 1`.
pub fn embed(single: &Operator, site: usize, n_spins: usize) -> Result<Operator> {
    if single.dim() != 2 {
        return Err(FidError::invalid(format!(
            "embed expects a 2x2 operator, got dimension {}",
            single.dim()
        )));
    }
    if site >= n_spins {
        return Err(FidError::invalid(format!(
            "site {site} out of range for {n_spins} spins"
        )));
    }
    if 1usize << n_spins > MAX_DIM {
        return Err(FidError::invalid(format!(
            "{n_spins} spins exceeds the supported Hilbert space (dimension {MAX_DIM})"
        )));
    }
    let id = Operator::identity(2);
    let mut out: Option<Operator> = None;
    for k in 0..n_spins {
        let factor = if k == site { single } else { &id };
        out = Some(match out {
            None => factor.clone(),
            Some(acc) => acc.kron(factor),
        });
    }
    Ok(out.expect("n_spins > site >= 0"))
}

/// Spectral decomposition `H = V diag(E) V^dagger` of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl HermitianEigen {
    pub fn new(h: &Operator) -> Result<Self> {
        let tol = HERMITIAN_TOL * h.max_abs().max(1.0);
        if !h.is_hermitian(tol) {
            return Err(FidError::invalid("operator is not Hermitian"));
        }
        let eig = h.mat.clone().symmetric_eigen();
        Ok(HermitianEigen {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        })
    }

    /// `V^dagger A V`.
    pub fn to_eigenbasis(&self, a: &Operator) -> DMatrix<C64> {
        self.vectors.adjoint() * a.matrix() * &self.vectors
    }

    pub fn propagator(&self, t: f64) -> Propagator {
        let phases = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|e| C64::from_polar(1.0, -e * t)),
        ));
        Propagator {
            op: Operator {
                mat: &self.vectors * phases * self.vectors.adjoint(),
            },
            duration: t,
        }
    }
}

/// Unitary `U = exp(-i H t)` for a time-independent Hamiltonian.
#[derive(Clone, Debug)]
pub struct Propagator {
    pub op: Operator,
    pub duration: f64,
}

impl Propagator {
    /// `U rho U^dagger`.
    pub fn conjugate(&self, rho: &Operator) -> Operator {
        Operator {
            mat: &self.op.mat * &rho.mat * self.op.mat.adjoint(),
        }
    }

    pub fn unitarity_defect(&self) -> f64 {
        let n = self.op.dim();
        (&self.op.mat * self.op.mat.adjoint() - DMatrix::<C64>::identity(n, n))
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// `exp(-i H t)` via Hermitian eigendecomposition. `H` is in rad/s.
pub fn expm_hermitian(h: &Operator, t: f64) -> Result<Propagator> {
    Ok(HermitianEigen::new(h)?.propagator(t))
}

/// A unit-trace Hermitian operator describing the spin ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
}

const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

impl DensityMatrix {
    /// Checks unit trace, Hermiticity and positive semidefiniteness.
    pub fn new(op: Operator) -> Result<Self> {
        let rho = Self::linearized(op)?;
        let min_eig = rho.eigenvalues()?.into_iter().fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOL {
            return Err(FidError::invalid(format!(
                "density matrix has negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(rho)
    }

    /// Unit-trace Hermitian operator without the positivity check.
    ///
    /// The high-temperature thermal form `1/2^n + (p/2^n) sum sigma_z` is a
    /// first-order expansion in `p` and is only positive for `|p| <= 1/n`;
    /// since every signal is linear in `p` it is still used with `|p| = 1`.
    pub fn linearized(op: Operator) -> Result<Self> {
        let tr = op.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(FidError::invalid(format!(
                "density matrix trace is {tr}, not 1"
            )));
        }
        if !op.is_hermitian(TRACE_TOL) {
            return Err(FidError::invalid("density matrix is not Hermitian"));
        }
        Ok(DensityMatrix { op })
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut v = HermitianEigen::new(&self.op)?.values;
        v.sort_by(f64::total_cmp);
        Ok(v)
    }
}

/// `Tr(rho A)`; the imaginary residue must be below `1e-10`.
pub fn expectation(rho: &DensityMatrix, a: &Operator) -> Result<f64> {
    rho.op.check_same_dim(a)?;
    let z = trace_of_product(rho.op.matrix(), a.matrix());
    if z.im.abs() > 1e-10 * a.max_abs().max(1.0) {
        return Err(FidError::invalid(format!(
            "expectation has imaginary part {:e}; observable is not Hermitian",
            z.im
        )));
    }
    Ok(z.re)
}

/// `Tr(A B)` without forming the product.
pub fn trace_of_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}
