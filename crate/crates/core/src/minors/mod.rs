//! Random-matrix realization of the chain for β ∈ {1, 2}: conjugate
//! `Diag(λ⁰)` by a Haar orthogonal or unitary matrix and read off the spectra
//! of the successive top-left minors.

mod eigen;

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::flow::RootVector;
use crate::sampling::{haar_orthogonal, haar_unitary, InverseTemperature, SeedSpec};

/// Largest order accepted by [`symmetric_eigenvalues`].
pub const MAX_SYMMETRIC_ORDER: usize = 512;
/// Largest order accepted by [`hermitian_eigenvalues`] (the real embedding doubles it).
pub const MAX_HERMITIAN_ORDER: usize = 256;
/// Largest initial degree accepted by [`minor_spectrum_chain`].
pub const MAX_MINOR_DEGREE: usize = 256;

/// Relative tolerance on the eigenvalue pairs of the real embedding.
const PAIRING_TOL: f64 = 1e-9;

/// Real symmetric matrix with exactly mirrored entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::InvalidArgument(format!(
                "symmetric matrix must be square and nonempty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        for i in 0..n {
            for j in 0..i {
                if m[(i, j)] != m[(j, i)] {
                    return Err(Error::InvalidArgument(format!(
                        "entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
            }
        }
        Ok(SymmetricMatrix(m))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Top-left `k × k` block.
    pub fn leading_minor(&self, k: usize) -> SymmetricMatrix {
        SymmetricMatrix(self.0.view((0, 0), (k, k)).into_owned())
    }
}

/// Complex Hermitian matrix with exact conjugate symmetry (real diagonal).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(DMatrix<Complex<f64>>);

impl HermitianMatrix {
    pub fn new(m: DMatrix<Complex<f64>>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::InvalidArgument(format!(
                "hermitian matrix must be square and nonempty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let n = m.nrows();
        for i in 0..n {
            for j in 0..=i {
                if m[(i, j)] != m[(j, i)].conj() {
                    return Err(Error::InvalidArgument(format!(
                        "entry ({i},{j}) is not the conjugate of ({j},{i})"
                    )));
                }
            }
        }
        Ok(HermitianMatrix(m))
    }

    pub fn order(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex<f64>> {
        &self.0
    }

    pub fn leading_minor(&self, k: usize) -> HermitianMatrix {
        HermitianMatrix(self.0.view((0, 0), (k, k)).into_owned())
    }
}

/// Ascending eigenvalues.
pub fn symmetric_eigenvalues(m: &SymmetricMatrix) -> Result<Vec<f64>> {
    let n = m.order();
    if n > MAX_SYMMETRIC_ORDER {
        return Err(Error::InvalidParameter(format!(
            "order {n} exceeds {MAX_SYMMETRIC_ORDER}"
        )));
    }
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = m.0[(i, j)];
        }
    }
    eigen::symmetric_eigenvalues_dense(a, n)
}

/// Ascending eigenvalues of a Hermitian matrix through the real symmetric
/// embedding `[[Re, −Im], [Im, Re]]`, whose spectrum repeats each eigenvalue
/// twice.
pub fn hermitian_eigenvalues(m: &HermitianMatrix) -> Result<Vec<f64>> {
    let n = m.order();
    if n > MAX_HERMITIAN_ORDER {
        return Err(Error::InvalidParameter(format!(
            "order {n} exceeds {MAX_HERMITIAN_ORDER}"
        )));
    }
    let size = 2 * n;
    let mut a = vec![0.0; size * size];
    let mut norm2 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let z = m.0[(i, j)];
            norm2 += z.norm_sqr();
            a[i * size + j] = z.re;
            a[(i + n) * size + (j + n)] = z.re;
            a[(i + n) * size + j] = z.im;
            a[i * size + (j + n)] = -z.im;
        }
    }
    let doubled = eigen::symmetric_eigenvalues_dense(a, size)?;
    let tol = PAIRING_TOL * norm2.sqrt().max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(n);
    for pair in doubled.chunks_exact(2) {
        if (pair[1] - pair[0]).abs() > tol {
            return Err(Error::NumericDegeneracy(format!(
                "embedded eigenvalues {} and {} do not pair up",
                pair[0], pair[1]
            )));
        }
        out.push(pair[0]);
    }
    Ok(out)
}

/// Symmetry class of the conjugating Haar matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ensemble {
    /// β = 1, real orthogonal conjugation.
    Orthogonal,
    /// β = 2, complex unitary conjugation.
    Unitary,
}

impl Ensemble {
    pub fn from_beta(beta: InverseTemperature) -> Result<Self> {
        match beta {
            InverseTemperature::Finite(1.0) => Ok(Ensemble::Orthogonal),
            InverseTemperature::Finite(2.0) => Ok(Ensemble::Unitary),
            other => Err(Error::InvalidParameter(format!(
                "matrix minors exist only for beta 1 or 2, got {other}"
            ))),
        }
    }

    pub fn beta(&self) -> InverseTemperature {
        match self {
            Ensemble::Orthogonal => InverseTemperature::Finite(1.0),
            Ensemble::Unitary => InverseTemperature::Finite(2.0),
        }
    }
}

/// `Qᵀ Diag(λ) Q`, formed entrywise on the upper triangle and mirrored.
pub fn conjugate_real(lambda: &[f64], q: &DMatrix<f64>) -> SymmetricMatrix {
    let n = lambda.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let s: f64 = (0..n).map(|k| q[(k, i)] * lambda[k] * q[(k, j)]).sum();
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
    SymmetricMatrix(m)
}

/// `U* Diag(λ) U`, formed on the upper triangle and mirrored with conjugation.
pub fn conjugate_complex(lambda: &[f64], u: &DMatrix<Complex<f64>>) -> HermitianMatrix {
    let n = lambda.len();
    let mut m = DMatrix::<Complex<f64>>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = Complex::new((0..n).map(|k| lambda[k] * u[(k, i)].norm_sqr()).sum(), 0.0);
        for j in i + 1..n {
            let s: Complex<f64> = (0..n).map(|k| u[(k, i)].conj() * lambda[k] * u[(k, j)]).sum();
            m[(i, j)] = s;
            m[(j, i)] = s.conj();
        }
    }
    HermitianMatrix(m)
}

/// Spectra of the top-left `(n − m) × (n − m)` minors of `U* Diag(λ⁰) U`,
/// `m = 0..n−1`, with `U` Haar on O(n) (β = 1) or U(n) (β = 2).
pub fn minor_spectrum_chain(lambda0: &RootVector, beta: InverseTemperature, seed: SeedSpec) -> Result<Vec<RootVector>> {
    let ensemble = Ensemble::from_beta(beta)?;
    let n = lambda0.degree();
    if n == 0 || n > MAX_MINOR_DEGREE {
        return Err(Error::InvalidParameter(format!(
            "minor chain degree {n} outside 1..={MAX_MINOR_DEGREE}"
        )));
    }
    let lambda = lambda0.as_slice();
    if n == 1 {
        return Ok(vec![lambda0.clone()]);
    }
    let mut rng = seed.stream();
    let mut out = Vec::with_capacity(n);
    match ensemble {
        Ensemble::Orthogonal => {
            let q = haar_orthogonal(n, &mut rng)?;
            let m = conjugate_real(lambda, &q);
            for k in (1..=n).rev() {
                out.push(RootVector::new(symmetric_eigenvalues(&m.leading_minor(k))?)?);
            }
        }
        Ensemble::Unitary => {
            let u = haar_unitary(n, &mut rng)?;
            let m = conjugate_complex(lambda, &u);
            for k in (1..=n).rev() {
                out.push(RootVector::new(hermitian_eigenvalues(&m.leading_minor(k))?)?);
            }
        }
    }
    Ok(out)
}
