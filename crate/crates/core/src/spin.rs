//! Dicke basis and collective spin operators.
//!
//! The symmetric sector of N spin-1/2 particles is the spin `s = N/2` irrep.
//! Basis index `k ∈ 0..=N` maps to `m = k − N/2`, ascending, so `k = 0` is the
//! uncharged level `|N/2, −N/2⟩`. Every other module relies on this ordering.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result, C64};

/// Dense complex matrix over the Dicke basis.
pub type Operator = DMatrix<C64>;

/// Human-readable statement of the basis convention, written into file headers.
pub const BASIS_ORDERING: &str = "dicke |N/2,m>, index k -> m = k - N/2, ascending m";

const NORM_TOL: f64 = 1e-12;

/// `⟨m+1|Ĵ₊|m⟩ = √(s(s+1) − m(m+1))` for `k = 0..N`, i.e. the coupling between
/// basis indices `k` and `k + 1`.
pub fn ladder_coefficients(n_atoms: usize) -> Vec<f64> {
    let s = n_atoms as f64 / 2.0;
    (0..n_atoms)
        .map(|k| {
            let m = k as f64 - s;
            (s * (s + 1.0) - m * (m + 1.0)).sqrt()
        })
        .collect()
}

/// Magnetic quantum numbers `m_k = k − N/2`.
pub fn m_values(n_atoms: usize) -> Vec<f64> {
    let s = n_atoms as f64 / 2.0;
    (0..=n_atoms).map(|k| k as f64 - s).collect()
}

fn check_atoms(n_atoms: usize) -> Result<()> {
    if n_atoms == 0 {
        return Err(Error::invalid("n_atoms", "need at least one atom"));
    }
    Ok(())
}

pub fn build_jz(n_atoms: usize) -> Result<Operator> {
    check_atoms(n_atoms)?;
    let m = m_values(n_atoms);
    Ok(Operator::from_diagonal(&DVector::from_iterator(
        m.len(),
        m.iter().map(|&v| C64::new(v, 0.0)),
    )))
}

/// `Ĵx = (Ĵ₊ + Ĵ₋)/2`, real symmetric tridiagonal.
pub fn build_jx(n_atoms: usize) -> Result<Operator> {
    check_atoms(n_atoms)?;
    let dim = n_atoms + 1;
    let mut jx = Operator::zeros(dim, dim);
    for (k, c) in ladder_coefficients(n_atoms).into_iter().enumerate() {
        jx[(k + 1, k)] = C64::new(c / 2.0, 0.0);
        jx[(k, k + 1)] = C64::new(c / 2.0, 0.0);
    }
    Ok(jx)
}

/// `Ĵy = (Ĵ₊ − Ĵ₋)/(2i)`, purely imaginary off-diagonals.
pub fn build_jy(n_atoms: usize) -> Result<Operator> {
    check_atoms(n_atoms)?;
    let dim = n_atoms + 1;
    let mut jy = Operator::zeros(dim, dim);
    for (k, c) in ladder_coefficients(n_atoms).into_iter().enumerate() {
        // Ĵ₊ fills (k+1, k), Ĵ₋ fills (k, k+1).
        jy[(k + 1, k)] = C64::new(0.0, -c / 2.0);
        jy[(k, k + 1)] = C64::new(0.0, c / 2.0);
    }
    Ok(jy)
}

/// `Ĵz²`, built directly from `m²` rather than by matrix product.
pub fn build_jz2(n_atoms: usize) -> Result<Operator> {
    check_atoms(n_atoms)?;
    let m = m_values(n_atoms);
    Ok(Operator::from_diagonal(&DVector::from_iterator(
        m.len(),
        m.iter().map(|&v| C64::new(v * v, 0.0)),
    )))
}

/// The `(N+1)`-dimensional Dicke space with its collective operators prebuilt.
///
/// Immutable after construction; cheap to share across sweep workers.
#[derive(Clone, Debug)]
pub struct SpinSpace {
    n_atoms: usize,
    jx: Operator,
    jy: Operator,
    jz: Operator,
    jz2: Operator,
}

impl SpinSpace {
    pub fn new(n_atoms: usize) -> Result<Self> {
        Ok(Self {
            n_atoms,
            jx: build_jx(n_atoms)?,
            jy: build_jy(n_atoms)?,
            jz: build_jz(n_atoms)?,
            jz2: build_jz2(n_atoms)?,
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn dim(&self) -> usize {
        self.n_atoms + 1
    }

    /// Total spin `s = N/2`.
    pub fn spin(&self) -> f64 {
        self.n_atoms as f64 / 2.0
    }

    pub fn m(&self, k: usize) -> f64 {
        k as f64 - self.spin()
    }

    pub fn m_values(&self) -> Vec<f64> {
        m_values(self.n_atoms)
    }

    pub fn jx(&self) -> &Operator {
        &self.jx
    }

    pub fn jy(&self) -> &Operator {
        &self.jy
    }

    pub fn jz(&self) -> &Operator {
        &self.jz
    }

    pub fn jz2(&self) -> &Operator {
        &self.jz2
    }

    pub fn identity(&self) -> Operator {
        Operator::identity(self.dim(), self.dim())
    }
}

/// Normalized pure state over the Dicke basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(DVector<C64>);

impl StateVector {
    /// Wraps amplitudes, rejecting anything whose norm is off by more than 1e-12.
    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm, tol: NORM_TOL });
        }
        Ok(Self(amplitudes))
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotNormalized { norm, tol: NORM_TOL });
        }
        Ok(Self(amplitudes / C64::new(norm, 0.0)))
    }

    /// Propagated states carry floating-point norm drift; callers check it separately.
    pub(crate) fn from_evolved(amplitudes: DVector<C64>) -> Self {
        Self(amplitudes)
    }

    /// Basis state `e_k`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::invalid("k", format!("index {k} outside dimension {dim}")));
        }
        let mut v = DVector::zeros(dim);
        v[k] = C64::new(1.0, 0.0);
        Ok(Self(v))
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// `|c_k|²` in basis order.
    pub fn populations(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.norm_sqr()).collect()
    }

    /// `⟨ψ|A|ψ⟩`.
    pub fn expectation(&self, op: &Operator) -> C64 {
        self.0.dotc(&(op * &self.0))
    }
}

/// The uncharged battery `|N/2, −N/2⟩`.
pub fn uncharged_state(space: &SpinSpace) -> StateVector {
    StateVector::basis(space.dim(), 0).expect("index 0 is always inside the space")
}

/// `AB − BA`.
pub fn commutator(a: &Operator, b: &Operator) -> Operator {
    a * b - b * a
}

/// Largest element magnitude of `A − A†`.
pub fn hermiticity_defect(a: &Operator) -> f64 {
    (a - a.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Largest element magnitude of a matrix.
pub fn max_abs(a: &Operator) -> f64 {
    a.iter().map(|c| c.norm()).fold(0.0, f64::max)
}
