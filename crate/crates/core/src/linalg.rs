//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Everything here is immutable after construction. Constructors validate
//! their invariants eagerly, so a `Projector` or `ObservableDecomposition`
//! that exists is known to be well-formed.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance for algebraic identities on exact inputs.
pub const EPS_ALG: f64 = 1e-10;
/// Tolerance on `|norm² - 1|` for kets.
pub const EPS_NORM: f64 = 1e-9;
/// Relative residual below which Gram-Schmidt declares linear dependence.
pub const GRAM_SCHMIDT_CUTOFF: f64 = 1e-8;

/// Residual a canonical basis vector must keep to join an orthonormal completion.
const COMPLETION_THRESHOLD: f64 = 0.1;

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn all_finite<'a>(values: impl IntoIterator<Item = &'a Complex64>) -> bool {
    values.into_iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// A vector that carries no normalization guarantee, e.g. `P|a⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct Vector(DVector<Complex64>);

impl Vector {
    pub fn new(components: Vec<Complex64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Empty("vector"));
        }
        if !all_finite(&components) {
            return Err(Error::NonFinite("vector"));
        }
        Ok(Self(DVector::from_vec(components)))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[Complex64] {
        self.0.as_slice()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Rescales to unit norm. Fails with `ZeroProjection` when the norm is
    /// at or below `cutoff`.
    pub fn normalize(&self, cutoff: f64) -> Result<Ket> {
        let norm = self.norm();
        if norm <= cutoff {
            return Err(Error::ZeroProjection);
        }
        Ok(Ket(self.0.unscale(norm)))
    }
}

/// A normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket(DVector<Complex64>);

impl Ket {
    /// Accepts amplitudes that are already normalized within [`EPS_NORM`].
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let v = Vector::new(amplitudes)?;
        let norm_sq = v.norm_sqr();
        if (norm_sq - 1.0).abs() > EPS_NORM {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self(v.0))
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        Vector::new(amplitudes)?
            .normalize(0.0)
            .map_err(|_| Error::NotNormalized { norm_sq: 0.0 })
    }

    /// Normalized ket from real amplitudes.
    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::normalized(amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Canonical basis ket `|k⟩`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::IndexOutOfRange { index: k, len: dim });
        }
        Ok(Self(DVector::from_fn(dim, |i, _| {
            if i == k {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        self.0.as_slice()
    }

    pub fn to_vector(&self) -> Vector {
        Vector(self.0.clone())
    }

    /// `|self⟩⟨self|`.
    pub fn projector(&self) -> Projector {
        let op = Operator(&self.0 * self.0.adjoint());
        Projector { op, rank: 1 }
    }
}

/// `⟨x|y⟩`, conjugate-linear in `x`.
pub fn inner(x: &Ket, y: &Ket) -> Result<Complex64> {
    check_dim(x.dim(), y.dim())?;
    Ok(x.0.iter().zip(y.0.iter()).map(|(a, b)| a.conj() * b).sum())
}

/// A square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator(DMatrix<Complex64>);

impl Operator {
    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::Empty("operator"));
        }
        for row in rows {
            check_dim(dim, row.len())?;
        }
        if !all_finite(rows.iter().flatten()) {
            return Err(Error::NonFinite("operator"));
        }
        Ok(Self(DMatrix::from_fn(dim, dim, |i, j| rows[i][j])))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn mul(&self, rhs: &Operator) -> Result<Self> {
        check_dim(self.dim(), rhs.dim())?;
        Ok(Self(&self.0 * &rhs.0))
    }

    pub fn add(&self, rhs: &Operator) -> Result<Self> {
        check_dim(self.dim(), rhs.dim())?;
        Ok(Self(&self.0 + &rhs.0))
    }

    pub fn sub(&self, rhs: &Operator) -> Result<Self> {
        check_dim(self.dim(), rhs.dim())?;
        Ok(Self(&self.0 - &rhs.0))
    }

    /// Largest entrywise modulus of `self - rhs`.
    pub fn max_abs_diff(&self, rhs: &Operator) -> Result<f64> {
        check_dim(self.dim(), rhs.dim())?;
        Ok(self
            .0
            .iter()
            .zip(rhs.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.rows() {
            let cells: Vec<String> = row
                .iter()
                .map(|z| format!("{:+.6}{:+.6}i", z.re, z.im))
                .collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// Trace of the ordered product `ops[0] · ops[1] · … · ops[n-1]`.
pub fn trace_product(ops: &[&Operator]) -> Result<Complex64> {
    let (first, rest) = ops.split_first().ok_or(Error::Empty("operator list"))?;
    let mut acc = first.0.clone();
    for op in rest {
        check_dim(first.dim(), op.dim())?;
        acc = &acc * &op.0;
    }
    Ok(acc.trace())
}

/// Matrix-vector action. The result is generally not normalized.
pub fn apply(op: &Operator, x: &Ket) -> Result<Vector> {
    check_dim(op.dim(), x.dim())?;
    Ok(Vector(&op.0 * &x.0))
}

/// Modified Gram-Schmidt with one reorthogonalization pass per vector.
fn gram_schmidt(vectors: &[DVector<Complex64>]) -> Result<Vec<DVector<Complex64>>> {
    let mut basis: Vec<DVector<Complex64>> = Vec::with_capacity(vectors.len());
    for (index, v) in vectors.iter().enumerate() {
        let original = v.norm();
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dotc(&w);
                w -= q * c;
            }
        }
        let residual = if original > 0.0 { w.norm() / original } else { 0.0 };
        if residual <= GRAM_SCHMIDT_CUTOFF {
            return Err(Error::DegenerateSpan { index, residual });
        }
        let n = w.norm();
        basis.push(w.unscale(n));
    }
    Ok(basis)
}

/// Orthonormalizes linearly independent vectors in order.
pub fn orthonormalize(vectors: &[Vector]) -> Result<Vec<Ket>> {
    let first = vectors.first().ok_or(Error::Empty("vector list"))?;
    for v in vectors {
        check_dim(first.dim(), v.dim())?;
    }
    let raw: Vec<_> = vectors.iter().map(|v| v.0.clone()).collect();
    Ok(gram_schmidt(&raw)?.into_iter().map(Ket).collect())
}

/// An orthonormal basis whose first element is `ket`, completed by
/// Gram-Schmidt over the canonical basis vectors in index order.
pub fn basis_completion(ket: &Ket) -> Vec<Ket> {
    let dim = ket.dim();
    let mut basis = vec![ket.0.normalize()];
    for k in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut w = DVector::from_fn(dim, |i, _| {
            if i == k {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        for _ in 0..2 {
            for q in &basis {
                let c = q.dotc(&w);
                w -= q * c;
            }
        }
        let n = w.norm();
        if n > COMPLETION_THRESHOLD {
            basis.push(w.unscale(n));
        }
    }
    debug_assert_eq!(basis.len(), dim);
    basis.into_iter().map(Ket).collect()
}

/// A Hermitian idempotent operator with known rank.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    op: Operator,
    rank: usize,
}

impl Projector {
    /// Orthogonal projector onto the span of `kets`.
    pub fn from_kets(kets: &[Ket]) -> Result<Self> {
        let vectors: Vec<Vector> = kets.iter().map(Ket::to_vector).collect();
        let basis = orthonormalize(&vectors)?;
        let dim = basis[0].dim();
        let mut m = DMatrix::zeros(dim, dim);
        for q in &basis {
            m += &q.0 * q.0.adjoint();
        }
        Ok(Self {
            op: Operator(m),
            rank: basis.len(),
        })
    }

    /// Projector onto a single ray, renormalizing the ket first.
    pub fn rank_one(ket: &Ket) -> Self {
        Ket(ket.0.normalize()).projector()
    }

    /// Validates an explicit matrix and infers its rank from the trace.
    pub fn from_operator(op: Operator) -> Result<Self> {
        let herm = op.max_abs_diff(&op.adjoint())?;
        if herm > EPS_ALG {
            return Err(Error::InvalidProjector(format!(
                "not Hermitian (max |P - P†| = {herm:.3e})"
            )));
        }
        let idem = op.mul(&op)?.max_abs_diff(&op)?;
        if idem > EPS_ALG {
            return Err(Error::InvalidProjector(format!(
                "not idempotent (max |P² - P| = {idem:.3e})"
            )));
        }
        let trace = op.trace();
        let rank = trace.re.round();
        if (trace - Complex64::new(rank, 0.0)).norm() > EPS_ALG {
            return Err(Error::InvalidProjector(format!(
                "trace {trace} is not an integer"
            )));
        }
        if rank < 1.0 {
            return Err(Error::InvalidProjector("zero projector".into()));
        }
        Ok(Self {
            op,
            rank: rank as usize,
        })
    }

    /// Sum of mutually orthogonal projectors.
    pub fn sum(parts: &[&Projector]) -> Result<Self> {
        let (first, rest) = parts.split_first().ok_or(Error::Empty("projector list"))?;
        let mut acc = first.op.clone();
        for p in rest {
            acc = acc.add(&p.op)?;
        }
        Self::from_operator(acc)
    }

    /// `I - P`.
    pub fn complement(&self) -> Result<Self> {
        Self::from_operator(Operator::identity(self.dim()).sub(&self.op)?)
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }
}

/// Orthogonal projector onto the span of `kets`.
pub fn projector_from_kets(kets: &[Ket]) -> Result<Projector> {
    Projector::from_kets(kets)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    /// Label only; never used numerically.
    pub eigenvalue: f64,
    pub projector: Projector,
}

/// Projective resolution of the identity labelled by distinct eigenvalues.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableDecomposition {
    dim: usize,
    branches: Vec<Branch>,
}

impl ObservableDecomposition {
    pub fn new(branches: Vec<Branch>) -> Result<Self> {
        let dim = branches
            .first()
            .ok_or(Error::Empty("decomposition"))?
            .projector
            .dim();
        for b in &branches {
            check_dim(dim, b.projector.dim())?;
            if !b.eigenvalue.is_finite() {
                return Err(Error::NonFinite("eigenvalue"));
            }
        }
        for (i, bi) in branches.iter().enumerate() {
            for (j, bj) in branches.iter().enumerate().skip(i + 1) {
                if bi.eigenvalue == bj.eigenvalue {
                    return Err(Error::InvalidDecomposition(format!(
                        "branches {i} and {j} share eigenvalue {}",
                        bi.eigenvalue
                    )));
                }
                let overlap = bi
                    .projector
                    .op
                    .mul(&bj.projector.op)?
                    .max_abs_diff(&Operator::zeros(dim))?;
                if overlap > EPS_ALG {
                    return Err(Error::InvalidDecomposition(format!(
                        "branches {i} and {j} are not orthogonal (max |P_i P_j| = {overlap:.3e})"
                    )));
                }
            }
        }
        let mut total = Operator::zeros(dim);
        for b in &branches {
            total = total.add(&b.projector.op)?;
        }
        let gap = total.max_abs_diff(&Operator::identity(dim))?;
        if gap > EPS_ALG {
            return Err(Error::InvalidDecomposition(format!(
                "projectors do not sum to the identity (max deviation {gap:.3e})"
            )));
        }
        Ok(Self { dim, branches })
    }

    /// Labels the projectors with eigenvalues 1, 2, 3, …
    pub fn from_projectors(projectors: Vec<Projector>) -> Result<Self> {
        Self::new(
            projectors
                .into_iter()
                .enumerate()
                .map(|(i, projector)| Branch {
                    eigenvalue: (i + 1) as f64,
                    projector,
                })
                .collect(),
        )
    }

    /// Nondegenerate observable with the given orthonormal eigenbasis.
    pub fn from_basis(basis: &[Ket]) -> Result<Self> {
        let projectors = basis
            .iter()
            .map(|k| projector_from_kets(std::slice::from_ref(k)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_projectors(projectors)
    }

    /// Nondegenerate observable having `ket` as the eigenvector of branch 0.
    pub fn basis_containing(ket: &Ket) -> Result<Self> {
        Self::from_basis(&basis_completion(ket))
    }

    /// Merges branches according to `blocks`, a partition of the branch
    /// indices. Block `k` gets eigenvalue label `k + 1`.
    pub fn coarse_grain(&self, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        for &i in blocks.iter().flatten() {
            let slot = seen
                .get_mut(i)
                .ok_or(Error::IndexOutOfRange { index: i, len: self.len() })?;
            if *slot {
                return Err(Error::InvalidArgument(format!("branch {i} appears twice")));
            }
            *slot = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidArgument("blocks do not cover every branch".into()));
        }
        let projectors = blocks
            .iter()
            .map(|block| {
                let parts: Vec<&Projector> =
                    block.iter().map(|&i| &self.branches[i].projector).collect();
                Projector::sum(&parts)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_projectors(projectors)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn branch(&self, index: usize) -> Result<&Branch> {
        self.branches.get(index).ok_or(Error::IndexOutOfRange {
            index,
            len: self.branches.len(),
        })
    }

    pub fn projectors(&self) -> impl Iterator<Item = &Projector> {
        self.branches.iter().map(|b| &b.projector)
    }

    /// True when both decompositions consist of the same projectors up to
    /// order and labels, compared entrywise within `tol`.
    pub fn same_projectors(&self, other: &Self, tol: f64) -> bool {
        if self.dim != other.dim || self.len() != other.len() {
            return false;
        }
        let mut used = vec![false; other.len()];
        self.projectors().all(|p| {
            let hit = other.projectors().enumerate().position(|(j, q)| {
                !used[j] && p.op.max_abs_diff(&q.op).is_ok_and(|d| d <= tol)
            });
            match hit {
                Some(j) => {
                    used[j] = true;
                    true
                }
                None => false,
            }
        })
    }
}
