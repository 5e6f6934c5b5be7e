//! Formed vector spaces over `F_q`, the semilinear Frobenius `Φ`, and the
//! subspace calculus over the working field `GF(q^K)`.
//!
//! A [`FormedSpace`] has a standard basis `e_1, …, e_m, f_1, …, f_m` (plus an
//! anisotropic vector `v` in the odd orthogonal case). Its Gram matrix
//! satisfies `⟨e_i, f_j⟩ = δ_ij`. Frobenius acts on row vectors by
//! `x ↦ frob(x) · P`. Here `frob` is the entrywise `q`-power and `P` is a fixed
//! matrix: the identity in the split cases. In the non-split orthogonal case
//! `P` swaps `e_m ↔ f_m`.
//!
//! "Points over `GF(q^k)`" means subspaces `U` with `Φ^k(U) = U`. When the
//! working degree `K` equals `k` this is every subspace. The non-split twist
//! only becomes a Galois descent datum over an even-degree working field, so
//! that case may carry `K = 2k`. See [`FormedSpace::level_ok`].
//!
//! [`Subspace`] values are stored in reduced row-echelon form, so equality and
//! hashing are plain matrix comparisons.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::{Code, FieldCtx, GfError, Modulus};
use crate::linalg::{self, Mat};

/// The form carried by a [`FormedSpace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum FormKind {
    Symplectic,
    SymmetricEvenSplit,
    SymmetricEvenNonsplit,
    SymmetricOdd,
    None,
}

impl FormKind {
    pub fn is_formed(self) -> bool {
        self != FormKind::None
    }
    pub fn is_symmetric(self) -> bool {
        matches!(
            self,
            FormKind::SymmetricEvenSplit | FormKind::SymmetricEvenNonsplit | FormKind::SymmetricOdd
        )
    }
}

impl fmt::Display for FormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FormKind::Symplectic => "symplectic",
            FormKind::SymmetricEvenSplit => "symmetric-even-split",
            FormKind::SymmetricEvenNonsplit => "symmetric-even-nonsplit",
            FormKind::SymmetricOdd => "symmetric-odd",
            FormKind::None => "none",
        };
        f.write_str(s)
    }
}

/// Errors of the subspace calculus.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpaceError {
    #[error("dimension {dim} is incompatible with a {kind} space")]
    Parity { kind: FormKind, dim: usize },
    #[error("the non-split twist needs an even working degree (got k={0})")]
    NonsplitOddDegree(u32),
    #[error("the operation needs a formed space")]
    Formless,
    #[error("subspaces live in different ambient spaces")]
    AmbientMismatch,
    #[error("Gram matrix is degenerate")]
    Degenerate,
    #[error("Gram matrix does not have the symmetry required by {0}")]
    GramSymmetry(FormKind),
    #[error("Frobenius matrix is not compatible with the form")]
    PhiIncompatible,
    #[error("Frobenius matrix has no finite order compatible with the working field")]
    PhiOrder,
    #[error("enumeration budget of {0} candidates exceeded")]
    Budget(u64),
    #[error("level k={k} does not divide into the working degree {working}")]
    Level { k: u32, working: u32 },
    #[error("malformed subspace data: {0}")]
    Malformed(String),
    #[error(transparent)]
    Field(#[from] GfError),
}

/// An `F_q`-rational formed space, base-changed to the working field.
pub struct FormedSpace {
    ctx: Arc<FieldCtx>,
    kind: FormKind,
    dim: usize,
    gram: Mat,
    phi: Mat,
    phi_order: u32,
    rational: Mat,
    rational_gram: Mat,
    phi_is_identity: bool,
}

impl fmt::Debug for FormedSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FormedSpace")
            .field("kind", &self.kind)
            .field("dim", &self.dim)
            .field("q", &self.ctx.q())
            .field("k", &self.ctx.k())
            .finish()
    }
}

impl FormedSpace {
    /// Builds the standard space of the given kind and dimension.
    pub fn build(ctx: &Arc<FieldCtx>, kind: FormKind, dim: usize) -> Result<Arc<Self>, SpaceError> {
        let ok = match kind {
            FormKind::Symplectic | FormKind::SymmetricEvenSplit => dim.is_multiple_of(2),
            FormKind::SymmetricEvenNonsplit => dim.is_multiple_of(2) && dim >= 2,
            FormKind::SymmetricOdd => dim % 2 == 1,
            FormKind::None => true,
        };
        if !ok {
            return Err(SpaceError::Parity { kind, dim });
        }
        if kind == FormKind::SymmetricEvenNonsplit && ctx.k() % 2 == 1 {
            return Err(SpaceError::NonsplitOddDegree(ctx.k()));
        }
        let f = ctx.as_ref();
        let m = dim / 2;
        let mut gram = Mat::zeros(dim, dim);
        match kind {
            FormKind::Symplectic => {
                for i in 0..m {
                    gram.set(i, m + i, 1);
                    gram.set(m + i, i, f.neg(1));
                }
            }
            FormKind::SymmetricEvenSplit | FormKind::SymmetricEvenNonsplit => {
                for i in 0..m {
                    gram.set(i, m + i, 1);
                    gram.set(m + i, i, 1);
                }
            }
            FormKind::SymmetricOdd => {
                for i in 0..m {
                    gram.set(i, m + i, 1);
                    gram.set(m + i, i, 1);
                }
                gram.set(dim - 1, dim - 1, 1);
            }
            FormKind::None => {}
        }
        let mut phi = Mat::identity(dim);
        if kind == FormKind::SymmetricEvenNonsplit {
            let (e, fm) = (m - 1, 2 * m - 1);
            phi.set(e, e, 0);
            phi.set(fm, fm, 0);
            phi.set(e, fm, 1);
            phi.set(fm, e, 1);
        }
        Self::assemble(ctx, kind, gram, phi)
    }

    /// Builds a space from an explicit Gram matrix over `GF(q)` and a
    /// Frobenius matrix `P` (so `Φ(x) = frob(x) · P`).
    ///
    /// This is the entry point for forms induced from lattices.
    pub fn from_parts(
        ctx: &Arc<FieldCtx>,
        kind: FormKind,
        gram: Mat,
        phi: Mat,
    ) -> Result<Arc<Self>, SpaceError> {
        let dim = gram.rows;
        let f = ctx.as_ref();
        if gram.cols != dim || phi.rows != dim || phi.cols != dim {
            return Err(SpaceError::Malformed("matrix shapes".into()));
        }
        if kind.is_formed() {
            if dim > 0 && linalg::rank(f, &gram) != dim {
                return Err(SpaceError::Degenerate);
            }
            for i in 0..dim {
                for j in 0..dim {
                    let a = gram.get(i, j);
                    let b = gram.get(j, i);
                    let good = match kind {
                        FormKind::Symplectic => a == f.neg(b) && (i != j || a == 0),
                        _ => a == b,
                    };
                    if !good {
                        return Err(SpaceError::GramSymmetry(kind));
                    }
                }
            }
            let parity_ok = match kind {
                FormKind::Symplectic | FormKind::SymmetricEvenSplit | FormKind::SymmetricEvenNonsplit => {
                    dim.is_multiple_of(2)
                }
                FormKind::SymmetricOdd => dim % 2 == 1,
                FormKind::None => true,
            };
            if !parity_ok {
                return Err(SpaceError::Parity { kind, dim });
            }
        } else if gram.data.iter().any(|&x| x != 0) {
            return Err(SpaceError::Malformed("formless space with non-zero Gram".into()));
        }
        Self::assemble(ctx, kind, gram, phi)
    }

    fn assemble(ctx: &Arc<FieldCtx>, kind: FormKind, gram: Mat, phi: Mat) -> Result<Arc<Self>, SpaceError> {
        let f = ctx.as_ref();
        let dim = gram.rows;
        if linalg::inverse(f, &phi).is_none() && dim > 0 {
            return Err(SpaceError::PhiIncompatible);
        }
        // Compatibility: P G Pᵀ = frob(G).
        let lhs = linalg::mul(f, &linalg::mul(f, &phi, &gram), &phi.transpose());
        if lhs != gram.map(|x| f.frob(x)) {
            return Err(SpaceError::PhiIncompatible);
        }
        // Order of Φ: smallest j with k | j and M_j = I, M_{j+1} = frob(M_j) P.
        let mut mj = phi.clone();
        let mut order = 0;
        for j in 1..=64u32 {
            if j % ctx.k() == 0 && mj == Mat::identity(dim) {
                order = j;
                break;
            }
            mj = linalg::mul(f, &mj.map(|x| f.frob(x)), &phi);
        }
        if order == 0 {
            return Err(SpaceError::PhiOrder);
        }
        let mut sp = FormedSpace {
            ctx: Arc::clone(ctx),
            kind,
            dim,
            gram,
            phi,
            phi_order: order,
            rational: Mat::zeros(0, dim),
            rational_gram: Mat::zeros(0, 0),
            phi_is_identity: false,
        };
        sp.phi_is_identity = sp.phi == Mat::identity(dim);
        sp.rational = sp.compute_rational_basis()?;
        sp.rational_gram = linalg::mul(
            f,
            &linalg::mul(f, &sp.rational, &sp.gram),
            &sp.rational.transpose(),
        );
        Ok(Arc::new(sp))
    }

    /// A basis of the `Φ`-fixed vectors obtained from traces
    /// `Σ_{i<order} Φ^i(c·e_j)`; by Galois descent it has `dim` elements.
    fn compute_rational_basis(&self) -> Result<Mat, SpaceError> {
        let f = self.ctx.as_ref();
        let mut basis = Mat::zeros(0, self.dim);
        'outer: for j in 0..self.dim {
            for c in 1..f.size() as Code {
                let mut v = vec![0; self.dim];
                v[j] = c;
                let mut acc = vec![0; self.dim];
                let mut cur = v;
                for _ in 0..self.phi_order {
                    for (a, &b) in acc.iter_mut().zip(&cur) {
                        *a = f.add(*a, b);
                    }
                    cur = self.phi_vec(&cur);
                }
                if acc.iter().all(|&x| x == 0) {
                    continue;
                }
                let cand = basis.vstack(&Mat::from_rows(self.dim, &[acc.clone()]));
                if linalg::rank(f, &cand) == cand.rows {
                    basis = cand;
                    if basis.rows == self.dim {
                        break 'outer;
                    }
                    continue 'outer;
                }
            }
        }
        if basis.rows != self.dim {
            return Err(SpaceError::PhiOrder);
        }
        Ok(basis)
    }

    pub fn ctx(&self) -> &Arc<FieldCtx> {
        &self.ctx
    }
    pub fn kind(&self) -> FormKind {
        self.kind
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn gram(&self) -> &Mat {
        &self.gram
    }
    pub fn phi_matrix(&self) -> &Mat {
        &self.phi
    }
    /// Smallest `j` with `Φ^j = id` on the working field.
    pub fn phi_order(&self) -> u32 {
        self.phi_order
    }
    /// Number of hyperbolic pairs in the standard basis.
    pub fn pairs(&self) -> usize {
        self.dim / 2
    }
    /// Rows form an `F_q`-basis of the `Φ`-fixed vectors.
    pub fn rational_basis(&self) -> &Mat {
        &self.rational
    }
    /// Gram matrix of the form on [`Self::rational_basis`] (entries in `F_q`).
    pub fn rational_gram(&self) -> &Mat {
        &self.rational_gram
    }

    /// Serializable description of this space (see [`SubspaceFile`]).
    pub fn descriptor(&self) -> SpaceDescriptor {
        let f = self.ctx.as_ref();
        SpaceDescriptor { kind: self.kind, dim: self.dim, p: f.p(), e: f.e(), modulus: f.modulus().to_vec() }
    }

    /// The form `x · G · yᵀ`.
    pub fn form(&self, x: &[Code], y: &[Code]) -> Code {
        linalg::pair(&self.ctx, x, &self.gram, y)
    }

    /// `Φ` on a row vector.
    pub fn phi_vec(&self, x: &[Code]) -> Vec<Code> {
        let f = self.ctx.as_ref();
        let fx: Vec<Code> = x.iter().map(|&a| f.frob(a)).collect();
        linalg::vec_mul(f, &fx, &self.phi)
    }

    /// Whether subspaces fixed by `Φ^k` are meaningful "points over
    /// `GF(q^k)`" in this working field: `Φ^{order}` must be trivial and the
    /// level must divide it.
    pub fn level_ok(&self, k: u32) -> Result<(), SpaceError> {
        if k == 0 || !self.phi_order.is_multiple_of(k) {
            return Err(SpaceError::Level { k, working: self.phi_order });
        }
        Ok(())
    }

    /// The standard basis vector with index `i` (0-based).
    pub fn basis_vec(&self, i: usize) -> Vec<Code> {
        let mut v = vec![0; self.dim];
        v[i] = 1;
        v
    }
}

/// A subspace of a [`FormedSpace`] over the working field, in canonical
/// reduced row-echelon form.
#[derive(Clone)]
pub struct Subspace {
    space: Arc<FormedSpace>,
    dim: usize,
    rows: Vec<Code>,
}

impl PartialEq for Subspace {
    fn eq(&self, o: &Self) -> bool {
        Arc::ptr_eq(&self.space, &o.space) && self.dim == o.dim && self.rows == o.rows
    }
}
impl Eq for Subspace {}

impl Hash for Subspace {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.dim.hash(state);
        self.rows.hash(state);
    }
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.space.dim;
        let rows: Vec<&[Code]> = (0..self.dim).map(|i| &self.rows[i * n..(i + 1) * n]).collect();
        write!(f, "Subspace{:?}", rows)
    }
}

impl Subspace {
    /// Canonical subspace spanned by the given rows.
    pub fn span(space: &Arc<FormedSpace>, rows: &[Vec<Code>]) -> Self {
        let m = Mat::from_rows(space.dim, rows);
        Self::from_mat(space, m)
    }

    pub fn from_mat(space: &Arc<FormedSpace>, mut m: Mat) -> Self {
        assert_eq!(m.cols, space.dim, "ambient dimension mismatch");
        linalg::rref(&space.ctx, &mut m);
        Subspace { space: Arc::clone(space), dim: m.rows, rows: m.data }
    }

    /// Wraps rows already known to be in canonical form.
    pub(crate) fn from_canonical(space: &Arc<FormedSpace>, dim: usize, rows: Vec<Code>) -> Self {
        Subspace { space: Arc::clone(space), dim, rows }
    }

    pub fn zero(space: &Arc<FormedSpace>) -> Self {
        Subspace { space: Arc::clone(space), dim: 0, rows: Vec::new() }
    }

    pub fn full(space: &Arc<FormedSpace>) -> Self {
        let m = Mat::identity(space.dim);
        Subspace { space: Arc::clone(space), dim: space.dim, rows: m.data }
    }

    /// Span of the standard basis vectors with the given (0-based) indices.
    pub fn coordinate(space: &Arc<FormedSpace>, idx: &[usize]) -> Self {
        let rows: Vec<Vec<Code>> = idx.iter().map(|&i| space.basis_vec(i)).collect();
        Self::span(space, &rows)
    }

    pub fn space(&self) -> &Arc<FormedSpace> {
        &self.space
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn ambient_dim(&self) -> usize {
        self.space.dim
    }
    pub fn rows(&self) -> &[Code] {
        &self.rows
    }
    pub fn row(&self, i: usize) -> &[Code] {
        let n = self.space.dim;
        &self.rows[i * n..(i + 1) * n]
    }
    pub fn mat(&self) -> Mat {
        Mat { rows: self.dim, cols: self.space.dim, data: self.rows.clone() }
    }

    fn check(&self, o: &Self) -> Result<(), SpaceError> {
        if Arc::ptr_eq(&self.space, &o.space) {
            Ok(())
        } else {
            Err(SpaceError::AmbientMismatch)
        }
    }

    /// `Φ(U)`: entrywise Frobenius, then the basis matrix `P`.
    pub fn apply_phi(&self) -> Self {
        let f = self.space.ctx.as_ref();
        let fx = self.mat().map(|a| f.frob(a));
        if self.space.phi_is_identity {
            return Self::from_mat(&self.space, fx);
        }
        Self::from_mat(&self.space, linalg::mul(f, &fx, &self.space.phi))
    }

    /// `Φ^j(U)`.
    pub fn apply_phi_pow(&self, j: u32) -> Self {
        let mut u = self.clone();
        for _ in 0..j {
            u = u.apply_phi();
        }
        u
    }

    pub fn is_phi_stable(&self) -> bool {
        self.apply_phi() == *self
    }

    pub fn sum(&self, o: &Self) -> Result<Self, SpaceError> {
        self.check(o)?;
        Ok(Self::from_mat(&self.space, self.mat().vstack(&o.mat())))
    }

    pub fn intersect(&self, o: &Self) -> Result<Self, SpaceError> {
        self.check(o)?;
        // Zassenhaus: reduce [A A; B 0]; rows with a zero left half span
        // the intersection in their right half.
        let f = self.space.ctx.as_ref();
        let n = self.space.dim;
        let mut z = Mat::zeros(self.dim + o.dim, 2 * n);
        for i in 0..self.dim {
            let r = self.row(i);
            z.data[i * 2 * n..i * 2 * n + n].copy_from_slice(r);
            z.data[i * 2 * n + n..(i + 1) * 2 * n].copy_from_slice(r);
        }
        for i in 0..o.dim {
            let j = self.dim + i;
            z.data[j * 2 * n..j * 2 * n + n].copy_from_slice(o.row(i));
        }
        let pivots = linalg::rref(f, &mut z);
        let mut rows = Vec::new();
        for (i, &p) in pivots.iter().enumerate() {
            if p >= n {
                rows.extend_from_slice(&z.row(i)[n..]);
            }
        }
        let m = Mat { rows: rows.len() / n, cols: n, data: rows };
        Ok(Self::from_mat(&self.space, m))
    }

    /// Orthogonal complement with respect to the form.
    pub fn perp(&self) -> Result<Self, SpaceError> {
        if !self.space.kind.is_formed() {
            return Err(SpaceError::Formless);
        }
        let f = self.space.ctx.as_ref();
        let c = linalg::mul(f, &self.mat(), &self.space.gram.transpose());
        Ok(Self::from_mat(&self.space, linalg::nullspace(f, &c)))
    }

    /// `true` iff the form vanishes on all pairs of basis rows.
    pub fn is_isotropic(&self) -> Result<bool, SpaceError> {
        if !self.space.kind.is_formed() {
            return Err(SpaceError::Formless);
        }
        for i in 0..self.dim {
            for j in i..self.dim {
                if self.space.form(self.row(i), self.row(j)) != 0 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    pub fn contains(&self, o: &Self) -> Result<bool, SpaceError> {
        Ok(self.sum(o)?.dim == self.dim)
    }

    pub fn contains_vec(&self, v: &[Code]) -> bool {
        let mut m = self.mat();
        m = m.vstack(&Mat::from_rows(self.space.dim, &[v.to_vec()]));
        linalg::rank(&self.space.ctx, &m) == self.dim
    }

    /// Rows of `ambient` (in its canonical basis) that extend a basis of
    /// `self` to a basis of `ambient`; `self` must lie inside `ambient`.
    pub fn complement_in(&self, ambient: &Self) -> Result<Vec<Vec<Code>>, SpaceError> {
        self.check(ambient)?;
        let f = self.space.ctx.as_ref();
        let mut acc = self.mat();
        let mut out = Vec::new();
        for i in 0..ambient.dim {
            let row = ambient.row(i).to_vec();
            let cand = acc.vstack(&Mat::from_rows(self.space.dim, std::slice::from_ref(&row)));
            if linalg::rank(f, &cand) == cand.rows {
                acc = cand;
                out.push(row);
            }
        }
        if acc.rows != ambient.dim {
            return Err(SpaceError::Malformed("subspace is not contained in the ambient".into()));
        }
        Ok(out)
    }

    /// Serializable description (see [`SubspaceFile`]).
    pub fn to_file(&self) -> SubspaceFile {
        let f = self.space.ctx.as_ref();
        SubspaceFile {
            space: self.space.descriptor(),
            k: f.k(),
            rows: (0..self.dim)
                .map(|i| self.row(i).iter().map(|&c| f.coeffs(c)).collect())
                .collect(),
        }
    }
}

/// JSON description of a standard space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceDescriptor {
    pub kind: FormKind,
    pub dim: usize,
    pub p: u32,
    pub e: u32,
    /// Working-field modulus, constant term first.
    pub modulus: Vec<u32>,
}

/// JSON file format for a subspace: each matrix entry is the coefficient
/// vector of a working-field element over `F_p`, constant term first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubspaceFile {
    pub space: SpaceDescriptor,
    pub k: u32,
    pub rows: Vec<Vec<Vec<u32>>>,
}

impl SubspaceFile {
    /// Rebuilds the space and the subspace. The standard space of the stated
    /// kind is reconstructed; the modulus must match the stored one.
    pub fn load(&self) -> Result<Subspace, SpaceError> {
        let ctx = FieldCtx::new(self.space.p, self.space.e, self.k, Modulus::Explicit(self.space.modulus.clone()))?;
        let space = FormedSpace::build(&ctx, self.space.kind, self.space.dim)?;
        self.load_into(&space)
    }

    /// Reads the rows into an existing space, which must match the stored
    /// descriptor and level.
    pub fn load_into(&self, space: &Arc<FormedSpace>) -> Result<Subspace, SpaceError> {
        let f = space.ctx.as_ref();
        if space.descriptor() != self.space || f.k() != self.k {
            return Err(SpaceError::AmbientMismatch);
        }
        let mut rows = Vec::new();
        for r in &self.rows {
            if r.len() != space.dim {
                return Err(SpaceError::Malformed(format!("row of length {} in dimension {}", r.len(), space.dim)));
            }
            let mut row = Vec::new();
            for c in r {
                row.push(f.from_coeffs(c)?);
            }
            rows.push(row);
        }
        Ok(Subspace::span(space, &rows))
    }
}

// ---------------------------------------------------------------------------
// Counting and enumeration
// ---------------------------------------------------------------------------

/// Gaussian binomial `[n choose d]_Q`.
pub fn gaussian_binomial(n: u32, d: u32, big_q: u128) -> u128 {
    if d > n {
        return 0;
    }
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 0..d {
        num *= big_q.pow(n - i) - 1;
        den *= big_q.pow(i + 1) - 1;
    }
    num / den
}

/// Closed-form count of `d`-dimensional subspaces over `GF(q^k)` (isotropic
/// if requested). `None` means no standard formula applies and the caller
/// should enumerate.
pub fn count_oracle(space: &FormedSpace, d: usize, k: u32, isotropic_only: bool) -> Option<u128> {
    let big_q = (space.ctx.q() as u128).pow(k);
    let n = space.dim as u32;
    let d32 = d as u32;
    if !isotropic_only {
        return Some(gaussian_binomial(n, d32, big_q));
    }
    // Only the standard constructions have known isotropic counts.
    if space.phi_matrix() != &standard_phi(space) || space.gram() != &standard_gram(space) {
        return None;
    }
    let m = n / 2;
    let prod = |f: &dyn Fn(u32) -> (u128, u128)| -> u128 {
        if d32 > m {
            return 0;
        }
        let mut num = 1u128;
        let mut den = 1u128;
        for i in 0..d32 {
            let (a, b) = f(i);
            num *= a;
            den *= b;
        }
        num / den
    };
    let split = |i: u32| {
        ((big_q.pow(m - i) - 1) * (big_q.pow(m - i - 1) + 1), big_q.pow(i + 1) - 1)
    };
    let nonsplit = |i: u32| {
        ((big_q.pow(m - i) + 1) * (big_q.pow(m - i - 1) - 1), big_q.pow(i + 1) - 1)
    };
    let symp = |i: u32| (big_q.pow(2 * (m - i)) - 1, big_q.pow(i + 1) - 1);
    match space.kind {
        FormKind::None => None,
        FormKind::Symplectic | FormKind::SymmetricOdd => Some(prod(&symp)),
        FormKind::SymmetricEvenSplit => Some(prod(&split)),
        FormKind::SymmetricEvenNonsplit => {
            // Over an even-degree extension the twist is split.
            if k.is_multiple_of(2) {
                Some(prod(&split))
            } else {
                Some(prod(&nonsplit))
            }
        }
    }
}

fn standard_phi(space: &FormedSpace) -> Mat {
    let ctx = &space.ctx;
    // Rebuild a standard space to compare matrices; kinds are cheap.
    match FormedSpace::build(ctx, space.kind, space.dim) {
        Ok(s) => s.phi.clone(),
        Err(_) => Mat::zeros(0, 0),
    }
}

fn standard_gram(space: &FormedSpace) -> Mat {
    match FormedSpace::build(&space.ctx, space.kind, space.dim) {
        Ok(s) => s.gram.clone(),
        Err(_) => Mat::zeros(0, 0),
    }
}

/// All `d`-subsets of `0..n` in lexicographic order.
pub fn pivot_sets(n: usize, d: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(d);
    fn rec(start: usize, n: usize, d: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < d - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, d, cur, out);
            cur.pop();
        }
    }
    rec(0, n, d, &mut cur, &mut out);
    out
}

/// Low-level RREF enumerator for one pivot set.
///
/// Free entries range over `alphabet`. If `gram` is given, rows are pruned as
/// soon as they fail to be isotropic against themselves and earlier rows.
/// `visit` receives each complete canonical row block; returning `false`
/// stops the enumeration early. Returns the number of search nodes visited,
/// or `Err` if `budget` nodes were exceeded.
pub fn enumerate_rref_block(
    f: &FieldCtx,
    n: usize,
    pivots: &[usize],
    alphabet: &[Code],
    gram: Option<&Mat>,
    budget: u64,
    visit: &mut dyn FnMut(&[Code]) -> bool,
) -> Result<u64, SpaceError> {
    enumerate_rref_block_split(f, n, pivots, alphabet, gram, budget, None, visit)
}

/// Number of free entries of the first row for a pivot set.
pub fn first_row_free(n: usize, pivots: &[usize]) -> usize {
    match pivots.first() {
        None => 0,
        Some(&p) => ((p + 1)..n).filter(|c| !pivots.contains(c)).count(),
    }
}

/// As [`enumerate_rref_block`], but if `first` is `Some(a)` the first free
/// entry of the first row is pinned to `alphabet[a]`. Splitting the work this
/// way lets callers parallelise inside one large pivot set.
#[allow(clippy::too_many_arguments)]
pub fn enumerate_rref_block_split(
    f: &FieldCtx,
    n: usize,
    pivots: &[usize],
    alphabet: &[Code],
    gram: Option<&Mat>,
    budget: u64,
    first: Option<usize>,
    visit: &mut dyn FnMut(&[Code]) -> bool,
) -> Result<u64, SpaceError> {
    let d = pivots.len();
    let mut is_pivot = vec![false; n];
    for &p in pivots {
        is_pivot[p] = true;
    }
    // Free positions of row i: non-pivot columns after its pivot.
    let free: Vec<Vec<usize>> = pivots
        .iter()
        .map(|&p| ((p + 1)..n).filter(|&c| !is_pivot[c]).collect())
        .collect();
    let mut rows = vec![0 as Code; d * n];
    for (i, &p) in pivots.iter().enumerate() {
        rows[i * n + p] = 1;
    }
    let mut nodes = 0u64;
    let mut stop = false;

    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &FieldCtx,
        n: usize,
        i: usize,
        free: &[Vec<usize>],
        alphabet: &[Code],
        gram: Option<&Mat>,
        rows: &mut Vec<Code>,
        nodes: &mut u64,
        budget: u64,
        stop: &mut bool,
        first: Option<usize>,
        visit: &mut dyn FnMut(&[Code]) -> bool,
    ) -> Result<(), SpaceError> {
        let d = free.len();
        if i == d {
            if !visit(rows) {
                *stop = true;
            }
            return Ok(());
        }
        let fr = &free[i];
        let a = alphabet.len();
        let mut idx = vec![0usize; fr.len()];
        let pinned = i == 0 && first.is_some() && !fr.is_empty();
        let total = if pinned {
            idx[0] = first.unwrap();
            (a as u64).checked_pow(fr.len() as u32 - 1).unwrap_or(u64::MAX)
        } else {
            (a as u64).checked_pow(fr.len() as u32).unwrap_or(u64::MAX)
        };
        for _ in 0..total {
            *nodes += 1;
            if *nodes > budget {
                return Err(SpaceError::Budget(budget));
            }
            for (t, &c) in fr.iter().enumerate() {
                rows[i * n + c] = alphabet[idx[t]];
            }
            let ok = match gram {
                None => true,
                Some(g) => {
                    let ri = &rows[i * n..(i + 1) * n];
                    (0..=i).all(|j| linalg::pair(f, &rows[j * n..(j + 1) * n], g, ri) == 0)
                }
            };
            if ok {
                rec(f, n, i + 1, free, alphabet, gram, rows, nodes, budget, stop, None, visit)?;
                if *stop {
                    return Ok(());
                }
            }
            // Odometer increment, last free position fastest; a pinned first
            // position never moves.
            let lo = usize::from(pinned);
            let mut t = fr.len();
            while t > lo {
                t -= 1;
                idx[t] += 1;
                if idx[t] < a {
                    break;
                }
                idx[t] = 0;
            }
        }
        for &c in fr {
            rows[i * n + c] = 0;
        }
        Ok(())
    }

    rec(f, n, 0, &free, alphabet, gram, &mut rows, &mut nodes, budget, &mut stop, first, visit)?;
    Ok(nodes)
}

/// Every `d`-dimensional subspace over `GF(q^k)` (that is, fixed by `Φ^k`),
/// optionally restricted to isotropic ones, in deterministic order:
/// pivot sets lexicographically, then free entries in code order.
pub fn enumerate_subspaces(
    space: &Arc<FormedSpace>,
    d: usize,
    k: u32,
    isotropic_only: bool,
    budget: u64,
) -> Result<Vec<Subspace>, SpaceError> {
    space.level_ok(k)?;
    if isotropic_only && !space.kind.is_formed() {
        return Err(SpaceError::Formless);
    }
    let f = space.ctx.as_ref();
    let n = space.dim;
    let alphabet: Vec<Code> = (0..f.size() as Code).collect();
    let gram = if isotropic_only { Some(&space.gram) } else { None };
    let filter_level = k != space.phi_order;
    let mut out = Vec::new();
    let mut spent = 0u64;
    for piv in pivot_sets(n, d) {
        let nodes = enumerate_rref_block(f, n, &piv, &alphabet, gram, budget - spent, &mut |rows| {
            let u = Subspace::from_canonical(space, d, rows.to_vec());
            if !filter_level || u.apply_phi_pow(k) == u {
                out.push(u);
            }
            true
        })?;
        spent += nodes;
    }
    Ok(out)
}

/// Every `Φ`-stable (rational) `d`-dimensional subspace, optionally
/// isotropic, enumerated through the rational basis.
pub fn enumerate_rational_subspaces(
    space: &Arc<FormedSpace>,
    d: usize,
    isotropic_only: bool,
    budget: u64,
) -> Result<Vec<Subspace>, SpaceError> {
    if isotropic_only && !space.kind.is_formed() {
        return Err(SpaceError::Formless);
    }
    let f = space.ctx.as_ref();
    let n = space.dim;
    let alphabet: Vec<Code> = f.base_field().to_vec();
    let gram = if isotropic_only { Some(&space.rational_gram) } else { None };
    let mut out = Vec::new();
    let mut spent = 0u64;
    for piv in pivot_sets(n, d) {
        let nodes = enumerate_rref_block(f, n, &piv, &alphabet, gram, budget - spent, &mut |rows| {
            let c = Mat { rows: d, cols: n, data: rows.to_vec() };
            out.push(Subspace::from_mat(space, linalg::mul(f, &c, &space.rational)));
            true
        })?;
        spent += nodes;
    }
    Ok(out)
}
