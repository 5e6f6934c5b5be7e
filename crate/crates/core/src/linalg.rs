//! Dense linear algebra over a [`FieldCtx`] on raw element codes.
//!
//! Matrices are row-major `Vec<Code>` buffers with an explicit column count.
//! These helpers back the subspace calculus in [`crate::space`] and the
//! residue-level lattice computations in [`crate::latcalc`].

use crate::gf::{Code, FieldCtx};

/// A dense matrix over a finite field.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Code>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn from_rows(cols: usize, rows: &[Vec<Code>]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "row length mismatch");
            data.extend_from_slice(r);
        }
        Mat { rows: rows.len(), cols, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Code {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Code) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Code] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.get(i, j);
            }
        }
        t
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Mat { rows: self.rows + other.rows, cols: self.cols, data }
    }

    /// Entrywise application of a map on codes.
    pub fn map(&self, f: impl Fn(Code) -> Code) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| f(x)).collect() }
    }
}

/// Matrix product `a · b`.
pub fn mul(f: &FieldCtx, a: &Mat, b: &Mat) -> Mat {
    assert_eq!(a.cols, b.rows, "dimension mismatch in product");
    let mut c = Mat::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for l in 0..a.cols {
            let x = a.get(i, l);
            if x == 0 {
                continue;
            }
            for j in 0..b.cols {
                let y = b.get(l, j);
                if y != 0 {
                    let idx = i * c.cols + j;
                    c.data[idx] = f.add(c.data[idx], f.mul(x, y));
                }
            }
        }
    }
    c
}

/// Row vector times matrix.
pub fn vec_mul(f: &FieldCtx, v: &[Code], m: &Mat) -> Vec<Code> {
    assert_eq!(v.len(), m.rows);
    let mut out = vec![0; m.cols];
    for (l, &x) in v.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for j in 0..m.cols {
            let y = m.get(l, j);
            if y != 0 {
                out[j] = f.add(out[j], f.mul(x, y));
            }
        }
    }
    out
}

/// Bilinear pairing `x · G · yᵀ`.
pub fn pair(f: &FieldCtx, x: &[Code], g: &Mat, y: &[Code]) -> Code {
    let mut acc = 0;
    for i in 0..g.rows {
        if x[i] == 0 {
            continue;
        }
        let mut inner = 0;
        for j in 0..g.cols {
            let gij = g.get(i, j);
            if gij != 0 && y[j] != 0 {
                inner = f.add(inner, f.mul(gij, y[j]));
            }
        }
        acc = f.add(acc, f.mul(x[i], inner));
    }
    acc
}

/// Brings `m` into reduced row-echelon form in place, drops zero rows and
/// returns the pivot columns.
pub fn rref(f: &FieldCtx, m: &mut Mat) -> Vec<usize> {
    let cols = m.cols;
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == m.rows {
            break;
        }
        let Some(pr) = (r..m.rows).find(|&i| m.data[i * cols + c] != 0) else {
            continue;
        };
        if pr != r {
            for j in 0..cols {
                m.data.swap(pr * cols + j, r * cols + j);
            }
        }
        let inv = f.inv_nz(m.data[r * cols + c]);
        if inv != 1 {
            for j in c..cols {
                let idx = r * cols + j;
                m.data[idx] = f.mul(m.data[idx], inv);
            }
        }
        for i in 0..m.rows {
            if i == r {
                continue;
            }
            let factor = m.data[i * cols + c];
            if factor == 0 {
                continue;
            }
            let nf = f.neg(factor);
            for j in c..cols {
                let v = m.data[r * cols + j];
                if v != 0 {
                    let idx = i * cols + j;
                    m.data[idx] = f.add(m.data[idx], f.mul(nf, v));
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    m.rows = r;
    m.data.truncate(r * cols);
    pivots
}

/// Rank of a matrix.
pub fn rank(f: &FieldCtx, m: &Mat) -> usize {
    let mut c = m.clone();
    rref(f, &mut c).len()
}

/// Basis (as rows, in RREF) of the right kernel `{x : m · xᵀ = 0}`.
pub fn nullspace(f: &FieldCtx, m: &Mat) -> Mat {
    let mut r = m.clone();
    let pivots = rref(f, &mut r);
    let n = m.cols;
    let mut is_pivot = vec![false; n];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&j| !is_pivot[j]).collect();
    let mut out = Mat::zeros(free.len(), n);
    for (k, &j) in free.iter().enumerate() {
        out.set(k, j, 1);
        for (i, &p) in pivots.iter().enumerate() {
            let v = r.get(i, j);
            if v != 0 {
                out.set(k, p, f.neg(v));
            }
        }
    }
    rref(f, &mut out);
    out
}

/// Solves `x · m = b` for a row vector `x`, if a solution exists.
pub fn solve_left(f: &FieldCtx, m: &Mat, b: &[Code]) -> Option<Vec<Code>> {
    // Transpose to mᵀ xᵀ = bᵀ and reduce the augmented matrix.
    let t = m.transpose();
    let mut aug = Mat::zeros(t.rows, t.cols + 1);
    for i in 0..t.rows {
        for j in 0..t.cols {
            aug.set(i, j, t.get(i, j));
        }
        aug.set(i, t.cols, b[i]);
    }
    let pivots = rref(f, &mut aug);
    if pivots.last() == Some(&t.cols) {
        return None;
    }
    let mut x = vec![0; t.cols];
    for (i, &p) in pivots.iter().enumerate() {
        x[p] = aug.get(i, t.cols);
    }
    Some(x)
}

/// Inverse of a square matrix, if invertible.
pub fn inverse(f: &FieldCtx, m: &Mat) -> Option<Mat> {
    assert_eq!(m.rows, m.cols);
    let n = m.rows;
    let mut aug = Mat::zeros(n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            aug.set(i, j, m.get(i, j));
        }
        aug.set(i, n + i, 1);
    }
    let pivots = rref(f, &mut aug);
    if pivots.len() < n || (n > 0 && pivots[n - 1] != n - 1) {
        return None;
    }
    let mut inv = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            inv.set(i, j, aug.get(i, n + j));
        }
    }
    Some(inv)
}

/// Determinant of a square matrix.
pub fn det(f: &FieldCtx, m: &Mat) -> Code {
    assert_eq!(m.rows, m.cols);
    let n = m.rows;
    let mut a = m.clone();
    let mut d = f.one();
    for c in 0..n {
        let Some(pr) = (c..n).find(|&i| a.get(i, c) != 0) else {
            return 0;
        };
        if pr != c {
            for j in 0..n {
                a.data.swap(pr * n + j, c * n + j);
            }
            d = f.neg(d);
        }
        let piv = a.get(c, c);
        d = f.mul(d, piv);
        let inv = f.inv_nz(piv);
        for i in c + 1..n {
            let factor = f.mul(a.get(i, c), inv);
            if factor == 0 {
                continue;
            }
            for j in c..n {
                let v = f.sub(a.get(i, j), f.mul(factor, a.get(c, j)));
                a.set(i, j, v);
            }
        }
    }
    d
}
