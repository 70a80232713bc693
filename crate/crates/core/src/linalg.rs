//! Dense matrices over a [`FieldSpec`] with row reduction, null spaces and
//! inverses. Entries are element indices.

use thiserror::Error;

use crate::field::{FieldElement, FieldError, FieldSpec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Clone, PartialEq, Eq)]
pub struct Matrix {
    field: FieldSpec,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl std::fmt::Debug for Matrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Matrix {}x{} over F_{}", self.rows, self.cols, self.field)?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row_raw(r))?;
        }
        Ok(())
    }
}

impl Matrix {
    pub fn zeros(field: &FieldSpec, rows: usize, cols: usize) -> Self {
        Matrix {
            field: field.clone(),
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: &FieldSpec, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn from_elements(field: &FieldSpec, rows: &[Vec<FieldElement>]) -> Result<Self, LinalgError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(LinalgError::ShapeMismatch("ragged rows".into()));
            }
            for &x in row {
                field.check(x)?;
                data.push(x.index());
            }
        }
        Ok(Matrix {
            field: field.clone(),
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Build from integer entries reduced into the prime subfield.
    pub fn from_ints(field: &FieldSpec, rows: &[Vec<i64>]) -> Result<Self, LinalgError> {
        let elems: Vec<Vec<FieldElement>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| field.from_int(v)).collect())
            .collect();
        if rows.is_empty() {
            return Ok(Self::zeros(field, 0, 0));
        }
        Self::from_elements(field, &elems)
    }

    pub(crate) fn from_raw_rows(field: &FieldSpec, cols: usize, rows: &[Vec<u32>]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix {
            field: field.clone(),
            rows: rows.len(),
            cols,
            data,
        }
    }

    /// Matrix whose columns are the given raw vectors of length `rows`.
    pub(crate) fn from_raw_columns(field: &FieldSpec, rows: usize, columns: &[Vec<u32>]) -> Self {
        let mut m = Self::zeros(field, rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows);
            for (i, &v) in c.iter().enumerate() {
                m.set_raw(i, j, v);
            }
        }
        m
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> FieldElement {
        self.field.wrap(self.get_raw(i, j))
    }

    pub fn set(&mut self, i: usize, j: usize, x: FieldElement) -> Result<(), LinalgError> {
        self.field.check(x)?;
        self.set_raw(i, j, x.index());
        Ok(())
    }

    #[inline]
    pub(crate) fn get_raw(&self, i: usize, j: usize) -> u32 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub(crate) fn set_raw(&mut self, i: usize, j: usize, v: u32) {
        self.data[i * self.cols + j] = v;
    }

    pub(crate) fn row_raw(&self, i: usize) -> &[u32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub(crate) fn column_raw(&self, j: usize) -> Vec<u32> {
        (0..self.rows).map(|i| self.get_raw(i, j)).collect()
    }

    pub fn row(&self, i: usize) -> Vec<FieldElement> {
        self.row_raw(i).iter().map(|&v| self.field.wrap(v)).collect()
    }

    pub fn column(&self, j: usize) -> Vec<FieldElement> {
        self.column_raw(j).into_iter().map(|v| self.field.wrap(v)).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Self::zeros(&self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set_raw(j, i, self.get_raw(i, j));
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.field != other.field {
            return Err(FieldError::FieldMismatch.into());
        }
        if self.cols != other.rows {
            return Err(LinalgError::ShapeMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let fs = &self.field;
        let mut out = Self::zeros(fs, self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get_raw(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = fs.add_raw(out.get_raw(i, j), fs.mul_raw(a, other.get_raw(k, j)));
                    out.set_raw(i, j, v);
                }
            }
        }
        Ok(out)
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (Matrix, Vec<usize>) {
        let fs = &self.field;
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(pr) = (r..m.rows).find(|&i| m.get_raw(i, c) != 0) else {
                continue;
            };
            if pr != r {
                for j in 0..m.cols {
                    m.data.swap(pr * m.cols + j, r * m.cols + j);
                }
            }
            let inv = fs.inv_raw(m.get_raw(r, c));
            for j in 0..m.cols {
                let v = fs.mul_raw(m.get_raw(r, j), inv);
                m.set_raw(r, j, v);
            }
            for i in 0..m.rows {
                if i == r {
                    continue;
                }
                let f = m.get_raw(i, c);
                if f == 0 {
                    continue;
                }
                for j in 0..m.cols {
                    let v = fs.sub_raw(m.get_raw(i, j), fs.mul_raw(f, m.get_raw(r, j)));
                    m.set_raw(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of `{x : A x = 0}`: one vector per free column (ascending), with
    /// a 1 in that column.
    pub(crate) fn nullspace_raw(&self) -> Vec<Vec<u32>> {
        let fs = &self.field;
        let (r, pivots) = self.rref();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        (0..self.cols)
            .filter(|&c| !is_pivot[c])
            .map(|free| {
                let mut v = vec![0u32; self.cols];
                v[free] = 1;
                for (row, &pc) in pivots.iter().enumerate() {
                    v[pc] = fs.neg_raw(r.get_raw(row, free));
                }
                v
            })
            .collect()
    }

    pub fn nullspace(&self) -> Vec<Vec<FieldElement>> {
        self.nullspace_raw()
            .into_iter()
            .map(|v| v.into_iter().map(|x| self.field.wrap(x)).collect())
            .collect()
    }

    /// Some `x` with `A x = b` (free variables zero), if consistent.
    pub(crate) fn solve_raw(&self, b: &[u32]) -> Option<Vec<u32>> {
        assert_eq!(b.len(), self.rows);
        let fs = &self.field;
        let mut aug = Self::zeros(fs, self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set_raw(i, j, self.get_raw(i, j));
            }
            aug.set_raw(i, self.cols, b[i]);
        }
        let (r, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![0u32; self.cols];
        for (row, &pc) in pivots.iter().enumerate() {
            x[pc] = r.get_raw(row, self.cols);
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<Matrix> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let fs = &self.field;
        let mut aug = Self::zeros(fs, n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set_raw(i, j, self.get_raw(i, j));
            }
            aug.set_raw(i, n + i, 1);
        }
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        let mut inv = Self::zeros(fs, n, n);
        for i in 0..n {
            for j in 0..n {
                inv.set_raw(i, j, r.get_raw(i, n + j));
            }
        }
        Some(inv)
    }
}

#[inline]
pub(crate) fn dot_raw(fs: &FieldSpec, a: &[u32], b: &[u32]) -> u32 {
    a.iter()
        .zip(b)
        .fold(0, |acc, (&x, &y)| fs.add_raw(acc, fs.mul_raw(x, y)))
}

#[cfg(test)]
impl Matrix {
    pub(crate) fn mul_vec_raw(&self, v: &[u32]) -> Vec<u32> {
        (0..self.rows).map(|i| dot_raw(&self.field, self.row_raw(i), v)).collect()
    }
}

/// Extends independent rows of length `n` to an invertible `n x n` matrix by
/// appending standard basis rows, lowest index first.
pub(crate) fn complete_to_basis(fs: &FieldSpec, n: usize, rows: &[Vec<u32>]) -> Matrix {
    let mut chosen: Vec<Vec<u32>> = rows.to_vec();
    let mut rank = Matrix::from_raw_rows(fs, n, &chosen).rank();
    assert_eq!(rank, chosen.len(), "rows must be independent");
    for i in 0..n {
        if chosen.len() == n {
            break;
        }
        let mut e = vec![0u32; n];
        e[i] = 1;
        chosen.push(e);
        let r = Matrix::from_raw_rows(fs, n, &chosen).rank();
        if r > rank {
            rank = r;
        } else {
            chosen.pop();
        }
    }
    Matrix::from_raw_rows(fs, n, &chosen)
}

/// Rows spanning the annihilator of the span of `basis` (vectors of length
/// `n`), i.e. linear forms whose common kernel is exactly that span.
pub(crate) fn annihilator(fs: &FieldSpec, n: usize, basis: &[Vec<u32>]) -> Vec<Vec<u32>> {
    if basis.is_empty() {
        return (0..n)
            .map(|i| {
                let mut e = vec![0u32; n];
                e[i] = 1;
                e
            })
            .collect();
    }
    Matrix::from_raw_rows(fs, n, basis).nullspace_raw()
}

/// Reduced row echelon basis of the span of `vectors`.
pub(crate) fn span_basis(fs: &FieldSpec, n: usize, vectors: &[Vec<u32>]) -> Vec<Vec<u32>> {
    if vectors.is_empty() {
        return Vec::new();
    }
    let (r, pivots) = Matrix::from_raw_rows(fs, n, vectors).rref();
    (0..pivots.len()).map(|i| r.row_raw(i).to_vec()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_and_nullspace() {
        let f5 = FieldSpec::prime(5).unwrap();
        let a = Matrix::from_ints(&f5, &[vec![1, 2, 3], vec![2, 4, 6]]).unwrap();
        assert_eq!(a.rank(), 1);
        let ns = a.nullspace_raw();
        assert_eq!(ns.len(), 2);
        for v in ns {
            assert!(a.mul_vec_raw(&v).iter().all(|&x| x == 0));
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let f7 = FieldSpec::prime(7).unwrap();
        let a = Matrix::from_ints(&f7, &[vec![1, 2, 0], vec![0, 1, 5], vec![3, 0, 1]]).unwrap();
        let inv = a.inverse().unwrap();
        assert_eq!(a.mul(&inv).unwrap(), Matrix::identity(&f7, 3));
        let singular = Matrix::from_ints(&f7, &[vec![1, 2], vec![2, 4]]).unwrap();
        assert!(singular.inverse().is_none());
    }

    #[test]
    fn solve_and_inconsistent() {
        let f3 = FieldSpec::prime(3).unwrap();
        let a = Matrix::from_ints(&f3, &[vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
        let x = a.solve_raw(&[1, 2]).unwrap();
        assert_eq!(a.mul_vec_raw(&x), vec![1, 2]);
        let b = Matrix::from_ints(&f3, &[vec![1, 1], vec![2, 2]]).unwrap();
        assert!(b.solve_raw(&[1, 1]).is_none());
    }

    #[test]
    fn completion_and_annihilator() {
        let f5 = FieldSpec::prime(5).unwrap();
        let basis = complete_to_basis(&f5, 3, &[vec![0, 1, 1]]);
        assert_eq!(basis.rank(), 3);
        assert_eq!(basis.row_raw(0), &[0, 1, 1]);
        assert_eq!(basis.row_raw(1), &[1, 0, 0]);
        let ann = annihilator(&f5, 3, &[vec![1, 0, 0]]);
        assert_eq!(ann, vec![vec![0, 1, 0], vec![0, 0, 1]]);
    }
}
