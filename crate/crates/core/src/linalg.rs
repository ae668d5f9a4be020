//! Small dense linear-algebra kernels used by the simplex, the projection QP
//! and the brute-force analytics. Matrices are row-major `Vec<f64>`.

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// Inverse by Gauss-Jordan with partial pivoting; `None` when singular.
    pub fn inverse(&self) -> Option<Matrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Matrix::identity(n);
        for col in 0..n {
            let (piv, best) = (col..n)
                .map(|r| (r, a.get(r, col).abs()))
                .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best < 1e-12 {
                return None;
            }
            if piv != col {
                swap_rows(&mut a, piv, col);
                swap_rows(&mut inv, piv, col);
            }
            let p = a.get(col, col);
            for j in 0..n {
                a.data[col * n + j] /= p;
                inv.data[col * n + j] /= p;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a.get(r, col);
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a.data[r * n + j] -= f * a.data[col * n + j];
                    inv.data[r * n + j] -= f * inv.data[col * n + j];
                }
            }
        }
        Some(inv)
    }
}

fn swap_rows(m: &mut Matrix, a: usize, b: usize) {
    if a == b {
        return;
    }
    let c = m.cols;
    for j in 0..c {
        m.data.swap(a * c + j, b * c + j);
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves the square system `a x = b` with partial pivoting.
pub fn solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let (piv, best) = (col..n)
            .map(|r| (r, m.get(r, col).abs()))
            .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best < 1e-12 {
            return None;
        }
        if piv != col {
            swap_rows(&mut m, piv, col);
            rhs.swap(piv, col);
        }
        let p = m.get(col, col);
        for r in col + 1..n {
            let f = m.get(r, col) / p;
            if f == 0.0 {
                continue;
            }
            for j in col..n {
                m.data[r * n + j] -= f * m.data[col * n + j];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m.get(i, j) * x[j]).sum();
        x[i] = (rhs[i] - s) / m.get(i, i);
    }
    Some(x)
}

/// `PA = LU` with partial pivoting, stored row-major in one matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    a: Vec<f64>,
    /// Row swapped with row `k` at elimination step `k`.
    swaps: Vec<usize>,
}

impl Lu {
    /// `None` when a pivot falls below `1e-12` in absolute value.
    pub fn factor(m: Matrix) -> Option<Lu> {
        assert_eq!(m.rows, m.cols);
        let n = m.rows;
        let mut a = m.data;
        let mut swaps = Vec::with_capacity(n);
        for col in 0..n {
            let (piv, best) = (col..n).map(|r| (r, a[r * n + col].abs())).fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best < 1e-12 {
                return None;
            }
            if piv != col {
                for j in 0..n {
                    a.swap(piv * n + j, col * n + j);
                }
            }
            swaps.push(piv);
            let (top, rest) = a.split_at_mut((col + 1) * n);
            let prow = &top[col * n..];
            let p = prow[col];
            for row in rest.chunks_exact_mut(n) {
                if row[col] == 0.0 {
                    continue;
                }
                let f = row[col] / p;
                row[col] = f;
                for (x, u) in row[col + 1..].iter_mut().zip(&prow[col + 1..]) {
                    *x -= f * u;
                }
            }
        }
        Some(Lu { n, a, swaps })
    }

    /// Overwrites `b` with the solution of `A x = b`.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for (k, &p) in self.swaps.iter().enumerate() {
            b.swap(k, p);
        }
        for i in 1..n {
            b[i] -= dot(&self.a[i * n..i * n + i], &b[..i]);
        }
        for i in (0..n).rev() {
            let row = &self.a[i * n..(i + 1) * n];
            b[i] = (b[i] - dot(&row[i + 1..], &b[i + 1..])) / row[i];
        }
    }

    /// Overwrites `b` with the solution of `A' x = b`.
    pub fn solve_transpose(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.a[i * n..(i + 1) * n];
            b[i] /= row[i];
            let z = b[i];
            if z != 0.0 {
                for (x, u) in b[i + 1..].iter_mut().zip(&row[i + 1..]) {
                    *x -= u * z;
                }
            }
        }
        for i in (0..n).rev() {
            let w = b[i];
            if w != 0.0 {
                for (x, l) in b[..i].iter_mut().zip(&self.a[i * n..i * n + i]) {
                    *x -= l * w;
                }
            }
        }
        for (k, &p) in self.swaps.iter().enumerate().rev() {
            b.swap(k, p);
        }
    }
}

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(m: &mut Matrix, tol: f64) -> Vec<usize> {
    let (rows, cols) = (m.rows, m.cols);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (piv, best) = (r..rows)
            .map(|i| (i, m.get(i, c).abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= tol {
            for i in r..rows {
                m.set(i, c, 0.0);
            }
            continue;
        }
        swap_rows(m, piv, r);
        let p = m.get(r, c);
        for j in 0..cols {
            m.data[r * cols + j] /= p;
        }
        for i in 0..rows {
            if i == r {
                continue;
            }
            let f = m.get(i, c);
            if f == 0.0 {
                continue;
            }
            for j in 0..cols {
                m.data[i * cols + j] -= f * m.data[r * cols + j];
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Numerical rank of a set of row vectors.
pub fn rank(rows: &[Vec<f64>], tol: f64) -> usize {
    if rows.is_empty() || rows[0].is_empty() {
        return 0;
    }
    let mut m = Matrix::from_rows(rows);
    let scale = norm_inf(&m.data).max(1.0);
    rref(&mut m, tol * scale).len()
}

/// Basis of the null space `{x : m x = 0}` (one vector per free column of the RREF).
pub fn null_space(rows: &[Vec<f64>], cols: usize, tol: f64) -> Vec<Vec<f64>> {
    if rows.is_empty() {
        return (0..cols)
            .map(|k| {
                let mut e = vec![0.0; cols];
                e[k] = 1.0;
                e
            })
            .collect();
    }
    let mut m = Matrix::from_rows(rows);
    let scale = norm_inf(&m.data).max(1.0);
    let pivots = rref(&mut m, tol * scale);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![0.0; cols];
            v[f] = 1.0;
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = -m.get(r, f);
            }
            v
        })
        .collect()
}

/// Affine dimension of a point set (`-1` for the empty set).
pub fn affine_dim(points: &[Vec<f64>], tol: f64) -> isize {
    match points.split_first() {
        None => -1,
        Some((first, rest)) => {
            let diffs: Vec<Vec<f64>> = rest
                .iter()
                .map(|p| p.iter().zip(first).map(|(a, b)| a - b).collect())
                .collect();
            rank(&diffs, tol) as isize
        }
    }
}

/// Orthonormalises `v` against an orthonormal set; returns the residual direction
/// normalised, or `None` if `v` lies (numerically) in their span.
pub fn gram_schmidt_extend(basis: &[Vec<f64>], v: &[f64], tol: f64) -> Option<Vec<f64>> {
    let mut r = v.to_vec();
    for _ in 0..2 {
        for b in basis {
            let c = dot(&r, b);
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri -= c * bi;
            }
        }
    }
    let nr = norm2(&r);
    if nr <= tol * norm2(v).max(1.0) {
        None
    } else {
        Some(r.into_iter().map(|x| x / nr).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let m = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let inv = m.inverse().unwrap();
        let p = inv.mul_vec(&[2.0, 1.0]);
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12);
    }

    #[test]
    fn singular_is_detected() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(m.inverse().is_none());
        assert!(solve(&m, &[1.0, 2.0]).is_none());
    }

    #[test]
    fn lu_solves_both_systems() {
        let rows = vec![vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![3.0, 0.0, -1.0]];
        let m = Matrix::from_rows(&rows);
        let lu = Lu::factor(m.clone()).unwrap();
        let x = [1.0, -2.0, 0.5];
        let mut b = m.mul_vec(&x);
        lu.solve(&mut b);
        let mut c: Vec<f64> = (0..3).map(|j| (0..3).map(|i| rows[i][j] * x[i]).sum()).collect();
        lu.solve_transpose(&mut c);
        for i in 0..3 {
            assert!((b[i] - x[i]).abs() < 1e-12 && (c[i] - x[i]).abs() < 1e-12);
        }
        assert!(Lu::factor(Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]])).is_none());
    }

    #[test]
    fn null_space_of_plane() {
        let ns = null_space(&[vec![1.0, 1.0, 1.0]], 3, 1e-12);
        assert_eq!(ns.len(), 2);
        for v in ns {
            assert!(dot(&v, &[1.0, 1.0, 1.0]).abs() < 1e-12);
        }
    }

    #[test]
    fn affine_dims() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]];
        assert_eq!(affine_dim(&pts, 1e-9), 1);
        assert_eq!(affine_dim(&pts[..1], 1e-9), 0);
        assert_eq!(affine_dim(&[], 1e-9), -1);
    }
}
