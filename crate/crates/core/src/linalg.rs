//! Dense row-major matrices and the handful of kernels the models need.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, T::zero())
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Shape(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// A 1×n row vector.
    pub fn row_vector(v: &[T]) -> Self {
        Self {
            rows: 1,
            cols: v.len(),
            data: v.to_vec(),
        }
    }

    /// An n×1 column vector.
    pub fn col_vector(v: &[T]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    fn zip_with(&self, other: &Self, op: &str, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!(
                "{op}: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "hadamard", |a, b| a * b)
    }

    /// `self += s * other`, in place.
    pub fn axpy(&mut self, s: T, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Shape(format!(
                "axpy: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        matmul(self, other)
    }

    /// Row vector times matrix: `v · self`.
    pub fn vecmat(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.rows {
            return Err(Error::Shape(format!(
                "vector of length {} times {}x{} matrix",
                v.len(),
                self.rows,
                self.cols
            )));
        }
        let mut out = vec![T::zero(); self.cols];
        for (r, &vr) in v.iter().enumerate() {
            if vr == T::zero() {
                continue;
            }
            for (o, &m) in out.iter_mut().zip(self.row(r)) {
                *o += vr * m;
            }
        }
        Ok(out)
    }

    /// Matrix times column vector: `self · v`.
    pub fn matvec(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.cols {
            return Err(Error::Shape(format!(
                "{}x{} matrix times vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows).map(|r| dot(self.row(r), v)).collect())
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (r1, c1) = self.shape();
        let (r2, c2) = other.shape();
        let mut out = Self::zeros(r1 * r2, c1 * c2);
        for i in 0..r1 {
            for j in 0..c1 {
                let a = self[(i, j)];
                for k in 0..r2 {
                    for l in 0..c2 {
                        out[(i * r2 + k, j * c2 + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (r, c): (usize, usize)) -> &T {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

pub fn matmul<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if a.cols != b.rows {
        return Err(Error::Shape(format!(
            "matmul: left operand is {}x{}, right operand is {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for k in 0..a.cols {
            let aik = a.data[i * a.cols + k];
            for (o, &bkj) in orow.iter_mut().zip(b.row(k)) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

pub fn relu<T: Scalar>(v: &Matrix<T>) -> Matrix<T> {
    v.map(relu_scalar)
}

#[inline]
pub fn relu_scalar<T: Scalar>(v: T) -> T {
    if v > T::zero() {
        v
    } else {
        T::zero()
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Outer product `aᵀ b` as an `a.len() × b.len()` matrix.
pub fn outer<T: Scalar>(a: &[T], b: &[T]) -> Matrix<T> {
    let mut m = Matrix::zeros(a.len(), b.len());
    for (i, &ai) in a.iter().enumerate() {
        for (o, &bj) in m.row_mut(i).iter_mut().zip(b) {
            *o = ai * bj;
        }
    }
    m
}

pub fn norm2<T: Scalar>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// Sum over rows of each row's Euclidean norm.
pub fn norm_l21<T: Scalar>(w: &Matrix<T>) -> T {
    (0..w.rows).map(|r| norm2(w.row(r))).sum()
}

pub fn norm_l1<T: Scalar>(w: &Matrix<T>) -> T {
    w.data.iter().map(|v| v.abs()).sum()
}

pub fn norm_fro<T: Scalar>(w: &Matrix<T>) -> T {
    norm2(&w.data)
}

/// Solves `a x = b` for symmetric positive definite `a` via Cholesky.
///
/// `b` may hold several right-hand sides as columns.
pub fn solve_spd<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    let n = a.rows;
    if a.cols != n || b.rows != n {
        return Err(Error::Shape(format!(
            "solve_spd: system is {}x{}, right-hand side is {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut l = Matrix::zeros(n, n);
    // relative pivot floor; anything below is treated as rank deficiency
    let scale = (0..n).map(|i| a[(i, i)].abs()).fold(T::zero(), T::max);
    let floor = scale * T::epsilon() * T::of(n as f64 + 1.0);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) {
            return Err(Error::Singular(format!(
                "matrix is not positive definite (pivot {j} = {d})"
            )));
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    let mut x = b.clone();
    for c in 0..b.cols {
        // forward: L y = b
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in i + 1..n {
                s -= l[(k, i)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix<f64> {
        let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        Matrix::new(rows, cols, data).unwrap()
    }

    #[test]
    fn matmul_identity_and_dot() {
        let i = Matrix::<f64>::identity(2);
        let b = Matrix::from_rows(&[[5.0, 6.0], [7.0, 8.0]]).unwrap();
        assert_eq!(matmul(&i, &b).unwrap(), b);
        let a = Matrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let c = Matrix::from_rows(&[[3.0], [4.0]]).unwrap();
        assert_eq!(matmul(&a, &c).unwrap().as_slice(), &[11.0]);
    }

    #[test]
    fn matmul_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random(7, 5, &mut rng);
        let b = random(5, 3, &mut rng);
        let c = matmul(&a, &b).unwrap();
        for i in 0..7 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..5 {
                    s += a.as_slice()[i * 5 + k] * b.as_slice()[k * 3 + j];
                }
                assert!((c[(i, j)] - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matmul_shape_error_names_dims() {
        let a = Matrix::<f64>::zeros(2, 3);
        let b = Matrix::<f64>::zeros(2, 3);
        let msg = matmul(&a, &b).unwrap_err().to_string();
        assert!(msg.contains("2x3") && msg.contains("shape"), "{msg}");
    }

    #[test]
    fn relu_cases() {
        let v = Matrix::row_vector(&[-1.0, 0.0, 2.0]);
        assert_eq!(relu(&v).as_slice(), &[0.0, 0.0, 2.0]);
        let neg = Matrix::row_vector(&[-1.0, -3.0]);
        assert_eq!(relu(&neg).as_slice(), &[0.0, 0.0]);
        let pos = Matrix::row_vector(&[0.0, 1.5, 4.0]);
        assert_eq!(relu(&pos), pos);
    }

    #[test]
    fn norms() {
        assert_eq!(norm_l21(&Matrix::<f64>::identity(2)), 2.0);
        let m = Matrix::from_rows(&[[3.0, 4.0], [0.0, 0.0]]).unwrap();
        assert_eq!(norm_l21(&m), 5.0);
        let m = Matrix::from_rows(&[[1.0, -2.0], [3.0, 0.0]]).unwrap();
        assert_eq!(norm_l1(&m), 6.0);
        assert!((norm_fro(&Matrix::<f64>::identity(3)) - 3f64.sqrt()).abs() < 1e-15);
        let z = Matrix::<f64>::zeros(3, 2);
        assert_eq!(norm_l1(&z), 0.0);
        assert_eq!(norm_fro(&z), 0.0);
    }

    #[test]
    fn l21_matches_per_row_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = random(4, 3, &mut rng);
        let mut oracle = 0.0;
        for r in 0..4 {
            let mut s = 0.0;
            for c in 0..3 {
                s += w[(r, c)] * w[(r, c)];
            }
            oracle += f64::sqrt(s);
        }
        assert!((norm_l21(&w) - oracle).abs() < 1e-12);
    }

    #[test]
    fn kron_replicates_identity() {
        let a = Matrix::<f64>::filled(1, 3, 1.0);
        let k = a.kron(&Matrix::identity(2));
        assert_eq!(k.shape(), (2, 6));
        assert_eq!(k.row(0), &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn solve_spd_recovers_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = random(6, 4, &mut rng);
        let a = matmul(&g.transpose(), &g).unwrap();
        let x = random(4, 2, &mut rng);
        let b = matmul(&a, &x).unwrap();
        let sol = solve_spd(&a, &b).unwrap();
        assert!(sol.max_abs_diff(&x) < 1e-10);
        let singular = Matrix::<f64>::zeros(2, 2);
        assert!(matches!(
            solve_spd(&singular, &Matrix::zeros(2, 1)),
            Err(Error::Singular(_))
        ));
    }

    fn arb_matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix<f64>> {
        prop::collection::vec(-10.0f64..10.0, rows * cols)
            .prop_map(move |d| Matrix::new(rows, cols, d).unwrap())
    }

    proptest! {
        #[test]
        fn matmul_is_associative(
            a in arb_matrix(3, 4), b in arb_matrix(4, 2), c in arb_matrix(2, 5)
        ) {
            let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
            let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
            let scale = norm_fro(&left).max(1.0);
            prop_assert!(left.max_abs_diff(&right) / scale < 1e-10);
        }

        #[test]
        fn relu_is_idempotent(v in arb_matrix(2, 6)) {
            prop_assert_eq!(relu(&relu(&v)), relu(&v));
        }

        #[test]
        fn norm_ordering(w in arb_matrix(4, 3)) {
            let (l1, l21, fro) = (norm_l1(&w), norm_l21(&w), norm_fro(&w));
            prop_assert!(l21 <= l1 + 1e-12);
            prop_assert!(fro <= l21 + 1e-12);
        }
    }
}
