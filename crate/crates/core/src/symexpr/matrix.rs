//! Small dense matrices of expressions.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::{EvalError, Expr};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Expr>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![Expr::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Matrix::from_fn(n, n, |i, j| if i == j { Expr::one() } else { Expr::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Expr) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<Expr>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Expr) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        Matrix::from_fn(self.rows, other.cols, |i, j| {
            Expr::add_all((0..self.cols).map(|k| self.get(i, k) * other.get(k, j)).collect())
        })
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    /// Matrix with row `r` and column `c` removed.
    pub fn minor_matrix(&self, r: usize, c: usize) -> Matrix {
        let mut data = Vec::with_capacity((self.rows - 1) * (self.cols - 1));
        for i in (0..self.rows).filter(|&i| i != r) {
            for j in (0..self.cols).filter(|&j| j != c) {
                data.push(self.get(i, j).clone());
            }
        }
        Matrix { rows: self.rows - 1, cols: self.cols - 1, data }
    }

    pub fn minor(&self, r: usize, c: usize) -> Expr {
        self.minor_matrix(r, c).det()
    }

    pub fn cofactor(&self, r: usize, c: usize) -> Expr {
        let m = self.minor(r, c);
        if (r + c).is_multiple_of(2) {
            m
        } else {
            -m
        }
    }

    /// Laplace expansion along the sparsest row or column.
    pub fn det(&self) -> Expr {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        match n {
            0 => return Expr::one(),
            1 => return self.get(0, 0).clone(),
            2 => return self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0),
            _ => {}
        }
        let zeros_in_row = |i: usize| (0..n).filter(|&j| self.get(i, j).is_zero_node()).count();
        let zeros_in_col = |j: usize| (0..n).filter(|&i| self.get(i, j).is_zero_node()).count();
        let best_row = (0..n).max_by_key(|&i| zeros_in_row(i)).unwrap();
        let best_col = (0..n).max_by_key(|&j| zeros_in_col(j)).unwrap();
        let mut terms = Vec::new();
        if zeros_in_col(best_col) > zeros_in_row(best_row) {
            for i in 0..n {
                let a = self.get(i, best_col);
                if !a.is_zero_node() {
                    terms.push(a * self.cofactor(i, best_col));
                }
            }
        } else {
            for j in 0..n {
                let a = self.get(best_row, j);
                if !a.is_zero_node() {
                    terms.push(a * self.cofactor(best_row, j));
                }
            }
        }
        Expr::add_all(terms)
    }

    pub fn eval(&self, point: &BTreeMap<String, f64>) -> Result<DMatrix<f64>, EvalError> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self.get(i, j).eval(point)?;
            }
        }
        Ok(out)
    }
}
