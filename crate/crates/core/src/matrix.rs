//! Dense matrices of expressions.

use std::fmt;

use crate::error::{Error, Result};
use crate::expr::{sum, Expr};

#[derive(Clone, PartialEq)]
pub struct MatrixExpr {
    rows: usize,
    cols: usize,
    data: Vec<Expr>,
}

impl fmt::Debug for MatrixExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            write!(f, "{}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl MatrixExpr {
    pub fn new(rows: usize, cols: usize, data: Vec<Expr>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!("{} entries for a {}x{} matrix", data.len(), rows, cols)));
        }
        Ok(MatrixExpr { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<Expr>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(Error::Dimension("ragged matrix rows".into()));
        }
        MatrixExpr::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        MatrixExpr { rows, cols, data: vec![Expr::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, &Expr::one())
    }

    pub fn scalar(n: usize, s: &Expr) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = s.clone();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, e: Expr) {
        self.data[i * self.cols + j] = e;
    }

    pub fn entries(&self) -> &[Expr] {
        &self.data
    }

    pub fn row(&self, i: usize) -> Vec<Expr> {
        (0..self.cols).map(|j| self.get(i, j).clone()).collect()
    }

    pub fn map<F: Fn(&Expr) -> Expr>(&self, f: F) -> Self {
        MatrixExpr { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn try_map<F: Fn(&Expr) -> Result<Expr>>(&self, f: F) -> Result<Self> {
        let data = self.data.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(MatrixExpr { rows: self.rows, cols: self.cols, data })
    }

    pub fn add(&self, o: &MatrixExpr) -> Result<Self> {
        self.same_shape(o)?;
        Ok(MatrixExpr { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect() })
    }

    pub fn sub(&self, o: &MatrixExpr) -> Result<Self> {
        self.same_shape(o)?;
        Ok(MatrixExpr { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect() })
    }

    pub fn scale(&self, s: &Expr) -> Self {
        self.map(|e| s * e)
    }

    fn same_shape(&self, o: &MatrixExpr) -> Result<()> {
        if self.rows != o.rows || self.cols != o.cols {
            return Err(Error::Dimension(format!("{}x{} vs {}x{}", self.rows, self.cols, o.rows, o.cols)));
        }
        Ok(())
    }

    pub fn mul(&self, o: &MatrixExpr) -> Result<Self> {
        if self.cols != o.rows {
            return Err(Error::Dimension(format!("cannot multiply {}x{} by {}x{}", self.rows, self.cols, o.rows, o.cols)));
        }
        let mut data = Vec::with_capacity(self.rows * o.cols);
        for i in 0..self.rows {
            for j in 0..o.cols {
                data.push(sum((0..self.cols).map(|k| self.get(i, k) * o.get(k, j))));
            }
        }
        Ok(MatrixExpr { rows: self.rows, cols: o.cols, data })
    }

    pub fn mul_vec(&self, v: &[Expr]) -> Result<Vec<Expr>> {
        if self.cols != v.len() {
            return Err(Error::Dimension(format!("{}x{} matrix times vector of length {}", self.rows, self.cols, v.len())));
        }
        Ok((0..self.rows).map(|i| sum((0..self.cols).map(|k| self.get(i, k) * &v[k]))).collect())
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(j, i, self.get(i, j).clone());
            }
        }
        m
    }

    pub fn commutator(&self, o: &MatrixExpr) -> Result<Self> {
        self.mul(o)?.sub(&o.mul(self)?)
    }

    fn minor(&self, skip_r: usize, skip_c: usize) -> Self {
        let mut data = Vec::with_capacity((self.rows - 1) * (self.cols - 1));
        for i in (0..self.rows).filter(|&i| i != skip_r) {
            for j in (0..self.cols).filter(|&j| j != skip_c) {
                data.push(self.get(i, j).clone());
            }
        }
        MatrixExpr { rows: self.rows - 1, cols: self.cols - 1, data }
    }

    /// Laplace expansion; intended for the small sizes used here.
    pub fn det(&self) -> Result<Expr> {
        if !self.is_square() {
            return Err(Error::Dimension("determinant of a non-square matrix".into()));
        }
        Ok(self.det_unchecked())
    }

    fn det_unchecked(&self) -> Expr {
        match self.rows {
            0 => Expr::one(),
            1 => self.data[0].clone(),
            2 => self.get(0, 0) * self.get(1, 1) - self.get(0, 1) * self.get(1, 0),
            n => sum((0..n).filter(|&j| !self.get(0, j).is_zero()).map(|j| {
                let sign = if j % 2 == 0 { 1 } else { -1 };
                self.get(0, j) * self.minor(0, j).det_unchecked() * sign
            })),
        }
    }

    pub fn adjugate(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Dimension("adjugate of a non-square matrix".into()));
        }
        let n = self.rows;
        if n == 1 {
            return Ok(Self::identity(1));
        }
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                m.set(j, i, self.minor(i, j).det_unchecked() * sign);
            }
        }
        Ok(m)
    }

    /// Symbolic inverse `adj(A)/det(A)`; invertibility is the caller's concern.
    pub fn inverse(&self) -> Result<Self> {
        let d = self.det()?.recip();
        Ok(self.adjugate()?.scale(&d))
    }
}
