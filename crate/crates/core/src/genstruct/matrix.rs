use std::fmt;

use crate::linalg::Matrix;
use crate::symexpr::scalar::int;
use crate::symexpr::{ChartRef, EvalPoint, ExprError, RingElement, Scalar};

/// Dense matrix of ring elements.
#[derive(Clone, PartialEq, Eq)]
pub struct RingMatrix {
    chart: ChartRef,
    rows: usize,
    cols: usize,
    data: Vec<RingElement>,
}

impl RingMatrix {
    pub fn zeros(chart: &ChartRef, rows: usize, cols: usize) -> Self {
        RingMatrix {
            chart: chart.clone(),
            rows,
            cols,
            data: vec![RingElement::zero(chart); rows * cols],
        }
    }

    pub fn identity(chart: &ChartRef, n: usize) -> Self {
        let mut m = RingMatrix::zeros(chart, n, n);
        for i in 0..n {
            m.set(i, i, RingElement::one(chart));
        }
        m
    }

    pub fn from_fn(
        chart: &ChartRef,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> RingElement,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        RingMatrix {
            chart: chart.clone(),
            rows,
            cols,
            data,
        }
    }

    /// Constant matrix from an exact scalar matrix.
    pub fn from_scalar(chart: &ChartRef, m: &Matrix) -> Self {
        RingMatrix::from_fn(chart, m.rows(), m.cols(), |r, c| {
            RingElement::constant(chart, m[(r, c)].clone())
        })
    }

    /// `[[a, b], [c, d]]` from four equally sized square blocks.
    pub fn blocks(a: &RingMatrix, b: &RingMatrix, c: &RingMatrix, d: &RingMatrix) -> Self {
        let n = a.rows;
        RingMatrix::from_fn(&a.chart, 2 * n, 2 * n, |r, col| {
            let blk = match (r < n, col < n) {
                (true, true) => a,
                (true, false) => b,
                (false, true) => c,
                (false, false) => d,
            };
            blk.get(r % n, col % n).clone()
        })
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> RingMatrix {
        RingMatrix::from_fn(&self.chart, rows, cols, |r, c| {
            self.get(r0 + r, c0 + c).clone()
        })
    }

    pub fn chart(&self) -> &ChartRef {
        &self.chart
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &RingElement {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: RingElement) {
        self.data[r * self.cols + c] = v;
    }

    pub fn entries(&self) -> impl Iterator<Item = ((usize, usize), &RingElement)> {
        self.data
            .iter()
            .enumerate()
            .map(|(k, v)| ((k / self.cols, k % self.cols), v))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(RingElement::is_zero)
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(RingElement::is_real)
    }

    pub fn mul(&self, other: &RingMatrix) -> RingMatrix {
        assert_eq!(self.cols, other.rows, "matrix product dimension mismatch");
        RingMatrix::from_fn(&self.chart, self.rows, other.cols, |r, c| {
            let mut acc = RingElement::zero(&self.chart);
            for k in 0..self.cols {
                let a = self.get(r, k);
                let b = other.get(k, c);
                if !a.is_zero() && !b.is_zero() {
                    acc = &acc + &(a * b);
                }
            }
            acc
        })
    }

    pub fn mul_col(&self, v: &[RingElement]) -> Vec<RingElement> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| {
                let mut acc = RingElement::zero(&self.chart);
                for (k, x) in v.iter().enumerate() {
                    let a = self.get(r, k);
                    if !a.is_zero() && !x.is_zero() {
                        acc = &acc + &(a * x);
                    }
                }
                acc
            })
            .collect()
    }

    pub fn add(&self, other: &RingMatrix) -> RingMatrix {
        RingMatrix::from_fn(&self.chart, self.rows, self.cols, |r, c| {
            self.get(r, c) + other.get(r, c)
        })
    }

    pub fn sub(&self, other: &RingMatrix) -> RingMatrix {
        RingMatrix::from_fn(&self.chart, self.rows, self.cols, |r, c| {
            self.get(r, c) - other.get(r, c)
        })
    }

    pub fn neg(&self) -> RingMatrix {
        self.scale(&int(-1))
    }

    pub fn scale(&self, s: &Scalar) -> RingMatrix {
        RingMatrix::from_fn(&self.chart, self.rows, self.cols, |r, c| {
            self.get(r, c).scale(s)
        })
    }

    pub fn transpose(&self) -> RingMatrix {
        RingMatrix::from_fn(&self.chart, self.cols, self.rows, |r, c| {
            self.get(c, r).clone()
        })
    }

    pub fn conj(&self) -> RingMatrix {
        RingMatrix::from_fn(&self.chart, self.rows, self.cols, |r, c| {
            self.get(r, c).conj()
        })
    }

    pub fn eval(&self, p: &EvalPoint) -> Result<Matrix, ExprError> {
        let mut out = Matrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(r, c)] = self.get(r, c).evaluate(p)?;
            }
        }
        Ok(out)
    }

    /// Determinant by cofactor expansion; sizes here are at most the chart dimension.
    pub fn det(&self) -> RingElement {
        assert_eq!(self.rows, self.cols);
        let idx: Vec<usize> = (0..self.rows).collect();
        self.minor_det(&idx, &idx)
    }

    fn minor_det(&self, rows: &[usize], cols: &[usize]) -> RingElement {
        match rows.len() {
            0 => RingElement::one(&self.chart),
            1 => self.get(rows[0], cols[0]).clone(),
            _ => {
                let mut acc = RingElement::zero(&self.chart);
                let r0 = rows[0];
                for (k, &c) in cols.iter().enumerate() {
                    let a = self.get(r0, c);
                    if a.is_zero() {
                        continue;
                    }
                    let sub_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
                    let term = a * &self.minor_det(&rows[1..], &sub_cols);
                    acc = if k % 2 == 0 {
                        &acc + &term
                    } else {
                        &acc - &term
                    };
                }
                acc
            }
        }
    }

    /// Adjugate, `adj(M)·M = det(M)·Id`.
    pub fn adjugate(&self) -> RingMatrix {
        let n = self.rows;
        let all: Vec<usize> = (0..n).collect();
        RingMatrix::from_fn(&self.chart, n, n, |r, c| {
            // adj(M)[r][c] = (−1)^{r+c} · det(M without row c, column r)
            let rows: Vec<usize> = all.iter().copied().filter(|&x| x != c).collect();
            let cols: Vec<usize> = all.iter().copied().filter(|&x| x != r).collect();
            let cof = self.minor_det(&rows, &cols);
            if (r + c) % 2 == 0 {
                cof
            } else {
                -cof
            }
        })
    }

    /// Inverse over the ring, available when the determinant is a unit
    /// (a nonzero constant times a Fourier monomial).
    pub fn inverse(&self) -> Option<RingMatrix> {
        let det_inv = self.det().unit_inverse()?;
        let adj = self.adjugate();
        Some(RingMatrix::from_fn(
            &self.chart,
            self.rows,
            self.cols,
            |r, c| adj.get(r, c) * &det_inv,
        ))
    }
}

impl fmt::Debug for RingMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[")?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self.get(r, c).to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}
