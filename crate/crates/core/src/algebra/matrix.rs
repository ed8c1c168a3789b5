use super::context::Ctx;
use super::element::Element;
use super::linalg;
use super::scalar::Q;
use crate::error::{Error, Result};

/// Matrix of algebra elements with rows and columns labelled by generators.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraMatrix {
    ctx: Ctx,
    rows: Vec<usize>,
    cols: Vec<usize>,
    entries: Vec<Vec<Element>>,
}

impl AlgebraMatrix {
    pub fn new(ctx: &Ctx, rows: Vec<usize>, cols: Vec<usize>, entries: Vec<Vec<Element>>) -> Result<Self> {
        if entries.len() != rows.len() || entries.iter().any(|r| r.len() != cols.len()) {
            return Err(Error::Dimension("matrix shape does not match its labels".into()));
        }
        Ok(AlgebraMatrix {
            ctx: ctx.clone(),
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(ctx: &Ctx, rows: Vec<usize>, cols: Vec<usize>) -> Self {
        let entries = rows
            .iter()
            .map(|_| cols.iter().map(|_| Element::zero(ctx)).collect())
            .collect();
        AlgebraMatrix {
            ctx: ctx.clone(),
            rows,
            cols,
            entries,
        }
    }

    pub fn identity(ctx: &Ctx, labels: Vec<usize>) -> Self {
        let mut m = AlgebraMatrix::zeros(ctx, labels.clone(), labels);
        for i in 0..m.rows.len() {
            m.entries[i][i] = Element::one(ctx);
        }
        m
    }

    pub fn from_real(ctx: &Ctx, rows: Vec<usize>, cols: Vec<usize>, real: &linalg::Dense<Q>) -> Self {
        let entries = real
            .iter()
            .map(|r| r.iter().map(|c| Element::constant(ctx, c.clone())).collect())
            .collect();
        AlgebraMatrix {
            ctx: ctx.clone(),
            rows,
            cols,
            entries,
        }
    }

    pub fn ctx(&self) -> &Ctx {
        &self.ctx
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Element {
        &self.entries[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, e: Element) {
        self.entries[i][j] = e;
    }

    pub fn is_square(&self) -> bool {
        self.rows.len() == self.cols.len()
    }

    pub fn mul(&self, other: &AlgebraMatrix) -> Result<AlgebraMatrix> {
        if self.cols.len() != other.rows.len() {
            return Err(Error::Dimension("inner matrix dimensions differ".into()));
        }
        let entries = (0..self.rows.len())
            .map(|i| {
                (0..other.cols.len())
                    .map(|j| {
                        (0..self.cols.len()).fold(Element::zero(&self.ctx), |acc, k| {
                            if self.entries[i][k].is_zero() || other.entries[k][j].is_zero() {
                                acc
                            } else {
                                &acc + &(&self.entries[i][k] * &other.entries[k][j])
                            }
                        })
                    })
                    .collect()
            })
            .collect();
        AlgebraMatrix::new(&self.ctx, self.rows.clone(), other.cols.clone(), entries)
    }

    pub fn add(&self, other: &AlgebraMatrix) -> Result<AlgebraMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &AlgebraMatrix) -> Result<AlgebraMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &AlgebraMatrix, f: impl Fn(&Element, &Element) -> Element) -> Result<AlgebraMatrix> {
        if self.rows.len() != other.rows.len() || self.cols.len() != other.cols.len() {
            return Err(Error::Dimension("matrix shapes differ".into()));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(ra, rb)| ra.iter().zip(rb).map(|(a, b)| f(a, b)).collect())
            .collect();
        AlgebraMatrix::new(&self.ctx, self.rows.clone(), self.cols.clone(), entries)
    }

    pub fn map(&self, f: impl Fn(&Element) -> Element) -> AlgebraMatrix {
        let entries = self
            .entries
            .iter()
            .map(|r| r.iter().map(&f).collect())
            .collect();
        AlgebraMatrix {
            ctx: self.ctx.clone(),
            rows: self.rows.clone(),
            cols: self.cols.clone(),
            entries,
        }
    }

    /// Entrywise eval_zero∘epsilon.
    pub fn real_part(&self) -> linalg::Dense<Q> {
        self.entries
            .iter()
            .map(|r| r.iter().map(|e| e.epsilon().eval_zero()).collect())
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && self.entries.iter().enumerate().all(|(i, r)| {
                r.iter().enumerate().all(|(j, e)| {
                    if i == j {
                        *e == Element::one(&self.ctx)
                    } else {
                        e.is_zero()
                    }
                })
            })
    }

    /// Inverse through the Neumann series around the real part.
    pub fn invert(&self) -> Result<AlgebraMatrix> {
        if !self.is_square() {
            return Err(Error::Dimension("only square matrices are invertible".into()));
        }
        let a0 = self.real_part();
        let a0_inv = linalg::invert(&a0)
            .ok_or_else(|| Error::Singular("real part of the matrix is singular".into()))?;
        let ctx = &self.ctx;
        let a0_inv_m = AlgebraMatrix::from_real(ctx, self.cols.clone(), self.rows.clone(), &a0_inv);
        let nil = self.sub(&AlgebraMatrix::from_real(ctx, self.rows.clone(), self.cols.clone(), &a0))?;
        let step = a0_inv_m.mul(&nil)?.map(|e| -e);
        let mut power = AlgebraMatrix::identity(ctx, self.cols.clone());
        let mut sum = power.clone();
        for _ in 0..=ctx.trunc() {
            power = power.mul(&step)?;
            if power.entries.iter().flatten().all(Element::is_zero) {
                break;
            }
            sum = sum.add(&power)?;
        }
        let mut inv = sum.mul(&a0_inv_m)?;
        inv.rows = self.cols.clone();
        inv.cols = self.rows.clone();
        Ok(inv)
    }
}
