//! Dense coefficient matrices over GF(2^q) and incremental row-space tracking.
//!
//! Only coefficient vectors are ever stored. A receiver can decode once the
//! accumulated coefficient matrix has rank `M`, so payloads never matter here.

use rand::RngCore;
use thiserror::Error;

use crate::gf2q::{FieldContext, FieldElement, FieldError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("expected {expected} entries, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("row has {got} entries but the basis has {expected} columns")]
    RowLength { expected: usize, got: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// A `rows × cols` matrix over GF(2^q), row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffMatrix {
    ctx: FieldContext,
    rows: usize,
    cols: usize,
    entries: Vec<u16>,
}

impl CoeffMatrix {
    /// Builds a matrix from raw symbols, validating shape and range.
    pub fn from_symbols(
        ctx: &FieldContext,
        rows: usize,
        cols: usize,
        entries: Vec<u16>,
    ) -> Result<Self, MatrixError> {
        if entries.len() != rows * cols {
            return Err(MatrixError::Shape {
                expected: rows * cols,
                got: entries.len(),
            });
        }
        for &v in &entries {
            ctx.element(v as u32)?;
        }
        Ok(Self {
            ctx: ctx.clone(),
            rows,
            cols,
            entries,
        })
    }

    pub fn from_elements(
        ctx: &FieldContext,
        rows: usize,
        cols: usize,
        entries: &[FieldElement],
    ) -> Result<Self, MatrixError> {
        if entries.iter().any(|e| e.field() != ctx.id()) {
            return Err(FieldError::ContextMismatch.into());
        }
        Self::from_symbols(ctx, rows, cols, entries.iter().map(|e| e.value()).collect())
    }

    pub fn zeros(ctx: &FieldContext, rows: usize, cols: usize) -> Self {
        Self {
            ctx: ctx.clone(),
            rows,
            cols,
            entries: vec![0; rows * cols],
        }
    }

    pub fn identity(ctx: &FieldContext, n: usize) -> Self {
        let mut m = Self::zeros(ctx, n, n);
        for i in 0..n {
            m.entries[i * n + i] = 1;
        }
        m
    }

    /// Matrix with i.i.d. uniform entries, filled row by row.
    pub fn random<R: RngCore + ?Sized>(
        rng: &mut R,
        ctx: &FieldContext,
        rows: usize,
        cols: usize,
    ) -> Self {
        let entries = (0..rows * cols).map(|_| ctx.random_symbol(rng)).collect();
        Self {
            ctx: ctx.clone(),
            rows,
            cols,
            entries,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn context(&self) -> &FieldContext {
        &self.ctx
    }

    pub fn get(&self, r: usize, c: usize) -> FieldElement {
        self.ctx
            .element(self.entries[r * self.cols + c] as u32)
            .expect("entries are validated on construction")
    }

    pub fn row(&self, r: usize) -> &[u16] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[u16]> {
        // chunks_exact panics on a zero chunk size
        let cols = self.cols.max(1);
        self.entries
            .chunks_exact(cols)
            .take(if self.cols == 0 { 0 } else { self.rows })
    }

    /// Rank by in-place Gaussian elimination on a copy.
    pub fn rank(&self) -> usize {
        let (rows, cols) = (self.rows, self.cols);
        let mut a = self.entries.clone();
        let mut rank = 0;
        for col in 0..cols {
            if rank == rows {
                break;
            }
            let Some(p) = (rank..rows).find(|&r| a[r * cols + col] != 0) else {
                continue;
            };
            if p != rank {
                for c in 0..cols {
                    a.swap(p * cols + c, rank * cols + c);
                }
            }
            let inv = self
                .ctx
                .inv_symbol(a[rank * cols + col])
                .expect("pivot is nonzero");
            for c in col..cols {
                a[rank * cols + c] = self.ctx.mul_symbols(a[rank * cols + c], inv);
            }
            for r in (rank + 1)..rows {
                let factor = a[r * cols + col];
                if factor != 0 {
                    for c in col..cols {
                        let sub = self.ctx.mul_symbols(factor, a[rank * cols + c]);
                        a[r * cols + c] ^= sub;
                    }
                }
            }
            rank += 1;
        }
        rank
    }
}

/// Row-echelon basis of the span of every row inserted so far.
///
/// Each stored row is zero left of its pivot and has a pivot entry of 1.
/// Rows are kept in increasing pivot order, which lets a new row be reduced in
/// a single pass.
#[derive(Debug, Clone)]
pub struct EchelonBasis {
    ctx: FieldContext,
    cols: usize,
    /// `rank × cols`, rows ordered by pivot.
    rows: Vec<u16>,
    pivots: Vec<usize>,
    scratch: Vec<u16>,
}

impl EchelonBasis {
    pub fn new(ctx: &FieldContext, cols: usize) -> Self {
        Self {
            ctx: ctx.clone(),
            cols,
            rows: Vec::with_capacity(cols * cols),
            pivots: Vec::with_capacity(cols),
            scratch: vec![0; cols],
        }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_full(&self) -> bool {
        self.rank() == self.cols
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    pub fn basis_row(&self, i: usize) -> &[u16] {
        &self.rows[i * self.cols..(i + 1) * self.cols]
    }

    /// Inserts `row`; returns whether it was outside the current span.
    pub fn insert_row(&mut self, row: &[u16]) -> Result<bool, MatrixError> {
        if row.len() != self.cols {
            return Err(MatrixError::RowLength {
                expected: self.cols,
                got: row.len(),
            });
        }
        for &v in row {
            self.ctx.element(v as u32)?;
        }
        let mut scratch = std::mem::take(&mut self.scratch);
        scratch.copy_from_slice(row);
        let increased = self.insert_reduced(&mut scratch);
        self.scratch = scratch;
        Ok(increased)
    }

    pub fn insert_elements(&mut self, row: &[FieldElement]) -> Result<bool, MatrixError> {
        if row.iter().any(|e| e.field() != self.ctx.id()) {
            return Err(FieldError::ContextMismatch.into());
        }
        let symbols: Vec<u16> = row.iter().map(|e| e.value()).collect();
        self.insert_row(&symbols)
    }

    /// Draws a uniform random row and inserts it. Used by the simulator.
    pub fn insert_random_row<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> bool {
        let mut scratch = std::mem::take(&mut self.scratch);
        for x in scratch.iter_mut() {
            *x = self.ctx.random_symbol(rng);
        }
        let increased = self.insert_reduced(&mut scratch);
        self.scratch = scratch;
        increased
    }

    /// Whether `row` lies in the current span. Does not modify the basis.
    pub fn contains(&self, row: &[u16]) -> bool {
        let mut r = row.to_vec();
        self.reduce(&mut r);
        r.iter().all(|&x| x == 0)
    }

    fn reduce(&self, row: &mut [u16]) {
        let cols = self.cols;
        for (i, &p) in self.pivots.iter().enumerate() {
            let c = row[p];
            if c != 0 {
                let b = &self.rows[i * cols + p..(i + 1) * cols];
                self.ctx.axpy(&mut row[p..], c, b);
            }
        }
    }

    fn insert_reduced(&mut self, row: &mut [u16]) -> bool {
        if self.is_full() {
            return false;
        }
        self.reduce(row);
        let Some(pivot) = row.iter().position(|&x| x != 0) else {
            return false;
        };
        let inv = self.ctx.inv_symbol(row[pivot]).expect("pivot is nonzero");
        self.ctx.scale(&mut row[pivot..], inv);
        let at = self.pivots.partition_point(|&p| p < pivot);
        self.pivots.insert(at, pivot);
        let offset = at * self.cols;
        self.rows.splice(offset..offset, row.iter().copied());
        true
    }
}
