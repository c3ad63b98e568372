//! Finite-dimensional matrix subalgebras: closure, nilpotency, common
//! annihilated vectors, annihilator flags and simultaneous strict
//! triangularization.
//!
//! Algebras are non-unital: the closure of a generating set is the span of all
//! products of length at least one. The identity is never adjoined.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::exactnum::{Field, Scalar};
use crate::linalg::{common_preimage, Flag, Matrix, ReducedSpan, Subspace};

/// Subalgebra of `End(K^d)` generated by a finite set of matrices.
///
/// The spanning basis of the closure is computed on first use, so queries that
/// only need the generators (such as the annihilator flag) stay cheap.
#[derive(Debug)]
pub struct MatrixAlgebra {
    field: Field,
    dim: usize,
    generators: Vec<Matrix>,
    closure: OnceLock<Closure>,
}

#[derive(Debug)]
struct Closure {
    basis: Vec<Matrix>,
    span: ReducedSpan,
}

impl Clone for MatrixAlgebra {
    fn clone(&self) -> Self {
        MatrixAlgebra {
            field: self.field,
            dim: self.dim,
            generators: self.generators.clone(),
            closure: OnceLock::new(),
        }
    }
}

/// Outcome of the power-chain computation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Nilpotency {
    /// `S^index = 0` and `S^(index-1) != 0`. `witness` lists generator
    /// indices whose product (left to right) has length `index - 1` and is
    /// nonzero; it is empty when `index == 1`.
    Nilpotent { index: usize, witness: Vec<usize> },
    NotNilpotent,
}

impl Nilpotency {
    pub fn index(&self) -> Option<usize> {
        match self {
            Nilpotency::Nilpotent { index, .. } => Some(*index),
            Nilpotency::NotNilpotent => None,
        }
    }
}

impl MatrixAlgebra {
    /// The subalgebra generated by `generators`, which must be nonempty so the
    /// field and size can be read off; see [`MatrixAlgebra::generated`].
    pub fn closure(generators: Vec<Matrix>) -> Result<Self> {
        let first = generators
            .first()
            .ok_or_else(|| Error::DimensionMismatch("no generators".into()))?;
        let (field, dim) = (first.field(), first.rows());
        Self::generated(field, dim, generators)
    }

    /// Like [`MatrixAlgebra::closure`] with an explicit field and size, so an
    /// empty list gives the zero algebra.
    pub fn generated(field: Field, dim: usize, generators: Vec<Matrix>) -> Result<Self> {
        for g in &generators {
            if g.field() != field {
                return Err(Error::FieldMismatch(field, g.field()));
            }
            if g.rows() != dim || g.cols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "generator of shape {}x{} in a {dim}x{dim} algebra",
                    g.rows(),
                    g.cols()
                )));
            }
        }
        Ok(MatrixAlgebra {
            field,
            dim,
            generators,
            closure: OnceLock::new(),
        })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// Dimension `d` of the space the matrices act on.
    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[Matrix] {
        &self.generators
    }

    fn saturated(&self) -> &Closure {
        self.closure.get_or_init(|| {
            let mut span = ReducedSpan::new(self.field, self.dim * self.dim);
            let mut basis = Vec::new();
            let mut gens = Vec::new();
            for g in &self.generators {
                if span.insert(g.entries()) {
                    basis.push(g.clone());
                    gens.push(g.clone());
                }
            }
            // Every product of generators is g * w for a shorter product w, so
            // left multiplication by independent generators saturates the span.
            let mut next = 0;
            while next < basis.len() {
                let b = basis[next].clone();
                next += 1;
                for g in &gens {
                    let p = g * &b;
                    if span.insert(p.entries()) {
                        basis.push(p);
                    }
                }
            }
            Closure { basis, span }
        })
    }

    /// A linearly independent basis of the algebra, generators first.
    pub fn basis(&self) -> &[Matrix] {
        &self.saturated().basis
    }

    pub fn dimension(&self) -> usize {
        self.basis().len()
    }

    pub fn contains(&self, m: &Matrix) -> bool {
        m.field() == self.field
            && m.rows() == self.dim
            && m.cols() == self.dim
            && self.saturated().span.contains(m.entries())
    }

    /// Checks that every product of two basis elements stays in the span.
    pub fn is_closed(&self) -> bool {
        let basis = self.basis();
        basis
            .iter()
            .all(|a| basis.iter().all(|b| self.contains(&(a * b))))
    }

    /// Least `n` with `S^n = 0`.
    ///
    /// Tracks `W_k`, the span of products of exactly `k` generators; `S^n = 0`
    /// iff `W_n = 0`. A nilpotent algebra acting on `K^d` has `S^d = 0`, so a
    /// nonzero `W_d` proves the algebra is not nilpotent.
    pub fn nilpotency(&self) -> Nilpotency {
        let field = self.field;
        let len = self.dim * self.dim;
        let mut level: Vec<(Matrix, Vec<usize>)> = Vec::new();
        let mut span = ReducedSpan::new(field, len);
        for (i, g) in self.generators.iter().enumerate() {
            if span.insert(g.entries()) {
                level.push((g.clone(), vec![i]));
            }
        }
        let mut witness = Vec::new();
        for k in 1..=self.dim.max(1) {
            if level.is_empty() {
                return Nilpotency::Nilpotent { index: k, witness };
            }
            witness = level[0].1.clone();
            let mut span = ReducedSpan::new(field, len);
            let mut next = Vec::new();
            for (i, g) in self.generators.iter().enumerate() {
                for (w, word) in &level {
                    let p = g * w;
                    if span.insert(p.entries()) {
                        let mut wd = Vec::with_capacity(word.len() + 1);
                        wd.push(i);
                        wd.extend_from_slice(word);
                        next.push((p, wd));
                    }
                }
            }
            level = next;
        }
        Nilpotency::NotNilpotent
    }

    pub fn is_nilpotent(&self) -> bool {
        self.nilpotency() != Nilpotency::NotNilpotent
    }

    /// Nonzero vector killed by every element of the algebra: the first
    /// canonical basis vector of the common kernel of the generators.
    pub fn annihilated_vector(&self) -> Result<Vec<Scalar>> {
        if !self.is_nilpotent() {
            return Err(Error::NotNilpotent);
        }
        let stacked = Matrix::vstack(self.field, self.dim, &self.generators)?;
        let kernel = stacked.kernel();
        kernel
            .basis_vectors()
            .into_iter()
            .next()
            .ok_or(Error::NotNilpotent)
    }

    /// `0 = V_0 ⊂ V_1 ⊂ ... ⊂ V_m = K^d` with `V_i = {v : g v ∈ V_(i-1) for all generators g}`.
    ///
    /// Fails with `NotNilpotent` when the chain stops growing short of `K^d`.
    pub fn annihilator_flag(&self) -> Result<Flag> {
        let mut chain = vec![Subspace::zero(self.field, self.dim)];
        loop {
            let last = chain.last().expect("nonempty");
            if last.is_full() {
                break;
            }
            let next = common_preimage(&self.generators, last)?;
            if next.dim() == last.dim() {
                return Err(Error::NotNilpotent);
            }
            chain.push(next);
        }
        Flag::new(chain)
    }

    /// Ordered basis (as columns of an invertible matrix) in which every
    /// element of the algebra is strictly upper triangular.
    ///
    /// Columns refine the annihilator flag: level `i` is completed from the
    /// canonical basis of `V_i`, taking vectors in order and keeping those not
    /// already in the span of the columns chosen so far.
    pub fn triangularize(&self) -> Result<Matrix> {
        let flag = self.annihilator_flag()?;
        Ok(refine_flag(&flag))
    }
}

/// Completes a flag to an ordered basis of `K^d`; see [`MatrixAlgebra::triangularize`].
pub fn refine_flag(flag: &Flag) -> Matrix {
    let levels = flag.levels();
    let field = levels[0].field();
    let d = flag.ambient_dim();
    let mut span = ReducedSpan::new(field, d);
    let mut columns = Vec::with_capacity(d);
    for level in &levels[1..] {
        for v in level.basis_vectors() {
            if span.insert(&v) {
                columns.push(v);
            }
        }
    }
    Matrix::from_columns(field, d, &columns)
}
