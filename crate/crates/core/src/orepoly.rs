//! The differential polynomial ring `R#[X; δ]` over a matrix-realized ring `R`.
//!
//! Elements are kept in right-coefficient normal form `sum X^i a_i`, with the
//! multiplication rule `X r = r X + δ(r)`. Coefficients live in `R#`, the ring
//! `R` with a unit adjoined, stored as pairs `(λ, r)`; the unit is only turned
//! into the identity matrix at evaluation time, so `R` itself can stay
//! nilpotent.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exactnum::{binomial_scalar, Field, Scalar};
use crate::linalg::{Matrix, ReducedSpan};
use crate::nilalg::MatrixAlgebra;

/// A ring `R` given by a linearly independent, multiplicatively closed set of
/// `d x d` matrices.
#[derive(Debug)]
pub struct CoefficientRing {
    field: Field,
    dim: usize,
    basis: Vec<Matrix>,
    span: ReducedSpan,
    // table[i][j] = coordinates of basis[i] * basis[j]
    table: Vec<Vec<Vec<Scalar>>>,
}

impl CoefficientRing {
    pub fn new(field: Field, dim: usize, basis: Vec<Matrix>) -> Result<Self> {
        let mut span = ReducedSpan::with_coordinates(field, dim * dim);
        for b in &basis {
            if b.field() != field {
                return Err(Error::FieldMismatch(field, b.field()));
            }
            if b.rows() != dim || b.cols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "ring element of shape {}x{} in dimension {dim}",
                    b.rows(),
                    b.cols()
                )));
            }
            if !span.insert(b.entries()) {
                return Err(Error::LinearlyDependent);
            }
        }
        let mut table = Vec::with_capacity(basis.len());
        for (i, a) in basis.iter().enumerate() {
            let mut row = Vec::with_capacity(basis.len());
            for (j, b) in basis.iter().enumerate() {
                let coords = span
                    .coordinates((a * b).entries())
                    .ok_or(Error::ProductNotClosed(i, j))?;
                row.push(coords);
            }
            table.push(row);
        }
        Ok(CoefficientRing {
            field,
            dim,
            basis,
            span,
            table,
        })
    }

    /// The ring spanned by the closure basis of `algebra`.
    pub fn from_algebra(algebra: &MatrixAlgebra) -> Result<Self> {
        Self::new(
            algebra.field(),
            algebra.ambient_dim(),
            algebra.basis().to_vec(),
        )
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// Size `d` of the matrices.
    pub fn matrix_dim(&self) -> usize {
        self.dim
    }

    /// Number of basis elements.
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Matrix] {
        &self.basis
    }

    pub fn coordinates(&self, m: &Matrix) -> Option<Vec<Scalar>> {
        if m.field() != self.field || m.rows() != self.dim || m.cols() != self.dim {
            return None;
        }
        self.span.coordinates(m.entries())
    }

    pub fn element(&self, coords: &[Scalar]) -> Matrix {
        coords
            .iter()
            .zip(&self.basis)
            .filter(|(c, _)| !c.is_zero())
            .fold(Matrix::zeros(self.field, self.dim, self.dim), |acc, (c, b)| {
                &acc + &b.scale(c)
            })
    }

    fn mul_coords(&self, a: &[Scalar], b: &[Scalar]) -> Vec<Scalar> {
        let mut out = vec![Scalar::zero(self.field); self.rank()];
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                if bj.is_zero() {
                    continue;
                }
                let s = ai * bj;
                for (o, t) in out.iter_mut().zip(&self.table[i][j]) {
                    if !t.is_zero() {
                        *o = &*o + &(&s * t);
                    }
                }
            }
        }
        out
    }

    /// `λ I + r` as a matrix.
    pub fn embed(&self, a: &UnitalElement) -> Matrix {
        &Matrix::scalar_identity(&a.lambda, self.dim) + &self.element(&a.r)
    }

    /// Writes `m` as `λ I + r` with `r ∈ R`. When `I ∈ R` the split is not
    /// unique and `λ = 0` is chosen.
    pub fn decompose(&self, m: &Matrix) -> Option<UnitalElement> {
        if let Some(r) = self.coordinates(m) {
            return Some(UnitalElement {
                lambda: Scalar::zero(self.field),
                r,
            });
        }
        if m.rows() != self.dim || m.cols() != self.dim || m.field() != self.field {
            return None;
        }
        let id = Matrix::identity(self.field, self.dim);
        if self.span.contains(id.entries()) {
            return None;
        }
        let mut tracked = ReducedSpan::with_coordinates(self.field, self.dim * self.dim);
        for b in &self.basis {
            tracked.insert(b.entries());
        }
        tracked.insert(id.entries());
        let coords = tracked.coordinates(m.entries())?;
        let (r, lambda) = coords.split_at(self.rank());
        Some(UnitalElement {
            lambda: lambda[0].clone(),
            r: r.to_vec(),
        })
    }

    fn compatible(&self, a: &UnitalElement) -> bool {
        a.lambda.field() == self.field && a.r.len() == self.rank()
    }
}

/// `λ·1 + r` in `R#`, with `r` in coordinates of the ring basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UnitalElement {
    lambda: Scalar,
    r: Vec<Scalar>,
}

impl UnitalElement {
    pub fn new(lambda: Scalar, r: Vec<Scalar>) -> Result<Self> {
        if let Some(bad) = r.iter().find(|s| s.field() != lambda.field()) {
            return Err(Error::FieldMismatch(lambda.field(), bad.field()));
        }
        Ok(UnitalElement { lambda, r })
    }

    pub fn zero(ring: &CoefficientRing) -> Self {
        Self::scalar(ring, Scalar::zero(ring.field))
    }

    pub fn one(ring: &CoefficientRing) -> Self {
        Self::scalar(ring, Scalar::one(ring.field))
    }

    pub fn scalar(ring: &CoefficientRing, lambda: Scalar) -> Self {
        UnitalElement {
            lambda,
            r: vec![Scalar::zero(ring.field); ring.rank()],
        }
    }

    /// An element of `R` (no unit part).
    pub fn from_ring(ring: &CoefficientRing, r: Vec<Scalar>) -> Result<Self> {
        if r.len() != ring.rank() {
            return Err(Error::RingMismatch(format!(
                "{} coordinates for a ring of rank {}",
                r.len(),
                ring.rank()
            )));
        }
        Self::new(Scalar::zero(ring.field), r)
    }

    pub fn from_matrix(ring: &CoefficientRing, m: &Matrix) -> Result<Self> {
        ring.decompose(m)
            .ok_or_else(|| Error::NotInSpan(format!("{m} is not in R#")))
    }

    pub fn lambda(&self) -> &Scalar {
        &self.lambda
    }

    pub fn ring_part(&self) -> &[Scalar] {
        &self.r
    }

    pub fn is_zero(&self) -> bool {
        self.lambda.is_zero() && self.r.iter().all(Scalar::is_zero)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.lambda.field() != other.lambda.field() || self.r.len() != other.r.len() {
            return Err(Error::RingMismatch(
                "coefficients from different rings".into(),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(UnitalElement {
            lambda: &self.lambda + &other.lambda,
            r: self.r.iter().zip(&other.r).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Scalar::one(self.lambda.field()))
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        UnitalElement {
            lambda: &self.lambda * s,
            r: self.r.iter().map(|a| a * s).collect(),
        }
    }

    /// `(λ, r)(μ, s) = (λμ, λs + μr + rs)`.
    pub fn mul(&self, other: &Self, ring: &CoefficientRing) -> Result<Self> {
        self.check(other)?;
        if !ring.compatible(self) {
            return Err(Error::RingMismatch("coefficient not in this ring".into()));
        }
        let rs = ring.mul_coords(&self.r, &other.r);
        Ok(UnitalElement {
            lambda: &self.lambda * &other.lambda,
            r: rs
                .into_iter()
                .zip(self.r.iter().zip(&other.r))
                .map(|(p, (a, b))| p + &self.lambda * b + &other.lambda * a)
                .collect(),
        })
    }
}

/// A derivation of `R`, extended to `R#` by `δ(1) = 0`.
#[derive(Clone, Debug)]
pub struct Derivation {
    ring: Arc<CoefficientRing>,
    // column j = coordinates of δ(basis[j])
    map: Matrix,
}

impl Derivation {
    /// A linear map given in ring coordinates; the Leibniz rule is checked on
    /// every ordered pair of basis elements.
    pub fn new(ring: Arc<CoefficientRing>, map: Matrix) -> Result<Self> {
        let k = ring.rank();
        if map.rows() != k || map.cols() != k {
            return Err(Error::DimensionMismatch(format!(
                "derivation matrix {}x{} for a ring of rank {k}",
                map.rows(),
                map.cols()
            )));
        }
        if k > 0 && map.field() != ring.field {
            return Err(Error::FieldMismatch(ring.field, map.field()));
        }
        let delta = Derivation { ring, map };
        delta.check_leibniz()?;
        Ok(delta)
    }

    pub fn zero(ring: Arc<CoefficientRing>) -> Self {
        let k = ring.rank();
        let map = Matrix::zeros(ring.field, k, k);
        Derivation { ring, map }
    }

    /// `δ(a) = x a - a x`; fails if some commutator leaves `R`.
    pub fn inner(ring: Arc<CoefficientRing>, x: &Matrix) -> Result<Self> {
        if x.field() != ring.field || x.rows() != ring.dim || x.cols() != ring.dim {
            return Err(Error::DimensionMismatch(
                "x must be a square matrix over the ring's field".into(),
            ));
        }
        let columns = ring
            .basis
            .iter()
            .enumerate()
            .map(|(index, b)| {
                ring.coordinates(&(&(x * b) - &(b * x)))
                    .ok_or(Error::NotClosed { index })
            })
            .collect::<Result<Vec<_>>>()?;
        let map = Matrix::from_columns(ring.field, ring.rank(), &columns);
        Derivation::new(ring, map)
    }

    fn check_leibniz(&self) -> Result<()> {
        let ring = &self.ring;
        let k = ring.rank();
        let unit = |i: usize| -> Vec<Scalar> {
            (0..k)
                .map(|t| {
                    if t == i {
                        Scalar::one(ring.field)
                    } else {
                        Scalar::zero(ring.field)
                    }
                })
                .collect()
        };
        for i in 0..k {
            for j in 0..k {
                let lhs = self.apply_coords(&ring.table[i][j]);
                let left = ring.mul_coords(&self.map.column(i), &unit(j));
                let right = ring.mul_coords(&unit(i), &self.map.column(j));
                let rhs: Vec<Scalar> = left.iter().zip(&right).map(|(a, b)| a + b).collect();
                if lhs != rhs {
                    return Err(Error::NotDerivation(i, j));
                }
            }
        }
        Ok(())
    }

    pub fn ring(&self) -> &Arc<CoefficientRing> {
        &self.ring
    }

    /// Matrix of δ in ring coordinates.
    pub fn map(&self) -> &Matrix {
        &self.map
    }

    fn apply_coords(&self, r: &[Scalar]) -> Vec<Scalar> {
        if r.is_empty() {
            return Vec::new();
        }
        self.map.mul_vec(r).expect("coordinate length")
    }

    pub fn apply(&self, a: &UnitalElement) -> UnitalElement {
        UnitalElement {
            lambda: Scalar::zero(self.ring.field),
            r: self.apply_coords(&a.r),
        }
    }

    /// `δ^m(a)`.
    pub fn apply_pow(&self, a: &UnitalElement, m: usize) -> UnitalElement {
        (0..m).fold(a.clone(), |acc, _| self.apply(&acc))
    }

    /// `δ^0(a), ..., δ^m(a)`.
    fn powers(&self, a: &UnitalElement, m: usize) -> Vec<UnitalElement> {
        let mut out = Vec::with_capacity(m + 1);
        out.push(a.clone());
        for t in 0..m {
            let next = self.apply(&out[t]);
            out.push(next);
        }
        out
    }
}

/// `sum X^i a_i`, trailing zeros trimmed; the zero polynomial has no coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct OrePoly {
    coeffs: Vec<UnitalElement>,
}

impl OrePoly {
    pub fn zero() -> Self {
        OrePoly { coeffs: Vec::new() }
    }

    pub fn from_coeffs(coeffs: Vec<UnitalElement>) -> Result<Self> {
        if let Some(first) = coeffs.first() {
            for c in &coeffs[1..] {
                first.check(c)?;
            }
        }
        let mut p = OrePoly { coeffs };
        p.trim();
        Ok(p)
    }

    pub fn constant(a: UnitalElement) -> Self {
        let mut p = OrePoly { coeffs: vec![a] };
        p.trim();
        p
    }

    /// `X^i a`.
    pub fn monomial(i: usize, a: UnitalElement) -> Self {
        let zero = a.scale(&Scalar::zero(a.lambda.field()));
        let mut coeffs = vec![zero; i];
        coeffs.push(a);
        let mut p = OrePoly { coeffs };
        p.trim();
        p
    }

    /// The indeterminate `X`.
    pub fn x(ring: &CoefficientRing) -> Self {
        Self::monomial(1, UnitalElement::one(ring))
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(UnitalElement::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[UnitalElement] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Option<&UnitalElement> {
        self.coeffs.get(i)
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let (long, short) = if self.coeffs.len() >= other.coeffs.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut coeffs = long.coeffs.clone();
        for (c, s) in coeffs.iter_mut().zip(&short.coeffs) {
            *c = c.add(s)?;
        }
        let mut p = OrePoly { coeffs };
        p.trim();
        Ok(p)
    }

    pub fn neg(&self) -> Self {
        OrePoly {
            coeffs: self.coeffs.iter().map(UnitalElement::neg).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: &Scalar) -> Self {
        let mut p = OrePoly {
            coeffs: self.coeffs.iter().map(|c| c.scale(s)).collect(),
        };
        p.trim();
        p
    }

    /// Ascending-power text form, coefficients embedded as matrices:
    /// `A0 + X*A1 + X^2*A2`; zero coefficients are skipped.
    pub fn display(&self, ring: &CoefficientRing) -> String {
        let mut out = String::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !out.is_empty() {
                out.push_str(" + ");
            }
            match i {
                0 => {}
                1 => out.push_str("X*"),
                _ => {
                    let _ = write!(out, "X^{i}*");
                }
            }
            let _ = write!(out, "{}", ring.embed(c));
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }
}

fn signed_binomial(field: Field, j: usize, k: usize) -> Scalar {
    let c = binomial_scalar(field, j as u64, k as u64);
    if (j - k) % 2 == 1 {
        -c
    } else {
        c
    }
}

/// Normal form of `a X^j`: `sum_k C(j,k) (-1)^(j-k) X^k δ^(j-k)(a)`.
pub fn move_coefficient(a: &UnitalElement, j: usize, delta: &Derivation) -> OrePoly {
    let field = a.lambda.field();
    let powers = delta.powers(a, j);
    let coeffs = (0..=j)
        .map(|k| powers[j - k].scale(&signed_binomial(field, j, k)))
        .collect();
    let mut p = OrePoly { coeffs };
    p.trim();
    p
}

/// Product in `R#[X; δ]`.
///
/// `X^i a · X^j b = sum_k C(j,k) (-1)^(j-k) X^(i+k) δ^(j-k)(a) b`; the powers
/// `δ^t(a)` are computed once per coefficient of `f`.
pub fn ore_mul(f: &OrePoly, g: &OrePoly, delta: &Derivation) -> Result<OrePoly> {
    let ring = &delta.ring;
    for c in f.coeffs.iter().chain(&g.coeffs) {
        if !ring.compatible(c) {
            return Err(Error::RingMismatch(
                "polynomial coefficient not in the derivation's ring".into(),
            ));
        }
    }
    let (Some(df), Some(dg)) = (f.degree(), g.degree()) else {
        return Ok(OrePoly::zero());
    };
    let field = ring.field;
    let mut out = vec![UnitalElement::zero(ring); df + dg + 1];
    for (i, a) in f.coeffs.iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        let powers = delta.powers(a, dg);
        for (j, b) in g.coeffs.iter().enumerate() {
            if b.is_zero() {
                continue;
            }
            for k in 0..=j {
                let c = signed_binomial(field, j, k);
                if c.is_zero() {
                    continue;
                }
                let term = powers[j - k].mul(b, ring)?.scale(&c);
                out[i + k] = out[i + k].add(&term)?;
            }
        }
    }
    let mut p = OrePoly { coeffs: out };
    p.trim();
    Ok(p)
}

/// `f^n` in `R#[X; δ]`.
pub fn ore_pow(f: &OrePoly, n: u32, delta: &Derivation) -> Result<OrePoly> {
    let mut acc = OrePoly::constant(UnitalElement::one(&delta.ring));
    for _ in 0..n {
        acc = ore_mul(&acc, f, delta)?;
    }
    Ok(acc)
}

/// Checks `x b - b x = δ(b)` on every basis element of the ring.
pub fn check_realizes(x: &Matrix, delta: &Derivation) -> Result<()> {
    let ring = &delta.ring;
    if x.field() != ring.field || x.rows() != ring.dim || x.cols() != ring.dim {
        return Err(Error::DimensionMismatch(
            "x must be a square matrix over the ring's field".into(),
        ));
    }
    for (index, b) in ring.basis.iter().enumerate() {
        let expected = ring.element(&delta.map.column(index));
        if &(x * b) - &(b * x) != expected {
            return Err(Error::DerivationMismatch { index });
        }
    }
    Ok(())
}

/// `sum x^i M(a_i)` where `M(λ, r) = λ I + r`.
///
/// Multiplicative only when `x` realizes δ; that is checked first.
pub fn evaluate(f: &OrePoly, x: &Matrix, delta: &Derivation) -> Result<Matrix> {
    check_realizes(x, delta)?;
    let ring = &delta.ring;
    let mut acc = Matrix::zeros(ring.field, ring.dim, ring.dim);
    for c in f.coeffs.iter().rev() {
        if !ring.compatible(c) {
            return Err(Error::RingMismatch("coefficient not in this ring".into()));
        }
        acc = &(x * &acc) + &ring.embed(c);
    }
    Ok(acc)
}
