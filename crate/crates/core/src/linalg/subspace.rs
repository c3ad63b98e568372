use std::fmt;

use crate::error::{Error, Result};
use crate::exactnum::{Field, Scalar};

use super::Matrix;

/// A subspace of `K^d`, stored by its canonical basis.
///
/// The basis is the reduced column-echelon form: columns are ordered by pivot
/// row (lowest first), each pivot entry is 1 and every other column is zero in
/// that row. Two subspaces are equal iff their bases are equal entry-wise.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subspace {
    basis: Matrix,
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn zero(field: Field, d: usize) -> Self {
        Subspace {
            basis: Matrix::zeros(field, d, 0),
            pivots: Vec::new(),
        }
    }

    pub fn full(field: Field, d: usize) -> Self {
        Subspace {
            basis: Matrix::identity(field, d),
            pivots: (0..d).collect(),
        }
    }

    /// Span of vectors of length `d`.
    pub fn span(field: Field, d: usize, vectors: &[Vec<Scalar>]) -> Self {
        let rows = Matrix::new(
            field,
            vectors.len(),
            d,
            vectors.iter().flatten().cloned().collect(),
        )
        .expect("vectors of ambient length");
        Self::row_space(&rows)
    }

    /// Column space of `m`.
    pub fn column_space(m: &Matrix) -> Self {
        Self::row_space(&m.transpose())
    }

    fn row_space(rows: &Matrix) -> Self {
        let (r, pivots) = rows.rref();
        let k = pivots.len();
        let d = rows.cols();
        let mut basis = Matrix::zeros(rows.field(), d, k);
        for j in 0..k {
            for i in 0..d {
                basis.set(i, j, r.get(j, i).clone());
            }
        }
        Subspace { basis, pivots }
    }

    pub fn field(&self) -> Field {
        self.basis.field()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn is_full(&self) -> bool {
        self.dim() == self.ambient_dim()
    }

    /// Canonical basis, one vector per column.
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<Vec<Scalar>> {
        self.basis.columns()
    }

    fn check_ambient(&self, other: &Self) -> Result<()> {
        if self.field() != other.field() {
            return Err(Error::FieldMismatch(self.field(), other.field()));
        }
        if self.ambient_dim() != other.ambient_dim() {
            return Err(Error::DimensionMismatch(format!(
                "subspaces of K^{} and K^{}",
                self.ambient_dim(),
                other.ambient_dim()
            )));
        }
        Ok(())
    }

    pub fn contains_vector(&self, v: &[Scalar]) -> bool {
        if v.len() != self.ambient_dim() {
            return false;
        }
        // v is in the span iff it equals its own combination of the basis taken
        // from the pivot coordinates.
        let d = self.ambient_dim();
        (0..d).all(|i| {
            let projected = self
                .pivots
                .iter()
                .enumerate()
                .filter(|(j, _)| !self.basis.get(i, *j).is_zero())
                .fold(Scalar::zero(self.field()), |acc, (j, &p)| {
                    acc + &v[p] * self.basis.get(i, j)
                });
            projected == v[i]
        })
    }

    pub fn contains(&self, other: &Self) -> Result<bool> {
        self.check_ambient(other)?;
        Ok(other.basis_vectors().iter().all(|v| self.contains_vector(v)))
    }

    pub fn sum(&self, other: &Self) -> Result<Self> {
        self.check_ambient(other)?;
        let mut vectors = self.basis_vectors();
        vectors.extend(other.basis_vectors());
        Ok(Self::span(self.field(), self.ambient_dim(), &vectors))
    }

    pub fn intersect(&self, other: &Self) -> Result<Self> {
        self.check_ambient(other)?;
        let stacked = Matrix::vstack(
            self.field(),
            self.ambient_dim(),
            &[self.constraints(), other.constraints()],
        )?;
        Ok(stacked.kernel())
    }

    /// A matrix `C` with `self = ker C` (rows span the annihilator).
    pub fn constraints(&self) -> Matrix {
        let normals = self.basis.transpose().kernel();
        normals.basis.transpose()
    }

    /// `m(self)`, the image under a `rows x d` matrix.
    pub fn image(&self, m: &Matrix) -> Result<Self> {
        let img = m.checked_mul(&self.basis)?;
        Ok(Self::column_space(&img))
    }
}

/// `{v : m v ∈ w}`.
pub fn preimage(m: &Matrix, w: &Subspace) -> Result<Subspace> {
    if m.rows() != w.ambient_dim() {
        return Err(Error::DimensionMismatch(format!(
            "preimage under {}x{} of a subspace of K^{}",
            m.rows(),
            m.cols(),
            w.ambient_dim()
        )));
    }
    Ok(w.constraints().checked_mul(m)?.kernel())
}

/// `{v : m v ∈ w for every m}`, the intersection of the individual preimages.
pub fn common_preimage(ms: &[Matrix], w: &Subspace) -> Result<Subspace> {
    let c = w.constraints();
    let blocks = ms
        .iter()
        .map(|m| {
            if m.rows() != w.ambient_dim() {
                return Err(Error::DimensionMismatch("common preimage".into()));
            }
            c.checked_mul(m)
        })
        .collect::<Result<Vec<_>>>()?;
    let cols = ms.first().map_or(w.ambient_dim(), Matrix::cols);
    Ok(Matrix::vstack(w.field(), cols, &blocks)?.kernel())
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "span{:?}", self.basis.transpose().to_rows())
    }
}

/// A strictly increasing chain `0 = V_0 ⊂ V_1 ⊂ ... ⊂ V_m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Flag {
    chain: Vec<Subspace>,
}

impl Flag {
    pub fn new(chain: Vec<Subspace>) -> Result<Self> {
        let first = chain
            .first()
            .ok_or_else(|| Error::Input("empty flag".into()))?;
        if !first.is_zero() {
            return Err(Error::Input("flag must start at the zero subspace".into()));
        }
        for pair in chain.windows(2) {
            if !pair[1].contains(&pair[0])? || pair[1].dim() <= pair[0].dim() {
                return Err(Error::Input("flag is not strictly increasing".into()));
            }
        }
        Ok(Flag { chain })
    }

    pub fn ambient_dim(&self) -> usize {
        self.chain[0].ambient_dim()
    }

    pub fn levels(&self) -> &[Subspace] {
        &self.chain
    }

    /// Number of proper steps `m`.
    pub fn length(&self) -> usize {
        self.chain.len() - 1
    }

    pub fn dims(&self) -> Vec<usize> {
        self.chain.iter().map(Subspace::dim).collect()
    }

    pub fn is_complete(&self) -> bool {
        self.chain.last().is_some_and(Subspace::is_full)
    }

    pub fn image(&self, p: &Matrix) -> Result<Flag> {
        Flag::new(
            self.chain
                .iter()
                .map(|v| v.image(p))
                .collect::<Result<Vec<_>>>()?,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{random_matrix, rng};
    use rand::Rng;

    const Q: Field = Field::Rational;

    fn e(d: usize, i: usize) -> Vec<Scalar> {
        (0..d)
            .map(|k| if k == i { Scalar::one(Q) } else { Scalar::zero(Q) })
            .collect()
    }

    fn v(xs: &[i64]) -> Vec<Scalar> {
        xs.iter().map(|&x| Scalar::from_i64(Q, x)).collect()
    }

    #[test]
    fn lattice_examples() {
        let w = Subspace::span(Q, 3, &[v(&[1, 2, 3]), v(&[0, 1, 1])]);
        let zero = Subspace::zero(Q, 3);
        assert_eq!(w.sum(&zero).unwrap(), w);
        assert_eq!(w.intersect(&w).unwrap(), w);
        let x = Subspace::span(Q, 2, &[e(2, 0)]);
        let y = Subspace::span(Q, 2, &[e(2, 1)]);
        assert!(x.intersect(&y).unwrap().is_zero());
        assert!(x.sum(&y).unwrap().is_full());
        assert!(matches!(
            w.sum(&x),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn canonical_basis_shape() {
        let w = Subspace::span(Q, 3, &[v(&[2, 4, 6]), v(&[1, 3, 3]), v(&[3, 7, 9])]);
        assert_eq!(w.dim(), 2);
        assert_eq!(w.basis_vectors(), vec![v(&[1, 0, 3]), v(&[0, 1, 0])]);
        assert!(w.contains_vector(&v(&[5, -2, 15])));
        assert!(!w.contains_vector(&v(&[0, 0, 1])));
    }

    #[test]
    fn preimage_examples() {
        let n = Matrix::from_ints(Q, &[&[0, 1], &[0, 0]]);
        let full = Subspace::full(Q, 2);
        assert_eq!(preimage(&n, &full).unwrap(), full);
        let w = Subspace::span(Q, 2, &[e(2, 0)]);
        assert_eq!(preimage(&Matrix::identity(Q, 2), &w).unwrap(), w);
        // n e1 = 0 ∈ W and n e2 = e1 ∈ W
        assert_eq!(n.mul_vec(&e(2, 0)).unwrap(), v(&[0, 0]));
        assert_eq!(n.mul_vec(&e(2, 1)).unwrap(), e(2, 0));
        assert_eq!(preimage(&n, &w).unwrap(), full);
        let bad = Matrix::identity(Q, 3);
        assert!(preimage(&bad, &w).is_err());
    }

    #[test]
    fn flag_validation() {
        let z = Subspace::zero(Q, 2);
        let l = Subspace::span(Q, 2, &[e(2, 0)]);
        let f = Subspace::full(Q, 2);
        assert!(Flag::new(vec![z.clone(), l.clone(), f.clone()]).is_ok());
        assert!(Flag::new(vec![z.clone(), l.clone(), l.clone()]).is_err());
        assert!(Flag::new(vec![l.clone(), f.clone()]).is_err());
        let other = Subspace::span(Q, 2, &[e(2, 1)]);
        assert!(Flag::new(vec![z, other, l, f]).is_err());
    }

    #[test]
    fn randomized_invariants() {
        let mut r = rng(11);
        for _ in 0..200 {
            let d = r.gen_range(1..=6);
            let rows = r.gen_range(1..=6);
            let m = random_matrix(&mut r, Q, rows, d, 2);
            let k = m.kernel();
            // rank-nullity
            assert_eq!(k.dim() + m.rank(), d);
            for b in k.basis_vectors() {
                assert!(m.mul_vec(&b).unwrap().iter().all(Scalar::is_zero));
            }
            // canonical forms are fixed points
            let again = Subspace::span(Q, d, &k.basis_vectors());
            assert_eq!(again, k);

            let sq = random_matrix(&mut r, Q, d, d, 1);
            let k = r.gen_range(0..=d);
            let wgen = random_matrix(&mut r, Q, d, k, 2);
            let w = Subspace::column_space(&wgen);
            let u = preimage(&sq, &w).unwrap();
            assert!(u.contains(&sq.kernel()).unwrap());
            for b in u.basis_vectors() {
                assert!(w.contains_vector(&sq.mul_vec(&b).unwrap()));
            }
            // maximality: any coordinate vector outside U maps outside W
            for i in 0..d {
                let ei = e(d, i);
                if !u.contains_vector(&ei) {
                    assert!(!w.contains_vector(&sq.mul_vec(&ei).unwrap()));
                }
            }
            let k2 = r.gen_range(0..=d);
            let w2 = Subspace::column_space(&random_matrix(&mut r, Q, d, k2, 2));
            let meet = w.intersect(&w2).unwrap();
            let join = w.sum(&w2).unwrap();
            assert_eq!(meet.dim() + join.dim(), w.dim() + w2.dim());
            assert!(w.contains(&meet).unwrap() && w2.contains(&meet).unwrap());
            assert!(join.contains(&w).unwrap() && join.contains(&w2).unwrap());
            assert_eq!(Subspace::span(Q, d, &meet.basis_vectors()), meet);
        }
    }

    #[test]
    fn conjugation_is_multiplicative() {
        let mut r = rng(5);
        for _ in 0..50 {
            let d = r.gen_range(1..=5);
            let p = crate::sample::random_invertible(&mut r, Q, d);
            let a = random_matrix(&mut r, Q, d, d, 3);
            let b = random_matrix(&mut r, Q, d, d, 3);
            let conj = |m: &Matrix| crate::linalg::change_of_basis(m, &p).unwrap();
            assert_eq!(conj(&(&a * &b)), &conj(&a) * &conj(&b));
        }
    }
}
