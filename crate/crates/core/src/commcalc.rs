//! Iterated commutators and the identities built from them.
//!
//! Everything here is written against [`Ring`]; matrices are the shipped
//! instance. Binomial coefficients act through the ring's integer action, so
//! over F_p they are reduced mod p.

use std::fmt::Debug;

use crate::error::{Error, Result};
use crate::exactnum::binomial_scalar;
use crate::linalg::Matrix;

/// The operations the commutator calculus needs from a ring.
pub trait Ring: Clone + PartialEq + Debug {
    /// Whether the two elements live in the same ring.
    fn compatible(&self, other: &Self) -> bool;
    fn zero_like(&self) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    /// The element `C(n, j) * self`.
    fn scale_binomial(&self, n: u64, j: u64) -> Self;
    fn is_zero(&self) -> bool;
}

impl Ring for Matrix {
    fn compatible(&self, other: &Self) -> bool {
        self.field() == other.field()
            && self.is_square()
            && other.is_square()
            && self.rows() == other.rows()
    }

    fn zero_like(&self) -> Self {
        Matrix::zeros(self.field(), self.rows(), self.cols())
    }

    fn add(&self, other: &Self) -> Self {
        self + other
    }

    fn sub(&self, other: &Self) -> Self {
        self - other
    }

    fn mul(&self, other: &Self) -> Self {
        self * other
    }

    fn scale_binomial(&self, n: u64, j: u64) -> Self {
        self.scale(&binomial_scalar(self.field(), n, j))
    }

    fn is_zero(&self) -> bool {
        Matrix::is_zero(self)
    }
}

fn check<R: Ring>(a: &R, b: &R) -> Result<()> {
    if a.compatible(b) {
        Ok(())
    } else {
        Err(Error::RingMismatch(format!("{a:?} and {b:?}")))
    }
}

fn bracket<R: Ring>(a: &R, x: &R) -> R {
    a.mul(x).sub(&x.mul(a))
}

/// `[e, x]`.
pub fn commutator<R: Ring>(e: &R, x: &R) -> Result<R> {
    check(e, x)?;
    Ok(bracket(e, x))
}

/// `[e,x]_0, [e,x]_1, ..., [e,x]_n`.
pub fn commutator_sequence<R: Ring>(e: &R, x: &R, n: usize) -> Result<Vec<R>> {
    check(e, x)?;
    let mut seq = Vec::with_capacity(n + 1);
    seq.push(e.clone());
    for j in 1..=n {
        let next = bracket(&seq[j - 1], x);
        seq.push(next);
    }
    Ok(seq)
}

/// `[e,x]_n`: `[e,x]_0 = e`, `[e,x]_j = [[e,x]_(j-1), x]`.
pub fn iterated_commutator<R: Ring>(e: &R, x: &R, n: usize) -> Result<R> {
    Ok(commutator_sequence(e, x, n)?.pop().expect("nonempty"))
}

/// `sum_j C(n,j) x^j [e,x]_(n-j)`, which equals `e x^n`.
///
/// The equality is not assumed here; callers compare against `e x^n`.
pub fn leibniz_expand<R: Ring>(e: &R, x: &R, n: usize) -> Result<R> {
    let seq = commutator_sequence(e, x, n)?;
    let mut acc = e.zero_like();
    let mut x_pow: Option<R> = None;
    for j in 0..=n {
        let term = match &x_pow {
            None => seq[n - j].clone(),
            Some(p) => p.mul(&seq[n - j]),
        };
        acc = acc.add(&term.scale_binomial(n as u64, j as u64));
        x_pow = Some(match x_pow {
            None => x.clone(),
            Some(p) => p.mul(x),
        });
    }
    Ok(acc)
}

/// `[ab, x]_m` expanded as `sum_j C(m,j) [a,x]_j [b,x]_(m-j)`.
pub fn product_leibniz<R: Ring>(a: &R, b: &R, x: &R, m: usize) -> Result<R> {
    check(a, b)?;
    let ca = commutator_sequence(a, x, m)?;
    let cb = commutator_sequence(b, x, m)?;
    Ok((0..=m).fold(a.zero_like(), |acc, j| {
        acc.add(&ca[j].mul(&cb[m - j]).scale_binomial(m as u64, j as u64))
    }))
}

/// Coefficients `r_0..r_n` with `[e,x]_n = sum_i r_i e [e,x]_i` for an idempotent `e`.
///
/// Degree 0 takes `r_0 = e`. For `k >= 1`, write `[e,x]_k = [[e,x]e + e[e,x], x]_(k-1)`
/// and expand both halves with [`product_leibniz`]:
///
/// ```text
/// sum_j C(k-1,j) [e,x]_(j+1) [e,x]_(k-1-j)  +  sum_j C(k-1,j) [e,x]_(k-1-j) [e,x]_(j+1)
/// ```
///
/// The term `[e,x]_k e` goes to `r_0` as `[e,x]_k` and `e [e,x]_k` goes to
/// `r_k` as `e`. Every other term is `L [e,x]_m` with `1 <= m <= k-1`; it is
/// replaced by `sum_i (L r_i^(m)) e [e,x]_i` using the already computed
/// decomposition of degree `m`. Lower degrees are computed once, bottom up.
pub fn lemma2_decompose<R: Ring>(e: &R, x: &R, n: usize) -> Result<Vec<R>> {
    check(e, x)?;
    if e.mul(e) != *e {
        return Err(Error::NotIdempotent);
    }
    let c = commutator_sequence(e, x, n)?;
    let zero = e.zero_like();
    let mut table: Vec<Vec<R>> = vec![vec![e.clone()]];
    for k in 1..=n {
        let mut r = vec![zero.clone(); k + 1];
        let absorb = |r: &mut Vec<R>, coeff: (u64, u64), left: &R, m: usize, table: &Vec<Vec<R>>| {
            for (i, rm) in table[m].iter().enumerate() {
                let term = left.mul(rm).scale_binomial(coeff.0, coeff.1);
                r[i] = r[i].add(&term);
            }
        };
        let km1 = (k - 1) as u64;
        // [[e,x] e, x]_(k-1): left factor [e,x]_(j+1), right factor [e,x]_(k-1-j)
        for j in 0..k {
            let m = k - 1 - j;
            if m == 0 {
                r[0] = r[0].add(&c[k].scale_binomial(km1, j as u64));
            } else {
                absorb(&mut r, (km1, j as u64), &c[j + 1], m, &table);
            }
        }
        // [e [e,x], x]_(k-1): left factor [e,x]_(k-1-j), right factor [e,x]_(j+1)
        for j in 0..k {
            let m = j + 1;
            if m == k {
                r[k] = r[k].add(&e.scale_binomial(km1, j as u64));
            } else {
                absorb(&mut r, (km1, j as u64), &c[k - 1 - j], m, &table);
            }
        }
        table.push(r);
    }
    Ok(table.pop().expect("nonempty"))
}

/// `sum_i r_i e [e,x]_i`, the right-hand side of the decomposition.
pub fn recombine<R: Ring>(coeffs: &[R], e: &R, x: &R) -> Result<R> {
    check(e, x)?;
    let n = coeffs.len().saturating_sub(1);
    let c = commutator_sequence(e, x, n)?;
    Ok(coeffs
        .iter()
        .zip(&c)
        .fold(e.zero_like(), |acc, (r, ci)| acc.add(&r.mul(e).mul(ci))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::Field;
    use crate::sample::{random_idempotent, random_matrix, rng};
    use rand::Rng;

    const Q: Field = Field::Rational;

    fn e(d: usize, i: usize, j: usize) -> Matrix {
        Matrix::unit(Q, d, i, j)
    }

    #[test]
    fn iterated_commutator_examples() {
        let a = e(2, 0, 0);
        let x = e(2, 0, 1);
        assert_eq!(iterated_commutator(&a, &x, 0).unwrap(), a);
        // E11 E12 - E12 E11 = E12 - 0
        assert_eq!(iterated_commutator(&a, &x, 1).unwrap(), e(2, 0, 1));
        // [E12, E12] = 0
        assert!(iterated_commutator(&a, &x, 2).unwrap().is_zero());
        let id = Matrix::identity(Q, 2);
        assert!(iterated_commutator(&id, &x, 1).unwrap().is_zero());
        assert!(matches!(
            iterated_commutator(&a, &e(3, 0, 1), 1),
            Err(Error::RingMismatch(_))
        ));
    }

    #[test]
    fn leibniz_examples() {
        let a = e(2, 0, 0);
        let x = e(2, 0, 1);
        assert_eq!(leibniz_expand(&a, &x, 0).unwrap(), a);
        assert_eq!(leibniz_expand(&a, &x, 1).unwrap(), &a * &x);
        // E11 * E12^2 = E11 * 0
        assert!(leibniz_expand(&a, &x, 2).unwrap().is_zero());
    }

    #[test]
    fn leibniz_matches_direct_power_over_several_fields() {
        let mut r = rng(1);
        for field in [Q, Field::Prime(2), Field::Prime(3), Field::Prime(7)] {
            for n in 0..=8 {
                for _ in 0..10 {
                    let d = r.gen_range(2..=4);
                    let a = random_matrix(&mut r, field, d, d, 3);
                    let x = random_matrix(&mut r, field, d, d, 3);
                    assert_eq!(
                        leibniz_expand(&a, &x, n).unwrap(),
                        &a * &x.pow(n as u32).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn product_leibniz_matches_direct_commutator() {
        let mut r = rng(2);
        for _ in 0..40 {
            let d = r.gen_range(2..=4);
            let field = if r.gen_bool(0.5) { Q } else { Field::Prime(5) };
            let a = random_matrix(&mut r, field, d, d, 2);
            let b = random_matrix(&mut r, field, d, d, 2);
            let x = random_matrix(&mut r, field, d, d, 2);
            let m = r.gen_range(0..=5);
            assert_eq!(
                product_leibniz(&a, &b, &x, m).unwrap(),
                iterated_commutator(&(&a * &b), &x, m).unwrap()
            );
        }
    }

    #[test]
    fn commutator_is_bilinear_in_first_argument() {
        let mut r = rng(3);
        for _ in 0..30 {
            let d = r.gen_range(2..=4);
            let a = random_matrix(&mut r, Q, d, d, 3);
            let b = random_matrix(&mut r, Q, d, d, 3);
            let x = random_matrix(&mut r, Q, d, d, 3);
            let n = r.gen_range(0..=4);
            assert_eq!(
                iterated_commutator(&(&a + &b), &x, n).unwrap(),
                &iterated_commutator(&a, &x, n).unwrap() + &iterated_commutator(&b, &x, n).unwrap()
            );
        }
    }

    #[test]
    fn lemma2_explicit_low_degrees() {
        let mut r = rng(4);
        let p = random_idempotent(&mut r, Q, 3, 1);
        let x = random_matrix(&mut r, Q, 3, 3, 2);
        assert_eq!(lemma2_decompose(&p, &x, 0).unwrap(), vec![p.clone()]);
        let c1 = commutator(&p, &x).unwrap();
        assert_eq!(lemma2_decompose(&p, &x, 1).unwrap(), vec![c1, p.clone()]);
    }

    #[test]
    fn lemma2_substitution_holds() {
        let mut r = rng(5);
        for field in [Q, Field::Prime(2), Field::Prime(5)] {
            for n in 0..=6 {
                for _ in 0..5 {
                    let d = r.gen_range(2..=4);
                    let rank = r.gen_range(0..=d);
                    let p = random_idempotent(&mut r, field, d, rank);
                    let x = random_matrix(&mut r, field, d, d, 2);
                    let coeffs = lemma2_decompose(&p, &x, n).unwrap();
                    assert_eq!(coeffs.len(), n + 1);
                    assert_eq!(
                        recombine(&coeffs, &p, &x).unwrap(),
                        iterated_commutator(&p, &x, n).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn lemma2_rejects_non_idempotent() {
        let a = e(2, 0, 1);
        assert_eq!(
            lemma2_decompose(&a, &e(2, 1, 0), 2).unwrap_err(),
            Error::NotIdempotent
        );
    }
}
