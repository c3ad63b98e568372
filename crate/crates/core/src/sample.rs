//! Seeded random sampling of exact test objects.
//!
//! Every generator takes the RNG explicitly; there is no ambient entropy.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::exactnum::{Field, Scalar};
use crate::linalg::Matrix;

pub type TrialRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `index` of `seed`; streams do not depend on how many
/// values earlier streams consumed.
pub fn trial_rng(seed: u64, index: u64) -> TrialRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

/// Integer in `[-bound, bound]` mapped into the field.
pub fn random_scalar<R: Rng>(rng: &mut R, field: Field, bound: i64) -> Scalar {
    match field {
        Field::Rational => Scalar::from_i64(field, rng.gen_range(-bound..=bound)),
        Field::Prime(p) => Scalar::from_i64(field, rng.gen_range(0..p.min(i64::MAX as u64)) as i64),
    }
}

pub fn random_matrix<R: Rng>(rng: &mut R, field: Field, rows: usize, cols: usize, bound: i64) -> Matrix {
    let data = (0..rows * cols)
        .map(|_| random_scalar(rng, field, bound))
        .collect();
    Matrix::new(field, rows, cols, data).expect("shape")
}

/// Random matrix supported on `j - i >= offset` (offset 1: strictly upper).
pub fn random_banded<R: Rng>(rng: &mut R, field: Field, d: usize, offset: usize, bound: i64) -> Matrix {
    let mut m = Matrix::zeros(field, d, d);
    for i in 0..d {
        for j in (i + offset)..d {
            m.set(i, j, random_scalar(rng, field, bound));
        }
    }
    m
}

pub fn random_strictly_upper<R: Rng>(rng: &mut R, field: Field, d: usize, bound: i64) -> Matrix {
    random_banded(rng, field, d, 1, bound)
}

pub fn random_upper<R: Rng>(rng: &mut R, field: Field, d: usize, bound: i64) -> Matrix {
    random_banded(rng, field, d, 0, bound)
}

/// Random strictly upper matrix with each entry kept with probability `density`.
pub fn random_sparse_strictly_upper<R: Rng>(
    rng: &mut R,
    field: Field,
    d: usize,
    density: f64,
    bound: i64,
) -> Matrix {
    let mut m = Matrix::zeros(field, d, d);
    for i in 0..d {
        for j in (i + 1)..d {
            if rng.gen_bool(density) {
                m.set(i, j, random_scalar(rng, field, bound));
            }
        }
    }
    m
}

/// An invertible matrix with an integral inverse over Q: a row permutation of
/// a product of unit lower and unit upper triangular integer matrices.
pub fn random_invertible<R: Rng>(rng: &mut R, field: Field, d: usize) -> Matrix {
    let mut lower = Matrix::identity(field, d);
    let mut upper = Matrix::identity(field, d);
    for i in 0..d {
        for j in 0..i {
            lower.set(i, j, random_scalar(rng, field, 1));
        }
        for j in (i + 1)..d {
            upper.set(i, j, random_scalar(rng, field, 1));
        }
    }
    let mut perm: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let mut p = Matrix::zeros(field, d, d);
    for (i, &j) in perm.iter().enumerate() {
        p.set(i, j, Scalar::one(field));
    }
    &(&p * &lower) * &upper
}

/// `P diag(1,..,1,0,..,0) P^-1` with `rank` ones.
pub fn random_idempotent<R: Rng>(rng: &mut R, field: Field, d: usize, rank: usize) -> Matrix {
    let p = random_invertible(rng, field, d);
    let mut diag = Matrix::zeros(field, d, d);
    for i in 0..rank.min(d) {
        diag.set(i, i, Scalar::one(field));
    }
    &(&p * &diag) * &p.inverse().expect("invertible")
}
