use crate::exactnum::{Field, Scalar};

/// Incrementally maintained span of vectors in `K^len`.
///
/// Stored rows are fully reduced (each pivot column is zero in every other
/// row), so reduction against them is order-independent. When coordinate
/// tracking is on, each row also remembers itself as a combination of the
/// accepted (independent) input vectors, which gives exact coordinates for any
/// member of the span.
#[derive(Clone, Debug)]
pub struct ReducedSpan {
    field: Field,
    len: usize,
    rows: Vec<Row>,
    track: bool,
}

#[derive(Clone, Debug)]
struct Row {
    pivot: usize,
    vec: Vec<Scalar>,
    combo: Vec<Scalar>,
}

impl ReducedSpan {
    pub fn new(field: Field, len: usize) -> Self {
        ReducedSpan {
            field,
            len,
            rows: Vec::new(),
            track: false,
        }
    }

    pub fn with_coordinates(field: Field, len: usize) -> Self {
        ReducedSpan {
            track: true,
            ..Self::new(field, len)
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn vector_len(&self) -> usize {
        self.len
    }

    /// Remainder of `v` after reduction, with the combination of accepted
    /// vectors that was subtracted.
    fn reduce(&self, v: &[Scalar]) -> (Vec<Scalar>, Vec<Scalar>) {
        assert_eq!(v.len(), self.len, "vector length");
        let mut r = v.to_vec();
        let mut combo = if self.track {
            vec![Scalar::zero(self.field); self.rows.len()]
        } else {
            Vec::new()
        };
        for row in &self.rows {
            let f = r[row.pivot].clone();
            if f.is_zero() {
                continue;
            }
            for (x, y) in r.iter_mut().zip(&row.vec) {
                if !y.is_zero() {
                    *x = &*x - &(&f * y);
                }
            }
            if self.track {
                for (c, y) in combo.iter_mut().zip(&row.combo) {
                    if !y.is_zero() {
                        *c = &*c + &(&f * y);
                    }
                }
            }
        }
        (r, combo)
    }

    pub fn contains(&self, v: &[Scalar]) -> bool {
        self.reduce(v).0.iter().all(Scalar::is_zero)
    }

    /// Coordinates of `v` with respect to the accepted vectors, in insertion
    /// order; `None` if `v` is outside the span. Requires coordinate tracking.
    pub fn coordinates(&self, v: &[Scalar]) -> Option<Vec<Scalar>> {
        assert!(self.track, "coordinate tracking is off");
        let (r, combo) = self.reduce(v);
        r.iter().all(Scalar::is_zero).then_some(combo)
    }

    /// Adds `v`; returns `true` if it was independent of the current span.
    pub fn insert(&mut self, v: &[Scalar]) -> bool {
        let (mut r, combo) = self.reduce(v);
        let Some(pivot) = r.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = r[pivot].inverse().expect("nonzero pivot");
        for x in r.iter_mut() {
            if !x.is_zero() {
                *x = &*x * &inv;
            }
        }
        let n = self.rows.len();
        let mut new_combo = Vec::new();
        if self.track {
            // new row = (e_n - combo) / pivot
            new_combo = combo.iter().map(|c| -&(c * &inv)).collect();
            new_combo.push(inv.clone());
            for row in &mut self.rows {
                row.combo.push(Scalar::zero(self.field));
            }
        }
        for row in &mut self.rows {
            let f = row.vec[pivot].clone();
            if f.is_zero() {
                continue;
            }
            for (x, y) in row.vec.iter_mut().zip(&r) {
                if !y.is_zero() {
                    *x = &*x - &(&f * y);
                }
            }
            if self.track {
                for (x, y) in row.combo.iter_mut().zip(&new_combo) {
                    if !y.is_zero() {
                        *x = &*x - &(&f * y);
                    }
                }
            }
        }
        debug_assert!(!self.track || new_combo.len() == n + 1);
        self.rows.push(Row {
            pivot,
            vec: r,
            combo: new_combo,
        });
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{random_matrix, rng};
    use rand::Rng;

    #[test]
    fn coordinates_reconstruct_members() {
        let q = Field::Rational;
        let mut r = rng(3);
        for _ in 0..100 {
            let len = r.gen_range(1..=7);
            let k = r.gen_range(1..=6);
            let m = random_matrix(&mut r, q, k, len, 3);
            let mut span = ReducedSpan::with_coordinates(q, len);
            let mut accepted = Vec::new();
            for i in 0..k {
                if span.insert(m.row(i)) {
                    accepted.push(m.row(i).to_vec());
                }
            }
            assert_eq!(span.dim(), m.rank());
            let coeffs: Vec<Scalar> = (0..accepted.len())
                .map(|_| Scalar::from_i64(q, r.gen_range(-4..=4)))
                .collect();
            let mut target = vec![Scalar::zero(q); len];
            for (c, v) in coeffs.iter().zip(&accepted) {
                for (t, x) in target.iter_mut().zip(v) {
                    *t = &*t + &(c * x);
                }
            }
            assert_eq!(span.coordinates(&target).unwrap(), coeffs);
        }
    }

    #[test]
    fn rejects_dependent_vectors() {
        let f = Field::Prime(3);
        let v = |xs: &[i64]| -> Vec<Scalar> { xs.iter().map(|&x| Scalar::from_i64(f, x)).collect() };
        let mut span = ReducedSpan::new(f, 3);
        assert!(span.insert(&v(&[1, 1, 0])));
        assert!(span.insert(&v(&[0, 1, 1])));
        assert!(!span.insert(&v(&[1, 2, 1])));
        assert!(!span.insert(&v(&[0, 0, 0])));
        assert!(span.contains(&v(&[2, 0, 1])));
        assert!(!span.contains(&v(&[0, 0, 1])));
    }
}
