//! Evaluation of parsed expressions to scalars, matrices or Ore polynomials.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};

use crate::cli::syntax::{Expr, Literal};
use crate::error::{Error, Result};
use crate::exactnum::{Field, Scalar};
use crate::linalg::Matrix;
use crate::orepoly::{ore_mul, ore_pow, CoefficientRing, Derivation, OrePoly, UnitalElement};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Scalar(Scalar),
    Matrix(Matrix),
    Poly(OrePoly),
}

/// Field, matrix size, named bindings and, optionally, the coefficient ring
/// with its derivation (needed for `X` and `d(..)`).
#[derive(Clone, Debug)]
pub struct Env {
    pub field: Field,
    pub dim: usize,
    pub bindings: BTreeMap<String, Value>,
    pub derivation: Option<Derivation>,
}

fn eval_err(msg: impl Into<String>) -> Error {
    Error::Eval(msg.into())
}

impl Env {
    pub fn new(field: Field, dim: usize) -> Self {
        Env {
            field,
            dim,
            bindings: BTreeMap::new(),
            derivation: None,
        }
    }

    pub fn bind(&mut self, name: impl Into<String>, value: Value) {
        self.bindings.insert(name.into(), value);
    }

    fn ring(&self) -> Result<&Arc<CoefficientRing>> {
        self.derivation
            .as_ref()
            .map(Derivation::ring)
            .ok_or_else(|| eval_err("X and d(..) need a coefficient ring and derivation"))
    }

    fn delta(&self) -> Result<&Derivation> {
        self.derivation
            .as_ref()
            .ok_or_else(|| eval_err("X and d(..) need a coefficient ring and derivation"))
    }

    fn literal(&self, lit: &Literal, negative: bool) -> Result<Scalar> {
        if let Some(p) = lit.modulus {
            if self.field != Field::Prime(p) {
                return Err(eval_err(format!(
                    "literal `{lit}` does not belong to {}",
                    self.field
                )));
            }
        }
        let mut numer = BigInt::from(lit.numer.clone());
        if negative {
            numer = -numer;
        }
        let denom = BigInt::from(lit.denom.clone().unwrap_or(BigUint::from(1u32)));
        Scalar::fraction(self.field, &numer, &denom)
            .map_err(|e| eval_err(format!("literal `{lit}`: {e}")))
    }

    pub fn eval(&self, expr: &Expr) -> Result<Value> {
        Ok(match expr {
            Expr::Scalar(lit) => Value::Scalar(self.literal(lit, false)?),
            Expr::Matrix(rows) => {
                let rows = rows
                    .iter()
                    .map(|r| r.iter().map(|e| self.literal(&e.value, e.negative)).collect())
                    .collect::<Result<Vec<Vec<Scalar>>>>()?;
                Value::Matrix(Matrix::from_rows(rows)?)
            }
            Expr::Var(name) => self
                .bindings
                .get(name)
                .cloned()
                .ok_or_else(|| Error::UnknownIdentifier(name.clone()))?,
            Expr::X => Value::Poly(OrePoly::x(self.ring()?)),
            Expr::Neg(a) => self.neg(self.eval(a)?)?,
            Expr::Add(a, b) => self.add(self.eval(a)?, self.eval(b)?)?,
            Expr::Sub(a, b) => {
                let b = self.neg(self.eval(b)?)?;
                self.add(self.eval(a)?, b)?
            }
            Expr::Mul(a, b) => self.mul(self.eval(a)?, self.eval(b)?)?,
            Expr::Pow(a, n) => self.pow(self.eval(a)?, *n)?,
            Expr::Commutator(a, b) => self.commutator(self.eval(a)?, self.eval(b)?)?,
            Expr::Ad(e, x, n) => {
                let (mut acc, x) = (self.eval(e)?, self.eval(x)?);
                for _ in 0..*n {
                    acc = self.commutator(acc, x.clone())?;
                }
                acc
            }
            Expr::Deriv(a) => {
                let delta = self.delta()?;
                let u = self.to_unital(self.eval(a)?)?;
                Value::Matrix(delta.ring().embed(&delta.apply(&u)))
            }
        })
    }

    /// Coerces a scalar `s` to `s I` and checks the matrix shape.
    pub fn to_matrix(&self, v: Value) -> Result<Matrix> {
        match v {
            Value::Scalar(s) => Ok(Matrix::scalar_identity(&s, self.dim)),
            Value::Matrix(m) if m.rows() == self.dim && m.cols() == self.dim => Ok(m),
            Value::Matrix(m) => Err(Error::DimensionMismatch(format!(
                "expected a {0}x{0} matrix, got {1}x{2}",
                self.dim,
                m.rows(),
                m.cols()
            ))),
            Value::Poly(_) => Err(eval_err("expected a matrix, got a polynomial")),
        }
    }

    fn to_unital(&self, v: Value) -> Result<UnitalElement> {
        let ring = self.ring()?;
        match v {
            Value::Scalar(s) => Ok(UnitalElement::scalar(ring, s)),
            Value::Matrix(m) => UnitalElement::from_matrix(ring, &self.to_matrix(Value::Matrix(m))?),
            Value::Poly(_) => Err(eval_err("expected a coefficient, got a polynomial")),
        }
    }

    pub fn to_poly(&self, v: Value) -> Result<OrePoly> {
        match v {
            Value::Poly(p) => Ok(p),
            other => Ok(OrePoly::constant(self.to_unital(other)?)),
        }
    }

    fn neg(&self, v: Value) -> Result<Value> {
        Ok(match v {
            Value::Scalar(s) => Value::Scalar(-&s),
            Value::Matrix(m) => Value::Matrix(-&m),
            Value::Poly(p) => Value::Poly(p.neg()),
        })
    }

    fn add(&self, a: Value, b: Value) -> Result<Value> {
        Ok(match (a, b) {
            (Value::Scalar(a), Value::Scalar(b)) => Value::Scalar(a.checked_add(&b)?),
            (Value::Matrix(a), Value::Matrix(b)) => Value::Matrix(a.checked_add(&b)?),
            (a @ Value::Poly(_), b) | (a, b @ Value::Poly(_)) => {
                Value::Poly(self.to_poly(a)?.add(&self.to_poly(b)?)?)
            }
            (a, b) => Value::Matrix(self.to_matrix(a)?.checked_add(&self.to_matrix(b)?)?),
        })
    }

    fn mul(&self, a: Value, b: Value) -> Result<Value> {
        Ok(match (a, b) {
            (Value::Scalar(a), Value::Scalar(b)) => Value::Scalar(a.checked_mul(&b)?),
            (Value::Scalar(s), Value::Matrix(m)) | (Value::Matrix(m), Value::Scalar(s)) => {
                if s.field() != m.field() {
                    return Err(Error::FieldMismatch(m.field(), s.field()));
                }
                Value::Matrix(m.scale(&s))
            }
            (Value::Matrix(a), Value::Matrix(b)) => Value::Matrix(a.checked_mul(&b)?),
            (a, b) => {
                let (f, g) = (self.to_poly(a)?, self.to_poly(b)?);
                Value::Poly(ore_mul(&f, &g, self.delta()?)?)
            }
        })
    }

    fn pow(&self, a: Value, n: u32) -> Result<Value> {
        Ok(match a {
            Value::Scalar(s) => Value::Scalar(s.pow(n as u64)),
            Value::Matrix(m) => Value::Matrix(m.pow(n)?),
            Value::Poly(p) => Value::Poly(ore_pow(&p, n, self.delta()?)?),
        })
    }

    fn commutator(&self, a: Value, b: Value) -> Result<Value> {
        let ab = self.mul(a.clone(), b.clone())?;
        let ba = self.mul(b, a)?;
        self.add(ab, self.neg(ba)?)
    }

    /// Text that parses and evaluates back to `v` in this environment.
    pub fn show(&self, v: &Value) -> String {
        match v {
            Value::Poly(p) => match self.ring() {
                Ok(ring) => p.display(ring),
                Err(_) => format!("{p:?}"),
            },
            other => other.to_string(),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Scalar(s) => write!(f, "{s}"),
            Value::Matrix(m) => write!(f, "{m}"),
            Value::Poly(p) => write!(f, "{p:?}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::syntax::parse;
    use crate::sample::{random_matrix, random_scalar, random_upper, rng};

    const Q: Field = Field::Rational;

    fn env3() -> Env {
        let d = 3;
        let basis = vec![Matrix::unit(Q, d, 0, 1), Matrix::unit(Q, d, 0, 2), Matrix::unit(Q, d, 1, 2)];
        let ring = Arc::new(CoefficientRing::new(Q, d, basis).unwrap());
        let x = Matrix::from_ints(Q, &[&[1, 2, 0], &[0, 0, 1], &[0, 0, -1]]);
        let mut env = Env::new(Q, d);
        env.derivation = Some(Derivation::inner(ring, &x).unwrap());
        env.bind("x", Value::Matrix(x));
        env.bind("a", Value::Matrix(Matrix::unit(Q, d, 0, 1)));
        env.bind("b", Value::Matrix(Matrix::unit(Q, d, 1, 2)));
        env
    }

    fn ev(env: &Env, text: &str) -> Value {
        env.eval(&parse(text).unwrap()).unwrap()
    }

    #[test]
    fn scalars_and_matrices() {
        let env = Env::new(Q, 2);
        assert_eq!(ev(&env, "1/2 + 1/3").to_string(), "5/6");
        assert_eq!(ev(&env, "[[1,2],[3,4]]*[[0,1],[1,0]]").to_string(), "[[2,1],[4,3]]");
        assert_eq!(ev(&env, "2 + [[0,1],[0,0]]").to_string(), "[[2,1],[0,2]]");
        assert_eq!(ev(&env, "[[[0,1],[0,0]],[[0,0],[1,0]]]").to_string(), "[[1,0],[0,-1]]");
        assert_eq!(
            ev(&env, "ad([[0,1],[0,0]],[[1,0],[0,0]],3)").to_string(),
            "[[0,-1],[0,0]]"
        );
        let f5 = Env::new(Field::Prime(5), 2);
        assert_eq!(ev(&f5, "3 mod 5 * 2").to_string(), "1 mod 5");
        assert_eq!(ev(&f5, "1/2").to_string(), "3 mod 5");
        assert!(Env::new(Q, 2).eval(&parse("3 mod 5").unwrap()).is_err());
        assert_eq!(
            env.eval(&parse("y").unwrap()).unwrap_err(),
            Error::UnknownIdentifier("y".into())
        );
        assert!(env.eval(&parse("X").unwrap()).is_err());
    }

    #[test]
    fn ore_relation_holds() {
        let env = env3();
        // X a - a X = d(a)
        let lhs = ev(&env, "X*a - a*X");
        let rhs = env.to_poly(ev(&env, "d(a)")).unwrap();
        assert_eq!(lhs, Value::Poly(rhs));
        assert_eq!(ev(&env, "d(a)"), ev(&env, "[x,a]"));
    }

    #[test]
    fn printed_polynomials_reparse() {
        let env = env3();
        for text in ["X^2*a + X*b + a*b", "(X + a)^3", "X*a*X - 2*b", "0*X"] {
            let v = ev(&env, text);
            let shown = env.show(&v);
            let back = ev(&env, &shown);
            assert_eq!(env.to_poly(back).unwrap(), env.to_poly(v).unwrap(), "{text} -> {shown}");
        }
    }

    #[test]
    fn printed_values_reparse() {
        let mut r = rng(17);
        for field in [Q, Field::Prime(7)] {
            let env = Env::new(field, 3);
            for _ in 0..50 {
                let m = random_matrix(&mut r, field, 3, 3, 9);
                let m = match field {
                    Q => m.scale(&Scalar::fraction(Q, &3.into(), &7.into()).unwrap()),
                    _ => m,
                };
                let v = Value::Matrix(m);
                assert_eq!(ev(&env, &env.show(&v)), v);
                let s = Value::Scalar(random_scalar(&mut r, field, 100));
                assert_eq!(ev(&env, &env.show(&s)), s);
            }
        }
        let env = env3();
        let u = random_upper(&mut r, Q, 3, 3);
        assert!(env.eval(&parse(&u.to_string()).unwrap()).is_ok());
    }
}
