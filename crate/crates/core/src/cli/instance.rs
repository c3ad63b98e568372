//! Instance files.
//!
//! Plain text, one `name:` header per section. A header may carry its value
//! on the same line; list sections take one expression per indented line.
//! `#` starts a comment.
//!
//! ```text
//! field: q                 # q, or a prime such as 5 / p5 / F_5
//! dimension: 3
//! let:                     # optional named bindings, in order
//!     e12 = [[0,1,0],[0,0,0],[0,0,0]]
//! generators:              # generators of N
//!     e12
//!     [[0,0,0],[0,0,1],[0,0,0]]
//! x: [[1,0,0],[0,0,0],[0,0,-1]]
//! derivation: inner        # or `explicit`, followed by δ(g) per generator
//! coefficients:            # a_0 .. a_n, bound as a0 .. an
//!     e12
//!     0
//! polynomials:             # for `mul`
//!     X*a0 + 1
//!     X^2
//! ```
//!
//! Sections are evaluated in the order field, dimension, let, generators, x,
//! coefficients, derivation, polynomials; `x` and `a0..an` are bound once
//! evaluated. With an explicit derivation the generators must themselves be a
//! basis of the coefficient ring (independent and closed under products).

use std::path::Path;
use std::sync::Arc;

use crate::cli::eval::{Env, Value};
use crate::cli::syntax::{parse, Expr};
use crate::error::{Error, Result};
use crate::exactnum::Field;
use crate::harness::Instance;
use crate::linalg::Matrix;
use crate::nilalg::MatrixAlgebra;
use crate::orepoly::{CoefficientRing, Derivation};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DerivationSpec {
    Inner,
    /// `δ(g_i)` for each generator, in order.
    Explicit(Vec<Matrix>),
}

#[derive(Clone, Debug)]
pub struct InstanceFile {
    pub field: Field,
    pub dim: usize,
    pub generators: Vec<Matrix>,
    pub x: Matrix,
    pub coeffs: Vec<Matrix>,
    pub derivation: DerivationSpec,
    pub polynomials: Vec<Expr>,
    /// Bindings from `let`, plus `x` and `a0..an`.
    pub env: Env,
}

#[derive(Debug)]
struct Item {
    line: usize,
    column: usize,
    text: String,
}

#[derive(Debug)]
struct Section {
    name: String,
    line: usize,
    items: Vec<Item>,
}

fn at_line(line: usize, e: Error) -> Error {
    match e {
        Error::Syntax { .. } => e,
        other => Error::Input(format!("line {line}: {other}")),
    }
}

fn parse_at(item: &Item) -> Result<Expr> {
    parse(&item.text).map_err(|e| match e {
        Error::Syntax {
            line,
            column,
            message,
        } => Error::Syntax {
            line: item.line + line - 1,
            column: if line == 1 { item.column + column - 1 } else { column },
            message,
        },
        other => other,
    })
}

fn split_sections(text: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        if indent > 0 {
            let Some(section) = sections.last_mut() else {
                return Err(Error::Syntax {
                    line,
                    column: indent + 1,
                    message: "indented line outside any section".into(),
                });
            };
            section.items.push(Item {
                line,
                column: indent + 1,
                text: content.trim().to_string(),
            });
            continue;
        }
        let Some((name, rest)) = content.split_once(':') else {
            return Err(Error::Syntax {
                line,
                column: 1,
                message: "expected `name:` section header".into(),
            });
        };
        let name = name.trim().to_string();
        if sections.iter().any(|s| s.name == name) {
            return Err(Error::Input(format!("line {line}: duplicate section `{name}`")));
        }
        let mut section = Section {
            name,
            line,
            items: Vec::new(),
        };
        if !rest.trim().is_empty() {
            let column = content.len() - rest.trim_start().len() + 1;
            section.items.push(Item {
                line,
                column,
                text: rest.trim().to_string(),
            });
        }
        sections.push(section);
    }
    Ok(sections)
}

const KNOWN: [&str; 8] = [
    "field",
    "dimension",
    "let",
    "generators",
    "x",
    "coefficients",
    "derivation",
    "polynomials",
];

impl InstanceFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let sections = split_sections(text)?;
        if let Some(s) = sections.iter().find(|s| !KNOWN.contains(&s.name.as_str())) {
            return Err(Error::Input(format!("line {}: unknown section `{}`", s.line, s.name)));
        }
        let get = |name: &str| sections.iter().find(|s| s.name == name);
        let single = |name: &str| -> Result<Option<&Item>> {
            match get(name) {
                None => Ok(None),
                Some(s) if s.items.len() == 1 => Ok(Some(&s.items[0])),
                Some(s) => Err(Error::Input(format!(
                    "line {}: section `{name}` takes exactly one value",
                    s.line
                ))),
            }
        };

        let field_item = single("field")?.ok_or_else(|| Error::Input("missing `field` section".into()))?;
        let field = Field::parse(&field_item.text).map_err(|e| at_line(field_item.line, e))?;
        let dim_item = single("dimension")?.ok_or_else(|| Error::Input("missing `dimension` section".into()))?;
        let dim: usize = dim_item
            .text
            .parse()
            .ok()
            .filter(|&d| d > 0)
            .ok_or_else(|| Error::Input(format!("line {}: dimension must be a positive integer", dim_item.line)))?;

        let mut env = Env::new(field, dim);
        let matrix = |env: &Env, item: &Item| -> Result<Matrix> {
            let e = parse_at(item)?;
            env.eval(&e)
                .and_then(|v| env.to_matrix(v))
                .map_err(|e| at_line(item.line, e))
        };

        if let Some(s) = get("let") {
            for item in &s.items {
                let Some((name, body)) = item.text.split_once('=') else {
                    return Err(Error::Syntax {
                        line: item.line,
                        column: item.column,
                        message: "expected `name = expression`".into(),
                    });
                };
                let name = name.trim();
                if !name.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_')
                    || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                    || matches!(name, "X" | "mod")
                {
                    return Err(Error::Syntax {
                        line: item.line,
                        column: item.column,
                        message: format!("invalid binding name `{name}`"),
                    });
                }
                let offset = item.text.len() - body.trim_start().len();
                let body_item = Item {
                    line: item.line,
                    column: item.column + offset,
                    text: body.trim().to_string(),
                };
                let v = env
                    .eval(&parse_at(&body_item)?)
                    .map_err(|e| at_line(item.line, e))?;
                env.bind(name, v);
            }
        }

        let generators = match get("generators") {
            Some(s) => s.items.iter().map(|i| matrix(&env, i)).collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        let x = match single("x")? {
            Some(item) => matrix(&env, item)?,
            None => Matrix::zeros(field, dim, dim),
        };
        env.bind("x", Value::Matrix(x.clone()));
        let coeffs = match get("coefficients") {
            Some(s) => s.items.iter().map(|i| matrix(&env, i)).collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };
        for (i, a) in coeffs.iter().enumerate() {
            env.bind(format!("a{i}"), Value::Matrix(a.clone()));
        }

        let derivation = match get("derivation") {
            None => DerivationSpec::Inner,
            Some(s) => {
                let Some(head) = s.items.first().filter(|i| i.line == s.line) else {
                    return Err(Error::Input(format!(
                        "line {}: derivation must be `inner` or `explicit`",
                        s.line
                    )));
                };
                match head.text.as_str() {
                    "inner" if s.items.len() == 1 => DerivationSpec::Inner,
                    "explicit" => DerivationSpec::Explicit(
                        s.items[1..].iter().map(|i| matrix(&env, i)).collect::<Result<Vec<_>>>()?,
                    ),
                    _ => {
                        return Err(Error::Input(format!(
                            "line {}: derivation must be `inner` or `explicit`",
                            s.line
                        )))
                    }
                }
            }
        };

        let polynomials = match get("polynomials") {
            Some(s) => s.items.iter().map(parse_at).collect::<Result<Vec<_>>>()?,
            None => Vec::new(),
        };

        Ok(InstanceFile {
            field,
            dim,
            generators,
            x,
            coeffs,
            derivation,
            polynomials,
            env,
        })
    }

    pub fn algebra(&self) -> Result<MatrixAlgebra> {
        MatrixAlgebra::generated(self.field, self.dim, self.generators.clone())
    }

    pub fn instance(&self) -> Result<Instance> {
        Instance::new(self.algebra()?, self.x.clone(), self.coeffs.clone())
    }

    /// The coefficient ring with its derivation.
    pub fn derivation(&self) -> Result<Derivation> {
        match &self.derivation {
            DerivationSpec::Inner => {
                let ring = Arc::new(CoefficientRing::from_algebra(&self.algebra()?)?);
                Derivation::inner(ring, &self.x)
            }
            DerivationSpec::Explicit(images) => {
                if images.len() != self.generators.len() {
                    return Err(Error::Input(format!(
                        "explicit derivation lists {} images for {} generators",
                        images.len(),
                        self.generators.len()
                    )));
                }
                let ring = Arc::new(CoefficientRing::new(self.field, self.dim, self.generators.clone())?);
                let columns = images
                    .iter()
                    .enumerate()
                    .map(|(i, m)| {
                        ring.coordinates(m)
                            .ok_or_else(|| Error::NotInSpan(format!("image of generator {i}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let map = Matrix::from_columns(self.field, ring.rank(), &columns);
                Derivation::new(ring, map)
            }
        }
    }

    /// Bindings plus the derivation, for evaluating polynomials.
    pub fn poly_env(&self) -> Result<Env> {
        let mut env = self.env.clone();
        env.derivation = Some(self.derivation()?);
        Ok(env)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orepoly::ore_mul;

    const SAMPLE: &str = "\
# strictly upper 3x3 coefficients
field: q
dimension: 3
let:
    e12 = [[0,1,0],[0,0,0],[0,0,0]]
    e23 = [[0,0,0],[0,0,1],[0,0,0]]
generators:
    e12
    e23
x: [[1,0,0],[0,0,0],[0,0,-1]]
derivation: inner
coefficients:
    e12
    e23*2
polynomials:
    X*a0 + 1
    X^2 + a1
";

    #[test]
    fn parses_sample() {
        let f = InstanceFile::parse(SAMPLE).unwrap();
        assert_eq!(f.field, Field::Rational);
        assert_eq!(f.dim, 3);
        assert_eq!(f.generators.len(), 2);
        assert_eq!(f.coeffs[1].to_string(), "[[0,0,0],[0,0,2],[0,0,0]]");
        assert_eq!(f.derivation, DerivationSpec::Inner);
        assert_eq!(f.polynomials.len(), 2);
        assert_eq!(f.algebra().unwrap().dimension(), 3);
        let inst = f.instance().unwrap();
        assert_eq!(inst.degree(), 1);
        let env = f.poly_env().unwrap();
        let p = env.to_poly(env.eval(&f.polynomials[0]).unwrap()).unwrap();
        let q = env.to_poly(env.eval(&f.polynomials[1]).unwrap()).unwrap();
        assert_eq!(ore_mul(&p, &q, env.derivation.as_ref().unwrap()).unwrap().degree(), Some(3));
    }

    #[test]
    fn explicit_derivation() {
        // ring spanned by E12 alone; δ(E12) = 3 E12 is a derivation since E12^2 = 0
        let text = "field: 5\ndimension: 2\ngenerators:\n  [[0,1],[0,0]]\nderivation: explicit\n  [[0,3],[0,0]]\n";
        let f = InstanceFile::parse(text).unwrap();
        let d = f.derivation().unwrap();
        assert_eq!(d.map().to_string(), "[[3]]");
    }

    #[test]
    fn errors_point_at_the_file() {
        let bad = "field: q\ndimension: 2\ngenerators:\n    [[0,1],[0]]\n";
        match InstanceFile::parse(bad) {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (4, 15)),
            other => panic!("{other:?}"),
        }
        assert!(InstanceFile::parse("field: q\n").is_err());
        assert!(InstanceFile::parse("field: 4\ndimension: 2\n").is_err());
        assert!(InstanceFile::parse("field: q\ndimension: 2\nbogus: 1\n").is_err());
        assert!(InstanceFile::parse("field: q\ndimension: 2\nx: y\n").is_err());
        assert!(InstanceFile::parse("field: q\ndimension: 2\nx: [[1]]\n").is_err());
    }
}
