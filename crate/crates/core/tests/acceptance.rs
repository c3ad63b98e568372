//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line to
//! stderr (written to the handle directly, so it survives output capture).

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use orecheck::commcalc::{commutator, leibniz_expand, lemma2_decompose};
use orecheck::harness::{control_run, stress, Conclusion, StressConfig};
use orecheck::linalg::change_of_basis;
use orecheck::orepoly::{
    evaluate, move_coefficient, ore_mul, CoefficientRing, Derivation, OrePoly, UnitalElement,
};
use orecheck::sample::{
    random_idempotent, random_invertible, random_matrix, random_scalar, random_strictly_upper,
    random_upper, rng,
};
use orecheck::{Field, Matrix, MatrixAlgebra};

const Q: Field = Field::Rational;
const F2: Field = Field::Prime(2);
const F5: Field = Field::Prime(5);

type Outcome = Result<String, String>;

fn criterion(n: u32, name: &str, body: impl FnOnce() -> Outcome) {
    let start = Instant::now();
    let outcome = match catch_unwind(AssertUnwindSafe(body)) {
        Ok(o) => o,
        Err(p) => Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into())),
    };
    let secs = start.elapsed().as_secs_f64();
    let line = match &outcome {
        Ok(detail) => format!("criterion {n}: PASS  {name} ({detail}; {secs:.1}s)"),
        Err(why) => format!("criterion {n}: FAIL  {name} ({why}; {secs:.1}s)"),
    };
    let _ = writeln!(std::io::stderr().lock(), "{line}");
    if let Err(why) = outcome {
        panic!("criterion {n} failed: {why}");
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// `[e,x]_k` by repeated `ab - ba`, for `k = 0..=n`.
fn naive_commutators(e: &Matrix, x: &Matrix, n: usize) -> Vec<Matrix> {
    let mut out = vec![e.clone()];
    for k in 0..n {
        let c = &out[k];
        out.push(&(c * x) - &(x * c));
    }
    out
}

#[test]
fn criterion_1_leibniz_expansion() {
    criterion(1, "e x^n equals its binomial commutator expansion", || {
        let mut r = rng(101);
        let mut checked = 0;
        for field in [Q, F2, F5] {
            for n in 0..=8 {
                for _ in 0..200 {
                    let d = r.gen_range(2..=6);
                    let e = random_matrix(&mut r, field, d, d, 3);
                    let x = random_matrix(&mut r, field, d, d, 3);
                    let direct = (0..n).fold(e.clone(), |acc, _| &acc * &x);
                    let expanded = leibniz_expand(&e, &x, n).map_err(|e| e.to_string())?;
                    ensure(expanded == direct, || format!("{field} n={n} e={e} x={x}"))?;
                    checked += 1;
                }
            }
        }
        Ok(format!("{checked} pairs over Q, F_2, F_5"))
    });
}

#[test]
fn criterion_2_idempotent_decomposition() {
    criterion(2, "[e,x]_n = sum r_i e [e,x]_i for idempotent e", || {
        let mut r = rng(202);
        let mut checked = 0;
        for n in 0..=6 {
            for _ in 0..100 {
                let d = r.gen_range(2..=5);
                let rank = r.gen_range(0..=d);
                let e = random_idempotent(&mut r, Q, d, rank);
                ensure(&e * &e == e, || format!("sampled e is not idempotent: {e}"))?;
                let x = random_matrix(&mut r, Q, d, d, 3);
                let rs = lemma2_decompose(&e, &x, n).map_err(|e| e.to_string())?;
                let c = naive_commutators(&e, &x, n);
                ensure(rs.len() == n + 1, || format!("n={n}: {} coefficients", rs.len()))?;
                let sum = rs
                    .iter()
                    .enumerate()
                    .fold(Matrix::zeros(Q, d, d), |acc, (i, ri)| &acc + &(&(ri * &e) * &c[i]));
                ensure(sum == c[n], || format!("n={n} e={e} x={x}"))?;
                match n {
                    0 => ensure(rs == vec![e.clone()], || "n=0 must give r0 = e".into())?,
                    1 => ensure(rs == vec![c[1].clone(), e.clone()], || {
                        "n=1 must give r0 = [e,x], r1 = e".into()
                    })?,
                    _ => {}
                }
                checked += 1;
            }
        }
        Ok(format!("{checked} pairs, dims 2..5"))
    });
}

#[test]
fn criterion_3_triangularization() {
    criterion(3, "nilpotent algebras triangularize along the annihilator flag", || {
        let mut r = rng(303);
        for t in 0..200 {
            let field = if t % 2 == 0 { Q } else { F2 };
            let d = r.gen_range(2..=8);
            let p = random_invertible(&mut r, field, d);
            let pinv = p.inverse().map_err(|e| e.to_string())?;
            let k = r.gen_range(1..=4);
            let gens: Vec<Matrix> = (0..k)
                .map(|_| &(&p * &random_strictly_upper(&mut r, field, d, 3)) * &pinv)
                .collect();
            let s = MatrixAlgebra::generated(field, d, gens).map_err(|e| e.to_string())?;
            let b = s.triangularize().map_err(|e| format!("trial {t}: {e}"))?;
            ensure(b.is_invertible(), || format!("trial {t}: basis {b} is singular"))?;
            for m in s.basis() {
                let c = change_of_basis(m, &b).map_err(|e| e.to_string())?;
                ensure(c.is_strictly_upper(), || format!("trial {t}: {m} -> {c}"))?;
            }
            let flag = s.annihilator_flag().map_err(|e| e.to_string())?;
            let levels = flag.levels();
            ensure(levels.last().is_some_and(|v| v.is_full()), || format!("trial {t}: flag does not reach K^{d}"))?;
            for g in s.generators() {
                for i in 1..levels.len() {
                    let img = levels[i].image(g).map_err(|e| e.to_string())?;
                    let inside = levels[i - 1].contains(&img).map_err(|e| e.to_string())?;
                    ensure(inside, || format!("trial {t}: generator moves V_{i} outside V_{}", i - 1))?;
                }
            }
        }
        Ok("200 algebras, dims 2..8, Q and F_2".into())
    });
}

#[test]
fn criterion_4_no_nonzero_idempotents() {
    criterion(4, "stress finds no counterexample and flag claims hold", || {
        let mut parts = Vec::new();
        for field in [Q, F2] {
            let cfg = StressConfig {
                seed: 2024,
                trials: 10_000,
                dmax: 8,
                nmax: 3,
                field,
            };
            let rep = stress(&cfg).map_err(|e| e.to_string())?;
            let c = &rep.counts;
            ensure(rep.trials == 10_000, || format!("{field}: ran {} trials", rep.trials))?;
            ensure(c.counterexample == 0, || {
                format!("{field}: {} counterexamples, first {:?}", c.counterexample, rep.first_witness.counterexample)
            })?;
            ensure(rep.flag_claim_failures == 0, || {
                format!("{field}: {} idempotent trials with a failed flag check", rep.flag_claim_failures)
            })?;
            ensure(c.idempotent_zero > 0, || format!("{field}: no idempotent trial exercised the flag claim"))?;
            parts.push(format!(
                "{field}: NotIdempotent {} IdempotentZero {} InstanceNotNilpotent {} COUNTEREXAMPLE {}",
                c.not_idempotent, c.idempotent_zero, c.instance_not_nilpotent, c.counterexample
            ));
        }
        Ok(parts.join("; "))
    });
}

#[test]
fn criterion_5_control() {
    criterion(5, "controls reject E11 by precondition and find it by bypass", || {
        for field in [Q, F2] {
            let rep = control_run(field, 3).map_err(|e| e.to_string())?;
            let e11 = rep.case("E11").ok_or("missing E11 case")?;
            ensure(e11.checked == "InstanceNotNilpotent", || format!("{field}: E11 checked as {}", e11.checked))?;
            ensure(
                e11.bypass.conclusion == Conclusion::Counterexample && e11.bypass.e == Matrix::unit(field, 3, 0, 0),
                || format!("{field}: bypass gave {:?}", e11.bypass.conclusion),
            )?;
            let e12 = rep.case("E12").ok_or("missing E12 case")?;
            ensure(e12.bypass.conclusion == Conclusion::NotIdempotent, || "E12 bypass".into())?;
        }
        Ok("Q and F_2".into())
    });
}

fn strictly_upper_ring(field: Field, d: usize) -> Arc<CoefficientRing> {
    let basis = (0..d)
        .flat_map(|i| ((i + 1)..d).map(move |j| Matrix::unit(field, d, i, j)))
        .collect();
    Arc::new(CoefficientRing::new(field, d, basis).expect("strictly upper basis"))
}

fn random_coeff(r: &mut impl Rng, ring: &CoefficientRing) -> UnitalElement {
    let f = ring.field();
    UnitalElement::new(
        random_scalar(r, f, 3),
        (0..ring.rank()).map(|_| random_scalar(r, f, 3)).collect(),
    )
    .expect("same field")
}

fn random_poly(r: &mut impl Rng, ring: &CoefficientRing, maxdeg: usize) -> OrePoly {
    let deg = r.gen_range(0..=maxdeg);
    OrePoly::from_coeffs((0..=deg).map(|_| random_coeff(r, ring)).collect()).expect("same ring")
}

/// Rewrites `a X^j` one step at a time with `c X = X c - δ(c)`.
fn rewrite(a: &UnitalElement, j: usize, delta: &Derivation) -> OrePoly {
    let ring = delta.ring();
    let mut acc = vec![UnitalElement::zero(ring); j + 1];
    let mut stack = vec![(0usize, a.clone(), j)];
    while let Some((k, c, m)) = stack.pop() {
        if m == 0 {
            acc[k] = acc[k].add(&c).expect("same ring");
        } else {
            stack.push((k + 1, c.clone(), m - 1));
            stack.push((k, delta.apply(&c).neg(), m - 1));
        }
    }
    OrePoly::from_coeffs(acc).expect("same ring")
}

#[test]
fn criterion_6_ore_arithmetic() {
    criterion(6, "Ore normal form, associativity and evaluation", || {
        let mut r = rng(606);
        let err = |e: orecheck::Error| e.to_string();
        let setups: Vec<(Field, usize)> = vec![(Q, 3), (Q, 4), (Field::Prime(3), 4)];
        for t in 0..100 {
            let (field, d) = setups[t % setups.len()];
            let ring = strictly_upper_ring(field, d);
            let x = random_upper(&mut r, field, d, 3);
            let delta = Derivation::inner(ring.clone(), &x).map_err(err)?;
            let a = random_coeff(&mut r, &ring);
            for j in 0..=6 {
                ensure(move_coefficient(&a, j, &delta) == rewrite(&a, j, &delta), || {
                    format!("move_coefficient differs from rewriting at j={j}")
                })?;
            }

            let (f, g, h) = (random_poly(&mut r, &ring, 4), random_poly(&mut r, &ring, 4), random_poly(&mut r, &ring, 4));
            let left = ore_mul(&ore_mul(&f, &g, &delta).map_err(err)?, &h, &delta).map_err(err)?;
            let right = ore_mul(&f, &ore_mul(&g, &h, &delta).map_err(err)?, &delta).map_err(err)?;
            ensure(left == right, || format!("associativity fails in trial {t}"))?;

            let fg = ore_mul(&f, &g, &delta).map_err(err)?;
            let lhs = evaluate(&fg, &x, &delta).map_err(err)?;
            let rhs = &evaluate(&f, &x, &delta).map_err(err)? * &evaluate(&g, &x, &delta).map_err(err)?;
            ensure(lhs == rhs, || format!("evaluation not multiplicative in trial {t}"))?;
        }
        // the Ore relation itself, X r - r X = δ(r), on a concrete pair
        let ring = strictly_upper_ring(Q, 3);
        let x = Matrix::from_ints(Q, &[&[1, 0, 0], &[0, 0, 0], &[0, 0, 0]]);
        let delta = Derivation::inner(ring.clone(), &x).map_err(err)?;
        let e12 = UnitalElement::from_matrix(&ring, &Matrix::unit(Q, 3, 0, 1)).map_err(err)?;
        let xr = ore_mul(&OrePoly::x(&ring), &OrePoly::constant(e12.clone()), &delta).map_err(err)?;
        let rx = ore_mul(&OrePoly::constant(e12.clone()), &OrePoly::x(&ring), &delta).map_err(err)?;
        let diff = xr.sub(&rx).map_err(err)?;
        let expected = commutator(&x, &Matrix::unit(Q, 3, 0, 1)).map_err(err)?;
        ensure(diff == OrePoly::constant(UnitalElement::from_matrix(&ring, &expected).map_err(err)?), || {
            "X E12 - E12 X != [x, E12]".into()
        })?;
        Ok("100 coefficients for j <= 6, 100 triples, 100 products".into())
    });
}

fn run_cli(args: &[&str]) -> (u8, Vec<u8>) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = orecheck::cli::main_with(args.iter().copied(), &mut out, &mut err);
    out.extend(err);
    (code, out)
}

#[test]
fn criterion_7_determinism() {
    criterion(7, "seeded suites repeat byte for byte", || {
        for field in [Q, F2] {
            let cfg = StressConfig {
                seed: 77,
                trials: 1000,
                dmax: 8,
                nmax: 3,
                field,
            };
            let a = stress(&cfg).map_err(|e| e.to_string())?.to_json();
            let b = stress(&cfg).map_err(|e| e.to_string())?.to_json();
            ensure(a == b, || format!("{field}: stress reports differ"))?;
        }
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let reports: Vec<_> = (0..2).map(|i| dir.path().join(format!("r{i}.json"))).collect();
        let mut outputs = Vec::new();
        for path in &reports {
            let p = path.to_str().ok_or("temp path")?;
            let mut all = Vec::new();
            for args in [
                vec!["orecheck", "lemma1", "-n", "5", "--seed", "9", "--dim", "4", "--field", "q"],
                vec!["orecheck", "lemma2", "-n", "4", "--seed", "9", "--dim", "4", "--field", "p", "--prime", "5"],
                vec!["orecheck", "stress", "--seed", "9", "--trials", "200", "--dmax", "6", "--nmax", "3", "--field", "2", "--report", p],
            ] {
                let (code, out) = run_cli(&args);
                ensure(code == 0, || format!("{args:?} exited {code}"))?;
                all.extend(out);
            }
            outputs.push(all);
        }
        ensure(outputs[0] == outputs[1], || "CLI output differs between runs".into())?;
        let r0 = std::fs::read(&reports[0]).map_err(|e| e.to_string())?;
        let r1 = std::fs::read(&reports[1]).map_err(|e| e.to_string())?;
        ensure(r0 == r1, || "JSON reports differ between runs".into())?;
        Ok("stress reports, CLI output and report files".into())
    });
}
