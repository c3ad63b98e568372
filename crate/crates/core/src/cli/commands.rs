use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::cli::instance::{DerivationSpec, InstanceFile};
use crate::cli::syntax::parse;
use crate::commcalc::{iterated_commutator, leibniz_expand, lemma2_decompose, recombine};
use crate::error::{Error, Result};
use crate::exactnum::Field;
use crate::harness::{check_bypass, check_instance, control_run, stress, Conclusion, StressConfig, Verdict};
use crate::linalg::change_of_basis;
use crate::orepoly::{evaluate, ore_mul};
use crate::sample::{random_idempotent, random_matrix, trial_rng};
use rand::Rng;

/// Exit status: success or verified.
pub const EXIT_OK: u8 = 0;
/// An identity failed or a counterexample was found.
pub const EXIT_VIOLATION: u8 = 1;
/// Bad input.
pub const EXIT_INPUT: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "orecheck", version, about = "Exact checks for differential polynomial rings over nilpotent matrix algebras")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct FileArg {
    /// Instance file
    #[arg(short = 'f', long = "file")]
    pub file: PathBuf,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    /// `q` for the rationals, `p` (with --prime) or a prime such as `5`, `p5`, `F_5`
    #[arg(long, default_value = "q")]
    pub field: String,
    /// Modulus when --field is `p`
    #[arg(long)]
    pub prime: Option<u64>,
}

impl FieldArgs {
    pub fn field(&self) -> Result<Field> {
        match (self.field.trim(), self.prime) {
            ("p" | "P", Some(p)) => Field::prime(p),
            ("p" | "P", None) => Err(Error::Input("--field p needs --prime".into())),
            (f, None) => Field::parse(f),
            (f, Some(p)) => {
                let field = Field::parse(f)?;
                if field == Field::Prime(p) {
                    Ok(field)
                } else {
                    Err(Error::Input(format!("--field {f} conflicts with --prime {p}")))
                }
            }
        }
    }
}

#[derive(Debug, Args)]
pub struct IdentityArgs {
    /// Largest n checked (all of 0..=n are run)
    #[arg(short = 'n')]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub dim: usize,
    #[command(flatten)]
    pub field: FieldArgs,
    /// Random pairs per n
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Multiply the two polynomials of an instance file in normal form
    Mul(FileArg),
    /// Basis in which the generated algebra is strictly upper triangular
    Triangularize(FileArg),
    /// Annihilator flag of the generated algebra
    Flag(FileArg),
    /// Check e x^n = sum C(n,j) x^j [e,x]_(n-j) on random pairs
    Lemma1(IdentityArgs),
    /// Check the decomposition [e,x]_n = sum r_i e [e,x]_i for random idempotents
    Lemma2(IdentityArgs),
    /// Check an instance: is e = a0 + x a1 + ... + x^n an idempotent, and is it zero
    Check {
        #[command(flatten)]
        file: FileArg,
        /// Skip the nilpotency precondition
        #[arg(long)]
        bypass: bool,
        /// Print the verdict as JSON
        #[arg(long)]
        json: bool,
    },
    /// Positive controls: non-nilpotent coefficient algebras
    Control {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[command(flatten)]
        field: FieldArgs,
    },
    /// Seeded random instances
    Stress {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        dmax: usize,
        #[arg(long)]
        nmax: usize,
        #[command(flatten)]
        field: FieldArgs,
        /// Write the JSON report here
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Evaluate an expression with the bindings of an instance file
    Eval {
        #[command(flatten)]
        file: FileArg,
        expr: String,
    },
}

/// Runs a parsed command, writing human-readable output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<u8> {
    let w = |out: &mut dyn Write, s: String| -> Result<()> {
        writeln!(out, "{s}").map_err(|e| Error::Input(format!("write failed: {e}")))
    };
    match &cli.command {
        Command::Mul(f) => {
            let file = InstanceFile::load(&f.file)?;
            let [fe, ge] = file.polynomials.as_slice() else {
                return Err(Error::Input(format!(
                    "mul needs exactly two polynomials, found {}",
                    file.polynomials.len()
                )));
            };
            let env = file.poly_env()?;
            let delta = env.derivation.as_ref().expect("poly_env sets the derivation");
            let p = env.to_poly(env.eval(fe)?)?;
            let q = env.to_poly(env.eval(ge)?)?;
            let pq = ore_mul(&p, &q, delta)?;
            let ring = delta.ring();
            w(out, format!("f = {}", p.display(ring)))?;
            w(out, format!("g = {}", q.display(ring)))?;
            w(out, format!("f*g = {}", pq.display(ring)))?;
            if file.derivation == DerivationSpec::Inner {
                let lhs = evaluate(&pq, &file.x, delta)?;
                let rhs = &evaluate(&p, &file.x, delta)? * &evaluate(&q, &file.x, delta)?;
                if lhs != rhs {
                    w(out, format!("evaluation at x is not multiplicative: {lhs} != {rhs}"))?;
                    return Ok(EXIT_VIOLATION);
                }
                w(out, format!("(f*g)(x) = f(x) g(x) = {lhs}"))?;
            }
            Ok(EXIT_OK)
        }
        Command::Triangularize(f) => {
            let file = InstanceFile::load(&f.file)?;
            let algebra = file.algebra()?;
            let b = algebra.triangularize().map_err(not_nilpotent_input)?;
            w(out, format!("basis = {b}"))?;
            for (i, g) in algebra.generators().iter().enumerate() {
                let c = change_of_basis(g, &b)?;
                if !c.is_strictly_upper() {
                    w(out, format!("g{i} is not strictly upper after conjugation: {c}"))?;
                    return Ok(EXIT_VIOLATION);
                }
                w(out, format!("g{i} -> {c}"))?;
            }
            Ok(EXIT_OK)
        }
        Command::Flag(f) => {
            let file = InstanceFile::load(&f.file)?;
            let flag = file.algebra()?.annihilator_flag().map_err(not_nilpotent_input)?;
            let dims: Vec<String> = flag.dims().iter().map(|d| d.to_string()).collect();
            w(out, format!("dims = {}", dims.join(" ")))?;
            for (i, v) in flag.levels().iter().enumerate().skip(1) {
                w(out, format!("V_{i} = span of columns {}", v.basis()))?;
            }
            Ok(EXIT_OK)
        }
        Command::Lemma1(args) => lemma1(args, out),
        Command::Lemma2(args) => lemma2(args, out),
        Command::Check { file, bypass, json } => {
            let file = InstanceFile::load(&file.file)?;
            let inst = file.instance()?;
            let verdict = if *bypass {
                check_bypass(&inst)
            } else {
                match check_instance(&inst) {
                    Ok(v) => v,
                    Err(Error::InstanceNotNilpotent) => {
                        w(out, "InstanceNotNilpotent: the subalgebra generated by a_i and [a_i,x]_j is not nilpotent".into())?;
                        return Ok(EXIT_INPUT);
                    }
                    Err(e) => return Err(e),
                }
            };
            if *json {
                w(out, serde_json::to_string_pretty(&verdict).expect("verdict serializes"))?;
            } else {
                print_verdict(&verdict, out)?;
            }
            let bad_flag = verdict.is_idempotent
                && (!verdict.flag_claims_hold() || verdict.e_kills_flag == Some(false));
            if verdict.conclusion == Conclusion::Counterexample || bad_flag {
                if !*bypass {
                    w(out, format!("witness: x = {}", inst.x()))?;
                    for (i, a) in inst.coeffs().iter().enumerate() {
                        w(out, format!("witness: a{i} = {a}"))?;
                    }
                }
                return Ok(EXIT_VIOLATION);
            }
            Ok(EXIT_OK)
        }
        Command::Control { dim, field } => {
            let report = control_run(field.field()?, *dim)?;
            for c in &report.cases {
                w(out, format!("{}: check {} / bypass {}", c.label, c.checked, c.bypass.conclusion))?;
            }
            if !report.detector_works() {
                w(out, "control failed: E11 was not detected".into())?;
                return Ok(EXIT_VIOLATION);
            }
            Ok(EXIT_OK)
        }
        Command::Stress {
            seed,
            trials,
            dmax,
            nmax,
            field,
            report,
        } => {
            let cfg = StressConfig {
                seed: *seed,
                trials: *trials,
                dmax: *dmax,
                nmax: *nmax,
                field: field.field()?,
            };
            let r = stress(&cfg)?;
            let c = &r.counts;
            w(out, format!("trials: {}", r.trials))?;
            w(out, format!("NotIdempotent: {}", c.not_idempotent))?;
            w(out, format!("IdempotentZero: {}", c.idempotent_zero))?;
            w(out, format!("InstanceNotNilpotent: {}", c.instance_not_nilpotent))?;
            w(out, format!("COUNTEREXAMPLE: {}", c.counterexample))?;
            w(out, format!("flag claim failures: {}", r.flag_claim_failures))?;
            if let Some(path) = report {
                std::fs::write(path, r.to_json() + "\n")
                    .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
            }
            if !r.is_clean() {
                if let Some(wit) = &r.first_witness.counterexample {
                    w(out, format!("witness: {}", serde_json::to_string(wit).expect("witness serializes")))?;
                }
                return Ok(EXIT_VIOLATION);
            }
            Ok(EXIT_OK)
        }
        Command::Eval { file, expr } => {
            let file = InstanceFile::load(&file.file)?;
            let env = file.poly_env().unwrap_or_else(|_| file.env.clone());
            let v = env.eval(&parse(expr)?)?;
            w(out, env.show(&v))?;
            Ok(EXIT_OK)
        }
    }
}

fn not_nilpotent_input(e: Error) -> Error {
    match e {
        Error::NotNilpotent => Error::Input("the generated algebra is not nilpotent".into()),
        other => other,
    }
}

fn print_verdict(v: &Verdict, out: &mut dyn Write) -> Result<()> {
    let io = |e: std::io::Error| Error::Input(format!("write failed: {e}"));
    writeln!(out, "e = {}", v.e).map_err(io)?;
    writeln!(out, "idempotent: {}", v.is_idempotent).map_err(io)?;
    if !v.flag_dims.is_empty() {
        let dims: Vec<String> = v.flag_dims.iter().map(|d| d.to_string()).collect();
        writeln!(out, "flag dims: {}", dims.join(" ")).map_err(io)?;
        let held = v.flag_claims.iter().filter(|c| c.holds).count();
        writeln!(out, "flag claims e[e,x]_k(V_l) = 0: {held}/{} hold", v.flag_claims.len()).map_err(io)?;
    }
    if let Some(b) = v.s_kills_v1 {
        writeln!(out, "S(V_1) = 0: {b}").map_err(io)?;
    }
    if let Some(b) = v.e_kills_flag {
        writeln!(out, "e(V_l) = 0 for all l: {b}").map_err(io)?;
    }
    writeln!(out, "{}", v.conclusion).map_err(io)?;
    Ok(())
}

fn identity_setup(args: &IdentityArgs) -> Result<Field> {
    if args.dim == 0 {
        return Err(Error::Input("--dim must be positive".into()));
    }
    args.field.field()
}

fn lemma1(args: &IdentityArgs, out: &mut dyn Write) -> Result<u8> {
    let field = identity_setup(args)?;
    let d = args.dim;
    for n in 0..=args.n {
        let mut rng = trial_rng(args.seed, n as u64);
        for t in 0..args.trials {
            let e = random_matrix(&mut rng, field, d, d, 3);
            let x = random_matrix(&mut rng, field, d, d, 3);
            let lhs = leibniz_expand(&e, &x, n)?;
            let rhs = &e * &x.pow(n as u32)?;
            if lhs != rhs {
                writeln!(out, "lemma1 FAILED at n={n}, trial {t}\ne = {e}\nx = {x}\nexpansion = {lhs}\ne x^n = {rhs}")
                    .map_err(|e| Error::Input(e.to_string()))?;
                return Ok(EXIT_VIOLATION);
            }
        }
    }
    writeln!(
        out,
        "lemma1 ok: n = 0..={}, {} pairs each, dim {d}, field {field}",
        args.n, args.trials
    )
    .map_err(|e| Error::Input(e.to_string()))?;
    Ok(EXIT_OK)
}

fn lemma2(args: &IdentityArgs, out: &mut dyn Write) -> Result<u8> {
    let field = identity_setup(args)?;
    let d = args.dim;
    let io = |e: std::io::Error| Error::Input(e.to_string());
    let mut shown = false;
    for n in 0..=args.n {
        let mut rng = trial_rng(args.seed, n as u64);
        for t in 0..args.trials {
            let rank = rng.gen_range(0..=d);
            let e = random_idempotent(&mut rng, field, d, rank);
            let x = random_matrix(&mut rng, field, d, d, 3);
            let r = lemma2_decompose(&e, &x, n)?;
            let lhs = recombine(&r, &e, &x)?;
            let rhs = iterated_commutator(&e, &x, n)?;
            if lhs != rhs {
                writeln!(out, "lemma2 FAILED at n={n}, trial {t}\ne = {e}\nx = {x}").map_err(io)?;
                for (i, ri) in r.iter().enumerate() {
                    writeln!(out, "r{i} = {ri}").map_err(io)?;
                }
                return Ok(EXIT_VIOLATION);
            }
            // show the first proper idempotent (neither 0 nor I) at the top n
            if n == args.n && !shown && 0 < rank && rank < d {
                shown = true;
                writeln!(out, "witness n={n}: e = {e}, x = {x}").map_err(io)?;
                for (i, ri) in r.iter().enumerate() {
                    writeln!(out, "r{i} = {ri}").map_err(io)?;
                }
            }
        }
    }
    writeln!(
        out,
        "lemma2 ok: n = 0..={}, {} pairs each, dim {d}, field {field}",
        args.n, args.trials
    )
    .map_err(io)?;
    Ok(EXIT_OK)
}

/// Parses `args` and runs; errors go to `err` and map to exit code 2.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match run(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_INPUT
        }
    }
}
