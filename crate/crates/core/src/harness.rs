//! Checks the "idempotents with nilpotent coefficients vanish" claim on
//! concrete instances, plus seeded stress runs and positive controls.

use rand::Rng;
use serde::Serialize;

use crate::commcalc::commutator_sequence;
use crate::error::{Error, Result};
use crate::exactnum::Field;
use crate::linalg::{Flag, Matrix};
use crate::nilalg::MatrixAlgebra;
use crate::sample::{
    random_invertible, random_scalar, random_sparse_strictly_upper, random_upper, trial_rng,
    TrialRng,
};

/// Coefficients `a_0..a_n` in `span(N)` and the element `x`.
#[derive(Clone, Debug)]
pub struct Instance {
    algebra: MatrixAlgebra,
    x: Matrix,
    coeffs: Vec<Matrix>,
}

impl Instance {
    pub fn new(algebra: MatrixAlgebra, x: Matrix, coeffs: Vec<Matrix>) -> Result<Self> {
        let (field, d) = (algebra.field(), algebra.ambient_dim());
        for m in std::iter::once(&x).chain(&coeffs) {
            if m.field() != field {
                return Err(Error::FieldMismatch(field, m.field()));
            }
            if m.rows() != d || m.cols() != d {
                return Err(Error::DimensionMismatch(format!(
                    "{}x{} matrix in dimension {d}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        if coeffs.is_empty() {
            return Err(Error::Input("an instance needs at least a_0".into()));
        }
        for (i, a) in coeffs.iter().enumerate() {
            if !algebra.contains(a) {
                return Err(Error::NotInSpan(format!("a{i} = {a}")));
            }
        }
        Ok(Instance { algebra, x, coeffs })
    }

    pub fn field(&self) -> Field {
        self.algebra.field()
    }

    pub fn dim(&self) -> usize {
        self.algebra.ambient_dim()
    }

    pub fn algebra(&self) -> &MatrixAlgebra {
        &self.algebra
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn coeffs(&self) -> &[Matrix] {
        &self.coeffs
    }

    /// `n`, the top index of the coefficients.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Checks that `ad(x)` maps `span(N)` into itself.
    pub fn check_derivation(&self) -> Result<()> {
        for (index, b) in self.algebra.basis().iter().enumerate() {
            if !self.algebra.contains(&(&(&self.x * b) - &(b * &self.x))) {
                return Err(Error::NotClosed { index });
            }
        }
        Ok(())
    }

    /// `e = a_0 + x a_1 + ... + x^n a_n`.
    pub fn evaluate(&self) -> Matrix {
        let mut acc = Matrix::zeros(self.field(), self.dim(), self.dim());
        for a in self.coeffs.iter().rev() {
            acc = &(&self.x * &acc) + a;
        }
        acc
    }
}

/// Closure of `a_i` and `[a_i, x]_j` for `0 <= i <= n`, `1 <= j <= jmax`.
///
/// With `strict`, every commutator must already lie in `span(N)`.
pub fn lemma_subalgebra(inst: &Instance, jmax: usize, strict: bool) -> Result<MatrixAlgebra> {
    let mut gens = Vec::with_capacity(inst.coeffs.len() * (jmax + 1));
    for (i, a) in inst.coeffs.iter().enumerate() {
        let seq = commutator_sequence(a, &inst.x, jmax)?;
        for (j, c) in seq.into_iter().enumerate() {
            if strict && j > 0 && !inst.algebra.contains(&c) {
                return Err(Error::CommutatorEscapes { i, j });
            }
            gens.push(c);
        }
    }
    MatrixAlgebra::generated(inst.field(), inst.dim(), gens)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Conclusion {
    NotIdempotent,
    IdempotentZero,
    #[serde(rename = "COUNTEREXAMPLE")]
    Counterexample,
}

impl std::fmt::Display for Conclusion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Conclusion::NotIdempotent => "NotIdempotent",
            Conclusion::IdempotentZero => "IdempotentZero",
            Conclusion::Counterexample => "COUNTEREXAMPLE",
        })
    }
}

/// Whether `e [e,x]_k` kills flag level `level`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FlagClaim {
    pub k: usize,
    pub level: usize,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    #[serde(serialize_with = "as_text")]
    pub e: Matrix,
    pub is_idempotent: bool,
    pub conclusion: Conclusion,
    /// Dimensions of `V_0 ⊂ V_1 ⊂ ...`; empty when the flag was not computed.
    pub flag_dims: Vec<usize>,
    pub flag_claims: Vec<FlagClaim>,
    /// `e(V_l) = 0` for every level; only computed when `e` is idempotent.
    pub e_kills_flag: Option<bool>,
    /// Every basis element of the lemma subalgebra kills `V_1`.
    pub s_kills_v1: Option<bool>,
}

impl Verdict {
    /// All flag claims hold.
    pub fn flag_claims_hold(&self) -> bool {
        self.flag_claims.iter().all(|c| c.holds)
    }
}

fn as_text<S: serde::Serializer>(m: &Matrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(m)
}

fn classify(e: &Matrix) -> (bool, Conclusion) {
    let idempotent = &(e * e) == e;
    let conclusion = match (idempotent, e.is_zero()) {
        (false, _) => Conclusion::NotIdempotent,
        (true, true) => Conclusion::IdempotentZero,
        (true, false) => Conclusion::Counterexample,
    };
    (idempotent, conclusion)
}

/// `e [e,x]_k (V_l) = 0` for `0 <= k <= n` and every level `l >= 1`.
pub fn verify_flag_claim(e: &Matrix, x: &Matrix, n: usize, flag: &Flag) -> Result<Vec<FlagClaim>> {
    let seq = commutator_sequence(e, x, n)?;
    let mut claims = Vec::new();
    for (k, c) in seq.iter().enumerate() {
        let m = e * c;
        for (level, v) in flag.levels().iter().enumerate().skip(1) {
            claims.push(FlagClaim {
                k,
                level,
                holds: (&m * v.basis()).is_zero(),
            });
        }
    }
    Ok(claims)
}

/// Full check: the lemma subalgebra must be nilpotent, then `e` is tested
/// and the flag claims are verified.
pub fn check_instance(inst: &Instance) -> Result<Verdict> {
    let n = inst.degree();
    let s = lemma_subalgebra(inst, n, false)?;
    let flag = match s.annihilator_flag() {
        Ok(f) => f,
        Err(Error::NotNilpotent) => return Err(Error::InstanceNotNilpotent),
        Err(e) => return Err(e),
    };
    let e = inst.evaluate();
    let (is_idempotent, conclusion) = classify(&e);
    let flag_claims = verify_flag_claim(&e, &inst.x, n, &flag)?;
    let e_kills_flag = is_idempotent.then(|| {
        flag.levels()
            .iter()
            .all(|v| (&e * v.basis()).is_zero())
    });
    let v1 = flag.levels().get(1).map(|v| v.basis().clone());
    let s_kills_v1 = v1.map(|v1| s.basis().iter().all(|b| (b * &v1).is_zero()));
    Ok(Verdict {
        e,
        is_idempotent,
        conclusion,
        flag_dims: flag.dims(),
        flag_claims,
        e_kills_flag,
        s_kills_v1,
    })
}

/// Evaluates and classifies `e` without establishing the nilpotency hypothesis.
pub fn check_bypass(inst: &Instance) -> Verdict {
    let e = inst.evaluate();
    let (is_idempotent, conclusion) = classify(&e);
    Verdict {
        e,
        is_idempotent,
        conclusion,
        flag_dims: Vec::new(),
        flag_claims: Vec::new(),
        e_kills_flag: None,
        s_kills_v1: None,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ControlCase {
    pub label: String,
    /// Outcome of the full check: a conclusion, or "InstanceNotNilpotent".
    pub checked: String,
    pub bypass: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct ControlReport {
    pub cases: Vec<ControlCase>,
}

impl ControlReport {
    pub fn case(&self, label: &str) -> Option<&ControlCase> {
        self.cases.iter().find(|c| c.label == label)
    }

    /// E11 is rejected by the precondition and found as a nonzero idempotent
    /// once the precondition is skipped.
    pub fn detector_works(&self) -> bool {
        self.case("E11").is_some_and(|c| {
            c.checked == "InstanceNotNilpotent"
                && c.bypass.conclusion == Conclusion::Counterexample
        })
    }
}

/// Runs `N = <a_0>`, `n = 0`, `x = 0` for `a_0 = E11, I, E12` through both
/// the full check and the bypass. Needs `d >= 2`.
pub fn control_run(field: Field, d: usize) -> Result<ControlReport> {
    if d < 2 {
        return Err(Error::Input("control run needs dimension at least 2".into()));
    }
    let cases = [
        ("E11", Matrix::unit(field, d, 0, 0)),
        ("I", Matrix::identity(field, d)),
        ("E12", Matrix::unit(field, d, 0, 1)),
    ];
    let mut out = Vec::new();
    for (label, a0) in cases {
        let algebra = MatrixAlgebra::closure(vec![a0.clone()])?;
        let inst = Instance::new(algebra, Matrix::zeros(field, d, d), vec![a0])?;
        let checked = match check_instance(&inst) {
            Ok(v) => v.conclusion.to_string(),
            Err(Error::InstanceNotNilpotent) => "InstanceNotNilpotent".to_string(),
            Err(e) => return Err(e),
        };
        out.push(ControlCase {
            label: label.to_string(),
            checked,
            bypass: check_bypass(&inst),
        });
    }
    Ok(ControlReport { cases: out })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StressConfig {
    pub seed: u64,
    pub trials: u64,
    pub dmax: usize,
    pub nmax: usize,
    pub field: Field,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counts {
    #[serde(rename = "NotIdempotent")]
    pub not_idempotent: u64,
    #[serde(rename = "IdempotentZero")]
    pub idempotent_zero: u64,
    #[serde(rename = "InstanceNotNilpotent")]
    pub instance_not_nilpotent: u64,
    #[serde(rename = "COUNTEREXAMPLE")]
    pub counterexample: u64,
}

/// A reproducible trial, with matrices in the standard text form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub trial: u64,
    pub family: String,
    pub dim: usize,
    pub generators: Vec<String>,
    pub x: String,
    pub coeffs: Vec<String>,
    pub e: String,
    pub flag_dims: Vec<usize>,
    pub flag_claims: Vec<FlagClaim>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Witnesses {
    #[serde(rename = "NotIdempotent")]
    pub not_idempotent: Option<Witness>,
    #[serde(rename = "IdempotentZero")]
    pub idempotent_zero: Option<Witness>,
    #[serde(rename = "InstanceNotNilpotent")]
    pub instance_not_nilpotent: Option<Witness>,
    #[serde(rename = "COUNTEREXAMPLE")]
    pub counterexample: Option<Witness>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StressReport {
    pub seed: u64,
    pub field: String,
    pub trials: u64,
    pub dmax: usize,
    pub nmax: usize,
    pub counts: Counts,
    /// Trials in which `e` was idempotent, and how many of those had a
    /// failing flag claim, `e(V_l) != 0`, or `S(V_1) != 0`.
    pub idempotent_trials: u64,
    pub flag_claim_failures: u64,
    pub first_witness: Witnesses,
}

impl StressReport {
    fn empty(cfg: &StressConfig) -> Self {
        StressReport {
            seed: cfg.seed,
            field: cfg.field.to_string(),
            trials: 0,
            dmax: cfg.dmax,
            nmax: cfg.nmax,
            counts: Counts::default(),
            idempotent_trials: 0,
            flag_claim_failures: 0,
            first_witness: Witnesses::default(),
        }
    }

    /// Order-independent merge: counts add, the witness with the smaller
    /// trial index wins.
    pub fn merge(mut self, other: StressReport) -> StressReport {
        fn earliest(a: Option<Witness>, b: Option<Witness>) -> Option<Witness> {
            match (a, b) {
                (Some(a), Some(b)) => Some(if a.trial <= b.trial { a } else { b }),
                (a, b) => a.or(b),
            }
        }
        self.trials += other.trials;
        self.counts.not_idempotent += other.counts.not_idempotent;
        self.counts.idempotent_zero += other.counts.idempotent_zero;
        self.counts.instance_not_nilpotent += other.counts.instance_not_nilpotent;
        self.counts.counterexample += other.counts.counterexample;
        self.idempotent_trials += other.idempotent_trials;
        self.flag_claim_failures += other.flag_claim_failures;
        let (w, o) = (&mut self.first_witness, other.first_witness);
        w.not_idempotent = earliest(w.not_idempotent.take(), o.not_idempotent);
        w.idempotent_zero = earliest(w.idempotent_zero.take(), o.idempotent_zero);
        w.instance_not_nilpotent =
            earliest(w.instance_not_nilpotent.take(), o.instance_not_nilpotent);
        w.counterexample = earliest(w.counterexample.take(), o.counterexample);
        self
    }

    /// No counterexample and no failed flag check.
    pub fn is_clean(&self) -> bool {
        self.counts.counterexample == 0 && self.flag_claim_failures == 0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// A sampled instance before checking; `family` names the construction.
pub struct Trial {
    pub family: &'static str,
    pub instance: Instance,
}

fn combination(rng: &mut TrialRng, field: Field, d: usize, basis: &[Matrix]) -> Matrix {
    let mut m = Matrix::zeros(field, d, d);
    for b in basis {
        if rng.gen_bool(0.5) {
            let c = random_scalar(rng, field, 3);
            if !c.is_zero() {
                m = &m + &b.scale(&c);
            }
        }
    }
    m
}

/// Draws trial `index` of `seed`.
///
/// Families, all conjugated by a random invertible `P` at the end:
/// - `superdiagonal`: `N` = strictly upper matrices (generated by the
///   `E_(i,i+1)`), `x` upper triangular.
/// - `band`: `N` = matrices supported on `j - i >= 2`, `x` upper triangular.
/// - `generated`: `N` generated by a few sparse strictly upper matrices,
///   `x = λI + y` with `y ∈ N`.
/// - `free`: like `generated` but `x` is an arbitrary matrix, so the
///   lemma subalgebra is usually not nilpotent.
///
/// With some probability `a_0` is chosen as `-(x a_1 + ... + x^n a_n)`, making
/// `e = 0`.
pub fn sample_trial(cfg: &StressConfig, index: u64) -> Result<Trial> {
    let mut rng = trial_rng(cfg.seed, index);
    let field = cfg.field;
    let dlo = cfg.dmax.clamp(1, 2);
    let d = rng.gen_range(dlo..=cfg.dmax.max(1));
    let n = rng.gen_range(0..=cfg.nmax);
    let roll = rng.gen_range(0..100);
    let family = match roll {
        0..=29 => "superdiagonal",
        30..=49 => "band",
        50..=94 => "generated",
        _ => "free",
    };
    let (gens, x) = match family {
        "superdiagonal" | "band" => {
            let offset = if family == "band" { 2 } else { 1 };
            let gens: Vec<Matrix> = (0..d)
                .flat_map(|i| (i + offset..d).map(move |j| (i, j)))
                // E_(i,i+1) generate the strictly upper matrices; offsets 2
                // and 3 generate the band
                .filter(|&(i, j)| j - i <= offset + 1 && (family == "band" || j == i + 1))
                .map(|(i, j)| Matrix::unit(field, d, i, j))
                .collect();
            (gens, random_upper(&mut rng, field, d, 3))
        }
        _ => {
            let k = rng.gen_range(1..=4);
            let density = rng.gen_range(0.2..0.8);
            let gens: Vec<Matrix> = (0..k)
                .map(|_| random_sparse_strictly_upper(&mut rng, field, d, density, 3))
                .collect();
            let x = if family == "free" {
                crate::sample::random_matrix(&mut rng, field, d, d, 2)
            } else {
                let lambda = random_scalar(&mut rng, field, 3);
                let inner = MatrixAlgebra::generated(field, d, gens.clone())?;
                &Matrix::scalar_identity(&lambda, d) + &combination(&mut rng, field, d, inner.basis())
            };
            (gens, x)
        }
    };
    let algebra = MatrixAlgebra::generated(field, d, gens.clone())?;
    let mut coeffs: Vec<Matrix> = (0..=n)
        .map(|_| combination(&mut rng, field, d, algebra.basis()))
        .collect();
    if family != "free" && n > 0 && rng.gen_bool(0.15) {
        let mut tail = Matrix::zeros(field, d, d);
        for a in coeffs[1..].iter().rev() {
            tail = &(&x * &tail) + a;
        }
        coeffs[0] = -&(&x * &tail);
    }
    let p = random_invertible(&mut rng, field, d);
    let pinv = p.inverse()?;
    let conj = |m: &Matrix| &(&p * m) * &pinv;
    let algebra = MatrixAlgebra::generated(field, d, gens.iter().map(conj).collect())?;
    let instance = Instance::new(algebra, conj(&x), coeffs.iter().map(conj).collect())?;
    Ok(Trial { family, instance })
}

fn witness(index: u64, trial: &Trial, verdict: Option<&Verdict>) -> Witness {
    let inst = &trial.instance;
    Witness {
        trial: index,
        family: trial.family.to_string(),
        dim: inst.dim(),
        generators: inst.algebra.generators().iter().map(|g| g.to_string()).collect(),
        x: inst.x.to_string(),
        coeffs: inst.coeffs.iter().map(|a| a.to_string()).collect(),
        e: verdict.map_or_else(|| inst.evaluate().to_string(), |v| v.e.to_string()),
        flag_dims: verdict.map(|v| v.flag_dims.clone()).unwrap_or_default(),
        flag_claims: verdict.map(|v| v.flag_claims.clone()).unwrap_or_default(),
    }
}

/// Report for the single trial `index`.
pub fn run_trial(cfg: &StressConfig, index: u64) -> Result<StressReport> {
    let trial = sample_trial(cfg, index)?;
    let mut report = StressReport::empty(cfg);
    report.trials = 1;
    match check_instance(&trial.instance) {
        Ok(v) => {
            let w = Some(witness(index, &trial, Some(&v)));
            if v.is_idempotent {
                report.idempotent_trials = 1;
                let ok = v.flag_claims_hold()
                    && v.e_kills_flag == Some(true)
                    && v.s_kills_v1 != Some(false);
                if !ok {
                    report.flag_claim_failures = 1;
                }
            }
            match v.conclusion {
                Conclusion::NotIdempotent => {
                    report.counts.not_idempotent = 1;
                    report.first_witness.not_idempotent = w;
                }
                Conclusion::IdempotentZero => {
                    report.counts.idempotent_zero = 1;
                    report.first_witness.idempotent_zero = w;
                }
                Conclusion::Counterexample => {
                    report.counts.counterexample = 1;
                    report.first_witness.counterexample = w;
                }
            }
        }
        Err(Error::InstanceNotNilpotent) => {
            report.counts.instance_not_nilpotent = 1;
            report.first_witness.instance_not_nilpotent = Some(witness(index, &trial, None));
        }
        Err(e) => return Err(e),
    }
    Ok(report)
}

/// Runs trials `0..cfg.trials`, split across the available threads.
pub fn stress(cfg: &StressConfig) -> Result<StressReport> {
    if cfg.dmax == 0 {
        return Err(Error::Input("dmax must be at least 1".into()));
    }
    let threads = std::thread::available_parallelism()
        .map_or(1, |n| n.get() as u64)
        .min(cfg.trials.max(1));
    let run_range = |lo: u64, hi: u64| -> Result<StressReport> {
        (lo..hi).try_fold(StressReport::empty(cfg), |acc, i| {
            Ok(acc.merge(run_trial(cfg, i)?))
        })
    };
    if threads <= 1 {
        return run_range(0, cfg.trials);
    }
    let chunk = cfg.trials.div_ceil(threads);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let (lo, hi) = (t * chunk, ((t + 1) * chunk).min(cfg.trials));
                scope.spawn(move || run_range(lo, hi))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("stress worker panicked"))
            .try_fold(StressReport::empty(cfg), |acc, r| Ok(acc.merge(r?)))
    })
}
