use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use hyperorbit::arith::{a_seq, check_b_identity, check_fib_identities_with, check_partial_sums, ln_factorial, ASeq, FibCache, LogComplex};
use hyperorbit::conjugation::{build_n, commutation_check, host_basis, pushforward_orbit_check, BasisKind, ConjugationError};
use hyperorbit::constructions::{
    companion_x, delta_d_pair, factorial_tail, forward_iterate_rational, gap_schedule_search, hc_q_blocks, julia_ray_bisection,
    symmetric_preimage, universal_y_l1, weight_identity, Certificate, ConstructionError, DenseTestSeq, JuliaConfig,
    DEFAULT_SEARCH_CAP,
};
use hyperorbit::dynamics::{
    classify_orbit, closed_form_state, iterate_bc, ledger, verify_weight_collapse, write_trace, DynError, MultilinearSpec,
    OrbitBC, WeightLedger,
};
use hyperorbit::spaces::{rational_to_logc, SeqVector, SpaceTag, WeightSeq};

use crate::input::{parse_pair, parse_weights, read_rational_vectors, read_vector, read_vectors, write_json, InputError};
use crate::report::{Check, RunReport};
use crate::{Basis, BuildTarget};

const ANCHOR_FIB: &str = "Fibonacci recurrence, F_2n = sum_{j<=n} F_(2j-1), Vajda identity";
const ANCHOR_PARTIAL: &str = "sum_{l<=n} F_l = F_(n+2) - 1";
const ANCHOR_A: &str = "a_n = 1 - n(n-1)/2";
const ANCHOR_B: &str = "sum_{j<n} a_(n-j) F_2j = n(n-1)/2";
const ANCHOR_ORBIT: &str = "BC orbit x_n = M(x_(n-m), ..., x_(n-1)) equals c_n L^p(x_0)";
const ANCHOR_COMPANION: &str = "c_2n d_2n = 2^n n!^2 for e_1'(y) B_w(x) on l1";
const ANCHOR_UNIVERSAL: &str = "universal vector on l1: block norms, Phi bound, universality residuals";
const ANCHOR_DELTA_D: &str = "g(0) D(f) pair with c_2n(f, g) = 1";
const ANCHOR_Q: &str = "f(0) g' block-built Q with c_(n_j+1) = c_(n_j+2) = 1";
const ANCHOR_COLLAPSE: &str = "|c_n(f, g)| <= 1/(k 2^(2^(n/2)))";
const ANCHOR_SYMMETRIC: &str = "symmetric bihypercyclic operator preimage";
const ANCHOR_CONJ: &str = "quasiconjugation phi M(u, v) = N(phi u, phi v)";
const ANCHOR_PUSH: &str = "push-forward of BC orbits through phi";
const ANCHOR_BASIS: &str = "bounded Markushevich basis";
const ANCHOR_JULIA: &str = "Julia set as the boundary of the basin of 0";

const CLASSIFY_TOL: f64 = 1e-12;
const BIORTHOGONALITY_TOL: f64 = 1e-12;
const PUSHFORWARD_TOL: f64 = 1e-9;
const B_IDENTITY_LIMIT: usize = 400;

fn count(failed: bool) -> f64 {
    if failed {
        1.0
    } else {
        0.0
    }
}

pub fn identities(max_n: usize, corrupt: Option<usize>) -> Result<RunReport, InputError> {
    if max_n < 3 {
        return Err(InputError(format!("max_n = {max_n} must be at least 3")));
    }
    let mut r = RunReport::new("identities", json!({ "max_n": max_n, "corrupt_fib": corrupt }));
    let mut cache = FibCache::with_len(max_n);
    if let Some(k) = corrupt {
        if k > max_n {
            return Err(InputError(format!("cannot corrupt F_{k} beyond max_n = {max_n}")));
        }
        cache.corrupt(k);
    }
    let fib = check_fib_identities_with(&cache, max_n);
    let mut c = Check::le("fibonacci_identities", count(!fib.passed()), 0.0, ANCHOR_FIB);
    if let Some(f) = &fib.first_failure {
        c = c.with_note(f.clone());
    }
    r.push(c);
    r.result("fibonacci", &fib);

    let partial = check_partial_sums(max_n);
    let mut c = Check::le("partial_sums", count(partial.is_some()), 0.0, ANCHOR_PARTIAL);
    if let Some(n) = partial {
        c = c.with_note(format!("fails at n = {n}"));
    }
    r.push(c);

    match a_seq(max_n) {
        Ok(a) => {
            let bad = (1..=max_n).filter(|&n| a.get(n) != ASeq::closed_form(n)).count();
            r.push(Check::le("a_closed_form", bad as f64, 0.0, ANCHOR_A));
        }
        Err(e) => r.push(Check::violated("a_closed_form", ANCHOR_A, e.to_string())),
    }
    let b_max = max_n.min(B_IDENTITY_LIMIT);
    let b = check_b_identity(b_max);
    let mut c = Check::le("b_identity", count(b.is_some()), 0.0, ANCHOR_B);
    if let Some(n) = b {
        c = c.with_note(format!("fails at n = {n}"));
    }
    r.push(c.with_note(format!("checked for n <= {b_max}")));
    Ok(r.finish())
}

pub struct OrbitArgs {
    pub operator: String,
    pub init: PathBuf,
    pub steps: usize,
    pub weights: String,
    pub tol: f64,
    pub rational: bool,
    pub trace: Option<PathBuf>,
}

fn open_trace(path: &Path) -> Result<BufWriter<File>, InputError> {
    File::create(path).map(BufWriter::new).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

/// Largest relative log-magnitude deviation between closed-form and iterated states.
fn closed_form_deviation(spec: &MultilinearSpec, init: &[SeqVector], orbit: &OrbitBC, led: &WeightLedger) -> Result<f64, DynError> {
    let mut worst: f64 = 0.0;
    for n in 1..=orbit.states.len() {
        let cf = closed_form_state(spec, init, led, n)?;
        let st = orbit.state(n);
        if cf.len() != st.len() {
            return Ok(f64::INFINITY);
        }
        for i in 1..=cf.len() {
            let (a, b) = (cf.get(i), st.get(i));
            if a.is_zero() && b.is_zero() {
                continue;
            }
            let (la, lb) = (a.log_mag(), b.log_mag());
            let dev = (la - lb).abs() / la.abs().max(lb.abs()).max(1.0);
            worst = worst.max(if dev.is_nan() { f64::INFINITY } else { dev });
        }
    }
    Ok(worst)
}

pub fn orbit(a: &OrbitArgs) -> Result<RunReport, InputError> {
    let w = parse_weights(&a.weights)?;
    let params = json!({
        "operator": a.operator, "init": a.init, "steps": a.steps, "weights": a.weights,
        "tol": a.tol, "rational": a.rational, "trace": a.trace,
    });
    let mut r = RunReport::new("orbit", params);
    if a.rational {
        return orbit_rational(a, r);
    }
    let init = read_vectors(&a.init)?;
    let spec = MultilinearSpec::by_name(&a.operator, w, init.len())?;
    spec.check_args(&init)?;
    let orbit = iterate_bc(&spec, &init, a.steps)?;
    if let Some(path) = &a.trace {
        let mut out = open_trace(path)?;
        write_trace(&mut out, &orbit.states)?;
        out.flush()?;
    }
    let computed = orbit.states.len();
    if spec.symmetrized {
        r.push(Check::skip("closed_form", ANCHOR_ORBIT, "the symmetrized operator has no product closed form"));
    } else if computed > 0 {
        match ledger(&spec, &init, computed).and_then(|led| Ok((closed_form_deviation(&spec, &init, &orbit, &led)?, led))) {
            Ok((dev, led)) => {
                r.push(Check::le("closed_form", dev, a.tol, ANCHOR_ORBIT));
                let log_kappa: Vec<Value> = (1..=led.len()).map(|n| finite_or_null(led.kappa(n).log_mag())).collect();
                r.result("log_kappa", log_kappa);
            }
            Err(e) => r.push(Check::skip("closed_form", ANCHOR_ORBIT, e.to_string())),
        }
    }
    r.result("operator", spec.describe());
    r.result("states", computed);
    r.result("exhausted_at", orbit.exhausted_at);
    r.result("classification", classify_orbit(&orbit, a.steps, CLASSIFY_TOL).as_str());
    let norms: Vec<Value> = orbit.log_norms().into_iter().map(finite_or_null).collect();
    r.result("log_norms", norms);
    Ok(r.finish())
}

fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn orbit_rational(a: &OrbitArgs, mut r: RunReport) -> Result<RunReport, InputError> {
    if a.operator != "mc_CN" {
        return Err(InputError(format!("--rational supports mc_CN only, not {}", a.operator)));
    }
    let (init, space) = read_rational_vectors(&a.init)?;
    let m = init.len();
    let spec = MultilinearSpec::mc_cn(m)?;
    let states = forward_iterate_rational(m, &init, a.steps).map_err(|e| InputError(e.to_string()))?;
    if let Some(path) = &a.trace {
        let mut out = open_trace(path)?;
        for (i, s) in states.iter().enumerate() {
            let mut line = s.to_json(space);
            line["n"] = json!(i + 1);
            writeln!(out, "{line}")?;
        }
        out.flush()?;
    }
    let float_init: Vec<SeqVector> = init.iter().map(|v| v.to_logc(space)).collect::<Result<_, _>>()?;
    let orbit = iterate_bc(&spec, &float_init, a.steps)?;
    let mut worst: f64 = 0.0;
    for (n, exact) in states.iter().enumerate().take(orbit.states.len()) {
        let float = orbit.state(n + 1);
        for i in 1..=exact.len().max(float.len()) {
            let q = rational_to_logc(&exact.get(i));
            let f = if i <= float.len() { float.get(i) } else { LogComplex::ZERO };
            if !(q.is_zero() && f.is_zero()) {
                worst = worst.max(q.rel_diff(f));
            }
        }
    }
    r.push(Check::le("rational_vs_float", worst, a.tol, ANCHOR_ORBIT));
    r.result("operator", spec.describe());
    r.result("states", states.len());
    r.result("final_state", states.last().map(|s| s.to_json(space)));
    Ok(r.finish())
}

pub struct BuildArgs {
    pub target: BuildTarget,
    pub blocks: usize,
    pub init: Option<PathBuf>,
    pub tol: Option<f64>,
    pub weights: String,
    pub lambda: String,
    pub len: usize,
    pub vectors: Option<PathBuf>,
    pub seed: u64,
}

fn push_certificates(r: &mut RunReport, certs: &[Certificate], anchor: &str) {
    for c in certs {
        r.push(Check::le(format!("{}[{}]", c.name, c.index), c.measured, c.bound, anchor));
    }
}

/// Precondition failures of a builder are check failures (exit 1); anything
/// else is an input error.
fn builder_failure(r: &mut RunReport, e: ConstructionError, anchor: &str) -> Result<(), InputError> {
    let name = match &e {
        ConstructionError::ZeroCoordinate(_) => "zero_coordinate",
        ConstructionError::SearchOverflow { .. } => "search_overflow",
        ConstructionError::CertificateFailure { .. } => "certificate",
        ConstructionError::RootOfZero(_) => "root_of_zero",
        _ => return Err(InputError(e.to_string())),
    };
    r.push(Check::violated(name, anchor, e.to_string()));
    Ok(())
}

fn save_vectors(path: &Option<PathBuf>, r: &mut RunReport, named: &[(&str, &SeqVector)]) -> Result<(), InputError> {
    let names: Vec<&str> = named.iter().map(|(n, _)| *n).collect();
    r.result("vector_names", &names);
    r.result("vector_lengths", named.iter().map(|(_, v)| v.len()).collect::<Vec<_>>());
    if let Some(p) = path {
        let arr: Vec<Value> = named.iter().map(|(_, v)| v.to_json()).collect();
        write_json(p, &Value::Array(arr))?;
    }
    Ok(())
}

pub fn build(a: &BuildArgs) -> Result<RunReport, InputError> {
    let target = match a.target {
        BuildTarget::Companion => "companion",
        BuildTarget::UniversalL1 => "universal_l1",
        BuildTarget::DeltaD => "delta_d",
        BuildTarget::QBlocks => "q_blocks",
        BuildTarget::SymmetricPreimage => "symmetric_preimage",
    };
    let params = json!({
        "target": target, "blocks": a.blocks, "init": a.init, "tol": a.tol, "weights": a.weights,
        "lambda": a.lambda, "len": a.len, "seed": a.seed,
    });
    let mut r = RunReport::new("build", params);
    match a.target {
        BuildTarget::Companion => build_companion(a, &mut r)?,
        BuildTarget::UniversalL1 => build_universal(a, &mut r)?,
        BuildTarget::DeltaD => build_delta_d(a, &mut r)?,
        BuildTarget::QBlocks => build_q(a, &mut r)?,
        BuildTarget::SymmetricPreimage => build_symmetric(a, &mut r)?,
    }
    Ok(r.finish())
}

fn build_companion(a: &BuildArgs, r: &mut RunReport) -> Result<(), InputError> {
    let w = parse_weights(&a.weights)?;
    let tol = a.tol.unwrap_or(1e-8);
    let y = match &a.init {
        Some(p) => read_vector(p)?,
        None => SeqVector::from_reals(&[1.0; 21], SpaceTag::L1)?,
    };
    if y.len() < 2 {
        return Err(InputError("y needs at least two coordinates".into()));
    }
    let n_max = y.len() - 1;
    let report = match weight_identity(&y, &w, n_max) {
        Ok(rep) => rep,
        Err(e) => return builder_failure(r, e, ANCHOR_COMPANION),
    };
    for e in &report.entries {
        r.push(Check::le(format!("weight_identity[{}]", e.n), e.rel_err, tol, ANCHOR_COMPANION));
    }
    let inexact = report.entries.iter().filter(|e| !e.exact).count();
    r.push(Check::le("exact_exponents", inexact as f64, 0.0, ANCHOR_COMPANION));
    r.push(Check::le("float_ledger", report.max_float_rel_err, tol, ANCHOR_COMPANION));
    let a_n = a_seq(n_max)?;
    let x = match companion_x(&y, &w, &a_n) {
        Ok(x) => x,
        Err(e) => return builder_failure(r, e, ANCHOR_COMPANION),
    };
    r.result("max_coordinate_dev", report.max_coordinate_dev);
    save_vectors(&a.vectors, r, &[("x", &x), ("y", &y)])
}

fn build_universal(a: &BuildArgs, r: &mut RunReport) -> Result<(), InputError> {
    if a.blocks < 2 {
        return Err(InputError("universal_l1 needs at least two blocks".into()));
    }
    let dense = DenseTestSeq::new();
    let seq = a_seq(DEFAULT_SEARCH_CAP + a.blocks + 1)?;
    let schedule = match gap_schedule_search(&dense, &WeightSeq::inverse_square(), &seq, a.blocks, DEFAULT_SEARCH_CAP) {
        Ok(s) => s,
        Err(e) => return builder_failure(r, e, ANCHOR_UNIVERSAL),
    };
    let unsatisfied = schedule.records.iter().filter(|rec| !rec.satisfied()).count();
    r.push(Check::le("gap_conditions", unsatisfied as f64, 0.0, ANCHOR_UNIVERSAL));
    let u = match universal_y_l1(&schedule, &dense) {
        Ok(u) => u,
        Err(e) => return builder_failure(r, e, ANCHOR_UNIVERSAL),
    };
    push_certificates(r, &u.certificates, ANCHOR_UNIVERSAL);
    r.result("n", &schedule.n);
    r.result("records", &schedule.records);
    r.result("log_residuals", u.log_residuals.iter().map(|v| finite_or_null(*v)).collect::<Vec<_>>());
    save_vectors(&a.vectors, r, &[("z", &u.z)])
}

fn build_delta_d(a: &BuildArgs, r: &mut RunReport) -> Result<(), InputError> {
    let g = match &a.init {
        Some(p) => read_vector(p)?,
        None => {
            if a.len == 0 {
                return Err(InputError("len must be positive".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let coords: Vec<LogComplex> = (0..a.len)
                .map(|n| LogComplex::new(rng.gen_range(0.2f64..5.0).ln() - ln_factorial(n), rng.gen_range(-3.0..3.0)))
                .collect();
            SeqVector::new(coords, SpaceTag::Hc(1))?
        }
    };
    let pair = match delta_d_pair(&g) {
        Ok(p) => p,
        Err(e) => return builder_failure(r, e, ANCHOR_DELTA_D),
    };
    push_certificates(r, &pair.certificates, ANCHOR_DELTA_D);
    r.result("n_max", pair.n_max);
    let g = g.with_space(pair.f.space());
    save_vectors(&a.vectors, r, &[("f", &pair.f), ("g", &g)])
}

fn build_q(a: &BuildArgs, r: &mut RunReport) -> Result<(), InputError> {
    if a.blocks == 0 {
        return Err(InputError("q_blocks needs at least one block".into()));
    }
    let q = match hc_q_blocks(&DenseTestSeq::new(), a.blocks) {
        Ok(q) => q,
        Err(e) => return builder_failure(r, e, ANCHOR_Q),
    };
    push_certificates(r, &q.certificates, ANCHOR_Q);

    // the collapse bound at half the admissible |f(0)|, with |g^(n)(0)| = n!
    let n_max = 40;
    let g = SeqVector::from_reals(&[1.0; 41], SpaceTag::Hc(1))?;
    let delta = verify_weight_collapse(0.0, &g, 1)?.delta;
    let collapse = verify_weight_collapse(0.5 * delta, &g, n_max)?;
    let excess = collapse.entries.iter().map(|e| e.log_c - e.log_bound).fold(f64::NEG_INFINITY, f64::max);
    r.push(Check::le("weight_collapse", excess, 0.0, ANCHOR_COLLAPSE).with_note(format!("log excess over n <= {n_max}")));

    r.result("n", &q.n);
    r.result("blocks", &q.blocks);
    r.result("constant", q.constant);
    save_vectors(&a.vectors, r, &[("q", &q.q)])
}

fn build_symmetric(a: &BuildArgs, r: &mut RunReport) -> Result<(), InputError> {
    let w = parse_weights(&a.weights)?;
    let tol = a.tol.unwrap_or(1e-12);
    let x0 = match &a.init {
        Some(p) => read_vector(p)?,
        None => SeqVector::from_reals(&[3.0], SpaceTag::L1)?,
    };
    let (re, im) = parse_pair(&a.lambda, "lambda")?;
    let p = match symmetric_preimage(&x0, LogComplex::from_parts(re, im), &w) {
        Ok(p) => p,
        Err(e) => return builder_failure(r, e, ANCHOR_SYMMETRIC),
    };
    r.push(Check::le("symmetric_residual", p.residual, tol, ANCHOR_SYMMETRIC));
    save_vectors(&a.vectors, r, &[("x", &p.x), ("y", &p.y)])
}

pub struct ConjugateArgs {
    pub basis: Basis,
    pub n: usize,
    pub samples: usize,
    pub random_pairs: usize,
    pub scale: Option<f64>,
    pub steps: usize,
    pub tol: f64,
    pub seed: u64,
}

pub fn conjugate(a: &ConjugateArgs) -> Result<RunReport, InputError> {
    let kind = match a.basis {
        Basis::Identity => BasisKind::Identity,
        Basis::Diagonal => match a.scale {
            Some(s) => BasisKind::Diagonal(vec![s]),
            None => BasisKind::default_diagonal(a.n),
        },
        Basis::Banded => BasisKind::Banded(a.scale.unwrap_or(0.3)),
    };
    let params = json!({
        "basis": kind, "n": a.n, "samples": a.samples, "random_pairs": a.random_pairs,
        "steps": a.steps, "tol": a.tol, "seed": a.seed,
    });
    let mut r = RunReport::new("conjugate", params);
    let basis = host_basis(kind, a.n)?;
    let w = WeightSeq::inverse_square();
    let n_op = build_n(&basis, &w)?;
    let m = MultilinearSpec::m_l1(w);
    r.push(Check::le("biorthogonality", basis.biorthogonality_residual(), BIORTHOGONALITY_TOL, ANCHOR_BASIS));
    let comm = commutation_check(&m, &n_op, a.samples, a.random_pairs, a.seed)?;
    r.push(Check::le("commutation_basis_pairs", comm.basis_max, a.tol, ANCHOR_CONJ));
    if comm.random_pairs > 0 {
        r.push(Check::le("commutation_random_pairs", comm.random_max, a.tol, ANCHOR_CONJ));
    }
    if a.steps > 0 {
        let x: Vec<f64> = (1..=a.n).map(|i| 0.5 / i as f64).collect();
        let y: Vec<f64> = (1..=a.n).map(|i| 0.4 * (i as f64).cos() / i as f64).collect();
        let init = [SeqVector::from_reals(&x, SpaceTag::L1)?, SeqVector::from_reals(&y, SpaceTag::L1)?];
        match pushforward_orbit_check(&m, &n_op, &init, a.steps) {
            Ok(p) => {
                r.push(Check::le("pushforward", p.max_residual, PUSHFORWARD_TOL, ANCHOR_PUSH));
                r.result("pushforward_residuals", &p.residuals);
            }
            Err(ConjugationError::WindowExhausted(k)) => {
                r.push(Check::skip("pushforward", ANCHOR_PUSH, format!("truncation window of length {} exhausted at step {k}", a.n)))
            }
            Err(e) => return Err(e.into()),
        }
    }
    r.result("basis_bound", basis.bound);
    r.result("host_dim", basis.host_dim());
    r.result("basis_pairs", comm.basis_pairs);
    Ok(r.finish())
}

pub fn julia(direction: Option<PathBuf>, bracket: &str, tol: f64, weights: &str) -> Result<RunReport, InputError> {
    let w = parse_weights(weights)?;
    let (lo, hi) = parse_pair(bracket, "bracket")?;
    let cfg = JuliaConfig::default();
    let params = json!({ "direction": direction, "bracket": [lo, hi], "tol": tol, "weights": weights, "config": cfg });
    let mut r = RunReport::new("julia", params);
    let v = match &direction {
        Some(p) => read_vector(p)?,
        None => factorial_tail(cfg.truncation),
    };
    match julia_ray_bisection(&w, &v, lo, hi, tol, &cfg) {
        Ok(p) => {
            r.push(Check::le("bracket_width", p.width(), tol, ANCHOR_JULIA));
            r.result("t_lo", p.t_lo);
            r.result("t_hi", p.t_hi);
            r.result("class_lo", p.class_lo.as_str());
            r.result("class_hi", p.class_hi.as_str());
            r.result("steps", p.steps);
        }
        Err(e @ (ConstructionError::BadBracket(_) | ConstructionError::UndecidedRegion | ConstructionError::InvalidParameter(_))) => {
            let name = if matches!(e, ConstructionError::BadBracket(_)) { "bad_bracket" } else { "bisection" };
            r.push(Check::violated(name, ANCHOR_JULIA, e.to_string()));
        }
        Err(e) => return Err(e.into()),
    }
    Ok(r.finish())
}
