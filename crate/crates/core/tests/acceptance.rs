//! End-to-end acceptance suite; prints one PASS/FAIL line per criterion.
//!
//! A criterion whose printed reference formula disagrees with the implementation
//! is reported as FAIL, while the corrected variant of that formula is asserted.

use std::process::Command;
use std::time::{Duration, Instant};

use gradsym::algebra::{linalg, q, qi, AlgebraContext, Ctx, Monomial, Scalar};
use gradsym::calculus::{
    commutator, de_rham, interior, lie_derivative, pullback, FCtx, Form, FormContext, Op, VectorField,
};
use gradsym::cli::{self, parse_expression, SessionFile};
use gradsym::darboux::{darboux_normalize, euler_homotopy, verify_normal_form};
use gradsym::dynamics::{
    bialgebroid_potential, build_gauge_system, build_para_oscillator, double_bundle, flow_matrix,
    hamilton_equations, linear_flow, matrix_exponential, standard_cohomology, GaugeSystem, StandardCohomology,
};
use gradsym::random::{
    random_context, random_element, random_form, random_homogeneous_in, random_odd_context, random_substitution,
    random_vector_field, Shape,
};
use gradsym::symplectic::{build_structure, canonical_cotangent, standard_structure, ShiftedCotangent, SymplecticStructure};
use gradsym::{canonical_order, Degree, Element, Error, Q};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LAW_CASES: usize = 500;

struct Verdict {
    pass: bool,
    /// Everything except checks of printed formulas known to be wrong.
    sound: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Verdict {
        Verdict { pass, sound: pass, detail: detail.into() }
    }
}

fn signed(e: Element, bit: u8) -> Element {
    if bit == 1 {
        -e
    } else {
        e
    }
}

fn deg(e: &Element) -> Degree {
    e.homogeneous_degree().unwrap_or_else(|| e.ctx().zero_degree())
}

fn d(bits: &[u8]) -> Degree {
    Degree::of(bits)
}

fn gen(ctx: &Ctx, name: &str) -> Element {
    Element::named(ctx, name).unwrap()
}

fn dd(f: &FCtx, a: &str, b: &str) -> Form {
    &Form::named(f, &format!("d:{a}")).unwrap() * &Form::named(f, &format!("d:{b}")).unwrap()
}

fn r2211() -> FCtx {
    let base = AlgebraContext::new(
        2,
        &[
            ("x", d(&[0, 0])),
            ("p", d(&[0, 0])),
            ("z", d(&[1, 1])),
            ("w", d(&[1, 1])),
            ("xi", d(&[0, 1])),
            ("theta", d(&[1, 0])),
        ],
        5,
    )
    .unwrap();
    FormContext::new(&base).unwrap()
}

fn r1111(trunc: u32) -> FCtx {
    let base = AlgebraContext::new(
        2,
        &[("x", d(&[0, 0])), ("z", d(&[1, 1])), ("xi", d(&[0, 1])), ("theta", d(&[1, 0]))],
        trunc,
    )
    .unwrap();
    FormContext::new(&base).unwrap()
}

// ---------------------------------------------------------------- criterion 1

fn example_structures() -> Verdict {
    let start = Instant::now();
    let mut ok = true;
    let f = r2211();
    let w = &(&(&dd(&f, "x", "p") + &dd(&f, "z", "w")) + &dd(&f, "xi", "xi")) + &dd(&f, "theta", "theta");
    match build_structure(&w) {
        Ok(s) => {
            ok &= s.is_closed() && s.gamma() == d(&[0, 0]);
            let r = s.reduce().unwrap();
            ok &= r.nondegenerate && r.form.to_string() == "d:x*d:p";
        }
        Err(_) => ok = false,
    }
    let f = r1111(4);
    for (a, b, c, e, g) in [
        ("x", "z", "theta", "xi", [1, 1]),
        ("x", "xi", "z", "theta", [0, 1]),
        ("x", "theta", "z", "xi", [1, 0]),
    ] {
        match build_structure(&(&dd(&f, a, b) + &dd(&f, c, e))) {
            Ok(s) => ok &= s.is_closed() && s.gamma() == d(&g),
            Err(_) => ok = false,
        }
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(1);
    Verdict::new(ok, format!("4 structures closed and nondegenerate, reduced form d:x*d:p, {elapsed:.2?}"))
}

// ---------------------------------------------------------------- criterion 2

/// One printed term: sign · (−1)^⟨shift, deg f⟩ · ∂f/∂a · ∂g/∂b.
type PrintedTerm = (i64, Option<[u8; 2]>, &'static str, &'static str);

const PRINTED_11: [PrintedTerm; 4] =
    [(1, Some([1, 1]), "z", "x"), (-1, None, "x", "z"), (-1, Some([1, 0]), "theta", "xi"), (-1, Some([0, 1]), "xi", "theta")];
const PRINTED_01: [PrintedTerm; 4] =
    [(-1, Some([0, 1]), "xi", "x"), (-1, None, "x", "xi"), (1, Some([1, 1]), "z", "theta"), (-1, Some([1, 0]), "theta", "z")];
const PRINTED_10: [PrintedTerm; 4] =
    [(-1, Some([1, 0]), "theta", "x"), (-1, None, "x", "theta"), (1, Some([1, 1]), "z", "xi"), (-1, Some([0, 1]), "xi", "z")];
/// Degree-(1,1) expansion with the sign of the θξ term fixed by shifted skew symmetry.
const CORRECTED_11: [PrintedTerm; 4] =
    [(1, Some([1, 1]), "z", "x"), (-1, None, "x", "z"), (1, Some([1, 0]), "theta", "xi"), (-1, Some([0, 1]), "xi", "theta")];

fn printed_bracket(terms: &[PrintedTerm], f: &Element, g: &Element) -> Element {
    let ctx = f.ctx();
    let mut out = Element::zero(ctx);
    for (df, fh) in f.homogeneous_components() {
        for &(sign, shift, a, b) in terms {
            let term = &fh.partial(ctx.index_of(a).unwrap()) * &g.partial(ctx.index_of(b).unwrap());
            let bit = shift.map_or(0, |s| d(&s).dot(&df));
            out = &out + &signed(term.scale(&qi(sign)), bit);
        }
    }
    out
}

const R1111_FORMS: [(&str, [&str; 4], [PrintedTerm; 4]); 3] = [
    ("w11", ["x", "z", "theta", "xi"], PRINTED_11),
    ("w01", ["x", "xi", "z", "theta"], PRINTED_01),
    ("w10", ["x", "theta", "z", "xi"], PRINTED_10),
];

fn printed_brackets() -> Verdict {
    let f = r1111(4);
    let ctx = f.base().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut agree = Vec::new();
    let mut corrected_ok = true;
    for (name, [a, b, c, e], printed) in R1111_FORMS {
        let s = build_structure(&(&dd(&f, a, b) + &dd(&f, c, e))).unwrap();
        let mut hits = 0;
        for _ in 0..200 {
            let (u, v) = (random_element(&mut rng, &ctx, 4), random_element(&mut rng, &ctx, 4));
            let got = s.poisson_bracket(&u, &v);
            if got == printed_bracket(&printed, &u, &v) {
                hits += 1;
            }
            let reference = if name == "w11" { CORRECTED_11 } else { printed };
            corrected_ok &= got == printed_bracket(&reference, &u, &v);
        }
        agree.push(format!("{name} {hits}/200"));
    }
    let pass = agree.iter().all(|s| s.ends_with(" 200/200"));
    Verdict {
        pass,
        sound: corrected_ok,
        detail: format!(
            "printed expansions agree on {}; corrected degree-(1,1) expansion agrees on all pairs: {corrected_ok}",
            agree.join(", ")
        ),
    }
}

// ---------------------------------------------------------------- criterion 3

fn law_context(rng: &mut ChaCha8Rng) -> Ctx {
    random_context(rng, &Shape { max_rank: 3, max_gens: 6, min_trunc: 3, max_trunc: 5, max_terms: 3 })
}

fn cotangent(rng: &mut ChaCha8Rng, rank: Option<usize>, gamma: Option<Degree>) -> ShiftedCotangent {
    loop {
        let n = rank.unwrap_or_else(|| rng.gen_range(1..=3));
        let degs = canonical_order(n).unwrap();
        let k = rng.gen_range(1..=3);
        let gens: Vec<(String, Degree)> = (0..k).map(|i| (format!("a{i}"), degs[rng.gen_range(0..degs.len())])).collect();
        let refs: Vec<(&str, Degree)> = gens.iter().map(|(s, d)| (s.as_str(), *d)).collect();
        let base = AlgebraContext::new(n, &refs, rng.gen_range(4..=5)).unwrap();
        let gm = gamma.unwrap_or_else(|| degs[rng.gen_range(0..degs.len())]);
        if let Ok(t) = canonical_cotangent(&base, gm) {
            return t;
        }
    }
}

/// A closed structure with nonconstant components.
fn curved(rng: &mut ChaCha8Rng, t: &ShiftedCotangent) -> SymplecticStructure {
    let phi = random_substitution(rng, t.ctx());
    build_structure(&pullback(t.structure().omega(), &phi).unwrap()).unwrap()
}

fn homogeneous(rng: &mut ChaCha8Rng, ctx: &Ctx, lo: u32, hi: u32) -> Element {
    random_homogeneous_in(rng, ctx, None, 3, lo, hi)
}

fn below(e: &Element, k: u32) -> Element {
    e.truncate_at(k)
}

struct Law {
    name: &'static str,
    cases: usize,
    failures: usize,
    printed: bool,
}

fn run_law(name: &'static str, printed: bool, seed: u64, cases: usize, mut case: impl FnMut(&mut ChaCha8Rng) -> bool) -> Law {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let failures = (0..cases).filter(|_| !case(&mut rng)).count();
    Law { name, cases, failures, printed }
}

fn graded_product(rng: &mut ChaCha8Rng) -> bool {
    let ctx = law_context(rng);
    let (a, b) = (homogeneous(rng, &ctx, 0, 5), homogeneous(rng, &ctx, 0, 5));
    let c = random_element(rng, &ctx, 3);
    let comm = &a * &b == signed(&b * &a, deg(&a).dot(&deg(&b)));
    let assoc = &(&a * &b) * &c == &a * &(&b * &c);
    comm && assoc
}

fn cartan(rng: &mut ChaCha8Rng) -> bool {
    let f = FormContext::new(&law_context(rng)).unwrap();
    let t = f.base().trunc();
    let a = random_form(rng, &f, None, 3, 3);
    let x = random_vector_field(rng, f.base(), None, 2, 3);
    let y = random_vector_field(rng, f.base(), None, 2, 3);
    let cut = |v: Form, k: u32| v.truncate_at(k);
    let (dd_, ii) = (commutator(&Op::D, &Op::D, &a), commutator(&Op::I(x.clone()), &Op::I(y.clone()), &a));
    let di = commutator(&Op::D, &Op::I(x.clone()), &a);
    let dl = commutator(&Op::D, &Op::L(x.clone()), &a);
    let xy = x.bracket(&y);
    let li = commutator(&Op::L(x.clone()), &Op::I(y.clone()), &a);
    let ll = commutator(&Op::L(x.clone()), &Op::L(y.clone()), &a);
    cut(dd_, t).is_zero()
        && cut(ii, t).is_zero()
        && cut(di, t - 1) == cut(lie_derivative(&x, &a), t - 1)
        && cut(dl, t - 2).is_zero()
        && cut(li, t - 1) == cut(interior(&xy, &a), t - 1)
        && cut(ll, t - 2) == cut(lie_derivative(&xy, &a), t - 2)
}

/// Both sides of the three-slot expansion of i_X i_Y i_Z dα; `printed` selects the bracket terms.
fn three_slot(rng: &mut ChaCha8Rng, printed: bool) -> bool {
    let f = FormContext::new(&law_context(rng)).unwrap();
    let b = f.base();
    let a = random_form(rng, &f, Some(2), 3, 3);
    let (x, y, z) = (
        random_vector_field(rng, b, None, 2, 2),
        random_vector_field(rng, b, None, 2, 2),
        random_vector_field(rng, b, None, 2, 2),
    );
    let ii = |u: &VectorField, v: &VectorField| interior(u, &interior(v, &a)).as_function().unwrap();
    let (dx, dy, dz) = (x.degree(), y.degree(), z.degree());
    let lhs = interior(&x, &interior(&y, &interior(&z, &de_rham(&a)))).as_function().unwrap();
    let mut rhs = x.apply(&ii(&y, &z));
    rhs = &rhs + &signed(y.apply(&ii(&z, &x)), dx.dot(&(dy + dz)));
    rhs = &rhs + &signed(z.apply(&ii(&x, &y)), dz.dot(&(dx + dy)));
    if printed {
        rhs = &rhs - &ii(&z, &x.bracket(&y));
        rhs = &rhs - &signed(ii(&x, &y.bracket(&z)), dx.dot(&(dy + dz)));
        rhs = &rhs + &signed(ii(&y, &x.bracket(&z)), dz.dot(&dy));
    } else {
        rhs = &rhs + &signed(ii(&z, &x.bracket(&y)), dz.dot(&(dx + dy)));
        rhs = &rhs + &ii(&x, &y.bracket(&z));
        rhs = &rhs - &signed(ii(&y, &x.bracket(&z)), dx.dot(&dy));
    }
    let k = b.trunc() - 1;
    below(&lhs, k) == below(&rhs, k)
}

fn bracket_axioms(rng: &mut ChaCha8Rng) -> bool {
    let t = cotangent(rng, None, None);
    let s = curved(rng, &t);
    let ctx = s.ctx().clone();
    let gm = s.gamma();
    let k = ctx.trunc() - 1;
    let (f, g, h) = (homogeneous(rng, &ctx, 1, 3), homogeneous(rng, &ctx, 1, 3), homogeneous(rng, &ctx, 0, 3));
    let (df, dg) = (deg(&f), deg(&g));
    let fg = s.poisson_bracket(&f, &g);
    let degree_ok = fg.is_zero() || fg.is_homogeneous_of(df + dg + gm);
    let skew = fg == -signed(s.poisson_bracket(&g, &f), (df + gm).dot(&(dg + gm)));
    let lhs = s.poisson_bracket(&f, &(&g * &h));
    let rhs = &(&fg * &h) + &signed(&g * &s.poisson_bracket(&f, &h), (df + gm).dot(&dg));
    degree_ok && skew && below(&lhs, k) == below(&rhs, k)
}

fn jacobi_closed(rng: &mut ChaCha8Rng) -> bool {
    let t = cotangent(rng, None, None);
    let s = if rng.gen_bool(0.5) { curved(rng, &t) } else { t.structure().clone() };
    let ctx = s.ctx().clone();
    let gm = s.gamma();
    let (f, g, h) = (homogeneous(rng, &ctx, 0, 3), homogeneous(rng, &ctx, 0, 3), homogeneous(rng, &ctx, 0, 3));
    let br = |u: &Element, v: &Element| s.poisson_bracket(u, v);
    let lhs = br(&f, &br(&g, &h));
    let rhs = &br(&br(&f, &g), &h) + &signed(br(&g, &br(&f, &h)), (deg(&f) + gm).dot(&(deg(&g) + gm)));
    let k = ctx.trunc() - 2;
    s.is_closed() && below(&lhs, k) == below(&rhs, k)
}

/// Jacobi residual on a non-closed structure against i_{X_f} i_{X_g} i_{X_h} dω with the given sign.
fn jacobi_residual(rng: &mut ChaCha8Rng, sign: i64) -> bool {
    let s = loop {
        let t = cotangent(rng, None, None);
        let f = t.structure().fctx().clone();
        let pert = random_form(rng, &f, Some(2), 4, 2);
        let Some((_, pert)) = pert.homogeneous_components().into_iter().find(|(d, _)| *d == t.gamma()) else {
            continue;
        };
        let pert = &pert - &pert.order_part(0);
        if let Ok(s) = build_structure(&(t.structure().omega() + &pert)) {
            if !s.is_closed() {
                break s;
            }
        }
    };
    let ctx = s.ctx().clone();
    let gm = s.gamma();
    let (a, b, c) = (homogeneous(rng, &ctx, 1, 2), homogeneous(rng, &ctx, 1, 2), homogeneous(rng, &ctx, 1, 2));
    let (da, db, dc) = (deg(&a), deg(&b), deg(&c));
    let br = |u: &Element, v: &Element| s.poisson_bracket(u, v);
    let cyc = &(&br(&a, &br(&b, &c)) + &signed(br(&b, &br(&c, &a)), (da + gm).dot(&(db + dc))))
        + &signed(br(&c, &br(&a, &b)), (dc + gm).dot(&(da + db)));
    let jac = s.jacobiator(&a, &b, &c);
    let xs: Vec<VectorField> = [&a, &b, &c].iter().map(|e| s.hamiltonian_vf(e).unwrap()).collect();
    let three = interior(&xs[0], &interior(&xs[1], &interior(&xs[2], &de_rham(s.omega())))).as_function().unwrap();
    let k = ctx.trunc() - 3;
    below(&cyc, k) == below(&jac, k) && below(&cyc, k) == below(&three.scale(&qi(sign)), k)
}

fn inverse_symmetry(rng: &mut ChaCha8Rng) -> bool {
    let t = cotangent(rng, None, None);
    let s = curved(rng, &t);
    let ctx = s.ctx();
    let gm = s.gamma();
    let p = s.poisson_tensor();
    (0..ctx.len()).all(|i| {
        (0..ctx.len()).all(|k| {
            let bit = ctx.degree(i).dot(&ctx.degree(k)) ^ gm.dot(&gm);
            p.get(i, k).clone() == -signed(p.get(k, i).clone(), bit)
        })
    }) && s.inverse().mul(s.components()).unwrap().is_identity()
}

fn hamiltonian_morphism(rng: &mut ChaCha8Rng) -> bool {
    let t = cotangent(rng, None, None);
    let s = curved(rng, &t);
    let ctx = s.ctx().clone();
    let (f, g) = (homogeneous(rng, &ctx, 1, 3), homogeneous(rng, &ctx, 1, 3));
    let lhs = s.hamiltonian_vf(&f).unwrap().bracket(&s.hamiltonian_vf(&g).unwrap());
    let rhs = s.hamiltonian_vf(&s.poisson_bracket(&f, &g)).unwrap();
    let k = ctx.trunc() - 2;
    (0..ctx.len()).all(|i| below(lhs.component(i), k) == below(rhs.component(i), k))
}

fn bv_anomaly(rng: &mut ChaCha8Rng, gamma: Degree) -> bool {
    let t = cotangent(rng, Some(2), Some(gamma));
    let ctx = t.ctx();
    let (f, g) = (homogeneous(rng, ctx, 0, 4), homogeneous(rng, ctx, 0, 4));
    let df = deg(&f);
    let lap = |e: &Element| t.bv_laplacian(e).unwrap();
    let lhs = &(&lap(&(&f * &g)) - &(&lap(&f) * &g)) - &signed(&f * &lap(&g), gamma.dot(&df));
    let rhs = signed(t.structure().poisson_bracket(&f, &g), (df + gamma).dot(&gamma));
    let k = ctx.trunc() - 2;
    below(&lhs, k) == below(&rhs, k)
}

fn algebraic_laws() -> Verdict {
    let laws = vec![
        run_law("graded product", false, 31, LAW_CASES, graded_product),
        run_law("Cartan relations", false, 32, LAW_CASES, cartan),
        run_law("three-slot identity (printed)", true, 33, LAW_CASES, |r| three_slot(r, true)),
        run_law("three-slot identity (derived)", false, 33, LAW_CASES, |r| three_slot(r, false)),
        run_law("bracket degree/skew/Leibniz", false, 34, LAW_CASES, bracket_axioms),
        run_law("Jacobi, closed", false, 35, LAW_CASES, jacobi_closed),
        run_law("d-omega residual (printed sign +)", true, 36, LAW_CASES, |r| jacobi_residual(r, 1)),
        run_law("d-omega residual (sign -)", false, 36, LAW_CASES, |r| jacobi_residual(r, -1)),
        run_law("inverse symmetry", false, 37, LAW_CASES, inverse_symmetry),
        run_law("[X_f,X_g] = X_{f,g}", false, 38, LAW_CASES, hamiltonian_morphism),
        run_law("BV anomaly, degree (0,1)", false, 39, LAW_CASES, |r| bv_anomaly(r, d(&[0, 1]))),
        run_law("BV anomaly, degree (1,0)", false, 40, LAW_CASES, |r| bv_anomaly(r, d(&[1, 0]))),
    ];
    let pass = laws.iter().all(|l| l.failures == 0);
    let sound = laws.iter().filter(|l| !l.printed).all(|l| l.failures == 0);
    let detail = laws
        .iter()
        .map(|l| format!("{} {}/{}", l.name, l.cases - l.failures, l.cases))
        .collect::<Vec<_>>()
        .join("; ");
    Verdict { pass, sound, detail }
}

// ---------------------------------------------------------------- criterion 4

/// Hand table for n = 2, sector sizes ordered (0,0), (1,1), (0,1), (1,0).
fn dimension_oracle(gamma: [u8; 2], q: [usize; 4]) -> bool {
    let [q00, q11, q01, q10] = q;
    match gamma {
        [0, 0] => q00 % 2 == 0 && q11 % 2 == 0,
        [1, 1] => q00 == q11 && q01 == q10,
        [0, 1] => q00 == q01 && q11 == q10,
        [1, 0] => q00 == q10 && q11 == q01,
        _ => unreachable!(),
    }
}

fn dimension_constraints() -> Verdict {
    let sectors = [d(&[0, 0]), d(&[1, 1]), d(&[0, 1]), d(&[1, 0])];
    let (mut total, mut agree) = (0, 0);
    for code in 1..81usize {
        let q = [code % 3, code / 3 % 3, code / 9 % 3, code / 27 % 3];
        let names: Vec<(String, Degree)> = q
            .iter()
            .zip(sectors)
            .flat_map(|(&k, s)| (0..k).map(move |i| (format!("s{}_{i}", s.word()), s)))
            .collect();
        let refs: Vec<(&str, Degree)> = names.iter().map(|(n, d)| (n.as_str(), *d)).collect();
        let ctx = AlgebraContext::new(2, &refs, 3).unwrap();
        for gamma in [[0, 0], [1, 1], [0, 1], [1, 0]] {
            total += 1;
            let built = match standard_structure(&ctx, d(&gamma)) {
                Ok(s) => s.is_closed(),
                Err(Error::Constraint(_)) => false,
                Err(e) => panic!("unexpected error {e}"),
            };
            if built == dimension_oracle(gamma, q) {
                agree += 1;
            }
        }
    }
    Verdict::new(agree == total, format!("{agree}/{total} signature and degree combinations agree with the table"))
}

// ---------------------------------------------------------------- criterion 5

fn perturbed(rng: &mut ChaCha8Rng, s: &SymplecticStructure) -> Option<SymplecticStructure> {
    let f = s.fctx();
    let beta = random_form(rng, f, Some(1), 4, f.base().trunc());
    let beta = beta.homogeneous_components().into_iter().find(|(k, _)| *k == s.gamma())?.1;
    let beta = beta.value().filter(|m| f.polynomial_degree_of(m) >= 3);
    build_structure(&(s.omega() + &de_rham(&Form::new(f, beta).ok()?))).ok()
}

fn random_structure(rng: &mut ChaCha8Rng, ctx: &Ctx) -> Option<SymplecticStructure> {
    let degs = canonical_order(ctx.rank()).ok()?;
    let base = standard_structure(ctx, degs[rng.gen_range(0..degs.len())]).ok()?;
    build_structure(&pullback(base.omega(), &random_substitution(rng, ctx)).ok()?).ok()
}

fn darboux() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut homotopy = 0;
    for _ in 0..LAW_CASES {
        let ctx = random_context(&mut rng, &Shape { max_rank: 3, max_gens: 4, min_trunc: 4, max_trunc: 5, max_terms: 4 });
        let f = FormContext::new(&ctx).unwrap();
        let b = random_form(&mut rng, &f, None, 4, ctx.trunc() - 1);
        let b = Form::new(&f, b.value().filter(|m| f.polynomial_degree_of(m) + f.form_degree_of(m) > 0)).unwrap();
        let lhs = &euler_homotopy(&de_rham(&b)).unwrap() + &de_rham(&euler_homotopy(&b).unwrap());
        if lhs.truncate_at(ctx.trunc() - 1) == b.truncate_at(ctx.trunc() - 1) {
            homotopy += 1;
        }
    }

    let start = Instant::now();
    let (mut odd_cases, mut odd_exact, mut odd_gamma, mut odd_gamma_clean) = (0, 0, 0, 0);
    while odd_cases < 100 {
        let ctx = random_odd_context(&mut rng, 2, 6, 7);
        let Some(s) = random_structure(&mut rng, &ctx).and_then(|s| perturbed(&mut rng, &s)) else { continue };
        odd_cases += 1;
        let r = darboux_normalize(&s).unwrap();
        let v = verify_normal_form(&s, &r).unwrap();
        if v.ok && v.lowest_order.is_none() && r.residual_order == ctx.trunc() {
            odd_exact += 1;
        }
        if s.gamma().is_odd() {
            odd_gamma += 1;
            odd_gamma_clean += usize::from(r.diagonals.is_empty());
        }
    }
    let odd_time = start.elapsed();

    let (mut even_cases, mut even_ok) = (0, 0);
    while even_cases < 100 {
        let ctx = random_context(&mut rng, &Shape { max_rank: 2, max_gens: 4, min_trunc: 4, max_trunc: 5, max_terms: 1 });
        if (0..ctx.len()).all(|i| ctx.is_odd(i)) {
            continue;
        }
        let Some(s) = random_structure(&mut rng, &ctx) else { continue };
        even_cases += 1;
        let r = darboux_normalize(&s).unwrap();
        if r.residual_order >= ctx.trunc() && verify_normal_form(&s, &r).unwrap().ok {
            even_ok += 1;
        }
        if s.gamma().is_odd() {
            odd_gamma += 1;
            odd_gamma_clean += usize::from(r.diagonals.is_empty());
        }
    }

    let pass = homotopy == LAW_CASES
        && odd_exact == odd_cases
        && odd_time < Duration::from_secs(10)
        && even_ok == even_cases
        && odd_gamma_clean == odd_gamma;
    Verdict::new(
        pass,
        format!(
            "homotopy {homotopy}/{LAW_CASES}; odd contexts exact {odd_exact}/{odd_cases} in {odd_time:.2?}; \
             even contexts reach T {even_ok}/{even_cases}; odd degree without diagonals {odd_gamma_clean}/{odd_gamma}"
        ),
    )
}

// ---------------------------------------------------------------- criterion 6

fn printed_para_equations(ctx: &Ctx, m: &Q, k: &Q, lambda: &Q) -> Vec<(&'static str, Element)> {
    let inv_m = qi(1) / m;
    vec![
        ("q1", gen(ctx, "p1").scale(&inv_m)),
        ("q2", gen(ctx, "p2").scale(&inv_m)),
        ("p1", gen(ctx, "q1").scale(&-k.clone())),
        ("p2", gen(ctx, "q2").scale(&-k.clone())),
        ("psi1", gen(ctx, "psi1").scale(&-lambda.clone())),
        ("psi2", gen(ctx, "psi2").scale(&-lambda.clone())),
        ("pi1", gen(ctx, "pi1").scale(lambda)),
        ("pi2", gen(ctx, "pi2").scale(lambda)),
    ]
}

fn parastatistics() -> Verdict {
    // Both sides are affine in (1/m, k, λ); these points span that parameter space.
    let points = [
        (qi(1), qi(0), qi(0)),
        (qi(1), qi(1), qi(0)),
        (qi(1), qi(0), qi(1)),
        (qi(2), qi(0), qi(0)),
        (q(3, 2), qi(-5), q(7, 4)),
    ];
    let symbolic = points.iter().all(|(m, k, l)| {
        let h = build_para_oscillator(m, k, l).unwrap();
        let ctx = h.ctx().clone();
        let eqs = hamilton_equations(&h);
        printed_para_equations(&ctx, m, k, l).into_iter().all(|(n, e)| eqs[ctx.index_of(n).unwrap()] == e)
    });
    let h = build_para_oscillator(&qi(1), &qi(1), &qi(1)).unwrap();
    let ctx = h.ctx().clone();
    let states = linear_flow(&h, 1.0, 1e-3).unwrap();
    let last = &states.last().unwrap().coefficients;
    let a: linalg::Dense<f64> = flow_matrix(&h).unwrap().iter().map(|r| r.iter().map(Scalar::to_f64).collect()).collect();
    let reference = matrix_exponential(&a, 1.0);
    let err = last
        .iter()
        .zip(&reference)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    let psi = ctx.index_of("psi1").unwrap();
    let psi_err = (last[psi][psi] - (-1f64).exp()).abs();
    let pass = symbolic && err < 1e-10 && psi_err < 1e-10;
    Verdict::new(
        pass,
        format!("equations match at {} parameter points: {symbolic}; max flow error {err:.2e}; psi error {psi_err:.2e}", points.len()),
    )
}

// ---------------------------------------------------------------- criterion 7

fn constants(r: usize, table: &[(usize, usize, usize, i64)]) -> Vec<Vec<Vec<Q>>> {
    let mut c = vec![vec![vec![qi(0); r]; r]; r];
    for &(i, j, k, v) in table {
        c[i][j][k] = qi(v);
        c[j][i][k] = qi(-v);
    }
    c
}

/// Rank over Q by plain Gaussian elimination.
fn rank_of(mut rows: Vec<Vec<Q>>) -> usize {
    let mut rank = 0;
    let width = rows.first().map_or(0, Vec::len);
    for col in 0..width {
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][col] != qi(0)) else { continue };
        rows.swap(rank, p);
        let pivot = rows[rank][col].clone();
        for r in 0..rows.len() {
            if r != rank && rows[r][col] != qi(0) {
                let factor = &rows[r][col] / &pivot;
                rows[r] = rows[r].iter().zip(&rows[rank]).map(|(x, y)| x - &(y * &factor)).collect();
            }
        }
        rank += 1;
    }
    rank
}

/// Dense brute-force cohomology over all square-free monomials of a purely odd chart.
fn cohomology_oracle(sys: &GaugeSystem) -> Vec<(String, usize, usize)> {
    let s = sys.structure();
    let ctx = s.ctx();
    let n = ctx.len();
    let mono = |mask: usize| Monomial::from_exponents((0..n).map(|i| (mask >> i & 1) as u8).collect());
    let degree_of = |mask: usize| (0..n).filter(|i| mask >> i & 1 == 1).fold(ctx.zero_degree(), |d, i| d + ctx.degree(i));
    let delta = sys.differential_degree();
    let rank_from = |dg: Degree| {
        let masks: Vec<usize> = (0..1usize << n).filter(|&m| degree_of(m) == dg).collect();
        let rows = masks
            .iter()
            .map(|&m| {
                let img = s.poisson_bracket(sys.theta(), &Element::term(ctx, mono(m), qi(1)));
                (0..1usize << n).map(|t| img.coeff(&mono(t))).collect()
            })
            .collect();
        (masks.len(), rank_of(rows))
    };
    canonical_order(ctx.rank())
        .unwrap()
        .into_iter()
        .map(|dg| {
            let (dim, out) = rank_from(dg);
            let (_, inc) = rank_from(dg + delta);
            (dg.to_string(), dim, dim - out - inc)
        })
        .collect()
}

fn summary(c: &StandardCohomology) -> Vec<(String, usize, usize)> {
    c.sectors.iter().map(|s| (s.degree.clone(), s.dimension, s.cohomology)).collect()
}

fn gauge_systems() -> Verdict {
    let t = double_bundle(1, 2, 6).unwrap();
    let c = constants(2, &[(0, 1, 1, 1)]);
    let anchor = |a: i64, b: i64| vec![vec![Element::int(t.ctx(), a)], vec![Element::int(t.ctx(), b)]];
    let good = bialgebroid_potential(&t, &anchor(1, 0), &c).unwrap();
    let bracket_zero = t.structure().poisson_bracket(&good, &good).is_zero();
    let accepted = build_gauge_system(t.structure(), &good).is_ok();
    let broken = bialgebroid_potential(&t, &anchor(1, 1), &c).unwrap();
    let rejected = matches!(build_gauge_system(t.structure(), &broken), Err(Error::Gauge(_)));

    let ctx = AlgebraContext::new(2, &[("xi", d(&[0, 1])), ("eta", d(&[1, 0]))], 3).unwrap();
    let s = standard_structure(&ctx, d(&[1, 1])).unwrap();
    let mut matches = 0;
    let potentials = [Element::zero(&ctx), gen(&ctx, "xi"), gen(&ctx, "eta")];
    for theta in &potentials {
        let sys = build_gauge_system(&s, theta).unwrap();
        if summary(&standard_cohomology(&sys, false).unwrap()) == cohomology_oracle(&sys) {
            matches += 1;
        }
    }
    let pass = bracket_zero && accepted && rejected && matches == potentials.len();
    Verdict::new(
        pass,
        format!(
            "fixture bracket vanishes: {bracket_zero}; broken constants rejected: {rejected}; \
             cohomology matches dense oracle {matches}/{}",
            potentials.len()
        ),
    )
}

// ---------------------------------------------------------------- criterion 8

fn builtin(name: &str) -> SessionFile {
    cli::load_session(&format!("builtin:{name}")).unwrap()
}

fn gsym(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_gsym")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

const SOUP: [&str; 40] = [
    "manifold", "n", "=", "trunc", ";", "gen", "x", "y", ":", "(", ")", ",", "0", "1", "2", "let", "form", "system", "d",
    "d:x", "i", "L", "bracket", "hamiltonian", "gauge", "+", "-", "*", "^", "1/2", "0.5", "#", "\n", " ", "w", "f",
    "99999999999", "\u{3b8}", "((", "^64",
];

fn fuzz_input(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..3) {
        0 => {
            let bytes: Vec<u8> = (0..rng.gen_range(0..120)).map(|_| rng.gen()).collect();
            String::from_utf8_lossy(&bytes).into_owned()
        }
        1 => (0..rng.gen_range(0..60)).map(|_| SOUP[rng.gen_range(0..SOUP.len())]).collect::<Vec<_>>().join(" "),
        _ => {
            let tail: Vec<&str> = (0..rng.gen_range(0..30)).map(|_| SOUP[rng.gen_range(0..SOUP.len())]).collect();
            format!("manifold n=1 trunc=3; gen x : (0); gen y : (1); form w = d(x)*d(y); let f = {}", tail.join(" "))
        }
    }
}

fn cli_contract() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut notes = Vec::new();

    let sessions: Vec<SessionFile> = ["r2211", "r1111", "para_oscillator"].iter().map(|n| builtin(n)).collect();
    let mut trips = 0;
    for i in 0..1000 {
        let f = sessions[i % 3].fctx().unwrap();
        let e = Form::function(f, &random_element(&mut rng, f.base(), 5));
        let a = random_form(&mut rng, f, None, 4, 3);
        let ok = [e, a].iter().all(|v| {
            let once = parse_expression(f, &v.to_string()).unwrap();
            once == *v && parse_expression(f, &once.to_string()).unwrap().to_string() == v.to_string()
        });
        trips += usize::from(ok);
    }
    let session_trips = cli::BUILTIN_SESSIONS.iter().all(|(n, _)| {
        let text = builtin(n).render();
        cli::parse_session(&text).unwrap().render() == text
    });
    notes.push(format!("round trip {trips}/1000, sessions {session_trips}"));

    let fuzz_start = Instant::now();
    let mut caught = 0;
    for _ in 0..100_000 {
        let text = fuzz_input(&mut rng);
        match std::panic::catch_unwind(|| cli::parse_session(&text)) {
            Ok(Ok(_)) => {}
            Ok(Err(e)) => assert!(e.pos.line >= 1 && e.pos.col >= 1),
            Err(_) => caught += 1,
        }
    }
    notes.push(format!("fuzz panics {caught}/100000 in {:.2?}", fuzz_start.elapsed()));

    let contract = [
        (vec!["check", "builtin:r2211"], 0),
        (vec!["jacobi", "builtin:r1111", "--random", "11", "--form", "w01"], 0),
        (vec!["cohomology", "builtin:bialgebroid", "twisted"], 2),
        (vec!["cohomology", "builtin:bialgebroid", "anchored", "--accept-truncation"], 0),
        (vec!["bv", "builtin:r1111", "x", "--form", "w11"], 2),
        (vec!["frobnicate"], 1),
        (vec!["check", "builtin:missing"], 1),
        (vec!["bracket", "builtin:r1111", "x", "(", "--form", "w11"], 1),
    ];
    let codes_ok = contract.iter().filter(|(args, code)| gsym(args).0 == *code).count();
    notes.push(format!("exit codes {codes_ok}/{}", contract.len()));

    // sessions reproduce the library results of criteria 1, 2 and 6
    let (c1, out1) = gsym(&["check", "builtin:r2211"]);
    let (c2, out2) = gsym(&["reduce", "builtin:r2211"]);
    let (c3, out3) = gsym(&["check", "builtin:r1111"]);
    let crit1 = c1 == 0
        && out1.contains("omega: symplectic, degree (0,0), closed: yes")
        && c2 == 0
        && out2.contains("= d:x*d:p, nondegenerate: yes")
        && c3 == 0
        && ["w11: symplectic, degree (1,1)", "w01: symplectic, degree (0,1)", "w10: symplectic, degree (1,0)"]
            .iter()
            .all(|s| out3.contains(s));

    let s = &sessions[1];
    let ctx = s.ctx().unwrap();
    let mut crit2 = true;
    for (name, _, printed) in R1111_FORMS {
        let lib = build_structure(&s.binding(name).unwrap().value).unwrap();
        let reference = if name == "w11" { CORRECTED_11 } else { printed };
        for _ in 0..200 {
            let (u, v) = (random_element(&mut rng, ctx, 4), random_element(&mut rng, ctx, 4));
            let got = s.eval(&format!("bracket({name}, {u}, {v})")).unwrap().as_function().unwrap();
            crit2 &= got == lib.poisson_bracket(&u, &v) && got == printed_bracket(&reference, &u, &v);
        }
    }

    let (c4, out4) = gsym(&["equations", "builtin:para_oscillator", "osc"]);
    let (c5, out5) = gsym(&["--json", "simulate", "builtin:para_oscillator", "osc", "--t-end", "1", "--dt", "0.001"]);
    let report: serde_json::Value = serde_json::from_str(&out5).unwrap();
    let psi = report["values"]["final"]["psi1->psi1"].as_f64().unwrap_or(f64::NAN);
    let crit6 = c4 == 0
        && c5 == 0
        && ["d(q1)/dt = p1", "d(p1)/dt = -q1", "d(psi1)/dt = -psi1", "d(pi1)/dt = pi1", "d(psi2)/dt = -psi2", "d(pi2)/dt = pi2"]
            .iter()
            .all(|l| out4.contains(l))
        && (psi - (-1f64).exp()).abs() < 1e-10;
    notes.push(format!("sessions reproduce criteria 1: {crit1}, 2: {crit2}, 6: {crit6}"));

    let pass = trips == 1000 && session_trips && caught == 0 && codes_ok == contract.len() && crit1 && crit2 && crit6;
    Verdict::new(pass, notes.join("; "))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Verdict)> = vec![
        ("example structures", example_structures),
        ("printed brackets", printed_brackets),
        ("algebraic laws", algebraic_laws),
        ("dimension constraints", dimension_constraints),
        ("Darboux normal form", darboux),
        ("parastatistics", parastatistics),
        ("gauge systems", gauge_systems),
        ("command line", cli_contract),
    ];
    let mut unsound = Vec::new();
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let v = check();
        println!("{} criterion {} ({name}): {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
        if !v.sound {
            unsound.push(i + 1);
        }
    }
    if !unsound.is_empty() {
        eprintln!("criteria with failing verified checks: {unsound:?}");
        std::process::exit(1);
    }
}
