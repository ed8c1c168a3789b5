//! Seeded random inputs for property checks and the `--random` CLI modes.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::algebra::{
    linalg, q, qi, AlgebraContext, AlgebraMatrix, Ctx, Element, Monomial, Substitution, Q,
};
use crate::degree::{canonical_order, Degree};

#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub max_rank: usize,
    pub max_gens: usize,
    pub min_trunc: u32,
    pub max_trunc: u32,
    pub max_terms: usize,
}

pub fn random_coeff(rng: &mut impl Rng) -> Q {
    let choices = [q(1, 1), q(-1, 1), q(2, 1), q(-2, 1), q(3, 1), q(1, 2), q(-3, 2)];
    choices.choose(rng).expect("nonempty").clone()
}

pub fn random_degree(rng: &mut impl Rng, n: usize) -> Degree {
    Degree::from_word(rng.gen_range(0..1u32 << n), n)
}

pub fn random_context(rng: &mut impl Rng, shape: &Shape) -> Ctx {
    let n = rng.gen_range(1..=shape.max_rank);
    let count = rng.gen_range(1..=shape.max_gens);
    let trunc = rng.gen_range(shape.min_trunc.max(1)..=shape.max_trunc.max(shape.min_trunc.max(1)));
    let names: Vec<String> = (0..count).map(|i| format!("g{i}")).collect();
    let gens: Vec<(&str, Degree)> = names
        .iter()
        .map(|s| (s.as_str(), random_degree(rng, n)))
        .collect();
    AlgebraContext::new(n, &gens, trunc).expect("valid random context")
}

pub fn random_odd_context(rng: &mut impl Rng, max_rank: usize, max_gens: usize, trunc: u32) -> Ctx {
    let n = rng.gen_range(1..=max_rank);
    let odd: Vec<Degree> = canonical_order(n)
        .expect("rank >= 1")
        .into_iter()
        .filter(|d| d.is_odd())
        .collect();
    let count = rng.gen_range(1..=max_gens);
    let names: Vec<String> = (0..count).map(|i| format!("o{i}")).collect();
    let gens: Vec<(&str, Degree)> = names
        .iter()
        .map(|s| (s.as_str(), *odd.choose(rng).expect("odd degrees exist")))
        .collect();
    AlgebraContext::new(n, &gens, trunc).expect("valid random context")
}

/// Random monomial of weighted order `< ctx.trunc()` respecting nilpotency.
pub fn random_monomial(rng: &mut impl Rng, ctx: &Ctx, min_order: u32) -> Monomial {
    random_monomial_below(rng, ctx, min_order, ctx.trunc())
}

/// Random monomial with weighted order in `min_order..max_order` (when reachable).
pub fn random_monomial_below(rng: &mut impl Rng, ctx: &Ctx, min_order: u32, max_order: u32) -> Monomial {
    let t = max_order.min(ctx.trunc());
    let mut exps = vec![0u8; ctx.len()];
    if ctx.is_empty() || min_order >= t {
        return Monomial::from_exponents(exps);
    }
    let target = rng.gen_range(min_order..t);
    let mut order = 0;
    let mut attempts = 0;
    while order < target && attempts < 64 {
        attempts += 1;
        let i = rng.gen_range(0..ctx.len());
        if ctx.is_odd(i) && exps[i] > 0 {
            continue;
        }
        exps[i] += 1;
        order += ctx.generator(i).weight;
    }
    Monomial::from_exponents(exps)
}

pub fn random_element(rng: &mut impl Rng, ctx: &Ctx, max_terms: usize) -> Element {
    let k = rng.gen_range(0..=max_terms);
    (0..k).fold(Element::zero(ctx), |acc, _| {
        let m = random_monomial(rng, ctx, 0);
        &acc + &Element::term(ctx, m, random_coeff(rng))
    })
}

/// Random element homogeneous of `degree`, or of the degree of its first term.
pub fn random_homogeneous(
    rng: &mut impl Rng,
    ctx: &Ctx,
    degree: Option<Degree>,
    max_terms: usize,
) -> Element {
    random_homogeneous_from(rng, ctx, degree, max_terms, 0)
}

pub fn random_homogeneous_from(
    rng: &mut impl Rng,
    ctx: &Ctx,
    degree: Option<Degree>,
    max_terms: usize,
    min_order: u32,
) -> Element {
    random_homogeneous_in(rng, ctx, degree, max_terms, min_order, ctx.trunc())
}

pub fn random_homogeneous_in(
    rng: &mut impl Rng,
    ctx: &Ctx,
    degree: Option<Degree>,
    max_terms: usize,
    min_order: u32,
    max_order: u32,
) -> Element {
    let mut target = degree;
    let mut out = Element::zero(ctx);
    let wanted = rng.gen_range(1..=max_terms.max(1));
    let mut got = 0;
    for _ in 0..wanted * 24 {
        if got == wanted {
            break;
        }
        let m = random_monomial_below(rng, ctx, min_order, max_order);
        if m.order(ctx) < min_order {
            continue;
        }
        let d = m.degree(ctx);
        if *target.get_or_insert(d) != d {
            continue;
        }
        out = &out + &Element::term(ctx, m, random_coeff(rng));
        got += 1;
    }
    out
}

/// Identity-plus-higher-order substitution with a unipotent linear part per degree.
pub fn random_substitution(rng: &mut impl Rng, ctx: &Ctx) -> Substitution {
    let mut s = Substitution::identity(ctx);
    for i in 0..ctx.len() {
        let d = ctx.degree(i);
        let mut image = Element::gen(ctx, i);
        for j in i + 1..ctx.len() {
            if ctx.degree(j) == d && rng.gen_bool(0.4) {
                image = &image + &Element::gen(ctx, j).scale(&random_coeff(rng));
            }
        }
        if rng.gen_bool(0.7) {
            image = &image + &random_homogeneous_from(rng, ctx, Some(d), 2, 2);
        }
        s.set(i, image).expect("degree preserved");
    }
    s
}

pub fn random_invertible_matrix(rng: &mut impl Rng, ctx: &Ctx, size: usize) -> AlgebraMatrix {
    let labels: Vec<usize> = (0..size).map(|i| i % ctx.len().max(1)).collect();
    let real = loop {
        let m: linalg::Dense<Q> = (0..size)
            .map(|_| (0..size).map(|_| qi(rng.gen_range(-2..=2))).collect())
            .collect();
        if linalg::invert(&m).is_some() {
            break m;
        }
    };
    let mut a = AlgebraMatrix::from_real(ctx, labels.clone(), labels, &real);
    for i in 0..size {
        for j in 0..size {
            if rng.gen_bool(0.5) {
                let m = random_monomial(rng, ctx, 1);
                let extra = Element::term(ctx, m, random_coeff(rng));
                let e = a.get(i, j) + &extra;
                a.set(i, j, e);
            }
        }
    }
    a
}

/// Random form; `hdeg` fixes the homological degree.
pub fn random_form(
    rng: &mut impl Rng,
    fctx: &crate::calculus::FCtx,
    hdeg: Option<u32>,
    max_terms: usize,
    max_order: u32,
) -> crate::calculus::Form {
    use crate::calculus::Form;
    let base = fctx.base();
    let k = rng.gen_range(1..=max_terms.max(1));
    let mut out = Form::zero(fctx);
    for _ in 0..k {
        let p = hdeg.unwrap_or_else(|| rng.gen_range(0..=2));
        let coef = Element::term(base, random_monomial_below(rng, base, 0, max_order), random_coeff(rng));
        let mut term = Form::function(fctx, &coef);
        for _ in 0..p {
            let i = rng.gen_range(0..base.len());
            term = &Form::differential(fctx, i) * &term;
        }
        out = &out + &term;
    }
    out
}

/// Random homogeneous vector field of the given (or a random) degree.
pub fn random_vector_field(
    rng: &mut impl Rng,
    ctx: &Ctx,
    degree: Option<Degree>,
    max_terms: usize,
    max_order: u32,
) -> crate::calculus::VectorField {
    let d = degree.unwrap_or_else(|| random_degree(rng, ctx.rank()));
    let comps = (0..ctx.len())
        .map(|i| {
            if rng.gen_bool(0.6) {
                random_homogeneous_in(rng, ctx, Some(d + ctx.degree(i)), max_terms, 0, max_order)
            } else {
                Element::zero(ctx)
            }
        })
        .collect();
    crate::calculus::VectorField::new(ctx, d, comps).expect("homogeneous components")
}
