//! Differential forms as functions on the doubled Z₂ⁿ⁺¹-graded algebra.
//!
//! A base generator `x` of degree `a` yields `x` at `(0,a)` and its
//! differential `d:x` at `(1,a)`. Differentials do not count towards the
//! truncation order.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use crate::algebra::{AlgebraContext, AlgebraMatrix, Ctx, Element, Generator, Monomial, Substitution, Q};
use crate::degree::Degree;
use crate::error::{Error, Result};

pub const DIFF_PREFIX: &str = "d:";

#[derive(Debug)]
pub struct FormContext {
    base: Ctx,
    doubled: Ctx,
    coord: Vec<usize>,
    diff: Vec<usize>,
}

pub type FCtx = Arc<FormContext>;

impl FormContext {
    pub fn new(base: &Ctx) -> Result<FCtx> {
        let mut gens = Vec::with_capacity(2 * base.len());
        for g in base.generators() {
            gens.push(Generator {
                name: g.name.clone(),
                degree: g.degree.lift(0),
                weight: 1,
            });
            gens.push(Generator {
                name: format!("{DIFF_PREFIX}{}", g.name),
                degree: g.degree.lift(1),
                weight: 0,
            });
        }
        let doubled = AlgebraContext::from_generators(base.rank() + 1, gens, base.trunc())?;
        let coord = base
            .generators()
            .iter()
            .map(|g| doubled.index_of(&g.name))
            .collect::<Result<Vec<_>>>()?;
        let diff = base
            .generators()
            .iter()
            .map(|g| doubled.index_of(&format!("{DIFF_PREFIX}{}", g.name)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Arc::new(FormContext {
            base: base.clone(),
            doubled,
            coord,
            diff,
        }))
    }

    pub fn base(&self) -> &Ctx {
        &self.base
    }

    pub fn doubled(&self) -> &Ctx {
        &self.doubled
    }

    pub fn coord_index(&self, i: usize) -> usize {
        self.coord[i]
    }

    pub fn diff_index(&self, i: usize) -> usize {
        self.diff[i]
    }

    /// Base function as a zero-form.
    pub fn embed(&self, f: &Element) -> Element {
        let mut out = Element::zero(&self.doubled).with_truncated(f.truncated());
        for (m, c) in f.iter() {
            let mut exps = vec![0u8; self.doubled.len()];
            for (i, e) in m.support() {
                exps[self.coord[i]] = e;
            }
            out = &out + &Element::term(&self.doubled, Monomial::from_exponents(exps), c.clone());
        }
        out
    }

    /// Inverse of [`FormContext::embed`]; fails on terms containing differentials.
    pub fn project(&self, a: &Element) -> Result<Element> {
        let mut out = Element::zero(&self.base).with_truncated(a.truncated());
        for (m, c) in a.iter() {
            if self.diff.iter().any(|&k| m.exp(k) > 0) {
                return Err(Error::DegreeMismatch(format!("{a} is not a zero-form")));
            }
            let exps = self.coord.iter().map(|&k| m.exp(k)).collect();
            out = &out + &Element::term(&self.base, Monomial::from_exponents(exps), c.clone());
        }
        Ok(out)
    }

    pub fn form_degree_of(&self, m: &Monomial) -> u32 {
        self.diff.iter().map(|&k| m.exp(k) as u32).sum()
    }

    pub fn polynomial_degree_of(&self, m: &Monomial) -> u32 {
        self.coord.iter().map(|&k| m.exp(k) as u32).sum()
    }
}

/// Element of the doubled algebra, i.e. an inhomogeneous differential form.
#[derive(Clone)]
pub struct Form {
    fctx: FCtx,
    value: Element,
}

impl PartialEq for Form {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl Form {
    pub fn new(fctx: &FCtx, value: Element) -> Result<Form> {
        if **value.ctx() != **fctx.doubled() {
            return Err(Error::ContextMismatch);
        }
        Ok(Form {
            fctx: fctx.clone(),
            value,
        })
    }

    pub fn zero(fctx: &FCtx) -> Form {
        Form {
            fctx: fctx.clone(),
            value: Element::zero(fctx.doubled()),
        }
    }

    pub fn function(fctx: &FCtx, f: &Element) -> Form {
        Form {
            fctx: fctx.clone(),
            value: fctx.embed(f),
        }
    }

    pub fn constant(fctx: &FCtx, c: Q) -> Form {
        Form {
            fctx: fctx.clone(),
            value: Element::constant(fctx.doubled(), c),
        }
    }

    pub fn coordinate(fctx: &FCtx, i: usize) -> Form {
        Form {
            fctx: fctx.clone(),
            value: Element::gen(fctx.doubled(), fctx.coord[i]),
        }
    }

    pub fn differential(fctx: &FCtx, i: usize) -> Form {
        Form {
            fctx: fctx.clone(),
            value: Element::gen(fctx.doubled(), fctx.diff[i]),
        }
    }

    pub fn named(fctx: &FCtx, name: &str) -> Result<Form> {
        Ok(Form {
            fctx: fctx.clone(),
            value: Element::named(fctx.doubled(), name)?,
        })
    }

    pub fn fctx(&self) -> &FCtx {
        &self.fctx
    }

    pub fn value(&self) -> &Element {
        &self.value
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    fn wrap(&self, value: Element) -> Form {
        Form {
            fctx: self.fctx.clone(),
            value,
        }
    }

    pub fn scale(&self, c: &Q) -> Form {
        self.wrap(self.value.scale(c))
    }

    /// Part of homological degree `p`.
    pub fn part(&self, p: u32) -> Form {
        let f = &self.fctx;
        self.wrap(self.value.filter(|m| f.form_degree_of(m) == p))
    }

    pub fn form_degrees(&self) -> Vec<u32> {
        let mut ps: Vec<u32> = self.value.terms().keys().map(|m| self.fctx.form_degree_of(m)).collect();
        ps.sort_unstable();
        ps.dedup();
        ps
    }

    /// Z₂ⁿ⁺¹-degree when homogeneous.
    pub fn total_degree(&self) -> Option<Degree> {
        self.value.homogeneous_degree()
    }

    /// Z₂ⁿ-degree when homogeneous.
    pub fn degree(&self) -> Option<Degree> {
        let mut degs = self.value.terms().keys().map(|m| m.degree(self.fctx.doubled()).tail());
        let first = degs.next()?;
        degs.all(|d| d == first).then_some(first)
    }

    pub fn homogeneous_components(&self) -> Vec<(Degree, Form)> {
        let mut out: Vec<(Degree, Form)> = Vec::new();
        for (d, e) in self.value.homogeneous_components() {
            let t = d.tail();
            match out.iter_mut().find(|(k, _)| *k == t) {
                Some((_, f)) => f.value = &f.value + &e,
                None => out.push((t, self.wrap(e))),
            }
        }
        out
    }

    pub fn as_function(&self) -> Result<Element> {
        self.fctx.project(&self.value)
    }

    /// Lowest polynomial order among the coefficients.
    pub fn lowest_order(&self) -> Option<u32> {
        self.value.lowest_order()
    }

    pub fn truncate_at(&self, k: u32) -> Form {
        self.wrap(self.value.truncate_at(k))
    }

    pub fn order_part(&self, k: u32) -> Form {
        self.wrap(self.value.order_part(k))
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.value, f)
    }
}

impl fmt::Debug for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Form({})", self.value)
    }
}

macro_rules! form_binop {
    ($tr:ident, $m:ident) => {
        impl $tr<&Form> for &Form {
            type Output = Form;
            fn $m(self, rhs: &Form) -> Form {
                self.wrap($tr::$m(&self.value, &rhs.value))
            }
        }
        impl $tr<Form> for Form {
            type Output = Form;
            fn $m(self, rhs: Form) -> Form {
                (&self).$m(&rhs)
            }
        }
    };
}

form_binop!(Add, add);
form_binop!(Sub, sub);
form_binop!(Mul, mul);

impl Neg for &Form {
    type Output = Form;
    fn neg(self) -> Form {
        self.wrap(-&self.value)
    }
}

/// Homogeneous vector field Σ Xᴵ ∂/∂xᴵ with Xᴵ of degree deg X + deg I.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    ctx: Ctx,
    degree: Degree,
    comps: Vec<Element>,
}

impl VectorField {
    pub fn new(ctx: &Ctx, degree: Degree, comps: Vec<Element>) -> Result<VectorField> {
        if comps.len() != ctx.len() {
            return Err(Error::Dimension(format!(
                "{} components for {} generators",
                comps.len(),
                ctx.len()
            )));
        }
        for (i, c) in comps.iter().enumerate() {
            let want = degree + ctx.degree(i);
            if !c.is_homogeneous_of(want) {
                return Err(Error::DegreeMismatch(format!(
                    "component along {} must have degree {want}, got {c}",
                    ctx.name(i)
                )));
            }
        }
        Ok(VectorField {
            ctx: ctx.clone(),
            degree,
            comps,
        })
    }

    pub fn zero(ctx: &Ctx, degree: Degree) -> VectorField {
        VectorField {
            ctx: ctx.clone(),
            degree,
            comps: vec![Element::zero(ctx); ctx.len()],
        }
    }

    /// Coordinate field ∂/∂xⁱ.
    pub fn coordinate(ctx: &Ctx, i: usize) -> VectorField {
        let mut v = VectorField::zero(ctx, ctx.degree(i));
        v.comps[i] = Element::one(ctx);
        v
    }

    /// Splits arbitrary components into homogeneous fields, one per degree.
    pub fn split(ctx: &Ctx, comps: &[Element]) -> Result<Vec<VectorField>> {
        let mut parts: Vec<(Degree, Vec<Element>)> = Vec::new();
        for (i, c) in comps.iter().enumerate() {
            for (d, piece) in c.homogeneous_components() {
                let field_degree = d + ctx.degree(i);
                let slot = match parts.iter().position(|(k, _)| *k == field_degree) {
                    Some(p) => p,
                    None => {
                        parts.push((field_degree, vec![Element::zero(ctx); ctx.len()]));
                        parts.len() - 1
                    }
                };
                parts[slot].1[i] = &parts[slot].1[i] + &piece;
            }
        }
        parts
            .into_iter()
            .map(|(d, c)| VectorField::new(ctx, d, c))
            .collect()
    }

    pub fn ctx(&self) -> &Ctx {
        &self.ctx
    }

    pub fn degree(&self) -> Degree {
        self.degree
    }

    pub fn components(&self) -> &[Element] {
        &self.comps
    }

    pub fn component(&self, i: usize) -> &Element {
        &self.comps[i]
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Element::is_zero)
    }

    pub fn scale(&self, c: &Q) -> VectorField {
        VectorField {
            ctx: self.ctx.clone(),
            degree: self.degree,
            comps: self.comps.iter().map(|e| e.scale(c)).collect(),
        }
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch(format!(
                "cannot add fields of degrees {} and {}",
                self.degree, other.degree
            )));
        }
        Ok(VectorField {
            ctx: self.ctx.clone(),
            degree: self.degree,
            comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a + b).collect(),
        })
    }

    /// X(f) = Σ Xᴵ ∂_I f.
    pub fn apply(&self, f: &Element) -> Element {
        self.comps
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .fold(Element::zero(&self.ctx), |acc, (i, c)| &acc + &(c * &f.partial(i)))
    }

    /// Graded commutator [X,Y] = X∘Y − (−1)^⟨X,Y⟩ Y∘X.
    pub fn bracket(&self, other: &VectorField) -> VectorField {
        let neg = self.degree.dot(&other.degree) == 1;
        let comps = (0..self.ctx.len())
            .map(|j| {
                let a = self.apply(&other.comps[j]);
                let b = other.apply(&self.comps[j]);
                if neg {
                    &a + &b
                } else {
                    &a - &b
                }
            })
            .collect();
        VectorField {
            ctx: self.ctx.clone(),
            degree: self.degree + other.degree,
            comps,
        }
    }

    pub fn render(&self) -> String {
        let parts: Vec<String> = self
            .comps
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| format!("({c})*D({})", self.ctx.name(i)))
            .collect();
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join(" + ")
        }
    }
}

/// de Rham differential d = dxᴵ ∂/∂xᴵ.
pub fn de_rham(a: &Form) -> Form {
    let f = &a.fctx;
    let mut out = Element::zero(f.doubled()).with_truncated(a.value.truncated());
    for i in 0..f.base.len() {
        let p = a.value.partial(f.coord[i]);
        if !p.is_zero() {
            out = &out + &(&Element::gen(f.doubled(), f.diff[i]) * &p);
        }
    }
    a.wrap(out)
}

/// Interior product i_X = Xᴵ ∂/∂(dxᴵ).
pub fn interior(x: &VectorField, a: &Form) -> Form {
    let f = &a.fctx;
    let mut out = Element::zero(f.doubled()).with_truncated(a.value.truncated());
    for (i, c) in x.comps.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let p = a.value.partial(f.diff[i]);
        if !p.is_zero() {
            out = &out + &(&f.embed(c) * &p);
        }
    }
    a.wrap(out)
}

/// Lie derivative L_X = [d, i_X] = d i_X + i_X d.
pub fn lie_derivative(x: &VectorField, a: &Form) -> Form {
    &de_rham(&interior(x, a)) + &interior(x, &de_rham(a))
}

/// Drops every nonzero-degree coordinate and its differential.
pub fn kappa(a: &Form) -> Form {
    let f = &a.fctx;
    let base = f.base();
    let formal: Vec<usize> = (0..base.len()).filter(|&i| !base.degree(i).is_zero()).collect();
    a.wrap(a.value.filter(|m| {
        formal
            .iter()
            .all(|&i| m.exp(f.coord[i]) == 0 && m.exp(f.diff[i]) == 0)
    }))
}

/// Components ω_{JI} of a two-form, returned with `get(J, I) = ω_{JI}`.
pub fn two_form_components(w: &Form) -> Result<AlgebraMatrix> {
    if w.form_degrees().iter().any(|&p| p != 2) {
        return Err(Error::DegreeMismatch(format!("{w} is not a pure two-form")));
    }
    let f = &w.fctx;
    let n = f.base.len();
    let labels: Vec<usize> = (0..n).collect();
    let mut m = AlgebraMatrix::zeros(&f.base, labels.clone(), labels);
    for i in 0..n {
        let di = w.value.partial(f.diff[i]);
        if di.is_zero() {
            continue;
        }
        for j in 0..n {
            let dji = di.partial(f.diff[j]);
            if !dji.is_zero() {
                m.set(j, i, f.project(&dji)?);
            }
        }
    }
    Ok(m)
}

/// ω = ½ dxᴵ dxᴶ ω_{JI}.
pub fn two_form_from_components(fctx: &FCtx, m: &AlgebraMatrix) -> Form {
    let n = fctx.base.len();
    let mut out = Element::zero(fctx.doubled());
    for i in 0..n {
        for j in 0..n {
            let c = m.get(j, i);
            if c.is_zero() {
                continue;
            }
            let dd = &Element::gen(fctx.doubled(), fctx.diff[i]) * &Element::gen(fctx.doubled(), fctx.diff[j]);
            out = &out + &(&dd * &fctx.embed(c));
        }
    }
    Form {
        fctx: fctx.clone(),
        value: out.scale(&crate::algebra::q(1, 2)),
    }
}

/// Pullback along a base substitution: xᴵ ↦ φᴵ, dxᴵ ↦ d(φᴵ).
pub fn pullback(a: &Form, s: &Substitution) -> Result<Form> {
    let f = &a.fctx;
    if **s.ctx() != **f.base() {
        return Err(Error::ContextMismatch);
    }
    let mut lifted = Substitution::identity(f.doubled());
    for i in 0..f.base.len() {
        let image = Form::function(f, s.image(i));
        lifted.set(f.coord[i], image.value.clone())?;
        lifted.set(f.diff[i], de_rham(&image).value)?;
    }
    Ok(a.wrap(lifted.apply(&a.value)?))
}

/// Operators on forms, for graded commutators.
#[derive(Clone, Debug)]
pub enum Op {
    D,
    I(VectorField),
    L(VectorField),
}

impl Op {
    /// Z₂ⁿ⁺¹-degree of the operator.
    pub fn degree(&self, n: usize) -> Degree {
        match self {
            Op::D => Degree::zero(n).lift(1),
            Op::I(x) => x.degree().lift(1),
            Op::L(x) => x.degree().lift(0),
        }
    }

    pub fn apply(&self, a: &Form) -> Form {
        match self {
            Op::D => de_rham(a),
            Op::I(x) => interior(x, a),
            Op::L(x) => lie_derivative(x, a),
        }
    }
}

/// [A,B]α = A(Bα) − (−1)^⟨deg A, deg B⟩ B(Aα), degrees taken in Z₂ⁿ⁺¹.
pub fn commutator(a: &Op, b: &Op, alpha: &Form) -> Form {
    let n = alpha.fctx.base.rank();
    let ab = a.apply(&b.apply(alpha));
    let ba = b.apply(&a.apply(alpha));
    if a.degree(n).dot(&b.degree(n)) == 1 {
        &ab + &ba
    } else {
        &ab - &ba
    }
}
