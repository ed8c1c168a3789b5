use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use super::context::{AlgebraContext, Ctx};
use super::scalar::{Scalar, Q};
use crate::degree::Degree;
use crate::error::{Error, Result};

/// Dense exponent vector indexed by generator position.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial(Box<[u8]>);

impl Monomial {
    pub fn one(len: usize) -> Monomial {
        Monomial(vec![0; len].into_boxed_slice())
    }

    pub fn from_exponents(exps: Vec<u8>) -> Monomial {
        Monomial(exps.into_boxed_slice())
    }

    pub fn exponents(&self) -> &[u8] {
        &self.0
    }

    pub fn exp(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn total(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    pub fn support(&self) -> impl Iterator<Item = (usize, u8)> + '_ {
        self.0.iter().enumerate().filter(|(_, &e)| e > 0).map(|(i, &e)| (i, e))
    }

    pub fn degree(&self, ctx: &AlgebraContext) -> Degree {
        self.support()
            .filter(|&(_, e)| e % 2 == 1)
            .fold(ctx.zero_degree(), |acc, (i, _)| acc + ctx.degree(i))
    }

    /// Weighted total degree used for truncation.
    pub fn order(&self, ctx: &AlgebraContext) -> u32 {
        self.support()
            .map(|(i, e)| ctx.generator(i).weight * e as u32)
            .sum()
    }

    fn odd_exponent_mask(&self) -> u64 {
        self.support()
            .filter(|&(_, e)| e % 2 == 1)
            .fold(0, |m, (i, _)| m | 1 << i)
    }

    fn support_mask(&self) -> u64 {
        self.support().fold(0, |m, (i, _)| m | 1 << i)
    }
}

/// Lower total degree first; within a degree, larger exponents of earlier generators first.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total()
            .cmp(&other.total())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) enum Product {
    Term(Monomial, bool),
    Zero,
    Truncated,
}

impl AlgebraContext {
    /// Canonical form of `a·b`: the product monomial and whether the sign is negative.
    pub(crate) fn mul_monomials(&self, a: &Monomial, b: &Monomial) -> Product {
        if a.support_mask() & b.support_mask() & self.odd_mask() != 0 {
            return Product::Zero;
        }
        let Some(exps) = a.0.iter().zip(b.0.iter()).map(|(x, y)| x.checked_add(*y)).collect::<Option<Vec<u8>>>() else {
            return Product::Truncated;
        };
        let m = Monomial::from_exponents(exps);
        if m.order(self) >= self.trunc() {
            return Product::Truncated;
        }
        let b_odd = b.odd_exponent_mask();
        let mut sign = 0u32;
        let mut a_odd = a.odd_exponent_mask();
        while a_odd != 0 {
            let j = a_odd.trailing_zeros() as usize;
            a_odd &= a_odd - 1;
            let below = (1u64 << j) - 1;
            sign ^= (b_odd & self.pair_mask(j) & below).count_ones() & 1;
        }
        Product::Term(m, sign == 1)
    }
}

/// Truncated formal power series over the generators of a context.
#[derive(Clone)]
pub struct Series<S: Scalar> {
    ctx: Ctx,
    terms: BTreeMap<Monomial, S>,
    truncated: bool,
}

/// Series with exact rational coefficients.
pub type Element = Series<Q>;

pub(crate) fn same_ctx(a: &Ctx, b: &Ctx) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

impl<S: Scalar> PartialEq for Series<S> {
    fn eq(&self, other: &Self) -> bool {
        same_ctx(&self.ctx, &other.ctx) && self.terms == other.terms
    }
}

impl<S: Scalar> Series<S> {
    pub fn zero(ctx: &Ctx) -> Self {
        Series {
            ctx: ctx.clone(),
            terms: BTreeMap::new(),
            truncated: false,
        }
    }

    pub fn constant(ctx: &Ctx, c: S) -> Self {
        Series::term(ctx, Monomial::one(ctx.len()), c)
    }

    pub fn one(ctx: &Ctx) -> Self {
        Series::constant(ctx, S::one())
    }

    pub fn int(ctx: &Ctx, c: i64) -> Self {
        Series::constant(ctx, S::from_ratio(c, 1))
    }

    /// Single term; dropped (with the truncation flag) when beyond the order.
    pub fn term(ctx: &Ctx, m: Monomial, c: S) -> Self {
        let mut e = Series::zero(ctx);
        assert_eq!(m.0.len(), ctx.len(), "monomial length does not match context");
        let nilpotent = m.support().any(|(i, x)| x > 1 && ctx.is_odd(i));
        if m.order(ctx) >= ctx.trunc() {
            e.truncated = true;
        } else if !nilpotent && !c.is_zero() {
            e.terms.insert(m, c);
        }
        e
    }

    pub fn gen(ctx: &Ctx, i: usize) -> Self {
        let mut exps = vec![0u8; ctx.len()];
        exps[i] = 1;
        Series::term(ctx, Monomial::from_exponents(exps), S::one())
    }

    pub fn named(ctx: &Ctx, name: &str) -> Result<Self> {
        Ok(Series::gen(ctx, ctx.index_of(name)?))
    }

    pub(crate) fn from_terms(ctx: &Ctx, terms: BTreeMap<Monomial, S>, truncated: bool) -> Self {
        let mut e = Series {
            ctx: ctx.clone(),
            terms,
            truncated,
        };
        e.terms.retain(|_, c| !c.is_zero());
        e
    }

    pub fn ctx(&self) -> &Ctx {
        &self.ctx
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, S> {
        &self.terms
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Monomial, &S)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Whether some term of order `>= T` was dropped while computing this value.
    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn with_truncated(mut self, flag: bool) -> Self {
        self.truncated |= flag;
        self
    }

    pub fn coeff(&self, m: &Monomial) -> S {
        self.terms.get(m).cloned().unwrap_or_else(S::zero)
    }

    fn check(&self, other: &Self) -> Result<()> {
        if same_ctx(&self.ctx, &other.ctx) {
            Ok(())
        } else {
            Err(Error::ContextMismatch)
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            accumulate(&mut terms, m, c.clone());
        }
        Ok(Series::from_terms(&self.ctx, terms, self.truncated || other.truncated))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.neg_ref())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        let mut truncated = self.truncated || other.truncated;
        let mut terms = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                match self.ctx.mul_monomials(ma, mb) {
                    Product::Term(m, neg) => {
                        let c = ca.clone() * cb.clone();
                        accumulate(&mut terms, &m, if neg { -c } else { c });
                    }
                    Product::Zero => {}
                    Product::Truncated => truncated = true,
                }
            }
        }
        Ok(Series::from_terms(&self.ctx, terms, truncated))
    }

    pub fn scale(&self, c: &S) -> Self {
        if c.is_zero() {
            return Series::zero(&self.ctx).with_truncated(self.truncated);
        }
        let terms = self
            .terms
            .iter()
            .map(|(m, x)| (m.clone(), x.clone() * c.clone()))
            .collect();
        Series::from_terms(&self.ctx, terms, self.truncated)
    }

    fn neg_ref(&self) -> Self {
        let terms = self.terms.iter().map(|(m, x)| (m.clone(), -x.clone())).collect();
        Series {
            ctx: self.ctx.clone(),
            terms,
            truncated: self.truncated,
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Series::one(&self.ctx);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Z₂ⁿ-degree of the element if it is homogeneous and nonzero.
    pub fn homogeneous_degree(&self) -> Option<Degree> {
        let mut degs = self.terms.keys().map(|m| m.degree(&self.ctx));
        let first = degs.next()?;
        degs.all(|d| d == first).then_some(first)
    }

    pub fn is_homogeneous_of(&self, d: Degree) -> bool {
        self.terms.keys().all(|m| m.degree(&self.ctx) == d)
    }

    pub fn homogeneous_components(&self) -> BTreeMap<Degree, Self> {
        let mut out: BTreeMap<Degree, BTreeMap<Monomial, S>> = BTreeMap::new();
        for (m, c) in &self.terms {
            out.entry(m.degree(&self.ctx))
                .or_default()
                .insert(m.clone(), c.clone());
        }
        out.into_iter()
            .map(|(d, t)| (d, Series::from_terms(&self.ctx, t, self.truncated)))
            .collect()
    }

    /// Keeps only terms free of nonzero-degree generators.
    pub fn epsilon(&self) -> Self {
        self.filter(|m| m.support().all(|(i, _)| self.ctx.degree(i).is_zero()))
    }

    pub fn eval_zero(&self) -> S {
        self.coeff(&Monomial::one(self.ctx.len()))
    }

    pub fn filter(&self, keep: impl Fn(&Monomial) -> bool) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| keep(m))
            .map(|(m, c)| (m.clone(), c.clone()))
            .collect();
        Series::from_terms(&self.ctx, terms, self.truncated)
    }

    /// Part of weighted order exactly `k`.
    pub fn order_part(&self, k: u32) -> Self {
        self.filter(|m| m.order(&self.ctx) == k)
    }

    /// Lowest weighted order carrying a nonzero term.
    pub fn lowest_order(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.order(&self.ctx)).min()
    }

    /// Drops every term of order `>= k`.
    pub fn truncate_at(&self, k: u32) -> Self {
        self.filter(|m| m.order(&self.ctx) < k)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.abs().to_f64())
            .fold(0.0, f64::max)
    }

    /// Left graded derivative by generator `i`.
    pub fn partial(&self, i: usize) -> Self {
        let ctx = &self.ctx;
        let di = ctx.degree(i);
        let mut terms = BTreeMap::new();
        for (m, c) in &self.terms {
            let e = m.exp(i);
            if e == 0 {
                continue;
            }
            let prefix = m
                .support()
                .filter(|&(k, x)| k < i && x % 2 == 1)
                .fold(ctx.zero_degree(), |acc, (k, _)| acc + ctx.degree(k));
            let mut exps = m.exponents().to_vec();
            exps[i] -= 1;
            let mut coef = c.clone() * S::from_ratio(e as i64, 1);
            if di.dot(&prefix) == 1 {
                coef = -coef;
            }
            accumulate(&mut terms, &Monomial::from_exponents(exps), coef);
        }
        Series::from_terms(ctx, terms, self.truncated)
    }

    pub fn partial_by_name(&self, name: &str) -> Result<Self> {
        Ok(self.partial(self.ctx.index_of(name)?))
    }

    /// Coefficientwise conversion into another scalar field.
    pub fn map_scalars<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Series<T> {
        let terms = self.terms.iter().map(|(m, c)| (m.clone(), f(c))).collect();
        Series::from_terms(&self.ctx, terms, self.truncated)
    }

    /// Same terms viewed in a context with identical generator layout.
    pub fn recontext(&self, ctx: &Ctx) -> Result<Self> {
        if ctx.generators() != self.ctx.generators() {
            return Err(Error::ContextMismatch);
        }
        let mut truncated = self.truncated;
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| {
                let keep = m.order(ctx) < ctx.trunc();
                truncated |= !keep;
                keep
            })
            .map(|(m, c)| (m.clone(), c.clone()))
            .collect();
        Ok(Series::from_terms(ctx, terms, truncated))
    }
}

impl Element {
    pub fn to_float(&self) -> Series<f64> {
        self.map_scalars(|c| Scalar::to_f64(c))
    }
}

pub(crate) fn accumulate<S: Scalar>(terms: &mut BTreeMap<Monomial, S>, m: &Monomial, c: S) {
    match terms.get_mut(m) {
        Some(x) => {
            *x = x.clone() + c;
            if x.is_zero() {
                terms.remove(m);
            }
        }
        None => {
            if !c.is_zero() {
                terms.insert(m.clone(), c);
            }
        }
    }
}

impl<S: Scalar> fmt::Debug for Series<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Series({})", super::render::render(self))
    }
}

impl<S: Scalar> fmt::Display for Series<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::render::render(self))
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $call:ident) => {
        impl<S: Scalar> $tr<&Series<S>> for &Series<S> {
            type Output = Series<S>;
            fn $m(self, rhs: &Series<S>) -> Series<S> {
                self.$call(rhs).expect("operands share a context")
            }
        }
        impl<S: Scalar> $tr<Series<S>> for Series<S> {
            type Output = Series<S>;
            fn $m(self, rhs: Series<S>) -> Series<S> {
                (&self).$call(&rhs).expect("operands share a context")
            }
        }
        impl<S: Scalar> $tr<&Series<S>> for Series<S> {
            type Output = Series<S>;
            fn $m(self, rhs: &Series<S>) -> Series<S> {
                (&self).$call(rhs).expect("operands share a context")
            }
        }
        impl<S: Scalar> $tr<Series<S>> for &Series<S> {
            type Output = Series<S>;
            fn $m(self, rhs: Series<S>) -> Series<S> {
                self.$call(&rhs).expect("operands share a context")
            }
        }
    };
}

binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

impl<S: Scalar> Neg for &Series<S> {
    type Output = Series<S>;
    fn neg(self) -> Series<S> {
        self.neg_ref()
    }
}

impl<S: Scalar> Neg for Series<S> {
    type Output = Series<S>;
    fn neg(self) -> Series<S> {
        self.neg_ref()
    }
}
