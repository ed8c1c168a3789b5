use std::collections::HashMap;

use super::context::Ctx;
use super::element::{same_ctx, Element};
use super::linalg;
use super::scalar::Q;
use num_traits::Zero;
use crate::error::{Error, Result};

/// Algebra morphism given by the image of every generator.
#[derive(Clone, Debug, PartialEq)]
pub struct Substitution {
    ctx: Ctx,
    images: Vec<Element>,
}

impl Substitution {
    pub fn identity(ctx: &Ctx) -> Self {
        Substitution {
            ctx: ctx.clone(),
            images: (0..ctx.len()).map(|i| Element::gen(ctx, i)).collect(),
        }
    }

    pub fn from_pairs<'a>(
        ctx: &Ctx,
        pairs: impl IntoIterator<Item = (&'a str, Element)>,
    ) -> Result<Self> {
        let mut s = Substitution::identity(ctx);
        for (name, image) in pairs {
            s.set(ctx.index_of(name)?, image)?;
        }
        Ok(s)
    }

    pub fn ctx(&self) -> &Ctx {
        &self.ctx
    }

    pub fn image(&self, i: usize) -> &Element {
        &self.images[i]
    }

    pub fn images(&self) -> &[Element] {
        &self.images
    }

    pub fn set(&mut self, i: usize, image: Element) -> Result<()> {
        if !same_ctx(image.ctx(), &self.ctx) {
            return Err(Error::ContextMismatch);
        }
        let d = self.ctx.degree(i);
        if !image.is_homogeneous_of(d) {
            return Err(Error::DegreeMismatch(format!(
                "image of {} must be homogeneous of degree {d}, got {image}",
                self.ctx.name(i)
            )));
        }
        self.images[i] = image;
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.images
            .iter()
            .enumerate()
            .all(|(i, e)| *e == Element::gen(&self.ctx, i))
    }

    /// Image of `f` under the morphism, truncated at the context order.
    pub fn apply(&self, f: &Element) -> Result<Element> {
        if !same_ctx(f.ctx(), &self.ctx) {
            return Err(Error::ContextMismatch);
        }
        let mut powers: HashMap<(usize, u8), Element> = HashMap::new();
        let mut out = Element::zero(&self.ctx).with_truncated(f.truncated());
        for (m, c) in f.iter() {
            let mut acc = Element::constant(&self.ctx, c.clone());
            for (i, e) in m.support() {
                let p = powers
                    .entry((i, e))
                    .or_insert_with(|| self.images[i].pow(e as u32))
                    .clone();
                acc = &acc * &p;
                if acc.is_zero() {
                    break;
                }
            }
            out = &out + &acc;
        }
        Ok(out)
    }

    /// `self` after `first`: the morphism f ↦ self(first(f)).
    pub fn after(&self, first: &Substitution) -> Result<Self> {
        let images = first
            .images
            .iter()
            .map(|e| self.apply(e))
            .collect::<Result<Vec<_>>>()?;
        Ok(Substitution {
            ctx: self.ctx.clone(),
            images,
        })
    }

    /// Compositional inverse modulo order `>= T`.
    pub fn inverse(&self) -> Result<Self> {
        let ctx = &self.ctx;
        let n = ctx.len();
        for (i, e) in self.images.iter().enumerate() {
            if !e.eval_zero().is_zero() {
                return Err(Error::Singular(format!(
                    "image of {} moves the base point",
                    ctx.name(i)
                )));
            }
        }
        let lin: linalg::Dense<Q> = self
            .images
            .iter()
            .map(|e| (0..n).map(|j| e.coeff(&unit(ctx, j))).collect())
            .collect();
        let lin_inv = linalg::invert(&lin)
            .ok_or_else(|| Error::Singular("linear part of the substitution".into()))?;
        let nonlinear: Vec<Element> = self
            .images
            .iter()
            .map(|e| e.filter(|m| m.order(ctx) != 1))
            .collect();
        let combine = |rhs: &[Element]| -> Vec<Element> {
            (0..n)
                .map(|j| {
                    (0..n).fold(Element::zero(ctx), |acc, k| {
                        if lin_inv[j][k].is_zero() {
                            acc
                        } else {
                            &acc + &rhs[k].scale(&lin_inv[j][k])
                        }
                    })
                })
                .collect()
        };
        let gens: Vec<Element> = (0..n).map(|i| Element::gen(ctx, i)).collect();
        let mut psi = Substitution {
            ctx: ctx.clone(),
            images: combine(&gens),
        };
        for _ in 0..ctx.trunc() {
            let rhs: Vec<Element> = gens
                .iter()
                .zip(&nonlinear)
                .map(|(x, nk)| Ok(x - &psi.apply(nk)?))
                .collect::<Result<_>>()?;
            let next = combine(&rhs);
            if next == psi.images {
                break;
            }
            psi.images = next;
        }
        Ok(psi)
    }
}

fn unit(ctx: &Ctx, j: usize) -> super::element::Monomial {
    let mut exps = vec![0u8; ctx.len()];
    exps[j] = 1;
    super::element::Monomial::from_exponents(exps)
}
