//! Darboux normal forms on a formal chart.
//!
//! The constant part is normalised by a graded Gram–Schmidt pass, then the
//! remainder is removed order by order with the Euler homotopy primitive.
//!
//! Diagonal self-pairings `(v,v) = r` whose `|r|` has no rational square root
//! keep the weight `ε|r|`; the coordinate `y/√|r|` then carries `ε/2 (dy)²`.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::algebra::linalg::{self, Dense};
use crate::algebra::{Element, Substitution, Q};
use crate::calculus::{de_rham, interior, pullback, two_form_components, FCtx, Form, FormContext, VectorField};
use crate::degree::Degree;
use crate::error::{Error, Result};
use crate::symplectic::{canonical_two_form, SymplecticStructure};

pub const DEFAULT_MAX_PASSES: usize = 64;

/// Outcome of the constant Gram–Schmidt normalisation.
#[derive(Clone, Debug)]
pub struct ConstantNormalForm {
    /// Old coordinates in terms of new ones: `x = change · x'`.
    pub change: Dense<Q>,
    pub pairs: Vec<(usize, usize)>,
    pub diagonals: Vec<(usize, i8)>,
    /// `|(y,y)|` after normalisation, 1 whenever a rational square root existed.
    pub weights: Vec<(usize, Q)>,
    pub gamma: Degree,
}

impl ConstantNormalForm {
    /// Signed diagonal coefficients `ε·weight`.
    pub fn diagonal_coefficients(&self) -> Vec<(usize, Q)> {
        self.diagonals
            .iter()
            .zip(&self.weights)
            .map(|(&(y, e), (_, w))| (y, w * Q::from_integer(e.into())))
            .collect()
    }

    /// Target pairing matrix in the same orientation as the input.
    pub fn canonical_pairing(&self, degrees: &[Degree]) -> Dense<Q> {
        let n = degrees.len();
        let mut out = vec![vec![Q::zero(); n]; n];
        for &(q, p) in &self.pairs {
            let s = sign(self.gamma.dot(&degrees[q]));
            out[q][p] = s.clone();
            out[p][q] = -s * sign(degrees[p].dot(&degrees[q]));
        }
        for (y, c) in self.diagonal_coefficients() {
            out[y][y] = c;
        }
        out
    }
}

fn sign(bit: u8) -> Q {
    if bit & 1 == 1 {
        -Q::one()
    } else {
        Q::one()
    }
}

fn pair(b: &Dense<Q>, u: &[Q], v: &[Q]) -> Q {
    let mut acc = Q::zero();
    for (i, ui) in u.iter().enumerate() {
        if ui.is_zero() {
            continue;
        }
        for (j, vj) in v.iter().enumerate() {
            if !vj.is_zero() && !b[i][j].is_zero() {
                acc += ui * &b[i][j] * vj;
            }
        }
    }
    acc
}

fn axpy(u: &mut [Q], a: &Q, v: &[Q]) {
    for (ui, vi) in u.iter_mut().zip(v) {
        *ui -= a * vi;
    }
}

fn rational_sqrt(r: &Q) -> Option<Q> {
    let root = |n: &BigInt| {
        let s = n.sqrt();
        (&s * &s == *n).then_some(s)
    };
    Some(Q::new(root(r.numer())?, root(r.denom())?))
}

/// Brings a constant graded pairing `b[I][J] = ω_{JI}` to canonical block form.
pub fn constant_normal_form(b: &Dense<Q>, degrees: &[Degree], gamma: Degree) -> Result<ConstantNormalForm> {
    let n = degrees.len();
    if b.len() != n || b.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension(format!("pairing matrix is not {n}x{n}")));
    }
    for i in 0..n {
        for j in 0..n {
            let allowed = degrees[i].add(&degrees[j])? == gamma;
            if !allowed && !b[i][j].is_zero() {
                return Err(Error::DegreeMismatch(format!("entry ({i},{j}) violates degree {gamma}")));
            }
            if b[i][j] != -(b[j][i].clone()) * sign(degrees[i].dot(&degrees[j])) {
                return Err(Error::DegreeMismatch(format!("entry ({i},{j}) breaks graded skewsymmetry")));
            }
        }
    }
    let mut sectors: Vec<Degree> = degrees.to_vec();
    sectors.sort_by_key(|d| d.canonical_index());
    sectors.dedup();
    for &d in &sectors {
        let partner = d.add(&gamma)?;
        let (q, qp) = (
            degrees.iter().filter(|&&x| x == d).count(),
            degrees.iter().filter(|&&x| x == partner).count(),
        );
        if q != qp || (partner == d && !d.is_odd() && q % 2 == 1) {
            return Err(Error::Constraint(format!("sector {d} ({q}) cannot pair with {partner} ({qp})")));
        }
    }

    let unit = |i: usize| -> Vec<Q> { (0..n).map(|k| if k == i { Q::one() } else { Q::zero() }).collect() };
    let mut pool: Vec<(Degree, Vec<Q>)> = (0..n).map(|i| (degrees[i], unit(i))).collect();
    let mut slots: Vec<(Degree, Vec<usize>)> = sectors
        .iter()
        .map(|&d| (d, (0..n).filter(|&i| degrees[i] == d).rev().collect()))
        .collect();
    let mut take_slot = |d: Degree| -> usize {
        slots
            .iter_mut()
            .find(|(k, _)| *k == d)
            .and_then(|(_, s)| s.pop())
            .expect("sector sizes checked")
    };
    let mut change = vec![vec![Q::zero(); n]; n];
    let mut place = |slot: usize, v: &[Q]| {
        for (k, vk) in v.iter().enumerate() {
            change[k][slot] = vk.clone();
        }
    };
    let mut pairs = Vec::new();
    let mut diagonals = Vec::new();
    let mut weights = Vec::new();
    let degenerate = || Error::Nondegenerate("constant pairing is singular".into());

    for &d in &sectors {
        loop {
            let members: Vec<usize> = (0..pool.len()).filter(|&k| pool[k].0 == d).collect();
            let Some(&first) = members.first() else { break };
            if gamma.is_zero() && d.is_odd() {
                let pick = members
                    .iter()
                    .copied()
                    .find(|&k| !pair(b, &pool[k].1, &pool[k].1).is_zero());
                let mut v = match pick {
                    Some(k) => pool.remove(k).1,
                    None => {
                        let (a, c) = members
                            .iter()
                            .flat_map(|&a| members.iter().map(move |&c| (a, c)))
                            .find(|&(a, c)| a < c && !pair(b, &pool[a].1, &pool[c].1).is_zero())
                            .ok_or_else(degenerate)?;
                        let w = pool.remove(c).1;
                        let mut v = pool.remove(a).1;
                        v.iter_mut().zip(&w).for_each(|(x, y)| *x += y);
                        v
                    }
                };
                let mut r = pair(b, &v, &v);
                if let Some(s) = rational_sqrt(&r.abs()) {
                    v.iter_mut().for_each(|x| *x /= &s);
                    r = pair(b, &v, &v);
                }
                for (_, u) in pool.iter_mut() {
                    let a = pair(b, &v, u) / &r;
                    if !a.is_zero() {
                        axpy(u, &a, &v);
                    }
                }
                let slot = take_slot(d);
                place(slot, &v);
                diagonals.push((slot, if r.is_positive() { 1 } else { -1 }));
                weights.push((slot, r.abs()));
            } else {
                let partner = d.add(&gamma)?;
                let q = pool.remove(first).1;
                let w_idx = (0..pool.len())
                    .find(|&k| pool[k].0 == partner && !pair(b, &q, &pool[k].1).is_zero())
                    .ok_or_else(degenerate)?;
                let mut p = pool.remove(w_idx).1;
                let s = sign(gamma.dot(&d));
                let scale = s / pair(b, &q, &p);
                p.iter_mut().for_each(|x| *x *= &scale);
                let qp = pair(b, &q, &p);
                let pq = pair(b, &p, &q);
                for (_, u) in pool.iter_mut() {
                    let alpha = pair(b, u, &p) / &qp;
                    let beta = pair(b, u, &q) / &pq;
                    if !alpha.is_zero() {
                        axpy(u, &alpha, &q);
                    }
                    if !beta.is_zero() {
                        axpy(u, &beta, &p);
                    }
                }
                let (qs, ps) = (take_slot(d), take_slot(partner));
                place(qs, &q);
                place(ps, &p);
                pairs.push((qs, ps));
            }
        }
    }
    Ok(ConstantNormalForm {
        change,
        pairs,
        diagonals,
        weights,
        gamma,
    })
}

/// Weight of a form monomial: polynomial degree plus form degree.
fn weights_of(a: &Form) -> impl Fn(&crate::algebra::Monomial) -> u32 + '_ {
    let f = a.fctx();
    move |m| f.polynomial_degree_of(m) + f.form_degree_of(m)
}

/// Euler vector field Σ xᴵ ∂_{xᴵ}.
pub fn euler_field(ctx: &crate::algebra::Ctx) -> VectorField {
    let comps = (0..ctx.len()).map(|i| Element::gen(ctx, i)).collect();
    VectorField::new(ctx, ctx.zero_degree(), comps).expect("degree-zero field")
}

/// Euler homotopy h = i_E / weight, applied per weight component.
pub fn euler_homotopy(a: &Form) -> Result<Form> {
    let w = weights_of(a);
    if a.value().iter().any(|(m, _)| w(m) == 0) {
        return Err(Error::NoPrimitive(format!("{a} has a weight-zero part")));
    }
    let raw = interior(&euler_field(a.fctx().base()), a);
    let mut out = Element::zero(raw.value().ctx()).with_truncated(raw.value().truncated());
    for (m, c) in raw.value().iter() {
        let k = Q::from_integer(w(m).into());
        out = &out + &Element::term(raw.value().ctx(), m.clone(), c / k);
    }
    Form::new(a.fctx(), out)
}

/// A primitive of a closed form without weight-zero part.
pub fn euler_homotopy_primitive(a: &Form) -> Result<Form> {
    if !de_rham(a).is_zero() {
        return Err(Error::NotClosed(a.to_string()));
    }
    euler_homotopy(a)
}

#[derive(Clone, Debug)]
pub struct DarbouxNormalForm {
    pub gamma: Degree,
    pub pairs: Vec<(usize, usize)>,
    pub diagonals: Vec<(usize, i8)>,
    pub weights: Vec<(usize, Q)>,
    pub linear_change: Dense<Q>,
    /// Original coordinates as functions of the Darboux coordinates, kept one
    /// order past the structure's truncation so pulled-back differentials are
    /// exact below it.
    pub substitution: Substitution,
    /// Lowest order at which the normal form may still differ from ω.
    pub residual_order: u32,
    pub passes: usize,
    /// Remainder orders observed before each correction pass.
    pub history: Vec<u32>,
}

impl DarbouxNormalForm {
    pub fn canonical_form(&self, fctx: &FCtx) -> Form {
        let coeffs: Vec<(usize, Q)> = self
            .diagonals
            .iter()
            .zip(&self.weights)
            .map(|(&(y, e), (_, w))| (y, w * Q::from_integer(e.into())))
            .collect();
        canonical_two_form(fctx, self.gamma, &self.pairs, &coeffs)
    }

    pub fn report(&self, s: &SymplecticStructure) -> NormalFormReport {
        let ctx = s.ctx();
        NormalFormReport {
            degree: self.gamma.to_string(),
            pairs: self
                .pairs
                .iter()
                .map(|&(q, p)| (ctx.name(q).to_string(), ctx.name(p).to_string()))
                .collect(),
            diagonals: self
                .diagonals
                .iter()
                .zip(&self.weights)
                .map(|(&(y, e), (_, w))| (ctx.name(y).to_string(), e, w.to_string()))
                .collect(),
            substitution: (0..ctx.len())
                .map(|i| (ctx.name(i).to_string(), self.substitution.image(i).to_string()))
                .collect(),
            residual_order: self.residual_order,
            passes: self.passes,
            normal_form: self.canonical_form(s.fctx()).to_string(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalFormReport {
    pub degree: String,
    pub pairs: Vec<(String, String)>,
    /// (coordinate, ε, weight); the Darboux coordinate is the named one divided by √weight.
    pub diagonals: Vec<(String, i8, String)>,
    pub substitution: Vec<(String, String)>,
    pub residual_order: u32,
    pub passes: usize,
    pub normal_form: String,
}

pub fn darboux_normalize(s: &SymplecticStructure) -> Result<DarbouxNormalForm> {
    darboux_normalize_with(s, DEFAULT_MAX_PASSES)
}

pub fn darboux_normalize_with(s: &SymplecticStructure, max_passes: usize) -> Result<DarbouxNormalForm> {
    if !s.is_closed() {
        return Err(Error::NotClosed(s.omega().to_string()));
    }
    let ctx = s.ctx().clone();
    let n = ctx.len();
    let trunc = ctx.trunc();
    let degrees: Vec<Degree> = (0..n).map(|i| ctx.degree(i)).collect();
    let pairing = linalg::transpose(&s.components().real_part());
    let cnf = constant_normal_form(&pairing, &degrees, s.gamma())?;

    // One spare order so a remainder of order T-1 still has a primitive.
    let work = ctx.with_trunc(trunc + 1)?;
    let wf = FormContext::new(&work)?;
    let mut total = Substitution::identity(&work);
    for i in 0..n {
        let image = (0..n).fold(Element::zero(&work), |acc, k| {
            if cnf.change[i][k].is_zero() {
                acc
            } else {
                &acc + &Element::gen(&work, k).scale(&cnf.change[i][k])
            }
        });
        total.set(i, image)?;
    }
    let lifted = Form::new(&wf, s.omega().value().recontext(wf.doubled())?)?;
    let mut omega = pullback(&lifted, &total)?;
    let omega0 = canonical_two_form(&wf, s.gamma(), &cnf.pairs, &cnf.diagonal_coefficients());
    let b0 = two_form_components(&omega0)?.real_part();
    let m: Dense<Q> = (0..n)
        .map(|j| (0..n).map(|i| b0[j][i].clone() * sign(degrees[i].dot(&degrees[j]))).collect())
        .collect();
    let m_inv = linalg::invert(&m).ok_or_else(|| Error::Algorithm("canonical form is singular".into()))?;

    let mut history = Vec::new();
    let mut passes = 0;
    let residual_order = loop {
        let rem = &omega - &omega0;
        let k = match rem.lowest_order() {
            Some(k) if k < trunc => k,
            _ => break trunc,
        };
        if k == 0 {
            return Err(Error::Algorithm(format!("constant remainder after linear step: {rem}")));
        }
        if let Some(&prev) = history.last() {
            if k <= prev {
                return Err(Error::Algorithm(format!(
                    "remainder order did not increase ({prev} -> {k}); remainder {rem}"
                )));
            }
        }
        history.push(k);
        if passes == max_passes {
            break k;
        }
        passes += 1;
        let beta = euler_homotopy_primitive(&rem)?;
        let comps: Vec<Element> = (0..n)
            .map(|j| wf.project(&beta.value().partial(wf.diff_index(j))))
            .collect::<Result<_>>()?;
        let mut phi = Substitution::identity(&work);
        for i in 0..n {
            let c = (0..n).fold(Element::zero(&work), |acc, j| {
                if m_inv[i][j].is_zero() {
                    acc
                } else {
                    &acc + &comps[j].scale(&m_inv[i][j])
                }
            });
            phi.set(i, &Element::gen(&work, i) + &c)?;
        }
        let psi = phi.inverse()?;
        omega = pullback(&omega, &psi)?;
        total = psi.after(&total)?;
    };
    Ok(DarbouxNormalForm {
        gamma: s.gamma(),
        pairs: cnf.pairs,
        diagonals: cnf.diagonals,
        weights: cnf.weights,
        linear_change: cnf.change,
        substitution: total,
        residual_order,
        passes,
        history,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalFormCheck {
    pub lowest_order: Option<u32>,
    pub max_coeff: f64,
    pub ok: bool,
}

pub fn verify_normal_form(s: &SymplecticStructure, result: &DarbouxNormalForm) -> Result<NormalFormCheck> {
    let wf = FormContext::new(result.substitution.ctx())?;
    let lifted = Form::new(&wf, s.omega().value().recontext(wf.doubled())?)?;
    let residual = &pullback(&lifted, &result.substitution)? - &result.canonical_form(&wf);
    let lowest_order = residual.lowest_order();
    Ok(NormalFormCheck {
        lowest_order,
        max_coeff: residual.value().max_abs_coeff(),
        ok: lowest_order.map_or(true, |k| k >= result.residual_order),
    })
}
