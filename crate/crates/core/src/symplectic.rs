//! Graded (almost) symplectic structures, Poisson brackets and shifted cotangents.

use serde::Serialize;

use crate::algebra::{linalg, AlgebraContext, AlgebraMatrix, Ctx, Element, Generator, Q};
use crate::calculus::{de_rham, interior, kappa, two_form_components, FCtx, Form, FormContext, VectorField};
use crate::degree::Degree;
use crate::error::{Error, Result};

fn signed(e: Element, bit: u8) -> Element {
    if bit & 1 == 1 {
        -e
    } else {
        e
    }
}

/// Nondegenerate homogeneous two-form with its cached inverse.
#[derive(Clone, Debug)]
pub struct SymplecticStructure {
    fctx: FCtx,
    omega: Form,
    gamma: Degree,
    components: AlgebraMatrix,
    inverse: AlgebraMatrix,
    poisson: AlgebraMatrix,
    closed: bool,
}

/// One cyclic-sum residue of the local closure condition.
#[derive(Clone, Debug)]
pub struct Residue {
    pub indices: [usize; 3],
    pub value: Element,
}

#[derive(Clone, Debug)]
pub struct Closure {
    pub closed: bool,
    pub residues: Vec<Residue>,
}

/// Checks the sector-size constraints a nondegenerate form of degree `gamma` imposes.
pub fn check_dimensions(ctx: &Ctx, gamma: Degree) -> Result<()> {
    if gamma.rank() != ctx.rank() {
        return Err(Error::Dimension(format!("degree {gamma} does not have rank {}", ctx.rank())));
    }
    let sig = ctx.signature();
    let count = |d: Degree| sig.iter().find(|(k, _)| *k == d).map_or(0, |(_, c)| *c);
    for &(d, q) in &sig {
        if gamma.is_zero() {
            if d.dot(&d) == 0 && q % 2 == 1 {
                return Err(Error::Constraint(format!(
                    "sector {d} is self-paired and skew but has odd size {q}"
                )));
            }
        } else {
            let partner = d.add(&gamma)?;
            let qp = count(partner);
            if q != qp {
                return Err(Error::Constraint(format!(
                    "sector {d} has {q} generators but its partner {partner} has {qp}"
                )));
            }
        }
    }
    Ok(())
}

/// Σ (−1)^⟨γ,deg q⟩ dq dp + Σ (c/2)(dy)² for diagonal weights c.
pub fn canonical_two_form(fctx: &FCtx, gamma: Degree, pairs: &[(usize, usize)], diagonals: &[(usize, Q)]) -> Form {
    let base = fctx.base();
    let mut out = Form::zero(fctx);
    for &(qi, pi) in pairs {
        let t = &Form::differential(fctx, qi) * &Form::differential(fctx, pi);
        out = if gamma.dot(&base.degree(qi)) == 1 { &out - &t } else { &out + &t };
    }
    for (y, c) in diagonals {
        let dy = Form::differential(fctx, *y);
        out = &out + &(&dy * &dy).scale(&(c / Q::from_integer(2.into())));
    }
    out
}

/// Canonical pairing of generators for a given degree, following the sector constraints.
pub fn standard_layout(ctx: &Ctx, gamma: Degree) -> Result<(Vec<(usize, usize)>, Vec<(usize, i8)>)> {
    check_dimensions(ctx, gamma)?;
    let mut pairs = Vec::new();
    let mut diagonals = Vec::new();
    for (d, _) in ctx.signature() {
        let members: Vec<usize> = (0..ctx.len()).filter(|&i| ctx.degree(i) == d).collect();
        if gamma.is_zero() {
            if d.is_odd() {
                diagonals.extend(members.iter().map(|&i| (i, 1)));
            } else {
                pairs.extend(members.chunks(2).map(|c| (c[0], c[1])));
            }
        } else {
            let partner = d.add(&gamma)?;
            if partner.canonical_index() < d.canonical_index() {
                continue;
            }
            let others = (0..ctx.len()).filter(|&i| ctx.degree(i) == partner);
            pairs.extend(members.iter().copied().zip(others));
        }
    }
    Ok((pairs, diagonals))
}

/// Constant structure of degree `gamma` on `ctx`, rejected when the signature forbids one.
pub fn standard_structure(ctx: &Ctx, gamma: Degree) -> Result<SymplecticStructure> {
    let (pairs, diagonals) = standard_layout(ctx, gamma)?;
    let diagonals: Vec<(usize, Q)> = diagonals.into_iter().map(|(i, e)| (i, Q::from_integer(e.into()))).collect();
    let fctx = FormContext::new(ctx)?;
    build_structure(&canonical_two_form(&fctx, gamma, &pairs, &diagonals))
}

pub fn build_structure(omega: &Form) -> Result<SymplecticStructure> {
    let fctx = omega.fctx().clone();
    let base = fctx.base().clone();
    if omega.is_zero() {
        return Err(Error::Nondegenerate("the zero form is degenerate".into()));
    }
    if omega.form_degrees() != [2] {
        return Err(Error::DegreeMismatch(format!("{omega} is not a two-form")));
    }
    let gamma = omega
        .degree()
        .ok_or_else(|| Error::DegreeMismatch(format!("{omega} is not homogeneous")))?;
    check_dimensions(&base, gamma)?;
    let components = two_form_components(omega)?;
    let real = components.real_part();
    for (d, q) in base.signature() {
        if q == 0 {
            continue;
        }
        let partner = d.add(&gamma)?;
        let rows: Vec<usize> = (0..base.len()).filter(|&j| base.degree(j) == d).collect();
        let cols: Vec<usize> = (0..base.len()).filter(|&i| base.degree(i) == partner).collect();
        let block: linalg::Dense<Q> = rows
            .iter()
            .map(|&j| cols.iter().map(|&i| real[j][i].clone()).collect())
            .collect();
        if rows.len() != cols.len() || linalg::rank(&block) < rows.len() {
            return Err(Error::Nondegenerate(format!("block ({d}, {partner}) is singular")));
        }
    }
    let inverse = components.invert()?;
    let mut poisson = inverse.clone();
    for i in 0..base.len() {
        let d = base.degree(i);
        if d.dot(&d) == 1 {
            for k in 0..base.len() {
                poisson.set(i, k, -inverse.get(i, k));
            }
        }
    }
    let closed = de_rham(omega).is_zero();
    Ok(SymplecticStructure {
        fctx,
        omega: omega.clone(),
        gamma,
        components,
        inverse,
        poisson,
        closed,
    })
}

impl SymplecticStructure {
    pub fn fctx(&self) -> &FCtx {
        &self.fctx
    }

    pub fn ctx(&self) -> &Ctx {
        self.fctx.base()
    }

    pub fn omega(&self) -> &Form {
        &self.omega
    }

    pub fn gamma(&self) -> Degree {
        self.gamma
    }

    /// `get(J, I) = ω_{JI}`.
    pub fn components(&self) -> &AlgebraMatrix {
        &self.components
    }

    /// `get(I, K) = ω^{IK}`.
    pub fn inverse(&self) -> &AlgebraMatrix {
        &self.inverse
    }

    /// `get(I, J) = P^{IJ}`.
    pub fn poisson_tensor(&self) -> &AlgebraMatrix {
        &self.poisson
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn is_odd(&self) -> bool {
        self.gamma.is_odd()
    }

    pub fn check_closed(&self) -> Closure {
        let ctx = self.ctx();
        let n = ctx.len();
        let w = |j: usize, i: usize| self.components.get(j, i);
        let deg = |i: usize| ctx.degree(i);
        let mut residues = Vec::new();
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    let a = signed(w(j, i).partial(k), deg(i).dot(&deg(k)));
                    let b = signed(w(i, k).partial(j), deg(k).dot(&deg(j)));
                    let c = signed(w(k, j).partial(i), deg(j).dot(&deg(i)));
                    let value = &(&a + &b) + &c;
                    if !value.is_zero() {
                        residues.push(Residue {
                            indices: [i, j, k],
                            value,
                        });
                    }
                }
            }
        }
        Closure {
            closed: self.closed,
            residues,
        }
    }

    /// Xᴵ = (−1)^{⟨f+γ,γ⟩+⟨f,I⟩} P^{IJ} ∂_J f for homogeneous f of degree `df`.
    fn hamiltonian_components(&self, f: &Element, df: Degree) -> Vec<Element> {
        let ctx = self.ctx();
        let n = ctx.len();
        let grads: Vec<Element> = (0..n).map(|j| f.partial(j)).collect();
        let s0 = df.add(&self.gamma).expect("same rank").dot(&self.gamma);
        (0..n)
            .map(|i| {
                let mut c = Element::zero(ctx);
                for (j, g) in grads.iter().enumerate() {
                    let p = self.poisson.get(i, j);
                    if !g.is_zero() && !p.is_zero() {
                        c = &c + &(p * g);
                    }
                }
                signed(c, s0 + df.dot(&ctx.degree(i)))
            })
            .collect()
    }

    pub fn poisson_bracket(&self, f: &Element, g: &Element) -> Element {
        let ctx = self.ctx();
        let mut out = Element::zero(ctx);
        let dg: Vec<Element> = (0..ctx.len()).map(|i| g.partial(i)).collect();
        for (df, fh) in f.homogeneous_components() {
            let x = self.hamiltonian_components(&fh, df);
            for (xi, gi) in x.iter().zip(&dg) {
                if !xi.is_zero() && !gi.is_zero() {
                    out = &out + &(xi * gi);
                }
            }
        }
        out
    }

    /// The field with i_{X_f}ω = df, checked by back-substitution.
    pub fn hamiltonian_vf(&self, f: &Element) -> Result<VectorField> {
        let ctx = self.ctx();
        if f.is_zero() {
            return Ok(VectorField::zero(ctx, self.gamma));
        }
        let df = f
            .homogeneous_degree()
            .ok_or_else(|| Error::DegreeMismatch(format!("{f} is not homogeneous")))?;
        let x = VectorField::new(ctx, df.add(&self.gamma)?, self.hamiltonian_components(f, df))?;
        let lhs = interior(&x, &self.omega);
        let rhs = de_rham(&Form::function(&self.fctx, f));
        if lhs != rhs {
            return Err(Error::Algorithm(format!(
                "hamiltonian field of {f} fails i_X ω = df: {lhs} vs {rhs}"
            )));
        }
        Ok(x)
    }

    /// {f,{g,h}} − {{f,g},h} − (−1)^⟨f+γ,g+γ⟩ {g,{f,h}}, summed over homogeneous components.
    pub fn jacobiator(&self, f: &Element, g: &Element, h: &Element) -> Element {
        let ctx = self.ctx();
        let br = |u: &Element, v: &Element| self.poisson_bracket(u, v);
        let mut out = Element::zero(ctx);
        for (df, fh) in f.homogeneous_components() {
            for (dg, gh) in g.homogeneous_components() {
                let swap = (df + self.gamma).dot(&(dg + self.gamma));
                let term = &(&br(&fh, &br(&gh, h)) - &br(&br(&fh, &gh), h)) - &signed(br(&gh, &br(&fh, h)), swap);
                out = &out + &term;
            }
        }
        out
    }

    /// Position/momentum pairs when ω is exactly Σ (−1)^⟨γ,x⟩ dx dp.
    pub fn canonical_pairs(&self) -> Result<Vec<(usize, usize)>> {
        let ctx = self.ctx();
        let mut pairs = Vec::new();
        let mut seen = vec![false; ctx.len()];
        for a in 0..ctx.len() {
            if seen[a] {
                continue;
            }
            let partners: Vec<usize> = (0..ctx.len()).filter(|&b| !self.components.get(b, a).is_zero()).collect();
            let [b] = partners[..] else {
                return Err(Error::Unsupported(format!("{} is not paired with a single coordinate", ctx.name(a))));
            };
            if b == a {
                return Err(Error::Unsupported(format!("{} is self-paired", ctx.name(a))));
            }
            let oriented = [(a, b), (b, a)].into_iter().find(|&pair| {
                let piece = two_form_components(&canonical_two_form(&self.fctx, self.gamma, &[pair], &[]));
                piece.is_ok_and(|m| m.get(b, a) == self.components.get(b, a) && m.get(a, b) == self.components.get(a, b))
            });
            let pair = oriented.ok_or_else(|| {
                Error::Unsupported(format!("{} and {} are not canonically paired", ctx.name(a), ctx.name(b)))
            })?;
            seen[a] = true;
            seen[b] = true;
            pairs.push(pair);
        }
        if canonical_two_form(&self.fctx, self.gamma, &pairs, &[]) != self.omega {
            return Err(Error::Unsupported("structure is not in canonical cotangent form".into()));
        }
        Ok(pairs)
    }

    /// Σ ∂_x ∂_p f over the canonical pairs of an odd structure.
    pub fn bv_laplacian(&self, f: &Element) -> Result<Element> {
        if !self.gamma.is_odd() {
            return Err(Error::Parity(format!("structure degree {} is even", self.gamma)));
        }
        let mut out = Element::zero(self.ctx());
        for (x, p) in self.canonical_pairs()? {
            out = &out + &f.partial(p).partial(x);
        }
        Ok(out)
    }

    /// κ(ω) with the invertibility verdict of its degree-zero block.
    pub fn reduce(&self) -> Result<Reduction> {
        if !self.gamma.is_zero() {
            return Err(Error::NotReducible(self.gamma.to_string()));
        }
        let form = kappa(&self.omega);
        let ctx = self.ctx();
        let zero: Vec<usize> = (0..ctx.len()).filter(|&i| ctx.degree(i).is_zero()).collect();
        let real = self.components.real_part();
        let block: linalg::Dense<Q> = zero
            .iter()
            .map(|&j| zero.iter().map(|&i| real[j][i].clone()).collect())
            .collect();
        let nondegenerate = linalg::rank(&block) == zero.len();
        Ok(Reduction { form, nondegenerate })
    }

    pub fn report(&self) -> StructureReport {
        let ctx = self.ctx();
        let mut blocks = Vec::new();
        for (d, q) in ctx.signature() {
            if q > 0 {
                blocks.push((d.to_string(), d.add(&self.gamma).expect("same rank").to_string()));
            }
        }
        let mut poisson = Vec::new();
        for i in 0..ctx.len() {
            for j in 0..ctx.len() {
                let p = self.poisson.get(i, j);
                if !p.is_zero() {
                    poisson.push((ctx.name(i).to_string(), ctx.name(j).to_string(), p.to_string()));
                }
            }
        }
        StructureReport {
            degree: self.gamma.to_string(),
            parity: if self.is_odd() { "odd" } else { "even" }.into(),
            closed: self.closed,
            signature: ctx.signature().into_iter().map(|(d, q)| (d.to_string(), q)).collect(),
            blocks,
            poisson,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Reduction {
    pub form: Form,
    pub nondegenerate: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StructureReport {
    pub degree: String,
    pub parity: String,
    pub closed: bool,
    pub signature: Vec<(String, usize)>,
    pub blocks: Vec<(String, String)>,
    pub poisson: Vec<(String, String, String)>,
}

/// Π_γ T*M over a base chart with the canonical ω_γ.
#[derive(Clone, Debug)]
pub struct ShiftedCotangent {
    base: Ctx,
    gamma: Degree,
    positions: Vec<usize>,
    momenta: Vec<usize>,
    structure: SymplecticStructure,
}

/// Cotangent with default momentum names `p_<name>`.
pub fn canonical_cotangent(base: &Ctx, gamma: Degree) -> Result<ShiftedCotangent> {
    let names: Vec<String> = base.generators().iter().map(|g| format!("p_{}", g.name)).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    canonical_cotangent_named(base, gamma, &refs)
}

pub fn canonical_cotangent_named(base: &Ctx, gamma: Degree, momenta: &[&str]) -> Result<ShiftedCotangent> {
    if momenta.len() != base.len() {
        return Err(Error::Dimension(format!(
            "{} momenta given for {} coordinates",
            momenta.len(),
            base.len()
        )));
    }
    if gamma.rank() != base.rank() {
        return Err(Error::Dimension(format!("shift {gamma} does not have rank {}", base.rank())));
    }
    if base.trunc() < 2 {
        return Err(Error::Config(format!(
            "truncation {} cannot hold linear momentum terms",
            base.trunc()
        )));
    }
    let mut gens: Vec<Generator> = base.generators().to_vec();
    for (g, name) in base.generators().iter().zip(momenta) {
        gens.push(Generator {
            name: name.to_string(),
            degree: g.degree.add(&gamma)?,
            weight: g.weight,
        });
    }
    let ctx = AlgebraContext::from_generators(base.rank(), gens, base.trunc())?;
    let positions = base
        .generators()
        .iter()
        .map(|g| ctx.index_of(&g.name))
        .collect::<Result<Vec<_>>>()?;
    let momenta = momenta.iter().map(|m| ctx.index_of(m)).collect::<Result<Vec<_>>>()?;
    let fctx = FormContext::new(&ctx)?;
    let pairs: Vec<(usize, usize)> = positions.iter().copied().zip(momenta.iter().copied()).collect();
    let structure = build_structure(&canonical_two_form(&fctx, gamma, &pairs, &[]))?;
    if !structure.is_closed() {
        return Err(Error::Algorithm("canonical structure is not closed".into()));
    }
    Ok(ShiftedCotangent {
        base: base.clone(),
        gamma,
        positions,
        momenta,
        structure,
    })
}

impl ShiftedCotangent {
    pub fn base(&self) -> &Ctx {
        &self.base
    }

    pub fn ctx(&self) -> &Ctx {
        self.structure.ctx()
    }

    pub fn gamma(&self) -> Degree {
        self.gamma
    }

    /// Index in the extended context of the i-th base coordinate.
    pub fn position(&self, i: usize) -> usize {
        self.positions[i]
    }

    /// Index in the extended context of the momentum paired with the i-th base coordinate.
    pub fn momentum(&self, i: usize) -> usize {
        self.momenta[i]
    }

    pub fn structure(&self) -> &SymplecticStructure {
        &self.structure
    }

    /// Σ_I ∂_{xᴵ} ∂_{p_I} f, with first-order terms dropped.
    pub fn bv_laplacian(&self, f: &Element) -> Result<Element> {
        if !self.gamma.is_odd() {
            return Err(Error::Parity(format!("shift {} is even", self.gamma)));
        }
        let mut out = Element::zero(self.ctx());
        for (&x, &p) in self.positions.iter().zip(&self.momenta) {
            out = &out + &f.partial(p).partial(x);
        }
        Ok(out)
    }
}
