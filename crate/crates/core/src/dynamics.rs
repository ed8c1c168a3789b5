//! Gauge systems, standard cohomology, Hamiltonian systems and linear phase flows.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::algebra::{linalg, qi, AlgebraContext, Ctx, Element, Monomial, Q};
use crate::calculus::{Form, VectorField};
use crate::degree::{canonical_order, Degree};
use crate::error::{Error, Result};
use crate::symplectic::{build_structure, canonical_cotangent_named, ShiftedCotangent, SymplecticStructure};

fn homogeneous_degree(f: &Element, what: &str) -> Result<Degree> {
    if f.is_zero() {
        return Ok(f.ctx().zero_degree());
    }
    f.homogeneous_degree()
        .ok_or_else(|| Error::DegreeMismatch(format!("{what} {f} is not homogeneous")))
}

/// Structure together with a homological potential Θ and Q_Θ = X_Θ.
#[derive(Clone, Debug)]
pub struct GaugeSystem {
    structure: SymplecticStructure,
    theta: Element,
    q_theta: VectorField,
}

pub fn build_gauge_system(s: &SymplecticStructure, theta: &Element) -> Result<GaugeSystem> {
    if theta.ctx() != s.ctx() {
        return Err(Error::ContextMismatch);
    }
    let d = homogeneous_degree(theta, "potential")?;
    if !theta.is_zero() && d.is_odd() == s.is_odd() {
        let want = if s.is_odd() { "even" } else { "odd" };
        return Err(Error::Parity(format!(
            "potential of degree {d} must have {want} total parity for a structure of degree {}",
            s.gamma()
        )));
    }
    if !s.is_closed() {
        return Err(Error::NotClosed(
            "a gauge system needs a closed structure for Q_Θ² = 0".into(),
        ));
    }
    let square = s.poisson_bracket(theta, theta);
    if !square.is_zero() {
        return Err(Error::Gauge(format!("condition {{Θ,Θ}} = 0 is non-trivial: {{Θ,Θ}} = {square}")));
    }
    let q_theta = s.hamiltonian_vf(theta)?;
    let ctx = s.ctx();
    // Q_Θ lowers the order by at most one, so only orders below T − 1 are reliable.
    let cut = ctx.trunc().saturating_sub(1);
    for i in 0..ctx.len() {
        let qq = q_theta.apply(&q_theta.apply(&Element::gen(ctx, i)));
        if !qq.truncate_at(cut).is_zero() {
            return Err(Error::Algorithm(format!("Q_Θ² {} = {qq}", ctx.name(i))));
        }
    }
    Ok(GaugeSystem {
        structure: s.clone(),
        theta: theta.clone(),
        q_theta,
    })
}

impl GaugeSystem {
    pub fn structure(&self) -> &SymplecticStructure {
        &self.structure
    }

    pub fn theta(&self) -> &Element {
        &self.theta
    }

    pub fn q_theta(&self) -> &VectorField {
        &self.q_theta
    }

    /// deg Θ + γ.
    pub fn differential_degree(&self) -> Degree {
        self.q_theta.degree()
    }

    /// Whether a homogeneous f lies in the image of Q_Θ on the finite basis.
    pub fn is_exact(&self, f: &Element, accept_truncation: bool) -> Result<bool> {
        if f.is_zero() {
            return Ok(true);
        }
        let d = homogeneous_degree(f, "cochain")?;
        let basis = monomial_basis(self.structure.ctx(), accept_truncation)?.basis;
        let src = d.add(&self.differential_degree())?;
        let empty = Vec::new();
        let (rows, cols) = (basis.get(&d).unwrap_or(&empty), basis.get(&src).unwrap_or(&empty));
        let mut m = differential_matrix(&self.q_theta, cols, rows);
        let before = linalg::rank(&m);
        for (r, mono) in rows.iter().enumerate() {
            m[r].push(f.coeff(mono));
        }
        if f.iter().any(|(mono, _)| !rows.contains(mono)) {
            return Ok(false);
        }
        Ok(linalg::rank(&m) == before)
    }
}

/// Monomials of order below the truncation, grouped by degree.
pub struct MonomialBasis {
    pub basis: BTreeMap<Degree, Vec<Monomial>>,
    pub truncation_dependent: bool,
}

pub fn monomial_basis(ctx: &Ctx, accept_truncation: bool) -> Result<MonomialBasis> {
    let nilpotent = ctx.purely_odd();
    let full_order: u32 = ctx.generators().iter().map(|g| g.weight).sum();
    let truncation_dependent = !nilpotent || full_order >= ctx.trunc();
    if truncation_dependent && !accept_truncation {
        return Err(Error::Unsupported(format!(
            "function algebra is cut at order {} and is not finite-dimensional as given; accept the truncation to proceed",
            ctx.trunc()
        )));
    }
    if ctx.generators().iter().any(|g| g.weight == 0 && !g.degree.is_odd()) {
        return Err(Error::Unsupported("weightless even generator".into()));
    }
    let mut basis: BTreeMap<Degree, Vec<Monomial>> = canonical_order(ctx.rank())?
        .into_iter()
        .map(|d| (d, Vec::new()))
        .collect();
    let mut exps = vec![0u8; ctx.len()];
    enumerate(ctx, 0, 0, &mut exps, &mut basis);
    for v in basis.values_mut() {
        v.sort();
    }
    Ok(MonomialBasis {
        basis,
        truncation_dependent,
    })
}

fn enumerate(ctx: &AlgebraContext, i: usize, order: u32, exps: &mut Vec<u8>, out: &mut BTreeMap<Degree, Vec<Monomial>>) {
    if i == ctx.len() {
        let m = Monomial::from_exponents(exps.clone());
        out.entry(m.degree(ctx)).or_default().push(m);
        return;
    }
    let w = ctx.generator(i).weight;
    let cap: u32 = if ctx.is_odd(i) { 1 } else { u8::MAX as u32 };
    let mut e = 0;
    while e <= cap && order + w * e < ctx.trunc() {
        exps[i] = e as u8;
        enumerate(ctx, i + 1, order + w * e, exps, out);
        if w == 0 && e == 1 {
            break;
        }
        e += 1;
    }
    exps[i] = 0;
}

/// Matrix of X from span(`cols`) to span(`rows`); columns are images of basis monomials.
fn differential_matrix(x: &VectorField, cols: &[Monomial], rows: &[Monomial]) -> linalg::Dense<Q> {
    let ctx = x.ctx();
    let images: Vec<Element> = cols
        .iter()
        .map(|m| x.apply(&Element::term(ctx, m.clone(), qi(1))))
        .collect();
    rows.iter()
        .map(|r| images.iter().map(|img| img.coeff(r)).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SectorCohomology {
    pub degree: String,
    pub dimension: usize,
    pub kernel: usize,
    pub image: usize,
    pub cohomology: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct StandardCohomology {
    pub differential_degree: String,
    pub truncation_dependent: bool,
    pub sectors: Vec<SectorCohomology>,
}

/// Kernel, incoming image and cohomology dimensions of Q_Θ per degree sector.
pub fn standard_cohomology(g: &GaugeSystem, accept_truncation: bool) -> Result<StandardCohomology> {
    let ctx = g.structure.ctx();
    let mb = monomial_basis(ctx, accept_truncation)?;
    let delta = g.differential_degree();
    let mut outgoing: BTreeMap<Degree, linalg::Dense<Q>> = BTreeMap::new();
    for (d, cols) in &mb.basis {
        let rows = &mb.basis[&d.add(&delta)?];
        outgoing.insert(*d, differential_matrix(&g.q_theta, cols, rows));
    }
    let mut sectors = Vec::new();
    for (d, cols) in &mb.basis {
        let target = d.add(&delta)?;
        let (out, back) = (&outgoing[d], &outgoing[&target]);
        if !cols.is_empty() && !mb.basis[&target].is_empty() {
            let square = linalg::mat_mul(back, out);
            if square.iter().flatten().any(|c| c != &qi(0)) {
                return Err(Error::Algorithm(format!(
                    "the differential does not square to zero on sector {d} below order {}; raise the truncation",
                    ctx.trunc()
                )));
            }
        }
        let kernel = cols.len() - linalg::rank(out);
        let image = linalg::rank(back);
        sectors.push(SectorCohomology {
            degree: d.to_string(),
            dimension: cols.len(),
            kernel,
            image,
            cohomology: kernel - image,
        });
    }
    Ok(StandardCohomology {
        differential_degree: delta.to_string(),
        truncation_dependent: mb.truncation_dependent,
        sectors,
    })
}

/// Structure with a Hamiltonian whose parity matches that of the structure.
#[derive(Clone, Debug)]
pub struct HamiltonianSystem {
    structure: SymplecticStructure,
    hamiltonian: Element,
}

pub fn build_hamiltonian_system(s: &SymplecticStructure, h: &Element) -> Result<HamiltonianSystem> {
    if h.ctx() != s.ctx() {
        return Err(Error::ContextMismatch);
    }
    let d = homogeneous_degree(h, "hamiltonian")?;
    if !h.is_zero() && d.is_odd() != s.is_odd() {
        return Err(Error::Parity(format!(
            "hamiltonian of degree {d} must have the parity of the structure degree {}",
            s.gamma()
        )));
    }
    Ok(HamiltonianSystem {
        structure: s.clone(),
        hamiltonian: h.clone(),
    })
}

impl HamiltonianSystem {
    pub fn structure(&self) -> &SymplecticStructure {
        &self.structure
    }

    pub fn hamiltonian(&self) -> &Element {
        &self.hamiltonian
    }

    pub fn ctx(&self) -> &Ctx {
        self.structure.ctx()
    }
}

/// dxᴵ/dt = {H, xᴵ}, one entry per generator in context order.
pub fn hamilton_equations(h: &HamiltonianSystem) -> Vec<Element> {
    let ctx = h.ctx();
    (0..ctx.len())
        .map(|i| h.structure.poisson_bracket(&h.hamiltonian, &Element::gen(ctx, i)))
        .collect()
}

/// A with {H, xᴵ} = Σ_J A[J][I] xᴶ; fails unless every equation is linear.
pub fn flow_matrix(h: &HamiltonianSystem) -> Result<linalg::Dense<Q>> {
    let ctx = h.ctx();
    let n = ctx.len();
    let mut a = vec![vec![qi(0); n]; n];
    for (i, rhs) in hamilton_equations(h).iter().enumerate() {
        for (m, c) in rhs.iter() {
            let mut support = m.support();
            match (support.next(), support.next()) {
                (Some((j, 1)), None) => a[j][i] = c.clone(),
                _ => {
                    return Err(Error::Unsupported(format!(
                        "equation for {} is not linear: {rhs}",
                        ctx.name(i)
                    )))
                }
            }
        }
    }
    Ok(a)
}

/// Column I holds the expansion of the evolved xᴵ in the fixed generator basis.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearFlowState {
    pub t: f64,
    pub coefficients: linalg::Dense<f64>,
}

fn to_f64(a: &linalg::Dense<Q>) -> linalg::Dense<f64> {
    a.iter()
        .map(|r| r.iter().map(crate::algebra::Scalar::to_f64).collect())
        .collect()
}

fn axpy(a: &linalg::Dense<f64>, s: f64, b: &linalg::Dense<f64>) -> linalg::Dense<f64> {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + s * y).collect())
        .collect()
}

fn rk4_step(a: &linalg::Dense<f64>, c: &linalg::Dense<f64>, h: f64) -> linalg::Dense<f64> {
    let k1 = linalg::mat_mul(a, c);
    let k2 = linalg::mat_mul(a, &axpy(c, h / 2.0, &k1));
    let k3 = linalg::mat_mul(a, &axpy(c, h / 2.0, &k2));
    let k4 = linalg::mat_mul(a, &axpy(c, h, &k3));
    let mut out = c.clone();
    for i in 0..c.len() {
        for j in 0..c.len() {
            out[i][j] += h / 6.0 * (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]);
        }
    }
    out
}

/// Integrates dC/dt = A·C from C(0) = 1 with classic RK4; the last step is shortened to land on `t_end`.
pub fn linear_flow(h: &HamiltonianSystem, t_end: f64, dt: f64) -> Result<Vec<LinearFlowState>> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!("time step {dt} must be positive")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Config(format!("end time {t_end} must be non-negative")));
    }
    let a = to_f64(&flow_matrix(h)?);
    let steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let mut c = linalg::identity::<f64>(a.len());
    let mut out = vec![LinearFlowState { t: 0.0, coefficients: c.clone() }];
    for k in 0..steps {
        let t0 = k as f64 * dt;
        let t1 = if k + 1 == steps { t_end } else { (k + 1) as f64 * dt };
        c = rk4_step(&a, &c, t1 - t0);
        out.push(LinearFlowState { t: t1, coefficients: c.clone() });
    }
    Ok(out)
}

/// exp(tA) by scaling and squaring of a truncated Taylor series.
pub fn matrix_exponential(a: &linalg::Dense<f64>, t: f64) -> linalg::Dense<f64> {
    let n = a.len();
    let norm = a.iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max) * t.abs();
    let mut s = 0;
    while norm / f64::powi(2.0, s) > 0.25 {
        s += 1;
    }
    let scale = t / f64::powi(2.0, s);
    let b: linalg::Dense<f64> = a.iter().map(|r| r.iter().map(|x| x * scale).collect()).collect();
    let mut term = linalg::identity::<f64>(n);
    let mut sum = term.clone();
    for k in 1..=24 {
        term = linalg::mat_mul(&term, &b);
        for row in term.iter_mut() {
            for x in row.iter_mut() {
                *x /= k as f64;
            }
        }
        sum = axpy(&sum, 1.0, &term);
    }
    for _ in 0..s {
        sum = linalg::mat_mul(&sum, &sum);
    }
    sum
}

/// Writes a trajectory as CSV with one `coeff(x->y)` column per entry: the coefficient of y in the evolved x.
pub fn write_trajectory_csv<W: Write>(ctx: &Ctx, states: &[LinearFlowState], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Config(format!("csv output: {e}"));
    let mut w = csv::Writer::from_writer(out);
    let n = ctx.len();
    let mut header = vec!["t".to_string()];
    for i in 0..n {
        for j in 0..n {
            header.push(format!("coeff({}->{})", ctx.name(i), ctx.name(j)));
        }
    }
    w.write_record(&header).map_err(io)?;
    for s in states {
        let mut rec = vec![format!("{}", s.t)];
        for i in 0..n {
            for j in 0..n {
                rec.push(format!("{:.15e}", s.coefficients[j][i]));
            }
        }
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Config(format!("csv output: {e}")))
}

pub const PARA_OSCILLATOR_TRUNC: u32 = 4;

/// Base chart of the paraboson/parafermion pair in Green components.
pub fn para_configuration(trunc: u32) -> Result<Ctx> {
    AlgebraContext::new(
        4,
        &[
            ("q1", Degree::of(&[0, 1, 0, 1])),
            ("q2", Degree::of(&[1, 0, 0, 1])),
            ("psi1", Degree::of(&[0, 1, 1, 1])),
            ("psi2", Degree::of(&[1, 0, 1, 1])),
        ],
        trunc,
    )
}

/// Degree-zero phase space of the Green-component chart with momenta p1, p2, pi1, pi2.
///
/// The structure is dq^i dp_i − dψ^î dπ_î, whose bracket is
/// (−1)^⟨f,i⟩ (f_p g_q − f_q g_p) + (−1)^⟨f,î⟩ (f_π g_ψ + f_ψ g_π);
/// it differs from the canonical cotangent structure by π ↦ −π.
pub fn para_phase_space(trunc: u32) -> Result<SymplecticStructure> {
    let base = para_configuration(trunc)?;
    let t = canonical_cotangent_named(&base, Degree::zero(4), &["p1", "p2", "pi1", "pi2"])?;
    let fctx = t.structure().fctx();
    let d = |name: &str| Form::named(fctx, &format!("d:{name}"));
    let bosons = &(&d("q1")? * &d("p1")?) + &(&d("q2")? * &d("p2")?);
    let fermions = &(&d("psi1")? * &d("pi1")?) + &(&d("psi2")? * &d("pi2")?);
    build_structure(&(&bosons - &fermions))
}

/// H = δ^{ij} p_j p_i / 2m + k q^i q^j δ_{ji} / 2 + λ ψ^î π_î.
pub fn para_hamiltonian(ctx: &Ctx, m: &Q, k: &Q, lambda: &Q) -> Result<Element> {
    if m == &qi(0) {
        return Err(Error::Config("mass must be nonzero".into()));
    }
    let g = |name: &str| Element::named(ctx, name);
    let half = Q::new(1.into(), 2.into());
    let kinetic = &(&g("p1")? * &g("p1")?) + &(&g("p2")? * &g("p2")?);
    let potential = &(&g("q1")? * &g("q1")?) + &(&g("q2")? * &g("q2")?);
    let coupling = &(&g("psi1")? * &g("pi1")?) + &(&g("psi2")? * &g("pi2")?);
    Ok(&(&kinetic.scale(&(&half / m)) + &potential.scale(&(&half * k))) + &coupling.scale(lambda))
}

pub fn build_para_oscillator(m: &Q, k: &Q, lambda: &Q) -> Result<HamiltonianSystem> {
    let s = para_phase_space(PARA_OSCILLATOR_TRUNC)?;
    let h = para_hamiltonian(s.ctx(), m, k, lambda)?;
    build_hamiltonian_system(&s, &h)
}

/// Degree-(1,1) shifted cotangent of a rank-r bundle over an m-dimensional chart,
/// with coordinates x1.. (0,0), xi1.. (1,0), p1.. (1,1), pi1.. (0,1).
pub fn double_bundle(base_dim: usize, rank: usize, trunc: u32) -> Result<ShiftedCotangent> {
    let names: Vec<(String, Degree)> = (1..=base_dim)
        .map(|a| (format!("x{a}"), Degree::of(&[0, 0])))
        .chain((1..=rank).map(|i| (format!("xi{i}"), Degree::of(&[1, 0]))))
        .collect();
    let refs: Vec<(&str, Degree)> = names.iter().map(|(s, d)| (s.as_str(), *d)).collect();
    let base = AlgebraContext::new(2, &refs, trunc)?;
    let momenta: Vec<String> = (1..=base_dim)
        .map(|a| format!("p{a}"))
        .chain((1..=rank).map(|i| format!("pi{i}")))
        .collect();
    let refs: Vec<&str> = momenta.iter().map(String::as_str).collect();
    canonical_cotangent_named(&base, Degree::of(&[1, 1]), &refs)
}

/// Re-expresses `e` in a context containing its generators under the same names.
fn lift(e: &Element, ctx: &Ctx) -> Result<Element> {
    if e.ctx() == ctx {
        return Ok(e.clone());
    }
    let src = e.ctx();
    let map = (0..src.len())
        .map(|i| ctx.index_of(src.name(i)))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Element::zero(ctx);
    for (m, c) in e.iter() {
        let mut exps = vec![0u8; ctx.len()];
        for (i, k) in m.support() {
            exps[map[i]] = k;
        }
        out = &out + &Element::term(ctx, Monomial::from_exponents(exps), c.clone());
    }
    Ok(out)
}

/// Θ = −ξ^i Q_i^a p_a + ½ ξ^i ξ^j Q_{ji}^k π_k for an anchor `anchor[i][a]`
/// and antisymmetric constants `constants[i][j][k]` = Q_{ij}^k.
pub fn bialgebroid_potential(t: &ShiftedCotangent, anchor: &[Vec<Element>], constants: &[Vec<Vec<Q>>]) -> Result<Element> {
    let ctx = t.ctx();
    let g = |name: String| Element::named(ctx, &name);
    let rank = constants.len();
    if anchor.len() != rank {
        return Err(Error::Dimension(format!("anchor has {} rows for rank {rank}", anchor.len())));
    }
    let mut theta = Element::zero(ctx);
    for (i, row) in anchor.iter().enumerate() {
        for (a, q) in row.iter().enumerate() {
            let q = lift(q, ctx)?;
            theta = &theta - &(&(&g(format!("xi{}", i + 1))? * &q) * &g(format!("p{}", a + 1))?);
        }
    }
    let half = Q::new(1.into(), 2.into());
    for i in 0..rank {
        if constants[i].len() != rank || constants[i].iter().any(|r| r.len() != rank) {
            return Err(Error::Dimension("structure constants must be rank × rank × rank".into()));
        }
        for j in 0..rank {
            for k in 0..rank {
                if constants[i][j][k] != -constants[j][i][k].clone() {
                    return Err(Error::Config(format!(
                        "structure constants are not antisymmetric at ({}, {}, {})",
                        i + 1,
                        j + 1,
                        k + 1
                    )));
                }
                let c = &constants[j][i][k] * &half;
                if c != qi(0) {
                    let xx = &g(format!("xi{}", i + 1))? * &g(format!("xi{}", j + 1))?;
                    theta = &theta + &(&xx * &g(format!("pi{}", k + 1))?).scale(&c);
                }
            }
        }
    }
    Ok(theta)
}
