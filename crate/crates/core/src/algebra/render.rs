use super::context::AlgebraContext;
use super::element::{Monomial, Series};
use super::scalar::Scalar;

pub fn render_monomial(ctx: &AlgebraContext, m: &Monomial) -> String {
    m.support()
        .map(|(i, e)| {
            if e == 1 {
                ctx.name(i).to_string()
            } else {
                format!("{}^{e}", ctx.name(i))
            }
        })
        .collect::<Vec<_>>()
        .join("*")
}

/// Canonical text: terms in monomial order, e.g. `3 + 2*x^2*xi*theta`.
pub fn render<S: Scalar>(e: &Series<S>) -> String {
    if e.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (k, (m, c)) in e.iter().enumerate() {
        let neg = c.is_negative();
        match (k, neg) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        let mono = render_monomial(e.ctx(), m);
        let abs = c.abs();
        if mono.is_empty() {
            out.push_str(&abs.render_abs());
        } else if abs.is_one() {
            out.push_str(&mono);
        } else {
            out.push_str(&abs.render_abs());
            out.push('*');
            out.push_str(&mono);
        }
    }
    out
}
