//! Reference distributions used throughout the test suites.

use crate::expr::{Expr, Rational, VectorField};
use crate::frame::Distribution;

/// Coordinate names of the Monge family, `(x, u, p, q, z)`.
pub const MONGE_COORDS: [&str; 5] = ["x", "u", "p", "q", "z"];

/// Coordinate names of the nilpotent model.
pub const FLAT_COORDS: [&str; 5] = ["x1", "x2", "x3", "x4", "x5"];

/// Free nilpotent model: `X₁ = ∂₁`, `X₂ = ∂₂ + x₁∂₃ + (x₁²/2)∂₄ + x₁x₂∂₅`.
pub fn flat() -> Distribution {
    Distribution::parse(&FLAT_COORDS, &["1", "0", "0", "0", "0"], &["0", "1", "x1", "x1^2/2", "x1*x2"])
        .expect("flat model parses")
}

/// Monge distribution `X₁ = ∂_q`, `X₂ = ∂_x + p∂_u + q∂_p + f(q)∂_z` with
/// `f(q) = q^power`.
pub fn monge(power: i32) -> Distribution {
    monge_with(&format!("q^{power}"))
}

/// Monge distribution with an arbitrary `f(q)` source string.
pub fn monge_with(f: &str) -> Distribution {
    Distribution::parse(&MONGE_COORDS, &["0", "0", "0", "1", "0"], &["1", "p", "q", "0", f])
        .expect("Monge model parses")
}

/// Replaces `(X₁, X₂)` by `(a X₁ + b X₂, c X₁ + d X₂)` with constant
/// coefficients.
pub fn change_basis(d: &Distribution, m: [[Rational; 2]; 2]) -> Distribution {
    let e = |r: Rational| Expr::constant(r);
    change_basis_expr(d, [[e(m[0][0]), e(m[0][1])], [e(m[1][0]), e(m[1][1])]])
}

/// Same as [`change_basis`] with coefficient functions of the base point.
pub fn change_basis_expr(d: &Distribution, m: [[Expr; 2]; 2]) -> Distribution {
    let comb = |a: &Expr, b: &Expr| -> VectorField {
        let comps = (0..5)
            .map(|r| a.mul(d.x1().component(r)).add(&b.mul(d.x2().component(r))))
            .collect();
        VectorField::new(comps).expect("5 components")
    };
    Distribution::new(comb(&m[0][0], &m[0][1]), comb(&m[1][0], &m[1][1])).expect("base fields")
}
