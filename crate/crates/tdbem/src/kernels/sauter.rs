//! Sauter-Schwab relative-coordinate transforms for singular panel pairs.
//!
//! Each rule rewrites the 4D integral over a pair of reference triangles
//! T = {0 <= v <= u <= 1} as a sum of smooth tensor-Gauss integrals over
//! [0,1]^4.  Points come out as ((xu, xv), (yu, yv), weight) with the weight
//! containing the subdomain Jacobians; physical integration multiplies by
//! 2|Tx| * 2|Ty| and composes with the charts.
//!
//! Shared-entity alignment matters: for the common-edge rule both charts must
//! traverse the shared edge as vertex 1 -> vertex 2 in the same direction;
//! for the common-vertex rule the shared vertex must be vertex 1 of both.

use crate::quad::gauss_legendre_01;

/// Quadrature points on the pair of reference triangles.
#[derive(Debug, Clone)]
pub struct PairRule {
    pub points: Vec<PairPoint>,
}

#[derive(Debug, Clone, Copy)]
pub struct PairPoint {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub weight: f64,
}

/// Relative position of two panels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    Coincident,
    CommonEdge,
    CommonVertex,
}

/// Build the rule for a singular pair with `order` Gauss points per dimension.
pub fn pair_rule(kind: PairKind, order: usize) -> PairRule {
    let (nodes, weights) = gauss_legendre_01(order);
    let mut points = Vec::new();
    for (i, &xi) in nodes.iter().enumerate() {
        for (j, &e1) in nodes.iter().enumerate() {
            for (k, &e2) in nodes.iter().enumerate() {
                for (l, &e3) in nodes.iter().enumerate() {
                    let w4 = weights[i] * weights[j] * weights[k] * weights[l];
                    let terms: &[((f64, f64), (f64, f64), f64)] = match kind {
                        PairKind::Coincident => &coincident_terms(xi, e1, e2, e3),
                        PairKind::CommonEdge => &common_edge_terms(xi, e1, e2, e3),
                        PairKind::CommonVertex => &common_vertex_terms(xi, e1, e2, e3),
                    };
                    for &(x, y, jac) in terms {
                        points.push(PairPoint {
                            x,
                            y,
                            weight: w4 * jac,
                        });
                    }
                }
            }
        }
    }
    PairRule { points }
}

fn coincident_terms(xi: f64, e1: f64, e2: f64, e3: f64) -> [((f64, f64), (f64, f64), f64); 6] {
    let j = xi.powi(3) * e1 * e1 * e2;
    [
        (
            (xi, xi * (1.0 - e1 + e1 * e2)),
            (xi * (1.0 - e1 * e2 * e3), xi * (1.0 - e1)),
            j,
        ),
        (
            (xi * (1.0 - e1 * e2 * e3), xi * (1.0 - e1)),
            (xi, xi * (1.0 - e1 + e1 * e2)),
            j,
        ),
        (
            (xi, xi * e1 * (1.0 - e2 + e2 * e3)),
            (xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)),
            j,
        ),
        (
            (xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)),
            (xi, xi * e1 * (1.0 - e2 + e2 * e3)),
            j,
        ),
        (
            (xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3)),
            (xi, xi * e1 * (1.0 - e2)),
            j,
        ),
        (
            (xi, xi * e1 * (1.0 - e2)),
            (xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3)),
            j,
        ),
    ]
}

fn common_edge_terms(xi: f64, e1: f64, e2: f64, e3: f64) -> [((f64, f64), (f64, f64), f64); 5] {
    let j1 = xi.powi(3) * e1 * e1;
    let j = xi.powi(3) * e1 * e1 * e2;
    [
        (
            (xi, xi * e1 * e3),
            (xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)),
            j1,
        ),
        (
            (xi, xi * e1),
            (xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3)),
            j,
        ),
        (
            (xi * (1.0 - e1 * e2), xi * e1 * (1.0 - e2)),
            (xi, xi * e1 * e2 * e3),
            j,
        ),
        (
            (xi * (1.0 - e1 * e2 * e3), xi * e1 * e2 * (1.0 - e3)),
            (xi, xi * e1),
            j,
        ),
        (
            (xi * (1.0 - e1 * e2 * e3), xi * e1 * (1.0 - e2 * e3)),
            (xi, xi * e1 * e2),
            j,
        ),
    ]
}

fn common_vertex_terms(xi: f64, e1: f64, e2: f64, e3: f64) -> [((f64, f64), (f64, f64), f64); 2] {
    let j = xi.powi(3) * e2;
    [
        ((xi, xi * e1), (xi * e2, xi * e2 * e3), j),
        ((xi * e2, xi * e2 * e3), (xi, xi * e1), j),
    ]
}
