//! Time-harmonic Maxwell layer potentials at complex frequencies: Galerkin
//! assembly of the single/double layer boundary operators, the impedance
//! Calderon block, and off-surface potential evaluation.

pub mod sauter;

use crate::quad::{tri_rule_deg5, TriRule};
use crate::rt::{RtSpace, RtValue};
use nalgebra::{DMatrix, DVector, Point3, Vector3};
use num_complex::Complex;
use rayon::prelude::*;
use sauter::{pair_rule, PairKind, PairRule};

type C = Complex<f64>;

#[derive(Debug, thiserror::Error)]
pub enum KernelError {
    #[error("complex frequency must have Re s > 0, got {0}")]
    NonPositiveRealPart(C),
    #[error("shift must be nonnegative, got {0}")]
    NegativeShift(f64),
    #[error(
        "evaluation point at distance {distance:.3e} from the surface is closer than one panel diameter {diameter:.3e}"
    )]
    PointTooClose { distance: f64, diameter: f64 },
}

/// A Laplace-domain frequency, strictly in the right half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexFrequency(C);

impl ComplexFrequency {
    pub fn new(s: C) -> Result<Self, KernelError> {
        if s.re <= 0.0 {
            return Err(KernelError::NonPositiveRealPart(s));
        }
        Ok(ComplexFrequency(s))
    }

    pub fn get(&self) -> C {
        self.0
    }
}

/// Fundamental solution G(s, r) = e^{-s r} / (4 pi r).
pub fn greens(s: C, r: f64) -> C {
    assert!(r > 0.0, "greens kernel evaluated at r = {r}");
    (-s * r).exp() / (4.0 * std::f64::consts::PI * r)
}

/// Scalar factor g with grad_x G(s, x - y) = g * (x - y).
fn grad_greens_factor(s: C, r: f64) -> C {
    -(s + 1.0 / r) * greens(s, r) / r
}

/// Quadrature controls for operator assembly.
#[derive(Debug, Clone)]
pub struct AssemblyOptions {
    /// Gauss points per dimension in the Sauter-Schwab singular rules.
    pub ss_order: usize,
    /// Subdivide both panels once when centroid distance < near_factor * diameter.
    pub near_factor: f64,
    /// Tensor order for regular pairs; None selects the 7-point degree-5 rule.
    pub regular_tensor_order: Option<usize>,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        AssemblyOptions {
            ss_order: 4,
            near_factor: 1.0,
            regular_tensor_order: None,
        }
    }
}

impl AssemblyOptions {
    fn regular_rule(&self) -> TriRule {
        match self.regular_tensor_order {
            Some(n) => crate::quad::tri_rule_tensor(n),
            None => tri_rule_deg5(),
        }
    }
}

/// Galerkin matrices of the single layer V(s) and double layer K(s) tested
/// with the antisymmetric pairing:
///   V_ij = -s (G phi_i, phi_j) - s^{-1} (G div phi_i, div phi_j)
///   K_ij = (phi_i(x), grad_x G(s, x-y) x phi_j(y))
pub struct OperatorPair {
    pub v: DMatrix<C>,
    pub k: DMatrix<C>,
}

struct TriCache {
    points: Vec<Point3<f64>>,
    /// quadrature weight already scaled by the triangle area
    weights: Vec<f64>,
    basis: Vec<[RtValue; 3]>,
}

fn build_tri_cache(space: &RtSpace, rule: &TriRule) -> Vec<TriCache> {
    let mesh = &space.mesh;
    (0..mesh.triangles.len())
        .map(|t| {
            let area = mesh.areas[t];
            let mut points = Vec::with_capacity(rule.points.len());
            let mut weights = Vec::with_capacity(rule.points.len());
            let mut basis = Vec::with_capacity(rule.points.len());
            for (&(u, v), &w) in rule.points.iter().zip(&rule.weights) {
                let x = mesh.chart(t, u, v);
                basis.push(space.eval_on_triangle(t, &x));
                points.push(x);
                weights.push(w * area);
            }
            TriCache {
                points,
                weights,
                basis,
            }
        })
        .collect()
}

/// Assemble V(s) and K(s) in one pass (the kernel evaluations are shared).
///
/// Both operators are symmetric, so every singular (touching) pair is
/// integrated once per unordered pair and scattered to (i, j) and (j, i);
/// regular tensor rules are swap-symmetric, leaving the assembled matrices
/// symmetric to roundoff.
pub fn assemble_operators(
    space: &RtSpace,
    s: C,
    opts: &AssemblyOptions,
) -> Result<OperatorPair, KernelError> {
    if s.re <= 0.0 {
        return Err(KernelError::NonPositiveRealPart(s));
    }
    let mesh = space.mesh.clone();
    let n_tri = mesh.triangles.len();
    let dim = space.dim();
    let rule = opts.regular_rule();
    let cache = build_tri_cache(space, &rule);
    let rules = SingularRules {
        coincident: pair_rule(PairKind::Coincident, opts.ss_order),
        edge: pair_rule(PairKind::CommonEdge, opts.ss_order),
        vertex: pair_rule(PairKind::CommonVertex, opts.ss_order),
    };
    let diameters: Vec<f64> = (0..n_tri).map(|t| mesh.tri_diameter(t)).collect();
    let inv_s = 1.0 / s;

    let mut v = DMatrix::<C>::zeros(dim, dim);
    let mut k = DMatrix::<C>::zeros(dim, dim);

    // touching pairs, once per unordered pair
    let mut singular_pairs: Vec<(usize, usize, PairKind, Vec<usize>)> = Vec::new();
    for tx in 0..n_tri {
        singular_pairs.push((tx, tx, PairKind::Coincident, Vec::new()));
        for ty in tx + 1..n_tri {
            if let Classified::Singular(kind, shared) =
                classify_pair(&mesh.triangles[tx], &mesh.triangles[ty])
            {
                singular_pairs.push((tx, ty, kind, shared));
            }
        }
    }
    let singular_blocks: Vec<([[C; 3]; 3], [[C; 3]; 3])> = singular_pairs
        .par_iter()
        .map(|(tx, ty, kind, shared)| {
            let mut v_loc = [[C::new(0.0, 0.0); 3]; 3];
            let mut k_loc = [[C::new(0.0, 0.0); 3]; 3];
            singular_pair(
                space, s, inv_s, *tx, *ty, *kind, shared, &rules, &mut v_loc, &mut k_loc,
            );
            (v_loc, k_loc)
        })
        .collect();
    for ((tx, ty, _, _), (v_loc, k_loc)) in singular_pairs.iter().zip(&singular_blocks) {
        for a in 0..3 {
            let i = mesh.tri_edges[*tx][a];
            for b in 0..3 {
                let j = mesh.tri_edges[*ty][b];
                v[(i, j)] += v_loc[a][b];
                k[(i, j)] += k_loc[a][b];
                if tx != ty {
                    v[(j, i)] += v_loc[a][b];
                    k[(j, i)] += k_loc[a][b];
                }
            }
        }
    }

    // non-touching pairs: one row-block (3 x dim) per source triangle
    let blocks: Vec<(DMatrix<C>, DMatrix<C>)> = (0..n_tri)
        .into_par_iter()
        .map(|tx| {
            let mut v_rows = DMatrix::<C>::zeros(3, dim);
            let mut k_rows = DMatrix::<C>::zeros(3, dim);
            for ty in 0..n_tri {
                if !matches!(
                    classify_pair(&mesh.triangles[tx], &mesh.triangles[ty]),
                    Classified::Distant
                ) {
                    continue;
                }
                let mut v_loc = [[C::new(0.0, 0.0); 3]; 3];
                let mut k_loc = [[C::new(0.0, 0.0); 3]; 3];
                let near = (mesh.centroid(tx) - mesh.centroid(ty)).norm()
                    < opts.near_factor * diameters[tx].max(diameters[ty]);
                if near {
                    subdivided_pair(space, s, inv_s, tx, ty, &rule, &mut v_loc, &mut k_loc);
                } else {
                    regular_pair(s, inv_s, &cache[tx], &cache[ty], &mut v_loc, &mut k_loc);
                }
                for a in 0..3 {
                    for b in 0..3 {
                        let j = mesh.tri_edges[ty][b];
                        v_rows[(a, j)] += v_loc[a][b];
                        k_rows[(a, j)] += k_loc[a][b];
                    }
                }
            }
            (v_rows, k_rows)
        })
        .collect();

    for (tx, (v_rows, k_rows)) in blocks.into_iter().enumerate() {
        for a in 0..3 {
            let i = mesh.tri_edges[tx][a];
            for j in 0..dim {
                v[(i, j)] += v_rows[(a, j)];
                k[(i, j)] += k_rows[(a, j)];
            }
        }
    }
    Ok(OperatorPair { v, k })
}

struct SingularRules {
    coincident: PairRule,
    edge: PairRule,
    vertex: PairRule,
}

enum Classified {
    Singular(PairKind, Vec<usize>),
    Distant,
}

fn classify_pair(tx: &[usize; 3], ty: &[usize; 3]) -> Classified {
    if tx == ty {
        return Classified::Singular(PairKind::Coincident, Vec::new());
    }
    let shared: Vec<usize> = tx.iter().copied().filter(|i| ty.contains(i)).collect();
    match shared.len() {
        2 => Classified::Singular(PairKind::CommonEdge, shared),
        1 => Classified::Singular(PairKind::CommonVertex, shared),
        _ => Classified::Distant,
    }
}

/// Kernel contraction at one quadrature point pair.  V and K share the
/// Green's function evaluation; the basis is evaluated at physical points.
#[inline]
fn accumulate_point_pair(
    s: C,
    inv_s: C,
    x: &Point3<f64>,
    y: &Point3<f64>,
    bx: &[RtValue; 3],
    by: &[RtValue; 3],
    w: f64,
    v_loc: &mut [[C; 3]; 3],
    k_loc: &mut [[C; 3]; 3],
) {
    let d = x - y;
    let r = d.norm();
    let g = greens(s, r) * w;
    let gf = grad_greens_factor(s, r) * w;
    for (a, bi) in bx.iter().enumerate() {
        for (b, bj) in by.iter().enumerate() {
            let dot = bi.value.dot(&bj.value);
            v_loc[a][b] += g * (-s * dot) - g * inv_s * (bi.div * bj.div);
            // phi_i . (grad G x phi_j) = grad G . (phi_j x phi_i)
            let triple = d.dot(&bj.value.cross(&bi.value));
            k_loc[a][b] += gf * triple;
        }
    }
}

fn regular_pair(
    s: C,
    inv_s: C,
    cx: &TriCache,
    cy: &TriCache,
    v_loc: &mut [[C; 3]; 3],
    k_loc: &mut [[C; 3]; 3],
) {
    for (px, (&wx, bx)) in cx.points.iter().zip(cx.weights.iter().zip(&cx.basis)) {
        for (py, (&wy, by)) in cy.points.iter().zip(cy.weights.iter().zip(&cy.basis)) {
            accumulate_point_pair(s, inv_s, px, py, bx, by, wx * wy, v_loc, k_loc);
        }
    }
}

fn subdivided_pair(
    space: &RtSpace,
    s: C,
    inv_s: C,
    tx: usize,
    ty: usize,
    rule: &TriRule,
    v_loc: &mut [[C; 3]; 3],
    k_loc: &mut [[C; 3]; 3],
) {
    let mesh = &space.mesh;
    let children = |t: usize| -> [[Point3<f64>; 3]; 4] {
        let [a, b, c] = mesh.tri_vertices(t);
        let ab = Point3::from((a.coords + b.coords) / 2.0);
        let bc = Point3::from((b.coords + c.coords) / 2.0);
        let ca = Point3::from((c.coords + a.coords) / 2.0);
        [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
    };
    let quarter_x = mesh.areas[tx] / 4.0;
    let quarter_y = mesh.areas[ty] / 4.0;
    for child_x in children(tx) {
        for child_y in children(ty) {
            for (&(ux, vx), &wx) in rule.points.iter().zip(&rule.weights) {
                let x = chart_of(&child_x, ux, vx);
                let bx = space.eval_on_triangle(tx, &x);
                for (&(uy, vy), &wy) in rule.points.iter().zip(&rule.weights) {
                    let y = chart_of(&child_y, uy, vy);
                    let by = space.eval_on_triangle(ty, &y);
                    let w = wx * quarter_x * wy * quarter_y;
                    accumulate_point_pair(s, inv_s, &x, &y, &bx, &by, w, v_loc, k_loc);
                }
            }
        }
    }
}

fn chart_of(verts: &[Point3<f64>; 3], u: f64, v: f64) -> Point3<f64> {
    verts[0] + u * (verts[1] - verts[0]) + v * (verts[2] - verts[1])
}

/// Vertex order for the Sauter-Schwab charts: shared entities first, in the
/// same global order on both panels.
fn aligned_vertices(
    mesh_tri: &[usize; 3],
    kind: PairKind,
    shared: &[usize],
) -> [usize; 3] {
    match kind {
        PairKind::Coincident => *mesh_tri,
        PairKind::CommonEdge => {
            let other = *mesh_tri.iter().find(|i| !shared.contains(i)).unwrap();
            [shared[0], shared[1], other]
        }
        PairKind::CommonVertex => {
            let rest: Vec<usize> = mesh_tri
                .iter()
                .copied()
                .filter(|i| *i != shared[0])
                .collect();
            [shared[0], rest[0], rest[1]]
        }
    }
}

fn singular_pair(
    space: &RtSpace,
    s: C,
    inv_s: C,
    tx: usize,
    ty: usize,
    kind: PairKind,
    shared: &[usize],
    rules: &SingularRules,
    v_loc: &mut [[C; 3]; 3],
    k_loc: &mut [[C; 3]; 3],
) {
    let mesh = &space.mesh;
    let rule = match kind {
        PairKind::Coincident => &rules.coincident,
        PairKind::CommonEdge => &rules.edge,
        PairKind::CommonVertex => &rules.vertex,
    };
    let vx = aligned_vertices(&mesh.triangles[tx], kind, shared).map(|i| mesh.vertices[i]);
    let vy = aligned_vertices(&mesh.triangles[ty], kind, shared).map(|i| mesh.vertices[i]);
    let scale = 4.0 * mesh.areas[tx] * mesh.areas[ty];
    for p in &rule.points {
        let x = chart_of(&vx, p.x.0, p.x.1);
        let y = chart_of(&vy, p.y.0, p.y.1);
        let bx = space.eval_on_triangle(tx, &x);
        let by = space.eval_on_triangle(ty, &y);
        accumulate_point_pair(s, inv_s, &x, &y, &bx, &by, scale * p.weight, v_loc, k_loc);
    }
}

/// Calderon data at one effective frequency (s + shift).
pub struct CalderonAssembly {
    pub s: C,
    pub shift: f64,
    pub v: DMatrix<C>,
    pub k: DMatrix<C>,
}

/// Assemble the blocks of the impedance Calderon operator at s + shift.
pub fn assemble_calderon(
    space: &RtSpace,
    s: C,
    shift: f64,
    opts: &AssemblyOptions,
) -> Result<CalderonAssembly, KernelError> {
    if s.re <= 0.0 {
        return Err(KernelError::NonPositiveRealPart(s));
    }
    if shift < 0.0 {
        return Err(KernelError::NegativeShift(shift));
    }
    let s_eff = s + shift;
    let ops = assemble_operators(space, s_eff, opts)?;
    Ok(CalderonAssembly {
        s: s_eff,
        shift,
        v: ops.v,
        k: ops.k,
    })
}

impl CalderonAssembly {
    /// Pure Calderon block [[-V, K], [-K, -V]] (no identity shift).
    pub fn c_matrix(&self) -> DMatrix<C> {
        let n = self.v.nrows();
        let mut m = DMatrix::<C>::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = -self.v[(i, j)];
                m[(i, j + n)] = self.k[(i, j)];
                m[(i + n, j)] = -self.k[(i, j)];
                m[(i + n, j + n)] = -self.v[(i, j)];
            }
        }
        m
    }

    /// Impedance block [[-V, K - P/2], [-K - P/2, -V]] with the identity
    /// realized through the antisymmetric pairing matrix P.
    pub fn cimp_matrix(&self, pairing: &DMatrix<f64>) -> DMatrix<C> {
        let n = self.v.nrows();
        let mut m = self.c_matrix();
        for i in 0..n {
            for j in 0..n {
                let half_p = C::new(0.5 * pairing[(i, j)], 0.0);
                m[(i, j + n)] -= half_p;
                m[(i + n, j)] -= half_p;
            }
        }
        m
    }

    /// Apply the impedance block to stacked coefficients without forming the
    /// 2n x 2n matrix.
    pub fn apply_cimp(
        &self,
        pairing: &DMatrix<f64>,
        phi: &DVector<C>,
        psi: &DVector<C>,
    ) -> (DVector<C>, DVector<C>) {
        let p_phi = pairing.map(|x| C::new(x, 0.0)) * phi;
        let p_psi = pairing.map(|x| C::new(x, 0.0)) * psi;
        let first = -(&self.v * phi) + &self.k * psi - p_psi * C::new(0.5, 0.0);
        let second = -(&self.k * phi) - &self.v * psi - p_phi * C::new(0.5, 0.0);
        (first, second)
    }
}

/// Off-surface evaluation of the electromagnetic potentials:
/// returns (E, H) = (-S(s) phi + D(s) psi, -D(s) phi - S(s) psi) at x.
pub fn eval_potentials(
    space: &RtSpace,
    s: C,
    phi: &DVector<C>,
    psi: &DVector<C>,
    x: &Point3<f64>,
) -> Result<(Vector3<C>, Vector3<C>), KernelError> {
    if s.re <= 0.0 {
        return Err(KernelError::NonPositiveRealPart(s));
    }
    reject_near_surface(space, x)?;
    let s_phi = single_layer_at(space, s, phi, x);
    let d_phi = double_layer_at(space, s, phi, x);
    let s_psi = single_layer_at(space, s, psi, x);
    let d_psi = double_layer_at(space, s, psi, x);
    Ok((-s_phi + d_psi, -d_phi - s_psi))
}

pub fn reject_near_surface(space: &RtSpace, x: &Point3<f64>) -> Result<(), KernelError> {
    let mesh = &space.mesh;
    for t in 0..mesh.triangles.len() {
        let dist = mesh.point_triangle_distance(x, t);
        let diam = mesh.tri_diameter(t);
        if dist < diam {
            return Err(KernelError::PointTooClose {
                distance: dist,
                diameter: diam,
            });
        }
    }
    Ok(())
}

/// S(s)c(x) = int_G [-s G u_h + s^{-1} grad_x G div u_h] dy for x off Gamma.
pub fn single_layer_at(space: &RtSpace, s: C, coeffs: &DVector<C>, x: &Point3<f64>) -> Vector3<C> {
    let mesh = &space.mesh;
    let rule = space.rule();
    let mut out = Vector3::from_element(C::new(0.0, 0.0));
    let inv_s = 1.0 / s;
    for t in 0..mesh.triangles.len() {
        let area = mesh.areas[t];
        for (&(u, v), &w) in rule.points.iter().zip(&rule.weights) {
            let y = mesh.chart(t, u, v);
            let (uh, div_uh) = complex_field_at(space, coeffs, t, &y);
            let d = x - y;
            let r = d.norm();
            let g = greens(s, r);
            let gf = grad_greens_factor(s, r);
            let ws = w * area;
            for a in 0..3 {
                out[a] += ws * (-s * g * uh[a] + inv_s * gf * d[a] * div_uh);
            }
        }
    }
    out
}

/// D(s)c(x) = int_G grad_x G x u_h dy for x off Gamma.
pub fn double_layer_at(space: &RtSpace, s: C, coeffs: &DVector<C>, x: &Point3<f64>) -> Vector3<C> {
    let mesh = &space.mesh;
    let rule = space.rule();
    let mut out = Vector3::from_element(C::new(0.0, 0.0));
    for t in 0..mesh.triangles.len() {
        let area = mesh.areas[t];
        for (&(u, v), &w) in rule.points.iter().zip(&rule.weights) {
            let y = mesh.chart(t, u, v);
            let (uh, _) = complex_field_at(space, coeffs, t, &y);
            let d = x - y;
            let gf = grad_greens_factor(s, d.norm()) * w * area;
            out[0] += gf * (d[1] * uh[2] - d[2] * uh[1]);
            out[1] += gf * (d[2] * uh[0] - d[0] * uh[2]);
            out[2] += gf * (d[0] * uh[1] - d[1] * uh[0]);
        }
    }
    out
}

fn complex_field_at(
    space: &RtSpace,
    coeffs: &DVector<C>,
    t: usize,
    y: &Point3<f64>,
) -> (Vector3<C>, C) {
    let mut val = Vector3::from_element(C::new(0.0, 0.0));
    let mut div = C::new(0.0, 0.0);
    for b in space.eval_on_triangle(t, y) {
        let c = coeffs[b.dof];
        for a in 0..3 {
            val[a] += c * b.value[a];
        }
        div += c * b.div;
    }
    (val, div)
}
