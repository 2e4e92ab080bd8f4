//! Lowest-order Raviart-Thomas (edge) elements on the surface: basis
//! evaluation, Galerkin pairings, L^p norms, tangential-trace projection.

use crate::mesh::SurfaceMesh;
use crate::quad::{tri_rule_deg5, TriRule};
use nalgebra::{DMatrix, DVector, Point3, Vector3};
use std::sync::Arc;

/// One degree of freedom per mesh edge.  The lower-indexed adjacent triangle
/// carries sign +1, so the basis flux crosses the edge out of it.
#[derive(Debug, Clone, Copy)]
pub struct RtDof {
    pub edge: usize,
    pub tris: [usize; 2],
    pub signs: [f64; 2],
}

/// Lowest-order Raviart-Thomas space on a closed mesh; DOF k lives on edge k.
#[derive(Debug, Clone)]
pub struct RtSpace {
    pub mesh: Arc<SurfaceMesh>,
    pub dofs: Vec<RtDof>,
    rule: TriRule,
}

/// Value and surface divergence of one local basis function.
#[derive(Debug, Clone, Copy)]
pub struct RtValue {
    pub dof: usize,
    pub value: Vector3<f64>,
    pub div: f64,
}

impl RtSpace {
    pub fn new(mesh: Arc<SurfaceMesh>) -> Self {
        let dofs = mesh
            .edges
            .iter()
            .enumerate()
            .map(|(e, edge)| RtDof {
                edge: e,
                tris: edge.tris,
                signs: [1.0, -1.0],
            })
            .collect();
        RtSpace {
            mesh,
            dofs,
            rule: tri_rule_deg5(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dofs.len()
    }

    /// Default quadrature rule used for mass/pairing/nonlinear terms.
    pub fn rule(&self) -> &TriRule {
        &self.rule
    }

    /// Sign of the basis function of `edge` on triangle `tri` (0 if not adjacent).
    pub fn sign_on(&self, edge: usize, tri: usize) -> f64 {
        let dof = &self.dofs[edge];
        if dof.tris[0] == tri {
            dof.signs[0]
        } else if dof.tris[1] == tri {
            dof.signs[1]
        } else {
            0.0
        }
    }

    /// Evaluate the three basis functions supported on triangle `t` at the
    /// physical point `x` (which must lie in the triangle plane).
    pub fn eval_on_triangle(&self, t: usize, x: &Point3<f64>) -> [RtValue; 3] {
        let tri = self.mesh.triangles[t];
        let area = self.mesh.areas[t];
        let mut out = [RtValue {
            dof: 0,
            value: Vector3::zeros(),
            div: 0.0,
        }; 3];
        for k in 0..3 {
            let e = self.mesh.tri_edges[t][k];
            let opp = self.mesh.vertices[tri[k]];
            let len = self.mesh.edge_length(e);
            let sign = self.sign_on(e, t);
            let factor = sign * len / (2.0 * area);
            out[k] = RtValue {
                dof: e,
                value: factor * (x - opp),
                div: sign * len / area,
            };
        }
        out
    }

    /// Evaluate the basis at reference coordinates (u, v) of triangle `t`.
    pub fn eval_rt0(&self, t: usize, u: f64, v: f64) -> [RtValue; 3] {
        assert!(
            (0.0..=1.0).contains(&u) && v >= 0.0 && v <= u,
            "reference point ({u}, {v}) outside triangle"
        );
        let x = self.mesh.chart(t, u, v);
        self.eval_on_triangle(t, &x)
    }

    /// Evaluate the discrete field sum_k c_k phi_k at a physical point of
    /// triangle `t`.
    pub fn field_at(&self, coeffs: &DVector<f64>, t: usize, x: &Point3<f64>) -> Vector3<f64> {
        let mut u = Vector3::zeros();
        for b in self.eval_on_triangle(t, x) {
            u += coeffs[b.dof] * b.value;
        }
        u
    }

    /// Antisymmetric pairing matrix P_ij = int_G (phi_i x nu) . phi_j.
    pub fn assemble_pairing(&self) -> DMatrix<f64> {
        self.assemble_local(|nu, bi, bj| (bi.cross(&nu)).dot(&bj))
    }

    /// Mass matrix M_ij = int_G phi_i . phi_j (symmetric positive definite).
    pub fn assemble_mass(&self) -> DMatrix<f64> {
        self.assemble_local(|_nu, bi, bj| bi.dot(&bj))
    }

    fn assemble_local(
        &self,
        term: impl Fn(Vector3<f64>, Vector3<f64>, Vector3<f64>) -> f64,
    ) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for t in 0..self.mesh.triangles.len() {
            let area = self.mesh.areas[t];
            let nu = self.mesh.normals[t];
            for (&(u, v), &w) in self.rule.points.iter().zip(&self.rule.weights) {
                let x = self.mesh.chart(t, u, v);
                let vals = self.eval_on_triangle(t, &x);
                for bi in &vals {
                    for bj in &vals {
                        m[(bi.dof, bj.dof)] += area * w * term(nu, bi.value, bj.value);
                    }
                }
            }
        }
        m
    }

    /// L^2 projection of the tangential trace of a volume field onto the space:
    /// solves M c = r with r_i = int_G (field x nu) . phi_i.
    pub fn project_trace(
        &self,
        field: impl Fn(&Point3<f64>) -> Vector3<f64>,
    ) -> Result<DVector<f64>, ProjectionError> {
        let rhs = self.trace_functional(field);
        let mass = self.assemble_mass();
        let chol = mass.cholesky().ok_or(ProjectionError::SingularMass)?;
        Ok(chol.solve(&rhs))
    }

    /// The load vector r_i = int_G (field x nu) . phi_i.
    pub fn trace_functional(&self, field: impl Fn(&Point3<f64>) -> Vector3<f64>) -> DVector<f64> {
        let mut rhs = DVector::zeros(self.dim());
        for t in 0..self.mesh.triangles.len() {
            let area = self.mesh.areas[t];
            let nu = self.mesh.normals[t];
            for (&(u, v), &w) in self.rule.points.iter().zip(&self.rule.weights) {
                let x = self.mesh.chart(t, u, v);
                let g = field(&x).cross(&nu);
                for b in self.eval_on_triangle(t, &x) {
                    rhs[b.dof] += area * w * g.dot(&b.value);
                }
            }
        }
        rhs
    }

    /// L^p(Gamma) norm of the discrete field, computed with the fixed
    /// triangle rule (accuracy capped by that rule for non-even p).
    pub fn lp_norm(&self, coeffs: &DVector<f64>, p: f64) -> f64 {
        assert!(p >= 1.0, "lp_norm requires p >= 1");
        let mut acc = 0.0;
        for t in 0..self.mesh.triangles.len() {
            let area = self.mesh.areas[t];
            for (&(u, v), &w) in self.rule.points.iter().zip(&self.rule.weights) {
                let x = self.mesh.chart(t, u, v);
                acc += area * w * self.field_at(coeffs, t, &x).norm().powf(p);
            }
        }
        acc.powf(1.0 / p)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProjectionError {
    #[error("mass matrix is singular (broken mesh)")]
    SingularMass,
}
