//! Power-law boundary nonlinearity |x|^(a-1) x: pointwise evaluation,
//! closed-form inverse, Jacobian, and Galerkin assembly of the nonlinear term
//! and its linearization.

use crate::rt::RtSpace;
use nalgebra::{DMatrix, DVector, Matrix3, Point3, Vector3};

#[derive(Debug, thiserror::Error)]
pub enum PowerLawError {
    #[error("alpha must lie in (0, 1], got {0}")]
    AlphaOutOfRange(f64),
    #[error("reg_eps must lie in [0, 1e-6), got {0}")]
    RegEpsOutOfRange(f64),
    #[error("Jacobian singular at x = 0 with reg_eps = 0")]
    SingularJacobian,
}

/// The impedance law a(x) = |x|^(alpha-1) x with optional Jacobian
/// regularization.  The regularization is applied only inside `jacobian`
/// (the Newton matrix), never in residuals, so Newton keeps the exact root.
#[derive(Debug, Clone, Copy)]
pub struct PowerLaw {
    pub alpha: f64,
    pub reg_eps: f64,
}

impl PowerLaw {
    pub fn new(alpha: f64, reg_eps: f64) -> Result<Self, PowerLawError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(PowerLawError::AlphaOutOfRange(alpha));
        }
        if !(0.0..1e-6).contains(&reg_eps) {
            return Err(PowerLawError::RegEpsOutOfRange(reg_eps));
        }
        Ok(PowerLaw { alpha, reg_eps })
    }

    /// a(x) = |x|^(alpha-1) x, extended by a(0) = 0.
    pub fn eval(&self, x: &Vector3<f64>) -> Vector3<f64> {
        let r = x.norm();
        if r == 0.0 {
            return Vector3::zeros();
        }
        r.powf(self.alpha - 1.0) * x
    }

    /// Closed-form inverse a^{-1}(y) = |y|^((1-alpha)/alpha) y.
    pub fn inverse(&self, y: &Vector3<f64>) -> Vector3<f64> {
        let r = y.norm();
        if r == 0.0 {
            return Vector3::zeros();
        }
        r.powf((1.0 - self.alpha) / self.alpha) * y
    }

    /// Jacobian Da(x) = (alpha-1)|x|^(alpha-3) x x^T + |x|^(alpha-1) I.
    /// With reg_eps > 0, |x| is replaced by sqrt(|x|^2 + reg_eps^2) in both
    /// factors.
    pub fn jacobian(&self, x: &Vector3<f64>) -> Result<Matrix3<f64>, PowerLawError> {
        let r2 = x.norm_squared() + self.reg_eps * self.reg_eps;
        if r2 == 0.0 {
            return Err(PowerLawError::SingularJacobian);
        }
        let r = r2.sqrt();
        let rank1 = (self.alpha - 1.0) * r.powf(self.alpha - 3.0);
        let iso = r.powf(self.alpha - 1.0);
        Ok(rank1 * x * x.transpose() + iso * Matrix3::identity())
    }

    /// Galerkin residual r_i = int_G phi_i . a(u_h + g) with g the incident
    /// tangential trace evaluated at quadrature points.
    pub fn assemble_residual(
        &self,
        space: &RtSpace,
        coeffs: &DVector<f64>,
        incident_trace: impl Fn(&Point3<f64>, &Vector3<f64>) -> Vector3<f64>,
    ) -> DVector<f64> {
        self.assemble_residual_with_rule(space, coeffs, incident_trace, space.rule())
    }

    pub fn assemble_residual_with_rule(
        &self,
        space: &RtSpace,
        coeffs: &DVector<f64>,
        incident_trace: impl Fn(&Point3<f64>, &Vector3<f64>) -> Vector3<f64>,
        rule: &crate::quad::TriRule,
    ) -> DVector<f64> {
        let mesh = &space.mesh;
        let mut r = DVector::zeros(space.dim());
        for t in 0..mesh.triangles.len() {
            let area = mesh.areas[t];
            let nu = mesh.normals[t];
            for (&(u, v), &w) in rule.points.iter().zip(&rule.weights) {
                let x = mesh.chart(t, u, v);
                let state = space.field_at(coeffs, t, &x) + incident_trace(&x, &nu);
                let a = self.eval(&state);
                for b in space.eval_on_triangle(t, &x) {
                    r[b.dof] += area * w * b.value.dot(&a);
                }
            }
        }
        r
    }

    /// Galerkin linearization J_ij = int_G phi_i . Da(u_h + g) phi_j
    /// (symmetric, positive semi-definite).
    pub fn assemble_jacobian(
        &self,
        space: &RtSpace,
        coeffs: &DVector<f64>,
        incident_trace: impl Fn(&Point3<f64>, &Vector3<f64>) -> Vector3<f64>,
    ) -> DMatrix<f64> {
        let mesh = &space.mesh;
        let rule = space.rule();
        let n = space.dim();
        let mut j = DMatrix::zeros(n, n);
        for t in 0..mesh.triangles.len() {
            let area = mesh.areas[t];
            let nu = mesh.normals[t];
            for (&(u, v), &w) in rule.points.iter().zip(&rule.weights) {
                let x = mesh.chart(t, u, v);
                let state = space.field_at(coeffs, t, &x) + incident_trace(&x, &nu);
                let da = self
                    .jacobian(&state)
                    .expect("reg_eps > 0 keeps the Jacobian finite");
                let vals = space.eval_on_triangle(t, &x);
                for bi in &vals {
                    let da_bi = da * bi.value;
                    for bj in &vals {
                        j[(bi.dof, bj.dof)] += area * w * da_bi.dot(&bj.value);
                    }
                }
            }
        }
        j
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::make_cube_mesh;
    use crate::quad::tri_rule_tensor;
    use rand::{Rng, SeedableRng};
    use std::sync::Arc;

    fn rng() -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(0x9e3779b97f4a7c15)
    }

    fn rand_vec(r: &mut impl Rng, scale: f64) -> Vector3<f64> {
        Vector3::new(
            r.random_range(-scale..scale),
            r.random_range(-scale..scale),
            r.random_range(-scale..scale),
        )
    }

    #[test]
    fn alpha_one_is_identity_and_zero_maps_to_zero() {
        let pl = PowerLaw::new(1.0, 0.0).unwrap();
        let x = Vector3::new(0.3, -2.0, 5.0);
        assert_eq!(pl.eval(&x), x);
        let pl = PowerLaw::new(0.5, 0.0).unwrap();
        assert_eq!(pl.eval(&Vector3::zeros()), Vector3::zeros());
    }

    #[test]
    fn hand_value_alpha_half() {
        let pl = PowerLaw::new(0.5, 0.0).unwrap();
        let y = pl.eval(&Vector3::new(3.0, 4.0, 0.0));
        let want = Vector3::new(3.0, 4.0, 0.0) / 5.0f64.sqrt();
        assert!((y - want).norm() < 1e-14);
        assert!((y.norm() - 5.0f64.sqrt()).abs() < 1e-14); // |a(x)| = |x|^alpha
    }

    #[test]
    fn inverse_round_trip_wide_range() {
        let mut r = rng();
        for &alpha in &[0.1, 0.5, 0.9, 1.0] {
            let pl = PowerLaw::new(alpha, 0.0).unwrap();
            for _ in 0..20_000 {
                let exp = r.random_range(-6.0..6.0);
                let x = rand_vec(&mut r, 1.0).normalize() * 10f64.powf(exp);
                let back = pl.inverse(&pl.eval(&x));
                assert!(
                    (back - x).norm() <= 1e-12 * x.norm(),
                    "alpha {alpha}: |x| = {}",
                    x.norm()
                );
            }
        }
        let pl = PowerLaw::new(0.5, 0.0).unwrap();
        let e1 = Vector3::new(1.0, 0.0, 0.0);
        assert!((pl.inverse(&e1) - e1).norm() < 1e-15); // unit vectors fixed
    }

    #[test]
    fn jacobian_identity_eigenvalues_and_finite_difference() {
        let pl = PowerLaw::new(1.0, 0.0).unwrap();
        let j = pl.jacobian(&Vector3::new(0.2, -0.4, 1.0)).unwrap();
        assert!((j - Matrix3::identity()).norm() < 1e-14);

        let pl = PowerLaw::new(0.5, 0.0).unwrap();
        let j = pl.jacobian(&Vector3::new(1.0, 0.0, 0.0)).unwrap();
        let mut eig: Vec<f64> = j.symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        assert!((eig[0] - 0.5).abs() < 1e-13);
        assert!((eig[1] - 1.0).abs() < 1e-13);
        assert!((eig[2] - 1.0).abs() < 1e-13);

        // finite differences
        let mut r = rng();
        for &alpha in &[0.3, 0.7, 1.0] {
            let pl = PowerLaw::new(alpha, 0.0).unwrap();
            for _ in 0..50 {
                let x = rand_vec(&mut r, 2.0) + Vector3::new(3.0, 0.0, 0.0);
                let j = pl.jacobian(&x).unwrap();
                let h = 1e-6;
                for dir in [Vector3::x(), Vector3::y(), Vector3::z()] {
                    let fd = (pl.eval(&(x + h * dir)) - pl.eval(&x)) / h;
                    assert!((fd - j * dir).norm() < 1e-5, "alpha {alpha}");
                }
            }
        }
        assert!(matches!(
            PowerLaw::new(0.5, 0.0).unwrap().jacobian(&Vector3::zeros()),
            Err(PowerLawError::SingularJacobian)
        ));
    }

    #[test]
    fn strong_monotonicity_and_hoelder_exact() {
        let mut r = rng();
        for &alpha in &[0.1, 0.5, 0.9, 1.0] {
            let pl = PowerLaw::new(alpha, 0.0).unwrap();
            for _ in 0..20_000 {
                let u = rand_vec(&mut r, 3.0);
                let v = rand_vec(&mut r, 3.0);
                let du = u - v;
                let da = pl.eval(&u) - pl.eval(&v);
                let lhs = du.dot(&da);
                let bound = alpha * (u.norm() + v.norm()).powf(alpha - 1.0) * du.norm_squared();
                assert!(lhs >= bound - 1e-13 * bound.abs().max(1.0), "alpha {alpha}");
                assert!(da.norm() <= 2.0 * du.norm().powf(alpha) + 1e-13, "alpha {alpha}");
                // positivity identity x . a(x) = |x|^(1+alpha)
                let coerc = u.dot(&pl.eval(&u));
                assert!((coerc - u.norm().powf(1.0 + alpha)).abs() < 1e-13 * coerc.max(1.0));
            }
        }
    }

    #[test]
    fn residual_reduces_to_mass_action_for_alpha_one() {
        let sp = RtSpace::new(Arc::new(
            make_cube_mesh(Point3::origin(), 1.0, 1).unwrap(),
        ));
        let pl = PowerLaw::new(1.0, 0.0).unwrap();
        let c = DVector::from_fn(sp.dim(), |i, _| ((i * 13 % 7) as f64) / 3.5 - 1.0);
        let r = pl.assemble_residual(&sp, &c, |_, _| Vector3::zeros());
        let want = sp.assemble_mass() * &c;
        assert!((&r - &want).amax() < 1e-12);

        let zero = pl.assemble_residual(&sp, &DVector::zeros(sp.dim()), |_, _| Vector3::zeros());
        assert!(zero.amax() == 0.0);
    }

    #[test]
    fn residual_matches_refined_quadrature_oracle() {
        let sp = RtSpace::new(Arc::new(
            make_cube_mesh(Point3::origin(), 1.0, 1).unwrap(),
        ));
        let pl = PowerLaw::new(0.5, 0.0).unwrap();
        let c = DVector::from_fn(sp.dim(), |i, _| ((i * 29 % 11) as f64) / 5.5 - 1.0);
        // a constant incident trace keeps the composed state away from the
        // |.|^(alpha-1) kink, so quadrature converges fast
        let w_inc = Vector3::new(4.0, -3.0, 5.0);
        let trace = |_: &Point3<f64>, nu: &Vector3<f64>| w_inc.cross(nu);

        // independent refined oracle: hand-rolled loop, 16x16 tensor points
        let rule = tri_rule_tensor(16);
        let mut want = DVector::zeros(sp.dim());
        for t in 0..sp.mesh.triangles.len() {
            let area = sp.mesh.areas[t];
            let nu = sp.mesh.normals[t];
            for (&(u, v), &w) in rule.points.iter().zip(&rule.weights) {
                let x = sp.mesh.chart(t, u, v);
                let a = pl.eval(&(sp.field_at(&c, t, &x) + w_inc.cross(&nu)));
                for b in sp.eval_on_triangle(t, &x) {
                    want[b.dof] += area * w * b.value.dot(&a);
                }
            }
        }
        let scale = want.amax();

        let refined = pl.assemble_residual_with_rule(&sp, &c, trace, &tri_rule_tensor(10));
        let diff = (&refined - &want).amax();
        assert!(diff < 1e-8 * scale, "oracle mismatch {diff:.3e}");

        // default degree-5 rule: documented accuracy cap of the fixed rule
        let standard = pl.assemble_residual(&sp, &c, trace);
        let diff = (&standard - &want).amax();
        assert!(diff < 2e-3 * scale, "default rule off by {diff:.3e}");
    }

    #[test]
    fn jacobian_assembly_matches_mass_directional_fd_and_is_psd() {
        let sp = RtSpace::new(Arc::new(
            make_cube_mesh(Point3::origin(), 1.0, 1).unwrap(),
        ));
        // alpha = 1: J = M exactly
        let pl1 = PowerLaw::new(1.0, 0.0).unwrap();
        let c = DVector::from_fn(sp.dim(), |i, _| ((i * 7 % 5) as f64) / 2.5 - 1.0);
        let j = pl1.assemble_jacobian(&sp, &c, |_, _| Vector3::zeros());
        assert!((&j - sp.assemble_mass()).amax() < 1e-12);

        // alpha < 1: directional finite difference of the residual
        let pl = PowerLaw::new(0.6, 1e-10).unwrap();
        let j = pl.assemble_jacobian(&sp, &c, |_, _| Vector3::zeros());
        let delta = DVector::from_fn(sp.dim(), |i, _| ((i * 17 % 13) as f64) / 6.5 - 1.0);
        let h = 1e-6;
        let r0 = pl.assemble_residual(&sp, &c, |_, _| Vector3::zeros());
        let r1 = pl.assemble_residual(&sp, &(&c + h * &delta), |_, _| Vector3::zeros());
        let fd = (r1 - r0) / h;
        let jd = &j * &delta;
        assert!((&fd - &jd).amax() < 1e-4 * jd.amax().max(1.0));

        // positive semi-definite
        let asym = (&j - j.transpose()).amax();
        assert!(asym < 1e-12);
        let eig = j.symmetric_eigen();
        assert!(eig.eigenvalues.min() > -1e-10);
    }

    #[test]
    fn norm_identity_for_composed_field() {
        // ||a(u)||_{(1+a)/a} = ||u||^a_{1+a} holds at quadrature level
        let sp = RtSpace::new(Arc::new(
            make_cube_mesh(Point3::origin(), 1.0, 2).unwrap(),
        ));
        let alpha = 0.5;
        let pl = PowerLaw::new(alpha, 0.0).unwrap();
        let c = DVector::from_fn(sp.dim(), |i, _| ((i * 41 % 17) as f64) / 8.5 - 1.0);
        // quadrature of |a(u_h)|^((1+alpha)/alpha) and |u_h|^(1+alpha)
        let p_dual = (1.0 + alpha) / alpha;
        let mut lhs_int = 0.0;
        for t in 0..sp.mesh.triangles.len() {
            let area = sp.mesh.areas[t];
            for (&(u, v), &w) in sp.rule().points.iter().zip(&sp.rule().weights) {
                let x = sp.mesh.chart(t, u, v);
                lhs_int += area * w * pl.eval(&sp.field_at(&c, t, &x)).norm().powf(p_dual);
            }
        }
        let lhs = lhs_int.powf(1.0 / p_dual);
        let rhs = sp.lp_norm(&c, 1.0 + alpha).powf(alpha);
        assert!((lhs - rhs).abs() < 1e-8 * rhs.max(1.0));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(PowerLaw::new(1.5, 0.0).is_err());
        assert!(PowerLaw::new(0.0, 0.0).is_err());
        assert!(PowerLaw::new(0.5, 1e-5).is_err());
    }
}
