// temp: far-pair regular-rule accuracy vs brute force
use nalgebra::Point3;
use num_complex::Complex;
use std::sync::Arc;
use tdbem::kernels::*;
use tdbem::mesh::make_cube_mesh;
use tdbem::quad::tri_rule_tensor;
use tdbem::rt::RtSpace;

type C = Complex<f64>;

fn pair_contribution(sp: &RtSpace, s: C, tx: usize, ty: usize, rule: &tdbem::quad::TriRule) -> [[C; 2]; 9] {
    let mesh = &sp.mesh;
    let mut out = [[C::new(0.0, 0.0); 2]; 9];
    for (&(ux, vx), &wx) in rule.points.iter().zip(&rule.weights) {
        let x = mesh.chart(tx, ux, vx);
        let bx = sp.eval_on_triangle(tx, &x);
        for (&(uy, vy), &wy) in rule.points.iter().zip(&rule.weights) {
            let y = mesh.chart(ty, uy, vy);
            let by = sp.eval_on_triangle(ty, &y);
            let w = wx * mesh.areas[tx] * wy * mesh.areas[ty];
            let d = x - y;
            let r = d.norm();
            let g = (-s * r).exp() / (4.0 * std::f64::consts::PI * r);
            let gf = -(s + 1.0 / r) * g / r;
            for a in 0..3 {
                for b in 0..3 {
                    out[a * 3 + b][0] += w * (-s * g * bx[a].value.dot(&by[b].value) - g / s * bx[a].div * by[b].div);
                    out[a * 3 + b][1] += w * gf * d.dot(&by[b].value.cross(&bx[a].value));
                }
            }
        }
    }
    out
}

fn main() {
    for n in [1usize, 2] {
        let sp = RtSpace::new(Arc::new(make_cube_mesh(Point3::origin(), 1.0, n).unwrap()));
        let s = C::new(3.0, -2.0);
        let mesh = &sp.mesh;
        let ntri = mesh.triangles.len();
        let mut best = (0usize, 0usize, 0.0f64);
        for tx in 0..ntri {
            for ty in 0..ntri {
                let d = (mesh.centroid(tx) - mesh.centroid(ty)).norm();
                if d > best.2 { best = (tx, ty, d); }
            }
        }
        let (tx, ty, d) = best;
        let deg5 = tdbem::quad::tri_rule_deg5();
        let got = pair_contribution(&sp, s, tx, ty, &deg5);
        let want = pair_contribution(&sp, s, tx, ty, &tri_rule_tensor(16));
        let scale = want.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        let diff = got.iter().zip(want.iter()).flat_map(|(g, w)| g.iter().zip(w.iter()).map(|(a, b)| (a - b).norm())).fold(0.0, f64::max);
        println!("n={n}: far pair d={d:.2} h={:.2}: abs diff {diff:.3e}, scale {scale:.3e}, rel {:.3e}", mesh.tri_diameter(tx), diff / scale);
    }
}
