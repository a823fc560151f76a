//! Krylov actions of the exponential and of phi1 on an assembled
//! advection-diffusion generator, checked against the identity
//! `A phi1(A) v = e^A v - v`.

use std::sync::Arc;

use spde_fbm::matfunc::{expm_action, phi1_action, KrylovConfig};
use spde_fbm::spatial::mesh::{build_mesh, project_nodal};
use spde_fbm::spatial::{assemble_operator, Diffusion, VelocityField};
use spde_fbm::steppers::{LinearReaction, SemilinearProblem};

fn main() -> spde_fbm::Result<()> {
    let mesh = build_mesh(3.0, 2.0, 24, 16)?;
    let vel = VelocityField::uniform(&mesh, [0.3, 0.1]);
    let op = Arc::new(assemble_operator(&mesh, &Diffusion::isotropic(0.05), &vel, 1.0, false)?);
    let x0 = project_nodal(&mesh, |p| (-(p[0] - 1.0).powi(2) - (p[1] - 1.0).powi(2)).exp());
    let problem = SemilinearProblem::on_mesh(op, &mesh, Arc::new(LinearReaction(0.0)), &x0);
    let a = problem.generator();
    let v = problem.initial.clone();
    let norm = |x: &[f64]| x.iter().map(|y| y * y).sum::<f64>().sqrt();
    for tol in [1e-6, 1e-8, 1e-10] {
        let cfg = KrylovConfig {
            tolerance: tol,
            ..KrylovConfig::default()
        };
        let e = expm_action(&a, 1.0, &v, &cfg)?;
        let p = phi1_action(&a, 1.0, &v, &cfg)?;
        let mut ap = vec![0.0; v.len()];
        spde_fbm::matfunc::OperatorAction::apply(&a, &p, &mut ap);
        let res: Vec<f64> = ap.iter().zip(&e).zip(&v).map(|((x, y), z)| x - (y - z)).collect();
        println!("tol {tol:.0e}: |e^A v| {:.6}  |phi1(A) v| {:.6}  residual {:.2e}", norm(&e), norm(&p), norm(&res) / norm(&v));
    }
    Ok(())
}
