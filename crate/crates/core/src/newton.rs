//! Damped Newton solver for the nonlinear magnetostatic problem with the
//! Brauer law in iron and vacuum elsewhere.

use crate::error::{Error, Result};
use crate::fem::{
    assemble_rhs_h_j, curl_field, solve_spd_from, Assembler, CgOptions, DofMap, DofVector, Tensor2,
};
use crate::material::{BrauerConstants, ElementState};
use crate::mesh::Mesh;
use crate::vec2::{self, Vec2};
use crate::NU0;

/// Constitutive law used in the iron regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaterialLaw {
    /// `H_d = nu(B_d) B_d` for each Cartesian component separately, the same
    /// scalar curve the data sets are drawn from.
    PerComponent(BrauerConstants),
    /// `H = nu(|B|) B`.
    Isotropic(BrauerConstants),
}

impl MaterialLaw {
    pub fn constants(&self) -> &BrauerConstants {
        match self {
            MaterialLaw::PerComponent(c) | MaterialLaw::Isotropic(c) => c,
        }
    }

    pub fn h(&self, b: Vec2) -> Vec2 {
        match self {
            MaterialLaw::PerComponent(c) => b.map(|x| c.h(x)),
            MaterialLaw::Isotropic(c) => {
                let nu = c.nu(vec2::norm(b));
                b.map(|x| nu * x)
            }
        }
    }

    /// `dH/dB`.
    pub fn tangent(&self, b: Vec2) -> Tensor2 {
        match self {
            MaterialLaw::PerComponent(c) => [[c.dh_db(b[0]), 0.0], [0.0, c.dh_db(b[1])]],
            MaterialLaw::Isotropic(c) => consistent_tangent(b, c),
        }
    }

    /// Chord reluctivity per component.
    pub fn chord(&self, b: Vec2) -> Vec2 {
        match self {
            MaterialLaw::PerComponent(c) => b.map(|x| c.nu(x)),
            MaterialLaw::Isotropic(c) => [c.nu(vec2::norm(b)); 2],
        }
    }
}

/// Differential reluctivity of the isotropic Brauer law:
/// `nu(|B|) I + 2 k1 k2 exp(k2 |B|^2) B (x) B`.
pub fn consistent_tangent(b: Vec2, c: &BrauerConstants) -> Tensor2 {
    let s = b[0] * b[0] + b[1] * b[1];
    let nu = c.nu(s.sqrt());
    let g = 2.0 * c.k1 * c.k2 * (c.k2 * s).exp();
    let off = g * b[0] * b[1];
    [[nu + g * b[0] * b[0], off], [off, nu + g * b[1] * b[1]]]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Stop when `||R|| <= tol ||R(0)||`.
    pub tol: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
    /// Relative tolerance of the inner CG solves.
    pub linear_tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-12,
            max_iterations: 50,
            max_halvings: 10,
            linear_tol: 1e-13,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub a: DofVector,
    pub states: Vec<ElementState>,
    /// Chord reluctivity per element and component, `nu0` outside iron.
    pub nu_ref: Vec<Vec2>,
    /// Reciprocal of `nu_ref`.
    pub mu_ref: Vec<Vec2>,
    pub iterations: usize,
    /// Relative residual before each iteration and after the last one.
    pub residual_history: Vec<f64>,
    /// Step length accepted in each iteration.
    pub step_lengths: Vec<f64>,
    pub converged: bool,
}

impl ReferenceSolution {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&0.0)
    }
}

/// Assembles residuals and Jacobians for one mesh, law and current density.
#[derive(Debug, Clone)]
pub struct NewtonProblem<'a> {
    mesh: &'a Mesh,
    law: MaterialLaw,
    j: &'a [f64],
    assembler: Assembler,
}

impl<'a> NewtonProblem<'a> {
    pub fn new(mesh: &'a Mesh, law: MaterialLaw, j: &'a [f64]) -> Result<Self> {
        law.constants().validate()?;
        if j.len() != mesh.n_elements() {
            return Err(Error::MeshMismatch {
                expected: mesh.n_elements(),
                actual: j.len(),
            });
        }
        Ok(NewtonProblem {
            mesh,
            law,
            j,
            assembler: Assembler::new(mesh, &DofMap::new(mesh)),
        })
    }

    pub fn dofs(&self) -> &DofMap {
        self.assembler.dofs()
    }

    /// `H(B)` per element.
    pub fn fields(&self, a: &DofVector) -> Vec<ElementState> {
        curl_field(self.mesh, a)
            .into_iter()
            .enumerate()
            .map(|(e, b)| {
                let h = if self.mesh.regions[e].is_iron() {
                    self.law.h(b)
                } else {
                    b.map(|x| NU0 * x)
                };
                ElementState::new(h, b)
            })
            .collect()
    }

    /// `(H(curl A), curl w) - (J, w)` on the free dofs.
    pub fn residual(&self, a: &DofVector) -> Result<Vec<f64>> {
        let h: Vec<Vec2> = self.fields(a).into_iter().map(|s| s.h).collect();
        Ok(self
            .dofs()
            .gather(&assemble_rhs_h_j(self.mesh, &h, self.j)?))
    }

    pub fn jacobian(&self, a: &DofVector) -> Result<crate::fem::SparseSpd> {
        let tangents: Vec<Tensor2> = curl_field(self.mesh, a)
            .into_iter()
            .enumerate()
            .map(|(e, b)| {
                if self.mesh.regions[e].is_iron() {
                    self.law.tangent(b)
                } else {
                    [[NU0, 0.0], [0.0, NU0]]
                }
            })
            .collect();
        self.assembler.tensor_stiffness(self.mesh, &tangents)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solve `curl H(curl A) = J` with `A = 0` on the outer boundary.
pub fn newton_solve(
    mesh: &Mesh,
    law: MaterialLaw,
    j: &[f64],
    opts: &NewtonOptions,
) -> Result<ReferenceSolution> {
    if !(opts.tol > 0.0) || !(opts.linear_tol > 0.0) {
        return Err(Error::Config("Newton tolerances must be positive".into()));
    }
    let problem = NewtonProblem::new(mesh, law, j)?;
    let dofs = problem.dofs().clone();
    let mut a = DofVector::zeros(mesh.n_vertices());
    let mut r = problem.residual(&a)?;
    let r0 = norm(&r);
    let mut history = vec![if r0 > 0.0 { 1.0 } else { 0.0 }];
    let mut steps = Vec::new();
    let mut converged = r0 == 0.0;
    let mut iterations = 0;
    let cg = CgOptions::with_tol(opts.linear_tol);

    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        let rnorm = norm(&r);
        let jac = problem.jacobian(&a)?;
        let rhs = dofs.scatter(&r.iter().map(|v| -v).collect::<Vec<_>>());
        let (delta, _) = solve_spd_from(&jac, &rhs, None, &cg)?;

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial = DofVector(a.0.iter().zip(&delta.0).map(|(x, d)| x + t * d).collect());
            let r_trial = problem.residual(&trial)?;
            let n_trial = norm(&r_trial);
            if n_trial <= (1.0 - 1e-4 * t) * rnorm || n_trial <= opts.tol * r0 {
                accepted = Some((trial, r_trial, n_trial));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, r_trial, n_trial)) = accepted else {
            return Err(Error::NewtonDiverged {
                iteration: iterations,
                residual: rnorm / r0,
            });
        };
        a = trial;
        r = r_trial;
        steps.push(t);
        history.push(n_trial / r0);
        log::debug!(
            "newton iteration {iterations}: relative residual {:e}, step {t}",
            n_trial / r0
        );
        converged = n_trial <= opts.tol * r0;
    }

    if !converged {
        return Err(Error::NoConvergence {
            iterations,
            residual: *history.last().unwrap(),
        });
    }

    let states = problem.fields(&a);
    let nu_ref: Vec<Vec2> = states
        .iter()
        .enumerate()
        .map(|(e, s)| {
            if mesh.regions[e].is_iron() {
                law.chord(s.b)
            } else {
                [NU0; 2]
            }
        })
        .collect();
    let mu_ref = nu_ref.iter().map(|n| n.map(|v| 1.0 / v)).collect();
    Ok(ReferenceSolution {
        a,
        states,
        nu_ref,
        mu_ref,
        iterations,
        residual_history: history,
        step_lengths: steps,
        converged,
    })
}
