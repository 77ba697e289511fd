//! The data-driven fixed-point iteration.
//!
//! Each iteration projects the current data assignment onto the Maxwell
//! conforming set (two solves with the same weighted stiffness matrix) and
//! then projects the resulting field state back onto the material data,
//! componentwise in iron and onto the vacuum line elsewhere.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::{
    assemble_rhs_b, assemble_rhs_h_j, curl_field, solve_spd_from, Assembler, CgOptions, DofMap,
    DofVector,
};
use crate::geometry::Region;
use crate::material::{
    project_linear_law, ElementState, MaterialDataSet, SearchBackend, WeightPair,
};
use crate::mesh::Mesh;
use crate::vec2::Vec2;
use crate::MU0;

/// Stranded-coil excitation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Excitation {
    pub n_coil: u32,
    /// A
    pub current: f64,
    /// Cross-section of one coil side, m^2.
    pub coil_area: f64,
}

impl Excitation {
    pub fn validate(&self) -> Result<()> {
        if !(self.coil_area > 0.0) || !self.coil_area.is_finite() {
            return Err(Error::Validation(format!(
                "coil area must be positive, got {}",
                self.coil_area
            )));
        }
        if !self.current.is_finite() {
            return Err(Error::Validation("current must be finite".into()));
        }
        Ok(())
    }

    /// A/m^2
    pub fn density(&self) -> f64 {
        self.n_coil as f64 * self.current / self.coil_area
    }
}

/// `+N I / a` on the positive coil side, `-N I / a` on the return side.
pub fn current_density(mesh: &Mesh, excitation: &Excitation) -> Result<Vec<f64>> {
    excitation.validate()?;
    let j = excitation.density();
    Ok(mesh
        .regions
        .iter()
        .map(|r| match r {
            Region::CoilPos => j,
            Region::CoilNeg => -j,
            _ => 0.0,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightMode {
    /// Global weights until the switch iteration, local secants afterwards.
    #[default]
    Switching,
    /// Never leave the global weight.
    GlobalOnly,
}

#[derive(Debug, Clone)]
pub struct DdConfig<'a> {
    pub mesh: &'a Mesh,
    pub dataset: &'a MaterialDataSet,
    pub excitation: Excitation,
    pub switch_iteration: usize,
    pub max_iterations: usize,
    /// Relative CG tolerance for both linear solves.
    pub solver_tol: f64,
    pub weight_mode: WeightMode,
    pub search: SearchBackend,
    /// Search only this many samples around the previous assignment first.
    pub search_window: Option<usize>,
    /// Stop once the functional changes by less than this, relatively.
    pub stagnation_tol: f64,
    /// Relative change of the vacuum assignments accepted as converged.
    pub state_tol: f64,
}

impl<'a> DdConfig<'a> {
    pub fn new(mesh: &'a Mesh, dataset: &'a MaterialDataSet, excitation: Excitation) -> Self {
        DdConfig {
            mesh,
            dataset,
            excitation,
            switch_iteration: 4,
            max_iterations: 200,
            solver_tol: 1e-10,
            weight_mode: WeightMode::Switching,
            search: SearchBackend::Sorted,
            search_window: None,
            stagnation_tol: 1e-12,
            state_tol: 1e-9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.excitation.validate()?;
        if self.switch_iteration < 1 {
            return Err(Error::Config("switch_iteration must be at least 1".into()));
        }
        if self.max_iterations <= self.switch_iteration {
            return Err(Error::Config(format!(
                "max_iterations ({}) must exceed switch_iteration ({})",
                self.max_iterations, self.switch_iteration
            )));
        }
        for (name, v) in [
            ("solver_tol", self.solver_tol),
            ("stagnation_tol", self.stagnation_tol),
            ("state_tol", self.state_tol),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.dataset.is_empty() {
            return Err(Error::Validation("data set is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DdState {
    /// Number of completed iterations.
    pub iteration: usize,
    pub a: DofVector,
    pub eta: DofVector,
    /// Maxwell-conforming state per element.
    pub fields: Vec<ElementState>,
    /// Assigned material state per element.
    pub assigned: Vec<ElementState>,
    /// Sample indices per component in iron, `None` in vacuum regions.
    pub indices: Vec<Option<[usize; 2]>>,
    pub weights: Vec<[WeightPair; 2]>,
    /// Whether iron weights are local secants.
    pub local_weights: bool,
}

impl DdState {
    /// Starts from the given assignments. Iron assignments must be data set
    /// members; with `local_weights` the iron weights are the local secants of
    /// those samples.
    pub fn from_assigned(
        cfg: &DdConfig,
        assigned: Vec<ElementState>,
        local_weights: bool,
    ) -> Result<Self> {
        cfg.validate()?;
        let mesh = cfg.mesh;
        if assigned.len() != mesh.n_elements() {
            return Err(Error::MeshMismatch {
                expected: mesh.n_elements(),
                actual: assigned.len(),
            });
        }
        let d = cfg.dataset;
        let mut indices = Vec::with_capacity(assigned.len());
        for (e, s) in assigned.iter().enumerate() {
            if !mesh.regions[e].is_iron() {
                indices.push(None);
                continue;
            }
            let mut idx = [0; 2];
            for k in 0..2 {
                idx[k] = d.index_of(s.h[k], s.b[k]).ok_or_else(|| {
                    Error::Validation(format!(
                        "element {e}: ({}, {}) is not a data set member",
                        s.h[k], s.b[k]
                    ))
                })?;
            }
            indices.push(Some(idx));
        }
        let global = d.global_weight();
        let weights = indices
            .iter()
            .map(|idx| match idx {
                None => [WeightPair::vacuum(); 2],
                Some(i) if local_weights => i.map(|i| d.local_weight(i)),
                Some(_) => [global; 2],
            })
            .collect();
        Ok(DdState {
            iteration: 0,
            a: DofVector::zeros(mesh.n_vertices()),
            eta: DofVector::zeros(mesh.n_vertices()),
            fields: assigned.clone(),
            assigned,
            indices,
            weights,
            local_weights,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Distance functional after the data projection, with the weights used
    /// in this iteration.
    pub functional: f64,
    /// Iron elements whose assignment changed.
    pub changed_assignments: usize,
    /// Whether this iteration used local iron weights.
    pub local_weights: bool,
    /// Whether the next iteration uses different weights.
    pub weights_changed: bool,
    /// Relative change of the vacuum-region assignments.
    pub vacuum_change: f64,
    pub cg_iters_a: usize,
    pub cg_iters_eta: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceLog {
    pub records: Vec<IterationRecord>,
}

impl ConvergenceLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn functional(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.functional).collect()
    }

    /// Largest relative increase of the functional between consecutive
    /// iterations that used identical weights; zero if there is none.
    pub fn max_frozen_increase(&self) -> f64 {
        self.records
            .windows(2)
            .filter(|w| !w[0].weights_changed)
            .map(|w| (w[1].functional - w[0].functional) / w[0].functional.max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "iteration,functional_J,changed_assignments,weight_mode,cg_iters_A,cg_iters_eta\n",
        );
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{:e},{},{},{},{}",
                r.iteration,
                r.functional,
                r.changed_assignments,
                if r.local_weights { "local" } else { "global" },
                r.cg_iters_a,
                r.cg_iters_eta
            );
        }
        s
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DdSolution {
    pub state: DdState,
    pub log: ConvergenceLog,
    pub converged: bool,
}

impl DdSolution {
    pub fn iterations(&self) -> usize {
        self.state.iteration
    }

    pub fn fields(&self) -> &[ElementState] {
        &self.state.fields
    }
}

/// Zero assignments everywhere, global weights in iron.
pub fn dd_initialize(cfg: &DdConfig) -> Result<DdState> {
    cfg.validate()?;
    let mesh = cfg.mesh;
    let d = cfg.dataset;
    let origin = d.origin_index();
    let assigned = mesh
        .regions
        .iter()
        .map(|r| {
            if r.is_iron() {
                d.state_of([origin; 2])
            } else {
                ElementState::ZERO
            }
        })
        .collect();
    DdState::from_assigned(cfg, assigned, false)
}

/// `sum_e area_e * sum_d (1/2 mu (H - H*)^2 + 1/2 nu (B - B*)^2)`.
pub fn distance_functional(mesh: &Mesh, state: &DdState) -> f64 {
    (0..mesh.n_elements())
        .map(|e| mesh.areas[e] * state.fields[e].distance(&state.assigned[e], &state.weights[e]))
        .sum()
}

struct Workspace {
    assembler: Assembler,
    j: Vec<f64>,
}

impl Workspace {
    fn new(cfg: &DdConfig) -> Result<Self> {
        Ok(Workspace {
            assembler: Assembler::new(cfg.mesh, &DofMap::new(cfg.mesh)),
            j: current_density(cfg.mesh, &cfg.excitation)?,
        })
    }
}

/// One full iteration: two solves, field update, data projection and weight
/// update.
pub fn dd_iterate(cfg: &DdConfig, state: &mut DdState) -> Result<IterationRecord> {
    cfg.validate()?;
    iterate(cfg, &Workspace::new(cfg)?, state)
}

fn iterate(cfg: &DdConfig, ws: &Workspace, state: &mut DdState) -> Result<IterationRecord> {
    let mesh = cfg.mesh;
    let d = cfg.dataset;
    let n = mesh.n_elements();
    let nu: Vec<Vec2> = state
        .weights
        .iter()
        .map(|w| w.map(|p| p.nu_tilde()))
        .collect();
    let k = ws.assembler.stiffness(mesh, &nu)?;
    let cg = CgOptions::with_tol(cfg.solver_tol);

    let bx: Vec<Vec2> = state.assigned.iter().map(|s| s.b).collect();
    let hx: Vec<Vec2> = state.assigned.iter().map(|s| s.h).collect();
    let (a, sa) = solve_spd_from(&k, &assemble_rhs_b(mesh, &nu, &bx)?, Some(&state.a), &cg)?;
    let (eta, se) = solve_spd_from(
        &k,
        &assemble_rhs_h_j(mesh, &hx, &ws.j)?,
        Some(&state.eta),
        &cg,
    )?;

    let b = curl_field(mesh, &a);
    let ceta = curl_field(mesh, &eta);
    for e in 0..n {
        let h = [0, 1].map(|c| hx[e][c] - nu[e][c] * ceta[e][c]);
        state.fields[e] = ElementState::new(h, b[e]);
    }
    state.a = a;
    state.eta = eta;

    let mut changed = 0;
    let (mut vac_diff, mut vac_norm) = (0.0, 0.0);
    let mut functional = 0.0;
    for e in 0..n {
        let z = state.fields[e];
        let w = state.weights[e];
        let new = match state.indices[e] {
            Some(prev) => {
                let idx = [0, 1].map(|c| match cfg.search_window {
                    Some(win) => d.nearest_windowed(z.h[c], z.b[c], &w[c], prev[c], win),
                    None => d.nearest(z.h[c], z.b[c], &w[c], cfg.search),
                });
                if idx != prev {
                    changed += 1;
                    state.indices[e] = Some(idx);
                }
                d.state_of(idx)
            }
            None => {
                let p = project_linear_law(&z, MU0);
                let area = mesh.areas[e];
                vac_diff += area * p.distance(&state.assigned[e], &w);
                vac_norm += area * p.distance(&ElementState::ZERO, &w);
                p
            }
        };
        state.assigned[e] = new;
        functional += mesh.areas[e] * z.distance(&new, &w);
    }
    state.iteration += 1;

    let used_local = state.local_weights;
    let mut weights_changed = false;
    if cfg.weight_mode == WeightMode::Switching
        && (state.local_weights || state.iteration >= cfg.switch_iteration)
    {
        for e in 0..n {
            if let Some(idx) = state.indices[e] {
                let w = idx.map(|i| d.local_weight(i));
                if w != state.weights[e] {
                    weights_changed = true;
                    state.weights[e] = w;
                }
            }
        }
        state.local_weights = true;
    }

    Ok(IterationRecord {
        iteration: state.iteration,
        functional,
        changed_assignments: changed,
        local_weights: used_local,
        weights_changed,
        vacuum_change: if vac_norm > 0.0 {
            (vac_diff / vac_norm).sqrt()
        } else {
            0.0
        },
        cg_iters_a: sa.iterations,
        cg_iters_eta: se.iterations,
    })
}

pub fn dd_run(cfg: &DdConfig) -> Result<DdSolution> {
    dd_run_from(cfg, dd_initialize(cfg)?)
}

/// Iterates until the assignment is stable under final-mode weights, the
/// functional stagnates, or the iteration budget is exhausted. Hitting the
/// budget is not an error; `converged` is false in that case.
pub fn dd_run_from(cfg: &DdConfig, mut state: DdState) -> Result<DdSolution> {
    cfg.validate()?;
    let ws = Workspace::new(cfg)?;
    let mut log = ConvergenceLog::default();
    let mut converged = false;
    while state.iteration < cfg.max_iterations {
        let rec = iterate(cfg, &ws, &mut state)?;
        log::debug!(
            "dd iteration {}: J = {:e}, changed {}, vacuum change {:e}",
            rec.iteration,
            rec.functional,
            rec.changed_assignments,
            rec.vacuum_change
        );
        let final_mode = rec.local_weights || cfg.weight_mode == WeightMode::GlobalOnly;
        let stable = final_mode
            && rec.changed_assignments == 0
            && !rec.weights_changed
            && rec.vacuum_change <= cfg.state_tol;
        let stagnant = final_mode
            && log.records.last().is_some_and(|p: &IterationRecord| {
                p.local_weights == rec.local_weights
                    && !p.weights_changed
                    && (rec.functional - p.functional).abs() <= cfg.stagnation_tol * rec.functional
            });
        log.records.push(rec);
        if rec.functional == 0.0 || stable || stagnant {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "data-driven iteration stopped at the budget of {} iterations without converging",
            cfg.max_iterations
        );
    }
    Ok(DdSolution {
        state,
        log,
        converged,
    })
}
