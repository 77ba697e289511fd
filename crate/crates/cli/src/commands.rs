//! Subcommand implementations. Every command writes into the configured
//! output directory and prints a short report on stdout.

use std::fs;
use std::path::Path;

use ddmag_core::export::{parse_fields_csv, write_fields, write_mesh, FieldTable};
use ddmag_core::geometry::build_regions;
use ddmag_core::material::fit_brauer;
use ddmag_core::metrics::{airgap_energy, energy_mismatch, rel_airgap_error};
use ddmag_core::metrics::{ConvergenceStudy, StudyMetric, StudyPoint};
use ddmag_core::{
    current_density, dd_run, newton_solve, triangulate, BrauerConstants, DdConfig, DdSolution,
    DofVector, Excitation, MaterialDataSet, MaterialLaw, Mesh, NewtonOptions, ReferenceSolution,
    WeightMode, NU0,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{MaterialSource, RunConfig, WeightModeConfig};
use crate::error::CliError;

/// Mesh and excitation shared by every solve of one configuration.
pub struct Problem {
    pub mesh: Mesh,
    pub excitation: Excitation,
}

impl Problem {
    pub fn build(cfg: &RunConfig) -> Result<Self, CliError> {
        let geom = cfg.geometry.to_geometry();
        let layout = build_regions(&geom)?;
        let mesh = triangulate(&layout, &cfg.mesh.options())?;
        let excitation = Excitation {
            n_coil: cfg.excitation.n_coil,
            current: cfg.excitation.current,
            coil_area: cfg.excitation.coil_area.unwrap_or_else(|| geom.coil_area()),
        };
        excitation.validate()?;
        log::info!(
            "mesh: {} elements, {} vertices",
            mesh.n_elements(),
            mesh.n_vertices()
        );
        Ok(Problem { mesh, excitation })
    }
}

pub fn load_dataset(cfg: &RunConfig) -> Result<MaterialDataSet, CliError> {
    Ok(match &cfg.material {
        MaterialSource::Brauer {
            k1,
            k2,
            k3,
            samples,
            b_max,
        } => {
            MaterialDataSet::sample_brauer(*samples, *b_max, &BrauerConstants::new(*k1, *k2, *k3)?)?
        }
        MaterialSource::Csv { path } => MaterialDataSet::load_csv(path)?,
    })
}

/// Brauer constants of the configured law, fitted when the material is
/// given as measured samples.
pub fn material_law(cfg: &RunConfig, dataset: &MaterialDataSet) -> Result<MaterialLaw, CliError> {
    let c = match &cfg.material {
        MaterialSource::Brauer { k1, k2, k3, .. } => BrauerConstants::new(*k1, *k2, *k3)?,
        MaterialSource::Csv { .. } => {
            let c = fit_brauer(dataset)?;
            log::info!(
                "fitted Brauer constants k1={} k2={} k3={}",
                c.k1,
                c.k2,
                c.k3
            );
            c
        }
    };
    Ok(MaterialLaw::PerComponent(c))
}

fn dd_config<'a>(
    cfg: &RunConfig,
    mesh: &'a Mesh,
    dataset: &'a MaterialDataSet,
    excitation: Excitation,
) -> DdConfig<'a> {
    let s = &cfg.solver;
    let mut c = DdConfig::new(mesh, dataset, excitation);
    c.switch_iteration = s.switch_iteration;
    c.max_iterations = s.max_iterations;
    c.solver_tol = s.solver_tol;
    c.stagnation_tol = s.stagnation_tol;
    c.state_tol = s.state_tol;
    c.search_window = s.search_window;
    c.weight_mode = match s.weight_mode {
        WeightModeConfig::Switching => WeightMode::Switching,
        WeightModeConfig::Global => WeightMode::GlobalOnly,
    };
    c
}

fn newton_options(cfg: &RunConfig) -> NewtonOptions {
    NewtonOptions {
        tol: cfg.solver.newton_tol,
        ..NewtonOptions::default()
    }
}

fn write(path: &Path, body: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, body).map_err(|e| CliError::io(path, e))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn read_fields(path: &Path) -> Result<FieldTable, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(parse_fields_csv(&text, path)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    write(path, s)
}

pub fn cmd_mesh(cfg: &RunConfig) -> Result<(), CliError> {
    let p = Problem::build(cfg)?;
    let dir = &cfg.output.dir;
    write_mesh(dir, &p.mesh)?;
    println!(
        "{} elements, {} vertices -> {}",
        p.mesh.n_elements(),
        p.mesh.n_vertices(),
        dir.display()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct DdSummary {
    pub solver: &'static str,
    pub samples: usize,
    pub iterations: usize,
    pub converged: bool,
    pub final_functional: f64,
    pub w_air: f64,
}

fn run_dd(
    cfg: &RunConfig,
    p: &Problem,
    dataset: &MaterialDataSet,
    dir: &Path,
) -> Result<(DdSolution, DdSummary), CliError> {
    let dcfg = dd_config(cfg, &p.mesh, dataset, p.excitation);
    let sol = dd_run(&dcfg)?;
    create_dir(dir)?;
    write_fields(dir, &p.mesh, sol.fields(), &sol.state.a)?;
    write(&dir.join("convergence.csv"), sol.log.to_csv())?;
    let summary = DdSummary {
        solver: "dd",
        samples: dataset.cardinality(),
        iterations: sol.iterations(),
        converged: sol.converged,
        final_functional: sol.log.functional().last().copied().unwrap_or(0.0),
        w_air: airgap_energy(&p.mesh, sol.fields())?,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok((sol, summary))
}

pub fn cmd_solve_dd(cfg: &RunConfig) -> Result<(), CliError> {
    let p = Problem::build(cfg)?;
    let dataset = load_dataset(cfg)?;
    let (_, s) = run_dd(cfg, &p, &dataset, &cfg.output.dir)?;
    println!(
        "dd: {} iterations, converged {}, J = {:e}, W_air = {:e} J/m",
        s.iterations, s.converged, s.final_functional, s.w_air
    );
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct NewtonSummary {
    pub solver: &'static str,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    pub w_air: f64,
}

fn newton_convergence_csv(r: &ReferenceSolution) -> String {
    let mut s = String::from("iteration,relative_residual,step_length\n");
    for (k, res) in r.residual_history.iter().enumerate() {
        let step = if k == 0 { 0.0 } else { r.step_lengths[k - 1] };
        s.push_str(&format!("{k},{res:e},{step:e}\n"));
    }
    s
}

fn run_newton(
    cfg: &RunConfig,
    p: &Problem,
    dir: &Path,
) -> Result<(ReferenceSolution, NewtonSummary), CliError> {
    let dataset = load_dataset(cfg)?;
    let law = material_law(cfg, &dataset)?;
    let j = current_density(&p.mesh, &p.excitation)?;
    let r = newton_solve(&p.mesh, law, &j, &newton_options(cfg))?;
    create_dir(dir)?;
    write_fields(dir, &p.mesh, &r.states, &r.a)?;
    write(&dir.join("convergence.csv"), newton_convergence_csv(&r))?;
    let summary = NewtonSummary {
        solver: "newton",
        iterations: r.iterations,
        converged: r.converged,
        final_residual: r.final_residual(),
        w_air: airgap_energy(&p.mesh, &r.states)?,
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok((r, summary))
}

pub fn cmd_solve_newton(cfg: &RunConfig) -> Result<(), CliError> {
    let p = Problem::build(cfg)?;
    let (_, s) = run_newton(cfg, &p, &cfg.output.dir)?;
    println!(
        "newton: {} iterations, converged {}, residual {:e}, W_air = {:e} J/m",
        s.iterations, s.converged, s.final_residual, s.w_air
    );
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Slopes {
    pub n: Vec<usize>,
    pub eps_em_slope: f64,
    pub eps_w_slope: f64,
}

pub fn cmd_sweep(cfg: &RunConfig, n_list: &[usize]) -> Result<(), CliError> {
    if n_list.len() < 3 {
        return Err(CliError::Usage(
            "--n-list needs at least three sizes".into(),
        ));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Usage(
            "--n-list must be strictly ascending".into(),
        ));
    }
    let MaterialSource::Brauer { .. } = cfg.material else {
        return Err(CliError::Config(
            "sweep resamples the material and needs a Brauer source".into(),
        ));
    };
    let p = Problem::build(cfg)?;
    let root = &cfg.output.dir;
    let (reference, _) = run_newton(cfg, &p, &root.join("newton"))?;
    let w_ref = airgap_energy(&p.mesh, &reference.states)?;

    let runs: Vec<Result<StudyPoint, CliError>> = n_list
        .par_iter()
        .map(|&n| {
            let mut c = cfg.clone();
            if let MaterialSource::Brauer { samples, .. } = &mut c.material {
                *samples = n;
            }
            let dataset = load_dataset(&c)?;
            let (sol, s) = run_dd(&c, &p, &dataset, &root.join(format!("N_{n}")))?;
            log::info!("N = {n}: {} iterations", s.iterations);
            Ok(StudyPoint {
                n,
                eps_em: energy_mismatch(&p.mesh, sol.fields(), &reference)?,
                eps_w_rel: rel_airgap_error(s.w_air, w_ref)?,
                iterations: s.iterations,
            })
        })
        .collect();
    let mut study = ConvergenceStudy::new();
    for r in runs {
        study.push(r?)?;
    }
    write(&root.join("study.csv"), study.to_csv())?;
    let slopes = Slopes {
        n: n_list.to_vec(),
        eps_em_slope: study.slope(StudyMetric::EnergyMismatch)?,
        eps_w_slope: study.slope(StudyMetric::AirgapEnergy)?,
    };
    write_json(&root.join("slopes.json"), &slopes)?;
    print!("{}", study.to_csv());
    println!(
        "slopes: eps_em {:.3}, eps_W {:.3}",
        slopes.eps_em_slope, slopes.eps_w_slope
    );
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Comparison {
    pub eps_em: f64,
    pub w_air_dd: f64,
    pub w_air_newton: f64,
    pub eps_w_rel: f64,
}

/// Rebuilds the mesh and the reference chord reluctivities from the config,
/// then measures the data-driven field against the Newton field.
pub fn cmd_compare(cfg: &RunConfig, dd: &Path, newton: &Path) -> Result<(), CliError> {
    let p = Problem::build(cfg)?;
    let dd = read_fields(dd)?;
    let nt = read_fields(newton)?;
    let ne = p.mesh.n_elements();
    for t in [&dd, &nt] {
        if t.states.len() != ne {
            return Err(ddmag_core::Error::MeshMismatch {
                expected: ne,
                actual: t.states.len(),
            }
            .into());
        }
        if t.regions != p.mesh.regions {
            return Err(CliError::Config(
                "field file regions differ from the configured mesh".into(),
            ));
        }
    }
    let dataset = load_dataset(cfg)?;
    let law = material_law(cfg, &dataset)?;
    let nu_ref: Vec<[f64; 2]> = (0..ne)
        .map(|e| {
            if p.mesh.regions[e].is_iron() {
                law.chord(nt.states[e].b)
            } else {
                [NU0; 2]
            }
        })
        .collect();
    let reference = ReferenceSolution {
        a: DofVector::zeros(p.mesh.n_vertices()),
        mu_ref: nu_ref.iter().map(|n| n.map(|v| 1.0 / v)).collect(),
        nu_ref,
        states: nt.states,
        iterations: 0,
        residual_history: Vec::new(),
        step_lengths: Vec::new(),
        converged: true,
    };
    let w_air_dd = airgap_energy(&p.mesh, &dd.states)?;
    let w_air_newton = airgap_energy(&p.mesh, &reference.states)?;
    let report = Comparison {
        eps_em: energy_mismatch(&p.mesh, &dd.states, &reference)?,
        w_air_dd,
        w_air_newton,
        eps_w_rel: rel_airgap_error(w_air_dd, w_air_newton)?,
    };
    create_dir(&cfg.output.dir)?;
    write_json(&cfg.output.dir.join("compare.json"), &report)?;
    println!(
        "eps_em = {:e}\nW_air dd = {:e} J/m\nW_air newton = {:e} J/m\neps_W_rel = {:e}",
        report.eps_em, report.w_air_dd, report.w_air_newton, report.eps_w_rel
    );
    Ok(())
}
