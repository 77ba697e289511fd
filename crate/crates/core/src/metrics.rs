//! Error measures between field solutions and convergence-slope fits.
//!
//! Energies are per metre of depth.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::Region;
use crate::material::{ElementState, MaterialDataSet, SearchBackend, WeightPair};
use crate::mesh::Mesh;
use crate::newton::ReferenceSolution;

fn check(mesh: &Mesh, n: usize) -> Result<()> {
    if n != mesh.n_elements() {
        return Err(Error::MeshMismatch {
            expected: mesh.n_elements(),
            actual: n,
        });
    }
    Ok(())
}

/// Energy-norm distance to the reference, relative to the reference energy
/// norm, using the reference chord reluctivities as metric.
pub fn energy_mismatch(
    mesh: &Mesh,
    states: &[ElementState],
    reference: &ReferenceSolution,
) -> Result<f64> {
    check(mesh, states.len())?;
    check(mesh, reference.states.len())?;
    let (mut num, mut den) = (0.0, 0.0);
    for e in 0..mesh.n_elements() {
        let (s, r) = (&states[e], &reference.states[e]);
        let (mu, nu) = (reference.mu_ref[e], reference.nu_ref[e]);
        let area = mesh.areas[e];
        for d in 0..2 {
            let dh = s.h[d] - r.h[d];
            let db = s.b[d] - r.b[d];
            num += area * (mu[d] * dh * dh + nu[d] * db * db);
            den += area * (mu[d] * r.h[d] * r.h[d] + nu[d] * r.b[d] * r.b[d]);
        }
    }
    if !(den > 0.0) {
        return Err(Error::ReferenceDegenerate(
            "reference solution has zero energy".into(),
        ));
    }
    Ok((num / den).sqrt())
}

/// `sum over gap elements of 1/2 H.B area`.
pub fn airgap_energy(mesh: &Mesh, states: &[ElementState]) -> Result<f64> {
    check(mesh, states.len())?;
    let mut any = false;
    let mut w = 0.0;
    for e in mesh.elements_in(Region::AirGap) {
        any = true;
        let s = &states[e];
        w += 0.5 * mesh.areas[e] * (s.h[0] * s.b[0] + s.h[1] * s.b[1]);
    }
    if !any {
        return Err(Error::EmptyRegion("AIR_GAP"));
    }
    Ok(w)
}

/// `|W - W_ref| / W_ref`. Not symmetric in its arguments.
pub fn rel_airgap_error(w: f64, w_ref: f64) -> Result<f64> {
    if !(w_ref.abs() > 0.0) {
        return Err(Error::ReferenceDegenerate(
            "reference air-gap energy is zero".into(),
        ));
    }
    Ok((w - w_ref).abs() / w_ref.abs())
}

/// Squared energy distance from the iron states to their nearest samples,
/// `(dH, mu dH) + (dB, nu dB)` summed over iron elements, in J/m.
pub fn energy_mismatch_data(
    mesh: &Mesh,
    states: &[ElementState],
    dataset: &MaterialDataSet,
    weights: &[[WeightPair; 2]],
) -> Result<f64> {
    Ok(data_distances(mesh, states, dataset, weights)?
        .into_iter()
        .map(|(e, d)| 2.0 * mesh.areas[e] * d)
        .sum())
}

/// Largest pointwise weighted distance of an iron state to the data set.
pub fn max_data_distance(
    mesh: &Mesh,
    states: &[ElementState],
    dataset: &MaterialDataSet,
    weights: &[[WeightPair; 2]],
) -> Result<f64> {
    Ok(data_distances(mesh, states, dataset, weights)?
        .into_iter()
        .map(|(_, d)| d)
        .fold(0.0, f64::max))
}

fn data_distances(
    mesh: &Mesh,
    states: &[ElementState],
    dataset: &MaterialDataSet,
    weights: &[[WeightPair; 2]],
) -> Result<Vec<(usize, f64)>> {
    check(mesh, states.len())?;
    check(mesh, weights.len())?;
    if dataset.is_empty() {
        return Err(Error::Validation("data set is empty".into()));
    }
    Ok((0..mesh.n_elements())
        .filter(|&e| mesh.regions[e].is_iron())
        .map(|e| {
            let (star, _) = dataset.nearest_state(&states[e], &weights[e], SearchBackend::Sorted);
            (e, states[e].distance(&star, &weights[e]))
        })
        .collect())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 paired points, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::DegenerateFit(
            "log-log fit needs positive finite values".into(),
        ));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 1e-300 {
        return Err(Error::DegenerateFit("all abscissae are equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyPoint {
    /// Number of non-negative samples in the data set.
    pub n: usize,
    pub eps_em: f64,
    pub eps_w_rel: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyMetric {
    EnergyMismatch,
    AirgapEnergy,
}

/// Error measures over a sequence of data set sizes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceStudy {
    points: Vec<StudyPoint>,
}

impl ConvergenceStudy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, p: StudyPoint) -> Result<()> {
        if let Some(last) = self.points.last() {
            if p.n <= last.n {
                return Err(Error::Validation(format!(
                    "cardinalities must increase: {} after {}",
                    p.n, last.n
                )));
            }
        }
        self.points.push(p);
        Ok(())
    }

    pub fn points(&self) -> &[StudyPoint] {
        &self.points
    }

    pub fn slope(&self, metric: StudyMetric) -> Result<f64> {
        let x: Vec<f64> = self.points.iter().map(|p| p.n as f64).collect();
        let y: Vec<f64> = self
            .points
            .iter()
            .map(|p| match metric {
                StudyMetric::EnergyMismatch => p.eps_em,
                StudyMetric::AirgapEnergy => p.eps_w_rel,
            })
            .collect();
        fit_loglog_slope(&x, &y)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("N,eps_em,eps_W_rel,iterations\n");
        for p in &self.points {
            let _ = writeln!(
                s,
                "{},{:e},{:e},{}",
                p.n, p.eps_em, p.eps_w_rel, p.iterations
            );
        }
        s
    }
}
