//! Shared fixtures for the benchmarks.

use ddmag_core::geometry::build_regions;
use ddmag_core::{
    current_density, default_geometry, triangulate, BrauerConstants, Excitation, MaterialDataSet,
    Mesh, MeshOptions,
};

/// Default inductor mesh with its excitation and a synthetic data set.
pub struct Fixture {
    pub mesh: Mesh,
    pub excitation: Excitation,
    pub j: Vec<f64>,
    pub dataset: MaterialDataSet,
}

impl Fixture {
    pub fn new(samples: usize) -> Self {
        let geom = default_geometry();
        let layout = build_regions(&geom).expect("default geometry is valid");
        let mesh = triangulate(&layout, &MeshOptions::default()).expect("default mesh");
        let excitation = Excitation {
            n_coil: 66,
            current: 50.0,
            coil_area: geom.coil_area(),
        };
        let j = current_density(&mesh, &excitation).expect("valid excitation");
        let dataset = MaterialDataSet::sample_brauer(samples, 2.0, &BrauerConstants::TABLE)
            .expect("valid samples");
        Fixture {
            mesh,
            excitation,
            j,
            dataset,
        }
    }
}

/// Deterministic query points scattered around the samples of `d`, the
/// regime the solver queries in.
pub fn queries(d: &MaterialDataSet, n: usize) -> Vec<(f64, f64)> {
    let mut s = 0x2545_f491_4f6c_dd1d_u64;
    let mut next = || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64
    };
    let spacing = d.b_max() / d.cardinality() as f64;
    (0..n)
        .map(|_| {
            let i = ((next() * d.len() as f64) as usize).min(d.len() - 1);
            let h = d.h_at(i) * (1.0 + 0.2 * (next() - 0.5));
            let b = d.b_at(i) + 4.0 * spacing * (next() - 0.5);
            (h, b)
        })
        .collect()
}
