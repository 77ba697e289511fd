//! Material measurement sets and everything that touches them: the Brauer
//! law used to synthesize data, nearest-state search in the weighted
//! `(H, B)` phase space, the closed-form projection onto a linear law and
//! the weighting factors.
//!
//! A [`MaterialDataSet`] is a single scalar curve. Each Cartesian component
//! of a field state is matched against it independently, which is exact for
//! diagonal weights.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::vec2::Vec2;
use crate::{MU0, NU0};

/// Brauer reluctivity `nu(B) = k1 exp(k2 B^2) + k3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrauerConstants {
    /// m/H
    pub k1: f64,
    /// 1/T^2
    pub k2: f64,
    /// m/H
    pub k3: f64,
}

impl BrauerConstants {
    /// Constants of the reference yoke material.
    pub const TABLE: BrauerConstants = BrauerConstants {
        k1: 10.0,
        k2: 1.8,
        k3: 100.0,
    };

    pub fn new(k1: f64, k2: f64, k3: f64) -> Result<Self> {
        let c = BrauerConstants { k1, k2, k3 };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.k1, self.k2, self.k3].iter().all(|v| v.is_finite());
        if finite && self.k1 >= 0.0 && self.k2 >= 0.0 && self.k3 > 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "Brauer constants need k1 >= 0, k2 >= 0, k3 > 0: {self:?}"
            )))
        }
    }

    /// Chord reluctivity `H / B`.
    pub fn nu(&self, b: f64) -> f64 {
        self.k1 * (self.k2 * b * b).exp() + self.k3
    }

    pub fn h(&self, b: f64) -> f64 {
        brauer_h(b, self)
    }

    pub fn dh_db(&self, b: f64) -> f64 {
        brauer_differential_reluctivity(b, self)
    }
}

impl Default for BrauerConstants {
    fn default() -> Self {
        Self::TABLE
    }
}

/// `H(B) = (k1 exp(k2 B^2) + k3) B`.
pub fn brauer_h(b: f64, c: &BrauerConstants) -> f64 {
    c.nu(b) * b
}

/// `dH/dB = k1 exp(k2 B^2) (1 + 2 k2 B^2) + k3`.
pub fn brauer_differential_reluctivity(b: f64, c: &BrauerConstants) -> f64 {
    let b2 = b * b;
    c.k1 * (c.k2 * b2).exp() * (1.0 + 2.0 * c.k2 * b2) + c.k3
}

/// Least-squares Brauer fit to the positive branch of a data set.
///
/// For fixed `k2` the model is linear in `(k1, k3)`, so the fit scans `k2`
/// and refines the best bracket by golden-section search.
pub fn fit_brauer(data: &MaterialDataSet) -> Result<BrauerConstants> {
    let pts: Vec<(f64, f64)> = data.samples().filter(|&(_, b)| b > 0.0).collect();
    if pts.len() < 3 {
        return Err(Error::Validation(
            "need at least three positive samples to fit a Brauer curve".into(),
        ));
    }

    let solve = |k2: f64| -> (f64, f64, f64) {
        // columns: a = exp(k2 B^2) B, c = B
        let (mut saa, mut sac, mut scc, mut sah, mut sch) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(h, b) in &pts {
            let a = (k2 * b * b).exp() * b;
            saa += a * a;
            sac += a * b;
            scc += b * b;
            sah += a * h;
            sch += b * h;
        }
        let det = saa * scc - sac * sac;
        let (mut k1, mut k3) = if det.abs() > 0.0 {
            ((sah * scc - sch * sac) / det, (saa * sch - sac * sah) / det)
        } else {
            (0.0, sch / scc)
        };
        let floor = 1e-9;
        if k1 <= floor {
            k1 = floor;
            k3 = (sch - k1 * sac) / scc;
        }
        if k3 <= floor {
            k3 = floor;
            k1 = ((sah - k3 * sac) / saa).max(floor);
        }
        let sse = pts
            .iter()
            .map(|&(h, b)| {
                let r = (k1 * (k2 * b * b).exp() + k3) * b - h;
                r * r
            })
            .sum();
        (k1, k3, sse)
    };

    let grid: Vec<f64> = (0..=400)
        .map(|i| 10f64.powf(-3.0 + 4.5 * i as f64 / 400.0))
        .collect();
    let best = (0..grid.len())
        .min_by(|&i, &j| solve(grid[i]).2.total_cmp(&solve(grid[j]).2))
        .unwrap();
    let mut lo = grid[best.saturating_sub(1)];
    let mut hi = grid[(best + 1).min(grid.len() - 1)];
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if solve(m1).2 <= solve(m2).2 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let k2 = 0.5 * (lo + hi);
    let (k1, k3, _) = solve(k2);
    BrauerConstants::new(k1, k2, k3)
}

/// Diagonal entry pair of the phase-space metric for one Cartesian component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightPair {
    mu_tilde: f64,
    nu_tilde: f64,
}

/// Lower clamp for reluctivity weights, keeps `nu_tilde` strictly positive.
const NU_FLOOR: f64 = 1e-12 * NU0;

impl WeightPair {
    /// Reciprocal pair built from a reluctivity-like slope, clamped so that
    /// `mu0 <= mu_tilde` and `0 < nu_tilde <= nu0`.
    pub fn from_nu(nu: f64) -> Self {
        let nu_tilde = if nu.is_nan() {
            NU0
        } else {
            nu.clamp(NU_FLOOR, NU0)
        };
        WeightPair {
            mu_tilde: (1.0 / nu_tilde).max(MU0),
            nu_tilde,
        }
    }

    pub fn vacuum() -> Self {
        WeightPair {
            mu_tilde: MU0,
            nu_tilde: NU0,
        }
    }

    pub fn mu_tilde(&self) -> f64 {
        self.mu_tilde
    }

    pub fn nu_tilde(&self) -> f64 {
        self.nu_tilde
    }

    pub fn satisfies_bounds(&self) -> bool {
        self.mu_tilde >= MU0
            && self.mu_tilde.is_finite()
            && self.nu_tilde > 0.0
            && self.nu_tilde <= NU0
    }

    /// `1/2 mu (dh)^2 + 1/2 nu (db)^2`
    #[inline]
    pub fn distance(&self, dh: f64, db: f64) -> f64 {
        let hh = 0.5 * self.mu_tilde * dh * dh;
        hh + self.b_term(db)
    }

    #[inline]
    fn b_term(&self, db: f64) -> f64 {
        0.5 * self.nu_tilde * db * db
    }
}

/// Phase-space state `(H, B)` at one quadrature point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ElementState {
    /// A/m
    pub h: Vec2,
    /// T
    pub b: Vec2,
}

impl ElementState {
    pub const ZERO: ElementState = ElementState {
        h: [0.0; 2],
        b: [0.0; 2],
    };

    pub fn new(h: Vec2, b: Vec2) -> Self {
        ElementState { h, b }
    }

    /// Weighted distance to another state under per-component weights.
    pub fn distance(&self, other: &ElementState, w: &[WeightPair; 2]) -> f64 {
        (0..2)
            .map(|d| w[d].distance(self.h[d] - other.h[d], self.b[d] - other.b[d]))
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.h.iter().chain(&self.b).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    SyntheticBrauer,
    Csv,
    /// Built programmatically from arbitrary samples.
    Samples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchBackend {
    /// Linear scan over every sample. Reference implementation.
    Exhaustive,
    /// Expands outward from a binary search in `B`, pruning with the `B`
    /// term of the distance. Returns the same index as the exhaustive scan.
    #[default]
    Sorted,
}

/// Scalar `(H*, B*)` samples, strictly increasing in `B*`, symmetric under
/// `(H, B) -> (-H, -B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialDataSet {
    h: Vec<f64>,
    b: Vec<f64>,
    provenance: Provenance,
}

impl MaterialDataSet {
    /// Symmetrize, sort and validate `(H, B)` pairs. Exact duplicates are
    /// merged; anything else that breaks monotonicity is an error.
    pub fn from_samples(samples: &[(f64, f64)], provenance: Provenance) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Validation("data set is empty".into()));
        }
        let mut all: Vec<(f64, f64)> = Vec::with_capacity(2 * samples.len());
        for &(h, b) in samples {
            if !(h.is_finite() && b.is_finite()) {
                return Err(Error::Validation(format!("non-finite sample ({h}, {b})")));
            }
            all.push((h, b));
            all.push((-h, -b));
        }
        // -0.0 and 0.0 are the same sample
        for s in &mut all {
            s.0 += 0.0;
            s.1 += 0.0;
        }
        all.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.total_cmp(&y.0)));
        all.dedup();

        for w in all.windows(2) {
            let ((h0, b0), (h1, b1)) = (w[0], w[1]);
            if b1 <= b0 {
                return Err(Error::Validation(format!(
                    "duplicate B = {b0} with different H ({h0} vs {h1})"
                )));
            }
            if h1 < h0 {
                return Err(Error::Validation(format!(
                    "H decreases from {h0} to {h1} between B = {b0} and B = {b1}"
                )));
            }
        }
        let (h, b) = all.into_iter().unzip();
        Ok(MaterialDataSet { h, b, provenance })
    }

    /// Sample `h_of_b` at `n` equidistant `B` values on `[0, b_max]`.
    pub fn sample_fn(
        n: usize,
        b_max: f64,
        h_of_b: impl Fn(f64) -> f64,
        provenance: Provenance,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::Validation(format!(
                "need at least 2 samples, got {n}"
            )));
        }
        if !(b_max.is_finite() && b_max > 0.0) {
            return Err(Error::Validation(format!(
                "B_max must be positive, got {b_max}"
            )));
        }
        let step = b_max / (n - 1) as f64;
        let samples: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let b = if i == n - 1 { b_max } else { step * i as f64 };
                (h_of_b(b), b)
            })
            .collect();
        Self::from_samples(&samples, provenance)
    }

    pub fn sample_brauer(n: usize, b_max: f64, c: &BrauerConstants) -> Result<Self> {
        Self::sample_fn(n, b_max, |b| brauer_h(b, c), Provenance::SyntheticBrauer)
    }

    /// Samples of the linear law `H = nu B`.
    pub fn sample_linear(n: usize, b_max: f64, nu: f64) -> Result<Self> {
        Self::sample_fn(n, b_max, |b| nu * b, Provenance::Samples)
    }

    /// Read a two-column `H,B` CSV file.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::parse_csv(&text, path)
    }

    pub fn parse_csv(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut header_seen = false;
        let mut samples = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if !header_seen {
                if fields != ["H", "B"] {
                    return Err(err(
                        line_no,
                        format!("expected header `H,B`, found `{line}`"),
                    ));
                }
                header_seen = true;
                continue;
            }
            if fields.len() != 2 {
                return Err(err(
                    line_no,
                    format!("expected 2 columns, found {}", fields.len()),
                ));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| err(line_no, format!("`{s}`: {e}")))
            };
            samples.push((parse(fields[0])?, parse(fields[1])?));
        }
        if !header_seen {
            return Err(err(1, "missing `H,B` header".into()));
        }
        if samples.is_empty() {
            return Err(err(text.lines().count().max(1), "no data rows".into()));
        }
        Self::from_samples(&samples, Provenance::Csv)
    }

    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    /// Number of samples on the non-negative branch. This is the `N` of a
    /// convergence study.
    pub fn cardinality(&self) -> usize {
        self.b.iter().filter(|&&b| b >= 0.0).count()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn h_at(&self, i: usize) -> f64 {
        self.h[i]
    }

    pub fn b_at(&self, i: usize) -> f64 {
        self.b[i]
    }

    pub fn b_max(&self) -> f64 {
        self.b[self.b.len() - 1]
    }

    /// `(H, B)` pairs in ascending `B`.
    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.h.iter().copied().zip(self.b.iter().copied())
    }

    /// Overall secant `H(B_max) / B_max`, clamped to the weight bounds.
    pub fn global_weight(&self) -> WeightPair {
        let bm = self.b_max();
        if bm > 0.0 {
            WeightPair::from_nu(self.h[self.len() - 1] / bm)
        } else {
            WeightPair::vacuum()
        }
    }

    /// Secant slope of the curve around sample `i`: central across both
    /// neighbours in the interior, one-sided at the ends.
    pub fn local_weight(&self, i: usize) -> WeightPair {
        let n = self.len();
        if n < 2 {
            return WeightPair::vacuum();
        }
        let (lo, hi) = if i == 0 {
            (0, 1)
        } else if i + 1 >= n {
            (n - 2, n - 1)
        } else {
            (i - 1, i + 1)
        };
        WeightPair::from_nu((self.h[hi] - self.h[lo]) / (self.b[hi] - self.b[lo]))
    }

    /// Index of the zero state, or of the sample nearest to it.
    pub fn origin_index(&self) -> usize {
        self.nearest(0.0, 0.0, &self.global_weight(), SearchBackend::Sorted)
    }

    /// Index minimizing `1/2 mu (h - H*)^2 + 1/2 nu (b - B*)^2`; ties go to
    /// the lowest index.
    pub fn nearest(&self, h: f64, b: f64, w: &WeightPair, backend: SearchBackend) -> usize {
        match backend {
            SearchBackend::Exhaustive => self.nearest_exhaustive(h, b, w),
            SearchBackend::Sorted => self.nearest_sorted(h, b, w),
        }
    }

    fn nearest_exhaustive(&self, h: f64, b: f64, w: &WeightPair) -> usize {
        let mut best = (f64::INFINITY, 0);
        for i in 0..self.len() {
            let d = w.distance(h - self.h[i], b - self.b[i]);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    fn nearest_sorted(&self, h: f64, b: f64, w: &WeightPair) -> usize {
        let start = self.b.partition_point(|&x| x < b);
        let mut best = (f64::INFINITY, usize::MAX);
        let visit = |i: usize, best: &mut (f64, usize)| -> bool {
            let db = b - self.b[i];
            // the B term alone grows monotonically away from `start`
            if w.b_term(db) > best.0 {
                return false;
            }
            let d = w.distance(h - self.h[i], db);
            if d < best.0 || (d == best.0 && i < best.1) {
                *best = (d, i);
            }
            true
        };
        for i in start..self.len() {
            if !visit(i, &mut best) {
                break;
            }
        }
        for i in (0..start).rev() {
            if !visit(i, &mut best) {
                break;
            }
        }
        best.1
    }

    /// Nearest sample, searching `[prev - window, prev + window]` first and
    /// falling back to the full search when the window minimum sits on an
    /// interior window edge. Agrees with [`Self::nearest`] whenever the
    /// distance along the curve has a single local minimum.
    pub fn nearest_windowed(
        &self,
        h: f64,
        b: f64,
        w: &WeightPair,
        prev: usize,
        window: usize,
    ) -> usize {
        let n = self.len();
        let lo = prev.saturating_sub(window);
        let hi = (prev + window).min(n - 1);
        let mut best = (f64::INFINITY, lo);
        for i in lo..=hi {
            let d = w.distance(h - self.h[i], b - self.b[i]);
            if d < best.0 {
                best = (d, i);
            }
        }
        let on_edge = (best.1 == lo && lo > 0) || (best.1 == hi && hi + 1 < n);
        if on_edge {
            self.nearest_sorted(h, b, w)
        } else {
            best.1
        }
    }

    /// Componentwise nearest state; returns the assembled state and the two
    /// sample indices.
    pub fn nearest_state(
        &self,
        s: &ElementState,
        w: &[WeightPair; 2],
        backend: SearchBackend,
    ) -> (ElementState, [usize; 2]) {
        let idx = [0, 1].map(|d| self.nearest(s.h[d], s.b[d], &w[d], backend));
        (self.state_of(idx), idx)
    }

    /// Index of the sample equal to `(h, b)`, if any.
    pub fn index_of(&self, h: f64, b: f64) -> Option<usize> {
        let i = self.b.partition_point(|&x| x < b);
        (i < self.len() && self.b[i] == b && self.h[i] == h).then_some(i)
    }

    pub fn state_of(&self, idx: [usize; 2]) -> ElementState {
        ElementState {
            h: idx.map(|i| self.h[i]),
            b: idx.map(|i| self.b[i]),
        }
    }
}

/// Free-function form of [`MaterialDataSet::nearest`] with the default backend.
pub fn nearest_state_1d(h: f64, b: f64, w: &WeightPair, d: &MaterialDataSet) -> usize {
    d.nearest(h, b, w, SearchBackend::default())
}

pub fn nearest_state_2d(
    s: &ElementState,
    w: &[WeightPair; 2],
    d: &MaterialDataSet,
) -> ElementState {
    d.nearest_state(s, w, SearchBackend::default()).0
}

pub fn local_weight(assigned_index: usize, d: &MaterialDataSet) -> WeightPair {
    d.local_weight(assigned_index)
}

/// Minimizer of the weighted distance over the line `B* = mu H*` with
/// weights `(mu, 1/mu)`, per component: `H* = (H + B/mu) / 2`.
pub fn project_linear_law(s: &ElementState, mu: f64) -> ElementState {
    let h = [0, 1].map(|d| 0.5 * (s.h[d] + s.b[d] / mu));
    ElementState {
        h,
        b: h.map(|x| mu * x),
    }
}
