//! Foliated (1+1)-dimensional spacetimes with circular leaves.
//!
//! A [`Spacetime1p1`] is the strip `[t_min, t_max] x S^1` carrying the
//! Lorentzian metric `-lapse^2 dt^2 + scale^2 dx^2`. Distances, balls and
//! gradient norms use the companion Riemannian metric
//! `lapse^2 dt^2 + scale^2 dx^2`; both metrics share the volume density
//! `lapse * scale`.

mod distance;
mod metric;

use std::sync::Arc;

use crate::error::{Error, Result};

pub use distance::{companion_distance, geodesic_ball, geodesic_ball_brute, BallCell, DistanceGrid, GeodesicBall, STENCIL};
pub use metric::{ConstantMetric, Flrw, Metric, MetricJet, MetricSymmetry, Minkowski, Modulated, Warped};

/// A point of the spacetime; `x` is kept reduced modulo the leaf length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub t: f64,
    pub x: f64,
}

impl Point {
    pub fn new(t: f64, x: f64) -> Self {
        Point { t, x }
    }
}

#[derive(Debug, Clone)]
pub struct Spacetime1p1 {
    t_min: f64,
    t_max: f64,
    leaf_length: f64,
    metric: Arc<dyn Metric>,
    bounds: (f64, f64, f64, f64),
    leaf_lengths: (f64, f64),
}

impl Spacetime1p1 {
    /// Builds the spacetime and checks positivity and periodicity of the
    /// metric coefficients on a 64 x 64 sample lattice.
    pub fn new(t_min: f64, t_max: f64, leaf_length: f64, metric: Arc<dyn Metric>) -> Result<Self> {
        if !(t_min.is_finite() && t_max.is_finite() && t_max > t_min) {
            return Err(Error::InvalidGeometry(format!("time range [{t_min}, {t_max}] is empty")));
        }
        if !(leaf_length.is_finite() && leaf_length > 0.0) {
            return Err(Error::InvalidGeometry(format!("leaf length {leaf_length} must be positive")));
        }
        let mut st = Spacetime1p1 {
            t_min,
            t_max,
            leaf_length,
            metric,
            bounds: (0.0, 0.0, 0.0, 0.0),
            leaf_lengths: (0.0, 0.0),
        };
        const N: usize = 64;
        for i in 0..=N {
            let t = t_min + (t_max - t_min) * i as f64 / N as f64;
            for j in 0..N {
                let x = leaf_length * j as f64 / N as f64;
                let m = st.metric.jet(t, x);
                if !(m.lapse > 0.0 && m.scale > 0.0) {
                    return Err(Error::InvalidGeometry(format!(
                        "lapse {} / scale {} not positive at (t, x) = ({t}, {x})",
                        m.lapse, m.scale
                    )));
                }
                let w = st.metric.jet(t, x + leaf_length);
                let gap = (w.lapse - m.lapse).abs() + (w.scale - m.scale).abs();
                if gap > 1e-9 * (m.lapse + m.scale) {
                    return Err(Error::InvalidGeometry(format!(
                        "metric not periodic with period {leaf_length} at x = {x}"
                    )));
                }
            }
        }
        st.bounds = st.sample_coefficient_bounds();
        let lengths: Vec<f64> = st.sample_times(65).into_iter().map(|t| st.leaf_length_at(t)).collect();
        st.leaf_lengths = (
            lengths.iter().copied().fold(f64::INFINITY, f64::min),
            lengths.iter().copied().fold(0.0, f64::max),
        );
        Ok(st)
    }

    pub fn minkowski(t_max: f64, leaf_length: f64) -> Self {
        Spacetime1p1::new(0.0, t_max, leaf_length, Arc::new(Minkowski)).expect("flat metric is valid")
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }
    pub fn t_max(&self) -> f64 {
        self.t_max
    }
    pub fn leaf_length(&self) -> f64 {
        self.leaf_length
    }
    pub fn metric(&self) -> &Arc<dyn Metric> {
        &self.metric
    }

    pub fn jet(&self, p: Point) -> MetricJet {
        self.metric.jet(p.t, self.wrap(p.x))
    }

    pub fn lapse(&self, t: f64, x: f64) -> f64 {
        self.metric.lapse(t, self.wrap(x))
    }

    pub fn scale(&self, t: f64, x: f64) -> f64 {
        self.metric.scale(t, self.wrap(x))
    }

    /// Reduces a leaf coordinate into `[0, L)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let r = x.rem_euclid(self.leaf_length);
        if r >= self.leaf_length {
            0.0
        } else {
            r
        }
    }

    pub fn point(&self, t: f64, x: f64) -> Point {
        Point { t, x: self.wrap(x) }
    }

    pub fn contains_time(&self, t: f64) -> bool {
        t >= self.t_min - 1e-12 && t <= self.t_max + 1e-12
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if self.contains_time(t) {
            Ok(())
        } else {
            Err(Error::TimeOutOfRange {
                t,
                t_min: self.t_min,
                t_max: self.t_max,
            })
        }
    }

    /// Riemannian length of the leaf at time `t` (midpoint rule, 512 cells).
    pub fn leaf_length_at(&self, t: f64) -> f64 {
        const N: usize = 512;
        let dx = self.leaf_length / N as f64;
        (0..N).map(|j| self.scale(t, (j as f64 + 0.5) * dx) * dx).sum()
    }

    /// Largest leaf length over 65 sampled times.
    pub fn sup_leaf_length(&self) -> f64 {
        self.leaf_lengths.1
    }

    /// Smallest leaf length over 65 sampled times.
    pub fn inf_leaf_length(&self) -> f64 {
        self.leaf_lengths.0
    }

    /// Extremes `(lapse_min, lapse_max, scale_min, scale_max)` on a 65 x 128 lattice.
    pub fn coefficient_bounds(&self) -> (f64, f64, f64, f64) {
        self.bounds
    }

    fn sample_coefficient_bounds(&self) -> (f64, f64, f64, f64) {
        let mut b = (f64::INFINITY, 0.0f64, f64::INFINITY, 0.0f64);
        for t in self.sample_times(65) {
            for j in 0..128 {
                let x = self.leaf_length * j as f64 / 128.0;
                let l = self.lapse(t, x);
                let a = self.scale(t, x);
                b.0 = b.0.min(l);
                b.1 = b.1.max(l);
                b.2 = b.2.min(a);
                b.3 = b.3.max(a);
            }
        }
        b
    }

    /// Largest admissible ball radius: half the shortest leaf length.
    pub fn ball_radius_cutoff(&self) -> f64 {
        0.5 * self.inf_leaf_length()
    }

    pub(crate) fn sample_times(&self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| self.t_min + (self.t_max - self.t_min) * i as f64 / (n - 1).max(1) as f64)
            .collect()
    }
}

/// Metric presets addressable by name: "minkowski", "flrw" (params `a0`,
/// `rate`), "warped" (`amp`, default 0.5), "modulated" (`amp`, default 0.3),
/// "constant" (`lapse`, `scale`).
pub fn metric_preset(
    name: &str,
    t_min: f64,
    t_max: f64,
    leaf_length: f64,
    param: impl Fn(&str) -> Option<f64>,
) -> Result<Spacetime1p1> {
    let metric: Arc<dyn Metric> = match name {
        "minkowski" => Arc::new(Minkowski),
        "flrw" => Arc::new(Flrw {
            a0: param("a0").unwrap_or(1.0),
            rate: param("rate").unwrap_or(1.0),
        }),
        "warped" => Arc::new(Warped {
            amp: param("amp").unwrap_or(0.5),
            leaf_length,
        }),
        "modulated" => Arc::new(Modulated {
            amp: param("amp").unwrap_or(0.3),
            leaf_length,
        }),
        "constant" => Arc::new(ConstantMetric {
            lapse: param("lapse").unwrap_or(1.0),
            scale: param("scale").unwrap_or(1.0),
        }),
        other => return Err(Error::UnknownPreset(format!("metric '{other}'"))),
    };
    Spacetime1p1::new(t_min, t_max, leaf_length, metric)
}

/// Uniform periodic mesh of one leaf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeafMesh {
    n_cells: usize,
    leaf_length: f64,
}

impl LeafMesh {
    pub fn new(n_cells: usize, leaf_length: f64) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::InvalidArgument("mesh needs at least one cell".into()));
        }
        if !(leaf_length > 0.0) {
            return Err(Error::InvalidArgument(format!("leaf length {leaf_length} must be positive")));
        }
        Ok(LeafMesh { n_cells, leaf_length })
    }

    pub fn for_spacetime(st: &Spacetime1p1, n_cells: usize) -> Result<Self> {
        LeafMesh::new(n_cells, st.leaf_length())
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }
    pub fn leaf_length(&self) -> f64 {
        self.leaf_length
    }
    pub fn dx(&self) -> f64 {
        self.leaf_length / self.n_cells as f64
    }
    pub fn center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dx()
    }
    /// Left face of cell `j`; face `j + 1/2` in the usual notation is `face(j + 1)`.
    pub fn face(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }
    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(move |j| self.center(j))
    }
    pub fn next(&self, j: usize) -> usize {
        (j + 1) % self.n_cells
    }
    pub fn prev(&self, j: usize) -> usize {
        (j + self.n_cells - 1) % self.n_cells
    }
    /// Index of the cell containing the (wrapped) coordinate `x`.
    pub fn cell_of(&self, x: f64) -> usize {
        let r = x.rem_euclid(self.leaf_length);
        ((r / self.dx()) as usize).min(self.n_cells - 1)
    }
}

/// Per-cell weights `scale(t, x_j) * dx` of the leaf volume measure.
pub fn leaf_measure(st: &Spacetime1p1, t: f64, mesh: &LeafMesh) -> Result<Vec<f64>> {
    st.check_time(t)?;
    let dx = mesh.dx();
    Ok(mesh.centers().map(|x| st.scale(t, x) * dx).collect())
}

/// Density `lapse * scale` of the spacetime volume (identical for both metrics).
pub fn spacetime_measure_density(st: &Spacetime1p1, p: Point) -> Result<f64> {
    st.check_time(p.t)?;
    Ok(st.lapse(p.t, p.x) * st.scale(p.t, p.x))
}
