use std::f64::consts::PI;
use std::fmt;

/// Metric coefficients and their analytic partial derivatives at one point.
///
/// The Lorentzian metric is `g = -lapse^2 dt^2 + scale^2 dx^2`; the companion
/// Riemannian metric flips the sign of the time-time entry.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MetricJet {
    pub lapse: f64,
    pub lapse_t: f64,
    pub lapse_x: f64,
    pub lapse_tt: f64,
    pub lapse_tx: f64,
    pub lapse_xx: f64,
    pub scale: f64,
    pub scale_t: f64,
    pub scale_x: f64,
    pub scale_tt: f64,
    pub scale_tx: f64,
    pub scale_xx: f64,
}

impl MetricJet {
    pub fn constant(lapse: f64, scale: f64) -> Self {
        MetricJet {
            lapse,
            scale,
            ..Default::default()
        }
    }

    /// Density `lapse * scale` of the spacetime volume form.
    pub fn density(&self) -> f64 {
        self.lapse * self.scale
    }

    /// Partial derivatives of `ln(lapse * scale)`: (t, x, tt, tx, xx).
    pub fn log_density_derivatives(&self) -> [f64; 5] {
        let (l, a) = (self.lapse, self.scale);
        let lt = self.lapse_t / l;
        let lx = self.lapse_x / l;
        let at = self.scale_t / a;
        let ax = self.scale_x / a;
        [
            lt + at,
            lx + ax,
            self.lapse_tt / l - lt * lt + self.scale_tt / a - at * at,
            self.lapse_tx / l - lt * lx + self.scale_tx / a - at * ax,
            self.lapse_xx / l - lx * lx + self.scale_xx / a - ax * ax,
        ]
    }

    /// Christoffel symbols of the companion metric `lapse^2 dt^2 + scale^2 dx^2`,
    /// indexed as `gamma[upper][lower_1][lower_2]` with 0 = t, 1 = x.
    pub fn companion_christoffel(&self) -> [[[f64; 2]; 2]; 2] {
        let (l, a) = (self.lapse, self.scale);
        let mut g = [[[0.0; 2]; 2]; 2];
        g[0][0][0] = self.lapse_t / l;
        g[0][0][1] = self.lapse_x / l;
        g[0][1][0] = g[0][0][1];
        g[0][1][1] = -a * self.scale_t / (l * l);
        g[1][1][1] = self.scale_x / a;
        g[1][0][1] = self.scale_t / a;
        g[1][1][0] = g[1][0][1];
        g[1][0][0] = -l * self.lapse_x / (a * a);
        g
    }
}

/// How much translation symmetry a metric has; used to share ball stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricSymmetry {
    /// Constant coefficients.
    Homogeneous,
    /// Coefficients depend on `t` only.
    LeafInvariant,
    General,
}

/// A prescribed metric on the foliated strip. Coefficients must be periodic in
/// `x` with the leaf length of the spacetime they are attached to.
pub trait Metric: Send + Sync + fmt::Debug {
    fn name(&self) -> String;

    fn jet(&self, t: f64, x: f64) -> MetricJet;

    fn lapse(&self, t: f64, x: f64) -> f64 {
        self.jet(t, x).lapse
    }

    fn scale(&self, t: f64, x: f64) -> f64 {
        self.jet(t, x).scale
    }

    fn symmetry(&self) -> MetricSymmetry {
        MetricSymmetry::General
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Minkowski;

impl Metric for Minkowski {
    fn name(&self) -> String {
        "minkowski".into()
    }
    fn jet(&self, _t: f64, _x: f64) -> MetricJet {
        MetricJet::constant(1.0, 1.0)
    }
    fn lapse(&self, _t: f64, _x: f64) -> f64 {
        1.0
    }
    fn scale(&self, _t: f64, _x: f64) -> f64 {
        1.0
    }
    fn symmetry(&self) -> MetricSymmetry {
        MetricSymmetry::Homogeneous
    }
}

/// Constant lapse and scale.
#[derive(Debug, Clone, Copy)]
pub struct ConstantMetric {
    pub lapse: f64,
    pub scale: f64,
}

impl Metric for ConstantMetric {
    fn name(&self) -> String {
        format!("constant(lapse={},scale={})", self.lapse, self.scale)
    }
    fn jet(&self, _t: f64, _x: f64) -> MetricJet {
        MetricJet::constant(self.lapse, self.scale)
    }
    fn symmetry(&self) -> MetricSymmetry {
        MetricSymmetry::Homogeneous
    }
}

/// Expanding leaves: `lapse = 1`, `scale = a0 * exp(rate * t)`.
#[derive(Debug, Clone, Copy)]
pub struct Flrw {
    pub a0: f64,
    pub rate: f64,
}

impl Default for Flrw {
    fn default() -> Self {
        Flrw { a0: 1.0, rate: 1.0 }
    }
}

impl Metric for Flrw {
    fn name(&self) -> String {
        "flrw".into()
    }
    fn jet(&self, t: f64, _x: f64) -> MetricJet {
        let a = self.a0 * (self.rate * t).exp();
        MetricJet {
            lapse: 1.0,
            scale: a,
            scale_t: self.rate * a,
            scale_tt: self.rate * self.rate * a,
            ..Default::default()
        }
    }
    fn lapse(&self, _t: f64, _x: f64) -> f64 {
        1.0
    }
    fn scale(&self, t: f64, _x: f64) -> f64 {
        self.a0 * (self.rate * t).exp()
    }
    fn symmetry(&self) -> MetricSymmetry {
        MetricSymmetry::LeafInvariant
    }
}

/// `lapse = 1 + amp sin(2 pi x / L)`, `scale = 1 + amp cos(2 pi x / L + t)`.
#[derive(Debug, Clone, Copy)]
pub struct Warped {
    pub amp: f64,
    pub leaf_length: f64,
}

impl Metric for Warped {
    fn name(&self) -> String {
        "warped".into()
    }
    fn jet(&self, t: f64, x: f64) -> MetricJet {
        let k = 2.0 * PI / self.leaf_length;
        let (s, c) = (k * x).sin_cos();
        let (s2, c2) = (k * x + t).sin_cos();
        let amp = self.amp;
        MetricJet {
            lapse: 1.0 + amp * s,
            lapse_x: amp * k * c,
            lapse_xx: -amp * k * k * s,
            scale: 1.0 + amp * c2,
            scale_t: -amp * s2,
            scale_x: -amp * k * s2,
            scale_tt: -amp * c2,
            scale_tx: -amp * k * c2,
            scale_xx: -amp * k * k * c2,
            ..Default::default()
        }
    }
}

/// Static leaf with modulated scale: `lapse = 1`, `scale = 1 + amp sin(2 pi x / L)`.
#[derive(Debug, Clone, Copy)]
pub struct Modulated {
    pub amp: f64,
    pub leaf_length: f64,
}

impl Metric for Modulated {
    fn name(&self) -> String {
        format!("modulated(amp={})", self.amp)
    }
    fn jet(&self, _t: f64, x: f64) -> MetricJet {
        let k = 2.0 * PI / self.leaf_length;
        let (s, c) = (k * x).sin_cos();
        MetricJet {
            lapse: 1.0,
            scale: 1.0 + self.amp * s,
            scale_x: self.amp * k * c,
            scale_xx: -self.amp * k * k * s,
            ..Default::default()
        }
    }
}
