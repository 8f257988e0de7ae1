use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::LeafMesh;

/// Initial data on one leaf `[0, L)`, evaluated as exact cell averages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    /// `left` on `[0, L/2)`, `right` on `[L/2, L)`.
    Riemann { left: f64, right: f64 },
    /// `amp sin(2 pi x / L)`
    Sine { amp: f64 },
    /// `height` on `[L/2 - width/2, L/2 + width/2)`, zero elsewhere.
    Square { height: f64, width: f64 },
    Constant(f64),
}

impl InitialCondition {
    /// Parses `riemann(uL,uR)`, `sine(amp)`, `square(h,w)` or `constant(c)`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (name, args) = match spec.find('(') {
            Some(i) if spec.ends_with(')') => (&spec[..i], &spec[i + 1..spec.len() - 1]),
            _ => (spec, ""),
        };
        let args: Vec<f64> = if args.trim().is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|a| {
                    a.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidArgument(format!("bad number '{a}' in initial condition '{spec}'")))
                })
                .collect::<Result<_>>()?
        };
        let arity = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!(
                    "initial condition '{name}' takes {n} argument(s), got {}",
                    args.len()
                )))
            }
        };
        match name.trim() {
            "riemann" => {
                arity(2)?;
                Ok(InitialCondition::Riemann { left: args[0], right: args[1] })
            }
            "sine" => {
                arity(1)?;
                Ok(InitialCondition::Sine { amp: args[0] })
            }
            "square" => {
                arity(2)?;
                Ok(InitialCondition::Square { height: args[0], width: args[1] })
            }
            "constant" => {
                arity(1)?;
                Ok(InitialCondition::Constant(args[0]))
            }
            other => Err(Error::UnknownPreset(format!("initial condition '{other}'"))),
        }
    }

    /// Mean of the data over `[a, b]` with `0 <= a < b <= L`.
    fn average(&self, a: f64, b: f64, l: f64) -> f64 {
        let overlap = |lo: f64, hi: f64| (b.min(hi) - a.max(lo)).max(0.0);
        match *self {
            InitialCondition::Riemann { left, right } => {
                (left * overlap(0.0, 0.5 * l) + right * overlap(0.5 * l, l)) / (b - a)
            }
            InitialCondition::Sine { amp } => {
                let k = 2.0 * PI / l;
                amp * ((k * a).cos() - (k * b).cos()) / (k * (b - a))
            }
            InitialCondition::Square { height, width } => {
                height * overlap(0.5 * (l - width), 0.5 * (l + width)) / (b - a)
            }
            InitialCondition::Constant(c) => c,
        }
    }

    pub fn cell_averages(&self, mesh: &LeafMesh) -> Vec<f64> {
        let l = mesh.leaf_length();
        (0..mesh.n_cells())
            .map(|j| self.average(mesh.face(j), mesh.face(j + 1), l))
            .collect()
    }

    /// Largest `|u|` the data attains.
    pub fn sup_abs(&self) -> f64 {
        match *self {
            InitialCondition::Riemann { left, right } => left.abs().max(right.abs()),
            InitialCondition::Sine { amp } => amp.abs(),
            InitialCondition::Square { height, .. } => height.abs(),
            InitialCondition::Constant(c) => c.abs(),
        }
    }
}
