//! Computable error budgets: the modulus, inhomogeneity and residual terms of
//! the Kuznetsov-type estimate, the form-based remainders, and the derived
//! checks (contraction, flux comparison, vanishing viscosity, BV modulus).

mod checks;
mod optimize;
mod terms;

pub use checks::{
    bv_modulus_check, contraction_check, diffusion_bounds, diffusion_point, flux_comparison_bounds, r_bar,
    BvModulusReport, ContractionReport, DiffusionPoint, DiffusionReport, FluxComparisonReport,
};
pub use optimize::{optimize_delta, DeltaOptimum, DeltaTable};
pub use terms::{
    ball_average_integral, forms_r_alpha, forms_r_omega, forms_r_terms, forms_r_v, inhomogeneity_term_ef,
    modulus_term_ev, residual_terms, sampled_slices, BallSearch, FormConstants, FormTerms,
};

use crate::error::{Error, Result};
use crate::flux::{FormFlux, LambdaConstants};
use crate::geometry::Spacetime1p1;
use crate::solver::{ErrorMeasures, Trajectory};

/// Outer constant of the budget inequality, fixed once on the flat Burgers
/// viscosity baseline (largest observed/budget ratio, rounded up to one
/// significant figure) and reused everywhere else.
pub const C_CALIBRATED: f64 = 0.06;

/// Rounds `x > 0` up to one significant figure.
pub fn round_up_one_figure(x: f64) -> f64 {
    if !(x > 0.0) {
        return 0.0;
    }
    let p = 10f64.powf(x.log10().floor());
    let m = (x / p * (1.0 - 1e-12)).ceil();
    m * p
}

/// Smallest `C` with `lhs <= C rhs` for every pair, rounded up to one
/// significant figure.
pub fn calibrate_constant(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("calibration needs at least one (lhs, rhs) pair".into()));
    }
    let mut c = 0.0f64;
    for &(lhs, rhs) in pairs {
        if !(rhs > 0.0) {
            return Err(Error::Numerical(format!("calibration bound {rhs} is not positive")));
        }
        c = c.max(lhs / rhs);
    }
    Ok(round_up_one_figure(c))
}

/// Resolution of the ball sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BallQuadrature {
    /// Grid steps per radius.
    pub resolution: usize,
    /// Most slice times visited by suprema and time integrals.
    pub max_times: usize,
}

impl Default for BallQuadrature {
    fn default() -> Self {
        BallQuadrature {
            resolution: 16,
            max_times: 33,
        }
    }
}

impl BallQuadrature {
    pub fn step(&self, delta: f64) -> f64 {
        delta / self.resolution as f64
    }
}

/// The five terms of the metric estimate at one `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TheoremTerms {
    pub delta: f64,
    pub e_v: f64,
    pub e_f: f64,
    pub e_h: f64,
    pub e_k: f64,
    pub e_l: f64,
}

impl TheoremTerms {
    pub fn sum(&self) -> f64 {
        self.e_v + self.e_f + self.e_h + self.e_k + self.e_l
    }

    pub fn names() -> [&'static str; 5] {
        ["E_v", "E_f", "E_H", "E_K", "E_L"]
    }

    pub fn values(&self) -> [f64; 5] {
        [self.e_v, self.e_f, self.e_h, self.e_k, self.e_l]
    }
}

/// Everything needed to evaluate budgets for one pair of trajectories.
#[derive(Debug, Clone, Copy)]
pub struct BudgetInputs<'a> {
    pub st: &'a Spacetime1p1,
    /// The exact flux in form view.
    pub form: &'a FormFlux,
    /// The exact (reference) solution.
    pub v: &'a Trajectory,
    /// Error measures of the approximate solution.
    pub measures: &'a ErrorMeasures,
    pub lambdas: LambdaConstants,
    pub c_low: f64,
    pub c_high: f64,
    /// Mollifier constants `(A, b)` when certified.
    pub admissibility: Option<(f64, f64)>,
    pub c0: f64,
    pub quadrature: BallQuadrature,
}

impl BudgetInputs<'_> {
    pub fn theorem_terms(&self, delta: f64) -> Result<TheoremTerms> {
        let e_v = modulus_term_ev(self.v, self.st, &self.lambdas, delta, self.quadrature, BallSearch::Cached)?;
        let t0 = self.v.first().t;
        let t_len = self.v.last().t - t0;
        let e_f = inhomogeneity_term_ef(self.st, &self.lambdas, t0, t_len, delta);
        let (e_h, e_k, e_l) = residual_terms(self.measures, delta);
        Ok(TheoremTerms {
            delta,
            e_v,
            e_f,
            e_h,
            e_k,
            e_l,
        })
    }

    fn form_constants(&self) -> FormConstants {
        FormConstants {
            c_high: self.c_high,
            a: self.admissibility.map(|c| c.0),
            b: self.admissibility.map(|c| c.1),
            c0: self.c0,
        }
    }

    pub fn form_terms(&self, delta: f64) -> Result<FormTerms> {
        forms_r_terms(
            self.v,
            self.form,
            self.st,
            self.measures,
            delta,
            &self.form_constants(),
            self.quadrature,
        )
    }

    /// All terms at `delta`; fails with [`Error::Missing`] without mollifier constants.
    pub fn budget(&self, delta: f64) -> Result<ErrorBudget> {
        let (a, b) = self
            .admissibility
            .ok_or_else(|| Error::Missing("mollifier constants (A, b) for the remainder terms".into()))?;
        let e = self.theorem_terms(delta)?;
        let r = self.form_terms(delta)?;
        Ok(ErrorBudget {
            delta,
            e_v: e.e_v,
            e_f: e.e_f,
            e_h: e.e_h,
            e_k: e.e_k,
            e_l: e.e_l,
            r_v: r.r_v,
            r_omega: r.r_omega,
            r_alpha: r.r_alpha,
            lambdas: self.lambdas,
            c_low: self.c_low,
            c_high: self.c_high,
            a,
            b,
        })
    }
}

/// Every error term at one mollifier radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBudget {
    pub delta: f64,
    pub e_v: f64,
    pub e_f: f64,
    pub e_h: f64,
    pub e_k: f64,
    pub e_l: f64,
    pub r_v: f64,
    pub r_omega: f64,
    pub r_alpha: f64,
    pub lambdas: LambdaConstants,
    pub c_low: f64,
    pub c_high: f64,
    pub a: f64,
    pub b: f64,
}

impl ErrorBudget {
    pub fn theorem_terms(&self) -> TheoremTerms {
        TheoremTerms {
            delta: self.delta,
            e_v: self.e_v,
            e_f: self.e_f,
            e_h: self.e_h,
            e_k: self.e_k,
            e_l: self.e_l,
        }
    }

    /// `C (E_v + E_f + E_H + E_K + E_L)`.
    pub fn total_bound(&self, c: f64) -> f64 {
        c * self.theorem_terms().sum()
    }

    /// `R_v + R_omega + R_alpha`.
    pub fn form_total(&self) -> f64 {
        self.r_v + self.r_omega + self.r_alpha
    }
}

/// Observed growth of the flux distance against a tabulated bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    /// `D(T) - D(0)`.
    pub observed_lhs: f64,
    pub deltas: Vec<f64>,
    pub bound_rhs: Vec<f64>,
    pub delta_star: f64,
    /// `observed_lhs / bound_rhs(delta_star)`.
    pub ratio: f64,
    pub c: f64,
    pub verdict: bool,
}

impl BoundReport {
    /// Compares `observed_lhs` with `c` times the minimum of the table.
    pub fn new(observed_lhs: f64, opt: &DeltaOptimum, c: f64) -> Self {
        let bound = opt.totals[opt.argmin];
        BoundReport {
            observed_lhs,
            deltas: opt.deltas.clone(),
            bound_rhs: opt.totals.clone(),
            delta_star: opt.deltas[opt.argmin],
            ratio: if bound > 0.0 { observed_lhs / bound } else { f64::INFINITY },
            c,
            verdict: observed_lhs <= c * bound,
        }
    }
}

#[cfg(test)]
mod tests;
