use crate::error::{Error, Result};

/// Bound terms tabulated on a grid of radii.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaTable {
    pub deltas: Vec<f64>,
    /// `(name, value at each delta)`.
    pub terms: Vec<(String, Vec<f64>)>,
}

impl DeltaTable {
    pub fn new(deltas: Vec<f64>) -> Self {
        DeltaTable { deltas, terms: Vec::new() }
    }

    pub fn with_term(mut self, name: impl Into<String>, values: Vec<f64>) -> Self {
        self.terms.push((name.into(), values));
        self
    }

    /// `n` log-spaced radii from `lo` to `hi`.
    pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let (a, b) = (lo.ln(), hi.ln());
        (0..n)
            .map(|i| match i {
                0 => lo,
                _ if i + 1 == n => hi,
                _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaOptimum {
    /// Radii in increasing order.
    pub deltas: Vec<f64>,
    pub totals: Vec<f64>,
    /// Grid index of the smallest total.
    pub argmin: usize,
    /// Minimiser refined by a parabola through the three grid points about
    /// the argmin in log-log coordinates (the grid value at the edges).
    pub delta_star: f64,
    pub min_total: f64,
    /// Fitted log-log slope of each term against `delta` (`None` when a
    /// term is not positive on the whole grid).
    pub slopes: Vec<(String, Option<f64>)>,
    /// The minimum sits on the first or last radius.
    pub boundary: bool,
    /// Why the table cannot be trusted, if it cannot.
    pub pathology: Option<String>,
}

fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if ys.iter().any(|y| !(*y > 0.0 && y.is_finite())) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Minimises the sum of the tabulated terms over `delta`.
pub fn optimize_delta(table: &DeltaTable) -> Result<DeltaOptimum> {
    let n = table.deltas.len();
    if n < 5 {
        return Err(Error::InvalidArgument(format!("delta grid needs at least 5 values, got {n}")));
    }
    if table.deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(Error::InvalidArgument("delta grid values must be positive and finite".into()));
    }
    if table.terms.is_empty() {
        return Err(Error::InvalidArgument("no terms to minimise".into()));
    }
    if let Some((name, v)) = table.terms.iter().find(|(_, v)| v.len() != n) {
        return Err(Error::Mismatch(format!("term {name} has {} values for {n} radii", v.len())));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| table.deltas[a].total_cmp(&table.deltas[b]));
    let deltas: Vec<f64> = order.iter().map(|&i| table.deltas[i]).collect();
    if deltas.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("delta grid has repeated values".into()));
    }
    if deltas[n - 1] / deltas[0] < 100.0 * (1.0 - 1e-9) {
        return Err(Error::InvalidArgument(format!(
            "delta grid [{}, {}] spans less than two decades",
            deltas[0],
            deltas[n - 1]
        )));
    }
    let terms: Vec<(String, Vec<f64>)> = table
        .terms
        .iter()
        .map(|(name, v)| (name.clone(), order.iter().map(|&i| v[i]).collect()))
        .collect();
    let totals: Vec<f64> = (0..n).map(|i| terms.iter().map(|(_, v)| v[i]).sum()).collect();

    let mut pathology = None;
    if let Some(i) = totals.iter().position(|v| !v.is_finite()) {
        pathology = Some(format!("total bound is not finite at delta = {}", deltas[i]));
    } else if let Some((name, _)) = terms.iter().find(|(_, v)| v.iter().any(|x| *x < 0.0)) {
        pathology = Some(format!("term {name} is negative"));
    } else {
        let local_minima = (1..n - 1)
            .filter(|&i| totals[i] < totals[i - 1] && totals[i] < totals[i + 1])
            .count();
        if local_minima > 1 {
            pathology = Some(format!("total bound has {local_minima} local minima"));
        }
    }
    if let Some(p) = &pathology {
        log::warn!("delta optimisation: {p}");
    }

    let argmin = (0..n)
        .filter(|&i| totals[i].is_finite())
        .min_by(|&a, &b| totals[a].total_cmp(&totals[b]))
        .ok_or_else(|| Error::Numerical("no finite total on the delta grid".into()))?;
    let boundary = argmin == 0 || argmin == n - 1;
    if boundary {
        log::warn!("delta optimisation: minimum on the grid edge delta = {}", deltas[argmin]);
    }

    let (mut delta_star, mut min_total) = (deltas[argmin], totals[argmin]);
    if !boundary && totals[argmin - 1..=argmin + 1].iter().all(|v| *v > 0.0) {
        let s: Vec<f64> = (argmin - 1..=argmin + 1).map(|i| deltas[i].ln()).collect();
        let y: Vec<f64> = (argmin - 1..=argmin + 1).map(|i| totals[i].ln()).collect();
        let d01 = (y[1] - y[0]) / (s[1] - s[0]);
        let d12 = (y[2] - y[1]) / (s[2] - s[1]);
        let curv = (d12 - d01) / (s[2] - s[0]);
        if curv > 0.0 {
            // y = y1 + d (s - s1) + curv (s - s1)^2 with the slope d at s1
            let d = d01 + curv * (s[1] - s[0]);
            let shift = (-d / (2.0 * curv)).clamp(s[0] - s[1], s[2] - s[1]);
            delta_star = (s[1] + shift).exp();
            min_total = (y[1] + d * shift + curv * shift * shift).exp();
        }
    }

    let slopes = terms.iter().map(|(name, v)| (name.clone(), slope(&deltas, v))).collect();
    Ok(DeltaOptimum {
        deltas,
        totals,
        argmin,
        delta_star,
        min_total,
        slopes,
        boundary,
        pathology,
    })
}
