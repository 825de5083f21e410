use serde::{Deserialize, Serialize};

use super::assignment::optimal_assignment;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OspaResult {
    pub total: f64,
    pub localization: f64,
    pub cardinality_component: f64,
    pub order_p: f64,
    pub cutoff_c: f64,
}

fn sorted(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut v = points.to_vec();
    v.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    v
}

/// OSPA distance of order `p` and cutoff `c` between two finite sets of
/// 2-D points.
pub fn ospa(truth: &[[f64; 2]], estimate: &[[f64; 2]], p: f64, c: f64) -> Result<OspaResult> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::ParameterDomain(format!("OSPA order must be >= 1, got {p}")));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::ParameterDomain(format!("OSPA cutoff must be positive, got {c}")));
    }
    let done = |total, loc, card| OspaResult {
        total,
        localization: loc,
        cardinality_component: card,
        order_p: p,
        cutoff_c: c,
    };
    // orientation fixed by size, then by content, so swapping arguments is exact
    let (a, b) = {
        let (x, y) = (sorted(truth), sorted(estimate));
        let key = |s: &Vec<[f64; 2]>| s.iter().flat_map(|q| [q[0].to_bits(), q[1].to_bits()]).collect::<Vec<_>>();
        if x.len() < y.len() || (x.len() == y.len() && key(&x) <= key(&y)) {
            (x, y)
        } else {
            (y, x)
        }
    };
    let (m, n) = (a.len(), b.len());
    if n == 0 {
        return Ok(done(0.0, 0.0, 0.0));
    }
    if m == 0 {
        return Ok(done(c, 0.0, c));
    }
    let cost: Vec<Vec<f64>> = a
        .iter()
        .map(|x| {
            b.iter()
                .map(|y| (x[0] - y[0]).hypot(x[1] - y[1]).min(c).powf(p))
                .collect()
        })
        .collect();
    let matched = optimal_assignment(&cost)?.cost;
    let card = c.powf(p) * (n - m) as f64;
    let nf = n as f64;
    let total = ((matched + card) / nf).powf(1.0 / p).min(c);
    Ok(done(
        total,
        (matched / nf).powf(1.0 / p),
        (card / nf).powf(1.0 / p),
    ))
}
