//! Closed-form regions and capacity expressions.

use crate::channel::{BlackwellParams, GaussianOrthogonalParams, ParallelRbcChannel, RbcChannel};
use crate::cloud::{pareto_filter, CloudPoint, RegionCloud};
use crate::error::{RbcError, Result};
use crate::exec::Exec;
use crate::info::{binary_entropy, entropy_of, gaussian_cap, FiniteDist};
use crate::polytope::NumericPolytope;

use super::vertex_cloud;

/// (R1, R2) region of the Blackwell relay broadcast channel for one input
/// law; `r = 0` gives the plain Blackwell broadcast channel.
pub fn blackwell_region(params: &BlackwellParams) -> Result<NumericPolytope> {
    let BlackwellParams { r, alpha, beta } = *params;
    let gamma = (1.0 - alpha - beta).max(0.0);
    let rows = vec![
        (vec![1.0, 0.0], binary_entropy(beta)?),
        (vec![0.0, 1.0], r + binary_entropy(alpha)?),
        (vec![1.0, 1.0], entropy_of(&[alpha, beta, gamma])),
    ];
    NumericPolytope::with_auto_box(vec!["R1".into(), "R2".into()], rows)
}

/// Union of [`blackwell_region`] vertices over the grid `alpha = i/grid`,
/// `beta = j/grid`, `i + j <= grid`, Pareto-filtered. Source ids number the
/// grid cells in (i, j) order.
pub fn blackwell_frontier(r: f64, grid: usize, exec: Exec) -> Result<RegionCloud> {
    if grid < 2 {
        return Err(RbcError::input("grid must be at least 2"));
    }
    let cells: Vec<(usize, usize)> = (0..=grid).flat_map(|i| (0..=grid - i).map(move |j| (i, j))).collect();
    let g = grid as f64;
    let parts = exec.map(cells.len(), |k| -> Result<Vec<CloudPoint>> {
        let (i, j) = cells[k];
        let p = BlackwellParams::new(r, i as f64 / g, j as f64 / g)?;
        vertex_cloud(&blackwell_region(&p)?, k as u64)
    });
    let mut points = Vec::new();
    for p in parts {
        points.extend(p?);
    }
    let mut cloud = pareto_filter(&RegionCloud::new(points));
    cloud.sort_canonical();
    Ok(cloud.with_meta("region", "blackwell").with_meta("r", r).with_meta("grid", grid))
}

/// Power split `alpha` (to the relay link) and correlation `beta`.
pub fn gaussian_orthogonal_region(g: &GaussianOrthogonalParams, alpha: f64, beta: f64) -> Result<NumericPolytope> {
    if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&beta) {
        return Err(RbcError::input(format!("alpha and beta must lie in [0, 1], got ({alpha}, {beta})")));
    }
    let abar = 1.0 - alpha;
    let c1 = gaussian_cap(alpha * g.p / g.n1)?;
    let c2 = gaussian_cap((g.p1 + abar * g.p + 2.0 * (beta * abar * g.p * g.p1).sqrt()) / g.n2)?;
    let c3 = gaussian_cap(beta * abar * g.p / g.n2)?;
    let rows = vec![
        (vec![1.0, 1.0, 0.0], c1),
        (vec![1.0, 0.0, 1.0], c2),
        (vec![1.0, 1.0, 1.0], c1 + c3),
    ];
    NumericPolytope::with_auto_box(vec!["R0".into(), "R1".into(), "R2".into()], rows)
}

/// Union over `alpha, beta` on a `(grid+1)^2` lattice, Pareto-filtered.
pub fn gaussian_frontier(g: &GaussianOrthogonalParams, grid: usize, exec: Exec) -> Result<RegionCloud> {
    if grid < 2 {
        return Err(RbcError::input("grid must be at least 2"));
    }
    let n = (grid + 1) * (grid + 1);
    let gf = grid as f64;
    let parts = exec.map(n, |k| -> Result<Vec<CloudPoint>> {
        let (i, j) = (k / (grid + 1), k % (grid + 1));
        vertex_cloud(&gaussian_orthogonal_region(g, i as f64 / gf, j as f64 / gf)?, k as u64)
    });
    let mut points = Vec::new();
    for p in parts {
        points.extend(p?);
    }
    let mut cloud = pareto_filter(&RegionCloud::new(points));
    cloud.sort_canonical();
    Ok(cloud.with_meta("region", "gaussian-orthogonal").with_meta("grid", grid))
}

/// Partial decode-and-forward rate `min{I(X1,X;Y2), I(T;Y1|X1) + I(X;Y2|T,X1)}`
/// for an input law p(t, x1, x) (x fastest).
pub fn eval_relay_pdf_rate(ch: &RbcChannel, card_t: usize, p_tx1x: &[f64]) -> Result<f64> {
    let [cx, cx1, cy1, cy2] = ch.cards();
    let input = FiniteDist::new(vec![("T", card_t), ("X1", cx1), ("X", cx)], p_tx1x.to_vec())?;
    let d = FiniteDist::from_fn(
        vec![("T", card_t), ("X1", cx1), ("X", cx), ("Y1", cy1), ("Y2", cy2)],
        |i| input.probs()[(i[0] * cx1 + i[1]) * cx + i[2]] * ch.p(i[2], i[1], i[3], i[4]),
    )?;
    let direct = d.cond_mutual_info(&["X1", "X"], &["Y2"], &[])?;
    let relayed = d.cond_mutual_info(&["T"], &["Y1"], &["X1"])? + d.cond_mutual_info(&["X"], &["Y2"], &["T", "X1"])?;
    Ok(direct.min(relayed))
}

/// All points `k / grid` of the probability simplex in `n` dimensions.
pub(crate) fn simplex_grid(n: usize, grid: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, grid: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() == n - 1 {
            cur.push(left);
            out.push(cur.iter().map(|&k| k as f64 / grid as f64).collect());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(n, left - k, grid, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, grid, grid, &mut Vec::new(), &mut out);
    out
}

/// (I(X,X1;Y2), I(X;Y1|X1), I(X;Y2|X1)) for one subchannel input law p(x, x1)
/// (x1 fastest).
fn sub_terms(ch: &RbcChannel, law: &[f64]) -> Result<[f64; 3]> {
    let [cx, cx1, cy1, cy2] = ch.cards();
    let d = FiniteDist::from_fn(vec![("X", cx), ("X1", cx1), ("Y1", cy1), ("Y2", cy2)], |i| {
        law[i[0] * cx1 + i[1]] * ch.p(i[0], i[1], i[2], i[3])
    })?;
    Ok([
        d.cond_mutual_info(&["X", "X1"], &["Y2"], &[])?,
        d.cond_mutual_info(&["X"], &["Y1"], &["X1"])?,
        d.cond_mutual_info(&["X"], &["Y2"], &["X1"])?,
    ])
}

fn grid_terms(ch: &RbcChannel, grid: usize, exec: Exec) -> Result<Vec<(Vec<f64>, [f64; 3])>> {
    let [cx, cx1, _, _] = ch.cards();
    let laws = simplex_grid(cx * cx1, grid);
    let terms = exec.map(laws.len(), |k| sub_terms(ch, &laws[k]));
    laws.into_iter().zip(terms).map(|(l, t)| t.map(|t| (l, t))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParallelCapacity {
    pub value: f64,
    /// Maximizing p(xa, x1a), x1a fastest.
    pub law_a: Vec<f64>,
    /// Maximizing p(xb, x1b), x1b fastest.
    pub law_b: Vec<f64>,
}

/// `max min{I(Xa,X1a;Y2a) + I(Xb,X1b;Y2b), I(Xa;Y1a|X1a) + I(Xb;Y2b|X1b)}`
/// over gridded input laws on the two subchannels.
pub fn parallel_relay_capacity(ch: &ParallelRbcChannel, grid: usize, exec: Exec) -> Result<ParallelCapacity> {
    if grid < 2 {
        return Err(RbcError::input("grid must be at least 2"));
    }
    // Only pairs on the (first, second)-term Pareto front of each side can win.
    let front = |v: Vec<(Vec<f64>, [f64; 3])>, first: usize, second: usize| {
        let mut v: Vec<(Vec<f64>, f64, f64)> = v.into_iter().map(|(l, t)| (l, t[first], t[second])).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(b.2.total_cmp(&a.2)));
        let mut out: Vec<(Vec<f64>, f64, f64)> = Vec::new();
        for e in v {
            if out.last().is_none_or(|l| e.2 > l.2) {
                out.push(e);
            }
        }
        out
    };
    let a = front(grid_terms(&ch.sub_a, grid, exec)?, 0, 1);
    let b = front(grid_terms(&ch.sub_b, grid, exec)?, 0, 2);
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for (i, (_, a1, a2)) in a.iter().enumerate() {
        for (j, (_, b1, b2)) in b.iter().enumerate() {
            let v = (a1 + b1).min(a2 + b2);
            if v > best.0 {
                best = (v, i, j);
            }
        }
    }
    Ok(ParallelCapacity { value: best.0, law_a: a[best.1].0.clone(), law_b: b[best.2].0.clone() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubchannelCapacities {
    pub ca: f64,
    pub cb: f64,
}

impl SubchannelCapacities {
    pub fn sum(&self) -> f64 {
        self.ca + self.cb
    }
}

/// Degraded relay capacity of each subchannel on its own.
pub fn subchannel_capacities(ch: &ParallelRbcChannel, grid: usize, exec: Exec) -> Result<SubchannelCapacities> {
    if grid < 2 {
        return Err(RbcError::input("grid must be at least 2"));
    }
    ch.require_degraded()?;
    let ca = grid_terms(&ch.sub_a, grid, exec)?.iter().map(|(_, t)| t[0].min(t[1])).fold(0.0, f64::max);
    let cb = grid_terms(&ch.sub_b, grid, exec)?.iter().map(|(_, t)| t[2]).fold(0.0, f64::max);
    Ok(SubchannelCapacities { ca, cb })
}
