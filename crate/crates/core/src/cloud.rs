//! Rate-point clouds standing in for union-over-distributions regions.

use std::path::Path;

use minilp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{RbcError, Result};
use crate::exec::Exec;

/// Tolerance for dominance and duplicate detection in [`pareto_filter`].
pub const PARETO_TOL: f64 = 1e-12;
const CLAMP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RateTriple {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
}

impl RateTriple {
    /// Components in `[-1e-9, 0)` are clamped to zero; anything more
    /// negative or non-finite is rejected.
    pub fn new(r0: f64, r1: f64, r2: f64) -> Result<Self> {
        let fix = |v: f64, name: &str| -> Result<f64> {
            if !v.is_finite() || v < -CLAMP_TOL {
                return Err(RbcError::Numerical(format!("rate {name} = {v} is not a finite nonnegative value")));
            }
            Ok(v.max(0.0))
        };
        Ok(RateTriple { r0: fix(r0, "r0")?, r1: fix(r1, "r1")?, r2: fix(r2, "r2")? })
    }

    pub fn zero() -> Self {
        RateTriple::default()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.r0, self.r1, self.r2]
    }

    pub fn from_array(a: [f64; 3]) -> Result<Self> {
        RateTriple::new(a[0], a[1], a[2])
    }

    pub fn sum(&self) -> f64 {
        self.r0 + self.r1 + self.r2
    }

    pub fn dot(&self, w: &[f64; 3]) -> f64 {
        self.r0 * w[0] + self.r1 * w[1] + self.r2 * w[2]
    }

    pub fn add(&self, o: &RateTriple) -> RateTriple {
        RateTriple { r0: self.r0 + o.r0, r1: self.r1 + o.r1, r2: self.r2 + o.r2 }
    }

    /// `self` is at least `o` in every coordinate (within `tol`) and
    /// strictly larger than `o + tol` in one.
    pub fn dominates(&self, o: &RateTriple, tol: f64) -> bool {
        let (a, b) = (self.as_array(), o.as_array());
        a.iter().zip(&b).all(|(x, y)| *x >= y - tol) && a.iter().zip(&b).any(|(x, y)| *x > y + tol)
    }

    fn near(&self, o: &RateTriple, tol: f64) -> bool {
        self.as_array().iter().zip(&o.as_array()).all(|(x, y)| (x - y).abs() <= tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudPoint {
    pub rate: RateTriple,
    /// Index of the sample (aux draw or grid cell) that produced the point.
    pub source: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegionCloud {
    pub points: Vec<CloudPoint>,
    /// Provenance as `key=value` pairs, written as `#` lines in CSV.
    pub meta: Vec<(String, String)>,
}

impl RegionCloud {
    pub fn new(points: Vec<CloudPoint>) -> Self {
        RegionCloud { points, meta: Vec::new() }
    }

    pub fn from_triples(triples: impl IntoIterator<Item = RateTriple>) -> Self {
        RegionCloud::new(
            triples.into_iter().enumerate().map(|(i, rate)| CloudPoint { rate, source: i as u64 }).collect(),
        )
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.set_meta(key, value);
        self
    }

    pub fn set_meta(&mut self, key: impl Into<String>, value: impl ToString) {
        let key = key.into();
        let value = value.to_string();
        match self.meta.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.meta.push((key, value)),
        }
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn triples(&self) -> impl Iterator<Item = &RateTriple> {
        self.points.iter().map(|p| &p.rate)
    }

    /// `max_p w . p`, or `-inf` for an empty cloud.
    pub fn support(&self, w: &[f64; 3]) -> f64 {
        self.triples().map(|p| p.dot(w)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_coord(&self, axis: usize) -> f64 {
        self.triples().map(|p| p.as_array()[axis]).fold(0.0, f64::max)
    }

    /// Sorts by coordinates, then source id.
    pub fn sort_canonical(&mut self) {
        self.points.sort_by(|a, b| {
            let (x, y) = (a.rate.as_array(), b.rate.as_array());
            x[0].total_cmp(&y[0])
                .then(x[1].total_cmp(&y[1]))
                .then(x[2].total_cmp(&y[2]))
                .then(a.source.cmp(&b.source))
        });
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k}={v}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["r0", "r1", "r2", "source_sample_id"]).expect("in-memory write");
        for p in &self.points {
            w.write_record([
                format!("{}", p.rate.r0),
                format!("{}", p.rate.r1),
                format!("{}", p.rate.r2),
                p.source.to_string(),
            ])
            .expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("ascii csv"));
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta = Vec::new();
        for line in text.lines() {
            if let Some(rest) = line.trim_start().strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    meta.push((k.trim().to_string(), v.trim().to_string()));
                }
            }
        }
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| RbcError::input(format!("bad cloud CSV: {e}")))?.clone();
        let cols: Vec<&str> = headers.iter().map(str::trim).collect();
        if cols.len() < 3 || cols[..3] != ["r0", "r1", "r2"] {
            return Err(RbcError::input(format!("cloud CSV header must start r0,r1,r2, found {cols:?}")));
        }
        let mut points = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| RbcError::input(format!("bad cloud CSV row {}: {e}", i + 1)))?;
            let num = |j: usize| -> Result<f64> {
                rec.get(j)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| RbcError::input(format!("row {}: column {j} is not a number", i + 1)))
            };
            let rate = RateTriple::new(num(0)?, num(1)?, num(2)?)
                .map_err(|e| RbcError::input(format!("row {}: {e}", i + 1)))?;
            let source = match rec.get(3) {
                Some(s) => s
                    .trim()
                    .parse()
                    .map_err(|_| RbcError::input(format!("row {}: bad source id {s:?}", i + 1)))?,
                None => i as u64,
            };
            points.push(CloudPoint { rate, source });
        }
        Ok(RegionCloud { points, meta })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| RbcError::io(path, e))?;
        RegionCloud::from_csv(&text)
    }
}

/// Keeps points not dominated by another point at [`PARETO_TOL`]; of
/// near-identical points only the first survives. Input order is preserved.
pub fn pareto_filter(cloud: &RegionCloud) -> RegionCloud {
    let n = cloud.points.len();
    let mut order: Vec<usize> = (0..n).collect();
    let sum = |i: usize| cloud.points[i].rate.sum();
    order.sort_by(|&a, &b| sum(b).total_cmp(&sum(a)).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for &i in &order {
        let p = &cloud.points[i].rate;
        let beaten = kept.iter().any(|&k| {
            let q = &cloud.points[k].rate;
            q.dominates(p, PARETO_TOL) || (q.near(p, PARETO_TOL) && k < i)
        });
        if beaten {
            continue;
        }
        kept.retain(|&k| {
            let q = &cloud.points[k].rate;
            !(p.dominates(q, PARETO_TOL) || (p.near(q, PARETO_TOL) && i < k))
        });
        kept.push(i);
    }
    kept.sort_unstable();
    RegionCloud { points: kept.into_iter().map(|i| cloud.points[i]).collect(), meta: cloud.meta.clone() }
}

/// Pairwise sums of the two (Pareto-reduced) clouds, then [`pareto_filter`].
/// Source ids index the pair `ia * |b| + ib` of the reduced inputs.
pub fn minkowski_sum(a: &RegionCloud, b: &RegionCloud) -> RegionCloud {
    let (pa, pb) = (pareto_filter(a), pareto_filter(b));
    let nb = pb.points.len() as u64;
    let mut points = Vec::with_capacity(pa.len() * pb.len());
    for (i, p) in pa.points.iter().enumerate() {
        for (j, q) in pb.points.iter().enumerate() {
            points.push(CloudPoint { rate: p.rate.add(&q.rate), source: i as u64 * nb + j as u64 });
        }
    }
    pareto_filter(&RegionCloud::new(points))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DominanceMode {
    /// Each inner point must sit below a single outer point.
    Pointwise,
    /// Each inner point must sit below the convex hull of the outer points
    /// (time-sharing closure).
    #[default]
    Hull,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dominance {
    pub holds: bool,
    /// Largest violation over inner points (0 when every point is covered).
    pub worst_gap: f64,
    /// Index into the inner cloud of the worst point.
    pub worst_index: Option<usize>,
}

/// Gap of `p` against single outer points: `min_o max_i (p_i - o_i)^+`.
pub fn pointwise_gap(outer: &[RateTriple], p: &RateTriple) -> f64 {
    let pa = p.as_array();
    outer
        .iter()
        .map(|o| {
            let oa = o.as_array();
            (0..3).map(|i| (pa[i] - oa[i]).max(0.0)).fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Smallest `s >= 0` with `p <= h + s*(1,1,1)` for some convex
/// combination `h` of outer points; solved as a small LP.
pub fn hull_gap(outer: &[RateTriple], p: &RateTriple) -> Result<f64> {
    if outer.is_empty() {
        return Ok(f64::INFINITY);
    }
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let s = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    let lambdas: Vec<_> = outer.iter().map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    lp.add_constraint(lambdas.iter().map(|&l| (l, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
    let pa = p.as_array();
    for i in 0..3 {
        let mut row: Vec<_> = lambdas.iter().zip(outer).map(|(&l, o)| (l, o.as_array()[i])).collect();
        row.push((s, 1.0));
        lp.add_constraint(row, ComparisonOp::Ge, pa[i]);
    }
    let sol = lp.solve().map_err(|e| RbcError::Numerical(format!("hull LP failed: {e}")))?;
    Ok(sol.objective().max(0.0))
}

/// Checks that every inner point is covered by the outer cloud within `tol`.
pub fn cloud_dominates(
    outer: &RegionCloud,
    inner: &RegionCloud,
    tol: f64,
    mode: DominanceMode,
    exec: Exec,
) -> Result<Dominance> {
    let reduced: Vec<RateTriple> = pareto_filter(outer).triples().copied().collect();
    let gaps = exec.map(inner.points.len(), |i| -> Result<f64> {
        let p = &inner.points[i].rate;
        let g = pointwise_gap(&reduced, p);
        if g <= tol || mode == DominanceMode::Pointwise {
            return Ok(g);
        }
        hull_gap(&reduced, p)
    });
    let mut worst = (0.0f64, None);
    for (i, g) in gaps.into_iter().enumerate() {
        let g = g?;
        if worst.1.is_none() || g > worst.0 {
            worst = (g, Some(i));
        }
    }
    Ok(Dominance { holds: worst.0 <= tol, worst_gap: worst.0, worst_index: worst.1 })
}
