//! Frontier search over auxiliary distributions.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::channel::Channel;
use crate::cloud::{pareto_filter, CloudPoint, RegionCloud};
use crate::error::{RbcError, Result};
use crate::exec::{rng_for, Exec};

use super::aux::{Aux, AuxJoint, BcOuterAux, Factor, FactorShape, OrthogonalAux, OuterJoint, ParallelAux, SubAux};
use super::{eval_region, frontier_meta, vertex_cloud, TheoremId};

pub const MAX_AUX_CARD: usize = 4;
const SEARCH_STREAM: u64 = 0x5EA7C4;
const REFINE_STREAM: u64 = 0x5EA7C5;
const SPARSE_CONCENTRATION: f64 = 0.3;
pub const DEFAULT_REFINE: f64 = 0.75;
/// Children per direction in one refinement round.
const ROUND_PER_DIRECTION: usize = 1;
const ELITE: usize = 3;
const ELITE_TIE: f64 = 1e-12;
const STEP_SCALES: [f64; 4] = [1.0, 0.3, 0.1, 0.03];

/// Auxiliary alphabet sizes. Ids that do not use an auxiliary ignore it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AuxCards {
    pub t: usize,
    pub u1: usize,
    pub u2: usize,
    /// U of the outer bounds and of the semideterministic region.
    pub u: usize,
    pub v: usize,
}

impl Default for AuxCards {
    fn default() -> Self {
        AuxCards { t: 2, u1: 2, u2: 2, u: 2, v: 2 }
    }
}

impl AuxCards {
    pub fn uniform(k: usize) -> Self {
        AuxCards { t: k, u1: k, u2: k, u: k, v: k }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, c) in [("T", self.t), ("U1", self.u1), ("U2", self.u2), ("U", self.u), ("V", self.v)] {
            if c == 0 {
                return Err(RbcError::input(format!("|{name}| = 0")));
            }
            if c > MAX_AUX_CARD {
                return Err(RbcError::input(format!("|{name}| = {c} exceeds the supported maximum {MAX_AUX_CARD}")));
            }
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        format!("T={},U1={},U2={},U={},V={}", self.t, self.u1, self.u2, self.u, self.v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub cards: AuxCards,
    pub budget: usize,
    pub seed: u64,
    /// Directions whose support values are recorded in the cloud metadata.
    pub weights: Vec<[f64; 3]>,
    /// Share of the budget spent perturbing the best samples found so far
    /// (in `[0, 1)`); the rest is the fixed exploration schedule.
    pub refine: f64,
    pub exec: Exec,
}

impl SearchConfig {
    pub fn new(budget: usize, seed: u64) -> Self {
        SearchConfig {
            cards: AuxCards::default(),
            budget,
            seed,
            weights: Vec::new(),
            refine: DEFAULT_REFINE,
            exec: Exec::default(),
        }
    }

    /// Number of exploration samples; at least one, and every structured
    /// corner when the budget allows.
    fn explore_count(&self, corners: usize) -> usize {
        let refine = (self.budget as f64 * self.refine).floor() as usize;
        (self.budget - refine.min(self.budget)).max(self.budget.min(corners + 1))
    }
}

/// Factor layout of the auxiliary for `id` on `ch`.
enum Layout {
    Joint([usize; 5]),
    /// Cards `[t, u, x, x1, y1]` and p(y1 | x, x1) in (x, x1, y1) order.
    Outer([usize; 5], Vec<f64>),
    BcOuter([usize; 4]),
    Orthogonal([usize; 3]),
    Parallel([usize; 3], [usize; 3]),
}

impl Layout {
    fn of(id: TheoremId, ch: &Channel, c: &AuxCards) -> Result<Layout> {
        use TheoremId::*;
        let rbc_cards = || match ch {
            Channel::Rbc(r) => Ok(r.cards()),
            other => Err(RbcError::input(format!("{id} needs an rbc channel, got {}", other.kind()))),
        };
        Ok(match id.aux_kind() {
            "joint" => {
                let [cx, cx1, _, _] = rbc_cards()?;
                let x1 = if matches!(id, BcInner | BcMarton) { 1 } else { cx1 };
                let (t, u1, u2) = match id {
                    DmInner | Det => (c.t, 1, 1),
                    DetPrivate => (1, 1, 1),
                    Semidet => (c.t, 1, c.u),
                    _ => (c.t, c.u1, c.u2),
                };
                Layout::Joint([x1, t, u1, u2, cx])
            }
            "outer" => {
                let [cx, cx1, cy1, _] = rbc_cards()?;
                let u = if id == DmOuter { 1 } else { c.u };
                let Channel::Rbc(r) = ch else { unreachable!("rbc_cards checked the kind") };
                let mut py1 = Vec::with_capacity(cx * cx1 * cy1);
                for x in 0..cx {
                    for x1 in 0..cx1 {
                        py1.extend((0..cy1).map(|y1| r.p_y1(x, x1, y1)));
                    }
                }
                Layout::Outer([c.t, u, cx, cx1, cy1], py1)
            }
            "bc-outer" => Layout::BcOuter([c.t, c.u, c.v, rbc_cards()?[0]]),
            "orthogonal" => match ch {
                Channel::Orthogonal(o) => {
                    let [xr, xd, x1, _, _] = o.cards();
                    Layout::Orthogonal([x1, xr, xd])
                }
                other => return Err(RbcError::input(format!("{id} needs an orthogonal channel, got {}", other.kind()))),
            },
            _ => match ch {
                Channel::Parallel(p) => {
                    let [xa, x1a, _, _] = p.sub_a.cards();
                    let [xb, x1b, _, _] = p.sub_b.cards();
                    let (ta, tb) = match id {
                        ParallelOuter => (1, 1),
                        ParallelDm | ParallelSubA => (c.t, 1),
                        ParallelSubB => (1, c.t),
                        _ => (c.t, c.t),
                    };
                    Layout::Parallel([x1a, ta, xa], [x1b, tb, xb])
                }
                other => return Err(RbcError::input(format!("{id} needs a parallel channel, got {}", other.kind()))),
            },
        })
    }

    fn shapes(&self) -> Vec<FactorShape> {
        match self {
            Layout::Joint(c) => AuxJoint::shapes(*c),
            Layout::Outer(c, _) => OuterJoint::shapes(*c),
            Layout::BcOuter(c) => BcOuterAux::shapes(*c),
            Layout::Orthogonal(c) => OrthogonalAux::shapes(*c),
            Layout::Parallel(a, b) => {
                let mut s = SubAux::shapes(*a);
                s.extend(SubAux::shapes(*b));
                s
            }
        }
    }

    fn assemble(&self, mut f: Vec<Factor>) -> Result<Aux> {
        Ok(match self {
            Layout::Joint(c) => Aux::Joint(AuxJoint::new(*c, f)?),
            Layout::Outer(c, _) => Aux::Outer(OuterJoint::new(*c, f)?),
            Layout::BcOuter(c) => Aux::BcOuter(BcOuterAux::new(*c, f)?),
            Layout::Orthogonal(c) => Aux::Orthogonal(OrthogonalAux::new(*c, f)?),
            Layout::Parallel(a, b) => {
                let fb = f.split_off(SubAux::shapes(*a).len());
                Aux::Parallel(ParallelAux { a: SubAux::new(*a, f)?, b: SubAux::new(*b, fb)? })
            }
        })
    }
}

/// Deterministic structured choices tried first: all-uniform, then for each
/// factor (last first) a point-mass copy of each parent or of the parent
/// sum, everything else uniform.
fn structured(shapes: &[FactorShape]) -> Vec<Vec<Factor>> {
    let uniform = || -> Vec<Factor> {
        shapes.iter().map(|s| Factor::uniform(s.parents.clone(), s.width).expect("valid shape")).collect()
    };
    let mut out = vec![uniform()];
    for (k, s) in shapes.iter().enumerate().rev() {
        if s.width == 1 {
            continue;
        }
        let mut maps: Vec<Box<dyn Fn(&[usize]) -> usize>> = Vec::new();
        for j in 0..s.parents.len() {
            if s.parents[j] > 1 {
                maps.push(Box::new(move |i: &[usize]| i[j]));
            }
        }
        if s.parents.iter().filter(|&&c| c > 1).count() > 1 {
            maps.push(Box::new(|i: &[usize]| i.iter().sum()));
        }
        for m in maps {
            let mut f = uniform();
            f[k] = Factor::deterministic(s.parents.clone(), s.width, m).expect("valid shape");
            out.push(f);
        }
    }
    out
}

fn dirichlet_row(rng: &mut ChaCha8Rng, n: usize, alpha: f64) -> Vec<f64> {
    let g = Gamma::new(alpha, 1.0).expect("positive shape");
    loop {
        let w: Vec<f64> = (0..n).map(|_| g.sample(rng)).collect();
        let s: f64 = w.iter().sum();
        if s > 0.0 && s.is_finite() {
            return w.into_iter().map(|x| x / s).collect();
        }
    }
}

fn random_factor(rng: &mut ChaCha8Rng, s: &FactorShape, alpha: f64, point_mass: bool) -> Factor {
    let n: usize = s.parents.iter().product();
    let mut rows = Vec::with_capacity(n * s.width);
    for _ in 0..n {
        if point_mass {
            let mut r = vec![0.0; s.width];
            r[rng.gen_range(0..s.width)] = 1.0;
            rows.extend(r);
        } else {
            rows.extend(dirichlet_row(rng, s.width, alpha));
        }
    }
    Factor::new(s.parents.clone(), s.width, rows).expect("rows are stochastic")
}

/// Factors for sample `i`: structured choices first, then a rotation of
/// flat Dirichlet, Dirichlet with one point-mass factor, and sparse
/// Dirichlet. Joint layouts add a fourth slot drawn in the reverse order
/// (see [`reverse_joint`]).
fn sample_factors(layout: &Layout, shapes: &[FactorShape], corners: &[Vec<Factor>], seed: u64, i: usize) -> Vec<Factor> {
    if i < corners.len() {
        return corners[i].clone();
    }
    let mut rng = rng_for(seed, SEARCH_STREAM, i as u64);
    let slots = if matches!(layout, Layout::Joint(_)) { 4 } else { 3 };
    match (i - corners.len()) % slots {
        0 => shapes.iter().map(|s| random_factor(&mut rng, s, 1.0, false)).collect(),
        1 => {
            let k = rng.gen_range(0..shapes.len());
            shapes.iter().enumerate().map(|(j, s)| random_factor(&mut rng, s, 1.0, j == k)).collect()
        }
        2 => shapes.iter().map(|s| random_factor(&mut rng, s, SPARSE_CONCENTRATION, false)).collect(),
        _ => match layout {
            Layout::Joint(c) => reverse_joint(&mut rng, *c),
            _ => unreachable!("only joint layouts use the fourth slot"),
        },
    }
}

/// Draws p(x1, x) q(t, u1, u2 | x, x1), with each row of q a point mass
/// or a sparse Dirichlet draw, and refactors the joint into the chain
/// p(x1) p(t | x1) p(u1, u2 | t, x1) p(x | t, u1, u2, x1). Auxiliaries that
/// are functions of the input are then as likely as inputs that are
/// functions of the auxiliaries.
fn reverse_joint(rng: &mut ChaCha8Rng, cards: [usize; 5]) -> Vec<Factor> {
    let [cx1, ct, cu1, cu2, cx] = cards;
    let alpha = if rng.gen_bool(0.5) { 1.0 } else { SPARSE_CONCENTRATION };
    let p_in = dirichlet_row(rng, cx1 * cx, alpha);
    let mut q = Vec::with_capacity(cx1 * cx * ct * cu1 * cu2);
    for _ in 0..cx1 * cx {
        q.extend(if rng.gen_bool(0.5) { point_mass(rng, ct * cu1 * cu2) } else { dirichlet_row(rng, ct * cu1 * cu2, SPARSE_CONCENTRATION) });
    }
    chain_from_joint(cards, &joint_from_reverse(cards, &p_in, &q))
}

fn point_mass(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut r = vec![0.0; n];
    r[rng.gen_range(0..n)] = 1.0;
    r
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.into_iter().map(|a| a / s).collect()
    } else {
        vec![1.0 / v.len() as f64; v.len()]
    }
}

// Joint tables over (x1, t, w, x) with w = u1 * |U2| + u2, flattened in that order.

fn joint_from_reverse(cards: [usize; 5], p_in: &[f64], q: &[f64]) -> Vec<f64> {
    let [cx1, ct, cu1, cu2, cx] = cards;
    let cw = cu1 * cu2;
    let mut joint = vec![0.0; cx1 * ct * cw * cx];
    for x1 in 0..cx1 {
        for x in 0..cx {
            let r = x1 * cx + x;
            for k in 0..ct * cw {
                joint[(x1 * ct * cw + k) * cx + x] = p_in[r] * q[r * ct * cw + k];
            }
        }
    }
    joint
}

/// Inverse of [`joint_from_reverse`]; rows conditioned on a null event are uniform.
fn reverse_from_joint(cards: [usize; 5], joint: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let [cx1, ct, cu1, cu2, cx] = cards;
    let ctw = ct * cu1 * cu2;
    let mut p_in = Vec::with_capacity(cx1 * cx);
    let mut q = Vec::with_capacity(cx1 * cx * ctw);
    for x1 in 0..cx1 {
        for x in 0..cx {
            let row: Vec<f64> = (0..ctw).map(|k| joint[(x1 * ctw + k) * cx + x]).collect();
            p_in.push(row.iter().sum());
            q.extend(normalized(row));
        }
    }
    (normalized(p_in), q)
}

fn joint_from_chain(cards: [usize; 5], f: &[Factor]) -> Vec<f64> {
    let [cx1, ct, cu1, cu2, cx] = cards;
    let cw = cu1 * cu2;
    let mut joint = vec![0.0; cx1 * ct * cw * cx];
    for x1 in 0..cx1 {
        for t in 0..ct {
            for w in 0..cw {
                for x in 0..cx {
                    joint[((x1 * ct + t) * cw + w) * cx + x] = f[0].p(&[], x1)
                        * f[1].p(&[x1], t)
                        * f[2].p(&[t, x1], w)
                        * f[3].p(&[t, w / cu2, w % cu2, x1], x);
                }
            }
        }
    }
    joint
}

/// Chain factors of a joint; rows conditioned on a null event are uniform.
fn chain_from_joint(cards: [usize; 5], joint: &[f64]) -> Vec<Factor> {
    let [cx1, ct, cu1, cu2, cx] = cards;
    let cw = cu1 * cu2;
    let at = |x1: usize, t: usize, w: usize, x: usize| joint[((x1 * ct + t) * cw + w) * cx + x];
    let m_x1 = normalized((0..cx1).map(|x1| (0..ct * cw * cx).map(|r| joint[x1 * ct * cw * cx + r]).sum()).collect());
    let mut p_t = Vec::with_capacity(cx1 * ct);
    for x1 in 0..cx1 {
        p_t.extend(normalized((0..ct).map(|t| (0..cw * cx).map(|r| at(x1, t, r / cx, r % cx)).sum()).collect()));
    }
    let mut p_u = Vec::with_capacity(ct * cx1 * cw);
    for t in 0..ct {
        for x1 in 0..cx1 {
            p_u.extend(normalized((0..cw).map(|w| (0..cx).map(|x| at(x1, t, w, x)).sum()).collect()));
        }
    }
    let mut p_x = Vec::with_capacity(ct * cw * cx1 * cx);
    for t in 0..ct {
        for w in 0..cw {
            for x1 in 0..cx1 {
                p_x.extend(normalized((0..cx).map(|x| at(x1, t, w, x)).collect()));
            }
        }
    }
    [m_x1, p_t, p_u, p_x]
        .into_iter()
        .zip(AuxJoint::shapes(cards))
        .map(|(rows, s)| Factor::new(s.parents, s.width, rows).expect("normalized rows"))
        .collect()
}

/// Mixes one random live stochastic row (of width `w`) of `rows`, and each
/// other live row with probability 1/2, toward a random point mass, the point
/// mass at the row's largest entry, or a flat Dirichlet draw. Rows are live
/// when `live` marks them so (all rows when none is marked).
fn mix_rows(rng: &mut ChaCha8Rng, rows: &mut [f64], w: usize, scale: f64, live: Option<&[bool]>) {
    let n = rows.len() / w;
    let mut cand: Vec<usize> = (0..n).filter(|&r| live.is_none_or(|l| l[r])).collect();
    if cand.is_empty() {
        cand = (0..n).collect();
    }
    let forced = cand[rng.gen_range(0..cand.len())];
    for r in cand {
        if r != forced && rng.gen_bool(0.5) {
            continue;
        }
        let row = &rows[r * w..(r + 1) * w];
        let target = match rng.gen_range(0..3) {
            0 => point_mass(rng, w),
            1 => {
                let top = (0..w).max_by(|&a, &b| row[a].total_cmp(&row[b]).then(b.cmp(&a))).expect("nonempty row");
                let mut t = vec![0.0; w];
                t[top] = 1.0;
                t
            }
            _ => dirichlet_row(rng, w, 1.0),
        };
        let lambda = scale * rng.gen::<f64>();
        for (v, t) in rows[r * w..(r + 1) * w].iter_mut().zip(target) {
            *v = (1.0 - lambda) * *v + lambda * t;
        }
    }
}

/// Rows of each factor whose conditioning event has positive probability;
/// `None` where every row counts.
fn live_rows(layout: &Layout, f: &[Factor]) -> Vec<Option<Vec<bool>>> {
    match layout {
        Layout::Joint(c) => chain_live_rows(*c, f),
        Layout::Outer([_, _, cx, cx1, cy1], py1) => {
            let (cx, cx1, cy1) = (*cx, *cx1, *cy1);
            let p = f[0].rows();
            let l = (0..cx * cx1 * cy1).map(|r| p[r / cy1] * py1[r] > 0.0).collect();
            vec![None, Some(l)]
        }
        _ => vec![None; f.len()],
    }
}

fn chain_live_rows(cards: [usize; 5], f: &[Factor]) -> Vec<Option<Vec<bool>>> {
    let [cx1, ct, cu1, cu2, _] = cards;
    let cw = cu1 * cu2;
    let l1 = (0..cx1).map(|x1| f[0].p(&[], x1) > 0.0).collect();
    let mut l2 = vec![false; ct * cx1];
    let mut l3 = vec![false; ct * cw * cx1];
    for t in 0..ct {
        for x1 in 0..cx1 {
            let m = f[0].p(&[], x1) * f[1].p(&[x1], t);
            l2[t * cx1 + x1] = m > 0.0;
            for w in 0..cw {
                l3[(t * cw + w) * cx1 + x1] = m * f[2].p(&[t, x1], w) > 0.0;
            }
        }
    }
    vec![None, Some(l1), Some(l2), Some(l3)]
}

/// Joint-layout move in the reverse representation of [`reverse_joint`].
fn perturb_reverse(rng: &mut ChaCha8Rng, cards: [usize; 5], parent: &[Factor], scale: f64) -> Vec<Factor> {
    let [cx1, ct, cu1, cu2, cx] = cards;
    let (mut p_in, mut q) = reverse_from_joint(cards, &joint_from_chain(cards, parent));
    if rng.gen_bool(0.25) && cx1 * cx > 1 {
        mix_rows(rng, &mut p_in, cx1 * cx, scale, None);
    } else if ct * cu1 * cu2 > 1 {
        let live: Vec<bool> = p_in.iter().map(|&p| p > 0.0).collect();
        mix_rows(rng, &mut q, ct * cu1 * cu2, scale, Some(&live));
    }
    chain_from_joint(cards, &joint_from_reverse(cards, &p_in, &q))
}

/// Outer-layout move in the chain representation: Y1 is averaged out of
/// p(t, u | x, x1, y1), the resulting joint of (X1, T, U, X) is perturbed
/// as in [`perturb`] and mapped back with (T, U) independent of Y1 given
/// (X, X1).
fn perturb_outer_chain(rng: &mut ChaCha8Rng, cards: [usize; 5], py1: &[f64], parent: &[Factor], scale: f64) -> Vec<Factor> {
    let [ct, cu, cx, cx1, cy1] = cards;
    let ctu = ct * cu;
    let (p_xx1, p_tu) = (parent[0].rows(), parent[1].rows());
    let jc = [cx1, ct, 1, cu, cx];
    let mut p_in = vec![0.0; cx1 * cx];
    let mut q = vec![0.0; cx1 * cx * ctu];
    for x in 0..cx {
        for x1 in 0..cx1 {
            let r = x1 * cx + x;
            p_in[r] = p_xx1[x * cx1 + x1];
            for y1 in 0..cy1 {
                let w = py1[(x * cx1 + x1) * cy1 + y1];
                let row = &p_tu[((x * cx1 + x1) * cy1 + y1) * ctu..][..ctu];
                for k in 0..ctu {
                    q[r * ctu + k] += w * row[k];
                }
            }
        }
    }
    let chain = chain_from_joint(jc, &joint_from_reverse(jc, &p_in, &q));
    let chain = perturb(rng, &chain, scale, &chain_live_rows(jc, &chain));
    let (p_in, q) = reverse_from_joint(jc, &joint_from_chain(jc, &chain));
    let mut xx1 = vec![0.0; cx * cx1];
    let mut tu = Vec::with_capacity(cx * cx1 * cy1 * ctu);
    for x in 0..cx {
        for x1 in 0..cx1 {
            let r = x1 * cx + x;
            xx1[x * cx1 + x1] = p_in[r];
            for _ in 0..cy1 {
                tu.extend_from_slice(&q[r * ctu..(r + 1) * ctu]);
            }
        }
    }
    let shapes = OuterJoint::shapes(cards);
    vec![
        Factor::new(shapes[0].parents.clone(), shapes[0].width, xx1).expect("normalized"),
        Factor::new(shapes[1].parents.clone(), shapes[1].width, tu).expect("normalized"),
    ]
}

struct Scored {
    factors: Vec<Factor>,
    points: Vec<CloudPoint>,
    score: Vec<f64>,
}

/// The caller's weights, or when there are none every direction in
/// `{0, 1, 2}^3` with coprime entries.
fn search_directions(extra: &[[f64; 3]]) -> Vec<[f64; 3]> {
    if !extra.is_empty() {
        return extra.to_vec();
    }
    let mut dirs: Vec<[f64; 3]> = Vec::new();
    for a in 0..3u32 {
        for b in 0..3u32 {
            for c in 0..3u32 {
                if (a, b, c) == (0, 0, 0) || [a, b, c].iter().all(|&k| k % 2 == 0) {
                    continue;
                }
                let w = [a as f64, b as f64, c as f64];
                if !dirs.contains(&w) {
                    dirs.push(w);
                }
            }
        }
    }
    dirs
}

/// Moves a random subset of rows of one factor (or, one time in four, of
/// every factor) toward random rows; see [`mix_rows`].
fn perturb(rng: &mut ChaCha8Rng, parent: &[Factor], scale: f64, live: &[Option<Vec<bool>>]) -> Vec<Factor> {
    let movable: Vec<usize> = (0..parent.len()).filter(|&k| parent[k].width() > 1).collect();
    if movable.is_empty() {
        return parent.to_vec();
    }
    let all = rng.gen_bool(0.25);
    let pick = movable[rng.gen_range(0..movable.len())];
    parent
        .iter()
        .enumerate()
        .map(|(k, f)| {
            if !(movable.contains(&k) && (all || k == pick)) {
                return f.clone();
            }
            let mut rows = f.rows().to_vec();
            mix_rows(rng, &mut rows, f.width(), scale, live[k].as_deref());
            Factor::new(f.parents().to_vec(), f.width(), rows).expect("convex combination of stochastic rows")
        })
        .collect()
}

/// The `i`-th exploration auxiliary of [`search_frontier`] (for
/// reproducing a frontier point whose source id is below the `explore`
/// metadata value).
pub fn sample_aux(id: TheoremId, ch: &Channel, cards: &AuxCards, seed: u64, i: usize) -> Result<Aux> {
    let layout = Layout::of(id, ch, cards)?;
    let shapes = layout.shapes();
    layout.assemble(sample_factors(&layout, &shapes, &structured(&shapes), seed, i))
}

/// Pareto frontier of the union of per-sample polytope vertices.
///
/// Samples `0..explore` follow the schedule of [`sample_aux`]. The remaining
/// budget runs in rounds: each child perturbs the current best sample for
/// one search direction, and bests are updated in index order after every
/// round, so the result does not depend on the execution strategy.
pub fn search_frontier(id: TheoremId, ch: &Channel, cfg: &SearchConfig) -> Result<RegionCloud> {
    if cfg.budget == 0 {
        return Err(RbcError::input("budget must be at least 1"));
    }
    if !(0.0..1.0).contains(&cfg.refine) {
        return Err(RbcError::input(format!("refine share must lie in [0, 1), got {}", cfg.refine)));
    }
    cfg.cards.validate()?;
    let layout = Layout::of(id, ch, &cfg.cards)?;
    let shapes = layout.shapes();
    let corners = structured(&shapes);
    let dirs = search_directions(&cfg.weights);
    let eval = |i: usize, f: Vec<Factor>| -> Result<Scored> {
        let points = vertex_cloud(&eval_region(id, ch, &layout.assemble(f.clone())?)?, i as u64)?;
        let score = dirs
            .iter()
            .map(|w| points.iter().map(|p| p.rate.dot(w)).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        Ok(Scored { factors: f, points, score })
    };

    let explore = cfg.explore_count(corners.len());
    let first = cfg.exec.map(explore, |i| eval(i, sample_factors(&layout, &shapes, &corners, cfg.seed, i)));
    let mut points = Vec::new();
    // Per direction, the ELITE best samples with strictly decreasing scores.
    let mut best: Vec<Vec<(f64, Vec<Factor>)>> = vec![Vec::new(); dirs.len()];
    let mut absorb = |s: Scored, best: &mut Vec<Vec<(f64, Vec<Factor>)>>| {
        for (d, &v) in s.score.iter().enumerate() {
            let e = &mut best[d];
            if !v.is_finite() || e.iter().any(|(b, _)| (b - v).abs() <= ELITE_TIE) {
                continue;
            }
            let at = e.iter().position(|(b, _)| v > *b).unwrap_or(e.len());
            if at < ELITE {
                e.insert(at, (v, s.factors.clone()));
                e.truncate(ELITE);
            }
        }
        points.extend(s.points);
    };
    for s in first {
        absorb(s?, &mut best);
    }
    let mut next = explore;
    while next < cfg.budget {
        let size = (dirs.len() * ROUND_PER_DIRECTION).min(cfg.budget - next);
        let parents: Vec<&[Factor]> = (0..size)
            .map(|j| {
                let e = &best[j % dirs.len()];
                if e.is_empty() {
                    &[][..]
                } else {
                    e[(next / dirs.len() + j / dirs.len()) % e.len()].1.as_slice()
                }
            })
            .collect();
        let round = cfg.exec.map(size, |j| -> Result<Scored> {
            let i = next + j;
            let mut rng = rng_for(cfg.seed, REFINE_STREAM, i as u64);
            let child = if parents[j].is_empty() {
                sample_factors(&layout, &shapes, &corners, cfg.seed, i)
            } else {
                let scale = STEP_SCALES[(next / dirs.len() + j) % STEP_SCALES.len()];
                match &layout {
                    Layout::Joint(c) if rng.gen_bool(0.5) => perturb_reverse(&mut rng, *c, parents[j], scale),
                    Layout::Outer(c, py1) if rng.gen_bool(0.5) => perturb_outer_chain(&mut rng, *c, py1, parents[j], scale),
                    _ => perturb(&mut rng, parents[j], scale, &live_rows(&layout, parents[j])),
                }
            };
            eval(i, child)
        });
        for s in round {
            absorb(s?, &mut best);
        }
        next += size;
    }
    let mut cloud = pareto_filter(&RegionCloud::new(points));
    cloud.sort_canonical();
    frontier_meta(&mut cloud, id);
    cloud.set_meta("budget", cfg.budget);
    cloud.set_meta("seed", cfg.seed);
    cloud.set_meta("explore", explore);
    cloud.set_meta("aux_cards", cfg.cards.describe());
    cloud.set_meta("note", "auxiliary alphabets are truncated; the cloud approximates the union from inside");
    for w in &cfg.weights {
        cloud.set_meta(format!("support[{},{},{}]", w[0], w[1], w[2]), cloud.support(w));
    }
    Ok(cloud)
}
