//! Auxiliary input distributions and their composition with channel laws.

use crate::channel::{OrthogonalRbcChannel, RbcChannel};
use crate::error::{RbcError, Result};
use crate::info::{FiniteDist, SUM_TOL};

/// A conditional law `p(v | parents)` stored row-major over the parent
/// indices (first parent slowest), one row of `width` entries per parent
/// assignment. No parents means a plain marginal.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    parents: Vec<usize>,
    width: usize,
    rows: Vec<f64>,
}

impl Factor {
    pub fn new(parents: Vec<usize>, width: usize, rows: Vec<f64>) -> Result<Self> {
        if width == 0 || parents.contains(&0) {
            return Err(RbcError::input("auxiliary alphabet of size 0"));
        }
        let n: usize = parents.iter().product();
        if rows.len() != n * width {
            return Err(RbcError::input(format!(
                "factor has {} entries, expected {} rows of {width}",
                rows.len(),
                n
            )));
        }
        for (r, row) in rows.chunks(width).enumerate() {
            if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                return Err(RbcError::input(format!("factor row {r} has an invalid probability")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > SUM_TOL {
                return Err(RbcError::input(format!("factor row {r} sums to {s}, not 1")));
            }
        }
        Ok(Factor { parents, width, rows })
    }

    pub fn uniform(parents: Vec<usize>, width: usize) -> Result<Self> {
        let n: usize = parents.iter().product();
        Factor::new(parents, width, vec![1.0 / width as f64; n * width])
    }

    /// Point-mass rows: `f(parent indices)` is the value taken (mod width).
    pub fn deterministic(parents: Vec<usize>, width: usize, f: impl Fn(&[usize]) -> usize) -> Result<Self> {
        let n: usize = parents.iter().product();
        let mut rows = vec![0.0; n * width];
        let mut idx = vec![0usize; parents.len()];
        for r in 0..n {
            rows[r * width + f(&idx) % width] = 1.0;
            crate::info::increment(&mut idx, &parents);
        }
        Factor::new(parents, width, rows)
    }

    pub fn parents(&self) -> &[usize] {
        &self.parents
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len() / self.width
    }

    pub fn rows(&self) -> &[f64] {
        &self.rows
    }

    /// p(v | parent assignment).
    pub fn p(&self, parent_idx: &[usize], v: usize) -> f64 {
        self.row(parent_idx)[v]
    }

    /// The conditional law for one parent assignment.
    pub fn row(&self, parent_idx: &[usize]) -> &[f64] {
        let mut r = 0;
        for (&i, &c) in parent_idx.iter().zip(&self.parents) {
            r = r * c + i;
        }
        &self.rows[r * self.width..(r + 1) * self.width]
    }
}

/// Shape of a factor, used by the frontier sampler.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorShape {
    pub parents: Vec<usize>,
    pub width: usize,
}

/// p(x1) p(t | x1) p(u1, u2 | t, x1) p(x | t, u1, u2, x1).
#[derive(Debug, Clone, PartialEq)]
pub struct AuxJoint {
    pub card_x1: usize,
    pub card_t: usize,
    pub card_u1: usize,
    pub card_u2: usize,
    pub card_x: usize,
    p_x1: Factor,
    p_t: Factor,
    p_u: Factor,
    p_x: Factor,
}

impl AuxJoint {
    /// Factor shapes for cards `[x1, t, u1, u2, x]`.
    pub fn shapes(cards: [usize; 5]) -> Vec<FactorShape> {
        let [x1, t, u1, u2, x] = cards;
        vec![
            FactorShape { parents: vec![], width: x1 },
            FactorShape { parents: vec![x1], width: t },
            FactorShape { parents: vec![t, x1], width: u1 * u2 },
            FactorShape { parents: vec![t, u1, u2, x1], width: x },
        ]
    }

    pub fn new(cards: [usize; 5], factors: Vec<Factor>) -> Result<Self> {
        check_shapes(&Self::shapes(cards), &factors)?;
        let [card_x1, card_t, card_u1, card_u2, card_x] = cards;
        let mut it = factors.into_iter();
        Ok(AuxJoint {
            card_x1,
            card_t,
            card_u1,
            card_u2,
            card_x,
            p_x1: it.next().expect("checked"),
            p_t: it.next().expect("checked"),
            p_u: it.next().expect("checked"),
            p_x: it.next().expect("checked"),
        })
    }

    /// Every factor uniform.
    pub fn uniform(cards: [usize; 5]) -> Result<Self> {
        let f = Self::shapes(cards)
            .into_iter()
            .map(|s| Factor::uniform(s.parents, s.width))
            .collect::<Result<_>>()?;
        AuxJoint::new(cards, f)
    }

    pub fn cards(&self) -> [usize; 5] {
        [self.card_x1, self.card_t, self.card_u1, self.card_u2, self.card_x]
    }

    /// p(x1), p(t | x1), p(u1, u2 | t, x1), p(x | t, u1, u2, x1).
    pub fn factors(&self) -> [&Factor; 4] {
        [&self.p_x1, &self.p_t, &self.p_u, &self.p_x]
    }

    /// Builds the aux for a relay-channel input law p(t, x1, x) (tensor
    /// order t, x1, x) with U1 = T and U2 = X.
    pub fn relay_pdf(card_t: usize, card_x1: usize, card_x: usize, p_tx1x: &[f64]) -> Result<Self> {
        let joint = FiniteDist::new(vec![("T", card_t), ("X1", card_x1), ("X", card_x)], p_tx1x.to_vec())?;
        let px1 = joint.marginal(&["X1"])?;
        let ptx1 = joint.marginal(&["T", "X1"])?;
        let cond = |num: f64, den: f64, n: usize| if den > 0.0 { num / den } else { 1.0 / n as f64 };
        let mut p_t = Vec::with_capacity(card_x1 * card_t);
        for x1 in 0..card_x1 {
            for t in 0..card_t {
                p_t.push(cond(ptx1.probs()[t * card_x1 + x1], px1.probs()[x1], card_t));
            }
        }
        // u1 = t always; u2 ~ p(x | t, x1)
        let mut p_u = vec![0.0; card_t * card_x1 * card_t * card_x];
        for t in 0..card_t {
            for x1 in 0..card_x1 {
                let row = (t * card_x1 + x1) * card_t * card_x;
                let den = ptx1.probs()[t * card_x1 + x1];
                for x in 0..card_x {
                    let num = p_tx1x[(t * card_x1 + x1) * card_x + x];
                    p_u[row + t * card_x + x] = cond(num, den, card_x);
                }
            }
        }
        let cards = [card_x1, card_t, card_t, card_x, card_x];
        let factors = vec![
            Factor::new(vec![], card_x1, px1.probs().to_vec())?,
            Factor::new(vec![card_x1], card_t, p_t)?,
            Factor::new(vec![card_t, card_x1], card_t * card_x, p_u)?,
            Factor::deterministic(vec![card_t, card_t, card_x, card_x1], card_x, |i| i[2])?,
        ];
        AuxJoint::new(cards, factors)
    }

    /// Joint over (X1, T, U1, U2, X, Y1, Y2).
    pub fn compose(&self, ch: &RbcChannel) -> Result<FiniteDist> {
        let [cx, cx1, cy1, cy2] = ch.cards();
        if cx != self.card_x || cx1 != self.card_x1 {
            return Err(RbcError::input(format!(
                "aux has |X| = {}, |X1| = {}; channel has {cx}, {cx1}",
                self.card_x, self.card_x1
            )));
        }
        let (ct, cu1, cu2) = (self.card_t, self.card_u1, self.card_u2);
        FiniteDist::from_fn(
            vec![("X1", cx1), ("T", ct), ("U1", cu1), ("U2", cu2), ("X", cx), ("Y1", cy1), ("Y2", cy2)],
            |i| {
                let (x1, t, u1, u2, x, y1, y2) = (i[0], i[1], i[2], i[3], i[4], i[5], i[6]);
                self.p_x1.p(&[], x1)
                    * self.p_t.p(&[x1], t)
                    * self.p_u.p(&[t, x1], u1 * cu2 + u2)
                    * self.p_x.p(&[t, u1, u2, x1], x)
                    * ch.p(x, x1, y1, y2)
            },
        )
    }
}

/// p(x, x1) p(t, u | x, x1, y1): (T, U) may depend on Y1 beyond (X, X1).
#[derive(Debug, Clone, PartialEq)]
pub struct OuterJoint {
    pub card_t: usize,
    pub card_u: usize,
    pub card_x: usize,
    pub card_x1: usize,
    pub card_y1: usize,
    p_xx1: Factor,
    p_tu: Factor,
}

impl OuterJoint {
    /// Factor shapes for cards `[t, u, x, x1, y1]`.
    pub fn shapes(cards: [usize; 5]) -> Vec<FactorShape> {
        let [t, u, x, x1, y1] = cards;
        vec![
            FactorShape { parents: vec![], width: x * x1 },
            FactorShape { parents: vec![x, x1, y1], width: t * u },
        ]
    }

    pub fn new(cards: [usize; 5], factors: Vec<Factor>) -> Result<Self> {
        check_shapes(&Self::shapes(cards), &factors)?;
        let [card_t, card_u, card_x, card_x1, card_y1] = cards;
        let mut it = factors.into_iter();
        Ok(OuterJoint {
            card_t,
            card_u,
            card_x,
            card_x1,
            card_y1,
            p_xx1: it.next().expect("checked"),
            p_tu: it.next().expect("checked"),
        })
    }

    /// Joint over (T, U, X1, X, Y1, Y2).
    pub fn compose(&self, ch: &RbcChannel) -> Result<FiniteDist> {
        let [cx, cx1, cy1, cy2] = ch.cards();
        if cx != self.card_x || cx1 != self.card_x1 || cy1 != self.card_y1 {
            return Err(RbcError::input("outer aux cardinalities do not match the channel"));
        }
        let (ct, cu) = (self.card_t, self.card_u);
        FiniteDist::from_fn(
            vec![("T", ct), ("U", cu), ("X1", cx1), ("X", cx), ("Y1", cy1), ("Y2", cy2)],
            |i| {
                let (t, u, x1, x, y1, y2) = (i[0], i[1], i[2], i[3], i[4], i[5]);
                self.p_xx1.p(&[], x * cx1 + x1) * ch.p(x, x1, y1, y2) * self.p_tu.p(&[x, x1, y1], t * cu + u)
            },
        )
    }
}

/// p(t, u, v) p(x | t, u, v) for the broadcast outer bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BcOuterAux {
    pub card_t: usize,
    pub card_u: usize,
    pub card_v: usize,
    pub card_x: usize,
    p_tuv: Factor,
    p_x: Factor,
}

impl BcOuterAux {
    /// Factor shapes for cards `[t, u, v, x]`.
    pub fn shapes(cards: [usize; 4]) -> Vec<FactorShape> {
        let [t, u, v, x] = cards;
        vec![
            FactorShape { parents: vec![], width: t * u * v },
            FactorShape { parents: vec![t, u, v], width: x },
        ]
    }

    pub fn new(cards: [usize; 4], factors: Vec<Factor>) -> Result<Self> {
        check_shapes(&Self::shapes(cards), &factors)?;
        let [card_t, card_u, card_v, card_x] = cards;
        let mut it = factors.into_iter();
        Ok(BcOuterAux {
            card_t,
            card_u,
            card_v,
            card_x,
            p_tuv: it.next().expect("checked"),
            p_x: it.next().expect("checked"),
        })
    }

    /// Joint over (T, U, V, X, Y1, Y2) for a channel without relay input.
    pub fn compose(&self, bc: &RbcChannel) -> Result<FiniteDist> {
        let [cx, cx1, cy1, cy2] = bc.cards();
        if cx1 != 1 || cx != self.card_x {
            return Err(RbcError::input("broadcast outer aux needs |X1| = 1 and matching |X|"));
        }
        let (ct, cu, cv) = (self.card_t, self.card_u, self.card_v);
        FiniteDist::from_fn(
            vec![("T", ct), ("U", cu), ("V", cv), ("X", cx), ("Y1", cy1), ("Y2", cy2)],
            |i| {
                let (t, u, v, x, y1, y2) = (i[0], i[1], i[2], i[3], i[4], i[5]);
                self.p_tuv.p(&[], (t * cu + u) * cv + v) * self.p_x.p(&[t, u, v], x) * bc.p(x, 0, y1, y2)
            },
        )
    }
}

/// p(x1) p(xR | x1) p(xD | x1).
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalAux {
    p_x1: Factor,
    p_xr: Factor,
    p_xd: Factor,
}

impl OrthogonalAux {
    /// Factor shapes for cards `[x1, xr, xd]`.
    pub fn shapes(cards: [usize; 3]) -> Vec<FactorShape> {
        let [x1, xr, xd] = cards;
        vec![
            FactorShape { parents: vec![], width: x1 },
            FactorShape { parents: vec![x1], width: xr },
            FactorShape { parents: vec![x1], width: xd },
        ]
    }

    pub fn new(cards: [usize; 3], factors: Vec<Factor>) -> Result<Self> {
        check_shapes(&Self::shapes(cards), &factors)?;
        let mut it = factors.into_iter();
        Ok(OrthogonalAux {
            p_x1: it.next().expect("checked"),
            p_xr: it.next().expect("checked"),
            p_xd: it.next().expect("checked"),
        })
    }

    pub fn uniform(cards: [usize; 3]) -> Result<Self> {
        let f = Self::shapes(cards)
            .into_iter()
            .map(|s| Factor::uniform(s.parents, s.width))
            .collect::<Result<_>>()?;
        OrthogonalAux::new(cards, f)
    }

    pub fn cards(&self) -> [usize; 3] {
        [self.p_x1.width(), self.p_xr.width(), self.p_xd.width()]
    }

    /// p(x1), p(xR | x1), p(xD | x1).
    pub fn factors(&self) -> [&Factor; 3] {
        [&self.p_x1, &self.p_xr, &self.p_xd]
    }

    /// Joint over (X1, XR, XD, Y1, Y2).
    pub fn compose(&self, ch: &OrthogonalRbcChannel) -> Result<FiniteDist> {
        let [cxr, cxd, cx1, cy1, cy2] = ch.cards();
        if self.cards() != [cx1, cxr, cxd] {
            return Err(RbcError::input("orthogonal aux cardinalities do not match the channel"));
        }
        FiniteDist::from_fn(vec![("X1", cx1), ("XR", cxr), ("XD", cxd), ("Y1", cy1), ("Y2", cy2)], |i| {
            let (x1, xr, xd, y1, y2) = (i[0], i[1], i[2], i[3], i[4]);
            self.p_x1.p(&[], x1)
                * self.p_xr.p(&[x1], xr)
                * self.p_xd.p(&[x1], xd)
                * ch.p1(xr, x1, y1)
                * ch.p2(xd, x1, y2)
        })
    }
}

/// p(x1) p(t | x1) p(x | t, x1) for one parallel subchannel.
#[derive(Debug, Clone, PartialEq)]
pub struct SubAux {
    pub card_t: usize,
    p_x1: Factor,
    p_t: Factor,
    p_x: Factor,
}

impl SubAux {
    /// Factor shapes for cards `[x1, t, x]`.
    pub fn shapes(cards: [usize; 3]) -> Vec<FactorShape> {
        let [x1, t, x] = cards;
        vec![
            FactorShape { parents: vec![], width: x1 },
            FactorShape { parents: vec![x1], width: t },
            FactorShape { parents: vec![t, x1], width: x },
        ]
    }

    pub fn new(cards: [usize; 3], factors: Vec<Factor>) -> Result<Self> {
        check_shapes(&Self::shapes(cards), &factors)?;
        let mut it = factors.into_iter();
        Ok(SubAux {
            card_t: cards[1],
            p_x1: it.next().expect("checked"),
            p_t: it.next().expect("checked"),
            p_x: it.next().expect("checked"),
        })
    }

    /// Input law p(x, x1) flattened with x1 fastest, card_t = 1.
    pub fn from_input_law(card_x: usize, card_x1: usize, p_xx1: &[f64]) -> Result<Self> {
        let d = FiniteDist::new(vec![("X", card_x), ("X1", card_x1)], p_xx1.to_vec())?;
        let px1 = d.marginal(&["X1"])?;
        let mut rows = Vec::with_capacity(card_x * card_x1);
        for x1 in 0..card_x1 {
            let den = px1.probs()[x1];
            for x in 0..card_x {
                rows.push(if den > 0.0 { p_xx1[x * card_x1 + x1] / den } else { 1.0 / card_x as f64 });
            }
        }
        SubAux::new(
            [card_x1, 1, card_x],
            vec![
                Factor::new(vec![], card_x1, px1.probs().to_vec())?,
                Factor::uniform(vec![card_x1], 1)?,
                Factor::new(vec![1, card_x1], card_x, rows)?,
            ],
        )
    }

    fn p(&self, t: usize, x: usize, x1: usize) -> f64 {
        self.p_x1.p(&[], x1) * self.p_t.p(&[x1], t) * self.p_x.p(&[t, x1], x)
    }

    fn cards(&self) -> (usize, usize, usize) {
        (self.p_x1.width(), self.card_t, self.p_x.width())
    }
}

/// Independent per-subchannel auxiliaries.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelAux {
    pub a: SubAux,
    pub b: SubAux,
}

impl ParallelAux {
    /// Joint over (X1a, Ta, Xa, Y1a, Y2a, X1b, Tb, Xb, Y1b, Y2b), product
    /// of the two subchannel joints.
    pub fn compose(&self, sub_a: &RbcChannel, sub_b: &RbcChannel) -> Result<FiniteDist> {
        let da = sub_joint(&self.a, sub_a)?;
        let db = sub_joint(&self.b, sub_b)?;
        let mut axes: Vec<(String, usize)> = Vec::new();
        for (d, sfx) in [(&da, "a"), (&db, "b")] {
            for ax in d.axes() {
                axes.push((format!("{}{sfx}", ax.name), ax.card));
            }
        }
        let nb = db.probs().len();
        let mut probs = Vec::with_capacity(da.probs().len() * nb);
        for pa in da.probs() {
            probs.extend(db.probs().iter().map(|pb| pa * pb));
        }
        FiniteDist::new(axes, probs)
    }
}

fn sub_joint(aux: &SubAux, ch: &RbcChannel) -> Result<FiniteDist> {
    let [cx, cx1, cy1, cy2] = ch.cards();
    let (ax1, at, ax) = aux.cards();
    if (ax1, ax) != (cx1, cx) {
        return Err(RbcError::input("subchannel aux cardinalities do not match the channel"));
    }
    FiniteDist::from_fn(vec![("X1", cx1), ("T", at), ("X", cx), ("Y1", cy1), ("Y2", cy2)], |i| {
        aux.p(i[1], i[2], i[0]) * ch.p(i[2], i[0], i[3], i[4])
    })
}

fn check_shapes(shapes: &[FactorShape], factors: &[Factor]) -> Result<()> {
    if shapes.len() != factors.len() {
        return Err(RbcError::input(format!("expected {} factors, got {}", shapes.len(), factors.len())));
    }
    for (k, (s, f)) in shapes.iter().zip(factors).enumerate() {
        if s.parents.contains(&0) || s.width == 0 {
            return Err(RbcError::input("auxiliary alphabet of size 0"));
        }
        if s.parents != f.parents || s.width != f.width {
            return Err(RbcError::input(format!("factor {k} has the wrong shape")));
        }
    }
    Ok(())
}

/// Any auxiliary family accepted by the evaluators.
#[derive(Debug, Clone, PartialEq)]
pub enum Aux {
    Joint(AuxJoint),
    Outer(OuterJoint),
    BcOuter(BcOuterAux),
    Orthogonal(OrthogonalAux),
    Parallel(ParallelAux),
}

impl Aux {
    pub fn kind(&self) -> &'static str {
        match self {
            Aux::Joint(_) => "joint",
            Aux::Outer(_) => "outer",
            Aux::BcOuter(_) => "bc-outer",
            Aux::Orthogonal(_) => "orthogonal",
            Aux::Parallel(_) => "parallel",
        }
    }
}
