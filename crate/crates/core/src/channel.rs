//! Channel laws for the partially cooperative relay broadcast channel and
//! its orthogonal and parallel specializations, with file I/O, builders and
//! structural checks.

use std::path::Path;

use rand::Rng;
use serde_json::{json, Map, Value};

use crate::error::{RbcError, Result};
use crate::info::SUM_TOL;

/// Tolerance for the 0/1 and degradedness tests.
pub const STRUCTURE_TOL: f64 = 1e-9;

/// p(y1, y2 | x, x1), indexed `[x][x1][y1][y2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RbcChannel {
    pub card_x: usize,
    pub card_x1: usize,
    pub card_y1: usize,
    pub card_y2: usize,
    law: Vec<f64>,
}

impl RbcChannel {
    pub fn new(cards: [usize; 4], law: Vec<f64>) -> Result<Self> {
        let [cx, cx1, cy1, cy2] = cards;
        if cards.contains(&0) {
            return Err(RbcError::input("channel alphabet of size 0"));
        }
        if law.len() != cx * cx1 * cy1 * cy2 {
            return Err(RbcError::input(format!(
                "law has {} entries, cards {:?} need {}",
                law.len(),
                cards,
                cx * cx1 * cy1 * cy2
            )));
        }
        let ch = RbcChannel { card_x: cx, card_x1: cx1, card_y1: cy1, card_y2: cy2, law };
        for x in 0..cx {
            for x1 in 0..cx1 {
                let mut s = 0.0;
                for y1 in 0..cy1 {
                    for y2 in 0..cy2 {
                        let p = ch.p(x, x1, y1, y2);
                        if !(p.is_finite() && p >= 0.0) {
                            return Err(RbcError::input(format!(
                                "invalid probability {p} at (x={x}, x1={x1}, y1={y1}, y2={y2})"
                            )));
                        }
                        s += p;
                    }
                }
                if (s - 1.0).abs() > SUM_TOL {
                    return Err(RbcError::input(format!(
                        "slice (x={x}, x1={x1}) sums to {s}, not 1"
                    )));
                }
            }
        }
        Ok(ch)
    }

    pub fn from_fn(cards: [usize; 4], f: impl Fn(usize, usize, usize, usize) -> f64) -> Result<Self> {
        let [cx, cx1, cy1, cy2] = cards;
        let mut law = Vec::with_capacity(cx * cx1 * cy1 * cy2);
        for x in 0..cx {
            for x1 in 0..cx1 {
                for y1 in 0..cy1 {
                    for y2 in 0..cy2 {
                        law.push(f(x, x1, y1, y2));
                    }
                }
            }
        }
        RbcChannel::new(cards, law)
    }

    pub fn cards(&self) -> [usize; 4] {
        [self.card_x, self.card_x1, self.card_y1, self.card_y2]
    }

    #[inline]
    pub fn p(&self, x: usize, x1: usize, y1: usize, y2: usize) -> f64 {
        self.law[((x * self.card_x1 + x1) * self.card_y1 + y1) * self.card_y2 + y2]
    }

    pub fn law(&self) -> &[f64] {
        &self.law
    }

    /// p(y1 | x, x1).
    pub fn p_y1(&self, x: usize, x1: usize, y1: usize) -> f64 {
        (0..self.card_y2).map(|y2| self.p(x, x1, y1, y2)).sum()
    }

    /// p(y2 | x, x1).
    pub fn p_y2(&self, x: usize, x1: usize, y2: usize) -> f64 {
        (0..self.card_y1).map(|y1| self.p(x, x1, y1, y2)).sum()
    }

    /// p(y1 | x, x1) takes only the values 0 and 1.
    pub fn is_semideterministic(&self) -> bool {
        (0..self.card_x).all(|x| {
            (0..self.card_x1).all(|x1| (0..self.card_y1).all(|y1| is_01(self.p_y1(x, x1, y1))))
        })
    }

    /// p(y1, y2 | x, x1) takes only the values 0 and 1.
    pub fn is_deterministic(&self) -> bool {
        self.law.iter().all(|&p| is_01(p))
    }

    /// The broadcast channel obtained by disabling the relay input.
    /// Requires the law to be the same for every x1.
    pub fn without_relay(&self) -> Result<RbcChannel> {
        for x in 0..self.card_x {
            for x1 in 1..self.card_x1 {
                for y1 in 0..self.card_y1 {
                    for y2 in 0..self.card_y2 {
                        if (self.p(x, x1, y1, y2) - self.p(x, 0, y1, y2)).abs() > SUM_TOL {
                            return Err(RbcError::Precondition(format!(
                                "law depends on x1 at (x={x}, x1={x1}); relay cannot be disabled"
                            )));
                        }
                    }
                }
            }
        }
        RbcChannel::from_fn([self.card_x, 1, self.card_y1, self.card_y2], |x, _, y1, y2| {
            self.p(x, 0, y1, y2)
        })
    }
}

/// p(y1 | xR, x1) p(y2 | xD, x1). `law1` is `[xr][x1][y1]`, `law2` is `[xd][x1][y2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalRbcChannel {
    pub card_xr: usize,
    pub card_xd: usize,
    pub card_x1: usize,
    pub card_y1: usize,
    pub card_y2: usize,
    law1: Vec<f64>,
    law2: Vec<f64>,
}

impl OrthogonalRbcChannel {
    pub fn new(cards: [usize; 5], law1: Vec<f64>, law2: Vec<f64>) -> Result<Self> {
        let [cxr, cxd, cx1, cy1, cy2] = cards;
        if cards.contains(&0) {
            return Err(RbcError::input("channel alphabet of size 0"));
        }
        check_conditional("law1", &law1, &[cxr, cx1], cy1)?;
        check_conditional("law2", &law2, &[cxd, cx1], cy2)?;
        Ok(OrthogonalRbcChannel {
            card_xr: cxr,
            card_xd: cxd,
            card_x1: cx1,
            card_y1: cy1,
            card_y2: cy2,
            law1,
            law2,
        })
    }

    pub fn from_fns(
        cards: [usize; 5],
        f1: impl Fn(usize, usize, usize) -> f64,
        f2: impl Fn(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let [cxr, cxd, cx1, cy1, cy2] = cards;
        let mut law1 = Vec::new();
        for xr in 0..cxr {
            for x1 in 0..cx1 {
                for y1 in 0..cy1 {
                    law1.push(f1(xr, x1, y1));
                }
            }
        }
        let mut law2 = Vec::new();
        for xd in 0..cxd {
            for x1 in 0..cx1 {
                for y2 in 0..cy2 {
                    law2.push(f2(xd, x1, y2));
                }
            }
        }
        OrthogonalRbcChannel::new(cards, law1, law2)
    }

    pub fn cards(&self) -> [usize; 5] {
        [self.card_xr, self.card_xd, self.card_x1, self.card_y1, self.card_y2]
    }

    #[inline]
    pub fn p1(&self, xr: usize, x1: usize, y1: usize) -> f64 {
        self.law1[(xr * self.card_x1 + x1) * self.card_y1 + y1]
    }

    #[inline]
    pub fn p2(&self, xd: usize, x1: usize, y2: usize) -> f64 {
        self.law2[(xd * self.card_x1 + x1) * self.card_y2 + y2]
    }

    /// The same channel as a general RBC with source input X = (XR, XD),
    /// encoded as `x = xr * |XD| + xd`.
    pub fn to_rbc(&self) -> RbcChannel {
        let cxd = self.card_xd;
        RbcChannel::from_fn(
            [self.card_xr * cxd, self.card_x1, self.card_y1, self.card_y2],
            |x, x1, y1, y2| self.p1(x / cxd, x1, y1) * self.p2(x % cxd, x1, y2),
        )
        .expect("product of stochastic laws is stochastic")
    }
}

fn check_conditional(name: &str, law: &[f64], inputs: &[usize; 2], out: usize) -> Result<()> {
    if law.len() != inputs[0] * inputs[1] * out {
        return Err(RbcError::input(format!(
            "{name} has {} entries, expected {}",
            law.len(),
            inputs[0] * inputs[1] * out
        )));
    }
    for i in 0..inputs[0] {
        for j in 0..inputs[1] {
            let row = &law[(i * inputs[1] + j) * out..(i * inputs[1] + j + 1) * out];
            if let Some(p) = row.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
                return Err(RbcError::input(format!("{name}: invalid probability {p} in slice ({i}, {j})")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > SUM_TOL {
                return Err(RbcError::input(format!("{name}: slice ({i}, {j}) sums to {s}, not 1")));
            }
        }
    }
    Ok(())
}

/// Two independent subchannels: `sub_a` forward degraded, `sub_b` reverse degraded.
#[derive(Debug, Clone, PartialEq)]
pub struct ParallelRbcChannel {
    pub sub_a: RbcChannel,
    pub sub_b: RbcChannel,
}

impl ParallelRbcChannel {
    /// Checks both degradedness conditions.
    pub fn new(sub_a: RbcChannel, sub_b: RbcChannel) -> Result<Self> {
        let ch = ParallelRbcChannel { sub_a, sub_b };
        ch.require_degraded()?;
        Ok(ch)
    }

    /// Defers the degradedness check (the generic inner bound does not need it).
    pub fn new_unchecked(sub_a: RbcChannel, sub_b: RbcChannel) -> Self {
        ParallelRbcChannel { sub_a, sub_b }
    }

    pub fn require_degraded(&self) -> Result<()> {
        let a = check_structure(&self.sub_a);
        if !a.degraded_forward {
            return Err(RbcError::Precondition(format!(
                "subchannel a is not forward degraded (residual {:.3e})",
                a.residual_forward
            )));
        }
        let b = check_structure(&self.sub_b);
        if !b.degraded_reverse {
            return Err(RbcError::Precondition(format!(
                "subchannel b is not reverse degraded (residual {:.3e})",
                b.residual_reverse
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianOrthogonalParams {
    pub p: f64,
    pub p1: f64,
    pub n1: f64,
    pub n2: f64,
}

impl GaussianOrthogonalParams {
    pub fn new(p: f64, p1: f64, n1: f64, n2: f64) -> Result<Self> {
        for (name, v) in [("P", p), ("P1", p1), ("N1", n1), ("N2", n2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(RbcError::input(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(GaussianOrthogonalParams { p, p1, n1, n2 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlackwellParams {
    pub r: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl BlackwellParams {
    pub fn new(r: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(RbcError::input(format!("relay capacity r must be >= 0, got {r}")));
        }
        if !(alpha >= 0.0 && beta >= 0.0 && alpha + beta <= 1.0 + 1e-12) {
            return Err(RbcError::input(format!(
                "need alpha, beta >= 0 and alpha + beta <= 1, got ({alpha}, {beta})"
            )));
        }
        Ok(BlackwellParams { r, alpha, beta })
    }
}

/// Any channel the loader can produce.
#[derive(Debug, Clone, PartialEq)]
pub enum Channel {
    Rbc(RbcChannel),
    Orthogonal(OrthogonalRbcChannel),
    Parallel(ParallelRbcChannel),
}

impl Channel {
    pub fn kind(&self) -> &'static str {
        match self {
            Channel::Rbc(_) => "rbc",
            Channel::Orthogonal(_) => "orthogonal",
            Channel::Parallel(_) => "parallel",
        }
    }
}

// ---------------------------------------------------------------------------
// File format

pub fn load_channel(path: impl AsRef<Path>) -> Result<Channel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| RbcError::Io { path: path.display().to_string(), source })?;
    parse_channel(&text)
}

pub fn parse_channel(text: &str) -> Result<Channel> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| RbcError::input(format!("malformed channel file: {e}")))?;
    channel_from_value(&v)
}

fn channel_from_value(v: &Value) -> Result<Channel> {
    let kind = v
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| RbcError::input("channel file lacks a string `kind`"))?;
    match kind {
        "rbc" => Ok(Channel::Rbc(rbc_from_value(v)?)),
        "orthogonal" => {
            let cards = read_cards(v, &["xr", "xd", "x1", "y1", "y2"])?;
            let law1 = read_tensor(field(v, "law1")?, &[cards[0], cards[2], cards[3]], "law1")?;
            let law2 = read_tensor(field(v, "law2")?, &[cards[1], cards[2], cards[4]], "law2")?;
            Ok(Channel::Orthogonal(OrthogonalRbcChannel::new(
                [cards[0], cards[1], cards[2], cards[3], cards[4]],
                law1,
                law2,
            )?))
        }
        "parallel" => {
            let a = rbc_from_value(field(v, "sub_a")?)
                .map_err(|e| RbcError::input(format!("sub_a: {e}")))?;
            let b = rbc_from_value(field(v, "sub_b")?)
                .map_err(|e| RbcError::input(format!("sub_b: {e}")))?;
            let check = v.get("check_degraded").and_then(Value::as_bool).unwrap_or(true);
            Ok(Channel::Parallel(if check {
                ParallelRbcChannel::new(a, b)?
            } else {
                ParallelRbcChannel::new_unchecked(a, b)
            }))
        }
        other => Err(RbcError::input(format!("unknown channel kind {other:?}"))),
    }
}

fn rbc_from_value(v: &Value) -> Result<RbcChannel> {
    if let Some(k) = v.get("kind").and_then(Value::as_str) {
        if k != "rbc" {
            return Err(RbcError::input(format!("expected kind \"rbc\", found {k:?}")));
        }
    }
    let cards = read_cards(v, &["x", "x1", "y1", "y2"])?;
    let law = read_tensor(field(v, "law")?, &cards, "law")?;
    RbcChannel::new([cards[0], cards[1], cards[2], cards[3]], law)
}

fn field<'a>(v: &'a Value, name: &str) -> Result<&'a Value> {
    v.get(name).ok_or_else(|| RbcError::input(format!("missing field `{name}`")))
}

fn read_cards(v: &Value, names: &[&str]) -> Result<Vec<usize>> {
    let cards = field(v, "cards")?;
    names
        .iter()
        .map(|n| {
            cards
                .get(*n)
                .and_then(Value::as_u64)
                .filter(|&c| c > 0)
                .map(|c| c as usize)
                .ok_or_else(|| RbcError::input(format!("cards.{n} missing or not a positive integer")))
        })
        .collect()
}

fn read_tensor(v: &Value, shape: &[usize], name: &str) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(shape.iter().product());
    read_nested(v, shape, name, &mut Vec::new(), &mut out)?;
    Ok(out)
}

fn read_nested(
    v: &Value,
    shape: &[usize],
    name: &str,
    at: &mut Vec<usize>,
    out: &mut Vec<f64>,
) -> Result<()> {
    if shape.is_empty() {
        out.push(parse_prob(v).map_err(|e| RbcError::input(format!("{name}{at:?}: {e}")))?);
        return Ok(());
    }
    let arr = v
        .as_array()
        .ok_or_else(|| RbcError::input(format!("{name}{at:?}: expected an array")))?;
    if arr.len() != shape[0] {
        return Err(RbcError::input(format!(
            "{name}{at:?}: expected {} entries, found {} (inconsistent alphabet size)",
            shape[0],
            arr.len()
        )));
    }
    for (i, item) in arr.iter().enumerate() {
        at.push(i);
        read_nested(item, &shape[1..], name, at, out)?;
        at.pop();
    }
    Ok(())
}

/// Parses a probability written as a JSON number, a decimal string, or `"p/q"`.
pub fn parse_prob(v: &Value) -> std::result::Result<f64, String> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| format!("bad number {n}")),
        Value::String(s) => parse_prob_str(s),
        other => Err(format!("probability must be a string or number, found {other}")),
    }
}

pub fn parse_prob_str(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: f64 = p.trim().parse::<u64>().map_err(|_| format!("bad numerator in {s:?}"))? as f64;
        let q: f64 = q.trim().parse::<u64>().map_err(|_| format!("bad denominator in {s:?}"))? as f64;
        if q == 0.0 {
            return Err(format!("zero denominator in {s:?}"));
        }
        Ok(p / q)
    } else {
        s.parse::<f64>().map_err(|_| format!("bad probability {s:?}"))
    }
}

fn fmt_prob(p: f64) -> Value {
    Value::String(format!("{p}"))
}

fn nest(values: &[f64], shape: &[usize]) -> Value {
    if shape.len() == 1 {
        return Value::Array(values.iter().map(|&p| fmt_prob(p)).collect());
    }
    let stride: usize = shape[1..].iter().product();
    Value::Array(values.chunks(stride).map(|c| nest(c, &shape[1..])).collect())
}

fn rbc_to_value(ch: &RbcChannel) -> Value {
    json!({
        "kind": "rbc",
        "cards": { "x": ch.card_x, "x1": ch.card_x1, "y1": ch.card_y1, "y2": ch.card_y2 },
        "law": nest(&ch.law, &ch.cards()),
    })
}

/// Serializes a channel in the loader's format. Probabilities are written
/// with the shortest decimal form that reparses to the same `f64`.
pub fn channel_to_string(ch: &Channel) -> String {
    let v = match ch {
        Channel::Rbc(c) => rbc_to_value(c),
        Channel::Orthogonal(c) => {
            let mut m = Map::new();
            m.insert("kind".into(), json!("orthogonal"));
            m.insert(
                "cards".into(),
                json!({ "xr": c.card_xr, "xd": c.card_xd, "x1": c.card_x1, "y1": c.card_y1, "y2": c.card_y2 }),
            );
            m.insert("law1".into(), nest(&c.law1, &[c.card_xr, c.card_x1, c.card_y1]));
            m.insert("law2".into(), nest(&c.law2, &[c.card_xd, c.card_x1, c.card_y2]));
            Value::Object(m)
        }
        Channel::Parallel(c) => json!({
            "kind": "parallel",
            "sub_a": rbc_to_value(&c.sub_a),
            "sub_b": rbc_to_value(&c.sub_b),
        }),
    };
    serde_json::to_string_pretty(&v).expect("json values serialize")
}

// ---------------------------------------------------------------------------
// Builders

/// Blackwell broadcast channel plus an orthogonal noiseless relay pipe of
/// `r_bits` bits: Y1 = 1{X=1}, Y2 = (1{X=0}, X1) encoded as `y2 = bc * 2^r + x1`.
pub fn build_blackwell(r_bits: u32) -> Result<RbcChannel> {
    if r_bits > 3 {
        return Err(RbcError::input(format!("relay pipe width {r_bits} outside 0..=3 bits")));
    }
    let pipe = 1usize << r_bits;
    RbcChannel::from_fn([3, pipe, 2, 2 * pipe], |x, x1, y1, y2| {
        let want_y1 = usize::from(x == 1);
        let want_y2 = usize::from(x == 0) * pipe + x1;
        if y1 == want_y1 && y2 == want_y2 {
            1.0
        } else {
            0.0
        }
    })
}

/// Binary parallel relay channel: subchannel a has Y1a = Xa and a constant
/// Y2a; subchannel b has Y2b = X1b and Y1b = Y2b.
pub fn build_example2() -> ParallelRbcChannel {
    let a = RbcChannel::from_fn([2, 2, 2, 2], |x, _x1, y1, y2| {
        if y1 == x && y2 == 0 {
            1.0
        } else {
            0.0
        }
    })
    .expect("deterministic law");
    let b = RbcChannel::from_fn([2, 2, 2, 2], |_x, x1, y1, y2| {
        if y2 == x1 && y1 == y2 {
            1.0
        } else {
            0.0
        }
    })
    .expect("deterministic law");
    ParallelRbcChannel::new(a, b).expect("example subchannels are degraded")
}

/// Orthogonal channel with BSC(`flip1`) from XR to Y1 and BSC(`flip2`) from
/// XD to Y2; the relay input X1 is binary and reaches Y2 noiselessly as a
/// second component (`y2 = bit * 2 + x1`).
pub fn build_orthogonal_bsc(flip1: f64, flip2: f64) -> Result<OrthogonalRbcChannel> {
    for f in [flip1, flip2] {
        if !(0.0..=1.0).contains(&f) {
            return Err(RbcError::input(format!("crossover {f} outside [0,1]")));
        }
    }
    OrthogonalRbcChannel::from_fns(
        [2, 2, 2, 2, 4],
        |xr, _x1, y1| if xr == y1 { 1.0 - flip1 } else { flip1 },
        |xd, x1, y2| {
            if y2 % 2 != x1 {
                0.0
            } else if y2 / 2 == xd {
                1.0 - flip2
            } else {
                flip2
            }
        },
    )
}

/// Random stochastic vector of length `n` (flat Dirichlet).
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

pub fn random_rbc<R: Rng + ?Sized>(rng: &mut R, cards: [usize; 4]) -> RbcChannel {
    let [cx, cx1, cy1, cy2] = cards;
    let mut law = Vec::with_capacity(cx * cx1 * cy1 * cy2);
    for _ in 0..cx * cx1 {
        law.extend(random_simplex(rng, cy1 * cy2));
    }
    RbcChannel::new(cards, law).expect("random rows are stochastic")
}

/// Random channel with a deterministic Y1 = f(x, x1) and random p(y2 | x, x1, y1).
pub fn random_semideterministic<R: Rng + ?Sized>(rng: &mut R, cards: [usize; 4]) -> RbcChannel {
    let [cx, cx1, cy1, cy2] = cards;
    let mut law = vec![0.0; cx * cx1 * cy1 * cy2];
    for x in 0..cx {
        for x1 in 0..cx1 {
            let y1 = rng.gen_range(0..cy1);
            let row = random_simplex(rng, cy2);
            for (y2, p) in row.into_iter().enumerate() {
                law[((x * cx1 + x1) * cy1 + y1) * cy2 + y2] = p;
            }
        }
    }
    RbcChannel::new(cards, law).expect("random rows are stochastic")
}

/// p(y1 | x, x1) p(y2 | y1, x1) from random factors (forward degraded).
pub fn random_degraded<R: Rng + ?Sized>(rng: &mut R, cards: [usize; 4]) -> RbcChannel {
    let [cx, cx1, cy1, cy2] = cards;
    let first: Vec<Vec<f64>> = (0..cx * cx1).map(|_| random_simplex(rng, cy1)).collect();
    let second: Vec<Vec<f64>> = (0..cx1 * cy1).map(|_| random_simplex(rng, cy2)).collect();
    RbcChannel::from_fn(cards, |x, x1, y1, y2| first[x * cx1 + x1][y1] * second[x1 * cy1 + y1][y2])
        .expect("product of stochastic factors")
}

/// p(y2 | x, x1) p(y1 | y2, x1) from random factors (reverse degraded).
pub fn random_reverse_degraded<R: Rng + ?Sized>(rng: &mut R, cards: [usize; 4]) -> RbcChannel {
    let [cx, cx1, cy1, cy2] = cards;
    let first: Vec<Vec<f64>> = (0..cx * cx1).map(|_| random_simplex(rng, cy2)).collect();
    let second: Vec<Vec<f64>> = (0..cx1 * cy2).map(|_| random_simplex(rng, cy1)).collect();
    RbcChannel::from_fn(cards, |x, x1, y1, y2| first[x * cx1 + x1][y2] * second[x1 * cy2 + y2][y1])
        .expect("product of stochastic factors")
}

// ---------------------------------------------------------------------------
// Structure checks

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureReport {
    pub semideterministic: bool,
    pub deterministic: bool,
    pub degraded_forward: bool,
    pub degraded_reverse: bool,
    /// Largest |p(y1,y2|x,x1) - p(y1|x,x1) w(y2|y1,x1)| for the best w.
    pub residual_forward: f64,
    /// Largest |p(y1,y2|x,x1) - p(y2|x,x1) w(y1|y2,x1)| for the best w.
    pub residual_reverse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParallelStructureReport {
    pub sub_a: StructureReport,
    pub sub_b: StructureReport,
}

fn is_01(p: f64) -> bool {
    p.abs() <= STRUCTURE_TOL || (p - 1.0).abs() <= STRUCTURE_TOL
}

pub fn check_structure(ch: &RbcChannel) -> StructureReport {
    let [cx, cx1, cy1, cy2] = ch.cards();
    let mut semidet = true;
    let mut det = true;
    for x in 0..cx {
        for x1 in 0..cx1 {
            for y1 in 0..cy1 {
                semidet &= is_01(ch.p_y1(x, x1, y1));
                for y2 in 0..cy2 {
                    det &= is_01(ch.p(x, x1, y1, y2));
                }
            }
        }
    }
    let residual_forward = degradedness_residual(ch, false);
    let residual_reverse = degradedness_residual(ch, true);
    StructureReport {
        semideterministic: semidet,
        deterministic: det,
        degraded_forward: residual_forward < STRUCTURE_TOL,
        degraded_reverse: residual_reverse < STRUCTURE_TOL,
        residual_forward,
        residual_reverse,
    }
}

pub fn check_parallel_structure(ch: &ParallelRbcChannel) -> ParallelStructureReport {
    ParallelStructureReport { sub_a: check_structure(&ch.sub_a), sub_b: check_structure(&ch.sub_b) }
}

/// Residual of the best factorization p(w, z | x, x1) = p(w | x, x1) q(z | w, x1),
/// where `w` is Y1 (forward) or Y2 (`reverse`).
///
/// For fixed (x1, w) the unknown row q(. | w, x1) appears only in the
/// equations p(w, z | x, x1) = p(w | x, x1) q(z | w, x1) over x, so the
/// weighted least-squares solution is the p(w|x,x1)-weighted average of the
/// observed conditionals; the residual then decides feasibility.
fn degradedness_residual(ch: &RbcChannel, reverse: bool) -> f64 {
    let [cx, cx1, cy1, cy2] = ch.cards();
    let (cw, cz) = if reverse { (cy2, cy1) } else { (cy1, cy2) };
    let joint = |x: usize, x1: usize, w: usize, z: usize| {
        if reverse {
            ch.p(x, x1, z, w)
        } else {
            ch.p(x, x1, w, z)
        }
    };
    let marg = |x: usize, x1: usize, w: usize| (0..cz).map(|z| joint(x, x1, w, z)).sum::<f64>();
    let mut worst: f64 = 0.0;
    for x1 in 0..cx1 {
        for w in 0..cw {
            let weights: Vec<f64> = (0..cx).map(|x| marg(x, x1, w)).collect();
            let wsum: f64 = weights.iter().map(|m| m * m).sum();
            if wsum <= 0.0 {
                continue;
            }
            for z in 0..cz {
                // minimize sum_x (joint - m_x q)^2  =>  q = sum m_x joint / sum m_x^2
                let q = (0..cx).map(|x| weights[x] * joint(x, x1, w, z)).sum::<f64>() / wsum;
                for x in 0..cx {
                    worst = worst.max((joint(x, x1, w, z) - weights[x] * q).abs());
                }
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::{binary_entropy, FiniteDist};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const BINARY_RBC: &str = r#"{
        "kind": "rbc",
        "cards": {"x": 2, "x1": 2, "y1": 2, "y2": 2},
        "law": [
            [[["0.5", "0.5"], ["0", "0"]], [["1/4", "1/4"], ["1/4", "1/4"]]],
            [[["0", "0"], ["0.9", "0.1"]], [["0", "1"], ["0", "0"]]]
        ]
    }"#;

    #[test]
    fn loads_valid_rbc() {
        let ch = parse_channel(BINARY_RBC).unwrap();
        let Channel::Rbc(c) = ch else { panic!("wrong kind") };
        assert_eq!(c.cards(), [2, 2, 2, 2]);
        assert_eq!(c.p(0, 1, 1, 0), 0.25);
    }

    #[test]
    fn normalization_error_names_slice() {
        let bad = BINARY_RBC.replace("[\"0.9\", \"0.1\"]", "[\"0.8\", \"0.1\"]");
        let err = parse_channel(&bad).unwrap_err().to_string();
        assert!(err.contains("x=1, x1=0"), "{err}");
        assert!(err.contains("0.9"), "{err}");
    }

    #[test]
    fn inconsistent_sizes_and_garbage_are_rejected() {
        let short = BINARY_RBC.replace("\"x\": 2", "\"x\": 3");
        assert!(parse_channel(&short).unwrap_err().to_string().contains("inconsistent"));
        assert!(parse_channel("{nope").unwrap_err().to_string().contains("malformed"));
        assert!(parse_channel(r#"{"kind":"mystery"}"#).is_err());
    }

    #[test]
    fn loads_orthogonal() {
        let text = r#"{
            "kind": "orthogonal",
            "cards": {"xr": 2, "xd": 2, "x1": 1, "y1": 2, "y2": 2},
            "law1": [[["1","0"]], [["0","1"]]],
            "law2": [[["0.75","0.25"]], [["1/4","3/4"]]]
        }"#;
        let Channel::Orthogonal(c) = parse_channel(text).unwrap() else { panic!() };
        assert_eq!(c.p2(1, 0, 1), 0.75);
        let joint = c.to_rbc();
        for x in 0..4 {
            for y1 in 0..2 {
                for y2 in 0..2 {
                    let want = c.p1(x / 2, 0, y1) * c.p2(x % 2, 0, y2);
                    assert_eq!(joint.p(x, 0, y1, y2), want);
                }
            }
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let ch = parse_channel(BINARY_RBC).unwrap();
        let text = channel_to_string(&ch);
        let again = parse_channel(&text).unwrap();
        let (Channel::Rbc(a), Channel::Rbc(b)) = (&ch, &again) else { panic!() };
        assert!(a.law().iter().zip(b.law()).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_eq!(channel_to_string(&again), text);
        let par = Channel::Parallel(build_example2());
        assert_eq!(parse_channel(&channel_to_string(&par)).unwrap(), par);
    }

    #[test]
    fn blackwell_shapes() {
        let b0 = build_blackwell(0).unwrap();
        assert_eq!(b0.cards(), [3, 1, 2, 2]);
        let cols: Vec<(usize, usize)> = (0..3)
            .map(|x| {
                let mut hit = None;
                for y1 in 0..2 {
                    for y2 in 0..2 {
                        if b0.p(x, 0, y1, y2) == 1.0 {
                            hit = Some((y1, y2));
                        }
                    }
                }
                hit.unwrap()
            })
            .collect();
        assert_eq!(cols, vec![(0, 1), (1, 0), (0, 0)]);
        assert!(check_structure(&b0).deterministic);
        let b1 = build_blackwell(1).unwrap();
        assert_eq!((b1.card_x1, b1.card_y2), (2, 4));
        assert!(check_structure(&b1).deterministic);
        assert!(build_blackwell(4).is_err());
    }

    #[test]
    fn blackwell_y1_entropy_is_h_beta() {
        for r in 0..3 {
            let ch = build_blackwell(r).unwrap();
            let (alpha, beta) = (0.2, 0.35);
            let px = [alpha, beta, 1.0 - alpha - beta];
            let c1 = ch.card_x1;
            let d = FiniteDist::from_fn(vec![("X", 3), ("X1", c1), ("Y1", 2), ("Y2", ch.card_y2)], |i| {
                px[i[0]] / c1 as f64 * ch.p(i[0], i[1], i[2], i[3])
            })
            .unwrap();
            let h = d.entropy(&["Y1"]).unwrap();
            assert!((h - binary_entropy(beta).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn example2_structure() {
        let ch = build_example2();
        let rep = check_parallel_structure(&ch);
        assert!(rep.sub_a.degraded_forward);
        assert!(rep.sub_b.degraded_reverse);
    }

    #[test]
    fn noisy_y1_is_not_semideterministic() {
        let ch = RbcChannel::from_fn([2, 1, 2, 1], |x, _, y1, _| if x == y1 { 0.9 } else { 0.1 }).unwrap();
        assert!(!check_structure(&ch).semideterministic);
    }

    #[test]
    fn random_degraded_channels_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let ch = random_degraded(&mut rng, [3, 2, 3, 2]);
            assert!(check_structure(&ch).degraded_forward);
            let rev = random_reverse_degraded(&mut rng, [2, 2, 2, 3]);
            assert!(check_structure(&rev).degraded_reverse);
        }
        // a generic channel is not degraded
        let generic = random_rbc(&mut rng, [3, 1, 2, 2]);
        assert!(!check_structure(&generic).degraded_forward);
    }

    #[test]
    fn without_relay_requires_x1_free_law() {
        let b1 = build_blackwell(1).unwrap();
        assert!(b1.without_relay().is_err());
        let c = RbcChannel::from_fn([2, 2, 2, 1], |x, _, y1, _| if x == y1 { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(c.without_relay().unwrap().card_x1, 1);
    }
}
