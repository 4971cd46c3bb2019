//! Region evaluators: a fixed auxiliary distribution gives a polytope.
//!
//! Each [`TheoremId`] maps to an inequality template over rate variables
//! whose right-hand sides are named information atoms such as
//! `I(T,U1;Y1|X1)`. Evaluation composes the auxiliary law with the channel,
//! computes every atom and instantiates the template.

mod aux;
mod closed;
mod corner;
mod search;

pub use aux::{Aux, AuxJoint, BcOuterAux, Factor, FactorShape, OrthogonalAux, OuterJoint, ParallelAux, SubAux};
pub use closed::{
    blackwell_frontier, blackwell_region, eval_relay_pdf_rate, gaussian_frontier, gaussian_orthogonal_region,
    parallel_relay_capacity, subchannel_capacities, ParallelCapacity, SubchannelCapacities,
};
pub use corner::{corner_points_r3, lemma1_transfer, CornerPoints};
pub use search::{sample_aux, search_frontier, AuxCards, SearchConfig, DEFAULT_REFINE, MAX_AUX_CARD};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use crate::channel::{Channel, RbcChannel};
use crate::cloud::{CloudPoint, RateTriple, RegionCloud};
use crate::error::{RbcError, Result};
use crate::info::FiniteDist;
use crate::polytope::{self, instantiate, NumericPolytope, SymbolicIneqSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TheoremId {
    /// Superposition and binning with explicit bin rates, projected.
    R1Prime,
    R1,
    R2,
    R3,
    Outer,
    BcInner,
    BcOuter,
    /// Marton's region with a common message (R3 with the relay disabled).
    BcMarton,
    DmInner,
    DmOuter,
    Semidet,
    Det,
    DetPrivate,
    Orthogonal,
    ParallelInner,
    ParallelOuter,
    ParallelDm,
    ParallelPrivate,
    ParallelSubA,
    ParallelSubB,
}

impl TheoremId {
    pub const ALL: [TheoremId; 20] = [
        TheoremId::R1Prime,
        TheoremId::R1,
        TheoremId::R2,
        TheoremId::R3,
        TheoremId::Outer,
        TheoremId::BcInner,
        TheoremId::BcOuter,
        TheoremId::BcMarton,
        TheoremId::DmInner,
        TheoremId::DmOuter,
        TheoremId::Semidet,
        TheoremId::Det,
        TheoremId::DetPrivate,
        TheoremId::Orthogonal,
        TheoremId::ParallelInner,
        TheoremId::ParallelOuter,
        TheoremId::ParallelDm,
        TheoremId::ParallelPrivate,
        TheoremId::ParallelSubA,
        TheoremId::ParallelSubB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TheoremId::R1Prime => "r1-prime",
            TheoremId::R1 => "r1",
            TheoremId::R2 => "r2",
            TheoremId::R3 => "r3",
            TheoremId::Outer => "outer",
            TheoremId::BcInner => "bc-inner",
            TheoremId::BcOuter => "bc-outer",
            TheoremId::BcMarton => "bc-marton",
            TheoremId::DmInner => "dm-inner",
            TheoremId::DmOuter => "dm-outer",
            TheoremId::Semidet => "semidet",
            TheoremId::Det => "det",
            TheoremId::DetPrivate => "det-private",
            TheoremId::Orthogonal => "orthogonal",
            TheoremId::ParallelInner => "parallel-inner",
            TheoremId::ParallelOuter => "parallel-outer",
            TheoremId::ParallelDm => "parallel-dm",
            TheoremId::ParallelPrivate => "parallel-private",
            TheoremId::ParallelSubA => "parallel-sub-a",
            TheoremId::ParallelSubB => "parallel-sub-b",
        }
    }

    /// Outer bounds are labelled as approximations from outside; capacity
    /// results count as inner (achievable) regions.
    pub fn is_outer(self) -> bool {
        matches!(
            self,
            TheoremId::Outer | TheoremId::BcOuter | TheoremId::DmOuter | TheoremId::ParallelOuter
        )
    }

    /// The auxiliary family the evaluator expects.
    pub fn aux_kind(self) -> &'static str {
        match self {
            TheoremId::Outer | TheoremId::DmOuter => "outer",
            TheoremId::BcOuter => "bc-outer",
            TheoremId::Orthogonal => "orthogonal",
            TheoremId::ParallelInner
            | TheoremId::ParallelOuter
            | TheoremId::ParallelDm
            | TheoremId::ParallelPrivate
            | TheoremId::ParallelSubA
            | TheoremId::ParallelSubB => "parallel",
            _ => "joint",
        }
    }

    pub fn channel_kind(self) -> &'static str {
        match self.aux_kind() {
            "orthogonal" => "orthogonal",
            "parallel" => "parallel",
            _ => "rbc",
        }
    }

    fn is_broadcast(self) -> bool {
        matches!(self, TheoremId::BcInner | TheoremId::BcOuter | TheoremId::BcMarton)
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TheoremId {
    type Err = RbcError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        TheoremId::ALL
            .into_iter()
            .find(|id| id.name() == key)
            .ok_or_else(|| {
                let names: Vec<&str> = TheoremId::ALL.iter().map(|i| i.name()).collect();
                RbcError::input(format!("unknown theorem {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// Inequality template: rows over `vars` with atoms defined as
/// information expressions.
pub struct Template {
    pub vars: &'static [&'static str],
    pub atoms: &'static [(&'static str, &'static str)],
    pub rows: &'static [&'static str],
}

const SUPERPOSITION_ATOMS: [(&str, &str); 5] = [
    ("A1", "I(U1;Y1|T,X1)"),
    ("A2", "I(T,U1;Y1|X1)"),
    ("A3", "I(U2;Y2|T,X1)"),
    ("A4", "I(T,X1,U2;Y2)"),
    ("A5", "I(U1;U2|T,X1)"),
];

const R3_TEMPLATE: Template = Template {
    vars: &["R0", "R1", "R2"],
    atoms: &[
        ("A1", "I(U1;Y1|T,X1)"),
        ("A2", "I(T,U1;Y1|X1)"),
        ("A3", "I(U2;Y2|T,X1)"),
        ("A4", "I(T,X1,U2;Y2)"),
        ("A5", "I(U1;U2|T,X1)"),
        ("A6", "I(T;Y1|X1)"),
        ("A7", "I(T,X1;Y2)"),
    ],
    rows: &[
        "R0 <= A6",
        "R0 <= A7",
        "R0 + R1 <= A2",
        "R0 + R2 <= A4",
        "R0 + R1 + R2 <= A2 + A3 - A5",
        "R0 + R1 + R2 <= A1 + A4 - A5",
    ],
};

const OUTER_TEMPLATE: Template = Template {
    vars: &["R0", "R1", "R2"],
    atoms: &[
        ("B1", "I(T;Y1|X1)"),
        ("B2", "I(T,X1;Y2)"),
        ("B3", "I(X;Y1|X1)"),
        ("B4", "I(T,U,X1;Y2)"),
        ("B5", "I(X,X1;Y2)"),
        ("B6", "I(X;Y1|T,U,X1)"),
        ("B7", "I(U;Y2|T,X1)"),
        ("B8", "I(X;Y1,Y2|X1)"),
    ],
    rows: &[
        "R0 <= B1",
        "R0 <= B2",
        "R0 + R1 <= B3",
        "R0 + R2 <= B4",
        "R0 + R2 <= B5",
        "R0 + R1 + R2 <= B1 + B6 + B7",
        "R0 + R1 + R2 <= B6 + B4",
        "R0 + R1 + R2 <= B8",
    ],
};

const BC_INNER_TEMPLATE: Template = Template {
    vars: &["R0", "R1", "R2"],
    atoms: &[
        ("C1", "I(T,U1;Y1)"),
        ("C2", "I(T,U2;Y2)"),
        ("C3", "I(U2;Y2|T)"),
        ("C4", "I(U1;Y1|T)"),
        ("C5", "I(U1;U2|T)"),
    ],
    rows: &[
        "R0 + R1 <= C1",
        "R0 + R2 <= C2",
        "R0 + R1 + R2 <= C1 + C3 - C5",
        "R0 + R1 + R2 <= C4 + C2 - C5",
        "2 R0 + R1 + R2 <= C1 + C2 - C5",
    ],
};

const BC_MARTON_TEMPLATE: Template = Template {
    vars: &["R0", "R1", "R2"],
    atoms: &[
        ("C1", "I(T,U1;Y1)"),
        ("C2", "I(T,U2;Y2)"),
        ("C3", "I(U2;Y2|T)"),
        ("C4", "I(U1;Y1|T)"),
        ("C5", "I(U1;U2|T)"),
        ("C6", "I(T;Y1)"),
        ("C7", "I(T;Y2)"),
    ],
    rows: &[
        "R0 <= C6",
        "R0 <= C7",
        "R0 + R1 <= C1",
        "R0 + R2 <= C2",
        "R0 + R1 + R2 <= C1 + C3 - C5",
        "R0 + R1 + R2 <= C4 + C2 - C5",
    ],
};

const BC_OUTER_TEMPLATE: Template = Template {
    vars: &["R0", "R1", "R2"],
    atoms: &[
        ("D1", "I(T;Y1)"),
        ("D2", "I(T;Y2)"),
        ("D3", "I(X;Y1)"),
        ("D4", "I(T,U;Y2)"),
        ("D5", "I(X;Y1|T,U)"),
        ("D6", "I(U;Y2|T)"),
        ("D7", "I(T,V;Y1)"),
        ("D8", "I(X;Y2)"),
        ("D9", "I(X;Y2|T,V)"),
        ("D10", "I(V;Y1|T)"),
    ],
    rows: &[
        "R0 <= D1",
        "R0 <= D2",
        "R0 + R1 <= D3",
        "R0 + R2 <= D4",
        "R0 + R1 + R2 <= D1 + D5 + D6",
        "R0 + R1 + R2 <= D4 + D5",
        "R0 + R1 <= D7",
        "R0 + R2 <= D8",
        "R0 + R1 + R2 <= D7 + D9",
        "R0 + R1 + R2 <= D2 + D10 + D9",
    ],
};

const DM_TEMPLATE: Template = Template {
    vars: &["R0", "R1"],
    atoms: &[("E1", "I(T,X1;Y2)"), ("E2", "I(X;Y1|X1)"), ("E3", "I(X;Y1|T,X1)")],
    rows: &["R0 <= E1", "R0 + R1 <= E2", "R0 + R1 <= E3 + E1"],
};

// The inner auxiliary's U2 plays the role of U.
const SEMIDET_TEMPLATE: Template = Template {
    vars: &["R0", "R1", "R2"],
    atoms: &[
        ("S1", "I(T;Y1|X1)"),
        ("S2", "I(T,X1;Y2)"),
        ("S3", "H(Y1|X1)"),
        ("S4", "I(T,U2,X1;Y2)"),
        ("S5", "H(Y1|T,U2,X1)"),
        ("S6", "I(U2;Y2|T,X1)"),
    ],
    rows: &[
        "R0 <= S1",
        "R0 <= S2",
        "R0 + R1 <= S3",
        "R0 + R2 <= S4",
        "R0 + R1 + R2 <= S1 + S5 + S6",
        "R0 + R1 + R2 <= S5 + S4",
    ],
};

const DET_TEMPLATE: Template = Template {
    vars: &["R0", "R1", "R2"],
    atoms: &[
        ("F1", "I(T;Y1|X1)"),
        ("F2", "I(T,X1;Y2)"),
        ("F3", "H(Y1|X1)"),
        ("F4", "H(Y2)"),
        ("F5", "H(Y1,Y2|T,X1)"),
    ],
    rows: &[
        "R0 <= F1",
        "R0 <= F2",
        "R0 + R1 <= F3",
        "R0 + R2 <= F4",
        "R0 + R1 + R2 <= F1 + F5",
        "R0 + R1 + R2 <= F2 + F5",
    ],
};

const DET_PRIVATE_TEMPLATE: Template = Template {
    vars: &["R1", "R2"],
    atoms: &[("G1", "H(Y1|X1)"), ("G2", "H(Y2)"), ("G3", "H(Y1,Y2|X1)")],
    rows: &["R1 <= G1", "R2 <= G2", "R1 + R2 <= G3"],
};

const ORTHOGONAL_TEMPLATE: Template = Template {
    vars: &["R0", "R1", "R2"],
    atoms: &[("O1", "I(XR;Y1|X1)"), ("O2", "I(XD,X1;Y2)"), ("O3", "I(XD;Y2|X1)")],
    rows: &["R0 + R1 <= O1", "R0 + R2 <= O2", "R0 + R1 + R2 <= O1 + O3"],
};

const PARALLEL_INNER_TEMPLATE: Template = Template {
    vars: &["R0", "R1", "R2"],
    atoms: &[
        ("P1", "I(Ta;Y1a|X1a)"),
        ("P2", "I(Tb;Y1b|X1b)"),
        ("P3", "I(Ta,X1a;Y2a)"),
        ("P4", "I(Tb,X1b;Y2b)"),
        ("P5", "I(Xa;Y1a|X1a)"),
        ("P6", "I(Xb,X1b;Y2b)"),
        ("P7", "I(Xb;Y2b|Tb,X1b)"),
        ("P8", "I(Xa;Y1a|Ta,X1a)"),
    ],
    rows: &[
        "R0 <= P1 + P2",
        "R0 <= P3 + P4",
        "R0 + R1 <= P5 + P2",
        "R0 + R2 <= P3 + P6",
        "R0 + R1 + R2 <= P5 + P2 + P7",
        "R0 + R1 + R2 <= P8 + P3 + P6",
    ],
};

const PARALLEL_OUTER_TEMPLATE: Template = Template {
    vars: &["R0", "R1", "R2"],
    atoms: &[
        ("Q1", "I(Xa;Y1a|X1a)"),
        ("Q2", "I(Xb;Y1b|X1b)"),
        ("Q3", "I(Xa,X1a;Y2a)"),
        ("Q4", "I(Xb,X1b;Y2b)"),
        ("Q5", "I(Xb;Y2b|X1b)"),
    ],
    rows: &["R0 + R1 <= Q1 + Q2", "R0 + R2 <= Q3 + Q4", "R0 + R1 + R2 <= Q1 + Q5"],
};

// Ta is the common auxiliary; subchannel b carries no auxiliary.
const PARALLEL_DM_TEMPLATE: Template = Template {
    vars: &["R0", "R1"],
    atoms: &[
        ("V1", "I(Ta,X1a;Y2a)"),
        ("V2", "I(Xb,X1b;Y2b)"),
        ("V3", "I(Xa;Y1a|X1a)"),
        ("V4", "I(Xb;Y1b|X1b)"),
        ("V5", "I(Xa;Y1a|Ta,X1a)"),
    ],
    rows: &["R0 <= V1 + V2", "R0 + R1 <= V3 + V4", "R0 + R1 <= V5 + V1 + V2"],
};

const PARALLEL_PRIVATE_TEMPLATE: Template = Template {
    vars: &["R1", "R2"],
    atoms: &[
        ("P2", "I(Tb;Y1b|X1b)"),
        ("P3", "I(Ta,X1a;Y2a)"),
        ("P5", "I(Xa;Y1a|X1a)"),
        ("P6", "I(Xb,X1b;Y2b)"),
        ("P7", "I(Xb;Y2b|Tb,X1b)"),
        ("P8", "I(Xa;Y1a|Ta,X1a)"),
    ],
    rows: &["R1 <= P5 + P2", "R2 <= P3 + P6", "R1 + R2 <= P5 + P2 + P7", "R1 + R2 <= P8 + P3 + P6"],
};

const PARALLEL_SUB_A_TEMPLATE: Template = Template {
    vars: &["R1", "R2"],
    atoms: &[("W1", "I(Xa;Y1a|Ta,X1a)"), ("W2", "I(Ta,X1a;Y2a)"), ("W3", "I(Ta;Y1a|X1a)")],
    rows: &["R1 <= W1", "R2 <= W2", "R2 <= W3"],
};

const PARALLEL_SUB_B_TEMPLATE: Template = Template {
    vars: &["R1", "R2"],
    atoms: &[("Z1", "I(Tb;Y1b|X1b)"), ("Z2", "I(Xb;Y2b|Tb,X1b)")],
    rows: &["R1 <= Z1", "R2 <= Z2"],
};

/// Atom definitions for `id`. The projected and transferred systems share
/// the superposition atoms.
pub fn template_atoms(id: TheoremId) -> &'static [(&'static str, &'static str)] {
    match id {
        TheoremId::R1Prime | TheoremId::R1 | TheoremId::R2 => &SUPERPOSITION_ATOMS,
        other => template(other).expect("non-superposition ids have templates").atoms,
    }
}

fn template(id: TheoremId) -> Option<&'static Template> {
    Some(match id {
        TheoremId::R1Prime | TheoremId::R1 | TheoremId::R2 => return None,
        TheoremId::R3 => &R3_TEMPLATE,
        TheoremId::Outer => &OUTER_TEMPLATE,
        TheoremId::BcInner => &BC_INNER_TEMPLATE,
        TheoremId::BcOuter => &BC_OUTER_TEMPLATE,
        TheoremId::BcMarton => &BC_MARTON_TEMPLATE,
        TheoremId::DmInner | TheoremId::DmOuter => &DM_TEMPLATE,
        TheoremId::Semidet => &SEMIDET_TEMPLATE,
        TheoremId::Det => &DET_TEMPLATE,
        TheoremId::DetPrivate => &DET_PRIVATE_TEMPLATE,
        TheoremId::Orthogonal => &ORTHOGONAL_TEMPLATE,
        TheoremId::ParallelInner => &PARALLEL_INNER_TEMPLATE,
        TheoremId::ParallelOuter => &PARALLEL_OUTER_TEMPLATE,
        TheoremId::ParallelDm => &PARALLEL_DM_TEMPLATE,
        TheoremId::ParallelPrivate => &PARALLEL_PRIVATE_TEMPLATE,
        TheoremId::ParallelSubA => &PARALLEL_SUB_A_TEMPLATE,
        TheoremId::ParallelSubB => &PARALLEL_SUB_B_TEMPLATE,
    })
}

/// The symbolic system behind `id` (nonnegativity is implicit).
pub fn system(id: TheoremId) -> &'static SymbolicIneqSystem {
    static CACHE: OnceLock<Vec<SymbolicIneqSystem>> = OnceLock::new();
    let all = CACHE.get_or_init(|| TheoremId::ALL.iter().map(|&i| build_system(i)).collect());
    &all[TheoremId::ALL.iter().position(|&i| i == id).expect("listed")]
}

fn build_system(id: TheoremId) -> SymbolicIneqSystem {
    match id {
        TheoremId::R1Prime => polytope::fme_eliminate(&polytope::binning_system(), &["R1'", "R2'"])
            .expect("bin rates are variables of the system"),
        TheoremId::R1 => polytope::binning_free_system(),
        TheoremId::R2 => polytope::transferred_system(),
        other => {
            let t = template(other).expect("has template");
            let atoms: Vec<&str> = t.atoms.iter().map(|a| a.0).collect();
            SymbolicIneqSystem::from_lines(t.vars, &atoms, t.rows).expect("static template")
        }
    }
}

/// An information expression: `I(a;b|c)` or `H(a|c)` over axis names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InfoExpr {
    Mi(Vec<String>, Vec<String>, Vec<String>),
    Entropy(Vec<String>, Vec<String>),
}

impl InfoExpr {
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || RbcError::input(format!("bad information expression {s:?}"));
        let s = s.trim();
        let (head, body) = s.split_once('(').ok_or_else(bad)?;
        let body = body.strip_suffix(')').ok_or_else(bad)?;
        let (main, cond) = match body.split_once('|') {
            Some((m, c)) => (m, list(c)),
            None => (body, Vec::new()),
        };
        match head.trim() {
            "I" => {
                let (a, b) = main.split_once(';').ok_or_else(bad)?;
                Ok(InfoExpr::Mi(list(a), list(b), cond))
            }
            "H" => Ok(InfoExpr::Entropy(list(main), cond)),
            _ => Err(bad()),
        }
    }

    pub fn eval(&self, d: &FiniteDist) -> Result<f64> {
        fn refs(v: &[String]) -> Vec<&str> {
            v.iter().map(String::as_str).collect()
        }
        match self {
            InfoExpr::Mi(a, b, c) => d.cond_mutual_info(&refs(a), &refs(b), &refs(c)),
            InfoExpr::Entropy(a, c) => Ok(d.cond_entropy(&refs(a), &refs(c))?.max(0.0)),
        }
    }
}

fn list(s: &str) -> Vec<String> {
    s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()
}

/// Checks the channel/aux pairing and returns the composed joint.
pub fn compose(id: TheoremId, ch: &Channel, aux: &Aux) -> Result<FiniteDist> {
    let mismatch = || {
        RbcError::input(format!(
            "{id} needs a {} channel with a {} auxiliary, got {} / {}",
            id.channel_kind(),
            id.aux_kind(),
            ch.kind(),
            aux.kind()
        ))
    };
    match (ch, aux) {
        (Channel::Rbc(rbc), Aux::Joint(a)) if id.aux_kind() == "joint" => {
            if id.is_broadcast() {
                let bc = rbc.without_relay()?;
                if a.card_x1 != 1 {
                    return Err(RbcError::input(format!("{id} needs an auxiliary with |X1| = 1")));
                }
                return a.compose(&bc);
            }
            require_structure(id, rbc)?;
            a.compose(rbc)
        }
        (Channel::Rbc(rbc), Aux::Outer(a)) if id.aux_kind() == "outer" => a.compose(rbc),
        (Channel::Rbc(rbc), Aux::BcOuter(a)) if id.aux_kind() == "bc-outer" => a.compose(&rbc.without_relay()?),
        (Channel::Orthogonal(o), Aux::Orthogonal(a)) if id.aux_kind() == "orthogonal" => a.compose(o),
        (Channel::Parallel(p), Aux::Parallel(a)) if id.aux_kind() == "parallel" => a.compose(&p.sub_a, &p.sub_b),
        _ => Err(mismatch()),
    }
}

fn require_structure(id: TheoremId, rbc: &RbcChannel) -> Result<()> {
    match id {
        TheoremId::Semidet if !rbc.is_semideterministic() => {
            Err(RbcError::Precondition(format!("{id} needs p(y1|x,x1) in {{0,1}}")))
        }
        TheoremId::Det | TheoremId::DetPrivate if !rbc.is_deterministic() => {
            Err(RbcError::Precondition(format!("{id} needs a deterministic channel")))
        }
        _ => Ok(()),
    }
}

/// Every atom of `id`'s template evaluated on the composed joint.
pub fn eval_atoms(id: TheoremId, joint: &FiniteDist) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (name, expr) in template_atoms(id) {
        out.insert(name.to_string(), InfoExpr::parse(expr)?.eval(joint)?);
    }
    Ok(out)
}

/// Polytope of `id` for one auxiliary choice.
pub fn eval_region(id: TheoremId, ch: &Channel, aux: &Aux) -> Result<NumericPolytope> {
    let joint = compose(id, ch, aux)?;
    let atoms = eval_atoms(id, &joint)?;
    instantiate(system(id), &atoms)
}

/// Maps a polytope point to a rate triple by variable name; missing rates are 0.
pub fn to_triple(poly: &NumericPolytope, x: &[f64]) -> Result<RateTriple> {
    RateTriple::new(poly.coord(x, "R0"), poly.coord(x, "R1"), poly.coord(x, "R2"))
}

/// Vertices of `poly` as a cloud tagged with `source`.
pub fn vertex_cloud(poly: &NumericPolytope, source: u64) -> Result<Vec<CloudPoint>> {
    poly.vertices()?
        .iter()
        .map(|v| to_triple(poly, v).map(|rate| CloudPoint { rate, source }))
        .collect()
}

/// Translates a cloud point to polytope coordinates for membership checks.
pub fn from_triple(poly: &NumericPolytope, t: &RateTriple) -> Vec<f64> {
    poly.vars()
        .iter()
        .map(|v| match v.as_str() {
            "R0" => t.r0,
            "R1" => t.r1,
            _ => t.r2,
        })
        .collect()
}

/// Cloud metadata shared by frontier producers.
pub fn frontier_meta(cloud: &mut RegionCloud, id: TheoremId) {
    cloud.set_meta("theorem", id.name());
    cloud.set_meta("kind", if id.is_outer() { "outer-approx" } else { "inner-approx" });
}

#[cfg(test)]
mod tests;
