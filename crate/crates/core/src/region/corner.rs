//! Rate transfer between common and private messages, and the two corner
//! points that span the R3 region.

use crate::channel::{Channel, RbcChannel};
use crate::cloud::RateTriple;
use crate::error::{RbcError, Result};

use super::{eval_atoms, Aux, AuxJoint, TheoremId};

/// Moves `d1` bits of common rate to destination 1 and `d2` to destination 2.
pub fn lemma1_transfer(point: &RateTriple, d1: f64, d2: f64) -> Result<RateTriple> {
    if !(d1 >= 0.0 && d2 >= 0.0) || d1 + d2 > point.r0 + 1e-12 {
        return Err(RbcError::input(format!(
            "transfer needs d1, d2 >= 0 and d1 + d2 <= r0 = {}, got ({d1}, {d2})",
            point.r0
        )));
    }
    RateTriple::new(point.r0 - d1 - d2, point.r1 + d1, point.r2 + d2)
}

fn transfer_raw(p: [f64; 3], d1: f64, d2: f64) -> [f64; 3] {
    [p[0] - d1 - d2, p[1] + d1, p[2] + d2]
}

#[derive(Debug, Clone, PartialEq)]
pub struct CornerPoints {
    /// Corner with the common rate limited by destination 1's decoding.
    pub a: [f64; 3],
    /// Corner reached from [`Self::pre_transfer`] by transferring `delta`.
    pub b: [f64; 3],
    pub pre_transfer: [f64; 3],
    pub delta: f64,
    /// Region shape 1..=5 from comparing the R0, R0+R1, R0+R2 and sum bounds.
    pub case: u8,
    /// True when I(T;Y1|X1) > I(T,X1;Y2) and the roles of the corners swap.
    pub swapped: bool,
}

impl CornerPoints {
    /// Corner A with negative components clamped to zero.
    pub fn a_triple(&self) -> RateTriple {
        clamp(self.a)
    }

    pub fn b_triple(&self) -> RateTriple {
        clamp(self.b)
    }
}

fn clamp(p: [f64; 3]) -> RateTriple {
    RateTriple { r0: p[0].max(0.0), r1: p[1].max(0.0), r2: p[2].max(0.0) }
}

/// Shape of the R3 region given its bounds: 1 when the sum bound does not
/// exceed the R0 bound, 2 when it does not exceed either pair bound, 3/4
/// when it exceeds only the R0+R1 / R0+R2 bound, and 5 when it exceeds both.
pub fn classify_case(b0: f64, b01: f64, b02: f64, bs: f64) -> u8 {
    if bs <= b0 {
        1
    } else if bs <= b01.min(b02) {
        2
    } else if bs <= b02 {
        3
    } else if bs <= b01 {
        4
    } else {
        5
    }
}

pub fn corner_points_r3(ch: &RbcChannel, aux: &AuxJoint) -> Result<CornerPoints> {
    let joint = super::compose(TheoremId::R3, &Channel::Rbc(ch.clone()), &Aux::Joint(aux.clone()))?;
    let at = eval_atoms(TheoremId::R3, &joint)?;
    let g = |k: &str| at[k];
    let (a1, a2, a3, a4, a5, a6, a7) = (g("A1"), g("A2"), g("A3"), g("A4"), g("A5"), g("A6"), g("A7"));
    let bs = (a2 + a3 - a5).min(a1 + a4 - a5);
    let case = classify_case(a6.min(a7), a2, a4, bs);
    if a6 <= a7 {
        let delta = a7 - a6;
        let pre_transfer = [a7, a2 - a7 - a5, a3];
        Ok(CornerPoints {
            a: [a6, a1, a3 - a5],
            b: transfer_raw(pre_transfer, 0.0, delta),
            pre_transfer,
            delta,
            case,
            swapped: false,
        })
    } else {
        let delta = a6 - a7;
        let pre_transfer = [a6, a1, a4 - a6 - a5];
        Ok(CornerPoints {
            a: [a7, a1 - a5, a3],
            b: transfer_raw(pre_transfer, delta, 0.0),
            pre_transfer,
            delta,
            case,
            swapped: true,
        })
    }
}
