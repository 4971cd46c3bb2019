//! Linear inequality systems over rate variables.
//!
//! A [`SymbolicIneqSystem`] holds rows `sum_i a_i R_i <= sum_j c_j A_j` with
//! exact rational coefficients, where the `A_j` are named nonnegative atoms
//! (mutual-information terms). Fourier-Motzkin elimination and affine
//! substitution act on it exactly. [`instantiate`] assigns floating-point
//! atom values and yields a [`NumericPolytope`] in the closed nonnegative
//! orthant, whose vertices can be enumerated in up to three dimensions.
//!
//! Strict inequalities are treated as closed throughout.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{RbcError, Result};
use crate::exec::{rng_for, Exec};

pub type Rat = BigRational;

/// Feasibility and deduplication tolerance for vertices.
pub const VERTEX_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-12;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, an integer, or a decimal such as `"-0.125"` exactly.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let bad = || RbcError::input(format!("bad rational {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rat::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let num: BigInt = digits.parse().map_err(|_| bad())?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        let r = Rat::new(num, den);
        return Ok(if neg { -r } else { r });
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rat::from_integer(n))
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// One row: `rates . R <= atoms . A`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymIneq {
    pub rates: Vec<Rat>,
    pub atoms: Vec<Rat>,
}

impl SymIneq {
    fn is_trivial(&self) -> bool {
        self.rates.iter().all(Zero::is_zero) && self.atoms.iter().all(Zero::is_zero)
    }

    /// Scales by a positive factor so the first nonzero coefficient has
    /// absolute value one.
    fn normalized(mut self) -> SymIneq {
        let lead = self.rates.iter().chain(&self.atoms).find(|c| !c.is_zero()).map(|c| c.abs());
        if let Some(lead) = lead {
            if !lead.is_one() {
                for c in self.rates.iter_mut().chain(self.atoms.iter_mut()) {
                    *c = &*c / &lead;
                }
            }
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicIneqSystem {
    rate_vars: Vec<String>,
    atoms: Vec<String>,
    ineqs: Vec<SymIneq>,
}

impl SymbolicIneqSystem {
    /// Validates coefficient lengths, drops `0 <= 0` rows and removes
    /// duplicates after positive rescaling (first occurrence wins).
    pub fn new(rate_vars: Vec<String>, atoms: Vec<String>, ineqs: Vec<SymIneq>) -> Result<Self> {
        unique_names("rate variable", &rate_vars)?;
        unique_names("atom", &atoms)?;
        if let Some(n) = rate_vars.iter().find(|n| atoms.contains(n)) {
            return Err(RbcError::input(format!("{n} is both a rate variable and an atom")));
        }
        for (k, q) in ineqs.iter().enumerate() {
            if q.rates.len() != rate_vars.len() || q.atoms.len() != atoms.len() {
                return Err(RbcError::input(format!(
                    "inequality {k} has {} rate / {} atom coefficients, system declares {} / {}",
                    q.rates.len(),
                    q.atoms.len(),
                    rate_vars.len(),
                    atoms.len()
                )));
            }
        }
        let mut sys = SymbolicIneqSystem { rate_vars, atoms, ineqs: Vec::new() };
        sys.extend_rows(ineqs);
        Ok(sys)
    }

    /// Builds a system from constraint strings such as `"R0 + R1 <= A2"` or
    /// `"R1' + R2' >= A5"`.
    pub fn from_lines(rate_vars: &[&str], atoms: &[&str], lines: &[&str]) -> Result<Self> {
        let rv: Vec<String> = rate_vars.iter().map(|s| s.to_string()).collect();
        let at: Vec<String> = atoms.iter().map(|s| s.to_string()).collect();
        let mut sys = SymbolicIneqSystem::new(rv, at, Vec::new())?;
        sys.push_lines(lines)?;
        Ok(sys)
    }

    pub fn push_lines(&mut self, lines: &[&str]) -> Result<()> {
        let mut rows = Vec::new();
        for line in lines {
            rows.push(self.parse_row(line)?);
        }
        self.extend_rows(rows);
        Ok(())
    }

    fn parse_row(&self, line: &str) -> Result<SymIneq> {
        let expr = parse_constraint(line)?;
        if !expr.constant.is_zero() {
            return Err(RbcError::input(format!("{line:?}: constant terms are not allowed")));
        }
        let mut rates = vec![Rat::zero(); self.rate_vars.len()];
        let mut atoms = vec![Rat::zero(); self.atoms.len()];
        for (name, c) in expr.coeffs {
            if let Some(i) = self.rate_vars.iter().position(|v| *v == name) {
                rates[i] += c;
            } else if let Some(j) = self.atoms.iter().position(|v| *v == name) {
                // expr <= 0 with atoms on the left moves them right with a sign flip
                atoms[j] -= c;
            } else {
                return Err(RbcError::input(format!("{line:?}: unknown symbol {name}")));
            }
        }
        Ok(SymIneq { rates, atoms })
    }

    fn extend_rows(&mut self, rows: Vec<SymIneq>) {
        for q in rows {
            if q.is_trivial() {
                continue;
            }
            let q = q.normalized();
            if !self.ineqs.contains(&q) {
                self.ineqs.push(q);
            }
        }
    }

    pub fn rate_vars(&self) -> &[String] {
        &self.rate_vars
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn inequalities(&self) -> &[SymIneq] {
        &self.ineqs
    }

    pub fn len(&self) -> usize {
        self.ineqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ineqs.is_empty()
    }

    /// True when both systems hold the same rows up to order.
    pub fn same_rows(&self, other: &SymbolicIneqSystem) -> bool {
        self.rate_vars == other.rate_vars
            && self.atoms == other.atoms
            && self.ineqs.len() == other.ineqs.len()
            && self.ineqs.iter().all(|q| other.ineqs.contains(q))
    }

    /// Human-readable rows, e.g. `R0 + R1 <= A2`.
    pub fn to_lines(&self) -> Vec<String> {
        self.ineqs
            .iter()
            .map(|q| {
                format!(
                    "{} <= {}",
                    fmt_linear(&q.rates, &self.rate_vars),
                    fmt_linear(&q.atoms, &self.atoms)
                )
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        let file = SystemFile {
            rate_vars: self.rate_vars.clone(),
            atoms: self.atoms.clone(),
            inequalities: self
                .ineqs
                .iter()
                .map(|q| RowFile {
                    rates: q.rates.iter().map(|c| c.to_string()).collect(),
                    atoms: q.atoms.iter().map(|c| c.to_string()).collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("plain data serializes") + "\n"
    }

    /// Parses the JSON system format. Lines starting with `#` are ignored.
    pub fn from_json(text: &str) -> Result<Self> {
        let body = strip_comments(text);
        let file: SystemFile = serde_json::from_str(&body)
            .map_err(|e| RbcError::input(format!("malformed system file: {e}")))?;
        let mut rows = Vec::with_capacity(file.inequalities.len());
        for r in &file.inequalities {
            rows.push(SymIneq {
                rates: r.rates.iter().map(|s| parse_rat(s)).collect::<Result<_>>()?,
                atoms: r.atoms.iter().map(|s| parse_rat(s)).collect::<Result<_>>()?,
            });
        }
        SymbolicIneqSystem::new(file.rate_vars, file.atoms, rows)
    }
}

fn unique_names(what: &str, names: &[String]) -> Result<()> {
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return Err(RbcError::input(format!("duplicate {what} {n}")));
        }
    }
    Ok(())
}

pub(crate) fn strip_comments(text: &str) -> String {
    text.lines().filter(|l| !l.trim_start().starts_with('#')).collect::<Vec<_>>().join("\n")
}

fn fmt_linear(coeffs: &[Rat], names: &[String]) -> String {
    let mut s = String::new();
    for (c, n) in coeffs.iter().zip(names) {
        if c.is_zero() {
            continue;
        }
        let neg = c.is_negative();
        let mag = c.abs();
        if s.is_empty() {
            if neg {
                s.push('-');
            }
        } else {
            s.push_str(if neg { " - " } else { " + " });
        }
        if !mag.is_one() {
            let _ = write!(s, "{mag}*");
        }
        s.push_str(n);
    }
    if s.is_empty() {
        s.push('0');
    }
    s
}

#[derive(Serialize, Deserialize)]
struct SystemFile {
    rate_vars: Vec<String>,
    atoms: Vec<String>,
    inequalities: Vec<RowFile>,
}

#[derive(Serialize, Deserialize)]
struct RowFile {
    rates: Vec<String>,
    atoms: Vec<String>,
}

// ---------------------------------------------------------------------------
// Linear expression parsing

/// `sum coeffs[name] * name + constant`, read as `expr <= 0` when parsed
/// from a constraint.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub coeffs: BTreeMap<String, Rat>,
    pub constant: Rat,
}

/// Parses `lhs OP rhs` with OP one of `<=`, `>=`, `<`, `>`, `≤`, `≥`, `=`
/// not supported; strict forms are read as closed. Returns `lhs - rhs`
/// (or `rhs - lhs` for `>=`) so the result reads `expr <= 0`.
pub fn parse_constraint(line: &str) -> Result<LinExpr> {
    let norm = line.replace('≤', "<=").replace('≥', ">=");
    let (lhs, rhs, flip) = if let Some((l, r)) = norm.split_once("<=") {
        (l, r, false)
    } else if let Some((l, r)) = norm.split_once(">=") {
        (l, r, true)
    } else if let Some((l, r)) = norm.split_once('<') {
        (l, r, false)
    } else if let Some((l, r)) = norm.split_once('>') {
        (l, r, true)
    } else {
        return Err(RbcError::input(format!("{line:?}: expected <= or >=")));
    };
    let l = parse_linear(lhs).map_err(|e| RbcError::input(format!("{line:?}: {e}")))?;
    let r = parse_linear(rhs).map_err(|e| RbcError::input(format!("{line:?}: {e}")))?;
    let (pos, neg) = if flip { (r, l) } else { (l, r) };
    let mut out = pos;
    for (k, v) in neg.coeffs {
        *out.coeffs.entry(k).or_insert_with(Rat::zero) -= v;
    }
    out.constant -= neg.constant;
    out.coeffs.retain(|_, v| !v.is_zero());
    Ok(out)
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

/// Parses `term (+|- term)*` where a term is `[number [*]] name` or `number`.
pub fn parse_linear(text: &str) -> std::result::Result<LinExpr, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut out = LinExpr { coeffs: BTreeMap::new(), constant: Rat::zero() };
    let skip_ws = |i: &mut usize| {
        while *i < chars.len() && chars[*i].is_whitespace() {
            *i += 1;
        }
    };
    let mut first = true;
    loop {
        skip_ws(&mut i);
        if i >= chars.len() {
            if first {
                return Err("empty expression".into());
            }
            break;
        }
        let mut sign = Rat::one();
        if chars[i] == '+' || chars[i] == '-' {
            if chars[i] == '-' {
                sign = -sign;
            }
            i += 1;
            skip_ws(&mut i);
        } else if !first {
            return Err(format!("expected + or - at {:?}", chars[i..].iter().collect::<String>()));
        }
        first = false;
        let mut coef: Option<Rat> = None;
        if i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.' || chars[i] == '/') {
                i += 1;
            }
            let lit: String = chars[start..i].iter().collect();
            coef = Some(parse_rat(&lit).map_err(|e| e.to_string())?);
            skip_ws(&mut i);
            if i < chars.len() && chars[i] == '*' {
                i += 1;
                skip_ws(&mut i);
            }
        }
        if i < chars.len() && is_ident_char(chars[i]) && !chars[i].is_ascii_digit() {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            let name: String = chars[start..i].iter().collect();
            let c = sign * coef.unwrap_or_else(Rat::one);
            *out.coeffs.entry(name).or_insert_with(Rat::zero) += c;
        } else if let Some(c) = coef {
            out.constant += sign * c;
        } else {
            return Err(format!("expected a term at {:?}", chars[i..].iter().collect::<String>()));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Fourier-Motzkin elimination and substitution

/// Projects out `victims` (in order) by pairing every lower bound of a
/// victim with every upper bound. Syntactic duplicates are removed after
/// exact normalization; semantically redundant rows are kept. The victims
/// are dropped from the variable list.
pub fn fme_eliminate(sys: &SymbolicIneqSystem, victims: &[&str]) -> Result<SymbolicIneqSystem> {
    let mut cur = sys.clone();
    for v in victims {
        let k = cur
            .rate_vars
            .iter()
            .position(|n| n == v)
            .ok_or_else(|| RbcError::input(format!("{v} is not a rate variable of the system")))?;
        let (mut upper, mut lower, mut keep) = (Vec::new(), Vec::new(), Vec::new());
        for q in &cur.ineqs {
            let c = &q.rates[k];
            if c.is_positive() {
                upper.push(q);
            } else if c.is_negative() {
                lower.push(q);
            } else {
                keep.push(q.clone());
            }
        }
        for u in &upper {
            for l in &lower {
                // (-l_k) * u + u_k * l cancels the victim with positive multipliers.
                let wu = -l.rates[k].clone();
                let wl = u.rates[k].clone();
                let combine = |a: &[Rat], b: &[Rat]| -> Vec<Rat> {
                    a.iter().zip(b).map(|(x, y)| x * &wu + y * &wl).collect()
                };
                keep.push(SymIneq { rates: combine(&u.rates, &l.rates), atoms: combine(&u.atoms, &l.atoms) });
            }
        }
        let rate_vars: Vec<String> =
            cur.rate_vars.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, n)| n.clone()).collect();
        let rows = keep
            .into_iter()
            .map(|mut q| {
                q.rates.remove(k);
                q
            })
            .collect();
        cur = SymbolicIneqSystem::new(rate_vars, cur.atoms.clone(), rows)?;
    }
    Ok(cur)
}

/// Affine map from new rate variables to each old one.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub new_vars: Vec<String>,
    /// old variable -> coefficients over `new_vars`
    pub images: BTreeMap<String, Vec<Rat>>,
}

impl AffineMap {
    /// Parses lines `OLD -> expr over new vars`.
    pub fn parse(new_vars: &[&str], lines: &[&str]) -> Result<Self> {
        let new_vars: Vec<String> = new_vars.iter().map(|s| s.to_string()).collect();
        let mut images = BTreeMap::new();
        for line in lines {
            let (old, rhs) = line
                .split_once("->")
                .ok_or_else(|| RbcError::input(format!("{line:?}: expected OLD -> expr")))?;
            let e = parse_linear(rhs).map_err(|e| RbcError::input(format!("{line:?}: {e}")))?;
            if !e.constant.is_zero() {
                return Err(RbcError::input(format!("{line:?}: substitution must be linear")));
            }
            let mut row = vec![Rat::zero(); new_vars.len()];
            for (n, c) in e.coeffs {
                let i = new_vars
                    .iter()
                    .position(|v| *v == n)
                    .ok_or_else(|| RbcError::input(format!("{line:?}: {n} is not a new variable")))?;
                row[i] += c;
            }
            images.insert(old.trim().to_string(), row);
        }
        Ok(AffineMap { new_vars, images })
    }

    pub fn identity(vars: &[String]) -> Self {
        let images = vars
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let mut row = vec![Rat::zero(); vars.len()];
                row[i] = Rat::one();
                (v.clone(), row)
            })
            .collect();
        AffineMap { new_vars: vars.to_vec(), images }
    }
}

/// Rewrites every row in terms of the map's new variables.
pub fn substitute(sys: &SymbolicIneqSystem, map: &AffineMap) -> Result<SymbolicIneqSystem> {
    let mut images = Vec::with_capacity(sys.rate_vars.len());
    for v in &sys.rate_vars {
        images.push(
            map.images
                .get(v)
                .ok_or_else(|| RbcError::input(format!("substitution does not map {v}")))?,
        );
    }
    let rows = sys
        .ineqs
        .iter()
        .map(|q| {
            let mut rates = vec![Rat::zero(); map.new_vars.len()];
            for (c, img) in q.rates.iter().zip(&images) {
                if c.is_zero() {
                    continue;
                }
                for (r, m) in rates.iter_mut().zip(img.iter()) {
                    *r += c * m;
                }
            }
            SymIneq { rates, atoms: q.atoms.clone() }
        })
        .collect();
    SymbolicIneqSystem::new(map.new_vars.clone(), sys.atoms.clone(), rows)
}

// ---------------------------------------------------------------------------
// Numeric polytopes

/// `{ r >= 0, rows, r_i <= bmax }` over named variables.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericPolytope {
    vars: Vec<String>,
    rows: Vec<(Vec<f64>, f64)>,
    bmax: f64,
}

impl NumericPolytope {
    pub fn new(vars: Vec<String>, rows: Vec<(Vec<f64>, f64)>, bmax: f64) -> Result<Self> {
        for (a, b) in &rows {
            if a.len() != vars.len() {
                return Err(RbcError::input("row length does not match variable count"));
            }
            if !b.is_finite() || a.iter().any(|x| !x.is_finite()) {
                return Err(RbcError::Numerical(format!("non-finite constraint {a:?} <= {b}")));
            }
        }
        if !(bmax.is_finite() && bmax > 0.0) {
            return Err(RbcError::Numerical(format!("bad bounding box {bmax}")));
        }
        Ok(NumericPolytope { vars, rows, bmax })
    }

    /// Box size = sum of positive right-hand sides + 1.
    pub fn with_auto_box(vars: Vec<String>, rows: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let bmax = rows.iter().map(|r| r.1.max(0.0)).sum::<f64>() + 1.0;
        NumericPolytope::new(vars, rows, bmax)
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    /// Explicit rows, without the implicit nonnegativity and box rows.
    pub fn rows(&self) -> &[(Vec<f64>, f64)] {
        &self.rows
    }

    pub fn bmax(&self) -> f64 {
        self.bmax
    }

    /// Every constraint including nonnegativity and the box.
    pub fn all_constraints(&self) -> Vec<(Vec<f64>, f64)> {
        let d = self.dim();
        let mut out = self.rows.clone();
        for i in 0..d {
            let mut e = vec![0.0; d];
            e[i] = -1.0;
            out.push((e.clone(), 0.0));
            e[i] = 1.0;
            out.push((e, self.bmax));
        }
        out
    }

    /// Smallest slack `b - a.x` over all constraints; negative means outside.
    pub fn min_slack(&self, x: &[f64]) -> f64 {
        self.all_constraints()
            .iter()
            .map(|(a, b)| b - dot(a, x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.min_slack(x) >= -tol
    }

    /// Right-hand side of the explicit row with coefficients `a`, if any
    /// (tightest one when several match).
    pub fn bound_for(&self, a: &[f64]) -> Option<f64> {
        self.rows
            .iter()
            .filter(|(r, _)| r.len() == a.len() && r.iter().zip(a).all(|(x, y)| (x - y).abs() < 1e-12))
            .map(|r| r.1)
            .reduce(f64::min)
    }

    /// Value of `var` at `x`, or zero when the polytope lacks it.
    pub fn coord(&self, x: &[f64], var: &str) -> f64 {
        self.vars.iter().position(|v| v == var).map_or(0.0, |i| x[i])
    }

    /// All vertices, deduplicated at 1e-9 and sorted lexicographically.
    ///
    /// Exhaustive intersection of `dim`-subsets of constraints; only
    /// `dim <= 3` is supported.
    pub fn vertices(&self) -> Result<Vec<Vec<f64>>> {
        let d = self.dim();
        if d == 0 || d > 3 {
            return Err(RbcError::Unsupported(format!("vertex enumeration in dimension {d}")));
        }
        let cons = self.all_constraints();
        let m = cons.len();
        let mut found: Vec<Vec<f64>> = Vec::new();
        let mut idx: Vec<usize> = (0..d).collect();
        loop {
            if let Some(x) = solve_square(&idx.iter().map(|&i| &cons[i]).collect::<Vec<_>>()) {
                let feasible = cons.iter().all(|(a, b)| dot(a, &x) <= b + VERTEX_TOL);
                if feasible && !found.iter().any(|v| max_abs_diff(v, &x) < VERTEX_TOL) {
                    found.push(x);
                }
            }
            if !next_combination(&mut idx, m) {
                break;
            }
        }
        for v in &mut found {
            for c in v.iter_mut() {
                if c.abs() < 1e-14 {
                    *c = 0.0;
                }
            }
        }
        found.sort_by(|a, b| lex_cmp(a, b));
        Ok(found)
    }

    /// The polytope written in the system format with resolved numeric bounds.
    pub fn to_text(&self, meta: &[(String, String)]) -> String {
        let mut s = String::new();
        for (k, v) in meta {
            let _ = writeln!(s, "# {k}={v}");
        }
        let file = NumericFile {
            rate_vars: self.vars.clone(),
            bmax: self.bmax,
            inequalities: self
                .rows
                .iter()
                .map(|(a, b)| NumericRow { rates: a.clone(), bound: *b })
                .collect(),
        };
        s.push_str(&serde_json::to_string_pretty(&file).expect("plain data serializes"));
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let file: NumericFile = serde_json::from_str(&strip_comments(text))
            .map_err(|e| RbcError::input(format!("malformed polytope file: {e}")))?;
        NumericPolytope::new(
            file.rate_vars,
            file.inequalities.into_iter().map(|r| (r.rates, r.bound)).collect(),
            file.bmax,
        )
    }
}

#[derive(Serialize, Deserialize)]
struct NumericFile {
    rate_vars: Vec<String>,
    bmax: f64,
    inequalities: Vec<NumericRow>,
}

#[derive(Serialize, Deserialize)]
struct NumericRow {
    rates: Vec<f64>,
    bound: f64,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    a.len().cmp(&b.len())
}

fn next_combination(idx: &mut [usize], m: usize) -> bool {
    let d = idx.len();
    if d > m {
        return false;
    }
    let mut i = d;
    while i > 0 {
        i -= 1;
        if idx[i] < m - d + i {
            idx[i] += 1;
            for j in i + 1..d {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Solves the square system `a_i . x = b_i` by Gaussian elimination with
/// partial pivoting; `None` when (near) singular.
fn solve_square(rows: &[&(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    let d = rows.len();
    if rows.iter().any(|r| r.0.len() != d) {
        return None;
    }
    let mut m: Vec<Vec<f64>> = rows
        .iter()
        .map(|(a, b)| {
            let scale = a.iter().fold(0.0f64, |s, x| s.max(x.abs()));
            if scale == 0.0 {
                let mut r = a.clone();
                r.push(*b);
                return r;
            }
            let mut r: Vec<f64> = a.iter().map(|x| x / scale).collect();
            r.push(b / scale);
            r
        })
        .collect();
    for col in 0..d {
        let piv = (col..d).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < PIVOT_TOL {
            return None;
        }
        m.swap(col, piv);
        for r in 0..d {
            if r != col {
                let f = m[r][col] / m[col][col];
                if f != 0.0 {
                    for c in col..=d {
                        m[r][c] -= f * m[col][c];
                    }
                }
            }
        }
    }
    Some((0..d).map(|i| m[i][d] / m[i][i]).collect())
}

/// Assigns atom values. Every atom needs a finite value >= 0; the box is
/// the sum of positive atom values plus one.
pub fn instantiate(sys: &SymbolicIneqSystem, atom_values: &BTreeMap<String, f64>) -> Result<NumericPolytope> {
    let mut vals = Vec::with_capacity(sys.atoms.len());
    for a in &sys.atoms {
        let v = *atom_values
            .get(a)
            .ok_or_else(|| RbcError::input(format!("no value for atom {a}")))?;
        if !(v.is_finite() && v >= 0.0) {
            return Err(RbcError::input(format!("atom {a} = {v} is not a finite nonnegative value")));
        }
        vals.push(v);
    }
    instantiate_values(sys, &vals)
}

fn instantiate_values(sys: &SymbolicIneqSystem, vals: &[f64]) -> Result<NumericPolytope> {
    let rows = sys
        .ineqs
        .iter()
        .map(|q| {
            let a: Vec<f64> = q.rates.iter().map(rat_to_f64).collect();
            let b: f64 = q.atoms.iter().zip(vals).map(|(c, v)| rat_to_f64(c) * v).sum();
            (a, b)
        })
        .collect();
    let bmax = vals.iter().map(|v| v.max(0.0)).sum::<f64>() + 1.0;
    NumericPolytope::new(sys.rate_vars.clone(), rows, bmax)
}

// ---------------------------------------------------------------------------
// Equivalence under atom relations

/// `coeffs . atoms <= bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomRelation {
    pub coeffs: Vec<Rat>,
    pub bound: Rat,
}

impl AtomRelation {
    fn holds(&self, vals: &[f64]) -> bool {
        let lhs: f64 = self.coeffs.iter().zip(vals).map(|(c, v)| rat_to_f64(c) * v).sum();
        lhs <= rat_to_f64(&self.bound)
    }
}

/// Parses one relation per line (`A1 <= A2`, `A5 >= 0`). The line
/// `nonneg` expands to `A >= 0` for every atom. `#` starts a comment line.
pub fn parse_relations(atoms: &[String], text: &str) -> Result<Vec<AtomRelation>> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "nonneg" {
            for j in 0..atoms.len() {
                let mut coeffs = vec![Rat::zero(); atoms.len()];
                coeffs[j] = -Rat::one();
                out.push(AtomRelation { coeffs, bound: Rat::zero() });
            }
            continue;
        }
        let e = parse_constraint(line)?;
        let mut coeffs = vec![Rat::zero(); atoms.len()];
        for (n, c) in e.coeffs {
            let j = atoms
                .iter()
                .position(|a| *a == n)
                .ok_or_else(|| RbcError::input(format!("{line:?}: unknown atom {n}")))?;
            coeffs[j] += c;
        }
        out.push(AtomRelation { coeffs, bound: -e.constant });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub equivalent: bool,
    pub trials: usize,
    pub matches: usize,
    /// First (lowest-index) assignment where the vertex sets differ.
    pub counterexample: Option<BTreeMap<String, f64>>,
}

pub const ATOM_SAMPLE_MAX: f64 = 4.0;
const MAX_REJECTIONS: usize = 10_000;

/// Compares vertex sets of both systems on `trials` random atom assignments
/// drawn uniformly from `[0, 4]^atoms` subject to `relations`.
pub fn equivalent_under(
    a: &SymbolicIneqSystem,
    b: &SymbolicIneqSystem,
    relations: &[AtomRelation],
    trials: usize,
    seed: u64,
    exec: Exec,
) -> Result<EquivalenceReport> {
    if a.rate_vars != b.rate_vars || a.atoms != b.atoms {
        return Err(RbcError::input("systems must share rate variables and atoms"));
    }
    let k = a.atoms.len();
    let outcomes = exec.map(trials, |t| -> Result<Option<Vec<f64>>> {
        let mut rng = rng_for(seed, 0xE9, t as u64);
        let mut vals;
        let mut rejected = 0;
        loop {
            vals = (0..k).map(|_| rng.gen::<f64>() * ATOM_SAMPLE_MAX).collect::<Vec<_>>();
            if relations.iter().all(|r| r.holds(&vals)) {
                break;
            }
            rejected += 1;
            if rejected >= MAX_REJECTIONS {
                return Err(RbcError::InfeasibleRelations(format!(
                    "{MAX_REJECTIONS} consecutive draws violated the relations"
                )));
            }
        }
        let va = instantiate_values(a, &vals)?.vertices()?;
        let vb = instantiate_values(b, &vals)?.vertices()?;
        Ok(if same_vertex_set(&va, &vb, VERTEX_TOL) { None } else { Some(vals) })
    });
    let mut matches = 0;
    let mut counterexample = None;
    for o in outcomes {
        match o? {
            None => matches += 1,
            Some(vals) if counterexample.is_none() => {
                counterexample = Some(a.atoms.iter().cloned().zip(vals).collect());
            }
            Some(_) => {}
        }
    }
    Ok(EquivalenceReport { equivalent: matches == trials, trials, matches, counterexample })
}

pub fn same_vertex_set(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
    a.len() == b.len()
        && a.iter().all(|v| b.iter().any(|w| max_abs_diff(v, w) < tol))
        && b.iter().all(|v| a.iter().any(|w| max_abs_diff(v, w) < tol))
}

// ---------------------------------------------------------------------------
// The superposition/binning systems and the rate-transfer substitution.

/// Atom names: A1 = I(U1;Y1|T,X1), A2 = I(T,U1;Y1|X1), A3 = I(U2;Y2|T,X1),
/// A4 = I(T,X1,U2;Y2), A5 = I(U1;U2|T,X1).
pub const BINNING_ATOMS: [&str; 5] = ["A1", "A2", "A3", "A4", "A5"];

/// Rates with bin rates R1', R2' before elimination.
pub fn binning_system() -> SymbolicIneqSystem {
    SymbolicIneqSystem::from_lines(
        &["R0", "R1", "R2", "R1'", "R2'"],
        &BINNING_ATOMS,
        &[
            "R0 >= 0",
            "R1 >= 0",
            "R2 >= 0",
            "R1' >= 0",
            "R2' >= 0",
            "R1 + R1' <= A1",
            "R0 + R1 + R1' <= A2",
            "R2 + R2' <= A3",
            "R0 + R2 + R2' <= A4",
            "R1' + R2' >= A5",
        ],
    )
    .expect("static system")
}

/// The eight-bound region obtained without bin rates.
pub fn binning_free_system() -> SymbolicIneqSystem {
    SymbolicIneqSystem::from_lines(
        &["R0", "R1", "R2"],
        &BINNING_ATOMS,
        &[
            "R0 >= 0",
            "R1 >= 0",
            "R2 >= 0",
            "R1 <= A1",
            "R0 + R1 <= A2",
            "R2 <= A3",
            "R0 + R2 <= A4",
            "R1 + R2 <= A1 + A3 - A5",
            "R0 + R1 + R2 <= A2 + A3 - A5",
            "R0 + R1 + R2 <= A1 + A4 - A5",
            "2 R0 + R1 + R2 <= A2 + A4 - A5",
        ],
    )
    .expect("static system")
}

/// The five-bound region after moving common rate into private rates.
pub fn transferred_system() -> SymbolicIneqSystem {
    SymbolicIneqSystem::from_lines(
        &["R0", "R1", "R2"],
        &BINNING_ATOMS,
        &[
            "R0 >= 0",
            "R1 >= 0",
            "R2 >= 0",
            "R0 + R1 <= A2",
            "R0 + R2 <= A4",
            "R0 + R1 + R2 <= A2 + A3 - A5",
            "R0 + R1 + R2 <= A1 + A4 - A5",
            "2 R0 + R1 + R2 <= A2 + A4 - A5",
        ],
    )
    .expect("static system")
}

/// New-point coordinates (R0, R1, R2) plus transfers D1, D2 expressing the
/// original point: R0 -> R0 + D1 + D2, R1 -> R1 - D1, R2 -> R2 - D2.
pub fn transfer_map() -> AffineMap {
    AffineMap::parse(
        &["R0", "R1", "R2", "D1", "D2"],
        &["R0 -> R0 + D1 + D2", "R1 -> R1 - D1", "R2 -> R2 - D2"],
    )
    .expect("static map")
}

/// The binning-free system under [`transfer_map`] with the side
/// constraints D1, D2 >= 0 and new rates >= 0 appended.
pub fn transfer_substituted_system() -> SymbolicIneqSystem {
    let mut s = substitute(&binning_free_system(), &transfer_map()).expect("map covers all rates");
    s.push_lines(&["D1 >= 0", "D2 >= 0", "R0 >= 0", "R1 >= 0", "R2 >= 0"])
        .expect("static rows");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn poly(rows: &[(&[f64], f64)]) -> NumericPolytope {
        let d = rows[0].0.len();
        let vars = (0..d).map(|i| format!("R{i}")).collect();
        NumericPolytope::with_auto_box(vars, rows.iter().map(|(a, b)| (a.to_vec(), *b)).collect()).unwrap()
    }

    #[test]
    fn rationals_parse_exactly() {
        assert_eq!(parse_rat("3/6").unwrap(), Rat::new(1.into(), 2.into()));
        assert_eq!(parse_rat("-0.125").unwrap(), Rat::new((-1).into(), 8.into()));
        assert_eq!(parse_rat("7").unwrap(), rat(7));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn constraint_parsing() {
        let e = parse_constraint("2 R0 + R1 <= A2 + A4 - A5").unwrap();
        assert_eq!(e.coeffs["R0"], rat(2));
        assert_eq!(e.coeffs["A5"], rat(1));
        assert_eq!(e.coeffs["A2"], rat(-1));
        let g = parse_constraint("R1' + R2' ≥ A5").unwrap();
        assert_eq!(g.coeffs["R1'"], rat(-1));
        assert_eq!(g.coeffs["A5"], rat(1));
        assert!(parse_constraint("R0 R1 <= 2").is_err());
        assert!(parse_constraint("R0 = 1").is_err());
    }

    #[test]
    fn system_validation() {
        let s = SymbolicIneqSystem::from_lines(&["R"], &["A"], &["R <= A", "2 R <= 2 A", "0 R <= 0 A"]).unwrap();
        assert_eq!(s.len(), 1);
        assert!(SymbolicIneqSystem::from_lines(&["R"], &["A"], &["Q <= A"]).is_err());
        let bad = SymbolicIneqSystem::new(
            vec!["R".into()],
            vec!["A".into()],
            vec![SymIneq { rates: vec![rat(1), rat(1)], atoms: vec![rat(1)] }],
        );
        assert!(bad.is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = binning_system();
        let back = SymbolicIneqSystem::from_json(&format!("# comment\n{}", s.to_json())).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn fme_removes_bin_rates_exactly() {
        let projected = fme_eliminate(&binning_system(), &["R1'", "R2'"]).unwrap();
        assert!(projected.same_rows(&binning_free_system()), "{:#?}", projected.to_lines());
    }

    #[test]
    fn fme_unknown_victim_and_lower_only() {
        assert!(fme_eliminate(&binning_system(), &["Q"]).is_err());
        let s = SymbolicIneqSystem::from_lines(&["R", "S"], &["A"], &["R <= A", "S >= 0", "R + S >= 0"]).unwrap();
        let p = fme_eliminate(&s, &["S"]).unwrap();
        assert_eq!(p.to_lines(), vec!["R <= A".to_string()]);
    }

    #[test]
    fn substitution_examples() {
        let s = binning_free_system();
        let same = substitute(&s, &AffineMap::identity(s.rate_vars())).unwrap();
        assert_eq!(same, s);
        let sub = substitute(&s, &transfer_map()).unwrap();
        let lines = sub.to_lines();
        assert!(lines.contains(&"R0 + R1 + D2 <= A2".to_string()), "{lines:?}");
        assert!(lines.contains(&"R2 - D2 <= A3".to_string()), "{lines:?}");
        let partial = AffineMap::parse(&["R0"], &["R0 -> R0"]).unwrap();
        assert!(substitute(&s, &partial).is_err());
    }

    #[test]
    fn instantiate_examples() {
        let s = binning_free_system();
        let zeros: BTreeMap<String, f64> = BINNING_ATOMS.iter().map(|a| (a.to_string(), 0.0)).collect();
        assert_eq!(instantiate(&s, &zeros).unwrap().vertices().unwrap(), vec![vec![0.0; 3]]);

        let vals: BTreeMap<String, f64> =
            [("A1", 1.0), ("A2", 1.0), ("A3", 1.0), ("A4", 1.0), ("A5", 0.0)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let p = instantiate(&s, &vals).unwrap();
        let best = p.vertices().unwrap().iter().map(|v| v.iter().sum::<f64>()).fold(0.0, f64::max);
        assert!((best - 2.0).abs() < 1e-12);
        assert!(p.contains(&[0.0, 1.0, 1.0], 1e-12));

        let mut missing = vals.clone();
        missing.remove("A3");
        assert!(instantiate(&s, &missing).is_err());
    }

    #[test]
    fn deterministic_private_pentagon() {
        // R1 <= H(Y1|X1) = 1, R2 <= H(Y2) = 1, R1 + R2 <= H(Y1,Y2|X1) = 1.5
        let s = SymbolicIneqSystem::from_lines(
            &["R1", "R2"],
            &["H1", "H2", "H12"],
            &["R1 >= 0", "R2 >= 0", "R1 <= H1", "R2 <= H2", "R1 + R2 <= H12"],
        )
        .unwrap();
        let vals = [("H1", 1.0), ("H2", 1.0), ("H12", 1.5)].iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let v = instantiate(&s, &vals).unwrap().vertices().unwrap();
        assert_eq!(v, vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![0.5, 1.0], vec![1.0, 0.0], vec![1.0, 0.5]]);
    }

    #[test]
    fn vertex_examples() {
        let cube = poly(&[(&[1.0, 0.0, 0.0], 1.0), (&[0.0, 1.0, 0.0], 1.0), (&[0.0, 0.0, 1.0], 1.0)]);
        assert_eq!(cube.vertices().unwrap().len(), 8);
        let pent = poly(&[(&[1.0, 0.0], 1.0), (&[0.0, 1.0], 1.0), (&[1.0, 1.0], 1.5)]);
        assert_eq!(pent.vertices().unwrap().len(), 5);
        let empty = NumericPolytope::new(vec!["a".into(), "b".into()], vec![], 2.0).unwrap();
        assert_eq!(empty.vertices().unwrap(), vec![vec![0.0, 0.0], vec![0.0, 2.0], vec![2.0, 0.0], vec![2.0, 2.0]]);
        let big = NumericPolytope::new((0..4).map(|i| i.to_string()).collect(), vec![], 1.0).unwrap();
        assert!(matches!(big.vertices(), Err(RbcError::Unsupported(_))));
    }

    #[test]
    fn equivalence_examples() {
        let s = binning_free_system();
        let nonneg = parse_relations(s.atoms(), "nonneg").unwrap();
        let r = equivalent_under(&s, &s, &nonneg, 20, 1, Exec::Parallel).unwrap();
        assert!(r.equivalent);
        let r = equivalent_under(&s, &transferred_system(), &nonneg, 50, 1, Exec::Sequential).unwrap();
        assert!(!r.equivalent);
        assert!(r.counterexample.is_some());
        let impossible = parse_relations(s.atoms(), "A1 >= 5").unwrap();
        assert!(matches!(
            equivalent_under(&s, &s, &impossible, 1, 1, Exec::Sequential),
            Err(RbcError::InfeasibleRelations(_))
        ));
    }

    #[test]
    fn equivalence_is_deterministic_across_strategies() {
        let s = binning_free_system();
        let t = transferred_system();
        let rel = parse_relations(s.atoms(), "nonneg\nA1 <= A2").unwrap();
        let a = equivalent_under(&s, &t, &rel, 30, 9, Exec::Sequential).unwrap();
        let b = equivalent_under(&s, &t, &rel, 30, 9, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    /// Brute-force: point x is in the projection iff some value of the single
    /// victim satisfies every original row.
    fn feasible_victim(rows: &[(Vec<f64>, f64)], x: &[f64]) -> bool {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (a, b) in rows {
            let rest = b - dot(&a[..x.len()], x);
            let c = a[x.len()];
            if c > 0.0 {
                hi = hi.min(rest / c);
            } else if c < 0.0 {
                lo = lo.max(rest / c);
            } else if rest < -1e-9 {
                return false;
            }
        }
        lo <= hi + 1e-9
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn fme_soundness(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rows = Vec::new();
            for _ in 0..6 {
                let rates: Vec<Rat> = (0..3).map(|_| rat(rng.gen_range(-2..=2))).collect();
                let atoms: Vec<Rat> = (0..2).map(|_| rat(rng.gen_range(0..=2))).collect();
                rows.push(SymIneq { rates, atoms });
            }
            let sys = SymbolicIneqSystem::new(
                vec!["X".into(), "Y".into(), "V".into()], vec!["A".into(), "B".into()], rows).unwrap();
            let proj = fme_eliminate(&sys, &["V"]).unwrap();
            let vals = [rng.gen::<f64>() * 3.0, rng.gen::<f64>() * 3.0];
            let orig: Vec<(Vec<f64>, f64)> = sys.inequalities().iter().map(|q| (
                q.rates.iter().map(rat_to_f64).collect(),
                q.atoms.iter().zip(&vals).map(|(c, v)| rat_to_f64(c) * v).sum())).collect();
            let projected: Vec<(Vec<f64>, f64)> = proj.inequalities().iter().map(|q| (
                q.rates.iter().map(rat_to_f64).collect(),
                q.atoms.iter().zip(&vals).map(|(c, v)| rat_to_f64(c) * v).sum())).collect();
            for _ in 0..200 {
                let x = [rng.gen::<f64>() * 6.0 - 3.0, rng.gen::<f64>() * 6.0 - 3.0];
                let in_proj = projected.iter().all(|(a, b)| dot(a, &x) <= b + 1e-9);
                let extends = feasible_victim(&orig, &x);
                // boundary points may disagree only within tolerance
                let margin = projected.iter().map(|(a, b)| (b - dot(a, &x)).abs()).fold(f64::INFINITY, f64::min);
                if margin > 1e-6 {
                    prop_assert_eq!(in_proj, extends);
                }
            }
        }

        #[test]
        fn vertices_cover_sampled_points(seed in 0u64..20) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<(Vec<f64>, f64)> = (0..5).map(|_| (
                (0..3).map(|_| rng.gen_range(0.0..2.0)).collect(),
                rng.gen_range(0.5..3.0))).collect();
            let p = NumericPolytope::with_auto_box(vec!["a".into(), "b".into(), "c".into()], rows).unwrap();
            let verts = p.vertices().unwrap();
            for v in &verts {
                prop_assert!(p.contains(v, 1e-9));
            }
            // every feasible sample is below the vertex support in random directions
            let dirs: Vec<[f64; 3]> = (0..16).map(|_| [rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5]).collect();
            let support: Vec<f64> = dirs.iter().map(|d| verts.iter().map(|v| dot(d, v)).fold(f64::NEG_INFINITY, f64::max)).collect();
            let b = p.bmax();
            for _ in 0..5_000 {
                let x = [rng.gen::<f64>() * b, rng.gen::<f64>() * b, rng.gen::<f64>() * b];
                if p.contains(&x, 0.0) {
                    for (d, s) in dirs.iter().zip(&support) {
                        prop_assert!(dot(d, &x) <= s + 1e-7);
                    }
                }
            }
        }
    }
}
