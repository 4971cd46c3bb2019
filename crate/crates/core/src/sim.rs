//! Monte Carlo simulation of the block-Markov random-coding schemes.
//!
//! Two schemes are simulated at desk-scale block lengths:
//!
//! * the orthogonal scheme, where the relay decodes and forwards the common
//!   message and the source sends independent codewords on the two links;
//! * the superposition and binning scheme with regular encoding at the
//!   source and sliding-window decoding at destination 2.
//!
//! Each trial draws a fresh codebook, uniform messages and channel noise, so
//! the error estimate averages over the random-code ensemble.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{OrthogonalRbcChannel, RbcChannel};
use crate::cloud::RateTriple;
use crate::error::{RbcError, Result};
use crate::exec::{rng_for, Exec};
use crate::info::FiniteDist;
use crate::region::{AuxJoint, Factor, OrthogonalAux};

pub const DEFAULT_EPSILON: f64 = 0.25;
/// Cap on stored codeword symbols per trial.
pub const DEFAULT_MAX_SYMBOLS: u64 = 1 << 26;
pub const DEFAULT_MAX_BIN_PAIRS: u64 = 1 << 16;
const ZERO_MASS: f64 = 1e-15;
const Z95: f64 = 1.959_963_984_540_054;
const Z95_ONE_SIDED: f64 = 1.644_853_626_951_472;
const ORTH_STREAM: u64 = 0x0D;
const BIN_STREAM: u64 = 0xB1;

/// How empirical tuple frequencies are compared with the reference law.
/// Both rules reject any tuple of zero reference mass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TypicalityRule {
    /// |freq - p| <= epsilon * p (strong typicality).
    #[default]
    Relative,
    /// |freq - p| <= epsilon.
    Absolute,
}

impl TypicalityRule {
    pub fn name(self) -> &'static str {
        match self {
            TypicalityRule::Relative => "relative",
            TypicalityRule::Absolute => "absolute",
        }
    }
}

impl FromStr for TypicalityRule {
    type Err = RbcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "relative" => Ok(TypicalityRule::Relative),
            "absolute" => Ok(TypicalityRule::Absolute),
            other => Err(RbcError::input(format!("unknown typicality rule {other:?}; expected relative or absolute"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    /// Symbols per block.
    pub n: usize,
    /// Number of blocks B; messages are sent in the first B - 1.
    pub blocks: usize,
    pub rates: RateTriple,
    /// (R1', R2'), used by the binning scheme only.
    pub bin_rates: (f64, f64),
    pub epsilon: f64,
    pub rule: TypicalityRule,
    pub trials: usize,
    pub seed: u64,
    pub max_symbols: u64,
    pub max_bin_pairs: u64,
    pub exec: Exec,
}

impl SimParams {
    pub fn new(n: usize, blocks: usize, rates: RateTriple, trials: usize, seed: u64) -> Self {
        SimParams {
            n,
            blocks,
            rates,
            bin_rates: (0.0, 0.0),
            epsilon: DEFAULT_EPSILON,
            rule: TypicalityRule::default(),
            trials,
            seed,
            max_symbols: DEFAULT_MAX_SYMBOLS,
            max_bin_pairs: DEFAULT_MAX_BIN_PAIRS,
            exec: Exec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(RbcError::input("block length n must be at least 1"));
        }
        if self.n > 255 * 255 {
            return Err(RbcError::input("block length n is too large"));
        }
        if self.blocks < 2 {
            return Err(RbcError::input("the number of blocks must be at least 2"));
        }
        if self.trials == 0 {
            return Err(RbcError::input("trials must be at least 1"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(RbcError::input(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        let (b1, b2) = self.bin_rates;
        if !(b1 >= 0.0 && b2 >= 0.0 && b1.is_finite() && b2.is_finite()) {
            return Err(RbcError::input("bin rates must be finite and nonnegative"));
        }
        Ok(())
    }
}

/// Number of codewords for `rate` bits/symbol: ceil(2^(n rate)), at least 1.
pub fn codeword_count(n: usize, rate: f64) -> Result<u64> {
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(RbcError::input(format!("rate must be finite and nonnegative, got {rate}")));
    }
    let bits = n as f64 * rate;
    if bits > 62.0 {
        return Err(RbcError::Resource(format!("2^{bits:.1} codewords per index cannot be stored")));
    }
    // Guard against 2^3 evaluating to 8.000000000001.
    Ok((bits.exp2() - 1e-9).ceil().max(1.0) as u64)
}

/// Realized rate of `count` codewords at block length `n`.
pub fn realized_rate(n: usize, count: u64) -> f64 {
    (count as f64).log2() / n as f64
}

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let den = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / den;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / den;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// One-sided pooled two-proportion z statistic for `a = (k, n)` exceeding `b`.
pub fn two_proportion_z(a: (u64, u64), b: (u64, u64)) -> f64 {
    let (pa, pb) = (a.0 as f64 / a.1 as f64, b.0 as f64 / b.1 as f64);
    let pool = (a.0 + b.0) as f64 / (a.1 + b.1) as f64;
    let se = (pool * (1.0 - pool) * (1.0 / a.1 as f64 + 1.0 / b.1 as f64)).sqrt();
    if se == 0.0 {
        return if pa > pb { f64::INFINITY } else { 0.0 };
    }
    (pa - pb) / se
}

/// True when the error counts decrease strictly and each consecutive drop
/// is significant in a one-sided test at the 95% level.
pub fn decreasing_trend(errors: &[(u64, u64)]) -> bool {
    errors.windows(2).all(|w| {
        let (a, b) = (w[0], w[1]);
        a.0 as f64 / a.1 as f64 > b.0 as f64 / b.1 as f64 && two_proportion_z(a, b) >= Z95_ONE_SIDED
    })
}

/// Reference law flattened row-major over the checked axes.
#[derive(Debug, Clone)]
struct TypChecker {
    cards: Vec<usize>,
    probs: Vec<f64>,
    rule: TypicalityRule,
    epsilon: f64,
}

impl TypChecker {
    fn new(reference: &FiniteDist, axes: &[&str], rule: TypicalityRule, epsilon: f64) -> Result<Self> {
        let m = reference.marginal(axes)?;
        Ok(TypChecker { cards: m.cards(), probs: m.probs().to_vec(), rule, epsilon })
    }

    fn check(&self, seqs: &[&[u8]], counts: &mut Vec<u32>) -> bool {
        let n = seqs[0].len();
        counts.clear();
        counts.resize(self.probs.len(), 0);
        for i in 0..n {
            let mut k = 0;
            for (s, &c) in seqs.iter().zip(&self.cards) {
                k = k * c + s[i] as usize;
            }
            if self.probs[k] <= ZERO_MASS {
                return false;
            }
            counts[k] += 1;
        }
        let nf = n as f64;
        counts.iter().zip(&self.probs).all(|(&c, &p)| {
            if p <= ZERO_MASS {
                return c == 0;
            }
            let slack = match self.rule {
                TypicalityRule::Relative => self.epsilon * p,
                TypicalityRule::Absolute => self.epsilon,
            };
            (c as f64 / nf - p).abs() <= slack
        })
    }
}

/// Joint typicality of per-axis symbol sequences against `reference`, whose
/// axes are matched to `seqs` in order.
pub fn is_jointly_typical(seqs: &[&[usize]], reference: &FiniteDist, epsilon: f64, rule: TypicalityRule) -> Result<bool> {
    let axes = reference.axes();
    if seqs.len() != axes.len() {
        return Err(RbcError::input(format!("{} sequences for {} axes", seqs.len(), axes.len())));
    }
    let n = seqs.first().map_or(0, |s| s.len());
    if n == 0 || seqs.iter().any(|s| s.len() != n) {
        return Err(RbcError::input("sequences must be nonempty and of equal length"));
    }
    let mut bytes = Vec::with_capacity(seqs.len());
    for (s, ax) in seqs.iter().zip(axes) {
        if s.iter().any(|&v| v >= ax.card) {
            return Err(RbcError::input(format!("symbol outside the alphabet of {}", ax.name)));
        }
        bytes.push(s.iter().map(|&v| v as u8).collect::<Vec<u8>>());
    }
    let names: Vec<&str> = axes.iter().map(|a| a.name.as_str()).collect();
    let checker = TypChecker::new(reference, &names, rule, epsilon)?;
    let refs: Vec<&[u8]> = bytes.iter().map(Vec::as_slice).collect();
    Ok(checker.check(&refs, &mut Vec::new()))
}

fn draw(rng: &mut ChaCha8Rng, row: &[f64]) -> u8 {
    let mut u: f64 = rng.gen();
    for (v, &p) in row.iter().enumerate() {
        if u < p {
            return v as u8;
        }
        u -= p;
    }
    // Rounding residue: fall back to the last symbol of positive mass.
    row.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u8
}

/// Appends `n` symbols, with position `i` drawn from `row_of(i)`.
fn draw_seq<'a>(rng: &mut ChaCha8Rng, out: &mut Vec<u8>, n: usize, row_of: impl Fn(usize) -> &'a [f64]) {
    for i in 0..n {
        out.push(draw(rng, row_of(i)));
    }
}

/// Decoding outcomes of one destination.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StageCounts {
    pub decodings: u64,
    /// Decodings whose message estimate was wrong (any cause).
    pub errors: u64,
    pub none_typical: u64,
    /// More than one typical candidate.
    pub ambiguous: u64,
    /// Ambiguous decodings where another candidate's codewords coincide
    /// with the transmitted ones.
    pub collisions: u64,
    /// A single typical candidate carrying the wrong messages.
    pub wrong_unique: u64,
    /// Trials with at least one error at this destination.
    pub trials_in_error: u64,
}

impl StageCounts {
    fn add(&mut self, o: &StageCounts) {
        self.decodings += o.decodings;
        self.errors += o.errors;
        self.none_typical += o.none_typical;
        self.ambiguous += o.ambiguous;
        self.collisions += o.collisions;
        self.wrong_unique += o.wrong_unique;
        self.trials_in_error += o.trials_in_error;
    }

    fn record(&mut self, d: &Decoded, correct: bool) {
        self.decodings += 1;
        match d.typical {
            0 => self.none_typical += 1,
            1 if !correct => self.wrong_unique += 1,
            1 => {}
            _ => {
                self.ambiguous += 1;
                if d.collision {
                    self.collisions += 1;
                }
            }
        }
        if d.typical != 1 || !correct {
            self.errors += 1;
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Decoded {
    /// Number of typical candidates.
    typical: u64,
    /// First typical candidate (index into the candidate list).
    first: Option<usize>,
    collision: bool,
}

/// Scans candidates `0..count`; `typical(c)` tests one and `same(c, truth)`
/// says whether two candidates carry identical codewords.
fn decode(
    count: usize,
    truth: usize,
    mut typical: impl FnMut(usize) -> bool,
    same: impl Fn(usize, usize) -> bool,
) -> Decoded {
    let mut d = Decoded { typical: 0, first: None, collision: false };
    let mut truth_typical = false;
    let mut twins = false;
    for c in 0..count {
        if typical(c) {
            d.typical += 1;
            d.first.get_or_insert(c);
            if c == truth {
                truth_typical = true;
            } else if same(c, truth) {
                twins = true;
            }
        }
    }
    d.collision = truth_typical && twins;
    d
}

#[derive(Debug, Clone, Default)]
struct TrialOutcome {
    error: bool,
    dest1: StageCounts,
    dest2: StageCounts,
    encoder_searches: u64,
    encoder_failures: u64,
    encoder_failure_trial: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub scheme: &'static str,
    pub params: SimParams,
    /// Codeword counts (M0, M1, M2, L1, L2).
    pub counts: [u64; 5],
    /// Stored codeword symbols per trial.
    pub memory_symbols: u64,
    pub trials: u64,
    pub trial_errors: u64,
    pub dest1: StageCounts,
    pub dest2: StageCounts,
    pub encoder_searches: u64,
    pub encoder_failures: u64,
    pub encoder_failure_trials: u64,
}

impl SimReport {
    /// Fraction of trials in which some message estimate was wrong.
    pub fn pe(&self) -> f64 {
        self.trial_errors as f64 / self.trials as f64
    }

    pub fn wilson95(&self) -> (f64, f64) {
        wilson_interval(self.trial_errors, self.trials, Z95)
    }

    /// Fraction of message-block bin searches with no typical pair.
    pub fn encoder_failure_rate(&self) -> f64 {
        if self.encoder_searches == 0 {
            0.0
        } else {
            self.encoder_failures as f64 / self.encoder_searches as f64
        }
    }

    /// Rates log2(count)/n actually used, (R0, R1, R2).
    pub fn realized_rates(&self) -> [f64; 3] {
        let n = self.params.n;
        [realized_rate(n, self.counts[0]), realized_rate(n, self.counts[1]), realized_rate(n, self.counts[2])]
    }

    pub fn realized_bin_rates(&self) -> (f64, f64) {
        let n = self.params.n;
        (realized_rate(n, self.counts[3]), realized_rate(n, self.counts[4]))
    }

    /// Realized rates averaged over all B blocks.
    pub fn effective_rates(&self) -> [f64; 3] {
        let b = self.params.blocks as f64;
        self.realized_rates().map(|r| r * (b - 1.0) / b)
    }

    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let w = &mut s;
        let _ = writeln!(w, "scheme: {}", self.scheme);
        let _ = writeln!(w, "n: {}", p.n);
        let _ = writeln!(w, "blocks: {}", p.blocks);
        let _ = writeln!(w, "trials: {}", p.trials);
        let _ = writeln!(w, "seed: {}", p.seed);
        let _ = writeln!(w, "typicality: {} epsilon={}", p.rule.name(), p.epsilon);
        let _ = writeln!(w, "requested_rates: {:.6} {:.6} {:.6}", p.rates.r0, p.rates.r1, p.rates.r2);
        if self.scheme == "binning" {
            let _ = writeln!(w, "requested_bin_rates: {:.6} {:.6}", p.bin_rates.0, p.bin_rates.1);
        }
        let c = self.counts;
        let _ = writeln!(w, "codewords: M0={} M1={} M2={} L1={} L2={}", c[0], c[1], c[2], c[3], c[4]);
        let [r0, r1, r2] = self.realized_rates();
        let _ = writeln!(w, "realized_rates: {r0:.6} {r1:.6} {r2:.6}");
        if self.scheme == "binning" {
            let (l1, l2) = self.realized_bin_rates();
            let _ = writeln!(w, "realized_bin_rates: {l1:.6} {l2:.6}");
        }
        let [e0, e1, e2] = self.effective_rates();
        let _ = writeln!(w, "effective_rates: {e0:.6} {e1:.6} {e2:.6}");
        let _ = writeln!(w, "memory_symbols: {}", self.memory_symbols);
        for (name, st) in [("dest1", &self.dest1), ("dest2", &self.dest2)] {
            let _ = writeln!(
                w,
                "{name}: decodings={} errors={} none_typical={} ambiguous={} collisions={} wrong_unique={} trials_in_error={}",
                st.decodings, st.errors, st.none_typical, st.ambiguous, st.collisions, st.wrong_unique, st.trials_in_error
            );
        }
        if self.scheme == "binning" {
            let _ = writeln!(
                w,
                "encoder: searches={} failures={} failure_rate={:.6} trials_with_failure={}",
                self.encoder_searches,
                self.encoder_failures,
                self.encoder_failure_rate(),
                self.encoder_failure_trials
            );
        }
        let (lo, hi) = self.wilson95();
        let _ = writeln!(w, "trial_errors: {}", self.trial_errors);
        let _ = writeln!(w, "pe: {:.6}", self.pe());
        let _ = writeln!(w, "pe_wilson95: {lo:.6} {hi:.6}");
        s
    }

    fn aggregate(
        scheme: &'static str,
        params: &SimParams,
        counts: [u64; 5],
        memory_symbols: u64,
        outcomes: Vec<TrialOutcome>,
    ) -> SimReport {
        let mut r = SimReport {
            scheme,
            params: params.clone(),
            counts,
            memory_symbols,
            trials: outcomes.len() as u64,
            trial_errors: 0,
            dest1: StageCounts::default(),
            dest2: StageCounts::default(),
            encoder_searches: 0,
            encoder_failures: 0,
            encoder_failure_trials: 0,
        };
        for o in &outcomes {
            r.trial_errors += u64::from(o.error);
            r.dest1.add(&o.dest1);
            r.dest2.add(&o.dest2);
            r.encoder_searches += o.encoder_searches;
            r.encoder_failures += o.encoder_failures;
            r.encoder_failure_trials += u64::from(o.encoder_failure_trial);
        }
        r
    }
}

fn check_memory(symbols: u128, cap: u64) -> Result<u64> {
    if symbols > cap as u128 {
        return Err(RbcError::Resource(format!(
            "codebooks need {symbols} symbols per trial, above the cap of {cap}"
        )));
    }
    Ok(symbols as u64)
}

/// Rows p(y | inputs) flattened per input pair `a * cb + b`.
fn rows_of(ca: usize, cb: usize, cy: usize, p: impl Fn(usize, usize, usize) -> f64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(ca * cb);
    for a in 0..ca {
        for b in 0..cb {
            out.push((0..cy).map(|y| p(a, b, y)).collect());
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Orthogonal scheme

struct OrthSetup<'a> {
    p: &'a SimParams,
    m: [usize; 3],
    f: [&'a Factor; 3],
    y1_rows: Vec<Vec<f64>>,
    y2_rows: Vec<Vec<f64>>,
    cx1: usize,
    d1: TypChecker,
    d2: TypChecker,
}

/// x1(w0'), xR(w0', w0, w1), xD(w0', w2), each `n` symbols.
struct OrthCodebook {
    x1: Vec<u8>,
    xr: Vec<u8>,
    xd: Vec<u8>,
}

impl OrthSetup<'_> {
    fn codebook(&self, rng: &mut ChaCha8Rng) -> OrthCodebook {
        let n = self.p.n;
        let [m0, m1, m2] = self.m;
        let mut x1 = Vec::with_capacity(m0 * n);
        for _ in 0..m0 {
            draw_seq(rng, &mut x1, n, |_| self.f[0].row(&[]));
        }
        let mut xr = Vec::with_capacity(m0 * m0 * m1 * n);
        let mut xd = Vec::with_capacity(m0 * m2 * n);
        for wp in 0..m0 {
            let base = &x1[wp * n..(wp + 1) * n];
            for _ in 0..m0 * m1 {
                draw_seq(rng, &mut xr, n, |i| self.f[1].row(&[base[i] as usize]));
            }
            for _ in 0..m2 {
                draw_seq(rng, &mut xd, n, |i| self.f[2].row(&[base[i] as usize]));
            }
        }
        OrthCodebook { x1, xr, xd }
    }

    fn trial(&self, t: usize) -> TrialOutcome {
        let n = self.p.n;
        let b = self.p.blocks;
        let [m0, m1, m2] = self.m;
        let mut rng = rng_for(self.p.seed, ORTH_STREAM, t as u64);
        let cb = self.codebook(&mut rng);
        let x1 = |w: usize| &cb.x1[w * n..(w + 1) * n];
        let xr = |wp: usize, w0: usize, w1: usize| {
            let k = (wp * m0 + w0) * m1 + w1;
            &cb.xr[k * n..(k + 1) * n]
        };
        let xd = |wp: usize, w2: usize| {
            let k = wp * m2 + w2;
            &cb.xd[k * n..(k + 1) * n]
        };
        // Index 0 is the fixed first-block (and last-block) message.
        let mut w0 = vec![0usize; b + 1];
        let mut w1 = vec![0usize; b + 1];
        let mut w2 = vec![0usize; b + 1];
        for i in 1..b {
            w0[i] = rng.gen_range(0..m0);
            w1[i] = rng.gen_range(0..m1);
            w2[i] = rng.gen_range(0..m2);
        }
        let mut relay = vec![0usize; b + 1];
        let mut out = TrialOutcome::default();
        let mut buf = Vec::new();
        let (mut e1, mut e2) = (false, false);
        let mut y1 = Vec::with_capacity(n);
        let mut y2 = Vec::with_capacity(n);
        for i in 1..=b {
            let sx1 = x1(relay[i - 1]);
            let sxr = xr(w0[i - 1], w0[i], w1[i]);
            let sxd = xd(w0[i - 1], w2[i - 1]);
            y1.clear();
            y2.clear();
            draw_seq(&mut rng, &mut y1, n, |k| &self.y1_rows[sxr[k] as usize * self.cx1 + sx1[k] as usize]);
            draw_seq(&mut rng, &mut y2, n, |k| &self.y2_rows[sxd[k] as usize * self.cx1 + sx1[k] as usize]);
            if i < b {
                let known = relay[i - 1];
                let truth = w0[i] * m1 + w1[i];
                let d = decode(
                    m0 * m1,
                    truth,
                    |c| self.d1.check(&[x1(known), xr(known, c / m1, c % m1), &y1], &mut buf),
                    |c, o| xr(known, c / m1, c % m1) == xr(known, o / m1, o % m1),
                );
                let est = d.first.unwrap_or(0);
                relay[i] = est / m1;
                let ok = d.typical == 1 && est == truth;
                out.dest1.record(&d, ok);
                e1 |= !ok;
            }
            if i >= 2 {
                let truth = w0[i - 1] * m2 + w2[i - 1];
                let d = decode(
                    m0 * m2,
                    truth,
                    |c| self.d2.check(&[x1(c / m2), xd(c / m2, c % m2), &y2], &mut buf),
                    |c, o| x1(c / m2) == x1(o / m2) && xd(c / m2, c % m2) == xd(o / m2, o % m2),
                );
                let ok = d.typical == 1 && d.first == Some(truth);
                out.dest2.record(&d, ok);
                e2 |= !ok;
            }
        }
        out.dest1.trials_in_error = u64::from(e1);
        out.dest2.trials_in_error = u64::from(e2);
        out.error = e1 || e2;
        out
    }
}

/// Decode-and-forward over orthogonal links: the relay decodes (w0, w1)
/// from y1 and forwards x1(w0) in the next block; destination 2 decodes the
/// previous block's (w0, w2) from y2.
pub fn simulate_orthogonal(ch: &OrthogonalRbcChannel, law: &OrthogonalAux, p: &SimParams) -> Result<SimReport> {
    p.validate()?;
    let [cxr, cxd, cx1, cy1, cy2] = ch.cards();
    if law.cards() != [cx1, cxr, cxd] {
        return Err(RbcError::input("input law cardinalities do not match the channel"));
    }
    let n = p.n;
    let mc = [codeword_count(n, p.rates.r0)?, codeword_count(n, p.rates.r1)?, codeword_count(n, p.rates.r2)?];
    let memory = (mc[0] as u128 + (mc[0] as u128).pow(2) * mc[1] as u128 + mc[0] as u128 * mc[2] as u128) * n as u128;
    let memory = check_memory(memory, p.max_symbols)?;
    let joint = law.compose(ch)?;
    let setup = OrthSetup {
        p,
        m: mc.map(|c| c as usize),
        f: law.factors(),
        y1_rows: rows_of(cxr, cx1, cy1, |xr, x1, y| ch.p1(xr, x1, y)),
        y2_rows: rows_of(cxd, cx1, cy2, |xd, x1, y| ch.p2(xd, x1, y)),
        cx1,
        d1: TypChecker::new(&joint, &["X1", "XR", "Y1"], p.rule, p.epsilon)?,
        d2: TypChecker::new(&joint, &["X1", "XD", "Y2"], p.rule, p.epsilon)?,
    };
    let outcomes = p.exec.map(p.trials, |t| setup.trial(t));
    Ok(SimReport::aggregate("orthogonal", p, [mc[0], mc[1], mc[2], 1, 1], memory, outcomes))
}

// ---------------------------------------------------------------------------
// Superposition and binning scheme

struct BinSetup<'a> {
    p: &'a SimParams,
    /// M0, M1, M2, L1, L2.
    m: [usize; 5],
    cards: [usize; 5],
    p_x1: &'a [f64],
    /// p(t | x1) per x1.
    p_t: Vec<Vec<f64>>,
    /// p(u1 | t, x1) and p(u2 | t, x1) per t * |X1| + x1.
    p_u1: Vec<Vec<f64>>,
    p_u2: Vec<Vec<f64>>,
    p_x: &'a Factor,
    /// p(y1, y2 | x, x1) per x * |X1| + x1, y1 major.
    y_rows: Vec<Vec<f64>>,
    enc: TypChecker,
    d1: TypChecker,
    d2a: TypChecker,
    d2b: TypChecker,
}

/// One of the two independent codebooks: x1(w0'), t(w0', w0),
/// u1(w0', w0, w1, v1), u2(w0', w0, w2, v2). Source codewords x are drawn
/// when sent, since no decoder looks at unsent ones.
struct BinCodebook {
    x1: Vec<u8>,
    t: Vec<u8>,
    u1: Vec<u8>,
    u2: Vec<u8>,
}

impl BinSetup<'_> {
    fn codebook(&self, rng: &mut ChaCha8Rng) -> BinCodebook {
        let n = self.p.n;
        let [m0, m1, m2, l1, l2] = self.m;
        let cx1 = self.cards[0];
        let mut cb = BinCodebook {
            x1: Vec::with_capacity(m0 * n),
            t: Vec::with_capacity(m0 * m0 * n),
            u1: Vec::with_capacity(m0 * m0 * m1 * l1 * n),
            u2: Vec::with_capacity(m0 * m0 * m2 * l2 * n),
        };
        for _ in 0..m0 {
            draw_seq(rng, &mut cb.x1, n, |_| self.p_x1);
        }
        for wp in 0..m0 {
            let sx1 = &cb.x1[wp * n..(wp + 1) * n];
            for _ in 0..m0 {
                draw_seq(rng, &mut cb.t, n, |i| &self.p_t[sx1[i] as usize]);
            }
        }
        for k in 0..m0 * m0 {
            let sx1 = &cb.x1[(k / m0) * n..(k / m0 + 1) * n];
            let st = &cb.t[k * n..(k + 1) * n];
            for _ in 0..m1 * l1 {
                draw_seq(rng, &mut cb.u1, n, |i| &self.p_u1[st[i] as usize * cx1 + sx1[i] as usize]);
            }
            for _ in 0..m2 * l2 {
                draw_seq(rng, &mut cb.u2, n, |i| &self.p_u2[st[i] as usize * cx1 + sx1[i] as usize]);
            }
        }
        cb
    }

    fn trial(&self, trial: usize) -> TrialOutcome {
        let n = self.p.n;
        let b = self.p.blocks;
        let [m0, m1, m2, l1, l2] = self.m;
        let [cx1, _, _, _, _] = self.cards;
        let mut rng = rng_for(self.p.seed, BIN_STREAM, trial as u64);
        let books = [self.codebook(&mut rng), self.codebook(&mut rng)];
        // Block i uses codebook (i - 1) % 2: odd blocks the first, even the second.
        let book = |i: usize| &books[(i + 1) % 2];
        let seq = |k: usize| k * n..(k + 1) * n;
        let x1 = |i: usize, wp: usize| &book(i).x1[seq(wp)];
        let tt = |i: usize, wp: usize, w0: usize| &book(i).t[seq(wp * m0 + w0)];
        let u1 =
            |i: usize, wp: usize, w0: usize, w1: usize, v1: usize| &book(i).u1[seq(((wp * m0 + w0) * m1 + w1) * l1 + v1)];
        let u2 =
            |i: usize, wp: usize, w0: usize, w2: usize, v2: usize| &book(i).u2[seq(((wp * m0 + w0) * m2 + w2) * l2 + v2)];
        let mut w0 = vec![0usize; b + 1];
        let mut w1 = vec![0usize; b + 1];
        let mut w2 = vec![0usize; b + 1];
        for i in 1..b {
            w0[i] = rng.gen_range(0..m0);
            w1[i] = rng.gen_range(0..m1);
            w2[i] = rng.gen_range(0..m2);
        }
        let mut relay = vec![0usize; b + 1];
        let mut dest2 = vec![0usize; b + 1];
        let mut out = TrialOutcome::default();
        let mut buf = Vec::new();
        let (mut e1, mut e2) = (false, false);
        let mut y1 = Vec::with_capacity(n);
        let mut y2_prev: Vec<u8> = Vec::with_capacity(n);
        let mut y2 = Vec::with_capacity(n);
        let mut sx = Vec::with_capacity(n);
        let mut sent_v = vec![(0usize, 0usize); b + 1];
        for i in 1..=b {
            let (wp, a, m, c) = (w0[i - 1], w0[i], w1[i], w2[i]);
            // Bin search over (v1, v2), v1 major.
            let mut found = None;
            'search: for v1 in 0..l1 {
                for v2 in 0..l2 {
                    let ok = self.enc.check(&[x1(i, wp), tt(i, wp, a), u1(i, wp, a, m, v1), u2(i, wp, a, c, v2)], &mut buf);
                    if ok {
                        found = Some((v1, v2));
                        break 'search;
                    }
                }
            }
            if i < b {
                out.encoder_searches += 1;
                if found.is_none() {
                    out.encoder_failures += 1;
                    out.encoder_failure_trial = true;
                }
            }
            let (v1, v2) = found.unwrap_or((0, 0));
            sent_v[i] = (v1, v2);
            let sx1 = x1(i, relay[i - 1]);
            let (st, su1, su2) = (tt(i, wp, a), u1(i, wp, a, m, v1), u2(i, wp, a, c, v2));
            // The relay sends its own estimate; the source's x is built on the true w0[i-1].
            let sx1_src = x1(i, wp);
            sx.clear();
            draw_seq(&mut rng, &mut sx, n, |k| {
                self.p_x.row(&[st[k] as usize, su1[k] as usize, su2[k] as usize, sx1_src[k] as usize])
            });
            let cy2 = self.cards[4];
            y1.clear();
            y2.clear();
            for k in 0..n {
                let joint = draw(&mut rng, &self.y_rows[sx[k] as usize * cx1 + sx1[k] as usize]) as usize;
                y1.push((joint / cy2) as u8);
                y2.push((joint % cy2) as u8);
            }
            if i < b {
                let known = relay[i - 1];
                let per = m1 * l1;
                let cand_u1 = |c: usize| u1(i, known, c / per, (c % per) / l1, c % l1);
                let d = decode(
                    m0 * per,
                    (a * m1 + m) * l1 + v1,
                    |c| self.d1.check(&[x1(i, known), tt(i, known, c / per), cand_u1(c), &y1], &mut buf),
                    |c, o| tt(i, known, c / per) == tt(i, known, o / per) && cand_u1(c) == cand_u1(o),
                );
                let est = d.first.unwrap_or(0);
                let (ea, em) = (est / per, (est % per) / l1);
                relay[i] = ea;
                let ok = d.typical == 1 && (ea, em) == (a, m);
                out.dest1.record(&d, ok);
                e1 |= !ok;
            }
            if i >= 2 {
                // Decode block i - 1 jointly from y2 of blocks i - 1 and i.
                let j = i - 1;
                let known = dest2[j - 1];
                let per = m2 * l2;
                let cand_u2 = |c: usize| u2(j, known, c / per, (c % per) / l2, c % l2);
                let d = decode(
                    m0 * per,
                    (w0[j] * m2 + w2[j]) * l2 + sent_v[j].1,
                    |c| {
                        self.d2a.check(&[x1(j, known), tt(j, known, c / per), cand_u2(c), &y2_prev], &mut buf)
                            && self.d2b.check(&[x1(i, c / per), &y2], &mut buf)
                    },
                    |c, o| {
                        tt(j, known, c / per) == tt(j, known, o / per)
                            && cand_u2(c) == cand_u2(o)
                            && x1(i, c / per) == x1(i, o / per)
                    },
                );
                let est = d.first.unwrap_or(0);
                let (ea, ec) = (est / per, (est % per) / l2);
                dest2[j] = ea;
                let ok = d.typical == 1 && (ea, ec) == (w0[j], w2[j]);
                out.dest2.record(&d, ok);
                e2 |= !ok;
            }
            std::mem::swap(&mut y2_prev, &mut y2);
        }
        out.dest1.trials_in_error = u64::from(e1);
        out.dest2.trials_in_error = u64::from(e2);
        out.error = e1 || e2;
        out
    }
}

/// Superposition coding with binning, decode-and-forward of the common
/// message at destination 1 and two-block sliding-window decoding at
/// destination 2.
pub fn simulate_binning(ch: &RbcChannel, aux: &AuxJoint, p: &SimParams) -> Result<SimReport> {
    p.validate()?;
    let [cx, cx1, cy1, cy2] = ch.cards();
    let cards = aux.cards();
    if cards[0] != cx1 || cards[4] != cx {
        return Err(RbcError::input("auxiliary cardinalities do not match the channel"));
    }
    let n = p.n;
    let mc = [
        codeword_count(n, p.rates.r0)?,
        codeword_count(n, p.rates.r1)?,
        codeword_count(n, p.rates.r2)?,
        codeword_count(n, p.bin_rates.0)?,
        codeword_count(n, p.bin_rates.1)?,
    ];
    let pairs = mc[3] as u128 * mc[4] as u128;
    if pairs > p.max_bin_pairs as u128 {
        return Err(RbcError::Resource(format!(
            "bin search over {pairs} pairs exceeds the cap of {}",
            p.max_bin_pairs
        )));
    }
    let m: Vec<u128> = mc.iter().map(|&c| c as u128).collect();
    let per_book = m[0] + m[0] * m[0] + m[0] * m[0] * (m[1] * m[3] + m[2] * m[4]);
    let memory = check_memory(2 * per_book * n as u128, p.max_symbols)?;

    let [f_x1, f_t, f_u, f_x] = aux.factors();
    let [_, ct, cu1, cu2, _] = cards;
    let mut p_u1 = Vec::with_capacity(ct * cx1);
    let mut p_u2 = Vec::with_capacity(ct * cx1);
    for t in 0..ct {
        for x1 in 0..cx1 {
            let row = f_u.row(&[t, x1]);
            p_u1.push((0..cu1).map(|a| (0..cu2).map(|b| row[a * cu2 + b]).sum()).collect());
            p_u2.push((0..cu2).map(|b| (0..cu1).map(|a| row[a * cu2 + b]).sum()).collect());
        }
    }
    let joint = aux.compose(ch)?;
    let setup = BinSetup {
        p,
        m: mc.map(|c| c as usize),
        cards: [cx1, ct, cu1, cu2, cy2],
        p_x1: f_x1.row(&[]),
        p_t: (0..cx1).map(|x1| f_t.row(&[x1]).to_vec()).collect(),
        p_u1,
        p_u2,
        p_x: f_x,
        y_rows: rows_of(cx, cx1, cy1 * cy2, |x, x1, y| ch.p(x, x1, y / cy2, y % cy2)),
        enc: TypChecker::new(&joint, &["X1", "T", "U1", "U2"], p.rule, p.epsilon)?,
        d1: TypChecker::new(&joint, &["X1", "T", "U1", "Y1"], p.rule, p.epsilon)?,
        d2a: TypChecker::new(&joint, &["X1", "T", "U2", "Y2"], p.rule, p.epsilon)?,
        d2b: TypChecker::new(&joint, &["X1", "Y2"], p.rule, p.epsilon)?,
    };
    let outcomes = p.exec.map(p.trials, |t| setup.trial(t));
    Ok(SimReport::aggregate("binning", p, mc, memory, outcomes))
}
