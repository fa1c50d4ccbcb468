//! Independent runs, near-maps and diff types, the four decomposition
//! builders, cover checking, and SRI extraction by monochromatic triangles.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::analysis::{charge_of_config, potential_of_config, AnalysisError};
use crate::augmented::{AugConfig, AugError, AugRun, AugState, AugWfa, LetterId};
use crate::bounds::{ramsey_bound, BoundsError, BoundsValue, Evaluator, Mode, Name};
use crate::sri::{check_sri, SriCheck, SriDecomposition, SriError, SriKind, SriParams};
use crate::tropical::stabilisation_constant;
use crate::weight::{Fin, Inf, Weight, WeightError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ZoomError {
    #[error("run does not match the word: {0}")]
    RunMismatch(String),
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error("amplitude insufficient: {0}")]
    AmplitudeInsufficient(String),
    #[error("no level set found within the window")]
    NoLevelSet,
    #[error("|w2| = {len} is not a multiple of the quantum {quantum}")]
    QuantumMisaligned { len: usize, quantum: u64 },
    #[error("charge drops by {drop} at position {position}, above the asserted bound")]
    DropBoundViolated { position: usize, drop: i64 },
    #[error("thresholds inconsistent: {0}")]
    ThresholdsInconsistent(String),
    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),
    #[error("postcondition violated: {0}")]
    ContractViolated(String),
    #[error("no SRI extracted: {0}")]
    NoSri(String),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Sri(#[from] SriError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Aug(#[from] AugError),
    #[error(transparent)]
    Weight(#[from] WeightError),
}

/// Injectable stand-ins for the gap, cover, amplitude, length, and type-count
/// bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoomThresholds {
    pub gap: i64,
    pub cover: i64,
    pub amp: i64,
    pub seg_min_len: u64,
    pub seg_count: u64,
    pub seg_quantum: u64,
}

impl ZoomThresholds {
    pub fn validate(&self) -> Result<(), ZoomError> {
        let bad = |m: &str| Err(ZoomError::InvalidThresholds(m.to_string()));
        if self.gap <= 0 || self.cover <= 0 || self.amp <= 0 {
            return bad("gap, cover and amp must be positive");
        }
        if self.seg_min_len == 0 || self.seg_quantum == 0 {
            return bad("segment lengths must be positive");
        }
        if self.seg_count < 3 {
            return bad("seg_count must be at least 3");
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<ZoomThresholds, ZoomError> {
        let th: ZoomThresholds =
            serde_json::from_str(s).map_err(|e| ZoomError::InvalidThresholds(e.to_string()))?;
        th.validate()?;
        Ok(th)
    }

    /// Thresholds taken from the bound functions at `(d, i)` for `|S| = n`,
    /// saturated to the integer range. Validation is left to the caller.
    pub fn from_bounds(n: u64, base_weight: u64, d: u64, i: u64, kind: SriKind) -> Result<ZoomThresholds, ZoomError> {
        let mode = Mode::saturated(i64::MAX as u64);
        let mut ev = match kind {
            SriKind::Simple => Evaluator::simp(n, base_weight, mode.clone())?,
            SriKind::General => Evaluator::gen_default(n, base_weight, mode.clone())?,
        };
        let int = |v: BoundsValue| v.to_u64_saturating().min(i64::MAX as u64);
        let cover_prev = int(ev.eval(Name::Cov, d + 1, i.saturating_sub(1))?);
        let cover = int(ev.eval(Name::Cov, d + 1, i)?);
        let amp = int(ev.eval(Name::Amp, d + 1, i)?);
        let len_next = int(ev.eval(Name::Len, d + 1, i + 1)?);
        let typ = ev.eval(Name::Typ, d + 1, i)?;
        let ramsey = int(ramsey_bound(&typ, 3, &mode)?);
        let m = stabilisation_constant(&BigUint::from(n));
        let div = BigUint::from(32u32) * &m * &m;
        let len_d1 = ev.eval(Name::Len, d, 1)?;
        let quantum = match len_d1.exact() {
            Some(v) => u64::try_from(v / &div).unwrap_or(u64::MAX),
            None => u64::MAX,
        };
        Ok(ZoomThresholds {
            gap: (cover_prev / 2) as i64,
            cover: cover as i64,
            amp: amp as i64,
            seg_min_len: len_next,
            seg_count: ramsey,
            seg_quantum: quantum,
        })
    }
}

/// A word split as `w1·w2·w3`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Window {
    pub w1: Vec<LetterId>,
    pub w2: Vec<LetterId>,
    pub w3: Vec<LetterId>,
}

impl Window {
    pub fn new(w1: &[LetterId], w2: &[LetterId], w3: &[LetterId]) -> Window {
        Window {
            w1: w1.to_vec(),
            w2: w2.to_vec(),
            w3: w3.to_vec(),
        }
    }

    pub fn word(&self) -> Vec<LetterId> {
        [&self.w1[..], &self.w2, &self.w3].concat()
    }

    pub fn to_json(&self, aug: &AugWfa) -> Result<Value, ZoomError> {
        Ok(json!({
            "w1": aug.word_json(&self.w1)?,
            "w2": aug.word_json(&self.w2)?,
            "w3": aug.word_json(&self.w3)?,
        }))
    }
}

fn check_runs(aug: &AugWfa, word: &[LetterId], runs: &[AugRun]) -> Result<(), ZoomError> {
    let s0 = aug.initial_config();
    for (k, r) in runs.iter().enumerate() {
        if r.len() < word.len() || r.word()[..word.len()] != *word {
            return Err(ZoomError::RunMismatch(format!("run {k} does not read the window")));
        }
        if r.start != aug.initial() || !aug.is_seamless(&s0, r)? {
            return Err(ZoomError::RunMismatch(format!("run {k} is not seamless from s0")));
        }
    }
    Ok(())
}

fn truncate(run: &AugRun, len: usize) -> AugRun {
    AugRun {
        start: run.start,
        steps: run.steps[..len].to_vec(),
    }
}

/// Least pairwise distance between runs at the non-empty prefixes of `w2`;
/// `∞` for fewer than two runs.
pub fn independent_gap(aug: &AugWfa, window: &Window, runs: &[AugRun]) -> Result<Weight, ZoomError> {
    let head = [&window.w1[..], &window.w2].concat();
    check_runs(aug, &head, runs)?;
    let mut best = Inf;
    for k in window.w1.len() + 1..=head.len() {
        let ws: Vec<i64> = runs.iter().map(|r| r.prefix_wt(k)).collect::<Result<_, _>>()?;
        for a in 0..ws.len() {
            for b in a + 1..ws.len() {
                let d = (ws[a] as i128 - ws[b] as i128).unsigned_abs().min(i64::MAX as u128) as i64;
                best = best.min(Fin(d));
            }
        }
    }
    Ok(best)
}

/// States within `b` of a run's endpoint, with signed offsets.
pub type NearMap = BTreeMap<AugState, i64>;

fn near_at(c: &AugConfig, anchor: i64, b: i64) -> NearMap {
    c.iter()
        .filter_map(|(&s, &v)| {
            let d = v as i128 - anchor as i128;
            (d.unsigned_abs() <= b as u128).then_some((s, d as i64))
        })
        .collect()
}

/// `near_b(ρ, x)` for the prefix `x` of the run's word.
pub fn near(aug: &AugWfa, run: &AugRun, prefix: &[LetterId], b: i64) -> Result<NearMap, ZoomError> {
    check_runs(aug, prefix, std::slice::from_ref(run))?;
    let c = aug.xconf(&aug.initial_config(), prefix)?;
    Ok(near_at(&c, run.prefix_wt(prefix.len())?, b))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct RunType {
    pub before: NearMap,
    pub sign: i8,
    pub after: NearMap,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct DiffType(pub Vec<RunType>);

fn diff_type_at(runs: &[AugRun], configs: &[AugConfig], from: usize, to: usize, b: i64) -> Result<DiffType, ZoomError> {
    let mut out = Vec::with_capacity(runs.len());
    for r in runs {
        let (a, z) = (r.prefix_wt(from)?, r.prefix_wt(to)?);
        out.push(RunType {
            before: near_at(&configs[from], a, b),
            sign: (z - a).signum() as i8,
            after: near_at(&configs[to], z, b),
        });
    }
    Ok(DiffType(out))
}

/// `diff_type_b(I, x, y)`.
pub fn diff_type(aug: &AugWfa, runs: &[AugRun], x: &[LetterId], y: &[LetterId], b: i64) -> Result<DiffType, ZoomError> {
    let xy = [x, y].concat();
    check_runs(aug, &xy, runs)?;
    let configs = aug.xconf_trace(&aug.initial_config(), &xy)?;
    diff_type_at(runs, &configs, x.len(), xy.len(), b)
}

/// `3^i·(2b+2)^{2|S|i}`, the number of possible diff types.
pub fn diff_type_bound(i: u32, b: u64, states: u32) -> BigUint {
    BigUint::from(3u32).pow(i) * BigUint::from(2 * b + 2).pow(2 * states * i)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecompKind {
    PhiIncreasing,
    PhiBounded,
    PsiDecreasing,
    PsiBounded,
}

/// `w2 = u_0·u_1⋯u_t·u_{t+1}` with the tracked value at each cut.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Decomposition {
    pub kind: DecompKind,
    pub segments: Vec<Vec<LetterId>>,
    /// `|v_j|` for `0 ≤ j ≤ t`.
    pub cuts: Vec<usize>,
    /// `φ` or `ψ` after `w1·v_j`.
    pub values: Vec<i64>,
}

impl Decomposition {
    pub fn t(&self) -> usize {
        self.cuts.len() - 1
    }

    pub fn to_json(&self, aug: &AugWfa) -> Result<Value, ZoomError> {
        Ok(json!({
            "kind": self.kind,
            "segments": self.segments.iter().map(|s| aug.word_json(s)).collect::<Result<Vec<_>, _>>()?,
            "cuts": self.cuts,
            "values": self.values,
        }))
    }

    fn from_cuts(kind: DecompKind, w2: &[LetterId], cuts: Vec<usize>, vals: &[i64], negate: bool) -> Decomposition {
        let mut segments = Vec::with_capacity(cuts.len() + 1);
        let mut prev = 0;
        for &c in &cuts {
            segments.push(w2[prev..c].to_vec());
            prev = c;
        }
        segments.push(w2[prev..].to_vec());
        let values = cuts.iter().map(|&c| if negate { -vals[c] } else { vals[c] }).collect();
        Decomposition {
            kind,
            segments,
            cuts,
            values,
        }
    }
}

/// `φ` (or `−ψ`, so that both read as "increasing") after `w1·w2[..k]`.
fn tracked_values(
    aug: &AugWfa,
    window: &Window,
    phi: bool,
    dominance: &crate::analysis::DominanceParams,
) -> Result<Vec<i64>, ZoomError> {
    let head = [&window.w1[..], &window.w2].concat();
    let trace = aug.xconf_trace(&aug.initial_config(), &head)?;
    trace[window.w1.len()..]
        .iter()
        .map(|c| {
            Ok(if phi {
                potential_of_config(aug, c, dominance)?.phi
            } else {
                -charge_of_config(c)?.psi
            })
        })
        .collect()
}

/// Settings shared by the decomposition builders and the zoom step.
#[derive(Clone)]
pub struct ZoomConfig {
    pub th: ZoomThresholds,
    /// Per-letter bound on the growth of `φ` is `2·letter_maxw`.
    pub letter_maxw: i64,
    /// Caller-asserted per-letter bound on the drop of `ψ`.
    pub drop_bound: i64,
    pub sri: SriParams,
}

fn increasing_cuts(vals: &[i64], th: &ZoomThresholds, step: i64) -> Result<Vec<usize>, ZoomError> {
    let rise = vals[vals.len() - 1] - vals[0];
    if rise <= th.amp {
        return Err(ZoomError::AmplitudeInsufficient(format!("rise {rise} ≤ amp {}", th.amp)));
    }
    let mut cuts = Vec::new();
    let mut prev = 0usize;
    for j in 0..=th.seg_count as usize {
        let target = vals[prev].saturating_add(step);
        match (prev + 1..vals.len()).find(|&k| vals[k] >= target) {
            Some(k) => {
                cuts.push(k);
                prev = k;
            }
            None => {
                return Err(ZoomError::AmplitudeInsufficient(format!(
                    "segment {j} needs a rise of {step} that the rest of w2 does not reach"
                )))
            }
        }
    }
    Ok(cuts)
}

fn verify_increasing(vals: &[i64], cuts: &[usize], th: &ZoomThresholds) -> Result<(), ZoomError> {
    let fail = |m: String| Err(ZoomError::ContractViolated(m));
    if cuts.len() != th.seg_count as usize + 1 {
        return fail("wrong number of segments".into());
    }
    for j in 1..cuts.len() {
        if vals[cuts[j - 1]] >= vals[cuts[j]] {
            return fail(format!("value does not increase at cut {j}"));
        }
        if (cuts[j - 1]..=cuts[j]).any(|k| vals[k] > vals[cuts[j]]) {
            return fail(format!("segment {j} exceeds its end value"));
        }
        if ((cuts[j] - cuts[j - 1]) as u64) < th.seg_min_len {
            return fail(format!("segment {j} is shorter than seg_min_len"));
        }
    }
    if (cuts[0] as u64) < th.seg_min_len {
        return fail("u_0 is shorter than seg_min_len".into());
    }
    Ok(())
}

/// Greedy shortest-prefix construction: `u_0` and every `u_j` are the
/// shortest extensions whose value exceeds the previous cut by
/// `2·letter_maxw·seg_min_len`.
pub fn decompose_phi_increasing(aug: &AugWfa, window: &Window, cfg: &ZoomConfig) -> Result<Decomposition, ZoomError> {
    cfg.th.validate()?;
    let vals = tracked_values(aug, window, true, &cfg.sri.dominance)?;
    let step = (2 * cfg.letter_maxw).saturating_mul(cfg.th.seg_min_len as i64).max(1);
    let cuts = increasing_cuts(&vals, &cfg.th, step)?;
    verify_increasing(&vals, &cuts, &cfg.th)?;
    Ok(Decomposition::from_cuts(DecompKind::PhiIncreasing, &window.w2, cuts, &vals, false))
}

/// As [`decompose_phi_increasing`] for decreasing `ψ`, with steps of
/// `drop_bound·seg_min_len`. A letter dropping `ψ` by more than `drop_bound`
/// is reported instead.
pub fn decompose_psi_decreasing(aug: &AugWfa, window: &Window, cfg: &ZoomConfig) -> Result<Decomposition, ZoomError> {
    cfg.th.validate()?;
    let vals = tracked_values(aug, window, false, &cfg.sri.dominance)?;
    for k in 1..vals.len() {
        let drop = vals[k] - vals[k - 1];
        if drop > cfg.drop_bound {
            return Err(ZoomError::DropBoundViolated {
                position: window.w1.len() + k,
                drop,
            });
        }
    }
    let step = cfg.drop_bound.saturating_mul(cfg.th.seg_min_len as i64).max(1);
    let cuts = increasing_cuts(&vals, &cfg.th, step)?;
    verify_increasing(&vals, &cuts, &cfg.th)?;
    Ok(Decomposition::from_cuts(DecompKind::PsiDecreasing, &window.w2, cuts, &vals, true))
}

/// Level-set sweep over quantum-aligned positions: look for `t + 1`
/// positions at the current upper level `P`; otherwise keep the longest run
/// of positions strictly below `P` and lower `P`.
fn bounded_cuts(vals: &[i64], th: &ZoomThresholds, len: usize) -> Result<Vec<usize>, ZoomError> {
    let e = th.seg_quantum as usize;
    if !len.is_multiple_of(e) {
        return Err(ZoomError::QuantumMisaligned {
            len,
            quantum: th.seg_quantum,
        });
    }
    let base = vals[0];
    if let Some(k) = vals.iter().position(|&v| (v - base).abs() > th.amp) {
        return Err(ZoomError::PreconditionUnmet(format!("amplitude exceeds amp at prefix {k}")));
    }
    let u0 = (th.seg_min_len as usize).div_ceil(e) * e;
    let positions: Vec<usize> = (u0..=len).step_by(e).collect();
    let need = th.seg_count as usize + 2;
    let mut window: &[usize] = &positions;
    for level in (-th.amp..=th.amp).rev() {
        let hits: Vec<usize> = (0..window.len()).filter(|&k| vals[window[k]] == base + level).collect();
        if hits.len() >= need {
            return Ok(hits[..need].iter().map(|&k| window[k]).collect());
        }
        let mut best = (0, 0);
        let mut start = 0;
        for &h in hits.iter().chain(std::iter::once(&window.len())) {
            if h - start > best.1 - best.0 {
                best = (start, h);
            }
            start = h + 1;
        }
        window = &window[best.0..best.1];
        if window.is_empty() {
            break;
        }
    }
    Err(ZoomError::NoLevelSet)
}

fn verify_bounded(vals: &[i64], cuts: &[usize], th: &ZoomThresholds) -> Result<(), ZoomError> {
    let fail = |m: String| Err(ZoomError::ContractViolated(m));
    let e = th.seg_quantum as usize;
    if cuts.len() != th.seg_count as usize + 2 {
        return fail("wrong number of segments".into());
    }
    let level = vals[cuts[1]];
    if cuts[1..].iter().any(|&c| vals[c] != level) {
        return fail("cut values differ".into());
    }
    if cuts.iter().any(|c| c % e != 0) || (cuts[0] as u64) < th.seg_min_len {
        return fail("cuts are not quantum aligned or u_0 is short".into());
    }
    if (cuts[0]..=cuts[cuts.len() - 1]).step_by(e).any(|p| vals[p] > level) {
        return fail("an aligned position exceeds the level".into());
    }
    Ok(())
}

pub fn decompose_phi_bounded(aug: &AugWfa, window: &Window, cfg: &ZoomConfig) -> Result<Decomposition, ZoomError> {
    cfg.th.validate()?;
    let vals = tracked_values(aug, window, true, &cfg.sri.dominance)?;
    let cuts = bounded_cuts(&vals, &cfg.th, window.w2.len())?;
    verify_bounded(&vals, &cuts, &cfg.th)?;
    Ok(Decomposition::from_cuts(DecompKind::PhiBounded, &window.w2, cuts, &vals, false))
}

pub fn decompose_psi_bounded(aug: &AugWfa, window: &Window, cfg: &ZoomConfig) -> Result<Decomposition, ZoomError> {
    cfg.th.validate()?;
    let vals = tracked_values(aug, window, false, &cfg.sri.dominance)?;
    let cuts = bounded_cuts(&vals, &cfg.th, window.w2.len())?;
    verify_bounded(&vals, &cuts, &cfg.th)?;
    Ok(Decomposition::from_cuts(DecompKind::PsiBounded, &window.w2, cuts, &vals, true))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverReport {
    pub covered: bool,
    /// First `(j, s)` with `s` farther than `b` from every run after `w1·v_j`.
    pub uncovered: Option<(usize, AugState)>,
}

pub fn check_cover(
    aug: &AugWfa,
    window: &Window,
    dec: &Decomposition,
    runs: &[AugRun],
    b: i64,
) -> Result<CoverReport, ZoomError> {
    let head = [&window.w1[..], &window.w2].concat();
    check_runs(aug, &head, runs)?;
    let trace = aug.xconf_trace(&aug.initial_config(), &head)?;
    for j in 1..=dec.t() {
        let pos = window.w1.len() + dec.cuts[j];
        let anchors: Vec<i64> = runs.iter().map(|r| r.prefix_wt(pos)).collect::<Result<_, _>>()?;
        for (&s, &v) in &trace[pos] {
            if !anchors.iter().any(|&a| (v as i128 - a as i128).unsigned_abs() <= b as u128) {
                return Ok(CoverReport {
                    covered: false,
                    uncovered: Some((j, s)),
                });
            }
        }
    }
    Ok(CoverReport {
        covered: true,
        uncovered: None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Extraction {
    pub clique: Option<(usize, usize, usize)>,
    pub colours: usize,
    pub sri: Option<SriDecomposition>,
    /// Why no SRI was returned, or the rejections met along the way.
    pub diagnostics: Vec<String>,
}

/// Colours each pair of cut points by `diff_type_{2b}` and tries the
/// monochromatic triangles in lexicographic order; the first split that
/// passes [`check_sri`] is returned.
pub fn extract_sri(
    aug: &AugWfa,
    window: &Window,
    dec: &Decomposition,
    runs: &[AugRun],
    b: i64,
    kind: SriKind,
    params: &SriParams,
) -> Result<Extraction, ZoomError> {
    let head = [&window.w1[..], &window.w2].concat();
    check_runs(aug, &head, runs)?;
    let t = dec.t();
    let mut out = Extraction {
        clique: None,
        colours: 0,
        sri: None,
        diagnostics: Vec::new(),
    };
    if t < 3 {
        out.diagnostics.push("insufficient segments".into());
        return Ok(out);
    }
    let trace = aug.xconf_trace(&aug.initial_config(), &head)?;
    // vertex j sits at the start of u_j
    let pos = |j: usize| window.w1.len() + dec.cuts[j - 1];
    let mut colour: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut palette: BTreeMap<DiffType, usize> = BTreeMap::new();
    for j in 1..=t {
        for k in j + 1..=t {
            let dt = diff_type_at(runs, &trace, pos(j), pos(k), b.saturating_mul(2))?;
            let n = palette.len();
            colour.insert((j, k), *palette.entry(dt).or_insert(n));
        }
    }
    out.colours = palette.len();
    let word = window.word();
    for j in 1..=t {
        for k in j + 1..=t {
            for l in k + 1..=t {
                let c = colour[&(j, k)];
                if colour[&(k, l)] != c || colour[&(j, l)] != c {
                    continue;
                }
                out.clique.get_or_insert((j, k, l));
                let (p, q, r) = (pos(j), pos(k), pos(l));
                match check_sri(aug, &word[..p], &word[p..q], &word[q..r], &word[r..], params, kind)? {
                    SriCheck::Valid(s) => {
                        out.clique = Some((j, k, l));
                        out.sri = Some(s);
                        return Ok(out);
                    }
                    SriCheck::Rejected { clause, detail } => {
                        out.diagnostics.push(format!("({j},{k},{l}): {clause}: {detail}"));
                    }
                }
            }
        }
    }
    if out.clique.is_none() {
        out.diagnostics.push("no monochromatic triangle".into());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ZoomOutcome {
    Sri {
        decomposition: Decomposition,
        extraction: Extraction,
    },
    NewRun {
        decomposition: Decomposition,
        uncovered: (usize, AugState),
        window: Window,
        runs: Vec<AugRun>,
        gap: i64,
    },
}

/// `2·(cover − 2·seg_min_len·letter_maxw) ≥ cover`: a run ending more than
/// `cover` from all others stays `cover/2` away over a tail of
/// `seg_min_len` letters.
pub fn cover_length_check(th: &ZoomThresholds, letter_maxw: i64) -> bool {
    let drift = 2i128 * th.seg_min_len as i128 * letter_maxw as i128;
    2 * (th.cover as i128 - drift) >= th.cover as i128
}

fn decompose(aug: &AugWfa, window: &Window, cfg: &ZoomConfig, kind: SriKind) -> Result<Decomposition, ZoomError> {
    let phi = kind == SriKind::Simple;
    let vals = tracked_values(aug, window, phi, &cfg.sri.dominance)?;
    let rise = vals[vals.len() - 1] - vals[0];
    match (phi, rise > cfg.th.amp) {
        (true, true) => decompose_phi_increasing(aug, window, cfg),
        (true, false) => decompose_phi_bounded(aug, window, cfg),
        (false, true) => decompose_psi_decreasing(aug, window, cfg),
        (false, false) => decompose_psi_bounded(aug, window, cfg),
    }
}

/// One induction step: decompose `w2`, and either extract an SRI from a
/// cover or re-anchor on the seamless run to the first escaping state.
pub fn zoom_step(
    aug: &AugWfa,
    window: &Window,
    runs: &[AugRun],
    cfg: &ZoomConfig,
    kind: SriKind,
) -> Result<ZoomOutcome, ZoomError> {
    cfg.th.validate()?;
    if !cover_length_check(&cfg.th, cfg.letter_maxw) {
        return Err(ZoomError::ThresholdsInconsistent(
            "cover − 2·seg_min_len·letter_maxw < cover/2".into(),
        ));
    }
    if runs.len() > 1 && independent_gap(aug, window, runs)? < Fin(cfg.th.gap) {
        return Err(ZoomError::PreconditionUnmet("runs are not independent with the required gap".into()));
    }
    if runs.is_empty() {
        return Err(ZoomError::PreconditionUnmet("no independent runs".into()));
    }
    let dec = decompose(aug, window, cfg, kind)?;
    let cover = check_cover(aug, window, &dec, runs, cfg.th.cover)?;
    let Some((j, s)) = cover.uncovered else {
        let ex = extract_sri(aug, window, &dec, runs, cfg.th.cover, kind, &cfg.sri)?;
        if ex.sri.is_none() {
            return Err(ZoomError::NoSri(ex.diagnostics.join("; ")));
        }
        return Ok(ZoomOutcome::Sri {
            decomposition: dec,
            extraction: ex,
        });
    };
    let end = window.w1.len() + dec.cuts[j];
    let word = window.word();
    let pi = aug
        .min_run(&aug.initial_config(), &word[..end], Some(s))?
        .ok_or_else(|| ZoomError::ContractViolated("escaping state is unreachable".into()))?;
    let z2 = (cfg.th.seg_min_len as usize).min(end);
    let next = Window::new(&word[..end - z2], &word[end - z2..end], &word[end..]);
    let mut new_runs: Vec<AugRun> = runs.iter().map(|r| truncate(r, end)).collect();
    new_runs.push(pi);
    let gap = match independent_gap(aug, &next, &new_runs)? {
        Fin(g) => g,
        Inf => i64::MAX,
    };
    if 2 * (gap as i128) < (cfg.th.cover as i128) {
        return Err(ZoomError::ThresholdsInconsistent(format!(
            "certified gap {gap} is below cover/2"
        )));
    }
    Ok(ZoomOutcome::NewRun {
        decomposition: dec,
        uncovered: (j, s),
        window: next,
        runs: new_runs,
        gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::fig1;
    use crate::wfa::{RunTrace, Transition, Wfa};

    fn fig1_runs(n: usize) -> (AugWfa, Vec<LetterId>, AugRun, AugRun) {
        let w = fig1();
        let (qa, qb) = (w.state_id("qa").unwrap(), w.state_id("qb").unwrap());
        let run = |q: usize, first: i64, loop_w: i64| RunTrace {
            start: 0,
            transitions: (0..n)
                .map(|k| Transition {
                    from: if k == 0 { 0 } else { q },
                    letter: 0,
                    weight: if k == 0 { first } else { loop_w },
                    to: q,
                })
                .collect(),
        };
        let (ra, rb) = (run(qa, 1, 1), run(qb, 0, 0));
        let aug = AugWfa::new(w);
        let word = aug.encode_run(&rb).unwrap();
        let la = aug.lift_run(&ra, &rb).unwrap();
        let lb = aug.lift_run(&rb, &rb).unwrap();
        (aug, word, la, lb)
    }

    #[test]
    fn fig1_runs_diverge() {
        let (aug, word, la, lb) = fig1_runs(5);
        let win = Window::new(&[], &word, &[]);
        assert_eq!(independent_gap(&aug, &win, &[la.clone(), lb.clone()]).unwrap(), Fin(1));
        assert_eq!(independent_gap(&aug, &win, std::slice::from_ref(&la)).unwrap(), Inf);
        assert_eq!(independent_gap(&aug, &win, &[la.clone(), la.clone()]).unwrap(), Fin(0));
        let m = near(&aug, &lb, &word[..1], 1).unwrap();
        let offsets: Vec<(usize, i64)> = m.iter().map(|(s, &k)| (s.inner, k)).collect();
        let w = aug.wfa();
        assert_eq!(offsets, vec![(w.state_id("qa").unwrap(), 1), (w.state_id("qb").unwrap(), 0)]);
        let m0 = near(&aug, &lb, &word[..3], 0).unwrap();
        assert_eq!(m0.len(), 1);
    }

    #[test]
    fn diff_type_bound_holds_on_fig1() {
        let (aug, word, la, lb) = fig1_runs(6);
        let runs = [la, lb];
        let mut seen = std::collections::BTreeSet::new();
        for p in 0..word.len() {
            for q in p..=word.len() {
                seen.insert(diff_type(&aug, &runs, &word[..p], &word[p..q], 1).unwrap());
            }
        }
        assert!(BigUint::from(seen.len()) <= diff_type_bound(2, 1, 3));
    }

    /// `h` is spawned `k` below the baseline and climbs by 1 on `a`; `g`
    /// trails it by one and cannot read `e`, so `h` stays dominant.
    fn ramp(k: i64) -> (AugWfa, LetterId, LetterId) {
        let w = Wfa::from_named(
            &["b", "h", "g"],
            &["i", "a", "e"],
            "b",
            &[
                ("b", "i", 0, "b"),
                ("b", "i", -k, "h"),
                ("b", "i", -k - 1, "g"),
                ("h", "i", 0, "h"),
                ("g", "i", 0, "g"),
                ("b", "a", 0, "b"),
                ("h", "a", 1, "h"),
                ("g", "a", 1, "g"),
                ("b", "e", 0, "b"),
                ("h", "e", 0, "h"),
            ],
        )
        .unwrap();
        let aug = AugWfa::new(w);
        let l = |s| {
            aug.base_letter(Transition {
                from: 0,
                letter: s,
                weight: 0,
                to: 0,
            })
            .unwrap()
        };
        let (i, a) = (l(0), l(1));
        (aug, i, a)
    }

    fn cfg(aug: &AugWfa, th: ZoomThresholds) -> ZoomConfig {
        ZoomConfig {
            th,
            letter_maxw: 1,
            drop_bound: 1,
            sri: SriParams::desk(aug, 2).unwrap(),
        }
    }

    #[test]
    fn greedy_increasing_segments() {
        let (aug, i, a) = ramp(100);
        let th = ZoomThresholds {
            gap: 1,
            cover: 10,
            amp: 6,
            seg_min_len: 1,
            seg_count: 3,
            seg_quantum: 1,
        };
        let win = Window::new(&[i], &[a; 12], &[]);
        let d = decompose_phi_increasing(&aug, &win, &cfg(&aug, th)).unwrap();
        assert_eq!(d.cuts, vec![2, 4, 6, 8]);
        assert_eq!(d.segments.len(), 5);
        let short = Window::new(&[i], &[a; 6], &[]);
        assert!(matches!(
            decompose_phi_increasing(&aug, &short, &cfg(&aug, th)),
            Err(ZoomError::AmplitudeInsufficient(_))
        ));
        // ψ falls by one per letter
        let d = decompose_psi_decreasing(&aug, &win, &cfg(&aug, th)).unwrap();
        assert_eq!(d.cuts, vec![1, 2, 3, 4]);
        assert_eq!(d.values, vec![100, 99, 98, 97]);
    }

    #[test]
    fn bounded_constant_word() {
        let (aug, i, a) = ramp(0);
        let th = ZoomThresholds {
            gap: 1,
            cover: 10,
            amp: 2,
            seg_min_len: 2,
            seg_count: 3,
            seg_quantum: 2,
        };
        // once `g` reaches the baseline the minimum stays at 0
        let w1 = [i];
        let win = Window::new(&w1, &[a; 12], &[]);
        let d = decompose_psi_bounded(&aug, &win, &cfg(&aug, th)).unwrap();
        assert_eq!(d.cuts, vec![2, 4, 6, 8, 10]);
        let odd = Window::new(&w1, &[a; 11], &[]);
        assert!(matches!(
            decompose_psi_bounded(&aug, &odd, &cfg(&aug, th)),
            Err(ZoomError::QuantumMisaligned { .. })
        ));
    }

    #[test]
    fn thresholds_file_round_trip() {
        let s = r#"{"gap":4,"cover":8,"amp":3,"seg_min_len":1,"seg_count":3,"seg_quantum":1}"#;
        let th = ZoomThresholds::from_json_str(s).unwrap();
        assert_eq!(th.cover, 8);
        assert!(ZoomThresholds::from_json_str(r#"{"gap":4,"cover":8,"amp":3,"seg_min_len":1,"seg_count":2,"seg_quantum":1}"#).is_err());
        let derived = ZoomThresholds::from_bounds(2, 1, 0, 1, SriKind::Simple).unwrap();
        assert!(derived.validate().is_err());
    }

    fn baseline_run(aug: &AugWfa, word: &[LetterId]) -> AugRun {
        let c = aug.xconf(&aug.initial_config(), word).unwrap();
        let top = *c.keys().find(|s| s.inner == s.baseline).unwrap();
        aug.min_run(&aug.initial_config(), word, Some(top))
            .unwrap()
            .unwrap()
    }

    #[test]
    fn escaping_state_becomes_a_new_run() {
        let (aug, i, a) = ramp(100);
        let th = ZoomThresholds {
            gap: 1,
            cover: 10,
            amp: 6,
            seg_min_len: 1,
            seg_count: 3,
            seg_quantum: 1,
        };
        let win = Window::new(&[i], &[a; 12], &[]);
        let run = baseline_run(&aug, &win.word());
        let dec = decompose_phi_increasing(&aug, &win, &cfg(&aug, th)).unwrap();
        let cov = check_cover(&aug, &win, &dec, std::slice::from_ref(&run), 10).unwrap();
        assert_eq!(cov.uncovered.map(|(j, _)| j), Some(1));
        match zoom_step(&aug, &win, &[run], &cfg(&aug, th), SriKind::Simple).unwrap() {
            ZoomOutcome::NewRun { window, runs, gap, .. } => {
                assert_eq!(runs.len(), 2);
                assert_eq!((window.w1.len(), window.w2.len()), (4, 1));
                assert!(2 * gap >= th.cover);
                assert_eq!(independent_gap(&aug, &window, &runs).unwrap(), Fin(gap));
            }
            other => panic!("expected a new run, got {other:?}"),
        }
        let tight = ZoomThresholds { seg_min_len: 4, ..th };
        assert!(matches!(
            zoom_step(&aug, &win, &[baseline_run(&aug, &win.word())], &cfg(&aug, tight), SriKind::Simple),
            Err(ZoomError::ThresholdsInconsistent(_))
        ));
    }

    #[test]
    fn covered_periodic_word_yields_sri() {
        let w = Wfa::from_named(&["q"], &["a"], "q", &[("q", "a", 0, "q")]).unwrap();
        let aug = AugWfa::new(w);
        let a = aug
            .base_letter(Transition {
                from: 0,
                letter: 0,
                weight: 0,
                to: 0,
            })
            .unwrap();
        let th = ZoomThresholds {
            gap: 1,
            cover: 4,
            amp: 2,
            seg_min_len: 1,
            seg_count: 3,
            seg_quantum: 1,
        };
        let win = Window::new(&[], &[a; 8], &[]);
        let run = baseline_run(&aug, &win.word());
        let c = cfg(&aug, th);
        match zoom_step(&aug, &win, &[run], &c, SriKind::Simple).unwrap() {
            ZoomOutcome::Sri { decomposition, extraction } => {
                assert_eq!(decomposition.kind, DecompKind::PhiBounded);
                assert_eq!(decomposition.t(), 4);
                assert_eq!(extraction.colours, 1);
                assert_eq!(extraction.clique, Some((1, 2, 3)));
                let sri = extraction.sri.unwrap();
                assert_eq!(sri.word(), win.word());
            }
            other => panic!("expected an SRI, got {other:?}"),
        }
    }
}
