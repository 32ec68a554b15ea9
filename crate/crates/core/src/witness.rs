//! Explicit avoidant paths in the `G_m` towers, with mechanical verification of their
//! endpoints, avoidance and length bounds.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::certificates::{
    derived_constants, phi_certificates, select_certificate, verify_certificate, CertError, CertificateSequence,
    DerivedConstants, Selection,
};
use crate::metrics::{word_length, CayleyBall, InverseDistortion, Length, MetricsError, Retractions};
use crate::normal_form::{Group, NfError};
use crate::tower::{build_g_phi, TowerError};
use crate::words::{Letter, Word, WordError};

#[derive(Debug, Error)]
pub enum WitnessError {
    #[error("radius {r} is below r0 = {r0}")]
    BelowR0 { r: u64, r0: f64 },
    #[error("exponent must be nonzero")]
    ZeroExponent,
    #[error("tower level {0} is too small for this construction")]
    Level(usize),
    #[error("distance from the center to an endpoint is not certified exactly")]
    Unresolvable,
    #[error("no plane detour avoids the ball within the length budget")]
    NoDetour,
    #[error(transparent)]
    Endo(#[from] crate::endo::EndoError),
    #[error("conjugation identity fails: {0}")]
    Identity(String),
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error(transparent)]
    Nf(#[from] NfError),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// A labeled stretch of edges `[from, to)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Segment {
    pub label: String,
    pub from: usize,
    pub to: usize,
}

/// An edge path from `start`, claimed to end at `end` and to avoid the open ball `B(center, radius)`.
#[derive(Clone, Debug)]
pub struct PathWitness {
    pub kind: String,
    pub start: Word,
    pub end: Word,
    pub edges: Vec<Letter>,
    pub center: Word,
    pub radius: f64,
    pub bound: f64,
    pub constants: BTreeMap<String, f64>,
    pub segments: Vec<Segment>,
}

impl PathWitness {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Left translate by `g`, moving the ball with it.
    pub fn translate(&self, g: &Word) -> Result<PathWitness, WordError> {
        Ok(PathWitness {
            start: g.concat(&self.start)?,
            end: g.concat(&self.end)?,
            center: g.concat(&self.center)?,
            ..self.clone()
        })
    }

    /// The vertex after `k` edges, as a word.
    pub fn vertex(&self, k: usize) -> Result<Word, WordError> {
        let tail = Word::reduce(self.start.alphabet(), self.edges[..k].iter().copied())?;
        self.start.concat(&tail)
    }

    pub fn segment(&self, label: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.label == label)
    }

    pub fn to_json(&self, report: Option<&WitnessReport>) -> serde_json::Value {
        let names = self.start.alphabet();
        let edges: Vec<String> = self
            .edges
            .iter()
            .map(|l| if l.inverse { format!("{}^-1", names.name(l.index)) } else { names.name(l.index).to_string() })
            .collect();
        let json = WitnessJson {
            kind: &self.kind,
            start: self.start.to_string(),
            end: self.end.to_string(),
            center: self.center.to_string(),
            radius: self.radius,
            bound: self.bound,
            length: self.edges.len(),
            constants: &self.constants,
            segments: &self.segments,
            edges: edges.join(" "),
            evidence: report.map(|r| &r.evidence),
        };
        serde_json::to_value(json).expect("serializable")
    }
}

#[derive(Serialize)]
struct WitnessJson<'a> {
    kind: &'a str,
    start: String,
    end: String,
    center: String,
    radius: f64,
    bound: f64,
    length: usize,
    constants: &'a BTreeMap<String, f64>,
    segments: &'a [Segment],
    edges: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    evidence: Option<&'a Vec<EvidenceRun>>,
}

/// How a vertex was placed outside the ball.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Evidence {
    ExactDistance { value: u64 },
    RetractionBound { by: String, value: u64 },
    Unresolved { best: u64 },
}

/// Consecutive vertices `[from, to]` sharing the kind of evidence; `min` is the weakest value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EvidenceRun {
    pub from: usize,
    pub to: usize,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub by: Option<String>,
    pub min: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WitnessReport {
    pub kind: String,
    pub length: usize,
    pub bound: f64,
    pub endpoint_ok: bool,
    pub avoidance_ok: bool,
    pub length_ok: bool,
    /// Up to the first 32 vertices without evidence.
    pub unresolved: Vec<usize>,
    pub evidence: Vec<EvidenceRun>,
}

impl WitnessReport {
    pub fn passed(&self) -> bool {
        self.endpoint_ok && self.avoidance_ok && self.length_ok
    }
}

/// Checks endpoints by normal form, avoidance per vertex, and the edge count.
pub fn verify_witness(
    reg: &Retractions,
    ball: Option<&CayleyBall>,
    w: &PathWitness,
) -> Result<WitnessReport, WitnessError> {
    let group = reg.group();
    let mut end = group.elem(&w.start)?;
    group.mul_letters(&mut end, &w.edges)?;
    let endpoint_ok = group.normal_form(end).encode() == group.normalize(&w.end)?.encode();

    let evidence = vertex_evidence(reg, ball, w)?;
    let unresolved: Vec<usize> = evidence
        .iter()
        .enumerate()
        .filter(|(_, e)| matches!(e, Evidence::Unresolved { .. }))
        .map(|(i, _)| i)
        .collect();
    Ok(WitnessReport {
        kind: w.kind.clone(),
        length: w.edges.len(),
        bound: w.bound,
        endpoint_ok,
        avoidance_ok: unresolved.is_empty(),
        length_ok: w.edges.len() as f64 <= w.bound,
        unresolved: unresolved.into_iter().take(32).collect(),
        evidence: runs(&evidence),
    })
}

/// Evaluates the top-level retractions along the path incrementally; vertices they
/// cannot place fall back to level-aware bounds and the ball.
fn vertex_evidence(reg: &Retractions, ball: Option<&CayleyBall>, w: &PathWitness) -> Result<Vec<Evidence>, WitnessError> {
    let group = reg.group();
    let need = w.radius.ceil().max(0.0) as u64;
    let shift = w.center.invert().concat(&w.start)?;
    let maps: Vec<_> = reg.list().iter().filter(|r| r.level() >= reg.top()).collect();
    let mut images = maps.iter().map(|r| r.image(&shift)).collect::<Result<Vec<_>, _>>()?;
    let mut out = Vec::with_capacity(w.edges.len() + 1);
    let mut pending = Vec::new();
    for k in 0..=w.edges.len() {
        if k > 0 {
            let l = w.edges[k - 1];
            for (r, e) in maps.iter().zip(images.iter_mut()) {
                r.step(e, l)?;
            }
        }
        let best = maps
            .iter()
            .zip(&images)
            .map(|(r, e)| (r.measure(e).value, r.name()))
            .max_by_key(|(v, _)| *v);
        match best {
            Some((value, by)) if value >= need => out.push(Evidence::RetractionBound { by: by.to_string(), value }),
            other => {
                pending.push(k);
                out.push(Evidence::Unresolved { best: other.map_or(0, |(v, _)| v) });
            }
        }
    }
    let resolved = pending
        .par_iter()
        .map(|&k| {
            let v = w.center.invert().concat(&w.vertex(k)?)?;
            let e = match word_length(reg, ball, &v)? {
                Length::Exact(d) if d >= need => Evidence::ExactDistance { value: d },
                len => {
                    let lb = reg.lower_bound(&group.word_of(&group.elem(&v)?))?;
                    if lb.value >= need {
                        Evidence::RetractionBound { by: lb.by.unwrap_or_default(), value: lb.value }
                    } else {
                        Evidence::Unresolved { best: len.lower().max(lb.value) }
                    }
                }
            };
            Ok((k, e))
        })
        .collect::<Result<Vec<_>, WitnessError>>()?;
    for (k, e) in resolved {
        out[k] = e;
    }
    Ok(out)
}

fn runs(ev: &[Evidence]) -> Vec<EvidenceRun> {
    let key = |e: &Evidence| match e {
        Evidence::ExactDistance { value } => ("exact-distance", None, *value),
        Evidence::RetractionBound { by, value } => ("retraction-bound", Some(by.clone()), *value),
        Evidence::Unresolved { best } => ("unresolved", None, *best),
    };
    let mut out: Vec<EvidenceRun> = Vec::new();
    for (i, e) in ev.iter().enumerate() {
        let (kind, by, value) = key(e);
        match out.last_mut() {
            Some(run) if run.kind == kind && run.by == by && run.to + 1 == i => {
                run.to = i;
                run.min = run.min.min(value);
            }
            _ => out.push(EvidenceRun { from: i, to: i, kind: kind.to_string(), by, min: value }),
        }
    }
    out
}

/// Everything the builders share: the group, its retractions, and the certificate data.
pub struct WitnessKit {
    pub group: Arc<Group>,
    pub reg: Retractions,
    pub seq: CertificateSequence,
    pub c: f64,
    pub consts: DerivedConstants,
    pub f: InverseDistortion<f64>,
}

/// Certificate indices computed for the builders; enough for radii in the tens of thousands.
pub const KIT_CERTIFICATES: u32 = 40;

impl WitnessKit {
    /// `G_m` over the standard monodromy with the certificate constant `C = 3`.
    pub fn new(m: usize) -> Result<Self, WitnessError> {
        let group = Arc::new(Group::new(&build_g_phi(m, 1)?)?);
        let reg = Retractions::for_group(group.clone())?;
        let seq = phi_certificates(KIT_CERTIFICATES)?;
        let c = 3.0;
        let report = verify_certificate(&seq, c, None, true)?;
        let consts = derived_constants(&seq, &report)?;
        Ok(WitnessKit { group, reg, seq, c, consts, f: InverseDistortion::phi_envelope() })
    }

    pub fn level(&self) -> usize {
        self.reg.top()
    }

    pub fn d(&self) -> f64 {
        self.consts.d
    }

    pub fn r0(&self) -> f64 {
        self.consts.r0
    }

    pub fn n2(&self) -> f64 {
        8.0 * self.d() + 2.0
    }

    pub fn m3(&self) -> f64 {
        2.0 * self.n2() + 1.0
    }

    pub fn n3(&self) -> f64 {
        2.0 * self.m3() + 7.0
    }

    pub fn f(&self, r: f64) -> f64 {
        self.f.value(r)
    }

    fn constants(&self, extra: &[(&str, f64)]) -> BTreeMap<String, f64> {
        let mut m: BTreeMap<String, f64> =
            [("C", self.c), ("D", self.d()), ("r0", self.r0())].iter().map(|(k, v)| (k.to_string(), *v)).collect();
        m.extend(extra.iter().map(|(k, v)| (k.to_string(), *v)));
        m
    }

    fn letter(&self, name: &str) -> Result<Letter, WitnessError> {
        Ok(self.group.alphabet().letter(name)?)
    }

    fn word(&self, letters: &[Letter]) -> Result<Word, WitnessError> {
        Ok(Word::reduce(self.group.alphabet(), letters.iter().copied())?)
    }

    fn identity(&self) -> Word {
        Word::identity(self.group.alphabet())
    }

    fn check_r(&self, r: u64) -> Result<(), WitnessError> {
        if (r as f64) < self.r0() {
            return Err(WitnessError::BelowR0 { r, r0: self.r0() });
        }
        Ok(())
    }

    fn need_level(&self, m: usize) -> Result<(), WitnessError> {
        if self.level() < m {
            return Err(WitnessError::Level(self.level()));
        }
        Ok(())
    }

    pub fn verify(&self, w: &PathWitness) -> Result<WitnessReport, WitnessError> {
        verify_witness(&self.reg, None, w)
    }
}

fn repeat(l: Letter, n: i64) -> impl Iterator<Item = Letter> {
    let l = if n < 0 { l.inv() } else { l };
    std::iter::repeat_n(l, n.unsigned_abs() as usize)
}

fn invert_path(ls: &[Letter]) -> Vec<Letter> {
    ls.iter().rev().map(|l| l.inv()).collect()
}

/// Appends edges and records them as a segment.
struct PathBuilder {
    edges: Vec<Letter>,
    segments: Vec<Segment>,
}

impl PathBuilder {
    fn new() -> Self {
        PathBuilder { edges: Vec::new(), segments: Vec::new() }
    }

    fn push<I: IntoIterator<Item = Letter>>(&mut self, label: impl Into<String>, ls: I) {
        let from = self.edges.len();
        self.edges.extend(ls);
        self.segments.push(Segment { label: label.into(), from, to: self.edges.len() });
    }

    /// Splices a sub-witness, prefixing its segment labels.
    fn splice(&mut self, prefix: &str, w: &PathWitness) {
        let off = self.edges.len();
        self.edges.extend_from_slice(&w.edges);
        self.segments.extend(w.segments.iter().map(|s| Segment {
            label: format!("{prefix}/{}", s.label),
            from: s.from + off,
            to: s.to + off,
        }));
        self.segments.push(Segment { label: prefix.to_string(), from: off, to: self.edges.len() });
    }
}

/// Data of the certificate the builders use at radius `r`: the element in the
/// `a`-generators, the `b`-generators, and a short word for it over the fiber-by-cyclic part.
#[derive(Clone, Debug)]
pub struct Corner {
    pub selection: Selection,
    pub g0: Vec<Letter>,
    pub g1: Vec<Letter>,
    /// Word for `u = g1⁻¹ g0` over `d1, d2, t`.
    pub u: Vec<Letter>,
}

impl WitnessKit {
    /// `g₀ ∈ F_xz`, `g₁ ∈ F_yz` with `s₂⁻¹ g₀ s₂ = g₁` and `g₀ = g₁ u`, from the certificate at `r`.
    pub fn corner(&self, r: u64) -> Result<Corner, WitnessError> {
        self.check_r(r)?;
        let selection = select_certificate(&self.seq, self.c, self.consts, r as f64, &self.f)?;
        let index = selection.index;
        let phi = crate::endo::FreeEndo::phi();
        let u = phi.iterate(Letter::pos(0), index)?.expand(usize::MAX)?;
        let (a, b) = (["a1", "a2"], ["b1", "b2"]);
        let map = |names: [&str; 2]| -> Result<Vec<Letter>, WitnessError> {
            u.letters()
                .iter()
                .map(|l| Ok(self.letter(names[l.index as usize])?.with_sign_of(*l)))
                .collect()
        };
        let (d1, t) = (self.letter("d1")?, self.letter("t")?);
        let n = i64::from(index);
        let uword = repeat(t, n).chain(std::iter::once(d1)).chain(repeat(t, -n)).collect();
        Ok(Corner { selection, g0: map(a)?, g1: map(b)?, u: uword })
    }

    /// `s₁^{-n} → a₁ⁿ s₁^{-n} → a₁ⁿ s₁ⁿ → s₁ⁿ` around `B(e, |n|)`.
    pub fn witness_s1_detour(&self, n: i64) -> Result<PathWitness, WitnessError> {
        if n == 0 {
            return Err(WitnessError::ZeroExponent);
        }
        let (a1, s1) = (self.letter("a1")?, self.letter("s1")?);
        let r = n.unsigned_abs();
        let mut p = PathBuilder::new();
        p.push("out", repeat(a1, r as i64));
        p.push("across", repeat(s1, 2 * n));
        p.push("back", repeat(a1, -(r as i64)));
        Ok(PathWitness {
            kind: "s1-detour".into(),
            start: self.word(&repeat(s1, -n).collect::<Vec<_>>())?,
            end: self.word(&repeat(s1, n).collect::<Vec<_>>())?,
            edges: p.edges,
            center: self.identity(),
            radius: r as f64,
            bound: 4.0 * r as f64,
            constants: self.constants(&[]),
            segments: p.segments,
        })
    }

    /// Path from `g₀` to `g₁` through `g₀·H`, avoiding `B(e, r/D)`.
    pub fn witness_fiber_crossing(&self, r: u64) -> Result<(Corner, PathWitness), WitnessError> {
        self.need_level(2)?;
        let corner = self.corner(r)?;
        let s2 = self.letter("s2")?;
        let g0 = self.word(&corner.g0)?;
        let g1 = self.word(&corner.g1)?;
        let conj = Word::reduce(self.group.alphabet(), [s2.inv()])?.concat(&g0)?.concat(&Word::reduce(
            self.group.alphabet(),
            [s2],
        )?)?;
        if !self.group.equal(&conj, &g1)? {
            return Err(WitnessError::Identity("s2^-1 g0 s2 = g1".into()));
        }
        let mut p = PathBuilder::new();
        p.push("gamma", invert_path(&corner.u));
        let fr = self.f(r as f64);
        let w = PathWitness {
            kind: "fiber-crossing".into(),
            start: g0,
            end: g1,
            edges: p.edges,
            center: self.identity(),
            radius: r as f64 / self.d(),
            bound: self.d() * fr,
            constants: self.constants(&[("f(r)", fr)]),
            segments: p.segments,
        };
        Ok((corner, w))
    }

    /// `s₁^{n₁} → s₂^{n₂}` with `|n₁| = |n₂| = r`, avoiding `B(e, r)`.
    pub fn witness_corner_g2(&self, r: u64, sign1: i8, sign2: i8) -> Result<PathWitness, WitnessError> {
        self.need_level(2)?;
        self.check_r(r)?;
        let (n1, n2) = (i64::from(sign1.signum()) * r as i64, i64::from(sign2.signum()) * r as i64);
        if n1 == 0 || n2 == 0 {
            return Err(WitnessError::ZeroExponent);
        }
        let corner = self.corner((4.0 * self.d()) as u64 * r)?;
        let (s1, s2) = (self.letter("s1")?, self.letter("s2")?);
        // Positive s₂ direction starts from the a-word; negative from the b-word.
        let (first, second, step) = if n2 > 0 {
            (&corner.g0, &corner.g1, corner.u.clone())
        } else {
            (&corner.g1, &corner.g0, invert_path(&corner.u))
        };
        let edge = if n2 > 0 { s2 } else { s2.inv() };
        let mut p = PathBuilder::new();
        p.push("beta", first.iter().copied().chain(repeat(s1, -n1)));
        for i in 1..=r {
            p.push(format!("e{i}"), [edge]);
            if i < r {
                p.push(format!("beta{i}"), step.iter().copied());
            }
        }
        p.push("eta", invert_path(second));
        let n2c = self.n2();
        let bound = n2c * r as f64 * (self.f(n2c * r as f64) + 1.0);
        Ok(PathWitness {
            kind: "corner-g2".into(),
            start: self.word(&repeat(s1, n1).collect::<Vec<_>>())?,
            end: self.word(&repeat(s2, n2).collect::<Vec<_>>())?,
            edges: p.edges,
            center: self.identity(),
            radius: r as f64,
            bound,
            constants: self.constants(&[("N2", n2c), ("m", 4.0 * self.d() * r as f64)]),
            segments: p.segments,
        })
    }

    /// `s₁^{2n} → s₂^ε s₁^{2n}` around `B(e, |n|)`, through `a₁^{2n}` or `b₁^{2n}`.
    pub fn witness_shift_s2(&self, n: i64, eps: i8) -> Result<PathWitness, WitnessError> {
        self.need_level(2)?;
        if n == 0 {
            return Err(WitnessError::ZeroExponent);
        }
        let (s1, s2) = (self.letter("s1")?, self.letter("s2")?);
        let (a1, b1) = (self.letter("a1")?, self.letter("b1")?);
        let (near, far, edge) = if eps > 0 { (a1, b1, s2) } else { (b1, a1, s2.inv()) };
        let r = n.unsigned_abs();
        // Staircase from s₁^{2n} to c^{2n} along the boundary of the plane's ball.
        let stair = |c: Letter| -> Vec<Letter> {
            let (c, s) = if n > 0 { (c, s1.inv()) } else { (c.inv(), s1) };
            (0..2 * r).flat_map(|_| [c, s]).collect()
        };
        let mut p = PathBuilder::new();
        p.push("alpha", stair(near));
        p.push("e1", [edge]);
        p.push("beta", invert_path(&stair(far)));
        let start = self.word(&repeat(s1, 2 * n).collect::<Vec<_>>())?;
        let end = Word::reduce(self.group.alphabet(), [edge])?.concat(&start)?;
        Ok(PathWitness {
            kind: "shift-s2".into(),
            start,
            end,
            edges: p.edges,
            center: self.identity(),
            radius: r as f64,
            bound: 8.0 * r as f64 + 1.0,
            constants: self.constants(&[]),
            segments: p.segments,
        })
    }

    /// `s₁^{2n} → s₃^ε s₁^{2n}` in `G₃`: one conjugating edge and a translated `corner-g2` path.
    pub fn witness_shift_s3(&self, n: i64, eps: i8) -> Result<PathWitness, WitnessError> {
        self.need_level(3)?;
        let r = n.unsigned_abs();
        self.check_r(r)?;
        let (s1, s3) = (self.letter("s1")?, self.letter("s3")?);
        let sign1 = n.signum() as i8;
        let inner = self.witness_corner_g2(2 * r, sign1, sign1)?;
        let mut p = PathBuilder::new();
        if eps > 0 {
            p.push("e1", [s3]);
            let back = PathWitness { edges: invert_path(&inner.edges), segments: Vec::new(), ..inner.clone() };
            p.splice("gamma1", &back);
        } else {
            p.splice("gamma0", &inner);
            p.push("e1", [s3.inv()]);
        }
        let m3 = self.m3();
        let rf = r as f64;
        let start = self.word(&repeat(s1, 2 * n).collect::<Vec<_>>())?;
        let lead = if eps > 0 { s3 } else { s3.inv() };
        let end = Word::reduce(self.group.alphabet(), [lead])?.concat(&start)?;
        Ok(PathWitness {
            kind: "shift-s3".into(),
            start,
            end,
            edges: p.edges,
            center: self.identity(),
            radius: rf,
            bound: m3 * rf * (self.f(m3 * rf) + 1.0),
            constants: self.constants(&[("N2", self.n2()), ("M3", m3)]),
            segments: p.segments,
        })
    }

    /// `s₁^{n₁} → s₃^{n₂}` in `G₃`: out along `s₁` to `s₁^{4n₁}`, a comb of translated
    /// `shift-s3` teeth along `s₃`, then back along `s₁`.
    pub fn witness_corner_g3(&self, r: u64, sign1: i8, sign2: i8) -> Result<PathWitness, WitnessError> {
        self.need_level(3)?;
        self.check_r(r)?;
        let (n1, n2) = (i64::from(sign1.signum()) * r as i64, i64::from(sign2.signum()) * r as i64);
        if n1 == 0 || n2 == 0 {
            return Err(WitnessError::ZeroExponent);
        }
        let s1 = self.letter("s1")?;
        let s3 = self.letter("s3")?;
        let tooth = self.witness_shift_s3(2 * n1, sign2.signum())?;
        let mut p = PathBuilder::new();
        p.push("ray", repeat(s1, 3 * n1));
        for j in 0..r {
            p.splice(&format!("tooth{j}"), &tooth);
        }
        p.push("down", repeat(s1, -4 * n1));
        let n3 = self.n3();
        let rf = r as f64;
        Ok(PathWitness {
            kind: "corner-g3".into(),
            start: self.word(&repeat(s1, n1).collect::<Vec<_>>())?,
            end: self.word(&repeat(s3, n2).collect::<Vec<_>>())?,
            edges: p.edges,
            center: self.identity(),
            radius: rf,
            bound: n3 * rf * rf * (self.f(n3 * rf) + 1.0),
            constants: self.constants(&[("N2", self.n2()), ("M3", self.m3()), ("N3", n3)]),
            segments: p.segments,
        })
    }

    /// Replaces the `s₁`-segment from `x` to `x s₁^ℓ` by a detour in the plane
    /// `x⟨a₁, s₁⟩` avoiding `B(z, r/2)`, `r = min(d(x,z), d(y,z))`; unchanged if it already avoids.
    pub fn witness_avoidant_modification(
        &self,
        x: &Word,
        ell: i64,
        z: &Word,
        ball: Option<&CayleyBall>,
    ) -> Result<PathWitness, WitnessError> {
        if ell == 0 {
            return Err(WitnessError::ZeroExponent);
        }
        let (s1, a1) = (self.letter("s1")?, self.letter("a1")?);
        let y = x.concat(&self.word(&repeat(s1, ell).collect::<Vec<_>>())?)?;
        let dist = |w: &Word| -> Result<u64, WitnessError> {
            let v = z.invert().concat(w)?;
            word_length(&self.reg, ball, &v)?.exact().ok_or(WitnessError::Unresolvable)
        };
        let r = dist(x)?.min(dist(&y)?);
        let len = ell.unsigned_abs();
        let make = |k: i64| {
            let mut p = PathBuilder::new();
            if k != 0 {
                p.push("out", repeat(a1, k));
            }
            p.push("alpha", repeat(s1, ell));
            if k != 0 {
                p.push("back", repeat(a1, -k));
            }
            PathWitness {
                kind: "avoidant-modification".into(),
                start: x.clone(),
                end: y.clone(),
                edges: p.edges,
                center: z.clone(),
                radius: r as f64 / 2.0,
                bound: 11.0 * len as f64,
                constants: [("offset".to_string(), k as f64)].into_iter().collect(),
                segments: p.segments,
            }
        };
        let plain = make(0);
        if self.verify_with(ball, &plain)?.passed() {
            return Ok(plain);
        }
        let first = r.max(1) as i64;
        for k in first..=5 * len as i64 {
            for k in [k, -k] {
                let w = make(k);
                if self.verify_with(ball, &w)?.passed() {
                    return Ok(w);
                }
            }
        }
        Err(WitnessError::NoDetour)
    }

    fn verify_with(&self, ball: Option<&CayleyBall>, w: &PathWitness) -> Result<WitnessReport, WitnessError> {
        verify_witness(&self.reg, ball, w)
    }
}

trait SignOf {
    fn with_sign_of(self, other: Letter) -> Letter;
}

impl SignOf for Letter {
    fn with_sign_of(self, other: Letter) -> Letter {
        if other.inverse {
            self.inv()
        } else {
            self
        }
    }
}
