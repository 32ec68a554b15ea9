//! Word lengths: exact Cayley balls, retraction lower bounds, distortion tables and
//! the inverse distortion function.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::normal_form::{Elem, Group, NfError, Oracle};
use crate::scalar::Real;
use crate::tower::{build_g_phi, phi_h, Family, GroupNode, GroupSpec, TowerError};
use crate::words::{Alphabet, Letter, Word, WordError};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("node cap {cap} reached; ball complete to radius {completed}")]
    Partial { cap: usize, completed: usize, ball: Box<CayleyBall> },
    #[error(transparent)]
    Nf(#[from] NfError),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error("retraction `{name}` does not kill relator `{relator}`")]
    NotHomomorphism { name: String, relator: String },
    #[error("input is not monotone at index {0}")]
    NotMonotone(usize),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug)]
pub struct BallNode {
    pub elem: Elem,
    pub dist: u32,
    pub parent: Option<(u32, Letter)>,
}

/// Exact ball around the identity, keyed by normal-form encodings.
#[derive(Clone, Debug)]
pub struct CayleyBall {
    radius: usize,
    nodes: Vec<BallNode>,
    index: HashMap<Vec<u8>, u32>,
    layers: Vec<usize>,
    alphabet: Arc<Alphabet>,
}

impl CayleyBall {
    /// Breadth-first ball over the group's generating set. Layers are expanded in
    /// parallel and merged in generator order, so the table does not depend on threads.
    pub fn build(group: &Group, radius: usize, node_cap: usize) -> Result<Self, MetricsError> {
        let id = group.identity();
        let mut index = HashMap::new();
        index.insert(group.normal_form(id.clone()).encode(), 0u32);
        let mut ball = CayleyBall {
            radius: 0,
            nodes: vec![BallNode { elem: id, dist: 0, parent: None }],
            index,
            layers: vec![0, 1],
            alphabet: group.alphabet().clone(),
        };
        let letters = group.alphabet().letters();
        for r in 1..=radius {
            let (lo, hi) = (ball.layers[r - 1], ball.layers[r]);
            let expanded: Vec<Vec<(Elem, Vec<u8>, Letter)>> = ball.nodes[lo..hi]
                .par_iter()
                .map(|node| {
                    letters
                        .iter()
                        .filter(|l| node.parent.is_none_or(|(_, p)| !p.cancels(**l)))
                        .map(|&l| {
                            let mut e = node.elem.clone();
                            group.mul_letter(&mut e, l)?;
                            let code = group.normal_form(e.clone()).encode();
                            Ok((e, code, l))
                        })
                        .collect::<Result<Vec<_>, NfError>>()
                })
                .collect::<Result<Vec<_>, NfError>>()?;
            for (k, children) in expanded.into_iter().enumerate() {
                let parent = (lo + k) as u32;
                for (elem, code, l) in children {
                    if ball.index.contains_key(&code) {
                        continue;
                    }
                    ball.index.insert(code, ball.nodes.len() as u32);
                    ball.nodes.push(BallNode { elem, dist: r as u32, parent: Some((parent, l)) });
                }
                if ball.nodes.len() > node_cap {
                    ball.truncate_to(r - 1);
                    return Err(MetricsError::Partial { cap: node_cap, completed: r - 1, ball: Box::new(ball) });
                }
            }
            ball.layers.push(ball.nodes.len());
            ball.radius = r;
        }
        Ok(ball)
    }

    fn truncate_to(&mut self, r: usize) {
        let keep = self.layers[r + 1];
        self.nodes.truncate(keep);
        self.index.retain(|_, v| (*v as usize) < keep);
        self.layers.truncate(r + 2);
        self.radius = r;
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[BallNode] {
        &self.nodes
    }

    /// Node indices at distance exactly `r`.
    pub fn sphere(&self, r: usize) -> std::ops::Range<usize> {
        if r > self.radius {
            return 0..0;
        }
        self.layers[r]..self.layers[r + 1]
    }

    /// `(radius, count)` per sphere.
    pub fn counts(&self) -> Vec<(usize, usize)> {
        (0..=self.radius).map(|r| (r, self.sphere(r).len())).collect()
    }

    pub fn lookup(&self, code: &[u8]) -> Option<u32> {
        self.index.get(code).copied()
    }

    pub fn distance(&self, _group: &Group, e: &Elem) -> Option<u32> {
        self.lookup(&e.encode()).map(|i| self.nodes[i as usize].dist)
    }

    /// Geodesic word from the identity to node `i`, following parents.
    pub fn path_to(&self, i: usize) -> Word {
        let mut ls = Vec::new();
        let mut cur = i;
        while let Some((p, l)) = self.nodes[cur].parent {
            ls.push(l);
            cur = p as usize;
        }
        ls.reverse();
        Word::reduce(&self.alphabet, ls).expect("letters in range")
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("radius,count\n");
        for (r, c) in self.counts() {
            let _ = writeln!(s, "{r},{c}");
        }
        s
    }
}

/// How the length of a retraction image is measured.
#[derive(Clone, Debug)]
enum Evaluator {
    /// Length of the canonical word; exact for products of free groups.
    Canonical,
    /// Lookup in an exact ball, `radius + 1` (or the stable-letter exponent) outside it.
    Ball(Arc<CayleyBall>),
}

/// Homomorphism onto a group whose word lengths are computable.
#[derive(Clone, Debug)]
pub struct Retraction {
    name: String,
    /// Tower level on which the map is defined; it applies to elements of that level.
    level: usize,
    target: Arc<Group>,
    images: Vec<Vec<Letter>>,
    evaluator: Evaluator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bound {
    pub value: u64,
    pub exact: bool,
}

impl Retraction {
    /// `images` gives one target word per source generator, by name; missing names map to e.
    fn new(
        name: &str,
        level: usize,
        source: &Group,
        target: Arc<Group>,
        images: &[(&str, &str)],
        evaluator: Evaluator,
    ) -> Result<Self, MetricsError> {
        let src = source.alphabet();
        let mut table = vec![Vec::new(); src.len()];
        for (g, img) in images {
            if let Some(i) = src.position(g) {
                table[i as usize] = target.parse(img)?.into_letters();
            }
        }
        let r = Retraction { name: name.to_string(), level, target, images: table, evaluator };
        r.check(source)?;
        Ok(r)
    }

    /// Every relator among the level's generators maps to the identity.
    fn check(&self, source: &Group) -> Result<(), MetricsError> {
        let src = source.alphabet();
        let allowed = |l: &Letter| level_of_generator(src.name(l.index)) <= self.level;
        for rel in source.spec().relator_words()? {
            if !rel.letters().iter().all(allowed) {
                continue;
            }
            if !self.target.is_identity_elem(&self.image(&rel)?) {
                return Err(MetricsError::NotHomomorphism { name: self.name.clone(), relator: rel.to_string() });
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn target(&self) -> &Group {
        &self.target
    }

    pub fn image(&self, w: &Word) -> Result<Elem, NfError> {
        let mut e = self.target.identity();
        for &l in w.letters() {
            self.step(&mut e, l)?;
        }
        Ok(e)
    }

    /// Right-multiplies a target element by the image of one source letter.
    pub fn step(&self, e: &mut Elem, l: Letter) -> Result<(), NfError> {
        let img = &self.images[l.index as usize];
        if l.inverse {
            img.iter().rev().try_for_each(|m| self.target.mul_letter(e, m.inv()))
        } else {
            self.target.mul_letters(e, img)
        }
    }

    pub fn image_word(&self, w: &Word) -> Result<Word, NfError> {
        Ok(self.target.word_of(&self.image(w)?))
    }

    /// Exact target length of the image, or a lower bound when outside the target ball.
    pub fn length(&self, w: &Word) -> Result<Bound, NfError> {
        Ok(self.measure(&self.image(w)?))
    }

    /// Length of a target element as [`Retraction::length`] measures it.
    pub fn measure(&self, e: &Elem) -> Bound {
        match &self.evaluator {
            Evaluator::Canonical => {
                let value = free_length(e).unwrap_or_else(|| self.target.primitive_word(e).len() as u64);
                Bound { value, exact: true }
            }
            Evaluator::Ball(ball) => match ball.distance(&self.target, e) {
                Some(d) => Bound { value: u64::from(d), exact: true },
                None => {
                    let t = match e {
                        Elem::Fbc { t, .. } => t.unsigned_abs(),
                        _ => 0,
                    };
                    Bound { value: (ball.radius() as u64 + 1).max(t), exact: false }
                }
            },
        }
    }
}

/// Word length in a product of free groups, read off the canonical form.
fn free_length(e: &Elem) -> Option<u64> {
    match e {
        Elem::Free(ls) => Some(ls.len() as u64),
        Elem::Product(fs) => fs.iter().map(free_length).sum(),
        _ => None,
    }
}

/// `s7` has level 7; every other generator level 0.
fn level_of_generator(name: &str) -> usize {
    name.strip_prefix('s').and_then(|k| k.parse().ok()).unwrap_or(0)
}

/// Certified lower bound with the name of the map that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LowerBound {
    pub value: u64,
    pub by: Option<String>,
}

/// The retractions available on one group.
#[derive(Clone, Debug)]
pub struct Retractions {
    group: Arc<Group>,
    top: usize,
    list: Vec<Retraction>,
}

fn product_group(name: &str, factors: Vec<GroupNode>) -> Result<Arc<Group>, MetricsError> {
    let spec = GroupSpec::plain(name, GroupNode::Product { factors })?;
    Ok(Arc::new(Group::new(&spec)?))
}

fn free_group(name: &str, gens: &[&str]) -> Result<Arc<Group>, MetricsError> {
    let spec = GroupSpec::plain(name, GroupNode::free(gens))?;
    Ok(Arc::new(Group::new(&spec)?))
}

/// Radius of the ball used to measure lengths in `H`.
pub const H_BALL_RADIUS: usize = 6;

impl Retractions {
    pub fn empty(group: Arc<Group>) -> Self {
        Retractions { group, top: 0, list: Vec::new() }
    }

    /// Registry for a spec: the tower maps for G towers, the identity for free and
    /// lattice groups, stable-letter exponents otherwise.
    pub fn for_group(group: Arc<Group>) -> Result<Self, MetricsError> {
        let spec = group.spec().clone();
        match &spec.tower {
            Some(meta) if meta.family == Family::G => Self::g_tower(group, meta.m, meta.p),
            Some(meta) => {
                let z = free_group("Z", &["u"])?;
                let names: Vec<String> = (1..=meta.m).map(|k| format!("s{k}")).collect();
                let imgs: Vec<(&str, &str)> = names.iter().map(|n| (n.as_str(), "u")).collect();
                let r = Retraction::new("s-total", meta.m, &group, z, &imgs, Evaluator::Canonical)?;
                Ok(Retractions { group, top: meta.m, list: vec![r] })
            }
            None => Self::plain(group),
        }
    }

    fn plain(group: Arc<Group>) -> Result<Self, MetricsError> {
        let spec = group.spec().clone();
        let mut list = Vec::new();
        let free_like = match &spec.root {
            GroupNode::Free { .. } => true,
            GroupNode::Product { factors } => factors.iter().all(|f| matches!(f, GroupNode::Free { .. })),
            _ => false,
        };
        if free_like && spec.macros.is_empty() {
            let names: Vec<(&str, &str)> = spec.generators.iter().map(|g| (g.as_str(), g.as_str())).collect();
            let target = Arc::new(Group::new(&spec)?);
            list.push(Retraction::new("identity", 0, &group, target, &names, Evaluator::Canonical)?);
        }
        if let GroupNode::FreeByCyclic { stable, .. } = &spec.root {
            let z = free_group("Z", &["u"])?;
            list.push(Retraction::new("stable-exponent", 0, &group, z, &[(stable.as_str(), "u")], Evaluator::Canonical)?);
        }
        Ok(Retractions { group, top: 0, list })
    }

    fn g_tower(group: Arc<Group>, m: usize, p: usize) -> Result<Self, MetricsError> {
        fn view(v: &[(String, String)]) -> Vec<(&str, &str)> {
            v.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect()
        }
        let mut list = Vec::new();
        let zs: Vec<String> = (1..=p).map(|i| format!("z{i}")).collect();
        let zs_ref: Vec<&str> = zs.iter().map(String::as_str).collect();
        let mut pz: Vec<(String, String)> = Vec::new();
        for (i, z) in zs.iter().enumerate() {
            for g in [format!("z{}", i + 1), format!("a{}", i + 1), format!("b{}", i + 1)] {
                pz.push((g, z.clone()));
            }
        }
        let fz = free_group("F_z", &zs_ref)?;
        list.push(Retraction::new("psi-z", m, &group, fz, &view(&pz), Evaluator::Canonical)?);

        let fzz = product_group("F_z x Z", vec![GroupNode::free(&zs), GroupNode::free(["u"])])?;
        let mut with_s = pz.clone();
        with_s.extend((1..=m).map(|k| (format!("s{k}"), "u".to_string())));
        list.push(Retraction::new("psi-z-s", m, &group, fzz, &view(&with_s), Evaluator::Canonical)?);

        for j in 1..=m {
            let lattice = product_group("Z2", vec![GroupNode::free(["e1"]), GroupNode::free(["e2"])])?;
            let imgs: Vec<(String, String)> = (1..=j)
                .map(|k| (format!("s{k}"), if k == j { "e2".to_string() } else { "e1".to_string() }))
                .collect();
            list.push(Retraction::new(&format!("psi-lattice-{j}"), j, &group, lattice, &view(&imgs), Evaluator::Canonical)?);
            let z = free_group("Z", &["u"])?;
            let name = format!("s{j}");
            list.push(Retraction::new(&format!("phi-{j}"), j, &group, z, &[(name.as_str(), "u")], Evaluator::Canonical)?);
        }

        if m >= 2 {
            let k = free_group("K", &["s1", "s2"])?;
            list.push(Retraction::new("kappa", 2, &group, k, &[("s1", "s1"), ("s2", "s2")], Evaluator::Canonical)?);
        }

        // ψ_H : G₁ → H with x_i ↦ d_i and T fixed, when H is the φ-power free-by-cyclic group.
        if let Some(meta) = &group.spec().tower {
            if meta.power >= 1 && group.spec().generators.iter().any(|g| g == "t") {
                let (h, _) = phi_h(meta.power)?;
                let hspec = GroupSpec::plain("H", h)?;
                let hg = Arc::new(Group::new(&hspec)?);
                let ball = Arc::new(CayleyBall::build(&hg, H_BALL_RADIUS, 2_000_000)?);
                let mut imgs: Vec<(String, String)> = vec![("d1".into(), "d1".into()), ("d2".into(), "d2".into()), ("t".into(), "t".into())];
                for i in 1..=p {
                    imgs.push((format!("x{i}"), format!("d{i}")));
                    imgs.push((format!("a{i}"), format!("d{i}")));
                }
                list.push(Retraction::new("psi-h", 1, &group, hg, &view(&imgs), Evaluator::Ball(ball))?);
            }
        }
        Ok(Retractions { group, top: m, list })
    }

    pub fn group(&self) -> &Arc<Group> {
        &self.group
    }

    /// Tower level of the group; maps at this level apply to every element.
    pub fn top(&self) -> usize {
        self.top
    }

    pub fn list(&self) -> &[Retraction] {
        &self.list
    }

    pub fn get(&self, name: &str) -> Option<&Retraction> {
        self.list.iter().find(|r| r.name == name)
    }

    /// Smallest tower level containing the element (0 outside towers).
    pub fn level(&self, e: &Elem) -> usize {
        if self.top == 0 {
            return 0;
        }
        let mut level = self.top;
        let mut cur = e;
        while level > 1 {
            match cur {
                Elem::Hnn { prefix, tail } if prefix.is_empty() => {
                    cur = tail;
                    level -= 1;
                }
                _ => break,
            }
        }
        level
    }

    /// Per-retraction bounds for `w`; maps below the top level see the canonical word.
    pub fn bounds(&self, w: &Word) -> Result<Vec<(String, Bound)>, NfError> {
        let needs_level = self.list.iter().any(|r| r.level < self.top);
        let (level, canonical) = if needs_level {
            let e = self.group.elem(w)?;
            let lvl = self.level(&e);
            (lvl, Some(self.group.word_of(&e)))
        } else {
            (self.top, None)
        };
        let mut out = Vec::new();
        for r in &self.list {
            if r.level < level {
                continue;
            }
            let word = if r.level < self.top { canonical.as_ref().expect("computed") } else { w };
            out.push((r.name.clone(), r.length(word)?));
        }
        Ok(out)
    }

    pub fn lower_bound(&self, w: &Word) -> Result<LowerBound, NfError> {
        let mut best = LowerBound { value: 0, by: None };
        for (name, b) in self.bounds(w)? {
            if b.value > best.value {
                best = LowerBound { value: b.value, by: Some(name) };
            }
        }
        Ok(best)
    }
}

/// Word length as far as it can be certified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Length {
    Exact(u64),
    Bounds { lower: u64, upper: u64 },
}

impl Length {
    pub fn exact(&self) -> Option<u64> {
        match self {
            Length::Exact(v) => Some(*v),
            Length::Bounds { .. } => None,
        }
    }

    pub fn lower(&self) -> u64 {
        match self {
            Length::Exact(v) | Length::Bounds { lower: v, .. } => *v,
        }
    }
}

/// Exact length if the element lies in the ball or the retraction bound meets the
/// length of the word itself; otherwise the certified interval.
pub fn word_length(reg: &Retractions, ball: Option<&CayleyBall>, w: &Word) -> Result<Length, NfError> {
    let group = reg.group();
    let upper = w.len() as u64;
    let mut lower = reg.lower_bound(w)?.value;
    if let Some(ball) = ball {
        let e = group.elem(w)?;
        match ball.distance(group, &e) {
            Some(d) => return Ok(Length::Exact(u64::from(d))),
            None => lower = lower.max(ball.radius() as u64 + 1),
        }
    }
    if lower >= upper {
        Ok(Length::Exact(upper))
    } else {
        Ok(Length::Bounds { lower, upper })
    }
}

/// `n ↦ Dist(n)` for a subgroup, by exhaustive enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistortionTable {
    pub raw: Vec<u64>,
    /// `raw[n] + n`, strictly increasing.
    pub normalized: Vec<u64>,
}

impl DistortionTable {
    /// Largest subgroup length over ball elements of the subgroup, per radius.
    pub fn compute(group: &Group, oracle: &Oracle, n_max: usize, node_cap: usize) -> Result<Self, MetricsError> {
        let ball = CayleyBall::build(group, n_max, node_cap)?;
        Self::from_ball(group, oracle, &ball)
    }

    pub fn from_ball(group: &Group, oracle: &Oracle, ball: &CayleyBall) -> Result<Self, MetricsError> {
        let per_node: Vec<Option<u64>> = ball
            .nodes()
            .par_iter()
            .map(|node| {
                let w = group.word_of(&node.elem);
                Ok(group.membership(oracle, &w)?.map(|ew| ew.len() as u64))
            })
            .collect::<Result<Vec<_>, NfError>>()?;
        let mut raw = vec![0u64; ball.radius() + 1];
        for (node, len) in ball.nodes().iter().zip(per_node) {
            if let Some(len) = len {
                let d = node.dist as usize;
                raw[d] = raw[d].max(len);
            }
        }
        for n in 1..raw.len() {
            raw[n] = raw[n].max(raw[n - 1]);
        }
        let normalized = raw.iter().enumerate().map(|(n, d)| d + n as u64).collect();
        Ok(DistortionTable { raw, normalized })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,dist\n");
        for (n, d) in self.raw.iter().enumerate() {
            let _ = writeln!(s, "{n},{d}");
        }
        s
    }
}

/// Distortion of the fiber in `F(a, b) ⋊_φ ⟨t⟩`.
pub fn phi_fiber_distortion(n_max: usize, node_cap: usize) -> Result<DistortionTable, MetricsError> {
    let spec = crate::tower::fbc_phi_spec();
    let group = Group::new(&spec)?;
    let oracle = fiber_oracle(&group)?;
    DistortionTable::compute(&group, &oracle, n_max, node_cap)
}

pub fn fiber_oracle(group: &Group) -> Result<Oracle, NfError> {
    let GroupNode::FreeByCyclic { fiber, .. } = &group.spec().root else {
        return Err(NfError::Compile("fiber oracle needs a free-by-cyclic spec".into()));
    };
    let emb = crate::tower::Embedding { images: fiber.clone(), tag: crate::tower::OracleTag::FiberOfFreeByCyclic };
    group.oracle(fiber, &emb)
}

/// Monotone piecewise-linear function through sorted points.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinear<T: Real> {
    xs: Vec<T>,
    ys: Vec<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eval<T> {
    pub value: T,
    /// The argument was outside the tabulated range.
    pub extrapolated: bool,
}

impl<T: Real> PiecewiseLinear<T> {
    pub fn new(points: Vec<(T, T)>) -> Result<Self, MetricsError> {
        if points.len() < 2 {
            return Err(MetricsError::Invalid("need at least two points".into()));
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[1].0.partial_cmp(&w[0].0) != Some(std::cmp::Ordering::Greater) || w[1].1 < w[0].1 {
                return Err(MetricsError::NotMonotone(i + 1));
            }
        }
        let (xs, ys) = points.into_iter().unzip();
        Ok(Self { xs, ys })
    }

    pub fn domain(&self) -> (T, T) {
        (self.xs[0], *self.xs.last().expect("nonempty"))
    }

    /// Interpolated value; outside the range the end slopes are continued.
    pub fn eval(&self, x: T) -> Eval<T> {
        let n = self.xs.len();
        let seg = match self.xs.iter().position(|&xi| xi >= x) {
            Some(0) => 0,
            Some(i) => i - 1,
            None => n - 2,
        };
        let (x0, x1, y0, y1) = (self.xs[seg], self.xs[seg + 1], self.ys[seg], self.ys[seg + 1]);
        let value = y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        Eval { value, extrapolated: x < self.xs[0] || x > self.xs[n - 1] }
    }
}

/// The inverse distortion `f`, tabulated or in closed form.
#[derive(Clone, Debug, PartialEq)]
pub enum InverseDistortion<T: Real> {
    Identity,
    Table(PiecewiseLinear<T>),
    /// `min(r, coef·log₂ r + offset)`.
    Log { coef: T, offset: T },
    /// `r^{1/β}`.
    Power { beta: T },
}

impl<T: Real> InverseDistortion<T> {
    /// Inverse of the normalized table: `f(Dist(n) + n) = n`.
    pub fn from_table(table: &DistortionTable) -> Result<Self, MetricsError> {
        let pts = table
            .normalized
            .iter()
            .enumerate()
            .map(|(n, &d)| (T::from_u64(d).expect("fits"), T::from_usize_lossy(n)))
            .collect();
        Ok(InverseDistortion::Table(PiecewiseLinear::new(pts)?))
    }

    /// Envelope valid for the standard monodromy: `min(r, 2 log₂ r + 2)`.
    pub fn phi_envelope() -> Self {
        InverseDistortion::Log { coef: T::lit(2.0), offset: T::lit(2.0) }
    }

    pub fn eval(&self, r: T) -> Eval<T> {
        match self {
            InverseDistortion::Identity => Eval { value: r, extrapolated: false },
            InverseDistortion::Table(pl) => pl.eval(r),
            InverseDistortion::Log { coef, offset } => {
                let v = if r <= T::one() { r } else { r.min(*coef * r.log2() + *offset) };
                Eval { value: v, extrapolated: false }
            }
            InverseDistortion::Power { beta } => Eval { value: r.powf(T::one() / *beta), extrapolated: false },
        }
    }

    pub fn value(&self, r: T) -> T {
        self.eval(r).value
    }
}

/// `G_m` over `H = F ⋊_φ ⟨t⟩` with its retraction registry.
pub fn g_tower_with_retractions(m: usize) -> Result<Retractions, MetricsError> {
    let spec = build_g_phi(m, 1)?;
    Retractions::for_group(Arc::new(Group::new(&spec)?))
}
