//! Group descriptors: free, free-by-cyclic, products, amalgams and HNN extensions,
//! plus the constructors for the G and B towers.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::endo::{EndoError, FreeEndo};
use crate::words::{format_letters, Alphabet, Letter, Word, WordError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TowerError {
    #[error("tower level must be at least 1, got {0}")]
    InvalidLevel(usize),
    #[error("rank mismatch: expected {expected} designated generators, got {got}")]
    RankMismatch { expected: usize, got: usize },
    #[error("the B tower is only defined for rank 2, got {0}")]
    UnsupportedRank(usize),
    #[error("generator `{0}` declared twice")]
    DuplicateGenerator(String),
    #[error("generator list does not match the group: {0}")]
    GeneratorList(String),
    #[error("stable letter `{0}` already occurs in the base")]
    StableInBase(String),
    #[error("bad edge image `{image}`: {source}")]
    BadImage { image: String, source: WordError },
    #[error("edge has {edge} generators but {images} images")]
    ImageCount { edge: usize, images: usize },
    #[error("monodromy inverse does not compose to the identity")]
    NotInverse,
    #[error("towers do not match: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Endo(#[from] EndoError),
    #[error("json: {0}")]
    Json(String),
}

/// How an edge subgroup sits in its vertex group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleTag {
    FiberOfFreeByCyclic,
    DiagonalInProduct,
    SkewDiagonalInProduct,
    CyclicExponent,
    FreeFactor,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embedding {
    /// One word per edge generator, over the primitive generators of the vertex group.
    pub images: Vec<String>,
    pub tag: OracleTag,
}

/// Edge group with its two embeddings. For an HNN extension with stable letter `s`
/// the relation is `s⁻¹ · first(w) · s = second(w)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgePair {
    pub edge: Vec<String>,
    pub first: Embedding,
    pub second: Embedding,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupNode {
    Free {
        generators: Vec<String>,
    },
    /// `F ⋊ ⟨t⟩` with `t·d·t⁻¹ = φ(d)`; `inverse` holds `φ⁻¹`.
    FreeByCyclic {
        fiber: Vec<String>,
        monodromy: Vec<String>,
        inverse: Vec<String>,
        stable: String,
    },
    Product {
        factors: Vec<GroupNode>,
    },
    Amalgam {
        left: Box<GroupNode>,
        right: Box<GroupNode>,
        edge: EdgePair,
    },
    Hnn {
        base: Box<GroupNode>,
        stable: String,
        edge: EdgePair,
    },
    /// A group with known generators and no word problem.
    Opaque {
        label: String,
        generators: Vec<String>,
    },
}

impl GroupNode {
    pub fn free<S: AsRef<str>>(names: impl IntoIterator<Item = S>) -> Self {
        GroupNode::Free { generators: names.into_iter().map(|s| s.as_ref().to_string()).collect() }
    }

    /// `F(fiber) ⋊ ⟨stable⟩` with monodromy `φⁿ` for `a ↦ aba, b ↦ a`.
    pub fn phi_fbc(fiber: [&str; 2], stable: &str, power: u32) -> Result<Self, TowerError> {
        let alphabet = Alphabet::new(fiber)?;
        let fwd = FreeEndo::phi_on(&alphabet).power(power)?;
        let inv = FreeEndo::phi_inverse_on(&alphabet).power(power)?;
        Ok(GroupNode::FreeByCyclic {
            fiber: fiber.iter().map(|s| s.to_string()).collect(),
            monodromy: fwd.images().iter().map(|w| w.to_string()).collect(),
            inverse: inv.images().iter().map(|w| w.to_string()).collect(),
            stable: stable.to_string(),
        })
    }

    /// Primitive generators in traversal order.
    pub fn primitives(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_primitives(&mut out);
        out
    }

    fn collect_primitives(&self, out: &mut Vec<String>) {
        match self {
            GroupNode::Free { generators } | GroupNode::Opaque { generators, .. } => out.extend(generators.iter().cloned()),
            GroupNode::FreeByCyclic { fiber, stable, .. } => {
                out.extend(fiber.iter().cloned());
                out.push(stable.clone());
            }
            GroupNode::Product { factors } => factors.iter().for_each(|f| f.collect_primitives(out)),
            GroupNode::Amalgam { left, right, .. } => {
                left.collect_primitives(out);
                right.collect_primitives(out);
            }
            GroupNode::Hnn { base, stable, .. } => {
                base.collect_primitives(out);
                out.push(stable.clone());
            }
        }
    }

    pub fn has_opaque(&self) -> bool {
        match self {
            GroupNode::Opaque { .. } => true,
            GroupNode::Free { .. } | GroupNode::FreeByCyclic { .. } => false,
            GroupNode::Product { factors } => factors.iter().any(GroupNode::has_opaque),
            GroupNode::Amalgam { left, right, .. } => left.has_opaque() || right.has_opaque(),
            GroupNode::Hnn { base, .. } => base.has_opaque(),
        }
    }

    fn validate(&self) -> Result<(), TowerError> {
        let prims = self.primitives();
        let mut seen = HashSet::new();
        for p in &prims {
            if !seen.insert(p.as_str()) {
                return Err(TowerError::DuplicateGenerator(p.clone()));
            }
        }
        self.validate_rec()
    }

    fn validate_rec(&self) -> Result<(), TowerError> {
        match self {
            GroupNode::Free { .. } | GroupNode::Opaque { .. } => Ok(()),
            GroupNode::FreeByCyclic { fiber, monodromy, inverse, .. } => {
                let alphabet = Alphabet::new(fiber)?;
                let fwd = parse_endo(&alphabet, monodromy)?;
                let inv = parse_endo(&alphabet, inverse)?;
                let id = FreeEndo::identity(&alphabet);
                if fwd.compose(&inv)? != id || inv.compose(&fwd)? != id {
                    return Err(TowerError::NotInverse);
                }
                Ok(())
            }
            GroupNode::Product { factors } => factors.iter().try_for_each(GroupNode::validate_rec),
            GroupNode::Amalgam { left, right, edge } => {
                left.validate_rec()?;
                right.validate_rec()?;
                check_embedding(edge, &edge.first, &left.primitives())?;
                check_embedding(edge, &edge.second, &right.primitives())
            }
            GroupNode::Hnn { base, stable, edge } => {
                base.validate_rec()?;
                let prims = base.primitives();
                if prims.contains(stable) {
                    return Err(TowerError::StableInBase(stable.clone()));
                }
                check_embedding(edge, &edge.first, &prims)?;
                check_embedding(edge, &edge.second, &prims)
            }
        }
    }

    /// Defining relators as letter sequences over `alphabet` (which must contain all primitives).
    fn relators(&self, alphabet: &Arc<Alphabet>, out: &mut Vec<Vec<Letter>>) -> Result<(), TowerError> {
        let parse = |s: &str| -> Result<Vec<Letter>, TowerError> { Ok(Word::parse(alphabet, s)?.into_letters()) };
        match self {
            GroupNode::Free { .. } | GroupNode::Opaque { .. } => {}
            GroupNode::FreeByCyclic { fiber, monodromy, stable, .. } => {
                let t = alphabet.letter(stable)?;
                for (d, img) in fiber.iter().zip(monodromy) {
                    let d = alphabet.letter(d)?;
                    let mut r = vec![t, d, t.inv()];
                    r.extend(crate::words::invert_letters(&parse(img)?));
                    out.push(r);
                }
            }
            GroupNode::Product { factors } => {
                for f in factors {
                    f.relators(alphabet, out)?;
                }
                for (i, fi) in factors.iter().enumerate() {
                    for fj in &factors[i + 1..] {
                        for g in fi.primitives() {
                            for h in fj.primitives() {
                                let (g, h) = (alphabet.letter(&g)?, alphabet.letter(&h)?);
                                out.push(vec![g, h, g.inv(), h.inv()]);
                            }
                        }
                    }
                }
            }
            GroupNode::Amalgam { left, right, edge } => {
                left.relators(alphabet, out)?;
                right.relators(alphabet, out)?;
                for (a, b) in edge.first.images.iter().zip(&edge.second.images) {
                    let mut r = parse(a)?;
                    r.extend(crate::words::invert_letters(&parse(b)?));
                    out.push(r);
                }
            }
            GroupNode::Hnn { base, stable, edge } => {
                base.relators(alphabet, out)?;
                let s = alphabet.letter(stable)?;
                for (a, b) in edge.first.images.iter().zip(&edge.second.images) {
                    let mut r = vec![s.inv()];
                    r.extend(parse(a)?);
                    r.push(s);
                    r.extend(crate::words::invert_letters(&parse(b)?));
                    out.push(r);
                }
            }
        }
        Ok(())
    }
}

fn parse_endo(alphabet: &Arc<Alphabet>, images: &[String]) -> Result<FreeEndo, TowerError> {
    let words = images.iter().map(|s| Word::parse(alphabet, s)).collect::<Result<Vec<_>, _>>()?;
    Ok(FreeEndo::new(alphabet, words)?)
}

fn check_embedding(edge: &EdgePair, emb: &Embedding, target: &[String]) -> Result<(), TowerError> {
    if emb.images.len() != edge.edge.len() {
        return Err(TowerError::ImageCount { edge: edge.edge.len(), images: emb.images.len() });
    }
    let alphabet = Alphabet::new(target)?;
    for img in &emb.images {
        Word::parse(&alphabet, img).map_err(|source| TowerError::BadImage { image: img.clone(), source })?;
    }
    Ok(())
}

/// A named length-one generator standing for a word in the primitives.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacroGenerator {
    pub name: String,
    pub expansion: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    G,
    B,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TowerMeta {
    pub family: Family,
    pub m: usize,
    pub p: usize,
    pub power: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub name: String,
    pub root: GroupNode,
    /// Full generating set in Cayley-graph order, macros included.
    pub generators: Vec<String>,
    pub macros: Vec<MacroGenerator>,
    pub relators: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tower: Option<TowerMeta>,
}

impl GroupSpec {
    /// Validates the node tree and the generator table and derives the relator list.
    pub fn new(
        name: impl Into<String>,
        root: GroupNode,
        generators: Vec<String>,
        macros: Vec<MacroGenerator>,
    ) -> Result<Self, TowerError> {
        root.validate()?;
        let prims = root.primitives();
        let prim_set: HashSet<&str> = prims.iter().map(String::as_str).collect();
        let macro_names: HashSet<&str> = macros.iter().map(|m| m.name.as_str()).collect();
        let mut seen = HashSet::new();
        for g in &generators {
            if !seen.insert(g.as_str()) {
                return Err(TowerError::DuplicateGenerator(g.clone()));
            }
            if !prim_set.contains(g.as_str()) && !macro_names.contains(g.as_str()) {
                return Err(TowerError::GeneratorList(format!("`{g}` is neither primitive nor a macro")));
            }
        }
        if let Some(p) = prims.iter().find(|p| !seen.contains(p.as_str())) {
            return Err(TowerError::GeneratorList(format!("primitive `{p}` missing")));
        }
        if macros.len() != macro_names.len() || macros.iter().any(|m| !seen.contains(m.name.as_str())) {
            return Err(TowerError::GeneratorList("macro table does not match generator list".into()));
        }
        let alphabet = Alphabet::new(&generators)?;
        let prim_alphabet = Alphabet::new(&prims)?;
        let mut rels = Vec::new();
        root.relators(&alphabet, &mut rels)?;
        for m in &macros {
            let exp = Word::parse(&prim_alphabet, &m.expansion)?;
            if exp.is_empty() {
                return Err(TowerError::GeneratorList(format!("macro `{}` expands to the identity", m.name)));
            }
            let mut r = vec![alphabet.letter(&m.name)?];
            let exp = exp.relabel(&alphabet, &|s| s.to_string())?;
            r.extend(crate::words::invert_letters(exp.letters()));
            rels.push(r);
        }
        let relators = rels.iter().map(|r| format_letters(&alphabet, r)).collect();
        Ok(Self { name: name.into(), root, generators, macros, relators, tower: None })
    }

    /// Spec whose generating set is exactly the primitives, in traversal order.
    pub fn plain(name: impl Into<String>, root: GroupNode) -> Result<Self, TowerError> {
        let gens = root.primitives();
        Self::new(name, root, gens, Vec::new())
    }

    /// Generating set `S` (macros included).
    pub fn alphabet(&self) -> Arc<Alphabet> {
        Alphabet::new(&self.generators).expect("validated at construction")
    }

    /// Primitive generators, in the order they appear in `generators`.
    pub fn primitive_alphabet(&self) -> Arc<Alphabet> {
        let macros: HashSet<&str> = self.macros.iter().map(|m| m.name.as_str()).collect();
        Alphabet::new(self.generators.iter().filter(|g| !macros.contains(g.as_str()))).expect("validated at construction")
    }

    pub fn macro_expansion(&self, name: &str) -> Option<&str> {
        self.macros.iter().find(|m| m.name == name).map(|m| m.expansion.as_str())
    }

    pub fn parse_word(&self, text: &str) -> Result<Word, WordError> {
        Word::parse(&self.alphabet(), text)
    }

    pub fn relator_words(&self) -> Result<Vec<Word>, WordError> {
        let alphabet = self.alphabet();
        self.relators.iter().map(|r| Word::parse(&alphabet, r)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    /// Parses and re-validates a spec document.
    pub fn from_json(text: &str) -> Result<Self, TowerError> {
        let raw: GroupSpec = serde_json::from_str(text).map_err(|e| TowerError::Json(e.to_string()))?;
        let mut rebuilt = GroupSpec::new(raw.name.clone(), raw.root.clone(), raw.generators.clone(), raw.macros.clone())?;
        rebuilt.tower = raw.tower.clone();
        if rebuilt != raw {
            return Err(TowerError::Json("relator list does not match the group".into()));
        }
        Ok(raw)
    }
}

fn indexed(prefix: &str, p: usize) -> Vec<String> {
    (1..=p).map(|i| format!("{prefix}{i}")).collect()
}

/// Free-by-cyclic `H = F(d1, d2) ⋊_{φⁿ} ⟨t⟩` and the embedding of its fiber.
pub fn phi_h(power: u32) -> Result<(GroupNode, Embedding), TowerError> {
    let node = GroupNode::phi_fbc(["d1", "d2"], "t", power)?;
    let emb = Embedding { images: indexed("d", 2), tag: OracleTag::FiberOfFreeByCyclic };
    Ok((node, emb))
}

fn cyclic_hnn(base: GroupNode, m: usize) -> GroupNode {
    GroupNode::Hnn {
        base: Box::new(base),
        stable: format!("s{m}"),
        edge: EdgePair {
            edge: vec!["c".into()],
            first: Embedding { images: vec!["s1".into()], tag: OracleTag::CyclicExponent },
            second: Embedding { images: vec![format!("s{}", m - 1)], tag: OracleTag::CyclicExponent },
        },
    }
}

/// The tower `G_m` over `h`, whose designated rank-`p` free subgroup is given by `h_edge`.
pub fn build_g(m: usize, h: GroupNode, h_edge: Embedding, p: usize) -> Result<GroupSpec, TowerError> {
    if m < 1 {
        return Err(TowerError::InvalidLevel(m));
    }
    if h_edge.images.len() != p {
        return Err(TowerError::RankMismatch { expected: p, got: h_edge.images.len() });
    }
    let (xs, ys, zs) = (indexed("x", p), indexed("y", p), indexed("z", p));
    let power = match &h {
        GroupNode::FreeByCyclic { .. } => detect_phi_power(&h),
        _ => None,
    };
    let h_gens = h.primitives();
    let p_node = GroupNode::Product {
        factors: vec![GroupNode::free(&xs), GroupNode::free(&ys), GroupNode::free(&zs)],
    };
    let skew = Embedding {
        images: (0..p).map(|i| format!("{} {}^-1", xs[i], ys[i])).collect(),
        tag: OracleTag::SkewDiagonalInProduct,
    };
    let amalgam = GroupNode::Amalgam {
        left: Box::new(h),
        right: Box::new(p_node),
        edge: EdgePair { edge: indexed("d", p).iter().map(|d| format!("e_{d}")).collect(), first: h_edge, second: skew },
    };
    let mut root = GroupNode::Product { factors: vec![amalgam, GroupNode::free(["s1"])] };
    if m >= 2 {
        root = GroupNode::Hnn {
            base: Box::new(root),
            stable: "s2".into(),
            edge: EdgePair {
                edge: indexed("c", p),
                first: Embedding {
                    images: (0..p).map(|i| format!("{} {}", xs[i], zs[i])).collect(),
                    tag: OracleTag::DiagonalInProduct,
                },
                second: Embedding {
                    images: (0..p).map(|i| format!("{} {}", ys[i], zs[i])).collect(),
                    tag: OracleTag::DiagonalInProduct,
                },
            },
        };
    }
    for k in 3..=m {
        root = cyclic_hnn(root, k);
    }
    let (a_s, b_s) = (indexed("a", p), indexed("b", p));
    let mut generators: Vec<String> = h_gens;
    generators.extend(xs.iter().chain(&ys).chain(&zs).chain(&a_s).chain(&b_s).cloned());
    generators.extend((1..=m).map(|k| format!("s{k}")));
    let macros = (0..p)
        .map(|i| MacroGenerator { name: a_s[i].clone(), expansion: format!("{} {}", xs[i], zs[i]) })
        .chain((0..p).map(|i| MacroGenerator { name: b_s[i].clone(), expansion: format!("{} {}", ys[i], zs[i]) }))
        .collect();
    let mut spec = GroupSpec::new(format!("G{m}"), root, generators, macros)?;
    spec.tower = Some(TowerMeta { family: Family::G, m, p, power: power.unwrap_or(0) });
    Ok(spec)
}

/// `G_m` with `H = F(d1, d2) ⋊_{φⁿ} ⟨t⟩`.
pub fn build_g_phi(m: usize, power: u32) -> Result<GroupSpec, TowerError> {
    let (h, emb) = phi_h(power)?;
    build_g(m, h, emb, 2)
}

fn detect_phi_power(h: &GroupNode) -> Option<u32> {
    let GroupNode::FreeByCyclic { fiber, monodromy, .. } = h else { return None };
    if fiber.len() != 2 {
        return None;
    }
    let alphabet = Alphabet::new(fiber).ok()?;
    let target = parse_endo(&alphabet, monodromy).ok()?;
    let phi = FreeEndo::phi_on(&alphabet);
    let mut cur = FreeEndo::identity(&alphabet);
    for n in 0..=12u32 {
        if cur == target {
            return Some(n);
        }
        cur = phi.compose(&cur).ok()?;
    }
    None
}

/// The ambient tower `B_m` (rank two) with monodromy `φⁿ`.
pub fn build_b(m: usize, power: u32) -> Result<GroupSpec, TowerError> {
    if m < 1 {
        return Err(TowerError::InvalidLevel(m));
    }
    let p = 2;
    let c_node = GroupNode::Product {
        factors: vec![GroupNode::phi_fbc(["d1", "d2"], "t_d", power)?, GroupNode::free(["s"])],
    };
    let q_node = GroupNode::Product {
        factors: vec![
            GroupNode::phi_fbc(["x1", "x2"], "t_x", power)?,
            GroupNode::phi_fbc(["y1", "y2"], "t_y", power)?,
            GroupNode::phi_fbc(["z1", "z2"], "t_z", power)?,
        ],
    };
    let amalgam = GroupNode::Amalgam {
        left: Box::new(c_node),
        right: Box::new(q_node),
        edge: EdgePair {
            edge: vec!["e_d1".into(), "e_d2".into(), "e_t".into()],
            first: Embedding { images: vec!["d1".into(), "d2".into(), "t_d".into()], tag: OracleTag::FreeFactor },
            second: Embedding {
                images: vec!["x1 y1^-1".into(), "x2 y2^-1".into(), "t_x t_y".into()],
                tag: OracleTag::SkewDiagonalInProduct,
            },
        },
    };
    let mut root = GroupNode::Product { factors: vec![amalgam, GroupNode::free(["s1"])] };
    if m >= 2 {
        root = GroupNode::Hnn {
            base: Box::new(root),
            stable: "s2".into(),
            edge: EdgePair {
                edge: vec!["c1".into(), "c2".into(), "c_t".into()],
                first: Embedding {
                    images: vec!["x1 z1".into(), "x2 z2".into(), "t_x t_z".into()],
                    tag: OracleTag::DiagonalInProduct,
                },
                second: Embedding {
                    images: vec!["y1 z1".into(), "y2 z2".into(), "t_y t_z".into()],
                    tag: OracleTag::DiagonalInProduct,
                },
            },
        };
    }
    for k in 3..=m {
        root = cyclic_hnn(root, k);
    }
    let mut generators: Vec<String> = ["d1", "d2", "t_d", "s", "x1", "x2", "y1", "y2", "z1", "z2", "t_x", "t_y", "t_z"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    generators.extend(indexed("a", p).into_iter().chain(indexed("b", p)));
    generators.extend((1..=m).map(|k| format!("s{k}")));
    let macros = (1..=p)
        .map(|i| MacroGenerator { name: format!("a{i}"), expansion: format!("x{i} z{i}") })
        .chain((1..=p).map(|i| MacroGenerator { name: format!("b{i}"), expansion: format!("y{i} z{i}") }))
        .collect();
    let mut spec = GroupSpec::new(format!("B{m}"), root, generators, macros)?;
    spec.tower = Some(TowerMeta { family: Family::B, m, p, power });
    Ok(spec)
}

/// Generator-to-word map realizing `G_m ≤ B_m`.
#[derive(Clone, Debug)]
pub struct Inclusion {
    pub source: Arc<Alphabet>,
    pub target: Arc<Alphabet>,
    pub images: Vec<Word>,
}

impl Inclusion {
    pub fn apply(&self, w: &Word) -> Result<Word, WordError> {
        if !w.alphabet().same_as(&self.source) {
            return Err(WordError::AlphabetMismatch);
        }
        let mut out = Vec::new();
        for l in w.letters() {
            let img = self.images[l.index as usize].letters();
            if l.inverse {
                out.extend(crate::words::invert_letters(img));
            } else {
                out.extend_from_slice(img);
            }
        }
        Word::reduce(&self.target, out)
    }

    pub fn image_of(&self, name: &str) -> Result<&Word, WordError> {
        let i = self.source.position(name).ok_or_else(|| WordError::UnknownGenerator(name.to_string()))?;
        Ok(&self.images[i as usize])
    }
}

pub fn inclusion_map(g: &GroupSpec, b: &GroupSpec) -> Result<Inclusion, TowerError> {
    let (Some(gm), Some(bm)) = (&g.tower, &b.tower) else {
        return Err(TowerError::Mismatch("both specs must come from the tower constructors".into()));
    };
    if gm.family != Family::G || bm.family != Family::B {
        return Err(TowerError::Mismatch("expected a G spec and a B spec".into()));
    }
    if gm.m != bm.m || gm.power != bm.power || gm.p != bm.p {
        return Err(TowerError::Mismatch(format!(
            "G(m={}, n={}) vs B(m={}, n={})",
            gm.m, gm.power, bm.m, bm.power
        )));
    }
    let source = g.alphabet();
    let target = b.alphabet();
    let images = g
        .generators
        .iter()
        .map(|name| if name == "t" { Word::parse(&target, "t_d s") } else { Word::parse(&target, name) })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Inclusion { source, target, images })
}

/// `F(a, b) ⋊_φ ⟨t⟩` on its own, used for distortion tables.
pub fn fbc_phi_spec() -> GroupSpec {
    let node = GroupNode::phi_fbc(["a", "b"], "t", 1).expect("valid");
    GroupSpec::plain("fbc-phi", node).expect("valid")
}

pub fn free_spec(rank: usize) -> GroupSpec {
    let names: Vec<String> = if rank <= 26 {
        (0..rank).map(|i| ((b'a' + i as u8) as char).to_string()).collect()
    } else {
        indexed("g", rank)
    };
    GroupSpec::plain(format!("F{rank}"), GroupNode::free(names)).expect("valid")
}

/// `ℤᵏ` as a product of cyclic free factors `e1, …, ek`.
pub fn lattice_spec(rank: usize) -> GroupSpec {
    let factors = indexed("e", rank).into_iter().map(|g| GroupNode::free([g])).collect();
    GroupSpec::plain(format!("Z{rank}"), GroupNode::Product { factors }).expect("valid")
}
