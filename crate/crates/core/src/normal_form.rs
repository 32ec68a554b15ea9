//! Canonical forms for the supported group specs.
//!
//! A spec is compiled into a tree of [`Node`]s mirroring its description. Elements
//! are kept in canonical form ([`Elem`]) and multiplied one primitive letter at a
//! time. Amalgams use alternating syllables of coset representatives, HNN
//! extensions use pinch-free sequences of representatives and stable letters.
//! Coset representatives come from one rule: for a subgroup `K` with embedding
//! `ι`, an element `g` is split as `g = rep · ι(w)` where `w = extract(g)` is an
//! edge word satisfying `extract(g·ι(a)) = extract(g)·a`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::tower::{Embedding, GroupNode, GroupSpec, OracleTag, TowerError};
use crate::words::{invert_letters, push_reduced, Alphabet, Letter, Word, WordError, DEFAULT_LENGTH_CAP};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NfError {
    #[error("no word problem available for `{0}`")]
    UnsupportedBase(String),
    #[error("equality unknown: intermediate length exceeded the cap {cap}")]
    Unknown { cap: usize },
    #[error("cannot compile edge embedding: {0}")]
    Compile(String),
    #[error("oracle tag {tag:?} does not match the embedding shape ({found})")]
    TagMismatch { tag: OracleTag, found: String },
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Tower(#[from] TowerError),
}

/// Canonical element of a compiled node. Letters are local to the node.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Elem {
    Free(Vec<Letter>),
    /// `t^t · fiber`.
    Fbc { t: i64, fiber: Vec<Letter> },
    Product(Vec<Elem>),
    /// Syllables `(side, element)`; all but the last are nontrivial coset representatives.
    Amalgam(Vec<(u8, Elem)>),
    /// `c₁ s^{e₁} c₂ s^{e₂} ⋯ tail`.
    Hnn { prefix: Vec<(Elem, i8)>, tail: Box<Elem> },
}

impl Elem {
    /// Byte encoding of the canonical form; equal elements encode equally.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.encode_into(&mut out);
        out
    }

    fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            Elem::Free(ls) => {
                out.push(0);
                encode_letters(ls, out);
            }
            Elem::Fbc { t, fiber } => {
                out.push(1);
                varint(((t << 1) ^ (t >> 63)) as u64, out);
                encode_letters(fiber, out);
            }
            Elem::Product(fs) => {
                out.push(2);
                varint(fs.len() as u64, out);
                fs.iter().for_each(|f| f.encode_into(out));
            }
            Elem::Amalgam(syl) => {
                out.push(3);
                varint(syl.len() as u64, out);
                for (side, e) in syl {
                    out.push(*side);
                    e.encode_into(out);
                }
            }
            Elem::Hnn { prefix, tail } => {
                out.push(4);
                varint(prefix.len() as u64, out);
                for (c, sign) in prefix {
                    out.push(*sign as u8);
                    c.encode_into(out);
                }
                tail.encode_into(out);
            }
        }
    }

    /// Number of stable letters in an HNN form; zero for other shapes.
    pub fn stable_length(&self) -> usize {
        match self {
            Elem::Hnn { prefix, .. } => prefix.len(),
            _ => 0,
        }
    }
}

fn varint(mut v: u64, out: &mut Vec<u8>) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

fn encode_letters(ls: &[Letter], out: &mut Vec<u8>) {
    varint(ls.len() as u64, out);
    for l in ls {
        varint(u64::from(l.index) * 2 + u64::from(l.inverse), out);
    }
}

/// Where an edge subgroup lives inside a node.
#[derive(Clone, Debug)]
enum SubLoc {
    /// In factor / side / base `index`.
    Child { index: usize, sub: Box<SubLoc> },
    /// The fiber of a free-by-cyclic node; `map` sends local fiber letters to edge letters.
    Fiber { map: Vec<Letter> },
    /// All of a free or free-by-cyclic node.
    Whole { map: Vec<Letter>, stable: Option<Letter> },
    /// The cyclic group generated by an HNN node's own stable letter.
    StablePower { edge: Letter },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum LeafKind {
    Fiber,
    Whole,
    StablePower,
}

#[derive(Clone, Debug)]
struct Side {
    loc: SubLoc,
    /// Image of each edge generator, as global primitive letters.
    images: Vec<Vec<Letter>>,
    /// For a product of free factors where every generator puts at most one letter in
    /// each factor: which factors the images occupy.
    profile: Option<Vec<bool>>,
}

#[derive(Clone, Debug)]
struct Edge {
    sides: [Side; 2],
}

const NONE: u32 = u32::MAX;

#[derive(Clone, Debug)]
enum Node {
    Free { route: Vec<u32>, globals: Vec<u32> },
    Fbc { route: Vec<u32>, globals: Vec<u32>, stable: u32, fwd: Vec<Vec<Letter>>, inv: Vec<Vec<Letter>> },
    Product { route: Vec<u32>, factors: Vec<Node> },
    Amalgam { route: Vec<u32>, sides: [Box<Node>; 2], edge: Box<Edge> },
    Hnn { stable: u32, base: Box<Node>, edge: Box<Edge> },
}

/// Scratch context for one operation.
#[derive(Clone, Copy)]
struct Ctx {
    cap: usize,
}

impl Node {
    fn compile(node: &GroupNode, prim: &Alphabet) -> Result<Node, NfError> {
        let n = prim.len();
        let global = |name: &str| -> Result<u32, NfError> {
            prim.position(name).ok_or_else(|| NfError::Word(WordError::UnknownGenerator(name.into())))
        };
        Ok(match node {
            GroupNode::Opaque { label, .. } => return Err(NfError::UnsupportedBase(label.clone())),
            GroupNode::Free { generators } => {
                let mut route = vec![NONE; n];
                let globals = generators.iter().map(|g| global(g)).collect::<Result<Vec<_>, _>>()?;
                for (i, &g) in globals.iter().enumerate() {
                    route[g as usize] = i as u32;
                }
                Node::Free { route, globals }
            }
            GroupNode::FreeByCyclic { fiber, monodromy, inverse, stable } => {
                let mut route = vec![NONE; n];
                let globals = fiber.iter().map(|g| global(g)).collect::<Result<Vec<_>, _>>()?;
                for (i, &g) in globals.iter().enumerate() {
                    route[g as usize] = i as u32;
                }
                let local = Alphabet::new(fiber)?;
                let parse = |v: &[String]| -> Result<Vec<Vec<Letter>>, NfError> {
                    v.iter().map(|s| Ok(Word::parse(&local, s)?.into_letters())).collect()
                };
                Node::Fbc { route, globals, stable: global(stable)?, fwd: parse(monodromy)?, inv: parse(inverse)? }
            }
            GroupNode::Product { factors } => {
                let mut route = vec![NONE; n];
                let compiled = factors.iter().map(|f| Node::compile(f, prim)).collect::<Result<Vec<_>, _>>()?;
                for (i, f) in factors.iter().enumerate() {
                    for g in f.primitives() {
                        route[global(&g)? as usize] = i as u32;
                    }
                }
                Node::Product { route, factors: compiled }
            }
            GroupNode::Amalgam { left, right, edge } => {
                let mut route = vec![NONE; n];
                for (i, s) in [left, right].into_iter().enumerate() {
                    for g in s.primitives() {
                        route[global(&g)? as usize] = i as u32;
                    }
                }
                let l = Node::compile(left, prim)?;
                let r = Node::compile(right, prim)?;
                let e = Edge {
                    sides: [
                        Side::compile(&l, &edge.first, edge.edge.len(), prim)?,
                        Side::compile(&r, &edge.second, edge.edge.len(), prim)?,
                    ],
                };
                Node::Amalgam { route, sides: [Box::new(l), Box::new(r)], edge: Box::new(e) }
            }
            GroupNode::Hnn { base, stable, edge } => {
                let b = Node::compile(base, prim)?;
                let e = Edge {
                    sides: [
                        Side::compile(&b, &edge.first, edge.edge.len(), prim)?,
                        Side::compile(&b, &edge.second, edge.edge.len(), prim)?,
                    ],
                };
                Node::Hnn { stable: global(stable)?, base: Box::new(b), edge: Box::new(e) }
            }
        })
    }

    fn contains(&self, g: u32) -> bool {
        match self {
            Node::Free { route, .. } | Node::Product { route, .. } | Node::Amalgam { route, .. } => {
                route[g as usize] != NONE
            }
            Node::Fbc { route, stable, .. } => route[g as usize] != NONE || *stable == g,
            Node::Hnn { stable, base, .. } => *stable == g || base.contains(g),
        }
    }

    fn identity(&self) -> Elem {
        match self {
            Node::Free { .. } => Elem::Free(Vec::new()),
            Node::Fbc { .. } => Elem::Fbc { t: 0, fiber: Vec::new() },
            Node::Product { factors, .. } => Elem::Product(factors.iter().map(Node::identity).collect()),
            Node::Amalgam { sides, .. } => Elem::Amalgam(vec![(0, sides[0].identity())]),
            Node::Hnn { base, .. } => Elem::Hnn { prefix: Vec::new(), tail: Box::new(base.identity()) },
        }
    }

    fn is_identity(&self, e: &Elem) -> bool {
        match (self, e) {
            (Node::Free { .. }, Elem::Free(ls)) => ls.is_empty(),
            (Node::Fbc { .. }, Elem::Fbc { t, fiber }) => *t == 0 && fiber.is_empty(),
            (Node::Product { factors, .. }, Elem::Product(es)) => {
                factors.iter().zip(es).all(|(f, e)| f.is_identity(e))
            }
            (Node::Amalgam { sides, .. }, Elem::Amalgam(syl)) => {
                syl.len() == 1 && syl[0].0 == 0 && sides[0].is_identity(&syl[0].1)
            }
            (Node::Hnn { base, .. }, Elem::Hnn { prefix, tail }) => prefix.is_empty() && base.is_identity(tail),
            _ => unreachable!("element shape does not match node"),
        }
    }

    fn mul_letters(&self, e: &mut Elem, ls: &[Letter], ctx: Ctx) -> Result<(), NfError> {
        ls.iter().try_for_each(|&l| self.mul(e, l, ctx))
    }

    /// Right multiplication by a global primitive letter.
    fn mul(&self, e: &mut Elem, l: Letter, ctx: Ctx) -> Result<(), NfError> {
        match (self, e) {
            (Node::Free { route, .. }, Elem::Free(ls)) => {
                push_reduced(ls, Letter { index: route[l.index as usize], inverse: l.inverse });
                Ok(())
            }
            (Node::Fbc { route, stable, fwd, inv, .. }, Elem::Fbc { t, fiber }) => {
                if l.index == *stable {
                    // t·d·t⁻¹ = φ(d): (tᵏv)·t = tᵏ⁺¹φ⁻¹(v), (tᵏv)·t⁻¹ = tᵏ⁻¹φ(v)
                    let (table, dt) = if l.inverse { (fwd, -1) } else { (inv, 1) };
                    *fiber = apply_table(table, fiber, ctx.cap)?;
                    *t += dt;
                } else {
                    push_reduced(fiber, Letter { index: route[l.index as usize], inverse: l.inverse });
                    if fiber.len() > ctx.cap {
                        return Err(NfError::Unknown { cap: ctx.cap });
                    }
                }
                Ok(())
            }
            (Node::Product { route, factors }, Elem::Product(es)) => {
                let i = route[l.index as usize] as usize;
                factors[i].mul(&mut es[i], l, ctx)
            }
            (Node::Amalgam { route, sides, edge }, Elem::Amalgam(syl)) => {
                let x = route[l.index as usize] as u8;
                amalgam_mul(sides, edge, syl, x, l, ctx)
            }
            (Node::Hnn { stable, base, edge }, Elem::Hnn { prefix, tail }) => {
                if l.index != *stable {
                    return base.mul(tail, l, ctx);
                }
                let sign: i8 = if l.inverse { -1 } else { 1 };
                // s⁻¹·first(w)·s = second(w)
                let (from, to) = if sign > 0 { (0, 1) } else { (1, 0) };
                let (w, rep) = base.decompose(tail, &edge.sides[from], ctx)?;
                let pinch = base.is_identity(&rep) && prefix.last().is_some_and(|(_, s)| *s == -sign);
                if pinch {
                    let (mut c, _) = prefix.pop().expect("checked");
                    base.mul_image(&mut c, &w, &edge.sides[to], ctx)?;
                    **tail = c;
                } else {
                    prefix.push((rep, sign));
                    let mut fresh = base.identity();
                    base.mul_image(&mut fresh, &w, &edge.sides[to], ctx)?;
                    **tail = fresh;
                }
                Ok(())
            }
            _ => unreachable!("element shape does not match node"),
        }
    }

    /// Multiplies by the image of an edge word.
    fn mul_image(&self, e: &mut Elem, w: &[Letter], side: &Side, ctx: Ctx) -> Result<(), NfError> {
        for l in w {
            let img = &side.images[l.index as usize];
            if l.inverse {
                for m in img.iter().rev() {
                    self.mul(e, m.inv(), ctx)?;
                }
            } else {
                self.mul_letters(e, img, ctx)?;
            }
        }
        Ok(())
    }

    fn image(&self, w: &[Letter], side: &Side, ctx: Ctx) -> Result<Elem, NfError> {
        let mut e = self.identity();
        self.mul_image(&mut e, w, side, ctx)?;
        Ok(e)
    }

    /// Splits `e = rep · image(w)`.
    fn decompose(&self, e: &Elem, side: &Side, ctx: Ctx) -> Result<(Vec<Letter>, Elem), NfError> {
        match (self, e, &side.loc) {
            (Node::Fbc { .. }, Elem::Fbc { t, fiber }, SubLoc::Fiber { map }) => {
                Ok((relabel(fiber, map), Elem::Fbc { t: *t, fiber: Vec::new() }))
            }
            (Node::Free { .. } | Node::Fbc { .. }, _, SubLoc::Whole { .. }) => {
                Ok((self.extract(e, &side.loc, ctx)?, self.identity()))
            }
            _ => {
                let w = self.extract(e, &side.loc, ctx)?;
                let mut rep = e.clone();
                self.mul_image(&mut rep, &invert_letters(&w), side, ctx)?;
                Ok((w, rep))
            }
        }
    }

    /// Edge word `w` with `extract(g·image(a)) = extract(g)·a`.
    fn extract(&self, e: &Elem, loc: &SubLoc, ctx: Ctx) -> Result<Vec<Letter>, NfError> {
        match (self, e, loc) {
            (Node::Fbc { .. }, Elem::Fbc { fiber, .. }, SubLoc::Fiber { map }) => Ok(relabel(fiber, map)),
            (Node::Fbc { .. }, Elem::Fbc { t, fiber }, SubLoc::Whole { map, stable }) => {
                let c = stable.expect("compiled with stable image");
                let c = if *t < 0 { c.inv() } else { c };
                let mut out = vec![c; t.unsigned_abs() as usize];
                out.extend(relabel(fiber, map));
                Ok(out)
            }
            (Node::Free { .. }, Elem::Free(ls), SubLoc::Whole { map, .. }) => Ok(relabel(ls, map)),
            (Node::Product { factors, .. }, Elem::Product(es), SubLoc::Child { index, sub }) => {
                factors[*index].extract(&es[*index], sub, ctx)
            }
            (Node::Amalgam { sides, edge, .. }, Elem::Amalgam(syl), SubLoc::Child { index, sub }) => {
                let (s, q) = syl.last().expect("nonempty");
                let x = *index;
                if *s as usize == x {
                    sides[x].extract(q, sub, ctx)
                } else {
                    let s = *s as usize;
                    let w = sides[s].extract(q, &edge.sides[s].loc, ctx)?;
                    let q2 = sides[x].image(&w, &edge.sides[x], ctx)?;
                    sides[x].extract(&q2, sub, ctx)
                }
            }
            (Node::Hnn { base, .. }, Elem::Hnn { tail, .. }, SubLoc::Child { sub, .. }) => base.extract(tail, sub, ctx),
            (Node::Hnn { stable, .. }, _, SubLoc::StablePower { edge }) => {
                // Prefix length along g·s^{-k} is convex in k with a unique minimum.
                let s = Letter::pos(*stable);
                let mut best = e.stable_length();
                for step in [s.inv(), s] {
                    let mut cur = e.clone();
                    let mut k: i64 = 0;
                    loop {
                        let mut next = cur.clone();
                        self.mul(&mut next, step, ctx)?;
                        if next.stable_length() < best {
                            best = next.stable_length();
                            cur = next;
                            k += 1;
                        } else {
                            break;
                        }
                    }
                    if k > 0 {
                        // e = rep · s^{±k}
                        let c = if step.inverse { *edge } else { edge.inv() };
                        return Ok(vec![c; k as usize]);
                    }
                }
                Ok(Vec::new())
            }
            _ => unreachable!("subgroup location does not match node"),
        }
    }

    /// A word over global primitive letters representing `e`.
    fn word_of(&self, e: &Elem, out: &mut Vec<Letter>) {
        match (self, e) {
            (Node::Free { globals, .. }, Elem::Free(ls)) => {
                out.extend(ls.iter().map(|l| Letter { index: globals[l.index as usize], inverse: l.inverse }));
            }
            (Node::Fbc { globals, stable, .. }, Elem::Fbc { t, fiber }) => {
                let s = if *t < 0 { Letter::neg(*stable) } else { Letter::pos(*stable) };
                out.extend(std::iter::repeat_n(s, t.unsigned_abs() as usize));
                out.extend(fiber.iter().map(|l| Letter { index: globals[l.index as usize], inverse: l.inverse }));
            }
            (Node::Product { factors, .. }, Elem::Product(es)) => {
                factors.iter().zip(es).for_each(|(f, e)| f.word_of(e, out));
            }
            (Node::Amalgam { sides, .. }, Elem::Amalgam(syl)) => {
                syl.iter().for_each(|(s, e)| sides[*s as usize].word_of(e, out));
            }
            (Node::Hnn { stable, base, .. }, Elem::Hnn { prefix, tail }) => {
                for (c, sign) in prefix {
                    base.word_of(c, out);
                    out.push(if *sign < 0 { Letter::neg(*stable) } else { Letter::pos(*stable) });
                }
                base.word_of(tail, out);
            }
            _ => unreachable!("element shape does not match node"),
        }
    }

    /// Compiles where the subgroup generated by `images` sits in this node.
    fn locate(&self, images: &[Vec<Letter>]) -> Result<(SubLoc, LeafKind, bool), NfError> {
        let single = |img: &Vec<Letter>| (img.len() == 1).then(|| img[0]);
        let fail = |why: &str| Err(NfError::Compile(why.to_string()));
        match self {
            Node::Free { route, globals } => {
                let mut map = vec![None; globals.len()];
                for (j, img) in images.iter().enumerate() {
                    let Some(l) = single(img) else { return fail("free images must be single letters") };
                    let local = route[l.index as usize];
                    if local == NONE || map[local as usize].is_some() {
                        return fail("free images must be distinct generators");
                    }
                    map[local as usize] = Some(Letter { index: j as u32, inverse: l.inverse });
                }
                let map = map.into_iter().collect::<Option<Vec<_>>>();
                match map {
                    Some(map) => Ok((SubLoc::Whole { map, stable: None }, LeafKind::Whole, false)),
                    None => fail("free images must cover every generator"),
                }
            }
            Node::Fbc { route, globals, stable, .. } => {
                let mut map = vec![None; globals.len()];
                let mut st = None;
                for (j, img) in images.iter().enumerate() {
                    let Some(l) = single(img) else { return fail("free-by-cyclic images must be single letters") };
                    let e = Letter { index: j as u32, inverse: l.inverse };
                    if l.index == *stable {
                        if st.replace(e).is_some() {
                            return fail("stable letter used twice");
                        }
                        continue;
                    }
                    let local = route[l.index as usize];
                    if local == NONE || map[local as usize].is_some() {
                        return fail("fiber images must be distinct generators");
                    }
                    map[local as usize] = Some(e);
                }
                let Some(map) = map.into_iter().collect::<Option<Vec<_>>>() else {
                    return fail("fiber images must cover the fiber");
                };
                Ok(match st {
                    Some(_) => (SubLoc::Whole { map, stable: st }, LeafKind::Whole, false),
                    None => (SubLoc::Fiber { map }, LeafKind::Fiber, false),
                })
            }
            Node::Product { route, factors } => {
                let mut last_err = NfError::Compile("edge images are empty".into());
                for (i, f) in factors.iter().enumerate() {
                    let proj: Vec<Vec<Letter>> = images
                        .iter()
                        .map(|img| img.iter().copied().filter(|l| route[l.index as usize] == i as u32).collect())
                        .collect();
                    if proj.iter().any(Vec::is_empty) {
                        continue;
                    }
                    let dropped = proj.iter().zip(images).any(|(p, img)| p.len() != img.len());
                    match f.locate(&proj) {
                        Ok((sub, kind, inner)) => {
                            return Ok((SubLoc::Child { index: i, sub: Box::new(sub) }, kind, dropped || inner))
                        }
                        Err(e) => last_err = e,
                    }
                }
                Err(last_err)
            }
            Node::Amalgam { route, sides, .. } => {
                let mut it = images.iter().flatten().map(|l| route[l.index as usize]);
                let Some(x) = it.next() else { return fail("edge images are empty") };
                if it.any(|y| y != x) {
                    return fail("edge images straddle both sides of an amalgam");
                }
                let (sub, kind, proj) = sides[x as usize].locate(images)?;
                Ok((SubLoc::Child { index: x as usize, sub: Box::new(sub) }, kind, proj))
            }
            Node::Hnn { stable, base, .. } => {
                let uses_stable = images.iter().flatten().any(|l| l.index == *stable);
                if !uses_stable {
                    let (sub, kind, proj) = base.locate(images)?;
                    return Ok((SubLoc::Child { index: 0, sub: Box::new(sub) }, kind, proj));
                }
                match images {
                    [img] if img.as_slice() == [Letter::pos(*stable)] => {
                        Ok((SubLoc::StablePower { edge: Letter::pos(0) }, LeafKind::StablePower, false))
                    }
                    _ => fail("only the cyclic group of a stable letter is supported"),
                }
            }
        }
    }
}

impl Side {
    fn compile(node: &Node, emb: &Embedding, edge_len: usize, prim: &Alphabet) -> Result<Side, NfError> {
        let alphabet = Arc::new(prim.clone());
        let images = emb
            .images
            .iter()
            .map(|s| Ok(Word::parse(&alphabet, s)?.into_letters()))
            .collect::<Result<Vec<_>, NfError>>()?;
        if images.len() != edge_len {
            return Err(NfError::Compile(format!("{} images for {} edge generators", images.len(), edge_len)));
        }
        if let Some(l) = images.iter().flatten().find(|l| !node.contains(l.index)) {
            return Err(NfError::Compile(format!("image letter `{}` outside the vertex group", prim.name(l.index))));
        }
        let (loc, kind, projected) = node.locate(&images)?;
        let mixed = images.iter().any(|img| img.iter().any(|l| l.inverse) && img.iter().any(|l| !l.inverse));
        let ok = match emb.tag {
            OracleTag::FiberOfFreeByCyclic => kind == LeafKind::Fiber && !projected,
            OracleTag::FreeFactor => kind == LeafKind::Whole && !projected,
            OracleTag::DiagonalInProduct => projected && !mixed,
            OracleTag::SkewDiagonalInProduct => projected && mixed,
            OracleTag::CyclicExponent => edge_len == 1 && kind != LeafKind::Fiber && !projected,
        };
        if !ok {
            return Err(NfError::TagMismatch {
                tag: emb.tag,
                found: format!("{kind:?}{}", if projected { ", projected" } else { "" }),
            });
        }
        let profile = Side::profile(node, &images);
        Ok(Side { loc, images, profile })
    }

    fn profile(node: &Node, images: &[Vec<Letter>]) -> Option<Vec<bool>> {
        let Node::Product { route, factors } = node else { return None };
        if !factors.iter().all(|f| matches!(f, Node::Free { .. })) {
            return None;
        }
        let mut used: Vec<Vec<u32>> = vec![Vec::new(); factors.len()];
        for img in images {
            let mut seen = vec![false; factors.len()];
            for l in img {
                let f = route[l.index as usize] as usize;
                if std::mem::replace(&mut seen[f], true) || used[f].contains(&l.index) {
                    return None;
                }
                used[f].push(l.index);
            }
        }
        let n = images.len();
        if used.iter().any(|u| !u.is_empty() && u.len() != n) {
            return None;
        }
        Some(used.iter().map(|u| !u.is_empty()).collect())
    }

    /// Cheap necessary condition for membership; `true` when undecided.
    fn might_contain(&self, e: &Elem) -> bool {
        let (Some(profile), Elem::Product(fs)) = (&self.profile, e) else { return true };
        let mut len = None;
        for (on, f) in profile.iter().zip(fs) {
            let Elem::Free(ls) = f else { return true };
            if !on {
                if !ls.is_empty() {
                    return false;
                }
            } else if *len.get_or_insert(ls.len()) != ls.len() {
                return false;
            }
        }
        true
    }
}

fn relabel(ls: &[Letter], map: &[Letter]) -> Vec<Letter> {
    ls.iter()
        .map(|l| {
            let m = map[l.index as usize];
            if l.inverse {
                m.inv()
            } else {
                m
            }
        })
        .collect()
}

fn apply_table(table: &[Vec<Letter>], v: &[Letter], cap: usize) -> Result<Vec<Letter>, NfError> {
    let mut out = Vec::with_capacity(v.len());
    for l in v {
        let img = &table[l.index as usize];
        if l.inverse {
            img.iter().rev().for_each(|m| push_reduced(&mut out, m.inv()));
        } else {
            img.iter().for_each(|&m| push_reduced(&mut out, m));
        }
        if out.len() > cap {
            return Err(NfError::Unknown { cap });
        }
    }
    Ok(out)
}

fn amalgam_mul(
    sides: &[Box<Node>; 2],
    edge: &Edge,
    syl: &mut Vec<(u8, Elem)>,
    x: u8,
    l: Letter,
    ctx: Ctx,
) -> Result<(), NfError> {
    let xi = x as usize;
    let (s, _) = *syl.last().expect("nonempty");
    if s == x {
        let last = &mut syl.last_mut().expect("nonempty").1;
        sides[xi].mul(last, l, ctx)?;
    } else {
        let si = s as usize;
        let (w, rep) = sides[si].decompose(&syl.last().expect("nonempty").1, &edge.sides[si], ctx)?;
        if sides[si].is_identity(&rep) {
            syl.pop();
            match syl.last_mut() {
                Some((_, prev)) => {
                    sides[xi].mul_image(prev, &w, &edge.sides[xi], ctx)?;
                    sides[xi].mul(prev, l, ctx)?;
                }
                None => {
                    let mut q = sides[xi].image(&w, &edge.sides[xi], ctx)?;
                    sides[xi].mul(&mut q, l, ctx)?;
                    syl.push((x, q));
                }
            }
        } else {
            syl.last_mut().expect("nonempty").1 = rep;
            let mut q = sides[xi].image(&w, &edge.sides[xi], ctx)?;
            sides[xi].mul(&mut q, l, ctx)?;
            syl.push((x, q));
        }
    }
    fix_last(sides, edge, syl, ctx)
}

/// Restores the syllable invariants after the last syllable changed.
fn fix_last(sides: &[Box<Node>; 2], edge: &Edge, syl: &mut Vec<(u8, Elem)>, ctx: Ctx) -> Result<(), NfError> {
    let (s, _) = *syl.last().expect("nonempty");
    let si = s as usize;
    if !edge.sides[si].might_contain(&syl.last().expect("nonempty").1) {
        return Ok(());
    }
    let (w, rep) = sides[si].decompose(&syl.last().expect("nonempty").1, &edge.sides[si], ctx)?;
    if !sides[si].is_identity(&rep) {
        return Ok(());
    }
    syl.pop();
    let other = 1 - si;
    match syl.last_mut() {
        Some((_, prev)) => sides[other].mul_image(prev, &w, &edge.sides[other], ctx)?,
        None => {
            let q = sides[0].image(&w, &edge.sides[0], ctx)?;
            syl.push((0, q));
        }
    }
    Ok(())
}

/// Canonical form of a group element.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NormalForm {
    elem: Elem,
    trivial: bool,
}

impl NormalForm {
    pub fn is_trivial(&self) -> bool {
        self.trivial
    }

    pub fn elem(&self) -> &Elem {
        &self.elem
    }

    /// Byte encoding; equal iff the elements are equal.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.elem.encode_into(&mut out);
        out
    }

    /// Number of stable letters of the outermost HNN extension.
    pub fn stable_length(&self) -> usize {
        self.elem.stable_length()
    }
}

/// Edge subgroup prepared for membership queries.
#[derive(Clone, Debug)]
pub struct Oracle {
    edge: Arc<Alphabet>,
    side: Side,
    tag: OracleTag,
}

impl Oracle {
    pub fn tag(&self) -> OracleTag {
        self.tag
    }

    pub fn edge_alphabet(&self) -> &Arc<Alphabet> {
        &self.edge
    }
}

/// A spec compiled for word-problem queries.
#[derive(Clone)]
pub struct Group {
    spec: Arc<GroupSpec>,
    alphabet: Arc<Alphabet>,
    prim: Arc<Alphabet>,
    expand: Vec<Vec<Letter>>,
    root: Node,
    cap: usize,
}

impl fmt::Debug for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Group({})", self.spec.name)
    }
}

impl Group {
    pub fn new(spec: &GroupSpec) -> Result<Self, NfError> {
        Self::with_cap(spec, DEFAULT_LENGTH_CAP)
    }

    pub fn with_cap(spec: &GroupSpec, cap: usize) -> Result<Self, NfError> {
        let alphabet = spec.alphabet();
        let prim = spec.primitive_alphabet();
        let root = Node::compile(&spec.root, &prim)?;
        let expand = spec
            .generators
            .iter()
            .map(|g| {
                let text = spec.macro_expansion(g).unwrap_or(g);
                Ok(Word::parse(&prim, text)?.into_letters())
            })
            .collect::<Result<Vec<_>, NfError>>()?;
        Ok(Self { spec: Arc::new(spec.clone()), alphabet, prim, expand, root, cap })
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    /// Generating set, macros included.
    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn primitive_alphabet(&self) -> &Arc<Alphabet> {
        &self.prim
    }

    fn ctx(&self) -> Ctx {
        Ctx { cap: self.cap }
    }

    pub fn identity(&self) -> Elem {
        self.root.identity()
    }

    pub fn is_identity_elem(&self, e: &Elem) -> bool {
        self.root.is_identity(e)
    }

    /// Right multiplication by a generator (macros expand).
    pub fn mul_letter(&self, e: &mut Elem, l: Letter) -> Result<(), NfError> {
        let exp = &self.expand[l.index as usize];
        if l.inverse {
            exp.iter().rev().try_for_each(|m| self.root.mul(e, m.inv(), self.ctx()))
        } else {
            self.root.mul_letters(e, exp, self.ctx())
        }
    }

    pub fn mul_letters(&self, e: &mut Elem, ls: &[Letter]) -> Result<(), NfError> {
        ls.iter().try_for_each(|&l| self.mul_letter(e, l))
    }

    pub fn elem(&self, w: &Word) -> Result<Elem, NfError> {
        if !w.alphabet().same_as(&self.alphabet) {
            return Err(WordError::AlphabetMismatch.into());
        }
        let mut e = self.identity();
        self.mul_letters(&mut e, w.letters())?;
        Ok(e)
    }

    pub fn normal_form(&self, e: Elem) -> NormalForm {
        let trivial = self.root.is_identity(&e);
        NormalForm { elem: e, trivial }
    }

    pub fn normalize(&self, w: &Word) -> Result<NormalForm, NfError> {
        Ok(self.normal_form(self.elem(w)?))
    }

    pub fn parse(&self, text: &str) -> Result<Word, NfError> {
        Ok(Word::parse(&self.alphabet, text)?)
    }

    pub fn is_identity(&self, w: &Word) -> Result<bool, NfError> {
        Ok(self.normalize(w)?.trivial)
    }

    pub fn equal(&self, u: &Word, v: &Word) -> Result<bool, NfError> {
        self.is_identity(&u.concat(&v.invert())?)
    }

    /// A word over the primitive generators spelling the canonical form.
    pub fn primitive_word(&self, e: &Elem) -> Word {
        let mut out = Vec::new();
        self.root.word_of(e, &mut out);
        Word::reduce(&self.prim, out).expect("letters in range")
    }

    /// The canonical form rewritten over the full generating set.
    pub fn word_of(&self, e: &Elem) -> Word {
        let p = self.primitive_word(e);
        p.relabel(&self.alphabet, &|s| s.to_string()).expect("primitives are generators")
    }

    pub fn render(&self, nf: &NormalForm) -> String {
        self.primitive_word(&nf.elem).to_string()
    }

    /// Membership oracle for an edge subgroup of the whole group.
    pub fn oracle(&self, edge: &[String], emb: &Embedding) -> Result<Oracle, NfError> {
        let side = Side::compile(&self.root, emb, edge.len(), &self.prim)?;
        Ok(Oracle { edge: Alphabet::new(edge)?, side, tag: emb.tag })
    }

    /// The edge word of `w` when `w` lies in the subgroup.
    pub fn membership(&self, oracle: &Oracle, w: &Word) -> Result<Option<Word>, NfError> {
        let e = self.elem(w)?;
        let (edge_word, rep) = self.root.decompose(&e, &oracle.side, self.ctx())?;
        if !self.root.is_identity(&rep) {
            return Ok(None);
        }
        Ok(Some(Word::reduce(&oracle.edge, edge_word)?))
    }

    /// Evaluates an edge word through the oracle's embedding.
    pub fn oracle_image(&self, oracle: &Oracle, w: &Word) -> Result<Elem, NfError> {
        self.root.image(w.letters(), &oracle.side, self.ctx())
    }
}

pub fn normalize(spec: &GroupSpec, w: &Word) -> Result<NormalForm, NfError> {
    Group::new(spec)?.normalize(w)
}

pub fn is_identity(spec: &GroupSpec, w: &Word) -> Result<bool, NfError> {
    Group::new(spec)?.is_identity(w)
}

pub fn equal(spec: &GroupSpec, u: &Word, v: &Word) -> Result<bool, NfError> {
    Group::new(spec)?.equal(u, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tower::{build_b, build_g, build_g_phi, fbc_phi_spec, free_spec, lattice_spec, EdgePair};

    fn g(m: usize) -> Group {
        Group::new(&build_g_phi(m, 1).unwrap()).unwrap()
    }

    fn triv(grp: &Group, text: &str) -> bool {
        grp.is_identity(&grp.parse(text).unwrap()).unwrap()
    }

    #[test]
    fn spec_examples() {
        assert!(triv(&g(1), "x1 y1 x1^-1 y1^-1"));
        assert!(triv(&g(2), "s2^-1 a1 s2 b1^-1"));
        let g2 = g(2);
        let w = g2.parse("s1^2 s2").unwrap();
        assert!(!g2.is_identity(&w).unwrap());
        assert!(triv(&g(3), "s3^-1 s1 s3 s2^-1"));
        assert!(triv(&g(3), ""));
    }

    #[test]
    fn powers_of_stable_letters_are_independent() {
        let g3 = g(3);
        for p in -3i32..=3 {
            for q in -3i32..=3 {
                for (a, b) in [("s1", "s2"), ("s1", "s3"), ("s2", "s3")] {
                    let w = g3.parse(&format!("{a}^{p} {b}^{q}")).unwrap();
                    assert_eq!(g3.is_identity(&w).unwrap(), p == 0 && q == 0, "{a}^{p} {b}^{q}");
                }
            }
        }
    }

    #[test]
    fn all_relators_vanish() {
        for m in 1..=4 {
            let grp = g(m);
            for r in grp.spec().relator_words().unwrap() {
                assert!(grp.is_identity(&r).unwrap(), "G{m}: {r}");
            }
            let b = Group::new(&build_b(m, 1).unwrap()).unwrap();
            for r in b.spec().relator_words().unwrap() {
                assert!(b.is_identity(&r).unwrap(), "B{m}: {r}");
            }
        }
    }

    #[test]
    fn free_by_cyclic_relation_direction() {
        let h = Group::new(&fbc_phi_spec()).unwrap();
        assert!(triv(&h, "t a t^-1 a^-1 b^-1 a^-1"));
        assert!(!triv(&h, "t^-1 a t a^-1 b^-1 a^-1"));
        let e = h.elem(&h.parse("t^3 a t^-3").unwrap()).unwrap();
        assert_eq!(e, Elem::Fbc { t: 0, fiber: FreeEndoIter::phi_letters(3) });
    }

    struct FreeEndoIter;
    impl FreeEndoIter {
        fn phi_letters(n: u32) -> Vec<Letter> {
            let phi = crate::endo::FreeEndo::phi();
            phi.iterate(Letter::pos(0), n).unwrap().expand(1000).unwrap().into_letters()
        }
    }

    #[test]
    fn membership_examples() {
        // skew diagonal in F_x × F_y × F_z
        let p = GroupSpec::plain(
            "P",
            GroupNode::Product {
                factors: vec![GroupNode::free(["x1", "x2"]), GroupNode::free(["y1", "y2"]), GroupNode::free(["z1", "z2"])],
            },
        )
        .unwrap();
        let grp = Group::new(&p).unwrap();
        let edge = vec!["d1".to_string(), "d2".to_string()];
        let skew = Embedding { images: vec!["x1 y1^-1".into(), "x2 y2^-1".into()], tag: OracleTag::SkewDiagonalInProduct };
        let o = grp.oracle(&edge, &skew).unwrap();
        let w = grp.membership(&o, &grp.parse("x1 x2 y1^-1 y2^-1").unwrap()).unwrap().unwrap();
        assert_eq!(w.to_string(), "d1 d2");
        assert!(grp.membership(&o, &grp.parse("x1 x2 y2^-1 y1^-1").unwrap()).unwrap().is_none());
        let diag = Embedding { images: vec!["x1 z1".into(), "x2 z2".into()], tag: OracleTag::DiagonalInProduct };
        let o = grp.oracle(&edge, &diag).unwrap();
        assert!(grp.membership(&o, &grp.parse("x1 z2").unwrap()).unwrap().is_none());
        assert_eq!(grp.membership(&o, &grp.parse("z1 x1 x2 z2").unwrap()).unwrap().unwrap().to_string(), "d1 d2");
        assert!(grp.membership(&o, &grp.parse("z1 x1^-1 x2 z2").unwrap()).unwrap().is_none());

        let h = Group::new(&fbc_phi_spec()).unwrap();
        let ab = vec!["a".to_string(), "b".to_string()];
        let fiber = Embedding { images: ab.clone(), tag: OracleTag::FiberOfFreeByCyclic };
        let o = h.oracle(&ab, &fiber).unwrap();
        assert_eq!(h.membership(&o, &h.parse("t a t^-1").unwrap()).unwrap().unwrap().to_string(), "a b a");
        assert!(h.membership(&o, &h.parse("t a").unwrap()).unwrap().is_none());
    }

    #[test]
    fn tag_mismatch_rejected() {
        let h = Group::new(&fbc_phi_spec()).unwrap();
        let ab = vec!["a".to_string(), "b".to_string()];
        let wrong = Embedding { images: ab.clone(), tag: OracleTag::FreeFactor };
        assert!(matches!(h.oracle(&ab, &wrong), Err(NfError::TagMismatch { .. })));
    }

    #[test]
    fn opaque_base_refused() {
        let hn = GroupNode::Opaque { label: "snowflake".into(), generators: vec!["d1".into(), "d2".into(), "u".into()] };
        let emb = Embedding { images: vec!["d1".into(), "d2".into()], tag: OracleTag::FreeFactor };
        let spec = build_g(1, hn, emb, 2).unwrap();
        let w = spec.parse_word("s1").unwrap();
        assert!(matches!(normalize(&spec, &w), Err(NfError::UnsupportedBase(_))));
    }

    #[test]
    fn cap_gives_unknown() {
        let spec = fbc_phi_spec();
        let h = Group::with_cap(&spec, 50).unwrap();
        let w = h.parse("t^10 a t^-10").unwrap();
        assert_eq!(h.normalize(&w), Err(NfError::Unknown { cap: 50 }));
    }

    #[test]
    fn generators_are_distinct() {
        for m in 1..=3 {
            let grp = g(m);
            let mut seen = std::collections::HashSet::new();
            seen.insert(grp.normalize(&Word::identity(grp.alphabet())).unwrap().encode());
            for l in grp.alphabet().letters() {
                let w = Word::reduce(grp.alphabet(), [l]).unwrap();
                assert!(seen.insert(grp.normalize(&w).unwrap().encode()), "G{m}: {w}");
            }
        }
    }

    #[test]
    fn macro_expansion() {
        let g1 = g(1);
        assert!(g1.equal(&g1.parse("a1").unwrap(), &g1.parse("z1 x1").unwrap()).unwrap());
        assert!(g1.equal(&g1.parse("a1 b1^-1").unwrap(), &g1.parse("d1").unwrap()).unwrap());
    }

    #[test]
    fn stable_power_extraction() {
        let g4 = g(4);
        assert!(triv(&g4, "s4^-1 s1^3 s4 s3^-3"));
        // s3³ s4⁻¹ = s4⁻¹ s1³, with coset representative s2 in front
        assert!(triv(&g4, "s2 s3^3 s4^-1 s1^-3 s4 s2^-1"));
        assert!(!triv(&g4, "s2 s3^3 s4^-1 s1^-2 s4 s2^-1"));
        assert!(!triv(&g4, "s4^-1 s2 s4 s3^-1"));
    }

    #[test]
    fn ball_sizes() {
        // free group rank 2, radius 2 → 1 + 4 + 12
        let f2 = Group::new(&free_spec(2)).unwrap();
        let z2 = Group::new(&lattice_spec(2)).unwrap();
        let count = |grp: &Group| {
            let mut seen = std::collections::HashSet::new();
            for a in grp.alphabet().letters().into_iter().map(Some).chain([None]) {
                for b in grp.alphabet().letters().into_iter().map(Some).chain([None]) {
                    let w = Word::reduce(grp.alphabet(), a.into_iter().chain(b)).unwrap();
                    seen.insert(grp.normalize(&w).unwrap().encode());
                }
            }
            seen.len()
        };
        assert_eq!(count(&f2), 17);
        assert_eq!(count(&z2), 13);
    }

    #[test]
    fn hnn_edge_validation() {
        let bad = GroupSpec::plain(
            "bad",
            GroupNode::Hnn {
                base: Box::new(GroupNode::free(["a", "b"])),
                stable: "s".into(),
                edge: EdgePair {
                    edge: vec!["c".into()],
                    first: Embedding { images: vec!["a b".into()], tag: OracleTag::FreeFactor },
                    second: Embedding { images: vec!["a".into()], tag: OracleTag::FreeFactor },
                },
            },
        )
        .unwrap();
        assert!(matches!(Group::new(&bad), Err(NfError::Compile(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn word_in(grp: &Group, max: usize) -> impl Strategy<Value = Vec<Letter>> {
            let n = grp.alphabet().len() as u32;
            proptest::collection::vec((0..n, any::<bool>()), 0..max)
                .prop_map(|v| v.into_iter().map(|(i, s)| Letter { index: i, inverse: s }).collect())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(200))]

            #[test]
            fn inverse_cancels(ls in word_in(&g(3), 14)) {
                let grp = g(3);
                let w = Word::reduce(grp.alphabet(), ls).unwrap();
                let both = Word::reduce(grp.alphabet(), w.letters().iter().copied().chain(w.invert().letters().iter().copied())).unwrap();
                prop_assert!(grp.is_identity(&both).unwrap());
                let mut e = grp.elem(&w).unwrap();
                grp.mul_letters(&mut e, w.invert().letters()).unwrap();
                prop_assert!(grp.is_identity_elem(&e));
            }

            #[test]
            fn canonical_word_round_trips(ls in word_in(&g(2), 14)) {
                let grp = g(2);
                let w = Word::reduce(grp.alphabet(), ls).unwrap();
                let nf = grp.normalize(&w).unwrap();
                let back = grp.word_of(nf.elem());
                prop_assert_eq!(grp.normalize(&back).unwrap(), nf);
            }

            #[test]
            fn relator_insertion_is_invisible(ls in word_in(&g(2), 10), k in 0usize..30, pos in 0usize..10) {
                let grp = g(2);
                let rels = grp.spec().relator_words().unwrap();
                let r = &rels[k % rels.len()];
                let cut = pos.min(ls.len());
                let mut raw = ls[..cut].to_vec();
                raw.extend_from_slice(r.letters());
                raw.extend_from_slice(&ls[cut..]);
                let mut a = grp.identity();
                grp.mul_letters(&mut a, &raw).unwrap();
                let mut b = grp.identity();
                grp.mul_letters(&mut b, &ls).unwrap();
                prop_assert_eq!(a, b);
            }

            #[test]
            fn b_relator_insertion_is_invisible(ls in word_in(&Group::new(&build_b(2, 1).unwrap()).unwrap(), 10), k in 0usize..60, pos in 0usize..10) {
                let grp = Group::new(&build_b(2, 1).unwrap()).unwrap();
                let rels = grp.spec().relator_words().unwrap();
                let r = &rels[k % rels.len()];
                let cut = pos.min(ls.len());
                let mut raw = ls[..cut].to_vec();
                raw.extend_from_slice(r.letters());
                raw.extend_from_slice(&ls[cut..]);
                let mut a = grp.identity();
                grp.mul_letters(&mut a, &raw).unwrap();
                let mut b = grp.identity();
                grp.mul_letters(&mut b, &ls).unwrap();
                prop_assert_eq!(a, b);
            }
        }
    }
}
