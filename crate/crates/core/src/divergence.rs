//! Avoidant distances in Cayley graphs: the distance between two vertices through the
//! complement of an open ball, and the divergence functions built from it.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, RwLock};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::metrics::{CayleyBall, MetricsError, Retractions};
use crate::normal_form::{Elem, Group, NfError};
use crate::tower::GroupNode;
use crate::words::{Letter, Word, WordError};

#[derive(Debug, Error)]
pub enum DivError {
    #[error("endpoint {which} lies inside the avoided ball")]
    EndpointInside { which: &'static str },
    #[error("sphere of radius {radius} is not enumerable within {cap} nodes")]
    Sphere { radius: usize, cap: usize },
    #[error("invalid probe: {0}")]
    Probe(String),
    #[error(transparent)]
    Nf(#[from] NfError),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Outcome of an avoidant-distance search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Avoidant {
    Finite(u64),
    /// The endpoints lie in different components of the complement.
    Infinite,
    /// Node cap reached or a vertex could not be placed relative to the ball.
    Unknown { explored: usize },
}

impl Avoidant {
    pub fn finite(self) -> Option<u64> {
        match self {
            Avoidant::Finite(d) => Some(d),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Caps {
    /// Vertices a single search may expand.
    pub search_nodes: usize,
    /// Nodes of the ball built on demand to decide membership.
    pub ball_nodes: usize,
    /// Sphere pairs evaluated before the stride sampler takes over.
    pub pairs: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { search_nodes: 200_000, ball_nodes: 2_000_000, pairs: 2_000 }
    }
}

#[derive(Clone, Debug)]
pub struct AvoidanceQuery {
    pub x: Word,
    pub y: Word,
    pub center: Word,
    /// The open ball `B(center, radius)` is removed.
    pub radius: u64,
}

impl AvoidanceQuery {
    pub fn around_identity(x: Word, y: Word, radius: u64) -> Self {
        let center = Word::identity(x.alphabet());
        AvoidanceQuery { x, y, center, radius }
    }
}

/// Search context: the group, its retractions, and a ball shared across queries.
pub struct Estimator {
    reg: Retractions,
    tree: bool,
    caps: Caps,
    ball: RwLock<Option<Arc<CayleyBall>>>,
}

impl Estimator {
    pub fn new(reg: Retractions, caps: Caps) -> Self {
        let spec = reg.group().spec();
        let tree = matches!(spec.root, GroupNode::Free { .. }) && spec.macros.is_empty();
        Estimator { reg, tree, caps, ball: RwLock::new(None) }
    }

    pub fn for_group(group: Arc<Group>, caps: Caps) -> Result<Self, DivError> {
        Ok(Self::new(Retractions::for_group(group)?, caps))
    }

    pub fn with_ball(self, ball: CayleyBall) -> Self {
        *self.ball.write().expect("lock") = Some(Arc::new(ball));
        self
    }

    pub fn group(&self) -> &Arc<Group> {
        self.reg.group()
    }

    pub fn retractions(&self) -> &Retractions {
        &self.reg
    }

    pub fn caps(&self) -> Caps {
        self.caps
    }

    /// A ball of radius at least `radius`, built once and shared.
    pub fn ball_at_least(&self, radius: usize) -> Result<Arc<CayleyBall>, DivError> {
        if let Some(b) = self.ball.read().expect("lock").as_ref() {
            if b.radius() >= radius {
                return Ok(b.clone());
            }
        }
        let mut slot = self.ball.write().expect("lock");
        if let Some(b) = slot.as_ref() {
            if b.radius() >= radius {
                return Ok(b.clone());
            }
        }
        let b = Arc::new(CayleyBall::build(self.group(), radius, self.caps.ball_nodes)?);
        *slot = Some(b.clone());
        Ok(b)
    }

    fn cached_ball(&self) -> Option<Arc<CayleyBall>> {
        self.ball.read().expect("lock").clone()
    }

    /// Whether `e` (already translated so the center is the identity) avoids `B(e, radius)`.
    fn outside(&self, e: &Elem, radius: u64) -> Result<Option<bool>, DivError> {
        if radius == 0 {
            return Ok(Some(true));
        }
        let group = self.group();
        if let Some(ball) = self.cached_ball() {
            if ball.radius() as u64 + 1 >= radius {
                return Ok(Some(ball.distance(group, e).is_none_or(|d| u64::from(d) >= radius)));
            }
        }
        if self.reg.lower_bound(&group.word_of(e))?.value >= radius {
            return Ok(Some(true));
        }
        match self.ball_at_least(radius as usize - 1) {
            Ok(ball) => Ok(Some(ball.distance(group, e).is_none_or(|d| u64::from(d) >= radius))),
            Err(DivError::Metrics(MetricsError::Partial { .. })) => Ok(None),
            Err(err) => Err(err),
        }
    }

    /// Lower bound on `d(v, target)` from the retractions.
    fn heuristic(&self, v: &Elem, target: &Word) -> Result<u64, DivError> {
        let w = self.group().word_of(v).invert().concat(target)?;
        Ok(self.reg.lower_bound(&w)?.value)
    }

    /// Shortest path from `x` to `y` in the complement of the open ball.
    pub fn avoidant_distance(&self, q: &AvoidanceQuery) -> Result<Avoidant, DivError> {
        let cinv = q.center.invert();
        let x = cinv.concat(&q.x)?;
        let y = cinv.concat(&q.y)?;
        if self.tree {
            return Ok(self.tree_distance(&x, &y, q.radius));
        }
        let group = self.group();
        let ex = group.elem(&x)?;
        let ey = group.elem(&y)?;
        for (which, e) in [("x", &ex), ("y", &ey)] {
            match self.outside(e, q.radius)? {
                Some(true) => {}
                Some(false) => return Err(DivError::EndpointInside { which }),
                None => return Ok(Avoidant::Unknown { explored: 0 }),
            }
        }
        let goal = ey.encode();
        let letters: Vec<Letter> = group.alphabet().letters();
        // Images of y⁻¹v under the top-level maps, updated one letter at a time.
        let maps: Vec<_> = self.reg.list().iter().filter(|r| r.level() >= self.reg.top()).collect();
        let start_images = {
            let shift = y.invert().concat(&x)?;
            maps.iter().map(|r| r.image(&shift)).collect::<Result<Vec<_>, _>>()?
        };
        let mut best: HashMap<Vec<u8>, u64> = HashMap::new();
        let mut nodes: Vec<(Elem, Vec<Elem>)> = Vec::new();
        let mut heap = BinaryHeap::new();
        best.insert(ex.encode(), 0);
        heap.push(Reverse((self.heuristic(&ex, &y)?, 0u64, 0usize)));
        nodes.push((ex, start_images));
        let mut expanded = 0usize;
        while let Some(Reverse((_, g, idx))) = heap.pop() {
            let (v, images) = nodes[idx].clone();
            let code = v.encode();
            if best.get(&code).is_some_and(|&b| b < g) {
                continue;
            }
            if code == goal {
                return Ok(Avoidant::Finite(g));
            }
            expanded += 1;
            if expanded > self.caps.search_nodes {
                return Ok(Avoidant::Unknown { explored: expanded });
            }
            for &l in &letters {
                let mut n = v.clone();
                group.mul_letter(&mut n, l)?;
                let key = n.encode();
                if best.get(&key).is_some_and(|&b| b <= g + 1) {
                    continue;
                }
                match self.outside(&n, q.radius)? {
                    Some(true) => {}
                    Some(false) => continue,
                    None => return Ok(Avoidant::Unknown { explored: expanded }),
                }
                let mut next = images.clone();
                let mut h = 0;
                for (r, e) in maps.iter().zip(next.iter_mut()) {
                    r.step(e, l)?;
                    h = h.max(r.measure(e).value);
                }
                best.insert(key, g + 1);
                heap.push(Reverse((g + 1 + h, g + 1, nodes.len())));
                nodes.push((n, next));
            }
        }
        Ok(Avoidant::Infinite)
    }

    /// In a tree the complement path exists iff the geodesic misses the ball.
    fn tree_distance(&self, x: &Word, y: &Word, radius: u64) -> Avoidant {
        let dx = x.len() as u64;
        let dy = y.len() as u64;
        let dxy = x.invert().concat(y).expect("same alphabet").len() as u64;
        // Distance from the center to the geodesic [x, y].
        let gromov = (dx + dy - dxy) / 2;
        if gromov >= radius {
            Avoidant::Finite(dxy)
        } else {
            Avoidant::Infinite
        }
    }

    /// `x` must avoid the ball too; checked before the tree rule applies.
    pub fn check_endpoints(&self, q: &AvoidanceQuery) -> Result<(), DivError> {
        let cinv = q.center.invert();
        for (which, w) in [("x", &q.x), ("y", &q.y)] {
            let e = self.group().elem(&cinv.concat(w)?)?;
            if self.outside(&e, q.radius)? == Some(false) {
                return Err(DivError::EndpointInside { which });
            }
        }
        Ok(())
    }

    /// [`Estimator::avoidant_distance`] after the endpoint check.
    pub fn query(&self, q: &AvoidanceQuery) -> Result<Avoidant, DivError> {
        self.check_endpoints(q)?;
        self.avoidant_distance(q)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PairResult {
    pub i: usize,
    pub j: usize,
    pub result: Avoidant,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaReport {
    pub r: usize,
    pub rho: f64,
    pub avoided_radius: u64,
    /// Supremum over pairs with a finite avoidant distance.
    pub value: Option<u64>,
    pub resolved_pairs: usize,
    pub infinite_pairs: usize,
    pub unknown_pairs: usize,
    pub sampled: bool,
    #[serde(skip)]
    pub pairs: Vec<PairResult>,
}

impl DeltaReport {
    pub const CSV_HEADER: &'static str = "r,rho,value,resolved_pairs,infinite_pairs,unknown_pairs";

    pub fn csv_row(&self) -> String {
        let value = self.value.map_or_else(|| "inf".to_string(), |v| v.to_string());
        format!(
            "{},{},{},{},{},{}",
            self.r, self.rho, value, self.resolved_pairs, self.infinite_pairs, self.unknown_pairs
        )
    }
}

pub fn delta_csv(rows: &[DeltaReport]) -> String {
    let mut s = String::from(DeltaReport::CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

/// Pairs of sphere indices; every `stride`-th pair of the sorted order once the cap is exceeded.
pub fn sphere_pairs(n: usize, cap: usize) -> (Vec<(usize, usize)>, bool) {
    let total = n * n.saturating_sub(1) / 2;
    let stride = if total > cap { total.div_ceil(cap) } else { 1 };
    let pairs = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .step_by(stride)
        .collect();
    (pairs, stride > 1)
}

/// `δ_ρ(r)`: sup of avoidant distances over sphere pairs, avoiding `B(e, ⌊ρr⌋)`.
pub fn delta_rho(est: &Estimator, r: usize, rho: f64) -> Result<DeltaReport, DivError> {
    let ball = est
        .ball_at_least(r)
        .map_err(|_| DivError::Sphere { radius: r, cap: est.caps().ball_nodes })?;
    let mut sphere: Vec<(Vec<u8>, Word)> = ball
        .sphere(r)
        .map(|i| (ball.nodes()[i].elem.encode(), ball.path_to(i)))
        .collect();
    sphere.sort_by(|a, b| a.0.cmp(&b.0));
    let radius = (rho * r as f64).floor() as u64;
    let (pairs, sampled) = sphere_pairs(sphere.len(), est.caps().pairs);
    let results = pairs
        .par_iter()
        .map(|&(i, j)| {
            let q = AvoidanceQuery::around_identity(sphere[i].1.clone(), sphere[j].1.clone(), radius);
            Ok(PairResult { i, j, result: est.avoidant_distance(&q)? })
        })
        .collect::<Result<Vec<_>, DivError>>()?;
    let mut report = DeltaReport {
        r,
        rho,
        avoided_radius: radius,
        value: None,
        resolved_pairs: 0,
        infinite_pairs: 0,
        unknown_pairs: 0,
        sampled,
        pairs: Vec::new(),
    };
    for p in &results {
        match p.result {
            Avoidant::Finite(d) => {
                report.resolved_pairs += 1;
                report.value = Some(report.value.map_or(d, |v| v.max(d)));
            }
            Avoidant::Infinite => report.infinite_pairs += 1,
            Avoidant::Unknown { .. } => report.unknown_pairs += 1,
        }
    }
    report.pairs = results;
    Ok(report)
}

/// Avoidant distance between `c^{-k}` and `c^k`, `k = ⌈r / |c|⌉`, around `B(e, r)`.
pub fn cyclic_divergence(est: &Estimator, c: &Word, r: u64) -> Result<Avoidant, DivError> {
    if c.is_empty() {
        return Err(DivError::Probe("empty cyclic generator".into()));
    }
    let k = r.div_ceil(c.len() as u64).max(1);
    let y = c.pow(k as i64);
    let x = y.invert();
    est.query(&AvoidanceQuery::around_identity(x, y, r))
}

/// A `k`-corner at the identity, cut at `s₁^s s_k^t` on the `(1,k)`-ray and `s_k^p` on the `k`-ray.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CornerProbe {
    pub k: usize,
    pub r: u64,
    pub s: i64,
    pub t: i64,
    pub p: i64,
}

impl CornerProbe {
    pub fn endpoints(&self, group: &Group) -> Result<(Word, Word), DivError> {
        let a = group.alphabet();
        let s1 = Word::generator(a, "s1")?;
        let sk = Word::generator(a, &format!("s{}", self.k))?;
        let x = s1.pow(self.s).concat(&sk.pow(self.t))?;
        let y = sk.pow(self.p);
        Ok((x, y))
    }
}

pub fn corner_probe(est: &Estimator, probe: &CornerProbe) -> Result<Avoidant, DivError> {
    let top = est.retractions().top();
    if probe.k < 2 || probe.k > top {
        return Err(DivError::Probe(format!("k = {} outside 2..={top}", probe.k)));
    }
    let (x, y) = probe.endpoints(est.group())?;
    est.query(&AvoidanceQuery::around_identity(x, y, probe.r))
}
