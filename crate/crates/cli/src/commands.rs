use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use divtower::certificates::{derived_constants, phi_certificates, verify_certificate};
use divtower::divergence::{cyclic_divergence, delta_csv, delta_rho, Avoidant, DeltaReport, DivError, Estimator};
use divtower::metrics::{fiber_oracle, DistortionTable, MetricsError};
use divtower::tower::{build_b, build_g_phi, free_spec, inclusion_map, lattice_spec, GroupNode};
use divtower::{Group, GroupSpec, NfError, PathWitness, Word, WitnessKit};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{Format, RunConfig, TowerFamily};
use crate::output::Output;
use crate::svg::{line_chart, Series};

/// Process exit status shared by every command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    /// Trivial word, all checks passed, or complete output.
    Pass = 0,
    /// Nontrivial word or a failed check.
    Fail = 1,
    /// A cap was hit; outputs are partial.
    Unknown = 2,
}

impl Status {
    fn worst(self, other: Status) -> Status {
        if (other as u8) > (self as u8) {
            other
        } else {
            self
        }
    }
}

pub struct Ctx {
    pub cfg: RunConfig,
    pub out: Output,
}

fn config_json(cfg: &RunConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config serializes")
}

pub fn load_spec(cfg: &RunConfig, spec: Option<&Path>) -> Result<GroupSpec> {
    if let Some(path) = spec {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return GroupSpec::from_json(&text).with_context(|| format!("loading spec {}", path.display()));
    }
    let t = &cfg.tower;
    Ok(match t.family {
        TowerFamily::G => build_g_phi(t.m, t.power)?,
        TowerFamily::B => build_b(t.m, t.power)?,
    })
}

fn group_with_cap(cfg: &RunConfig, spec: &GroupSpec) -> Result<Arc<Group>> {
    Ok(Arc::new(Group::with_cap(spec, cfg.caps.word_cap)?))
}

pub fn tower(ctx: &Ctx, spec: &GroupSpec) -> Result<Status> {
    let name = format!("{}.spec.json", spec.name);
    ctx.out.write(&name, &spec.to_json())?;
    println!(
        "{}: {} generators ({} macros), {} relators",
        spec.name,
        spec.generators.len(),
        spec.macros.len(),
        spec.relators.len()
    );
    Ok(Status::Pass)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn nf(ctx: &Ctx, spec: &GroupSpec, text: &str) -> Result<Status> {
    let group = group_with_cap(&ctx.cfg, spec)?;
    let word = group.parse(text)?;
    match group.normalize(&word) {
        Ok(nf) => {
            println!("group: {}", spec.name);
            println!("normal form: {}", group.render(&nf));
            println!("encoding: {}", hex(&nf.encode()));
            println!("trivial: {}", nf.is_trivial());
            Ok(if nf.is_trivial() { Status::Pass } else { Status::Fail })
        }
        Err(NfError::Unknown { cap }) => {
            println!("trivial: unknown (word cap {cap} exceeded)");
            Ok(Status::Unknown)
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Ambient {
    /// Fiber `F(a, b)` inside `F(a, b) ⋊ ⟨t⟩` with monodromy `φⁿ`.
    FbcPhi,
}

pub fn dist(ctx: &Ctx, ambient: Ambient, n: usize) -> Result<Status> {
    let Ambient::FbcPhi = ambient;
    let power = ctx.cfg.tower.power;
    let spec = GroupSpec::plain(format!("fbc-phi{power}"), GroupNode::phi_fbc(["a", "b"], "t", power)?)?;
    let group = Group::new(&spec)?;
    let oracle = fiber_oracle(&group)?;
    let (table, status) = match DistortionTable::compute(&group, &oracle, n, ctx.cfg.caps.node_cap) {
        Ok(t) => (t, Status::Pass),
        Err(MetricsError::Partial { ball, completed, cap }) => {
            eprintln!("node cap {cap} reached: table complete to n = {completed}");
            (DistortionTable::from_ball(&group, &oracle, &ball)?, Status::Unknown)
        }
        Err(e) => return Err(e.into()),
    };
    let stem = format!("dist_{}", spec.name);
    print!("{}", table.to_csv());
    ctx.out.write_if(Format::Csv, &format!("{stem}.csv"), &table.to_csv())?;
    let complete = table.raw.len() - 1;
    ctx.out.write_json(
        &format!("{stem}.json"),
        &json!({
            "ambient": spec.name,
            "power": power,
            "n_requested": n,
            "n_complete": complete,
            "partial": status == Status::Unknown,
            "raw": table.raw,
            "normalized": table.normalized,
            "config": config_json(&ctx.cfg),
        }),
    )?;
    if ctx.out.wants(Format::Svg) {
        let pts = |v: &[u64]| v.iter().enumerate().map(|(i, &d)| (i as f64, d as f64)).collect();
        let svg = line_chart(
            &format!("Fiber distortion in {}", spec.name),
            "n",
            "Dist(n)",
            &[
                Series { label: "Dist(n)".into(), points: pts(&table.raw) },
                Series { label: "Dist(n) + n".into(), points: pts(&table.normalized) },
            ],
        );
        ctx.out.write(&format!("{stem}.svg"), &svg)?;
    }
    Ok(status)
}

pub fn cert(ctx: &Ctx, n_max: u32, table_n: usize, surrogate: bool) -> Result<Status> {
    let c = ctx.cfg.certificates.c;
    let seq = phi_certificates(n_max)?;
    let table = if table_n > 0 {
        let spec = divtower::tower::fbc_phi_spec();
        let group = Group::new(&spec)?;
        let oracle = fiber_oracle(&group)?;
        match DistortionTable::compute(&group, &oracle, table_n, ctx.cfg.caps.node_cap) {
            Ok(t) => Some(t),
            Err(MetricsError::Partial { ball, completed, .. }) => {
                eprintln!("distortion table truncated at n = {completed}");
                Some(DistortionTable::from_ball(&group, &oracle, &ball)?)
            }
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };
    let report = verify_certificate(&seq, c, table.as_ref(), surrogate)?;
    let derived = derived_constants(&seq, &report).ok();
    println!("family phi, n = 1..={n_max}, C = {c}");
    println!("condition 1 (growth): {}", report.condition1);
    println!("condition 2 (ratio): {}", report.condition2);
    println!("condition 3 (distortion): {}", report.condition3);
    println!("palindromic: {}", report.palindromic);
    if let Some(d) = derived {
        println!("D = {}, r0 = {}", d.d, d.r0);
    }
    let stem = format!("cert_phi_n{n_max}");
    ctx.out.write_json(
        &format!("{stem}.json"),
        &json!({
            "family": "phi",
            "n_max": n_max,
            "constant": c,
            "table_n": table.as_ref().map(|t| t.raw.len() - 1),
            "surrogate": surrogate,
            "passed": report.passed(),
            "derived": derived,
            "report": report,
            "sequence": seq,
            "config": config_json(&ctx.cfg),
        }),
    )?;
    if ctx.out.wants(Format::Csv) {
        let mut csv = String::from("index,r_length,t_bound,growth,ratio,distortion,tier,palindrome\n");
        for (c, r) in seq.elements.iter().zip(&report.per_index) {
            let pal = r.palindrome.map_or_else(String::new, |p| p.to_string());
            csv.push_str(&format!(
                "{},{},{},{},{},{},{:?},{}\n",
                c.index, c.r_length, c.t_bound, r.growth, r.ratio, r.distortion, r.tier, pal
            ));
        }
        ctx.out.write(&format!("{stem}.csv"), &csv)?;
    }
    if ctx.out.wants(Format::Svg) {
        let r_len = seq.r_lengths_f64();
        let svg = line_chart(
            "Certificate lengths",
            "index",
            "log2 length",
            &[
                Series {
                    label: "|a_n|_R".into(),
                    points: seq.elements.iter().zip(&r_len).map(|(c, &l)| (c.index as f64, l.log2())).collect(),
                },
                Series {
                    label: "|a_n|_T bound".into(),
                    points: seq.elements.iter().map(|c| (c.index as f64, (c.t_bound as f64).log2())).collect(),
                },
            ],
        );
        ctx.out.write(&format!("{stem}.svg"), &svg)?;
    }
    Ok(if report.passed() { Status::Pass } else { Status::Fail })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DivGroup {
    /// The configured tower (or `--spec`).
    Tower,
    Free,
    Lattice,
}

pub struct DivArgs<'a> {
    pub group: DivGroup,
    pub rank: usize,
    pub r_max: usize,
    pub rhos: &'a [f64],
    pub cyclic: Option<&'a str>,
}

pub fn div(ctx: &Ctx, tower: &GroupSpec, args: &DivArgs) -> Result<Status> {
    let spec = match args.group {
        DivGroup::Tower => tower.clone(),
        DivGroup::Free => free_spec(args.rank),
        DivGroup::Lattice => lattice_spec(args.rank),
    };
    let group = group_with_cap(&ctx.cfg, &spec)?;
    let est = Estimator::for_group(group.clone(), ctx.cfg.search_caps())?;
    if let Some(text) = args.cyclic {
        return div_cyclic(ctx, &est, &spec.name, &group.parse(text)?, args.r_max);
    }
    let mut status = Status::Pass;
    let mut rows: Vec<DeltaReport> = Vec::new();
    'rho: for &rho in args.rhos {
        for r in 1..=args.r_max {
            match delta_rho(&est, r, rho) {
                Ok(rep) => {
                    if rep.unknown_pairs > 0 {
                        status = status.worst(Status::Unknown);
                    }
                    rows.push(rep);
                }
                Err(DivError::Sphere { radius, cap }) => {
                    eprintln!("sphere of radius {radius} exceeds the node cap {cap}; stopping at rho = {rho}");
                    status = status.worst(Status::Unknown);
                    continue 'rho;
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    let csv = delta_csv(&rows);
    print!("{csv}");
    let stem = format!("div_{}", spec.name);
    ctx.out.write_if(Format::Csv, &format!("{stem}.csv"), &csv)?;
    ctx.out.write_json(
        &format!("{stem}.json"),
        &json!({
            "group": spec.name,
            "partial": status == Status::Unknown,
            "rows": rows,
            "config": config_json(&ctx.cfg),
        }),
    )?;
    if ctx.out.wants(Format::Svg) {
        let series: Vec<Series> = args
            .rhos
            .iter()
            .map(|&rho| Series {
                label: format!("rho = {rho}"),
                points: rows
                    .iter()
                    .filter(|row| row.rho == rho)
                    .filter_map(|row| row.value.map(|v| (row.r as f64, v as f64)))
                    .collect(),
            })
            .collect();
        let svg = line_chart(&format!("Divergence in {}", spec.name), "r", "delta_rho(r)", &series);
        ctx.out.write(&format!("{stem}.svg"), &svg)?;
    }
    Ok(status)
}

fn avoidant_cell(a: Avoidant) -> String {
    match a {
        Avoidant::Finite(d) => d.to_string(),
        Avoidant::Infinite => "inf".into(),
        Avoidant::Unknown { .. } => "unknown".into(),
    }
}

fn div_cyclic(ctx: &Ctx, est: &Estimator, name: &str, c: &Word, r_max: usize) -> Result<Status> {
    let mut status = Status::Pass;
    let mut csv = String::from("r,value\n");
    let mut points = Vec::new();
    let mut rows = Vec::new();
    for r in 1..=r_max as u64 {
        let a = cyclic_divergence(est, c, r)?;
        if let Avoidant::Unknown { .. } = a {
            status = Status::Unknown;
        }
        if let Some(d) = a.finite() {
            points.push((r as f64, d as f64));
        }
        csv.push_str(&format!("{r},{}\n", avoidant_cell(a)));
        rows.push(json!({ "r": r, "result": a }));
    }
    print!("{csv}");
    let stem = format!("cyclic_{name}");
    ctx.out.write_if(Format::Csv, &format!("{stem}.csv"), &csv)?;
    ctx.out.write_json(
        &format!("{stem}.json"),
        &json!({ "group": name, "element": c.to_string(), "rows": rows, "config": config_json(&ctx.cfg) }),
    )?;
    if ctx.out.wants(Format::Svg) {
        let svg = line_chart(
            &format!("Divergence of {c} in {name}"),
            "r",
            "avoidant distance",
            &[Series { label: c.to_string(), points }],
        );
        ctx.out.write(&format!("{stem}.svg"), &svg)?;
    }
    Ok(status)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum WitnessKind {
    /// `s₁^{-r} → s₁^r` around `B(e, r)` through an `a₁` detour.
    S1Detour,
    /// Across a coset of `H` between the `a` and `b` images of a certificate.
    FiberCrossing,
    /// `s₁^{±r} → s₂^{±r}` in `G₂`.
    CornerG2,
    /// `s₁^{2r} → s₂^± s₁^{2r}` in `G₂`.
    ShiftS2,
    /// `s₁^{2r} → s₃^± s₁^{2r}` in `G₃`.
    ShiftS3,
    /// `s₁^{±r} → s₃^{±r}` in `G₃`.
    CornerG3,
    /// Detour of an `s₁`-segment around a ball centred on it.
    Modification,
}

impl WitnessKind {
    fn level(self) -> usize {
        match self {
            WitnessKind::S1Detour | WitnessKind::Modification => 1,
            WitnessKind::FiberCrossing | WitnessKind::CornerG2 | WitnessKind::ShiftS2 => 2,
            WitnessKind::ShiftS3 | WitnessKind::CornerG3 => 3,
        }
    }

    fn name(self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }
}

pub fn witness(ctx: &Ctx, kind: WitnessKind, r: u64, sign1: i8, sign2: i8) -> Result<Status> {
    let t = &ctx.cfg.tower;
    if t.family != TowerFamily::G || t.power != 1 {
        bail!("witnesses are built in the G tower with monodromy power 1");
    }
    let kit = WitnessKit::new(t.m.max(kind.level()))?;
    let n = r as i64;
    let w: PathWitness = match kind {
        WitnessKind::S1Detour => kit.witness_s1_detour(n * i64::from(sign1))?,
        WitnessKind::FiberCrossing => kit.witness_fiber_crossing(r)?.1,
        WitnessKind::CornerG2 => kit.witness_corner_g2(r, sign1, sign2)?,
        WitnessKind::ShiftS2 => kit.witness_shift_s2(n * i64::from(sign1), sign2)?,
        WitnessKind::ShiftS3 => kit.witness_shift_s3(n * i64::from(sign1), sign2)?,
        WitnessKind::CornerG3 => kit.witness_corner_g3(r, sign1, sign2)?,
        WitnessKind::Modification => {
            let x = kit.group.parse(&format!("s1^-{r}"))?;
            let z = Word::identity(kit.group.alphabet());
            kit.witness_avoidant_modification(&x, 2 * n, &z, None)?
        }
    };
    let rep = kit.verify(&w)?;
    println!("{} in G{}: {} edges, bound {:.1}", w.kind, kit.level(), w.len(), w.bound);
    println!(
        "endpoints: {}, avoidance: {}, length: {}, unresolved vertices: {}",
        rep.endpoint_ok,
        rep.avoidance_ok,
        rep.length_ok,
        rep.unresolved.len()
    );
    let mut doc = w.to_json(Some(&rep));
    doc["config"] = config_json(&ctx.cfg);
    ctx.out.write_json(&format!("witness_{}_r{r}.json", kind.name()), &doc)?;
    Ok(if rep.passed() { Status::Pass } else { Status::Fail })
}

pub fn embed(ctx: &Ctx, samples: usize, radius: usize) -> Result<Status> {
    let (m, power, seed) = (ctx.cfg.tower.m, ctx.cfg.tower.power, ctx.cfg.output.seed);
    let g = build_g_phi(m, power)?;
    let b = build_b(m, power)?;
    let inc = inclusion_map(&g, &b)?;
    let gg = group_with_cap(&ctx.cfg, &g)?;
    let bg = group_with_cap(&ctx.cfg, &b)?;
    let mut status = Status::Pass;
    let mut relator_failures = Vec::new();
    let relators = g.relator_words()?;
    for r in &relators {
        let img = inc.apply(r)?;
        match bg.is_identity(&img) {
            Ok(true) => {}
            Ok(false) => relator_failures.push(r.to_string()),
            Err(NfError::Unknown { .. }) => status = status.worst(Status::Unknown),
            Err(e) => return Err(e.into()),
        }
    }
    let letters = gg.alphabet().letters();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counterexamples = Vec::new();
    let mut drawn = 0;
    let mut kept = 0;
    while kept < samples {
        drawn += 1;
        if drawn > 100 * samples.max(1) {
            bail!("could not draw {samples} nontrivial elements of radius {radius}");
        }
        let len = rng.gen_range(1..=radius.max(1));
        let w = Word::reduce(gg.alphabet(), (0..len).map(|_| letters[rng.gen_range(0..letters.len())]))?;
        if w.is_empty() || gg.is_identity(&w)? {
            continue;
        }
        kept += 1;
        match bg.is_identity(&inc.apply(&w)?) {
            Ok(false) => {}
            Ok(true) => counterexamples.push(w.to_string()),
            Err(NfError::Unknown { .. }) => status = status.worst(Status::Unknown),
            Err(e) => return Err(e.into()),
        }
    }
    if !relator_failures.is_empty() || !counterexamples.is_empty() {
        status = Status::Fail;
    }
    println!("G{m} -> B{m}: {} relators, {} failures", relators.len(), relator_failures.len());
    println!("{kept} samples (seed {seed}), {} counterexamples", counterexamples.len());
    ctx.out.write_json(
        &format!("embed_m{m}.json"),
        &json!({
            "m": m,
            "power": power,
            "seed": seed,
            "radius": radius,
            "relators": relators.len(),
            "relator_failures": relator_failures,
            "samples": kept,
            "counterexamples": counterexamples,
            "status": format!("{status:?}").to_lowercase(),
            "config": config_json(&ctx.cfg),
        }),
    )?;
    Ok(status)
}
