use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod output;
mod svg;

use commands::{Ambient, Ctx, DivArgs, DivGroup, Status, WitnessKind};
use config::{Format, RunConfig, TowerFamily};
use output::Output;

/// Exit code for bad arguments or unreadable input.
const EXIT_ERROR: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "divtower", version, about = "Word problem, distortion, certificates, witnesses and divergence for G/B towers")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "DIVTOWER_OUT")]
    out: Option<PathBuf>,
    /// Output formats, comma separated.
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    format: Option<Vec<Format>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct TowerArgs {
    #[arg(long, value_enum, ignore_case = true)]
    family: Option<TowerFamily>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    /// Power n of the monodromy φⁿ.
    #[arg(long)]
    power: Option<u32>,
    /// Group spec JSON written by `tower`; replaces the tower flags.
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a tower and write its spec JSON.
    Tower {
        #[command(flatten)]
        tower: TowerArgs,
    },
    /// Normal form of a word; exit 0 trivial, 1 nontrivial, 2 unknown.
    Nf {
        #[command(flatten)]
        tower: TowerArgs,
        word: String,
    },
    /// Fiber distortion table by exhaustive enumeration.
    Dist {
        #[arg(long, value_enum, default_value = "fbc-phi")]
        ambient: Ambient,
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long)]
        power: Option<u32>,
        #[arg(long)]
        node_cap: Option<usize>,
    },
    /// Verify the certificate sequence φⁿ(a).
    Cert {
        #[arg(long, default_value = "phi")]
        family: String,
        #[arg(long, default_value_t = 20)]
        nmax: u32,
        #[arg(long = "C")]
        c: Option<f64>,
        /// Radius of the exhaustive distortion table used for exact checks; 0 disables it.
        #[arg(long, default_value_t = 8)]
        table_n: usize,
        /// Leave indices past the table unchecked instead of using the exponential surrogate.
        #[arg(long)]
        no_surrogate: bool,
    },
    /// Divergence estimates δ_ρ(r) or the divergence of a cyclic subgroup.
    Div {
        #[command(flatten)]
        tower: TowerArgs,
        #[arg(long, value_enum, default_value = "tower")]
        group: DivGroup,
        /// Rank for the free and lattice groups.
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long)]
        rmax: Option<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1")]
        rho: Vec<f64>,
        /// Estimate the avoidant distance between c^-k and c^k instead.
        #[arg(long)]
        cyclic: Option<String>,
        #[arg(long)]
        search_nodes: Option<usize>,
    },
    /// Build and verify an avoidant path witness.
    Witness {
        #[arg(long, value_enum)]
        kind: WitnessKind,
        #[arg(long, default_value_t = 9)]
        r: u64,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        sign1: i8,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        sign2: i8,
        #[arg(long)]
        m: Option<usize>,
    },
    /// Check the inclusion G_m -> B_m on relators and random elements.
    Embed {
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Word length of the random elements.
        #[arg(long, default_value_t = 3)]
        radius: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        power: Option<u32>,
    },
    /// Print the effective configuration as TOML.
    Config,
}

impl TowerArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(f) = self.family {
            cfg.tower.family = f;
        }
        if let Some(m) = self.m {
            cfg.tower.m = m;
        }
        if let Some(p) = self.p {
            cfg.tower.p = p;
        }
        if let Some(n) = self.power {
            cfg.tower.power = n;
        }
    }
}

fn sign(v: i8) -> Result<i8> {
    match v {
        1 | -1 => Ok(v),
        _ => anyhow::bail!("signs must be 1 or -1, got {v}"),
    }
}

fn run(cli: Cli) -> Result<Status> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(dir) = cli.out {
        cfg.output.dir = dir;
    }
    if let Some(f) = cli.format {
        cfg.output.formats = f;
    }
    let mut spec_path = None;
    match &cli.command {
        Command::Tower { tower } | Command::Nf { tower, .. } | Command::Div { tower, .. } => {
            tower.apply(&mut cfg);
            spec_path = tower.spec.clone();
        }
        Command::Dist { power, node_cap, .. } => {
            cfg.tower.power = power.unwrap_or(cfg.tower.power);
            cfg.caps.node_cap = node_cap.unwrap_or(cfg.caps.node_cap);
        }
        Command::Config => {}
        Command::Cert { c, .. } => cfg.certificates.c = c.unwrap_or(cfg.certificates.c),
        Command::Witness { m, .. } => cfg.tower.m = m.unwrap_or(cfg.tower.m),
        Command::Embed { m, seed, power, .. } => {
            cfg.tower.m = m.unwrap_or(cfg.tower.m);
            cfg.output.seed = seed.unwrap_or(cfg.output.seed);
            cfg.tower.power = power.unwrap_or(cfg.tower.power);
        }
    }
    if let Command::Div { search_nodes: Some(s), .. } = &cli.command {
        cfg.caps.search_nodes = *s;
    }
    cfg.validate()?;
    if let Command::Config = cli.command {
        print!("{}", cfg.to_toml());
        return Ok(Status::Pass);
    }
    let out = Output::new(cfg.output.dir.clone(), cfg.output.formats.clone())?;
    let ctx = Ctx { cfg, out };
    match cli.command {
        Command::Tower { .. } => commands::tower(&ctx, &commands::load_spec(&ctx.cfg, spec_path.as_deref())?),
        Command::Nf { word, .. } => commands::nf(&ctx, &commands::load_spec(&ctx.cfg, spec_path.as_deref())?, &word),
        Command::Dist { ambient, n, .. } => commands::dist(&ctx, ambient, n),
        Command::Cert { family, nmax, table_n, no_surrogate, .. } => {
            if family != "phi" {
                anyhow::bail!("unknown certificate family `{family}`; supported: phi");
            }
            commands::cert(&ctx, nmax, table_n, !no_surrogate)
        }
        Command::Div { group, rank, rmax, rho, cyclic, .. } => {
            let spec = commands::load_spec(&ctx.cfg, spec_path.as_deref())?;
            let args = DivArgs {
                group,
                rank,
                r_max: rmax.unwrap_or(ctx.cfg.caps.ball_radius),
                rhos: &rho,
                cyclic: cyclic.as_deref(),
            };
            commands::div(&ctx, &spec, &args)
        }
        Command::Witness { kind, r, sign1, sign2, .. } => commands::witness(&ctx, kind, r, sign(sign1)?, sign(sign2)?),
        Command::Embed { samples, radius, .. } => commands::embed(&ctx, samples, radius),
        Command::Config => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { 0 });
        }
    };
    match run(cli) {
        Ok(status) => ExitCode::from(status as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
