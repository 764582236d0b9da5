//! The `pltower` command line.
//!
//! Every input and output is JSON with rationals written as `"p/q"` strings.
//! Exit codes: 0 on success (any verdict), 1 on i/o and other failures, 2 on
//! malformed input, 3 when a resource cap is hit, 4 when verification fails.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{group_orbitals, GroupSpec};
use crate::groups::{analyze, f_generators, AnalyzeConfig, Caps};
use crate::pl::{Interval, MapOrbital, PlMap};
use crate::rat::Rat;
use crate::svg::{maps_svg, tower_svg};
use crate::towers::{depth_lower_bound_with, derive_tower, TowerCertificate};
use crate::wreath::{build_family, obstruction_demo, wreath_with_Z, FamilyKind, ObstructionBounds};

#[derive(Parser, Debug)]
#[command(name = "pltower", version, about = "Exact orbital and tower geometry for subgroups of PL+(I)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Markdown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    W,
    G,
}

#[derive(clap::Args, Debug, Clone)]
pub struct Search {
    /// Longest word enumerated.
    #[arg(short = 'L', long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_word_length: u64,
    /// Push the certified tower to this height when a witness allows it.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub tower_height: Option<u64>,
    /// Caps as inline JSON or a path to a JSON file.
    #[arg(long)]
    pub caps: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run every search on a group and report a verdict.
    Analyze {
        group: PathBuf,
        #[command(flatten)]
        search: Search,
        /// Also draw the certified tower.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Orbitals of the group and of each generator.
    Orbitals { group: PathBuf },
    /// Certify the tallest tower found.
    Tower {
        group: PathBuf,
        #[command(flatten)]
        search: Search,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Replace a certified exemplary tower by its derived tower.
    DeriveTower {
        certificate: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Realize `G wr Z` for a group file, or emit a member of a family.
    BuildWreath {
        group: Option<PathBuf>,
        #[arg(long, value_enum, conflicts_with = "group")]
        family: Option<Family>,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        index: u64,
        /// Materialized copies, or the truncation of direct sums.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        copies: u64,
    },
    /// Standard generators of `F_n`.
    FGroup {
        #[arg(short, long, default_value_t = 2)]
        n: i64,
    },
    /// Run the improvement loop on a file with maps `alpha`, `beta`, `gamma`.
    Obstruction {
        scenario: PathBuf,
        #[arg(long, default_value_t = 32)]
        theta_bound: i64,
        #[arg(long, default_value_t = 32)]
        exponent_cap: i64,
    },
    /// Replay a certificate.
    Verify { certificate: PathBuf },
    /// Draw a map, a group or a certificate.
    Plot {
        input: PathBuf,
        #[arg(long)]
        svg: PathBuf,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_)
        | Error::InvalidMap(_)
        | Error::InvalidInterval(..)
        | Error::InvalidGroup(_)
        | Error::InvalidWord(_)
        | Error::Domain(_) => 2,
        Error::Resource { .. } => 3,
        Error::Mismatch { .. } | Error::Verification(_) => 4,
        _ => 1,
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn located(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn load_group(path: &Path) -> Result<GroupSpec<Rat>> {
    GroupSpec::from_json(&read(path)?).map_err(|e| located(path, e))
}

fn load_certificate(path: &Path) -> Result<TowerCertificate<Rat>> {
    TowerCertificate::from_json(&read(path)?).map_err(|e| located(path, e))
}

fn load_caps(arg: &Option<String>) -> Result<Caps> {
    let Some(arg) = arg else {
        return Ok(Caps::default());
    };
    let text = if arg.trim_start().starts_with('{') {
        arg.clone()
    } else {
        read(Path::new(arg))?
    };
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("caps: {e}")))
}

fn config(search: &Search) -> Result<AnalyzeConfig> {
    Ok(AnalyzeConfig {
        max_word_length: search.max_word_length as usize,
        tower_height: search.tower_height.map(|k| k as usize),
        caps: load_caps(&search.caps)?,
    })
}

fn render<T: Serialize>(value: &T, format: Format) -> String {
    let json = serde_json::to_string_pretty(value).expect("output serialization is infallible");
    match format {
        Format::Json => json + "\n",
        Format::Markdown => format!("```json\n{json}\n```\n"),
    }
}

#[derive(Serialize)]
struct OrbitalsOut {
    group: Vec<Interval<Rat>>,
    generators: Vec<(String, Vec<MapOrbital<Rat>>)>,
}

#[derive(Serialize)]
struct VerifyOut {
    verified: bool,
    height: usize,
    claims_exemplary: bool,
}

/// Runs one command and returns what it prints.
pub fn execute(cli: &Cli) -> Result<String> {
    let f = cli.format;
    match &cli.command {
        Command::Analyze { group, search, svg } => {
            let g = load_group(group)?;
            let cfg = config(search)?;
            if cfg.max_word_length > cfg.caps.max_word_length {
                return Err(Error::resource("word length", cfg.caps.max_word_length as u64));
            }
            let report = analyze(&g, &cfg);
            if let (Some(path), Some(cert)) = (svg, &report.certificate) {
                write_file(path, &tower_svg(&cert.verify()?))?;
            }
            Ok(match f {
                Format::Json => report.to_json() + "\n",
                Format::Markdown => report.to_markdown(),
            })
        }
        Command::Orbitals { group } => {
            let g = load_group(group)?;
            let out = OrbitalsOut {
                group: group_orbitals(&g),
                generators: g.names().iter().cloned().zip(g.maps().iter().map(|m| m.orbitals())).collect(),
            };
            Ok(render(&out, f))
        }
        Command::Tower { group, search, svg } => {
            let g = load_group(group)?;
            let cfg = config(search)?;
            if cfg.max_word_length > cfg.caps.max_word_length {
                return Err(Error::resource("word length", cfg.caps.max_word_length as u64));
            }
            let (_, cert) = depth_lower_bound_with(&g, cfg.max_word_length, cfg.tower_height, &cfg.caps)?;
            if let Some(path) = svg {
                write_file(path, &tower_svg(&cert.verify()?))?;
            }
            Ok(render(&cert, f))
        }
        Command::DeriveTower { certificate, svg } => {
            let cert = load_certificate(certificate)?;
            let derived = if cert.group.is_some() {
                cert.derive()?
            } else {
                derive_tower(&cert.verify()?)?
            };
            if let Some(path) = svg {
                write_file(path, &tower_svg(&derived.verify()?))?;
            }
            Ok(render(&derived, f))
        }
        Command::BuildWreath {
            group,
            family,
            index,
            copies,
        } => match (group, family) {
            (Some(path), _) => {
                let g = load_group(path)?;
                Ok(render(&wreath_with_Z(&g, &Interval::unit(), *copies as usize)?, f))
            }
            (None, Some(kind)) => {
                let kind = match kind {
                    Family::W => FamilyKind::W,
                    Family::G => FamilyKind::G,
                };
                let g: GroupSpec<Rat> = build_family(kind, *index as usize, *copies as usize)?;
                Ok(render(&g, f))
            }
            (None, None) => Err(Error::Parse("build-wreath needs a group file or --family".into())),
        },
        Command::FGroup { n } => Ok(render(&f_generators::<Rat>(*n)?, f)),
        Command::Obstruction {
            scenario,
            theta_bound,
            exponent_cap,
        } => {
            let g = load_group(scenario)?;
            let get = |name: &str| {
                g.generator(name)
                    .cloned()
                    .ok_or_else(|| Error::Parse(format!("scenario has no map named {name:?}")))
            };
            let bounds = ObstructionBounds {
                theta: *theta_bound,
                exponent_cap: *exponent_cap,
            };
            let out = obstruction_demo(&get("alpha")?, &get("beta")?, &get("gamma")?, &bounds)?;
            Ok(render(&out, f))
        }
        Command::Verify { certificate } => {
            let cert = load_certificate(certificate)?;
            let t = cert.verify()?;
            Ok(render(
                &VerifyOut {
                    verified: true,
                    height: t.height(),
                    claims_exemplary: cert.claims_exemplary,
                },
                f,
            ))
        }
        Command::Plot { input, svg } => {
            let text = read(input)?;
            let value: serde_json::Value = serde_json::from_str(&text)?;
            let drawing = if value.is_array() {
                let m: PlMap<Rat> = serde_json::from_value(value)?;
                maps_svg(&[("map".to_string(), m)])
            } else if value.get("steps").is_some() {
                tower_svg(&TowerCertificate::<Rat>::from_json(&text)?.verify()?)
            } else {
                let g = GroupSpec::<Rat>::from_json(&text)?;
                let named: Vec<(String, PlMap<Rat>)> = g.names().iter().cloned().zip(g.maps().iter().cloned()).collect();
                maps_svg(&named)
            };
            write_file(svg, &drawing)?;
            Ok(String::new())
        }
    }
}

/// Parses `args`, runs the command, and writes output and errors. Returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    match execute(&cli) {
        Ok(text) => {
            let _ = out.write_all(text.as_bytes());
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
