//! The three subcommands.

use std::path::{Path, PathBuf};

use isospec::families::{
    build_potential, missing_state_1, missing_states_2, predicted_spectrum, AppliedDomain, MissingState, Spectrum,
};
use isospec::hydrogen::{coulomb_potential, energy_level};
use isospec::verify::{compare_spectrum, discretize, eigenvector, lowest_eigenvalues, SpectrumReport};
use isospec::{FamilySpec, GridFunction, PartnerPotential, RadialGrid, SeedSolution};
use serde::Serialize;

use crate::config::{self, default_grid, family_from_flags, resolve_grid, GridOverride, PartialConfig};
use crate::output::{csv_table, format_number, write_json, write_text};
use crate::{CliError, CommandKind, FamilyArgs, FigureArgs, Format, Outcome, Preset, RunConfig};

pub const DEFAULT_LEVELS: usize = 3;
pub const DEFAULT_TOL: f64 = 5e-4;

/// λ values of the first figure preset (all in `(1, inf)`).
pub const FIG1_LAMBDAS: [f64; 4] = [1.5, 2.0, 5.0, 20.0];

const TOOL: &str = concat!("isospec ", env!("CARGO_PKG_VERSION"));

/// Config file, then flags, then defaults; validated before returning.
pub fn resolve(kind: CommandKind, args: &FamilyArgs) -> Result<RunConfig, CliError> {
    let partial = match &args.config {
        Some(path) => PartialConfig::load(path)?,
        None => PartialConfig::default(),
    };
    let family = family_from_flags(args.l, args.k, args.m, &args.ks, args.lambda, &args.lambdas)?
        .or(partial.family)
        .ok_or_else(|| CliError::Domain("no family given: pass --l with --k/--ks and --lambda/--lambdas, or --config".into()))?;
    let flag_grid = GridOverride {
        r_min: args.grid.rmin,
        r_max: args.grid.rmax,
        n_points: args.grid.n,
    };
    let grid = resolve_grid(default_grid()?, &[partial.grid.unwrap_or_default(), flag_grid])?;
    let config = RunConfig {
        command: kind,
        family,
        grid,
        levels: args.levels.or(partial.levels).unwrap_or(DEFAULT_LEVELS),
        tol: args.tol.or(partial.tol).unwrap_or(DEFAULT_TOL),
        output_path: args.out.clone().or(partial.output_path).unwrap_or_else(|| match kind {
            CommandKind::Gen => PathBuf::from("isospec-gen"),
            CommandKind::Verify => PathBuf::from("spectrum_report.json"),
            CommandKind::Figure => PathBuf::from("isospec-figure"),
        }),
        format: args.format.or(partial.format).unwrap_or(match kind {
            CommandKind::Verify => Format::Json,
            _ => Format::Csv,
        }),
    };
    config::validate(&config)?;
    Ok(config)
}

#[derive(Debug, Serialize)]
struct MissingEntry {
    k: i32,
    energy: f64,
    file: String,
    method: &'static str,
    nodes: usize,
    numeric_constant: Option<f64>,
    closed_form_constant: Option<f64>,
    constant_ratio: Option<f64>,
}

#[derive(Debug, Serialize)]
struct GenManifest<'a> {
    tool: &'static str,
    config: &'a RunConfig,
    l_out: u32,
    lambda_domains: Vec<AppliedDomain>,
    predicted: Spectrum,
    files: Vec<String>,
    missing_states: Vec<MissingEntry>,
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn write_series(dir: &Path, stem: &str, format: Format, names: &[&str], columns: &[&[f64]]) -> Result<PathBuf, CliError> {
    match format {
        Format::Csv => write_text(&dir.join(format!("{stem}.csv")), &csv_table(names, columns)),
        Format::Json => {
            let map: serde_json::Map<String, serde_json::Value> = names
                .iter()
                .zip(columns)
                .map(|(n, c)| (n.to_string(), serde_json::json!(c)))
                .collect();
            write_json(&dir.join(format!("{stem}.json")), &map)
        }
    }
}

/// Seed, normalized state, method name and the closed-form diagnostics.
type StateRow = (SeedSolution, GridFunction, &'static str, Option<MissingState>);

/// Closed-form missing states for orders 1 and 2, inverse iteration beyond.
fn missing_states(
    potential: &PartnerPotential,
    seeds: &[SeedSolution],
    grid: &RadialGrid,
) -> Result<Vec<StateRow>, CliError> {
    Ok(match seeds {
        [one] => {
            let ms = missing_state_1(one, grid)?;
            vec![(*one, ms.psi.clone(), "closed_form", Some(ms))]
        }
        [a, b] => {
            let (ma, mb) = missing_states_2(a, b, grid)?;
            vec![
                (*a, ma.psi.clone(), "closed_form", Some(ma)),
                (*b, mb.psi.clone(), "closed_form", Some(mb)),
            ]
        }
        _ => {
            let op = discretize(potential, grid)?;
            seeds
                .iter()
                .map(|s| {
                    let e = lowest_eigenvalues(&op, 1, (s.epsilon() - 0.02, s.epsilon() + 0.02))?[0];
                    Ok((*s, eigenvector(&op, e)?, "inverse_iteration", None))
                })
                .collect::<Result<Vec<_>, isospec::Error>>()?
        }
    })
}

pub fn gen(config: &RunConfig) -> Result<Outcome, CliError> {
    let potential = build_potential(&config.family)?;
    let seeds = config.family.validated_seeds()?;
    let grid = config.grid;
    let r: Vec<f64> = grid.points().collect();
    let v_partner = potential.sample(&grid)?.into_values();
    let v_base: Vec<f64> = r
        .iter()
        .map(|&x| coulomb_potential(potential.l_out(), x))
        .collect::<Result<_, _>>()?;
    let delta: Vec<f64> = v_partner.iter().zip(&v_base).map(|(a, b)| a - b).collect();

    let dir = &config.output_path;
    let mut files = vec![write_series(
        dir,
        "potential",
        config.format,
        &["r", "V_partner", "V_base", "delta"],
        &[&r, &v_partner, &v_base, &delta],
    )?];
    let mut entries = Vec::new();
    for (seed, psi, method, ms) in missing_states(&potential, &seeds, &grid)? {
        let path = write_series(
            dir,
            &format!("missing_state_k{}", seed.k()),
            config.format,
            &["r", "psi"],
            &[&r, psi.values()],
        )?;
        entries.push(MissingEntry {
            k: seed.k(),
            energy: seed.epsilon(),
            file: file_name(&path),
            method,
            nodes: psi.sign_changes(),
            numeric_constant: ms.as_ref().map(|m| m.numeric_constant),
            closed_form_constant: ms.as_ref().and_then(|m| m.closed_form_constant),
            constant_ratio: ms.as_ref().and_then(MissingState::constant_ratio),
        });
        files.push(path);
    }
    let predicted = predicted_spectrum(&config.family, config.levels as u32)?.lowest(config.levels);
    let manifest_path = dir.join("manifest.json");
    let mut names: Vec<String> = files.iter().map(|p| file_name(p)).collect();
    names.push(file_name(&manifest_path));
    let summary = format!(
        "family l = {} order {} -> l_out = {}; predicted {}{}",
        config.family.l,
        config.family.order(),
        potential.l_out(),
        join_numbers(&predicted.energies()),
        holes_text(&predicted),
    );
    write_json(
        &manifest_path,
        &GenManifest {
            tool: TOOL,
            config,
            l_out: potential.l_out(),
            lambda_domains: config.family.applied_domains()?,
            predicted,
            files: names,
            missing_states: entries,
        },
    )?;
    files.push(manifest_path);
    Ok(Outcome {
        files,
        passed: true,
        summary,
    })
}

fn join_numbers(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format_number(*x)).collect();
    format!("[{}]", parts.join(", "))
}

fn holes_text(s: &Spectrum) -> String {
    if s.holes.is_empty() {
        String::new()
    } else {
        let e: Vec<f64> = s.holes.iter().map(|h| h.energy).collect();
        format!("; holes at {}", join_numbers(&e))
    }
}

#[derive(Debug, Serialize)]
struct VerifyOutput<'a> {
    tool: &'static str,
    config: &'a RunConfig,
    passed: bool,
    report: &'a SpectrumReport,
}

pub fn verify(config: &RunConfig, inject: Option<f64>) -> Result<Outcome, CliError> {
    let potential = build_potential(&config.family)?;
    let mut predicted = predicted_spectrum(&config.family, config.levels as u32)?.lowest(config.levels);
    if let Some(delta) = inject {
        predicted.levels[0].energy += delta;
    }
    let report = compare_spectrum(&potential, &predicted, &config.grid, config.tol)?;
    let passed = report.passed();
    let out = &config.output_path;
    let files = match config.format {
        Format::Json => vec![write_json(
            out,
            &VerifyOutput {
                tool: TOOL,
                config,
                passed,
                report: &report,
            },
        )?],
        Format::Csv => {
            let idx: Vec<f64> = (0..report.computed.len()).map(|i| i as f64).collect();
            let ok: Vec<f64> = report
                .abs_errors
                .iter()
                .map(|e| if *e <= report.tolerance { 1.0 } else { 0.0 })
                .collect();
            let table = csv_table(
                &["index", "predicted", "computed", "abs_error", "within_tol"],
                &[&idx, &report.predicted, &report.computed, &report.abs_errors, &ok],
            );
            let sibling = out.with_extension("manifest.json");
            vec![
                write_text(out, &table)?,
                write_json(
                    &sibling,
                    &VerifyOutput {
                        tool: TOOL,
                        config,
                        passed,
                        report: &report,
                    },
                )?,
            ]
        }
    };
    let holes: Vec<String> = report
        .holes_expected
        .iter()
        .zip(&report.holes_confirmed)
        .map(|(h, c)| format!("{} {}", format_number(*h), if *c { "confirmed" } else { "NOT confirmed" }))
        .collect();
    let summary = format!(
        "{}: {} levels, max |computed - predicted| = {:.3e} (tol {}); computed {}{}{}",
        if passed { "PASS" } else { "FAIL" },
        report.computed.len(),
        report.max_error(),
        format_number(report.tolerance),
        join_numbers(&report.computed),
        if holes.is_empty() {
            String::new()
        } else {
            format!("; holes: {}", holes.join(", "))
        },
        if report.below_bracket > 0 {
            format!("; {} eigenvalues below the search bracket", report.below_bracket)
        } else {
            String::new()
        },
    );
    Ok(Outcome { files, passed, summary })
}

#[derive(Debug, Serialize)]
struct Fig1Minimum {
    lambda: f64,
    r: f64,
    value: f64,
}

#[derive(Debug, Serialize)]
struct Fig1Manifest {
    tool: &'static str,
    preset: &'static str,
    family: FamilySpec,
    lambdas: Vec<f64>,
    grid: RadialGrid,
    columns: Vec<String>,
    minima: Vec<Fig1Minimum>,
}

#[derive(Debug, Serialize)]
struct LevelDiagram {
    tool: &'static str,
    preset: &'static str,
    base: BaseLevels,
    partner: PartnerLevels,
    gap: Gap,
}

#[derive(Debug, Serialize)]
struct BaseLevels {
    l: u32,
    levels: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct PartnerLevels {
    family: FamilySpec,
    l_out: u32,
    spectrum: Spectrum,
}

/// The gap between the two added levels, with the levels it skips.
#[derive(Debug, Serialize)]
struct Gap {
    lower: f64,
    upper: f64,
    missing: Vec<f64>,
}

pub fn fig1_family(lambda: f64) -> FamilySpec {
    FamilySpec::first_order(2, -1, lambda)
}

pub fn fig2_family() -> FamilySpec {
    FamilySpec::second_order(4, (-3, -0.5), (0, 0.5))
}

pub fn figure(args: &FigureArgs) -> Result<Outcome, CliError> {
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("isospec-figure"));
    match args.preset {
        Preset::Fig1 => {
            let grid = resolve_grid(
                RadialGrid::new(0.05, 15.0, 2991)?,
                &[GridOverride {
                    r_min: args.grid.rmin,
                    r_max: args.grid.rmax,
                    n_points: args.grid.n,
                }],
            )?;
            let r: Vec<f64> = grid.points().collect();
            let base: Vec<f64> = r.iter().map(|&x| coulomb_potential(1, x)).collect::<Result<_, _>>()?;
            let mut columns = vec![r.clone(), base];
            let mut names = vec!["r".to_string(), "V_base".to_string()];
            let mut minima = Vec::new();
            for lambda in FIG1_LAMBDAS {
                let p = build_potential(&fig1_family(lambda))?;
                let v = p.sample(&grid)?.into_values();
                let (i, vmin) = v
                    .iter()
                    .copied()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("grid is non-empty");
                minima.push(Fig1Minimum {
                    lambda,
                    r: r[i],
                    value: vmin,
                });
                names.push(format!("V_lambda_{}", format_number(lambda)));
                columns.push(v);
            }
            let refs: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
            let headers: Vec<&str> = names.iter().map(String::as_str).collect();
            let csv = write_text(&dir.join("fig1.csv"), &csv_table(&headers, &refs))?;
            let manifest = write_json(
                &dir.join("fig1.json"),
                &Fig1Manifest {
                    tool: TOOL,
                    preset: "fig1",
                    family: fig1_family(FIG1_LAMBDAS[0]),
                    lambdas: FIG1_LAMBDAS.to_vec(),
                    grid,
                    columns: names,
                    minima,
                },
            )?;
            Ok(Outcome {
                files: vec![csv, manifest],
                passed: true,
                summary: format!(
                    "fig1: V_1^(-1) for l = 2 at lambda = {} with the base V_1",
                    join_numbers(&FIG1_LAMBDAS)
                ),
            })
        }
        Preset::Fig2 => {
            let family = fig2_family();
            let partner = build_potential(&family)?;
            let spectrum = predicted_spectrum(&family, 4)?;
            let seeds = family.validated_seeds()?;
            let (lower, upper) = seeds.iter().fold((0.0_f64, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s.epsilon()), hi.max(s.epsilon()))
            });
            let diagram = LevelDiagram {
                tool: TOOL,
                preset: "fig2",
                base: BaseLevels {
                    l: partner.l_out(),
                    levels: (1..=5).map(|k| energy_level(partner.l_out(), k)).collect(),
                },
                partner: PartnerLevels {
                    family,
                    l_out: partner.l_out(),
                    spectrum: spectrum.clone(),
                },
                gap: Gap {
                    lower,
                    upper,
                    missing: spectrum.holes.iter().map(|h| h.energy).collect(),
                },
            };
            let path = write_json(&dir.join("fig2.json"), &diagram)?;
            Ok(Outcome {
                files: vec![path],
                passed: true,
                summary: format!(
                    "fig2: H_{} levels vs partner levels {}{}",
                    partner.l_out(),
                    join_numbers(&spectrum.energies()),
                    holes_text(&spectrum)
                ),
            })
        }
    }
}
