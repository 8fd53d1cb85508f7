use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde_json::json;

use fplm_core::fplm::FplmError;
use fplm_core::generators::{generate as build, GeneratorSpec};
use fplm_core::meshio::{
    mesh_from_json, mesh_to_json, parse_off, parse_tetgen, read_embedding_csv, render_svg,
    write_embedding_csv, SvgOptions,
};
use fplm_core::{
    audit, build_weights, run_fplm, AuditOptions, AuditPartition, FixedKind, FixedPointSet,
    FplmOptions, Matrix, SeedStrategy, SimplicialMesh, SolveConfig,
};

use crate::manifest::{EmbeddingSummary, RunManifest};
use crate::{
    EmbedArgs, Failure, GenerateArgs, RenderArgs, ValidateArgs, EXIT_SOLVER, EXIT_VIOLATION,
};

type CmdResult = Result<u8, Failure>;

pub const MESH_FILE: &str = "mesh.json";
pub const LATENT_FILE: &str = "latent.csv";
pub const EMBEDDING_FILE: &str = "embedding.csv";
pub const GENERATE_MANIFEST: &str = "generate-manifest.json";
pub const EMBED_MANIFEST: &str = "embed-manifest.json";

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::input)
}

fn make_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(Failure::input)
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::input)
}

/// Loads a mesh, choosing the format from the file extension.
pub fn load_mesh(path: &Path) -> Result<SimplicialMesh, Failure> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let text = read(path)?;
    let parsed = match ext.as_str() {
        "json" => mesh_from_json(&text),
        "off" => parse_off(&text),
        "node" | "ele" => {
            let node = path.with_extension("node");
            let ele = path.with_extension("ele");
            let (node_text, ele_text) = (read(&node)?, read(&ele)?);
            parse_tetgen(&node_text, &ele_text)
        }
        _ => {
            return Err(Failure::input(anyhow!(
                "{}: unknown mesh format (expected .json, .off or .node/.ele)",
                path.display()
            )))
        }
    };
    parsed
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(Failure::input)
}

fn load_embedding(path: &Path) -> Result<Matrix, Failure> {
    read_embedding_csv(&read(path)?)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(Failure::input)
}

pub fn generate(args: &GenerateArgs) -> CmdResult {
    let spec = GeneratorSpec {
        kind: args.kind,
        resolution: args.resolution.unwrap_or(args.kind.default_resolution()),
        seed: args.seed,
        triangulation: args.triangulation,
    };
    let mut manifest = RunManifest::new(
        "generate",
        json!({
            "kind": spec.kind,
            "resolution": spec.resolution.to_string(),
            "seed": spec.seed,
            "triangulation": spec.triangulation.to_string(),
        }),
    );
    let g = manifest
        .time("generate", || build(&spec))
        .map_err(Failure::input)?;
    make_dir(&args.out)?;
    let mesh_path = args.out.join(MESH_FILE);
    let latent_path = args.out.join(LATENT_FILE);
    manifest.time("write", || -> Result<(), Failure> {
        write(&mesh_path, &mesh_to_json(&g.mesh))?;
        write(&latent_path, &write_embedding_csv(&g.latent))
    })?;
    manifest.outputs = vec![mesh_path, latent_path];
    manifest
        .write(&args.out.join(GENERATE_MANIFEST))
        .map_err(Failure::input)?;
    println!(
        "generated {}: {} vertices, {} simplices (d = {}, ambient {})",
        spec.kind,
        g.mesh.num_vertices(),
        g.mesh.num_simplices(),
        g.mesh.intrinsic_dim(),
        g.mesh.ambient_dim()
    );
    Ok(0)
}

fn fplm_failure(e: FplmError) -> Failure {
    let code = match e {
        FplmError::Solve(_) => EXIT_SOLVER,
        _ => crate::EXIT_INPUT,
    };
    Failure {
        code,
        error: e.into(),
    }
}

pub fn embed(args: &EmbedArgs, threads: Option<usize>) -> CmdResult {
    let seed_strategy = match args.seed_strategy.parse::<SeedStrategy>() {
        Ok(SeedStrategy::Random(_)) if args.seed_strategy == "random" => {
            SeedStrategy::Random(args.seed)
        }
        Ok(s) => s,
        Err(e) => return Err(Failure::input(anyhow!(e))),
    };
    let options = FplmOptions {
        gamma: args.gamma,
        seed_strategy,
        solver: SolveConfig {
            rel_tol: args.rel_tol,
            max_iter: args.max_iter,
            method: args.solver,
        },
        polygon_orientation: args.polygon_orientation,
        ..FplmOptions::default()
    };
    let mut manifest = RunManifest::new(
        "embed",
        json!({
            "mesh": args.mesh,
            "gamma": options.gamma,
            "seed_strategy": options.seed_strategy,
            "seed": args.seed,
            "solver": {
                "method": options.solver.method,
                "rel_tol": options.solver.rel_tol,
                "max_iter": options.solver.max_iter.map_or(json!("10 x unknowns"), |m| json!(m)),
            },
            "polygon_orientation": options.polygon_orientation,
            "volume_tolerance": options.vol_tol,
            "threads": threads.map_or(json!("all cores"), |t| json!(t)),
        }),
    );
    let mesh = manifest.time("load", || load_mesh(&args.mesh))?;
    let e = manifest
        .time("fplm", || run_fplm(&mesh, &options))
        .map_err(fplm_failure)?;

    let free: Vec<usize> = {
        let mut fixed = vec![false; mesh.num_vertices()];
        for &v in &e.final_fixed().indices {
            fixed[v] = true;
        }
        (0..mesh.num_vertices()).filter(|&v| !fixed[v]).collect()
    };
    let residual = fplm_core::validity::convex_combination_residual(&e.graph, &e.coords, &free);

    make_dir(&args.out)?;
    let out = args.out.join(EMBEDDING_FILE);
    manifest.time("write", || write(&out, &write_embedding_csv(&e.coords)))?;
    manifest.outputs = vec![out];
    manifest.embedding = Some(EmbeddingSummary {
        rounds_run: e.rounds_run,
        branch: e.branch,
        seed_simplex: e.seed_simplex,
        removed_simplex: e.removed_simplex,
        fixed_round1: e.fixed_round1.indices.clone(),
        fixed_round2: e.fixed_round2.as_ref().map(|f| f.indices.clone()),
        rounds: e.stats.clone(),
        max_convex_residual: residual,
    });
    manifest
        .write(&args.out.join(EMBED_MANIFEST))
        .map_err(Failure::input)?;

    println!("rounds_run={}", e.rounds_run);
    println!("branch={}", e.branch.as_str());
    for (k, s) in e.stats.iter().enumerate() {
        println!(
            "round{}: fixed={} free={} method={:?} iterations={} relative_residual={:e}",
            k + 1,
            s.fixed,
            s.free,
            s.method,
            s.iterations,
            s.relative_residual
        );
    }
    println!("max_convex_residual={residual:e}");
    Ok(0)
}

fn drop_simplex(mesh: &SimplicialMesh, k: usize) -> Result<SimplicialMesh, Failure> {
    if k >= mesh.num_simplices() {
        return Err(Failure::input(anyhow!(
            "manifest removes simplex {k}, but the mesh has {}",
            mesh.num_simplices()
        )));
    }
    let keep: Vec<&[usize]> = mesh
        .simplices()
        .enumerate()
        .filter(|&(i, _)| i != k)
        .map(|(_, s)| s)
        .collect();
    SimplicialMesh::from_simplex_list(mesh.vertices().clone(), &keep, mesh.intrinsic_dim())
        .map_err(Failure::input)
}

fn discover_manifest(args: &ValidateArgs) -> Option<PathBuf> {
    if let Some(p) = &args.manifest {
        return Some(p.clone());
    }
    let sibling = args
        .embedding
        .parent()
        .unwrap_or(Path::new("."))
        .join(EMBED_MANIFEST);
    sibling.exists().then_some(sibling)
}

pub fn validate(args: &ValidateArgs) -> CmdResult {
    let mesh = load_mesh(&args.mesh)?;
    let coords = load_embedding(&args.embedding)?;
    let manifest = match discover_manifest(args) {
        Some(p) => Some(
            RunManifest::read(&p)
                .with_context(|| format!("reading manifest {}", p.display()))
                .map_err(Failure::input)?,
        ),
        None => None,
    };
    let summary = manifest.as_ref().and_then(|m| m.embedding.clone());
    let audit_mesh = match summary.as_ref().and_then(|s| s.removed_simplex) {
        Some(k) => drop_simplex(&mesh, k)?,
        None => mesh.clone(),
    };

    let gamma = manifest
        .as_ref()
        .and_then(|m| m.config.get("gamma"))
        .and_then(|g| g.as_f64())
        .unwrap_or(fplm_core::DEFAULT_GAMMA);
    let graph = build_weights(&mesh, gamma).map_err(Failure::input)?;
    let fixed = summary.as_ref().map(|s| {
        let indices = s.fixed_round2.clone().unwrap_or_else(|| s.fixed_round1.clone());
        (indices, s.fixed_round2.is_some())
    });
    let fixed = match fixed {
        Some((indices, round2)) => {
            if let Some(&bad) = indices.iter().find(|&&v| v >= coords.nrows()) {
                return Err(Failure::input(anyhow!(
                    "manifest fixes vertex {bad}, embedding has {} rows",
                    coords.nrows()
                )));
            }
            Some(FixedPointSet {
                targets: coords.select_rows(&indices),
                indices,
                kind: if round2 {
                    FixedKind::InnerBoundary
                } else {
                    FixedKind::SelectedSimplex
                },
            })
        }
        None => None,
    };
    let partition = fixed.as_ref().map(|f| AuditPartition {
        fixed: f,
        graph: &graph,
    });
    let report = audit(&audit_mesh, &coords, partition, &AuditOptions::default())
        .map_err(Failure::input)?;

    if let Some(dir) = &args.out {
        make_dir(dir)?;
        write(&dir.join("report.txt"), &report.to_text())?;
        let json = serde_json::to_string_pretty(&report).map_err(Failure::input)?;
        write(&dir.join("report.json"), &(json + "\n"))?;
    }
    if args.key_value {
        print!("{}", report.to_key_values());
    } else {
        print!("{}", report.to_text());
    }
    Ok(if report.is_certified() { 0 } else { EXIT_VIOLATION })
}

pub fn render(args: &RenderArgs) -> CmdResult {
    let mesh = load_mesh(&args.mesh)?;
    let coords = load_embedding(&args.embedding)?;
    if coords.ncols() != 2 {
        bail_input(format!(
            "rendering needs 2-dimensional coordinates, embedding has {}",
            coords.ncols()
        ))?;
    }
    if coords.nrows() != mesh.num_vertices() {
        bail_input(format!(
            "embedding has {} rows, mesh has {} vertices",
            coords.nrows(),
            mesh.num_vertices()
        ))?;
    }
    let svg = render_svg(
        &mesh,
        &coords,
        &SvgOptions {
            highlight_boundary: args.highlight_boundary,
            mark_crossings: args.mark_crossings,
        },
    );
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        make_dir(parent)?;
    }
    write(&args.out, &svg)?;
    Ok(0)
}

fn bail_input(message: String) -> Result<(), Failure> {
    Err(Failure::input(anyhow!(message)))
}
