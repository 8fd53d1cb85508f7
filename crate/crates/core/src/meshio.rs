//! Mesh, embedding and drawing formats.
//!
//! * OFF (polygon surfaces, fan-triangulated on load)
//! * TetGen `.node` / `.ele` pairs
//! * mesh-json, the lossless interchange format:
//!   `{ambient_dim, intrinsic_dim, vertices: [[..]], simplices: [[..]]}`
//! * embedding CSV: `id,y0,..,y{d-1}` with shortest round-trip decimals
//! * SVG wireframes of planar embeddings

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::simplicial::{triangulate_polygon_faces, MeshError, SimplicialMesh};
use crate::validity::count_crossings;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unexpected end of input: {0}")]
    Eof(String),
    #[error("invalid mesh: {0}")]
    Mesh(#[from] MeshError),
    #[error("invalid mesh-json: {0}")]
    Json(#[from] serde_json::Error),
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        message: message.into(),
    }
}

/// Non-empty lines with comments (`#` to end of line) removed, paired with
/// their 1-based line number.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = l.split_whitespace().collect();
        (!tokens.is_empty()).then_some((i + 1, tokens))
    })
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T, ParseError> {
    tok.parse()
        .map_err(|_| syntax(line, format!("cannot parse {what} from {tok:?}")))
}

/// Parses an ASCII OFF surface. Polygon faces are fanned into triangles.
pub fn parse_off(text: &str) -> Result<SimplicialMesh, ParseError> {
    let mut lines = content_lines(text);
    let (hline, header) = lines.next().ok_or_else(|| ParseError::Eof("missing OFF header".into()))?;
    // the counts may follow the keyword on the same line
    let counts: Vec<&str> = match header[0] {
        "OFF" if header.len() == 1 => {
            let (_, c) = lines
                .next()
                .ok_or_else(|| ParseError::Eof("missing counts line".into()))?;
            c
        }
        "OFF" => header[1..].to_vec(),
        other => return Err(syntax(hline, format!("expected header \"OFF\", found {other:?}"))),
    };
    if counts.len() < 2 {
        return Err(syntax(hline, "counts line needs \"V F [E]\""));
    }
    let nv: usize = parse_num(counts[0], hline, "vertex count")?;
    let nf: usize = parse_num(counts[1], hline, "face count")?;

    let mut vertices = Matrix::zeros(0, 3);
    for k in 0..nv {
        let (line, tok) = lines.next().ok_or_else(|| {
            ParseError::Eof(format!("header declares {nv} vertices, found {k}"))
        })?;
        if tok.len() != 3 {
            return Err(syntax(
                line,
                format!("vertex {k}: expected 3 coordinates, found {} fields", tok.len()),
            ));
        }
        let mut p = [0.0; 3];
        for (c, t) in p.iter_mut().zip(&tok) {
            *c = parse_num(t, line, "coordinate")?;
        }
        vertices.push_row(&p);
    }
    let mut faces = Vec::with_capacity(nf);
    for k in 0..nf {
        let (line, tok) = lines
            .next()
            .ok_or_else(|| ParseError::Eof(format!("header declares {nf} faces, found {k}")))?;
        let n: usize = parse_num(tok[0], line, "polygon size")?;
        if tok.len() < n + 1 {
            return Err(syntax(
                line,
                format!("face {k}: declares {n} vertices, lists {}", tok.len() - 1),
            ));
        }
        let mut face = Vec::with_capacity(n);
        for t in &tok[1..=n] {
            let v: usize = parse_num(t, line, "vertex index")?;
            if v >= nv {
                return Err(syntax(line, format!("vertex index {v} out of range ({nv} vertices)")));
            }
            face.push(v);
        }
        faces.push(face);
    }
    if let Some((line, _)) = lines.next() {
        // a vertex line where a face was expected means the counts are off
        return Err(syntax(line, "more data than the header declares"));
    }
    Ok(triangulate_polygon_faces(&faces, vertices)?)
}

/// Writes a triangle mesh with 3-dimensional vertices as OFF.
pub fn write_off(mesh: &SimplicialMesh) -> String {
    assert_eq!(mesh.intrinsic_dim(), 2, "OFF carries triangle meshes only");
    let mut s = String::from("OFF\n");
    let _ = writeln!(s, "{} {} 0", mesh.num_vertices(), mesh.num_simplices());
    for p in mesh.vertices().rows_iter() {
        let mut row: Vec<String> = p.iter().map(|x| x.to_string()).collect();
        row.resize(3, "0".into());
        let _ = writeln!(s, "{}", row.join(" "));
    }
    for t in mesh.simplices() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    s
}

/// Parses a TetGen `.node` / `.ele` pair. The index base (0 or 1) is taken
/// from the first node index.
pub fn parse_tetgen(node_text: &str, ele_text: &str) -> Result<SimplicialMesh, ParseError> {
    let mut lines = content_lines(node_text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| ParseError::Eof(".node: missing header".into()))?;
    if header.len() < 2 {
        return Err(syntax(hline, ".node header needs \"<points> <dim> [attrs] [markers]\""));
    }
    let n: usize = parse_num(header[0], hline, "point count")?;
    let dim: usize = parse_num(header[1], hline, "dimension")?;
    if dim != 3 {
        return Err(syntax(hline, format!(".node dimension is {dim}, expected 3")));
    }
    let mut base = None;
    let mut vertices = Matrix::zeros(n, 3);
    let mut seen = vec![false; n];
    for k in 0..n {
        let (line, tok) = lines
            .next()
            .ok_or_else(|| ParseError::Eof(format!(".node declares {n} points, found {k}")))?;
        if tok.len() < 4 {
            return Err(syntax(line, ".node: expected \"<index> <x> <y> <z>\""));
        }
        let id: usize = parse_num(tok[0], line, "node index")?;
        let b = *base.get_or_insert(id.min(1));
        let i = id
            .checked_sub(b)
            .filter(|&i| i < n)
            .ok_or_else(|| syntax(line, format!("node index {id} out of range")))?;
        if std::mem::replace(&mut seen[i], true) {
            return Err(syntax(line, format!("node index {id} repeated")));
        }
        for c in 0..3 {
            vertices.set(i, c, parse_num(tok[c + 1], line, "coordinate")?);
        }
    }
    let base = base.unwrap_or(0);

    let mut lines = content_lines(ele_text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| ParseError::Eof(".ele: missing header".into()))?;
    if header.len() < 2 {
        return Err(syntax(hline, ".ele header needs \"<tets> <nodes per tet> [attrs]\""));
    }
    let m: usize = parse_num(header[0], hline, "tetrahedron count")?;
    let per: usize = parse_num(header[1], hline, "nodes per tetrahedron")?;
    if per != 4 {
        return Err(syntax(hline, format!("{per} nodes per tetrahedron, expected 4")));
    }
    let mut simplices = Vec::with_capacity(4 * m);
    for k in 0..m {
        let (line, tok) = lines
            .next()
            .ok_or_else(|| ParseError::Eof(format!(".ele declares {m} tetrahedra, found {k}")))?;
        if tok.len() < 5 {
            return Err(syntax(line, ".ele: expected \"<index> <n1> <n2> <n3> <n4>\""));
        }
        for t in &tok[1..5] {
            let id: usize = parse_num(t, line, "node index")?;
            let v = id
                .checked_sub(base)
                .filter(|&v| v < n)
                .ok_or_else(|| syntax(line, format!("node {id} does not exist ({n} nodes, base {base})")))?;
            simplices.push(v);
        }
    }
    Ok(SimplicialMesh::new(vertices, simplices, 3)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct MeshJson {
    ambient_dim: usize,
    intrinsic_dim: usize,
    vertices: Vec<Vec<f64>>,
    simplices: Vec<Vec<usize>>,
}

pub fn mesh_to_json(mesh: &SimplicialMesh) -> String {
    let doc = MeshJson {
        ambient_dim: mesh.ambient_dim(),
        intrinsic_dim: mesh.intrinsic_dim(),
        vertices: mesh.vertices().rows_iter().map(|r| r.to_vec()).collect(),
        simplices: mesh.simplices().map(|s| s.to_vec()).collect(),
    };
    serde_json::to_string(&doc).expect("mesh serializes")
}

pub fn mesh_from_json(text: &str) -> Result<SimplicialMesh, ParseError> {
    let doc: MeshJson = serde_json::from_str(text)?;
    let mut vertices = Matrix::zeros(0, doc.ambient_dim);
    for (i, r) in doc.vertices.iter().enumerate() {
        if r.len() != doc.ambient_dim {
            return Err(ParseError::Syntax {
                line: 0,
                message: format!("vertex {i} has {} coordinates, ambient_dim is {}", r.len(), doc.ambient_dim),
            });
        }
        vertices.push_row(r);
    }
    Ok(SimplicialMesh::from_simplex_list(vertices, &doc.simplices, doc.intrinsic_dim)?)
}

/// Embedding as CSV: header `id,y0,..`, one row per vertex. Values use
/// Rust's shortest round-trip formatting, so reading them back is exact.
pub fn write_embedding_csv(coords: &Matrix) -> String {
    let mut s = String::from("id");
    for k in 0..coords.ncols() {
        let _ = write!(s, ",y{k}");
    }
    s.push('\n');
    for (i, row) in coords.rows_iter().enumerate() {
        let _ = write!(s, "{i}");
        for x in row {
            let _ = write!(s, ",{x}");
        }
        s.push('\n');
    }
    s
}

/// Reads an embedding CSV. Rows may appear in any order but every id in
/// `0..N` must occur exactly once.
pub fn read_embedding_csv(text: &str) -> Result<Matrix, ParseError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| ParseError::Eof("missing CSV header".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.first() != Some(&"id") || cols.len() < 2 {
        return Err(syntax(1, "CSV header must be \"id,y0,...\""));
    }
    let d = cols.len() - 1;
    let mut rows: Vec<(usize, Vec<f64>, usize)> = Vec::new();
    for (i, l) in lines {
        let line = i + 1;
        let tok: Vec<&str> = l.split(',').map(str::trim).collect();
        if tok.len() != d + 1 {
            return Err(syntax(line, format!("expected {} fields, found {}", d + 1, tok.len())));
        }
        let id: usize = parse_num(tok[0], line, "vertex id")?;
        let vals = tok[1..]
            .iter()
            .map(|t| parse_num::<f64>(t, line, "coordinate"))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push((id, vals, line));
    }
    let n = rows.len();
    let mut out = Matrix::zeros(n, d);
    let mut seen = vec![false; n];
    for (id, vals, line) in rows {
        if id >= n || std::mem::replace(&mut seen[id], true) {
            return Err(syntax(line, format!("vertex id {id} is repeated or out of range 0..{n}")));
        }
        out.row_mut(id).copy_from_slice(&vals);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SvgOptions {
    pub highlight_boundary: bool,
    pub mark_crossings: bool,
}

/// Wireframe of a planar embedding: one `<line>` per mesh edge in edge
/// order, boundary edges optionally drawn in a separate group, crossing
/// points optionally marked with circles. Output is a pure function of the
/// input.
pub fn render_svg(mesh: &SimplicialMesh, coords: &Matrix, options: &SvgOptions) -> String {
    assert_eq!(coords.ncols(), 2, "SVG rendering needs 2-dimensional coordinates");
    const SIZE: f64 = 800.0;
    const MARGIN: f64 = 20.0;
    let (lo, hi) = coords
        .bounding_box()
        .unwrap_or((vec![0.0, 0.0], vec![1.0, 1.0]));
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let scale = if span > 0.0 { (SIZE - 2.0 * MARGIN) / span } else { 1.0 };
    // flip y so the drawing has the usual orientation
    let map = |p: &[f64]| (MARGIN + (p[0] - lo[0]) * scale, SIZE - MARGIN - (p[1] - lo[1]) * scale);

    let edges = mesh.edges();
    let boundary: std::collections::HashSet<(usize, usize)> = if options.highlight_boundary {
        crate::simplicial::detect_boundary(mesh)
            .map(|b| {
                b.faces
                    .iter()
                    .filter(|f| f.len() == 2)
                    .map(|f| (f[0].min(f[1]), f[0].max(f[1])))
                    .collect()
            })
            .unwrap_or_default()
    } else {
        Default::default()
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">"
    );
    let _ = writeln!(s, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let line = |s: &mut String, e: (usize, usize)| {
        let (x1, y1) = map(coords.row(e.0));
        let (x2, y2) = map(coords.row(e.1));
        let _ = writeln!(s, "<line x1=\"{x1:.3}\" y1=\"{y1:.3}\" x2=\"{x2:.3}\" y2=\"{y2:.3}\"/>");
    };
    let _ = writeln!(s, "<g stroke=\"#333\" stroke-width=\"0.6\">");
    for &e in edges.iter().filter(|e| !boundary.contains(e)) {
        line(&mut s, e);
    }
    let _ = writeln!(s, "</g>");
    if !boundary.is_empty() {
        let _ = writeln!(s, "<g stroke=\"#1f5fbf\" stroke-width=\"2\">");
        for &e in edges.iter().filter(|e| boundary.contains(e)) {
            line(&mut s, e);
        }
        let _ = writeln!(s, "</g>");
    }
    if options.mark_crossings {
        let report = count_crossings(&edges, coords);
        if report.count > 0 {
            let _ = writeln!(s, "<g fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\">");
            for &(a, b) in &report.pairs {
                let (p, q) = intersection_point(coords, edges[a], edges[b]);
                let (x, y) = map(&[p, q]);
                let _ = writeln!(s, "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"4\"/>");
            }
            let _ = writeln!(s, "</g>");
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Approximate meeting point of two intersecting segments (midpoint of the
/// overlap for collinear ones).
fn intersection_point(coords: &Matrix, e: (usize, usize), f: (usize, usize)) -> (f64, f64) {
    let (p, r) = (coords.row(e.0), coords.row(e.1));
    let (q, t) = (coords.row(f.0), coords.row(f.1));
    let d1 = [r[0] - p[0], r[1] - p[1]];
    let d2 = [t[0] - q[0], t[1] - q[1]];
    let den = d1[0] * d2[1] - d1[1] * d2[0];
    if den == 0.0 {
        let mid = |a: &[f64], b: &[f64]| ((a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0);
        let (m1, m2) = (mid(p, r), mid(q, t));
        return ((m1.0 + m2.0) / 2.0, (m1.1 + m2.1) / 2.0);
    }
    let s = ((q[0] - p[0]) * d2[1] - (q[1] - p[1]) * d2[0]) / den;
    (p[0] + s * d1[0], p[1] + s * d1[1])
}
