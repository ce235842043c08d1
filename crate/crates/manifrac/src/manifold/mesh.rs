//! Triangle mesh input (OFF and ASCII-PLY), validation, and the graph
//! geodesic backend.
//!
//! The parsers accept untrusted bytes: they must never panic, never allocate
//! proportionally to claimed-but-absent data, and reject anything that is not
//! a closed, connected, consistently oriented triangle mesh.

use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::manifold::{packed_from_rows, sampling_from_parts, ManifoldSampling, ManifoldSpec};

/// Hard ceiling on vertex/face counts claimed by a header. Keeps hostile
/// headers from driving allocations.
const MAX_ELEMENTS: usize = 10_000_000;

/// Parsed but not yet validated mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[u32; 3]>,
}

struct Tokens<'a> {
    rest: &'a str,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        Tokens { rest: text }
    }

    /// Next whitespace-separated token, skipping `#` comments to end of line.
    fn next(&mut self) -> Option<&'a str> {
        loop {
            self.rest = self.rest.trim_start();
            if let Some(stripped) = self.rest.strip_prefix('#') {
                match stripped.find('\n') {
                    Some(pos) => self.rest = &stripped[pos + 1..],
                    None => self.rest = "",
                }
                continue;
            }
            if self.rest.is_empty() {
                return None;
            }
            let end = self
                .rest
                .find(char::is_whitespace)
                .unwrap_or(self.rest.len());
            let (tok, rest) = self.rest.split_at(end);
            self.rest = rest;
            return Some(tok);
        }
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        let tok = self.next().ok_or_else(|| parse_err(format!("unexpected end of input reading {what}")))?;
        tok.parse::<usize>()
            .map_err(|_| parse_err(format!("expected a count for {what}, got `{tok}`")))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        let tok = self.next().ok_or_else(|| parse_err(format!("unexpected end of input reading {what}")))?;
        let v = tok
            .parse::<f64>()
            .map_err(|_| parse_err(format!("expected a number for {what}, got `{tok}`")))?;
        if !v.is_finite() {
            return Err(parse_err(format!("non-finite coordinate in {what}")));
        }
        Ok(v)
    }
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::MeshParse(msg.into())
}

fn check_count(count: usize, what: &str) -> Result<usize> {
    if count > MAX_ELEMENTS {
        return Err(parse_err(format!("{what} count {count} exceeds the limit {MAX_ELEMENTS}")));
    }
    Ok(count)
}

fn to_str(bytes: &[u8]) -> Result<&str> {
    std::str::from_utf8(bytes).map_err(|_| parse_err("input is not valid UTF-8 text"))
}

/// Parse an ASCII OFF file with triangular faces.
pub fn parse_off(bytes: &[u8]) -> Result<RawMesh> {
    let text = to_str(bytes)?;
    let mut t = Tokens::new(text);
    match t.next() {
        Some("OFF") => {}
        other => {
            return Err(parse_err(format!(
                "expected OFF header, got `{}`",
                other.unwrap_or("<eof>")
            )))
        }
    }
    let nv = check_count(t.usize("vertex count")?, "vertex")?;
    let nf = check_count(t.usize("face count")?, "face")?;
    let _ne = t.usize("edge count")?;
    let mut vertices = Vec::new();
    for i in 0..nv {
        let x = t.f64(&format!("vertex {i}"))?;
        let y = t.f64(&format!("vertex {i}"))?;
        let z = t.f64(&format!("vertex {i}"))?;
        vertices.push([x, y, z]);
    }
    let mut faces = Vec::new();
    for i in 0..nf {
        let k = t.usize(&format!("face {i} vertex count"))?;
        if k != 3 {
            return Err(parse_err(format!("face {i} has {k} vertices; only triangles are supported")));
        }
        faces.push(read_face_indices(&mut t, i, nv)?);
    }
    Ok(RawMesh { vertices, faces })
}

fn read_face_indices(t: &mut Tokens, face: usize, nv: usize) -> Result<[u32; 3]> {
    let mut idx = [0u32; 3];
    for slot in &mut idx {
        let v = t.usize(&format!("face {face} index"))?;
        if v >= nv {
            return Err(parse_err(format!("face {face} references vertex {v}, but only {nv} vertices exist")));
        }
        *slot = v as u32;
    }
    if idx[0] == idx[1] || idx[1] == idx[2] || idx[0] == idx[2] {
        return Err(parse_err(format!("face {face} repeats a vertex")));
    }
    Ok(idx)
}

/// Parse an ASCII-PLY file containing only vertex and face elements, with
/// float x/y/z vertex properties and a triangular index list per face.
pub fn parse_ply(bytes: &[u8]) -> Result<RawMesh> {
    let text = to_str(bytes)?;
    // Split the header from the body at the end_header line.
    let marker = text
        .lines()
        .scan(0usize, |offset, line| {
            let start = *offset;
            *offset += line.len() + 1;
            Some((start, line))
        })
        .find(|(_, line)| line.trim() == "end_header");
    let (header, body) = match marker {
        Some((start, line)) => {
            let body_start = (start + line.len() + 1).min(text.len());
            (&text[..start], &text[body_start..])
        }
        None => return Err(parse_err("missing end_header")),
    };
    let mut lines = header.lines();
    match lines.next().map(str::trim) {
        Some("ply") => {}
        other => {
            return Err(parse_err(format!("expected `ply` magic, got `{}`", other.unwrap_or("<eof>"))))
        }
    }

    #[derive(PartialEq)]
    enum Elem {
        Vertex,
        Face,
    }
    let mut nv = 0usize;
    let mut nf = 0usize;
    let mut current: Option<Elem> = None;
    // vertex property slots; x/y/z positions among them
    let mut vprops: Vec<String> = Vec::new();
    let mut face_list_seen = false;
    let mut format_seen = false;
    for line in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with("comment") || line.starts_with("obj_info") {
            continue;
        }
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("format") => {
                let kind = parts.next().unwrap_or("");
                if kind != "ascii" {
                    return Err(parse_err(format!("only ascii PLY is supported, got format `{kind}`")));
                }
                format_seen = true;
            }
            Some("element") => {
                let name = parts.next().unwrap_or("");
                let count: usize = parts
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| parse_err(format!("element `{name}` has no count")))?;
                match name {
                    "vertex" => {
                        nv = check_count(count, "vertex")?;
                        current = Some(Elem::Vertex);
                    }
                    "face" => {
                        nf = check_count(count, "face")?;
                        current = Some(Elem::Face);
                    }
                    other => {
                        return Err(parse_err(format!("unsupported element `{other}`; only vertex and face are accepted")))
                    }
                }
            }
            Some("property") => match current {
                Some(Elem::Vertex) => {
                    let ty = parts.next().unwrap_or("");
                    if ty == "list" {
                        return Err(parse_err("list property on vertices is not supported"));
                    }
                    let name = parts.next().unwrap_or("");
                    vprops.push(name.to_string());
                }
                Some(Elem::Face) => {
                    let ty = parts.next().unwrap_or("");
                    if ty != "list" {
                        return Err(parse_err("face element must have a single list property"));
                    }
                    face_list_seen = true;
                }
                None => return Err(parse_err("property before any element")),
            },
            Some(other) => return Err(parse_err(format!("unexpected header line `{other}`"))),
            None => {}
        }
    }
    if !format_seen {
        return Err(parse_err("missing format line"));
    }
    let ix = vprops.iter().position(|p| p == "x");
    let iy = vprops.iter().position(|p| p == "y");
    let iz = vprops.iter().position(|p| p == "z");
    let (ix, iy, iz) = match (ix, iy, iz) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(parse_err("vertex element must carry x, y and z properties")),
    };
    if nf > 0 && !face_list_seen {
        return Err(parse_err("face element missing its index list property"));
    }

    let mut t = Tokens::new(body);
    let mut vertices = Vec::new();
    for i in 0..nv {
        let mut row = vec![0.0f64; vprops.len()];
        for (slot, name) in row.iter_mut().zip(&vprops) {
            *slot = t.f64(&format!("vertex {i} property {name}"))?;
        }
        vertices.push([row[ix], row[iy], row[iz]]);
    }
    let mut faces = Vec::new();
    for i in 0..nf {
        let k = t.usize(&format!("face {i} list count"))?;
        if k != 3 {
            return Err(parse_err(format!("face {i} has {k} vertices; only triangles are supported")));
        }
        faces.push(read_face_indices(&mut t, i, nv)?);
    }
    Ok(RawMesh { vertices, faces })
}

/// Sniff the format from the magic token and dispatch.
pub fn parse_mesh(bytes: &[u8]) -> Result<RawMesh> {
    let head = &bytes[..bytes.len().min(64)];
    let head = String::from_utf8_lossy(head);
    let head = head.trim_start();
    if head.starts_with("OFF") {
        parse_off(bytes)
    } else if head.starts_with("ply") {
        parse_ply(bytes)
    } else {
        Err(parse_err("unrecognized mesh format (expected OFF or ascii PLY)"))
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Validated mesh geometry: barycentric vertex areas, area-weighted vertex
/// normals, the edge adjacency in CSR form, and the mean edge length.
#[derive(Debug)]
pub struct MeshGeometry {
    pub vertex_areas: Vec<f64>,
    pub vertex_normals: Vec<[f64; 3]>,
    pub adjacency_offsets: Vec<usize>,
    pub adjacency: Vec<(u32, f64)>,
    pub mean_edge_length: f64,
    pub total_area: f64,
}

/// Check closedness, orientability, connectedness and nondegeneracy, and
/// compute the derived geometry. Structural defects are reported by name.
pub fn validate_mesh(raw: &RawMesh) -> Result<MeshGeometry> {
    let nv = raw.vertices.len();
    if nv < 4 {
        return Err(Error::MeshDefect(format!("mesh has {nv} vertices; need at least 4")));
    }
    if raw.faces.is_empty() {
        return Err(Error::MeshDefect("mesh has no faces".into()));
    }

    // Directed edge census: a closed consistently oriented mesh uses every
    // undirected edge exactly once in each direction.
    let mut directed: std::collections::HashMap<(u32, u32), u32> = std::collections::HashMap::new();
    for (fi, f) in raw.faces.iter().enumerate() {
        for k in 0..3 {
            let a = f[k];
            let b = f[(k + 1) % 3];
            let entry = directed.entry((a, b)).or_insert(0);
            *entry += 1;
            if *entry > 1 {
                return Err(Error::MeshDefect(format!(
                    "directed edge {a}->{b} appears twice (face {fi}); mesh is not consistently oriented or not a manifold"
                )));
            }
        }
    }
    for (&(a, b), _) in directed.iter() {
        if !directed.contains_key(&(b, a)) {
            return Err(Error::MeshDefect(format!(
                "edge {a}-{b} is used in only one direction; mesh is not closed (or not orientable)"
            )));
        }
    }

    let mut vertex_areas = vec![0.0f64; nv];
    let mut vertex_normals = vec![[0.0f64; 3]; nv];
    let mut total_area = 0.0;
    for (fi, f) in raw.faces.iter().enumerate() {
        let p0 = raw.vertices[f[0] as usize];
        let p1 = raw.vertices[f[1] as usize];
        let p2 = raw.vertices[f[2] as usize];
        let n = cross(sub(p1, p0), sub(p2, p0));
        let area2 = norm(n);
        if area2 <= 0.0 || !area2.is_finite() {
            return Err(Error::MeshDefect(format!("face {fi} is degenerate (zero area)")));
        }
        let area = 0.5 * area2;
        total_area += area;
        for &v in f {
            vertex_areas[v as usize] += area / 3.0;
            for c in 0..3 {
                vertex_normals[v as usize][c] += 0.5 * n[c];
            }
        }
    }
    for (vi, a) in vertex_areas.iter().enumerate() {
        if *a <= 0.0 {
            return Err(Error::MeshDefect(format!("vertex {vi} belongs to no face")));
        }
    }
    for nrm in &mut vertex_normals {
        let len = norm(*nrm);
        if len <= 0.0 || !len.is_finite() {
            return Err(Error::MeshDefect("vertex normal degenerated to zero".into()));
        }
        for c in nrm.iter_mut() {
            *c /= len;
        }
    }

    // Undirected edges with Euclidean lengths, CSR adjacency.
    let mut neighbor_lists: Vec<Vec<(u32, f64)>> = vec![Vec::new(); nv];
    let mut edge_sum = 0.0;
    let mut edge_count = 0usize;
    for (&(a, b), _) in directed.iter() {
        if a < b {
            let len = norm(sub(raw.vertices[a as usize], raw.vertices[b as usize]));
            if len <= 0.0 {
                return Err(Error::MeshDefect(format!("edge {a}-{b} has zero length")));
            }
            neighbor_lists[a as usize].push((b, len));
            neighbor_lists[b as usize].push((a, len));
            edge_sum += len;
            edge_count += 1;
        }
    }
    for list in &mut neighbor_lists {
        list.sort_by_key(|&(v, _)| v);
    }
    let mut adjacency_offsets = Vec::with_capacity(nv + 1);
    let mut adjacency = Vec::new();
    adjacency_offsets.push(0);
    for list in &neighbor_lists {
        adjacency.extend_from_slice(list);
        adjacency_offsets.push(adjacency.len());
    }

    // Connectedness via BFS on the edge graph.
    let mut seen = vec![false; nv];
    let mut stack = vec![0u32];
    seen[0] = true;
    let mut reached = 1usize;
    while let Some(v) = stack.pop() {
        let (lo, hi) = (adjacency_offsets[v as usize], adjacency_offsets[v as usize + 1]);
        for &(u, _) in &adjacency[lo..hi] {
            if !seen[u as usize] {
                seen[u as usize] = true;
                reached += 1;
                stack.push(u);
            }
        }
    }
    if reached != nv {
        return Err(Error::MeshDefect(format!(
            "mesh is disconnected: reached {reached} of {nv} vertices"
        )));
    }

    Ok(MeshGeometry {
        vertex_areas,
        vertex_normals,
        adjacency_offsets,
        adjacency,
        mean_edge_length: edge_sum / edge_count as f64,
        total_area,
    })
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // min-heap on distance
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest path distances over the weighted edge graph.
pub fn dijkstra(geometry: &MeshGeometry, source: usize) -> Vec<f64> {
    let nv = geometry.adjacency_offsets.len() - 1;
    let mut dist = vec![f64::INFINITY; nv];
    let mut done = vec![false; nv];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(HeapEntry { dist: 0.0, node: source as u32 });
    while let Some(HeapEntry { dist: d, node }) = heap.pop() {
        let v = node as usize;
        if done[v] {
            continue;
        }
        done[v] = true;
        let (lo, hi) = (geometry.adjacency_offsets[v], geometry.adjacency_offsets[v + 1]);
        for &(u, len) in &geometry.adjacency[lo..hi] {
            let nd = d + len;
            if nd < dist[u as usize] {
                dist[u as usize] = nd;
                heap.push(HeapEntry { dist: nd, node: u });
            }
        }
    }
    dist
}

/// Build a sampling from a validated mesh: barycentric-area weights and the
/// cached all-pairs graph metric (parallel over source vertices).
pub fn build_from_mesh(spec: ManifoldSpec, raw: &RawMesh, cache_cap: usize) -> Result<ManifoldSampling> {
    let geometry = validate_mesh(raw)?;
    let nv = raw.vertices.len();
    if nv > cache_cap {
        return Err(Error::MeshTooLarge { vertices: nv, cap: cache_cap });
    }
    let rows: Vec<Vec<f64>> = (0..nv)
        .into_par_iter()
        .map(|i| {
            let full = dijkstra(&geometry, i);
            full[i..].to_vec()
        })
        .collect();
    let cache = packed_from_rows(nv, |i, out| out.copy_from_slice(&rows[i]));
    let mut coords = Vec::with_capacity(3 * nv);
    let mut normals = Vec::with_capacity(3 * nv);
    for (v, n) in raw.vertices.iter().zip(&geometry.vertex_normals) {
        coords.extend_from_slice(v);
        normals.extend_from_slice(n);
    }
    Ok(sampling_from_parts(
        spec,
        coords,
        geometry.vertex_areas.clone(),
        geometry.mean_edge_length,
        cache,
        normals,
    ))
}

/// Octahedron with outward-oriented faces; shared by tests and docs.
pub fn octahedron() -> RawMesh {
    let vertices = vec![
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ];
    let faces = vec![
        [0, 2, 4],
        [2, 1, 4],
        [1, 3, 4],
        [3, 0, 4],
        [2, 0, 5],
        [1, 2, 5],
        [3, 1, 5],
        [0, 3, 5],
    ];
    RawMesh { vertices, faces }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::ManifoldSpec;

    fn mesh_spec() -> ManifoldSpec {
        ManifoldSpec::TriMesh { path: "<memory>".into() }
    }

    #[test]
    fn octahedron_is_valid_and_area_matches() {
        let geometry = validate_mesh(&octahedron()).unwrap();
        // Oracle: 8 equilateral triangles of side sqrt(2), area sqrt(3)/2 each.
        let expected = 4.0 * 3.0f64.sqrt();
        assert!((geometry.total_area - expected).abs() < 1e-12);
        let sampling = build_from_mesh(mesh_spec(), &octahedron(), 8192).unwrap();
        assert!((sampling.total_volume() - expected).abs() < 1e-12);
    }

    #[test]
    fn open_mesh_rejected_by_name() {
        let mut raw = octahedron();
        raw.faces.pop();
        let err = validate_mesh(&raw).unwrap_err().to_string();
        assert!(err.contains("not closed"), "{err}");
    }

    #[test]
    fn misoriented_mesh_rejected() {
        let mut raw = octahedron();
        raw.faces[0] = [2, 0, 4]; // flip one face
        let err = validate_mesh(&raw).unwrap_err().to_string();
        assert!(err.contains("direction") || err.contains("oriented"), "{err}");
    }

    #[test]
    fn disconnected_mesh_rejected() {
        let mut raw = octahedron();
        let second = octahedron();
        let offset = raw.vertices.len() as u32;
        raw.vertices
            .extend(second.vertices.iter().map(|v| [v[0] + 10.0, v[1], v[2]]));
        raw.faces
            .extend(second.faces.iter().map(|f| [f[0] + offset, f[1] + offset, f[2] + offset]));
        let err = validate_mesh(&raw).unwrap_err().to_string();
        assert!(err.contains("disconnected"), "{err}");
    }

    #[test]
    fn graph_distance_at_least_chordal() {
        let sampling = build_from_mesh(mesh_spec(), &octahedron(), 8192).unwrap();
        let raw = octahedron();
        for i in 0..raw.vertices.len() {
            for j in 0..raw.vertices.len() {
                let chord = norm(sub(raw.vertices[i], raw.vertices[j]));
                assert!(sampling.distance(i, j) >= chord - 1e-12);
            }
        }
        // antipodal vertices: two unit-sqrt(2) edges
        assert!((sampling.distance(0, 1) - 2.0 * 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cache_cap_rejects_large_mesh() {
        let err = build_from_mesh(mesh_spec(), &octahedron(), 4).unwrap_err();
        assert!(matches!(err, Error::MeshTooLarge { vertices: 6, cap: 4 }));
    }

    #[test]
    fn parse_off_roundtrip() {
        let raw = octahedron();
        let mut text = String::from("OFF\n# octahedron\n6 8 12\n");
        for v in &raw.vertices {
            text.push_str(&format!("{} {} {}\n", v[0], v[1], v[2]));
        }
        for f in &raw.faces {
            text.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
        }
        let parsed = parse_off(text.as_bytes()).unwrap();
        assert_eq!(parsed, raw);
        assert_eq!(parse_mesh(text.as_bytes()).unwrap(), raw);
    }

    #[test]
    fn parse_off_rejects_garbage() {
        assert!(parse_off(b"OFF\n2 1 0\n0 0 0\n1 1 1\n3 0 1 5\n").is_err());
        assert!(parse_off(b"OFF\n1000000000 0 0\n").is_err());
        assert!(parse_off(b"NOFF\n").is_err());
        assert!(parse_off(b"OFF\n1 0 0\n0 0 nan\n").is_err());
        assert!(parse_off(&[0xff, 0xfe, b'O']).is_err());
    }

    #[test]
    fn parse_ply_roundtrip() {
        let raw = octahedron();
        let mut text = String::from(
            "ply\nformat ascii 1.0\ncomment octahedron\nelement vertex 6\nproperty float x\nproperty float y\nproperty float z\nelement face 8\nproperty list uchar int vertex_indices\nend_header\n",
        );
        for v in &raw.vertices {
            text.push_str(&format!("{} {} {}\n", v[0], v[1], v[2]));
        }
        for f in &raw.faces {
            text.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
        }
        let parsed = parse_ply(text.as_bytes()).unwrap();
        assert_eq!(parsed, raw);
        assert_eq!(parse_mesh(text.as_bytes()).unwrap(), raw);
    }

    #[test]
    fn parse_ply_rejects_binary_and_extras() {
        assert!(parse_ply(b"ply\nformat binary_little_endian 1.0\nend_header\n").is_err());
        assert!(parse_ply(b"ply\nformat ascii 1.0\nelement edge 2\nend_header\n").is_err());
        assert!(parse_ply(b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nend_header\n0 0\n").is_err());
    }
}
