use std::collections::HashMap;

use super::geometry::{add, norm, scale, sub};
use super::{signed_volume, InterfaceMesh, LatticeCoupling, LevelSetGeometry, Region};
use crate::error::{Result, SmpbeError};
use crate::partition::{BoxPartition, CENTRAL};

const SNAP_FRACTION: f64 = 0.25;
const MAX_SNAP_MOVE: f64 = 0.3;
const MIN_VOLUME_FRACTION: f64 = 1e-12;

/// Meshes the central box: Kuhn tetrahedra on every lattice cube, vertices
/// near the surface snapped onto it, remaining cut edges split, and the
/// affected tets subdivided so that no tet straddles the surface.
///
/// The Kuhn split is mirrored along x in cubes with an odd global x index,
/// which keeps the mesh conforming and makes it symmetric under x -> -x.
pub fn build_central_mesh(partition: &BoxPartition, geom: &LevelSetGeometry) -> Result<InterfaceMesh> {
    let h = partition.h;
    let central = *partition.central();
    check_separation(partition, geom)?;

    let n7 = central.dims()[0];
    let np = n7 + 1;
    let local = |i: usize, j: usize, k: usize| i + np * (j + np * k);

    let mut vertices = Vec::with_capacity(np * np * np);
    let mut lattice_links = Vec::with_capacity(np * np * np);
    let mut phi = Vec::with_capacity(np * np * np);
    for ijk in central.points() {
        let p = partition.lattice_point(ijk);
        vertices.push(p);
        lattice_links.push(Some(partition.lattice_index(ijk)));
        phi.push(geom.phi(p));
    }

    // Snapping, in lattice order.
    let d_range = partition.d_range;
    for (v, ijk) in central.points().enumerate() {
        let f = phi[v];
        if f == 0.0 || f.abs() >= SNAP_FRACTION * h || !d_range.contains_interior(ijk) {
            continue;
        }
        if let Some(q) = geom.project(vertices[v]) {
            if norm(sub(q, vertices[v])) <= MAX_SNAP_MOVE * h {
                vertices[v] = q;
                phi[v] = 0.0;
                lattice_links[v] = None;
            }
        }
    }
    let mut class: Vec<i8> = phi.iter().map(|&f| sign_class(f)).collect();

    let mut tets: Vec<[usize; 4]> = Vec::with_capacity(6 * n7 * n7 * n7);
    let mut regions = Vec::with_capacity(6 * n7 * n7 * n7);
    let mut cuts: HashMap<(usize, usize), usize> = HashMap::new();
    let min_vol = MIN_VOLUME_FRACTION * h * h * h;
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut pieces: Vec<([usize; 4], Region)> = Vec::new();

    for ck in 0..n7 {
        for cj in 0..n7 {
            for ci in 0..n7 {
                let flip = (central.lo[0] + ci) % 2;
                let corner = |c: usize| -> usize {
                    let x = (c & 1) ^ flip;
                    let y = (c >> 1) & 1;
                    let z = (c >> 2) & 1;
                    local(ci + x, cj + y, ck + z)
                };
                for perm in PERMS {
                    let c1 = 1 << perm[0];
                    let c2 = c1 | (1 << perm[1]);
                    let tet = [corner(0), corner(c1), corner(c2), corner(7)];
                    let cls = tet.map(|v| class[v]);
                    let has_neg = cls.contains(&-1);
                    let has_pos = cls.contains(&1);
                    if !(has_neg && has_pos) {
                        let region = if has_neg {
                            Region::Solute
                        } else if has_pos {
                            Region::Solvent
                        } else {
                            let c = centroid(tet.map(|v| vertices[v]));
                            if geom.phi(c) < 0.0 {
                                Region::Solute
                            } else {
                                Region::Solvent
                            }
                        };
                        push_oriented(tet, region, &vertices, min_vol, &mut tets, &mut regions)?;
                        continue;
                    }
                    pieces.clear();
                    {
                        let mut cut = |a: usize, b: usize| -> usize {
                            let key = (a.min(b), a.max(b));
                            if let Some(&v) = cuts.get(&key) {
                                return v;
                            }
                            let p = edge_root(geom, vertices[key.0], phi[key.0], vertices[key.1], phi[key.1], h);
                            vertices.push(p);
                            lattice_links.push(None);
                            class.push(0);
                            let id = vertices.len() - 1;
                            cuts.insert(key, id);
                            id
                        };
                        subdivide(tet, cls, &mut cut, &mut pieces);
                    }
                    let parent = signed_volume(vertices[tet[0]], vertices[tet[1]], vertices[tet[2]], vertices[tet[3]]).abs();
                    let mut sum = 0.0;
                    for &(piece, region) in &pieces {
                        sum += push_oriented(piece, region, &vertices, min_vol, &mut tets, &mut regions)?;
                    }
                    if (sum - parent).abs() > 1e-9 * parent {
                        return Err(SmpbeError::DegenerateTet {
                            location: centroid(tet.map(|v| vertices[v])),
                            volume: parent - sum,
                        });
                    }
                }
            }
        }
    }

    let interface_facets = interface_facets(&tets, &regions, &class, &vertices);
    let mut boundary_nodes = Vec::new();
    for (v, ijk) in central.points().enumerate() {
        if central.on_boundary(ijk) {
            boundary_nodes.push(v);
        }
    }
    let mut mesh = InterfaceMesh::from_parts(vertices, tets, regions, interface_facets);
    mesh.boundary_nodes = boundary_nodes;
    mesh.lattice_links = lattice_links;
    mesh.coupling = LatticeCoupling::Exact;
    Ok(mesh)
}

fn sign_class(f: f64) -> i8 {
    if f < 0.0 {
        -1
    } else if f > 0.0 {
        1
    } else {
        0
    }
}

fn centroid(p: [[f64; 3]; 4]) -> [f64; 3] {
    [0, 1, 2].map(|d| 0.25 * (p[0][d] + p[1][d] + p[2][d] + p[3][d]))
}

/// Every sphere that reaches the central box must stay `2h` inside D.
fn check_separation(partition: &BoxPartition, geom: &LevelSetGeometry) -> Result<()> {
    let (c_lo, c_hi) = partition.box_cube(CENTRAL);
    let d_lo = partition.d.lower;
    let d_hi = partition.d.upper();
    let gap = 2.0 * partition.h;
    for (i, s) in geom.spheres().iter().enumerate() {
        let mut dist2 = 0.0;
        for d in 0..3 {
            let e = (c_lo[d] - s.center[d]).max(0.0).max(s.center[d] - c_hi[d]);
            dist2 += e * e;
        }
        if dist2 > s.radius * s.radius {
            log::warn!("sphere {i} lies outside the central box and is ignored");
            continue;
        }
        for d in 0..3 {
            let lo = s.center[d] - s.radius - d_lo[d];
            let hi = d_hi[d] - (s.center[d] + s.radius);
            if lo < gap - 1e-12 || hi < gap - 1e-12 {
                return Err(SmpbeError::Geometry(format!(
                    "sphere {i} (center {:?}, radius {}) comes closer than 2h = {gap} to the boundary of D; enlarge D or refine",
                    s.center, s.radius
                )));
            }
        }
    }
    Ok(())
}

fn push_oriented(
    mut t: [usize; 4],
    region: Region,
    vertices: &[[f64; 3]],
    min_vol: f64,
    tets: &mut Vec<[usize; 4]>,
    regions: &mut Vec<Region>,
) -> Result<f64> {
    let mut vol = signed_volume(vertices[t[0]], vertices[t[1]], vertices[t[2]], vertices[t[3]]);
    if vol < 0.0 {
        t.swap(1, 2);
        vol = -vol;
    }
    if vol < min_vol {
        return Err(SmpbeError::DegenerateTet { location: centroid(t.map(|v| vertices[v])), volume: vol });
    }
    tets.push(t);
    regions.push(region);
    Ok(vol)
}

/// Zero of phi on the segment, starting from the lower-index endpoint `a`.
fn edge_root(geom: &LevelSetGeometry, pa: [f64; 3], fa: f64, pb: [f64; 3], fb: f64, h: f64) -> [f64; 3] {
    debug_assert!(fa * fb < 0.0);
    let dir = sub(pb, pa);
    let at = |t: f64| add(pa, scale(dir, t));
    let (mut t0, mut f0, mut t1, mut f1) = (0.0, fa, 1.0, fb);
    let mut side = 0i8;
    let mut t = 0.5;
    let tol = 1e-14 * h.max(1.0);
    for _ in 0..200 {
        t = (t0 * f1 - t1 * f0) / (f1 - f0);
        let ft = geom.phi(at(t));
        if ft.abs() <= tol || (t1 - t0).abs() < 1e-16 {
            break;
        }
        if (ft < 0.0) == (f1 < 0.0) {
            t1 = t;
            f1 = ft;
            if side == -1 {
                f0 *= 0.5;
            }
            side = -1;
        } else {
            t0 = t;
            f0 = ft;
            if side == 1 {
                f1 *= 0.5;
            }
            side = 1;
        }
    }
    at(t)
}

fn region_of(class: i8) -> Region {
    if class < 0 {
        Region::Solute
    } else {
        Region::Solvent
    }
}

/// Splits a tet with both signs present into pieces that each lie on one side.
fn subdivide(
    tet: [usize; 4],
    cls: [i8; 4],
    cut: &mut impl FnMut(usize, usize) -> usize,
    out: &mut Vec<([usize; 4], Region)>,
) {
    let pick = |c: i8| -> Vec<usize> { (0..4).filter(|&i| cls[i] == c).map(|i| tet[i]).collect() };
    let (neg, zer, pos) = (pick(-1), pick(0), pick(1));
    match (neg.len(), zer.len(), pos.len()) {
        (1, 0, 3) | (3, 0, 1) => {
            let (p, qs, pc) = if neg.len() == 1 { (neg[0], pos, -1) } else { (pos[0], neg, 1) };
            let c = [cut(p, qs[0]), cut(p, qs[1]), cut(p, qs[2])];
            out.push(([p, c[0], c[1], c[2]], region_of(pc)));
            for t in split_prism(c, [qs[0], qs[1], qs[2]]) {
                out.push((t, region_of(-pc)));
            }
        }
        (2, 0, 2) => {
            let c11 = cut(neg[0], pos[0]);
            let c12 = cut(neg[0], pos[1]);
            let c21 = cut(neg[1], pos[0]);
            let c22 = cut(neg[1], pos[1]);
            for t in split_prism([neg[0], c11, c12], [neg[1], c21, c22]) {
                out.push((t, Region::Solute));
            }
            for t in split_prism([pos[0], c11, c21], [pos[1], c12, c22]) {
                out.push((t, Region::Solvent));
            }
        }
        (1, 1, 2) | (2, 1, 1) => {
            let (p, qs, pc) = if neg.len() == 1 { (neg[0], pos, -1) } else { (pos[0], neg, 1) };
            let z = zer[0];
            let c1 = cut(p, qs[0]);
            let c2 = cut(p, qs[1]);
            out.push(([p, z, c1, c2], region_of(pc)));
            for t in split_pyramid(z, [c1, qs[0], qs[1], c2]) {
                out.push((t, region_of(-pc)));
            }
        }
        (1, 2, 1) => {
            let c = cut(neg[0], pos[0]);
            out.push(([neg[0], zer[0], zer[1], c], Region::Solute));
            out.push(([pos[0], zer[0], zer[1], c], Region::Solvent));
        }
        other => unreachable!("tet with classes {other:?} does not need subdivision"),
    }
}

/// Three tets for the prism with triangles `a`, `b` and rails `a[i]-b[i]`.
/// Every quad face is split along the diagonal through its lowest-index
/// vertex, so neighbors sharing the quad agree.
pub(crate) fn split_prism(mut a: [usize; 3], mut b: [usize; 3]) -> [[usize; 4]; 3] {
    let all = [a[0], a[1], a[2], b[0], b[1], b[2]];
    let mut m = (0..6).min_by_key(|&i| all[i]).unwrap();
    if m >= 3 {
        std::mem::swap(&mut a, &mut b);
        m -= 3;
    }
    let a = [a[m], a[(m + 1) % 3], a[(m + 2) % 3]];
    let b = [b[m], b[(m + 1) % 3], b[(m + 2) % 3]];
    let quad_min = a[1].min(a[2]).min(b[1]).min(b[2]);
    if quad_min == a[1] || quad_min == b[2] {
        [[a[0], b[0], b[1], b[2]], [a[0], a[1], a[2], b[2]], [a[0], a[1], b[2], b[1]]]
    } else {
        [[a[0], b[0], b[1], b[2]], [a[0], a[1], a[2], b[1]], [a[0], a[2], b[2], b[1]]]
    }
}

/// Two tets for the pyramid with apex `z` over the cyclic quad `q`.
pub(crate) fn split_pyramid(z: usize, q: [usize; 4]) -> [[usize; 4]; 2] {
    let m = (0..4).min_by_key(|&i| q[i]).unwrap();
    if m % 2 == 0 {
        [[z, q[0], q[1], q[2]], [z, q[0], q[2], q[3]]]
    } else {
        [[z, q[1], q[2], q[3]], [z, q[1], q[3], q[0]]]
    }
}

fn interface_facets(tets: &[[usize; 4]], regions: &[Region], class: &[i8], vertices: &[[f64; 3]]) -> Vec<[usize; 3]> {
    const FACES: [[usize; 4]; 4] = [[1, 2, 3, 0], [0, 2, 3, 1], [0, 1, 3, 2], [0, 1, 2, 3]];
    let mut faces: Vec<([usize; 3], usize, usize)> = Vec::new();
    for (t, tet) in tets.iter().enumerate() {
        for f in FACES {
            let tri = [tet[f[0]], tet[f[1]], tet[f[2]]];
            if tri.iter().all(|&v| class[v] == 0) {
                let mut key = tri;
                key.sort_unstable();
                faces.push((key, t, tet[f[3]]));
            }
        }
    }
    faces.sort_unstable();
    let mut out = Vec::new();
    let mut i = 0;
    while i < faces.len() {
        let mut j = i + 1;
        while j < faces.len() && faces[j].0 == faces[i].0 {
            j += 1;
        }
        if j - i == 2 && regions[faces[i].1] != regions[faces[i + 1].1] {
            let (key, _, opposite) = if regions[faces[i].1] == Region::Solute { faces[i] } else { faces[i + 1] };
            let mut tri = key;
            // Orient the normal away from the solute tet.
            if signed_volume(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]], vertices[opposite]) > 0.0 {
                tri.swap(1, 2);
            }
            out.push(tri);
        }
        i = j;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prism_volume_ok(a: [usize; 3], b: [usize; 3]) {
        let pts: Vec<[f64; 3]> = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [1.0, 0.0, 1.0],
            [0.0, 1.0, 1.0],
        ];
        // Relabel vertices with the given global indices.
        let mut pos = HashMap::new();
        for i in 0..3 {
            pos.insert(a[i], pts[i]);
            pos.insert(b[i], pts[i + 3]);
        }
        let total: f64 = split_prism(a, b)
            .iter()
            .map(|t| signed_volume(pos[&t[0]], pos[&t[1]], pos[&t[2]], pos[&t[3]]).abs())
            .sum();
        assert!((total - 0.5).abs() < 1e-14, "prism {a:?}/{b:?} volume {total}");
    }

    #[test]
    fn prism_split_covers_prism() {
        let ids = [10, 3, 7, 5, 1, 12];
        // All relabelings of a fixed id multiset.
        let mut perm = [0, 1, 2, 3, 4, 5];
        for _ in 0..720 {
            let a = [ids[perm[0]], ids[perm[1]], ids[perm[2]]];
            let b = [ids[perm[3]], ids[perm[4]], ids[perm[5]]];
            prism_volume_ok(a, b);
            next_permutation(&mut perm);
        }
    }

    fn next_permutation(p: &mut [usize; 6]) {
        let mut i = 5;
        while i > 0 && p[i - 1] >= p[i] {
            i -= 1;
        }
        if i == 0 {
            p.reverse();
            return;
        }
        let mut j = 5;
        while p[j] <= p[i - 1] {
            j -= 1;
        }
        p.swap(i - 1, j);
        p[i..].reverse();
    }

    #[test]
    fn pyramid_split_uses_min_diagonal() {
        let t = split_pyramid(9, [4, 2, 8, 6]);
        assert!(t.iter().all(|x| x.contains(&2) && x.contains(&6)));
        let t = split_pyramid(9, [1, 2, 8, 6]);
        assert!(t.iter().all(|x| x.contains(&1) && x.contains(&8)));
    }
}
