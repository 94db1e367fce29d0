use super::{signed_volume, InterfaceMesh};

/// Uniform bucket grid over the mesh bounding box; each bucket lists the tets
/// whose bounding boxes overlap it.
#[derive(Debug, Clone)]
pub struct Locator {
    lo: [f64; 3],
    cell: f64,
    n: [usize; 3],
    offsets: Vec<usize>,
    items: Vec<u32>,
}

const BARY_TOL: f64 = 1e-10;

impl Locator {
    pub fn new(mesh: &InterfaceMesh) -> Self {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &mesh.vertices {
            for d in 0..3 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        if mesh.tets.is_empty() {
            return Self { lo: [0.0; 3], cell: 1.0, n: [1; 3], offsets: vec![0, 0], items: vec![] };
        }
        let extent = (0..3).map(|d| hi[d] - lo[d]).fold(0.0, f64::max).max(1e-12);
        let avg = (mesh.total_volume().abs() / mesh.tets.len() as f64).cbrt().max(extent * 1e-6);
        let cell = (2.0 * avg).max(extent / 200.0);
        let n = [0, 1, 2].map(|d| (((hi[d] - lo[d]) / cell).floor() as usize + 1).max(1));
        let total = n[0] * n[1] * n[2];
        let range = |t: usize| -> ([usize; 3], [usize; 3]) {
            let p = mesh.tet_points(t);
            let mut a = [usize::MAX; 3];
            let mut b = [0; 3];
            for d in 0..3 {
                let mn = p.iter().map(|q| q[d]).fold(f64::INFINITY, f64::min);
                let mx = p.iter().map(|q| q[d]).fold(f64::NEG_INFINITY, f64::max);
                a[d] = clamp_cell((mn - lo[d]) / cell - 1e-9, n[d]);
                b[d] = clamp_cell((mx - lo[d]) / cell + 1e-9, n[d]);
            }
            (a, b)
        };
        let mut counts = vec![0usize; total + 1];
        for t in 0..mesh.tets.len() {
            let (a, b) = range(t);
            for k in a[2]..=b[2] {
                for j in a[1]..=b[1] {
                    for i in a[0]..=b[0] {
                        counts[i + n[0] * (j + n[1] * k) + 1] += 1;
                    }
                }
            }
        }
        for i in 0..total {
            counts[i + 1] += counts[i];
        }
        let offsets = counts.clone();
        let mut fill = counts;
        let mut items = vec![0u32; offsets[total]];
        for t in 0..mesh.tets.len() {
            let (a, b) = range(t);
            for k in a[2]..=b[2] {
                for j in a[1]..=b[1] {
                    for i in a[0]..=b[0] {
                        let c = i + n[0] * (j + n[1] * k);
                        items[fill[c]] = t as u32;
                        fill[c] += 1;
                    }
                }
            }
        }
        Self { lo, cell, n, offsets, items }
    }

    /// Containing tet and barycentric coordinates. Points on shared faces
    /// resolve to the tet in which they are most interior.
    pub fn locate(&self, mesh: &InterfaceMesh, p: [f64; 3]) -> Option<(usize, [f64; 4])> {
        let mut c = [0usize; 3];
        for d in 0..3 {
            let x = (p[d] - self.lo[d]) / self.cell;
            if x < -1e-9 || x > self.n[d] as f64 + 1e-9 {
                return None;
            }
            c[d] = clamp_cell(x, self.n[d]);
        }
        let b = c[0] + self.n[0] * (c[1] + self.n[1] * c[2]);
        let mut best: Option<(usize, [f64; 4], f64)> = None;
        for &t in &self.items[self.offsets[b]..self.offsets[b + 1]] {
            let t = t as usize;
            let bary = barycentric(mesh.tet_points(t), p);
            let m = bary.iter().cloned().fold(f64::INFINITY, f64::min);
            if m >= -BARY_TOL && best.as_ref().map_or(true, |x| m > x.2) {
                best = Some((t, bary, m));
            }
        }
        best.map(|(t, b, _)| (t, b))
    }
}

fn clamp_cell(x: f64, n: usize) -> usize {
    if x <= 0.0 {
        0
    } else {
        (x.floor() as usize).min(n - 1)
    }
}

pub(crate) fn barycentric(v: [[f64; 3]; 4], p: [f64; 3]) -> [f64; 4] {
    let vol = signed_volume(v[0], v[1], v[2], v[3]);
    [
        signed_volume(p, v[1], v[2], v[3]) / vol,
        signed_volume(v[0], p, v[2], v[3]) / vol,
        signed_volume(v[0], v[1], p, v[3]) / vol,
        signed_volume(v[0], v[1], v[2], p) / vol,
    ]
}
