use std::collections::HashMap;

use crate::error::{Result, SmpbeError};
use crate::model::ChargeSystem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sphere {
    pub center: [f64; 3],
    pub radius: f64,
}

/// Solute region given as a union of balls; `phi < 0` inside.
///
/// `phi(r) = min_i (|r - c_i| - r_i)`. Far from every sphere the value
/// returned is a positive lower bound of the true minimum.
#[derive(Debug, Clone)]
pub struct LevelSetGeometry {
    spheres: Vec<Sphere>,
    cell: f64,
    max_radius: f64,
    cells: HashMap<[i64; 3], Vec<usize>>,
}

const BRUTE_FORCE_LIMIT: usize = 32;

impl LevelSetGeometry {
    pub fn new(spheres: Vec<Sphere>) -> Result<Self> {
        for (i, s) in spheres.iter().enumerate() {
            if !(s.radius > 0.0 && s.radius.is_finite()) || s.center.iter().any(|c| !c.is_finite()) {
                return Err(SmpbeError::Geometry(format!("sphere {i} is invalid: {s:?}")));
            }
        }
        let max_radius = spheres.iter().map(|s| s.radius).fold(0.0, f64::max);
        let cell = 2.0 * max_radius + 2.0;
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        if spheres.len() > BRUTE_FORCE_LIMIT {
            for (i, s) in spheres.iter().enumerate() {
                cells.entry(cell_of(s.center, cell)).or_default().push(i);
            }
        }
        Ok(Self { spheres, cell, max_radius, cells })
    }

    /// Spheres of all atoms with positive radius.
    pub fn from_atoms(charges: &ChargeSystem) -> Result<Self> {
        Self::new(
            charges
                .atoms()
                .iter()
                .filter(|a| a.radius > 0.0)
                .map(|a| Sphere { center: a.position, radius: a.radius })
                .collect(),
        )
    }

    pub fn spheres(&self) -> &[Sphere] {
        &self.spheres
    }

    fn candidates(&self, p: [f64; 3]) -> Vec<usize> {
        if self.spheres.len() <= BRUTE_FORCE_LIMIT {
            return (0..self.spheres.len()).collect();
        }
        let c = cell_of(p, self.cell);
        let mut out = Vec::new();
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if let Some(v) = self.cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        out.extend_from_slice(v);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Signed distances `|p - c_i| - r_i` of nearby spheres, sorted by sphere index.
    fn distances(&self, p: [f64; 3]) -> Vec<(usize, f64)> {
        self.candidates(p)
            .into_iter()
            .map(|i| {
                let s = &self.spheres[i];
                (i, norm(sub(p, s.center)) - s.radius)
            })
            .collect()
    }

    pub fn phi(&self, p: [f64; 3]) -> f64 {
        // Cells cover at least one cell width around p, so an unchecked
        // sphere is at least `cell - max_radius` away.
        let bound = if self.spheres.len() <= BRUTE_FORCE_LIMIT { f64::INFINITY } else { self.cell - self.max_radius };
        self.distances(p).into_iter().map(|(_, d)| d).fold(bound, f64::min)
    }

    /// Projection of `p` onto the surface, or `None` when no well-defined
    /// nearby surface point exists.
    ///
    /// The nearest sphere is used unless its projection falls inside another
    /// sphere or two spheres tie; then the point is projected onto the
    /// intersection circle of the two spheres.
    pub fn project(&self, p: [f64; 3]) -> Option<[f64; 3]> {
        let mut d = self.distances(p);
        if d.is_empty() {
            return None;
        }
        d.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let (ia, da) = d[0];
        let tie = d.len() > 1 && (d[1].1 - da).abs() <= 1e-12 * (1.0 + da.abs());
        if !tie {
            if let Some(q) = self.project_sphere(ia, p) {
                if self.phi(q).abs() <= 1e-10 {
                    return Some(q);
                }
            }
        }
        // The projection failed; try the circle with each runner-up sphere in order.
        for &(ib, _) in d.iter().skip(1).take(4) {
            if let Some(q) = circle_projection(&self.spheres[ia], &self.spheres[ib], p) {
                if self.phi(q).abs() <= 1e-10 {
                    return Some(q);
                }
            }
        }
        None
    }

    fn project_sphere(&self, i: usize, p: [f64; 3]) -> Option<[f64; 3]> {
        let s = &self.spheres[i];
        let v = sub(p, s.center);
        let r = norm(v);
        if r < 1e-12 {
            return None;
        }
        Some(add(s.center, scale(v, s.radius / r)))
    }

    /// Bounding box of the union of spheres.
    pub fn bounds(&self) -> Option<([f64; 3], [f64; 3])> {
        let mut it = self.spheres.iter();
        let first = it.next()?;
        let mut lo = first.center.map(|c| c - first.radius);
        let mut hi = first.center.map(|c| c + first.radius);
        for s in it {
            for d in 0..3 {
                lo[d] = lo[d].min(s.center[d] - s.radius);
                hi[d] = hi[d].max(s.center[d] + s.radius);
            }
        }
        Some((lo, hi))
    }
}

fn cell_of(p: [f64; 3], cell: f64) -> [i64; 3] {
    p.map(|x| (x / cell).floor() as i64)
}

fn circle_projection(a: &Sphere, b: &Sphere, p: [f64; 3]) -> Option<[f64; 3]> {
    let ab = sub(b.center, a.center);
    let dist = norm(ab);
    if dist < 1e-14 || dist >= a.radius + b.radius || dist <= (a.radius - b.radius).abs() {
        return None;
    }
    let n = scale(ab, 1.0 / dist);
    let x = (dist * dist + a.radius * a.radius - b.radius * b.radius) / (2.0 * dist);
    let rc2 = a.radius * a.radius - x * x;
    if rc2 <= 0.0 {
        return None;
    }
    let rc = rc2.sqrt();
    let center = add(a.center, scale(n, x));
    let v = sub(p, center);
    let inplane = sub(v, scale(n, dot(v, n)));
    let len = norm(inplane);
    if len < 1e-12 {
        return None;
    }
    Some(add(center, scale(inplane, rc / len)))
}

#[inline]
pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
#[inline]
pub(crate) fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}
#[inline]
pub(crate) fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}
#[inline]
pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
#[inline]
pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}
#[inline]
pub(crate) fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_balls() -> LevelSetGeometry {
        LevelSetGeometry::new(vec![
            Sphere { center: [1.0, 0.0, 0.0], radius: 1.5 },
            Sphere { center: [-1.0, 0.0, 0.0], radius: 1.5 },
        ])
        .unwrap()
    }

    #[test]
    fn phi_signs() {
        let g = two_balls();
        assert!(g.phi([1.0, 0.0, 0.0]) < 0.0);
        assert!(g.phi([-1.0, 0.0, 0.0]) < 0.0);
        assert!(g.phi([0.0, 3.0, 0.0]) > 0.0);
        assert!((g.phi([2.5, 0.0, 0.0])).abs() < 1e-15);
    }

    #[test]
    fn crease_projection_lands_on_circle() {
        let g = two_balls();
        let q = g.project([0.0, 1.2, 0.0]).unwrap();
        assert!(g.phi(q).abs() < 1e-12);
        assert!(q[0].abs() < 1e-14);
        assert!((q[1] - 1.25f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn projection_is_mirror_symmetric() {
        let g = two_balls();
        for p in [[0.3, 1.1, 0.4], [1.7, -0.2, 1.2], [0.05, 1.3, 0.1]] {
            let q = g.project(p).unwrap();
            let qm = g.project([-p[0], p[1], p[2]]).unwrap();
            assert!((q[0] + qm[0]).abs() < 1e-14 && (q[1] - qm[1]).abs() < 1e-14 && (q[2] - qm[2]).abs() < 1e-14);
        }
    }

    #[test]
    fn cell_list_matches_brute_force() {
        let mut spheres = Vec::new();
        for i in 0..60 {
            let t = i as f64;
            spheres.push(Sphere { center: [(t * 1.3).sin() * 8.0, (t * 0.7).cos() * 8.0, t * 0.2 - 6.0], radius: 1.0 + 0.01 * t });
        }
        let g = LevelSetGeometry::new(spheres.clone()).unwrap();
        for i in 0..200 {
            let t = i as f64;
            let p = [(t * 0.37).sin() * 10.0, (t * 0.11).cos() * 10.0, (t * 0.23).sin() * 8.0];
            let exact = spheres.iter().map(|s| norm(sub(p, s.center)) - s.radius).fold(f64::INFINITY, f64::min);
            let got = g.phi(p);
            assert!(got <= exact + 1e-12);
            assert!(got.signum() == exact.signum());
            if exact < 1.0 {
                assert_eq!(got, exact);
            }
        }
    }
}
