//! Domain, global lattice and the seven overlapped boxes.
//!
//! Every box face lies on a lattice plane, so boxes are stored as inclusive
//! ranges of global lattice indices. Boxes are numbered `0..7`; index `k`
//! stands for Ω_{k+1}, and [`CENTRAL`] is the central box Ω₇.

use crate::error::{Result, SmpbeError};
use crate::model::ChargeSystem;

pub const CENTRAL: usize = 6;
pub const NUM_BOXES: usize = 7;

/// Axis-aligned cube `lower + [0, side]³`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cube {
    pub lower: [f64; 3],
    pub side: f64,
}

impl Cube {
    pub fn new(lower: [f64; 3], side: f64) -> Self {
        Self { lower, side }
    }

    /// Cube with the given center.
    pub fn centered(center: [f64; 3], side: f64) -> Self {
        Self { lower: center.map(|c| c - 0.5 * side), side }
    }

    pub fn upper(&self) -> [f64; 3] {
        self.lower.map(|a| a + self.side)
    }

    pub fn center(&self) -> [f64; 3] {
        self.lower.map(|a| a + 0.5 * self.side)
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|d| p[d] >= self.lower[d] && p[d] <= self.lower[d] + self.side)
    }
}

/// Smallest cube centered on the atom centroid that contains every atom
/// sphere inflated by `margin`.
pub fn bounding_box_for(charges: &ChargeSystem, margin: f64) -> Cube {
    let c = charges.centroid();
    let mut half = 0.0f64;
    for a in charges.atoms() {
        for d in 0..3 {
            half = half.max((a.position[d] - c[d]).abs() + a.radius);
        }
    }
    Cube::centered(c, 2.0 * (half + margin))
}

/// Inclusive range of global lattice indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IndexBox {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl IndexBox {
    pub fn new(lo: [usize; 3], hi: [usize; 3]) -> Self {
        Self { lo, hi }
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.hi[0] - self.lo[0], self.hi[1] - self.lo[1], self.hi[2] - self.lo[2]]
    }

    pub fn contains(&self, ijk: [usize; 3]) -> bool {
        (0..3).all(|d| ijk[d] >= self.lo[d] && ijk[d] <= self.hi[d])
    }

    pub fn contains_interior(&self, ijk: [usize; 3]) -> bool {
        (0..3).all(|d| ijk[d] > self.lo[d] && ijk[d] < self.hi[d])
    }

    pub fn on_boundary(&self, ijk: [usize; 3]) -> bool {
        self.contains(ijk) && !self.contains_interior(ijk)
    }

    pub fn num_points(&self) -> usize {
        let d = self.dims();
        (d[0] + 1) * (d[1] + 1) * (d[2] + 1)
    }

    /// Lattice points in lexicographic order (x fastest).
    pub fn points(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let (lo, hi) = (self.lo, self.hi);
        (lo[2]..=hi[2]).flat_map(move |k| (lo[1]..=hi[1]).flat_map(move |j| (lo[0]..=hi[0]).map(move |i| [i, j, k])))
    }
}

/// Uniform grid with `dims[d]` intervals along axis `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformGrid {
    pub origin: [f64; 3],
    pub h: f64,
    pub dims: [usize; 3],
}

impl UniformGrid {
    pub fn new(origin: [f64; 3], h: f64, dims: [usize; 3]) -> Result<Self> {
        if dims.iter().any(|&n| n < 2) {
            return Err(SmpbeError::Partition(format!("grid needs at least 2 intervals per axis, got {dims:?}")));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(SmpbeError::Partition(format!("grid spacing must be positive, got {h}")));
        }
        Ok(Self { origin, h, dims })
    }

    pub fn shape(&self) -> [usize; 3] {
        self.dims.map(|n| n + 1)
    }

    pub fn num_points(&self) -> usize {
        let s = self.shape();
        s[0] * s[1] * s[2]
    }

    pub fn num_interior(&self) -> usize {
        self.dims.iter().map(|n| n - 1).product()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let s = self.shape();
        i + s[0] * (j + s[1] * k)
    }

    #[inline]
    pub fn ijk(&self, idx: usize) -> [usize; 3] {
        let s = self.shape();
        [idx % s[0], (idx / s[0]) % s[1], idx / (s[0] * s[1])]
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.origin[0] + i as f64 * self.h,
            self.origin[1] + j as f64 * self.h,
            self.origin[2] + k as f64 * self.h,
        ]
    }

    pub fn is_boundary(&self, ijk: [usize; 3]) -> bool {
        (0..3).any(|d| ijk[d] == 0 || ijk[d] == self.dims[d])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxPartition {
    pub d: Cube,
    pub n: u32,
    pub m: u32,
    pub mu: u32,
    pub h: f64,
    pub tau: f64,
    pub eta: f64,
    /// Global lattice covering Ω.
    pub lattice: UniformGrid,
    /// Lattice range of D.
    pub d_range: IndexBox,
    pub boxes: [IndexBox; NUM_BOXES],
}

const MAX_LATTICE_POINTS: usize = 400_000_000;

impl BoxPartition {
    pub fn build(d: Cube, n: u32, m: u32, mu: u32) -> Result<Self> {
        if n < 1 || m < 1 || mu < 1 {
            return Err(SmpbeError::Partition(format!("n, m, mu must be at least 1 (got {n}, {m}, {mu})")));
        }
        if !(d.side.is_finite() && d.side > 0.0) || d.lower.iter().any(|x| !x.is_finite()) {
            return Err(SmpbeError::Partition(format!("degenerate box D with side {}", d.side)));
        }
        if n > 20 || m > 20 {
            return Err(SmpbeError::Partition("refinement exponent too large".into()));
        }
        let s = 1usize << n;
        let t = 1usize << m;
        // η/h = mu 2^{n-1}
        let e = mu as usize * (s / 2);
        if t >= e {
            return Err(SmpbeError::Partition(format!(
                "tau = 2^m h must be smaller than eta = mu L / 2 (tau/h = {t}, eta/h = {e})"
            )));
        }
        let h = d.side / s as f64;
        let tau = t as f64 * h;
        let eta = e as f64 * h;
        let nn = s + 2 * e;
        if (nn + 1).pow(3) > MAX_LATTICE_POINTS {
            return Err(SmpbeError::Partition(format!("lattice with {} points per axis is too large", nn + 1)));
        }
        let origin = d.lower.map(|a| a - eta);
        let lattice = UniformGrid::new(origin, h, [nn; 3])?;
        let (a, b) = (e, e + s);
        let (ca, cb) = (e - t, e + s + t);
        let boxes = [
            IndexBox::new([0, 0, 0], [nn, nn, a]),
            IndexBox::new([0, 0, ca], [nn, a, cb]),
            IndexBox::new([0, ca, ca], [a, cb, cb]),
            IndexBox::new([b, ca, ca], [nn, cb, cb]),
            IndexBox::new([0, b, ca], [nn, nn, cb]),
            IndexBox::new([0, 0, b], [nn, nn, nn]),
            IndexBox::new([ca, ca, ca], [cb, cb, cb]),
        ];
        Ok(Self { d, n, m, mu, h, tau, eta, lattice, d_range: IndexBox::new([a; 3], [b; 3]), boxes })
    }

    pub fn omega(&self) -> Cube {
        Cube::new(self.lattice.origin, self.lattice.dims[0] as f64 * self.h)
    }

    pub fn box_cube(&self, k: usize) -> ([f64; 3], [f64; 3]) {
        let b = &self.boxes[k];
        let lo = self.lattice.point(b.lo[0], b.lo[1], b.lo[2]);
        let hi = self.lattice.point(b.hi[0], b.hi[1], b.hi[2]);
        (lo, hi)
    }

    pub fn central(&self) -> &IndexBox {
        &self.boxes[CENTRAL]
    }

    /// Uniform grid of box `k` (its points are lattice points).
    pub fn box_grid(&self, k: usize) -> UniformGrid {
        let b = &self.boxes[k];
        UniformGrid {
            origin: self.lattice.point(b.lo[0], b.lo[1], b.lo[2]),
            h: self.h,
            dims: b.dims(),
        }
    }

    pub fn lattice_index(&self, ijk: [usize; 3]) -> usize {
        self.lattice.index(ijk[0], ijk[1], ijk[2])
    }

    pub fn lattice_point(&self, ijk: [usize; 3]) -> [f64; 3] {
        self.lattice.point(ijk[0], ijk[1], ijk[2])
    }

    pub fn is_domain_boundary(&self, ijk: [usize; 3]) -> bool {
        self.lattice.is_boundary(ijk)
    }

    /// Global lattice index of box-grid point `local` in box `k`.
    pub fn box_to_lattice(&self, k: usize, local: [usize; 3]) -> usize {
        let lo = self.boxes[k].lo;
        self.lattice.index(lo[0] + local[0], lo[1] + local[1], lo[2] + local[2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Atom;

    #[test]
    fn born_partition() {
        let p = BoxPartition::build(Cube::new([-2.0; 3], 4.0), 4, 2, 2).unwrap();
        assert_eq!(p.h, 0.25);
        assert_eq!(p.tau, 1.0);
        assert_eq!(p.eta, 4.0);
        assert_eq!(p.omega(), Cube::new([-6.0; 3], 12.0));
        let (lo, hi) = p.box_cube(CENTRAL);
        assert_eq!(lo, [-3.0; 3]);
        assert_eq!(hi, [3.0; 3]);
    }

    #[test]
    fn dipole_partition() {
        let p = BoxPartition::build(Cube::new([-4.0; 3], 8.0), 5, 2, 2).unwrap();
        assert_eq!(p.h, 0.25);
        assert_eq!(p.tau, 1.0);
        assert_eq!(p.omega(), Cube::new([-12.0; 3], 24.0));
        let (lo, hi) = p.box_cube(CENTRAL);
        assert_eq!(lo, [-5.0; 3]);
        assert_eq!(hi, [5.0; 3]);
    }

    #[test]
    fn unit_cube_partition() {
        let p = BoxPartition::build(Cube::new([0.0; 3], 1.0), 1, 1, 4).unwrap();
        assert_eq!(p.h, 0.5);
        assert_eq!(p.tau, 1.0);
        assert_eq!(p.eta, 2.0);
        assert_eq!(p.omega(), Cube::new([-2.0; 3], 5.0));
    }

    #[test]
    fn tau_must_be_below_eta() {
        assert!(BoxPartition::build(Cube::new([0.0; 3], 1.0), 1, 1, 2).is_err());
        assert!(BoxPartition::build(Cube::new([0.0; 3], 1.0), 3, 3, 2).is_err());
        assert!(BoxPartition::build(Cube::new([0.0; 3], 0.0), 3, 1, 2).is_err());
        assert!(BoxPartition::build(Cube::new([0.0; 3], 1.0), 0, 1, 2).is_err());
    }

    #[test]
    fn bounding_boxes() {
        let one = ChargeSystem::new(vec![Atom { position: [0.0; 3], charge: 1.0, radius: 1.0 }]).unwrap();
        assert_eq!(bounding_box_for(&one, 1.0), Cube::new([-2.0; 3], 4.0));
        let two = ChargeSystem::new(vec![
            Atom { position: [1.0, 0.0, 0.0], charge: 3.0, radius: 1.5 },
            Atom { position: [-1.0, 0.0, 0.0], charge: -3.0, radius: 1.5 },
        ])
        .unwrap();
        let c = bounding_box_for(&two, 0.5);
        assert_eq!(c.side, 6.0);
        assert_eq!(c.center(), [0.0; 3]);
    }
}
