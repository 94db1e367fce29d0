//! Tetrahedral mesh of the central box, fitted to the solute surface.

mod build;
mod geometry;
mod io;
mod locate;

pub use build::build_central_mesh;
pub use geometry::{LevelSetGeometry, Sphere};
pub use io::{export_mesh, import_mesh, import_mesh_str, read_mesh_file};
pub use locate::Locator;

pub(crate) use geometry::{cross, dot, sub};

use std::sync::OnceLock;

use crate::error::{Result, SmpbeError};
use crate::partition::BoxPartition;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Solute,
    Solvent,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::Solute => "solute",
            Region::Solvent => "solvent",
        }
    }
}

/// How mesh nodes relate to the global lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeCoupling {
    /// Generated mesh: every node outside D and on the central-box boundary
    /// is a lattice point.
    Exact,
    /// Imported mesh: nodes off the lattice exchange values by interpolation.
    Interpolated,
    /// Not yet attached to a partition.
    Detached,
}

#[derive(Debug)]
pub struct InterfaceMesh {
    pub vertices: Vec<[f64; 3]>,
    pub tets: Vec<[usize; 4]>,
    pub regions: Vec<Region>,
    /// Triangles on the interface, oriented with normals into the solvent.
    pub interface_facets: Vec<[usize; 3]>,
    /// Nodes on the central-box boundary.
    pub boundary_nodes: Vec<usize>,
    /// Global lattice index of each node that sits on a lattice point.
    pub lattice_links: Vec<Option<usize>>,
    pub coupling: LatticeCoupling,
    locator: OnceLock<Locator>,
}

impl Clone for InterfaceMesh {
    fn clone(&self) -> Self {
        Self {
            vertices: self.vertices.clone(),
            tets: self.tets.clone(),
            regions: self.regions.clone(),
            interface_facets: self.interface_facets.clone(),
            boundary_nodes: self.boundary_nodes.clone(),
            lattice_links: self.lattice_links.clone(),
            coupling: self.coupling,
            locator: OnceLock::new(),
        }
    }
}

pub fn signed_volume(a: [f64; 3], b: [f64; 3], c: [f64; 3], d: [f64; 3]) -> f64 {
    dot(sub(b, a), cross(sub(c, a), sub(d, a))) / 6.0
}

impl InterfaceMesh {
    pub(crate) fn from_parts(
        vertices: Vec<[f64; 3]>,
        tets: Vec<[usize; 4]>,
        regions: Vec<Region>,
        interface_facets: Vec<[usize; 3]>,
    ) -> Self {
        let n = vertices.len();
        Self {
            vertices,
            tets,
            regions,
            interface_facets,
            boundary_nodes: Vec::new(),
            lattice_links: vec![None; n],
            coupling: LatticeCoupling::Detached,
            locator: OnceLock::new(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn tet_points(&self, t: usize) -> [[f64; 3]; 4] {
        self.tets[t].map(|v| self.vertices[v])
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        let [a, b, c, d] = self.tet_points(t);
        signed_volume(a, b, c, d)
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.tets.len()).map(|t| self.tet_volume(t)).sum()
    }

    pub fn region_volume(&self, region: Region) -> f64 {
        (0..self.tets.len()).filter(|&t| self.regions[t] == region).map(|t| self.tet_volume(t)).sum()
    }

    pub fn locator(&self) -> &Locator {
        self.locator.get_or_init(|| Locator::new(self))
    }

    /// P1 interpolation of nodal values at arbitrary points.
    pub fn eval_at_points(&self, values: &[f64], points: &[[f64; 3]]) -> Result<Vec<f64>> {
        if values.len() != self.vertices.len() {
            return Err(SmpbeError::InvalidMesh("nodal value count does not match the mesh".into()));
        }
        let loc = self.locator();
        points
            .iter()
            .map(|&p| {
                let (t, bary) = loc.locate(self, p).ok_or(SmpbeError::OutsideMesh(p))?;
                Ok((0..4).map(|k| bary[k] * values[self.tets[t][k]]).sum())
            })
            .collect()
    }

    /// Links nodes to lattice points of `partition` and records the central-box
    /// boundary nodes. Used for imported meshes.
    pub fn attach(&mut self, partition: &BoxPartition) -> Result<()> {
        let c = partition.central();
        let (lo, hi) = partition.box_cube(crate::partition::CENTRAL);
        let h = partition.h;
        let tol = 1e-9 * h;
        let origin = partition.lattice.origin;
        let mut exact = true;
        self.boundary_nodes.clear();
        for (v, p) in self.vertices.iter().enumerate() {
            for d in 0..3 {
                if p[d] < lo[d] - tol || p[d] > hi[d] + tol {
                    return Err(SmpbeError::InvalidMesh(format!("node {v} lies outside the central box")));
                }
            }
            let on_boundary = (0..3).any(|d| (p[d] - lo[d]).abs() <= tol || (p[d] - hi[d]).abs() <= tol);
            if on_boundary {
                self.boundary_nodes.push(v);
            }
            let f = [0, 1, 2].map(|d| (p[d] - origin[d]) / h);
            let r = f.map(|x| x.round());
            let is_lattice = (0..3).all(|d| (f[d] - r[d]).abs() * h <= tol);
            self.lattice_links[v] = if is_lattice {
                let ijk = r.map(|x| x as usize);
                debug_assert!(c.contains(ijk));
                Some(partition.lattice_index(ijk))
            } else {
                if on_boundary {
                    exact = false;
                }
                None
            };
        }
        // The lattice points of the central box that have no node need
        // interpolation from the mesh; an exactly coupled mesh only misses
        // points strictly inside D.
        let mut linked = vec![false; c.num_points()];
        let n7 = c.dims()[0] + 1;
        for l in self.lattice_links.iter().flatten() {
            let ijk = partition.lattice.ijk(*l);
            let loc = [0, 1, 2].map(|d| ijk[d] - c.lo[d]);
            linked[loc[0] + n7 * (loc[1] + n7 * loc[2])] = true;
        }
        for (i, ijk) in c.points().enumerate() {
            if !linked[i] && !partition.d_range.contains_interior(ijk) {
                exact = false;
                break;
            }
        }
        self.coupling = if exact { LatticeCoupling::Exact } else { LatticeCoupling::Interpolated };
        Ok(())
    }

    /// Checks positivity of every tet and the interface-facet orientation.
    pub fn validate(&self, min_volume: f64) -> Result<()> {
        let n = self.vertices.len();
        for (t, tet) in self.tets.iter().enumerate() {
            if tet.iter().any(|&v| v >= n) {
                return Err(SmpbeError::InvalidMesh(format!("tet {t} references a missing vertex")));
            }
            let vol = self.tet_volume(t);
            if !(vol > min_volume) {
                let p = self.tet_points(t);
                let loc = [0, 1, 2].map(|d| 0.25 * (p[0][d] + p[1][d] + p[2][d] + p[3][d]));
                return Err(SmpbeError::DegenerateTet { location: loc, volume: vol });
            }
        }
        for (f, tri) in self.interface_facets.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(SmpbeError::InvalidMesh(format!("facet {f} references a missing vertex")));
            }
        }
        Ok(())
    }
}
