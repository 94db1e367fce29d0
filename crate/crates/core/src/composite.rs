//! Fields stored jointly on the global lattice and the central-box mesh.

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Result, SmpbeError};
use crate::mesh::{InterfaceMesh, LatticeCoupling};
use crate::partition::{BoxPartition, UniformGrid, CENTRAL, NUM_BOXES};

/// Correspondence between lattice points and mesh nodes.
#[derive(Debug)]
pub struct FieldLayout {
    pub partition: Arc<BoxPartition>,
    pub mesh: Arc<InterfaceMesh>,
    /// Mesh node at each lattice point of the central box (central-box local order).
    central_nodes: Vec<Option<usize>>,
    /// Lattice points without a mesh node, with their interpolation stencils.
    orphans: Vec<(usize, [usize; 4], [f64; 4])>,
    /// Off-lattice boundary nodes with trilinear lattice stencils.
    boundary_interp: Vec<(usize, Vec<(usize, f64)>)>,
    boundary_interp_index: HashMap<usize, usize>,
    is_boundary_node: Vec<bool>,
}

impl FieldLayout {
    pub fn new(partition: Arc<BoxPartition>, mesh: Arc<InterfaceMesh>) -> Result<Self> {
        if mesh.coupling == LatticeCoupling::Detached {
            return Err(SmpbeError::Transfer("mesh is not attached to the partition".into()));
        }
        let c = *partition.central();
        let n7 = c.dims()[0] + 1;
        let mut central_nodes = vec![None; c.num_points()];
        for (v, link) in mesh.lattice_links.iter().enumerate() {
            if let Some(l) = link {
                let ijk = partition.lattice.ijk(*l);
                if !c.contains(ijk) {
                    return Err(SmpbeError::Transfer(format!("node {v} links to a lattice point outside the central box")));
                }
                let loc = [0, 1, 2].map(|d| ijk[d] - c.lo[d]);
                central_nodes[loc[0] + n7 * (loc[1] + n7 * loc[2])] = Some(v);
            }
        }
        let mut orphans = Vec::new();
        for (i, ijk) in c.points().enumerate() {
            if central_nodes[i].is_some() {
                continue;
            }
            let inside_d = partition.d_range.contains_interior(ijk);
            if mesh.coupling == LatticeCoupling::Exact && !inside_d {
                return Err(SmpbeError::Transfer(format!(
                    "lattice point {ijk:?} outside D has no mesh node; partition and mesh disagree"
                )));
            }
            let p = partition.lattice_point(ijk);
            let (t, bary) = mesh.locator().locate(&mesh, p).ok_or(SmpbeError::OutsideMesh(p))?;
            orphans.push((partition.lattice_index(ijk), mesh.tets[t], bary));
        }
        let mut is_boundary_node = vec![false; mesh.num_nodes()];
        let mut boundary_interp = Vec::new();
        for &v in &mesh.boundary_nodes {
            is_boundary_node[v] = true;
            if mesh.lattice_links[v].is_none() {
                boundary_interp.push((v, trilinear_stencil(&partition.lattice, mesh.vertices[v])));
            }
        }
        let boundary_interp_index = boundary_interp.iter().enumerate().map(|(i, (v, _))| (*v, i)).collect();
        Ok(Self { partition, mesh, central_nodes, orphans, boundary_interp, boundary_interp_index, is_boundary_node })
    }

    pub fn num_lattice(&self) -> usize {
        self.partition.lattice.num_points()
    }

    pub fn num_nodes(&self) -> usize {
        self.mesh.num_nodes()
    }

    pub fn is_boundary_node(&self, v: usize) -> bool {
        self.is_boundary_node[v]
    }

    pub fn is_orphan_lattice(&self, l: usize) -> bool {
        let ijk = self.partition.lattice.ijk(l);
        self.central_node(ijk).is_none() && self.partition.central().contains(ijk)
    }

    pub fn orphan_count(&self) -> usize {
        self.orphans.len()
    }

    pub fn orphans(&self) -> impl Iterator<Item = usize> + '_ {
        self.orphans.iter().map(|o| o.0)
    }

    /// Mesh node sitting at lattice point `ijk`, if any.
    pub fn central_node(&self, ijk: [usize; 3]) -> Option<usize> {
        let c = self.partition.central();
        if !c.contains(ijk) {
            return None;
        }
        let n7 = c.dims()[0] + 1;
        let loc = [0, 1, 2].map(|d| ijk[d] - c.lo[d]);
        self.central_nodes[loc[0] + n7 * (loc[1] + n7 * loc[2])]
    }

    /// Whether a lattice point can be read by a finite-difference box.
    fn check_readable(&self, ijk: [usize; 3]) -> Result<()> {
        if self.mesh.coupling == LatticeCoupling::Exact
            && self.partition.central().contains(ijk)
            && self.central_node(ijk).is_none()
        {
            return Err(SmpbeError::Transfer(format!(
                "lattice point {ijk:?} is a snapped mesh node and cannot be read as box data"
            )));
        }
        Ok(())
    }
}

fn trilinear_stencil(lattice: &UniformGrid, p: [f64; 3]) -> Vec<(usize, f64)> {
    let mut base = [0usize; 3];
    let mut frac = [0.0; 3];
    for d in 0..3 {
        let x = (p[d] - lattice.origin[d]) / lattice.h;
        let i = (x.floor().max(0.0) as usize).min(lattice.dims[d] - 1);
        base[d] = i;
        frac[d] = (x - i as f64).clamp(0.0, 1.0);
    }
    let mut out = Vec::with_capacity(8);
    for c in 0..8 {
        let o = [c & 1, (c >> 1) & 1, (c >> 2) & 1];
        let w: f64 = (0..3).map(|d| if o[d] == 1 { frac[d] } else { 1.0 - frac[d] }).product();
        if w != 0.0 {
            out.push((lattice.index(base[0] + o[0], base[1] + o[1], base[2] + o[2]), w));
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct CompositeField {
    pub layout: Arc<FieldLayout>,
    pub lattice: Vec<f64>,
    pub mesh: Vec<f64>,
}

impl CompositeField {
    pub fn zeros(layout: Arc<FieldLayout>) -> Self {
        let (nl, nm) = (layout.num_lattice(), layout.num_nodes());
        Self { layout, lattice: vec![0.0; nl], mesh: vec![0.0; nm] }
    }

    /// Samples `f` at every lattice point and mesh node.
    pub fn from_fn(layout: Arc<FieldLayout>, f: impl Fn([f64; 3]) -> f64) -> Self {
        let g = layout.partition.lattice;
        let lattice = (0..g.num_points())
            .map(|i| {
                let [a, b, c] = g.ijk(i);
                f(g.point(a, b, c))
            })
            .collect();
        let mesh = layout.mesh.vertices.iter().map(|&p| f(p)).collect();
        Self { layout, lattice, mesh }
    }

    pub fn partition(&self) -> &BoxPartition {
        &self.layout.partition
    }

    /// Copies linked mesh values onto the lattice and interpolates orphan
    /// lattice points from the mesh.
    pub fn sync_from_mesh(&mut self) {
        let mesh = &self.layout.mesh;
        for (v, link) in mesh.lattice_links.iter().enumerate() {
            if let Some(l) = link {
                self.lattice[*l] = self.mesh[v];
            }
        }
        for (l, tet, bary) in &self.layout.orphans {
            self.lattice[*l] = (0..4).map(|k| bary[k] * self.mesh[tet[k]]).sum();
        }
    }

    /// Copies lattice values onto linked mesh nodes (and interpolated
    /// boundary nodes).
    pub fn sync_from_lattice(&mut self) {
        for (v, link) in self.layout.mesh.lattice_links.iter().enumerate() {
            if let Some(l) = link {
                self.mesh[v] = self.lattice[*l];
            }
        }
        for (v, st) in &self.layout.boundary_interp {
            self.mesh[*v] = st.iter().map(|(l, w)| w * self.lattice[*l]).sum();
        }
    }

    /// Dirichlet data for box `k`: values at the boundary points of the box
    /// grid in lexicographic order, or at the mesh boundary nodes for the
    /// central box.
    pub fn read_boundary(&self, k: usize) -> Result<Vec<f64>> {
        if k == CENTRAL {
            return Ok(self.central_dirichlet().into_iter().map(|(_, v)| v).collect());
        }
        let p = self.partition();
        let b = p.boxes[k];
        let mut out = Vec::new();
        for ijk in b.points() {
            if b.on_boundary(ijk) {
                self.layout.check_readable(ijk)?;
                out.push(self.lattice[p.lattice_index(ijk)]);
            }
        }
        Ok(out)
    }

    /// Values at every point of box `k`'s grid (finite-difference boxes only).
    pub fn gather_box(&self, k: usize) -> Result<Vec<f64>> {
        if k == CENTRAL || k >= NUM_BOXES {
            return Err(SmpbeError::Transfer(format!("box {k} is not a finite-difference box")));
        }
        let p = self.partition();
        let b = p.boxes[k];
        let mut out = Vec::with_capacity(b.num_points());
        for ijk in b.points() {
            if b.on_boundary(ijk) {
                self.layout.check_readable(ijk)?;
            }
            out.push(self.lattice[p.lattice_index(ijk)]);
        }
        Ok(out)
    }

    /// `(node, value)` Dirichlet pairs for the central box.
    pub fn central_dirichlet(&self) -> Vec<(usize, f64)> {
        let mesh = &self.layout.mesh;
        let mut out = Vec::with_capacity(mesh.boundary_nodes.len());
        for &v in &mesh.boundary_nodes {
            let val = match mesh.lattice_links[v] {
                Some(l) => self.lattice[l],
                None => match self.layout.boundary_interp_index.get(&v) {
                    Some(&i) => self.layout.boundary_interp[i].1.iter().map(|(l, w)| w * self.lattice[*l]).sum(),
                    None => self.mesh[v],
                },
            };
            out.push((v, val));
        }
        out
    }

    /// Over-relaxed write of a finite-difference box solution (full box-grid
    /// array) into the interior points of box `k`.
    pub fn relax_box(&mut self, k: usize, solution: &[f64], omega: f64) -> Result<()> {
        if k == CENTRAL {
            return Err(SmpbeError::Transfer("use relax_central for the central box".into()));
        }
        let layout = Arc::clone(&self.layout);
        let p = &layout.partition;
        let b = p.boxes[k];
        if solution.len() != b.num_points() {
            return Err(SmpbeError::Transfer(format!("box {k} solution has the wrong length")));
        }
        for (i, ijk) in b.points().enumerate() {
            if !b.contains_interior(ijk) {
                continue;
            }
            let l = p.lattice_index(ijk);
            let new = (1.0 - omega) * self.lattice[l] + omega * solution[i];
            self.lattice[l] = new;
            if let Some(v) = layout.central_node(ijk) {
                self.mesh[v] = new;
            }
        }
        Ok(())
    }

    pub fn write_box(&mut self, k: usize, solution: &[f64]) -> Result<()> {
        if k == CENTRAL {
            self.relax_central(solution, 1.0)
        } else {
            self.relax_box(k, solution, 1.0)
        }
    }

    /// Over-relaxed write of nodal values at the free (non-boundary) nodes.
    pub fn relax_central(&mut self, nodal: &[f64], omega: f64) -> Result<()> {
        let layout = Arc::clone(&self.layout);
        if nodal.len() != self.mesh.len() {
            return Err(SmpbeError::Transfer("central solution has the wrong length".into()));
        }
        for v in 0..self.mesh.len() {
            if layout.is_boundary_node(v) {
                continue;
            }
            let new = (1.0 - omega) * self.mesh[v] + omega * nodal[v];
            self.mesh[v] = new;
            if let Some(l) = layout.mesh.lattice_links[v] {
                self.lattice[l] = new;
            }
        }
        for (l, tet, bary) in &layout.orphans {
            self.lattice[*l] = (0..4).map(|k| bary[k] * self.mesh[tet[k]]).sum();
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.lattice.iter().chain(&self.mesh).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |self - other|` over lattice points and mesh nodes.
    pub fn max_diff(&self, other: &CompositeField) -> f64 {
        let a = self.lattice.iter().zip(&other.lattice).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        self.mesh.iter().zip(&other.mesh).fold(a, |m, (x, y)| m.max((x - y).abs()))
    }

    /// `a * self + b * other`.
    pub fn lincomb(&self, a: f64, other: &CompositeField, b: f64) -> CompositeField {
        CompositeField {
            layout: Arc::clone(&self.layout),
            lattice: self.lattice.iter().zip(&other.lattice).map(|(x, y)| a * x + b * y).collect(),
            mesh: self.mesh.iter().zip(&other.mesh).map(|(x, y)| a * x + b * y).collect(),
        }
    }

    /// Sets the value on the outer boundary of Ω.
    pub fn set_domain_boundary(&mut self, f: impl Fn([f64; 3]) -> f64) {
        let g = self.layout.partition.lattice;
        let n = g.dims[0];
        for k in 0..=n {
            for j in 0..=n {
                for i in 0..=n {
                    if g.is_boundary([i, j, k]) {
                        self.lattice[g.index(i, j, k)] = f(g.point(i, j, k));
                    }
                }
            }
        }
    }
}
