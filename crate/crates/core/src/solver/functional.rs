//! The discrete energy functional `J` of the nonlinear part and its
//! derivatives, over the whole domain.
//!
//! Inside the central box the P1 mesh terms are used. Every lattice cube
//! outside the central box is split into the same six Kuhn tetrahedra the
//! mesh generator uses, which gives edge weights `eps_s h/6` times 2 (edges
//! at the two corners on the Kuhn diagonal) or 1, and lumped masses `h³/4`
//! or `h³/12`. Summed over the cubes around a lattice point these reproduce
//! the 7-point stencil scaled by `h` and the mass `h³`, so `J'` and `J''` are
//! exactly the operators the box iteration solves with.

use std::sync::Arc;

use super::SolverContext;
use crate::composite::CompositeField;
use crate::error::{Result, SmpbeError};
use crate::fem::{CsrMatrix, Ilu0};
use crate::krylov::{pcg, PcgOutcome, PcgSettings};
use crate::partition::BoxPartition;

const EDGES: [(usize, usize); 12] =
    [(0, 1), (2, 3), (4, 5), (6, 7), (0, 2), (1, 3), (4, 6), (5, 7), (0, 4), (1, 5), (2, 6), (3, 7)];

#[inline]
fn main_corner(c: usize, flip: usize) -> bool {
    let kc = c ^ flip;
    kc == 0 || kc == 7
}

/// Calls `f(corner lattice indices, x-flip)` for every lattice cube outside
/// the central box.
fn for_each_outer_cube(part: &BoxPartition, mut f: impl FnMut(&[usize; 8], usize)) {
    let g = &part.lattice;
    let c = part.central();
    let off: [usize; 8] = std::array::from_fn(|q| g.index(q & 1, (q >> 1) & 1, (q >> 2) & 1));
    let [nx, ny, nz] = g.dims;
    for k in 0..nz {
        let kin = k >= c.lo[2] && k < c.hi[2];
        for j in 0..ny {
            let jin = kin && j >= c.lo[1] && j < c.hi[1];
            for i in 0..nx {
                if jin && i >= c.lo[0] && i < c.hi[0] {
                    continue;
                }
                let base = g.index(i, j, k);
                let idx = off.map(|o| base + o);
                f(&idx, i % 2);
            }
        }
    }
}

/// Lumped solvent mass of each lattice point from the cubes outside the
/// central box.
pub(crate) fn outer_lattice_mass(part: &BoxPartition) -> Vec<f64> {
    let h3 = part.h.powi(3);
    let mut mass = vec![0.0; part.lattice.num_points()];
    for_each_outer_cube(part, |idx, flip| {
        for q in 0..8 {
            mass[idx[q]] += if main_corner(q, flip) { h3 / 4.0 } else { h3 / 12.0 };
        }
    });
    mass
}

/// `J(phi) = ½ a(phi, phi) + ∫_solvent E(U + phi) - ∫_solvent S phi` with
/// `U = G + Psi` fixed.
pub struct Functional<'a> {
    ctx: &'a SolverContext,
    base: &'a CompositeField,
    edge_weight: f64,
}

impl<'a> Functional<'a> {
    pub fn new(ctx: &'a SolverContext, base: &'a CompositeField) -> Self {
        let edge_weight = ctx.params.eps_s * ctx.partition().h / 6.0;
        Self { ctx, base, edge_weight }
    }

    fn weight(&self, a: usize, b: usize, flip: usize) -> f64 {
        if main_corner(a, flip) || main_corner(b, flip) {
            2.0 * self.edge_weight
        } else {
            self.edge_weight
        }
    }

    fn source_lattice(&self, l: usize) -> f64 {
        self.ctx.source.as_ref().map_or(0.0, |s| s.lattice[l])
    }

    fn source_mesh(&self, v: usize) -> f64 {
        self.ctx.source.as_ref().map_or(0.0, |s| s.mesh[v])
    }

    fn potential(&self, base: f64, phi: f64, what: &str, i: usize) -> Result<f64> {
        let w = base + phi;
        if w.is_finite() {
            Ok(w)
        } else {
            Err(SmpbeError::NonFinite(format!("potential at solvent {what} {i}")))
        }
    }

    pub fn value(&self, phi: &CompositeField) -> Result<f64> {
        let ctx = self.ctx;
        let params = &ctx.params;
        let mut kphi = vec![0.0; phi.mesh.len()];
        ctx.fem.stiffness.mul(&phi.mesh, &mut kphi);
        let mut quad = 0.5 * crate::krylov::dot(&phi.mesh, &kphi);
        let mut nonlin = 0.0;
        for v in 0..phi.mesh.len() {
            let m = ctx.fem.solvent_mass[v];
            if m > 0.0 {
                let w = self.potential(self.base.mesh[v], phi.mesh[v], "node", v)?;
                nonlin += m * (params.energy_density(w) - self.source_mesh(v) * phi.mesh[v]);
            }
        }
        let lat = &phi.lattice;
        for_each_outer_cube(ctx.partition(), |idx, flip| {
            for &(a, b) in &EDGES {
                let d = lat[idx[a]] - lat[idx[b]];
                quad += 0.5 * self.weight(a, b, flip) * d * d;
            }
        });
        for (l, &m) in ctx.lattice_mass.iter().enumerate() {
            if m > 0.0 {
                let w = self.potential(self.base.lattice[l], lat[l], "lattice point", l)?;
                nonlin += m * (params.energy_density(w) - self.source_lattice(l) * lat[l]);
            }
        }
        let j = quad + nonlin;
        if !j.is_finite() {
            return Err(SmpbeError::NonFinite("energy functional".into()));
        }
        Ok(j)
    }

    /// `J'(phi)` as a nodal vector: mesh nodes carry the central-box rows
    /// (including the finite-difference cubes that touch the central-box
    /// boundary), lattice entries carry the rows of points outside the
    /// central box. Rows on ∂Ω are zero.
    pub fn gradient(&self, phi: &CompositeField) -> Result<CompositeField> {
        let ctx = self.ctx;
        let mut g = ctx.zeros();
        ctx.fem.stiffness.mul(&phi.mesh, &mut g.mesh);
        for v in 0..phi.mesh.len() {
            let m = ctx.fem.solvent_mass[v];
            if m > 0.0 {
                let w = self.potential(self.base.mesh[v], phi.mesh[v], "node", v)?;
                g.mesh[v] += m * (ctx.params.nl(w) - self.source_mesh(v));
            }
        }
        let lat = &phi.lattice;
        let gl = &mut g.lattice;
        for_each_outer_cube(ctx.partition(), |idx, flip| {
            for &(a, b) in &EDGES {
                let f = self.weight(a, b, flip) * (lat[idx[a]] - lat[idx[b]]);
                gl[idx[a]] += f;
                gl[idx[b]] -= f;
            }
        });
        for (l, &m) in ctx.lattice_mass.iter().enumerate() {
            if m > 0.0 {
                let w = self.potential(self.base.lattice[l], lat[l], "lattice point", l)?;
                gl[l] += m * (ctx.params.nl(w) - self.source_lattice(l));
            }
        }
        self.fold(&mut g);
        Ok(g)
    }

    /// Moves lattice rows of mesh-linked points onto the mesh nodes and
    /// clears Dirichlet rows.
    fn fold(&self, g: &mut CompositeField) {
        let layout = Arc::clone(&self.ctx.layout);
        for (v, link) in layout.mesh.lattice_links.iter().enumerate() {
            if let Some(l) = link {
                g.mesh[v] += g.lattice[*l];
                g.lattice[*l] = 0.0;
            }
        }
        let part = &layout.partition;
        for l in 0..g.lattice.len() {
            if part.is_domain_boundary(part.lattice.ijk(l)) {
                g.lattice[l] = 0.0;
            }
        }
    }

    pub fn gradient_norm(&self, phi: &CompositeField) -> Result<f64> {
        let g = self.gradient(phi)?;
        Ok(Self::norm(&g))
    }

    /// Euclidean norm of a nodal vector produced by [`Self::gradient`].
    pub fn norm(g: &CompositeField) -> f64 {
        g.lattice.iter().chain(&g.mesh).map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `J'(phi) delta` from a gradient computed by [`Self::gradient`].
    pub fn directional(grad: &CompositeField, delta: &CompositeField) -> f64 {
        crate::krylov::dot(&grad.mesh, &delta.mesh) + crate::krylov::dot(&grad.lattice, &delta.lattice)
    }

    /// `J''(phi) delta` in the same layout as [`Self::gradient`].
    pub fn hessian_apply(&self, phi: &CompositeField, delta: &CompositeField) -> Result<CompositeField> {
        let ctx = self.ctx;
        let mut g = ctx.zeros();
        ctx.fem.stiffness.mul(&delta.mesh, &mut g.mesh);
        for v in 0..phi.mesh.len() {
            let m = ctx.fem.solvent_mass[v];
            if m > 0.0 {
                let w = self.potential(self.base.mesh[v], phi.mesh[v], "node", v)?;
                g.mesh[v] += m * ctx.params.nl_prime(w) * delta.mesh[v];
            }
        }
        let d = &delta.lattice;
        let gl = &mut g.lattice;
        for_each_outer_cube(ctx.partition(), |idx, flip| {
            for &(a, b) in &EDGES {
                let f = self.weight(a, b, flip) * (d[idx[a]] - d[idx[b]]);
                gl[idx[a]] += f;
                gl[idx[b]] -= f;
            }
        });
        for (l, &m) in ctx.lattice_mass.iter().enumerate() {
            if m > 0.0 {
                let w = self.potential(self.base.lattice[l], phi.lattice[l], "lattice point", l)?;
                gl[l] += m * ctx.params.nl_prime(w) * d[l];
            }
        }
        self.fold(&mut g);
        Ok(g)
    }

    /// Solves `J''(phi) p = -J'(phi)` as one global sparse system over all
    /// mesh nodes and off-mesh lattice points, without domain decomposition.
    pub fn monolithic_direction(
        &self,
        phi: &CompositeField,
        settings: &PcgSettings,
    ) -> Result<(CompositeField, PcgOutcome)> {
        let ctx = self.ctx;
        let layout = Arc::clone(&ctx.layout);
        let part = &layout.partition;
        let nm = layout.num_nodes();
        // Unknown numbering: mesh nodes first, then free lattice points.
        let mut lat_dof: Vec<Option<usize>> = vec![None; layout.num_lattice()];
        for (v, link) in layout.mesh.lattice_links.iter().enumerate() {
            if let Some(l) = link {
                lat_dof[*l] = Some(v);
            }
        }
        let mut next = nm;
        let mut lat_of_dof = Vec::new();
        for l in 0..lat_dof.len() {
            if lat_dof[l].is_none() && ctx.lattice_mass[l] > 0.0 && !part.is_domain_boundary(part.lattice.ijk(l)) {
                lat_dof[l] = Some(next);
                lat_of_dof.push(l);
                next += 1;
            }
        }
        let n = next;
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for v in 0..nm {
            rows[v].extend_from_slice(ctx.fem.stiffness.row(v).0);
        }
        for_each_outer_cube(part, |idx, _| {
            for &(a, b) in &EDGES {
                if let (Some(da), Some(db)) = (lat_dof[idx[a]], lat_dof[idx[b]]) {
                    rows[da].extend([da, db]);
                    rows[db].extend([da, db]);
                }
            }
        });
        let mut mat = CsrMatrix::from_pattern(n, rows);
        for v in 0..nm {
            let (cols, vals) = ctx.fem.stiffness.row(v);
            for (&c, &a) in cols.iter().zip(vals) {
                mat.add(v, c, a);
            }
        }
        for_each_outer_cube(part, |idx, flip| {
            for &(a, b) in &EDGES {
                let w = self.weight(a, b, flip);
                match (lat_dof[idx[a]], lat_dof[idx[b]]) {
                    (Some(da), Some(db)) => {
                        mat.add(da, da, w);
                        mat.add(db, db, w);
                        mat.add(da, db, -w);
                        mat.add(db, da, -w);
                    }
                    // The other end carries a zero Dirichlet value.
                    (Some(d), None) | (None, Some(d)) => mat.add(d, d, w),
                    (None, None) => {}
                }
            }
        });
        for v in 0..nm {
            let m = ctx.fem.solvent_mass[v];
            if m > 0.0 {
                let w = self.potential(self.base.mesh[v], phi.mesh[v], "node", v)?;
                mat.add(v, v, m * ctx.params.nl_prime(w));
            }
        }
        for l in 0..lat_dof.len() {
            let m = ctx.lattice_mass[l];
            if let (Some(d), true) = (lat_dof[l], m > 0.0) {
                let w = self.potential(self.base.lattice[l], phi.lattice[l], "lattice point", l)?;
                mat.add(d, d, m * ctx.params.nl_prime(w));
            }
        }
        let grad = self.gradient(phi)?;
        let mut rhs = vec![0.0; n];
        for v in 0..nm {
            rhs[v] = -grad.mesh[v];
        }
        for (i, &l) in lat_of_dof.iter().enumerate() {
            rhs[nm + i] = -grad.lattice[l];
        }
        let ilu = Ilu0::new(&mat);
        let mut x = vec![0.0; n];
        let out = pcg(|v, y| mat.mul(v, y), |r, z| ilu.apply(r, z), &rhs, &mut x, settings);
        let mut p = ctx.zeros();
        p.mesh.copy_from_slice(&x[..nm]);
        for (i, &l) in lat_of_dof.iter().enumerate() {
            p.lattice[l] = x[nm + i];
        }
        p.sync_from_mesh();
        Ok((p, out))
    }
}
