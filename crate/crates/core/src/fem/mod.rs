//! P1 finite elements on the central-box mesh.
//!
//! Stiffness is assembled in closed form with the permittivity of each tet's
//! region. Reaction, nonlinear and source integrals use the lumped vertex
//! rule over solvent tets. Nodes on the central-box boundary carry Dirichlet
//! data and are eliminated.

mod sparse;

pub use sparse::{CsrMatrix, Ilu0};

use crate::coulomb::CoulombField;
use crate::error::{Result, SmpbeError};
use crate::krylov::{pcg, PcgOutcome, PcgSettings};
use crate::mesh::{cross, dot, sub, InterfaceMesh, Region};
use crate::model::ModelParams;

/// Volume and barycentric gradients of a tet.
pub fn element_gradients(p: [[f64; 3]; 4]) -> (f64, [[f64; 3]; 4]) {
    let a = sub(p[1], p[0]);
    let b = sub(p[2], p[0]);
    let c = sub(p[3], p[0]);
    let det = dot(a, cross(b, c));
    let g1 = cross(b, c).map(|x| x / det);
    let g2 = cross(c, a).map(|x| x / det);
    let g3 = cross(a, b).map(|x| x / det);
    let g0 = [0, 1, 2].map(|d| -(g1[d] + g2[d] + g3[d]));
    (det / 6.0, [g0, g1, g2, g3])
}

/// `eps |K| grad(l_i) . grad(l_j)`.
pub fn element_stiffness(p: [[f64; 3]; 4], eps: f64) -> [[f64; 4]; 4] {
    let (vol, g) = element_gradients(p);
    let mut k = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            k[i][j] = eps * vol.abs() * dot(g[i], g[j]);
        }
    }
    k
}

/// Mesh-dependent data shared by every central-box solve.
#[derive(Debug, Clone)]
pub struct FemContext {
    pub num_nodes: usize,
    /// Stiffness over all nodes, permittivity included.
    pub stiffness: CsrMatrix,
    /// Lumped solvent mass per node.
    pub solvent_mass: Vec<f64>,
    /// Node belongs to at least one solute tet.
    pub touches_solute: Vec<bool>,
    pub is_dirichlet: Vec<bool>,
    pub free: Vec<usize>,
    pub free_index: Vec<Option<usize>>,
    /// Stiffness restricted to free nodes.
    pub reduced: CsrMatrix,
    /// Position in `reduced.val` of each free-free stiffness entry of a free row, or
    /// the Dirichlet column for entries that move to the right-hand side.
    coupling: Vec<(usize, usize, f64)>,
    reduced_diag: Vec<usize>,
}

impl FemContext {
    pub fn new(mesh: &InterfaceMesh, params: &ModelParams) -> Result<Self> {
        let n = mesh.num_nodes();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for t in &mesh.tets {
            for &a in t {
                rows[a].extend_from_slice(t);
            }
        }
        let mut stiffness = CsrMatrix::from_pattern(n, rows);
        let mut solvent_mass = vec![0.0; n];
        let mut touches_solute = vec![false; n];
        for (ti, t) in mesh.tets.iter().enumerate() {
            let p = mesh.tet_points(ti);
            let region = mesh.regions[ti];
            let eps = match region {
                Region::Solute => params.eps_p,
                Region::Solvent => params.eps_s,
            };
            let (vol, _) = element_gradients(p);
            if !(vol > 0.0) || !vol.is_finite() {
                let loc = [0, 1, 2].map(|d| 0.25 * (p[0][d] + p[1][d] + p[2][d] + p[3][d]));
                return Err(SmpbeError::DegenerateTet { location: loc, volume: vol });
            }
            let k = element_stiffness(p, eps);
            for i in 0..4 {
                for j in 0..4 {
                    stiffness.add(t[i], t[j], k[i][j]);
                }
                match region {
                    Region::Solvent => solvent_mass[t[i]] += vol / 4.0,
                    Region::Solute => touches_solute[t[i]] = true,
                }
            }
        }
        let mut is_dirichlet = vec![false; n];
        for &v in &mesh.boundary_nodes {
            is_dirichlet[v] = true;
        }
        let free: Vec<usize> = (0..n).filter(|&v| !is_dirichlet[v]).collect();
        let mut free_index = vec![None; n];
        for (i, &v) in free.iter().enumerate() {
            free_index[v] = Some(i);
        }
        let mut rrows = Vec::with_capacity(free.len());
        for &v in &free {
            let (cols, _) = stiffness.row(v);
            rrows.push(cols.iter().filter_map(|&c| free_index[c]).collect());
        }
        let mut reduced = CsrMatrix::from_pattern(free.len(), rrows);
        let mut coupling = Vec::new();
        for (i, &v) in free.iter().enumerate() {
            let (cols, vals) = stiffness.row(v);
            for (&c, &a) in cols.iter().zip(vals) {
                match free_index[c] {
                    Some(j) => reduced.add(i, j, a),
                    None => coupling.push((i, c, a)),
                }
            }
        }
        let reduced_diag = (0..free.len()).map(|i| reduced.find(i, i).expect("diagonal entry")).collect();
        Ok(Self {
            num_nodes: n,
            stiffness,
            solvent_mass,
            touches_solute,
            is_dirichlet,
            free,
            free_index,
            reduced,
            coupling,
            reduced_diag,
        })
    }

    /// `(eps_p - eps_s) * integral over solvent tets of grad G . grad v_a`,
    /// with the centroid rule for `grad G`. Nodes whose support lies entirely
    /// in the solvent get exactly zero (the integral vanishes there since G is
    /// harmonic in the solvent).
    pub fn psi_load(&self, mesh: &InterfaceMesh, coulomb: &CoulombField, params: &ModelParams) -> Result<Vec<f64>> {
        let mut load = vec![0.0; self.num_nodes];
        let jump = params.eps_p - params.eps_s;
        if jump == 0.0 {
            return Ok(load);
        }
        for (ti, t) in mesh.tets.iter().enumerate() {
            if mesh.regions[ti] != Region::Solvent || !t.iter().any(|&v| self.touches_solute[v]) {
                continue;
            }
            let p = mesh.tet_points(ti);
            let (vol, g) = element_gradients(p);
            let c = [0, 1, 2].map(|d| 0.25 * (p[0][d] + p[1][d] + p[2][d] + p[3][d]));
            let gg = coulomb.grad_g(c)?;
            for i in 0..4 {
                if self.touches_solute[t[i]] {
                    load[t[i]] += jump * vol * dot(gg, g[i]);
                }
            }
        }
        Ok(load)
    }

    /// Reaction diagonal and load for the Newton direction:
    /// `diag_a = m_a nl'(w_a)`,
    /// `load_a = -(K phi)_a - m_a nl(w_a) + m_a S_a`.
    pub fn direction_terms(
        &self,
        w: &[f64],
        phi: &[f64],
        params: &ModelParams,
        source: Option<&[f64]>,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.num_nodes;
        let mut load = vec![0.0; n];
        self.stiffness.mul(phi, &mut load);
        load.iter_mut().for_each(|x| *x = -*x);
        let mut diag = vec![0.0; n];
        for a in 0..n {
            let m = self.solvent_mass[a];
            if m == 0.0 {
                continue;
            }
            if !w[a].is_finite() {
                return Err(SmpbeError::NonFinite(format!("potential at solvent node {a}")));
            }
            let (nl, nlp) = params.reaction_coeffs(w[a]);
            diag[a] = m * nlp;
            load[a] -= m * nl;
            if let Some(s) = source {
                load[a] += m * s[a];
            }
        }
        Ok((diag, load))
    }

    /// Reduced system for given nodal reaction diagonal, nodal load and
    /// Dirichlet values (read from `boundary` at Dirichlet nodes).
    pub fn system(&self, reaction: Option<&[f64]>, load: &[f64], boundary: &[f64]) -> SparseSystem {
        let mut matrix = self.reduced.clone();
        if let Some(r) = reaction {
            for (i, &v) in self.free.iter().enumerate() {
                matrix.val[self.reduced_diag[i]] += r[v];
            }
        }
        SparseSystem { matrix, rhs: self.reduced_rhs(load, boundary), free: self.free.clone(), boundary: boundary.to_vec() }
    }

    pub fn reduced_rhs(&self, load: &[f64], boundary: &[f64]) -> Vec<f64> {
        let mut rhs: Vec<f64> = self.free.iter().map(|&v| load[v]).collect();
        for &(i, c, a) in &self.coupling {
            rhs[i] -= a * boundary[c];
        }
        rhs
    }

    /// Nodal vector from free values and Dirichlet data.
    pub fn expand(&self, free_values: &[f64], boundary: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_nodes];
        for v in 0..self.num_nodes {
            out[v] = match self.free_index[v] {
                Some(i) => free_values[i],
                None => boundary[v],
            };
        }
        out
    }
}

/// Linear system over the free nodes after Dirichlet elimination.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub free: Vec<usize>,
    /// Nodal vector holding the Dirichlet values at boundary nodes.
    pub boundary: Vec<f64>,
}

impl SparseSystem {
    /// Nodal solution from free values.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut out = self.boundary.clone();
        for (i, &v) in self.free.iter().enumerate() {
            out[v] = x[i];
        }
        out
    }
}

/// Assembles the interface problem for `Psi` with Dirichlet data `boundary`
/// (a nodal vector; only boundary-node entries are read).
pub fn assemble_psi_system(
    mesh: &InterfaceMesh,
    coulomb: &CoulombField,
    params: &ModelParams,
    boundary: &[f64],
) -> Result<SparseSystem> {
    let ctx = FemContext::new(mesh, params)?;
    let load = ctx.psi_load(mesh, coulomb, params)?;
    Ok(ctx.system(None, &load, boundary))
}

/// Assembles the Newton direction problem at `w = G + Psi + Phi`.
pub fn assemble_direction_system(
    mesh: &InterfaceMesh,
    w: &[f64],
    phi: &[f64],
    params: &ModelParams,
    boundary: &[f64],
    source: Option<&[f64]>,
) -> Result<SparseSystem> {
    let ctx = FemContext::new(mesh, params)?;
    let (diag, load) = ctx.direction_terms(w, phi, params, source)?;
    Ok(ctx.system(Some(&diag), &load, boundary))
}

/// CG with an ILU(0) preconditioner. Returns the nodal solution.
pub fn pcg_ilu(system: &SparseSystem, x0: Option<&[f64]>, settings: &PcgSettings) -> (Vec<f64>, PcgOutcome) {
    let ilu = Ilu0::new(&system.matrix);
    pcg_ilu_with(system, &ilu, x0, settings)
}

/// Same as [`pcg_ilu`] with a precomputed factorization. `x0` is nodal.
pub fn pcg_ilu_with(
    system: &SparseSystem,
    ilu: &Ilu0,
    x0: Option<&[f64]>,
    settings: &PcgSettings,
) -> (Vec<f64>, PcgOutcome) {
    let mut x: Vec<f64> = match x0 {
        Some(v) => system.free.iter().map(|&n| v[n]).collect(),
        None => vec![0.0; system.free.len()],
    };
    let out = pcg(|v, y| system.matrix.mul(v, y), |r, z| ilu.apply(r, z), &system.rhs, &mut x, settings);
    (system.expand(&x), out)
}

/// Plain CG, used as a reference.
pub fn cg_plain(system: &SparseSystem, settings: &PcgSettings) -> (Vec<f64>, PcgOutcome) {
    let mut x = vec![0.0; system.free.len()];
    let out = pcg(|v, y| system.matrix.mul(v, y), |r, z| z.copy_from_slice(r), &system.rhs, &mut x, settings);
    (system.expand(&x), out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_tet_stiffness() {
        let p = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let k = element_stiffness(p, 1.0);
        // Gradients are (-1,-1,-1), e1, e2, e3 and |K| = 1/6.
        let expect_diag = [0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0];
        for i in 0..4 {
            assert!((k[i][i] - expect_diag[i]).abs() < 1e-15);
            let row: f64 = k[i].iter().sum();
            assert!(row.abs() < 1e-15);
        }
        assert!((k[1][2]).abs() < 1e-15);
        assert!((k[0][1] + 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn linear_field_energy() {
        // For u = c . x the P1 interpolant is exact, so u^T K u = eps |K| |c|^2.
        let p = [[0.1, 0.2, -0.3], [1.3, 0.1, 0.0], [0.2, 1.1, 0.4], [0.0, 0.3, 1.2]];
        let k = element_stiffness(p, 2.5);
        let (vol, _) = element_gradients(p);
        let c = [0.7, -1.3, 0.4];
        let u: Vec<f64> = p.iter().map(|x| dot(c, *x)).collect();
        let mut e = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                e += u[i] * k[i][j] * u[j];
            }
        }
        assert!((e - 2.5 * vol * dot(c, c)).abs() < 1e-12);
    }
}
