//! SIMP elasticity on the structured Q4 grid, plus the consistent
//! pressure-to-force transformation.
//!
//! Young's modulus interpolates as `E(ρ̃) = Emin + ρ̃^p (E0 − Emin)`. The
//! element stiffness `ke` is the plane-stress bilinear-quad matrix for a unit
//! square with unit modulus. The transformation `Te = ∫ Nuᵀ ∇Np dΩ` converts
//! elemental nodal pressures into consistent nodal forces, `F_e = −Te p_e`;
//! its global scatter `T` has no density dependence, which is what makes the
//! adjoint load-sensitivity term cheap.
//!
//! Node order everywhere is the mesh's cyclic (LL, LR, UR, UL), in the frame
//! with x right and y up.

use crate::darcy::PressureField;
use crate::linalg::{self, DofPartition, SparseMatrix, TripletList};
use crate::mesh::{DofMaps, GridMesh};
use crate::{Error, Result};

/// Material interpolation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    /// Solid Young's modulus.
    pub e0: f64,
    /// Void stiffness floor.
    pub emin: f64,
    /// Poisson's ratio.
    pub nu: f64,
    /// SIMP penalization exponent.
    pub penal: f64,
}

impl MaterialParams {
    pub fn new(e0: f64, emin: f64, nu: f64, penal: f64) -> Result<Self> {
        if !(e0 > emin && emin > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "moduli must satisfy E0 > Emin > 0, got E0 = {e0}, Emin = {emin}"
            )));
        }
        if !(0.0..0.5).contains(&nu) {
            return Err(Error::InvalidParameter(format!(
                "Poisson ratio must be in [0, 0.5), got {nu}"
            )));
        }
        if !(penal >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "SIMP exponent must be at least 1, got {penal}"
            )));
        }
        Ok(MaterialParams { e0, emin, nu, penal })
    }

    /// Lineage defaults: E0 = 1, Emin = 1e-9, nu = 0.3.
    pub fn with_penal(penal: f64) -> Result<Self> {
        MaterialParams::new(1.0, 1e-9, 0.3, penal)
    }
}

/// E(ρ̃) = Emin + ρ̃^p (E0 − Emin).
pub fn simp_modulus(rho_filt: f64, m: &MaterialParams) -> f64 {
    m.emin + rho_filt.powf(m.penal) * (m.e0 - m.emin)
}

/// dE/dρ̃ = p ρ̃^(p−1) (E0 − Emin).
pub fn simp_modulus_deriv(rho_filt: f64, m: &MaterialParams) -> f64 {
    m.penal * rho_filt.powf(m.penal - 1.0) * (m.e0 - m.emin)
}

/// Plane-stress Q4 stiffness for a unit square with unit modulus and unit
/// thickness (8x8, DOF order u1,v1,...,u4,v4 over nodes LL, LR, UR, UL).
pub fn element_stiffness(nu: f64) -> [[f64; 8]; 8] {
    let k = [
        0.5 - nu / 6.0,
        0.125 + nu / 8.0,
        -0.25 - nu / 12.0,
        -0.125 + 3.0 * nu / 8.0,
        -0.25 + nu / 12.0,
        -0.125 - nu / 8.0,
        nu / 6.0,
        0.125 - 3.0 * nu / 8.0,
    ];
    let idx: [[usize; 8]; 8] = [
        [0, 1, 2, 3, 4, 5, 6, 7],
        [1, 0, 7, 6, 5, 4, 3, 2],
        [2, 7, 0, 5, 6, 3, 4, 1],
        [3, 6, 5, 0, 7, 2, 1, 4],
        [4, 5, 6, 7, 0, 1, 2, 3],
        [5, 4, 3, 2, 1, 0, 7, 6],
        [6, 3, 4, 1, 2, 7, 0, 5],
        [7, 2, 1, 4, 3, 6, 5, 0],
    ];
    let scale = 1.0 / (1.0 - nu * nu);
    let mut ke = [[0.0; 8]; 8];
    for i in 0..8 {
        for j in 0..8 {
            ke[i][j] = scale * k[idx[i][j]];
        }
    }
    ke
}

/// Element transformation Te = ∫ Nuᵀ ∇Np dΩ (8x4): rows are displacement
/// DOFs (x, y pairs per node), columns pressure nodes. Exact analytic
/// integration of the bilinear shape functions on the unit square.
pub const TE: [[f64; 4]; 8] = [
    [-1.0 / 6.0, 1.0 / 6.0, 1.0 / 12.0, -1.0 / 12.0],  // u1
    [-1.0 / 6.0, -1.0 / 12.0, 1.0 / 12.0, 1.0 / 6.0],  // v1
    [-1.0 / 6.0, 1.0 / 6.0, 1.0 / 12.0, -1.0 / 12.0],  // u2
    [-1.0 / 12.0, -1.0 / 6.0, 1.0 / 6.0, 1.0 / 12.0],  // v2
    [-1.0 / 12.0, 1.0 / 12.0, 1.0 / 6.0, -1.0 / 6.0],  // u3
    [-1.0 / 12.0, -1.0 / 6.0, 1.0 / 6.0, 1.0 / 12.0],  // v3
    [-1.0 / 12.0, 1.0 / 12.0, 1.0 / 6.0, -1.0 / 6.0],  // u4
    [-1.0 / 6.0, -1.0 / 12.0, 1.0 / 12.0, 1.0 / 6.0],  // v4
];

/// The element transformation matrix.
pub fn element_transformation() -> &'static [[f64; 4]; 8] {
    &TE
}

/// Assembles the global stiffness K = Σ_e E(ρ̃_e) ke (2·nno x 2·nno).
pub fn assemble_stiffness(
    rho_filt: &[f64],
    mesh: &GridMesh,
    dofs: &DofMaps,
    m: &MaterialParams,
) -> Result<SparseMatrix> {
    if rho_filt.len() != mesh.nel {
        return Err(Error::DimensionMismatch {
            what: "stiffness assembly densities",
            expected: mesh.nel,
            actual: rho_filt.len(),
        });
    }
    let ke = element_stiffness(m.nu);
    let ndof = mesh.ndof_u();
    let mut t = TripletList::with_capacity(ndof, ndof, 64 * mesh.nel);
    for (e, &rho) in rho_filt.iter().enumerate() {
        if !((-1e-9..=1.0 + 1e-9).contains(&rho)) {
            return Err(Error::DensityOutOfRange(rho));
        }
        let modulus = simp_modulus(rho.clamp(0.0, 1.0), m);
        let ed = &dofs.u_dofs[e];
        for i in 0..8 {
            for j in 0..8 {
                t.push(ed[i], ed[j], modulus * ke[i][j]);
            }
        }
    }
    linalg::compress(&t)
}

/// Assembles the global transformation T (2·nno x nno), scattering Te by
/// (u_dofs, p_dofs). Density-independent; built once per problem.
pub fn assemble_transformation(mesh: &GridMesh, dofs: &DofMaps) -> Result<SparseMatrix> {
    let mut t = TripletList::with_capacity(mesh.ndof_u(), mesh.nno, 32 * mesh.nel);
    for e in 0..mesh.nel {
        let ud = &dofs.u_dofs[e];
        let pd = &dofs.p_dofs[e];
        for i in 0..8 {
            for j in 0..4 {
                t.push(ud[i], pd[j], TE[i][j]);
            }
        }
    }
    linalg::compress(&t)
}

/// Consistent nodal force vector F = −T p.
pub fn assemble_force(transformation: &SparseMatrix, p: &PressureField) -> Vec<f64> {
    let mut f = transformation.mul_vec(&p.p);
    for v in &mut f {
        *v = -*v;
    }
    f
}

/// Global force/displacement pair with its DOF partition.
#[derive(Debug, Clone)]
pub struct StructuralState {
    pub f: Vec<f64>,
    pub u: Vec<f64>,
    pub fixed_u_dofs: Vec<usize>,
    pub free_u_dofs: Vec<usize>,
    /// Design tag of the density field this solve belongs to.
    pub tag: u64,
}

/// Solves K_ff u_f = F_f with u = 0 on the fixed DOFs.
pub fn solve_displacement(
    k: &SparseMatrix,
    f: &[f64],
    fixed_u_dofs: &[usize],
) -> Result<Vec<f64>> {
    let part = DofPartition::new(k.nrows(), fixed_u_dofs)?;
    let (kff, _) = part.split(k)?;
    let solver = linalg::SpdSolver::factor(&kff).map_err(|e| {
        Error::Solver(format!(
            "stiffness factorization failed; check that the supports remove all rigid-body modes ({e})"
        ))
    })?;
    let uf = solver.solve(&part.gather_free(f))?;
    Ok(part.scatter(&uf, &vec![0.0; part.fixed().len()]))
}
