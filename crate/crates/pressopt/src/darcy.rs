//! Design-dependent pressure field: Darcy flow with a drainage term.
//!
//! The flow coefficient K(ρ̃) drops from the void value `Kv` to the solid
//! value `kvs = Kv·epsf` through a smooth Heaviside of the filtered density,
//! while the drainage coefficient D(ρ̃) rises from 0 to `Ds`. The drainage
//! magnitude is calibrated so that inside solid material the pressure decays
//! to the residual ratio `r` over the penetration depth `Δs`:
//!
//! ```text
//! Ds = (ln r / Δs)² · kvs      =>      p(Δs)/p(0) = r   (1-D half-space)
//! ```
//!
//! The global flow matrix is A = Σ_e [K(ρ̃_e)·Kp + D(ρ̃_e)·KDp] and the
//! pressure solves A p = 0 with Dirichlet data on wetted/dry boundaries.

use crate::linalg::{self, DofPartition, SparseMatrix, SpdSolver, TripletList};
use crate::mesh::{DofMaps, GridMesh};
use crate::{Error, Result};

/// Slack accepted on densities before declaring them out of range; covers
/// rounding drift from the filter's convex combination, nothing more.
const DENSITY_SLACK: f64 = 1e-9;

/// Flow and drainage parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    /// Flow coefficient of a void element.
    pub kv: f64,
    /// Flow contrast, solid over void.
    pub epsf: f64,
    /// Residual pressure ratio at the penetration depth.
    pub residual_ratio: f64,
    /// Penetration depth Δs in element-size units.
    pub penetration_depth: f64,
    /// Heaviside threshold η_f.
    pub etaf: f64,
    /// Heaviside sharpness β_f.
    pub betaf: f64,
    /// Applied pressure magnitude.
    pub pin: f64,
}

impl FlowParams {
    pub fn new(
        kv: f64,
        epsf: f64,
        residual_ratio: f64,
        penetration_depth: f64,
        etaf: f64,
        betaf: f64,
        pin: f64,
    ) -> Result<Self> {
        let p = FlowParams {
            kv,
            epsf,
            residual_ratio,
            penetration_depth,
            etaf,
            betaf,
            pin,
        };
        p.validate()?;
        Ok(p)
    }

    /// Lineage defaults: Kv = 1, epsf = 1e-7, r = 0.1, Δs = 2, Pin = 1.
    pub fn with_heaviside(etaf: f64, betaf: f64) -> Result<Self> {
        FlowParams::new(1.0, 1e-7, 0.1, 2.0, etaf, betaf, 1.0)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.kv > 0.0) {
            return bad(format!("flow coefficient Kv must be positive, got {}", self.kv));
        }
        if !(self.epsf > 0.0 && self.epsf < 1.0) {
            return bad(format!("flow contrast epsf must be in (0, 1), got {}", self.epsf));
        }
        if !(self.residual_ratio > 0.0 && self.residual_ratio < 1.0) {
            return bad(format!(
                "residual ratio r must be in (0, 1), got {}",
                self.residual_ratio
            ));
        }
        if !(self.penetration_depth > 0.0) {
            return bad(format!(
                "penetration depth must be positive, got {}",
                self.penetration_depth
            ));
        }
        if !(self.etaf > 0.0 && self.etaf < 1.0) {
            return bad(format!("etaf must be in (0, 1), got {}", self.etaf));
        }
        if !(self.betaf > 0.0) {
            return bad(format!("betaf must be positive, got {}", self.betaf));
        }
        if !(self.pin > 0.0) {
            return bad(format!("applied pressure must be positive, got {}", self.pin));
        }
        Ok(())
    }

    /// Flow coefficient of solid, `Kv · epsf`.
    #[inline]
    pub fn kvs(&self) -> f64 {
        self.kv * self.epsf
    }

    /// Drainage coefficient of solid, `(ln r / Δs)² · kvs`.
    #[inline]
    pub fn drainage_ds(&self) -> f64 {
        let k = self.residual_ratio.ln() / self.penetration_depth;
        k * k * self.kvs()
    }

    /// K(ρ̃) = Kv · (1 − (1 − epsf) · H(ρ̃)); decreasing in ρ̃.
    pub fn flow_coeff(&self, rho_filt: f64) -> Result<f64> {
        let h = smooth_heaviside(rho_filt, self.betaf, self.etaf)?;
        Ok(self.kv * (1.0 - (1.0 - self.epsf) * h))
    }

    /// dK/dρ̃, analytic.
    pub fn flow_coeff_deriv(&self, rho_filt: f64) -> Result<f64> {
        let dh = smooth_heaviside_deriv(rho_filt, self.betaf, self.etaf)?;
        Ok(-self.kv * (1.0 - self.epsf) * dh)
    }

    /// D(ρ̃) = Ds · H(ρ̃); increasing in ρ̃.
    pub fn drainage_coeff(&self, rho_filt: f64) -> Result<f64> {
        let h = smooth_heaviside(rho_filt, self.betaf, self.etaf)?;
        Ok(self.drainage_ds() * h)
    }

    /// dD/dρ̃, analytic.
    pub fn drainage_coeff_deriv(&self, rho_filt: f64) -> Result<f64> {
        let dh = smooth_heaviside_deriv(rho_filt, self.betaf, self.etaf)?;
        Ok(self.drainage_ds() * dh)
    }
}

fn checked_density(x: f64) -> Result<f64> {
    if !(x >= -DENSITY_SLACK && x <= 1.0 + DENSITY_SLACK) {
        return Err(Error::DensityOutOfRange(x));
    }
    Ok(x.clamp(0.0, 1.0))
}

/// Smooth Heaviside projection
/// `H(x) = [tanh(βη) + tanh(β(x−η))] / [tanh(βη) + tanh(β(1−η))]`
/// with H(0) = 0 and H(1) = 1 exactly.
pub fn smooth_heaviside(x: f64, beta: f64, eta: f64) -> Result<f64> {
    let x = checked_density(x)?;
    let denom = (beta * eta).tanh() + (beta * (1.0 - eta)).tanh();
    Ok(((beta * eta).tanh() + (beta * (x - eta)).tanh()) / denom)
}

/// dH/dx = β · sech²(β(x−η)) / [tanh(βη) + tanh(β(1−η))].
pub fn smooth_heaviside_deriv(x: f64, beta: f64, eta: f64) -> Result<f64> {
    let x = checked_density(x)?;
    let denom = (beta * eta).tanh() + (beta * (1.0 - eta)).tanh();
    let t = (beta * (x - eta)).tanh();
    Ok(beta * (1.0 - t * t) / denom)
}

/// Element Darcy flow matrix Kp = ∫ (∇Np)ᵀ(∇Np) dΩ for a unit square with
/// unit coefficient, node order (LL, LR, UR, UL).
pub const KP: [[f64; 4]; 4] = [
    [4.0 / 6.0, -1.0 / 6.0, -2.0 / 6.0, -1.0 / 6.0],
    [-1.0 / 6.0, 4.0 / 6.0, -1.0 / 6.0, -2.0 / 6.0],
    [-2.0 / 6.0, -1.0 / 6.0, 4.0 / 6.0, -1.0 / 6.0],
    [-1.0 / 6.0, -2.0 / 6.0, -1.0 / 6.0, 4.0 / 6.0],
];

/// Element drainage (mass) matrix KDp = ∫ Npᵀ Np dΩ, same node order.
pub const KDP: [[f64; 4]; 4] = [
    [4.0 / 36.0, 2.0 / 36.0, 1.0 / 36.0, 2.0 / 36.0],
    [2.0 / 36.0, 4.0 / 36.0, 2.0 / 36.0, 1.0 / 36.0],
    [1.0 / 36.0, 2.0 / 36.0, 4.0 / 36.0, 2.0 / 36.0],
    [2.0 / 36.0, 1.0 / 36.0, 2.0 / 36.0, 4.0 / 36.0],
];

/// The element flow and drainage matrices.
pub fn element_flow_matrices() -> (&'static [[f64; 4]; 4], &'static [[f64; 4]; 4]) {
    (&KP, &KDP)
}

/// Assembles the global flow matrix A = Σ_e [K(ρ̃_e)·Kp + D(ρ̃_e)·KDp].
pub fn assemble_flow(
    rho_filt: &[f64],
    mesh: &GridMesh,
    dofs: &DofMaps,
    params: &FlowParams,
) -> Result<SparseMatrix> {
    if rho_filt.len() != mesh.nel {
        return Err(Error::DimensionMismatch {
            what: "flow assembly densities",
            expected: mesh.nel,
            actual: rho_filt.len(),
        });
    }
    let mut t = TripletList::with_capacity(mesh.nno, mesh.nno, 16 * mesh.nel);
    for (e, &rho) in rho_filt.iter().enumerate() {
        let kc = params.flow_coeff(rho)?;
        let dc = params.drainage_coeff(rho)?;
        let nodes = &dofs.p_dofs[e];
        for i in 0..4 {
            for j in 0..4 {
                t.push(nodes[i], nodes[j], kc * KP[i][j] + dc * KDP[i][j]);
            }
        }
    }
    linalg::compress(&t)
}

/// Dirichlet pressure data: node index, prescribed value.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureBc {
    fixed: Vec<(usize, f64)>,
}

impl PressureBc {
    /// Builds from (node, value) pairs; duplicate nodes must agree.
    pub fn new(mut fixed: Vec<(usize, f64)>) -> Result<Self> {
        fixed.sort_unstable_by_key(|&(n, _)| n);
        for w in fixed.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 != w[1].1 {
                return Err(Error::InvalidProblem(format!(
                    "node {} prescribed two different pressures",
                    w[0].0
                )));
            }
        }
        fixed.dedup_by_key(|&mut (n, _)| n);
        Ok(PressureBc { fixed })
    }

    pub fn fixed(&self) -> &[(usize, f64)] {
        &self.fixed
    }

    pub fn fixed_nodes(&self) -> Vec<usize> {
        self.fixed.iter().map(|&(n, _)| n).collect()
    }

    pub fn fixed_values(&self) -> Vec<f64> {
        self.fixed.iter().map(|&(_, v)| v).collect()
    }
}

/// Solved nodal pressure field with its DOF partition.
#[derive(Debug, Clone)]
pub struct PressureField {
    /// One pressure per node.
    pub p: Vec<f64>,
    /// Fixed (prescribed) pressure DOFs, sorted.
    pub fixed_p_dofs: Vec<usize>,
    /// Free pressure DOFs, sorted.
    pub free_p_dofs: Vec<usize>,
    /// Design tag of the density field this solve belongs to.
    pub tag: u64,
}

/// Solves A p = 0 with the given Dirichlet data: A_ff p_f = −A_fc p_c.
pub fn solve_pressure(a: &SparseMatrix, bc: &PressureBc) -> Result<PressureField> {
    if bc.fixed.is_empty() {
        return Err(Error::InvalidProblem(
            "pressure solve requires at least one prescribed node".into(),
        ));
    }
    let part = DofPartition::new(a.nrows(), &bc.fixed_nodes())?;
    let solver = build_pressure_solver(a, &part)?;
    solve_pressure_with(&solver, a, &part, &bc.fixed_values(), 0)
}

/// Factors the reduced flow matrix (driver entry point for pattern reuse).
pub(crate) fn build_pressure_solver(a: &SparseMatrix, part: &DofPartition) -> Result<SpdSolver> {
    let (aff, _) = part.split(a)?;
    SpdSolver::factor(&aff)
}

pub(crate) fn solve_pressure_with(
    solver: &SpdSolver,
    a: &SparseMatrix,
    part: &DofPartition,
    fixed_values: &[f64],
    tag: u64,
) -> Result<PressureField> {
    let (_, afc) = part.split(a)?;
    let mut rhs = afc.mul_vec(fixed_values);
    for v in &mut rhs {
        *v = -*v;
    }
    let pf = solver.solve(&rhs)?;
    let p = part.scatter(&pf, fixed_values);
    Ok(PressureField {
        p,
        fixed_p_dofs: part.fixed().to_vec(),
        free_p_dofs: part.free().to_vec(),
        tag,
    })
}
