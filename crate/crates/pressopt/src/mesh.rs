//! Structured rectangular grid of unit-square bilinear (Q4) elements.
//!
//! Node numbering is column-major with the row index growing downward:
//! node `(r, c)` of the `(nely+1) x (nelx+1)` grid has index
//! `c * (nely + 1) + r`, so consecutive indices run down a column. Element
//! indices follow the same scheme over the `nely x nelx` element grid,
//! `e = ec * nely + er`. All indices are 0-based.
//!
//! Each element references its corner nodes in the fixed cyclic order
//! (lower-left, lower-right, upper-right, upper-left), counterclockwise in a
//! frame with x to the right and y upward (i.e. against the row direction).
//! The element matrices in [`crate::darcy`] and [`crate::elasticity`] are
//! derived in that same frame and order.

use crate::{Error, Result};

/// Grid dimensions and derived counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridMesh {
    pub nelx: usize,
    pub nely: usize,
    /// Total elements, `nelx * nely`.
    pub nel: usize,
    /// Total nodes, `(nelx + 1) * (nely + 1)`.
    pub nno: usize,
}

impl GridMesh {
    /// Element index at element-grid position (row `er`, column `ec`).
    #[inline]
    pub fn element_index(&self, er: usize, ec: usize) -> usize {
        ec * self.nely + er
    }

    /// Node index at node-grid position (row `r`, column `c`).
    #[inline]
    pub fn node_index(&self, r: usize, c: usize) -> usize {
        c * (self.nely + 1) + r
    }

    /// Number of displacement DOFs, two per node.
    #[inline]
    pub fn ndof_u(&self) -> usize {
        2 * self.nno
    }
}

/// Per-element DOF lists and boundary node sets for a [`GridMesh`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMaps {
    /// Node index per (row-major flattened) grid position; with the
    /// column-major numbering this is `node_grid[c * (nely+1) + r]`.
    pub node_grid: Vec<usize>,
    /// Four pressure DOFs (= node indices) per element, in cyclic order
    /// (LL, LR, UR, UL).
    pub p_dofs: Vec<[usize; 4]>,
    /// Eight displacement DOFs per element: pairs `(2n, 2n+1)` for each node
    /// of `p_dofs`, in the same cyclic order.
    pub u_dofs: Vec<[usize; 8]>,
    /// Left-edge nodes, top to bottom.
    pub lnode: Vec<usize>,
    /// Right-edge nodes, top to bottom.
    pub rnode: Vec<usize>,
    /// Bottom-edge nodes, left to right.
    pub bnode: Vec<usize>,
    /// Top-edge nodes, left to right.
    pub tnode: Vec<usize>,
}

impl DofMaps {
    /// All pressure DOF indices.
    pub fn all_p_dofs(&self, mesh: &GridMesh) -> std::ops::Range<usize> {
        0..mesh.nno
    }

    /// All displacement DOF indices.
    pub fn all_u_dofs(&self, mesh: &GridMesh) -> std::ops::Range<usize> {
        0..mesh.ndof_u()
    }
}

/// Builds the mesh and its DOF bookkeeping.
///
/// The element at (row `er`, col `ec`) connects nodes
///
/// ```text
/// UL ---- UR          UL = node(er,   ec)     UR = node(er,   ec+1)
///  |      |
/// LL ---- LR          LL = node(er+1, ec)     LR = node(er+1, ec+1)
/// ```
///
/// listed in the order (LL, LR, UR, UL).
pub fn build_mesh(nelx: usize, nely: usize) -> Result<(GridMesh, DofMaps)> {
    if nelx < 1 || nely < 1 {
        return Err(Error::InvalidMeshSize { nelx, nely });
    }
    let mesh = GridMesh {
        nelx,
        nely,
        nel: nelx * nely,
        nno: (nelx + 1) * (nely + 1),
    };

    let node_grid: Vec<usize> = (0..mesh.nno).collect();

    let mut p_dofs = vec![[0usize; 4]; mesh.nel];
    let mut u_dofs = vec![[0usize; 8]; mesh.nel];
    for ec in 0..nelx {
        for er in 0..nely {
            let e = mesh.element_index(er, ec);
            let ll = mesh.node_index(er + 1, ec);
            let lr = mesh.node_index(er + 1, ec + 1);
            let ur = mesh.node_index(er, ec + 1);
            let ul = mesh.node_index(er, ec);
            let nodes = [ll, lr, ur, ul];
            p_dofs[e] = nodes;
            for (k, n) in nodes.iter().enumerate() {
                u_dofs[e][2 * k] = 2 * n;
                u_dofs[e][2 * k + 1] = 2 * n + 1;
            }
        }
    }

    let lnode = (0..=nely).map(|r| mesh.node_index(r, 0)).collect();
    let rnode = (0..=nely).map(|r| mesh.node_index(r, nelx)).collect();
    let bnode = (0..=nelx).map(|c| mesh.node_index(nely, c)).collect();
    let tnode = (0..=nelx).map(|c| mesh.node_index(0, c)).collect();

    Ok((
        mesh,
        DofMaps {
            node_grid,
            p_dofs,
            u_dofs,
            lnode,
            rnode,
            bnode,
            tnode,
        },
    ))
}

/// Non-design solid (`nds`), non-design void (`ndv`), and active element sets.
///
/// The three sets are pairwise disjoint and cover all elements; each set is
/// sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ActiveSets {
    pub nds: Vec<usize>,
    pub ndv: Vec<usize>,
    pub act: Vec<usize>,
}

impl ActiveSets {
    /// All elements active, no non-design regions.
    pub fn all_active(nel: usize) -> Self {
        ActiveSets {
            nds: Vec::new(),
            ndv: Vec::new(),
            act: (0..nel).collect(),
        }
    }

    /// Builds the partition from solid/void element sets; the active set is
    /// the complement. Duplicates within a set are merged; an element present
    /// in both sets is an error.
    pub fn from_regions(nel: usize, mut nds: Vec<usize>, mut ndv: Vec<usize>) -> Result<Self> {
        nds.sort_unstable();
        nds.dedup();
        ndv.sort_unstable();
        ndv.dedup();
        for &e in nds.iter().chain(ndv.iter()) {
            if e >= nel {
                return Err(Error::InvalidProblem(format!(
                    "non-design element {e} out of range for {nel} elements"
                )));
            }
        }
        if nds.iter().any(|e| ndv.binary_search(e).is_ok()) {
            return Err(Error::InvalidProblem(
                "non-design solid and void regions overlap".into(),
            ));
        }
        let mut act = Vec::with_capacity(nel - nds.len() - ndv.len());
        for e in 0..nel {
            if nds.binary_search(&e).is_err() && ndv.binary_search(&e).is_err() {
                act.push(e);
            }
        }
        Ok(ActiveSets { nds, ndv, act })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_dimensions() {
        assert!(build_mesh(0, 3).is_err());
        assert!(build_mesh(3, 0).is_err());
        assert!(build_mesh(0, 0).is_err());
    }

    #[test]
    fn counts_match_on_2x2() {
        let (mesh, dofs) = build_mesh(2, 2).unwrap();
        assert_eq!(mesh.nel, 4);
        assert_eq!(mesh.nno, 9);
        assert_eq!(dofs.bnode.len(), 3);
        assert_eq!(dofs.tnode.len(), 3);
        assert_eq!(dofs.lnode.len(), 3);
        assert_eq!(dofs.rnode.len(), 3);
    }

    #[test]
    fn single_element_grid_uses_all_four_nodes() {
        let (mesh, dofs) = build_mesh(1, 1).unwrap();
        assert_eq!(mesh.nel, 1);
        let mut nodes = dofs.p_dofs[0].to_vec();
        nodes.sort_unstable();
        assert_eq!(nodes, vec![0, 1, 2, 3]);
    }

    #[test]
    fn three_by_two_grid_element_nodes() {
        // 3x2 grid enumerated by hand: node (r, c) has index c*3 + r. The
        // element in (1-based) column 2, row 1 is (er=0, ec=1) and touches
        // nodes {3, 4, 6, 7} (0-based), i.e. {4, 5, 7, 8} 1-based, a subset of
        // {4..9}. In cyclic order (LL, LR, UR, UL):
        let (mesh, dofs) = build_mesh(3, 2).unwrap();
        let e = mesh.element_index(0, 1);
        assert_eq!(dofs.p_dofs[e], [4, 7, 6, 3]);
        for n in dofs.p_dofs[e] {
            assert!((3..9).contains(&n));
        }
    }

    #[test]
    fn u_dofs_are_node_pairs() {
        let (_, dofs) = build_mesh(4, 3).unwrap();
        for (e, p) in dofs.p_dofs.iter().enumerate() {
            for k in 0..4 {
                assert_eq!(dofs.u_dofs[e][2 * k], 2 * p[k]);
                assert_eq!(dofs.u_dofs[e][2 * k + 1], 2 * p[k] + 1);
            }
        }
    }

    #[test]
    fn node_valence_and_dof_coverage() {
        for (nelx, nely) in [(1, 1), (1, 5), (4, 3), (6, 2)] {
            let (mesh, dofs) = build_mesh(nelx, nely).unwrap();
            let mut valence = vec![0usize; mesh.nno];
            for p in &dofs.p_dofs {
                let distinct: std::collections::BTreeSet<_> = p.iter().collect();
                assert_eq!(distinct.len(), 4);
                for &n in p {
                    valence[n] += 1;
                }
            }
            for r in 0..=nely {
                for c in 0..=nelx {
                    let interior_r = r > 0 && r < nely;
                    let interior_c = c > 0 && c < nelx;
                    let expect = match (interior_r, interior_c) {
                        (true, true) => 4,
                        (false, false) => 1,
                        _ => 2,
                    };
                    assert_eq!(valence[mesh.node_index(r, c)], expect, "node ({r},{c})");
                }
            }
            let covered: std::collections::BTreeSet<_> =
                dofs.p_dofs.iter().flatten().copied().collect();
            assert_eq!(covered.len(), mesh.nno);
            let covered_u: std::collections::BTreeSet<_> =
                dofs.u_dofs.iter().flatten().copied().collect();
            assert_eq!(covered_u.len(), mesh.ndof_u());
        }
    }

    #[test]
    fn active_sets_partition() {
        let sets = ActiveSets::from_regions(10, vec![2, 3, 3], vec![7]).unwrap();
        assert_eq!(sets.nds, vec![2, 3]);
        assert_eq!(sets.ndv, vec![7]);
        assert_eq!(sets.act, vec![0, 1, 4, 5, 6, 8, 9]);
        assert!(ActiveSets::from_regions(10, vec![2], vec![2]).is_err());
        assert!(ActiveSets::from_regions(10, vec![10], vec![]).is_err());
    }
}
