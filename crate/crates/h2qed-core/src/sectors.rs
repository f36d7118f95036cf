//! Conserved-charge block structure.
//!
//! Every Hamiltonian term preserves the per-state charge tuple, and every
//! jump operator shifts it by one fixed amount, so the evolution never
//! couples different charge sectors. Grading the basis by the tuple turns
//! the step unitary into a block-diagonal product and the dissipator into a
//! block-to-block scatter, which is what makes the full space affordable.
//!
//! An observable that is diagonal in the basis only reads the sector-diagonal
//! blocks of the density matrix, and those blocks evolve autonomously, so
//! dropping cross-sector coherence changes no reported quantity. The
//! `Grading::None` variant keeps the whole space as a single block and serves
//! as the exact dense reference for equivalence tests.

use ndarray::Array2;
use num_complex::Complex64;
use std::collections::BTreeMap;

use crate::hilbert::StateSpace;
use crate::operators::SparseOp;
use crate::{Error, Result};

/// How to split the basis into independently evolving blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Grading {
    /// One block per conserved-charge tuple.
    Charges,
    /// Single block holding the whole space (dense reference path).
    None,
}

/// A partition of the basis into charge blocks.
#[derive(Clone, Debug)]
pub struct Blocking {
    /// Global state indices per block, ascending within each block.
    blocks: Vec<Vec<u32>>,
    labels: Vec<[u8; 4]>,
    /// Global index -> (block, position inside block).
    locate: Vec<(u32, u32)>,
}

/// Action of a sector-homogeneous jump operator on one source block.
///
/// The jump operators of this model carry at most one entry per column, so a
/// block action is fully described by where each local column goes and with
/// what amplitude.
#[derive(Clone, Debug)]
pub struct BlockColumnMap {
    pub target_block: u32,
    /// Per local column: (local row in the target block, amplitude).
    pub columns: Vec<Option<(u32, Complex64)>>,
}

impl Blocking {
    pub fn build(space: &StateSpace, grading: Grading) -> Blocking {
        match grading {
            Grading::None => {
                let dim = space.dim() as u32;
                Blocking {
                    blocks: vec![(0..dim).collect()],
                    labels: vec![[0; 4]],
                    locate: (0..dim).map(|i| (0, i)).collect(),
                }
            }
            Grading::Charges => {
                let mut map: BTreeMap<[u8; 4], Vec<u32>> = BTreeMap::new();
                for (i, s) in space.states().iter().enumerate() {
                    map.entry(s.charges()).or_default().push(i as u32);
                }
                let mut blocks = Vec::with_capacity(map.len());
                let mut labels = Vec::with_capacity(map.len());
                let mut locate = vec![(0u32, 0u32); space.dim()];
                for (q, (label, members)) in map.into_iter().enumerate() {
                    for (pos, &g) in members.iter().enumerate() {
                        locate[g as usize] = (q as u32, pos as u32);
                    }
                    labels.push(label);
                    blocks.push(members);
                }
                Blocking {
                    blocks,
                    labels,
                    locate,
                }
            }
        }
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn dim(&self) -> usize {
        self.locate.len()
    }

    pub fn block(&self, q: usize) -> &[u32] {
        &self.blocks[q]
    }

    pub fn label(&self, q: usize) -> [u8; 4] {
        self.labels[q]
    }

    pub fn locate(&self, global: usize) -> (usize, usize) {
        let (q, p) = self.locate[global];
        (q as usize, p as usize)
    }

    pub fn max_block_len(&self) -> usize {
        self.blocks.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Checks that `op` never connects two different blocks.
    pub fn check_preserves_blocks(&self, op: &SparseOp) -> Result<()> {
        self.check_dim(op)?;
        for &(r, c, _) in op.entries() {
            if self.locate[r as usize].0 != self.locate[c as usize].0 {
                return Err(Error::SectorMixing {
                    row: r as usize,
                    col: c as usize,
                });
            }
        }
        Ok(())
    }

    /// Extracts the dense diagonal blocks of a block-preserving operator.
    pub fn dense_blocks(&self, op: &SparseOp) -> Result<Vec<Array2<Complex64>>> {
        self.check_preserves_blocks(op)?;
        let mut out: Vec<Array2<Complex64>> = self
            .blocks
            .iter()
            .map(|b| Array2::zeros((b.len(), b.len())))
            .collect();
        for &(r, c, v) in op.entries() {
            let (q, i) = self.locate[r as usize];
            let (_, j) = self.locate[c as usize];
            out[q as usize][(i as usize, j as usize)] = v;
        }
        Ok(out)
    }

    /// Decomposes a jump operator into per-block column maps.
    ///
    /// Requires the operator to shift every entry between the same pair of
    /// charge sectors (homogeneous action) and to carry at most one entry per
    /// column; both hold for the ladder, detachment, and influx operators.
    pub fn column_maps(&self, op: &SparseOp) -> Result<Vec<BlockColumnMap>> {
        self.check_dim(op)?;
        let mut maps: Vec<BlockColumnMap> = self
            .blocks
            .iter()
            .enumerate()
            .map(|(q, b)| BlockColumnMap {
                target_block: q as u32,
                columns: vec![None; b.len()],
            })
            .collect();
        let mut seen_target: Vec<Option<u32>> = vec![None; self.blocks.len()];
        for &(r, c, v) in op.entries() {
            let (tq, tp) = self.locate[r as usize];
            let (sq, sp) = self.locate[c as usize];
            match seen_target[sq as usize] {
                None => {
                    seen_target[sq as usize] = Some(tq);
                    maps[sq as usize].target_block = tq;
                }
                Some(prev) if prev != tq => {
                    return Err(Error::SectorMixing {
                        row: r as usize,
                        col: c as usize,
                    });
                }
                _ => {}
            }
            let slot = &mut maps[sq as usize].columns[sp as usize];
            if slot.is_some() {
                return Err(Error::Config(
                    "jump operator has more than one entry in a column; \
                     the blocked dissipator cannot represent it"
                        .into(),
                ));
            }
            *slot = Some((tp, v));
        }
        Ok(maps)
    }

    fn check_dim(&self, op: &SparseOp) -> Result<()> {
        if op.dim() != self.locate.len() {
            return Err(Error::DimensionMismatch(format!(
                "operator dim {} vs blocking dim {}",
                op.dim(),
                self.locate.len()
            )));
        }
        Ok(())
    }
}
