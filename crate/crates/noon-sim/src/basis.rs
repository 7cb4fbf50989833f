//! Enumeration and indexing of the excitation-number-truncated Hilbert space
//! for both network architectures.
//!
//! A basis state assigns a bit to every two-level emitter and a photon count
//! to every cavity mode; a sector collects all states with a fixed total
//! excitation number. Enumeration order is canonical (emitters before modes,
//! descending lexicographic occupation vectors) so that serialized runs are
//! reproducible.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sparse::SparseOp;

/// Which architecture a slot layout describes.
///
/// `JcArray` is the bidirectionally cascaded chain of emitter–cavity
/// subsystems; `DdiRings` is the pair of fiber-coupled ring resonators with
/// dipole-dipole-interacting emitters.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeTag {
    JcArray,
    DdiRings,
}

/// A single degree of freedom: a two-level emitter or a bosonic cavity mode.
///
/// Indices are zero-based; display labels are one-based (`e1`, `a1`, ...) to
/// match the usual operator subscripts.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Slot {
    Emitter(usize),
    Mode(usize),
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Emitter(i) => write!(f, "e{}", i + 1),
            Slot::Mode(i) => write!(f, "a{}", i + 1),
        }
    }
}

impl Slot {
    /// Parse a display label (`e1`, `a4`, ...) back into a slot.
    pub fn parse(label: &str) -> Option<Slot> {
        let (kind, idx) = label.split_at(1);
        let idx: usize = idx.parse().ok()?;
        if idx == 0 {
            return None;
        }
        match kind {
            "e" => Some(Slot::Emitter(idx - 1)),
            "a" => Some(Slot::Mode(idx - 1)),
            _ => None,
        }
    }
}

/// Ordered slot structure of one architecture instance.
///
/// Slots are totally ordered: emitters first, then modes, each in physical
/// index order. Mode index `2n` is the odd (forward-propagating) mode of
/// cavity `n` and `2n + 1` the even (backward-propagating) one.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SlotLayout {
    n_emitters: usize,
    n_modes: usize,
    scheme: SchemeTag,
}

impl SlotLayout {
    /// Layout of a cascaded array with `n` emitter–cavity subsystems:
    /// `n` emitters and `2n` modes.
    pub fn jc_array(n: usize) -> SlotLayout {
        assert!(n >= 1, "array needs at least one subsystem");
        SlotLayout { n_emitters: n, n_modes: 2 * n, scheme: SchemeTag::JcArray }
    }

    /// Layout of two coupled ring resonators with `n` emitters per cavity:
    /// `2n` emitters and 4 modes.
    pub fn ddi_rings(n: usize) -> SlotLayout {
        assert!(n >= 1, "each ring needs at least one emitter");
        SlotLayout { n_emitters: 2 * n, n_modes: 4, scheme: SchemeTag::DdiRings }
    }

    /// Emitter-only sublayout, used for reduced states after tracing out the
    /// cavity modes.
    pub fn emitter_subspace(&self) -> SlotLayout {
        SlotLayout { n_emitters: self.n_emitters, n_modes: 0, scheme: self.scheme }
    }

    /// Bare emitter-only layout of a given size, for reduced states that keep
    /// only a subset of the emitters.
    pub fn emitters_only(n_emitters: usize, scheme: SchemeTag) -> SlotLayout {
        SlotLayout { n_emitters, n_modes: 0, scheme }
    }

    pub fn n_emitters(&self) -> usize {
        self.n_emitters
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn scheme(&self) -> SchemeTag {
        self.scheme
    }

    /// Number of cavities in the layout.
    pub fn n_cavities(&self) -> usize {
        self.n_modes / 2
    }

    /// Cavity that mode `k` belongs to.
    pub fn mode_cavity(&self, k: usize) -> usize {
        k / 2
    }

    /// Whether mode `k` is an odd-subscript mode (forward channel).
    pub fn mode_is_odd(&self, k: usize) -> bool {
        k % 2 == 0
    }

    /// Cavity that emitter `e` couples to.
    pub fn emitter_cavity(&self, e: usize) -> usize {
        match self.scheme {
            SchemeTag::JcArray => e,
            SchemeTag::DdiRings => {
                let per_cavity = self.n_emitters / 2;
                e / per_cavity
            }
        }
    }

    /// All slots in canonical order.
    pub fn slots(&self) -> impl Iterator<Item = Slot> + '_ {
        (0..self.n_emitters)
            .map(Slot::Emitter)
            .chain((0..self.n_modes).map(Slot::Mode))
    }

    /// Check that a slot exists in this layout.
    pub fn contains(&self, slot: Slot) -> bool {
        match slot {
            Slot::Emitter(i) => i < self.n_emitters,
            Slot::Mode(i) => i < self.n_modes,
        }
    }
}

/// One configuration of excitations: a bit per emitter and a photon count per
/// mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisState {
    emitter_bits: Vec<u8>,
    mode_occupations: Vec<u8>,
}

impl BasisState {
    pub fn new(emitter_bits: Vec<u8>, mode_occupations: Vec<u8>) -> BasisState {
        assert!(emitter_bits.iter().all(|&b| b <= 1), "emitter bits are binary");
        BasisState { emitter_bits, mode_occupations }
    }

    /// All-ground, zero-photon configuration.
    pub fn vacuum(layout: &SlotLayout) -> BasisState {
        BasisState {
            emitter_bits: vec![0; layout.n_emitters],
            mode_occupations: vec![0; layout.n_modes],
        }
    }

    pub fn emitter_bit(&self, i: usize) -> u8 {
        self.emitter_bits[i]
    }

    pub fn mode_occupation(&self, k: usize) -> u8 {
        self.mode_occupations[k]
    }

    pub fn emitter_bits(&self) -> &[u8] {
        &self.emitter_bits
    }

    pub fn mode_occupations(&self) -> &[u8] {
        &self.mode_occupations
    }

    /// Total excitation number: emitter bits plus photon counts.
    pub fn total_excitation(&self) -> usize {
        self.emitter_bits.iter().map(|&b| b as usize).sum::<usize>()
            + self.mode_occupations.iter().map(|&n| n as usize).sum::<usize>()
    }

    /// Occupation of a slot, uniformly over emitters and modes.
    pub fn occupation(&self, slot: Slot) -> u8 {
        match slot {
            Slot::Emitter(i) => self.emitter_bits[i],
            Slot::Mode(k) => self.mode_occupations[k],
        }
    }

    /// Apply a creation operator on `slot`. Returns the raised state and the
    /// matrix element: 1 for an unexcited emitter, `sqrt(n + 1)` for a mode
    /// with `n` photons, `None` for an already-excited emitter.
    pub fn raised(&self, slot: Slot) -> Option<(BasisState, f64)> {
        let mut next = self.clone();
        match slot {
            Slot::Emitter(i) => {
                if next.emitter_bits[i] == 1 {
                    return None;
                }
                next.emitter_bits[i] = 1;
                Some((next, 1.0))
            }
            Slot::Mode(k) => {
                let n = next.mode_occupations[k];
                next.mode_occupations[k] = n + 1;
                Some((next, ((n + 1) as f64).sqrt()))
            }
        }
    }

    /// Apply an annihilation operator on `slot`; adjoint of [`Self::raised`].
    pub fn lowered(&self, slot: Slot) -> Option<(BasisState, f64)> {
        let mut next = self.clone();
        match slot {
            Slot::Emitter(i) => {
                if next.emitter_bits[i] == 0 {
                    return None;
                }
                next.emitter_bits[i] = 0;
                Some((next, 1.0))
            }
            Slot::Mode(k) => {
                let n = next.mode_occupations[k];
                if n == 0 {
                    return None;
                }
                next.mode_occupations[k] = n - 1;
                Some((next, (n as f64).sqrt()))
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum BasisError {
    #[error("state {0} does not belong to this basis (excitation mismatch or wrong shape)")]
    StateNotInBasis(String),
    #[error("slot layouts differ between bases")]
    LayoutMismatch,
    #[error("bases are not adjacent excitation sectors (got {lower} and {upper})")]
    SectorMismatch { lower: usize, upper: usize },
    #[error("slot {0} does not exist in this layout")]
    UnknownSlot(String),
}

/// Complete, canonically ordered basis of one excitation sector.
#[derive(Clone, Debug)]
pub struct ExcitationBasis {
    layout: SlotLayout,
    excitation_number: usize,
    states: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
}

impl PartialEq for ExcitationBasis {
    fn eq(&self, other: &Self) -> bool {
        self.layout == other.layout && self.excitation_number == other.excitation_number
    }
}

/// Enumerate every configuration of `m` excitations over the layout's slots.
///
/// Order is canonical: descending lexicographic over the concatenated
/// occupation vector (emitters first). `m = 0` yields the single vacuum
/// state.
pub fn enumerate_basis(layout: &SlotLayout, m: usize) -> ExcitationBasis {
    let n_slots = layout.n_emitters + layout.n_modes;
    let mut states = Vec::new();
    let mut occ = vec![0u8; n_slots];
    fill(layout, &mut occ, 0, m, &mut states);

    let index = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();
    ExcitationBasis { layout: layout.clone(), excitation_number: m, states, index }
}

fn fill(
    layout: &SlotLayout,
    occ: &mut [u8],
    slot: usize,
    remaining: usize,
    out: &mut Vec<BasisState>,
) {
    let n_slots = layout.n_emitters + layout.n_modes;
    if slot == n_slots {
        if remaining == 0 {
            let (bits, occs) = occ.split_at(layout.n_emitters);
            out.push(BasisState::new(bits.to_vec(), occs.to_vec()));
        }
        return;
    }
    let cap = if slot < layout.n_emitters { 1 } else { remaining };
    // Highest occupation first gives descending lexicographic order directly.
    for k in (0..=cap.min(remaining)).rev() {
        occ[slot] = k as u8;
        fill(layout, occ, slot + 1, remaining - k, out);
    }
    occ[slot] = 0;
}

impl ExcitationBasis {
    pub fn layout(&self) -> &SlotLayout {
        &self.layout
    }

    pub fn excitation_number(&self) -> usize {
        self.excitation_number
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn state_at(&self, i: usize) -> &BasisState {
        &self.states[i]
    }

    /// Canonical position of a state; errors if the state has the wrong
    /// excitation number or does not fit the layout.
    pub fn index_of(&self, s: &BasisState) -> Result<usize, BasisError> {
        self.index
            .get(s)
            .copied()
            .ok_or_else(|| BasisError::StateNotInBasis(format!("{s:?}")))
    }

    /// Alternative single-excitation ordering that lists each subsystem's
    /// slots contiguously as (emitter, odd mode, even mode), i.e. the
    /// conventional amplitude listing for the cascaded array.
    ///
    /// Returns, for each listing position, the canonical index. `None` unless
    /// this is a single-excitation array-scheme basis.
    pub fn subsystem_interleaved_order(&self) -> Option<Vec<usize>> {
        if self.scheme() != SchemeTag::JcArray || self.excitation_number != 1 {
            return None;
        }
        let mut order = Vec::with_capacity(self.dim());
        let vacuum = BasisState::vacuum(&self.layout);
        for n in 0..self.layout.n_emitters {
            for slot in [Slot::Emitter(n), Slot::Mode(2 * n), Slot::Mode(2 * n + 1)] {
                let (state, _) = vacuum.raised(slot).expect("raising vacuum");
                order.push(self.index_of(&state).expect("enumeration is exhaustive"));
            }
        }
        Some(order)
    }

    /// Alternative two-excitation ordering for the ring scheme: emitter pairs
    /// (i < j), then emitter–mode products (emitter-major), then doubly
    /// occupied modes, then mode pairs (i < j).
    ///
    /// Returns, for each listing position, the canonical index. `None` unless
    /// this is a two-excitation ring-scheme basis.
    pub fn grouped_pair_order(&self) -> Option<Vec<usize>> {
        if self.scheme() != SchemeTag::DdiRings || self.excitation_number != 2 {
            return None;
        }
        let ne = self.layout.n_emitters;
        let nm = self.layout.n_modes;
        let vacuum = BasisState::vacuum(&self.layout);
        let two = |a: Slot, b: Slot| -> usize {
            let (s1, _) = vacuum.raised(a).expect("raising vacuum");
            let (s2, _) = s1.raised(b).expect("second excitation");
            self.index_of(&s2).expect("enumeration is exhaustive")
        };
        let mut order = Vec::with_capacity(self.dim());
        for i in 0..ne {
            for j in (i + 1)..ne {
                order.push(two(Slot::Emitter(i), Slot::Emitter(j)));
            }
        }
        for i in 0..ne {
            for k in 0..nm {
                order.push(two(Slot::Emitter(i), Slot::Mode(k)));
            }
        }
        for k in 0..nm {
            order.push(two(Slot::Mode(k), Slot::Mode(k)));
        }
        for k in 0..nm {
            for l in (k + 1)..nm {
                order.push(two(Slot::Mode(k), Slot::Mode(l)));
            }
        }
        Some(order)
    }

    fn scheme(&self) -> SchemeTag {
        self.layout.scheme
    }

    /// Dump the basis as JSON lines `{index, emitter_bits, mode_occupations}`.
    pub fn dump_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Line<'a> {
            index: usize,
            emitter_bits: &'a [u8],
            mode_occupations: &'a [u8],
        }
        for (index, s) in self.states.iter().enumerate() {
            let line = Line {
                index,
                emitter_bits: &s.emitter_bits,
                mode_occupations: &s.mode_occupations,
            };
            serde_json::to_writer(&mut w, &line)?;
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Sparse matrix of the creation operator on `slot`, restricted to the map
/// from sector `m` to sector `m + 1`.
///
/// Rows index the upper basis, columns the lower one; the conjugate transpose
/// is the annihilation operator. Bosonic elements carry `sqrt(n + 1)`,
/// emitter elements 1 with Pauli exclusion.
pub fn raising_matrix_element(
    lower: &ExcitationBasis,
    upper: &ExcitationBasis,
    slot: Slot,
) -> Result<SparseOp, BasisError> {
    if lower.layout != upper.layout {
        return Err(BasisError::LayoutMismatch);
    }
    if upper.excitation_number != lower.excitation_number + 1 {
        return Err(BasisError::SectorMismatch {
            lower: lower.excitation_number,
            upper: upper.excitation_number,
        });
    }
    if !lower.layout.contains(slot) {
        return Err(BasisError::UnknownSlot(slot.to_string()));
    }
    let mut op = SparseOp::zeros(upper.dim(), lower.dim());
    for (col, s) in lower.states.iter().enumerate() {
        if let Some((raised, amp)) = s.raised(slot) {
            let row = upper.index_of(&raised).expect("raised state stays in layout");
            op.push(row, col, amp.into());
        }
    }
    Ok(op)
}

/// Direct sum of the excitation sectors `0..=max_excitation`, used as the
/// state space of the master equation.
#[derive(Clone, Debug)]
pub struct StackedBasis {
    layout: SlotLayout,
    sectors: Vec<Arc<ExcitationBasis>>,
    offsets: Vec<usize>,
    total_dim: usize,
}

impl PartialEq for StackedBasis {
    fn eq(&self, other: &Self) -> bool {
        self.layout == other.layout && self.sectors.len() == other.sectors.len()
    }
}

impl StackedBasis {
    pub fn new(layout: &SlotLayout, max_excitation: usize) -> StackedBasis {
        let sectors: Vec<_> = (0..=max_excitation)
            .map(|m| Arc::new(enumerate_basis(layout, m)))
            .collect();
        let mut offsets = Vec::with_capacity(sectors.len());
        let mut total = 0;
        for s in &sectors {
            offsets.push(total);
            total += s.dim();
        }
        StackedBasis { layout: layout.clone(), sectors, offsets, total_dim: total }
    }

    pub fn layout(&self) -> &SlotLayout {
        &self.layout
    }

    pub fn max_excitation(&self) -> usize {
        self.sectors.len() - 1
    }

    pub fn sector(&self, m: usize) -> &Arc<ExcitationBasis> {
        &self.sectors[m]
    }

    pub fn offset(&self, m: usize) -> usize {
        self.offsets[m]
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// Global index of local state `i` of sector `m`.
    pub fn embed(&self, m: usize, i: usize) -> usize {
        self.offsets[m] + i
    }

    /// Which sector a global index falls into.
    pub fn sector_of(&self, global: usize) -> usize {
        match self.offsets.binary_search(&global) {
            Ok(m) => m,
            Err(m) => m - 1,
        }
    }
}
