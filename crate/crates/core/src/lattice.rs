//! Single-particle modes, many-body Fock bases and the invariant subspaces
//! spanned by the conserved mode-group occupations.
//!
//! Modes are the standing waves `cos(j Δk x)` (`j = 0..=n_c`) and, for
//! fermions, `sin(j Δk x)` (`j = 1..=n_c`). The canonical order lists all
//! cosine modes first, then all sine modes, both ascending in `j`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::coupling_matrix;
use crate::state::DensityMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistics {
    Boson,
    Fermion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Cosine,
    Sine,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Cosine => 1.0,
            Parity::Sine => -1.0,
        }
    }
}

/// A single-particle standing-wave mode `(j, parity)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex {
    pub j: usize,
    pub parity: Parity,
}

impl ModeIndex {
    pub const fn cos(j: usize) -> Self {
        ModeIndex { j, parity: Parity::Cosine }
    }

    pub const fn sin(j: usize) -> Self {
        ModeIndex { j, parity: Parity::Sine }
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.parity {
            Parity::Cosine => 'c',
            Parity::Sine => 's',
        };
        write!(f, "{}{}", self.j, p)
    }
}

/// Canonically ordered list of single-particle modes.
pub fn enumerate_modes(n_c: usize, statistics: Statistics) -> Result<Vec<ModeIndex>> {
    if n_c < 1 {
        return Err(Error::InvalidCutoff(n_c));
    }
    let mut modes: Vec<ModeIndex> = (0..=n_c).map(ModeIndex::cos).collect();
    if statistics == Statistics::Fermion {
        modes.extend((1..=n_c).map(ModeIndex::sin));
    }
    Ok(modes)
}

/// The truncated single-particle mode set for a lattice with `k = M Δk`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSet {
    pub n_c: usize,
    pub m: usize,
    pub statistics: Statistics,
    pub modes: Vec<ModeIndex>,
}

impl ModeSet {
    pub fn new(n_c: usize, m: usize, statistics: Statistics) -> Result<Self> {
        let modes = enumerate_modes(n_c, statistics)?;
        if m < 1 || m > n_c {
            return Err(Error::InvalidMomentumRatio { m, n_c });
        }
        Ok(ModeSet { n_c, m, statistics, modes })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Position of a mode in canonical order.
    pub fn position(&self, mode: ModeIndex) -> Option<usize> {
        match mode.parity {
            Parity::Cosine if mode.j <= self.n_c => Some(mode.j),
            Parity::Sine if self.statistics == Statistics::Fermion && mode.j >= 1 && mode.j <= self.n_c => {
                Some(self.n_c + mode.j)
            }
            _ => None,
        }
    }

    /// `Δk / k`
    pub fn delta_ratio(&self) -> f64 {
        1.0 / self.m as f64
    }
}

/// Label of a conserved mode group: residue class `l` (mod M, folded onto
/// `0..=M/2`) and parity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupLabel {
    pub l: usize,
    pub parity: ParityTag,
}

/// Serializable mirror of [`Parity`] used inside group labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParityTag {
    Cosine,
    Sine,
}

impl From<Parity> for ParityTag {
    fn from(p: Parity) -> Self {
        match p {
            Parity::Cosine => ParityTag::Cosine,
            Parity::Sine => ParityTag::Sine,
        }
    }
}

impl GroupLabel {
    pub fn of(mode: ModeIndex, m: usize) -> Self {
        let r = mode.j % m;
        GroupLabel { l: r.min(m - r), parity: mode.parity.into() }
    }
}

impl fmt::Display for GroupLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.parity {
            ParityTag::Cosine => '+',
            ParityTag::Sine => '-',
        };
        write!(f, "({},{})", self.l, p)
    }
}

/// Partition of the mode set into dynamically decoupled groups.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeGroups {
    pub labels: Vec<GroupLabel>,
    /// Canonical mode positions belonging to each group.
    pub members: Vec<Vec<usize>>,
    /// Group index of every mode position.
    pub group_of: Vec<usize>,
}

impl ModeGroups {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: GroupLabel) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// Group membership as sets of modes keyed by label.
    pub fn as_map(&self, mode_set: &ModeSet) -> BTreeMap<GroupLabel, BTreeSet<ModeIndex>> {
        self.labels
            .iter()
            .zip(&self.members)
            .map(|(&label, members)| (label, members.iter().map(|&i| mode_set.modes[i]).collect()))
            .collect()
    }
}

/// Groups built from the residue rule `j mod M ∈ {l, M − l}` alone.
pub fn residue_groups(mode_set: &ModeSet) -> ModeGroups {
    let mut by_label: BTreeMap<GroupLabel, Vec<usize>> = BTreeMap::new();
    for (i, &mode) in mode_set.modes.iter().enumerate() {
        by_label.entry(GroupLabel::of(mode, mode_set.m)).or_default().push(i);
    }
    let mut group_of = vec![0; mode_set.len()];
    let (labels, members): (Vec<_>, Vec<_>) = by_label.into_iter().unzip();
    for (g, ms) in members.iter().enumerate() {
        for &i in ms {
            group_of[i] = g;
        }
    }
    ModeGroups { labels, members, group_of }
}

/// Connected components of the coupling graph of `C_M`, `C_2M`.
///
/// Returned as sorted lists of canonical positions, themselves sorted by
/// their first element.
pub fn coupling_components(mode_set: &ModeSet) -> Vec<Vec<usize>> {
    let n = mode_set.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for m_arg in [mode_set.m, 2 * mode_set.m] {
        let c = coupling_matrix(mode_set, m_arg);
        for i in 0..n {
            for j in (i + 1)..n {
                if c.entries[(i, j)] != 0.0 {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
    }
    let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        comps.entry(r).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = comps.into_values().collect();
    out.sort_by_key(|c| c[0]);
    out
}

/// Conserved mode groups, checked against the coupling structure.
pub fn mode_groups(mode_set: &ModeSet) -> Result<ModeGroups> {
    let groups = residue_groups(mode_set);
    let mut from_rule: Vec<Vec<usize>> = groups.members.clone();
    from_rule.sort_by_key(|c| c[0]);
    let from_graph = coupling_components(mode_set);
    if from_rule != from_graph {
        return Err(Error::GroupMismatch(format!("residue rule {:?} vs coupling graph {:?}", from_rule, from_graph)));
    }
    Ok(groups)
}

/// Occupation numbers in canonical mode order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockState(pub Vec<u8>);

impl FockState {
    pub fn occupations(&self) -> &[u8] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&n| n as usize).sum()
    }

    /// Canonical positions of occupied modes, ascending.
    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &n)| n > 0).map(|(i, _)| i)
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|n| n.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Occupation of every mode group.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubspaceSignature {
    pub counts: BTreeMap<GroupLabel, usize>,
}

impl SubspaceSignature {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn count(&self, label: GroupLabel) -> usize {
        self.counts.get(&label).copied().unwrap_or(0)
    }
}

impl fmt::Display for SubspaceSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.counts.iter().map(|(l, c)| format!("{}:{}", l, c)).collect();
        write!(f, "{{{}}}", parts.join(" "))
    }
}

pub fn subspace_signature(state: &FockState, groups: &ModeGroups) -> SubspaceSignature {
    let mut counts: BTreeMap<GroupLabel, usize> = groups.labels.iter().map(|&l| (l, 0)).collect();
    for (i, &n) in state.0.iter().enumerate() {
        *counts.get_mut(&groups.labels[groups.group_of[i]]).unwrap() += n as usize;
    }
    SubspaceSignature { counts }
}

/// Ordered many-body basis with per-state subspace signatures.
#[derive(Clone, Debug)]
pub struct BasisSet {
    pub mode_set: ModeSet,
    pub groups: ModeGroups,
    pub n_particles: usize,
    /// Ascending lexicographic order; `position` relies on it.
    states: Vec<FockState>,
    signatures: Vec<SubspaceSignature>,
}

impl BasisSet {
    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn signatures(&self) -> &[SubspaceSignature] {
        &self.signatures
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn position(&self, state: &FockState) -> Option<usize> {
        self.states.binary_search(state).ok()
    }

    pub fn statistics(&self) -> Statistics {
        self.mode_set.statistics
    }

    /// Distinct signatures in order of first appearance.
    pub fn distinct_signatures(&self) -> Vec<SubspaceSignature> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for s in &self.signatures {
            if seen.insert(s.clone()) {
                out.push(s.clone());
            }
        }
        out
    }

    /// Basis positions of each distinct signature block, in order of first
    /// appearance.
    pub fn sectors(&self) -> Vec<(SubspaceSignature, Vec<usize>)> {
        let mut order: Vec<SubspaceSignature> = Vec::new();
        let mut blocks: BTreeMap<SubspaceSignature, Vec<usize>> = BTreeMap::new();
        for (i, s) in self.signatures.iter().enumerate() {
            blocks
                .entry(s.clone())
                .or_insert_with(|| {
                    order.push(s.clone());
                    Vec::new()
                })
                .push(i);
        }
        order
            .into_iter()
            .map(|s| {
                let idx = blocks.remove(&s).unwrap();
                (s, idx)
            })
            .collect()
    }

    /// One occupation vector per line, comma separated.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for s in &self.states {
            out.push_str(&s.to_string());
            out.push('\n');
        }
        out
    }
}

fn push_occupations(mode: usize, remaining: usize, max_occ: usize, current: &mut Vec<u8>, out: &mut Vec<FockState>) {
    let n_modes = current.len();
    if mode == n_modes - 1 {
        if remaining <= max_occ {
            current[mode] = remaining as u8;
            out.push(FockState(current.clone()));
            current[mode] = 0;
        }
        return;
    }
    for occ in 0..=remaining.min(max_occ) {
        current[mode] = occ as u8;
        push_occupations(mode + 1, remaining - occ, max_occ, current, out);
    }
    current[mode] = 0;
}

/// All `N`-particle Fock states over the mode set.
pub fn enumerate_fock_basis(mode_set: &ModeSet, n_particles: usize) -> Result<BasisSet> {
    if n_particles < 1 || n_particles > u8::MAX as usize {
        return Err(Error::InvalidParticleNumber(n_particles));
    }
    let max_occ = match mode_set.statistics {
        Statistics::Boson => n_particles,
        Statistics::Fermion => {
            if n_particles > mode_set.len() {
                return Err(Error::OverFilled { n: n_particles, modes: mode_set.len() });
            }
            1
        }
    };
    let groups = mode_groups(mode_set)?;
    let mut states = Vec::new();
    let mut current = vec![0u8; mode_set.len()];
    push_occupations(0, n_particles, max_occ, &mut current, &mut states);
    let signatures = states.iter().map(|s| subspace_signature(s, &groups)).collect();
    Ok(BasisSet { mode_set: mode_set.clone(), groups, n_particles, states, signatures })
}

/// Sub-basis of the states whose signature is in `keep`, order preserved.
pub fn restrict_basis(basis: &BasisSet, keep: &BTreeSet<SubspaceSignature>) -> Result<BasisSet> {
    let (states, signatures): (Vec<_>, Vec<_>) = basis
        .states
        .iter()
        .zip(&basis.signatures)
        .filter(|(_, sig)| keep.contains(*sig))
        .map(|(s, sig)| (s.clone(), sig.clone()))
        .unzip();
    if states.is_empty() {
        return Err(Error::EmptySubspace);
    }
    Ok(BasisSet {
        mode_set: basis.mode_set.clone(),
        groups: basis.groups.clone(),
        n_particles: basis.n_particles,
        states,
        signatures,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    Bec,
    FermiSea,
}

/// How the last fermion on a half-filled degenerate shell `±m_top` is placed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopShellPolicy {
    PlusFirst,
    MinusFirst,
    #[default]
    SymmetricMixture,
}

/// Statistical mixture of pure many-body states, `Σ w |ψ⟩⟨ψ|`.
#[derive(Clone, Debug)]
pub struct Ensemble {
    pub members: Vec<(f64, Vec<C64>)>,
}

impl Ensemble {
    pub fn density_matrix(&self) -> DensityMatrix {
        let dim = self.members.first().map_or(0, |(_, v)| v.len());
        let mut rho = DMatrix::<C64>::zeros(dim, dim);
        for (w, psi) in &self.members {
            for c in 0..dim {
                if psi[c] == C64::new(0.0, 0.0) {
                    continue;
                }
                let pc = psi[c].conj() * *w;
                for r in 0..dim {
                    rho[(r, c)] += psi[r] * pc;
                }
            }
        }
        DensityMatrix::from_matrix(rho)
    }

    /// Signatures carrying weight above `tol`.
    pub fn populated_signatures(&self, basis: &BasisSet, tol: f64) -> BTreeSet<SubspaceSignature> {
        let mut out = BTreeSet::new();
        for (w, psi) in &self.members {
            for (i, a) in psi.iter().enumerate() {
                if w * a.norm_sqr() > tol {
                    out.insert(basis.signatures[i].clone());
                }
            }
        }
        out
    }

    /// Re-expresses the ensemble on a sub-basis; fails if weight would be lost.
    pub fn restrict_to(&self, from: &BasisSet, to: &BasisSet) -> Result<Ensemble> {
        let mut members = Vec::with_capacity(self.members.len());
        for (w, psi) in &self.members {
            let mut out = vec![C64::new(0.0, 0.0); to.len()];
            let mut kept = 0.0;
            for (i, a) in psi.iter().enumerate() {
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                if let Some(j) = to.position(&from.states[i]) {
                    out[j] = *a;
                    kept += a.norm_sqr();
                }
            }
            if (kept - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInitialState(format!("restriction drops weight {:e}", 1.0 - kept)));
            }
            members.push((*w, out));
        }
        Ok(Ensemble { members })
    }
}

/// Momentum quantum numbers `m` (momentum `m Δk`) filled by a zero-temperature
/// Fermi sea: full `±m` pairs, plus the optional half-filled top shell.
pub fn fermi_sea_shells(n_particles: usize) -> (Vec<i64>, Option<i64>) {
    let mut filled = vec![0i64];
    let mut m = 1;
    while filled.len() + 2 <= n_particles {
        filled.push(m);
        filled.push(-m);
        m += 1;
    }
    if filled.len() < n_particles {
        (filled, Some(m))
    } else {
        (filled, None)
    }
}

/// Single-particle amplitude vector of the plane wave `e^{i m Δk x}`.
fn plane_wave_orbital(mode_set: &ModeSet, m: i64) -> Result<Vec<C64>> {
    let mut v = vec![C64::new(0.0, 0.0); mode_set.len()];
    let j = m.unsigned_abs() as usize;
    if j > mode_set.n_c {
        return Err(Error::InvalidInitialState(format!("Fermi sea needs mode {} beyond cutoff n_c = {}", j, mode_set.n_c)));
    }
    if m == 0 {
        v[0] = C64::new(1.0, 0.0);
    } else {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        v[mode_set.position(ModeIndex::cos(j)).unwrap()] = C64::new(s, 0.0);
        let sin_pos = mode_set
            .position(ModeIndex::sin(j))
            .ok_or_else(|| Error::InvalidInitialState("plane waves need sine modes".into()))?;
        v[sin_pos] = C64::new(0.0, s * m.signum() as f64);
    }
    Ok(v)
}

/// Slater determinant of `orbitals` expanded in the Fock basis.
fn slater_state(basis: &BasisSet, orbitals: &[Vec<C64>]) -> Vec<C64> {
    let n = orbitals.len();
    let mut psi = vec![C64::new(0.0, 0.0); basis.len()];
    let mut norm = 0.0;
    for (i, state) in basis.states.iter().enumerate() {
        let occ: Vec<usize> = state.occupied().collect();
        if occ.iter().any(|&q| orbitals.iter().all(|o| o[q] == C64::new(0.0, 0.0))) {
            continue;
        }
        let m = DMatrix::from_fn(n, n, |a, b| orbitals[a][occ[b]]);
        let d = m.determinant();
        psi[i] = d;
        norm += d.norm_sqr();
    }
    let scale = 1.0 / norm.sqrt();
    psi.iter_mut().for_each(|a| *a *= scale);
    psi
}

/// Zero-temperature initial particle state as a statistical ensemble.
pub fn initial_ensemble(basis: &BasisSet, kind: InitialKind, policy: TopShellPolicy) -> Result<Ensemble> {
    let n = basis.n_particles;
    match (kind, basis.statistics()) {
        (InitialKind::Bec, Statistics::Boson) => {
            let mut occ = vec![0u8; basis.mode_set.len()];
            occ[0] = n as u8;
            let pos = basis
                .position(&FockState(occ))
                .ok_or_else(|| Error::InvalidInitialState("condensate state not in basis".into()))?;
            let mut psi = vec![C64::new(0.0, 0.0); basis.len()];
            psi[pos] = C64::new(1.0, 0.0);
            Ok(Ensemble { members: vec![(1.0, psi)] })
        }
        (InitialKind::FermiSea, Statistics::Fermion) => {
            let (filled, top) = fermi_sea_shells(n);
            let fills: Vec<(f64, Vec<i64>)> = match top {
                None => vec![(1.0, filled)],
                Some(m_top) => {
                    let with = |m: i64| {
                        let mut f = filled.clone();
                        f.push(m);
                        f
                    };
                    match policy {
                        TopShellPolicy::PlusFirst => vec![(1.0, with(m_top))],
                        TopShellPolicy::MinusFirst => vec![(1.0, with(-m_top))],
                        TopShellPolicy::SymmetricMixture => {
                            vec![(0.5, with(m_top)), (0.5, with(-m_top))]
                        }
                    }
                }
            };
            let mut members = Vec::with_capacity(fills.len());
            for (w, fill) in fills {
                let orbitals = fill.iter().map(|&m| plane_wave_orbital(&basis.mode_set, m)).collect::<Result<Vec<_>>>()?;
                members.push((w, slater_state(basis, &orbitals)));
            }
            Ok(Ensemble { members })
        }
        (kind, stats) => {
            Err(Error::InvalidInitialState(format!("{:?} initial state is incompatible with {:?} statistics", kind, stats)))
        }
    }
}

/// Zero-temperature initial particle density matrix.
pub fn initial_state(basis: &BasisSet, kind: InitialKind, policy: TopShellPolicy) -> Result<DensityMatrix> {
    Ok(initial_ensemble(basis, kind, policy)?.density_matrix())
}
