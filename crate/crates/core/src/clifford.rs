//! The single-qubit Clifford group as exact signed permutation matrices.
//!
//! Every element is stored as its SO(3) image acting on the Bloch vector, so
//! composition and equality are integer operations. Decompositions into the
//! physical gate set are found once by breadth-first search over
//! `{X90, mX90, Y90, mY90, X180, Y180}`; the identity element is the single
//! idle gate `I`. The resulting table uses 45 gates over the 24 elements.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::OnceLock;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GROUP_ORDER: usize = 24;

/// Name of the generator used for sequence draws. Bumped whenever the
/// derivation below changes so stored sequences stay reproducible.
pub const SEQUENCE_RNG: &str = "chacha8-v1";

/// Bloch-sphere rotation with entries in {-1, 0, 1}.
pub type Rotation = [[i8; 3]; 3];

pub const IDENTITY_ROTATION: Rotation = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];

pub fn mat_mul(a: &Rotation, b: &Rotation) -> Rotation {
    let mut out = [[0i8; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn transpose(a: &Rotation) -> Rotation {
    let mut out = [[0i8; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

pub fn determinant(a: &Rotation) -> i32 {
    let a = a.map(|row| row.map(i32::from));
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

/// Physical gates available to the decomposition, in tie-breaking order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateLabel {
    I,
    X90,
    #[serde(rename = "mX90")]
    MX90,
    Y90,
    #[serde(rename = "mY90")]
    MY90,
    X180,
    Y180,
}

impl GateLabel {
    pub const ALL: [GateLabel; 7] = [
        GateLabel::I,
        GateLabel::X90,
        GateLabel::MX90,
        GateLabel::Y90,
        GateLabel::MY90,
        GateLabel::X180,
        GateLabel::Y180,
    ];

    /// Generators searched when decomposing non-identity elements.
    pub const GENERATORS: [GateLabel; 6] = [
        GateLabel::X90,
        GateLabel::MX90,
        GateLabel::Y90,
        GateLabel::MY90,
        GateLabel::X180,
        GateLabel::Y180,
    ];

    pub fn rotation(self) -> Rotation {
        match self {
            GateLabel::I => IDENTITY_ROTATION,
            GateLabel::X90 => [[1, 0, 0], [0, 0, -1], [0, 1, 0]],
            GateLabel::MX90 => [[1, 0, 0], [0, 0, 1], [0, -1, 0]],
            GateLabel::Y90 => [[0, 0, 1], [0, 1, 0], [-1, 0, 0]],
            GateLabel::MY90 => [[0, 0, -1], [0, 1, 0], [1, 0, 0]],
            GateLabel::X180 => [[1, 0, 0], [0, -1, 0], [0, 0, -1]],
            GateLabel::Y180 => [[-1, 0, 0], [0, 1, 0], [0, 0, -1]],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GateLabel::I => "I",
            GateLabel::X90 => "X90",
            GateLabel::MX90 => "mX90",
            GateLabel::Y90 => "Y90",
            GateLabel::MY90 => "mY90",
            GateLabel::X180 => "X180",
            GateLabel::Y180 => "Y180",
        }
    }

    /// The positive-rotation counterpart used when only positive rotations
    /// were characterised (mX90 -> X90, mY90 -> Y90).
    pub fn positive(self) -> GateLabel {
        match self {
            GateLabel::MX90 => GateLabel::X90,
            GateLabel::MY90 => GateLabel::Y90,
            other => other,
        }
    }
}

impl fmt::Display for GateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ideal net operation of a full sequence including the recovery element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetOp {
    Identity,
    BitFlip,
}

impl NetOp {
    pub fn rotation(self) -> Rotation {
        match self {
            NetOp::Identity => IDENTITY_ROTATION,
            NetOp::BitFlip => GateLabel::X180.rotation(),
        }
    }

    pub fn flips(self) -> bool {
        matches!(self, NetOp::BitFlip)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CliffordElement {
    pub index: u8,
    pub rotation: Rotation,
}

/// Group table plus the fixed decomposition of every element.
#[derive(Debug)]
pub struct CliffordGroup {
    elements: Vec<CliffordElement>,
    decompositions: Vec<Vec<GateLabel>>,
    compose: [[u8; GROUP_ORDER]; GROUP_ORDER],
    by_rotation: HashMap<Rotation, u8>,
}

/// Breadth-first search from the identity. Returns elements in discovery
/// order (identity first) together with their shortest gate words.
fn search() -> (Vec<Rotation>, Vec<Vec<GateLabel>>) {
    let mut rotations = vec![IDENTITY_ROTATION];
    let mut words: Vec<Vec<GateLabel>> = vec![vec![GateLabel::I]];
    let mut seen: HashMap<Rotation, usize> = HashMap::from([(IDENTITY_ROTATION, 0)]);

    // The identity's search word is empty; `I` is only its physical label.
    let mut queue: VecDeque<(Rotation, Vec<GateLabel>)> = VecDeque::from([(IDENTITY_ROTATION, vec![])]);
    while let Some((rot, word)) = queue.pop_front() {
        for gate in GateLabel::GENERATORS {
            // Later gates act after earlier ones.
            let next = mat_mul(&gate.rotation(), &rot);
            if seen.contains_key(&next) {
                continue;
            }
            let mut next_word = word.clone();
            next_word.push(gate);
            seen.insert(next, rotations.len());
            rotations.push(next);
            words.push(next_word.clone());
            queue.push_back((next, next_word));
        }
    }
    (rotations, words)
}

impl CliffordGroup {
    fn build() -> Self {
        let (rotations, decompositions) = search();
        assert_eq!(rotations.len(), GROUP_ORDER, "generator set must reach all 24 elements");

        let elements: Vec<CliffordElement> = rotations
            .iter()
            .enumerate()
            .map(|(i, &rotation)| CliffordElement {
                index: i as u8,
                rotation,
            })
            .collect();
        let by_rotation: HashMap<Rotation, u8> = elements.iter().map(|e| (e.rotation, e.index)).collect();

        let mut compose = [[0u8; GROUP_ORDER]; GROUP_ORDER];
        for a in &elements {
            for b in &elements {
                let product = mat_mul(&a.rotation, &b.rotation);
                compose[a.index as usize][b.index as usize] = by_rotation[&product];
            }
        }

        CliffordGroup {
            elements,
            decompositions,
            compose,
            by_rotation,
        }
    }

    pub fn elements(&self) -> &[CliffordElement] {
        &self.elements
    }

    pub fn element(&self, index: u8) -> CliffordElement {
        self.elements[index as usize]
    }

    pub fn identity(&self) -> CliffordElement {
        self.elements[0]
    }

    /// `a` applied after `b`.
    pub fn compose(&self, a: CliffordElement, b: CliffordElement) -> CliffordElement {
        self.elements[self.compose[a.index as usize][b.index as usize] as usize]
    }

    pub fn inverse(&self, a: CliffordElement) -> CliffordElement {
        self.find(&transpose(&a.rotation)).expect("group is closed under inversion")
    }

    pub fn find(&self, rotation: &Rotation) -> Option<CliffordElement> {
        self.by_rotation.get(rotation).map(|&i| self.elements[i as usize])
    }

    /// Gates in time order whose product reproduces `c`.
    pub fn decompose(&self, c: CliffordElement) -> &[GateLabel] {
        &self.decompositions[c.index as usize]
    }

    /// Element that, applied after `net_so_far`, yields the requested net operation.
    pub fn recovery(&self, net_so_far: CliffordElement, net_op: NetOp) -> CliffordElement {
        let target = mat_mul(&net_op.rotation(), &transpose(&net_so_far.rotation));
        self.find(&target).expect("recovery is a group element")
    }

    pub fn total_gate_count(&self) -> usize {
        self.decompositions.iter().map(Vec::len).sum()
    }

    pub fn mean_gates_per_clifford(&self) -> f64 {
        self.total_gate_count() as f64 / GROUP_ORDER as f64
    }
}

/// Shared, lazily built group table.
pub fn group() -> &'static CliffordGroup {
    static GROUP: OnceLock<CliffordGroup> = OnceLock::new();
    GROUP.get_or_init(CliffordGroup::build)
}

/// Fresh copy of the 24 elements; index 0 is the identity.
pub fn build_group() -> Vec<CliffordElement> {
    group().elements().to_vec()
}

pub fn decompose(c: CliffordElement) -> Vec<GateLabel> {
    group().decompose(c).to_vec()
}

pub fn recovery(net_so_far: CliffordElement, net_op: NetOp) -> CliffordElement {
    group().recovery(net_so_far, net_op)
}

/// Product of gate rotations in time order.
pub fn word_rotation(gates: &[GateLabel]) -> Rotation {
    gates
        .iter()
        .fold(IDENTITY_ROTATION, |acc, g| mat_mul(&g.rotation(), &acc))
}

/// Unbiased draw in `0..n` by rejection on 32-bit words. Written out rather
/// than delegated so the mapping from generator output to index is pinned.
fn uniform_index(rng: &mut ChaCha8Rng, n: u32) -> u32 {
    let zone = (1u64 << 32) / u64::from(n) * u64::from(n);
    loop {
        let x = u64::from(rng.next_u32());
        if x < zone {
            return (x % u64::from(n)) as u32;
        }
    }
}

/// A seeded random Clifford string followed by its recovery element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliffordSequence {
    pub seed: u64,
    pub n_cliffords: usize,
    pub net_op: NetOp,
    /// `n_cliffords` random draws, then the recovery element.
    pub element_indices: Vec<u8>,
    #[serde(rename = "gate_labels")]
    pub gate_program: Vec<GateLabel>,
}

impl CliffordSequence {
    pub fn elements(&self) -> impl Iterator<Item = CliffordElement> + '_ {
        let g = group();
        self.element_indices.iter().map(move |&i| g.element(i))
    }

    /// Number of Clifford operations executed per shot, recovery included.
    pub fn executed_cliffords(&self) -> usize {
        self.element_indices.len()
    }

    pub fn net_rotation(&self) -> Rotation {
        let g = group();
        self.elements()
            .fold(g.identity(), |acc, c| g.compose(c, acc))
            .rotation
    }
}

pub fn generate_sequence(seed: u64, n_cliffords: usize, net_op: NetOp) -> Result<CliffordSequence> {
    if n_cliffords == 0 {
        return Err(Error::invalid("n_cliffords", "must be at least 1"));
    }
    let g = group();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut element_indices = Vec::with_capacity(n_cliffords + 1);
    let mut net = g.identity();
    for _ in 0..n_cliffords {
        let c = g.element(uniform_index(&mut rng, GROUP_ORDER as u32) as u8);
        net = g.compose(c, net);
        element_indices.push(c.index);
    }
    element_indices.push(g.recovery(net, net_op).index);

    let gate_program = element_indices
        .iter()
        .flat_map(|&i| g.decompose(g.element(i)).iter().copied())
        .collect();

    Ok(CliffordSequence {
        seed,
        n_cliffords,
        net_op,
        element_indices,
        gate_program,
    })
}

/// The `count` sequences with seeds `first_seed..first_seed + count`.
pub fn generate_sequence_set(first_seed: u64, count: usize, n_cliffords: usize, net_op: NetOp) -> Result<Vec<CliffordSequence>> {
    (0..count as u64)
        .map(|k| generate_sequence(first_seed + k, n_cliffords, net_op))
        .collect()
}
