//! Bit-exact simulation of the Map, Shuffle and Reduce phases.
//!
//! Every phase consumes the previous phase's output by shared reference and
//! produces a new immutable value. Per-mapper and per-reducer work fans out
//! through [`crate::par`]; results are always assembled in mapper/reducer
//! order so the transcript does not depend on scheduling.

mod mock;
mod reduce;
mod scheme;
mod shuffle;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::designs::Design;
use crate::mra::{build_mra_with, Mra, MraError};
use crate::par::{self, Exec};
use crate::subsets::{binomial, KSubset};
use crate::topology::{derive_topology, MadcTopology, TopologyError};

pub use mock::{file_content, mock_map, mock_reduce};
pub use reduce::{decode_reducer, reduce_phase, ReducerOutput};
pub use scheme::{packetize, CodingScheme, Occurrence, PacketKey, PacketTable};
pub use shuffle::{shuffle_phase, CodedSymbol, ShuffleTranscript, TranscriptDump};

/// Default requested IV size in bits; rounded up to the nearest valid size.
pub const DEFAULT_BETA: usize = 48;
pub const DEFAULT_FILE_BITS: usize = 512;
pub const DEFAULT_OUTPUT_BITS: usize = 64;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Mra(#[from] MraError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("array and topology disagree: {0}")]
    Mismatch(String),
    #[error("integer {value} occurs {multiplicity} times, expected {expected}")]
    CorruptMra {
        value: u64,
        multiplicity: usize,
        expected: usize,
    },
    #[error(
        "scheme violation: reducer {sender} cannot build operand for s={s} from batch B_{mapper}"
    )]
    SchemeViolation {
        sender: KSubset,
        s: u64,
        mapper: usize,
    },
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeError {
    #[error("reducer {reducer}: coded symbol X^{s} from {sender} not in transcript")]
    MissingSymbol {
        reducer: KSubset,
        s: u64,
        sender: KSubset,
    },
    #[error("reducer {reducer}: cannot reconstruct operand {operand} of X^{s}")]
    Unreconstructible {
        reducer: KSubset,
        s: u64,
        operand: String,
    },
    #[error(
        "reducer {reducer}: symbol X^{s} from {sender} has {actual} bytes, expected {expected}"
    )]
    BadLength {
        reducer: KSubset,
        s: u64,
        sender: KSubset,
        actual: usize,
        expected: usize,
    },
}

/// Sizes (in bits) and seed for one simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    /// `d`, bits per input file.
    pub file_bits: usize,
    /// `β`, bits per intermediate value.
    pub beta: usize,
    /// `b`, bits per output-function value.
    pub output_bits: usize,
    pub seed: u64,
    #[serde(skip)]
    pub exec: Exec,
    /// Attach operand lists to coded symbols. Decoding never reads them.
    #[serde(skip)]
    pub record_provenance: bool,
}

impl SimConfig {
    pub fn new(beta: usize, seed: u64) -> Self {
        Self {
            file_bits: DEFAULT_FILE_BITS,
            beta,
            output_bits: DEFAULT_OUTPUT_BITS,
            seed,
            exec: Exec::default(),
            record_provenance: false,
        }
    }

    /// Config with the smallest valid `β ≥ beta_request`.
    pub fn for_topology(topology: &MadcTopology, beta_request: usize, seed: u64) -> Self {
        Self::new(smallest_valid_beta(topology, beta_request), seed)
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn with_provenance(mut self, record: bool) -> Self {
        self.record_provenance = record;
        self
    }

    pub fn validate(&self, topology: &MadcTopology) -> Result<(), EngineError> {
        if self.file_bits == 0 || !self.file_bits.is_multiple_of(8) {
            return Err(EngineError::Config(format!(
                "file size {} bits is not a positive multiple of 8",
                self.file_bits
            )));
        }
        if self.output_bits == 0 || !self.output_bits.is_multiple_of(8) {
            return Err(EngineError::Config(format!(
                "output size {} bits is not a positive multiple of 8",
                self.output_bits
            )));
        }
        if !beta_is_valid(topology, self.beta) {
            return Err(EngineError::Config(format!(
                "β = {} bits: need β ≡ 0 mod 8 and η1·η2·β ≡ 0 mod 8·C(α,t)·t = {}",
                self.beta,
                8 * split_factor(topology)
            )));
        }
        Ok(())
    }
}

/// `C(α, t) · t`, the number of sub-packets per concatenated symbol.
pub fn split_factor(topology: &MadcTopology) -> usize {
    binomial(topology.alpha(), topology.t()).expect("small") as usize * topology.t()
}

/// β is valid when IVs and sub-packets are whole bytes.
pub fn beta_is_valid(topology: &MadcTopology, beta: usize) -> bool {
    let total = topology.eta1() * topology.eta2() * beta;
    beta > 0 && beta.is_multiple_of(8) && total.is_multiple_of(8 * split_factor(topology))
}

pub fn smallest_valid_beta(topology: &MadcTopology, request: usize) -> usize {
    (request.max(1)..)
        .find(|&b| beta_is_valid(topology, b))
        .expect("multiples of 8·C(α,t)·t are always valid")
}

/// Input files and their batch partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileStore {
    files: Vec<Vec<u8>>,
    batches: Vec<Vec<usize>>,
}

impl FileStore {
    /// File `w_n`, 1-based.
    pub fn file(&self, n: usize) -> &[u8] {
        &self.files[n - 1]
    }

    pub fn num_files(&self) -> usize {
        self.files.len()
    }

    /// File indices of batch `B_f`, 1-based.
    pub fn batch(&self, f: usize) -> &[usize] {
        &self.batches[f - 1]
    }

    pub fn num_batches(&self) -> usize {
        self.batches.len()
    }
}

pub fn generate_files(
    topology: &MadcTopology,
    config: &SimConfig,
) -> Result<FileStore, EngineError> {
    config.validate(topology)?;
    let files = par::map_range(config.exec, topology.num_files(), |i| {
        file_content(config.seed, i + 1, config.file_bits)
    });
    let batches = (1..=topology.num_mappers())
        .map(|f| topology.batch_files(f).collect())
        .collect();
    Ok(FileStore { files, batches })
}

/// Intermediate values keyed by `(q, n)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IvTable {
    values: BTreeMap<(usize, usize), Vec<u8>>,
}

impl IvTable {
    pub fn get(&self, q: usize, n: usize) -> Option<&[u8]> {
        self.values.get(&(q, n)).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.values.keys().copied()
    }
}

/// Read access to intermediate values. `None` means "not available here".
pub trait IvSource {
    fn iv(&self, q: usize, n: usize) -> Option<&[u8]>;
}

/// Output of the map phase: one table per mapper, index `λ - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapOutput {
    tables: Vec<IvTable>,
    eta1: usize,
}

impl MapOutput {
    pub fn mapper(&self, lambda: usize) -> &IvTable {
        &self.tables[lambda - 1]
    }

    pub fn total_ivs(&self) -> usize {
        self.tables.iter().map(IvTable::len).sum()
    }

    /// What a reducer wired to `mappers` can retrieve.
    pub fn view<'a>(&'a self, mappers: &'a [usize]) -> MapperView<'a> {
        MapperView {
            output: self,
            mappers,
        }
    }
}

/// Every intermediate value, regardless of location.
impl IvSource for MapOutput {
    fn iv(&self, q: usize, n: usize) -> Option<&[u8]> {
        let mapper = (n - 1) / self.eta1 + 1;
        self.tables.get(mapper - 1)?.get(q, n)
    }
}

/// The intermediate values held by a fixed set of mappers.
#[derive(Debug, Clone, Copy)]
pub struct MapperView<'a> {
    output: &'a MapOutput,
    mappers: &'a [usize],
}

impl IvSource for MapperView<'_> {
    fn iv(&self, q: usize, n: usize) -> Option<&[u8]> {
        self.mappers
            .iter()
            .find_map(|&m| self.output.mapper(m).get(q, n))
    }
}

/// Mapper `λ` computes `v_{q,n}` for every `q ∈ [Q]` and every file in the
/// batches it stores.
pub fn map_phase(
    topology: &MadcTopology,
    store: &FileStore,
    config: &SimConfig,
) -> Result<MapOutput, EngineError> {
    config.validate(topology)?;
    let q_count = topology.num_functions();
    let tables = par::map_range(config.exec, topology.num_mappers(), |i| {
        let mut values = BTreeMap::new();
        for &batch in topology.mapper_batches(i + 1) {
            for &n in store.batch(batch) {
                for q in 1..=q_count {
                    values.insert(
                        (q, n),
                        mock_map(config.seed, q, n, store.file(n), config.beta),
                    );
                }
            }
        }
        IvTable { values }
    });
    Ok(MapOutput {
        tables,
        eta1: topology.eta1(),
    })
}

/// Centralized ground truth: every `φ_q` computed directly from the files.
/// Index `q - 1`.
pub fn oracle_outputs(store: &FileStore, config: &SimConfig, q_count: usize) -> Vec<Vec<u8>> {
    par::map_range(config.exec, q_count, |i| {
        let q = i + 1;
        let ivs = (1..=store.num_files())
            .map(|n| mock_map(config.seed, q, n, store.file(n), config.beta));
        mock_reduce(q, ivs, config.output_bits)
    })
}

/// Everything produced by one end-to-end run.
#[derive(Debug, Clone)]
pub struct SimulationRun {
    pub config: SimConfig,
    pub topology: MadcTopology,
    pub mra: Mra,
    pub store: FileStore,
    pub map_output: MapOutput,
    pub transcript: ShuffleTranscript,
    pub outputs: Vec<ReducerOutput>,
    pub oracle: Vec<Vec<u8>>,
}

impl SimulationRun {
    /// Reducers whose outputs differ from the oracle (by block).
    pub fn mismatched_reducers(&self) -> Vec<KSubset> {
        self.outputs
            .iter()
            .filter(|out| {
                out.values
                    .iter()
                    .any(|(&q, value)| self.oracle.get(q - 1) != Some(value))
            })
            .map(|out| out.block.clone())
            .collect()
    }

    pub fn outputs_match_oracle(&self) -> bool {
        let covered: usize = self.outputs.iter().map(|o| o.values.len()).sum();
        covered == self.oracle.len() && self.mismatched_reducers().is_empty()
    }
}

/// Derive topology, build the array, then run all three phases and the oracle.
pub fn simulate(
    design: &Design,
    eta1: usize,
    eta2: usize,
    config: &SimConfig,
) -> Result<SimulationRun, EngineError> {
    let topology = derive_topology(design, eta1, eta2)?;
    config.validate(&topology)?;
    let mra = build_mra_with(design, config.exec)?;
    let scheme = CodingScheme::new(&mra, &topology)?;
    let store = generate_files(&topology, config)?;
    let map_output = map_phase(&topology, &store, config)?;
    let transcript = shuffle_phase(&scheme, &map_output, config)?;
    let outputs = reduce_phase(&scheme, &transcript, &map_output, config)?;
    let oracle = oracle_outputs(&store, config, topology.num_functions());
    Ok(SimulationRun {
        config: *config,
        topology,
        mra,
        store,
        map_output,
        transcript,
        outputs,
        oracle,
    })
}
