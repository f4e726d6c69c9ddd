//! Mapper/reducer topology induced by a Steiner system.
//!
//! Mapper `λ` stores the single batch `B_λ`; reducer `A` (one per block) is
//! wired to the mappers in `A` and owns a contiguous range of `η2` output
//! functions chosen by the block's position in design order.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::designs::Design;
use crate::subsets::KSubset;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("topology needs a Steiner system (m = 1), got m = {0}")]
    UnsupportedDesign(usize),
    #[error("{0} must be positive")]
    ZeroParameter(&'static str),
    #[error("unknown reducer {0}")]
    UnknownReducer(KSubset),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MadcTopology {
    num_mappers: usize,
    alpha: usize,
    t: usize,
    eta1: usize,
    eta2: usize,
    reducers: Vec<KSubset>,
    /// Batch indices (1-based) stored by each mapper.
    mapper_batches: Vec<Vec<usize>>,
}

impl MadcTopology {
    pub fn num_mappers(&self) -> usize {
        self.num_mappers
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn eta1(&self) -> usize {
        self.eta1
    }

    pub fn eta2(&self) -> usize {
        self.eta2
    }

    /// `K`, one reducer per block.
    pub fn num_reducers(&self) -> usize {
        self.reducers.len()
    }

    /// `N = η1 Λ`.
    pub fn num_files(&self) -> usize {
        self.eta1 * self.num_mappers
    }

    /// `Q = η2 K`.
    pub fn num_functions(&self) -> usize {
        self.eta2 * self.reducers.len()
    }

    pub fn reducers(&self) -> &[KSubset] {
        &self.reducers
    }

    pub fn reducer_index(&self, block: &KSubset) -> Option<usize> {
        self.reducers.iter().position(|b| b == block)
    }

    /// Files of batch `f` (1-based): `w_{(f-1)η1+1}, ..., w_{fη1}`.
    pub fn batch_files(&self, batch: usize) -> RangeInclusive<usize> {
        (batch - 1) * self.eta1 + 1..=batch * self.eta1
    }

    /// `M_λ`, batches stored by mapper `λ` (1-based).
    pub fn mapper_batches(&self, mapper: usize) -> &[usize] {
        &self.mapper_batches[mapper - 1]
    }

    /// Mappers wired to reducer `k` (0-based index in block order).
    pub fn connectivity(&self, reducer: usize) -> &[usize] {
        self.reducers[reducer].elements()
    }

    /// `W_A` for reducer `k` (0-based): `{kη2 + 1, ..., (k+1)η2}`.
    pub fn functions_of_reducer(&self, reducer: usize) -> RangeInclusive<usize> {
        reducer * self.eta2 + 1..=(reducer + 1) * self.eta2
    }

    /// Reducer (0-based) that owns output function `q` (1-based).
    pub fn owner_of_function(&self, q: usize) -> usize {
        (q - 1) / self.eta2
    }

    pub fn summary(&self) -> TopologySummary {
        TopologySummary {
            num_mappers: self.num_mappers,
            num_reducers: self.num_reducers(),
            num_files: self.num_files(),
            num_functions: self.num_functions(),
            eta1: self.eta1,
            eta2: self.eta2,
            alpha: self.alpha,
            t: self.t,
            mappers: (1..=self.num_mappers)
                .map(|m| MapperSummary {
                    mapper: m,
                    batches: self.mapper_batches(m).to_vec(),
                })
                .collect(),
            reducers: self
                .reducers
                .iter()
                .enumerate()
                .map(|(k, block)| ReducerSummary {
                    block: block.to_string(),
                    mappers: block.elements().to_vec(),
                    functions: self.functions_of_reducer(k).collect(),
                })
                .collect(),
        }
    }
}

/// JSON view of a topology.
#[derive(Debug, Clone, Serialize)]
pub struct TopologySummary {
    pub num_mappers: usize,
    pub num_reducers: usize,
    pub num_files: usize,
    pub num_functions: usize,
    pub eta1: usize,
    pub eta2: usize,
    pub alpha: usize,
    pub t: usize,
    pub mappers: Vec<MapperSummary>,
    pub reducers: Vec<ReducerSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MapperSummary {
    pub mapper: usize,
    pub batches: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReducerSummary {
    pub block: String,
    pub mappers: Vec<usize>,
    pub functions: Vec<usize>,
}

pub fn derive_topology(
    design: &Design,
    eta1: usize,
    eta2: usize,
) -> Result<MadcTopology, TopologyError> {
    if design.m() != 1 {
        return Err(TopologyError::UnsupportedDesign(design.m()));
    }
    if eta1 == 0 {
        return Err(TopologyError::ZeroParameter("eta1"));
    }
    if eta2 == 0 {
        return Err(TopologyError::ZeroParameter("eta2"));
    }
    Ok(MadcTopology {
        num_mappers: design.num_points(),
        alpha: design.alpha(),
        t: design.t(),
        eta1,
        eta2,
        reducers: design.blocks().to_vec(),
        mapper_batches: (1..=design.num_points()).map(|l| vec![l]).collect(),
    })
}

/// `R_A`: batch indices reachable from reducer `block`.
pub fn accessible_batches(
    topology: &MadcTopology,
    block: &KSubset,
) -> Result<BTreeSet<usize>, TopologyError> {
    let k = topology
        .reducer_index(block)
        .ok_or_else(|| TopologyError::UnknownReducer(block.clone()))?;
    Ok(topology
        .connectivity(k)
        .iter()
        .flat_map(|&m| topology.mapper_batches(m).iter().copied())
        .collect())
}

/// Files mapped across all mappers divided by `N`.
pub fn computation_load(topology: &MadcTopology) -> Ratio<u64> {
    let mapped: usize = topology
        .mapper_batches
        .iter()
        .map(|bs| bs.len() * topology.eta1)
        .sum();
    Ratio::new(mapped as u64, topology.num_files() as u64)
}
