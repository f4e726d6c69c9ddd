//! Packet layout derived from the array.
//!
//! For reducer `A` and a batch `B_λ` it cannot reach, the intermediate values
//! `{v_{q,n} : q ∈ W_A, n ∈ B_λ}` are concatenated (q ascending, then n
//! ascending) into one symbol of `η1 η2 β` bits. The symbol is cut into
//! `C(α, t)` contiguous packets, one per t-subset `U ⊆ A` in lexicographic
//! order. The packet for `U` sits at an array cell holding some integer `s`;
//! it is cut again into `t` sub-packets, one for each other block carrying
//! `s`, in design block order.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{EngineError, IvSource, MapOutput, SimConfig};
use crate::mra::Mra;
use crate::subsets::binomial;
use crate::topology::MadcTopology;

/// One cell of the array holding an integer: row `mapper`, column
/// `(reducer, u_index)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Occurrence {
    pub mapper: usize,
    /// Reducer index in design block order.
    pub reducer: usize,
    /// Position of `U` among the t-subsets of the reducer's block.
    pub u_index: usize,
    /// Reducers holding the other occurrences of the same integer, ascending.
    /// Sub-packet `i` of this cell's packet is addressed to `tags[i]`.
    pub tags: Vec<usize>,
}

impl Occurrence {
    pub fn tag_position(&self, reducer: usize) -> Option<usize> {
        self.tags.iter().position(|&r| r == reducer)
    }
}

/// Identifies sub-packet `U^{U_A, tag}_{W_A, B_λ}` by indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PacketKey {
    /// Reducer that needs the data (`A`).
    pub dest: usize,
    /// Batch / mapper `λ`.
    pub mapper: usize,
    pub u_index: usize,
    /// Reducer whose coded symbol carries this sub-packet.
    pub tag: usize,
}

/// Byte sizes at each level of the split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketSizes {
    pub iv: usize,
    pub symbol: usize,
    pub packet: usize,
    pub sub_packet: usize,
}

#[derive(Debug, Clone)]
pub struct CodingScheme {
    topology: MadcTopology,
    mra: Mra,
    occurrences: BTreeMap<u64, Vec<Occurrence>>,
}

impl CodingScheme {
    /// Indexes every integer of `mra`; each must occur exactly `t + 1` times,
    /// in distinct reducers.
    pub fn new(mra: &Mra, topology: &MadcTopology) -> Result<Self, EngineError> {
        if mra.num_points() != topology.num_mappers() || mra.t() != topology.t() {
            return Err(EngineError::Mismatch(format!(
                "array has Λ={} t={}, topology has Λ={} t={}",
                mra.num_points(),
                mra.t(),
                topology.num_mappers(),
                topology.t()
            )));
        }
        if mra.num_blocks() != topology.num_reducers()
            || mra
                .columns()
                .iter()
                .any(|c| topology.reducers().get(c.block_index) != Some(&c.block))
        {
            return Err(EngineError::Mismatch(
                "column blocks differ from reducer blocks".into(),
            ));
        }

        let per_block = mra.cols_per_block();
        let mut cells: BTreeMap<u64, Vec<(usize, usize, usize)>> = BTreeMap::new();
        for (value, positions) in mra.grid().occurrences() {
            for cell in positions {
                cells.entry(value).or_default().push((
                    cell.row + 1,
                    cell.col / per_block,
                    cell.col % per_block,
                ));
            }
        }

        let expected = topology.t() + 1;
        let mut occurrences = BTreeMap::new();
        for (value, mut list) in cells {
            if list.len() != expected {
                return Err(EngineError::CorruptMra {
                    value,
                    multiplicity: list.len(),
                    expected,
                });
            }
            list.sort_by_key(|&(_, reducer, _)| reducer);
            if list.windows(2).any(|w| w[0].1 == w[1].1) {
                return Err(EngineError::CorruptMra {
                    value,
                    multiplicity: list.len(),
                    expected,
                });
            }
            let reducers: Vec<usize> = list.iter().map(|&(_, r, _)| r).collect();
            let occ = list
                .iter()
                .map(|&(mapper, reducer, u_index)| Occurrence {
                    mapper,
                    reducer,
                    u_index,
                    tags: reducers.iter().copied().filter(|&r| r != reducer).collect(),
                })
                .collect();
            occurrences.insert(value, occ);
        }
        Ok(Self {
            topology: topology.clone(),
            mra: mra.clone(),
            occurrences,
        })
    }

    pub fn topology(&self) -> &MadcTopology {
        &self.topology
    }

    pub fn mra(&self) -> &Mra {
        &self.mra
    }

    pub fn sizes(&self, config: &SimConfig) -> PacketSizes {
        let t = self.topology.t();
        let per_block = binomial(self.topology.alpha(), t).expect("small") as usize;
        let iv = config.beta / 8;
        let symbol = self.topology.eta1() * self.topology.eta2() * iv;
        PacketSizes {
            iv,
            symbol,
            packet: symbol / per_block,
            sub_packet: symbol / per_block / t,
        }
    }

    /// Bits carried by one coded symbol, `η1 η2 β / (C(α,t) t)`.
    pub fn sub_packet_bits(&self, config: &SimConfig) -> u64 {
        (self.topology.eta1() * self.topology.eta2() * config.beta
            / (binomial(self.topology.alpha(), self.topology.t()).expect("small") as usize
                * self.topology.t())) as u64
    }

    pub fn occurrences_of(&self, s: u64) -> &[Occurrence] {
        self.occurrences.get(&s).map_or(&[], Vec::as_slice)
    }

    pub fn occurrence_at(
        &self,
        reducer: usize,
        mapper: usize,
        u_index: usize,
    ) -> Option<&Occurrence> {
        let col = self.mra.block_columns(reducer).start + u_index;
        let s = self.mra.entry(mapper, col).as_int()?;
        self.occurrences_of(s).iter().find(|o| o.reducer == reducer)
    }

    /// `S_A`: distinct integers in the reducer's columns, ascending.
    pub fn symbol_ids(&self, reducer: usize) -> Vec<u64> {
        let mut ids: Vec<u64> = self
            .mra
            .block_columns(reducer)
            .flat_map(|col| {
                (1..=self.mra.num_points()).filter_map(move |l| self.mra.entry(l, col).as_int())
            })
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// `U_{W_A, B_λ}` built from `source`. On failure returns the `(q, n)`
    /// that `source` could not provide.
    pub fn concatenated<S: IvSource + ?Sized>(
        &self,
        dest: usize,
        mapper: usize,
        source: &S,
    ) -> Result<Vec<u8>, (usize, usize)> {
        let mut out = Vec::new();
        for q in self.topology.functions_of_reducer(dest) {
            for n in self.topology.batch_files(mapper) {
                out.extend_from_slice(source.iv(q, n).ok_or((q, n))?);
            }
        }
        Ok(out)
    }

    /// Sub-packet of `occ`'s packet addressed to reducer `tag`.
    pub fn sub_packet<S: IvSource + ?Sized>(
        &self,
        occ: &Occurrence,
        tag: usize,
        sizes: PacketSizes,
        source: &S,
    ) -> Result<Vec<u8>, (usize, usize)> {
        let position = occ
            .tag_position(tag)
            .expect("tag belongs to the occurrence's integer");
        let symbol = self.concatenated(occ.reducer, occ.mapper, source)?;
        let start = occ.u_index * sizes.packet + position * sizes.sub_packet;
        Ok(symbol[start..start + sizes.sub_packet].to_vec())
    }
}

/// Every sub-packet of the scheme, computed with global knowledge.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PacketTable {
    packets: BTreeMap<PacketKey, Vec<u8>>,
}

impl PacketTable {
    pub fn get(&self, key: &PacketKey) -> Option<&[u8]> {
        self.packets.get(key).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PacketKey, &[u8])> {
        self.packets.iter().map(|(k, v)| (k, v.as_slice()))
    }

    /// Keys of the sub-packets that split `U^{U_A}_{W_A, B_λ}`, in order.
    pub fn split_of(&self, dest: usize, mapper: usize, u_index: usize) -> Vec<PacketKey> {
        self.packets
            .keys()
            .filter(|k| k.dest == dest && k.mapper == mapper && k.u_index == u_index)
            .copied()
            .collect()
    }
}

pub fn packetize(
    scheme: &CodingScheme,
    map_output: &MapOutput,
    config: &SimConfig,
) -> Result<PacketTable, EngineError> {
    config.validate(scheme.topology())?;
    let sizes = scheme.sizes(config);
    let topo = scheme.topology();
    let mut packets = BTreeMap::new();
    for dest in 0..topo.num_reducers() {
        let block = &topo.reducers()[dest];
        for mapper in (1..=topo.num_mappers()).filter(|&m| !block.contains(m)) {
            for u_index in 0..scheme.mra().cols_per_block() {
                let occ = scheme.occurrence_at(dest, mapper, u_index).ok_or_else(|| {
                    EngineError::Mismatch(format!(
                        "cell ({mapper}, {block}/{u_index}) is a star outside the block"
                    ))
                })?;
                for &tag in &occ.tags {
                    let sub = scheme
                        .sub_packet(occ, tag, sizes, map_output)
                        .expect("map output holds every value");
                    packets.insert(
                        PacketKey {
                            dest,
                            mapper,
                            u_index,
                            tag,
                        },
                        sub,
                    );
                }
            }
        }
    }
    Ok(PacketTable { packets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::fano_plane;
    use crate::engine::{generate_files, map_phase};
    use crate::mra::build_mra;
    use crate::subsets::KSubset;
    use crate::topology::derive_topology;

    fn fano_scheme() -> (CodingScheme, MapOutput, SimConfig) {
        let design = fano_plane();
        let topo = derive_topology(&design, 1, 1).unwrap();
        let cfg = SimConfig::for_topology(&topo, 48, 1);
        let store = generate_files(&topo, &cfg).unwrap();
        let out = map_phase(&topo, &store, &cfg).unwrap();
        (
            CodingScheme::new(&build_mra(&design).unwrap(), &topo).unwrap(),
            out,
            cfg,
        )
    }

    fn block_index(scheme: &CodingScheme, label: &[usize]) -> usize {
        let b = KSubset::from_sorted(label.to_vec()).unwrap();
        scheme.topology().reducer_index(&b).unwrap()
    }

    #[test]
    fn fano_reducer_123_batch_4() {
        let (scheme, out, cfg) = fano_scheme();
        let sizes = scheme.sizes(&cfg);
        assert_eq!(
            sizes,
            PacketSizes {
                iv: 6,
                symbol: 6,
                packet: 2,
                sub_packet: 1
            }
        );
        assert_eq!(scheme.sub_packet_bits(&cfg), 48 / 6);

        let table = packetize(&scheme, &out, &cfg).unwrap();
        let r123 = block_index(&scheme, &[1, 2, 3]);
        // U_{W_123, B_4} is split over U = {12}, {13}, {23}
        let subs = scheme.mra().columns()[scheme.mra().block_columns(r123)]
            .iter()
            .map(|c| c.subset.to_string())
            .collect::<Vec<_>>();
        assert_eq!(subs, ["{12}", "{13}", "{23}"]);

        // packet {12} at s = 2 goes to {145} and {246}
        let keys = table.split_of(r123, 4, 0);
        let tags: Vec<String> = keys
            .iter()
            .map(|k| scheme.topology().reducers()[k.tag].to_string())
            .collect();
        assert_eq!(tags, ["{145}", "{246}"]);

        // reassembling all sub-packets gives back v_{1,4}
        let mut rebuilt = Vec::new();
        for u in 0..3 {
            for key in table.split_of(r123, 4, u) {
                rebuilt.extend_from_slice(table.get(&key).unwrap());
            }
        }
        assert_eq!(rebuilt, out.iv(1, 4).unwrap());
        // 7 reducers x 4 missing batches x 3 packets x 2 sub-packets
        assert_eq!(table.len(), 7 * 4 * 3 * 2);
    }

    #[test]
    fn symbol_ids_for_123() {
        let (scheme, _, _) = fano_scheme();
        let r123 = block_index(&scheme, &[1, 2, 3]);
        assert_eq!(
            scheme.symbol_ids(r123),
            vec![2, 3, 4, 5, 6, 7, 8, 9, 16, 17, 18, 19]
        );
        let occ = scheme.occurrences_of(2);
        assert_eq!(occ.len(), 3);
        let blocks: Vec<String> = occ
            .iter()
            .map(|o| scheme.topology().reducers()[o.reducer].to_string())
            .collect();
        assert_eq!(blocks, ["{123}", "{145}", "{246}"]);
    }

    #[test]
    fn corrupt_array_is_rejected() {
        let design = fano_plane();
        let topo = derive_topology(&design, 1, 1).unwrap();
        let mra = build_mra(&design).unwrap();
        let mut text = mra.to_csv();
        // row {4}: first cell 2 -> 3, so 3 occurs four times and 2 twice
        text = text.replacen("{4},2,", "{4},3,", 1);
        let bad = crate::mra::import_mra(text.as_bytes()).unwrap();
        assert!(matches!(
            CodingScheme::new(&bad, &topo),
            Err(EngineError::CorruptMra { .. })
        ));
    }
}
