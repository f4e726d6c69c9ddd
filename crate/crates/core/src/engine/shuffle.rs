//! Coded multicast: reducer `A` sends `X_A^s` for every integer `s` in its
//! columns, the XOR of the `t` sub-packets addressed to `A` by the other
//! occurrences of `s`.

use std::collections::HashMap;

use serde::Serialize;

use super::scheme::{CodingScheme, PacketKey};
use super::{EngineError, MapOutput, SimConfig};
use crate::par;
use crate::subsets::KSubset;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedSymbol {
    /// Sending reducer, index in design block order.
    pub sender: usize,
    pub sender_block: KSubset,
    pub s: u64,
    pub payload: Vec<u8>,
    pub bit_len: u64,
    /// Sub-packets XORed into the payload, when recording is enabled.
    pub provenance: Option<Vec<PacketKey>>,
}

/// Broadcast log in (sender order, ascending `s`) order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ShuffleTranscript {
    symbols: Vec<CodedSymbol>,
}

impl ShuffleTranscript {
    pub fn from_symbols(symbols: Vec<CodedSymbol>) -> Self {
        Self { symbols }
    }

    pub fn symbols(&self) -> &[CodedSymbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn total_bits(&self) -> u64 {
        self.symbols.iter().map(|s| s.bit_len).sum()
    }

    pub fn symbols_from(&self, sender: usize) -> impl Iterator<Item = &CodedSymbol> {
        self.symbols.iter().filter(move |s| s.sender == sender)
    }

    /// Copy with the symbol at `index` dropped.
    pub fn without(&self, index: usize) -> Self {
        let mut symbols = self.symbols.clone();
        symbols.remove(index);
        Self { symbols }
    }

    /// Lookup by `(sender, s)`.
    pub fn index(&self) -> HashMap<(usize, u64), &CodedSymbol> {
        self.symbols.iter().map(|s| ((s.sender, s.s), s)).collect()
    }

    pub fn dump(&self) -> TranscriptDump {
        TranscriptDump {
            total_bits: self.total_bits(),
            num_symbols: self.symbols.len(),
            symbols: self
                .symbols
                .iter()
                .map(|s| SymbolDump {
                    sender: s.sender_block.to_string(),
                    s: s.s,
                    payload_hex: hex::encode(&s.payload),
                    bit_length: s.bit_len,
                })
                .collect(),
        }
    }
}

/// JSON form of a transcript.
#[derive(Debug, Clone, Serialize)]
pub struct TranscriptDump {
    pub total_bits: u64,
    pub num_symbols: usize,
    pub symbols: Vec<SymbolDump>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolDump {
    pub sender: String,
    pub s: u64,
    pub payload_hex: String,
    pub bit_length: u64,
}

fn xor_into(acc: &mut [u8], other: &[u8]) {
    for (a, b) in acc.iter_mut().zip(other) {
        *a ^= b;
    }
}

/// Each reducer encodes using only the intermediate values of the mappers
/// it is wired to. An operand outside that set is a scheme violation.
pub fn shuffle_phase(
    scheme: &CodingScheme,
    map_output: &MapOutput,
    config: &SimConfig,
) -> Result<ShuffleTranscript, EngineError> {
    let topo = scheme.topology();
    config.validate(topo)?;
    let sizes = scheme.sizes(config);
    let bit_len = scheme.sub_packet_bits(config);

    let per_sender = par::map_range(config.exec, topo.num_reducers(), |sender| {
        let block = &topo.reducers()[sender];
        let local = map_output.view(topo.connectivity(sender));
        let mut out = Vec::new();
        for s in scheme.symbol_ids(sender) {
            let mut payload = vec![0u8; sizes.sub_packet];
            let mut provenance = Vec::new();
            for occ in scheme
                .occurrences_of(s)
                .iter()
                .filter(|o| o.reducer != sender)
            {
                let violation = || EngineError::SchemeViolation {
                    sender: block.clone(),
                    s,
                    mapper: occ.mapper,
                };
                if !block.contains(occ.mapper) {
                    return Err(violation());
                }
                let sub = scheme
                    .sub_packet(occ, sender, sizes, &local)
                    .map_err(|_| violation())?;
                xor_into(&mut payload, &sub);
                if config.record_provenance {
                    provenance.push(PacketKey {
                        dest: occ.reducer,
                        mapper: occ.mapper,
                        u_index: occ.u_index,
                        tag: sender,
                    });
                }
            }
            out.push(CodedSymbol {
                sender,
                sender_block: block.clone(),
                s,
                payload,
                bit_len,
                provenance: config.record_provenance.then_some(provenance),
            });
        }
        Ok(out)
    });

    let mut symbols = Vec::new();
    for result in per_sender {
        symbols.extend(result?);
    }
    Ok(ShuffleTranscript { symbols })
}
