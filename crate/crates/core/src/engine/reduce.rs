//! Decoding. Reducer `A` recovers each missing sub-packet from the coded
//! symbol of the block it is addressed to, by XORing off every other operand
//! (all of which come from batches `A` can reach), then evaluates its output
//! functions over the full ordered sequence of intermediate values.

use std::collections::{BTreeMap, HashMap};

use super::scheme::CodingScheme;
use super::shuffle::{CodedSymbol, ShuffleTranscript};
use super::{mock_reduce, DecodeError, EngineError, IvSource, MapOutput, SimConfig};
use crate::par;
use crate::subsets::KSubset;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReducerOutput {
    pub reducer: usize,
    pub block: KSubset,
    /// `q ↦ φ_q` for every `q ∈ W_A`.
    pub values: BTreeMap<usize, Vec<u8>>,
}

pub fn decode_reducer(
    scheme: &CodingScheme,
    reducer: usize,
    received: &HashMap<(usize, u64), &CodedSymbol>,
    map_output: &MapOutput,
    config: &SimConfig,
) -> Result<ReducerOutput, DecodeError> {
    let topo = scheme.topology();
    let block = &topo.reducers()[reducer];
    let local = map_output.view(topo.connectivity(reducer));
    let sizes = scheme.sizes(config);
    let per_block = scheme.mra().cols_per_block();

    // recovered U_{W_A, B_λ} for every unreachable λ
    let mut recovered: BTreeMap<usize, Vec<u8>> = BTreeMap::new();
    for mapper in (1..=topo.num_mappers()).filter(|&m| !block.contains(m)) {
        let mut symbol = vec![0u8; sizes.symbol];
        for u_index in 0..per_block {
            let own = scheme
                .occurrence_at(reducer, mapper, u_index)
                .expect("non-star cell outside the block");
            let s = scheme
                .mra()
                .entry(mapper, scheme.mra().block_columns(reducer).start + u_index);
            let s = s.as_int().expect("checked above");
            for (position, &tag) in own.tags.iter().enumerate() {
                let sender = &topo.reducers()[tag];
                let coded = received
                    .get(&(tag, s))
                    .ok_or_else(|| DecodeError::MissingSymbol {
                        reducer: block.clone(),
                        s,
                        sender: sender.clone(),
                    })?;
                if coded.payload.len() != sizes.sub_packet {
                    return Err(DecodeError::BadLength {
                        reducer: block.clone(),
                        s,
                        sender: sender.clone(),
                        actual: coded.payload.len(),
                        expected: sizes.sub_packet,
                    });
                }
                let mut target = coded.payload.clone();
                for other in scheme
                    .occurrences_of(s)
                    .iter()
                    .filter(|o| o.reducer != tag && o.reducer != reducer)
                {
                    let known =
                        scheme
                            .sub_packet(other, tag, sizes, &local)
                            .map_err(|(q, n)| DecodeError::Unreconstructible {
                                reducer: block.clone(),
                                s,
                                operand: format!(
                                    "U^({},{})_(W_{},B_{}) needs v_{{{q},{n}}}",
                                    scheme.mra().columns()[scheme
                                        .mra()
                                        .block_columns(other.reducer)
                                        .start
                                        + other.u_index]
                                        .subset,
                                    sender,
                                    topo.reducers()[other.reducer],
                                    other.mapper
                                ),
                            })?;
                    for (a, b) in target.iter_mut().zip(&known) {
                        *a ^= b;
                    }
                }
                let start = u_index * sizes.packet + position * sizes.sub_packet;
                symbol[start..start + sizes.sub_packet].copy_from_slice(&target);
            }
        }
        recovered.insert(mapper, symbol);
    }

    let functions: Vec<usize> = topo.functions_of_reducer(reducer).collect();
    let mut values = BTreeMap::new();
    for (qi, &q) in functions.iter().enumerate() {
        let mut ivs: Vec<&[u8]> = Vec::with_capacity(topo.num_files());
        for n in 1..=topo.num_files() {
            let mapper = (n - 1) / topo.eta1() + 1;
            let iv = match recovered.get(&mapper) {
                Some(symbol) => {
                    let ni = n - topo.batch_files(mapper).start();
                    let start = (qi * topo.eta1() + ni) * sizes.iv;
                    &symbol[start..start + sizes.iv]
                }
                None => local.iv(q, n).expect("reachable batch"),
            };
            ivs.push(iv);
        }
        values.insert(q, mock_reduce(q, ivs, config.output_bits));
    }
    Ok(ReducerOutput {
        reducer,
        block: block.clone(),
        values,
    })
}

/// Decodes every reducer. The first failure in reducer order is returned.
pub fn reduce_phase(
    scheme: &CodingScheme,
    transcript: &ShuffleTranscript,
    map_output: &MapOutput,
    config: &SimConfig,
) -> Result<Vec<ReducerOutput>, EngineError> {
    config.validate(scheme.topology())?;
    let received = transcript.index();
    let results = par::map_range(config.exec, scheme.topology().num_reducers(), |k| {
        decode_reducer(scheme, k, &received, map_output, config)
    });
    results
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(EngineError::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::fano_plane;
    use crate::engine::{generate_files, map_phase, oracle_outputs, shuffle_phase};
    use crate::mra::build_mra;
    use crate::topology::derive_topology;

    fn fano_run() -> (
        CodingScheme,
        MapOutput,
        SimConfig,
        ShuffleTranscript,
        Vec<Vec<u8>>,
    ) {
        let design = fano_plane();
        let topo = derive_topology(&design, 1, 1).unwrap();
        let cfg = SimConfig::for_topology(&topo, 48, 21);
        let scheme = CodingScheme::new(&build_mra(&design).unwrap(), &topo).unwrap();
        let store = generate_files(&topo, &cfg).unwrap();
        let out = map_phase(&topo, &store, &cfg).unwrap();
        let transcript = shuffle_phase(&scheme, &out, &cfg).unwrap();
        let oracle = oracle_outputs(&store, &cfg, 7);
        (scheme, out, cfg, transcript, oracle)
    }

    #[test]
    fn all_reducers_match_oracle() {
        let (scheme, out, cfg, transcript, oracle) = fano_run();
        let outputs = reduce_phase(&scheme, &transcript, &out, &cfg).unwrap();
        for o in &outputs {
            assert_eq!(o.values.len(), 1);
            for (q, v) in &o.values {
                assert_eq!(&oracle[q - 1], v, "reducer {}", o.block);
            }
        }
    }

    #[test]
    fn reducer_123_needs_symbols_from_145_and_246() {
        let (scheme, out, cfg, transcript, _) = fano_run();
        // locate X^2 from {145}
        let idx = transcript
            .symbols()
            .iter()
            .position(|s| s.sender_block.to_string() == "{145}" && s.s == 2)
            .unwrap();
        let ablated = transcript.without(idx);
        let err = decode_reducer(&scheme, 0, &ablated.index(), &out, &cfg).unwrap_err();
        assert_eq!(
            err.to_string(),
            "reducer {123}: coded symbol X^2 from {145} not in transcript"
        );
        let idx = transcript
            .symbols()
            .iter()
            .position(|s| s.sender_block.to_string() == "{246}" && s.s == 2)
            .unwrap();
        assert!(decode_reducer(&scheme, 0, &transcript.without(idx).index(), &out, &cfg).is_err());
    }

    #[test]
    fn corrupted_payload_changes_output() {
        let (scheme, out, cfg, transcript, oracle) = fano_run();
        let mut symbols = transcript.symbols().to_vec();
        symbols[0].payload[0] ^= 0x80;
        let tampered = ShuffleTranscript::from_symbols(symbols);
        let outputs = reduce_phase(&scheme, &tampered, &out, &cfg).unwrap();
        let wrong = outputs
            .iter()
            .filter(|o| o.values.iter().any(|(q, v)| &oracle[q - 1] != v))
            .count();
        assert!(wrong >= 1);
    }
}
