//! `t-(Λ, α, m)` block designs: validation, loading, and a small catalog of
//! Steiner systems.
//!
//! Points are `1..=Λ`. Block order is preserved exactly as given; it fixes the
//! column order of the MapReduce array and the output-function assignment.

use std::fmt;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::subsets::{binomial, enumerate_subsets, rank_subset, KSubset, DEFAULT_MAX_N};

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid design: {0}")]
    Invalid(DesignReport),
    #[error("no Steiner triple system construction for order {0} (need v ≡ 3 mod 6, v ≥ 9)")]
    UnsupportedOrder(usize),
    #[error("{what}: closed form gives {closed_form}, direct count gives {counted}")]
    StatsMismatch {
        what: &'static str,
        closed_form: String,
        counted: String,
    },
}

/// Design-shaped data as read from disk, before any checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDesign {
    pub num_points: usize,
    pub t: usize,
    pub alpha: usize,
    pub m: usize,
    pub blocks: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DesignViolation {
    Parameters {
        num_points: usize,
        t: usize,
        alpha: usize,
        m: usize,
    },
    TooManyPoints {
        num_points: usize,
        limit: usize,
    },
    BlockSize {
        block: usize,
        expected: usize,
        actual: usize,
    },
    BlockNotSorted {
        block: usize,
    },
    PointOutOfRange {
        block: usize,
        point: usize,
    },
    Coverage {
        subset: Vec<usize>,
        count: usize,
        expected: usize,
    },
    BlockCount {
        expected: String,
        actual: usize,
    },
}

impl fmt::Display for DesignViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Parameters {
                num_points,
                t,
                alpha,
                m,
            } => write!(
                f,
                "parameters violate Λ > α ≥ t ≥ 1, m ≥ 1 (Λ={num_points}, α={alpha}, t={t}, m={m})"
            ),
            Self::TooManyPoints { num_points, limit } => {
                write!(f, "{num_points} points exceeds supported limit {limit}")
            }
            Self::BlockSize {
                block,
                expected,
                actual,
            } => write!(
                f,
                "block size mismatch: block #{} has {actual} points, expected {expected}",
                block + 1
            ),
            Self::BlockNotSorted { block } => {
                write!(f, "block #{} is not strictly increasing", block + 1)
            }
            Self::PointOutOfRange { block, point } => write!(
                f,
                "block #{} contains point {point} outside the point set",
                block + 1
            ),
            Self::Coverage {
                subset,
                count,
                expected,
            } => write!(
                f,
                "{}-subset {:?} covered {count} times, expected {expected}",
                subset.len(),
                subset
            ),
            Self::BlockCount { expected, actual } => {
                write!(f, "block count {actual}, expected {expected}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DesignReport {
    pub valid: bool,
    pub violations: Vec<DesignViolation>,
}

impl fmt::Display for DesignReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.valid {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every design axiom. Coverage is counted for all `C(Λ, t)`
/// t-subsets; it is skipped if the blocks are structurally broken.
pub fn validate_design(candidate: &RawDesign) -> DesignReport {
    let RawDesign {
        num_points,
        t,
        alpha,
        m,
        ref blocks,
    } = *candidate;
    let mut violations = Vec::new();
    if !(t >= 1 && alpha >= t && num_points > alpha && m >= 1) {
        violations.push(DesignViolation::Parameters {
            num_points,
            t,
            alpha,
            m,
        });
    }
    if num_points > DEFAULT_MAX_N {
        violations.push(DesignViolation::TooManyPoints {
            num_points,
            limit: DEFAULT_MAX_N,
        });
    }
    if !violations.is_empty() {
        return DesignReport {
            valid: false,
            violations,
        };
    }

    for (i, block) in blocks.iter().enumerate() {
        if block.len() != alpha {
            violations.push(DesignViolation::BlockSize {
                block: i,
                expected: alpha,
                actual: block.len(),
            });
        }
        if block.windows(2).any(|w| w[0] >= w[1]) {
            violations.push(DesignViolation::BlockNotSorted { block: i });
        }
        if let Some(&point) = block.iter().find(|&&p| p == 0 || p > num_points) {
            violations.push(DesignViolation::PointOutOfRange { block: i, point });
        }
    }
    if !violations.is_empty() {
        return DesignReport {
            valid: false,
            violations,
        };
    }

    let all_t_subsets = enumerate_subsets(num_points, t).expect("parameters checked above");
    let mut coverage = vec![0usize; all_t_subsets.len()];
    for block in blocks {
        let block = KSubset::from_sorted(block.clone()).expect("sortedness checked above");
        for u in block.subsets_of_size(t) {
            let r = rank_subset(num_points, &u).expect("points checked above");
            coverage[r as usize - 1] += 1;
        }
    }
    for (subset, &count) in all_t_subsets.iter().zip(&coverage) {
        if count != m {
            violations.push(DesignViolation::Coverage {
                subset: subset.elements().to_vec(),
                count,
                expected: m,
            });
        }
    }

    let numerator = m as u64 * binomial(num_points, t).unwrap_or(0);
    let denominator = binomial(alpha, t).unwrap_or(1);
    if !numerator.is_multiple_of(denominator) || numerator / denominator != blocks.len() as u64 {
        violations.push(DesignViolation::BlockCount {
            expected: format!("{numerator}/{denominator}"),
            actual: blocks.len(),
        });
    }

    DesignReport {
        valid: violations.is_empty(),
        violations,
    }
}

/// A validated `t-(Λ, α, m)` design. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Design {
    num_points: usize,
    t: usize,
    alpha: usize,
    m: usize,
    blocks: Vec<KSubset>,
}

impl Design {
    pub fn from_raw(raw: RawDesign) -> Result<Self, DesignError> {
        let report = validate_design(&raw);
        if !report.valid {
            return Err(DesignError::Invalid(report));
        }
        let blocks = raw
            .blocks
            .into_iter()
            .map(|b| KSubset::from_sorted(b).expect("validated"))
            .collect();
        Ok(Self {
            num_points: raw.num_points,
            t: raw.t,
            alpha: raw.alpha,
            m: raw.m,
            blocks,
        })
    }

    pub fn to_raw(&self) -> RawDesign {
        RawDesign {
            num_points: self.num_points,
            t: self.t,
            alpha: self.alpha,
            m: self.m,
            blocks: self.blocks.iter().map(|b| b.elements().to_vec()).collect(),
        }
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn blocks(&self) -> &[KSubset] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Short `t-(Λ,α,m)` label.
    pub fn label(&self) -> String {
        format!("{}-({},{},{})", self.t, self.num_points, self.alpha, self.m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("plain data serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DesignStats {
    pub num_blocks: usize,
    /// Blocks through each point.
    pub replication: usize,
}

/// Block count and replication number, from the closed forms and
/// cross-checked against direct counting.
pub fn design_stats(design: &Design) -> Result<DesignStats, DesignError> {
    let (n, t, a, m) = (design.num_points, design.t, design.alpha, design.m as u64);
    let ratio = |num: u64, den: u64, what: &'static str| -> Result<u64, DesignError> {
        if den == 0 || !num.is_multiple_of(den) {
            return Err(DesignError::StatsMismatch {
                what,
                closed_form: format!("{num}/{den}"),
                counted: "non-integral".into(),
            });
        }
        Ok(num / den)
    };
    let bin = |n, k| binomial(n, k).unwrap_or(0);
    let num_blocks = ratio(m * bin(n, t), bin(a, t), "block count")?;
    let replication = ratio(m * bin(n - 1, t - 1), bin(a - 1, t - 1), "replication")?;

    if num_blocks != design.blocks.len() as u64 {
        return Err(DesignError::StatsMismatch {
            what: "block count",
            closed_form: num_blocks.to_string(),
            counted: design.blocks.len().to_string(),
        });
    }
    for point in 1..=n {
        let count = design.blocks.iter().filter(|b| b.contains(point)).count() as u64;
        if count != replication {
            return Err(DesignError::StatsMismatch {
                what: "replication",
                closed_form: replication.to_string(),
                counted: format!("{count} at point {point}"),
            });
        }
    }
    Ok(DesignStats {
        num_blocks: num_blocks as usize,
        replication: replication as usize,
    })
}

fn from_lists(num_points: usize, t: usize, alpha: usize, blocks: &[&[usize]]) -> Design {
    Design::from_raw(RawDesign {
        num_points,
        t,
        alpha,
        m: 1,
        blocks: blocks.iter().map(|b| b.to_vec()).collect(),
    })
    .expect("catalog designs are valid")
}

/// The 2-(7,3,1) design in the block order used throughout the worked example.
pub fn fano_plane() -> Design {
    from_lists(
        7,
        2,
        3,
        &[
            &[1, 2, 3],
            &[1, 4, 5],
            &[1, 6, 7],
            &[2, 4, 6],
            &[2, 5, 7],
            &[3, 4, 7],
            &[3, 5, 6],
        ],
    )
}

/// Steiner quadruple system 3-(8,4,1): the planes of AG(3,2).
pub fn steiner_quadruple_system_8() -> Design {
    from_lists(
        8,
        3,
        4,
        &[
            &[1, 2, 3, 4],
            &[1, 2, 5, 6],
            &[1, 2, 7, 8],
            &[1, 3, 5, 7],
            &[1, 3, 6, 8],
            &[1, 4, 5, 8],
            &[1, 4, 6, 7],
            &[2, 3, 5, 8],
            &[2, 3, 6, 7],
            &[2, 4, 5, 7],
            &[2, 4, 6, 8],
            &[3, 4, 5, 6],
            &[3, 4, 7, 8],
            &[5, 6, 7, 8],
        ],
    )
}

/// 2-(13,4,1): the projective plane of order 3, developed from the
/// difference set {0, 1, 3, 9} mod 13.
pub fn projective_plane_order_3() -> Design {
    from_lists(
        13,
        2,
        4,
        &[
            &[1, 2, 4, 10],
            &[2, 3, 5, 11],
            &[3, 4, 6, 12],
            &[4, 5, 7, 13],
            &[1, 5, 6, 8],
            &[2, 6, 7, 9],
            &[3, 7, 8, 10],
            &[4, 8, 9, 11],
            &[5, 9, 10, 12],
            &[6, 10, 11, 13],
            &[1, 7, 11, 12],
            &[2, 8, 12, 13],
            &[1, 3, 9, 13],
        ],
    )
}

/// Bose construction of a 2-(v,3,1) design for `v = 6n + 3`.
///
/// Point `(x, i)` with `x ∈ Z_{2n+1}`, `i ∈ Z_3` is numbered `i(2n+1) + x + 1`.
/// Blocks: `{(x,0),(x,1),(x,2)}` for each `x`, then `{(x,i),(y,i),(x∘y,i+1)}`
/// for `x < y`, where `x∘y = (x+y)/2 mod 2n+1`.
pub fn steiner_triple_system(v: usize) -> Result<Design, DesignError> {
    if v % 6 != 3 || !(9..=DEFAULT_MAX_N).contains(&v) {
        return Err(DesignError::UnsupportedOrder(v));
    }
    let q = v / 3;
    let half = q.div_ceil(2); // inverse of 2 mod q
    let point = |x: usize, i: usize| i * q + x + 1;
    let mut blocks = Vec::with_capacity(v * (v - 1) / 6);
    for x in 0..q {
        blocks.push(vec![point(x, 0), point(x, 1), point(x, 2)]);
    }
    for i in 0..3 {
        for x in 0..q {
            for y in x + 1..q {
                let z = (x + y) * half % q;
                let mut b = vec![point(x, i), point(y, i), point(z, (i + 1) % 3)];
                b.sort_unstable();
                blocks.push(b);
            }
        }
    }
    Design::from_raw(RawDesign {
        num_points: v,
        t: 2,
        alpha: 3,
        m: 1,
        blocks,
    })
}

/// Named designs shipped with the crate, in a fixed order.
pub fn catalog() -> Vec<(&'static str, Design)> {
    vec![
        ("fano", fano_plane()),
        ("sts9", steiner_triple_system(9).expect("9 ≡ 3 mod 6")),
        ("sts15", steiner_triple_system(15).expect("15 ≡ 3 mod 6")),
        ("s_3_4_8", steiner_quadruple_system_8()),
        ("s_2_4_13", projective_plane_order_3()),
    ]
}

pub fn catalog_design(name: &str) -> Option<Design> {
    catalog()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, d)| d)
}

pub fn parse_design(text: &str) -> Result<Design, DesignError> {
    let raw: RawDesign = serde_json::from_str(text)?;
    Design::from_raw(raw)
}

pub fn load_design_from_reader<R: Read>(reader: R) -> Result<Design, DesignError> {
    let raw: RawDesign = serde_json::from_reader(reader)?;
    Design::from_raw(raw)
}

pub fn load_design(path: impl AsRef<Path>) -> Result<Design, DesignError> {
    let text = fs::read_to_string(path)?;
    parse_design(&text)
}
