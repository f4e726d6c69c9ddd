//! Computation and communication loads as exact rationals.
//!
//! Decimals appear only when a report is rendered, truncated toward zero to
//! two places (2/7 renders as `0.28`).

use num_rational::Ratio;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::engine::{ShuffleTranscript, SimConfig};
use crate::subsets::binomial;
use crate::topology::{computation_load, MadcTopology};

pub type Rational = Ratio<u64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("parameters need Λ > α ≥ t ≥ 1 (Λ={num_points}, α={alpha}, t={t})")]
    Parameters {
        num_points: usize,
        alpha: usize,
        t: usize,
    },
    #[error("no t-(Λ,α,1) design: C({num_points},{t}) / C({alpha},{t}) is not an integer")]
    NoDesign {
        num_points: usize,
        alpha: usize,
        t: usize,
    },
}

/// Truncates `value` toward zero to `places` decimals.
pub fn format_decimal(value: Rational, places: u32) -> String {
    let scale = 10u64.pow(places);
    let scaled = value.numer() * scale / value.denom();
    let (int, frac) = (scaled / scale, scaled % scale);
    if places == 0 {
        int.to_string()
    } else {
        format!("{int}.{frac:0width$}", width = places as usize)
    }
}

/// Serializes a rational as `{"num", "den", "decimal"}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Exact(pub Rational);

impl Serialize for Exact {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Rational", 3)?;
        st.serialize_field("num", self.0.numer())?;
        st.serialize_field("den", self.0.denom())?;
        st.serialize_field("decimal", &format_decimal(self.0, 2))?;
        st.end()
    }
}

fn check(num_points: usize, alpha: usize, t: usize) -> Result<(), MetricsError> {
    if num_points > alpha && alpha >= t && t >= 1 {
        Ok(())
    } else {
        Err(MetricsError::Parameters {
            num_points,
            alpha,
            t,
        })
    }
}

/// `(Λ − α) / (Λ t)`.
pub fn theoretical_load(
    num_points: usize,
    alpha: usize,
    t: usize,
) -> Result<Rational, MetricsError> {
    check(num_points, alpha, t)?;
    Ok(Ratio::new(
        (num_points - alpha) as u64,
        (num_points * t) as u64,
    ))
}

/// Every reducer receives its missing intermediate values uncoded:
/// `(Λ − α) / Λ`.
pub fn uncoded_load(num_points: usize, alpha: usize) -> Result<Rational, MetricsError> {
    check(num_points, alpha, 1)?;
    Ok(Ratio::new((num_points - alpha) as u64, num_points as u64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RunParameters {
    pub num_points: usize,
    pub alpha: usize,
    pub t: usize,
    pub num_reducers: usize,
    pub num_files: usize,
    pub num_functions: usize,
    pub eta1: usize,
    pub eta2: usize,
    pub beta: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub computation_load: Exact,
    pub measured_comm_load: Exact,
    pub theoretical_comm_load: Exact,
    pub uncoded_comm_load: Exact,
    pub gain_factor: Exact,
    pub total_bits: u64,
    pub num_symbols: usize,
    pub parameters: RunParameters,
}

impl LoadReport {
    pub fn measured_matches_theory(&self) -> bool {
        self.measured_comm_load == self.theoretical_comm_load
    }
}

/// Loads of a finished run. The measured load is
/// `total transcript bits / (Q N β)`.
pub fn measured_loads(
    transcript: &ShuffleTranscript,
    topology: &MadcTopology,
    config: &SimConfig,
) -> Result<LoadReport, MetricsError> {
    let (lambda, alpha, t) = (topology.num_mappers(), topology.alpha(), topology.t());
    let total_bits = transcript.total_bits();
    let all_iv_bits = (topology.num_functions() * topology.num_files() * config.beta) as u64;
    let measured = Ratio::new(total_bits, all_iv_bits);
    let uncoded = uncoded_load(lambda, alpha)?;
    let gain = if *measured.numer() == 0 {
        Ratio::from_integer(0)
    } else {
        uncoded / measured
    };
    Ok(LoadReport {
        computation_load: Exact(computation_load(topology)),
        measured_comm_load: Exact(measured),
        theoretical_comm_load: Exact(theoretical_load(lambda, alpha, t)?),
        uncoded_comm_load: Exact(uncoded),
        gain_factor: Exact(gain),
        total_bits,
        num_symbols: transcript.len(),
        parameters: RunParameters {
            num_points: lambda,
            alpha,
            t,
            num_reducers: topology.num_reducers(),
            num_files: topology.num_files(),
            num_functions: topology.num_functions(),
            eta1: topology.eta1(),
            eta2: topology.eta2(),
            beta: config.beta,
        },
    })
}

/// Published communication load of the combinatorial-topology scheme at
/// `Λ = 7, α = 3, r = 1`, carried as a constant.
pub const CT_REFERENCE_LOAD_7_3: (u64, u64) = (19, 100);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CtComparison {
    pub num_mappers: usize,
    pub alpha: usize,
    pub t: usize,
    pub k_tdesign: u64,
    pub k_ct: u64,
    pub batches: usize,
    pub files: usize,
    pub functions_tdesign: u64,
    pub functions_ct: u64,
    pub load_tdesign: Exact,
    /// Only known for `(Λ, α) = (7, 3)`.
    pub load_ct_reference: Option<Exact>,
}

/// Side-by-side counts for the design-based topology and the combinatorial
/// topology with one reducer per α-subset, both with `η1 = η2 = 1`.
pub fn ct_comparison(
    num_points: usize,
    alpha: usize,
    t: usize,
) -> Result<CtComparison, MetricsError> {
    check(num_points, alpha, t)?;
    let bin = |n, k| binomial(n, k).expect("parameters fit u64");
    let (all_t, per_block) = (bin(num_points, t), bin(alpha, t));
    if all_t % per_block != 0 {
        return Err(MetricsError::NoDesign {
            num_points,
            alpha,
            t,
        });
    }
    let k_tdesign = all_t / per_block;
    let k_ct = bin(num_points, alpha);
    let load_ct_reference = ((num_points, alpha) == (7, 3))
        .then(|| Exact(Ratio::new(CT_REFERENCE_LOAD_7_3.0, CT_REFERENCE_LOAD_7_3.1)));
    Ok(CtComparison {
        num_mappers: num_points,
        alpha,
        t,
        k_tdesign,
        k_ct,
        batches: num_points,
        files: num_points,
        functions_tdesign: k_tdesign,
        functions_ct: k_ct,
        load_tdesign: Exact(theoretical_load(num_points, alpha, t)?),
        load_ct_reference,
    })
}

impl CtComparison {
    /// `(label, t-design, CT)` rows shared by the text and JSON views.
    pub fn rows(&self) -> Vec<(&'static str, String, String)> {
        vec![
            (
                "No. of mappers: Λ",
                self.num_mappers.to_string(),
                self.num_mappers.to_string(),
            ),
            (
                "No. of reducers: K",
                self.k_tdesign.to_string(),
                self.k_ct.to_string(),
            ),
            (
                "No. of batches: F",
                self.batches.to_string(),
                self.batches.to_string(),
            ),
            (
                "No. of files: N",
                self.files.to_string(),
                self.files.to_string(),
            ),
            (
                "No. of output functions: Q",
                self.functions_tdesign.to_string(),
                self.functions_ct.to_string(),
            ),
            (
                "Communication load: L",
                format_decimal(self.load_tdesign.0, 2),
                self.load_ct_reference
                    .map_or_else(|| "n/a".to_string(), |r| format_decimal(r.0, 2)),
            ),
        ]
    }

    pub fn render_text(&self) -> String {
        let header = ("Parameters", "t-design".to_string(), "CT".to_string());
        let rows = self.rows();
        let width = |f: &dyn Fn(&(&str, String, String)) -> usize| {
            rows.iter()
                .map(f)
                .chain(std::iter::once(f(&header)))
                .max()
                .unwrap_or(0)
        };
        let w0 = width(&|r| r.0.chars().count());
        let w1 = width(&|r| r.1.chars().count());
        let w2 = width(&|r| r.2.chars().count());
        let line = |a: &str, b: &str, c: &str| {
            let pad = |s: &str, w: usize| format!("{s}{}", " ".repeat(w - s.chars().count()));
            format!("| {} | {} | {} |\n", pad(a, w0), pad(b, w1), pad(c, w2))
        };
        let rule = format!(
            "+{}+{}+{}+\n",
            "-".repeat(w0 + 2),
            "-".repeat(w1 + 2),
            "-".repeat(w2 + 2)
        );
        let mut out = String::new();
        out.push_str(&format!(
            "Comparison of t-design and CT for Λ = {}, α = {}, t = {}, r = 1\n",
            self.num_mappers, self.alpha, self.t
        ));
        out.push_str(&rule);
        out.push_str(&line(header.0, &header.1, &header.2));
        out.push_str(&rule);
        for (label, a, b) in &rows {
            out.push_str(&line(label, a, b));
        }
        out.push_str(&rule);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::fano_plane;
    use crate::engine::simulate;
    use crate::topology::derive_topology;

    #[test]
    fn closed_forms() {
        assert_eq!(theoretical_load(7, 3, 2).unwrap(), Ratio::new(2, 7));
        assert_eq!(theoretical_load(9, 3, 2).unwrap(), Ratio::new(1, 3));
        assert_eq!(theoretical_load(8, 4, 3).unwrap(), Ratio::new(1, 6));
        assert_eq!(theoretical_load(15, 3, 2).unwrap(), Ratio::new(2, 5));
        assert!(theoretical_load(3, 3, 2).is_err());
        assert_eq!(uncoded_load(7, 3).unwrap(), Ratio::new(4, 7));
        assert_eq!(uncoded_load(9, 3).unwrap(), Ratio::new(2, 3));
        assert_eq!(
            uncoded_load(7, 3).unwrap() / theoretical_load(7, 3, 2).unwrap(),
            Ratio::from_integer(2)
        );
    }

    #[test]
    fn decimals_truncate() {
        assert_eq!(format_decimal(Ratio::new(2, 7), 2), "0.28");
        assert_eq!(format_decimal(Ratio::new(19, 100), 2), "0.19");
        assert_eq!(format_decimal(Ratio::new(2, 5), 2), "0.40");
        assert_eq!(format_decimal(Ratio::new(7, 2), 0), "3");
        assert_eq!(format_decimal(Ratio::new(1, 6), 4), "0.1666");
        let json = serde_json::to_string(&Exact(Ratio::new(2, 7))).unwrap();
        assert_eq!(json, r#"{"num":2,"den":7,"decimal":"0.28"}"#);
    }

    #[test]
    fn fano_measured_load() {
        let design = fano_plane();
        let topo = derive_topology(&design, 1, 1).unwrap();
        for beta in [48, 96, 480] {
            let cfg = SimConfig::for_topology(&topo, beta, 3);
            let run = simulate(&design, 1, 1, &cfg).unwrap();
            let report = measured_loads(&run.transcript, &run.topology, &cfg).unwrap();
            assert_eq!(report.measured_comm_load.0, Ratio::new(2, 7));
            assert_eq!(report.computation_load.0, Ratio::from_integer(1));
            assert_eq!(report.gain_factor.0, Ratio::from_integer(2));
            assert_eq!(report.num_symbols, 84);
            assert_eq!(report.total_bits, 84 * beta as u64 / 6);
            assert!(report.measured_matches_theory());
        }
    }

    #[test]
    fn ct_table() {
        let c = ct_comparison(7, 3, 2).unwrap();
        assert_eq!((c.k_tdesign, c.k_ct), (7, 35));
        assert_eq!(c.load_ct_reference, Some(Exact(Ratio::new(19, 100))));
        let c = ct_comparison(9, 3, 2).unwrap();
        assert_eq!((c.k_tdesign, c.k_ct), (12, 84));
        assert!(c.load_ct_reference.is_none());
        assert!(matches!(
            ct_comparison(8, 3, 2),
            Err(MetricsError::NoDesign { .. })
        ));
    }
}
