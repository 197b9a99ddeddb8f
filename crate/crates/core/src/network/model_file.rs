//! JSON model files. Site indices are 1-based on disk.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{SinkLabel, Sink, SiteNetwork};
use crate::dynamics::BathSpec;
use crate::error::ValidationError;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    sites: Vec<SiteEntry>,
    #[serde(default)]
    couplings: Vec<(usize, usize, f64)>,
    #[serde(default)]
    sinks: Vec<SinkEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    special_pair: Option<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bath: Option<BathSpec>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SiteEntry {
    energy_cm1: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SinkEntry {
    site: usize,
    label: SinkLabel,
    gamma_cm1: f64,
}

fn to_index(one_based: usize, n: usize, what: &str) -> Result<usize, ValidationError> {
    if one_based == 0 || one_based > n {
        return Err(ValidationError::invalid(format!(
            "{what} refers to site {one_based}, valid sites are 1..={n}"
        )));
    }
    Ok(one_based - 1)
}

/// Parses and validates a model document.
pub fn parse_network(text: &str) -> Result<SiteNetwork, ValidationError> {
    let file: ModelFile = serde_json::from_str(text)?;
    let n = file.sites.len();
    let energies: Vec<f64> = file.sites.iter().map(|s| s.energy_cm1).collect();

    let mut couplings = DMatrix::<f64>::zeros(n, n);
    let mut seen = DMatrix::<bool>::from_element(n, n, false);
    for &(i, j, v) in &file.couplings {
        let a = to_index(i, n, "coupling")?;
        let b = to_index(j, n, "coupling")?;
        if a == b {
            return Err(ValidationError::invalid(format!(
                "coupling [{i}, {j}] is a diagonal entry"
            )));
        }
        if seen[(a, b)] {
            let msg = if couplings[(a, b)] != v {
                format!(
                    "asymmetric couplings: [{i}, {j}] given as both {} and {v}",
                    couplings[(a, b)]
                )
            } else {
                format!("coupling pair [{i}, {j}] listed more than once")
            };
            return Err(ValidationError::invalid(msg));
        }
        seen[(a, b)] = true;
        seen[(b, a)] = true;
        couplings[(a, b)] = v;
        couplings[(b, a)] = v;
    }

    let sinks = file
        .sinks
        .iter()
        .map(|s| {
            Ok(Sink {
                site: to_index(s.site, n, "sink")?,
                gamma: s.gamma_cm1,
                label: s.label,
            })
        })
        .collect::<Result<Vec<_>, ValidationError>>()?;

    let special_pair = match file.special_pair {
        Some([a, b]) => Some((to_index(a, n, "special_pair")?, to_index(b, n, "special_pair")?)),
        None => None,
    };

    SiteNetwork::new(energies, couplings, sinks, special_pair)?.with_bath(file.bath)
}

pub fn load_network(path: impl AsRef<Path>) -> Result<SiteNetwork, ValidationError> {
    let text = std::fs::read_to_string(path)?;
    parse_network(&text)
}

/// Serializes a network; keys are emitted in the documented order.
pub fn save_network(net: &SiteNetwork) -> String {
    let n = net.n_sites();
    let mut couplings = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let v = net.couplings()[(i, j)];
            if v != 0.0 {
                couplings.push((i + 1, j + 1, v));
            }
        }
    }
    let file = ModelFile {
        sites: net
            .energies()
            .iter()
            .map(|&energy_cm1| SiteEntry { energy_cm1 })
            .collect(),
        couplings,
        sinks: net
            .sinks()
            .iter()
            .map(|s| SinkEntry {
                site: s.site + 1,
                label: s.label,
                gamma_cm1: s.gamma,
            })
            .collect(),
        special_pair: net.special_pair().map(|(a, b)| [a + 1, b + 1]),
        bath: net.bath().copied(),
    };
    let mut out = serde_json::to_string_pretty(&file).expect("model serialization is infallible");
    out.push('\n');
    out
}

pub fn write_network(net: &SiteNetwork, path: impl AsRef<Path>) -> Result<(), ValidationError> {
    std::fs::write(path, save_network(net))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_multimer;

    #[test]
    fn multimer_round_trips() {
        let net = build_multimer(100.0, 200.0, 200.0, 2.0).unwrap();
        let text = save_network(&net);
        assert_eq!(parse_network(&text).unwrap(), net);
    }

    #[test]
    fn bath_round_trips() {
        let net = build_multimer(100.0, 200.0, 0.3, 1e-3)
            .unwrap()
            .with_bath(Some(BathSpec::new(300.0, 35.0, 150.0).unwrap()))
            .unwrap();
        assert_eq!(parse_network(&save_network(&net)).unwrap(), net);
    }

    #[test]
    fn writer_key_order() {
        let text = save_network(&build_multimer(1.0, 2.0, 0.0, 0.0).unwrap());
        let pos = |k: &str| text.find(&format!("\"{k}\"")).unwrap();
        assert!(pos("sites") < pos("couplings"));
        assert!(pos("couplings") < pos("sinks"));
        assert!(pos("sinks") < pos("special_pair"));
    }

    #[test]
    fn reader_accepts_any_key_order() {
        let text = r#"{
            "special_pair": [1, 2],
            "sinks": [{"gamma_cm1": 3.0, "label": "L", "site": 2}],
            "couplings": [[1, 2, -5.5]],
            "sites": [{"energy_cm1": 10.0}, {"energy_cm1": 20.0}]
        }"#;
        let net = parse_network(text).unwrap();
        assert_eq!(net.couplings()[(1, 0)], -5.5);
        assert_eq!(net.sink(SinkLabel::L).unwrap().site, 1);
    }

    #[test]
    fn asymmetric_couplings_rejected() {
        let text = r#"{"sites": [{"energy_cm1": 0}, {"energy_cm1": 0}],
            "couplings": [[1, 2, 1.0], [2, 1, 2.0]], "sinks": []}"#;
        let err = parse_network(text).unwrap_err().to_string();
        assert!(err.contains("asymmetric"), "{err}");
    }

    #[test]
    fn out_of_range_sink_rejected() {
        let text = r#"{"sites": [{"energy_cm1": 0}],
            "sinks": [{"site": 4, "label": "R", "gamma_cm1": 1.0}]}"#;
        let err = parse_network(text).unwrap_err().to_string();
        assert!(err.contains("site 4"), "{err}");
    }

    #[test]
    fn malformed_document_rejected() {
        assert!(matches!(
            parse_network("{\"sites\": ["),
            Err(ValidationError::Parse(_))
        ));
        assert!(parse_network(r#"{"sites": [], "extra": 1}"#).is_err());
        assert!(parse_network(r#"{"sites": [{"energy_cm1": 0}], "sinks": [{"site": 1, "label": "X", "gamma_cm1": 1}]}"#).is_err());
    }
}
