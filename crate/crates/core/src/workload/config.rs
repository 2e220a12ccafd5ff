use std::sync::Arc;

use thiserror::Error;

use super::tpcc::{Tpcc, TpccConfig};
use super::ycsb::{Ycsb, YcsbConfig};
use super::Workload;
use crate::engine::OpType;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum WorkloadKind {
    Ycsb(YcsbConfig),
    Tpcc(TpccConfig),
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadConfig {
    pub kind: WorkloadKind,
    pub threads: usize,
    pub seed: u64,
}

impl WorkloadConfig {
    pub fn ycsb(cfg: YcsbConfig, threads: usize) -> Self {
        WorkloadConfig {
            kind: WorkloadKind::Ycsb(cfg),
            threads,
            seed: 1,
        }
    }

    pub fn tpcc(cfg: TpccConfig, threads: usize) -> Self {
        WorkloadConfig {
            kind: WorkloadKind::Tpcc(cfg),
            threads,
            seed: 1,
        }
    }

    pub fn build(&self) -> Arc<dyn Workload> {
        match &self.kind {
            WorkloadKind::Ycsb(c) => Arc::new(Ycsb::new(c.clone())),
            WorkloadKind::Tpcc(c) => Arc::new(Tpcc::new(c.clone())),
        }
    }
}

fn bits(v: &str) -> Option<Vec<bool>> {
    v.chars()
        .filter(|c| !matches!(c, ',' | ' '))
        .map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        })
        .collect()
}

/// Parses `key=value` lines; `#` starts a comment.
///
/// Keys: `workload` (ycsb|tpcc), `threads`, `seed`; for YCSB `pattern`
/// (1-4 or a bit string), `rw` (string of R/W), `keys`, `theta_hot`,
/// `theta_cold`, `length` and `read_ratio`; for TPC-C `warehouses` and
/// `mix` (five comma-separated percentages).
pub fn parse_config(text: &str) -> Result<WorkloadConfig, ConfigError> {
    let mut kv = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            msg: format!("expected key=value, got {line:?}"),
        })?;
        kv.push((i + 1, k.trim().to_string(), v.trim().to_string()));
    }
    let get = |key: &str| kv.iter().rev().find(|(_, k, _)| k == key);
    let num = |key: &str| -> Result<Option<f64>, ConfigError> {
        match get(key) {
            None => Ok(None),
            Some((line, _, v)) => v.parse::<f64>().map(Some).map_err(|_| ConfigError::Syntax {
                line: *line,
                msg: format!("{key}: not a number: {v:?}"),
            }),
        }
    };
    let known = [
        "workload", "threads", "seed", "pattern", "rw", "keys", "theta_hot", "theta_cold",
        "length", "read_ratio", "warehouses", "mix",
    ];
    if let Some((line, k, _)) = kv.iter().find(|(_, k, _)| !known.contains(&k.as_str())) {
        return Err(ConfigError::Syntax {
            line: *line,
            msg: format!("unknown key {k:?}"),
        });
    }
    let kind = match get("workload").map(|(_, _, v)| v.as_str()) {
        Some("ycsb") => {
            let mut c = match (num("length")?, num("read_ratio")?) {
                (None, None) => YcsbConfig::pattern(1),
                (len, ratio) => YcsbConfig::generalized(
                    len.unwrap_or(10.0) as usize,
                    ratio.unwrap_or(0.5),
                    10_000,
                ),
            };
            if let Some((line, _, v)) = get("pattern") {
                c.pattern = match v.parse::<usize>() {
                    Ok(p @ 1..=4) => super::ycsb::PATTERNS[p - 1].to_vec(),
                    _ => bits(v).ok_or_else(|| ConfigError::Syntax {
                        line: *line,
                        msg: format!("bad pattern {v:?}"),
                    })?,
                };
            }
            if let Some((line, _, v)) = get("rw") {
                c.read_write = v
                    .chars()
                    .filter(|c| !matches!(c, ',' | ' '))
                    .map(|ch| match ch.to_ascii_uppercase() {
                        'R' => Ok(OpType::Read),
                        'W' => Ok(OpType::Write),
                        _ => Err(ConfigError::Syntax {
                            line: *line,
                            msg: format!("bad rw entry {ch:?}"),
                        }),
                    })
                    .collect::<Result<_, _>>()?;
            }
            if let Some(n) = num("keys")? {
                c.n_keys = n as u64;
            }
            if let Some(t) = num("theta_hot")? {
                c.theta_hot = t;
            }
            if let Some(t) = num("theta_cold")? {
                c.theta_cold = t;
            }
            if c.pattern.len() != c.read_write.len() {
                return Err(ConfigError::Invalid(format!(
                    "pattern has {} positions but rw has {}",
                    c.pattern.len(),
                    c.read_write.len()
                )));
            }
            if c.n_keys == 0 {
                return Err(ConfigError::Invalid("keys must be positive".into()));
            }
            WorkloadKind::Ycsb(c)
        }
        Some("tpcc") => {
            let mut c = TpccConfig::default();
            if let Some(wh) = num("warehouses")? {
                c.warehouses = wh as u64;
            }
            if let Some((line, _, v)) = get("mix") {
                let parts: Result<Vec<u32>, _> = v.split(',').map(|p| p.trim().parse()).collect();
                match parts {
                    Ok(p) if p.len() == 5 => c.mix.copy_from_slice(&p),
                    _ => {
                        return Err(ConfigError::Syntax {
                            line: *line,
                            msg: format!("mix needs five integers, got {v:?}"),
                        })
                    }
                }
            }
            if c.mix.iter().sum::<u32>() != 100 {
                return Err(ConfigError::Invalid(format!("mix {:?} does not sum to 100", c.mix)));
            }
            if c.warehouses == 0 {
                return Err(ConfigError::Invalid("warehouses must be positive".into()));
            }
            WorkloadKind::Tpcc(c)
        }
        Some(other) => return Err(ConfigError::Invalid(format!("unknown workload {other:?}"))),
        None => return Err(ConfigError::Invalid("missing `workload`".into())),
    };
    Ok(WorkloadConfig {
        kind,
        threads: num("threads")?.map_or(16, |t| t as usize).max(1),
        seed: num("seed")?.map_or(1, |s| s as u64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ycsb_pattern() {
        let c = parse_config("workload=ycsb\npattern=4 # hot\nkeys=100\nthreads=4\n").unwrap();
        match c.kind {
            WorkloadKind::Ycsb(y) => {
                assert_eq!(y.pattern, super::super::ycsb::PATTERNS[3].to_vec());
                assert_eq!(y.n_keys, 100);
            }
            _ => panic!(),
        }
        assert_eq!(c.threads, 4);
    }

    #[test]
    fn parses_tpcc_and_rejects_bad_mix() {
        let c = parse_config("workload=tpcc\nwarehouses=4\nmix=50,40,4,3,3\n").unwrap();
        assert_eq!(
            c.kind,
            WorkloadKind::Tpcc(TpccConfig {
                warehouses: 4,
                mix: [50, 40, 4, 3, 3]
            })
        );
        assert_eq!(c.threads, 16);
        assert!(parse_config("workload=tpcc\nmix=50,40,4,3,4\n").is_err());
        assert!(matches!(
            parse_config("workload=tpcc\nbogus\n"),
            Err(ConfigError::Syntax { line: 2, .. })
        ));
    }

    #[test]
    fn generalized_ycsb_from_length() {
        let c = parse_config("workload=ycsb\nlength=4\nread_ratio=0.5\n").unwrap();
        match c.kind {
            WorkloadKind::Ycsb(y) => assert_eq!(y.read_write.len(), 4),
            _ => panic!(),
        }
    }
}
