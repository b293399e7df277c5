//! Value-function oracles: the uniform interface to f(m).
//!
//! Masking convention: mask bit = 1 means the feature is present (unmasked),
//! bit = 0 means it is replaced/masked, so the all-ones mask is the fully
//! unmasked input.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::time::Duration;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{dot_parity_unchecked, BinaryVector};
use crate::seeds::keyed_substream;

/// One mask to evaluate, with an id that is unique within a batch.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MaskQuery {
    pub id: String,
    pub mask: BinaryVector,
}

/// A value function over masks. Implementations must be pure in
/// (configuration, mask): repeated queries agree exactly, so batches may be
/// issued concurrently and in any order.
pub trait ValueOracle: Sync {
    /// Values for a batch of queries, in request order.
    fn query_batch(&self, batch: &[MaskQuery]) -> Result<Vec<f64>>;

    fn query_one(&self, mask: &BinaryVector) -> Result<f64> {
        let batch = [MaskQuery {
            id: "single".to_owned(),
            mask: mask.clone(),
        }];
        Ok(self.query_batch(&batch)?[0])
    }
}

/// Ground-truth description of a synthetic value function: a sparse spectrum
/// plus optional Gaussian observation noise.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlantedFunction {
    pub n: usize,
    pub coefficients: BTreeMap<BinaryVector, f64>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

impl PlantedFunction {
    pub fn validate(&self) -> Result<()> {
        for (k, v) in &self.coefficients {
            if k.len() != self.n {
                return Err(Error::DimensionMismatch {
                    context: "planted coefficient index length",
                    expected: self.n,
                    got: k.len(),
                });
            }
            if !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "planted coefficient for {k} is not finite"
                )));
            }
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::InvalidConfig("negative noise sigma".into()));
        }
        Ok(())
    }

    /// Random sparse ground truth: `s` distinct indices with weights in
    /// 1..=max_degree and magnitudes in [lo, hi], negated with probability
    /// 1/2 when `signed`.
    pub fn random_sparse(
        n: usize,
        s: usize,
        max_degree: usize,
        (lo, hi): (f64, f64),
        signed: bool,
        seed: u64,
    ) -> PlantedFunction {
        use rand::seq::SliceRandom;
        use rand::Rng;
        let mut rng = keyed_substream(seed, "planted", &(n as u64).to_le_bytes());
        let mut coefficients = BTreeMap::new();
        let mut indices: Vec<usize> = (0..n).collect();
        while coefficients.len() < s {
            let w = rng.gen_range(1..=max_degree.min(n));
            indices.shuffle(&mut rng);
            let k = BinaryVector::from_support(n, &indices[..w]);
            let magnitude = rng.gen_range(lo..=hi);
            let value = if signed && rng.gen_bool(0.5) { -magnitude } else { magnitude };
            coefficients.entry(k).or_insert(value);
        }
        PlantedFunction {
            n,
            coefficients,
            noise_sigma: 0.0,
            seed,
        }
    }

    /// Noise-free evaluation of the planted spectrum at a mask.
    pub fn clean_value(&self, mask: &BinaryVector) -> f64 {
        self.coefficients
            .iter()
            .map(|(k, v)| {
                if dot_parity_unchecked(mask, k) {
                    -v
                } else {
                    *v
                }
            })
            .sum()
    }

    pub fn min_magnitude(&self) -> f64 {
        self.coefficients
            .values()
            .map(|v| v.abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Oracle realizing a [`PlantedFunction`]. Noise is drawn from a stream
/// keyed by (seed, mask), never by query order, so parallel collection is
/// reproducible.
pub struct SyntheticOracle {
    planted: PlantedFunction,
}

impl SyntheticOracle {
    pub fn new(planted: PlantedFunction) -> Result<Self> {
        planted.validate()?;
        Ok(SyntheticOracle { planted })
    }

    pub fn planted(&self) -> &PlantedFunction {
        &self.planted
    }

    pub fn value(&self, mask: &BinaryVector) -> f64 {
        let mut v = self.planted.clean_value(mask);
        if self.planted.noise_sigma > 0.0 {
            let mut rng = keyed_substream(
                self.planted.seed,
                "noise",
                mask.to_string().as_bytes(),
            );
            let eps: f64 = StandardNormal.sample(&mut rng);
            v += self.planted.noise_sigma * eps;
        }
        v
    }
}

impl ValueOracle for SyntheticOracle {
    fn query_batch(&self, batch: &[MaskQuery]) -> Result<Vec<f64>> {
        batch
            .iter()
            .map(|q| {
                if q.mask.len() != self.planted.n {
                    return Err(Error::DimensionMismatch {
                        context: "synthetic oracle mask length",
                        expected: self.planted.n,
                        got: q.mask.len(),
                    });
                }
                Ok(self.value(&q.mask))
            })
            .collect()
    }
}

/// Replays recorded values from a JSON-lines file with `mask` and `value`
/// fields per line. Lines without a `mask` field (e.g. bank headers) are
/// skipped, so a collected bank file replays directly.
pub struct ReplayOracle {
    values: HashMap<String, f64>,
}

#[derive(Deserialize)]
struct ReplayLine {
    mask: String,
    value: f64,
}

impl ReplayOracle {
    pub fn from_path(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut values = HashMap::new();
        for (no, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<ReplayLine>(&line) {
                Ok(rec) => {
                    values.insert(rec.mask, rec.value);
                }
                Err(_) => {
                    // Tolerate non-record lines (headers, sidecars) but not
                    // lines that are not JSON at all.
                    serde_json::from_str::<serde_json::Value>(&line)
                        .map_err(|e| Error::json(path, format!("line {}: {e}", no + 1)))?;
                }
            }
        }
        Ok(ReplayOracle { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl ValueOracle for ReplayOracle {
    fn query_batch(&self, batch: &[MaskQuery]) -> Result<Vec<f64>> {
        batch
            .iter()
            .map(|q| {
                let key = q.mask.to_string();
                self.values
                    .get(&key)
                    .copied()
                    .ok_or(Error::MissingMask(key))
            })
            .collect()
    }
}

#[derive(Serialize)]
struct WireQuery<'a> {
    id: &'a str,
    mask: String,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    queries: Vec<WireQuery<'a>>,
}

#[derive(Deserialize)]
struct WireValue {
    id: String,
    value: f64,
}

#[derive(Deserialize)]
struct WireResponse {
    values: Vec<WireValue>,
}

/// Client for an external model server speaking the JSON batch protocol:
/// POST {"queries": [{"id", "mask"}]} -> {"values": [{"id", "value"}]}.
pub struct RemoteOracle {
    endpoint: String,
    batch_size: usize,
    retries: usize,
    backoff: Duration,
    bearer_token: Option<String>,
    client: reqwest::blocking::Client,
}

impl RemoteOracle {
    pub fn new(endpoint: &str, batch_size: usize, retries: usize) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| Error::Transport {
                attempts: 0,
                last: e.to_string(),
            })?;
        Ok(RemoteOracle {
            endpoint: endpoint.to_owned(),
            batch_size,
            retries,
            backoff: Duration::from_millis(100),
            bearer_token: None,
            client,
        })
    }

    pub fn with_bearer_token(mut self, token: Option<String>) -> Self {
        self.bearer_token = token;
        self
    }

    /// Base delay of the exponential backoff between retries.
    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    fn post_chunk(&self, chunk: &[MaskQuery]) -> Result<Vec<f64>> {
        let body = WireRequest {
            queries: chunk
                .iter()
                .map(|q| WireQuery {
                    id: &q.id,
                    mask: q.mask.to_string(),
                })
                .collect(),
        };
        let mut last = String::new();
        let attempts = self.retries + 1;
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.backoff * (1u32 << (attempt - 1).min(10)));
            }
            let mut req = self.client.post(&self.endpoint).json(&body);
            if let Some(token) = &self.bearer_token {
                req = req.bearer_auth(token);
            }
            match req.send() {
                Err(e) => last = e.to_string(),
                Ok(resp) => {
                    let status = resp.status();
                    if !status.is_success() {
                        last = format!("status {status}");
                        continue;
                    }
                    let parsed: WireResponse = resp.json().map_err(|e| {
                        Error::Protocol(format!("malformed response body: {e}"))
                    })?;
                    let by_id: HashMap<String, f64> = parsed
                        .values
                        .into_iter()
                        .map(|v| (v.id, v.value))
                        .collect();
                    return chunk
                        .iter()
                        .map(|q| {
                            by_id.get(&q.id).copied().ok_or_else(|| {
                                Error::Protocol(format!("response missing id {}", q.id))
                            })
                        })
                        .collect();
                }
            }
        }
        Err(Error::Transport { attempts, last })
    }
}

impl ValueOracle for RemoteOracle {
    fn query_batch(&self, batch: &[MaskQuery]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(batch.len());
        for chunk in batch.chunks(self.batch_size) {
            out.extend(self.post_chunk(chunk)?);
        }
        Ok(out)
    }
}
