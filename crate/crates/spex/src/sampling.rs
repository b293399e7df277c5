//! Masking-plan construction and sample collection.
//!
//! A plan pins down every mask the pipeline will evaluate: C random b x n
//! subsampling matrices, a BCH code for the shift vectors, and the seed. The
//! enumerated masks are `m = M_c^T l + p_i` over all (c, i, l); duplicates
//! are queried once and fanned out. After collection each (c, i) stream is
//! transformed, giving the per-bin observations the decoder consumes.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bch::{construct_bch, BchCode};
use crate::error::{Error, Result};
use crate::gf2::{gf2_matvec_t, random_binary_matrix, BinaryMatrix, BinaryVector};
use crate::oracle::{MaskQuery, ValueOracle};
use crate::seeds::{substream, RNG_NAME};
use crate::wht::{wht_forward, DenseSpectrum};

/// Practical ceiling on the sparsity parameter; 2^b samples per stream.
pub const MAX_B: usize = 26;

/// Full description of which masks to evaluate.
pub struct SamplingPlan {
    pub n: usize,
    pub b: usize,
    pub t: usize,
    pub c: usize,
    pub seed: u64,
    pub code: BchCode,
    /// C subsampling matrices, each b x n.
    pub subsamplers: Vec<BinaryMatrix>,
    /// p + 1 shift vectors; index 0 is the zero shift, index i >= 1 is
    /// parity row i - 1.
    pub shifts: Vec<BinaryVector>,
}

/// Deterministic plan from the run parameters.
pub fn build_plan(n: usize, b: usize, t: usize, c: usize, seed: u64) -> Result<SamplingPlan> {
    if n == 0 || b == 0 || c == 0 {
        return Err(Error::InvalidConfig(format!(
            "plan parameters must be positive, got n={n}, b={b}, c={c}"
        )));
    }
    if b > n {
        return Err(Error::InvalidConfig(format!(
            "sparsity parameter b={b} exceeds feature count n={n}; use the dense path"
        )));
    }
    if b > MAX_B {
        return Err(Error::InvalidConfig(format!(
            "sparsity parameter b={b} exceeds the supported maximum {MAX_B}"
        )));
    }
    let code = construct_bch(n, t)?;
    let mut rng = substream(seed, "plan");
    let subsamplers: Vec<BinaryMatrix> =
        (0..c).map(|_| random_binary_matrix(b, n, &mut rng)).collect();
    let mut shifts = Vec::with_capacity(code.p + 1);
    shifts.push(BinaryVector::zeros(n));
    for i in 0..code.p {
        shifts.push(code.parity_rows.row(i).clone());
    }
    Ok(SamplingPlan {
        n,
        b,
        t,
        c,
        seed,
        code,
        subsamplers,
        shifts,
    })
}

impl SamplingPlan {
    /// Enumerated mask budget C (p+1) 2^b, before deduplication.
    pub fn budget(&self) -> usize {
        self.c * (self.code.p + 1) * (1usize << self.b)
    }

    /// Mask for stream (c, i) at subsample index l: M_c^T l + p_i.
    pub fn mask_for(&self, c: usize, i: usize, l: usize) -> BinaryVector {
        let lv = BinaryVector::from_index(l, self.b);
        let mut mask = gf2_matvec_t(&self.subsamplers[c], &lv).expect("plan dimensions");
        mask.xor_assign(&self.shifts[i]);
        mask
    }

    pub fn query_id(c: usize, i: usize, l: usize) -> String {
        format!("c{c}-i{i}-l{l:x}")
    }

    /// All C (p+1) 2^b queries in canonical (c, i, l) order.
    pub fn enumerate_masks(&self) -> Vec<MaskQuery> {
        let mut out = Vec::with_capacity(self.budget());
        for c in 0..self.c {
            for i in 0..=self.code.p {
                for l in 0..1usize << self.b {
                    out.push(MaskQuery {
                        id: Self::query_id(c, i, l),
                        mask: self.mask_for(c, i, l),
                    });
                }
            }
        }
        out
    }

    /// Distinct masks in first-occurrence order, keeping the first id.
    pub fn distinct_masks(&self) -> Vec<MaskQuery> {
        let mut seen = HashMap::new();
        let mut out = Vec::new();
        for query in self.enumerate_masks() {
            if seen.insert(query.mask.clone(), ()).is_none() {
                out.push(query);
            }
        }
        out
    }

    /// Stable content hash binding banks to the plan that produced them.
    pub fn plan_hash(&self) -> String {
        let file = PlanFile::from_plan(self);
        let bytes = serde_json::to_vec(&file).expect("plan serialization");
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        hex_string(&hasher.finalize())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = PlanFile::from_plan(self);
        let mut body = serde_json::to_string_pretty(&file).expect("plan serialization");
        body.push('\n');
        fs::write(path, body).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<SamplingPlan> {
        let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: PlanFile =
            serde_json::from_str(&body).map_err(|e| Error::json(path, e))?;
        file.into_plan()
    }
}

fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// On-disk form of a plan. Matrices are rendered as rows of bit strings so
/// external tooling can consume them; loading re-derives the plan from the
/// recorded parameters and refuses files that drift from it.
#[derive(Serialize, Deserialize)]
struct PlanFile {
    n: usize,
    b: usize,
    t: usize,
    c: usize,
    seed: u64,
    rng: String,
    code: PlanCode,
    subsamplers: Vec<Vec<BinaryVector>>,
    shifts: Vec<BinaryVector>,
}

#[derive(Serialize, Deserialize)]
struct PlanCode {
    m: usize,
    n_c: usize,
    k_c: usize,
    t: usize,
    p: usize,
}

impl PlanFile {
    fn from_plan(plan: &SamplingPlan) -> PlanFile {
        PlanFile {
            n: plan.n,
            b: plan.b,
            t: plan.t,
            c: plan.c,
            seed: plan.seed,
            rng: RNG_NAME.to_owned(),
            code: PlanCode {
                m: plan.code.m,
                n_c: plan.code.n_c,
                k_c: plan.code.k_c,
                t: plan.code.t,
                p: plan.code.p,
            },
            subsamplers: plan
                .subsamplers
                .iter()
                .map(|m| m.row_iter().cloned().collect())
                .collect(),
            shifts: plan.shifts.clone(),
        }
    }

    fn into_plan(self) -> Result<SamplingPlan> {
        if self.rng != RNG_NAME {
            return Err(Error::InvalidConfig(format!(
                "plan was generated with rng {:?}, this build uses {RNG_NAME:?}",
                self.rng
            )));
        }
        let plan = build_plan(self.n, self.b, self.t, self.c, self.seed)?;
        let rebuilt = PlanFile::from_plan(&plan);
        if rebuilt.code.p != self.code.p
            || rebuilt.code.m != self.code.m
            || rebuilt.code.n_c != self.code.n_c
            || rebuilt.code.k_c != self.code.k_c
        {
            return Err(Error::InvalidConfig(
                "plan file code parameters do not match reconstruction".into(),
            ));
        }
        if rebuilt.subsamplers != self.subsamplers || rebuilt.shifts != self.shifts {
            return Err(Error::InvalidConfig(
                "plan file matrices do not match deterministic reconstruction; \
                 was the file edited or produced by a different build?"
                    .into(),
            ));
        }
        Ok(plan)
    }
}

/// Collected values and their per-stream transforms.
pub struct SampleBank {
    pub plan: SamplingPlan,
    /// values[c][i][l] = f(M_c^T l + p_i).
    pub values: Vec<Vec<Vec<f64>>>,
    /// spectra[c][i] = forward transform of values[c][i].
    pub spectra: Vec<Vec<DenseSpectrum>>,
}

impl SampleBank {
    /// Assemble a bank from values keyed by mask rendering; every enumerated
    /// mask must be present.
    pub fn from_mask_values(
        plan: SamplingPlan,
        by_mask: &HashMap<String, f64>,
    ) -> Result<SampleBank> {
        let size = 1usize << plan.b;
        let mut values = Vec::with_capacity(plan.c);
        for c in 0..plan.c {
            let mut streams = Vec::with_capacity(plan.code.p + 1);
            for i in 0..=plan.code.p {
                let mut stream = Vec::with_capacity(size);
                for l in 0..size {
                    let key = plan.mask_for(c, i, l).to_string();
                    let v = by_mask.get(&key).ok_or(Error::MissingMask(key))?;
                    stream.push(*v);
                }
                streams.push(stream);
            }
            values.push(streams);
        }
        let spectra = values
            .par_iter()
            .map(|streams| {
                streams
                    .iter()
                    .map(|s| wht_forward(s).expect("stream length is a power of two"))
                    .collect()
            })
            .collect();
        Ok(SampleBank {
            plan,
            values,
            spectra,
        })
    }

    /// Observation vector for bin (c, j): entries U_{c,0..p}(j).
    pub fn observation(&self, c: usize, j: usize) -> Vec<f64> {
        self.spectra[c]
            .iter()
            .map(|spec| spec.get_index(j))
            .collect()
    }
}

/// Query the oracle over the deduplicated plan masks and assemble the bank.
/// `parallelism` bounds the number of concurrent oracle batches.
pub fn collect(
    plan: SamplingPlan,
    oracle: &dyn ValueOracle,
    parallelism: usize,
) -> Result<SampleBank> {
    let distinct = plan.distinct_masks();
    let by_mask = query_all(&distinct, oracle, parallelism)?;
    SampleBank::from_mask_values(plan, &by_mask)
}

/// Evaluate a list of distinct queries with bounded concurrency, returning
/// values keyed by mask rendering. The result is independent of batch
/// boundaries and thread scheduling because oracles are pure.
pub fn query_all(
    distinct: &[MaskQuery],
    oracle: &dyn ValueOracle,
    parallelism: usize,
) -> Result<HashMap<String, f64>> {
    let parallelism = parallelism.max(1);
    let chunk = distinct.len().div_ceil(parallelism).max(1);
    let results: Vec<Result<Vec<f64>>> = distinct
        .par_chunks(chunk)
        .map(|part| oracle.query_batch(part))
        .collect();
    let mut by_mask = HashMap::with_capacity(distinct.len());
    for (part, result) in distinct.chunks(chunk).zip(results) {
        for (q, v) in part.iter().zip(result?) {
            by_mask.insert(q.mask.to_string(), v);
        }
    }
    Ok(by_mask)
}

/// One collected record in a bank file.
#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct BankRecord {
    pub id: String,
    pub mask: BinaryVector,
    pub value: f64,
}

#[derive(Serialize, Deserialize)]
struct BankHeader {
    plan_hash: String,
}

/// Write a bank file: a plan-hash header line followed by one record per
/// distinct mask.
pub fn write_bank(path: &Path, plan_hash: &str, records: &[BankRecord]) -> Result<()> {
    let mut out = String::new();
    out.push_str(
        &serde_json::to_string(&BankHeader {
            plan_hash: plan_hash.to_owned(),
        })
        .expect("header serialization"),
    );
    out.push('\n');
    for rec in records {
        out.push_str(&serde_json::to_string(rec).expect("record serialization"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Append records to a bank file, creating it (with header) if missing.
/// Used by resumable collection.
pub fn append_bank(path: &Path, plan_hash: &str, records: &[BankRecord]) -> Result<()> {
    let exists = path.exists();
    let mut file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut out = String::new();
    if !exists {
        out.push_str(
            &serde_json::to_string(&BankHeader {
                plan_hash: plan_hash.to_owned(),
            })
            .expect("header serialization"),
        );
        out.push('\n');
    }
    for rec in records {
        out.push_str(&serde_json::to_string(rec).expect("record serialization"));
        out.push('\n');
    }
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Parsed bank file: optional header hash plus records in file order.
pub struct BankFile {
    pub plan_hash: Option<String>,
    pub records: Vec<BankRecord>,
}

impl BankFile {
    pub fn load(path: &Path) -> Result<BankFile> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut plan_hash = None;
        let mut records = Vec::new();
        for (no, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            if let Ok(rec) = serde_json::from_str::<BankRecord>(&line) {
                records.push(rec);
            } else if let Ok(header) = serde_json::from_str::<BankHeader>(&line) {
                plan_hash = Some(header.plan_hash);
            } else {
                return Err(Error::json(path, format!("unrecognized line {}", no + 1)));
            }
        }
        Ok(BankFile { plan_hash, records })
    }

    pub fn values_by_mask(&self) -> HashMap<String, f64> {
        self.records
            .iter()
            .map(|r| (r.mask.to_string(), r.value))
            .collect()
    }
}
