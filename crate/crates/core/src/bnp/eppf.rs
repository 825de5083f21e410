use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A partition of `n` items, stored as its multiset of block sizes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    block_sizes: Vec<usize>,
    n: usize,
}

impl Partition {
    pub fn new(mut block_sizes: Vec<usize>) -> Result<Self> {
        if block_sizes.contains(&0) {
            return Err(Error::Domain("partition blocks must be non-empty".into()));
        }
        // canonical order so permuted inputs evaluate identically
        block_sizes.sort_unstable_by(|a, b| b.cmp(a));
        let n = block_sizes.iter().sum();
        Ok(Self { block_sizes, n })
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    /// Number of set partitions of `n` labelled items with these block sizes.
    pub fn set_partition_count(&self) -> f64 {
        let mut log = ln_factorial(self.n);
        let mut run = 1usize;
        for (i, &v) in self.block_sizes.iter().enumerate() {
            log -= ln_factorial(v);
            if i + 1 < self.block_sizes.len() && self.block_sizes[i + 1] == v {
                run += 1;
            } else {
                log -= ln_factorial(run);
                run = 1;
            }
        }
        log.exp().round()
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// Log of `α^D / α^[n] · Π_j (v_j - 1)!`, the Dirichlet-process EPPF.
pub fn log_eppf(partition: &Partition, alpha: f64) -> Result<f64> {
    if partition.n == 0 {
        return Err(Error::Domain("empty partition".into()));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::ParameterDomain(format!(
            "concentration must be positive, got {alpha}"
        )));
    }
    let rising: f64 = (0..partition.n).map(|i| (alpha + i as f64).ln()).sum();
    let blocks: f64 = partition.block_sizes.iter().map(|&v| ln_factorial(v - 1)).sum();
    Ok(partition.num_blocks() as f64 * alpha.ln() - rising + blocks)
}

pub fn eppf(partition: &Partition, alpha: f64) -> Result<f64> {
    Ok(log_eppf(partition, alpha)?.exp())
}

/// `|p(V) - Σ_j p(V with v_j + 1) - p(V ∪ {1})|` for a partition `V` of `n - 1` items.
pub fn eppf_consistency_check(partition: &Partition, alpha: f64) -> Result<f64> {
    let base = eppf(partition, alpha)?;
    let mut children = 0.0;
    for j in 0..partition.num_blocks() {
        let mut sizes = partition.block_sizes.clone();
        sizes[j] += 1;
        children += eppf(&Partition::new(sizes)?, alpha)?;
    }
    let mut sizes = partition.block_sizes.clone();
    sizes.push(1);
    children += eppf(&Partition::new(sizes)?, alpha)?;
    Ok((base - children).abs())
}

/// All integer partitions of `n`, each as a [`Partition`].
pub fn integer_partitions(n: usize) -> Vec<Partition> {
    fn rec(rem: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if rem == 0 {
            out.push(Partition {
                block_sizes: cur.clone(),
                n: cur.iter().sum(),
            });
            return;
        }
        for v in (1..=rem.min(max)).rev() {
            cur.push(v);
            rec(rem - v, v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(n, n, &mut Vec::new(), &mut out);
    }
    out
}
