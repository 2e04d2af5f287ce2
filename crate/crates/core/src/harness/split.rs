use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DatasetTable, HarnessError};

pub const DEFAULT_FRACTIONS: [f64; 3] = [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0];

/// Largest-remainder apportionment of `n` rows; equal remainders favour the
/// earlier part.
pub fn split_sizes(n: usize, fractions: &[f64]) -> Result<Vec<usize>, HarnessError> {
    let sum: f64 = fractions.iter().sum();
    if fractions.is_empty() || fractions.iter().any(|&f| !(f > 0.0) || !f.is_finite()) || (sum - 1.0).abs() > 1e-9 {
        return Err(HarnessError::BadFractions(fractions.to_vec()));
    }
    let quotas: Vec<f64> = fractions.iter().map(|f| f / sum * n as f64).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    // Remainders that agree to 1e-9 count as ties.
    let rem = |i: usize| ((quotas[i] - quotas[i].floor()) * 1e9).round();
    order.sort_by(|&a, &b| rem(b).total_cmp(&rem(a)).then(a.cmp(&b)));
    let short = n - sizes.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        sizes[i] += 1;
    }
    Ok(sizes)
}

/// Seeded random partition into train, test and attack tables.
pub fn split_dataset(
    table: &DatasetTable,
    fractions: &[f64],
    seed: u64,
) -> Result<(DatasetTable, DatasetTable, DatasetTable), HarnessError> {
    if fractions.len() != 3 {
        return Err(HarnessError::BadFractions(fractions.to_vec()));
    }
    let sizes = split_sizes(table.len(), fractions)?;
    let mut order: Vec<usize> = (0..table.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (train, rest) = order.split_at(sizes[0]);
    let (test, attack) = rest.split_at(sizes[1]);
    Ok((
        table.select_rows(train),
        table.select_rows(test),
        table.select_rows(attack),
    ))
}
