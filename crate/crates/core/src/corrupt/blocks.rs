use crate::rng::SeededRng;

use super::CorruptError;

/// Number of blocks for a trace of `n_rows`: `max(1, round(fraction * n / b))`.
pub fn block_count(n_rows: usize, fraction: f64, block_size: usize) -> usize {
    let k = (fraction * n_rows as f64 / block_size as f64).round();
    (k as usize).max(1)
}

/// Start rows of `k` disjoint blocks, sorted ascending.
///
/// Candidates are the aligned starts `0, b, 2b, ...` that leave room for a
/// full block. With `bias`, candidates covering at least one flagged row are
/// drawn first.
pub fn select_blocks(
    n_rows: usize,
    fraction: f64,
    block_size: usize,
    seed: u64,
    bias: Option<&[bool]>,
) -> Result<Vec<usize>, CorruptError> {
    select_blocks_with(&mut SeededRng::new(seed), n_rows, fraction, block_size, bias)
}

pub fn select_blocks_with(
    rng: &mut SeededRng,
    n_rows: usize,
    fraction: f64,
    block_size: usize,
    bias: Option<&[bool]>,
) -> Result<Vec<usize>, CorruptError> {
    if block_size == 0 {
        return Err(CorruptError::InvalidSpec("block size must be positive".into()));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(CorruptError::InvalidSpec(format!(
            "fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let k = block_count(n_rows, fraction, block_size);
    let slots = n_rows / block_size;
    if k > slots {
        return Err(CorruptError::InsufficientRows {
            needed: k * block_size,
            available: n_rows,
        });
    }

    let starts: Vec<usize> = (0..slots).map(|i| i * block_size).collect();
    let (mut preferred, mut rest): (Vec<usize>, Vec<usize>) = match bias {
        Some(flags) => starts
            .iter()
            .partition(|&&s| flags[s..s + block_size].iter().any(|&f| f)),
        None => (Vec::new(), starts),
    };
    rng.shuffle(&mut preferred);
    rng.shuffle(&mut rest);
    let mut chosen: Vec<usize> = preferred.into_iter().chain(rest).take(k).collect();
    chosen.sort_unstable();
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_blocks_for_ten_thousand_rows() {
        let b = select_blocks(10_000, 0.005, 10, 42, None).unwrap();
        assert_eq!(b.len(), 5);
        assert!(b.windows(2).all(|w| w[0] + 10 <= w[1]));
        assert!(b.iter().all(|s| s % 10 == 0 && s + 10 <= 10_000));
    }

    #[test]
    fn floor_of_one_block() {
        assert_eq!(select_blocks(10, 0.005, 10, 1, None).unwrap(), vec![0]);
    }

    #[test]
    fn too_few_rows() {
        assert!(matches!(
            select_blocks(9, 0.005, 10, 1, None),
            Err(CorruptError::InsufficientRows { needed: 10, available: 9 })
        ));
        assert!(matches!(
            select_blocks(100, 1.0, 40, 1, None),
            Err(CorruptError::InsufficientRows { .. })
        ));
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = select_blocks(10_000, 0.005, 10, 7, None).unwrap();
        assert_eq!(a, select_blocks(10_000, 0.005, 10, 7, None).unwrap());
        assert_ne!(a, select_blocks(10_000, 0.005, 10, 8, None).unwrap());
    }

    #[test]
    fn bias_prefers_flagged_blocks() {
        let mut flags = vec![false; 1000];
        for r in [15, 333, 777] {
            flags[r] = true;
        }
        let b = select_blocks(1000, 0.03, 10, 3, Some(&flags)).unwrap();
        assert_eq!(b, vec![10, 330, 770]);
    }

    #[test]
    fn bad_parameters() {
        assert!(select_blocks(100, 0.0, 10, 1, None).is_err());
        assert!(select_blocks(100, 1.5, 10, 1, None).is_err());
        assert!(select_blocks(100, 0.1, 0, 1, None).is_err());
    }
}
