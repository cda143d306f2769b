//! Set partitions of small index sets, encoded as bit masks.
//!
//! Elements are bit positions. A partition is a list of disjoint non-empty
//! block masks whose union is the input mask, ordered by each block's
//! lowest element.

/// All set partitions of the elements of `mask`, generated from restricted
/// growth strings. The order is deterministic: the single-block partition
/// comes first and the all-singletons partition last.
pub fn partitions_of_mask(mask: u32) -> Vec<Vec<u32>> {
    let elems: Vec<u32> = (0..32).filter(|b| mask & (1 << b) != 0).collect();
    let n = elems.len();
    let mut out = Vec::new();
    if n == 0 {
        out.push(Vec::new());
        return out;
    }
    // rgs[k] is the block index of elems[k]; rgs[0] = 0, rgs[k] <= max(rgs[..k]) + 1
    let mut rgs = vec![0usize; n];
    let mut maxes = vec![0usize; n];
    loop {
        let blocks = maxes[n - 1] + 1;
        let mut part = vec![0u32; blocks];
        for (k, &b) in rgs.iter().enumerate() {
            part[b] |= 1 << elems[k];
        }
        out.push(part);

        // advance to the next restricted growth string
        let mut k = n - 1;
        loop {
            if k == 0 {
                return out;
            }
            if rgs[k] <= maxes[k - 1] {
                rgs[k] += 1;
                maxes[k] = maxes[k - 1].max(rgs[k]);
                for m in k + 1..n {
                    rgs[m] = 0;
                    maxes[m] = maxes[k];
                }
                break;
            }
            k -= 1;
        }
    }
}

/// Set partitions of `{0, .., n-1}`.
pub fn set_partitions(n: usize) -> Vec<Vec<u32>> {
    assert!(n <= 31, "set partitions limited to 31 elements");
    partitions_of_mask(((1u64 << n) - 1) as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_numbers() {
        let bell = [1usize, 1, 2, 5, 15, 52, 203, 877];
        for (n, &b) in bell.iter().enumerate() {
            assert_eq!(set_partitions(n).len(), b, "n={n}");
        }
    }

    #[test]
    fn blocks_cover_mask_disjointly() {
        let mask = 0b1011_0110;
        for p in partitions_of_mask(mask) {
            let mut acc = 0u32;
            for b in &p {
                assert_ne!(*b, 0);
                assert_eq!(acc & b, 0);
                acc |= b;
            }
            assert_eq!(acc, mask);
            // ordered by lowest element
            let lows: Vec<u32> = p.iter().map(|b| b.trailing_zeros()).collect();
            assert!(lows.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn first_and_last() {
        let p = set_partitions(3);
        assert_eq!(p.first().unwrap(), &vec![0b111]);
        assert_eq!(p.last().unwrap(), &vec![0b001, 0b010, 0b100]);
    }
}
