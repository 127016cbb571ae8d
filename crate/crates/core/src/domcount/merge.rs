use super::{dominated_by, PointSet};

/// Number of halving rounds needed for `n` elements: `ceil(log2 n)`.
fn rounds(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

/// Block (0-based, width `w`) that the query with prefix length `k` reads in
/// a round, if any. The query consults block `ℓ-1` (1-based) whenever the
/// 1-based block `ℓ` containing position `k` is even.
#[inline]
fn block_for(k: usize, w: usize) -> Option<usize> {
    if k <= 1 {
        return None;
    }
    let l = (k - 1) / w + 1;
    l.is_multiple_of(2).then(|| l - 2)
}

/// Two-dimensional rank construction. Adds to `out[j]` the number of points
/// in `a` that are `<=` `b[j]` in both coordinates.
///
/// `a` is sorted by first coordinate; every query gets its prefix length `k`
/// (points with first coordinate `<= b_1`). The second coordinates are then
/// merge-sorted bottom-up in blocks of width `1, 2, 4, …`; in each round a
/// query whose prefix ends in an even block adds its rank inside the
/// preceding (odd) block. Every prefix position before `k` is covered by
/// exactly one such block, and position `k` itself is handled up front.
///
/// Ranks inside a block are found by a merge walk: queries are kept in
/// ascending second coordinate and bucketed stably by block each round.
pub fn rank_2d<T: Copy + PartialOrd>(mut a: Vec<(T, T)>, b: &[(T, T)], out: &mut [usize]) {
    debug_assert_eq!(b.len(), out.len());
    let n_a = a.len();
    if n_a == 0 || b.is_empty() {
        return;
    }
    a.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());

    let mut prefix = Vec::with_capacity(b.len());
    for (j, q) in b.iter().enumerate() {
        let k = a.partition_point(|p| p.0 <= q.0);
        if k > 0 && a[k - 1].1 <= q.1 {
            out[j] += 1;
        }
        prefix.push(k);
    }
    let mut by_second: Vec<usize> = (0..b.len()).collect();
    by_second.sort_by(|&i, &j| b[i].1.partial_cmp(&b[j].1).unwrap());

    let mut level: Vec<T> = a.iter().map(|p| p.1).collect();
    let mut scratch = level.clone();
    let mut start = Vec::new();
    let mut bucketed = vec![0usize; b.len()];
    let last = rounds(n_a);
    for j in 1..=last {
        let w = 1usize << (j - 1);
        let blocks = n_a.div_ceil(w);
        start.clear();
        start.resize(blocks + 1, 0usize);
        for &k in &prefix {
            if let Some(blk) = block_for(k, w) {
                start[blk + 1] += 1;
            }
        }
        for s in 1..=blocks {
            start[s] += start[s - 1];
        }
        let mut fill = start.clone();
        for &t in &by_second {
            if let Some(blk) = block_for(prefix[t], w) {
                bucketed[fill[blk]] = t;
                fill[blk] += 1;
            }
        }
        for blk in 0..blocks {
            let block = &level[blk * w..((blk + 1) * w).min(n_a)];
            let mut p = 0;
            for &t in &bucketed[start[blk]..start[blk + 1]] {
                let q = b[t].1;
                while p < block.len() && block[p] <= q {
                    p += 1;
                }
                out[t] += p;
            }
        }
        if j < last {
            merge_level(&level, &mut scratch, w);
            std::mem::swap(&mut level, &mut scratch);
        }
    }
}

/// Merges adjacent sorted runs of width `w` from `src` into runs of `2w`.
fn merge_level<T: Copy + PartialOrd>(src: &[T], dst: &mut [T], w: usize) {
    let n = src.len();
    let mut start = 0;
    while start < n {
        let mid = (start + w).min(n);
        let end = (start + 2 * w).min(n);
        let (mut i, mut j, mut o) = (start, mid, start);
        while i < mid && j < end {
            if src[j] < src[i] {
                dst[o] = src[j];
                j += 1;
            } else {
                dst[o] = src[i];
                i += 1;
            }
            o += 1;
        }
        dst[o..o + (mid - i)].copy_from_slice(&src[i..mid]);
        o += mid - i;
        dst[o..o + (end - j)].copy_from_slice(&src[j..end]);
        start = end;
    }
}

/// `d`-dimensional rank construction over the coordinates `coord..d`.
///
/// Adds to `out[t]` the number of points `a_idx[·]` dominated by
/// `b_idx[t]` on those coordinates. The first active coordinate is handled
/// like the two-dimensional case, except that each (block, query batch) pair
/// becomes a sub-problem one dimension lower instead of a rank lookup.
pub fn rank_nd<T: Copy + PartialOrd>(
    a: &PointSet<T>,
    mut a_idx: Vec<usize>,
    b: &PointSet<T>,
    b_idx: &[usize],
    coord: usize,
    out: &mut [usize],
) {
    debug_assert_eq!(b_idx.len(), out.len());
    let d = a.dim();
    if a_idx.is_empty() || b_idx.is_empty() {
        return;
    }
    match d - coord {
        1 => {
            let mut xs: Vec<T> = a_idx.iter().map(|&i| a.coord(i, coord)).collect();
            xs.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for (o, &j) in out.iter_mut().zip(b_idx) {
                let q = b.coord(j, coord);
                *o += xs.partition_point(|x| *x <= q);
            }
            return;
        }
        2 => {
            let pa = a_idx.iter().map(|&i| (a.coord(i, coord), a.coord(i, coord + 1))).collect();
            let pb: Vec<(T, T)> = b_idx.iter().map(|&j| (b.coord(j, coord), b.coord(j, coord + 1))).collect();
            rank_2d(pa, &pb, out);
            return;
        }
        _ => {}
    }

    a_idx.sort_by(|&p, &q| a.coord(p, coord).partial_cmp(&a.coord(q, coord)).unwrap());
    let n_a = a_idx.len();

    let mut prefix = Vec::with_capacity(b_idx.len());
    for (o, &j) in out.iter_mut().zip(b_idx) {
        let q = b.coord(j, coord);
        let k = a_idx.partition_point(|&i| a.coord(i, coord) <= q);
        if k > 0 && dominated_by(&a.point(a_idx[k - 1])[coord + 1..], &b.point(j)[coord + 1..]) {
            *o += 1;
        }
        prefix.push(k);
    }

    let last = rounds(n_a);
    let mut start = Vec::new();
    let mut order = vec![0usize; b_idx.len()];
    for j in 1..=last {
        let w = 1usize << (j - 1);
        let blocks = n_a.div_ceil(w);
        // bucket the queries of this round by block (counting sort)
        start.clear();
        start.resize(blocks + 1, 0usize);
        for &k in &prefix {
            if let Some(blk) = block_for(k, w) {
                start[blk + 1] += 1;
            }
        }
        for s in 1..=blocks {
            start[s] += start[s - 1];
        }
        let mut fill = start.clone();
        for (t, &k) in prefix.iter().enumerate() {
            if let Some(blk) = block_for(k, w) {
                order[fill[blk]] = t;
                fill[blk] += 1;
            }
        }
        for blk in 0..blocks {
            let batch = &order[start[blk]..start[blk + 1]];
            if batch.is_empty() {
                continue;
            }
            let sub_a = a_idx[blk * w..((blk + 1) * w).min(n_a)].to_vec();
            let sub_b: Vec<usize> = batch.iter().map(|&t| b_idx[t]).collect();
            let mut sub_out = vec![0usize; sub_b.len()];
            rank_nd(a, sub_a, b, &sub_b, coord + 1, &mut sub_out);
            for (&t, c) in batch.iter().zip(sub_out) {
                out[t] += c;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounds_is_ceil_log2() {
        assert_eq!(rounds(0), 0);
        assert_eq!(rounds(1), 0);
        assert_eq!(rounds(2), 1);
        assert_eq!(rounds(3), 2);
        assert_eq!(rounds(4), 2);
        assert_eq!(rounds(5), 3);
        assert_eq!(rounds(1024), 10);
        assert_eq!(rounds(1025), 11);
    }

    /// Each position `k' < k` must be covered by exactly one consulted block.
    #[test]
    fn blocks_partition_every_prefix() {
        for n in 1..=70usize {
            for k in 1..=n {
                let mut hits = vec![0u32; n];
                for j in 1..=rounds(n) {
                    let w = 1 << (j - 1);
                    if let Some(blk) = block_for(k, w) {
                        for p in blk * w..(blk + 1) * w {
                            hits[p] += 1;
                        }
                    }
                }
                for (p, &h) in hits.iter().enumerate() {
                    let expected = u32::from(p + 1 < k);
                    assert_eq!(h, expected, "n={n} k={k} pos={p}");
                }
            }
        }
    }

    #[test]
    fn merge_level_merges_pairs_of_runs() {
        let src = [3, 5, 1, 4, 2, 9, 0];
        let mut dst = [0; 7];
        merge_level(&src, &mut dst, 2);
        assert_eq!(dst, [1, 3, 4, 5, 0, 2, 9]);
    }
}
