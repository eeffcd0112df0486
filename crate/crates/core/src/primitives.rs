//! Bulk data-parallel building blocks.
//!
//! Every function here is a pure transform over its inputs. Parallel variants
//! run on the ambient rayon pool, so callers choose the thread count by
//! installing a pool; results never depend on it.

use std::ops::Range;

use rayon::prelude::*;

use crate::{Error, Result};

/// Exclusive prefix sum: `out[0] = 0`, `out[i] = out[i-1] + xs[i-1]`.
///
/// The output has one more element than the input; the last element is the
/// total.
pub fn exclusive_prefix_sum(xs: &[usize]) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(xs.len() + 1);
    let mut acc = 0usize;
    out.push(0);
    for &x in xs {
        acc = acc
            .checked_add(x)
            .ok_or(Error::Overflow("exclusive_prefix_sum"))?;
        out.push(acc);
    }
    Ok(out)
}

/// Stream compaction: indices of the set flags, ascending.
pub fn compact(flags: &[bool]) -> Vec<u32> {
    const CHUNK: usize = 1 << 14;
    if flags.len() <= CHUNK {
        return flags
            .iter()
            .enumerate()
            .filter(|(_, &f)| f)
            .map(|(i, _)| i as u32)
            .collect();
    }
    // Count per chunk, scan for the write offsets, then fill disjoint ranges.
    let counts: Vec<usize> = flags
        .par_chunks(CHUNK)
        .map(|c| c.iter().filter(|&&f| f).count())
        .collect();
    let offsets = exclusive_prefix_sum(&counts).expect("bool count cannot overflow usize");
    let mut out = vec![0u32; *offsets.last().unwrap()];
    let mut slices = split_by_offsets(&mut out, &offsets);
    slices
        .par_iter_mut()
        .zip(flags.par_chunks(CHUNK))
        .enumerate()
        .for_each(|(chunk, (dst, src))| {
            let base = chunk * CHUNK;
            let mut k = 0;
            for (i, &f) in src.iter().enumerate() {
                if f {
                    dst[k] = (base + i) as u32;
                    k += 1;
                }
            }
        });
    out
}

/// Stable ascending sort of key/value pairs by key.
pub fn sort_pairs<K: Ord + Send, V: Send>(pairs: &mut [(K, V)]) {
    pairs.par_sort_by(|a, b| a.0.cmp(&b.0));
}

/// Merges two runs sorted by key. On equal keys, elements of `left` come
/// first, so the merge is stable.
pub fn merge_sorted<K: Ord + Clone, V: Clone>(left: &[(K, V)], right: &[(K, V)]) -> Vec<(K, V)> {
    let mut out = Vec::with_capacity(left.len() + right.len());
    let (mut i, mut j) = (0, 0);
    while i < left.len() && j < right.len() {
        if right[j].0 < left[i].0 {
            out.push(right[j].clone());
            j += 1;
        } else {
            out.push(left[i].clone());
            i += 1;
        }
    }
    out.extend_from_slice(&left[i..]);
    out.extend_from_slice(&right[j..]);
    out
}

/// Concatenated per-item outputs with their boundaries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentedOutput<T> {
    pub counts: Vec<usize>,
    /// Exclusive prefix sums of `counts`; `offsets.len() == counts.len() + 1`.
    pub offsets: Vec<usize>,
    pub payload: Vec<T>,
}

impl<T> SegmentedOutput<T> {
    pub fn segment(&self, i: usize) -> &[T] {
        &self.payload[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

fn split_by_offsets<'a, T>(mut buf: &'a mut [T], offsets: &[usize]) -> Vec<&'a mut [T]> {
    let mut parts = Vec::with_capacity(offsets.len().saturating_sub(1));
    for w in offsets.windows(2) {
        let (head, tail) = std::mem::take(&mut buf).split_at_mut(w[1] - w[0]);
        parts.push(head);
        buf = tail;
    }
    parts
}

/// Two-step output scheme: count every item's output, scan the counts into
/// write offsets, then let each item write into its own disjoint range.
///
/// `write` receives a slice of exactly the counted size and must return how
/// many elements it wrote; any disagreement is a bug in the caller and panics.
pub fn two_step_emit<I, T, C, W>(items: &[I], count: C, write: W) -> Result<SegmentedOutput<T>>
where
    I: Sync,
    T: Default + Clone + Send,
    C: Fn(&I) -> usize + Sync,
    W: Fn(&I, &mut [T]) -> usize + Sync,
{
    two_step_emit_with_limit(items, count, write, usize::MAX)
}

/// [`two_step_emit`] that refuses to allocate more than `limit` outputs.
///
/// Exceeding the limit surfaces as [`Error::BudgetExceeded`] after the count
/// step, before anything is written.
pub fn two_step_emit_with_limit<I, T, C, W>(
    items: &[I],
    count: C,
    write: W,
    limit: usize,
) -> Result<SegmentedOutput<T>>
where
    I: Sync,
    T: Default + Clone + Send,
    C: Fn(&I) -> usize + Sync,
    W: Fn(&I, &mut [T]) -> usize + Sync,
{
    let counts: Vec<usize> = items.par_iter().map(&count).collect();
    let offsets = exclusive_prefix_sum(&counts)?;
    let total = *offsets.last().unwrap();
    if total > limit {
        return Err(Error::BudgetExceeded { budget: limit });
    }
    let mut payload = vec![T::default(); total];
    let mut slices = split_by_offsets(&mut payload, &offsets);
    slices
        .par_iter_mut()
        .zip(items.par_iter())
        .for_each(|(dst, item)| {
            let written = write(item, dst);
            assert_eq!(
                written,
                dst.len(),
                "two_step_emit: write produced a different size than count"
            );
        });
    Ok(SegmentedOutput {
        counts,
        offsets,
        payload,
    })
}

/// Two-step emission where each item's work range may be cut into sub-items.
///
/// Item `i` covers `work_len(item)` units of work (e.g. an adjacency list).
/// When that exceeds `split_threshold`, the range is processed as several
/// sub-items of at most `split_threshold` units each; their outputs are
/// concatenated in range order, so the result is identical for any threshold.
pub fn two_step_emit_split<I, T, L, C, W>(
    items: &[I],
    work_len: L,
    split_threshold: usize,
    count: C,
    write: W,
) -> Result<SegmentedOutput<T>>
where
    I: Sync,
    T: Default + Clone + Send,
    L: Fn(&I) -> usize + Sync,
    C: Fn(&I, Range<usize>) -> usize + Sync,
    W: Fn(&I, Range<usize>, &mut [T]) -> usize + Sync,
{
    let step = split_threshold.max(1);
    let pieces: Vec<(usize, Range<usize>)> = items
        .iter()
        .enumerate()
        .flat_map(|(i, item)| {
            let len = work_len(item);
            let n = if len == 0 { 1 } else { len.div_ceil(step) };
            (0..n).map(move |k| (i, k * step..((k + 1) * step).min(len)))
        })
        .collect();
    let flat = two_step_emit(
        &pieces,
        |(i, range)| count(&items[*i], range.clone()),
        |(i, range), out| write(&items[*i], range.clone(), out),
    )?;
    let mut counts = vec![0usize; items.len()];
    for ((i, _), c) in pieces.iter().zip(&flat.counts) {
        counts[*i] += c;
    }
    let offsets = exclusive_prefix_sum(&counts)?;
    Ok(SegmentedOutput {
        counts,
        offsets,
        payload: flat.payload,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn prefix_sum_by_hand() {
        assert_eq!(
            exclusive_prefix_sum(&[1, 0, 2, 1]).unwrap(),
            vec![0, 1, 1, 3, 4]
        );
        assert_eq!(exclusive_prefix_sum(&[]).unwrap(), vec![0]);
    }

    #[test]
    fn prefix_sum_overflow_is_an_error() {
        let err = exclusive_prefix_sum(&[usize::MAX, 1]).unwrap_err();
        assert!(matches!(err, Error::Overflow(_)));
    }

    #[test]
    fn compact_examples() {
        let flags = [false, true, false, true, true, false];
        assert_eq!(compact(&flags), vec![1, 3, 4]);
        assert!(compact(&[false; 5]).is_empty());
        assert_eq!(compact(&[true; 5]), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn compact_large_input_uses_chunks() {
        let flags: Vec<bool> = (0..100_000).map(|i| i % 7 == 3).collect();
        let expected: Vec<u32> = (0..100_000u32).filter(|i| i % 7 == 3).collect();
        assert_eq!(compact(&flags), expected);
    }

    #[test]
    fn two_step_by_hand() {
        let items: Vec<Vec<char>> = vec![vec!['a', 'b'], vec![], vec!['c']];
        let out = two_step_emit(
            &items,
            |v| v.len(),
            |v, dst| {
                dst.copy_from_slice(v);
                v.len()
            },
        )
        .unwrap();
        assert_eq!(out.payload, vec!['a', 'b', 'c']);
        assert_eq!(out.offsets, vec![0, 2, 2, 3]);
        assert_eq!(out.segment(2), &['c']);
    }

    #[test]
    fn two_step_all_empty() {
        let items = vec![0usize; 4];
        let out: SegmentedOutput<u32> = two_step_emit(&items, |_| 0, |_, _| 0).unwrap();
        assert!(out.payload.is_empty());
        assert_eq!(out.offsets, vec![0; 5]);
    }

    #[test]
    #[should_panic(expected = "different size")]
    fn two_step_detects_inconsistent_writer() {
        let items = vec![2usize];
        let _: SegmentedOutput<u32> = two_step_emit(&items, |&n| n, |_, _| 1).unwrap();
    }

    #[test]
    fn two_step_limit() {
        let items = vec![3usize, 3];
        let res: Result<SegmentedOutput<u8>> =
            two_step_emit_with_limit(&items, |&n| n, |&n, _| n, 5);
        assert!(matches!(res, Err(Error::BudgetExceeded { budget: 5 })));
    }

    #[test]
    fn merge_is_stable() {
        let left = [(1, 'a'), (2, 'b')];
        let right = [(1, 'x'), (3, 'y')];
        assert_eq!(
            merge_sorted(&left, &right),
            vec![(1, 'a'), (1, 'x'), (2, 'b'), (3, 'y')]
        );
    }

    #[test]
    fn sort_pairs_is_stable() {
        let mut pairs = vec![(2, 0), (1, 1), (2, 2), (1, 3)];
        sort_pairs(&mut pairs);
        assert_eq!(pairs, vec![(1, 1), (1, 3), (2, 0), (2, 2)]);
    }

    fn split_emit(lists: &[Vec<u32>], threshold: usize) -> SegmentedOutput<u32> {
        two_step_emit_split(
            lists,
            |l| l.len(),
            threshold,
            |l, r| l[r].iter().filter(|&&x| x % 2 == 0).count(),
            |l, r, dst| {
                let mut k = 0;
                for &x in l[r].iter().filter(|&&x| x % 2 == 0) {
                    dst[k] = x;
                    k += 1;
                }
                k
            },
        )
        .unwrap()
    }

    proptest! {
        #[test]
        fn prefix_sum_matches_fold(xs in prop::collection::vec(0usize..1000, 0..500)) {
            let out = exclusive_prefix_sum(&xs).unwrap();
            let mut acc = 0;
            prop_assert_eq!(out[0], 0);
            for (i, x) in xs.iter().enumerate() {
                acc += x;
                prop_assert_eq!(out[i + 1], acc);
            }
        }

        #[test]
        fn split_threshold_never_changes_output(
            lists in prop::collection::vec(prop::collection::vec(0u32..100, 0..70), 0..20),
        ) {
            let whole = split_emit(&lists, usize::MAX);
            prop_assert_eq!(&split_emit(&lists, 1), &whole);
            prop_assert_eq!(&split_emit(&lists, 32), &whole);
            for (i, l) in lists.iter().enumerate() {
                let expected: Vec<u32> = l.iter().copied().filter(|x| x % 2 == 0).collect();
                prop_assert_eq!(whole.segment(i), expected.as_slice());
            }
        }
    }
}
