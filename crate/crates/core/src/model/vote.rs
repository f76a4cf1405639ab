use crate::error::{Error, Result};

/// Count how often each class in `0..classes` appears in `votes`.
pub fn tally(votes: &[usize], classes: usize) -> Result<Vec<u32>> {
    let mut counts = vec![0u32; classes];
    for &v in votes {
        *counts
            .get_mut(v)
            .ok_or_else(|| Error::usage(format!("vote for class {v} outside 0..{classes}")))? += 1;
    }
    Ok(counts)
}

/// Index of the largest count; the lowest index wins ties.
pub fn argmax_lowest(counts: &[u32]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate().skip(1) {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Majority vote over the per-part decisions of one feature vector.
pub fn parallel_vote(part_classes: &[usize], classes: usize) -> Result<(usize, Vec<u32>)> {
    if part_classes.is_empty() {
        return Err(Error::usage("parallel vote needs at least one part"));
    }
    let counts = tally(part_classes, classes)?;
    Ok((argmax_lowest(&counts), counts))
}

/// Majority vote over the decisions of the `R` augmented versions of one input.
pub fn sequential_vote(version_classes: &[usize], classes: usize) -> Result<usize> {
    if version_classes.is_empty() {
        return Err(Error::usage("sequential vote needs at least one version"));
    }
    // The hardware accumulates one one-hot vector per cycle into C registers.
    let mut acc = vec![0u32; classes];
    for &c in version_classes {
        *acc
            .get_mut(c)
            .ok_or_else(|| Error::usage(format!("vote for class {c} outside 0..{classes}")))? += 1;
    }
    Ok(argmax_lowest(&acc))
}
