use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Greedy max-min (farthest point) selection of `count` positions.
///
/// The first position seeds the selection and ties go to the lowest index.
/// Returned indices are sorted in original sequence order.
pub fn farthest_point_sample(positions: &[Vector3<f64>], count: usize) -> Result<Vec<usize>> {
    if count == 0 || count > positions.len() {
        return Err(Error::arg(format!(
            "farthest point sampling needs 1 ≤ count ≤ {}, got {count}",
            positions.len()
        )));
    }
    let mut selected = Vec::with_capacity(count);
    let mut taken = vec![false; positions.len()];
    let mut min_dist = vec![f64::INFINITY; positions.len()];
    let mut next = 0;
    while selected.len() < count {
        selected.push(next);
        taken[next] = true;
        let anchor = positions[next];
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in positions.iter().enumerate() {
            let d = (p - anchor).norm();
            if d < min_dist[i] {
                min_dist[i] = d;
            }
            if taken[i] {
                continue;
            }
            if best.map_or(true, |(_, bd)| min_dist[i] > bd) {
                best = Some((i, min_dist[i]));
            }
        }
        match best {
            Some((i, _)) => next = i,
            None => break,
        }
    }
    selected.sort_unstable();
    Ok(selected)
}
