use super::GaussianPrimitive;

/// Accumulated world-space Gaussians. Each primitive carries the index of
/// the chunk that inserted it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WorldScene {
    primitives: Vec<GaussianPrimitive>,
    stamps: Vec<usize>,
}

impl WorldScene {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_primitives(primitives: Vec<GaussianPrimitive>) -> Self {
        let stamps = vec![0; primitives.len()];
        Self { primitives, stamps }
    }

    pub fn len(&self) -> usize {
        self.primitives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty()
    }

    pub fn primitives(&self) -> &[GaussianPrimitive] {
        &self.primitives
    }

    pub fn stamps(&self) -> &[usize] {
        &self.stamps
    }

    pub fn iter(&self) -> impl Iterator<Item = &GaussianPrimitive> {
        self.primitives.iter()
    }

    pub fn push(&mut self, g: GaussianPrimitive, stamp: usize) {
        self.primitives.push(g);
        self.stamps.push(stamp);
    }

    /// Primitives inserted by chunks `< chunk`.
    pub fn prefix_before_chunk(&self, chunk: usize) -> WorldScene {
        let (primitives, stamps) = self
            .primitives
            .iter()
            .zip(&self.stamps)
            .filter(|(_, &s)| s < chunk)
            .map(|(g, &s)| (*g, s))
            .unzip();
        WorldScene { primitives, stamps }
    }

    /// Keeps exactly the primitives with `opacity ≥ threshold`, in order.
    pub fn prune(&self, threshold: f64) -> WorldScene {
        let mut out = self.clone();
        out.prune_in_place(threshold);
        out
    }

    pub fn prune_in_place(&mut self, threshold: f64) {
        let keep: Vec<bool> = self.primitives.iter().map(|g| g.opacity >= threshold).collect();
        let mut flags = keep.iter();
        self.primitives.retain(|_| *flags.next().unwrap());
        let mut flags = keep.iter();
        self.stamps.retain(|_| *flags.next().unwrap());
    }
}

impl FromIterator<GaussianPrimitive> for WorldScene {
    fn from_iter<I: IntoIterator<Item = GaussianPrimitive>>(iter: I) -> Self {
        Self::from_primitives(iter.into_iter().collect())
    }
}
