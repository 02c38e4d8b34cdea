use std::collections::HashMap;

use crate::lattice::LatticePoint;

/// Position lookup used by chronological loop erasure: maps a lattice point
/// to its index in the partially erased path.
pub(crate) trait PositionIndex {
    fn get(&self, p: LatticePoint) -> Option<usize>;
    fn set(&mut self, p: LatticePoint, idx: usize);
    fn clear(&mut self, p: LatticePoint);
}

impl PositionIndex for HashMap<LatticePoint, usize> {
    fn get(&self, p: LatticePoint) -> Option<usize> {
        HashMap::get(self, &p).copied()
    }
    fn set(&mut self, p: LatticePoint, idx: usize) {
        self.insert(p, idx);
    }
    fn clear(&mut self, p: LatticePoint) {
        self.remove(&p);
    }
}

/// Dense position table over a rectangular window. Entries hold `index + 1`
/// so that zero means "not on the erased path".
#[derive(Debug, Clone)]
pub(crate) struct DenseIndex {
    min_x: i32,
    min_y: i32,
    width: usize,
    height: usize,
    slots: Vec<u32>,
}

impl DenseIndex {
    pub(crate) fn new(min_x: i32, min_y: i32, width: usize, height: usize) -> Self {
        Self { min_x, min_y, width, height, slots: vec![0; width * height] }
    }

    /// Window `[-r, r]²`.
    pub(crate) fn centered(r: i32) -> Self {
        let w = (2 * r + 1) as usize;
        Self::new(-r, -r, w, w)
    }

    #[inline(always)]
    fn slot(&self, p: LatticePoint) -> usize {
        let dx = (p.x - self.min_x) as usize;
        let dy = (p.y - self.min_y) as usize;
        debug_assert!(dx < self.width && dy < self.height, "{p:?} outside dense window");
        dy * self.width + dx
    }

    pub(crate) fn covers(&self, p: LatticePoint) -> bool {
        let dx = p.x - self.min_x;
        let dy = p.y - self.min_y;
        dx >= 0 && dy >= 0 && (dx as usize) < self.width && (dy as usize) < self.height
    }
}

impl PositionIndex for DenseIndex {
    #[inline(always)]
    fn get(&self, p: LatticePoint) -> Option<usize> {
        match self.slots[self.slot(p)] {
            0 => None,
            v => Some(v as usize - 1),
        }
    }
    #[inline(always)]
    fn set(&mut self, p: LatticePoint, idx: usize) {
        let s = self.slot(p);
        self.slots[s] = idx as u32 + 1;
    }
    #[inline(always)]
    fn clear(&mut self, p: LatticePoint) {
        let s = self.slot(p);
        self.slots[s] = 0;
    }
}

/// Streaming chronological loop erasure.
///
/// Points are fed in order; whenever a point already on the erased path
/// reappears, the loop back to it is removed. After the last point the
/// erased path equals `LE` of the fed sequence.
pub(crate) struct Eraser<I> {
    index: I,
    path: Vec<LatticePoint>,
}

impl<I: PositionIndex> Eraser<I> {
    pub(crate) fn new(index: I) -> Self {
        Self { index, path: Vec::new() }
    }

    #[inline(always)]
    pub(crate) fn push(&mut self, p: LatticePoint) {
        match self.index.get(p) {
            Some(k) => {
                for q in self.path.drain(k + 1..) {
                    self.index.clear(q);
                }
            }
            None => {
                self.index.set(p, self.path.len());
                self.path.push(p);
            }
        }
    }

    pub(crate) fn path(&self) -> &[LatticePoint] {
        &self.path
    }

    /// Empties the erased path and its index, leaving the table reusable.
    pub(crate) fn reset(&mut self) {
        for &q in &self.path {
            self.index.clear(q);
        }
        self.path.clear();
    }

    pub(crate) fn index(&self) -> &I {
        &self.index
    }
}

/// `LE` of an arbitrary point sequence, choosing a dense table when the
/// bounding box is small enough and a hash map otherwise.
pub(crate) fn erase_points(points: impl Iterator<Item = LatticePoint> + Clone) -> Vec<LatticePoint> {
    let mut count = 0usize;
    let (mut x0, mut y0, mut x1, mut y1) = (i32::MAX, i32::MAX, i32::MIN, i32::MIN);
    for p in points.clone() {
        count += 1;
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    if count == 0 {
        return Vec::new();
    }
    let w = (x1 - x0 + 1) as usize;
    let h = (y1 - y0 + 1) as usize;
    if w.saturating_mul(h) <= (1 << 22).max(8 * count) {
        let mut e = Eraser::new(DenseIndex::new(x0, y0, w, h));
        points.for_each(|p| e.push(p));
        e.path
    } else {
        let mut e = Eraser::new(HashMap::with_capacity(count));
        points.for_each(|p| e.push(p));
        e.path
    }
}
