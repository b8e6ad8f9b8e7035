//! Boolean cell grids and 4-connected flood fill.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

pub const NONE: u32 = u32::MAX;

/// Row-major boolean grid (`x` fastest).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoolGrid {
    pub nx: usize,
    pub ny: usize,
    pub cells: Vec<bool>,
}

impl BoolGrid {
    pub fn new(nx: usize, ny: usize, value: bool) -> Self {
        BoolGrid { nx, ny, cells: vec![value; nx * ny] }
    }

    pub fn idx(&self, x: usize, y: usize) -> usize {
        y * self.nx + x
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.cells[self.idx(x, y)]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        let i = self.idx(x, y);
        self.cells[i] = v;
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn neighbors4(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let (x, y) = (i % self.nx, i / self.nx);
        let (nx, ny) = (self.nx, self.ny);
        [
            (x > 0).then(|| i - 1),
            (x + 1 < nx).then(|| i + 1),
            (y > 0).then(|| i - nx),
            (y + 1 < ny).then(|| i + nx),
        ]
        .into_iter()
        .flatten()
    }

    /// Label the 4-connected components of set cells. Unset cells get
    /// [`NONE`]. Labels follow the row-major order of each component's first
    /// cell.
    pub fn components(&self) -> (Vec<u32>, usize) {
        let mut labels = vec![NONE; self.cells.len()];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.cells.len() {
            if !self.cells[start] || labels[start] != NONE {
                continue;
            }
            labels[start] = count as u32;
            queue.push_back(start);
            while let Some(i) = queue.pop_front() {
                for j in self.neighbors4(i) {
                    if self.cells[j] && labels[j] == NONE {
                        labels[j] = count as u32;
                        queue.push_back(j);
                    }
                }
            }
            count += 1;
        }
        (labels, count)
    }

    /// Number of set cells reachable from `start` (0 if `start` is unset).
    pub fn reachable_from(&self, start: usize) -> usize {
        if !self.cells[start] {
            return 0;
        }
        let mut seen = vec![false; self.cells.len()];
        seen[start] = true;
        let mut stack = vec![start];
        let mut n = 0;
        while let Some(i) = stack.pop() {
            n += 1;
            for j in self.neighbors4(i) {
                if self.cells[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        n
    }

    /// True when all set cells form one 4-connected component.
    pub fn is_connected(&self) -> bool {
        match self.cells.iter().position(|&c| c) {
            None => true,
            Some(start) => self.reachable_from(start) == self.count(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn components_of_split_grid() {
        let mut g = BoolGrid::new(5, 3, true);
        for y in 0..3 {
            g.set(2, y, false);
        }
        let (labels, k) = g.components();
        assert_eq!(k, 2);
        assert_eq!(labels[g.idx(0, 0)], 0);
        assert_eq!(labels[g.idx(4, 2)], 1);
        assert_eq!(labels[g.idx(2, 1)], NONE);
        assert!(!g.is_connected());
        g.set(2, 1, true);
        assert!(g.is_connected());
        // Diagonal contact is not 4-connectivity.
        let mut d = BoolGrid::new(2, 2, false);
        d.set(0, 0, true);
        d.set(1, 1, true);
        assert_eq!(d.components().1, 2);
    }
}
