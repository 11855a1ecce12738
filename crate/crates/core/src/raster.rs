//! Dense row-major rasters and binary masks.

use std::collections::VecDeque;

/// Row-major 2D raster. `(row, col)` addresses pixel `row * width + col`.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Clone> Raster<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Raster {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Raster<T> {
    /// Wrap an existing buffer. Returns `None` when the length does not match.
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Option<Self> {
        (data.len() == width * height).then_some(Raster {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[row * self.width + col]
    }

    pub fn get_mut(&mut self, row: usize, col: usize) -> &mut T {
        &mut self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.width + col] = value;
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Raster<U> {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }
}

/// Binary object mask.
pub type Mask = Raster<bool>;

/// Pixel address as `(row, col)`.
pub type Pixel = (u32, u32);

impl Mask {
    pub fn count(&self) -> usize {
        self.data().iter().filter(|&&b| b).count()
    }

    /// Set pixels in row-major order.
    pub fn pixels(&self) -> Vec<Pixel> {
        let w = self.width();
        self.data()
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| ((i / w) as u32, (i % w) as u32))
            .collect()
    }

    pub fn from_pixels(width: usize, height: usize, pixels: &[Pixel]) -> Mask {
        let mut m = Mask::filled(width, height, false);
        for &(r, c) in pixels {
            m.set(r as usize, c as usize, true);
        }
        m
    }

    /// Connected components of set pixels (8-connectivity), largest first.
    /// Ties keep row-major discovery order.
    pub fn components(&self) -> Vec<Vec<Pixel>> {
        let (w, h) = self.dims();
        let mut seen = vec![false; w * h];
        let mut comps = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..w * h {
            if !self.data()[start] || seen[start] {
                continue;
            }
            seen[start] = true;
            queue.push_back(start);
            let mut comp = Vec::new();
            while let Some(i) = queue.pop_front() {
                let (r, c) = (i / w, i % w);
                comp.push((r as u32, c as u32));
                for dr in -1i64..=1 {
                    for dc in -1i64..=1 {
                        let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                        if nr < 0 || nc < 0 || nr >= h as i64 || nc >= w as i64 {
                            continue;
                        }
                        let j = nr as usize * w + nc as usize;
                        if self.data()[j] && !seen[j] {
                            seen[j] = true;
                            queue.push_back(j);
                        }
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps.sort_by_key(|c| std::cmp::Reverse(c.len()));
        comps
    }

    /// Mask restricted to its largest 8-connected component.
    pub fn largest_component(&self) -> Mask {
        let comps = self.components();
        match comps.first() {
            Some(c) => Mask::from_pixels(self.width(), self.height(), c),
            None => self.clone(),
        }
    }

    /// Rotate 90 degrees clockwise (output is `height x width`).
    pub fn rotate90(&self) -> Mask {
        rotate90(self)
    }
}

/// Rotate any raster 90 degrees clockwise: pixel `(r, c)` moves to `(c, H-1-r)`.
pub fn rotate90<T: Clone>(src: &Raster<T>) -> Raster<T> {
    let (w, h) = src.dims();
    let mut data = Vec::with_capacity(w * h);
    for r in 0..w {
        for c in 0..h {
            data.push(src.get(h - 1 - c, r).clone());
        }
    }
    Raster::from_vec(h, w, data).expect("rotation preserves size")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn components_are_sorted_largest_first() {
        let mut m = Mask::filled(8, 8, false);
        m.set(0, 0, true);
        for r in 3..6 {
            for c in 3..6 {
                m.set(r, c, true);
            }
        }
        let comps = m.components();
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].len(), 9);
        assert_eq!(m.largest_component().count(), 9);
    }

    #[test]
    fn diagonal_pixels_are_one_component() {
        let m = Mask::from_pixels(4, 4, &[(0, 0), (1, 1), (2, 2)]);
        assert_eq!(m.components().len(), 1);
    }

    #[test]
    fn rotate_moves_pixels_clockwise() {
        let m = Mask::from_pixels(3, 2, &[(0, 0)]);
        let r = m.rotate90();
        assert_eq!(r.dims(), (2, 3));
        assert!(*r.get(0, 1));
    }
}
