use crate::geometry::region::fill_polygon;
use crate::geometry::{CellUnion, Grid, Region};

use super::{GlauberError, RngStream};

/// Smallest accepted lattice scale.
pub const MIN_SCALE: u32 = 16;
/// Default number of sites between the region's bounding box and the
/// window edge.
pub const DEFAULT_MARGIN: i64 = 8;

const NONE: u32 = u32::MAX;

/// Set of site indices with O(1) insert, remove and uniform indexing.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct IndexSet {
    items: Vec<u32>,
    pos: Vec<u32>,
}

impl IndexSet {
    pub(crate) fn new(capacity: usize) -> Self {
        Self {
            items: Vec::new(),
            pos: vec![NONE; capacity],
        }
    }

    #[inline]
    pub(crate) fn len(&self) -> usize {
        self.items.len()
    }

    #[inline]
    pub(crate) fn contains(&self, idx: usize) -> bool {
        self.pos[idx] != NONE
    }

    #[inline]
    pub(crate) fn insert(&mut self, idx: usize) {
        if self.pos[idx] == NONE {
            self.pos[idx] = self.items.len() as u32;
            self.items.push(idx as u32);
        }
    }

    #[inline]
    pub(crate) fn remove(&mut self, idx: usize) {
        let p = self.pos[idx];
        if p == NONE {
            return;
        }
        let last = self.items.pop().expect("nonempty");
        if last as usize != idx {
            self.items[p as usize] = last;
            self.pos[last as usize] = p;
        }
        self.pos[idx] = NONE;
    }

    /// Pick uniformly using `u ∈ [0, 1)`.
    #[inline]
    pub(crate) fn pick(&self, u: f64) -> usize {
        let k = ((u * self.items.len() as f64) as usize).min(self.items.len() - 1);
        self.items[k] as usize
    }
}

/// Integer rectangle of lattice sites, bounds inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Window {
    pub i0: i64,
    pub j0: i64,
    pub i1: i64,
    pub j1: i64,
}

impl Window {
    pub fn width(&self) -> usize {
        (self.i1 - self.i0 + 1) as usize
    }

    pub fn height(&self) -> usize {
        (self.j1 - self.j0 + 1) as usize
    }

    pub fn contains(&self, i: i64, j: i64) -> bool {
        i >= self.i0 && i <= self.i1 && j >= self.j0 && j <= self.j1
    }
}

/// One spin flip, for optional event logs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlipEvent {
    pub t: f64,
    pub site: (i64, i64),
    pub old: i8,
    pub new: i8,
}

impl FlipEvent {
    /// `t i j old new`.
    pub fn to_line(&self) -> String {
        format!(
            "{} {} {} {} {}",
            self.t, self.site.0, self.site.1, self.old, self.new
        )
    }
}

#[inline]
fn class_of(h: u8) -> u8 {
    match h {
        0 | 1 => 0,
        2 => 2,
        _ => 3,
    }
}

/// Zero-temperature heat-bath dynamics on a window of `(ℤ/L)²`; sites
/// outside the window are pinned to `+1`.
///
/// Site `(i, j)` sits at `(i/L, j/L)`. Each site carries its number `h` of
/// disagreeing neighbours. A resample flips the spin with probability one
/// when `h ≥ 3` and with probability ½ when `h = 2`, and never otherwise, so
/// running only the sites with `h ≥ 2` at rates 1 and ½ has the same law as
/// giving every site a rate-1 clock (thinning).
#[derive(Debug, Clone, PartialEq)]
pub struct SpinLattice {
    l: u32,
    window: Window,
    width: usize,
    spins: Vec<i8>,
    h: Vec<u8>,
    rate_half: IndexSet,
    rate_one: IndexSet,
    minus: usize,
    initial_minus: usize,
    t: f64,
    last_flip: f64,
    flips: u64,
}

impl SpinLattice {
    /// Spins `-1` exactly at the sites inside `region`, in a window that
    /// extends [`DEFAULT_MARGIN`] sites beyond its bounding box.
    pub fn init_from_region(l: u32, region: &Region) -> Result<Self, GlauberError> {
        Self::init_with_margin(l, region, DEFAULT_MARGIN)
    }

    pub fn init_with_margin(l: u32, region: &Region, margin: i64) -> Result<Self, GlauberError> {
        check_scale(l)?;
        if margin < 1 {
            return Err(GlauberError::InvalidWindow(format!("margin must be >= 1, got {margin}")));
        }
        let window = match region.bbox() {
            None => Window {
                i0: 0,
                j0: 0,
                i1: 0,
                j1: 0,
            },
            Some(b) => {
                if b[0] < -1.0 - 1e-12 || b[1] < -1.0 - 1e-12 || b[2] > 1.0 + 1e-12 || b[3] > 1.0 + 1e-12 {
                    return Err(GlauberError::OutsideUnitSquare);
                }
                let s = l as f64;
                Window {
                    i0: (b[0] * s).floor() as i64 - margin,
                    j0: (b[1] * s).floor() as i64 - margin,
                    i1: (b[2] * s).ceil() as i64 + margin,
                    j1: (b[3] * s).ceil() as i64 + margin,
                }
            }
        };
        Self::init_in_window(l, region, window)
    }

    /// Same as [`SpinLattice::init_from_region`] on a caller-chosen window
    /// (used to put coupled systems on a common window).
    pub fn init_in_window(l: u32, region: &Region, window: Window) -> Result<Self, GlauberError> {
        check_scale(l)?;
        let inside = membership(l, region, window);
        let spins = inside.iter().map(|&m| if m { -1 } else { 1 }).collect();
        Self::from_spins(l, window, spins)
    }

    /// Lattice with explicit spins, row-major from `(i0, j0)`.
    pub fn from_spins(l: u32, window: Window, spins: Vec<i8>) -> Result<Self, GlauberError> {
        if window.i1 < window.i0 || window.j1 < window.j0 {
            return Err(GlauberError::InvalidWindow(format!("{window:?}")));
        }
        let (w, h) = (window.width(), window.height());
        if spins.len() != w * h {
            return Err(GlauberError::InvalidWindow(format!(
                "{} spins for a {w}x{h} window",
                spins.len()
            )));
        }
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(GlauberError::InvalidWindow("spins must be +1 or -1".into()));
        }
        let n = w * h;
        let mut lat = Self {
            l,
            window,
            width: w,
            minus: spins.iter().filter(|&&s| s == -1).count(),
            initial_minus: 0,
            spins,
            h: vec![0; n],
            rate_half: IndexSet::new(n),
            rate_one: IndexSet::new(n),
            t: 0.0,
            last_flip: 0.0,
            flips: 0,
        };
        lat.initial_minus = lat.minus;
        for idx in 0..n {
            let hv = lat.count_disagreeing(idx);
            lat.h[idx] = hv;
            lat.classify(idx, 0, class_of(hv));
        }
        Ok(lat)
    }

    pub fn scale(&self) -> u32 {
        self.l
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Time of the most recent flip (zero if none).
    pub fn last_flip_time(&self) -> f64 {
        self.last_flip
    }

    pub fn flips(&self) -> u64 {
        self.flips
    }

    pub fn minus_count(&self) -> usize {
        self.minus
    }

    pub fn initial_minus_count(&self) -> usize {
        self.initial_minus
    }

    pub fn is_dead(&self) -> bool {
        self.minus == 0
    }

    /// Spin at `(i, j)`; `+1` outside the window.
    pub fn spin(&self, i: i64, j: i64) -> i8 {
        match self.index(i, j) {
            Some(idx) => self.spins[idx],
            None => 1,
        }
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    /// `(#sites at rate ½, #sites at rate 1)`.
    pub fn active_counts(&self) -> (usize, usize) {
        (self.rate_half.len(), self.rate_one.len())
    }

    pub fn total_rate(&self) -> f64 {
        self.rate_one.len() as f64 + 0.5 * self.rate_half.len() as f64
    }

    /// Cell union of the `-1` sites, or the empty region.
    pub fn droplet(&self) -> Region {
        if self.minus == 0 {
            return Region::Empty;
        }
        let cells = self
            .spins
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == -1)
            .map(|(idx, _)| self.site(idx))
            .collect();
        Region::Cells(CellUnion::new(self.l, cells))
    }

    /// Recompute every `h` and rate class from scratch and compare with the
    /// incrementally maintained ones.
    pub fn classification_is_exact(&self) -> bool {
        (0..self.spins.len()).all(|idx| {
            let hv = self.count_disagreeing(idx);
            let c = class_of(hv);
            hv == self.h[idx]
                && self.rate_half.contains(idx) == (c == 2)
                && self.rate_one.contains(idx) == (c == 3)
        })
    }

    /// Run the dynamics until time `until` (no-op if `until` is not ahead).
    pub fn advance(&mut self, rng: &mut RngStream, until: f64) {
        self.advance_with(rng, until, |_| {});
    }

    /// [`SpinLattice::advance`], reporting every flip to `on_flip`.
    pub fn advance_with(&mut self, rng: &mut RngStream, until: f64, mut on_flip: impl FnMut(&FlipEvent)) {
        if !(until > self.t) {
            return;
        }
        loop {
            let rate = self.total_rate();
            if rate == 0.0 {
                self.t = until;
                return;
            }
            let wait = rng.exp1() / rate;
            if self.t + wait > until {
                // memorylessness: the residual wait restarts at `until`
                self.t = until;
                return;
            }
            self.t += wait;
            let idx = self.pick(rng.uniform() * rate);
            let old = self.spins[idx];
            self.flip(idx);
            on_flip(&FlipEvent {
                t: self.t,
                site: self.site(idx),
                old,
                new: -old,
            });
        }
    }

    /// Run until every spin is `+1` and return the time of the last flip.
    ///
    /// Fails once the clock passes `10 L² T + 100`, where `T` is half the
    /// initial droplet area.
    pub fn death_time(&mut self, rng: &mut RngStream) -> Result<f64, GlauberError> {
        self.death_time_with(rng, |_| {})
    }

    /// [`SpinLattice::death_time`], reporting every flip to `on_flip`.
    pub fn death_time_with(
        &mut self,
        rng: &mut RngStream,
        mut on_flip: impl FnMut(&FlipEvent),
    ) -> Result<f64, GlauberError> {
        let cap = self.death_cap();
        while self.minus > 0 {
            let rate = self.total_rate();
            debug_assert!(rate > 0.0, "a finite droplet always has an active corner");
            self.t += rng.exp1() / rate;
            if self.t > cap {
                return Err(GlauberError::Timeout {
                    cap,
                    remaining: self.minus,
                });
            }
            let idx = self.pick(rng.uniform() * rate);
            let old = self.spins[idx];
            self.flip(idx);
            on_flip(&FlipEvent {
                t: self.t,
                site: self.site(idx),
                old,
                new: -old,
            });
        }
        Ok(self.last_flip)
    }

    /// Microscopic time cap used by [`SpinLattice::death_time`].
    pub fn death_cap(&self) -> f64 {
        // 10 L² T with T = area / 2 and area = count / L²
        10.0 * 0.5 * self.initial_minus as f64 + 100.0
    }

    #[inline]
    fn pick(&self, u: f64) -> usize {
        let ones = self.rate_one.len() as f64;
        if u < ones {
            self.rate_one.pick(u / ones)
        } else {
            let half = 0.5 * self.rate_half.len() as f64;
            self.rate_half.pick(((u - ones) / half).min(1.0 - f64::EPSILON))
        }
    }

    #[inline]
    pub(crate) fn index(&self, i: i64, j: i64) -> Option<usize> {
        if self.window.contains(i, j) {
            Some((j - self.window.j0) as usize * self.width + (i - self.window.i0) as usize)
        } else {
            None
        }
    }

    #[inline]
    pub(crate) fn site(&self, idx: usize) -> (i64, i64) {
        (
            self.window.i0 + (idx % self.width) as i64,
            self.window.j0 + (idx / self.width) as i64,
        )
    }

    /// In-window neighbours of `idx`, and the number of pinned ones.
    #[inline]
    pub(crate) fn neighbours(&self, idx: usize) -> ([usize; 4], usize, usize) {
        let x = idx % self.width;
        let y = idx / self.width;
        let height = self.spins.len() / self.width;
        let mut out = [0usize; 4];
        let mut k = 0;
        if x > 0 {
            out[k] = idx - 1;
            k += 1;
        }
        if x + 1 < self.width {
            out[k] = idx + 1;
            k += 1;
        }
        if y > 0 {
            out[k] = idx - self.width;
            k += 1;
        }
        if y + 1 < height {
            out[k] = idx + self.width;
            k += 1;
        }
        (out, k, 4 - k)
    }

    /// Sum of the four neighbouring spins.
    #[inline]
    pub(crate) fn neighbour_sum(&self, idx: usize) -> i32 {
        let (nb, k, pinned) = self.neighbours(idx);
        nb[..k].iter().map(|&n| self.spins[n] as i32).sum::<i32>() + pinned as i32
    }

    fn count_disagreeing(&self, idx: usize) -> u8 {
        let s = self.spins[idx];
        let (nb, k, pinned) = self.neighbours(idx);
        let inner = nb[..k].iter().filter(|&&n| self.spins[n] != s).count();
        let outer = if s == 1 { 0 } else { pinned };
        (inner + outer) as u8
    }

    #[inline]
    fn classify(&mut self, idx: usize, old: u8, new: u8) {
        if old == new {
            return;
        }
        match old {
            2 => self.rate_half.remove(idx),
            3 => self.rate_one.remove(idx),
            _ => {}
        }
        match new {
            2 => self.rate_half.insert(idx),
            3 => self.rate_one.insert(idx),
            _ => {}
        }
    }

    #[inline]
    fn set_h(&mut self, idx: usize, hv: u8) {
        let old = class_of(self.h[idx]);
        self.h[idx] = hv;
        self.classify(idx, old, class_of(hv));
    }

    /// Flip one spin and update the classification of it and its neighbours.
    pub(crate) fn flip(&mut self, idx: usize) {
        let new = -self.spins[idx];
        self.spins[idx] = new;
        if new == -1 {
            self.minus += 1;
        } else {
            self.minus -= 1;
        }
        self.set_h(idx, 4 - self.h[idx]);
        let (nb, k, _) = self.neighbours(idx);
        for &n in &nb[..k] {
            let hv = if self.spins[n] == new {
                self.h[n] - 1
            } else {
                self.h[n] + 1
            };
            self.set_h(n, hv);
        }
        self.last_flip = self.t;
        self.flips += 1;
    }

    pub(crate) fn h_of(&self, idx: usize) -> u8 {
        self.h[idx]
    }

    pub(crate) fn set_time(&mut self, t: f64) {
        self.t = t;
    }
}

fn check_scale(l: u32) -> Result<(), GlauberError> {
    if l < MIN_SCALE {
        return Err(GlauberError::ScaleTooSmall(l));
    }
    Ok(())
}

/// Which window sites lie in `region`.
fn membership(l: u32, region: &Region, w: Window) -> Vec<bool> {
    let h = 1.0 / l as f64;
    let grid = Grid {
        x0: (w.i0 as f64 - 0.5) * h,
        y0: (w.j0 as f64 - 0.5) * h,
        h,
        width: w.width(),
        height: w.height(),
    };
    match region {
        Region::Empty => vec![false; grid.len()],
        Region::Polygon(c) => {
            let mut mask = vec![false; grid.len()];
            fill_polygon(c.points(), &grid, &mut mask);
            mask
        }
        Region::Point(p) => {
            let mut mask = vec![false; grid.len()];
            let (fi, fj) = (p[0] * l as f64, p[1] * l as f64);
            if fi.fract() == 0.0 && fj.fract() == 0.0 && w.contains(fi as i64, fj as i64) {
                mask[(fj as i64 - w.j0) as usize * grid.width + (fi as i64 - w.i0) as usize] = true;
            }
            mask
        }
        Region::Cells(_) | Region::Raster(_) => region.rasterize(&grid),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::construct;

    fn single_minus(l: u32) -> SpinLattice {
        let w = Window {
            i0: -2,
            j0: -2,
            i1: 2,
            j1: 2,
        };
        let mut spins = vec![1; 25];
        spins[12] = -1;
        SpinLattice::from_spins(l, w, spins).unwrap()
    }

    #[test]
    fn disk_lattice_point_count() {
        let l = 64i64;
        let disk = Region::Polygon(construct::circle([0.0, 0.0], 0.4, 4096).unwrap());
        let lat = SpinLattice::init_from_region(l as u32, &disk).unwrap();
        // 0.4 L = 25.6, so no lattice point is within 1e-3 of the circle
        let want = (-30..=30i64)
            .flat_map(|i| (-30..=30i64).map(move |j| (i, j)))
            .filter(|(i, j)| i * i + j * j <= 655)
            .count();
        assert_eq!(lat.minus_count(), want);
        assert!(lat.classification_is_exact());
    }

    #[test]
    fn empty_region_is_dead() {
        let mut lat = SpinLattice::init_from_region(32, &Region::Empty).unwrap();
        assert!(lat.is_dead());
        assert_eq!(lat.total_rate(), 0.0);
        assert_eq!(lat.droplet(), Region::Empty);
        let mut rng = RngStream::new(0, 0);
        lat.advance(&mut rng, 5.0);
        assert_eq!(lat.time(), 5.0);
        assert_eq!(lat.death_time(&mut rng).unwrap(), 0.0);
    }

    #[test]
    fn full_window_activity_on_border_only() {
        let w = Window {
            i0: 0,
            j0: 0,
            i1: 9,
            j1: 9,
        };
        let lat = SpinLattice::from_spins(16, w, vec![-1; 100]).unwrap();
        let (half, one) = lat.active_counts();
        // four corners have two pinned neighbours; edge sites only one
        assert_eq!(one, 0);
        assert_eq!(half, 4);
    }

    #[test]
    fn single_spin_and_block_rates() {
        let lat = single_minus(16);
        assert_eq!(lat.active_counts(), (0, 1));
        assert_eq!(lat.total_rate(), 1.0);
        let w = Window {
            i0: -3,
            j0: -3,
            i1: 3,
            j1: 3,
        };
        let mut spins = vec![1i8; 49];
        for (i, j) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            spins[((j + 3) * 7 + (i + 3)) as usize] = -1;
        }
        let lat = SpinLattice::from_spins(16, w, spins).unwrap();
        assert_eq!(lat.total_rate(), 2.0);
    }

    #[test]
    fn droplet_cells() {
        let lat = single_minus(32);
        match lat.droplet() {
            Region::Cells(c) => {
                assert_eq!(c.cells(), &[(0, 0)]);
                assert!((c.area() - 1.0 / 1024.0).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn incremental_classification_stays_exact() {
        let disk = Region::Polygon(construct::circle([0.0, 0.0], 0.3, 512).unwrap());
        let mut lat = SpinLattice::init_from_region(32, &disk).unwrap();
        let mut rng = RngStream::new(11, 0);
        for k in 1..=20 {
            lat.advance(&mut rng, 10.0 * k as f64);
            assert!(lat.classification_is_exact());
        }
    }

    #[test]
    fn determinism_and_absorption() {
        let disk = Region::Polygon(construct::circle([0.0, 0.0], 0.25, 256).unwrap());
        let run = || {
            let mut lat = SpinLattice::init_from_region(32, &disk).unwrap();
            let mut rng = RngStream::new(5, 2);
            let mut log = Vec::new();
            lat.advance_with(&mut rng, 50.0, |e| log.push(*e));
            (lat, log)
        };
        let (a, la) = run();
        let (b, lb) = run();
        assert_eq!(la, lb);
        assert_eq!(a, b);
        let mut lat = a;
        let mut rng = RngStream::new(9, 0);
        let t = lat.death_time(&mut rng).unwrap();
        assert!(lat.is_dead());
        let flips = lat.flips();
        lat.advance(&mut rng, t + 1000.0);
        assert_eq!(lat.flips(), flips);
        assert_eq!(lat.last_flip_time(), t);
    }

    #[test]
    fn event_line_format() {
        let e = FlipEvent {
            t: 1.5,
            site: (-3, 4),
            old: -1,
            new: 1,
        };
        assert_eq!(e.to_line(), "1.5 -3 4 -1 1");
    }
}
