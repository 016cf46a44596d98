//! Interval layout of the stacked coupling.
//!
//! Reaction `k` owns the band `[lo_k, lo_k + top_k)` of the rate axis, where
//! `top_k` is the larger of the two intensities. The lower part of width
//! `both_k` (the smaller intensity) moves both processes; the residual moves
//! only the process with the larger intensity. The layout only needs ordered
//! field arithmetic, so it is generic beyond floats and can be checked exactly
//! on rationals.

use num_traits::Num;

use crate::error::{CrnError, Result};

/// Which process has the larger intensity in a band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Perturbed,
    Nominal,
    Tie,
}

/// Effect of a point of the driving process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Firing {
    Both,
    PerturbedOnly,
    NominalOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band<T> {
    pub lo: T,
    pub both: T,
    pub top: T,
    pub larger: Side,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackedFrame<T> {
    bands: Vec<Band<T>>,
    total: T,
}

impl<T: Copy + PartialOrd + Num> StackedFrame<T> {
    pub fn from_intensities(perturbed: &[T], nominal: &[T]) -> Self {
        let mut frame = Self {
            bands: Vec::with_capacity(perturbed.len()),
            total: T::zero(),
        };
        frame.rebuild(perturbed, nominal);
        frame
    }

    /// Recomputes the layout in place.
    pub fn rebuild(&mut self, perturbed: &[T], nominal: &[T]) {
        debug_assert_eq!(perturbed.len(), nominal.len());
        self.bands.clear();
        let mut lo = T::zero();
        for (&p, &n) in perturbed.iter().zip(nominal) {
            let (both, top, larger) = if p > n {
                (n, p, Side::Perturbed)
            } else if n > p {
                (p, n, Side::Nominal)
            } else {
                (p, p, Side::Tie)
            };
            self.bands.push(Band { lo, both, top, larger });
            lo = lo + top;
        }
        self.total = lo;
    }

    pub fn bands(&self) -> &[Band<T>] {
        &self.bands
    }

    /// `q_K`, the summed band widths.
    pub fn total(&self) -> T {
        self.total
    }

    /// Classifies the point at height `v`; `None` when `v` lies outside `[0, total)`.
    #[inline]
    pub fn classify_level(&self, v: T) -> Option<(usize, Firing)> {
        if v < T::zero() {
            return None;
        }
        for (k, b) in self.bands.iter().enumerate() {
            if v < b.lo + b.top {
                let firing = if v < b.lo + b.both {
                    Firing::Both
                } else {
                    match b.larger {
                        Side::Perturbed => Firing::PerturbedOnly,
                        Side::Nominal => Firing::NominalOnly,
                        // the residual band is empty on ties
                        Side::Tie => Firing::Both,
                    }
                };
                return Some((k, firing));
            }
        }
        None
    }

    /// Classifies a uniform mark `u` in `[0, 1)` placed at height `u * total`.
    pub fn classify_mark(&self, u: T) -> Result<(usize, Firing)> {
        if !(self.total > T::zero()) {
            return Err(CrnError::Argument("frame has zero total rate".into()));
        }
        if u < T::zero() || !(u < T::one()) {
            return Err(CrnError::Argument("mark must lie in [0, 1)".into()));
        }
        if let Some(hit) = self.classify_level(u * self.total) {
            return Ok(hit);
        }
        // u * total rounded up to total: the point belongs to the top of the last nonempty band
        let (k, b) = self
            .bands
            .iter()
            .enumerate()
            .rev()
            .find(|(_, b)| b.top > T::zero())
            .expect("positive total implies a nonempty band");
        let firing = match b.larger {
            Side::Perturbed if b.top > b.both => Firing::PerturbedOnly,
            Side::Nominal if b.top > b.both => Firing::NominalOnly,
            _ => Firing::Both,
        };
        Ok((k, firing))
    }
}

/// Same answer as `StackedFrame::from_intensities(perturbed, nominal).classify_level(v)`
/// without materializing the bands.
#[inline]
pub fn classify_intensities<T: Copy + PartialOrd + Num>(perturbed: &[T], nominal: &[T], v: T) -> Option<(usize, Firing)> {
    if v < T::zero() {
        return None;
    }
    let mut lo = T::zero();
    for (k, (&p, &n)) in perturbed.iter().zip(nominal).enumerate() {
        let (both, top, residual) = if p > n {
            (n, p, Firing::PerturbedOnly)
        } else if n > p {
            (p, n, Firing::NominalOnly)
        } else {
            (p, p, Firing::Both)
        };
        if v < lo + top {
            return Some((k, if v < lo + both { Firing::Both } else { residual }));
        }
        lo = lo + top;
    }
    None
}
