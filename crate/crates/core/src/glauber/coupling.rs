use super::lattice::IndexSet;
use super::{GlauberError, RngStream, SpinLattice};

/// `lower ⪯ upper`: every `-1` of `lower` is also `-1` in `upper`, so the
/// droplet of `lower` is contained in the droplet of `upper`.
pub fn is_ordered(lower: &SpinLattice, upper: &SpinLattice) -> bool {
    lower.scale() == upper.scale()
        && lower.window() == upper.window()
        && lower
            .spins()
            .iter()
            .zip(upper.spins())
            .all(|(a, b)| a >= b)
}

/// Heat-bath resample from the neighbour sum, with `u` breaking ties.
#[inline]
fn resample(sum: i32, u: f64) -> i8 {
    match sum.signum() {
        1 => 1,
        -1 => -1,
        _ => {
            if u < 0.5 {
                -1
            } else {
                1
            }
        }
    }
}

/// Advance two ordered systems with shared randomness.
///
/// Every site that is active in either system carries one rate-1 clock. At
/// a ring both systems resample that site from their own neighbours with
/// the same tie-breaking uniform. The heat-bath rule is monotone in the
/// neighbour sum, so the order is kept at every event, and each marginal is
/// the single-system dynamics (sites inactive in one system keep their spin
/// there).
pub fn coupled_advance(
    lower: &mut SpinLattice,
    upper: &mut SpinLattice,
    rng: &mut RngStream,
    until: f64,
) -> Result<(), GlauberError> {
    if lower.scale() != upper.scale() || lower.window() != upper.window() {
        return Err(GlauberError::CouplingMismatch);
    }
    if lower.time() != upper.time() {
        return Err(GlauberError::CouplingMismatch);
    }
    if !is_ordered(lower, upper) {
        return Err(GlauberError::NotOrdered);
    }
    let n = lower.spins().len();
    let mut active = IndexSet::new(n);
    let is_active = |l: &SpinLattice, u: &SpinLattice, idx: usize| l.h_of(idx) >= 2 || u.h_of(idx) >= 2;
    for idx in 0..n {
        if is_active(lower, upper, idx) {
            active.insert(idx);
        }
    }
    let mut t = lower.time();
    if !(until > t) {
        return Ok(());
    }
    loop {
        let rate = active.len() as f64;
        if rate == 0.0 {
            t = until;
            break;
        }
        let wait = rng.exp1() / rate;
        if t + wait > until {
            t = until;
            break;
        }
        t += wait;
        let idx = active.pick(rng.uniform());
        let u = rng.uniform();
        let mut changed = false;
        for lat in [&mut *lower, &mut *upper] {
            let new = resample(lat.neighbour_sum(idx), u);
            if new != lat.spins()[idx] {
                lat.set_time(t);
                lat.flip(idx);
                changed = true;
            }
        }
        if changed {
            debug_assert!(
                lower.spins()[idx] >= upper.spins()[idx],
                "coupling order broken at site {:?}",
                lower.site(idx)
            );
            let (nb, k, _) = lower.neighbours(idx);
            for &s in nb[..k].iter().chain(std::iter::once(&idx)) {
                if is_active(lower, upper, s) {
                    active.insert(s);
                } else {
                    active.remove(s);
                }
            }
        }
    }
    lower.set_time(t);
    upper.set_time(t);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{construct, Region};

    fn disk(r: f64) -> Region {
        Region::Polygon(construct::circle([0.0, 0.0], r, 512).unwrap())
    }

    #[test]
    fn identical_systems_stay_identical() {
        let mut a = SpinLattice::init_from_region(32, &disk(0.3)).unwrap();
        let mut b = a.clone();
        let mut rng = RngStream::new(4, 0);
        coupled_advance(&mut a, &mut b, &mut rng, 200.0).unwrap();
        assert_eq!(a.spins(), b.spins());
        assert!(a.flips() > 0);
    }

    #[test]
    fn order_is_preserved() {
        let l = 32;
        let upper0 = SpinLattice::init_from_region(l, &disk(0.4)).unwrap();
        let w = upper0.window();
        let lower0 = SpinLattice::init_in_window(l, &disk(0.3), w).unwrap();
        for seed in 0..5 {
            let (mut lo, mut up) = (lower0.clone(), upper0.clone());
            let mut rng = RngStream::new(seed, 0);
            for k in 1..=20 {
                coupled_advance(&mut lo, &mut up, &mut rng, 0.5 * (l * l) as f64 * k as f64 / 20.0).unwrap();
                assert!(is_ordered(&lo, &up));
                assert!(lo.classification_is_exact() && up.classification_is_exact());
            }
        }
    }

    #[test]
    fn misordered_input_rejected() {
        let l = 32;
        let big = SpinLattice::init_from_region(l, &disk(0.4)).unwrap();
        let small = SpinLattice::init_in_window(l, &disk(0.3), big.window()).unwrap();
        let mut rng = RngStream::new(0, 0);
        let (mut a, mut b) = (big, small);
        assert!(matches!(
            coupled_advance(&mut a, &mut b, &mut rng, 1.0),
            Err(GlauberError::NotOrdered)
        ));
        let mut c = SpinLattice::init_from_region(l, &disk(0.2)).unwrap();
        assert!(matches!(
            coupled_advance(&mut c, &mut a, &mut rng, 1.0),
            Err(GlauberError::CouplingMismatch)
        ));
    }

    #[test]
    fn empty_lower_is_trivially_ordered() {
        let l = 32;
        let mut up = SpinLattice::init_from_region(l, &disk(0.2)).unwrap();
        let mut lo = SpinLattice::init_in_window(l, &Region::Empty, up.window()).unwrap();
        let mut rng = RngStream::new(1, 1);
        coupled_advance(&mut lo, &mut up, &mut rng, 100.0).unwrap();
        assert!(lo.is_dead());
        assert!(is_ordered(&lo, &up));
    }
}
