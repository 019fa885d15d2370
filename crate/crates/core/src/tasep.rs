//! Continuous-time TASEP on a ring.
//!
//! Every particle with an empty right neighbour carries a rate-one clock. The
//! simulation keeps the set of such mobile particles in an indexed vector, so
//! the next event is `Exp(#mobile)` away and the particle that jumps is a
//! uniform pick from the set. This is exact in law and O(1) per event.

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::rng::{self, StreamKey, StreamRng};
use crate::stats::{two_point_summary, CvtvTriple, TwoTimeResult};

const ABSENT: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct TasepState {
    occupancy: Vec<u8>,
    mobile: Vec<u32>,
    slot: Vec<u32>,
    tracked: Vec<usize>,
    flux: Vec<u64>,
    jumps: u64,
    time: f64,
    rng: StreamRng,
}

impl TasepState {
    /// Bernoulli(½) product occupancy on a ring of `ring_size` sites, with
    /// flux counters on bond (0,1) and on the bonds `(j, j+1)` in `tracked`.
    pub fn stationary(ring_size: usize, tracked: &[i64], mut rng: StreamRng) -> Result<Self> {
        if ring_size < 2 {
            return Err(Error::param("ring_size", format!("need at least 2 sites, got {ring_size}")));
        }
        let mut occupancy = vec![0u8; ring_size];
        let mut filled = 0;
        while filled < ring_size {
            let bits = rand::RngCore::next_u64(&mut rng);
            for b in 0..64.min(ring_size - filled) {
                occupancy[filled + b] = ((bits >> b) & 1) as u8;
            }
            filled += 64;
        }
        Self::from_occupancy(occupancy, tracked, rng)
    }

    pub fn from_occupancy(occupancy: Vec<u8>, tracked: &[i64], rng: StreamRng) -> Result<Self> {
        let ring_size = occupancy.len();
        if ring_size < 2 {
            return Err(Error::param("ring_size", format!("need at least 2 sites, got {ring_size}")));
        }
        if occupancy.iter().any(|&o| o > 1) {
            return Err(Error::param("occupancy", "entries must be 0 or 1"));
        }
        let mut bonds = vec![0usize];
        for &j in tracked {
            let b = j.rem_euclid(ring_size as i64) as usize;
            if !bonds.contains(&b) {
                bonds.push(b);
            }
        }
        let mut state = Self {
            occupancy,
            mobile: Vec::with_capacity(ring_size / 2),
            slot: vec![ABSENT; ring_size],
            flux: vec![0; bonds.len()],
            tracked: bonds,
            jumps: 0,
            time: 0.0,
            rng,
        };
        for i in 0..ring_size {
            state.refresh(i);
        }
        Ok(state)
    }

    pub fn ring_size(&self) -> usize {
        self.occupancy.len()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn occupancy(&self) -> &[u8] {
        &self.occupancy
    }

    /// Occupation of site `j`, indices taken modulo the ring size.
    pub fn eta(&self, j: i64) -> u8 {
        self.occupancy[self.wrap(j)]
    }

    pub fn occupied_fraction(&self) -> f64 {
        self.occupancy.iter().map(|&o| o as u64).sum::<u64>() as f64 / self.ring_size() as f64
    }

    /// Number of jumps across bond `(j, j+1)` so far, if that bond is tracked.
    pub fn flux(&self, j: i64) -> Option<u64> {
        let b = self.wrap(j);
        self.tracked.iter().position(|&t| t == b).map(|idx| self.flux[idx])
    }

    /// Total number of jumps since initialization.
    pub fn jumps(&self) -> u64 {
        self.jumps
    }

    pub fn mobile_count(&self) -> usize {
        self.mobile.len()
    }

    #[inline]
    fn wrap(&self, j: i64) -> usize {
        j.rem_euclid(self.ring_size() as i64) as usize
    }

    #[inline]
    fn next(&self, i: usize) -> usize {
        if i + 1 == self.occupancy.len() {
            0
        } else {
            i + 1
        }
    }

    #[inline]
    fn prev(&self, i: usize) -> usize {
        if i == 0 {
            self.occupancy.len() - 1
        } else {
            i - 1
        }
    }

    /// Re-derive whether site `i` belongs in the mobile set.
    #[inline]
    fn refresh(&mut self, i: usize) {
        let should = self.occupancy[i] == 1 && self.occupancy[self.next(i)] == 0;
        let present = self.slot[i] != ABSENT;
        if should && !present {
            self.slot[i] = self.mobile.len() as u32;
            self.mobile.push(i as u32);
        } else if !should && present {
            let at = self.slot[i] as usize;
            let last = self.mobile.pop().expect("slot set implies non-empty");
            if last as usize != i {
                self.mobile[at] = last;
                self.slot[last as usize] = at as u32;
            }
            self.slot[i] = ABSENT;
        }
    }

    fn jump(&mut self, i: usize) {
        let to = self.next(i);
        self.occupancy[i] = 0;
        self.occupancy[to] = 1;
        self.jumps += 1;
        if let Some(idx) = self.tracked.iter().position(|&b| b == i) {
            self.flux[idx] += 1;
        }
        self.refresh(i);
        self.refresh(to);
        let before = self.prev(i);
        self.refresh(before);
    }

    /// Run the dynamics up to time `t_end`. The clock that would fire after
    /// `t_end` is discarded, which is exact by memorylessness.
    pub fn evolve_until(&mut self, t_end: f64) -> Result<()> {
        if !(t_end >= self.time) {
            return Err(Error::param(
                "t_end",
                format!("cannot evolve backwards from {} to {t_end}", self.time),
            ));
        }
        loop {
            let m = self.mobile.len();
            if m == 0 {
                break;
            }
            let wait = rng::exponential(&mut self.rng, 1.0 / m as f64);
            if self.time + wait > t_end {
                break;
            }
            self.time += wait;
            let pick = self.mobile[rng::index(&mut self.rng, m)] as usize;
            self.jump(pick);
        }
        self.time = t_end;
        Ok(())
    }

    /// Height function relative to bond (0,1): `h(t,0) = 2N_t(0)` and
    /// `h(t,j) - h(t,j-1) = 1 - 2η(t,j)`. Only sites with `|j| <= L/4` are
    /// served, so that ring wraparound stays out of the observation window.
    pub fn height(&self, j: i64) -> Result<i64> {
        let limit = (self.ring_size() / 4) as i64;
        if j.abs() > limit {
            return Err(Error::OutsideWindow(format!(
                "site {j} outside |j| <= {limit} on a ring of {}",
                self.ring_size()
            )));
        }
        let base = 2 * self.flux[0] as i64;
        let step = |l: i64| 1 - 2 * self.eta(l) as i64;
        Ok(if j >= 0 {
            base + (1..=j).map(step).sum::<i64>()
        } else {
            base - (j + 1..=0).map(step).sum::<i64>()
        })
    }
}

/// Observe `h` at each `(time, site)` of `schedule` along one trajectory.
/// Values come back in schedule order.
pub fn observe_heights(state: &mut TasepState, schedule: &[(f64, i64)]) -> Result<Vec<i64>> {
    let mut order: Vec<usize> = (0..schedule.len()).collect();
    order.sort_by(|&a, &b| schedule[a].0.total_cmp(&schedule[b].0));
    let mut out = vec![0; schedule.len()];
    for idx in order {
        let (t, j) = schedule[idx];
        state.evolve_until(t)?;
        out[idx] = state.height(j)?;
    }
    Ok(out)
}

/// Parameters of a two-time height correlation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TasepAgingParams {
    pub ring_size: usize,
    pub s: f64,
    pub a: f64,
    pub j: i64,
    pub k: i64,
}

impl TasepAgingParams {
    pub fn validate(&self, replicas: usize) -> Result<()> {
        if !(self.s > 0.0) {
            return Err(Error::param("s", format!("must be positive, got {}", self.s)));
        }
        if !(self.a >= 1.0) {
            return Err(Error::param("a", format!("must be >= 1, got {}", self.a)));
        }
        let margin = 8.0 * self.a * self.s;
        if (self.ring_size as f64) < margin {
            return Err(Error::param(
                "ring_size",
                format!("need at least 8*a*s = {margin} sites, got {}", self.ring_size),
            ));
        }
        let window = (self.ring_size / 4) as i64;
        for (name, site) in [("j", self.j), ("k", self.k), ("k - j", self.k - self.j)] {
            if site.abs() > window {
                return Err(Error::OutsideWindow(format!("{name} = {site} exceeds L/4 = {window}")));
            }
        }
        if replicas < 100 {
            return Err(Error::param("replicas", format!("need at least 100, got {replicas}")));
        }
        Ok(())
    }
}

/// `Corr(h(s, j), h(as, k))` over independent stationary replicas, with the
/// covariance-to-variance cross-check built from `h((a-1)s, k-j)`.
pub fn two_time_height_corr(
    params: TasepAgingParams,
    replicas: usize,
    key: StreamKey,
    ensemble: Ensemble,
) -> Result<TwoTimeResult> {
    params.validate(replicas)?;
    let TasepAgingParams { ring_size, s, a, j, k } = params;
    let schedule = [(s, j), (a * s, k), ((a - 1.0) * s, k - j)];
    let runs = ensemble.map(replicas, |r| -> Result<CvtvTriple> {
        let mut state = TasepState::stationary(ring_size, &[], key.replica(r as u64).rng())?;
        let h = observe_heights(&mut state, &schedule)?;
        Ok(CvtvTriple {
            first: h[0] as f64,
            second: h[1] as f64,
            displacement: h[2] as f64,
        })
    });
    let triples = runs.into_iter().collect::<Result<Vec<_>>>()?;
    two_point_summary(&triples, a == 1.0 && j == k, key.seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(name: &str) -> StreamKey {
        StreamKey::new(2024, name)
    }

    #[test]
    fn init_is_reproducible_and_starts_at_zero() {
        let a = TasepState::stationary(1000, &[5], key("init").rng()).unwrap();
        let b = TasepState::stationary(1000, &[5], key("init").rng()).unwrap();
        assert_eq!(a.occupancy(), b.occupancy());
        assert_eq!(a.time(), 0.0);
        assert_eq!(a.flux(0), Some(0));
        assert_eq!(a.flux(5), Some(0));
        assert_eq!(a.flux(6), None);
        assert_eq!(a.height(0).unwrap(), 0);
        assert!(TasepState::stationary(1, &[], key("x").rng()).is_err());
    }

    #[test]
    fn stationary_density_is_one_half() {
        let st = TasepState::stationary(100_000, &[], key("density").rng()).unwrap();
        let f = st.occupied_fraction();
        // 99% binomial interval: 0.5 ± 2.576 * 0.5 / sqrt(1e5) = 0.5 ± 0.0041
        assert!((0.494..=0.506).contains(&f), "{f}");
    }

    #[test]
    fn full_ring_never_moves() {
        let mut st = TasepState::from_occupancy(vec![1; 50], &[], key("full").rng()).unwrap();
        assert_eq!(st.mobile_count(), 0);
        st.evolve_until(1000.0).unwrap();
        assert_eq!(st.jumps(), 0);
        assert_eq!(st.time(), 1000.0);
    }

    #[test]
    fn single_particle_is_a_poisson_walker() {
        let (t, reps) = (10.0, 10_000);
        let mut sum = 0.0;
        for r in 0..reps {
            let mut occ = vec![0u8; 64];
            occ[0] = 1;
            let mut st = TasepState::from_occupancy(occ, &[], key("single").replica(r).rng()).unwrap();
            st.evolve_until(t).unwrap();
            sum += st.jumps() as f64;
        }
        let mean = sum / reps as f64;
        assert!((mean - t).abs() <= 3.0 * (t / reps as f64).sqrt(), "{mean}");
    }

    #[test]
    fn height_increments_are_unit_steps() {
        let mut st = TasepState::stationary(400, &[], key("steps").rng()).unwrap();
        st.evolve_until(7.5).unwrap();
        for j in -99..=100 {
            let d = st.height(j).unwrap() - st.height(j - 1).unwrap();
            assert_eq!(d, 1 - 2 * st.eta(j) as i64, "j={j}");
        }
        assert!(st.height(101).is_err());
        assert!(st.height(-101).is_err());
    }

    #[test]
    fn height_tracks_flux_at_every_tracked_bond() {
        // h(t, j) - h(0, j) = 2 N_t(j)
        let tracked = [-7, 3, 12];
        let mut st = TasepState::stationary(256, &tracked, key("flux").rng()).unwrap();
        let h0: Vec<i64> = tracked.iter().map(|&j| st.height(j).unwrap()).collect();
        st.evolve_until(20.0).unwrap();
        for (&j, h) in tracked.iter().zip(h0) {
            assert_eq!(st.height(j).unwrap() - h, 2 * st.flux(j).unwrap() as i64);
        }
    }

    #[test]
    fn mean_flux_is_a_quarter() {
        let (t, reps) = (100.0, 1000);
        let fluxes: Vec<f64> = (0..reps)
            .map(|r| {
                let mut st = TasepState::stationary(4096, &[], key("current").replica(r).rng()).unwrap();
                st.evolve_until(t).unwrap();
                st.flux(0).unwrap() as f64
            })
            .collect();
        let acc = crate::stats::MomentAccumulator::from_slice(&fluxes).unwrap();
        assert!((acc.mean() - t / 4.0).abs() <= 3.0 * acc.stderr().unwrap(), "{acc:?}");
    }

    #[test]
    fn evolve_is_deterministic() {
        let run = || {
            let mut st = TasepState::stationary(500, &[], key("det").rng()).unwrap();
            st.evolve_until(30.0).unwrap();
            (st.occupancy().to_vec(), st.flux(0))
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn two_time_identical_points() {
        let p = TasepAgingParams { ring_size: 128, s: 5.0, a: 1.0, j: 0, k: 0 };
        let res = two_time_height_corr(p, 200, key("same"), Ensemble::default()).unwrap();
        assert_eq!(res.direct.value, 1.0);
        assert!((res.cvtv.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_time_rejects_small_ring() {
        let p = TasepAgingParams { ring_size: 100, s: 10.0, a: 2.0, j: 0, k: 0 };
        assert!(two_time_height_corr(p, 200, key("ring"), Ensemble::default()).is_err());
        let p = TasepAgingParams { ring_size: 1000, s: 10.0, a: 2.0, j: 0, k: 0 };
        assert!(two_time_height_corr(p, 50, key("ring"), Ensemble::default()).is_err());
    }
}
