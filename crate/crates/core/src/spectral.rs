//! Gauge-continuous instantaneous eigenframes and nonadiabatic couplings.
//!
//! Frames along a track are labelled by maximal overlap with the previous
//! frame and phase-fixed so that `⟨prev_m|m⟩` is real and positive (discrete
//! parallel transport). In that gauge the diagonal couplings `⟨m|ṁ⟩` vanish.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::schedules::{ScheduleSpec, StepPolicy, TimeGrid};
use crate::{c, CMatrix, Error, Result, C64};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralOptions {
    /// Gaps at or below `gap_floor_rel * max(‖H‖, gap_scale)` are treated as degenerate.
    pub gap_floor_rel: f64,
    /// Energy scale of the whole schedule; keeps a vanishing H(t) from
    /// passing as gapped. [`frame_track`] raises it to the largest ‖H‖_F on the grid.
    pub gap_scale: f64,
    /// Consecutive matched overlaps below this trigger local bisection.
    pub overlap_threshold: f64,
    pub max_bisections: u32,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions { gap_floor_rel: 1e-10, gap_scale: 0.0, overlap_threshold: 0.99, max_bisections: 8 }
    }
}

/// Spectrum of H at one time. Column `m` of `vectors` is |m(t)⟩ and
/// `energies[m]` its eigenvalue; labels follow states along a track.
#[derive(Clone, Debug)]
pub struct EigenFrame {
    pub t: f64,
    pub energies: Vec<f64>,
    pub vectors: CMatrix,
    /// Smallest separation between any two levels.
    pub gap: f64,
    /// Smallest matched overlap `|⟨prev_m|m⟩|` with the previous frame (1 if untracked).
    pub tracking_overlap: f64,
}

impl EigenFrame {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn vector(&self, m: usize) -> nalgebra::DVectorView<'_, C64> {
        self.vectors.column(m)
    }
}

/// C with `c[(m, k)] = ⟨m|k̇⟩` at one time.
#[derive(Clone, Debug)]
pub struct CouplingMatrix {
    pub t: f64,
    pub c: CMatrix,
}

impl CouplingMatrix {
    pub fn get(&self, m: usize, k: usize) -> C64 {
        self.c[(m, k)]
    }

    /// Largest off-diagonal magnitude.
    pub fn max_offdiag(&self) -> f64 {
        let n = self.c.nrows();
        let mut best = 0.0_f64;
        for m in 0..n {
            for k in 0..n {
                if m != k {
                    best = best.max(self.c[(m, k)].norm());
                }
            }
        }
        best
    }
}

fn fix_phase_largest_component(v: &mut CMatrix, col: usize) {
    let n = v.nrows();
    let max = (0..n).map(|i| v[(i, col)].norm()).fold(0.0_f64, f64::max);
    let pivot = (0..n).find(|&i| v[(i, col)].norm() >= max * (1.0 - 1e-12)).unwrap_or(0);
    let z = v[(pivot, col)];
    if z.norm() > 0.0 {
        let phase = z.conj() / z.norm();
        for i in 0..n {
            v[(i, col)] *= phase;
        }
    }
}

/// Diagonalizes a Hermitian `h` at time `t`.
///
/// Without `prev` levels are energy-ascending and each vector's largest
/// component is made real positive. With `prev` levels are matched greedily by
/// maximal overlap and each vector is rotated so `⟨prev_m|m⟩ > 0`.
pub fn eigenframe(h: &CMatrix, t: f64, prev: Option<&EigenFrame>, opts: &SpectralOptions) -> Result<EigenFrame> {
    let n = h.nrows();
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let norm = sorted.iter().fold(0.0_f64, |a, e| a.max(e.abs()));

    let mut gap = f64::INFINITY;
    let mut pair = (0, 1);
    for i in 0..n - 1 {
        let d = sorted[i + 1] - sorted[i];
        if d < gap {
            gap = d;
            pair = (i, i + 1);
        }
    }
    if gap <= opts.gap_floor_rel * norm.max(opts.gap_scale) {
        return Err(Error::Degeneracy { t, pair, gap });
    }

    let mut vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    let (energies, tracking_overlap) = match prev {
        None => {
            for j in 0..n {
                fix_phase_largest_component(&mut vectors, j);
            }
            (sorted, 1.0)
        }
        Some(prev) => {
            if prev.dim() != n {
                return Err(Error::Contract(format!("frame dimension {} differs from previous {}", n, prev.dim())));
            }
            let overlaps = prev.vectors.adjoint() * &vectors;
            let mut candidates: Vec<(usize, usize, f64)> = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| (i, j, overlaps[(i, j)].norm()))
                .collect();
            candidates.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
            let mut assigned = vec![usize::MAX; n];
            let mut used = vec![false; n];
            for (i, j, _) in candidates {
                if assigned[i] == usize::MAX && !used[j] {
                    assigned[i] = j;
                    used[j] = true;
                }
            }
            let mut tracked = CMatrix::zeros(n, n);
            let mut energies = vec![0.0; n];
            let mut min_overlap = f64::INFINITY;
            for (i, &j) in assigned.iter().enumerate() {
                let o = overlaps[(i, j)];
                let mag = o.norm();
                min_overlap = min_overlap.min(mag);
                let phase = if mag > 0.0 { o.conj() / mag } else { c(1.0, 0.0) };
                for r in 0..n {
                    tracked[(r, i)] = vectors[(r, j)] * phase;
                }
                energies[i] = sorted[j];
            }
            vectors = tracked;
            (energies, min_overlap)
        }
    };
    Ok(EigenFrame { t, energies, vectors, gap, tracking_overlap })
}

/// Off-diagonal couplings `⟨m|Ḣ|k⟩ / (E_k − E_m)`; diagonal entries are the
/// parallel-transport value 0. Use [`couplings_with_neighbors`] to estimate
/// them from the discrete gauge instead.
pub fn couplings(frame: &EigenFrame, hdot: &CMatrix) -> Result<CouplingMatrix> {
    if !(frame.gap > 0.0) {
        return Err(Error::Degeneracy { t: frame.t, pair: (0, 1), gap: frame.gap });
    }
    let n = frame.dim();
    let projected = frame.vectors.adjoint() * hdot * &frame.vectors;
    let mut out = CMatrix::zeros(n, n);
    for m in 0..n {
        for k in 0..n {
            if m != k {
                out[(m, k)] = projected[(m, k)] / (frame.energies[k] - frame.energies[m]);
            }
        }
    }
    Ok(CouplingMatrix { t: frame.t, c: out })
}

/// As [`couplings`], with `⟨m|ṁ⟩ ≈ i·Im⟨m|(m_after − m_before)⟩ / Δt`
/// from neighbouring gauge-fixed frames.
pub fn couplings_with_neighbors(
    frame: &EigenFrame,
    hdot: &CMatrix,
    before: &EigenFrame,
    after: &EigenFrame,
) -> Result<CouplingMatrix> {
    let mut out = couplings(frame, hdot)?;
    let dt = after.t - before.t;
    if dt > 0.0 {
        for m in 0..frame.dim() {
            let diff = after.vector(m) - before.vector(m);
            let z = frame.vector(m).dotc(&diff) / dt;
            out.c[(m, m)] = c(0.0, z.im);
        }
    }
    Ok(out)
}

/// Sequence of gauge-fixed frames with their couplings on a (possibly refined) grid.
#[derive(Clone, Debug)]
pub struct FrameTrack {
    pub grid: TimeGrid,
    pub frames: Vec<EigenFrame>,
    pub couplings: Vec<CouplingMatrix>,
}

impl FrameTrack {
    pub fn times(&self) -> &[f64] {
        self.grid.times()
    }

    pub fn dim(&self) -> usize {
        self.frames[0].dim()
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

fn advance(
    spec: &ScheduleSpec,
    prev: &EigenFrame,
    t: f64,
    depth: u32,
    opts: &SpectralOptions,
    out: &mut Vec<EigenFrame>,
) -> Result<()> {
    let candidate = eigenframe(&spec.h(t)?, t, Some(prev), opts)?;
    if candidate.tracking_overlap >= opts.overlap_threshold {
        out.push(candidate);
        return Ok(());
    }
    if depth >= opts.max_bisections {
        // Matching is still unambiguous above 1/√2.
        if candidate.tracking_overlap > std::f64::consts::FRAC_1_SQRT_2 {
            out.push(candidate);
            return Ok(());
        }
        return Err(Error::Degeneracy { t, pair: (0, 1), gap: candidate.gap });
    }
    let mid = 0.5 * (prev.t + t);
    advance(spec, prev, mid, depth + 1, opts, out)?;
    let mid_frame = out.last().unwrap().clone();
    advance(spec, &mid_frame, t, depth + 1, opts, out)
}

/// Tracks eigenframes along `grid`, bisecting intervals where consecutive
/// matched overlaps fall below the threshold.
pub fn frame_track(spec: &ScheduleSpec, grid: &TimeGrid, opts: &SpectralOptions) -> Result<FrameTrack> {
    let times = grid.times();
    let mut scale = opts.gap_scale;
    for &t in times {
        scale = scale.max(spec.h(t)?.norm());
    }
    let opts = &SpectralOptions { gap_scale: scale, ..*opts };
    let mut frames = Vec::with_capacity(times.len());
    frames.push(eigenframe(&spec.h(times[0])?, times[0], None, opts)?);
    for &t in &times[1..] {
        let prev = frames.last().unwrap().clone();
        advance(spec, &prev, t, 0, opts, &mut frames)?;
    }
    let refined = frames.len() != times.len();
    let grid = if refined {
        TimeGrid::from_times(frames.iter().map(|f| f.t).collect(), StepPolicy::AdaptiveRefined)?
    } else {
        grid.clone()
    };
    let last = frames.len() - 1;
    let couplings = frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let hdot = spec.hdot(f.t)?;
            let before = &frames[i.saturating_sub(1)];
            let after = &frames[(i + 1).min(last)];
            couplings_with_neighbors(f, &hdot, before, after)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrameTrack { grid, frames, couplings })
}

/// Minimum level separation over all frames.
pub fn min_gap(frames: &[EigenFrame]) -> f64 {
    frames.iter().map(|f| f.gap).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedules::{build_grid, Model};
    use nalgebra::DMatrix;
    use std::f64::consts::PI;

    #[test]
    fn diagonal_matrix_frame() {
        let h = DMatrix::from_row_slice(2, 2, &[c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let f = eigenframe(&h, 0.0, None, &SpectralOptions::default()).unwrap();
        assert_eq!(f.energies, vec![-1.0, 1.0]);
        assert!((&f.vectors - CMatrix::identity(2, 2)).norm() < 1e-14);
        assert_eq!(f.gap, 2.0);
    }

    #[test]
    fn sigma_x_ground_state() {
        let w0 = 1.7;
        let h = DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(-0.5 * w0, 0.0), c(-0.5 * w0, 0.0), c(0.0, 0.0)]);
        let f = eigenframe(&h, 0.0, None, &SpectralOptions::default()).unwrap();
        assert!((f.energies[0] + 0.5 * w0).abs() < 1e-14);
        assert!((f.energies[1] - 0.5 * w0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((f.vector(0)[0] - c(s, 0.0)).norm() < 1e-14);
        assert!((f.vector(0)[1] - c(s, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        let h = CMatrix::zeros(2, 2);
        assert!(matches!(eigenframe(&h, 0.3, None, &SpectralOptions::default()), Err(Error::Degeneracy { .. })));
    }

    #[test]
    fn tracked_gauge_is_real_positive() {
        let spec = ScheduleSpec::new(Model::Schwinger { omega0: 1.0, theta: 0.7, omega_l: 0.05 }, 0.0, 20.0).unwrap();
        let track = frame_track(&spec, &build_grid(&spec, 200).unwrap(), &SpectralOptions::default()).unwrap();
        for w in track.frames.windows(2) {
            for m in 0..2 {
                let o = w[0].vector(m).dotc(&w[1].vector(m));
                assert!(o.re > 0.0 && o.im.abs() < 1e-13, "overlap {o}");
            }
        }
    }

    #[test]
    fn constant_hamiltonian_has_zero_couplings() {
        let spec = ScheduleSpec::new(Model::DressedTwoLevel { delta0: 0.3, rabi: 1.0 }, 0.0, 5.0).unwrap();
        let track = frame_track(&spec, &build_grid(&spec, 20).unwrap(), &SpectralOptions::default()).unwrap();
        let first = &track.frames[0];
        for (f, cm) in track.frames.iter().zip(&track.couplings) {
            assert!((&f.vectors - &first.vectors).norm() < 1e-14);
            assert!(cm.c.norm() < 1e-14);
        }
    }

    #[test]
    fn schwinger_coupling_magnitude() {
        let spec =
            ScheduleSpec::new(Model::Schwinger { omega0: 1.0, theta: PI / 2.0, omega_l: 0.2 }, 0.0, 30.0).unwrap();
        let track = frame_track(&spec, &build_grid(&spec, 300).unwrap(), &SpectralOptions::default()).unwrap();
        for cm in &track.couplings {
            assert!((cm.get(1, 0).norm() - 0.1).abs() < 1e-12);
            assert!((cm.get(0, 1).norm() - 0.1).abs() < 1e-12);
        }
        assert!((min_gap(&track.frames) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cycling_labels_keep_energy_order() {
        let spec = ScheduleSpec::new(Model::Cycling { alpha: 10.0, omega: 1.0, rabi: 0.5, swapped: false }, 0.0, 2.0 * PI)
            .unwrap();
        let track = frame_track(&spec, &build_grid(&spec, 100).unwrap(), &SpectralOptions::default()).unwrap();
        for f in &track.frames {
            assert!(f.energies[0] <= f.energies[1]);
        }
    }

    #[test]
    fn linear_chirp_gap_minimum() {
        let spec =
            ScheduleSpec::new(Model::LinearChirp { beta: 1.0, rabi: 0.8, t_center: 0.0 }, -5.0, 5.0).unwrap();
        let grid = TimeGrid::uniform(-5.0, 5.0, 1001).unwrap();
        let track = frame_track(&spec, &grid, &SpectralOptions::default()).unwrap();
        assert!((min_gap(&track.frames) - 0.8).abs() < 1e-6);
    }

    #[test]
    fn random_couplings_match_finite_differences() {
        use crate::schedules::RandomPair;
        let spec = ScheduleSpec::new(Model::RandomSmooth(RandomPair::generate(4, 11, false, 1.0, 1.0)), 0.0, 3.0)
            .unwrap();
        let h = 1e-4;
        let opts = SpectralOptions::default();
        for &t in &[0.7, 1.5, 2.2] {
            let mid = eigenframe(&spec.h(t).unwrap(), t, None, &opts).unwrap();
            let lo = eigenframe(&spec.h(t - h).unwrap(), t - h, Some(&mid), &opts).unwrap();
            let hi = eigenframe(&spec.h(t + h).unwrap(), t + h, Some(&mid), &opts).unwrap();
            let cm = couplings(&mid, &spec.hdot(t).unwrap()).unwrap();
            for m in 0..4 {
                for k in 0..4 {
                    if m == k {
                        continue;
                    }
                    let fd = mid.vector(m).dotc(&(hi.vector(k) - lo.vector(k))) / (2.0 * h);
                    assert!((fd - cm.get(m, k)).norm() < 1e-5, "({m},{k}) fd {fd} formula {}", cm.get(m, k));
                }
            }
        }
    }
}
