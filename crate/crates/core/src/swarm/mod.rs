//! Poincaré swarms and the Kuramoto chain.
//!
//! A Poincaré swarm moves `N` points of the unit disc by
//!
//! ```text
//! dz_j/dt = i (f_j z_j² + ω z_j + conj(f_j)),   f_j = (i / 2N) Σ_k e^{iβ_jk} K_jk conj(z_k)
//! ```
//!
//! When every oscillator sees the same field (global coupling, or one field
//! per sub-swarm) the flow acts on each group by a single disc isometry, so
//! pairwise hyperbolic distances inside a group are conserved. The
//! [`verify_isometry`] helper measures how well a computed trajectory keeps
//! that property.

mod integrate;

pub use integrate::{integrate, integrate_endpoint, OdeState, Trajectory};

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::hyp_distance_complex;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// General Poincaré swarm with dense symmetric couplings.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmSpec {
    n: usize,
    omega: f64,
    coupling: Vec<f64>,
    phase_shift: Vec<f64>,
    // e^{iβ_jk} K_jk · i/(2N), cached for the right-hand side
    field_weights: Vec<Complex64>,
}

impl SwarmSpec {
    /// `coupling` and `phase_shift` are row-major `n × n` matrices and must be
    /// symmetric.
    pub fn new(n: usize, omega: f64, coupling: Vec<f64>, phase_shift: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("swarm needs at least one oscillator"));
        }
        for (name, m) in [("coupling", &coupling), ("phase_shift", &phase_shift)] {
            if m.len() != n * n {
                return Err(Error::DimensionMismatch {
                    expected: n * n,
                    got: m.len(),
                });
            }
            for j in 0..n {
                for k in (j + 1)..n {
                    if m[j * n + k] != m[k * n + j] {
                        return Err(Error::param(format!(
                            "{name} matrix is not symmetric at ({j}, {k})"
                        )));
                    }
                }
            }
        }
        if !omega.is_finite() || coupling.iter().chain(&phase_shift).any(|x| !x.is_finite()) {
            return Err(Error::param("swarm parameters must be finite"));
        }
        let scale = I / (2.0 * n as f64);
        let field_weights = coupling
            .iter()
            .zip(&phase_shift)
            .map(|(&k, &b)| scale * Complex64::from_polar(k, b))
            .collect();
        Ok(SwarmSpec {
            n,
            omega,
            coupling,
            phase_shift,
            field_weights,
        })
    }

    /// Global coupling: one strength `k` and one phase shift `beta` for every pair.
    pub fn global(n: usize, omega: f64, k: f64, beta: f64) -> Result<Self> {
        Self::new(n, omega, vec![k; n * n], vec![beta; n * n])
    }

    /// Rotation-only swarm.
    pub fn uncoupled(n: usize, omega: f64) -> Result<Self> {
        Self::new(n, omega, vec![0.0; n * n], vec![0.0; n * n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn coupling(&self, j: usize, k: usize) -> f64 {
        self.coupling[j * self.n + k]
    }

    pub fn phase_shift(&self, j: usize, k: usize) -> f64 {
        self.phase_shift[j * self.n + k]
    }

    pub fn record(&self) -> SwarmRecord {
        SwarmRecord {
            n: self.n,
            omega: self.omega,
            coupling: self.coupling.clone(),
            phase_shift: self.phase_shift.clone(),
        }
    }

    /// Writes `dz/dt` into `out`; no allocation, no checks.
    pub fn velocity_into(&self, z: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        for j in 0..n {
            let row = &self.field_weights[j * n..(j + 1) * n];
            let f: Complex64 = row.iter().zip(z).map(|(w, zk)| w * zk.conj()).sum();
            let zj = z[j];
            out[j] = I * (f * zj * zj + self.omega * zj + f.conj());
        }
    }

    pub fn velocity(&self, z: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.n, z.len())?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.n];
        self.velocity_into(z, &mut out);
        Ok(out)
    }
}

/// Plain serializable view of a [`SwarmSpec`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwarmRecord {
    pub n: usize,
    pub omega: f64,
    pub coupling: Vec<f64>,
    pub phase_shift: Vec<f64>,
}

pub fn swarm_rhs(spec: &SwarmSpec, z: &[Complex64]) -> Result<Vec<Complex64>> {
    spec.velocity(z)
}

/// `p` globally coupled sub-swarms; sub-swarm `l` feels the field
/// `f_l = (i/2) Σ_m e^{iβ_lm} (K_lm / N_m) Σ_k conj(z_k^{(m)})`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubSwarmSpec {
    sizes: Vec<usize>,
    omega: f64,
    coupling: Vec<f64>,
    phase_shift: Vec<f64>,
    field_weights: Vec<Complex64>,
}

impl SubSwarmSpec {
    /// `coupling` and `phase_shift` are row-major `p × p`.
    pub fn new(sizes: Vec<usize>, omega: f64, coupling: Vec<f64>, phase_shift: Vec<f64>) -> Result<Self> {
        let p = sizes.len();
        if p == 0 || sizes.iter().any(|&s| s == 0) {
            return Err(Error::param("every sub-swarm needs at least one oscillator"));
        }
        for m in [&coupling, &phase_shift] {
            if m.len() != p * p {
                return Err(Error::DimensionMismatch {
                    expected: p * p,
                    got: m.len(),
                });
            }
        }
        if !omega.is_finite() || coupling.iter().chain(&phase_shift).any(|x| !x.is_finite()) {
            return Err(Error::param("sub-swarm parameters must be finite"));
        }
        let field_weights = (0..p * p)
            .map(|idx| {
                let m = idx % p;
                0.5 * I * Complex64::from_polar(coupling[idx] / sizes[m] as f64, phase_shift[idx])
            })
            .collect();
        Ok(SubSwarmSpec {
            sizes,
            omega,
            coupling,
            phase_shift,
            field_weights,
        })
    }

    pub fn p(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn coupling(&self, l: usize, m: usize) -> f64 {
        self.coupling[l * self.p() + m]
    }

    pub fn phase_shift(&self, l: usize, m: usize) -> f64 {
        self.phase_shift[l * self.p() + m]
    }

    /// Group index of every oscillator in the flattened state.
    pub fn grouping(&self) -> Vec<usize> {
        self.sizes
            .iter()
            .enumerate()
            .flat_map(|(l, &s)| std::iter::repeat_n(l, s))
            .collect()
    }

    pub fn record(&self) -> SubSwarmRecord {
        SubSwarmRecord {
            sizes: self.sizes.clone(),
            omega: self.omega,
            coupling: self.coupling.clone(),
            phase_shift: self.phase_shift.clone(),
        }
    }

    /// Velocity of the flattened state (sub-swarms stored one after another).
    pub fn velocity_into(&self, z: &[Complex64], out: &mut [Complex64]) {
        let p = self.p();
        let mut sums = [Complex64::new(0.0, 0.0); 8];
        let mut heap;
        let sums: &mut [Complex64] = if p <= sums.len() {
            &mut sums[..p]
        } else {
            heap = vec![Complex64::new(0.0, 0.0); p];
            &mut heap
        };
        let mut offset = 0;
        for (m, &size) in self.sizes.iter().enumerate() {
            sums[m] = z[offset..offset + size].iter().map(|zk| zk.conj()).sum();
            offset += size;
        }
        let mut offset = 0;
        for (l, &size) in self.sizes.iter().enumerate() {
            let f: Complex64 = self.field_weights[l * p..(l + 1) * p]
                .iter()
                .zip(sums.iter())
                .map(|(w, s)| w * s)
                .sum();
            for j in offset..offset + size {
                let zj = z[j];
                out[j] = I * (f * zj * zj + self.omega * zj + f.conj());
            }
            offset += size;
        }
    }

    pub fn velocity(&self, z: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.total(), z.len())?;
        let mut out = vec![Complex64::new(0.0, 0.0); z.len()];
        self.velocity_into(z, &mut out);
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubSwarmRecord {
    pub sizes: Vec<usize>,
    pub omega: f64,
    pub coupling: Vec<f64>,
    pub phase_shift: Vec<f64>,
}

/// Nested-shape form of [`SubSwarmSpec::velocity`].
pub fn subswarm_rhs(spec: &SubSwarmSpec, z: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
    if z.len() != spec.p() {
        return Err(Error::DimensionMismatch {
            expected: spec.p(),
            got: z.len(),
        });
    }
    for (group, &size) in z.iter().zip(spec.sizes()) {
        check_len(size, group.len())?;
    }
    let flat: Vec<Complex64> = z.iter().flatten().copied().collect();
    let v = spec.velocity(&flat)?;
    let mut out = Vec::with_capacity(spec.p());
    let mut offset = 0;
    for &size in spec.sizes() {
        out.push(v[offset..offset + size].to_vec());
        offset += size;
    }
    Ok(out)
}

/// Kuramoto oscillators coupled only to their neighbours along a chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KuramotoChainSpec {
    omega: f64,
    couplings: Vec<f64>,
}

impl KuramotoChainSpec {
    /// `couplings[j]` links oscillators `j` and `j + 1`.
    pub fn new(omega: f64, couplings: Vec<f64>) -> Result<Self> {
        if couplings.is_empty() {
            return Err(Error::param("a chain needs at least two oscillators"));
        }
        if !omega.is_finite() || couplings.iter().any(|k| !k.is_finite()) {
            return Err(Error::param("chain parameters must be finite"));
        }
        Ok(KuramotoChainSpec { omega, couplings })
    }

    pub fn n(&self) -> usize {
        self.couplings.len() + 1
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn velocity_into(&self, phi: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = self.omega);
        for (j, &k) in self.couplings.iter().enumerate() {
            let s = k * (phi[j + 1] - phi[j]).sin();
            out[j] += s;
            out[j + 1] -= s;
        }
    }

    pub fn velocity(&self, phi: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n(), phi.len())?;
        let mut out = vec![0.0; phi.len()];
        self.velocity_into(phi, &mut out);
        Ok(out)
    }
}

pub fn kuramoto_rhs(spec: &KuramotoChainSpec, phi: &[f64]) -> Result<Vec<f64>> {
    spec.velocity(phi)
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Largest change, over recorded times and same-group pairs, of the
/// hyperbolic distance relative to the initial configuration.
pub fn verify_isometry(traj: &Trajectory<Vec<Complex64>>, grouping: &[usize]) -> f64 {
    pair_drift(traj, grouping, true)
}

/// Same as [`verify_isometry`] but over pairs from different groups.
pub fn cross_group_change(traj: &Trajectory<Vec<Complex64>>, grouping: &[usize]) -> f64 {
    pair_drift(traj, grouping, false)
}

fn pair_drift(traj: &Trajectory<Vec<Complex64>>, grouping: &[usize], same: bool) -> f64 {
    let Some(first) = traj.states.first() else {
        return 0.0;
    };
    let n = first.len().min(grouping.len());
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            if (grouping[i] == grouping[j]) != same {
                continue;
            }
            let d0 = hyp_distance_complex(first[i], first[j]);
            for state in &traj.states[1..] {
                let d = hyp_distance_complex(state[i], state[j]);
                worst = worst.max((d - d0).abs());
            }
        }
    }
    worst
}

/// Writes a disc trajectory as CSV: `t,re_1,im_1,…`.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory<Vec<Complex64>>, mut out: W) -> std::io::Result<()> {
    let n = traj.states.first().map_or(0, |s| s.len());
    let mut header = String::from("t");
    for j in 1..=n {
        header.push_str(&format!(",re_{j},im_{j}"));
    }
    writeln!(out, "{header}")?;
    for (t, state) in traj.times.iter().zip(&traj.states) {
        let mut line = format!("{t}");
        for z in state {
            line.push_str(&format!(",{},{}", z.re, z.im));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::RngHandle;
    use std::f64::consts::{PI, TAU};

    fn random_disc_state(rng: &mut RngHandle, n: usize, max_r: f64) -> Vec<Complex64> {
        (0..n)
            .map(|_| Complex64::from_polar(max_r * rng.uniform().sqrt(), rng.angle()))
            .collect()
    }

    fn random_symmetric(rng: &mut RngHandle, n: usize, scale: f64, angle: bool) -> Vec<f64> {
        let mut m = vec![0.0; n * n];
        for j in 0..n {
            for k in j..n {
                let v = if angle { rng.angle() } else { scale * rng.standard_normal() };
                m[j * n + k] = v;
                m[k * n + j] = v;
            }
        }
        m
    }

    #[test]
    fn uncoupled_swarm_rotates() {
        let spec = SwarmSpec::uncoupled(3, 1.7).unwrap();
        let z = vec![
            Complex64::new(0.3, 0.1),
            Complex64::new(-0.5, 0.2),
            Complex64::new(0.0, -0.9),
        ];
        let v = spec.velocity(&z).unwrap();
        for (zj, vj) in z.iter().zip(&v) {
            assert!((vj - I * 1.7 * zj).norm() < 1e-15);
            assert!((zj.conj() * vj).re.abs() < 1e-15);
        }
    }

    #[test]
    fn single_uncoupled_oscillator_moves_tangentially() {
        let spec = SwarmSpec::new(1, 0.8, vec![0.0], vec![1.0]).unwrap();
        let z = [Complex64::new(0.4, -0.3)];
        let v = spec.velocity(&z).unwrap();
        assert!((z[0].conj() * v[0]).re.abs() < 1e-15);
    }

    #[test]
    fn rejects_asymmetric_or_misshaped_specs() {
        assert!(SwarmSpec::new(2, 0.0, vec![0.0, 1.0, 2.0, 0.0], vec![0.0; 4]).is_err());
        assert!(SwarmSpec::new(2, 0.0, vec![0.0; 3], vec![0.0; 4]).is_err());
        let spec = SwarmSpec::uncoupled(3, 0.0).unwrap();
        assert!(matches!(
            spec.velocity(&[Complex64::new(0.0, 0.0); 2]),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn swarm_velocity_matches_flow_difference() {
        let mut rng = RngHandle::new(10);
        let spec = SwarmSpec::new(
            2,
            0.7,
            random_symmetric(&mut rng, 2, 1.5, false),
            random_symmetric(&mut rng, 2, 0.0, true),
        )
        .unwrap();
        let z0 = random_disc_state(&mut rng, 2, 0.8);
        let v = spec.velocity(&z0).unwrap();
        let fd = flow_derivative(z0, |z, out| spec.velocity_into(z, out));
        for (a, b) in v.iter().zip(&fd) {
            assert!((a - b).norm() < 1e-8, "{a} vs {b}");
        }
    }

    // one-sided second-order difference of the integrated flow at h = 1e-6
    fn flow_derivative(
        z0: Vec<Complex64>,
        rhs: impl FnMut(&[Complex64], &mut [Complex64]) + Clone,
    ) -> Vec<Complex64> {
        let h = 1e-6;
        let mut f = rhs.clone();
        let z1 = integrate_endpoint(|z: &Vec<Complex64>, o: &mut Vec<Complex64>| f(z, o), z0.clone(), 0.0, h, h)
            .unwrap();
        let mut f = rhs;
        let z2 = integrate_endpoint(|z: &Vec<Complex64>, o: &mut Vec<Complex64>| f(z, o), z0.clone(), 0.0, 2.0 * h, h)
            .unwrap();
        (0..z0.len())
            .map(|j| (-3.0 * z0[j] + 4.0 * z1[j] - z2[j]) / (2.0 * h))
            .collect()
    }

    #[test]
    fn one_subswarm_is_global_coupling() {
        let mut rng = RngHandle::new(11);
        for _ in 0..10 {
            let n = 4;
            let k = rng.standard_normal();
            let beta = rng.angle();
            let omega = rng.standard_normal();
            let global = SwarmSpec::global(n, omega, k, beta).unwrap();
            let sub = SubSwarmSpec::new(vec![n], omega, vec![k], vec![beta]).unwrap();
            let z = random_disc_state(&mut rng, n, 0.9);
            let a = global.velocity(&z).unwrap();
            let b = sub.velocity(&z).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn uncoupled_subswarms_rotate() {
        let sub = SubSwarmSpec::new(vec![2, 1], -0.4, vec![0.0; 4], vec![1.0; 4]).unwrap();
        let z = vec![
            Complex64::new(0.1, 0.2),
            Complex64::new(-0.3, 0.4),
            Complex64::new(0.5, 0.0),
        ];
        let nested = subswarm_rhs(&sub, &[z[..2].to_vec(), z[2..].to_vec()]).unwrap();
        let flat: Vec<Complex64> = nested.into_iter().flatten().collect();
        for (zj, vj) in z.iter().zip(&flat) {
            assert!((vj - I * -0.4 * zj).norm() < 1e-15);
        }
        assert!(subswarm_rhs(&sub, &[z.clone()]).is_err());
        assert!(subswarm_rhs(&sub, &[z[..1].to_vec(), z[1..].to_vec()]).is_err());
    }

    #[test]
    fn subswarm_velocity_matches_flow_difference() {
        let mut rng = RngHandle::new(12);
        let sub = SubSwarmSpec::new(
            vec![3, 2],
            0.3,
            random_symmetric(&mut rng, 2, 2.0, false),
            random_symmetric(&mut rng, 2, 0.0, true),
        )
        .unwrap();
        let z0 = random_disc_state(&mut rng, 5, 0.8);
        let v = sub.velocity(&z0).unwrap();
        let fd = flow_derivative(z0, |z, out| sub.velocity_into(z, out));
        for (a, b) in v.iter().zip(&fd) {
            assert!((a - b).norm() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn kuramoto_examples() {
        let free = KuramotoChainSpec::new(0.5, vec![0.0; 4]).unwrap();
        assert_eq!(free.velocity(&[0.1, 2.0, 3.0, -1.0, 0.0]).unwrap(), vec![0.5; 5]);

        let pair = KuramotoChainSpec::new(0.0, vec![1.0]).unwrap();
        let v = pair.velocity(&[0.0, PI / 2.0]).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15 && (v[1] + 1.0).abs() < 1e-15);

        assert!(KuramotoChainSpec::new(0.0, vec![]).is_err());
        assert!(free.velocity(&[0.0; 3]).is_err());
    }

    #[test]
    fn kuramoto_sum_rule() {
        let mut rng = RngHandle::new(13);
        for _ in 0..20 {
            let n = 2 + (rng.uniform() * 9.0) as usize;
            let omega = rng.standard_normal();
            let ks: Vec<f64> = (0..n - 1).map(|_| 3.0 * rng.standard_normal()).collect();
            let spec = KuramotoChainSpec::new(omega, ks).unwrap();
            let phi: Vec<f64> = (0..n).map(|_| rng.angle()).collect();
            let total: f64 = spec.velocity(&phi).unwrap().iter().sum();
            assert!((total - n as f64 * omega).abs() < 1e-12);
        }
    }

    #[test]
    fn global_swarm_preserves_distances() {
        let mut rng = RngHandle::new(14);
        let spec = SwarmSpec::global(5, 0.9, 2.0 * rng.standard_normal(), rng.angle()).unwrap();
        let z0 = random_disc_state(&mut rng, 5, 0.9);
        let traj = integrate(
            |z: &Vec<Complex64>, o: &mut Vec<Complex64>| spec.velocity_into(z, o),
            z0,
            0.0,
            2.0,
            1e-3,
            10,
        )
        .unwrap();
        assert!(verify_isometry(&traj, &[0; 5]) < 1e-6);
    }

    #[test]
    fn uncoupled_drift_is_roundoff() {
        let mut rng = RngHandle::new(15);
        let spec = SwarmSpec::uncoupled(4, 1.3).unwrap();
        let z0 = random_disc_state(&mut rng, 4, 0.9);
        let traj = integrate(
            |z: &Vec<Complex64>, o: &mut Vec<Complex64>| spec.velocity_into(z, o),
            z0,
            0.0,
            TAU,
            1e-3,
            1,
        )
        .unwrap();
        assert!(verify_isometry(&traj, &[0; 4]) < 1e-11);
    }

    #[test]
    fn subswarms_preserve_only_within_group_distances() {
        let mut rng = RngHandle::new(16);
        let sub = SubSwarmSpec::new(
            vec![3, 3],
            0.2,
            random_symmetric(&mut rng, 2, 2.0, false),
            random_symmetric(&mut rng, 2, 0.0, true),
        )
        .unwrap();
        let z0 = random_disc_state(&mut rng, 6, 0.8);
        let traj = integrate(
            |z: &Vec<Complex64>, o: &mut Vec<Complex64>| sub.velocity_into(z, o),
            z0,
            0.0,
            2.0,
            1e-3,
            10,
        )
        .unwrap();
        let g = sub.grouping();
        assert!(verify_isometry(&traj, &g) < 1e-6);
        assert!(cross_group_change(&traj, &g) > 1e-2);
    }

    #[test]
    fn trajectory_csv_layout() {
        let traj = Trajectory {
            times: vec![0.0, 0.5],
            states: vec![
                vec![Complex64::new(0.1, 0.2)],
                vec![Complex64::new(0.3, -0.4)],
            ],
            boundary_corrections: 0,
        };
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,re_1,im_1\n0,0.1,0.2\n0.5,0.3,-0.4\n");
    }
}
