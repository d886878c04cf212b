//! Geometry, path loss, LOS steering vectors and Rician channel sampling.
//!
//! The BS carries a half-wavelength uniform linear array along the x-axis.
//! The surface is a half-wavelength uniform planar array in the y-z plane,
//! so its two half-spaces are `x > x_ris` (reflection, same side as the BS
//! in the default layout) and `x < x_ris` (transmission).

use nalgebra::{DMatrix, DVector, RowDVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{ChannelRealization, Scenario};
use crate::scalar::Cx;

type C64 = Cx<f64>;

/// 3GPP UMa-style path loss `28 + 22 log10(d) + 20 log10(f_c)` in dB,
/// with `d` in meters and `f_c` in GHz.
pub fn path_loss_db(distance_m: f64, carrier_ghz: f64) -> Result<f64> {
    if !(distance_m > 0.0 && distance_m.is_finite()) {
        return Err(Error::invalid(format!("distance must be positive, got {distance_m}")));
    }
    if !(carrier_ghz > 0.0 && carrier_ghz.is_finite()) {
        return Err(Error::invalid(format!("carrier must be positive, got {carrier_ghz}")));
    }
    Ok(28.0 + 22.0 * distance_m.log10() + 20.0 * carrier_ghz.log10())
}

/// Linear power gain `10^(-Pl/10)`.
pub fn path_loss_linear(distance_m: f64, carrier_ghz: f64) -> Result<f64> {
    Ok(10f64.powf(-path_loss_db(distance_m, carrier_ghz)? / 10.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub bs_position: [f64; 3],
    pub ris_position: [f64; 3],
    pub user_positions: Vec<[f64; 3]>,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Unit vector pointing from `from` to `to`.
fn direction(from: [f64; 3], to: [f64; 3]) -> [f64; 3] {
    let d = sub(to, from);
    let n = norm(d);
    [d[0] / n, d[1] / n, d[2] / n]
}

impl Geometry {
    pub fn new(bs: [f64; 3], ris: [f64; 3], users: Vec<[f64; 3]>) -> Result<Self> {
        let g = Self {
            bs_position: bs,
            ris_position: ris,
            user_positions: users,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn from_scenario(s: &Scenario) -> Result<Self> {
        Self::new(
            s.bs_position,
            s.ris_position,
            s.users.iter().map(|u| u.position).collect(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let all = std::iter::once(self.bs_position)
            .chain(std::iter::once(self.ris_position))
            .chain(self.user_positions.iter().copied());
        for p in all.clone() {
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::invalid("positions must be finite"));
            }
        }
        if self.bs_distance() <= 0.0 {
            return Err(Error::invalid("BS and surface positions coincide"));
        }
        for k in 0..self.user_positions.len() {
            if self.user_distance(k) <= 0.0 {
                return Err(Error::invalid(format!("user {k} coincides with the surface")));
            }
        }
        Ok(())
    }

    /// BS→surface distance in meters.
    pub fn bs_distance(&self) -> f64 {
        norm(sub(self.ris_position, self.bs_position))
    }

    /// Surface→user distance in meters.
    pub fn user_distance(&self, k: usize) -> f64 {
        norm(sub(self.user_positions[k], self.ris_position))
    }
}

/// Seed plus stream id; equal pairs reproduce identical draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }
}

/// Rows × columns of the planar surface: the most square factorization
/// with at least as many columns as rows (5 × 4 for 20 elements is stored
/// as 4 rows of 5).
pub fn planar_shape(m: usize) -> (usize, usize) {
    let mut rows = (m as f64).sqrt().floor() as usize;
    while rows > 1 && m % rows != 0 {
        rows -= 1;
    }
    (rows.max(1), m / rows.max(1))
}

/// BS steering vector for a departure direction `u` (unit vector).
pub fn ula_steering(n: usize, u: [f64; 3]) -> DVector<C64> {
    DVector::from_fn(n, |i, _| C64::from_polar(1.0, std::f64::consts::PI * i as f64 * u[0]))
}

/// Surface steering vector for direction `u`: element `(p, q)` with `p`
/// along y and `q` along z sits at index `q·cols + p`.
pub fn upa_steering(m: usize, u: [f64; 3]) -> DVector<C64> {
    let (_, cols) = planar_shape(m);
    DVector::from_fn(m, |i, _| {
        let p = (i % cols) as f64;
        let q = (i / cols) as f64;
        C64::from_polar(1.0, std::f64::consts::PI * (p * u[1] + q * u[2]))
    })
}

/// Unit-modulus LOS components `G_LOS` (`M × N`) and `v_k,LOS` (`1 × M`).
pub fn los_components(
    geometry: &Geometry,
    n: usize,
    m: usize,
) -> (DMatrix<C64>, Vec<RowDVector<C64>>) {
    let to_ris = direction(geometry.bs_position, geometry.ris_position);
    let to_bs = direction(geometry.ris_position, geometry.bs_position);
    let a_bs = ula_steering(n, to_ris);
    let a_ris = upa_steering(m, to_bs);
    let g = &a_ris * a_bs.adjoint();
    let v = geometry
        .user_positions
        .iter()
        .map(|&p| upa_steering(m, direction(geometry.ris_position, p)).adjoint())
        .collect();
    (g, v)
}

fn cn(rng: &mut ChaCha8Rng) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * s, im * s)
}

/// Mixing weights `(√(φ/(φ+1)), √(1/(φ+1)))`; `φ = ∞` is pure LOS.
pub fn rician_weights(factor: f64) -> (f64, f64) {
    if factor.is_infinite() {
        (1.0, 0.0)
    } else {
        ((factor / (factor + 1.0)).sqrt(), (1.0 / (factor + 1.0)).sqrt())
    }
}

/// Draws one realization: `√Pl · (√(φ/(φ+1)) LOS + √(1/(φ+1)) NLOS)` for
/// the BS→surface matrix and every surface→user row.
pub fn sample_channel(
    scenario: &Scenario,
    geometry: &Geometry,
    rng: &mut ChaCha8Rng,
) -> Result<ChannelRealization<f64>> {
    let n = scenario.num_antennas;
    let m = scenario.num_elements;
    if geometry.user_positions.len() != scenario.num_users() {
        return Err(Error::Dimension {
            context: "geometry users",
            expected: scenario.num_users(),
            found: geometry.user_positions.len(),
        });
    }
    let (g_los, v_los) = los_components(geometry, n, m);
    let f = scenario.carrier_ghz;

    let (a, b) = rician_weights(scenario.rician_factor_g);
    let pl = path_loss_linear(geometry.bs_distance(), f)?.sqrt();
    let mut g = DMatrix::zeros(m, n);
    for j in 0..n {
        for i in 0..m {
            g[(i, j)] = (g_los[(i, j)] * a + cn(rng) * b) * pl;
        }
    }

    let (a, b) = rician_weights(scenario.rician_factor_v);
    let mut v = Vec::with_capacity(v_los.len());
    for (k, los) in v_los.iter().enumerate() {
        let pl = path_loss_linear(geometry.user_distance(k), f)?.sqrt();
        v.push(RowDVector::from_fn(m, |_, i| (los[i] * a + cn(rng) * b) * pl));
    }
    ChannelRealization::new(g, v, scenario.sides())
}

/// Noise power in watts.
///
/// An explicit `noise_power` wins. Otherwise the SNR is read as a
/// reference receive SNR: the SNR of a single surface element's cascaded
/// link at full power, `P_max · Pl(BS→surface) · Pl(mean surface→user)`,
/// divided by `10^(SNR/10)`.
pub fn noise_power(scenario: &Scenario) -> Result<f64> {
    if let Some(n) = scenario.noise_power {
        return Ok(n);
    }
    let geo = Geometry::from_scenario(scenario)?;
    let k = geo.user_positions.len().max(1);
    let mean_d = (0..geo.user_positions.len())
        .map(|i| geo.user_distance(i))
        .sum::<f64>()
        / k as f64;
    let f = scenario.carrier_ghz;
    let reference = scenario.p_max * path_loss_linear(geo.bs_distance(), f)? * path_loss_linear(mean_d, f)?;
    Ok(reference / 10f64.powf(scenario.snr_db / 10.0))
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;

    #[test]
    fn path_loss_values() {
        assert_relative_eq!(path_loss_db(1.0, 1.0).unwrap(), 28.0);
        assert!((path_loss_db(250.0, 2.0).unwrap() - 86.78).abs() < 0.01);
        let d = (250f64.powi(2) * 2.0 + 144.0).sqrt();
        assert!((d - 353.76).abs() < 0.01);
        assert!((path_loss_db(d, 2.0).unwrap() - 90.09).abs() < 0.01);
        assert!(path_loss_db(0.0, 2.0).is_err());
        assert!(path_loss_db(1.0, -2.0).is_err());
        assert_relative_eq!(path_loss_linear(1.0, 1.0).unwrap(), 10f64.powf(-2.8));
    }

    #[test]
    fn default_geometry_distances() {
        let g = Geometry::from_scenario(&Scenario::default()).unwrap();
        assert!((g.bs_distance() - 353.76).abs() < 0.01);
        assert!(Geometry::new([0.0; 3], [0.0; 3], vec![]).is_err());
    }

    #[test]
    fn planar_shapes() {
        assert_eq!(planar_shape(20), (4, 5));
        assert_eq!(planar_shape(4), (2, 2));
        assert_eq!(planar_shape(7), (1, 7));
        assert_eq!(planar_shape(1), (1, 1));
    }

    #[test]
    fn broadside_steering_is_all_ones() {
        let a = upa_steering(20, [1.0, 0.0, 0.0]);
        assert!(a.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-15));
        let b = ula_steering(4, [0.0, 1.0, 0.0]);
        assert!(b.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn planar_phases_match_hand_values() {
        // 2 × 2 array, u = (0, 0.5, 0.25): phases π·(p·0.5 + q·0.25).
        let u = [0.0, 0.5, 0.25];
        let a = upa_steering(4, u);
        let pi = std::f64::consts::PI;
        let expected = [0.0, pi * 0.5, pi * 0.25, pi * 0.75];
        for (z, e) in a.iter().zip(expected) {
            assert!((z - C64::from_polar(1.0, e)).norm() < 1e-12);
        }
    }

    #[test]
    fn los_entries_are_unit_modulus() {
        let g = Geometry::from_scenario(&Scenario::default()).unwrap();
        let (glos, vlos) = los_components(&g, 4, 20);
        assert_eq!(glos.shape(), (20, 4));
        assert!(glos.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        assert!(vlos.iter().flat_map(|v| v.iter()).all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn pure_los_limit_is_deterministic() {
        let mut s = Scenario::default();
        s.rician_factor_g = f64::INFINITY;
        s.rician_factor_v = f64::INFINITY;
        let geo = Geometry::from_scenario(&s).unwrap();
        let ch = sample_channel(&s, &geo, &mut RngStream::new(1, 0).rng()).unwrap();
        let (glos, vlos) = los_components(&geo, 4, 20);
        let pl = path_loss_linear(geo.bs_distance(), 2.0).unwrap().sqrt();
        assert!((ch.g.clone() - glos * C64::new(pl, 0.0)).norm() < 1e-20);
        let pl = path_loss_linear(geo.user_distance(0), 2.0).unwrap().sqrt();
        assert!((&ch.v[0] - &vlos[0] * C64::new(pl, 0.0)).norm() < 1e-20);
    }

    #[test]
    fn same_stream_same_channel() {
        let s = Scenario::default();
        let geo = Geometry::from_scenario(&s).unwrap();
        let a = sample_channel(&s, &geo, &mut RngStream::new(9, 3).rng()).unwrap();
        let b = sample_channel(&s, &geo, &mut RngStream::new(9, 3).rng()).unwrap();
        let c = sample_channel(&s, &geo, &mut RngStream::new(9, 4).rng()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    /// Mean normalized power of the BS→surface entries and LOS/NLOS power
    /// ratio, over 10⁵ sampled entries.
    fn monte_carlo(factor: f64) -> (f64, f64) {
        let mut s = Scenario::default();
        s.rician_factor_g = factor;
        let geo = Geometry::from_scenario(&s).unwrap();
        let (glos, _) = los_components(&geo, 4, 20);
        let pl = path_loss_linear(geo.bs_distance(), 2.0).unwrap();
        let (a, _) = rician_weights(factor);
        let mut rng = RngStream::new(42, 0).rng();
        let mut power = 0.0;
        let mut nlos_power = 0.0;
        let mut count = 0.0;
        for _ in 0..1250 {
            let ch = sample_channel(&s, &geo, &mut rng).unwrap();
            for (z, l) in ch.g.iter().zip(glos.iter()) {
                let z = z / C64::new(pl.sqrt(), 0.0);
                power += z.norm_sqr();
                nlos_power += (z - l * a).norm_sqr();
                count += 1.0;
            }
        }
        (power / count, a * a / (nlos_power / count))
    }

    #[test]
    fn rayleigh_power_normalization() {
        let (p, _) = monte_carlo(0.0);
        assert!((p - 1.0).abs() < 0.02, "{p}");
    }

    #[test]
    fn rician_los_to_nlos_ratio() {
        let phi = 10f64.powf(0.3);
        let (p, ratio) = monte_carlo(phi);
        assert!((p - 1.0).abs() < 0.02, "{p}");
        assert!((ratio / phi - 1.0).abs() < 0.02, "{ratio}");
    }

    #[test]
    fn noise_power_overrides_and_reference() {
        let mut s = Scenario::default();
        s.noise_power = Some(2.5);
        assert_eq!(noise_power(&s).unwrap(), 2.5);
        s.noise_power = None;
        let n5 = noise_power(&s).unwrap();
        s.snr_db = 15.0;
        let n15 = noise_power(&s).unwrap();
        assert_relative_eq!(n5 / n15, 10.0, max_relative = 1e-12);
    }
}
