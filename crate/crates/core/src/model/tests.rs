use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector, RowDVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;
use crate::scalar::Cx;

fn c(re: f64) -> Cx<f64> {
    Cx::new(re, 0.0)
}

fn scalar_channel(sides: Vec<Side>) -> ChannelRealization<f64> {
    let v = sides.iter().map(|_| RowDVector::from_element(1, c(1.0))).collect();
    ChannelRealization::new(DMatrix::from_element(1, 1, c(1.0)), v, sides).unwrap()
}

fn star_1(beta_r: f64) -> StarConfig<f64> {
    StarConfig::new(
        DVector::from_element(1, beta_r),
        DVector::from_element(1, 1.0 - beta_r),
        DVector::zeros(1),
        DVector::zeros(1),
        Protocol::Es,
    )
    .unwrap()
}

fn random_instance(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    k: usize,
) -> (ChannelRealization<f64>, StarConfig<f64>, Vec<DVector<Cx<f64>>>) {
    let mut cn = || Cx::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
    let g = DMatrix::from_fn(m, n, |_, _| cn());
    let v = (0..k).map(|_| RowDVector::from_fn(m, |_, _| cn())).collect();
    let w = (0..k).map(|_| DVector::from_fn(n, |_, _| cn())).collect();
    let sides = (0..k)
        .map(|i| if i % 2 == 0 { Side::Reflection } else { Side::Transmission })
        .collect();
    let beta = DVector::from_fn(m, |_, _| rng.random::<f64>());
    let star = StarConfig::new(
        beta.clone(),
        beta.map(|b| 1.0 - b),
        DVector::from_fn(m, |_, _| rng.random::<f64>() * 6.0),
        DVector::from_fn(m, |_, _| rng.random::<f64>() * 6.0),
        Protocol::Es,
    )
    .unwrap();
    (ChannelRealization::new(g, v, sides).unwrap(), star, w)
}

#[test]
fn scalar_gain_is_squared_product() {
    let chan = scalar_channel(vec![Side::Reflection]);
    let w = DVector::from_element(1, c(2.0));
    assert_relative_eq!(effective_gain(&chan, &star_1(1.0), 0, &w).unwrap(), 4.0);
    let w = DVector::from_element(1, c(1.0));
    assert_relative_eq!(
        effective_gain(&chan, &star_1(0.5), 0, &w).unwrap(),
        0.5,
        epsilon = 1e-15
    );
}

#[test]
fn gain_dimension_mismatch_is_an_error() {
    let chan = scalar_channel(vec![Side::Reflection]);
    let w = DVector::from_element(2, c(1.0));
    assert!(matches!(
        effective_gain(&chan, &star_1(1.0), 0, &w),
        Err(Error::Dimension { .. })
    ));
}

#[test]
fn direct_and_lifted_gain_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let (chan, star, w) = random_instance(&mut rng, 4, 20, 2);
        for rx in 0..2 {
            for wk in &w {
                let direct = effective_gain(&chan, &star, rx, wk).unwrap();
                let lifted = lifted_gain(&chan, &star, rx, wk).unwrap();
                assert_relative_eq!(direct, lifted, max_relative = 1e-9);
            }
        }
    }
}

fn two_user_hand_instance() -> (ChannelRealization<f64>, StarConfig<f64>, Vec<DVector<Cx<f64>>>) {
    let chan = scalar_channel(vec![Side::Reflection, Side::Transmission]);
    let w = vec![DVector::from_element(1, c(1.0)); 2];
    (chan, star_1(0.5), w)
}

#[test]
fn hand_instance_sinrs() {
    let (chan, star, w) = two_user_hand_instance();
    let order = DecodingOrder::identity(2);
    let s = |k, j| sinr(&chan, &star, &w, &order, k, j, 1.0).unwrap();
    assert_relative_eq!(s(0, 0), 1.0 / 3.0, epsilon = 1e-14);
    assert_relative_eq!(s(0, 1), 1.0 / 3.0, epsilon = 1e-14);
    assert_relative_eq!(s(1, 1), 0.5, epsilon = 1e-14);
    assert!(matches!(
        sinr(&chan, &star, &w, &order, 1, 0, 1.0),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn hand_instance_rates_and_qwsr() {
    let (chan, star, w) = two_user_hand_instance();
    let order = DecodingOrder::identity(2);
    let r = achievable_rates(&chan, &star, &w, &order, 1.0).unwrap();
    assert_relative_eq!(r[0], (4.0f64 / 3.0).log2(), epsilon = 1e-14);
    assert_relative_eq!(r[1], 1.5f64.log2(), epsilon = 1e-14);
    assert_relative_eq!(qwsr(&[10.0, 5.0], &[0.415, 0.585]).unwrap(), 7.075, epsilon = 1e-12);
    assert_eq!(qwsr(&[0.0, 0.0], &r).unwrap(), 0.0);
    assert!(qwsr(&[-1.0, 0.0], &r).is_err());
}

#[test]
fn single_user_rate_and_zero_beamformers() {
    let chan = scalar_channel(vec![Side::Reflection]);
    let p: f64 = 3.0;
    let w = vec![DVector::from_element(1, c(p.sqrt()))];
    let order = DecodingOrder::identity(1);
    let snr = sinr(&chan, &star_1(1.0), &w, &order, 0, 0, 1.0).unwrap();
    assert_relative_eq!(snr, p, epsilon = 1e-12);
    let r = achievable_rates(&chan, &star_1(1.0), &w, &order, 1.0).unwrap();
    assert_relative_eq!(r[0], (1.0 + p).log2(), epsilon = 1e-12);

    let (chan, star, _) = two_user_hand_instance();
    let zero = vec![DVector::zeros(1); 2];
    let r = achievable_rates(&chan, &star, &zero, &DecodingOrder::identity(2), 1.0).unwrap();
    assert!(r.iter().all(|&x| x == 0.0));
    assert_eq!(
        sinr(&chan, &star, &zero, &DecodingOrder::identity(2), 0, 0, 1.0).unwrap(),
        0.0
    );
}

#[test]
fn oma_rate_reduces_to_single_user_rate() {
    let g = 7.5;
    assert_relative_eq!(oma_rate(g, 1.0, 2.0), (1.0f64 + g / 2.0).log2());
    assert_eq!(oma_rate(g, 0.0, 2.0), 0.0);
}

#[test]
fn star_validation() {
    assert!(validate_star(&star_1(0.5), Protocol::Es).is_empty());
    let v = validate_star(&star_1(0.5), Protocol::Ms);
    assert!(v.iter().any(|x| matches!(x, StarViolation::NonBinary { .. })));
    assert!(validate_star(&star_1(1.0), Protocol::Ms).is_empty());
    let ts = StarConfig::<f64>::single_side(Side::Transmission, DVector::zeros(3));
    assert!(validate_star(&ts, Protocol::Ts).is_empty());
    assert!(!validate_star(&star_1(0.5), Protocol::Ts).is_empty());
}

#[test]
fn star_construction_wraps_and_renormalizes() {
    let s = StarConfig::new(
        DVector::from_vec(vec![0.6 + 1e-10, 0.2]),
        DVector::from_vec(vec![0.4, 0.2]),
        DVector::from_vec(vec![-0.5, 7.0]),
        DVector::from_vec(vec![std::f64::consts::TAU, 0.1]),
        Protocol::Es,
    )
    .unwrap();
    assert!(s.energy_violation() <= 1e-12);
    assert_relative_eq!(s.beta_r[1], 0.5);
    assert!(s.theta_r.iter().chain(s.theta_t.iter()).all(|&t| (0.0..std::f64::consts::TAU).contains(&t)));
    assert!(StarConfig::new(
        DVector::from_vec(vec![1.5]),
        DVector::from_vec(vec![0.0]),
        DVector::zeros(1),
        DVector::zeros(1),
        Protocol::Es
    )
    .is_err());
}

#[test]
fn equal_beamformers_meet_fairness_with_equality() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (chan, star, mut w) = random_instance(&mut rng, 4, 8, 2);
    w[1] = w[0].clone();
    let v = check_fairness(&chan, &star, &w, &DecodingOrder::identity(2), 0.0).unwrap();
    assert!(v.is_empty());
}

#[test]
fn decoding_order_enumeration() {
    assert_eq!(DecodingOrder::all(1).len(), 1);
    assert_eq!(DecodingOrder::all(3).len(), 6);
    let o = DecodingOrder::new(vec![2, 0, 1]).unwrap();
    assert_eq!(o.position(2), 0);
    assert!(o.decodes_before(0, 1));
    assert!(DecodingOrder::new(vec![0, 0]).is_err());
}

#[test]
fn default_scenario_is_valid() {
    Scenario::default().validate().unwrap();
    let mut s = Scenario::default();
    s.users[1].side = Side::Reflection;
    assert!(s.validate().is_err());
}

#[test]
fn trace_segments() {
    let mut t = Trace::new();
    t.push(1.0);
    t.push(2.0);
    t.new_segment();
    t.push(0.5);
    t.push(0.7);
    assert!(t.is_nondecreasing(0.0));
    t.push(0.6);
    assert_relative_eq!(t.max_decrease(), 0.1, epsilon = 1e-12);
}

proptest! {
    #[test]
    fn rates_never_increase_with_noise(seed in 0u64..500, bump in 1.01f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (chan, star, w) = random_instance(&mut rng, 3, 6, 3);
        let order = DecodingOrder::new(vec![2, 0, 1]).unwrap();
        let lo = achievable_rates(&chan, &star, &w, &order, 0.1).unwrap();
        let hi = achievable_rates(&chan, &star, &w, &order, 0.1 * bump).unwrap();
        for (a, b) in lo.iter().zip(&hi) {
            prop_assert!(b <= &(a + 1e-12));
        }
    }

    #[test]
    fn moving_a_user_later_never_hurts_its_own_sinr(seed in 0u64..500) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (chan, star, w) = random_instance(&mut rng, 2, 5, 3);
        let early = DecodingOrder::new(vec![0, 1, 2]).unwrap();
        let late = DecodingOrder::new(vec![1, 0, 2]).unwrap();
        let a = sinr(&chan, &star, &w, &early, 0, 0, 0.3).unwrap();
        let b = sinr(&chan, &star, &w, &late, 0, 0, 0.3).unwrap();
        prop_assert!(b >= a - 1e-12);
    }

    #[test]
    fn energy_conservation_after_construction(br in proptest::collection::vec(0.0f64..1.0, 1..16)) {
        let m = br.len();
        let bt: Vec<f64> = br.iter().map(|b| (1.0 - b) * 1.0000000001).collect();
        let s = StarConfig::new(
            DVector::from_vec(br),
            DVector::from_vec(bt.iter().map(|b| b.min(1.0)).collect()),
            DVector::zeros(m),
            DVector::zeros(m),
            Protocol::Es,
        ).unwrap();
        prop_assert!(s.energy_violation() <= 1e-9);
    }
}
